//! Minimal static SVG drawing: panels with linear axes, marks and legends.

use std::fmt::Write;

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];
const DASHES: [&str; 4] = ["", "6,3", "2,2", "8,3,2,3"];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

pub fn dash(i: usize) -> &'static str {
    DASHES[(i / PALETTE.len()) % DASHES.len()]
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Linear map from a data interval to a pixel interval.
#[derive(Debug, Clone, Copy)]
pub struct Scale {
    d0: f64,
    d1: f64,
    r0: f64,
    r1: f64,
}

impl Scale {
    /// Pads degenerate domains so constant data still gets a visible axis.
    pub fn new(lo: f64, hi: f64, r0: f64, r1: f64) -> Self {
        let (lo, hi) = if !(lo.is_finite() && hi.is_finite()) {
            (0.0, 1.0)
        } else if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            (lo - pad, hi + pad)
        } else {
            let pad = (hi - lo) * 0.05;
            (lo - pad, hi + pad)
        };
        Scale {
            d0: lo,
            d1: hi,
            r0,
            r1,
        }
    }

    pub fn map(&self, x: f64) -> f64 {
        self.r0 + (x - self.d0) / (self.d1 - self.d0) * (self.r1 - self.r0)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.d0, self.d1)
    }
}

/// Roughly `n` round tick values covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi.is_nan() || lo.is_nan() || hi <= lo || n == 0 {
        return vec![lo];
    }
    let raw = (hi - lo) / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|i| i as f64 * step).collect()
}

fn tick_label(x: f64) -> String {
    let s = format!("{:.6}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

pub struct Svg {
    buf: String,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        let mut buf = String::new();
        let _ = writeln!(
            buf,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">"
        );
        let _ = writeln!(
            buf,
            "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>"
        );
        Svg { buf }
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.buf,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{stroke}\"/>"
        );
    }

    /// A line mark carrying its data values.
    pub fn data_line(
        &mut self,
        p: (f64, f64),
        q: (f64, f64),
        stroke: &str,
        class: &str,
        data: &str,
    ) {
        let _ = writeln!(
            self.buf,
            "<line class=\"{class}\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{stroke}\" stroke-width=\"1.5\" data-v=\"{}\"/>",
            p.0, p.1, q.0, q.1, esc(data)
        );
    }

    #[allow(clippy::too_many_arguments)]
    pub fn rect(
        &mut self,
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        fill: &str,
        stroke: &str,
        class: &str,
        data: &str,
    ) {
        let _ = writeln!(
            self.buf,
            "<rect class=\"{class}\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\" fill-opacity=\"0.35\" stroke=\"{stroke}\" data-v=\"{}\"/>",
            w.max(0.0),
            h.max(0.0),
            esc(data)
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str, class: &str, data: &str) {
        let _ = writeln!(
            self.buf,
            "<circle class=\"{class}\" cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r}\" fill=\"{fill}\" data-v=\"{}\"/>",
            esc(data)
        );
    }

    pub fn polyline(
        &mut self,
        points: &[(f64, f64)],
        stroke: &str,
        dash: &str,
        class: &str,
        data: &str,
    ) {
        let pts: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect();
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{dash}\"")
        };
        let _ = writeln!(
            self.buf,
            "<polyline class=\"{class}\" points=\"{}\" fill=\"none\" stroke=\"{stroke}\"{dash_attr} stroke-width=\"1.2\" data-v=\"{}\"/>",
            pts.join(" "),
            esc(data)
        );
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: f64) {
        let _ = writeln!(
            self.buf,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" font-size=\"{size}\">{}</text>",
            esc(s)
        );
    }

    pub fn vtext(&mut self, x: f64, y: f64, s: &str, size: f64) {
        let _ = writeln!(
            self.buf,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"middle\" font-size=\"{size}\" transform=\"rotate(-90 {x:.2} {y:.2})\">{}</text>",
            esc(s)
        );
    }

    pub fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
}

/// A plotting area with its scales.
pub struct Panel {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub xs: Scale,
    pub ys: Scale,
}

impl Panel {
    pub fn new(x: f64, y: f64, w: f64, h: f64, xdom: (f64, f64), ydom: (f64, f64)) -> Self {
        Panel {
            x,
            y,
            w,
            h,
            xs: Scale::new(xdom.0, xdom.1, x, x + w),
            ys: Scale::new(ydom.0, ydom.1, y + h, y),
        }
    }

    pub fn px(&self, x: f64) -> f64 {
        self.xs.map(x)
    }

    pub fn py(&self, y: f64) -> f64 {
        self.ys.map(y)
    }

    /// Frame, y ticks, optional numeric x ticks, title and axis labels.
    pub fn axes(&self, svg: &mut Svg, title: &str, xlabel: &str, ylabel: &str, numeric_x: bool) {
        let (x0, y0, x1, y1) = (self.x, self.y + self.h, self.x + self.w, self.y);
        svg.line(x0, y0, x1, y0, "black");
        svg.line(x0, y0, x0, y1, "black");
        let (lo, hi) = self.ys.domain();
        for t in nice_ticks(lo, hi, 5) {
            let py = self.py(t);
            svg.line(x0 - 4.0, py, x0, py, "black");
            svg.text(x0 - 6.0, py + 3.0, &tick_label(t), "end", 10.0);
        }
        if numeric_x {
            let (lo, hi) = self.xs.domain();
            for t in nice_ticks(lo, hi, 6) {
                let px = self.px(t);
                svg.line(px, y0, px, y0 + 4.0, "black");
                svg.text(px, y0 + 15.0, &tick_label(t), "middle", 10.0);
            }
        }
        svg.text((x0 + x1) / 2.0, y1 - 8.0, title, "middle", 12.0);
        svg.text((x0 + x1) / 2.0, y0 + 32.0, xlabel, "middle", 11.0);
        svg.vtext(x0 - 42.0, (y0 + y1) / 2.0, ylabel, 11.0);
    }
}

/// Legend entries drawn as colored line samples.
pub fn legend(svg: &mut Svg, x: f64, y: f64, labels: &[String]) {
    for (i, l) in labels.iter().enumerate() {
        let yy = y + i as f64 * 16.0;
        svg.line(x, yy, x + 18.0, yy, color(i));
        svg.line(x, yy + 1.0, x + 18.0, yy + 1.0, color(i));
        svg.text(x + 24.0, yy + 4.0, l, "start", 11.0);
    }
}
