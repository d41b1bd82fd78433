//! Plot data (long-format CSV) and static SVG charts rendered from that CSV.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::component::{quantile, AggregatorSpec, ComponentId, EvalsBatch, Model};
use crate::error::{Error, Result};
use crate::report::records::exact;
use crate::report::svg::{color, dash, legend, Panel, Svg};
use crate::simulation::{Selector, Simulation};

/// A rendered plot: its data and the SVG drawn from exactly that data.
#[derive(Debug, Clone)]
pub struct Plot {
    pub csv: String,
    pub svg: String,
    pub warnings: Vec<String>,
}

impl Plot {
    /// Writes `<stem>.csv` and `<stem>.svg` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv = dir.join(format!("{stem}.csv"));
        let svg = dir.join(format!("{stem}.svg"));
        fs::write(&csv, &self.csv).map_err(|e| Error::io(&csv, e))?;
        fs::write(&svg, &self.svg).map_err(|e| Error::io(&svg, e))?;
        Ok((csv, svg))
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

fn from_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

fn metric_id(batches: &[EvalsBatch], metric: &str) -> Result<ComponentId> {
    batches
        .iter()
        .find_map(|b| b.metric(metric).map(|(id, _)| id.clone()))
        .ok_or_else(|| Error::NotComputed {
            what: format!("metric {metric}"),
            stage: "evaluate",
            path: PathBuf::new(),
        })
}

fn methods_of(batches: &[EvalsBatch]) -> Vec<ComponentId> {
    let mut out: Vec<ComponentId> = Vec::new();
    for b in batches {
        if !out.contains(&b.method) {
            out.push(b.method.clone());
        }
    }
    out
}

fn push_unique(v: &mut Vec<String>, s: &str) {
    if !v.iter().any(|x| x == s) {
        v.push(s.to_string());
    }
}

// ---- box plots ----

/// Tukey box statistics: hinges are linear-interpolation quartiles, whiskers
/// reach the most extreme values within 1.5 IQR of the hinges.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub n: usize,
    pub lower_whisker: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
}

pub fn box_stats(values: &[f64]) -> BoxStats {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75));
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = s
        .iter()
        .copied()
        .filter(|x| (lo..=hi).contains(x))
        .collect();
    BoxStats {
        n: s.len(),
        lower_whisker: inside.first().copied().unwrap_or(q1),
        q1,
        median,
        q3,
        upper_whisker: inside.last().copied().unwrap_or(q3),
        outliers: s
            .iter()
            .copied()
            .filter(|x| !(lo..=hi).contains(x))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRow {
    pub model_name: String,
    pub model_label: String,
    pub method: String,
    pub method_label: String,
    pub metric_label: String,
    pub stat: String,
    pub value: f64,
}

pub fn box_rows(models: &[Model], batches: &[EvalsBatch], metric: &str) -> Result<Vec<BoxRow>> {
    let id = metric_id(batches, metric)?;
    let mut rows = Vec::new();
    for m in models {
        for method in methods_of(batches) {
            let Some(values) = super::table::cell_values(batches, m.name(), method.name(), metric)?
            else {
                continue;
            };
            let st = box_stats(&values);
            let row = |stat: &str, value: f64| BoxRow {
                model_name: m.name().into(),
                model_label: m.label().into(),
                method: method.name().into(),
                method_label: method.label().into(),
                metric_label: id.label().into(),
                stat: stat.into(),
                value,
            };
            rows.push(row("n", st.n as f64));
            for (name, v) in [
                ("lower_whisker", st.lower_whisker),
                ("q1", st.q1),
                ("median", st.median),
                ("q3", st.q3),
                ("upper_whisker", st.upper_whisker),
            ] {
                rows.push(row(name, v));
            }
            rows.extend(st.outliers.iter().map(|&o| row("outlier", o)));
        }
    }
    Ok(rows)
}

/// One facet per model; within a facet, one box per method.
pub fn render_box_svg(csv: &str) -> Result<String> {
    let rows: Vec<BoxRow> = from_csv(csv)?;
    let mut facets: Vec<String> = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    for r in &rows {
        push_unique(&mut facets, &r.model_name);
        push_unique(&mut methods, &r.method);
    }
    let ncol = facets.len().clamp(1, 3);
    let nrow = facets.len().div_ceil(ncol).max(1);
    let (pw, ph) = (260.0, 200.0);
    let mut svg = Svg::new(
        ncol as f64 * (pw + 80.0) + 20.0,
        nrow as f64 * (ph + 90.0) + 20.0,
    );
    let metric_label = rows
        .first()
        .map(|r| r.metric_label.clone())
        .unwrap_or_default();
    for (fi, facet) in facets.iter().enumerate() {
        let fr: Vec<&BoxRow> = rows
            .iter()
            .filter(|r| &r.model_name == facet && r.stat != "n")
            .collect();
        let lo = fr.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
        let hi = fr.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
        let (cx, cy) = (
            (fi % ncol) as f64 * (pw + 80.0) + 70.0,
            (fi / ncol) as f64 * (ph + 90.0) + 30.0,
        );
        let panel = Panel::new(cx, cy, pw, ph, (0.0, 1.0), (lo, hi));
        let title = fr
            .first()
            .map(|r| r.model_label.clone())
            .unwrap_or_default();
        panel.axes(&mut svg, &title, "", &metric_label, false);
        let slot = pw / methods.len() as f64;
        for (mi, method) in methods.iter().enumerate() {
            let get = |stat: &str| {
                fr.iter()
                    .find(|r| &r.method == method && r.stat == stat)
                    .map(|r| r.value)
            };
            let (Some(lw), Some(q1), Some(md), Some(q3), Some(uw)) = (
                get("lower_whisker"),
                get("q1"),
                get("median"),
                get("q3"),
                get("upper_whisker"),
            ) else {
                continue;
            };
            let x = cx + slot * (mi as f64 + 0.5);
            let half = slot * 0.3;
            let c = color(mi);
            let data = |v: f64| exact(v);
            svg.rect(
                x - half,
                panel.py(q3),
                2.0 * half,
                panel.py(q1) - panel.py(q3),
                c,
                c,
                "box",
                &format!("{},{}", data(q1), data(q3)),
            );
            svg.data_line(
                (x - half, panel.py(md)),
                (x + half, panel.py(md)),
                "black",
                "median",
                &data(md),
            );
            svg.data_line(
                (x, panel.py(q3)),
                (x, panel.py(uw)),
                c,
                "whisker",
                &data(uw),
            );
            svg.data_line(
                (x, panel.py(q1)),
                (x, panel.py(lw)),
                c,
                "whisker",
                &data(lw),
            );
            for o in fr
                .iter()
                .filter(|r| &r.method == method && r.stat == "outlier")
            {
                svg.circle(x, panel.py(o.value), 2.5, c, "outlier", &data(o.value));
            }
            let label = fr
                .iter()
                .find(|r| &r.method == method)
                .map(|r| r.method_label.as_str())
                .unwrap_or("");
            svg.text(x, cy + ph + 15.0, label, "middle", 10.0);
        }
    }
    Ok(svg.finish())
}

/// Side-by-side box plots of a scalar metric for each method, one facet per model.
pub fn plot_eval(sim: &Simulation, metric: &str) -> Result<Plot> {
    let (models, evals) = load(sim)?;
    let csv = to_csv(&box_rows(&models, &evals, metric)?)?;
    let svg = render_box_svg(&csv)?;
    Ok(Plot {
        csv,
        svg,
        warnings: vec![],
    })
}

fn load(sim: &Simulation) -> Result<(Vec<Model>, Vec<EvalsBatch>)> {
    let evals = sim.get_evals(&Selector::all())?;
    let models = sim
        .get_models(&Selector::all())?
        .into_iter()
        .filter(|m| evals.iter().any(|b| b.model_name == m.name()))
        .collect();
    Ok((models, evals))
}

// ---- metric versus metric curves ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub model_name: String,
    pub model_label: String,
    pub method: String,
    pub method_label: String,
    pub draw: String,
    pub point: usize,
    pub x_label: String,
    pub y_label: String,
    pub x: f64,
    pub y: f64,
}

pub fn curve_rows(
    models: &[Model],
    batches: &[EvalsBatch],
    metric_x: &str,
    metric_y: &str,
) -> Result<Vec<CurveRow>> {
    let xid = metric_id(batches, metric_x)?;
    let yid = metric_id(batches, metric_y)?;
    let mut rows = Vec::new();
    for m in models {
        for b in batches.iter().filter(|b| b.model_name == m.name()) {
            let (Some((_, xs)), Some((_, ys))) = (b.metric(metric_x), b.metric(metric_y)) else {
                return Err(Error::NotComputed {
                    what: format!(
                        "metrics {metric_x} and {metric_y} for method {} on {}",
                        b.method.name(),
                        m.name()
                    ),
                    stage: "evaluate",
                    path: PathBuf::new(),
                });
            };
            for (j, (xv, yv)) in xs.iter().zip(ys).enumerate() {
                let (xv, yv): (&[f64], &[f64]) = (xv.as_slice(), yv.as_slice());
                let draw = crate::component::draw_id(b.index, j);
                if xv.len() != yv.len() {
                    return Err(Error::InvalidArgument(format!(
                        "{metric_x} has length {} but {metric_y} has length {} for method {} on {}, draw {draw}",
                        xv.len(),
                        yv.len(),
                        b.method.name(),
                        m.name()
                    )));
                }
                for (i, (x, y)) in xv.iter().zip(yv).enumerate() {
                    rows.push(CurveRow {
                        model_name: m.name().into(),
                        model_label: m.label().into(),
                        method: b.method.name().into(),
                        method_label: b.method.label().into(),
                        draw: draw.clone(),
                        point: i + 1,
                        x_label: xid.label().into(),
                        y_label: yid.label().into(),
                        x: *x,
                        y: *y,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn render_curves_svg(csv: &str) -> Result<String> {
    let rows: Vec<CurveRow> = from_csv(csv)?;
    let mut facets: Vec<String> = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    let mut method_labels: Vec<String> = Vec::new();
    for r in &rows {
        push_unique(&mut facets, &r.model_name);
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
            method_labels.push(r.method_label.clone());
        }
    }
    let ncol = facets.len().clamp(1, 2);
    let nrow = facets.len().div_ceil(ncol).max(1);
    let (pw, ph) = (320.0, 220.0);
    let width = ncol as f64 * (pw + 80.0) + 180.0;
    let mut svg = Svg::new(width, nrow as f64 * (ph + 90.0) + 20.0);
    for (fi, facet) in facets.iter().enumerate() {
        let fr: Vec<&CurveRow> = rows.iter().filter(|r| &r.model_name == facet).collect();
        let fold = |f: fn(f64, f64) -> f64, init: f64, g: fn(&&CurveRow) -> f64| {
            fr.iter().map(g).fold(init, f)
        };
        let xdom = (
            fold(f64::min, f64::INFINITY, |r| r.x),
            fold(f64::max, f64::NEG_INFINITY, |r| r.x),
        );
        let ydom = (
            fold(f64::min, f64::INFINITY, |r| r.y),
            fold(f64::max, f64::NEG_INFINITY, |r| r.y),
        );
        let (cx, cy) = (
            (fi % ncol) as f64 * (pw + 80.0) + 70.0,
            (fi / ncol) as f64 * (ph + 90.0) + 30.0,
        );
        let panel = Panel::new(cx, cy, pw, ph, xdom, ydom);
        let first = fr[0];
        panel.axes(
            &mut svg,
            &first.model_label,
            &first.x_label,
            &first.y_label,
            true,
        );
        let mut keys: Vec<(String, String)> = Vec::new();
        for r in &fr {
            let k = (r.method.clone(), r.draw.clone());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        for (method, draw) in keys {
            let mi = methods.iter().position(|m| *m == method).unwrap_or(0);
            let pts: Vec<&&CurveRow> = fr
                .iter()
                .filter(|r| r.method == method && r.draw == draw)
                .collect();
            let px: Vec<(f64, f64)> = pts.iter().map(|r| (panel.px(r.x), panel.py(r.y))).collect();
            let data: Vec<String> = pts
                .iter()
                .map(|r| format!("{} {}", exact(r.x), exact(r.y)))
                .collect();
            svg.polyline(&px, color(mi), dash(mi), "curve", &data.join(";"));
        }
    }
    legend(&mut svg, width - 170.0, 40.0, &method_labels);
    Ok(svg.finish())
}

/// Plots `metric_y` against `metric_x` along each draw's vector metrics, one
/// line per (method, draw).
pub fn plot_evals(sim: &Simulation, metric_x: &str, metric_y: &str) -> Result<Plot> {
    let (models, evals) = load(sim)?;
    let csv = to_csv(&curve_rows(&models, &evals, metric_x, metric_y)?)?;
    let svg = render_curves_svg(&csv)?;
    Ok(Plot {
        csv,
        svg,
        warnings: vec![],
    })
}

// ---- metric versus a varied model parameter ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalByKind {
    /// Center with error bars of half-width `spread` (default mean and SE).
    Aggregate,
    /// Every draw's value.
    Raw,
}

#[derive(Debug, Clone)]
pub struct EvalByOptions {
    pub varying: String,
    pub kind: EvalByKind,
    pub center: AggregatorSpec,
    pub spread: AggregatorSpec,
    pub title: Option<String>,
}

impl EvalByOptions {
    pub fn new(varying: &str) -> Self {
        EvalByOptions {
            varying: varying.into(),
            kind: EvalByKind::Aggregate,
            center: AggregatorSpec::mean(),
            spread: AggregatorSpec::standard_error(),
            title: None,
        }
    }

    pub fn raw(mut self) -> Self {
        self.kind = EvalByKind::Raw;
        self
    }

    pub fn title(mut self, title: &str) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn aggregators(mut self, center: AggregatorSpec, spread: AggregatorSpec) -> Self {
        self.center = center;
        self.spread = spread;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalByRow {
    pub method: String,
    pub method_label: String,
    pub varying: String,
    pub metric_label: String,
    pub title: String,
    pub x: f64,
    /// Aggregate rows: center; raw rows: the draw's value.
    pub y: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub n: usize,
    pub draw: String,
}

pub fn eval_by_rows(
    models: &[Model],
    batches: &[EvalsBatch],
    metric: &str,
    opts: &EvalByOptions,
    title: &str,
) -> Result<(Vec<EvalByRow>, Vec<String>)> {
    let id = metric_id(batches, metric)?;
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    let mut xs: Vec<(f64, &Model)> = models
        .iter()
        .map(|m| {
            m.scalar(&opts.varying)
                .and_then(|v| v.as_f64())
                .map(|x| (x, m))
                .ok_or_else(|| {
                    Error::Type(format!(
                        "model {} has no numeric parameter {:?}",
                        m.name(),
                        opts.varying
                    ))
                })
        })
        .collect::<Result<_>>()?;
    xs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for method in methods_of(batches) {
        for &(x, m) in &xs {
            let Some(values) = super::table::cell_values(batches, m.name(), method.name(), metric)?
            else {
                continue;
            };
            let base = EvalByRow {
                method: method.name().into(),
                method_label: method.label().into(),
                varying: opts.varying.clone(),
                metric_label: id.label().into(),
                title: title.into(),
                x,
                y: 0.0,
                lower: None,
                upper: None,
                n: values.len(),
                draw: String::new(),
            };
            match opts.kind {
                EvalByKind::Raw => {
                    let draws = draw_ids(batches, m.name(), method.name(), metric);
                    for (v, d) in values.iter().zip(draws) {
                        rows.push(EvalByRow {
                            y: *v,
                            draw: d,
                            n: 1,
                            ..base.clone()
                        });
                    }
                }
                EvalByKind::Aggregate => {
                    if values.len() < 2 {
                        let w = format!(
                            "{} at {} = {x}: only {} draw, error bar width set to 0",
                            method.name(),
                            opts.varying,
                            values.len()
                        );
                        log::warn!("{w}");
                        warnings.push(w);
                    }
                    let c = opts.center.aggregate(&values);
                    let s = if values.len() < 2 {
                        0.0
                    } else {
                        opts.spread.aggregate(&values)
                    };
                    rows.push(EvalByRow {
                        y: c,
                        lower: Some(c - s),
                        upper: Some(c + s),
                        ..base
                    });
                }
            }
        }
    }
    Ok((rows, warnings))
}

fn draw_ids(batches: &[EvalsBatch], model: &str, method: &str, metric: &str) -> Vec<String> {
    batches
        .iter()
        .filter(|b| {
            b.model_name == model && b.method.name() == method && b.metric(metric).is_some()
        })
        .flat_map(|b| (0..b.nsim()).map(move |j| crate::component::draw_id(b.index, j)))
        .collect()
}

pub fn render_eval_by_svg(csv: &str) -> Result<String> {
    let rows: Vec<EvalByRow> = from_csv(csv)?;
    let mut methods: Vec<String> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for r in &rows {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
            labels.push(r.method_label.clone());
        }
    }
    let lo = rows
        .iter()
        .map(|r| r.lower.unwrap_or(r.y))
        .fold(f64::INFINITY, f64::min);
    let hi = rows
        .iter()
        .map(|r| r.upper.unwrap_or(r.y))
        .fold(f64::NEG_INFINITY, f64::max);
    let xlo = rows.iter().map(|r| r.x).fold(f64::INFINITY, f64::min);
    let xhi = rows.iter().map(|r| r.x).fold(f64::NEG_INFINITY, f64::max);
    let (pw, ph) = (480.0, 300.0);
    let mut svg = Svg::new(pw + 280.0, ph + 100.0);
    let panel = Panel::new(70.0, 40.0, pw, ph, (xlo, xhi), (lo, hi));
    if let Some(first) = rows.first() {
        panel.axes(
            &mut svg,
            &first.title,
            &first.varying,
            &first.metric_label,
            true,
        );
    }
    for (mi, method) in methods.iter().enumerate() {
        let mr: Vec<&EvalByRow> = rows.iter().filter(|r| &r.method == method).collect();
        let c = color(mi);
        let aggregate = mr.iter().all(|r| r.lower.is_some());
        if aggregate {
            let pts: Vec<(f64, f64)> = mr.iter().map(|r| (panel.px(r.x), panel.py(r.y))).collect();
            let data: Vec<String> = mr
                .iter()
                .map(|r| format!("{} {}", exact(r.x), exact(r.y)))
                .collect();
            svg.polyline(&pts, c, dash(mi), "center", &data.join(";"));
            for r in &mr {
                let (l, u) = (r.lower.unwrap_or(r.y), r.upper.unwrap_or(r.y));
                let px = panel.px(r.x);
                svg.data_line(
                    (px, panel.py(l)),
                    (px, panel.py(u)),
                    c,
                    "errorbar",
                    &format!("{} {}", exact(l), exact(u)),
                );
                svg.circle(px, panel.py(r.y), 2.5, c, "point", &exact(r.y));
            }
        } else {
            for r in &mr {
                svg.circle(panel.px(r.x), panel.py(r.y), 2.0, c, "raw", &exact(r.y));
            }
        }
    }
    legend(&mut svg, pw + 100.0, 60.0, &labels);
    Ok(svg.finish())
}

/// Plots a metric against a varied model parameter, one line per method.
pub fn plot_eval_by(sim: &Simulation, metric: &str, opts: &EvalByOptions) -> Result<Plot> {
    let (models, evals) = load(sim)?;
    let title = opts
        .title
        .clone()
        .unwrap_or_else(|| sim.label().to_string());
    let (rows, warnings) = eval_by_rows(&models, &evals, metric, opts, &title)?;
    let csv = to_csv(&rows)?;
    let svg = render_eval_by_svg(&csv)?;
    Ok(Plot { csv, svg, warnings })
}

/// Values of every `data-v` attribute of the given SVG class, in document order.
pub fn svg_data(svg: &str, class: &str) -> Vec<String> {
    let marker = format!("class=\"{class}\"");
    svg.lines()
        .filter(|l| l.contains(&marker))
        .filter_map(|l| {
            let start = l.find("data-v=\"")? + 8;
            let end = l[start..].find('"')? + start;
            Some(l[start..end].to_string())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::component::EvalValue;
    use crate::params;

    #[test]
    fn tukey_box_statistics() {
        let s = box_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
        assert_eq!((s.lower_whisker, s.upper_whisker), (1.0, 4.0));
        assert_eq!(s.outliers, vec![100.0]);
        let c = box_stats(&[0.5; 4]);
        assert_eq!(
            (c.lower_whisker, c.median, c.upper_whisker),
            (0.5, 0.5, 0.5)
        );
        assert!(c.outliers.is_empty());
    }

    fn model(k: i64) -> Model {
        Model {
            id: ComponentId::generated(format!("m/k_{k}"), format!("k = {k}")).unwrap(),
            params: params! {"k" => k},
            args: params! {"k" => k},
            vary_along: vec!["k".into()],
        }
    }

    fn batch(k: i64, method: &str, metrics: &[(&str, Vec<EvalValue>)]) -> EvalsBatch {
        EvalsBatch {
            model_name: format!("m/k_{k}"),
            index: 1,
            method: ComponentId::new(method, method.to_uppercase()).unwrap(),
            metrics: metrics
                .iter()
                .map(|(n, _)| ComponentId::new(*n, n.to_uppercase()).unwrap())
                .collect(),
            values: metrics.iter().map(|(_, v)| v.clone()).collect(),
        }
    }

    #[test]
    fn box_csv_and_svg_agree() {
        let vals = |xs: &[f64]| xs.iter().map(|&x| EvalValue::Scalar(x)).collect::<Vec<_>>();
        let batches = [
            batch(1, "a", &[("e", vals(&[1.0, 2.0, 3.0, 4.0, 100.0]))]),
            batch(1, "b", &[("e", vals(&[0.1, 0.2, 0.3, 0.4, 0.5]))]),
        ];
        let rows = box_rows(&[model(1)], &batches, "e").unwrap();
        let csv = to_csv(&rows).unwrap();
        let back: Vec<BoxRow> = from_csv(&csv).unwrap();
        assert_eq!(back, rows);
        let svg = render_box_svg(&csv).unwrap();
        let medians = svg_data(&svg, "median");
        assert_eq!(medians, vec!["3.0", "0.3"]);
        assert_eq!(svg_data(&svg, "outlier"), vec!["100.0"]);
        assert!(
            svg.contains(">A</text>") && svg.contains(">k = 1</text>") && svg.contains(">E</text>")
        );
    }

    #[test]
    fn curves_follow_the_records() {
        let v = |xs: &[f64]| EvalValue::Vector(xs.to_vec());
        let b = batch(
            1,
            "a",
            &[
                ("df", vec![v(&[0.0, 1.0, 2.0])]),
                ("err", vec![v(&[3.0, 2.0, 1.5])]),
            ],
        );
        let rows = curve_rows(&[model(1)], std::slice::from_ref(&b), "df", "err").unwrap();
        assert_eq!(rows.len(), 3);
        let svg = render_curves_svg(&to_csv(&rows).unwrap()).unwrap();
        assert_eq!(svg_data(&svg, "curve"), vec!["0.0 3.0;1.0 2.0;2.0 1.5"]);
        let bad = batch(
            1,
            "a",
            &[("df", vec![v(&[0.0, 1.0])]), ("err", vec![v(&[3.0])])],
        );
        assert!(curve_rows(&[model(1)], &[bad], "df", "err").is_err());
    }

    #[test]
    fn eval_by_means_and_single_draw_warning() {
        let vals = |xs: &[f64]| xs.iter().map(|&x| EvalValue::Scalar(x)).collect::<Vec<_>>();
        let batches = [
            batch(2, "a", &[("e", vals(&[1.0, 3.0]))]),
            batch(1, "a", &[("e", vals(&[5.0]))]),
        ];
        let (rows, warnings) = eval_by_rows(
            &[model(1), model(2)],
            &batches,
            "e",
            &EvalByOptions::new("k"),
            "T",
        )
        .unwrap();
        assert_eq!(rows.iter().map(|r| r.x).collect::<Vec<_>>(), [1.0, 2.0]);
        assert_eq!(
            (rows[0].y, rows[0].lower, rows[0].upper),
            (5.0, Some(5.0), Some(5.0))
        );
        assert_eq!(
            (rows[1].y, rows[1].lower, rows[1].upper),
            (2.0, Some(1.0), Some(3.0))
        );
        assert_eq!(warnings.len(), 1);
        let (raw, _) = eval_by_rows(
            &[model(1), model(2)],
            &batches,
            "e",
            &EvalByOptions::new("k").raw(),
            "T",
        )
        .unwrap();
        assert_eq!(raw.len(), 3);
        assert_eq!(raw[1].draw, "r1.1");
    }
}
