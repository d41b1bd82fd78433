//! Tables of an aggregated metric: one row per model, one column per method.

use std::str::FromStr;

use crate::component::{AggregatorSpec, ComponentId, EvalsBatch, Model};
use crate::error::{Error, Result};
use crate::report::format::format_number;
use crate::simulation::{Selector, Simulation};
use crate::store::Ref;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Latex,
    Markdown,
    Html,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "latex" => Ok(TableFormat::Latex),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "html" => Ok(TableFormat::Html),
            _ => Err(Error::InvalidArgument(format!(
                "unknown table format {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableSpec {
    pub metric: String,
    pub center: AggregatorSpec,
    pub spread: AggregatorSpec,
    pub format: TableFormat,
    pub nsmall: usize,
    pub digits: usize,
}

impl TableSpec {
    /// Mean (standard error) cells in latex, with two decimals.
    pub fn new(metric: &str) -> Self {
        TableSpec {
            metric: metric.to_string(),
            center: AggregatorSpec::mean(),
            spread: AggregatorSpec::standard_error(),
            format: TableFormat::Latex,
            nsmall: 2,
            digits: 0,
        }
    }

    pub fn format(mut self, format: TableFormat) -> Self {
        self.format = format;
        self
    }

    pub fn numbers(mut self, nsmall: usize, digits: usize) -> Self {
        self.nsmall = nsmall;
        self.digits = digits;
        self
    }
}

/// Aggregated values and their rendered cell text.
#[derive(Debug, Clone)]
pub struct EvalTable {
    pub metric: ComponentId,
    pub caption: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub center: Vec<Vec<f64>>,
    pub spread: Vec<Vec<f64>>,
    pub nsim: Vec<Vec<usize>>,
    pub cells: Vec<Vec<String>>,
}

/// Per-draw scalar values of `metric` for one (model, method) pair, in
/// chunk then draw order.
pub fn cell_values(
    batches: &[EvalsBatch],
    model: &str,
    method: &str,
    metric: &str,
) -> Result<Option<Vec<f64>>> {
    let mut values = Vec::new();
    let mut found = false;
    for b in batches
        .iter()
        .filter(|b| b.model_name == model && b.method.name() == method)
    {
        let Some((_, vs)) = b.metric(metric) else {
            continue;
        };
        found = true;
        for (j, v) in vs.iter().enumerate() {
            let x = v.as_scalar().ok_or_else(|| {
                Error::Type(format!(
                    "metric {metric} is a vector of length {} on {model}, {method}, draw {}; tables need a scalar metric",
                    v.as_slice().len(),
                    crate::component::draw_id(b.index, j)
                ))
            })?;
            values.push(x);
        }
    }
    Ok(found.then_some(values))
}

pub fn build_table(
    models: &[Model],
    batches: &[EvalsBatch],
    spec: &TableSpec,
) -> Result<EvalTable> {
    let metric = batches
        .iter()
        .find_map(|b| b.metric(&spec.metric).map(|(id, _)| id.clone()))
        .ok_or_else(|| Error::NotComputed {
            what: format!("metric {}", spec.metric),
            stage: "evaluate",
            path: batches
                .first()
                .map(|b| {
                    Ref::evals(
                        std::path::Path::new("."),
                        &b.model_name,
                        b.index,
                        b.method.name(),
                    )
                    .path()
                })
                .unwrap_or_default(),
        })?;
    let mut methods: Vec<&ComponentId> = Vec::new();
    for b in batches {
        if !methods.contains(&&b.method) {
            methods.push(&b.method);
        }
    }
    let mut t = EvalTable {
        metric: metric.clone(),
        caption: String::new(),
        row_labels: models.iter().map(|m| m.label().to_string()).collect(),
        col_labels: methods.iter().map(|m| m.label().to_string()).collect(),
        center: vec![],
        spread: vec![],
        nsim: vec![],
        cells: vec![],
    };
    for m in models {
        let (mut c, mut s, mut n, mut text) = (vec![], vec![], vec![], vec![]);
        for method in &methods {
            let values =
                cell_values(batches, m.name(), method.name(), &spec.metric)?.ok_or_else(|| {
                    Error::NotComputed {
                        what: format!(
                            "metric {} for method {} on {}",
                            spec.metric,
                            method.name(),
                            m.name()
                        ),
                        stage: "evaluate",
                        path: std::path::PathBuf::new(),
                    }
                })?;
            let center = spec.center.aggregate(&values);
            let spread = spec.spread.aggregate(&values);
            text.push(format!(
                "{} ({})",
                format_number(center, spec.nsmall, spec.digits),
                format_number(spread, spec.nsmall, spec.digits)
            ));
            c.push(center);
            s.push(spread);
            n.push(values.len());
        }
        t.center.push(c);
        t.spread.push(s);
        t.nsim.push(n);
        t.cells.push(text);
    }
    let counts: Vec<usize> = t.nsim.iter().flatten().copied().collect();
    let lo = counts.iter().min().copied().unwrap_or(0);
    let hi = counts.iter().max().copied().unwrap_or(0);
    let reps = if lo == hi {
        lo.to_string()
    } else {
        format!("{lo} to {hi}")
    };
    t.caption = format!(
        "A comparison of {} (averaged over {reps} replicates).",
        metric.label()
    );
    Ok(t)
}

fn latex_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' | '%' | '$' | '#' | '_' | '{' | '}' => {
                out.push('\\');
                out.push(c);
            }
            '\\' => out.push_str("\\textbackslash{}"),
            '~' => out.push_str("\\textasciitilde{}"),
            '^' => out.push_str("\\textasciicircum{}"),
            _ => out.push(c),
        }
    }
    out
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

impl EvalTable {
    pub fn render(&self, format: TableFormat) -> String {
        match format {
            TableFormat::Latex => self.latex(),
            TableFormat::Markdown => self.markdown(),
            TableFormat::Html => self.html(),
        }
    }

    fn latex(&self) -> String {
        let cols = std::iter::repeat_n("l", self.col_labels.len() + 1)
            .collect::<Vec<_>>()
            .join("|");
        let mut s = format!(
            "\\begin{{table}}\n\n\\caption{{{}}}\n\\centering\n\\begin{{tabular}}[t]{{{cols}}}\n\\hline\n ",
            latex_escape(&self.caption)
        );
        for l in &self.col_labels {
            s.push_str(&format!(" & {}", latex_escape(l)));
        }
        s.push_str("\\\\\n\\hline\n");
        for (label, row) in self.row_labels.iter().zip(&self.cells) {
            s.push_str(&latex_escape(label));
            for cell in row {
                s.push_str(&format!(" & {cell}"));
            }
            s.push_str("\\\\\n\\hline\n");
        }
        s.push_str("\\end{tabular}\n\\end{table}\n");
        s
    }

    fn markdown(&self) -> String {
        let mut s = format!("Table: {}\n\n|", md_escape(&self.caption));
        s.push_str(" |");
        for l in &self.col_labels {
            s.push_str(&format!(" {} |", md_escape(l)));
        }
        s.push_str("\n|:--|");
        for _ in &self.col_labels {
            s.push_str(":--|");
        }
        s.push('\n');
        for (label, row) in self.row_labels.iter().zip(&self.cells) {
            s.push_str(&format!("| {} |", md_escape(label)));
            for cell in row {
                s.push_str(&format!(" {cell} |"));
            }
            s.push('\n');
        }
        s
    }

    fn html(&self) -> String {
        let mut s = format!(
            "<table>\n<caption>{}</caption>\n<thead>\n<tr><th></th>",
            html_escape(&self.caption)
        );
        for l in &self.col_labels {
            s.push_str(&format!("<th>{}</th>", html_escape(l)));
        }
        s.push_str("</tr>\n</thead>\n<tbody>\n");
        for (label, row) in self.row_labels.iter().zip(&self.cells) {
            s.push_str(&format!("<tr><td>{}</td>", html_escape(label)));
            for cell in row {
                s.push_str(&format!("<td>{cell}</td>"));
            }
            s.push_str("</tr>\n");
        }
        s.push_str("</tbody>\n</table>\n");
        s
    }
}

/// Renders a table of `spec.metric` over the simulation's models and methods.
pub fn tabulate_eval(sim: &Simulation, spec: &TableSpec) -> Result<String> {
    let models = sim.get_models(&Selector::all())?;
    let evals = sim.get_evals(&Selector::all())?;
    if evals.is_empty() {
        return Err(Error::NotComputed {
            what: format!("metric {} of simulation {}", spec.metric, sim.name()),
            stage: "evaluate",
            path: sim.dir().to_path_buf(),
        });
    }
    let models: Vec<Model> = models
        .into_iter()
        .filter(|m| evals.iter().any(|b| b.model_name == m.name()))
        .collect();
    Ok(build_table(&models, &evals, spec)?.render(spec.format))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::component::EvalValue;
    use crate::params;

    fn model(k: i64) -> Model {
        Model {
            id: ComponentId::generated(format!("m/k_{k}"), format!("n = 200, p = 500, k = {k}"))
                .unwrap(),
            params: params! {"k" => k},
            args: params! {"k" => k},
            vary_along: vec!["k".into()],
        }
    }

    fn batch(k: i64, method: (&str, &str), values: &[f64]) -> EvalsBatch {
        EvalsBatch {
            model_name: format!("m/k_{k}"),
            index: 1,
            method: ComponentId::new(method.0, method.1).unwrap(),
            metrics: vec![ComponentId::new("sqr_err", "Mean squared error").unwrap()],
            values: vec![values.iter().map(|&x| EvalValue::Scalar(x)).collect()],
        }
    }

    #[test]
    fn zero_variance_cell() {
        let t = build_table(
            &[model(1)],
            &[batch(1, ("a", "A"), &[1.0; 5])],
            &TableSpec::new("sqr_err"),
        )
        .unwrap();
        assert_eq!(t.cells, vec![vec!["1.00 (0.00)".to_string()]]);
        assert_eq!(
            t.caption,
            "A comparison of Mean squared error (averaged over 5 replicates)."
        );
    }

    #[test]
    fn mean_and_standard_error() {
        let t = build_table(
            &[model(1)],
            &[batch(1, ("a", "A"), &[0.0, 2.0])],
            &TableSpec::new("sqr_err"),
        )
        .unwrap();
        assert_eq!(t.cells[0][0], "1.00 (1.00)");
    }

    #[test]
    fn study_layout_in_all_formats() {
        let models = [model(35), model(40)];
        let lasso = ("lasso_cv", "Lasso cross validated");
        let ridge = ("ridge_cv", "Ridge cross validated");
        let batches = [
            batch(35, lasso, &[0.041, 0.043, 0.039, 0.042, 0.040]),
            batch(35, ridge, &[0.05; 5]),
            batch(40, lasso, &[0.06; 5]),
            batch(40, ridge, &[0.061; 5]),
        ];
        let t = build_table(&models, &batches, &TableSpec::new("sqr_err")).unwrap();
        let latex = t.render(TableFormat::Latex);
        assert!(latex.contains("\\begin{tabular}[t]{l|l|l}"));
        assert!(latex.contains("  & Lasso cross validated & Ridge cross validated\\\\"));
        assert!(latex.contains("n = 200, p = 500, k = 35 & 0.04 (0.00) & 0.05 (0.00)\\\\\n\\hline"));
        assert!(latex.contains(
            "\\caption{A comparison of Mean squared error (averaged over 5 replicates).}"
        ));
        for f in [TableFormat::Markdown, TableFormat::Html] {
            let s = t.render(f);
            for row in &t.cells {
                for c in row {
                    assert!(s.contains(c.as_str()), "{f:?} lacks {c}");
                }
            }
        }
    }

    #[test]
    fn missing_metric_names_evaluate() {
        let err = build_table(
            &[model(1)],
            &[batch(1, ("a", "A"), &[1.0])],
            &TableSpec::new("df"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("evaluate"), "{err}");
    }

    #[test]
    fn vector_metric_is_rejected() {
        let mut b = batch(1, ("a", "A"), &[1.0]);
        b.values[0][0] = EvalValue::Vector(vec![1.0, 2.0]);
        assert!(matches!(
            build_table(&[model(1)], &[b], &TableSpec::new("sqr_err")),
            Err(Error::Type(_))
        ));
    }
}
