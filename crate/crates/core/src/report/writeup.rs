//! Markdown reports built from saved results, with source provenance.
//!
//! `run` records a digest of every study source next to the simulation
//! record. A report compares those digests with the sources of the current
//! build and prints a warning block when they differ. It never reruns the
//! pipeline.
//!
//! Template directives, each on its own line:
//!
//! ```text
//! {{provenance}}
//! {{table <metric> [format=markdown] [nsmall=2] [digits=0] [where="k > 30"]}}
//! {{plot eval <metric> [where=...]}}
//! {{plot evals <metric_x> <metric_y> [where=...]}}
//! {{plot eval_by <metric> varying=<param> [type=raw] [title="..."] [where=...]}}
//! ```
//!
//! and inline `{{sim.name}}`, `{{sim.label}}`. Any directive accepts
//! `sim=<name>` to draw on another simulation in the same directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::sha256_hex;
use crate::error::{Error, Result};
use crate::report::plot::{plot_eval, plot_eval_by, plot_evals, EvalByOptions};
use crate::report::table::{tabulate_eval, TableFormat, TableSpec};
use crate::simulation::{load_simulation, Selector, Simulation};

pub const DEFAULT_TEMPLATE: &str = "# {{sim.label}}\n\n{{provenance}}\n";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub simulation: String,
    pub build: String,
    /// File name to SHA-256 of its content.
    pub sources: BTreeMap<String, String>,
}

impl Provenance {
    pub fn of(sim_name: &str, sources: &[(String, String)]) -> Self {
        Provenance {
            simulation: sim_name.into(),
            build: format!("simstudy {}", env!("CARGO_PKG_VERSION")),
            sources: sources
                .iter()
                .map(|(n, c)| (n.clone(), sha256_hex(c.as_bytes())))
                .collect(),
        }
    }

    /// Names of sources that were added, removed or changed since `self`.
    pub fn changed(&self, current: &Provenance) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for (n, d) in &current.sources {
            if self.sources.get(n) != Some(d) {
                out.push(n.clone());
            }
        }
        for n in self.sources.keys() {
            if !current.sources.contains_key(n) {
                out.push(n.clone());
            }
        }
        out.sort();
        out
    }
}

pub fn provenance_path(dir: &Path, sim_name: &str) -> PathBuf {
    dir.join(format!("sim_{sim_name}.provenance.json"))
}

/// Records the digests of the sources the simulation was computed with.
pub fn record_provenance(sim: &Simulation, sources: &[(String, String)]) -> Result<()> {
    let p = Provenance::of(sim.name(), sources);
    let path = provenance_path(sim.dir(), sim.name());
    let mut json = serde_json::to_string_pretty(&p)?;
    json.push('\n');
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

pub fn read_provenance(dir: &Path, sim_name: &str) -> Result<Option<Provenance>> {
    let path = provenance_path(dir, sim_name);
    match fs::read_to_string(&path) {
        Ok(t) => Ok(Some(serde_json::from_str(&t)?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(&path, e)),
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub markdown: String,
    pub stale: bool,
    pub figures: Vec<PathBuf>,
}

/// Splits directive arguments on whitespace, keeping quoted values whole.
fn split_args(s: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for c in s.chars() {
        match c {
            '"' => quoted = !quoted,
            c if c.is_whitespace() && !quoted => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if quoted {
        return Err(Error::Report(format!("unbalanced quote in {s:?}")));
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

struct Directive {
    positional: Vec<String>,
    options: BTreeMap<String, String>,
}

fn parse_directive(body: &str) -> Result<Directive> {
    let mut d = Directive {
        positional: vec![],
        options: BTreeMap::new(),
    };
    for a in split_args(body)? {
        match a.split_once('=') {
            Some((k, v)) => {
                d.options.insert(k.into(), v.into());
            }
            None => d.positional.push(a),
        }
    }
    Ok(d)
}

fn num_opt(d: &Directive, key: &str, default: usize) -> Result<usize> {
    d.options.get(key).map_or(Ok(default), |v| {
        v.parse()
            .map_err(|_| Error::Report(format!("{key}={v} is not a number")))
    })
}

fn stale_block(changed: &[String]) -> String {
    format!(
        "> **Warning: stale results.** These sources changed since the results were computed: {}. \
         The report shows the saved results; rerun the study to refresh them.\n",
        changed.join(", ")
    )
}

/// Renders `template` using saved results only. Figures are written under
/// `out_dir/figures`.
pub fn generate_report(
    sim: &Simulation,
    template: &str,
    sources: &[(String, String)],
    out_dir: &Path,
) -> Result<Report> {
    let current = Provenance::of(sim.name(), sources);
    let recorded = read_provenance(sim.dir(), sim.name())?;
    let changed = match &recorded {
        Some(r) => r.changed(&current),
        None => vec!["(no provenance recorded)".to_string()],
    };
    let stale = !changed.is_empty();
    let mut report = Report {
        markdown: String::new(),
        stale,
        figures: vec![],
    };
    let mut nfig = 0;
    for line in template.lines() {
        let trimmed = line.trim();
        let body = trimmed
            .strip_prefix("{{")
            .and_then(|r| r.strip_suffix("}}"))
            .map(str::trim)
            .filter(|b| !b.starts_with("sim."));
        let Some(body) = body else {
            let text = line
                .replace("{{sim.name}}", sim.name())
                .replace("{{sim.label}}", sim.label());
            report.markdown.push_str(&text);
            report.markdown.push('\n');
            continue;
        };
        let d = parse_directive(body)?;
        let base = match d.options.get("sim") {
            Some(name) => load_simulation(name, Some(sim.dir()))?,
            None => sim.clone(),
        };
        let target = match d.options.get("where") {
            Some(p) => base.subset(&Selector::parse(p)?)?,
            None => base,
        };
        let pos = |i: usize| -> Result<&str> {
            d.positional.get(i).map(String::as_str).ok_or_else(|| {
                Error::Report(format!("directive {{{{{body}}}}} needs more arguments"))
            })
        };
        match pos(0)? {
            "provenance" => {
                if stale {
                    report.markdown.push_str(&stale_block(&changed));
                } else {
                    let digests: Vec<String> = current
                        .sources
                        .iter()
                        .map(|(n, h)| format!("{n} ({})", &h[..12]))
                        .collect();
                    report.markdown.push_str(&format!(
                        "Results computed by {} from sources: {}.\n",
                        current.build,
                        digests.join(", ")
                    ));
                }
            }
            "table" => {
                let format = d
                    .options
                    .get("format")
                    .map_or(Ok(TableFormat::Markdown), |f| f.parse())?;
                let spec = TableSpec::new(pos(1)?)
                    .format(format)
                    .numbers(num_opt(&d, "nsmall", 2)?, num_opt(&d, "digits", 0)?);
                report.markdown.push_str(&tabulate_eval(&target, &spec)?);
            }
            "plot" => {
                nfig += 1;
                let stem = format!("figure{nfig}");
                let plot = match pos(1)? {
                    "eval" => plot_eval(&target, pos(2)?)?,
                    "evals" => plot_evals(&target, pos(2)?, pos(3)?)?,
                    "eval_by" | "eval-by" => {
                        let varying = d.options.get("varying").ok_or_else(|| {
                            Error::Report("plot eval_by needs varying=<param>".into())
                        })?;
                        let mut opts = EvalByOptions::new(varying);
                        if d.options.get("type").map(String::as_str) == Some("raw") {
                            opts = opts.raw();
                        }
                        if let Some(t) = d.options.get("title") {
                            opts = opts.title(t);
                        }
                        plot_eval_by(&target, pos(2)?, &opts)?
                    }
                    other => return Err(Error::Report(format!("unknown plot kind {other:?}"))),
                };
                let (csv, svg) = plot.write(&out_dir.join("figures"), &stem)?;
                report.markdown.push_str(&format!(
                    "![{stem}](figures/{stem}.svg)\n\n[data](figures/{stem}.csv)\n"
                ));
                report.figures.push(csv);
                report.figures.push(svg);
            }
            other => return Err(Error::Report(format!("unknown directive {other:?}"))),
        }
    }
    Ok(report)
}

/// Generates the report and writes it to `out_dir/<sim name>.md`.
pub fn write_report(
    sim: &Simulation,
    template: &str,
    sources: &[(String, String)],
    out_dir: &Path,
) -> Result<(PathBuf, Report)> {
    let report = generate_report(sim, template, sources, out_dir)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join(format!("{}.md", sim.name()));
    fs::write(&path, &report.markdown).map_err(|e| Error::io(&path, e))?;
    Ok((path, report))
}
