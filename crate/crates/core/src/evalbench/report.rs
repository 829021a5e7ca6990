use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::estimator::FusionConfig;

use super::metrics::{ErrorStats, MeanStd};
use super::FoldSplit;

pub const AGGREGATION_NOTE: &str =
    "per-procedure means first, then mean ± population std across procedures; \
quartile of frame i is ceil(4i/N); halftime error read at frame ceil(N/2)";

/// Per-frame errors of one procedure under one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureResult {
    pub id: String,
    pub ptype: u8,
    pub n: usize,
    pub fold: usize,
    pub abs: Vec<f64>,
    pub rel: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeBreakdown {
    pub ptype: u8,
    pub count: usize,
    pub abs: ErrorStats,
    pub rel: ErrorStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub name: String,
    /// Fusion configuration for trained methods (seed = eval seed; fold k
    /// trains with a seed derived from it and k).
    pub config: Option<FusionConfig>,
    pub abs: ErrorStats,
    pub rel: ErrorStats,
    /// Mean over each held-out fold's procedures of their mean relative
    /// error; `None` for an empty fold.
    pub fold_mean_rel: Vec<Option<f64>>,
    pub per_type: Vec<TypeBreakdown>,
    /// Sorted by id.
    pub procedures: Vec<ProcedureResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub aggregation: String,
    pub folds: FoldSplit,
    pub methods: Vec<MethodReport>,
}

impl EvalReport {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn to_json(&self) -> String {
        // Only plain data, serialization cannot fail.
        serde_json::to_string(self).expect("report serializes")
    }

    /// Aligned text tables: absolute and relative error per method, per
    /// fold relative error, and the per-type breakdown.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Duration prediction error ({})", AGGREGATION_NOTE);
        let _ = writeln!(out, "seed {}", self.seed);
        let header = ["Method", "Q1", "Q2", "Q3", "Q4", "Mean", "Halftime"];

        let abs_rows = self
            .methods
            .iter()
            .map(|m| stats_row(&m.name, &m.abs, |v| format!("{v:.0}")))
            .collect();
        section(&mut out, "Absolute error (s)", &header, abs_rows);
        let rel_rows = self
            .methods
            .iter()
            .map(|m| stats_row(&m.name, &m.rel, |v| format!("{:.1}", 100.0 * v)))
            .collect();
        section(&mut out, "Relative error (%)", &header, rel_rows);

        let fold_header: Vec<String> = std::iter::once("Method".to_string())
            .chain((1..=self.folds.folds.len()).map(|k| format!("Fold {k}")))
            .collect();
        let fold_rows = self
            .methods
            .iter()
            .map(|m| {
                std::iter::once(m.name.clone())
                    .chain(m.fold_mean_rel.iter().map(|v| match v {
                        Some(v) => format!("{:.1}", 100.0 * v),
                        None => "-".into(),
                    }))
                    .collect()
            })
            .collect();
        let fh: Vec<&str> = fold_header.iter().map(String::as_str).collect();
        section(
            &mut out,
            "Mean relative error per held-out fold (%)",
            &fh,
            fold_rows,
        );

        let type_header = ["Method", "Type", "Count", "Abs mean (s)", "Rel mean (%)"];
        let mut type_rows = Vec::new();
        for m in &self.methods {
            for t in &m.per_type {
                type_rows.push(vec![
                    m.name.clone(),
                    t.ptype.to_string(),
                    t.count.to_string(),
                    cell(&t.abs.mean, |v| format!("{v:.0}")),
                    cell(&t.rel.mean, |v| format!("{:.1}", 100.0 * v)),
                ]);
            }
        }
        section(&mut out, "Per procedure type", &type_header, type_rows);
        out
    }
}

fn cell(m: &MeanStd, f: impl Fn(f64) -> String) -> String {
    if m.count == 0 {
        "-".into()
    } else {
        format!("{}±{}", f(m.mean), f(m.std))
    }
}

fn stats_row(name: &str, s: &ErrorStats, f: impl Fn(f64) -> String + Copy) -> Vec<String> {
    let mut row = vec![name.to_string()];
    row.extend(s.quartiles().iter().map(|m| cell(m, f)));
    row.push(cell(&s.mean, f));
    row.push(cell(&s.halftime, f));
    row
}

fn section(out: &mut String, title: &str, header: &[&str], rows: Vec<Vec<String>>) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (k, (c, w)) in cells.iter().zip(&widths).enumerate() {
            let pad = w - c.chars().count();
            if k == 0 {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str("  ");
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            }
        }
        s
    };
    let _ = writeln!(out, "\n{title}");
    let head = line(header.to_vec());
    let _ = writeln!(out, "{head}");
    let _ = writeln!(out, "{}", "-".repeat(head.chars().count()));
    for r in &rows {
        let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
    }
}
