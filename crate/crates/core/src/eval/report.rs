//! Markdown rendering of benchmark reports: one table per model and metric,
//! one row per dataset, one column per transform.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::eval::bench::{BenchmarkCell, BenchmarkReport, CellStats};
use crate::eval::linear::ModelKind;
use crate::transform::TransformKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Rse,
    Smape,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Rse => "RSE",
            Metric::Smape => "SMAPE",
        }
    }

    fn of(self, cell: &BenchmarkCell) -> &CellStats {
        match self {
            Metric::Rse => &cell.rse,
            Metric::Smape => &cell.smape,
        }
    }
}

/// `mean ± std` with three and two decimals.
pub fn format_cell(stats: &CellStats) -> String {
    format!("{:.3} ± {:.2}", stats.mean, stats.std)
}

fn union<T: PartialEq + Copy>(lists: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for item in lists {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

pub fn markdown(reports: &[BenchmarkReport]) -> String {
    let models: Vec<ModelKind> = union(reports.iter().flat_map(|r| r.models.iter().copied()));
    let transforms: Vec<TransformKind> =
        union(reports.iter().flat_map(|r| r.transforms.iter().copied()));
    let mut out = String::new();
    for metric in [Metric::Rse, Metric::Smape] {
        for &model in &models {
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "### {}, {}\n", model.label(), metric.label());
            out.push_str("| Dataset |");
            for t in &transforms {
                let _ = write!(out, " {} |", t.label());
            }
            out.push_str("\n|---|");
            for _ in &transforms {
                out.push_str("---|");
            }
            out.push('\n');
            for r in reports.iter().filter(|r| r.models.contains(&model)) {
                let _ = write!(out, "| {} |", r.dataset);
                for &t in &transforms {
                    match r.cell(model, t) {
                        Some(c) => {
                            let _ = write!(out, " {} |", format_cell(metric.of(c)));
                        }
                        None => out.push_str(" n/a |"),
                    }
                }
                out.push('\n');
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(model: ModelKind, transform: TransformKind, m: f64) -> BenchmarkCell {
        BenchmarkCell {
            model,
            transform,
            rse: CellStats::from_folds(vec![m - 0.01, m + 0.01]),
            smape: CellStats::from_folds(vec![10.0, 12.0]),
            clamped: 0,
            non_converged_folds: 0,
        }
    }

    #[test]
    fn cell_format() {
        let s = CellStats {
            mean: 0.2419,
            std: 0.0151,
            folds: vec![],
        };
        assert_eq!(format_cell(&s), "0.242 ± 0.02");
    }

    #[test]
    fn one_row_per_dataset() {
        let r = BenchmarkReport {
            dataset: "AMPG".into(),
            n: 10,
            seed: 42,
            alpha: 1.0,
            models: vec![ModelKind::Ridge],
            transforms: vec![TransformKind::Identity, TransformKind::LogOffset],
            cells: vec![
                cell(ModelKind::Ridge, TransformKind::Identity, 0.24),
                cell(ModelKind::Ridge, TransformKind::LogOffset, 0.21),
            ],
            warnings: vec![],
        };
        let md = markdown(&[r]);
        assert!(md.contains("| Dataset | Base | Ln |"));
        assert!(md.contains("| AMPG | 0.240 ± 0.01 | 0.210 ± 0.01 |"));
        assert!(md.contains("| AMPG | 11.000 ± 1.41 | 11.000 ± 1.41 |"));
        assert_eq!(md.matches("| AMPG |").count(), 2);
    }
}
