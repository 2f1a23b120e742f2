use std::fmt::Write as _;
use std::path::Path;

use lvo_core::metrics::{roc_curve, roc_svg};

use crate::experiment::{ExperimentReport, LevelResult};
use crate::PipelineError;

pub const REPORT_HEADER: &str = "level,sensitivity,specificity,youden,accuracy,auc,cutoff";

/// One line per level: metrics to three decimals, the cutoff to four.
pub fn report_csv(rows: &[LevelResult]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.4}",
            r.level, r.sensitivity, r.specificity, r.youden, r.accuracy, r.auc, r.cutoff
        );
    }
    out
}

/// Test-set ROC curves of every level on one plot.
pub fn report_svg(report: &ExperimentReport) -> Result<String, PipelineError> {
    let curves = report
        .levels
        .iter()
        .map(|r| Ok((format!("Level {}", r.level), roc_curve(&r.scores, &report.test_labels)?)))
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let refs: Vec<(&str, _)> = curves.iter().map(|(l, c)| (l.as_str(), c)).collect();
    Ok(roc_svg(&refs))
}

/// Writes `report.csv` and `roc.svg` into `dir`.
pub fn save_report(report: &ExperimentReport, dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.csv"), report_csv(&report.levels))?;
    std::fs::write(dir.join("roc.svg"), report_svg(report)?)?;
    Ok(())
}
