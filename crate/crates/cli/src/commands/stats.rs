use serde::Serialize;
use voxsel_core::selection::{selection_stats, SelectionStats};

use super::read_selection_report;
use crate::args::StatsArgs;
use crate::error::{required, CliResult};
use crate::output::{envelope_json, write_atomic};
use crate::show;

#[derive(Serialize)]
struct Effective {
    report: String,
    reference: Option<String>,
}

#[derive(Serialize)]
struct Body {
    num_selected: usize,
    stats: SelectionStats,
}

pub fn run(a: StatsArgs) -> CliResult<()> {
    let report_path = required(a.report, "stats", "report")?;
    let report = read_selection_report(&report_path)?;
    let reference = a.reference.as_deref().map(read_selection_report).transpose()?;
    let stats = selection_stats(&report.selected, reference.as_ref().map(|r| r.selected.as_slice()));
    let effective = Effective {
        report: show(&report_path),
        reference: a.reference.as_deref().map(show),
    };
    let body = Body {
        num_selected: report.selected.len(),
        stats,
    };
    let json = envelope_json("stats", &effective, &body)?;
    match &a.out {
        Some(p) => write_atomic(p, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}
