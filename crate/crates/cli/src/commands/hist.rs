use voxsel_core::selection::{score_histogram, HistogramGrouping};

use super::read_selection_report;
use crate::args::{GroupArg, HistArgs};
use crate::error::{required, CliResult};
use crate::output::{write_atomic, FORMAT_VERSION};

pub fn run(a: HistArgs) -> CliResult<()> {
    let report_path = required(a.report, "hist", "report")?;
    let out = required(a.out, "hist", "out")?;
    let bins = a.bins.unwrap_or(50);
    let group = a.group_by.unwrap_or(GroupArg::None);
    let grouping = match group {
        GroupArg::None => HistogramGrouping::None,
        GroupArg::Tag => HistogramGrouping::SpeakerGenderTag,
    };
    let report = read_selection_report(&report_path)?;
    let hist = score_histogram(&report.ranked, bins, grouping)?;
    // CSV readers skip '#' lines with the usual comment option
    let header = format!(
        "# {FORMAT_VERSION} hist report={} bins={bins} group_by={}\n",
        report_path.display(),
        match group {
            GroupArg::None => "none",
            GroupArg::Tag => "tag",
        }
    );
    write_atomic(&out, (header + &hist.to_csv()).as_bytes())
}
