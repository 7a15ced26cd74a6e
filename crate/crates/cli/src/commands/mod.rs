pub mod eval;
pub mod hist;
pub mod pool_info;
pub mod pqmf;
pub mod select;
pub mod stats;
pub mod stftloss;

use std::path::Path;

use voxsel_core::selection::SelectionReport;

use crate::error::{CliError, CliResult};
use crate::output::FORMAT_VERSION;

/// Reads a report written by `voxsel select`.
pub(crate) fn read_selection_report(path: &Path) -> CliResult<SelectionReport> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    match value.get("format_version").and_then(|v| v.as_str()) {
        Some(FORMAT_VERSION) => {}
        Some(other) => {
            return Err(CliError::Data(format!(
                "{}: unsupported report version {other:?}",
                path.display()
            )))
        }
        None => return Err(CliError::Data(format!("{}: not a voxsel report", path.display()))),
    }
    if value.get("command").and_then(|v| v.as_str()) != Some("select") {
        return Err(CliError::Data(format!("{}: not a selection report", path.display())));
    }
    serde_json::from_value(value).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}
