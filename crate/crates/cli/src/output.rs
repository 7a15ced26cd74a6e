use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// Version tag carried by every report this tool writes.
pub const FORMAT_VERSION: &str = "voxsel-report/1";

/// Report wrapper: version, subcommand and effective config, followed by the body's fields.
#[derive(Serialize)]
pub struct Envelope<'a, C, B> {
    pub format_version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    #[serde(flatten)]
    pub body: &'a B,
}

pub fn envelope_json<C: Serialize, B: Serialize>(command: &str, config: &C, body: &B) -> CliResult<String> {
    let env = Envelope {
        format_version: FORMAT_VERSION,
        command,
        config,
        body,
    };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| CliError::Data(format!("serialising report: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn temp_beside(path: &Path) -> CliResult<NamedTempFile> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))
}

/// Writes through a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = temp_beside(path)?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Like [`write_atomic`] for writers that insist on opening the path themselves.
pub fn write_atomic_with(path: &Path, write: impl FnOnce(&Path) -> CliResult<()>) -> CliResult<()> {
    let tmp = temp_beside(path)?;
    write(tmp.path())?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn envelope_flattens_body() {
        #[derive(Serialize)]
        struct B {
            x: u32,
        }
        let s = envelope_json("t", &serde_json::json!({"k": 1}), &B { x: 7 }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["format_version"], FORMAT_VERSION);
        assert_eq!(v["x"], 7);
        assert_eq!(v["config"]["k"], 1);
    }
}
