//! Report writing: a CSV table plus a JSON sidecar next to it.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::failure::{CmdResult, Context};

/// `(csv, json)` paths for `out`: the given path keeps its format (JSON when
/// it ends in `.json`, CSV otherwise) and the sibling gets the other one.
pub fn report_paths(out: &Path) -> (PathBuf, PathBuf) {
    if out.extension().is_some_and(|e| e == "json") {
        (out.with_extension("csv"), out.to_path_buf())
    } else {
        (out.to_path_buf(), out.with_extension("json"))
    }
}

pub fn csv_bytes<R: Serialize>(rows: &[R], header: &[&str]) -> CmdResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header).data_context("cannot encode CSV")?;
    }
    for row in rows {
        w.serialize(row).data_context("cannot encode CSV")?;
    }
    w.into_inner().data_context("cannot encode CSV")
}

pub fn json_bytes<S: Serialize>(value: &S) -> CmdResult<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value).data_context("cannot encode JSON")?;
    text.push('\n');
    Ok(text.into_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).data_context(format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, bytes).data_context(format!("cannot write {}", path.display()))
}

/// Writes the table and its sidecar under `out`, or the table alone to
/// stdout when `out` is `None`.
pub fn emit<R: Serialize, S: Serialize>(
    out: Option<&Path>,
    rows: &[R],
    header: &[&str],
    sidecar: &S,
) -> CmdResult {
    let table = csv_bytes(rows, header)?;
    match out {
        Some(out) => {
            let (csv_path, json_path) = report_paths(out);
            write_file(&csv_path, &table)?;
            write_file(&json_path, &json_bytes(sidecar)?)
        }
        None => std::io::stdout()
            .write_all(&table)
            .data_context("cannot write to stdout"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_paths() {
        assert_eq!(
            report_paths(Path::new("a/scores.json")),
            (PathBuf::from("a/scores.csv"), PathBuf::from("a/scores.json"))
        );
        assert_eq!(
            report_paths(Path::new("sim.csv")),
            (PathBuf::from("sim.csv"), PathBuf::from("sim.json"))
        );
        assert_eq!(report_paths(Path::new("stats")).1, PathBuf::from("stats.json"));
    }
}
