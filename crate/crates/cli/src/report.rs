//! CSV emission with an embedded reproducibility header: the first line of
//! every experiment output is `# {json}` holding the full serialized config,
//! so a file is a complete record of how to regenerate itself.

use std::path::Path;

use serde::Serialize;
use skmor::error::{Error, Result};

pub fn config_header<C: Serialize>(config: &C) -> Result<String> {
    let json = serde_json::to_string(config).map_err(|e| Error::format(e.to_string()))?;
    if json.contains('\n') {
        return Err(Error::format("config serialized across lines".to_string()));
    }
    Ok(format!("# {json}"))
}

pub fn write_csv<C: Serialize>(
    path: &Path,
    config: &C,
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut out = config_header(config)?;
    out.push('\n');
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::format(format!(
                "row has {} fields, header has {}",
                row.len(),
                columns.len()
            )));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Full-precision float formatting for CSV cells; round-trips exactly.
pub fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}
