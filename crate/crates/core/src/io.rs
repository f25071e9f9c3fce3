//! Small text-file helpers shared by the cache and dump formats.

use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::error::{FgpsError, Result};

/// Formats a float with 17 significant digits, which round-trips every `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_f64(field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| FgpsError::Format(format!("not a number: `{}`", field.trim())))
}

pub(crate) fn read_nonempty_lines<R: BufRead>(input: R) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    Ok(lines)
}

/// Writes `path` through a sibling temporary file, so a failed write never
/// leaves a partial file behind.
pub fn write_atomically<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
{
    let file_name = path
        .file_name()
        .ok_or_else(|| FgpsError::Io(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);

    let file = fs::File::create(&tmp)
        .map_err(|e| FgpsError::Io(format!("{}: {e}", path.display())))?;
    let mut writer = BufWriter::new(file);
    let outcome = fill(&mut writer).and_then(|_| writer.flush().map_err(FgpsError::from));
    drop(writer);
    match outcome {
        Ok(()) => fs::rename(&tmp, path).map_err(FgpsError::from),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}
