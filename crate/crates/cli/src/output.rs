//! Atomic file output: everything is written to a temporary file in the
//! target directory and renamed into place.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::failure::{Classify, Failure};

/// Prints a line to stdout. A closed pipe (`| head`) is not an error.
pub fn print_line(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}").and_then(|()| out.flush());
}

macro_rules! say {
    ($($arg:tt)*) => {
        $crate::output::print_line(&format!($($arg)*))
    };
}
pub(crate) use say;

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).runtime(format!("creating {}", dir.display()))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let ctx = || format!("writing {}", path.display());
    let mut tmp = NamedTempFile::new_in(dir).runtime(ctx())?;
    tmp.write_all(bytes).runtime(ctx())?;
    tmp.as_file().sync_all().runtime(ctx())?;
    tmp.persist(path).map_err(|e| e.error).runtime(ctx())?;
    log::debug!("wrote {}", path.display());
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).runtime("serializing json")?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Renders rows with a header through the csv writer.
pub fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).runtime("serializing csv")?;
    }
    w.into_inner()
        .map_err(|e| e.into_error())
        .runtime("serializing csv")
}

/// Shortest round-trip float text (exponent form for tiny p-values); empty when missing.
pub fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}
