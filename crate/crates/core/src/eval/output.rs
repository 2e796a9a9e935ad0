use std::path::Path;

use serde::Serialize;

use super::EvalError;

/// Writes rows as CSV with a header derived from the field names.
pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<(), EvalError> {
    let path = path.as_ref();
    let err = |e: csv::Error| EvalError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), EvalError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|e| EvalError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))
}
