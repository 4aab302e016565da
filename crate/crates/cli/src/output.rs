use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// Writes to `path` through a temporary file in the same directory that is
/// renamed into place only once `fill` succeeds.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Sends bytes to `out`, or stdout when `None`.
pub fn emit(out: Option<&Path>, fill: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, fill),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            fill(&mut lock)?;
            lock.flush().map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

pub fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    let label = out.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into());
    emit(out, |w| {
        serde_json::to_writer(&mut *w, value).map_err(|e| CliError::io(&label, e.into()))?;
        writeln!(w).map_err(|e| CliError::io(&label, e))
    })
}
