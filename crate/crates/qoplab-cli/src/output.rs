//! Run records and their two serializations: a JSON report carrying the
//! resolved configuration, seed, results, and provenance; or a fixed-layout
//! CSV curve for the commands that sweep a grid. File writes are atomic —
//! the payload lands in a temporary file in the destination directory and
//! is renamed over the target, so a crash never leaves a half-written
//! record behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::CliError;

pub const VERSION: &str = concat!("qoplab ", env!("CARGO_PKG_VERSION"));

/// Environment variable naming a default output directory. It is consulted
/// only when `--output` is absent; an explicit path always wins.
pub const OUT_DIR_VAR: &str = "QOPLAB_OUT_DIR";

/// A rectangular sweep: one header row and a fixed column order.
pub struct Curve {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<f64>>,
}

/// Renders a curve as CSV: header line first, every value in 6-decimal
/// fixed-point, LF line endings, UTF-8 throughout.
pub fn emit_curve(curve: &Curve) -> Result<String, CliError> {
    if curve.rows.is_empty() {
        return Err(CliError::Config("curve grid is empty; nothing to emit".into()));
    }
    let mut out = String::new();
    out.push_str(&curve.header.join(","));
    out.push('\n');
    for row in &curve.rows {
        debug_assert_eq!(row.len(), curve.header.len());
        let cells: Vec<String> = row.iter().map(|&v| format_cell(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// 6-decimal fixed point with negative zero normalized away, so a value
/// that rounds to zero never prints as "-0.000000".
fn format_cell(v: f64) -> String {
    let rounded = (v * 1e6).round() / 1e6;
    let clean = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{clean:.6}")
}

/// Assembles the full run record. `serde_json` keeps object keys in sorted
/// order, so two runs with identical content serialize byte-identically;
/// the wall time inside `provenance` is the one field that legitimately
/// differs between reruns.
pub fn run_record(
    command: &str,
    config: Map<String, Value>,
    seed: u64,
    results: Value,
    wall_time_ms: f64,
) -> Value {
    json!({
        "command": command,
        "config": config,
        "seed": seed,
        "results": results,
        "provenance": {
            "version": VERSION,
            "wall_time_ms": wall_time_ms,
        },
    })
}

pub enum Target {
    Stdout,
    File(PathBuf),
}

/// Where the payload goes: an explicit path (with "-" meaning stdout), or —
/// when nothing was given — `$QOPLAB_OUT_DIR/<command>.<ext>` if that
/// variable is set, stdout otherwise.
pub fn resolve_target(explicit: Option<&str>, command: &str, ext: &str) -> Target {
    match explicit {
        Some("-") => Target::Stdout,
        Some(path) => Target::File(PathBuf::from(path)),
        None => match std::env::var_os(OUT_DIR_VAR) {
            Some(dir) => Target::File(Path::new(&dir).join(format!("{command}.{ext}"))),
            None => Target::Stdout,
        },
    }
}

pub fn write_payload(target: &Target, payload: &str) -> Result<(), CliError> {
    match target {
        Target::Stdout => {
            let mut out = std::io::stdout().lock();
            match out.write_all(payload.as_bytes()).and_then(|()| out.flush()) {
                Ok(()) => Ok(()),
                // The reader went away (e.g. piping into `head`); that is
                // not a failure of this run.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(CliError::Io(format!("cannot write to stdout: {e}"))),
            }
        }
        Target::File(path) => write_atomic(path, payload.as_bytes()),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| {
        CliError::Io(format!("cannot create temporary file in {}: {e}", dir.display()))
    })?;
    tmp.write_all(bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("cannot finalize {}: {e}", path.display())))?;
    Ok(())
}
