//! Output-file helpers: provenance headers and atomic CSV writing.

use std::path::Path;

use crate::cache::atomic_write;
use crate::config::RunConfig;

/// Comment header stamped into every output file. No timestamps: reruns
/// with a warm cache must be byte-identical.
pub fn provenance(cfg: &RunConfig) -> String {
    format!(
        "# topowire v{}\n# config_hash={:016x}\n# seed={}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.config_hash(),
        cfg.seed
    )
}

/// Write a CSV with the provenance header, a column row, and data rows.
pub fn write_csv(
    path: &Path,
    cfg: &RunConfig,
    columns: &str,
    rows: impl IntoIterator<Item = String>,
) -> std::io::Result<()> {
    let mut text = provenance(cfg);
    text.push_str(columns);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}
