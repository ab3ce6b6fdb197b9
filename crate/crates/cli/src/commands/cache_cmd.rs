//! `cache`: inspect or clear the eigenstate cache.

use std::path::Path;

use topowire::spectrum::params_hash;

use crate::cache;
use crate::config::RunConfig;
use crate::CliError;

pub fn inspect(cfg: &RunConfig, root: &Path, verify: bool) -> Result<(), CliError> {
    let entries = cache::entries(root);
    println!("cache root {} ({} entries)", root.display(), entries.len());
    let own_hash = format!("{:016x}", params_hash(&cfg.params, cfg.geom.r));
    let mut bad = 0usize;
    for path in &entries {
        let bytes = std::fs::read(path).map_err(CliError::numeric)?;
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        match cache::decode(&bytes) {
            Ok((header, states)) => {
                let status = if verify && header.params_hash == own_hash {
                    match cache::verify(&cfg.params, &cfg.geom, &states) {
                        Ok(resid) => format!("verified (residual {resid:.2e})"),
                        Err(e) => {
                            bad += 1;
                            format!("FAILED: {e}")
                        }
                    }
                } else if verify {
                    "skipped (different parameter set)".to_string()
                } else {
                    String::new()
                };
                println!(
                    "  {name}: L={} k_z={:+.6} N={} dim={} hash={} {status}",
                    header.l, header.k_z, header.n_basis, header.dim, header.params_hash
                );
            }
            Err(e) => {
                bad += 1;
                println!("  {name}: CORRUPT ({e})");
            }
        }
    }
    if bad > 0 {
        return Err(CliError::numeric(format!("{bad} cache entries failed inspection")));
    }
    Ok(())
}

pub fn clear(root: &Path) -> Result<(), CliError> {
    let entries = cache::entries(root);
    let count = entries.len();
    for path in entries {
        std::fs::remove_file(&path).map_err(CliError::numeric)?;
    }
    println!("cache: removed {count} entries from {}", root.display());
    Ok(())
}
