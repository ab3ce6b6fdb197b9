//! Eigenstate cache: one binary file per (params-hash, R, N, L, k_z).
//!
//! File layout: 8-byte magic, little-endian u64 header length, JSON
//! header, then the payload — 4N energies followed by the 4N×4N
//! coefficient matrix, state-major, interleaved re/im, all f64
//! little-endian.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use topowire::Complex64;
use serde::{Deserialize, Serialize};
use topowire::basis::{MaterialParams, WireGeometry};
use topowire::linalg::CVector;
use topowire::spectrum::{self, StateLabel, VariationalState};

const MAGIC: &[u8; 8] = b"TWEIG01\n";

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct CacheHeader {
    pub params_hash: String,
    pub r: f64,
    pub n_basis: usize,
    pub l: u32,
    pub k_z: f64,
    pub dim: usize,
}

/// Cache root: $TOPOWIRE_CACHE if set, else `<out>/cache`.
pub fn cache_root(out_dir: &Path) -> PathBuf {
    match std::env::var_os("TOPOWIRE_CACHE") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => out_dir.join("cache"),
    }
}

pub fn entry_path(
    root: &Path,
    params: &MaterialParams,
    geom: &WireGeometry,
    n_basis: usize,
    l: u32,
    k_z: f64,
) -> PathBuf {
    let hash = spectrum::params_hash(params, geom.r);
    root.join(format!("eig_{hash:016x}_N{n_basis}_L{l}_kz{k_z:+.6}.bin"))
}

pub fn save(
    root: &Path,
    params: &MaterialParams,
    geom: &WireGeometry,
    states: &[VariationalState],
) -> std::io::Result<PathBuf> {
    assert!(!states.is_empty());
    let first = &states[0];
    let dim = 4 * first.n_basis;
    debug_assert_eq!(states.len(), dim);
    let header = CacheHeader {
        params_hash: format!("{:016x}", spectrum::params_hash(params, geom.r)),
        r: geom.r,
        n_basis: first.n_basis,
        l: first.l,
        k_z: first.k_z,
        dim,
    };
    let header_json = serde_json::to_vec(&header).expect("header serializes");
    let mut payload =
        Vec::with_capacity(16 + header_json.len() + 8 * dim + 16 * dim * dim);
    payload.extend_from_slice(MAGIC);
    payload.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    payload.extend_from_slice(&header_json);
    for s in states {
        payload.extend_from_slice(&s.energy.to_le_bytes());
    }
    for s in states {
        for z in s.coeffs.iter() {
            payload.extend_from_slice(&z.re.to_le_bytes());
            payload.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    fs::create_dir_all(root)?;
    let path = entry_path(root, params, geom, first.n_basis, first.l, first.k_z);
    atomic_write(&path, &payload)?;
    Ok(path)
}

/// Write via a temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".tmp.{}.{}",
        std::process::id(),
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Load one cache entry; `None` when absent. Corrupt or mismatched
/// entries are reported as errors, never silently used.
pub fn load(
    root: &Path,
    params: &MaterialParams,
    geom: &WireGeometry,
    n_basis: usize,
    l: u32,
    k_z: f64,
) -> Result<Option<Vec<VariationalState>>, String> {
    let path = entry_path(root, params, geom, n_basis, l, k_z);
    if !path.exists() {
        return Ok(None);
    }
    let bytes = fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (header, states) = decode(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    let expected_hash = format!("{:016x}", spectrum::params_hash(params, geom.r));
    if header.params_hash != expected_hash
        || header.n_basis != n_basis
        || header.l != l
        || (header.k_z - k_z).abs() > 1e-12
    {
        return Err(format!("{}: header does not match request", path.display()));
    }
    Ok(Some(states))
}

pub fn decode(bytes: &[u8]) -> Result<(CacheHeader, Vec<VariationalState>), String> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err("bad magic".into());
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let header_end = 16 + header_len;
    if bytes.len() < header_end {
        return Err("truncated header".into());
    }
    let header: CacheHeader =
        serde_json::from_slice(&bytes[16..header_end]).map_err(|e| format!("bad header: {e}"))?;
    let dim = header.dim;
    let expected = header_end + 8 * dim + 16 * dim * dim;
    if bytes.len() != expected {
        return Err(format!("payload length {} != expected {expected}", bytes.len()));
    }
    let f64_at = |offset: usize| -> f64 {
        f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap())
    };
    let mut energies = Vec::with_capacity(dim);
    for j in 0..dim {
        let e = f64_at(header_end + 8 * j);
        if !e.is_finite() {
            return Err(format!("non-finite energy at index {j}"));
        }
        energies.push(e);
    }
    let vec_base = header_end + 8 * dim;
    let mut states = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut coeffs = CVector::zeros(dim);
        for i in 0..dim {
            let off = vec_base + 16 * (j * dim + i);
            coeffs[i] = Complex64::new(f64_at(off), f64_at(off + 8));
        }
        states.push(VariationalState {
            l: header.l,
            k_z: header.k_z,
            n_basis: header.n_basis,
            energy: energies[j],
            coeffs,
            label: StateLabel::Valence, // provisional; classified by the caller
        });
    }
    Ok((header, states))
}

/// Residual check of a cache entry against a freshly assembled matrix.
pub fn verify(
    params: &MaterialParams,
    geom: &WireGeometry,
    states: &[VariationalState],
) -> Result<f64, String> {
    let first = states.first().ok_or("empty entry")?;
    let block = topowire::hamiltonian::assemble(*params, *geom, first.l, first.k_z, first.n_basis)
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut hnorm = 0.0f64;
    for s in states {
        hnorm = hnorm.max(s.energy.abs());
    }
    for s in states {
        let resid = (&block.matrix * &s.coeffs - &s.coeffs * Complex64::from(s.energy)).norm();
        worst = worst.max(resid);
    }
    if worst > 1e-8 * hnorm {
        return Err(format!("residual {worst:.3e} exceeds 1e-8 * {hnorm:.3e}"));
    }
    Ok(worst)
}

/// Cache entries under a root (files matching the naming scheme).
pub fn entries(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    if let Ok(dir) = fs::read_dir(root) {
        for item in dir.flatten() {
            let name = item.file_name();
            let name = name.to_string_lossy();
            if name.starts_with("eig_") && name.ends_with(".bin") {
                out.push(item.path());
            }
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use topowire::spectrum::{solve, DEFAULT_MARGIN};

    #[test]
    fn roundtrip_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let params = MaterialParams::bi2se3();
        let geom = WireGeometry::default_wire();
        let block = topowire::hamiltonian::assemble(params, geom, 1, 0.08, 6).unwrap();
        let states = solve(&block).unwrap();
        let path = save(dir.path(), &params, &geom, &states).unwrap();
        assert!(path.exists());

        let loaded = load(dir.path(), &params, &geom, 6, 1, 0.08).unwrap().unwrap();
        assert_eq!(loaded.len(), 24);
        for (a, b) in states.iter().zip(&loaded) {
            assert_eq!(a.energy.to_bits(), b.energy.to_bits());
            assert_eq!(a.coeffs, b.coeffs);
        }
        verify(&params, &geom, &loaded).unwrap();

        // miss on different key
        assert!(load(dir.path(), &params, &geom, 6, 2, 0.08).unwrap().is_none());
        let _ = DEFAULT_MARGIN;

        // corrupt file rejected
        let bytes = fs::read(&path).unwrap();
        let mut bad = bytes.clone();
        bad[20] ^= 0xff;
        fs::write(&path, &bad).unwrap();
        assert!(load(dir.path(), &params, &geom, 6, 1, 0.08).is_err());
    }
}
