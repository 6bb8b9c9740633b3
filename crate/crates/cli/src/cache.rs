//! Galerkin matrices memoized on disk under `FRACSPEC_CACHE`, keyed by the
//! SHA-256 of the kernel description and grid size.

use std::fs;
use std::path::PathBuf;

use fracspec_core::numerics::linalg::SymMatrix;
use fracspec_core::quad_oracle::{assemble_galerkin, AssemblyOptions, GalerkinMatrix, Partition};
use fracspec_core::{KernelSpec, Result};
use sha2::{Digest, Sha256};

pub const CACHE_ENV: &str = "FRACSPEC_CACHE";

pub fn cache_key(kernel: &KernelSpec, n: usize) -> String {
    let desc = serde_json::to_string(kernel).expect("kernel spec serializes");
    let mut h = Sha256::new();
    h.update(b"galerkin-v1\n");
    h.update(desc.as_bytes());
    h.update(format!("\nn={n}").as_bytes());
    hex::encode(h.finalize())
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

pub fn galerkin(kernel: &KernelSpec, n: usize) -> Result<GalerkinMatrix> {
    let Some(dir) = cache_dir() else {
        return assemble_galerkin(kernel, n, AssemblyOptions::default());
    };
    let path = dir.join(format!("{}.bin", cache_key(kernel, n)));
    if let Ok(bytes) = fs::read(&path) {
        if bytes.len() == 8 * n * n {
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            return Ok(GalerkinMatrix {
                kernel: *kernel,
                partition: Partition::uniform(n, 1.0),
                entries: SymMatrix::from_row_major(n, data)?,
            });
        }
    }
    let m = assemble_galerkin(kernel, n, AssemblyOptions::default())?;
    let bytes: Vec<u8> = m.entries.as_slice().iter().flat_map(|v| v.to_le_bytes()).collect();
    // A failed write only loses the memo.
    if fs::create_dir_all(&dir).is_ok() {
        let tmp = path.with_extension("tmp");
        if fs::write(&tmp, bytes).is_ok() {
            let _ = fs::rename(tmp, &path);
        }
    }
    Ok(m)
}
