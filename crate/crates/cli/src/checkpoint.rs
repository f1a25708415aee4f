//! Binary checkpoint format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic        5 bytes  "MCPS1"
//! version      u32      1
//! config_hash  u64      FNV-1a of the configuration text
//! n_components u32
//! lmax         u32
//! time         f64
//! step         u64
//! phi          n * (lmax+1)^2 f64, component-major, (l, m) lexicographic
//! u            (lmax+1)^2 f64
//! ```
//!
//! Save/load round-trips are bitwise exact, which is what makes resumed runs
//! continue bit-identically.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use mcps_core::dynamics::SimState;
use mcps_core::fields::{Deformation, PhaseField};
use mcps_core::sphere::{HarmonicBasis, QuadratureGrid, SpectralField};

use crate::CliError;

pub const MAGIC: &[u8; 5] = b"MCPS1";
pub const VERSION: u32 = 1;

struct Cursor<'a> {
    bytes: &'a [u8],
    off: usize,
}

impl Cursor<'_> {
    fn chunk(&mut self, len: usize) -> &[u8] {
        let s = &self.bytes[self.off..self.off + len];
        self.off += len;
        s
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.chunk(4).try_into().unwrap())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.chunk(8).try_into().unwrap())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.chunk(8).try_into().unwrap())
    }

    fn f64_block(&mut self, count: usize) -> Vec<f64> {
        self.chunk(8 * count)
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    }
}

pub fn save(path: &Path, state: &SimState, config_hash: u64) -> Result<(), CliError> {
    let n = state.phi.n();
    let basis = state.phi.component(0).basis();
    let lmax = basis.lmax();
    let n_modes = basis.n_modes();
    let mut buf = Vec::with_capacity(5 + 4 + 8 + 4 + 4 + 8 + 8 + 8 * n_modes * (n + 1));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&config_hash.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(lmax as u32).to_le_bytes());
    buf.extend_from_slice(&state.t.to_le_bytes());
    buf.extend_from_slice(&state.step.to_le_bytes());
    for i in 0..n {
        for &c in state.phi.component(i).coeffs() {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    for &c in state.u.field().coeffs() {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub struct LoadedCheckpoint {
    pub state: SimState,
    pub config_hash: u64,
}

pub fn load(
    path: &Path,
    basis: &Arc<HarmonicBasis>,
    grid: &Arc<QuadratureGrid>,
) -> Result<LoadedCheckpoint, CliError> {
    let bytes = fs::read(path)?;
    let fail = |msg: &str| CliError::Checkpoint(format!("{}: {msg}", path.display()));
    if bytes.len() < 5 + 4 + 8 + 4 + 4 + 8 + 8 {
        return Err(fail("truncated header"));
    }
    if &bytes[0..5] != MAGIC {
        return Err(fail("bad magic"));
    }
    let mut cur = Cursor {
        bytes: &bytes,
        off: 5,
    };
    let version = cur.u32();
    if version != VERSION {
        return Err(fail(&format!("unsupported version {version}")));
    }
    let config_hash = cur.u64();
    let n = cur.u32() as usize;
    let lmax = cur.u32() as usize;
    if lmax != basis.lmax() {
        return Err(fail(&format!(
            "lmax {lmax} does not match configuration lmax {}",
            basis.lmax()
        )));
    }
    let t = cur.f64();
    let step = cur.u64();
    let n_modes = basis.n_modes();
    if bytes.len() != cur.off + 8 * n_modes * (n + 1) {
        return Err(fail("unexpected payload size"));
    }
    let mut comps = Vec::with_capacity(n);
    for _ in 0..n {
        let coeffs = cur.f64_block(n_modes);
        comps.push(
            SpectralField::from_coeffs(basis, coeffs).map_err(|e| fail(&e.to_string()))?,
        );
    }
    let u = SpectralField::from_coeffs(basis, cur.f64_block(n_modes))
        .map_err(|e| fail(&e.to_string()))?;
    let phi = PhaseField::from_components(comps, grid).map_err(|e| fail(&e.to_string()))?;
    Ok(LoadedCheckpoint {
        state: SimState {
            t,
            step,
            phi,
            u: Deformation::project(u),
        },
        config_hash,
    })
}
