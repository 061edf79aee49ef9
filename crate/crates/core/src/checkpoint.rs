//! Binary checkpoints.
//!
//! Little-endian throughout:
//!
//! ```text
//! offset  size      field
//! 0       8         magic "MHD2B01\0"
//! 8       4         version (u32, currently 1)
//! 12      4         n (u32)
//! 16      8         beta (f64)
//! 24      8         t (f64)
//! 32      8         seed (u64)
//! 40      32        SHA-256 config digest
//! 72      16·n²     ω̂ as interleaved (re, im) f64 pairs, row-major over the lattice
//! ...     16·n²     ĵ, same layout
//! ...     8         ∫₀ᵗ ‖Λ^β b‖₂² (f64)
//! ...     8         index of the last output time (u64)
//! ...     8         number of values in the last record (u64)
//! ...     8·m       last record row (f64)
//! ```
//!
//! The trailer after `ĵ` lets a resumed run continue its time integrals
//! bit for bit.

use std::io::Write;
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::solver::FlowState;
use crate::spectral::SpectralField;

pub const MAGIC: [u8; 8] = *b"MHD2B01\0";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 72;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub n: u32,
    pub beta: f64,
    pub t: f64,
    pub seed: u64,
    pub digest: [u8; 32],
    pub omega_hat: Vec<Complex64>,
    pub j_hat: Vec<Complex64>,
    pub magnetic_dissipation: f64,
    pub output_index: u64,
    pub last_record: Vec<f64>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end =
            self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
                Error::Checkpoint(format!("truncated file: needed {len} bytes at offset {}", self.pos))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap_or_default()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap_or_default()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn complex(&mut self, count: usize) -> Result<Vec<Complex64>> {
        (0..count).map(|_| Ok(Complex64::new(self.f64()?, self.f64()?))).collect()
    }
}

impl Checkpoint {
    pub fn capture(state: &FlowState, seed: u64, digest: [u8; 32], output_index: u64, last_record: Vec<f64>) -> Self {
        Self {
            n: state.grid().n() as u32,
            beta: state.beta,
            t: state.t,
            seed,
            digest,
            omega_hat: state.omega_hat.coeffs().to_vec(),
            j_hat: state.j_hat.coeffs().to_vec(),
            magnetic_dissipation: state.magnetic_dissipation,
            output_index,
            last_record,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let cells = self.omega_hat.len() + self.j_hat.len();
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * cells + 24 + 8 * self.last_record.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.beta.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.digest);
        for c in self.omega_hat.iter().chain(&self.j_hat) {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out.extend_from_slice(&self.magnetic_dissipation.to_le_bytes());
        out.extend_from_slice(&self.output_index.to_le_bytes());
        out.extend_from_slice(&(self.last_record.len() as u64).to_le_bytes());
        for v in &self.last_record {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic, not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}, expected {VERSION}")));
        }
        let n = r.u32()?;
        if n < 8 || n % 2 != 0 || n > 1 << 15 {
            return Err(Error::Checkpoint(format!("implausible grid size {n}")));
        }
        let beta = r.f64()?;
        let t = r.f64()?;
        let seed = r.u64()?;
        let digest: [u8; 32] = r.take(32)?.try_into().unwrap_or_default();
        let cells = (n as usize) * (n as usize);
        let omega_hat = r.complex(cells)?;
        let j_hat = r.complex(cells)?;
        let magnetic_dissipation = r.f64()?;
        let output_index = r.u64()?;
        let m = r.u64()? as usize;
        if m > 1 << 20 {
            return Err(Error::Checkpoint(format!("implausible record length {m}")));
        }
        let last_record = (0..m).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { n, beta, t, seed, digest, omega_hat, j_hat, magnetic_dissipation, output_index, last_record })
    }

    /// Writes through a temporary file and renames, so a crash never leaves
    /// a half-written checkpoint under the final name.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes =
            std::fs::read(path).map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }

    /// Rebuilds the flow state on a grid with the given dealias fraction.
    pub fn state(&self, dealias_fraction: f64) -> Result<FlowState> {
        let grid = GridSpec::with_dealias(self.n as usize, dealias_fraction)?;
        let omega = SpectralField::from_coeffs(grid, self.omega_hat.clone())?;
        let j = SpectralField::from_coeffs(grid, self.j_hat.clone())?;
        let mut s = FlowState::new(omega, j, self.beta)?;
        s.t = self.t;
        s.magnetic_dissipation = self.magnetic_dissipation;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::IcSpec;
    use crate::ic::make_initial_condition;

    fn sample() -> Checkpoint {
        let g = GridSpec::new(16).unwrap();
        let ic = IcSpec { kind: crate::config::IcKind::RandomBand, k_max: 5.0, ..IcSpec::default() };
        let mut s = make_initial_condition(&ic, 3, g, 1.3).unwrap();
        s.t = 0.125;
        s.magnetic_dissipation = 0.1 + 0.2;
        Checkpoint::capture(&s, 3, [7; 32], 12, vec![0.125, 1.0 / 3.0, f64::MIN_POSITIVE])
    }

    #[test]
    fn bytes_round_trip_bitwise() {
        let c = sample();
        let bytes = c.to_bytes();
        assert_eq!(&bytes[..8], b"MHD2B01\0");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 16);
        assert_eq!(bytes.len(), 72 + 2 * 16 * 256 + 24 + 24);
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes(), bytes);
        let s = back.state(2.0 / 3.0).unwrap();
        assert_eq!(s.t, 0.125);
        assert_eq!(s.magnetic_dissipation.to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.bin");
        let c = sample();
        c.save(&p).unwrap();
        assert_eq!(Checkpoint::load(&p).unwrap(), c);
        assert!(!p.with_extension("tmp").exists());
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = sample().to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::Checkpoint(_))));
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(Checkpoint::from_bytes(&longer).is_err());
        let mut v2 = bytes;
        v2[8] = 2;
        assert!(Checkpoint::from_bytes(&v2).is_err());
        assert!(matches!(Checkpoint::load(Path::new("/nonexistent/x.bin")), Err(Error::Checkpoint(_))));
    }
}
