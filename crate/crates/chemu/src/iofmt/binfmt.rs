//! Binary container encoding and decoding.

use crate::error::{ChemuError, Result};
use crate::gbsm::CtfGrid;
use crate::subspace::{ChirpParam, ProjectionPackage};
use num_complex::Complex64;
use std::path::{Path, PathBuf};

pub const MAGIC_CTF: &[u8; 8] = b"CHEMUCTF";
pub const MAGIC_PKG: &[u8; 8] = b"CHEMUPKG";
pub const MAGIC_SIG: &[u8; 8] = b"CHEMUSIG";
pub const FORMAT_VERSION: u16 = 1;

/// Complex sample stream with its sample rate. `float32` selects the
/// narrower payload element width on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalData {
    pub sample_rate: f64,
    pub float32: bool,
    pub samples: Vec<Complex64>,
}

struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    fn new(magic: &[u8; 8]) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.push(0); // little-endian flag
        Encoder { buf }
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }

    fn complex_f64(&mut self, vs: &[Complex64]) {
        for v in vs {
            self.f64(v.re);
            self.f64(v.im);
        }
    }
}

struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: PathBuf,
}

impl<'a> Decoder<'a> {
    fn new(bytes: &'a [u8], magic: &[u8; 8], path: &Path) -> Result<Self> {
        let mut d = Decoder {
            bytes,
            pos: 0,
            path: path.to_path_buf(),
        };
        let got = d.take(8)?;
        if got != magic {
            return Err(ChemuError::Format {
                path: d.path,
                msg: format!("bad magic {:?}, expected {:?}", got, magic),
            });
        }
        let version = u16::from_le_bytes(d.take(2)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(ChemuError::Format {
                path: d.path,
                msg: format!("unsupported format version {version}"),
            });
        }
        let endian = d.take(1)?[0];
        if endian != 0 {
            return Err(ChemuError::Format {
                path: d.path,
                msg: format!("unsupported endianness flag {endian}"),
            });
        }
        Ok(d)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(ChemuError::TruncatedPayload {
                path: self.path.clone(),
                expected: (self.pos + n) as u64,
                found: self.bytes.len() as u64,
            });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn dim(&mut self, name: &str, max: u64) -> Result<usize> {
        let v = self.u64()?;
        if v == 0 || v > max {
            return Err(ChemuError::Format {
                path: self.path.clone(),
                msg: format!("dimension {name} = {v} out of range"),
            });
        }
        Ok(v as usize)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn complex_f64(&mut self, n: usize) -> Result<Vec<Complex64>> {
        let raw = self.take(n * 16)?;
        Ok(raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect())
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(ChemuError::Format {
                path: self.path,
                msg: format!(
                    "{} trailing bytes after payload",
                    self.bytes.len() - self.pos
                ),
            });
        }
        Ok(())
    }
}

// Dimensions are sanity-capped so corrupt headers fail fast instead of
// attempting enormous allocations.
const MAX_DIM: u64 = 1 << 24;

fn checked_len(path: &Path, dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n <= (MAX_DIM as usize))
        .ok_or_else(|| ChemuError::Format {
            path: path.to_path_buf(),
            msg: "declared dimensions overflow the payload size limit".to_string(),
        })
}

pub fn encode_ctf(grid: &CtfGrid) -> Vec<u8> {
    let mut e = Encoder::new(MAGIC_CTF);
    e.u64(grid.n_rx as u64);
    e.u64(grid.n_tx as u64);
    e.u64(grid.n_time() as u64);
    e.u64(grid.n_freq() as u64);
    e.f64(grid.f_c);
    e.f64s(&grid.t_axis);
    e.f64s(&grid.f_axis);
    e.f64s(&grid.normalization);
    e.complex_f64(&grid.data);
    e.buf
}

pub fn decode_ctf(bytes: &[u8], path: &Path) -> Result<CtfGrid> {
    let mut d = Decoder::new(bytes, MAGIC_CTF, path)?;
    let n_rx = d.dim("Q", MAX_DIM)?;
    let n_tx = d.dim("P", MAX_DIM)?;
    let n_t = d.dim("T", MAX_DIM)?;
    let n_f = d.dim("I", MAX_DIM)?;
    let f_c = d.f64()?;
    let t_axis = d.f64s(n_t)?;
    let f_axis = d.f64s(n_f)?;
    let normalization = d.f64s(checked_len(path, &[n_rx, n_tx])?)?;
    let data = d.complex_f64(checked_len(path, &[n_rx, n_tx, n_t, n_f])?)?;
    d.finish()?;
    Ok(CtfGrid {
        n_rx,
        n_tx,
        data,
        t_axis,
        f_axis,
        f_c,
        normalization,
    })
}

/// Encode a contiguous sequence of projection windows into one package
/// file. All windows must share dimensions and the frequency axis.
pub fn encode_packages(packages: &[ProjectionPackage]) -> Result<Vec<u8>> {
    let first = packages.first().ok_or_else(|| {
        ChemuError::InvalidConfig("cannot encode an empty package list".to_string())
    })?;
    for pkg in packages {
        if pkg.n_rx != first.n_rx
            || pkg.n_tx != first.n_tx
            || pkg.k() != first.k()
            || pkg.f_axis != first.f_axis
        {
            return Err(ChemuError::DimensionMismatch(
                "package windows disagree on dimensions".to_string(),
            ));
        }
    }
    let mut e = Encoder::new(MAGIC_PKG);
    e.u64(packages.len() as u64);
    e.u64(first.n_rx as u64);
    e.u64(first.n_tx as u64);
    e.u64(first.k() as u64);
    e.u64(first.n_freq() as u64);
    e.f64(first.f_c);
    e.f64s(&first.f_axis);
    for pkg in packages {
        e.f64(pkg.t0);
        e.f64(pkg.t_w);
        e.f64(pkg.normalization);
        e.u64(pkg.n_time_samples as u64);
        for chirp in &pkg.chirps {
            e.f64(chirp.alpha);
            e.f64(chirp.beta);
        }
        e.complex_f64(&pkg.coeffs);
    }
    Ok(e.buf)
}

pub fn decode_packages(bytes: &[u8], path: &Path) -> Result<Vec<ProjectionPackage>> {
    let mut d = Decoder::new(bytes, MAGIC_PKG, path)?;
    let n_windows = d.dim("n_windows", MAX_DIM)?;
    let n_rx = d.dim("Q", MAX_DIM)?;
    let n_tx = d.dim("P", MAX_DIM)?;
    let k = d.dim("K", MAX_DIM)?;
    let n_f = d.dim("I", MAX_DIM)?;
    let f_c = d.f64()?;
    let f_axis = d.f64s(n_f)?;
    let mut packages = Vec::with_capacity(n_windows);
    for _ in 0..n_windows {
        let t0 = d.f64()?;
        let t_w = d.f64()?;
        let normalization = d.f64()?;
        let n_time_samples = d.dim("n_time_samples", MAX_DIM)?;
        let mut chirps = Vec::with_capacity(k);
        for _ in 0..k {
            let alpha = d.f64()?;
            let beta = d.f64()?;
            chirps.push(ChirpParam { alpha, beta });
        }
        let coeffs = d.complex_f64(checked_len(path, &[n_rx, n_tx, k, n_f])?)?;
        packages.push(ProjectionPackage {
            n_rx,
            n_tx,
            chirps,
            t0,
            t_w,
            n_time_samples,
            f_axis: f_axis.clone(),
            f_c,
            normalization,
            coeffs,
        });
    }
    d.finish()?;
    Ok(packages)
}

pub fn encode_signal(signal: &SignalData) -> Vec<u8> {
    let mut e = Encoder::new(MAGIC_SIG);
    e.u8(if signal.float32 { 1 } else { 0 });
    e.f64(signal.sample_rate);
    e.u64(signal.samples.len() as u64);
    if signal.float32 {
        for s in &signal.samples {
            e.buf.extend_from_slice(&(s.re as f32).to_le_bytes());
            e.buf.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
    } else {
        e.complex_f64(&signal.samples);
    }
    e.buf
}

pub fn decode_signal(bytes: &[u8], path: &Path) -> Result<SignalData> {
    let mut d = Decoder::new(bytes, MAGIC_SIG, path)?;
    let flag = d.u8()?;
    if flag > 1 {
        return Err(ChemuError::Format {
            path: path.to_path_buf(),
            msg: format!("unknown sample width flag {flag}"),
        });
    }
    let float32 = flag == 1;
    let sample_rate = d.f64()?;
    let n = d.u64()?;
    if n > MAX_DIM {
        return Err(ChemuError::Format {
            path: path.to_path_buf(),
            msg: format!("sample count {n} out of range"),
        });
    }
    let n = n as usize;
    let samples = if float32 {
        let raw = d.take(n * 8)?;
        raw.chunks_exact(8)
            .map(|c| {
                Complex64::new(
                    f32::from_le_bytes(c[..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(c[4..].try_into().unwrap()) as f64,
                )
            })
            .collect()
    } else {
        d.complex_f64(n)?
    };
    d.finish()?;
    Ok(SignalData {
        sample_rate,
        float32,
        samples,
    })
}

pub fn write_ctf(path: &Path, grid: &CtfGrid) -> Result<()> {
    Ok(std::fs::write(path, encode_ctf(grid))?)
}

pub fn read_ctf(path: &Path) -> Result<CtfGrid> {
    decode_ctf(&std::fs::read(path)?, path)
}

pub fn write_packages(path: &Path, packages: &[ProjectionPackage]) -> Result<()> {
    Ok(std::fs::write(path, encode_packages(packages)?)?)
}

pub fn read_packages(path: &Path) -> Result<Vec<ProjectionPackage>> {
    decode_packages(&std::fs::read(path)?, path)
}

pub fn write_signal(path: &Path, signal: &SignalData) -> Result<()> {
    Ok(std::fs::write(path, encode_signal(signal))?)
}

pub fn read_signal(path: &Path) -> Result<SignalData> {
    decode_signal(&std::fs::read(path)?, path)
}
