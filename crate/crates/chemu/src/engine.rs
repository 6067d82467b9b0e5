//! Frequency-domain block emulation with overlap-and-add.
//!
//! Input streams are cut into blocks of `N_s = N_H - N_a` samples, zero-
//! padded to `N_H`, transformed, multiplied bin-by-bin with the channel
//! frequency response of every (q, p) subchannel, accumulated over Tx
//! antennas, inverse transformed, and stitched with overlap-and-add. The
//! CFR is refreshed once per block (period `T_ch = N_s * T_s`).

use crate::error::{ChemuError, Result};
use crate::gbsm::CtfGrid;
use crate::subspace::{reconstruct, ProjectionPackage};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// What to do with engine DFT bins outside the channel source's band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutOfBandPolicy {
    /// Reject the configuration (default).
    #[default]
    Error,
    /// Channel occupies the center bins; outer bins are zero.
    Zero,
}

/// Engine dimensioning. `N_H` need not be a power of two, although powers
/// of two transform fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Transform length N_H.
    pub n_fft: usize,
    /// Maximum emulated delay spread, s.
    pub tau_max: f64,
    /// Signal sample period, s.
    pub t_s: f64,
    /// Tx antenna count P.
    pub n_tx: usize,
    /// Rx antenna count Q.
    pub n_rx: usize,
    pub out_of_band: OutOfBandPolicy,
}

impl EngineConfig {
    /// Overlap length `N_a = floor(tau_max / T_s)`.
    pub fn n_overlap(&self) -> usize {
        (self.tau_max / self.t_s).floor() as usize
    }

    /// Block length `N_s = N_H - N_a`.
    pub fn n_block(&self) -> usize {
        self.n_fft - self.n_overlap()
    }

    /// Channel refresh period `T_ch = N_s * T_s`.
    pub fn t_ch(&self) -> f64 {
        self.n_block() as f64 * self.t_s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_s > 0.0) {
            return Err(ChemuError::InvalidConfig(format!(
                "T_s must be positive, got {}",
                self.t_s
            )));
        }
        let n_a = self.n_overlap();
        if n_a < 1 {
            return Err(ChemuError::InvalidConfig(format!(
                "tau_max = {} yields N_a = 0; need at least one overlap sample",
                self.tau_max
            )));
        }
        if n_a >= self.n_fft {
            return Err(ChemuError::InvalidConfig(format!(
                "N_a = {n_a} leaves no room for signal samples in N_H = {}",
                self.n_fft
            )));
        }
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(ChemuError::InvalidConfig(
                "antenna counts must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// Channel the engine draws CFR snapshots from.
#[derive(Debug, Clone, Copy)]
pub enum ChannelSource<'a> {
    Grid(&'a CtfGrid),
    Packages(&'a [ProjectionPackage]),
}

impl ChannelSource<'_> {
    pub fn n_rx(&self) -> usize {
        match self {
            ChannelSource::Grid(g) => g.n_rx,
            ChannelSource::Packages(p) => p.first().map_or(0, |w| w.n_rx),
        }
    }

    pub fn n_tx(&self) -> usize {
        match self {
            ChannelSource::Grid(g) => g.n_tx,
            ChannelSource::Packages(p) => p.first().map_or(0, |w| w.n_tx),
        }
    }

    /// Earliest time the source covers.
    pub fn t_start(&self) -> f64 {
        match self {
            ChannelSource::Grid(g) => g.t_axis.first().copied().unwrap_or(0.0),
            ChannelSource::Packages(p) => p.first().map_or(0.0, |w| w.t0),
        }
    }

    /// Channel samples of every subchannel at time `t` on the source's own
    /// frequency axis: `(f_axis, values[q][p][i])`.
    fn sample_at(&self, t: f64) -> Result<(&[f64], Vec<Complex64>)> {
        match self {
            ChannelSource::Grid(grid) => {
                let t_axis = &grid.t_axis;
                // A single-row grid is a static channel valid at any time.
                if t_axis.len() > 1 {
                    let step = t_axis[1] - t_axis[0];
                    if t < t_axis[0] - 1e-12 || t > t_axis[t_axis.len() - 1] + step {
                        return Err(ChemuError::OutOfRange(format!(
                            "t = {t} outside grid time coverage [{}, {}]",
                            t_axis[0],
                            t_axis[t_axis.len() - 1] + step
                        )));
                    }
                }
                let t_idx = nearest_index(t_axis, t);
                let n_f = grid.n_freq();
                let mut values =
                    Vec::with_capacity(grid.n_rx * grid.n_tx * n_f);
                for q in 0..grid.n_rx {
                    for p in 0..grid.n_tx {
                        values.extend_from_slice(grid.row(q, p, t_idx));
                    }
                }
                Ok((&grid.f_axis, values))
            }
            ChannelSource::Packages(packages) => {
                let pkg = packages
                    .iter()
                    .find(|w| w.covers(t))
                    .ok_or_else(|| {
                        ChemuError::OutOfRange(format!(
                            "t = {t} not covered by any projection window"
                        ))
                    })?;
                let n_f = pkg.n_freq();
                let mut values = Vec::with_capacity(pkg.n_rx * pkg.n_tx * n_f);
                for q in 0..pkg.n_rx {
                    for p in 0..pkg.n_tx {
                        for i in 0..n_f {
                            values.push(reconstruct(pkg, q, p, t, i)?);
                        }
                    }
                }
                Ok((&pkg.f_axis, values))
            }
        }
    }
}

fn nearest_index(axis: &[f64], t: f64) -> usize {
    if axis.len() <= 1 {
        return 0;
    }
    let step = axis[1] - axis[0];
    let idx = ((t - axis[0]) / step).round();
    (idx.max(0.0) as usize).min(axis.len() - 1)
}

/// Frequency of DFT bin `m`, wrapped to `[-1/(2*T_s), +1/(2*T_s))`.
pub fn bin_frequency(m: usize, n_fft: usize, t_s: f64) -> f64 {
    let m = m as f64;
    let n = n_fft as f64;
    if m < n / 2.0 {
        m / (n * t_s)
    } else {
        (m - n) / (n * t_s)
    }
}

/// Evaluate the channel at time `t` on the engine's `N_H` DFT bin
/// frequencies: values from the source's frequency axis are linearly
/// interpolated; bins beyond the source band follow the out-of-band
/// policy. Layout: row-major [q][p][m].
pub fn cfr_snapshot(
    source: &ChannelSource,
    config: &EngineConfig,
    t: f64,
) -> Result<Vec<Complex64>> {
    let (f_axis, values) = source.sample_at(t)?;
    let n_f = f_axis.len();
    let (n_rx, n_tx) = (source.n_rx(), source.n_tx());
    if n_rx != config.n_rx || n_tx != config.n_tx {
        return Err(ChemuError::DimensionMismatch(format!(
            "channel source is {n_rx}x{n_tx} but the engine expects {}x{}",
            config.n_rx, config.n_tx
        )));
    }
    let df = if n_f > 1 { f_axis[1] - f_axis[0] } else { 0.0 };
    // The source band extends one bin step past the last axis point; edge
    // frequencies clamp to the nearest bin value.
    let band_lo = f_axis[0];
    let band_hi = f_axis[n_f - 1] + df;
    let n_h = config.n_fft;
    let mut cfr = vec![Complex64::new(0.0, 0.0); n_rx * n_tx * n_h];
    for m in 0..n_h {
        let f = bin_frequency(m, n_h, config.t_s);
        let tol = 1e-9 * (band_hi - band_lo).abs().max(1.0);
        if f < band_lo - tol || f > band_hi + tol {
            match config.out_of_band {
                OutOfBandPolicy::Zero => continue,
                OutOfBandPolicy::Error => {
                    return Err(ChemuError::OutOfRange(format!(
                        "engine bin frequency {f} Hz exceeds the channel band \
                         [{band_lo}, {band_hi}] Hz"
                    )));
                }
            }
        }
        let (i0, i1, w) = if n_f == 1 {
            (0, 0, 0.0)
        } else {
            let pos = ((f - f_axis[0]) / df).clamp(0.0, (n_f - 1) as f64);
            let i0 = (pos.floor() as usize).min(n_f - 2);
            (i0, i0 + 1, pos - i0 as f64)
        };
        for qp in 0..n_rx * n_tx {
            let v0 = values[qp * n_f + i0];
            let v1 = values[qp * n_f + i1];
            cfr[qp * n_h + m] = v0 * (1.0 - w) + v1 * w;
        }
    }
    Ok(cfr)
}

/// Per-output-antenna overlap tails plus the block cursor.
#[derive(Debug, Clone)]
pub struct EngineState {
    /// One tail of `N_a` samples per output antenna.
    pub tails: Vec<Vec<Complex64>>,
    pub block_index: usize,
    /// Channel time of the next block.
    pub t: f64,
}

impl EngineState {
    pub fn new(config: &EngineConfig, t_start: f64) -> Self {
        EngineState {
            tails: vec![vec![Complex64::new(0.0, 0.0); config.n_overlap()]; config.n_rx],
            block_index: 0,
            t: t_start,
        }
    }
}

/// Operation counts for one processed block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockStats {
    pub block_index: usize,
    /// Forward plus inverse transforms of size N_H.
    pub transforms: usize,
    /// Complex multiply-accumulates against the CFR.
    pub macs: usize,
}

pub struct Engine {
    pub config: EngineConfig,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(config.n_fft);
        let ifft = planner.plan_fft_inverse(config.n_fft);
        Ok(Engine { config, fft, ifft })
    }

    /// Process one block of `P` input vectors (each `N_s` samples) against
    /// a CFR snapshot, producing `Q` output blocks of `N_s` samples and
    /// advancing the state by one channel period.
    pub fn process_block(
        &self,
        state: &mut EngineState,
        inputs: &[&[Complex64]],
        cfr: &[Complex64],
    ) -> Result<(Vec<Vec<Complex64>>, BlockStats)> {
        let cfg = &self.config;
        let (n_h, n_s) = (cfg.n_fft, cfg.n_block());
        if inputs.len() != cfg.n_tx {
            return Err(ChemuError::DimensionMismatch(format!(
                "expected {} input blocks, got {}",
                cfg.n_tx,
                inputs.len()
            )));
        }
        for (p, block) in inputs.iter().enumerate() {
            if block.len() != n_s {
                return Err(ChemuError::DimensionMismatch(format!(
                    "input block {p} has {} samples, expected N_s = {n_s}",
                    block.len()
                )));
            }
        }
        if cfr.len() != cfg.n_rx * cfg.n_tx * n_h {
            return Err(ChemuError::DimensionMismatch(format!(
                "CFR has {} values, expected {}",
                cfr.len(),
                cfg.n_rx * cfg.n_tx * n_h
            )));
        }

        let mut transforms = 0usize;
        let mut macs = 0usize;

        // Forward transforms of the zero-padded input blocks.
        let mut spectra = Vec::with_capacity(cfg.n_tx);
        for block in inputs {
            let mut buf = vec![Complex64::new(0.0, 0.0); n_h];
            buf[..n_s].copy_from_slice(block);
            self.fft.process(&mut buf);
            transforms += 1;
            spectra.push(buf);
        }

        let mut outputs = Vec::with_capacity(cfg.n_rx);
        for q in 0..cfg.n_rx {
            let mut r = vec![Complex64::new(0.0, 0.0); n_h];
            for (p, spectrum) in spectra.iter().enumerate() {
                let h = &cfr[(q * cfg.n_tx + p) * n_h..(q * cfg.n_tx + p + 1) * n_h];
                for m in 0..n_h {
                    r[m] += spectrum[m] * h[m];
                }
                macs += n_h;
            }
            self.ifft.process(&mut r);
            transforms += 1;
            let scale = 1.0 / n_h as f64;
            for x in r.iter_mut() {
                *x *= scale;
            }
            let mut out = r[..n_s].to_vec();
            for (i, tail) in state.tails[q].iter().enumerate() {
                out[i] += tail;
            }
            state.tails[q].copy_from_slice(&r[n_s..]);
            outputs.push(out);
        }

        let stats = BlockStats {
            block_index: state.block_index,
            transforms,
            macs,
        };
        state.block_index += 1;
        state.t += cfg.t_ch();
        Ok((outputs, stats))
    }
}

/// Streaming run output: one sample vector per Rx antenna plus per-block
/// operation counts.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub outputs: Vec<Vec<Complex64>>,
    pub stats: Vec<BlockStats>,
}

/// Stream `P` equal-length input signals through the channel. The CFR is
/// frozen within each block and refreshed at block boundaries. The final
/// partial block is zero-padded; the flushed tail extends each output to
/// `input length + N_a` samples.
pub fn run_stream(
    engine: &Engine,
    source: &ChannelSource,
    inputs: &[Vec<Complex64>],
) -> Result<RunOutput> {
    let cfg = &engine.config;
    if inputs.len() != cfg.n_tx {
        return Err(ChemuError::DimensionMismatch(format!(
            "expected {} input streams, got {}",
            cfg.n_tx,
            inputs.len()
        )));
    }
    let len = inputs.first().map_or(0, |s| s.len());
    if inputs.iter().any(|s| s.len() != len) {
        return Err(ChemuError::DimensionMismatch(
            "input streams must have equal length".to_string(),
        ));
    }
    let n_s = cfg.n_block();
    let n_blocks = len.div_ceil(n_s);
    let t_start = source.t_start();
    let mut state = EngineState::new(cfg, t_start);
    let mut outputs: Vec<Vec<Complex64>> = vec![Vec::with_capacity(len + cfg.n_overlap()); cfg.n_rx];
    let mut stats = Vec::with_capacity(n_blocks);

    let mut padded: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n_s]; cfg.n_tx];
    for i in 0..n_blocks {
        let start = i * n_s;
        let take = n_s.min(len - start);
        for (p, stream) in inputs.iter().enumerate() {
            padded[p][..take].copy_from_slice(&stream[start..start + take]);
            for x in padded[p][take..].iter_mut() {
                *x = Complex64::new(0.0, 0.0);
            }
        }
        let cfr = cfr_snapshot(source, cfg, state.t)?;
        let refs: Vec<&[Complex64]> = padded.iter().map(|b| b.as_slice()).collect();
        let (block_out, block_stats) = engine.process_block(&mut state, &refs, &cfr)?;
        for (q, out) in block_out.into_iter().enumerate() {
            outputs[q].extend(out);
        }
        stats.push(block_stats);
    }
    for (q, tail) in state.tails.iter().enumerate() {
        outputs[q].extend_from_slice(tail);
        outputs[q].truncate(len + cfg.n_overlap());
    }
    Ok(RunOutput { outputs, stats })
}
