//! Validation metrics: CTF reconstruction error, time-dependent Doppler
//! PSD, and time-dependent delay PSD.

use crate::error::{ChemuError, Result};
use crate::gbsm::CtfGrid;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;
use std::io::Write;

/// dB floor keeping error traces finite.
pub const DB_FLOOR: f64 = -300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Doppler,
    Delay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowShape {
    Gaussian,
    Rect,
}

/// STFT window used for the Doppler PSD. The Gaussian shape uses
/// `sigma = length / 6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub shape: WindowShape,
    pub length: usize,
}

impl WindowSpec {
    pub fn gaussian(length: usize) -> Self {
        WindowSpec {
            shape: WindowShape::Gaussian,
            length,
        }
    }

    fn weights(&self) -> Vec<f64> {
        let l = self.length as isize;
        match self.shape {
            WindowShape::Rect => vec![1.0; self.length],
            WindowShape::Gaussian => {
                let sigma = self.length as f64 / 6.0;
                (0..l)
                    .map(|k| {
                        let m = (k - l / 2) as f64;
                        (-m * m / (2.0 * sigma * sigma)).exp()
                    })
                    .collect()
            }
        }
    }
}

/// Time-indexed PSD surface over Doppler frequency or path delay.
#[derive(Debug, Clone)]
pub struct SpectrumSeries {
    pub kind: SpectrumKind,
    /// Row-major [t][bin], nonnegative.
    pub surface: Vec<f64>,
    pub t_axis: Vec<f64>,
    /// Hz (Doppler, two-sided) or seconds (delay, nonnegative).
    pub bin_axis: Vec<f64>,
    pub window: Option<WindowSpec>,
}

impl SpectrumSeries {
    pub fn n_bins(&self) -> usize {
        self.bin_axis.len()
    }

    pub fn row(&self, t_idx: usize) -> &[f64] {
        &self.surface[t_idx * self.n_bins()..(t_idx + 1) * self.n_bins()]
    }

    /// Index of the strongest bin at one time step.
    pub fn peak_bin(&self, t_idx: usize) -> usize {
        let row = self.row(t_idx);
        let mut best = 0;
        for (i, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = i;
            }
        }
        best
    }
}

/// CTF reconstruction error over time.
#[derive(Debug, Clone)]
pub struct ErrorTrace {
    /// Literal mean complex error per time step: `(1/B) * sum_f (H - H_hat) * df`.
    pub e_mean: Vec<Complex64>,
    /// Mean-square error per time step relative to the grid's mean power, dB.
    pub e_power_db: Vec<f64>,
    pub t_axis: Vec<f64>,
}

impl ErrorTrace {
    pub fn max_power_db(&self) -> f64 {
        self.e_power_db.iter().cloned().fold(DB_FLOOR, f64::max)
    }
}

/// Compare an original and a reconstructed grid.
///
/// `e_mean(t)` averages the complex difference over frequency (and, for
/// MIMO grids, over subchannels); `e_power_db(t)` is
/// `10*log10(mean_{q,p,f} |H - H_hat|^2 / mean_{q,p,t,f} |H|^2)`,
/// floored at -300 dB.
pub fn ctf_error(h: &CtfGrid, h_hat: &CtfGrid) -> Result<ErrorTrace> {
    if !h.same_axes(h_hat) {
        return Err(ChemuError::DimensionMismatch(
            "grids have different axes".to_string(),
        ));
    }
    let (n_t, n_f) = (h.n_time(), h.n_freq());
    let n_sub = h.n_rx * h.n_tx;
    let mean_power: f64 =
        h.data.iter().map(|x| x.norm_sqr()).sum::<f64>() / h.data.len() as f64;
    let mut e_mean = Vec::with_capacity(n_t);
    let mut e_power_db = Vec::with_capacity(n_t);
    for t in 0..n_t {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut power = 0.0;
        for q in 0..h.n_rx {
            for p in 0..h.n_tx {
                let row = h.row(q, p, t);
                let row_hat = h_hat.row(q, p, t);
                for i in 0..n_f {
                    let diff = row[i] - row_hat[i];
                    acc += diff;
                    power += diff.norm_sqr();
                }
            }
        }
        e_mean.push(acc / (n_f * n_sub) as f64);
        let ratio = if mean_power > 0.0 {
            power / (n_f * n_sub) as f64 / mean_power
        } else {
            0.0
        };
        let db = if ratio > 0.0 {
            (10.0 * ratio.log10()).max(DB_FLOOR)
        } else {
            DB_FLOOR
        };
        e_power_db.push(db);
    }
    Ok(ErrorTrace {
        e_mean,
        e_power_db,
        t_axis: h.t_axis.clone(),
    })
}

/// Lag product averaged over a `+/- n_avg`-sample neighborhood of `t_idx`,
/// skipping pairs that fall off the series. Returns `0` if no valid pair
/// exists for a lag.
fn lag_product(series: &[Complex64], t_idx: usize, lag: isize, n_avg: usize) -> Complex64 {
    let len = series.len() as isize;
    let t = t_idx as isize;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut count = 0usize;
    for t_prime in (t - n_avg as isize)..=(t + n_avg as isize) {
        let shifted = t_prime + lag;
        if t_prime < 0 || t_prime >= len || shifted < 0 || shifted >= len {
            continue;
        }
        acc += series[shifted as usize] * series[t_prime as usize].conj();
        count += 1;
    }
    if count > 0 {
        acc / count as f64
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Local temporal autocorrelation estimate at `t_idx` for the given lags
/// (in samples): the lag product `H(t + dt) * conj(H(t))` averaged over a
/// `+/- n_avg`-sample neighborhood. Errors if a lag falls outside the
/// series at `t_idx` itself.
pub fn temporal_acf(
    series: &[Complex64],
    t_idx: usize,
    lags: &[isize],
    n_avg: usize,
) -> Result<Vec<Complex64>> {
    let len = series.len() as isize;
    for &lag in lags {
        let shifted = t_idx as isize + lag;
        if shifted < 0 || shifted >= len {
            return Err(ChemuError::OutOfRange(format!(
                "lag {lag} from t index {t_idx} leaves the series"
            )));
        }
    }
    Ok(lags
        .iter()
        .map(|&lag| lag_product(series, t_idx, lag, n_avg))
        .collect())
}

/// Default autocorrelation averaging half-width, samples.
pub const DEFAULT_ACF_AVG: usize = 16;

/// Time-dependent Doppler PSD: the windowed discrete-time Fourier transform
/// of the local temporal autocorrelation, evaluated at every time step.
/// Lags near the series edges that have no valid sample pair contribute
/// zero. Bin axis is two-sided, `(k - L/2) / (L * t_ch)`.
pub fn doppler_psd(
    series: &[Complex64],
    t_step: f64,
    window: &WindowSpec,
    n_avg: usize,
) -> Result<SpectrumSeries> {
    let l = window.length;
    if l < 2 || l > series.len() {
        return Err(ChemuError::InvalidConfig(format!(
            "window length {l} invalid for a {}-sample series",
            series.len()
        )));
    }
    let weights = window.weights();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(l);
    let half = (l / 2) as isize;
    let scale = 1.0 / (l as f64).sqrt();
    let mut surface = Vec::with_capacity(series.len() * l);
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    for t_idx in 0..series.len() {
        for x in buf.iter_mut() {
            *x = Complex64::new(0.0, 0.0);
        }
        for k in 0..l {
            let lag = k as isize - half;
            let r = lag_product(series, t_idx, lag, n_avg);
            buf[lag.rem_euclid(l as isize) as usize] = r * weights[k];
        }
        fft.process(&mut buf);
        // fftshift to a two-sided axis.
        for k in 0..l {
            let src = (k + l - l / 2) % l;
            surface.push(buf[src].norm() * scale);
        }
    }
    let bin_axis: Vec<f64> = (0..l)
        .map(|k| (k as isize - half) as f64 / (l as f64 * t_step))
        .collect();
    Ok(SpectrumSeries {
        kind: SpectrumKind::Doppler,
        surface,
        t_axis: (0..series.len()).map(|i| i as f64 * t_step).collect(),
        bin_axis,
        window: Some(*window),
    })
}

/// Frequency correlation of one grid row at the given nonnegative bin lags:
/// `R(df) = mean_f H(f) * conj(H(f + df))` over the bins where both samples
/// exist.
pub fn freq_corr(row: &[Complex64], lags: &[usize]) -> Result<Vec<Complex64>> {
    let n = row.len();
    let mut out = Vec::with_capacity(lags.len());
    for &lag in lags {
        if lag >= n {
            return Err(ChemuError::OutOfRange(format!(
                "frequency lag {lag} exceeds the {n}-bin band"
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for f in 0..n - lag {
            acc += row[f] * row[f + lag].conj();
        }
        out.push(acc / (n - lag) as f64);
    }
    Ok(out)
}

/// Time-dependent delay PSD of one subchannel: the magnitude of the
/// transform of the circular frequency correlation over all bin lags.
/// Delay axis has resolution `1/B` over `[0, I/B)`.
pub fn delay_psd(grid: &CtfGrid, q: usize, p: usize) -> Result<SpectrumSeries> {
    let n_f = grid.n_freq();
    if n_f < 2 {
        return Err(ChemuError::InvalidConfig(
            "delay PSD needs at least 2 frequency bins".to_string(),
        ));
    }
    if q >= grid.n_rx || p >= grid.n_tx {
        return Err(ChemuError::DimensionMismatch(format!(
            "(q={q}, p={p}) outside grid dimensions"
        )));
    }
    let df = grid.f_axis[1] - grid.f_axis[0];
    let band = df * n_f as f64;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n_f);
    let scale = 1.0 / (n_f as f64).sqrt();
    let mut surface = Vec::with_capacity(grid.n_time() * n_f);
    let mut corr = vec![Complex64::new(0.0, 0.0); n_f];
    for t in 0..grid.n_time() {
        let row = grid.row(q, p, t);
        for (m, c) in corr.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for f in 0..n_f {
                acc += row[f] * row[(f + m) % n_f].conj();
            }
            *c = acc / n_f as f64;
        }
        fft.process(&mut corr);
        for value in corr.iter() {
            surface.push(value.norm() * scale);
        }
    }
    Ok(SpectrumSeries {
        kind: SpectrumKind::Delay,
        surface,
        t_axis: grid.t_axis.clone(),
        bin_axis: (0..n_f).map(|n| n as f64 / band).collect(),
        window: None,
    })
}

/// Single-path channel row helper for tests and examples: the transfer
/// function of a unit-power ray at `delay` on the given frequency axis.
pub fn single_ray_row(f_c: f64, f_axis: &[f64], delay: f64) -> Vec<Complex64> {
    f_axis
        .iter()
        .map(|&f| Complex64::from_polar(1.0, TAU * (f_c - f) * delay))
        .collect()
}

/// Long-format CSV: `t,bin,value`.
pub fn write_spectrum_csv<W: Write>(w: &mut W, series: &SpectrumSeries) -> std::io::Result<()> {
    writeln!(w, "t,bin,value")?;
    for (t_idx, &t) in series.t_axis.iter().enumerate() {
        let row = series.row(t_idx);
        for (b_idx, &bin) in series.bin_axis.iter().enumerate() {
            writeln!(w, "{t},{bin},{}", row[b_idx])?;
        }
    }
    Ok(())
}

/// CSV: `t,e_mean_re,e_mean_im,e_power_db`.
pub fn write_error_csv<W: Write>(w: &mut W, trace: &ErrorTrace) -> std::io::Result<()> {
    writeln!(w, "t,e_mean_re,e_mean_im,e_power_db")?;
    for (i, &t) in trace.t_axis.iter().enumerate() {
        writeln!(
            w,
            "{t},{},{},{}",
            trace.e_mean[i].re, trace.e_mean[i].im, trace.e_power_db[i]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn filled_grid(n_rx: usize, n_tx: usize, n_t: usize, n_f: usize, seed: u64) -> CtfGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t_axis: Vec<f64> = (0..n_t).map(|i| i as f64 * 1e-3).collect();
        let band = 20e6;
        let f_axis: Vec<f64> = (0..n_f)
            .map(|i| -band / 2.0 + i as f64 * band / n_f as f64)
            .collect();
        let mut grid = CtfGrid::zeros(n_rx, n_tx, t_axis, f_axis, 2.6e9);
        for h in grid.data.iter_mut() {
            *h = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        grid
    }

    #[test]
    fn identical_grids_report_the_db_floor() {
        let grid = filled_grid(1, 1, 10, 8, 1);
        let trace = ctf_error(&grid, &grid).unwrap();
        for (m, db) in trace.e_mean.iter().zip(&trace.e_power_db) {
            assert_eq!(*m, Complex64::new(0.0, 0.0));
            assert_eq!(*db, DB_FLOOR);
        }
        assert_eq!(trace.max_power_db(), DB_FLOOR);
    }

    #[test]
    fn zero_reconstruction_sits_at_zero_db() {
        let grid = filled_grid(1, 1, 12, 8, 2);
        let zero = CtfGrid::zeros(
            1,
            1,
            grid.t_axis.clone(),
            grid.f_axis.clone(),
            grid.f_c,
        );
        let trace = ctf_error(&grid, &zero).unwrap();
        // Per-t power error relative to the grid mean power: averages to
        // exactly 0 dB across the run.
        let mean_linear: f64 = trace
            .e_power_db
            .iter()
            .map(|db| 10f64.powf(db / 10.0))
            .sum::<f64>()
            / trace.e_power_db.len() as f64;
        assert!((10.0 * mean_linear.log10()).abs() < 1e-9);
    }

    #[test]
    fn mean_error_is_translation_invariant() {
        let h = filled_grid(1, 1, 10, 8, 3);
        let h_hat = filled_grid(1, 1, 10, 8, 4);
        let shift = filled_grid(1, 1, 10, 8, 5);
        let base = ctf_error(&h, &h_hat).unwrap();
        let mut h2 = h.clone();
        let mut h_hat2 = h_hat.clone();
        for i in 0..h2.data.len() {
            h2.data[i] += shift.data[i];
            h_hat2.data[i] += shift.data[i];
        }
        let shifted = ctf_error(&h2, &h_hat2).unwrap();
        for (a, b) in base.e_mean.iter().zip(&shifted.e_mean) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn axis_mismatch_is_rejected() {
        let a = filled_grid(1, 1, 10, 8, 6);
        let b = filled_grid(1, 1, 10, 16, 7);
        assert!(ctf_error(&a, &b).is_err());
    }

    #[test]
    fn zero_lag_acf_is_nonnegative_power() {
        let series: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let r = temporal_acf(&series, 30, &[0], 8).unwrap();
        assert!(r[0].im.abs() < 1e-12);
        assert!(r[0].re >= 0.0);
    }

    #[test]
    fn constant_series_has_flat_acf() {
        let c = Complex64::new(0.6, -0.8);
        let series = vec![c; 50];
        let r = temporal_acf(&series, 25, &[-5, 0, 3, 10], 6).unwrap();
        for value in r {
            assert!((value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn chirp_series_keeps_unit_acf_modulus() {
        let t_step = 1e-3;
        let series: Vec<Complex64> = (0..256)
            .map(|i| {
                let t = i as f64 * t_step;
                Complex64::from_polar(1.0, TAU * (40.0 * t + 0.5 * 300.0 * t * t))
            })
            .collect();
        // The lag product of a single chirp has unit modulus at every lag
        // before neighborhood averaging; with averaging it stays close.
        let r = temporal_acf(&series, 128, &[-8, -1, 0, 1, 8], 0).unwrap();
        for value in r {
            assert!((value.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_series_lag_is_rejected() {
        let series = vec![Complex64::new(1.0, 0.0); 16];
        assert!(temporal_acf(&series, 15, &[5], 2).is_err());
        assert!(temporal_acf(&series, 0, &[-1], 2).is_err());
    }

    #[test]
    fn static_series_peaks_at_zero_doppler() {
        let series = vec![Complex64::new(0.7, 0.2); 128];
        let window = WindowSpec::gaussian(32);
        let psd = doppler_psd(&series, 1e-3, &window, 4).unwrap();
        for t_idx in [0, 64, 127] {
            let peak = psd.peak_bin(t_idx);
            assert_eq!(psd.bin_axis[peak], 0.0);
        }
    }

    #[test]
    fn tone_peaks_at_its_own_frequency() {
        let t_step = 1e-3;
        let l = 64;
        // Exactly on a bin: f0 = k / (L * t_step).
        let f0 = 6.0 / (l as f64 * t_step);
        let series: Vec<Complex64> = (0..256)
            .map(|i| Complex64::from_polar(1.0, TAU * f0 * i as f64 * t_step))
            .collect();
        let window = WindowSpec::gaussian(l);
        let psd = doppler_psd(&series, t_step, &window, 8).unwrap();
        let t_idx = 128;
        let peak = psd.peak_bin(t_idx);
        assert!((psd.bin_axis[peak] - f0).abs() < 1e-9);
    }

    #[test]
    fn frequency_shift_moves_the_peak_exactly() {
        let t_step = 1e-3;
        let l = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let base: Vec<Complex64> = (0..256)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let shift_bins = 5;
        let f0 = shift_bins as f64 / (l as f64 * t_step);
        let shifted: Vec<Complex64> = base
            .iter()
            .enumerate()
            .map(|(i, h)| h * Complex64::from_polar(1.0, TAU * f0 * i as f64 * t_step))
            .collect();
        let window = WindowSpec::gaussian(l);
        let a = doppler_psd(&base, t_step, &window, 8).unwrap();
        let b = doppler_psd(&shifted, t_step, &window, 8).unwrap();
        let t_idx = 130;
        let peak_a = a.peak_bin(t_idx) as isize;
        let peak_b = b.peak_bin(t_idx) as isize;
        assert_eq!(peak_b - peak_a, shift_bins);
    }

    #[test]
    fn psd_surfaces_are_nonnegative_and_finite() {
        let grid = filled_grid(1, 1, 64, 16, 9);
        let series = grid.time_series(0, 0, grid.zero_freq_bin());
        let doppler = doppler_psd(&series, 1e-3, &WindowSpec::gaussian(32), 8).unwrap();
        let delay = delay_psd(&grid, 0, 0).unwrap();
        for s in [&doppler, &delay] {
            assert!(s.surface.iter().all(|v| *v >= 0.0 && v.is_finite()));
            assert!(s.bin_axis.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn single_ray_frequency_correlation_has_linear_phase() {
        let band = 20e6;
        let n_f = 64;
        let f_axis: Vec<f64> = (0..n_f)
            .map(|i| -band / 2.0 + i as f64 * band / n_f as f64)
            .collect();
        let tau = 500e-9;
        let row = single_ray_row(2.6e9, &f_axis, tau);
        let df = band / n_f as f64;
        let r = freq_corr(&row, &[0, 1, 2, 5]).unwrap();
        for (lag, value) in [0usize, 1, 2, 5].iter().zip(&r) {
            assert!((value.norm() - 1.0).abs() < 1e-12);
            let expected = TAU * tau * (*lag as f64) * df;
            let diff = (value.arg() - expected).rem_euclid(TAU);
            assert!(
                diff < 1e-9 || TAU - diff < 1e-9,
                "lag {lag}: phase {} vs {expected}",
                value.arg()
            );
        }
        // Flat channel: R equals the constant power.
        let c = Complex64::new(0.3, 0.4);
        let flat = vec![c; n_f];
        let r = freq_corr(&flat, &[0, 3]).unwrap();
        for value in r {
            assert!((value - Complex64::new(0.25, 0.0)).norm() < 1e-12);
        }
        // Zero channel: zero correlation. Out-of-band lag: rejected.
        let zero = vec![Complex64::new(0.0, 0.0); n_f];
        assert_eq!(freq_corr(&zero, &[2]).unwrap()[0], Complex64::new(0.0, 0.0));
        assert!(freq_corr(&flat, &[n_f]).is_err());
    }

    #[test]
    fn single_ray_delay_psd_peaks_on_its_delay_bin() {
        let band = 20e6;
        let n_f = 64;
        let f_axis: Vec<f64> = (0..n_f)
            .map(|i| -band / 2.0 + i as f64 * band / n_f as f64)
            .collect();
        // On-grid delay: bin 10 of 64 at 1/B resolution.
        let tau = 10.0 / band;
        let mut grid = CtfGrid::zeros(1, 1, vec![0.0, 1e-3], f_axis, 2.6e9);
        let row = single_ray_row(2.6e9, &grid.f_axis, tau);
        for t in 0..2 {
            let start = grid.idx(0, 0, t, 0);
            grid.data[start..start + n_f].copy_from_slice(&row);
        }
        let psd = delay_psd(&grid, 0, 0).unwrap();
        let peak = psd.peak_bin(0);
        assert!((psd.bin_axis[peak] - tau).abs() < 0.5 / band);
        let row0 = psd.row(0);
        for (i, v) in row0.iter().enumerate() {
            if i != peak {
                // On-grid single ray: all other bins are pure leakage floor.
                assert!(*v < row0[peak] * 10f64.powf(-13.0 / 20.0));
            }
        }
    }

    #[test]
    fn two_equal_rays_give_two_equal_peaks() {
        let band = 20e6;
        let n_f = 64;
        let f_axis: Vec<f64> = (0..n_f)
            .map(|i| -band / 2.0 + i as f64 * band / n_f as f64)
            .collect();
        let tau1 = 8.0 / band;
        let tau2 = 20.0 / band;
        let mut grid = CtfGrid::zeros(1, 1, vec![0.0], f_axis, 2.6e9);
        let r1 = single_ray_row(2.6e9, &grid.f_axis, tau1);
        let r2 = single_ray_row(2.6e9, &grid.f_axis, tau2);
        for i in 0..n_f {
            grid.data[i] = r1[i] + r2[i];
        }
        let psd = delay_psd(&grid, 0, 0).unwrap();
        let row = psd.row(0);
        let bin1 = (tau1 * band).round() as usize;
        let bin2 = (tau2 * band).round() as usize;
        let ratio_db = 10.0 * (row[bin1] / row[bin2]).log10();
        assert!(ratio_db.abs() < 0.5, "peak imbalance {ratio_db} dB");
        for (i, v) in row.iter().enumerate() {
            if i != bin1 && i != bin2 {
                assert!(*v < row[bin1] * 0.5);
            }
        }
    }

    #[test]
    fn delay_psd_satisfies_parseval() {
        let grid = filled_grid(1, 1, 4, 32, 10);
        let psd = delay_psd(&grid, 0, 0).unwrap();
        let n_f = grid.n_freq();
        for t in 0..grid.n_time() {
            let row = grid.row(0, 0, t);
            // Rebuild the circular frequency correlation the PSD transforms.
            let mut corr_energy = 0.0;
            for m in 0..n_f {
                let mut acc = Complex64::new(0.0, 0.0);
                for f in 0..n_f {
                    acc += row[f] * row[(f + m) % n_f].conj();
                }
                corr_energy += (acc / n_f as f64).norm_sqr();
            }
            let psd_energy: f64 = psd.row(t).iter().map(|v| v * v).sum();
            assert!(
                (psd_energy - corr_energy).abs() / corr_energy < 1e-8,
                "t = {t}: {psd_energy} vs {corr_energy}"
            );
        }
    }

    #[test]
    fn csv_emitters_produce_long_format() {
        let grid = filled_grid(1, 1, 2, 4, 11);
        let psd = delay_psd(&grid, 0, 0).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &psd).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,bin,value");
        assert_eq!(lines.len(), 1 + 2 * 4);

        let trace = ctf_error(&grid, &grid).unwrap();
        let mut buf = Vec::new();
        write_error_csv(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,e_mean_re,e_mean_im,e_power_db\n"));
        assert_eq!(text.lines().count(), 1 + 2);
    }
}
