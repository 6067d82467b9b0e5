//! Chirp-subspace projection of subchannel fading.
//!
//! Each subchannel's fading over a time window is expressed as a linear
//! combination of K chirp signals `b_k(t) = exp(j*2*pi*(alpha_k*t +
//! beta_k*t^2/2))`, with `t` measured from the window start so that
//! `alpha_k` is the chirp's frequency where the window begins. The chirps
//! are orthogonalized by classical Gram-Schmidt,
//! the fading is projected onto the orthogonal set, and the coefficients are
//! mapped back to the chirp basis. The compact package `(A, alpha_k,
//! beta_k)` replaces the raw fading samples on the engine side.

use crate::error::{ChemuError, Result};
use crate::gbsm::{doppler_approx, ClusterPair, CtfGrid, ScenarioConfig};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Chirp parameters: initial frequency and chirp rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpParam {
    /// Frequency at the window start, Hz.
    pub alpha: f64,
    /// Chirp rate, Hz/s.
    pub beta: f64,
}

impl ChirpParam {
    /// Evaluate the chirp at time t measured from the window start.
    pub fn eval(&self, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, TAU * (self.alpha * t + self.beta * t * t / 2.0))
    }
}

/// Parameter box the chirp grid is placed over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpRanges {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
}

/// K chirps over one projection window.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpBasis {
    pub chirps: Vec<ChirpParam>,
    /// Window start, s (absolute scenario time).
    pub t0: f64,
    /// Window length, s.
    pub t_w: f64,
    pub n_time_samples: usize,
}

impl ChirpBasis {
    pub fn k(&self) -> usize {
        self.chirps.len()
    }

    pub fn t_step(&self) -> f64 {
        self.t_w / self.n_time_samples as f64
    }

    /// Sample time of row n.
    pub fn t_at(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.t_step()
    }

    /// Evaluate all chirps on the window time grid: column-major n x K.
    pub fn eval_matrix(&self) -> ColMatrix {
        let n = self.n_time_samples;
        let mut psi = ColMatrix::zeros(n, self.k());
        for (k, chirp) in self.chirps.iter().enumerate() {
            for row in 0..n {
                psi[(row, k)] = chirp.eval(self.t_at(row) - self.t0);
            }
        }
        psi
    }
}

/// Dense complex matrix, column-major so Gram-Schmidt works on contiguous
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex64>,
}

impl ColMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ColMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn col(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// `self * other`.
    pub fn matmul(&self, other: &ColMatrix) -> ColMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = ColMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for k in 0..other.rows {
                let x = other[(k, j)];
                if x == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..self.rows {
                    out[(i, j)] += self[(i, k)] * x;
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for ColMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[c * self.rows + r]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ColMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[c * self.rows + r]
    }
}

/// Discrete inner product over the window time grid: `sum u_n * conj(v_n)`.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

fn norm(u: &[Complex64]) -> f64 {
    u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Chirp parameter ranges from the ray geometry of a cluster snapshot, per
/// the linear-Doppler approximation: `alpha` spans the initial Doppler
/// frequencies of all rays and Rx elements, `beta` their Doppler slopes.
/// Both ranges are widened by a 5% margin on each side.
pub fn derive_chirp_ranges(
    config: &ScenarioConfig,
    clusters: &[ClusterPair],
) -> Result<ChirpRanges> {
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    for cluster in clusters {
        for m in 0..cluster.n_rays() {
            let scatterer = cluster.rx_side.scatterer_position(m, 0.0);
            for q in 0..config.rx_array.n_elements {
                let f0 = doppler_approx(&config.rx_array, scatterer, q, 0.0, config.f_c)?;
                let f1 = doppler_approx(&config.rx_array, scatterer, q, 1.0, config.f_c)?;
                alphas.push(f0);
                betas.push(f1 - f0);
            }
        }
    }
    if alphas.is_empty() {
        return Err(ChemuError::InvalidConfig(
            "cannot derive chirp ranges from an empty ray set".to_string(),
        ));
    }
    let minmax = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let margin = 0.05 * (hi - lo);
        (lo - margin, hi + margin)
    };
    Ok(ChirpRanges {
        alpha: minmax(&alphas),
        beta: minmax(&betas),
    })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo + hi) / 2.0];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

/// Place K chirps on a near-square grid over the parameter box:
/// `K_alpha = ceil(sqrt(K))` alpha values times `ceil(K / K_alpha)` beta
/// values, uniformly spaced with endpoints included, truncated to K in
/// beta-major order. Deterministic.
pub fn build_basis(
    k: usize,
    ranges: &ChirpRanges,
    t0: f64,
    t_w: f64,
    n_time_samples: usize,
) -> Result<ChirpBasis> {
    if k == 0 {
        return Err(ChemuError::InvalidConfig("K must be at least 1".to_string()));
    }
    if k > n_time_samples {
        return Err(ChemuError::InvalidConfig(format!(
            "K = {k} exceeds the window's {n_time_samples} time samples"
        )));
    }
    let k_alpha = (k as f64).sqrt().ceil() as usize;
    let k_beta = k.div_ceil(k_alpha);
    let alphas = linspace(ranges.alpha.0, ranges.alpha.1, k_alpha);
    let betas = linspace(ranges.beta.0, ranges.beta.1, k_beta);
    let mut chirps = Vec::with_capacity(k);
    'outer: for &beta in &betas {
        for &alpha in &alphas {
            chirps.push(ChirpParam { alpha, beta });
            if chirps.len() == k {
                break 'outer;
            }
        }
    }
    for i in 0..chirps.len() {
        for j in 0..i {
            if chirps[i] == chirps[j] {
                return Err(ChemuError::InvalidConfig(format!(
                    "degenerate chirp ranges cannot host {k} distinct chirps"
                )));
            }
        }
    }
    Ok(ChirpBasis {
        chirps,
        t0,
        t_w,
        n_time_samples,
    })
}

/// Classical Gram-Schmidt orthogonalization of the chirp matrix.
///
/// Returns `(Phi, G)` with `Phi = Psi * G`, `Phi` columns pairwise
/// orthogonal (unnormalized), and `G` the inverse of the unit upper
/// triangular coefficient matrix, computed by back substitution. Fails
/// with [`ChemuError::NearDependentBasis`] when a residual column's norm
/// falls below `1e-10` times the first column's norm.
pub fn gram_schmidt(psi: &ColMatrix) -> Result<(ColMatrix, ColMatrix)> {
    let (n, k) = (psi.rows, psi.cols);
    assert!(k >= 1 && n >= 1);
    let threshold = 1e-10 * norm(psi.col(0));
    let mut phi = psi.clone();
    // c[(j, m)] = <b_m, g_j> / <g_j, g_j> for j < m, 1 on the diagonal.
    let mut c = ColMatrix::zeros(k, k);
    for j in 0..k {
        c[(j, j)] = Complex64::new(1.0, 0.0);
    }
    let mut g_norms = vec![0.0f64; k];
    for m in 0..k {
        for j in 0..m {
            let cjm = inner(psi.col(m), phi.col(j)) / g_norms[j];
            c[(j, m)] = cjm;
            let (head, tail) = phi.data.split_at_mut(m * n);
            let gj = &head[j * n..(j + 1) * n];
            let gm = &mut tail[..n];
            for (x, y) in gm.iter_mut().zip(gj) {
                *x -= cjm * y;
            }
        }
        let pivot = norm(phi.col(m));
        if pivot <= threshold {
            return Err(ChemuError::NearDependentBasis {
                column: m,
                pivot,
                threshold,
            });
        }
        g_norms[m] = inner(phi.col(m), phi.col(m)).re;
    }
    // G = C^{-1} by back substitution on each column of the identity.
    let mut g = ColMatrix::zeros(k, k);
    for col in 0..k {
        g[(col, col)] = Complex64::new(1.0, 0.0);
        for row in (0..col).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in row + 1..=col {
                acc += c[(row, j)] * g[(j, col)];
            }
            g[(row, col)] = -acc;
        }
    }
    Ok((phi, g))
}

/// Project fading samples onto the orthogonalized basis and map the
/// coefficients back to the chirp basis: `X_ji = <h_i, g_j> / <g_j, g_j>`,
/// `A = G * X`. The reconstruction `Psi * A` is the orthogonal projection
/// of each column of `h` onto the chirp span.
pub fn project(h: &ColMatrix, phi: &ColMatrix, g: &ColMatrix) -> Result<ColMatrix> {
    if h.rows != phi.rows {
        return Err(ChemuError::DimensionMismatch(format!(
            "fading has {} time samples but the basis has {}",
            h.rows, phi.rows
        )));
    }
    let k = phi.cols;
    if g.rows != k || g.cols != k {
        return Err(ChemuError::DimensionMismatch(
            "G does not match the basis dimension".to_string(),
        ));
    }
    let mut x = ColMatrix::zeros(k, h.cols);
    for i in 0..h.cols {
        for j in 0..k {
            let gj = phi.col(j);
            x[(j, i)] = inner(h.col(i), gj) / inner(gj, gj).re;
        }
    }
    Ok(g.matmul(&x))
}

/// Compressed channel for one projection window: the shared chirp table
/// plus one K x I coefficient matrix per subchannel.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPackage {
    pub n_rx: usize,
    pub n_tx: usize,
    pub chirps: Vec<ChirpParam>,
    pub t0: f64,
    pub t_w: f64,
    pub n_time_samples: usize,
    pub f_axis: Vec<f64>,
    pub f_c: f64,
    pub normalization: f64,
    /// Row-major [q][p][k][i].
    pub coeffs: Vec<Complex64>,
}

impl ProjectionPackage {
    pub fn k(&self) -> usize {
        self.chirps.len()
    }

    pub fn n_freq(&self) -> usize {
        self.f_axis.len()
    }

    pub fn t_step(&self) -> f64 {
        self.t_w / self.n_time_samples as f64
    }

    #[inline]
    pub fn coeff(&self, q: usize, p: usize, k: usize, i: usize) -> Complex64 {
        self.coeffs[((q * self.n_tx + p) * self.k() + k) * self.n_freq() + i]
    }

    pub fn covers(&self, t: f64) -> bool {
        let slack = 1e-9 * self.t_w.max(1.0);
        t >= self.t0 - slack && t <= self.t0 + self.t_w + slack
    }

    /// Number of complex payload values across all subchannels.
    pub fn payload_complex_count(&self) -> usize {
        self.coeffs.len()
    }
}

/// Evaluate the reconstructed CTF of subchannel (q, p) at continuous time
/// `t` and frequency bin `f_bin`:
/// `sum_k a_k(f) * exp(j*2*pi*(alpha_k*t + beta_k*t^2/2))`.
pub fn reconstruct(
    package: &ProjectionPackage,
    q: usize,
    p: usize,
    t: f64,
    f_bin: usize,
) -> Result<Complex64> {
    if !package.covers(t) {
        return Err(ChemuError::OutOfRange(format!(
            "t = {t} outside window [{}, {}]",
            package.t0,
            package.t0 + package.t_w
        )));
    }
    if q >= package.n_rx || p >= package.n_tx || f_bin >= package.n_freq() {
        return Err(ChemuError::DimensionMismatch(format!(
            "(q={q}, p={p}, f_bin={f_bin}) outside package dimensions"
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, chirp) in package.chirps.iter().enumerate() {
        acc += package.coeff(q, p, k, f_bin) * chirp.eval(t - package.t0);
    }
    Ok(acc)
}

/// Project every subchannel of the grid window by window. Windows are
/// contiguous spans of `window_len` samples on the grid's time axis (the
/// final window absorbs any shorter remainder only if it still holds at
/// least K samples). The basis is built once per window and shared across
/// subchannels.
pub fn project_grid(
    ctf: &CtfGrid,
    k: usize,
    window_len: usize,
    ranges: &ChirpRanges,
) -> Result<Vec<ProjectionPackage>> {
    let n_t = ctf.n_time();
    let n_f = ctf.n_freq();
    if window_len == 0 || window_len > n_t {
        return Err(ChemuError::InvalidConfig(format!(
            "window length {window_len} does not fit a {n_t}-sample grid"
        )));
    }
    let t_step = if n_t > 1 {
        ctf.t_axis[1] - ctf.t_axis[0]
    } else {
        1.0
    };
    let mut packages = Vec::new();
    let mut start = 0;
    while start < n_t {
        let len = window_len.min(n_t - start);
        let basis = build_basis(
            k,
            ranges,
            ctf.t_axis[start],
            len as f64 * t_step,
            len,
        )?;
        let psi = basis.eval_matrix();
        let (phi, g) = gram_schmidt(&psi)?;
        let mut coeffs = Vec::with_capacity(ctf.n_rx * ctf.n_tx * k * n_f);
        for q in 0..ctf.n_rx {
            for p in 0..ctf.n_tx {
                let mut h = ColMatrix::zeros(len, n_f);
                for (w, t_idx) in (start..start + len).enumerate() {
                    let row = ctf.row(q, p, t_idx);
                    for i in 0..n_f {
                        h[(w, i)] = row[i];
                    }
                }
                let a = project(&h, &phi, &g)?;
                for kk in 0..k {
                    for i in 0..n_f {
                        coeffs.push(a[(kk, i)]);
                    }
                }
            }
        }
        packages.push(ProjectionPackage {
            n_rx: ctf.n_rx,
            n_tx: ctf.n_tx,
            chirps: basis.chirps.clone(),
            t0: basis.t0,
            t_w: basis.t_w,
            n_time_samples: len,
            f_axis: ctf.f_axis.clone(),
            f_c: ctf.f_c,
            normalization: 1.0,
            coeffs,
        });
        start += len;
    }
    Ok(packages)
}

/// Rebuild a CTF grid from a contiguous sequence of window packages by
/// evaluating the reconstruction on each window's time grid.
pub fn reconstruct_grid(packages: &[ProjectionPackage]) -> Result<CtfGrid> {
    let first = packages.first().ok_or_else(|| {
        ChemuError::InvalidConfig("cannot reconstruct from an empty package list".to_string())
    })?;
    let (n_rx, n_tx, n_f) = (first.n_rx, first.n_tx, first.n_freq());
    let mut t_axis = Vec::new();
    for pkg in packages {
        if pkg.n_rx != n_rx || pkg.n_tx != n_tx || pkg.f_axis != first.f_axis {
            return Err(ChemuError::DimensionMismatch(
                "packages disagree on dimensions or frequency axis".to_string(),
            ));
        }
        for nidx in 0..pkg.n_time_samples {
            t_axis.push(pkg.t0 + nidx as f64 * pkg.t_step());
        }
    }
    let mut grid = CtfGrid::zeros(n_rx, n_tx, t_axis, first.f_axis.clone(), first.f_c);
    let mut t_offset = 0;
    for pkg in packages {
        for q in 0..n_rx {
            for p in 0..n_tx {
                for nidx in 0..pkg.n_time_samples {
                    let t_rel = nidx as f64 * pkg.t_step();
                    // Evaluate all chirps once per time sample.
                    let phases: Vec<Complex64> =
                        pkg.chirps.iter().map(|c| c.eval(t_rel)).collect();
                    let base = grid.idx(q, p, t_offset + nidx, 0);
                    for i in 0..n_f {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (kk, ph) in phases.iter().enumerate() {
                            acc += pkg.coeff(q, p, kk, i) * ph;
                        }
                        grid.data[base + i] = acc;
                    }
                }
            }
        }
        t_offset += pkg.n_time_samples;
    }
    grid.normalization = vec![1.0; n_rx * n_tx];
    Ok(grid)
}
