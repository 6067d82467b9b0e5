//! Geometry-based stochastic channel model (GBSM).
//!
//! A twin-cluster model: each propagation path leaves a Tx-side scatterer,
//! crosses an abstract virtual link, and arrives from an Rx-side scatterer.
//! Cluster appearance and disappearance follow a birth-death process, which
//! makes the sampled transfer function non-stationary in time; per-antenna-
//! pair cluster visibility adds non-stationarity across the array.

mod cluster;
mod ctf;

pub use cluster::{
    evolve_clusters, place_cluster, simulate_clusters, ClusterPair, ClusterSide, ClusterTimeline,
};
pub use ctf::{
    active_rays, cir_taps, ctf_sample, doppler_approx, generate_ctf_grid, ray_delay, ray_power,
    sample_ctf_grid, RaySample,
};

use crate::error::{ChemuError, Result};
use crate::vec3::Vec3;
use crate::SPEED_OF_LIGHT;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Uniform linear array: element `p` (0-based) sits at
/// `origin + p * spacing * axis` at t = 0 and moves with `velocity`.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaArray {
    pub n_elements: usize,
    pub spacing: f64,
    pub axis: Vec3,
    pub origin: Vec3,
    pub velocity: Vec3,
}

impl AntennaArray {
    pub fn single(origin: Vec3, velocity: Vec3) -> Self {
        AntennaArray {
            n_elements: 1,
            spacing: 0.0,
            axis: Vec3::new(1.0, 0.0, 0.0),
            origin,
            velocity,
        }
    }

    pub fn element_position(&self, p: usize, t: f64) -> Vec3 {
        self.origin + self.axis * (p as f64 * self.spacing) + self.velocity * t
    }

    fn validate(&self, side: &str) -> Result<()> {
        if self.n_elements == 0 {
            return Err(ChemuError::InvalidConfig(format!(
                "{side} array must have at least one element"
            )));
        }
        if (self.axis.norm() - 1.0).abs() > 1e-12 {
            return Err(ChemuError::InvalidConfig(format!(
                "{side} array axis must be a unit vector (norm = {})",
                self.axis.norm()
            )));
        }
        if self.spacing < 0.0 {
            return Err(ChemuError::InvalidConfig(format!(
                "{side} array spacing must be nonnegative"
            )));
        }
        Ok(())
    }
}

/// Full parameterization of the stochastic model and sampling grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Carrier frequency, Hz.
    pub f_c: f64,
    /// Bandwidth, Hz. Frequency bins cover `[-B/2, B/2)` with step `B/I`.
    pub bandwidth: f64,
    /// Number of frequency bins I.
    pub n_freq_bins: usize,
    /// Scenario duration, s.
    pub t_total: f64,
    /// Channel sample period, s.
    pub t_ch: f64,
    pub tx_array: AntennaArray,
    pub rx_array: AntennaArray,
    /// Initial cluster count N.
    pub n_clusters_init: usize,
    /// Rays (scatterers) per cluster side M.
    pub rays_per_cluster: usize,
    /// Cluster birth rate, clusters/s.
    pub birth_rate: f64,
    /// Cluster death rate, 1/s per cluster.
    pub death_rate: f64,
    /// Delay scaling factor r_tau, dimensionless > 1.
    pub r_tau: f64,
    /// Delay spread DS, s.
    pub delay_spread: f64,
    /// Frequency-dependence exponent gamma.
    pub gamma: f64,
    /// Mean of the exponential cluster-center distance, m.
    pub cluster_dist_mean: f64,
    /// Gaussian angle means (azimuth, elevation), rad.
    pub angle_mean: (f64, f64),
    /// Gaussian angle standard deviations (azimuth, elevation), rad.
    pub angle_std: (f64, f64),
    /// Scatterer offset standard deviations per axis, m.
    pub ellipsoid_stds: (f64, f64, f64),
    /// Mean of the exponential virtual-link delay, s.
    pub tau_link_mean: f64,
    /// Cluster velocity standard deviation per axis, m/s.
    pub cluster_speed_std: f64,
    /// Spatial visibility correlation distance, m.
    pub d_corr: f64,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(ChemuError::InvalidConfig(msg));
        if !(self.f_c > 0.0) {
            return err(format!("f_c must be positive, got {}", self.f_c));
        }
        if !(self.bandwidth > 0.0) {
            return err(format!("B must be positive, got {}", self.bandwidth));
        }
        if self.bandwidth >= 2.0 * self.f_c {
            return err(format!(
                "B must be smaller than 2*f_c ({} >= {})",
                self.bandwidth,
                2.0 * self.f_c
            ));
        }
        if !(self.t_ch > 0.0) {
            return err(format!("t_ch must be positive, got {}", self.t_ch));
        }
        if !(self.t_total > 0.0) {
            return err(format!("t_total must be positive, got {}", self.t_total));
        }
        if self.n_freq_bins < 2 {
            return err(format!(
                "n_freq_bins must be at least 2, got {}",
                self.n_freq_bins
            ));
        }
        if !(self.r_tau > 1.0) {
            return err(format!("r_tau must be > 1, got {}", self.r_tau));
        }
        if !(self.delay_spread > 0.0) {
            return err(format!(
                "delay_spread must be positive, got {}",
                self.delay_spread
            ));
        }
        if self.birth_rate < 0.0 {
            return err(format!(
                "birth_rate must be nonnegative, got {}",
                self.birth_rate
            ));
        }
        if !(self.death_rate > 0.0) {
            return err(format!(
                "death_rate must be positive, got {}",
                self.death_rate
            ));
        }
        if self.n_clusters_init == 0 {
            return err("n_clusters_init must be at least 1".to_string());
        }
        if self.rays_per_cluster == 0 {
            return err("rays_per_cluster must be at least 1".to_string());
        }
        if !(self.cluster_dist_mean > 0.0) {
            return err(format!(
                "cluster_dist_mean must be positive, got {}",
                self.cluster_dist_mean
            ));
        }
        if !(self.tau_link_mean > 0.0) {
            return err(format!(
                "tau_link_mean must be positive, got {}",
                self.tau_link_mean
            ));
        }
        if self.angle_std.0 < 0.0 || self.angle_std.1 < 0.0 {
            return err("angle_std components must be nonnegative".to_string());
        }
        if self.ellipsoid_stds.0 < 0.0 || self.ellipsoid_stds.1 < 0.0 || self.ellipsoid_stds.2 < 0.0
        {
            return err("ellipsoid_stds components must be nonnegative".to_string());
        }
        if self.cluster_speed_std < 0.0 {
            return err("cluster_speed_std must be nonnegative".to_string());
        }
        if !(self.d_corr > 0.0) {
            return err(format!("d_corr must be positive, got {}", self.d_corr));
        }
        self.tx_array.validate("tx")?;
        self.rx_array.validate("rx")?;
        Ok(())
    }

    /// Number of time samples on the `t_ch` grid.
    pub fn n_time_steps(&self) -> usize {
        (self.t_total / self.t_ch).ceil() as usize
    }

    /// Frequency bin axis: `f_i = -B/2 + i * B/I`, i = 0..I-1.
    pub fn f_axis(&self) -> Vec<f64> {
        let df = self.bandwidth / self.n_freq_bins as f64;
        (0..self.n_freq_bins)
            .map(|i| -self.bandwidth / 2.0 + i as f64 * df)
            .collect()
    }

    pub fn t_axis(&self) -> Vec<f64> {
        (0..self.n_time_steps()).map(|i| i as f64 * self.t_ch).collect()
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c
    }

    /// Deterministic per-purpose RNG substream derived from the scenario seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(stream);
        rng
    }
}

/// RNG substream used for cluster placement and birth-death evolution.
pub const STREAM_CLUSTERS: u64 = 1;

/// Sampled channel transfer function H[q][p][t][f] with axis metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CtfGrid {
    pub n_rx: usize,
    pub n_tx: usize,
    /// Row-major [q][p][t][f].
    pub data: Vec<Complex64>,
    pub t_axis: Vec<f64>,
    pub f_axis: Vec<f64>,
    pub f_c: f64,
    /// Scale applied per subchannel so mean power over (t, f) is 1.
    pub normalization: Vec<f64>,
}

impl CtfGrid {
    pub fn zeros(n_rx: usize, n_tx: usize, t_axis: Vec<f64>, f_axis: Vec<f64>, f_c: f64) -> Self {
        let len = n_rx * n_tx * t_axis.len() * f_axis.len();
        CtfGrid {
            n_rx,
            n_tx,
            data: vec![Complex64::new(0.0, 0.0); len],
            t_axis,
            f_axis,
            f_c,
            normalization: vec![1.0; n_rx * n_tx],
        }
    }

    pub fn n_time(&self) -> usize {
        self.t_axis.len()
    }

    pub fn n_freq(&self) -> usize {
        self.f_axis.len()
    }

    #[inline]
    pub fn idx(&self, q: usize, p: usize, t: usize, f: usize) -> usize {
        ((q * self.n_tx + p) * self.n_time() + t) * self.n_freq() + f
    }

    #[inline]
    pub fn at(&self, q: usize, p: usize, t: usize, f: usize) -> Complex64 {
        self.data[self.idx(q, p, t, f)]
    }

    /// Contiguous frequency row for one (q, p, t).
    pub fn row(&self, q: usize, p: usize, t: usize) -> &[Complex64] {
        let start = self.idx(q, p, t, 0);
        &self.data[start..start + self.n_freq()]
    }

    /// Time series of one (q, p) subchannel at a fixed frequency bin.
    pub fn time_series(&self, q: usize, p: usize, f: usize) -> Vec<Complex64> {
        (0..self.n_time()).map(|t| self.at(q, p, t, f)).collect()
    }

    /// Index of the frequency bin closest to 0 Hz.
    pub fn zero_freq_bin(&self) -> usize {
        let mut best = 0;
        for (i, f) in self.f_axis.iter().enumerate() {
            if f.abs() < self.f_axis[best].abs() {
                best = i;
            }
        }
        best
    }

    /// Rescale each subchannel so its mean power over (t, f) is 1 and record
    /// the applied scale. Subchannels with zero power are left untouched.
    pub fn normalize(&mut self) {
        let nt = self.n_time();
        let nf = self.n_freq();
        for q in 0..self.n_rx {
            for p in 0..self.n_tx {
                let start = self.idx(q, p, 0, 0);
                let slice = &mut self.data[start..start + nt * nf];
                let mean_power: f64 =
                    slice.iter().map(|h| h.norm_sqr()).sum::<f64>() / (nt * nf) as f64;
                let scale = if mean_power > 0.0 {
                    1.0 / mean_power.sqrt()
                } else {
                    1.0
                };
                for h in slice.iter_mut() {
                    *h *= scale;
                }
                self.normalization[q * self.n_tx + p] = scale;
            }
        }
    }

    /// Dimensions match and both axes agree within floating-point slack
    /// (1e-9 of the axis span), so grids rebuilt from per-window offsets
    /// still compare equal to the original sampling.
    pub fn same_axes(&self, other: &CtfGrid) -> bool {
        fn close(a: &[f64], b: &[f64]) -> bool {
            if a.len() != b.len() {
                return false;
            }
            let span = a
                .iter()
                .fold(0.0f64, |acc, x| acc.max(x.abs()))
                .max(1e-300);
            a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * span)
        }
        self.n_rx == other.n_rx
            && self.n_tx == other.n_tx
            && close(&self.t_axis, &other.t_axis)
            && close(&self.f_axis, &other.f_axis)
    }
}

#[cfg(test)]
pub(crate) fn test_config() -> ScenarioConfig {
    crate::iofmt::default_scenario(2.6e9, 60e6)
}
