//! Ray delays, ray powers, and sampling of the channel transfer function.

use super::{AntennaArray, ClusterPair, ClusterTimeline, CtfGrid, ScenarioConfig};
use crate::error::{ChemuError, Result};
use crate::vec3::Vec3;
use crate::SPEED_OF_LIGHT;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// One resolved ray at a fixed (q, p, t): its delay and linear power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub delay: f64,
    /// Linear power at the band center (f = 0), before grid normalization.
    pub power: f64,
}

/// Delay of ray `m` of `cluster` between Tx element `p` and Rx element `q`
/// at time `t`: `(d_T + d_R) / c + tau_link`. Antenna and scatterer
/// positions integrate their constant velocities from the initial
/// coordinates.
pub fn ray_delay(
    tx: &AntennaArray,
    rx: &AntennaArray,
    cluster: &ClusterPair,
    m: usize,
    p: usize,
    q: usize,
    t: f64,
) -> Result<f64> {
    let d_t = (cluster.tx_side.scatterer_position(m, t) - tx.element_position(p, t)).norm();
    let d_r = (cluster.rx_side.scatterer_position(m, t) - rx.element_position(q, t)).norm();
    if d_t == 0.0 || d_r == 0.0 {
        return Err(ChemuError::SingularGeometry(format!(
            "antenna and scatterer coincide at t = {t} (cluster {}, ray {m})",
            cluster.id
        )));
    }
    Ok((d_t + d_r) / SPEED_OF_LIGHT + cluster.tau_link)
}

/// Ray power before grid normalization:
/// `((f_c + f) / f_c)^gamma * exp(-(r_tau - 1) / (r_tau * DS) * delay)`.
pub fn ray_power(delay: f64, f: f64, config: &ScenarioConfig) -> f64 {
    let freq_factor = ((config.f_c + f) / config.f_c).powf(config.gamma);
    let decay =
        (-(config.r_tau - 1.0) / (config.r_tau * config.delay_spread) * delay).exp();
    freq_factor * decay
}

/// Transfer-function sample at baseband offset `f`:
/// `sum_rays sqrt(P) * exp(j*2*pi*(f_c - f)*delay)`.
pub fn ctf_sample(f_c: f64, f: f64, rays: &[RaySample]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for ray in rays {
        acc += Complex64::from_polar(ray.power.sqrt(), TAU * (f_c - f) * ray.delay);
    }
    acc
}

/// Impulse-response taps at a fixed (q, p, t): one `(delay, amplitude)` pair
/// per ray with `amplitude = sqrt(P) * exp(j*2*pi*f_c*delay)`.
pub fn cir_taps(f_c: f64, rays: &[RaySample]) -> Vec<(f64, Complex64)> {
    rays.iter()
        .map(|ray| {
            (
                ray.delay,
                Complex64::from_polar(ray.power.sqrt(), TAU * f_c * ray.delay),
            )
        })
        .collect()
}

/// Approximate instantaneous Doppler of a ray seen by Rx element `q`
/// (0-based), valid for a fixed Tx and constant Rx speed:
///
/// `-cos(w) * v / lambda + sin^2(w) * v^2 * t / (lambda * [D - cos(theta) * q * delta])`
///
/// where `w` is the angle between the Rx velocity and the direction from
/// element `q` to the scatterer at t = 0, `theta` the angle between the
/// array axis and the direction from the reference element (q = 0), and
/// `D` the distance from the reference element to the scatterer at t = 0.
pub fn doppler_approx(
    rx: &AntennaArray,
    scatterer_at_zero: Vec3,
    q: usize,
    t: f64,
    f_c: f64,
) -> Result<f64> {
    let speed = rx.velocity.norm();
    if speed == 0.0 {
        return Ok(0.0);
    }
    let lambda = SPEED_OF_LIGHT / f_c;
    let dir = scatterer_at_zero - rx.element_position(q, 0.0);
    let dist_q = dir.norm();
    if dist_q == 0.0 {
        return Err(ChemuError::SingularGeometry(
            "scatterer coincides with Rx element".to_string(),
        ));
    }
    let cos_w = rx.velocity.dot(dir) / (speed * dist_q);
    let sin2_w = 1.0 - cos_w * cos_w;
    let dir_ref = scatterer_at_zero - rx.element_position(0, 0.0);
    let dist_ref = dir_ref.norm();
    if dist_ref == 0.0 {
        return Err(ChemuError::SingularGeometry(
            "scatterer coincides with the reference Rx element".to_string(),
        ));
    }
    // theta is measured at the reference element so that
    // D - cos(theta) * q * delta linearizes the element-q distance.
    let cos_theta = rx.axis.dot(dir_ref) / dist_ref;
    let denom = dist_ref - cos_theta * q as f64 * rx.spacing;
    if denom <= 0.0 {
        return Err(ChemuError::SingularGeometry(format!(
            "scatterer behind the array along its axis (denominator {denom})"
        )));
    }
    Ok(-cos_w * speed / lambda + sin2_w * speed * speed * t / (lambda * denom))
}

/// Resolve delays and band-center powers for all rays of all clusters that
/// are alive at `t` and visible to the pair (q, p).
pub fn active_rays(
    config: &ScenarioConfig,
    clusters: &[ClusterPair],
    q: usize,
    p: usize,
    t: f64,
) -> Result<Vec<RaySample>> {
    let n_tx = config.tx_array.n_elements;
    let mut rays = Vec::new();
    for cluster in clusters {
        if !cluster.alive_at(t) || !cluster.visible(q, p, n_tx) {
            continue;
        }
        for m in 0..cluster.n_rays() {
            let delay = ray_delay(&config.tx_array, &config.rx_array, cluster, m, p, q, t)?;
            rays.push(RaySample {
                delay,
                power: ray_power(delay, 0.0, config),
            });
        }
    }
    Ok(rays)
}

/// Fill the CTF grid from a resolved cluster timeline and normalize each
/// subchannel to unit mean power. Deterministic given the timeline.
pub fn sample_ctf_grid(config: &ScenarioConfig, timeline: &ClusterTimeline) -> Result<CtfGrid> {
    config.validate()?;
    let t_axis = config.t_axis();
    let f_axis = config.f_axis();
    let n_rx = config.rx_array.n_elements;
    let n_tx = config.tx_array.n_elements;
    let n_f = f_axis.len();
    let df = config.bandwidth / n_f as f64;
    let mut grid = CtfGrid::zeros(n_rx, n_tx, t_axis.clone(), f_axis.clone(), config.f_c);

    for (t_idx, &t) in t_axis.iter().enumerate() {
        let alive: Vec<&ClusterPair> = timeline.alive_at(t).collect();
        for q in 0..n_rx {
            for p in 0..n_tx {
                let start = grid.idx(q, p, t_idx, 0);
                for cluster in &alive {
                    if !cluster.visible(q, p, n_tx) {
                        continue;
                    }
                    for m in 0..cluster.n_rays() {
                        let delay = ray_delay(
                            &config.tx_array,
                            &config.rx_array,
                            cluster,
                            m,
                            p,
                            q,
                            t,
                        )?;
                        if config.gamma == 0.0 {
                            // Power is frequency-flat: advance the phase
                            // across bins with a single complex rotation.
                            let amp = ray_power(delay, 0.0, config).sqrt();
                            let mut phasor = Complex64::from_polar(
                                amp,
                                TAU * (config.f_c - f_axis[0]) * delay,
                            );
                            let step = Complex64::from_polar(1.0, -TAU * df * delay);
                            for i in 0..n_f {
                                grid.data[start + i] += phasor;
                                phasor *= step;
                            }
                        } else {
                            for (i, &f) in f_axis.iter().enumerate() {
                                let amp = ray_power(delay, f, config).sqrt();
                                grid.data[start + i] += Complex64::from_polar(
                                    amp,
                                    TAU * (config.f_c - f) * delay,
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    grid.normalize();
    Ok(grid)
}

/// Run the full model: evolve clusters on the `t_ch` grid, fill the CTF for
/// every (q, p, t, f), and normalize. Returns the grid together with the
/// cluster timeline so callers can derive chirp parameter ranges from it.
pub fn generate_ctf_grid(config: &ScenarioConfig) -> Result<(CtfGrid, ClusterTimeline)> {
    config.validate()?;
    let timeline = super::simulate_clusters(config)?;
    let grid = sample_ctf_grid(config, &timeline)?;
    Ok((grid, timeline))
}
