//! Cluster placement and birth-death evolution.

use super::ScenarioConfig;
use crate::error::{ChemuError, Result};
use crate::vec3::Vec3;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

/// One side (Tx or Rx) of a twin-cluster pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSide {
    /// Cluster center in absolute Cartesian coordinates at t = 0, m.
    pub center: Vec3,
    /// Scatterer positions relative to the center, m. Scatterer m on the
    /// Tx side pairs with scatterer m on the Rx side.
    pub scatterer_offsets: Vec<Vec3>,
    /// Cluster velocity, m/s (all scatterers of a side move together).
    pub velocity: Vec3,
}

impl ClusterSide {
    pub fn scatterer_position(&self, m: usize, t: f64) -> Vec3 {
        self.center + self.scatterer_offsets[m] + self.velocity * t
    }
}

/// Twin-cluster pair joined by a virtual-link delay.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPair {
    pub id: u64,
    pub tx_side: ClusterSide,
    pub rx_side: ClusterSide,
    /// Virtual-link delay between the two sides, s.
    pub tau_link: f64,
    pub birth_time: f64,
    /// `f64::INFINITY` while the cluster is alive.
    pub death_time: f64,
    /// Per-antenna-pair visibility mask, row-major [q][p].
    pub visibility: Vec<bool>,
}

impl ClusterPair {
    pub fn n_rays(&self) -> usize {
        self.tx_side.scatterer_offsets.len()
    }

    pub fn alive_at(&self, t: f64) -> bool {
        self.birth_time <= t && t < self.death_time
    }

    pub fn visible(&self, q: usize, p: usize, n_tx: usize) -> bool {
        self.visibility.get(q * n_tx + p).copied().unwrap_or(true)
    }

    /// Fully visible cluster with every scatterer at the side centers.
    /// Convenience constructor for deterministic test scenarios.
    pub fn deterministic(
        id: u64,
        tx_center: Vec3,
        rx_center: Vec3,
        tau_link: f64,
        birth_time: f64,
        death_time: f64,
    ) -> Self {
        ClusterPair {
            id,
            tx_side: ClusterSide {
                center: tx_center,
                scatterer_offsets: vec![Vec3::ZERO],
                velocity: Vec3::ZERO,
            },
            rx_side: ClusterSide {
                center: rx_center,
                scatterer_offsets: vec![Vec3::ZERO],
                velocity: Vec3::ZERO,
            },
            tau_link,
            birth_time,
            death_time,
            visibility: vec![true],
        }
    }
}

fn sample_side(
    config: &ScenarioConfig,
    array_origin: Vec3,
    rng: &mut impl Rng,
) -> Result<ClusterSide> {
    let bad = |msg: &str| ChemuError::InvalidConfig(msg.to_string());
    let dist = Exp::new(1.0 / config.cluster_dist_mean)
        .map_err(|_| bad("cluster_dist_mean must be positive"))?;
    let az = Normal::new(config.angle_mean.0, config.angle_std.0)
        .map_err(|_| bad("invalid azimuth distribution"))?;
    let el = Normal::new(config.angle_mean.1, config.angle_std.1)
        .map_err(|_| bad("invalid elevation distribution"))?;

    let d: f64 = dist.sample(rng);
    let phi_a = az.sample(rng);
    let phi_e = el.sample(rng);
    let center = array_origin + Vec3::from_spherical(d, phi_e, phi_a);

    let (sx, sy, sz) = config.ellipsoid_stds;
    let nx = Normal::new(0.0, sx).map_err(|_| bad("invalid ellipsoid std x"))?;
    let ny = Normal::new(0.0, sy).map_err(|_| bad("invalid ellipsoid std y"))?;
    let nz = Normal::new(0.0, sz).map_err(|_| bad("invalid ellipsoid std z"))?;
    let scatterer_offsets = (0..config.rays_per_cluster)
        .map(|_| Vec3::new(nx.sample(rng), ny.sample(rng), nz.sample(rng)))
        .collect();

    let nv = Normal::new(0.0, config.cluster_speed_std)
        .map_err(|_| bad("invalid cluster_speed_std"))?;
    let velocity = Vec3::new(nv.sample(rng), nv.sample(rng), nv.sample(rng));

    Ok(ClusterSide {
        center,
        scatterer_offsets,
        velocity,
    })
}

/// Place a new twin-cluster pair: per side the center distance is
/// exponential, angles are Gaussian, scatterer offsets are an ellipsoid
/// Gaussian cloud, and the virtual-link delay is exponential. The
/// per-antenna-pair visibility mask is drawn once at birth with survival
/// probability `exp(-s / d_corr)` where `s` is the spatial separation of
/// the pair from the reference pair (q=1, p=1).
pub fn place_cluster(
    config: &ScenarioConfig,
    birth_time: f64,
    rng: &mut impl Rng,
) -> Result<ClusterPair> {
    if !(config.cluster_dist_mean > 0.0) {
        return Err(ChemuError::InvalidConfig(
            "cluster_dist_mean must be positive".to_string(),
        ));
    }
    if !(config.tau_link_mean > 0.0) {
        return Err(ChemuError::InvalidConfig(
            "tau_link_mean must be positive".to_string(),
        ));
    }
    let tx_side = sample_side(config, config.tx_array.origin, rng)?;
    let rx_side = sample_side(config, config.rx_array.origin, rng)?;
    let tau_link = Exp::new(1.0 / config.tau_link_mean)
        .map_err(|_| ChemuError::InvalidConfig("tau_link_mean must be positive".to_string()))?
        .sample(rng);

    let n_tx = config.tx_array.n_elements;
    let n_rx = config.rx_array.n_elements;
    let mut visibility = Vec::with_capacity(n_rx * n_tx);
    for q in 0..n_rx {
        for p in 0..n_tx {
            let sep = (p as f64 * config.tx_array.spacing).max(q as f64 * config.rx_array.spacing);
            let prob = (-sep / config.d_corr).exp();
            visibility.push(q == 0 && p == 0 || rng.random::<f64>() < prob);
        }
    }

    Ok(ClusterPair {
        id: 0,
        tx_side,
        rx_side,
        tau_link,
        birth_time,
        death_time: f64::INFINITY,
        visibility,
    })
}

/// Advance the cluster set by one step of the birth-death process.
///
/// Each existing cluster survives with probability `exp(-death_rate * dt)`;
/// the number of new clusters is Poisson with mean `birth_rate * dt`, each
/// placed by [`place_cluster`] with birth time `t_new`. Clusters that die
/// get `death_time = t_new` and are not returned.
pub fn evolve_clusters(
    config: &ScenarioConfig,
    state: &[ClusterPair],
    t_new: f64,
    dt: f64,
    next_id: &mut u64,
    rng: &mut impl Rng,
) -> Result<Vec<ClusterPair>> {
    assert!(dt > 0.0, "evolve_clusters requires dt > 0");
    let survive = (-config.death_rate * dt).exp();
    let mut out: Vec<ClusterPair> = Vec::with_capacity(state.len());
    for cluster in state {
        if rng.random::<f64>() < survive {
            out.push(cluster.clone());
        }
    }
    let mean_births = config.birth_rate * dt;
    let n_births = if mean_births > 0.0 {
        Poisson::new(mean_births)
            .map_err(|_| ChemuError::InvalidConfig("birth_rate must be finite".to_string()))?
            .sample(rng) as u64
    } else {
        0
    };
    for _ in 0..n_births {
        let mut cluster = place_cluster(config, t_new, rng)?;
        cluster.id = *next_id;
        *next_id += 1;
        out.push(cluster);
    }
    Ok(out)
}

/// Every cluster that ever existed over a scenario run, with resolved birth
/// and death times. Clusters alive at the end keep `death_time = INFINITY`.
#[derive(Debug, Clone)]
pub struct ClusterTimeline {
    pub clusters: Vec<ClusterPair>,
}

impl ClusterTimeline {
    pub fn from_clusters(clusters: Vec<ClusterPair>) -> Self {
        ClusterTimeline { clusters }
    }

    pub fn alive_at(&self, t: f64) -> impl Iterator<Item = &ClusterPair> {
        self.clusters.iter().filter(move |c| c.alive_at(t))
    }
}

/// Run the full birth-death process over the scenario duration on the
/// `t_ch` grid. Deterministic given the scenario seed.
pub fn simulate_clusters(config: &ScenarioConfig) -> Result<ClusterTimeline> {
    let mut rng = config.rng(super::STREAM_CLUSTERS);
    let mut next_id: u64 = 0;
    let mut alive: Vec<ClusterPair> = Vec::with_capacity(config.n_clusters_init);
    for _ in 0..config.n_clusters_init {
        let mut cluster = place_cluster(config, 0.0, &mut rng)?;
        cluster.id = next_id;
        next_id += 1;
        alive.push(cluster);
    }
    let mut all: Vec<ClusterPair> = alive.clone();

    for step in 1..config.n_time_steps() {
        let t = step as f64 * config.t_ch;
        let new_alive = evolve_clusters(config, &alive, t, config.t_ch, &mut next_id, &mut rng)?;
        // Record deaths and births against the master list.
        for old in &alive {
            if !new_alive.iter().any(|c| c.id == old.id) {
                if let Some(rec) = all.iter_mut().find(|c| c.id == old.id) {
                    rec.death_time = t;
                }
            }
        }
        for cluster in &new_alive {
            if !all.iter().any(|c| c.id == cluster.id) {
                all.push(cluster.clone());
            }
        }
        alive = new_alive;
    }
    Ok(ClusterTimeline { clusters: all })
}
