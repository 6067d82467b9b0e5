//! Line-oriented `key = value` scenario files.
//!
//! `#` starts a comment; values are numbers or whitespace-separated numeric
//! triples for vector keys. `f_c` and `B` are mandatory; every other key
//! has a documented default. Unknown and duplicate keys are rejected.

use crate::error::{ChemuError, Result};
use crate::gbsm::{AntennaArray, ScenarioConfig};
use crate::vec3::Vec3;
use crate::SPEED_OF_LIGHT;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

const KNOWN_KEYS: &[&str] = &[
    "f_c",
    "B",
    "n_freq_bins",
    "t_total",
    "t_ch",
    "tx_elements",
    "tx_spacing",
    "tx_axis",
    "tx_origin",
    "tx_velocity",
    "rx_elements",
    "rx_spacing",
    "rx_axis",
    "rx_origin",
    "rx_velocity",
    "n_clusters_init",
    "rays_per_cluster",
    "birth_rate",
    "death_rate",
    "r_tau",
    "delay_spread",
    "gamma",
    "cluster_dist_mean",
    "angle_mean_azimuth",
    "angle_mean_elevation",
    "angle_std_azimuth",
    "angle_std_elevation",
    "ellipsoid_std_x",
    "ellipsoid_std_y",
    "ellipsoid_std_z",
    "tau_link_mean",
    "cluster_speed_std",
    "d_corr",
    "rng_seed",
];

/// Scenario with every optional key at its default, parameterized by the
/// two mandatory values.
pub fn default_scenario(f_c: f64, bandwidth: f64) -> ScenarioConfig {
    let half_wavelength = SPEED_OF_LIGHT / f_c / 2.0;
    ScenarioConfig {
        f_c,
        bandwidth,
        n_freq_bins: 128,
        t_total: 2.0,
        t_ch: 1e-3,
        tx_array: AntennaArray {
            n_elements: 1,
            spacing: half_wavelength,
            axis: Vec3::new(1.0, 0.0, 0.0),
            origin: Vec3::new(0.0, 0.0, 35.0),
            velocity: Vec3::ZERO,
        },
        rx_array: AntennaArray {
            n_elements: 1,
            spacing: half_wavelength,
            axis: Vec3::new(1.0, 0.0, 0.0),
            origin: Vec3::new(10.0, 0.0, 1.5),
            velocity: Vec3::new(10.0, 0.0, 0.0),
        },
        n_clusters_init: 23,
        rays_per_cluster: 20,
        birth_rate: 4.0,
        death_rate: 0.2,
        r_tau: 3.0,
        delay_spread: 100e-9,
        gamma: 0.0,
        cluster_dist_mean: 50.0,
        angle_mean: (0.0, 0.0),
        angle_std: (0.5, 0.2),
        ellipsoid_stds: (5.0, 5.0, 5.0),
        tau_link_mean: 100e-9,
        cluster_speed_std: 0.5,
        d_corr: 30.0,
        rng_seed: 1,
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> ChemuError {
    ChemuError::ScenarioParse {
        line,
        msg: msg.into(),
    }
}

struct Entries {
    values: BTreeMap<String, (usize, Vec<f64>, Vec<String>)>,
}

impl Entries {
    fn scalar(&self, key: &str) -> Result<Option<f64>> {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, vs, _)) => {
                if vs.len() != 1 {
                    Err(parse_err(*line, format!("key {key} expects one value")))
                } else {
                    Ok(Some(vs[0]))
                }
            }
        }
    }

    fn vec3(&self, key: &str) -> Result<Option<Vec3>> {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, vs, _)) => {
                if vs.len() != 3 {
                    Err(parse_err(
                        *line,
                        format!("key {key} expects three values"),
                    ))
                } else {
                    Ok(Some(Vec3::new(vs[0], vs[1], vs[2])))
                }
            }
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        match self.scalar(key)? {
            None => Ok(None),
            Some(v) => {
                let line = self.values[key].0;
                if v < 0.0 || v.fract() != 0.0 {
                    Err(parse_err(line, format!("key {key} expects a nonnegative integer")))
                } else {
                    Ok(Some(v as usize))
                }
            }
        }
    }
}

/// Parse scenario text. Errors carry the offending line number.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut values: BTreeMap<String, (usize, Vec<f64>, Vec<String>)> = BTreeMap::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, "expected `key = value`"))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(parse_err(line_no, format!("unknown key `{key}`")));
        }
        if !seen.insert(key.to_string()) {
            return Err(parse_err(line_no, format!("duplicate key `{key}`")));
        }
        let tokens: Vec<String> = value.split_whitespace().map(str::to_string).collect();
        let numbers: Vec<f64> = tokens
            .iter()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("cannot parse `{tok}` as a number")))
            })
            .collect::<Result<_>>()?;
        if numbers.is_empty() {
            return Err(parse_err(line_no, format!("key `{key}` has no value")));
        }
        values.insert(key.to_string(), (line_no, numbers, tokens));
    }
    let entries = Entries { values };

    let mut missing = Vec::new();
    let f_c = entries.scalar("f_c")?;
    let bandwidth = entries.scalar("B")?;
    if f_c.is_none() {
        missing.push("f_c");
    }
    if bandwidth.is_none() {
        missing.push("B");
    }
    if !missing.is_empty() {
        return Err(ChemuError::InvalidConfig(format!(
            "missing mandatory keys: {}",
            missing.join(", ")
        )));
    }
    let mut config = default_scenario(f_c.unwrap(), bandwidth.unwrap());

    if let Some(v) = entries.count("n_freq_bins")? {
        config.n_freq_bins = v;
    }
    if let Some(v) = entries.scalar("t_total")? {
        config.t_total = v;
    }
    if let Some(v) = entries.scalar("t_ch")? {
        config.t_ch = v;
    }
    if let Some(v) = entries.count("tx_elements")? {
        config.tx_array.n_elements = v;
    }
    if let Some(v) = entries.scalar("tx_spacing")? {
        config.tx_array.spacing = v;
    }
    if let Some(v) = entries.vec3("tx_axis")? {
        config.tx_array.axis = v;
    }
    if let Some(v) = entries.vec3("tx_origin")? {
        config.tx_array.origin = v;
    }
    if let Some(v) = entries.vec3("tx_velocity")? {
        config.tx_array.velocity = v;
    }
    if let Some(v) = entries.count("rx_elements")? {
        config.rx_array.n_elements = v;
    }
    if let Some(v) = entries.scalar("rx_spacing")? {
        config.rx_array.spacing = v;
    }
    if let Some(v) = entries.vec3("rx_axis")? {
        config.rx_array.axis = v;
    }
    if let Some(v) = entries.vec3("rx_origin")? {
        config.rx_array.origin = v;
    }
    if let Some(v) = entries.vec3("rx_velocity")? {
        config.rx_array.velocity = v;
    }
    if let Some(v) = entries.count("n_clusters_init")? {
        config.n_clusters_init = v;
    }
    if let Some(v) = entries.count("rays_per_cluster")? {
        config.rays_per_cluster = v;
    }
    if let Some(v) = entries.scalar("birth_rate")? {
        config.birth_rate = v;
    }
    if let Some(v) = entries.scalar("death_rate")? {
        config.death_rate = v;
    }
    if let Some(v) = entries.scalar("r_tau")? {
        config.r_tau = v;
    }
    if let Some(v) = entries.scalar("delay_spread")? {
        config.delay_spread = v;
    }
    if let Some(v) = entries.scalar("gamma")? {
        config.gamma = v;
    }
    if let Some(v) = entries.scalar("cluster_dist_mean")? {
        config.cluster_dist_mean = v;
    }
    if let Some(v) = entries.scalar("angle_mean_azimuth")? {
        config.angle_mean.0 = v;
    }
    if let Some(v) = entries.scalar("angle_mean_elevation")? {
        config.angle_mean.1 = v;
    }
    if let Some(v) = entries.scalar("angle_std_azimuth")? {
        config.angle_std.0 = v;
    }
    if let Some(v) = entries.scalar("angle_std_elevation")? {
        config.angle_std.1 = v;
    }
    if let Some(v) = entries.scalar("ellipsoid_std_x")? {
        config.ellipsoid_stds.0 = v;
    }
    if let Some(v) = entries.scalar("ellipsoid_std_y")? {
        config.ellipsoid_stds.1 = v;
    }
    if let Some(v) = entries.scalar("ellipsoid_std_z")? {
        config.ellipsoid_stds.2 = v;
    }
    if let Some(v) = entries.scalar("tau_link_mean")? {
        config.tau_link_mean = v;
    }
    if let Some(v) = entries.scalar("cluster_speed_std")? {
        config.cluster_speed_std = v;
    }
    if let Some(v) = entries.scalar("d_corr")? {
        config.d_corr = v;
    }
    if let Some(v) = entries.scalar("rng_seed")? {
        // Seeds are full-width u64; going through f64 would round values
        // above 2^53, so prefer the raw token.
        let (line, _, raws) = &entries.values["rng_seed"];
        config.rng_seed = match raws[0].parse::<u64>() {
            Ok(seed) => seed,
            Err(_) => {
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(parse_err(
                        *line,
                        "rng_seed expects a nonnegative integer",
                    ));
                }
                v as u64
            }
        };
    }

    config.validate()?;
    Ok(config)
}

/// Render a config as scenario text; parsing the result reproduces the
/// config exactly (f64 values are printed with round-trip precision).
pub fn render_scenario(config: &ScenarioConfig) -> String {
    let v3 = |v: Vec3| format!("{} {} {}", v.x, v.y, v.z);
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    kv("f_c", config.f_c.to_string());
    kv("B", config.bandwidth.to_string());
    kv("n_freq_bins", config.n_freq_bins.to_string());
    kv("t_total", config.t_total.to_string());
    kv("t_ch", config.t_ch.to_string());
    kv("tx_elements", config.tx_array.n_elements.to_string());
    kv("tx_spacing", config.tx_array.spacing.to_string());
    kv("tx_axis", v3(config.tx_array.axis));
    kv("tx_origin", v3(config.tx_array.origin));
    kv("tx_velocity", v3(config.tx_array.velocity));
    kv("rx_elements", config.rx_array.n_elements.to_string());
    kv("rx_spacing", config.rx_array.spacing.to_string());
    kv("rx_axis", v3(config.rx_array.axis));
    kv("rx_origin", v3(config.rx_array.origin));
    kv("rx_velocity", v3(config.rx_array.velocity));
    kv("n_clusters_init", config.n_clusters_init.to_string());
    kv("rays_per_cluster", config.rays_per_cluster.to_string());
    kv("birth_rate", config.birth_rate.to_string());
    kv("death_rate", config.death_rate.to_string());
    kv("r_tau", config.r_tau.to_string());
    kv("delay_spread", config.delay_spread.to_string());
    kv("gamma", config.gamma.to_string());
    kv("cluster_dist_mean", config.cluster_dist_mean.to_string());
    kv("angle_mean_azimuth", config.angle_mean.0.to_string());
    kv("angle_mean_elevation", config.angle_mean.1.to_string());
    kv("angle_std_azimuth", config.angle_std.0.to_string());
    kv("angle_std_elevation", config.angle_std.1.to_string());
    kv("ellipsoid_std_x", config.ellipsoid_stds.0.to_string());
    kv("ellipsoid_std_y", config.ellipsoid_stds.1.to_string());
    kv("ellipsoid_std_z", config.ellipsoid_stds.2.to_string());
    kv("tau_link_mean", config.tau_link_mean.to_string());
    kv("cluster_speed_std", config.cluster_speed_std.to_string());
    kv("d_corr", config.d_corr.to_string());
    kv("rng_seed", config.rng_seed.to_string());
    s
}

pub fn read_scenario(path: &Path) -> Result<ScenarioConfig> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

pub fn write_scenario(path: &Path, config: &ScenarioConfig) -> Result<()> {
    Ok(std::fs::write(path, render_scenario(config))?)
}
