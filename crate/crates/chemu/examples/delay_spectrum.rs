//! Watch a new propagation path appear in the delay power spectrum: a
//! second cluster is born halfway through the run and its delay bin jumps
//! from the noise floor to a steady peak.
//!
//! Run with: `cargo run --release --example delay_spectrum`

use chemu::gbsm::{ray_delay, sample_ctf_grid, ClusterPair, ClusterTimeline};
use chemu::iofmt::default_scenario;
use chemu::metrics::delay_psd;
use chemu::vec3::Vec3;

/// Cluster whose total path delay lands exactly on `target` seconds, by
/// absorbing the geometric part into the virtual-link delay.
fn cluster_at_delay(
    config: &chemu::gbsm::ScenarioConfig,
    id: u64,
    tx_center: Vec3,
    rx_center: Vec3,
    target: f64,
    birth_time: f64,
) -> chemu::Result<ClusterPair> {
    let probe = ClusterPair::deterministic(id, tx_center, rx_center, 0.0, 0.0, f64::INFINITY);
    let geometric = ray_delay(&config.tx_array, &config.rx_array, &probe, 0, 0, 0, 0.0)?;
    Ok(ClusterPair::deterministic(
        id,
        tx_center,
        rx_center,
        target - geometric,
        birth_time,
        f64::INFINITY,
    ))
}

fn main() -> chemu::Result<()> {
    let mut config = default_scenario(2.6e9, 20e6);
    config.n_freq_bins = 64;
    config.t_total = 2.0;
    config.t_ch = 0.05;
    config.rx_array.velocity = Vec3::ZERO;

    let resolution = 1.0 / config.bandwidth; // 50 ns per delay bin
    let first = cluster_at_delay(
        &config,
        0,
        Vec3::new(0.0, 30.0, 35.0),
        Vec3::new(10.0, 30.0, 1.5),
        10.0 * resolution,
        0.0,
    )?;
    let second = cluster_at_delay(
        &config,
        1,
        Vec3::new(0.0, 60.0, 35.0),
        Vec3::new(10.0, 60.0, 1.5),
        20.0 * resolution,
        config.t_total / 2.0,
    )?;
    let timeline = ClusterTimeline::from_clusters(vec![first, second]);
    let grid = sample_ctf_grid(&config, &timeline)?;

    let psd = delay_psd(&grid, 0, 0)?;
    println!(
        "delay PSD: {} bins of {:.0} ns over {} time steps",
        psd.n_bins(),
        resolution * 1e9,
        psd.t_axis.len()
    );

    for (label, t) in [("before birth", 0.5), ("after birth", 1.5)] {
        let t_idx = (t / config.t_ch).round() as usize;
        let row = psd.row(t_idx);
        let peak = row[psd.peak_bin(t_idx)];
        let second_db = 10.0 * (row[20] / peak).log10();
        println!(
            "t = {t:.2} s ({label}): peak at {:.0} ns, 1000 ns bin at {second_db:.1} dB \
             relative to peak",
            psd.bin_axis[psd.peak_bin(t_idx)] * 1e9
        );
    }
    Ok(())
}
