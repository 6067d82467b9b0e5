//! Compress a CTF grid onto a chirp subspace and measure how faithfully the
//! compact package reproduces the original channel.
//!
//! Run with: `cargo run --release --example project_and_reconstruct`

use chemu::gbsm::generate_ctf_grid;
use chemu::iofmt::default_scenario;
use chemu::metrics::ctf_error;
use chemu::subspace::{derive_chirp_ranges, project_grid, reconstruct_grid};

fn main() -> chemu::Result<()> {
    let mut config = default_scenario(2.6e9, 60e6);
    config.t_total = 0.128;
    config.n_freq_bins = 32;
    config.n_clusters_init = 5;
    config.rays_per_cluster = 5;

    let (grid, timeline) = generate_ctf_grid(&config)?;

    // Chirp parameter ranges follow from the ray geometry: alpha spans the
    // initial Doppler frequencies, beta their drift rates.
    let initial: Vec<_> = timeline.alive_at(0.0).cloned().collect();
    let ranges = derive_chirp_ranges(&config, &initial)?;
    println!(
        "chirp ranges: alpha [{:.2}, {:.2}] Hz, beta [{:.3}, {:.3}] Hz/s",
        ranges.alpha.0, ranges.alpha.1, ranges.beta.0, ranges.beta.1
    );

    let k = 30;
    let window = 64;
    let packages = project_grid(&grid, k, window, &ranges)?;
    let raw = grid.data.len();
    let compressed: usize = packages.iter().map(|p| p.payload_complex_count()).sum();
    println!(
        "{} windows, K = {k}: {compressed} coefficients vs {raw} raw samples \
         ({:.1}x smaller)",
        packages.len(),
        raw as f64 / compressed as f64
    );

    let reconstructed = reconstruct_grid(&packages)?;
    let trace = ctf_error(&grid, &reconstructed)?;
    println!(
        "reconstruction error: max {:.1} dB over {} time steps",
        trace.max_power_db(),
        trace.t_axis.len()
    );
    Ok(())
}
