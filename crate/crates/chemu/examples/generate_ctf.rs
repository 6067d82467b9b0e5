//! Generate a channel transfer function grid from a stochastic scenario and
//! summarize its fading statistics.
//!
//! Run with: `cargo run --release --example generate_ctf`

use chemu::gbsm::generate_ctf_grid;
use chemu::iofmt::default_scenario;

fn main() -> chemu::Result<()> {
    let mut config = default_scenario(2.6e9, 60e6);
    config.t_total = 0.2; // keep the demo quick; the defaults run 2 s

    let (grid, timeline) = generate_ctf_grid(&config)?;

    println!(
        "grid: {} x {} antennas, {} time steps x {} frequency bins",
        grid.n_rx,
        grid.n_tx,
        grid.n_time(),
        grid.n_freq()
    );
    println!(
        "clusters: {} at t = 0, {} at t = {} s, {} ever born",
        timeline.alive_at(0.0).count(),
        timeline.alive_at(config.t_total - config.t_ch).count(),
        config.t_total,
        timeline.clusters.len()
    );

    // Per-subchannel mean power is normalized to 1, so |H| in dB directly
    // shows fade depth.
    let mut min_db = f64::INFINITY;
    let mut max_db = f64::NEG_INFINITY;
    for value in &grid.data {
        let db = 10.0 * value.norm_sqr().log10();
        min_db = min_db.min(db);
        max_db = max_db.max(db);
    }
    println!("envelope range: {min_db:.1} dB (deepest fade) to {max_db:.1} dB");

    let out = std::env::temp_dir().join("generate_ctf_example.ctf");
    chemu::iofmt::write_ctf(&out, &grid)?;
    let reread = chemu::iofmt::read_ctf(&out)?;
    assert_eq!(reread, grid);
    println!("wrote and re-read {} (bit-exact)", out.display());
    Ok(())
}
