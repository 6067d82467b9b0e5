//! Stream a baseband signal through a channel with the frequency-domain
//! block engine and verify the overlap-and-add output against the expected
//! delay.
//!
//! Run with: `cargo run --release --example stream_through_channel`

use chemu::engine::{run_stream, ChannelSource, Engine, EngineConfig, OutOfBandPolicy};
use chemu::gbsm::CtfGrid;
use chemu::metrics::single_ray_row;
use num_complex::Complex64;

fn main() -> chemu::Result<()> {
    let t_s = 1.0 / 30.72e6;
    let delay_samples = 10usize;

    // Static single-path channel: a pure delay of 10 samples, described on
    // a frequency axis spanning the engine's full band. A single time row
    // makes the channel time-invariant.
    let n_f = 256;
    let band = 1.0 / t_s;
    let f_axis: Vec<f64> = (0..n_f)
        .map(|i| -band / 2.0 + i as f64 * band / n_f as f64)
        .collect();
    let mut grid = CtfGrid::zeros(1, 1, vec![0.0], f_axis, 0.0);
    grid.data = single_ray_row(0.0, &grid.f_axis, delay_samples as f64 * t_s);

    let engine = Engine::new(EngineConfig {
        n_fft: 256,
        tau_max: 16.0 * t_s,
        t_s,
        n_tx: 1,
        n_rx: 1,
        out_of_band: OutOfBandPolicy::Error,
    })?;
    println!(
        "engine: N_H = {}, N_a = {}, N_s = {}, T_ch = {:.3} us",
        engine.config.n_fft,
        engine.config.n_overlap(),
        engine.config.n_block(),
        engine.config.t_ch() * 1e6
    );

    // An impulse at sample 0 followed by silence.
    let mut input = vec![Complex64::new(0.0, 0.0); 2000];
    input[0] = Complex64::new(1.0, 0.0);

    let run = run_stream(&engine, &ChannelSource::Grid(&grid), &[input.clone()])?;
    let output = &run.outputs[0];
    println!(
        "streamed {} samples in {} blocks -> {} output samples",
        input.len(),
        run.stats.len(),
        output.len()
    );

    let peak = output
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, v)| (i, v.norm()))
        .unwrap();
    println!(
        "impulse response peak at sample {} (expected {delay_samples}), |h| = {:.6}",
        peak.0, peak.1
    );
    assert_eq!(peak.0, delay_samples);

    let s = &run.stats[0];
    println!(
        "per block: {} transforms of size {}, {} complex MACs",
        s.transforms, engine.config.n_fft, s.macs
    );
    Ok(())
}
