//! Monte-Carlo check of the cluster birth-death process: the long-run mean
//! cluster count converges to birth_rate / death_rate, the stationary mean
//! of an M/M/infinity queue.
//!
//! Run with: `cargo run --release --example cluster_birth_death`

use chemu::gbsm::{evolve_clusters, place_cluster};
use chemu::iofmt::default_scenario;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> chemu::Result<()> {
    let mut config = default_scenario(2.6e9, 60e6);
    config.rays_per_cluster = 1; // placement detail is irrelevant here
    let dt = 0.01;
    let steps = 200_000usize;
    let burn_in = steps / 10;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut next_id = 0u64;
    let mut state = vec![place_cluster(&config, 0.0, &mut rng)?];

    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut counted = 0usize;
    for step in 0..steps {
        state = evolve_clusters(&config, &state, step as f64 * dt, dt, &mut next_id, &mut rng)?;
        if step >= burn_in {
            let n = state.len() as f64;
            sum += n;
            sum_sq += n * n;
            counted += 1;
        }
    }

    let mean = sum / counted as f64;
    let var = sum_sq / counted as f64 - mean * mean;
    let stderr = (var / counted as f64).sqrt();
    let expected = config.birth_rate / config.death_rate;
    println!(
        "lambda_G = {} /s, lambda_R = {} /s, dt = {dt} s, {counted} counted steps",
        config.birth_rate, config.death_rate
    );
    println!("mean cluster count: {mean:.3} (stationary value {expected})");
    println!("naive standard error: {stderr:.4} (samples are correlated across steps)");
    Ok(())
}
