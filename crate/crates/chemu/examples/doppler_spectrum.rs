//! Track the instantaneous Doppler of a single broadside scatterer over
//! time: the Doppler PSD peak drifts as the receiver drives past, matching
//! the closed-form linear approximation.
//!
//! Run with: `cargo run --release --example doppler_spectrum`

use chemu::gbsm::{doppler_approx, sample_ctf_grid, ClusterPair, ClusterTimeline};
use chemu::iofmt::default_scenario;
use chemu::metrics::{doppler_psd, WindowSpec, DEFAULT_ACF_AVG};
use chemu::vec3::Vec3;

fn main() -> chemu::Result<()> {
    let mut config = default_scenario(2.6e9, 1e6);
    config.n_freq_bins = 8;
    config.t_total = 12.0;
    config.t_ch = 0.02;
    config.rx_array.origin = Vec3::ZERO;
    config.rx_array.velocity = Vec3::new(10.0, 0.0, 0.0);

    // One static scatterer 2 km broadside of the receiver track.
    let scatterer = Vec3::new(0.0, 2000.0, 0.0);
    let cluster = ClusterPair::deterministic(
        0,
        Vec3::new(0.0, 500.0, 35.0),
        scatterer,
        0.0,
        0.0,
        f64::INFINITY,
    );
    let timeline = ClusterTimeline::from_clusters(vec![cluster]);
    let grid = sample_ctf_grid(&config, &timeline)?;

    let series = grid.time_series(0, 0, grid.zero_freq_bin());
    let window = WindowSpec::gaussian(100);
    let psd = doppler_psd(&series, config.t_ch, &window, DEFAULT_ACF_AVG)?;
    println!(
        "Doppler PSD: {} bins, resolution {:.3} Hz",
        psd.n_bins(),
        psd.bin_axis[1] - psd.bin_axis[0]
    );

    for t in [0.0, 5.0, 10.0] {
        let t_idx = (t / config.t_ch).round() as usize;
        let measured = psd.bin_axis[psd.peak_bin(t_idx)];
        let analytic = doppler_approx(&config.rx_array, scatterer, 0, t, config.f_c)?;
        println!(
            "t = {t:>4.1} s: peak at {measured:>6.2} Hz, linear approximation \
             {analytic:>6.2} Hz"
        );
    }
    Ok(())
}
