//! Property-based round-trip checks for the three binary formats and the
//! scenario text format, over randomized shapes and contents.

use num_complex::Complex64;
use proptest::collection::vec;
use proptest::prelude::*;

use chemu::gbsm::CtfGrid;
use chemu::iofmt::{
    decode_ctf, decode_packages, decode_signal, default_scenario, encode_ctf, encode_packages,
    encode_signal, parse_scenario, render_scenario, SignalData,
};
use chemu::subspace::{ChirpParam, ProjectionPackage};

fn finite_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e12..1e12f64,
        -1.0..1.0f64,
        Just(0.0),
        Just(-0.0),
        Just(1e-300),
    ]
}

fn complex() -> impl Strategy<Value = Complex64> {
    (finite_f64(), finite_f64()).prop_map(|(re, im)| Complex64::new(re, im))
}

prop_compose! {
    fn ctf_grid()(
        n_rx in 1usize..4,
        n_tx in 1usize..4,
        n_t in 1usize..5,
        n_f in 1usize..7,
    )(
        data in vec(complex(), n_rx * n_tx * n_t * n_f),
        norms in vec(0.1..10.0f64, n_rx * n_tx),
        t_axis in vec(finite_f64(), n_t),
        f_axis in vec(finite_f64(), n_f),
        f_c in finite_f64(),
        n_rx in Just(n_rx),
        n_tx in Just(n_tx),
    ) -> CtfGrid {
        let mut grid = CtfGrid::zeros(n_rx, n_tx, t_axis, f_axis, f_c);
        grid.data = data;
        grid.normalization = norms;
        grid
    }
}

prop_compose! {
    fn package(n_rx: usize, n_tx: usize, k: usize, f_axis: Vec<f64>, f_c: f64)(
        chirps in vec((finite_f64(), finite_f64()), k),
        coeffs in vec(complex(), n_rx * n_tx * k * f_axis.len()),
        t0 in finite_f64(),
        t_w in 0.001..10.0f64,
        n_time_samples in 1usize..9,
        normalization in 0.1..10.0f64,
    ) -> ProjectionPackage {
        ProjectionPackage {
            n_rx,
            n_tx,
            chirps: chirps
                .into_iter()
                .map(|(alpha, beta)| ChirpParam { alpha, beta })
                .collect(),
            t0,
            t_w,
            n_time_samples,
            f_axis: f_axis.clone(),
            f_c,
            normalization,
            coeffs,
        }
    }
}

/// Windows of one package file must agree on the dimensions, basis size,
/// and frequency axis; only the per-window payload varies.
fn package_list() -> impl Strategy<Value = Vec<ProjectionPackage>> {
    (1usize..3, 1usize..3, 1usize..5, 1usize..6, 1usize..4).prop_flat_map(
        |(n_rx, n_tx, k, n_f, n_windows)| {
            (vec(finite_f64(), n_f), finite_f64()).prop_flat_map(move |(f_axis, f_c)| {
                vec(package(n_rx, n_tx, k, f_axis, f_c), n_windows)
            })
        },
    )
}

/// Exactly representable in f32, so the narrow signal payload round-trips
/// bit for bit as well.
fn f32_exact() -> impl Strategy<Value = f64> {
    (-1_000_000i32..1_000_000).prop_map(|n| n as f64 * 0.0078125)
}

prop_compose! {
    fn signal()(
        float32 in any::<bool>(),
        sample_rate in 1.0..1e9f64,
        samples in vec((f32_exact(), f32_exact()), 0..40),
    ) -> SignalData {
        SignalData {
            sample_rate,
            float32,
            samples: samples
                .into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect(),
        }
    }
}

proptest! {
    #[test]
    fn ctf_round_trips(grid in ctf_grid()) {
        let path = std::path::Path::new("prop.ctf");
        let bytes = encode_ctf(&grid);
        let back = decode_ctf(&bytes, path).unwrap();
        prop_assert_eq!(&back, &grid);
        prop_assert_eq!(encode_ctf(&back), bytes);
    }

    #[test]
    fn packages_round_trip(pkgs in package_list()) {
        let path = std::path::Path::new("prop.pkg");
        let bytes = encode_packages(&pkgs).unwrap();
        let back = decode_packages(&bytes, path).unwrap();
        prop_assert_eq!(&back, &pkgs);
        prop_assert_eq!(encode_packages(&back).unwrap(), bytes);
    }

    #[test]
    fn signals_round_trip(sig in signal()) {
        let path = std::path::Path::new("prop.sig");
        let bytes = encode_signal(&sig);
        let back = decode_signal(&bytes, path).unwrap();
        prop_assert_eq!(&back, &sig);
        prop_assert_eq!(encode_signal(&back), bytes);
    }

    #[test]
    fn truncated_payloads_never_decode(grid in ctf_grid(), cut in 1usize..16) {
        let bytes = encode_ctf(&grid);
        let cut = cut.min(bytes.len() - 1);
        let short = &bytes[..bytes.len() - cut];
        prop_assert!(decode_ctf(short, std::path::Path::new("prop.ctf")).is_err());
    }

    #[test]
    fn scenario_text_round_trips(
        f_c in 1e8..1e11f64,
        rel_bw in 0.001..0.4f64,
        n_freq_bins in 2usize..2048,
        t_total in 1e-3..100.0f64,
        seed in any::<u64>(),
    ) {
        let mut config = default_scenario(f_c, rel_bw * f_c);
        config.n_freq_bins = n_freq_bins;
        config.t_total = t_total;
        config.rng_seed = seed;
        let text = render_scenario(&config);
        prop_assert_eq!(parse_scenario(&text).unwrap(), config);
    }
}
