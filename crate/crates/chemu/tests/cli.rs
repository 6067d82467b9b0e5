//! Black-box tests of the `chemu` binary: exit codes, file outputs, and
//! end-to-end determinism of the pipeline subcommand.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chemu::gbsm::CtfGrid;
use chemu::iofmt::{read_ctf, read_signal, write_ctf, write_signal, SignalData};

fn chemu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chemu"))
        .args(args)
        .output()
        .expect("failed to spawn chemu")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process killed by signal")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Scenario small enough that generate/project run in milliseconds.
const SMALL_SCENARIO: &str = "\
f_c = 2.6e9
B = 60e6
n_freq_bins = 16
t_total = 16e-3
t_ch = 1e-3
n_clusters_init = 4
rays_per_cluster = 3
";

fn random_signal(len: usize, sample_rate: f64, seed: u64) -> SignalData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SignalData {
        sample_rate,
        float32: false,
        samples: (0..len)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect(),
    }
}

/// 1x1 all-pass channel: H = 1 on a frequency axis spanning the full
/// signal band around a zero carrier.
fn identity_grid(sample_rate: f64, n_f: usize) -> CtfGrid {
    let f_axis: Vec<f64> = (0..n_f)
        .map(|i| -sample_rate / 2.0 + i as f64 * sample_rate / n_f as f64)
        .collect();
    let mut grid = CtfGrid::zeros(1, 1, vec![0.0], f_axis, 0.0);
    grid.data.fill(Complex64::new(1.0, 0.0));
    grid
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(exit_code(&chemu(&["--help"])), 0);
    assert_eq!(exit_code(&chemu(&["--version"])), 0);
    assert_eq!(exit_code(&chemu(&["generate", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    // No subcommand, unknown subcommand, unknown flag.
    assert_eq!(exit_code(&chemu(&[])), 1);
    assert_eq!(exit_code(&chemu(&["frobnicate"])), 1);
    assert_eq!(exit_code(&chemu(&["generate", "--bogus", "x"])), 1);
    // Missing required flags.
    assert_eq!(exit_code(&chemu(&["generate", "--scenario", "s.txt"])), 1);
    // Conflicting channel sources.
    assert_eq!(
        exit_code(&chemu(&[
            "emulate", "--ctf", "a", "--package", "b", "--in", "c", "--out", "d",
            "--tau-max", "1e-6",
        ])),
        1
    );
    // Partial explicit chirp range.
    assert_eq!(
        exit_code(&chemu(&[
            "project", "--ctf", "a", "--out", "b", "--alpha-min", "0.0",
        ])),
        1
    );
}

#[test]
fn data_errors_exit_two_without_writing_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad_scenario = dir.path().join("bad.txt");
    std::fs::write(&bad_scenario, "t_total = 1.0\n").unwrap(); // f_c and B missing
    let out = dir.path().join("never.ctf");
    let run = chemu(&[
        "generate",
        "--scenario",
        path_str(&bad_scenario),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(exit_code(&run), 2);
    assert!(!out.exists(), "generate wrote output despite failing");

    // A corrupt binary input is a data error too.
    let garbage = dir.path().join("garbage.ctf");
    std::fs::write(&garbage, b"not a channel file").unwrap();
    let pkg = dir.path().join("never.pkg");
    let run = chemu(&[
        "project", "--ctf", path_str(&garbage), "--out", path_str(&pkg),
        "--alpha-min", "0", "--alpha-max", "1", "--beta-min", "0", "--beta-max", "1",
    ]);
    assert_eq!(exit_code(&run), 2);
    assert!(!pkg.exists(), "project wrote output despite failing");
}

#[test]
fn reconstruct_after_project_recovers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.txt");
    std::fs::write(&scenario, SMALL_SCENARIO).unwrap();
    let ctf = dir.path().join("channel.ctf");
    let pkg = dir.path().join("channel.pkg");
    let rec = dir.path().join("reconstructed.ctf");

    let run = chemu(&[
        "generate", "--scenario", path_str(&scenario), "--out", path_str(&ctf),
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    // Full-rank projection (K = window length) represents each window
    // exactly whatever the chirp parameters, so reconstruction must return
    // the original samples. The explicit ranges space the 4x4 chirp grid at
    // the discrete-chirp orthogonality steps (1/T_w in alpha, 2/(N*dt^2)
    // in beta) to keep the square basis well conditioned.
    let run = chemu(&[
        "project", "--ctf", path_str(&ctf), "--out", path_str(&pkg),
        "--k", "16", "--window", "16",
        "--alpha-min", "0", "--alpha-max", "187.5",
        "--beta-min", "0", "--beta-max", "375000",
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let run = chemu(&[
        "reconstruct", "--package", path_str(&pkg), "--out", path_str(&rec),
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let original = read_ctf(&ctf).unwrap();
    let rebuilt = read_ctf(&rec).unwrap();
    assert_eq!(original.data.len(), rebuilt.data.len());
    let scale = original
        .data
        .iter()
        .map(|x| x.norm())
        .fold(0.0f64, f64::max);
    let worst = original
        .data
        .iter()
        .zip(&rebuilt.data)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    assert!(
        worst <= 1e-9 * scale,
        "full-rank reconstruction differs by {worst:.2e} (scale {scale:.2e})"
    );
}

#[test]
fn emulate_identity_channel_passes_the_signal_through() {
    let dir = tempfile::tempdir().unwrap();
    let sample_rate = 1e6;
    let ctf = dir.path().join("identity.ctf");
    write_ctf(&ctf, &identity_grid(sample_rate, 64)).unwrap();
    let input = random_signal(1000, sample_rate, 5);
    let in_path = dir.path().join("in.sig");
    write_signal(&in_path, &input).unwrap();
    let out_path = dir.path().join("out.sig");
    let stats_path = dir.path().join("blocks.csv");

    let run = chemu(&[
        "emulate", "--ctf", path_str(&ctf), "--in", path_str(&in_path),
        "--out", path_str(&out_path), "--nfft", "64", "--tau-max", "4e-6",
        "--stats", path_str(&stats_path),
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let output = read_signal(&out_path).unwrap();
    let n_a = 4;
    assert_eq!(output.samples.len(), input.samples.len() + n_a);
    for (n, (y, x)) in output.samples.iter().zip(&input.samples).enumerate() {
        assert!((y - x).norm() <= 1e-10, "sample {n} altered by all-pass channel");
    }
    for y in &output.samples[input.samples.len()..] {
        assert!(y.norm() <= 1e-10, "nonzero tail after an all-pass channel");
    }
    let stats = std::fs::read_to_string(&stats_path).unwrap();
    assert!(stats.starts_with("block,transforms,macs\n"));
    assert!(stats.lines().count() > 1);
}

#[test]
fn metrics_errors_leave_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let ctf = dir.path().join("tiny.ctf");
    write_ctf(&ctf, &identity_grid(1e6, 8)).unwrap();
    let out = dir.path().join("never.csv");
    // Rx index outside the 1x1 grid: data error.
    let run = chemu(&[
        "metrics", "--metric", "delay", "--ctf", path_str(&ctf),
        "--rx", "3", "--out", path_str(&out),
    ]);
    assert_eq!(exit_code(&run), 2);
    assert!(!out.exists(), "metrics wrote output despite failing");
}

fn pipeline_outputs(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    ["channel.ctf", "channel.pkg", "output.sig", "error.csv", "blocks.csv", "manifest.txt"]
        .iter()
        .map(|name| {
            let p = dir.join(name);
            let bytes = std::fs::read(&p).unwrap_or_else(|_| panic!("missing {name}"));
            (p, bytes)
        })
        .collect()
}

#[test]
fn pipeline_runs_are_deterministic_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.txt");
    std::fs::write(&scenario, SMALL_SCENARIO).unwrap();
    let in_path = dir.path().join("in.sig");
    write_signal(&in_path, &random_signal(2048, 1e6, 9)).unwrap();
    let outdir = dir.path().join("run");

    let args = [
        "pipeline", "--scenario", path_str(&scenario), "--in", path_str(&in_path),
        "--outdir", path_str(&outdir), "--k", "8", "--window", "8", "--nfft", "256",
    ];
    let run = chemu(&args);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let first = pipeline_outputs(&outdir);

    // Same invocation again: every artifact byte-identical.
    let run = chemu(&args);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    for (path, bytes) in &first {
        assert_eq!(
            &std::fs::read(path).unwrap(),
            bytes,
            "{} changed between identical runs",
            path.display()
        );
    }

    // Replaying the recorded manifest reproduces the run byte for byte.
    let manifest = outdir.join("manifest.txt");
    let manifest_bytes = std::fs::read(&manifest).unwrap();
    let run = chemu(&["pipeline", "--from-manifest", path_str(&manifest)]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    for (path, bytes) in &first {
        assert_eq!(
            &std::fs::read(path).unwrap(),
            bytes,
            "{} changed under manifest replay",
            path.display()
        );
    }
    assert_eq!(std::fs::read(&manifest).unwrap(), manifest_bytes);
}
