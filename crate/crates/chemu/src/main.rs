//! Channel emulator command line: generate / project / reconstruct /
//! emulate / metrics / pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error,
//! 3 numeric failure (near-dependent basis, singular geometry).
//! Diagnostics go to stderr; stdout stays clean for piped CSV.
//! No subcommand writes any output file on a nonzero exit: every stage
//! computes its results fully before the first byte is written.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use chemu::engine::{run_stream, ChannelSource, Engine, EngineConfig, OutOfBandPolicy};
use chemu::error::{ChemuError, Result};
use chemu::gbsm::{generate_ctf_grid, simulate_clusters, CtfGrid, ScenarioConfig};
use chemu::iofmt::{
    parse_scenario, read_ctf, read_packages, read_scenario, read_signal, render_scenario,
    write_ctf, write_packages, write_signal, SignalData, FORMAT_VERSION,
};
use chemu::metrics::{
    ctf_error, delay_psd, doppler_psd, write_error_csv, write_spectrum_csv, WindowSpec,
    DEFAULT_ACF_AVG,
};
use chemu::subspace::{derive_chirp_ranges, project_grid, reconstruct_grid, ChirpRanges};

#[derive(Parser)]
#[command(
    name = "chemu",
    version,
    about = "Non-stationary MIMO channel emulator",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write the sampled channel transfer
    /// function grid.
    Generate(GenerateArgs),
    /// Compress a CTF grid into chirp-subspace coefficient packages.
    Project(ProjectArgs),
    /// Rebuild a CTF grid from coefficient packages.
    Reconstruct(ReconstructArgs),
    /// Stream a signal through a channel with the block FDE engine.
    Emulate(EmulateArgs),
    /// Compute error traces or Doppler/delay spectra as CSV.
    Metrics(MetricsArgs),
    /// Run generate -> project -> emulate -> metrics and write a manifest.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Scenario text file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output CTF grid file.
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ProjectArgs {
    /// Input CTF grid file.
    #[arg(long)]
    ctf: PathBuf,
    /// Output package file.
    #[arg(long)]
    out: PathBuf,
    /// Number of basis chirps per window.
    #[arg(long, default_value_t = 30)]
    k: usize,
    /// Projection window length in time samples.
    #[arg(long, default_value_t = 64)]
    window: usize,
    /// Scenario file the grid came from; chirp ranges are derived from
    /// its cluster geometry (re-simulated from the scenario seed).
    #[arg(long, conflicts_with_all = ["alpha_min", "alpha_max", "beta_min", "beta_max"])]
    scenario: Option<PathBuf>,
    /// Explicit chirp start-frequency range lower bound [Hz].
    #[arg(long, requires_all = ["alpha_max", "beta_min", "beta_max"])]
    alpha_min: Option<f64>,
    /// Explicit chirp start-frequency range upper bound [Hz].
    #[arg(long)]
    alpha_max: Option<f64>,
    /// Explicit chirp rate range lower bound [Hz/s].
    #[arg(long)]
    beta_min: Option<f64>,
    /// Explicit chirp rate range upper bound [Hz/s].
    #[arg(long)]
    beta_max: Option<f64>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Input package file.
    #[arg(long)]
    package: PathBuf,
    /// Output CTF grid file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmulateArgs {
    /// Channel as a CTF grid file.
    #[arg(long, conflicts_with = "package", required_unless_present = "package")]
    ctf: Option<PathBuf>,
    /// Channel as a package file.
    #[arg(long)]
    package: Option<PathBuf>,
    /// Input signal file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output signal file.
    #[arg(long)]
    out: PathBuf,
    /// FFT size N_H.
    #[arg(long, default_value_t = 1024)]
    nfft: usize,
    /// Maximum channel delay to absorb in the overlap tail [s].
    #[arg(long)]
    tau_max: f64,
    /// Zero engine bins outside the channel band instead of failing.
    #[arg(long)]
    zero_out_of_band: bool,
    /// Write per-block operation counts (block,transforms,macs) as CSV.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricKind {
    Error,
    Doppler,
    Delay,
}

#[derive(Args)]
struct MetricsArgs {
    /// Which metric to compute.
    #[arg(long, value_enum)]
    metric: MetricKind,
    /// CTF grid under test.
    #[arg(long)]
    ctf: PathBuf,
    /// Reference CTF grid (error metric only).
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Rx element index (doppler/delay).
    #[arg(long, default_value_t = 0)]
    rx: usize,
    /// Tx element index (doppler/delay).
    #[arg(long, default_value_t = 0)]
    tx: usize,
    /// Frequency bin for the Doppler series; defaults to the bin nearest
    /// the carrier (f = 0 offset).
    #[arg(long)]
    freq_bin: Option<usize>,
    /// Gaussian analysis window length in time samples (doppler).
    #[arg(long, default_value_t = 64)]
    window: usize,
    /// Lag-product averaging half-width in samples (doppler).
    #[arg(long, default_value_t = DEFAULT_ACF_AVG)]
    n_avg: usize,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Scenario text file.
    #[arg(long, required_unless_present = "from_manifest")]
    scenario: Option<PathBuf>,
    /// Input signal file.
    #[arg(long = "in", required_unless_present = "from_manifest")]
    input: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, required_unless_present = "from_manifest")]
    outdir: Option<PathBuf>,
    /// Number of basis chirps per window.
    #[arg(long, default_value_t = 30)]
    k: usize,
    /// Projection window length in time samples.
    #[arg(long, default_value_t = 64)]
    window: usize,
    /// FFT size N_H.
    #[arg(long, default_value_t = 1024)]
    nfft: usize,
    /// Maximum channel delay [s]; defaults to half the overlap budget
    /// implied by nfft and the signal sample rate.
    #[arg(long)]
    tau_max: Option<f64>,
    /// Override the scenario's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Re-run a previous pipeline exactly as recorded in its manifest.
    #[arg(long, conflicts_with_all = ["scenario", "seed"])]
    from_manifest: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Project(args) => cmd_project(&args),
        Command::Reconstruct(args) => cmd_reconstruct(&args),
        Command::Emulate(args) => cmd_emulate(&args),
        Command::Metrics(args) => cmd_metrics(&args),
        Command::Pipeline(args) => cmd_pipeline(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut config = read_scenario(path)?;
    if let Some(seed) = seed {
        config.rng_seed = seed;
    }
    Ok(config)
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let config = load_scenario(&args.scenario, args.seed)?;
    let (grid, _) = generate_ctf_grid(&config)?;
    write_ctf(&args.out, &grid)
}

fn resolve_ranges(args: &ProjectArgs) -> Result<ChirpRanges> {
    if let Some(path) = &args.scenario {
        let config = read_scenario(path)?;
        let timeline = simulate_clusters(&config)?;
        let initial: Vec<_> = timeline.alive_at(0.0).cloned().collect();
        derive_chirp_ranges(&config, &initial)
    } else if let (Some(a0), Some(a1), Some(b0), Some(b1)) =
        (args.alpha_min, args.alpha_max, args.beta_min, args.beta_max)
    {
        if a0 > a1 || b0 > b1 {
            return Err(ChemuError::InvalidConfig(
                "chirp range bounds must satisfy min <= max".to_string(),
            ));
        }
        Ok(ChirpRanges {
            alpha: (a0, a1),
            beta: (b0, b1),
        })
    } else {
        Err(ChemuError::InvalidConfig(
            "chirp ranges require either --scenario or all of \
             --alpha-min/--alpha-max/--beta-min/--beta-max"
                .to_string(),
        ))
    }
}

fn cmd_project(args: &ProjectArgs) -> Result<()> {
    let grid = read_ctf(&args.ctf)?;
    let ranges = resolve_ranges(args)?;
    let packages = project_grid(&grid, args.k, args.window, &ranges)?;
    write_packages(&args.out, &packages)
}

fn cmd_reconstruct(args: &ReconstructArgs) -> Result<()> {
    let packages = read_packages(&args.package)?;
    let grid = reconstruct_grid(&packages)?;
    write_ctf(&args.out, &grid)
}

struct EmulateOutcome {
    output: SignalData,
    stats_csv: Option<String>,
}

fn run_emulation(
    source: &ChannelSource,
    input: &SignalData,
    nfft: usize,
    tau_max: f64,
    policy: OutOfBandPolicy,
    want_stats: bool,
) -> Result<EmulateOutcome> {
    let config = EngineConfig {
        n_fft: nfft,
        tau_max,
        t_s: 1.0 / input.sample_rate,
        n_tx: source.n_tx(),
        n_rx: source.n_rx(),
        out_of_band: policy,
    };
    if config.n_tx != 1 {
        return Err(ChemuError::InvalidConfig(format!(
            "signal files carry one stream but the channel has {} Tx elements",
            config.n_tx
        )));
    }
    let engine = Engine::new(config)?;
    let run = run_stream(&engine, source, std::slice::from_ref(&input.samples))?;
    let output = SignalData {
        sample_rate: input.sample_rate,
        float32: input.float32,
        samples: run.outputs.into_iter().next().unwrap_or_default(),
    };
    let stats_csv = if want_stats {
        let mut csv = String::from("block,transforms,macs\n");
        for s in &run.stats {
            csv.push_str(&format!("{},{},{}\n", s.block_index, s.transforms, s.macs));
        }
        Some(csv)
    } else {
        None
    };
    Ok(EmulateOutcome { output, stats_csv })
}

fn cmd_emulate(args: &EmulateArgs) -> Result<()> {
    let input = read_signal(&args.input)?;
    let policy = if args.zero_out_of_band {
        OutOfBandPolicy::Zero
    } else {
        OutOfBandPolicy::Error
    };
    let grid;
    let packages;
    let source = if let Some(path) = &args.ctf {
        grid = read_ctf(path)?;
        ChannelSource::Grid(&grid)
    } else {
        packages = read_packages(args.package.as_ref().unwrap())?;
        ChannelSource::Packages(&packages)
    };
    let outcome = run_emulation(
        &source,
        &input,
        args.nfft,
        args.tau_max,
        policy,
        args.stats.is_some(),
    )?;
    write_signal(&args.out, &outcome.output)?;
    if let (Some(path), Some(csv)) = (&args.stats, &outcome.stats_csv) {
        std::fs::write(path, csv)?;
    }
    Ok(())
}

fn write_csv_out(out: Option<&PathBuf>, body: &[u8]) -> Result<()> {
    match out {
        Some(path) => Ok(std::fs::write(path, body)?),
        None => {
            std::io::stdout().write_all(body)?;
            Ok(())
        }
    }
}

fn check_subchannel(grid: &CtfGrid, rx: usize, tx: usize) -> Result<()> {
    if rx >= grid.n_rx || tx >= grid.n_tx {
        return Err(ChemuError::DimensionMismatch(format!(
            "subchannel ({rx}, {tx}) outside a {}x{} grid",
            grid.n_rx, grid.n_tx
        )));
    }
    Ok(())
}

fn cmd_metrics(args: &MetricsArgs) -> Result<()> {
    let grid = read_ctf(&args.ctf)?;
    let mut body = Vec::new();
    match args.metric {
        MetricKind::Error => {
            let reference = args.reference.as_ref().ok_or_else(|| {
                ChemuError::InvalidConfig(
                    "--metric error requires --reference".to_string(),
                )
            })?;
            let reference = read_ctf(reference)?;
            let trace = ctf_error(&reference, &grid)?;
            write_error_csv(&mut body, &trace)?;
        }
        MetricKind::Doppler => {
            check_subchannel(&grid, args.rx, args.tx)?;
            let f_bin = args.freq_bin.unwrap_or_else(|| grid.zero_freq_bin());
            if f_bin >= grid.n_freq() {
                return Err(ChemuError::OutOfRange(format!(
                    "frequency bin {f_bin} outside a {}-bin grid",
                    grid.n_freq()
                )));
            }
            let series = grid.time_series(args.rx, args.tx, f_bin);
            if grid.n_time() < 2 {
                return Err(ChemuError::InvalidConfig(
                    "Doppler analysis needs at least two time samples".to_string(),
                ));
            }
            let t_step = grid.t_axis[1] - grid.t_axis[0];
            let window = WindowSpec::gaussian(args.window);
            let psd = doppler_psd(&series, t_step, &window, args.n_avg)?;
            write_spectrum_csv(&mut body, &psd)?;
        }
        MetricKind::Delay => {
            check_subchannel(&grid, args.rx, args.tx)?;
            let psd = delay_psd(&grid, args.rx, args.tx)?;
            write_spectrum_csv(&mut body, &psd)?;
        }
    }
    write_csv_out(args.out.as_ref(), &body)
}

/// Everything a pipeline run needs, fully resolved. The manifest is a
/// serialization of this plus the format version, so replaying a manifest
/// reproduces the run byte for byte.
struct PipelinePlan {
    scenario: ScenarioConfig,
    input: PathBuf,
    outdir: PathBuf,
    k: usize,
    window: usize,
    nfft: usize,
    tau_max: f64,
}

impl PipelinePlan {
    fn manifest(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("format_version = {FORMAT_VERSION}\n"));
        s.push_str(&format!("in = {}\n", self.input.display()));
        s.push_str(&format!("outdir = {}\n", self.outdir.display()));
        s.push_str(&format!("k = {}\n", self.k));
        s.push_str(&format!("window = {}\n", self.window));
        s.push_str(&format!("nfft = {}\n", self.nfft));
        s.push_str(&format!("tau_max = {}\n", self.tau_max));
        for line in render_scenario(&self.scenario).lines() {
            s.push_str("scenario.");
            s.push_str(line);
            s.push('\n');
        }
        s
    }

    fn from_manifest(path: &Path) -> Result<PipelinePlan> {
        let text = std::fs::read_to_string(path)?;
        let mut scenario_text = String::new();
        let mut fields: std::collections::BTreeMap<&str, &str> =
            std::collections::BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ChemuError::ScenarioParse {
                    line: idx + 1,
                    msg: "manifest lines must be `key = value`".to_string(),
                }
            })?;
            let key = key.trim();
            if let Some(sc_key) = key.strip_prefix("scenario.") {
                scenario_text.push_str(sc_key);
                scenario_text.push_str(" =");
                scenario_text.push_str(value);
                scenario_text.push('\n');
            } else {
                fields.insert(key, value.trim());
            }
        }
        let get = |k: &str| -> Result<&str> {
            fields.get(k).copied().ok_or_else(|| {
                ChemuError::InvalidConfig(format!("manifest is missing key `{k}`"))
            })
        };
        let parse_num = |k: &str| -> Result<f64> {
            get(k)?.parse::<f64>().map_err(|_| {
                ChemuError::InvalidConfig(format!("manifest key `{k}` is not a number"))
            })
        };
        let version = parse_num("format_version")? as u16;
        if version != FORMAT_VERSION {
            return Err(ChemuError::InvalidConfig(format!(
                "manifest format version {version} does not match {FORMAT_VERSION}"
            )));
        }
        Ok(PipelinePlan {
            scenario: parse_scenario(&scenario_text)?,
            input: PathBuf::from(get("in")?),
            outdir: PathBuf::from(get("outdir")?),
            k: parse_num("k")? as usize,
            window: parse_num("window")? as usize,
            nfft: parse_num("nfft")? as usize,
            tau_max: parse_num("tau_max")?,
        })
    }
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<()> {
    let plan = if let Some(manifest) = &args.from_manifest {
        PipelinePlan::from_manifest(manifest)?
    } else {
        let scenario = load_scenario(args.scenario.as_ref().unwrap(), args.seed)?;
        let input_path = args.input.clone().unwrap();
        let input = read_signal(&input_path)?;
        // Default tau_max: half the FFT as overlap budget.
        let tau_max = args
            .tau_max
            .unwrap_or(args.nfft as f64 / 2.0 / input.sample_rate);
        PipelinePlan {
            scenario,
            input: input_path,
            outdir: args.outdir.clone().unwrap(),
            k: args.k,
            window: args.window,
            nfft: args.nfft,
            tau_max,
        }
    };

    let input = read_signal(&plan.input)?;
    eprintln!("pipeline: generating channel");
    let (grid, timeline) = generate_ctf_grid(&plan.scenario)?;
    eprintln!("pipeline: projecting onto {} chirps per window", plan.k);
    let initial: Vec<_> = timeline.alive_at(0.0).cloned().collect();
    let ranges = derive_chirp_ranges(&plan.scenario, &initial)?;
    let packages = project_grid(&grid, plan.k, plan.window, &ranges)?;
    let reconstructed = reconstruct_grid(&packages)?;
    eprintln!("pipeline: streaming {} samples", input.samples.len());
    let source = ChannelSource::Packages(&packages);
    let outcome = run_emulation(
        &source,
        &input,
        plan.nfft,
        plan.tau_max,
        OutOfBandPolicy::Zero,
        true,
    )?;
    eprintln!("pipeline: computing error metrics");
    let trace = ctf_error(&grid, &reconstructed)?;
    let mut error_csv = Vec::new();
    write_error_csv(&mut error_csv, &trace)?;

    std::fs::create_dir_all(&plan.outdir)?;
    write_ctf(&plan.outdir.join("channel.ctf"), &grid)?;
    write_packages(&plan.outdir.join("channel.pkg"), &packages)?;
    write_signal(&plan.outdir.join("output.sig"), &outcome.output)?;
    std::fs::write(&plan.outdir.join("error.csv"), &error_csv)?;
    if let Some(stats) = &outcome.stats_csv {
        std::fs::write(&plan.outdir.join("blocks.csv"), stats)?;
    }
    std::fs::write(&plan.outdir.join("manifest.txt"), plan.manifest())?;
    eprintln!(
        "pipeline: wrote {} (max reconstruction error {:.1} dB)",
        plan.outdir.display(),
        trace.max_power_db()
    );
    Ok(())
}
