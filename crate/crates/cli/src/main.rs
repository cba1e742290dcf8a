//! Command-line front end for the photovoltaic SWIPT receiver toolkit.
//!
//! Subcommands run the stock experiments (harvesting sweeps, transient
//! waveforms, transmit-distribution tables, rate sweeps, channel sampling)
//! and emit CSV tables plus a plain-text manifest with checksums so a run
//! can be reproduced and verified byte for byte. `validate` runs the
//! numerical invariant suite and sets the exit status.
//!
//! Configuration resolves in three layers: built-in defaults, then a
//! `key=value` file given with `--config`, then command-line flags.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fso_swipt_core::circuit::{CircuitParams, OpticalDrive, PhysicalConstants, spectral_response};
use fso_swipt_core::eh::EhModelParams;
use fso_swipt_core::rate::{DistributionKind, RateConfig, TransmitDistribution};
use fso_swipt_core::report::{
    cdf_table_csv, eh_sweep_csv, manifest_text, metrics_text, rate_sweep_csv, samples_csv,
    sha256_hex, waveform_csv,
};
use fso_swipt_core::sweep::{
    cdf_table, channel_samples, eh_sweep, linear_grid, log_grid, rate_sweep,
};
use fso_swipt_core::transient::{simulate, steady_state_metrics, InitialState, SimConfig, SymbolFrame};
use fso_swipt_core::validate::run_all;

#[derive(Parser)]
#[command(
    name = "fso-swipt",
    version,
    about = "Photovoltaic SWIPT receiver toolkit: harvesting, transients, and information rates",
    long_about = "Runs the receiver-model experiments and writes CSV tables plus a manifest \
                  with SHA-256 checksums. Identical configuration and seed reproduce identical \
                  CSV bytes. Configuration precedence: defaults, then --config file, then flags."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Harvested-power sweep over the power grid, wavelengths, and ambient levels
    EhSweep(CommonArgs),
    /// Transient waveform for a symbol sequence, with per-symbol settling metrics
    Waveform(WaveformArgs),
    /// CDF table of the three transmit distributions on a dense power grid
    CdfTable(CdfArgs),
    /// Achievable-rate sweep over peak power bounds and ambient levels
    RateSweep(CommonArgs),
    /// Run the numerical invariant suite; exit status 1 if any check fails
    Validate(CommonArgs),
    /// Draw channel samples (s, x, n, y) from a transmit distribution
    Sample(SampleArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Plain-text key=value configuration file (see README for the key list)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for CSV tables and manifests (created if missing)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Seed for all random draws
    #[arg(long)]
    seed: Option<u64>,
    /// AWGN variance in dBm (converted once to watts; everything else is SI)
    #[arg(long, value_name = "DBM")]
    sigma2_dbm: Option<f64>,
    /// Comma-separated carrier wavelengths in nanometers
    #[arg(long, value_delimiter = ',', value_name = "NM,...")]
    lambda_nm: Option<Vec<f64>>,
    /// Comma-separated ambient photocurrents in amperes
    #[arg(long, value_delimiter = ',', value_name = "A,...")]
    pa: Option<Vec<f64>>,
    /// Comma-separated peak transmit power bounds in watts
    #[arg(long, value_delimiter = ',', value_name = "W,...")]
    a2: Option<Vec<f64>>,
}

#[derive(Args)]
struct WaveformArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated symbol powers in watts
    #[arg(long, value_delimiter = ',', value_name = "W,...")]
    symbols: Option<Vec<f64>>,
    /// Symbol duration in seconds
    #[arg(long, value_name = "S")]
    t_sym: Option<f64>,
}

#[derive(Args)]
struct CdfArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of s-grid points per peak-power group
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of channel samples to draw
    #[arg(long)]
    count: Option<usize>,
    /// Transmit distribution to sample from
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KindArg {
    /// Output amplitude uniform on [x(0), x(A2)]
    AmplitudeUniform,
    /// Density proportional to the harvested-power slope
    PowerProportional,
    /// Transmit power uniform on [0, A2]
    Uniform,
}

impl From<KindArg> for DistributionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::AmplitudeUniform => DistributionKind::AmplitudeUniform,
            KindArg::PowerProportional => DistributionKind::PowerProportional,
            KindArg::Uniform => DistributionKind::UniformS,
        }
    }
}

enum CliError {
    /// Bad arguments or configuration: exit status 2.
    Usage(String),
    /// Failure while computing or writing: exit status 1.
    Runtime(String),
}

impl From<fso_swipt_core::error::Error> for CliError {
    fn from(e: fso_swipt_core::error::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Fully resolved run configuration; field defaults are the documented
/// stock experiment setup.
#[derive(Clone, Debug)]
struct RunConfig {
    circuit: CircuitParams,
    quantum_efficiency: f64,
    channel_gain: f64,
    /// Wavelengths in nanometers (the one non-SI unit besides sigma2_dbm).
    lambda_nm: Vec<f64>,
    p_min_w: f64,
    p_max_w: f64,
    p_points: usize,
    p_log: bool,
    pa_list: Vec<f64>,
    a2_list: Vec<f64>,
    sigma2_dbm: f64,
    seed: u64,
    out_dir: PathBuf,
    symbols: Vec<f64>,
    t_sym: f64,
    cdf_points: usize,
    sample_count: usize,
    sample_kind: DistributionKind,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            circuit: CircuitParams::default(),
            quantum_efficiency: 0.7,
            channel_gain: 1.0,
            lambda_nm: vec![400.0, 950.0],
            p_min_w: 1e-6,
            p_max_w: 100e-3,
            p_points: 50,
            p_log: true,
            pa_list: vec![0.0],
            a2_list: vec![1e-3, 10e-3, 50e-3],
            sigma2_dbm: -60.0,
            seed: 42,
            out_dir: PathBuf::from("."),
            symbols: vec![10e-3, 1e-3, 10e-3, 1e-3],
            t_sym: 0.5,
            cdf_points: 201,
            sample_count: 1000,
            sample_kind: DistributionKind::AmplitudeUniform,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> CliResult<f64> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("key `{key}`: `{value}` is not a number")))
}

fn parse_usize(key: &str, value: &str) -> CliResult<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("key `{key}`: `{value}` is not a nonnegative integer")))
}

fn parse_list(key: &str, value: &str) -> CliResult<Vec<f64>> {
    value
        .split(',')
        .map(|item| parse_f64(key, item))
        .collect()
}

/// Compact, round-trippable float formatting for config echoes.
fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if (1e-3..1e6).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one configuration-file entry. Unknown keys are an error so a
    /// typo cannot silently fall back to a default.
    fn apply_key(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "is1" => self.circuit.is1 = parse_f64(key, value)?,
            "is2" => self.circuit.is2 = parse_f64(key, value)?,
            "vt" => self.circuit.vt = parse_f64(key, value)?,
            "rs" => self.circuit.rs = parse_f64(key, value)?,
            "rsh" => self.circuit.rsh = parse_f64(key, value)?,
            "rl" => self.circuit.rl = parse_f64(key, value)?,
            "rd" => self.circuit.rd = parse_f64(key, value)?,
            "cd" => self.circuit.cd = parse_f64(key, value)?,
            "l" => self.circuit.l = parse_f64(key, value)?,
            "quantum_efficiency" => self.quantum_efficiency = parse_f64(key, value)?,
            "channel_gain" => self.channel_gain = parse_f64(key, value)?,
            "lambda_nm" => self.lambda_nm = parse_list(key, value)?,
            "p_min_w" => self.p_min_w = parse_f64(key, value)?,
            "p_max_w" => self.p_max_w = parse_f64(key, value)?,
            "p_points" => self.p_points = parse_usize(key, value)?,
            "p_scale" => {
                self.p_log = match value.trim() {
                    "log" => true,
                    "linear" => false,
                    other => {
                        return Err(CliError::Usage(format!(
                            "key `p_scale`: `{other}` is neither `log` nor `linear`"
                        )))
                    }
                }
            }
            "pa" => self.pa_list = parse_list(key, value)?,
            "a2" => self.a2_list = parse_list(key, value)?,
            "sigma2_dbm" => self.sigma2_dbm = parse_f64(key, value)?,
            "seed" => {
                self.seed = value.trim().parse().map_err(|_| {
                    CliError::Usage(format!("key `seed`: `{value}` is not a u64"))
                })?
            }
            "out" => self.out_dir = PathBuf::from(value.trim()),
            "symbols" => self.symbols = parse_list(key, value)?,
            "t_sym" => self.t_sym = parse_f64(key, value)?,
            "cdf_points" => self.cdf_points = parse_usize(key, value)?,
            "sample_count" => self.sample_count = parse_usize(key, value)?,
            "sample_kind" => {
                self.sample_kind = match value.trim() {
                    "amplitude-uniform" => DistributionKind::AmplitudeUniform,
                    "power-proportional" => DistributionKind::PowerProportional,
                    "uniform" => DistributionKind::UniformS,
                    other => {
                        return Err(CliError::Usage(format!(
                            "key `sample_kind`: `{other}` is not one of \
                             amplitude-uniform, power-proportional, uniform"
                        )))
                    }
                }
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unknown configuration key `{other}`"
                )))
            }
        }
        Ok(())
    }

    fn load_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("reading config {}: {e}", path.display()))
        })?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "{}:{}: expected `key = value`, got `{line}`",
                    path.display(),
                    lineno + 1
                )));
            };
            self.apply_key(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn apply_flags(&mut self, args: &CommonArgs) -> CliResult<()> {
        if let Some(path) = &args.config {
            self.load_file(path)?;
        }
        if let Some(out) = &args.out {
            self.out_dir = out.clone();
        }
        if let Some(seed) = args.seed {
            self.seed = seed;
        }
        if let Some(dbm) = args.sigma2_dbm {
            self.sigma2_dbm = dbm;
        }
        if let Some(l) = &args.lambda_nm {
            self.lambda_nm = l.clone();
        }
        if let Some(pa) = &args.pa {
            self.pa_list = pa.clone();
        }
        if let Some(a2) = &args.a2 {
            self.a2_list = a2.clone();
        }
        Ok(())
    }

    fn validate(&self) -> CliResult<()> {
        self.circuit
            .validate()
            .map_err(|e| CliError::Usage(format!("circuit parameters: {e}")))?;
        if self.lambda_nm.is_empty()
            || self.pa_list.is_empty()
            || self.a2_list.is_empty()
            || self.p_points == 0
        {
            return Err(CliError::Usage(
                "empty grid: wavelengths, pa, a2, and p_points must be nonempty/positive".into(),
            ));
        }
        if !(self.channel_gain > 0.0 && self.channel_gain <= 1.0) {
            return Err(CliError::Usage(format!(
                "channel_gain {} outside (0, 1]",
                self.channel_gain
            )));
        }
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(CliError::Usage(format!(
                "quantum_efficiency {} outside (0, 1]",
                self.quantum_efficiency
            )));
        }
        Ok(())
    }

    fn sigma2_watts(&self) -> f64 {
        10f64.powf((self.sigma2_dbm - 30.0) / 10.0)
    }

    fn power_grid(&self) -> CliResult<Vec<f64>> {
        let grid = if self.p_log {
            log_grid(self.p_min_w, self.p_max_w, self.p_points)
        } else {
            linear_grid(self.p_min_w, self.p_max_w, self.p_points)
        };
        grid.map_err(|e| CliError::Usage(format!("power grid: {e}")))
    }

    fn lambdas_m(&self) -> Vec<f64> {
        self.lambda_nm.iter().map(|nm| nm * 1e-9).collect()
    }

    fn model(&self) -> CliResult<EhModelParams> {
        Ok(EhModelParams::from_circuit(self.circuit)?)
    }

    fn primary_r0(&self) -> f64 {
        spectral_response(
            self.lambda_nm[0] * 1e-9,
            self.quantum_efficiency,
            &PhysicalConstants::default(),
        )
    }

    /// Echo of every documented key with its resolved value, for the manifest.
    fn echo(&self) -> Vec<(String, String)> {
        let kind = match self.sample_kind {
            DistributionKind::AmplitudeUniform => "amplitude-uniform",
            DistributionKind::PowerProportional => "power-proportional",
            DistributionKind::UniformS => "uniform",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("is1", fmt_f64(self.circuit.is1)),
            ("is2", fmt_f64(self.circuit.is2)),
            ("vt", fmt_f64(self.circuit.vt)),
            ("rs", fmt_f64(self.circuit.rs)),
            ("rsh", fmt_f64(self.circuit.rsh)),
            ("rl", fmt_f64(self.circuit.rl)),
            ("rd", fmt_f64(self.circuit.rd)),
            ("cd", fmt_f64(self.circuit.cd)),
            ("l", fmt_f64(self.circuit.l)),
            ("quantum_efficiency", fmt_f64(self.quantum_efficiency)),
            ("channel_gain", fmt_f64(self.channel_gain)),
            ("lambda_nm", fmt_list(&self.lambda_nm)),
            ("p_min_w", fmt_f64(self.p_min_w)),
            ("p_max_w", fmt_f64(self.p_max_w)),
            ("p_points", self.p_points.to_string()),
            ("p_scale", if self.p_log { "log" } else { "linear" }.into()),
            ("pa", fmt_list(&self.pa_list)),
            ("a2", fmt_list(&self.a2_list)),
            ("sigma2_dbm", fmt_f64(self.sigma2_dbm)),
            ("seed", self.seed.to_string()),
            ("out", self.out_dir.display().to_string()),
            ("symbols", fmt_list(&self.symbols)),
            ("t_sym", fmt_f64(self.t_sym)),
            ("cdf_points", self.cdf_points.to_string()),
            ("sample_count", self.sample_count.to_string()),
            ("sample_kind", kind.into()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

fn utc_timestamp() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_else(|_| "unknown".to_string())
}

/// Writes the emitted files and a `<command>.manifest.txt` with their
/// SHA-256 checksums into the output directory.
fn write_outputs(cfg: &RunConfig, command: &str, files: &[(&str, &str)]) -> CliResult<()> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| {
        CliError::Runtime(format!("creating {}: {e}", cfg.out_dir.display()))
    })?;
    let mut checksums = Vec::new();
    for (name, contents) in files {
        let path = cfg.out_dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))?;
        checksums.push((name.to_string(), sha256_hex(contents.as_bytes())));
        println!("wrote {}", path.display());
    }
    let manifest = manifest_text(
        env!("CARGO_PKG_VERSION"),
        command,
        &utc_timestamp(),
        &cfg.echo(),
        &checksums,
    );
    let manifest_path = cfg.out_dir.join(format!("{command}.manifest.txt"));
    std::fs::write(&manifest_path, manifest)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", manifest_path.display())))?;
    println!("wrote {}", manifest_path.display());
    Ok(())
}

fn cmd_eh_sweep(cfg: &RunConfig) -> CliResult<i32> {
    let powers = cfg.power_grid()?;
    let lambdas = cfg.lambdas_m();
    let mut rows = Vec::new();
    for &pa in &cfg.pa_list {
        rows.extend(eh_sweep(
            &cfg.circuit,
            &lambdas,
            &powers,
            pa,
            cfg.quantum_efficiency,
        )?);
    }
    let csv = eh_sweep_csv(&rows)?;
    write_outputs(cfg, "eh-sweep", &[("eh-sweep.csv", &csv)])?;
    Ok(0)
}

fn cmd_waveform(cfg: &RunConfig) -> CliResult<i32> {
    if cfg.symbols.is_empty() {
        return Err(CliError::Usage("waveform needs at least one symbol".into()));
    }
    let peak_symbol = cfg.symbols.iter().cloned().fold(0.0, f64::max);
    let bound = cfg.a2_list.iter().cloned().fold(peak_symbol, f64::max);
    let frame = SymbolFrame::new(cfg.symbols.clone(), cfg.t_sym, bound)
        .map_err(|e| CliError::Usage(format!("symbol frame: {e}")))?;
    let mut drive = OpticalDrive::new(cfg.lambda_nm[0] * 1e-9, 0.0, cfg.pa_list[0]);
    drive.h = cfg.channel_gain;
    drive.quantum_efficiency = cfg.quantum_efficiency;
    let wave = simulate(
        &frame,
        &drive,
        &cfg.circuit,
        &SimConfig::default(),
        InitialState::DcOfFirstSymbol,
    )?;
    let metrics = steady_state_metrics(&wave, &cfg.circuit);
    let worst = metrics
        .iter()
        .map(|m| m.i_id_rel.max(m.vc_rel))
        .fold(0.0, f64::max);
    if worst > 1e-2 {
        eprintln!(
            "warning: steady-state assumption fails for this symbol duration \
             (worst per-symbol residual {worst:.2e} > 1e-2); \
             the information current does not settle within T = {} s",
            fmt_f64(cfg.t_sym)
        );
    }
    let csv = waveform_csv(&wave)?;
    let metrics_table = metrics_text(&metrics);
    write_outputs(
        cfg,
        "waveform",
        &[
            ("waveform.csv", &csv),
            ("waveform-metrics.txt", &metrics_table),
        ],
    )?;
    Ok(0)
}

fn cmd_cdf_table(cfg: &RunConfig, points: Option<usize>) -> CliResult<i32> {
    let points = points.unwrap_or(cfg.cdf_points);
    if points < 2 {
        return Err(CliError::Usage("cdf-table needs at least 2 grid points".into()));
    }
    let rows = cdf_table(
        &cfg.model()?,
        cfg.primary_r0(),
        cfg.channel_gain,
        cfg.pa_list[0],
        cfg.sigma2_watts(),
        &cfg.a2_list,
        points,
    )?;
    let csv = cdf_table_csv(&rows)?;
    write_outputs(cfg, "cdf-table", &[("cdf-table.csv", &csv)])?;
    Ok(0)
}

fn cmd_rate_sweep(cfg: &RunConfig) -> CliResult<i32> {
    let rows = rate_sweep(
        &cfg.model()?,
        cfg.primary_r0(),
        cfg.channel_gain,
        cfg.sigma2_watts(),
        &cfg.a2_list,
        &cfg.pa_list,
    )?;
    let csv = rate_sweep_csv(&rows)?;
    write_outputs(cfg, "rate-sweep", &[("rate-sweep.csv", &csv)])?;
    Ok(0)
}

fn cmd_validate(cfg: &RunConfig) -> CliResult<i32> {
    let report = run_all(&cfg.circuit, cfg.seed)?;
    print!("{}", report.render());
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn cmd_sample(cfg: &RunConfig, count: Option<usize>, kind: Option<KindArg>) -> CliResult<i32> {
    let count = count.unwrap_or(cfg.sample_count);
    if count == 0 {
        return Err(CliError::Usage("sample count must be positive".into()));
    }
    let kind = kind.map(DistributionKind::from).unwrap_or(cfg.sample_kind);
    let rate_cfg = RateConfig::new(
        cfg.model()?,
        cfg.primary_r0(),
        cfg.channel_gain,
        cfg.pa_list[0],
        cfg.a2_list[0],
        cfg.sigma2_watts(),
    )?;
    let dist = TransmitDistribution::new(kind, rate_cfg)?;
    let samples = channel_samples(&dist, count, cfg.seed)?;
    let csv = samples_csv(&samples)?;
    write_outputs(cfg, "sample", &[("samples.csv", &csv)])?;
    Ok(0)
}

fn resolve(common: &CommonArgs) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::default();
    cfg.apply_flags(common)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::EhSweep(common) => cmd_eh_sweep(&resolve(&common)?),
        Command::Waveform(args) => {
            let mut cfg = resolve(&args.common)?;
            if let Some(symbols) = args.symbols {
                cfg.symbols = symbols;
            }
            if let Some(t_sym) = args.t_sym {
                cfg.t_sym = t_sym;
            }
            cmd_waveform(&cfg)
        }
        Command::CdfTable(args) => cmd_cdf_table(&resolve(&args.common)?, args.points),
        Command::RateSweep(common) => cmd_rate_sweep(&resolve(&common)?),
        Command::Validate(common) => cmd_validate(&resolve(&common)?),
        Command::Sample(args) => cmd_sample(&resolve(&args.common)?, args.count, args.kind),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
