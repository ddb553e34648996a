//! Command-line front end: `theory`, `run` and `sweep`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 resource
//! limit, 1 I/O failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::output::{self, fmt_g9};
use crate::simulator::{self, CodebookPolicy, Mode};
use crate::theory::{self, SystemParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "supercode",
    version,
    about = "Superimposed coded and uncoded transmission of a Gaussian source over the AWGN channel"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print capacity, optimum distortion and the scheme coefficients per rate.
    Theory(CommonArgs),
    /// Simulate one (rho, n) point and write a report.
    Run(CommonArgs),
    /// Simulate a rho x n grid and write one CSV row per point.
    Sweep(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat TOML config file; flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Source variance.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Channel input power budget P.
    #[arg(long)]
    pub power: Option<f64>,
    /// Channel noise variance N.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Quantizer rate(s) in bits per symbol, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub rho: Option<Vec<f64>>,
    /// Blocklength(s), comma separated.
    #[arg(long = "n", value_delimiter = ',', num_args = 1..)]
    pub n: Option<Vec<usize>>,
    /// Number of simulated blocks per point.
    #[arg(long)]
    pub trials: Option<usize>,
    /// full | genie | uncoded
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Encoder cosine tolerance (default 0.5/sqrt(n)).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Codeword sphere shrink factor in [0, 1).
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// fixed | fresh_per_trial
    #[arg(long = "codebook-policy")]
    pub codebook_policy: Option<CodebookPolicy>,
    /// Output file (standard output when absent).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// json | csv
    #[arg(long)]
    pub format: Option<OutputFormat>,
    /// Omit the timestamp so repeated runs are byte-identical.
    #[arg(long)]
    pub deterministic: bool,
}

impl CommonArgs {
    fn flags(&self) -> RunConfig {
        RunConfig {
            sigma2: self.sigma2,
            power: self.power,
            noise: self.noise,
            rho: self.rho.clone(),
            n: self.n.clone(),
            trials: self.trials,
            mode: self.mode,
            epsilon: self.epsilon,
            delta: self.delta,
            seed: self.seed,
            codebook_policy: self.codebook_policy,
            out: self.out.clone(),
            format: self.format,
            deterministic: self.deterministic.then_some(true),
        }
    }

    /// Config file (if any) with flag overrides applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(base.overridden_by(self.flags()))
    }
}

type Handler = fn(&RunConfig, &mut dyn Write, &mut dyn Write) -> Result<i32>;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Resource(_) => EXIT_RESOURCE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

/// Runs a parsed command line; diagnostics go to `stderr`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let (args, cmd): (&CommonArgs, Handler) = match &cli.command {
        Command::Theory(a) => (a, cmd_theory),
        Command::Run(a) => (a, cmd_run),
        Command::Sweep(a) => (a, cmd_sweep),
    };
    match args.resolve().and_then(|cfg| cmd(&cfg, stdout, stderr)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn timestamp(cfg: &RunConfig) -> Option<u64> {
    if cfg.deterministic() {
        None
    } else {
        SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
    }
}

fn write_output(cfg: &RunConfig, content: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(content)?;
            f.flush()?;
        }
        None => stdout.write_all(content)?,
    }
    Ok(())
}

/// Theory table: capacity, `D*`, and one row per rate.
pub fn cmd_theory(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let (sigma2, power, noise) = cfg.channel()?;
    let cap = theory::capacity(power, noise)?;
    let d_star = theory::optimal_distortion(sigma2, power, noise)?;
    writeln!(
        stdout,
        "# sigma2 = {}, P = {}, N = {}",
        fmt_g9(sigma2),
        fmt_g9(power),
        fmt_g9(noise)
    )?;
    writeln!(stdout, "C = {}", fmt_g9(cap))?;
    writeln!(stdout, "D* = {}", fmt_g9(d_star))?;

    let mut table = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Usage(format!("csv: {e}"));
    table
        .write_record([
            "rho",
            "D_rho",
            "alpha",
            "beta",
            "gamma",
            "Delta",
            "radius2",
            "effective_snr",
            "error",
        ])
        .map_err(csv_err)?;
    let rhos = cfg.rho_grid();
    let mut failures = 0;
    for &rho in &rhos {
        let params = SystemParams::new(sigma2, power, noise, rho, 1).with_delta(cfg.delta());
        let row = theory::coefficients(&params).and_then(|c| {
            Ok(vec![
                fmt_g9(rho),
                fmt_g9(theory::distortion_rate(sigma2, rho)?),
                fmt_g9(c.alpha),
                fmt_g9(c.beta),
                fmt_g9(c.gamma),
                fmt_g9(c.delta_q),
                fmt_g9(c.radius2),
                fmt_g9(theory::effective_decode_snr(&c, sigma2, noise)?),
                String::new(),
            ])
        });
        let row = row.unwrap_or_else(|e| {
            failures += 1;
            let mut r = vec![String::new(); 9];
            r[0] = fmt_g9(rho);
            r[8] = e.to_string();
            r
        });
        table.write_record(&row).map_err(csv_err)?;
    }
    let bytes = table.into_inner().map_err(|e| Error::Usage(format!("csv: {e}")))?;
    stdout.write_all(&bytes)?;
    if !rhos.is_empty() && failures == rhos.len() {
        writeln!(stderr, "error: every requested rate is invalid")?;
        return Ok(EXIT_USAGE);
    }
    Ok(EXIT_OK)
}

/// One simulation; report to `--out` (or standard output) and a summary
/// line to standard output (or standard error when the report took it).
pub fn cmd_run(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let (rho, n) = cfg.single_point()?;
    let params = cfg.params(rho, n)?;
    let mode = cfg.mode();
    let report = simulator::run(&params, cfg.trials(), mode, cfg.policy())?;

    let content = match cfg.format() {
        OutputFormat::Json => output::report_json(&report, timestamp(cfg))?.into_bytes(),
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            output::write_csv(&mut buf, &[output::report_row(&report)])?;
            buf
        }
    };
    write_output(cfg, &content, stdout)?;

    let summary = format!(
        "mode={} rho={} n={} trials={} mean_distortion={} stderr={} ci95=[{}, {}] D*={} mean_power={} encode_failure_rate={} decode_error_rate={}",
        report.mode,
        fmt_g9(report.params.rho),
        report.params.n,
        report.num_trials,
        fmt_g9(report.mean_distortion),
        fmt_g9(report.stderr_distortion),
        fmt_g9(report.ci_distortion[0]),
        fmt_g9(report.ci_distortion[1]),
        fmt_g9(report.theory.optimal_distortion),
        fmt_g9(report.mean_power),
        fmt_g9(report.encode_failure_rate),
        fmt_g9(report.decode_error_rate),
    );
    if cfg.out.is_some() {
        writeln!(stdout, "{summary}")?;
    } else {
        writeln!(stderr, "{summary}")?;
    }
    for w in &report.warnings {
        writeln!(stderr, "warning: {w}")?;
    }
    Ok(EXIT_OK)
}

/// Grid simulation, one CSV row (or JSON object) per point, rho-major.
pub fn cmd_sweep(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let rhos = cfg.rho_grid();
    let ns = cfg.n_grid();
    let mode = cfg.mode();
    let trials = cfg.trials();

    if rhos.is_empty() || ns.is_empty() {
        let content = match cfg.format() {
            OutputFormat::Csv => {
                let mut buf = Vec::new();
                output::write_csv(&mut buf, &[])?;
                buf
            }
            OutputFormat::Json => output::sweep_json(&[], timestamp(cfg))?.into_bytes(),
        };
        write_output(cfg, &content, stdout)?;
        writeln!(stderr, "error: empty rho or n grid")?;
        return Ok(EXIT_USAGE);
    }

    let (sigma2, power, noise) = cfg.channel()?;
    let base = SystemParams {
        sigma2,
        power,
        noise,
        rho: 0.0,
        n: 1,
        epsilon: 0.0,
        delta: cfg.delta(),
        seed: cfg.seed(),
    };
    let points = simulator::sweep(&base, &rhos, &ns, trials, mode, cfg.policy(), cfg.epsilon);

    let content = match cfg.format() {
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|p| match &p.result {
                    Ok(r) => output::report_row(r),
                    Err(e) => output::error_row(p.rho, p.n, trials, mode, cfg.seed(), e),
                })
                .collect();
            let mut buf = Vec::new();
            output::write_csv(&mut buf, &rows)?;
            buf
        }
        OutputFormat::Json => output::sweep_json(&points, timestamp(cfg))?.into_bytes(),
    };
    write_output(cfg, &content, stdout)?;

    let mut ok = 0;
    let mut all_resource = true;
    for p in &points {
        match &p.result {
            Ok(r) => {
                ok += 1;
                for w in &r.warnings {
                    writeln!(stderr, "warning: rho={} n={}: {w}", fmt_g9(p.rho), p.n)?;
                }
            }
            Err(e) => {
                all_resource &= e.is_resource();
                writeln!(stderr, "error: rho={} n={}: {e}", fmt_g9(p.rho), p.n)?;
            }
        }
    }
    Ok(match (ok, all_resource) {
        (0, true) => EXIT_RESOURCE,
        (0, false) => EXIT_USAGE,
        _ => EXIT_OK,
    })
}
