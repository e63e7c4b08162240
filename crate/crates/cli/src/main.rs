//! `sqss`: run sessions, sweep attacks, verify correctness and print the
//! qubit-efficiency table.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 session aborted by the decoy check.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use sqss_core::adversary::{AttackModel, EmAttack, EmParams, ProbeLayout};
use sqss_core::analysis::{
    efficiency_table, estimate_detection, trial_secret, verify_all, write_detection_report, write_efficiency_report,
    ReportFormat, VerifyOptions,
};
use sqss_core::config::ConfigFile;
use sqss_core::protocol::{party_name, run_session, Secret, SessionConfig, SessionOutcome};
use sqss_core::quantum::Operator;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_ABORT: u8 = 3;

const CONFIG_KEYS: &[&str] = &[
    "n", "L", "seed", "decoys", "abort_threshold", "attack", "attacks", "alpha", "beta", "mu", "nu", "probe_layout",
    "probe_dim", "ue_file", "uf_file", "colluders", "secret", "random_secret", "trials", "jobs", "n_max", "L_max",
    "inject_fault", "format",
];
const DEFAULT_SWEEP_ATTACKS: &str = "intercept-resend,measure-resend,double-cnot,em";

#[derive(Parser)]
#[command(name = "sqss", version, about = "Multi-party semi-quantum secret sharing simulator")]
struct Cli {
    /// Config file of `key = value` lines; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session and report the reconstructed secret and decoy statistics.
    Run(RunArgs),
    /// Estimate detection rates for a list of attacks.
    Sweep(SweepArgs),
    /// Exhaustive forced-outcome correctness and GHZ orthonormality checks.
    Verify(VerifyArgs),
    /// Qubit-efficiency table for the compared protocols.
    Efficiency(EfficiencyArgs),
}

#[derive(Args)]
struct SessionArgs {
    /// Number of classical parties.
    #[arg(long)]
    n: Option<usize>,
    /// Number of GHZ tuples.
    #[arg(long = "L", value_name = "L")]
    l: Option<usize>,
    /// Session seed; every random stream derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Decoys per party (default L).
    #[arg(long)]
    decoys: Option<usize>,
    /// Tolerated failed-decoy fraction per party (default 0).
    #[arg(long)]
    abort_threshold: Option<f64>,
}

#[derive(Args)]
struct AttackArgs {
    /// Entangle-measure alpha.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Entangle-measure beta.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Four comma-separated mu values.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    /// Four comma-separated nu values.
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<String>,
    /// constant, marked or wide.
    #[arg(long)]
    probe_layout: Option<String>,
    /// Probe dimension d.
    #[arg(long)]
    probe_dim: Option<usize>,
    /// U_E as a text matrix (row-major "re,im" tokens).
    #[arg(long, value_name = "PATH")]
    ue_file: Option<PathBuf>,
    /// U_F as a text matrix (row-major "re,im" tokens).
    #[arg(long, value_name = "PATH")]
    uf_file: Option<PathBuf>,
    /// Comma-separated 1-based colluding parties (default 1..n-1).
    #[arg(long)]
    colluders: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[command(flatten)]
    attack_params: AttackArgs,
    /// none, intercept-resend, measure-resend, double-cnot, em or collusion.
    #[arg(long)]
    attack: Option<String>,
    /// Comma-separated values, decimal or 0x-prefixed hex.
    #[arg(long, conflicts_with = "random_secret")]
    secret: Option<String>,
    /// Derive the secret from the session seed. This is also what happens
    /// when no --secret is given.
    #[arg(long)]
    random_secret: bool,
    /// Write the message log as JSON lines.
    #[arg(long, value_name = "PATH")]
    transcript: Option<PathBuf>,
    /// Write the full session result as JSON.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[command(flatten)]
    attack_params: AttackArgs,
    /// Comma-separated attack names; empty for none.
    #[arg(long)]
    attacks: Option<String>,
    /// Sessions per attack (default 1000).
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the detection report here.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long = "L-max", value_name = "L_MAX")]
    l_max: Option<usize>,
    /// Flip the published bit of party i on tuple j (1-based "i,j").
    #[arg(long, value_name = "I,J")]
    inject_fault: Option<String>,
    /// Seed for the random decoy operations.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EfficiencyArgs {
    /// Party counts: a single value or an inclusive range such as 1..5.
    #[arg(long)]
    n: Option<String>,
    /// Write the table here.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug)]
struct CliError(String);

impl<E: Display> From<E> for CliError {
    fn from(e: E) -> Self {
        Self(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn fail(msg: impl Into<String>) -> CliError {
    CliError(msg.into())
}

/// Flag value, else config value, else nothing.
struct Settings {
    file: ConfigFile,
}

impl Settings {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let file = match path {
            Some(p) => ConfigFile::load(p).map_err(|e| fail(format!("{}: {e}", p.display())))?,
            None => ConfigFile::default(),
        };
        if let Some(bad) = file.keys().find(|k| !CONFIG_KEYS.contains(k)) {
            return Err(fail(format!("unknown config key {bad:?}")));
        }
        Ok(Self { file })
    }

    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => Ok(self.file.get_parsed(key)?),
        }
    }

    fn pick_or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    fn session_config(&self, args: &SessionArgs) -> CliResult<SessionConfig> {
        let n = self.pick_or(args.n, "n", 2)?;
        let len = self.pick_or(args.l, "L", 4)?;
        let mut config = SessionConfig::new(n, len, self.pick_or(args.seed, "seed", 0)?);
        config.decoys_per_party = self.pick_or(args.decoys, "decoys", len)?;
        config.abort_threshold = self.pick_or(args.abort_threshold, "abort_threshold", 0.0)?;
        config.validate()?;
        Ok(config)
    }

    fn attack(&self, name: &str, args: &AttackArgs, n: usize) -> CliResult<AttackModel> {
        let attack = match name {
            "em" | "entangle-measure" => AttackModel::EntangleMeasure(self.em_attack(args)?),
            "collusion" => {
                let dishonest = match self.pick(args.colluders.clone(), "colluders")? {
                    Some(list) => parse_list::<usize>(&list)?
                        .into_iter()
                        .map(|p| p.checked_sub(1).ok_or_else(|| fail("colluding parties are numbered from 1")))
                        .collect::<CliResult<Vec<_>>>()?,
                    None => (0..n.saturating_sub(1)).collect(),
                };
                AttackModel::Collusion { dishonest }
            }
            other => AttackModel::from_name(other)?,
        };
        attack.validate(n)?;
        Ok(attack)
    }

    fn em_attack(&self, args: &AttackArgs) -> CliResult<EmAttack> {
        let ue_file: Option<PathBuf> = self.pick(args.ue_file.clone(), "ue_file")?;
        let uf_file: Option<PathBuf> = self.pick(args.uf_file.clone(), "uf_file")?;
        let probe_dim = self.pick(args.probe_dim, "probe_dim")?;
        match (ue_file, uf_file) {
            (Some(ue), Some(uf)) => {
                let read = |p: &Path| -> CliResult<Operator> {
                    let text = std::fs::read_to_string(p).map_err(|e| fail(format!("{}: {e}", p.display())))?;
                    Ok(Operator::parse_text(&text)?)
                };
                let (ue, uf) = (read(&ue)?, read(&uf)?);
                let dim = probe_dim.unwrap_or(ue.dim() / 2);
                return Ok(EmAttack::new(ue, uf, dim)?);
            }
            (None, None) => {}
            _ => return Err(fail("--ue-file and --uf-file must be given together")),
        }
        let alpha = self.pick(args.alpha, "alpha")?;
        let beta = self.pick(args.beta, "beta")?;
        let complement = |x: f64| (1.0 - x * x).max(0.0).sqrt();
        let (alpha, beta) = match (alpha, beta) {
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) => (a, complement(a)),
            (None, Some(b)) => (complement(b), b),
            (None, None) => (1.0, 0.0),
        };
        let four = |flag: &Option<String>, key: &str, default: f64| -> CliResult<[f64; 4]> {
            match self.pick(flag.clone(), key)? {
                None => Ok([default; 4]),
                Some(text) => {
                    let values = parse_list::<f64>(&text)?;
                    values.try_into().map_err(|v: Vec<f64>| fail(format!("--{key} needs 4 values, got {}", v.len())))
                }
            }
        };
        let mu = four(&args.mu, "mu", 1.0)?;
        let nu = four(&args.nu, "nu", 0.0)?;
        let layout = match self.pick(args.probe_layout.clone(), "probe_layout")? {
            Some(name) => {
                let dim = probe_dim.unwrap_or(if name == "wide" { 8 } else { 4 });
                ProbeLayout::from_name(&name, dim)?
            }
            None => {
                let mut layout = ProbeLayout::default_for(alpha, beta, &mu, &nu);
                if let Some(d) = probe_dim {
                    layout.dim = d;
                }
                layout
            }
        };
        Ok(EmAttack::canonical(&EmParams { alpha, beta, mu, nu, layout })?)
    }
}

fn parse_list<T: FromStr>(text: &str) -> CliResult<Vec<T>>
where
    T::Err: Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| fail(format!("{s:?}: {e}"))))
        .collect()
}

fn parse_secret_value(token: &str) -> CliResult<u64> {
    let token = token.trim();
    let parsed = match token.strip_prefix("0x").or_else(|| token.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => token.parse(),
    };
    parsed.map_err(|e| fail(format!("secret value {token:?}: {e}")))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn format_list(values: &[u64]) -> String {
    values.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

fn cmd_run(out: &mut Vec<u8>, settings: &Settings, args: &RunArgs) -> CliResult<u8> {
    let config = settings.session_config(&args.session)?;
    let attack_name = settings.pick_or(args.attack.clone(), "attack", "none".to_string())?;
    let attack = settings.attack(&attack_name, &args.attack_params, config.n)?;
    let secret_text: Option<String> = settings.pick(args.secret.clone(), "secret")?;
    let random = args.random_secret || settings.pick_or(None, "random_secret", false)?;
    let secret = match (secret_text, random) {
        (Some(_), true) => return Err(fail("give either --secret or --random-secret, not both")),
        (Some(text), false) => {
            let values = text.split(',').map(parse_secret_value).collect::<CliResult<Vec<_>>>()?;
            if values.len() != config.len {
                return Err(fail(format!("secret has {} values but L = {}", values.len(), config.len)));
            }
            Secret::new(config.n, values)?
        }
        (None, _) => trial_secret(&config)?,
    };

    let result = run_session(&config, &secret, &attack)?;
    if let Some(path) = &args.transcript {
        let mut out = create(path)?;
        result.transcript.write_jsonl(&mut out)?;
        out.flush()?;
    }
    if let Some(path) = &args.output {
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, &result)?;
        out.write_all(b"\n")?;
        out.flush()?;
    }

    writeln!(out, "attack: {}", result.attack)?;
    writeln!(out, "n = {}, L = {}, decoys per party = {}, seed = {}", config.n, config.len, config.decoys_per_party, config.seed)?;
    writeln!(out, "secret: {}", format_list(secret.values()))?;
    for (i, tally) in result.tallies.iter().enumerate() {
        writeln!(out, "{}: {} of {} decoy checks failed", party_name(i), tally.errors, tally.checked)?;
    }
    writeln!(out, "decoys checked: {}, failed: {}", result.decoys_checked(), result.decoy_errors())?;
    if let Some(c) = &result.collusion {
        let who: Vec<String> = c.guess.known.iter().map(|&i| party_name(i)).collect();
        writeln!(out, 
            "colluders {}: guessed {}, {} of {} tuples correct",
            who.join(","),
            format_list(c.guess.secret.values()),
            c.accuracy.tuples_correct,
            c.accuracy.tuples
        )?;
    }
    match &result.outcome {
        SessionOutcome::Reconstructed { secret: got } => {
            let verdict = if got == &secret { "matches" } else { "DIFFERS FROM" };
            writeln!(out, "status: reconstructed {} ({verdict} the dealer's secret)", format_list(got.values()))?;
            Ok(0)
        }
        SessionOutcome::Aborted { party, errors, checked } => {
            writeln!(out, "status: aborted ({} failed {errors} of {checked} decoy checks)", party_name(*party))?;
            Ok(EXIT_ABORT)
        }
    }
}

fn cmd_sweep(out: &mut Vec<u8>, settings: &Settings, args: &SweepArgs) -> CliResult<u8> {
    let config = settings.session_config(&args.session)?;
    let names = settings.pick_or(args.attacks.clone(), "attacks", DEFAULT_SWEEP_ATTACKS.to_string())?;
    let attacks = parse_list::<String>(&names)?
        .iter()
        .map(|name| settings.attack(name, &args.attack_params, config.n))
        .collect::<CliResult<Vec<_>>>()?;
    let trials = settings.pick_or(args.trials, "trials", 1000)?;
    let jobs = settings.pick_or(args.jobs, "jobs", 1)?;
    let format: ReportFormat = settings.pick_or(args.format.clone(), "format", "csv".to_string())?.parse()?;
    if jobs == 0 {
        return Err(fail("--jobs must be at least 1"));
    }

    let mut estimates = Vec::with_capacity(attacks.len());
    for attack in &attacks {
        estimates.push(estimate_detection(&config, attack, trials, jobs)?);
    }
    writeln!(out, "{:<18} {:>3} {:>4} {:>8} {:>10} {:>10} {:>21}", "attack", "n", "L", "trials", "per-decoy", "abort", "95% CI")?;
    for e in &estimates {
        writeln!(out, 
            "{:<18} {:>3} {:>4} {:>8} {:>10.6} {:>10.6} [{:.6}, {:.6}]",
            e.attack, e.n, e.l, e.trials, e.per_decoy_rate, e.session_abort_rate, e.ci_low, e.ci_high
        )?;
    }
    if let Some(path) = &args.output {
        write_detection_report(&estimates, format, create(path)?)?;
    }
    Ok(0)
}

fn cmd_verify(out: &mut Vec<u8>, settings: &Settings, args: &VerifyArgs) -> CliResult<u8> {
    let inject_fault = match settings.pick(args.inject_fault.clone(), "inject_fault")? {
        None => None,
        Some(text) => match parse_list::<usize>(&text)?.as_slice() {
            &[i, j] if i >= 1 && j >= 1 => Some((i - 1, j - 1)),
            _ => return Err(fail("--inject-fault takes 1-based \"i,j\"")),
        },
    };
    let options = VerifyOptions {
        n_max: settings.pick_or(args.n_max, "n_max", 3)?,
        l_max: settings.pick_or(args.l_max, "L_max", 2)?,
        inject_fault,
        seed: settings.pick_or(args.seed, "seed", 0)?,
    };
    let report = verify_all(&options)?;
    writeln!(out, "n <= {}, L <= {}", options.n_max, options.l_max)?;
    writeln!(out, "forced-outcome sessions: {}", report.sessions)?;
    writeln!(out, "GHZ overlap pairs: {}", report.ghz_pairs)?;
    if report.passed() {
        writeln!(out, "result: pass")?;
        return Ok(0);
    }
    writeln!(out, "result: FAIL ({} counterexamples, {} GHZ overlap failures)", report.failures.len(), report.ghz_failures.len())?;
    for c in report.failures.iter().take(10) {
        writeln!(out, "counterexample: {c}")?;
    }
    for g in report.ghz_failures.iter().take(10) {
        writeln!(out, "ghz: n={} k={} k'={} same_sign={} overlap={}", g.n, g.k, g.k_prime, g.same_sign, g.overlap)?;
    }
    Ok(EXIT_VERIFY_FAILED)
}

fn parse_range(text: &str) -> CliResult<std::ops::RangeInclusive<usize>> {
    let (lo, hi) = match text.split_once("..") {
        Some((lo, hi)) => (lo.trim().parse::<usize>()?, hi.trim_start_matches('=').trim().parse::<usize>()?),
        None => {
            let v = text.trim().parse::<usize>()?;
            (v, v)
        }
    };
    if lo == 0 || hi < lo {
        return Err(fail(format!("bad party range {text:?}")));
    }
    Ok(lo..=hi)
}

fn cmd_efficiency(out: &mut Vec<u8>, settings: &Settings, args: &EfficiencyArgs) -> CliResult<u8> {
    let range = parse_range(&settings.pick_or(args.n.clone(), "n", "1..5".to_string())?)?;
    let format: ReportFormat = settings.pick_or(args.format.clone(), "format", "csv".to_string())?.parse()?;
    let table = efficiency_table(range)?;
    writeln!(out, "{:<10} {:>3} {:>24}", "protocol", "n", "eta")?;
    for e in &table {
        writeln!(out, "{:<10} {:>3} {:>24}", e.protocol.label(), e.n, format!("{}/{}", e.eta.numer(), e.eta.denom()))?;
    }
    if let Some(path) = &args.output {
        write_efficiency_report(&table, format, create(path)?)?;
    }
    Ok(0)
}

fn dispatch(cli: &Cli, out: &mut Vec<u8>) -> CliResult<u8> {
    let settings = Settings::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Run(args) => cmd_run(out, &settings, args),
        Command::Sweep(args) => cmd_sweep(out, &settings, args),
        Command::Verify(args) => cmd_verify(out, &settings, args),
        Command::Efficiency(args) => cmd_efficiency(out, &settings, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Vec::new();
    let status = dispatch(&cli, &mut out);
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = std::io::stdout().write_all(&out);
    match status {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.0);
            ExitCode::from(EXIT_USAGE)
        }
    }
}
