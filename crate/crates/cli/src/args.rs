use std::f64::consts::TAU;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sqrl_core::engine::Preset;
use sqrl_core::output::Format;
use sqrl_core::qubit::GeneratorScale;

/// Simulate semi-quantum reinforcement learning of a qubit state and compare
/// it with budget-matched maximum-likelihood tomography.
///
/// All angles are in radians. Exit codes: 0 success, 1 runtime error, 2 usage error.
#[derive(Debug, Parser)]
#[command(name = "sqrl-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run episodes and write every step (run_id,k,m,theta,phi,delta,fidelity).
    Run(CommonArgs),
    /// Run many seeds per epsilon and write per-iteration mean/std (k,mean,std).
    Batch(CommonArgs),
    /// Compare learner fidelity with tomography at matched photon budgets.
    Compare(CommonArgs),
    /// Repeat budget-limited tomography and write each reconstruction fidelity.
    Qst(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Run,
    Batch,
    Compare,
    Qst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn format(self) -> Format {
        match self {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    E1,
    E2,
    E3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GeneratorArg {
    Half,
    Full,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Named environment state: e1 = (H+V)/√2, e2 = (H+e^{iπ/4}V)/√2, e3 = 0.948H + e^{0.890i}0.317V.
    #[arg(long, value_enum, conflicts_with_all = ["theta", "phi"])]
    env: Option<PresetArg>,
    /// Environment polar angle in [0, π] (use with --phi).
    #[arg(long, requires = "phi", allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Environment azimuthal angle (use with --theta).
    #[arg(long, requires = "theta", allow_negative_numbers = true)]
    phi: Option<f64>,
    /// Comma-separated reward/punishment ratios, each in (0, 1).
    #[arg(long, value_delimiter = ',', default_value = "0.8", value_parser = parse_epsilon)]
    epsilon: Vec<f64>,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    iterations: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial exploration range (radians); also the cap on its growth.
    #[arg(long, default_value_t = TAU, value_parser = parse_delta)]
    delta_init: f64,
    /// Depolarizing probability applied to each environment copy.
    #[arg(long, default_value_t = 0.0, value_parser = parse_probability)]
    noise_p: f64,
    /// Tomography stride for `compare` (multiple of 3).
    #[arg(long, default_value_t = 3)]
    qst_every: u64,
    /// Total photons per tomography run for `qst`.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(3..))]
    photons: u64,
    /// Tolerance for convergence-step detection in summaries.
    #[arg(long, default_value_t = 0.02, value_parser = parse_positive)]
    convergence_tol: f64,
    /// Generator scale for agent rotations: half (S = σ/2) or full (S = σ).
    #[arg(long, value_enum, default_value = "half")]
    generators: GeneratorArg,
    /// Account for the post-selected CNOT (success probability 1/2) in the ledger.
    #[arg(long)]
    physical: bool,
    /// Pin the seed-derivation scheme used for golden trajectories.
    #[arg(long)]
    golden: bool,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("epsilon must lie strictly between 0 and 1, got {v}"))
    }
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("expected a probability in [0, 1], got {v}"))
    }
}

fn parse_delta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a finite non-negative angle, got {v}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {v}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvSpec {
    Preset(Preset),
    Angles { theta: f64, phi: f64 },
}

impl EnvSpec {
    pub fn angles(&self) -> (f64, f64) {
        match *self {
            EnvSpec::Preset(p) => p.angles(),
            EnvSpec::Angles { theta, phi } => (theta, phi),
        }
    }
}

/// Validated invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliConfig {
    pub command: CommandKind,
    pub env: EnvSpec,
    pub epsilons: Vec<f64>,
    pub iterations: usize,
    pub runs: usize,
    pub seed: u64,
    pub delta_init: f64,
    pub noise_p: f64,
    pub qst_every: usize,
    pub photons: u64,
    pub convergence_tol: f64,
    pub generators: GeneratorScale,
    pub physical: bool,
    pub golden: bool,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

/// Parses `argv` (including the program name). Usage problems come back as
/// clap errors, which exit with status 2.
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (kind, a) = match cli.command {
        Command::Run(a) => (CommandKind::Run, a),
        Command::Batch(a) => (CommandKind::Batch, a),
        Command::Compare(a) => (CommandKind::Compare, a),
        Command::Qst(a) => (CommandKind::Qst, a),
    };
    let usage = |kind: ErrorKind, msg: String| Cli::command().error(kind, msg);

    let env = match (a.env, a.theta, a.phi) {
        (Some(p), _, _) => EnvSpec::Preset(match p {
            PresetArg::E1 => Preset::E1,
            PresetArg::E2 => Preset::E2,
            PresetArg::E3 => Preset::E3,
        }),
        (None, Some(theta), Some(phi)) => {
            if !(0.0..=std::f64::consts::PI).contains(&theta) || !phi.is_finite() {
                return Err(usage(
                    ErrorKind::ValueValidation,
                    format!("--theta must lie in [0, pi], got {theta}"),
                ));
            }
            EnvSpec::Angles { theta, phi }
        }
        _ => {
            return Err(usage(
                ErrorKind::MissingRequiredArgument,
                "an environment is required: --env e1|e2|e3 or --theta/--phi".into(),
            ))
        }
    };

    if matches!(kind, CommandKind::Run | CommandKind::Compare) && a.epsilon.len() != 1 {
        return Err(usage(
            ErrorKind::ArgumentConflict,
            format!("`{}` takes exactly one --epsilon value", kind_name(kind)),
        ));
    }
    if kind == CommandKind::Batch && a.epsilon.len() > 1 && a.output.is_none() {
        return Err(usage(
            ErrorKind::MissingRequiredArgument,
            "a batch over several epsilons writes one file per epsilon and needs --output".into(),
        ));
    }
    if a.qst_every < 3 || !a.qst_every.is_multiple_of(3) {
        return Err(usage(
            ErrorKind::ValueValidation,
            format!("--qst-every must be a positive multiple of 3, got {}", a.qst_every),
        ));
    }

    Ok(CliConfig {
        command: kind,
        env,
        epsilons: a.epsilon,
        iterations: a.iterations as usize,
        runs: a.runs as usize,
        seed: a.seed,
        delta_init: a.delta_init,
        noise_p: a.noise_p,
        qst_every: a.qst_every as usize,
        photons: a.photons,
        convergence_tol: a.convergence_tol,
        generators: match a.generators {
            GeneratorArg::Half => GeneratorScale::Half,
            GeneratorArg::Full => GeneratorScale::Full,
        },
        physical: a.physical,
        golden: a.golden,
        output: a.output,
        format: a.format,
    })
}

fn kind_name(kind: CommandKind) -> &'static str {
    match kind {
        CommandKind::Run => "run",
        CommandKind::Batch => "batch",
        CommandKind::Compare => "compare",
        CommandKind::Qst => "qst",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn parse(line: &str) -> Result<CliConfig, clap::Error> {
        parse_args(std::iter::once("sqrl-sim").chain(line.split_whitespace()))
    }

    #[test]
    fn run_with_preset() {
        let c = parse("run --env e1 --epsilon 0.5 --seed 42").unwrap();
        assert_eq!(c.command, CommandKind::Run);
        assert_eq!(c.env.angles(), (PI / 2.0, 0.0));
        assert_eq!(c.epsilons, vec![0.5]);
        assert_eq!(c.seed, 42);
    }

    #[test]
    fn defaults() {
        let c = parse("batch --env e2").unwrap();
        assert_eq!(c.iterations, 50);
        assert_eq!(c.runs, 20);
        assert_eq!(c.epsilons, vec![0.8]);
        assert_eq!(c.delta_init, TAU);
        assert_eq!(c.noise_p, 0.0);
        assert_eq!(c.qst_every, 3);
        assert_eq!(c.format, OutputFormat::Csv);
        assert!(!c.golden);
    }

    #[test]
    fn three_epsilon_batch() {
        let c = parse("batch --env e3 --epsilon 0.8,0.65,0.5 --runs 20 --output out.csv").unwrap();
        assert_eq!(c.epsilons, vec![0.8, 0.65, 0.5]);
        assert_eq!(c.env, EnvSpec::Preset(Preset::E3));
        assert_eq!(c.env.angles(), (2.0 * 0.948f64.acos(), 0.890));
    }

    #[test]
    fn explicit_angles() {
        let c = parse("run --theta 1.2 --phi -0.3").unwrap();
        assert_eq!(c.env, EnvSpec::Angles { theta: 1.2, phi: -0.3 });
    }

    #[test]
    fn usage_errors() {
        for bad in [
            "run --env e1 --epsilon 1.5",
            "run --env e1 --epsilon 0",
            "run --env e1 --bogus",
            "run",
            "run --theta 1.0",
            "run --theta 4.0 --phi 0",
            "run --env e1 --theta 1 --phi 0",
            "run --env e1 --epsilon 0.5,0.8",
            "batch --env e1 --epsilon 0.5,0.8",
            "compare --env e1 --qst-every 4",
            "qst --env e1 --photons 2",
            "run --env e1 --noise-p 1.5",
            "run --env e4",
            "frobnicate --env e1",
        ] {
            let err = parse(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn config_echo_round_trips() {
        let c = parse("compare --env e1 --epsilon 0.5 --runs 7 --seed 9 --format json -o x.json").unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<CliConfig>(&json).unwrap(), c);
        let c = parse("run --theta 0.123456789 --phi 2.5 --delta-init 3.3 --generators full").unwrap();
        let json = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(serde_json::from_str::<CliConfig>(&json).unwrap(), c);
    }
}
