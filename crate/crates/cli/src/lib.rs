//! Library half of the `sqrl-sim` binary: argument parsing and command execution.

pub mod args;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use sqrl_core::engine::{run_episode, EpisodeConfig};
use sqrl_core::harness::{
    compare_sqrl_qst, resource_ledger, run_batch, BatchConfig, CopyAccounting, ResourceLedger,
};
use sqrl_core::output::{
    aggregate_table, comparison_table, format_float, trajectory_table, Cell, Table,
};
use sqrl_core::rng::{self, SeedDerivation};
use sqrl_core::tomography::qst_baseline;

pub use args::{parse_args, CliConfig, CommandKind, EnvSpec, OutputFormat};

pub const QST_COLUMNS: [&str; 3] = ["run_id", "total_photons", "fidelity"];

/// Environment variable limiting the worker thread count.
pub const THREADS_ENV: &str = "SQRL_SIM_THREADS";

/// Sidecar written next to `--output` as `<output>.meta.json`.
#[derive(Debug, Serialize)]
pub struct RunMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: CliConfig,
    pub seed_derivation: SeedDerivation,
    pub ledger: ResourceLedger,
    pub files: Vec<PathBuf>,
    pub summary: Vec<EpsilonSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_std: Option<f64>,
    /// Runs that never settle count as iterations + 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_convergence_step: Option<f64>,
    /// k ranges where the learner's mean fidelity beats tomography.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominance_windows: Option<Vec<[usize; 2]>>,
}

/// Tables produced by one invocation, with their destinations.
pub struct Execution {
    pub outputs: Vec<(Option<PathBuf>, Table)>,
    pub metadata: RunMetadata,
}

pub fn batch_config(config: &CliConfig) -> Result<BatchConfig> {
    let (theta, phi) = config.env.angles();
    let mut base = EpisodeConfig::new(theta, phi, config.epsilons[0])?
        .with_iterations(config.iterations)
        .with_seed(config.seed);
    base.delta_init = config.delta_init;
    base.delta_max = base.delta_max.max(config.delta_init);
    base.noise_p = config.noise_p;
    base.generators = config.generators;
    base.validate()?;
    let mut batch = BatchConfig::new(base, config.runs, config.epsilons.clone());
    batch.qst_every = config.qst_every;
    if config.golden {
        batch.seed_derivation = SeedDerivation::V1;
    }
    batch.validate()?;
    Ok(batch)
}

/// Runs the command without touching the filesystem.
pub fn execute(config: &CliConfig) -> Result<Execution> {
    let batch = batch_config(config)?;
    let accounting = if config.physical {
        CopyAccounting::Physical
    } else {
        CopyAccounting::Ideal
    };
    let mut qst_photons = 0;
    let mut summary = Vec::new();

    let tables: Vec<Table> = match config.command {
        CommandKind::Run => {
            let trajectories = (0..config.runs)
                .into_par_iter()
                .map(|run| Ok(run_episode(&batch.episode(0, run, config.epsilons[0])?)?))
                .collect::<Result<Vec<_>>>()?;
            vec![trajectory_table(
                trajectories.iter().enumerate().map(|(i, t)| (i, t.as_slice())),
            )]
        }
        CommandKind::Batch => {
            let result = run_batch(&batch)?;
            let mut tables = Vec::new();
            for eb in &result.per_epsilon {
                summary.push(EpsilonSummary {
                    epsilon: eb.epsilon,
                    final_mean: Some(eb.curve.final_mean()),
                    final_std: Some(eb.curve.final_std()),
                    median_convergence_step: Some(eb.median_convergence_step(config.convergence_tol)?),
                    dominance_windows: None,
                });
                tables.push(aggregate_table(&eb.curve));
            }
            tables
        }
        CommandKind::Compare => {
            let result = compare_sqrl_qst(&batch)?;
            let mut tables = Vec::new();
            for t in &result {
                qst_photons = t.rows.last().map_or(0, |r| r.qst_photons);
                summary.push(EpsilonSummary {
                    epsilon: t.epsilon,
                    final_mean: None,
                    final_std: None,
                    median_convergence_step: None,
                    dominance_windows: Some(
                        t.dominance_windows().into_iter().map(|w| [*w.start(), *w.end()]).collect(),
                    ),
                });
                tables.push(comparison_table(t));
            }
            tables
        }
        CommandKind::Qst => {
            let env = batch.base.environment()?;
            let photons = config.photons as usize;
            qst_photons = 3 * (photons / 3);
            let fids = (0..config.runs)
                .into_par_iter()
                .map(|run| {
                    let mut r = rng::stream(batch.tomography_seed(photons, run));
                    Ok(qst_baseline(&env, config.photons, &mut r)?)
                })
                .collect::<Result<Vec<f64>>>()?;
            let rows = fids
                .iter()
                .enumerate()
                .map(|(i, &f)| vec![Cell::Int(i as u64), Cell::Int(config.photons), Cell::Float(f)])
                .collect();
            vec![Table {
                columns: QST_COLUMNS.to_vec(),
                rows,
            }]
        }
    };

    let paths: Vec<Option<PathBuf>> = match &config.output {
        None => vec![None; tables.len()],
        Some(p) if tables.len() == 1 => vec![Some(p.clone())],
        Some(p) => config
            .epsilons
            .iter()
            .map(|&eps| Some(per_epsilon_path(p, eps, config.format)))
            .collect(),
    };

    let metadata = RunMetadata {
        tool: "sqrl-sim",
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        seed_derivation: batch.seed_derivation,
        ledger: resource_ledger(config.iterations, accounting, qst_photons),
        files: paths.iter().flatten().cloned().collect(),
        summary,
    };
    Ok(Execution {
        outputs: paths.into_iter().zip(tables).collect(),
        metadata,
    })
}

/// `out.csv` with ε = 0.65 becomes `out_eps0.65.csv`.
pub fn per_epsilon_path(output: &Path, epsilon: f64, format: OutputFormat) -> PathBuf {
    let stem = output.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    let ext = output
        .extension()
        .map_or_else(|| format.extension().to_string(), |e| e.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}_eps{}.{ext}", format_float(epsilon)))
}

pub fn metadata_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes tables to their files (or stdout) plus the metadata sidecar, and
/// prints a short summary on stderr.
pub fn write_outputs(config: &CliConfig, execution: &Execution) -> Result<()> {
    let format = config.format.format();
    let stdout = std::io::stdout();
    for (path, table) in &execution.outputs {
        match path {
            Some(p) => {
                let mut buf = Vec::new();
                table.write(format, &mut buf)?;
                fs::write(p, buf).with_context(|| format!("writing {}", p.display()))?;
            }
            None => table.write(format, &mut stdout.lock())?,
        }
    }
    if let Some(out) = &config.output {
        let meta = metadata_path(out);
        let mut json = serde_json::to_string_pretty(&execution.metadata)?;
        json.push('\n');
        fs::write(&meta, json).with_context(|| format!("writing {}", meta.display()))?;
    }
    let mut err = std::io::stderr().lock();
    for s in &execution.metadata.summary {
        if let (Some(m), Some(sd), Some(k)) = (s.final_mean, s.final_std, s.median_convergence_step) {
            writeln!(
                err,
                "epsilon={} final_mean={} final_std={} median_convergence_step={}",
                format_float(s.epsilon),
                format_float(m),
                format_float(sd),
                format_float(k)
            )?;
        }
        if let Some(w) = &s.dominance_windows {
            let spans: Vec<String> = w.iter().map(|[a, b]| format!("{a}-{b}")).collect();
            writeln!(err, "epsilon={} sqrl_beats_qst_at_k=[{}]", format_float(s.epsilon), spans.join(","))?;
        }
    }
    Ok(())
}
