//! Batch experiments: ε sweeps over many seeded runs, per-iteration mean/std
//! curves, convergence-step detection, budget-matched comparison against
//! tomography, and photon accounting.
//!
//! Runs inside a batch execute on the ambient rayon pool. Every run gets its
//! own stream derived from (base seed, ε index, run index), and reductions
//! walk runs in index order, so results do not depend on the thread count.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_episode, EpisodeConfig, StepRecord};
use crate::error::{Error, Result};
use crate::rng::{self, SeedDerivation, StreamKind};
use crate::tomography::qst_baseline;

pub const DEFAULT_CONVERGENCE_TOL: f64 = 0.02;
pub const DEFAULT_QST_EVERY: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    /// Template episode; its `seed` is the base seed and its ε is ignored.
    pub base: EpisodeConfig,
    pub n_runs: usize,
    pub epsilons: Vec<f64>,
    /// Tomography comparison stride in iterations; 0 disables it.
    pub qst_every: usize,
    #[serde(default)]
    pub seed_derivation: SeedDerivation,
}

impl BatchConfig {
    pub fn new(base: EpisodeConfig, n_runs: usize, epsilons: Vec<f64>) -> Self {
        Self {
            base,
            n_runs,
            epsilons,
            qst_every: DEFAULT_QST_EVERY,
            seed_derivation: SeedDerivation::LATEST,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs < 1 {
            return Err(Error::InvalidConfig("n_runs must be at least 1".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::InvalidConfig("at least one epsilon is required".into()));
        }
        for (i, &eps) in self.epsilons.iter().enumerate() {
            self.episode(i, 0, eps)?.validate()?;
        }
        Ok(())
    }

    pub fn episode_seed(&self, eps_index: usize, run: usize) -> u64 {
        self.seed_derivation
            .derive(self.base.seed, StreamKind::Episode, eps_index as u64, run as u64)
    }

    pub fn tomography_seed(&self, total_photons: usize, run: usize) -> u64 {
        self.seed_derivation
            .derive(self.base.seed, StreamKind::Tomography, total_photons as u64, run as u64)
    }

    /// Fully specified episode for run `run` of ε entry `eps_index`.
    pub fn episode(&self, eps_index: usize, run: usize, epsilon: f64) -> Result<EpisodeConfig> {
        Ok(self
            .base
            .clone()
            .with_epsilon(epsilon)?
            .with_seed(self.episode_seed(eps_index, run)))
    }
}

/// Per-iteration mean and sample standard deviation across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n_runs: usize,
}

impl AggregateCurve {
    /// Aggregates equal-length traces, summing in slice order.
    pub fn from_traces(traces: &[Vec<f64>]) -> Self {
        let n_runs = traces.len();
        let len = traces.first().map_or(0, Vec::len);
        let mut mean = vec![0.0; len];
        let mut std = vec![0.0; len];
        for k in 0..len {
            let (m, s) = mean_std(traces.iter().map(|t| t[k]));
            mean[k] = m;
            std[k] = s;
        }
        Self { mean, std, n_runs }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_std(&self) -> f64 {
        self.std.last().copied().unwrap_or(f64::NAN)
    }
}

/// Mean and sample (n − 1) standard deviation; std is 0 for a single value.
pub fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = sum / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonBatch {
    pub epsilon: f64,
    pub curve: AggregateCurve,
    /// Trajectories in run order.
    pub trajectories: Vec<Vec<StepRecord>>,
}

impl EpsilonBatch {
    pub fn fidelity_traces(&self) -> Vec<Vec<f64>> {
        self.trajectories
            .iter()
            .map(|t| t.iter().map(|r| r.fidelity).collect())
            .collect()
    }

    pub fn final_fidelities(&self) -> Vec<f64> {
        self.trajectories
            .iter()
            .map(|t| t.last().map_or(f64::NAN, |r| r.fidelity))
            .collect()
    }

    pub fn convergence_steps(&self, tol: f64) -> Result<Vec<Option<usize>>> {
        self.fidelity_traces()
            .iter()
            .map(|t| convergence_step(t, tol))
            .collect()
    }

    /// Median per-trajectory convergence step; trajectories that never settle
    /// count as n_iterations + 1.
    pub fn median_convergence_step(&self, tol: f64) -> Result<f64> {
        let never = self.curve.len() + 1;
        let steps: Vec<usize> = self
            .convergence_steps(tol)?
            .into_iter()
            .map(|k| k.unwrap_or(never))
            .collect();
        Ok(median(steps.iter().map(|&k| k as f64).collect()))
    }
}

pub fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub per_epsilon: Vec<EpsilonBatch>,
}

/// Runs every (ε, run) episode. Deterministic given the config.
pub fn run_batch(config: &BatchConfig) -> Result<BatchResult> {
    config.validate()?;
    let per_epsilon = config
        .epsilons
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let trajectories = (0..config.n_runs)
                .into_par_iter()
                .map(|run| run_episode(&config.episode(i, run, eps)?))
                .collect::<Result<Vec<_>>>()?;
            let traces: Vec<Vec<f64>> = trajectories
                .iter()
                .map(|t| t.iter().map(|r| r.fidelity).collect())
                .collect();
            Ok(EpsilonBatch {
                epsilon: eps,
                curve: AggregateCurve::from_traces(&traces),
                trajectories,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchResult { per_epsilon })
}

/// Smallest 1-based k from which every remaining value stays within `tol` of
/// the final value. `None` when only the last iteration qualifies.
pub fn convergence_step(curve: &[f64], tol: f64) -> Result<Option<usize>> {
    if !(tol > 0.0) {
        return Err(Error::Domain {
            what: "convergence tolerance",
            value: tol,
            range: "(0, inf)",
        });
    }
    let Some(&last) = curve.last() else {
        return Ok(None);
    };
    let n = curve.len();
    let settled_from = curve
        .iter()
        .rposition(|f| (f - last).abs() > tol)
        .map_or(0, |i| i + 1);
    let k = settled_from + 1;
    Ok((k < n).then_some(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopyAccounting {
    /// One deterministic environment copy per iteration.
    Ideal,
    /// Post-selected CNOT succeeding with probability 1/2: two raw pairs per
    /// useful iteration on average.
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceLedger {
    pub iterations: usize,
    pub env_copies_consumed: usize,
    pub expected_raw_pairs: f64,
    pub qst_photons_consumed: usize,
}

pub const CNOT_SUCCESS_PROBABILITY: f64 = 0.5;

pub fn resource_ledger(iterations: usize, accounting: CopyAccounting, qst_photons: usize) -> ResourceLedger {
    let expected_raw_pairs = match accounting {
        CopyAccounting::Ideal => iterations as f64,
        CopyAccounting::Physical => iterations as f64 / CNOT_SUCCESS_PROBABILITY,
    };
    ResourceLedger {
        iterations,
        env_copies_consumed: iterations,
        expected_raw_pairs,
        qst_photons_consumed: qst_photons,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub k: usize,
    pub sqrl_mean: f64,
    pub sqrl_std: f64,
    pub qst_mean: f64,
    pub qst_std: f64,
    /// Environment copies the learner had consumed by iteration k.
    pub sqrl_copies: usize,
    /// Photons the tomography run actually used (3·⌊k/3⌋).
    pub qst_photons: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub epsilon: f64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// Maximal runs of consecutive rows where sqrl_mean > qst_mean, as k ranges.
    pub fn dominance_windows(&self) -> Vec<RangeInclusive<usize>> {
        let mut windows = Vec::new();
        let mut open: Option<(usize, usize)> = None;
        for row in &self.rows {
            if row.sqrl_mean > row.qst_mean {
                open = Some(open.map_or((row.k, row.k), |(s, _)| (s, row.k)));
            } else if let Some((s, e)) = open.take() {
                windows.push(s..=e);
            }
        }
        if let Some((s, e)) = open {
            windows.push(s..=e);
        }
        windows
    }
}

/// Compares learner fidelity at k = qst_every, 2·qst_every, … with
/// tomography given the same k photons. One table per ε; the tomography
/// column does not depend on ε.
pub fn compare_sqrl_qst(config: &BatchConfig) -> Result<Vec<ComparisonTable>> {
    if config.qst_every < 3 || !config.qst_every.is_multiple_of(3) {
        return Err(Error::InvalidConfig(format!(
            "qst_every must be a positive multiple of 3, got {}",
            config.qst_every
        )));
    }
    let batch = run_batch(config)?;
    let env = config.base.environment()?;
    let ks: Vec<usize> = (config.qst_every..=config.base.n_iterations)
        .step_by(config.qst_every)
        .collect();

    let qst: Vec<(f64, f64)> = ks
        .iter()
        .map(|&k| {
            let fids = (0..config.n_runs)
                .into_par_iter()
                .map(|run| {
                    let mut r = rng::stream(config.tomography_seed(k, run));
                    qst_baseline(&env, k as u64, &mut r)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(mean_std(fids.iter().copied()))
        })
        .collect::<Result<_>>()?;

    Ok(batch
        .per_epsilon
        .iter()
        .map(|eb| ComparisonTable {
            epsilon: eb.epsilon,
            rows: ks
                .iter()
                .zip(&qst)
                .map(|(&k, &(qst_mean, qst_std))| {
                    let sqrl = resource_ledger(k, CopyAccounting::Ideal, 3 * (k / 3));
                    ComparisonRow {
                        k,
                        sqrl_mean: eb.curve.mean[k - 1],
                        sqrl_std: eb.curve.std[k - 1],
                        qst_mean,
                        qst_std,
                        sqrl_copies: sqrl.env_copies_consumed,
                        qst_photons: sqrl.qst_photons_consumed,
                    }
                })
                .collect(),
        })
        .collect())
}
