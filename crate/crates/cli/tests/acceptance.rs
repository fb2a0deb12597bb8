//! Acceptance gate. Runs every criterion at its pinned threshold, prints one
//! PASS/FAIL line per criterion, and exits non-zero if any criterion fails.

use std::f64::consts::TAU;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use sqrl_core::engine::{
    measure_single_shot, run_episode, run_episode_agent_picture, AgentFrame, EpisodeConfig, Outcome, Preset,
};
use sqrl_core::harness::{
    compare_sqrl_qst, resource_ledger, run_batch, BatchConfig, BatchResult, CopyAccounting,
    DEFAULT_CONVERGENCE_TOL,
};
use sqrl_core::qubit::{state_from_angles, PureQubitState};
use sqrl_core::rng;
use sqrl_core::tomography::{mle_reconstruct, simulate_counts, BasisCounts};

const SEED: u64 = 1;
const STAT_RUNS: usize = 1000;
const EPSILONS: [f64; 3] = [0.80, 0.65, 0.50];

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn random_state<R: Rng>(r: &mut R) -> PureQubitState {
    let theta = (1.0 - 2.0 * r.random::<f64>()).acos();
    let phi = TAU * r.random::<f64>();
    state_from_angles(theta, phi).unwrap()
}

fn batch(preset: Preset, epsilons: &[f64]) -> BatchResult {
    let (theta, phi) = preset.angles();
    let base = EpisodeConfig::new(theta, phi, epsilons[0]).unwrap().with_seed(SEED);
    run_batch(&BatchConfig::new(base, STAT_RUNS, epsilons.to_vec())).unwrap()
}

fn measurement_law() -> Verdict {
    let start = Instant::now();
    let mut r = rng::stream(SEED);
    let mut cases: Vec<(f64, f64)> = Preset::ALL.iter().map(|p| p.angles()).collect();
    for _ in 0..20 {
        cases.push(((1.0 - 2.0 * r.random::<f64>()).acos(), TAU * r.random::<f64>()));
    }
    let n = 100_000u32;
    let frame = AgentFrame::identity();
    let mut worst_z = 0.0f64;
    for &(theta, phi) in &cases {
        let env = state_from_angles(theta, phi).unwrap();
        let zeros = (0..n)
            .filter(|_| measure_single_shot(&env, &frame, &mut r) == Outcome::Reward)
            .count();
        let p = (theta / 2.0).cos().powi(2);
        let sigma = (p * (1.0 - p) / f64::from(n)).sqrt();
        let dev = (zeros as f64 / f64::from(n) - p).abs();
        let z = if sigma > 0.0 { dev / sigma } else if dev == 0.0 { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
    }
    let t = start.elapsed();
    check(
        worst_z <= 3.0 && within(t, 5),
        format!("{} states x 1e5 shots, worst |z| = {worst_z:.2}, {t:.1?}", cases.len()),
    )
}

fn convergence_bound() -> Verdict {
    let start = Instant::now();
    let b = batch(Preset::E1, &[0.5]);
    let eb = &b.per_epsilon[0];
    let median_k = eb.median_convergence_step(DEFAULT_CONVERGENCE_TOL).unwrap();
    let mean = eb.curve.final_mean();
    let t = start.elapsed();
    check(
        median_k <= 15.0 && mean >= 0.931 && within(t, 30),
        format!("E1 eps=0.5: median k* = {median_k} (<= 15), mean final fidelity = {mean:.4} (>= 0.931), {t:.1?}"),
    )
}

fn fidelity_floors() -> Verdict {
    let start = Instant::now();
    let floors = [
        (Preset::E1, [0.955, 0.947, 0.931]),
        (Preset::E2, [0.886, 0.882, 0.860]),
        (Preset::E3, [0.933, 0.911, 0.902]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (preset, floor) in floors {
        let b = batch(preset, &EPSILONS);
        for (eb, f) in b.per_epsilon.iter().zip(floor) {
            let mean = eb.curve.final_mean();
            pass &= mean >= f;
            parts.push(format!("{}@{}={mean:.3}/{f}", preset.name(), eb.epsilon));
        }
    }
    let t = start.elapsed();
    check(pass && within(t, 180), format!("{} ({t:.1?})", parts.join(" ")))
}

fn epsilon_ordering() -> Verdict {
    let start = Instant::now();
    // Ascending ε.
    let ascending = [0.50, 0.65, 0.80];
    let e1 = batch(Preset::E1, &ascending);
    let medians: Vec<f64> = e1
        .per_epsilon
        .iter()
        .map(|eb| eb.median_convergence_step(DEFAULT_CONVERGENCE_TOL).unwrap())
        .collect();
    let e2 = batch(Preset::E2, &ascending);
    let means: Vec<f64> = e2.per_epsilon.iter().map(|eb| eb.curve.final_mean()).collect();
    let ordered = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
    let t = start.elapsed();
    check(
        ordered(&medians) && ordered(&means) && within(t, 60),
        format!(
            "eps 0.5/0.65/0.8: E1 median k* = {medians:?}, E2 mean final fidelity = [{:.4}, {:.4}, {:.4}], {t:.1?}",
            means[0], means[1], means[2]
        ),
    )
}

fn frame_equivalence() -> Verdict {
    let mut r = rng::stream(SEED ^ 0x5eed);
    let mut worst = 0.0f64;
    let mut outcomes_match = true;
    for seed in 0..100u64 {
        let env = random_state(&mut r);
        let bloch = env.bloch_vector();
        let theta = bloch[2].clamp(-1.0, 1.0).acos();
        let phi = bloch[1].atan2(bloch[0]);
        let eps = EPSILONS[seed as usize % 3];
        let config = EpisodeConfig::new(theta, phi, eps).unwrap().with_seed(seed);
        let a = run_episode(&config).unwrap();
        let b = run_episode_agent_picture(&config).unwrap();
        outcomes_match &= a.len() == 50 && a.len() == b.len();
        for (x, y) in a.iter().zip(&b) {
            outcomes_match &= x.outcome == y.outcome;
            worst = worst.max((x.fidelity - y.fidelity).abs());
        }
    }
    check(
        outcomes_match && worst <= 1e-9,
        format!("100 seeds x 50 steps, outcomes identical: {outcomes_match}, max fidelity gap = {worst:.2e}"),
    )
}

/// ln L at ρ = T†T/tr, T = [[t1, 0], [t3 + i t4, t2]], from matrix elements.
fn grid_loglik(counts: &BasisCounts, t: [f64; 4]) -> Option<(f64, [f64; 4])> {
    let [t1, t2, t3, t4] = t;
    let norm = t1 * t1 + t2 * t2 + t3 * t3 + t4 * t4;
    if norm == 0.0 {
        return None;
    }
    // ρ00, ρ11, Re ρ10, Im ρ10.
    let r00 = (t1 * t1 + t3 * t3 + t4 * t4) / norm;
    let r11 = t2 * t2 / norm;
    let re10 = t3 * t2 / norm;
    let im10 = t4 * t2 / norm;
    let probs = [
        (counts.n_h, r00),
        (counts.n_v, r11),
        (counts.n_d, 0.5 + re10),
        (counts.n_a, 0.5 - re10),
        (counts.n_r, 0.5 + im10),
        (counts.n_l, 0.5 - im10),
    ];
    let mut ll = 0.0;
    for (n, p) in probs {
        if n > 0 {
            ll += n as f64 * p.ln();
        }
    }
    Some((ll, [r00, r11, re10, im10]))
}

/// Exhaustive search over t1, t2 in [0, 1] and t3, t4 in [-1, 1]; returns the
/// fidelity of the best grid point with `truth`.
fn grid_oracle_fidelity(counts: &BasisCounts, truth: &PureQubitState, step: f64) -> f64 {
    let pos: Vec<f64> = (0..=(1.0 / step).round() as usize).map(|i| i as f64 * step).collect();
    let sym: Vec<f64> = (0..=(2.0 / step).round() as usize).map(|i| -1.0 + i as f64 * step).collect();
    let mut best = (f64::NEG_INFINITY, [0.5, 0.5, 0.0, 0.0]);
    for &t1 in &pos {
        for &t2 in &pos {
            for &t3 in &sym {
                for &t4 in &sym {
                    if let Some((ll, rho)) = grid_loglik(counts, [t1, t2, t3, t4]) {
                        if ll > best.0 {
                            best = (ll, rho);
                        }
                    }
                }
            }
        }
    }
    let [r00, r11, re10, im10] = best.1;
    let (a0, a1) = (truth.a0(), truth.a1());
    // ⟨ψ|ρ|ψ⟩ with ρ10 = re10 + i im10.
    let rho10 = num_complex::Complex64::new(re10, im10);
    r00 * a0.norm_sqr() + r11 * a1.norm_sqr() + 2.0 * (a0 * a1.conj() * rho10).re
}

fn mle_validity() -> Verdict {
    let start = Instant::now();
    let mut r = rng::stream(SEED ^ 0x7057);

    let random_counts: Vec<BasisCounts> = (0..10_000)
        .map(|_| {
            let mut pair = || {
                let total = r.random_range(1..=30u64);
                let plus = r.random_range(0..=total);
                (plus, total - plus)
            };
            let (h, v) = pair();
            let (d, a) = pair();
            let (rr, l) = pair();
            BasisCounts::new(h, v, d, a, rr, l)
        })
        .collect();
    let truth = Preset::E1.state();
    let fits: Vec<_> = random_counts
        .par_iter()
        .map(|c| mle_reconstruct(c, &truth))
        .collect();
    let mut physical = true;
    let mut dominates = true;
    for fit in &fits {
        match fit {
            Ok(f) => {
                physical &= f.rho.eigenvalues()[0] >= -1e-10 && (f.rho.trace() - 1.0).abs() <= 1e-12;
                dominates &= f.log_likelihood >= f.initial_log_likelihood;
            }
            Err(_) => physical = false,
        }
    }

    let states: Vec<PureQubitState> = (0..50).map(|_| random_state(&mut r)).collect();
    let large: Vec<(BasisCounts, PureQubitState)> = states
        .iter()
        .map(|s| (simulate_counts(s, 100_000, &mut r).unwrap(), *s))
        .collect();
    let mut min_large = f64::INFINITY;
    for (c, s) in &large {
        let f = mle_reconstruct(c, s).unwrap();
        dominates &= f.log_likelihood >= f.initial_log_likelihood;
        min_large = min_large.min(f.fidelity_vs_truth);
    }

    let small: Vec<(BasisCounts, PureQubitState)> = (0..20)
        .map(|_| {
            let s = random_state(&mut r);
            (simulate_counts(&s, 2, &mut r).unwrap(), s)
        })
        .collect();
    let worst_grid_gap = small
        .par_iter()
        .map(|(c, s)| {
            let mle = mle_reconstruct(c, s).unwrap();
            let oracle = grid_oracle_fidelity(c, s, 0.02);
            (mle.fidelity_vs_truth - oracle).abs()
        })
        .reduce(|| 0.0, f64::max);

    let t = start.elapsed();
    check(
        physical && dominates && min_large >= 0.999 && worst_grid_gap <= 0.01,
        format!(
            "1e4 random counts physical: {physical}; MLE >= initializer everywhere: {dominates}; \
             min fidelity at 1e5/basis = {min_large:.5}; max |MLE - grid| = {worst_grid_gap:.4}; {t:.1?}"
        ),
    )
}

fn comparison_window() -> Verdict {
    let start = Instant::now();
    let table = |preset: Preset| {
        let (theta, phi) = preset.angles();
        let base = EpisodeConfig::new(theta, phi, 0.5).unwrap().with_seed(SEED);
        compare_sqrl_qst(&BatchConfig::new(base, STAT_RUNS, vec![0.5])).unwrap().remove(0)
    };
    let e1 = table(Preset::E1);
    let e2 = table(Preset::E2);
    let w1 = e1.dominance_windows();
    let w2 = e2.dominance_windows();
    let well_formed = |t: &sqrl_core::harness::ComparisonTable| {
        t.rows.len() == 16
            && t.rows.iter().enumerate().all(|(i, r)| {
                r.k == 3 * (i + 1) && r.sqrl_copies == r.k && r.qst_photons == r.k && r.qst_mean.is_finite()
            })
    };
    let t = start.elapsed();
    let fmt = |w: &[std::ops::RangeInclusive<usize>]| {
        w.iter().map(|r| format!("{}-{}", r.start(), r.end())).collect::<Vec<_>>().join(",")
    };
    check(
        !w1.is_empty() && well_formed(&e1) && well_formed(&e2) && within(t, 120),
        format!("E1 eps=0.5 windows [{}]; E2 eps=0.5 windows [{}] (reported only); {t:.1?}", fmt(&w1), fmt(&w2)),
    )
}

fn determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_sqrl-sim");
    let run = |args: &[&str]| Command::new(bin).args(args).output().expect("binary runs");
    let cmds: [&[&str]; 3] = [
        &["run", "--env", "e1", "--epsilon", "0.5", "--seed", "42", "--runs", "5"],
        &["batch", "--env", "e3", "--epsilon", "0.8", "--seed", "42", "--runs", "50"],
        &["compare", "--env", "e2", "--epsilon", "0.65", "--seed", "42", "--runs", "20"],
    ];
    let repeatable = cmds.iter().all(|c| {
        let (a, b) = (run(c), run(c));
        a.status.success() && a.stdout == b.stdout
    });
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/run_e1_eps0.5_seed42.csv");
    let golden = std::fs::read(golden_path).unwrap_or_default();
    let got = run(&["run", "--env", "e1", "--epsilon", "0.5", "--seed", "42", "--runs", "1", "--golden"]);
    let golden_ok = !golden.is_empty() && got.stdout == golden;
    check(
        repeatable && golden_ok,
        format!("reruns byte-identical: {repeatable}; golden E1/eps=0.5/seed 42 matches: {golden_ok}"),
    )
}

fn resource_accounting() -> Verdict {
    let ideal = resource_ledger(50, CopyAccounting::Ideal, 0);
    let physical = resource_ledger(50, CopyAccounting::Physical, 0);
    check(
        ideal.env_copies_consumed == 50 && physical.expected_raw_pairs == 100.0,
        format!(
            "ideal copies = {}, physical expected raw pairs = {}",
            ideal.env_copies_consumed, physical.expected_raw_pairs
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("measurement law", measurement_law),
        ("convergence bound", convergence_bound),
        ("final-fidelity floors", fidelity_floors),
        ("epsilon trade-off ordering", epsilon_ordering),
        ("frame equivalence", frame_equivalence),
        ("MLE validity and consistency", mle_validity),
        ("budget-matched comparison", comparison_window),
        ("determinism", determinism),
        ("resource ledger", resource_accounting),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{tag}] {name}: {}", i + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
