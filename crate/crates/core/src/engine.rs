//! The learning loop: single-shot register measurements, the multiplicative
//! reward/punishment rule for the exploration range, and partially random
//! agent rotations about the agent's current (rotated) axes.
//!
//! Random draws per iteration, in this order:
//! 1. noise branch draw (only when `noise_p > 0`), plus two more draws if the
//!    copy is replaced by a random state;
//! 2. measurement draw (always, even when the outcome is certain);
//! 3. θ draw then φ draw (only on punishment).

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{
    cnot_with_fresh_register, conjugate_frame, fidelity_pure, state_from_angles,
    GeneratorScale, PureQubitState, Unitary2,
};
use crate::rng;

/// Single-shot register outcome. `Reward` is m = 0, `Punishment` is m = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Reward,
    Punishment,
}

impl Outcome {
    pub fn bit(self) -> u8 {
        match self {
            Outcome::Reward => 0,
            Outcome::Punishment => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Outcome::Reward),
            1 => Some(Outcome::Punishment),
            _ => None,
        }
    }
}

/// Reward/punishment ratio ε, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RewardPolicy {
    epsilon: f64,
}

impl RewardPolicy {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon.is_finite() && epsilon > 0.0 && epsilon < 1.0 {
            Ok(Self { epsilon })
        } else {
            Err(Error::Domain {
                what: "epsilon",
                value: epsilon,
                range: "(0, 1)",
            })
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl TryFrom<f64> for RewardPolicy {
    type Error = Error;

    fn try_from(epsilon: f64) -> Result<Self> {
        RewardPolicy::new(epsilon)
    }
}

impl From<RewardPolicy> for f64 {
    fn from(p: RewardPolicy) -> f64 {
        p.epsilon
    }
}

/// Width Δ of the window [−Δ/2, Δ/2] that punishment angles are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationState {
    delta: f64,
    delta_max: f64,
    delta_init: f64,
}

impl ExplorationState {
    pub fn new(delta_init: f64, delta_max: f64) -> Result<Self> {
        if !delta_init.is_finite() || !delta_max.is_finite() {
            return Err(Error::NonFinite("exploration range"));
        }
        if delta_max < 0.0 {
            return Err(Error::Domain {
                what: "delta_max",
                value: delta_max,
                range: "[0, inf)",
            });
        }
        if !(0.0..=delta_max).contains(&delta_init) {
            return Err(Error::Domain {
                what: "delta_init",
                value: delta_init,
                range: "[0, delta_max]",
            });
        }
        Ok(Self {
            delta: delta_init,
            delta_max,
            delta_init,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    pub fn delta_init(&self) -> f64 {
        self.delta_init
    }

    pub(crate) fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }
}

/// Shrinks Δ by ε after a reward and widens it by 1/ε after a punishment,
/// capped at `delta_max`.
pub fn exploration_update(
    state: &ExplorationState,
    m_prev: Outcome,
    policy: &RewardPolicy,
) -> ExplorationState {
    let raw = match m_prev {
        Outcome::Reward => policy.epsilon * state.delta,
        Outcome::Punishment => state.delta / policy.epsilon,
    };
    state.with_delta(raw.min(state.delta_max))
}

/// Accumulated product of every agent action so far. The agent state is
/// `accumulated · |0⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentFrame {
    accumulated: Unitary2,
}

impl AgentFrame {
    /// Unitarity defect above which the accumulated product is re-projected.
    pub const REORTHONORMALIZE_ABOVE: f64 = 1e-10;

    pub fn identity() -> Self {
        Self {
            accumulated: Unitary2::identity(),
        }
    }

    pub fn from_unitary(accumulated: Unitary2) -> Self {
        Self { accumulated }
    }

    pub fn accumulated(&self) -> &Unitary2 {
        &self.accumulated
    }

    pub fn agent_state(&self) -> PureQubitState {
        self.accumulated.apply(&PureQubitState::zero())
    }

    /// `action · accumulated`, re-projected onto the unitary group when drift
    /// exceeds [`Self::REORTHONORMALIZE_ABOVE`].
    pub fn then(&self, action: &Unitary2) -> Self {
        let next = action.compose(&self.accumulated);
        let next = if next.defect() > Self::REORTHONORMALIZE_ABOVE {
            next.reorthonormalized()
        } else {
            next
        };
        Self { accumulated: next }
    }
}

/// Register outcome probabilities [p(m=0), p(m=1)] for one environment copy
/// measured in the frame rotated by `accumulated†`.
pub fn outcome_probabilities(env: &PureQubitState, frame: &AgentFrame) -> [f64; 2] {
    let rotated = frame.accumulated.adjoint().apply(env);
    let joint = cnot_with_fresh_register(&rotated);
    [joint.register_probability(0), joint.register_probability(1)]
}

/// Consumes exactly one uniform draw.
pub fn measure_single_shot<R: Rng + ?Sized>(
    env: &PureQubitState,
    frame: &AgentFrame,
    rng: &mut R,
) -> Outcome {
    let [p0, _] = outcome_probabilities(env, frame);
    sample_outcome(p0, rng)
}

fn sample_outcome<R: Rng + ?Sized>(p0: f64, rng: &mut R) -> Outcome {
    let u: f64 = rng.random();
    if u < p0 {
        Outcome::Reward
    } else {
        Outcome::Punishment
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentAction {
    /// U_A applied this iteration.
    pub unitary: Unitary2,
    pub frame: AgentFrame,
    /// (θ, φ) when a punishment triggered random angles.
    pub angles: Option<(f64, f64)>,
}

fn window_draw<R: Rng + ?Sized>(delta: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    (u - 0.5) * delta
}

/// Builds U_A for one iteration. On reward the agent is left alone and no
/// draws are made. On punishment θ and φ are drawn from [−Δ/2, Δ/2) and
/// U_A = e^{-i S_z' φ} e^{-i S_x' θ}, where S' = 𝕌 S 𝕌† are the spin
/// generators carried along by the accumulated frame 𝕌.
pub fn agent_update<R: Rng + ?Sized>(
    m: Outcome,
    expl: &ExplorationState,
    frame: &AgentFrame,
    generators: GeneratorScale,
    rng: &mut R,
) -> AgentAction {
    match m {
        Outcome::Reward => AgentAction {
            unitary: Unitary2::identity(),
            frame: *frame,
            angles: None,
        },
        Outcome::Punishment => {
            let theta = window_draw(expl.delta, rng);
            let phi = window_draw(expl.delta, rng);
            let sx = conjugate_frame(&frame.accumulated, &generators.spin_x());
            let sz = conjugate_frame(&frame.accumulated, &generators.spin_z());
            let unitary = sz.exp_neg_i(phi).compose(&sx.exp_neg_i(theta));
            AgentAction {
                unitary,
                frame: frame.then(&unitary),
                angles: Some((theta, phi)),
            }
        }
    }
}

/// With probability `p` replaces the state by a Haar-random pure state.
///
/// Draws: one branch draw always, plus two when the state is replaced.
pub fn depolarize<R: Rng + ?Sized>(
    state: &PureQubitState,
    p: f64,
    rng: &mut R,
) -> Result<PureQubitState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain {
            what: "noise_p",
            value: p,
            range: "[0, 1]",
        });
    }
    let u: f64 = rng.random();
    if u < p {
        Ok(haar_random_state(rng))
    } else {
        Ok(*state)
    }
}

/// Uniform point on the Bloch sphere; two draws.
pub fn haar_random_state<R: Rng + ?Sized>(rng: &mut R) -> PureQubitState {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    let theta = (1.0 - 2.0 * u).clamp(-1.0, 1.0).acos();
    state_from_angles(theta, TAU * v).expect("acos lies in [0, pi]")
}

fn default_delta() -> f64 {
    TAU
}

/// One learning run against a hidden environment state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    /// Polar angle of the hidden environment state, in [0, π].
    pub env_theta: f64,
    pub env_phi: f64,
    pub policy: RewardPolicy,
    #[serde(default = "default_delta")]
    pub delta_init: f64,
    #[serde(default = "default_delta")]
    pub delta_max: f64,
    pub n_iterations: usize,
    pub seed: u64,
    #[serde(default)]
    pub noise_p: f64,
    #[serde(default)]
    pub generators: GeneratorScale,
}

impl EpisodeConfig {
    /// Defaults: Δ_init = Δ_max = 2π, 50 iterations, seed 0, no noise,
    /// half-Pauli generators.
    pub fn new(env_theta: f64, env_phi: f64, epsilon: f64) -> Result<Self> {
        let config = Self {
            env_theta,
            env_phi,
            policy: RewardPolicy::new(epsilon)?,
            delta_init: TAU,
            delta_max: TAU,
            n_iterations: 50,
            seed: 0,
            noise_p: 0.0,
            generators: GeneratorScale::Half,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, n: usize) -> Self {
        self.n_iterations = n;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.policy = RewardPolicy::new(epsilon)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.environment()?;
        ExplorationState::new(self.delta_init, self.delta_max)?;
        if self.n_iterations < 1 {
            return Err(Error::InvalidConfig("n_iterations must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(Error::Domain {
                what: "noise_p",
                value: self.noise_p,
                range: "[0, 1]",
            });
        }
        Ok(())
    }

    pub fn environment(&self) -> Result<PureQubitState> {
        state_from_angles(self.env_theta, self.env_phi)
    }
}

/// Log of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based iteration index.
    pub k: usize,
    pub outcome: Outcome,
    pub sampled_theta: Option<f64>,
    pub sampled_phi: Option<f64>,
    /// Δ after this iteration's reward/punishment update (in force at k + 1).
    pub delta_after: f64,
    /// Agent fidelity against the true environment after this iteration's action.
    pub fidelity: f64,
}

/// Runs the learning loop. Identical configs give bitwise-identical records.
///
/// Within iteration k the angle window is the Δ produced by outcome k − 1
/// (Δ_init at k = 1).
pub fn run_episode(config: &EpisodeConfig) -> Result<Vec<StepRecord>> {
    config.validate()?;
    let env = config.environment()?;
    let mut rng = rng::stream(config.seed);
    let mut frame = AgentFrame::identity();
    let mut expl = ExplorationState::new(config.delta_init, config.delta_max)?;
    let mut records = Vec::with_capacity(config.n_iterations);

    for k in 1..=config.n_iterations {
        let copy = if config.noise_p > 0.0 {
            depolarize(&env, config.noise_p, &mut rng)?
        } else {
            env
        };
        let m = measure_single_shot(&copy, &frame, &mut rng);
        let action = agent_update(m, &expl, &frame, config.generators, &mut rng);
        frame = action.frame;
        expl = exploration_update(&expl, m, &config.policy);
        records.push(StepRecord {
            k,
            outcome: m,
            sampled_theta: action.angles.map(|a| a.0),
            sampled_phi: action.angles.map(|a| a.1),
            delta_after: expl.delta,
            fidelity: fidelity_pure(&frame.agent_state(), &env),
        });
    }
    Ok(records)
}

/// The same loop written from the agent's side: the agent ket is rotated by
/// each U_A and measured against the unrotated environment, p(m=0) =
/// |⟨A|E⟩|². Equivalent to [`run_episode`] (which rotates the environment by
/// 𝕌† instead) and kept as an independent cross-check.
pub fn run_episode_agent_picture(config: &EpisodeConfig) -> Result<Vec<StepRecord>> {
    config.validate()?;
    let env = config.environment()?;
    let mut rng = rng::stream(config.seed);
    let mut agent = PureQubitState::zero();
    let mut frame = AgentFrame::identity();
    let mut expl = ExplorationState::new(config.delta_init, config.delta_max)?;
    let mut records = Vec::with_capacity(config.n_iterations);

    for k in 1..=config.n_iterations {
        let copy = if config.noise_p > 0.0 {
            depolarize(&env, config.noise_p, &mut rng)?
        } else {
            env
        };
        let m = sample_outcome(fidelity_pure(&agent, &copy), &mut rng);
        let action = agent_update(m, &expl, &frame, config.generators, &mut rng);
        agent = action.unitary.apply(&agent);
        frame = action.frame;
        expl = exploration_update(&expl, m, &config.policy);
        records.push(StepRecord {
            k,
            outcome: m,
            sampled_theta: action.angles.map(|a| a.0),
            sampled_phi: action.angles.map(|a| a.1),
            delta_after: expl.delta,
            fidelity: fidelity_pure(&agent, &env),
        });
    }
    Ok(records)
}

/// Named environment states used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// (|H⟩ + |V⟩)/√2
    E1,
    /// (|H⟩ + e^{iπ/4}|V⟩)/√2
    E2,
    /// 0.948|H⟩ + e^{0.890i} 0.317|V⟩
    E3,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::E1, Preset::E2, Preset::E3];

    /// (θ, φ) in radians.
    pub fn angles(self) -> (f64, f64) {
        match self {
            Preset::E1 => (PI / 2.0, 0.0),
            Preset::E2 => (PI / 2.0, PI / 4.0),
            Preset::E3 => (2.0 * 0.948f64.acos(), 0.890),
        }
    }

    pub fn state(self) -> PureQubitState {
        let (t, p) = self.angles();
        state_from_angles(t, p).expect("preset angles are in range")
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::E1 => "e1",
            Preset::E2 => "e2",
            Preset::E3 => "e3",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e1" => Ok(Preset::E1),
            "e2" => Ok(Preset::E2),
            "e3" => Ok(Preset::E3),
            other => Err(Error::InvalidConfig(format!("unknown preset `{other}`"))),
        }
    }
}
