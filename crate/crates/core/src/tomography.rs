//! Three-basis single-qubit tomography with maximum-likelihood reconstruction.
//!
//! Photons are split equally between the computational (H/V), diagonal
//! (D/A = (H ± V)/√2) and circular (R/L = (H ± iV)/√2) bases. The likelihood is
//! a product of independent binomials, one per basis, and the estimate is
//! searched over ρ = T†T / tr(T†T) with T lower triangular:
//!
//! ```text
//! T = | t1          0  |
//!     | t3 + i t4   t2 |
//! ```

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::qubit::{ComplexScalar, DensityMatrix, Hermitian2, Mat2, PureQubitState};

/// Eigenvalue floor applied to the linear-inversion estimate before it seeds the search.
pub const EIGENVALUE_FLOOR: f64 = 1e-6;
/// Stop once a full optimizer round improves the log-likelihood by less than this.
pub const LOGLIK_TOL: f64 = 1e-10;
pub const MAX_ROUNDS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Computational,
    Diagonal,
    Circular,
}

impl Basis {
    /// Measurement order used by [`simulate_counts`].
    pub const ALL: [Basis; 3] = [Basis::Computational, Basis::Diagonal, Basis::Circular];

    pub fn name(self) -> &'static str {
        match self {
            Basis::Computational => "computational",
            Basis::Diagonal => "diagonal",
            Basis::Circular => "circular",
        }
    }

    /// Probability of the "+" outcome (H, D or R) given a Bloch vector.
    pub fn plus_probability(self, bloch: [f64; 3]) -> f64 {
        let component = match self {
            Basis::Computational => bloch[2],
            Basis::Diagonal => bloch[0],
            Basis::Circular => bloch[1],
        };
        ((1.0 + component) / 2.0).clamp(0.0, 1.0)
    }
}

/// Photon counts per basis outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BasisCounts {
    pub n_h: u64,
    pub n_v: u64,
    pub n_d: u64,
    pub n_a: u64,
    pub n_r: u64,
    pub n_l: u64,
}

impl BasisCounts {
    pub fn new(n_h: u64, n_v: u64, n_d: u64, n_a: u64, n_r: u64, n_l: u64) -> Self {
        Self { n_h, n_v, n_d, n_a, n_r, n_l }
    }

    /// (plus, minus) counts for a basis.
    pub fn pair(&self, basis: Basis) -> (u64, u64) {
        match basis {
            Basis::Computational => (self.n_h, self.n_v),
            Basis::Diagonal => (self.n_d, self.n_a),
            Basis::Circular => (self.n_r, self.n_l),
        }
    }

    pub fn total(&self, basis: Basis) -> u64 {
        let (p, m) = self.pair(basis);
        p + m
    }

    /// True when every basis received the same number of photons.
    pub fn equally_allocated(&self) -> bool {
        let n = self.total(Basis::Computational);
        Basis::ALL.iter().all(|b| self.total(*b) == n)
    }

    fn require_nonempty(&self) -> Result<()> {
        for basis in Basis::ALL {
            if self.total(basis) == 0 {
                return Err(Error::EmptyBasis(basis.name()));
            }
        }
        Ok(())
    }
}

/// Draws one binomial sample per basis, in [`Basis::ALL`] order, using the
/// exact Born probability of the "+" outcome.
pub fn simulate_counts<R: Rng + ?Sized>(
    env: &PureQubitState,
    photons_per_basis: u64,
    rng: &mut R,
) -> Result<BasisCounts> {
    if photons_per_basis == 0 {
        return Err(Error::InvalidConfig("photons_per_basis must be at least 1".into()));
    }
    let bloch = env.bloch_vector();
    let mut plus = [0u64; 3];
    for (slot, basis) in plus.iter_mut().zip(Basis::ALL) {
        let p = basis.plus_probability(bloch);
        let dist = Binomial::new(photons_per_basis, p)
            .map_err(|_| Error::Domain { what: "born probability", value: p, range: "[0, 1]" })?;
        *slot = dist.sample(rng);
    }
    let n = photons_per_basis;
    Ok(BasisCounts::new(plus[0], n - plus[0], plus[1], n - plus[1], plus[2], n - plus[2]))
}

/// Stokes reconstruction (I + s·σ)/2. May have a negative eigenvalue.
pub fn linear_inversion(counts: &BasisCounts) -> Result<Hermitian2> {
    counts.require_nonempty()?;
    let stokes = |basis| {
        let (p, m) = counts.pair(basis);
        (p as f64 - m as f64) / (p + m) as f64
    };
    Ok(Hermitian2::from_bloch([
        stokes(Basis::Diagonal),
        stokes(Basis::Circular),
        stokes(Basis::Computational),
    ]))
}

/// Floors the eigenvalues of a unit-trace Hermitian matrix at
/// [`EIGENVALUE_FLOOR`] and renormalizes, keeping the eigenvectors.
pub fn project_to_physical(h: &Hermitian2) -> DensityMatrix {
    let [lo, hi] = h.eigenvalues();
    let lo = lo.max(EIGENVALUE_FLOOR);
    let hi = hi.max(EIGENVALUE_FLOOR);
    let sum = lo + hi;
    let m = h.matrix();
    let mean = (m.m00.re + m.m11.re) / 2.0;
    let radius = ((m.m00.re - m.m11.re) / 2.0).hypot(m.m01.norm());
    let half = ComplexScalar::new(0.5, 0.0);
    if radius == 0.0 {
        return DensityMatrix::from_mat_unchecked(Mat2::identity().scale(half));
    }
    // Unit-spectrum direction K̂ = (H − mean·I)/r has eigenvalues ±1.
    let direction = (*m - Mat2::identity().scale(ComplexScalar::new(mean, 0.0)))
        .scale(ComplexScalar::new(1.0 / radius, 0.0));
    let b = (hi - lo) / (2.0 * sum);
    let mut out = Mat2::identity().scale(half) + direction.scale(ComplexScalar::new(b, 0.0));
    out.m00.im = 0.0;
    out.m11.im = 0.0;
    out.m10 = out.m01.conj();
    DensityMatrix::from_mat_unchecked(out)
}

/// Σ_bases n₊ ln p₊ + n₋ ln p₋, omitting the count-only binomial coefficients.
/// Terms with zero count contribute 0.
pub fn log_likelihood(counts: &BasisCounts, rho: &DensityMatrix) -> f64 {
    let bloch = rho.bloch_vector();
    Basis::ALL
        .iter()
        .map(|&basis| {
            let (n_plus, n_minus) = counts.pair(basis);
            let p = basis.plus_probability(bloch);
            xlogy(n_plus, p) + xlogy(n_minus, 1.0 - p)
        })
        .sum()
}

fn xlogy(n: u64, p: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * p.ln()
    }
}

/// ρ(t) = T†T / tr(T†T).
pub fn density_from_t(t: &[f64]) -> Option<DensityMatrix> {
    let (t1, t2, c) = (t[0], t[1], ComplexScalar::new(t[2], t[3]));
    let norm = t1 * t1 + t2 * t2 + c.norm_sqr();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let m00 = ComplexScalar::new((t1 * t1 + c.norm_sqr()) / norm, 0.0);
    let m11 = ComplexScalar::new(t2 * t2 / norm, 0.0);
    let m10 = c * (t2 / norm);
    Some(DensityMatrix::from_mat_unchecked(Mat2::new(m00, m10.conj(), m10, m11)))
}

/// Lower-triangular factor of a positive-definite ρ, scaled so Σt² = 1.
pub fn t_from_density(rho: &DensityMatrix) -> [f64; 4] {
    let m = rho.matrix();
    let t2 = m.m11.re.max(0.0).sqrt();
    let c = if t2 > 0.0 { m.m10 / t2 } else { ComplexScalar::new(0.0, 0.0) };
    let t1 = (m.m00.re - c.norm_sqr()).max(0.0).sqrt();
    [t1, t2, c.re, c.im]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionResult {
    pub rho: DensityMatrix,
    pub fidelity_vs_truth: f64,
    pub log_likelihood: f64,
    /// Log-likelihood of the projected linear-inversion starting point.
    pub initial_log_likelihood: f64,
    /// Total Nelder–Mead iterations across all rounds.
    pub iterations_used: usize,
    pub rounds: usize,
}

/// Maximum-likelihood density matrix for `counts`, scored against `truth`.
///
/// Starts from the projected linear-inversion estimate and runs Nelder–Mead
/// rounds over the four T parameters, each round restarting a fresh simplex
/// at the current best point, until a round gains less than [`LOGLIK_TOL`] or
/// [`MAX_ROUNDS`] is reached. The result never scores below the start point.
pub fn mle_reconstruct(counts: &BasisCounts, truth: &PureQubitState) -> Result<ReconstructionResult> {
    let init = project_to_physical(&linear_inversion(counts)?);
    let initial_log_likelihood = log_likelihood(counts, &init);
    if !initial_log_likelihood.is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }

    let objective = |t: &[f64]| match density_from_t(t) {
        Some(rho) => -log_likelihood(counts, &rho),
        None => f64::INFINITY,
    };
    let opts = NelderMeadOptions::default();

    let mut best_t = t_from_density(&init).to_vec();
    let mut best_ll = initial_log_likelihood;
    let mut best_rho = init;
    let mut iterations_used = 0;
    let mut rounds = 0;
    while rounds < MAX_ROUNDS {
        rounds += 1;
        let scale = best_t.iter().map(|x| x * x).sum::<f64>().sqrt();
        let start: Vec<f64> = best_t.iter().map(|x| x / scale).collect();
        let min = nelder_mead(objective, &start, &opts);
        iterations_used += min.iterations;
        let Some(rho) = density_from_t(&min.x) else { break };
        let ll = log_likelihood(counts, &rho);
        if !(ll > best_ll) {
            break;
        }
        let gain = ll - best_ll;
        best_t = min.x;
        best_ll = ll;
        best_rho = rho;
        if gain < LOGLIK_TOL {
            break;
        }
    }

    if !best_ll.is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }
    let rho = DensityMatrix::new(*best_rho.matrix())?;
    Ok(ReconstructionResult {
        fidelity_vs_truth: rho.fidelity_with_pure(truth),
        rho,
        log_likelihood: best_ll,
        initial_log_likelihood,
        iterations_used,
        rounds,
    })
}

/// Budget-matched tomography: ⌊total/3⌋ photons per basis (the remainder is
/// discarded), then MLE. Returns the reconstruction fidelity against `env`.
pub fn qst_baseline<R: Rng + ?Sized>(
    env: &PureQubitState,
    total_photons: u64,
    rng: &mut R,
) -> Result<f64> {
    if total_photons < 3 {
        return Err(Error::InvalidConfig(format!(
            "tomography needs at least 3 photons, got {total_photons}"
        )));
    }
    let counts = simulate_counts(env, total_photons / 3, rng)?;
    Ok(mle_reconstruct(&counts, env)?.fidelity_vs_truth)
}
