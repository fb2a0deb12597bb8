//! Exact 2×2 complex linear algebra for single-qubit states, unitaries,
//! Hermitian generators, density matrices, and the environment/register
//! product state produced by a CNOT onto a fresh |0⟩ register.
//!
//! Basis convention: |0⟩ ≡ |H⟩, |1⟩ ≡ |V⟩. Global phases are never
//! canonicalized; compare states through [`fidelity_pure`].

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;

/// Tolerance for exact algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for quantities built from long products (e.g. 50-step frames).
pub const ACCUMULATED_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Checked constructor for a complex scalar; rejects NaN and infinities.
pub fn complex(re: f64, im: f64) -> Result<ComplexScalar> {
    if re.is_finite() && im.is_finite() {
        Ok(Complex64::new(re, im))
    } else {
        Err(Error::NonFinite("complex scalar"))
    }
}

/// A general 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m00: Complex64,
    pub m01: Complex64,
    pub m10: Complex64,
    pub m11: Complex64,
}

impl Mat2 {
    pub const fn new(m00: Complex64, m01: Complex64, m10: Complex64, m11: Complex64) -> Self {
        Self { m00, m01, m10, m11 }
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.m00.conj(), self.m10.conj(), self.m01.conj(), self.m11.conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.m00 + self.m11
    }

    pub fn det(&self) -> Complex64 {
        self.m00 * self.m11 - self.m01 * self.m10
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::new(self.m00 * k, self.m01 * k, self.m10 * k, self.m11 * k)
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m00 * v[0] + self.m01 * v[1],
            self.m10 * v[0] + self.m11 * v[1],
        ]
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det.norm() == 0.0 {
            return None;
        }
        let inv = det.inv();
        Some(Self::new(self.m11, -self.m01, -self.m10, self.m00).scale(inv))
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        [self.m00, self.m01, self.m10, self.m11]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        finite(self.m00) && finite(self.m01) && finite(self.m10) && finite(self.m11)
    }

    /// max |(M M†) − I| over entries.
    pub fn unitarity_defect(&self) -> f64 {
        (*self * self.adjoint() - Self::identity()).max_abs()
    }

    /// max |M − M†| over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.m00 * r.m00 + self.m01 * r.m10,
            self.m00 * r.m01 + self.m01 * r.m11,
            self.m10 * r.m00 + self.m11 * r.m10,
            self.m10 * r.m01 + self.m11 * r.m11,
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, r: Mat2) -> Mat2 {
        Mat2::new(self.m00 + r.m00, self.m01 + r.m01, self.m10 + r.m10, self.m11 + r.m11)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, r: Mat2) -> Mat2 {
        Mat2::new(self.m00 - r.m00, self.m01 - r.m01, self.m10 - r.m10, self.m11 - r.m11)
    }
}

/// Normalized single-qubit pure state a0|0⟩ + a1|1⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureQubitState {
    a0: Complex64,
    a1: Complex64,
}

impl PureQubitState {
    /// Accepts amplitudes whose squared norm is 1 within [`ALGEBRAIC_TOL`].
    pub fn new(a0: Complex64, a1: Complex64) -> Result<Self> {
        if !finite(a0) || !finite(a1) {
            return Err(Error::NonFinite("state amplitude"));
        }
        let norm_sq = a0.norm_sqr() + a1.norm_sqr();
        if (norm_sq - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { a0, a1 })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(a0: Complex64, a1: Complex64) -> Result<Self> {
        if !finite(a0) || !finite(a1) {
            return Err(Error::NonFinite("state amplitude"));
        }
        let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(Error::NotNormalized { norm_sq: 0.0 });
        }
        Ok(Self { a0: a0 / norm, a1: a1 / norm })
    }

    pub const fn zero() -> Self {
        Self { a0: ONE, a1: ZERO }
    }

    pub const fn one() -> Self {
        Self { a0: ZERO, a1: ONE }
    }

    pub fn a0(&self) -> Complex64 {
        self.a0
    }

    pub fn a1(&self) -> Complex64 {
        self.a1
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [self.a0, self.a1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &PureQubitState) -> Complex64 {
        self.a0.conj() * other.a0 + self.a1.conj() * other.a1
    }

    /// Multiplies both amplitudes by e^{iγ}.
    pub fn with_global_phase(&self, gamma: f64) -> Self {
        let ph = Complex64::from_polar(1.0, gamma);
        Self { a0: self.a0 * ph, a1: self.a1 * ph }
    }

    /// Bloch vector (⟨σx⟩, ⟨σy⟩, ⟨σz⟩).
    pub fn bloch_vector(&self) -> [f64; 3] {
        let coh = self.a0.conj() * self.a1;
        [
            2.0 * coh.re,
            2.0 * coh.im,
            self.a0.norm_sqr() - self.a1.norm_sqr(),
        ]
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix(Mat2::new(
            self.a0 * self.a0.conj(),
            self.a0 * self.a1.conj(),
            self.a1 * self.a0.conj(),
            self.a1 * self.a1.conj(),
        ))
    }
}

/// cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩ with polar angle θ ∈ [0, π].
pub fn state_from_angles(theta: f64, phi: f64) -> Result<PureQubitState> {
    if !theta.is_finite() || !phi.is_finite() {
        return Err(Error::NonFinite("state angles"));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain {
            what: "theta",
            value: theta,
            range: "[0, pi]",
        });
    }
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(PureQubitState {
        a0: Complex64::new(c, 0.0),
        a1: Complex64::from_polar(s, phi),
    })
}

/// |⟨a|b⟩|², clamped into [0, 1].
pub fn fidelity_pure(a: &PureQubitState, b: &PureQubitState) -> f64 {
    a.inner(b).norm_sqr().clamp(0.0, 1.0)
}

/// 2×2 unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2(Mat2);

impl Unitary2 {
    pub fn new(m: Mat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite("unitary entry"));
        }
        let defect = m.unitarity_defect();
        if defect > ALGEBRAIC_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self(m))
    }

    pub const fn identity() -> Self {
        Self(Mat2::identity())
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// `self · other` (other acts first).
    pub fn compose(&self, other: &Unitary2) -> Self {
        Self(self.0 * other.0)
    }

    pub fn apply(&self, s: &PureQubitState) -> PureQubitState {
        let [a0, a1] = self.0.apply(s.amplitudes());
        PureQubitState { a0, a1 }
    }

    pub fn defect(&self) -> f64 {
        self.0.unitarity_defect()
    }

    /// Projects onto the nearest unitary by Newton polar iteration
    /// U ← (U + U^{-†}) / 2.
    pub fn reorthonormalized(&self) -> Self {
        let mut u = self.0;
        for _ in 0..8 {
            if u.unitarity_defect() <= 1e-15 {
                break;
            }
            let Some(inv) = u.inverse() else { break };
            u = (u + inv.adjoint()).scale(Complex64::new(0.5, 0.0));
        }
        Self(u)
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Unitary2) -> Unitary2 {
        self.compose(&rhs)
    }
}

/// e^{-i σx α/2}: Bloch-sphere rotation by α about x.
pub fn rot_x(alpha: f64) -> Unitary2 {
    let (s, c) = (alpha / 2.0).sin_cos();
    Unitary2(Mat2::new(
        Complex64::new(c, 0.0),
        Complex64::new(0.0, -s),
        Complex64::new(0.0, -s),
        Complex64::new(c, 0.0),
    ))
}

/// e^{-i σz α/2}: Bloch-sphere rotation by α about z.
pub fn rot_z(alpha: f64) -> Unitary2 {
    Unitary2(Mat2::new(
        Complex64::from_polar(1.0, -alpha / 2.0),
        ZERO,
        ZERO,
        Complex64::from_polar(1.0, alpha / 2.0),
    ))
}

/// Hermitian 2×2 matrix (observables and rotation generators).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hermitian2(Mat2);

impl Hermitian2 {
    pub fn new(m: Mat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite("hermitian entry"));
        }
        if m.hermiticity_defect() > ALGEBRAIC_TOL {
            return Err(Error::NotPhysical("matrix is not Hermitian"));
        }
        Ok(Self(m))
    }

    pub fn pauli_x() -> Self {
        Self(Mat2::new(ZERO, ONE, ONE, ZERO))
    }

    pub fn pauli_y() -> Self {
        Self(Mat2::new(ZERO, -I, I, ZERO))
    }

    pub fn pauli_z() -> Self {
        Self(Mat2::new(ONE, ZERO, ZERO, -ONE))
    }

    /// (I + x σx + y σy + z σz) / 2
    pub fn from_bloch(v: [f64; 3]) -> Self {
        let [x, y, z] = v;
        Self(Mat2::new(
            Complex64::new((1.0 + z) / 2.0, 0.0),
            Complex64::new(x / 2.0, -y / 2.0),
            Complex64::new(x / 2.0, y / 2.0),
            Complex64::new((1.0 - z) / 2.0, 0.0),
        ))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self(self.0.scale(Complex64::new(k, 0.0)))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let (mean, radius) = self.mean_and_radius();
        [mean - radius, mean + radius]
    }

    fn mean_and_radius(&self) -> (f64, f64) {
        let a = self.0.m00.re;
        let d = self.0.m11.re;
        let mean = (a + d) / 2.0;
        let radius = ((a - d) / 2.0).hypot(self.0.m01.norm());
        (mean, radius)
    }

    /// e^{-i H α}, evaluated in closed form through the spectral split
    /// H = mean·I + K with K² = r²·I.
    pub fn exp_neg_i(&self, alpha: f64) -> Unitary2 {
        let (mean, radius) = self.mean_and_radius();
        let phase = Complex64::from_polar(1.0, -mean * alpha);
        if radius == 0.0 {
            return Unitary2(Mat2::identity().scale(phase));
        }
        let (s, c) = (radius * alpha).sin_cos();
        let traceless = self.0 - Mat2::identity().scale(Complex64::new(mean, 0.0));
        let m = Mat2::identity().scale(Complex64::new(c, 0.0))
            - traceless.scale(Complex64::new(0.0, s / radius));
        Unitary2(m.scale(phase))
    }

    /// ⟨ψ|H|ψ⟩
    pub fn expectation(&self, s: &PureQubitState) -> f64 {
        let hv = self.0.apply(s.amplitudes());
        (s.a0().conj() * hv[0] + s.a1().conj() * hv[1]).re
    }
}

/// Scale of the spin generators S = k·σ used by the agent's rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorScale {
    /// S = σ/2: an angle α rotates the Bloch vector by α.
    #[default]
    Half,
    /// S = σ: an angle α rotates the Bloch vector by 2α.
    Full,
}

impl GeneratorScale {
    pub fn factor(self) -> f64 {
        match self {
            GeneratorScale::Half => 0.5,
            GeneratorScale::Full => 1.0,
        }
    }

    pub fn spin_x(self) -> Hermitian2 {
        Hermitian2::pauli_x().scaled(self.factor())
    }

    pub fn spin_z(self) -> Hermitian2 {
        Hermitian2::pauli_z().scaled(self.factor())
    }
}

/// u · generator · u†
pub fn conjugate_frame(u: &Unitary2, generator: &Hermitian2) -> Hermitian2 {
    let m = u.0 * generator.0 * u.0.adjoint();
    // Restore exact Hermiticity lost to rounding.
    let sym = (m + m.adjoint()).scale(Complex64::new(0.5, 0.0));
    Hermitian2(sym)
}

/// Joint environment/register state, basis order |ER⟩ = |00⟩, |01⟩, |10⟩, |11⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    c: [Complex64; 4],
}

impl TwoQubitState {
    pub fn new(c: [Complex64; 4]) -> Result<Self> {
        if !c.iter().all(|z| finite(*z)) {
            return Err(Error::NonFinite("two-qubit amplitude"));
        }
        let norm_sq: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { c })
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        self.c
    }

    /// Probability that measuring the register gives `bit`.
    pub fn register_probability(&self, bit: u8) -> f64 {
        match bit {
            0 => self.c[0].norm_sqr() + self.c[2].norm_sqr(),
            _ => self.c[1].norm_sqr() + self.c[3].norm_sqr(),
        }
    }
}

/// CNOT with the environment as control onto a register prepared in |0⟩:
/// (a0|0⟩ + a1|1⟩)|0⟩ ↦ a0|00⟩ + a1|11⟩.
pub fn cnot_with_fresh_register(env: &PureQubitState) -> TwoQubitState {
    // Input |E⟩⊗|0⟩ = (a0, 0, a1, 0); CNOT swaps the |10⟩ and |11⟩ amplitudes.
    let input = [env.a0, ZERO, env.a1, ZERO];
    TwoQubitState {
        c: [input[0], input[1], input[3], input[2]],
    }
}

/// Physical single-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Mat2);

impl DensityMatrix {
    pub const MIN_EIGENVALUE: f64 = -1e-10;

    pub fn new(m: Mat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite("density matrix entry"));
        }
        if m.hermiticity_defect() > ALGEBRAIC_TOL {
            return Err(Error::NotPhysical("not Hermitian"));
        }
        if (m.trace().re - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(Error::NotPhysical("trace differs from 1"));
        }
        let rho = Self(m);
        if rho.eigenvalues()[0] < Self::MIN_EIGENVALUE {
            return Err(Error::NotPhysical("negative eigenvalue"));
        }
        Ok(rho)
    }

    pub(crate) fn from_mat_unchecked(m: Mat2) -> Self {
        Self(m)
    }

    pub fn maximally_mixed() -> Self {
        Self(Mat2::identity().scale(Complex64::new(0.5, 0.0)))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn as_hermitian(&self) -> Hermitian2 {
        Hermitian2(self.0)
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        self.as_hermitian().eigenvalues()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// (⟨σx⟩, ⟨σy⟩, ⟨σz⟩)
    pub fn bloch_vector(&self) -> [f64; 3] {
        [
            2.0 * self.0.m10.re,
            2.0 * self.0.m10.im,
            (self.0.m00 - self.0.m11).re,
        ]
    }

    /// ⟨ψ|ρ|ψ⟩, the fidelity of ρ against a pure state.
    pub fn fidelity_with_pure(&self, s: &PureQubitState) -> f64 {
        self.as_hermitian().expectation(s).clamp(0.0, 1.0)
    }
}
