//! Single-qubit and two-qubit state algebra.
//!
//! Basis convention: `|0⟩ ≡ |H⟩`, `|1⟩ ≡ |V⟩`. Two-qubit amplitudes are
//! indexed `(system, ancilla)` with the system as the most significant bit.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance for exact algebraic invariants.
pub const TOL: f64 = 1e-12;

pub type Amplitude = Complex64;

const ZERO: Amplitude = Complex64::new(0.0, 0.0);
const ONE: Amplitude = Complex64::new(1.0, 0.0);

fn check_finite(amps: &[Amplitude]) -> Result<()> {
    if amps.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidState("non-finite amplitude".into()))
    }
}

/// A normalized pure qubit state `a0|0⟩ + a1|1⟩`.
///
/// Equality ([`Qubit1::same_ray`]) ignores global phase.
#[derive(Debug, Clone, Copy)]
pub struct Qubit1 {
    amps: [Amplitude; 2],
}

impl Qubit1 {
    pub fn new(a0: Amplitude, a1: Amplitude) -> Result<Self> {
        check_finite(&[a0, a1])?;
        let norm = a0.norm_sqr() + a1.norm_sqr();
        if (norm - 1.0).abs() > TOL {
            return Err(Error::InvalidState(format!("qubit norm² = {norm}")));
        }
        Ok(Self { amps: [a0, a1] })
    }

    /// Normalizes `(a0, a1)`; fails only for the zero vector or non-finite input.
    pub fn normalized(a0: Amplitude, a1: Amplitude) -> Result<Self> {
        check_finite(&[a0, a1])?;
        let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Ok(Self { amps: [a0 / norm, a1 / norm] })
    }

    pub fn zero() -> Self {
        Self { amps: [ONE, ZERO] }
    }

    pub fn one() -> Self {
        Self { amps: [ZERO, ONE] }
    }

    pub fn a0(&self) -> Amplitude {
        self.amps[0]
    }

    pub fn a1(&self) -> Amplitude {
        self.amps[1]
    }

    pub fn amps(&self) -> [Amplitude; 2] {
        self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Qubit1) -> Amplitude {
        self.amps[0].conj() * other.amps[0] + self.amps[1].conj() * other.amps[1]
    }

    /// The orthogonal state `(-a1*, a0*)`.
    pub fn orthogonal(&self) -> Qubit1 {
        Qubit1 { amps: [-self.amps[1].conj(), self.amps[0].conj()] }
    }

    /// Representative with the first nonzero amplitude real and positive.
    pub fn canonical(&self) -> Qubit1 {
        let lead = if self.amps[0].norm() > TOL { self.amps[0] } else { self.amps[1] };
        let phase = lead.conj() / lead.norm();
        Qubit1 { amps: [self.amps[0] * phase, self.amps[1] * phase] }
    }

    /// Equality of rays: amplitudes agree after fixing the global phase.
    pub fn same_ray(&self, other: &Qubit1, tol: f64) -> bool {
        let (a, b) = (self.canonical(), other.canonical());
        (a.amps[0] - b.amps[0]).norm() <= tol && (a.amps[1] - b.amps[1]).norm() <= tol
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> Density1 {
        let [a, b] = self.amps;
        Density1 { m: [[a * a.conj(), a * b.conj()], [b * a.conj(), b * b.conj()]] }
    }
}

impl fmt::Display for Qubit1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})|0⟩ + ({})|1⟩", self.amps[0], self.amps[1])
    }
}

/// Normalized state of system ⊗ ancilla, amplitudes ordered `00, 01, 10, 11`.
#[derive(Debug, Clone, Copy)]
pub struct TwoQubitState {
    c: [Amplitude; 4],
}

impl TwoQubitState {
    pub fn new(c: [Amplitude; 4]) -> Result<Self> {
        check_finite(&c)?;
        let norm: f64 = c.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TOL {
            return Err(Error::InvalidState(format!("two-qubit norm² = {norm}")));
        }
        Ok(Self { c })
    }

    /// `|ψ⟩_s ⊗ |φ⟩_a`.
    pub fn product(system: &Qubit1, ancilla: &Qubit1) -> Self {
        let [s0, s1] = system.amps;
        let [a0, a1] = ancilla.amps;
        Self { c: [s0 * a0, s0 * a1, s1 * a0, s1 * a1] }
    }

    pub fn amp(&self, system: usize, ancilla: usize) -> Amplitude {
        self.c[2 * system + ancilla]
    }

    pub fn amps(&self) -> [Amplitude; 4] {
        self.c
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().map(|a| a.norm_sqr()).sum()
    }

    #[cfg(test)]
    pub(crate) fn unchecked(c: [Amplitude; 4]) -> Self {
        Self { c }
    }
}

/// A 2×2 density operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density1 {
    m: [[Amplitude; 2]; 2],
}

impl Density1 {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: [[Amplitude; 2]; 2]) -> Result<Self> {
        check_finite(&[m[0][0], m[0][1], m[1][0], m[1][1]])?;
        if (m[0][1] - m[1][0].conj()).norm() > TOL
            || m[0][0].im.abs() > TOL
            || m[1][1].im.abs() > TOL
        {
            return Err(Error::InvalidState("density matrix is not Hermitian".into()));
        }
        let (p, q) = (m[0][0].re, m[1][1].re);
        if (p + q - 1.0).abs() > TOL {
            return Err(Error::InvalidState(format!("density trace = {}", p + q)));
        }
        // Smaller eigenvalue of a Hermitian 2x2 with unit trace.
        let disc = ((p - q) * (p - q) / 4.0 + m[0][1].norm_sqr()).sqrt();
        let lambda_min = (p + q) / 2.0 - disc;
        if lambda_min < -TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lambda_min}")));
        }
        Ok(Self { m })
    }

    pub fn maximally_mixed() -> Self {
        let h = Complex64::new(0.5, 0.0);
        Self { m: [[h, ZERO], [ZERO, h]] }
    }

    /// `p0|0⟩⟨0| + p1|1⟩⟨1|`.
    pub fn diagonal(p0: f64, p1: f64) -> Result<Self> {
        Self::new([[Complex64::new(p0, 0.0), ZERO], [ZERO, Complex64::new(p1, 0.0)]])
    }

    pub fn get(&self, row: usize, col: usize) -> Amplitude {
        self.m[row][col]
    }

    pub fn matrix(&self) -> [[Amplitude; 2]; 2] {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0].re + self.m[1][1].re
    }

    pub fn max_abs_diff(&self, other: &Density1) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        d
    }

    /// `w·self + (1-w)·other`.
    pub fn mix(&self, other: &Density1, w: f64) -> Density1 {
        let mut m = self.m;
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = *x * w + other.m[i][j] * (1.0 - w);
            }
        }
        Density1 { m }
    }
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity_pure_mixed(psi: &Qubit1, rho: &Density1) -> Result<f64> {
    // Re-validate: both types can only be built through checking constructors,
    // but a caller may pass values that drifted through arithmetic.
    Qubit1::new(psi.a0(), psi.a1())?;
    Density1::new(rho.m)?;
    let [a, b] = psi.amps;
    let m = &rho.m;
    let v = a.conj() * (m[0][0] * a + m[0][1] * b) + b.conj() * (m[1][0] * a + m[1][1] * b);
    if v.im.abs() > TOL {
        return Err(Error::InvalidState(format!("fidelity has imaginary part {}", v.im)));
    }
    Ok(v.re.clamp(0.0, 1.0))
}

/// Reduced density operator of the system qubit.
pub fn partial_trace_ancilla(state: &TwoQubitState) -> Result<Density1> {
    TwoQubitState::new(state.c)?;
    let c = &state.c;
    let mut m = [[ZERO; 2]; 2];
    for (s, row) in m.iter_mut().enumerate() {
        for (s2, x) in row.iter_mut().enumerate() {
            *x = (0..2).map(|a| c[2 * s + a] * c[2 * s2 + a].conj()).sum();
        }
    }
    Density1::new(m)
}

/// Bloch-sphere-uniform pure state: two standard complex Gaussians, normalized.
pub fn haar_random_qubit<R: Rng + ?Sized>(rng: &mut R) -> Qubit1 {
    loop {
        let mut g = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let (a0, a1) = (g(), g());
        if let Ok(q) = Qubit1::normalized(a0, a1) {
            return q;
        }
    }
}

/// Labels of the six polarization test states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateLabel {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl StateLabel {
    pub const ALL: [StateLabel; 6] =
        [StateLabel::H, StateLabel::V, StateLabel::D, StateLabel::A, StateLabel::R, StateLabel::L];

    pub fn as_str(self) -> &'static str {
        match self {
            StateLabel::H => "H",
            StateLabel::V => "V",
            StateLabel::D => "D",
            StateLabel::A => "A",
            StateLabel::R => "R",
            StateLabel::L => "L",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn state(self) -> Qubit1 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (a0, a1) = match self {
            StateLabel::H => (ONE, ZERO),
            StateLabel::V => (ZERO, ONE),
            StateLabel::D => (Complex64::new(s, 0.0), Complex64::new(s, 0.0)),
            StateLabel::A => (Complex64::new(s, 0.0), Complex64::new(-s, 0.0)),
            StateLabel::R => (Complex64::new(s, 0.0), Complex64::new(0.0, -s)),
            StateLabel::L => (Complex64::new(s, 0.0), Complex64::new(0.0, s)),
        };
        Qubit1 { amps: [a0, a1] }
    }
}

impl std::str::FromStr for StateLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        StateLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown state label {s:?}"))
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `|H⟩, |V⟩, |D⟩, |A⟩, |R⟩, |L⟩` in that order, with `|L⟩ = (|H⟩ + i|V⟩)/√2`.
pub fn mub_six() -> [Qubit1; 6] {
    StateLabel::ALL.map(StateLabel::state)
}
