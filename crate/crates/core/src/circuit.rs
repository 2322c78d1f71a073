//! The abstract measurement circuit: CNOT from system to ancilla, the
//! Hadamard-like gate `H' = [[t, r], [r, -t]]` on the ancilla, ancilla readout
//! and a `σz` correction on outcome 1.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_8};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{Amplitude, Density1, Qubit1, TwoQubitState, TOL};

/// Strength `(t, r)` of the ancilla rotation, with `t² + r² = 1`, `t ≥ r ≥ 0`.
///
/// `t = r = 1/√2` is a random guess that leaves the system undisturbed;
/// `t = 1` is a projective measurement in the `{|0⟩, |1⟩}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementStrength {
    t: f64,
    r: f64,
}

impl MeasurementStrength {
    pub fn new(t: f64, r: f64) -> Result<Self> {
        let bad = |reason| Err(Error::InvalidStrength { t, r, reason });
        if !t.is_finite() || !r.is_finite() {
            return bad("non-finite");
        }
        if (t * t + r * r - 1.0).abs() > TOL {
            return bad("t² + r² must equal 1");
        }
        if r < -TOL || t < r - TOL {
            return bad("need t ≥ r ≥ 0");
        }
        Ok(Self { t, r: r.max(0.0) })
    }

    /// Strength from `t` alone, taking `r = √(1 - t²)`.
    pub fn from_t(t: f64) -> Result<Self> {
        if !(FRAC_1_SQRT_2 - TOL..=1.0 + TOL).contains(&t) {
            return Err(Error::InvalidStrength { t, r: f64::NAN, reason: "t must lie in [1/√2, 1]" });
        }
        let t = t.min(1.0);
        Self::new(t, (1.0 - t * t).max(0.0).sqrt())
    }

    /// Strength set by the variable-beam-splitter waveplate angle:
    /// `t = cos 2φ`, `r = sin 2φ`, with `φ ∈ [0, π/8]`.
    pub fn from_vbs_angle(phi: f64) -> Result<Self> {
        if !(-TOL..=FRAC_PI_8 + TOL).contains(&phi) {
            return Err(Error::InvalidStrength {
                t: (2.0 * phi).cos(),
                r: (2.0 * phi).sin(),
                reason: "VBS angle must lie in [0°, 22.5°]",
            });
        }
        let phi = phi.clamp(0.0, FRAC_PI_8);
        let (r, t) = (2.0 * phi).sin_cos();
        Self::new(t, r)
    }

    pub fn random_guess() -> Self {
        Self { t: FRAC_1_SQRT_2, r: FRAC_1_SQRT_2 }
    }

    pub fn projective() -> Self {
        Self { t: 1.0, r: 0.0 }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

pub fn apply_cnot(state: &TwoQubitState) -> Result<TwoQubitState> {
    let [c00, c01, c10, c11] = state.amps();
    TwoQubitState::new([c00, c01, c11, c10])
}

/// Applies `H'` to the ancilla index.
pub fn apply_hprime(state: &TwoQubitState, s: MeasurementStrength) -> Result<TwoQubitState> {
    let [c00, c01, c10, c11] = state.amps();
    let (t, r) = (s.t, s.r);
    TwoQubitState::new([t * c00 + r * c01, r * c00 - t * c01, t * c10 + r * c11, r * c10 - t * c11])
}

/// `σz` on a single qubit: `|1⟩ → -|1⟩`.
pub fn feed_forward_sigma_z(psi: &Qubit1) -> Qubit1 {
    Qubit1::new(psi.a0(), -psi.a1()).expect("σz preserves the norm")
}

/// Controlled-`σz` from the ancilla onto the system: the feed-forward applied
/// coherently to the joint state.
pub fn apply_feed_forward(state: &TwoQubitState) -> Result<TwoQubitState> {
    let [c00, c01, c10, c11] = state.amps();
    TwoQubitState::new([c00, c01, c10, -c11])
}

/// Everything the circuit produces for one input state.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub p0: f64,
    pub p1: f64,
    /// Normalized system state after outcome 0; `None` if `p0 = 0`.
    pub branch0: Option<Qubit1>,
    /// Normalized system state after outcome 1, before feed-forward.
    pub branch1_raw: Option<Qubit1>,
    /// Normalized system state after outcome 1 and `σz`.
    pub branch1: Option<Qubit1>,
    /// Subnormalized branch vectors `|ψ0'⟩`, `|ψ1'⟩` (after feed-forward).
    pub branch_vectors: [[Amplitude; 2]; 2],
    /// Guess operator `p0|0⟩⟨0| + p1|1⟩⟨1|`.
    pub rho_g: Density1,
    /// Output operator `|ψ0'⟩⟨ψ0'| + |ψ1'⟩⟨ψ1'|`.
    pub rho_f: Density1,
}

fn outer_sum(vs: &[[Amplitude; 2]]) -> [[Amplitude; 2]; 2] {
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for v in vs {
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += v[i] * v[j].conj();
            }
        }
    }
    m
}

fn branch_state(v: [Amplitude; 2], p: f64) -> Option<Qubit1> {
    if p > 0.0 {
        Qubit1::normalized(v[0], v[1]).ok()
    } else {
        None
    }
}

/// Runs the full protocol with the ancilla prepared in `|0⟩`.
pub fn run_protocol(psi: &Qubit1, s: MeasurementStrength) -> Result<ProtocolResult> {
    let s = MeasurementStrength::new(s.t, s.r)?;
    let input = TwoQubitState::product(&Qubit1::new(psi.a0(), psi.a1())?, &Qubit1::zero());
    let joint = apply_hprime(&apply_cnot(&input)?, s)?;

    let b0 = [joint.amp(0, 0), joint.amp(1, 0)];
    let b1_raw = [joint.amp(0, 1), joint.amp(1, 1)];
    let b1 = [b1_raw[0], -b1_raw[1]];
    let p0 = b0[0].norm_sqr() + b0[1].norm_sqr();
    let p1 = b1[0].norm_sqr() + b1[1].norm_sqr();

    let rho_g = Density1::diagonal(p0, p1)?;
    let rho_f = Density1::new(outer_sum(&[b0, b1]))?;

    Ok(ProtocolResult {
        p0,
        p1,
        branch0: branch_state(b0, p0),
        branch1_raw: branch_state(b1_raw, p1),
        branch1: branch_state(b1, p1),
        branch_vectors: [b0, b1],
        rho_g,
        rho_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{fidelity_pure_mixed, haar_random_qubit, mub_six, partial_trace_ancilla, StateLabel};
    use crate::rng::child_rng;
    use proptest::prelude::*;

    const ZERO: Amplitude = Complex64::new(0.0, 0.0);

    fn same_state(x: &TwoQubitState, y: &TwoQubitState) -> bool {
        x.amps().iter().zip(y.amps()).all(|(a, b)| (a - b).norm() < TOL)
    }

    fn random_two_qubit(rng: &mut crate::rng::SimRng) -> TwoQubitState {
        let a = haar_random_qubit(rng);
        let b = haar_random_qubit(rng);
        let c = haar_random_qubit(rng);
        // superpose two product states for generic entanglement
        let x = TwoQubitState::product(&a, &b).amps();
        let y = TwoQubitState::product(&c, &a).amps();
        let v: Vec<_> = x.iter().zip(y).map(|(p, q)| p + q * Complex64::new(0.3, 0.7)).collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        TwoQubitState::new([v[0] / n, v[1] / n, v[2] / n, v[3] / n]).unwrap()
    }

    #[test]
    fn strength_validation() {
        assert!(MeasurementStrength::new(0.6, 0.8).is_err());
        assert!(MeasurementStrength::new(1.0, 0.1).is_err());
        assert!(MeasurementStrength::new(1.0, -0.0).is_ok());
        assert!(MeasurementStrength::from_t(0.5).is_err());
        assert!(MeasurementStrength::from_vbs_angle(0.5).is_err());
        let s = MeasurementStrength::from_vbs_angle(FRAC_PI_8).unwrap();
        assert!((s.t() - s.r()).abs() < 1e-15);
        let s = MeasurementStrength::from_t(0.9).unwrap();
        assert!((s.r() - 0.19f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cnot_entangles_product_input() {
        let mut rng = child_rng(1, 0);
        let psi = haar_random_qubit(&mut rng);
        let out = apply_cnot(&TwoQubitState::product(&psi, &Qubit1::zero())).unwrap();
        let expected = TwoQubitState::new([psi.a0(), ZERO, ZERO, psi.a1()]).unwrap();
        assert!(same_state(&out, &expected));

        let zz = TwoQubitState::product(&Qubit1::zero(), &Qubit1::zero());
        assert!(same_state(&apply_cnot(&zz).unwrap(), &zz));
    }

    #[test]
    fn gates_are_involutions_and_unitary() {
        let mut rng = child_rng(2, 0);
        for i in 0..50 {
            let st = random_two_qubit(&mut rng);
            let s = MeasurementStrength::from_t(FRAC_1_SQRT_2 + i as f64 * 0.005).unwrap();
            let c = apply_cnot(&st).unwrap();
            let h = apply_hprime(&st, s).unwrap();
            assert!((c.norm_sqr() - 1.0).abs() < TOL && (h.norm_sqr() - 1.0).abs() < TOL);
            assert!(same_state(&apply_cnot(&c).unwrap(), &st));
            assert!(same_state(&apply_hprime(&h, s).unwrap(), &st));
        }
    }

    #[test]
    fn hprime_produces_joint_state() {
        let mut rng = child_rng(3, 0);
        let psi = haar_random_qubit(&mut rng);
        let (a, b) = (psi.a0(), psi.a1());
        let s = MeasurementStrength::from_t(0.83).unwrap();
        let (t, r) = (s.t(), s.r());
        let entangled = TwoQubitState::new([a, ZERO, ZERO, b]).unwrap();
        let out = apply_hprime(&entangled, s).unwrap();
        // (αt|0⟩ + βr|1⟩)|0⟩ + (αr|0⟩ − βt|1⟩)|1⟩
        let expected = TwoQubitState::new([a * t, a * r, b * r, -b * t]).unwrap();
        assert!(same_state(&out, &expected));
        assert!((out.amp(1, 1) + b * t).norm() < TOL);

        let diag = apply_hprime(&TwoQubitState::new([ZERO, a, ZERO, b]).unwrap(), MeasurementStrength::projective())
            .unwrap();
        assert!(same_state(&diag, &TwoQubitState::new([ZERO, -a, ZERO, -b]).unwrap()));
    }

    #[test]
    fn random_guess_leaves_state_intact() {
        let mut rng = child_rng(4, 0);
        for _ in 0..20 {
            let psi = haar_random_qubit(&mut rng);
            let res = run_protocol(&psi, MeasurementStrength::random_guess()).unwrap();
            assert!(res.rho_f.max_abs_diff(&psi.projector()) < TOL);
            assert!(res.branch0.unwrap().same_ray(&psi, 1e-12));
            assert!(res.branch1.unwrap().same_ray(&psi, 1e-12));
            assert!((fidelity_pure_mixed(&psi, &res.rho_f).unwrap() - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn basis_state_outcome_probabilities() {
        for t in [FRAC_1_SQRT_2, 0.8, 0.95] {
            let s = MeasurementStrength::from_t(t).unwrap();
            let res = run_protocol(&Qubit1::zero(), s).unwrap();
            assert!((res.p0 - t * t).abs() < TOL && (res.p1 - s.r() * s.r()).abs() < TOL);
            assert!(res.branch0.unwrap().same_ray(&Qubit1::zero(), TOL));
            assert!(res.branch1.unwrap().same_ray(&Qubit1::zero(), TOL));
        }
        // projective limit: outcome 1 never happens for |0⟩
        let res = run_protocol(&Qubit1::zero(), MeasurementStrength::projective()).unwrap();
        assert_eq!(res.p1, 0.0);
        assert!(res.branch1.is_none());
    }

    #[test]
    fn diagonal_state_under_projective_measurement() {
        let d = StateLabel::D.state();
        let res = run_protocol(&d, MeasurementStrength::projective()).unwrap();
        assert!((res.p0 - 0.5).abs() < TOL && (res.p1 - 0.5).abs() < TOL);
        assert!(res.rho_f.max_abs_diff(&Density1::maximally_mixed()) < TOL);
        assert!((fidelity_pure_mixed(&d, &res.rho_f).unwrap() - 0.5).abs() < TOL);
    }

    #[test]
    fn branches_match_closed_forms() {
        let mut rng = child_rng(5, 0);
        let psi = haar_random_qubit(&mut rng);
        let (a, b) = (psi.a0(), psi.a1());
        let s = MeasurementStrength::from_t(0.9).unwrap();
        let (t, r) = (s.t(), s.r());
        let res = run_protocol(&psi, s).unwrap();
        let norm = |x: Amplitude, y: Amplitude| Qubit1::normalized(x, y).unwrap();
        assert!(res.branch0.unwrap().same_ray(&norm(a * t, b * r), 1e-12));
        assert!(res.branch1_raw.unwrap().same_ray(&norm(a * r, -b * t), 1e-12));
        assert!(res.branch1.unwrap().same_ray(&norm(a * r, b * t), 1e-12));
        let (pa, pb) = (a.norm_sqr(), b.norm_sqr());
        assert!((res.p0 - (pa * t * t + pb * r * r)).abs() < TOL);
        assert!((res.p1 - (pa * r * r + pb * t * t)).abs() < TOL);
        assert!(res.rho_g.max_abs_diff(&Density1::diagonal(res.p0, res.p1).unwrap()) < TOL);
        assert!((res.rho_f.trace() - 1.0).abs() < TOL);
    }

    #[test]
    fn sigma_z_examples() {
        assert!(feed_forward_sigma_z(&Qubit1::zero()).same_ray(&Qubit1::zero(), TOL));
        let a = StateLabel::A.state();
        assert!(feed_forward_sigma_z(&a).same_ray(&StateLabel::D.state(), TOL));
        let mut rng = child_rng(6, 0);
        for _ in 0..20 {
            let q = haar_random_qubit(&mut rng);
            assert!(feed_forward_sigma_z(&feed_forward_sigma_z(&q)).same_ray(&q, TOL));
        }
    }

    #[test]
    fn output_operator_equals_traced_coherent_evolution() {
        let mut rng = child_rng(7, 0);
        for i in 0..50 {
            let psi = haar_random_qubit(&mut rng);
            let s = MeasurementStrength::from_t(FRAC_1_SQRT_2 + (1.0 - FRAC_1_SQRT_2) * i as f64 / 49.0).unwrap();
            let joint = apply_hprime(&apply_cnot(&TwoQubitState::product(&psi, &Qubit1::zero())).unwrap(), s).unwrap();
            let traced = partial_trace_ancilla(&apply_feed_forward(&joint).unwrap()).unwrap();
            let res = run_protocol(&psi, s).unwrap();
            assert!(res.rho_f.max_abs_diff(&traced) < TOL);
        }
    }

    #[test]
    fn six_state_operation_fidelity_is_non_increasing_in_t() {
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let t = FRAC_1_SQRT_2 + (1.0 - FRAC_1_SQRT_2) * i as f64 / 49.0;
            let s = MeasurementStrength::from_t(t).unwrap();
            let f: f64 = mub_six()
                .iter()
                .map(|q| fidelity_pure_mixed(q, &run_protocol(q, s).unwrap().rho_f).unwrap())
                .sum::<f64>()
                / 6.0;
            assert!(f <= prev + TOL);
            prev = f;
        }
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(seed in any::<u64>(), t in FRAC_1_SQRT_2..=1.0f64) {
            let psi = haar_random_qubit(&mut child_rng(seed, 0));
            let res = run_protocol(&psi, MeasurementStrength::from_t(t).unwrap()).unwrap();
            prop_assert!((res.p0 + res.p1 - 1.0).abs() < TOL);
            prop_assert!((0.0..=1.0).contains(&res.p0) && (0.0..=1.0).contains(&res.p1));
            prop_assert!(res.rho_g.get(0, 1).norm() == 0.0);
        }
    }
}
