//! Element-level model of the interferometric apparatus.
//!
//! A heralded photon carries the system qubit in its polarization and the
//! ancilla in its path. The chain modeled by [`propagate`] is:
//!
//! 1. the prepared polarization state enters path 0;
//! 2. a PBS (transmits H, reflects V) acts as the polarization→path CNOT;
//! 3. path 1 picks up the interferometer phase `mz_phase`;
//! 4. path coherence is scaled by `visibility`;
//! 5. the variable beam splitter: HWP(φ) in path 0, HWP(φ + 45°) in path 1,
//!    recombined on a second PBS (`t = cos 2φ`, `r = sin 2φ`);
//! 6. output 1 passes a HWP at 45° (`σx` feed-forward);
//! 7. each output undoes the state preparation and splits on an analyzer PBS
//!    into the `ψ` and `ψ⊥` detectors;
//! 8. per-channel efficiency and dark clicks.

mod config;
mod jones;

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_4;

pub use config::BenchConfig;
pub use jones::{hwp_jones, inverse_preparation, prepare_state, qwp_jones, waveplate_settings, Jones};

use crate::circuit::{run_protocol, MeasurementStrength};
use crate::error::{Error, Result};
use crate::qcore::{mub_six, Amplitude, Qubit1};

/// Minimum `|⟨prepared|ψ⟩|²` accepted by [`propagate`].
pub const PREPARATION_TOL: f64 = 1e-9;

/// Click probabilities ordered `[D0(ψ), D0(ψ⊥), D1(ψ), D1(ψ⊥)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorProbs {
    pub p: [f64; 4],
}

impl DetectorProbs {
    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Probability that no detector fires.
    pub fn no_click(&self) -> f64 {
        (1.0 - self.total()).max(0.0)
    }

    pub fn max_abs_diff(&self, other: &DetectorProbs) -> f64 {
        self.p.iter().zip(other.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

type Modes = [Amplitude; 4];
type ModeMatrix = [[Amplitude; 4]; 4];

const C0: Amplitude = Complex64::new(0.0, 0.0);

// Mode index = 2·path + polarization (H = 0, V = 1).
fn block_diag(path0: &Jones, path1: &Jones) -> ModeMatrix {
    let mut m = [[C0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = path0.0[i][j];
            m[2 + i][2 + j] = path1.0[i][j];
        }
    }
    m
}

fn matmul(a: &ModeMatrix, b: &ModeMatrix) -> ModeMatrix {
    let mut m = [[C0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

/// PBS acting on two input paths: H keeps its path, V switches path.
fn pbs() -> ModeMatrix {
    let one = Complex64::new(1.0, 0.0);
    let mut m = [[C0; 4]; 4];
    m[0][0] = one; // H0 → H0
    m[2][2] = one; // H1 → H1
    m[3][1] = one; // V0 → V1
    m[1][3] = one; // V1 → V0
    m
}

/// Optical probabilities before detection, for the state `psi` prepared with
/// the config's waveplates.
fn optical_probs(config: &BenchConfig, psi: &Qubit1) -> [f64; 4] {
    let [alpha, beta] = psi.amps();
    let path_phase = Complex64::from_polar(1.0, config.mz_phase);
    // Steps 1-3: the first PBS sends H to path 0 and V to path 1.
    let modes: Modes = [alpha, C0, C0, beta * path_phase];

    // Step 4: density operator with damped path coherence.
    let mut rho = [[C0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let damp = if (i < 2) == (j < 2) { 1.0 } else { config.visibility };
            rho[i][j] = modes[i] * modes[j].conj() * damp;
        }
    }

    // Steps 5-7 as one linear map.
    let vbs = block_diag(&hwp_jones(config.phi), &hwp_jones(config.phi + FRAC_PI_4));
    let analysis = inverse_preparation(config.theta1, config.theta2);
    let outputs = block_diag(&analysis, &(analysis * hwp_jones(FRAC_PI_4)));
    let chain = matmul(&outputs, &matmul(&pbs(), &vbs));

    let mut diag = [0.0; 4];
    for (k, d) in diag.iter_mut().enumerate() {
        let mut acc = C0;
        for i in 0..4 {
            for j in 0..4 {
                acc += chain[k][i] * rho[i][j] * chain[k][j].conj();
            }
        }
        *d = acc.re.max(0.0);
    }
    // After the inverse preparation ψ sits on V and ψ⊥ on H.
    [diag[1], diag[0], diag[3], diag[2]]
}

/// Applies channel efficiencies (relative to the best channel) and dark
/// clicks. A dark click can only occur on shots where no photon was detected,
/// so at most one detector fires per shot.
pub fn apply_detection(config: &BenchConfig, optical: [f64; 4]) -> DetectorProbs {
    let best = config.eta.iter().copied().fold(f64::MIN, f64::max);
    let mut p = [0.0; 4];
    for i in 0..4 {
        p[i] = optical[i] * config.eta[i] / best;
    }
    let missed = (1.0 - p.iter().sum::<f64>()).max(0.0);
    for x in &mut p {
        *x += missed * config.dark_rate;
    }
    DetectorProbs { p }
}

/// Detector click probabilities for input `psi`.
///
/// `psi` must be the state the config's preparation waveplates produce; the
/// analyzers are only meaningful for that state.
pub fn propagate(config: &BenchConfig, psi: &Qubit1) -> Result<DetectorProbs> {
    config.validate()?;
    let psi = Qubit1::new(psi.a0(), psi.a1())?;
    let prepared = prepare_state(config.theta1, config.theta2);
    let overlap = prepared.inner(&psi).norm_sqr();
    if overlap < 1.0 - PREPARATION_TOL {
        return Err(Error::PreparationMismatch { overlap });
    }
    Ok(apply_detection(config, optical_probs(config, &psi)))
}

/// Detector probabilities predicted by the abstract circuit at the strength
/// set by `config.phi`, with the same detection model applied.
pub fn circuit_probs(config: &BenchConfig, psi: &Qubit1) -> Result<DetectorProbs> {
    let strength = MeasurementStrength::from_vbs_angle(config.phi)?;
    let res = run_protocol(psi, strength)?;
    let perp = psi.orthogonal();
    let proj = |target: &Qubit1, v: [Amplitude; 2]| {
        (target.a0().conj() * v[0] + target.a1().conj() * v[1]).norm_sqr()
    };
    let [b0, b1] = res.branch_vectors;
    let optical = [proj(psi, b0), proj(&perp, b0), proj(psi, b1), proj(&perp, b1)];
    Ok(apply_detection(config, optical))
}

/// Largest per-detector gap between [`propagate`] and [`circuit_probs`] over
/// the six test states and the given VBS angles (radians). The preparation
/// waveplates in `config` are replaced per state.
pub fn bench_equals_circuit(config: &BenchConfig, phis: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &phi in phis {
        for psi in mub_six() {
            let cfg = config.with_phi(phi).prepared_for(&psi);
            let bench = propagate(&cfg, &psi)?;
            let circuit = circuit_probs(&cfg, &psi)?;
            worst = worst.max(bench.max_abs_diff(&circuit));
        }
    }
    Ok(worst)
}

/// `n` VBS angles evenly spaced over `[0, π/8]`.
pub fn phi_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|i| std::f64::consts::FRAC_PI_8 * i as f64 / (n - 1) as f64).collect(),
    }
}
