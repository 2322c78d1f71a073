//! Estimation and operation fidelities, their averages over input states and
//! the optimal information/disturbance trade-off for a qubit.

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{run_protocol, MeasurementStrength};
use crate::error::{Error, Result};
use crate::qcore::{fidelity_pure_mixed, haar_random_qubit, mub_six, Qubit1};
use crate::rng::{child_rng, chunks, stream_id};

/// Slack on the domain of [`mdm_bound`].
pub const BOUND_DOMAIN_SLACK: f64 = 1e-12;

/// A per-state fidelity functional.
pub type StateFidelity = fn(&Qubit1, MeasurementStrength) -> f64;

/// `G_ψ = ⟨ψ|ρ_G|ψ⟩ = P0|⟨0|ψ⟩|² + P1|⟨1|ψ⟩|²`.
pub fn estimation_fidelity(psi: &Qubit1, s: MeasurementStrength) -> f64 {
    let (t2, r2) = (s.t() * s.t(), s.r() * s.r());
    let (pa, pb) = (psi.a0().norm_sqr(), psi.a1().norm_sqr());
    let p0 = pa * t2 + pb * r2;
    let p1 = pa * r2 + pb * t2;
    p0 * pa + p1 * pb
}

/// `F_ψ = ⟨ψ|ρ_F|ψ⟩`, evaluated through the full circuit.
pub fn operation_fidelity(psi: &Qubit1, s: MeasurementStrength) -> f64 {
    let res = run_protocol(psi, s).expect("normalized input and validated strength");
    fidelity_pure_mixed(psi, &res.rho_f).expect("circuit output is a valid density operator")
}

/// Bloch-sphere average of `G_ψ`: `(t² + 1)/3`.
pub fn avg_estimation_fidelity(s: MeasurementStrength) -> f64 {
    (s.t() * s.t() + 1.0) / 3.0
}

/// Bloch-sphere average of `F_ψ`: `2(1 + t·r)/3`.
pub fn avg_operation_fidelity(s: MeasurementStrength) -> f64 {
    2.0 * (1.0 + s.t() * s.r()) / 3.0
}

/// Largest achievable average operation fidelity at average estimation
/// fidelity `g_avg`: `2/3 + √(1 − (6g − 3)²)/3`, for `g ∈ [1/2, 2/3]`.
pub fn mdm_bound(g_avg: f64) -> Result<f64> {
    let (lo, hi) = (0.5, 2.0 / 3.0);
    if !g_avg.is_finite() || g_avg < lo - BOUND_DOMAIN_SLACK || g_avg > hi + BOUND_DOMAIN_SLACK {
        return Err(Error::Domain { value: g_avg, lo, hi });
    }
    let x = 6.0 * g_avg - 3.0;
    Ok(2.0 / 3.0 + (1.0 - x * x).max(0.0).sqrt() / 3.0)
}

/// Optimal frontier for measured points. Below `G = 1/2` a measurement is
/// worse than guessing, and guessing already reaches `F = 1`, so the frontier
/// is flat there. Above `1/2` this is [`mdm_bound`].
pub fn optimal_operation_fidelity(g_avg: f64) -> Result<f64> {
    if (0.0..0.5).contains(&g_avg) {
        Ok(1.0)
    } else {
        mdm_bound(g_avg)
    }
}

/// Mean of `f` over the six polarization test states.
pub fn six_state_average(f: StateFidelity, s: MeasurementStrength) -> f64 {
    mub_six().iter().map(|psi| f(psi, s)).sum::<f64>() / 6.0
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: u64,
}

/// Haar-measure average of `f` from `n_samples` random states.
///
/// Samples are drawn in fixed chunks with per-chunk streams, so the result
/// depends only on `(seed, n_samples)` and not on the thread count.
pub fn haar_average(f: StateFidelity, s: MeasurementStrength, n_samples: u64, seed: u64) -> Estimate {
    assert!(n_samples >= 1, "haar_average needs at least one sample");
    // (sum, sum of squares) per chunk, combined in chunk order.
    let partial: Vec<(f64, f64)> = chunks(n_samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = child_rng(seed, stream_id(0, chunk));
            (0..len).fold((0.0, 0.0), |(s1, s2), _| {
                let v = f(&haar_random_qubit(&mut rng), s);
                (s1 + v, s2 + v * v)
            })
        })
        .collect();
    let (sum, sum_sq) = partial.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = n_samples as f64;
    let mean = sum / n;
    let std_err = if n_samples > 1 {
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Estimate { mean, std_err, n: n_samples }
}

/// An `(G_avg, F_avg)` pair at a given strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityPoint {
    pub g_avg: f64,
    pub f_avg: f64,
    pub strength: MeasurementStrength,
}

impl FidelityPoint {
    pub fn analytic(s: MeasurementStrength) -> Self {
        Self { g_avg: avg_estimation_fidelity(s), f_avg: avg_operation_fidelity(s), strength: s }
    }

    /// `f_avg − mdm_bound(g_avg)`; zero for an optimal measurement.
    pub fn bound_residual(&self) -> Result<f64> {
        Ok(self.f_avg - mdm_bound(self.g_avg)?)
    }
}
