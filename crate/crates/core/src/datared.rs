//! Reduction of count tables to state-averaged fidelities.
//!
//! For each input `ψ` with counts `N_i(ψ)`, `N_i(ψ⊥)`:
//!
//! * `n = N / N_tot` with `N_tot` the row sum;
//! * `F_ψ = n0(ψ) + n1(ψ)`;
//! * `P_i = n_i(ψ) + n_i(ψ⊥)` and `G_ψ = P0|⟨H|ψ⟩|² + P1|⟨V|ψ⟩|²`.
//!
//! Table averages are unweighted means over the six states.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fidelity::optimal_operation_fidelity;
use crate::montecarlo::{CountsRow, CountsTable};
use crate::qcore::{Qubit1, StateLabel};

/// Two settings are the same if their angles agree to this many degrees.
pub const PHI_MATCH_TOL_DEG: f64 = 1e-6;

pub const FLAT_CSV_HEADER: &str = "phi_deg,g_avg,f_avg,g_std,f_std";

/// Divides each column by its channel's relative efficiency.
pub fn efficiency_correct(raw: &CountsTable, eta: [f64; 4]) -> Result<CountsTable> {
    if let Some(&bad) = eta.iter().find(|e| e.is_nan() || **e <= 0.0 || e.is_infinite()) {
        return Err(Error::Efficiency(bad));
    }
    Ok(raw.map_counts(|col, c| c / eta[col]))
}

/// `(F_ψ, G_ψ)` for one row.
pub fn reduce_row(row: &CountsRow, psi: &Qubit1) -> Result<(f64, f64)> {
    let total = row.total();
    if total <= 0.0 {
        return Err(Error::EmptyRow { label: row.label.to_string() });
    }
    let n = row.counts.map(|c| c / total);
    let f = n[0] + n[2];
    let p0 = n[0] + n[1];
    let p1 = n[2] + n[3];
    let g = p0 * psi.a0().norm_sqr() + p1 * psi.a1().norm_sqr();
    Ok((f, g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPoint {
    pub g_avg: f64,
    pub f_avg: f64,
    /// Indexed by [`StateLabel::index`].
    pub g_per_state: [f64; 6],
    pub f_per_state: [f64; 6],
    pub phi_deg: Option<f64>,
    pub n_runs: usize,
    /// Sample standard deviation over runs; 0 for a single run.
    pub g_std: f64,
    pub f_std: f64,
}

impl ReducedPoint {
    /// `f_avg` minus the optimal operation fidelity at `g_avg`. Sampling
    /// noise can put `g_avg` slightly below 1/2, where the frontier is `F = 1`.
    pub fn bound_residual(&self) -> Result<f64> {
        Ok(self.f_avg - optimal_operation_fidelity(self.g_avg)?)
    }
}

pub fn reduce_table(table: &CountsTable) -> Result<ReducedPoint> {
    let mut g = [0.0; 6];
    let mut f = [0.0; 6];
    for label in StateLabel::ALL {
        let (fi, gi) = reduce_row(table.row(label), &label.state())?;
        f[label.index()] = fi;
        g[label.index()] = gi;
    }
    Ok(ReducedPoint {
        g_avg: g.iter().sum::<f64>() / 6.0,
        f_avg: f.iter().sum::<f64>() / 6.0,
        g_per_state: g,
        f_per_state: f,
        phi_deg: table.meta.phi_deg,
        n_runs: 1,
        g_std: 0.0,
        f_std: 0.0,
    })
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Combines repeated runs at one setting: means of the averages and
/// per-state fidelities, sample standard deviations of the averages.
pub fn aggregate_runs(points: &[ReducedPoint]) -> Result<ReducedPoint> {
    let first = points.first().ok_or(Error::NoRuns)?;
    for p in &points[1..] {
        match (first.phi_deg, p.phi_deg) {
            (None, None) => {}
            (Some(a), Some(b)) if (a - b).abs() <= PHI_MATCH_TOL_DEG => {}
            (a, b) => return Err(Error::MismatchedPhi { a: a.unwrap_or(f64::NAN), b: b.unwrap_or(f64::NAN) }),
        }
    }
    if points.len() == 1 {
        return Ok(first.clone());
    }
    let (g_avg, g_std) = mean_std(points.iter().map(|p| p.g_avg));
    let (f_avg, f_std) = mean_std(points.iter().map(|p| p.f_avg));
    let per_state = |sel: fn(&ReducedPoint) -> &[f64; 6]| {
        std::array::from_fn(|k| points.iter().map(|p| sel(p)[k]).sum::<f64>() / points.len() as f64)
    };
    Ok(ReducedPoint {
        g_avg,
        f_avg,
        g_per_state: per_state(|p| &p.g_per_state),
        f_per_state: per_state(|p| &p.f_per_state),
        phi_deg: first.phi_deg,
        n_runs: points.iter().map(|p| p.n_runs).sum(),
        g_std,
        f_std,
    })
}

/// Shot-noise error bars `(σ_G, σ_F)` on the table averages, propagating an
/// independent Poisson variance `N` on every raw count to first order.
pub fn poisson_errors(table: &CountsTable) -> Result<(f64, f64)> {
    let (mut var_g, mut var_f) = (0.0, 0.0);
    for label in StateLabel::ALL {
        let row = table.row(label);
        let (f, g) = reduce_row(row, &label.state())?;
        let total = row.total();
        let psi = label.state();
        let (h, v) = (psi.a0().norm_sqr(), psi.a1().norm_sqr());
        let [a, b, c, d] = row.counts;
        // ∂F/∂N and ∂G/∂N for the four cells
        let df = [1.0 - f, -f, 1.0 - f, -f].map(|x| x / total);
        let dg = [h - g, h - g, v - g, v - g].map(|x| x / total);
        for (i, n) in [a, b, c, d].into_iter().enumerate() {
            var_f += df[i] * df[i] * n;
            var_g += dg[i] * dg[i] * n;
        }
    }
    Ok((var_g.sqrt() / 6.0, var_f.sqrt() / 6.0))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StateFidelities {
    pub g: f64,
    pub f: f64,
}

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct PerState {
    pub H: StateFidelities,
    pub V: StateFidelities,
    pub D: StateFidelities,
    pub A: StateFidelities,
    pub R: StateFidelities,
    pub L: StateFidelities,
}

/// JSON form of a reduced point.
#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub phi_deg: Option<f64>,
    pub g_avg: f64,
    pub f_avg: f64,
    pub g_std: f64,
    pub f_std: f64,
    pub n_runs: usize,
    /// See [`ReducedPoint::bound_residual`]; absent if `g_avg` exceeds 2/3.
    pub bound_residual: Option<f64>,
    pub per_state: PerState,
}

impl From<&ReducedPoint> for PointReport {
    fn from(p: &ReducedPoint) -> Self {
        let s = |l: StateLabel| StateFidelities { g: p.g_per_state[l.index()], f: p.f_per_state[l.index()] };
        PointReport {
            phi_deg: p.phi_deg,
            g_avg: p.g_avg,
            f_avg: p.f_avg,
            g_std: p.g_std,
            f_std: p.f_std,
            n_runs: p.n_runs,
            bound_residual: p.bound_residual().ok(),
            per_state: PerState {
                H: s(StateLabel::H),
                V: s(StateLabel::V),
                D: s(StateLabel::D),
                A: s(StateLabel::A),
                R: s(StateLabel::R),
                L: s(StateLabel::L),
            },
        }
    }
}

pub fn points_to_json(points: &[ReducedPoint]) -> Result<String> {
    let reports: Vec<PointReport> = points.iter().map(PointReport::from).collect();
    Ok(serde_json::to_string_pretty(&reports)?)
}

/// Flat `phi_deg,g_avg,f_avg,g_std,f_std` table for plotting.
pub fn points_to_csv(points: &[ReducedPoint]) -> String {
    let mut out = String::from(FLAT_CSV_HEADER);
    out.push('\n');
    for p in points {
        let phi = p.phi_deg.map(|x| x.to_string()).unwrap_or_default();
        writeln!(out, "{phi},{},{},{},{}", p.g_avg, p.f_avg, p.g_std, p.f_std).unwrap();
    }
    out
}
