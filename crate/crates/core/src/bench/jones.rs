//! 2×2 Jones matrices in the `(H, V)` basis.
//!
//! Waveplate angles are measured from the vertical axis. Matrix phases are
//! fixed exactly as written below; only detection probabilities are expected
//! to be convention independent.

use std::ops::Mul;

use num_complex::Complex64;

use crate::qcore::{Amplitude, Qubit1};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jones(pub [[Amplitude; 2]; 2]);

impl Jones {
    pub fn identity() -> Self {
        Self::real([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn real(m: [[f64; 2]; 2]) -> Self {
        Jones(m.map(|row| row.map(|x| Complex64::new(x, 0.0))))
    }

    /// Counter-clockwise rotation by `angle`.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::real([[c, -s], [s, c]])
    }

    pub fn dagger(&self) -> Self {
        let m = self.0;
        Jones([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn apply(&self, v: [Amplitude; 2]) -> [Amplitude; 2] {
        let m = self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn det(&self) -> Amplitude {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn max_abs_diff(&self, other: &Jones) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }

    /// Distance from `other` after removing the best global phase.
    pub fn phase_insensitive_diff(&self, other: &Jones) -> f64 {
        let mut overlap = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                overlap += other.0[i][j].conj() * self.0[i][j];
            }
        }
        if overlap.norm() == 0.0 {
            return self.max_abs_diff(other);
        }
        let phase = overlap / overlap.norm();
        let rotated = Jones(other.0.map(|row| row.map(|x| x * phase)));
        self.max_abs_diff(&rotated)
    }
}

impl Mul for Jones {
    type Output = Jones;

    fn mul(self, rhs: Jones) -> Jones {
        let (a, b) = (self.0, rhs.0);
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Jones(m)
    }
}

/// Half-wave plate: `[[−cos 2θ, sin 2θ], [sin 2θ, cos 2θ]]`.
pub fn hwp_jones(theta: f64) -> Jones {
    let (s, c) = (2.0 * theta).sin_cos();
    Jones::real([[-c, s], [s, c]])
}

/// Quarter-wave plate `R(−θ)·diag(i, 1)·R(θ)`, built so that two quarter
/// waves at the same angle give exactly [`hwp_jones`].
pub fn qwp_jones(theta: f64) -> Jones {
    let retarder = Jones([[Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)], [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ]]);
    Jones::rotation(-theta) * retarder * Jones::rotation(theta)
}

/// Output of a HWP at `theta1` followed by a QWP at `theta2`, acting on `|V⟩`.
pub fn prepare_state(theta1: f64, theta2: f64) -> Qubit1 {
    let v = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let out = (qwp_jones(theta2) * hwp_jones(theta1)).apply(v);
    Qubit1::normalized(out[0], out[1]).expect("waveplates are unitary")
}

/// Inverse of the preparation: a QWP at `theta2 + π/2` followed by a HWP at
/// `theta1`. Maps the prepared state back to `|V⟩` up to a global phase.
pub fn inverse_preparation(theta1: f64, theta2: f64) -> Jones {
    hwp_jones(theta1) * qwp_jones(theta2 + std::f64::consts::FRAC_PI_2)
}

/// Waveplate angles `(θ1, θ2)` with `prepare_state(θ1, θ2) ∝ psi`.
///
/// The QWP angle is chosen so that undoing it leaves a linear polarization;
/// the residual ellipticity is a pure sinusoid `A cos 2θ + B sin 2θ` in the
/// QWP angle, so its root is found from two evaluations.
pub fn waveplate_settings(psi: &Qubit1) -> (f64, f64) {
    let ellipticity = |theta2: f64| {
        let undone = qwp_jones(theta2).dagger().apply(psi.amps());
        (undone[0].conj() * undone[1]).im
    };
    let a = ellipticity(0.0);
    let b = ellipticity(std::f64::consts::FRAC_PI_4);
    let theta2 = if a.abs() + b.abs() < 1e-15 { 0.0 } else { (-a).atan2(b) / 2.0 };

    let linear = qwp_jones(theta2).dagger().apply(psi.amps());
    let lead = if linear[0].norm() >= linear[1].norm() { linear[0] } else { linear[1] };
    let phase = lead.conj() / lead.norm();
    let (h, v) = ((linear[0] * phase).re, (linear[1] * phase).re);
    // HWP(θ1)|V⟩ = (sin 2θ1, cos 2θ1)
    let theta1 = h.atan2(v) / 2.0;
    (theta1, theta2)
}
