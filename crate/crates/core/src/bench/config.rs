use std::path::Path;

use serde::{Deserialize, Serialize};

use super::jones::waveplate_settings;
use crate::error::{Error, Result};
use crate::qcore::Qubit1;

/// Element settings and imperfections of the apparatus. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    /// HWP of the preparation stage.
    pub theta1: f64,
    /// QWP of the preparation stage.
    pub theta2: f64,
    /// VBS half-wave plate angle φ.
    pub phi: f64,
    /// Phase of path 1 relative to path 0.
    pub mz_phase: f64,
    pub visibility: f64,
    /// Relative efficiencies of `D0(ψ), D0(ψ⊥), D1(ψ), D1(ψ⊥)`.
    pub eta: [f64; 4],
    /// Per-shot dark-click probability of each detector.
    pub dark_rate: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self::ideal(std::f64::consts::FRAC_PI_8)
    }
}

impl BenchConfig {
    /// Perfect interferometer and detectors, preparing `|V⟩`.
    pub fn ideal(phi: f64) -> Self {
        Self { theta1: 0.0, theta2: 0.0, phi, mz_phase: 0.0, visibility: 1.0, eta: [1.0; 4], dark_rate: 0.0 }
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    /// Same settings with the preparation waveplates set to produce `psi`.
    pub fn prepared_for(mut self, psi: &Qubit1) -> Self {
        let (t1, t2) = waveplate_settings(psi);
        self.theta1 = t1;
        self.theta2 = t2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for (name, v) in [
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("phi", self.phi),
            ("mz_phase", self.mz_phase),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} is not finite"));
            }
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return bad(format!("visibility {} outside [0, 1]", self.visibility));
        }
        for (i, e) in self.eta.iter().enumerate() {
            if !(*e > 0.0 && *e <= 1.0) {
                return bad(format!("eta{i} = {e} outside (0, 1]"));
            }
        }
        // At most one click per shot: four dark channels share the no-photon slot.
        if !(0.0..=0.25).contains(&self.dark_rate) {
            return bad(format!("dark_rate {} outside [0, 0.25]", self.dark_rate));
        }
        Ok(())
    }

    /// Parses the flat `key = value` document (angles in degrees).
    pub fn from_document(text: &str) -> Result<Self> {
        let doc: ConfigDocument = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = doc.into_config();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_document(&self) -> String {
        toml::to_string(&ConfigDocument::from_config(self)).expect("flat numeric document")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_document(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigDocument {
    theta1_deg: f64,
    theta2_deg: f64,
    phi_deg: f64,
    mz_phase_deg: f64,
    visibility: f64,
    eta0: f64,
    eta1: f64,
    eta2: f64,
    eta3: f64,
    dark_rate: f64,
}

impl Default for ConfigDocument {
    fn default() -> Self {
        Self::from_config(&BenchConfig::default())
    }
}

impl ConfigDocument {
    fn from_config(c: &BenchConfig) -> Self {
        Self {
            theta1_deg: c.theta1.to_degrees(),
            theta2_deg: c.theta2.to_degrees(),
            phi_deg: c.phi.to_degrees(),
            mz_phase_deg: c.mz_phase.to_degrees(),
            visibility: c.visibility,
            eta0: c.eta[0],
            eta1: c.eta[1],
            eta2: c.eta[2],
            eta3: c.eta[3],
            dark_rate: c.dark_rate,
        }
    }

    fn into_config(self) -> BenchConfig {
        BenchConfig {
            theta1: self.theta1_deg.to_radians(),
            theta2: self.theta2_deg.to_radians(),
            phi: self.phi_deg.to_radians(),
            mz_phase: self.mz_phase_deg.to_radians(),
            visibility: self.visibility,
            eta: [self.eta0, self.eta1, self.eta2, self.eta3],
            dark_rate: self.dark_rate,
        }
    }
}
