use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExplicitEuler,
    HybridEuler,
    Dopri45,
}

/// Tolerances for the adaptive Dormand-Prince integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DopriConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// `None` selects the starting step automatically.
    pub initial_step: Option<f64>,
}

impl Default for DopriConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-8,
            max_steps: 100_000,
            initial_step: None,
        }
    }
}

impl DopriConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Substeps per observation interval (E1 = 1, H6 = 6).
    pub unfoldings: usize,
    /// Observation interval; sequences may override it per step.
    pub dt: f64,
    #[serde(default)]
    pub dopri: DopriConfig,
}

impl SolverConfig {
    pub fn explicit_euler(unfoldings: usize, dt: f64) -> Self {
        Self {
            scheme: Scheme::ExplicitEuler,
            unfoldings,
            dt,
            dopri: DopriConfig::default(),
        }
    }

    pub fn hybrid_euler(unfoldings: usize, dt: f64) -> Self {
        Self {
            scheme: Scheme::HybridEuler,
            unfoldings,
            dt,
            dopri: DopriConfig::default(),
        }
    }

    pub fn dopri45(dt: f64, dopri: DopriConfig) -> Self {
        Self {
            scheme: Scheme::Dopri45,
            unfoldings: 1,
            dt,
            dopri,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.unfoldings == 0 {
            return Err(Error::InvalidArgument("unfoldings must be >= 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.dopri.rtol > 0.0 && self.dopri.atol > 0.0) {
            return Err(Error::InvalidArgument("rtol and atol must be > 0".into()));
        }
        Ok(())
    }

    /// Copy of this config with a different observation interval.
    pub fn with_dt(&self, dt: f64) -> Self {
        Self { dt, ..*self }
    }

    /// The interval to use for one observation step, honouring an optional
    /// per-step override.
    pub fn interval(&self, dt_override: Option<f64>) -> Result<f64> {
        let dt = dt_override.unwrap_or(self.dt);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step dt must be > 0, got {dt}"
            )));
        }
        Ok(dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SolverConfig::explicit_euler(1, 0.1).validate().is_ok());
        assert!(SolverConfig::explicit_euler(0, 0.1).validate().is_err());
        assert!(SolverConfig::hybrid_euler(6, 0.0).validate().is_err());
        let mut c = SolverConfig::dopri45(1.0, DopriConfig::default());
        c.dopri.atol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn serde_rejects_unknown_keys() {
        let ok = r#"{"scheme":"hybrid_euler","unfoldings":6,"dt":1.0}"#;
        let c: SolverConfig = serde_json::from_str(ok).unwrap();
        assert_eq!(c.dopri, DopriConfig::default());
        let bad = r#"{"scheme":"hybrid_euler","unfoldings":6,"dt":1.0,"bogus":1}"#;
        assert!(serde_json::from_str::<SolverConfig>(bad).is_err());
    }
}
