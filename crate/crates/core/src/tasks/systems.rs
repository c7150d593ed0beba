//! The six benchmark dynamical systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::solvers::{dopri45_solve, DopriConfig};
use crate::tasks::Trajectory;

pub const DEFAULT_SAMPLES: usize = 1000;
/// Relative tolerance of ground-truth integration.
pub const GROUND_TRUTH_RTOL: f64 = 1e-9;
pub const GROUND_TRUTH_ATOL: f64 = 1e-12;
/// Trajectories leaving this box are reported as blow-ups.
const BOUNDED_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeSystem {
    Sinusoid,
    Spiral,
    Duffing,
    PeriodicLv,
    AsymptoticLv,
    NonlinearLv,
}

/// Periodic Lotka-Volterra coefficients.
pub const PERIODIC_LV: (f64, f64, f64, f64) = (1.5, 1.0, 3.0, 1.0);
pub const ASYMPTOTIC_LV_D: f64 = 2.0;
pub const NONLINEAR_LV_A: f64 = 0.33;
pub const SPIRAL_A: [[f64; 2]; 2] = [[-0.1, 3.0], [-3.0, -0.1]];

impl OdeSystem {
    pub const ALL: [OdeSystem; 6] = [
        OdeSystem::Sinusoid,
        OdeSystem::Spiral,
        OdeSystem::Duffing,
        OdeSystem::PeriodicLv,
        OdeSystem::AsymptoticLv,
        OdeSystem::NonlinearLv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OdeSystem::Sinusoid => "sinusoid",
            OdeSystem::Spiral => "spiral",
            OdeSystem::Duffing => "duffing",
            OdeSystem::PeriodicLv => "periodic_lv",
            OdeSystem::AsymptoticLv => "asymptotic_lv",
            OdeSystem::NonlinearLv => "nonlinear_lv",
        }
    }

    pub fn dimension(self) -> usize {
        2
    }

    pub fn default_initial_state(self) -> Vec<f64> {
        match self {
            OdeSystem::Sinusoid | OdeSystem::Spiral => vec![2.0, 0.0],
            OdeSystem::Duffing => vec![0.5, 0.0],
            OdeSystem::PeriodicLv => vec![1.0, 1.0],
            // (0.5, 0.5) is the equilibrium of this system
            OdeSystem::AsymptoticLv => vec![1.0, 1.0],
            OdeSystem::NonlinearLv => vec![0.5, 0.5],
        }
    }

    pub fn default_horizon(self) -> f64 {
        match self {
            OdeSystem::Sinusoid | OdeSystem::Spiral | OdeSystem::PeriodicLv => 10.0,
            OdeSystem::Duffing => 20.0,
            OdeSystem::AsymptoticLv | OdeSystem::NonlinearLv => 15.0,
        }
    }

    /// Training iterations allotted to the system.
    pub fn iteration_budget(self) -> usize {
        match self {
            OdeSystem::Sinusoid | OdeSystem::Spiral => 1000,
            OdeSystem::Duffing | OdeSystem::PeriodicLv => 2000,
            OdeSystem::AsymptoticLv | OdeSystem::NonlinearLv => 4000,
        }
    }

    pub fn derivative(self, s: &[f64]) -> [f64; 2] {
        let (x, y) = (s[0], s[1]);
        match self {
            OdeSystem::Sinusoid => {
                let r = (x * x + y * y).sqrt();
                [x * (1.0 - r) - y, x + y * (1.0 - r)]
            }
            OdeSystem::Spiral => {
                let a = SPIRAL_A;
                [a[0][0] * x + a[0][1] * y, a[1][0] * x + a[1][1] * y]
            }
            OdeSystem::Duffing => [y, x - x * x * x],
            OdeSystem::PeriodicLv => {
                let (a, b, c, d) = PERIODIC_LV;
                [a * x - b * x * y, -c * y + d * x * y]
            }
            OdeSystem::AsymptoticLv => [x * (1.0 - x) - x * y, -y + ASYMPTOTIC_LV_D * x * y],
            OdeSystem::NonlinearLv => [
                x * (1.0 - x) - NONLINEAR_LV_A * x * y,
                y * (1.0 - y) + x * y,
            ],
        }
    }

    /// Named coefficients, for manifests and reports.
    pub fn parameters(self) -> Vec<(&'static str, f64)> {
        match self {
            OdeSystem::Sinusoid | OdeSystem::Duffing => Vec::new(),
            OdeSystem::Spiral => vec![
                ("a11", SPIRAL_A[0][0]),
                ("a12", SPIRAL_A[0][1]),
                ("a21", SPIRAL_A[1][0]),
                ("a22", SPIRAL_A[1][1]),
            ],
            OdeSystem::PeriodicLv => {
                let (a, b, c, d) = PERIODIC_LV;
                vec![("a", a), ("b", b), ("c", c), ("d", d)]
            }
            OdeSystem::AsymptoticLv => vec![("d", ASYMPTOTIC_LV_D)],
            OdeSystem::NonlinearLv => vec![("a", NONLINEAR_LV_A)],
        }
    }
}

impl std::fmt::Display for OdeSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OdeSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        OdeSystem::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = OdeSystem::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidArgument(format!(
                    "unknown system `{s}`; valid systems: {}",
                    names.join(", ")
                ))
            })
    }
}

/// Integrates `system` from `x0` over `[0, horizon]` and samples `samples`
/// equally spaced points (both ends included).
pub fn generate(system: OdeSystem, x0: &[f64], horizon: f64, samples: usize) -> Result<Trajectory> {
    generate_with(system, x0, horizon, samples, GROUND_TRUTH_RTOL)
}

pub fn generate_with(
    system: OdeSystem,
    x0: &[f64],
    horizon: f64,
    samples: usize,
    rtol: f64,
) -> Result<Trajectory> {
    crate::error::check_len("initial state", system.dimension(), x0.len())?;
    if !(horizon > 0.0) || samples < 2 {
        return Err(Error::InvalidArgument(
            "need horizon > 0 and at least 2 samples".into(),
        ));
    }
    let times: Vec<f64> = (0..samples)
        .map(|i| horizon * i as f64 / (samples - 1) as f64)
        .collect();
    let cfg = DopriConfig {
        rtol,
        atol: GROUND_TRUTH_ATOL.min(rtol * 1e-3),
        max_steps: 1_000_000,
        initial_step: None,
    };
    let sol = dopri45_solve(
        |_, y| Ok(system.derivative(y).to_vec()),
        x0,
        (0.0, horizon),
        &times,
        &cfg,
    )?;
    let mut data = Vec::with_capacity(samples * 2);
    for (_, y) in &sol.samples {
        if y.iter().any(|v| !v.is_finite() || v.abs() > BOUNDED_LIMIT) {
            return Err(Error::InvalidArgument(format!(
                "{system} trajectory is unbounded"
            )));
        }
        data.extend_from_slice(y);
    }
    Trajectory::new(
        times,
        Matrix::from_vec(samples, system.dimension(), data)?,
        None,
    )
}

/// Ground truth with the system's default initial state and horizon.
pub fn generate_default(system: OdeSystem) -> Result<Trajectory> {
    generate(
        system,
        &system.default_initial_state(),
        system.default_horizon(),
        DEFAULT_SAMPLES,
    )
}
