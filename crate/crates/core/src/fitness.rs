//! Control-fitness functionals evaluated on Bloch trajectories: the
//! integrated upper-level occupation (proportional to propagation losses,
//! minimized for self-induced transparency) and the upper-level occupation at
//! a fixed control time (maximized for population inversion).

use alloc::vec::Vec;

use crate::model::BlochTrajectory;
use crate::{Error, Result};

/// Which functional to optimize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitnessSpec {
    /// `Q22 = integral of rho22 dt` over the control interval; minimized.
    /// Losses are reported as Q22 itself (proportionality constant 1).
    IntegratedUpper,
    /// `rho22(t_control)`; maximized. `t_control` must lie inside the
    /// trajectory grid.
    TerminalUpper { t_control: f64 },
}

impl FitnessSpec {
    /// Direction of the optimization for this functional.
    pub fn is_maximization(&self) -> bool {
        matches!(self, FitnessSpec::TerminalUpper { .. })
    }
}

/// Evaluate the functional on a trajectory. `IntegratedUpper` uses
/// trapezoidal quadrature over the full grid; `TerminalUpper` interpolates
/// rho22 linearly at `t_control`.
pub fn evaluate(spec: &FitnessSpec, traj: &BlochTrajectory) -> Result<f64> {
    match spec {
        FitnessSpec::IntegratedUpper => {
            let mut acc = 0.0;
            for (i, s) in traj.states.iter().enumerate() {
                acc += traj.grid.weight(i) * s.rho22;
            }
            Ok(acc)
        }
        FitnessSpec::TerminalUpper { t_control } => {
            if !traj.grid.contains(*t_control) {
                return Err(Error::InvalidParameter("t_control outside trajectory grid"));
            }
            traj.rho22_at(*t_control)
        }
    }
}

/// Cumulative integrated occupation `integral from t0 to t of rho22`, one
/// value per node. The final element equals `evaluate(IntegratedUpper)`.
pub fn integrated_occupation_curve(traj: &BlochTrajectory) -> Vec<f64> {
    let dt = traj.grid.dt();
    let mut curve = Vec::with_capacity(traj.states.len());
    let mut acc = 0.0;
    curve.push(0.0);
    for w in traj.states.windows(2) {
        acc += 0.5 * dt * (w[0].rho22 + w[1].rho22);
        curve.push(acc);
    }
    curve
}
