//! Core domain types: the driven two-level system, uniform time grids, and
//! density-matrix states/trajectories.
//!
//! The density matrix of a resonantly driven two-level system is stored as
//! four real numbers (both occupations plus the real and imaginary parts of
//! the rotating-frame coherence), exploiting Hermiticity. All types are
//! immutable values after construction.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Physical parameters of the driven two-level system, in atomic units
/// (hbar = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelSystem {
    /// Dipole matrix element coupling the two levels.
    pub mu: f64,
    /// Population relaxation rate of the upper level.
    pub gamma1: f64,
    /// Dephasing rate of the coherence.
    pub gamma2: f64,
    /// Carrier frequency, equal to the level splitting at resonance.
    pub omega: f64,
}

impl TwoLevelSystem {
    pub fn new(mu: f64, gamma1: f64, gamma2: f64, omega: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParameter("mu must be finite and positive"));
        }
        if !(gamma1.is_finite() && gamma1 >= 0.0) {
            return Err(Error::InvalidParameter("gamma1 must be finite and non-negative"));
        }
        if !(gamma2.is_finite() && gamma2 >= 0.0) {
            return Err(Error::InvalidParameter("gamma2 must be finite and non-negative"));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter("omega must be finite and positive"));
        }
        Ok(Self { mu, gamma1, gamma2, omega })
    }

    /// Lossless system: no relaxation, no dephasing.
    pub fn lossless(mu: f64, omega: f64) -> Result<Self> {
        Self::new(mu, 0.0, 0.0, omega)
    }
}

/// Uniform time grid on `[t0, t1]` with `n >= 2` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    n: usize,
}

/// Build a uniform grid; node `i` sits at `t0 + i * dt`.
pub fn make_grid(t0: f64, t1: f64, n: usize) -> Result<TimeGrid> {
    TimeGrid::new(t0, t1, n)
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidParameter("grid bounds must be finite"));
        }
        if t1 <= t0 {
            return Err(Error::InvalidParameter("grid requires t1 > t0"));
        }
        if n < 2 {
            return Err(Error::InvalidParameter("grid requires n >= 2"));
        }
        Ok(Self { t0, t1, n })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing, strictly positive.
    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.n - 1) as f64
    }

    /// Time of node `i`. The last node is pinned to `t1` exactly so that
    /// accumulated rounding never moves the grid endpoint.
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        if i == self.n - 1 {
            self.t1
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Midpoint of the grid interval.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t0 + self.t1)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 && t <= self.t1
    }

    /// Trapezoidal quadrature weight of node `i` (dt at interior nodes,
    /// dt/2 at the two ends).
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }
}

/// Reduced density matrix of the two-level system in the rotating frame:
/// both occupations plus the complex coherence split into real parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub rho11: f64,
    pub rho22: f64,
    pub re12: f64,
    pub im12: f64,
}

/// The system starts in its ground state: rho11 = 1, everything else zero.
pub fn ground_state() -> BlochState {
    BlochState { rho11: 1.0, rho22: 0.0, re12: 0.0, im12: 0.0 }
}

impl BlochState {
    pub fn new(rho11: f64, rho22: f64, re12: f64, im12: f64) -> Self {
        Self { rho11, rho22, re12, im12 }
    }

    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho22
    }

    /// tr(rho^2) for the reconstructed 2x2 matrix.
    pub fn purity(&self) -> f64 {
        self.rho11 * self.rho11
            + self.rho22 * self.rho22
            + 2.0 * (self.re12 * self.re12 + self.im12 * self.im12)
    }

    /// |rho12|^2 of the coherence.
    pub fn coherence_sq(&self) -> f64 {
        self.re12 * self.re12 + self.im12 * self.im12
    }

    /// Smaller eigenvalue of the reconstructed 2x2 density matrix. Positivity
    /// of the state means this is non-negative (up to integrator tolerance).
    pub fn min_eigenvalue(&self) -> f64 {
        let diff = self.rho11 - self.rho22;
        let disc = libm::sqrt(diff * diff + 4.0 * self.coherence_sq());
        0.5 * (self.trace() - disc)
    }

    pub fn is_finite(&self) -> bool {
        self.rho11.is_finite()
            && self.rho22.is_finite()
            && self.re12.is_finite()
            && self.im12.is_finite()
    }
}

/// Time series of Bloch states, one per node of its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochTrajectory {
    pub grid: TimeGrid,
    pub states: Vec<BlochState>,
}

impl BlochTrajectory {
    pub fn new(grid: TimeGrid, states: Vec<BlochState>) -> Result<Self> {
        if states.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, states })
    }

    pub fn rho22(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.rho22).collect()
    }

    /// Largest trace deviation |rho11 + rho22 - 1| along the trajectory.
    pub fn trace_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| libm::fabs(s.trace() - 1.0))
            .fold(0.0, f64::max)
    }

    /// Upper-level occupation linearly interpolated at an arbitrary time
    /// inside the grid.
    pub fn rho22_at(&self, t: f64) -> Result<f64> {
        if !self.grid.contains(t) {
            return Err(Error::InvalidParameter("time outside trajectory grid"));
        }
        let dt = self.grid.dt();
        let pos = (t - self.grid.t0()) / dt;
        let i = (libm::floor(pos) as usize).min(self.grid.len() - 2);
        let frac = (t - self.grid.node(i)) / dt;
        Ok(self.states[i].rho22 * (1.0 - frac) + self.states[i + 1].rho22 * frac)
    }
}
