//! Euler-Lagrange machinery for the reduced control problem in terms of the
//! pulse area: the pendulum-type equation `2 lambda theta'' = mu^2 sin(2 theta)`
//! solved as a two-point boundary value problem by shooting, and the
//! delta-kick limit whose solution is a linear area profile (a constant
//! envelope). Solving these independently of the closed-form envelopes in
//! [`crate::pulses`] closes the loop between the variational derivation and
//! the analytic optima.

use alloc::vec::Vec;

use crate::model::{TimeGrid, TwoLevelSystem};
use crate::pulses::{constant_pulse, AreaProfile, EnergyBudget, Envelope};
use crate::{Error, Result};

use core::f64::consts::PI;

/// Boundary value problem for the area profile on a window approximating the
/// infinite control interval.
#[derive(Debug, Clone, Copy)]
pub struct VariationalProblem {
    pub sys: TwoLevelSystem,
    /// Lagrange multiplier of the energy constraint in the reduced
    /// Lagrangian; sets the soliton width through `tau = sqrt(lambda)/mu`.
    pub lambda: f64,
    pub window: TimeGrid,
    /// Boundary areas `(theta_left, theta_right)`.
    pub bc: (f64, f64),
}

impl VariationalProblem {
    pub fn new(sys: TwoLevelSystem, lambda: f64, window: TimeGrid, bc: (f64, f64)) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter("lambda must be finite and positive"));
        }
        let span = bc.1 - bc.0;
        if span < 0.0 {
            return Err(Error::InvalidParameter("bc requires theta_right >= theta_left"));
        }
        let multiple = span / PI;
        if libm::fabs(multiple - libm::round(multiple)) > 1e-9 {
            return Err(Error::InvalidParameter(
                "theta_right - theta_left must be a multiple of pi",
            ));
        }
        Ok(Self { sys, lambda, window, bc })
    }

    /// Soliton width implied by the multiplier.
    pub fn tau(&self) -> f64 {
        libm::sqrt(self.lambda) / self.sys.mu
    }

    /// Default problem: boundary areas (0, pi).
    pub fn kink(sys: TwoLevelSystem, lambda: f64, window: TimeGrid) -> Result<Self> {
        Self::new(sys, lambda, window, (0.0, PI))
    }
}

/// Multiplier fixed by the energy normalization: `lambda = 4 / (mu E0)^2`.
pub fn lambda_from_energy(sys: &TwoLevelSystem, budget: &EnergyBudget) -> f64 {
    4.0 / (sys.mu * budget.e0) / (sys.mu * budget.e0)
}

/// Pointwise residual `2 lambda theta'' - mu^2 sin(2 theta)` at the interior
/// nodes, with the second derivative by central differences. A true solution
/// leaves a residual limited only by the differencing error.
pub fn el_residual(theta: &AreaProfile, prob: &VariationalProblem) -> Result<Vec<f64>> {
    if theta.grid != prob.window {
        return Err(Error::GridMismatch);
    }
    let dt = theta.grid.dt();
    let mu2 = prob.sys.mu * prob.sys.mu;
    let th = &theta.theta;
    let mut res = Vec::with_capacity(th.len().saturating_sub(2));
    for i in 1..th.len() - 1 {
        let second = (th[i + 1] - 2.0 * th[i] + th[i - 1]) / (dt * dt);
        res.push(2.0 * prob.lambda * second - mu2 * libm::sin(2.0 * th[i]));
    }
    Ok(res)
}

/// Area profile together with the envelope `V = theta_dot / mu` it implies,
/// sampled on the same window.
#[derive(Debug, Clone)]
pub struct PendulumSolution {
    pub theta: AreaProfile,
    pub envelope: Vec<f64>,
}

/// Pendulum dynamics in first-order form: state (theta, theta_dot).
#[inline]
fn accel(prob: &VariationalProblem, theta: f64) -> f64 {
    prob.sys.mu * prob.sys.mu / (2.0 * prob.lambda) * libm::sin(2.0 * theta)
}

#[inline]
fn pendulum_rk4(prob: &VariationalProblem, h: f64, th: f64, w: f64) -> (f64, f64) {
    let (k1t, k1w) = (w, accel(prob, th));
    let (k2t, k2w) = (w + 0.5 * h * k1w, accel(prob, th + 0.5 * h * k1t));
    let (k3t, k3w) = (w + 0.5 * h * k2w, accel(prob, th + 0.5 * h * k2t));
    let (k4t, k4w) = (w + h * k3w, accel(prob, th + h * k3t));
    (
        th + h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t),
        w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
    )
}

/// Integrate from the left boundary with initial slope `v`; optionally record
/// (theta, theta_dot) at every node.
fn shoot(prob: &VariationalProblem, v: f64, record: Option<&mut (Vec<f64>, Vec<f64>)>) -> f64 {
    let grid = &prob.window;
    let dt = grid.dt();
    // keep the internal step below tau/100 for shape accuracy
    let s = libm::ceil(dt / (prob.tau() / 100.0)).max(1.0) as usize;
    let h = dt / s as f64;
    let mut th = prob.bc.0;
    let mut w = v;
    let mut rec = record;
    if let Some(r) = rec.as_deref_mut() {
        r.0.push(th);
        r.1.push(w);
    }
    for _ in 0..grid.len() - 1 {
        for _ in 0..s {
            let next = pendulum_rk4(prob, h, th, w);
            th = next.0;
            w = next.1;
        }
        if let Some(r) = rec.as_deref_mut() {
            r.0.push(th);
            r.1.push(w);
        }
    }
    th
}

/// Shift a solved profile by whole grid nodes so the symmetry point (where
/// theta crosses the mid-boundary value) lands at the window midpoint.
/// Values shifted in from outside the window are clamped to the boundary
/// areas (zero slope).
fn center(prob: &VariationalProblem, theta: &mut [f64], slope: &mut [f64]) {
    let mid_val = 0.5 * (prob.bc.0 + prob.bc.1);
    let grid = &prob.window;
    let n = grid.len();
    let mut t_cross = grid.midpoint();
    for i in 0..n - 1 {
        if (theta[i] - mid_val) * (theta[i + 1] - mid_val) <= 0.0 && theta[i] != theta[i + 1] {
            let frac = (mid_val - theta[i]) / (theta[i + 1] - theta[i]);
            t_cross = grid.node(i) + frac * grid.dt();
            break;
        }
    }
    let shift = libm::round((t_cross - grid.midpoint()) / grid.dt()) as i64;
    if shift == 0 {
        return;
    }
    let pick = |src: &[f64], i: usize, lo: f64, hi: f64| -> f64 {
        let j = i as i64 + shift;
        if j < 0 {
            lo
        } else if j >= n as i64 {
            hi
        } else {
            src[j as usize]
        }
    };
    let old_theta: Vec<f64> = theta.to_vec();
    let old_slope: Vec<f64> = slope.to_vec();
    for i in 0..n {
        theta[i] = pick(&old_theta, i, prob.bc.0, prob.bc.1);
        slope[i] = pick(&old_slope, i, 0.0, 0.0);
    }
}

/// Solve the boundary value problem by shooting on the initial slope with
/// bisection. The returned profile is recentered so the transition sits at
/// the window midpoint (the equation is autonomous, so time translates
/// freely); its slope divided by mu is the optimal envelope.
pub fn solve_pendulum_bvp(prob: &VariationalProblem) -> Result<PendulumSolution> {
    let grid = &prob.window;
    let width = grid.t1() - grid.t0();
    if width < 20.0 * prob.tau() {
        return Err(Error::InvalidParameter("window narrower than 20 tau"));
    }

    let span = prob.bc.1 - prob.bc.0;
    if span == 0.0 {
        let theta = AreaProfile { grid: *grid, theta: alloc::vec![prob.bc.0; grid.len()] };
        return Ok(PendulumSolution { theta, envelope: alloc::vec![0.0; grid.len()] });
    }

    let n_kinks = libm::round(span / PI).max(1.0);
    let mut lo = 0.0_f64;
    let mut hi = 2.0 * n_kinks * prob.sys.mu / libm::sqrt(prob.lambda);
    let target = prob.bc.1;
    let f_lo = shoot(prob, lo, None) - target;
    let f_hi = shoot(prob, hi, None) - target;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::ShootingBracket);
    }

    let mut v = 0.5 * (lo + hi);
    for _ in 0..200 {
        v = 0.5 * (lo + hi);
        let f = shoot(prob, v, None) - target;
        if libm::fabs(f) <= 1e-12 {
            break;
        }
        if f.signum() == f_lo.signum() {
            lo = v;
        } else {
            hi = v;
        }
        if hi == lo {
            break;
        }
    }

    let mut rec = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
    shoot(prob, v, Some(&mut rec));
    let (mut theta, mut slope) = rec;
    center(prob, &mut theta, &mut slope);
    let envelope = slope.iter().map(|w| w / prob.sys.mu).collect();
    Ok(PendulumSolution { theta: AreaProfile { grid: *grid, theta }, envelope })
}

/// Delta-kick control problem on `[0, t_control]` with boundary areas
/// `(0, pi/2)`. The area is globally linear, `theta(t) = (pi/2) t / t_control`,
/// so the implied envelope is the constant-amplitude pulse. The delta term is
/// handled analytically, never discretized.
pub fn solve_delta_case(
    sys: &TwoLevelSystem,
    t_control: f64,
    n: usize,
) -> Result<(AreaProfile, Envelope)> {
    if !(t_control.is_finite() && t_control > 0.0) {
        return Err(Error::InvalidParameter("t_control must be finite and positive"));
    }
    let grid = TimeGrid::new(0.0, t_control, n)?;
    let theta = (0..n).map(|i| 0.5 * PI * grid.node(i) / t_control).collect();
    let (envelope, _) = constant_pulse(sys, t_control)?;
    Ok((AreaProfile { grid, theta }, envelope))
}
