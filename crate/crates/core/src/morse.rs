//! Morse-oscillator bound states and the dipole matrix element that feeds the
//! two-level coupling constant.
//!
//! The radial Schroedinger operator `-(1/2m) d^2/dr^2 + V(r)` is discretized
//! with second-order central differences and Dirichlet walls; eigenvalues come
//! from Sturm-sequence bisection and eigenvectors from inverse iteration with
//! a pivoted tridiagonal solve. The Morse potential has an exact closed-form
//! spectrum and generalized-Laguerre eigenfunctions, which the tests use as
//! independent oracles.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Morse potential `V(r) = D0 (e^{-beta (r - r*)} - 1)^2 - D0` with a dipole
/// function `mu0 r e^{-r/r0}`, in atomic units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseModel {
    pub d0: f64,
    pub beta: f64,
    pub r_star: f64,
    pub mu0: f64,
    pub r0: f64,
    pub mass: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
}

/// Default well depth (a.u.).
pub const D0: f64 = 0.1994;
/// Default range parameter (1/a.u.).
pub const BETA: f64 = 1.189;
/// Default equilibrium position (a.u.).
pub const R_STAR: f64 = 1.821;
/// Default dipole prefactor.
pub const MU0: f64 = 3.088;
/// Default dipole decay length (a.u.).
pub const R0: f64 = 0.6;

impl MorseModel {
    /// Standard well and dipole parameters on the default radial grid
    /// `[0.5, 12.0]` with 4096 interior points. The reduced mass has no
    /// default and must be supplied.
    pub fn new(mass: f64) -> Result<Self> {
        Self::with_grid(mass, 0.5, 12.0, 4096)
    }

    pub fn with_grid(mass: f64, r_min: f64, r_max: f64, n_r: usize) -> Result<Self> {
        let model = Self {
            d0: D0,
            beta: BETA,
            r_star: R_STAR,
            mu0: MU0,
            r0: R0,
            mass,
            r_min,
            r_max,
            n_r,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0) {
            return Err(Error::InvalidParameter("d0 must be > 0"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParameter("beta must be > 0"));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidParameter("mass must be positive and finite"));
        }
        if !(self.r0 > 0.0) {
            return Err(Error::InvalidParameter("r0 must be > 0"));
        }
        if !(self.r_max > self.r_min) {
            return Err(Error::InvalidParameter("r_max must exceed r_min"));
        }
        if self.n_r < 64 {
            return Err(Error::InvalidParameter("n_r must be >= 64"));
        }
        Ok(())
    }

    /// Same model on a grid refined by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self { n_r: self.n_r * factor, ..*self }
    }

    pub fn potential(&self, r: f64) -> f64 {
        let e = libm::exp(-self.beta * (r - self.r_star)) - 1.0;
        self.d0 * e * e - self.d0
    }

    pub fn dipole(&self, r: f64) -> f64 {
        self.mu0 * r * libm::exp(-r / self.r0)
    }

    /// Harmonic frequency `omega0 = beta sqrt(2 D0 / mass)` of the well.
    pub fn omega0(&self) -> f64 {
        self.beta * libm::sqrt(2.0 * self.d0 / self.mass)
    }

    /// Number of bound states, `floor(sqrt(2 m D0)/beta - 1/2) + 1`.
    pub fn bound_state_count(&self) -> usize {
        let k = libm::sqrt(2.0 * self.mass * self.d0) / self.beta;
        libm::floor(k - 0.5) as usize + 1
    }

    /// Exact Morse spectrum `E_n = -D0 + omega0 (n + 1/2) - [omega0 (n + 1/2)]^2 / (4 D0)`.
    pub fn analytic_energy(&self, n: usize) -> f64 {
        let x = self.omega0() * (n as f64 + 0.5);
        -self.d0 + x - x * x / (4.0 * self.d0)
    }
}

/// Bound states on the radial grid: interior nodes only (the Dirichlet walls
/// are implicit), wavefunctions normalized to `h * sum psi^2 = 1`.
#[derive(Debug, Clone)]
pub struct Eigenstates {
    pub r: Vec<f64>,
    pub h: f64,
    pub energies: Vec<f64>,
    pub wavefunctions: Vec<Vec<f64>>,
}

/// Eigenvalue count of the tridiagonal operator strictly below `x`, by the
/// Sturm sequence of the shifted LDL^T factorization.
fn count_below(diag: &[f64], off2: f64, x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        q = if i == 0 { d - x } else { d - x - off2 / q };
        if q < 0.0 {
            count += 1;
        }
        if libm::fabs(q) < pivmin {
            q = -pivmin;
        }
    }
    count
}

/// Solve `(T - sigma I) x = b` for symmetric tridiagonal `T` with constant
/// off-diagonal `e`, by LU with partial pivoting (one superdiagonal of fill).
fn solve_shifted(diag: &[f64], e: f64, sigma: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut d: Vec<f64> = diag.iter().map(|&v| v - sigma).collect();
    let mut du = vec![e; n - 1];
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut rhs = b.to_vec();
    let pivmin = 1e-300;

    for i in 0..n - 1 {
        let sub = e;
        if libm::fabs(d[i]) >= libm::fabs(sub) {
            let piv = if d[i] == 0.0 { pivmin } else { d[i] };
            let m = sub / piv;
            d[i] = piv;
            d[i + 1] -= m * du[i];
            rhs[i + 1] -= m * rhs[i];
        } else {
            // swap rows i and i+1
            let m = d[i] / sub;
            d[i] = sub;
            let tmp = d[i + 1];
            d[i + 1] = du[i] - m * tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -m;
            }
            du[i] = tmp;
            rhs.swap(i, i + 1);
            rhs[i + 1] -= m * rhs[i];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = pivmin;
    }

    let mut x = vec![0.0; n];
    x[n - 1] = rhs[n - 1] / d[n - 1];
    if n >= 2 {
        x[n - 2] = (rhs[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (rhs[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    x
}

fn grid_dot(h: f64, a: &[f64], b: &[f64]) -> f64 {
    h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Flip the sign so the wavefunction is positive at its leftmost antinode
/// (the peak of the first lobe).
fn fix_sign(psi: &mut [f64]) {
    let max = psi.iter().fold(0.0_f64, |m, &v| m.max(libm::fabs(v)));
    let threshold = 1e-6 * max;
    for i in 0..psi.len() - 1 {
        let a = libm::fabs(psi[i]);
        if a > threshold && a >= libm::fabs(psi[i + 1]) {
            if psi[i] < 0.0 {
                for v in psi.iter_mut() {
                    *v = -*v;
                }
            }
            return;
        }
    }
}

/// Lowest `k` bound states of the model.
pub fn eigenstates(model: &MorseModel, k: usize) -> Result<Eigenstates> {
    model.validate()?;
    let bound = model.bound_state_count();
    if k > bound {
        return Err(Error::TooManyStates { requested: k, bound });
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1"));
    }

    let n = model.n_r;
    let h = (model.r_max - model.r_min) / (n + 1) as f64;
    let r: Vec<f64> = (0..n).map(|i| model.r_min + (i + 1) as f64 * h).collect();
    let kinetic = 1.0 / (model.mass * h * h);
    let diag: Vec<f64> = r.iter().map(|&ri| kinetic + model.potential(ri)).collect();
    let e = -0.5 * kinetic;
    let off2 = e * e;

    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let dmax = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = libm::fabs(dmax).max(libm::fabs(dmin)).max(2.0 * libm::fabs(e));
    let pivmin = 1e-30 * scale.max(1.0);

    let mut energies = Vec::with_capacity(k);
    for idx in 0..k {
        let mut lo = dmin - 2.0 * libm::fabs(e);
        let mut hi = dmax + 2.0 * libm::fabs(e);
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if count_below(&diag, off2, mid, pivmin) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        energies.push(0.5 * (lo + hi));
    }

    let mut wavefunctions: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (idx, &lambda) in energies.iter().enumerate() {
        // deterministic non-degenerate start vector
        let mut psi: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.3 * libm::sin((i as f64 + 1.0) * (idx as f64 + 1.7)))
            .collect();
        for _ in 0..4 {
            psi = solve_shifted(&diag, e, lambda, &psi);
            for prev in &wavefunctions {
                let c = grid_dot(h, &psi, prev);
                for (p, q) in psi.iter_mut().zip(prev) {
                    *p -= c * q;
                }
            }
            let norm = libm::sqrt(grid_dot(h, &psi, &psi));
            for p in psi.iter_mut() {
                *p /= norm;
            }
        }
        fix_sign(&mut psi);
        wavefunctions.push(psi);
    }

    Ok(Eigenstates { r, h, energies, wavefunctions })
}

impl Eigenstates {
    /// Interior sign changes of the `idx`-th wavefunction, ignoring the
    /// exponentially small tails.
    pub fn node_count(&self, idx: usize) -> usize {
        let psi = &self.wavefunctions[idx];
        let max = psi.iter().fold(0.0_f64, |m, &v| m.max(libm::fabs(v)));
        let threshold = 1e-7 * max;
        let mut nodes = 0;
        let mut last = 0.0;
        for &v in psi {
            if libm::fabs(v) < threshold {
                continue;
            }
            if last != 0.0 && v * last < 0.0 {
                nodes += 1;
            }
            last = v;
        }
        nodes
    }

    /// Overlap `<psi_a | f(r) | psi_b>` on the radial grid.
    pub fn matrix_element(&self, a: usize, b: usize, f: impl Fn(f64) -> f64) -> f64 {
        self.h
            * self
                .r
                .iter()
                .zip(&self.wavefunctions[a])
                .zip(&self.wavefunctions[b])
                .map(|((ri, pa), pb)| pa * f(*ri) * pb)
                .sum::<f64>()
    }
}

/// Dipole matrix element `<psi0 | mu0 r e^{-r/r0} | psi1>` with both signs
/// fixed by the leftmost-antinode convention. Consumers coupling it into a
/// two-level model should take the magnitude.
pub fn dipole_element(model: &MorseModel) -> Result<f64> {
    let states = eigenstates(model, 2)?;
    Ok(states.matrix_element(0, 1, |r| model.dipole(r)))
}

/// Resonant carrier frequency `omega = E1 - E0`.
pub fn carrier_frequency(model: &MorseModel) -> Result<f64> {
    let states = eigenstates(model, 2)?;
    Ok(states.energies[1] - states.energies[0])
}

/// Largest change of the lowest `k` eigenvalues under one grid doubling; a
/// coarse grid shows up as a large value here.
pub fn grid_convergence(model: &MorseModel, k: usize) -> Result<f64> {
    let coarse = eigenstates(model, k)?;
    let fine = eigenstates(&model.refined(2), k)?;
    Ok(coarse
        .energies
        .iter()
        .zip(&fine.energies)
        .map(|(a, b)| libm::fabs(a - b))
        .fold(0.0, f64::max))
}
