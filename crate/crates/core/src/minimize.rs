//! Rotationally symmetric energy minimisation between annuli.
//!
//! For `h(ρe^{iθ}) = H(ρ) e^{iθ}` the energy is
//! `E[H] = 2π ∫_r^R (H′² + H²/ρ²) ρ dρ`. Minimising over `H ≥ 1` with the
//! outer radius pinned and the inner end free is a 1-D obstacle problem.

use serde::{Deserialize, Serialize};

use crate::geometry::{nitsche_target, DomainSpec, Lattice};
use crate::grid::MapGrid;
use crate::{Error, Result, C64};

use std::f64::consts::PI;

/// Target radii `H_i` at uniform nodes `ρ_i` on `[r, R]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub rho: Vec<f64>,
    pub h: Vec<f64>,
    /// Nodes where the obstacle `H ≥ 1` is active.
    pub coincident: Vec<bool>,
}

impl RadialProfile {
    /// Samples `h` at `n` uniform nodes; coincidence means `H(ρ) = 1`.
    pub fn from_fn(r: f64, big_r: f64, n: usize, h: impl Fn(f64) -> f64) -> Self {
        let rho = uniform_nodes(r, big_r, n);
        let h: Vec<f64> = rho.iter().map(|&p| h(p)).collect();
        let coincident = h.iter().map(|&v| v <= 1.0).collect();
        RadialProfile { rho, h, coincident }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.rho[1] - self.rho[0]
    }

    /// `[first, last]` coincident node, if any.
    pub fn coincidence_interval(&self) -> Option<(f64, f64)> {
        let first = self.coincident.iter().position(|&c| c)?;
        let last = self.coincident.iter().rposition(|&c| c)?;
        Some((self.rho[first], self.rho[last]))
    }

    pub fn is_monotone(&self) -> bool {
        self.h.windows(2).all(|w| w[1] >= w[0] - 1e-14)
    }

    /// Discrete `−[(ρH′)′ − H/ρ]` at every node but the pinned outer one;
    /// the inner node carries the natural boundary condition.
    pub fn el_residual(&self) -> Vec<f64> {
        let (a, _) = assemble(&self.rho);
        let n = self.len();
        let d = self.spacing();
        (0..n - 1)
            .map(|i| {
                let mut g = a.diag[i] * self.h[i] + a.upper[i] * self.h[i + 1];
                if i > 0 {
                    g += a.lower[i] * self.h[i - 1];
                }
                let w = if i == 0 { 0.5 * d } else { d };
                g / (2.0 * w)
            })
            .collect()
    }

    /// `max |H′(ρ) − H′(centre)|` over `|ρ − centre| ≤ delta`, with one-sided
    /// differences of the profile.
    pub fn derivative_modulus(&self, centre: f64, delta: f64) -> f64 {
        let d = self.spacing();
        let slope = |i: usize| (self.h[i + 1] - self.h[i]) / d;
        let mid = |i: usize| 0.5 * (self.rho[i] + self.rho[i + 1]);
        let n = self.len() - 1;
        let k0 = (0..n).min_by(|&a, &b| (mid(a) - centre).abs().total_cmp(&(mid(b) - centre).abs())).unwrap_or(0);
        (0..n).filter(|&i| (mid(i) - centre).abs() <= delta).map(|i| (slope(i) - slope(k0)).abs()).fold(0.0, f64::max)
    }
}

fn uniform_nodes(r: f64, big_r: f64, n: usize) -> Vec<f64> {
    let d = (big_r - r) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { big_r } else { r + i as f64 * d }).collect()
}

/// Tridiagonal matrix of the quadratic form `E/(2π)`, rows for every node.
struct Tridiagonal {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

/// `E/(2π) = Hᵀ A H / 2` with `A` from midpoint conductances `ρ_{i±½}/Δ`
/// and trapezoid weights `w_i` on the `H²/ρ` term. Also returns `w`.
fn assemble(rho: &[f64]) -> (Tridiagonal, Vec<f64>) {
    let n = rho.len();
    let d = rho[1] - rho[0];
    let mut a = Tridiagonal { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] };
    let mut w = vec![d; n];
    w[0] = 0.5 * d;
    w[n - 1] = 0.5 * d;
    for i in 0..n {
        a.diag[i] = 2.0 * w[i] / rho[i];
    }
    for i in 0..n - 1 {
        let c = 2.0 * 0.5 * (rho[i] + rho[i + 1]) / d;
        a.diag[i] += c;
        a.diag[i + 1] += c;
        a.upper[i] = -c;
        a.lower[i + 1] = -c;
    }
    (a, w)
}

/// `2π [Σ ρ_{i+½} (H_{i+1} − H_i)²/Δ + Σ w_i H_i²/ρ_i]`.
pub fn radial_energy(profile: &RadialProfile) -> f64 {
    let rho = &profile.rho;
    let h = &profile.h;
    let d = profile.spacing();
    let n = rho.len();
    let grad: f64 = (0..n - 1).map(|i| 0.5 * (rho[i] + rho[i + 1]) * (h[i + 1] - h[i]).powi(2) / d).sum();
    let zeroth: f64 = (0..n)
        .map(|i| {
            let w = if i == 0 || i + 1 == n { 0.5 * d } else { d };
            w * h[i] * h[i] / rho[i]
        })
        .sum();
    2.0 * PI * (grad + zeroth)
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    /// Pinned outer target radius; defaults to `½(R + 1/R)`.
    pub sigma: Option<f64>,
    /// Start the SOR sweeps from an active-set solve instead of a cold start.
    pub warm_start: bool,
    pub omega: f64,
    pub max_sweeps: usize,
    pub tolerance: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { sigma: None, warm_start: true, omega: 1.8, max_sweeps: 2_000_000, tolerance: 1e-12 }
    }
}

/// Solver output with the profile.
#[derive(Debug, Clone)]
pub struct Minimizer {
    pub profile: RadialProfile,
    pub sigma: f64,
    pub sweeps: usize,
    pub active_set_iterations: usize,
    pub last_update: f64,
}

/// Discrete obstacle problem `min E[H]`, `H ≥ 1`, `H(R) = ½(R + 1/R)`.
pub fn minimize_radial(r: f64, big_r: f64, n: usize) -> Result<RadialProfile> {
    Ok(minimize_radial_with(r, big_r, n, MinimizeOptions::default())?.profile)
}

pub fn minimize_radial_with(r: f64, big_r: f64, n: usize, opts: MinimizeOptions) -> Result<Minimizer> {
    if !(r > 0.0 && r < 1.0 && big_r > 1.0) {
        return Err(Error::Parameter(format!("need 0 < r < 1 < R, got r={r}, R={big_r}")));
    }
    if n < 100 {
        return Err(Error::Parameter(format!("need at least 100 nodes, got {n}")));
    }
    let sigma = match opts.sigma {
        Some(s) if s > 1.0 => s,
        Some(s) => return Err(Error::Parameter(format!("target outer radius {s} must exceed 1"))),
        None => nitsche_target(big_r)?,
    };
    if !(opts.omega > 0.0 && opts.omega < 2.0) {
        return Err(Error::Parameter("SOR factor must lie in (0, 2)".into()));
    }
    let rho = uniform_nodes(r, big_r, n);
    let (a, _) = assemble(&rho);
    let m = n - 1;
    // Free unknowns H_0..H_{n-2}; H_{n-1} = σ moves to the right-hand side.
    let mut b = vec![0.0; m];
    b[m - 1] = -a.upper[m - 1] * sigma;

    let mut x: Vec<f64> = rho[..m].iter().map(|&p| (1.0 + (sigma - 1.0) * (p - r) / (big_r - r)).max(1.0)).collect();
    let mut pdas_iters = 0;
    if opts.warm_start {
        let (sol, it) = active_set(&a, &b, &x)?;
        x = sol;
        pdas_iters = it;
    }

    let mut sweeps = 0;
    let mut last = f64::INFINITY;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut max_update = 0.0f64;
        for i in 0..m {
            let mut s = b[i] - a.upper[i] * if i + 1 < m { x[i + 1] } else { 0.0 };
            if i > 0 {
                s -= a.lower[i] * x[i - 1];
            }
            let gs = s / a.diag[i];
            let new = ((1.0 - opts.omega) * x[i] + opts.omega * gs).max(1.0);
            max_update = max_update.max((new - x[i]).abs());
            x[i] = new;
        }
        last = max_update;
        if max_update < opts.tolerance {
            break;
        }
    }
    if last >= opts.tolerance {
        return Err(Error::NotConverged { what: "projected SOR".into(), residual: last });
    }
    let mut h = x;
    h.push(sigma);
    let coincident = h.iter().enumerate().map(|(i, &v)| i + 1 < n && v <= 1.0).collect();
    Ok(Minimizer {
        profile: RadialProfile { rho, h, coincident },
        sigma,
        sweeps,
        active_set_iterations: pdas_iters,
        last_update: last,
    })
}

/// Primal-dual active-set iteration for `A x = b + λ`, `x ≥ 1`, `λ ≥ 0`,
/// `λ (x − 1) = 0` on the free unknowns. Finite for M-matrices.
fn active_set(a: &Tridiagonal, b: &[f64], x0: &[f64]) -> Result<(Vec<f64>, usize)> {
    let m = b.len();
    let c = a.diag.iter().take(m).fold(0.0, |s: f64, d| s.max(*d));
    let mut x = x0.to_vec();
    let mut lambda = vec![0.0; m];
    let mut active: Vec<bool> = vec![false; m];
    for it in 1..=m + 10 {
        let next: Vec<bool> = (0..m).map(|i| lambda[i] + c * (1.0 - x[i]) > 0.0).collect();
        if it > 1 && next == active {
            return Ok((x, it - 1));
        }
        active = next;
        // Rows for active nodes become x_i = 1.
        let mut lo = vec![0.0; m];
        let mut di = vec![0.0; m];
        let mut up = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            if active[i] {
                di[i] = 1.0;
                rhs[i] = 1.0;
            } else {
                lo[i] = if i > 0 { a.lower[i] } else { 0.0 };
                di[i] = a.diag[i];
                up[i] = if i + 1 < m { a.upper[i] } else { 0.0 };
                rhs[i] = b[i];
            }
        }
        x = thomas(&lo, &di, &up, &rhs);
        for i in 0..m {
            lambda[i] = if active[i] {
                let mut ax = a.diag[i] * x[i];
                if i > 0 {
                    ax += a.lower[i] * x[i - 1];
                }
                if i + 1 < m {
                    ax += a.upper[i] * x[i + 1];
                }
                ax - b[i]
            } else {
                0.0
            };
        }
    }
    Err(Error::NotConverged { what: "active-set obstacle solve".into(), residual: f64::NAN })
}

fn thomas(lo: &[f64], di: &[f64], up: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = di.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = up[0] / di[0];
    d[0] = rhs[0] / di[0];
    for i in 1..m {
        let den = di[i] - lo[i] * c[i - 1];
        c[i] = up[i] / den;
        d[i] = (rhs[i] - lo[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// `h(ρe^{iθ}) = H(ρ)e^{iθ}` on a polar lattice of the annulus whose rings
/// sit midway between profile nodes, `H` interpolated linearly.
pub fn lift_to_map(profile: &RadialProfile, n_theta: usize) -> Result<MapGrid> {
    let n = profile.len();
    let domain = DomainSpec::annulus(profile.rho[0], profile.rho[n - 1])?;
    let lattice = Lattice::polar(n - 1, n_theta)?;
    let layout = lattice.layout(&domain)?;
    let (n1, n2) = layout.dims();
    let mut values = Vec::with_capacity(layout.len());
    for i in 0..n1 {
        let hm = 0.5 * (profile.h[i] + profile.h[i + 1]);
        for j in 0..n2 {
            values.push(C64::from_polar(hm, layout.theta(j)));
        }
    }
    MapGrid::new(domain, lattice, values, None)
}

/// `σ ≥ ½(R + 1/R)` for the radius ratio `R` of the domain annulus.
pub fn nitsche_admissible(ratio: f64, sigma: f64) -> Result<bool> {
    if !(ratio > 1.0) || !(sigma > 1.0) {
        return Err(Error::Parameter(format!("need ratio > 1 and sigma > 1, got {ratio}, {sigma}")));
    }
    Ok(sigma >= 0.5 * (ratio + 1.0 / ratio))
}

/// `max(1, ½(ρ + 1/ρ))`.
pub fn nitsche_profile(rho: f64) -> f64 {
    if rho <= 1.0 {
        1.0
    } else {
        0.5 * (rho + 1.0 / rho)
    }
}
