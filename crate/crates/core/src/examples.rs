//! Closed-form solutions of the Hopf-Laplace equation with exact Wirtinger
//! derivatives. They serve as oracles for every numerical module.
//!
//! | map | domain | `φ = h_z · conj(h_z̄)` |
//! |-----|--------|-----------------------|
//! | piecewise linear `2z + z̄` / `z + 2z̄` | unit disk | `2` |
//! | power-log family, `p ∈ (1, 16]` | unit disk | `1` |
//! | butterfly `z − z̄ − i(z^{3/2} − z̄^{3/2})` | unit disk | `−(4 + 9z)/4` |
//! | hammering (Nitsche) map on `{r < |z| < R}` | annulus | `−1/(4z²)` |

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::DomainSpec;
use crate::{Error, Result, C64};

/// Points closer than this to a derivative discontinuity are treated as
/// lying on it.
const SINGULAR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum ExampleId {
    PiecewiseLinear,
    PowerLog { p: f64 },
    Butterfly,
    Hammering { r: f64, big_r: f64 },
}

/// A closed-form holomorphic quadratic differential `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum HopfClosedForm {
    /// `φ ≡ c`.
    Constant { c: C64 },
    /// `φ = a + b z`.
    Linear { a: C64, b: C64 },
    /// `φ = c / z²`.
    InverseSquare { c: C64 },
}

impl HopfClosedForm {
    pub fn eval(&self, z: C64) -> C64 {
        match *self {
            HopfClosedForm::Constant { c } => c,
            HopfClosedForm::Linear { a, b } => a + b * z,
            HopfClosedForm::InverseSquare { c } => c / (z * z),
        }
    }

    /// Complex derivative `φ'(z)`.
    pub fn derivative(&self, z: C64) -> C64 {
        match *self {
            HopfClosedForm::Constant { .. } => C64::new(0.0, 0.0),
            HopfClosedForm::Linear { b, .. } => b,
            HopfClosedForm::InverseSquare { c } => -2.0 * c / (z * z * z),
        }
    }
}

/// Value and both Wirtinger derivatives of a map at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: C64,
    pub dz: C64,
    pub dzbar: C64,
}

/// Closed forms printed alongside the butterfly and hammering maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrintedIdentities {
    /// `|Dh|² = 2(|h_z|² + |h_z̄|²)`.
    pub energy_density: f64,
    pub jacobian: f64,
    pub dz_sq: f64,
    pub dzbar_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleMap {
    pub id: ExampleId,
    pub domain: DomainSpec,
}

/// `√z` with `arg z ∈ [0, 2π)`, so the cut lies on the positive real axis.
fn sqrt_cut(z: C64) -> C64 {
    let (rho, theta) = positive_polar(z);
    C64::from_polar(rho.sqrt(), 0.5 * theta)
}

fn positive_polar(z: C64) -> (f64, f64) {
    let mut theta = z.im.atan2(z.re);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    (z.norm(), theta)
}

/// Principal power of `w` with `arg w ∈ [0, π]` (closed upper half-plane).
fn upper_pow(w: C64, e: f64) -> C64 {
    let theta = w.im.atan2(w.re).abs();
    C64::from_polar(w.norm().powf(e), e * theta)
}

impl ExampleMap {
    pub fn piecewise_linear() -> Self {
        ExampleMap { id: ExampleId::PiecewiseLinear, domain: DomainSpec::unit_disk() }
    }

    /// Power-log solution with `h_z · conj(h_z̄) ≡ 1`; `p` is restricted to `(1, 16]`.
    pub fn power_log(p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 16.0) {
            return Err(Error::Parameter(format!("power_log needs p in (1, 16], got {p}")));
        }
        Ok(ExampleMap { id: ExampleId::PowerLog { p }, domain: DomainSpec::unit_disk() })
    }

    pub fn butterfly() -> Self {
        ExampleMap { id: ExampleId::Butterfly, domain: DomainSpec::unit_disk() }
    }

    /// Hammering map on `{r < |z| < R}` with `0 < r < 1 < R`.
    pub fn hammering(r: f64, big_r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0 && big_r > 1.0 && big_r.is_finite()) {
            return Err(Error::Parameter(format!("hammering needs 0 < r < 1 < R, got r={r}, R={big_r}")));
        }
        Ok(ExampleMap { id: ExampleId::Hammering { r, big_r }, domain: DomainSpec::annulus(r, big_r)? })
    }

    pub fn name(&self) -> &'static str {
        match self.id {
            ExampleId::PiecewiseLinear => "piecewise_linear",
            ExampleId::PowerLog { .. } => "power_log",
            ExampleId::Butterfly => "butterfly",
            ExampleId::Hammering { .. } => "hammering",
        }
    }

    fn check_domain(&self, z: C64) -> Result<()> {
        if self.domain.contains(z) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(z))
        }
    }

    /// Whether the first derivatives are discontinuous or unbounded at `z`.
    pub fn on_singular_set(&self, z: C64) -> bool {
        match self.id {
            ExampleId::PiecewiseLinear | ExampleId::PowerLog { .. } => z.im.abs() <= SINGULAR_EPS,
            ExampleId::Butterfly => segment_distance(z) <= SINGULAR_EPS,
            ExampleId::Hammering { .. } => false,
        }
    }

    /// Distance from `z` to the loci where finite differences of the map are
    /// unreliable: jumps of the first derivatives, branch points, and (for
    /// the hammering map) the seam `|z| = 1` where the second derivatives jump.
    pub fn singular_distance(&self, z: C64) -> f64 {
        match self.id {
            ExampleId::PiecewiseLinear | ExampleId::PowerLog { .. } => z.im.abs(),
            ExampleId::Butterfly => segment_distance(z),
            ExampleId::Hammering { .. } => (z.norm() - 1.0).abs(),
        }
    }

    /// Map value at `z`; fails outside the closed domain.
    pub fn value(&self, z: C64) -> Result<C64> {
        self.check_domain(z)?;
        if let ExampleId::PowerLog { p } = self.id {
            if p <= 2.0 && z.norm() == 0.0 {
                return Err(Error::SingularPoint(z));
            }
        }
        Ok(self.value_unchecked(z))
    }

    /// Value, `h_z` and `h_z̄` at `z`.
    pub fn eval(&self, z: C64) -> Result<Evaluation> {
        let value = self.value(z)?;
        if self.on_singular_set(z) {
            return Err(Error::SingularPoint(z));
        }
        let (dz, dzbar) = self.derivatives_unchecked(z);
        Ok(Evaluation { value, dz, dzbar })
    }

    pub fn value_unchecked(&self, z: C64) -> C64 {
        match self.id {
            ExampleId::PiecewiseLinear => {
                if z.im >= 0.0 {
                    2.0 * z + z.conj()
                } else {
                    z + 2.0 * z.conj()
                }
            }
            ExampleId::PowerLog { p } => {
                let w = if z.im >= 0.0 { z } else { z.conj() };
                let alpha = 2.0 / p;
                if (p - 2.0).abs() < 1e-15 {
                    C64::new(w.norm().ln(), w.im.atan2(w.re).abs()) + 0.5 * w.conj() * w.conj()
                } else {
                    upper_pow(w, 1.0 - alpha) / (1.0 - alpha) + upper_pow(w, 1.0 + alpha).conj() / (1.0 + alpha)
                }
            }
            ExampleId::Butterfly => {
                let (rho, theta) = positive_polar(z);
                2.0 * rho * C64::new(rho.sqrt() * (1.5 * theta).sin(), theta.sin())
            }
            ExampleId::Hammering { .. } => {
                let r = z.norm();
                if r <= 1.0 {
                    z / r
                } else {
                    0.5 * (z + 1.0 / z.conj())
                }
            }
        }
    }

    /// `(h_z, h_z̄)` using the one-sided formula on singular sets.
    pub fn derivatives_unchecked(&self, z: C64) -> (C64, C64) {
        let one = C64::new(1.0, 0.0);
        match self.id {
            ExampleId::PiecewiseLinear => {
                if z.im >= 0.0 {
                    (2.0 * one, one)
                } else {
                    (one, 2.0 * one)
                }
            }
            ExampleId::PowerLog { p } => {
                let alpha = 2.0 / p;
                if z.im >= 0.0 {
                    (upper_pow(z, -alpha), upper_pow(z, alpha).conj())
                } else {
                    let w = z.conj();
                    (upper_pow(w, alpha).conj(), upper_pow(w, -alpha))
                }
            }
            ExampleId::Butterfly => {
                let s = sqrt_cut(z);
                let i = C64::i();
                (one - 1.5 * i * s, -one + 1.5 * i * s.conj())
            }
            ExampleId::Hammering { .. } => {
                let r = z.norm();
                if r <= 1.0 {
                    (C64::new(0.5 / r, 0.0), -z * z / (2.0 * r * r * r))
                } else {
                    let zb = z.conj();
                    (0.5 * one, -0.5 / (zb * zb))
                }
            }
        }
    }

    /// The closed form of the Hopf differential.
    pub fn analytic_hopf(&self) -> HopfClosedForm {
        match self.id {
            ExampleId::PiecewiseLinear => HopfClosedForm::Constant { c: C64::new(2.0, 0.0) },
            ExampleId::PowerLog { .. } => HopfClosedForm::Constant { c: C64::new(1.0, 0.0) },
            ExampleId::Butterfly => HopfClosedForm::Linear { a: C64::new(-1.0, 0.0), b: C64::new(-2.25, 0.0) },
            ExampleId::Hammering { .. } => HopfClosedForm::InverseSquare { c: C64::new(-0.25, 0.0) },
        }
    }

    /// The printed closed forms for `|Dh|²`, `J_h`, `|h_z|²`, `|h_z̄|²`
    /// (butterfly and hammering only).
    pub fn printed_identities(&self, z: C64) -> Result<PrintedIdentities> {
        self.check_domain(z)?;
        match self.id {
            ExampleId::Butterfly => {
                if self.on_singular_set(z) {
                    return Err(Error::SingularPoint(z));
                }
                let (rho, theta) = positive_polar(z);
                let cross = 3.0 * rho.sqrt() * (0.5 * theta).sin();
                Ok(PrintedIdentities {
                    energy_density: 4.0 + 9.0 * rho,
                    jacobian: 2.0 * cross,
                    dz_sq: 1.0 + 2.25 * rho + cross,
                    dzbar_sq: 1.0 + 2.25 * rho - cross,
                })
            }
            ExampleId::Hammering { .. } => {
                let rho = z.norm();
                if rho <= 1.0 {
                    let q = 0.25 / (rho * rho);
                    Ok(PrintedIdentities { energy_density: 4.0 * q, jacobian: 0.0, dz_sq: q, dzbar_sq: q })
                } else {
                    let q = 0.25 / rho.powi(4);
                    Ok(PrintedIdentities {
                        energy_density: 0.5 + 2.0 * q,
                        jacobian: 0.25 - q,
                        dz_sq: 0.25,
                        dzbar_sq: q,
                    })
                }
            }
            _ => Err(Error::Parameter(format!("no printed identities for {}", self.name()))),
        }
    }

    fn power_log_exponent(&self) -> Result<f64> {
        match self.id {
            ExampleId::PowerLog { p } => Ok(p),
            _ => Err(Error::Parameter(format!("{} is not the power-log map", self.name()))),
        }
    }

    /// The larger of `|h_z|` and `|h_z̄|`; for the power-log map this is
    /// `|z|^{-2/p}` on both half-disks.
    pub fn dominant_derivative(&self, z: C64) -> f64 {
        let (a, b) = self.derivatives_unchecked(z);
        a.norm().max(b.norm())
    }

    /// Measure of the superlevel set `{z ∈ 𝔻 : max(|h_z|, |h_z̄|) > λ}` for the
    /// power-log map, by counting cells of an `n × n` lattice on `[-1, 1]²`.
    ///
    /// Cells straddling the level set are split recursively until they are
    /// `10⁻⁴` of the level-set radius, so the estimate stays sharp as the set
    /// shrinks far below the lattice spacing. For `λ < 1` the whole disk is
    /// returned.
    pub fn weak_lp_profile(&self, lambda: f64, n: usize) -> Result<f64> {
        let p = self.power_log_exponent()?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Parameter(format!("threshold must be positive, got {lambda}")));
        }
        if lambda < 1.0 {
            return Ok(PI);
        }
        // |z|^{-2/p} > λ  ⇔  |z| < λ^{-p/2}; the set is clipped to the unit disk.
        let radius = lambda.powf(-0.5 * p).min(1.0);
        Ok(lattice_disk_area(radius, n))
    }

    /// Lattice sum of `max(|h_z|, |h_z̄|)^p` over cell centres of an `n × n`
    /// lattice on the unit disk. For the power-log map it diverges like
    /// `2π log n`.
    pub fn dominant_lp_sum(&self, n: usize) -> Result<f64> {
        let p = self.power_log_exponent()?;
        let h = 2.0 / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let x = -1.0 + (i as f64 + 0.5) * h;
            for j in 0..n {
                let z = C64::new(x, -1.0 + (j as f64 + 0.5) * h);
                if z.norm() < 1.0 && z.im != 0.0 {
                    total += self.dominant_derivative(z).powf(p) * h * h;
                }
            }
        }
        Ok(total)
    }
}

/// Distance to the segment `[0, 1]` of the real axis.
fn segment_distance(z: C64) -> f64 {
    let x = z.re.clamp(0.0, 1.0);
    (z - C64::new(x, 0.0)).norm()
}

/// Area of `{|z| < radius}` by adaptive cell counting on an `n × n` lattice
/// over `[-1, 1]²`.
fn lattice_disk_area(radius: f64, n: usize) -> f64 {
    let h = 2.0 / n as f64;
    let target = 1e-4 * radius;
    let depth = if h > target { (h / target).log2().ceil() as u32 } else { 0 }.min(80);
    let lo = (((1.0 - radius) / h).floor() as isize - 1).max(0) as usize;
    let hi = ((((1.0 + radius) / h).ceil() as isize) + 1).min(n as isize) as usize;
    let mut total = 0.0;
    for i in lo..hi {
        let x0 = -1.0 + i as f64 * h;
        for j in lo..hi {
            let y0 = -1.0 + j as f64 * h;
            total += cell_disk_area(x0, y0, h, radius, depth);
        }
    }
    total
}

fn cell_disk_area(x0: f64, y0: f64, h: f64, radius: f64, depth: u32) -> f64 {
    let (x1, y1) = (x0 + h, y0 + h);
    let near = C64::new(0.0f64.clamp(x0, x1), 0.0f64.clamp(y0, y1)).norm();
    let far = C64::new(x0.abs().max(x1.abs()), y0.abs().max(y1.abs())).norm();
    if far < radius {
        return h * h;
    }
    if near >= radius {
        return 0.0;
    }
    if depth == 0 {
        let centre = C64::new(x0 + 0.5 * h, y0 + 0.5 * h);
        return if centre.norm() < radius { h * h } else { 0.0 };
    }
    let k = 0.5 * h;
    cell_disk_area(x0, y0, k, radius, depth - 1)
        + cell_disk_area(x0 + k, y0, k, radius, depth - 1)
        + cell_disk_area(x0, y0 + k, k, radius, depth - 1)
        + cell_disk_area(x0 + k, y0 + k, k, radius, depth - 1)
}
