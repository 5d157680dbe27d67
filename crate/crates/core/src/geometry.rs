//! Planar domains, sampling lattices and the scalar geometric queries used
//! by the rest of the crate.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Relative tolerance (with respect to the diameter) for domain membership.
pub const MEMBERSHIP_RTOL: f64 = 1e-12;

/// A bounded planar domain: a disk or an annulus centred at the origin, or an
/// axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "RawDomain")]
pub enum DomainSpec {
    Disk { radius: f64 },
    Annulus { r_inner: f64, r_outer: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawDomain {
    Disk { radius: f64 },
    Annulus { r_inner: f64, r_outer: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl TryFrom<RawDomain> for DomainSpec {
    type Error = Error;

    fn try_from(raw: RawDomain) -> Result<Self> {
        match raw {
            RawDomain::Disk { radius } => DomainSpec::disk(radius),
            RawDomain::Annulus { r_inner, r_outer } => DomainSpec::annulus(r_inner, r_outer),
            RawDomain::Rectangle { x0, x1, y0, y1 } => DomainSpec::rectangle(x0, x1, y0, y1),
        }
    }
}

fn positive_finite(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl DomainSpec {
    pub fn disk(radius: f64) -> Result<Self> {
        if !positive_finite(radius) {
            return Err(Error::Parameter(format!("disk radius must be positive, got {radius}")));
        }
        Ok(DomainSpec::Disk { radius })
    }

    pub fn unit_disk() -> Self {
        DomainSpec::Disk { radius: 1.0 }
    }

    pub fn annulus(r_inner: f64, r_outer: f64) -> Result<Self> {
        if !positive_finite(r_inner) || !positive_finite(r_outer) || r_inner >= r_outer {
            return Err(Error::Parameter(format!("annulus needs 0 < r_inner < r_outer, got ({r_inner}, {r_outer})")));
        }
        Ok(DomainSpec::Annulus { r_inner, r_outer })
    }

    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let ok = [x0, x1, y0, y1].iter().all(|v| v.is_finite()) && x0 < x1 && y0 < y1;
        if !ok {
            return Err(Error::Parameter(format!(
                "rectangle needs x0 < x1 and y0 < y1, got [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Ok(DomainSpec::Rectangle { x0, x1, y0, y1 })
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            DomainSpec::Disk { radius } => 2.0 * radius,
            DomainSpec::Annulus { r_outer, .. } => 2.0 * r_outer,
            DomainSpec::Rectangle { x0, x1, y0, y1 } => (x1 - x0).hypot(y1 - y0),
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            DomainSpec::Disk { radius } => PI * radius * radius,
            DomainSpec::Annulus { r_inner, r_outer } => PI * (r_outer * r_outer - r_inner * r_inner),
            DomainSpec::Rectangle { x0, x1, y0, y1 } => (x1 - x0) * (y1 - y0),
        }
    }

    /// `(x0, x1, y0, y1)` of the smallest axis-aligned box containing the domain.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match *self {
            DomainSpec::Disk { radius } => (-radius, radius, -radius, radius),
            DomainSpec::Annulus { r_outer, .. } => (-r_outer, r_outer, -r_outer, r_outer),
            DomainSpec::Rectangle { x0, x1, y0, y1 } => (x0, x1, y0, y1),
        }
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn signed_distance(&self, z: C64) -> f64 {
        match *self {
            DomainSpec::Disk { radius } => radius - z.norm(),
            DomainSpec::Annulus { r_inner, r_outer } => {
                let r = z.norm();
                (r - r_inner).min(r_outer - r)
            }
            DomainSpec::Rectangle { x0, x1, y0, y1 } => {
                let dx = (z.re - x0).min(x1 - z.re);
                let dy = (z.im - y0).min(y1 - z.im);
                if dx >= 0.0 && dy >= 0.0 {
                    dx.min(dy)
                } else {
                    // Outside: Euclidean distance to the box, negated.
                    let ox = (x0 - z.re).max(z.re - x1).max(0.0);
                    let oy = (y0 - z.im).max(z.im - y1).max(0.0);
                    -ox.hypot(oy)
                }
            }
        }
    }

    fn tolerance(&self) -> f64 {
        MEMBERSHIP_RTOL * self.diameter()
    }

    /// Membership in the closed domain, up to [`MEMBERSHIP_RTOL`].
    pub fn contains(&self, z: C64) -> bool {
        self.signed_distance(z) >= -self.tolerance()
    }

    /// Strict membership in the open domain.
    pub fn contains_open(&self, z: C64) -> bool {
        self.signed_distance(z) > 0.0
    }

    /// Euclidean distance from `z` to the boundary of the domain.
    pub fn dist_to_boundary(&self, z: C64) -> Result<f64> {
        if !self.contains(z) {
            return Err(Error::OutsideDomain(z));
        }
        Ok(self.signed_distance(z).max(0.0))
    }

    /// Distance from `z` to the nearest boundary component; unlike
    /// [`Self::dist_to_boundary`] this never fails.
    pub fn dist_to_boundary_unchecked(&self, z: C64) -> f64 {
        self.signed_distance(z).max(0.0)
    }

    /// Conformal modulus of an annulus, normalised as `log(r_outer / r_inner)`.
    pub fn modulus(&self) -> Result<f64> {
        match *self {
            DomainSpec::Annulus { r_inner, r_outer } => Ok((r_outer / r_inner).ln()),
            other => Err(Error::UnsupportedDomain(format!("modulus is defined for annuli, got {other}"))),
        }
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DomainSpec::Disk { radius } => write!(f, "disk:{radius}"),
            DomainSpec::Annulus { r_inner, r_outer } => write!(f, "annulus:{r_inner},{r_outer}"),
            DomainSpec::Rectangle { x0, x1, y0, y1 } => write!(f, "rectangle:{x0},{x1},{y0},{y1}"),
        }
    }
}

/// Parses `disk:R`, `annulus:r,R` and `rectangle:x0,x1,y0,y1`.
impl FromStr for DomainSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) =
            s.split_once(':').ok_or_else(|| Error::Parameter(format!("domain `{s}` must look like kind:params")))?;
        let nums = rest
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parameter(format!("domain `{s}`: {e}")))?;
        match (kind.trim(), nums.as_slice()) {
            ("disk", [r]) => DomainSpec::disk(*r),
            ("annulus", [a, b]) => DomainSpec::annulus(*a, *b),
            ("rectangle", [x0, x1, y0, y1]) => DomainSpec::rectangle(*x0, *x1, *y0, *y1),
            _ => Err(Error::Parameter(format!("unrecognised domain `{s}`"))),
        }
    }
}

/// Outer radius `(R + 1/R) / 2` of the Nitsche target annulus paired with
/// `{r < |z| < R}`.
pub fn nitsche_target(big_r: f64) -> Result<f64> {
    if !(big_r.is_finite() && big_r > 1.0) {
        return Err(Error::Parameter(format!("Nitsche target needs R > 1, got {big_r}")));
    }
    Ok(0.5 * (big_r + 1.0 / big_r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Polar,
    Cartesian,
}

/// Resolution of a sampling lattice. Node coordinates follow from the domain
/// via [`Layout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLattice")]
pub struct Lattice {
    pub kind: LatticeKind,
    pub n1: usize,
    pub n2: usize,
}

#[derive(Deserialize)]
struct RawLattice {
    kind: LatticeKind,
    n1: usize,
    n2: usize,
}

impl TryFrom<RawLattice> for Lattice {
    type Error = Error;

    fn try_from(raw: RawLattice) -> Result<Self> {
        Lattice::new(raw.kind, raw.n1, raw.n2)
    }
}

pub const MIN_LATTICE_RESOLUTION: usize = 8;

impl Lattice {
    pub fn new(kind: LatticeKind, n1: usize, n2: usize) -> Result<Self> {
        if n1 < MIN_LATTICE_RESOLUTION || n2 < MIN_LATTICE_RESOLUTION {
            return Err(Error::Parameter(format!(
                "lattice resolution must be at least {MIN_LATTICE_RESOLUTION} per axis, got {n1}x{n2}"
            )));
        }
        Ok(Lattice { kind, n1, n2 })
    }

    pub fn polar(n_rho: usize, n_theta: usize) -> Result<Self> {
        Lattice::new(LatticeKind::Polar, n_rho, n_theta)
    }

    pub fn cartesian(nx: usize, ny: usize) -> Result<Self> {
        Lattice::new(LatticeKind::Cartesian, nx, ny)
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn layout(&self, domain: &DomainSpec) -> Result<Layout> {
        Layout::new(domain, self)
    }
}

/// Concrete node placement of a lattice on a domain.
///
/// Nodes sit at cell centres. Polar nodes are `ρ_i = ρ₀ + (i + ½)Δρ`,
/// `θ_j = (j + ½)Δθ`, so a disk lattice never contains the origin and no node
/// lies on the positive real axis. Cartesian nodes cover the bounding box and
/// carry an in-domain flag. Node `(i, j)` has flat index `i * n2 + j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    Polar { rho0: f64, drho: f64, dtheta: f64, n1: usize, n2: usize },
    Cartesian { x0: f64, dx: f64, y0: f64, dy: f64, n1: usize, n2: usize, domain: DomainSpec },
}

impl Layout {
    pub fn new(domain: &DomainSpec, lattice: &Lattice) -> Result<Self> {
        let (n1, n2) = (lattice.n1, lattice.n2);
        match lattice.kind {
            LatticeKind::Polar => {
                let (rho0, rho1) = match *domain {
                    DomainSpec::Disk { radius } => (0.0, radius),
                    DomainSpec::Annulus { r_inner, r_outer } => (r_inner, r_outer),
                    DomainSpec::Rectangle { .. } => {
                        return Err(Error::UnsupportedDomain("polar lattices need a disk or an annulus".into()))
                    }
                };
                Ok(Layout::Polar { rho0, drho: (rho1 - rho0) / n1 as f64, dtheta: 2.0 * PI / n2 as f64, n1, n2 })
            }
            LatticeKind::Cartesian => {
                let (x0, x1, y0, y1) = domain.bounding_box();
                Ok(Layout::Cartesian {
                    x0,
                    dx: (x1 - x0) / n1 as f64,
                    y0,
                    dy: (y1 - y0) / n2 as f64,
                    n1,
                    n2,
                    domain: *domain,
                })
            }
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match *self {
            Layout::Polar { n1, n2, .. } | Layout::Cartesian { n1, n2, .. } => (n1, n2),
        }
    }

    pub fn len(&self) -> usize {
        let (n1, n2) = self.dims();
        n1 * n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_polar(&self) -> bool {
        matches!(self, Layout::Polar { .. })
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.dims().1 + j
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        let n2 = self.dims().1;
        (k / n2, k % n2)
    }

    pub fn rho(&self, i: usize) -> f64 {
        match *self {
            Layout::Polar { rho0, drho, .. } => rho0 + (i as f64 + 0.5) * drho,
            Layout::Cartesian { .. } => panic!("rho() on a Cartesian layout"),
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        match *self {
            Layout::Polar { dtheta, .. } => (j as f64 + 0.5) * dtheta,
            Layout::Cartesian { .. } => panic!("theta() on a Cartesian layout"),
        }
    }

    pub fn node_ij(&self, i: usize, j: usize) -> C64 {
        match *self {
            Layout::Polar { .. } => C64::from_polar(self.rho(i), self.theta(j)),
            Layout::Cartesian { x0, dx, y0, dy, .. } => {
                C64::new(x0 + (i as f64 + 0.5) * dx, y0 + (j as f64 + 0.5) * dy)
            }
        }
    }

    pub fn node(&self, k: usize) -> C64 {
        let (i, j) = self.coords(k);
        self.node_ij(i, j)
    }

    /// Whether node `k` belongs to the (open) domain. Polar nodes always do.
    pub fn inside(&self, k: usize) -> bool {
        match self {
            Layout::Polar { .. } => true,
            Layout::Cartesian { domain, .. } => domain.contains_open(self.node(k)),
        }
    }

    pub fn inside_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|k| self.inside(k)).collect()
    }

    /// Quadrature weight (cell area) attached to node `k`; zero outside the domain.
    pub fn cell_area(&self, k: usize) -> f64 {
        match *self {
            Layout::Polar { drho, dtheta, .. } => self.rho(self.coords(k).0) * drho * dtheta,
            Layout::Cartesian { dx, dy, .. } => {
                if self.inside(k) {
                    dx * dy
                } else {
                    0.0
                }
            }
        }
    }

    /// Lattice spacing along each axis (`Δρ, Δθ` or `Δx, Δy`).
    pub fn spacing(&self) -> (f64, f64) {
        match *self {
            Layout::Polar { drho, dtheta, .. } => (drho, dtheta),
            Layout::Cartesian { dx, dy, .. } => (dx, dy),
        }
    }

    /// A representative physical cell size, used for "one cell" neighbourhoods.
    pub fn cell_size(&self) -> f64 {
        match *self {
            Layout::Polar { rho0, drho, dtheta, n1, .. } => {
                let rho_max = rho0 + n1 as f64 * drho;
                drho.max(rho_max * dtheta)
            }
            Layout::Cartesian { dx, dy, .. } => dx.max(dy),
        }
    }

    /// The 4-neighbours of node `(i, j)` that exist on the lattice (polar
    /// lattices are periodic in θ). Together with each neighbour the
    /// conductance of the connecting edge for the 5-point quadratic form is
    /// returned.
    pub fn neighbours(&self, k: usize) -> impl Iterator<Item = (usize, f64)> {
        let (i, j) = self.coords(k);
        let mut out: [(usize, f64); 4] = [(usize::MAX, 0.0); 4];
        match *self {
            Layout::Polar { rho0, drho, dtheta, n1, n2 } => {
                let rho = rho0 + (i as f64 + 0.5) * drho;
                if i > 0 {
                    out[0] = (self.index(i - 1, j), (rho - 0.5 * drho) * dtheta / drho);
                }
                if i + 1 < n1 {
                    out[1] = (self.index(i + 1, j), (rho + 0.5 * drho) * dtheta / drho);
                }
                let w = drho / (rho * dtheta);
                out[2] = (self.index(i, (j + n2 - 1) % n2), w);
                out[3] = (self.index(i, (j + 1) % n2), w);
            }
            Layout::Cartesian { dx, dy, n1, n2, .. } => {
                if i > 0 {
                    out[0] = (self.index(i - 1, j), dy / dx);
                }
                if i + 1 < n1 {
                    out[1] = (self.index(i + 1, j), dy / dx);
                }
                if j > 0 {
                    out[2] = (self.index(i, j - 1), dx / dy);
                }
                if j + 1 < n2 {
                    out[3] = (self.index(i, j + 1), dx / dy);
                }
            }
        }
        out.into_iter().filter(|(n, _)| *n != usize::MAX)
    }

    /// Nearest lattice ring to radius `rho` (polar only).
    pub fn nearest_ring(&self, rho: f64) -> Option<usize> {
        match *self {
            Layout::Polar { rho0, drho, n1, .. } => {
                let x = (rho - rho0) / drho - 0.5;
                if x < -0.5 || x > n1 as f64 - 0.5 {
                    return None;
                }
                Some((x.round().max(0.0) as usize).min(n1 - 1))
            }
            Layout::Cartesian { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn boundary_distances() {
        let ann = DomainSpec::annulus(1.0, 2.0).unwrap();
        assert_relative_eq!(ann.dist_to_boundary(C64::new(1.5, 0.0)).unwrap(), 0.5);
        let disk = DomainSpec::unit_disk();
        assert_relative_eq!(disk.dist_to_boundary(C64::new(0.0, 0.0)).unwrap(), 1.0);
        let ann = DomainSpec::annulus(0.5, 2.0).unwrap();
        assert_relative_eq!(ann.dist_to_boundary(C64::new(0.8, 0.0)).unwrap(), 0.3, epsilon = 1e-15);
        assert_eq!(disk.dist_to_boundary(C64::new(1.0, 0.0)).unwrap(), 0.0);
        assert!(matches!(disk.dist_to_boundary(C64::new(1.1, 0.0)), Err(Error::OutsideDomain(_))));
        assert!(ann.dist_to_boundary(C64::new(0.1, 0.0)).is_err());
    }

    #[test]
    fn rectangle_distance() {
        let r = DomainSpec::rectangle(0.0, 2.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(r.dist_to_boundary(C64::new(1.0, 0.25)).unwrap(), 0.25);
        assert_relative_eq!(r.signed_distance(C64::new(3.0, 2.0)), -2f64.sqrt());
    }

    #[test]
    fn modulus_values() {
        let e = std::f64::consts::E;
        assert_relative_eq!(DomainSpec::annulus(1.0, e).unwrap().modulus().unwrap(), 1.0);
        assert_relative_eq!(
            DomainSpec::annulus(0.5, 2.0).unwrap().modulus().unwrap(),
            1.386_294_361_119_890_6,
            epsilon = 1e-12
        );
        assert!(DomainSpec::annulus(1.0, 1.0).is_err());
        assert!(matches!(DomainSpec::unit_disk().modulus(), Err(Error::UnsupportedDomain(_))));
    }

    #[test]
    fn nitsche_values() {
        assert_relative_eq!(nitsche_target(2.0).unwrap(), 1.25);
        assert_relative_eq!(nitsche_target(3.0).unwrap(), 5.0 / 3.0, epsilon = 1e-15);
        assert!((nitsche_target(1.0 + 1e-8).unwrap() - 1.0).abs() < 1e-12);
        assert!(nitsche_target(1.0).is_err());
        assert!(nitsche_target(0.5).is_err());
    }

    #[test]
    fn json_shape() {
        let d = DomainSpec::annulus(0.5, 2.0).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"kind":"annulus","r_inner":0.5,"r_outer":2.0}"#);
        assert_eq!(serde_json::from_str::<DomainSpec>(&s).unwrap(), d);
        assert!(serde_json::from_str::<DomainSpec>(r#"{"kind":"annulus","r_inner":2,"r_outer":1}"#).is_err());
        let l = Lattice::polar(16, 32).unwrap();
        assert_eq!(serde_json::to_string(&l).unwrap(), r#"{"kind":"polar","n1":16,"n2":32}"#);
        assert!(serde_json::from_str::<Lattice>(r#"{"kind":"polar","n1":4,"n2":32}"#).is_err());
    }

    #[test]
    fn parse_domain_strings() {
        assert_eq!("annulus:1,1.25".parse::<DomainSpec>().unwrap(), DomainSpec::annulus(1.0, 1.25).unwrap());
        assert_eq!("disk:3".parse::<DomainSpec>().unwrap(), DomainSpec::disk(3.0).unwrap());
        assert!("annulus:1".parse::<DomainSpec>().is_err());
        assert!("blob:1".parse::<DomainSpec>().is_err());
    }

    #[test]
    fn polar_layout_avoids_origin_and_positive_axis() {
        let lay = Lattice::polar(8, 8).unwrap().layout(&DomainSpec::unit_disk()).unwrap();
        assert_relative_eq!(lay.rho(0), 1.0 / 16.0);
        assert!((0..lay.len()).all(|k| lay.node(k).norm() > 0.0 && lay.node(k).arg().abs() > 1e-3));
        assert_eq!(lay.nearest_ring(0.5), Some(4));
        assert_eq!(lay.nearest_ring(2.0), None);
    }

    proptest! {
        #[test]
        fn distance_is_one_lipschitz(
            ax in -1.9f64..1.9, ay in -1.9f64..1.9, bx in -1.9f64..1.9, by in -1.9f64..1.9
        ) {
            let ann = DomainSpec::annulus(0.5, 2.0).unwrap();
            let (a, b) = (C64::new(ax, ay), C64::new(bx, by));
            prop_assume!(ann.contains(a) && ann.contains(b));
            let da = ann.dist_to_boundary(a).unwrap();
            let db = ann.dist_to_boundary(b).unwrap();
            prop_assert!((da - db).abs() <= (a - b).norm() + 1e-12);
        }

        #[test]
        fn modulus_scale_invariant(r in 0.01f64..10.0, ratio in 1.001f64..50.0, s in 0.01f64..100.0) {
            let m1 = DomainSpec::annulus(r, r * ratio).unwrap().modulus().unwrap();
            let m2 = DomainSpec::annulus(s * r, s * r * ratio).unwrap().modulus().unwrap();
            prop_assert!((m1 - m2).abs() <= 1e-12 * m1.max(1.0));
        }

        #[test]
        fn nitsche_target_is_thinner(big_r in 1.000001f64..1e6) {
            let t = nitsche_target(big_r).unwrap();
            prop_assert!(t < big_r && t > 1.0);
        }
    }
}
