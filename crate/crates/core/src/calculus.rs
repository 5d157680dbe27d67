//! Discrete Wirtinger calculus on sampled maps.
//!
//! Derivatives are second-order central differences: in `(x, y)` on
//! Cartesian lattices and in `(ρ, θ)` on polar lattices, converted to
//! `h_z = ½ e^{-iθ}(h_ρ − (i/ρ) h_θ)` and `h_z̄ = ½ e^{iθ}(h_ρ + (i/ρ) h_θ)`.
//! The angular difference is divided by `2 sin Δθ` instead of `2Δθ`, which
//! keeps the stencil second order and makes it exact on `e^{±iθ}`, hence on
//! every affine map `az + bz̄ + c`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::examples::HopfClosedForm;
use crate::geometry::{DomainSpec, Layout};
use crate::grid::MapGrid;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    CentralDifference,
}

/// Per-node `(h_z, h_z̄)`.
#[derive(Debug, Clone)]
pub struct WirtingerField {
    pub domain: DomainSpec,
    pub layout: Layout,
    pub dz: Vec<C64>,
    pub dzbar: Vec<C64>,
    pub provenance: Provenance,
    /// Order of the difference stencil (0 for analytic fields).
    pub stencil_order: u8,
}

/// Per-node `φ = h_z · conj(h_z̄)` with its holomorphy residual.
#[derive(Debug, Clone)]
pub struct HopfField {
    pub domain: DomainSpec,
    pub layout: Layout,
    pub phi: Vec<C64>,
    pub closed_form: Option<HopfClosedForm>,
    /// Discrete L¹ norm of `∂φ/∂z̄` over interior nodes, divided by the domain area.
    pub residual_norm: f64,
}

/// Exact-derivative field if the grid carries one, finite differences otherwise.
pub fn wirtinger(grid: &MapGrid) -> Result<WirtingerField> {
    let layout = grid.layout()?;
    if let Some(a) = &grid.analytic {
        return Ok(WirtingerField {
            domain: grid.domain,
            layout,
            dz: a.iter().map(|p| p[0]).collect(),
            dzbar: a.iter().map(|p| p[1]).collect(),
            provenance: Provenance::Analytic,
            stencil_order: 0,
        });
    }
    wirtinger_fd(grid)
}

/// Finite-difference field, ignoring any analytic channel.
pub fn wirtinger_fd(grid: &MapGrid) -> Result<WirtingerField> {
    let layout = grid.layout()?;
    let (dz, dzbar) = difference_wirtinger(&layout, &grid.values);
    Ok(WirtingerField {
        domain: grid.domain,
        layout,
        dz,
        dzbar,
        provenance: Provenance::CentralDifference,
        stencil_order: 2,
    })
}

/// Second-order derivative along one lattice axis at position `i` of `n`,
/// given a sampler `f(offset)` and a predicate telling whether offset nodes
/// exist. Returns `None` when fewer than two nodes are available.
fn axis_derivative(f: impl Fn(isize) -> C64, has: impl Fn(isize) -> bool, h: f64) -> Option<C64> {
    match (has(-1), has(1)) {
        (true, true) => Some((f(1) - f(-1)) / (2.0 * h)),
        (false, true) if has(2) => Some((-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)),
        (true, false) if has(-2) => Some((3.0 * f(0) - 4.0 * f(-1) + f(-2)) / (2.0 * h)),
        (false, true) => Some((f(1) - f(0)) / h),
        (true, false) => Some((f(0) - f(-1)) / h),
        (false, false) => None,
    }
}

/// `(∂_z, ∂_z̄)` of arbitrary node samples.
pub fn difference_wirtinger(layout: &Layout, samples: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let zero = C64::new(0.0, 0.0);
    let i = C64::i();
    let pairs: Vec<(C64, C64)> = (0..layout.len())
        .into_par_iter()
        .map(|k| {
            let (a, b) = layout.coords(k);
            match *layout {
                Layout::Polar { drho, dtheta, n1, n2, .. } => {
                    let d_rho = axis_derivative(
                        |o| samples[layout.index((a as isize + o) as usize, b)],
                        |o| {
                            let t = a as isize + o;
                            t >= 0 && t < n1 as isize
                        },
                        drho,
                    )
                    .unwrap_or(zero);
                    let jp = (b + 1) % n2;
                    let jm = (b + n2 - 1) % n2;
                    let d_theta = (samples[layout.index(a, jp)] - samples[layout.index(a, jm)]) / (2.0 * dtheta.sin());
                    let rho = layout.rho(a);
                    let e = C64::from_polar(1.0, layout.theta(b));
                    (0.5 * e.conj() * (d_rho - i * d_theta / rho), 0.5 * e * (d_rho + i * d_theta / rho))
                }
                Layout::Cartesian { dx, dy, n1, n2, .. } => {
                    if !layout.inside(k) {
                        return (zero, zero);
                    }
                    let ok = |ii: isize, jj: isize| {
                        ii >= 0
                            && jj >= 0
                            && (ii as usize) < n1
                            && (jj as usize) < n2
                            && layout.inside(layout.index(ii as usize, jj as usize))
                    };
                    let (ai, bi) = (a as isize, b as isize);
                    let fx = |o: isize| samples[layout.index((ai + o) as usize, b)];
                    let fy = |o: isize| samples[layout.index(a, (bi + o) as usize)];
                    let d_x = axis_derivative(fx, |o| ok(ai + o, bi), dx).unwrap_or(zero);
                    let d_y = axis_derivative(fy, |o| ok(ai, bi + o), dy).unwrap_or(zero);
                    (0.5 * (d_x - i * d_y), 0.5 * (d_x + i * d_y))
                }
            }
        })
        .collect();
    pairs.into_iter().unzip()
}

/// Nodes whose full central stencil is available.
pub fn interior_nodes(layout: &Layout) -> Vec<bool> {
    (0..layout.len())
        .map(|k| {
            let (i, _) = layout.coords(k);
            match *layout {
                Layout::Polar { n1, .. } => i > 0 && i + 1 < n1,
                Layout::Cartesian { .. } => {
                    layout.inside(k)
                        && layout.neighbours(k).count() == 4
                        && layout.neighbours(k).all(|(n, _)| layout.inside(n))
                }
            }
        })
        .collect()
}

impl WirtingerField {
    pub fn len(&self) -> usize {
        self.dz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dz.is_empty()
    }

    /// `|Dh|² = 2(|h_z|² + |h_z̄|²)` per node.
    pub fn energy_density(&self) -> Vec<f64> {
        self.dz.iter().zip(&self.dzbar).map(|(a, b)| 2.0 * (a.norm_sqr() + b.norm_sqr())).collect()
    }
}

/// `∬ |Dh|²` with cell-area weights, summed in node order.
pub fn dirichlet_energy(field: &WirtingerField) -> f64 {
    field.energy_density().iter().enumerate().map(|(k, e)| e * field.layout.cell_area(k)).sum()
}

/// `J_h = |h_z|² − |h_z̄|²` per node.
pub fn jacobian(field: &WirtingerField) -> Vec<f64> {
    field.dz.iter().zip(&field.dzbar).map(|(a, b)| a.norm_sqr() - b.norm_sqr()).collect()
}

/// `φ = h_z · conj(h_z̄)` and its holomorphy residual.
pub fn hopf_product(field: &WirtingerField) -> HopfField {
    let phi: Vec<C64> = field.dz.iter().zip(&field.dzbar).map(|(a, b)| a * b.conj()).collect();
    let residual_norm = holomorphy_residual(&field.layout, &field.domain, &phi);
    HopfField { domain: field.domain, layout: field.layout, phi, closed_form: None, residual_norm }
}

/// Discrete L¹ norm of `∂φ/∂z̄` over interior nodes, normalised by the domain area.
pub fn holomorphy_residual(layout: &Layout, domain: &DomainSpec, phi: &[C64]) -> f64 {
    let (_, dzbar) = difference_wirtinger(layout, phi);
    let interior = interior_nodes(layout);
    let total: f64 = (0..layout.len()).filter(|&k| interior[k]).map(|k| dzbar[k].norm() * layout.cell_area(k)).sum();
    total / domain.area()
}

impl HopfField {
    pub fn with_closed_form(mut self, form: HopfClosedForm) -> Self {
        self.closed_form = Some(form);
        self
    }

    /// Recomputes the residual from the stored samples.
    pub fn recompute_residual(&self) -> f64 {
        holomorphy_residual(&self.layout, &self.domain, &self.phi)
    }

    /// `‖φ‖ = ∬ |φ|` with cell-area weights.
    pub fn l1_norm(&self) -> f64 {
        self.phi.iter().enumerate().map(|(k, p)| p.norm() * self.layout.cell_area(k)).sum()
    }
}

/// Stretch along horizontal and vertical trajectories, and the defects of
/// `|∂_H h|·|∂_V h| = |J|` and `|∂_H h|² − |∂_V h|² = 4|φ|`.
#[derive(Debug, Clone)]
pub struct DirectionalDerivatives {
    pub horizontal: Vec<f64>,
    pub vertical: Vec<f64>,
    pub jacobian_defect: Vec<f64>,
    pub hopf_defect: Vec<f64>,
}

/// `∂_H h = h_z + (φ/|φ|) h_z̄` and `∂_V h = h_z − (φ/|φ|) h_z̄`; the direction
/// factor `φ/|φ|` is taken as zero where `φ` vanishes.
pub fn directional_derivatives(field: &WirtingerField, phi: &HopfField) -> Result<DirectionalDerivatives> {
    if phi.phi.len() != field.len() {
        return Err(Error::Parameter("Hopf field and Wirtinger field have different lattices".into()));
    }
    let n = field.len();
    let mut out = DirectionalDerivatives {
        horizontal: Vec::with_capacity(n),
        vertical: Vec::with_capacity(n),
        jacobian_defect: Vec::with_capacity(n),
        hopf_defect: Vec::with_capacity(n),
    };
    for k in 0..n {
        let (a, b, p) = (field.dz[k], field.dzbar[k], phi.phi[k]);
        let dir = if p.norm() > 0.0 { p / p.norm() } else { C64::new(0.0, 0.0) };
        let h = (a + dir * b).norm();
        let v = (a - dir * b).norm();
        let jac = a.norm_sqr() - b.norm_sqr();
        out.horizontal.push(h);
        out.vertical.push(v);
        out.jacobian_defect.push(h * v - jac.abs());
        out.hopf_defect.push(h * h - v * v - 4.0 * p.norm());
    }
    Ok(out)
}

/// Normal and tangential derivatives on a circle, with their integrals.
#[derive(Debug, Clone)]
pub struct NormalTangential {
    pub centre: C64,
    pub radius: f64,
    pub h_n: Vec<C64>,
    pub h_t: Vec<C64>,
    /// `∫ |h_N|² |dz|`.
    pub int_normal: f64,
    /// `∫ |h_T|² |dz|`.
    pub int_tangential: f64,
    /// `∫ |Dh|² |dz|`.
    pub int_energy: f64,
}

impl NormalTangential {
    /// `|∫|h_N|² − ∫|h_T|²| / ∫|Dh|²`.
    pub fn relative_defect(&self) -> f64 {
        (self.int_normal - self.int_tangential).abs() / self.int_energy
    }
}

fn normal_tangential_from(centre: C64, radius: f64, points: &[(C64, C64, C64)]) -> NormalTangential {
    let mut h_n = Vec::with_capacity(points.len());
    let mut h_t = Vec::with_capacity(points.len());
    let (mut s_n, mut s_t, mut s_e) = (0.0, 0.0, 0.0);
    for &(z, a, b) in points {
        let w = z - centre;
        let r = w.norm();
        let n = (w * a + w.conj() * b) / r;
        let t = C64::i() * (w * a - w.conj() * b) / r;
        s_n += n.norm_sqr();
        s_t += t.norm_sqr();
        s_e += 2.0 * (a.norm_sqr() + b.norm_sqr());
        h_n.push(n);
        h_t.push(t);
    }
    // Uniform nodes on a periodic circle: the trapezoid weight is 2πρ/m.
    let w = 2.0 * std::f64::consts::PI * radius / points.len() as f64;
    NormalTangential { centre, radius, h_n, h_t, int_normal: s_n * w, int_tangential: s_t * w, int_energy: s_e * w }
}

/// `h_N = (z h_z + z̄ h_z̄)/|z|` and `h_T = i(z h_z − z̄ h_z̄)/|z|` on the lattice
/// ring nearest `rho` of a polar grid.
pub fn normal_tangential(grid: &MapGrid, rho: f64) -> Result<NormalTangential> {
    let field = wirtinger(grid)?;
    let layout = field.layout;
    let ring = ring_index(&layout, &grid.domain, rho)?;
    let n2 = layout.dims().1;
    let points: Vec<_> = (0..n2)
        .map(|j| {
            let k = layout.index(ring, j);
            (layout.node(k), field.dz[k], field.dzbar[k])
        })
        .collect();
    Ok(normal_tangential_from(C64::new(0.0, 0.0), layout.rho(ring), &points))
}

/// Same quantities on an arbitrary circle `|z − centre| = radius`, sampled at
/// `samples` uniform angles `θ_j = (j + ½)·2π/m` with exact derivatives.
pub fn normal_tangential_on_circle(
    centre: C64,
    radius: f64,
    samples: usize,
    derivatives: impl Fn(C64) -> (C64, C64),
) -> NormalTangential {
    let dt = 2.0 * std::f64::consts::PI / samples as f64;
    let points: Vec<_> = (0..samples)
        .map(|j| {
            let z = centre + C64::from_polar(radius, (j as f64 + 0.5) * dt);
            let (a, b) = derivatives(z);
            (z, a, b)
        })
        .collect();
    normal_tangential_from(centre, radius, &points)
}

fn ring_index(layout: &Layout, domain: &DomainSpec, rho: f64) -> Result<usize> {
    if !layout.is_polar() {
        return Err(Error::Parameter("circle integrals need a polar grid".into()));
    }
    if !(rho > 0.0) || !domain.contains_open(C64::new(rho, 0.0)) {
        return Err(Error::OutsideDomain(C64::new(rho, 0.0)));
    }
    layout.nearest_ring(rho).ok_or(Error::OutsideDomain(C64::new(rho, 0.0)))
}

/// Circular mean of `h` with the circular-mean Lipschitz bound.
#[derive(Debug, Clone, Copy)]
pub struct CircularMean {
    pub radius: f64,
    pub mean: C64,
    /// `‖φ‖ = ∬ |φ|` over the whole grid.
    pub phi_norm: f64,
    /// `|S(ρ)| √π (R − ρ) / (2ρ ‖φ‖^{1/2})` with `R = dist(0, ∂X)`; `None`
    /// when the origin is not in the domain or `φ ≡ 0`.
    pub bound_ratio: Option<f64>,
}

/// `S(ρ)`, the average of `h` over the lattice ring nearest `rho`.
pub fn circular_mean(grid: &MapGrid, rho: f64) -> Result<CircularMean> {
    let layout = grid.layout()?;
    let ring = ring_index(&layout, &grid.domain, rho)?;
    let n2 = layout.dims().1;
    let mean = (0..n2).map(|j| grid.values[layout.index(ring, j)]).sum::<C64>() / n2 as f64;
    let phi_norm = hopf_product(&wirtinger(grid)?).l1_norm();
    let radius = layout.rho(ring);
    let bound_ratio = match grid.domain {
        DomainSpec::Disk { radius: big_r } if phi_norm > 0.0 => {
            Some(mean.norm() * std::f64::consts::PI.sqrt() * (big_r - radius) / (2.0 * radius * phi_norm.sqrt()))
        }
        _ => None,
    };
    Ok(CircularMean { radius, mean, phi_norm, bound_ratio })
}

/// Maximum of `values` over nodes selected by `keep(z)`.
pub fn masked_max(layout: &Layout, values: &[f64], keep: impl Fn(C64) -> bool) -> f64 {
    (0..layout.len()).filter(|&k| layout.inside(k) && keep(layout.node(k))).map(|k| values[k]).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::ExampleMap;
    use crate::geometry::Lattice;
    use std::f64::consts::PI;

    type Deriv = fn(C64) -> (C64, C64);

    fn identity(domain: DomainSpec, lattice: Lattice) -> MapGrid {
        MapGrid::from_fn(domain, lattice, |z| z, None::<Deriv>).unwrap()
    }

    #[test]
    fn affine_maps_are_exact() {
        let a = C64::new(0.7, -0.2);
        let b = C64::new(-0.3, 1.1);
        let c = C64::new(2.0, 0.5);
        for (domain, lattice) in [
            (DomainSpec::annulus(0.5, 2.0).unwrap(), Lattice::polar(12, 20).unwrap()),
            (DomainSpec::unit_disk(), Lattice::polar(9, 16).unwrap()),
            (DomainSpec::unit_disk(), Lattice::cartesian(16, 16).unwrap()),
            (DomainSpec::rectangle(0.0, 2.0, -1.0, 1.0).unwrap(), Lattice::cartesian(10, 13).unwrap()),
        ] {
            let grid = MapGrid::from_fn(domain, lattice, |z| a * z + b * z.conj() + c, None::<Deriv>).unwrap();
            let f = wirtinger(&grid).unwrap();
            assert_eq!(f.provenance, Provenance::CentralDifference);
            for k in 0..f.len() {
                if f.layout.inside(k) {
                    assert!((f.dz[k] - a).norm() < 1e-12, "{k} {}", f.dz[k]);
                    assert!((f.dzbar[k] - b).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn identity_and_conjugate() {
        let domain = DomainSpec::annulus(1.0, 2.0).unwrap();
        let f = wirtinger(&identity(domain, Lattice::polar(16, 32).unwrap())).unwrap();
        assert!(f.dz.iter().all(|d| (d - 1.0).norm() < 1e-13));
        assert!(f.dzbar.iter().all(|d| d.norm() < 1e-13));
        assert!(jacobian(&f).iter().all(|j| (j - 1.0).abs() < 1e-12));
        let conj = MapGrid::from_fn(domain, Lattice::polar(16, 32).unwrap(), |z| z.conj(), None::<Deriv>).unwrap();
        let f = wirtinger(&conj).unwrap();
        assert!(f.dz.iter().all(|d| d.norm() < 1e-13));
        assert!(f.dzbar.iter().all(|d| (d - 1.0).norm() < 1e-13));
    }

    #[test]
    fn identity_energy_on_annulus() {
        let domain = DomainSpec::annulus(1.0, 2.0).unwrap();
        let e = dirichlet_energy(&wirtinger(&identity(domain, Lattice::polar(64, 64).unwrap())).unwrap());
        assert!((e - 6.0 * PI).abs() < 1e-10, "{e}");
    }

    #[test]
    fn analytic_channel_is_copied() {
        let g = MapGrid::from_example(&ExampleMap::butterfly(), Lattice::polar(16, 16).unwrap()).unwrap();
        let f = wirtinger(&g).unwrap();
        assert_eq!(f.provenance, Provenance::Analytic);
        assert_eq!(f.stencil_order, 0);
        assert_eq!(f.dz[5], g.analytic.as_ref().unwrap()[5][0]);
    }

    #[test]
    fn butterfly_jacobian_point() {
        let bf = ExampleMap::butterfly();
        let e = bf.eval(C64::from_polar(0.25, PI)).unwrap();
        assert!((e.dz.norm_sqr() - e.dzbar.norm_sqr() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn hopf_product_of_examples() {
        let bf = ExampleMap::butterfly();
        let g = MapGrid::from_example(&bf, Lattice::polar(64, 128).unwrap()).unwrap();
        let hf = hopf_product(&wirtinger(&g).unwrap());
        let lay = hf.layout;
        let form = bf.analytic_hopf();
        for k in 0..lay.len() {
            let want = form.eval(lay.node(k));
            assert!((hf.phi[k] - want).norm() <= 1e-12 * want.norm().max(1.0));
        }
        assert!(hf.residual_norm <= 1e-10, "{}", hf.residual_norm);
        assert_eq!(hf.recompute_residual(), hf.residual_norm);

        let ham = ExampleMap::hammering(0.5, 2.0).unwrap();
        let g = MapGrid::from_example(&ham, Lattice::polar(64, 128).unwrap()).unwrap();
        let hf = hopf_product(&wirtinger(&g).unwrap());
        for k in 0..lay.len() {
            let z = hf.layout.node(k);
            let want = -0.25 / (z * z);
            assert!((hf.phi[k] - want).norm() <= 1e-12 * want.norm());
        }
    }

    /// `h = z + 0.3|z|²` has `φ = 0.3 z̄ + 0.09 z̄²`, so `∂φ/∂z̄ = 0.3 + 0.18 z̄`;
    /// its normalised L¹ norm over the unit disk is computed by quadrature.
    #[test]
    fn non_solution_residual_stays_positive() {
        let exact = crate::quadrature::polar_integral(C64::new(0.0, 0.0), (0.0, 1.0), (0.0, 2.0 * PI), 8, |z| {
            (0.3 + 0.18 * z.conj()).norm()
        }) / PI;
        let mut prev: Option<f64> = None;
        for n in [32, 64, 128] {
            let g = MapGrid::from_fn(
                DomainSpec::unit_disk(),
                Lattice::polar(n, n).unwrap(),
                |z| z + 0.3 * z.norm_sqr(),
                None::<Deriv>,
            )
            .unwrap();
            let r = hopf_product(&wirtinger(&g).unwrap()).residual_norm;
            // Interior nodes miss the first and last ring, an O(1/n) share of the area.
            assert!((r - exact).abs() < 3.0 * exact / n as f64, "n={n}: {r} vs {exact}");
            if let Some(p) = prev {
                assert!((r - p).abs() < 0.1 * exact);
            }
            prev = Some(r);
        }
    }

    /// The z̄² perturbation leaves `φ = 0.6 z` holomorphic: it is a solution, not a control.
    #[test]
    fn conjugate_square_perturbation_is_a_solution() {
        let g = MapGrid::from_fn(
            DomainSpec::unit_disk(),
            Lattice::cartesian(64, 64).unwrap(),
            |z| z + 0.3 * z.conj() * z.conj(),
            None::<Deriv>,
        )
        .unwrap();
        let r = hopf_product(&wirtinger(&g).unwrap()).residual_norm;
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn directional_identities() {
        let g = identity(DomainSpec::unit_disk(), Lattice::polar(16, 16).unwrap());
        let f = wirtinger(&g).unwrap();
        let d = directional_derivatives(&f, &hopf_product(&f)).unwrap();
        assert!(d.horizontal.iter().chain(&d.vertical).all(|v| (v - 1.0).abs() < 1e-12));
        assert!(d.jacobian_defect.iter().chain(&d.hopf_defect).all(|v| v.abs() < 1e-12));

        let bf = ExampleMap::butterfly();
        let g = MapGrid::from_example(&bf, Lattice::polar(64, 64).unwrap()).unwrap();
        let f = wirtinger(&g).unwrap();
        let d = directional_derivatives(&f, &hopf_product(&f)).unwrap();
        assert!(d.jacobian_defect.iter().chain(&d.hopf_defect).all(|v| v.abs() < 1e-12));

        let ham = ExampleMap::hammering(0.5, 2.0).unwrap();
        let g = MapGrid::from_example(&ham, Lattice::polar(64, 64).unwrap()).unwrap();
        let f = wirtinger(&g).unwrap();
        let d = directional_derivatives(&f, &hopf_product(&f)).unwrap();
        for k in 0..f.len() {
            let z = f.layout.node(k);
            if z.norm() < 1.0 {
                assert!(d.vertical[k] < 1e-12);
                assert!((d.horizontal[k].powi(2) - 1.0 / z.norm_sqr()).abs() < 1e-12 / z.norm_sqr());
            }
        }
    }

    #[test]
    fn stretch_chain_for_every_example() {
        for map in [
            ExampleMap::butterfly(),
            ExampleMap::hammering(0.5, 2.0).unwrap(),
            ExampleMap::piecewise_linear(),
            ExampleMap::power_log(4.0).unwrap(),
        ] {
            let g = MapGrid::from_example(&map, Lattice::polar(32, 64).unwrap()).unwrap();
            let f = wirtinger(&g).unwrap();
            let d = directional_derivatives(&f, &hopf_product(&f)).unwrap();
            for (k, j) in jacobian(&f).iter().enumerate() {
                let scale = 1e-12 * (1.0 + d.horizontal[k].powi(2));
                assert!(d.vertical[k].powi(2) <= j.abs() + scale, "{}", map.name());
                assert!(j.abs() <= d.horizontal[k].powi(2) + scale, "{}", map.name());
            }
        }
    }

    #[test]
    fn zero_phi_convention() {
        let g = identity(DomainSpec::unit_disk(), Lattice::polar(8, 8).unwrap());
        let f = wirtinger(&g).unwrap();
        let mut hf = hopf_product(&f);
        hf.phi.iter_mut().for_each(|p| *p = C64::new(0.0, 0.0));
        let d = directional_derivatives(&f, &hf).unwrap();
        assert!(d.horizontal.iter().zip(&d.vertical).all(|(h, v)| h == v));
    }

    #[test]
    fn circle_integrals_identity() {
        let domain = DomainSpec::annulus(0.5, 2.0).unwrap();
        let g = identity(domain, Lattice::polar(30, 64).unwrap());
        let nt = normal_tangential(&g, 1.2).unwrap();
        assert!((nt.int_normal - 2.0 * PI * nt.radius).abs() < 1e-12);
        assert!((nt.int_tangential - 2.0 * PI * nt.radius).abs() < 1e-12);
        assert!(normal_tangential(&g, 2.5).is_err());
        let cm = circular_mean(&identity(DomainSpec::unit_disk(), Lattice::polar(16, 32).unwrap()), 0.4).unwrap();
        assert!(cm.mean.norm() < 1e-15);
    }

    #[test]
    fn butterfly_equipartition_and_mean() {
        let bf = ExampleMap::butterfly();
        let g = MapGrid::from_example(&bf, Lattice::polar(256, 512).unwrap()).unwrap();
        let nt = normal_tangential(&g, 0.5).unwrap();
        assert!(
            (nt.int_normal - nt.int_tangential).abs() <= 1e-3 * nt.int_normal,
            "{} vs {}",
            nt.int_normal,
            nt.int_tangential
        );
        let cm = circular_mean(&g, 0.25).unwrap();
        let exact = 4.0 * cm.radius.powf(1.5) / (3.0 * PI);
        assert!((cm.mean.re - exact).abs() < 1e-4 && cm.mean.im.abs() < 1e-10, "{}", cm.mean);
    }

    /// For the hammering map the identity needs `zφ` holomorphic inside the
    /// circle. On circles around the origin `∮ zφ dz = −iπ/2`, giving the
    /// defect `∫|h_N|² − ∫|h_T|² = −2π/ρ`; off-centre circles inside the
    /// annulus have none.
    #[test]
    fn hammering_equipartition_needs_a_centre_in_the_domain() {
        let ham = ExampleMap::hammering(0.5, 2.0).unwrap();
        let g = MapGrid::from_example(&ham, Lattice::polar(150, 256).unwrap()).unwrap();
        let nt = normal_tangential(&g, 1.5).unwrap();
        let defect = nt.int_normal - nt.int_tangential;
        assert!((defect + 2.0 * PI / nt.radius).abs() < 1e-10, "{defect}");

        let off = normal_tangential_on_circle(C64::new(1.25, 0.0), 0.6, 4096, |z| ham.derivatives_unchecked(z));
        assert!(off.relative_defect() < 1e-3, "{}", off.relative_defect());
    }
}
