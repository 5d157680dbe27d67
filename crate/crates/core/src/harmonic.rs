//! Discrete harmonic replacement and the dyadic refinement pass.
//!
//! The discrete Dirichlet energy is the weighted 5-point quadratic form
//! `Σ_edges w_e |u_a − u_b|²` with the edge conductances of
//! [`Layout::neighbours`]; harmonic replacement minimises it over the masked
//! nodes with the remaining nodes fixed.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{DomainSpec, Layout};
use crate::grid::MapGrid;
use crate::{Error, Result, C64};

/// Relative residual at which the conjugate-gradient solve stops.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

/// Nodes of an open subdomain `U`, together with its connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainMask {
    pub nodes: Vec<bool>,
    pub connected: bool,
}

impl SubdomainMask {
    /// Validates that the mask is non-empty and that every masked node has
    /// its four lattice neighbours inside the ambient domain.
    pub fn new(layout: &Layout, nodes: Vec<bool>) -> Result<Self> {
        if nodes.len() != layout.len() {
            return Err(Error::Mask(format!("mask has {} nodes, lattice has {}", nodes.len(), layout.len())));
        }
        let mut count = 0;
        for k in (0..nodes.len()).filter(|&k| nodes[k]) {
            count += 1;
            if !layout.inside(k) {
                return Err(Error::Mask(format!("masked node {} is outside the domain", layout.node(k))));
            }
            let nb: Vec<_> = layout.neighbours(k).collect();
            if nb.len() != 4 || nb.iter().any(|&(n, _)| !layout.inside(n)) {
                return Err(Error::Mask(format!("masked node {} touches the domain boundary", layout.node(k))));
            }
        }
        if count == 0 {
            return Err(Error::Mask("empty mask".into()));
        }
        let connected = components(layout, &nodes).len() == 1;
        Ok(SubdomainMask { nodes, connected })
    }

    /// Nodes whose position satisfies `pred`.
    pub fn from_predicate(layout: &Layout, pred: impl Fn(C64) -> bool) -> Result<Self> {
        SubdomainMask::new(layout, (0..layout.len()).map(|k| layout.inside(k) && pred(layout.node(k))).collect())
    }

    pub fn count(&self) -> usize {
        self.nodes.iter().filter(|&&b| b).count()
    }
}

/// 4-connected components of the selected nodes, each in BFS order from its
/// lowest index.
pub fn components(layout: &Layout, selected: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; selected.len()];
    let mut out = Vec::new();
    for start in 0..selected.len() {
        if !selected[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![];
        let mut queue = VecDeque::from([start]);
        while let Some(k) = queue.pop_front() {
            comp.push(k);
            for (n, _) in layout.neighbours(k) {
                if selected[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Discrete energy of all edges with both ends in the domain.
pub fn discrete_energy(layout: &Layout, values: &[C64]) -> f64 {
    (0..layout.len())
        .filter(|&k| layout.inside(k))
        .map(|k| {
            layout
                .neighbours(k)
                .filter(|&(n, _)| n > k && layout.inside(n))
                .map(|(n, w)| w * (values[k] - values[n]).norm_sqr())
                .sum::<f64>()
        })
        .sum()
}

/// Discrete energy of the edges touching the mask.
pub fn mask_energy(layout: &Layout, values: &[C64], mask: &[bool]) -> f64 {
    let mut e = 0.0;
    for k in 0..layout.len() {
        for (n, w) in layout.neighbours(k) {
            if n > k && (mask[k] || mask[n]) {
                e += w * (values[k] - values[n]).norm_sqr();
            }
        }
    }
    e
}

#[derive(Debug, Clone)]
pub struct Replacement {
    pub grid: MapGrid,
    pub energy_before: f64,
    pub energy_after: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Replaces the samples on the mask by the discrete harmonic extension of
/// the surrounding values.
pub fn harmonic_replace(grid: &MapGrid, mask: &SubdomainMask) -> Result<Replacement> {
    let layout = grid.layout()?;
    if mask.nodes.len() != layout.len() {
        return Err(Error::Mask("mask does not match the lattice".into()));
    }
    if !mask.connected {
        return Err(Error::Mask("mask is not connected".into()));
    }
    let cells: Vec<usize> = (0..layout.len()).filter(|&k| mask.nodes[k]).collect();
    let (solution, iterations, residual) = solve_cell(&layout, &grid.values, &mask.nodes, &cells)?;
    let mut values = grid.values.clone();
    for (&k, v) in cells.iter().zip(solution) {
        values[k] = v;
    }
    let energy_before = mask_energy(&layout, &grid.values, &mask.nodes);
    let energy_after = mask_energy(&layout, &values, &mask.nodes);
    let out = MapGrid::new(grid.domain, grid.lattice, values, None)?;
    Ok(Replacement { grid: out, energy_before, energy_after, iterations, residual })
}

/// Jacobi-preconditioned CG for the graph Laplacian on `cells`, starting
/// from the current values. Returns the solution, iterations and the final
/// relative residual.
fn solve_cell(layout: &Layout, values: &[C64], mask: &[bool], cells: &[usize]) -> Result<(Vec<C64>, usize, f64)> {
    let m = cells.len();
    let mut local = vec![usize::MAX; layout.len()];
    for (p, &k) in cells.iter().enumerate() {
        local[k] = p;
    }
    let zero = C64::new(0.0, 0.0);
    let mut diag = vec![0.0; m];
    let mut b = vec![zero; m];
    let mut adj: Vec<Vec<(usize, f64)>> = vec![vec![]; m];
    for (p, &k) in cells.iter().enumerate() {
        for (n, w) in layout.neighbours(k) {
            diag[p] += w;
            if mask[n] {
                adj[p].push((local[n], w));
            } else {
                b[p] += w * values[n];
            }
        }
    }
    let apply = |x: &[C64], out: &mut [C64]| {
        for p in 0..m {
            let mut s = diag[p] * x[p];
            for &(q, w) in &adj[p] {
                s -= w * x[q];
            }
            out[p] = s;
        }
    };
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let norm = |a: &[C64]| -> f64 { a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() };

    let mut x: Vec<C64> = cells.iter().map(|&k| values[k]).collect();
    let mut ax = vec![zero; m];
    apply(&x, &mut ax);
    let mut r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let scale = norm(&b).max(diag.iter().zip(&x).map(|(d, v)| (d * v).norm_sqr()).sum::<f64>().sqrt());
    if scale == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut z: Vec<C64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![zero; m];
    let max_iter = 10 * m + 1000;
    for it in 0..max_iter {
        let rel = norm(&r) / scale;
        if rel <= SOLVER_TOLERANCE {
            return Ok((x, it, rel));
        }
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged { what: "harmonic replacement CG".into(), residual: norm(&r) / scale })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Refinement {
    #[serde(skip)]
    pub refined: Option<MapGrid>,
    pub sup_dev: f64,
    pub energy_delta: f64,
    pub cells: usize,
    pub squares: usize,
    /// Diameter of a fine dyadic square.
    pub square_diameter: f64,
}

/// Whether the closed axis-parallel square `[c ± half]²` lies in the open target.
fn square_inside(target: &DomainSpec, c: C64, half: f64) -> bool {
    let corners =
        [C64::new(-1.0, -1.0), C64::new(1.0, -1.0), C64::new(1.0, 1.0), C64::new(-1.0, 1.0)].map(|d| c + half * d);
    match *target {
        DomainSpec::Disk { radius } => corners.iter().all(|z| z.norm() < radius),
        DomainSpec::Annulus { r_inner, r_outer } => {
            let nearest = C64::new(0f64.clamp(c.re - half, c.re + half), 0f64.clamp(c.im - half, c.im + half));
            corners.iter().all(|z| z.norm() < r_outer) && nearest.norm() > r_inner
        }
        DomainSpec::Rectangle { .. } => corners.iter().all(|z| target.contains_open(*z)),
    }
}

/// One dyadic pass: level-`level` squares `Q` of the target's bounding square
/// whose dilation by one side stays in the target; on each, the interior of
/// the largest 4-connected component of `h⁻¹(Q)` is harmonic-replaced.
pub fn dyadic_refine(grid: &MapGrid, target: &DomainSpec, level: u32) -> Result<Refinement> {
    if level > 6 {
        return Err(Error::Parameter(format!("level {level} exceeds 6")));
    }
    let layout = grid.layout()?;
    let outside = (0..layout.len()).find(|&k| layout.inside(k) && !target.contains(grid.values[k]));
    if let Some(k) = outside {
        return Err(Error::Precondition(format!("grid value {} lies outside the target", grid.values[k])));
    }
    let (x0, x1, y0, y1) = target.bounding_box();
    let side = (x1 - x0).max(y1 - y0);
    let origin = C64::new(0.5 * (x0 + x1) - 0.5 * side, 0.5 * (y0 + y1) - 0.5 * side);
    let per = 1usize << level;
    let s = side / per as f64;

    let kept: Vec<bool> = (0..per * per)
        .map(|q| {
            let c = origin + C64::new(((q / per) as f64 + 0.5) * s, ((q % per) as f64 + 0.5) * s);
            square_inside(target, c, 1.5 * s)
        })
        .collect();
    let mut buckets: Vec<Vec<usize>> = vec![vec![]; per * per];
    let mut label = vec![usize::MAX; layout.len()];
    for k in (0..layout.len()).filter(|&k| layout.inside(k)) {
        let w = (grid.values[k] - origin) / s;
        let (a, b) = (w.re.floor(), w.im.floor());
        if a < 0.0 || b < 0.0 || a >= per as f64 || b >= per as f64 {
            continue;
        }
        let q = a as usize * per + b as usize;
        if kept[q] {
            buckets[q].push(k);
            label[k] = q;
        }
    }

    let updates: Vec<Vec<(Vec<usize>, Vec<C64>)>> = (0..per * per)
        .into_par_iter()
        .map(|q| -> Result<Vec<(Vec<usize>, Vec<C64>)>> {
            if buckets[q].is_empty() {
                return Ok(vec![]);
            }
            let mut sel = vec![false; layout.len()];
            for &k in &buckets[q] {
                sel[k] = true;
            }
            let comps = components(&layout, &sel);
            let largest = comps.iter().max_by_key(|c| c.len()).expect("non-empty");
            let mut in_comp = vec![false; layout.len()];
            for &k in largest {
                in_comp[k] = true;
            }
            let interior: Vec<bool> = (0..layout.len())
                .map(|k| {
                    in_comp[k] && {
                        let nb: Vec<_> = layout.neighbours(k).collect();
                        nb.len() == 4 && nb.iter().all(|&(n, _)| in_comp[n] && label[n] == q)
                    }
                })
                .collect();
            let mut out = vec![];
            for piece in components(&layout, &interior) {
                let mut mask = vec![false; layout.len()];
                for &k in &piece {
                    mask[k] = true;
                }
                let (sol, _, _) = solve_cell(&layout, &grid.values, &mask, &piece)?;
                out.push((piece, sol));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut values = grid.values.clone();
    let mut cells = 0;
    for (piece, sol) in updates.into_iter().flatten() {
        cells += 1;
        for (k, v) in piece.into_iter().zip(sol) {
            values[k] = v;
        }
    }
    let sup_dev = values.iter().zip(&grid.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let energy_delta = discrete_energy(&layout, &values) - discrete_energy(&layout, &grid.values);
    let refined = MapGrid::new(grid.domain, grid.lattice, values, None)?;
    Ok(Refinement {
        refined: Some(refined),
        sup_dev,
        energy_delta,
        cells,
        squares: kept.iter().filter(|&&b| b).count(),
        square_diameter: s * std::f64::consts::SQRT_2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::ExampleMap;
    use crate::geometry::Lattice;
    use nalgebra::{DMatrix, DVector};

    type Deriv = fn(C64) -> (C64, C64);

    fn sample(domain: DomainSpec, lattice: Lattice, f: impl Fn(C64) -> C64 + Sync) -> MapGrid {
        MapGrid::from_fn(domain, lattice, f, None::<Deriv>).unwrap()
    }

    #[test]
    fn mask_validation() {
        let g = sample(DomainSpec::unit_disk(), Lattice::cartesian(32, 32).unwrap(), |z| z);
        let lay = g.layout().unwrap();
        assert!(SubdomainMask::from_predicate(&lay, |z| z.norm() < 0.99).is_err());
        assert!(SubdomainMask::from_predicate(&lay, |_| false).is_err());
        let two = SubdomainMask::from_predicate(&lay, |z| (z.re.abs() - 0.5).abs() < 0.2 && z.im.abs() < 0.2).unwrap();
        assert!(!two.connected);
        assert!(matches!(harmonic_replace(&g, &two), Err(Error::Mask(_))));
    }

    #[test]
    fn linear_maps_are_fixed() {
        for (domain, lattice) in [
            (DomainSpec::unit_disk(), Lattice::cartesian(40, 40).unwrap()),
            (DomainSpec::rectangle(0.0, 2.0, 0.0, 1.0).unwrap(), Lattice::cartesian(30, 17).unwrap()),
        ] {
            let g = sample(domain, lattice, |z| C64::new(0.3, 1.0) * z + 2.0 * z.conj());
            let lay = g.layout().unwrap();
            let mask = SubdomainMask::from_predicate(&lay, |z| (z - C64::new(0.5, 0.4)).norm() < 0.3).unwrap();
            let r = harmonic_replace(&g, &mask).unwrap();
            let dev = r.grid.values.iter().zip(&g.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(dev < 1e-10, "{dev}");
        }
    }

    /// Independent dense solve of the same Dirichlet problem for `|z|²`.
    #[test]
    fn matches_dense_oracle() {
        let g = sample(DomainSpec::unit_disk(), Lattice::cartesian(36, 36).unwrap(), |z| C64::new(z.norm_sqr(), 0.0));
        let lay = g.layout().unwrap();
        let centre = C64::new(0.1, -0.15);
        let mask = SubdomainMask::from_predicate(&lay, |z| (z - centre).norm() < 0.5).unwrap();
        let r = harmonic_replace(&g, &mask).unwrap();

        let cells: Vec<usize> = (0..lay.len()).filter(|&k| mask.nodes[k]).collect();
        let pos = |k: usize| cells.iter().position(|&c| c == k);
        let m = cells.len();
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut b = DVector::<f64>::zeros(m);
        for (p, &k) in cells.iter().enumerate() {
            for (n, w) in lay.neighbours(k) {
                a[(p, p)] += w;
                match pos(n) {
                    Some(q) => a[(p, q)] -= w,
                    None => b[p] += w * g.values[n].re,
                }
            }
        }
        let x = a.lu().solve(&b).unwrap();
        for (p, &k) in cells.iter().enumerate() {
            assert!((r.grid.values[k].re - x[p]).abs() < 1e-8);
            assert!(r.grid.values[k].im.abs() < 1e-12);
        }
        assert!(r.energy_after <= r.energy_before);
    }

    #[test]
    fn energy_decreases_and_is_idempotent() {
        let domain = DomainSpec::annulus(0.5, 2.0).unwrap();
        let g = sample(domain, Lattice::polar(48, 96).unwrap(), |z| z * z.norm() + 0.2 * z.conj() * z.conj());
        let lay = g.layout().unwrap();
        let mask = SubdomainMask::from_predicate(&lay, |z| (z - C64::new(1.2, 0.3)).norm() < 0.5).unwrap();
        let r = harmonic_replace(&g, &mask).unwrap();
        assert!(r.energy_after < r.energy_before);
        let again = harmonic_replace(&r.grid, &mask).unwrap();
        assert_eq!(again.iterations, 0);
        let dev = again.grid.values.iter().zip(&r.grid.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dev <= 10.0 * SOLVER_TOLERANCE);
        // Whole-grid energy changes by exactly the masked part.
        let d_total = discrete_energy(&lay, &r.grid.values) - discrete_energy(&lay, &g.values);
        assert!((d_total - (r.energy_after - r.energy_before)).abs() < 1e-9 * r.energy_before);
    }

    #[test]
    fn maximum_principle() {
        let g = sample(DomainSpec::unit_disk(), Lattice::cartesian(48, 48).unwrap(), |z| {
            C64::new((3.0 * z.re).sin() * z.im, z.norm_sqr())
        });
        let lay = g.layout().unwrap();
        let mask = SubdomainMask::from_predicate(&lay, |z| z.norm() < 0.6).unwrap();
        let r = harmonic_replace(&g, &mask).unwrap();
        let boundary: Vec<C64> = (0..lay.len())
            .filter(|&k| !mask.nodes[k] && lay.neighbours(k).any(|(n, _)| mask.nodes[n]))
            .map(|k| g.values[k])
            .collect();
        let (lo_re, hi_re) = boundary.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v.re), b.max(v.re)));
        let (lo_im, hi_im) = boundary.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v.im), b.max(v.im)));
        for k in (0..lay.len()).filter(|&k| mask.nodes[k]) {
            let v = r.grid.values[k];
            assert!(v.re >= lo_re - 1e-12 && v.re <= hi_re + 1e-12);
            assert!(v.im >= lo_im - 1e-12 && v.im <= hi_im + 1e-12);
        }
    }

    #[test]
    fn dyadic_pass_on_identity_and_butterfly() {
        let g = sample(DomainSpec::unit_disk(), Lattice::cartesian(64, 64).unwrap(), |z| z);
        let r = dyadic_refine(&g, &DomainSpec::unit_disk(), 3).unwrap();
        assert!(r.cells > 0);
        assert!(r.sup_dev <= 1e-10, "{}", r.sup_dev);

        let bf = MapGrid::from_example(&ExampleMap::butterfly(), Lattice::polar(128, 256).unwrap()).unwrap();
        let target = DomainSpec::disk(3.0).unwrap();
        let r = dyadic_refine(&bf, &target, 4).unwrap();
        assert!(r.cells > 0);
        assert!(r.sup_dev <= r.square_diameter);
        assert!(r.energy_delta <= 0.0);
        assert!(dyadic_refine(&bf, &target, 7).is_err());
        assert!(dyadic_refine(&bf, &DomainSpec::unit_disk(), 2).is_err());
    }
}
