//! Sampled complex maps on a lattice, with an optional exact-derivative
//! channel, and their JSON form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::examples::ExampleMap;
use crate::geometry::{DomainSpec, Lattice, Layout};
use crate::{Error, Result, C64};

/// Samples of a map `h` at the nodes of a lattice.
///
/// Cartesian lattices cover the domain's bounding box; samples at nodes
/// outside the domain are stored as zero and ignored by every operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapGrid {
    pub domain: DomainSpec,
    pub lattice: Lattice,
    #[serde(with = "complex_seq")]
    pub values: Vec<C64>,
    /// Exact `(h_z, h_z̄)` per node when the grid was sampled from a closed form.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "analytic_seq")]
    pub analytic: Option<Vec<[C64; 2]>>,
}

impl MapGrid {
    pub fn new(
        domain: DomainSpec,
        lattice: Lattice,
        values: Vec<C64>,
        analytic: Option<Vec<[C64; 2]>>,
    ) -> Result<Self> {
        let grid = MapGrid { domain, lattice, values, analytic };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        let layout = self.layout()?;
        if self.values.len() != layout.len() {
            return Err(Error::Parameter(format!(
                "grid has {} values for a {}x{} lattice",
                self.values.len(),
                self.lattice.n1,
                self.lattice.n2
            )));
        }
        if let Some(a) = &self.analytic {
            if a.len() != layout.len() {
                return Err(Error::Parameter("analytic channel length does not match the lattice".into()));
            }
            if a.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("analytic channel".into()));
            }
        }
        if self.values.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("grid values".into()));
        }
        Ok(())
    }

    /// Samples `value` (and, when given, the exact derivatives) at every
    /// in-domain node.
    pub fn from_fn<F, D>(domain: DomainSpec, lattice: Lattice, value: F, derivatives: Option<D>) -> Result<Self>
    where
        F: Fn(C64) -> C64 + Sync,
        D: Fn(C64) -> (C64, C64) + Sync,
    {
        let layout = lattice.layout(&domain)?;
        let zero = C64::new(0.0, 0.0);
        let values = (0..layout.len())
            .into_par_iter()
            .map(|k| if layout.inside(k) { value(layout.node(k)) } else { zero })
            .collect();
        let analytic = derivatives.map(|d| {
            (0..layout.len())
                .into_par_iter()
                .map(|k| {
                    if layout.inside(k) {
                        let (a, b) = d(layout.node(k));
                        [a, b]
                    } else {
                        [zero, zero]
                    }
                })
                .collect()
        });
        MapGrid::new(domain, lattice, values, analytic)
    }

    /// Samples an example map on its own domain, filling the analytic channel.
    pub fn from_example(map: &ExampleMap, lattice: Lattice) -> Result<Self> {
        MapGrid::from_fn(map.domain, lattice, |z| map.value_unchecked(z), Some(|z| map.derivatives_unchecked(z)))
    }

    pub fn layout(&self) -> Result<Layout> {
        self.lattice.layout(&self.domain)
    }

    pub fn without_analytic(mut self) -> Self {
        self.analytic = None;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let grid: MapGrid = serde_json::from_str(s)?;
        grid.validate()?;
        Ok(grid)
    }
}

/// Bilinear interpolation of node samples at `z`. Polar lattices wrap in θ
/// and clamp in ρ; Cartesian lattices require all four surrounding nodes to
/// lie in the domain.
pub fn interpolate(layout: &Layout, samples: &[C64], z: C64) -> Option<C64> {
    match *layout {
        Layout::Polar { rho0, drho, dtheta, n1, n2 } => {
            let rho = z.norm();
            let mut theta = z.im.atan2(z.re);
            if theta < 0.0 {
                theta += 2.0 * std::f64::consts::PI;
            }
            let x = ((rho - rho0) / drho - 0.5).clamp(0.0, (n1 - 1) as f64);
            let i0 = (x.floor() as usize).min(n1.saturating_sub(2));
            let tx = x - i0 as f64;
            let y = theta / dtheta - 0.5;
            let yf = y.floor();
            let ty = y - yf;
            let j0 = (yf as isize).rem_euclid(n2 as isize) as usize;
            let j1 = (j0 + 1) % n2;
            let i1 = (i0 + 1).min(n1 - 1);
            let at = |i: usize, j: usize| samples[layout.index(i, j)];
            Some(
                at(i0, j0) * (1.0 - tx) * (1.0 - ty)
                    + at(i1, j0) * tx * (1.0 - ty)
                    + at(i0, j1) * (1.0 - tx) * ty
                    + at(i1, j1) * tx * ty,
            )
        }
        Layout::Cartesian { x0, dx, y0, dy, n1, n2, .. } => {
            let x = (z.re - x0) / dx - 0.5;
            let y = (z.im - y0) / dy - 0.5;
            if x < 0.0 || y < 0.0 || x > (n1 - 1) as f64 || y > (n2 - 1) as f64 {
                return None;
            }
            let i0 = (x.floor() as usize).min(n1 - 2);
            let j0 = (y.floor() as usize).min(n2 - 2);
            let (tx, ty) = (x - i0 as f64, y - j0 as f64);
            let ks = [
                layout.index(i0, j0),
                layout.index(i0 + 1, j0),
                layout.index(i0, j0 + 1),
                layout.index(i0 + 1, j0 + 1),
            ];
            if !ks.iter().all(|&k| layout.inside(k)) {
                return None;
            }
            Some(
                samples[ks[0]] * (1.0 - tx) * (1.0 - ty)
                    + samples[ks[1]] * tx * (1.0 - ty)
                    + samples[ks[2]] * (1.0 - tx) * ty
                    + samples[ks[3]] * tx * ty,
            )
        }
    }
}

fn finite_pair<E: serde::ser::Error>(c: &C64) -> std::result::Result<[f64; 2], E> {
    if c.is_finite() {
        Ok([c.re, c.im])
    } else {
        Err(E::custom(format!("non-finite complex value {c}")))
    }
}

/// `Vec<C64>` as `[[re, im], ...]`, refusing NaN and infinities.
pub mod complex_seq {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for c in v {
            seq.serialize_element(&finite_pair::<S::Error>(c)?)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        let raw: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

mod analytic_seq {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<[C64; 2]>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = v.as_ref().expect("skipped when absent");
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for [a, b] in v {
            seq.serialize_element(&[finite_pair::<S::Error>(a)?, finite_pair::<S::Error>(b)?])?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<[C64; 2]>>, D::Error> {
        let raw: Option<Vec<[[f64; 2]; 2]>> = Option::deserialize(d)?;
        Ok(raw.map(|v| v.into_iter().map(|[[a, b], [c, e]]| [C64::new(a, b), C64::new(c, e)]).collect()))
    }
}
