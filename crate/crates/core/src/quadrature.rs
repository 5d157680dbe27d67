//! Gauss-Legendre rules for the closed-form integrals used by the checks.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule: `panels` equal panels of `order` points on `[a, b]`.
#[derive(Debug, Clone)]
pub struct Composite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Composite {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * h * xi);
                weights.push(0.5 * h * wi);
            }
        }
        Composite { nodes, weights }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `∬ f dA` over the polar sector `ρ ∈ [ρ₀, ρ₁]`, `θ ∈ [θ₀, θ₁]` around
/// `centre`. The radial variable is substituted as `ρ = s²` so integrands
/// with `√ρ` behaviour at the origin are integrated to full accuracy; the
/// angular rule has nodes strictly inside `(θ₀, θ₁)`.
pub fn polar_integral(
    centre: num_complex::Complex64,
    rho: (f64, f64),
    theta: (f64, f64),
    panels: usize,
    mut f: impl FnMut(num_complex::Complex64) -> f64,
) -> f64 {
    let radial = Composite::new(rho.0.sqrt(), rho.1.sqrt(), panels, 10);
    let angular = Composite::new(theta.0, theta.1, panels, 10);
    let mut total = 0.0;
    for (&s, &ws) in radial.nodes.iter().zip(&radial.weights) {
        let r = s * s;
        // dρ = 2s ds, area element ρ dρ dθ.
        let jac = 2.0 * s * r;
        let mut ring = 0.0;
        for (&t, &wt) in angular.nodes.iter().zip(&angular.weights) {
            ring += wt * f(centre + num_complex::Complex64::from_polar(r, t));
        }
        total += ws * jac * ring;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        let m14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert_relative_eq!(m14, 2.0 / 15.0, epsilon = 1e-14);
        let (x5, _) = gauss_legendre(5);
        assert_relative_eq!(x5[2], 0.0, epsilon = 1e-15);
        assert_relative_eq!(x5[4], 0.906_179_845_938_664, epsilon = 1e-13);
    }

    #[test]
    fn polar_disk_area() {
        let a = polar_integral(num_complex::Complex64::new(0.0, 0.0), (0.0, 1.0), (0.0, 2.0 * PI), 4, |_| 1.0);
        assert_relative_eq!(a, PI, epsilon = 1e-13);
        let m =
            polar_integral(num_complex::Complex64::new(0.0, 0.0), (0.0, 1.0), (0.0, 2.0 * PI), 4, |z| z.norm().sqrt());
        assert_relative_eq!(m, 2.0 * PI / 2.5, epsilon = 1e-12);
    }
}
