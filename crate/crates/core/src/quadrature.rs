//! Gauss–Legendre panels, radial integrals over ℝⁿ, and order-independent sums.

use std::f64::consts::PI;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[order - 1 - i] = x;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .collect();
        half * pairwise_sum(&terms)
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Pairwise (cascade) summation. The result depends only on the order of the
/// input slice, never on how work was scheduled.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Surface area of the unit sphere 𝕊^{n-1} ⊂ ℝⁿ, i.e. 2π^{n/2}/Γ(n/2).
pub fn unit_sphere_area(n: usize) -> f64 {
    assert!(n >= 1);
    // Γ(n/2) by recursion from Γ(1) = 1 or Γ(1/2) = √π.
    let half_gamma = if n % 2 == 0 {
        (1..n / 2).fold(1.0, |acc, k| acc * k as f64)
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x + 0.5 < n as f64 / 2.0 + 1e-12 {
            g *= x;
            x += 1.0;
        }
        g
    };
    2.0 * PI.powf(n as f64 / 2.0) / half_gamma
}

/// Composite rule for ∫₀^R f(r) dr made of Gauss–Legendre panels: one panel on
/// `[0, r_min]` and `nodes_per_decade` nodes for every decade above it.
#[derive(Debug, Clone)]
pub struct RadialRule {
    pub points: Vec<(f64, f64)>,
}

impl RadialRule {
    /// Panels cover `[0, r_max]`; every decade `[10^k, 10^{k+1}]` above `r_min`
    /// is split into `panels_per_decade` panels of `order` nodes each.
    pub fn new(r_min: f64, r_max: f64, order: usize, panels_per_decade: usize) -> Self {
        assert!(r_min > 0.0 && r_max > r_min);
        let gl = GaussLegendre::new(order);
        let mut points = Vec::new();
        // [0, r_min] gets the same density as one decade
        let inner = panels_per_decade.max(1);
        for i in 0..inner {
            let a = r_min * i as f64 / inner as f64;
            let b = r_min * (i + 1) as f64 / inner as f64;
            points.extend(gl.mapped(a, b));
        }
        let decades = (r_max / r_min).log10();
        let panels = (decades * panels_per_decade as f64).ceil().max(1.0) as usize;
        let ratio = (r_max / r_min).powf(1.0 / panels as f64);
        let mut a = r_min;
        for k in 0..panels {
            let b = if k + 1 == panels { r_max } else { a * ratio };
            points.extend(gl.mapped(a, b));
            a = b;
        }
        Self { points }
    }

    /// Default rule: 64 nodes per decade (4 panels of 16) from 1e-3 outward.
    pub fn standard(r_max: f64) -> Self {
        Self::new(1e-3_f64.min(r_max / 10.0), r_max, 16, 4)
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.points.iter().map(|&(r, w)| w * f(r)).collect();
        pairwise_sum(&terms)
    }

    /// ∫_{B_R} g(|y|) dy for a radial integrand in dimension `n`.
    pub fn integrate_radial(&self, n: usize, mut g: impl FnMut(f64) -> f64) -> f64 {
        let area = unit_sphere_area(n);
        area * self.integrate(|r| g(r) * r.powi(n as i32 - 1))
    }
}

/// A quadrature rule on the unit sphere 𝕊^{n-1}: unit directions and weights
/// summing to the sphere's area.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub directions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// For n = 3 a Gauss(cos θ) × trapezoid(φ) product rule; otherwise the
    /// 2n-point cross-polytope design, exact for polynomials of degree ≤ 3.
    pub fn for_dimension(n: usize) -> Self {
        if n == 3 {
            Self::product_s2(8, 16)
        } else {
            Self::cross_polytope(n)
        }
    }

    pub fn product_s2(n_theta: usize, n_phi: usize) -> Self {
        let gl = GaussLegendre::new(n_theta);
        let mut directions = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (&c, &wc) in gl.nodes.iter().zip(&gl.weights) {
            let s = (1.0 - c * c).sqrt();
            for k in 0..n_phi {
                let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                directions.push(vec![s * phi.cos(), s * phi.sin(), c]);
                weights.push(wc * 2.0 * PI / n_phi as f64);
            }
        }
        Self { directions, weights }
    }

    pub fn cross_polytope(n: usize) -> Self {
        let area = unit_sphere_area(n);
        let mut directions = Vec::with_capacity(2 * n);
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut d = vec![0.0; n];
                d[i] = s;
                directions.push(d);
            }
        }
        let weights = vec![area / (2 * n) as f64; 2 * n];
        Self { directions, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let s: f64 = gl.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn radial_rule_on_gaussian() {
        let rule = RadialRule::standard(20.0);
        for n in 3..=6 {
            let v = rule.integrate_radial(n, |r| (-r * r).exp());
            assert!((v - PI.powf(n as f64 / 2.0)).abs() < 1e-12, "n={n} v={v}");
        }
    }

    #[test]
    fn sphere_rules_sum_to_area() {
        for n in 3..=6 {
            let r = SphereRule::for_dimension(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - unit_sphere_area(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
    }
}
