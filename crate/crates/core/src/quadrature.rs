//! Gauss-Legendre rules and the cumulative radial integrals built on them.

use std::f64::consts::PI;

/// An `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pn1 = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            if n == 1 {
                x = 0.0;
                dp = 1.0;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n == 1 {
            weights[0] = 2.0;
        }
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Cumulative integrals `I_i = ∫_{nodes[0]}^{nodes[i]} f` where `f(i, r)`
/// is evaluated inside interval `i = [nodes[i], nodes[i+1]]`.
///
/// Every interval is split into `splits` panels.
pub fn cumulative<F>(nodes: &[f64], f: F, rule: &GaussRule, splits: usize) -> Vec<f64>
where
    F: Fn(usize, f64) -> f64,
{
    let mut out = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 0..nodes.len().saturating_sub(1) {
        let (a, b) = (nodes[i], nodes[i + 1]);
        if b > a {
            let w = (b - a) / splits as f64;
            for s in 0..splits {
                let lo = a + w * s as f64;
                let hi = if s + 1 == splits { b } else { lo + w };
                acc += rule.integrate(lo, hi, |r| f(i, r));
            }
        }
        out.push(acc);
    }
    out
}

/// `∫_R^∞ f(r) dr` through the substitution `x = R/r`.
pub fn tail_integral<F: Fn(f64) -> f64>(r_cut: f64, f: F, rule: &GaussRule) -> f64 {
    let g = |x: f64| if x <= 0.0 { 0.0 } else { f(r_cut / x) * r_cut / (x * x) };
    rule.integrate(0.0, 0.5, g) + rule.integrate(0.5, 1.0, g)
}
