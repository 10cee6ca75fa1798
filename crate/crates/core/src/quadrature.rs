//! Gauss quadrature rules for the input densities (Golub–Welsch).
//!
//! The Jacobi matrices are built from the closed-form recurrence coefficients of
//! the classical families, independently of the evaluation code in
//! [`crate::polynomials`]. Nodes are polished with Newton steps on the
//! classical recurrence.

use nalgebra::DMatrix;

use crate::polynomials::PolyFamily;

/// Nodes and weights; the weights sum to one (probability measure).
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `n`-point Gauss rule for the density of `family`.
pub fn gauss_rule(family: &PolyFamily, n: usize) -> GaussRule {
    assert!(n >= 1);
    let offdiag = |k: usize| -> f64 {
        let k = k as f64;
        match family {
            PolyFamily::LegendreUniform { .. } => k / (4.0 * k * k - 1.0).sqrt(),
            PolyFamily::HermiteGaussian => k.sqrt(),
        }
    };
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = offdiag(k);
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (x, w) in pairs.iter_mut() {
        *x = polish(family, n, *x);
        *w = 1.0 / christoffel(family, n, *x);
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let (mut nodes, weights): (Vec<f64>, Vec<f64>) =
        pairs.into_iter().map(|(x, w)| (x, w / total)).unzip();
    if let PolyFamily::LegendreUniform { lo, hi } = *family {
        for x in nodes.iter_mut() {
            *x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * *x;
        }
    }
    GaussRule { nodes, weights }
}

// Newton refinement of a root of the degree-n classical polynomial (Legendre
// P_n or Hermite He_n, scaled to stay bounded).
fn polish(family: &PolyFamily, n: usize, mut x: f64) -> f64 {
    for _ in 0..3 {
        let (p, dp) = classical(family, n, x);
        if dp == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() < 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

// Sum of squared orthonormal polynomials of orders 0..n at x; the reciprocal is
// the Gauss weight at a node.
fn christoffel(family: &PolyFamily, n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    let mut sum = 1.0;
    for k in 1..n {
        let kf = k as f64;
        match family {
            PolyFamily::LegendreUniform { .. } => {
                sum += (2.0 * kf + 1.0) * p1 * p1;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            PolyFamily::HermiteGaussian => {
                sum += p1 * p1;
                let p2 = (x * p1 - kf.sqrt() * p0) / (kf + 1.0).sqrt();
                p0 = p1;
                p1 = p2;
            }
        }
    }
    sum
}

fn classical(family: &PolyFamily, n: usize, x: f64) -> (f64, f64) {
    match family {
        PolyFamily::LegendreUniform { .. } => {
            let (mut p0, mut p1) = (1.0, x);
            if n == 0 {
                return (1.0, 0.0);
            }
            for k in 1..n {
                let k = k as f64;
                let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let nf = n as f64;
            let dp = nf * (x * p1 - p0) / (x * x - 1.0);
            (p1, dp)
        }
        PolyFamily::HermiteGaussian => {
            // He_k / sqrt(k!) keeps magnitudes moderate; the ratio p/dp is unchanged.
            let (mut h0, mut h1) = (1.0, x);
            if n == 0 {
                return (1.0, 0.0);
            }
            for k in 1..n {
                let k = k as f64;
                let h2 = (x * h1 - k.sqrt() * h0) / (k + 1.0).sqrt();
                h0 = h1;
                h1 = h2;
            }
            // d/dx He_n = n He_{n-1}  =>  in scaled form sqrt(n) * h_{n-1}
            (h1, (n as f64).sqrt() * h0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_monomials() {
        let rule = gauss_rule(&PolyFamily::LegendreUniform { lo: -1.0, hi: 1.0 }, 8);
        // E[x^k] under U(-1,1) is 1/(k+1) for even k.
        for k in 0..16 {
            let exact = if k % 2 == 0 { 1.0 / (k as f64 + 1.0) } else { 0.0 };
            let got = rule.integrate(|x| x.powi(k));
            assert!((got - exact).abs() < 1e-14, "k={k}: {got} vs {exact}");
        }
    }

    #[test]
    fn hermite_rule_integrates_moments() {
        let rule = gauss_rule(&PolyFamily::HermiteGaussian, 10);
        // E[x^{2m}] = (2m-1)!!
        let mut dfact = 1.0;
        for m in 0..10 {
            if m > 0 {
                dfact *= (2 * m - 1) as f64;
            }
            let got = rule.integrate(|x| x.powi(2 * m));
            assert!((got - dfact).abs() <= 1e-10 * dfact, "m={m}: {got} vs {dfact}");
        }
    }

    #[test]
    fn shifted_interval() {
        let rule = gauss_rule(&PolyFamily::LegendreUniform { lo: 0.0, hi: 1.0 }, 5);
        assert!((rule.integrate(|x| x * x) - 1.0 / 3.0).abs() < 1e-15);
    }
}
