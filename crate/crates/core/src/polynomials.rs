//! Orthonormal one-dimensional polynomial families.
//!
//! Both families are evaluated with the orthonormal three-term recurrence, so
//! no intermediate value is ever the (possibly huge) monic or classical
//! polynomial. Legendre inputs on `[lo, hi]` are mapped affinely to `[-1, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::quadrature;

/// Highest order accepted per dimension.
pub const MAX_ORDER: usize = 512;

/// Input distribution of one coordinate together with its orthonormal family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolyFamily {
    /// Legendre polynomials, orthonormal for the uniform density on `[lo, hi]`.
    LegendreUniform { lo: f64, hi: f64 },
    /// Probabilists' Hermite polynomials, orthonormal for the standard normal.
    HermiteGaussian,
}

impl PolyFamily {
    pub fn legendre(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return arg_err(format!("Legendre interval [{lo}, {hi}] is empty or non-finite"));
        }
        Ok(PolyFamily::LegendreUniform { lo, hi })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PolyFamily::LegendreUniform { lo, hi } => Self::legendre(lo, hi).map(|_| ()),
            PolyFamily::HermiteGaussian => Ok(()),
        }
    }

    /// Density of the input distribution at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            PolyFamily::LegendreUniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            PolyFamily::HermiteGaussian => {
                (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
        }
    }

    /// Evaluate orders `0..out.len()` at `x` into `out`, without checks.
    pub(crate) fn fill(&self, x: f64, out: &mut [f64]) {
        let n = out.len();
        if n == 0 {
            return;
        }
        out[0] = 1.0;
        if n == 1 {
            return;
        }
        match *self {
            PolyFamily::LegendreUniform { lo, hi } => {
                let t = (2.0 * x - lo - hi) / (hi - lo);
                out[1] = 3f64.sqrt() * t;
                for k in 1..n - 1 {
                    let kf = k as f64;
                    let a = (2.0 * kf + 3.0).sqrt() / (kf + 1.0);
                    out[k + 1] = a
                        * ((2.0 * kf + 1.0).sqrt() * t * out[k]
                            - kf / (2.0 * kf - 1.0).sqrt() * out[k - 1]);
                }
            }
            PolyFamily::HermiteGaussian => {
                out[1] = x;
                for k in 1..n - 1 {
                    let kf = k as f64;
                    out[k + 1] = (x * out[k] - kf.sqrt() * out[k - 1]) / (kf + 1.0).sqrt();
                }
            }
        }
    }
}

/// Values of orders `0..=p` of `family` at `xi`.
pub fn basis_eval_1d(family: &PolyFamily, p: usize, xi: f64) -> Result<Vec<f64>> {
    check_order(p)?;
    if !xi.is_finite() {
        return arg_err(format!("evaluation point {xi} is not finite"));
    }
    let mut out = vec![0.0; p + 1];
    family.fill(xi, &mut out);
    Ok(out)
}

pub(crate) fn check_order(p: usize) -> Result<()> {
    if p > MAX_ORDER {
        return arg_err(format!("order {p} exceeds the supported maximum {MAX_ORDER}"));
    }
    Ok(())
}

/// Cached one-dimensional evaluations: `values[k][j]` is order `k` at point `j`.
#[derive(Debug, Clone)]
pub struct EvalTable {
    pub family: PolyFamily,
    pub values: Vec<Vec<f64>>,
}

impl EvalTable {
    pub fn new(family: PolyFamily, p: usize, points: &[f64]) -> Result<Self> {
        check_order(p)?;
        let mut values = vec![vec![0.0; points.len()]; p + 1];
        let mut col = vec![0.0; p + 1];
        for (j, &x) in points.iter().enumerate() {
            if !x.is_finite() {
                return arg_err(format!("evaluation point {x} is not finite"));
            }
            family.fill(x, &mut col);
            for (k, v) in col.iter().enumerate() {
                values[k][j] = *v;
            }
        }
        Ok(Self { family, values })
    }

    pub fn order(&self) -> usize {
        self.values.len() - 1
    }
}

/// Largest deviation of the Gram matrix of orders `0..=p` from the identity,
/// integrated against the family density with a Gauss rule exact to degree `2p+3`.
pub fn quad_orthonormality_check(family: &PolyFamily, p: usize) -> Result<f64> {
    if p > 60 {
        return arg_err(format!("orthonormality check supports p <= 60, got {p}"));
    }
    family.validate()?;
    let rule = quadrature::gauss_rule(family, p + 2);
    let mut gram = vec![vec![0.0; p + 1]; p + 1];
    let mut vals = vec![0.0; p + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        family.fill(x, &mut vals);
        for i in 0..=p {
            for j in 0..=i {
                gram[i][j] += w * vals[i] * vals[j];
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..=p {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[i][j] - target).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assert_close;

    const L11: PolyFamily = PolyFamily::LegendreUniform { lo: -1.0, hi: 1.0 };

    #[test]
    fn legendre_at_one() {
        let v = basis_eval_1d(&L11, 2, 1.0).unwrap();
        assert_close!(v[0], 1.0, 1e-15);
        assert_close!(v[1], 3f64.sqrt(), 1e-14);
        assert_close!(v[2], 5f64.sqrt(), 1e-14);
        let v = basis_eval_1d(&L11, 30, 1.0).unwrap();
        for (k, x) in v.iter().enumerate() {
            assert_close!(*x, ((2 * k + 1) as f64).sqrt(), 1e-12);
        }
    }

    #[test]
    fn hermite_at_zero() {
        let v = basis_eval_1d(&PolyFamily::HermiteGaussian, 2, 0.0).unwrap();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 0.0);
        assert_close!(v[2], -1.0 / 2f64.sqrt(), 1e-15);
    }

    #[test]
    fn order_zero_is_constant() {
        for fam in [L11, PolyFamily::HermiteGaussian] {
            assert_eq!(basis_eval_1d(&fam, 0, 0.37).unwrap(), vec![1.0]);
            assert!(quad_orthonormality_check(&fam, 0).unwrap() <= 1e-14);
        }
    }

    #[test]
    fn hermite_parity() {
        let h = PolyFamily::HermiteGaussian;
        for &x in &[0.3, 1.7, 2.9] {
            let a = basis_eval_1d(&h, 30, x).unwrap();
            let b = basis_eval_1d(&h, 30, -x).unwrap();
            for k in 0..=30 {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                assert_close!(b[k], sign * a[k], 1e-12 * a[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn shifted_legendre_matches_reference_interval() {
        let f01 = PolyFamily::legendre(0.0, 1.0).unwrap();
        let a = basis_eval_1d(&f01, 6, 0.8).unwrap();
        let b = basis_eval_1d(&L11, 6, 0.6).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_close!(*x, *y, 1e-14);
        }
    }

    #[test]
    fn outside_support_still_evaluates() {
        let v = basis_eval_1d(&L11, 3, 1.5).unwrap();
        // P_2(1.5) = (3*2.25 - 1)/2 = 2.875
        assert_close!(v[2], 5f64.sqrt() * 2.875, 1e-13);
    }

    #[test]
    fn orthonormality_examples() {
        assert!(quad_orthonormality_check(&L11, 10).unwrap() <= 1e-10);
        assert!(quad_orthonormality_check(&PolyFamily::HermiteGaussian, 10).unwrap() <= 1e-8);
        for fam in [L11, PolyFamily::legendre(0.0, 1.0).unwrap(), PolyFamily::HermiteGaussian] {
            assert!(quad_orthonormality_check(&fam, 30).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn argument_errors() {
        assert!(basis_eval_1d(&L11, 3, f64::NAN).is_err());
        assert!(basis_eval_1d(&L11, MAX_ORDER + 1, 0.0).is_err());
        assert!(PolyFamily::legendre(1.0, 1.0).is_err());
        assert!(quad_orthonormality_check(&L11, 61).is_err());
    }

    #[test]
    fn high_order_hermite_is_finite() {
        let v = basis_eval_1d(&PolyFamily::HermiteGaussian, MAX_ORDER, 30.0).unwrap();
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn eval_table_layout() {
        let t = EvalTable::new(L11, 3, &[1.0, -1.0]).unwrap();
        assert_eq!(t.order(), 3);
        assert_eq!(t.values[0], vec![1.0, 1.0]);
        assert_close!(t.values[1][1], -3f64.sqrt(), 1e-14);
    }
}
