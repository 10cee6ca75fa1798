//! Benchmark quantities of interest.

pub mod ode;

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};

use crate::basis::{basis_id, BasisEvaluator, BasisSpec, MultiIndex, OrderVector};
use crate::error::{arg_err, Error, Result};
use crate::exec::Exec;
use crate::polynomials::PolyFamily;
use crate::rng::Rng;

type Evaluator = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;

/// A named scalar function of `d` independent inputs.
#[derive(Clone)]
pub struct QoiSpec {
    pub name: String,
    pub families: Vec<PolyFamily>,
    evaluator: Evaluator,
}

impl fmt::Debug for QoiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QoiSpec").field("name", &self.name).field("d", &self.dim()).finish()
    }
}

impl QoiSpec {
    pub fn new<F>(name: impl Into<String>, families: Vec<PolyFamily>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Self { name: name.into(), families, evaluator: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        self.families.len()
    }

    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dim() {
            return arg_err(format!("{} takes {} inputs, got {}", self.name, self.dim(), xi.len()));
        }
        let v = (self.evaluator)(xi)?;
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("{} returned {v} at {xi:?}", self.name)));
        }
        Ok(v)
    }

    pub fn eval_batch(&self, points: &[&[f64]], exec: Exec) -> Result<Vec<f64>> {
        exec.try_map(points.len(), |i| self.eval(points[i]))
    }
}

/// Franke's bivariate test function on `[0, 1]²`.
pub fn franke(xi: &[f64]) -> f64 {
    let (x, y) = (9.0 * xi[0], 9.0 * xi[1]);
    0.75 * (-(x - 2.0).powi(2) / 4.0 - (y - 2.0).powi(2) / 4.0).exp()
        + 0.75 * (-(x + 1.0).powi(2) / 49.0 - (y + 1.0) / 10.0).exp()
        + 0.5 * (-(x - 7.0).powi(2) / 4.0 - (y - 3.0).powi(2) / 4.0).exp()
        - 0.2 * (-(x - 4.0).powi(2) - (y - 7.0).powi(2)).exp()
}

/// `exp(2 − Σ_k sin(k) ξ_k / k)` with `k` counted from 1.
pub fn sine_decay(xi: &[f64]) -> f64 {
    let s: f64 = xi.iter().enumerate().map(|(i, x)| {
        let k = (i + 1) as f64;
        k.sin() * x / k
    }).sum();
    (2.0 - s).exp()
}

pub const ADSORPTION_KAPPA: f64 = 10.0;
pub const ADSORPTION_RHO0: f64 = 0.9;
pub const ADSORPTION_T_END: f64 = 4.0;

/// Adsorption rates `(α, γ)` for standard-normal inputs.
pub fn adsorption_rates(xi: &[f64]) -> Result<(f64, f64)> {
    let alpha = 0.1 + (10.0 * xi[0]).exp();
    let gamma = 0.001 + 0.001 * (10.0 * xi[1]).exp();
    if !(alpha.is_finite() && gamma.is_finite()) {
        return Err(Error::Evaluation(format!("adsorption rates overflow at {xi:?}")));
    }
    Ok((alpha, gamma))
}

/// `ρ(4)` for `ρ' = α(1 − ρ) − γρ − κ(1 − ρ)²ρ`, `ρ(0) = 0.9`.
pub fn surface_adsorption(xi: &[f64]) -> Result<f64> {
    let (a, g) = adsorption_rates(xi)?;
    let k = ADSORPTION_KAPPA;
    let tol = ode::Tolerances::default();
    if a > 1e8 {
        // In z = 1 − ρ the equilibrium z ≈ γ/α keeps full relative precision.
        let rhs = |z: f64| {
            let f = -a * z + g * (1.0 - z) + k * z * z * (1.0 - z);
            let df = -a - g + k * (2.0 * z - 3.0 * z * z);
            (f, df)
        };
        let z = ode::integrate(rhs, 1.0 - ADSORPTION_RHO0, ADSORPTION_T_END, tol)?;
        Ok(1.0 - z)
    } else {
        let rhs = |r: f64| {
            let u = 1.0 - r;
            let f = a * u - g * r - k * u * u * r;
            let df = -a - g - k * (u * u - 2.0 * u * r);
            (f, df)
        };
        ode::integrate(rhs, ADSORPTION_RHO0, ADSORPTION_T_END, tol)
    }
}

/// A polynomial chaos expansion used as a QoI with known coefficients.
#[derive(Debug, Clone)]
pub struct PlantedPolynomial {
    pub basis: BasisSpec,
    pub coefficients: Vec<f64>,
}

impl PlantedPolynomial {
    pub fn new(basis: BasisSpec, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return arg_err(format!(
                "{} coefficients for a basis of {}",
                coefficients.len(),
                basis.len()
            ));
        }
        Ok(Self { basis, coefficients })
    }

    /// Random anisotropic polynomial in `d` Legendre dimensions on `[-1, 1]`
    /// with at most `max_terms` terms, always including the constant.
    pub fn random(d: usize, max_terms: usize, rng: &mut Rng) -> Result<Self> {
        if d == 0 || max_terms == 0 {
            return arg_err("planted polynomial needs d >= 1 and at least one term");
        }
        let fam = vec![PolyFamily::LegendreUniform { lo: -1.0, hi: 1.0 }; d];
        // Orders decrease with the dimension index.
        let p: Vec<f64> = (0..d).map(|i| (4usize.saturating_sub(i / 2)).max(1) as f64 + rng.random_range(0..2) as f64).collect();
        let full = basis_id(&OrderVector(p), &fam)?;
        let mut others: Vec<MultiIndex> = full.indices().iter().filter(|k| !k.is_zero()).cloned().collect();
        others.shuffle(rng);
        others.truncate(max_terms - 1);
        others.push(MultiIndex::zero());
        let basis = BasisSpec::from_indices(fam, others)?;
        let coefficients = basis
            .indices()
            .iter()
            .map(|k| {
                let mag = 2f64.powi(-(k.total_order() as i32));
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * mag * rng.random_range(0.5..1.5)
            })
            .collect();
        Self::new(basis, coefficients)
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        let ev = BasisEvaluator::new(&self.basis);
        let mut row = vec![0.0; ev.len()];
        ev.eval_into(xi, &mut row, &mut ev.scratch());
        row.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum()
    }

    pub fn into_qoi(self, name: impl Into<String>) -> QoiSpec {
        let families = self.basis.families().to_vec();
        QoiSpec::new(name, families, move |xi| Ok(self.eval(xi)))
    }
}

pub const PLANTED_SEED: u64 = 20_240_917;

fn unit(d: usize) -> Vec<PolyFamily> {
    vec![PolyFamily::LegendreUniform { lo: 0.0, hi: 1.0 }; d]
}

/// Named QoIs with their default dimensions.
pub fn qoi_registry() -> Vec<QoiSpec> {
    ["franke", "sine_decay", "surface_adsorption", "plantedpoly"]
        .iter()
        .map(|n| lookup(n, None).expect("registered QoI"))
        .collect()
}

/// Look up a QoI by name; `d` overrides the dimension where it is free.
pub fn lookup(name: &str, d: Option<usize>) -> Result<QoiSpec> {
    let fixed = |n: usize| -> Result<()> {
        match d {
            Some(k) if k != n => arg_err(format!("{name} has dimension {n}, not {k}")),
            _ => Ok(()),
        }
    };
    match name {
        "franke" => {
            fixed(2)?;
            Ok(QoiSpec::new(name, unit(2), |x| Ok(franke(x))))
        }
        "sine_decay" => {
            let d = d.unwrap_or(20);
            if d == 0 {
                return arg_err("sine_decay needs d >= 1");
            }
            Ok(QoiSpec::new(name, unit(d), |x| Ok(sine_decay(x))))
        }
        "surface_adsorption" => {
            fixed(2)?;
            Ok(QoiSpec::new(name, vec![PolyFamily::HermiteGaussian; 2], surface_adsorption))
        }
        "plantedpoly" => {
            let d = d.unwrap_or(5);
            let mut rng = Rng::seed_from_u64(PLANTED_SEED ^ d as u64);
            Ok(PlantedPolynomial::random(d, 40, &mut rng)?.into_qoi(name))
        }
        _ => Err(Error::Lookup(format!("unknown QoI {name:?}"))),
    }
}
