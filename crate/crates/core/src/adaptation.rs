//! The adaptive iteration: alternate basis validation and sample growth.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::basis::{basis_id, basis_upper_bound, envelope, BasisEvaluator, BasisSpec, OrderVector};
use crate::error::{arg_err, Error, Result};
use crate::exec::Exec;
use crate::qoi::QoiSpec;
use crate::rng::{tag, Streams};
use crate::sampling::{
    coherence_optimal_pool, draw_orthogonality, orthogonality_pool, sample_expand, McmcConfig, SamplePoint,
    SamplePool,
};
use crate::solver::DesignSystem;
use crate::validation::{
    basis_validate, cross_validate, CvConfig, ReferenceSet, ValidateParams, ValidatedFit, INITIAL_ANCHOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Coherence-optimal sampling with correction samples after each basis change.
    SampleAdaptive,
    /// I.i.d. draws from the input distribution with unit weights.
    Orthogonality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gamma: f64,
    pub dim_add: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub max_strikes: usize,
    pub max_iterations: usize,
    pub sample_mode: SampleMode,
    pub use_order_bound: bool,
    /// Initial sample count; `2 |B₀|` when unset.
    pub n0: Option<usize>,
    pub p0: usize,
    /// Keep the basis fixed at total order `p` in every dimension.
    pub fixed_order: Option<usize>,
    pub seed: u64,
    pub max_evaluations: Option<usize>,
    pub wall_budget_secs: Option<f64>,
    /// Stop once the cross-validated error falls to this level.
    pub target_cv: Option<f64>,
    /// Size of the i.i.d. reference set used to report the true RRMSE.
    pub n_ref: Option<usize>,
    pub record_wall_time: bool,
    pub cv: CvConfig,
    pub mcmc: McmcConfig,
    pub exec: Exec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 1.5,
            dim_add: 20,
            min_ratio: 0.25,
            max_ratio: 1.0,
            max_strikes: 6,
            max_iterations: 10,
            sample_mode: SampleMode::SampleAdaptive,
            use_order_bound: false,
            n0: None,
            p0: 1,
            fixed_order: None,
            seed: 0,
            max_evaluations: None,
            wall_budget_secs: None,
            target_cv: None,
            n_ref: None,
            record_wall_time: true,
            cv: CvConfig::default(),
            mcmc: McmcConfig::default(),
            exec: Exec::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return arg_err(format!("gamma must exceed 1, got {}", self.gamma));
        }
        if !(self.min_ratio > 0.0 && self.min_ratio <= self.max_ratio && self.max_ratio.is_finite()) {
            return arg_err(format!(
                "need 0 < min_ratio <= max_ratio, got {} and {}",
                self.min_ratio, self.max_ratio
            ));
        }
        if self.target_cv.is_some_and(|t| !(t >= 0.0)) {
            return arg_err("target_cv must be nonnegative");
        }
        if self.wall_budget_secs.is_some_and(|b| !(b.is_finite() && b >= 0.0)) {
            return arg_err("wall_budget_secs must be finite and nonnegative");
        }
        if self.max_strikes == 0 {
            return arg_err("max_strikes must be positive");
        }
        self.cv.validate()
    }
}

/// `û(ξ) = Σ ĉ_k ψ_k(ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub basis: BasisSpec,
    pub c_hat: Vec<f64>,
    pub cv_rrmse: f64,
}

impl Surrogate {
    pub fn predict(&self, xi: &[f64]) -> Result<f64> {
        let row = self.basis.eval(xi)?;
        Ok(row.iter().zip(&self.c_hat).map(|(a, b)| a * b).sum())
    }

    pub fn predict_batch(&self, points: &[&[f64]], exec: Exec) -> Vec<f64> {
        let ev = BasisEvaluator::new(&self.basis);
        exec.map(points.len(), |i| {
            let mut row = vec![0.0; ev.len()];
            ev.eval_into(points[i], &mut row, &mut ev.scratch());
            row.iter().zip(&self.c_hat).map(|(a, b)| a * b).sum()
        })
    }
}

/// Mean and variance of an orthonormal expansion: the constant coefficient and
/// the sum of the remaining squared coefficients.
pub fn moments(surrogate: &Surrogate) -> Result<(f64, f64)> {
    let Some(k0) = surrogate.basis.constant_position() else {
        return arg_err("moments need the constant function in the basis");
    };
    let var = surrogate
        .c_hat
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != k0)
        .map(|(_, c)| c * c)
        .sum();
    Ok((surrogate.c_hat[k0], var))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub n_samples: usize,
    pub n_basis: usize,
    pub cv_rrmse: f64,
    pub ref_rrmse: Option<f64>,
    pub delta_star: f64,
    pub wall_time: f64,
}

/// Starting basis, pool, QoI values and fit.
#[derive(Debug, Clone)]
pub struct Initial {
    pub basis: BasisSpec,
    pub pool: SamplePool,
    pub values: Vec<f64>,
    pub fit: ValidatedFit,
}

/// Total order `p0` over the first `min(d, dim_add)` dimensions, or the fixed
/// total-order basis when one is configured.
pub fn initial_basis(cfg: &RunConfig, qoi: &QoiSpec) -> Result<BasisSpec> {
    let d = qoi.dim();
    let p = match cfg.fixed_order {
        Some(p) => OrderVector::isotropic(d, p as f64),
        None => {
            let active = d.min(cfg.dim_add.max(1));
            OrderVector((0..d).map(|i| if i < active { cfg.p0 as f64 } else { 0.0 }).collect())
        }
    };
    basis_id(&p, &qoi.families)
}

pub fn initialize(cfg: &RunConfig, qoi: &QoiSpec) -> Result<Initial> {
    cfg.validate()?;
    let streams = Streams::new(cfg.seed);
    let basis = initial_basis(cfg, qoi)?;
    let n0 = cfg.n0.unwrap_or(2 * basis.len()).max(5);
    let mut rng = streams.stream(tag::INIT, 0);
    let pool = match cfg.sample_mode {
        SampleMode::SampleAdaptive => coherence_optimal_pool(&basis, n0, &cfg.mcmc, &mut rng, cfg.exec)?,
        SampleMode::Orthogonality => orthogonality_pool(&qoi.families, n0, &mut rng),
    };
    let values = qoi.eval_batch(&pool.inputs(), cfg.exec)?;
    let sys = DesignSystem::new(&basis, &pool.inputs(), &pool.row_factors(), &values, cfg.exec)?;
    let fit = cross_validate(&sys, &cfg.cv, INITIAL_ANCHOR, &mut streams.stream(tag::CV, 0))?;
    Ok(Initial { basis, pool, values, fit })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// The surrogate with the lowest cross-validated error across iterations.
    pub surrogate: Surrogate,
    pub records: Vec<IterationRecord>,
    /// The surrogate after each iteration, aligned with `records`.
    pub history: Vec<Surrogate>,
    pub pool: SamplePool,
    pub values: Vec<f64>,
}

/// A failed run with the records completed before the failure.
#[derive(Debug)]
pub struct Aborted {
    pub error: Error,
    pub records: Vec<IterationRecord>,
}

impl std::fmt::Display for Aborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted after {} records: {}", self.records.len(), self.error)
    }
}

impl std::error::Error for Aborted {}

pub fn base_pc_loop(cfg: &RunConfig, qoi: &QoiSpec) -> Result<RunOutput, Aborted> {
    base_pc_loop_with(cfg, qoi, |_| Ok(()))
}

/// Run the iteration, handing each record to `sink` as soon as it exists.
pub fn base_pc_loop_with<S>(cfg: &RunConfig, qoi: &QoiSpec, mut sink: S) -> Result<RunOutput, Aborted>
where
    S: FnMut(&IterationRecord) -> Result<()>,
{
    let mut records = Vec::new();
    match run(cfg, qoi, &mut records, &mut sink) {
        Ok(out) => Ok(out),
        Err(error) => Err(Aborted { error, records }),
    }
}

fn run<S>(cfg: &RunConfig, qoi: &QoiSpec, records: &mut Vec<IterationRecord>, sink: &mut S) -> Result<RunOutput>
where
    S: FnMut(&IterationRecord) -> Result<()>,
{
    let start = Instant::now();
    let streams = Streams::new(cfg.seed);
    let reference = match cfg.n_ref {
        Some(n) => Some(ReferenceSet::draw(qoi, n, &mut streams.stream(tag::REFERENCE, 0), cfg.exec)?),
        None => None,
    };
    let Initial { mut basis, mut pool, mut values, mut fit } = initialize(cfg, qoi)?;
    if let Some(cap) = cfg.max_evaluations {
        if pool.len() > cap {
            return arg_err(format!("initial sample of {} exceeds the evaluation budget {cap}", pool.len()));
        }
    }
    let mut history = Vec::new();
    let mut push = |iter: usize,
                    basis: &BasisSpec,
                    fit: &ValidatedFit,
                    n: usize,
                    records: &mut Vec<IterationRecord>,
                    history: &mut Vec<Surrogate>|
     -> Result<()> {
        let sur = Surrogate { basis: basis.clone(), c_hat: fit.c_hat.clone(), cv_rrmse: fit.cv_rrmse };
        let ref_rrmse = match &reference {
            Some(r) => Some(r.rrmse(&sur, cfg.exec)?),
            None => None,
        };
        let rec = IterationRecord {
            iter,
            n_samples: n,
            n_basis: basis.len(),
            cv_rrmse: fit.cv_rrmse,
            ref_rrmse,
            delta_star: fit.delta_star,
            wall_time: if cfg.record_wall_time { start.elapsed().as_secs_f64() } else { 0.0 },
        };
        sink(&rec)?;
        records.push(rec);
        history.push(sur);
        Ok(())
    };
    push(0, &basis, &fit, pool.len(), records, &mut history)?;

    let mut bound: Option<OrderVector> = None;
    for k in 1..=cfg.max_iterations {
        if cfg.wall_budget_secs.is_some_and(|b| start.elapsed().as_secs_f64() >= b)
            || cfg.target_cv.is_some_and(|t| fit.cv_rrmse <= t)
        {
            break;
        }
        let n = pool.len();
        let (mut lo, mut hi) = (cfg.min_ratio, cfg.max_ratio);
        if let Some(cap) = cfg.max_evaluations {
            let room = cap.saturating_sub(n);
            if room == 0 {
                break;
            }
            let fill = room as f64 / n as f64;
            hi = hi.min(fill);
            lo = lo.min(fill);
        }
        let anchor = [fit.delta_star, fit.cv_rrmse, 1e-12]
            .into_iter()
            .filter(|v| v.is_finite())
            .fold(f64::MIN_POSITIVE, f64::max);
        let mut cv_rng = streams.stream(tag::CV, k as u64);
        let next = if cfg.fixed_order.is_some() {
            basis.clone()
        } else {
            let params = ValidateParams {
                max_strikes: cfg.max_strikes,
                gamma: cfg.gamma,
                dim_add: cfg.dim_add,
                bound: bound.clone(),
                deadline: cfg.wall_budget_secs.map(|b| start + Duration::from_secs_f64(b)),
            };
            basis_validate(&basis, &fit, &pool, &values, &cfg.cv, &params, anchor, &mut cv_rng)?.basis
        };

        let mut sample_rng = streams.stream(tag::SAMPLE, k as u64);
        let before = pool.len();
        match cfg.sample_mode {
            SampleMode::SampleAdaptive => {
                pool = sample_expand(&pool, &basis, &next, lo, hi, &cfg.mcmc, &mut sample_rng, cfg.exec)?.pool;
            }
            SampleMode::Orthogonality => {
                let m = ((lo * n as f64) - 1e-9).ceil().max(1.0) as usize;
                let m = m.min(((hi * n as f64) + 1e-9).floor().max(1.0) as usize);
                let epoch = pool.newest_epoch() + 1;
                pool.points.extend(
                    draw_orthogonality(&qoi.families, m, &mut sample_rng)
                        .into_iter()
                        .map(|xi| SamplePoint { xi, weight: 1.0, epoch }),
                );
            }
        }
        let fresh: Vec<&[f64]> = pool.points[before..].iter().map(|p| p.xi.as_slice()).collect();
        values.extend(qoi.eval_batch(&fresh, cfg.exec)?);

        basis = next;
        let sys = DesignSystem::new(&basis, &pool.inputs(), &pool.row_factors(), &values, cfg.exec)?;
        fit = cross_validate(&sys, &cfg.cv, anchor, &mut cv_rng)?;
        pool.consume_correction();
        if cfg.use_order_bound {
            bound = Some(basis_upper_bound(&envelope(&basis)?, cfg.dim_add)?);
        }
        push(k, &basis, &fit, pool.len(), records, &mut history)?;
    }

    let best = history
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cv_rrmse.total_cmp(&b.1.cv_rrmse).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least the initial record");
    Ok(RunOutput { surrogate: history[best].clone(), records: records.clone(), history, pool, values })
}
