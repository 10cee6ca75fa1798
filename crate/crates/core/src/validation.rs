//! Cross-validated tolerance selection and basis validation.

use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use crate::adaptation::Surrogate;
use crate::basis::{basis_contract, basis_expand, BasisEvaluator, BasisSpec, OrderVector};
use crate::error::{arg_err, Error, Result};
use crate::exec::Exec;
use crate::qoi::QoiSpec;
use crate::rng::Rng;
use crate::sampling::{draw_orthogonality, SamplePool};
use crate::solver::{bpdn_path, BpdnSolution, DesignSystem, GramSystem, RowSystem};

/// Anchor for the tolerance grid before any fit exists.
pub const INITIAL_ANCHOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub holdout_fraction: f64,
    pub n_tolerances: usize,
    pub exec: Exec,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { folds: 24, holdout_fraction: 0.2, n_tolerances: 20, exec: Exec::default() }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds == 0 || self.n_tolerances == 0 {
            return arg_err("cross-validation needs at least one fold and one tolerance");
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return arg_err(format!("holdout fraction {} must lie in (0, 1)", self.holdout_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedFit {
    /// Coefficients solved on every row at `delta_star`.
    pub c_hat: Vec<f64>,
    pub delta_star: f64,
    pub cv_rrmse: f64,
}

impl ValidatedFit {
    /// Placeholder score for a candidate that could not be fitted.
    pub fn failed(n: usize) -> Self {
        Self { c_hat: vec![0.0; n], delta_star: f64::NAN, cv_rrmse: f64::INFINITY }
    }
}

/// `0` followed by `n` tolerances spaced geometrically over
/// `[anchor / 10, anchor · 10]`.
pub fn delta_grid(anchor: f64, n: usize) -> Result<Vec<f64>> {
    if !(anchor.is_finite() && anchor > 0.0) {
        return arg_err(format!("tolerance anchor must be positive, got {anchor}"));
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let (lo, hi) = ((anchor / 10.0).log10(), (anchor * 10.0).log10());
    for i in 0..n {
        let t = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
        out.push(10f64.powf(lo + t * (hi - lo)));
    }
    if n > 1 {
        out[1] = anchor / 10.0;
        out[n] = anchor * 10.0;
    }
    Ok(out)
}

pub fn delta_candidates(anchor: f64) -> Result<Vec<f64>> {
    delta_grid(anchor, CvConfig::default().n_tolerances)
}

/// Random holdout sets. Rows sharing a group are always held out together;
/// each fold holds out `round(fraction · groups)` groups, at least one and
/// never all.
pub fn draw_folds(groups: &[usize], cfg: &CvConfig, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    let n_groups = groups.iter().copied().max().map_or(0, |g| g + 1);
    if n_groups < 2 {
        return arg_err(format!("cross-validation needs at least 2 distinct rows, got {n_groups}"));
    }
    let h = ((cfg.holdout_fraction * n_groups as f64).round() as usize).clamp(1, n_groups - 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
    for (row, &g) in groups.iter().enumerate() {
        members[g].push(row);
    }
    Ok((0..cfg.folds)
        .map(|_| {
            let mut rows: Vec<usize> = sample_indices(rng, n_groups, h)
                .into_iter()
                .flat_map(|g| members[g].iter().copied())
                .collect();
            rows.sort_unstable();
            rows
        })
        .collect())
}

/// Select `δ` by cross-validation and refit on all rows.
pub fn cross_validate(sys: &DesignSystem, cfg: &CvConfig, anchor: f64, rng: &mut Rng) -> Result<ValidatedFit> {
    cfg.validate()?;
    if sys.rows() < 5 {
        return arg_err(format!("cross-validation needs at least 5 rows, got {}", sys.rows()));
    }
    let folds = draw_folds(&sys.groups, cfg, rng)?;
    cross_validate_with_folds(sys, cfg, anchor, &folds)
}

/// [`cross_validate`] with caller-supplied holdout sets.
pub fn cross_validate_with_folds(
    sys: &DesignSystem,
    cfg: &CvConfig,
    anchor: f64,
    folds: &[Vec<usize>],
) -> Result<ValidatedFit> {
    let deltas = delta_grid(anchor, cfg.n_tolerances)?;
    for hold in folds {
        if hold.is_empty() || hold.len() >= sys.rows() {
            return arg_err("each fold must hold out some but not all rows");
        }
    }
    // Gram statistics pay off while the Gram matrix is no larger than the design.
    let gram = (sys.cols() <= sys.rows()).then(|| GramSystem::from_design(sys));
    let paths = |f: usize| -> Result<Vec<BpdnSolution>> {
        match &gram {
            Some(full) => bpdn_path(&full.without_rows(sys, &folds[f]), &deltas),
            None => bpdn_path(&RowSystem::select(sys, &complement(sys.rows(), &folds[f])), &deltas),
        }
    };
    let scores = cfg.exec.try_map(folds.len(), |f| Ok::<_, Error>(fold_errors(sys, &folds[f], &paths(f)?)))?;
    let mut best: Option<(usize, f64)> = None;
    for (k, _) in deltas.iter().enumerate() {
        let mean = scores.iter().map(|s| s[k]).sum::<f64>() / folds.len() as f64;
        if mean.is_finite() && best.is_none_or(|(_, b)| mean < b) {
            best = Some((k, mean));
        }
    }
    let Some((k, cv)) = best else {
        return Err(Error::Validation("no tolerance produced a converged fit on every fold".into()));
    };
    let sol = match &gram {
        Some(full) => bpdn_path(full, &[deltas[k]])?,
        None => bpdn_path(&RowSystem::from_design(sys), &[deltas[k]])?,
    };
    let sol = sol.into_iter().next().expect("one solution");
    Ok(ValidatedFit { c_hat: sol.c_hat, delta_star: deltas[k], cv_rrmse: cv })
}

fn complement(n: usize, hold: &[usize]) -> Vec<usize> {
    let mut keep = vec![true; n];
    for &i in hold {
        keep[i] = false;
    }
    (0..n).filter(|&i| keep[i]).collect()
}

// Relative holdout error for every tolerance; non-converged solves score +∞.
fn fold_errors(sys: &DesignSystem, hold: &[usize], sols: &[BpdnSolution]) -> Vec<f64> {
    let bh: Vec<f64> = hold.iter().map(|&i| sys.rhs[i]).collect();
    let nb = bh.iter().map(|v| v * v).sum::<f64>().sqrt();
    sols.iter()
        .map(|s| {
            if !s.converged {
                return f64::INFINITY;
            }
            let nz: Vec<(usize, f64)> =
                s.c_hat.iter().copied().enumerate().filter(|(_, c)| *c != 0.0).collect();
            let err = hold
                .iter()
                .zip(&bh)
                .map(|(&i, b)| {
                    let pred: f64 = nz.iter().map(|&(j, c)| sys.matrix[(i, j)] * c).sum();
                    (b - pred).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            if nb > 0.0 {
                err / nb
            } else if err == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Knobs for [`basis_validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateParams {
    pub max_strikes: usize,
    pub gamma: f64,
    pub dim_add: usize,
    pub bound: Option<OrderVector>,
    /// Stop the search once this instant has passed, keeping the best so far.
    #[serde(skip)]
    pub deadline: Option<Instant>,
}

/// Outcome of [`basis_validate`].
#[derive(Debug, Clone)]
pub struct Validated {
    pub basis: BasisSpec,
    pub fit: ValidatedFit,
    /// Distinct candidate bases that were cross-validated.
    pub candidates: usize,
}

/// Search the expansions of successively contracted versions of `basis0`
/// for the one with the lowest cross-validated error on the current pool.
#[allow(clippy::too_many_arguments)]
pub fn basis_validate(
    basis0: &BasisSpec,
    fit0: &ValidatedFit,
    pool: &SamplePool,
    values: &[f64],
    cfg: &CvConfig,
    params: &ValidateParams,
    anchor: f64,
    rng: &mut Rng,
) -> Result<Validated> {
    if fit0.c_hat.len() != basis0.len() {
        return arg_err(format!("{} coefficients for a basis of {}", fit0.c_hat.len(), basis0.len()));
    }
    if values.len() != pool.len() {
        return arg_err(format!("{} QoI values for a pool of {}", values.len(), pool.len()));
    }
    let points = pool.inputs();
    let factors = pool.row_factors();
    let mut best: Option<(BasisSpec, ValidatedFit)> = None;
    let mut prev: Option<BasisSpec> = None;
    let mut strikes = 0;
    let mut candidates = 0;
    for m in 0..basis0.len() {
        if best.is_some() && params.deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let contracted = basis_contract(basis0, &fit0.c_hat, m)?;
        let cand = basis_expand(&contracted, params.gamma, params.dim_add, params.bound.as_ref())?;
        if prev.as_ref().is_some_and(|p| p.same_members(&cand)) {
            continue;
        }
        candidates += 1;
        let fit = DesignSystem::new(&cand, &points, &factors, values, cfg.exec)
            .and_then(|sys| cross_validate(&sys, cfg, anchor, rng))
            .unwrap_or_else(|_| ValidatedFit::failed(cand.len()));
        let improves = best.as_ref().is_none_or(|(_, b)| fit.cv_rrmse < b.cv_rrmse);
        if improves {
            best = Some((cand.clone(), fit));
            strikes = 0;
        } else {
            strikes += 1;
            if strikes >= params.max_strikes {
                break;
            }
        }
        prev = Some(cand);
    }
    let (basis, fit) = best.ok_or_else(|| Error::Validation("no candidate basis was evaluated".into()))?;
    Ok(Validated { basis, fit, candidates })
}

/// I.i.d. inputs with their QoI values, for estimating the true RRMSE.
#[derive(Debug, Clone)]
pub struct ReferenceSet {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl ReferenceSet {
    pub fn draw(qoi: &QoiSpec, n: usize, rng: &mut Rng, exec: Exec) -> Result<Self> {
        if n == 0 {
            return arg_err("reference set needs at least one point");
        }
        let points = draw_orthogonality(&qoi.families, n, rng);
        let refs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
        let values = qoi.eval_batch(&refs, exec)?;
        Ok(Self { points, values })
    }

    /// `√Σ(û − u)² / √Σu²`.
    pub fn rrmse(&self, surrogate: &Surrogate, exec: Exec) -> Result<f64> {
        let ev = BasisEvaluator::new(&surrogate.basis);
        let nz: Vec<(usize, f64)> =
            surrogate.c_hat.iter().copied().enumerate().filter(|(_, c)| *c != 0.0).collect();
        let chunk = 1024;
        let chunks = self.points.len().div_ceil(chunk);
        let parts = exec.map(chunks, |c| {
            let mut row = vec![0.0; ev.len()];
            let mut scratch = ev.scratch();
            let (mut num, mut den) = (0.0, 0.0);
            let end = ((c + 1) * chunk).min(self.points.len());
            for i in c * chunk..end {
                ev.eval_into(&self.points[i], &mut row, &mut scratch);
                let pred: f64 = nz.iter().map(|&(j, v)| row[j] * v).sum();
                num += (pred - self.values[i]).powi(2);
                den += self.values[i].powi(2);
            }
            (num, den)
        });
        let (num, den) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        if den <= 0.0 {
            return Err(Error::Undefined("reference QoI values are all zero".into()));
        }
        Ok((num / den).sqrt())
    }
}

/// Monte Carlo estimate of the relative RMS error of `surrogate`.
pub fn reference_rrmse(surrogate: &Surrogate, qoi: &QoiSpec, n_ref: usize, rng: &mut Rng, exec: Exec) -> Result<f64> {
    if n_ref < 1000 {
        return arg_err(format!("reference sets need at least 1000 points, got {n_ref}"));
    }
    ReferenceSet::draw(qoi, n_ref, rng, exec)?.rrmse(surrogate, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::basis_id;
    use crate::polynomials::PolyFamily;
    use crate::rng::Streams;
    use crate::sampling::{coherence_optimal_pool, McmcConfig};
    use rand::Rng as _;

    fn leg(d: usize) -> Vec<PolyFamily> {
        vec![PolyFamily::LegendreUniform { lo: -1.0, hi: 1.0 }; d]
    }

    fn rng(i: u64) -> Rng {
        Streams::new(3).stream(70, i)
    }

    fn cfg() -> CvConfig {
        CvConfig { exec: Exec::Sequential, ..Default::default() }
    }

    #[test]
    fn candidate_grid() {
        let g = delta_candidates(1.0).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 0.1);
        assert_eq!(g[20], 10.0);
        let ratio = g[2] / g[1];
        for w in g[1..].windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
        let g = delta_candidates(0.01).unwrap();
        assert!((g[1] - 0.001).abs() < 1e-18 && (g[20] - 0.1).abs() < 1e-16);
        assert!(delta_candidates(0.0).is_err());
    }

    fn planted_system(n: usize, seed: u64) -> (DesignSystem, BasisSpec) {
        let b = basis_id(&OrderVector(vec![3.0, 3.0]), &leg(2)).unwrap();
        let pool = coherence_optimal_pool(&b, n, &McmcConfig::default(), &mut rng(seed), Exec::Sequential).unwrap();
        let values: Vec<f64> = pool
            .points
            .iter()
            .map(|p| {
                let row = b.eval(&p.xi).unwrap();
                row[0] + 0.5 * row[2] - 0.25 * row[7]
            })
            .collect();
        let sys = DesignSystem::new(&b, &pool.inputs(), &pool.row_factors(), &values, Exec::Sequential).unwrap();
        (sys, b)
    }

    #[test]
    fn noiseless_selects_zero() {
        let (sys, _) = planted_system(30, 1);
        let fit = cross_validate(&sys, &cfg(), INITIAL_ANCHOR, &mut rng(2)).unwrap();
        assert_eq!(fit.delta_star, 0.0);
        assert!(fit.cv_rrmse <= 1e-6, "{}", fit.cv_rrmse);
        assert!((fit.c_hat[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn noise_only_fit() {
        let b = basis_id(&OrderVector(vec![2.0]), &leg(1)).unwrap();
        let mut r = rng(3);
        let pts: Vec<Vec<f64>> = (0..60).map(|_| vec![r.random_range(-1.0..1.0)]).collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let values: Vec<f64> = (0..60).map(|_| r.random_range(-1.0..1.0)).collect();
        let sys = DesignSystem::new(&b, &refs, &vec![1.0; 60], &values, Exec::Sequential).unwrap();
        let fit = cross_validate(&sys, &cfg(), INITIAL_ANCHOR, &mut rng(4)).unwrap();
        assert!(fit.cv_rrmse > 0.8 && fit.cv_rrmse < 1.3, "{}", fit.cv_rrmse);
        assert!(fit.delta_star > 0.5);
    }

    #[test]
    fn duplicated_rows_are_grouped() {
        let (sys, b) = planted_system(30, 5);
        let n = sys.rows();
        let mut pts = Vec::new();
        let mut vals = Vec::new();
        let mut r = rng(6);
        let base: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect();
        for p in &base {
            for _ in 0..2 {
                pts.push(p.clone());
                vals.push((3.0 * p[0]).sin() + p[1]);
            }
        }
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let dup = DesignSystem::new(&b, &refs, &vec![1.0; 2 * n], &vals, Exec::Sequential).unwrap();
        assert_eq!(dup.groups(), n);
        let single: Vec<&[f64]> = base.iter().map(|p| p.as_slice()).collect();
        let svals: Vec<f64> = vals.iter().step_by(2).copied().collect();
        let one = DesignSystem::new(&b, &single, &vec![1.0; n], &svals, Exec::Sequential).unwrap();
        let a = cross_validate(&one, &cfg(), INITIAL_ANCHOR, &mut rng(7)).unwrap();
        let d = cross_validate(&dup, &cfg(), INITIAL_ANCHOR, &mut rng(7)).unwrap();
        assert_eq!(a.delta_star, d.delta_star);
        assert!((a.cv_rrmse - d.cv_rrmse).abs() < 1e-9);
    }

    #[test]
    fn folds_hold_out_whole_groups() {
        let groups = vec![0, 0, 1, 2, 2, 2, 3, 4, 5, 6];
        let folds = draw_folds(&groups, &cfg(), &mut rng(8)).unwrap();
        assert_eq!(folds.len(), 24);
        for f in &folds {
            let held: std::collections::BTreeSet<usize> = f.iter().map(|&i| groups[i]).collect();
            assert_eq!(held.len(), 1);
            for g in held {
                assert!(groups.iter().enumerate().filter(|(_, x)| **x == g).all(|(i, _)| f.contains(&i)));
            }
        }
        assert!(draw_folds(&[0, 0, 0], &cfg(), &mut rng(8)).is_err());
    }

    #[test]
    fn permutation_invariance_with_fixed_folds() {
        let (sys, b) = planted_system(40, 9);
        let mut noisy = sys.clone();
        let mut r = rng(10);
        for v in noisy.rhs.iter_mut() {
            *v += 0.01 * r.random_range(-1.0..1.0);
        }
        let folds = draw_folds(&noisy.groups, &cfg(), &mut rng(11)).unwrap();
        let a = cross_validate_with_folds(&noisy, &cfg(), INITIAL_ANCHOR, &folds).unwrap();
        let n = noisy.rows();
        let perm: Vec<usize> = (0..n).rev().collect();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let pm = noisy.matrix.select_rows(&perm);
        let pr = nalgebra::DVector::from_iterator(n, perm.iter().map(|&i| noisy.rhs[i]));
        let psys = DesignSystem::from_parts(b, pm, pr).unwrap();
        let pfolds: Vec<Vec<usize>> = folds.iter().map(|f| f.iter().map(|&i| inv[i]).collect()).collect();
        let c = cross_validate_with_folds(&psys, &cfg(), INITIAL_ANCHOR, &pfolds).unwrap();
        assert!((a.cv_rrmse - c.cv_rrmse).abs() <= 1e-12 * a.cv_rrmse.max(1.0), "{} {}", a.cv_rrmse, c.cv_rrmse);
        assert_eq!(a.delta_star, c.delta_star);
    }

    #[test]
    fn parallel_matches_sequential() {
        let (sys, _) = planted_system(30, 12);
        let a = cross_validate(&sys, &cfg(), 0.1, &mut rng(13)).unwrap();
        let p = cross_validate(&sys, &CvConfig { exec: Exec::Parallel, ..cfg() }, 0.1, &mut rng(13)).unwrap();
        assert_eq!(a, p);
    }

    fn planted_pool(b: &BasisSpec, n: usize, seed: u64) -> (SamplePool, Vec<f64>) {
        let pool = coherence_optimal_pool(b, n, &McmcConfig::default(), &mut rng(seed), Exec::Sequential).unwrap();
        let values = pool.points.iter().map(|p| 1.0 + p.xi[0] * p.xi[0] * p.xi[1] - 0.3 * p.xi[1]).collect();
        (pool, values)
    }

    #[test]
    fn validate_recovers_planted_support() {
        let b0 = basis_id(&OrderVector(vec![2.0, 2.0]), &leg(2)).unwrap();
        let (pool, values) = planted_pool(&b0, 40, 14);
        let sys = DesignSystem::new(&b0, &pool.inputs(), &pool.row_factors(), &values, Exec::Sequential).unwrap();
        let fit0 = cross_validate(&sys, &cfg(), INITIAL_ANCHOR, &mut rng(15)).unwrap();
        let params = ValidateParams { max_strikes: 6, gamma: 1.5, dim_add: 2, bound: None, deadline: None };
        let v = basis_validate(&b0, &fit0, &pool, &values, &cfg(), &params, INITIAL_ANCHOR, &mut rng(16)).unwrap();
        let need = crate::basis::MultiIndex::from_dense(&[2, 1]);
        assert!(v.basis.contains(&need));
        assert!(v.fit.cv_rrmse <= 1e-6, "{}", v.fit.cv_rrmse);
        let again = basis_validate(&b0, &fit0, &pool, &values, &cfg(), &params, INITIAL_ANCHOR, &mut rng(16)).unwrap();
        assert!(again.basis.same_members(&v.basis));
        assert_eq!(again.fit, v.fit);
    }

    #[test]
    fn strikes_bound_candidates() {
        let b0 = basis_id(&OrderVector(vec![3.0, 3.0]), &leg(2)).unwrap();
        let (pool, values) = planted_pool(&b0, 40, 17);
        let fit0 = ValidatedFit { c_hat: vec![1.0; b0.len()], delta_star: 0.0, cv_rrmse: 1.0 };
        let params = ValidateParams { max_strikes: 6, gamma: 1.01, dim_add: 0, bound: None, deadline: None };
        let v = basis_validate(&b0, &fit0, &pool, &values, &cfg(), &params, INITIAL_ANCHOR, &mut rng(18)).unwrap();
        assert!(v.candidates <= b0.len());
        assert!(v.candidates >= 1);
    }

    #[test]
    fn passed_deadline_stops_after_first_candidate() {
        let b0 = basis_id(&OrderVector(vec![3.0, 3.0]), &leg(2)).unwrap();
        let (pool, values) = planted_pool(&b0, 40, 17);
        let fit0 = ValidatedFit { c_hat: vec![1.0; b0.len()], delta_star: 0.0, cv_rrmse: 1.0 };
        let params =
            ValidateParams { max_strikes: 6, gamma: 1.5, dim_add: 0, bound: None, deadline: Some(Instant::now()) };
        let v = basis_validate(&b0, &fit0, &pool, &values, &cfg(), &params, INITIAL_ANCHOR, &mut rng(18)).unwrap();
        assert_eq!(v.candidates, 1);
    }

    #[test]
    fn reference_error_examples() {
        let fam = leg(1);
        let b = basis_id(&OrderVector(vec![1.0]), &fam).unwrap();
        let qoi = QoiSpec::new("lin", fam, |x| Ok(3f64.sqrt() * x[0]));
        let exact = Surrogate { basis: b.clone(), c_hat: vec![0.0, 1.0], cv_rrmse: 0.0 };
        let e = reference_rrmse(&exact, &qoi, 2000, &mut rng(19), Exec::Sequential).unwrap();
        assert!(e < 1e-12);
        let zero = Surrogate { basis: b.clone(), c_hat: vec![0.0, 0.0], cv_rrmse: 0.0 };
        assert!((reference_rrmse(&zero, &qoi, 2000, &mut rng(20), Exec::Sequential).unwrap() - 1.0).abs() < 1e-12);
        let shifted = Surrogate { basis: b, c_hat: vec![0.05, 1.0], cv_rrmse: 0.0 };
        let e = reference_rrmse(&shifted, &qoi, 20_000, &mut rng(21), Exec::Sequential).unwrap();
        assert!((e - 0.05).abs() < 0.002, "{e}");
        assert!(reference_rrmse(&exact, &qoi, 10, &mut rng(22), Exec::Sequential).is_err());
    }
}
