//! Coherence-optimal importance sampling.
//!
//! Samples are drawn with an independence Metropolis–Hastings chain whose
//! proposals come from the input distribution `f`. For a basis `B` the target
//! is `g(ξ) = ‖ψ(ξ)‖² f(ξ) / |B|` and each sample carries the weight
//! `w(ξ) = √|B| / ‖ψ(ξ)‖`, so every weighted design row has norm `√|B|`.
//!
//! When the basis changes from `B_prev` to `B_next`, [`sample_expand`] draws
//! correction samples from `g_c = (g_next − (1 − α) g_prev) / α` so the
//! enlarged pool behaves like a sample from `g_next`.

use std::collections::HashSet;
use std::io::{Read, Write};

use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisEvaluator, BasisSpec};
use crate::error::{arg_err, Error, Result};
use crate::exec::Exec;
use crate::polynomials::PolyFamily;
use crate::rng::Rng;

/// One input realization with its importance weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub xi: Vec<f64>,
    pub weight: f64,
    /// Iteration at which the point was drawn.
    pub epoch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    Orthogonality,
    CoherenceOptimal,
}

/// The accumulated sample.
///
/// `pending_correction` multiplies the rows of the newest epoch for exactly one
/// surrogate solve after a truncated correction sampling, then returns to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePool {
    pub points: Vec<SamplePoint>,
    pub pending_correction: f64,
    pub source: SampleSource,
}

impl SamplePool {
    pub fn new(points: Vec<SamplePoint>, source: SampleSource) -> Self {
        Self { points, pending_correction: 1.0, source }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn newest_epoch(&self) -> usize {
        self.points.iter().map(|p| p.epoch).max().unwrap_or(0)
    }

    pub fn inputs(&self) -> Vec<&[f64]> {
        self.points.iter().map(|p| p.xi.as_slice()).collect()
    }

    /// Per-row factors for the next solve: the weight, times the pending
    /// correction on the newest epoch.
    pub fn row_factors(&self) -> Vec<f64> {
        let newest = self.newest_epoch();
        self.points
            .iter()
            .map(|p| {
                if p.epoch == newest {
                    p.weight * self.pending_correction
                } else {
                    p.weight
                }
            })
            .collect()
    }

    /// Mark the pending correction as spent.
    pub fn consume_correction(&mut self) {
        self.pending_correction = 1.0;
    }

    /// Columnar text: `epoch,weight,x0,...,x{d-1}` with a header row.
    pub fn write_text<W: Write>(&self, w: W) -> Result<()> {
        let d = self.points.first().map_or(0, |p| p.xi.len());
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["epoch".to_string(), "weight".to_string()];
        header.extend((0..d).map(|i| format!("x{i}")));
        wtr.write_record(&header)?;
        for p in &self.points {
            let mut rec = vec![p.epoch.to_string(), p.weight.to_string()];
            rec.extend(p.xi.iter().map(|x| x.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_text<R: Read>(r: R, source: SampleSource) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|e| Error::Argument(format!("bad number {s:?}: {e}")))
            };
            let epoch = rec
                .get(0)
                .ok_or_else(|| Error::Argument("missing epoch".into()))?
                .parse::<usize>()
                .map_err(|e| Error::Argument(format!("bad epoch: {e}")))?;
            let weight = parse(rec.get(1).ok_or_else(|| Error::Argument("missing weight".into()))?)?;
            let xi = rec.iter().skip(2).map(parse).collect::<Result<Vec<_>>>()?;
            points.push(SamplePoint { xi, weight, epoch });
        }
        Ok(SamplePool::new(points, source))
    }
}

/// Coordinate box on which proposals are drawn and densities are supported.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub bounds: Vec<(f64, f64)>,
}

impl Domain {
    /// Legendre dimensions use their interval; Hermite dimensions are truncated
    /// to `|ξ_i| ≤ √2 √(2 p_max + 1)` with `p_max` the largest order in the basis.
    pub fn for_basis(basis: &BasisSpec) -> Self {
        let radius = 2f64.sqrt() * (2.0 * basis.max_order() as f64 + 1.0).sqrt();
        Domain::with_hermite_radius(basis.families(), radius)
    }

    pub fn with_hermite_radius(families: &[PolyFamily], radius: f64) -> Self {
        let bounds = families
            .iter()
            .map(|f| match *f {
                PolyFamily::LegendreUniform { lo, hi } => (lo, hi),
                PolyFamily::HermiteGaussian => (-radius, radius),
            })
            .collect();
        Domain { bounds }
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        xi.iter().zip(&self.bounds).all(|(x, (lo, hi))| (*lo..=*hi).contains(x))
    }

    /// Coordinate-wise hull of two boxes.
    pub fn union(&self, other: &Domain) -> Domain {
        let bounds = self
            .bounds
            .iter()
            .zip(&other.bounds)
            .map(|(a, b)| (a.0.min(b.0), a.1.max(b.1)))
            .collect();
        Domain { bounds }
    }
}

fn f_pdf(families: &[PolyFamily], xi: &[f64]) -> f64 {
    families.iter().zip(xi).map(|(f, &x)| f.pdf(x)).product()
}

/// Draw one point from `f` restricted to `domain`.
pub fn propose(families: &[PolyFamily], domain: &Domain, rng: &mut Rng, out: &mut [f64]) {
    for ((x, fam), &(lo, hi)) in out.iter_mut().zip(families).zip(&domain.bounds) {
        *x = match fam {
            PolyFamily::LegendreUniform { .. } => lo + (hi - lo) * rng.random::<f64>(),
            PolyFamily::HermiteGaussian => loop {
                let z: f64 = StandardNormal.sample(rng);
                if z >= lo && z <= hi {
                    break z;
                }
            },
        };
    }
}

/// `n` i.i.d. draws from the (untruncated) input distribution.
pub fn draw_orthogonality(families: &[PolyFamily], n: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let open = Domain::with_hermite_radius(families, f64::INFINITY);
    (0..n)
        .map(|_| {
            let mut x = vec![0.0; families.len()];
            propose(families, &open, rng, &mut x);
            x
        })
        .collect()
}

/// Coherence-optimal density `c_g ‖ψ(ξ)‖² f(ξ)` of a basis, with `c_g = 1/|B|`.
#[derive(Debug, Clone)]
pub struct Density {
    pub basis: BasisSpec,
    pub normalizer: f64,
    pub domain: Domain,
}

impl Density {
    pub fn coherence_optimal(basis: &BasisSpec) -> Result<Self> {
        if basis.is_empty() {
            return arg_err("coherence-optimal density of an empty basis");
        }
        Ok(Self {
            normalizer: 1.0 / basis.len() as f64,
            domain: Domain::for_basis(basis),
            basis: basis.clone(),
        })
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    /// `g(ξ) / f(ξ)`.
    pub fn ratio(&self, xi: &[f64]) -> f64 {
        if !self.domain.contains(xi) {
            return 0.0;
        }
        let ev = BasisEvaluator::new(&self.basis);
        let mut row = vec![0.0; ev.len()];
        self.normalizer * ev.norm_sq(xi, &mut row, &mut ev.scratch())
    }

    pub fn value(&self, xi: &[f64]) -> f64 {
        self.ratio(xi) * f_pdf(self.basis.families(), xi)
    }
}

/// Signed correction density `(g_next − (1 − α) g_prev) / α` on the common domain.
#[derive(Debug, Clone)]
pub struct CorrectionDensity {
    pub prev: Density,
    pub next: Density,
    pub alpha: f64,
}

pub fn correction_density(prev: &Density, next: &Density, alpha: f64) -> Result<CorrectionDensity> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return arg_err(format!("mixture weight must lie in (0, 1], got {alpha}"));
    }
    if prev.basis.families() != next.basis.families() {
        return arg_err("correction densities must share the input distribution");
    }
    let domain = prev.domain.union(&next.domain);
    Ok(CorrectionDensity {
        prev: prev.clone().with_domain(domain.clone()),
        next: next.clone().with_domain(domain),
        alpha,
    })
}

impl CorrectionDensity {
    /// `g_c(ξ) / f(ξ)`; may be negative.
    pub fn ratio(&self, xi: &[f64]) -> f64 {
        (self.next.ratio(xi) - (1.0 - self.alpha) * self.prev.ratio(xi)) / self.alpha
    }

    /// `g_c(ξ)`; may be negative.
    pub fn value(&self, xi: &[f64]) -> f64 {
        (self.next.value(xi) - (1.0 - self.alpha) * self.prev.value(xi)) / self.alpha
    }

    /// Smallest mixture weight for which `g_c(ξ) ≥ 0` at this point.
    pub fn required_alpha(&self, xi: &[f64]) -> f64 {
        let p = self.prev.ratio(xi);
        if p <= 0.0 {
            return 0.0;
        }
        1.0 - self.next.ratio(xi) / p
    }
}

/// Sampling target for [`mcmc_sample`].
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Plain(&'a Density),
    Correction(&'a CorrectionDensity),
}

impl Target<'_> {
    fn families(&self) -> &[PolyFamily] {
        match self {
            Target::Plain(d) => d.basis.families(),
            Target::Correction(c) => c.next.basis.families(),
        }
    }

    fn domain(&self) -> &Domain {
        match self {
            Target::Plain(d) => &d.domain,
            Target::Correction(c) => &c.next.domain,
        }
    }
}

// Buffered evaluation of (clamped ratio, required mixture weight).
struct TargetEval<'a> {
    target: Target<'a>,
    evals: Vec<(BasisEvaluator<'a>, f64, Vec<f64>, Vec<f64>)>,
}

impl<'a> TargetEval<'a> {
    fn new(target: Target<'a>) -> Self {
        let mk = |d: &'a Density| {
            let ev = BasisEvaluator::new(&d.basis);
            let row = vec![0.0; ev.len()];
            let scratch = ev.scratch();
            (ev, d.normalizer, row, scratch)
        };
        let evals = match target {
            Target::Plain(d) => vec![mk(d)],
            Target::Correction(c) => vec![mk(&c.prev), mk(&c.next)],
        };
        Self { target, evals }
    }

    fn eval(&mut self, xi: &[f64]) -> (f64, f64) {
        if !self.target.domain().contains(xi) {
            return (0.0, f64::NEG_INFINITY);
        }
        let mut vals = [0.0; 2];
        for (v, (ev, c, row, scratch)) in vals.iter_mut().zip(self.evals.iter_mut()) {
            *v = *c * ev.norm_sq(xi, row, scratch);
        }
        match self.target {
            Target::Plain(_) => (vals[0], f64::NEG_INFINITY),
            Target::Correction(c) => {
                let (prev, next) = (vals[0], vals[1]);
                let rho = (next - (1.0 - c.alpha) * prev) / c.alpha;
                let need = if prev > 0.0 { 1.0 - next / prev } else { 0.0 };
                (rho.max(0.0), need)
            }
        }
    }
}

/// Metropolis–Hastings acceptance probability for an independence sampler
/// moving from a state with density ratio `rho_x` to a proposal with `rho_y`.
pub fn acceptance_probability(rho_x: f64, rho_y: f64) -> f64 {
    if rho_x <= 0.0 {
        1.0
    } else {
        (rho_y / rho_x).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcConfig {
    pub burn_in_min: usize,
    pub burn_in_window: usize,
    pub burn_in_rel_change: f64,
    pub burn_in_max: usize,
    /// Proposals used to choose the thinning interval.
    pub calibration: usize,
    /// Upper bound on the probability that two consecutive outputs coincide.
    pub collision_bound: f64,
    pub max_thinning: usize,
    /// Outputs per independent chain.
    pub chain_len: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            burn_in_min: 500,
            burn_in_window: 100,
            burn_in_rel_change: 0.01,
            burn_in_max: 100_000,
            calibration: 2000,
            collision_bound: (-8f64).exp(),
            max_thinning: 1000,
            chain_len: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct McmcStats {
    pub proposals: usize,
    pub accepted: usize,
    pub burn_in: usize,
    /// Largest thinning interval used by any chain.
    pub thinning: usize,
    /// Outputs that repeated the previous output and were dropped.
    pub collisions: usize,
    pub chains: usize,
}

#[derive(Debug, Clone)]
pub struct McmcOutput {
    /// Largest mixture weight found necessary at any evaluated point
    /// (0 for plain targets).
    pub alpha_floor: f64,
    pub points: Vec<Vec<f64>>,
    pub stats: McmcStats,
}

/// Draw `n` points from `target`. Independent chains of at most
/// `cfg.chain_len` outputs run under `exec`, each with its own burn-in.
pub fn mcmc_sample(
    target: Target<'_>,
    n: usize,
    cfg: &McmcConfig,
    rng: &mut Rng,
    exec: Exec,
) -> Result<McmcOutput> {
    if n == 0 {
        return arg_err("mcmc_sample needs at least one output");
    }
    let chains = n.div_ceil(cfg.chain_len.max(1));
    let seeds: Vec<u64> = (0..chains).map(|_| rng.random()).collect();
    let results = exec.try_map(chains, |c| {
        let len = if c + 1 == chains { n - c * cfg.chain_len } else { cfg.chain_len };
        run_chain(target, len, cfg, Rng::seed_from_u64(seeds[c]))
    })?;
    let mut out = McmcOutput { alpha_floor: 0.0, points: Vec::with_capacity(n), stats: McmcStats::default() };
    for r in results {
        out.alpha_floor = out.alpha_floor.max(r.alpha_floor);
        out.points.extend(r.points);
        let s = &mut out.stats;
        s.proposals += r.stats.proposals;
        s.accepted += r.stats.accepted;
        s.burn_in += r.stats.burn_in;
        s.collisions += r.stats.collisions;
        s.thinning = s.thinning.max(r.stats.thinning);
        s.chains += 1;
    }
    Ok(out)
}

fn run_chain(target: Target<'_>, n: usize, cfg: &McmcConfig, mut rng: Rng) -> Result<McmcOutput> {
    let families = target.families();
    let domain = target.domain();
    let d = families.len();
    let mut te = TargetEval::new(target);
    let mut stats = McmcStats { chains: 1, ..Default::default() };
    let mut floor = f64::NEG_INFINITY;

    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut rho_x = 0.0;
    for _ in 0..cfg.burn_in_max {
        propose(families, domain, &mut rng, &mut x);
        let (r, need) = te.eval(&x);
        stats.proposals += 1;
        floor = floor.max(need);
        if r > 0.0 {
            rho_x = r;
            break;
        }
    }
    if rho_x <= 0.0 {
        return Err(Error::Sampling("target density vanishes on the sampling domain".into()));
    }

    // Burn-in until the running mean of the proposal ratios (an estimate of
    // the target's normalization) settles.
    let mut calib: Vec<f64> = Vec::with_capacity(cfg.calibration.max(cfg.burn_in_min));
    let mut means: Vec<f64> = Vec::new();
    let mut sum = 0.0;
    loop {
        propose(families, domain, &mut rng, &mut y);
        let (rho_y, need) = te.eval(&y);
        stats.proposals += 1;
        floor = floor.max(need);
        if rng.random::<f64>() < acceptance_probability(rho_x, rho_y) {
            std::mem::swap(&mut x, &mut y);
            rho_x = rho_y;
            stats.accepted += 1;
        }
        calib.push(rho_y);
        sum += rho_y;
        let count = calib.len();
        let mean = sum / count as f64;
        means.push(mean);
        stats.burn_in += 1;
        let settled = count >= cfg.burn_in_min
            && count > cfg.burn_in_window
            && (mean - means[count - 1 - cfg.burn_in_window]).abs()
                <= cfg.burn_in_rel_change * mean.abs();
        if (settled && count >= cfg.calibration) || count >= cfg.burn_in_max {
            break;
        }
    }

    let thinning = thinning_interval(&calib, cfg.collision_bound / 4.0, cfg.max_thinning);
    stats.thinning = thinning;

    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let mut moved = false;
        for _ in 0..thinning {
            propose(families, domain, &mut rng, &mut y);
            let (rho_y, need) = te.eval(&y);
            stats.proposals += 1;
            floor = floor.max(need);
            if rng.random::<f64>() < acceptance_probability(rho_x, rho_y) {
                std::mem::swap(&mut x, &mut y);
                rho_x = rho_y;
                stats.accepted += 1;
                moved = true;
            }
        }
        if moved || points.is_empty() {
            points.push(x.clone());
        } else {
            stats.collisions += 1;
        }
    }

    let alpha_floor = match target {
        Target::Plain(_) => 0.0,
        Target::Correction(_) => floor.max(0.0),
    };
    Ok(McmcOutput { alpha_floor, points, stats })
}

/// Smallest `t` such that the probability of `t` consecutive rejections from
/// a target-distributed state is at most `bound`.
///
/// With proposal ratios `ρ_j` drawn from `f`, the acceptance probability from
/// a state with ratio `r` is `a(r) = mean_j min(1, ρ_j / r)` and the repeat
/// probability is `E_g[(1 − a)^t] = Σ_j ρ_j (1 − a(ρ_j))^t / Σ_j ρ_j`.
pub fn thinning_interval(rhos: &[f64], bound: f64, max_t: usize) -> usize {
    let mut sorted: Vec<f64> = rhos.iter().copied().filter(|r| *r > 0.0).collect();
    let total_n = rhos.len() as f64;
    if sorted.is_empty() {
        return max_t.max(1);
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + sorted[i];
    }
    let mass = prefix[n];
    // (weight ρ, rejection probability 1 − a(ρ)) for each positive sample
    let mut terms: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let r = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == r {
            j += 1;
        }
        let ge = (n - i) as f64;
        let accept = (ge + prefix[i] / r) / total_n;
        let reject = (1.0 - accept).clamp(0.0, 1.0);
        terms.push((r * (j - i) as f64 / mass, reject));
        i = j;
    }
    for t in 1..=max_t {
        let p: f64 = terms.iter().map(|&(w, rej)| w * rej.powi(t as i32)).sum();
        if p <= bound {
            return t;
        }
    }
    max_t
}

/// Coherence-optimal weight `√|B| / ‖ψ(ξ)‖₂`.
pub fn weight(basis: &BasisSpec, xi: &[f64]) -> Result<f64> {
    let row = basis.eval(xi)?;
    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return Err(Error::Undefined("basis row has zero norm".into()));
    }
    Ok((basis.len() as f64).sqrt() / norm)
}

pub(crate) fn weights_for(basis: &BasisSpec, points: &[&[f64]], exec: Exec) -> Vec<f64> {
    let ev = BasisEvaluator::new(basis);
    let scale = (basis.len() as f64).sqrt();
    exec.map(points.len(), |i| {
        let mut row = vec![0.0; ev.len()];
        let mut scratch = ev.scratch();
        scale / ev.norm_sq(points[i], &mut row, &mut scratch).sqrt()
    })
}

/// Initial coherence-optimal pool for `basis`.
pub fn coherence_optimal_pool(
    basis: &BasisSpec,
    n: usize,
    cfg: &McmcConfig,
    rng: &mut Rng,
    exec: Exec,
) -> Result<SamplePool> {
    let density = Density::coherence_optimal(basis)?;
    let out = mcmc_sample(Target::Plain(&density), n, cfg, rng, exec)?;
    let refs: Vec<&[f64]> = out.points.iter().map(|p| p.as_slice()).collect();
    let w = weights_for(basis, &refs, exec);
    let points = out
        .points
        .into_iter()
        .zip(w)
        .map(|(xi, weight)| SamplePoint { xi, weight, epoch: 0 })
        .collect();
    Ok(SamplePool::new(points, SampleSource::CoherenceOptimal))
}

/// Initial pool of i.i.d. draws from `f` with unit weights.
pub fn orthogonality_pool(families: &[PolyFamily], n: usize, rng: &mut Rng) -> SamplePool {
    let points = draw_orthogonality(families, n, rng)
        .into_iter()
        .map(|xi| SamplePoint { xi, weight: 1.0, epoch: 0 })
        .collect();
    SamplePool::new(points, SampleSource::Orthogonality)
}

/// Outcome of a correction sampling.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub pool: SamplePool,
    /// Mixture weight the correction density was built with.
    pub alpha: f64,
    /// Mixture weight actually realized after truncation to `max_ratio`.
    pub alpha_realized: f64,
    pub new_points: usize,
    pub restarts: usize,
    pub stats: McmcStats,
}

const MAX_RESTARTS: usize = 10;

/// Grow `pool` (assumed drawn from the coherence-optimal density of
/// `basis_prev`) so that the enlarged pool mimics a sample from that of
/// `basis_next`. All weights are reassigned under `basis_next`.
#[allow(clippy::too_many_arguments)]
pub fn sample_expand(
    pool: &SamplePool,
    basis_prev: &BasisSpec,
    basis_next: &BasisSpec,
    min_ratio: f64,
    max_ratio: f64,
    cfg: &McmcConfig,
    rng: &mut Rng,
    exec: Exec,
) -> Result<Expansion> {
    if !(min_ratio > 0.0 && min_ratio <= max_ratio && max_ratio.is_finite()) {
        return arg_err(format!("need 0 < min_ratio <= max_ratio, got {min_ratio}, {max_ratio}"));
    }
    if pool.is_empty() {
        return arg_err("cannot expand an empty pool");
    }
    let n_k = pool.len();
    let prev = Density::coherence_optimal(basis_prev)?;
    let next = Density::coherence_optimal(basis_next)?;
    let probe = correction_density(&prev, &next, 1.0)?;

    // Points already in hand are the first place a too-small α shows up.
    let mut required = pool
        .points
        .iter()
        .map(|p| probe.required_alpha(&p.xi))
        .fold(0.0f64, f64::max);

    let mut ratio = min_ratio;
    let mut restarts = 0;
    let (alpha, keep, drawn) = loop {
        let mut n_c = ((ratio * n_k as f64) - 1e-9).ceil().max(1.0) as usize;
        let mut alpha = n_c as f64 / (n_k + n_c) as f64;
        if alpha < required {
            ratio = required / (1.0 - required);
            n_c = ((ratio * n_k as f64) - 1e-9).ceil().max(1.0) as usize;
            alpha = n_c as f64 / (n_k + n_c) as f64;
        }
        let cap = ((max_ratio * n_k as f64) + 1e-9).floor().max(1.0) as usize;
        let keep = n_c.min(cap);
        let target = correction_density(&prev, &next, alpha)?;
        let out = mcmc_sample(Target::Correction(&target), keep, cfg, rng, exec)?;
        if out.alpha_floor > alpha {
            restarts += 1;
            if restarts > MAX_RESTARTS {
                return Err(Error::Sampling(format!(
                    "no valid correction mixture weight after {MAX_RESTARTS} restarts (need {:.6})",
                    out.alpha_floor
                )));
            }
            required = out.alpha_floor;
            ratio = required / (1.0 - required);
            continue;
        }
        break (alpha, keep, out);
    };

    let mut seen: HashSet<Vec<u64>> = pool.points.iter().map(|p| bits(&p.xi)).collect();
    let mut fresh: Vec<Vec<f64>> = Vec::with_capacity(keep);
    let mut stats = drawn.stats;
    let mut batch = drawn.points;
    loop {
        for p in batch {
            if fresh.len() < keep && seen.insert(bits(&p)) {
                fresh.push(p);
            }
        }
        if fresh.len() == keep {
            break;
        }
        let target = correction_density(&prev, &next, alpha)?;
        let more = mcmc_sample(Target::Correction(&target), keep - fresh.len(), cfg, rng, exec)?;
        stats.collisions += more.stats.collisions;
        stats.proposals += more.stats.proposals;
        batch = more.points;
    }

    let alpha_realized = keep as f64 / (n_k + keep) as f64;
    let pending = if alpha_realized < alpha { alpha / alpha_realized } else { 1.0 };

    let epoch = pool.newest_epoch() + 1;
    let mut points: Vec<SamplePoint> = pool.points.clone();
    points.extend(fresh.into_iter().map(|xi| SamplePoint { xi, weight: 1.0, epoch }));
    let refs: Vec<&[f64]> = points.iter().map(|p| p.xi.as_slice()).collect();
    let w = weights_for(basis_next, &refs, exec);
    for (p, w) in points.iter_mut().zip(w) {
        p.weight = w;
    }
    Ok(Expansion {
        pool: SamplePool { points, pending_correction: pending, source: SampleSource::CoherenceOptimal },
        alpha,
        alpha_realized,
        new_points: keep,
        restarts,
        stats,
    })
}

fn bits(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Empirical coherences `(μ∞, μ₂, μ₂(s))` over `candidates` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coherence {
    pub mu_inf: f64,
    pub mu_2: f64,
    pub mu_2_s: f64,
}

/// Maxima over sampled rows of `‖wψ‖∞²`, `‖wψ‖₂²` and the largest sum of `s`
/// squared entries. With `weighting` the points come from the coherence-optimal
/// density and carry its weights; otherwise they come from `f` with `w = 1`.
pub fn coherence_estimate(
    basis: &BasisSpec,
    weighting: bool,
    s: usize,
    candidates: usize,
    rng: &mut Rng,
    exec: Exec,
) -> Result<Coherence> {
    if s == 0 || s > basis.len() {
        return arg_err(format!("sparsity {s} must lie in 1..={}", basis.len()));
    }
    let points = if weighting {
        let density = Density::coherence_optimal(basis)?;
        mcmc_sample(Target::Plain(&density), candidates, &McmcConfig::default(), rng, exec)?.points
    } else {
        draw_orthogonality(basis.families(), candidates, rng)
    };
    let ev = BasisEvaluator::new(basis);
    let scale = basis.len() as f64;
    let mut out = Coherence { mu_inf: 0.0, mu_2: 0.0, mu_2_s: 0.0 };
    let mut row = vec![0.0; ev.len()];
    let mut scratch = ev.scratch();
    for xi in &points {
        ev.eval_into(xi, &mut row, &mut scratch);
        let mut sq: Vec<f64> = row.iter().map(|v| v * v).collect();
        if weighting {
            let w2 = scale / sq.iter().sum::<f64>();
            sq.iter_mut().for_each(|v| *v *= w2);
        }
        sq.sort_by(|a, b| b.total_cmp(a));
        let top: f64 = sq[..s].iter().sum();
        let all: f64 = top + sq[s..].iter().sum::<f64>();
        out.mu_inf = out.mu_inf.max(sq[0]);
        out.mu_2 = out.mu_2.max(all);
        out.mu_2_s = out.mu_2_s.max(top);
    }
    Ok(out)
}
