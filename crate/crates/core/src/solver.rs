//! Weighted basis pursuit denoising.
//!
//! `min ‖c‖₁ subject to ‖rhs − D c‖₂ ≤ δ ‖rhs‖₂` is solved by following the
//! LASSO homotopy path `min ½‖rhs − Dc‖² + λ‖c‖₁` from `λ = ‖Dᵀrhs‖∞` down
//! towards zero. The residual norm decreases monotonically along the path, so
//! the BPDN solution for `δ` is the path point where the residual first equals
//! `δ ‖rhs‖`. One pass yields the solutions for any number of tolerances.
//!
//! The path needs `Dᵀrhs`, `‖rhs‖²`, single Gram entries and products
//! `DᵀD_A x` with the active columns. [`GramSystem`] stores `DᵀD`, which lets
//! cross-validation folds reuse the full Gram matrix minus the held-out rows.
//! [`RowSystem`] keeps `D` itself and is the cheaper choice once there are more
//! columns than rows.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisEvaluator, BasisSpec};
use crate::error::{arg_err, Error, Result};
use crate::exec::Exec;

/// Floor applied to `δ = 0`.
pub const DELTA_FLOOR: f64 = 1e-10;
/// Relative slack on the residual constraint when judging feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-6;

// Pivot threshold (relative to the diagonal) below which a column is
// numerically dependent on the active set.
const COLLINEAR: f64 = 1e-10;
const RESYNC_EVERY: usize = 32;

/// Weighted measurement matrix `D = WΨ` and right-hand side `W u`.
#[derive(Debug, Clone)]
pub struct DesignSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub basis: BasisSpec,
    /// Rows with identical inputs share a group id.
    pub groups: Vec<usize>,
}

impl DesignSystem {
    /// Rows `factors[i] · ψ(points[i])` with right-hand side `factors[i] · values[i]`.
    pub fn new(
        basis: &BasisSpec,
        points: &[&[f64]],
        factors: &[f64],
        values: &[f64],
        exec: Exec,
    ) -> Result<Self> {
        let n = points.len();
        if n == 0 || factors.len() != n || values.len() != n {
            return arg_err(format!(
                "design needs matching nonempty inputs: {} points, {} factors, {} values",
                n,
                factors.len(),
                values.len()
            ));
        }
        if let Some(x) = points.iter().find(|x| x.len() != basis.dim()) {
            return arg_err(format!("point of dimension {} for a {}-D basis", x.len(), basis.dim()));
        }
        if values.iter().chain(factors).any(|v| !v.is_finite()) {
            return Err(Error::Evaluation("non-finite QoI value or weight in design".into()));
        }
        let ev = BasisEvaluator::new(basis);
        let p = ev.len();
        let rows = exec.map(n, |i| {
            let mut row = vec![0.0; p];
            ev.eval_into(points[i], &mut row, &mut ev.scratch());
            row.iter_mut().for_each(|v| *v *= factors[i]);
            row
        });
        let matrix = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        let rhs = DVector::from_iterator(n, values.iter().zip(factors).map(|(u, w)| u * w));
        Ok(Self { matrix, rhs, basis: basis.clone(), groups: group_rows(points) })
    }

    /// Wrap an explicit matrix; every row is its own group.
    pub fn from_parts(basis: BasisSpec, matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        if matrix.ncols() != basis.len() || matrix.nrows() != rhs.len() || rhs.is_empty() {
            return arg_err(format!(
                "design of shape {}x{} with {} right-hand sides for a basis of {}",
                matrix.nrows(),
                matrix.ncols(),
                rhs.len(),
                basis.len()
            ));
        }
        let groups = (0..rhs.len()).collect();
        Ok(Self { matrix, rhs, basis, groups })
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn groups(&self) -> usize {
        self.groups.iter().copied().max().map_or(0, |g| g + 1)
    }
}

fn group_rows(points: &[&[f64]]) -> Vec<usize> {
    let mut ids: HashMap<Vec<u64>, usize> = HashMap::new();
    points
        .iter()
        .map(|x| {
            let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
            let next = ids.len();
            *ids.entry(key).or_insert(next)
        })
        .collect()
}

/// Sufficient statistics of a least-squares system.
#[derive(Debug, Clone)]
pub struct GramSystem {
    pub gram: DMatrix<f64>,
    pub dtb: DVector<f64>,
    pub btb: f64,
    pub rows: usize,
}

impl GramSystem {
    pub fn from_design(sys: &DesignSystem) -> Self {
        Self {
            gram: sys.matrix.tr_mul(&sys.matrix),
            dtb: sys.matrix.tr_mul(&sys.rhs),
            btb: sys.rhs.norm_squared(),
            rows: sys.rows(),
        }
    }

    /// Statistics of `sys` with `rows` removed, given `self` built from all of `sys`.
    pub fn without_rows(&self, sys: &DesignSystem, rows: &[usize]) -> Self {
        let dh = sys.matrix.select_rows(rows);
        let bh = DVector::from_iterator(rows.len(), rows.iter().map(|&i| sys.rhs[i]));
        Self {
            gram: &self.gram - dh.tr_mul(&dh),
            dtb: &self.dtb - dh.tr_mul(&bh),
            btb: (self.btb - bh.norm_squared()).max(0.0),
            rows: self.rows - rows.len(),
        }
    }
}

/// The matrix and right-hand side themselves.
#[derive(Debug, Clone)]
pub struct RowSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    dtb: Vec<f64>,
    diag: Vec<f64>,
}

impl RowSystem {
    pub fn new(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Self {
        let dtb = matrix.tr_mul(&rhs).as_slice().to_vec();
        let diag = matrix.column_iter().map(|c| c.norm_squared()).collect();
        Self { matrix, rhs, dtb, diag }
    }

    pub fn from_design(sys: &DesignSystem) -> Self {
        Self::new(sys.matrix.clone(), sys.rhs.clone())
    }

    /// The subsystem on `rows` of `sys`.
    pub fn select(sys: &DesignSystem, rows: &[usize]) -> Self {
        let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|&i| sys.rhs[i]));
        Self::new(sys.matrix.select_rows(rows), rhs)
    }
}

/// Operations the homotopy needs from a least-squares system.
pub trait PathSystem: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn btb(&self) -> f64;
    fn dtb(&self) -> &[f64];
    /// `(DᵀD)_jj`.
    fn diag(&self, j: usize) -> f64;
    /// `(DᵀD)_kj` for every `k` in `active`.
    fn cross(&self, active: &[usize], j: usize) -> Vec<f64>;
    /// `DᵀD_A x`.
    fn apply(&self, active: &[usize], x: &[f64]) -> Vec<f64>;
    /// `Dᵀ(rhs − Dc)` and `‖rhs − Dc‖²`.
    fn residual(&self, c: &[f64]) -> (Vec<f64>, f64);
}

impl PathSystem for GramSystem {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.gram.ncols()
    }

    fn btb(&self) -> f64 {
        self.btb
    }

    fn dtb(&self) -> &[f64] {
        self.dtb.as_slice()
    }

    fn diag(&self, j: usize) -> f64 {
        self.gram[(j, j)]
    }

    fn cross(&self, active: &[usize], j: usize) -> Vec<f64> {
        let col = self.gram.column(j);
        active.iter().map(|&k| col[k]).collect()
    }

    fn apply(&self, active: &[usize], x: &[f64]) -> Vec<f64> {
        let p = self.gram.ncols();
        let data = self.gram.as_slice();
        let mut a = vec![0.0; p];
        for (&k, &xk) in active.iter().zip(x) {
            for (ai, gi) in a.iter_mut().zip(&data[k * p..(k + 1) * p]) {
                *ai += gi * xk;
            }
        }
        a
    }

    fn residual(&self, c: &[f64]) -> (Vec<f64>, f64) {
        let c = DVector::from_column_slice(c);
        let gc = &self.gram * &c;
        let corr = self.dtb.iter().zip(gc.iter()).map(|(b, g)| b - g).collect();
        let rr = (self.btb - 2.0 * c.dot(&self.dtb) + c.dot(&gc)).max(0.0);
        (corr, rr)
    }
}

impl PathSystem for RowSystem {
    fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    fn btb(&self) -> f64 {
        self.rhs.norm_squared()
    }

    fn dtb(&self) -> &[f64] {
        &self.dtb
    }

    fn diag(&self, j: usize) -> f64 {
        self.diag[j]
    }

    fn cross(&self, active: &[usize], j: usize) -> Vec<f64> {
        let dj = self.matrix.column(j);
        active.iter().map(|&k| dot(self.matrix.column(k).as_slice(), dj.as_slice())).collect()
    }

    fn apply(&self, active: &[usize], x: &[f64]) -> Vec<f64> {
        let mut v = DVector::zeros(self.matrix.nrows());
        for (&k, &xk) in active.iter().zip(x) {
            v.axpy(xk, &self.matrix.column(k), 1.0);
        }
        self.matrix.column_iter().map(|c| dot(c.as_slice(), v.as_slice())).collect()
    }

    fn residual(&self, c: &[f64]) -> (Vec<f64>, f64) {
        let r = &self.rhs - &self.matrix * DVector::from_column_slice(c);
        let corr = self.matrix.tr_mul(&r).as_slice().to_vec();
        (corr, r.norm_squared())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// The residual constraint holds.
    Converged,
    /// The path ended at a minimal-residual point that still violates the
    /// constraint; no feasible point exists.
    LeastSquares,
    /// The step budget ran out first.
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpdnSolution {
    pub c_hat: Vec<f64>,
    /// `‖rhs − D ĉ‖ / ‖rhs‖`.
    pub residual_rel: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
}

/// Solve for a single relative tolerance `delta`.
pub fn bpdn_solve(sys: &DesignSystem, delta: f64) -> Result<BpdnSolution> {
    let mut sol = if sys.cols() > sys.rows() {
        bpdn_path(&RowSystem::from_design(sys), &[delta])?
    } else {
        bpdn_path(&GramSystem::from_design(sys), &[delta])?
    }
    .pop()
    .expect("one tolerance in, one solution out");
    let c = DVector::from_column_slice(&sol.c_hat);
    let nb = sys.rhs.norm();
    if nb > 0.0 {
        sol.residual_rel = (&sys.rhs - &sys.matrix * c).norm() / nb;
    }
    Ok(sol)
}

/// Solutions for every tolerance in `deltas` (any order) from one homotopy pass.
pub fn bpdn_path<S: PathSystem>(gs: &S, deltas: &[f64]) -> Result<Vec<BpdnSolution>> {
    if let Some(d) = deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return arg_err(format!("tolerance must be finite and nonnegative, got {d}"));
    }
    let p = gs.cols();
    if gs.dtb().len() != p {
        return arg_err("least-squares system has inconsistent shapes");
    }
    let btb = gs.btb();
    let mut out: Vec<Option<BpdnSolution>> = vec![None; deltas.len()];
    if btb <= 0.0 {
        for o in out.iter_mut() {
            *o = Some(BpdnSolution {
                c_hat: vec![0.0; p],
                residual_rel: 0.0,
                iterations: 0,
                converged: true,
                status: SolveStatus::Converged,
            });
        }
        return Ok(out.into_iter().map(Option::unwrap).collect());
    }
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[b].total_cmp(&deltas[a]));
    let targets: Vec<(usize, f64)> = order
        .iter()
        .map(|&i| (i, (deltas[i].max(DELTA_FLOOR)).powi(2) * btb))
        .collect();

    let mut path = Homotopy::new(gs);
    let mut next = 0;
    let budget = 20 * (gs.rows().min(p) + 10);
    let mut finished = None;
    loop {
        while next < targets.len() && targets[next].1 >= path.rr {
            out[targets[next].0] = Some(path.snapshot(None, true));
            next += 1;
        }
        if next == targets.len() {
            break;
        }
        if path.steps >= budget {
            finished = Some(SolveStatus::NotConverged);
            break;
        }
        let Some(seg) = path.segment() else {
            finished = Some(SolveStatus::LeastSquares);
            break;
        };
        while next < targets.len() {
            let Some(g) = seg.crossing(path.rr, path.lambda, targets[next].1) else { break };
            out[targets[next].0] = Some(path.snapshot(Some((&seg, g)), true));
            next += 1;
        }
        if next == targets.len() {
            break;
        }
        path.advance(seg);
    }
    if let Some(status) = finished {
        path.resync();
        let rel = (path.rr.max(0.0) / btb).sqrt();
        for &(i, _) in &targets[next..] {
            let ok = rel <= deltas[i].max(DELTA_FLOOR) + FEASIBILITY_TOL;
            let mut s = path.snapshot(None, ok);
            if !ok {
                s.status = status;
            }
            out[i] = Some(s);
        }
    }
    Ok(out.into_iter().map(|o| o.expect("every tolerance resolved")).collect())
}

struct Segment {
    dir: Vec<f64>,
    a: Vec<f64>,
    q: f64,
    gamma: f64,
    event: Event,
}

enum Event {
    Enter(usize),
    Leave(usize),
    End,
}

impl Segment {
    // Smallest step along the segment at which the squared residual drops to
    // `sigma2`: rr − 2γλq + γ²q = σ².
    fn crossing(&self, rr: f64, lambda: f64, sigma2: f64) -> Option<f64> {
        let excess = (rr - sigma2) / self.q;
        if excess <= 0.0 {
            return Some(0.0);
        }
        let disc = lambda * lambda - excess;
        if disc < 0.0 {
            return None;
        }
        let g = excess / (lambda + disc.sqrt());
        (g <= self.gamma).then_some(g)
    }
}

struct Homotopy<'a, S> {
    gs: &'a S,
    btb: f64,
    c: Vec<f64>,
    corr: Vec<f64>,
    rr: f64,
    lambda: f64,
    active: Vec<usize>,
    signs: Vec<f64>,
    is_active: Vec<bool>,
    ignored: Vec<bool>,
    chol: Cholesky,
    // L⁻¹ signs, extended as columns enter.
    fwd: Vec<f64>,
    just_left: Option<usize>,
    steps: usize,
}

impl<'a, S: PathSystem> Homotopy<'a, S> {
    fn new(gs: &'a S) -> Self {
        let p = gs.cols();
        let corr: Vec<f64> = gs.dtb().to_vec();
        let ignored = (0..p).map(|j| gs.diag(j) <= 0.0).collect();
        let mut h = Self {
            gs,
            btb: gs.btb(),
            c: vec![0.0; p],
            corr,
            rr: gs.btb(),
            lambda: 0.0,
            active: Vec::new(),
            signs: Vec::new(),
            is_active: vec![false; p],
            ignored,
            chol: Cholesky::default(),
            fwd: Vec::new(),
            just_left: None,
            steps: 0,
        };
        let best = (0..p)
            .filter(|&j| !h.ignored[j])
            .max_by(|&a, &b| h.corr[a].abs().total_cmp(&h.corr[b].abs()));
        if let Some(j) = best {
            h.lambda = h.corr[j].abs();
            if h.lambda > 0.0 {
                h.enter(j);
            }
        }
        h
    }

    fn enter(&mut self, j: usize) -> bool {
        let col = self.gs.cross(&self.active, j);
        if !self.chol.push(&col, self.gs.diag(j)) {
            self.ignored[j] = true;
            return false;
        }
        let sign = self.corr[j].signum();
        let row = self.chol.rows.last().expect("row just pushed");
        let k = self.fwd.len();
        self.fwd.push((sign - dot(&row[..k], &self.fwd)) / row[k]);
        self.active.push(j);
        self.signs.push(sign);
        self.is_active[j] = true;
        true
    }

    fn leave(&mut self, pos: usize) {
        let j = self.active.remove(pos);
        self.signs.remove(pos);
        self.is_active[j] = false;
        self.c[j] = 0.0;
        self.just_left = Some(j);
        self.chol.remove(pos);
        self.fwd = self.chol.forward(&self.signs);
        // A smaller active set may admit previously dependent columns.
        for (k, ig) in self.ignored.iter_mut().enumerate() {
            *ig = self.gs.diag(k) <= 0.0;
        }
    }

    fn segment(&self) -> Option<Segment> {
        if self.active.is_empty() || self.lambda <= 0.0 {
            return None;
        }
        let dir = self.chol.backward(self.fwd.clone());
        let q: f64 = dir.iter().zip(&self.signs).map(|(d, s)| d * s).sum();
        if !(q > 0.0 && q.is_finite()) {
            return None;
        }
        let p = self.gs.cols();
        let a = self.gs.apply(&self.active, &dir);
        let lambda = self.lambda;
        let mut gamma = lambda;
        let mut event = Event::End;
        for j in 0..p {
            if self.is_active[j] || self.ignored[j] || Some(j) == self.just_left {
                continue;
            }
            let (cj, aj) = (self.corr[j], a[j]);
            for (num, den) in [(lambda - cj, 1.0 - aj), (lambda + cj, 1.0 + aj)] {
                if den > 1e-12 {
                    let t = (num / den).max(0.0);
                    if t < gamma {
                        gamma = t;
                        event = Event::Enter(j);
                    }
                }
            }
        }
        for (pos, (&k, &dk)) in self.active.iter().zip(&dir).enumerate() {
            if dk != 0.0 {
                let t = -self.c[k] / dk;
                if t > 0.0 && t < gamma {
                    gamma = t;
                    event = Event::Leave(pos);
                }
            }
        }
        Some(Segment { dir, a, q, gamma, event })
    }

    fn advance(&mut self, seg: Segment) {
        let g = seg.gamma;
        for (&k, &dk) in self.active.iter().zip(&seg.dir) {
            self.c[k] += g * dk;
        }
        for (cj, aj) in self.corr.iter_mut().zip(&seg.a) {
            *cj -= g * aj;
        }
        self.rr += g * seg.q * (g - 2.0 * self.lambda);
        self.lambda -= g;
        self.just_left = None;
        self.steps += 1;
        match seg.event {
            Event::Enter(j) => {
                self.enter(j);
            }
            Event::Leave(pos) => self.leave(pos),
            Event::End => self.lambda = 0.0,
        }
        if self.steps % RESYNC_EVERY == 0 {
            self.resync();
        }
    }

    fn resync(&mut self) {
        (self.corr, self.rr) = self.gs.residual(&self.c);
    }

    fn snapshot(&self, at: Option<(&Segment, f64)>, converged: bool) -> BpdnSolution {
        let mut c = self.c.clone();
        let mut rr = self.rr;
        if let Some((seg, g)) = at {
            for (&k, &dk) in self.active.iter().zip(&seg.dir) {
                c[k] += g * dk;
            }
            rr += g * seg.q * (g - 2.0 * self.lambda);
        }
        BpdnSolution {
            c_hat: c,
            residual_rel: (rr.max(0.0) / self.btb).sqrt(),
            iterations: self.steps,
            converged,
            status: if converged { SolveStatus::Converged } else { SolveStatus::NotConverged },
        }
    }
}

// Four independent partial sums keep the multiply-adds pipelined.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

// Lower-triangular Cholesky factor grown one column at a time.
#[derive(Default)]
struct Cholesky {
    rows: Vec<Vec<f64>>,
}

impl Cholesky {
    // Append a column with off-diagonal Gram entries `col` and diagonal `diag`.
    fn push(&mut self, col: &[f64], diag: f64) -> bool {
        let w = self.forward(col);
        let d2 = diag - dot(&w, &w);
        if !(d2 > COLLINEAR * diag) {
            return false;
        }
        let mut row = w;
        row.push(d2.sqrt());
        self.rows.push(row);
        true
    }

    // Drop column `pos`; Givens rotations restore the triangular shape.
    fn remove(&mut self, pos: usize) {
        self.rows.remove(pos);
        for r in pos..self.rows.len() {
            let (a, b) = (self.rows[r][r], self.rows[r][r + 1]);
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            for row in &mut self.rows[r..] {
                let (x, y) = (row[r], row[r + 1]);
                row[r] = c * x + s * y;
                row[r + 1] = c * y - s * x;
            }
            self.rows[r].pop();
        }
    }

    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(b.len() + 1);
        for (i, row) in self.rows.iter().enumerate() {
            let s = dot(&row[..i], &y);
            y.push((b[i] - s) / row[i]);
        }
        y
    }

    // Solve `Lᵀ x = y`.
    fn backward(&self, mut x: Vec<f64>) -> Vec<f64> {
        let n = x.len();
        for i in (0..n).rev() {
            let row = &self.rows[i];
            let xi = x[i] / row[i];
            x[i] = xi;
            for (xk, l) in x[..i].iter_mut().zip(&row[..i]) {
                *xk -= l * xi;
            }
        }
        x
    }
}

/// `‖(1/N) DᵀD − I‖₂`.
pub fn gram_deviation(sys: &DesignSystem) -> Result<f64> {
    if sys.rows() == 0 {
        return arg_err("gram deviation of an empty design");
    }
    let inv = 1.0 / sys.rows() as f64;
    let g = sys.matrix.tr_mul(&sys.matrix) * inv;
    Ok(spectral_deviation(g))
}

fn spectral_deviation(mut g: DMatrix<f64>) -> f64 {
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    g.symmetric_eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Exact restricted isometry constant of order `s` of `D / √N`, by enumerating
/// every column subset of size `s`.
pub fn ric_bruteforce(sys: &DesignSystem, s: usize) -> Result<f64> {
    let p = sys.cols();
    if s == 0 || s > 12 || s > p {
        return arg_err(format!("sparsity {s} must lie in 1..={}", p.min(12)));
    }
    if binomial(p, s) > 1e6 {
        return arg_err(format!("C({p}, {s}) subsets exceed the enumeration budget"));
    }
    let inv = 1.0 / sys.rows() as f64;
    let g = sys.matrix.tr_mul(&sys.matrix) * inv;
    let mut idx: Vec<usize> = (0..s).collect();
    let mut worst = 0.0f64;
    loop {
        let sub = g.select_rows(&idx).select_columns(&idx);
        worst = worst.max(spectral_deviation(sub));
        let Some(i) = (0..s).rev().find(|&i| idx[i] < p - s + i) else { break };
        idx[i] += 1;
        for k in i + 1..s {
            idx[k] = idx[k - 1] + 1;
        }
    }
    Ok(worst)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
