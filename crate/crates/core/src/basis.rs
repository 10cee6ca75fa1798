//! Anisotropic total-order bases.
//!
//! A basis is an ordered set of multi-indices over `d` input dimensions. The
//! order-`p` set contains every `k` with `Σ k_i / p_i ≤ 1` (dimensions with
//! `p_i = 0` admit only `k_i = 0`). Bases are kept in graded-lexicographic
//! order, which fixes the tie-breaking used by [`basis_contract`].

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{arg_err, Error, Result};
use crate::polynomials::{check_order, PolyFamily};

const MEMBERSHIP_TOL: f64 = 1e-12;
// Slack for `ceil(gamma * p)` so that e.g. 1.01 * 100 is not rounded to 102.
const CEIL_SLACK: f64 = 1e-9;

/// Per-dimension polynomial orders of one tensor-product basis function.
///
/// Stored sparsely as `(dimension, order)` pairs sorted by dimension with no
/// zero orders, so equality and hashing follow the dense interpretation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(SmallVec<[(u32, u16); 4]>);

impl MultiIndex {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_dense(orders: &[usize]) -> Self {
        let mut entries = SmallVec::new();
        for (dim, &k) in orders.iter().enumerate() {
            if k > 0 {
                entries.push((dim as u32, k as u16));
            }
        }
        MultiIndex(entries)
    }

    /// Build from `(dimension, order)` pairs in any order; zero orders are dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut entries: SmallVec<[(u32, u16); 4]> = pairs
            .into_iter()
            .filter(|&(_, k)| k > 0)
            .map(|(d, k)| (d as u32, k as u16))
            .collect();
        entries.sort_unstable();
        entries.dedup_by_key(|e| e.0);
        MultiIndex(entries)
    }

    pub fn get(&self, dim: usize) -> usize {
        self.0
            .iter()
            .find(|e| e.0 as usize == dim)
            .map_or(0, |e| e.1 as usize)
    }

    /// Nonzero `(dimension, order)` pairs in ascending dimension order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|&(d, k)| (d as usize, k as usize))
    }

    pub fn total_order(&self) -> usize {
        self.0.iter().map(|e| e.1 as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// One past the largest dimension with a nonzero order.
    pub fn span(&self) -> usize {
        self.0.last().map_or(0, |e| e.0 as usize + 1)
    }

    pub fn to_dense(&self, d: usize) -> Vec<usize> {
        let mut v = vec![0; d];
        for (dim, k) in self.entries() {
            if dim < d {
                v[dim] = k;
            }
        }
        v
    }

    /// Graded-lexicographic order: lower total order first; within a grade, the
    /// index with the larger order in the first differing dimension first.
    pub fn grlex_cmp(&self, other: &Self) -> Ordering {
        self.total_order()
            .cmp(&other.total_order())
            .then_with(|| {
                let (a, b) = (&self.0, &other.0);
                let (mut i, mut j) = (0, 0);
                loop {
                    match (a.get(i), b.get(j)) {
                        (None, None) => return Ordering::Equal,
                        (Some(_), None) => return Ordering::Less,
                        (None, Some(_)) => return Ordering::Greater,
                        (Some(x), Some(y)) => {
                            if x.0 != y.0 {
                                // The lower dimension is nonzero only in one of them.
                                return if x.0 < y.0 { Ordering::Less } else { Ordering::Greater };
                            }
                            if x.1 != y.1 {
                                return y.1.cmp(&x.1);
                            }
                            i += 1;
                            j += 1;
                        }
                    }
                }
            })
    }
}

/// Per-dimension order budget `p` of an anisotropic total-order set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderVector(pub Vec<f64>);

impl OrderVector {
    pub fn isotropic(d: usize, p: f64) -> Self {
        OrderVector(vec![p; d])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Membership of `k` in the order-`p` set.
    pub fn admits(&self, k: &MultiIndex) -> bool {
        let mut sum = 0.0;
        for (dim, order) in k.entries() {
            let p = self.0.get(dim).copied().unwrap_or(0.0);
            if p <= 0.0 {
                return false;
            }
            sum += order as f64 / p;
        }
        sum <= 1.0 + MEMBERSHIP_TOL
    }
}

/// An ordered set of basis functions over `d` inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    families: Vec<PolyFamily>,
    indices: Vec<MultiIndex>,
    generator: Option<OrderVector>,
}

impl BasisSpec {
    /// Basis from an explicit index list. Duplicates are removed and the list is
    /// put in graded-lexicographic order.
    pub fn from_indices(families: Vec<PolyFamily>, mut indices: Vec<MultiIndex>) -> Result<Self> {
        for f in &families {
            f.validate()?;
        }
        for k in &indices {
            if k.span() > families.len() {
                return arg_err(format!(
                    "multi-index uses dimension {} but only {} families are given",
                    k.span() - 1,
                    families.len()
                ));
            }
            for (_, order) in k.entries() {
                check_order(order)?;
            }
        }
        indices.sort_by(|a, b| a.grlex_cmp(b));
        indices.dedup();
        Ok(Self { families, indices, generator: None })
    }

    pub fn dim(&self) -> usize {
        self.families.len()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn families(&self) -> &[PolyFamily] {
        &self.families
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn generator(&self) -> Option<&OrderVector> {
        self.generator.as_ref()
    }

    pub fn contains(&self, k: &MultiIndex) -> bool {
        self.position(k).is_some()
    }

    pub fn position(&self, k: &MultiIndex) -> Option<usize> {
        self.indices.binary_search_by(|x| x.grlex_cmp(k)).ok()
    }

    pub fn constant_position(&self) -> Option<usize> {
        self.position(&MultiIndex::zero())
    }

    /// Per-dimension maximum order over members.
    pub fn max_orders(&self) -> Vec<usize> {
        let mut p = vec![0; self.dim()];
        for k in &self.indices {
            for (dim, order) in k.entries() {
                p[dim] = p[dim].max(order);
            }
        }
        p
    }

    /// Largest per-dimension order.
    pub fn max_order(&self) -> usize {
        self.max_orders().into_iter().max().unwrap_or(0)
    }

    /// True when both bases hold the same members (families are not compared).
    pub fn same_members(&self, other: &Self) -> bool {
        self.indices == other.indices
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.indices.iter().all(|k| other.contains(k))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: BasisSpec = serde_json::from_str(s)?;
        let generator = raw.generator.clone();
        let mut b = BasisSpec::from_indices(raw.families, raw.indices)?;
        b.generator = generator;
        Ok(b)
    }

    /// Row of basis function values at `xi`.
    pub fn eval(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let ev = BasisEvaluator::new(self);
        if xi.len() < ev.span {
            return arg_err(format!(
                "point has dimension {} but the basis uses {} dimensions",
                xi.len(),
                ev.span
            ));
        }
        if let Some(x) = xi.iter().find(|x| !x.is_finite()) {
            return arg_err(format!("evaluation point has non-finite coordinate {x}"));
        }
        let mut out = vec![0.0; self.len()];
        ev.eval_into(xi, &mut out, &mut ev.scratch());
        Ok(out)
    }
}

/// Evaluate every member of `basis` at `xi`: entry `j` is `∏ ψ_{k_i}(ξ_i)`.
pub fn basis_eval(basis: &BasisSpec, xi: &[f64]) -> Result<Vec<f64>> {
    basis.eval(xi)
}

/// Reusable evaluation plan for one basis: one-dimensional values are computed
/// once per active dimension up to its maximum order and then multiplied out.
#[derive(Debug, Clone)]
pub struct BasisEvaluator<'a> {
    basis: &'a BasisSpec,
    // (dimension, max order, offset into the scratch table)
    active: Vec<(usize, usize, usize)>,
    // Scratch positions of the factors of basis function `j`:
    // `factors[starts[j]..starts[j + 1]]`.
    factors: Vec<u32>,
    starts: Vec<u32>,
    table_len: usize,
    span: usize,
}

impl<'a> BasisEvaluator<'a> {
    pub fn new(basis: &'a BasisSpec) -> Self {
        let maxes = basis.max_orders();
        let mut active = Vec::new();
        let mut offset_of = HashMap::new();
        let mut off = 0;
        for (dim, &p) in maxes.iter().enumerate() {
            if p > 0 {
                active.push((dim, p, off));
                offset_of.insert(dim, off);
                off += p + 1;
            }
        }
        let span = basis.indices.iter().map(|k| k.span()).max().unwrap_or(0);
        let mut factors = Vec::new();
        let mut starts = vec![0u32];
        for k in &basis.indices {
            factors.extend(k.entries().map(|(dim, order)| (offset_of[&dim] + order) as u32));
            starts.push(factors.len() as u32);
        }
        Self { basis, active, factors, starts, table_len: off, span }
    }

    pub fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.table_len]
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Dimensions the point must provide.
    pub fn span(&self) -> usize {
        self.span
    }

    /// Fill `out` (length `|B|`) with the basis row at `xi`. No argument checks.
    pub fn eval_into(&self, xi: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let fams = &self.basis.families;
        for &(dim, p, off) in &self.active {
            fams[dim].fill(xi[dim], &mut scratch[off..off + p + 1]);
        }
        let table = &scratch[..self.table_len];
        let mut lo = 0;
        for (o, &hi) in out.iter_mut().zip(&self.starts[1..]) {
            let hi = hi as usize;
            let mut v = 1.0;
            for &i in &self.factors[lo..hi] {
                v *= table[i as usize];
            }
            *o = v;
            lo = hi;
        }
    }

    /// Squared ℓ2 norm of the basis row at `xi`.
    pub fn norm_sq(&self, xi: &[f64], row: &mut [f64], scratch: &mut [f64]) -> f64 {
        self.eval_into(xi, row, scratch);
        row.iter().map(|v| v * v).sum()
    }
}

/// The order-`p` anisotropic total-order basis.
///
/// Active dimensions are visited in order of decreasing `p_i`; once the
/// remaining budget cannot afford one order in the current dimension, no later
/// dimension can afford one either and the whole subtree is emitted at once.
pub fn basis_id(p: &OrderVector, families: &[PolyFamily]) -> Result<BasisSpec> {
    if p.len() != families.len() {
        return arg_err(format!(
            "order vector has {} entries but {} families are given",
            p.len(),
            families.len()
        ));
    }
    if let Some(x) = p.0.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return arg_err(format!("order vector entry {x} must be finite and nonnegative"));
    }
    for (dim, &pi) in p.0.iter().enumerate() {
        if pi.floor() as usize > crate::polynomials::MAX_ORDER {
            return arg_err(format!("order {pi} in dimension {dim} exceeds the supported maximum"));
        }
    }
    let mut dims: Vec<usize> = (0..p.len()).filter(|&i| p.0[i] >= 1.0 - MEMBERSHIP_TOL).collect();
    dims.sort_by(|&a, &b| p.0[b].total_cmp(&p.0[a]).then(a.cmp(&b)));
    let inv: Vec<f64> = dims.iter().map(|&i| 1.0 / p.0[i]).collect();

    let mut out = Vec::new();
    let mut current: Vec<(usize, usize)> = Vec::new();
    enumerate(&dims, &inv, 0, 0.0, &mut current, &mut out);

    let mut basis = BasisSpec::from_indices(families.to_vec(), out)?;
    basis.generator = Some(p.clone());
    Ok(basis)
}

fn enumerate(
    dims: &[usize],
    inv: &[f64],
    j: usize,
    used: f64,
    current: &mut Vec<(usize, usize)>,
    out: &mut Vec<MultiIndex>,
) {
    let limit = 1.0 + MEMBERSHIP_TOL;
    if j == dims.len() || used + inv[j] > limit {
        out.push(MultiIndex::from_pairs(current.iter().copied()));
        return;
    }
    enumerate(dims, inv, j + 1, used, current, out);
    let mut k = 1;
    loop {
        let next = used + k as f64 * inv[j];
        if next > limit {
            break;
        }
        current.push((dims[j], k));
        enumerate(dims, inv, j + 1, next, current, out);
        current.pop();
        k += 1;
    }
}

/// Remove the `m` members with the smallest `|c_i|`; ties go to the earlier member.
pub fn basis_contract(basis: &BasisSpec, c: &[f64], m: usize) -> Result<BasisSpec> {
    if c.len() != basis.len() {
        return arg_err(format!(
            "coefficient vector has length {} but the basis has {} members",
            c.len(),
            basis.len()
        ));
    }
    if m > basis.len() {
        return arg_err(format!("cannot remove {m} members from a basis of {}", basis.len()));
    }
    let order = contraction_order(c);
    let mut keep = vec![true; basis.len()];
    for &i in &order[..m] {
        keep[i] = false;
    }
    let indices = basis
        .indices
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(i, _)| i.clone())
        .collect();
    Ok(BasisSpec { families: basis.families.clone(), indices, generator: None })
}

/// Positions sorted by removal priority: `(|c_i|, i)` ascending.
pub fn contraction_order(c: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs()).then(a.cmp(&b)));
    order
}

/// Coordinate-wise maximum order over the members of `basis`.
pub fn envelope(basis: &BasisSpec) -> Result<OrderVector> {
    if basis.is_empty() {
        return arg_err("envelope of an empty basis");
    }
    Ok(OrderVector(basis.max_orders().into_iter().map(|k| k as f64).collect()))
}

/// Expand `basis` to `basis_id(⌈γ p⌉)` where `p` is its envelope with up to
/// `dim_add` inactive dimensions (lowest index first) switched on at order 1.
/// With `bound`, the expanded order is clipped coordinate-wise.
pub fn basis_expand(
    basis: &BasisSpec,
    gamma: f64,
    dim_add: usize,
    bound: Option<&OrderVector>,
) -> Result<BasisSpec> {
    if !(gamma.is_finite() && gamma > 1.0) {
        return arg_err(format!("expansion factor must exceed 1, got {gamma}"));
    }
    let mut p = envelope(basis)?.0;
    for pi in p.iter_mut() {
        *pi = (gamma * *pi - CEIL_SLACK).ceil().max(0.0);
    }
    // New dimensions enter at order 1, unscaled.
    for pi in p.iter_mut().filter(|x| **x == 0.0).take(dim_add) {
        *pi = 1.0;
    }
    if let Some(b) = bound {
        if b.len() != p.len() {
            return arg_err(format!("bound has {} entries, basis has {} dimensions", b.len(), p.len()));
        }
        for (pi, bi) in p.iter_mut().zip(&b.0) {
            *pi = pi.min(bi.max(0.0));
        }
    }
    basis_id(&OrderVector(p), &basis.families)
}

/// Coordinate-wise order bound: for each order level `k` present in `p`, the
/// first `i_k + dim_add` coordinates may reach `k` (where `i_k` is the last
/// coordinate with order exactly `k`), and the first `dim_add` coordinates get
/// one extra order.
pub fn basis_upper_bound(p: &OrderVector, dim_add: usize) -> Result<OrderVector> {
    if p.is_empty() {
        return arg_err("upper bound of an empty order vector");
    }
    if let Some(x) = p.0.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return arg_err(format!("order vector entry {x} must be finite and nonnegative"));
    }
    let d = p.len();
    let orders: Vec<usize> = p.0.iter().map(|x| x.floor() as usize).collect();
    let top = orders.iter().copied().max().unwrap_or(0);
    let mut b = vec![0usize; d];
    for k in 1..=top {
        // Levels with no coordinate at exactly this order are skipped.
        let Some(last) = orders.iter().rposition(|&o| o == k) else {
            continue;
        };
        let reach = (last + 1 + dim_add).min(d);
        for bi in b.iter_mut().take(reach) {
            *bi = k;
        }
    }
    for bi in b.iter_mut().take(dim_add.min(d)) {
        *bi += 1;
    }
    Ok(OrderVector(b.into_iter().map(|x| x as f64).collect()))
}

impl TryFrom<&str> for OrderVector {
    type Error = Error;
    fn try_from(s: &str) -> Result<Self> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Argument(format!("bad order entry {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(OrderVector)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn leg(d: usize) -> Vec<PolyFamily> {
        vec![PolyFamily::LegendreUniform { lo: -1.0, hi: 1.0 }; d]
    }

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex::from_dense(v)
    }

    // Oracle: test every point of the full tensor grid against the definition.
    fn brute_force(p: &[f64]) -> Vec<Vec<usize>> {
        let d = p.len();
        let caps: Vec<usize> = p.iter().map(|x| x.floor() as usize).collect();
        let mut out = Vec::new();
        let mut k = vec![0usize; d];
        loop {
            let mut sum = 0.0;
            let mut ok = true;
            for i in 0..d {
                if k[i] > 0 {
                    if p[i] == 0.0 {
                        ok = false;
                        break;
                    }
                    sum += k[i] as f64 / p[i];
                }
            }
            if ok && sum <= 1.0 + 1e-12 {
                out.push(k.clone());
            }
            let mut i = 0;
            loop {
                if i == d {
                    out.sort();
                    return out;
                }
                if k[i] < caps[i] {
                    k[i] += 1;
                    break;
                }
                k[i] = 0;
                i += 1;
            }
        }
    }

    fn dense_sorted(b: &BasisSpec) -> Vec<Vec<usize>> {
        let mut v: Vec<Vec<usize>> = b.indices().iter().map(|k| k.to_dense(b.dim())).collect();
        v.sort();
        v
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn basis_id_examples() {
        assert_eq!(basis_id(&OrderVector(vec![2.0, 2.0]), &leg(2)).unwrap().len(), 6);
        let b = basis_id(&OrderVector(vec![4.0, 2.0]), &leg(2)).unwrap();
        assert_eq!(b.len(), 9);
        assert_eq!(dense_sorted(&b), brute_force(&[4.0, 2.0]));
        let z = basis_id(&OrderVector(vec![0.0; 5]), &leg(5)).unwrap();
        assert_eq!(z.len(), 1);
        assert!(z.indices()[0].is_zero());
    }

    #[test]
    fn grlex_ordering() {
        let b = basis_id(&OrderVector(vec![2.0, 2.0]), &leg(2)).unwrap();
        let dense: Vec<Vec<usize>> = b.indices().iter().map(|k| k.to_dense(2)).collect();
        assert_eq!(
            dense,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
    }

    #[test]
    fn eval_examples() {
        let b = BasisSpec::from_indices(leg(2), vec![mi(&[1, 0]), mi(&[0, 1])]).unwrap();
        let row = basis_eval(&b, &[1.0, 1.0]).unwrap();
        assert!((row[0] - 3f64.sqrt()).abs() < 1e-14 && (row[1] - 3f64.sqrt()).abs() < 1e-14);
        let b = BasisSpec::from_indices(leg(2), vec![mi(&[1, 1])]).unwrap();
        assert!((basis_eval(&b, &[1.0, -1.0]).unwrap()[0] + 3.0).abs() < 1e-13);
        let b = BasisSpec::from_indices(leg(2), vec![MultiIndex::zero()]).unwrap();
        assert_eq!(basis_eval(&b, &[0.3, 0.1]).unwrap(), vec![1.0]);
        assert!(basis_eval(&b, &[f64::INFINITY, 0.0]).is_err());
        let b = BasisSpec::from_indices(leg(3), vec![mi(&[0, 0, 2])]).unwrap();
        assert!(basis_eval(&b, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn singleton_eval_matches_1d_product() {
        let fams = vec![
            PolyFamily::LegendreUniform { lo: 0.0, hi: 1.0 },
            PolyFamily::HermiteGaussian,
            PolyFamily::LegendreUniform { lo: -1.0, hi: 1.0 },
        ];
        let k = mi(&[3, 5, 1]);
        let b = BasisSpec::from_indices(fams.clone(), vec![k]).unwrap();
        let x = [0.2, -0.7, 0.4];
        let v = basis_eval(&b, &x).unwrap()[0];
        let a = crate::polynomials::basis_eval_1d(&fams[0], 3, x[0]).unwrap()[3];
        let h = crate::polynomials::basis_eval_1d(&fams[1], 5, x[1]).unwrap()[5];
        let l = crate::polynomials::basis_eval_1d(&fams[2], 1, x[2]).unwrap()[1];
        assert!((v - a * h * l).abs() <= 1e-14 * v.abs().max(1.0));
    }

    #[test]
    fn contract_examples() {
        let fams = leg(2);
        let b = BasisSpec::from_indices(fams, vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1])]).unwrap();
        let out = basis_contract(&b, &[0.5, 0.01, 0.3], 1).unwrap();
        assert_eq!(out.indices(), &[mi(&[0, 0]), mi(&[0, 1])]);
        assert!(basis_contract(&b, &[0.5, 0.01, 0.3], 0).unwrap().same_members(&b));
        let two = BasisSpec::from_indices(leg(2), vec![mi(&[0, 0]), mi(&[1, 0])]).unwrap();
        let out = basis_contract(&two, &[0.2, 0.2], 1).unwrap();
        assert_eq!(out.indices(), &[mi(&[1, 0])]);
        assert!(basis_contract(&b, &[1.0, 1.0, 1.0], 4).is_err());
        assert!(basis_contract(&b, &[1.0], 1).is_err());
    }

    #[test]
    fn expand_examples() {
        let b = basis_id(&OrderVector(vec![2.0, 2.0]), &leg(2)).unwrap();
        let e = basis_expand(&b, 1.5, 0, None).unwrap();
        assert_eq!(e.generator().unwrap().0, vec![3.0, 3.0]);
        let c = BasisSpec::from_indices(leg(3), vec![MultiIndex::zero()]).unwrap();
        let e = basis_expand(&c, 1.01, 2, None).unwrap();
        assert_eq!(e.generator().unwrap().0, vec![1.0, 1.0, 0.0]);
        assert_eq!(e.len(), 3);
        let b = BasisSpec::from_indices(leg(2), vec![MultiIndex::zero(), mi(&[4, 0]), mi(&[0, 1])])
            .unwrap();
        let e = basis_expand(&b, 1.01, 0, None).unwrap();
        assert_eq!(e.generator().unwrap().0, vec![5.0, 2.0]);
        // dim_add never exceeds the problem dimension
        let e = basis_expand(&c, 1.01, 10, None).unwrap();
        assert_eq!(e.generator().unwrap().0, vec![1.0, 1.0, 1.0]);
        let e = basis_expand(&b, 1.5, 0, Some(&OrderVector(vec![3.0, 9.0]))).unwrap();
        assert_eq!(e.generator().unwrap().0, vec![3.0, 2.0]);
        assert!(basis_expand(&b, 1.0, 0, None).is_err());
    }

    #[test]
    fn expand_ceiling_is_exact_for_integral_products() {
        let b = BasisSpec::from_indices(leg(1), vec![MultiIndex::zero(), mi(&[100])]).unwrap();
        let e = basis_expand(&b, 1.01, 0, None).unwrap();
        assert_eq!(e.generator().unwrap().0, vec![101.0]);
    }

    #[test]
    fn upper_bound_examples() {
        // Hand trace: k=1 → i_1=3, b(1:4)=1; k=2 → i_2=1, b(1:2)=2; then b(1)+=1.
        let b = basis_upper_bound(&OrderVector(vec![2.0, 1.0, 1.0, 0.0, 0.0]), 1).unwrap();
        assert_eq!(b.0, vec![3.0, 2.0, 1.0, 1.0, 0.0]);
        assert_eq!(basis_upper_bound(&OrderVector(vec![1.0]), 0).unwrap().0, vec![1.0]);
        assert_eq!(basis_upper_bound(&OrderVector(vec![0.0, 0.0]), 1).unwrap().0, vec![1.0, 0.0]);
        // Missing level 1: only level 2 contributes.
        assert_eq!(
            basis_upper_bound(&OrderVector(vec![0.0, 2.0, 0.0, 0.0]), 1).unwrap().0,
            vec![3.0, 2.0, 2.0, 0.0]
        );
        // Reals are floored.
        assert_eq!(basis_upper_bound(&OrderVector(vec![1.7, 0.2]), 0).unwrap().0, vec![1.0, 0.0]);
        assert!(basis_upper_bound(&OrderVector(vec![]), 1).is_err());
    }

    // Independent re-trace of the bound with literal 1-based indexing.
    fn upper_bound_trace(p: &[usize], dim_add: usize) -> Vec<usize> {
        let d = p.len();
        let mut b = vec![0; d + 1]; // 1-based; b[0] unused
        let kmax = *p.iter().max().unwrap();
        for k in 1..=kmax {
            let mut ik = 0;
            for i in 1..=d {
                if p[i - 1] == k {
                    ik = i;
                }
            }
            if ik == 0 {
                continue;
            }
            let vk = (ik + dim_add).min(d);
            for i in 1..=vk {
                b[i] = k;
            }
        }
        for i in 1..=dim_add.min(d) {
            b[i] += 1;
        }
        b[1..].to_vec()
    }

    #[test]
    fn envelope_examples() {
        let b = BasisSpec::from_indices(leg(2), vec![MultiIndex::zero()]).unwrap();
        assert_eq!(envelope(&b).unwrap().0, vec![0.0, 0.0]);
        let b = BasisSpec::from_indices(leg(2), vec![mi(&[3, 0]), mi(&[1, 2])]).unwrap();
        assert_eq!(envelope(&b).unwrap().0, vec![3.0, 2.0]);
        let p = OrderVector(vec![4.0, 0.0, 2.0]);
        assert_eq!(envelope(&basis_id(&p, &leg(3)).unwrap()).unwrap(), p);
    }

    #[test]
    fn isotropic_sizes() {
        for d in 1..=6 {
            for p in 0..=6 {
                let b = basis_id(&OrderVector::isotropic(d, p as f64), &leg(d)).unwrap();
                assert_eq!(b.len(), binom(p + d, d), "d={d} p={p}");
            }
        }
    }

    #[test]
    fn high_dimensional_low_order_is_cheap() {
        let mut p = vec![1.0; 1000];
        p[0] = 3.0;
        p[1] = 2.0;
        let b = basis_id(&OrderVector(p), &leg(1000)).unwrap();
        // constant, 1000 linear terms, k0 in {2,3}, k1 = 2, and k0 = k1 = 1
        assert_eq!(b.len(), 1 + 1000 + 2 + 1 + 1);
    }

    #[test]
    fn json_round_trip() {
        let b = basis_id(&OrderVector(vec![3.0, 1.5]), &leg(2)).unwrap();
        let back = BasisSpec::from_json(&b.to_json().unwrap()).unwrap();
        assert_eq!(back, b);
    }

    proptest! {
        #[test]
        fn basis_id_matches_brute_force(p in prop::collection::vec(0usize..=6, 1..=4)) {
            let pv: Vec<f64> = p.iter().map(|&x| x as f64).collect();
            let b = basis_id(&OrderVector(pv.clone()), &leg(p.len())).unwrap();
            prop_assert_eq!(dense_sorted(&b), brute_force(&pv));
            prop_assert!(b.constant_position().is_some());
        }

        #[test]
        fn basis_id_real_orders_match_brute_force(p in prop::collection::vec(0.0f64..5.0, 1..=3)) {
            let b = basis_id(&OrderVector(p.clone()), &leg(p.len())).unwrap();
            prop_assert_eq!(dense_sorted(&b), brute_force(&p));
        }

        #[test]
        fn basis_id_is_monotone(pairs in prop::collection::vec((0usize..=6, 0usize..=6), 1..=5)) {
            let lo: Vec<f64> = pairs.iter().map(|&(a, b)| a.min(b) as f64).collect();
            let hi: Vec<f64> = pairs.iter().map(|&(a, b)| a.max(b) as f64).collect();
            let d = lo.len();
            let small = basis_id(&OrderVector(lo), &leg(d)).unwrap();
            let big = basis_id(&OrderVector(hi), &leg(d)).unwrap();
            prop_assert!(small.is_subset_of(&big));
        }

        #[test]
        fn expand_of_uncontracted_keeps_members(p in prop::collection::vec(0usize..=5, 1..=4)) {
            let d = p.len();
            let pv: Vec<f64> = p.iter().map(|&x| x as f64).collect();
            let b = basis_id(&OrderVector(pv), &leg(d)).unwrap();
            let c = vec![1.0; b.len()];
            let e = basis_expand(&basis_contract(&b, &c, 0).unwrap(), 1.0 + 1e-6, 0, None).unwrap();
            prop_assert!(b.is_subset_of(&e));
        }

        #[test]
        fn contract_removes_exactly_m(p in prop::collection::vec(0usize..=4, 1..=3), seed in 0u64..1000, frac in 0.0f64..=1.0) {
            let d = p.len();
            let pv: Vec<f64> = p.iter().map(|&x| x as f64).collect();
            let b = basis_id(&OrderVector(pv), &leg(d)).unwrap();
            let c: Vec<f64> = (0..b.len()).map(|i| (((i as u64 + 1) * (seed + 7)) % 11) as f64).collect();
            let m = ((b.len() as f64) * frac).floor() as usize;
            let out = basis_contract(&b, &c, m).unwrap();
            prop_assert_eq!(out.len(), b.len() - m);
            prop_assert!(out.is_subset_of(&b));
        }

        #[test]
        fn upper_bound_matches_trace(p in prop::collection::vec(0usize..=4, 1..=8), dim_add in 0usize..4) {
            let pv: Vec<f64> = p.iter().map(|&x| x as f64).collect();
            let got: Vec<usize> = basis_upper_bound(&OrderVector(pv), dim_add).unwrap()
                .0.iter().map(|&x| x as usize).collect();
            prop_assert_eq!(got, upper_bound_trace(&p, dim_add));
        }
    }
}
