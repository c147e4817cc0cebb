//! Smolyak sparse-grid quadrature over R^d built from Gauss-Hermite levels.
//!
//! `S_Lambda = sum_{l in Lambda} Delta_{l_1} (x) ... (x) Delta_{l_d}` with
//! `Delta_l = Q_l - Q_{l-1}` and `Q_0 = 0`. The univariate rules are not
//! nested, so no node is shared across levels and the point count is
//! `N = sum_{l in Lambda} prod_k n_{l_k}`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss_hermite::{gauss_hermite_rule, QuadratureRule};
use crate::sum::CompensatedSum;

/// Largest index set [`isotropic_index_set`] will enumerate.
pub const INDEX_SET_CAP: usize = 2_000_000;

/// A level multi-index; every component is at least 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(levels: Vec<usize>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("multi-index must have d >= 1".into()));
        }
        if levels.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "multi-index components must be >= 1, got {levels:?}"
            )));
        }
        Ok(Self(levels))
    }

    pub fn levels(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm1(&self) -> usize {
        self.0.iter().sum()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// A finite set of multi-indices of a common dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    dim: usize,
    indices: BTreeSet<MultiIndex>,
    isotropic_level: Option<usize>,
}

impl IndexSet {
    pub fn new(dim: usize, indices: impl IntoIterator<Item = MultiIndex>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("index set needs d >= 1".into()));
        }
        let indices: BTreeSet<_> = indices.into_iter().collect();
        if let Some(bad) = indices.iter().find(|m| m.dim() != dim) {
            return Err(Error::InvalidArgument(format!(
                "index {bad} has length {} in a d = {dim} set",
                bad.dim()
            )));
        }
        Ok(Self {
            dim,
            indices,
            isotropic_level: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: &MultiIndex) -> bool {
        self.indices.contains(index)
    }

    /// Indices in ascending lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices.iter()
    }

    /// `Some(L)` when built by [`isotropic_index_set`].
    pub fn isotropic_level(&self) -> Option<usize> {
        self.isotropic_level
    }

    /// Closed under decreasing any single component (down to 1).
    pub fn is_downward_closed(&self) -> bool {
        self.indices.iter().all(|m| {
            (0..self.dim).all(|k| {
                if m.0[k] == 1 {
                    return true;
                }
                let mut lower = m.0.clone();
                lower[k] -= 1;
                self.indices.contains(&MultiIndex(lower))
            })
        })
    }
}

/// `{ l in N^d : l_k >= 1, |l|_1 <= L }`; empty when `L < d`.
pub fn isotropic_index_set(d: usize, level: usize) -> Result<IndexSet> {
    if d == 0 || level == 0 {
        return Err(Error::InvalidArgument(format!(
            "isotropic index set needs d >= 1 and L >= 1, got d = {d}, L = {level}"
        )));
    }
    // #{l >= 1 : |l|_1 <= L} = C(L, d)
    let count = binomial(level as u128, d as u128);
    if count > INDEX_SET_CAP as u128 {
        return Err(Error::IndexSetTooLarge {
            d,
            level,
            cap: INDEX_SET_CAP,
        });
    }
    let mut indices = BTreeSet::new();
    let mut current = Vec::with_capacity(d);
    enumerate_bounded(d, level, &mut current, &mut indices);
    Ok(IndexSet {
        dim: d,
        indices,
        isotropic_level: Some(level),
    })
}

fn enumerate_bounded(
    d: usize,
    budget: usize,
    current: &mut Vec<usize>,
    out: &mut BTreeSet<MultiIndex>,
) {
    let remaining = d - current.len();
    if remaining == 0 {
        out.insert(MultiIndex(current.clone()));
        return;
    }
    // leave at least 1 for each later component
    if budget < remaining {
        return;
    }
    for l in 1..=budget - (remaining - 1) {
        current.push(l);
        enumerate_bounded(d, budget - l, current, out);
        current.pop();
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Map from level to univariate point count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LevelSchedule {
    /// `n_l = 2^(l-1)`; satisfies `M^(l-1) <= n_l <= M0 (M^l - 1)` with `M = 2`, `M0 = 1`.
    #[default]
    Pow2,
    /// `n_l = l`. Diagnostic only: not geometric.
    Linear,
}

impl LevelSchedule {
    /// `(M, M0)` of the geometric bracket, when the schedule has one.
    pub fn bracket(&self) -> Option<(u64, u64)> {
        match self {
            LevelSchedule::Pow2 => Some((2, 1)),
            LevelSchedule::Linear => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LevelSchedule::Pow2 => "pow2",
            LevelSchedule::Linear => "linear",
        }
    }
}

impl std::str::FromStr for LevelSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pow2" => Ok(LevelSchedule::Pow2),
            "linear" => Ok(LevelSchedule::Linear),
            other => Err(Error::InvalidArgument(format!(
                "unknown schedule `{other}` (expected pow2 or linear)"
            ))),
        }
    }
}

/// Number of univariate Gauss-Hermite points used at `level`.
pub fn level_size(level: usize, schedule: LevelSchedule) -> Result<usize> {
    if level == 0 {
        return Err(Error::InvalidArgument("levels start at 1".into()));
    }
    match schedule {
        LevelSchedule::Pow2 => {
            if level > 62 {
                return Err(Error::Overflow(format!("2^(l-1) for l = {level}")));
            }
            Ok(1usize << (level - 1))
        }
        LevelSchedule::Linear => Ok(level),
    }
}

/// Combination-technique coefficients for the isotropic set `Lambda_L`:
/// `c_l = (-1)^(L-|l|) C(d-1, L-|l|)` for `L-d+1 <= |l| <= L`. Zero
/// coefficients are omitted.
pub fn combination_coefficients(d: usize, level: usize) -> Result<Vec<(MultiIndex, i64)>> {
    if d == 0 || level < d {
        return Err(Error::InvalidArgument(format!(
            "combination form needs L >= d >= 1, got d = {d}, L = {level}"
        )));
    }
    let set = isotropic_index_set(d, level)?;
    let lowest = level + 1 - d;
    Ok(set
        .iter()
        .filter(|m| m.norm1() >= lowest)
        .map(|m| {
            let gap = level - m.norm1();
            let magnitude = binomial((d - 1) as u128, gap as u128) as i64;
            let sign = if gap.is_multiple_of(2) { 1 } else { -1 };
            (m.clone(), sign * magnitude)
        })
        .collect())
}

/// `N = sum_{l in Lambda} prod_k n_{l_k}`, with no deduplication across levels.
pub fn total_points(set: &IndexSet, schedule: LevelSchedule) -> Result<u64> {
    let mut total: u64 = 0;
    for m in set.iter() {
        total = total
            .checked_add(grid_size(m, schedule)?)
            .ok_or_else(|| Error::Overflow("total point count".into()))?;
    }
    Ok(total)
}

fn grid_size(m: &MultiIndex, schedule: LevelSchedule) -> Result<u64> {
    m.levels().iter().try_fold(1u64, |acc, &l| {
        let n = level_size(l, schedule)? as u64;
        acc.checked_mul(n)
            .ok_or_else(|| Error::Overflow(format!("grid size of {m}")))
    })
}

/// Evaluation options for [`smolyak_quadrature_with`].
#[derive(Debug, Clone, Copy)]
pub struct SmolyakOptions {
    /// Evaluate the tensor grids concurrently. The reduction order is fixed,
    /// so results are bitwise identical either way.
    pub parallel: bool,
    /// Cache integrand values by node coordinates, so a node that appears in
    /// several grids is evaluated once. Off by default: the evaluation count
    /// then equals [`total_points`] for downward-closed sets.
    pub node_cache: bool,
}

impl Default for SmolyakOptions {
    fn default() -> Self {
        Self {
            parallel: true,
            node_cache: false,
        }
    }
}

/// `S_Lambda(f)` in the telescoping (Delta) form, for any finite set.
pub fn smolyak_quadrature<F>(f: &F, set: &IndexSet, schedule: LevelSchedule) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    smolyak_quadrature_with(f, set, schedule, SmolyakOptions::default())
}

pub fn smolyak_quadrature_with<F>(
    f: &F,
    set: &IndexSet,
    schedule: LevelSchedule,
    options: SmolyakOptions,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = set.dim();
    // tensor rules Q_{l-k} needed by each Delta product, k in {0,1}^d
    let mut needed = BTreeSet::new();
    for l in set.iter() {
        for (grid, _) in lower_neighbours(l) {
            needed.insert(grid);
        }
    }
    let needed: Vec<MultiIndex> = needed.into_iter().collect();

    let values: Vec<f64> = if options.node_cache {
        let mut cache = HashMap::new();
        needed
            .iter()
            .map(|g| {
                let rules = rules_for(g, schedule)?;
                tensor_rule(&rules, d, |x| {
                    let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
                    if let Some(&v) = cache.get(&key) {
                        return v;
                    }
                    let v = f(x);
                    cache.insert(key, v);
                    v
                })
            })
            .collect::<Result<_>>()?
    } else if options.parallel {
        needed
            .par_iter()
            .map(|g| tensor_rule(&rules_for(g, schedule)?, d, f))
            .collect::<Result<_>>()?
    } else {
        needed
            .iter()
            .map(|g| tensor_rule(&rules_for(g, schedule)?, d, f))
            .collect::<Result<_>>()?
    };
    let memo: BTreeMap<&MultiIndex, f64> = needed.iter().zip(values).collect();

    let mut total = CompensatedSum::new();
    for l in set.iter() {
        let mut delta = CompensatedSum::new();
        for (grid, sign) in lower_neighbours(l) {
            delta.add(sign as f64 * memo[&grid]);
        }
        total.add(delta.value());
    }
    Ok(total.value())
}

/// `S_{Lambda_L}(f)` through the combination technique; only valid for the
/// isotropic set. Returns 0 when `L < d`.
pub fn smolyak_combination<F>(f: &F, d: usize, level: usize, schedule: LevelSchedule) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if d == 0 {
        return Err(Error::InvalidArgument("d must be >= 1".into()));
    }
    if level < d {
        return Ok(0.0);
    }
    let coefficients = combination_coefficients(d, level)?;
    let parts: Vec<f64> = coefficients
        .par_iter()
        .map(|(m, c)| Ok(*c as f64 * tensor_rule(&rules_for(m, schedule)?, d, f)?))
        .collect::<Result<_>>()?;
    let mut total = CompensatedSum::new();
    total.extend(parts);
    Ok(total.value())
}

/// `(l - k, (-1)^|k|)` for `k in {0,1}^d` with `l - k >= 1`.
fn lower_neighbours(l: &MultiIndex) -> Vec<(MultiIndex, i32)> {
    let d = l.dim();
    let mut out = Vec::with_capacity(1 << d.min(20));
    for mask in 0u64..(1u64 << d) {
        let mut levels = l.0.clone();
        let mut ok = true;
        for (k, lv) in levels.iter_mut().enumerate() {
            if mask >> k & 1 == 1 {
                *lv -= 1;
                if *lv == 0 {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            out.push((MultiIndex(levels), sign));
        }
    }
    out
}

fn rules_for(m: &MultiIndex, schedule: LevelSchedule) -> Result<Vec<Arc<QuadratureRule>>> {
    m.levels()
        .iter()
        .map(|&l| gauss_hermite_rule(level_size(l, schedule)?))
        .collect()
}

/// Tensor-product rule applied to `f`, nodes visited in odometer order with
/// the last coordinate fastest.
fn tensor_rule<F>(rules: &[Arc<QuadratureRule>], d: usize, mut f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut pos = vec![0usize; d];
    let mut x: Vec<f64> = rules.iter().map(|r| r.nodes()[0]).collect();
    let mut sum = CompensatedSum::new();
    loop {
        let w: f64 = rules
            .iter()
            .zip(&pos)
            .map(|(r, &p)| r.weights()[p])
            .product();
        let v = f(&x);
        if !v.is_finite() {
            return Err(Error::IntegrandFailure { node: x, value: v });
        }
        sum.add(w * v);

        let mut k = d;
        loop {
            if k == 0 {
                return Ok(sum.value());
            }
            k -= 1;
            pos[k] += 1;
            if pos[k] < rules[k].len() {
                x[k] = rules[k].nodes()[pos[k]];
                break;
            }
            pos[k] = 0;
            x[k] = rules[k].nodes()[0];
        }
    }
}
