//! Colorings, exact discrepancy oracles, greedy prefix signing and the
//! constructive coloring pipelines for anchored boxes and polytopes.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::decomposition::brianchon_gram;
use crate::error::{Error, Result};
use crate::gamma2::{dyadic_factorization, union_combine, Factorization};
use crate::geometry::Polytope;
use crate::linalg::{dot, norm, SparseMatrix};
use crate::setsystems::SetSystem;

/// Signs `±1` indexed by point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    pub signs: Vec<i8>,
}

impl Coloring {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(j) = signs.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput(format!("sign of point {j} is not ±1")));
        }
        Ok(Coloring { signs })
    }

    pub fn all_plus(n: usize) -> Self {
        Coloring { signs: vec![1; n] }
    }

    /// Bit `j` set means point `j` is `+1`.
    fn from_mask(n: usize, mask: u32) -> Self {
        Coloring { signs: (0..n).map(|j| if mask >> j & 1 == 1 { 1 } else { -1 }).collect() }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn flipped(&self) -> Self {
        Coloring { signs: self.signs.iter().map(|s| -s).collect() }
    }

    pub fn sum(&self) -> i64 {
        self.signs.iter().map(|&s| i64::from(s)).sum()
    }
}

/// `max_F |Σ_{p ∈ F} χ(p)|` and the maximizing row (`None` for an empty system).
pub fn evaluate_discrepancy(system: &SetSystem, chi: &Coloring) -> Result<(i64, Option<usize>)> {
    if chi.len() < system.n() {
        return Err(Error::MissingSign(chi.len()));
    }
    let mut best = (0i64, None);
    for (i, row) in system.rows().iter().enumerate() {
        let s: i64 = row.iter().map(|&j| i64::from(chi.signs[j])).sum();
        if best.1.is_none() || s.abs() > best.0 {
            best = (s.abs(), Some(i));
        }
    }
    Ok(best)
}

/// Largest ground set for [`exact_discrepancy`].
pub const EXACT_MAX_POINTS: usize = 24;
/// Largest ground set for [`hereditary_discrepancy_exact`].
pub const HEREDITARY_MAX_POINTS: usize = 16;

fn row_masks(system: &SetSystem) -> Vec<u32> {
    let mut masks: Vec<u32> = system.rows().iter().map(|r| r.iter().fold(0u32, |m, &j| m | 1 << j)).collect();
    masks.sort_unstable();
    masks.dedup();
    masks
}

/// Max row imbalance of coloring `plus` restricted to `ground`, stopping once it reaches `stop`.
#[inline]
fn imbalance(rows: &[u32], ground: u32, plus: u32, stop: u32) -> u32 {
    let mut worst = 0u32;
    for &r in rows {
        let r = r & ground;
        let total = r.count_ones();
        let pos = (r & plus).count_ones();
        let v = (2 * pos).abs_diff(total);
        if v > worst {
            worst = v;
            if worst >= stop {
                break;
            }
        }
    }
    worst
}

/// Minimum over colorings of `ground` (the top point fixed to `+1`), stopping
/// early once `good_enough` is reached.
fn min_disc(rows: &[u32], ground: u32, good_enough: u32) -> (u32, u32) {
    if ground == 0 {
        return (0, 0);
    }
    let top = 1u32 << (31 - ground.leading_zeros());
    let rest = ground & !top;
    let floor = rows.iter().map(|r| (r & ground).count_ones() & 1).max().unwrap_or(0);
    let target = floor.max(good_enough);
    let mut best = (u32::MAX, top);
    let mut sub = rest;
    loop {
        let plus = sub | top;
        let v = imbalance(rows, ground, plus, best.0);
        if v < best.0 {
            best = (v, plus);
            if v <= target {
                break;
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
    best
}

/// Exact discrepancy by exhaustive search over `2^{n-1}` colorings (`n <= 24`).
pub fn exact_discrepancy(system: &SetSystem) -> Result<(i64, Coloring)> {
    let n = system.n();
    if n > EXACT_MAX_POINTS {
        return Err(Error::BudgetExceeded {
            what: "exhaustive discrepancy",
            needed: n as u128,
            budget: EXACT_MAX_POINTS as u128,
        });
    }
    let rows = row_masks(system);
    let ground = if n == 0 { 0 } else { u32::MAX >> (32 - n) };
    let (value, plus) = min_disc(&rows, ground, 0);
    Ok((i64::from(value), Coloring::from_mask(n, plus)))
}

/// Exact hereditary discrepancy: the largest exact discrepancy over all restrictions (`n <= 16`).
pub fn hereditary_discrepancy_exact(system: &SetSystem) -> Result<i64> {
    let n = system.n();
    if n > HEREDITARY_MAX_POINTS {
        return Err(Error::BudgetExceeded {
            what: "hereditary discrepancy",
            needed: n as u128,
            budget: HEREDITARY_MAX_POINTS as u128,
        });
    }
    let rows = row_masks(system);
    let mut best = 0u32;
    for ground in 1u32..(1u32 << n) {
        // a coloring at or below the current maximum settles this restriction
        let (v, _) = min_disc(&rows, ground, best);
        best = best.max(v);
    }
    Ok(i64::from(best))
}

/// The body `{x : |<u_i, x>| <= radius}` guiding prefix signing.
#[derive(Clone, Debug)]
pub struct PrefixConstraint {
    pub rows: SparseMatrix,
    pub radius: f64,
}

impl PrefixConstraint {
    pub fn new(rows: SparseMatrix, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput("constraint radius must be positive".into()));
        }
        Ok(PrefixConstraint { rows, radius })
    }

    /// Radius `max_i ‖u_i‖ · sqrt(2 ln(4 n m))`.
    pub fn calibrated(rows: SparseMatrix, n: usize) -> Result<Self> {
        let m = rows.nrows().max(1);
        let radius = rows.max_row_norm() * (2.0 * ((4 * n.max(1) * m) as f64).ln()).sqrt();
        Self::new(rows, radius.max(f64::MIN_POSITIVE))
    }
}

/// Result of [`greedy_prefix_signing`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Signing {
    pub coloring: Coloring,
    /// `max_k max_i |<u_i, Σ_{j<=k} χ(j) v_j>|`.
    pub achieved: f64,
    pub radius: f64,
}

/// Sequential greedy signing over sparse columns `c_j = (<u_i, v_j>)_i`.
///
/// Each step picks the sign minimizing the current maximum over all rows,
/// preferring `+1` on ties. `cap` limits the size of either sign class.
fn greedy_columns(columns: &[Vec<(usize, f64)>], m: usize, cap: Option<usize>) -> (Vec<i8>, f64) {
    let mut sums = vec![0.0f64; m];
    let mut touched = vec![false; m];
    let mut signs = Vec::with_capacity(columns.len());
    let mut counts = [0usize; 2];
    let mut achieved = 0.0f64;
    for col in columns {
        for &(i, _) in col {
            touched[i] = true;
        }
        let untouched = sums.iter().zip(&touched).filter(|(_, &t)| !t).map(|(s, _)| s.abs()).fold(0.0, f64::max);
        let score = |s: f64| col.iter().map(|&(i, c)| (sums[i] + s * c).abs()).fold(untouched, f64::max);
        let (plus, minus) = (score(1.0), score(-1.0));
        let mut sign: i8 = if minus < plus { -1 } else { 1 };
        if let Some(cap) = cap {
            if counts[usize::from(sign < 0)] >= cap {
                sign = -sign;
            }
        }
        let s = f64::from(sign);
        for &(i, c) in col {
            sums[i] += s * c;
            touched[i] = false;
        }
        achieved = achieved.max(if sign > 0 { plus } else { minus }.max(untouched));
        counts[usize::from(sign < 0)] += 1;
        signs.push(sign);
    }
    (signs, achieved)
}

/// Greedy signs for `v_1..v_n` (each `‖v_j‖ <= 1`) against the prefix constraint.
pub fn greedy_prefix_signing(vectors: &[Vec<f64>], constraint: &PrefixConstraint) -> Result<Signing> {
    let r = constraint.rows.ncols();
    if let Some(j) = vectors.iter().position(|v| v.len() != r) {
        return Err(Error::DimensionMismatch(format!("vector {j} has the wrong length")));
    }
    if let Some(j) = vectors.iter().position(|v| norm(v) > 1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!("vector {j} has norm above 1")));
    }
    let rows: Vec<Vec<(usize, f64)>> = (0..constraint.rows.nrows()).map(|i| constraint.rows.row(i).collect()).collect();
    let columns: Vec<Vec<(usize, f64)>> = vectors
        .iter()
        .map(|v| {
            rows.iter()
                .enumerate()
                .filter_map(|(i, u)| {
                    let c: f64 = u.iter().map(|&(k, x)| x * v[k]).sum();
                    (c != 0.0).then_some((i, c))
                })
                .collect()
        })
        .collect();
    let (signs, achieved) = greedy_columns(&columns, rows.len(), None);
    Ok(Signing { coloring: Coloring { signs }, achieved, radius: constraint.radius })
}

/// Columns `(<u_i, v_j>)_i` of a factorization, i.e. the columns of `UV`.
fn factor_columns(f: &Factorization) -> Vec<Vec<(usize, f64)>> {
    let product = f.product().transpose();
    (0..product.nrows()).map(|j| product.row(j).collect()).collect()
}

/// Rows of `U` scaled by `‖V‖_{1→2}` so that every column of `V` has norm at most 1.
fn constraint_from(f: &Factorization, n: usize) -> Result<PrefixConstraint> {
    let c = f.v.max_col_norm().max(f64::MIN_POSITIVE);
    PrefixConstraint::calibrated(f.u.scaled(c), n)
}

/// Points ordered by last coordinate, then index.
fn last_coordinate_order(points: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    if let Some(d) = points.first().map(Vec::len).filter(|&d| d > 0) {
        order.sort_by(|&a, &b| points[a][d - 1].total_cmp(&points[b][d - 1]).then(a.cmp(&b)));
    }
    order
}

/// Output of [`tusnady_coloring`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TusnadyColoring {
    pub coloring: Coloring,
    /// Largest prefix imbalance over the projected boxes; equals the
    /// discrepancy on all anchored boxes when last coordinates are distinct.
    pub achieved: f64,
    pub radius: f64,
    /// Number of constraint rows (projected anchored traces).
    pub rows: usize,
    /// Value of the dyadic factorization of the projected system.
    pub projected_gamma2_upper: f64,
}

/// Sort by last coordinate, factor the anchored boxes of the projection to the
/// first `d - 1` coordinates dyadically, and sign greedily against its rows.
pub fn tusnady_coloring(points: &[Vec<f64>]) -> Result<TusnadyColoring> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidInput("no points".into()));
    }
    let d = points[0].len();
    if d == 0 || d > 4 {
        return Err(Error::UnsupportedDimension { what: "Tusnády pipeline", dim: d, max: 4 });
    }
    let order = last_coordinate_order(points);
    let projected: Vec<Vec<f64>> = order.iter().map(|&j| points[j][..d - 1].to_vec()).collect();
    let f = dyadic_factorization(&projected)?;
    let constraint = constraint_from(&f, n)?;
    let (signs, achieved) = greedy_columns(&factor_columns(&f), f.u.nrows(), None);
    let mut out = vec![0i8; n];
    for (k, &j) in order.iter().enumerate() {
        out[j] = signs[k];
    }
    Ok(TusnadyColoring {
        coloring: Coloring { signs: out },
        achieved,
        radius: constraint.radius,
        rows: f.u.nrows(),
        projected_gamma2_upper: f.value(),
    })
}

/// Largest `|Σ χ|` over all anchored boxes, by sweeping the last coordinate
/// for every threshold combination of the others; returns the value and a
/// witness corner. `O(n^d)` time.
pub fn anchored_discrepancy(points: &[Vec<f64>], chi: &Coloring) -> Result<(i64, Vec<f64>)> {
    if chi.len() < points.len() {
        return Err(Error::MissingSign(chi.len()));
    }
    let d = points.first().map(Vec::len).unwrap_or(0);
    if points.is_empty() {
        return Ok((0, Vec::new()));
    }
    if d == 0 {
        return Ok((chi.signs[..points.len()].iter().map(|&s| i64::from(s)).sum::<i64>().abs(), Vec::new()));
    }
    let order = last_coordinate_order(points);
    let mut best = (0i64, vec![f64::NEG_INFINITY; d]);
    let mut thresholds = vec![0.0; d];
    sweep(points, chi, d, 0, &order, &mut thresholds, &mut best);
    Ok(best)
}

fn sweep(
    points: &[Vec<f64>],
    chi: &Coloring,
    d: usize,
    depth: usize,
    cand: &[usize],
    thresholds: &mut Vec<f64>,
    best: &mut (i64, Vec<f64>),
) {
    if depth + 1 < d {
        let mut values: Vec<f64> = cand.iter().map(|&j| points[j][depth]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for v in values {
            let sub: Vec<usize> = cand.iter().copied().filter(|&j| points[j][depth] <= v).collect();
            thresholds[depth] = v;
            sweep(points, chi, d, depth + 1, &sub, thresholds, best);
        }
        return;
    }
    let mut running = 0i64;
    for k in 0..cand.len() {
        running += i64::from(chi.signs[cand[k]]);
        let y = points[cand[k]][d - 1];
        let group_end = k + 1 == cand.len() || points[cand[k + 1]][d - 1] != y;
        if group_end && running.abs() > best.0 {
            thresholds[d - 1] = y;
            *best = (running.abs(), thresholds.clone());
        }
    }
}

/// Output of [`polytope_coloring`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolytopeColoring {
    pub coloring: Coloring,
    /// Largest prefix imbalance over all constraint rows.
    pub achieved: f64,
    /// `Σ_t |c_t| κ_t`, where a corner of term `t` splits into `κ_t` prefix traces.
    pub weighted_budget: f64,
    /// `weighted_budget × achieved`: bounds the discrepancy of every homothet trace.
    pub certificate: f64,
    pub budget: u64,
    pub families: usize,
    pub rows: usize,
    pub gamma2_upper: f64,
}

/// Directions with the last axis removed and signs normalized
/// (first nonzero coordinate positive), plus the number of splits this costs.
fn reduce_family(normals: &[Vec<f64>], d: usize) -> (Vec<Vec<f64>>, u32) {
    let mut splits = 0;
    let mut kept = Vec::new();
    for w in normals {
        let off_axis = w[..d - 1].iter().map(|x| x * x).sum::<f64>().sqrt();
        if off_axis < 1e-12 {
            // ±e_d: a prefix, or a full trace minus a prefix
            if w[d - 1] < 0.0 {
                splits += 1;
            }
            continue;
        }
        let lead = w.iter().find(|x| x.abs() > 1e-12).copied().unwrap_or(1.0);
        if lead < 0.0 {
            splits += 1;
            kept.push(w.iter().map(|x| -x).collect());
        } else {
            kept.push(w.clone());
        }
    }
    kept.sort_by(|a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    (kept, splits)
}

fn same_family(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.iter().zip(y).all(|(p, q)| (p - q).abs() < 1e-12))
}

/// Greedy signing against every corner family of the Brianchon–Gram decomposition of `B`.
pub fn polytope_coloring(points: &[Vec<f64>], body: &Polytope) -> Result<PolytopeColoring> {
    let n = points.len();
    let d = body.dim();
    if n == 0 {
        return Err(Error::InvalidInput("no points".into()));
    }
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::DimensionMismatch("points vs body".into()));
    }
    let dec = brianchon_gram(body)?;
    let order = last_coordinate_order(points);
    let ordered: Vec<&Vec<f64>> = order.iter().map(|&j| &points[j]).collect();

    let mut families: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut weighted_budget = 0.0;
    for term in &dec.terms {
        let (family, splits) = reduce_family(&term.normals, d);
        weighted_budget += term.coeff.unsigned_abs() as f64 * f64::from(1u32 << splits);
        if !families.iter().any(|f| same_family(f, &family)) {
            families.push(family);
        }
    }
    let mut parts = Vec::with_capacity(families.len());
    for family in &families {
        let transformed: Vec<Vec<f64>> =
            ordered.iter().map(|p| family.iter().map(|w| dot(w, p)).collect()).collect();
        parts.push(dyadic_factorization(&transformed)?);
    }
    let combined = union_combine(&parts)?;

    // identical incidence rows constrain the signing identically
    let incidence = combined.product();
    let mut seen = HashSet::new();
    let keep: Vec<usize> = (0..incidence.nrows())
        .filter(|&i| seen.insert(incidence.row(i).map(|(j, _)| j).collect::<Vec<_>>()))
        .collect();
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (r, &i) in keep.iter().enumerate() {
        for (j, _) in incidence.row(i) {
            columns[j].push((r, 1.0));
        }
    }
    let (signs, achieved) = greedy_columns(&columns, keep.len(), None);
    let mut out = vec![0i8; n];
    for (k, &j) in order.iter().enumerate() {
        out[j] = signs[k];
    }
    Ok(PolytopeColoring {
        coloring: Coloring { signs: out },
        achieved,
        weighted_budget,
        certificate: weighted_budget * achieved,
        budget: dec.budget(),
        families: families.len(),
        rows: keep.len(),
        gamma2_upper: combined.value(),
    })
}

/// Per-round record of [`transference_halving`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HalvingRound {
    pub size_before: usize,
    pub size_after: usize,
    /// Discrepancy of the round's coloring on the built system.
    pub coloring_disc: i64,
    pub star_before: f64,
    pub star_after: f64,
}

impl HalvingRound {
    /// `|D(P') - D(P)/2| <= disc(χ)/2 + 1/2`.
    pub fn transference_holds(&self) -> bool {
        (self.star_after - self.star_before / 2.0).abs() <= self.coloring_disc as f64 / 2.0 + 0.5 + 1e-9
    }
}

/// Repeatedly colors the current set (greedy prefix signing against the
/// built system plus the all-ones row, each class capped at `⌈n/2⌉`) and
/// keeps the `+1` class until at most `target` points remain.
pub fn transference_halving(
    points: &[Vec<f64>],
    builder: impl Fn(&[Vec<f64>]) -> Result<SetSystem>,
    target: usize,
) -> Result<(Vec<Vec<f64>>, Vec<HalvingRound>)> {
    if target > points.len() || target == 0 {
        return Err(Error::InvalidInput(format!("target {target} not in 1..={}", points.len())));
    }
    let mut current = points.to_vec();
    let mut rounds = Vec::new();
    while current.len() > target {
        let n = current.len();
        let order = last_coordinate_order(&current);
        let ordered: Vec<Vec<f64>> = order.iter().map(|&j| current[j].clone()).collect();
        let system = builder(&ordered)?;
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in system.rows().iter().enumerate() {
            for &j in row {
                columns[j].push((i, 1.0));
            }
        }
        let all = system.len();
        for col in columns.iter_mut() {
            col.push((all, 1.0));
        }
        let (signs, _) = greedy_columns(&columns, all + 1, Some(n.div_ceil(2)));
        let chi = Coloring { signs };
        let (disc, _) = evaluate_discrepancy(&system, &chi)?;
        let kept: Vec<Vec<f64>> = ordered.iter().zip(&chi.signs).filter(|(_, &s)| s > 0).map(|(p, _)| p.clone()).collect();
        let star_before = crate::geodisc::star_discrepancy(&ordered)?.value;
        let star_after = crate::geodisc::star_discrepancy(&kept)?.value;
        rounds.push(HalvingRound { size_before: n, size_after: kept.len(), coloring_disc: disc.max(chi.sum().abs()), star_before, star_after });
        current = kept;
    }
    Ok((current, rounds))
}
