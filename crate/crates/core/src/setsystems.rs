//! Incidence structures of geometric set systems: anchored boxes, corners,
//! sampled homothets, and the periodic convolution matrices on odd grids.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, Polytope};
use crate::linalg::{dot, rank, SparseMatrix};

/// Default cap on `n^d` for exhaustive trace enumeration.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

/// How a row of a [`SetSystem`] was generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Generator {
    /// `{y : <w_i, y> <= threshold_i for all i}`.
    Corner { directions: Vec<Vec<f64>>, thresholds: Vec<f64> },
    /// `scale * B + shift` for the system's body `B`.
    Homothet { scale: f64, shift: Vec<f64> },
    /// An explicitly listed subset of the ground set.
    Listed,
}

/// Sparse 0/1 incidence structure over an ordered point set.
#[derive(Clone, Debug)]
pub struct SetSystem {
    points: Vec<Vec<f64>>,
    rows: Vec<Vec<usize>>,
    generators: Vec<Generator>,
    body: Option<Polytope>,
    complete: bool,
}

impl SetSystem {
    /// System given by explicit subsets of `0..n`. Empty rows are kept.
    pub fn explicit(n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut sorted = Vec::with_capacity(rows.len());
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            if let Some(&j) = r.iter().find(|&&j| j >= n) {
                return Err(Error::OutOfRange { index: j, len: n });
            }
            sorted.push(r);
        }
        let generators = vec![Generator::Listed; sorted.len()];
        Ok(SetSystem { points: vec![Vec::new(); n], rows: sorted, generators, body: None, complete: true })
    }

    /// Every subset of `0..n`, including the empty one.
    pub fn power_set(n: usize) -> Result<Self> {
        if n > 20 {
            return Err(Error::BudgetExceeded { what: "power set", needed: 1u128 << n, budget: 1 << 20 });
        }
        Self::explicit(n, (0..1usize << n).map(|m| (0..n).filter(|j| m >> j & 1 == 1).collect()).collect())
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Sorted member indices of each row.
    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// `false` for sampled families.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn incidence(&self) -> SparseMatrix {
        SparseMatrix::from_supports(self.n(), &self.rows).expect("rows are range-checked on construction")
    }

    /// Subsystem keeping the listed rows.
    pub fn select_rows(&self, keep: &[usize]) -> SetSystem {
        SetSystem {
            points: self.points.clone(),
            rows: keep.iter().map(|&i| self.rows[i].clone()).collect(),
            generators: keep.iter().map(|&i| self.generators[i].clone()).collect(),
            body: self.body.clone(),
            complete: false,
        }
    }

    /// Whether the generator of row `i` contains point `j`.
    pub fn generator_contains(&self, i: usize, j: usize) -> bool {
        let p = &self.points[j];
        match &self.generators[i] {
            Generator::Corner { directions, thresholds } => {
                directions.iter().zip(thresholds).all(|(w, &t)| dot(w, p) <= t)
            }
            Generator::Homothet { scale, shift } => {
                self.body.as_ref().map(|b| b.homothet(*scale, shift).contains(p)).unwrap_or(false)
            }
            Generator::Listed => self.rows[i].binary_search(&j).is_ok(),
        }
    }

    /// Re-evaluates every generator over the ground set; returns the first mismatching row.
    pub fn verify(&self) -> std::result::Result<(), usize> {
        for i in 0..self.rows.len() {
            let members: Vec<usize> = (0..self.n()).filter(|&j| self.generator_contains(i, j)).collect();
            if members != self.rows[i] {
                return Err(i);
            }
        }
        Ok(())
    }

    /// Whether no two rows coincide.
    pub fn is_deduplicated(&self) -> bool {
        let mut seen = HashSet::new();
        self.rows.iter().all(|r| seen.insert(r))
    }
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let d = points.first().map(Vec::len).unwrap_or(0);
    if points.iter().any(|p| p.len() != d || p.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidInput("points must be finite and share one dimension".into()));
    }
    Ok(d)
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Visits every distinct non-empty anchored trace `A(x) ∩ P` exactly once.
///
/// The callback receives the minimal threshold vector (each threshold is the
/// largest member coordinate in that dimension) and the members, ordered by
/// last coordinate and then index. Takes `O(n^d)` time up to the output size.
pub fn for_each_anchored_trace(points: &[Vec<f64>], mut visit: impl FnMut(&[f64], &[usize])) -> Result<()> {
    let d = check_points(points)?;
    if points.is_empty() {
        return Ok(());
    }
    if d == 0 {
        let all: Vec<usize> = (0..points.len()).collect();
        visit(&[], &all);
        return Ok(());
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][d - 1].total_cmp(&points[b][d - 1]).then(a.cmp(&b)));
    let mut thresholds = vec![0.0; d];
    recurse(points, d, 0, &order, &mut thresholds, &mut visit);
    Ok(())
}

fn recurse(
    points: &[Vec<f64>],
    d: usize,
    depth: usize,
    cand: &[usize],
    thresholds: &mut Vec<f64>,
    visit: &mut impl FnMut(&[f64], &[usize]),
) {
    if depth + 1 < d {
        for v in distinct_sorted(cand.iter().map(|&j| points[j][depth])) {
            let sub: Vec<usize> = cand.iter().copied().filter(|&j| points[j][depth] <= v).collect();
            thresholds[depth] = v;
            recurse(points, d, depth + 1, &sub, thresholds, visit);
        }
        return;
    }
    // sweep the last coordinate; a prefix is canonical when every earlier
    // threshold is attained by one of its members
    let mut maxima = vec![f64::NEG_INFINITY; d - 1];
    for k in 0..cand.len() {
        let p = &points[cand[k]];
        for (m, &x) in maxima.iter_mut().zip(p) {
            *m = m.max(x);
        }
        let group_end = k + 1 == cand.len() || points[cand[k + 1]][d - 1] != p[d - 1];
        if group_end && maxima.iter().zip(thresholds.iter()).all(|(m, t)| m == t) {
            thresholds[d - 1] = p[d - 1];
            visit(thresholds, &cand[..=k]);
        }
    }
}

/// Number of distinct non-empty anchored traces.
pub fn count_anchored_traces(points: &[Vec<f64>]) -> Result<u64> {
    let mut count = 0u64;
    for_each_anchored_trace(points, |_, _| count += 1)?;
    Ok(count)
}

fn enumeration_guard(n: usize, d: usize, budget: u128) -> Result<()> {
    let needed = (n as u128).saturating_pow(d as u32);
    if needed > budget {
        return Err(Error::BudgetExceeded { what: "anchored trace enumeration", needed, budget });
    }
    Ok(())
}

/// All distinct non-empty traces of anchored boxes on `points`.
pub fn anchored_boxes_system(points: &[Vec<f64>]) -> Result<SetSystem> {
    anchored_boxes_system_with_budget(points, ENUMERATION_BUDGET)
}

pub fn anchored_boxes_system_with_budget(points: &[Vec<f64>], budget: u128) -> Result<SetSystem> {
    let d = check_points(points)?;
    enumeration_guard(points.len(), d, budget)?;
    let basis: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut rows = Vec::new();
    let mut generators = Vec::new();
    for_each_anchored_trace(points, |t, members| {
        let mut r = members.to_vec();
        r.sort_unstable();
        rows.push(r);
        generators.push(Generator::Corner { directions: basis.clone(), thresholds: t.to_vec() });
    })?;
    Ok(SetSystem { points: points.to_vec(), rows, generators, body: None, complete: true })
}

/// Traces of corners `A_W(x)` for linearly independent directions `W`.
pub fn corners_system(points: &[Vec<f64>], directions: &[Vec<f64>]) -> Result<SetSystem> {
    let d = check_points(points)?;
    if directions.iter().any(|w| w.len() != d) || directions.len() > d.max(1) {
        return Err(Error::DimensionMismatch("corner directions".into()));
    }
    if rank(directions, 1e-12) < directions.len() {
        return Err(Error::DependentDirections);
    }
    let transformed: Vec<Vec<f64>> = points.iter().map(|p| directions.iter().map(|w| dot(w, p)).collect()).collect();
    enumeration_guard(points.len(), directions.len(), ENUMERATION_BUDGET)?;
    let mut rows = Vec::new();
    let mut generators = Vec::new();
    for_each_anchored_trace(&transformed, |t, members| {
        let mut r = members.to_vec();
        r.sort_unstable();
        rows.push(r);
        generators.push(Generator::Corner { directions: directions.to_vec(), thresholds: t.to_vec() });
    })?;
    Ok(SetSystem { points: points.to_vec(), rows, generators, body: None, complete: true })
}

/// Sampling plan for homothet traces: the product `scales × shifts` plus
/// `random` draws with scale uniform in `scale_range` and shift uniform in
/// `shift_range^d`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomothetSampling {
    pub scales: Vec<f64>,
    pub shifts: Vec<Vec<f64>>,
    pub random: usize,
    pub scale_range: (f64, f64),
    pub shift_range: (f64, f64),
    pub seed: u64,
}

impl HomothetSampling {
    pub fn random(count: usize, seed: u64) -> Self {
        HomothetSampling {
            scales: Vec::new(),
            shifts: Vec::new(),
            random: count,
            scale_range: (0.05, 1.5),
            shift_range: (-0.5, 1.0),
            seed,
        }
    }
}

/// Sampled, deduplicated, non-empty traces `(tB + x) ∩ P`.
pub fn homothet_system(body: &Polytope, points: &[Vec<f64>], plan: &HomothetSampling) -> Result<SetSystem> {
    let d = check_points(points)?;
    if d != body.dim() {
        return Err(Error::DimensionMismatch("points vs body".into()));
    }
    let (t_lo, t_hi) = plan.scale_range;
    if plan.scales.iter().any(|&t| !(t > 0.0)) || (plan.random > 0 && !(t_lo > 0.0 && t_lo <= t_hi)) {
        return Err(Error::InvalidInput("homothety factors must be positive".into()));
    }
    let mut params: Vec<(f64, Vec<f64>)> = Vec::new();
    for &t in &plan.scales {
        for x in &plan.shifts {
            if x.len() != d {
                return Err(Error::DimensionMismatch("shift".into()));
            }
            params.push((t, x.clone()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let (x_lo, x_hi) = plan.shift_range;
    for _ in 0..plan.random {
        let t = if t_hi > t_lo { rng.random_range(t_lo..t_hi) } else { t_lo };
        let x = (0..d).map(|_| if x_hi > x_lo { rng.random_range(x_lo..x_hi) } else { x_lo }).collect();
        params.push((t, x));
    }
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    let mut generators = Vec::new();
    for (t, x) in params {
        let h = body.homothet(t, &x);
        let members: Vec<usize> = (0..points.len()).filter(|&j| h.contains(&points[j])).collect();
        if !members.is_empty() && seen.insert(members.clone()) {
            rows.push(members);
            generators.push(Generator::Homothet { scale: t, shift: x });
        }
    }
    Ok(SetSystem { points: points.to_vec(), rows, generators, body: Some(body.clone()), complete: false })
}

/// `M(B, n)` with entries `f_B(x - y)` on `Q_{2n+1}^d`, where `f_B` is the
/// indicator of `B` extended periodically from `[0,1)^d`.
#[derive(Clone, Debug)]
pub struct ConvolutionMatrix {
    body: Polytope,
    grid: GridSpec,
    /// `kernel[t] = f_B(t / N)` for offsets `t` in `Z_N^d`, linearly indexed.
    kernel: Vec<bool>,
}

/// One non-wrapping piece of a periodic row support.
#[derive(Clone, Debug, PartialEq)]
pub struct WrapPiece {
    /// Lattice shift `z` in `{0,1}^d`.
    pub wrap: Vec<u8>,
    /// Sorted grid indices in the piece.
    pub members: Vec<usize>,
}

pub fn convolution_matrix(body: &Polytope, n: usize) -> Result<ConvolutionMatrix> {
    let grid = GridSpec::new(n, body.dim())?;
    if !body.inside_unit_cell() {
        return Err(Error::InvalidInput("body must lie inside the unit cell".into()));
    }
    let kernel = (0..grid.len()).map(|t| body.contains(&grid.point(t))).collect();
    Ok(ConvolutionMatrix { body: body.clone(), grid, kernel })
}

impl ConvolutionMatrix {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn body(&self) -> &Polytope {
        &self.body
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    /// Linear index of `(x - y) mod N`.
    fn offset(&self, x: usize, y: usize) -> usize {
        let s = self.grid.side();
        let (mx, my) = (self.grid.multi_index(x), self.grid.multi_index(y));
        mx.iter().zip(&my).fold(0, |acc, (&a, &b)| acc * s + (a + s - b) % s)
    }

    pub fn entry(&self, x: usize, y: usize) -> bool {
        self.kernel[self.offset(x, y)]
    }

    /// Kernel value at offset multi-index `t` (taken mod `N`).
    pub fn kernel_at(&self, t: usize) -> bool {
        self.kernel[t]
    }

    pub fn row(&self, x: usize) -> Vec<usize> {
        (0..self.size()).filter(|&y| self.entry(x, y)).collect()
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let rows: Vec<Vec<usize>> = (0..self.size()).map(|x| self.row(x)).collect();
        SparseMatrix::from_supports(self.size(), &rows).expect("row indices lie on the grid")
    }

    /// `M v` for complex `v`, by direct summation.
    pub fn apply(&self, v: &[num_complex::Complex64]) -> Vec<num_complex::Complex64> {
        let size = self.size();
        let support: Vec<usize> = (0..size).filter(|&t| self.kernel[t]).collect();
        let s = self.grid.side();
        (0..size)
            .map(|x| {
                let mx = self.grid.multi_index(x);
                support
                    .iter()
                    .map(|&t| {
                        let mt = self.grid.multi_index(t);
                        let y = mx.iter().zip(&mt).fold(0, |acc, (&a, &b)| acc * s + (a + s - b) % s);
                        v[y]
                    })
                    .sum()
            })
            .collect()
    }

    /// Splits the support of row `x` into pieces `grid ∩ (x + z - B)`, `z ∈ {0,1}^d`.
    ///
    /// The piece of `y` is read off the integer offsets, so pieces are disjoint
    /// and cover the row exactly. Empty pieces are omitted.
    pub fn wrap_split_row(&self, x: usize) -> Vec<WrapPiece> {
        let d = self.grid.d;
        let mx = self.grid.multi_index(x);
        let mut pieces: Vec<WrapPiece> = Vec::new();
        for y in self.row(x) {
            let my = self.grid.multi_index(y);
            let wrap: Vec<u8> = mx.iter().zip(&my).map(|(a, b)| u8::from(b > a)).collect();
            match pieces.iter_mut().find(|p| p.wrap == wrap) {
                Some(p) => p.members.push(y),
                None => pieces.push(WrapPiece { wrap, members: vec![y] }),
            }
        }
        debug_assert!(pieces.len() <= 1 << d);
        pieces.sort_by(|a, b| a.wrap.cmp(&b.wrap));
        pieces
    }

    /// Checks that each piece of row `x` is the unwrapped trace `grid ∩ (x + z - B)`.
    pub fn piece_is_genuine(&self, x: usize, piece: &WrapPiece) -> bool {
        let n = self.grid.side() as f64;
        let mx = self.grid.multi_index(x);
        let neg = self.body.negated();
        let shift: Vec<f64> = mx.iter().zip(&piece.wrap).map(|(&a, &z)| a as f64 / n + z as f64).collect();
        let translate = neg.homothet(1.0, &shift);
        let inside: Vec<usize> = (0..self.size()).filter(|&y| translate.contains(&self.grid.point(y))).collect();
        inside == piece.members
    }
}

/// Splits the periodic image of `body + shift` on `Q_{2n+1}^d` into
/// non-wrapping pieces `grid ∩ (body + shift - z)`.
pub fn wrap_split(body: &Polytope, shift: &[f64], n: usize) -> Result<Vec<WrapPiece>> {
    let grid = GridSpec::new(n, body.dim())?;
    if shift.len() != body.dim() {
        return Err(Error::DimensionMismatch("shift".into()));
    }
    let mut pieces: Vec<WrapPiece> = Vec::new();
    for y in 0..grid.len() {
        let p = grid.point(y);
        let mut wrap = Vec::with_capacity(p.len());
        let w: Vec<f64> = p
            .iter()
            .zip(shift)
            .map(|(a, s)| {
                let r = (a - s).rem_euclid(1.0);
                // number of unit cells between y - shift and its reduction
                wrap.push(u8::from(r - (a - s) > 0.5));
                r
            })
            .collect();
        if body.contains(&w) {
            match pieces.iter_mut().find(|q| q.wrap == wrap) {
                Some(q) => q.members.push(y),
                None => pieces.push(WrapPiece { wrap, members: vec![y] }),
            }
        }
    }
    pieces.sort_by(|a, b| a.wrap.cmp(&b.wrap));
    Ok(pieces)
}
