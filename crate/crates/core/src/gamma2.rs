//! The γ₂ factorization norm: explicit factorizations `A = UV`, the dyadic
//! construction for anchored boxes, trace-norm lower bounds and brackets.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::setsystems::{for_each_anchored_trace, ConvolutionMatrix, Generator, SetSystem};

/// A pair `(U, V)`; its value is `‖U‖_{2→∞} ‖V‖_{1→2}`.
#[derive(Clone, Debug)]
pub struct Factorization {
    pub u: SparseMatrix,
    pub v: SparseMatrix,
}

impl Factorization {
    pub fn new(u: SparseMatrix, v: SparseMatrix) -> Result<Self> {
        if u.ncols() != v.nrows() {
            return Err(Error::DimensionMismatch(format!("U has {} columns, V has {} rows", u.ncols(), v.nrows())));
        }
        Ok(Factorization { u, v })
    }

    /// `U = A`, `V = I`.
    pub fn left_identity(a: &SparseMatrix) -> Self {
        Factorization { u: a.clone(), v: SparseMatrix::identity(a.ncols()) }
    }

    /// `U = I`, `V = A`.
    pub fn right_identity(a: &SparseMatrix) -> Self {
        Factorization { u: SparseMatrix::identity(a.nrows()), v: a.clone() }
    }

    pub fn value(&self) -> f64 {
        self.u.max_row_norm() * self.v.max_col_norm()
    }

    /// Largest absolute entry when both factors are integral.
    pub fn multiplicity(&self) -> Option<f64> {
        (self.u.is_integral() && self.v.is_integral()).then(|| self.u.max_abs().max(self.v.max_abs()))
    }

    pub fn product(&self) -> SparseMatrix {
        self.u.matmul(&self.v).expect("factor dimensions checked on construction")
    }

    /// Exact equality for integral factors, `1e-9` entrywise otherwise.
    pub fn verify(&self, target: &SparseMatrix) -> Result<()> {
        if target.nrows() != self.u.nrows() || target.ncols() != self.v.ncols() {
            return Err(Error::Reconstruction("shape mismatch".into()));
        }
        let product = self.product();
        if self.multiplicity().is_some() && target.is_integral() {
            if !product.exactly_equals(target) {
                return Err(Error::Reconstruction("integral product differs from target".into()));
            }
        } else {
            let diff = product.max_abs_diff(target);
            if diff > 1e-9 {
                return Err(Error::Reconstruction(format!("max entry error {diff:e}")));
            }
        }
        Ok(())
    }
}

/// Value of `f` after checking that it factors `target`.
pub fn factorization_value(f: &Factorization, target: &SparseMatrix) -> Result<f64> {
    f.verify(target)?;
    Ok(f.value())
}

/// Dyadic intervals over coordinate ranks, tensored across dimensions.
///
/// Ranks order points by `(coordinate, index)`; a prefix `{p : p_i <= x_i}`
/// is always a rank prefix, so every anchored trace is a product of rank
/// prefixes and splits into at most `L^d` disjoint dyadic cells, while every
/// point lies in exactly `(L + 1)^d` cells (`L = ⌈log₂ n⌉`).
#[derive(Clone, Debug)]
pub struct DyadicScheme {
    d: usize,
    levels: u32,
    ranks: Vec<Vec<u32>>,
    sorted: Vec<Vec<f64>>,
    /// Non-empty cells keyed by packed interval ids, mapped to dense indices.
    cell_index: HashMap<u64, usize>,
    cell_points: Vec<Vec<u32>>,
}

impl DyadicScheme {
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len();
        let d = points.first().map(Vec::len).unwrap_or(0);
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidInput("points must share one dimension".into()));
        }
        if d > 3 || n > 1 << 20 {
            return Err(Error::UnsupportedDimension { what: "dyadic scheme", dim: d, max: 3 });
        }
        let levels = (n.max(1) as u64).next_power_of_two().trailing_zeros();
        let mut ranks = vec![vec![0u32; n]; d];
        let mut sorted = vec![Vec::with_capacity(n); d];
        for i in 0..d {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| points[a][i].total_cmp(&points[b][i]).then(a.cmp(&b)));
            for (r, &j) in order.iter().enumerate() {
                ranks[i][j] = r as u32;
                sorted[i].push(points[j][i]);
            }
        }
        let mut scheme =
            DyadicScheme { d, levels, ranks, sorted, cell_index: HashMap::new(), cell_points: Vec::new() };
        for j in 0..n {
            for key in scheme.point_cells(j) {
                let next = scheme.cell_points.len();
                let idx = *scheme.cell_index.entry(key).or_insert(next);
                if idx == next {
                    scheme.cell_points.push(Vec::new());
                }
                scheme.cell_points[idx].push(j as u32);
            }
        }
        Ok(scheme)
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cell_count(&self) -> usize {
        self.cell_points.len()
    }

    fn pack(&self, ids: &[u64]) -> u64 {
        let bits = self.levels + 1;
        ids.iter().enumerate().fold(0, |acc, (i, &id)| acc | id << (i as u32 * bits))
    }

    /// Heap ids (`2^level + position`) of the intervals containing rank `r`.
    fn containing(&self, r: u32) -> impl Iterator<Item = u64> + '_ {
        (0..=self.levels).map(move |l| (1u64 << l) + (u64::from(r) >> (self.levels - l)))
    }

    /// Disjoint dyadic intervals covering the rank prefix `[0, len)`.
    fn prefix_cover(&self, len: usize) -> Vec<u64> {
        let len = len as u64;
        (0..=self.levels)
            .filter(|&l| len >> (self.levels - l) & 1 == 1)
            .map(|l| (1u64 << l) + (len >> (self.levels - l)) - 1)
            .collect()
    }

    fn tensor(&self, factors: &[Vec<u64>]) -> Vec<u64> {
        let mut out = vec![Vec::new()];
        for f in factors {
            out = out.into_iter().flat_map(|prefix: Vec<u64>| f.iter().map(move |&id| [prefix.clone(), vec![id]].concat())).collect();
        }
        out.iter().map(|ids| self.pack(ids)).collect()
    }

    fn point_cells(&self, j: usize) -> Vec<u64> {
        let factors: Vec<Vec<u64>> = (0..self.d).map(|i| self.containing(self.ranks[i][j]).collect()).collect();
        self.tensor(&factors)
    }

    /// Dense indices of the non-empty cells covering the box `{y <= x}`.
    pub fn box_cells(&self, thresholds: &[f64]) -> Vec<usize> {
        let factors: Vec<Vec<u64>> = (0..self.d)
            .map(|i| self.prefix_cover(self.sorted[i].partition_point(|&v| v <= thresholds[i])))
            .collect();
        self.tensor(&factors).into_iter().filter_map(|k| self.cell_index.get(&k).copied()).collect()
    }

    /// Dense indices of the cells containing point `j`.
    pub fn cells_of_point(&self, j: usize) -> Vec<usize> {
        self.point_cells(j).into_iter().map(|k| self.cell_index[&k]).collect()
    }

    pub fn cell_members(&self, cell: usize) -> &[u32] {
        &self.cell_points[cell]
    }

    /// `(L + 1)^d`: cells per point, i.e. the largest column support of `V`.
    pub fn cells_per_point(&self) -> usize {
        (self.levels as usize + 1).pow(self.d as u32)
    }

    /// `V`: cells × points incidence.
    pub fn v_matrix(&self, n: usize) -> SparseMatrix {
        let rows: Vec<Vec<usize>> = self.cell_points.iter().map(|c| c.iter().map(|&j| j as usize).collect()).collect();
        SparseMatrix::from_supports(n, &rows).expect("cell members are point indices")
    }

    /// Checks that the cells of `thresholds` partition `members` exactly.
    /// `stamp` must be zeroed and of length `n`; it is left zeroed.
    fn row_reconstructs(&self, thresholds: &[f64], members: &[usize], stamp: &mut [u32]) -> (bool, usize) {
        let cells = self.box_cells(thresholds);
        let mut total = 0usize;
        for &c in &cells {
            for &j in &self.cell_points[c] {
                stamp[j as usize] += 1;
                total += 1;
            }
        }
        let ok = total == members.len() && members.iter().all(|&j| stamp[j] == 1);
        for &c in &cells {
            for &j in &self.cell_points[c] {
                stamp[j as usize] = 0;
            }
        }
        (ok, cells.len())
    }
}

/// Outcome of checking `UV = A` row by row without materializing `A`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicCheck {
    pub rows_checked: u64,
    pub mismatches: u64,
    /// Largest number of cells in a checked row (`t_q`).
    pub max_row_cells: usize,
    /// `(L + 1)^d` (`t_u`).
    pub cells_per_point: usize,
    /// `sqrt(max_row_cells * cells_per_point)`.
    pub value: f64,
    pub bound: f64,
    pub exhaustive: bool,
}

fn check_summary(scheme: &DyadicScheme, rows: u64, bad: u64, max_row: usize, exhaustive: bool) -> DyadicCheck {
    let cpp = scheme.cells_per_point();
    DyadicCheck {
        rows_checked: rows,
        mismatches: bad,
        max_row_cells: max_row,
        cells_per_point: cpp,
        value: ((max_row * cpp) as f64).sqrt(),
        bound: (1.0 + scheme.levels as f64).powi(scheme.d as i32),
        exhaustive,
    }
}

/// Exact reconstruction check over every distinct anchored trace.
pub fn dyadic_check_exhaustive(points: &[Vec<f64>]) -> Result<DyadicCheck> {
    let scheme = DyadicScheme::new(points)?;
    let mut stamp = vec![0u32; points.len()];
    let (mut rows, mut bad, mut max_row) = (0u64, 0u64, 0usize);
    for_each_anchored_trace(points, |t, members| {
        let (ok, cells) = scheme.row_reconstructs(t, members, &mut stamp);
        rows += 1;
        bad += u64::from(!ok);
        max_row = max_row.max(cells);
    })?;
    Ok(check_summary(&scheme, rows, bad, max_row, true))
}

/// Exact reconstruction check on `samples` anchored traces drawn by picking
/// each threshold at the coordinate of a uniformly random point.
pub fn dyadic_check_sampled(points: &[Vec<f64>], samples: usize, seed: u64) -> Result<DyadicCheck> {
    let scheme = DyadicScheme::new(points)?;
    let n = points.len();
    let d = scheme.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stamp = vec![0u32; n];
    let (mut bad, mut max_row) = (0u64, 0usize);
    for _ in 0..samples {
        let x: Vec<f64> = (0..d).map(|i| points[rng.random_range(0..n)][i]).collect();
        let members: Vec<usize> = (0..n).filter(|&j| (0..d).all(|i| points[j][i] <= x[i])).collect();
        let (ok, cells) = scheme.row_reconstructs(&x, &members, &mut stamp);
        bad += u64::from(!ok);
        max_row = max_row.max(cells);
    }
    Ok(check_summary(&scheme, samples as u64, bad, max_row, false))
}

/// Dyadic factorization of the anchored-box system of `points`, with rows in
/// the order produced by [`crate::setsystems::anchored_boxes_system`].
pub fn dyadic_factorization(points: &[Vec<f64>]) -> Result<Factorization> {
    let scheme = DyadicScheme::new(points)?;
    let mut rows = Vec::new();
    for_each_anchored_trace(points, |t, _| rows.push(scheme.box_cells(t)))?;
    let u = SparseMatrix::from_supports(scheme.cell_count(), &rows)?;
    Factorization::new(u, scheme.v_matrix(points.len()))
}

/// `‖A‖_tr / sqrt(mn)`.
pub fn trace_norm_lower_bound(a: &SparseMatrix) -> Result<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Ok(0.0);
    }
    Ok(trace_norm(a)? / ((m as f64) * (n as f64)).sqrt())
}

/// Sum of singular values; tall or wide matrices go through the smaller Gram matrix.
pub fn trace_norm(a: &SparseMatrix) -> Result<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    if m.max(n) > 4 * m.min(n) {
        let small = if m > n { a.transpose().matmul(a)? } else { a.matmul(&a.transpose())? };
        let eig = SymmetricEigen::try_new(small.to_dense(), 1e-14, 10_000).ok_or(Error::SvdFailure)?;
        return Ok(eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum());
    }
    let svd = a.to_dense().try_svd(false, false, 1e-15, 10_000).ok_or(Error::SvdFailure)?;
    Ok(svd.singular_values.iter().sum())
}

/// Dense-matrix variant of [`trace_norm`].
pub fn trace_norm_dense(a: &DMatrix<f64>) -> Result<f64> {
    let svd = a.clone().try_svd(false, false, 1e-15, 10_000).ok_or(Error::SvdFailure)?;
    Ok(svd.singular_values.iter().sum())
}

/// Factorization of the row-stacked system with value at most `sqrt(Σ γ_i²)`.
pub fn union_combine(parts: &[Factorization]) -> Result<Factorization> {
    let n = parts.first().map(|f| f.v.ncols()).ok_or_else(|| Error::InvalidInput("nothing to combine".into()))?;
    if parts.iter().any(|f| f.v.ncols() != n) {
        return Err(Error::DimensionMismatch("factorizations over different ground sets".into()));
    }
    let g = parts.iter().map(|f| f.value().powi(2)).sum::<f64>().sqrt();
    let mut us = Vec::with_capacity(parts.len());
    let mut vs = Vec::with_capacity(parts.len());
    for f in parts {
        let (r, c) = (f.u.max_row_norm(), f.v.max_col_norm());
        if r * c == 0.0 {
            us.push(f.u.clone());
            vs.push(f.v.scaled(0.0));
        } else {
            us.push(f.u.scaled(g / r));
            vs.push(f.v.scaled(r / g));
        }
    }
    Factorization::new(SparseMatrix::block_diag(&us), SparseMatrix::vstack(&vs)?)
}

/// Lower and upper bounds on γ₂ with the method behind each side.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Gamma2Bracket {
    pub lower: f64,
    pub upper: f64,
    pub lower_method: String,
    pub upper_method: String,
    /// Every upper bound that was evaluated.
    pub candidates: Vec<(f64, String)>,
}

fn best_upper(candidates: &[(f64, String)]) -> (f64, String) {
    candidates.iter().min_by(|a, b| a.0.total_cmp(&b.0)).cloned().expect("at least one candidate")
}

fn is_anchored(system: &SetSystem) -> bool {
    let d = system.points().first().map(Vec::len).unwrap_or(0);
    system.is_complete()
        && d >= 1
        && system.generators().iter().all(|g| match g {
            Generator::Corner { directions, .. } => {
                directions.len() == d
                    && directions.iter().enumerate().all(|(i, w)| w.iter().enumerate().all(|(j, &x)| x == f64::from(u8::from(i == j))))
            }
            _ => false,
        })
}

/// Bracket for the incidence matrix of a set system.
pub fn gamma2_bracket(system: &SetSystem) -> Result<Gamma2Bracket> {
    let a = system.incidence();
    let lower = trace_norm_lower_bound(&a)?;
    let mut candidates = vec![
        (Factorization::left_identity(&a).value(), "U = A, V = I".to_string()),
        (Factorization::right_identity(&a).value(), "U = I, V = A".to_string()),
    ];
    if is_anchored(system) {
        let f = dyadic_factorization(system.points())?;
        candidates.push((factorization_value(&f, &a)?, "dyadic".to_string()));
    }
    let (upper, upper_method) = best_upper(&candidates);
    debug_assert!(lower <= upper + 1e-9);
    Ok(Gamma2Bracket { lower, upper, lower_method: "trace norm".into(), upper_method, candidates })
}

/// Bracket for `M(B, n)`: the spectral trace-norm bound below; above, the
/// better of the trivial factorization and the wrap split (`2^d` pieces) of
/// each row into Brianchon–Gram corners, each corner family bounded by the
/// dyadic construction on the grid.
pub fn gamma2_bracket_convolution(m: &ConvolutionMatrix) -> Result<Gamma2Bracket> {
    let spectrum = crate::fourier::discrete_spectrum_of_body(m.body(), m.grid().n)?;
    let lower = spectrum.abs_sum();
    let trivial = (m.row(0).len() as f64).sqrt();
    let mut candidates = vec![(trivial, "U = M, V = I".to_string())];
    if let Ok(dec) = crate::decomposition::brianchon_gram(m.body()) {
        let levels = (m.size() as f64).log2().ceil();
        let d = m.grid().d as u32;
        let per: Vec<f64> = dec.terms.iter().map(|t| (1.0 + levels).powi(t.normals.len() as i32)).collect();
        let bound = f64::from(1u32 << d) * crate::decomposition::budget_bounds(&dec, &per)?;
        candidates.push((bound, "wrap split + signed corners + dyadic".to_string()));
    }
    let (upper, upper_method) = best_upper(&candidates);
    Ok(Gamma2Bracket { lower, upper, lower_method: "spectrum".into(), upper_method, candidates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setsystems::anchored_boxes_system;

    fn collinear(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64]).collect()
    }

    #[test]
    fn trivial_values() {
        let i = SparseMatrix::identity(5);
        let f = Factorization::new(i.clone(), i.clone()).unwrap();
        assert_eq!(factorization_value(&f, &i).unwrap(), 1.0);
        let ones_col = SparseMatrix::from_rows(1, vec![vec![(0, 1.0)]; 4]).unwrap();
        let ones_row = SparseMatrix::from_rows(6, vec![(0..6).map(|j| (j, 1.0)).collect()]).unwrap();
        let f = Factorization::new(ones_col, ones_row).unwrap();
        assert_eq!(f.value(), 1.0);
        assert_eq!(f.product().nnz(), 24);
    }

    #[test]
    fn dyadic_small_cases() {
        let f = dyadic_factorization(&collinear(1)).unwrap();
        assert_eq!(f.value(), 1.0);
        let pts = collinear(4);
        let f = dyadic_factorization(&pts).unwrap();
        let a = anchored_boxes_system(&pts).unwrap().incidence();
        assert!((factorization_value(&f, &a).unwrap() - 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.v.nrows(), 7);
        assert_eq!(f.multiplicity(), Some(1.0));
        let grid = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let f = dyadic_factorization(&grid).unwrap();
        let a = anchored_boxes_system(&grid).unwrap().incidence();
        assert!(factorization_value(&f, &a).unwrap() <= 9.0);
    }

    #[test]
    fn dyadic_check_agrees_with_materialized() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Vec<f64>> = (0..37).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
        let f = dyadic_factorization(&pts).unwrap();
        let a = anchored_boxes_system(&pts).unwrap().incidence();
        let value = factorization_value(&f, &a).unwrap();
        let check = dyadic_check_exhaustive(&pts).unwrap();
        assert_eq!(check.mismatches, 0);
        assert_eq!(check.rows_checked as usize, a.nrows());
        assert!((check.value - value).abs() < 1e-12);
        assert!(check.value <= check.bound);
        assert_eq!(dyadic_check_sampled(&pts, 500, 1).unwrap().mismatches, 0);
    }

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm_lower_bound(&SparseMatrix::identity(7)).unwrap() - 1.0).abs() < 1e-12);
        let ones = SparseMatrix::from_dense(&DMatrix::from_element(5, 5, 1.0));
        assert!((trace_norm_lower_bound(&ones).unwrap() - 1.0).abs() < 1e-12);
        let tri = SparseMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
        assert!((trace_norm_lower_bound(&tri).unwrap() - 5f64.sqrt() / 2.0).abs() < 1e-12);
        // tall matrix through the Gram route agrees with the SVD
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tall = DMatrix::from_fn(40, 6, |_, _| f64::from(u8::from(rng.random_bool(0.4))));
        let via_gram = trace_norm(&SparseMatrix::from_dense(&tall)).unwrap();
        assert!((via_gram - trace_norm_dense(&tall).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn union_respects_norm_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let parts: Vec<Factorization> = (0..3)
            .map(|_| {
                let a = DMatrix::from_fn(5, 8, |_, _| f64::from(u8::from(rng.random_bool(0.5))));
                Factorization::left_identity(&SparseMatrix::from_dense(&a))
            })
            .collect();
        let combined = union_combine(&parts).unwrap();
        let stacked = SparseMatrix::vstack(&parts.iter().map(|f| f.u.clone()).collect::<Vec<_>>()).unwrap();
        combined.verify(&stacked).unwrap();
        let g = parts.iter().map(|f| f.value().powi(2)).sum::<f64>().sqrt();
        assert!(combined.value() <= g + 1e-9);
        let single = union_combine(&parts[..1]).unwrap();
        assert!((single.value() - parts[0].value()).abs() < 1e-12);
        let twice = union_combine(&[parts[0].clone(), parts[0].clone()]).unwrap();
        assert!(twice.value() <= 2f64.sqrt() * parts[0].value() + 1e-12);
    }

    #[test]
    fn brackets() {
        let id = SetSystem::explicit(4, (0..4).map(|i| vec![i]).collect()).unwrap();
        let b = gamma2_bracket(&id).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12);
        let b = gamma2_bracket(&anchored_boxes_system(&collinear(4)).unwrap()).unwrap();
        assert!(b.lower <= b.upper);
        // the trivial factorizations (value 2) beat the dyadic one (sqrt 6) at this size
        assert_eq!(b.upper, 2.0);
        let dyadic = b.candidates.iter().find(|c| c.1 == "dyadic").unwrap();
        assert!((dyadic.0 - 6f64.sqrt()).abs() < 1e-12);
    }
}
