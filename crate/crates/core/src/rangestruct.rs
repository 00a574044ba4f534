//! Oblivious dynamic range counting from an integer factorization `A = UV`.
//!
//! The state is `y = Vw`; an update touches one column of `V`, a query one
//! row of `U`. Weights live in the integers, so queries are exact.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma2::Factorization;
use crate::linalg::SparseMatrix;

#[derive(Clone, Debug)]
pub struct ObliviousStructure {
    u_rows: Vec<Vec<(usize, i64)>>,
    v_cols: Vec<Vec<(usize, i64)>>,
    ranges: Vec<Vec<(usize, i64)>>,
    state: Vec<BigInt>,
    weights: Vec<BigInt>,
    delta: i64,
}

fn integral_rows(m: &SparseMatrix) -> Result<Vec<Vec<(usize, i64)>>> {
    if !m.is_integral() {
        return Err(Error::NonIntegral);
    }
    Ok((0..m.nrows()).map(|i| m.row(i).map(|(j, v)| (j, v as i64)).collect()).collect())
}

impl ObliviousStructure {
    /// Zero-initialized structure over an integer factorization.
    pub fn build(f: &Factorization) -> Result<Self> {
        let u_rows = integral_rows(&f.u)?;
        let v_cols = integral_rows(&f.v.transpose())?;
        let ranges = integral_rows(&f.product())?;
        let delta = u_rows.iter().chain(&v_cols).flatten().map(|&(_, v)| v.abs()).max().unwrap_or(0);
        Ok(ObliviousStructure {
            state: vec![BigInt::zero(); f.u.ncols()],
            weights: vec![BigInt::zero(); f.v.ncols()],
            u_rows,
            v_cols,
            ranges,
            delta,
        })
    }

    pub fn points(&self) -> usize {
        self.weights.len()
    }

    pub fn ranges(&self) -> usize {
        self.u_rows.len()
    }

    /// Multiplicity: the largest absolute entry of `U` and `V`.
    pub fn delta(&self) -> i64 {
        self.delta
    }

    pub fn update_time(&self) -> usize {
        self.v_cols.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn query_time(&self) -> usize {
        self.u_rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `w_p += g`; returns the number of cells touched.
    pub fn update(&mut self, p: usize, g: &BigInt) -> Result<usize> {
        let col = self.v_cols.get(p).ok_or(Error::OutOfRange { index: p, len: self.weights.len() })?;
        for &(cell, v) in col {
            self.state[cell] += g * v;
        }
        self.weights[p] += g;
        Ok(col.len())
    }

    /// `Σ_{p ∈ F_i} A_ip w_p` via `<u_i, y>`; returns the value and the cells touched.
    pub fn query(&self, i: usize) -> Result<(BigInt, usize)> {
        let row = self.u_rows.get(i).ok_or(Error::OutOfRange { index: i, len: self.u_rows.len() })?;
        let value = row.iter().fold(BigInt::zero(), |acc, &(cell, u)| acc + &self.state[cell] * u);
        Ok((value, row.len()))
    }

    /// The same sum straight from the weights.
    pub fn naive_query(&self, i: usize) -> Result<BigInt> {
        let row = self.ranges.get(i).ok_or(Error::OutOfRange { index: i, len: self.ranges.len() })?;
        Ok(row.iter().fold(BigInt::zero(), |acc, &(p, a)| acc + &self.weights[p] * a))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Update,
    Query,
}

/// One workload line `(op, index, value)`; `value` is ignored for queries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadOp {
    pub op: Op,
    pub index: usize,
    pub value: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub updates: usize,
    pub queries: usize,
    pub mismatches: usize,
    pub max_update_cells: usize,
    pub max_query_cells: usize,
}

/// Runs the workload, checking every query against [`ObliviousStructure::naive_query`].
pub fn replay(s: &mut ObliviousStructure, ops: &[WorkloadOp]) -> Result<ReplaySummary> {
    let mut out = ReplaySummary::default();
    for op in ops {
        match op.op {
            Op::Update => {
                let cells = s.update(op.index, &BigInt::from(op.value))?;
                out.updates += 1;
                out.max_update_cells = out.max_update_cells.max(cells);
            }
            Op::Query => {
                let (value, cells) = s.query(op.index)?;
                out.queries += 1;
                out.max_query_cells = out.max_query_cells.max(cells);
                out.mismatches += usize::from(value != s.naive_query(op.index)?);
            }
        }
    }
    Ok(out)
}

/// A seeded mix of updates (weights in `-1000..=1000`) and queries.
pub fn random_workload(points: usize, ranges: usize, len: usize, seed: u64) -> Vec<WorkloadOp> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            if rng.random_bool(0.5) && points > 0 {
                WorkloadOp { op: Op::Update, index: rng.random_range(0..points), value: rng.random_range(-1000..=1000) }
            } else {
                WorkloadOp { op: Op::Query, index: rng.random_range(0..ranges.max(1)), value: 0 }
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub t_u: usize,
    pub t_q: usize,
    pub geometric_mean: f64,
    pub delta: i64,
    /// `γ₂ lower bound / Δ`.
    pub floor: f64,
    pub floor_holds: bool,
}

/// Update and query times against the floor `γ₂lower / Δ` they must exceed.
pub fn cost_report(s: &ObliviousStructure, gamma2_lower: f64) -> CostReport {
    let (t_u, t_q) = (s.update_time(), s.query_time());
    let geometric_mean = ((t_u * t_q) as f64).sqrt();
    let floor = if s.delta == 0 { 0.0 } else { gamma2_lower / s.delta as f64 };
    CostReport { t_u, t_q, geometric_mean, delta: s.delta, floor, floor_holds: geometric_mean >= floor * (1.0 - 1e-12) }
}
