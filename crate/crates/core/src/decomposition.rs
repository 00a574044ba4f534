//! Signed decompositions of a simple polytope into corners.
//!
//! Each nonempty face `F` (the polytope included) contributes its closed
//! tangent cone with sign `(-1)^{dim F}`. The cone of `F` is the corner cut
//! out by the facets containing `F`, so every term is an `A_W(apex)` and the
//! polytope itself contributes the whole space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Halfspace, Polytope, TOL};
use crate::linalg::dot;

/// One signed corner `{y : <w_i, y> <= threshold_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: i64,
    pub normals: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
    /// A point of the face the cone is attached to (its vertex average).
    pub apex: Vec<f64>,
    pub face_dim: usize,
}

impl Term {
    pub fn is_whole_space(&self) -> bool {
        self.normals.is_empty()
    }

    #[inline]
    pub fn contains(&self, y: &[f64]) -> bool {
        self.normals.iter().zip(&self.thresholds).all(|(a, &b)| dot(a, y) <= b + TOL)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedDecomposition {
    pub terms: Vec<Term>,
}

impl SignedDecomposition {
    /// `Σ |coeff|`.
    pub fn budget(&self) -> u64 {
        self.terms.iter().map(|t| t.coeff.unsigned_abs()).sum()
    }

    /// `Σ coeff · 1_term(y)`.
    pub fn evaluate(&self, y: &[f64]) -> i64 {
        self.terms.iter().filter(|t| t.contains(y)).map(|t| t.coeff).sum()
    }

    /// Decomposition of `scale * B + shift` with the same coefficients.
    pub fn homothet(&self, scale: f64, shift: &[f64]) -> SignedDecomposition {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff,
                normals: t.normals.clone(),
                thresholds: t
                    .normals
                    .iter()
                    .zip(&t.thresholds)
                    .map(|(a, &b)| Halfspace { normal: a.clone(), offset: b }.homothet(scale, shift).offset)
                    .collect(),
                apex: t.apex.iter().zip(shift).map(|(a, s)| scale * a + s).collect(),
                face_dim: t.face_dim,
            })
            .collect();
        SignedDecomposition { terms }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.terms)?)
    }
}

/// Brianchon–Gram decomposition of a simple polytope with `d <= 3`.
pub fn brianchon_gram(body: &Polytope) -> Result<SignedDecomposition> {
    let d = body.dim();
    for (index, v) in body.vertices().iter().enumerate() {
        let facets = body.facet_vertices().iter().filter(|fv| fv.contains(&index)).count();
        if facets != d {
            return Err(Error::NonSimpleVertex { index, vertex: v.clone(), facets, dim: d });
        }
    }
    let faces = body.faces()?;
    let terms = faces
        .into_iter()
        .map(|face| {
            let mut apex = vec![0.0; d];
            for &i in &face.vertices {
                for (a, x) in apex.iter_mut().zip(&body.vertices()[i]) {
                    *a += x / face.vertices.len() as f64;
                }
            }
            Term {
                coeff: if face.dim % 2 == 0 { 1 } else { -1 },
                normals: face.facets.iter().map(|&f| body.facets()[f].normal.clone()).collect(),
                thresholds: face.facets.iter().map(|&f| body.facets()[f].offset).collect(),
                apex,
                face_dim: face.dim,
            }
        })
        .collect();
    Ok(SignedDecomposition { terms })
}

/// Largest `|Σ coeff · 1_term(y) - 1_B(y)|` over the given points (0 when empty).
pub fn verify_signed_decomposition(dec: &SignedDecomposition, body: &Polytope, points: &[Vec<f64>]) -> i64 {
    points.iter().map(|y| (dec.evaluate(y) - i64::from(body.contains(y))).abs()).max().unwrap_or(0)
}

/// `Σ |coeff_i| · value_i`: a discrepancy or γ₂ bound transferred through the decomposition.
pub fn budget_bounds(dec: &SignedDecomposition, values: &[f64]) -> Result<f64> {
    if values.len() != dec.terms.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {} generators",
            values.len(),
            dec.terms.len()
        )));
    }
    Ok(dec.terms.iter().zip(values).map(|(t, v)| t.coeff.unsigned_abs() as f64 * v).sum())
}
