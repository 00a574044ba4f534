//! Convex polytopes in V-representation with a derived H-representation,
//! gauge functions, Haar-random rotations, the face lattice and the
//! genericity test for facet chains.
//!
//! Conventions
//! - Facets are closed halfspaces `<a, y> <= b` with `|a| = 1`, oriented outward.
//! - Membership uses the fixed tolerance [`TOL`] on every facet, so two bodies
//!   built from the same facets classify boundary points identically.
//! - Dimensions above 3 are accepted for membership and gauge evaluation;
//!   face-lattice based routines are restricted to `d <= 3`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, orthogonal_complement, orthonormal_basis, rank, sub};

/// Tolerance for halfspace membership and facet tightness.
pub const TOL: f64 = 1e-10;

/// Closed halfspace `<normal, y> <= offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    #[inline]
    pub fn contains(&self, y: &[f64]) -> bool {
        dot(&self.normal, y) <= self.offset + TOL
    }

    /// Image under `y -> scale * y + shift`.
    pub fn homothet(&self, scale: f64, shift: &[f64]) -> Halfspace {
        Halfspace { normal: self.normal.clone(), offset: scale * self.offset + dot(&self.normal, shift) }
    }
}

/// A face of a polytope, identified by its vertex set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub vertices: Vec<usize>,
    pub dim: usize,
    /// Facets containing the face (empty for the polytope itself).
    pub facets: Vec<usize>,
}

/// Bounded convex polytope with non-empty interior.
#[derive(Clone, Debug)]
pub struct Polytope {
    vertices: Vec<Vec<f64>>,
    facets: Vec<Halfspace>,
    facet_vertices: Vec<Vec<usize>>,
    centroid: Vec<f64>,
}

impl Polytope {
    /// Convex hull of the given points. Non-extreme points are discarded.
    pub fn from_vertices(points: Vec<Vec<f64>>) -> Result<Self> {
        let d = points.first().map(Vec::len).unwrap_or(0);
        if d == 0 {
            return Err(Error::InvalidInput("polytope needs at least one non-empty vertex".into()));
        }
        if points.iter().any(|p| p.len() != d || p.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("vertices must be finite and share one dimension".into()));
        }
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for p in points {
            if !pts.iter().any(|q| norm(&sub(q, &p)) < 1e-12) {
                pts.push(p);
            }
        }
        let diffs: Vec<Vec<f64>> = pts.iter().skip(1).map(|p| sub(p, &pts[0])).collect();
        if pts.len() < d + 1 || rank(&diffs, 1e-12) < d {
            return Err(Error::Degenerate("vertices do not span a full-dimensional body".into()));
        }
        let extent = pts.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
        let tight = 1e-9 * extent;

        if d == 1 {
            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            return Self::assemble(
                vec![vec![lo], vec![hi]],
                vec![Halfspace { normal: vec![-1.0], offset: -lo }, Halfspace { normal: vec![1.0], offset: hi }],
            );
        }

        let mut facets: Vec<Halfspace> = Vec::new();
        for combo in combinations(pts.len(), d) {
            let base = &pts[combo[0]];
            let spans: Vec<Vec<f64>> = combo[1..].iter().map(|&i| sub(&pts[i], base)).collect();
            let Some(normal) = orthogonal_complement(&spans, d) else { continue };
            let offset = dot(&normal, base);
            let above = pts.iter().any(|p| dot(&normal, p) > offset + tight);
            let below = pts.iter().any(|p| dot(&normal, p) < offset - tight);
            let candidate = match (above, below) {
                (false, _) => Halfspace { normal, offset },
                (true, false) => Halfspace { normal: normal.iter().map(|x| -x).collect(), offset: -offset },
                (true, true) => continue,
            };
            let duplicate = facets.iter().any(|f| {
                norm(&sub(&f.normal, &candidate.normal)) < 1e-9 && (f.offset - candidate.offset).abs() < tight
            });
            if !duplicate {
                facets.push(candidate);
            }
        }
        // keep only extreme points: those whose tight facets have full-rank normals
        let extreme: Vec<Vec<f64>> = pts
            .iter()
            .filter(|p| {
                let normals: Vec<Vec<f64>> = facets
                    .iter()
                    .filter(|f| (dot(&f.normal, p) - f.offset).abs() <= tight)
                    .map(|f| f.normal.clone())
                    .collect();
                rank(&normals, 1e-9) == d
            })
            .cloned()
            .collect();
        Self::assemble(extreme, facets)
    }

    fn assemble(vertices: Vec<Vec<f64>>, facets: Vec<Halfspace>) -> Result<Self> {
        let d = vertices[0].len();
        let extent = vertices.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
        let tight = 1e-9 * extent;
        let facet_vertices: Vec<Vec<usize>> = facets
            .iter()
            .map(|f| {
                (0..vertices.len()).filter(|&i| (dot(&f.normal, &vertices[i]) - f.offset).abs() <= tight).collect()
            })
            .collect();
        let mut centroid = vec![0.0; d];
        for v in &vertices {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / vertices.len() as f64;
            }
        }
        let p = Polytope { vertices, facets, facet_vertices, centroid };
        if p.inradius_about(&p.centroid) <= TOL {
            return Err(Error::Degenerate("empty interior".into()));
        }
        Ok(p)
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let d = lo.len();
        if hi.len() != d || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidInput("box needs lo < hi in every coordinate".into()));
        }
        let vertices = (0..1usize << d)
            .map(|mask| (0..d).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }).collect())
            .collect();
        Self::from_vertices(vertices)
    }

    pub fn dim(&self) -> usize {
        self.centroid.len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Halfspace] {
        &self.facets
    }

    /// Vertex indices lying on each facet.
    pub fn facet_vertices(&self) -> &[Vec<usize>] {
        &self.facet_vertices
    }

    /// Vertex centroid; always strictly interior.
    pub fn centroid(&self) -> &[f64] {
        &self.centroid
    }

    #[inline]
    pub fn contains(&self, y: &[f64]) -> bool {
        self.facets.iter().all(|f| f.contains(y))
    }

    /// Radius of the largest ball about `c` inside the polytope (negative if `c` is outside).
    pub fn inradius_about(&self, c: &[f64]) -> f64 {
        self.facets.iter().map(|f| f.offset - dot(&f.normal, c)).fold(f64::INFINITY, f64::min)
    }

    /// Largest distance from `c` to a vertex.
    pub fn circumradius_about(&self, c: &[f64]) -> f64 {
        self.vertices.iter().map(|v| norm(&sub(v, c))).fold(0.0, f64::max)
    }

    /// `Some((lo, hi))` when the polytope is an axis-aligned box.
    pub fn as_axis_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let d = self.dim();
        if self.facets.len() != 2 * d || self.vertices.len() != 1 << d {
            return None;
        }
        let mut lo = vec![f64::NAN; d];
        let mut hi = vec![f64::NAN; d];
        for f in &self.facets {
            let axis = f.normal.iter().position(|x| (x.abs() - 1.0).abs() < 1e-12)?;
            if f.normal.iter().enumerate().any(|(i, x)| i != axis && x.abs() > 1e-12) {
                return None;
            }
            if f.normal[axis] > 0.0 {
                hi[axis] = f.offset;
            } else {
                lo[axis] = -f.offset;
            }
        }
        if lo.iter().chain(&hi).any(|x| x.is_nan()) {
            return None;
        }
        Some((lo, hi))
    }

    /// `t * B + x` for `t > 0`, reusing the facet structure.
    pub fn homothet(&self, t: f64, x: &[f64]) -> Polytope {
        assert!(t > 0.0, "homothety factor must be positive");
        Polytope {
            vertices: self.vertices.iter().map(|v| v.iter().zip(x).map(|(a, b)| t * a + b).collect()).collect(),
            facets: self.facets.iter().map(|f| f.homothet(t, x)).collect(),
            facet_vertices: self.facet_vertices.clone(),
            centroid: self.centroid.iter().zip(x).map(|(a, b)| t * a + b).collect(),
        }
    }

    /// Point reflection `-B`.
    pub fn negated(&self) -> Polytope {
        Polytope {
            vertices: self.vertices.iter().map(|v| v.iter().map(|x| -x).collect()).collect(),
            facets: self
                .facets
                .iter()
                .map(|f| Halfspace { normal: f.normal.iter().map(|x| -x).collect(), offset: f.offset })
                .collect(),
            facet_vertices: self.facet_vertices.clone(),
            centroid: self.centroid.iter().map(|x| -x).collect(),
        }
    }

    /// `c + u(B - c)`.
    pub fn rotated_about(&self, c: &[f64], u: &Rotation) -> Polytope {
        let vertices = self.vertices.iter().map(|v| crate::linalg::add(c, &u.apply(&sub(v, c)))).collect();
        let facets = self
            .facets
            .iter()
            .map(|f| {
                let normal = u.apply(&f.normal);
                let offset = f.offset - dot(&f.normal, c) + dot(&normal, c);
                Halfspace { normal, offset }
            })
            .collect();
        Polytope {
            vertices,
            facets,
            facet_vertices: self.facet_vertices.clone(),
            centroid: crate::linalg::add(c, &u.apply(&sub(&self.centroid, c))),
        }
    }

    /// Whether every vertex lies in the closed unit cube.
    pub fn inside_unit_cell(&self) -> bool {
        self.vertices.iter().flatten().all(|&x| (-TOL..=1.0 + TOL).contains(&x))
    }

    /// Vertices of facet `f` in cyclic order (d = 3) or as stored otherwise.
    fn ordered_facet_vertices(&self, f: usize) -> Vec<usize> {
        let ids = self.facet_vertices[f].clone();
        if self.dim() != 3 || ids.len() <= 3 {
            return ids;
        }
        let pts: Vec<&Vec<f64>> = ids.iter().map(|&i| &self.vertices[i]).collect();
        let mut mid = vec![0.0; 3];
        for p in &pts {
            for k in 0..3 {
                mid[k] += p[k] / pts.len() as f64;
            }
        }
        let spans: Vec<Vec<f64>> = pts.iter().map(|p| sub(p, &mid)).collect();
        let basis = orthonormal_basis(&spans, 1e-12);
        let mut angled: Vec<(f64, usize)> = ids
            .iter()
            .zip(&spans)
            .map(|(&i, s)| (dot(s, &basis[1]).atan2(dot(s, &basis[0])), i))
            .collect();
        angled.sort_by(|a, b| a.0.total_cmp(&b.0));
        angled.into_iter().map(|(_, i)| i).collect()
    }

    /// Fan triangulation from the centroid into `d`-simplices (each `d + 1` points).
    pub fn simplices(&self) -> Vec<Vec<Vec<f64>>> {
        let c = &self.centroid;
        match self.dim() {
            1 => vec![vec![self.vertices[0].clone(), self.vertices[1].clone()]],
            2 => self
                .facet_vertices
                .iter()
                .map(|fv| vec![c.clone(), self.vertices[fv[0]].clone(), self.vertices[fv[1]].clone()])
                .collect(),
            _ => {
                let mut out = Vec::new();
                for f in 0..self.facets.len() {
                    let ring = self.ordered_facet_vertices(f);
                    for w in 1..ring.len() - 1 {
                        out.push(vec![
                            c.clone(),
                            self.vertices[ring[0]].clone(),
                            self.vertices[ring[w]].clone(),
                            self.vertices[ring[w + 1]].clone(),
                        ]);
                    }
                }
                out
            }
        }
    }

    /// Lebesgue measure.
    pub fn volume(&self) -> f64 {
        let d = self.dim();
        let fact: f64 = (1..=d).map(|k| k as f64).product();
        self.simplices()
            .iter()
            .map(|s| {
                let rows: Vec<Vec<f64>> = s[1..].iter().map(|p| sub(p, &s[0])).collect();
                crate::linalg::det(&rows).abs() / fact
            })
            .sum()
    }

    /// All non-empty faces including the polytope itself, sorted by dimension.
    pub fn faces(&self) -> Result<Vec<Face>> {
        let d = self.dim();
        if d > 3 {
            return Err(Error::UnsupportedDimension { what: "face lattice", dim: d, max: 3 });
        }
        let mut sets: Vec<Vec<usize>> = self.facet_vertices.clone();
        let mut frontier = sets.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for a in &frontier {
                for b in &self.facet_vertices {
                    let meet: Vec<usize> = a.iter().copied().filter(|i| b.contains(i)).collect();
                    if !meet.is_empty() && !sets.contains(&meet) && !next.contains(&meet) {
                        next.push(meet);
                    }
                }
            }
            sets.extend(next.iter().cloned());
            frontier = next;
        }
        let mut faces: Vec<Face> = sets
            .into_iter()
            .map(|vs| {
                let base = &self.vertices[vs[0]];
                let spans: Vec<Vec<f64>> = vs[1..].iter().map(|&i| sub(&self.vertices[i], base)).collect();
                let dim = rank(&spans, 1e-9);
                let facets =
                    (0..self.facets.len()).filter(|&f| vs.iter().all(|i| self.facet_vertices[f].contains(i))).collect();
                Face { vertices: vs, dim, facets }
            })
            .collect();
        faces.push(Face { vertices: (0..self.vertices.len()).collect(), dim: d, facets: Vec::new() });
        faces.sort_by(|a, b| a.dim.cmp(&b.dim).then_with(|| a.vertices.cmp(&b.vertices)));
        Ok(faces)
    }

    /// Orthonormal basis of the direction space of the affine hull of a vertex set.
    fn face_directions(&self, vertices: &[usize]) -> Vec<Vec<f64>> {
        let base = &self.vertices[vertices[0]];
        let spans: Vec<Vec<f64>> = vertices[1..].iter().map(|&i| sub(&self.vertices[i], base)).collect();
        orthonormal_basis(&spans, 1e-9)
    }
}

/// Gauge (Minkowski functional) of a polytope about an interior point.
#[derive(Clone, Debug)]
pub struct Gauge {
    center: Vec<f64>,
    normals: Vec<Vec<f64>>,
    /// Distance from the center to each facet plane along its normal.
    heights: Vec<f64>,
}

impl Gauge {
    pub fn new(body: &Polytope, center: &[f64]) -> Result<Self> {
        if center.len() != body.dim() {
            return Err(Error::DimensionMismatch("gauge center".into()));
        }
        let heights: Vec<f64> = body.facets.iter().map(|f| f.offset - dot(&f.normal, center)).collect();
        if heights.iter().any(|&h| h <= TOL) {
            return Err(Error::NotInterior(center.to_vec()));
        }
        Ok(Gauge { center: center.to_vec(), normals: body.facets.iter().map(|f| f.normal.clone()).collect(), heights })
    }

    /// `inf { t >= 0 : x in (1 - t) c + t B }`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let z = sub(x, &self.center);
        self.normals.iter().zip(&self.heights).map(|(a, h)| dot(a, &z) / h).fold(0.0, f64::max)
    }

    /// Continuous ramp that is 1 on `g <= 1 - eps`, 0 on `g >= 1`, evaluated at `x mod 1`.
    pub fn smoothed(&self, eps: f64, x: &[f64]) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidSmoothing(eps));
        }
        let wrapped: Vec<f64> = x.iter().map(|v| v.rem_euclid(1.0)).collect();
        Ok(ramp(self.value(&wrapped), eps))
    }

    /// Smallest distance from the center to the boundary.
    pub fn inradius(&self) -> f64 {
        self.heights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[inline]
pub(crate) fn ramp(g: f64, eps: f64) -> f64 {
    if g <= 1.0 - eps {
        1.0
    } else if g >= 1.0 {
        0.0
    } else {
        (1.0 - g) / eps
    }
}

/// Gauge of `body` about `center` evaluated at `x`.
pub fn gauge_value(body: &Polytope, center: &[f64], x: &[f64]) -> Result<f64> {
    Ok(Gauge::new(body, center)?.value(x))
}

/// Periodic piecewise-linear smoothing of the indicator of `body`.
pub fn smoothed_indicator(body: &Polytope, center: &[f64], eps: f64, x: &[f64]) -> Result<f64> {
    Gauge::new(body, center)?.smoothed(eps, x)
}

/// Orthogonal matrix, optionally tagged with the seed it was drawn from.
#[derive(Clone, Debug)]
pub struct Rotation {
    pub matrix: DMatrix<f64>,
    pub seed: Option<u64>,
}

impl Rotation {
    pub fn identity(d: usize) -> Self {
        Rotation { matrix: DMatrix::identity(d, d), seed: None }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.matrix[(i, j)] * v[j]).sum()).collect()
    }

    /// `max |Q^T Q - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim();
        let g = self.matrix.transpose() * &self.matrix - DMatrix::<f64>::identity(d, d);
        g.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Haar-distributed element of the full orthogonal group `O(d)`, deterministic in `seed`.
///
/// QR of a Gaussian matrix with the signs of `diag(R)` moved into `Q`.
pub fn haar_rotation(d: usize, seed: u64) -> Rotation {
    assert!(d >= 1, "dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Rotation { matrix: q, seed: Some(seed) }
}

/// `n` seeded uniform points in `[0, 1)^d`.
pub fn uniform_points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Derived per-trial seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Outcome of [`genericity_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Genericity {
    /// The chain `F_1 ⊆ ... ⊆ F_{d-1}` (vertex sets, increasing dimension).
    Certified { chain: Vec<Vec<usize>> },
    NotCertified,
}

impl Genericity {
    pub fn is_certified(&self) -> bool {
        matches!(self, Genericity::Certified { .. })
    }
}

fn parallel(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.len() == b.len()
        && a.iter().all(|v| {
            let proj: f64 = b.iter().map(|w| dot(v, w).powi(2)).sum();
            (1.0 - proj).abs() < 1e-9
        })
}

/// Searches for a face chain in which every face is parallel to no other face
/// of the same dimension inside the next face of the chain (facets: inside `B`).
pub fn genericity_check(body: &Polytope) -> Result<Genericity> {
    let d = body.dim();
    if d > 3 {
        return Err(Error::UnsupportedDimension { what: "genericity check", dim: d, max: 3 });
    }
    if d == 1 {
        return Ok(Genericity::Certified { chain: Vec::new() });
    }
    let faces = body.faces()?;
    let of_dim = |k: usize| faces.iter().filter(move |f| f.dim == k);
    let dirs = |f: &Face| body.face_directions(&f.vertices);
    let isolated = |face: &Face, peers: &mut dyn Iterator<Item = &Face>| {
        let own = dirs(face);
        peers.filter(|g| g.vertices != face.vertices).all(|g| !parallel(&own, &dirs(g)))
    };
    for top in of_dim(d - 1) {
        if !isolated(top, &mut of_dim(d - 1)) {
            continue;
        }
        if d == 2 {
            return Ok(Genericity::Certified { chain: vec![top.vertices.clone()] });
        }
        let inside = |g: &&Face| g.vertices.iter().all(|i| top.vertices.contains(i));
        for edge in of_dim(1).filter(inside) {
            if isolated(edge, &mut of_dim(1).filter(inside)) {
                return Ok(Genericity::Certified { chain: vec![edge.vertices.clone(), top.vertices.clone()] });
            }
        }
    }
    Ok(Genericity::NotCertified)
}

/// Sufficient condition for genericity: every at most `d` facet normals are independent.
pub fn normals_in_general_position(body: &Polytope) -> bool {
    let d = body.dim();
    let normals: Vec<Vec<f64>> = body.facets.iter().map(|f| f.normal.clone()).collect();
    (2..=d.min(normals.len())).all(|k| {
        combinations(normals.len(), k).all(|c| {
            let rows: Vec<Vec<f64>> = c.iter().map(|&i| normals[i].clone()).collect();
            rank(&rows, 1e-9) == k
        })
    })
}

/// The grid `Q_{2n+1}^d` with coordinates `i / (2n + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub n: usize,
    pub d: usize,
}

impl GridSpec {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput("grid needs n >= 1 and d >= 1".into()));
        }
        Ok(GridSpec { n, d })
    }

    /// Points per axis, `2n + 1`.
    pub fn side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of a linear index (first axis slowest).
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let s = self.side();
        let mut out = vec![0; self.d];
        for k in (0..self.d).rev() {
            out[k] = idx % s;
            idx /= s;
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.side() + i)
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let s = self.side() as f64;
        self.multi_index(idx).into_iter().map(|i| i as f64 / s).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Lexicographic `k`-subsets of `0..n`.
pub(crate) fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                current = None;
                break;
            }
            i -= 1;
            if next[i] < n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                current = Some(next);
                break;
            }
        }
        Some(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(lo: f64, hi: f64) -> Polytope {
        Polytope::axis_box(&[lo, lo], &[hi, hi]).unwrap()
    }

    fn scalene() -> Polytope {
        Polytope::from_vertices(vec![vec![0.1, 0.15], vec![0.8, 0.3], vec![0.35, 0.85]]).unwrap()
    }

    #[test]
    fn hull_drops_interior_points() {
        let p = Polytope::from_vertices(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![0.5, 0.5],
            vec![0.5, 0.0],
        ])
        .unwrap();
        assert_eq!(p.vertices().len(), 4);
        assert_eq!(p.facets().len(), 4);
        assert!((p.volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn facet_normals_are_unit_and_hull_matches() {
        let p = Polytope::from_vertices(vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.1, 0.0],
            vec![0.2, 1.0, 0.1],
            vec![0.1, 0.3, 1.0],
            vec![0.9, 0.9, 0.8],
        ])
        .unwrap();
        for f in p.facets() {
            assert!((norm(&f.normal) - 1.0).abs() < 1e-12);
        }
        for v in p.vertices() {
            assert!(p.contains(v));
        }
        assert!(p.contains(p.centroid()));
    }

    #[test]
    fn flat_input_is_rejected() {
        let r = Polytope::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn gauge_examples() {
        let b = square(0.25, 0.75);
        let c = [0.5, 0.5];
        assert_eq!(gauge_value(&b, &c, &c).unwrap(), 0.0);
        assert!((gauge_value(&b, &c, &[0.75, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        // (1 - t) c + t B reaches x = (1, 1/2) when t * 1/4 = 1/2
        assert!((gauge_value(&b, &c, &[1.0, 0.5]).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(gauge_value(&b, &[0.75, 0.5], &c), Err(Error::NotInterior(_))));
    }

    #[test]
    fn smoothed_indicator_ramps() {
        let b = square(0.25, 0.75);
        let c = [0.5, 0.5];
        let g = Gauge::new(&b, &c).unwrap();
        // points along the x axis with prescribed gauge values
        let at = |gv: f64| [0.5 + 0.25 * gv, 0.5];
        assert_eq!(g.smoothed(0.1, &at(0.3)).unwrap(), 1.0);
        assert_eq!(g.smoothed(0.1, &at(1.2)).unwrap(), 0.0);
        assert!((g.smoothed(0.1, &at(1.0 - 0.05)).unwrap() - 0.5).abs() < 1e-12);
        // periodic in each coordinate
        assert_eq!(g.smoothed(0.1, &[1.5, -0.5]).unwrap(), 1.0);
        assert!(matches!(g.smoothed(1.0, &c), Err(Error::InvalidSmoothing(_))));
        assert!(matches!(g.smoothed(0.0, &c), Err(Error::InvalidSmoothing(_))));
    }

    #[test]
    fn haar_is_orthogonal_and_deterministic() {
        for d in 1..=5 {
            for seed in 0..20 {
                let q = haar_rotation(d, seed);
                assert!(q.orthogonality_defect() < 1e-12);
                assert_eq!(q.matrix, haar_rotation(d, seed).matrix);
            }
        }
    }

    #[test]
    fn haar_d1_signs_are_balanced() {
        let plus = (0..10_000).filter(|&s| haar_rotation(1, s).matrix[(0, 0)] > 0.0).count();
        let freq = plus as f64 / 10_000.0;
        assert!((freq - 0.5).abs() <= 0.05, "frequency {freq}");
    }

    #[test]
    fn haar_d3_first_column_is_uniform_on_sphere() {
        // 5 equal-area bands in z (Archimedes) times 4 azimuth sectors
        let trials = 10_000;
        let mut counts = [0usize; 20];
        for s in 0..trials {
            let v = haar_rotation(3, s as u64).apply(&[1.0, 0.0, 0.0]);
            let band = (((v[2] + 1.0) / 2.0 * 5.0) as usize).min(4);
            let phi = v[1].atan2(v[0]) + std::f64::consts::PI;
            let sector = ((phi / (2.0 * std::f64::consts::PI) * 4.0) as usize).min(3);
            counts[band * 4 + sector] += 1;
        }
        let expected = trials as f64 / 20.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square(19) upper 1% point
        assert!(chi2 < 36.191, "chi2 = {chi2}");
    }

    #[test]
    fn genericity_examples() {
        assert!(genericity_check(&scalene()).unwrap().is_certified());
        assert_eq!(genericity_check(&square(0.0, 1.0)).unwrap(), Genericity::NotCertified);
        let simplex = Polytope::from_vertices(vec![
            vec![0.05, 0.1, 0.02],
            vec![0.93, 0.17, 0.11],
            vec![0.31, 0.88, 0.07],
            vec![0.22, 0.35, 0.91],
        ])
        .unwrap();
        match genericity_check(&simplex).unwrap() {
            Genericity::Certified { chain } => {
                assert_eq!(chain.len(), 2);
                assert!(chain[0].iter().all(|v| chain[1].contains(v)));
            }
            Genericity::NotCertified => panic!("simplex must be generic"),
        }
        let cube = Polytope::axis_box(&[0.0; 3], &[1.0; 3]).unwrap();
        assert!(!genericity_check(&cube).unwrap().is_certified());
        assert!(normals_in_general_position(&scalene()));
        assert!(!normals_in_general_position(&square(0.0, 1.0)));
    }

    #[test]
    fn face_lattice_counts() {
        let cube = Polytope::axis_box(&[0.0; 3], &[1.0; 3]).unwrap();
        let faces = cube.faces().unwrap();
        let count = |k| faces.iter().filter(|f| f.dim == k).count();
        assert_eq!((count(0), count(1), count(2), count(3)), (8, 12, 6, 1));
        assert!(faces.iter().filter(|f| f.dim == 0).all(|f| f.facets.len() == 3));
    }

    #[test]
    fn grid_coordinates() {
        let g = GridSpec::new(2, 2).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g.point(7), vec![1.0 / 5.0, 2.0 / 5.0]);
        assert_eq!(g.linear_index(&g.multi_index(19)), 19);
    }

    #[test]
    fn rotation_about_center_preserves_volume() {
        let b = scalene();
        let u = haar_rotation(2, 7);
        let r = b.rotated_about(&[0.5, 0.5], &u);
        assert!((r.volume() - b.volume()).abs() < 1e-12);
        for v in r.vertices() {
            assert!(r.contains(v));
        }
    }
}
