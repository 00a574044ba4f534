//! Discrete and continuous Fourier coefficients of polytope indicators, the
//! spectra of the convolution matrices `M(B, n)`, and the experiments built
//! on them: convergence of the discrete coefficients, spherical averages of
//! `|f̂_B|`, and the search for a rotation with a large spectral sum.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{derive_seed, haar_rotation, Gauge, GridSpec, Polytope, Rotation};
use crate::linalg::{dot, norm, sub};
use crate::setsystems::convolution_matrix;

/// Largest grid (`(2n+1)^d` samples) a spectrum may use.
pub const SPECTRUM_BUDGET: usize = 1 << 24;

/// Radius of the ball about the cell center that normalized bodies fit into.
pub const NORMALIZED_RADIUS: f64 = 0.49;

/// `f̃(ξ, 2n+1)` for every `ξ ∈ {-n..n}^d`.
#[derive(Clone, Debug)]
pub struct SpectrumGrid {
    pub n: usize,
    pub d: usize,
    /// Linear index over `ξ + n`, first axis slowest.
    coeffs: Vec<Complex64>,
}

impl SpectrumGrid {
    fn side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn index(&self, xi: &[i64]) -> usize {
        xi.iter().fold(0, |acc, &x| acc * self.side() + (x + self.n as i64) as usize)
    }

    /// Frequency at a linear index.
    pub fn frequency(&self, idx: usize) -> Vec<i64> {
        GridSpec { n: self.n, d: self.d }.multi_index(idx).into_iter().map(|k| k as i64 - self.n as i64).collect()
    }

    pub fn get(&self, xi: &[i64]) -> Complex64 {
        self.coeffs[self.index(xi)]
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `Σ_ξ |f̃(ξ)|`; equals `‖M‖_tr / (2n+1)^d`.
    pub fn abs_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `max |f̃(-ξ) - conj f̃(ξ)|`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let neg: Vec<i64> = self.frequency(i).iter().map(|x| -x).collect();
                (self.get(&neg) - self.coeffs[i].conj()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// In-place forward FFT along every axis of a row-major `side^d` array.
fn fft_nd(data: &mut [Complex64], side: usize, d: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(side);
    let mut line = vec![Complex64::new(0.0, 0.0); side];
    for axis in 0..d {
        let stride = side.pow((d - 1 - axis) as u32);
        let block = stride * side;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for k in 0..side {
                    line[k] = data[base + k * stride];
                }
                fft.process(&mut line);
                for k in 0..side {
                    data[base + k * stride] = line[k];
                }
            }
        }
    }
}

/// Discrete coefficients of a function sampled on `Q_{2n+1}^d`.
pub fn discrete_spectrum(f: impl Fn(&[f64]) -> f64, n: usize, d: usize) -> Result<SpectrumGrid> {
    let grid = GridSpec::new(n, d)?;
    let size = (grid.side() as u128).pow(d as u32);
    if size > SPECTRUM_BUDGET as u128 {
        return Err(Error::BudgetExceeded { what: "spectrum grid", needed: size, budget: SPECTRUM_BUDGET as u128 });
    }
    let samples: Vec<f64> = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
    Ok(spectrum_from_samples(&samples, n, d))
}

fn spectrum_from_samples(samples: &[f64], n: usize, d: usize) -> SpectrumGrid {
    let side = 2 * n + 1;
    let mut data: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_nd(&mut data, side, d);
    let scale = 1.0 / data.len() as f64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); data.len()];
    let grid = GridSpec { n, d };
    for (k, value) in data.into_iter().enumerate() {
        // FFT bin k holds frequency k (k <= n) or k - side
        let target: Vec<usize> = grid.multi_index(k).into_iter().map(|ki| (ki + n) % side).collect();
        coeffs[grid.linear_index(&target)] = value * scale;
    }
    SpectrumGrid { n, d, coeffs }
}

/// Spectrum of the periodic indicator `f_B`.
pub fn discrete_spectrum_of_body(body: &Polytope, n: usize) -> Result<SpectrumGrid> {
    discrete_spectrum(|x| f64::from(u8::from(body.contains(x))), n, body.dim())
}

/// `f̃(ξ, 2n+1)` by direct summation (reference for the FFT path).
pub fn direct_dft(f: impl Fn(&[f64]) -> f64, n: usize, d: usize, xi: &[i64]) -> Complex64 {
    let grid = GridSpec { n, d };
    let total: Complex64 = (0..grid.len())
        .map(|i| {
            let q = grid.point(i);
            let phase = -2.0 * PI * xi.iter().zip(&q).map(|(&k, x)| k as f64 * x).sum::<f64>();
            Complex64::from_polar(f(&q), phase)
        })
        .sum();
    total / grid.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoefficientMethod {
    /// Product formula for axis-aligned boxes (and `ξ = 0`).
    ClosedForm,
    /// Divergence theorem over the edges of a polygon.
    Boundary,
    /// Fan triangulation with adaptive Gauss–Kronrod quadrature.
    Quadrature,
}

/// `f̂_B(ξ) = ∫_B e^{-2πi<ξ,x>} dx` with an error estimate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuousCoefficient {
    pub xi: Vec<f64>,
    pub re: f64,
    pub im: f64,
    pub method: CoefficientMethod,
    pub error: f64,
}

impl ContinuousCoefficient {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Quadrature tolerance for continuous coefficients.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// `|ξ|` below which polygons fall back to quadrature.
const BOUNDARY_MIN_FREQUENCY: f64 = 0.5;

pub fn continuous_coefficient(body: &Polytope, xi: &[f64]) -> Result<ContinuousCoefficient> {
    if xi.len() != body.dim() {
        return Err(Error::DimensionMismatch("frequency".into()));
    }
    let make = |v: Complex64, method, error| ContinuousCoefficient { xi: xi.to_vec(), re: v.re, im: v.im, method, error };
    if xi.iter().all(|&x| x == 0.0) {
        return Ok(make(Complex64::new(body.volume(), 0.0), CoefficientMethod::ClosedForm, 1e-15));
    }
    if let Some((lo, hi)) = body.as_axis_box() {
        return Ok(make(box_coefficient(&lo, &hi, xi), CoefficientMethod::ClosedForm, 1e-15));
    }
    if body.dim() == 2 && norm(xi) >= BOUNDARY_MIN_FREQUENCY {
        return Ok(make(boundary_coefficient(body, xi), CoefficientMethod::Boundary, 1e-13));
    }
    let (value, error) = quadrature_coefficient(body, xi, QUADRATURE_TOL)?;
    Ok(make(value, CoefficientMethod::Quadrature, error))
}

fn box_coefficient(lo: &[f64], hi: &[f64], xi: &[f64]) -> Complex64 {
    lo.iter()
        .zip(hi)
        .zip(xi)
        .map(|((&a, &b), &k)| {
            if k == 0.0 {
                Complex64::new(b - a, 0.0)
            } else {
                let w = -2.0 * PI * k;
                (Complex64::from_polar(1.0, w * b) - Complex64::from_polar(1.0, w * a)) / Complex64::new(0.0, w)
            }
        })
        .product()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `(i / (2π|ξ|²)) Σ_e <ξ, n_e> |e| e^{-2πi<ξ, m_e>} sinc(π<ξ, t_e>)`.
fn boundary_coefficient(body: &Polytope, xi: &[f64]) -> Complex64 {
    let verts = body.vertices();
    let sum: Complex64 = body
        .facets()
        .iter()
        .zip(body.facet_vertices())
        .map(|(f, fv)| {
            let (a, b) = (&verts[fv[0]], &verts[fv[1]]);
            let t = sub(b, a);
            let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
            let weight = dot(xi, &f.normal) * norm(&t) * sinc(PI * dot(xi, &t));
            Complex64::from_polar(weight, -2.0 * PI * dot(xi, &mid))
        })
        .sum();
    sum * Complex64::new(0.0, 1.0 / (2.0 * PI * dot(xi, xi)))
}

/// `(e^z - 1) / z`.
fn phi(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        Complex64::new(1.0, 0.0) + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)))
    } else {
        (z.exp() - 1.0) / z
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and the Kronrod-minus-Gauss difference on `[a, b]`.
fn gk15(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let center = f(c);
    let mut kronrod = center * GK_WEIGHTS[7];
    let mut gauss = center * GAUSS_WEIGHTS[3];
    for k in 0..7 {
        let pair = f(c - h * GK_NODES[k]) + f(c + h * GK_NODES[k]);
        kronrod += pair * GK_WEIGHTS[k];
        if k % 2 == 1 {
            gauss += pair * GAUSS_WEIGHTS[k / 2];
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).norm())
}

fn adaptive(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64, tol: f64, depth: u32) -> (Complex64, f64) {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return (value, err);
    }
    let m = 0.5 * (a + b);
    let (l, el) = adaptive(f, a, m, 0.5 * tol, depth - 1);
    let (r, er) = adaptive(f, m, b, 0.5 * tol, depth - 1);
    (l + r, el + er)
}

/// `∫_{s ≥ 0, Σ s ≤ r} exp(Σ c_k s_k) ds`, innermost variable exact.
fn simplex_exponential(c: &[Complex64], r: f64, tol: f64) -> (Complex64, f64) {
    if c.len() == 1 {
        return (phi(c[0] * r) * r, 0.0);
    }
    let mut inner_err = 0.0f64;
    let mut g = |s: f64| {
        let (v, e) = simplex_exponential(&c[1..], r - s, 0.1 * tol);
        inner_err = inner_err.max(e);
        (c[0] * s).exp() * v
    };
    let (value, err) = adaptive(&mut g, 0.0, r, tol, 40);
    (value, err + inner_err * r)
}

fn quadrature_coefficient(body: &Polytope, xi: &[f64], tol: f64) -> Result<(Complex64, f64)> {
    let simplices = body.simplices();
    let per = tol / simplices.len() as f64;
    let mut total = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for s in simplices {
        let edges: Vec<Vec<f64>> = s[1..].iter().map(|p| sub(p, &s[0])).collect();
        let jac = crate::linalg::det(&edges).abs();
        if jac == 0.0 {
            continue;
        }
        let c: Vec<Complex64> = edges.iter().map(|e| Complex64::new(0.0, -2.0 * PI * dot(xi, e))).collect();
        let (v, e) = simplex_exponential(&c, 1.0, per / jac);
        total += Complex64::from_polar(jac, -2.0 * PI * dot(xi, &s[0])) * v;
        error += e * jac;
    }
    if error > tol {
        return Err(Error::Quadrature { estimate: error, tolerance: tol });
    }
    Ok((total, error))
}

/// Continuous coefficient by quadrature regardless of shape.
pub fn continuous_coefficient_by_quadrature(body: &Polytope, xi: &[f64]) -> Result<ContinuousCoefficient> {
    let (v, error) = quadrature_coefficient(body, xi, QUADRATURE_TOL)?;
    Ok(ContinuousCoefficient { xi: xi.to_vec(), re: v.re, im: v.im, method: CoefficientMethod::Quadrature, error })
}

/// `max_{‖ξ‖∞ ≤ n} |f̃_B(ξ, 2n+1) - f̂_B(ξ)|` with a maximizing frequency.
pub fn convergence_gap(body: &Polytope, n: usize) -> Result<(f64, Vec<i64>)> {
    let spectrum = discrete_spectrum_of_body(body, n)?;
    let mut best = (-1.0, Vec::new());
    for i in 0..spectrum.len() {
        let xi = spectrum.frequency(i);
        let xf: Vec<f64> = xi.iter().map(|&k| k as f64).collect();
        let gap = (spectrum.coefficients()[i] - continuous_coefficient(body, &xf)?.value()).norm();
        if gap > best.0 {
            best = (gap, xi);
        }
    }
    Ok(best)
}

/// Replacing `f_B` by its gauge smoothing `f` (width `ε = n^{-1/2}`) on the grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothingGap {
    pub epsilon: f64,
    /// `max_ξ |f̃_B(ξ) - f̃(ξ)|`.
    pub max_gap: f64,
    /// `|S ∩ Q| / (2n+1)^d` with `S = {1 - ε < g < 1}`.
    pub disagreement: f64,
}

pub fn smoothing_gap(body: &Polytope, n: usize) -> Result<SmoothingGap> {
    let epsilon = 1.0 / (n as f64).sqrt();
    let gauge = Gauge::new(body, body.centroid())?;
    let sharp = discrete_spectrum_of_body(body, n)?;
    let smooth = discrete_spectrum(|x| gauge.smoothed(epsilon, x).unwrap_or(0.0), n, body.dim())?;
    let max_gap =
        sharp.coefficients().iter().zip(smooth.coefficients()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let grid = GridSpec::new(n, body.dim())?;
    let inside = (0..grid.len())
        .filter(|&i| {
            let g = gauge.value(&grid.point(i));
            g > 1.0 - epsilon && g < 1.0
        })
        .count();
    Ok(SmoothingGap { epsilon, max_gap, disagreement: inside as f64 / grid.len() as f64 })
}

/// Monte Carlo estimate of a spherical average with its standard error.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphericalAverage {
    pub rho: f64,
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Mean of `|f̂_B(ρζ)|` over `ζ = u e₁` for Haar-random `u`.
pub fn spherical_average(body: &Polytope, rho: f64, trials: usize, seed: u64) -> Result<SphericalAverage> {
    if trials < 2 {
        return Err(Error::InvalidInput("spherical average needs at least two trials".into()));
    }
    let d = body.dim();
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    let mut values = Vec::with_capacity(trials);
    for k in 0..trials {
        let zeta = haar_rotation(d, derive_seed(seed, k as u64)).apply(&e1);
        let xi: Vec<f64> = zeta.iter().map(|z| rho * z).collect();
        values.push(continuous_coefficient(body, &xi)?.value().norm());
    }
    let mean = values.iter().sum::<f64>() / trials as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok(SphericalAverage { rho, mean, std_error: (var / trials as f64).sqrt(), trials })
}

/// Spherical averages pooled over several radii; an exploratory variant for
/// bodies (such as cubes) whose averages oscillate in `ρ`.
pub fn radial_band_average(body: &Polytope, rhos: &[f64], trials: usize, seed: u64) -> Result<f64> {
    if rhos.is_empty() {
        return Err(Error::InvalidInput("no radii".into()));
    }
    let mut total = 0.0;
    for (k, &rho) in rhos.iter().enumerate() {
        total += spherical_average(body, rho, trials, derive_seed(seed, k as u64))?.mean;
    }
    Ok(total / rhos.len() as f64)
}

fn cell_center(d: usize) -> Vec<f64> {
    vec![0.5; d]
}

/// Scales `B` about the cell center until it fits in the ball of radius
/// [`NORMALIZED_RADIUS`], so every rotation about the center stays inside the unit cell.
pub fn normalize_body(body: &Polytope) -> Result<Polytope> {
    let c = cell_center(body.dim());
    let r = body.circumradius_about(&c);
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Degenerate("cannot normalize".into()));
    }
    if r <= NORMALIZED_RADIUS {
        return Ok(body.clone());
    }
    let s = NORMALIZED_RADIUS / r;
    let shift: Vec<f64> = c.iter().map(|x| x * (1.0 - s)).collect();
    Ok(body.homothet(s, &shift))
}

/// `B_u = c + u(B - c)` for the normalized body.
pub fn rotated_body(body: &Polytope, u: &Rotation) -> Result<Polytope> {
    let b = normalize_body(body)?;
    Ok(b.rotated_about(&cell_center(b.dim()), u))
}

/// `S(u) = Σ_{‖ξ‖∞ ≤ n} |f̃_{B_u}(ξ, 2n+1)|`.
pub fn spectral_sum(body: &Polytope, n: usize, u: &Rotation) -> Result<f64> {
    Ok(discrete_spectrum_of_body(&rotated_body(body, u)?, n)?.abs_sum())
}

#[derive(Clone, Debug)]
pub struct RotationSearch {
    pub best: Rotation,
    pub best_sum: f64,
    pub identity_sum: f64,
    /// `(seed, S)` for every sampled rotation, identity excluded.
    pub sampled: Vec<(u64, f64)>,
}

/// Largest `S(u)` over the identity and `trials` Haar rotations with seeds
/// derived from `seed`.
pub fn rotation_search(body: &Polytope, n: usize, trials: usize, seed: u64) -> Result<RotationSearch> {
    let d = body.dim();
    let identity = Rotation::identity(d);
    let identity_sum = spectral_sum(body, n, &identity)?;
    let mut best = (identity, identity_sum);
    let mut sampled = Vec::with_capacity(trials);
    for k in 0..trials {
        let s = derive_seed(seed, k as u64);
        let u = haar_rotation(d, s);
        let value = spectral_sum(body, n, &u)?;
        sampled.push((s, value));
        if value > best.1 {
            best = (u, value);
        }
    }
    Ok(RotationSearch { best: best.0, best_sum: best.1, identity_sum, sampled })
}

/// Spectral lower bound on `γ₂(M(B_u, n))` and what it implies.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralBound {
    /// `S(u) = ‖M‖_tr / (2n+1)^d`, a lower bound on `γ₂(M)`.
    pub gamma2_lower: f64,
    /// `S / 2^d`: lower bound on `γ₂` of the translate traces on the grid.
    pub translate_gamma2_lower: f64,
    /// `S / (2^d log((2n+1)^d))`: hereditary-discrepancy floor up to a constant.
    pub disc_floor: f64,
}

pub fn spectral_gamma2_lb(body: &Polytope, n: usize, u: &Rotation) -> Result<SpectralBound> {
    let s = spectral_sum(body, n, u)?;
    let d = body.dim() as i32;
    let cells = ((2 * n + 1) as f64).powi(d);
    let scale = 2f64.powi(d);
    Ok(SpectralBound { gamma2_lower: s, translate_gamma2_lower: s / scale, disc_floor: s / (scale * cells.ln()) })
}

/// Residual of the Fourier diagonalization of `M(B_u, n)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenCheck {
    pub residual: f64,
    pub trace_norm_spectrum: f64,
    pub trace_norm_svd: f64,
}

/// Largest explicit `M` handled by [`spectral_eigencheck`].
pub const EIGENCHECK_BUDGET: usize = 10_000;

/// Applies `M(B_u, n)` to every character `v_ξ(x) = e^{2πi<ξ,x>}` and compares
/// with `(2n+1)^d f̃(ξ) v_ξ`; also compares `Σ|λ|` with the SVD trace norm.
pub fn spectral_eigencheck(body: &Polytope, n: usize, u: &Rotation) -> Result<EigenCheck> {
    let b = rotated_body(body, u)?;
    let grid = GridSpec::new(n, b.dim())?;
    if grid.len() > EIGENCHECK_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "explicit eigencheck",
            needed: grid.len() as u128,
            budget: EIGENCHECK_BUDGET as u128,
        });
    }
    let m = convolution_matrix(&b, n)?;
    let spectrum = discrete_spectrum_of_body(&b, n)?;
    let size = grid.len() as f64;
    let points = grid.points();
    let mut residual = 0.0f64;
    for i in 0..spectrum.len() {
        let xi = spectrum.frequency(i);
        let v: Vec<Complex64> = points
            .iter()
            .map(|x| Complex64::from_polar(1.0, 2.0 * PI * xi.iter().zip(x).map(|(&k, y)| k as f64 * y).sum::<f64>()))
            .collect();
        let lambda = spectrum.coefficients()[i] * size;
        let mv = m.apply(&v);
        for (a, b) in mv.iter().zip(&v) {
            residual = residual.max((a - lambda * b).norm());
        }
    }
    let trace_norm_svd = crate::gamma2::trace_norm_dense(&m.to_sparse().to_dense())?;
    Ok(EigenCheck { residual, trace_norm_spectrum: spectrum.abs_sum() * size, trace_norm_svd })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_interval() -> Polytope {
        Polytope::axis_box(&[0.0], &[0.5]).unwrap()
    }

    fn triangle() -> Polytope {
        Polytope::from_vertices(vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap()
    }

    fn scalene() -> Polytope {
        Polytope::from_vertices(vec![vec![0.1, 0.15], vec![0.8, 0.3], vec![0.35, 0.85]]).unwrap()
    }

    #[test]
    fn constant_function_spectrum() {
        let s = discrete_spectrum(|_| 1.0, 3, 2).unwrap();
        for i in 0..s.len() {
            let expected = if s.frequency(i).iter().all(|&k| k == 0) { 1.0 } else { 0.0 };
            assert!((s.coefficients()[i] - Complex64::new(expected, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn half_interval_example() {
        let s = discrete_spectrum_of_body(&half_interval(), 1).unwrap();
        let expected = (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, -2.0 * PI / 3.0)) / 3.0;
        assert!((s.get(&[1]) - expected).norm() < 1e-15);
        assert!((s.get(&[0]).re - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fft_matches_direct_sum_and_is_conjugate_symmetric() {
        let b = scalene();
        let f = |x: &[f64]| f64::from(u8::from(b.contains(x)));
        let s = discrete_spectrum(f, 5, 2).unwrap();
        for xi in [[0i64, 0], [1, -2], [5, 5], [-3, 4]] {
            assert!((s.get(&xi) - direct_dft(f, 5, 2, &xi)).norm() < 1e-12);
        }
        assert!(s.conjugate_asymmetry() < 1e-12);
        let mean = (0..121).filter(|&i| b.contains(&GridSpec { n: 5, d: 2 }.point(i))).count() as f64 / 121.0;
        assert!((s.energy() - mean).abs() < 1e-12);
    }

    #[test]
    fn continuous_box_closed_form() {
        let a = 0.3;
        let b = Polytope::axis_box(&[0.0], &[a]).unwrap();
        let c = continuous_coefficient(&b, &[1.0]).unwrap();
        let expected = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -2.0 * PI * a)) / Complex64::new(0.0, 2.0 * PI);
        assert!((c.value() - expected).norm() < 1e-15);
        assert!((continuous_coefficient(&triangle(), &[0.0, 0.0]).unwrap().re - 0.125).abs() < 1e-15);
    }

    /// Midpoint sums over the unit square after `t = (1 - s) w`, extrapolated in `h²`.
    fn riemann_triangle(v: &[Vec<f64>], xi: &[f64], m: usize) -> Complex64 {
        let rule = |m: usize| {
            let h = 1.0 / m as f64;
            let e1 = sub(&v[1], &v[0]);
            let e2 = sub(&v[2], &v[0]);
            let jac = crate::linalg::det(&[e1.clone(), e2.clone()]).abs();
            let mut total = Complex64::new(0.0, 0.0);
            for i in 0..m {
                let s = (i as f64 + 0.5) * h;
                for j in 0..m {
                    let t = (1.0 - s) * (j as f64 + 0.5) * h;
                    let x: Vec<f64> = (0..2).map(|k| v[0][k] + s * e1[k] + t * e2[k]).collect();
                    total += Complex64::from_polar((1.0 - s) * jac, -2.0 * PI * dot(xi, &x));
                }
            }
            total * h * h
        };
        (rule(2 * m) * 4.0 - rule(m)) / 3.0
    }

    #[test]
    fn triangle_against_riemann_oracle() {
        let tri = triangle();
        let q = continuous_coefficient_by_quadrature(&tri, &[1.0, 0.0]).unwrap();
        let oracle = riemann_triangle(tri.vertices(), &[1.0, 0.0], 600);
        assert!((q.value() - oracle).norm() < 1e-6, "{} vs {}", q.value(), oracle);
        assert!(q.error <= QUADRATURE_TOL);
        let b = continuous_coefficient(&tri, &[1.0, 0.0]).unwrap();
        assert_eq!(b.method, CoefficientMethod::Boundary);
        assert!((b.value() - oracle).norm() < 1e-6);
    }

    #[test]
    fn boundary_formula_matches_quadrature() {
        let b = scalene();
        for xi in [[0.6, 0.1], [3.0, -2.0], [7.3, 11.9], [0.0, 5.0]] {
            let fast = continuous_coefficient(&b, &xi).unwrap().value();
            let slow = continuous_coefficient_by_quadrature(&b, &xi).unwrap().value();
            assert!((fast - slow).norm() < 1e-8, "{xi:?}: {fast} vs {slow}");
            assert!(fast.norm() <= b.volume() + 1e-12);
        }
    }

    #[test]
    fn tetrahedron_quadrature_volume_limit() {
        let t = Polytope::from_vertices(vec![
            vec![0.1, 0.1, 0.1],
            vec![0.8, 0.2, 0.1],
            vec![0.3, 0.7, 0.2],
            vec![0.2, 0.3, 0.9],
        ])
        .unwrap();
        let near = continuous_coefficient(&t, &[1e-7, 0.0, 0.0]).unwrap();
        assert!((near.value().norm() - t.volume()).abs() < 1e-8);
        let far = continuous_coefficient(&t, &[2.0, -1.0, 0.5]).unwrap();
        assert!(far.value().norm() <= t.volume());
    }

    #[test]
    fn unit_cube_has_no_gap() {
        let cube = Polytope::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(convergence_gap(&cube, 4).unwrap().0 < 1e-12);
    }

    #[test]
    fn spectral_sum_of_full_cell_is_one() {
        let cube = Polytope::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let s = discrete_spectrum_of_body(&cube, 4).unwrap();
        assert!((s.abs_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reflection_invariance_in_one_dimension() {
        let b = Polytope::axis_box(&[0.3], &[0.7]).unwrap();
        let flip = Rotation { matrix: nalgebra::DMatrix::from_element(1, 1, -1.0), seed: None };
        let a = spectral_sum(&b, 20, &Rotation::identity(1)).unwrap();
        let r = spectral_sum(&b, 20, &flip).unwrap();
        assert!((a - r).abs() < 1e-12);
    }

    #[test]
    fn eigencheck_small() {
        let check = spectral_eigencheck(&scalene(), 3, &haar_rotation(2, 1)).unwrap();
        assert!(check.residual < 1e-9);
        assert!((check.trace_norm_spectrum - check.trace_norm_svd).abs() < 1e-6);
    }

    #[test]
    fn smoothing_gap_is_bounded_by_disagreement() {
        let g = smoothing_gap(&scalene(), 16).unwrap();
        assert!(g.max_gap <= g.disagreement + 1e-12);
    }

    #[test]
    fn spherical_average_small_radius_is_volume() {
        let b = scalene();
        let s = spherical_average(&b, 1e-6, 10, 0).unwrap();
        assert!((s.mean - b.volume()).abs() < 1e-6);
    }
}
