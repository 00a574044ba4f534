//! Geometric star discrepancy, Halton and Hammersley point sets, and
//! quasi-Monte Carlo integration with the Koksma–Hlawka bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of candidate corners `(n + 1)^d` evaluated by [`star_discrepancy`].
pub const STAR_BUDGET: u128 = 1 << 27;

/// `sup_x |#(P ∩ [0, x]) - n·vol([0, x])|` with a witness corner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoDiscReport {
    pub n: usize,
    pub value: f64,
    pub witness: Vec<f64>,
    /// The sup is attained as `x` increases to the witness (half-open box).
    pub from_below: bool,
}

impl GeoDiscReport {
    pub fn normalized(&self) -> f64 {
        if self.n == 0 { 0.0 } else { self.value / self.n as f64 }
    }
}

/// `|count - n·vol|` for the closed box `[0, x]`, or its limit from below.
pub fn evaluate_corner(points: &[Vec<f64>], x: &[f64], from_below: bool) -> f64 {
    let count = points
        .iter()
        .filter(|p| p.iter().zip(x).all(|(a, b)| if from_below { a < b } else { a <= b }))
        .count();
    let vol: f64 = x.iter().product();
    (count as f64 - points.len() as f64 * vol).abs()
}

/// Exact star discrepancy (`d <= 3`).
///
/// Counts are step functions, so the excess is maximized at closed corners
/// on the coordinate grid and the deficit at limits from below on the grid
/// extended by 1.
pub fn star_discrepancy(points: &[Vec<f64>]) -> Result<GeoDiscReport> {
    let n = points.len();
    let d = points.first().map(Vec::len).unwrap_or(0);
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidInput("points must share one dimension".into()));
    }
    if points.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidInput("points must lie in [0,1]^d".into()));
    }
    if n == 0 || d == 0 {
        return Ok(GeoDiscReport { n, value: 0.0, witness: vec![1.0; d], from_below: false });
    }
    if d > 3 {
        return Err(Error::UnsupportedDimension { what: "star discrepancy", dim: d, max: 3 });
    }
    let needed = (n as u128 + 1).pow(d as u32);
    if needed > STAR_BUDGET {
        return Err(Error::BudgetExceeded { what: "star discrepancy corners", needed, budget: STAR_BUDGET });
    }
    let grids: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut g: Vec<f64> = points.iter().map(|p| p[i]).collect();
            g.push(1.0);
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        })
        .collect();
    let mut search = Search { points, grids: &grids, d, best: (f64::NEG_INFINITY, vec![1.0; d], false), x: vec![0.0; d] };
    let all: Vec<usize> = (0..n).collect();
    search.descend(0, &all, &all, 1.0);
    let (value, witness, from_below) = search.best;
    Ok(GeoDiscReport { n, value, witness, from_below })
}

struct Search<'a> {
    points: &'a [Vec<f64>],
    grids: &'a [Vec<f64>],
    d: usize,
    best: (f64, Vec<f64>, bool),
    x: Vec<f64>,
}

impl Search<'_> {
    /// `closed` holds points with `p_i <= x_i`, `open` those with `p_i < x_i`, for the dims fixed so far.
    fn descend(&mut self, depth: usize, closed: &[usize], open: &[usize], vol: f64) {
        let n = self.points.len() as f64;
        if depth + 1 == self.d {
            let mut c: Vec<f64> = closed.iter().map(|&j| self.points[j][depth]).collect();
            let mut o: Vec<f64> = open.iter().map(|&j| self.points[j][depth]).collect();
            c.sort_by(f64::total_cmp);
            o.sort_by(f64::total_cmp);
            let (mut ci, mut oi) = (0, 0);
            for &y in &self.grids[depth] {
                while ci < c.len() && c[ci] <= y {
                    ci += 1;
                }
                while oi < o.len() && o[oi] < y {
                    oi += 1;
                }
                let v = vol * y;
                let over = ci as f64 - n * v;
                let under = n * v - oi as f64;
                for (val, below) in [(over, false), (under, true)] {
                    if val > self.best.0 {
                        self.x[depth] = y;
                        self.best = (val, self.x.clone(), below);
                    }
                }
            }
            return;
        }
        for &y in &self.grids[depth] {
            let c: Vec<usize> = closed.iter().copied().filter(|&j| self.points[j][depth] <= y).collect();
            let o: Vec<usize> = open.iter().copied().filter(|&j| self.points[j][depth] < y).collect();
            self.x[depth] = y;
            self.descend(depth + 1, &c, &o, vol * y);
        }
    }
}

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// Digit reversal of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let mut inv = 0.0;
    let mut scale = 1.0 / b as f64;
    while i > 0 {
        inv += (i % b) as f64 * scale;
        i /= b;
        scale /= b as f64;
    }
    inv
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowDiscrepancy {
    /// `(φ_2(i), φ_3(i), ...)` for `i = 0..n`.
    Halton,
    /// `(i/n, φ_2(i), ...)`.
    Hammersley,
}

/// Halton or Hammersley points in `[0, 1)^d` (`d <= 6`).
pub fn halton_hammersley(n: usize, d: usize, kind: LowDiscrepancy) -> Result<Vec<Vec<f64>>> {
    if d == 0 || d > PRIMES.len() {
        return Err(Error::UnsupportedDimension { what: "low-discrepancy construction", dim: d, max: PRIMES.len() });
    }
    Ok((0..n as u64)
        .map(|i| match kind {
            LowDiscrepancy::Halton => PRIMES[..d].iter().map(|&b| radical_inverse(i, b)).collect(),
            LowDiscrepancy::Hammersley => std::iter::once(i as f64 / n as f64)
                .chain(PRIMES[..d - 1].iter().map(|&b| radical_inverse(i, b)))
                .collect(),
        })
        .collect())
}

/// One-dimensional factor with known integral and variation on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Factor {
    /// `x^k`, `k >= 1`.
    Power(u32),
    /// `e^{a x}`.
    Exp(f64),
    /// `cos(2πkx)`, `k >= 1`.
    Cosine(u32),
}

impl Factor {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Factor::Power(k) => x.powi(k as i32),
            Factor::Exp(a) => (a * x).exp(),
            Factor::Cosine(k) => (2.0 * std::f64::consts::PI * f64::from(k) * x).cos(),
        }
    }

    pub fn integral(&self) -> f64 {
        match *self {
            Factor::Power(k) => 1.0 / f64::from(k + 1),
            Factor::Exp(0.0) => 1.0,
            Factor::Exp(a) => a.exp_m1() / a,
            Factor::Cosine(_) => 0.0,
        }
    }

    pub fn variation(&self) -> f64 {
        match *self {
            Factor::Power(_) => 1.0,
            Factor::Exp(a) => a.exp_m1().abs(),
            Factor::Cosine(k) => 4.0 * f64::from(k),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Factor::Power(0) | Factor::Cosine(0) => Err(Error::InvalidInput(format!("degenerate factor {self:?}"))),
            Factor::Exp(a) if !a.is_finite() => Err(Error::InvalidInput("exponent must be finite".into())),
            _ => Ok(()),
        }
    }
}

/// `scale · Π g_i(x_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub scale: f64,
    pub factors: Vec<Factor>,
}

impl TestFunction {
    pub fn constant(c: f64, d: usize) -> Self {
        TestFunction { scale: c, factors: vec![Factor::Exp(0.0); d] }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.scale * self.factors.iter().zip(x).map(|(g, &t)| g.eval(t)).product::<f64>()
    }

    pub fn integral(&self) -> f64 {
        self.scale * self.factors.iter().map(Factor::integral).product::<f64>()
    }

    /// Hardy–Krause variation anchored at 1: `|scale| (Π(|g_i(1)| + V(g_i)) - Π|g_i(1)|)`.
    pub fn hardy_krause(&self) -> f64 {
        let with: f64 = self.factors.iter().map(|g| g.eval(1.0).abs() + g.variation()).product();
        let without: f64 = self.factors.iter().map(|g| g.eval(1.0).abs()).product();
        self.scale.abs() * (with - without)
    }

    /// Parses `const:c`, `prod`, `power:k`, `exp:a` or `cos:k` (applied in every coordinate).
    pub fn parse(spec: &str, d: usize) -> Result<Self> {
        let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
        let num = |default: f64| -> Result<f64> {
            if arg.is_empty() { Ok(default) } else { arg.parse().map_err(|_| Error::InvalidInput(format!("bad argument in {spec}"))) }
        };
        let factor = match name {
            "const" => return Ok(TestFunction::constant(num(1.0)?, d)),
            "prod" => Factor::Power(1),
            "power" => Factor::Power(num(2.0)? as u32),
            "exp" => Factor::Exp(num(1.0)?),
            "cos" => Factor::Cosine(num(1.0)? as u32),
            _ => return Err(Error::InvalidInput(format!("unknown test function {spec}"))),
        };
        factor.validate()?;
        Ok(TestFunction { scale: 1.0, factors: vec![factor; d] })
    }
}

/// The built-in test functions in dimension `d`.
pub fn builtin_test_functions(d: usize) -> Vec<TestFunction> {
    let mixed = (0..d)
        .map(|i| match i % 3 {
            0 => Factor::Exp(0.5),
            1 => Factor::Power(2),
            _ => Factor::Cosine(1),
        })
        .collect();
    vec![
        TestFunction::constant(1.0, d),
        TestFunction { scale: 1.0, factors: vec![Factor::Power(1); d] },
        TestFunction { scale: 1.0, factors: vec![Factor::Power(3); d] },
        TestFunction { scale: 1.0, factors: vec![Factor::Exp(1.0); d] },
        TestFunction { scale: 1.0, factors: vec![Factor::Cosine(1); d] },
        TestFunction { scale: 1.0, factors: mixed },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QmcReport {
    pub estimate: f64,
    pub truth: f64,
    pub error: f64,
    pub variation: f64,
    pub star_discrepancy: f64,
    /// `V(f) · D / n`.
    pub koksma_bound: f64,
}

impl QmcReport {
    pub fn bound_holds(&self) -> bool {
        self.error <= self.koksma_bound * (1.0 + 1e-12) + 1e-15
    }
}

/// Equal-weight cubature of `f` over `points` with the Koksma–Hlawka bound.
pub fn qmc_integrate(f: &TestFunction, points: &[Vec<f64>]) -> Result<QmcReport> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no points".into()));
    }
    if points.iter().any(|p| p.len() != f.dim()) {
        return Err(Error::DimensionMismatch("test function vs points".into()));
    }
    for g in &f.factors {
        g.validate()?;
    }
    let n = points.len() as f64;
    let estimate = points.iter().map(|p| f.eval(p)).sum::<f64>() / n;
    let truth = f.integral();
    let disc = star_discrepancy(points)?;
    let variation = f.hardy_krause();
    Ok(QmcReport {
        estimate,
        truth,
        error: (estimate - truth).abs(),
        variation,
        star_discrepancy: disc.value,
        koksma_bound: variation * disc.value / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(points: &[Vec<f64>]) -> f64 {
        let d = points[0].len();
        let mut grid: Vec<f64> = points.iter().flatten().copied().chain([1.0]).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut best = 0.0f64;
        let total = grid.len().pow(d as u32);
        for k in 0..total {
            let x: Vec<f64> = (0..d).map(|i| grid[k / grid.len().pow(i as u32) % grid.len()]).collect();
            best = best.max(evaluate_corner(points, &x, false)).max(evaluate_corner(points, &x, true));
        }
        best
    }

    #[test]
    fn one_dimensional_examples() {
        assert_eq!(star_discrepancy(&[vec![0.5]]).unwrap().value, 0.5);
        let r = star_discrepancy(&[vec![0.0]]).unwrap();
        assert_eq!((r.value, r.witness.clone(), r.from_below), (1.0, vec![0.0], false));
        for n in [1, 2, 7, 64] {
            let pts: Vec<Vec<f64>> = (1..=n).map(|i| vec![(2 * i - 1) as f64 / (2 * n) as f64]).collect();
            assert!((star_discrepancy(&pts).unwrap().value - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_brute_force_and_witness() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in 1..=3 {
            for _ in 0..5 {
                let pts: Vec<Vec<f64>> = (0..9).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
                let r = star_discrepancy(&pts).unwrap();
                assert!((r.value - brute_force(&pts)).abs() < 1e-12);
                assert_eq!(evaluate_corner(&pts, &r.witness, r.from_below), r.value);
            }
        }
    }

    #[test]
    fn radical_inverse_and_sets() {
        let v: Vec<f64> = (0..4).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(v, vec![0.0, 0.5, 0.25, 0.75]);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
        for kind in [LowDiscrepancy::Halton, LowDiscrepancy::Hammersley] {
            let pts = halton_hammersley(100, 6, kind).unwrap();
            assert!(pts.iter().flatten().all(|x| (0.0..1.0).contains(x)));
        }
        let h = halton_hammersley(16, 2, LowDiscrepancy::Halton).unwrap();
        assert!(star_discrepancy(&h).unwrap().value <= 10.0 * 5.0);
        assert!(halton_hammersley(4, 7, LowDiscrepancy::Halton).is_err());
    }

    #[test]
    fn koksma_examples() {
        let h = halton_hammersley(64, 2, LowDiscrepancy::Halton).unwrap();
        let c = qmc_integrate(&TestFunction::constant(3.0, 2), &h).unwrap();
        assert!(c.error < 1e-15 && c.variation == 0.0);
        let prod = qmc_integrate(&TestFunction::parse("prod", 2).unwrap(), &h).unwrap();
        assert_eq!(prod.truth, 0.25);
        assert_eq!(prod.variation, 3.0);
        assert!(prod.bound_holds());
        for f in builtin_test_functions(2) {
            assert!(qmc_integrate(&f, &h).unwrap().bound_holds(), "{f:?}");
        }
        assert!(TestFunction::parse("sin", 2).is_err());
    }

    #[test]
    fn errors_shrink_with_more_points() {
        let mut total = 0;
        let mut shrunk = 0;
        for f in builtin_test_functions(2).into_iter().skip(1) {
            for n in [16, 64, 256] {
                let a = qmc_integrate(&f, &halton_hammersley(n, 2, LowDiscrepancy::Halton).unwrap()).unwrap();
                let b = qmc_integrate(&f, &halton_hammersley(4 * n, 2, LowDiscrepancy::Halton).unwrap()).unwrap();
                total += 1;
                shrunk += usize::from(b.error <= a.error);
            }
        }
        assert!(shrunk * 10 >= total * 9, "{shrunk}/{total}");
    }
}
