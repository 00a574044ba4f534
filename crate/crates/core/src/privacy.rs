//! Gaussian factorization mechanism for private range counting.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma2::Factorization;

/// Which histograms count as neighbors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Neighboring {
    /// One point added or removed: sensitivity `‖V‖_{1→2}`.
    #[default]
    AddRemove,
    /// One point moved: sensitivity `√2 ‖V‖_{1→2}`.
    Replace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub sigma: f64,
    pub neighboring: Neighboring,
}

/// `σ = s·‖V‖_{1→2}·sqrt(2 ln(1.25/δ))/ε` with `s = 1`, or `√2` for [`Neighboring::Replace`].
pub fn calibrate_noise(epsilon: f64, delta: f64, v_norm: f64, neighboring: Neighboring) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite() && delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidPrivacy { epsilon, delta });
    }
    let s = match neighboring {
        Neighboring::AddRemove => 1.0,
        Neighboring::Replace => std::f64::consts::SQRT_2,
    };
    Ok(s * v_norm * (2.0 * (1.25 / delta).ln()).sqrt() / epsilon)
}

impl MechanismConfig {
    pub fn new(epsilon: f64, delta: f64, f: &Factorization, neighboring: Neighboring) -> Result<Self> {
        let sigma = calibrate_noise(epsilon, delta, f.v.max_col_norm(), neighboring)?;
        Ok(MechanismConfig { epsilon, delta, sigma, neighboring })
    }
}

/// `U(Vh + z)` with `z ~ N(0, σ²)` per coordinate of `Vh`.
pub fn private_answers(config: &MechanismConfig, f: &Factorization, h: &[u64], seed: u64) -> Result<Vec<f64>> {
    if h.len() != f.v.ncols() {
        return Err(Error::DimensionMismatch(format!("histogram of length {} for {} points", h.len(), f.v.ncols())));
    }
    let hist: Vec<f64> = h.iter().map(|&x| x as f64).collect();
    let mut y = f.v.mul_vec(&hist);
    if config.sigma > 0.0 {
        let normal = Normal::new(0.0, config.sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in y.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(f.u.mul_vec(&y))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub epsilon: f64,
    pub delta: f64,
    pub sigma: f64,
    /// Mean over trials of the largest absolute error.
    pub empirical: f64,
    pub per_trial: Vec<f64>,
    /// `‖U‖_{2→∞} σ sqrt(2 ln(2m))`.
    pub upper: f64,
    /// Fraction of trials whose error stayed below `upper`.
    pub within_upper: f64,
    /// `γ₂lower / (ε ln m)`, known only up to a constant.
    pub floor: f64,
    /// `empirical / floor`: the constant the floor would need.
    pub fitted_constant: f64,
}

/// Runs the mechanism `trials` times on the all-ones histogram (trial `t` uses seed `seed + t`).
pub fn error_bracket(
    f: &Factorization,
    gamma2_lower: f64,
    epsilon: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<ErrorReport> {
    let config = MechanismConfig::new(epsilon, delta, f, Neighboring::default())?;
    let h = vec![1u64; f.v.ncols()];
    let exact = private_answers(&MechanismConfig { sigma: 0.0, ..config.clone() }, f, &h, 0)?;
    let m = exact.len().max(1) as f64;
    let upper = f.u.max_row_norm() * config.sigma * (2.0 * (2.0 * m).ln()).sqrt();
    let mut per_trial = Vec::with_capacity(trials);
    for t in 0..trials {
        let noisy = private_answers(&config, f, &h, seed.wrapping_add(t as u64))?;
        per_trial.push(noisy.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let empirical = per_trial.iter().sum::<f64>() / trials.max(1) as f64;
    let within_upper = per_trial.iter().filter(|&&e| e <= upper).count() as f64 / trials.max(1) as f64;
    let floor = if m > 1.0 { gamma2_lower / (epsilon * m.ln()) } else { gamma2_lower / epsilon };
    Ok(ErrorReport {
        epsilon,
        delta,
        sigma: config.sigma,
        empirical,
        per_trial,
        upper,
        within_upper,
        floor,
        fitted_constant: if floor > 0.0 { empirical / floor } else { f64::NAN },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma2::dyadic_factorization;
    use crate::linalg::SparseMatrix;

    #[test]
    fn calibration_examples() {
        let s = calibrate_noise(1.0, 1e-6, 1.0, Neighboring::AddRemove).unwrap();
        assert!((s - (2.0 * 1.25e6f64.ln()).sqrt()).abs() < 1e-12);
        assert!((s - 5.299).abs() < 1e-3);
        assert!((calibrate_noise(2.0, 1e-6, 1.0, Neighboring::AddRemove).unwrap() - s / 2.0).abs() < 1e-12);
        assert!((calibrate_noise(1.0, 1e-6, 3.0, Neighboring::AddRemove).unwrap() - 3.0 * s).abs() < 1e-12);
        let r = calibrate_noise(1.0, 1e-6, 1.0, Neighboring::Replace).unwrap();
        assert!((r - std::f64::consts::SQRT_2 * s).abs() < 1e-12);
        for (e, d) in [(0.0, 1e-6), (-1.0, 1e-6), (1.0, 0.0), (1.0, 1.0)] {
            assert!(calibrate_noise(e, d, 1.0, Neighboring::AddRemove).is_err());
        }
    }

    #[test]
    fn zero_noise_is_exact_and_seeds_reproduce() {
        let pts: Vec<Vec<f64>> = (0..16).map(|k| vec![(k % 4) as f64, (k / 4) as f64]).collect();
        let f = dyadic_factorization(&pts).unwrap();
        let h: Vec<u64> = (0..16).map(|k| k % 3).collect();
        let exact = f.product().mul_vec(&h.iter().map(|&x| x as f64).collect::<Vec<_>>());
        let mut c = MechanismConfig::new(1.0, 1e-6, &f, Neighboring::AddRemove).unwrap();
        assert_eq!(private_answers(&c, &f, &h, 3).unwrap(), private_answers(&c, &f, &h, 3).unwrap());
        c.sigma = 0.0;
        assert_eq!(private_answers(&c, &f, &h, 3).unwrap(), exact);
    }

    #[test]
    fn neighbors_move_within_sensitivity() {
        let pts: Vec<Vec<f64>> = (0..16).map(|k| vec![(k * 5 % 16) as f64, k as f64]).collect();
        let f = dyadic_factorization(&pts).unwrap();
        let bound = std::f64::consts::SQRT_2 * f.v.max_col_norm();
        for (a, b) in [(0, 1), (3, 9), (15, 2)] {
            let mut diff = vec![0.0; 16];
            diff[a] = 1.0;
            diff[b] = -1.0;
            let moved = f.v.mul_vec(&diff);
            assert!(moved.iter().map(|x| x * x).sum::<f64>().sqrt() <= bound + 1e-12);
        }
    }

    #[test]
    fn single_range_error_is_gaussian() {
        let f = Factorization::left_identity(&SparseMatrix::identity(1));
        let r = error_bracket(&f, 1.0, 1.0, 1e-6, 4000, 0).unwrap();
        // E|N(0, σ²)| = σ sqrt(2/π)
        let expect = r.sigma * (2.0 / std::f64::consts::PI).sqrt();
        assert!((r.empirical - expect).abs() < 0.05 * expect);
    }

    #[test]
    fn doubling_epsilon_halves_error() {
        let pts: Vec<Vec<f64>> = (0..64).map(|k| vec![(k % 8) as f64, (k / 8) as f64]).collect();
        let f = dyadic_factorization(&pts).unwrap();
        let a = error_bracket(&f, 1.0, 1.0, 1e-6, 20, 7).unwrap();
        let b = error_bracket(&f, 1.0, 2.0, 1e-6, 20, 7).unwrap();
        assert!((a.empirical / b.empirical - 2.0).abs() < 1e-9);
        assert!(a.within_upper >= 0.95);
    }
}
