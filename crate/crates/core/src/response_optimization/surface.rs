//! One-dimensional polynomial response surfaces.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const TRAIN_FRACTION: f64 = 0.8;
pub const MAX_CONDITION: f64 = 1e12;
/// Auto-degree stops at the first degree whose validation R^2 gain is below
/// this.
pub const DEGREE_GAIN: f64 = 0.005;
pub const MAX_AUTO_DEGREE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitMetrics {
    pub train_r2: f64,
    pub validation_r2: f64,
    pub train_rmse: f64,
    pub validation_rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    /// Query outside the training domain.
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSurface {
    coefficients: Vec<f64>,
    domain: (f64, f64),
    metrics: Option<FitMetrics>,
    train: Vec<usize>,
    validation: Vec<usize>,
}

/// Horner evaluation of `sum_k c_k x^k`.
pub fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn r2_rmse(y: &[f64], pred: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    (r2, (ss_res / n).sqrt())
}

/// Seeded random split into `round(fraction * n)` training and the remaining
/// validation indices, each sorted.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (fraction * n as f64).round() as usize;
    let (mut train, mut val) = (idx[..n_train].to_vec(), idx[n_train..].to_vec());
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

impl ResponseSurface {
    /// Polynomial with raw monomial coefficients (constant first).
    pub fn from_coefficients(coefficients: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Fit { reason: "coefficients must be finite and non-empty".into(), condition: None });
        }
        if !(domain.0.is_finite() && domain.1.is_finite() && domain.0 <= domain.1) {
            return Err(Error::Config(format!("invalid domain [{}, {}]", domain.0, domain.1)));
        }
        Ok(Self { coefficients, domain, metrics: None, train: Vec::new(), validation: Vec::new() })
    }

    /// Restricts the trusted domain, e.g. to the intersection with another
    /// surface's.
    pub fn with_domain(mut self, domain: (f64, f64)) -> Result<Self> {
        if !(domain.0.is_finite() && domain.1.is_finite() && domain.0 <= domain.1) {
            return Err(Error::Config(format!("invalid domain [{}, {}]", domain.0, domain.1)));
        }
        self.domain = domain;
        Ok(self)
    }

    /// Least-squares fit on a seeded 80 % subset; metrics on the rest.
    pub fn fit(x: &[f64], y: &[f64], degree: usize, split_seed: u64) -> Result<Self> {
        Self::fit_split(x, y, degree, split_seed, TRAIN_FRACTION)
    }

    /// [`fit`](Self::fit) with a custom training fraction in `(0, 1)`.
    pub fn fit_split(x: &[f64], y: &[f64], degree: usize, split_seed: u64, train_fraction: f64) -> Result<Self> {
        let n = x.len();
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!("training fraction {train_fraction} outside (0, 1)")));
        }
        if y.len() != n {
            return Err(Error::Shape { expected: n, found: y.len() });
        }
        if degree < 1 {
            return Err(Error::Config("polynomial degree must be at least 1".into()));
        }
        if n < 5 * (degree + 1) {
            return Err(Error::Config(format!("degree {degree} needs at least {} samples, got {n}", 5 * (degree + 1))));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite response data".into()));
        }
        let (train, validation) = split_indices(n, train_fraction, split_seed);
        let v = DMatrix::from_fn(train.len(), degree + 1, |i, k| x[train[i]].powi(k as i32));
        let svd = v.svd(true, true);
        let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::Fit {
                reason: format!("Vandermonde matrix ill-conditioned at degree {degree}; try a lower degree"),
                condition: Some(condition),
            });
        }
        let rhs = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
        let coef =
            svd.solve(&rhs, 0.0).map_err(|e| Error::Fit { reason: e.to_string(), condition: Some(condition) })?;
        let coefficients: Vec<f64> = coef.iter().copied().collect();
        let lo = train.iter().map(|&i| x[i]).fold(f64::INFINITY, f64::min);
        let hi = train.iter().map(|&i| x[i]).fold(f64::NEG_INFINITY, f64::max);
        let eval = |idx: &[usize]| -> (Vec<f64>, Vec<f64>) {
            (idx.iter().map(|&i| y[i]).collect(), idx.iter().map(|&i| horner(&coefficients, x[i])).collect())
        };
        let (yt, pt) = eval(&train);
        let (yv, pv) = eval(&validation);
        let (train_r2, train_rmse) = r2_rmse(&yt, &pt);
        let (validation_r2, validation_rmse) = r2_rmse(&yv, &pv);
        Ok(Self {
            coefficients,
            domain: (lo, hi),
            metrics: Some(FitMetrics { train_r2, validation_r2, train_rmse, validation_rmse }),
            train,
            validation,
        })
    }

    /// Smallest degree whose validation R^2 gain over the previous degree is
    /// below [`DEGREE_GAIN`], capped at [`MAX_AUTO_DEGREE`] and by the sample
    /// count.
    pub fn fit_auto(x: &[f64], y: &[f64], split_seed: u64, train_fraction: f64) -> Result<Self> {
        let cap = MAX_AUTO_DEGREE.min((x.len() / 5).saturating_sub(1));
        let mut prev = Self::fit_split(x, y, 1, split_seed, train_fraction)?;
        for degree in 2..=cap {
            let next = match Self::fit_split(x, y, degree, split_seed, train_fraction) {
                Ok(s) => s,
                Err(Error::Fit { .. }) => return Ok(prev),
                Err(e) => return Err(e),
            };
            let gain = next.metrics().validation_r2 - prev.metrics().validation_r2;
            if gain < DEGREE_GAIN {
                return Ok(next);
            }
            prev = next;
        }
        Ok(prev)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Fit metrics; all ones for surfaces built from coefficients.
    pub fn metrics(&self) -> FitMetrics {
        self.metrics.unwrap_or(FitMetrics { train_r2: 1.0, validation_r2: 1.0, train_rmse: 0.0, validation_rmse: 0.0 })
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn validation_indices(&self) -> &[usize] {
        &self.validation
    }

    pub fn value(&self, x: f64) -> f64 {
        horner(&self.coefficients, x)
    }

    pub fn predict(&self, x: f64) -> Prediction {
        Prediction { value: self.value(x), extrapolated: x < self.domain.0 || x > self.domain.1 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn exact_parabola() {
        let x: Vec<f64> = (0..60).map(|i| -2.0 + i as f64 / 15.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.5 * v * v - 0.3 * v + 2.0).collect();
        let s = ResponseSurface::fit(&x, &y, 2, 1).unwrap();
        assert!((s.metrics().validation_r2 - 1.0).abs() < 1e-10);
        assert!((s.coefficients()[2] - 1.5).abs() < 1e-10);
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let (t, v) = split_indices(1100, TRAIN_FRACTION, 42);
        assert_eq!((t.len(), v.len()), (880, 220));
        let mut all: Vec<usize> = t.iter().chain(&v).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1100).collect::<Vec<_>>());
        assert_eq!(split_indices(1100, TRAIN_FRACTION, 42), (t.clone(), v));
        assert_ne!(split_indices(1100, TRAIN_FRACTION, 43).0, t);
    }

    #[test]
    fn noisy_quartic_ridge() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..1100).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let truth = |t: f64| 0.5 * t.powi(4) - t * t + 0.2 * t + 1.0;
        let y: Vec<f64> = x.iter().map(|&t| truth(t) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))).collect();
        let s = ResponseSurface::fit(&x, &y, 4, 7).unwrap();
        assert!(s.metrics().validation_r2 >= 0.99, "{:?}", s.metrics());
    }

    #[test]
    fn training_residual_nonincreasing_in_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let y: Vec<f64> = x.iter().map(|&t| (2.0 * t).sin() + 0.05 * rng.gen_range(-1.0..1.0)).collect();
        let mut last = f64::INFINITY;
        for d in 1..=8 {
            let rmse = ResponseSurface::fit(&x, &y, d, 9).unwrap().metrics().train_rmse;
            assert!(rmse <= last + 1e-12, "degree {d}");
            last = rmse;
        }
    }

    #[test]
    fn prediction_and_horner() {
        let id = ResponseSurface::from_coefficients(vec![0.0, 1.0], (-1.0, 1.0)).unwrap();
        assert_eq!(id.predict(0.3), Prediction { value: 0.3, extrapolated: false });
        assert!(id.predict(1.5).extrapolated);
        let c = ResponseSurface::from_coefficients(vec![2.5], (0.0, 1.0)).unwrap();
        assert_eq!(c.value(-40.0), 2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coef: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let naive: f64 = coef.iter().enumerate().map(|(k, c)| c * x.powi(k as i32)).sum();
            assert!((horner(&coef, x) - naive).abs() < 1e-13);
        }
    }

    #[test]
    fn fit_errors() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(matches!(ResponseSurface::fit(&x, &x, 4, 0), Err(Error::Config(_))));
        let big: Vec<f64> = (0..200).map(|i| 1e3 + i as f64).collect();
        assert!(matches!(ResponseSurface::fit(&big, &big, 6, 0), Err(Error::Fit { condition: Some(_), .. })));
        assert!(ResponseSurface::fit(&x, &x, 0, 0).is_err());
    }

    #[test]
    fn auto_degree_on_cubic_data() {
        let x: Vec<f64> = (0..300).map(|i| -1.0 + i as f64 / 150.0).collect();
        let y: Vec<f64> = x.iter().map(|&t| t * t * t + 0.5 * t * t - t + 0.2).collect();
        let s = ResponseSurface::fit_auto(&x, &y, 2, TRAIN_FRACTION).unwrap();
        // Degree 3 is exact, so degree 4 is the first without a gain.
        assert_eq!(s.degree(), 4);
    }
}
