use serde::{Deserialize, Serialize};

use super::special::{digamma, ln_beta, trigamma};
use crate::error::{Error, Result};

/// Samples are clamped into `[CLAMP, 1 - CLAMP]` before fitting.
pub const CLAMP: f64 = 1e-6;

const MAX_NEWTON: usize = 100;

/// How the shape parameters were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    MaximumLikelihood,
    /// Newton did not converge; method-of-moments estimate kept.
    Moments,
}

/// Fitted `Beta(alpha, beta)` density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub alpha: f64,
    pub beta: f64,
    pub samples: usize,
    /// Number of samples moved by clamping.
    pub clamped: usize,
    pub method: FitMethod,
}

impl BetaFit {
    /// A fit with given shapes, for evaluating densities directly.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("Beta shapes must be positive, got ({alpha}, {beta})")));
        }
        Ok(BetaFit { alpha, beta, samples: 0, clamped: 0, method: FitMethod::MaximumLikelihood })
    }

    /// Differential entropy in nats; see [`beta_entropy`].
    pub fn entropy(&self) -> f64 {
        beta_entropy(self.alpha, self.beta)
    }
}

/// Differential entropy of `Beta(a, b)` in nats.
pub fn beta_entropy(a: f64, b: f64) -> f64 {
    ln_beta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) + (a + b - 2.0) * digamma(a + b)
}

/// Maximum-likelihood Beta fit.
///
/// Starts from the method-of-moments estimate and runs Newton's method on
/// `psi(a) - psi(a+b) = mean ln x`, `psi(b) - psi(a+b) = mean ln(1-x)`.
pub fn fit_beta(samples: &[f64]) -> Result<BetaFit> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidData(format!("Beta fit needs at least 2 samples, got {n}")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "Beta fit samples".into() });
    }
    let mut clamped = 0;
    let (mut sum, mut sum_ln, mut sum_ln1m) = (0.0, 0.0, 0.0);
    let xs: Vec<f64> = samples
        .iter()
        .map(|&v| {
            let x = v.clamp(CLAMP, 1.0 - CLAMP);
            if x != v {
                clamped += 1;
            }
            sum += x;
            sum_ln += x.ln();
            sum_ln1m += (-x).ln_1p();
            x
        })
        .collect();
    let nf = n as f64;
    let mean = sum / nf;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    let spread = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if spread.0 == spread.1 || !(var > 0.0) {
        return Err(Error::Degenerate(format!("zero sample variance over {n} samples")));
    }
    let common = (mean * (1.0 - mean) / var - 1.0).max(1e-3);
    let (a0, b0) = (mean * common, (1.0 - mean) * common);
    let (s1, s2) = (sum_ln / nf, sum_ln1m / nf);

    let fit = |alpha, beta, method| BetaFit { alpha, beta, samples: n, clamped, method };
    match newton(a0, b0, s1, s2) {
        Some((a, b)) => Ok(fit(a, b, FitMethod::MaximumLikelihood)),
        None => Ok(fit(a0, b0, FitMethod::Moments)),
    }
}

fn newton(mut a: f64, mut b: f64, s1: f64, s2: f64) -> Option<(f64, f64)> {
    for _ in 0..MAX_NEWTON {
        let dab = digamma(a + b);
        let g1 = digamma(a) - dab - s1;
        let g2 = digamma(b) - dab - s2;
        let tab = trigamma(a + b);
        let (j11, j22, j12) = (trigamma(a) - tab, trigamma(b) - tab, -tab);
        let det = j11 * j22 - j12 * j12;
        if !(det.is_finite() && det != 0.0) {
            return None;
        }
        let da = (j22 * g1 - j12 * g2) / det;
        let db = (j11 * g2 - j12 * g1) / det;
        // Halve the step until both shapes stay positive.
        let mut t = 1.0;
        while a - t * da <= 0.0 || b - t * db <= 0.0 {
            t *= 0.5;
            if t < 1e-10 {
                return None;
            }
        }
        a -= t * da;
        b -= t * db;
        if !(a.is_finite() && b.is_finite()) {
            return None;
        }
        if (t * da).abs() <= 1e-12 * a && (t * db).abs() <= 1e-12 * b {
            return Some((a, b));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Beta, Distribution};

    /// `-int p ln p` for `p` proportional to `x^(a-1) (1-x)^(b-1)`, by
    /// double-exponential quadrature. The normalizer is integrated too.
    pub(crate) fn entropy_by_quadrature(a: f64, b: f64) -> f64 {
        let h = 1.0 / 128.0;
        let (mut z, mut zq) = (0.0, 0.0);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut u: f64 = -4.5;
        while u <= 4.5 {
            let s = half_pi * u.sinh();
            // ln x and ln(1-x) for x = (1 + tanh s) / 2, without cancellation.
            let ln_x = -(-2.0 * s).exp().ln_1p();
            let ln_1mx = -(2.0 * s).exp().ln_1p();
            let ln_q = (a - 1.0) * ln_x + (b - 1.0) * ln_1mx;
            let w = half_pi * u.cosh() / (2.0 * s.cosh().powi(2));
            let q = ln_q.exp();
            z += w * q;
            zq += w * q * ln_q;
            u += h;
        }
        z *= h;
        zq *= h;
        z.ln() - zq / z
    }

    #[test]
    fn uniform_entropy_is_zero() {
        assert!(beta_entropy(1.0, 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_two_two() {
        let e = beta_entropy(2.0, 2.0);
        assert!((e - (-0.125_092_802_55)).abs() < 1e-9, "{e}");
        assert!((entropy_by_quadrature(2.0, 2.0) - e).abs() < 1e-9);
        assert!(beta_entropy(5.0, 5.0) < e);
    }

    #[test]
    fn closed_form_matches_quadrature_on_grid() {
        let grid = [0.5, 1.0, 2.0, 5.0, 10.0];
        for a in grid {
            for b in grid {
                let (c, q) = (beta_entropy(a, b), entropy_by_quadrature(a, b));
                assert!((c - q).abs() < 1e-6, "({a}, {b}): {c} vs {q}");
            }
        }
    }

    #[test]
    fn recovers_beta_two_five() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let d = Beta::new(2.0, 5.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        let fit = fit_beta(&xs).unwrap();
        assert_eq!(fit.method, FitMethod::MaximumLikelihood);
        assert!((fit.alpha / 2.0 - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.beta / 5.0 - 1.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn grid_fits_near_uniform() {
        let xs: Vec<f64> = (0..10_001).map(|i| i as f64 / 10_000.0).collect();
        let fit = fit_beta(&xs).unwrap();
        assert!((fit.alpha - 1.0).abs() < 0.05 && (fit.beta - 1.0).abs() < 0.05, "{fit:?}");
        assert_eq!(fit.clamped, 2);
    }

    #[test]
    fn constant_samples_are_degenerate() {
        assert!(matches!(fit_beta(&[0.5; 10]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_beta(&[0.0; 10]), Err(Error::Degenerate(_))));
        assert!(fit_beta(&[0.5]).is_err());
    }

    #[test]
    fn ml_fit_solves_the_score_equations() {
        let xs = [0.1, 0.25, 0.3, 0.42, 0.5, 0.61, 0.7];
        let fit = fit_beta(&xs).unwrap();
        let s1 = xs.iter().map(|x| x.ln()).sum::<f64>() / 7.0;
        let s2 = xs.iter().map(|x| (1.0 - x).ln()).sum::<f64>() / 7.0;
        let d = digamma(fit.alpha + fit.beta);
        assert!((digamma(fit.alpha) - d - s1).abs() < 1e-10);
        assert!((digamma(fit.beta) - d - s2).abs() < 1e-10);
    }
}
