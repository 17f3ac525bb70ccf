//! Beta and gamma distribution helpers, the chi-squared quantile and a
//! Kolmogorov–Smirnov goodness-of-fit check.
//!
//! The incomplete beta and gamma functions come from `statrs`.

use statrs::function::{beta, gamma};

use crate::error::{OclustError, Result};

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// Beta(a, b) density on [0, 1]; zero outside.
pub fn beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    if x == 0.0 {
        return match a.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => (-ln_beta(a, b)).exp(),
            _ => 0.0,
        };
    }
    if x == 1.0 {
        return match b.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => (-ln_beta(a, b)).exp(),
            _ => 0.0,
        };
    }
    ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)).exp()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`, clamped to the unit interval.
pub fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta::beta_reg(a, b, x)
    }
}

/// Gamma density with shape `k` and scale `theta`; zero for `w <= 0`.
pub fn gamma_pdf(w: f64, k: f64, theta: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    ((k - 1.0) * w.ln() - w / theta - ln_gamma(k) - k * theta.ln()).exp()
}

pub fn gamma_cdf(w: f64, k: f64, theta: f64) -> f64 {
    if w <= 0.0 {
        0.0
    } else {
        gamma::gamma_lr(k, w / theta)
    }
}

/// Upper-tail critical value `χ²_{dof, prob}` (the `prob` quantile), by bisection on the
/// regularized lower incomplete gamma function.
pub fn chi_squared_quantile(dof: usize, prob: f64) -> Result<f64> {
    if dof == 0 || !(prob > 0.0 && prob < 1.0) {
        return Err(OclustError::InvalidArgument(format!(
            "chi-squared quantile needs dof >= 1 and prob in (0,1), got {dof}, {prob}"
        )));
    }
    let k = dof as f64 / 2.0;
    let cdf = |x: f64| gamma::gamma_lr(k, x / 2.0);
    let mut hi = dof as f64 + 10.0;
    while cdf(hi) < prob {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(OclustError::Inversion(prob));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two-sided one-sample Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        let lo = f - i as f64 / n;
        let hi = (i + 1) as f64 / n - f;
        d.max(lo).max(hi)
    })
}

/// Asymptotic p-value of the KS statistic `d` for sample size `n`, with Stephens'
/// small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_squared_quantiles() {
        // dof = 2 has the closed form -2 ln(1 - prob).
        let q = chi_squared_quantile(2, 0.995).unwrap();
        assert!((q - (-2.0 * 0.005f64.ln())).abs() < 1e-9);
        assert!((q - 10.5966).abs() < 1e-4);
        // Tabulated values.
        assert!((chi_squared_quantile(1, 0.95).unwrap() - 3.841_458_820_694_124).abs() < 1e-9);
        assert!((chi_squared_quantile(6, 0.995).unwrap() - 18.547_584_178_511_087).abs() < 1e-8);
        assert!(chi_squared_quantile(0, 0.5).is_err());
        assert!(chi_squared_quantile(2, 1.0).is_err());
    }

    #[test]
    fn beta_helpers() {
        assert!((beta_pdf(0.3, 1.0, 1.0) - 1.0).abs() < 1e-12);
        assert!((beta_pdf(0.5, 2.0, 2.0) - 1.5).abs() < 1e-12);
        assert_eq!(beta_pdf(1.5, 2.0, 2.0), 0.0);
        assert!((beta_pdf(0.0, 1.0, 3.0) - 3.0).abs() < 1e-12);
        assert!((beta_cdf(0.5, 3.0, 3.0) - 0.5).abs() < 1e-12);
        assert!((beta_cdf(0.25, 1.0, 1.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn gamma_helpers() {
        assert!((gamma_pdf(1.0, 1.0, 1.0) - (-1.0f64).exp()).abs() < 1e-12);
        assert!((gamma_cdf(2.0, 1.0, 1.0) - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
        assert_eq!(gamma_pdf(-1.0, 2.0, 1.0), 0.0);
    }

    #[test]
    fn ks_on_uniform_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&xs, |x| x);
        assert!((d - 0.005).abs() < 1e-12);
        assert!(ks_pvalue(d, 100) > 0.99);
        assert!(ks_pvalue(0.3, 100) < 1e-6);
    }
}
