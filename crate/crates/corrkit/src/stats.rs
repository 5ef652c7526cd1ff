//! Small statistics toolbox for the stochastic test harnesses: a
//! Kolmogorov-Smirnov goodness-of-fit test and a chi-square test with the
//! regularized incomplete gamma function behind it.

use crate::error::{CorrError, Result};

/// Two-sided KS statistic sup_x |F_n(x) - F(x)| against a model CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(CorrError::Invalid("no samples for the KS statistic".to_string()));
    }
    let mut sorted = samples.to_vec();
    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(CorrError::Invalid("non-finite sample in KS input".to_string()));
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) {
            return Err(CorrError::Domain(format!("model CDF returned {f} at {x}")));
        }
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// Asymptotic p-value for the KS statistic with Stephens' finite-sample
/// rescaling: lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) d, then the
/// Kolmogorov series Q(lambda) = 2 sum_j (-1)^{j-1} exp(-2 j^2 lambda^2).
pub fn ks_p_value(d: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(CorrError::Invalid("KS p-value needs n >= 1".to_string()));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(CorrError::Domain(format!("KS statistic {d} outside [0, 1]")));
    }
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    if lambda < 1e-9 {
        return Ok(1.0);
    }
    let mut sum = 0.0f64;
    let mut sign = 1.0f64;
    for j in 1..=100 {
        let term = sign * (-2.0 * (j as f64).powi(2) * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    Ok((2.0 * sum).clamp(0.0, 1.0))
}

/// Pearson chi-square statistic sum (O - E)^2 / E.
pub fn chi_square_statistic(observed: &[f64], expected: &[f64]) -> Result<f64> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(CorrError::Invalid(
            "observed and expected bins must match and be non-empty".to_string(),
        ));
    }
    let mut chi2 = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if !(e > 0.0) {
            return Err(CorrError::Domain(format!("expected bin count {e} must be > 0")));
        }
        chi2 += (o - e).powi(2) / e;
    }
    Ok(chi2)
}

/// Upper-tail p-value of the chi-square distribution,
/// Q(dof/2, chi2/2) = 1 - P(dof/2, chi2/2).
pub fn chi_square_p_value(chi2: f64, dof: usize) -> Result<f64> {
    if dof == 0 {
        return Err(CorrError::Invalid("chi-square needs dof >= 1".to_string()));
    }
    if !(chi2 >= 0.0) {
        return Err(CorrError::Domain(format!("chi-square statistic {chi2} must be >= 0")));
    }
    Ok(1.0 - regularized_gamma_p(dof as f64 / 2.0, chi2 / 2.0)?)
}

/// Lanczos approximation of ln Gamma(z) for z > 0 (g = 7, 9 terms).
pub fn ln_gamma(z: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if z < 0.5 {
        // reflection keeps the small-argument branch accurate
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// Regularized lower incomplete gamma P(a, x): series expansion below the
/// diagonal, Lentz continued fraction above it.
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(CorrError::Domain(format!(
            "regularized gamma needs a > 0 and x >= 0, got a = {a}, x = {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        for n in 1..10_000 {
            term *= x / (a + n as f64);
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                return Ok((log_prefactor.exp() * sum).clamp(0.0, 1.0));
            }
        }
        Err(CorrError::Domain("incomplete gamma series did not converge".to_string()))
    } else {
        // modified Lentz evaluation of the continued fraction for Q(a, x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                let q = log_prefactor.exp() * h;
                return Ok((1.0 - q).clamp(0.0, 1.0));
            }
        }
        Err(CorrError::Domain(
            "incomplete gamma continued fraction did not converge".to_string(),
        ))
    }
}
