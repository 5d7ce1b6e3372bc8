//! Beta sampling via Marsaglia–Tsang gamma variates, and the Beta
//! log-density with its parameter gradient.

use rand::Rng;
use rand_distr::StandardNormal;

use super::special::{digamma, ln_beta};
use crate::error::{Error, Result};

/// `Gamma(shape, 1)` by Marsaglia and Tsang's squeeze method. Shapes below
/// one are boosted: `Gamma(a) = Gamma(a + 1) · U^(1/a)`.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let u: f64 = rng.random();
        return sample_gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// `X / (X + Y)` with `X ~ Gamma(alpha)`, `Y ~ Gamma(beta)`, kept strictly
/// inside `(0, 1)`.
pub fn sample_beta<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let x = sample_gamma(alpha, rng);
    let y = sample_gamma(beta, rng);
    let g = x / (x + y);
    if g.is_nan() {
        return 0.5;
    }
    g.clamp(f64::EPSILON, 1.0 - f64::EPSILON)
}

fn check(alpha: f64, beta: f64, g: f64) -> Result<()> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "Beta parameters must be positive, got ({alpha}, {beta})"
        )));
    }
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Beta log-density needs 0 < g < 1, got {g}"
        )));
    }
    Ok(())
}

/// `ln p(g | alpha, beta)`.
pub fn beta_log_prob(alpha: f64, beta: f64, g: f64) -> Result<f64> {
    check(alpha, beta, g)?;
    Ok((alpha - 1.0) * g.ln() + (beta - 1.0) * (1.0 - g).ln() - ln_beta(alpha, beta))
}

/// `(∂/∂alpha, ∂/∂beta)` of [`beta_log_prob`].
pub fn beta_log_prob_grad(alpha: f64, beta: f64, g: f64) -> Result<(f64, f64)> {
    check(alpha, beta, g)?;
    let common = digamma(alpha + beta);
    Ok((
        g.ln() - digamma(alpha) + common,
        (1.0 - g).ln() - digamma(beta) + common,
    ))
}

pub fn beta_mean(alpha: f64, beta: f64) -> f64 {
    alpha / (alpha + beta)
}

pub fn beta_variance(alpha: f64, beta: f64) -> f64 {
    let s = alpha + beta;
    alpha * beta / (s * s * (s + 1.0))
}
