//! Shape-parameter policies and closed-form predictors for the 1D Gaussian case.
//!
//! The predictors return the bracketed expressions of the error bounds without
//! their unspecified multiplicative constants. Read them as order-of-magnitude
//! guides, not as exact error values.
//!
//! Notation: `T` is the extension half-width (centers live in `[-T, T]`), `B` the
//! radius of the domain, `τ` the regularization threshold and `N` the half-count
//! of the `2N + 1` equispaced centers. `log` is the natural logarithm.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Rule mapping the basis size `N` to the shape parameter `ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalingPolicy {
    /// `ε = ε₀`
    Constant { epsilon: f64 },
    /// `ε = c N^α` with `0 < α < 1`
    Power { c: f64, alpha: f64 },
    /// `ε = c N`
    Linear { c: f64 },
    /// `ε = c* N` with `c* = optimal_c(T, τ)`
    LinearOptimal { extension: f64, tau: f64 },
}

impl ScalingPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalingPolicy::Constant { epsilon } => positive("epsilon", epsilon),
            ScalingPolicy::Power { c, alpha } => {
                positive("c", c)?;
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(invalid(format!("power scaling needs 0 < alpha < 1, got {alpha}")));
                }
                Ok(())
            }
            ScalingPolicy::Linear { c } => positive("c", c),
            ScalingPolicy::LinearOptimal { extension, tau } => {
                positive("T", extension)?;
                check_optimal_tau(tau)
            }
        }
    }

    pub fn epsilon_of(&self, n: usize) -> f64 {
        let n = n as f64;
        match *self {
            ScalingPolicy::Constant { epsilon } => epsilon,
            ScalingPolicy::Power { c, alpha } => c * n.powf(alpha),
            ScalingPolicy::Linear { c } => c * n,
            ScalingPolicy::LinearOptimal { extension, tau } => raw_optimal_c(extension, tau) * n,
        }
    }

    /// Proportionality constant of the linear policies.
    pub fn linear_constant(&self) -> Option<f64> {
        match *self {
            ScalingPolicy::Linear { c } => Some(c),
            ScalingPolicy::LinearOptimal { extension, tau } => Some(raw_optimal_c(extension, tau)),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScalingPolicy::Constant { .. } => "constant",
            ScalingPolicy::Power { .. } => "power",
            ScalingPolicy::Linear { .. } => "linear",
            ScalingPolicy::LinearOptimal { .. } => "linear-optimal",
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

fn check_optimal_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 0.5 {
        Ok(())
    } else {
        Err(invalid(format!("optimal scaling needs 0 < tau < 1/2, got {tau}")))
    }
}

/// `log(1 + τ⁻²)` without overflow for tiny `τ`.
fn log_one_plus_inv_sq(tau: f64) -> f64 {
    -2.0 * tau.ln() + (tau * tau).ln_1p()
}

fn raw_optimal_c(extension: f64, tau: f64) -> f64 {
    PI / (extension * (2.0 * log_one_plus_inv_sq(tau)).sqrt())
}

/// `c* = π / (T √(2 log(1 + τ⁻²)))`, the largest `c` for which the saturation
/// error of `ε = cN` stays at the level of `τ`.
pub fn optimal_c(extension: f64, tau: f64) -> Result<f64> {
    positive("T", extension)?;
    check_optimal_tau(tau)?;
    Ok(raw_optimal_c(extension, tau))
}

/// `min{1, c*}`, the stricter bound needed for the optimal algebraic rate.
pub fn optimal_c_constrained(extension: f64, tau: f64) -> Result<f64> {
    Ok(optimal_c(extension, tau)?.min(1.0))
}

fn check_geometry(extension: f64, radius: f64) -> Result<()> {
    positive("T", extension)?;
    positive("B", radius)?;
    if radius >= extension {
        return Err(invalid(format!("need B < T, got B = {radius}, T = {extension}")));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("tau must lie in (0, 1], got {tau}")))
    }
}

/// Smallest `ε` for which the outermost translates are at the level of `τ` on the
/// domain: `1/(√2 (T - B)) · √(log(√(2π) B N / (T τ²)))`. Returns 0 when the
/// logarithm is not positive.
pub fn epsilon_lower_bound(extension: f64, radius: f64, n: usize, tau: f64) -> Result<f64> {
    check_geometry(extension, radius)?;
    check_tau(tau)?;
    if n == 0 {
        return Err(invalid("N must be at least 1"));
    }
    Ok(lower_bound_unchecked(extension, radius, n as f64, tau))
}

fn lower_bound_unchecked(extension: f64, radius: f64, n: f64, tau: f64) -> f64 {
    let log_arg = (2.0 * PI).sqrt().ln() + radius.ln() + n.ln() - extension.ln() - 2.0 * tau.ln();
    if log_arg <= 0.0 {
        return 0.0;
    }
    log_arg.sqrt() / (2f64.sqrt() * (extension - radius))
}

/// Upper end of the scan in [`min_n_linear`].
pub const MIN_N_SCAN_CAP: usize = 10_000_000;

/// Smallest `N ≥ 1` with `cN ≥ epsilon_lower_bound(T, B, N, τ)`.
pub fn min_n_linear(c: f64, extension: f64, radius: f64, tau: f64) -> Result<usize> {
    positive("c", c)?;
    check_geometry(extension, radius)?;
    check_tau(tau)?;
    (1..=MIN_N_SCAN_CAP)
        .find(|&n| c * n as f64 >= lower_bound_unchecked(extension, radius, n as f64, tau))
        .ok_or(Error::ScanLimit { cap: MIN_N_SCAN_CAP })
}

/// Saturation level of the linear regime `ε = cN`:
/// `(1/√(e^{π²/(2c²T²)} − 1) + √(cT) τ) · e^{π²/(4T²)}`.
pub fn limiting_accuracy(c: f64, extension: f64, tau: f64) -> Result<f64> {
    positive("c", c)?;
    positive("T", extension)?;
    positive("tau", tau)?;
    let ct = c * extension;
    // expm1 overflows to +inf for tiny cT, which sends the first term to 0.
    let first = 1.0 / (PI * PI / (2.0 * ct * ct)).exp_m1().sqrt();
    Ok((first + ct.sqrt() * tau) * (PI * PI / (4.0 * extension * extension)).exp())
}

/// The two parts of the predicted error bound for `f ∈ H^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictedError {
    /// Algebraically decaying approximation term.
    pub algebraic: f64,
    /// Term that governs the attainable accuracy.
    pub limiting: f64,
}

impl PredictedError {
    pub fn total(&self) -> f64 {
        self.algebraic + self.limiting
    }
}

/// Predicted error terms for smoothness `k` at basis size `N`.
pub fn predicted_rate(k: f64, n: usize, policy: &ScalingPolicy, extension: f64, tau: f64) -> Result<PredictedError> {
    positive("k", k)?;
    positive("T", extension)?;
    positive("tau", tau)?;
    policy.validate()?;
    if n == 0 {
        return Err(invalid("N must be at least 1"));
    }
    let nf = n as f64;
    let boost = (PI * PI / (4.0 * extension * extension)).exp();
    match *policy {
        ScalingPolicy::Power { c, alpha } => {
            let algebraic = (c * nf.powf(alpha) * PI / extension).powf(-k);
            let decay = (-PI * PI * nf.powf(2.0 * (1.0 - alpha)) / (4.0 * c * c * extension * extension)).exp();
            let noise = (c * extension).sqrt() * tau / nf.powf((1.0 - alpha) / 2.0);
            Ok(PredictedError { algebraic, limiting: (decay + noise) * boost })
        }
        ScalingPolicy::Linear { .. } | ScalingPolicy::LinearOptimal { .. } => {
            let c = policy.linear_constant().expect("linear policy");
            let algebraic = (c.min(1.0) * nf * PI / extension).powf(-k);
            Ok(PredictedError { algebraic, limiting: limiting_accuracy(c, extension, tau)? })
        }
        ScalingPolicy::Constant { .. } => Err(Error::NotImplemented(
            "error prediction for a constant shape parameter".into(),
        )),
    }
}
