//! Radial profiles and their shaped, translated and normalized versions.
//!
//! A profile `φ(t)` is evaluated at `t = ε‖x − ξ‖`. With the normalized
//! convention each translate carries an extra factor `ε^{d/2}` so that the
//! L²(R^d) norm of a Gaussian translate does not depend on `ε`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// The radial profiles supported by the solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum RbfKernel {
    /// `exp(-t²)`
    #[default]
    Gaussian,
    /// `sqrt(1 + t²)`
    Multiquadric,
    /// `1 / (1 + t²)`
    InverseQuadratic,
    /// `1 / sqrt(1 + t²)`
    InverseMultiquadric,
}

impl RbfKernel {
    pub const ALL: [RbfKernel; 4] = [
        RbfKernel::Gaussian,
        RbfKernel::Multiquadric,
        RbfKernel::InverseQuadratic,
        RbfKernel::InverseMultiquadric,
    ];

    /// Evaluates the profile at `t`, where `t` plays the role of `εr`.
    #[inline]
    pub fn profile(self, t: f64) -> f64 {
        let t2 = t * t;
        match self {
            RbfKernel::Gaussian => (-t2).exp(),
            RbfKernel::Multiquadric => (1.0 + t2).sqrt(),
            RbfKernel::InverseQuadratic => 1.0 / (1.0 + t2),
            RbfKernel::InverseMultiquadric => 1.0 / (1.0 + t2).sqrt(),
        }
    }

    /// Short name used on the command line and in config files.
    pub fn abbreviation(self) -> &'static str {
        match self {
            RbfKernel::Gaussian => "GA",
            RbfKernel::Multiquadric => "MQ",
            RbfKernel::InverseQuadratic => "IQ",
            RbfKernel::InverseMultiquadric => "IMQ",
        }
    }
}

impl fmt::Display for RbfKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbreviation())
    }
}

impl FromStr for RbfKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GA" => Ok(RbfKernel::Gaussian),
            "MQ" => Ok(RbfKernel::Multiquadric),
            "IQ" => Ok(RbfKernel::InverseQuadratic),
            "IMQ" => Ok(RbfKernel::InverseMultiquadric),
            other => Err(invalid(format!("unknown kernel '{other}' (expected GA, MQ, IQ or IMQ)"))),
        }
    }
}

/// Euclidean distance between two points of equal dimension.
#[inline]
pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    squared_distance(x, y).sqrt()
}

#[inline]
pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Normalization factor `ε^{d/2}`.
#[inline]
pub fn norm_factor(epsilon: f64, dim: usize) -> f64 {
    match dim {
        1 => epsilon.sqrt(),
        2 => epsilon,
        _ => epsilon.powf(dim as f64 / 2.0),
    }
}

/// A single translate `[ε^{d/2}] φ(ε‖x − ξ‖)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapedRbf {
    kernel: RbfKernel,
    epsilon: f64,
    center: Vec<f64>,
    normalized: bool,
}

impl ShapedRbf {
    pub fn new(kernel: RbfKernel, epsilon: f64, center: Vec<f64>, normalized: bool) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid(format!("shape parameter must be positive, got {epsilon}")));
        }
        if !matches!(center.len(), 1 | 2) {
            return Err(invalid(format!("center dimension must be 1 or 2, got {}", center.len())));
        }
        Ok(ShapedRbf { kernel, epsilon, center, normalized })
    }

    pub fn kernel(&self) -> RbfKernel {
        self.kernel
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    fn factor(&self) -> f64 {
        if self.normalized {
            norm_factor(self.epsilon, self.dim())
        } else {
            1.0
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(invalid(format!(
                "point has dimension {} but the translate lives in dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.factor() * self.kernel.profile(self.epsilon * distance(x, &self.center)))
    }

    /// `-Δ` of this translate at `x`. Only the Gaussian is supported.
    pub fn neg_laplacian(&self, x: &[f64]) -> Result<f64> {
        if self.kernel != RbfKernel::Gaussian {
            return Err(Error::NotImplemented(format!(
                "Laplacian of the {} kernel",
                self.kernel
            )));
        }
        self.check_dim(x)?;
        Ok(self.factor() * gaussian_neg_laplacian(self.epsilon, squared_distance(x, &self.center), self.dim()))
    }
}

/// `-Δ exp(-ε²r²) = (2dε² - 4ε⁴r²) exp(-ε²r²)` in terms of `r²`.
#[inline]
pub(crate) fn gaussian_neg_laplacian(epsilon: f64, r2: f64, dim: usize) -> f64 {
    let e2 = epsilon * epsilon;
    (2.0 * dim as f64 * e2 - 4.0 * e2 * e2 * r2) * (-e2 * r2).exp()
}

/// `-Δ_x exp(-ε²‖x − ξ‖²)` for the unnormalized Gaussian.
pub fn neg_laplacian_gaussian(epsilon: f64, center: &[f64], x: &[f64]) -> Result<f64> {
    ShapedRbf::new(RbfKernel::Gaussian, epsilon, center.to_vec(), false)?.neg_laplacian(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        for k in RbfKernel::ALL {
            assert_eq!(k.profile(0.0), 1.0);
        }
        assert_eq!(RbfKernel::InverseQuadratic.profile(1.0), 0.5);
        assert!((RbfKernel::Gaussian.profile(1.0) - 0.367_879_441_171_442_33).abs() < 1e-16);
        assert!((RbfKernel::Multiquadric.profile(1.0) - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((RbfKernel::InverseMultiquadric.profile(1.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 2e-16);
    }

    #[test]
    fn kernel_names_are_case_insensitive() {
        assert_eq!("ga".parse::<RbfKernel>().unwrap(), RbfKernel::Gaussian);
        assert_eq!("Imq".parse::<RbfKernel>().unwrap(), RbfKernel::InverseMultiquadric);
        assert!("tps".parse::<RbfKernel>().is_err());
        for k in RbfKernel::ALL {
            assert_eq!(k.to_string().parse::<RbfKernel>().unwrap(), k);
        }
    }

    #[test]
    fn eval_examples() {
        let rbf = ShapedRbf::new(RbfKernel::Gaussian, 3.0, vec![0.0], false).unwrap();
        assert_eq!(rbf.eval(&[0.0]).unwrap(), 1.0);

        let rbf = ShapedRbf::new(RbfKernel::Gaussian, 2.0, vec![0.5], false).unwrap();
        assert!((rbf.eval(&[1.5]).unwrap() - (-4.0f64).exp()).abs() < 1e-18);

        let rbf = ShapedRbf::new(RbfKernel::Gaussian, 4.0, vec![0.0], true).unwrap();
        assert_eq!(rbf.eval(&[0.0]).unwrap(), 2.0);
    }

    #[test]
    fn eval_rejects_dimension_mismatch() {
        let rbf = ShapedRbf::new(RbfKernel::Gaussian, 1.0, vec![0.0, 0.0], false).unwrap();
        assert!(matches!(rbf.eval(&[0.0]), Err(Error::InvalidArgument(_))));
        assert!(ShapedRbf::new(RbfKernel::Gaussian, 0.0, vec![0.0], false).is_err());
        assert!(ShapedRbf::new(RbfKernel::Gaussian, 1.0, vec![], false).is_err());
    }

    #[test]
    fn laplacian_at_center() {
        assert_eq!(neg_laplacian_gaussian(1.0, &[0.0], &[0.0]).unwrap(), 2.0);
        assert_eq!(neg_laplacian_gaussian(1.0, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), 4.0);
        let normalized = ShapedRbf::new(RbfKernel::Gaussian, 4.0, vec![0.0], true).unwrap();
        assert_eq!(normalized.neg_laplacian(&[0.0]).unwrap(), 2.0 * 2.0 * 16.0);
    }

    #[test]
    fn laplacian_matches_second_difference() {
        let (eps, x, h): (f64, f64, f64) = (1.5, 0.7, 1e-5);
        // f(x±h) - f(x) = f(x) expm1(-ε²h(±2x + h)) avoids the cancellation in the numerator.
        let fx = (-(eps * x) * (eps * x)).exp();
        let up = (-eps * eps * h * (2.0 * x + h)).exp_m1();
        let down = (-eps * eps * h * (h - 2.0 * x)).exp_m1();
        let fd = -fx * (up + down) / (h * h);
        let exact = neg_laplacian_gaussian(eps, &[0.0], &[x]).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-6, "fd {fd} exact {exact}");
    }

    #[test]
    fn laplacian_only_for_gaussian() {
        let rbf = ShapedRbf::new(RbfKernel::Multiquadric, 1.0, vec![0.0], false).unwrap();
        assert!(matches!(rbf.neg_laplacian(&[0.2]), Err(Error::NotImplemented(_))));
    }

    #[test]
    fn normalized_gaussian_has_fixed_l2_norm() {
        // Simpson quadrature of the squared translate over a window of 12 widths.
        let target = (std::f64::consts::PI / 2.0).powf(0.25);
        for eps in [1.0, 10.0, 100.0] {
            let rbf = ShapedRbf::new(RbfKernel::Gaussian, eps, vec![0.3], true).unwrap();
            let half = 6.0 / eps;
            let n = 4000;
            let h = 2.0 * half / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let x = 0.3 - half + i as f64 * h;
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let v = rbf.eval(&[x]).unwrap();
                acc += w * v * v;
            }
            let norm = (acc * h / 3.0).sqrt();
            assert!((norm - target).abs() < 1e-8, "eps {eps}: {norm} vs {target}");
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn profiles_are_even(t in -50.0f64..50.0) {
                for k in RbfKernel::ALL {
                    prop_assert_eq!(k.profile(t), k.profile(-t));
                }
            }

            #[test]
            fn monotone_in_radius(a in 0.0f64..20.0, b in 0.0f64..20.0) {
                prop_assume!(a < b);
                for k in [RbfKernel::InverseQuadratic, RbfKernel::InverseMultiquadric] {
                    prop_assert!(k.profile(a) > k.profile(b));
                    prop_assert!(k.profile(b) <= 1.0);
                }
                prop_assert!(RbfKernel::Gaussian.profile(a) >= RbfKernel::Gaussian.profile(b));
                prop_assert!(RbfKernel::Multiquadric.profile(a) < RbfKernel::Multiquadric.profile(b));
                prop_assert!(RbfKernel::Multiquadric.profile(a) >= 1.0);
            }

            #[test]
            fn unit_shape_eval_is_profile(x in -3.0f64..3.0, y in -3.0f64..3.0) {
                for k in RbfKernel::ALL {
                    let rbf = ShapedRbf::new(k, 1.0, vec![0.0, 0.0], false).unwrap();
                    prop_assert_eq!(rbf.eval(&[x, y]).unwrap(), k.profile((x * x + y * y).sqrt()));
                }
            }

            #[test]
            fn laplacian_matches_finite_differences(
                eps in 0.5f64..20.0,
                pts in proptest::collection::vec(-2.0f64..2.0, 4),
                two_d in any::<bool>(),
            ) {
                let d = if two_d { 2 } else { 1 };
                let (x, c) = (&pts[..d], &pts[2..2 + d]);
                let rbf = ShapedRbf::new(RbfKernel::Gaussian, eps, c.to_vec(), false).unwrap();
                let h = 1e-4 / eps;
                let mut fd = 0.0;
                for axis in 0..d {
                    let mut plus = x.to_vec();
                    let mut minus = x.to_vec();
                    plus[axis] += h;
                    minus[axis] -= h;
                    fd -= (rbf.eval(&plus).unwrap() - 2.0 * rbf.eval(x).unwrap() + rbf.eval(&minus).unwrap()) / (h * h);
                }
                let exact = rbf.neg_laplacian(x).unwrap();
                // Relative to the curvature scale 2dε², the value at the center.
                let scale = 2.0 * d as f64 * eps * eps;
                prop_assert!((fd - exact).abs() <= 1e-5 * scale, "fd {} exact {}", fd, exact);
            }
        }
    }
}
