//! Least-squares drift estimators from sampled path data.
//!
//! All three are ratios of quadratic forms in X and hence exactly invariant
//! under X -> cX. Degenerate (all-zero) paths error out instead of
//! producing infinities; Monte Carlo drivers count those separately.

use crate::error::{Error, Result};
use crate::simulate::OUPath;

/// Which estimator produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// X_T^2 / (2 int_0^T X_s^2 ds), trapezoid quadrature.
    ContinuousLse,
    /// sum X_{t_{i-1}} (X_{t_i} - X_{t_{i-1}}) / (Delta sum X_{t_{i-1}}^2).
    DiscreteLseHat,
    /// X_{T_n}^2 / (2 Delta sum X_{t_{i-1}}^2).
    DiscreteLseCheck,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::ContinuousLse => "continuous_lse",
            EstimatorKind::DiscreteLseHat => "discrete_lse_hat",
            EstimatorKind::DiscreteLseCheck => "discrete_lse_check",
        }
    }
}

/// Estimate plus the run's bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationResult {
    pub kind: EstimatorKind,
    pub theta: f64,
    pub horizon: f64,
    pub n: usize,
    pub delta: f64,
    /// The denominator quadratic form (positive when the result exists).
    pub denominator: f64,
}

fn check_series(x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::DegeneratePath(format!(
            "need at least 2 observations, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// Continuous-time LSE on a discretely observed path: X_T^2 over twice the
/// trapezoid approximation of int_0^T X_s^2 ds, the full grid including t_0.
pub fn continuous_lse(delta: f64, x: &[f64]) -> Result<EstimationResult> {
    check_series(x)?;
    let n = x.len() - 1;
    let sum: f64 = x.iter().map(|v| v * v).sum();
    let quad = delta * (sum - 0.5 * x[0] * x[0] - 0.5 * x[n] * x[n]);
    if !(quad > 0.0) {
        return Err(Error::DegeneratePath(
            "trapezoid of X^2 is not positive".to_string(),
        ));
    }
    Ok(EstimationResult {
        kind: EstimatorKind::ContinuousLse,
        theta: x[n] * x[n] / (2.0 * quad),
        horizon: n as f64 * delta,
        n,
        delta,
        denominator: quad,
    })
}

/// Discrete LSE with the increment numerator; sums run over i = 1..=n.
pub fn discrete_lse_hat(delta: f64, x: &[f64]) -> Result<EstimationResult> {
    check_series(x)?;
    let n = x.len() - 1;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 1..=n {
        num += x[i - 1] * (x[i] - x[i - 1]);
        den += x[i - 1] * x[i - 1];
    }
    let den = delta * den;
    if !(den > 0.0) {
        return Err(Error::DegeneratePath(
            "sum of squared left endpoints is not positive".to_string(),
        ));
    }
    Ok(EstimationResult {
        kind: EstimatorKind::DiscreteLseHat,
        theta: num / den,
        horizon: n as f64 * delta,
        n,
        delta,
        denominator: den,
    })
}

/// Discrete LSE with the terminal-value numerator.
pub fn discrete_lse_check(delta: f64, x: &[f64]) -> Result<EstimationResult> {
    check_series(x)?;
    let n = x.len() - 1;
    let den: f64 = delta * x[..n].iter().map(|v| v * v).sum::<f64>();
    if !(den > 0.0) {
        return Err(Error::DegeneratePath(
            "sum of squared left endpoints is not positive".to_string(),
        ));
    }
    Ok(EstimationResult {
        kind: EstimatorKind::DiscreteLseCheck,
        theta: x[n] * x[n] / (2.0 * den),
        horizon: n as f64 * delta,
        n,
        delta,
        denominator: den,
    })
}

impl OUPath {
    pub fn continuous_lse(&self) -> Result<EstimationResult> {
        continuous_lse(self.grid.delta(), &self.x_values)
    }

    pub fn discrete_lse_hat(&self) -> Result<EstimationResult> {
        discrete_lse_hat(self.grid.delta(), &self.x_values)
    }

    pub fn discrete_lse_check(&self) -> Result<EstimationResult> {
        discrete_lse_check(self.grid.delta(), &self.x_values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hat_and_check_arithmetic_oracle() {
        // X = (0, 1, 2) at unit spacing:
        // hat: numerator 0*1 + 1*1 = 1, denominator 1*(0+1) = 1
        // check: 2^2 / (2*1*1) = 2
        let x = [0.0, 1.0, 2.0];
        let hat = discrete_lse_hat(1.0, &x).unwrap();
        assert_relative_eq!(hat.theta, 1.0);
        assert_relative_eq!(hat.denominator, 1.0);
        let chk = discrete_lse_check(1.0, &x).unwrap();
        assert_relative_eq!(chk.theta, 2.0);
    }

    #[test]
    fn continuous_polynomial_oracle() {
        // X_s = s on [0,1]: X_1^2 / (2 * 1/3) = 1.5; fine grid drives the
        // trapezoid error below 1e-3
        let n = 1000;
        let delta = 1.0 / n as f64;
        let x: Vec<f64> = (0..=n).map(|i| i as f64 * delta).collect();
        let r = continuous_lse(delta, &x).unwrap();
        assert!((r.theta - 1.5).abs() < 1e-3, "theta = {}", r.theta);
    }

    #[test]
    fn scale_invariance() {
        let x = [0.0, 0.3, -0.4, 1.2, 0.9, 2.0];
        for c in [2.0, -0.5, 1e6] {
            let xs: Vec<f64> = x.iter().map(|v| c * v).collect();
            assert_relative_eq!(
                continuous_lse(0.1, &x).unwrap().theta,
                continuous_lse(0.1, &xs).unwrap().theta,
                max_relative = 1e-12
            );
            assert_relative_eq!(
                discrete_lse_hat(0.1, &x).unwrap().theta,
                discrete_lse_hat(0.1, &xs).unwrap().theta,
                max_relative = 1e-12
            );
            assert_relative_eq!(
                discrete_lse_check(0.1, &x).unwrap().theta,
                discrete_lse_check(0.1, &xs).unwrap().theta,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn interior_order_matters() {
        let x = [0.0, 0.5, -1.0, 2.0, 1.0];
        let mut permuted = x;
        permuted.swap(1, 3);
        let a = discrete_lse_hat(0.5, &x).unwrap().theta;
        let b = discrete_lse_hat(0.5, &permuted).unwrap().theta;
        assert!((a - b).abs() > 1e-12, "permutation left hat unchanged");
    }

    #[test]
    fn degenerate_paths_error() {
        let zeros = [0.0; 8];
        assert!(matches!(
            continuous_lse(0.1, &zeros),
            Err(Error::DegeneratePath(_))
        ));
        assert!(matches!(
            discrete_lse_hat(0.1, &zeros),
            Err(Error::DegeneratePath(_))
        ));
        assert!(matches!(
            discrete_lse_check(0.1, &zeros),
            Err(Error::DegeneratePath(_))
        ));
        assert!(continuous_lse(0.1, &[1.0]).is_err());
    }
}
