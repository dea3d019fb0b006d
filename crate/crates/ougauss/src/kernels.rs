//! Covariance kernels R(s,t) = E[G_s G_t] for the ten Gaussian noise
//! families, their partial derivatives, and the fractional Brownian
//! reference kernel.
//!
//! Each spec carries `effective_h`, the exponent governing the increment
//! scaling E|G_t - G_s|^2 ~ |t-s|^{2H}, and `fbm_scale`, the constant kappa
//! in the decomposition
//!
//! ```text
//!   d2R/ds dt = kappa * d2R_H/ds dt + Phi(s,t),   |Phi| <= C'(ts)^{H-1},
//! ```
//!
//! where R_H is the fBm kernel at `effective_h`. Families differ in kappa
//! (e.g. 2 for the sum/max kernels, 2^{1-K} for the bifractional family);
//! storing it explicitly lets Phi stay bounded for every conforming family.

use crate::error::{Error, Result};
use crate::quad;
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

/// Kernel family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    /// R(s,t) = ((s^2H + t^2H) - |t-s|^2H) / 2, H in (0,1).
    FBm { h: f64 },
    /// R(s,t) = s^2H + t^2H - ((s+t)^2H + |t-s|^2H) / 2.
    SubFBm { h: f64 },
    /// R(s,t) = 2^-K ((s^2H + t^2H)^K - |t-s|^2HK), H in (0,1), K in (0,2), HK in (0,1).
    BiFBm { h: f64, k: f64 },
    /// R(s,t) = (s^2H + t^2H)^K - ((s+t)^2HK + |t-s|^2HK) / 2.
    GenSubFBm { h: f64, k: f64 },
    /// R(s,t) = (s+t)^2H - |t-s|^2H.
    BojdeckiSum { h: f64 },
    /// R(s,t) = max(s,t)^gamma - |t-s|^gamma, gamma in (0,1).
    TalarczykMax { gamma: f64 },
    /// R(s,t) = (t^H + s^H - K(s+t)^H - (1-K)|t-s|^H) / 2, H in (0,1), K in (0,1).
    HoudreMixed { h: f64, k: f64 },
    /// R(s,t) = int_0^(s^t) u^a ((t-u)^b + (s-u)^b) du, a > -1, |b| < 1, |b| < a+1.
    WeightedFBm { a: f64, b: f64 },
    /// Wiener-integral kernel with two branches:
    /// K in (0,1): G(1-K)/K (t^K + s^K - (t+s)^K);
    /// K in (1,2): G(2-K)/(K(K-1)) ((t+s)^K - t^K - s^K).
    OdlyzkoType { k: f64 },
    /// R(s,t) = (s+t)^gamma - max(s,t)^gamma, gamma in (0,1).
    TalarczykComplement { gamma: f64 },
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::FBm { .. } => "FBm",
            KernelFamily::SubFBm { .. } => "SubFBm",
            KernelFamily::BiFBm { .. } => "BiFBm",
            KernelFamily::GenSubFBm { .. } => "GenSubFBm",
            KernelFamily::BojdeckiSum { .. } => "BojdeckiSum",
            KernelFamily::TalarczykMax { .. } => "TalarczykMax",
            KernelFamily::HoudreMixed { .. } => "HoudreMixed",
            KernelFamily::WeightedFBm { .. } => "WeightedFBm",
            KernelFamily::OdlyzkoType { .. } => "OdlyzkoType",
            KernelFamily::TalarczykComplement { .. } => "TalarczykComplement",
        }
    }

    pub fn params_string(&self) -> String {
        match *self {
            KernelFamily::FBm { h } | KernelFamily::SubFBm { h } | KernelFamily::BojdeckiSum { h } => {
                format!("H={h}")
            }
            KernelFamily::BiFBm { h, k }
            | KernelFamily::GenSubFBm { h, k }
            | KernelFamily::HoudreMixed { h, k } => format!("H={h} K={k}"),
            KernelFamily::TalarczykMax { gamma } | KernelFamily::TalarczykComplement { gamma } => {
                format!("gamma={gamma}")
            }
            KernelFamily::WeightedFBm { a, b } => format!("a={a} b={b}"),
            KernelFamily::OdlyzkoType { k } => format!("K={k}"),
        }
    }
}

/// A validated kernel: family, parameters, and the derived constants used by
/// the structural-condition machinery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    effective_h: f64,
    fbm_scale: f64,
}

fn in_open(x: f64, lo: f64, hi: f64) -> bool {
    x.is_finite() && x > lo && x < hi
}

impl KernelSpec {
    pub fn new(family: KernelFamily) -> Result<Self> {
        let bad = |msg: &str| Error::ParameterDomain {
            family: family.name().to_string(),
            message: msg.to_string(),
        };
        let (effective_h, fbm_scale) = match family {
            KernelFamily::FBm { h } | KernelFamily::SubFBm { h } => {
                if !in_open(h, 0.0, 1.0) {
                    return Err(bad("H must lie in (0,1)"));
                }
                (h, 1.0)
            }
            KernelFamily::BojdeckiSum { h } => {
                if !in_open(h, 0.0, 1.0) {
                    return Err(bad("H must lie in (0,1)"));
                }
                (h, 2.0)
            }
            KernelFamily::BiFBm { h, k } => {
                if !in_open(h, 0.0, 1.0) || !in_open(k, 0.0, 2.0) || !in_open(h * k, 0.0, 1.0) {
                    return Err(bad("need H in (0,1), K in (0,2), HK in (0,1)"));
                }
                (h * k, 2f64.powf(1.0 - k))
            }
            KernelFamily::GenSubFBm { h, k } => {
                if !in_open(h, 0.0, 1.0) || !in_open(k, 0.0, 2.0) || !in_open(h * k, 0.0, 1.0) {
                    return Err(bad("need H in (0,1), K in (0,2), HK in (0,1)"));
                }
                (h * k, 1.0)
            }
            KernelFamily::TalarczykMax { gamma } => {
                if !in_open(gamma, 0.0, 1.0) {
                    return Err(bad("gamma must lie in (0,1)"));
                }
                (gamma / 2.0, 2.0)
            }
            KernelFamily::HoudreMixed { h, k } => {
                if !in_open(h, 0.0, 1.0) || !in_open(k, 0.0, 1.0) {
                    return Err(bad("need H in (0,1), K in (0,1)"));
                }
                (h / 2.0, 1.0 - k)
            }
            KernelFamily::WeightedFBm { a, b } => {
                if !(a.is_finite() && a > -1.0 && b.is_finite() && b.abs() < 1.0 && b.abs() < a + 1.0)
                {
                    return Err(bad("need a > -1, |b| < 1, |b| < a+1"));
                }
                ((a + b + 1.0) / 2.0, 1.0)
            }
            KernelFamily::OdlyzkoType { k } => {
                if !(in_open(k, 0.0, 2.0) && k != 1.0) {
                    return Err(bad("K must lie in (0,1) or (1,2); K = 1 is not defined"));
                }
                (k / 2.0, 1.0)
            }
            KernelFamily::TalarczykComplement { gamma } => {
                if !in_open(gamma, 0.0, 1.0) {
                    return Err(bad("gamma must lie in (0,1)"));
                }
                (gamma / 2.0, 1.0)
            }
        };
        Ok(KernelSpec {
            family,
            effective_h,
            fbm_scale,
        })
    }

    pub fn fbm(h: f64) -> Result<Self> {
        Self::new(KernelFamily::FBm { h })
    }
    pub fn sub_fbm(h: f64) -> Result<Self> {
        Self::new(KernelFamily::SubFBm { h })
    }
    pub fn bi_fbm(h: f64, k: f64) -> Result<Self> {
        Self::new(KernelFamily::BiFBm { h, k })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Exponent governing the increment scaling, H in (0,1).
    pub fn effective_h(&self) -> f64 {
        self.effective_h
    }

    /// Constant kappa multiplying the fBm mixed partial in the decomposition.
    pub fn fbm_scale(&self) -> f64 {
        self.fbm_scale
    }

    /// Whether the family is among the seven with a bounded residual Phi.
    pub fn is_reference_conforming(&self) -> bool {
        !matches!(
            self.family,
            KernelFamily::WeightedFBm { .. }
                | KernelFamily::OdlyzkoType { .. }
                | KernelFamily::TalarczykComplement { .. }
        )
    }

    /// Guard for operations that require H in (0,1) \ {1/2}.
    pub fn require_offcritical_exponent(&self) -> Result<()> {
        let h = self.effective_h;
        if !(h > 0.0 && h < 1.0) || h == 0.5 {
            return Err(Error::ParameterDomain {
                family: self.family.name().to_string(),
                message: format!("effective exponent {h} must lie in (0,1) and differ from 1/2"),
            });
        }
        Ok(())
    }

    /// Covariance R(s,t). Defined for s, t >= 0; symmetric by construction
    /// (arguments are sorted before evaluation).
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        if !(s >= 0.0 && t >= 0.0) {
            return Err(Error::ParameterDomain {
                family: self.family.name().to_string(),
                message: format!("kernel arguments must be nonnegative, got ({s}, {t})"),
            });
        }
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        let d = hi - lo;
        let v = match self.family {
            KernelFamily::FBm { h } => {
                0.5 * (lo.powf(2.0 * h) + hi.powf(2.0 * h) - d.powf(2.0 * h))
            }
            KernelFamily::SubFBm { h } => {
                lo.powf(2.0 * h) + hi.powf(2.0 * h)
                    - 0.5 * ((lo + hi).powf(2.0 * h) + d.powf(2.0 * h))
            }
            KernelFamily::BiFBm { h, k } => {
                2f64.powf(-k)
                    * ((lo.powf(2.0 * h) + hi.powf(2.0 * h)).powf(k) - d.powf(2.0 * h * k))
            }
            KernelFamily::GenSubFBm { h, k } => {
                (lo.powf(2.0 * h) + hi.powf(2.0 * h)).powf(k)
                    - 0.5 * ((lo + hi).powf(2.0 * h * k) + d.powf(2.0 * h * k))
            }
            KernelFamily::BojdeckiSum { h } => (lo + hi).powf(2.0 * h) - d.powf(2.0 * h),
            KernelFamily::TalarczykMax { gamma } => hi.powf(gamma) - d.powf(gamma),
            KernelFamily::HoudreMixed { h, k } => {
                0.5 * (lo.powf(h) + hi.powf(h) - k * (lo + hi).powf(h) - (1.0 - k) * d.powf(h))
            }
            KernelFamily::WeightedFBm { a, b } => {
                let bab = beta(a + 1.0, b + 1.0);
                let mut v = bab * (lo.powf(a + b + 1.0) + hi.powf(a + b + 1.0));
                v -= self.weighted_residual_integral(lo, hi, a, b)?;
                v
            }
            KernelFamily::OdlyzkoType { k } => {
                if k < 1.0 {
                    gamma(1.0 - k) / k * (lo.powf(k) + hi.powf(k) - (lo + hi).powf(k))
                } else {
                    gamma(2.0 - k) / (k * (k - 1.0)) * ((lo + hi).powf(k) - lo.powf(k) - hi.powf(k))
                }
            }
            KernelFamily::TalarczykComplement { gamma } => (lo + hi).powf(gamma) - hi.powf(gamma),
        };
        if !v.is_finite() {
            return Err(Error::Quadrature {
                context: format!("kernel evaluation at ({s}, {t})"),
                error_estimate: f64::INFINITY,
            });
        }
        Ok(v)
    }

    /// Residual integral int_lo^hi u^a (hi-u)^b du of the weighted family,
    /// with the substitution w = (hi-u)^(1+b) regularizing the b < 0 endpoint.
    fn weighted_residual_integral(&self, lo: f64, hi: f64, a: f64, b: f64) -> Result<f64> {
        if lo == hi {
            return Ok(0.0);
        }
        if lo == 0.0 {
            return Ok(beta(a + 1.0, b + 1.0) * hi.powf(a + b + 1.0));
        }
        let tol = 1e-13 * (1.0 + hi.powf(a + b + 1.0));
        let r = if b < 0.0 {
            let upper = (hi - lo).powf(1.0 + b);
            let mut f = |w: f64, _da: f64, _db: f64| (hi - w.powf(1.0 / (1.0 + b))).powf(a);
            quad::tanh_sinh(&mut f, 0.0, upper, tol).scale(1.0 / (1.0 + b))
        } else {
            let mut f = |u: f64, _da: f64, db: f64| u.powf(a) * db.powf(b);
            quad::tanh_sinh(&mut f, lo, hi, tol)
        };
        if !r.value.is_finite() || r.abs_error > 1e6 * tol {
            return Err(Error::Quadrature {
                context: format!("weighted-kernel residual integral on [{lo}, {hi}]"),
                error_estimate: r.abs_error,
            });
        }
        Ok(r.value)
    }

    /// Partial derivative dR(s,t)/dt in the second argument, for s, t > 0
    /// and s != t (the derivative jumps across the diagonal).
    pub fn dr_dt(&self, s: f64, t: f64) -> Result<f64> {
        if s == t {
            return Err(Error::DiagonalSingularity { at: s });
        }
        if !(s > 0.0 && t > 0.0) {
            return Err(Error::ParameterDomain {
                family: self.family.name().to_string(),
                message: "dR/dt requires s, t > 0".to_string(),
            });
        }
        let d = (t - s).abs();
        let sg = if t > s { 1.0 } else { -1.0 };
        let v = match self.family {
            KernelFamily::FBm { h } => h * (t.powf(2.0 * h - 1.0) - sg * d.powf(2.0 * h - 1.0)),
            KernelFamily::SubFBm { h } => {
                2.0 * h * t.powf(2.0 * h - 1.0)
                    - h * (s + t).powf(2.0 * h - 1.0)
                    - h * sg * d.powf(2.0 * h - 1.0)
            }
            KernelFamily::BiFBm { h, k } => {
                2f64.powf(-k)
                    * (2.0 * h * k * t.powf(2.0 * h - 1.0)
                        * (s.powf(2.0 * h) + t.powf(2.0 * h)).powf(k - 1.0)
                        - 2.0 * h * k * sg * d.powf(2.0 * h * k - 1.0))
            }
            KernelFamily::GenSubFBm { h, k } => {
                2.0 * h * k * t.powf(2.0 * h - 1.0)
                    * (s.powf(2.0 * h) + t.powf(2.0 * h)).powf(k - 1.0)
                    - h * k * (s + t).powf(2.0 * h * k - 1.0)
                    - h * k * sg * d.powf(2.0 * h * k - 1.0)
            }
            KernelFamily::BojdeckiSum { h } => {
                2.0 * h * (s + t).powf(2.0 * h - 1.0) - 2.0 * h * sg * d.powf(2.0 * h - 1.0)
            }
            KernelFamily::TalarczykMax { gamma } => {
                let max_part = if t > s { gamma * t.powf(gamma - 1.0) } else { 0.0 };
                max_part - gamma * sg * d.powf(gamma - 1.0)
            }
            KernelFamily::HoudreMixed { h, k } => {
                0.5 * (h * t.powf(h - 1.0)
                    - k * h * (s + t).powf(h - 1.0)
                    - (1.0 - k) * h * sg * d.powf(h - 1.0))
            }
            KernelFamily::WeightedFBm { a, b } => {
                let base = (a + b + 1.0) * beta(a + 1.0, b + 1.0) * t.powf(a + b);
                if t < s {
                    base + t.powf(a) * (s - t).powf(b)
                } else {
                    // d/dt of the residual integral, with I = int_0^{t-s} (t-v)^{a-1} v^b dv
                    let mut f = |v: f64, da: f64, _db: f64| (t - v).powf(a - 1.0) * da.powf(b);
                    let r = quad::tanh_sinh(&mut f, 0.0, t - s, 1e-13 * (1.0 + base.abs()));
                    if !r.value.is_finite() {
                        return Err(Error::Quadrature {
                            context: "weighted-kernel derivative integral".to_string(),
                            error_estimate: r.abs_error,
                        });
                    }
                    base - (s.powf(a) * (t - s).powf(b) + a * r.value)
                }
            }
            KernelFamily::OdlyzkoType { k } => {
                if k < 1.0 {
                    gamma(1.0 - k) * (t.powf(k - 1.0) - (s + t).powf(k - 1.0))
                } else {
                    gamma(2.0 - k) / (k - 1.0) * ((s + t).powf(k - 1.0) - t.powf(k - 1.0))
                }
            }
            KernelFamily::TalarczykComplement { gamma } => {
                let max_part = if t > s { gamma * t.powf(gamma - 1.0) } else { 0.0 };
                gamma * (s + t).powf(gamma - 1.0) - max_part
            }
        };
        Ok(v)
    }

    /// Residual Phi(s,t) = d2/ds dt [R - kappa R_H] at `effective_h`,
    /// in closed form, for s, t > 0 off the diagonal.
    pub fn phi(&self, s: f64, t: f64) -> Result<f64> {
        if s == t {
            return Err(Error::DiagonalSingularity { at: s });
        }
        if !(s > 0.0 && t > 0.0) {
            return Err(Error::ParameterDomain {
                family: self.family.name().to_string(),
                message: "Phi requires s, t > 0".to_string(),
            });
        }
        let d = (t - s).abs();
        let he = self.effective_h;
        let v = match self.family {
            KernelFamily::FBm { .. } => 0.0,
            KernelFamily::SubFBm { h } => -h * (2.0 * h - 1.0) * (s + t).powf(2.0 * h - 2.0),
            KernelFamily::BiFBm { h, k } => {
                2f64.powf(-k) * 4.0 * h * h * k * (k - 1.0) * (s * t).powf(2.0 * h - 1.0)
                    * (s.powf(2.0 * h) + t.powf(2.0 * h)).powf(k - 2.0)
            }
            KernelFamily::GenSubFBm { h, k } => {
                4.0 * h * h * k * (k - 1.0) * (s * t).powf(2.0 * h - 1.0)
                    * (s.powf(2.0 * h) + t.powf(2.0 * h)).powf(k - 2.0)
                    - h * k * (2.0 * h * k - 1.0) * (s + t).powf(2.0 * h * k - 2.0)
            }
            KernelFamily::BojdeckiSum { h } => {
                2.0 * h * (2.0 * h - 1.0) * (s + t).powf(2.0 * h - 2.0)
            }
            KernelFamily::TalarczykMax { .. } => 0.0,
            KernelFamily::HoudreMixed { h, k } => {
                -0.5 * k * h * (h - 1.0) * (s + t).powf(h - 2.0)
            }
            KernelFamily::WeightedFBm { a, b } => {
                b * s.min(t).powf(a) * d.powf(b - 1.0)
                    - he * (2.0 * he - 1.0) * d.powf(2.0 * he - 2.0)
            }
            KernelFamily::OdlyzkoType { k } => {
                let c = if k < 1.0 {
                    gamma(1.0 - k) * (1.0 - k)
                } else {
                    gamma(2.0 - k)
                };
                c * (s + t).powf(k - 2.0) - he * (2.0 * he - 1.0) * d.powf(k - 2.0)
            }
            KernelFamily::TalarczykComplement { gamma } => {
                gamma * (gamma - 1.0) * (s + t).powf(gamma - 2.0)
                    - he * (2.0 * he - 1.0) * d.powf(gamma - 2.0)
            }
        };
        Ok(v)
    }

    /// Smooth part R - kappa R_H whose mixed second difference approximates Phi.
    fn residual(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.eval(s, t)? - self.fbm_scale * fbm_covariance(self.effective_h, s, t))
    }

    /// Central mixed finite difference for Phi. `step` defaults to the
    /// curvature-balancing eps^(1/3) * min(s,t).
    pub fn phi_fd(&self, s: f64, t: f64, step: Option<f64>) -> Result<f64> {
        if s == t {
            return Err(Error::DiagonalSingularity { at: s });
        }
        let h = step.unwrap_or_else(|| f64::EPSILON.powf(1.0 / 3.0) * s.min(t));
        if h <= 0.0 || s + h == s || t + h == t || s - h <= 0.0 || t - h <= 0.0 {
            return Err(Error::StepUnderflow { s, t });
        }
        let pp = self.residual(s + h, t + h)?;
        let pm = self.residual(s + h, t - h)?;
        let mp = self.residual(s - h, t + h)?;
        let mm = self.residual(s - h, t - h)?;
        Ok((pp - pm - mp + mm) / (4.0 * h * h))
    }

    /// One canonical parameterization per family per exponent regime
    /// (below and above 1/2 where the parameter range allows it).
    pub fn canonical_examples() -> Vec<KernelSpec> {
        let mk = |f| KernelSpec::new(f).expect("canonical parameters are valid");
        vec![
            mk(KernelFamily::FBm { h: 0.3 }),
            mk(KernelFamily::FBm { h: 0.75 }),
            mk(KernelFamily::SubFBm { h: 0.3 }),
            mk(KernelFamily::SubFBm { h: 0.75 }),
            mk(KernelFamily::BiFBm { h: 0.55, k: 0.6 }),
            mk(KernelFamily::BiFBm { h: 0.8, k: 0.9 }),
            mk(KernelFamily::GenSubFBm { h: 0.55, k: 0.6 }),
            mk(KernelFamily::GenSubFBm { h: 0.8, k: 0.9 }),
            mk(KernelFamily::BojdeckiSum { h: 0.3 }),
            mk(KernelFamily::BojdeckiSum { h: 0.75 }),
            mk(KernelFamily::TalarczykMax { gamma: 0.5 }),
            mk(KernelFamily::TalarczykMax { gamma: 0.9 }),
            mk(KernelFamily::HoudreMixed { h: 0.5, k: 0.5 }),
            mk(KernelFamily::HoudreMixed { h: 0.9, k: 0.5 }),
            mk(KernelFamily::WeightedFBm { a: -0.5, b: 0.2 }),
            mk(KernelFamily::WeightedFBm { a: 0.5, b: 0.25 }),
            mk(KernelFamily::OdlyzkoType { k: 0.75 }),
            mk(KernelFamily::OdlyzkoType { k: 1.5 }),
            mk(KernelFamily::TalarczykComplement { gamma: 0.5 }),
            mk(KernelFamily::TalarczykComplement { gamma: 0.9 }),
        ]
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({})", self.family.name(), self.family.params_string())
    }
}

/// The fBm reference covariance at exponent `h`.
pub fn fbm_covariance(h: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.abs().powf(2.0 * h) + t.abs().powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

/// dR_H(s,t)/dt of the fBm reference kernel, off the diagonal, t > 0.
pub fn fbm_dr_dt(h: f64, s: f64, t: f64) -> f64 {
    let sg = if t > s { 1.0 } else { -1.0 };
    h * (t.powf(2.0 * h - 1.0) - sg * (t - s).abs().powf(2.0 * h - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fbm_unit_diagonal() {
        let k = KernelSpec::fbm(0.7).unwrap();
        assert_relative_eq!(k.eval(1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn zero_time_column_vanishes() {
        for spec in KernelSpec::canonical_examples() {
            let v = spec.eval(3.2, 0.0).unwrap();
            assert!(
                v.abs() < 1e-12,
                "{spec}: R(3.2, 0) = {v}"
            );
        }
    }

    #[test]
    fn sub_fbm_unit_diagonal() {
        let k = KernelSpec::sub_fbm(0.75).unwrap();
        assert_relative_eq!(
            k.eval(1.0, 1.0).unwrap(),
            2.0 - 2f64.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn sub_fbm_phi_closed_form() {
        let k = KernelSpec::sub_fbm(0.75).unwrap();
        // -H(2H-1)(s+t)^{2H-2} at s = t = 1
        let expected = -0.375 / 2f64.sqrt();
        assert_relative_eq!(k.phi(1.0, 1.0 + 1e-12).unwrap(), expected, epsilon = 1e-6);
        assert_relative_eq!(expected, -0.265165, epsilon = 1e-6);
    }

    #[test]
    fn phi_vanishes_for_reference_kernel() {
        let k = KernelSpec::fbm(0.3).unwrap();
        for (s, t) in [(0.5, 1.7), (2.0, 0.1), (3.0, 3.5)] {
            assert_eq!(k.phi(s, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn diagonal_is_an_error_for_derivatives() {
        let k = KernelSpec::fbm(0.7).unwrap();
        assert!(matches!(
            k.dr_dt(1.0, 1.0),
            Err(Error::DiagonalSingularity { .. })
        ));
        assert!(matches!(
            k.phi(2.0, 2.0),
            Err(Error::DiagonalSingularity { .. })
        ));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(KernelSpec::fbm(0.0).is_err());
        assert!(KernelSpec::fbm(1.0).is_err());
        assert!(KernelSpec::bi_fbm(0.9, 1.5).is_err()); // HK >= 1
        assert!(KernelSpec::new(KernelFamily::OdlyzkoType { k: 1.0 }).is_err());
        assert!(KernelSpec::new(KernelFamily::WeightedFBm { a: -0.5, b: 0.7 }).is_err()); // |b| >= a+1
    }

    #[test]
    fn half_exponent_guard() {
        let k = KernelSpec::fbm(0.5).unwrap(); // kernel itself is defined
        assert!(k.require_offcritical_exponent().is_err());
        let k = KernelSpec::new(KernelFamily::TalarczykMax { gamma: 0.9 }).unwrap();
        assert!(k.require_offcritical_exponent().is_ok());
    }

    #[test]
    fn weighted_kernel_matches_reduced_form() {
        // spot values against direct quadrature of the defining integral
        let spec = KernelSpec::new(KernelFamily::WeightedFBm { a: 0.5, b: 0.25 }).unwrap();
        for (s, t) in [(1.0, 2.0), (0.5, 3.0), (2.0, 2.0)] {
            let mut f = |u: f64, _da: f64, _db: f64| {
                u.powf(0.5) * ((t - u).powf(0.25) + (s - u).powf(0.25))
            };
            let direct = quad::tanh_sinh(&mut f, 0.0, s.min(t), 1e-13).value;
            assert_relative_eq!(spec.eval(s, t).unwrap(), direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn dr_dt_matches_finite_differences() {
        let h = 1e-6;
        for spec in KernelSpec::canonical_examples() {
            for (s, t) in [(0.7, 1.9), (2.5, 0.9), (0.3, 3.0)] {
                let cf = spec.dr_dt(s, t).unwrap();
                let fd =
                    (spec.eval(s, t + h).unwrap() - spec.eval(s, t - h).unwrap()) / (2.0 * h);
                assert_relative_eq!(cf, fd, max_relative = 1e-4, epsilon = 1e-7);
            }
        }
    }
}
