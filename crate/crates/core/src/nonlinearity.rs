//! The critical exponential reaction term and its escape-time integral.
//!
//! The reaction is the even, convex, C^1 function
//!
//! ```text
//! f(s) = e^{s²} / |s|³          for |s| > β,
//! f(s) = α s²                   for |s| ≤ β,
//! ```
//!
//! with β = sqrt(5/2) and α = e^{β²}/β⁵. Matching value and slope at ±β
//! forces exactly β² = 5/2; both matching identities are regression-tested
//! to near machine precision.
//!
//! Alongside f the model needs its escape integral F(s) = ∫_s^∞ dσ/f(σ),
//! which has closed forms on both branches:
//!
//! ```text
//! F(s) = (s² + 1) e^{-s²} / 2                 for s ≥ β,
//! F(s) = F(β) + (1/s - 1/β)/α                 for 0 < s < β,
//! ```
//!
//! (differentiate the first line to recover -1/f). The inverse F^{-1} and
//! the composition g(t) = f(F^{-1}(t)) are evaluated in forms that never
//! exponentiate large numbers: on the exponential branch the substitution
//! w = s² turns F(s) = t into w - log(w+1) = -log(2t), and g(t) collapses
//! to (s²+1)/(2 t s³).

use crate::error::{Error, Result};

/// Reaction term with precomputed matching constants.
#[derive(Debug, Clone, Copy)]
pub struct Nonlinearity {
    /// Quadratic-branch coefficient, e^{5/2} / (5/2)^{5/2}.
    pub alpha: f64,
    /// Branch switch point, sqrt(5/2).
    pub beta: f64,
    /// Cached F(β) = 7 e^{-5/2} / 4.
    pub big_f_beta: f64,
}

impl Default for Nonlinearity {
    fn default() -> Self {
        Self::new()
    }
}

impl Nonlinearity {
    /// Largest |s| at which e^{s²} is evaluated; beyond it `f` reports
    /// `RangeOverflow`. 700 keeps e^{s²} below the f64 overflow threshold
    /// with margin for the polynomial factors.
    pub fn overflow_clamp() -> f64 {
        700f64.sqrt()
    }

    pub fn new() -> Self {
        let beta = (2.5f64).sqrt();
        let alpha = 2.5f64.exp() / 2.5f64.powf(2.5);
        let big_f_beta = (beta * beta + 1.0) * (-beta * beta).exp() / 2.0;
        Nonlinearity {
            alpha,
            beta,
            big_f_beta,
        }
    }

    /// Reaction value. Even in s; zero only at s = 0.
    pub fn f(&self, s: f64) -> Result<f64> {
        let a = s.abs();
        if a > Self::overflow_clamp() {
            return Err(Error::RangeOverflow { value: s });
        }
        if a <= self.beta {
            Ok(self.alpha * s * s)
        } else {
            Ok((s * s).exp() / (a * a * a))
        }
    }

    /// Reaction value with overflow saturated to +∞ instead of an error.
    /// Norm integrands use this: a saturated value feeds the divergence
    /// detector, which is the correct verdict for the integral.
    pub(crate) fn f_inf(&self, s: f64) -> f64 {
        let a = s.abs();
        if a <= self.beta {
            self.alpha * s * s
        } else if a > Self::overflow_clamp() {
            f64::INFINITY
        } else {
            (s * s).exp() / (a * a * a)
        }
    }

    /// Derivative f'. Odd in s; continuous across ±β.
    pub fn f_prime(&self, s: f64) -> Result<f64> {
        let a = s.abs();
        if a > Self::overflow_clamp() {
            return Err(Error::RangeOverflow { value: s });
        }
        if a <= self.beta {
            Ok(2.0 * self.alpha * s)
        } else {
            let v = (s * s).exp() * (2.0 * s * s - 3.0) / (s * s * s * s);
            Ok(v * s.signum())
        }
    }

    /// Escape integral F(s) = ∫_s^∞ dσ/f(σ) for s > 0.
    ///
    /// Uses the closed forms above; e^{-s²} underflows gracefully to 0 for
    /// very large s, matching the true limit F(∞) = 0.
    pub fn big_f(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Err(Error::Domain {
                what: "escape integral F requires s > 0",
                value: s,
            });
        }
        if s >= self.beta {
            Ok((s * s + 1.0) * (-s * s).exp() / 2.0)
        } else {
            Ok(self.big_f_beta + (1.0 / s - 1.0 / self.beta) / self.alpha)
        }
    }

    /// Inverse of the escape integral: the unique s > 0 with F(s) = t.
    ///
    /// Polynomial branch (t ≥ F(β)) inverts in closed form. Exponential
    /// branch solves w - log(w+1) = -log(2t) for w = s² by fixed-point
    /// warm-up plus Newton; the formulation avoids exp entirely, so it is
    /// stable down to t near the smallest positive double.
    ///
    /// Precondition: t > 0 (checked by assertion; F is a bijection of
    /// (0, ∞) onto itself, so no error path exists for valid input).
    pub fn big_f_inv(&self, t: f64) -> f64 {
        assert!(t > 0.0, "big_f_inv requires t > 0, got {t}");
        if t >= self.big_f_beta {
            // 1/s = 1/β + α (t - F(β))
            1.0 / (1.0 / self.beta + self.alpha * (t - self.big_f_beta))
        } else {
            let l = -(2.0 * t).ln();
            // fixed point w = l + log(w+1) converges monotonically from l
            let mut w = l + (l + 1.0).ln();
            for _ in 0..4 {
                w = l + (w + 1.0).ln();
            }
            for _ in 0..40 {
                let h = w - (w + 1.0).ln() - l;
                let hp = w / (w + 1.0);
                let step = h / hp;
                w -= step;
                if step.abs() <= 1e-15 * w {
                    break;
                }
            }
            w.sqrt()
        }
    }

    /// g(t) = f(F^{-1}(t)), the reaction seen through escape time.
    ///
    /// On the exponential branch e^{s²} = (s²+1)/(2t), so
    /// g(t) = (s²+1)/(2 t s³): no large exponentials appear and g is
    /// evaluable for all t > 0.
    pub fn g(&self, t: f64) -> f64 {
        assert!(t > 0.0, "g requires t > 0, got {t}");
        let s = self.big_f_inv(t);
        if t >= self.big_f_beta {
            self.alpha * s * s
        } else {
            (s * s + 1.0) / (2.0 * t * s * s * s)
        }
    }
}
