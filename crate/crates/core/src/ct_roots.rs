//! Root algebra of the CT-uniform density `g(u)`.
//!
//! Closed forms for integrals of `polynomial · log g` and `polynomial / g`
//! all reduce to the roots `p, q` of `g` and the kernel
//! `L(x) = log(x / (x − 1))`. When `r² < 0` the roots are complex
//! conjugates; evaluating in complex arithmetic with the principal
//! logarithm gives real results up to rounding.

use num_complex::Complex64 as C;

use crate::ct_model::CtParams;
use crate::error::{CtError, Result};

/// Below this `|r|` the root formulas lose too many digits to cancellation.
pub const R_MIN: f64 = 1e-6;

const IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct Aux {
    pub lambda1: f64,
    pub lambda2: f64,
    pub r: C,
    pub p: C,
    pub q: C,
}

impl Aux {
    /// `r = √(λ₁² + λ₂² + λ₁λ₂ − 3λ₁)`, `p, q = (λ₁ − λ₂ ± r) / (3(1 − λ₂))`.
    pub fn new(params: &CtParams) -> Result<Aux> {
        let (l1, l2) = (params.lambda1(), params.lambda2());
        if l2 == 1.0 {
            return Err(CtError::Degenerate("lambda2 = 1 has no cubic term"));
        }
        let r = C::new(params.r_squared(), 0.0).sqrt();
        if r.norm() < R_MIN {
            return Err(CtError::Degenerate("g has a double root (r ≈ 0)"));
        }
        let d = 3.0 * (1.0 - l2);
        Ok(Aux {
            lambda1: l1,
            lambda2: l2,
            r,
            p: (C::new(l1 - l2, 0.0) + r) / d,
            q: (C::new(l1 - l2, 0.0) - r) / d,
        })
    }

    pub fn is_complex(&self) -> bool {
        self.r.im != 0.0
    }

    /// `(1/(2r))·{P(p)L(p) − P(q)L(q)}` for a polynomial `P` with `P(0) = 0`.
    pub fn half_diff(&self, poly: impl Fn(C) -> C) -> C {
        (poly(self.p) * log_ratio(self.p) - poly(self.q) * log_ratio(self.q)) / (2.0 * self.r)
    }
}

/// `L(x) = log(x / (x − 1))` on the principal branch, with `L(0)` taken as 0
/// (it only ever appears multiplied by a positive power of `x`).
pub fn log_ratio(x: C) -> C {
    if x == C::new(0.0, 0.0) {
        return C::new(0.0, 0.0);
    }
    (x / (x - 1.0)).ln()
}

/// Real part of a complex-branch result, refusing values whose imaginary
/// residue is not rounding noise.
pub fn real_part(z: C) -> Result<f64> {
    if z.im.abs() <= IMAG_TOL * z.re.abs().max(1.0) && z.re.is_finite() {
        Ok(z.re)
    } else {
        Err(CtError::Degenerate("imaginary residue in closed form"))
    }
}

/// `∫₀¹ du / g(u)`, finite only when `g > 0` on `[0, 1]`.
///
/// The textbook `(1/r)·artanh(r/λ₂)` is valid for real `r`; for `r² < 0`
/// the analytic continuation is `atan2(s, λ₂)/s` with `s = √(−r²)`, which
/// stays on the right branch when `λ₂ ≤ 0`.
pub fn inv_g_integral(lambda1: f64, lambda2: f64) -> f64 {
    let r2 = lambda1 * lambda1 + lambda2 * lambda2 + lambda1 * lambda2 - 3.0 * lambda1;
    if r2 > 0.0 {
        let r = r2.sqrt();
        let z = r / lambda2;
        if z.abs() < 1.0 {
            z.atanh() / r
        } else {
            f64::INFINITY
        }
    } else if r2 < 0.0 {
        let s = (-r2).sqrt();
        s.atan2(lambda2) / s
    } else if lambda2 > 0.0 {
        1.0 / lambda2
    } else {
        f64::INFINITY
    }
}

/// `(1/r)·artanh(r/λ₂)` evaluated literally in complex arithmetic; this is
/// the printed expression and differs from [`inv_g_integral`] when `λ₂ < 0`.
pub fn inv_g_integral_printed(lambda1: f64, lambda2: f64) -> C {
    let r2 = lambda1 * lambda1 + lambda2 * lambda2 + lambda1 * lambda2 - 3.0 * lambda1;
    let r = C::new(r2, 0.0).sqrt();
    (r / lambda2).atanh() / r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_unit, QuadratureSpec};

    #[test]
    fn roots_are_zeros_of_g() {
        for (l1, l2) in [(0.4, 0.6), (1.0, 0.0), (0.2, 0.3), (0.9, -0.5), (1.5, 1.0 - 1e-3)] {
            let p = CtParams::new(l1, l2).unwrap();
            let a = Aux::new(&p).unwrap();
            let g = |x: C| l1 + 2.0 * (l2 - l1) * x + 3.0 * (1.0 - l2) * x * x;
            assert!(g(a.p).norm() < 1e-10, "{l1},{l2}");
            assert!(g(a.q).norm() < 1e-10);
            assert!((a.r.norm_sqr() - p.r_squared().abs()).abs() < 1e-15);
        }
        assert!(CtParams::new(1.0, 0.0).unwrap().r_squared() == -2.0);
    }

    #[test]
    fn degenerate_cases_refuse() {
        assert!(Aux::new(&CtParams::new(0.5, 1.0).unwrap()).is_err());
        assert!(Aux::new(&CtParams::new(0.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn inverse_integral_on_both_branches() {
        let spec = QuadratureSpec::default();
        for (l1, l2) in [
            (0.05, -0.4),
            (0.5, 0.0),
            (0.4, 0.6),
            (0.9, -0.9),
            (0.1, 0.9),
            (1.0, 0.0),
            (1.5, 0.5),
            (0.5, 1.5),
            (0.0001, 0.3),
        ] {
            let g = |u: f64| l1 + 2.0 * (l2 - l1) * u + 3.0 * (1.0 - l2) * u * u;
            let oracle = integrate_unit(|u| 1.0 / g(u), &spec).value;
            let closed = inv_g_integral(l1, l2);
            assert!(
                (closed - oracle).abs() < 1e-8 * oracle.max(1.0),
                "{l1},{l2}: {closed} vs {oracle}"
            );
        }
        assert!(inv_g_integral(0.0, 0.5).is_infinite());
        assert!(inv_g_integral(0.0, 0.0).is_infinite());
    }

    #[test]
    fn printed_artanh_breaks_for_negative_lambda2() {
        let closed = inv_g_integral(0.5, -0.5);
        let printed = inv_g_integral_printed(0.5, -0.5);
        assert!((printed.re - closed).abs() > 0.1);
        let ok = inv_g_integral_printed(0.4, 0.6);
        assert!((ok.re - inv_g_integral(0.4, 0.6)).abs() < 1e-12);
    }
}
