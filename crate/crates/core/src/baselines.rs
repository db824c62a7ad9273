//! Parent distributions `F` that get transmuted.
//!
//! Each family supplies its CDF, PDF, quantile and a closed form for
//! `f(F⁻¹(u))`, the Jacobian every `u = F(x)` substitution needs.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::dist::{Continuous, Support};
use crate::error::{CtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Uniform,
    /// `F(x) = 1 − e^{−βx}`, `x > 0`.
    Exponential {
        beta: f64,
    },
    /// `F(x) = 1 − x^{−α}`, `x ≥ 1`.
    Pareto {
        alpha: f64,
    },
    /// `F(x) = (x/b)^c`, `0 < x < b`.
    Power {
        b: f64,
        c: f64,
    },
    /// Unit-scale Weibull, `F(x) = 1 − e^{−x^k}`.
    Weibull {
        k: f64,
    },
}

/// An immutable baseline distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Baseline {
    family: Family,
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CtError::ParamDomain {
            name: name.to_string(),
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

impl Baseline {
    pub fn uniform() -> Self {
        Baseline {
            family: Family::Uniform,
        }
    }

    pub fn exponential(beta: f64) -> Result<Self> {
        Ok(Baseline {
            family: Family::Exponential {
                beta: positive("beta", beta)?,
            },
        })
    }

    pub fn pareto(alpha: f64) -> Result<Self> {
        Ok(Baseline {
            family: Family::Pareto {
                alpha: positive("alpha", alpha)?,
            },
        })
    }

    pub fn power(b: f64, c: f64) -> Result<Self> {
        Ok(Baseline {
            family: Family::Power {
                b: positive("b", b)?,
                c: positive("c", c)?,
            },
        })
    }

    pub fn weibull(k: f64) -> Result<Self> {
        Ok(Baseline {
            family: Family::Weibull { k: positive("k", k)? },
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            Family::Uniform => "uniform",
            Family::Exponential { .. } => "exp",
            Family::Pareto { .. } => "pareto",
            Family::Power { .. } => "power",
            Family::Weibull { .. } => "weibull",
        }
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self.family {
            Family::Uniform => vec![],
            Family::Exponential { beta } => vec![("beta", beta)],
            Family::Pareto { alpha } => vec![("alpha", alpha)],
            Family::Power { b, c } => vec![("b", b), ("c", c)],
            Family::Weibull { k } => vec![("k", k)],
        }
    }

    /// `f(F⁻¹(u))` for `u ∈ (0, 1)`.
    pub fn density_at_quantile_checked(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(CtError::UnitDomain(u));
        }
        Ok(self.dq(u))
    }

    #[inline]
    pub(crate) fn dq(&self, u: f64) -> f64 {
        match self.family {
            Family::Uniform => 1.0,
            Family::Exponential { beta } => beta * (1.0 - u),
            Family::Pareto { alpha } => alpha * (1.0 - u).powf((alpha + 1.0) / alpha),
            Family::Power { b, c } => (c / b) * u.powf((c - 1.0) / c),
            Family::Weibull { k } => {
                let t = -(-u).ln_1p();
                k * t.powf((k - 1.0) / k) * (1.0 - u)
            }
        }
    }

    /// Inverse-transform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

impl Continuous for Baseline {
    fn pdf(&self, x: f64) -> f64 {
        if !self.support().contains(x) {
            return 0.0;
        }
        match self.family {
            Family::Uniform => 1.0,
            Family::Exponential { beta } => beta * (-beta * x).exp(),
            Family::Pareto { alpha } => alpha * x.powf(-alpha - 1.0),
            Family::Power { b, c } => c * x.powf(c - 1.0) / b.powf(c),
            Family::Weibull { k } => k * x.powf(k - 1.0) * (-x.powf(k)).exp(),
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let s = self.support();
        if x <= s.lo {
            return 0.0;
        }
        if x >= s.hi {
            return 1.0;
        }
        match self.family {
            Family::Uniform => x,
            Family::Exponential { beta } => -(-beta * x).exp_m1(),
            Family::Pareto { alpha } => 1.0 - x.powf(-alpha),
            Family::Power { b, c } => (x / b).powf(c),
            Family::Weibull { k } => -(-x.powf(k)).exp_m1(),
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self.family {
            Family::Uniform => u,
            Family::Exponential { beta } => -(-u).ln_1p() / beta,
            Family::Pareto { alpha } => (1.0 - u).powf(-1.0 / alpha),
            Family::Power { b, c } => b * u.powf(1.0 / c),
            Family::Weibull { k } => (-(-u).ln_1p()).powf(1.0 / k),
        }
    }

    fn support(&self) -> Support {
        match self.family {
            Family::Uniform => Support {
                lo: 0.0,
                hi: 1.0,
                lo_closed: true,
                hi_closed: true,
            },
            Family::Exponential { .. } | Family::Weibull { .. } => Support {
                lo: 0.0,
                hi: f64::INFINITY,
                lo_closed: false,
                hi_closed: false,
            },
            Family::Pareto { .. } => Support {
                lo: 1.0,
                hi: f64::INFINITY,
                lo_closed: true,
                hi_closed: false,
            },
            Family::Power { b, .. } => Support {
                lo: 0.0,
                hi: b,
                lo_closed: false,
                hi_closed: false,
            },
        }
    }

    fn density_at_quantile(&self, u: f64) -> f64 {
        self.dq(u)
    }

    fn has_finite_mean(&self) -> bool {
        match self.family {
            Family::Pareto { alpha } => alpha > 1.0,
            _ => true,
        }
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        let params = self.params();
        for (i, (k, v)) in params.iter().enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            write!(f, "{sep}{k}={v}")?;
        }
        Ok(())
    }
}

/// Build a baseline from a family identifier and named parameters.
///
/// Accepted identifiers: `uniform`, `exp` (or `exponential`), `pareto`,
/// `power`, `weibull`.
pub fn make_baseline(name: &str, params: &[(&str, f64)]) -> Result<Baseline> {
    let get = |key: &str| -> Result<f64> {
        params
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| CtError::MissingParam(key.to_string()))
    };
    let allowed: &[&str] = match name {
        "uniform" => &[],
        "exp" | "exponential" => &["beta"],
        "pareto" => &["alpha"],
        "power" => &["b", "c"],
        "weibull" => &["k"],
        _ => return Err(CtError::UnknownFamily(name.to_string())),
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
        return Err(CtError::Config(format!("family `{name}` has no parameter `{k}`")));
    }
    match name {
        "uniform" => Ok(Baseline::uniform()),
        "exp" | "exponential" => Baseline::exponential(get("beta")?),
        "pareto" => Baseline::pareto(get("alpha")?),
        "power" => Baseline::power(get("b")?, get("c")?),
        _ => Baseline::weibull(get("k")?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn families() -> Vec<Baseline> {
        vec![
            Baseline::uniform(),
            Baseline::exponential(2.0).unwrap(),
            Baseline::pareto(2.0).unwrap(),
            Baseline::power(2.0, 3.0).unwrap(),
            Baseline::power(1.5, 0.5).unwrap(),
            Baseline::weibull(1.5).unwrap(),
        ]
    }

    #[test]
    fn spot_values() {
        assert_eq!(Baseline::uniform().cdf(0.3), 0.3);
        let e = Baseline::exponential(2.0).unwrap();
        let x = e.quantile(1.0 - (-2.0f64).exp());
        assert!((x - 1.0).abs() < 1e-14);
        let p = make_baseline("power", &[("b", 2.0), ("c", 3.0)]).unwrap();
        assert!((p.cdf(1.0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn density_at_quantile_examples() {
        assert_eq!(Baseline::uniform().density_at_quantile_checked(0.7).unwrap(), 1.0);
        let e = Baseline::exponential(1.0).unwrap();
        assert!((e.density_at_quantile_checked(0.5).unwrap() - 0.5).abs() < 1e-15);
        // f(x) = c·x^(c−1)/b^c at x = F⁻¹(0.125) = 1 is 3/8.
        let p = Baseline::power(2.0, 3.0).unwrap();
        assert!((p.density_at_quantile_checked(0.125).unwrap() - 0.375).abs() < 1e-14);
        assert!(matches!(
            e.density_at_quantile_checked(1.0),
            Err(CtError::UnitDomain(_))
        ));
        assert!(e.density_at_quantile_checked(0.0).is_err());
    }

    #[test]
    fn quantile_round_trip_on_grid() {
        for b in families() {
            for i in 1..1000 {
                let u = i as f64 / 1000.0;
                let back = b.cdf(b.quantile(u));
                assert!((back - u).abs() < 1e-10, "{b} u={u} got {back}");
            }
        }
    }

    #[test]
    fn density_at_quantile_matches_pdf() {
        for b in families() {
            for i in 1..200 {
                let u = i as f64 / 200.0;
                let direct = b.pdf(b.quantile(u));
                let fast = b.density_at_quantile(u);
                assert!(
                    (direct - fast).abs() <= 1e-12 * direct.abs().max(1.0),
                    "{b} u={u}: {direct} vs {fast}"
                );
            }
        }
    }

    #[test]
    fn x_interior_round_trip() {
        let e = Baseline::exponential(1.0).unwrap();
        for x in [0.01, 0.5, 3.0, 10.0] {
            assert!((e.quantile(e.cdf(x)) - x).abs() < 1e-10);
        }
        let p = Baseline::pareto(3.0).unwrap();
        for x in [1.01, 2.0, 7.5] {
            assert!((p.quantile(p.cdf(x)) - x).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(make_baseline("gamma", &[]), Err(CtError::UnknownFamily(_))));
        assert!(matches!(
            make_baseline("exp", &[("beta", 0.0)]),
            Err(CtError::ParamDomain { .. })
        ));
        assert!(matches!(
            make_baseline("power", &[("b", 1.0)]),
            Err(CtError::MissingParam(_))
        ));
        assert!(make_baseline("weibull", &[("k", 1.0), ("beta", 2.0)]).is_err());
    }

    #[test]
    fn display_is_spec_string() {
        assert_eq!(Baseline::uniform().to_string(), "uniform");
        assert_eq!(Baseline::power(2.0, 3.0).unwrap().to_string(), "power:b=2,c=3");
        assert_eq!(Baseline::exponential(0.5).unwrap().to_string(), "exp:beta=0.5");
    }

    #[test]
    fn mean_finiteness() {
        assert!(!Baseline::pareto(1.0).unwrap().has_finite_mean());
        assert!(Baseline::pareto(2.0).unwrap().has_finite_mean());
    }
}
