//! Gini's mean difference, its CT decomposition, energy distance and the
//! CT Gini gap.

use serde::Serialize;

use crate::baselines::{Baseline, Family};
use crate::ct_model::{make_one_param_cubic, make_quadratic, Component, CtDistribution, CtKind, CtParams, CubicMap};
use crate::dist::Continuous;
use crate::error::{CtError, Result};
use crate::quadrature::{integrate_unit, Estimate, QuadratureSpec};

fn finite_mean<D: Continuous + ?Sized>(dist: &D) -> Result<()> {
    if dist.has_finite_mean() {
        Ok(())
    } else {
        Err(CtError::InfiniteMean(dist.label()))
    }
}

/// `GMD = 2∫F(1 − F)dx = E|X₁ − X₂|`.
pub fn gmd<D: Continuous + ?Sized>(dist: &D, spec: &QuadratureSpec) -> Result<Estimate> {
    finite_mean(dist)?;
    Ok(integrate_unit(
        |u| 2.0 * u * (1.0 - u) / dist.density_at_quantile(u),
        spec,
    ))
}

/// `2∫ φ(F(x)) dx` for a baseline, as `2∫₀¹ φ(u)/f(F⁻¹(u)) du`.
fn baseline_integral<P: Fn(f64) -> f64>(baseline: &Baseline, poly: P, spec: &QuadratureSpec) -> Estimate {
    integrate_unit(|u| 2.0 * poly(u) / baseline.dq(u), spec)
}

/// Polynomial coefficients of the cross term in the GMD decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GmdConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl GmdConstants {
    pub fn new(params: &CtParams) -> Self {
        let (l1, l2) = (params.lambda1(), params.lambda2());
        GmdConstants {
            a: l1 * (1.0 - l1),
            b: l2 - l1,
            c: l2 * (1.0 - l2) - 2.0 * l1 * (l2 - l1),
            d: -((l2 - l1).powi(2) + 2.0 * l1 * (1.0 - l2)),
            e: -2.0 * (1.0 - l2) * (l2 - l1),
        }
    }

    pub fn poly(&self, u: f64) -> f64 {
        u * (self.a + u * (self.b + u * (self.c + u * (self.d + u * self.e))))
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.a, self.b, self.c, self.d, self.e]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GmdDecomposition {
    /// Direct GMD of the CT distribution.
    pub total: f64,
    /// `λ₁²·GMD(F)`
    pub term_f: f64,
    /// `(1 − λ₂)²·GMD(F_max)`
    pub term_fmax: f64,
    pub r_star: f64,
    pub constants: GmdConstants,
    pub decomposed: f64,
    pub error_bound: f64,
    pub converged: bool,
}

impl GmdDecomposition {
    /// `+1` when the two-term bound is a lower bound, `-1` when it is an
    /// upper bound.
    pub fn bound_direction(&self) -> i8 {
        if self.r_star >= 0.0 {
            1
        } else {
            -1
        }
    }
}

pub fn gmd_ct_decomposed(ct: &CtDistribution, spec: &QuadratureSpec) -> Result<GmdDecomposition> {
    finite_mean(ct)?;
    let b = ct.baseline;
    let (l1, l2) = (ct.params.lambda1(), ct.params.lambda2());
    let k = GmdConstants::new(&ct.params);
    let direct = gmd(ct, spec)?;
    let g_f = gmd(&b, spec)?;
    let g_max = gmd(&Component::Max.over(b), spec)?;
    let r_star = baseline_integral(&b, |u| k.poly(u), spec);
    let sum = Estimate::combine(&[(l1 * l1, g_f), ((1.0 - l2).powi(2), g_max), (1.0, r_star)]);
    Ok(GmdDecomposition {
        total: direct.value,
        term_f: l1 * l1 * g_f.value,
        term_fmax: (1.0 - l2).powi(2) * g_max.value,
        r_star: r_star.value,
        constants: k,
        decomposed: sum.value,
        error_bound: sum.error_bound + direct.error_bound,
        converged: sum.converged && direct.converged,
    })
}

/// Cross term of the quadratic reduction (`λ₁ = 1 + λ`, `λ₂ = 1`) three ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticCrossTerm {
    pub lambda: f64,
    /// The general cross term evaluated at `(1 + λ, 1)`.
    pub r_star: f64,
    /// `2λ²∫F²(1 − F²)dx − 2λ(1 + λ)∫u(1 − u)(1 + 2u)/f(F⁻¹(u))du`.
    pub corrected: f64,
    /// `2λ²∫F²(1 − F)²dx − λ(1 + λ)∫u(1 − u)(1 + 2u)/f(F⁻¹(u))du`.
    pub printed: f64,
    /// Direct GMD of the quadratic transmuted law.
    pub gmd_direct: f64,
    /// `(1 + λ)²GMD(F) + λ²GMD(F_{2:2}) − 2λ(1 + λ)∫…`, `F_{2:2} = F²`.
    pub gmd_corrected: f64,
    /// `(1 + λ)²GMD(F) + λ²GMD(F_max) − λ(1 + λ)∫…`, `F_max = F³`.
    pub gmd_printed: f64,
}

pub fn quadratic_cross_term(baseline: &Baseline, lambda: f64, spec: &QuadratureSpec) -> Result<QuadraticCrossTerm> {
    let quad = make_quadratic(*baseline, lambda)?;
    finite_mean(&quad)?;
    let b = *baseline;
    let k = GmdConstants::new(&quad.params);
    let r_star = baseline_integral(&b, |u| k.poly(u), spec).value;
    // baseline_integral carries a factor 2
    let tail = baseline_integral(&b, |u| u * (1.0 - u) * (1.0 + 2.0 * u), spec).value / 2.0;
    let sq_sq = baseline_integral(&b, |u| u * u * (1.0 - u * u), spec).value / 2.0;
    let sq_bar = baseline_integral(&b, |u| (u * (1.0 - u)).powi(2), spec).value / 2.0;
    let (l, lp) = (lambda, 1.0 + lambda);
    let g_f = gmd(&b, spec)?.value;
    let g_22 = gmd(&Component::Beta21.over(b), spec)?.value;
    let g_33 = gmd(&Component::Max.over(b), spec)?.value;
    Ok(QuadraticCrossTerm {
        lambda,
        r_star,
        corrected: 2.0 * l * l * sq_sq - 2.0 * l * lp * tail,
        printed: 2.0 * l * l * sq_bar - l * lp * tail,
        gmd_direct: gmd(&quad, spec)?.value,
        gmd_corrected: lp * lp * g_f + l * l * g_22 - 2.0 * l * lp * tail,
        gmd_printed: lp * lp * g_f + l * l * g_33 - l * lp * tail,
    })
}

/// GMD of the one-parameter cubic: direct versus the closed expression with
/// its printed cross-term polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneParamGmd {
    pub lambda: f64,
    pub direct: f64,
    pub decomposed: f64,
    pub printed: f64,
}

pub fn one_param_gmd(baseline: &Baseline, lambda: f64, spec: &QuadratureSpec) -> Result<OneParamGmd> {
    let ct = make_one_param_cubic(*baseline, lambda)?;
    let d = gmd_ct_decomposed(&ct, spec)?;
    let l = lambda;
    let poly = |u: f64| {
        (1.0 + l) * u + 2.0 * u * u - (5.0 + 3.0 * l * l) * u.powi(3) + (6.0 * l + 2.0) * u.powi(4)
            - 4.0 * l * u.powi(5)
    };
    let cross = baseline_integral(baseline, poly, spec).value / 2.0;
    Ok(OneParamGmd {
        lambda,
        direct: d.total,
        decomposed: d.decomposed,
        printed: d.term_f + d.term_fmax - 2.0 * l * cross,
    })
}

/// Power baseline `F(x) = (x/b)^c`: every term is rational in `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerGmd {
    pub r_star: f64,
    /// `GMD(F_max) = 2b(1/(3c + 1) − 1/(6c + 1))`.
    pub corrected: f64,
    /// With `GMD(F_max)` read as `2b(1/(3c+1) − 3/(4c+1) + 3/(5c+1) − 1/(6c+1))`.
    pub printed: f64,
}

pub fn power_r_star(b: f64, c: f64, params: &CtParams) -> f64 {
    let k = GmdConstants::new(params).as_array();
    2.0 * b
        * k.iter()
            .enumerate()
            .map(|(j, a)| a / ((j as f64 + 1.0) * c + 1.0))
            .sum::<f64>()
}

pub fn gmd_power_example(b: f64, c: f64, params: &CtParams) -> Result<PowerGmd> {
    Baseline::power(b, c)?;
    let (l1, l2) = (params.lambda1(), params.lambda2());
    let g_f = 2.0 * b * c / ((c + 1.0) * (2.0 * c + 1.0));
    let r = |k: f64| 1.0 / (k * c + 1.0);
    let g_max = 2.0 * b * (r(3.0) - r(6.0));
    let g_max_printed = 2.0 * b * (r(3.0) - 3.0 * r(4.0) + 3.0 * r(5.0) - r(6.0));
    let r_star = power_r_star(b, c, params);
    let base = l1 * l1 * g_f + r_star;
    Ok(PowerGmd {
        r_star,
        corrected: base + (1.0 - l2).powi(2) * g_max,
        printed: base + (1.0 - l2).powi(2) * g_max_printed,
    })
}

/// A box `[λ₁ range] × [λ₂ range]` where the cross term is claimed to keep
/// one sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignBox {
    pub lambda1: (f64, f64),
    pub lambda2: (f64, f64),
    /// `+1` for `R* ≥ 0`, `-1` for `R* ≤ 0`.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignBoxReport {
    pub region: SignBox,
    pub checked: usize,
    pub skipped_invalid: usize,
    /// `(λ₁, λ₂, R*)` for every grid point with the wrong sign.
    pub violations: Vec<(f64, f64, f64)>,
}

pub const POWER_SIGN_BOXES: [SignBox; 2] = [
    SignBox {
        lambda1: (0.0, 0.8),
        lambda2: (0.2, 1.0),
        sign: 1,
    },
    SignBox {
        lambda1: (0.8, 1.0),
        lambda2: (-1.0, 0.2),
        sign: -1,
    },
];

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Checks the sign of the power-baseline cross term on an `n × n` grid
/// spanning each closed box, skipping parameter pairs with a negative density.
pub fn power_sign_regions(b: f64, c: f64, n: usize, boxes: &[SignBox]) -> Vec<SignBoxReport> {
    boxes
        .iter()
        .map(|bx| {
            let mut rep = SignBoxReport {
                region: *bx,
                checked: 0,
                skipped_invalid: 0,
                violations: vec![],
            };
            for &l1 in &linspace(bx.lambda1.0, bx.lambda1.1, n) {
                for &l2 in &linspace(bx.lambda2.0, bx.lambda2.1, n) {
                    let Ok(p) = CtParams::new(l1, l2) else {
                        rep.skipped_invalid += 1;
                        continue;
                    };
                    rep.checked += 1;
                    let r = power_r_star(b, c, &p);
                    if r * f64::from(bx.sign) < 0.0 {
                        rep.violations.push((l1, l2, r));
                    }
                }
            }
            rep
        })
        .collect()
}

/// `∫(F₁ − F₂)²dx` for two distributions on the same support.
///
/// The integral is taken in the quantile measure of whichever of the two
/// has the heavier upper tail.
pub fn energy_distance<A, B>(f1: &A, f2: &B, spec: &QuadratureSpec) -> Result<Estimate>
where
    A: Continuous + ?Sized,
    B: Continuous + ?Sized,
{
    let (s1, s2) = (f1.support(), f2.support());
    if s1.lo != s2.lo || s1.hi != s2.hi {
        return Err(CtError::Config(format!(
            "energy distance needs a common support, got ({}, {}) and ({}, {})",
            s1.lo, s1.hi, s2.lo, s2.hi
        )));
    }
    let far = 1.0 - 1e-9;
    let ref_is_first = f1.quantile(far) >= f2.quantile(far);
    Ok(integrate_unit(
        |u| {
            if ref_is_first {
                let d = u - f2.cdf(f1.quantile(u));
                d * d / f1.density_at_quantile(u)
            } else {
                let d = f1.cdf(f2.quantile(u)) - u;
                d * d / f2.density_at_quantile(u)
            }
        },
        spec,
    ))
}

/// Energy distance between two transforms of one baseline, in the
/// baseline's quantile measure.
pub fn energy_distance_maps(baseline: &Baseline, m1: &CubicMap, m2: &CubicMap, spec: &QuadratureSpec) -> Estimate {
    integrate_unit(
        |u| {
            let d = m1.cdf(u) - m2.cdf(u);
            d * d / baseline.dq(u)
        },
        spec,
    )
}

/// Weights of the energy-distance form of the CT Gini gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CtgWeights {
    pub eta1: f64,
    pub eta2: f64,
}

impl CtgWeights {
    pub fn general(params: &CtParams) -> Result<Self> {
        let (l1, l2) = (params.lambda1(), params.lambda2());
        if (1.0 - 2.0 * l1).abs() < 1e-12 {
            return Err(CtError::Degenerate("energy weights undefined at lambda1 = 1/2"));
        }
        let eta1 = (4.0 * l1 - 2.0 * l2 - 3.0 * l1 * l1) / (1.0 - 2.0 * l1);
        let eta2 = ((26.0 * l2 - 20.0 * l1 - 6.0 * l2 * l2) - 3.0 * eta1 * (4.0 * l2 - 8.0)) / (9.0 * (2.0 * l2 - 3.0));
        Ok(CtgWeights { eta1, eta2 })
    }

    pub fn one_param(lambda: f64) -> Result<Self> {
        let den = 1.0 + 2.0 * lambda;
        if den.abs() < 1e-12 {
            return Err(CtError::Degenerate("energy weights undefined at lambda = -1/2"));
        }
        let eta1 = (3.0 * lambda * lambda + 2.0) / den;
        let eta2 = ((34.0 * lambda + 6.0 * lambda * lambda) + 12.0 * eta1 * (1.0 + lambda)) / (9.0 * den);
        Ok(CtgWeights { eta1, eta2 })
    }

    /// Weights matching the parametrization of `ct`.
    pub fn for_distribution(ct: &CtDistribution) -> Result<Self> {
        match (ct.kind, ct.lambda) {
            (CtKind::OneParamCubic, Some(l)) => Self::one_param(l),
            _ => Self::general(&ct.params),
        }
    }
}

/// `GMD(F_CT) − λ₁GMD(F) − (λ₂ − λ₁)/3·GMD(F_{2:3}) − (3 − λ₂ − 2λ₁)/3·GMD(F_max)`,
/// as a single integral.
pub fn ctg(ct: &CtDistribution, spec: &QuadratureSpec) -> Result<Estimate> {
    finite_mean(ct)?;
    let g = ct.params.map();
    let [w1, w2, w3] = ct.params.component_weights();
    let gap = |m: &CubicMap, u: f64| {
        let y = m.cdf(u);
        y * (1.0 - y)
    };
    Ok(baseline_integral(
        &ct.baseline,
        |u| gap(&g, u) - w1 * u * (1.0 - u) - w2 * gap(&CubicMap::MEDIAN3, u) - w3 * gap(&CubicMap::MAX3, u),
        spec,
    ))
}

/// `η₁CD(F, F_CT) + η₂CD(F_max, F_CT) + (1 − η₁ − η₂)CD(F_{2:3}, F_CT)`.
pub fn ctg_via_energy(ct: &CtDistribution, spec: &QuadratureSpec) -> Result<Estimate> {
    finite_mean(ct)?;
    let w = CtgWeights::for_distribution(ct)?;
    let g = ct.params.map();
    let b = &ct.baseline;
    Ok(Estimate::combine(&[
        (w.eta1, energy_distance_maps(b, &CubicMap::IDENTITY, &g, spec)),
        (w.eta2, energy_distance_maps(b, &CubicMap::MAX3, &g, spec)),
        (
            1.0 - w.eta1 - w.eta2,
            energy_distance_maps(b, &CubicMap::MEDIAN3, &g, spec),
        ),
    ]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CtgReport {
    pub direct: Estimate,
    pub weights: Option<CtgWeights>,
    pub via_energy: Option<Estimate>,
}

/// Direct value always; energy form whenever its weights exist.
pub fn ctg_report(ct: &CtDistribution, spec: &QuadratureSpec) -> Result<CtgReport> {
    let direct = ctg(ct, spec)?;
    let weights = CtgWeights::for_distribution(ct).ok();
    let via_energy = match weights {
        Some(_) => Some(ctg_via_energy(ct, spec)?),
        None => None,
    };
    Ok(CtgReport {
        direct,
        weights,
        via_energy,
    })
}

/// Closed-form GMD of a power baseline.
pub fn power_gmd(baseline: &Baseline) -> Option<f64> {
    match baseline.family() {
        Family::Power { b, c } => Some(2.0 * b * c / ((c + 1.0) * (2.0 * c + 1.0))),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ct_model::make_ct;
    use crate::divergences::over_uniform;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn gmd_examples() {
        let u = gmd(&Baseline::uniform(), &spec()).unwrap().value;
        assert!((u - 1.0 / 3.0).abs() < 1e-12);
        let w = gmd(&over_uniform(CubicMap::MAX3, "w"), &spec()).unwrap().value;
        assert!((w - 3.0 / 14.0).abs() < 1e-12);
        let e = gmd(&Baseline::exponential(1.0).unwrap(), &spec()).unwrap().value;
        assert!((e - 1.0).abs() < 1e-9);
        let err = gmd(&Baseline::pareto(1.0).unwrap(), &spec()).unwrap_err();
        assert!(matches!(err, CtError::InfiniteMean(_)));
    }

    #[test]
    fn decomposition_examples() {
        let one = make_ct(Baseline::uniform(), CtParams::new(1.0, 1.0).unwrap());
        let d = gmd_ct_decomposed(&one, &spec()).unwrap();
        assert!((d.total - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(d.r_star, 0.0);
        assert_eq!(d.constants.as_array(), [0.0; 5]);

        let half = make_ct(Baseline::uniform(), CtParams::new(0.5, 0.5).unwrap());
        let d = gmd_ct_decomposed(&half, &spec()).unwrap();
        let k = d.constants;
        assert_eq!([k.a, k.b, k.c, k.d, k.e], [0.25, 0.0, 0.25, -0.5, 0.0]);
        assert!((d.r_star - 0.175).abs() < 1e-12);
        let expected = 0.25 / 3.0 + 0.25 * 3.0 / 14.0 + 0.175;
        assert!((d.total - expected).abs() < 1e-10);
        assert!((d.total - d.decomposed).abs() < 1e-8);
        assert_eq!(d.bound_direction(), 1);
    }

    #[test]
    fn quadratic_cross_term_matches_corrected_form() {
        for b in [Baseline::uniform(), Baseline::exponential(1.0).unwrap()] {
            let q = quadratic_cross_term(&b, 0.5, &spec()).unwrap();
            assert!((q.r_star - q.corrected).abs() < 1e-9, "{q:?}");
            assert!((q.r_star - q.printed).abs() > 1e-3);
            assert!((q.gmd_direct - q.gmd_corrected).abs() < 1e-9);
            assert!((q.gmd_direct - q.gmd_printed).abs() > 1e-3);
        }
    }

    #[test]
    fn one_param_printed_polynomial_is_off() {
        let g = one_param_gmd(&Baseline::uniform(), 0.5, &spec()).unwrap();
        assert!((g.direct - g.decomposed).abs() < 1e-9);
        assert!((g.direct - g.printed).abs() > 1e-4);
    }

    #[test]
    fn power_example() {
        let one = CtParams::new(1.0, 1.0).unwrap();
        let p = gmd_power_example(2.0, 3.0, &one).unwrap();
        assert!((p.corrected - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(p.corrected, p.printed);
        assert!(power_r_star(2.0, 3.0, &CtParams::new(0.4, 0.6).unwrap()) >= 0.0);
        assert!(power_r_star(2.0, 3.0, &CtParams::new(0.9, -0.5).unwrap()) <= 0.0);

        let b = Baseline::power(2.0, 3.0).unwrap();
        let params = CtParams::new(0.3, -0.2).unwrap();
        let d = gmd_ct_decomposed(&make_ct(b, params), &spec()).unwrap();
        let p = gmd_power_example(2.0, 3.0, &params).unwrap();
        assert!((d.total - p.corrected).abs() < 1e-8);
        assert!((d.r_star - p.r_star).abs() < 1e-9);
        assert!((d.total - p.printed).abs() > 1e-3);
    }

    #[test]
    fn energy_examples() {
        let u = Baseline::uniform();
        assert_eq!(energy_distance(&u, &u, &spec()).unwrap().value, 0.0);
        let w = over_uniform(CubicMap::MAX3, "w");
        let cd = energy_distance(&u, &w, &spec()).unwrap().value;
        assert!((cd - 8.0 / 105.0).abs() < 1e-12);
        let m = over_uniform(CubicMap::MEDIAN3, "m");
        // ∫(u − 3u² + 2u³)² du
        let cd = energy_distance(&u, &m, &spec()).unwrap().value;
        assert!((cd - 1.0 / 210.0).abs() < 1e-12);
        let via_maps = energy_distance_maps(&u, &CubicMap::IDENTITY, &CubicMap::MEDIAN3, &spec()).value;
        assert!((cd - via_maps).abs() < 1e-14);
        assert!(energy_distance(&u, &Baseline::exponential(1.0).unwrap(), &spec()).is_err());
    }

    #[test]
    fn ctg_examples() {
        let one = make_ct(Baseline::uniform(), CtParams::new(1.0, 1.0).unwrap());
        assert!(ctg(&one, &spec()).unwrap().value.abs() < 1e-15);
        let half = make_ct(Baseline::uniform(), CtParams::new(0.5, 0.2).unwrap());
        assert!(ctg_via_energy(&half, &spec()).is_err());
        let r = ctg_report(&half, &spec()).unwrap();
        assert!(r.via_energy.is_none());
        // direct single integral agrees with the GMD combination
        let ct = make_ct(Baseline::exponential(1.0).unwrap(), CtParams::new(0.4, 0.6).unwrap());
        let [w1, w2, w3] = ct.params.component_weights();
        let b = ct.baseline;
        let combo = gmd(&ct, &spec()).unwrap().value
            - w1 * gmd(&b, &spec()).unwrap().value
            - w2 * gmd(&Component::Median.over(b), &spec()).unwrap().value
            - w3 * gmd(&Component::Max.over(b), &spec()).unwrap().value;
        assert!((ctg(&ct, &spec()).unwrap().value - combo).abs() < 1e-10);
    }

    #[test]
    fn weights() {
        let w = CtgWeights::general(&CtParams::new(0.4, 0.6).unwrap()).unwrap();
        assert!((w.eta1 - (1.6 - 1.2 - 0.48) / 0.2).abs() < 1e-12);
        let o = CtgWeights::one_param(0.0).unwrap();
        assert_eq!(o.eta1, 2.0);
        assert!((o.eta2 - 24.0 / 9.0).abs() < 1e-15);
        assert!(CtgWeights::one_param(-0.5).is_err());
    }
}
