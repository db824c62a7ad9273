//! KL, Jeffreys, χ² and symmetric χ² divergences.
//!
//! The generic evaluators integrate against the first argument's own
//! quantile, `∫₀¹ h(f₁/f₂ at Q₁(u)) du`, so no support bookkeeping is
//! needed. The closed forms are functions of `(λ₁, λ₂)` only, because every
//! CT/component divergence is free of the baseline.

use num_complex::Complex64 as C;
use serde::Serialize;

use crate::baselines::Baseline;
use crate::ct_model::{Component, Composed, CtParams, CubicMap};
use crate::ct_roots::{inv_g_integral, inv_g_integral_printed, log_ratio, real_part, Aux};
use crate::dist::Continuous;
use crate::error::{CtError, Result};
use crate::quadrature::{integrate_unit, Estimate, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceResult {
    /// `+∞` when the divergence does not exist.
    pub value: f64,
    pub method: Method,
    pub error_bound: f64,
    pub converged: bool,
    pub divergent: bool,
}

impl DivergenceResult {
    pub fn closed_form(value: f64) -> Self {
        DivergenceResult {
            value,
            method: Method::ClosedForm,
            error_bound: 0.0,
            converged: value.is_finite(),
            divergent: value == f64::INFINITY,
        }
    }

    fn divergent(method: Method) -> Self {
        DivergenceResult {
            value: f64::INFINITY,
            method,
            error_bound: f64::INFINITY,
            converged: false,
            divergent: true,
        }
    }
}

/// Turns a quadrature estimate of a non-negative divergence into a result.
///
/// A non-converged estimate whose value still moves when the endpoint clip
/// is widened a thousandfold is taken to be a non-integrable singularity.
fn classify(est: Estimate, spec: &QuadratureSpec, rerun: impl Fn(&QuadratureSpec) -> Estimate) -> DivergenceResult {
    if !est.value.is_finite() {
        return DivergenceResult::divergent(Method::Quadrature);
    }
    if !est.converged {
        let wide = QuadratureSpec {
            endpoint_eps: spec.endpoint_eps * 1e3,
            ..*spec
        };
        let other = rerun(&wide);
        if (other.value - est.value).abs() > 1e-6 * est.value.abs().max(1.0) {
            return DivergenceResult::divergent(Method::Quadrature);
        }
    }
    // Rounding can push an exact zero slightly negative.
    let value = if est.value < 0.0 && est.value > -1e-9 {
        0.0
    } else {
        est.value
    };
    DivergenceResult {
        value,
        method: Method::Quadrature,
        error_bound: est.error_bound,
        converged: est.converged,
        divergent: false,
    }
}

/// `f₂/f₁` at `x = Q₁(u)`.
fn inverse_ratio<A, B>(f1: &A, f2: &B, u: f64) -> f64
where
    A: Continuous + ?Sized,
    B: Continuous + ?Sized,
{
    let d1 = f1.density_at_quantile(u);
    let d2 = f2.pdf(f1.quantile(u));
    d2 / d1
}

/// `KL(f₁, f₂) = ∫ f₁ log(f₁/f₂)`.
pub fn kl<A, B>(f1: &A, f2: &B, spec: &QuadratureSpec) -> DivergenceResult
where
    A: Continuous + ?Sized,
    B: Continuous + ?Sized,
{
    let run = |s: &QuadratureSpec| integrate_unit(|u| -inverse_ratio(f1, f2, u).ln(), s);
    classify(run(spec), spec, run)
}

/// `KL(f₁, f₂) + KL(f₂, f₁)`, symmetric by construction.
pub fn jeffreys<A, B>(f1: &A, f2: &B, spec: &QuadratureSpec) -> DivergenceResult
where
    A: Continuous + ?Sized,
    B: Continuous + ?Sized,
{
    sum_both(kl(f1, f2, spec), kl(f2, f1, spec))
}

fn sum_both(a: DivergenceResult, b: DivergenceResult) -> DivergenceResult {
    if a.divergent || b.divergent {
        return DivergenceResult::divergent(a.method);
    }
    DivergenceResult {
        value: a.value + b.value,
        method: a.method,
        error_bound: a.error_bound + b.error_bound,
        converged: a.converged && b.converged,
        divergent: false,
    }
}

/// `χ²(f₁, f₂) = ∫ (f₁ − f₂)² / f₂ = E_{f₂}[(f₁/f₂ − 1)²]`, integrated
/// against the quantile of `f₂` so the integrand stays bounded whenever
/// the ratio does.
pub fn chi_square<A, B>(f1: &A, f2: &B, spec: &QuadratureSpec) -> DivergenceResult
where
    A: Continuous + ?Sized,
    B: Continuous + ?Sized,
{
    let run = |s: &QuadratureSpec| {
        integrate_unit(
            |u| {
                let r = inverse_ratio(f2, f1, u) - 1.0;
                r * r
            },
            s,
        )
    };
    classify(run(spec), spec, run)
}

/// `Ψ(f₁, f₂) = χ²(f₁, f₂) + χ²(f₂, f₁)`.
pub fn symmetric_chi_square<A, B>(f1: &A, f2: &B, spec: &QuadratureSpec) -> DivergenceResult
where
    A: Continuous + ?Sized,
    B: Continuous + ?Sized,
{
    sum_both(chi_square(f1, f2, spec), chi_square(f2, f1, spec))
}

/// `Ψ` straight from its defining integrand
/// `(f₁ − f₂)²(f₁ + f₂)/(f₁f₂)`, used to check the two-direction identity.
pub fn symmetric_chi_square_direct<A, B>(f1: &A, f2: &B, spec: &QuadratureSpec) -> DivergenceResult
where
    A: Continuous + ?Sized,
    B: Continuous + ?Sized,
{
    let run = |s: &QuadratureSpec| {
        integrate_unit(
            |u| {
                let r = inverse_ratio(f1, f2, u);
                (1.0 - r) * (1.0 - r) * (1.0 + r) / r
            },
            s,
        )
    };
    classify(run(spec), spec, run)
}

pub(crate) fn over_uniform(map: CubicMap, name: &str) -> Composed {
    Composed::new(Baseline::uniform(), map, name)
}

/// The seven KL divergences between CT-uniform and its components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum KlForm {
    /// `KL(f_U, f_{U_CT})`
    A,
    /// `KL(f_{U_CT}, f_U)`
    B,
    /// `KL(f_{U₂:₃}, f_{U_CT})`
    C,
    /// `KL(f_{U_CT}, f_W)`
    D,
    /// `KL(f_W, f_{U_CT})`
    E,
    /// `KL(f_{U₂:₃}, f_W) = log 2`
    F,
    /// `KL(f_W, f_U) = log 3 − 2/3`
    G,
}

impl KlForm {
    pub const ALL: [KlForm; 7] = [
        KlForm::A,
        KlForm::B,
        KlForm::C,
        KlForm::D,
        KlForm::E,
        KlForm::F,
        KlForm::G,
    ];

    pub fn letter(self) -> char {
        match self {
            KlForm::A => 'a',
            KlForm::B => 'b',
            KlForm::C => 'c',
            KlForm::D => 'd',
            KlForm::E => 'e',
            KlForm::F => 'f',
            KlForm::G => 'g',
        }
    }

    /// The two CDF maps `(first, second)` over a uniform baseline.
    pub fn maps(self, params: &CtParams) -> (CubicMap, CubicMap) {
        let ct = params.map();
        match self {
            KlForm::A => (CubicMap::IDENTITY, ct),
            KlForm::B => (ct, CubicMap::IDENTITY),
            KlForm::C => (CubicMap::MEDIAN3, ct),
            KlForm::D => (ct, CubicMap::MAX3),
            KlForm::E => (CubicMap::MAX3, ct),
            KlForm::F => (CubicMap::MEDIAN3, CubicMap::MAX3),
            KlForm::G => (CubicMap::MAX3, CubicMap::IDENTITY),
        }
    }
}

/// Polynomial blocks shared by several closed forms.
fn poly_b(l1: f64, l2: f64) -> f64 {
    2.0 / (9.0 * (1.0 - l2)) * (l1 * l1 + 13.0 * l2 * l2 - 2.0 * l1 * l2 - 18.0 * l2 + 6.0)
}

fn quartic(l1: f64, l2: f64) -> f64 {
    4.0 * l1 * l1 + 10.0 * l2 * l2 - 8.0 * l1 * l2 - 9.0 * l2 + 3.0
}

/// `φ(x)` without its `log` kernel and `1/(2r)` prefactor.
fn phi_poly(l1: f64, l2: f64) -> impl Fn(C) -> C {
    move |x| {
        let d = l2 - l1;
        let e = 1.0 - l2;
        x * x * (2.0 * d * d + x * (10.0 * d * e + x * 12.0 * e * e))
    }
}

/// `2·φ`-style difference `φ(p) − φ(q)` of Remark 2.2.
pub(crate) fn phi_diff(aux: &Aux) -> C {
    aux.half_diff(phi_poly(aux.lambda1, aux.lambda2))
}

fn closed_raw(which: KlForm, aux: &Aux) -> C {
    let (l1, l2) = (aux.lambda1, aux.lambda2);
    let s = 3.0 - l1 - l2;
    let c = |v: f64| C::new(v, 0.0);
    match which {
        KlForm::A => {
            // varphi carries 1/r rather than 1/(2r).
            let vphi = aux.half_diff(|x| x * ((l2 - l1) + 3.0 * (1.0 - l2) * x)) * 2.0;
            c(2.0 - s.ln()) - vphi
        }
        KlForm::B => c(s.ln() - 2.0 / 3.0 * (3.0 + l1 - 4.0 * l2) + poly_b(l1, l2)) - phi_diff(aux),
        KlForm::C => {
            let (p, q) = (aux.p, aux.q);
            let tail = [p, q]
                .iter()
                .map(|&x| x * x * (3.0 - 2.0 * x) * log_ratio(x))
                .fold(C::new(0.0, 0.0), |a, b| a + b);
            c((6.0 / s).ln()) + 2.0 * (p + q) - 2.0 * (p * p + q * q) - tail
        }
        KlForm::D => c(-(3.0 / s).ln() + (l1 + 9.0 * l2 - 4.0) / 3.0 + poly_b(l1, l2)) - phi_diff(aux),
        KlForm::E => {
            let e = 1.0 - l2;
            let gamma = aux.half_diff(|x| x * x * x * (2.0 * (l2 - l1) + 6.0 * e * x));
            c((3.0 / s).ln()
                + (l2 - l1) / (9.0 * e * e) * (3.0 - 7.0 * l2 + 4.0 * l1)
                + 2.0 / (9.0 * e * e) * quartic(l1, l2)
                - 2.0 / 3.0)
                - gamma
        }
        KlForm::F => c(2f64.ln()),
        KlForm::G => c(3f64.ln() - 2.0 / 3.0),
    }
}

/// Closed form of a KL divergence; `Degenerate` when `λ₂ = 1` or `r ≈ 0`
/// for the forms that need the roots.
pub fn kl_closed_form(which: KlForm, params: &CtParams) -> Result<f64> {
    match which {
        KlForm::F => return Ok(2f64.ln()),
        KlForm::G => return Ok(3f64.ln() - 2.0 / 3.0),
        _ => {}
    }
    let aux = Aux::new(params)?;
    real_part(closed_raw(which, &aux))
}

/// The printed expression for form (c), kept for the erratum report. It
/// differs from [`kl_closed_form`]`(KlForm::C, …)` everywhere.
pub fn kl_c_printed(params: &CtParams) -> Result<f64> {
    let aux = Aux::new(params)?;
    let (l1, l2) = (aux.lambda1, aux.lambda2);
    let s = 3.0 - l1 - l2;
    let eta =
        aux.half_diff(|x| x * x * (6.0 * (l2 - l1) - (18.0 + 4.0 * l1 - 22.0 * l2) * x + 12.0 * (1.0 - l2) * x * x));
    let poly = (55.0 * l2 * l2 - 8.0 * l1 * l1 - 44.0 * l1 * l2 - 78.0 * l2 + 60.0 * l1 + 15.0)
        / (9.0 * (1.0 - l2) * (1.0 - l2));
    real_part(C::new((6.0 / s).ln() - 5.0 / 3.0 - poly, 0.0) - eta)
}

/// u-space oracle for a closed form.
pub fn kl_form_quadrature(which: KlForm, params: &CtParams, spec: &QuadratureSpec) -> DivergenceResult {
    let (m1, m2) = which.maps(params);
    kl(&over_uniform(m1, "first"), &over_uniform(m2, "second"), spec)
}

/// Closed form when available, otherwise the quadrature value tagged as such.
pub fn kl_closed_forms(which: KlForm, params: &CtParams, spec: &QuadratureSpec) -> DivergenceResult {
    match kl_closed_form(which, params) {
        Ok(v) => DivergenceResult::closed_form(v),
        Err(_) => kl_form_quadrature(which, params, spec),
    }
}

/// Pairs whose KL divergence does not depend on the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionPair {
    BaselineCt,
    CtBaseline,
    MedianCt,
    MedianMax,
    CtMax,
    MaxCt,
    MaxBaseline,
}

impl ReductionPair {
    pub const ALL: [ReductionPair; 7] = [
        ReductionPair::BaselineCt,
        ReductionPair::CtBaseline,
        ReductionPair::MedianCt,
        ReductionPair::MedianMax,
        ReductionPair::CtMax,
        ReductionPair::MaxCt,
        ReductionPair::MaxBaseline,
    ];

    pub fn maps(self, params: &CtParams) -> (CubicMap, CubicMap) {
        let ct = params.map();
        let max = Component::Max.map();
        let med = Component::Median.map();
        let id = CubicMap::IDENTITY;
        match self {
            ReductionPair::BaselineCt => (id, ct),
            ReductionPair::CtBaseline => (ct, id),
            ReductionPair::MedianCt => (med, ct),
            ReductionPair::MedianMax => (med, max),
            ReductionPair::CtMax => (ct, max),
            ReductionPair::MaxCt => (max, ct),
            ReductionPair::MaxBaseline => (max, id),
        }
    }
}

/// `(x-space KL under baseline, u-space KL under uniform)`.
pub fn kl_reduction_check(
    pair: ReductionPair,
    baseline: &Baseline,
    params: &CtParams,
    spec: &QuadratureSpec,
) -> (DivergenceResult, DivergenceResult) {
    let (m1, m2) = pair.maps(params);
    let x = kl(
        &Composed::new(*baseline, m1, "first"),
        &Composed::new(*baseline, m2, "second"),
        spec,
    );
    let u = kl(&over_uniform(m1, "first"), &over_uniform(m2, "second"), spec);
    (x, u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureDirection {
    /// `KL(f_mix, f_CT)`
    MixToCt,
    /// `KL(f_CT, f_mix)`
    CtToMix,
}

/// Mixture-versus-CT KL, three ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureKl {
    pub closed_form: f64,
    /// The printed expression; `None` where it is undefined (`v ∈ {0, 1}`).
    pub printed: Option<f64>,
    pub quadrature: DivergenceResult,
}

/// KL between `f_mix = v·f + 3(1 − v)·f·F²` and the CT density.
pub fn kl_mixture_ct(
    v: f64,
    params: &CtParams,
    direction: MixtureDirection,
    spec: &QuadratureSpec,
) -> Result<MixtureKl> {
    if !(0.0..=1.0).contains(&v) {
        return Err(CtError::ParamDomain {
            name: "v".into(),
            value: v,
            reason: "mixing weight must lie in [0, 1]",
        });
    }
    let mix = over_uniform(CubicMap::mixture(v), "mix");
    let ct = over_uniform(params.map(), "ct");
    let quadrature = match direction {
        MixtureDirection::MixToCt => kl(&mix, &ct, spec),
        MixtureDirection::CtToMix => kl(&ct, &mix, spec),
    };
    let aux = Aux::new(params)?;
    let (closed_form, printed) = match direction {
        MixtureDirection::MixToCt => {
            if v == 1.0 {
                (kl_closed_form(KlForm::A, params)?, None)
            } else if v == 0.0 {
                (kl_closed_form(KlForm::E, params)?, None)
            } else {
                let p = mixture_a_printed(v, &aux)?;
                (p, Some(p))
            }
        }
        MixtureDirection::CtToMix => {
            if v == 1.0 {
                (kl_closed_form(KlForm::B, params)?, None)
            } else if v == 0.0 {
                (kl_closed_form(KlForm::D, params)?, None)
            } else {
                (mixture_b_corrected(v, &aux)?, Some(mixture_b_printed(v, &aux)?))
            }
        }
    };
    Ok(MixtureKl {
        closed_form,
        printed,
        quadrature,
    })
}

fn mixture_a_printed(v: f64, aux: &Aux) -> Result<f64> {
    let (l1, l2) = (aux.lambda1, aux.lambda2);
    let s = 3.0 - l1 - l2;
    let xi = aux.half_diff(|x| {
        x * (2.0 * v * (l2 - l1)
            + x * (6.0 * v * (1.0 - l2) + x * (2.0 * (l2 - l1) * (1.0 - v) + x * 6.0 * (1.0 - v) * (1.0 - l2))))
    });
    let at = (3.0 * (1.0 - v) / v).sqrt().atan();
    let base = ((3.0 - 2.0 * v) / s).ln()
        + (1.0 - v) / (9.0 * (1.0 - l2) * (1.0 - l2))
            * (4.0 * l1 * l1 + 13.0 * l2 * l2 - 5.0 * l1 * l2 - 3.0 * l1 - 15.0 * l2 + 6.0)
        + 4.0 * v.powf(1.5) / (3.0 * 3f64.sqrt() * (1.0 - v).sqrt()) * at
        - 2.0 / 3.0 * (1.0 - 2.0 * v);
    real_part(C::new(base, 0.0) - xi)
}

fn mixture_b_printed(v: f64, aux: &Aux) -> Result<f64> {
    let (l1, l2) = (aux.lambda1, aux.lambda2);
    let s = 3.0 - l1 - l2;
    let at = (3.0 * (1.0 - v) / v).sqrt().atan();
    let base = (s / (3.0 - 2.0 * v)).ln()
        - (4.0 + 5.0 * l1 - 9.0 * l2) / 3.0
        - v / (3.0 * (1.0 - v)) * (2.0 * (1.0 - l2) - (l2 - l1) * (v / (3.0 - 2.0 * v)).ln())
        - 2.0 * (l1 - v * (1.0 - l2) / (3.0 * (1.0 - v))) * (v / (3.0 * (1.0 - v))).sqrt() * at
        + poly_b(l1, l2);
    real_part(C::new(base, 0.0) - phi_diff(aux))
}

/// `KL(g, m) = ∫g log g − log(3(1 − v)) − ∫g log(a² + u²)` with
/// `a² = v/(3(1 − v))`, the last integral via the moments
/// `I_k = ∫₀¹ u^k log(a² + u²) du`.
fn mixture_b_corrected(v: f64, aux: &Aux) -> Result<f64> {
    let (l1, l2) = (aux.lambda1, aux.lambda2);
    let kl_b = real_part(closed_raw(KlForm::B, aux))?;
    let a2 = v / (3.0 * (1.0 - v));
    let a = a2.sqrt();
    let l = a2.ln_1p();
    let a_atan = if a > 0.0 { a * (1.0 / a).atan() } else { 0.0 };
    let a2_log = if a2 > 0.0 { a2 * a2.ln() } else { 0.0 };
    let i0 = l - 2.0 + 2.0 * a_atan;
    let i1 = 0.5 * ((1.0 + a2) * l - a2_log - 1.0);
    let i2 = l / 3.0 - 2.0 / 9.0 + 2.0 / 3.0 * a2 - 2.0 / 3.0 * a2 * a_atan;
    let cross = l1 * i0 + 2.0 * (l2 - l1) * i1 + 3.0 * (1.0 - l2) * i2;
    Ok(kl_b - (3.0 * (1.0 - v)).ln() - cross)
}

/// The three χ² divergences between CT-uniform and its components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ChiForm {
    /// `χ²(f_{U_CT}, f_U)`
    A,
    /// `χ²(f_U, f_{U_CT})`
    B,
    /// `χ²(f_W, f_{U_CT})`
    C,
}

impl ChiForm {
    pub const ALL: [ChiForm; 3] = [ChiForm::A, ChiForm::B, ChiForm::C];

    pub fn letter(self) -> char {
        match self {
            ChiForm::A => 'a',
            ChiForm::B => 'b',
            ChiForm::C => 'c',
        }
    }

    pub fn maps(self, params: &CtParams) -> (CubicMap, CubicMap) {
        let ct = params.map();
        match self {
            ChiForm::A => (ct, CubicMap::IDENTITY),
            ChiForm::B => (CubicMap::IDENTITY, ct),
            ChiForm::C => (CubicMap::MAX3, ct),
        }
    }
}

/// Closed-form χ²; `+∞` for (b) when `λ₁ = 0` (then `1/g` is not integrable).
pub fn chi_square_closed_form(which: ChiForm, params: &CtParams) -> Result<f64> {
    let (l1, l2) = (params.lambda1(), params.lambda2());
    match which {
        ChiForm::A => Ok((12.0 - 15.0 * l1 - 9.0 * l2 + 5.0 * l1 * l2 + 5.0 * l1 * l1 + 2.0 * l2 * l2) / 15.0),
        ChiForm::B => Ok(inv_g_integral(l1, l2) - 1.0),
        ChiForm::C => {
            let aux = Aux::new(params)?;
            let sigma = aux.half_diff(|x| x * x * x * x);
            let e = 1.0 - l2;
            real_part(C::new(-1.0 + quartic(l1, l2) / (3.0 * e * e * e), 0.0) - 9.0 * sigma)
        }
    }
}

/// The printed `−1 + (1/r)·artanh(r/λ₂)`, literal complex evaluation.
pub fn chi_square_b_printed(params: &CtParams) -> Result<f64> {
    real_part(inv_g_integral_printed(params.lambda1(), params.lambda2()) - 1.0)
}

pub fn chi_form_quadrature(which: ChiForm, params: &CtParams, spec: &QuadratureSpec) -> DivergenceResult {
    let (m1, m2) = which.maps(params);
    chi_square(&over_uniform(m1, "first"), &over_uniform(m2, "second"), spec)
}

pub fn chi_square_closed_forms(which: ChiForm, params: &CtParams, spec: &QuadratureSpec) -> DivergenceResult {
    match chi_square_closed_form(which, params) {
        Ok(v) => DivergenceResult::closed_form(v),
        Err(_) => chi_form_quadrature(which, params, spec),
    }
}

/// The four divergences the command line can ask for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    Kl,
    Jeffreys,
    Chi2,
    SymChi2,
}

impl DivergenceKind {
    /// By quadrature.
    pub fn evaluate<A, B>(self, f1: &A, f2: &B, spec: &QuadratureSpec) -> DivergenceResult
    where
        A: Continuous + ?Sized,
        B: Continuous + ?Sized,
    {
        match self {
            DivergenceKind::Kl => kl(f1, f2, spec),
            DivergenceKind::Jeffreys => jeffreys(f1, f2, spec),
            DivergenceKind::Chi2 => chi_square(f1, f2, spec),
            DivergenceKind::SymChi2 => symmetric_chi_square(f1, f2, spec),
        }
    }

    /// Closed form for a pair of cubic maps over a common baseline, when one
    /// of the tabulated forms matches. `params` are the CT parameters the
    /// forms are indexed by; the value is the same for every baseline.
    pub fn closed_form(self, first: CubicMap, second: CubicMap, params: &CtParams) -> Option<Result<f64>> {
        // Several forms can match when the CT map coincides with a
        // component; any one that evaluates will do.
        fn first_ok(mut results: impl Iterator<Item = Result<f64>>) -> Option<Result<f64>> {
            let first = results.next()?;
            Some(first.or_else(|e| results.find(|r| r.is_ok()).unwrap_or(Err(e))))
        }
        let kl_one = |a: CubicMap, b: CubicMap| {
            first_ok(
                KlForm::ALL
                    .into_iter()
                    .filter(|f| f.maps(params) == (a, b))
                    .map(|f| kl_closed_form(f, params)),
            )
        };
        let chi_one = |a: CubicMap, b: CubicMap| {
            first_ok(
                ChiForm::ALL
                    .into_iter()
                    .filter(|f| f.maps(params) == (a, b))
                    .map(|f| chi_square_closed_form(f, params)),
            )
        };
        let both = |x: Option<Result<f64>>, y: Option<Result<f64>>| {
            let (x, y) = (x?, y?);
            Some(x.and_then(|a| y.map(|b| a + b)))
        };
        match self {
            DivergenceKind::Kl => kl_one(first, second),
            DivergenceKind::Jeffreys => both(kl_one(first, second), kl_one(second, first)),
            DivergenceKind::Chi2 => chi_one(first, second),
            DivergenceKind::SymChi2 => both(chi_one(first, second), chi_one(second, first)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_dispatch_finds_closed_forms() {
        let p = CtParams::new(0.4, 0.6).unwrap();
        let k = DivergenceKind::Kl
            .closed_form(CubicMap::MAX3, CubicMap::IDENTITY, &p)
            .unwrap()
            .unwrap();
        assert!((k - (3f64.ln() - 2.0 / 3.0)).abs() < 1e-15);
        let j = DivergenceKind::Jeffreys
            .closed_form(CubicMap::IDENTITY, p.map(), &p)
            .unwrap()
            .unwrap();
        let q = DivergenceKind::Jeffreys.evaluate(
            &Baseline::uniform(),
            &over_uniform(p.map(), "ct"),
            &QuadratureSpec::default(),
        );
        assert!((j - q.value).abs() < 1e-9);
        assert!(DivergenceKind::Chi2
            .closed_form(CubicMap::MEDIAN3, CubicMap::MAX3, &p)
            .is_none());
        // (1, 1) makes the CT map the identity, so (e) and (g) both match.
        let id = CtParams::new(1.0, 1.0).unwrap();
        let g = DivergenceKind::Kl
            .closed_form(CubicMap::MAX3, CubicMap::IDENTITY, &id)
            .unwrap()
            .unwrap();
        assert_eq!(g, k);
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn p(l1: f64, l2: f64) -> CtParams {
        CtParams::new(l1, l2).unwrap()
    }

    #[test]
    fn kl_examples() {
        let u = over_uniform(CubicMap::IDENTITY, "u");
        let w = over_uniform(CubicMap::MAX3, "w");
        let med = over_uniform(CubicMap::MEDIAN3, "med");
        assert_eq!(kl(&u, &u, &spec()).value, 0.0);
        assert!((kl(&med, &w, &spec()).value - 2f64.ln()).abs() < 1e-12);
        assert!((kl(&w, &u, &spec()).value - (3f64.ln() - 2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_match_quadrature_real_and_complex() {
        // (0.4, 0.6) and (0.2, 0.3) are real-root cells; (1, 0) and (0.9, −0.5) complex.
        for (l1, l2) in [
            (0.4, 0.6),
            (0.2, 0.3),
            (1.0, 0.0),
            (0.9, -0.5),
            (0.5, 0.5),
            (0.05, -0.4),
        ] {
            let prm = p(l1, l2);
            for f in KlForm::ALL {
                let c = kl_closed_form(f, &prm).unwrap();
                let q = kl_form_quadrature(f, &prm, &spec());
                assert!((c - q.value).abs() < 1e-8, "{f:?} ({l1},{l2}): {c} vs {}", q.value);
            }
            for f in ChiForm::ALL {
                let c = chi_square_closed_form(f, &prm).unwrap();
                let q = chi_form_quadrature(f, &prm, &spec());
                assert!((c - q.value).abs() < 1e-8, "{f:?} ({l1},{l2}): {c} vs {}", q.value);
            }
        }
    }

    #[test]
    fn spec_examples() {
        assert!((kl_closed_form(KlForm::F, &p(0.3, 0.1)).unwrap() - 2f64.ln()).abs() < 1e-15);
        let a = kl_closed_forms(KlForm::A, &p(1.0, 1.0), &spec());
        assert_eq!(a.method, Method::Quadrature);
        assert!(a.value.abs() < 1e-12);
        let b = kl_closed_form(KlForm::B, &p(0.5, 0.5)).unwrap();
        let g = |u: f64| 0.5 + 1.5 * u * u;
        let oracle = integrate_unit(|u| g(u) * g(u).ln(), &spec()).value;
        assert!((b - oracle).abs() < 1e-8);
        assert!((chi_square_closed_form(ChiForm::A, &p(0.5, 0.5)).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(chi_square_closed_form(ChiForm::A, &p(1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn asymmetry_witness() {
        let prm = p(0.4, 0.6);
        let a = kl_closed_form(KlForm::A, &prm).unwrap();
        let b = kl_closed_form(KlForm::B, &prm).unwrap();
        assert!((a - b).abs() > 1e-4);
    }

    #[test]
    fn printed_c_is_wrong_and_corrected_c_is_right() {
        let prm = p(0.2, 0.3);
        let q = kl_form_quadrature(KlForm::C, &prm, &spec()).value;
        assert!((kl_c_printed(&prm).unwrap() - q).abs() > 1e-3);
        assert!((kl_closed_form(KlForm::C, &prm).unwrap() - q).abs() < 1e-9);
    }

    #[test]
    fn chi_square_b_divergent_when_lambda1_is_zero() {
        let prm = p(0.0, 0.5);
        assert_eq!(chi_square_closed_form(ChiForm::B, &prm).unwrap(), f64::INFINITY);
        let q = chi_form_quadrature(ChiForm::B, &prm, &spec());
        assert!(q.divergent, "{q:?}");
    }

    #[test]
    fn jeffreys_identities() {
        let u = over_uniform(CubicMap::IDENTITY, "u");
        let w = over_uniform(CubicMap::MAX3, "w");
        let j = jeffreys(&w, &u, &spec()).value;
        assert!((j - 4.0 / 3.0).abs() < 1e-10);
        assert_eq!(j, jeffreys(&u, &w, &spec()).value);
        let prm = p(0.4, 0.6);
        let ct = over_uniform(prm.map(), "ct");
        let jd = jeffreys(&ct, &w, &spec()).value;
        let sum = kl_closed_form(KlForm::D, &prm).unwrap() + kl_closed_form(KlForm::E, &prm).unwrap();
        assert!((jd - sum).abs() < 1e-9);
    }

    #[test]
    fn mixture_examples() {
        let prm = p(0.5, 0.5);
        for dir in [MixtureDirection::MixToCt, MixtureDirection::CtToMix] {
            let m = kl_mixture_ct(0.5, &prm, dir, &spec()).unwrap();
            assert!(m.closed_form.abs() < 1e-10);
            assert!(m.quadrature.value.abs() < 1e-10);
        }
        let prm = p(0.4, 0.6);
        let m = kl_mixture_ct(1.0, &prm, MixtureDirection::MixToCt, &spec()).unwrap();
        assert!((m.closed_form - kl_closed_form(KlForm::A, &prm).unwrap()).abs() < 1e-15);
        let prm = p(0.5, 0.25);
        for dir in [MixtureDirection::MixToCt, MixtureDirection::CtToMix] {
            let m = kl_mixture_ct(0.5, &prm, dir, &spec()).unwrap();
            assert!((m.closed_form - m.quadrature.value).abs() < 1e-7, "{dir:?} {m:?}");
        }
        let m = kl_mixture_ct(0.3, &p(0.4, 0.6), MixtureDirection::CtToMix, &spec()).unwrap();
        assert!((m.printed.unwrap() - m.quadrature.value).abs() > 1e-3);
    }

    #[test]
    fn symmetric_chi_identity() {
        let prm = p(0.5, 0.5);
        let u = over_uniform(CubicMap::IDENTITY, "u");
        let ct = over_uniform(prm.map(), "ct");
        let two = symmetric_chi_square(&ct, &u, &spec()).value;
        let direct = symmetric_chi_square_direct(&ct, &u, &spec()).value;
        assert!((two - direct).abs() < 1e-9);
        let expect = 0.2 + chi_square_closed_form(ChiForm::B, &prm).unwrap();
        assert!((two - expect).abs() < 1e-9);
        assert_eq!(symmetric_chi_square(&u, &u, &spec()).value, 0.0);
    }

    #[test]
    fn reductions_under_exponential_and_pareto() {
        let prm = p(0.4, 0.6);
        let e = Baseline::exponential(1.0).unwrap();
        let (x, u) = kl_reduction_check(ReductionPair::MaxBaseline, &e, &prm, &spec());
        assert!((x.value - (3f64.ln() - 2.0 / 3.0)).abs() < 1e-9);
        assert!((u.value - x.value).abs() < 1e-9);
        let pa = Baseline::pareto(2.0).unwrap();
        let (x, _) = kl_reduction_check(ReductionPair::MedianMax, &pa, &prm, &spec());
        assert!((x.value - 2f64.ln()).abs() < 1e-9);
    }
}
