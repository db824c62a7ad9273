//! Shannon and weighted entropy, the CT entropy decomposition, θ(λ₁, λ₂)
//! and the CT Shannon entropy (a Jensen-type gap).

use serde::Serialize;

use crate::baselines::{Baseline, Family};
use crate::ct_model::{make_ct, Component, Composed, CtDistribution, CtParams, CubicMap};
use crate::dist::Continuous;
use crate::divergences::{kl, kl_closed_form, over_uniform, KlForm};
use crate::error::{CtError, Result};
use crate::quadrature::{integrate_unit, Estimate, QuadratureSpec};

/// `H(f) = −∫ f log f`, as `−∫₀¹ log f(Q(u)) du`.
pub fn shannon_entropy<D: Continuous + ?Sized>(dist: &D, spec: &QuadratureSpec) -> Estimate {
    integrate_unit(|u| -dist.density_at_quantile(u).ln(), spec)
}

/// `H^ψ(f) = −∫ ψ(x) f(x) log f(x) dx`.
pub fn weighted_entropy<D, W>(dist: &D, weight: W, spec: &QuadratureSpec) -> Estimate
where
    D: Continuous + ?Sized,
    W: Fn(f64) -> f64,
{
    integrate_unit(|u| -weight(dist.quantile(u)) * dist.density_at_quantile(u).ln(), spec)
}

/// `H^F(f)`, the weighted entropy with weight `F`, evaluated in `u`.
pub fn cdf_weighted_entropy<D: Continuous + ?Sized>(dist: &D, spec: &QuadratureSpec) -> Estimate {
    integrate_unit(|u| -u * dist.density_at_quantile(u).ln(), spec)
}

/// `H(f_W)` for `W ~ Beta(3, 1)`, exactly.
pub fn h_beta31() -> f64 {
    2.0 / 3.0 - 3f64.ln()
}

/// `H(f_V)` for `V ~ Beta(2, 1)`, exactly.
pub fn h_beta21() -> f64 {
    0.5 - 2f64.ln()
}

/// `θ(λ₁, λ₂) = H(f_{U_CT}) − (1 − λ₂)H(f_W)` in closed form.
pub fn theta_closed_form(params: &CtParams) -> Result<f64> {
    let kl_b = kl_closed_form(KlForm::B, params)?;
    Ok(-kl_b - (1.0 - params.lambda2()) * h_beta31())
}

/// `θ` with both entropies by quadrature.
pub fn theta_quadrature(params: &CtParams, spec: &QuadratureSpec) -> Estimate {
    let h_ct = integrate_unit(
        |u| {
            let g = params.g(u);
            if g > 0.0 {
                -g * g.ln()
            } else {
                0.0
            }
        },
        spec,
    );
    let h_w = shannon_entropy(&over_uniform(CubicMap::MAX3, "w"), spec);
    Estimate::combine(&[(1.0, h_ct), (-(1.0 - params.lambda2()), h_w)])
}

/// The five terms of the CT entropy decomposition next to the direct value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyDecomposition {
    /// `H(f_CT)` by direct quadrature.
    pub total: f64,
    /// `λ₁·H(f)`
    pub term_lambda1_hf: f64,
    /// `(1 − λ₂)·H(f_max)`
    pub term_hfmax: f64,
    /// `2(λ₂ − λ₁)·H^F(f)`
    pub term_weighted: f64,
    /// `−(1 − λ₂)·H(f_W)`
    pub term_hfw: f64,
    /// `H(f_{U_CT})`
    pub term_hfuct: f64,
    /// `term_hfuct + term_hfw`
    pub theta: f64,
    /// Sum of the five terms.
    pub decomposed: f64,
    pub error_bound: f64,
    pub converged: bool,
}

pub fn ct_entropy_decomposed(ct: &CtDistribution, spec: &QuadratureSpec) -> EntropyDecomposition {
    let (l1, l2) = (ct.params.lambda1(), ct.params.lambda2());
    let b = ct.baseline;
    let direct = shannon_entropy(ct, spec);
    let hf = shannon_entropy(&b, spec);
    let hmax = shannon_entropy(&Component::Max.over(b), spec);
    let hw_f = cdf_weighted_entropy(&b, spec);
    let hw = shannon_entropy(&over_uniform(CubicMap::MAX3, "w"), spec);
    let huct = shannon_entropy(&over_uniform(ct.params.map(), "uct"), spec);
    let terms = [
        (l1, hf),
        (1.0 - l2, hmax),
        (2.0 * (l2 - l1), hw_f),
        (-(1.0 - l2), hw),
        (1.0, huct),
    ];
    let sum = Estimate::combine(&terms);
    EntropyDecomposition {
        total: direct.value,
        term_lambda1_hf: l1 * hf.value,
        term_hfmax: (1.0 - l2) * hmax.value,
        term_weighted: 2.0 * (l2 - l1) * hw_f.value,
        term_hfw: -(1.0 - l2) * hw.value,
        term_hfuct: huct.value,
        theta: huct.value - (1.0 - l2) * hw.value,
        decomposed: sum.value,
        error_bound: sum.error_bound + direct.error_bound,
        converged: sum.converged && direct.converged,
    }
}

/// CT Shannon entropy by its definition, by the KL representation, and by
/// the baseline-free closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CtShannon {
    pub definition: Estimate,
    pub via_kl: Estimate,
    pub closed_form: Option<f64>,
    /// `(1 − λ₂)KL(f_max, f) + (1/3)(λ₂ − λ₁)KL(f₂:₃, f_max) − KL(f_CT, f)`;
    /// the KL form minus its constant `(log 3 − 1)(λ₂ − λ₁)`.
    pub kl_part: f64,
}

/// `H(f_CT) − λ₁H(f) − (1/3)(λ₂ − λ₁)H(f₂:₃) − (1/3)(3 − λ₂ − 2λ₁)H(f_max)`.
pub fn ct_shannon_entropy(baseline: &Baseline, params: &CtParams, spec: &QuadratureSpec) -> Result<CtShannon> {
    let (l1, l2) = (params.lambda1(), params.lambda2());
    if l2 >= 1.0 {
        return Err(CtError::Degenerate("CT Shannon entropy needs lambda2 < 1"));
    }
    let b = *baseline;
    let ct = make_ct(b, *params);
    let max = Component::Max.over(b);
    let med = Component::Median.over(b);
    let [w1, w2, w3] = params.component_weights();
    let definition = Estimate::combine(&[
        (1.0, shannon_entropy(&ct, spec)),
        (-w1, shannon_entropy(&b, spec)),
        (-w2, shannon_entropy(&med, spec)),
        (-w3, shannon_entropy(&max, spec)),
    ]);
    let as_est = |d: crate::divergences::DivergenceResult| Estimate {
        value: d.value,
        error_bound: d.error_bound,
        evaluations: 0,
        converged: d.converged,
    };
    let kl_sum = Estimate::combine(&[
        (1.0 - l2, as_est(kl(&max, &b, spec))),
        ((l2 - l1) / 3.0, as_est(kl(&med, &max, spec))),
        (-1.0, as_est(kl(&ct, &b, spec))),
    ]);
    let c_star = (3f64.ln() - 1.0) * (l2 - l1);
    let via_kl = kl_sum.map(|v| v + c_star);
    let closed_form = kl_closed_form(KlForm::B, params).ok().map(|kl_b| {
        (1.0 - l2) * (3f64.ln() - 2.0 / 3.0) + (l2 - l1) / 3.0 * 2f64.ln() - kl_b - (3f64.ln() - 1.0) * (l1 - l2)
    });
    Ok(CtShannon {
        definition,
        via_kl,
        closed_form,
        kl_part: kl_sum.value,
    })
}

/// Jensen–Shannon entropy of a mixture of distributions that share a
/// baseline: `H(Σ δᵢ fᵢ) − Σ δᵢ H(fᵢ)`.
pub fn js_entropy(baseline: &Baseline, parts: &[(f64, CubicMap)], spec: &QuadratureSpec) -> Estimate {
    let mut c = [0.0; 3];
    for (w, m) in parts {
        for (ck, mk) in c.iter_mut().zip(m.c) {
            *ck += w * mk;
        }
    }
    let mix = Composed::new(*baseline, CubicMap { c }, "mix");
    let mut terms = vec![(1.0, shannon_entropy(&mix, spec))];
    for (w, m) in parts {
        terms.push((-w, shannon_entropy(&Composed::new(*baseline, *m, "part"), spec)));
    }
    Estimate::combine(&terms)
}

/// Entropy identities for the quadratic and one-parameter reductions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecialCases {
    pub lambda: f64,
    /// `H(f_{X_T})` of the quadratic transmuted law, by direct quadrature.
    pub quadratic_direct: f64,
    /// `(1 + λ)H(f) − λH(f_{2:2}) + λH(f_V) + H(f_{U_T})`, with `f_{2:2}`
    /// the density of the max of two.
    pub quadratic_identity: f64,
    /// `−2λH^F(f)`.
    pub weighted_lhs: f64,
    /// `−λH(f_{2:2}) + λH(f_V)`.
    pub weighted_rhs: f64,
    /// The same right-hand side read with the max of three.
    pub weighted_rhs_max3: f64,
    /// One-parameter cubic, direct.
    pub one_param_direct: f64,
    /// `(1 + λ)H(f) + λH(f_max) − 4λH^F(f) − λH(f_W) + H(f*_{U_CT})`.
    pub one_param_identity: f64,
    /// As printed, with `−2λH^F(f)`.
    pub one_param_printed: f64,
}

pub fn entropy_special_cases(baseline: &Baseline, lambda: f64, spec: &QuadratureSpec) -> Result<SpecialCases> {
    let b = *baseline;
    let quad = crate::ct_model::make_quadratic(b, lambda)?;
    let one = crate::ct_model::make_one_param_cubic(b, lambda)?;
    let h = |d: &dyn Continuous| shannon_entropy(d, spec).value;
    let hf = h(&b);
    let hmax2 = h(&Component::Beta21.over(b));
    let hmax3 = h(&Component::Max.over(b));
    let hv = h_beta21();
    let hw = h_beta31();
    let hwf = cdf_weighted_entropy(&b, spec).value;
    let hut = h(&over_uniform(quad.params.map(), "ut"));
    let huct = h(&over_uniform(one.params.map(), "uct"));
    Ok(SpecialCases {
        lambda,
        quadratic_direct: h(&quad),
        quadratic_identity: (1.0 + lambda) * hf - lambda * hmax2 + lambda * hv + hut,
        weighted_lhs: -2.0 * lambda * hwf,
        weighted_rhs: -lambda * hmax2 + lambda * hv,
        weighted_rhs_max3: -lambda * hmax3 + lambda * hv,
        one_param_direct: h(&one),
        one_param_identity: (1.0 + lambda) * hf + lambda * hmax3 - 4.0 * lambda * hwf - lambda * hw + huct,
        one_param_printed: (1.0 + lambda) * hf + lambda * hmax3 - 2.0 * lambda * hwf - lambda * hw + huct,
    })
}

/// For the exponential and Pareto baselines `f(F⁻¹(u)) = κ(1 − u)^m`,
/// which makes every baseline term of the decomposition elementary.
fn power_tail_form(baseline: &Baseline) -> Option<(f64, f64)> {
    match baseline.family() {
        Family::Exponential { beta } => Some((beta, 1.0)),
        Family::Pareto { alpha } => Some((alpha, (alpha + 1.0) / alpha)),
        _ => None,
    }
}

/// The worked exponential/Pareto entropy formulas exactly as printed.
pub fn example_entropy_printed(baseline: &Baseline, params: &CtParams) -> Result<f64> {
    let (l1, l2) = (params.lambda1(), params.lambda2());
    let theta = theta_closed_form(params)?;
    match baseline.family() {
        Family::Exponential { beta } => {
            Ok(l1 * (1.0 - beta.ln()) + (1.0 - l2) * ((3.0 * beta).ln() - 2.5) - (l2 - l1) * beta.ln() + theta)
        }
        Family::Pareto { alpha: a } => Ok(l1 * ((a + 1.0) / (a * a) - a.ln())
            + (1.0 - l2) * (1.0 / 6.0 - 7.0 / (6.0 * a) - (3.0 * a).ln())
            + (l2 - l1) * ((a + 1.0) * (3.0 - 2.0 * a) / (2.0 * a) - a.ln())
            + theta),
        _ => Err(CtError::Config(
            "worked entropy examples exist only for exp and pareto".into(),
        )),
    }
}

/// The same quantity from the decomposition with the elementary terms
/// `H(f) = m − log κ`, `H^F(f) = 3m/4 − (log κ)/2`,
/// `H(f_max) = 2/3 + 11m/6 − log(3κ)`.
pub fn example_entropy_corrected(baseline: &Baseline, params: &CtParams) -> Result<f64> {
    let (kappa, m) = power_tail_form(baseline)
        .ok_or_else(|| CtError::Config("worked entropy examples exist only for exp and pareto".into()))?;
    let (l1, l2) = (params.lambda1(), params.lambda2());
    let hf = m - kappa.ln();
    let hwf = 0.75 * m - 0.5 * kappa.ln();
    let hmax = 2.0 / 3.0 + 11.0 * m / 6.0 - (3.0 * kappa).ln();
    Ok(l1 * hf + (1.0 - l2) * hmax + 2.0 * (l2 - l1) * hwf + theta_closed_form(params)?)
}
