//! Fisher information for the CT parameters, the one-parameter cubic, and
//! maximum-likelihood fits with Wald intervals.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::baselines::Baseline;
use crate::ct_model::{make_ct, make_one_param_cubic, CtDistribution, CtParams, CubicMap};
use crate::ct_roots::{inv_g_integral, inv_g_integral_printed, log_ratio, real_part, Aux};
use crate::dist::Continuous;
use crate::divergences::chi_square;
use crate::error::{CtError, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::quadrature::{integrate_unit, Estimate, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMethod {
    ClosedForm,
    Quadrature,
    Observed,
}

/// Symmetric 2×2 information matrix for `(λ₁, λ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherMatrix {
    pub i11: f64,
    pub i12: f64,
    pub i22: f64,
    pub method: FisherMethod,
    /// Some entry is infinite because the density vanishes on `[0, 1]`.
    pub divergent: bool,
}

impl FisherMatrix {
    fn new(i11: f64, i12: f64, i22: f64, method: FisherMethod) -> Self {
        FisherMatrix {
            i11,
            i12,
            i22,
            method,
            divergent: !(i11.is_finite() && i12.is_finite() && i22.is_finite()),
        }
    }

    pub fn as_array(&self) -> [[f64; 2]; 2] {
        [[self.i11, self.i12], [self.i12, self.i22]]
    }

    pub fn determinant(&self) -> f64 {
        self.i11 * self.i22 - self.i12 * self.i12
    }

    pub fn is_psd(&self) -> bool {
        self.i11 >= 0.0 && self.i22 >= 0.0 && self.determinant() >= -1e-9
    }

    pub fn inverse(&self) -> Option<[[f64; 2]; 2]> {
        let det = self.determinant();
        if !det.is_finite() || det.abs() < 1e-14 * (self.i11 * self.i22).abs().max(1e-300) {
            return None;
        }
        Some([[self.i22 / det, -self.i12 / det], [-self.i12 / det, self.i11 / det]])
    }

    pub fn max_abs_diff(&self, other: &FisherMatrix) -> f64 {
        let d = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() };
        d(self.i11, other.i11)
            .max(d(self.i12, other.i12))
            .max(d(self.i22, other.i22))
    }
}

/// `(1 − 2u, 2u − 3u²)`: derivatives of `g(u)` in `λ₁` and `λ₂`.
fn dg(u: f64) -> [f64; 2] {
    [1.0 - 2.0 * u, 2.0 * u - 3.0 * u * u]
}

/// Score of `log f_CT` in `(λ₁, λ₂)` at a point with `F(x) = u`.
pub fn lambda_score(params: &CtParams, u: f64) -> [f64; 2] {
    let g = params.g(u);
    let [a, b] = dg(u);
    [a / g, b / g]
}

/// Infinite unless the estimate is stable under a wider endpoint clip.
fn settle(est: Estimate, spec: &QuadratureSpec, rerun: impl Fn(&QuadratureSpec) -> Estimate) -> f64 {
    if !est.value.is_finite() {
        return f64::INFINITY;
    }
    if !est.converged {
        let wide = QuadratureSpec {
            endpoint_eps: spec.endpoint_eps * 1e3,
            ..*spec
        };
        let other = rerun(&wide).value;
        if (other - est.value).abs() > 1e-6 * est.value.abs().max(1.0) {
            return f64::INFINITY;
        }
    }
    est.value
}

/// Entries `∫ρᵢρⱼ/g du` by quadrature in `u`.
pub fn fisher_uniform_quadrature(params: &CtParams, spec: &QuadratureSpec) -> FisherMatrix {
    let entry = |i: usize, j: usize| {
        let run = |s: &QuadratureSpec| {
            integrate_unit(
                |u| {
                    let d = dg(u);
                    d[i] * d[j] / params.g(u)
                },
                s,
            )
        };
        settle(run(spec), spec, run)
    };
    FisherMatrix::new(entry(0, 0), entry(0, 1), entry(1, 1), FisherMethod::Quadrature)
}

/// Expected information of a CT distribution as `E[score·scoreᵀ]`, with the
/// score evaluated at `x = Q_CT(v)` through the baseline CDF.
pub fn fisher_matrix(ct: &CtDistribution, spec: &QuadratureSpec) -> FisherMatrix {
    let b = ct.baseline;
    let entry = |i: usize, j: usize| {
        let run = |s: &QuadratureSpec| {
            integrate_unit(
                |v| {
                    let x = ct.quantile(v);
                    let sc = lambda_score(&ct.params, b.cdf(x));
                    sc[i] * sc[j]
                },
                s,
            )
        };
        settle(run(spec), spec, run)
    };
    FisherMatrix::new(entry(0, 0), entry(0, 1), entry(1, 1), FisherMethod::Quadrature)
}

/// CT-uniform matrix from the roots of `g`.
///
/// `ω₁ = (2/r){(p − p²)L(p) − (q − q²)L(q)}`,
/// `ω₂ = (1/2r){(2p − 7p² + 6p³)L(p) − …}`,
/// `ω₃ = (1/2r){(4p² − 12p³ + 9p⁴)L(p) − …}`.
pub fn fisher_uniform_closed(params: &CtParams) -> Result<FisherMatrix> {
    closed_with(params, inv_g_integral(params.lambda1(), params.lambda2()))
}

/// As [`fisher_uniform_closed`] but with `∫1/g` taken as the literal
/// `(1/r)·artanh(r/λ₂)`.
pub fn fisher_uniform_printed(params: &CtParams) -> Result<FisherMatrix> {
    let a = real_part(inv_g_integral_printed(params.lambda1(), params.lambda2()))?;
    closed_with(params, a)
}

fn closed_with(params: &CtParams, inv_g: f64) -> Result<FisherMatrix> {
    let aux = Aux::new(params)?;
    let (l1, l2) = (params.lambda1(), params.lambda2());
    let e = 1.0 - l2;
    let w1 = real_part(aux.half_diff(|x| 4.0 * (x - x * x)))?;
    let w2 = real_part(aux.half_diff(|x| 2.0 * x - 7.0 * x * x + 6.0 * x * x * x))?;
    let w3 = real_part(aux.half_diff(|x| {
        let x2 = x * x;
        4.0 * x2 - 12.0 * x2 * x + 9.0 * x2 * x2
    }))?;
    let i11 = inv_g + w1 + 4.0 / (3.0 * e);
    let i12 = -w2 - 4.0 * (1.0 - l1) / (3.0 * e * e);
    let i22 = (4.0 * l1 * l1 - 8.0 * l1 + 3.0 * l2 + 1.0) / (3.0 * e * e * e) - w3;
    Ok(FisherMatrix::new(i11, i12, i22, FisherMethod::ClosedForm))
}

/// Closed form where the root algebra is well conditioned, quadrature
/// otherwise (`λ₂ = 1` or a near-double root).
pub fn fisher_uniform(params: &CtParams, spec: &QuadratureSpec) -> FisherMatrix {
    fisher_uniform_closed(params).unwrap_or_else(|_| fisher_uniform_quadrature(params, spec))
}

const SERIES_RADIUS: f64 = 0.01;
const SERIES_TERMS: usize = 16;

/// `∫₀¹ hʲ du` for `h(u) = 1 − 4u + 3u²`, `j = 0..n`.
fn h_moments(n: usize) -> Vec<f64> {
    let h = [1.0, -4.0, 3.0];
    let mut poly = vec![1.0];
    let mut out = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        out.push(poly.iter().enumerate().map(|(i, c)| c / (i + 1) as f64).sum());
        let mut next = vec![0.0; poly.len() + 2];
        for (i, a) in poly.iter().enumerate() {
            for (j, b) in h.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        poly = next;
    }
    out
}

/// Fisher information of the one-parameter cubic, `(∫₀¹ du/g* − 1)/λ²`
/// with `g*(u) = 1 + λ(1 − 4u + 3u²)`.
///
/// Near `λ = 0` the expansion `Σₖ (−λ)ᵏ ∫h^{k+2}` is used; its value at
/// zero is `∫h² = 2/15`.
pub fn fisher_one_param(lambda: f64) -> Result<f64> {
    CtParams::one_param(lambda)?;
    if lambda.abs() < SERIES_RADIUS {
        let m = h_moments(SERIES_TERMS + 2);
        return Ok((0..SERIES_TERMS).map(|k| (-lambda).powi(k as i32) * m[k + 2]).sum());
    }
    Ok((inv_g_integral(1.0 + lambda, 1.0 - lambda) - 1.0) / (lambda * lambda))
}

/// The printed closed expression for `I(λ)` with
/// `p* = (r* − 2λ)/(3λ)`, `q* = (r* + 2λ)/(3λ)`, evaluated literally.
pub fn fisher_one_param_printed(lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Err(CtError::Degenerate("printed I(lambda) is undefined at 0"));
    }
    let l = C::new(lambda, 0.0);
    let r = (l * l - 3.0 * l).sqrt();
    let p = (r - 2.0 * l) / (3.0 * l);
    let q = (r + 2.0 * l) / (3.0 * l);
    let pi = |x: C| l * l / (2.0 * r) * (9.0 * x.powi(4) - 24.0 * x.powi(3) + 22.0 * x * x - 8.0 * x) * log_ratio(x);
    let inner = l * l / r * (r / (1.0 - l)).atanh() + pi(p) - pi(q) - l / 3.0 * (13.0 * l + 10.0);
    real_part(inner / (l * l))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneParamFisher {
    pub lambda: f64,
    pub closed_form: f64,
    /// `χ²(f, f*)/λ²` by quadrature; absent at `λ = 0`.
    pub identity: Option<f64>,
    /// `E[(∂ log f*/∂λ)²]` by quadrature.
    pub direct: f64,
    pub printed: Option<f64>,
}

pub fn fisher_one_param_paths(baseline: &Baseline, lambda: f64, spec: &QuadratureSpec) -> Result<OneParamFisher> {
    let closed_form = fisher_one_param(lambda)?;
    let ct = make_one_param_cubic(*baseline, lambda)?;
    let identity = (lambda != 0.0).then(|| chi_square(baseline, &ct, spec).value / (lambda * lambda));
    let h = |u: f64| 1.0 - 4.0 * u + 3.0 * u * u;
    let run = |s: &QuadratureSpec| integrate_unit(|u| h(u) * h(u) / ct.params.g(u), s);
    let direct = settle(run(spec), spec, run);
    Ok(OneParamFisher {
        lambda,
        closed_form,
        identity,
        direct,
        printed: fisher_one_param_printed(lambda).ok(),
    })
}

/// Two-sided standard normal quantile `z` with `P(|Z| ≤ z) = level`.
///
/// 90% and 95% use the customary 1.645 and 1.960; other levels use the
/// Abramowitz–Stegun rational approximation (absolute error < 4.5e-4).
pub fn z_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(CtError::ParamDomain {
            name: "level".into(),
            value: level,
            reason: "confidence level must lie in (0, 1)",
        });
    }
    if (level - 0.90).abs() < 1e-12 {
        return Ok(1.645);
    }
    if (level - 0.95).abs() < 1e-12 {
        return Ok(1.960);
    }
    let tail = (1.0 - level) / 2.0;
    let t = (-2.0 * tail.ln()).sqrt();
    let num = 2.515517 + 0.802853 * t + 0.010328 * t * t;
    let den = 1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t;
    Ok(t - num / den)
}

/// Parametric models for likelihood fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// CT with a uniform(0, 1) baseline: `(λ₁, λ₂)`.
    #[serde(alias = "ctu")]
    CtUniform,
    /// CT with a unit-scale Weibull baseline: `(λ₁, λ₂, k)`.
    #[serde(alias = "ctw")]
    CtWeibull,
}

impl std::str::FromStr for Model {
    type Err = CtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ctu" | "ct_uniform" => Ok(Model::CtUniform),
            "ctw" | "ct_weibull" => Ok(Model::CtWeibull),
            other => Err(CtError::Config(format!(
                "unknown model `{other}` (expected ctu or ctw)"
            ))),
        }
    }
}

impl Model {
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Model::CtUniform => &["lambda1", "lambda2"],
            Model::CtWeibull => &["lambda1", "lambda2", "k"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::CtUniform => "ct_uniform",
            Model::CtWeibull => "ct_weibull",
        }
    }

    pub fn dim(self) -> usize {
        self.param_names().len()
    }

    /// `(λ₁, λ₂)` from the strict box with a non-negative density, `k > 0`.
    pub fn check(self, theta: &[f64]) -> Result<CtParams> {
        if theta.len() != self.dim() {
            return Err(CtError::Config(format!(
                "{} takes {} parameters, got {}",
                self.name(),
                self.dim(),
                theta.len()
            )));
        }
        if self == Model::CtWeibull && !(theta[2] > 0.0 && theta[2].is_finite()) {
            return Err(CtError::ParamDomain {
                name: "k".into(),
                value: theta[2],
                reason: "Weibull shape must be positive",
            });
        }
        CtParams::strict(theta[0], theta[1])
    }

    pub fn baseline(self, theta: &[f64]) -> Result<Baseline> {
        match self {
            Model::CtUniform => Ok(Baseline::uniform()),
            Model::CtWeibull => Baseline::weibull(theta[2]),
        }
    }

    pub fn distribution(self, theta: &[f64]) -> Result<CtDistribution> {
        let params = self.check(theta)?;
        Ok(make_ct(self.baseline(theta)?, params))
    }

    /// Open support check of a single observation.
    pub fn in_support(self, x: f64) -> bool {
        match self {
            Model::CtUniform => x > 0.0 && x < 1.0,
            Model::CtWeibull => x > 0.0 && x.is_finite(),
        }
    }

    fn log_density(self, map: &CubicMap, theta: &[f64], x: f64) -> f64 {
        match self {
            Model::CtUniform => map.pdf(x).ln(),
            Model::CtWeibull => {
                let k = theta[2];
                let t = x.powf(k);
                let u = -(-t).exp_m1();
                k.ln() + (k - 1.0) * x.ln() - t + map.pdf(u).ln()
            }
        }
    }

    /// Log-likelihood; `−∞` outside the parameter region.
    pub fn log_likelihood(self, theta: &[f64], data: &[f64]) -> f64 {
        let Ok(params) = self.check(theta) else {
            return f64::NEG_INFINITY;
        };
        let map = params.map();
        let ll: f64 = data.iter().map(|&x| self.log_density(&map, theta, x)).sum();
        if ll.is_nan() {
            f64::NEG_INFINITY
        } else {
            ll
        }
    }

    /// Per-observation score at a point with baseline CDF `u` (and, for the
    /// Weibull model, `t = x^k = −ln(1 − u)`).
    fn score_at(self, params: &CtParams, theta: &[f64], u: f64) -> Vec<f64> {
        let [s1, s2] = lambda_score(params, u);
        match self {
            Model::CtUniform => vec![s1, s2],
            Model::CtWeibull => {
                let k = theta[2];
                let t = -(-u).ln_1p();
                let tl = t * t.ln();
                let map = params.map();
                let dlog_g = map.pdf_derivative(u) / map.pdf(u);
                let sk = (1.0 + t.ln() - tl + dlog_g * (1.0 - u) * tl) / k;
                vec![s1, s2, sk]
            }
        }
    }
}

/// Information per observation and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoKind {
    Expected,
    Observed,
}

/// Expected information per observation, `∫₀¹ s(u)s(u)ᵀ g(u) du`.
pub fn expected_information(model: Model, theta: &[f64], spec: &QuadratureSpec) -> Result<DMatrix<f64>> {
    let params = model.check(theta)?;
    let d = model.dim();
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let run = |s: &QuadratureSpec| {
                integrate_unit(
                    |u| {
                        let sc = model.score_at(&params, theta, u);
                        sc[i] * sc[j] * params.g(u)
                    },
                    s,
                )
            };
            let v = settle(run(spec), spec, run);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Observed information per observation: central-difference Hessian of
/// `−ℓ(θ)/n`.
pub fn observed_information(model: Model, theta: &[f64], data: &[f64]) -> Result<DMatrix<f64>> {
    model.check(theta)?;
    let d = model.dim();
    let n = data.len() as f64;
    let nll = |t: &[f64]| -model.log_likelihood(t, data) / n;
    let h: Vec<f64> = theta.iter().map(|t| 1e-4 * t.abs().max(1.0)).collect();
    let shifted = |pairs: &[(usize, f64)]| {
        let mut t = theta.to_vec();
        for &(i, s) in pairs {
            t[i] += s;
        }
        nll(&t)
    };
    let mut m = DMatrix::zeros(d, d);
    let f0 = nll(theta);
    for i in 0..d {
        for j in i..d {
            let v = if i == j {
                (shifted(&[(i, h[i])]) - 2.0 * f0 + shifted(&[(i, -h[i])])) / (h[i] * h[i])
            } else {
                (shifted(&[(i, h[i]), (j, h[j])])
                    - shifted(&[(i, h[i]), (j, -h[j])])
                    - shifted(&[(i, -h[i]), (j, h[j])])
                    + shifted(&[(i, -h[i]), (j, -h[j])]))
                    / (4.0 * h[i] * h[j])
            };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    if m.iter().all(|v| v.is_finite()) {
        Ok(m)
    } else {
        Err(CtError::Degenerate(
            "observed information touches the parameter boundary",
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartTrace {
    pub start: Vec<f64>,
    pub neg_loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: Model,
    pub n: usize,
    pub estimates: Vec<NamedValue>,
    pub loglik: f64,
    pub info_kind: InfoKind,
    /// Per-observation information, row-major.
    pub information: Vec<Vec<f64>>,
    /// The `(λ₁, λ₂)` block.
    pub fisher: FisherMatrix,
    pub level: f64,
    pub ci: Vec<Interval>,
    /// False when the information matrix is singular; `ci` is then empty.
    pub ci_available: bool,
    pub converged: bool,
    pub evaluations: usize,
    pub starts: Vec<StartTrace>,
}

impl FitResult {
    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.estimates.iter().find(|e| e.name == name).map(|e| e.value)
    }

    pub fn interval(&self, name: &str) -> Option<&Interval> {
        self.ci.iter().find(|c| c.name == name)
    }

    pub fn theta(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.value).collect()
    }

    /// Wald intervals from the stored information at another level; empty
    /// when the information is singular.
    pub fn intervals_at(&self, level: f64) -> Result<Vec<Interval>> {
        let z = z_quantile(level)?;
        let d = self.information.len();
        let info = DMatrix::from_fn(d, d, |i, j| self.information[i][j]);
        Ok(wald_intervals(self.model, &self.theta(), &info, self.n, z))
    }
}

/// `θ̂ ± z·sqrt(diag(I⁻¹)/n)`, clipped to the parameter box.
fn wald_intervals(model: Model, theta: &[f64], info: &DMatrix<f64>, n: usize, z: f64) -> Vec<Interval> {
    let inverse = if info.iter().all(|v| v.is_finite()) {
        info.clone().try_inverse()
    } else {
        None
    };
    let names = model.param_names();
    match inverse {
        Some(inv) if (0..names.len()).all(|i| inv[(i, i)] > 0.0) => names
            .iter()
            .zip(bounds(model))
            .enumerate()
            .map(|(i, (name, (lo, hi)))| {
                let half = z * (inv[(i, i)] / n as f64).sqrt();
                Interval {
                    name: name.to_string(),
                    lo: (theta[i] - half).max(lo),
                    hi: (theta[i] + half).min(hi),
                }
            })
            .collect(),
        _ => vec![],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitOptions {
    pub level: f64,
    pub info: InfoKind,
    /// Tried first, ahead of the fixed start grid.
    pub init: Option<Vec<f64>>,
    pub optimizer: NelderMeadOptions,
    pub quadrature: QuadratureSpec,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            level: 0.95,
            info: InfoKind::Expected,
            init: None,
            optimizer: NelderMeadOptions {
                f_tol: 1e-10,
                x_tol: 1e-7,
                ..Default::default()
            },
            quadrature: QuadratureSpec::with_tolerances(1e-10, 1e-9),
        }
    }
}

pub const MIN_FIT_SIZE: usize = 30;

const LAMBDA_STARTS: [(f64, f64); 5] = [(0.5, 0.5), (0.2, 0.8), (0.8, 0.2), (0.3, 0.1), (0.7, 0.9)];

fn starts(model: Model, data: &[f64], init: Option<&[f64]>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = init.map(|s| vec![s.to_vec()]).unwrap_or_default();
    let k0 = match model {
        Model::CtUniform => None,
        Model::CtWeibull => Some(weibull_shape_guess(data)),
    };
    for &(a, b) in LAMBDA_STARTS.iter() {
        let mut s = vec![a, b];
        s.extend(k0);
        out.push(s);
    }
    out.truncate(5);
    out
}

/// Moment-free shape guess from the spread of `log x`: for a Weibull,
/// `sd(log X) = π/(k√6)`.
fn weibull_shape_guess(data: &[f64]) -> f64 {
    let logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let k = std::f64::consts::PI / (var.sqrt() * 6f64.sqrt());
    if k.is_finite() && k > 0.0 {
        k
    } else {
        1.0
    }
}

/// The parameter box used to clip intervals.
fn bounds(model: Model) -> Vec<(f64, f64)> {
    let mut b = vec![(0.0, 1.0), (-1.0, 1.0)];
    if model == Model::CtWeibull {
        b.push((0.0, f64::INFINITY));
    }
    b
}

/// Maximum likelihood over the strict box with non-negative density, from
/// up to five deterministic starts, followed by Wald intervals.
pub fn mle_fit(data: &[f64], model: Model, opts: &FitOptions) -> Result<FitResult> {
    if data.len() < MIN_FIT_SIZE {
        return Err(CtError::Config(format!(
            "fitting needs at least {MIN_FIT_SIZE} observations, got {}",
            data.len()
        )));
    }
    if let Some(&bad) = data.iter().find(|&&x| !model.in_support(x)) {
        return Err(CtError::ParamDomain {
            name: "data".into(),
            value: bad,
            reason: "observation outside the model support",
        });
    }
    let z = z_quantile(opts.level)?;
    let n = data.len() as f64;
    let objective = |t: &[f64]| -model.log_likelihood(t, data) / n;

    let mut traces = vec![];
    let mut best: Option<crate::optim::Minimum> = None;
    let mut evaluations = 0;
    for s in starts(model, data, opts.init.as_deref()) {
        let m = nelder_mead(objective, &s, &opts.optimizer);
        evaluations += m.evaluations;
        traces.push(StartTrace {
            start: s,
            neg_loglik: m.value,
            iterations: m.iterations,
            converged: m.converged,
        });
        if m.value.is_finite() && best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let Some(best) = best else {
        return Err(CtError::FitFailed(format!(
            "no start reached a finite likelihood: {}",
            serde_json::to_string(&traces).unwrap_or_default()
        )));
    };
    if !best.converged {
        return Err(CtError::FitFailed(format!(
            "optimizer did not converge: {}",
            serde_json::to_string(&traces).unwrap_or_default()
        )));
    }
    let theta = best.x.clone();
    let info = match opts.info {
        InfoKind::Expected => expected_information(model, &theta, &opts.quadrature)?,
        InfoKind::Observed => observed_information(model, &theta, data)?,
    };
    let fisher = FisherMatrix::new(
        info[(0, 0)],
        info[(0, 1)],
        info[(1, 1)],
        match opts.info {
            InfoKind::Expected => FisherMethod::Quadrature,
            InfoKind::Observed => FisherMethod::Observed,
        },
    );
    let names = model.param_names();
    let ci = wald_intervals(model, &theta, &info, data.len(), z);
    Ok(FitResult {
        model,
        n: data.len(),
        estimates: names
            .iter()
            .zip(&theta)
            .map(|(name, v)| NamedValue {
                name: name.to_string(),
                value: *v,
            })
            .collect(),
        loglik: -best.value * n,
        info_kind: opts.info,
        information: info.row_iter().map(|r| r.iter().copied().collect()).collect(),
        fisher,
        level: opts.level,
        ci_available: !ci.is_empty(),
        ci,
        converged: best.converged,
        evaluations,
        starts: traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn p(l1: f64, l2: f64) -> CtParams {
        CtParams::new(l1, l2).unwrap()
    }

    #[test]
    fn closed_matches_quadrature() {
        let params = p(0.4, 0.6);
        let c = fisher_uniform_closed(&params).unwrap();
        let q = fisher_uniform_quadrature(&params, &spec());
        assert!(c.max_abs_diff(&q) < 1e-7, "{c:?} {q:?}");
        assert_eq!(c.as_array()[0][1], c.as_array()[1][0]);
        assert!(c.is_psd());
        // complex roots, λ₂ < 0
        let params = p(0.9, -0.5);
        let c = fisher_uniform_closed(&params).unwrap();
        let q = fisher_uniform_quadrature(&params, &spec());
        assert!(c.max_abs_diff(&q) < 1e-7, "{c:?} {q:?}");
    }

    #[test]
    fn baseline_invariance() {
        let params = p(0.3, 0.7);
        let u = fisher_matrix(&make_ct(Baseline::uniform(), params), &spec());
        let e = fisher_matrix(&make_ct(Baseline::exponential(1.0).unwrap(), params), &spec());
        assert!(u.max_abs_diff(&e) < 1e-7, "{u:?} {e:?}");
        let q = fisher_uniform_quadrature(&params, &spec());
        assert!(u.max_abs_diff(&q) < 1e-7);
    }

    #[test]
    fn vanishing_density_gives_divergent_entry() {
        let params = p(0.0, 0.5);
        let q = fisher_uniform_quadrature(&params, &spec());
        assert!(q.divergent && q.i11.is_infinite());
        assert!(q.i22.is_finite());
        let c = fisher_uniform_closed(&params).unwrap();
        assert!(c.i11.is_infinite());
        assert!((c.i22 - q.i22).abs() < 1e-7);
    }

    #[test]
    fn printed_i11_breaks_for_negative_lambda2() {
        let params = p(0.9, -0.5);
        let c = fisher_uniform_closed(&params).unwrap();
        if let Ok(pr) = fisher_uniform_printed(&params) {
            assert!((pr.i11 - c.i11).abs() > 1e-3);
        }
        let params = p(0.4, 0.6);
        let pr = fisher_uniform_printed(&params).unwrap();
        assert!(pr.max_abs_diff(&fisher_uniform_closed(&params).unwrap()) < 1e-12);
    }

    #[test]
    fn one_param_limit_and_identity() {
        assert!((fisher_one_param(0.0).unwrap() - 2.0 / 15.0).abs() < 1e-15);
        // series and closed form meet at the switch-over
        let a = fisher_one_param(0.00999999).unwrap();
        let b = (inv_g_integral(1.00999999, 1.0 - 0.00999999) - 1.0) / 0.00999999f64.powi(2);
        assert!((a - b).abs() < 1e-9);
        let r = fisher_one_param_paths(&Baseline::uniform(), 0.5, &spec()).unwrap();
        assert!((r.identity.unwrap() - r.closed_form).abs() < 1e-7);
        assert!((r.direct - r.closed_form).abs() < 1e-7);
        let minus = fisher_one_param(-0.5).unwrap();
        assert!((minus - r.closed_form).abs() > 1e-3);
        assert!(r.printed.is_none_or(|v| (v - r.closed_form).abs() > 1e-3));
    }

    #[test]
    fn z_values() {
        assert_eq!(z_quantile(0.90).unwrap(), 1.645);
        assert_eq!(z_quantile(0.95).unwrap(), 1.960);
        assert!((z_quantile(0.99).unwrap() - 2.5758).abs() < 5e-4);
        assert!((z_quantile(0.5).unwrap() - 0.6745).abs() < 5e-4);
        assert!(z_quantile(1.0).is_err());
    }

    fn quantile_data(model: Model, theta: &[f64], n: usize) -> Vec<f64> {
        let d = model.distribution(theta).unwrap();
        (0..n).map(|i| d.quantile((i as f64 + 0.5) / n as f64)).collect()
    }

    #[test]
    fn perfect_fit_recovers_truth() {
        let truth = [0.4, 0.6];
        let data = quantile_data(Model::CtUniform, &truth, 10_000);
        let fit = mle_fit(&data, Model::CtUniform, &FitOptions::default()).unwrap();
        for (e, t) in fit.theta().iter().zip(truth) {
            assert!((e - t).abs() < 0.05, "{fit:?}");
        }
        for c in &fit.ci {
            let e = fit.estimate(&c.name).unwrap();
            assert!(c.lo <= e && e <= c.hi);
        }

        let truth = [0.4, 0.6, 1.0];
        let data = quantile_data(Model::CtWeibull, &truth, 10_000);
        let fit = mle_fit(&data, Model::CtWeibull, &FitOptions::default()).unwrap();
        for (e, t) in fit.theta().iter().zip(truth) {
            assert!((e - t).abs() < 0.05, "{fit:?}");
        }
    }

    #[test]
    fn expected_and_observed_agree_on_quantile_data() {
        let truth = [0.4, 0.6, 1.3];
        let data = quantile_data(Model::CtWeibull, &truth, 20_000);
        let e = expected_information(Model::CtWeibull, &truth, &spec()).unwrap();
        let o = observed_information(Model::CtWeibull, &truth, &data).unwrap();
        for (a, b) in e.iter().zip(o.iter()) {
            assert!((a - b).abs() < 2e-2 * a.abs().max(1.0), "{e} {o}");
        }
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(mle_fit(&[0.5; 10], Model::CtUniform, &FitOptions::default()).is_err());
        let mut data = vec![0.5; 40];
        data[3] = 1.5;
        assert!(matches!(
            mle_fit(&data, Model::CtUniform, &FitOptions::default()),
            Err(CtError::ParamDomain { .. })
        ));
    }
}
