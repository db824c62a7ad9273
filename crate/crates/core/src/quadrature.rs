//! Adaptive Gauss–Kronrod integration and Monte-Carlo expectations.
//!
//! Every closed form in the crate is checked against these routines, so
//! they stay deliberately generic: no knowledge of the CT family leaks in.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::Continuous;
use crate::error::{CtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Evaluation points closer than this to 0 or 1 are clipped in
    /// [`integrate_unit`]; the clipped mass enters the error bound.
    pub endpoint_eps: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
            endpoint_eps: 1e-12,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        QuadratureSpec {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.max_subdivisions > 0
            && self.endpoint_eps > 0.0
            && self.endpoint_eps < 1e-6;
        if ok {
            Ok(())
        } else {
            Err(CtError::Config(format!(
                "quadrature tolerances must be positive with endpoint_eps < 1e-6: {self:?}"
            )))
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// A value together with an error bound and an honest convergence flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error_bound: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            error_bound: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    /// Affine combination of independent estimates; error bounds add.
    pub fn combine(terms: &[(f64, Estimate)]) -> Estimate {
        terms.iter().fold(Estimate::exact(0.0), |acc, (w, e)| Estimate {
            value: acc.value + w * e.value,
            error_bound: acc.error_bound + w.abs() * e.error_bound,
            evaluations: acc.evaluations + e.evaluations,
            converged: acc.converged && e.converged,
        })
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Estimate {
        Estimate {
            value: f(self.value),
            ..self
        }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Panel { a, b, value, error }
}

/// Adaptive 21-point Gauss–Kronrod integration over a finite interval.
///
/// Non-convergence is reported through [`Estimate::converged`], never by
/// panicking, so a sweep can carry on past a bad cell.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Estimate {
    if a == b {
        return Estimate::exact(0.0);
    }
    let first = gk21(&f, a, b);
    let mut evaluations = 21;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    let mut frozen_err = 0.0;
    heap.push(first);
    let mut subdivisions = 1;
    while total_err > spec.target(total) && subdivisions < spec.max_subdivisions {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || !worst.error.is_finite() && (worst.b - worst.a) < 1e-300 {
            // Too narrow to split further; keep its contribution as is.
            frozen_err += worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        evaluations += 42;
        subdivisions += 1;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if heap.is_empty() {
            break;
        }
    }
    // Re-sum to shed the drift of the running updates.
    let (value, err) = heap
        .iter()
        .fold((0.0, frozen_err), |(v, e), p| (v + p.value, e + p.error));
    let error_bound = err.max(0.0);
    Estimate {
        value,
        error_bound,
        evaluations,
        converged: value.is_finite() && error_bound <= spec.target(value),
    }
}

/// Integral over `(0, 1)` with evaluation points clipped to
/// `[endpoint_eps, 1 − endpoint_eps]`.
///
/// Each clipped strip is replaced by the integral of a local power law
/// `c·t^p` (`t` the distance to the endpoint) fitted through the values at
/// `eps` and `2·eps`, so integrable endpoint singularities such as
/// `(1 − u)^(−1/3)` do not leak mass. The spread against a fit through
/// `2·eps` and `4·eps` enters the error bound; a strip whose fitted exponent
/// is `≤ −1` (not integrable) makes the bound infinite.
pub fn integrate_unit<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Estimate {
    let eps = spec.endpoint_eps;
    let clipped = |u: f64| f(u.clamp(eps, 1.0 - eps));
    // Half the budget for the interior, the rest for the strips.
    let inner = QuadratureSpec {
        abs_tol: 0.5 * spec.abs_tol,
        rel_tol: 0.5 * spec.rel_tol,
        ..*spec
    };
    let mut est = integrate(clipped, 0.0, 1.0, &inner);
    let mut tail_err = 0.0;
    for at in [|t: f64| t, |t: f64| 1.0 - t] {
        let (strip, err) = endpoint_strip(|t| f(at(t)), eps);
        // The interior pass already counted `eps·f(eps)` for the strip.
        est.value += strip - eps * f(at(eps));
        tail_err += err;
    }
    est.error_bound += tail_err;
    est.evaluations += 6;
    est.converged = est.value.is_finite() && est.error_bound <= spec.target(est.value);
    est
}

/// `∫₀^eps h(t) dt` under a power-law model of `h`, with an error estimate.
fn endpoint_strip<H: Fn(f64) -> f64>(h: H, eps: f64) -> (f64, f64) {
    let (h1, h2, h4) = (h(eps), h(2.0 * eps), h(4.0 * eps));
    let flat = eps * h1;
    if !flat.is_finite() {
        return (flat, f64::INFINITY);
    }
    if flat == 0.0 {
        return (0.0, eps * h2.abs());
    }
    let exponent = |near: f64, far: f64| (far / near).ln() / 2f64.ln();
    let strip = |p: f64| flat / (1.0 + p);
    if h1.signum() != h2.signum() || h2.signum() != h4.signum() {
        // No consistent power law; fall back to the flat strip.
        return (flat, flat.abs());
    }
    let (p, p_far) = (exponent(h1, h2), exponent(h2, h4));
    if p <= -1.0 || p_far <= -1.0 {
        return (flat, f64::INFINITY);
    }
    let value = strip(p);
    (value, (value - strip(p_far)).abs() + 1e-3 * (value - flat).abs())
}

/// `∫ fun(x) dx` over the support of `dist`, evaluated as
/// `∫₀¹ fun(Q(u)) / f(Q(u)) du`.
pub fn integrate_support<D, F>(fun: F, dist: &D, spec: &QuadratureSpec) -> Estimate
where
    D: Continuous + ?Sized,
    F: Fn(f64) -> f64,
{
    integrate_unit(
        |u| {
            let x = dist.quantile(u);
            fun(x) / dist.density_at_quantile(u)
        },
        spec,
    )
}

/// Sample mean of `fun(X)` with `X` drawn by `sampler`; the error bound is
/// three standard errors.
pub fn mc_expect<F, S>(fun: F, mut sampler: S, n: usize, seed: u64) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
    S: FnMut(&mut ChaCha8Rng) -> f64,
{
    if n < 2 {
        return Err(CtError::Config(
            "Monte-Carlo expectation needs at least two draws".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=n {
        let y = fun(sampler(&mut rng));
        let delta = y - mean;
        mean += delta / k as f64;
        m2 += delta * (y - mean);
    }
    let var = m2 / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    Ok(Estimate {
        value: mean,
        error_bound: 3.0 * se,
        evaluations: n,
        converged: mean.is_finite(),
    })
}
