//! CT parameters, cubic CDF maps and order-statistic components.
//!
//! Every distribution handled by the crate is `G(F(x))` for a baseline `F`
//! and a cubic map `G(u) = c₁u + c₂u² + c₃u³` with `c₁ + c₂ + c₃ = 1`:
//! the CT family itself, the min/median/max of three draws, the max of
//! two, and two-point mixtures. [`Composed`] is that single construction.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baselines::Baseline;
use crate::dist::{Continuous, Support};
use crate::error::{CtError, Result};

// Tolerance for "g ≥ 0" so that boundary parameters such as (0, 0) pass.
const PDF_TOL: f64 = 1e-12;

/// `G(u) = c[0]·u + c[1]·u² + c[2]·u³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicMap {
    pub c: [f64; 3],
}

impl CubicMap {
    pub const IDENTITY: CubicMap = CubicMap { c: [1.0, 0.0, 0.0] };
    pub const MIN3: CubicMap = CubicMap { c: [3.0, -3.0, 1.0] };
    pub const MEDIAN3: CubicMap = CubicMap { c: [0.0, 3.0, -2.0] };
    pub const MAX3: CubicMap = CubicMap { c: [0.0, 0.0, 1.0] };
    pub const MAX2: CubicMap = CubicMap { c: [0.0, 1.0, 0.0] };

    pub fn from_lambdas(lambda1: f64, lambda2: f64) -> Self {
        CubicMap {
            c: [lambda1, lambda2 - lambda1, 1.0 - lambda2],
        }
    }

    /// `v·u + (1 − v)·u³`: the mixture of the baseline and its max-of-three.
    pub fn mixture(v: f64) -> Self {
        CubicMap { c: [v, 0.0, 1.0 - v] }
    }

    pub fn cdf(&self, u: f64) -> f64 {
        let [a, b, c] = self.c;
        u * (a + u * (b + u * c))
    }

    /// `G'(u)`, the density of the map's uniform-baseline distribution.
    pub fn pdf(&self, u: f64) -> f64 {
        let [a, b, c] = self.c;
        a + u * (2.0 * b + 3.0 * c * u)
    }

    pub fn pdf_derivative(&self, u: f64) -> f64 {
        2.0 * self.c[1] + 6.0 * self.c[2] * u
    }

    /// Solves `G(u) = y` on `[0, 1]` by Newton steps safeguarded by bisection.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        if y >= 1.0 {
            return 1.0;
        }
        if *self == CubicMap::IDENTITY {
            return y;
        }
        let [a, b, c] = self.c;
        // Start from the leading small-u behaviour, which is exact for the
        // pure-power maps and keeps tiny quantiles accurate.
        let mut u = if a > 1e-3 {
            y / a
        } else if b > 1e-3 {
            (y / b).sqrt()
        } else {
            (y / c).cbrt()
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        if !(u > 0.0 && u < 1.0) {
            u = 0.5;
        }
        for _ in 0..200 {
            let r = self.cdf(u) - y;
            if r == 0.0 {
                return u;
            }
            if r > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let d = self.pdf(u);
            let mut next = u - r / d;
            if !(d > 0.0) || !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() <= 4.0 * f64::EPSILON * u.max(f64::MIN_POSITIVE) {
                return next;
            }
            if hi - lo <= f64::EPSILON * hi {
                return next;
            }
            u = next;
        }
        u
    }
}

/// `(λ₁, λ₂)` with a non-negative CT density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CtParams {
    lambda1: f64,
    lambda2: f64,
}

impl CtParams {
    /// Relaxed box `λ₁ ∈ [0, 2]`, `λ₂ ∈ [−1, 1]` plus density non-negativity.
    ///
    /// The relaxed `λ₁` range admits the quadratic reduction `λ₁ = 1 + λ`.
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        check_range("lambda1", lambda1, 0.0, 2.0)?;
        check_range("lambda2", lambda2, -1.0, 1.0)?;
        Self::density_checked(lambda1, lambda2)
    }

    /// The literal box `λ₁ ∈ [0, 1]`, `λ₂ ∈ [−1, 1]`.
    pub fn strict(lambda1: f64, lambda2: f64) -> Result<Self> {
        check_range("lambda1", lambda1, 0.0, 1.0)?;
        check_range("lambda2", lambda2, -1.0, 1.0)?;
        Self::density_checked(lambda1, lambda2)
    }

    /// `λ₁ = 1 + λ`, `λ₂ = 1 − λ`. For `λ < 0` this leaves the box
    /// (`λ₂ > 1`) but the density stays valid, so only that is checked.
    pub fn one_param(lambda: f64) -> Result<Self> {
        check_range("lambda", lambda, -1.0, 1.0)?;
        Self::density_checked(1.0 + lambda, 1.0 - lambda)
    }

    fn density_checked(lambda1: f64, lambda2: f64) -> Result<Self> {
        if let Some(u) = negative_density_at(lambda1, lambda2) {
            return Err(CtError::InvalidParams { lambda1, lambda2, u });
        }
        Ok(CtParams { lambda1, lambda2 })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn is_strict(&self) -> bool {
        (0.0..=1.0).contains(&self.lambda1) && (-1.0..=1.0).contains(&self.lambda2)
    }

    pub fn map(&self) -> CubicMap {
        CubicMap::from_lambdas(self.lambda1, self.lambda2)
    }

    /// The CT-uniform density `g(u) = λ₁ + 2(λ₂ − λ₁)u + 3(1 − λ₂)u²`.
    pub fn g(&self, u: f64) -> f64 {
        self.map().pdf(u)
    }

    /// `r² = λ₁² + λ₂² + λ₁λ₂ − 3λ₁`; `g` has real roots iff `r² ≥ 0`.
    pub fn r_squared(&self) -> f64 {
        let (a, b) = (self.lambda1, self.lambda2);
        a * a + b * b + a * b - 3.0 * a
    }

    /// Weights of `f`, `f₂:₃`, `f_max` in the density (they sum to 1 but the
    /// middle one is negative when `λ₂ < λ₁`).
    pub fn component_weights(&self) -> [f64; 3] {
        let (a, b) = (self.lambda1, self.lambda2);
        [a, (b - a) / 3.0, (3.0 - b - 2.0 * a) / 3.0]
    }
}

fn check_range(name: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(CtError::ParamDomain {
            name: name.to_string(),
            value,
            reason: "outside the admissible range",
        })
    }
}

/// The point where `g` dips below zero, if any.
fn negative_density_at(lambda1: f64, lambda2: f64) -> Option<f64> {
    if !(lambda1.is_finite() && lambda2.is_finite()) {
        return Some(f64::NAN);
    }
    let map = CubicMap::from_lambdas(lambda1, lambda2);
    if map.pdf(0.0) < -PDF_TOL {
        return Some(0.0);
    }
    if map.pdf(1.0) < -PDF_TOL {
        return Some(1.0);
    }
    if lambda2 != 1.0 {
        let u_star = (lambda1 - lambda2) / (3.0 * (1.0 - lambda2));
        if u_star > 0.0 && u_star < 1.0 && map.pdf(u_star) < -PDF_TOL {
            return Some(u_star);
        }
    }
    None
}

/// Mixing probabilities of the min, median and max of three draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingProbs {
    pub pi1: f64,
    pub pi2: f64,
    pub pi3: f64,
}

impl MixingProbs {
    pub fn new(pi1: f64, pi2: f64, pi3: f64) -> Result<Self> {
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if in_unit(pi1) && in_unit(pi2) && in_unit(pi3) && (pi1 + pi2 + pi3 - 1.0).abs() <= 1e-12 {
            Ok(MixingProbs { pi1, pi2, pi3 })
        } else {
            Err(CtError::Mixing(pi1, pi2, pi3))
        }
    }

    /// `3π₁ = λ₁`, `3π₂ = λ₂`; fails when that is not a probability vector.
    pub fn from_params(params: &CtParams) -> Result<Self> {
        let pi1 = params.lambda1() / 3.0;
        let pi2 = params.lambda2() / 3.0;
        Self::new(pi1, pi2, 1.0 - pi1 - pi2)
    }

    pub fn to_params(&self) -> Result<CtParams> {
        CtParams::new(3.0 * self.pi1, 3.0 * self.pi2)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.pi1, self.pi2, self.pi3]
    }
}

/// Distribution with CDF `map(F(x))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Composed {
    pub baseline: Baseline,
    pub map: CubicMap,
    #[serde(skip)]
    name: String,
}

impl Composed {
    pub fn new(baseline: Baseline, map: CubicMap, name: impl Into<String>) -> Self {
        Composed {
            baseline,
            map,
            name: name.into(),
        }
    }
}

impl Continuous for Composed {
    fn pdf(&self, x: f64) -> f64 {
        let f = self.baseline.pdf(x);
        if f == 0.0 {
            return 0.0;
        }
        f * self.map.pdf(self.baseline.cdf(x))
    }

    fn cdf(&self, x: f64) -> f64 {
        self.map.cdf(self.baseline.cdf(x))
    }

    fn quantile(&self, u: f64) -> f64 {
        self.baseline.quantile(self.map.inverse(u))
    }

    fn support(&self) -> Support {
        self.baseline.support()
    }

    fn density_at_quantile(&self, u: f64) -> f64 {
        let v = self.map.inverse(u);
        self.baseline.dq(v) * self.map.pdf(v)
    }

    fn has_finite_mean(&self) -> bool {
        self.baseline.has_finite_mean()
    }

    fn label(&self) -> String {
        format!("{}@{}", self.name, self.baseline)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CtKind {
    Cubic,
    Quadratic,
    OneParamCubic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CtDistribution {
    pub baseline: Baseline,
    pub params: CtParams,
    pub kind: CtKind,
    /// The single parameter of the quadratic and one-parameter kinds.
    pub lambda: Option<f64>,
}

impl CtDistribution {
    pub fn composed(&self) -> Composed {
        Composed::new(self.baseline, self.params.map(), self.spec_head())
    }

    fn spec_head(&self) -> String {
        match (self.kind, self.lambda) {
            (CtKind::Quadratic, Some(l)) => format!("qt:l={l}"),
            (CtKind::OneParamCubic, Some(l)) => format!("ct1:l={l}"),
            _ => format!("ct:l1={},l2={}", self.params.lambda1(), self.params.lambda2()),
        }
    }

    /// Order-statistic component of the same baseline.
    pub fn component(&self, which: Component) -> Composed {
        which.over(self.baseline)
    }
}

impl Continuous for CtDistribution {
    fn pdf(&self, x: f64) -> f64 {
        let f = self.baseline.pdf(x);
        if f == 0.0 {
            return 0.0;
        }
        f * self.params.g(self.baseline.cdf(x))
    }

    fn cdf(&self, x: f64) -> f64 {
        self.params.map().cdf(self.baseline.cdf(x))
    }

    fn quantile(&self, u: f64) -> f64 {
        self.baseline.quantile(self.params.map().inverse(u))
    }

    fn support(&self) -> Support {
        self.baseline.support()
    }

    fn density_at_quantile(&self, u: f64) -> f64 {
        let v = self.params.map().inverse(u);
        self.baseline.dq(v) * self.params.g(v)
    }

    fn has_finite_mean(&self) -> bool {
        self.baseline.has_finite_mean()
    }

    fn label(&self) -> String {
        format!("{}@{}", self.spec_head(), self.baseline)
    }
}

pub fn make_ct(baseline: Baseline, params: CtParams) -> CtDistribution {
    CtDistribution {
        baseline,
        params,
        kind: CtKind::Cubic,
        lambda: None,
    }
}

/// `(1 + λ)F − λF²`, i.e. `λ₁ = 1 + λ`, `λ₂ = 1`.
pub fn make_quadratic(baseline: Baseline, lambda: f64) -> Result<CtDistribution> {
    check_range("lambda", lambda, -1.0, 1.0)?;
    Ok(CtDistribution {
        baseline,
        params: CtParams::new(1.0 + lambda, 1.0)?,
        kind: CtKind::Quadratic,
        lambda: Some(lambda),
    })
}

/// `(1 + λ)F − 2λF² + λF³`, i.e. `λ₁ = 1 + λ`, `λ₂ = 1 − λ`.
pub fn make_one_param_cubic(baseline: Baseline, lambda: f64) -> Result<CtDistribution> {
    Ok(CtDistribution {
        baseline,
        params: CtParams::one_param(lambda)?,
        kind: CtKind::OneParamCubic,
        lambda: Some(lambda),
    })
}

/// Order statistics of i.i.d. baseline draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    /// `X₁:₃`, CDF `1 − (1 − F)³`.
    Min,
    /// `X₂:₃`, CDF `3F² − 2F³`.
    Median,
    /// `X₃:₃`, CDF `F³`.
    Max,
    /// Max of two draws, CDF `F²`; `Beta(2, 1)` over a uniform baseline.
    Beta21,
    /// Same law as [`Component::Max`]; `Beta(3, 1)` over a uniform baseline.
    Beta31,
}

impl Component {
    pub fn map(self) -> CubicMap {
        match self {
            Component::Min => CubicMap::MIN3,
            Component::Median => CubicMap::MEDIAN3,
            Component::Max | Component::Beta31 => CubicMap::MAX3,
            Component::Beta21 => CubicMap::MAX2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::Min => "os13:min",
            Component::Median => "os13:med",
            Component::Max => "os13:max",
            Component::Beta21 => "beta21",
            Component::Beta31 => "beta31",
        }
    }

    pub fn over(self, baseline: Baseline) -> Composed {
        Composed::new(baseline, self.map(), self.name())
    }
}

pub fn component_pdf(which: Component, baseline: &Baseline, x: f64) -> f64 {
    which.over(*baseline).pdf(x)
}

/// Draws `n` CT variates by the order-statistic mixture algorithm.
pub fn sample_ct(mix: &MixingProbs, baseline: &Baseline, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(CtError::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_ct_with(mix, baseline, n, &mut rng))
}

/// As [`sample_ct`] but drawing from a caller-owned stream.
///
/// Each draw consumes, in order: the selector `V`, then three baseline
/// variates. `V < π₁` picks the minimum, `V < π₁ + π₂` the median, and
/// anything else the maximum.
pub fn sample_ct_with<R: RngCore>(mix: &MixingProbs, baseline: &Baseline, n: usize, rng: &mut R) -> Vec<f64> {
    let t1 = mix.pi1;
    let t2 = mix.pi1 + mix.pi2;
    (0..n)
        .map(|_| {
            let v: f64 = rng.random();
            let mut x = [baseline.sample(rng), baseline.sample(rng), baseline.sample(rng)];
            x.sort_by(f64::total_cmp);
            if v < t1 {
                x[0]
            } else if v < t2 {
                x[1]
            } else {
                x[2]
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_support, QuadratureSpec};

    fn uniform_ct(l1: f64, l2: f64) -> CtDistribution {
        make_ct(Baseline::uniform(), CtParams::new(l1, l2).unwrap())
    }

    #[test]
    fn examples() {
        let id = uniform_ct(1.0, 1.0);
        for u in [0.0, 0.3, 0.99] {
            assert_eq!(id.pdf(u), 1.0);
        }
        let w = uniform_ct(0.0, 0.0);
        assert!((w.pdf(0.5) - 0.75).abs() < 1e-15);
        let h = uniform_ct(0.5, 0.5);
        assert_eq!(h.pdf(0.0), 0.5);
        assert_eq!(h.pdf(1.0), 2.0);
    }

    #[test]
    fn invalid_params_name_the_point() {
        assert!(CtParams::new(2.0, 0.0).is_ok());
        assert!(CtParams::new(1.0, -1.0).is_ok());
        // g(u) = 0.2 − 2.4u + 6u² has its minimum −0.04 at u = 0.2.
        match CtParams::new(0.2, -1.0) {
            Err(CtError::InvalidParams { u, .. }) => {
                assert!((u - 0.2).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(CtParams::new(-0.1, 0.5), Err(CtError::ParamDomain { .. })));
        assert!(CtParams::strict(1.5, 1.0).is_err());
        assert!(CtParams::new(1.5, 1.0).is_ok());
    }

    #[test]
    fn quadratic_examples() {
        let u = Baseline::uniform();
        let q = make_quadratic(u, -1.0).unwrap();
        assert!((q.cdf(0.3) - 0.09).abs() < 1e-15);
        let q = make_quadratic(u, 1.0).unwrap();
        assert!((q.cdf(0.3) - (0.6 - 0.09)).abs() < 1e-15);
        assert_eq!(make_quadratic(u, 0.0).unwrap().cdf(0.3), 0.3);
        assert!(make_quadratic(u, 1.5).is_err());
    }

    #[test]
    fn one_param_examples() {
        let b = Baseline::uniform();
        let p = make_one_param_cubic(b, 1.0).unwrap();
        let x = 0.3_f64;
        assert!((p.cdf(x) - (2.0 * x - 2.0 * x * x + x.powi(3))).abs() < 1e-15);
        let m = make_one_param_cubic(b, -1.0).unwrap();
        assert!((m.cdf(x) - (2.0 * x * x - x.powi(3))).abs() < 1e-15);
        assert_eq!(make_one_param_cubic(b, 0.0).unwrap().cdf(x), x);
        assert!(make_one_param_cubic(b, -1.01).is_err());
    }

    #[test]
    fn component_examples() {
        let b = Baseline::uniform();
        assert!((component_pdf(Component::Max, &b, 0.5) - 0.75).abs() < 1e-15);
        assert!((component_pdf(Component::Median, &b, 0.5) - 1.5).abs() < 1e-15);
        assert!((component_pdf(Component::Min, &b, 0.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn components_integrate_to_one() {
        let spec = QuadratureSpec::default();
        for b in [
            Baseline::uniform(),
            Baseline::exponential(1.5).unwrap(),
            Baseline::pareto(2.0).unwrap(),
        ] {
            for c in [Component::Min, Component::Median, Component::Max, Component::Beta21] {
                let d = c.over(b);
                let e = integrate_support(|x| d.pdf(x), &d, &spec);
                assert!((e.value - 1.0).abs() < 1e-8, "{c:?} {b}: {e:?}");
            }
        }
    }

    #[test]
    fn mixture_identity_pointwise() {
        let b = Baseline::exponential(0.7).unwrap();
        let ct = make_ct(b, CtParams::new(0.3, -0.2).unwrap());
        let [w1, w2, w3] = ct.params.component_weights();
        let med = Component::Median.over(b);
        let max = Component::Max.over(b);
        for k in 1..1000 {
            let x = 0.01 * k as f64;
            let lhs = ct.pdf(x);
            let rhs = w1 * b.pdf(x) + w2 * med.pdf(x) + w3 * max.pdf(x);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_round_trips() {
        let maps = [
            CubicMap::MIN3,
            CubicMap::MEDIAN3,
            CubicMap::MAX3,
            CubicMap::MAX2,
            CubicMap::from_lambdas(0.5, 0.5),
            CubicMap::from_lambdas(1.0, 0.0),
            CubicMap::from_lambdas(0.0, 0.5),
            CubicMap::mixture(0.3),
        ];
        for m in maps {
            for k in 1..1000 {
                let y = k as f64 / 1000.0;
                let u = m.inverse(y);
                assert!((m.cdf(u) - y).abs() < 1e-14, "{m:?} y={y}");
            }
            let tiny = 1e-15;
            assert!((m.cdf(m.inverse(tiny)) - tiny).abs() < 1e-12 * tiny, "{m:?}");
        }
    }

    #[test]
    fn mixing_relation() {
        let p = CtParams::new(0.4, 0.6).unwrap();
        let m = MixingProbs::from_params(&p).unwrap();
        assert!((m.pi3 - (1.0 - 1.0 / 3.0)).abs() < 1e-15);
        let back = m.to_params().unwrap();
        assert!((back.lambda1() - 0.4).abs() < 1e-15);
        assert!(MixingProbs::new(0.5, 0.4, 0.2).is_err());
        assert!(MixingProbs::from_params(&CtParams::new(0.5, -0.5).unwrap()).is_err());
    }

    #[test]
    fn sampler_degenerate_mixture_takes_min() {
        let b = Baseline::exponential(1.0).unwrap();
        let mix = MixingProbs::new(1.0, 0.0, 0.0).unwrap();
        let xs = sample_ct(&mix, &b, 200, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for x in xs {
            let _v: f64 = rng.random();
            let t = [b.sample(&mut rng), b.sample(&mut rng), b.sample(&mut rng)];
            assert_eq!(x, t.iter().cloned().fold(f64::INFINITY, f64::min));
        }
        assert_eq!(sample_ct(&mix, &b, 0, 1), Err(CtError::EmptySample));
    }

    #[test]
    fn sampler_mean() {
        let mix = MixingProbs::new(0.05, 0.05, 0.9).unwrap();
        let xs = sample_ct(&mix, &Baseline::uniform(), 100_000, 5).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.7125).abs() < 0.01, "{mean}");
    }

    #[test]
    fn sampler_is_deterministic() {
        let mix = MixingProbs::new(0.2, 0.3, 0.5).unwrap();
        let a = sample_ct(&mix, &Baseline::uniform(), 50, 77).unwrap();
        let b = sample_ct(&mix, &Baseline::uniform(), 50, 77).unwrap();
        assert_eq!(a, b);
    }
}
