//! Textual distribution specs, e.g. `ct:l1=0.4,l2=0.6@exp:beta=1`.
//!
//! ```text
//! spec      := ct | component | baseline
//! baseline  := family [':' key '=' number (',' key '=' number)*]
//! ct        := ('ct' | 'ct1' | 'qt') ':' params ['@' baseline]
//! component := ('beta21' | 'beta31' | 'os13:min' | 'os13:med' | 'os13:max') ['@' baseline]
//! ```
//!
//! A missing `@baseline` means `uniform`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baselines::{make_baseline, Baseline};
use crate::ct_model::{
    make_ct, make_one_param_cubic, make_quadratic, sample_ct, Component, Composed, CtDistribution, CtParams, CubicMap,
    MixingProbs,
};
use crate::dist::{Continuous, Support};
use crate::error::{CtError, Result};

/// Any distribution the CLI can name.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dist {
    Baseline { baseline: Baseline },
    Ct { ct: CtDistribution },
    Component { component: Component, baseline: Baseline },
}

impl Dist {
    pub fn baseline(&self) -> Baseline {
        match self {
            Dist::Baseline { baseline } | Dist::Component { baseline, .. } => *baseline,
            Dist::Ct { ct } => ct.baseline,
        }
    }

    /// The cubic map over the baseline CDF; identity for a bare baseline.
    pub fn map(&self) -> CubicMap {
        match self {
            Dist::Baseline { .. } => CubicMap::IDENTITY,
            Dist::Ct { ct } => ct.params.map(),
            Dist::Component { component, .. } => component.map(),
        }
    }

    pub fn composed(&self) -> Composed {
        Composed::new(self.baseline(), self.map(), self.head())
    }

    pub fn as_ct(&self) -> Option<&CtDistribution> {
        match self {
            Dist::Ct { ct } => Some(ct),
            _ => None,
        }
    }

    /// `n` seeded draws: the order-statistic algorithm for CT laws whose
    /// mixing weights are probabilities, quantile inversion otherwise.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(CtError::EmptySample);
        }
        if let Some(mix) = self.as_ct().and_then(|ct| MixingProbs::from_params(&ct.params).ok()) {
            return sample_ct(&mix, &self.baseline(), n, seed);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n)
            .map(|_| {
                let u: f64 = rng.random();
                self.quantile(u.max(f64::MIN_POSITIVE))
            })
            .collect())
    }

    fn head(&self) -> String {
        match self {
            Dist::Baseline { baseline } => baseline.to_string(),
            Dist::Ct { ct } => ct.label().split('@').next().unwrap_or("ct").to_string(),
            Dist::Component { component, .. } => spec_name(*component).to_string(),
        }
    }
}

fn spec_name(c: Component) -> &'static str {
    match c {
        Component::Beta21 => "beta21",
        Component::Beta31 => "beta31",
        Component::Min => "os13:min",
        Component::Median => "os13:med",
        Component::Max => "os13:max",
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dist::Baseline { baseline } => write!(f, "{baseline}"),
            Dist::Ct { ct } => f.write_str(&ct.label()),
            Dist::Component { component, baseline } => write!(f, "{}@{baseline}", spec_name(*component)),
        }
    }
}

impl Continuous for Dist {
    fn pdf(&self, x: f64) -> f64 {
        match self {
            Dist::Baseline { baseline } => baseline.pdf(x),
            Dist::Ct { ct } => ct.pdf(x),
            Dist::Component { .. } => self.composed().pdf(x),
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        self.map().cdf(self.baseline().cdf(x))
    }

    fn quantile(&self, u: f64) -> f64 {
        match self {
            Dist::Baseline { baseline } => baseline.quantile(u),
            Dist::Ct { ct } => ct.quantile(u),
            Dist::Component { .. } => self.composed().quantile(u),
        }
    }

    fn support(&self) -> Support {
        self.baseline().support()
    }

    fn density_at_quantile(&self, u: f64) -> f64 {
        match self {
            Dist::Baseline { baseline } => baseline.density_at_quantile(u),
            Dist::Ct { ct } => ct.density_at_quantile(u),
            Dist::Component { .. } => self.composed().density_at_quantile(u),
        }
    }

    fn has_finite_mean(&self) -> bool {
        self.baseline().has_finite_mean()
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

impl FromStr for Dist {
    type Err = CtError;

    fn from_str(s: &str) -> Result<Self> {
        parse_dist(s)
    }
}

fn parse_err(pos: usize, msg: impl Into<String>) -> CtError {
    CtError::Parse { pos, msg: msg.into() }
}

/// `key=value` pairs starting at byte offset `base`.
fn parse_pairs(text: &str, base: usize) -> Result<Vec<(String, f64)>> {
    if text.is_empty() {
        return Ok(vec![]);
    }
    let mut out = vec![];
    let mut offset = base;
    for item in text.split(',') {
        let Some((key, value)) = item.split_once('=') else {
            return Err(parse_err(offset, format!("expected key=value, found `{item}`")));
        };
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(parse_err(offset, format!("bad parameter name `{key}`")));
        }
        let value_pos = offset + key.len() + 1;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| parse_err(value_pos, format!("`{value}` is not a number")))?;
        if out.iter().any(|(k, _)| k == key) {
            return Err(parse_err(offset, format!("parameter `{key}` given twice")));
        }
        out.push((key.to_string(), v));
        offset += item.len() + 1;
    }
    Ok(out)
}

fn only<'a>(pairs: &'a [(String, f64)], allowed: &[&str], pos: usize) -> Result<&'a [(String, f64)]> {
    if let Some((k, _)) = pairs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(parse_err(pos, format!("unexpected parameter `{k}`")));
    }
    Ok(pairs)
}

fn get(pairs: &[(String, f64)], key: &str, pos: usize) -> Result<f64> {
    pairs
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| parse_err(pos, format!("missing parameter `{key}`")))
}

/// Parses a baseline spec that starts at byte `base` of the whole input.
fn parse_baseline_at(text: &str, base: usize) -> Result<Baseline> {
    let (name, rest, rest_pos) = match text.split_once(':') {
        Some((n, r)) => (n, r, base + n.len() + 1),
        None => (text, "", base + text.len()),
    };
    let pairs = parse_pairs(rest, rest_pos)?;
    let borrowed: Vec<(&str, f64)> = pairs.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    make_baseline(name.trim(), &borrowed).map_err(|e| match e {
        CtError::UnknownFamily(f) => parse_err(base, format!("unknown family `{f}`")),
        other => parse_err(base, other.to_string()),
    })
}

pub fn parse_baseline(text: &str) -> Result<Baseline> {
    parse_baseline_at(text, 0)
}

pub fn parse_dist(text: &str) -> Result<Dist> {
    if text.trim().is_empty() {
        return Err(parse_err(0, "empty distribution spec"));
    }
    let (head, baseline) = match text.find('@') {
        Some(at) => (&text[..at], Some(parse_baseline_at(&text[at + 1..], at + 1)?)),
        None => (text, None),
    };
    let base = baseline.unwrap_or_else(Baseline::uniform);
    let (name, rest) = head.split_once(':').unwrap_or((head, ""));
    let rest_pos = name.len() + 1;
    let wrap = |e: CtError| parse_err(rest_pos, e.to_string());
    match name {
        "ct" => {
            let pairs = parse_pairs(rest, rest_pos)?;
            only(&pairs, &["l1", "l2"], rest_pos)?;
            let params = CtParams::new(get(&pairs, "l1", rest_pos)?, get(&pairs, "l2", rest_pos)?).map_err(wrap)?;
            Ok(Dist::Ct {
                ct: make_ct(base, params),
            })
        }
        "ct1" | "qt" => {
            let pairs = parse_pairs(rest, rest_pos)?;
            only(&pairs, &["l"], rest_pos)?;
            let l = get(&pairs, "l", rest_pos)?;
            let ct = if name == "ct1" {
                make_one_param_cubic(base, l)
            } else {
                make_quadratic(base, l)
            }
            .map_err(wrap)?;
            Ok(Dist::Ct { ct })
        }
        "beta21" | "beta31" if rest.is_empty() => Ok(Dist::Component {
            component: if name == "beta21" {
                Component::Beta21
            } else {
                Component::Beta31
            },
            baseline: base,
        }),
        "os13" => {
            let component = match rest {
                "min" => Component::Min,
                "med" => Component::Median,
                "max" => Component::Max,
                other => {
                    return Err(parse_err(
                        rest_pos,
                        format!("expected min, med or max, found `{other}`"),
                    ))
                }
            };
            Ok(Dist::Component {
                component,
                baseline: base,
            })
        }
        _ if baseline.is_some() => Err(parse_err(0, format!("`{name}` does not take an @baseline"))),
        _ => Ok(Dist::Baseline {
            baseline: parse_baseline_at(text, 0)?,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_form() {
        let d = parse_dist("ct:l1=0.4,l2=0.6@exp:beta=1").unwrap();
        let ct = d.as_ct().unwrap();
        assert_eq!((ct.params.lambda1(), ct.params.lambda2()), (0.4, 0.6));
        assert_eq!(ct.baseline, Baseline::exponential(1.0).unwrap());
        assert_eq!(parse_dist("uniform").unwrap().baseline(), Baseline::uniform());
        assert_eq!(
            parse_dist("power:b=2,c=3").unwrap().baseline(),
            Baseline::power(2.0, 3.0).unwrap()
        );
        assert_eq!(parse_dist("beta31").unwrap().map(), CubicMap::MAX3);
        assert_eq!(parse_dist("beta21@pareto:alpha=2").unwrap().map(), CubicMap::MAX2);
        assert_eq!(parse_dist("os13:med@weibull:k=2").unwrap().map(), CubicMap::MEDIAN3);
        assert_eq!(parse_dist("ct1:l=0.5").unwrap().map(), CubicMap::from_lambdas(1.5, 0.5));
        assert_eq!(parse_dist("qt:l=-0.5").unwrap().map(), CubicMap::from_lambdas(0.5, 1.0));
        assert_eq!(
            parse_dist("exponential:beta=2").unwrap().baseline(),
            Baseline::exponential(2.0).unwrap()
        );
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "ct:l1=0.4,l2=0.6@exp:beta=1",
            "os13:max@uniform",
            "pareto:alpha=2",
            "beta21@uniform",
        ] {
            let d = parse_dist(s).unwrap();
            assert_eq!(parse_dist(&d.to_string()).unwrap(), d, "{s} -> {d}");
        }
    }

    #[test]
    fn sampling_is_seeded_and_in_support() {
        for s in [
            "ct:l1=0.4,l2=0.6@exp:beta=1",
            "ct:l1=1,l2=-1",
            "os13:med@pareto:alpha=2",
        ] {
            let d = parse_dist(s).unwrap();
            let a = d.sample(200, 5).unwrap();
            assert_eq!(a, d.sample(200, 5).unwrap());
            assert!(a.iter().all(|&x| d.cdf(x) > 0.0 && d.cdf(x) < 1.0), "{s}");
        }
    }

    #[test]
    fn errors_carry_positions() {
        let pos = |s: &str| match parse_dist(s) {
            Err(CtError::Parse { pos, .. }) => pos,
            other => panic!("{s}: {other:?}"),
        };
        assert_eq!(pos("ct:l1=0.4,l2=abc@uniform"), 13);
        assert_eq!(pos("ct:l1=0.4,l2=0.6@gamma"), 17);
        assert_eq!(pos("os13:top"), 5);
        assert_eq!(pos("ct:l1=0.4"), 3);
        assert_eq!(pos("exp:beta=1,beta=2"), 11);
        assert_eq!(pos(""), 0);
        assert!(matches!(parse_dist("ct:l1=0.2,l2=-1"), Err(CtError::Parse { .. })));
    }
}
