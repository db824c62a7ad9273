//! Seeded Monte-Carlo campaigns: component selection by histogram KL and
//! coverage/width of Wald intervals.
//!
//! Every replication draws from its own ChaCha8 stream whose seed is derived
//! from the campaign seed, the row key (mixing probabilities or model, plus
//! `n`) and the replication index. A row therefore does not depend on which
//! other rows were run, which is what makes resuming a campaign exact.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::Baseline;
use crate::ct_model::{sample_ct_with, Component, MixingProbs};
use crate::dist::Continuous;
use crate::error::{CtError, Result};
use crate::fisher::{mle_fit, FitOptions, Model};
use crate::par::Execution;

pub const DEFAULT_REPLICATIONS: usize = 500;
pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_SMOOTHING: f64 = 0.5;

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}
fn default_bins() -> usize {
    DEFAULT_BINS
}
fn default_smoothing() -> f64 {
    DEFAULT_SMOOTHING
}
fn default_levels() -> Vec<f64> {
    vec![0.90, 0.95]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum Study {
    KlSelection {
        mix: [f64; 3],
        #[serde(default = "default_bins")]
        bins: usize,
        /// Pseudo-count added to every histogram bin.
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
    CiStudy {
        model: Model,
        truth: Vec<f64>,
        #[serde(default = "default_levels")]
        levels: Vec<f64>,
    },
}

/// One campaign. Deserializable from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(flatten)]
    pub study: Study,
    pub n_list: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// CSV report, rewritten after every finished `n`.
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    /// Keep rows already present in `output_path` instead of recomputing them.
    #[serde(default)]
    pub resume: bool,
    #[serde(default)]
    pub execution: Execution,
}

impl SimulationConfig {
    pub fn kl_selection(mix: [f64; 3], n_list: Vec<usize>, replications: usize, seed: u64) -> Self {
        SimulationConfig {
            study: Study::KlSelection {
                mix,
                bins: DEFAULT_BINS,
                smoothing: DEFAULT_SMOOTHING,
            },
            n_list,
            replications,
            seed,
            output_path: None,
            resume: false,
            execution: Execution::default(),
        }
    }

    pub fn ci_study(
        model: Model,
        truth: Vec<f64>,
        levels: Vec<f64>,
        n_list: Vec<usize>,
        replications: usize,
        seed: u64,
    ) -> Self {
        SimulationConfig {
            study: Study::CiStudy { model, truth, levels },
            n_list,
            replications,
            seed,
            output_path: None,
            resume: false,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(CtError::Config("replications must be at least 1".into()));
        }
        if self.n_list.is_empty() {
            return Err(CtError::Config("n_list is empty".into()));
        }
        if self.resume && self.output_path.is_none() {
            return Err(CtError::Config("resume needs an output path".into()));
        }
        match &self.study {
            Study::KlSelection { mix, bins, smoothing } => {
                MixingProbs::new(mix[0], mix[1], mix[2])?;
                if *bins < 2 {
                    return Err(CtError::Config("at least two histogram bins are needed".into()));
                }
                if !(*smoothing > 0.0 && smoothing.is_finite()) {
                    return Err(CtError::Config("smoothing must be positive".into()));
                }
                if self.n_list.contains(&0) {
                    return Err(CtError::EmptySample);
                }
            }
            Study::CiStudy { model, truth, levels } => {
                model.distribution(truth)?;
                if levels.is_empty() {
                    return Err(CtError::Config("no confidence levels given".into()));
                }
                for &l in levels {
                    crate::fisher::z_quantile(l)?;
                }
                if let Some(&n) = self.n_list.iter().find(|&&n| n < crate::fisher::MIN_FIT_SIZE) {
                    return Err(CtError::Config(format!(
                        "n = {n} is below the minimum fit size {}",
                        crate::fisher::MIN_FIT_SIZE
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The standard model-selection rows: mixing probabilities and sample sizes.
pub fn table1_rows() -> Vec<([f64; 3], Vec<usize>)> {
    let std_n = vec![150, 300, 500];
    vec![
        ([0.9, 0.05, 0.05], std_n.clone()),
        ([0.05, 0.9, 0.05], std_n.clone()),
        ([0.05, 0.05, 0.9], std_n.clone()),
        ([0.9, 0.075, 0.025], std_n.clone()),
        ([0.075, 0.9, 0.025], std_n.clone()),
        ([0.1, 0.8, 0.1], vec![250, 300, 500]),
        ([0.1, 0.1, 0.8], std_n),
        ([0.3, 0.6, 0.1], vec![30, 40, 50]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlRow {
    pub mix: [f64; 3],
    pub n: usize,
    /// Mean histogram KL to the min, median and max of three.
    pub kl: [f64; 3],
    /// Fraction of replications in which each component had the smallest KL.
    pub prop: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiRow {
    pub model: Model,
    pub param: String,
    pub truth: f64,
    pub n: usize,
    pub level: f64,
    pub avg_lo: f64,
    pub avg_hi: f64,
    pub avg_width: f64,
    pub coverage: f64,
    pub failures: usize,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Rows {
    Kl(Vec<KlRow>),
    Ci(Vec<CiRow>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub study: &'static str,
    pub seed: u64,
    pub replications: usize,
    pub version: &'static str,
    /// Failed fits over all attempted fits (CI studies only).
    pub failures: usize,
    pub failure_rate: f64,
    /// Rows taken from an existing report rather than recomputed.
    pub resumed_rows: usize,
    /// Filled in by callers that time the run; never set by this module so
    /// that reports stay reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub metadata: Metadata,
    pub rows: Rows,
}

impl SimulationReport {
    pub fn to_csv(&self) -> Result<String> {
        match &self.rows {
            Rows::Kl(rows) => kl_csv(rows),
            Rows::Ci(rows) => ci_csv(rows),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        crate::json::to_string_pretty(self)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one replication, mixed from the campaign seed and a row key.
fn replication_seed(seed: u64, key: &[u64], rep: usize) -> u64 {
    let mut h = splitmix64(seed);
    for &k in key {
        h = splitmix64(h ^ k);
    }
    splitmix64(h ^ rep as u64)
}

fn kl_key(mix: &[f64; 3], n: usize) -> Vec<u64> {
    vec![mix[0].to_bits(), mix[1].to_bits(), mix[2].to_bits(), n as u64]
}

fn ci_key(model: Model, truth: &[f64], n: usize) -> Vec<u64> {
    let mut k = vec![model as u64];
    k.extend(truth.iter().map(|t| t.to_bits()));
    k.push(n as u64);
    k
}

/// Bin probabilities of min, median and max of three uniforms.
fn component_bin_probs(bins: usize) -> [Vec<f64>; 3] {
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    [Component::Min, Component::Median, Component::Max].map(|c| {
        let map = c.map();
        edges.windows(2).map(|w| map.cdf(w[1]) - map.cdf(w[0])).collect()
    })
}

/// Plug-in `KL(p̂ ‖ q)` for each component, `p̂` the smoothed histogram of
/// a sample in `[0, 1]`.
pub fn histogram_kl(sample: &[f64], bins: usize, smoothing: f64) -> [f64; 3] {
    histogram_kl_with(sample, smoothing, &component_bin_probs(bins))
}

fn histogram_kl_with(sample: &[f64], smoothing: f64, probs: &[Vec<f64>; 3]) -> [f64; 3] {
    let bins = probs[0].len();
    let mut counts = vec![0usize; bins];
    for &x in sample {
        let j = ((x * bins as f64) as usize).min(bins - 1);
        counts[j] += 1;
    }
    let total = sample.len() as f64 + smoothing * bins as f64;
    let p_hat: Vec<f64> = counts.iter().map(|&c| (c as f64 + smoothing) / total).collect();
    probs.each_ref().map(|q| {
        p_hat
            .iter()
            .zip(q)
            .map(|(&p, &q)| p * (p / q).ln())
            .sum::<f64>()
            .max(0.0)
    })
}

/// Index of the smallest entry; ties go to the lower index.
fn argmin3(v: &[f64; 3]) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if v[i] < v[best] {
            best = i;
        }
    }
    best
}

fn kl_row(mix: [f64; 3], n: usize, bins: usize, smoothing: f64, cfg: &SimulationConfig) -> Result<KlRow> {
    let mixing = MixingProbs::new(mix[0], mix[1], mix[2])?;
    let probs = component_bin_probs(bins);
    let baseline = Baseline::uniform();
    let key = kl_key(&mix, n);
    let per_rep = cfg.execution.map_indexed(cfg.replications, |rep| {
        let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(cfg.seed, &key, rep));
        let sample = sample_ct_with(&mixing, &baseline, n, &mut rng);
        histogram_kl_with(&sample, smoothing, &probs)
    });
    let reps = cfg.replications as f64;
    let mut kl = [0.0; 3];
    let mut wins = [0usize; 3];
    for k in &per_rep {
        for i in 0..3 {
            kl[i] += k[i];
        }
        wins[argmin3(k)] += 1;
    }
    Ok(KlRow {
        mix,
        n,
        kl: kl.map(|s| s / reps),
        prop: wins.map(|w| w as f64 / reps),
    })
}

/// Table 1 style campaign over `cfg.n_list` for one mixing vector.
pub fn run_kl_selection(cfg: &SimulationConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let Study::KlSelection { mix, bins, smoothing } = cfg.study else {
        return Err(CtError::Config("run_kl_selection needs a kl_selection study".into()));
    };
    let previous = match (&cfg.output_path, cfg.resume) {
        (Some(path), true) => read_kl_csv(path)?,
        _ => vec![],
    };
    let mut rows = vec![];
    let mut resumed = 0;
    for &n in &cfg.n_list {
        if let Some(row) = previous.iter().find(|r| r.mix == mix && r.n == n) {
            rows.push(row.clone());
            resumed += 1;
            continue;
        }
        rows.push(kl_row(mix, n, bins, smoothing, cfg)?);
        if let Some(path) = &cfg.output_path {
            write_atomic(path, &kl_csv(&rows)?)?;
        }
    }
    if let Some(path) = &cfg.output_path {
        write_atomic(path, &kl_csv(&rows)?)?;
    }
    Ok(SimulationReport {
        config: cfg.clone(),
        metadata: Metadata {
            study: "kl_selection",
            seed: cfg.seed,
            replications: cfg.replications,
            version: env!("CARGO_PKG_VERSION"),
            failures: 0,
            failure_rate: 0.0,
            resumed_rows: resumed,
            wall_time_s: None,
        },
        rows: Rows::Kl(rows),
    })
}

/// Draws `n` observations from a fitted model's truth. The order-statistic
/// mixture algorithm is used whenever `(λ₁/3, λ₂/3, ·)` is a probability
/// vector, quantile inversion otherwise.
fn draw(model: Model, truth: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let dist = model.distribution(truth)?;
    Ok(match MixingProbs::from_params(&dist.params) {
        Ok(mix) => sample_ct_with(&mix, &dist.baseline, n, rng),
        Err(_) => (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                dist.quantile(u.max(f64::MIN_POSITIVE))
            })
            .collect(),
    })
}

/// Intervals of one replication per level, or `None` when the fit failed.
type RepIntervals = Option<Vec<Vec<(f64, f64)>>>;

fn ci_rows(model: Model, truth: &[f64], levels: &[f64], n: usize, cfg: &SimulationConfig) -> Result<Vec<CiRow>> {
    let key = ci_key(model, truth, n);
    let opts = FitOptions::default();
    let per_rep: Vec<RepIntervals> = cfg.execution.map_indexed(cfg.replications, |rep| {
        let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(cfg.seed, &key, rep));
        let data = draw(model, truth, n, &mut rng).ok()?;
        let fit = mle_fit(&data, model, &opts).ok()?;
        levels
            .iter()
            .map(|&l| {
                let ci = fit.intervals_at(l).ok()?;
                (!ci.is_empty()).then(|| ci.iter().map(|c| (c.lo, c.hi)).collect())
            })
            .collect()
    });
    let ok: Vec<&Vec<Vec<(f64, f64)>>> = per_rep.iter().flatten().collect();
    let failures = cfg.replications - ok.len();
    let m = ok.len() as f64;
    let mut rows = vec![];
    for (i, name) in model.param_names().iter().enumerate() {
        for (j, &level) in levels.iter().enumerate() {
            let (mut lo, mut hi, mut covered) = (0.0, 0.0, 0usize);
            for rep in &ok {
                let (a, b) = rep[j][i];
                lo += a;
                hi += b;
                covered += usize::from(a <= truth[i] && truth[i] <= b);
            }
            let (avg_lo, avg_hi) = (lo / m, hi / m);
            rows.push(CiRow {
                model,
                param: name.to_string(),
                truth: truth[i],
                n,
                level,
                avg_lo,
                avg_hi,
                avg_width: avg_hi - avg_lo,
                coverage: if ok.is_empty() { f64::NAN } else { covered as f64 / m },
                failures,
                replications: cfg.replications,
            });
        }
    }
    Ok(rows)
}

/// Coverage and width of Wald intervals over `cfg.n_list`.
pub fn run_ci_study(cfg: &SimulationConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let Study::CiStudy { model, truth, levels } = &cfg.study else {
        return Err(CtError::Config("run_ci_study needs a ci_study study".into()));
    };
    let previous = match (&cfg.output_path, cfg.resume) {
        (Some(path), true) => read_ci_csv(path)?,
        _ => vec![],
    };
    let expected_rows = model.dim() * levels.len();
    let mut rows: Vec<CiRow> = vec![];
    let mut resumed = 0;
    for &n in &cfg.n_list {
        let mut matching = vec![];
        for (name, &t) in model.param_names().iter().zip(truth) {
            for &l in levels {
                let hit = previous.iter().find(|r| {
                    r.model == *model
                        && r.param == *name
                        && r.truth == t
                        && r.n == n
                        && r.level == l
                        && r.replications == cfg.replications
                });
                matching.extend(hit.cloned());
            }
        }
        if matching.len() == expected_rows {
            resumed += matching.len();
            rows.extend(matching);
            continue;
        }
        rows.extend(ci_rows(*model, truth, levels, n, cfg)?);
        if let Some(path) = &cfg.output_path {
            write_atomic(path, &ci_csv(&rows)?)?;
        }
    }
    if let Some(path) = &cfg.output_path {
        write_atomic(path, &ci_csv(&rows)?)?;
    }
    // One failure count per n, repeated on each of that n's rows.
    let failures: usize = rows.chunks(expected_rows).map(|c| c[0].failures).sum();
    let attempts = cfg.replications * cfg.n_list.len();
    Ok(SimulationReport {
        config: cfg.clone(),
        metadata: Metadata {
            study: "ci_study",
            seed: cfg.seed,
            replications: cfg.replications,
            version: env!("CARGO_PKG_VERSION"),
            failures,
            failure_rate: failures as f64 / attempts as f64,
            resumed_rows: resumed,
            wall_time_s: None,
        },
        rows: Rows::Ci(rows),
    })
}

/// Dispatches on the study kind.
pub fn run(cfg: &SimulationConfig) -> Result<SimulationReport> {
    match cfg.study {
        Study::KlSelection { .. } => run_kl_selection(cfg),
        Study::CiStudy { .. } => run_ci_study(cfg),
    }
}

pub const KL_HEADER: [&str; 10] = [
    "mix1", "mix2", "mix3", "n", "KL1", "KL2", "KL3", "prop1", "prop2", "prop3",
];
pub const CI_HEADER: [&str; 11] = [
    "model",
    "param",
    "true",
    "n",
    "level",
    "avg_lo",
    "avg_hi",
    "avg_width",
    "coverage",
    "failures",
    "replications",
];

/// 17 significant digits; `NaN`/`inf` spelled out.
pub fn csv_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn csv_err(e: csv::Error) -> CtError {
    CtError::Io(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| CtError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CtError::Io(e.to_string()))
}

fn kl_csv(rows: &[KlRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(KL_HEADER).map_err(csv_err)?;
    for r in rows {
        let mut rec: Vec<String> = r.mix.iter().map(|&x| csv_f64(x)).collect();
        rec.push(r.n.to_string());
        rec.extend(r.kl.iter().chain(&r.prop).map(|&x| csv_f64(x)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

fn ci_csv(rows: &[CiRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(CI_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.model.name().to_string(),
            r.param.clone(),
            csv_f64(r.truth),
            r.n.to_string(),
            csv_f64(r.level),
            csv_f64(r.avg_lo),
            csv_f64(r.avg_hi),
            csv_f64(r.avg_width),
            csv_f64(r.coverage),
            r.failures.to_string(),
            r.replications.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Records of an existing report, or nothing if the file does not exist.
fn read_records(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    if !path.exists() {
        return Ok(vec![]);
    }
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let found = r.headers().map_err(csv_err)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CtError::Config(format!(
            "{} does not look like a report of this study (header {:?})",
            path.display(),
            found.iter().collect::<Vec<_>>()
        )));
    }
    r.records().map(|rec| rec.map_err(csv_err)).collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    rec.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| {
        CtError::Config(format!(
            "{}: cannot read column {} of line {}",
            path.display(),
            i + 1,
            rec.position().map_or(0, |p| p.line())
        ))
    })
}

fn read_kl_csv(path: &Path) -> Result<Vec<KlRow>> {
    read_records(path, &KL_HEADER)?
        .iter()
        .map(|rec| {
            let f = |i| field::<f64>(rec, i, path);
            Ok(KlRow {
                mix: [f(0)?, f(1)?, f(2)?],
                n: field(rec, 3, path)?,
                kl: [f(4)?, f(5)?, f(6)?],
                prop: [f(7)?, f(8)?, f(9)?],
            })
        })
        .collect()
}

fn read_ci_csv(path: &Path) -> Result<Vec<CiRow>> {
    read_records(path, &CI_HEADER)?
        .iter()
        .map(|rec| {
            let f = |i| field::<f64>(rec, i, path);
            Ok(CiRow {
                model: field(rec, 0, path)?,
                param: field(rec, 1, path)?,
                truth: f(2)?,
                n: field(rec, 3, path)?,
                level: f(4)?,
                avg_lo: f(5)?,
                avg_hi: f(6)?,
                avg_width: f(7)?,
                coverage: f(8)?,
                failures: field(rec, 9, path)?,
                replications: field(rec, 10, path)?,
            })
        })
        .collect()
}
