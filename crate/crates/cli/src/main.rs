//! `ctinfo`: information measures of cubic transmuted distributions from
//! the command line.
//!
//! Exit status: 0 on success, 1 on a usage error (including malformed
//! distribution specs), 2 when a numeric routine did not converge or a
//! verification failed. Data goes to stdout, diagnostics to stderr.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ctinfo::distspec::{parse_dist, Dist};
use ctinfo::divergences::DivergenceKind;
use ctinfo::entropy::{ct_entropy_decomposed, shannon_entropy, theta_closed_form, theta_quadrature};
use ctinfo::fisher::{fisher_matrix, fisher_one_param_paths, fisher_uniform, mle_fit, FitOptions, InfoKind, Model};
use ctinfo::gini::{ctg_report, gmd, gmd_ct_decomposed, linspace, power_r_star};
use ctinfo::json::to_value;
use ctinfo::sim::{self, SimulationConfig, SimulationReport, Study};
use ctinfo::verify::{verify_closed_forms, VerifyOptions};
use ctinfo::{CtError, CtKind, CtParams, Execution, Family, QuadratureSpec};
use serde_json::json;

use output::{cell, Doc, Format, Table};

#[derive(Parser)]
#[command(
    name = "ctinfo",
    version,
    about = "Information measures of cubic transmuted distributions"
)]
struct Cli {
    /// Absolute quadrature tolerance.
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    /// Output format; `sample` and `simulate` default to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shannon entropy, optionally with the CT decomposition.
    Entropy(EntropyArgs),
    /// KL, Jeffreys, chi-square or symmetric chi-square divergence.
    Divergence(DivergenceArgs),
    /// Gini mean difference and its CT decomposition.
    Gini(GiniArgs),
    /// Fisher information of the CT parameters.
    Fisher(FisherArgs),
    /// Maximum-likelihood fit with Wald intervals.
    Fit(FitArgs),
    /// Seeded draws as one-column CSV.
    Sample(SampleArgs),
    /// Monte-Carlo campaigns.
    Simulate(SimulateArgs),
    /// Closed forms against quadrature, with an erratum report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct EntropyArgs {
    /// Distribution spec, e.g. `ct:l1=0.4,l2=0.6@exp:beta=1`.
    #[arg(long)]
    dist: Option<String>,
    /// Show the five-term decomposition (CT distributions only).
    #[arg(long)]
    decompose: bool,
    /// Emit θ(λ₁, λ₂) on an n × n grid instead.
    #[arg(long, value_name = "N")]
    theta_grid: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Kl,
    Jeffreys,
    Chi2,
    Symchi2,
}

impl From<KindArg> for DivergenceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Kl => DivergenceKind::Kl,
            KindArg::Jeffreys => DivergenceKind::Jeffreys,
            KindArg::Chi2 => DivergenceKind::Chi2,
            KindArg::Symchi2 => DivergenceKind::SymChi2,
        }
    }
}

#[derive(Args)]
struct DivergenceArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: String,
    /// Use a tabulated closed form (fails if none matches the pair).
    #[arg(long)]
    closed_form: bool,
}

#[derive(Args)]
struct GiniArgs {
    #[arg(long)]
    dist: String,
    #[arg(long, conflicts_with = "ctg")]
    decompose: bool,
    /// The CT Gini gap, directly and in energy-distance form.
    #[arg(long)]
    ctg: bool,
    /// Emit the cross term R* on an n × n grid for a power baseline.
    #[arg(long, value_name = "N", conflicts_with_all = ["decompose", "ctg"])]
    rstar_grid: Option<usize>,
}

#[derive(Args)]
struct FisherArgs {
    /// A `ct:` or `ct1:` spec.
    #[arg(long)]
    dist: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum InfoArg {
    Expected,
    Observed,
}

#[derive(Args)]
struct FitArgs {
    /// `ctu` (uniform baseline) or `ctw` (Weibull baseline).
    #[arg(long)]
    model: Model,
    /// One-column CSV; a non-numeric first line is taken as a header.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, value_enum, default_value = "expected")]
    info: InfoArg,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    dist: String,
    #[arg(long)]
    n: usize,
    #[arg(long, env = "CTINFO_SEED", default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(subcommand)]
    study: SimStudy,
}

#[derive(Args)]
struct Campaign {
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, default_value_t = sim::DEFAULT_REPLICATIONS)]
    reps: usize,
    #[arg(long, env = "CTINFO_SEED", default_value_t = 42)]
    seed: u64,
    /// CSV report, rewritten as rows finish.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep rows already in `--out`.
    #[arg(long, requires = "out")]
    resume: bool,
    /// Run replications on one thread.
    #[arg(long)]
    sequential: bool,
    /// Also write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SimStudy {
    /// Component selection by histogram KL.
    Table1 {
        /// Mixing probabilities `p1,p2,p3`; repeat for several rows.
        #[arg(long, value_parser = parse_mix)]
        mix: Vec<[f64; 3]>,
        /// Run every row of the reference table with its own sample sizes.
        #[arg(long, conflicts_with = "mix")]
        all_rows: bool,
        #[arg(long, default_value_t = sim::DEFAULT_BINS)]
        bins: usize,
        #[arg(long, default_value_t = sim::DEFAULT_SMOOTHING)]
        smoothing: f64,
        #[command(flatten)]
        campaign: Campaign,
    },
    /// Coverage and width of Wald intervals.
    Ci {
        #[arg(long)]
        model: Model,
        /// True parameters, e.g. `l1=0.4,l2=0.6,k=1`.
        #[arg(long)]
        params: String,
        /// Confidence levels, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.90,0.95")]
        level: Vec<f64>,
        #[command(flatten)]
        campaign: Campaign,
    },
    /// A campaign described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    ClosedForms,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "closed-forms")]
    suite: Suite,
    #[arg(long, default_value_t = 21)]
    grid: usize,
    /// Where to write the erratum report.
    #[arg(long, default_value = "erratum_report.json")]
    erratum: PathBuf,
}

/// An error together with the exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: 1, error }
}

fn numeric(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<CtError>() {
            Some(CtError::FitFailed(_) | CtError::Degenerate(_)) => 2,
            _ => 1,
        };
        Failure { code, error }
    }
}

impl From<CtError> for Failure {
    fn from(e: CtError) -> Self {
        anyhow::Error::new(e).into()
    }
}

/// Output plus whether every numeric step converged.
struct Outcome {
    doc: Doc,
    converged: bool,
    default_format: Format,
}

impl Outcome {
    fn json(doc: Doc, converged: bool) -> Self {
        Outcome {
            doc,
            converged,
            default_format: Format::Json,
        }
    }
}

fn parse_mix(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|p| format!("expected three probabilities, got {}", p.len()))
}

fn dist(spec: &str) -> Result<Dist, Failure> {
    parse_dist(spec).map_err(|e| usage(anyhow!(e).context(format!("bad distribution spec `{spec}`"))))
}

fn quad_spec(cli: &Cli) -> Result<QuadratureSpec, Failure> {
    let d = QuadratureSpec::default();
    let s = QuadratureSpec::with_tolerances(cli.abs_tol.unwrap_or(d.abs_tol), cli.rel_tol.unwrap_or(d.rel_tol));
    s.validate()?;
    Ok(s)
}

fn entropy(a: &EntropyArgs, spec: &QuadratureSpec) -> Result<Outcome, Failure> {
    if let Some(n) = a.theta_grid {
        if n < 2 {
            return Err(usage(anyhow!("--theta-grid needs at least 2 points")));
        }
        let mut t = Table::new(&["lambda1", "lambda2", "theta", "method"]);
        for &l1 in &linspace(0.0, 1.0, n) {
            for &l2 in &linspace(-1.0, 1.0, n) {
                let Ok(p) = CtParams::new(l1, l2) else { continue };
                if l2 >= 1.0 {
                    continue;
                }
                let (v, m) = match theta_closed_form(&p) {
                    Ok(v) => (v, "closed_form"),
                    Err(_) => (theta_quadrature(&p, spec).value, "quadrature"),
                };
                t.push(vec![cell(l1), cell(l2), cell(v), m.into()]);
            }
        }
        let rows = t.rows.len();
        return Ok(Outcome::json(
            Doc::with_table(json!({ "grid": n, "rows": rows }), t),
            true,
        ));
    }
    let Some(spec_text) = &a.dist else {
        return Err(usage(anyhow!("entropy needs --dist or --theta-grid")));
    };
    let d = dist(spec_text)?;
    if a.decompose {
        let ct = d
            .as_ct()
            .ok_or_else(|| usage(anyhow!("--decompose needs a CT distribution, got `{d}`")))?;
        let dec = ct_entropy_decomposed(ct, spec);
        let mut v = to_value(&dec)?;
        v["dist"] = json!(d.to_string());
        return Ok(Outcome::json(Doc::new(v), dec.converged));
    }
    let h = shannon_entropy(&d, spec);
    let mut v = json!({
        "dist": d.to_string(),
        "entropy": h.value,
        "error_bound": h.error_bound,
        "converged": h.converged,
    });
    if let Some(ct) = d.as_ct() {
        if let Ok(theta) = theta_closed_form(&ct.params) {
            v["theta"] = json!(theta);
        }
    }
    Ok(Outcome::json(Doc::new(v), h.converged))
}

fn divergence(a: &DivergenceArgs, spec: &QuadratureSpec) -> Result<Outcome, Failure> {
    let (from, to) = (dist(&a.from)?, dist(&a.to)?);
    let kind = DivergenceKind::from(a.kind);
    let mut v = json!({ "kind": kind, "from": from.to_string(), "to": to.to_string() });
    if a.closed_form {
        if from.baseline() != to.baseline() {
            return Err(usage(anyhow!("closed forms need a common baseline")));
        }
        let params = match (from.as_ct(), to.as_ct()) {
            (Some(ct), _) | (None, Some(ct)) => ct.params,
            (None, None) => CtParams::new(0.5, 0.5)?,
        };
        let value = kind
            .closed_form(from.map(), to.map(), &params)
            .ok_or_else(|| usage(anyhow!("no closed form is tabulated for {} -> {}", from, to)))??;
        v["value"] = json!(value);
        v["method"] = json!("closed_form");
        return Ok(Outcome::json(Doc::new(v), true));
    }
    let r = kind.evaluate(&from, &to, spec);
    for (k, x) in to_value(&r)?.as_object().into_iter().flatten() {
        v[k] = x.clone();
    }
    Ok(Outcome::json(Doc::new(v), r.converged || r.divergent))
}

fn gini(a: &GiniArgs, spec: &QuadratureSpec) -> Result<Outcome, Failure> {
    let d = dist(&a.dist)?;
    if let Some(n) = a.rstar_grid {
        let Family::Power { b, c } = d.baseline().family() else {
            return Err(usage(anyhow!(
                "--rstar-grid needs a power baseline, got `{}`",
                d.baseline()
            )));
        };
        if n < 2 {
            return Err(usage(anyhow!("--rstar-grid needs at least 2 points")));
        }
        let mut t = Table::new(&["lambda1", "lambda2", "r_star"]);
        for &l1 in &linspace(0.0, 1.0, n) {
            for &l2 in &linspace(-1.0, 1.0, n) {
                if let Ok(p) = CtParams::new(l1, l2) {
                    t.push(vec![cell(l1), cell(l2), cell(power_r_star(b, c, &p))]);
                }
            }
        }
        let rows = t.rows.len();
        return Ok(Outcome::json(
            Doc::with_table(json!({ "b": b, "c": c, "grid": n, "rows": rows }), t),
            true,
        ));
    }
    if a.decompose || a.ctg {
        let ct = d
            .as_ct()
            .ok_or_else(|| usage(anyhow!("this option needs a CT distribution, got `{d}`")))?;
        if a.decompose {
            let dec = gmd_ct_decomposed(ct, spec)?;
            let mut v = to_value(&dec)?;
            v["bound_direction"] = json!(dec.bound_direction());
            v["dist"] = json!(d.to_string());
            return Ok(Outcome::json(Doc::new(v), dec.converged));
        }
        let rep = ctg_report(ct, spec)?;
        let mut v = to_value(&rep)?;
        v["dist"] = json!(d.to_string());
        return Ok(Outcome::json(Doc::new(v), rep.direct.converged));
    }
    let g = gmd(&d, spec)?;
    let v = json!({ "dist": d.to_string(), "gmd": g.value, "error_bound": g.error_bound, "converged": g.converged });
    Ok(Outcome::json(Doc::new(v), g.converged))
}

fn fisher(a: &FisherArgs, spec: &QuadratureSpec) -> Result<Outcome, Failure> {
    let d = dist(&a.dist)?;
    let ct = d
        .as_ct()
        .ok_or_else(|| usage(anyhow!("fisher needs a `ct:` or `ct1:` spec, got `{d}`")))?;
    if let (CtKind::OneParamCubic, Some(l)) = (ct.kind, ct.lambda) {
        let f = fisher_one_param_paths(&ct.baseline, l, spec)?;
        let mut v = to_value(&f)?;
        v["dist"] = json!(d.to_string());
        return Ok(Outcome::json(
            Doc::new(v),
            f.direct.is_finite() || f.closed_form.is_infinite(),
        ));
    }
    let m = if ct.baseline.family() == Family::Uniform {
        fisher_uniform(&ct.params, spec)
    } else {
        fisher_matrix(ct, spec)
    };
    let mut v = to_value(&m)?;
    v["dist"] = json!(d.to_string());
    v["determinant"] = json!(m.determinant());
    Ok(Outcome::json(Doc::new(v), true))
}

fn read_column(path: &PathBuf) -> anyhow::Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = vec![];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let Some(field) = rec.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        match field.parse::<f64>() {
            Ok(x) => out.push(x),
            Err(_) if i == 0 => {}
            Err(_) => bail!("{}: line {} is not a number: `{field}`", path.display(), i + 1),
        }
    }
    Ok(out)
}

fn fit(a: &FitArgs) -> Result<Outcome, Failure> {
    let data = read_column(&a.data).map_err(usage)?;
    let opts = FitOptions {
        level: a.level,
        info: match a.info {
            InfoArg::Expected => InfoKind::Expected,
            InfoArg::Observed => InfoKind::Observed,
        },
        ..Default::default()
    };
    let r = mle_fit(&data, a.model, &opts)?;
    let converged = r.converged;
    Ok(Outcome::json(Doc::new(to_value(&r)?), converged))
}

fn sample(a: &SampleArgs) -> Result<Outcome, Failure> {
    let d = dist(&a.dist)?;
    let xs = d.sample(a.n, a.seed)?;
    let mut t = Table::new(&["x"]);
    for &x in &xs {
        t.push(vec![cell(x)]);
    }
    let v = json!({ "dist": d.to_string(), "seed": a.seed, "n": a.n, "sample": xs });
    Ok(Outcome {
        doc: Doc::with_table(v, t),
        converged: true,
        default_format: Format::Csv,
    })
}

fn params_list(model: Model, text: &str) -> Result<Vec<f64>, Failure> {
    let keys: &[&str] = match model {
        Model::CtUniform => &["l1", "l2"],
        Model::CtWeibull => &["l1", "l2", "k"],
    };
    let mut vals = vec![None; keys.len()];
    for item in text.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| usage(anyhow!("expected key=value in --params, found `{item}`")))?;
        let i = keys
            .iter()
            .position(|&x| x == k.trim())
            .ok_or_else(|| usage(anyhow!("unknown parameter `{k}` for {}", model.name())))?;
        vals[i] = Some(
            v.trim()
                .parse::<f64>()
                .map_err(|_| usage(anyhow!("`{v}` is not a number")))?,
        );
    }
    keys.iter()
        .zip(vals)
        .map(|(k, v)| v.ok_or_else(|| usage(anyhow!("missing parameter `{k}`"))))
        .collect()
}

fn configure(c: &Campaign, cfg: &mut SimulationConfig) {
    cfg.output_path = c.out.clone();
    cfg.resume = c.resume;
    cfg.execution = if c.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
}

/// Runs campaigns, merging their reports into one CSV table and one JSON
/// document.
fn run_campaigns(cfgs: Vec<SimulationConfig>, json_path: Option<&PathBuf>) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let mut reports: Vec<SimulationReport> = vec![];
    for cfg in cfgs {
        reports.push(sim::run(&cfg)?);
    }
    let wall = start.elapsed().as_secs_f64();
    eprintln!("simulation finished in {wall:.2} s");
    let mut table: Option<Table> = None;
    for r in &reports {
        let t = Table::from_csv(&r.to_csv()?)?;
        match &mut table {
            Some(acc) => acc.rows.extend(t.rows),
            None => table = Some(t),
        }
    }
    for r in &mut reports {
        r.metadata.wall_time_s = Some(wall);
    }
    let failures: usize = reports.iter().map(|r| r.metadata.failures).sum();
    if failures > 0 {
        eprintln!("{failures} fits failed and were excluded");
    }
    let v = if reports.len() == 1 {
        to_value(&reports[0])?
    } else {
        to_value(&reports)?
    };
    if let Some(p) = json_path {
        std::fs::write(p, ctinfo::json::to_string_pretty(&v)? + "\n")
            .with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(Outcome {
        doc: Doc::with_table(v, table.expect("at least one campaign")),
        converged: true,
        default_format: Format::Csv,
    })
}

fn simulate(a: &SimulateArgs) -> Result<Outcome, Failure> {
    match &a.study {
        SimStudy::Table1 {
            mix,
            all_rows,
            bins,
            smoothing,
            campaign,
        } => {
            let rows: Vec<([f64; 3], Vec<usize>)> = if *all_rows {
                sim::table1_rows()
            } else if mix.is_empty() {
                return Err(usage(anyhow!("give --mix at least once, or --all-rows")));
            } else {
                if campaign.n.is_empty() {
                    return Err(usage(anyhow!("--n is required with --mix")));
                }
                mix.iter().map(|m| (*m, campaign.n.clone())).collect()
            };
            if rows.len() > 1 && campaign.out.is_some() {
                return Err(usage(anyhow!(
                    "--out holds one row set; write several mixes with shell redirection instead"
                )));
            }
            let cfgs = rows
                .into_iter()
                .map(|(m, n_list)| {
                    let mut cfg = SimulationConfig::kl_selection(m, n_list, campaign.reps, campaign.seed);
                    cfg.study = Study::KlSelection {
                        mix: m,
                        bins: *bins,
                        smoothing: *smoothing,
                    };
                    configure(campaign, &mut cfg);
                    cfg
                })
                .collect();
            run_campaigns(cfgs, campaign.json.as_ref())
        }
        SimStudy::Ci {
            model,
            params,
            level,
            campaign,
        } => {
            if campaign.n.is_empty() {
                return Err(usage(anyhow!("--n is required")));
            }
            let truth = params_list(*model, params)?;
            let mut cfg = SimulationConfig::ci_study(
                *model,
                truth,
                level.clone(),
                campaign.n.clone(),
                campaign.reps,
                campaign.seed,
            );
            configure(campaign, &mut cfg);
            run_campaigns(vec![cfg], campaign.json.as_ref())
        }
        SimStudy::Run { config } => {
            let text = std::fs::read_to_string(config)
                .with_context(|| format!("cannot read {}", config.display()))
                .map_err(usage)?;
            let cfg: SimulationConfig = serde_json::from_str(&text)
                .with_context(|| format!("bad campaign config {}", config.display()))
                .map_err(usage)?;
            run_campaigns(vec![cfg], None)
        }
    }
}

fn verify(a: &VerifyArgs, cli: &Cli) -> Result<Outcome, Failure> {
    let Suite::ClosedForms = a.suite;
    if a.grid < 2 {
        return Err(usage(anyhow!("--grid needs at least 2 points")));
    }
    let mut opts = VerifyOptions {
        grid: a.grid,
        ..Default::default()
    };
    if let Some(t) = cli.abs_tol {
        opts.oracle.abs_tol = t;
    }
    if let Some(t) = cli.rel_tol {
        opts.oracle.rel_tol = t;
    }
    let r = verify_closed_forms(&opts)?;
    std::fs::write(&a.erratum, ctinfo::json::to_string_pretty(&r.erratum)? + "\n")
        .with_context(|| format!("cannot write {}", a.erratum.display()))?;
    eprintln!(
        "{} printed-formula mismatches written to {}",
        r.erratum.mismatches.len(),
        a.erratum.display()
    );
    let mut t = Table::new(&[
        "check",
        "compared",
        "fallbacks",
        "both_infinite",
        "max_abs_diff",
        "passed",
    ]);
    for c in &r.checks {
        t.push(vec![
            c.name.clone(),
            c.compared.to_string(),
            c.fallbacks.to_string(),
            c.both_infinite.to_string(),
            cell(c.max_abs_diff),
            c.passed.to_string(),
        ]);
    }
    let ok = r.all_within_tolerance && r.erratum.internally_consistent;
    let mut v = to_value(&r)?;
    v["erratum_path"] = json!(a.erratum.display().to_string());
    Ok(Outcome::json(Doc::with_table(v, t), ok))
}

fn dispatch(cli: &Cli) -> Result<Outcome, Failure> {
    let spec = quad_spec(cli)?;
    match &cli.command {
        Command::Entropy(a) => entropy(a, &spec),
        Command::Divergence(a) => divergence(a, &spec),
        Command::Gini(a) => gini(a, &spec),
        Command::Fisher(a) => fisher(a, &spec),
        Command::Fit(a) => fit(a),
        Command::Sample(a) => sample(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a, cli),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = dispatch(&cli).and_then(|out| {
        let format = cli.format.unwrap_or(out.default_format);
        let text = out.doc.render(format)?;
        print!("{text}");
        if out.converged {
            Ok(())
        } else {
            Err(numeric(anyhow!("a numeric step did not converge or a check failed")))
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
