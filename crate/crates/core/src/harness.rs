//! Monte Carlo experiments over grids of `n`, with deterministic per-trial
//! seeds and report emission as JSON or CSV.

use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};

use crate::ballgrow::{ball_growth_tree, ball_size, mgf_exact, BallGrowthOptions, Status};
use crate::error::{Error, Result};
use crate::instance::{gen_instance, EdgeWeights, Instance};
use crate::maximal::{w_max_with, MaximalOptions, MaximalQuery};
use crate::rng::{purpose_id, sub_purpose, Seed};
use crate::stats::{dkw_bound, Summary};
use crate::steiner::{mst, steiner_exact};
use crate::theory::{
    apply_coupling, check_f_conditional_law, lemma2_bound, subset_intersection_empty_freq,
    CouplingSpec, Partition,
};

pub const REPORT_VERSION: u32 = 1;

/// `zeta(3)`, the limit of the minimum spanning tree weight.
pub const ZETA3: f64 = 1.202_056_903_159_594_3;

/// Samples per trial of the `f_lemma` quantity.
pub const F_LEMMA_SAMPLES: usize = 1000;

/// `k + 2l - 1`, the limit of `W_{k,l} / (ln n / n)`.
pub fn limit_constant(k: usize, l: usize) -> Result<usize> {
    if k + l <= 1 {
        return Err(Error::Domain(format!(
            "k + l = {} <= 1: the weight is identically 0",
            k + l
        )));
    }
    Ok(k + 2 * l - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Quantity {
    /// `W_{k,l}`, normalized by `ln n / n`.
    W { k: usize, l: usize },
    /// Weight of the ball-growth tree on roots `0..k`, normalized.
    BallGrowth { k: usize },
    /// Minimum spanning tree weight of the whole graph, not normalized.
    Mst,
    /// Indicator that `k` random `ceil(c_kn)`-subsets miss each other.
    Lemma2 { k: usize },
    /// Sup distance of the `f` conditional-law check at `mu = 1/n`.
    FLemma,
    /// Steiner weight of the chosen vertices on the coupled instance, normalized.
    Coupling { k: usize },
    /// `mgf_exact(n, k, t) / c_kn` at `t = 0.9 (1 - 1/ln n)`.
    Mgf { k: usize },
}

impl Quantity {
    fn normalized(&self) -> bool {
        matches!(self, Quantity::W { .. } | Quantity::BallGrowth { .. } | Quantity::Coupling { .. })
    }

    pub fn k(&self) -> usize {
        match *self {
            Quantity::W { k, .. }
            | Quantity::BallGrowth { k }
            | Quantity::Lemma2 { k }
            | Quantity::Coupling { k }
            | Quantity::Mgf { k } => k,
            Quantity::Mst | Quantity::FLemma => 0,
        }
    }

    pub fn l(&self) -> usize {
        match *self {
            Quantity::W { l, .. } => l,
            _ => 0,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::W { k, l } => write!(f, "W({k},{l})"),
            Quantity::BallGrowth { k } => write!(f, "ball_growth({k})"),
            Quantity::Mst => write!(f, "mst"),
            Quantity::Lemma2 { k } => write!(f, "lemma2({k})"),
            Quantity::FLemma => write!(f, "f_lemma"),
            Quantity::Coupling { k } => write!(f, "coupling({k})"),
            Quantity::Mgf { k } => write!(f, "mgf({k})"),
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::InvalidArgument(format!("unknown quantity `{s}`"));
        let (name, args) = match s.find('(') {
            Some(p) if s.ends_with(')') => (&s[..p], Some(&s[p + 1..s.len() - 1])),
            Some(_) => return Err(bad()),
            None => (s.as_str(), None),
        };
        let nums: Vec<usize> = match args {
            Some(a) => a
                .split(',')
                .map(|x| x.parse().map_err(|_| bad()))
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let q = match (name, nums.as_slice()) {
            ("W" | "w", [k, l]) => Quantity::W { k: *k, l: *l },
            ("ball_growth", [k]) => Quantity::BallGrowth { k: *k },
            ("mst", []) => Quantity::Mst,
            ("lemma2", [k]) => Quantity::Lemma2 { k: *k },
            ("lemma2", []) => Quantity::Lemma2 { k: 2 },
            ("f_lemma", []) => Quantity::FLemma,
            ("coupling", [k]) => Quantity::Coupling { k: *k },
            ("coupling", []) => Quantity::Coupling { k: 1 },
            ("mgf", [k]) => Quantity::Mgf { k: *k },
            ("mgf", []) => Quantity::Mgf { k: 2 },
            _ => return Err(bad()),
        };
        Ok(q)
    }
}

impl From<Quantity> for String {
    fn from(q: Quantity) -> Self {
        q.to_string()
    }
}

impl TryFrom<String> for Quantity {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub quantity: Quantity,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    /// Worker count; not part of the emitted report.
    #[serde(skip, default = "default_threads")]
    pub threads: usize,
    /// Keep every per-trial value in the report.
    pub retain_trials: bool,
    /// Block exponent of the `coupling` quantity.
    pub epsilon: f64,
}

fn default_threads() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(quantity: Quantity, n_grid: Vec<usize>, trials: usize, master_seed: u64) -> Self {
        Self {
            quantity,
            n_grid,
            trials,
            master_seed,
            threads: 1,
            retain_trials: false,
            epsilon: 0.25,
        }
    }

    /// Checks everything that can be checked without running a trial.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidArgument("n grid is empty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "n grid {:?} is not strictly increasing",
                self.n_grid
            )));
        }
        for &n in &self.n_grid {
            self.validate_n(n)?;
        }
        Ok(())
    }

    fn validate_n(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("n = {n} is below 2")));
        }
        match self.quantity {
            Quantity::W { k, l } => {
                MaximalQuery { k, l }.validate(n)?;
                limit_constant(k, l)?;
            }
            Quantity::BallGrowth { k } => {
                if k < 2 {
                    return Err(Error::InvalidArgument(
                        "ball growth needs k >= 2 roots".into(),
                    ));
                }
                let m = ball_size(n, k)?;
                if 2 * k * m > n {
                    return Err(Error::InfeasibleSize(format!(
                        "2 k m = {} exceeds n = {n}",
                        2 * k * m
                    )));
                }
            }
            Quantity::Mst | Quantity::FLemma => {}
            Quantity::Lemma2 { k } => {
                let m = ball_size(n, k)?;
                lemma2_bound(n, m.min(n), k)?;
            }
            Quantity::Coupling { k } => {
                let part = Partition::new(n, k, self.epsilon)?;
                CouplingSpec::new(part, chosen_first(&part))?;
            }
            Quantity::Mgf { k } => {
                mgf_exact(n, k, mgf_t(n))?;
            }
        }
        Ok(())
    }

    fn seed(&self, n: usize, trial: usize) -> Seed {
        let purpose = sub_purpose(purpose_id(&self.quantity.to_string()), n as u64);
        Seed::with_purpose_id(self.master_seed, purpose, trial as u64)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
    }
}

fn chosen_first(part: &Partition) -> Vec<usize> {
    (0..part.k).map(|j| part.block(j).start).collect()
}

fn mgf_t(n: usize) -> f64 {
    0.9 * (1.0 - 1.0 / (n as f64).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub trials: usize,
    /// Trials that errored or, for ball growth, failed to intersect.
    pub failures: usize,
    pub failure_rate: f64,
    /// Summary of the successful trials' statistic; absent if none succeeded.
    pub summary: Option<Summary>,
    /// Limit or reference constant for the statistic.
    pub limit_constant: Option<f64>,
    /// Finite-n reference probability or bound, where one applies.
    pub reference_bound: Option<f64>,
    /// Per-trial statistic in trial order (`None` for failures).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub records: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: u32,
    /// `experiment` or `ballgrow_vs_exact`.
    pub kind: String,
    pub statistic: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    /// Seconds spent; kept out of the emitted report.
    #[serde(skip, default)]
    pub wall_clock: f64,
}

impl ExperimentReport {
    /// More than half of the trials failed in some row.
    pub fn systemic_failure(&self) -> bool {
        self.rows.iter().any(|r| 2 * r.failures > r.trials)
    }
}

enum TrialValue {
    Value(f64),
    Failed,
}

fn build_row(
    cfg: &ExperimentConfig,
    n: usize,
    values: Vec<TrialValue>,
    limit: Option<f64>,
    reference: Option<f64>,
) -> ReportRow {
    let records: Vec<Option<f64>> = values
        .into_iter()
        .map(|v| match v {
            TrialValue::Value(x) => Some(x),
            TrialValue::Failed => None,
        })
        .collect();
    let ok: Vec<f64> = records.iter().flatten().copied().collect();
    let failures = records.len() - ok.len();
    ReportRow {
        n,
        trials: cfg.trials,
        failures,
        failure_rate: failures as f64 / cfg.trials as f64,
        summary: Summary::of(&ok),
        limit_constant: limit,
        reference_bound: reference,
        records: cfg.retain_trials.then_some(records),
    }
}

fn run_trials<F>(cfg: &ExperimentConfig, pool: &rayon::ThreadPool, n: usize, trial: F) -> Vec<TrialValue>
where
    F: Fn(Seed) -> Result<Option<f64>> + Sync,
{
    pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| match trial(cfg.seed(n, t)) {
                Ok(Some(v)) => TrialValue::Value(v),
                Ok(None) | Err(_) => TrialValue::Failed,
            })
            .collect()
    })
}

fn trial_value(cfg: &ExperimentConfig, n: usize, seed: Seed) -> Result<Option<f64>> {
    let scale = if cfg.quantity.normalized() {
        n as f64 / (n as f64).ln()
    } else {
        1.0
    };
    let raw = match cfg.quantity {
        Quantity::W { k, l } => {
            let inst = gen_instance(n, seed)?;
            w_max_with(&inst, k, l, MaximalOptions::default())?.weight
        }
        Quantity::BallGrowth { k } => {
            let inst = gen_instance(n, seed)?;
            let run = ball_growth_tree(&inst, k, BallGrowthOptions::default())?;
            if run.outcome.status != Status::Success {
                return Ok(None);
            }
            run.outcome.weight
        }
        Quantity::Mst => {
            let inst = gen_instance(n, seed)?;
            let all: Vec<usize> = (0..n).collect();
            mst(&inst, &all)?
        }
        Quantity::Lemma2 { k } => {
            let m = ball_size(n, k)?.min(n);
            subset_intersection_empty_freq(n, m, k, 1, &mut seed.stream())?
        }
        Quantity::FLemma => {
            let nf = n as f64;
            check_f_conditional_law(1.0 / nf, nf.ln() / nf, F_LEMMA_SAMPLES, &mut seed.stream())?
        }
        Quantity::Coupling { k } => {
            let part = Partition::new(n, k, cfg.epsilon)?;
            let spec = CouplingSpec::new(part, chosen_first(&part))?;
            let inst = gen_instance(n, seed)?;
            let coupled = apply_coupling(&inst, &spec)?;
            steiner_exact(&coupled, &spec.chosen)?.weight
        }
        Quantity::Mgf { k } => mgf_exact(n, k, mgf_t(n))? / crate::ballgrow::c_kn(n, k)?,
    };
    Ok(Some(raw * scale))
}

fn references(cfg: &ExperimentConfig, n: usize) -> (Option<f64>, Option<f64>) {
    match cfg.quantity {
        Quantity::W { k, l } => (limit_constant(k, l).ok().map(|c| c as f64), None),
        Quantity::BallGrowth { k } => (
            limit_constant(k, 0).ok().map(|c| c as f64),
            Some((n as f64).powf(-((k + 1) as f64))),
        ),
        Quantity::Mst => (Some(ZETA3), None),
        Quantity::Lemma2 { k } => (
            None,
            ball_size(n, k).ok().and_then(|m| lemma2_bound(n, m.min(n), k).ok()),
        ),
        Quantity::FLemma => (None, Some(dkw_bound(F_LEMMA_SAMPLES, 0.01))),
        Quantity::Coupling { k } => (Some(k as f64 - 1.0), None),
        Quantity::Mgf { .. } => (None, None),
    }
}

/// Runs every trial of every grid point and summarizes each point.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = cfg.pool()?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let values = run_trials(cfg, &pool, n, |seed| trial_value(cfg, n, seed));
        let (limit, reference) = references(cfg, n);
        rows.push(build_row(cfg, n, values, limit, reference));
    }
    let statistic = if cfg.quantity.normalized() {
        "n * value / ln n"
    } else {
        "value"
    };
    Ok(ExperimentReport {
        version: REPORT_VERSION,
        kind: "experiment".into(),
        statistic: statistic.into(),
        config: cfg.clone(),
        rows,
        wall_clock: start.elapsed().as_secs_f64(),
    })
}

/// Ratio of the ball-growth tree weight to the exact Steiner weight of the
/// roots. Failed intersections count as failures; the reference bound is
/// `n^-(k+1)`.
pub fn compare_ballgrow_exact(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let k = match cfg.quantity {
        Quantity::BallGrowth { k } if k >= 2 => k,
        Quantity::BallGrowth { .. } => {
            return Err(Error::InvalidArgument(
                "k = 1: both weights are 0 and the ratio is undefined".into(),
            ))
        }
        q => {
            return Err(Error::InvalidArgument(format!(
                "comparison needs a ball_growth quantity, got {q}"
            )))
        }
    };
    cfg.validate()?;
    let start = Instant::now();
    let pool = cfg.pool()?;
    let roots: Vec<usize> = (0..k).collect();
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let values = run_trials(cfg, &pool, n, |seed| {
            let inst = gen_instance(n, seed)?;
            let run = ball_growth_tree(&inst, k, BallGrowthOptions::default())?;
            if run.outcome.status != Status::Success {
                return Ok(None);
            }
            let exact = steiner_exact(&inst, &roots)?.weight;
            Ok(Some(run.outcome.weight / exact))
        });
        let reference = Some((n as f64).powf(-((k + 1) as f64)));
        rows.push(build_row(cfg, n, values, Some(1.0), reference));
    }
    Ok(ExperimentReport {
        version: REPORT_VERSION,
        kind: "ballgrow_vs_exact".into(),
        statistic: "ball tree weight / exact Steiner weight".into(),
        config: cfg.clone(),
        rows,
        wall_clock: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::InvalidArgument(format!("unknown format `{s}`"))),
        }
    }
}

/// Float text with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn canonical_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            if x.is_finite() {
                Value::Number(format_float(x).parse::<Number>().expect("valid number"))
            } else {
                Value::Null
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical_numbers).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonical_numbers(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with sorted keys and 17-significant-digit floats.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = canonical_numbers(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub const CSV_HEADER: &str =
    "quantity,k,l,n,trials,mean,sd,q05,q50,q95,limit_constant,failures";

pub fn report_csv(report: &ExperimentReport) -> String {
    let q = &report.config.quantity;
    let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let s = r.summary.as_ref();
        out.push_str(&format!(
            "\"{}\",{},{},{},{},{},{},{},{},{},{},{}\n",
            q,
            q.k(),
            q.l(),
            r.n,
            r.trials,
            opt(s.map(|s| s.mean)),
            opt(s.map(|s| s.sd)),
            opt(s.map(|s| s.q05)),
            opt(s.map(|s| s.q50)),
            opt(s.map(|s| s.q95)),
            opt(r.limit_constant),
            r.failures
        ));
    }
    out
}

pub fn render_report(report: &ExperimentReport, format: Format) -> Result<String> {
    match format {
        Format::Json => to_canonical_json(report),
        Format::Csv => Ok(report_csv(report)),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)
}

pub fn emit_report(report: &ExperimentReport, format: Format, path: &Path) -> Result<()> {
    write_text(path, &render_report(report, format)?)
}

pub fn dump_instance(inst: &Instance, path: &Path) -> Result<()> {
    write_text(path, &to_canonical_json(inst)?)
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let inst: Instance = serde_json::from_str(&text)?;
    Instance::from_weights(inst.n(), inst.weights().to_vec()).map(|_| inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert_eq!(limit_constant(2, 0).unwrap(), 1);
        assert_eq!(limit_constant(1, 1).unwrap(), 2);
        assert_eq!(limit_constant(0, 2).unwrap(), 3);
        assert_eq!(limit_constant(5, 0).unwrap(), 4);
        assert_eq!(limit_constant(0, 3).unwrap(), 5);
        assert!(matches!(limit_constant(1, 0), Err(Error::Domain(_))));
        assert!(limit_constant(0, 1).is_err());
        for k in 0..20 {
            for l in 0..20 {
                if k + l >= 2 {
                    let c = limit_constant(k, l).unwrap();
                    if l == 0 {
                        assert_eq!(c, k - 1);
                    }
                    if k == 0 {
                        assert_eq!(c, 2 * l - 1);
                    }
                }
            }
        }
    }

    #[test]
    fn quantity_round_trip() {
        for s in ["W(2,0)", "ball_growth(3)", "mst", "lemma2(2)", "f_lemma", "coupling(1)", "mgf(2)"] {
            let q: Quantity = s.parse().unwrap();
            assert_eq!(q.to_string(), s);
        }
        assert_eq!("W( 1, 1 )".parse::<Quantity>().unwrap(), Quantity::W { k: 1, l: 1 });
        assert!("W(1)".parse::<Quantity>().is_err());
        assert!("foo".parse::<Quantity>().is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::new(Quantity::W { k: 2, l: 0 }, vec![20, 10], 3, 1);
        assert!(cfg.validate().is_err());
        cfg.n_grid = vec![10, 20];
        assert!(cfg.validate().is_ok());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::new(Quantity::W { k: 1, l: 0 }, vec![10], 3, 1);
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::new(Quantity::BallGrowth { k: 3 }, vec![50], 3, 1);
        assert!(matches!(cfg.validate(), Err(Error::InfeasibleSize(_))));
    }

    #[test]
    fn single_trial_quantiles_equal() {
        let cfg = ExperimentConfig::new(Quantity::W { k: 1, l: 1 }, vec![30], 1, 9);
        let rep = run_experiment(&cfg).unwrap();
        let s = rep.rows[0].summary.unwrap();
        assert_eq!(s.q05, s.q50);
        assert_eq!(s.q50, s.q95);
        assert_eq!(s.mean, s.q50);
    }

    #[test]
    fn json_round_trip_is_stable() {
        let mut cfg = ExperimentConfig::new(Quantity::W { k: 0, l: 2 }, vec![20, 40], 5, 3);
        cfg.retain_trials = true;
        let rep = run_experiment(&cfg).unwrap();
        let text = render_report(&rep, Format::Json).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(to_canonical_json(&v).unwrap(), text);
        let back: ExperimentReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.rows.len(), 2);
        assert_eq!(back.config.quantity, cfg.quantity);
    }

    #[test]
    fn csv_rows_match_grid() {
        let cfg = ExperimentConfig::new(Quantity::Mst, vec![10, 20, 30], 2, 3);
        let rep = run_experiment(&cfg).unwrap();
        let csv = report_csv(&rep);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("\"mst\",0,0,10,2,"));
    }

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 1e-300, 123456.789, ZETA3] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
