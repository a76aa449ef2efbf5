//! Campaign plumbing: single solves, Monte Carlo campaigns over a sweep axis
//! and beampattern sweeps, written as versioned CSV.
//!
//! Every CSV starts with the comment line `# schema=1` followed by the
//! header row. Campaign settings live in the scenario file next to the
//! scenario keys:
//!
//! ```toml
//! sweep = "sinr_target_db"      # or "n_antennas"
//! sweep_values = [4, 8, 12]
//! schemes = ["pdd", "fa", "random", "bound"]
//! realizations = 50
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::baselines::{run_baseline_on, BaselineKind};
use crate::channel::beampattern_sweep;
use crate::error::{ConfigError, SdpError};
use crate::pdd::{PddOptions, PddResult, TraceRecord, Verdict};
use crate::scenario::{Instance, ScenarioConfig};
use crate::{from_db, to_db};

/// First line of every emitted CSV.
pub const SCHEMA_LINE: &str = "# schema=1";

pub const RUNS_HEADER: [&str; 10] = [
    "realization",
    "scheme",
    "sweep_value",
    "gain_db",
    "min_sinr_slack_db",
    "violation",
    "outer_iters",
    "inner_iters_total",
    "wall_ms",
    "status",
];

pub const SUMMARY_HEADER: [&str; 9] = [
    "sweep_value",
    "scheme",
    "runs",
    "feasible",
    "paired",
    "mean_gain_db",
    "std_gain_db",
    "mean_min_sinr_slack_db",
    "mean_wall_ms",
];

/// Campaign keys stripped from the scenario file before it is validated.
const CAMPAIGN_KEYS: [&str; 4] = ["sweep", "sweep_values", "schemes", "realizations"];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid campaign: {0}")]
    Campaign(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Solver(#[from] SdpError),
    #[error("{0}")]
    Infeasible(String),
}

impl HarnessError {
    /// Process exit status: 1 for configuration and I/O problems, 2 for
    /// solver failures, 3 for unmet SINR targets.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Campaign(_) | HarnessError::Io { .. } => 1,
            HarnessError::Solver(_) => 2,
            HarnessError::Infeasible(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SinrTargetDb,
    NAntennas,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCampaign {
    sweep: Option<SweepAxis>,
    sweep_values: Option<Vec<f64>>,
    schemes: Option<Vec<String>>,
    realizations: Option<i64>,
}

/// A Monte Carlo campaign: every scheme on `realizations` channel draws at
/// every sweep value.
#[derive(Debug, Clone)]
pub struct CampaignSpec {
    pub base: ScenarioConfig,
    pub axis: SweepAxis,
    /// Empty means the base scenario only.
    pub values: Vec<f64>,
    pub schemes: Vec<BaselineKind>,
    pub realizations: usize,
    pub out_dir: PathBuf,
}

/// One point of the sweep: the value written to CSV and its scenario.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub config: ScenarioConfig,
}

impl CampaignSpec {
    /// Parses scenario and campaign keys from one TOML document.
    pub fn from_toml_str(text: &str, out_dir: PathBuf) -> Result<Self, HarnessError> {
        let mut table: toml::Table = text.parse().map_err(ConfigError::Parse)?;
        let mut campaign = toml::Table::new();
        for key in CAMPAIGN_KEYS {
            if let Some(v) = table.remove(key) {
                campaign.insert(key.to_string(), v);
            }
        }
        let base = ScenarioConfig::from_table(table)?;
        let raw: RawCampaign = campaign.try_into().map_err(ConfigError::Parse)?;
        let schemes = match raw.schemes {
            Some(list) => list
                .iter()
                .map(|s| s.parse::<BaselineKind>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(HarnessError::Campaign)?,
            None => BaselineKind::ALL.to_vec(),
        };
        let realizations = raw.realizations.unwrap_or(50);
        if realizations < 1 {
            return Err(HarnessError::Campaign("realizations must be at least 1".into()));
        }
        let spec = Self {
            base,
            axis: raw.sweep.unwrap_or(SweepAxis::SinrTargetDb),
            values: raw.sweep_values.unwrap_or_default(),
            schemes,
            realizations: realizations as usize,
            out_dir,
        };
        spec.points()?;
        Ok(spec)
    }

    pub fn load(path: &Path, out_dir: PathBuf) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, out_dir)
    }

    /// The validated scenario of every sweep value.
    pub fn points(&self) -> Result<Vec<SweepPoint>, HarnessError> {
        if self.schemes.is_empty() {
            return Err(HarnessError::Campaign("no schemes selected".into()));
        }
        if self.values.is_empty() {
            let value = match self.axis {
                SweepAxis::SinrTargetDb => to_db(self.base.sinr_targets[0]),
                SweepAxis::NAntennas => self.base.num_antennas as f64,
            };
            return Ok(vec![SweepPoint {
                value,
                config: self.base.clone(),
            }]);
        }
        self.values
            .iter()
            .map(|&v| {
                let mut config = self.base.clone();
                match self.axis {
                    SweepAxis::SinrTargetDb => {
                        if !v.is_finite() {
                            return Err(HarnessError::Campaign(format!("sweep value {v} is not finite")));
                        }
                        config.sinr_targets = vec![from_db(v); config.num_users];
                    }
                    SweepAxis::NAntennas => {
                        if !(v >= 1.0 && v.fract() == 0.0) {
                            return Err(HarnessError::Campaign(format!(
                                "n_antennas sweep value {v} is not a positive integer"
                            )));
                        }
                        config.num_antennas = v as usize;
                    }
                }
                config.validate()?;
                Ok(SweepPoint { value: v, config })
            })
            .collect()
    }
}

/// One row of `runs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub realization: u64,
    pub scheme: BaselineKind,
    pub sweep_value: f64,
    pub gain_db: f64,
    pub min_sinr_slack_db: f64,
    pub violation: f64,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub wall_ms: f64,
    /// `ok`, `infeasible`, `sinr_shortfall` or `solver_error`.
    pub status: String,
}

impl RunRow {
    pub fn is_ok(&self) -> bool {
        self.status == Verdict::Feasible.as_str()
    }

    fn from_result(
        realization: u64,
        scheme: BaselineKind,
        sweep_value: f64,
        inst: &Instance,
        res: Result<&PddResult, &SdpError>,
    ) -> Self {
        match res {
            Ok(r) => Self {
                realization,
                scheme,
                sweep_value,
                gain_db: r.gain_db,
                min_sinr_slack_db: if scheme == BaselineKind::UpperBound {
                    f64::NAN
                } else {
                    r.min_slack_db(inst)
                },
                violation: r.violation,
                outer_iters: r.outer_iters,
                inner_iters_total: r.inner_iters_total,
                wall_ms: r.wall_time.as_secs_f64() * 1e3,
                status: r.verdict.as_str().to_string(),
            },
            Err(_) => Self {
                realization,
                scheme,
                sweep_value,
                gain_db: f64::NAN,
                min_sinr_slack_db: f64::NAN,
                violation: f64::NAN,
                outer_iters: 0,
                inner_iters_total: 0,
                wall_ms: f64::NAN,
                status: "solver_error".to_string(),
            },
        }
    }

    pub fn record(&self) -> [String; 10] {
        [
            self.realization.to_string(),
            self.scheme.cli_name().to_string(),
            self.sweep_value.to_string(),
            self.gain_db.to_string(),
            self.min_sinr_slack_db.to_string(),
            self.violation.to_string(),
            self.outer_iters.to_string(),
            self.inner_iters_total.to_string(),
            self.wall_ms.to_string(),
            self.status.clone(),
        ]
    }
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub scheme: BaselineKind,
    pub runs: usize,
    pub feasible: usize,
    /// Realizations on which every scheme of the campaign was feasible;
    /// the means below are taken over exactly these.
    pub paired: usize,
    pub mean_gain_db: f64,
    pub std_gain_db: f64,
    pub mean_min_sinr_slack_db: f64,
    pub mean_wall_ms: f64,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; 0 for a single value.
fn std_dev(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => f64::NAN,
        1 => 0.0,
        n => {
            let m = mean(xs);
            (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    }
}

/// Aggregates rows per `(sweep value, scheme)` with pairwise exclusion: a
/// realization counts only if every scheme run on it at that sweep value
/// is feasible. Rows must be in canonical order.
pub fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut values: Vec<f64> = Vec::new();
    for r in rows {
        if !values.iter().any(|v| v.to_bits() == r.sweep_value.to_bits()) {
            values.push(r.sweep_value);
        }
    }
    let mut out = Vec::new();
    for value in values {
        let at: Vec<&RunRow> = rows.iter().filter(|r| r.sweep_value.to_bits() == value.to_bits()).collect();
        let mut all_ok: BTreeMap<u64, bool> = BTreeMap::new();
        for r in &at {
            *all_ok.entry(r.realization).or_insert(true) &= r.is_ok();
        }
        let mut schemes: Vec<BaselineKind> = Vec::new();
        for r in &at {
            if !schemes.contains(&r.scheme) {
                schemes.push(r.scheme);
            }
        }
        for scheme in schemes {
            let mine: Vec<&&RunRow> = at.iter().filter(|r| r.scheme == scheme).collect();
            let paired: Vec<&&RunRow> = mine.iter().copied().filter(|r| all_ok[&r.realization]).collect();
            let gains: Vec<f64> = paired.iter().map(|r| r.gain_db).collect();
            let slacks: Vec<f64> = paired.iter().map(|r| r.min_sinr_slack_db).collect();
            let walls: Vec<f64> = paired.iter().map(|r| r.wall_ms).collect();
            out.push(SummaryRow {
                sweep_value: value,
                scheme,
                runs: mine.len(),
                feasible: mine.iter().filter(|r| r.is_ok()).count(),
                paired: paired.len(),
                mean_gain_db: mean(&gains),
                std_gain_db: std_dev(&gains),
                mean_min_sinr_slack_db: mean(&slacks),
                mean_wall_ms: mean(&walls),
            });
        }
    }
    out
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes `SCHEMA_LINE`, `header` and `rows` to `path`.
fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut buf = Vec::new();
    buf.extend_from_slice(SCHEMA_LINE.as_bytes());
    buf.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let map = |e: csv::Error| HarnessError::Io {
            path: path.display().to_string(),
            source: e.into(),
        };
        w.write_record(header).map_err(map)?;
        for r in rows {
            w.write_record(r).map_err(map)?;
        }
        w.flush().map_err(io_err(path))?;
    }
    fs::write(path, buf).map_err(io_err(path))
}

/// Reads a CSV written by this module (schema line skipped) as string
/// records keyed by the header.
pub fn read_csv(path: &Path) -> Result<Vec<BTreeMap<String, String>>, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let body = text
        .strip_prefix(SCHEMA_LINE)
        .ok_or_else(|| HarnessError::Campaign(format!("{} lacks the schema line", path.display())))?;
    let mut r = csv::Reader::from_reader(body.trim_start_matches('\n').as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| HarnessError::Campaign(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| HarnessError::Campaign(e.to_string()))?;
            Ok(header.iter().cloned().zip(rec.iter().map(str::to_string)).collect())
        })
        .collect()
}

/// Rayon pool of `workers` threads (`None`: one per core).
fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(HarnessError::Campaign("--workers must be positive".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| HarnessError::Campaign(e.to_string()))
}

/// Raw rows and PDD traces of a campaign.
#[derive(Debug, Clone)]
pub struct CampaignOutput {
    pub rows: Vec<RunRow>,
    /// `(sweep value, realization, records)` of every PDD run.
    pub traces: Vec<(f64, u64, Vec<TraceRecord>)>,
}

/// Runs every `(sweep value, realization)` task on `workers` threads.
/// Rows come back in canonical order: sweep value as listed, realization,
/// scheme as listed.
pub fn run_campaign(
    spec: &CampaignSpec,
    workers: Option<usize>,
    trace: bool,
) -> Result<CampaignOutput, HarnessError> {
    let points = spec.points()?;
    let tasks: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| (0..spec.realizations as u64).map(move |r| (p, r)))
        .collect();
    let results: Vec<(Vec<RunRow>, Option<Vec<TraceRecord>>)> = pool(workers)?.install(|| {
        tasks
            .par_iter()
            .map(|&(p, realization)| {
                let point = &points[p];
                let mut opts = PddOptions::from_config(&point.config);
                opts.record_trace = trace;
                let inst = Instance::from_config(&point.config, realization);
                let mut rows = Vec::with_capacity(spec.schemes.len());
                let mut pdd_trace = None;
                for &scheme in &spec.schemes {
                    let res = run_baseline_on(scheme, &point.config, &inst, realization, &opts);
                    if let (BaselineKind::PddJapb, Ok(r)) = (scheme, &res) {
                        pdd_trace = Some(r.trace.clone());
                    }
                    rows.push(RunRow::from_result(realization, scheme, point.value, &inst, res.as_ref()));
                }
                (rows, pdd_trace)
            })
            .collect()
    });
    let mut out = CampaignOutput {
        rows: Vec::new(),
        traces: Vec::new(),
    };
    for ((p, realization), (rows, tr)) in tasks.into_iter().zip(results) {
        out.rows.extend(rows);
        if let Some(tr) = tr {
            out.traces.push((points[p].value, realization, tr));
        }
    }
    Ok(out)
}

pub fn summary_record(s: &SummaryRow) -> [String; 9] {
    [
        s.sweep_value.to_string(),
        s.scheme.cli_name().to_string(),
        s.runs.to_string(),
        s.feasible.to_string(),
        s.paired.to_string(),
        s.mean_gain_db.to_string(),
        s.std_gain_db.to_string(),
        s.mean_min_sinr_slack_db.to_string(),
        s.mean_wall_ms.to_string(),
    ]
}

fn trace_rows(records: &[TraceRecord]) -> impl Iterator<Item = [String; 5]> + '_ {
    records.iter().map(|t| {
        [
            t.outer.to_string(),
            t.inner.to_string(),
            t.objective.to_string(),
            t.violation.to_string(),
            t.rho.to_string(),
        ]
    })
}

/// Command-line flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunFlags {
    pub config: PathBuf,
    /// Overrides the scheme selection of the command or campaign file.
    pub schemes: Option<Vec<BaselineKind>>,
    /// Overrides the master seed.
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub trace: bool,
    pub workers: Option<usize>,
}

/// Angle grid of a beampattern sweep, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleGrid {
    pub min_deg: f64,
    pub max_deg: f64,
    pub step_deg: f64,
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self {
            min_deg: -90.0,
            max_deg: 90.0,
            step_deg: 0.25,
        }
    }
}

impl AngleGrid {
    /// Grid points from `min_deg` to `max_deg` inclusive.
    pub fn points(&self) -> Result<Vec<f64>, HarnessError> {
        if !(self.step_deg > 0.0) || !(self.max_deg >= self.min_deg) {
            return Err(HarnessError::Campaign("angle grid needs step > 0 and max >= min".into()));
        }
        if self.min_deg < -90.0 || self.max_deg > 90.0 {
            return Err(HarnessError::Campaign("angle grid must lie within [-90, 90] degrees".into()));
        }
        let n = ((self.max_deg - self.min_deg) / self.step_deg + 1e-9).floor() as usize;
        let mut pts: Vec<f64> = (0..=n).map(|i| self.min_deg + i as f64 * self.step_deg).collect();
        if self.max_deg - pts[n] > 1e-9 {
            pts.push(self.max_deg);
        }
        Ok(pts)
    }
}

fn load_scenario(flags: &RunFlags) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = CampaignSpec::load(&flags.config, flags.out.clone())?.base;
    if let Some(seed) = flags.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn single_scheme(flags: &RunFlags) -> Result<BaselineKind, HarnessError> {
    match flags.schemes.as_deref() {
        None => Ok(BaselineKind::PddJapb),
        Some([one]) => Ok(*one),
        Some(_) => Err(HarnessError::Campaign("solve takes exactly one scheme".into())),
    }
}

fn verdict_error(scheme: BaselineKind, res: &PddResult) -> Option<HarnessError> {
    (!res.feasible()).then(|| {
        HarnessError::Infeasible(format!(
            "{scheme}: SINR targets not met ({})",
            res.verdict.as_str()
        ))
    })
}

/// Solves realization 0 with one scheme and writes `solution.csv`
/// (`quantity,row,col,value` rows: gain, positions, beamformer entries,
/// SINRs) plus `trace.csv` when tracing.
pub fn cmd_solve(flags: &RunFlags) -> Result<PddResult, HarnessError> {
    let cfg = load_scenario(flags)?;
    let scheme = single_scheme(flags)?;
    let mut opts = PddOptions::from_config(&cfg);
    opts.record_trace = flags.trace;
    let inst = Instance::from_config(&cfg, 0);
    let res = run_baseline_on(scheme, &cfg, &inst, 0, &opts)?;
    create_dir(&flags.out)?;
    write_csv(&flags.out.join("solution.csv"), &["quantity", "row", "col", "value"], solution_rows(scheme, &res))?;
    if flags.trace {
        write_csv(
            &flags.out.join("trace.csv"),
            &["outer", "inner", "objective", "violation", "rho"],
            trace_rows(&res.trace),
        )?;
    }
    println!(
        "scheme={scheme} gain_db={:.4} status={} outer_iters={} violation={:.3e}",
        res.gain_db,
        res.verdict.as_str(),
        res.outer_iters,
        res.violation
    );
    match verdict_error(scheme, &res) {
        Some(e) => Err(e),
        None => Ok(res),
    }
}

fn solution_rows(scheme: BaselineKind, res: &PddResult) -> Vec<[String; 4]> {
    let mut rows = vec![["gain_db".into(), String::new(), String::new(), res.gain_db.to_string()]];
    if scheme == BaselineKind::UpperBound {
        return rows;
    }
    for (p, t) in res.positions.iter().enumerate() {
        rows.push(["position_m".into(), p.to_string(), String::new(), t.to_string()]);
    }
    let w = &res.beamformer.w;
    for k in 0..w.ncols() {
        for p in 0..w.nrows() {
            rows.push(["w_re".into(), p.to_string(), k.to_string(), w[(p, k)].re.to_string()]);
            rows.push(["w_im".into(), p.to_string(), k.to_string(), w[(p, k)].im.to_string()]);
        }
    }
    for (k, s) in res.sinr_db.iter().enumerate() {
        rows.push(["sinr_db".into(), k.to_string(), String::new(), s.to_string()]);
    }
    rows
}

/// Runs the campaign of the config file and writes `runs.csv`,
/// `summary.csv` and, when tracing, `trace.csv`.
pub fn cmd_montecarlo(flags: &RunFlags) -> Result<Vec<SummaryRow>, HarnessError> {
    let mut spec = CampaignSpec::load(&flags.config, flags.out.clone())?;
    if let Some(seed) = flags.seed {
        spec.base.master_seed = seed;
    }
    if let Some(s) = &flags.schemes {
        spec.schemes = s.clone();
    }
    let out = run_campaign(&spec, flags.workers, flags.trace)?;
    let summary = summarize(&out.rows);
    create_dir(&spec.out_dir)?;
    write_csv(&spec.out_dir.join("runs.csv"), &RUNS_HEADER, out.rows.iter().map(RunRow::record))?;
    write_csv(&spec.out_dir.join("summary.csv"), &SUMMARY_HEADER, summary.iter().map(summary_record))?;
    if flags.trace {
        let rows = out.traces.iter().flat_map(|(v, r, tr)| {
            trace_rows(tr).map(move |row| {
                let mut full = vec![v.to_string(), r.to_string()];
                full.extend(row);
                full
            })
        });
        write_csv(
            &spec.out_dir.join("trace.csv"),
            &["sweep_value", "realization", "outer", "inner", "objective", "violation", "rho"],
            rows,
        )?;
    }
    for s in &summary {
        println!(
            "sweep_value={} scheme={} paired={}/{} mean_gain_db={:.4}",
            s.sweep_value, s.scheme, s.paired, s.runs, s.mean_gain_db
        );
    }
    Ok(summary)
}

/// Beampattern of one solved scheme.
#[derive(Debug, Clone)]
pub struct Beampattern {
    pub scheme: BaselineKind,
    pub theta_deg: Vec<f64>,
    /// `10·log10(aᴴRa / P_t)` at every grid angle.
    pub gain_db: Vec<f64>,
    pub result: PddResult,
}

/// Solves realization 0 with every selected scheme (default pdd and fa) and
/// writes `beampattern.csv` plus one `beampattern_<scheme>.svg` each.
pub fn cmd_sweep(flags: &RunFlags, grid: &AngleGrid) -> Result<Vec<Beampattern>, HarnessError> {
    let cfg = load_scenario(flags)?;
    let schemes = flags
        .schemes
        .clone()
        .unwrap_or_else(|| vec![BaselineKind::PddJapb, BaselineKind::FixedUla]);
    if schemes.contains(&BaselineKind::UpperBound) {
        return Err(HarnessError::Campaign("the bound scheme has no beamformer to sweep".into()));
    }
    let theta_deg = grid.points()?;
    let radians: Vec<f64> = theta_deg.iter().map(|d| d.to_radians()).collect();
    let opts = PddOptions::from_config(&cfg);
    let inst = Instance::from_config(&cfg, 0);
    let mut patterns = Vec::new();
    for scheme in schemes {
        let result = run_baseline_on(scheme, &cfg, &inst, 0, &opts)?;
        let gain_db = beampattern_sweep(&result.positions, &result.beamformer.w, inst.wavelength, &radians)
            .into_iter()
            .map(|g| to_db(g / inst.power))
            .collect();
        patterns.push(Beampattern {
            scheme,
            theta_deg: theta_deg.clone(),
            gain_db,
            result,
        });
    }
    create_dir(&flags.out)?;
    let rows = patterns.iter().flat_map(|p| {
        p.theta_deg
            .iter()
            .zip(&p.gain_db)
            .map(move |(t, g)| [p.scheme.cli_name().to_string(), t.to_string(), g.to_string()])
    });
    write_csv(&flags.out.join("beampattern.csv"), &["scheme", "theta_deg", "gain_db"], rows)?;
    for p in &patterns {
        let path = flags.out.join(format!("beampattern_{}.svg", p.scheme.cli_name()));
        let svg = line_plot_svg(&p.theta_deg, &p.gain_db, &format!("{} beampattern", p.scheme));
        fs::write(&path, svg).map_err(io_err(&path))?;
    }
    for p in &patterns {
        println!("scheme={} gain_db={:.4} status={}", p.scheme, p.result.gain_db, p.result.verdict.as_str());
    }
    match patterns.iter().find_map(|p| verdict_error(p.scheme, &p.result)) {
        Some(e) => Err(e),
        None => Ok(patterns),
    }
}

/// Lowest gain drawn in beampattern plots, dB.
const PLOT_FLOOR_DB: f64 = -40.0;

/// Single-series line plot with labeled axes.
pub fn line_plot_svg(x: &[f64], y: &[f64], title: &str) -> String {
    let (w, h, m) = (720.0, 400.0, 50.0);
    let finite = |v: &f64| v.is_finite();
    let x0 = x.iter().copied().filter(finite).fold(f64::INFINITY, f64::min);
    let x1 = x.iter().copied().filter(finite).fold(f64::NEG_INFINITY, f64::max);
    let clip = |v: f64| if v.is_finite() { v.max(PLOT_FLOOR_DB) } else { PLOT_FLOOR_DB };
    let y0 = y.iter().map(|&v| clip(v)).fold(f64::INFINITY, f64::min);
    let y1 = y.iter().map(|&v| clip(v)).fold(f64::NEG_INFINITY, f64::max);
    let (y0, y1) = if y1 > y0 { (y0, y1) } else { (y0 - 1.0, y0 + 1.0) };
    let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };
    let px = |v: f64| m + (v - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |v: f64| h - m - (clip(v) - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{title}</text>"#, w / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">angle (deg)</text>"#,
        w / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">gain (dB)</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (val, anchor_x, anchor_y, anchor) in [
        (x0, px(x0), h - m + 16.0, "middle"),
        (x1, px(x1), h - m + 16.0, "middle"),
    ] {
        let _ = writeln!(s, r#"<text x="{anchor_x}" y="{anchor_y}" text-anchor="{anchor}" font-size="11">{val}</text>"#);
    }
    for val in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{:.1}</text>"#,
            m - 4.0,
            py(val) + 4.0,
            val
        );
    }
    let pts: Vec<String> = x
        .iter()
        .zip(y)
        .filter(|(a, _)| a.is_finite())
        .map(|(&a, &b)| format!("{:.2},{:.2}", px(a), py(b)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        pts.join(" ")
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(realization: u64, scheme: BaselineKind, gain: f64, ok: bool) -> RunRow {
        RunRow {
            realization,
            scheme,
            sweep_value: 10.0,
            gain_db: gain,
            min_sinr_slack_db: 0.5,
            violation: 0.0,
            outer_iters: 0,
            inner_iters_total: 0,
            wall_ms: 1.0,
            status: if ok { "ok" } else { "infeasible" }.into(),
        }
    }

    #[test]
    fn pairwise_exclusion_drops_whole_realizations() {
        use BaselineKind::*;
        let rows = vec![
            row(0, PddJapb, 5.0, true),
            row(0, FixedUla, 3.0, true),
            row(1, PddJapb, 7.0, true),
            row(1, FixedUla, f64::NEG_INFINITY, false),
            row(2, PddJapb, 6.0, true),
            row(2, FixedUla, 2.0, true),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].scheme, s[0].runs, s[0].feasible, s[0].paired), (PddJapb, 3, 3, 2));
        assert_eq!(s[0].mean_gain_db, 5.5);
        assert_eq!((s[1].feasible, s[1].paired), (2, 2));
        assert_eq!(s[1].mean_gain_db, 2.5);
        assert!((s[1].std_gain_db - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_run_summary_equals_run() {
        let s = summarize(&[row(0, BaselineKind::FixedUla, 4.25, true)]);
        assert_eq!(s[0].mean_gain_db, 4.25);
        assert_eq!(s[0].std_gain_db, 0.0);
        assert_eq!(s[0].paired, 1);
    }

    #[test]
    fn campaign_keys_parse_and_validate() {
        let spec = CampaignSpec::from_toml_str(
            "n_antennas = 4\nsweep = \"n_antennas\"\nsweep_values = [4, 6]\nschemes = [\"fa\", \"bound\"]\nrealizations = 3\n",
            PathBuf::from("x"),
        )
        .unwrap();
        let pts = spec.points().unwrap();
        assert_eq!(pts.iter().map(|p| p.config.num_antennas).collect::<Vec<_>>(), vec![4, 6]);
        assert_eq!(spec.schemes, vec![BaselineKind::FixedUla, BaselineKind::UpperBound]);
        assert!(CampaignSpec::from_toml_str("realizations = 0\n", PathBuf::new()).is_err());
        assert!(CampaignSpec::from_toml_str("schemes = [\"sca\"]\n", PathBuf::new()).is_err());
        let too_many = CampaignSpec::from_toml_str("sweep = \"n_antennas\"\nsweep_values = [400]\n", PathBuf::new());
        assert_eq!(too_many.unwrap_err().exit_code(), 1);
    }

    #[test]
    fn grid_has_endpoints_and_step() {
        let pts = AngleGrid::default().points().unwrap();
        assert_eq!(pts.len(), 721);
        assert_eq!((pts[0], pts[720]), (-90.0, 90.0));
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
        let odd = AngleGrid { min_deg: 0.0, max_deg: 1.0, step_deg: 0.3 }.points().unwrap();
        assert_eq!(*odd.last().unwrap(), 1.0);
    }

    #[test]
    fn svg_is_well_formed_with_infinite_values() {
        let s = line_plot_svg(&[-1.0, 0.0, 1.0], &[f64::NEG_INFINITY, 3.0, 1.0], "t");
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(!s.contains("NaN") && !s.contains("inf"));
    }
}
