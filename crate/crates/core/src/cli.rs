//! Command-line experiment runner.
//!
//! Every command reads an optional JSON config (missing fields take their
//! defaults), runs one experiment and writes a single table as CSV or JSON.
//! CSV files start with `#` comment lines carrying the tool version, the
//! command, the effective config, a JSON summary and one line per column.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::chaos_metrics::{chaos_profile, lemma_verifier, ChaosReport};
use crate::curie_weiss::{
    evolve_dense_capped, marginal_dense, marginal_fast_matrix, CWParams, KBodyIndex, DEFAULT_DENSE_CAP,
};
use crate::error::Error;
use crate::gibbs::{gibbs_chaos_check, minimize_free_energy, FreeEnergyReport, GibbsPath};
use crate::mean_field::{closed_form_cw, conjecture_probe, cw_pair_potential, integrate_with, IntegrateOptions, PairPotential};
use crate::qdense::ComplexMatrix;
use crate::states::{product_power_capped, validate, DensityMatrix, QubitState, QubitStateRecord};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "qchaos", version, about = "Mean-field quantum spin dynamics experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config file; omitted fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Overrides the config's hbar.
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// k-site marginal of the evolved n-site Curie-Weiss register on a time grid.
    Evolve,
    /// Mean-field trajectory: RK4 and/or closed form.
    Meanfield,
    /// Marginal-vs-product distances across n with a log-log slope.
    ChaosScan,
    /// Free-energy minimizer and canonical-state chaoticity.
    Gibbs,
    /// Dense finite-n probe for a general pair potential.
    ConjectureProbe,
    /// Weighted binomial sums against their limit.
    LemmaCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Meanfield => "meanfield",
            Command::ChaosScan => "chaos-scan",
            Command::Gibbs => "gibbs",
            Command::ConjectureProbe => "conjecture-probe",
            Command::LemmaCheck => "lemma-check",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Failure reported on stderr as `{"error": {...}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: &'static str,
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    fn config(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            exit_code: 2,
            message: message.into(),
        }
    }

    pub fn to_json(&self, command: Option<&str>) -> Value {
        json!({"error": {
            "code": self.code,
            "exit_code": self.exit_code,
            "command": command,
            "message": self.message,
        }})
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, exit_code) = match &e {
            Error::InvalidState(_) | Error::NotHermitian { .. } | Error::TraceNotOne { .. } | Error::NegativeEigenvalue { .. } => {
                ("invalid-state", 2)
            }
            Error::InvalidParams(_)
            | Error::DimensionMismatch(_)
            | Error::NotSquare { .. }
            | Error::InvalidLabel(_)
            | Error::NotSwapSymmetric { .. }
            | Error::InvalidPovm(_) => ("invalid-config", 2),
            Error::IntegrationValidity { .. } => ("integration-validity", 3),
            Error::NonConvergence { .. } => ("non-convergence", 3),
            Error::CapExceeded { .. } => ("resource-cap", 4),
        };
        Self {
            code,
            exit_code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn default_state() -> QubitStateRecord {
    QubitStateRecord {
        a: 0.7,
        d: 0.3,
        c_re: 0.2,
        c_im: 0.1,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub j: f64,
    pub h_field: f64,
    pub hbar: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            j: 1.0,
            h_field: 0.5,
            hbar: 1.0,
        }
    }
}

impl ModelConfig {
    fn params(&self, n: usize) -> CWParams {
        CWParams {
            j: self.j,
            h_field: self.h_field,
            hbar: self.hbar,
            n,
        }
    }

    fn checked(&self, n: usize) -> CliResult<CWParams> {
        let p = self.params(n);
        p.check()?;
        Ok(p)
    }
}

fn qubit(r: &QubitStateRecord) -> CliResult<QubitState> {
    Ok(QubitState::try_from(*r)?)
}

fn check_n_list(n_list: &[usize]) -> CliResult<()> {
    if n_list.iter().any(|&n| n == 0) {
        return Err(CliError::config("invalid-config", "n values must be at least 1"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::config("invalid-config", "n_list must be strictly ascending"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolvePath {
    Fast,
    Dense,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub model: ModelConfig,
    pub state: QubitStateRecord,
    pub n: usize,
    pub k: usize,
    pub t_grid: Vec<f64>,
    pub path: EvolvePath,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            state: default_state(),
            n: 8,
            k: 1,
            t_grid: vec![0.0, 0.7, 3.1],
            path: EvolvePath::Fast,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanfieldSolver {
    Both,
    Rk4,
    ClosedForm,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanfieldConfig {
    pub model: ModelConfig,
    pub state: QubitStateRecord,
    pub t_end: f64,
    pub dt: f64,
    pub store_every: usize,
    pub solver: MeanfieldSolver,
}

impl Default for MeanfieldConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            state: default_state(),
            t_end: 10.0,
            dt: 1e-3,
            store_every: 100,
            solver: MeanfieldSolver::Both,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChaosScanConfig {
    pub model: ModelConfig,
    pub state: QubitStateRecord,
    pub n_list: Vec<usize>,
    pub k: usize,
    pub t: f64,
}

impl Default for ChaosScanConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            state: default_state(),
            n_list: vec![100, 1000, 10_000, 100_000],
            k: 1,
            t: 1.0,
        }
    }
}

/// Real and imaginary parts as row-major nested arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixRecord {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixRecord {
    fn to_matrix(&self) -> CliResult<ComplexMatrix> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == rows && m.iter().all(|r| r.len() == cols);
        if rows == 0 || !shape_ok(&self.re) || self.im.as_ref().is_some_and(|im| !shape_ok(im)) {
            return Err(CliError::config("invalid-config", "matrix rows are ragged or empty"));
        }
        Ok(ComplexMatrix::from_fn(rows, cols, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            Complex64::new(self.re[i][j], im)
        }))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialConfig {
    /// `-2J Sz Sz - h (Sz 1 + 1 Sz)` from the model block.
    Cw,
    Zero { d: usize },
    Identity { d: usize, scale: f64 },
    /// Seeded by `--seed`.
    Random { d: usize },
    Matrix(MatrixRecord),
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self::Cw
    }
}

impl PotentialConfig {
    fn build(&self, model: &ModelConfig, seed: u64) -> CliResult<PairPotential> {
        let check_d = |d: usize| {
            if d == 0 {
                Err(CliError::config("invalid-config", "local dimension must be at least 1"))
            } else {
                Ok(d)
            }
        };
        Ok(match self {
            Self::Cw => cw_pair_potential(&model.checked(1)?),
            Self::Zero { d } => PairPotential::zero(check_d(*d)?),
            Self::Identity { d, scale } => PairPotential::identity(check_d(*d)?).scaled(*scale),
            Self::Random { d } => PairPotential::random(check_d(*d)?, &mut ChaCha8Rng::seed_from_u64(seed)),
            Self::Matrix(m) => PairPotential::new(m.to_matrix()?)?,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsConfig {
    pub model: ModelConfig,
    pub potential: PotentialConfig,
    pub n_list: Vec<usize>,
    pub k: usize,
    pub path: GibbsPath,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            potential: PotentialConfig::Cw,
            n_list: vec![4, 6, 8, 10, 12],
            k: 1,
            path: GibbsPath::Auto,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjectureProbeConfig {
    pub model: ModelConfig,
    pub potential: PotentialConfig,
    /// Qubit initial state, used when `d0` is absent.
    pub state: QubitStateRecord,
    pub d0: Option<MatrixRecord>,
    pub n_list: Vec<usize>,
    pub k: usize,
    pub t: f64,
    pub dt: f64,
}

impl Default for ConjectureProbeConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            potential: PotentialConfig::Cw,
            state: default_state(),
            d0: None,
            n_list: vec![2, 4, 6, 8],
            k: 1,
            t: 1.0,
            dt: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaCheckConfig {
    pub state: QubitStateRecord,
    pub x_labels: Vec<u8>,
    pub y_labels: Vec<u8>,
    pub thetas: Vec<f64>,
    pub n_list: Vec<usize>,
}

impl Default for LemmaCheckConfig {
    fn default() -> Self {
        Self {
            state: default_state(),
            x_labels: vec![1],
            y_labels: vec![2],
            thetas: vec![0.0, 0.5, 1.5],
            n_list: vec![100, 1000, 10_000],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => float_json(*x),
            Cell::Int(i) => json!(i),
            Cell::Empty => Value::Null,
        }
    }
}

fn float_json(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn opt(x: Option<f64>) -> Cell {
    x.map_or(Cell::Empty, Cell::Num)
}

/// One command's result table plus scalar summary.
#[derive(Clone, Debug)]
pub struct Output {
    pub command: &'static str,
    pub config: Value,
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Map<String, Value>,
}

impl Output {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("# qchaos {VERSION}\n"));
        s.push_str(&format!("# command: {}\n", self.command));
        s.push_str(&format!("# config: {}\n", self.config));
        if !self.summary.is_empty() {
            s.push_str(&format!("# summary: {}\n", Value::Object(self.summary.clone())));
        }
        for (name, desc) in &self.columns {
            s.push_str(&format!("# column {name}: {desc}\n"));
        }
        let header: Vec<&str> = self.columns.iter().map(|c| c.0).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for ((name, _), cell) in self.columns.iter().zip(row) {
                    m.insert((*name).to_string(), cell.json());
                }
                Value::Object(m)
            })
            .collect();
        let columns: Vec<Value> = self
            .columns
            .iter()
            .map(|(n, d)| json!({"name": n, "description": d}))
            .collect();
        let doc = json!({
            "tool": "qchaos",
            "version": VERSION,
            "command": self.command,
            "config": self.config,
            "summary": Value::Object(self.summary.clone()),
            "columns": columns,
            "records": records,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn echo<T: Serialize>(cfg: &T, seed: u64) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Value::Object(m) = &mut v {
        m.insert("seed".into(), json!(seed));
    }
    v
}

fn matrix_rows(m: &ComplexMatrix, lead: &[Cell]) -> Vec<Vec<Cell>> {
    let mut rows = Vec::with_capacity(m.rows() * m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let mut r = lead.to_vec();
            r.extend([Cell::Int(i as u64), Cell::Int(j as u64), Cell::Num(m[(i, j)].re), Cell::Num(m[(i, j)].im)]);
            rows.push(r);
        }
    }
    rows
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    let part = |f: fn(&Complex64) -> f64| -> Value {
        Value::Array(
            (0..m.rows())
                .map(|i| Value::Array((0..m.cols()).map(|j| float_json(f(&m[(i, j)]))).collect()))
                .collect(),
        )
    };
    json!({"re": part(|z| z.re), "im": part(|z| z.im)})
}

fn chaos_summary(r: &ChaosReport, summary: &mut Map<String, Value>) {
    summary.insert("fitted_slope".into(), r.fitted_slope.map_or(Value::Null, float_json));
    summary.insert("fit_r2".into(), r.fit_r2.map_or(Value::Null, float_json));
}

pub fn evolve(cfg: &EvolveConfig, seed: u64) -> CliResult<Output> {
    let q = qubit(&cfg.state)?;
    let p = cfg.model.checked(cfg.n)?;
    if cfg.k == 0 || cfg.k > cfg.n {
        return Err(CliError::config("invalid-config", format!("need 1 <= k <= n, got k = {}", cfg.k)));
    }
    if cfg.t_grid.iter().any(|t| !t.is_finite()) {
        return Err(CliError::config("invalid-config", "t_grid entries must be finite"));
    }
    if cfg.path == EvolvePath::Dense && cfg.n > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded {
            what: "dense sites",
            requested: cfg.n,
            cap: DEFAULT_DENSE_CAP,
        }
        .into());
    }
    let mut rows = Vec::new();
    for &t in &cfg.t_grid {
        let marginal = match cfg.path {
            EvolvePath::Fast => marginal_fast_matrix(&q, &p, cfg.k, t)?,
            EvolvePath::Dense => {
                let start = product_power_capped(&q.to_density(), cfg.n, 1 << DEFAULT_DENSE_CAP)?;
                let evolved = evolve_dense_capped(start, &p, t, DEFAULT_DENSE_CAP)?;
                marginal_dense(&evolved, cfg.k)?
            }
        };
        rows.extend(matrix_rows(marginal.matrix(), &[Cell::Num(t)]));
    }
    Ok(Output {
        command: "evolve",
        config: echo(cfg, seed),
        columns: vec![
            ("t", "evolution time"),
            ("row", "marginal row index, site 1 most significant, 0 = up"),
            ("col", "marginal column index"),
            ("re", "real part of the marginal entry"),
            ("im", "imaginary part of the marginal entry"),
        ],
        rows,
        summary: Map::new(),
    })
}

pub fn meanfield(cfg: &MeanfieldConfig, seed: u64) -> CliResult<Output> {
    let q = qubit(&cfg.state)?;
    let p = cfg.model.checked(1)?;
    let want_rk4 = cfg.solver != MeanfieldSolver::ClosedForm;
    let want_closed = cfg.solver != MeanfieldSolver::Rk4;
    let times: Vec<f64>;
    let mut rk4_states: Vec<DensityMatrix> = Vec::new();
    if want_rk4 {
        let opts = IntegrateOptions { store_every: cfg.store_every };
        let traj = integrate_with(&q.to_density(), &cw_pair_potential(&p), p.hbar, cfg.t_end, cfg.dt, &opts)?;
        times = traj.times;
        rk4_states = traj.states;
    } else {
        if !(cfg.dt > 0.0 && cfg.dt.is_finite() && cfg.t_end >= 0.0 && cfg.t_end.is_finite()) {
            return Err(CliError::config("invalid-config", "need dt > 0 and t_end >= 0"));
        }
        let stride = cfg.dt * cfg.store_every.max(1) as f64;
        let count = (cfg.t_end / stride - 1e-9).ceil().max(0.0) as usize;
        let mut ts: Vec<f64> = (0..count).map(|i| i as f64 * stride).collect();
        ts.push(cfg.t_end);
        times = ts;
    }
    let mut rows = Vec::with_capacity(times.len());
    let mut max_diff: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let mut row = vec![Cell::Num(t)];
        let rk = rk4_states.get(i).map(|s| {
            let m = s.matrix();
            (m[(0, 0)].re, m[(0, 1)])
        });
        let cf = want_closed.then(|| {
            let s = closed_form_cw(&q, &p, t);
            (s.a(), s.c())
        });
        for part in [rk, cf] {
            match part {
                Some((a, c)) => row.extend([Cell::Num(a), Cell::Num(c.re), Cell::Num(c.im)]),
                None => row.extend([Cell::Empty, Cell::Empty, Cell::Empty]),
            }
        }
        let diff = match (rk, cf) {
            (Some((a1, c1)), Some((a2, c2))) => {
                let d = (a1 - a2).abs().max((c1 - c2).norm());
                max_diff = max_diff.max(d);
                Cell::Num(d)
            }
            _ => Cell::Empty,
        };
        row.push(diff);
        rows.push(row);
    }
    let mut summary = Map::new();
    if want_rk4 && want_closed {
        summary.insert("max_abs_diff".into(), float_json(max_diff));
    }
    Ok(Output {
        command: "meanfield",
        config: echo(cfg, seed),
        columns: vec![
            ("t", "time"),
            ("rk4_a", "RK4 up population"),
            ("rk4_c_re", "RK4 coherence, real part"),
            ("rk4_c_im", "RK4 coherence, imaginary part"),
            ("closed_a", "closed-form up population"),
            ("closed_c_re", "closed-form coherence, real part"),
            ("closed_c_im", "closed-form coherence, imaginary part"),
            ("abs_diff", "max of |a| and |c| differences between the two solutions"),
        ],
        rows,
        summary,
    })
}

pub fn chaos_scan(cfg: &ChaosScanConfig, seed: u64) -> CliResult<Output> {
    let q = qubit(&cfg.state)?;
    let p = cfg.model.checked(1)?;
    check_n_list(&cfg.n_list)?;
    let report = chaos_profile(&q, &p, &cfg.n_list, cfg.k, cfg.t)?;
    let rows = report
        .entries
        .iter()
        .map(|e| {
            vec![
                Cell::Int(e.n as u64),
                Cell::Int(e.k as u64),
                Cell::Num(e.t),
                Cell::Num(e.trace_distance),
                opt(report.fitted_slope),
                opt(report.fit_r2),
            ]
        })
        .collect();
    let mut summary = Map::new();
    chaos_summary(&report, &mut summary);
    Ok(Output {
        command: "chaos-scan",
        config: echo(cfg, seed),
        columns: vec![
            ("n", "number of sites"),
            ("k", "marginal order"),
            ("t", "time"),
            ("trace_distance", "trace norm of marginal minus mean-field product"),
            ("fitted_slope", "log-log slope over the scan, empty below three usable points"),
            ("fit_r2", "coefficient of determination of the slope fit"),
        ],
        rows,
        summary,
    })
}

fn free_energy_summary(fe: &FreeEnergyReport, summary: &mut Map<String, Value>) {
    summary.insert("value".into(), float_json(fe.value));
    summary.insert("stationarity_residual".into(), float_json(fe.stationarity_residual));
    summary.insert("restarts_used".into(), json!(fe.restarts_used));
    summary.insert("distinct_minima".into(), json!(fe.distinct_minima.len()));
    summary.insert("minimizer".into(), matrix_json(fe.minimizer.matrix()));
}

pub fn gibbs(cfg: &GibbsConfig, seed: u64) -> CliResult<Output> {
    let v = cfg.potential.build(&cfg.model, seed)?;
    check_n_list(&cfg.n_list)?;
    let mut summary = Map::new();
    let mut rows = Vec::new();
    if cfg.n_list.is_empty() {
        let fe = minimize_free_energy(&v, v.local_dim(), seed)?;
        free_energy_summary(&fe, &mut summary);
    } else {
        if cfg.k == 0 || cfg.n_list.iter().any(|&n| n < cfg.k) {
            return Err(CliError::config("invalid-config", "need 1 <= k <= every n"));
        }
        let r = gibbs_chaos_check(&v, &cfg.n_list, cfg.k, seed, cfg.path)?;
        free_energy_summary(&r.free_energy, &mut summary);
        chaos_summary(&r.chaos, &mut summary);
        summary.insert("decreasing".into(), json!(r.decreasing));
        rows = r
            .chaos
            .entries
            .iter()
            .map(|e| vec![Cell::Int(e.n as u64), Cell::Int(e.k as u64), Cell::Num(e.trace_distance)])
            .collect();
    }
    Ok(Output {
        command: "gibbs",
        config: echo(cfg, seed),
        columns: vec![
            ("n", "number of sites"),
            ("k", "marginal order"),
            ("trace_distance", "trace norm of canonical marginal minus minimizer product"),
        ],
        rows,
        summary,
    })
}

pub fn conjecture(cfg: &ConjectureProbeConfig, seed: u64) -> CliResult<Output> {
    let v = cfg.potential.build(&cfg.model, seed)?;
    check_n_list(&cfg.n_list)?;
    let d0 = match &cfg.d0 {
        Some(m) => validate(&m.to_matrix()?)?,
        None => qubit(&cfg.state)?.to_density(),
    };
    if !(cfg.t.is_finite() && cfg.t >= 0.0) {
        return Err(CliError::config("invalid-config", "t must be finite and non-negative"));
    }
    let report = conjecture_probe(&d0, &v, cfg.model.hbar, &cfg.n_list, cfg.k, cfg.t, cfg.dt)?;
    let rows = report
        .entries
        .iter()
        .map(|e| vec![Cell::Int(e.n as u64), Cell::Int(e.k as u64), Cell::Num(e.t), Cell::Num(e.trace_distance)])
        .collect();
    let mut summary = Map::new();
    chaos_summary(&report, &mut summary);
    Ok(Output {
        command: "conjecture-probe",
        config: echo(cfg, seed),
        columns: vec![
            ("n", "number of sites"),
            ("k", "marginal order"),
            ("t", "time"),
            ("trace_distance", "trace norm of evolved marginal minus mean-field product"),
        ],
        rows,
        summary,
    })
}

pub fn lemma_check(cfg: &LemmaCheckConfig, seed: u64) -> CliResult<Output> {
    let q = qubit(&cfg.state)?;
    check_n_list(&cfg.n_list)?;
    if cfg.n_list.is_empty() {
        return Err(CliError::config("invalid-config", "n_list is empty"));
    }
    let idx = KBodyIndex::from_labels(&cfg.x_labels, &cfg.y_labels)?;
    let report = lemma_verifier(&q, &idx, &cfg.thetas, &cfg.n_list)?;
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                Cell::Int(r.n as u64),
                Cell::Num(r.theta),
                Cell::Num(r.sum.re),
                Cell::Num(r.sum.im),
                Cell::Num(r.target.re),
                Cell::Num(r.target.im),
                Cell::Num(r.error),
            ]
        })
        .collect();
    let mut summary = Map::new();
    summary.insert("c_re".into(), float_json(report.c.re));
    summary.insert("c_im".into(), float_json(report.c.im));
    Ok(Output {
        command: "lemma-check",
        config: echo(cfg, seed),
        columns: vec![
            ("n", "number of spectator sites"),
            ("theta", "angle of the test function exp(i theta (2s - 1))"),
            ("sum_re", "weighted sum, real part"),
            ("sum_im", "weighted sum, imaginary part"),
            ("target_re", "limit c G(a), real part"),
            ("target_im", "limit c G(a), imaginary part"),
            ("error", "absolute difference"),
        ],
        rows,
        summary,
    })
}

fn load<T: Default + for<'de> Deserialize<'de>>(path: Option<&PathBuf>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("config-io", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config("config-parse", format!("{}: {e}", path.display())))
}

fn with_hbar(model: &mut ModelConfig, hbar: Option<f64>) {
    if let Some(h) = hbar {
        model.hbar = h;
    }
}

/// Parses the config for `cli.command`, applies flag overrides and runs it.
pub fn execute(cli: &Cli) -> CliResult<Output> {
    let path = cli.config.as_ref();
    let seed = cli.seed;
    match cli.command {
        Command::Evolve => {
            let mut c: EvolveConfig = load(path)?;
            with_hbar(&mut c.model, cli.hbar);
            evolve(&c, seed)
        }
        Command::Meanfield => {
            let mut c: MeanfieldConfig = load(path)?;
            with_hbar(&mut c.model, cli.hbar);
            meanfield(&c, seed)
        }
        Command::ChaosScan => {
            let mut c: ChaosScanConfig = load(path)?;
            with_hbar(&mut c.model, cli.hbar);
            chaos_scan(&c, seed)
        }
        Command::Gibbs => {
            let mut c: GibbsConfig = load(path)?;
            with_hbar(&mut c.model, cli.hbar);
            gibbs(&c, seed)
        }
        Command::ConjectureProbe => {
            let mut c: ConjectureProbeConfig = load(path)?;
            with_hbar(&mut c.model, cli.hbar);
            conjecture(&c, seed)
        }
        Command::LemmaCheck => lemma_check(&load(path)?, seed),
    }
}

/// Full entry point; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // Fails harmlessly if a global pool already exists in this process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let command = cli.command.name();
    let result = execute(&cli).and_then(|out| {
        let text = out.render(cli.format);
        match &cli.out {
            Some(p) => std::fs::write(p, text).map_err(|e| CliError {
                code: "output-io",
                exit_code: 2,
                message: format!("{}: {e}", p.display()),
            }),
            None => stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError { code: "output-io", exit_code: 2, message: e.to_string() }),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json(Some(command)));
            e.exit_code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_configs_round_trip() {
        let c: EvolveConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c.n, 8);
        let back: EvolveConfig = serde_json::from_value(serde_json::to_value(&c).unwrap()).unwrap();
        assert_eq!(back.t_grid, c.t_grid);
        let g: GibbsConfig = serde_json::from_str(r#"{"potential": {"kind": "zero", "d": 2}, "path": "fast"}"#).unwrap();
        assert!(matches!(g.potential, PotentialConfig::Zero { d: 2 }));
        assert!(serde_json::from_str::<EvolveConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn csv_float_format_and_empty_cells() {
        assert_eq!(Cell::Num(0.1).csv(), "1.0000000000000001e-1");
        assert_eq!(Cell::Empty.csv(), "");
        assert_eq!(Cell::Int(12).csv(), "12");
        let x: f64 = Cell::Num(std::f64::consts::PI).csv().parse().unwrap();
        assert_eq!(x, std::f64::consts::PI);
    }

    #[test]
    fn error_codes() {
        let e: CliError = Error::InvalidState("a".into()).into();
        assert_eq!((e.code, e.exit_code), ("invalid-state", 2));
        let e: CliError = Error::IntegrationValidity { step: 3, reason: "x".into() }.into();
        assert_eq!(e.exit_code, 3);
        let e: CliError = Error::CapExceeded { what: "w", requested: 2, cap: 1 }.into();
        assert_eq!(e.exit_code, 4);
    }

    #[test]
    fn evolve_at_time_zero_is_product_marginal() {
        let cfg = EvolveConfig { t_grid: vec![0.0], k: 2, ..Default::default() };
        let out = evolve(&cfg, 0).unwrap();
        let q = qubit(&cfg.state).unwrap().to_matrix();
        let prod = crate::qdense::kron(&q, &q);
        for row in &out.rows {
            let (Cell::Int(i), Cell::Int(j), Cell::Num(re), Cell::Num(im)) = (&row[1], &row[2], &row[3], &row[4]) else {
                panic!("row shape");
            };
            let z = prod[(*i as usize, *j as usize)];
            assert!((z.re - re).abs() < 1e-15 && (z.im - im).abs() < 1e-15);
        }
    }

    #[test]
    fn meanfield_closed_form_only_has_empty_rk4_columns() {
        let cfg = MeanfieldConfig { t_end: 1.0, dt: 0.1, store_every: 2, solver: MeanfieldSolver::ClosedForm, ..Default::default() };
        let out = meanfield(&cfg, 0).unwrap();
        assert_eq!(out.rows.first().unwrap()[1], Cell::Empty);
        assert_eq!(out.rows.last().unwrap()[0], Cell::Num(1.0));
        assert_eq!(out.rows.len(), 6);
    }
}
