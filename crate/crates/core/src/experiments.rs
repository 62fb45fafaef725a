//! Reproduction harness. Each experiment writes deterministic CSV artifacts
//! and a JSON summary that compares computed values with the embedded
//! reference targets (`data/targets.json`).

use crate::conditioning::{
    casorati_invertibility, is_blow_up, linspace, precision_bits_from_env, perturbation_blocks_difference, perturbation_width, root_census, AssociatedPolynomial,
    CasoratiOutcome, ConditioningError, Family, FamilyPencil, Location,
};
use crate::problems::{
    front_positions, interface_problem, interface_pulse, probe_l1, PeriodicDatum, Smooth1d, StandingWave, TwoLayer2d,
};
use crate::spacetime::{energy_series, error_norms, fourier_phase_error, solve_space_time, ErrorNorms, WaveError};
use crate::symbol::{cfl_constants, rho_tilde, symbol_vs_stencil, symbol_vs_stencil_conjugate_c, theta_grid, SymbolError, SymbolTable};
use crate::temporal::MatrixKind;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

pub const TARGETS_JSON: &str = include_str!("../data/targets.json");

pub const EXPERIMENTS: [&str; 12] = [
    "table1", "table2", "table3", "fig1-2", "example1", "example2", "example4", "example5", "example6", "example7",
    "symbols", "roots",
];

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("unknown experiment '{0}' (known: {list})", list = EXPERIMENTS.join(", "))]
    UnknownExperiment(String),
    #[error("unknown parameter '{key}' for {experiment} (accepted: {accepted})")]
    UnknownParameter { experiment: String, key: String, accepted: String },
    #[error("parameter '{key}': cannot read '{value}' as {kind}")]
    BadValue { key: String, value: String, kind: &'static str },
    #[error("malformed override '{0}' (expected key=value)")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("target data: {0}")]
    Targets(#[from] serde_json::Error),
    #[error("computation failed: {0}")]
    Compute(String),
}

macro_rules! compute_from {
    ($($t:ty),*) => {$(
        impl From<$t> for ExperimentError {
            fn from(e: $t) -> Self {
                ExperimentError::Compute(e.to_string())
            }
        }
    )*};
}
compute_from!(ConditioningError, WaveError, SymbolError);

type Result<T> = std::result::Result<T, ExperimentError>;

// ---------------------------------------------------------------- targets

/// Acceptance rule of one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Check {
    Rel { value: f64, tol: f64 },
    Abs { value: f64, tol: f64 },
    Exact { value: i64 },
    AtMost { value: f64 },
    AtLeast { value: f64 },
    Set { values: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Computed {
    Num(f64),
    Set(Vec<i64>),
}

impl Check {
    pub fn passes(&self, c: &Computed) -> bool {
        match (self, c) {
            (Check::Rel { value, tol }, Computed::Num(x)) => (x - value).abs() <= tol * value.abs(),
            (Check::Abs { value, tol }, Computed::Num(x)) => (x - value).abs() <= *tol,
            (Check::Exact { value }, Computed::Num(x)) => *x == *value as f64,
            (Check::AtMost { value }, Computed::Num(x)) => x <= value,
            (Check::AtLeast { value }, Computed::Num(x)) => x >= value,
            (Check::Set { values }, Computed::Set(s)) => {
                values.iter().collect::<BTreeSet<_>>() == s.iter().collect::<BTreeSet<_>>()
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Target {
    pub experiment: String,
    pub key: String,
    pub provenance: String,
    pub check: Check,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetFile {
    pub version: u32,
    pub targets: Vec<Target>,
}

pub fn targets() -> Result<TargetFile> {
    Ok(serde_json::from_str(TARGETS_JSON)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetStatus {
    Pass,
    Fail,
    NotComputed,
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetOutcome {
    pub key: String,
    pub provenance: String,
    pub check: Check,
    pub computed: Option<Computed>,
    pub status: TargetStatus,
}

// ---------------------------------------------------------------- parameters

#[derive(Debug, Clone, Copy)]
enum Kind {
    Int,
    Float,
    IntList,
    FloatList,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Int => "a nonnegative integer",
            Kind::Float => "a number",
            Kind::IntList => "a comma-separated list of integers",
            Kind::FloatList => "a comma-separated list of numbers",
        }
    }

    fn valid(self, v: &str) -> bool {
        let all = |f: fn(&str) -> bool| v.split(',').all(|x| f(x.trim()));
        match self {
            Kind::Int => v.trim().parse::<usize>().is_ok(),
            Kind::Float => v.trim().parse::<f64>().is_ok_and(f64::is_finite),
            Kind::IntList => all(|x| x.parse::<usize>().is_ok()),
            Kind::FloatList => all(|x| x.parse::<f64>().is_ok_and(f64::is_finite)),
        }
    }
}

type Schema = &'static [(&'static str, Kind, &'static str)];

const BUDGET_KEY: &str = "budget-s";

fn schema(id: &str) -> Option<Schema> {
    use Kind::*;
    Some(match id {
        "table1" => &[("p-list", IntList, "2,3,4"), ("eps", Float, "1e-13"), ("base", Int, "7")],
        "table2" | "table3" => &[("p-max", Int, "6")],
        "fig1-2" => &[
            ("p-list", IntList, "1,2,3,4,5,6"),
            ("n", Int, "1000"),
            ("steps", Int, "31"),
            ("low-range", FloatList, "2.5,5.5"),
            ("high-range", FloatList, "5.5,7"),
        ],
        "example1" => &[
            ("p-list", IntList, "1,2,3"),
            ("levels", IntList, "8,16,32,64"),
            ("horizon", Float, "10"),
            ("stab-nt", Int, "64"),
            ("stab-ratios", IntList, "1,2,4,8,16,32,64"),
        ],
        "example2" => &[
            ("p-list", IntList, "1,2,3"),
            ("k-list", IntList, "1,2,4,8,16"),
            ("dofs-per-wavelength", IntList, "8,16,32"),
            ("horizon", Float, "2"),
        ],
        "example4" => &[("p-list", IntList, "1,2,3"), ("levels", IntList, "128,256,512,1024"), ("horizon", Float, "1")],
        "example5" => &[
            ("p-list", IntList, "1,2"),
            ("n", Int, "64"),
            ("nt", Int, "640"),
            ("horizon", Float, "10"),
            ("samples", Int, "1000"),
        ],
        "example6" => &[
            ("p-list", IntList, "1,2,3"),
            ("nx", Int, "64"),
            ("nt", Int, "128"),
            ("horizon", Float, "2"),
            ("modes", Int, "4"),
            ("max-mode", Int, "16"),
            ("samples", Int, "40"),
        ],
        "example7" => &[
            ("p", Int, "2"),
            ("n", Int, "60"),
            ("nt", Int, "30"),
            ("horizon", Float, "1"),
            ("delta", Float, "0.05"),
            ("front-time", Float, "0.3"),
            ("front-fraction", Float, "0.1"),
            ("front-samples", Int, "1600"),
            ("probe-samples", Int, "40"),
            ("pre-arrival", Float, "0.4"),
            ("post-window", FloatList, "0.55,1"),
        ],
        "symbols" => &[("p-max", Int, "4"), ("grid", Int, "1024")],
        "roots" => &[("p-max", Int, "4"), ("g-rhos", FloatList, "0.1,1,10,100"), ("tol", Float, "1e-8")],
        _ => return None,
    })
}

/// Validated parameter values (defaults merged with overrides).
#[derive(Debug, Clone, Serialize)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    fn build(id: &str, overrides: &[(String, String)]) -> Result<Self> {
        let sch = schema(id).ok_or_else(|| ExperimentError::UnknownExperiment(id.to_string()))?;
        let mut map: BTreeMap<String, String> = sch.iter().map(|(k, _, d)| (k.to_string(), d.to_string())).collect();
        map.insert(BUDGET_KEY.into(), "600".into());
        for (k, v) in overrides {
            let kind = if k == BUDGET_KEY {
                Kind::Float
            } else {
                match sch.iter().find(|e| e.0 == k) {
                    Some(e) => e.1,
                    None => {
                        let mut acc: Vec<&str> = sch.iter().map(|e| e.0).collect();
                        acc.push(BUDGET_KEY);
                        return Err(ExperimentError::UnknownParameter {
                            experiment: id.into(),
                            key: k.clone(),
                            accepted: acc.join(", "),
                        });
                    }
                }
            };
            if !kind.valid(v) {
                return Err(ExperimentError::BadValue { key: k.clone(), value: v.clone(), kind: kind.name() });
            }
            map.insert(k.clone(), v.trim().to_string());
        }
        Ok(Params(map))
    }

    fn raw(&self, k: &str) -> &str {
        self.0.get(k).map(String::as_str).unwrap_or_else(|| panic!("parameter {k} not in schema"))
    }

    pub fn usize(&self, k: &str) -> usize {
        self.raw(k).parse().expect("validated")
    }

    pub fn f64(&self, k: &str) -> f64 {
        self.raw(k).parse().expect("validated")
    }

    pub fn usizes(&self, k: &str) -> Vec<usize> {
        self.raw(k).split(',').map(|x| x.trim().parse().expect("validated")).collect()
    }

    pub fn f64s(&self, k: &str) -> Vec<f64> {
        self.raw(k).split(',').map(|x| x.trim().parse().expect("validated")).collect()
    }

    fn pair(&self, k: &str) -> Result<(f64, f64)> {
        match self.f64s(k)[..] {
            [a, b] if a < b => Ok((a, b)),
            _ => Err(ExperimentError::BadValue { key: k.into(), value: self.raw(k).into(), kind: "an increasing pair lo,hi" }),
        }
    }
}

// ---------------------------------------------------------------- spec and bundle

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub id: String,
    pub overrides: Vec<(String, String)>,
    pub out_dir: Option<PathBuf>,
    /// Recorded in the summary; the built-in experiments are deterministic.
    pub seed: u64,
    pub jobs: usize,
}

impl ExperimentSpec {
    pub fn new(id: &str) -> Self {
        ExperimentSpec { id: id.to_string(), overrides: Vec::new(), out_dir: None, seed: 0, jobs: 1 }
    }

    pub fn set(mut self, key: &str, value: &str) -> Self {
        self.overrides.push((key.into(), value.into()));
        self
    }

    pub fn out(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out_dir = Some(dir.into());
        self
    }
}

pub fn parse_override(s: &str) -> Result<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(ExperimentError::Malformed(s.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Incomplete,
}

/// A CSV artifact; `#` lines carry provenance and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), comments: Vec::new(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

/// Fixed-format number for CSV cells.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.10e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "singular".into(), num)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub experiment: String,
    pub status: RunStatus,
    pub target_version: u32,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub elapsed_s: f64,
    pub artifacts: Vec<String>,
    pub values: BTreeMap<String, Computed>,
    pub targets: Vec<TargetOutcome>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl ReportBundle {
    pub fn failures(&self) -> Vec<&TargetOutcome> {
        self.targets.iter().filter(|t| t.status == TargetStatus::Fail).collect()
    }

    pub fn outcome(&self, key: &str) -> Option<&TargetOutcome> {
        self.targets.iter().find(|t| t.key == key)
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        match self.values.get(key) {
            Some(Computed::Num(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

// ---------------------------------------------------------------- context

struct Ctx {
    id: String,
    params: Params,
    jobs: usize,
    deadline: Instant,
    incomplete: AtomicBool,
    tables: Vec<Table>,
    values: BTreeMap<String, Computed>,
    notes: Vec<String>,
}

impl Ctx {
    fn expired(&self) -> bool {
        if Instant::now() >= self.deadline {
            self.incomplete.store(true, Ordering::Relaxed);
            true
        } else {
            false
        }
    }

    fn set(&mut self, key: String, x: f64) {
        self.values.insert(key, Computed::Num(x));
    }

    /// Runs `f` over the items on up to `jobs` threads, in input order.
    /// Items not started before the deadline are dropped.
    fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Result<Vec<(T, R)>>
    where
        T: Clone + Send + Sync,
        R: Send,
        F: Fn(&T) -> Result<R> + Sync,
    {
        let slots: Vec<Mutex<Option<Result<R>>>> = items.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let worker = || loop {
            let i = next.fetch_add(1, Ordering::Relaxed);
            if i >= items.len() || self.expired() {
                break;
            }
            let r = f(&items[i]);
            *slots[i].lock().unwrap() = Some(r);
        };
        let jobs = self.jobs.clamp(1, items.len().max(1));
        if jobs == 1 {
            worker();
        } else {
            std::thread::scope(|s| {
                for _ in 0..jobs {
                    s.spawn(worker);
                }
            });
        }
        let mut out = Vec::new();
        for (item, slot) in items.into_iter().zip(slots) {
            if let Some(r) = slot.into_inner().unwrap() {
                out.push((item, r?));
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------- driver

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ReportBundle> {
    let start = Instant::now();
    let params = Params::build(&spec.id, &spec.overrides)?;
    let budget = Duration::from_secs_f64(params.f64(BUDGET_KEY).max(0.0));
    let file = targets()?;
    let mut ctx = Ctx {
        id: spec.id.clone(),
        params,
        jobs: spec.jobs.max(1),
        deadline: start + budget,
        incomplete: AtomicBool::new(false),
        tables: Vec::new(),
        values: BTreeMap::new(),
        notes: Vec::new(),
    };
    match spec.id.as_str() {
        "table1" => table1(&mut ctx)?,
        "table2" | "table3" => cfl_tables(&mut ctx)?,
        "fig1-2" => fig12(&mut ctx)?,
        "example1" => example1(&mut ctx)?,
        "example2" => example2(&mut ctx)?,
        "example4" => example4(&mut ctx)?,
        "example5" => example5(&mut ctx)?,
        "example6" => example6(&mut ctx)?,
        "example7" => example7(&mut ctx)?,
        "symbols" => symbols(&mut ctx)?,
        "roots" => roots(&mut ctx)?,
        other => return Err(ExperimentError::UnknownExperiment(other.into())),
    }
    let status = if ctx.incomplete.load(Ordering::Relaxed) { RunStatus::Incomplete } else { RunStatus::Complete };
    if status == RunStatus::Incomplete {
        ctx.notes.push(format!("time budget of {} s exhausted; results are partial", budget.as_secs_f64()));
    }

    let mine: Vec<&Target> = file.targets.iter().filter(|t| t.experiment == spec.id).collect();
    let outcomes: Vec<TargetOutcome> = mine
        .iter()
        .map(|t| {
            let computed = ctx.values.get(&t.key).cloned();
            let status = match &computed {
                None => TargetStatus::NotComputed,
                Some(c) if t.check.passes(c) => TargetStatus::Pass,
                Some(_) => TargetStatus::Fail,
            };
            TargetOutcome { key: t.key.clone(), provenance: t.provenance.clone(), check: t.check.clone(), computed, status }
        })
        .collect();

    let mut provenance: Vec<&str> = Vec::new();
    for t in &mine {
        if !provenance.contains(&t.provenance.as_str()) {
            provenance.push(&t.provenance);
        }
    }
    let param_line =
        ctx.params.0.iter().filter(|(k, _)| *k != BUDGET_KEY).map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
    for t in &mut ctx.tables {
        let mut head = vec![format!("chronospline experiment {}", spec.id), format!("parameters: {param_line}")];
        head.extend(provenance.iter().map(|p| format!("reference: {p}")));
        head.append(&mut t.comments);
        t.comments = head;
    }

    let mut bundle = ReportBundle {
        experiment: spec.id.clone(),
        status,
        target_version: file.version,
        params: ctx.params.0.clone(),
        seed: spec.seed,
        elapsed_s: start.elapsed().as_secs_f64(),
        artifacts: ctx.tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
        values: ctx.values,
        targets: outcomes,
        notes: ctx.notes,
        tables: ctx.tables,
    };
    if let Some(dir) = &spec.out_dir {
        write_bundle(&mut bundle, dir)?;
    }
    Ok(bundle)
}

fn write_bundle(b: &mut ReportBundle, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for t in &b.tables {
        std::fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv())?;
    }
    b.artifacts.push("summary.json".into());
    std::fs::write(dir.join("summary.json"), b.summary_json())?;
    Ok(())
}

fn rate(coarse: (usize, f64), fine: (usize, f64)) -> f64 {
    (coarse.1 / fine.1).ln() / (fine.0 as f64 / coarse.0 as f64).ln()
}

// ---------------------------------------------------------------- experiments

fn table1(ctx: &mut Ctx) -> Result<()> {
    let eps = ctx.params.f64("eps");
    let base = ctx.params.usize("base");
    if !(2..=12).contains(&base) {
        return Err(ExperimentError::BadValue { key: "base".into(), value: base.to_string(), kind: "an integer in 2..=12" });
    }
    let ps = ctx.params.usizes("p-list");
    let bits = precision_bits_from_env();
    let res = ctx.map(ps, |&p| {
        let a = perturbation_width(p, (1 << base) + p - 1, eps)?;
        let b = perturbation_width(p, (1 << (base + 1)) + p - 1, eps)?;
        Ok((a, b, casorati_invertibility(p, bits)?))
    })?;
    let mut t = Table::new("table1", &["p", "n", "N1", "N2", "outside_max", "casorati"]);
    for (p, (a, b, cas)) in res {
        let verdict = match &cas.outcome {
            CasoratiOutcome::Invertible => "invertible".to_string(),
            CasoratiOutcome::Singular => "singular".to_string(),
            CasoratiOutcome::Indeterminate(why) => format!("indeterminate ({why})"),
        };
        ctx.set(format!("casorati_invertible[p={p}]"), f64::from(u8::from(cas.outcome == CasoratiOutcome::Invertible)));
        for (tag, w) in [("a", &a), ("b", &b)] {
            t.push(vec![p.to_string(), w.n.to_string(), w.n1.to_string(), w.n2.to_string(), num(w.outside_max), verdict.clone()]);
            ctx.set(format!("N1[p={p},n={tag}]"), w.n1 as f64);
            ctx.set(format!("N2[p={p},n={tag}]"), w.n2 as f64);
        }
        match perturbation_blocks_difference(&a, &b) {
            Some(d) => ctx.set(format!("block_diff[p={p}]"), d),
            None => ctx.notes.push(format!("p={p}: widths differ between the two sizes")),
        }
    }
    ctx.tables.push(t);
    Ok(())
}

fn cfl_tables(ctx: &mut Ctx) -> Result<()> {
    let pmax = ctx.params.usize("p-max");
    let res = ctx.map((1..=pmax).collect(), |&p| Ok(cfl_constants(p)?))?;
    let third = ctx.id == "table3";
    let mut t = if third {
        Table::new("table3", &["p", "theta_p", "rho_p", "E_p"])
    } else {
        Table::new("table2", &["p", "theta_max", "rho_tilde"])
    };
    for (p, k) in res {
        if third {
            t.push(vec![p.to_string(), num(k.theta_p), num(k.rho_p), num(k.e_p)]);
            ctx.set(format!("theta_p[p={p}]"), k.theta_p);
            ctx.set(format!("rho_p[p={p}]"), k.rho_p);
            ctx.set(format!("E_p[p={p}]"), k.e_p);
        } else {
            t.push(vec![p.to_string(), num(k.theta_max), num(k.rho_tilde)]);
            ctx.set(format!("theta_max[p={p}]"), k.theta_max);
            ctx.set(format!("rho_tilde[p={p}]"), k.rho_tilde);
        }
    }
    ctx.tables.push(t);
    Ok(())
}

fn fig12(ctx: &mut Ctx) -> Result<()> {
    let n = ctx.params.usize("n");
    let steps = ctx.params.usize("steps");
    let low = ctx.params.pair("low-range")?;
    let high = ctx.params.pair("high-range")?;
    let ps = ctx.params.usizes("p-list");
    let mut t = Table::new("fig1-2", &["p", "rho", "kappa1", "kappa1_half_rho"]);
    t.comments.push(format!("Schur complement C + rho M C^-1 M, n = {n}; kappa1 = 1-norm condition number"));
    for p in ps {
        let (lo, hi) = if p <= 3 { low } else { high };
        let pencil = FamilyPencil::new(Family::Wschur, p, n)?;
        let pts = ctx.map(linspace(lo, hi, steps), |&r| Ok((pencil.kappa(r)?, pencil.kappa(0.5 * r)?)))?;
        let mut onset = None;
        for (r, (k, kh)) in &pts {
            t.push(vec![p.to_string(), num(*r), opt(*k), opt(*kh)]);
            if onset.is_none() && is_blow_up(*k, *kh) {
                onset = Some(*r);
            }
        }
        match onset {
            Some(r) => ctx.set(format!("onset[p={p}]"), r),
            None => ctx.notes.push(format!("p={p}: no blow-up on [{lo}, {hi}]")),
        }
    }
    ctx.tables.push(t);
    Ok(())
}

fn norms_row(p: usize, nx: usize, nt: usize, e: &ErrorNorms) -> Vec<String> {
    vec![p.to_string(), nx.to_string(), nt.to_string(), num(e.u_l2), num(e.u_h1), num(e.u_ch1)]
}

fn example1(ctx: &mut Ctx) -> Result<()> {
    let horizon = ctx.params.f64("horizon");
    let levels = ctx.params.usizes("levels");
    let ps = ctx.params.usizes("p-list");
    let steps_per_unit = |n: usize| (horizon * n as f64).round() as usize;
    let pts: Vec<(usize, usize)> = ps.iter().flat_map(|&p| levels.iter().map(move |&n| (p, n))).collect();
    let conv = ctx.map(pts, |&(p, n)| {
        let nt = steps_per_unit(n);
        let (sys, sol) = solve_space_time(&Smooth1d::problem(p, n, nt, horizon))?;
        Ok((nt, error_norms(&sys, &sol, &Smooth1d)))
    })?;
    let mut t = Table::new("example1_convergence", &["p", "nx", "nt", "l2", "h1", "weighted_h1"]);
    t.comments.push("h_t = h_x refinement; rates from the two finest meshes".into());
    for &p in &ps {
        let mine: Vec<_> = conv.iter().filter(|((q, _), _)| *q == p).collect();
        for ((_, n), (nt, e)) in &mine {
            t.push(norms_row(p, *n, *nt, e));
        }
        if let [.., a, b] = &mine[..] {
            ctx.set(format!("rate_l2[p={p}]"), rate((a.0 .1, a.1 .1.u_l2), (b.0 .1, b.1 .1.u_l2)));
            ctx.set(format!("rate_h1[p={p}]"), rate((a.0 .1, a.1 .1.u_h1), (b.0 .1, b.1 .1.u_h1)));
        }
    }
    ctx.tables.push(t);

    let nt = ctx.params.usize("stab-nt");
    let ratios = ctx.params.usizes("stab-ratios");
    let pts: Vec<(usize, usize)> = ps.iter().flat_map(|&p| ratios.iter().map(move |&r| (p, r))).collect();
    let stab = ctx.map(pts, |&(p, r)| {
        let nx = ((nt * r) as f64 / horizon).round().max(2.0) as usize;
        let (sys, sol) = solve_space_time(&Smooth1d::problem(p, nx, nt, horizon))?;
        Ok((nx, error_norms(&sys, &sol, &Smooth1d)))
    })?;
    let mut t = Table::new("example1_stability", &["p", "ratio", "nx", "nt", "l2", "h1"]);
    t.comments.push(format!("fixed h_t = {}; h_x = h_t / ratio", horizon / nt as f64));
    for &p in &ps {
        let errs: Vec<f64> = stab.iter().filter(|((q, _), _)| *q == p).map(|(_, (_, e))| e.u_l2).collect();
        for ((_, r), (nx, e)) in stab.iter().filter(|((q, _), _)| *q == p) {
            t.push(vec![p.to_string(), r.to_string(), nx.to_string(), nt.to_string(), num(e.u_l2), num(e.u_h1)]);
        }
        if !errs.is_empty() {
            let (lo, hi) = errs.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &e| (a.min(e), b.max(e)));
            ctx.set(format!("stability_growth[p={p}]"), hi / lo);
        }
    }
    ctx.tables.push(t);
    Ok(())
}

fn example2(ctx: &mut Ctx) -> Result<()> {
    let horizon = ctx.params.f64("horizon");
    let ps = ctx.params.usizes("p-list");
    let ks = ctx.params.usizes("k-list");
    let dpw = ctx.params.usizes("dofs-per-wavelength");
    let mut pts = Vec::new();
    for &p in &ps {
        for &k in &ks {
            for &d in &dpw {
                pts.push((p, k, d));
            }
        }
    }
    let res = ctx.map(pts, |&(p, k, d)| {
        // #λ = k/2 wavelengths in (0,1)
        let nx = (d * k).div_ceil(2).max(2);
        let nt = (horizon * nx as f64).round() as usize;
        let w = StandingWave::oscillatory(k as u32);
        let (sys, sol) = solve_space_time(&w.problem(p, nx, nt, horizon))?;
        Ok((nx, nt, error_norms(&sys, &sol, &w)))
    })?;
    let mut t = Table::new("example2", &["p", "k", "dofs_per_wavelength", "nx", "nt", "l2", "h1"]);
    for ((p, k, d), (nx, nt, e)) in &res {
        t.push(vec![p.to_string(), k.to_string(), d.to_string(), nx.to_string(), nt.to_string(), num(e.u_l2), num(e.u_h1)]);
    }
    for &p in &ps {
        let mut spread = 0.0_f64;
        for &d in &dpw {
            let errs: Vec<f64> = res.iter().filter(|((q, _, dd), _)| *q == p && *dd == d).map(|(_, r)| r.2.u_l2).collect();
            if errs.len() > 1 {
                let (lo, hi) = errs.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &e| (a.min(e), b.max(e)));
                spread = spread.max(hi / lo);
            }
        }
        if spread > 0.0 {
            ctx.set(format!("k_spread_l2[p={p}]"), spread);
        }
    }
    ctx.tables.push(t);
    Ok(())
}

fn example4(ctx: &mut Ctx) -> Result<()> {
    let horizon = ctx.params.f64("horizon");
    let ps = ctx.params.usizes("p-list");
    let levels = ctx.params.usizes("levels");
    if let Some(&n) = levels.iter().find(|&&n| n % 2 != 0) {
        return Err(ExperimentError::BadValue { key: "levels".into(), value: n.to_string(), kind: "even interval counts" });
    }
    let exact = interface_pulse(horizon);
    let pts: Vec<(usize, usize)> = ps.iter().flat_map(|&p| levels.iter().map(move |&n| (p, n))).collect();
    let res = ctx.map(pts, |&(p, n)| {
        let nt = (horizon * n as f64).round() as usize;
        let (sys, sol) = solve_space_time(&interface_problem(p, n, horizon))?;
        Ok((nt, error_norms(&sys, &sol, &exact)))
    })?;
    let mut t = Table::new("example4", &["p", "nx", "nt", "l2", "h1", "weighted_h1"]);
    t.comments.push("C0 node at x = 1/2; rates from the two finest meshes".into());
    for &p in &ps {
        let mine: Vec<_> = res.iter().filter(|((q, _), _)| *q == p).collect();
        for ((_, n), (nt, e)) in &mine {
            t.push(norms_row(p, *n, *nt, e));
        }
        if let [.., a, b] = &mine[..] {
            ctx.set(format!("rate_l2[p={p}]"), rate((a.0 .1, a.1 .1.u_l2), (b.0 .1, b.1 .1.u_l2)));
            ctx.set(format!("rate_ch1[p={p}]"), rate((a.0 .1, a.1 .1.u_ch1), (b.0 .1, b.1 .1.u_ch1)));
        }
    }
    ctx.tables.push(t);
    Ok(())
}

fn example5(ctx: &mut Ctx) -> Result<()> {
    let (n, nt, horizon, samples) =
        (ctx.params.usize("n"), ctx.params.usize("nt"), ctx.params.f64("horizon"), ctx.params.usize("samples").max(1));
    let ps = ctx.params.usizes("p-list");
    let w = StandingWave::energy();
    let e0 = w.energy_value();
    let times: Vec<f64> = (0..=samples).map(|i| horizon * i as f64 / samples as f64).collect();
    let res = ctx.map(ps, |&p| {
        let (sys, sol) = solve_space_time(&w.problem(p, n, nt, horizon))?;
        Ok(energy_series(&sys, &sol, &times))
    })?;
    let mut t = Table::new("example5", &["p", "t", "energy", "relative_error"]);
    t.comments.push(format!("exact energy {}", num(e0)));
    for (p, series) in res {
        let mut worst = 0.0_f64;
        for (&ti, &e) in times.iter().zip(&series) {
            let rel = (e - e0).abs() / e0;
            worst = worst.max(rel);
            t.push(vec![p.to_string(), num(ti), num(e), num(rel)]);
        }
        ctx.set(format!("max_rel_energy_error[p={p}]"), worst);
    }
    ctx.tables.push(t);
    Ok(())
}

fn example6(ctx: &mut Ctx) -> Result<()> {
    let (nx, nt, horizon) = (ctx.params.usize("nx"), ctx.params.usize("nt"), ctx.params.f64("horizon"));
    let (count, max_mode, samples) =
        (ctx.params.usize("modes"), ctx.params.usize("max-mode") as i64, ctx.params.usize("samples").max(1));
    let ps = ctx.params.usizes("p-list");
    let data = [("tent", PeriodicDatum::Tent), ("bump", PeriodicDatum::Bump)];

    let mut coeffs = Table::new("example6_coefficients", &["datum", "n", "abs_c"]);
    let mut modes = BTreeMap::new();
    for (name, d) in data {
        for k in 1..=max_mode {
            coeffs.push(vec![name.into(), k.to_string(), num(d.coefficient(k).norm())]);
        }
        let m = d.largest_modes(count, max_mode);
        ctx.values.insert(format!("largest_modes[{name}]"), Computed::Set(m.iter().copied().collect()));
        modes.insert(name, m);
    }
    ctx.tables.push(coeffs);

    let times: Vec<f64> = (0..=samples).map(|i| horizon * i as f64 / samples as f64).collect();
    let pts: Vec<(&str, PeriodicDatum, usize)> =
        data.iter().flat_map(|&(name, d)| ps.iter().map(move |&p| (name, d, p))).collect();
    let res = ctx.map(pts, |&(name, d, p)| {
        let (sys, sol) = solve_space_time(&d.problem(p, nx, nt, horizon))?;
        let c0: Vec<_> = modes[name].iter().map(|&k| (k, d.coefficient(k))).collect();
        Ok(c0
            .iter()
            .map(|&(k, c)| {
                let exact = |t: f64| c * num_complex::Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 * t);
                (k, fourier_phase_error(&sys, &sol, exact, k, &times))
            })
            .collect::<Vec<_>>())
    })?;
    let mut t = Table::new("example6_phase", &["datum", "p", "mode", "t", "phase_error"]);
    for ((name, _, p), series) in res {
        for (k, errs) in series {
            for (&ti, e) in times.iter().zip(&errs) {
                t.push(vec![name.into(), p.to_string(), k.to_string(), num(ti), e.map_or_else(|| "gap".into(), num)]);
            }
            if let Some(Some(last)) = errs.last() {
                ctx.set(format!("final_phase_error[{name},p={p},n={k}]"), *last);
            }
        }
    }
    ctx.tables.push(t);
    Ok(())
}

fn example7(ctx: &mut Ctx) -> Result<()> {
    let cfg = TwoLayer2d {
        p: ctx.params.usize("p"),
        n: ctx.params.usize("n"),
        nt: ctx.params.usize("nt"),
        horizon: ctx.params.f64("horizon"),
        delta: ctx.params.f64("delta"),
    };
    let nodes = TwoLayer2d::INTERFACE * cfg.n as f64 / 2.0;
    if (nodes - nodes.round()).abs() > 1e-9 {
        return Err(ExperimentError::BadValue {
            key: "n".into(),
            value: cfg.n.to_string(),
            kind: "an interval count placing x = 1.2 on a mesh node (multiple of 5)",
        });
    }
    let solved = ctx.map(vec![true, false], |&layered| {
        Ok(solve_space_time(&if layered { cfg.problem() } else { cfg.homogeneous_problem() })?)
    })?;
    let [(_, lay), (_, hom)] = &solved[..] else {
        return Ok(());
    };
    let f = front_positions(
        (&lay.0, &lay.1),
        (&hom.0, &hom.1),
        ctx.params.f64("front-time"),
        ctx.params.f64("front-fraction"),
        ctx.params.usize("front-samples"),
    );
    let mut ft = Table::new("example7_fronts", &["t", "transmitted", "reflected", "ratio"]);
    ft.push(vec![num(ctx.params.f64("front-time")), num(f.transmitted), num(f.reflected), num(f.ratio())]);
    ctx.tables.push(ft);
    ctx.set("front_ratio".into(), f.ratio());

    let samples = ctx.params.usize("probe-samples").max(1);
    let pre = ctx.params.f64("pre-arrival");
    let (w0, w1) = ctx.params.pair("post-window")?;
    let mut pt = Table::new("example7_probe", &["t", "u_c"]);
    pt.comments.push(format!("L1 norm of U over the square of half-width {} centred at (1, 0.25)", TwoLayer2d::PROBE_HALF_WIDTH));
    let (mut before, mut after) = (0.0_f64, 0.0_f64);
    for i in 0..=samples {
        let t = cfg.horizon * i as f64 / samples as f64;
        let u = probe_l1(&lay.0, &lay.1, t);
        pt.push(vec![num(t), num(u)]);
        if t <= pre {
            before = before.max(u);
        }
        if (w0..=w1).contains(&t) {
            after = after.max(u);
        }
    }
    ctx.tables.push(pt);
    ctx.set("probe_post_arrival_max".into(), after);
    ctx.set("probe_pre_arrival_fraction".into(), if after > 0.0 { before / after } else { f64::INFINITY });
    Ok(())
}

fn symbols(ctx: &mut Ctx) -> Result<()> {
    let pmax = ctx.params.usize("p-max");
    let grid = theta_grid(ctx.params.usize("grid"));
    let kinds = [MatrixKind::B, MatrixKind::C, MatrixKind::M];
    let res = ctx.map((1..=pmax).collect(), |&p| {
        Ok((kinds.map(|k| symbol_vs_stencil(p, k, &grid)), symbol_vs_stencil_conjugate_c(p, MatrixKind::C, &grid)))
    })?;
    let mut t = Table::new("symbols", &["p", "theta", "B", "C", "M"]);
    for (p, (id, conj)) in res {
        let s = SymbolTable::new(p);
        for &th in &grid {
            t.push(vec![p.to_string(), num(th), num(s.b(th)), num(s.c(th)), num(s.m(th))]);
        }
        for (k, v) in ["B", "C", "M"].iter().zip(id) {
            ctx.set(format!("identity_{k}[p={p}]"), v);
        }
        ctx.set(format!("identity_C_conjugate[p={p}]"), conj);
    }
    ctx.tables.push(t);
    Ok(())
}

fn roots(ctx: &mut Ctx) -> Result<()> {
    let pmax = ctx.params.usize("p-max");
    let g_rhos = ctx.params.f64s("g-rhos");
    let tol = ctx.params.f64("tol");
    if !(tol > 0.0) {
        return Err(ExperimentError::BadValue { key: "tol".into(), value: tol.to_string(), kind: "a positive tolerance" });
    }
    let res = ctx.map((1..=pmax).collect(), |&p| {
        let k = cfl_constants(p)?;
        let mut cases: Vec<(String, String, Family, f64)> = vec![
            ("B".into(), format!("on[B,p={p}]"), Family::B, 0.0),
            ("C".into(), format!("on[C,p={p}]"), Family::C, 0.0),
            ("M".into(), format!("on[M,p={p}]"), Family::M, 0.0),
        ];
        for &r in &g_rhos {
            cases.push(("G".into(), format!("on[G,p={p},rho={r}]"), Family::G, r));
        }
        cases.push(("W".into(), format!("on[W_half,p={p}]"), Family::W, 0.5 * k.rho_p));
        cases.push(("W".into(), format!("on[W_twice_tilde,p={p}]"), Family::W, 2.0 * rho_tilde(p)?));
        let mut out = Vec::new();
        for (fam, key, f, rho) in cases {
            let q = AssociatedPolynomial::of_family(f, p, if f.uses_rho() { rho } else { 1.0 })?;
            out.push((fam, key, rho, root_census(&q, tol)?));
        }
        Ok(out)
    })?;
    let mut t = Table::new("roots", &["family", "p", "rho", "re", "im", "multiplicity", "location"]);
    for (p, cases) in res {
        for (fam, key, rho, c) in cases {
            for r in &c.roots {
                let loc = match r.location {
                    Location::Inside => "inside",
                    Location::On => "on",
                    Location::Outside => "outside",
                };
                t.push(vec![fam.clone(), p.to_string(), num(rho), num(r.re), num(r.im), r.multiplicity.to_string(), loc.into()]);
            }
            ctx.set(key, c.on as f64);
            if fam == "C" {
                ctx.set(format!("outside[C,p={p}]"), c.outside as f64);
            }
        }
    }
    ctx.tables.push(t);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_file_parses_and_keys_are_unique() {
        let f = targets().unwrap();
        assert_eq!(f.version, 1);
        let keys: BTreeSet<_> = f.targets.iter().map(|t| (&t.experiment, &t.key)).collect();
        assert_eq!(keys.len(), f.targets.len());
        for t in &f.targets {
            assert!(EXPERIMENTS.contains(&t.experiment.as_str()), "{}", t.experiment);
            assert!(!t.provenance.is_empty());
        }
    }

    #[test]
    fn checks() {
        assert!(Check::Rel { value: 2.0, tol: 1e-3 }.passes(&Computed::Num(2.001)));
        assert!(!Check::Rel { value: 2.0, tol: 1e-3 }.passes(&Computed::Num(2.01)));
        assert!(Check::Exact { value: 20 }.passes(&Computed::Num(20.0)));
        assert!(Check::Set { values: vec![3, 1, 2] }.passes(&Computed::Set(vec![1, 2, 3])));
        assert!(!Check::AtMost { value: 1.0 }.passes(&Computed::Set(vec![])));
        assert!(!Check::AtMost { value: 1.0 }.passes(&Computed::Num(f64::NAN)));
    }

    #[test]
    fn overrides_are_type_checked() {
        assert!(matches!(
            run_experiment(&ExperimentSpec::new("table3").set("p-max", "x")),
            Err(ExperimentError::BadValue { .. })
        ));
        assert!(matches!(
            run_experiment(&ExperimentSpec::new("table3").set("q", "1")),
            Err(ExperimentError::UnknownParameter { .. })
        ));
        assert!(matches!(run_experiment(&ExperimentSpec::new("table9")), Err(ExperimentError::UnknownExperiment(_))));
        assert!(parse_override("a=1").is_ok());
        assert!(parse_override("=1").is_err());
    }

    #[test]
    fn table3_small() {
        let b = run_experiment(&ExperimentSpec::new("table3").set("p-max", "3")).unwrap();
        assert_eq!(b.status, RunStatus::Complete);
        assert!(b.failures().is_empty(), "{:?}", b.failures());
        let done = b.targets.iter().filter(|t| t.status == TargetStatus::Pass).count();
        assert_eq!(done, 9);
        let csv = b.table("table3").unwrap().to_csv();
        assert!(csv.starts_with("# chronospline experiment table3"));
        assert!(csv.contains("reference: Table 3, p=2"));
    }

    #[test]
    fn zero_budget_is_incomplete() {
        let b = run_experiment(&ExperimentSpec::new("table2").set("budget-s", "0")).unwrap();
        assert_eq!(b.status, RunStatus::Incomplete);
        assert!(b.targets.iter().all(|t| t.status == TargetStatus::NotComputed));
    }

    #[test]
    fn parallel_map_keeps_order() {
        let a = run_experiment(&ExperimentSpec::new("table2").set("p-max", "4")).unwrap();
        let mut spec = ExperimentSpec::new("table2").set("p-max", "4");
        spec.jobs = 3;
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.tables, b.tables);
    }
}
