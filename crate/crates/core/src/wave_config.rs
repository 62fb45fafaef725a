//! Plain-text `key = value` description of a wave problem for the
//! `solve-wave` command.
//!
//! Either name a `preset` (example1, example2:K, example4, example5,
//! example6-tent, example6-bump, example7) and optionally override `p`,
//! `nx`, `nt`, `horizon`, or describe the box directly:
//!
//! ```text
//! dim = 2
//! domain = 0:2, 0:2
//! p = 2
//! nx = 20, 20
//! nt = 10
//! horizon = 1
//! bc.left = dirichlet0
//! bc.right = neumann
//! c = 1
//! c-regions = 1.2:2, 0:2 = 3
//! initial-u = gaussian:1,1,0.1
//! ```
//!
//! Faces are `bc.left`/`bc.right` (first axis) and `bc.bottom`/`bc.top`
//! (second axis), default `dirichlet0`. Initial data accept `zero`,
//! `gaussian:CENTER...,DELTA` and `sine:K` (product of sin(Kπx̂) over the
//! axes, x̂ the coordinate scaled to the unit box). `source` accepts `zero`
//! and `example1`. `exact` names a closed-form solution used for error
//! reporting (`example1`, `standing:K`, `example4`, `tent`, `bump`).

use crate::problems::{interface_problem, interface_pulse, PeriodicDatum, Smooth1d, StandingWave, TwoLayer2d};
use crate::spacetime::{ExactSolution, SpaceFn, SpaceTimeProblem};
use crate::spatial::{Axis, Bc, SpeedRegion, WaveSpeed};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config line {line}: {msg}")]
pub struct ConfigError {
    /// 0 when the problem is not tied to one line.
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { line, msg: msg.into() })
}

pub struct WaveConfig {
    pub problem: SpaceTimeProblem,
    pub exact: Option<Box<dyn ExactSolution + Send>>,
    /// Sampling intervals per axis and in time for the CSV export.
    pub samples: usize,
    pub time_samples: usize,
}

struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn take(&mut self, k: &str) -> Option<(usize, String)> {
        self.0.remove(k)
    }

    fn parse<T: std::str::FromStr>(&mut self, k: &str) -> Result<Option<T>, ConfigError> {
        match self.take(k) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).or_else(|_| err(line, format!("cannot read {k} = '{v}'"))),
        }
    }

    fn required<T: std::str::FromStr>(&mut self, k: &str) -> Result<T, ConfigError> {
        self.parse(k)?.map_or_else(|| err(0, format!("missing key '{k}'")), Ok)
    }
}

fn numbers(line: usize, s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().or_else(|_| err(line, format!("not a number: '{}'", x.trim()))))
        .collect()
}

fn ranges(line: usize, s: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    s.split(',')
        .map(|r| {
            let (a, b) = r.split_once(':').ok_or(ConfigError { line, msg: format!("expected lo:hi, got '{r}'") })?;
            let (a, b) = (numbers(line, a)?[0], numbers(line, b)?[0]);
            if a < b {
                Ok((a, b))
            } else {
                err(line, format!("empty range {a}:{b}"))
            }
        })
        .collect()
}

pub fn parse_wave_config(text: &str) -> Result<WaveConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(i + 1, format!("expected key = value, got '{line}'"));
        };
        // c-regions values contain '=' themselves
        if map.insert(k.trim().to_ascii_lowercase(), (i + 1, v.trim().to_string())).is_some() {
            return err(i + 1, format!("duplicate key '{}'", k.trim()));
        }
    }
    let mut e = Entries(map);
    let samples = e.parse("samples")?.unwrap_or(32);
    let time_samples = e.parse("time-samples")?.unwrap_or(10);
    let (mut problem, mut exact) = match e.take("preset") {
        Some((line, name)) => preset(&mut e, line, &name)?,
        None => (custom(&mut e)?, None),
    };
    if let Some((line, name)) = e.take("exact") {
        exact = Some(named_exact(line, &name, problem.horizon)?);
    }
    if let Some((line, _)) = e.0.values().next() {
        let keys: Vec<&String> = e.0.keys().collect();
        return err(*line, format!("unknown keys {keys:?}"));
    }
    if problem.time_intervals == 0 || problem.axes.iter().any(|a| a.intervals == 0) {
        return err(0, "interval counts must be positive");
    }
    if !(problem.horizon > 0.0) {
        return err(0, "horizon must be positive");
    }
    problem.axes.iter_mut().for_each(|a| a.c0_nodes.sort_unstable());
    Ok(WaveConfig { problem, exact, samples: samples.max(1), time_samples: time_samples.max(1) })
}

type Built = (SpaceTimeProblem, Option<Box<dyn ExactSolution + Send>>);

fn preset(e: &mut Entries, line: usize, name: &str) -> Result<Built, ConfigError> {
    let p: usize = e.parse("p")?.unwrap_or(2);
    let nx: Option<usize> = e.parse("nx")?;
    let nt: Option<usize> = e.parse("nt")?;
    let horizon: Option<f64> = e.parse("horizon")?;
    let (name, arg) = name.split_once(':').map_or((name, None), |(a, b)| (a, Some(b)));
    Ok(match name.trim() {
        "example1" => {
            let (n, t) = (nx.unwrap_or(16), horizon.unwrap_or(10.0));
            (Smooth1d::problem(p, n, nt.unwrap_or((t * n as f64) as usize), t), Some(Box::new(Smooth1d)))
        }
        "example2" => {
            let k: u32 = arg.unwrap_or("1").trim().parse().or_else(|_| err(line, "example2:K needs an integer K"))?;
            let (n, t) = (nx.unwrap_or(16), horizon.unwrap_or(2.0));
            let w = StandingWave::oscillatory(k);
            (w.problem(p, n, nt.unwrap_or((t * n as f64) as usize), t), Some(Box::new(w)))
        }
        "example4" => {
            let (n, t) = (nx.unwrap_or(64), horizon.unwrap_or(1.0));
            if n % 2 != 0 {
                return err(line, "example4 needs an even nx");
            }
            let mut pr = interface_problem(p, n, t);
            pr.time_intervals = nt.unwrap_or(pr.time_intervals);
            (pr, Some(Box::new(interface_pulse(t))))
        }
        "example5" => {
            let (n, t) = (nx.unwrap_or(64), horizon.unwrap_or(10.0));
            let w = StandingWave::energy();
            (w.problem(p, n, nt.unwrap_or((t * n as f64) as usize), t), Some(Box::new(w)))
        }
        "example6-tent" | "example6-bump" => {
            let d = if name.ends_with("tent") { PeriodicDatum::Tent } else { PeriodicDatum::Bump };
            let (n, t) = (nx.unwrap_or(64), horizon.unwrap_or(2.0));
            (d.problem(p, n, nt.unwrap_or((t * n as f64) as usize), t), Some(Box::new(d)))
        }
        "example7" => {
            let n = nx.unwrap_or(30);
            if n % 5 != 0 {
                return err(line, "example7 needs nx a multiple of 5 so that x = 1.2 is a mesh node");
            }
            let cfg = TwoLayer2d { p, n, nt: nt.unwrap_or(n / 2), horizon: horizon.unwrap_or(1.0), delta: 0.05 };
            (cfg.problem(), None)
        }
        other => return err(line, format!("unknown preset '{other}'")),
    })
}

fn custom(e: &mut Entries) -> Result<SpaceTimeProblem, ConfigError> {
    let dim: usize = e.required("dim")?;
    if !(1..=2).contains(&dim) {
        return err(0, format!("dim must be 1 or 2, got {dim}"));
    }
    let (dl, dom) = e.take("domain").ok_or(ConfigError { line: 0, msg: "missing key 'domain'".into() })?;
    let dom = ranges(dl, &dom)?;
    let p: usize = e.required("p")?;
    let (nl, nxs) = e.take("nx").ok_or(ConfigError { line: 0, msg: "missing key 'nx'".into() })?;
    let nxs: Vec<usize> = nxs
        .split(',')
        .map(|x| x.trim().parse().or_else(|_| err(nl, format!("bad interval count '{}'", x.trim()))))
        .collect::<Result<_, _>>()?;
    let nt: usize = e.required("nt")?;
    let horizon: f64 = e.required("horizon")?;
    if dom.len() != dim || !(nxs.len() == dim || nxs.len() == 1) {
        return err(dl, format!("domain and nx must list {dim} axes"));
    }
    let faces = [("bc.left", "bc.right"), ("bc.bottom", "bc.top")];
    let mut axes = Vec::new();
    for k in 0..dim {
        let mut bc = |key: &str| -> Result<Bc, ConfigError> {
            match e.take(key) {
                None => Ok(Bc::Dirichlet),
                Some((line, v)) => v.parse().or_else(|m: String| err(line, m)),
            }
        };
        let (lo, hi) = (bc(faces[k].0)?, bc(faces[k].1)?);
        let n = if nxs.len() == 1 { nxs[0] } else { nxs[k] };
        axes.push(Axis::new(p, n, dom[k].0, dom[k].1, lo, hi));
    }
    if let Some((line, v)) = e.take("c0-nodes") {
        for x in v.split(',') {
            let j: usize = x.trim().parse().or_else(|_| err(line, format!("bad node index '{}'", x.trim())))?;
            axes[0].c0_nodes.push(j);
        }
    }
    let mut speed = WaveSpeed::constant(e.parse("c")?.unwrap_or(1.0));
    if let Some((line, v)) = e.take("c-regions") {
        for region in v.split(';').filter(|r| !r.trim().is_empty()) {
            let (boxes, c) = region.rsplit_once('=').ok_or(ConfigError { line, msg: format!("expected box = c in '{region}'") })?;
            let r = ranges(line, boxes)?;
            if r.len() != dim {
                return err(line, format!("region '{region}' must list {dim} ranges"));
            }
            speed.regions.push(SpeedRegion {
                lo: r.iter().map(|x| x.0).collect(),
                hi: r.iter().map(|x| x.1).collect(),
                c: numbers(line, c)?[0],
            });
        }
    }
    if !(speed.default > 0.0) || speed.regions.iter().any(|r| !(r.c > 0.0)) {
        return err(0, "wave speeds must be positive");
    }
    let mut pr = SpaceTimeProblem::new(axes, speed, p, nt, horizon);
    pr.u0 = initial(e, "initial-u", &dom)?;
    pr.v0 = initial(e, "initial-v", &dom)?;
    if let Some((line, v)) = e.take("source") {
        match v.as_str() {
            "zero" => {}
            "example1" if dim == 1 => pr.source = Smooth1d::problem(p, 1, 1, horizon).source,
            other => return err(line, format!("unknown source '{other}'")),
        }
    }
    Ok(pr)
}

fn initial(e: &mut Entries, key: &str, dom: &[(f64, f64)]) -> Result<Option<SpaceFn>, ConfigError> {
    let Some((line, v)) = e.take(key) else {
        return Ok(None);
    };
    let (kind, args) = v.split_once(':').map_or((v.as_str(), ""), |(a, b)| (a, b));
    let dim = dom.len();
    match kind.trim() {
        "zero" => Ok(None),
        "gaussian" => {
            let a = numbers(line, args)?;
            if a.len() != dim + 1 || !(a[dim] > 0.0) {
                return err(line, format!("gaussian needs {dim} centre coordinates and a positive width"));
            }
            Ok(Some(Arc::new(move |x: &[f64]| {
                let r2: f64 = (0..dim).map(|k| (x[k] - a[k]).powi(2)).sum();
                (-r2 / (a[dim] * a[dim])).exp()
            })))
        }
        "sine" => {
            let k = numbers(line, args)?[0];
            let dom = dom.to_vec();
            Ok(Some(Arc::new(move |x: &[f64]| {
                dom.iter().enumerate().map(|(i, &(lo, hi))| (k * PI * (x[i] - lo) / (hi - lo)).sin()).product()
            })))
        }
        other => err(line, format!("unknown initial datum '{other}'")),
    }
}

fn named_exact(line: usize, name: &str, horizon: f64) -> Result<Box<dyn ExactSolution + Send>, ConfigError> {
    let (name, arg) = name.split_once(':').map_or((name, None), |(a, b)| (a, Some(b)));
    Ok(match name.trim() {
        "none" => return err(line, "omit the key instead of exact = none"),
        "example1" => Box::new(Smooth1d),
        "standing" => {
            let k: u32 = arg.unwrap_or("1").trim().parse().or_else(|_| err(line, "standing:K needs an integer K"))?;
            Box::new(StandingWave::oscillatory(k))
        }
        "example4" => Box::new(interface_pulse(horizon)),
        "tent" => Box::new(PeriodicDatum::Tent),
        "bump" => Box::new(PeriodicDatum::Bump),
        other => return err(line, format!("unknown exact solution '{other}'")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_with_overrides() {
        let c = parse_wave_config("preset = example1\np = 3\nnx = 8\nnt = 40 # comment\n").unwrap();
        assert_eq!(c.problem.time_degree, 3);
        assert_eq!(c.problem.axes[0].intervals, 8);
        assert_eq!(c.problem.time_intervals, 40);
        assert!(c.exact.is_some());
    }

    #[test]
    fn custom_two_d() {
        let text = "dim = 2\ndomain = 0:2, 0:1\np = 2\nnx = 10, 5\nnt = 4\nhorizon = 0.5\nbc.right = neumann\n\
                    bc.top = robin:2\nc-regions = 1:2, 0:1 = 3\ninitial-u = gaussian:1,0.5,0.2\n";
        let c = parse_wave_config(text).unwrap();
        let pr = &c.problem;
        assert_eq!(pr.axes.len(), 2);
        assert_eq!(pr.axes[0].upper, Bc::Neumann);
        assert_eq!(pr.axes[1].upper, Bc::Robin(2.0));
        assert_eq!(pr.speed.at(&[1.5, 0.5]), 3.0);
        assert_eq!(pr.speed.at(&[0.5, 0.5]), 1.0);
        assert!((pr.u0.as_ref().unwrap()(&[1.0, 0.5]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_wave_config("preset = example1\nfoo = 1\n").err().unwrap();
        assert_eq!(e.line, 2);
        let e = parse_wave_config("dim = 3\n").err().unwrap();
        assert!(e.msg.contains("dim"));
        let e = parse_wave_config("preset = example1\np = two\n").err().unwrap();
        assert_eq!(e.line, 2);
        assert!(parse_wave_config("preset = example7\nnx = 32\n").is_err());
        assert!(parse_wave_config("no equals sign\n").is_err());
    }
}
