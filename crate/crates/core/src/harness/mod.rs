//! Experiment orchestration: specs, dispatch, records, recipes and plots.
//!
//! [`run`] validates a spec completely before any work starts, so a bad key
//! or value is an `Err`; once running, each task succeeds or fails on its own
//! and failures are kept in the record.

pub mod csvio;
pub mod plot;
pub mod recipes;
pub mod spec;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::dump::{write_header, write_values, DumpHeader};
use crate::field::{FieldSampler, SpectralSampler};
use crate::greens::{green, GreenMethod};
use crate::lattice::{LatticeBox, Point};
use crate::perc::{
    crossing_curve, crossing_levels, estimate_connectivity, estimate_crossing, estimate_plane_crossing, fit_decay,
    hstar_from_runs, FieldModel, Margin,
};
use crate::renorm::{
    certify_from_seed, p0_monte_carlo, p0_upper_bound, slab_pipeline, ConstantsLedger,
    RenormConfig, SeedSource,
};
use crate::rng::{experiment, StreamKey};
use csvio::{read_rows, write_rows, CurveRow};
use plot::{svg_plot, Line, Series};

pub use recipes::{recipe, RECIPES};
pub use spec::ExperimentSpec;

pub const SCHEMA_VERSION: u32 = 1;
/// Default output directory when a spec names none.
pub const OUT_DIR_ENV: &str = "GFFPERC_OUT_DIR";

pub fn out_dir(spec: &ExperimentSpec) -> PathBuf {
    spec.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("gffperc-out"))
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    /// Field dump bytes; the JSON carries their hash.
    #[serde(skip)]
    pub binary: Option<Vec<u8>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub spec_hash: String,
    pub spec: ExperimentSpec,
    pub software_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub tasks: Vec<TaskResult>,
    #[serde(skip)]
    pub plot: Option<String>,
}

impl ResultRecord {
    pub fn ok(&self) -> bool {
        self.tasks.iter().all(|t| t.ok)
    }

    /// The numeric payload: task outputs only, no timestamps.
    pub fn payload(&self) -> String {
        serde_json::to_string(&self.tasks).expect("task results serialize")
    }

    /// Appends the record to `<dir>/<name>.records.jsonl` and writes CSV
    /// tables, the plot and field dumps next to it. Returns written paths.
    pub fn persist(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = sanitize(&self.spec.name);
        let log = dir.join(format!("{stem}.records.jsonl"));
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&log)?;
        writeln!(f, "{}", serde_json::to_string(self)?)?;
        let mut paths = vec![log];
        for t in &self.tasks {
            if let Some(csv) = &t.csv {
                let p = dir.join(format!("{stem}-{}.csv", sanitize(&t.task)));
                std::fs::write(&p, csv)?;
                paths.push(p);
            }
            if let Some(bytes) = &t.binary {
                let p = match self.spec.param("dump") {
                    Some(path) => PathBuf::from(path),
                    None => dir.join(format!("{stem}-{}.bin", sanitize(&t.task))),
                };
                std::fs::write(&p, bytes)?;
                paths.push(p);
            }
        }
        if let Some(svg) = &self.plot {
            let p = dir.join(format!("{stem}.svg"));
            std::fs::write(&p, svg)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Default)]
struct Output {
    json: Option<Value>,
    csv: Option<String>,
    binary: Option<Vec<u8>>,
}

type Job<'a> = Box<dyn Fn() -> Result<Output> + Send + Sync + 'a>;

/// Validated parameters of one spec.
struct Params<'a> {
    spec: &'a ExperimentSpec,
}

impl<'a> Params<'a> {
    fn new(spec: &'a ExperimentSpec, allowed: &[&str]) -> Result<Self> {
        for k in spec.params.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Config(format!(
                    "unknown key `{k}` for command `{}`; allowed: {}",
                    spec.command,
                    allowed.join(", ")
                )));
            }
        }
        Ok(Params { spec })
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.spec.param(key)
    }

    fn get<T: FromStr>(&self, key: &str, default: Option<T>) -> Result<T> {
        match self.raw(key) {
            Some(v) => v.parse().map_err(|_| Error::Config(format!("cannot parse `{key}` = {v:?}"))),
            None => default.ok_or_else(|| Error::Config(format!("missing required key `{key}`"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str, default: Option<&str>) -> Result<Vec<T>> {
        let v = self.raw(key).or(default).ok_or_else(|| Error::Config(format!("missing required key `{key}`")))?;
        let out: Vec<T> = v
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| Error::Config(format!("cannot parse `{key}` = {v:?}"))))
            .collect::<Result<_>>()?;
        if out.is_empty() {
            return Err(Error::Config(format!("`{key}` is empty")));
        }
        Ok(out)
    }

    fn flag(&self, key: &str) -> Result<bool> {
        self.get(key, Some(false))
    }
}

/// `lo:hi:step` or a comma list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad level grid {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let grid = if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let (lo, hi, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || !(hi >= lo) || (hi - lo) / step > 1e6 {
            return Err(bad());
        }
        let count = ((hi - lo) / step + 1e-9).floor() as i64;
        // rounded so that 0.5 + 3 * 0.05 prints as 0.65
        (0..=count).map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9).collect()
    } else {
        text.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() || grid.iter().any(|h| !h.is_finite()) {
        return Err(bad());
    }
    Ok(grid)
}

fn parse_points(text: &str, d: usize) -> Result<Vec<Point>> {
    text.split(';')
        .map(|p| {
            let c: Vec<i64> = p
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| Error::Config(format!("bad point {p:?}"))))
                .collect::<Result<_>>()?;
            if c.len() != d {
                return Err(Error::Config(format!("point {p:?} does not have {d} coordinates")));
            }
            Ok(Point::new(c))
        })
        .collect()
}

fn versioned(mut v: Value) -> Value {
    if let Value::Object(m) = &mut v {
        m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    v
}

fn csv_output(rows: &[CurveRow]) -> Result<Output> {
    Ok(Output { csv: Some(write_rows(rows)?), ..Default::default() })
}

fn check_dim(d: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::Config(format!("dim = {d} must be at least 2")));
    }
    Ok(d)
}

fn plan<'a>(spec: &'a ExperimentSpec) -> Result<Vec<(String, Job<'a>)>> {
    let seed = spec.seed;
    let mut jobs: Vec<(String, Job<'a>)> = Vec::new();
    match spec.command.as_str() {
        "greens" => {
            let p = Params::new(spec, &["dim", "point", "tol", "method"])?;
            let d: usize = check_dim(p.get("dim", None)?)?;
            let points = parse_points(p.raw("point").unwrap_or(&vec!["0"; d].join(",")), d)?;
            let tol: f64 = p.get("tol", Some(1e-10))?;
            let method: GreenMethod = p.get("method", Some(GreenMethod::Quadrature))?;
            for x in points {
                let name = format!("g({})", x.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","));
                jobs.push((
                    name,
                    Box::new(move || {
                        let g = green(&x, tol, method)?;
                        let v = json!({"d": d, "point": x.coords(), "value": g.value, "error": g.error, "method": g.method});
                        Ok(Output { json: Some(versioned(v)), ..Default::default() })
                    }),
                ));
            }
        }
        "sample" => {
            let p = Params::new(spec, &["dim", "window", "margin", "n", "dump"])?;
            let d: usize = check_dim(p.get("dim", None)?)?;
            let mut extents: Vec<u64> = p.list("window", None)?;
            if extents.len() == 1 {
                extents = vec![extents[0]; d];
            }
            if extents.len() != d || extents.contains(&0) {
                return Err(Error::Config(format!("window needs 1 or {d} positive extents")));
            }
            let margin: u64 = p.get("margin", Some(*extents.iter().max().unwrap()))?;
            let n: u64 = p.get("n", Some(1))?;
            let upper = Point::new(extents.iter().map(|&e| e as i64 - 1).collect());
            let window = LatticeBox::new(Point::origin(d), upper)?;
            jobs.push((
                "sample".into(),
                Box::new(move || {
                    let sampler = SpectralSampler::new(window.enlarge(margin));
                    let key = StreamKey::new(seed, experiment::GFF_SAMPLE).child(margin);
                    let header = DumpHeader { extents: window.extents(), count: n, seed };
                    let mut bytes = Vec::new();
                    write_header(&mut bytes, &header)?;
                    for i in 0..n {
                        let f = sampler.sample(&key, i).restrict(&window)?;
                        write_values(&mut bytes, &f.values)?;
                    }
                    let digest = hex::encode(Sha256::digest(&bytes));
                    let v = json!({"d": d, "window": header.extents, "margin": margin, "count": n, "seed": seed,
                                   "bytes": bytes.len(), "sha256": digest});
                    Ok(Output { json: Some(versioned(v)), binary: Some(bytes), ..Default::default() })
                }),
            ));
        }
        "estimate" => {
            let p = Params::new(spec, &["dim", "L", "h", "h-grid", "n", "margin", "what", "plot"])?;
            let what = p.raw("what").unwrap_or("crossing");
            if what == "hstar" {
                return plan_hstar(&p, seed);
            }
            let d: usize = check_dim(p.get("dim", Some(3))?)?;
            let sizes: Vec<u64> = p.list("L", None)?;
            let n: u64 = p.get("n", None)?;
            let margin: Margin = p.get("margin", Some(Margin::Scaled(0.25)))?;
            let levels = match (p.raw("h"), p.raw("h-grid")) {
                (Some(_), Some(_)) => return Err(Error::Config("give either `h` or `h-grid`, not both".into())),
                (Some(h), None) => parse_grid(h)?,
                (None, Some(g)) => parse_grid(g)?,
                (None, None) => return Err(Error::Config("missing `h` or `h-grid`".into())),
            };
            p.flag("plot")?;
            match what {
                "crossing" | "connectivity" | "plane" => {}
                other => return Err(Error::Config(format!("unknown estimate target {other:?}"))),
            }
            if what == "plane" && d != 3 {
                return Err(Error::Config("plane crossing is defined for dim = 3".into()));
            }
            let what = what.to_string();
            for l in sizes {
                let levels = levels.clone();
                let what = what.clone();
                jobs.push((
                    format!("L{l}"),
                    Box::new(move || {
                        let ests = match what.as_str() {
                            "crossing" if levels.len() > 1 => {
                                crossing_curve(d, l, &levels, n, seed, FieldModel::Gff { margin })?
                            }
                            "crossing" => vec![estimate_crossing(d, l, levels[0], n, seed, margin)?],
                            "connectivity" => {
                                let x = Point::axis(d, 0, l as i64);
                                levels.iter().map(|&h| estimate_connectivity(d, &x, h, n, seed, margin)).collect::<Result<_>>()?
                            }
                            _ => levels.iter().map(|&h| estimate_plane_crossing(l, h, n, seed, margin)).collect::<Result<_>>()?,
                        };
                        let rows: Vec<CurveRow> = levels.iter().zip(&ests).map(|(&h, e)| CurveRow::new(d, l, h, e)).collect();
                        csv_output(&rows)
                    }),
                ));
            }
        }
        "hstar" => {
            let p = Params::new(spec, &["dim", "L", "h-grid", "n", "margin", "model", "plot"])?;
            return plan_hstar(&p, seed);
        }
        "decay" => {
            let p = Params::new(spec, &["dim", "L", "h", "n", "margin", "plot"])?;
            let d: usize = check_dim(p.get("dim", Some(3))?)?;
            let sizes: Vec<u64> = p.list("L", None)?;
            let levels = parse_grid(p.raw("h").ok_or_else(|| Error::Config("missing `h`".into()))?)?;
            let n: u64 = p.get("n", None)?;
            let margin: Margin = p.get("margin", Some(Margin::Scaled(0.25)))?;
            p.flag("plot")?;
            jobs.push((
                "decay".into(),
                Box::new(move || {
                    let floor = levels.iter().cloned().fold(f64::INFINITY, f64::min);
                    let mut rows = Vec::new();
                    for &l in &sizes {
                        let run = crossing_levels(d, l, n, seed, FieldModel::Gff { margin }, floor)?;
                        for &h in &levels {
                            rows.push(CurveRow::new(d, l, h, &run.estimate(h)?));
                        }
                    }
                    let mut fits = Vec::new();
                    for &h in &levels {
                        let curve: Vec<_> = rows
                            .iter()
                            .filter(|r| r.h == h)
                            .map(|r| (r.l as f64, crate::stats::McEstimate { value: r.estimate, se: r.se, n: r.n, seed, meta: vec![] }))
                            .collect();
                        let fit = match fit_decay(&curve) {
                            Ok(f) => serde_json::to_value(f)?,
                            Err(e) => json!({"error": e.to_string()}),
                        };
                        fits.push(json!({"h": h, "fit": fit}));
                    }
                    Ok(Output {
                        json: Some(versioned(json!({"d": d, "n": n, "seed": seed, "fits": fits}))),
                        csv: Some(write_rows(&rows)?),
                        ..Default::default()
                    })
                }),
            ));
        }
        "renorm" => {
            let p = Params::new(spec, &["dim", "L0", "l0", "h0", "nmax", "ledger", "p0", "p0-margin"])?;
            let d: usize = p.get("dim", Some(3))?;
            let big_l0: u64 = p.get("L0", Some(10))?;
            let l0: u64 = p.get("l0", Some(100))?;
            let h0: f64 = p.get("h0", None)?;
            let nmax: u32 = p.get("nmax", Some(40))?;
            let mut ledger = ConstantsLedger::defaults(d, big_l0, l0)?;
            if let Some(path) = p.raw("ledger") {
                ledger.merge_file(Path::new(path))?;
            }
            let cfg = RenormConfig::new(d, big_l0, l0, h0, ledger)?;
            let seed_kind = P0Choice::parse(p.raw("p0").unwrap_or("analytic"))?;
            let p0_margin: u64 = p.get("p0-margin", Some(3 * big_l0))?;
            jobs.push((
                "trace".into(),
                Box::new(move || {
                    let (p0, source, detail) = match seed_kind {
                        P0Choice::Analytic => match p0_upper_bound(&cfg) {
                            Ok(b) => (b.bound, SeedSource::Analytic, serde_json::to_value(&b)?),
                            // the trivial bound p0 ≤ 1 keeps the trace but cannot certify
                            Err(e @ Error::RegimeNotApplicable(_)) => {
                                (1.0, SeedSource::Analytic, json!({"error": e.to_string()}))
                            }
                            Err(e) => return Err(e),
                        },
                        P0Choice::MonteCarlo { n, seed } => {
                            let e = p0_monte_carlo(&cfg, p0_margin, n, seed)?;
                            (e.value, SeedSource::MonteCarlo { n, seed }, serde_json::to_value(&e)?)
                        }
                        P0Choice::Given(v) => (v, SeedSource::Given, json!({})),
                    };
                    let trace = certify_from_seed(&cfg, p0, source, nmax)?;
                    let v = json!({"trace": trace, "p0_detail": detail});
                    Ok(Output { json: Some(versioned(v)), ..Default::default() })
                }),
            ));
        }
        "slab-cert" => {
            let p = Params::new(spec, &["h0", "L0", "pcsite", "pc-L", "pc-n", "pc-grid", "empirical-n"])?;
            let h0: f64 = p.get("h0", None)?;
            let big_l0: u64 = p.get("L0", None)?;
            let pc = match p.raw("pcsite").unwrap_or("estimate") {
                "estimate" => None,
                v => Some(v.parse::<f64>().map_err(|_| Error::Config(format!("bad pcsite {v:?}")))?),
            };
            let pc_sizes: Vec<u64> = p.list("pc-L", Some("8,16,32"))?;
            let pc_n: u64 = p.get("pc-n", Some(400))?;
            let pc_grid = parse_grid(p.raw("pc-grid").unwrap_or("0.5:0.9:0.0025"))?;
            let emp_n: u64 = p.get("empirical-n", Some(0))?;
            jobs.push((
                "slab".into(),
                Box::new(move || {
                    let (p_site, pc_detail) = match pc {
                        Some(v) => (v, json!({"source": "given"})),
                        None => {
                            let runs = pc_sizes
                                .iter()
                                .map(|&l| crossing_levels(3, l, pc_n, seed, FieldModel::IidUniform, pc_grid[0]))
                                .collect::<Result<Vec<_>>>()?;
                            let est = hstar_from_runs(&runs, &pc_grid)?;
                            (est.tail_probability, json!({"source": "estimate", "estimate": est}))
                        }
                    };
                    let mut report = slab_pipeline(h0, big_l0, p_site)?;
                    if emp_n > 0 {
                        report.empirical_checks = Some(crate::renorm::slab::empirical_checks(h0, big_l0, emp_n, seed)?);
                    }
                    let v = json!({"report": report, "pc_site": pc_detail});
                    Ok(Output { json: Some(versioned(v)), ..Default::default() })
                }),
            ));
        }
        other => {
            return Err(Error::Config(format!(
                "unknown command {other:?}; known: greens, sample, estimate, hstar, decay, renorm, slab-cert"
            )))
        }
    }
    Ok(jobs)
}

fn plan_hstar<'a>(p: &Params<'a>, seed: u64) -> Result<Vec<(String, Job<'a>)>> {
    let d: usize = check_dim(p.get("dim", Some(3))?)?;
    let sizes: Vec<u64> = p.list("L", None)?;
    if sizes.len() < 3 {
        return Err(Error::Config("h* estimation needs at least 3 sizes".into()));
    }
    let mut ns: Vec<u64> = p.list("n", None)?;
    if ns.len() == 1 {
        ns = vec![ns[0]; sizes.len()];
    }
    if ns.len() != sizes.len() {
        return Err(Error::Config("`n` must have one entry or one per size".into()));
    }
    let grid = parse_grid(p.raw("h-grid").ok_or_else(|| Error::Config("missing `h-grid`".into()))?)?;
    if grid.len() < 2 {
        return Err(Error::Config("`h-grid` needs at least two levels".into()));
    }
    let model = match p.raw("model").unwrap_or("gff") {
        "gff" => FieldModel::Gff { margin: p.get("margin", Some(Margin::Scaled(0.25)))? },
        "iid" => FieldModel::IidUniform,
        other => return Err(Error::Config(format!("unknown model {other:?}"))),
    };
    p.flag("plot")?;
    let job: Job<'a> = Box::new(move || {
        let floor = grid[0].min(grid[grid.len() - 1]);
        let runs = sizes
            .iter()
            .zip(&ns)
            .map(|(&l, &n)| crossing_levels(d, l, n, seed, model, floor))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for run in &runs {
            for &h in &grid {
                rows.push(CurveRow::new(d, run.l, h, &run.estimate(h)?));
            }
        }
        let est = hstar_from_runs(&runs, &grid)?;
        Ok(Output { json: Some(versioned(serde_json::to_value(est)?)), csv: Some(write_rows(&rows)?), ..Default::default() })
    });
    Ok(vec![("hstar".into(), job)])
}

#[derive(Clone, Copy, Debug)]
enum P0Choice {
    Analytic,
    MonteCarlo { n: u64, seed: u64 },
    Given(f64),
}

impl P0Choice {
    /// `analytic`, `mc:<n>:<seed>` or a probability.
    fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad p0 {s:?}; use analytic, mc:<n>:<seed> or a number"));
        if s == "analytic" {
            return Ok(P0Choice::Analytic);
        }
        if let Some(rest) = s.strip_prefix("mc:") {
            let (n, seed) = rest.split_once(':').ok_or_else(bad)?;
            return Ok(P0Choice::MonteCarlo { n: n.parse().map_err(|_| bad())?, seed: seed.parse().map_err(|_| bad())? });
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        if !(0.0..=1.0).contains(&v) {
            return Err(bad());
        }
        Ok(P0Choice::Given(v))
    }
}

fn plot_for(spec: &ExperimentSpec, tasks: &[TaskResult]) -> Option<String> {
    if !spec.param("plot").is_some_and(|v| v == "true") {
        return None;
    }
    let rows: Vec<CurveRow> = tasks.iter().filter_map(|t| t.csv.as_deref()).filter_map(|c| read_rows(c).ok()).flatten().collect();
    if rows.is_empty() {
        return None;
    }
    let mut hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    let mut ls: Vec<u64> = rows.iter().map(|r| r.l).collect();
    ls.sort_unstable();
    ls.dedup();
    let title = format!("{} (d = {}, seed {})", spec.name, rows[0].d, spec.seed);
    if hs.len() > 1 && spec.command != "decay" {
        let series: Vec<Series> = ls
            .iter()
            .map(|&l| Series {
                label: format!("L = {l}"),
                points: rows.iter().filter(|r| r.l == l).map(|r| (r.h, r.estimate, r.se)).collect(),
            })
            .collect();
        return Some(svg_plot(&title, "h", "probability", &series, &[]));
    }
    let mut series = Vec::new();
    let mut lines = Vec::new();
    for &h in &hs {
        let pts: Vec<(f64, f64, f64)> = rows.iter().filter(|r| r.h == h).map(|r| (r.l as f64, r.estimate, r.se)).collect();
        let curve: Vec<_> = pts
            .iter()
            .map(|p| (p.0, crate::stats::McEstimate { value: p.1, se: p.2, n: 1, seed: spec.seed, meta: vec![] }))
            .collect();
        if let Ok(fit) = fit_decay(&curve) {
            if fit.c.is_finite() && fit.c_prime.is_finite() && fit.rho.is_finite() {
                let (x0, x1) = (pts[0].0, pts[pts.len() - 1].0);
                let line = (0..=40)
                    .map(|k| {
                        let x = x0 + (x1 - x0) * k as f64 / 40.0;
                        (x, fit.c * (-fit.c_prime * x.powf(fit.rho)).exp())
                    })
                    .collect();
                lines.push(Line { label: format!("fit h = {h}, rho = {:.2}", fit.rho), points: line });
            }
        }
        series.push(Series { label: format!("h = {h}"), points: pts });
    }
    Some(svg_plot(&title, "L", "probability", &series, &lines))
}

/// Runs every task of `spec` on a pool of `spec.workers` threads.
pub fn run(spec: &ExperimentSpec) -> Result<ResultRecord> {
    let jobs = plan(spec)?;
    let started = now();
    let exec = || -> Vec<TaskResult> {
        jobs.iter()
            .map(|(name, job)| match job() {
                Ok(o) => TaskResult { task: name.clone(), ok: true, error: None, json: o.json, csv: o.csv, binary: o.binary },
                Err(e) => TaskResult { task: name.clone(), ok: false, error: Some(e.to_string()), ..Default::default() },
            })
            .collect()
    };
    let tasks = if spec.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build a pool of {} workers: {e}", spec.workers)))?;
        pool.install(exec)
    } else {
        exec()
    };
    let plot = plot_for(spec, &tasks);
    Ok(ResultRecord {
        schema_version: SCHEMA_VERSION,
        spec_hash: spec.hash(),
        spec: spec.clone(),
        software_version: env!("CARGO_PKG_VERSION").into(),
        started_unix: started,
        finished_unix: now(),
        tasks,
        plot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5:0.7:0.05").unwrap(), vec![0.5, 0.55, 0.6, 0.65, 0.7]);
        assert_eq!(parse_grid("1,2.5").unwrap(), vec![1.0, 2.5]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("1:2:0").is_err());
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn greens_origin() {
        let spec = ExperimentSpec::new("g", "greens", 0).with("dim", 3).with("point", "0,0,0");
        let r = run(&spec).unwrap();
        assert!(r.ok());
        let v = r.tasks[0].json.as_ref().unwrap()["value"].as_f64().unwrap();
        assert!((v - 1.516_386).abs() < 1e-6);
        assert_eq!(r.tasks[0].json.as_ref().unwrap()["schema_version"], 1);
    }

    #[test]
    fn invalid_specs_are_errors() {
        let base = ExperimentSpec::new("x", "greens", 0).with("dim", 3);
        assert!(run(&base.clone().with("bogus", 1)).is_err());
        assert!(run(&base.clone().with("point", "1,2")).is_err());
        assert!(run(&base.clone().with("method", "magic")).is_err());
        assert!(run(&ExperimentSpec::new("x", "teleport", 0)).is_err());
        let est = ExperimentSpec::new("e", "estimate", 0).with("L", 4).with("n", 5);
        assert!(run(&est).is_err());
        assert!(run(&est.clone().with("h", 1).with("h-grid", "0:1:0.5")).is_err());
        assert!(run(&est.with("h", 1).with("what", "everything")).is_err());
    }

    #[test]
    fn task_failures_are_recorded() {
        // the box method needs d ≤ 7
        let spec = ExperimentSpec::new("g", "greens", 0).with("dim", 8).with("point", "0,0,0,0,0,0,0,0").with("method", "box");
        let r = run(&spec).unwrap();
        assert!(!r.ok());
        assert!(r.tasks[0].error.is_some());
    }

    #[test]
    fn estimate_round_trips_and_plots() {
        let spec = ExperimentSpec::new("e", "estimate", 3)
            .with("L", "3,4")
            .with("h-grid", "0:1:0.5")
            .with("n", 20)
            .with("margin", 2)
            .with("plot", "true");
        let r = run(&spec).unwrap();
        assert!(r.ok());
        let rows = read_rows(r.tasks[1].csv.as_ref().unwrap()).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].h, 1.0);
        assert_eq!(write_rows(&rows).unwrap(), *r.tasks[1].csv.as_ref().unwrap());
        assert!(r.plot.unwrap().contains("L = 4"));
    }

    #[test]
    fn identical_specs_give_identical_payloads() {
        let spec = ExperimentSpec::new("e", "estimate", 9).with("L", "3").with("h", "0.5").with("n", 30).with("margin", 2);
        let mut two = spec.clone();
        two.workers = 2;
        let a = run(&spec).unwrap();
        let b = run(&two).unwrap();
        assert_eq!(a.payload(), b.payload());
        assert_eq!(a.spec_hash, b.spec_hash);
    }

    #[test]
    fn sample_dump_and_persist() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = ExperimentSpec::new("s", "sample", 1).with("dim", 3).with("window", 3).with("n", 2).with("margin", 2);
        spec.out = Some(dir.path().to_path_buf());
        let r = run(&spec).unwrap();
        let bytes = r.tasks[0].binary.clone().unwrap();
        let (h, samples) = crate::field::dump::read_dump(&mut bytes.as_slice()).unwrap();
        assert_eq!((h.extents, h.count, samples.len()), (vec![3, 3, 3], 2, 2));
        let paths = r.persist(&out_dir(&spec)).unwrap();
        r.persist(&out_dir(&spec)).unwrap();
        let log = std::fs::read_to_string(&paths[0]).unwrap();
        let lines: Vec<&str> = log.lines().collect();
        assert_eq!(lines.len(), 2);
        let recs: Vec<ResultRecord> = lines.iter().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(recs[0].payload(), recs[1].payload());
        assert_eq!(std::fs::read(&paths[1]).unwrap(), bytes);
    }

    #[test]
    fn p0_choices() {
        assert!(matches!(P0Choice::parse("analytic").unwrap(), P0Choice::Analytic));
        assert!(matches!(P0Choice::parse("mc:10:3").unwrap(), P0Choice::MonteCarlo { n: 10, seed: 3 }));
        assert!(matches!(P0Choice::parse("1e-20").unwrap(), P0Choice::Given(_)));
        assert!(P0Choice::parse("mc:10").is_err());
        assert!(P0Choice::parse("2").is_err());
    }
}
