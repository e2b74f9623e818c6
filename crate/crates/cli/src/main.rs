//! `gffperc` command-line interface.
//!
//! Every subcommand except `recipe` builds an [`ExperimentSpec`] (from
//! `--config` if given, then flags on top) and hands it to the harness.
//! Tables go to stdout as CSV, everything else as JSON.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gffperc::harness::{out_dir, recipe, run, ExperimentSpec, ResultRecord, OUT_DIR_ENV, RECIPES};

#[derive(Parser)]
#[command(name = "gffperc", version, about = "Gaussian free field level-set percolation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Where records, tables and plots are written (default: $GFFPERC_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Green function g(x) of simple random walk.
    Greens {
        #[arg(long)]
        dim: Option<usize>,
        /// Comma-separated coordinates; several points separated by ';'.
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        /// quadrature, box or both.
        #[arg(long)]
        method: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Zero-boundary free field samples written as a binary dump.
    Sample {
        #[arg(long)]
        dim: Option<usize>,
        /// Side length, or one extent per axis separated by commas.
        #[arg(long)]
        window: Option<String>,
        /// Zero-boundary margin around the window (default: its largest side).
        #[arg(long)]
        margin: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
        /// Dump file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo crossing, connectivity, plane or h* estimates as CSV.
    Estimate {
        #[arg(long)]
        dim: Option<usize>,
        /// Sizes, comma-separated.
        #[arg(long = "L")]
        l: Option<String>,
        #[arg(long, conflicts_with = "h_grid")]
        h: Option<String>,
        /// `lo:hi:step` or a comma list.
        #[arg(long = "h-grid")]
        h_grid: Option<String>,
        /// Samples per size (one value, or one per size for hstar).
        #[arg(long)]
        n: Option<String>,
        /// Fixed sites (`12`) or a multiple of L (`0.25L`).
        #[arg(long)]
        margin: Option<String>,
        /// crossing, connectivity, hstar or plane.
        #[arg(long)]
        what: Option<String>,
        /// Also write an SVG plot to the output directory.
        #[arg(long)]
        plot: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Renormalization recursion trace as JSON.
    Renorm {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long = "L0")]
        big_l0: Option<u64>,
        #[arg(long = "l0")]
        l0: Option<u64>,
        #[arg(long)]
        h0: Option<f64>,
        #[arg(long)]
        nmax: Option<u32>,
        /// JSON object of constant overrides.
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// analytic, mc:<n>:<seed> or a probability.
        #[arg(long)]
        p0: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// High-dimension slab pipeline: d0 and the gates.
    SlabCert {
        #[arg(long)]
        h0: Option<f64>,
        #[arg(long = "L0")]
        big_l0: Option<u64>,
        /// Site threshold, or `estimate` for a Monte Carlo estimate.
        #[arg(long)]
        pcsite: Option<String>,
        /// Samples per size for the threshold estimate.
        #[arg(long = "pc-n")]
        pc_n: Option<u64>,
        /// Samples for the empirical block checks (0 skips them).
        #[arg(long = "empirical-n")]
        empirical_n: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Print or write the pre-baked spec files.
    Recipe {
        /// One of d3-hstar, decay-scan, slab-probe, renorm-trace.
        name: Option<String>,
        #[arg(long)]
        list: bool,
        /// Write `<name>.spec` files here instead of printing.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Run a spec file and persist its record.
    Run {
        spec: PathBuf,
        /// `key=value` overrides, repeatable.
        #[arg(long = "set")]
        set: Vec<String>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

type Res<T> = Result<T, String>;

fn build(command: &str, common: &Common, pairs: Vec<(&str, Option<String>)>) -> Res<ExperimentSpec> {
    let mut spec = match &common.config {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| e.to_string())
            .and_then(|t| ExperimentSpec::parse_for(&t, command).map_err(|e| e.to_string()))
            .map_err(|e| format!("{}: {e}", p.display()))?,
        None => ExperimentSpec::new(command, command, 1),
    };
    if let Some(s) = common.seed {
        spec.seed = s;
    }
    if let Some(w) = common.workers {
        spec.workers = w;
    }
    if let Some(o) = &common.out_dir {
        spec.out = Some(o.clone());
    }
    for (k, v) in pairs {
        if let Some(v) = v {
            spec.set(k, &v).map_err(|e| e.to_string())?;
        }
    }
    Ok(spec)
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(T::to_string)
}

fn print_payload(rec: &ResultRecord) {
    let mut header_done = false;
    let mut jsons = Vec::new();
    for t in &rec.tasks {
        if let Some(csv) = &t.csv {
            let body = if header_done { csv.split_once('\n').map_or("", |x| x.1) } else { csv.as_str() };
            print!("{body}");
            header_done = true;
        }
        if let Some(j) = &t.json {
            jsons.push(j.clone());
        }
    }
    if !header_done {
        let v = if jsons.len() == 1 { jsons.pop().unwrap() } else { serde_json::Value::Array(jsons) };
        println!("{}", serde_json::to_string_pretty(&v).unwrap());
    }
}

fn report_failures(rec: &ResultRecord) -> ExitCode {
    let mut code = ExitCode::SUCCESS;
    for t in rec.tasks.iter().filter(|t| !t.ok) {
        eprintln!("task {} failed: {}", t.task, t.error.as_deref().unwrap_or("unknown error"));
        code = ExitCode::from(1);
    }
    code
}

fn persist(rec: &ResultRecord, dir: &Path) -> Res<()> {
    for p in rec.persist(dir).map_err(|e| e.to_string())? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn execute(spec: ExperimentSpec, force_persist: bool) -> Res<ExitCode> {
    let rec = run(&spec).map_err(|e| e.to_string())?;
    print_payload(&rec);
    if force_persist || spec.out.is_some() || std::env::var_os(OUT_DIR_ENV).is_some() {
        persist(&rec, &out_dir(&spec))?;
    }
    Ok(report_failures(&rec))
}

fn main_inner(cli: Cli) -> Res<ExitCode> {
    match cli.command {
        Command::Greens { dim, point, tol, method, common } => {
            let spec = build("greens", &common, vec![("dim", s(&dim)), ("point", point), ("tol", s(&tol)), ("method", method)])?;
            execute(spec, false)
        }
        Command::Sample { dim, window, margin, n, out, common } => {
            let spec = build(
                "sample",
                &common,
                vec![
                    ("dim", s(&dim)),
                    ("window", window),
                    ("margin", s(&margin)),
                    ("n", s(&n)),
                    ("dump", out.as_ref().map(|p| p.display().to_string())),
                ],
            )?;
            let rec = run(&spec).map_err(|e| e.to_string())?;
            print_payload(&rec);
            match spec.param("dump") {
                Some(path) if spec.out.is_none() && std::env::var_os(OUT_DIR_ENV).is_none() => {
                    for t in &rec.tasks {
                        if let Some(bytes) = &t.binary {
                            std::fs::write(path, bytes).map_err(|e| format!("{path}: {e}"))?;
                        }
                    }
                }
                _ => persist(&rec, &out_dir(&spec))?,
            }
            Ok(report_failures(&rec))
        }
        Command::Estimate { dim, l, h, h_grid, n, margin, what, plot, common } => {
            let spec = build(
                "estimate",
                &common,
                vec![
                    ("dim", s(&dim)),
                    ("L", l),
                    ("h", h),
                    ("h-grid", h_grid),
                    ("n", n),
                    ("margin", margin),
                    ("what", what),
                    ("plot", plot.then(|| "true".to_string())),
                ],
            )?;
            execute(spec, plot)
        }
        Command::Renorm { dim, big_l0, l0, h0, nmax, ledger, p0, common } => {
            let spec = build(
                "renorm",
                &common,
                vec![
                    ("dim", s(&dim)),
                    ("L0", s(&big_l0)),
                    ("l0", s(&l0)),
                    ("h0", s(&h0)),
                    ("nmax", s(&nmax)),
                    ("ledger", ledger.as_ref().map(|p| p.display().to_string())),
                    ("p0", p0),
                ],
            )?;
            execute(spec, false)
        }
        Command::SlabCert { h0, big_l0, pcsite, pc_n, empirical_n, common } => {
            let spec = build(
                "slab-cert",
                &common,
                vec![
                    ("h0", s(&h0)),
                    ("L0", s(&big_l0)),
                    ("pcsite", pcsite),
                    ("pc-n", s(&pc_n)),
                    ("empirical-n", s(&empirical_n)),
                ],
            )?;
            execute(spec, false)
        }
        Command::Recipe { name, list, dir } => {
            if list {
                for r in RECIPES {
                    println!("{r}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            let name = name.ok_or("recipe needs a name (or --list)")?;
            let specs = recipe(&name).map_err(|e| e.to_string())?;
            for spec in specs {
                match &dir {
                    Some(d) => {
                        std::fs::create_dir_all(d).map_err(|e| e.to_string())?;
                        let p = d.join(format!("{}.spec", spec.name));
                        std::fs::write(&p, spec.to_text()).map_err(|e| e.to_string())?;
                        println!("{}", p.display());
                    }
                    None => print!("{}", spec.to_text()),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { spec, set, workers, out_dir: dir } => {
            let mut sp = ExperimentSpec::from_file(&spec).map_err(|e| format!("{}: {e}", spec.display()))?;
            for kv in &set {
                let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects key=value, got {kv:?}"))?;
                sp.set(k.trim(), v.trim()).map_err(|e| e.to_string())?;
            }
            if let Some(w) = workers {
                sp.workers = w;
            }
            if let Some(d) = dir {
                sp.out = Some(d);
            }
            execute(sp, true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
