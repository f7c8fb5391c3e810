use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::Value;

use lsconf::energy::{energy, EnergyMode, MapValues};
use lsconf::maps::{builtin_map, certify_conformal, CertifyOptions, ConformalClass, MapKind, SpaceMap};
use lsconf::space::{gen_space, FiniteMetricSpace, PointId, SpaceSpec};
use lsconf::suite::{run_suite, ExperimentConfig};
use lsconf::varprob::{capacity, grotzsch_delta, modulus, parabolicity_probe, sobolev_constant, ArcPool, CapacityProblem, CurveFamily, ModulusProblem};

#[derive(Parser)]
#[command(name = "lsconf", version, about = "Packing energies, capacities and conformality checks on finite metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Exact,
    Greedy,
    Bracket,
}

/// Flags shared by every command. Each may also come from `--config`, a flat
/// JSON object with the same keys; flags win.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
struct Common {
    /// Space file, or a generator spec such as {"type":"path","n":8}.
    #[arg(long, global = true)]
    space: Option<PathBuf>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    l: Option<f64>,
    #[arg(long = "R", global = true)]
    #[serde(rename = "R")]
    r: Option<f64>,
    /// Largest radius; `inf` for no bound.
    #[arg(long = "S", global = true)]
    #[serde(rename = "S")]
    s: Option<f64>,
    #[arg(long, value_enum, global = true)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (a directory for `suite`); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl Common {
    /// Fills unset flags from the config file.
    fn resolve(mut self) -> Result<(Self, Option<String>)> {
        let Some(path) = self.config.clone() else { return Ok((self, None)) };
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let mut shared = value.clone();
        if let Value::Object(map) = &mut shared {
            map.retain(|k, _| ["space", "p", "q", "l", "R", "S", "mode", "eps", "seed", "out"].contains(&k.as_str()));
        }
        let from: Common = serde_json::from_value(shared).context("config keys")?;
        self.space = self.space.or(from.space);
        self.p = self.p.or(from.p);
        self.q = self.q.or(from.q);
        self.l = self.l.or(from.l);
        self.r = self.r.or(from.r);
        self.s = self.s.or(from.s);
        self.mode = self.mode.or(from.mode);
        self.eps = self.eps.or(from.eps);
        self.seed = self.seed.or(from.seed);
        self.out = self.out.or(from.out);
        Ok((self, Some(text)))
    }

    fn space(&self) -> Result<FiniteMetricSpace> {
        let path = self.space.as_ref().context("--space is required")?;
        load_space(path)
    }

    fn p(&self) -> f64 {
        self.p.unwrap_or(2.0)
    }

    fn l(&self) -> f64 {
        self.l.unwrap_or(2.0)
    }

    fn window(&self) -> (f64, f64) {
        let r = self.r.unwrap_or(1.0);
        (r, self.s.unwrap_or(r))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a space from a spec and write it as a space file.
    Gen {
        /// Generator spec as JSON, e.g. {"type":"grid","d":2,"n":4}.
        spec: String,
        #[command(flatten)]
        common: Common,
    },
    /// Packing energy of a map given as a JSON array of values.
    Energy {
        #[arg(long)]
        u: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Capacity of a target set against a boundary set.
    Capacity {
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<PointId>,
        /// Defaults to the space's boundary.
        #[arg(long, value_delimiter = ',')]
        boundary: Vec<PointId>,
        #[command(flatten)]
        common: Common,
    },
    /// Modulus of a curve family given as a JSON array of point arrays.
    Modulus {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Least arc capacity between two points.
    Delta {
        #[arg(long)]
        x1: PointId,
        #[arg(long)]
        x2: PointId,
        #[arg(long, value_delimiter = ',')]
        boundary: Vec<PointId>,
        #[arg(long, default_value_t = 2)]
        detour: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Conformality certificate of a built-in or user map.
    Certify {
        #[arg(long)]
        codomain: PathBuf,
        /// Map kind as JSON, e.g. {"type":"identity"}; omit with --images.
        #[arg(long)]
        kind: Option<String>,
        /// JSON array of image points for a user map.
        #[arg(long)]
        images: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "large-scale")]
        class: ClassArg,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        lp: Vec<f64>,
        #[arg(long = "Rp", default_value_t = 1.0)]
        rp: f64,
        #[arg(long, default_value_t = 64.0)]
        l_max: f64,
        #[arg(long = "Np-cap", default_value_t = 1)]
        np_cap: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Basepoint capacity along a family of spaces.
    Probe {
        #[arg(long, value_delimiter = ',', required = true)]
        spaces: Vec<PathBuf>,
        /// Write the rows as CSV instead of the JSON report.
        #[arg(long)]
        csv: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Best constant in ||u||_q <= C E_p(u)^(1/p) over maps vanishing on the boundary.
    Sobolev {
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run a named experiment suite; exit status 0 iff every assertion passes.
    Suite {
        name: String,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ClassArg {
    Coarse,
    Uniform,
    Rough,
    LargeScale,
}

impl From<ClassArg> for ConformalClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Coarse => ConformalClass::Coarse,
            ClassArg::Uniform => ConformalClass::Uniform,
            ClassArg::Rough => ConformalClass::Rough,
            ClassArg::LargeScale => ConformalClass::LargeScale,
        }
    }
}

fn load_space(path: &Path) -> Result<FiniteMetricSpace> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_space(&text).with_context(|| format!("loading {}", path.display()))
}

fn parse_space(text: &str) -> Result<FiniteMetricSpace> {
    let value: Value = serde_json::from_str(text)?;
    if value.get("type").is_some() {
        let spec: SpaceSpec = serde_json::from_value(value)?;
        Ok(gen_space(&spec)?)
    } else {
        Ok(FiniteMetricSpace::from_json(text)?)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    emit(out, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen { spec, common } => {
            let (common, _) = common.resolve()?;
            let spec: SpaceSpec = serde_json::from_str(&spec).context("parsing the generator spec")?;
            let space = gen_space(&spec)?;
            emit(common.out.as_deref(), &(space.to_json() + "\n"))?;
        }
        Command::Energy { u, common } => {
            let (common, _) = common.resolve()?;
            let space = common.space()?;
            let values: Vec<f64> = read_json(&u)?;
            let (r, s) = common.window();
            let mode = match common.mode.unwrap_or(Mode::Exact) {
                Mode::Exact => EnergyMode::Exact,
                Mode::Greedy => EnergyMode::Greedy,
                Mode::Bracket => EnergyMode::Bracket,
            };
            let res = energy(&space, &MapValues::scalar(values), common.p(), common.l(), r, s, mode)?;
            emit_json(common.out.as_deref(), &res)?;
        }
        Command::Capacity { target, boundary, common } => {
            let (common, _) = common.resolve()?;
            let space = common.space()?;
            let boundary = if boundary.is_empty() { space.boundary().to_vec() } else { boundary };
            let (r, s) = common.window();
            let mut problem = CapacityProblem::new(target, boundary, common.p(), common.l(), r, s);
            if let Some(eps) = common.eps {
                problem.eps = eps;
            }
            emit_json(common.out.as_deref(), &capacity(&space, &problem)?)?;
        }
        Command::Modulus { curves, dim, common } => {
            let (common, _) = common.resolve()?;
            let space = common.space()?;
            let family = CurveFamily::new(read_json(&curves)?);
            let (r, s) = common.window();
            let mut problem = ModulusProblem::new(common.p(), common.l(), r, s);
            problem.dim = dim;
            problem.seed = common.seed.unwrap_or(0);
            if let Some(eps) = common.eps {
                problem.eps = eps;
            }
            emit_json(common.out.as_deref(), &modulus(&space, &family, &problem)?)?;
        }
        Command::Delta { x1, x2, boundary, detour, common } => {
            let (common, _) = common.resolve()?;
            let space = common.space()?;
            let boundary = if boundary.is_empty() { space.boundary().to_vec() } else { boundary };
            let (r, s) = common.window();
            let pool = ArcPool { detour, ..ArcPool::default() };
            let res = grotzsch_delta(&space, x1, x2, &boundary, common.p(), common.l(), r, s, pool)?;
            emit_json(common.out.as_deref(), &res)?;
        }
        Command::Certify { codomain, kind, images, class, lp, rp, l_max, np_cap, common } => {
            let (common, _) = common.resolve()?;
            let domain = Arc::new(common.space()?);
            let codomain = Arc::new(load_space(&codomain)?);
            let f = match (kind, images) {
                (Some(kind), None) => {
                    let kind: MapKind = serde_json::from_str(&kind).context("parsing --kind")?;
                    builtin_map(&kind, domain, codomain)?
                }
                (None, Some(path)) => SpaceMap::new(domain, codomain, read_json(&path)?, MapKind::User)?,
                _ => bail!("give exactly one of --kind and --images"),
            };
            let class: ConformalClass = class.into();
            let (r, s) = match (common.r, common.s) {
                (r, None) if class.unbounded() => (r.unwrap_or(1.0), f64::INFINITY),
                _ => common.window(),
            };
            let opts = CertifyOptions { l_max, np_cap, seed: common.seed.unwrap_or(0), ..CertifyOptions::default() };
            let cert = certify_conformal(&f, class, &lp, rp, &[(r, s)], &opts)?;
            emit_json(common.out.as_deref(), &cert)?;
        }
        Command::Probe { spaces, csv, common } => {
            let (common, _) = common.resolve()?;
            let family: Vec<FiniteMetricSpace> = spaces.iter().map(|p| load_space(p)).collect::<Result<_>>()?;
            let (r, s) = common.window();
            let rep = parabolicity_probe(&family, common.p(), common.l(), r, s, common.eps)?;
            if csv {
                emit(common.out.as_deref(), &rep.to_csv())?;
            } else {
                emit_json(common.out.as_deref(), &rep)?;
            }
        }
        Command::Sobolev { budget, common } => {
            let (common, _) = common.resolve()?;
            let space = common.space()?;
            let (r, s) = common.window();
            let q = common.q.unwrap_or(common.p());
            let est = sobolev_constant(&space, common.p(), q, common.l(), r, s, budget, common.seed.unwrap_or(0))?;
            emit_json(common.out.as_deref(), &est)?;
        }
        Command::Suite { name, n, samples, common } => {
            let (common, text) = common.resolve()?;
            let mut cfg = match &text {
                Some(t) => ExperimentConfig::from_json(t)?,
                None => ExperimentConfig::default(),
            };
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            cfg.n = n.or(cfg.n);
            cfg.samples = samples.or(cfg.samples);
            cfg.p = common.p.map(|p| vec![p]).or(cfg.p);
            cfg.l = common.l.map(|l| vec![l]).or(cfg.l);
            cfg.r = common.r.or(cfg.r);
            cfg.s = common.s.or(cfg.s);
            cfg.eps = common.eps.or(cfg.eps);
            let report = run_suite(&name, &cfg)?;
            match common.out.or(cfg.out) {
                Some(dir) => {
                    let (json, csv) = report.write(&dir)?;
                    eprintln!("wrote {} and {}", json.display(), csv.display());
                }
                None => print!("{}", report.to_json()),
            }
            for a in report.assertions.iter().filter(|a| !a.pass) {
                eprintln!("FAIL {}: {}", a.name, a.detail);
            }
            return Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
