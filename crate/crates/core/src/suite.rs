//! Experiment suites: fixed instance grids with pass/fail assertions and
//! deterministic JSON and CSV reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::energy::{energy, EnergyMode, MapValues};
use crate::maps::{
    builtin_map, certify_conformal, delta_transport_check, poincare_model, pullback_energy_check, CertRow, CertifyOptions,
    ConformalClass, MapError, MapKind, SpaceMap,
};
use crate::space::{gen_space, FiniteMetricSpace, SpaceError, SpaceSpec};
use crate::varprob::{
    check_r1_log, eval_reference_function, isoperimetric_profile, m_constant, parabolicity_probe, ArcPool, ProfileMode, R1Check,
    R1Sampler, ReferenceKind, VarError,
};

pub const SUITES: [&str; 8] = [
    "rparabolic",
    "parabolicnc",
    "twisted-r1",
    "energy-functorial",
    "onepacking-bracket",
    "poincare-inclusions",
    "delta-qi",
    "isoperimetric",
];

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("unknown suite {name:?}; valid suites: {}", SUITES.join(", "))]
    Unknown { name: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Var(#[from] VarError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Energy(#[from] crate::energy::EnergyError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Suite parameters. Every field is optional; unset fields take the
/// suite's defaults. Keys are kebab-case in the JSON form.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Option<String>,
    pub seed: u64,
    /// Size grid (path lengths, grid-ball radii, tree depth, ...).
    pub n: Option<Vec<usize>>,
    pub p: Option<Vec<f64>>,
    pub l: Option<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[serde(rename = "S")]
    pub s: Option<f64>,
    pub lp: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub eps: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, SuiteError> {
        serde_json::from_str(text).map_err(|e| SuiteError::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub data: Value,
    #[serde(skip)]
    pub csv: String,
}

impl SuiteReport {
    fn new(suite: &str, seed: u64, assertions: Vec<Assertion>, data: Value, csv: String) -> Self {
        let passed = assertions.iter().all(|a| a.pass);
        SuiteReport { suite: suite.to_string(), seed, passed, assertions, data, csv }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    /// Writes `<suite>.json` and `<suite>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), SuiteError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| SuiteError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let json = dir.join(format!("{}.json", self.suite));
        let csv = dir.join(format!("{}.csv", self.suite));
        std::fs::write(&json, self.to_json()).map_err(io(&json))?;
        std::fs::write(&csv, &self.csv).map_err(io(&csv))?;
        Ok((json, csv))
    }
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Assertion {
    Assertion { name: name.into(), pass, detail: detail.into() }
}

/// Runs a named suite.
pub fn run_suite(name: &str, config: &ExperimentConfig) -> Result<SuiteReport, SuiteError> {
    match name {
        "rparabolic" => rparabolic(config),
        "parabolicnc" => parabolicnc(config),
        "twisted-r1" => twisted_r1(config),
        "energy-functorial" => energy_functorial(config),
        "onepacking-bracket" => onepacking_bracket(config),
        "poincare-inclusions" => poincare_inclusions(config),
        "delta-qi" => delta_qi(config),
        "isoperimetric" => isoperimetric(config),
        _ => Err(SuiteError::Unknown { name: name.to_string() }),
    }
}

fn single(v: &Option<Vec<f64>>, default: f64, what: &str) -> Result<f64, SuiteError> {
    match v.as_deref() {
        None => Ok(default),
        Some([x]) => Ok(*x),
        Some(_) => Err(SuiteError::Config(format!("{what} takes a single value in this suite"))),
    }
}

/// Basepoint capacity on paths against the far endpoint.
fn rparabolic(cfg: &ExperimentConfig) -> Result<SuiteReport, SuiteError> {
    let ns = cfg.n.clone().unwrap_or_else(|| vec![8, 16, 32, 64]);
    let ps = cfg.p.clone().unwrap_or_else(|| vec![1.0, 2.0]);
    let l = single(&cfg.l, 2.0, "l")?;
    let (r, s) = (cfg.r.unwrap_or(1.0), cfg.s.unwrap_or(1.0));
    let family: Vec<FiniteMetricSpace> = ns.iter().map(|&n| gen_space(&SpaceSpec::Path { n: n + 1 })).collect::<Result<_, _>>()?;
    let mut csv = String::from("p,n,value,lower,upper\n");
    let mut asserts = Vec::new();
    let mut reports = Vec::new();
    for &p in &ps {
        let rep = parabolicity_probe(&family, p, l, r, s, cfg.eps)?;
        for row in &rep.rows {
            let _ = writeln!(csv, "{p},{},{},{},{}", row.n, row.value, row.lower, row.upper);
        }
        let values: Vec<f64> = rep.rows.iter().map(|r| r.value).collect();
        for row in &rep.rows {
            asserts.push(check(
                format!("p={p} n={} solve", row.n),
                row.converged && row.weakly_dual && row.gap <= 1e-6,
                format!("gap {} after {} iterations", row.gap, row.iterations),
            ));
        }
        if p > 1.0 {
            asserts.push(check(format!("p={p} strictly decreasing"), rep.strictly_decreasing, format!("{values:?}")));
            if ns.len() >= 2 && ns[ns.len() - 1] >= 8 * ns[0] {
                let ratio = values[values.len() - 1] / values[0];
                asserts.push(check(format!("p={p} last/first <= 0.6"), ratio <= 0.6, format!("ratio {ratio}")));
            }
        } else {
            asserts.push(check(format!("p={p} variation < 0.1"), rep.variation < 0.1, format!("variation {}", rep.variation)));
        }
        reports.push(json!({ "p": p, "report": rep }));
    }
    let data = json!({ "l": l, "R": r, "S": s, "probes": reports });
    Ok(SuiteReport::new("rparabolic", cfg.seed, asserts, data, csv))
}

/// Energy of `sin log log r` on growing grid balls.
fn parabolicnc(cfg: &ExperimentConfig) -> Result<SuiteReport, SuiteError> {
    let radii = cfg.n.clone().unwrap_or_else(|| vec![16, 32, 64]);
    let p = single(&cfg.p, 2.0, "p")?;
    let l = single(&cfg.l, 2.0, "l")?;
    let (r, s) = (cfg.r.unwrap_or(1.0), cfg.s.unwrap_or(2.0));
    let m = m_constant(l);
    let mut csv = String::from("n,points,lower,exact,upper\n");
    let mut rows = Vec::new();
    for &n in &radii {
        let space = gen_space(&SpaceSpec::GridBall { d: 2, radius: n as i64 })?;
        let o = space.basepoint().expect("grid balls have an origin");
        let w: Vec<f64> =
            space.points().map(|x| eval_reference_function(ReferenceKind::SinLoglog, m, space.dist(o, x))).collect::<Result<_, _>>()?;
        let e = energy(&space, &MapValues::scalar(w), p, l, r, s, EnergyMode::Bracket)?;
        let fmt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(csv, "{n},{},{},{},{}", space.len(), e.lower, fmt(e.exact), fmt(e.upper));
        rows.push(json!({ "n": n, "points": space.len(), "lower": e.lower, "exact": e.exact, "upper": e.upper }));
    }
    let mut asserts = Vec::new();
    for w in rows.windows(2) {
        for key in ["lower", "upper"] {
            let (a, b) = (w[0][key].as_f64(), w[1][key].as_f64());
            if let (Some(a), Some(b)) = (a, b) {
                let growth = b / a;
                let steps = (w[1]["n"].as_f64().unwrap() / w[0]["n"].as_f64().unwrap()).log2();
                let per_doubling = growth.powf(1.0 / steps);
                asserts.push(check(
                    format!("{key} growth n={} -> {}", w[0]["n"], w[1]["n"]),
                    per_doubling < 1.2,
                    format!("factor {per_doubling} per doubling"),
                ));
            }
        }
    }
    let data = json!({ "p": p, "l": l, "R": r, "S": s, "m": m, "rows": rows });
    Ok(SuiteReport::new("parabolicnc", cfg.seed, asserts, data, csv))
}

/// Samples the triple-logarithm inequality under its hypotheses.
fn twisted_r1(cfg: &ExperimentConfig) -> Result<SuiteReport, SuiteError> {
    let ls = cfg.l.clone().unwrap_or_else(|| vec![1.5, 2.0, 4.0, 10.0]);
    let samples = cfg.samples.unwrap_or(100_000);
    let mut csv = String::from("l,samples,violations,worst_ratio\n");
    let mut rows = Vec::new();
    let mut asserts = Vec::new();
    for (k, &l) in ls.iter().enumerate() {
        if !(l > 1.0) {
            return Err(SuiteError::Config(format!("l = {l} must exceed 1")));
        }
        let mut sampler = R1Sampler::new(l, cfg.seed.wrapping_add(k as u64));
        let mut violations = 0usize;
        let mut worst = 0.0f64;
        let mut first: Option<Value> = None;
        for _ in 0..samples {
            let (ta, tb) = sampler.sample();
            match check_r1_log(ta, tb, l) {
                R1Check::Violated { lhs, rhs, ratio } => {
                    violations += 1;
                    worst = worst.max(ratio);
                    if first.is_none() {
                        first = Some(json!({ "logInvA": ta, "logInvB": tb, "lhs": lhs, "rhs": rhs, "ratio": ratio }));
                    }
                }
                R1Check::Holds { lhs, rhs } => {
                    if rhs > 0.0 {
                        worst = worst.max(16.0 * lhs / rhs);
                    }
                }
                R1Check::NotApplicable { reason } => return Err(SuiteError::Config(format!("sampler left the hypotheses: {reason}"))),
            }
        }
        let _ = writeln!(csv, "{l},{samples},{violations},{worst}");
        asserts.push(check(format!("l={l} no violations"), violations == 0, format!("{violations} of {samples}, worst ratio {worst}")));
        rows.push(json!({ "l": l, "samples": samples, "violations": violations, "worstRatio": worst, "firstViolation": first }));
    }
    let total: usize = rows.iter().map(|r| r["violations"].as_u64().unwrap() as usize).sum();
    let data = json!({ "samples": samples * ls.len(), "violations": total, "rows": rows });
    Ok(SuiteReport::new("twisted-r1", cfg.seed, asserts, data, csv))
}

fn certified_row(f: &SpaceMap, lp: f64, r: f64, s: f64) -> Result<CertRow, SuiteError> {
    let cert = certify_conformal(f, ConformalClass::LargeScale, &[lp], r, &[(r, s)], &CertifyOptions::default())?;
    Ok(cert.rows.into_iter().next().expect("one row per lp and window"))
}

/// Energy pullback on three certified maps.
fn energy_functorial(cfg: &ExperimentConfig) -> Result<SuiteReport, SuiteError> {
    let lp = single(&cfg.lp, 2.0, "lp")?;
    let p = single(&cfg.p, 2.0, "p")?;
    let (r, s) = (cfg.r.unwrap_or(1.0), cfg.s.unwrap_or(1.0));
    let trials = cfg.samples.unwrap_or(50);
    let n = cfg.n.as_ref().and_then(|v| v.first().copied()).unwrap_or(10);
    let path = Arc::new(gen_space(&SpaceSpec::Path { n })?);
    let strip = Arc::new(gen_space(&SpaceSpec::Box { ranges: vec![(0, n as i64 - 1), (-1, 1)] })?);
    let maps = vec![
        ("identity", SpaceMap::identity(path.clone())),
        ("snowflake", SpaceMap::snowflake_identity(path.clone(), 0.5)?),
        ("qi", builtin_map(&MapKind::QiEmbedding { l: 1.0, c: 0.0 }, path.clone(), strip)?),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut csv = String::from("map,trial,lhs,rhs,Np,holds\n");
    let mut asserts = Vec::new();
    let mut rows = Vec::new();
    for (name, f) in &maps {
        let row = certified_row(f, lp, r, s)?;
        asserts.push(check(format!("{name} certified"), row.pass && row.exhaustive, format!("l {} Np {}", row.l, row.n_prime)));
        if *name == "snowflake" {
            asserts.push(check("snowflake l = lp^2", (row.l - lp * lp).abs() < 1e-9, format!("l {}", row.l)));
        }
        let mut held = 0;
        for trial in 0..trials {
            let u = MapValues::scalar((0..f.codomain.len()).map(|_| rng.random::<f64>()).collect());
            let rep = pullback_energy_check(f, &row, &u, p)?;
            held += rep.holds as usize;
            let _ = writeln!(csv, "{name},{trial},{},{},{},{}", rep.lhs, rep.rhs, rep.n_prime, rep.holds);
        }
        asserts.push(check(format!("{name} pullback"), held == trials, format!("{held} of {trials}")));
        rows.push(json!({ "map": name, "row": row, "held": held, "trials": trials }));
    }
    let data = json!({ "p": p, "lp": lp, "R": r, "S": s, "maps": rows });
    Ok(SuiteReport::new("energy-functorial", cfg.seed, asserts, data, csv))
}

/// Greedy, exact and covering energies on small paths and grids.
fn onepacking_bracket(cfg: &ExperimentConfig) -> Result<SuiteReport, SuiteError> {
    let p = single(&cfg.p, 2.0, "p")?;
    let l = single(&cfg.l, 2.0, "l")?;
    let (r, s) = (cfg.r.unwrap_or(1.0), cfg.s.unwrap_or(1.0));
    let trials = cfg.samples.unwrap_or(100);
    let mut specs: Vec<SpaceSpec> = (7..=15).map(|n| SpaceSpec::Path { n }).collect();
    specs.extend((4..=6).map(|n| SpaceSpec::Grid { d: 2, n }));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut csv = String::from("space,trial,greedy,exact,upper\n");
    let mut asserts = Vec::new();
    let mut rows = Vec::new();
    for spec in &specs {
        let space = gen_space(spec)?;
        let mut ok = 0;
        for trial in 0..trials {
            let u = MapValues::scalar((0..space.len()).map(|_| rng.random::<f64>()).collect());
            let greedy = energy(&space, &u, p, l, r, s, EnergyMode::Greedy)?.lower;
            let b = energy(&space, &u, p, l, r, s, EnergyMode::Bracket)?;
            let (exact, upper) = (b.exact.unwrap_or(f64::NAN), b.upper.unwrap_or(f64::NAN));
            let tol = 1e-12 * upper.abs().max(1.0);
            ok += (greedy <= exact + tol && exact <= upper + tol) as usize;
            let _ = writeln!(csv, "{},{trial},{greedy},{exact},{upper}", space.name());
        }
        asserts.push(check(format!("{} bracket", space.name()), ok == trials, format!("{ok} of {trials}")));
        rows.push(json!({ "space": space.name(), "ordered": ok, "trials": trials }));
    }
    let path7 = gen_space(&SpaceSpec::Path { n: 7 })?;
    let ramp = MapValues::scalar((0..7).map(f64::from).collect());
    let e = energy(&path7, &ramp, 1.0, 1.0, 1.0, 1.0, EnergyMode::Exact)?;
    asserts.push(check("path(7) ramp p=1 l=1", e.exact == Some(4.0), format!("{:?}", e.exact)));
    let data = json!({ "p": p, "l": l, "R": r, "S": s, "spaces": rows, "ramp": e.exact });
    Ok(SuiteReport::new("onepacking-bracket", cfg.seed, asserts, data, csv))
}

/// Product-ball inclusions for the Poincare model of a binary tree.
fn poincare_inclusions(cfg: &ExperimentConfig) -> Result<SuiteReport, SuiteError> {
    let depth = cfg.n.as_ref().and_then(|v| v.first().copied()).unwrap_or(8);
    let threshold = cfg.r.unwrap_or(3.0);
    let tree = gen_space(&SpaceSpec::Tree { arity: 2, depth })?;
    let (image, rep) = poincare_model(&tree, threshold)?;
    let mut csv = String::from("threshold,checked,passed,pass_rate,smallest_passing_threshold\n");
    let smallest = rep.smallest_passing_threshold.map_or(String::new(), |t| t.to_string());
    let _ = writeln!(csv, "{threshold},{},{},{},{smallest}", rep.checked, rep.passed, rep.pass_rate);
    let mut asserts = vec![
        check("chi(root) = 1", image.chi[image.root] == 1.0, format!("{}", image.chi[image.root])),
        check("all balls above the threshold pass", rep.pass_rate == 1.0, format!("{} of {}", rep.passed, rep.checked)),
    ];
    asserts.push(check(
        "smallest passing threshold <= 3",
        rep.smallest_passing_threshold.is_some_and(|t| t <= 3.0),
        format!("{:?}", rep.smallest_passing_threshold),
    ));
    let monotone = tree.points().all(|x| tree.points().all(|y| tree.dist(0, x) <= tree.dist(0, y) || image.chi[x] < image.chi[y]));
    asserts.push(check("chi decreases with depth", monotone, ""));
    let data = json!({ "depth": depth, "threshold": threshold, "report": rep });
    Ok(SuiteReport::new("poincare-inclusions", cfg.seed, asserts, data, csv))
}

/// Grötzsch quantity under bijections of a path.
fn delta_qi(cfg: &ExperimentConfig) -> Result<SuiteReport, SuiteError> {
    let n = cfg.n.as_ref().and_then(|v| v.first().copied()).unwrap_or(9);
    let lp = single(&cfg.lp, 2.0, "lp")?;
    let p = single(&cfg.p, 2.0, "p")?;
    let r = cfg.r.unwrap_or(1.0);
    let s = cfg.s.unwrap_or(f64::INFINITY);
    let count = cfg.samples.unwrap_or(4);
    if n < 3 {
        return Err(SuiteError::Config("delta-qi needs paths of at least 3 points".into()));
    }
    let path = Arc::new(gen_space(&SpaceSpec::Path { n })?);
    let maps = vec![
        ("identity", SpaceMap::identity(path.clone())),
        ("reversal", SpaceMap::new(path.clone(), path.clone(), (0..n).rev().collect(), MapKind::User)?),
        ("snowflake", SpaceMap::snowflake_identity(path.clone(), 0.5)?),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs: Vec<(usize, usize)> = (0..count)
        .map(|_| {
            let a = rng.random_range(0..n - 1);
            let b = rng.random_range(0..n - 1);
            (a.min(b), a.max(b))
        })
        .collect();
    let mut csv = String::from("map,x1,x2,lhs,rhs,Np,holds\n");
    let mut asserts = Vec::new();
    let mut rows = Vec::new();
    for (name, f) in &maps {
        let row = certified_row(f, lp, r, s)?;
        asserts.push(check(format!("{name} certified"), row.pass, format!("l {} Np {}", row.l, row.n_prime)));
        // the far endpoint of the domain is the boundary
        let boundary = vec![f.images[n - 1]];
        let rep = delta_transport_check(f, &row, p, &boundary, &pairs, ArcPool::default())?;
        for d in &rep.pairs {
            let _ = writeln!(csv, "{name},{},{},{},{},{},{}", d.x1, d.x2, d.lhs, d.rhs, rep.n_prime, d.holds);
        }
        asserts.push(check(format!("{name} transport"), rep.holds, format!("{} pairs", rep.pairs.len())));
        if *name == "identity" {
            let equal = rep.pairs.iter().all(|d| (d.lhs - d.rhs).abs() <= 1e-5 * d.rhs.max(1e-12));
            asserts.push(check("identity sides agree", equal, ""));
        }
        rows.push(json!({ "map": name, "row": row, "report": rep }));
    }
    let data = json!({ "n": n, "p": p, "lp": lp, "R": r, "S": if s.is_finite() { json!(s) } else { Value::Null }, "maps": rows });
    Ok(SuiteReport::new("delta-qi", cfg.seed, asserts, data, csv))
}

/// Exact and greedy edge isoperimetric profiles of small graphs.
fn isoperimetric(cfg: &ExperimentConfig) -> Result<SuiteReport, SuiteError> {
    let cases: Vec<(SpaceSpec, usize, Option<usize>)> = vec![
        (SpaceSpec::Complete { n: 4 }, 1, Some(3)),
        (SpaceSpec::Cycle { n: 6 }, 2, Some(2)),
        (SpaceSpec::Grid { d: 2, n: 4 }, 4, Some(4)),
        (SpaceSpec::Path { n: 10 }, 5, Some(1)),
        (SpaceSpec::Grid { d: 2, n: 3 }, 3, None),
    ];
    let mut csv = String::from("space,v,exact,greedy\n");
    let mut asserts = Vec::new();
    let mut rows = Vec::new();
    for (spec, cited, expected) in &cases {
        let space = gen_space(spec)?;
        let vols: Vec<usize> = (1..=space.len()).collect();
        let exact = isoperimetric_profile(&space, &vols, ProfileMode::Exact)?;
        let greedy = isoperimetric_profile(&space, &vols, ProfileMode::Greedy)?;
        for (e, g) in exact.iter().zip(&greedy) {
            let _ = writeln!(csv, "{},{},{},{}", space.name(), e.0, e.1, g.1);
        }
        let dominated = exact.iter().zip(&greedy).all(|(e, g)| g.1 >= e.1);
        asserts.push(check(format!("{} greedy >= exact", space.name()), dominated, ""));
        if let Some(want) = expected {
            let got = exact[cited - 1].1;
            asserts.push(check(format!("{} I({cited}) = {want}", space.name()), got == *want, format!("got {got}")));
        }
        rows.push(json!({ "space": space.name(), "exact": exact, "greedy": greedy }));
    }
    Ok(SuiteReport::new("isoperimetric", cfg.seed, asserts, json!({ "profiles": rows }), csv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_lists_names() {
        let err = run_suite("nope", &ExperimentConfig::default()).unwrap_err();
        let msg = err.to_string();
        for s in SUITES {
            assert!(msg.contains(s), "{msg}");
        }
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(ExperimentConfig::from_json(r#"{"seed": 3, "n": [8, 16]}"#).is_ok());
        assert!(ExperimentConfig::from_json(r#"{"seeds": 3}"#).is_err());
    }

    #[test]
    fn small_rparabolic_is_deterministic() {
        let cfg = ExperimentConfig { n: Some(vec![8, 16]), ..Default::default() };
        let a = run_suite("rparabolic", &cfg).unwrap();
        let b = run_suite("rparabolic", &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.csv, b.csv);
        assert!(a.csv.starts_with("p,n,value,lower,upper\n1,8,"));
        assert!(a.passed, "{:?}", a.assertions);
    }

    #[test]
    fn isoperimetric_suite_passes() {
        let rep = run_suite("isoperimetric", &ExperimentConfig::default()).unwrap();
        assert!(rep.passed, "{:?}", rep.assertions);
    }
}
