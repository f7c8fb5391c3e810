//! End-to-end acceptance checks. Runs without the libtest harness so each
//! criterion prints exactly one PASS/FAIL line.
//!
//! Two criteria do not hold at desk scale (see `KNOWN_FAILURES` and the
//! README). They are still computed in full and reported as FAIL; the process
//! exits nonzero only when some other criterion fails, or when a known
//! failure unexpectedly passes so the list can be updated.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use lsconf::maps::{certify_conformal, horospherical_fixture, poincare_model, CertVerdict, CertifyOptions, ConformalClass};
use lsconf::packing::{is_packing, max_weight_packing, OracleMode};
use lsconf::space::{gen_space, Ball, FiniteMetricSpace, SpaceSpec};
use lsconf::suite::{run_suite, ExperimentConfig, SuiteReport, SUITES};
use lsconf::varprob::{capacity, isoperimetric_profile, modulus, CapacityProblem, CurveFamily, ModulusProblem, ProfileMode, SolveTrace};

const KNOWN_FAILURES: [u32; 2] = [4, 5];
const TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Suite reports kept for the determinism rerun.
type Reports = BTreeMap<&'static str, SuiteReport>;

fn suite(reports: &mut Reports, name: &'static str) -> SuiteReport {
    let rep = run_suite(name, &ExperimentConfig::default()).unwrap_or_else(|e| panic!("suite {name}: {e}"));
    reports.insert(name, rep.clone());
    rep
}

fn failed_assertions(rep: &SuiteReport) -> Vec<String> {
    rep.assertions.iter().filter(|a| !a.pass).map(|a| format!("{} ({})", a.name, a.detail)).collect()
}

fn space(spec: SpaceSpec) -> FiniteMetricSpace {
    gen_space(&spec).unwrap()
}

// ---- 1: exact packing oracle against subset enumeration

fn scaled_members(s: &FiniteMetricSpace, b: &Ball, l: f64) -> Vec<bool> {
    s.points().map(|x| s.dist(b.center, x) <= l * b.radius + TOL).collect()
}

fn brute_force_packing(s: &FiniteMetricSpace, balls: &[Ball], w: &[f64], l: f64) -> f64 {
    let sets: Vec<Vec<bool>> = balls.iter().map(|b| scaled_members(s, b, l)).collect();
    let meets = |i: usize, j: usize| sets[i].iter().zip(&sets[j]).any(|(a, b)| *a && *b);
    let mut best = 0.0f64;
    for mask in 0u32..(1 << balls.len()) {
        let idx: Vec<usize> = (0..balls.len()).filter(|&i| mask >> i & 1 == 1).collect();
        let ok = idx.iter().enumerate().all(|(a, &i)| idx[a + 1..].iter().all(|&j| !meets(i, j)));
        if ok {
            best = best.max(idx.iter().map(|&i| w[i]).sum());
        }
    }
    best
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let spaces = [
        space(SpaceSpec::Path { n: 14 }),
        space(SpaceSpec::Cycle { n: 12 }),
        space(SpaceSpec::Grid { d: 2, n: 5 }),
        space(SpaceSpec::Tree { arity: 2, depth: 3 }),
        space(SpaceSpec::Complete { n: 6 }),
    ];
    let mut mismatches = Vec::new();
    let instances = 200;
    for k in 0..instances {
        let s = &spaces[k % spaces.len()];
        let count = rng.random_range(1..=12);
        let balls: Vec<Ball> =
            (0..count).map(|_| Ball::new(rng.random_range(0..s.len()), [0.0, 1.0, 1.5, 2.0][rng.random_range(0..4)])).collect();
        let w: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..10.0)).collect();
        let l = [1.0, 1.5, 2.0, 3.0][rng.random_range(0..4)];
        let (packing, value) = max_weight_packing(s, &balls, &w, l, 0.0, f64::INFINITY, OracleMode::Exact).unwrap();
        let want = brute_force_packing(s, &balls, &w, l);
        let valid = is_packing(s, &packing.balls, l, 0.0, f64::INFINITY).valid;
        if (value - want).abs() > 1e-9 * want.max(1.0) || !valid {
            mismatches.push(format!("instance {k}: oracle {value}, enumeration {want}, valid {valid}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches.is_empty() && secs < 60.0,
        format!("{instances} instances, {} mismatches, {secs:.2}s {}", mismatches.len(), mismatches.first().cloned().unwrap_or_default()),
    )
}

// ---- 2: greedy <= exact <= covering bound, and the ramp value

fn ramp_by_enumeration() -> f64 {
    // u(i) = i on path(7), unit balls, l = 1, p = 1.
    let n = 7i64;
    let ball = |c: i64| ((c - 1).max(0), (c + 1).min(n - 1));
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let chosen: Vec<(i64, i64)> = (0..n).filter(|&c| mask >> c & 1 == 1).map(ball).collect();
        let disjoint = chosen.iter().enumerate().all(|(a, x)| chosen[a + 1..].iter().all(|y| x.1 < y.0 || y.1 < x.0));
        if disjoint {
            best = best.max(chosen.iter().map(|(lo, hi)| (hi - lo) as f64).sum());
        }
    }
    best
}

fn criterion_2(reports: &mut Reports) -> Outcome {
    let rep = suite(reports, "onepacking-bracket");
    let want = ramp_by_enumeration();
    let got = rep.data["ramp"].as_f64();
    let rows = rep.data["spaces"].as_array().unwrap();
    let all_ordered = rows.iter().all(|r| r["ordered"] == r["trials"] && r["trials"].as_u64() == Some(100));
    let names: Vec<&str> = rows.iter().filter_map(|r| r["space"].as_str()).collect();
    let covers = (7..=15).all(|n| names.contains(&format!("path({n})").as_str()));
    outcome(
        all_ordered && covers && rows.len() == 12 && got == Some(want) && want == 4.0,
        format!("{} spaces x 100 u ordered: {all_ordered}; ramp {got:?} vs enumeration {want}", rows.len()),
    )
}

// ---- 3: basepoint capacity on paths

fn probe_values(rep: &SuiteReport, p: f64) -> Vec<f64> {
    let probe = rep.data["probes"].as_array().unwrap().iter().find(|x| x["p"].as_f64() == Some(p)).unwrap();
    probe["report"]["rows"].as_array().unwrap().iter().map(|r| r["value"].as_f64().unwrap()).collect()
}

fn criterion_3(reports: &mut Reports) -> Outcome {
    let start = Instant::now();
    let rep = suite(reports, "rparabolic");
    let secs = start.elapsed().as_secs_f64();
    let two = probe_values(&rep, 2.0);
    let one = probe_values(&rep, 1.0);
    let decreasing = two.windows(2).all(|w| w[1] < w[0]);
    let ratio = two[3] / two[0];
    let (lo, hi) = one.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let variation = (hi - lo) / hi;
    outcome(
        decreasing && ratio <= 0.6 && variation < 0.1 && secs < 300.0,
        format!("p=2 {two:.5?} ratio {ratio:.4}; p=1 variation {variation:.4}; {secs:.1}s"),
    )
}

// ---- 4: energy of the sin-loglog test function on grid balls

fn criterion_4(reports: &mut Reports) -> Outcome {
    let rep = suite(reports, "parabolicnc");
    let rows = rep.data["rows"].as_array().unwrap();
    // exact when available, else both ends of the bracket
    let value = |r: &Value, end: &str| r["exact"].as_f64().or_else(|| r[end].as_f64()).unwrap();
    let mut factors = Vec::new();
    for w in rows.windows(2) {
        let steps = (w[1]["n"].as_f64().unwrap() / w[0]["n"].as_f64().unwrap()).log2();
        for end in ["lower", "upper"] {
            factors.push((value(&w[1], end) / value(&w[0], end)).powf(1.0 / steps));
        }
    }
    let worst = factors.iter().copied().fold(0.0, f64::max);
    outcome(worst < 1.2, format!("per-doubling factors {factors:.4?}, worst {worst:.4}"))
}

// ---- 5: triple-logarithm inequality

/// `v(t) = log|log|log t||` with no plateau.
fn v(log_inv_t: f64) -> f64 {
    log_inv_t.ln().abs().ln()
}

fn criterion_5(reports: &mut Reports) -> Outcome {
    let start = Instant::now();
    let rep = suite(reports, "twisted-r1");
    let secs = start.elapsed().as_secs_f64();
    let rows = rep.data["rows"].as_array().unwrap();
    let mut parts = Vec::new();
    let mut confirmed = true;
    for r in rows {
        let l = r["l"].as_f64().unwrap();
        parts.push(format!("l={l}: {} violations, worst ratio {:.2}", r["violations"], r["worstRatio"].as_f64().unwrap()));
        if let Some(first) = r["firstViolation"].as_object() {
            // recheck the reported counterexample independently
            let (ta, tb) = (first["logInvA"].as_f64().unwrap(), first["logInvB"].as_f64().unwrap());
            let r1 = ((l - 1.0) / l).min(l.powi(-2)).min((-std::f64::consts::E.powi(2)).exp());
            let hyp = tb >= -r1.ln() * (1.0 - 1e-12) && ta - tb >= (l / (l - 1.0)).ln() * (1.0 - 1e-12);
            let plateau = |t: f64| v(t.max(-r1.ln()));
            let lhs = plateau(ta) - plateau(tb - l.ln());
            confirmed &= hyp && lhs > 16.0 * (plateau(ta) - plateau(tb));
        }
    }
    let samples_ok = rows.len() == 4 && rows.iter().all(|r| r["samples"].as_u64() == Some(100_000));
    let violations = rep.data["violations"].as_u64().unwrap();
    outcome(
        samples_ok && violations == 0 && secs < 30.0,
        format!("{}; counterexamples confirmed {confirmed}; {secs:.1}s", parts.join("; ")),
    )
}

// ---- 6: energy transport under identity, snowflake and quasi-isometric embedding

fn criterion_6(reports: &mut Reports) -> Outcome {
    let rep = suite(reports, "energy-functorial");
    let lp = rep.data["lp"].as_f64().unwrap();
    let maps = rep.data["maps"].as_array().unwrap();
    let mut parts = Vec::new();
    let mut ok = maps.len() == 3;
    for m in maps {
        let (held, trials) = (m["held"].as_u64().unwrap(), m["trials"].as_u64().unwrap());
        let l = m["row"]["l"].as_f64().unwrap();
        ok &= held == trials && trials == 50 && m["row"]["pass"] == true;
        if m["map"] == "snowflake" {
            ok &= (l - lp * lp).abs() < 1e-9;
        }
        parts.push(format!("{} {held}/{trials} at l={l}", m["map"].as_str().unwrap()));
    }
    outcome(ok, format!("lp={lp}: {}", parts.join(", ")))
}

// ---- 7: horospherical projection is not large-scale conformal

fn criterion_7() -> Outcome {
    let f = horospherical_fixture(200).unwrap();
    let opts = CertifyOptions { l_max: 3.0, ..CertifyOptions::default() };
    let windows = [(2.0, 2.0), (4.0, 4.0), (8.0, 8.0)];
    let cert = certify_conformal(&f, ConformalClass::LargeScale, &[1.0], 1.0, &windows, &opts).unwrap();
    let ls: Vec<f64> = cert.rows.iter().map(|r| r.l).collect();
    let increasing = ls.len() == 3 && ls.windows(2).all(|w| w[1] > w[0]);
    let witness_ok = cert.witness.as_ref().is_some_and(|w| {
        let domain_packing = is_packing(&f.domain, &w.balls, w.l, 2.0, 8.0).valid;
        let cod = &f.codomain;
        let shared = cod.points().any(|y| w.images.iter().filter(|b| cod.dist(b.center, y) <= w.lp * b.radius + TOL).count() > 1);
        let images_match = w.balls.iter().zip(&w.images).all(|(b, im)| f.canonical_image(b, 1.0) == *im);
        domain_packing && shared && images_match && w.l <= opts.l_max
    });
    outcome(
        increasing && cert.verdict == CertVerdict::Falsified && witness_ok,
        format!("least l for R=2,4,8: {ls:?}; verdict {:?}; witness valid {witness_ok}", cert.verdict),
    )
}

// ---- 8: Poincare model inclusions on the binary tree

fn criterion_8(reports: &mut Reports) -> Outcome {
    let tree = space(SpaceSpec::Tree { arity: 2, depth: 8 });
    let (_, rep) = poincare_model(&tree, 3.0).unwrap();
    let smallest = rep.smallest_passing_threshold;
    suite(reports, "poincare-inclusions");
    outcome(
        rep.pass_rate == 1.0 && smallest.is_some_and(|t| t <= 3.0),
        format!("{}/{} balls of radius >= 3 pass; smallest passing threshold {smallest:?}", rep.passed, rep.checked),
    )
}

// ---- 9: solver traces

fn trace_ok(t: &SolveTrace) -> bool {
    t.converged && t.gap <= 1e-6 && t.dual.len() == t.primal.len() && t.dual.iter().zip(&t.primal).all(|(d, p)| *d <= p * (1.0 + 1e-12) + 1e-15)
}

fn criterion_9() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for p in [1.0, 2.0] {
        for n in [8, 16, 32, 64] {
            let s = space(SpaceSpec::Path { n: n + 1 });
            let res = capacity(&s, &CapacityProblem::new(vec![0], vec![n], p, 2.0, 1.0, 1.0)).unwrap();
            checked += 1;
            if !trace_ok(&res.trace) {
                bad.push(format!("capacity p={p} n={n} gap {}", res.trace.gap));
            }
        }
    }
    let grid = space(SpaceSpec::Grid { d: 2, n: 4 });
    let rows: Vec<Vec<usize>> = (0..4).map(|i| (0..4).map(|j| i * 4 + j).collect()).collect();
    let path = space(SpaceSpec::Path { n: 9 });
    let instances = [(grid, CurveFamily::new(rows)), (path, CurveFamily::new(vec![(0..9).collect()]))];
    for (s, family) in &instances {
        for p in [1.0, 2.0] {
            let res = modulus(s, family, &ModulusProblem::new(p, 2.0, 1.0, 1.0)).unwrap();
            checked += 1;
            if !trace_ok(&res.trace) {
                bad.push(format!("modulus {} p={p} gap {}", s.name(), res.trace.gap));
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} solves, {} bad {}", bad.len(), bad.join("; ")))
}

// ---- 10: isoperimetric profile against enumeration

fn brute_force_profile(s: &FiniteMetricSpace) -> Vec<usize> {
    let n = s.len();
    let mut best = vec![usize::MAX; n + 1];
    for mask in 0u32..(1 << n) {
        let inside = |x: usize| mask >> x & 1 == 1;
        let cut = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).filter(|&(x, y)| inside(x) && !inside(y) && s.dist(x, y) == 1.0).count();
        let v = mask.count_ones() as usize;
        best[v] = best[v].min(cut);
    }
    best
}

fn criterion_10(reports: &mut Reports) -> Outcome {
    let cases = [(space(SpaceSpec::Complete { n: 4 }), 1, 3), (space(SpaceSpec::Cycle { n: 6 }), 2, 2), (space(SpaceSpec::Grid { d: 2, n: 4 }), 4, 4)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (s, v, cited) in &cases {
        let volumes: Vec<usize> = (1..s.len()).collect();
        let exact = isoperimetric_profile(s, &volumes, ProfileMode::Exact).unwrap();
        let greedy = isoperimetric_profile(s, &volumes, ProfileMode::Greedy).unwrap();
        let brute = brute_force_profile(s);
        let matches = exact.iter().all(|&(v, i)| brute[v] == i);
        let dominated = exact.iter().zip(&greedy).all(|(e, g)| e.0 == g.0 && g.1 >= e.1);
        let at = exact.iter().find(|e| e.0 == *v).map(|e| e.1);
        ok &= matches && dominated && at == Some(*cited) && brute[*v] == *cited;
        parts.push(format!("{} I({v})={at:?}", s.name()));
    }
    let rep = suite(reports, "isoperimetric");
    let failed = failed_assertions(&rep);
    ok &= failed.is_empty();
    outcome(ok, format!("{}; suite failures {failed:?}", parts.join(", ")))
}

// ---- 11: byte-identical reruns

fn criterion_11(reports: &mut Reports) -> Outcome {
    for name in SUITES {
        if !reports.contains_key(name) {
            suite(reports, name);
        }
    }
    let differing: Vec<&str> = SUITES
        .iter()
        .copied()
        .filter(|name| {
            let again = run_suite(name, &ExperimentConfig::default()).unwrap();
            again.to_json() != reports[name].to_json() || again.csv != reports[name].csv
        })
        .collect();
    outcome(differing.is_empty(), format!("{} suites rerun, differing {differing:?}", SUITES.len()))
}

fn main() -> ExitCode {
    // `cargo test -- <filter>` passes arguments; only run on a plain invocation
    // or when the filter names this target.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }
    let mut reports = Reports::new();
    let criteria: Vec<(u32, &str, Box<dyn FnOnce(&mut Reports) -> Outcome>)> = vec![
        (1, "exact packing oracle matches enumeration", Box::new(|_| criterion_1())),
        (2, "energy bracket and ramp value", Box::new(criterion_2)),
        (3, "path capacities decrease for p=2, flat for p=1", Box::new(criterion_3)),
        (4, "sin-loglog energy bounded per doubling", Box::new(criterion_4)),
        (5, "triple-log inequality without violations", Box::new(criterion_5)),
        (6, "energy transport under three maps", Box::new(criterion_6)),
        (7, "horospherical map falsified with witness", Box::new(|_| criterion_7())),
        (8, "Poincare inclusions from threshold <= 3", Box::new(criterion_8)),
        (9, "solver gap and weak duality", Box::new(|_| criterion_9())),
        (10, "isoperimetric profile matches enumeration", Box::new(criterion_10)),
        (11, "suite reruns are byte-identical", Box::new(criterion_11)),
    ];
    let mut unexpected = Vec::new();
    let total = Instant::now();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run(&mut reports);
        let took = Duration::from_secs_f64(start.elapsed().as_secs_f64());
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {tag}: {name} [{took:.1?}] {}", o.detail);
        if o.pass == known {
            unexpected.push(id);
        }
    }
    println!("acceptance finished in {:.1?}", total.elapsed());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcomes for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
