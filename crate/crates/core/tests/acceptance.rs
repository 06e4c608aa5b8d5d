//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use npp::bifeas::{classify_w, enumerate_all, sbf_test, PathRecord, Strength, DEFAULT_SUBSET_BUDGET};
use npp::conjugate::{
    action_prices, conjugate_g, conjugate_g_subset, enumerate_table, solve_by_enumeration, EnumerationLimits,
};
use npp::cuts::{closeness_scores, generate_cuts, pair_matrix};
use npp::follower::{follower_cost, Toll};
use npp::instance::{generate_grid, parse, GeneratorConfig};
use npp::lp::{FEAS_TOL, ZERO_TOL};
use npp::milp::{self, branch_and_bound, branch_and_bound_with, build_path_model, Limits, SolveStatus};
use npp::oracle;
use npp::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const TOL: f64 = 1e-6;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: npp::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn example(n: usize) -> Instance {
    parse(&std::fs::read_to_string(data_path(&format!("example{n}.json"))).unwrap()).unwrap()
}

/// Runs the command-line binary and parses its JSON output.
fn cli(args: &[&str]) -> Result<(Value, Duration), String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_npp")).args(args).output().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!("npp {args:?} exited with {}: {}", out.status, String::from_utf8_lossy(&out.stderr)));
    }
    let v = serde_json::from_slice(&out.stdout).map_err(|e| format!("npp {args:?}: bad JSON: {e}"))?;
    Ok((v, elapsed))
}

fn as_f64s(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

fn toll_matches(t: Toll, want: Option<f64>) -> bool {
    match (t, want) {
        (Toll::Unbounded, None) => true,
        (Toll::Finite(v), Some(w)) => close(v, w),
        _ => false,
    }
}

fn tolled_usage(inst: &Instance, path: &[usize]) -> Vec<u8> {
    let mut w = vec![0u8; inst.num_tolled()];
    for &a in path {
        if let Some(i) = inst.toll_index(a) {
            w[i] = 1;
        }
    }
    w
}

fn base_cost(inst: &Instance, path: &[usize]) -> f64 {
    path.iter().map(|&a| inst.arcs()[a].cost).sum()
}

fn max_pairs(inst: &Instance) -> usize {
    let k = inst.num_commodities();
    k * (k - 1) / 2
}

struct Corpus {
    instances: Vec<(String, Instance)>,
}

/// Random grids with at most three tolled arcs and three commodities.
fn small_corpus() -> Result<Corpus, String> {
    let mut instances = Vec::new();
    for i in 0..20u64 {
        let (side, fraction) = if i < 10 { (3, 0.1) } else { (4, 0.06) };
        let k = 2 + (i % 2) as usize;
        let config = GeneratorConfig { tolled_fraction: fraction, ..GeneratorConfig::default() };
        let inst = lib(generate_grid(side, k, 1000 + i, &config))?;
        ensure(inst.num_tolled() <= 3 && inst.num_commodities() <= 3, || format!("grid {i} too large"))?;
        instances.push((format!("L={side} K={k} seed={}", 1000 + i), inst));
    }
    Ok(Corpus { instances })
}

fn criterion1() -> Check {
    let file = data_path("example1.json");
    let file = file.to_str().unwrap();
    for method in ["enum", "milp", "oracle"] {
        let (v, took) = cli(&["solve", file, "--method", method])?;
        let revenue = v["revenue"].as_f64().unwrap_or(f64::NAN);
        ensure(close(revenue, 3.0), || format!("{method}: revenue {revenue}"))?;
        ensure(as_f64s(&v["w"]) == [1.0, 1.0], || format!("{method}: w = {}", v["w"]))?;
        ensure(took < Duration::from_secs(1), || format!("{method}: {took:?}"))?;
    }
    let (v, _) = cli(&["paths", file])?;
    let listed: BTreeSet<(i64, Vec<u8>)> = v[0]["paths"]
        .as_array()
        .ok_or("paths output is not a list")?
        .iter()
        .map(|r| {
            let w = r["w"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap() as u8).collect();
            (r["base_cost"].as_f64().unwrap().round() as i64, w)
        })
        .collect();
    ensure(!listed.contains(&(6, vec![0, 1])), || "bilevel-infeasible path listed".into())?;
    let inst = example(1);
    let all = lib(oracle::simple_paths(&inst, 0, oracle::DEFAULT_PATH_BUDGET))?;
    ensure(all.iter().any(|p| base_cost(&inst, p) == 6.0 && tolled_usage(&inst, p) == [0, 1]), || {
        "graph lacks the path with base cost 6 using only the second tolled arc".into()
    })?;
    let reference: BTreeSet<(i64, Vec<u8>)> = lib(oracle::candidate_paths(&inst, 0, oracle::DEFAULT_PATH_BUDGET))?
        .iter()
        .map(|p| (base_cost(&inst, p) as i64, tolled_usage(&inst, p)))
        .collect();
    ensure(listed == reference, || format!("paths {listed:?} differ from brute force {reference:?}"))?;
    Ok(format!("enum/milp/oracle revenue 3 at w=(1,1); paths {listed:?}"))
}

fn criterion2() -> Check {
    let file = data_path("example2.json");
    let file = file.to_str().unwrap();
    let (v, took) = cli(&["solve", file, "--method", "single-toll"])?;
    ensure(v["revenue"] == 10 && v["t"] == 10, || format!("single-toll output {v}"))?;
    ensure(took < Duration::from_secs(1), || format!("single-toll took {took:?}"))?;
    let (e, _) = cli(&["solve", file, "--method", "enum"])?;
    ensure(e["revenue"] == 10, || format!("enum revenue {}", e["revenue"]))?;
    let o = lib(oracle::solve(&example(2), oracle::DEFAULT_PATH_BUDGET, oracle::DEFAULT_COMBINATION_BUDGET))?;
    ensure(close(o.revenue, 10.0), || format!("oracle revenue {}", o.revenue))?;
    Ok("single-toll R=10 at t=10, enum and oracle agree".into())
}

fn criterion3() -> Check {
    let start = Instant::now();
    let inst = example(3);
    // Reference table (w, revenue, t); None is an unbounded toll.
    let table: [([f64; 2], f64, [Option<f64>; 2]); 9] = [
        ([0.0, 0.0], 0.0, [None, None]),
        ([1.0, 0.0], 5.0, [Some(5.0), None]),
        ([2.0, 0.0], 6.0, [Some(3.0), None]),
        ([0.0, 1.0], 6.0, [None, Some(6.0)]),
        ([1.0, 1.0], 9.0, [Some(4.0), Some(5.0)]),
        ([2.0, 1.0], 13.0, [Some(4.0), Some(5.0)]),
        ([0.0, 2.0], 8.0, [None, Some(4.0)]),
        ([1.0, 2.0], 14.0, [Some(4.0), Some(5.0)]),
        ([2.0, 2.0], 10.0, [Some(2.0), Some(3.0)]),
    ];
    let rows = lib(enumerate_table(&inst, 1_000))?;
    ensure(rows.len() == 9, || format!("{} rows", rows.len()))?;
    for (w, revenue, t) in table {
        let row = rows.iter().find(|r| r.w == w).ok_or_else(|| format!("row {w:?} missing"))?;
        ensure(close(row.revenue, revenue), || format!("w={w:?}: revenue {}", row.revenue))?;
        ensure(toll_matches(row.tolls[0], t[0]) && toll_matches(row.tolls[1], t[1]), || {
            format!("w={w:?}: tolls {:?}", row.tolls)
        })?;
    }
    let best = lib(solve_by_enumeration(&inst, &EnumerationLimits::default()))?;
    ensure(close(best.revenue, 14.0) && best.w == [1, 2], || format!("optimum {} at {:?}", best.revenue, best.w))?;
    ensure(toll_matches(best.tolls[0], Some(4.0)) && toll_matches(best.tolls[1], Some(5.0)), || {
        format!("optimal tolls {:?}", best.tolls)
    })?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    Ok(format!("9 rows match, optimum 14 at w=(1,2) t=(4,5), {took:.0?}"))
}

fn criterion4() -> Check {
    let inst = example(1);
    for (w, want) in
        [([0.0, 1.0], 5.0), ([0.5, 0.5], 3.5), ([0.25, 0.25], 5.0 - 3.0 * 0.25), ([0.75, 0.75], 5.0 - 3.0 * 0.75)]
    {
        let (g, _) = lib(conjugate_g(&inst, &w))?;
        ensure(close(g, want), || format!("g({w:?}) = {g}, want {want}"))?;
    }
    Ok("g(0,1)=5, g(.5,.5)=3.5, g(a,a)=5-3a at a=.25,.75".into())
}

fn criterion5() -> Check {
    let start = Instant::now();
    let classify = |n: usize, w: [f64; 2]| -> Result<_, String> {
        let inst = example(n);
        let sets = lib(enumerate_all(&inst, DEFAULT_SUBSET_BUDGET))?;
        let c = lib(classify_w(&inst, &w, &sets))?;
        Ok((inst, sets, c))
    };
    let (_, _, c) = classify(3, [1.0, 1.0])?;
    ensure(c.strength == Strength::Weak && c.decompositions.is_empty(), || {
        format!("example 3 w=(1,1): {:?} with {} decompositions", c.strength, c.decompositions.len())
    })?;
    let (_, _, c) = classify(3, [1.0, 2.0])?;
    ensure(c.strength == Strength::Strong, || format!("example 3 w=(1,2): {:?}", c.strength))?;
    let (inst, sets, c) = classify(6, [1.0, 1.0])?;
    ensure(c.strength == Strength::Weak && c.decompositions.len() == 2, || {
        format!("example 6 w=(1,1): {:?} with {} decompositions", c.strength, c.decompositions.len())
    })?;
    for d in &c.decompositions {
        let paths: Vec<&PathRecord> = d.iter().enumerate().map(|(k, &p)| &sets[k][p]).collect();
        let v = lib(sbf_test(&inst, &paths))?;
        ensure(v.objective > ZERO_TOL, || format!("example 6 decomposition {d:?}: objective {}", v.objective))?;
    }
    let (inst7, _, c) = classify(7, [1.0, 1.0])?;
    ensure(c.strength == Strength::Weak, || format!("example 7 w=(1,1): {:?}", c.strength))?;
    let a = lib(action_prices(&inst7, &[1.0, 1.0]))?;
    ensure(toll_matches(a.tolls[0], Some(2.0)) && toll_matches(a.tolls[1], Some(3.0)), || {
        format!("example 7 action prices {:?}", a.tolls)
    })?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    Ok(format!("ex3 (1,1) weak, ex3 (1,2) strong, ex6 (1,1) weak, ex7 (1,1) weak with t=(2,3), {took:.0?}"))
}

struct Solved {
    revenue: f64,
    nodes: u64,
}

fn milp_run(inst: &Instance, n: usize) -> Result<Solved, String> {
    let r = lib(milp::solve(inst, n, &Limits::default()))?;
    ensure(r.status == SolveStatus::Optimal, || format!("status {:?}", r.status))?;
    Ok(Solved { revenue: r.revenue, nodes: r.nodes })
}

fn criterion6(corpus: &Corpus) -> Check {
    let start = Instant::now();
    let mut positive = 0;
    for (name, inst) in &corpus.instances {
        let o = lib(oracle::solve(inst, oracle::DEFAULT_PATH_BUDGET, oracle::DEFAULT_COMBINATION_BUDGET))?.revenue;
        let e = lib(solve_by_enumeration(inst, &EnumerationLimits::default()))?.revenue;
        let b0 = milp_run(inst, 0)?.revenue;
        let bn = milp_run(inst, max_pairs(inst))?.revenue;
        ensure(close(o, e) && close(o, b0) && close(o, bn), || {
            format!("{name}: oracle {o} enum {e} milp {b0} milp+cuts {bn}")
        })?;
        positive += usize::from(o > TOL);
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(120), || format!("took {took:?}"))?;
    Ok(format!(
        "{} grids ({positive} with positive revenue) agree across four solvers, {took:.1?}",
        corpus.instances.len()
    ))
}

/// Path pairs of two commodities that are not the unique cheapest way to
/// reach their combined tolled-arc usage, found by brute force over simple
/// paths.
type UsagePairs = BTreeSet<(Vec<u8>, Vec<u8>)>;

fn brute_force_incompatible(inst: &Instance, ki: usize, kj: usize) -> Result<UsagePairs, String> {
    let cands = |k| -> Result<Vec<(f64, Vec<u8>)>, String> {
        let paths = lib(oracle::candidate_paths(inst, k, oracle::DEFAULT_PATH_BUDGET))?;
        Ok(paths.iter().map(|p| (base_cost(inst, p), tolled_usage(inst, p))).collect())
    };
    let (pi, pj) = (cands(ki)?, cands(kj)?);
    let sum = |a: &[u8], b: &[u8]| -> Vec<u8> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
    let mut out = BTreeSet::new();
    for (bp, wp) in &pi {
        for (bq, wq) in &pj {
            let w = sum(wp, wq);
            let rivals = pi
                .iter()
                .flat_map(|p| pj.iter().map(move |q| (p, q)))
                .filter(|(p, q)| sum(&p.1, &q.1) == w && p.0 + q.0 <= bp + bq + TOL)
                .count();
            if rivals > 1 {
                out.insert((wp.clone(), wq.clone()));
            }
        }
    }
    Ok(out)
}

fn criterion7(corpus: &Corpus) -> Check {
    let mut named: Vec<(String, Instance)> = corpus.instances.clone();
    named.push(("example 3".into(), example(3)));
    named.push(("example 6".into(), example(6)));
    let mut cut_count = 0;
    for (name, inst) in &named {
        let sets = lib(enumerate_all(inst, DEFAULT_SUBSET_BUDGET))?;
        let pool = lib(generate_cuts(inst, &sets, max_pairs(inst)))?;
        for cut in &pool.cuts {
            for &p in &cut.p_hat {
                for &q in &cut.q_hat {
                    let v = lib(sbf_test(inst, &[&sets[cut.k_i][p], &sets[cut.k_j][q]]))?;
                    ensure(v.objective > ZERO_TOL, || format!("{name}: cut pair ({p},{q}) objective {}", v.objective))?;
                }
            }
        }
        cut_count += pool.cuts.len();
        if name.starts_with("example") {
            let plain = milp_run(inst, 0)?;
            let cut = milp_run(inst, max_pairs(inst))?;
            ensure(close(plain.revenue, cut.revenue), || {
                format!("{name}: revenue {} without cuts, {} with", plain.revenue, cut.revenue)
            })?;
            if name == "example 6" {
                ensure(cut.nodes <= plain.nodes, || format!("example 6 nodes {} > {}", cut.nodes, plain.nodes))?;
                let m = lib(pair_matrix(inst, 0, 1, &sets))?;
                let mut flagged = BTreeSet::new();
                for (p, row) in m.h.iter().enumerate() {
                    for (q, &hit) in row.iter().enumerate() {
                        if hit {
                            flagged.insert((sets[0][p].w.clone(), sets[1][q].w.clone()));
                        }
                    }
                }
                let reference = brute_force_incompatible(inst, 0, 1)?;
                ensure(flagged == reference, || format!("example 6 flags {flagged:?}, brute force {reference:?}"))?;
            }
        }
    }
    Ok(format!("{cut_count} cuts over {} instances, every covered pair has positive deviation", named.len()))
}

fn dot(t: &[Toll], w: &[f64]) -> f64 {
    t.iter().zip(w).map(|(t, &w)| if w == 0.0 { 0.0 } else { t.finite().unwrap_or(f64::INFINITY) * w }).sum()
}

fn criterion8(corpus: &Corpus) -> Check {
    let mut insts: Vec<Instance> = vec![example(1), example(3), example(7)];
    insts.extend(corpus.instances.iter().map(|(_, i)| i.clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pairings = 0;
    for inst in &insts {
        for row in lib(enumerate_table(inst, 10_000))? {
            let f = lib(follower_cost(inst, &row.tolls))?;
            let rhs = dot(&row.tolls, &row.w) + row.g_value;
            ensure((f - rhs).abs() <= TOL, || format!("pairing at w={:?}: f={f}, t.w+g={rhs}", row.w))?;
            pairings += 1;
        }
    }
    let random_pick = |rng: &mut ChaCha8Rng| &insts[rng.gen_range(0..insts.len())];
    for _ in 0..100 {
        let inst = random_pick(&mut rng);
        let n = inst.num_tolled();
        let t1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..20.0)).collect();
        let t2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..20.0)).collect();
        let mid: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| 0.5 * (a + b)).collect();
        let f = |t: &[f64]| lib(follower_cost(inst, &t.iter().map(|&v| Toll::Finite(v)).collect::<Vec<_>>()));
        let (f1, f2, fm) = (f(&t1)?, f(&t2)?, f(&mid)?);
        ensure(fm >= 0.5 * (f1 + f2) - TOL, || format!("concavity fails between {t1:?} and {t2:?}"))?;
    }
    for _ in 0..100 {
        let inst = random_pick(&mut rng);
        let (n, k) = (inst.num_tolled(), inst.num_commodities() as f64);
        let w1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=k)).collect();
        let w2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=k)).collect();
        let lambda: f64 = rng.gen_range(0.0..=1.0);
        let mix: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let g = |w: &[f64]| lib(conjugate_g(inst, w)).map(|(v, _)| v);
        let (g1, g2, gm) = (g(&w1)?, g(&w2)?, g(&mix)?);
        ensure(gm <= lambda * g1 + (1.0 - lambda) * g2 + TOL, || format!("convexity fails at {w1:?}, {w2:?}"))?;
    }
    for _ in 0..100 {
        let inst = random_pick(&mut rng);
        let n = inst.num_tolled();
        let parts: Vec<Vec<f64>> =
            (0..inst.num_commodities()).map(|_| (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect()).collect();
        let total: Vec<f64> = (0..n).map(|i| parts.iter().map(|p| p[i]).sum()).collect();
        let (g, _) = lib(conjugate_g(inst, &total))?;
        let mut split = 0.0;
        for (k, part) in parts.iter().enumerate() {
            split += lib(conjugate_g_subset(inst, &[k], part))?.0;
        }
        ensure(g <= split + TOL, || format!("subadditivity fails: g={g} > {split}"))?;
    }
    let mut leaves = 0;
    for inst in &insts {
        let sets = lib(enumerate_all(inst, DEFAULT_SUBSET_BUDGET))?;
        let pool = lib(generate_cuts(inst, &sets, max_pairs(inst)))?;
        let model = lib(build_path_model(inst, &sets, &pool))?;
        let mut worst: f64 = 0.0;
        lib(branch_and_bound_with(&model, &Limits::default(), &mut |pt| {
            leaves += 1;
            worst = worst.max(pt.product_error).max(pt.violation - FEAS_TOL);
        }))?;
        ensure(worst <= TOL, || format!("McCormick error {worst} at an integral leaf"))?;
    }
    Ok(format!("{pairings} pairings, 3x100 random convexity checks, {leaves} integral leaves exact"))
}

fn criterion9() -> Check {
    let config = GeneratorConfig { tolled_fraction: 0.1, ..GeneratorConfig::default() };
    let (mut plain_nodes, mut cut_nodes) = (0u64, 0u64);
    let runs = 10;
    for seed in 0..runs {
        let inst = lib(generate_grid(4, 12, 2000 + seed, &config))?;
        let sets = lib(enumerate_all(&inst, DEFAULT_SUBSET_BUDGET))?;
        let plain =
            lib(branch_and_bound(&lib(build_path_model(&inst, &sets, &Default::default()))?, &Limits::default()))?;
        let pool = lib(generate_cuts(&inst, &sets, closeness_scores(&sets).len()))?;
        let cut = lib(branch_and_bound(&lib(build_path_model(&inst, &sets, &pool))?, &Limits::default()))?;
        ensure(plain.status == SolveStatus::Optimal && cut.status == SolveStatus::Optimal, || {
            format!("seed {}: not solved", 2000 + seed)
        })?;
        ensure(close(plain.revenue, cut.revenue), || {
            format!("seed {}: revenue {} vs {} with cuts", 2000 + seed, plain.revenue, cut.revenue)
        })?;
        plain_nodes += plain.nodes;
        cut_nodes += cut.nodes;
    }
    let (mp, mc) = (plain_nodes as f64 / runs as f64, cut_nodes as f64 / runs as f64);
    ensure(mc <= mp, || format!("mean nodes {mc} with cuts > {mp} without"))?;
    Ok(format!("L=4 K=12, {runs} grids: mean nodes {mc:.1} with all cuts vs {mp:.1} without, optima unchanged"))
}

fn main() {
    let corpus = small_corpus();
    let with_corpus = |f: fn(&Corpus) -> Check| -> Check {
        match &corpus {
            Ok(c) => f(c),
            Err(e) => Err(format!("corpus: {e}")),
        }
    };
    let results: Vec<(&str, Check)> = vec![
        ("1 example 1 exactness", criterion1()),
        ("2 single toll", criterion2()),
        ("3 enumeration table", criterion3()),
        ("4 conjugate values", criterion4()),
        ("5 strong/weak classification", criterion5()),
        ("6 oracle equivalence", with_corpus(criterion6)),
        ("7 cut soundness", with_corpus(criterion7)),
        ("8 analytic invariants", with_corpus(criterion8)),
        ("9 cut effect at scale", criterion9()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("PASS criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
