//! Bilevel feasibility. A path is bilevel feasible when some tolls make it a
//! cheapest route, which holds exactly when its base cost equals `g^k` at its
//! tolled-arc incidence. A composition (one path per commodity) is bilevel
//! feasible when its base costs sum to `g` of the aggregate incidence, and
//! the aggregate is strongly bilevel feasible when that decomposition is the
//! only one and the action set is full-dimensional.

use serde::Serialize;

use crate::conjugate::{conjugate_g, conjugate_g_subset, GridIter};
use crate::error::{NppError, Result};
use crate::follower::{add_conservation_rows, extract_path, fill_tollfree, same_value, Reaction};
use crate::instance::Instance;
use crate::lp::{self, LpProblem, Objective, RowSense, Sense, ZERO_TOL};

/// Default cap on the `2^{|A1|}` subset scan per commodity.
pub const DEFAULT_SUBSET_BUDGET: u64 = 1 << 20;

/// A bilevel-feasible simple path of one commodity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub commodity: usize,
    /// Position of the record in its commodity's path set.
    pub id: usize,
    /// Arc ids in travel order.
    pub arcs: Vec<usize>,
    pub base_cost: f64,
    /// Tolled-arc incidence, in toll-index order.
    pub w: Vec<u8>,
}

impl PathRecord {
    pub fn w_f64(&self) -> Vec<f64> {
        self.w.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn reaction(&self, inst: &Instance) -> Reaction {
        Reaction::from_path(inst, self.commodity, &self.arcs)
    }
}

/// Scans every tolled-arc subset for commodity `k`, completes it with
/// toll-free arcs and keeps the completions that are simple paths whose base
/// cost equals `g^k` at that subset.
pub fn enumerate_bf_paths(inst: &Instance, k: usize, budget: u64) -> Result<Vec<PathRecord>> {
    let n1 = inst.num_tolled();
    if n1 >= 63 || (1u64 << n1) > budget {
        return Err(NppError::BudgetExceeded(format!("2^{n1} tolled-arc subsets exceed the cap of {budget}")));
    }
    let mut out: Vec<PathRecord> = Vec::new();
    for w in GridIter::new(n1, 2) {
        let wf: Vec<f64> = w.iter().map(|&v| f64::from(v)).collect();
        let Some((flow, _)) = fill_tollfree(inst, k, &wf)? else {
            continue;
        };
        let required: Vec<bool> = w.iter().map(|&v| v == 1).collect();
        let Some(arcs) = extract_path(inst, k, &flow.flow, Some(&required)) else {
            continue;
        };
        let base_cost: f64 = arcs.iter().map(|&a| inst.arcs()[a].cost).sum();
        let (g_k, _) = conjugate_g_subset(inst, &[k], &wf)?;
        if !same_value(base_cost, g_k) {
            continue;
        }
        let w: Vec<u8> = w.iter().map(|&v| v as u8).collect();
        if out.iter().any(|r| r.w == w && same_value(r.base_cost, base_cost)) {
            continue;
        }
        out.push(PathRecord { commodity: k, id: out.len(), arcs, base_cost, w });
    }
    Ok(out)
}

/// Path sets of every commodity.
pub fn enumerate_all(inst: &Instance, budget: u64) -> Result<Vec<Vec<PathRecord>>> {
    (0..inst.num_commodities()).map(|k| enumerate_bf_paths(inst, k, budget)).collect()
}

fn aggregate(inst: &Instance, paths: &[&PathRecord]) -> Vec<f64> {
    let mut w = vec![0.0; inst.num_tolled()];
    for p in paths {
        for (s, &v) in w.iter_mut().zip(&p.w) {
            *s += f64::from(v);
        }
    }
    w
}

/// Whether the composition (one path per commodity, in commodity order)
/// attains `g` of its aggregate incidence.
pub fn is_bf_composition(inst: &Instance, paths: &[&PathRecord]) -> Result<bool> {
    if paths.len() != inst.num_commodities() || paths.iter().enumerate().any(|(k, p)| p.commodity != k) {
        return Err(NppError::Precondition("a composition needs one path per commodity, in order".into()));
    }
    let total: f64 = paths.iter().map(|p| p.base_cost).sum();
    let (g, _) = conjugate_g(inst, &aggregate(inst, paths))?;
    Ok(same_value(total, g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SbfClass {
    Strong,
    Weak,
    InfeasibleComposition,
}

#[derive(Debug, Clone, Serialize)]
pub struct SbfVerdict {
    pub classification: SbfClass,
    /// Optimal value of the deviation program.
    pub objective: f64,
    /// Alternative flows found by the deviation program (weak or infeasible).
    #[serde(skip)]
    pub certificate: Option<Vec<Reaction>>,
}

/// Strong bilevel feasibility test of a composition over the commodities it
/// lists (a subset is allowed; the others are left out of the program).
///
/// The program maximizes the flow that the listed commodities could move
/// onto tolled arcs outside their own paths, within the aggregate usage and
/// without raising the total base cost.
pub fn sbf_test(inst: &Instance, paths: &[&PathRecord]) -> Result<SbfVerdict> {
    let w = aggregate(inst, paths);
    let total: f64 = paths.iter().map(|p| p.base_cost).sum();
    let mut p = LpProblem::new(Sense::Maximize);
    let mut cols: Vec<Vec<usize>> = Vec::with_capacity(paths.len());
    for path in paths {
        let com = &inst.commodities()[path.commodity];
        let var_of_arc: Vec<Option<usize>> = (0..inst.num_arcs())
            .map(|a| {
                let off_path = inst.toll_index(a).map_or(0.0, |i| 1.0 - f64::from(path.w[i]));
                Some(p.add_var(off_path, 0.0, f64::INFINITY))
            })
            .collect();
        add_conservation_rows(&mut p, inst, com.origin, com.destination, &var_of_arc);
        cols.push(var_of_arc.into_iter().map(Option::unwrap).collect());
    }
    for (i, &a) in inst.tolled_arcs().iter().enumerate() {
        let row: Vec<(usize, f64)> = cols.iter().map(|c| (c[a], 1.0)).collect();
        p.add_row(&row, RowSense::Le, w[i]);
    }
    let mut cost_row = Vec::new();
    for c in &cols {
        for (a, arc) in inst.arcs().iter().enumerate() {
            cost_row.push((c[a], arc.cost));
        }
    }
    p.add_row(&cost_row, RowSense::Le, total);

    // Second stage: least tolled usage on the optimal face, to detect a
    // capacity that can be left slack.
    let mut usage = vec![0.0; p.num_vars()];
    for c in &cols {
        for &a in inst.tolled_arcs() {
            usage[c[a]] = 1.0;
        }
    }
    let (first, second) = lp::lexicographic(&p, &[Objective::minimize(usage)]);
    if !first.is_optimal() || !second.is_optimal() {
        return Err(NppError::Numerical(format!("sbf test ended with status {:?}/{:?}", first.status, second.status)));
    }
    let flows = |sol: &lp::LpSolution| -> Vec<Reaction> {
        paths
            .iter()
            .zip(&cols)
            .map(|(path, c)| Reaction { commodity: path.commodity, flow: c.iter().map(|&j| sol.primal[j]).collect() })
            .collect()
    };
    let subset: Vec<usize> = paths.iter().map(|p| p.commodity).collect();
    let (g, _) = conjugate_g_subset(inst, &subset, &w)?;
    let objective = first.objective.max(0.0);
    let classification = if !same_value(total, g) && total > g {
        SbfClass::InfeasibleComposition
    } else if objective > ZERO_TOL || second.objective < w.iter().sum::<f64>() - 1e-7 {
        // A positive deviation, or a capacity the optimal face can leave slack.
        SbfClass::Weak
    } else {
        SbfClass::Strong
    };
    let certificate = match classification {
        SbfClass::Strong => None,
        _ if objective > ZERO_TOL => Some(flows(&first)),
        _ => Some(flows(&second)),
    };
    Ok(SbfVerdict { classification, objective, certificate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strength {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub strength: Strength,
    /// Binary decompositions attaining `g(w)`, as record ids per commodity
    /// (at most two are collected).
    pub decompositions: Vec<Vec<usize>>,
    /// Outcome of the deviation program when the decomposition is unique.
    pub sbf: Option<SbfVerdict>,
}

/// Classifies an integral aggregate usage `w` as strongly or weakly bilevel
/// feasible by searching its binary decompositions over the path sets.
pub fn classify_w(inst: &Instance, w: &[f64], pathsets: &[Vec<PathRecord>]) -> Result<Classification> {
    if w.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
        return Err(NppError::Precondition(format!("usage vector {w:?} is not a nonnegative integer vector")));
    }
    if pathsets.len() != inst.num_commodities() {
        return Err(NppError::Precondition("one path set per commodity is required".into()));
    }
    let (g, _) = conjugate_g(inst, w)?;
    let target: Vec<i64> = w.iter().map(|&v| v as i64).collect();
    // Cheapest record cost of each suffix of commodities, for pruning.
    let kk = pathsets.len();
    let mut suffix_min = vec![0.0; kk + 1];
    for k in (0..kk).rev() {
        let m = pathsets[k].iter().map(|r| r.base_cost).fold(f64::INFINITY, f64::min);
        suffix_min[k] = suffix_min[k + 1] + m;
    }

    struct Search<'a> {
        sets: &'a [Vec<PathRecord>],
        suffix_min: Vec<f64>,
        g: f64,
        found: Vec<Vec<usize>>,
    }

    fn go(s: &mut Search, k: usize, remaining: &mut Vec<i64>, cost: f64, chosen: &mut Vec<usize>) {
        if s.found.len() >= 2 {
            return;
        }
        let left = (s.sets.len() - k) as i64;
        if remaining.iter().any(|&r| r < 0 || r > left) {
            return;
        }
        let bound = cost + s.suffix_min[k];
        if bound > s.g && !same_value(bound, s.g) {
            return;
        }
        if k == s.sets.len() {
            if same_value(cost, s.g) {
                s.found.push(chosen.clone());
            }
            return;
        }
        for r in 0..s.sets[k].len() {
            let rec = &s.sets[k][r];
            for (x, &v) in remaining.iter_mut().zip(&rec.w) {
                *x -= i64::from(v);
            }
            chosen.push(r);
            go(s, k + 1, remaining, cost + rec.base_cost, chosen);
            chosen.pop();
            for (x, &v) in remaining.iter_mut().zip(&rec.w) {
                *x += i64::from(v);
            }
        }
    }

    let mut search = Search { sets: pathsets, suffix_min, g, found: Vec::new() };
    go(&mut search, 0, &mut target.clone(), 0.0, &mut Vec::new());
    let decompositions = search.found;
    if decompositions.len() != 1 {
        return Ok(Classification { strength: Strength::Weak, decompositions, sbf: None });
    }
    let chosen: Vec<&PathRecord> = decompositions[0].iter().enumerate().map(|(k, &r)| &pathsets[k][r]).collect();
    let verdict = sbf_test(inst, &chosen)?;
    let strength = if verdict.classification == SbfClass::Strong { Strength::Strong } else { Strength::Weak };
    Ok(Classification { strength, decompositions, sbf: Some(verdict) })
}
