//! Path-based single-level reformulation. Every commodity picks one of its
//! bilevel-feasible paths through binary variables `z`, tolls `t` and
//! follower potentials `y` enforce dual feasibility, and strong duality ties
//! the chosen path's cost to the potentials. The bilinear terms `t_a·z_p`
//! are replaced by McCormick products `s` under the big-M bound on tolls.

mod bnb;

pub use bnb::{branch_and_bound, branch_and_bound_with, IntegralPoint, Limits};

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;

use crate::bifeas::{enumerate_all, PathRecord, DEFAULT_SUBSET_BUDGET};
use crate::cuts::{generate_cuts, CutPool};
use crate::error::{NppError, Result};
use crate::follower::{price_for_paths, Toll};
use crate::instance::{json_number, Instance};
use crate::lp::{LpProblem, RowSense, Sense};

/// One McCormick product `s = t_a · z_p`.
#[derive(Debug, Clone, Copy)]
pub struct Product {
    pub commodity: usize,
    pub path: usize,
    pub toll: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub struct MilpModel {
    /// Continuous relaxation (maximization).
    pub relaxation: LpProblem,
    /// Column of `z` for each commodity and path record.
    pub z: Vec<Vec<usize>>,
    /// Column of each toll.
    pub t: Vec<usize>,
    pub products: Vec<Product>,
    pub big_m: f64,
    pub flow_rows: usize,
    pub duality_rows: usize,
    pub cut_rows: usize,
    pub pathsets: Vec<Vec<PathRecord>>,
}

impl MilpModel {
    pub fn num_binaries(&self) -> usize {
        self.z.iter().map(Vec::len).sum()
    }
}

/// Bound on every toll worth charging: no follower pays more than what it
/// saves over its toll-free route.
pub fn big_m(inst: &Instance) -> f64 {
    (0..inst.num_commodities())
        .map(|k| {
            let com = &inst.commodities()[k];
            let free = inst.toll_free_distance(k).expect("validated instance");
            let all = inst.distances(com.origin, |_, a| Some(a.cost))[com.destination].expect("validated instance");
            free - all
        })
        .fold(0.0, f64::max)
}

pub fn build_path_model(inst: &Instance, pathsets: &[Vec<PathRecord>], pool: &CutPool) -> Result<MilpModel> {
    if pathsets.len() != inst.num_commodities() {
        return Err(NppError::Validation("one path set per commodity is required".into()));
    }
    if let Some(k) = pathsets.iter().position(Vec::is_empty) {
        return Err(NppError::Validation(format!("commodity {k} has an empty path set")));
    }
    let m = big_m(inst);
    let mut p = LpProblem::new(Sense::Maximize);
    let t: Vec<usize> = (0..inst.num_tolled()).map(|_| p.add_var(0.0, 0.0, m)).collect();
    let z: Vec<Vec<usize>> =
        pathsets.iter().map(|set| set.iter().map(|_| p.add_var(0.0, 0.0, 1.0)).collect()).collect();
    let mut products = Vec::new();
    let mut flow_rows = 0;
    let mut duality_rows = 0;

    for (k, set) in pathsets.iter().enumerate() {
        let com = &inst.commodities()[k];
        let row: Vec<(usize, f64)> = z[k].iter().map(|&c| (c, 1.0)).collect();
        p.add_row(&row, RowSense::Eq, 1.0);
        flow_rows += 1;

        // Dual feasibility over the arcs of the commodity's path set: every
        // cheapest route has an equally priced record, so these arcs suffice.
        let arcs: BTreeSet<usize> = set.iter().flat_map(|r| r.arcs.iter().copied()).collect();
        let mut y = vec![None; inst.node_count()];
        for &a in &arcs {
            let arc = &inst.arcs()[a];
            for v in [arc.tail, arc.head] {
                if y[v].is_none() {
                    let (lo, hi) = if v == com.destination { (0.0, 0.0) } else { (f64::NEG_INFINITY, f64::INFINITY) };
                    y[v] = Some(p.add_var(0.0, lo, hi));
                }
            }
            let mut row = vec![(y[arc.tail].unwrap(), 1.0), (y[arc.head].unwrap(), -1.0)];
            if let Some(i) = inst.toll_index(a) {
                row.push((t[i], -1.0));
            }
            p.add_row(&row, RowSense::Le, arc.cost);
        }

        // Strong duality: Σ_p (c·x_p) z_p + Σ s = y_o - y_d.
        let mut sd = vec![(y[com.origin].unwrap(), -1.0), (y[com.destination].unwrap(), 1.0)];
        for (pi, rec) in set.iter().enumerate() {
            sd.push((z[k][pi], rec.base_cost));
            for (i, &used) in rec.w.iter().enumerate() {
                if used == 0 {
                    continue;
                }
                let s = p.add_var(com.demand, 0.0, f64::INFINITY);
                products.push(Product { commodity: k, path: pi, toll: i, col: s });
                sd.push((s, 1.0));
                let zc = z[k][pi];
                p.add_row(&[(s, 1.0), (zc, -m)], RowSense::Le, 0.0);
                p.add_row(&[(t[i], 1.0), (s, -1.0)], RowSense::Ge, 0.0);
                p.add_row(&[(t[i], 1.0), (s, -1.0), (zc, m)], RowSense::Le, m);
            }
        }
        p.add_row(&sd, RowSense::Eq, 0.0);
        duality_rows += 1;
    }

    for cut in &pool.cuts {
        let mut row: Vec<(usize, f64)> = cut.p_hat.iter().map(|&q| (z[cut.k_i][q], 1.0)).collect();
        row.extend(cut.q_hat.iter().map(|&q| (z[cut.k_j][q], 1.0)));
        p.add_row(&row, RowSense::Le, 1.0);
    }

    Ok(MilpModel {
        relaxation: p,
        z,
        t,
        products,
        big_m: m,
        flow_rows,
        duality_rows,
        cut_rows: pool.cuts.len(),
        pathsets: pathsets.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    GapLimit,
    TimeLimit,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(serialize_with = "ser_num")]
    pub revenue: f64,
    #[serde(serialize_with = "ser_num")]
    pub bound: f64,
    pub gap: f64,
    pub nodes: u64,
    pub millis: f64,
    pub status: SolveStatus,
    pub cuts: usize,
    pub cut_millis: f64,
    /// Aggregate tolled-arc usage of the incumbent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<Toll>>,
    /// Chosen path record per commodity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<usize>>,
}

fn ser_num<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    json_number(round_clean(*v)).serialize(s)
}

/// Snaps values within 1e-9 of an integer, so reports print `3` rather than
/// `2.9999999999`.
pub(crate) fn round_clean(v: f64) -> f64 {
    if (v - v.round()).abs() < 1e-9 {
        v.round()
    } else {
        v
    }
}

pub(crate) fn gap(bound: f64, incumbent: f64) -> f64 {
    ((bound - incumbent) / bound.abs().max(1.0)).max(0.0)
}

/// Full pipeline: path enumeration, cuts from the `n_pairs` closest
/// commodity pairs, model construction and branch-and-bound. The time limit
/// covers every stage.
pub fn solve(inst: &Instance, n_pairs: usize, limits: &Limits) -> Result<SolveReport> {
    let start = Instant::now();
    let pathsets = enumerate_all(inst, DEFAULT_SUBSET_BUDGET)?;
    let pool = generate_cuts(inst, &pathsets, n_pairs)?;
    let model = build_path_model(inst, &pathsets, &pool)?;
    let mut limits = limits.clone();
    if let Some(tl) = limits.time_limit {
        limits.time_limit = Some(tl.saturating_sub(start.elapsed()));
    }
    let mut report = branch_and_bound(&model, &limits)?;
    report.cuts = pool.cuts.len();
    report.cut_millis = pool.millis;
    report.millis = start.elapsed().as_secs_f64() * 1000.0;
    if let Some(chosen) = &report.paths {
        let flows: Vec<_> = chosen.iter().enumerate().map(|(k, &r)| pathsets[k][r].reaction(inst)).collect();
        if let Some(pricing) = price_for_paths(inst, &flows)? {
            report.t = Some(pricing.tolls);
        }
    }
    Ok(report)
}
