//! Branch-and-bound over the path-choice binaries.

use std::time::{Duration, Instant};

use super::{gap, MilpModel, SolveReport, SolveStatus};
use crate::error::{NppError, Result};
use crate::lp::{solve, LpStatus, DUALITY_GAP_TOL};

const INTEGRAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct Limits {
    pub time_limit: Option<Duration>,
    /// Relative gap at which the search stops early.
    pub gap: f64,
}

/// An integral relaxation solution met during the search.
#[derive(Debug, Clone)]
pub struct IntegralPoint {
    /// Chosen path record per commodity.
    pub paths: Vec<usize>,
    pub tolls: Vec<f64>,
    pub revenue: f64,
    /// Largest `|s - t·z|` over the McCormick products.
    pub product_error: f64,
    /// Largest row or bound violation of the relaxation solution.
    pub violation: f64,
}

struct Node {
    fixings: Vec<(usize, f64)>,
    bound: f64,
    id: u64,
}

pub fn branch_and_bound(model: &MilpModel, limits: &Limits) -> Result<SolveReport> {
    branch_and_bound_with(model, limits, &mut |_| {})
}

/// Depth-first (up branch first) until an incumbent exists, best bound after.
/// Branches on the most fractional `z`, ties broken by commodity then path.
pub fn branch_and_bound_with(
    model: &MilpModel,
    limits: &Limits,
    observer: &mut dyn FnMut(&IntegralPoint),
) -> Result<SolveReport> {
    let start = Instant::now();
    let deadline = limits.time_limit.map(|d| start + d);
    let mut lp = model.relaxation.clone();
    let z_cols: Vec<(usize, usize, usize)> = model
        .z
        .iter()
        .enumerate()
        .flat_map(|(k, cols)| cols.iter().enumerate().map(move |(p, &c)| (k, p, c)))
        .collect();

    let mut open = vec![Node { fixings: Vec::new(), bound: f64::INFINITY, id: 0 }];
    let mut next_id = 1;
    let mut incumbent: Option<(f64, Vec<usize>)> = None;
    let mut nodes = 0u64;
    let mut status = SolveStatus::Optimal;

    while !open.is_empty() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            status = SolveStatus::TimeLimit;
            break;
        }
        if let Some((inc, _)) = &incumbent {
            let bound = open.iter().map(|n| n.bound).fold(*inc, f64::max);
            if limits.gap > 0.0 && gap(bound, *inc) <= limits.gap {
                status = SolveStatus::GapLimit;
                break;
            }
        }
        let idx = match incumbent {
            None => open.len() - 1,
            Some(_) => {
                let mut best = 0;
                for (i, n) in open.iter().enumerate() {
                    let b = &open[best];
                    if n.bound > b.bound || (n.bound == b.bound && n.id > b.id) {
                        best = i;
                    }
                }
                best
            }
        };
        let node = open.swap_remove(idx);
        if let Some((inc, _)) = &incumbent {
            if node.bound <= inc + prune_tol(*inc) {
                continue;
            }
        }
        nodes += 1;

        for &(_, _, c) in &z_cols {
            lp.set_bounds(c, 0.0, 1.0);
        }
        for &(c, v) in &node.fixings {
            lp.set_bounds(c, v, v);
        }
        let sol = solve(&lp);
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(NppError::Numerical("relaxation is unbounded".into())),
            LpStatus::NumericalFailure => {
                return Err(NppError::Numerical("relaxation solve failed".into()));
            }
        }
        let value = sol.objective;
        if let Some((inc, _)) = &incumbent {
            if value <= inc + prune_tol(*inc) {
                continue;
            }
        }

        let mut branch: Option<(f64, usize)> = None;
        for &(_, _, c) in &z_cols {
            let x = sol.primal[c];
            let frac = x - x.floor();
            let dist = frac.min(1.0 - frac);
            if dist > INTEGRAL_TOL && branch.is_none_or(|(d, _)| dist > d) {
                branch = Some((dist, c));
            }
        }
        match branch {
            None => {
                let paths: Vec<usize> = model
                    .z
                    .iter()
                    .map(|cols| {
                        cols.iter()
                            .enumerate()
                            .max_by(|a, b| sol.primal[*a.1].total_cmp(&sol.primal[*b.1]).then(b.0.cmp(&a.0)))
                            .map(|(p, _)| p)
                            .expect("non-empty path set")
                    })
                    .collect();
                let tolls: Vec<f64> = model.t.iter().map(|&c| sol.primal[c]).collect();
                let product_error = model
                    .products
                    .iter()
                    .map(|pr| (sol.primal[pr.col] - tolls[pr.toll] * sol.primal[model.z[pr.commodity][pr.path]]).abs())
                    .fold(0.0, f64::max);
                observer(&IntegralPoint {
                    paths: paths.clone(),
                    tolls,
                    revenue: value,
                    product_error,
                    violation: lp.max_violation(&sol.primal),
                });
                incumbent = Some((value, paths));
            }
            Some((_, c)) => {
                for v in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((c, v));
                    open.push(Node { fixings, bound: value, id: next_id });
                    next_id += 1;
                }
            }
        }
    }

    let (revenue, paths) = match &incumbent {
        Some((v, p)) => (*v, Some(p.clone())),
        None => (0.0, None),
    };
    let bound = match status {
        SolveStatus::Optimal => revenue,
        _ => open.iter().map(|n| n.bound).fold(revenue, f64::max),
    };
    let w = paths.as_ref().map(|chosen| {
        let mut w = vec![0u32; model.t.len()];
        for (k, &p) in chosen.iter().enumerate() {
            for (i, &u) in model.pathsets[k][p].w.iter().enumerate() {
                w[i] += u32::from(u);
            }
        }
        w
    });
    Ok(SolveReport {
        revenue,
        bound,
        gap: gap(bound, revenue),
        nodes,
        millis: start.elapsed().as_secs_f64() * 1000.0,
        status,
        cuts: model.cut_rows,
        cut_millis: 0.0,
        w,
        t: None,
        paths,
    })
}

fn prune_tol(incumbent: f64) -> f64 {
    DUALITY_GAP_TOL * incumbent.abs().max(1.0)
}
