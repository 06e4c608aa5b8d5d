//! Brute-force reference solver for small instances.
//!
//! Lists every simple origin-destination path of each commodity, keeps the
//! cheapest path per set of tolled arcs, drops classes that no toll vector
//! makes optimal for their commodity, then prices every combination of one
//! class per commodity and keeps the best.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{NppError, Result};
use crate::follower::{price_for_paths, Reaction, Toll};
use crate::instance::Instance;
use crate::lp::DUALITY_GAP_TOL;

pub const DEFAULT_PATH_BUDGET: usize = 100_000;
pub const DEFAULT_COMBINATION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub revenue: f64,
    pub t: Vec<Toll>,
    /// Arcs of the chosen path per commodity.
    pub paths: Vec<Vec<usize>>,
    pub w: Vec<u32>,
    pub combinations: u64,
}

/// All simple paths from the commodity's origin to its destination, in the
/// order a depth-first search over arc ids finds them.
pub fn simple_paths(inst: &Instance, k: usize, budget: usize) -> Result<Vec<Vec<usize>>> {
    let com = &inst.commodities()[k];
    let mut out_arcs = vec![Vec::new(); inst.node_count()];
    for (a, arc) in inst.arcs().iter().enumerate() {
        out_arcs[arc.tail].push(a);
    }
    let mut paths = Vec::new();
    let mut on_path = vec![false; inst.node_count()];
    let mut stack = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        inst: &Instance,
        v: usize,
        dest: usize,
        out_arcs: &[Vec<usize>],
        on_path: &mut [bool],
        stack: &mut Vec<usize>,
        paths: &mut Vec<Vec<usize>>,
        budget: usize,
    ) -> bool {
        if v == dest {
            paths.push(stack.clone());
            return paths.len() <= budget;
        }
        on_path[v] = true;
        for &a in &out_arcs[v] {
            let h = inst.arcs()[a].head;
            if on_path[h] {
                continue;
            }
            stack.push(a);
            let ok = dfs(inst, h, dest, out_arcs, on_path, stack, paths, budget);
            stack.pop();
            if !ok {
                return false;
            }
        }
        on_path[v] = false;
        true
    }
    if !dfs(inst, com.origin, com.destination, &out_arcs, &mut on_path, &mut stack, &mut paths, budget) {
        return Err(NppError::BudgetExceeded(format!("commodity {k} has more than {budget} simple paths")));
    }
    Ok(paths)
}

/// Cheapest path per tolled-arc set that some toll vector makes optimal for
/// the commodity on its own.
pub fn candidate_paths(inst: &Instance, k: usize, budget: usize) -> Result<Vec<Vec<usize>>> {
    let mut classes: BTreeMap<Vec<bool>, (f64, Vec<usize>)> = BTreeMap::new();
    for path in simple_paths(inst, k, budget)? {
        let mut key = vec![false; inst.num_tolled()];
        let mut cost = 0.0;
        for &a in &path {
            cost += inst.arcs()[a].cost;
            if let Some(i) = inst.toll_index(a) {
                key[i] = true;
            }
        }
        match classes.get(&key) {
            Some((c, p)) if *c < cost || (*c == cost && *p <= path) => {}
            _ => {
                classes.insert(key, (cost, path));
            }
        }
    }
    let alone = Instance::new(inst.node_count(), inst.arcs().to_vec(), vec![inst.commodities()[k].clone()])?;
    let mut out = Vec::new();
    for (_, (_, path)) in classes {
        if price_for_paths(&alone, &[Reaction::from_path(&alone, 0, &path)])?.is_some() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn solve(inst: &Instance, path_budget: usize, combination_budget: u64) -> Result<OracleResult> {
    let candidates: Vec<Vec<Vec<usize>>> =
        (0..inst.num_commodities()).map(|k| candidate_paths(inst, k, path_budget)).collect::<Result<_>>()?;
    let total = candidates.iter().try_fold(1u64, |acc, c| acc.checked_mul(c.len() as u64));
    match total {
        Some(n) if n <= combination_budget => {}
        _ => return Err(NppError::BudgetExceeded(format!("path combinations exceed the cap of {combination_budget}"))),
    }
    let mut best: Option<(f64, Vec<Toll>, Vec<usize>)> = None;
    let mut pick = vec![0usize; candidates.len()];
    let mut combinations = 0u64;
    'search: loop {
        combinations += 1;
        let flows: Vec<Reaction> =
            pick.iter().enumerate().map(|(k, &i)| Reaction::from_path(inst, k, &candidates[k][i])).collect();
        if let Some(pricing) = price_for_paths(inst, &flows)? {
            let better = match &best {
                None => true,
                Some((r, _, _)) => pricing.revenue > r + DUALITY_GAP_TOL * r.abs().max(1.0),
            };
            if better {
                best = Some((pricing.revenue, pricing.tolls, pick.clone()));
            }
        }
        // Odometer over the choices, last commodity fastest.
        let mut k = pick.len();
        loop {
            if k == 0 {
                break 'search;
            }
            k -= 1;
            pick[k] += 1;
            if pick[k] < candidates[k].len() {
                break;
            }
            pick[k] = 0;
        }
    }
    let (revenue, t, pick) = best.ok_or_else(|| NppError::Numerical("no priceable path combination".into()))?;
    let paths: Vec<Vec<usize>> = pick.iter().enumerate().map(|(k, &i)| candidates[k][i].clone()).collect();
    let mut w = vec![0u32; inst.num_tolled()];
    for path in &paths {
        for &a in path {
            if let Some(i) = inst.toll_index(a) {
                w[i] += 1;
            }
        }
    }
    Ok(OracleResult { revenue, t, paths, w, combinations })
}
