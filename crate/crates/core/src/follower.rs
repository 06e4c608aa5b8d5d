//! Follower side: shortest paths under tolls with the optimistic tie-break,
//! the follower cost function, completing a tolled-arc choice with toll-free
//! arcs, pricing a fixed set of paths, and reaction-plot sampling.

use std::fmt::Write as _;

use serde::{Serialize, Serializer};

use crate::error::{NppError, Result};
use crate::instance::Instance;
use crate::lp::{self, LpProblem, LpStatus, Objective, RowSense, Sense, DUALITY_GAP_TOL, ZERO_TOL};

/// Price of one tolled arc. `Unbounded` deletes the arc for every follower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Toll {
    Finite(f64),
    Unbounded,
}

impl Toll {
    pub fn is_unbounded(self) -> bool {
        matches!(self, Toll::Unbounded)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Toll::Finite(v) => Some(v),
            Toll::Unbounded => None,
        }
    }

    /// Maps a capped LP value back to a toll, treating the cap as infinity.
    pub(crate) fn from_capped(value: f64, cap: f64) -> Toll {
        if cap - value <= ZERO_TOL * cap.max(1.0) {
            Toll::Unbounded
        } else {
            Toll::Finite(value.max(0.0))
        }
    }
}

impl Serialize for Toll {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Toll::Finite(v) => crate::instance::json_number(*v).serialize(s),
            Toll::Unbounded => s.serialize_str("inf"),
        }
    }
}

/// Flow of one commodity, indexed by arc id.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub commodity: usize,
    pub flow: Vec<f64>,
}

impl Reaction {
    pub fn from_path(inst: &Instance, commodity: usize, arcs: &[usize]) -> Self {
        let mut flow = vec![0.0; inst.num_arcs()];
        for &a in arcs {
            flow[a] += 1.0;
        }
        Reaction { commodity, flow }
    }

    /// Usage of each tolled arc, in toll-index order.
    pub fn tolled_usage(&self, inst: &Instance) -> Vec<f64> {
        inst.tolled_arcs().iter().map(|&a| self.flow[a]).collect()
    }

    pub fn base_cost(&self, inst: &Instance) -> f64 {
        inst.arcs().iter().zip(&self.flow).map(|(a, x)| a.cost * x).sum()
    }
}

/// A follower's chosen route under a toll vector.
#[derive(Debug, Clone)]
pub struct RouteChoice {
    pub reaction: Reaction,
    /// Arc ids in travel order.
    pub path: Vec<usize>,
    /// Base cost plus tolls paid along the path.
    pub cost: f64,
    /// Tolls paid along the path.
    pub revenue: f64,
}

fn check_tolls(inst: &Instance, t: &[Toll]) -> Result<()> {
    if t.len() != inst.num_tolled() {
        return Err(NppError::Precondition(format!(
            "toll vector has {} entries, instance has {} tolled arcs",
            t.len(),
            inst.num_tolled()
        )));
    }
    if let Some(i) = t.iter().position(|v| v.finite().is_some_and(|x| x < 0.0 || !x.is_finite())) {
        return Err(NppError::Precondition(format!("toll {} is negative or not finite", i + 1)));
    }
    Ok(())
}

/// Cost of arc `a` under `t`, or `None` when its toll is unbounded.
fn arc_weight(inst: &Instance, t: &[Toll], a: usize) -> Option<f64> {
    let arc = &inst.arcs()[a];
    match inst.toll_index(a) {
        None => Some(arc.cost),
        Some(i) => t[i].finite().map(|v| arc.cost + v),
    }
}

/// Adds one flow-conservation row per node for a unit of flow from
/// `origin` to `destination`; `var_of_arc[a]` is the LP column of arc `a`.
pub(crate) fn add_conservation_rows(
    p: &mut LpProblem,
    inst: &Instance,
    origin: usize,
    destination: usize,
    var_of_arc: &[Option<usize>],
) {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); inst.node_count()];
    for (a, arc) in inst.arcs().iter().enumerate() {
        if let Some(col) = var_of_arc[a] {
            rows[arc.tail].push((col, 1.0));
            rows[arc.head].push((col, -1.0));
        }
    }
    for (v, row) in rows.iter().enumerate() {
        let b = if v == origin {
            1.0
        } else if v == destination {
            -1.0
        } else {
            0.0
        };
        p.add_row(row, RowSense::Eq, b);
    }
}

fn lp_error(what: &str, status: LpStatus) -> NppError {
    NppError::Numerical(format!("{what}: LP ended with status {status:?}"))
}

/// Simple origin-destination path inside the support of `flow`, found by a
/// depth-first search that visits arcs in id order. Among the paths whose
/// tolled arcs are exactly `required` (when given), the cheapest is returned.
pub(crate) fn extract_path(inst: &Instance, k: usize, flow: &[f64], required: Option<&[bool]>) -> Option<Vec<usize>> {
    let com = &inst.commodities()[k];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); inst.node_count()];
    for (a, arc) in inst.arcs().iter().enumerate() {
        if flow[a] > 1e-6 {
            out[arc.tail].push(a);
        }
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut visited = vec![false; inst.node_count()];
    let mut path = Vec::new();
    let mut budget = 100_000usize;

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        inst: &Instance,
        v: usize,
        dest: usize,
        out: &[Vec<usize>],
        visited: &mut [bool],
        path: &mut Vec<usize>,
        required: Option<&[bool]>,
        best: &mut Option<(f64, Vec<usize>)>,
        budget: &mut usize,
    ) {
        if *budget == 0 {
            return;
        }
        *budget -= 1;
        if v == dest {
            let ok = required.is_none_or(|req| {
                let mut used = vec![false; req.len()];
                for &a in path.iter() {
                    if let Some(i) = inst.toll_index(a) {
                        used[i] = true;
                    }
                }
                used == req
            });
            if ok {
                let cost: f64 = path.iter().map(|&a| inst.arcs()[a].cost).sum();
                if best.as_ref().is_none_or(|(c, _)| cost < c - ZERO_TOL) {
                    *best = Some((cost, path.clone()));
                }
            }
            return;
        }
        visited[v] = true;
        for &a in &out[v] {
            let h = inst.arcs()[a].head;
            if !visited[h] {
                path.push(a);
                dfs(inst, h, dest, out, visited, path, required, best, budget);
                path.pop();
            }
        }
        visited[v] = false;
    }

    dfs(inst, com.origin, com.destination, &out, &mut visited, &mut path, required, &mut best, &mut budget);
    best.map(|(_, p)| p)
}

/// Shortest route of commodity `k` under `t`; ties between cheapest routes
/// are broken toward the highest toll revenue.
pub fn shortest_path(inst: &Instance, k: usize, t: &[Toll]) -> Result<RouteChoice> {
    check_tolls(inst, t)?;
    let com = &inst.commodities()[k];
    let dist = inst.distances(com.origin, |a, _| arc_weight(inst, t, a));
    let best = dist[com.destination].ok_or_else(|| NppError::Validation(format!("commodity {k} has no path")))?;

    let mut p = LpProblem::new(Sense::Minimize);
    let mut var_of_arc = vec![None; inst.num_arcs()];
    let mut revenue_coefs = Vec::new();
    for a in 0..inst.num_arcs() {
        if let Some(w) = arc_weight(inst, t, a) {
            var_of_arc[a] = Some(p.add_var(w, 0.0, 1.0));
            revenue_coefs.push(w - inst.arcs()[a].cost);
        }
    }
    add_conservation_rows(&mut p, inst, com.origin, com.destination, &var_of_arc);
    let sol = lp::solve_with_fixed_value(&p, best, &Objective::maximize(revenue_coefs))?;
    if !sol.is_optimal() {
        return Err(lp_error("optimistic shortest path", sol.status));
    }
    let mut flow = vec![0.0; inst.num_arcs()];
    for a in 0..inst.num_arcs() {
        if let Some(col) = var_of_arc[a] {
            flow[a] = sol.primal[col];
        }
    }
    let path = extract_path(inst, k, &flow, None)
        .ok_or_else(|| NppError::Numerical(format!("no path in the flow support of commodity {k}")))?;
    let cost = path.iter().map(|&a| arc_weight(inst, t, a).unwrap()).sum();
    let revenue = path.iter().filter_map(|&a| inst.toll_index(a).and_then(|i| t[i].finite())).sum();
    Ok(RouteChoice { reaction: Reaction::from_path(inst, k, &path), path, cost, revenue })
}

/// Cost of the cheapest route of commodity `k` under `t`.
pub fn commodity_cost(inst: &Instance, k: usize, t: &[Toll]) -> Result<f64> {
    check_tolls(inst, t)?;
    let com = &inst.commodities()[k];
    let dist = inst.distances(com.origin, |a, _| arc_weight(inst, t, a));
    dist[com.destination].ok_or_else(|| NppError::Validation(format!("commodity {k} has no path")))
}

/// Total follower cost `Σ_k η^k · (cheapest route cost of k)`.
pub fn follower_cost(inst: &Instance, t: &[Toll]) -> Result<f64> {
    let mut total = 0.0;
    for (k, com) in inst.commodities().iter().enumerate() {
        total += com.demand * commodity_cost(inst, k, t)?;
    }
    Ok(total)
}

/// Completes a tolled-arc choice `w_k` of commodity `k` with the cheapest
/// toll-free arcs. Returns `None` when no completion exists.
pub fn fill_tollfree(inst: &Instance, k: usize, w_k: &[f64]) -> Result<Option<(Reaction, f64)>> {
    if w_k.len() != inst.num_tolled() {
        return Err(NppError::Precondition(format!(
            "usage vector has {} entries, instance has {} tolled arcs",
            w_k.len(),
            inst.num_tolled()
        )));
    }
    let com = &inst.commodities()[k];
    let mut p = LpProblem::new(Sense::Minimize);
    let var_of_arc: Vec<Option<usize>> = inst
        .arcs()
        .iter()
        .enumerate()
        .map(|(a, arc)| match inst.toll_index(a) {
            Some(i) => Some(p.add_var(arc.cost, w_k[i], w_k[i])),
            None => Some(p.add_var(arc.cost, 0.0, f64::INFINITY)),
        })
        .collect();
    add_conservation_rows(&mut p, inst, com.origin, com.destination, &var_of_arc);
    let sol = lp::solve(&p);
    match sol.status {
        LpStatus::Optimal => {
            let flow = sol.primal.clone();
            Ok(Some((Reaction { commodity: k, flow }, sol.objective)))
        }
        LpStatus::Infeasible => Ok(None),
        s => Err(lp_error("toll-free completion", s)),
    }
}

/// Tolls priced for a fixed composition of follower flows.
#[derive(Debug, Clone)]
pub struct Pricing {
    pub tolls: Vec<Toll>,
    pub revenue: f64,
}

/// Largest revenue `Σ_k η^k t·x^k` over tolls that make every given flow a
/// cheapest route for its commodity. `None` when no such tolls exist.
/// Tolled arcs that no flow uses and that can be priced out of every route
/// are reported as unbounded.
pub fn price_for_paths(inst: &Instance, flows: &[Reaction]) -> Result<Option<Pricing>> {
    if flows.len() != inst.num_commodities() {
        return Err(NppError::Precondition(format!(
            "{} flows given for {} commodities",
            flows.len(),
            inst.num_commodities()
        )));
    }
    let n1 = inst.num_tolled();
    let cap = inst.toll_cap();
    let mut p = LpProblem::new(Sense::Maximize);
    let t_var: Vec<usize> = (0..n1).map(|_| p.add_var(0.0, 0.0, cap)).collect();
    let mut revenue = vec![0.0; n1];
    let mut used = vec![false; n1];
    for (k, x) in flows.iter().enumerate() {
        let com = &inst.commodities()[k];
        let y: Vec<usize> = (0..inst.node_count())
            .map(|v| {
                if v == com.destination {
                    p.add_var(0.0, 0.0, 0.0)
                } else {
                    p.add_var(0.0, f64::NEG_INFINITY, f64::INFINITY)
                }
            })
            .collect();
        // Dual feasibility: y_tail - y_head - t_a <= c_a.
        for (a, arc) in inst.arcs().iter().enumerate() {
            let mut row = vec![(y[arc.tail], 1.0), (y[arc.head], -1.0)];
            if let Some(i) = inst.toll_index(a) {
                row.push((t_var[i], -1.0));
            }
            p.add_row(&row, RowSense::Le, arc.cost);
        }
        // Strong duality: (c + t)·x = y_o - y_d.
        let mut row = vec![(y[com.origin], -1.0), (y[com.destination], 1.0)];
        for (i, &a) in inst.tolled_arcs().iter().enumerate() {
            let xa = x.flow[a];
            if xa != 0.0 {
                row.push((t_var[i], xa));
                revenue[i] += com.demand * xa;
                used[i] = true;
            }
        }
        p.add_row(&row, RowSense::Eq, -x.base_cost(inst));
    }
    let mut objective = vec![0.0; p.num_vars()];
    for i in 0..n1 {
        objective[t_var[i]] = revenue[i];
    }
    p.set_objective(objective);
    let mut push_unused = vec![0.0; p.num_vars()];
    for i in 0..n1 {
        if !used[i] {
            push_unused[t_var[i]] = 1.0;
        }
    }
    let (first, last) = lp::lexicographic(&p, &[Objective::maximize(push_unused)]);
    match first.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Ok(None),
        s => return Err(lp_error("pricing", s)),
    }
    if !last.is_optimal() {
        return Err(lp_error("pricing (unused arcs)", last.status));
    }
    let tolls: Vec<Toll> = t_var.iter().map(|&c| Toll::from_capped(last.primal[c], cap)).collect();
    let revenue = tolls.iter().zip(&revenue).map(|(t, r)| t.finite().map_or(0.0, |v| v * r)).sum();
    Ok(Some(Pricing { tolls, revenue }))
}

/// One sampled reaction: the toll grid point, the commodity (`None` for the
/// aggregate row) and its tolled-arc usage.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSample {
    pub t: Vec<f64>,
    pub commodity: Option<usize>,
    pub w: Vec<u32>,
}

/// Samples follower reactions on a regular grid over `bounds`, one axis per
/// tolled arc, with the last axis varying fastest.
pub fn reaction_plot_sample(inst: &Instance, bounds: &[(f64, f64)], resolution: usize) -> Result<Vec<PlotSample>> {
    let n = inst.num_tolled();
    if bounds.len() != n {
        return Err(NppError::Precondition(format!("{} axis ranges given for {n} tolled arcs", bounds.len())));
    }
    if resolution < 2 {
        return Err(NppError::Precondition("resolution must be at least 2".into()));
    }
    let total = resolution
        .checked_pow(n as u32)
        .filter(|&v| v <= 10_000_000)
        .ok_or_else(|| NppError::BudgetExceeded(format!("{resolution}^{n} grid points")))?;
    let axis = |i: usize, step: usize| {
        let (lo, hi) = bounds[i];
        lo + (hi - lo) * step as f64 / (resolution - 1) as f64
    };
    let mut out = Vec::with_capacity(total * (inst.num_commodities() + 1));
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let t: Vec<f64> = (0..n).map(|i| axis(i, idx[i])).collect();
        let tolls: Vec<Toll> = t.iter().map(|&v| Toll::Finite(v)).collect();
        let mut agg = vec![0u32; n];
        for k in 0..inst.num_commodities() {
            let choice = shortest_path(inst, k, &tolls)?;
            let w: Vec<u32> = choice.reaction.tolled_usage(inst).iter().map(|v| v.round() as u32).collect();
            for (s, v) in agg.iter_mut().zip(&w) {
                *s += v;
            }
            out.push(PlotSample { t: t.clone(), commodity: Some(k), w });
        }
        out.push(PlotSample { t, commodity: None, w: agg });
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < resolution {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(out)
}

/// CSV rendering with header `t_1,...,t_n,k,w_1,...,w_n`; aggregate rows use
/// `k = -1`.
pub fn plot_csv(n_tolled: usize, samples: &[PlotSample]) -> String {
    let mut s = String::new();
    let t_cols: Vec<String> = (1..=n_tolled).map(|i| format!("t_{i}")).collect();
    let w_cols: Vec<String> = (1..=n_tolled).map(|i| format!("w_{i}")).collect();
    let _ = writeln!(s, "{}", [t_cols, vec!["k".to_string()], w_cols].concat().join(","));
    for row in samples {
        let mut fields: Vec<String> = row.t.iter().map(|v| format!("{v}")).collect();
        fields.push(row.commodity.map_or("-1".to_string(), |k| k.to_string()));
        fields.extend(row.w.iter().map(|v| v.to_string()));
        let _ = writeln!(s, "{}", fields.join(","));
    }
    s
}

/// Whether two optimal values agree within the duality-gap tolerance.
pub(crate) fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= DUALITY_GAP_TOL * a.abs().max(b.abs()).max(1.0)
}
