//! The conjugate model. For an aggregate tolled-arc usage `w`, `g(w)` is the
//! cheapest total base cost of routing every commodity with tolled-arc
//! capacities `w`, and the action set `T(w)` holds the tolls at which the
//! followers' cost equals `t·w + g(w)`. The leader's problem becomes a search
//! over `w`, which is exact on the integer grid `{0..|K|}^{|A1|}` for unit
//! demands.
//!
//! The conjugate-side computations treat every commodity as one unit of
//! flow; demands only enter the follower cost, the MILP and the oracle.

use std::time::Instant;

use serde::Serialize;

use crate::error::{NppError, Result};
use crate::follower::{add_conservation_rows, Reaction, Toll};
use crate::instance::Instance;
use crate::lp::{self, LpProblem, LpStatus, Objective, RowSense, Sense, DUALITY_GAP_TOL};

/// Default cap on the number of grid cells visited by the enumeration solver.
pub const DEFAULT_GRID_BUDGET: u64 = 1_000_000;

/// A point of the conjugate model together with a price vector from its
/// action set.
#[derive(Debug, Clone, Serialize)]
pub struct ConjugateSolution {
    pub w: Vec<f64>,
    pub g_value: f64,
    pub tolls: Vec<Toll>,
    pub revenue: f64,
    #[serde(skip)]
    pub decomposition: Vec<Reaction>,
}

fn check_w(inst: &Instance, w: &[f64]) -> Result<()> {
    if w.len() != inst.num_tolled() {
        return Err(NppError::Precondition(format!(
            "usage vector has {} entries, instance has {} tolled arcs",
            w.len(),
            inst.num_tolled()
        )));
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(NppError::Precondition("usage vector must be finite and nonnegative".into()));
    }
    Ok(())
}

/// `g` restricted to the commodities in `subset`: the cheapest total base
/// cost of routing them with `Σ_k x^k_a ≤ w_a` on every tolled arc.
/// Returns the value and one flow per listed commodity.
pub fn conjugate_g_subset(inst: &Instance, subset: &[usize], w: &[f64]) -> Result<(f64, Vec<Reaction>)> {
    check_w(inst, w)?;
    let m = inst.num_arcs();
    let mut p = LpProblem::new(Sense::Minimize);
    let mut cols: Vec<Vec<Option<usize>>> = Vec::with_capacity(subset.len());
    for &k in subset {
        let com = &inst.commodities()[k];
        let var_of_arc: Vec<Option<usize>> =
            inst.arcs().iter().map(|arc| Some(p.add_var(arc.cost, 0.0, f64::INFINITY))).collect();
        add_conservation_rows(&mut p, inst, com.origin, com.destination, &var_of_arc);
        cols.push(var_of_arc);
    }
    for (i, &a) in inst.tolled_arcs().iter().enumerate() {
        let row: Vec<(usize, f64)> = cols.iter().map(|c| (c[a].unwrap(), 1.0)).collect();
        p.add_row(&row, RowSense::Le, w[i]);
    }
    let sol = lp::solve(&p);
    if !sol.is_optimal() {
        return Err(NppError::Numerical(format!("conjugate program ended with status {:?}", sol.status)));
    }
    let flows = subset
        .iter()
        .zip(&cols)
        .map(|(&k, c)| Reaction { commodity: k, flow: (0..m).map(|a| sol.primal[c[a].unwrap()]).collect() })
        .collect();
    Ok((sol.objective, flows))
}

/// `g(w)` over all commodities, with a minimizing decomposition.
pub fn conjugate_g(inst: &Instance, w: &[f64]) -> Result<(f64, Vec<Reaction>)> {
    let all: Vec<usize> = (0..inst.num_commodities()).collect();
    conjugate_g_subset(inst, &all, w)
}

/// Adds dual variables `y^k` (potentials with `y_d = 0`) and the rows
/// `y_tail - y_head - t_a ≤ c_a` for commodity `k`, where the toll of arc `a`
/// is given by the columns `toll_terms(i)` for tolled index `i`, plus the
/// constant `shift(i)` moved to the right-hand side. Returns the columns of
/// `y^k`.
fn add_dual_block(
    p: &mut LpProblem,
    inst: &Instance,
    k: usize,
    toll_terms: &dyn Fn(usize) -> Vec<(usize, f64)>,
    shift: &dyn Fn(usize) -> f64,
) -> Vec<usize> {
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
    for (a, arc) in inst.arcs().iter().enumerate() {
        let mut row = vec![(y[arc.tail], 1.0), (y[arc.head], -1.0)];
        let mut rhs = arc.cost;
        if let Some(i) = inst.toll_index(a) {
            for (col, coef) in toll_terms(i) {
                row.push((col, -coef));
            }
            rhs += shift(i);
        }
        p.add_row(&row, RowSense::Le, rhs);
    }
    y
}

/// Solves the conjugate follower program for `w` and picks, among the
/// optimal tolls, one maximizing the revenue `w·t`; tolls on arcs with
/// `w_a = 0` that can grow without limit are reported unbounded.
pub fn action_prices(inst: &Instance, w: &[f64]) -> Result<ConjugateSolution> {
    check_w(inst, w)?;
    let n1 = inst.num_tolled();
    let cap = inst.toll_cap();
    let mut p = LpProblem::new(Sense::Maximize);
    let t: Vec<usize> = (0..n1).map(|i| p.add_var(-w[i], 0.0, cap)).collect();
    for k in 0..inst.num_commodities() {
        let com = &inst.commodities()[k];
        let y = add_dual_block(&mut p, inst, k, &|i| vec![(t[i], 1.0)], &|_| 0.0);
        let mut obj = p.objective().to_vec();
        obj[y[com.origin]] += 1.0;
        p.set_objective(obj);
    }
    let nv = p.num_vars();
    let mut revenue = vec![0.0; nv];
    let mut idle = vec![0.0; nv];
    for i in 0..n1 {
        revenue[t[i]] = w[i];
        if w[i] == 0.0 {
            idle[t[i]] = 1.0;
        }
    }
    let (first, last) = lp::lexicographic(&p, &[Objective::maximize(revenue), Objective::maximize(idle)]);
    if !first.is_optimal() || !last.is_optimal() {
        let status = if first.is_optimal() { last.status } else { first.status };
        return Err(NppError::Numerical(format!("conjugate follower program ended with status {status:?}")));
    }
    let tolls: Vec<Toll> = t.iter().map(|&c| Toll::from_capped(last.primal[c], cap)).collect();
    let mut rev = 0.0;
    for i in 0..n1 {
        match tolls[i] {
            Toll::Finite(v) => rev += v * w[i],
            Toll::Unbounded if w[i] > 0.0 => {
                return Err(NppError::Numerical(format!(
                    "toll {} hit the cap although its arc carries flow {}",
                    i + 1,
                    w[i]
                )))
            }
            Toll::Unbounded => {}
        }
    }
    let (g_value, decomposition) = conjugate_g(inst, w)?;
    Ok(ConjugateSolution { w: w.to_vec(), g_value, tolls, revenue: rev, decomposition })
}

/// Limits for the grid enumeration.
#[derive(Debug, Clone)]
pub struct EnumerationLimits {
    pub max_cells: u64,
    pub deadline: Option<Instant>,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        EnumerationLimits { max_cells: DEFAULT_GRID_BUDGET, deadline: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerationResult {
    pub revenue: f64,
    pub w: Vec<u32>,
    pub tolls: Vec<Toll>,
    pub cells: u64,
    /// False when the deadline stopped the scan early.
    pub complete: bool,
}

/// Every point of `{0..side-1}^n` in row-major order (last coordinate fastest).
pub(crate) struct GridIter {
    side: u32,
    next: Option<Vec<u32>>,
}

impl GridIter {
    pub(crate) fn new(n: usize, side: u32) -> Self {
        GridIter { side, next: if side == 0 { None } else { Some(vec![0; n]) } }
    }
}

impl Iterator for GridIter {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.side {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(cur)
    }
}

fn grid_size(inst: &Instance) -> Option<u64> {
    (inst.num_commodities() as u64 + 1).checked_pow(inst.num_tolled() as u32)
}

/// Exact leader optimum by scanning every `w ∈ {0..|K|}^{|A1|}`. Ties go to
/// the lexicographically smallest `w`. Requires unit demands.
pub fn solve_by_enumeration(inst: &Instance, limits: &EnumerationLimits) -> Result<EnumerationResult> {
    if !inst.has_unit_demands() {
        return Err(NppError::Precondition("grid enumeration requires unit demands".into()));
    }
    let cells = grid_size(inst).filter(|&c| c <= limits.max_cells).ok_or_else(|| {
        NppError::BudgetExceeded(format!(
            "{}^{} grid cells exceed the cap of {}",
            inst.num_commodities() + 1,
            inst.num_tolled(),
            limits.max_cells
        ))
    })?;
    let mut best: Option<EnumerationResult> = None;
    let mut visited = 0u64;
    for w in GridIter::new(inst.num_tolled(), inst.num_commodities() as u32 + 1) {
        if limits.deadline.is_some_and(|d| Instant::now() >= d) {
            if let Some(mut b) = best {
                b.cells = visited;
                b.complete = false;
                return Ok(b);
            }
        }
        visited += 1;
        let wf: Vec<f64> = w.iter().map(|&v| f64::from(v)).collect();
        let sol = action_prices(inst, &wf)?;
        let better = match &best {
            None => true,
            Some(b) => sol.revenue > b.revenue + DUALITY_GAP_TOL * b.revenue.abs().max(1.0),
        };
        if better {
            best = Some(EnumerationResult { revenue: sol.revenue, w, tolls: sol.tolls, cells: 0, complete: true });
        }
    }
    let mut b = best.expect("the grid always contains w = 0");
    b.cells = visited;
    debug_assert_eq!(visited, cells);
    Ok(b)
}

/// Conjugate solutions at every grid point, in row-major order.
pub fn enumerate_table(inst: &Instance, max_cells: u64) -> Result<Vec<ConjugateSolution>> {
    grid_size(inst)
        .filter(|&c| c <= max_cells)
        .ok_or_else(|| NppError::BudgetExceeded("grid larger than the cap".into()))?;
    GridIter::new(inst.num_tolled(), inst.num_commodities() as u32 + 1)
        .map(|w| {
            let wf: Vec<f64> = w.iter().map(|&v| f64::from(v)).collect();
            action_prices(inst, &wf)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleTollResult {
    pub revenue: f64,
    pub t: f64,
}

/// Single tolled arc: each follower keeps the tolled arc while the toll is
/// below its detour gain; the best revenue is found by sorting the gains.
pub fn solve_single_toll(inst: &Instance) -> Result<SingleTollResult> {
    if inst.num_tolled() != 1 {
        return Err(NppError::Precondition(format!(
            "single-toll solver needs exactly one tolled arc, found {}",
            inst.num_tolled()
        )));
    }
    let mut gains: Vec<(f64, f64)> = Vec::with_capacity(inst.num_commodities());
    for (k, com) in inst.commodities().iter().enumerate() {
        let without = inst.toll_free_distance(k).expect("validated instance");
        let free = inst.distances(com.origin, |_, a| Some(a.cost))[com.destination].expect("validated instance");
        gains.push((without - free, com.demand));
    }
    gains.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = SingleTollResult { revenue: 0.0, t: 0.0 };
    let mut volume = 0.0;
    for (gain, demand) in gains {
        volume += demand;
        let r = volume * gain;
        if r > best.revenue {
            best = SingleTollResult { revenue: r, t: gain };
        }
    }
    Ok(best)
}

/// Largest `ε ≤ 1` such that the `2n` toll vectors `t ± ε e_a` all lie in
/// the action set of `w` for a common centre `t`. A positive value certifies
/// that the action set is full-dimensional.
pub fn action_set_interior_radius(inst: &Instance, w: &[f64]) -> Result<f64> {
    check_w(inst, w)?;
    let n1 = inst.num_tolled();
    let (g, _) = conjugate_g(inst, w)?;
    let mut p = LpProblem::new(Sense::Maximize);
    let t: Vec<usize> = (0..n1).map(|_| p.add_var(0.0, 0.0, f64::INFINITY)).collect();
    let eps = p.add_var(1.0, 0.0, 1.0);
    for &ti in &t {
        p.add_row(&[(ti, 1.0), (eps, -1.0)], RowSense::Ge, 0.0);
    }
    for probe in 0..2 * n1 {
        let axis = probe / 2;
        let sign = if probe % 2 == 0 { 1.0 } else { -1.0 };
        let toll_terms = |i: usize| {
            if i == axis {
                vec![(t[i], 1.0), (eps, sign)]
            } else {
                vec![(t[i], 1.0)]
            }
        };
        // Σ_k (y^k_o - y^k_d) - w·t_probe ≥ g(w), with a hair of slack for
        // the rounding in g.
        let mut row: Vec<(usize, f64)> = Vec::new();
        for k in 0..inst.num_commodities() {
            let y = add_dual_block(&mut p, inst, k, &toll_terms, &|_| 0.0);
            row.push((y[inst.commodities()[k].origin], 1.0));
        }
        for i in 0..n1 {
            for (col, coef) in toll_terms(i) {
                row.push((col, -w[i] * coef));
            }
        }
        p.add_row(&row, RowSense::Ge, g - 1e-9 * g.abs().max(1.0));
    }
    let sol = lp::solve(&p);
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        LpStatus::Infeasible => Ok(0.0),
        s => Err(NppError::Numerical(format!("interior probe ended with status {s:?}"))),
    }
}
