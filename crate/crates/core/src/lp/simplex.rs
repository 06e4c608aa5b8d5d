//! Bounded-variable revised primal simplex with a dense basis inverse.
//!
//! Every row gets a slack column and an artificial column. Phase one drives
//! the artificials to zero, phase two optimizes the real objective. Pricing
//! is Dantzig's rule until a run of degenerate pivots is seen, after which the
//! solver switches to Bland's rule for the rest of the solve. The ratio test
//! is a two-pass Harris test.

use super::problem::{LpProblem, RowSense, Sense};
use super::{LpSolution, LpStatus, DUALITY_GAP_TOL, FEAS_TOL, ZERO_TOL};
use crate::error::NppError;

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-10;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

/// A linear objective with its own optimization sense.
#[derive(Debug, Clone)]
pub struct Objective {
    pub sense: Sense,
    pub coefs: Vec<f64>,
}

impl Objective {
    pub fn maximize(coefs: Vec<f64>) -> Self {
        Objective { sense: Sense::Maximize, coefs }
    }

    pub fn minimize(coefs: Vec<f64>) -> Self {
        Objective { sense: Sense::Minimize, coefs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable resting at zero.
    Zero,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    Failed,
}

struct Simplex {
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    art_sign: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    head: Vec<usize>,
    binv: Vec<f64>,
    updates: usize,
    refactor_every: usize,
    iterations: usize,
    max_iterations: usize,
    bland: bool,
    degenerate_run: usize,
    y: Vec<f64>,
    alpha: Vec<f64>,
}

impl Simplex {
    fn new(p: &LpProblem) -> Self {
        let m = p.num_rows();
        let n = p.num_vars();
        // Column-major copy of the structural matrix with duplicates summed.
        let mut entries: Vec<(usize, usize, f64)> = p.triplets.iter().map(|&(r, c, v)| (c, r, v)).collect();
        entries.sort_by_key(|a| (a.0, a.1));
        let mut col_start = vec![0usize; n + 1];
        let mut col_rows = Vec::with_capacity(entries.len());
        let mut col_vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (c, r, v) in entries {
            if last == Some((c, r)) {
                *col_vals.last_mut().unwrap() += v;
            } else {
                col_rows.push(r);
                col_vals.push(v);
                col_start[c + 1] += 1;
                last = Some((c, r));
            }
        }
        for c in 0..n {
            col_start[c + 1] += col_start[c];
        }

        let ncols = n + 2 * m;
        let mut lo = Vec::with_capacity(ncols);
        let mut up = Vec::with_capacity(ncols);
        lo.extend_from_slice(&p.lower);
        up.extend_from_slice(&p.upper);
        for sense in &p.row_sense {
            let (l, u) = match sense {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            up.push(u);
        }
        lo.extend(std::iter::repeat_n(0.0, m));
        up.extend(std::iter::repeat_n(0.0, m));

        Simplex {
            m,
            n,
            col_start,
            col_rows,
            col_vals,
            art_sign: vec![1.0; m],
            lo,
            up,
            rhs: p.rhs.clone(),
            x: vec![0.0; ncols],
            status: vec![Status::Lower; ncols],
            head: vec![0; m],
            binv: vec![0.0; m * m],
            updates: 0,
            refactor_every: m.max(100),
            iterations: 0,
            max_iterations: 50_000 + 50 * (n + 2 * m),
            bland: false,
            degenerate_run: 0,
            y: vec![0.0; m],
            alpha: vec![0.0; m],
        }
    }

    fn ncols(&self) -> usize {
        self.n + 2 * self.m
    }

    /// `Σ_r a_rj · v_r` for column `j`.
    fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1]).map(|k| self.col_vals[k] * v[self.col_rows[k]]).sum()
        } else if j < self.n + self.m {
            v[j - self.n]
        } else {
            let i = j - self.n - self.m;
            self.art_sign[i] * v[i]
        }
    }

    fn for_each_entry(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                f(self.col_rows[k], self.col_vals[k]);
            }
        } else if j < self.n + self.m {
            f(j - self.n, 1.0);
        } else {
            let i = j - self.n - self.m;
            f(i, self.art_sign[i]);
        }
    }

    fn initial_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        for j in 0..n {
            let (l, u) = (self.lo[j], self.up[j]);
            let (st, v) = if l.is_finite() {
                (Status::Lower, l)
            } else if u.is_finite() {
                (Status::Upper, u)
            } else {
                (Status::Zero, 0.0)
            };
            self.status[j] = st;
            self.x[j] = v;
        }
        let mut resid = self.rhs.clone();
        for j in 0..n {
            let xj = self.x[j];
            if xj != 0.0 {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    resid[self.col_rows[k]] -= self.col_vals[k] * xj;
                }
            }
        }
        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let s = n + i;
            let a = n + m + i;
            let r = resid[i];
            if r >= self.lo[s] && r <= self.up[s] {
                self.status[s] = Status::Basic;
                self.x[s] = r;
                self.head[i] = s;
                self.status[a] = Status::Lower;
                self.x[a] = 0.0;
                self.up[a] = 0.0;
                self.art_sign[i] = 1.0;
                self.binv[i * m + i] = 1.0;
            } else {
                let clamp = r.clamp(self.lo[s], self.up[s]);
                self.status[s] = if clamp == self.lo[s] { Status::Lower } else { Status::Upper };
                self.x[s] = clamp;
                let e = r - clamp;
                self.art_sign[i] = if e >= 0.0 { 1.0 } else { -1.0 };
                self.status[a] = Status::Basic;
                self.x[a] = e.abs();
                self.up[a] = f64::INFINITY;
                self.head[i] = a;
                self.binv[i * m + i] = self.art_sign[i];
            }
        }
        self.updates = 0;
    }

    /// Rebuilds the basis inverse from scratch and recomputes basic values.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        if m == 0 {
            return true;
        }
        let mut b = vec![0.0; m * m];
        for (pos, &j) in self.head.iter().enumerate() {
            let mut col = vec![0.0; m];
            self.for_each_entry(j, |r, v| col[r] += v);
            for r in 0..m {
                b[r * m + pos] = col[r];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        // Gauss-Jordan with partial pivoting on [B | I].
        for c in 0..m {
            let mut piv = c;
            let mut best = b[c * m + c].abs();
            for r in c + 1..m {
                let v = b[r * m + c].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return false;
            }
            if piv != c {
                for k in 0..m {
                    b.swap(piv * m + k, c * m + k);
                    inv.swap(piv * m + k, c * m + k);
                }
            }
            let d = b[c * m + c];
            for k in 0..m {
                b[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = b[r * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        b[r * m + k] -= f * b[c * m + k];
                        inv[r * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        self.binv = inv;
        self.updates = 0;
        self.recompute_basic_values();
        true
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut resid = self.rhs.clone();
        for j in 0..self.ncols() {
            if self.status[j] != Status::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.for_each_entry(j, |r, v| resid[r] -= v * xj);
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x[self.head[i]] = row.iter().zip(&resid).map(|(a, b)| a * b).sum();
        }
    }

    fn compute_duals(&mut self, cost: &[f64]) {
        let m = self.m;
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let cb = cost[self.head[i]];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yr, b) in self.y.iter_mut().zip(row) {
                    *yr += cb * b;
                }
            }
        }
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        cost[j] - self.col_dot(j, &self.y)
    }

    /// Picks the entering column and its direction (+1 increase, -1 decrease).
    fn price(&self, cost: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols() {
            let st = self.status[j];
            if st == Status::Basic || self.lo[j] == self.up[j] {
                continue;
            }
            let d = self.reduced_cost(cost, j);
            let dir = match st {
                Status::Lower if d < -OPT_TOL => 1.0,
                Status::Upper if d > OPT_TOL => -1.0,
                Status::Zero if d.abs() > OPT_TOL => -d.signum(),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn compute_alpha(&mut self, q: usize) {
        let m = self.m;
        self.alpha.iter_mut().for_each(|v| *v = 0.0);
        let mut entries = Vec::new();
        self.for_each_entry(q, |r, v| entries.push((r, v)));
        for (r, v) in entries {
            for i in 0..m {
                self.alpha[i] += self.binv[i * m + r] * v;
            }
        }
    }

    /// Returns the step length and the leaving row (None means the entering
    /// variable flips to its opposite bound). `Err` signals an unbounded ray.
    fn ratio_test(&self, q: usize, dir: f64) -> Result<(f64, Option<(usize, bool)>), ()> {
        let span = self.up[q] - self.lo[q];
        let mut limit = f64::INFINITY;
        // Pass one: the relaxed step bound.
        for i in 0..self.m {
            let a = self.alpha[i];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * a;
            let j = self.head[i];
            let xi = self.x[j];
            let r = if rate < 0.0 {
                if self.lo[j].is_finite() {
                    (xi - self.lo[j] + HARRIS_TOL) / -rate
                } else {
                    continue;
                }
            } else if self.up[j].is_finite() {
                (self.up[j] - xi + HARRIS_TOL) / rate
            } else {
                continue;
            };
            limit = limit.min(r);
        }
        if span.is_finite() && span <= limit {
            return Ok((span, None));
        }
        if limit == f64::INFINITY {
            return Err(());
        }
        // Pass two: among rows within the relaxed bound, take the largest pivot.
        let mut chosen: Option<(usize, bool, f64)> = None;
        let mut best_key = (f64::NEG_INFINITY, usize::MAX);
        for i in 0..self.m {
            let a = self.alpha[i];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * a;
            let j = self.head[i];
            let xi = self.x[j];
            let (r, to_upper) = if rate < 0.0 {
                if !self.lo[j].is_finite() {
                    continue;
                }
                ((xi - self.lo[j]) / -rate, false)
            } else {
                if !self.up[j].is_finite() {
                    continue;
                }
                ((self.up[j] - xi) / rate, true)
            };
            if r > limit {
                continue;
            }
            let key = if self.bland {
                // Smallest ratio first, then smallest column index.
                (-r, usize::MAX - j)
            } else {
                (a.abs(), usize::MAX - j)
            };
            if key > best_key {
                best_key = key;
                chosen = Some((i, to_upper, r.max(0.0)));
            }
        }
        match chosen {
            Some((i, to_upper, r)) => Ok((r, Some((i, to_upper)))),
            None => Err(()),
        }
    }

    fn pivot(&mut self, q: usize, dir: f64, theta: f64, leave: Option<(usize, bool)>) {
        let m = self.m;
        if theta != 0.0 {
            self.x[q] += dir * theta;
            for i in 0..m {
                let a = self.alpha[i];
                if a != 0.0 {
                    let j = self.head[i];
                    self.x[j] -= dir * theta * a;
                }
            }
        }
        match leave {
            None => {
                if dir > 0.0 {
                    self.status[q] = Status::Upper;
                    self.x[q] = self.up[q];
                } else {
                    self.status[q] = Status::Lower;
                    self.x[q] = self.lo[q];
                }
            }
            Some((r, to_upper)) => {
                let l = self.head[r];
                if to_upper {
                    self.status[l] = Status::Upper;
                    self.x[l] = self.up[l];
                } else {
                    self.status[l] = Status::Lower;
                    self.x[l] = self.lo[l];
                }
                self.head[r] = q;
                self.status[q] = Status::Basic;
                let piv = self.alpha[r];
                let (before, rest) = self.binv.split_at_mut(r * m);
                let (prow, after) = rest.split_at_mut(m);
                prow.iter_mut().for_each(|v| *v /= piv);
                for (i, row) in before.chunks_mut(m).enumerate() {
                    let a = self.alpha[i];
                    if a != 0.0 {
                        row.iter_mut().zip(prow.iter()).for_each(|(v, p)| *v -= a * p);
                    }
                }
                for (k, row) in after.chunks_mut(m).enumerate() {
                    let a = self.alpha[r + 1 + k];
                    if a != 0.0 {
                        row.iter_mut().zip(prow.iter()).for_each(|(v, p)| *v -= a * p);
                    }
                }
                self.updates += 1;
            }
        }
    }

    fn run_phase(&mut self, cost: &[f64]) -> PhaseEnd {
        loop {
            if self.iterations >= self.max_iterations {
                return PhaseEnd::Failed;
            }
            if self.updates >= self.refactor_every && !self.refactor() {
                return PhaseEnd::Failed;
            }
            self.compute_duals(cost);
            let Some((q, dir)) = self.price(cost) else {
                return PhaseEnd::Optimal;
            };
            self.compute_alpha(q);
            let Ok((theta, leave)) = self.ratio_test(q, dir) else {
                return PhaseEnd::Unbounded;
            };
            if theta <= ZERO_TOL {
                self.degenerate_run += 1;
                if self.degenerate_run > DEGENERATE_RUN_BEFORE_BLAND {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
            self.pivot(q, dir, theta, leave);
            self.iterations += 1;
        }
    }
}

/// Solves `p` from a slack/artificial starting basis.
pub fn solve(p: &LpProblem) -> LpSolution {
    let (n, m) = (p.num_vars(), p.num_rows());
    if let Err(msg) = p.validate() {
        panic!("malformed LP: {msg}");
    }
    let mut s = Simplex::new(p);
    s.initial_basis();
    let ncols = s.ncols();

    let mut phase1 = vec![0.0; ncols];
    let mut need_phase1 = false;
    for i in 0..m {
        if s.head[i] == n + m + i {
            phase1[n + m + i] = 1.0;
            need_phase1 = true;
        }
    }
    if need_phase1 {
        match s.run_phase(&phase1) {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded | PhaseEnd::Failed => {
                return LpSolution::failed(LpStatus::NumericalFailure, n, m, s.iterations);
            }
        }
        if !s.refactor() {
            return LpSolution::failed(LpStatus::NumericalFailure, n, m, s.iterations);
        }
        let infeas: f64 = (0..m).map(|i| s.x[n + m + i].abs()).sum();
        let scale = 1.0 + p.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeas > FEAS_TOL * scale {
            return LpSolution::failed(LpStatus::Infeasible, n, m, s.iterations);
        }
        for i in 0..m {
            let a = n + m + i;
            s.up[a] = 0.0;
            if s.status[a] != Status::Basic {
                s.status[a] = Status::Lower;
                s.x[a] = 0.0;
            }
        }
        s.degenerate_run = 0;
    }

    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; ncols];
    for j in 0..n {
        cost[j] = sign * p.objective[j];
    }
    match s.run_phase(&cost) {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded => return LpSolution::failed(LpStatus::Unbounded, n, m, s.iterations),
        PhaseEnd::Failed => return LpSolution::failed(LpStatus::NumericalFailure, n, m, s.iterations),
    }
    if !s.refactor() {
        return LpSolution::failed(LpStatus::NumericalFailure, n, m, s.iterations);
    }
    s.compute_duals(&cost);

    let primal: Vec<f64> = s.x[..n].to_vec();
    let objective = p.objective_value(&primal);
    let duals: Vec<f64> = s.y.iter().map(|v| sign * v).collect();
    let mut reduced_costs = Vec::with_capacity(n);
    let mut bound_terms = 0.0;
    for j in 0..ncols {
        if s.status[j] == Status::Basic {
            if j < n {
                reduced_costs.push(0.0);
            }
            continue;
        }
        let d = s.reduced_cost(&cost, j);
        bound_terms += d * s.x[j];
        if j < n {
            reduced_costs.push(sign * d);
        }
    }
    let dual_internal: f64 = s.y.iter().zip(&p.rhs).map(|(a, b)| a * b).sum::<f64>() + bound_terms;
    LpSolution {
        status: LpStatus::Optimal,
        objective,
        primal,
        duals,
        reduced_costs,
        dual_objective: sign * dual_internal,
        iterations: s.iterations,
        basic: (0..n).map(|j| s.status[j] == Status::Basic).collect(),
        basic_rows: (0..m).map(|i| s.status[n + i] == Status::Basic).collect(),
    }
}

/// Restricts `p` to the optimal face certified by the dual solution in `sol`:
/// nonbasic variables with nonzero reduced cost are fixed at their value and
/// rows with nonzero dual become equalities. Every feasible point of the
/// result is optimal for `p`.
pub(crate) fn optimal_face(p: &LpProblem, sol: &LpSolution) -> LpProblem {
    let mut face = p.clone();
    for j in 0..p.num_vars() {
        if !sol.basic[j] && sol.reduced_costs[j].abs() > OPT_TOL {
            let v = sol.primal[j].clamp(p.lower[j], p.upper[j]);
            face.set_bounds(j, v, v);
        }
    }
    for i in 0..p.num_rows() {
        if !sol.basic_rows[i] && sol.duals[i].abs() > OPT_TOL {
            face.set_row_sense(i, RowSense::Eq);
        }
    }
    face
}

/// Optimizes `secondary` over the optimal face of `p`, whose optimal value
/// must equal `value` within the duality-gap tolerance.
pub fn solve_with_fixed_value(p: &LpProblem, value: f64, secondary: &Objective) -> Result<LpSolution, NppError> {
    let first = solve(p);
    if !first.is_optimal() {
        return Ok(first);
    }
    if (first.objective - value).abs() > DUALITY_GAP_TOL * value.abs().max(1.0) {
        return Err(NppError::Precondition(format!(
            "pinned value {value} differs from the optimum {}",
            first.objective
        )));
    }
    let mut face = optimal_face(p, &first);
    face.set_sense(secondary.sense);
    face.set_objective(secondary.coefs.clone());
    Ok(solve(&face))
}

/// Solves `p`, then each objective in turn over the optimal face of the
/// previous stage. Returns the last stage's solution, or the first
/// non-optimal one.
pub(crate) fn lexicographic(p: &LpProblem, stages: &[Objective]) -> (LpSolution, LpSolution) {
    let first = solve(p);
    if !first.is_optimal() {
        return (first.clone(), first);
    }
    let mut current = p.clone();
    let mut sol = first.clone();
    for stage in stages {
        let mut face = optimal_face(&current, &sol);
        face.set_sense(stage.sense);
        face.set_objective(stage.coefs.clone());
        let next = solve(&face);
        if !next.is_optimal() {
            return (first, next);
        }
        current = face;
        sol = next;
    }
    (first, sol)
}
