use npp::lp::{solve, LpProblem, LpStatus, RowSense, Sense, DUALITY_GAP_TOL, FEAS_TOL};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    n: usize,
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<(Vec<f64>, RowSense, f64)>,
    maximize: bool,
}

fn build(c: &Case) -> LpProblem {
    let mut p = LpProblem::new(if c.maximize { Sense::Maximize } else { Sense::Minimize });
    for j in 0..c.n {
        p.add_var(c.objective[j], c.bounds[j].0, c.bounds[j].1);
    }
    for (coefs, sense, rhs) in &c.rows {
        let row: Vec<(usize, f64)> = coefs.iter().copied().enumerate().collect();
        p.add_row(&row, *sense, *rhs);
    }
    p
}

/// Solves the square system by Gaussian elimination; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[piv][c].abs() < 1e-9 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Best objective over all vertices of the (bounded) feasible region.
fn vertex_oracle(c: &Case) -> Option<f64> {
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for j in 0..c.n {
        let mut e = vec![0.0; c.n];
        e[j] = 1.0;
        planes.push((e.clone(), c.bounds[j].0));
        planes.push((e, c.bounds[j].1));
    }
    for (coefs, _, rhs) in &c.rows {
        planes.push((coefs.clone(), *rhs));
    }
    let feasible = |x: &[f64]| {
        (0..c.n).all(|j| x[j] >= c.bounds[j].0 - 1e-9 && x[j] <= c.bounds[j].1 + 1e-9)
            && c.rows.iter().all(|(coefs, s, rhs)| {
                let a: f64 = coefs.iter().zip(x).map(|(u, v)| u * v).sum();
                match s {
                    RowSense::Le => a <= rhs + 1e-9,
                    RowSense::Ge => a >= rhs - 1e-9,
                    RowSense::Eq => (a - rhs).abs() <= 1e-9,
                }
            })
    };
    let mut best: Option<f64> = None;
    let total = planes.len();
    let mut pick = vec![0usize; c.n];
    fn rec(depth: usize, start: usize, total: usize, pick: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if depth == pick.len() {
            visit(pick);
            return;
        }
        for i in start..total {
            pick[depth] = i;
            rec(depth + 1, i + 1, total, pick, visit);
        }
    }
    let mut visit = |idx: &[usize]| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let v: f64 = c.objective.iter().zip(&x).map(|(u, w)| u * w).sum();
                let better = match best {
                    None => true,
                    Some(cur) => {
                        if c.maximize {
                            v > cur
                        } else {
                            v < cur
                        }
                    }
                };
                if better {
                    best = Some(v);
                }
            }
        }
    };
    rec(0, 0, total, &mut pick, &mut visit);
    best
}

fn case_strategy() -> impl Strategy<Value = Case> {
    (1usize..=3, 0usize..=3, any::<bool>()).prop_flat_map(|(n, m, maximize)| {
        let coef = -3i32..=3;
        let objective = prop::collection::vec(coef.clone(), n);
        let bounds = prop::collection::vec((-3i32..=1, 0i32..=4), n);
        let row = (
            prop::collection::vec(coef, n),
            prop_oneof![Just(RowSense::Le), Just(RowSense::Ge), Just(RowSense::Eq)],
            -4i32..=4,
        );
        let rows = prop::collection::vec(row, m);
        (objective, bounds, rows).prop_map(move |(obj, bnd, rows)| Case {
            n,
            objective: obj.into_iter().map(f64::from).collect(),
            bounds: bnd.into_iter().map(|(l, w)| (f64::from(l), f64::from(l + w))).collect(),
            rows: rows.into_iter().map(|(c, s, r)| (c.into_iter().map(f64::from).collect(), s, f64::from(r))).collect(),
            maximize,
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_matches_vertex_enumeration(case in case_strategy()) {
        let p = build(&case);
        let sol = solve(&p);
        match vertex_oracle(&case) {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - best).abs() < 1e-6, "simplex {} oracle {}", sol.objective, best);
                prop_assert!(p.max_violation(&sol.primal) <= FEAS_TOL);
                prop_assert!((sol.objective - sol.dual_objective).abs() <= DUALITY_GAP_TOL);
            }
        }
    }

    #[test]
    fn complementary_slackness_holds(case in case_strategy()) {
        let p = build(&case);
        let sol = solve(&p);
        if sol.is_optimal() {
            let act = p.activities(&sol.primal);
            for i in 0..p.num_rows() {
                let slack = act[i] - p.rhs(i);
                prop_assert!((sol.duals[i] * slack).abs() <= FEAS_TOL);
            }
            for j in 0..p.num_vars() {
                let (l, u) = p.bounds(j);
                let gap = (sol.primal[j] - l).abs().min((u - sol.primal[j]).abs());
                prop_assert!((sol.reduced_costs[j] * gap).abs() <= FEAS_TOL);
            }
        }
    }

    #[test]
    fn solves_are_deterministic(case in case_strategy()) {
        let p = build(&case);
        let a = solve(&p);
        let b = solve(&p);
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.iterations, b.iterations);
        if a.is_optimal() {
            prop_assert_eq!(a.primal, b.primal);
        }
    }
}

#[test]
fn free_direction_unbounded_below() {
    let mut p = LpProblem::new(Sense::Minimize);
    let x = p.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY);
    let y = p.add_var(0.0, 0.0, 1.0);
    p.add_row(&[(x, 1.0), (y, 1.0)], RowSense::Le, 4.0);
    assert_eq!(solve(&p).status, LpStatus::Unbounded);
}
