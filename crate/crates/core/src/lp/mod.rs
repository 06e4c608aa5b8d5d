//! Linear programming core.
//!
//! Every optimization program in the toolkit (shortest paths with tie-breaks,
//! the conjugate programs, pricing, the strong bilevel feasibility test and
//! the branch-and-bound relaxations) is phrased as an [`LpProblem`] and
//! handed to the bounded-variable primal simplex in [`simplex`].

mod problem;
mod simplex;

pub use problem::{LpProblem, RowSense, Sense};
pub(crate) use simplex::lexicographic;
pub use simplex::{solve, solve_with_fixed_value, Objective};

use serde::Serialize;

/// Primal feasibility tolerance applied to rows and bounds.
pub const FEAS_TOL: f64 = 1e-7;
/// Admissible gap between primal and dual objectives, and the tolerance for
/// every "equals" comparison between optimal values.
pub const DUALITY_GAP_TOL: f64 = 1e-6;
/// Threshold below which a value is treated as zero in basis decisions.
pub const ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivoting safeguards gave up; no answer is reported.
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value in the sense of the problem (only meaningful when optimal).
    pub objective: f64,
    pub primal: Vec<f64>,
    /// Shadow price of each row: the rate of change of the optimal objective
    /// per unit increase of the right-hand side.
    pub duals: Vec<f64>,
    /// Reduced cost of each structural variable, in the sense of the problem.
    pub reduced_costs: Vec<f64>,
    /// Objective of the dual solution (`b·y` plus bound terms).
    pub dual_objective: f64,
    pub iterations: usize,
    /// Whether each structural variable was basic at termination.
    pub basic: Vec<bool>,
    /// Whether each row's slack was basic at termination.
    pub basic_rows: Vec<bool>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub(crate) fn failed(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        LpSolution {
            status,
            objective: f64::NAN,
            primal: vec![0.0; n],
            duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            dual_objective: f64::NAN,
            iterations,
            basic: vec![false; n],
            basic_rows: vec![false; m],
        }
    }
}
