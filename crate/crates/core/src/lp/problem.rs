use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

/// A linear program in sparse triplet form with bounded variables.
///
/// Lower bounds may be `-inf` and upper bounds `+inf`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub(crate) sense: Sense,
    pub(crate) objective: Vec<f64>,
    pub(crate) lower: Vec<f64>,
    pub(crate) upper: Vec<f64>,
    pub(crate) triplets: Vec<(usize, usize, f64)>,
    pub(crate) row_sense: Vec<RowSense>,
    pub(crate) rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        LpProblem {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            triplets: Vec::new(),
            row_sense: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn add_var(&mut self, objective: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(objective);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    /// Adds a row `Σ coef·x (sense) rhs`. Zero coefficients are dropped and
    /// repeated columns are summed by the solver.
    pub fn add_row(&mut self, coefs: &[(usize, f64)], sense: RowSense, rhs: f64) -> usize {
        let row = self.rhs.len();
        for &(col, value) in coefs {
            if value != 0.0 {
                self.triplets.push((row, col, value));
            }
        }
        self.row_sense.push(sense);
        self.rhs.push(rhs);
        row
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_objective(&mut self, coefs: Vec<f64>) {
        assert_eq!(coefs.len(), self.num_vars(), "objective length mismatch");
        self.objective = coefs;
    }

    pub fn set_sense(&mut self, sense: Sense) {
        self.sense = sense;
    }

    pub fn bounds(&self, col: usize) -> (f64, f64) {
        (self.lower[col], self.upper[col])
    }

    pub fn set_bounds(&mut self, col: usize, lower: f64, upper: f64) {
        self.lower[col] = lower;
        self.upper[col] = upper;
    }

    pub fn row_sense(&self, row: usize) -> RowSense {
        self.row_sense[row]
    }

    pub fn set_row_sense(&mut self, row: usize, sense: RowSense) {
        self.row_sense[row] = sense;
    }

    pub fn rhs(&self, row: usize) -> f64 {
        self.rhs[row]
    }

    /// Row activities `A x`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.num_rows()];
        for &(r, c, v) in &self.triplets {
            act[r] += v * x[c];
        }
        act
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for (i, a) in self.activities(x).into_iter().enumerate() {
            let b = self.rhs[i];
            let viol = match self.row_sense[i] {
                RowSense::Le => a - b,
                RowSense::Ge => b - a,
                RowSense::Eq => (a - b).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Checks dimensions and that every finite entry is a finite float.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.num_vars();
        let m = self.num_rows();
        for (j, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(format!("variable {j} has invalid bounds [{l}, {u}]"));
            }
            if l > u {
                return Err(format!("variable {j} has empty bounds [{l}, {u}]"));
            }
            if !self.objective[j].is_finite() {
                return Err(format!("objective coefficient of variable {j} is not finite"));
            }
        }
        for &(r, c, v) in &self.triplets {
            if r >= m || c >= n {
                return Err(format!("entry ({r}, {c}) outside a {m}x{n} matrix"));
            }
            if !v.is_finite() {
                return Err(format!("entry ({r}, {c}) is not finite"));
            }
        }
        if let Some(i) = self.rhs.iter().position(|b| !b.is_finite()) {
            return Err(format!("right-hand side of row {i} is not finite"));
        }
        Ok(())
    }

    /// Renders the problem in CPLEX LP text format, for cross-checking with
    /// external solvers.
    pub fn to_lp_format(&self) -> String {
        fn term(out: &mut String, first: &mut bool, coef: f64, name: &str) {
            if *first {
                let _ = write!(out, " {coef} {name}");
            } else if coef < 0.0 {
                let _ = write!(out, " - {} {name}", -coef);
            } else {
                let _ = write!(out, " + {coef} {name}");
            }
            *first = false;
        }
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Minimize => "Minimize\n obj:",
            Sense::Maximize => "Maximize\n obj:",
        });
        let mut first = true;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                term(&mut out, &mut first, c, &format!("x{j}"));
            }
        }
        if first {
            out.push_str(" 0 x0");
        }
        out.push_str("\nSubject To\n");
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_rows()];
        for &(r, c, v) in &self.triplets {
            rows[r].push((c, v));
        }
        for (i, row) in rows.iter().enumerate() {
            let _ = write!(out, " c{i}:");
            let mut first = true;
            for &(c, v) in row {
                term(&mut out, &mut first, v, &format!("x{c}"));
            }
            if first {
                out.push_str(" 0 x0");
            }
            let op = match self.row_sense[i] {
                RowSense::Le => "<=",
                RowSense::Eq => "=",
                RowSense::Ge => ">=",
            };
            let _ = writeln!(out, " {op} {}", self.rhs[i]);
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            let (l, u) = (self.lower[j], self.upper[j]);
            match (l.is_finite(), u.is_finite()) {
                (false, false) => {
                    let _ = writeln!(out, " x{j} free");
                }
                (true, true) => {
                    let _ = writeln!(out, " {l} <= x{j} <= {u}");
                }
                (true, false) => {
                    let _ = writeln!(out, " x{j} >= {l}");
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= x{j} <= {u}");
                }
            }
        }
        out.push_str("End\n");
        out
    }
}
