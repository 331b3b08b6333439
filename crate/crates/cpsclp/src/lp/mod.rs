//! Bounded-variable revised simplex with primal/dual solutions, reduced
//! costs, and warm-startable bases. Every LP in the toolkit — Benders
//! subproblems, branch-and-cut node relaxations, oracle LPs — goes
//! through this module.

mod lu;
mod simplex;

use thiserror::Error;

use serde::{Deserialize, Serialize};

pub use simplex::solve_with;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Sparse row-major LP with per-variable bounds (infinities allowed).
#[derive(Debug, Clone)]
pub struct LpProblem {
    sense: Objective,
    obj: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<LpRow>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("bad problem: {0}")]
    BadProblem(String),
    #[error("bad bounds on variable {var}: lo {lo} > hi {hi}")]
    BadBounds { var: usize, lo: f64, hi: f64 },
    #[error("numerical breakdown: {0}")]
    Numerical(String),
}

impl LpProblem {
    pub fn new(sense: Objective) -> Self {
        LpProblem { sense, obj: Vec::new(), lower: Vec::new(), upper: Vec::new(), rows: Vec::new() }
    }

    pub fn sense(&self) -> Objective {
        self.sense
    }

    pub fn add_var(&mut self, lo: f64, hi: f64, obj: f64) -> usize {
        assert!(!lo.is_nan() && !hi.is_nan() && obj.is_finite(), "bad variable data");
        assert!(lo <= hi, "lo {lo} > hi {hi}");
        self.obj.push(obj);
        self.lower.push(lo);
        self.upper.push(hi);
        self.obj.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        assert!(rhs.is_finite(), "rhs must be finite");
        for &(v, c) in &coeffs {
            assert!(v < self.obj.len(), "row references undeclared variable {v}");
            assert!(c.is_finite(), "coefficient must be finite");
        }
        self.rows.push(LpRow { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    /// Changes a variable's bounds; a previously valid basis stays usable
    /// as a warm start.
    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) -> Result<(), LpError> {
        if lo > hi || lo.is_nan() || hi.is_nan() {
            return Err(LpError::BadBounds { var, lo, hi });
        }
        self.lower[var] = lo;
        self.upper[var] = hi;
        Ok(())
    }

    pub fn set_obj_coef(&mut self, var: usize, c: f64) {
        assert!(c.is_finite());
        self.obj[var] = c;
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn obj_coef(&self, var: usize) -> f64 {
        self.obj[var]
    }

    pub fn n_vars(&self) -> usize {
        self.obj.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, k: usize) -> &LpRow {
        &self.rows[k]
    }

    pub(crate) fn obj_slice(&self) -> &[f64] {
        &self.obj
    }

    pub(crate) fn lower_slice(&self) -> &[f64] {
        &self.lower
    }

    pub(crate) fn upper_slice(&self) -> &[f64] {
        &self.upper
    }

    pub(crate) fn rows_slice(&self) -> &[LpRow] {
        &self.rows
    }

    /// Row activity at a point.
    pub fn row_activity(&self, k: usize, x: &[f64]) -> f64 {
        self.rows[k].coeffs.iter().map(|&(v, c)| c * x[v]).sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.obj.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Column status snapshot; structural variables first, then one slack
/// per row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub statuses: Vec<VarStatus>,
}

impl Basis {
    pub fn n_basic(&self) -> usize {
        self.statuses.iter().filter(|s| **s == VarStatus::Basic).count()
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective in the user's sense; meaningful when status is Optimal.
    pub objective: f64,
    pub primal: Vec<f64>,
    /// d objective / d rhs per row, in the user's sense.
    pub row_duals: Vec<f64>,
    /// Reduced costs per structural variable, in the user's sense.
    pub reduced_costs: Vec<f64>,
    pub basis: Basis,
    pub iterations: u64,
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub tol_feas: f64,
    pub tol_dual: f64,
    pub tol_pivot: f64,
    pub iteration_limit: u64,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_threshold: u64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            tol_feas: 1e-9,
            tol_dual: 1e-9,
            tol_pivot: 1e-10,
            iteration_limit: 200_000,
            refactor_every: 100,
            stall_threshold: 200,
        }
    }
}

/// Solves with default options and an optional warm-start basis.
pub fn solve(problem: &LpProblem, warm: Option<&Basis>) -> Result<LpSolution, LpError> {
    solve_with(problem, warm, &LpOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_var_max_with_row_bound() {
        let mut p = LpProblem::new(Objective::Maximize);
        let x = p.add_var(0.0, 10.0, 1.0);
        p.add_row(vec![(x, 1.0)], Sense::Le, 5.0);
        let sol = solve(&p, None).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 5.0).abs() < 1e-9);
        assert!((sol.primal[x] - 5.0).abs() < 1e-9);
        assert!((sol.row_duals[0] - 1.0).abs() < 1e-9);
        assert!(sol.reduced_costs[x].abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_pair() {
        let mut p = LpProblem::new(Objective::Maximize);
        let x = p.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        p.add_row(vec![(x, 1.0)], Sense::Ge, 3.0);
        p.add_row(vec![(x, 1.0)], Sense::Le, 1.0);
        let sol = solve(&p, None).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut p = LpProblem::new(Objective::Maximize);
        let x = p.add_var(0.0, f64::INFINITY, 1.0);
        p.add_row(vec![(x, -1.0)], Sense::Le, 1.0);
        let sol = solve(&p, None).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn fixing_by_bounds_and_reversal() {
        // min x + y st x + y >= 2, 0 <= x,y <= 3
        let mut p = LpProblem::new(Objective::Minimize);
        let x = p.add_var(0.0, 3.0, 1.0);
        let y = p.add_var(0.0, 3.0, 1.0);
        p.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Ge, 2.0);
        let base = solve(&p, None).unwrap();
        assert!((base.objective - 2.0).abs() < 1e-9);

        p.set_bounds(x, 1.0, 1.0).unwrap();
        let fixed = solve(&p, None).unwrap();
        assert_eq!(fixed.status, LpStatus::Optimal);
        assert!((fixed.primal[x] - 1.0).abs() < 1e-12);
        assert!((fixed.objective - 2.0).abs() < 1e-9);

        p.set_bounds(x, 0.0, 3.0).unwrap();
        let back = solve(&p, None).unwrap();
        assert!((back.objective - base.objective).abs() < 1e-9);
    }

    #[test]
    fn rejects_inverted_bounds() {
        let mut p = LpProblem::new(Objective::Minimize);
        let x = p.add_var(0.0, 1.0, 1.0);
        assert!(matches!(p.set_bounds(x, 2.0, 1.0), Err(LpError::BadBounds { .. })));
    }

    #[test]
    fn equality_rows_and_duals() {
        // min 2x + 3y st x + y = 4, x - y <= 1, x,y >= 0
        let mut p = LpProblem::new(Objective::Minimize);
        let x = p.add_var(0.0, f64::INFINITY, 2.0);
        let y = p.add_var(0.0, f64::INFINITY, 3.0);
        p.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Eq, 4.0);
        p.add_row(vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        let sol = solve(&p, None).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        // x = 2.5, y = 1.5 -> obj 9.5
        assert!((sol.objective - 9.5).abs() < 1e-9);
        // Strong duality: y_eq * 4 + y_le * 1 = 9.5
        let dual_obj = sol.row_duals[0] * 4.0 + sol.row_duals[1] * 1.0;
        assert!((dual_obj - 9.5).abs() < 1e-7, "dual obj {dual_obj}");
    }

    #[test]
    fn warm_start_is_deterministic() {
        let mut p = LpProblem::new(Objective::Maximize);
        let x = p.add_var(0.0, 4.0, 3.0);
        let y = p.add_var(0.0, 4.0, 2.0);
        p.add_row(vec![(x, 1.0), (y, 2.0)], Sense::Le, 6.0);
        p.add_row(vec![(x, 2.0), (y, 1.0)], Sense::Le, 6.0);
        let first = solve(&p, None).unwrap();
        let again = solve(&p, Some(&first.basis)).unwrap();
        assert_eq!(first.basis, again.basis);
        assert_eq!(first.primal, again.primal);
        assert_eq!(first.objective, again.objective);
        let third = solve(&p, Some(&again.basis)).unwrap();
        assert_eq!(again.primal, third.primal);
    }
}
