//! Primal bounded-variable simplex with a composite phase 1, steepest-edge
//! pricing (Goldfarb-style weight updates, Bland fallback on stalls), and
//! a dense LU basis with eta updates and periodic refactorization.

use super::lu::LuFactors;
use super::{Basis, LpError, LpOptions, LpProblem, LpSolution, LpStatus, Objective, Sense, VarStatus};

const INF: f64 = f64::INFINITY;

struct Eta {
    row: usize,
    w: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Feas {
    Ok,
    Below,
    Above,
}

struct Solver<'a> {
    opts: &'a LpOptions,
    m: usize,
    n: usize,
    nt: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Internal costs; always a minimization.
    cost: Vec<f64>,
    rhs: Vec<f64>,
    flip: bool,

    stat: Vec<VarStatus>,
    basic: Vec<usize>,
    x: Vec<f64>,
    lu: LuFactors,
    etas: Vec<Eta>,
    gamma: Vec<f64>,

    bland: bool,
    stall: u64,
    iterations: u64,
    recoveries: u32,
}

pub fn solve_with(
    problem: &LpProblem,
    warm: Option<&Basis>,
    opts: &LpOptions,
) -> Result<LpSolution, LpError> {
    for v in 0..problem.n_vars() {
        let (lo, hi) = problem.bounds(v);
        if lo > hi {
            return Err(LpError::BadBounds { var: v, lo, hi });
        }
    }
    let mut solver = Solver::build(problem, warm, opts)?;
    let status = solver.run()?;
    Ok(solver.extract(problem, status))
}

impl<'a> Solver<'a> {
    fn build(problem: &LpProblem, warm: Option<&Basis>, opts: &'a LpOptions) -> Result<Solver<'a>, LpError> {
        let m = problem.n_rows();
        let n = problem.n_vars();
        let nt = n + m;
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nt];
        for (k, row) in problem.rows_slice().iter().enumerate() {
            for &(v, c) in &row.coeffs {
                if c != 0.0 {
                    cols[v].push((k, c));
                }
            }
            cols[n + k].push((k, 1.0));
        }
        let mut lo = problem.lower_slice().to_vec();
        let mut hi = problem.upper_slice().to_vec();
        let mut cost = problem.obj_slice().to_vec();
        let flip = problem.sense() == Objective::Maximize;
        if flip {
            for c in cost.iter_mut() {
                *c = -*c;
            }
        }
        let mut rhs = Vec::with_capacity(m);
        for row in problem.rows_slice() {
            rhs.push(row.rhs);
            match row.sense {
                Sense::Le => {
                    lo.push(0.0);
                    hi.push(INF);
                }
                Sense::Ge => {
                    lo.push(-INF);
                    hi.push(0.0);
                }
                Sense::Eq => {
                    lo.push(0.0);
                    hi.push(0.0);
                }
            }
            cost.push(0.0);
        }

        let mut solver = Solver {
            opts,
            m,
            n,
            nt,
            cols,
            lo,
            hi,
            cost,
            rhs,
            flip,
            stat: Vec::new(),
            basic: Vec::new(),
            x: vec![0.0; nt],
            lu: LuFactors::factorize(0, &[]).expect("empty LU"),
            etas: Vec::new(),
            gamma: vec![1.0; nt],
            bland: false,
            stall: 0,
            iterations: 0,
            recoveries: 0,
        };

        let warm_ok = warm
            .map(|b| b.statuses.len() == nt && b.statuses.iter().filter(|s| **s == VarStatus::Basic).count() == m)
            .unwrap_or(false);
        if warm_ok {
            solver.stat = warm.unwrap().statuses.clone();
            solver.normalize_statuses();
            solver.basic = (0..nt).filter(|&j| solver.stat[j] == VarStatus::Basic).collect();
            if solver.refactor().is_err() {
                solver.cold_start();
                solver.refactor().map_err(|_| LpError::Numerical("slack basis factorization failed".into()))?;
            }
        } else {
            solver.cold_start();
            solver.refactor().map_err(|_| LpError::Numerical("slack basis factorization failed".into()))?;
            // At the slack basis B = I, the steepest-edge weights are exact.
            for j in 0..nt {
                let norm2: f64 = solver.cols[j].iter().map(|&(_, c)| c * c).sum();
                solver.gamma[j] = 1.0 + norm2;
            }
        }
        solver.compute_values();
        Ok(solver)
    }

    fn cold_start(&mut self) {
        self.stat = (0..self.nt)
            .map(|j| {
                if j >= self.n {
                    VarStatus::Basic
                } else if self.lo[j].is_finite() {
                    VarStatus::AtLower
                } else if self.hi[j].is_finite() {
                    VarStatus::AtUpper
                } else {
                    VarStatus::Free
                }
            })
            .collect();
        self.basic = (self.n..self.nt).collect();
        self.gamma = vec![1.0; self.nt];
    }

    /// Repairs statuses that point at non-finite bounds.
    fn normalize_statuses(&mut self) {
        for j in 0..self.nt {
            match self.stat[j] {
                VarStatus::AtLower if !self.lo[j].is_finite() => {
                    self.stat[j] = if self.hi[j].is_finite() { VarStatus::AtUpper } else { VarStatus::Free };
                }
                VarStatus::AtUpper if !self.hi[j].is_finite() => {
                    self.stat[j] = if self.lo[j].is_finite() { VarStatus::AtLower } else { VarStatus::Free };
                }
                _ => {}
            }
        }
    }

    fn refactor(&mut self) -> Result<(), ()> {
        let col_refs: Vec<&[(usize, f64)]> = self.basic.iter().map(|&j| self.cols[j].as_slice()).collect();
        match LuFactors::factorize(self.m, &col_refs) {
            Ok(lu) => {
                self.lu = lu;
                self.etas.clear();
                Ok(())
            }
            Err(_) => Err(()),
        }
    }

    /// Last-resort repair: restart from the always-factorizable slack
    /// basis. Loses warm-start progress, never correctness.
    fn recover(&mut self) -> Result<(), LpError> {
        self.recoveries += 1;
        if self.recoveries > 3 {
            return Err(LpError::Numerical("repeated basis recoveries".into()));
        }
        log::debug!("simplex basis recovery #{}", self.recoveries);
        self.cold_start();
        self.refactor()
            .map_err(|_| LpError::Numerical("slack basis factorization failed".into()))?;
        self.compute_values();
        Ok(())
    }

    /// Sets nonbasic variables exactly at their bound and recomputes the
    /// basic values from the factorization.
    fn compute_values(&mut self) {
        for j in 0..self.nt {
            match self.stat[j] {
                VarStatus::AtLower => self.x[j] = self.lo[j],
                VarStatus::AtUpper => self.x[j] = self.hi[j],
                VarStatus::Free => self.x[j] = 0.0,
                VarStatus::Basic => {}
            }
        }
        let mut r = self.rhs.clone();
        for j in 0..self.nt {
            if self.stat[j] != VarStatus::Basic && self.x[j] != 0.0 {
                for &(k, c) in &self.cols[j] {
                    r[k] -= c * self.x[j];
                }
            }
        }
        self.ftran(&mut r);
        for (k, &col) in self.basic.iter().enumerate() {
            self.x[col] = r[k];
        }
    }

    fn ftran(&self, v: &mut [f64]) {
        self.lu.solve(v);
        for eta in &self.etas {
            let t = v[eta.row] / eta.w[eta.row];
            v[eta.row] = t;
            if t != 0.0 {
                for i in 0..self.m {
                    if i != eta.row {
                        v[i] -= eta.w[i] * t;
                    }
                }
            }
        }
    }

    fn btran(&self, v: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut acc = v[eta.row];
            for i in 0..self.m {
                if i != eta.row {
                    acc -= eta.w[i] * v[i];
                }
            }
            v[eta.row] = acc / eta.w[eta.row];
        }
        self.lu.solve_transpose(v);
    }

    fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.cols[j]
    }

    fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        self.column(j).iter().map(|&(k, c)| c * v[k]).sum()
    }

    fn feas_tol(&self, j: usize) -> f64 {
        let b = self.lo[j].abs().min(self.hi[j].abs());
        let scale = if b.is_finite() { b } else { 0.0 };
        self.opts.tol_feas * (1.0 + scale + self.x[j].abs())
    }

    fn feasibility(&self, j: usize) -> Feas {
        let tol = self.feas_tol(j);
        if self.x[j] < self.lo[j] - tol {
            Feas::Below
        } else if self.x[j] > self.hi[j] + tol {
            Feas::Above
        } else {
            Feas::Ok
        }
    }

    fn infeasibility(&self) -> f64 {
        let mut f = 0.0;
        for &col in &self.basic {
            match self.feasibility(col) {
                Feas::Below => f += self.lo[col] - self.x[col],
                Feas::Above => f += self.x[col] - self.hi[col],
                Feas::Ok => {}
            }
        }
        f
    }

    fn run(&mut self) -> Result<LpStatus, LpError> {
        let mut cleanup_rounds = 0;
        loop {
            if self.infeasibility() > 0.0 {
                match self.phase(true)? {
                    PhaseEnd::Done => {}
                    PhaseEnd::NoEntering => return Ok(LpStatus::Infeasible),
                    PhaseEnd::Unbounded => {
                        return Err(LpError::Numerical("phase 1 claims unboundedness".into()))
                    }
                    PhaseEnd::IterationLimit => return Ok(LpStatus::IterationLimit),
                    PhaseEnd::Restart => continue,
                }
            }
            let status = match self.phase(false)? {
                PhaseEnd::Done | PhaseEnd::NoEntering => LpStatus::Optimal,
                PhaseEnd::Unbounded => return Ok(LpStatus::Unbounded),
                PhaseEnd::IterationLimit => return Ok(LpStatus::IterationLimit),
                PhaseEnd::Restart => continue,
            };
            // Clean extraction: refactorize, recompute, and re-verify.
            if !self.etas.is_empty() {
                if self.refactor().is_err() {
                    self.recover()?;
                    continue;
                }
                self.compute_values();
            }
            if self.infeasibility() == 0.0 || cleanup_rounds >= 3 {
                return Ok(status);
            }
            cleanup_rounds += 1;
        }
    }

    fn phase_costs(&self, phase1: bool) -> Vec<f64> {
        if !phase1 {
            return self.cost.clone();
        }
        let mut d = vec![0.0; self.nt];
        for &col in &self.basic {
            match self.feasibility(col) {
                Feas::Below => d[col] = -1.0,
                Feas::Above => d[col] = 1.0,
                Feas::Ok => {}
            }
        }
        d
    }

    fn duals_for(&self, costs: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.basic.iter().map(|&c| costs[c]).collect();
        self.btran(&mut y);
        y
    }

    fn phase(&mut self, phase1: bool) -> Result<PhaseEnd, LpError> {
        let mut numerical_retries = 0u32;
        loop {
            if self.iterations >= self.opts.iteration_limit {
                return Ok(PhaseEnd::IterationLimit);
            }
            if phase1 && self.infeasibility() == 0.0 {
                return Ok(PhaseEnd::Done);
            }
            let costs = self.phase_costs(phase1);
            let y = self.duals_for(&costs);

            // Pricing. The dual tolerance scales with the variable's own
            // cost: reduced-cost noise is proportional to it, and a
            // uniform loose tolerance on cheap wide-range variables turns
            // into real objective error.
            let mut entering: Option<(usize, f64)> = None;
            let mut best_score = 0.0;
            for j in 0..self.nt {
                let st = self.stat[j];
                if st == VarStatus::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let r = costs[j] - self.col_dot(j, &y);
                let tol = self.opts.tol_dual * (1.0 + costs[j].abs());
                let eligible = match st {
                    VarStatus::AtLower => r < -tol,
                    VarStatus::AtUpper => r > tol,
                    VarStatus::Free => r.abs() > tol,
                    VarStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                if self.bland {
                    entering = Some((j, r));
                    break;
                }
                let score = r * r / self.gamma[j].max(1e-10);
                if score > best_score {
                    best_score = score;
                    entering = Some((j, r));
                }
            }
            let (q, rq) = match entering {
                Some(e) => e,
                None => {
                    return Ok(if phase1 { PhaseEnd::NoEntering } else { PhaseEnd::Done });
                }
            };

            let dir: f64 = match self.stat[q] {
                VarStatus::AtUpper => -1.0,
                VarStatus::Free if rq > 0.0 => -1.0,
                _ => 1.0,
            };

            let mut w = vec![0.0; self.m];
            for &(k, c) in self.column(q) {
                w[k] = c;
            }
            self.ftran(&mut w);
            let wmax = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let piv_tol = self.opts.tol_pivot * (1.0 + wmax);

            // Ratio test. delta_c = change of basic c per unit step.
            let own_range = self.hi[q] - self.lo[q];
            let mut t_best = if own_range.is_finite() { own_range } else { INF };
            let mut leaving: Option<(usize, bool)> = None; // (basis position, leaves at upper)
            let mut leave_piv = 0.0;
            for k in 0..self.m {
                let c = self.basic[k];
                let delta = -dir * w[k];
                if delta.abs() <= piv_tol {
                    continue;
                }
                let state = if phase1 { self.feasibility(c) } else { Feas::Ok };
                let (limit, at_upper) = if delta > 0.0 {
                    match state {
                        Feas::Below => (self.lo[c], false),
                        _ => (self.hi[c], true),
                    }
                } else {
                    match state {
                        Feas::Above => (self.hi[c], true),
                        _ => (self.lo[c], false),
                    }
                };
                if !limit.is_finite() {
                    continue;
                }
                // Moving up and already above the limit is not a block in
                // phase 1 (the variable keeps worsening; others improve).
                if phase1 {
                    let blocks = match (state, delta > 0.0) {
                        (Feas::Below, true) => true,
                        (Feas::Below, false) => false,
                        (Feas::Above, false) => true,
                        (Feas::Above, true) => false,
                        (Feas::Ok, _) => true,
                    };
                    if !blocks {
                        continue;
                    }
                }
                let ratio = ((limit - self.x[c]) / delta).max(0.0);
                let tie = 1e-9 * (1.0 + t_best.min(ratio).abs());
                let better = if ratio < t_best - tie {
                    true
                } else if ratio <= t_best + tie && leaving.is_some() {
                    // Tie: Bland wants the smallest column index, otherwise
                    // prefer the largest pivot for stability.
                    if self.bland {
                        leaving.map(|(p, _)| c < self.basic[p]).unwrap_or(true)
                    } else {
                        w[k].abs() > leave_piv
                    }
                } else {
                    ratio <= t_best && leaving.is_none()
                };
                if better {
                    t_best = t_best.min(ratio);
                    leaving = Some((k, at_upper));
                    leave_piv = w[k].abs();
                }
            }

            if t_best.is_infinite() {
                if phase1 {
                    // Mathematically impossible; treat as numerical noise.
                    numerical_retries += 1;
                    if numerical_retries > 3 {
                        return Err(LpError::Numerical("phase 1 ratio test found no blocking bound".into()));
                    }
                    if self.refactor().is_err() {
                        self.recover()?;
                        return Ok(PhaseEnd::Restart);
                    }
                    self.compute_values();
                    continue;
                }
                return Ok(PhaseEnd::Unbounded);
            }
            numerical_retries = 0;
            self.iterations += 1;

            // Degenerate-stall bookkeeping drives the Bland fallback.
            if t_best <= 1e-11 {
                self.stall += 1;
                if self.stall > self.opts.stall_threshold {
                    self.bland = true;
                }
            } else {
                self.stall = 0;
                self.bland = false;
            }

            match leaving {
                Some((r_pos, at_upper)) if leaving_is_basic_block(t_best, own_range) => {
                    let leave_col = self.basic[r_pos];
                    self.update_se_weights(q, r_pos, &w);
                    // Apply the step.
                    for k in 0..self.m {
                        let c = self.basic[k];
                        self.x[c] -= dir * w[k] * t_best;
                    }
                    self.x[q] = match self.stat[q] {
                        VarStatus::AtLower => self.lo[q] + t_best,
                        VarStatus::AtUpper => self.hi[q] - t_best,
                        VarStatus::Free => dir * t_best,
                        VarStatus::Basic => unreachable!(),
                    };
                    self.x[leave_col] = if at_upper { self.hi[leave_col] } else { self.lo[leave_col] };
                    self.stat[leave_col] = if at_upper { VarStatus::AtUpper } else { VarStatus::AtLower };
                    self.stat[q] = VarStatus::Basic;
                    self.basic[r_pos] = q;
                    self.etas.push(Eta { row: r_pos, w });
                    if self.etas.len() >= self.opts.refactor_every {
                        if self.refactor().is_err() {
                            self.recover()?;
                            return Ok(PhaseEnd::Restart);
                        }
                        self.compute_values();
                    }
                }
                _ => {
                    // Bound flip: the entering variable traverses its own
                    // range without any basic variable blocking.
                    for k in 0..self.m {
                        let c = self.basic[k];
                        self.x[c] -= dir * w[k] * t_best;
                    }
                    match self.stat[q] {
                        VarStatus::AtLower => {
                            self.stat[q] = VarStatus::AtUpper;
                            self.x[q] = self.hi[q];
                        }
                        VarStatus::AtUpper => {
                            self.stat[q] = VarStatus::AtLower;
                            self.x[q] = self.lo[q];
                        }
                        VarStatus::Free => {
                            return Err(LpError::Numerical("free variable cannot bound-flip".into()))
                        }
                        VarStatus::Basic => unreachable!(),
                    }
                }
            }
        }
    }

    /// Goldfarb-style steepest-edge weight update; exactness is restored
    /// opportunistically (entering weight computed fresh from w).
    fn update_se_weights(&mut self, q: usize, r_pos: usize, w: &[f64]) {
        if self.bland || self.m == 0 {
            return;
        }
        let alpha_q = w[r_pos];
        if alpha_q.abs() < 1e-12 {
            return;
        }
        let gamma_q = 1.0 + w.iter().map(|v| v * v).sum::<f64>();

        let mut rho = vec![0.0; self.m];
        rho[r_pos] = 1.0;
        self.btran(&mut rho);
        let mut v = w.to_vec();
        self.btran(&mut v);

        for j in 0..self.nt {
            if self.stat[j] == VarStatus::Basic || j == q || self.lo[j] == self.hi[j] {
                continue;
            }
            let alpha_j = self.col_dot(j, &rho);
            if alpha_j.abs() < 1e-14 {
                continue;
            }
            let ratio = alpha_j / alpha_q;
            let tau_j = self.col_dot(j, &v);
            let cand = self.gamma[j] - 2.0 * ratio * tau_j + ratio * ratio * gamma_q;
            self.gamma[j] = cand.max(1.0 + ratio * ratio);
        }
        let leave_col = self.basic[r_pos];
        self.gamma[leave_col] = (gamma_q / (alpha_q * alpha_q)).max(1.0 + 1.0 / (alpha_q * alpha_q));
    }

    fn extract(&mut self, problem: &LpProblem, status: LpStatus) -> LpSolution {
        let y_int = self.duals_for(&self.cost.clone());
        let sign = if self.flip { -1.0 } else { 1.0 };
        let mut reduced = Vec::with_capacity(self.n);
        for j in 0..self.n {
            if self.stat[j] == VarStatus::Basic {
                reduced.push(0.0);
            } else {
                let r = self.cost[j] - self.col_dot(j, &y_int);
                reduced.push(sign * r);
            }
        }
        let row_duals: Vec<f64> = y_int.iter().map(|d| sign * d).collect();
        let primal: Vec<f64> = self.x[..self.n].to_vec();
        let objective = if status == LpStatus::Optimal || status == LpStatus::IterationLimit {
            problem.objective_value(&primal)
        } else {
            f64::NAN
        };
        LpSolution {
            status,
            objective,
            primal,
            row_duals,
            reduced_costs: reduced,
            basis: Basis { statuses: self.stat.clone() },
            iterations: self.iterations,
        }
    }
}

fn leaving_is_basic_block(t: f64, own_range: f64) -> bool {
    !own_range.is_finite() || t < own_range - 1e-12
}

enum PhaseEnd {
    Done,
    NoEntering,
    Unbounded,
    IterationLimit,
    Restart,
}
