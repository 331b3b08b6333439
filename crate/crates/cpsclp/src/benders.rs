//! Benders decomposition over the perspective master: normalized
//! feasibility-cut separation from the max-coverage subproblem, the
//! epsilon perturbation for degenerate anchors, and single-tree /
//! multi-tree drivers.
//!
//! The subproblem keeps the master variables (y, v) as its own variables
//! and pins them by equal bounds, so their reduced costs are exactly the
//! dual multipliers of the fixing constraints and supply the cut
//! coefficients.

use std::cell::RefCell;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::instance::{Instance, RobustConfig};
use crate::lp::{self, Basis, LpProblem, LpStatus, Sense};
use crate::mip::{
    solve_mip, CallbackHooks, CandidateResponse, MipError, SolveReport, SolveStatus, SolverParams,
};
use crate::model::{self, FixingHandles, LinRow, ModelError, ModelIR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CutOrigin {
    IntegerCandidate,
    RootFractional,
}

/// Normalized feasibility cut
/// `phi + sum_i rc_y_i (y_i - anchor_y_i) + sum_i rc_v_i (v_i - anchor_v_i) >= D`.
#[derive(Debug, Clone, Serialize)]
pub struct BendersCut {
    pub phi: f64,
    pub coef_y: Vec<f64>,
    pub coef_v: Vec<f64>,
    pub anchor_y: Vec<f64>,
    pub anchor_v: Vec<f64>,
    pub target: f64,
    pub perturbed: bool,
    pub origin: CutOrigin,
}

impl BendersCut {
    /// Left-hand side of the cut at a point.
    pub fn lhs_at(&self, y: &[f64], v: &[f64]) -> f64 {
        let mut val = self.phi;
        for (i, c) in self.coef_y.iter().enumerate() {
            val += c * (y[i] - self.anchor_y[i]);
        }
        for (i, c) in self.coef_v.iter().enumerate() {
            val += c * (v[i] - self.anchor_v[i]);
        }
        val
    }

    pub fn satisfied_by(&self, y: &[f64], v: &[f64], tol: f64) -> bool {
        self.lhs_at(y, v) >= self.target - tol
    }

    /// Renders the cut as a master row over the given y/v variable
    /// indices.
    pub fn to_row(&self, y_idx: &[usize], v_idx: &[usize]) -> LinRow {
        let mut coeffs = Vec::with_capacity(y_idx.len() + v_idx.len());
        let mut rhs = self.target - self.phi;
        for (i, &c) in self.coef_y.iter().enumerate() {
            if c != 0.0 {
                coeffs.push((y_idx[i], c));
            }
            rhs += c * self.anchor_y[i];
        }
        for (i, &c) in self.coef_v.iter().enumerate() {
            if c != 0.0 {
                coeffs.push((v_idx[i], c));
            }
            rhs += c * self.anchor_v[i];
        }
        LinRow { coeffs, sense: Sense::Ge, rhs }
    }

    fn almost_equal(&self, other: &BendersCut, tol: f64) -> bool {
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol);
        close(&self.coef_y, &other.coef_y)
            && close(&self.coef_v, &other.coef_v)
            && (self.effective_rhs() - other.effective_rhs()).abs() <= tol
    }

    fn effective_rhs(&self) -> f64 {
        let mut rhs = self.target - self.phi;
        for (i, &c) in self.coef_y.iter().enumerate() {
            rhs += c * self.anchor_y[i];
        }
        for (i, &c) in self.coef_v.iter().enumerate() {
            rhs += c * self.anchor_v[i];
        }
        rhs
    }
}

#[derive(Debug, Error)]
pub enum BendersError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error(transparent)]
    Mip(#[from] MipError),
    #[error("subproblem returned {0:?}; it is feasible and bounded by construction")]
    SubproblemStatus(LpStatus),
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error("duplicate cut at a violated anchor; numerical stall")]
    DuplicateCut,
}

#[derive(Debug, Error)]
pub enum CutError {
    #[error(
        "anchor does not violate its own cut (phi {phi} >= target {target}); \
         epsilon too large for this subproblem"
    )]
    AnchorNotViolated { phi: f64, target: f64 },
    #[error("non-finite cut data")]
    NonFinite,
}

/// Replaces anchor components at or below `tol_beta` with `epsilon`,
/// leaving the rest untouched.
pub fn perturb(
    y_bar: &[f64],
    v_bar: &[f64],
    epsilon: f64,
    tol_beta: f64,
) -> (Vec<f64>, Vec<f64>) {
    debug_assert!(epsilon > 0.0 && tol_beta >= 0.0);
    let lift = |vals: &[f64]| -> Vec<f64> {
        vals.iter().map(|&t| if t <= tol_beta { epsilon } else { t }).collect()
    };
    (lift(y_bar), lift(v_bar))
}

/// Converts the perturbed subproblem value back to the unperturbed
/// anchor: the perturbed optimum overpays exactly the reduced cost of
/// every lifted component times the lift amount.
pub fn unperturbed_value(
    phi_eps: f64,
    y_bar: &[f64],
    v_bar: &[f64],
    y_eps: &[f64],
    v_eps: &[f64],
    rc_y: &[f64],
    rc_v: &[f64],
) -> f64 {
    let mut phi = phi_eps;
    for i in 0..y_bar.len() {
        phi -= (y_eps[i] - y_bar[i]) * rc_y[i];
    }
    for i in 0..v_bar.len() {
        phi -= (v_eps[i] - v_bar[i]) * rc_v[i];
    }
    phi
}

/// Separation gate: cut only when `phi / D < 1 - tol_alpha`, with the
/// loose tolerance at fractional anchors.
pub fn violated(phi: f64, target: f64, is_integral: bool, params: &SolverParams) -> bool {
    debug_assert!(target > 0.0);
    let tol = if is_integral { params.tol_alpha_int } else { params.tol_alpha_frac };
    phi / target < 1.0 - tol
}

/// Assembles the normalized feasibility cut from an evaluation. The
/// caller re-tags `origin` as needed.
pub fn make_cut(
    phi: f64,
    y_bar: &[f64],
    v_bar: &[f64],
    rc_y: &[f64],
    rc_v: &[f64],
    target: f64,
) -> Result<BendersCut, CutError> {
    if !phi.is_finite()
        || rc_y.iter().chain(rc_v).any(|c| !c.is_finite())
    {
        return Err(CutError::NonFinite);
    }
    if phi >= target {
        return Err(CutError::AnchorNotViolated { phi, target });
    }
    Ok(BendersCut {
        phi,
        coef_y: rc_y.to_vec(),
        coef_v: rc_v.to_vec(),
        anchor_y: y_bar.to_vec(),
        anchor_v: v_bar.to_vec(),
        target,
        perturbed: false,
        origin: CutOrigin::IntegerCandidate,
    })
}

/// One subproblem evaluation: the (back-converted) coverage value, the
/// reduced costs of the fixed master variables, and the allocation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub phi: f64,
    /// Raw optimum of the perturbed LP when epsilon was used.
    pub phi_perturbed: Option<f64>,
    pub rc_y: Vec<f64>,
    pub rc_v: Vec<f64>,
    pub x_pairs: Vec<f64>,
    pub perturbed: bool,
}

/// Prepared subproblem: built once, refixed and re-solved (warm started)
/// for every anchor. The structure never changes between evaluations.
pub struct SubproblemHandle {
    pub model: ModelIR,
    lp: LpProblem,
    fixing: FixingHandles,
    basis: Option<Basis>,
    n_pairs: usize,
    target: f64,
    pub evaluations: u64,
}

impl SubproblemHandle {
    pub fn new(instance: &Instance, config: &RobustConfig) -> Result<Self, BendersError> {
        let (model, fixing) = model::build_subproblem(instance, config)?;
        let lp = model.to_lp();
        Ok(SubproblemHandle {
            model,
            lp,
            fixing,
            basis: None,
            n_pairs: instance.pairs().len(),
            target: instance.target_demand,
            evaluations: 0,
        })
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    /// Fixes (y, v) to the anchor — perturbed first when requested — via
    /// bounds, solves the LP, and reads the reduced costs of the fixed
    /// variables.
    pub fn evaluate(
        &mut self,
        y_bar: &[f64],
        v_bar: &[f64],
        use_epsilon: bool,
        params: &SolverParams,
    ) -> Result<Evaluation, BendersError> {
        debug_assert!(y_bar.iter().all(|&t| (-1e-9..=1.0 + 1e-9).contains(&t)));
        debug_assert!(v_bar.iter().all(|&t| t >= -1e-9));
        let (y_fix, v_fix) = if use_epsilon {
            perturb(y_bar, v_bar, params.epsilon, params.tol_beta)
        } else {
            (y_bar.to_vec(), v_bar.to_vec())
        };
        self.fixing.fix(&mut self.lp, &y_fix, &v_fix);
        let sol = lp::solve(&self.lp, self.basis.as_ref())?;
        if sol.status != LpStatus::Optimal {
            return Err(BendersError::SubproblemStatus(sol.status));
        }
        self.basis = Some(sol.basis.clone());
        self.evaluations += 1;

        let rc_y: Vec<f64> = self.fixing.y.iter().map(|&k| sol.reduced_costs[k]).collect();
        let rc_v: Vec<f64> = self.fixing.v.iter().map(|&k| sol.reduced_costs[k]).collect();
        let x_pairs: Vec<f64> = (0..self.n_pairs).map(|p| sol.primal[p]).collect();
        let (phi, phi_perturbed) = if use_epsilon {
            let phi = unperturbed_value(sol.objective, y_bar, v_bar, &y_fix, &v_fix, &rc_y, &rc_v);
            (phi, Some(sol.objective))
        } else {
            (sol.objective, None)
        };
        Ok(Evaluation { phi, phi_perturbed, rc_y, rc_v, x_pairs, perturbed: use_epsilon })
    }
}

/// Everything a Benders run produces beyond the solver report: the cut
/// pool for auditing and the final subproblem allocation for metrics.
pub struct BendersOutcome {
    pub report: SolveReport,
    pub cuts: Vec<BendersCut>,
    /// Coverage value of the final incumbent, when one exists.
    pub final_phi: Option<f64>,
    /// Subproblem allocation at the final incumbent.
    pub final_x_pairs: Vec<f64>,
}

/// Serializes the cut pool for audit.
pub fn dump_cut_pool(cuts: &[BendersCut]) -> String {
    serde_json::to_string_pretty(cuts).expect("cuts serialize")
}

fn push_unique(pool: &mut Vec<BendersCut>, cut: BendersCut) -> Option<&BendersCut> {
    if pool.iter().any(|c| c.almost_equal(&cut, 1e-12)) {
        return None;
    }
    pool.push(cut);
    pool.last()
}

/// Branch-and-Benders-cut: one enumeration tree over the master, with
/// subproblem separation at every integer candidate and at the root
/// (fractional points included, a bounded number of times).
pub fn solve_single_tree(
    instance: &Instance,
    config: &RobustConfig,
    params: &SolverParams,
    use_epsilon: bool,
) -> Result<BendersOutcome, BendersError> {
    let master = model::build_master(instance, config)?;
    let y_idx = master.family("y_");
    let v_idx = master.family("v_");
    let target = instance.target_demand;

    let sub = RefCell::new(SubproblemHandle::new(instance, config)?);
    let pool: RefCell<Vec<BendersCut>> = RefCell::new(Vec::new());
    let failure: RefCell<Option<BendersError>> = RefCell::new(None);

    let report = {
        let separate = |pt_values: &[f64], integral: bool| -> Vec<LinRow> {
            let y_bar: Vec<f64> = y_idx.iter().map(|&k| pt_values[k]).collect();
            let v_bar: Vec<f64> = v_idx.iter().map(|&k| pt_values[k].max(0.0)).collect();
            let mut sub = sub.borrow_mut();
            let eval = match sub.evaluate(&y_bar, &v_bar, use_epsilon, params) {
                Ok(e) => e,
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    return Vec::new();
                }
            };
            if !violated(eval.phi, target, integral, params) {
                return Vec::new();
            }
            let mut cut = match make_cut(eval.phi, &y_bar, &v_bar, &eval.rc_y, &eval.rc_v, target) {
                Ok(c) => c,
                Err(e) => {
                    *failure.borrow_mut() = Some(e.into());
                    return Vec::new();
                }
            };
            cut.perturbed = use_epsilon;
            cut.origin =
                if integral { CutOrigin::IntegerCandidate } else { CutOrigin::RootFractional };
            let mut pool = pool.borrow_mut();
            match push_unique(&mut pool, cut) {
                Some(cut) => vec![cut.to_row(&y_idx, &v_idx)],
                None => Vec::new(),
            }
        };

        let mut hooks = CallbackHooks {
            on_integer_candidate: Box::new(|pt| {
                let rows = separate(pt.values, true);
                if rows.is_empty() {
                    CandidateResponse::Accept
                } else {
                    CandidateResponse::Cuts(rows)
                }
            }),
            on_root_fractional: Box::new(|pt| separate(pt.values, false)),
        };
        solve_mip(&master, params, Some(&mut hooks))?
    };
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }

    let mut sub = sub.into_inner();
    let cuts = pool.into_inner();
    let (final_phi, final_x_pairs) = if report.incumbent.is_empty() {
        (None, Vec::new())
    } else {
        let y_star: Vec<f64> = y_idx.iter().map(|&k| report.incumbent[k].round()).collect();
        let v_star: Vec<f64> = v_idx.iter().map(|&k| report.incumbent[k].max(0.0)).collect();
        let eval = sub.evaluate(&y_star, &v_star, false, params)?;
        if report.status == SolveStatus::Optimal
            && eval.phi < target * (1.0 - params.tol_alpha_int)
        {
            log::error!(
                "single-tree incumbent misses coverage: phi {} < target {target}",
                eval.phi
            );
        }
        (Some(eval.phi), eval.x_pairs)
    };
    Ok(BendersOutcome { report, cuts, final_phi, final_x_pairs })
}

/// Classic cutting-plane loop: solve the master MISOCP to optimality,
/// evaluate its optimum, add one cut, repeat. `Nodes` in the report is
/// the mean node count per master solve.
pub fn solve_multi_tree(
    instance: &Instance,
    config: &RobustConfig,
    params: &SolverParams,
    use_epsilon: bool,
) -> Result<BendersOutcome, BendersError> {
    let started = Instant::now();
    let mut master = model::build_master(instance, config)?;
    let y_idx = master.family("y_");
    let v_idx = master.family("v_");
    let target = instance.target_demand;
    let mut sub = SubproblemHandle::new(instance, config)?;
    let mut pool: Vec<BendersCut> = Vec::new();

    let mut node_counts: Vec<f64> = Vec::new();
    let mut last_master: Option<SolveReport> = None;
    let mut outcome_eval: Option<Evaluation> = None;
    let mut timed_out = false;

    for iter in 0..100_000 {
        let elapsed = started.elapsed().as_secs_f64();
        let remaining = params.time_limit - elapsed;
        if remaining <= 0.0 {
            timed_out = true;
            break;
        }
        let mut master_params = params.clone();
        master_params.time_limit = remaining;
        let report = solve_mip(&master, &master_params, None)?;
        node_counts.push(report.nodes);
        if report.status != SolveStatus::Optimal {
            timed_out = true;
            last_master = Some(report);
            break;
        }
        let y_bar: Vec<f64> = y_idx.iter().map(|&k| report.incumbent[k].round()).collect();
        let v_bar: Vec<f64> = v_idx.iter().map(|&k| report.incumbent[k].max(0.0)).collect();
        let eval = sub.evaluate(&y_bar, &v_bar, use_epsilon, params)?;
        let cut_needed = violated(eval.phi, target, true, params);
        log::info!(
            "iter={} master_obj={:.6} phi={:.6} cut={} t={:.2}",
            iter,
            report.objective,
            eval.phi,
            if cut_needed { "yes" } else { "no" },
            started.elapsed().as_secs_f64()
        );
        if !cut_needed {
            outcome_eval = Some(eval);
            last_master = Some(report);
            break;
        }
        let mut cut = make_cut(eval.phi, &y_bar, &v_bar, &eval.rc_y, &eval.rc_v, target)?;
        cut.perturbed = use_epsilon;
        cut.origin = CutOrigin::IntegerCandidate;
        let row = match push_unique(&mut pool, cut) {
            Some(c) => c.to_row(&y_idx, &v_idx),
            None => return Err(BendersError::DuplicateCut),
        };
        master.rows.push(row);
        last_master = Some(report);
    }

    let iterations = node_counts.len().max(1) as f64;
    let mean_nodes = node_counts.iter().sum::<f64>() / iterations;
    let wall = started.elapsed().as_secs_f64();
    let report = if outcome_eval.is_some() {
        let master_report = last_master.expect("termination implies a solved master");
        SolveReport {
            status: SolveStatus::Optimal,
            objective: master_report.objective,
            bound: master_report.objective,
            gap: 0.0,
            incumbent: master_report.incumbent,
            nodes: mean_nodes,
            bcuts: pool.len() as u64,
            frbcuts: 0,
            wall_time_s: wall,
            bound_trace: Vec::new(),
        }
    } else {
        // Out of time (or the loop never ran): the last master value is a
        // valid lower bound; no feasible solution is known.
        debug_assert!(timed_out);
        let bound =
            last_master.as_ref().map(|r| r.bound.min(r.objective)).unwrap_or(f64::NEG_INFINITY);
        SolveReport {
            status: SolveStatus::TimeLimit,
            objective: f64::INFINITY,
            bound,
            gap: f64::INFINITY,
            incumbent: Vec::new(),
            nodes: mean_nodes,
            bcuts: pool.len() as u64,
            frbcuts: 0,
            wall_time_s: wall,
            bound_trace: Vec::new(),
        }
    };
    let (final_phi, final_x_pairs) = match outcome_eval {
        Some(eval) => (Some(eval.phi), eval.x_pairs),
        None => (None, Vec::new()),
    };
    Ok(BendersOutcome { report, cuts: pool, final_phi, final_x_pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SolverParams {
        SolverParams::default()
    }

    #[test]
    fn perturb_replaces_zeros() {
        let (y, v) = perturb(&[1.0, 0.0], &[0.0, 3.0], 1e-8, 1e-8);
        assert_eq!(y, vec![1.0, 1e-8]);
        assert_eq!(v, vec![1e-8, 3.0]);
    }

    #[test]
    fn perturb_replaces_below_threshold() {
        let (y, _) = perturb(&[1e-9, 0.5], &[], 1e-8, 1e-8);
        assert_eq!(y, vec![1e-8, 0.5]);
    }

    #[test]
    fn perturb_identity_on_positive() {
        let v_bar = vec![0.3, 2.0, 5.5];
        let (_, v) = perturb(&[], &v_bar, 1e-8, 1e-8);
        assert_eq!(v, v_bar);
    }

    #[test]
    fn violated_gate_examples() {
        let p = params();
        assert!(!violated(100.0, 100.0, true, &p));
        // Fractional gate: 0.6 D is not far enough from D.
        assert!(!violated(60.0, 100.0, false, &p));
        assert!(violated(40.0, 100.0, false, &p));
        assert!(violated(99.99, 100.0, true, &p));
    }

    #[test]
    fn make_cut_rejects_satisfied_anchor() {
        let err = make_cut(30.0, &[0.0], &[0.0], &[1.0], &[1.0], 30.0);
        assert!(matches!(err, Err(CutError::AnchorNotViolated { .. })));
    }

    #[test]
    fn cut_row_algebra() {
        let cut = BendersCut {
            phi: 5.0,
            coef_y: vec![40.0],
            coef_v: vec![1.0],
            anchor_y: vec![0.0],
            anchor_v: vec![5.0],
            target: 30.0,
            perturbed: false,
            origin: CutOrigin::IntegerCandidate,
        };
        // 5 + 40(y-0) + 1(v-5) >= 30  <=>  40y + v >= 30.
        let row = cut.to_row(&[0], &[1]);
        assert_eq!(row.sense, Sense::Ge);
        assert!((row.rhs - 30.0).abs() < 1e-12);
        assert_eq!(row.coeffs, vec![(0, 40.0), (1, 1.0)]);
        // The anchor violates the cut by construction.
        assert!(cut.lhs_at(&[0.0], &[5.0]) < cut.target);
        assert!(cut.satisfied_by(&[1.0], &[30.0], 1e-9));
    }

    #[test]
    fn unperturbed_value_algebra() {
        // phi_eps = phi + eps * (rc of every lifted zero).
        let y_bar = [0.0, 1.0];
        let v_bar = [0.0, 2.0];
        let (y_eps, v_eps) = perturb(&y_bar, &v_bar, 1e-8, 1e-8);
        let rc_y = [40.0, 0.0];
        let rc_v = [1.0, 0.0];
        let phi_eps = 7.0;
        let phi = unperturbed_value(phi_eps, &y_bar, &v_bar, &y_eps, &v_eps, &rc_y, &rc_v);
        assert!((phi - (7.0 - 1e-8 * 41.0)).abs() < 1e-15);
    }

    #[test]
    fn pool_drops_duplicates() {
        let mk = || BendersCut {
            phi: 1.0,
            coef_y: vec![2.0],
            coef_v: vec![3.0],
            anchor_y: vec![0.0],
            anchor_v: vec![0.0],
            target: 10.0,
            perturbed: false,
            origin: CutOrigin::IntegerCandidate,
        };
        let mut pool = Vec::new();
        assert!(push_unique(&mut pool, mk()).is_some());
        assert!(push_unique(&mut pool, mk()).is_none());
        assert_eq!(pool.len(), 1);
    }
}
