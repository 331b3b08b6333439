//! LP-relaxation branch-and-cut for MIQP/MISOCP models: rotated cones and
//! quadratic objective terms are outer-approximated on the fly, lazy cuts
//! arrive through callback hooks, and the tree is explored
//! deterministically (single-threaded, id tie-breaks).

use std::collections::HashSet;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::lp::{self, Basis, LpProblem, LpStatus, Objective, Sense, VarStatus};
use crate::model::{LinRow, ModelIR, RotatedCone, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeSelection {
    BestBound,
    DepthFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BranchRule {
    MostFractional,
    PseudoCost,
}

/// All tolerances and limits for one solve, Benders thresholds included.
#[derive(Debug, Clone, Serialize)]
pub struct SolverParams {
    pub time_limit: f64,
    pub mip_gap: f64,
    pub int_tol: f64,
    pub cone_tol: f64,
    /// Benders separation threshold at integral points.
    pub tol_alpha_int: f64,
    /// Benders separation threshold at fractional (root) points.
    pub tol_alpha_frac: f64,
    /// Anchor components at or below this are treated as zeros by the
    /// epsilon perturbation.
    pub tol_beta: f64,
    /// Perturbation magnitude for degenerate subproblems.
    pub epsilon: f64,
    pub node_selection: NodeSelection,
    pub branch_rule: BranchRule,
    /// Cut passes allowed on fractional points at the root.
    pub root_frac_passes: u32,
    pub node_limit: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            time_limit: 900.0,
            mip_gap: 0.0,
            int_tol: 1e-9,
            cone_tol: 1e-7,
            tol_alpha_int: 1e-6,
            tol_alpha_frac: 0.5,
            tol_beta: 1e-8,
            epsilon: 1e-8,
            node_selection: NodeSelection::BestBound,
            branch_rule: BranchRule::MostFractional,
            root_frac_passes: 3,
            node_limit: u64::MAX,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), MipError> {
        let tols = [
            ("int_tol", self.int_tol),
            ("cone_tol", self.cone_tol),
            ("tol_alpha_int", self.tol_alpha_int),
            ("tol_alpha_frac", self.tol_alpha_frac),
            ("tol_beta", self.tol_beta),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in tols {
            if !(v > 0.0) {
                return Err(MipError::BadParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.mip_gap < 0.0 {
            return Err(MipError::BadParams(format!("mip_gap must be >= 0, got {}", self.mip_gap)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    Infeasible,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Best objective found; infinite when no incumbent exists.
    pub objective: f64,
    pub bound: f64,
    /// `(objective - bound) / max(|objective|, 1)` when both are finite.
    pub gap: f64,
    /// Values of the model variables at the incumbent; empty if none.
    pub incumbent: Vec<f64>,
    /// Nodes explored; fractional because multi-tree drivers report means.
    pub nodes: f64,
    /// Cuts added at integer candidates.
    pub bcuts: u64,
    /// Cuts added at fractional root points.
    pub frbcuts: u64,
    pub wall_time_s: f64,
    /// Global lower bound after each processed node (diagnostics).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub bound_trace: Vec<f64>,
}

impl SolveReport {
    fn gap_of(obj: f64, bound: f64) -> f64 {
        if obj.is_finite() && bound.is_finite() {
            (obj - bound) / obj.abs().max(1.0)
        } else {
            f64::INFINITY
        }
    }
}

pub struct CandidatePoint<'a> {
    /// Model-variable values (auxiliary engine variables stripped).
    pub values: &'a [f64],
    pub objective: f64,
    pub depth: u32,
}

pub enum CandidateResponse {
    Accept,
    Cuts(Vec<LinRow>),
}

/// Lazy/user cut callbacks. Integer-candidate cuts must be violated by
/// the candidate; no hook cut may exclude an integer-feasible point of
/// the true model.
pub struct CallbackHooks<'a> {
    pub on_integer_candidate: Box<dyn FnMut(&CandidatePoint) -> CandidateResponse + 'a>,
    pub on_root_fractional: Box<dyn FnMut(&CandidatePoint) -> Vec<LinRow> + 'a>,
}

#[derive(Debug, Error)]
pub enum MipError {
    #[error("bad solver params: {0}")]
    BadParams(String),
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
}

/// Supporting-hyperplane cut for the rotated cone `v^2 <= u y`,
/// `u, y >= 0`, taken on the convex form `||(2v, u - y)|| <= u + y` so the
/// cut is valid for every cone point. Returns `None` when the algebraic
/// violation `v^2 - u y` is within tolerance.
pub fn separate_cone_cut(v: f64, u: f64, y: f64, cone_tol: f64) -> Option<ConeCutCoeffs> {
    let viol = v * v - u * y;
    if viol <= cone_tol * (v * v).max(1.0) {
        return None;
    }
    let diff = u - y;
    let r = (4.0 * v * v + diff * diff).sqrt();
    if r <= 0.0 {
        return None;
    }
    let g_v = 4.0 * v / r;
    let g_u = diff / r - 1.0;
    let g_y = -diff / r - 1.0;
    let h = r - (u + y);
    // Convexity gives h(p) >= h(p_bar) + g.(p - p_bar) everywhere, and
    // cone points have h(p) <= 0, so h(p_bar) + g.(p - p_bar) <= 0 holds
    // on the whole cone.
    let rhs = g_v * v + g_u * u + g_y * y - h;
    Some(ConeCutCoeffs { coef_v: g_v, coef_u: g_u, coef_y: g_y, rhs, violation: h })
}

/// `coef_v * v + coef_u * u + coef_y * y <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeCutCoeffs {
    pub coef_v: f64,
    pub coef_u: f64,
    pub coef_y: f64,
    pub rhs: f64,
    /// Cut value minus rhs at the linearization point (always positive).
    pub violation: f64,
}

impl ConeCutCoeffs {
    pub fn to_row(&self, cone: &RotatedCone) -> LinRow {
        LinRow {
            coeffs: vec![(cone.v, self.coef_v), (cone.u, self.coef_u), (cone.y, self.coef_y)],
            sense: Sense::Le,
            rhs: self.rhs,
        }
    }

    pub fn satisfied_by(&self, v: f64, u: f64, y: f64, tol: f64) -> bool {
        self.coef_v * v + self.coef_u * u + self.coef_y * y <= self.rhs + tol
    }
}

struct QuadTerm {
    v: usize,
    t: usize,
    a: f64,
}

struct Lowered {
    lp: LpProblem,
    n_model_vars: usize,
    binaries: Vec<usize>,
    cones: Vec<RotatedCone>,
    quads: Vec<QuadTerm>,
}

fn lower(model: &ModelIR) -> Result<Lowered, MipError> {
    if model.sense == Objective::Maximize
        && (!model.cones.is_empty()
            || model.vars.iter().any(|v| v.kind == VarKind::Binary || v.obj_quad != 0.0))
    {
        return Err(MipError::Unsupported("maximization only supported for pure LPs".into()));
    }
    let mut lp = LpProblem::new(model.sense);
    let mut binaries = Vec::new();
    for (idx, var) in model.vars.iter().enumerate() {
        lp.add_var(var.lo, var.hi, var.obj_lin);
        if var.kind == VarKind::Binary {
            binaries.push(idx);
        }
    }
    let mut quads = Vec::new();
    for (idx, var) in model.vars.iter().enumerate() {
        if var.obj_quad != 0.0 {
            if var.obj_quad < 0.0 {
                return Err(MipError::Unsupported(format!(
                    "non-convex quadratic term on {}",
                    var.name
                )));
            }
            let hi = if var.hi.is_finite() { var.obj_quad * var.hi * var.hi } else { f64::INFINITY };
            let t = lp.add_var(0.0, hi, 1.0);
            quads.push(QuadTerm { v: idx, t, a: var.obj_quad });
        }
    }
    for row in &model.rows {
        lp.add_row(row.coeffs.clone(), row.sense, row.rhs);
    }
    Ok(Lowered { lp, n_model_vars: model.vars.len(), binaries, cones: model.cones.clone(), quads })
}

fn row_key(coeffs: &[(usize, f64)], sense: Sense, rhs: f64) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut sorted: Vec<(usize, u64)> = coeffs.iter().map(|&(v, c)| (v, c.to_bits())).collect();
    sorted.sort_unstable();
    let mut h = std::collections::hash_map::DefaultHasher::new();
    sorted.hash(&mut h);
    (sense as u8).hash(&mut h);
    rhs.to_bits().hash(&mut h);
    h.finish()
}

/// Extends a basis across newly appended rows: the new slacks enter the
/// basis, which stays nonsingular.
fn extend_basis(basis: &Basis, added_rows: usize) -> Basis {
    let mut statuses = basis.statuses.clone();
    statuses.extend(std::iter::repeat(VarStatus::Basic).take(added_rows));
    Basis { statuses }
}

struct Engine<'a> {
    params: &'a SolverParams,
    low: Lowered,
    cut_keys: HashSet<u64>,
    started: Instant,
    nodes: u64,
    bcuts: u64,
    frbcuts: u64,
}

struct NodeData {
    id: u64,
    depth: u32,
    bound: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    basis: Option<Basis>,
    /// (branch var, parent objective, fractional part) for pseudocosts.
    pending: Option<(usize, f64, f64)>,
}

/// Observed per-unit objective degradations for each branching direction.
#[derive(Default)]
pub struct PseudoTable {
    up_sum: Vec<f64>,
    up_cnt: Vec<u64>,
    down_sum: Vec<f64>,
    down_cnt: Vec<u64>,
}

impl PseudoTable {
    fn new(n: usize) -> Self {
        PseudoTable {
            up_sum: vec![0.0; n],
            up_cnt: vec![0; n],
            down_sum: vec![0.0; n],
            down_cnt: vec![0; n],
        }
    }

    fn record(&mut self, var: usize, up: bool, degradation: f64, frac: f64) {
        let per_unit = degradation / frac.max(1e-6);
        if up {
            self.up_sum[var] += per_unit;
            self.up_cnt[var] += 1;
        } else {
            self.down_sum[var] += per_unit;
            self.down_cnt[var] += 1;
        }
    }

    fn estimate(&self, var: usize, up: bool) -> Option<f64> {
        let (sum, cnt) = if up {
            (self.up_sum[var], self.up_cnt[var])
        } else {
            (self.down_sum[var], self.down_cnt[var])
        };
        if cnt == 0 {
            None
        } else {
            Some(sum / cnt as f64)
        }
    }
}

/// Picks the branching variable among fractional binaries; `None` when
/// all are integral.
pub fn choose_branch_var(
    binaries: &[usize],
    point: &[f64],
    rule: BranchRule,
    int_tol: f64,
    pseudo: Option<&PseudoTable>,
) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for &b in binaries {
        let val = point[b];
        let frac = (val - val.round()).abs();
        if frac <= int_tol {
            continue;
        }
        let score = match (rule, pseudo) {
            (BranchRule::PseudoCost, Some(table)) => {
                let f_down = val - val.floor();
                let f_up = val.ceil() - val;
                let down = table.estimate(b, false).unwrap_or(1.0) * f_down;
                let up = table.estimate(b, true).unwrap_or(1.0) * f_up;
                down.max(1e-6) * up.max(1e-6)
            }
            // Most fractional: the closer to one half, the better.
            _ => 0.5 - (val - 0.5).abs(),
        };
        match best {
            Some((s, i)) if score < s || (score == s && b >= i) => {}
            _ => best = Some((score, b)),
        }
    }
    best.map(|(_, i)| i)
}

pub fn solve_mip(
    model: &ModelIR,
    params: &SolverParams,
    hooks: Option<&mut CallbackHooks>,
) -> Result<SolveReport, MipError> {
    params.validate()?;
    let low = lower(model)?;
    let engine = Engine {
        params,
        low,
        cut_keys: HashSet::new(),
        started: Instant::now(),
        nodes: 0,
        bcuts: 0,
        frbcuts: 0,
    };
    engine.run(hooks)
}

/// Continuous relaxation value with the outer approximation driven to
/// `params.cone_tol`; integrality is ignored. Used for root-bound
/// comparisons between formulations.
pub fn solve_relaxation(model: &ModelIR, params: &SolverParams) -> Result<f64, MipError> {
    params.validate()?;
    let mut low = lower(model)?;
    let mut warm: Option<Basis> = None;
    let mut last_obj = f64::NEG_INFINITY;
    let mut flat_passes = 0;
    for _pass in 0..2000 {
        let sol = lp::solve(&low.lp, warm.as_ref())?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(MipError::Numerical("infeasible relaxation".into())),
            other => return Err(MipError::Numerical(format!("relaxation status {other:?}"))),
        }
        let cuts = collect_oa_cuts(&low, &sol.primal, params.cone_tol);
        if cuts.is_empty() {
            return Ok(sol.objective);
        }
        if (sol.objective - last_obj).abs() <= 1e-13 * (1.0 + sol.objective.abs()) {
            flat_passes += 1;
            if flat_passes >= 5 {
                return Ok(sol.objective);
            }
        } else {
            flat_passes = 0;
        }
        last_obj = sol.objective;
        let added = cuts.len();
        for row in cuts {
            low.lp.add_row(row.coeffs, row.sense, row.rhs);
        }
        warm = Some(extend_basis(&sol.basis, added));
    }
    Err(MipError::Numerical("outer approximation did not converge".into()))
}

fn collect_oa_cuts(low: &Lowered, point: &[f64], cone_tol: f64) -> Vec<LinRow> {
    let mut out = Vec::new();
    for cone in &low.cones {
        let (v, u, y) = (point[cone.v], point[cone.u].max(0.0), point[cone.y].max(0.0));
        if let Some(c) = separate_cone_cut(v, u, y, cone_tol) {
            out.push(c.to_row(cone));
        }
    }
    for q in &low.quads {
        let vbar = point[q.v];
        let tbar = point[q.t];
        let viol = q.a * vbar * vbar - tbar;
        if viol > cone_tol * (q.a * vbar * vbar).max(1.0) {
            // Tangent of a*v^2 at vbar: t >= a(2*vbar*v - vbar^2).
            out.push(LinRow {
                coeffs: vec![(q.v, 2.0 * q.a * vbar), (q.t, -1.0)],
                sense: Sense::Le,
                rhs: q.a * vbar * vbar,
            });
        }
    }
    out
}

impl<'a> Engine<'a> {
    fn time_left(&self) -> bool {
        self.started.elapsed().as_secs_f64() < self.params.time_limit
    }

    fn add_rows(&mut self, rows: Vec<LinRow>) -> usize {
        let mut added = 0;
        for row in rows {
            let key = row_key(&row.coeffs, row.sense, row.rhs);
            if self.cut_keys.insert(key) {
                self.low.lp.add_row(row.coeffs, row.sense, row.rhs);
                added += 1;
            }
        }
        added
    }

    fn run(mut self, mut hooks: Option<&mut CallbackHooks>) -> Result<SolveReport, MipError> {
        let n_lp = self.low.lp.n_vars();
        let n_model = self.low.n_model_vars;

        // Pure LP fast path (also the only path where Maximize is legal).
        if self.low.binaries.is_empty() && self.low.cones.is_empty() && self.low.quads.is_empty() {
            let sol = lp::solve(&self.low.lp, None)?;
            let (status, obj) = match sol.status {
                LpStatus::Optimal => (SolveStatus::Optimal, sol.objective),
                LpStatus::Infeasible => (SolveStatus::Infeasible, f64::INFINITY),
                other => return Err(MipError::Numerical(format!("LP status {other:?}"))),
            };
            return Ok(SolveReport {
                status,
                objective: obj,
                bound: obj,
                gap: 0.0,
                incumbent: if status == SolveStatus::Optimal { sol.primal } else { Vec::new() },
                nodes: 1.0,
                bcuts: 0,
                frbcuts: 0,
                wall_time_s: self.started.elapsed().as_secs_f64(),
                bound_trace: vec![obj],
            });
        }

        let mut pseudo = PseudoTable::new(n_lp);
        let mut incumbent: Option<(f64, Vec<f64>)> = None;
        let mut queue: Vec<NodeData> = Vec::new();
        let mut next_id = 0u64;
        let root_lo: Vec<f64> = (0..n_lp).map(|j| self.low.lp.bounds(j).0).collect();
        let root_hi: Vec<f64> = (0..n_lp).map(|j| self.low.lp.bounds(j).1).collect();
        queue.push(NodeData {
            id: 0,
            depth: 0,
            bound: f64::NEG_INFINITY,
            lo: root_lo,
            hi: root_hi,
            basis: None,
            pending: None,
        });
        next_id += 1;
        let mut root_frac_used = 0u32;
        let mut bound_trace: Vec<f64> = Vec::new();
        let mut status = SolveStatus::Optimal;

        while !queue.is_empty() {
            if !self.time_left() || self.nodes >= self.params.node_limit {
                status = SolveStatus::TimeLimit;
                break;
            }
            // Node selection.
            let pos = match self.params.node_selection {
                NodeSelection::BestBound => {
                    let mut best = 0;
                    for (k, node) in queue.iter().enumerate() {
                        if node.bound < queue[best].bound
                            || (node.bound == queue[best].bound && node.id < queue[best].id)
                        {
                            best = k;
                        }
                    }
                    best
                }
                NodeSelection::DepthFirst => queue.len() - 1,
            };
            let node = queue.swap_remove(pos);

            let cutoff = incumbent
                .as_ref()
                .map(|(obj, _)| {
                    obj - (self.params.mip_gap * obj.abs().max(1.0)).max(1e-9 * obj.abs().max(1.0))
                })
                .unwrap_or(f64::INFINITY);
            if node.bound >= cutoff {
                continue;
            }

            for j in 0..n_lp {
                self.low
                    .lp
                    .set_bounds(j, node.lo[j], node.hi[j])
                    .map_err(|e| MipError::Numerical(e.to_string()))?;
            }
            self.nodes += 1;
            if std::env::var("CPSCLP_DEBUG_NODES").is_ok() {
                eprintln!("pop id={} depth={} bound={:.6}", node.id, node.depth, node.bound);
            }
            let mut warm = node.basis.clone();
            if std::env::var("CPSCLP_NO_WARM").is_ok() { warm = None; }
            let mut node_obj;
            let mut sol;
            let mut oa_passes = 0u32;
            'node: loop {
                sol = lp::solve(&self.low.lp, warm.as_ref())?;
                match sol.status {
                    LpStatus::Optimal => {}
                    LpStatus::Infeasible => break 'node,
                    LpStatus::Unbounded => {
                        return Err(MipError::Unsupported("unbounded node relaxation".into()))
                    }
                    LpStatus::IterationLimit => {
                        return Err(MipError::Numerical("LP iteration limit".into()))
                    }
                }
                node_obj = sol.objective;
                if let Some((var, parent_obj, frac)) = node.pending {
                    if parent_obj.is_finite() {
                        let up = node.lo[var] > 0.5;
                        pseudo.record(var, up, (node_obj - parent_obj).max(0.0), frac);
                    }
                }
                if node_obj >= cutoff {
                    break 'node;
                }
                let integral = self.integral(&sol.primal);
                // Outer approximation at integral points and at the root.
                if integral || node.id == 0 {
                    let cuts = collect_oa_cuts(&self.low, &sol.primal, self.params.cone_tol);
                    if !cuts.is_empty() {
                        oa_passes += 1;
                        if oa_passes > 500 {
                            return Err(MipError::Numerical("outer approximation stalled".into()));
                        }
                        let added = self.add_rows(cuts);
                        if added > 0 {
                            warm = Some(extend_basis(&sol.basis, added));
                            continue 'node;
                        }
                    }
                }
                if integral {
                    let snapped = self.snap(&sol.primal);
                    let obj = self.low.lp.objective_value(&snapped);
                    if let Some(h) = hooks.as_deref_mut() {
                        let point = CandidatePoint {
                            values: &snapped[..n_model],
                            objective: obj,
                            depth: node.depth,
                        };
                        match (h.on_integer_candidate)(&point) {
                            CandidateResponse::Accept => {}
                            CandidateResponse::Cuts(rows) => {
                                let added = self.add_rows(rows);
                                if added > 0 {
                                    self.bcuts += added as u64;
                                    warm = Some(extend_basis(&sol.basis, added));
                                    continue 'node;
                                }
                                // All duplicates: the candidate already
                                // satisfies every known cut; accept it.
                                log::warn!("duplicate lazy cut at integral candidate; accepting");
                            }
                        }
                    }
                    if std::env::var("CPSCLP_DEBUG_NODES").is_ok() {
                        eprintln!("  integral id={} obj={:.6}", node.id, obj);
                    }
                    if incumbent.as_ref().map(|(best, _)| obj < *best).unwrap_or(true) {
                        incumbent = Some((obj, snapped));
                        log::info!(
                            "node={} obj={:.6} bound={:.6} gap={:.2e} cuts={}/{} t={:.2}",
                            self.nodes,
                            obj,
                            queue.iter().map(|n| n.bound).fold(node_obj, f64::min),
                            SolveReport::gap_of(obj, node_obj),
                            self.bcuts,
                            self.frbcuts,
                            self.started.elapsed().as_secs_f64()
                        );
                    }
                    break 'node;
                }
                // Fractional point: at the root, offer it to the user-cut
                // hook a bounded number of times.
                if node.id == 0 && root_frac_used < self.params.root_frac_passes {
                    if let Some(h) = hooks.as_deref_mut() {
                        let clamped = self.clamp_binaries(&sol.primal);
                        let point = CandidatePoint {
                            values: &clamped[..n_model],
                            objective: node_obj,
                            depth: node.depth,
                        };
                        let rows = (h.on_root_fractional)(&point);
                        if !rows.is_empty() {
                            let added = self.add_rows(rows);
                            if added > 0 {
                                self.frbcuts += added as u64;
                                root_frac_used += 1;
                                warm = Some(extend_basis(&sol.basis, added));
                                continue 'node;
                            }
                        }
                    }
                }
                // Branch.
                let table = if self.params.branch_rule == BranchRule::PseudoCost {
                    Some(&pseudo)
                } else {
                    None
                };
                let var = choose_branch_var(
                    &self.low.binaries,
                    &sol.primal,
                    self.params.branch_rule,
                    self.params.int_tol,
                    table,
                )
                .expect("fractional point must have a branch candidate");
                let frac = sol.primal[var] - sol.primal[var].floor();
                if std::env::var("CPSCLP_DEBUG_NODES").is_ok() {
                    eprintln!("  branch id={} on var {} val={:.6} obj={:.6}", node.id, var, sol.primal[var], node_obj);
                }
                let (down, up) = self.make_children(
                    &node,
                    var,
                    node_obj,
                    frac,
                    &sol.basis,
                    &mut next_id,
                );
                queue.push(down);
                queue.push(up);
                break 'node;
            }
            let open_bound = queue.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
            let global_bound = incumbent
                .as_ref()
                .map(|(obj, _)| open_bound.min(*obj))
                .unwrap_or(open_bound);
            bound_trace.push(global_bound);
            log::trace!(
                "node={} obj={} bound={} gap={} cuts={}/{} t={:.2}",
                self.nodes,
                incumbent.as_ref().map(|(o, _)| *o).unwrap_or(f64::INFINITY),
                global_bound,
                incumbent
                    .as_ref()
                    .map(|(o, _)| SolveReport::gap_of(*o, global_bound))
                    .unwrap_or(f64::INFINITY),
                self.bcuts,
                self.frbcuts,
                self.started.elapsed().as_secs_f64()
            );
        }

        let open_bound = queue.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        let (objective, incumbent_point) = match incumbent {
            Some((obj, point)) => (obj, point[..n_model].to_vec()),
            None => (f64::INFINITY, Vec::new()),
        };
        let bound = if status == SolveStatus::Optimal {
            if incumbent_point.is_empty() {
                status = SolveStatus::Infeasible;
                f64::INFINITY
            } else {
                objective
            }
        } else {
            open_bound.min(objective)
        };
        let gap =
            if status == SolveStatus::Optimal { 0.0 } else { SolveReport::gap_of(objective, bound) };
        Ok(SolveReport {
            status,
            objective,
            bound,
            gap,
            incumbent: incumbent_point,
            nodes: self.nodes as f64,
            bcuts: self.bcuts,
            frbcuts: self.frbcuts,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            bound_trace,
        })
    }

    fn integral(&self, point: &[f64]) -> bool {
        self.low
            .binaries
            .iter()
            .all(|&b| (point[b] - point[b].round()).abs() <= self.params.int_tol)
    }

    /// Rounds binaries to exact 0/1 (the solver may lack precision even on
    /// integral candidates).
    fn snap(&self, point: &[f64]) -> Vec<f64> {
        let mut out = point.to_vec();
        for &b in &self.low.binaries {
            out[b] = out[b].round().clamp(0.0, 1.0);
        }
        out
    }

    /// Clamps binaries into [0, 1] for fractional candidate points.
    fn clamp_binaries(&self, point: &[f64]) -> Vec<f64> {
        let mut out = point.to_vec();
        for &b in &self.low.binaries {
            out[b] = out[b].clamp(0.0, 1.0);
        }
        out
    }

    fn make_children(
        &self,
        node: &NodeData,
        var: usize,
        node_obj: f64,
        frac: f64,
        basis: &Basis,
        next_id: &mut u64,
    ) -> (NodeData, NodeData) {
        let mut down = NodeData {
            id: *next_id,
            depth: node.depth + 1,
            bound: node_obj,
            lo: node.lo.clone(),
            hi: node.hi.clone(),
            basis: Some(basis.clone()),
            pending: Some((var, node_obj, frac)),
        };
        *next_id += 1;
        down.lo[var] = 0.0;
        down.hi[var] = 0.0;
        // Perspective semantics: a closed facility carries no load.
        for cone in &self.low.cones {
            if cone.y == var {
                down.lo[cone.v] = 0.0;
                down.hi[cone.v] = 0.0;
                down.lo[cone.u] = 0.0;
                down.hi[cone.u] = 0.0;
            }
        }
        let mut up = NodeData {
            id: *next_id,
            depth: node.depth + 1,
            bound: node_obj,
            lo: node.lo.clone(),
            hi: node.hi.clone(),
            basis: Some(basis.clone()),
            pending: Some((var, node_obj, 1.0 - frac)),
        };
        *next_id += 1;
        up.lo[var] = 1.0;
        up.hi[var] = 1.0;
        (down, up)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FormulationKind, ModelIR, VarDecl};
    use std::collections::HashMap;

    fn empty_model(sense: Objective) -> ModelIR {
        ModelIR {
            kind: FormulationKind::BendersMaster,
            sense,
            vars: Vec::new(),
            rows: Vec::new(),
            cones: Vec::new(),
            var_index: HashMap::new(),
        }
    }

    fn add_var(m: &mut ModelIR, name: &str, kind: VarKind, lo: f64, hi: f64, obj: f64) -> usize {
        let idx = m.vars.len();
        m.vars.push(VarDecl { name: name.into(), kind, lo, hi, obj_lin: obj, obj_quad: 0.0 });
        m.var_index.insert(name.into(), idx);
        idx
    }

    #[test]
    fn cone_cut_matches_hand_derivation() {
        // At (2,1,1): convex form sqrt(4v^2+(u-y)^2) <= u+y has value 2,
        // gradient (2,-1,-1), so the cut is 2v - u - y <= 0.
        let cut = separate_cone_cut(2.0, 1.0, 1.0, 1e-7).unwrap();
        assert!((cut.coef_v - 2.0).abs() < 1e-12);
        assert!((cut.coef_u + 1.0).abs() < 1e-12);
        assert!((cut.coef_y + 1.0).abs() < 1e-12);
        assert!(cut.rhs.abs() < 1e-12);
        assert!((cut.violation - 2.0).abs() < 1e-12);
        // Tight at the linearization point, shifted by the violation.
        let lhs = cut.coef_v * 2.0 + cut.coef_u * 1.0 + cut.coef_y * 1.0;
        assert!((lhs - cut.rhs - cut.violation).abs() < 1e-12);
    }

    #[test]
    fn cone_cut_absent_on_cone() {
        assert!(separate_cone_cut(1.0, 1.0, 1.0, 1e-7).is_none());
        assert!(separate_cone_cut(0.0, 0.0, 0.0, 1e-7).is_none());
    }

    #[test]
    fn cone_cut_with_zero_y_is_valid() {
        let cut = separate_cone_cut(3.0, 0.5, 0.0, 1e-9).unwrap();
        // Every cone point must satisfy the cut.
        for &(v, u, y) in
            &[(0.0, 0.0, 0.0), (1.0, 1.0, 1.0), (2.0, 4.0, 1.0), (10.0, 100.0, 1.0), (5.0, 50.0, 0.5)]
        {
            assert!(cut.satisfied_by(v, u, y, 1e-9), "violated at ({v},{u},{y})");
        }
    }

    #[test]
    fn knapsack_toy() {
        // min -y1 - y2 st y1 + y2 <= 1.
        let mut m = empty_model(Objective::Minimize);
        let y1 = add_var(&mut m, "y_0", VarKind::Binary, 0.0, 1.0, -1.0);
        let y2 = add_var(&mut m, "y_1", VarKind::Binary, 0.0, 1.0, -1.0);
        m.rows.push(LinRow { coeffs: vec![(y1, 1.0), (y2, 1.0)], sense: Sense::Le, rhs: 1.0 });
        let report = solve_mip(&m, &SolverParams::default(), None).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.objective + 1.0).abs() < 1e-9);
        assert!(report.nodes <= 3.0, "nodes {}", report.nodes);
    }

    #[test]
    fn pure_lp_passthrough() {
        let mut m = empty_model(Objective::Maximize);
        let x = add_var(&mut m, "x", VarKind::Continuous, 0.0, 10.0, 1.0);
        m.rows.push(LinRow { coeffs: vec![(x, 1.0)], sense: Sense::Le, rhs: 5.0 });
        let report = solve_mip(&m, &SolverParams::default(), None).unwrap();
        let direct = lp::solve(&m.to_lp(), None).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.objective - direct.objective).abs() < 1e-12);
        assert_eq!(report.nodes, 1.0);
    }

    #[test]
    fn branch_rule_examples() {
        let binaries = vec![0, 1];
        assert_eq!(
            choose_branch_var(&binaries, &[0.5, 0.0], BranchRule::MostFractional, 1e-9, None),
            Some(0)
        );
        assert_eq!(
            choose_branch_var(&binaries, &[0.3, 0.5], BranchRule::MostFractional, 1e-9, None),
            Some(1)
        );
        // Tie broken toward the smallest index.
        assert_eq!(
            choose_branch_var(&binaries, &[0.5, 0.5], BranchRule::MostFractional, 1e-9, None),
            Some(0)
        );
        assert_eq!(
            choose_branch_var(&binaries, &[1.0, 0.0], BranchRule::MostFractional, 1e-9, None),
            None
        );
    }

    #[test]
    fn infeasible_binary_program() {
        let mut m = empty_model(Objective::Minimize);
        let y = add_var(&mut m, "y_0", VarKind::Binary, 0.0, 1.0, 1.0);
        m.rows.push(LinRow { coeffs: vec![(y, 1.0)], sense: Sense::Ge, rhs: 2.0 });
        let report = solve_mip(&m, &SolverParams::default(), None).unwrap();
        assert_eq!(report.status, SolveStatus::Infeasible);
    }

    #[test]
    fn bad_params_rejected() {
        let mut p = SolverParams::default();
        p.int_tol = 0.0;
        assert!(matches!(p.validate(), Err(MipError::BadParams(_))));
        let mut p2 = SolverParams::default();
        p2.mip_gap = -0.1;
        assert!(p2.validate().is_err());
    }
}
