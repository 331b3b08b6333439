//! Solver-neutral model builders for every formulation: deterministic
//! MIQP, extended robust MIQP, perspective MISOCP, Benders master, and
//! the normalized max-coverage subproblem with variable fixing.
//!
//! Variable naming: `y_i` openings, `x_i_j` allocations (created only for
//! covering pairs), `v_i` loads, `u_i` perspective epigraphs, `tau`/`pi_j`
//! coverage-protection duals, `rho_i`/`sig_i_j` load-protection duals.

use std::collections::HashMap;

use thiserror::Error;

use crate::instance::{Instance, RobustConfig};
use crate::lp::{LpProblem, Objective, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct VarDecl {
    pub name: String,
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
    pub obj_lin: f64,
    /// Coefficient of the squared term in the objective; only load
    /// variables carry one, and never together with a cone on the same
    /// variable.
    pub obj_quad: f64,
}

#[derive(Debug, Clone)]
pub struct LinRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `v^2 <= u * y` with `u, y >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RotatedCone {
    pub v: usize,
    pub u: usize,
    pub y: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulationKind {
    DeterministicMiqp,
    ExtendedRobustMiqp,
    PerspectiveMisocp,
    BendersMaster,
    BendersSubproblem,
}

#[derive(Debug, Clone)]
pub struct ModelIR {
    pub kind: FormulationKind,
    pub sense: Objective,
    pub vars: Vec<VarDecl>,
    pub rows: Vec<LinRow>,
    pub cones: Vec<RotatedCone>,
    pub var_index: HashMap<String, usize>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("gamma {gamma} outside [0, {max}]")]
    GammaOutOfRange { gamma: usize, max: usize },
    #[error("inconsistent model: {0}")]
    Inconsistent(String),
}

impl ModelIR {
    fn new(kind: FormulationKind, sense: Objective) -> Self {
        ModelIR { kind, sense, vars: Vec::new(), rows: Vec::new(), cones: Vec::new(), var_index: HashMap::new() }
    }

    fn add_var(&mut self, name: String, kind: VarKind, lo: f64, hi: f64, obj_lin: f64) -> usize {
        debug_assert!(!self.var_index.contains_key(&name), "duplicate variable {name}");
        let idx = self.vars.len();
        self.var_index.insert(name.clone(), idx);
        self.vars.push(VarDecl { name, kind, lo, hi, obj_lin, obj_quad: 0.0 });
        idx
    }

    fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(LinRow { coeffs, sense, rhs });
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    /// Indices of all variables whose name starts with `prefix_`,
    /// ordered by the numeric suffix.
    pub fn family(&self, prefix: &str) -> Vec<usize> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (name, &idx) in &self.var_index {
            if let Some(rest) = name.strip_prefix(prefix) {
                if let Ok(k) = rest.parse::<usize>() {
                    out.push((k, idx));
                }
            }
        }
        out.sort_unstable();
        out.into_iter().map(|(_, idx)| idx).collect()
    }

    /// Structural consistency checks; used by tests and debug builds.
    pub fn check(&self) -> Result<(), ModelError> {
        for (r, row) in self.rows.iter().enumerate() {
            for &(v, c) in &row.coeffs {
                if v >= self.vars.len() {
                    return Err(ModelError::Inconsistent(format!("row {r} references variable {v}")));
                }
                if !c.is_finite() {
                    return Err(ModelError::Inconsistent(format!("row {r} has non-finite coefficient")));
                }
            }
            if !row.rhs.is_finite() {
                return Err(ModelError::Inconsistent(format!("row {r} has non-finite rhs")));
            }
        }
        for (i, var) in self.vars.iter().enumerate() {
            if var.lo > var.hi {
                return Err(ModelError::Inconsistent(format!("variable {} has lo > hi", var.name)));
            }
            if var.obj_quad != 0.0 && self.cones.iter().any(|c| c.v == i) {
                return Err(ModelError::Inconsistent(format!(
                    "variable {} has both a quadratic objective term and a cone",
                    var.name
                )));
            }
        }
        for cone in &self.cones {
            for idx in [cone.v, cone.u, cone.y] {
                if idx >= self.vars.len() {
                    return Err(ModelError::Inconsistent("cone references undeclared variable".into()));
                }
            }
        }
        Ok(())
    }

    /// Lowers the linear part to an [`LpProblem`]; variable indices are
    /// preserved one-to-one. Quadratic terms and cones are the caller's
    /// business (the MIP engine outer-approximates them).
    pub fn to_lp(&self) -> LpProblem {
        let mut lp = LpProblem::new(self.sense);
        for var in &self.vars {
            lp.add_var(var.lo, var.hi, var.obj_lin);
        }
        for row in &self.rows {
            lp.add_row(row.coeffs.clone(), row.sense, row.rhs);
        }
        lp
    }

    /// Text dump for debugging, in an LP-format-like grammar:
    /// `min/max` objective line (squared terms as `q*name^2`), one row per
    /// line as `name: <terms> <sense> <rhs>`, bounds section, and cones as
    /// comment lines `\ cone: v^2 <= u y`.
    pub fn to_lp_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "\\ {:?}", self.kind);
        let dir = match self.sense {
            Objective::Minimize => "min",
            Objective::Maximize => "max",
        };
        let mut obj_terms: Vec<String> = Vec::new();
        for v in &self.vars {
            if v.obj_lin != 0.0 {
                obj_terms.push(format!("{:+} {}", v.obj_lin, v.name));
            }
            if v.obj_quad != 0.0 {
                obj_terms.push(format!("{:+} {}^2", v.obj_quad, v.name));
            }
        }
        let _ = writeln!(s, "{dir}: {}", obj_terms.join(" "));
        let _ = writeln!(s, "subject to");
        for (k, row) in self.rows.iter().enumerate() {
            let terms: Vec<String> =
                row.coeffs.iter().map(|&(v, c)| format!("{:+} {}", c, self.vars[v].name)).collect();
            let sense = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(s, "r{k}: {} {sense} {}", terms.join(" "), row.rhs);
        }
        let _ = writeln!(s, "bounds");
        for v in &self.vars {
            let _ = writeln!(s, "{} <= {} <= {}", v.lo, v.name, v.hi);
        }
        for cone in &self.cones {
            let _ = writeln!(
                s,
                "\\ cone: {}^2 <= {} {}",
                self.vars[cone.v].name, self.vars[cone.u].name, self.vars[cone.y].name
            );
        }
        s
    }
}

/// Bound-fixing access to the master variables inside the subproblem.
/// Fixing always goes through variable bounds, never through extra rows,
/// so the reduced costs of the fixed variables carry the cut data.
#[derive(Debug, Clone)]
pub struct FixingHandles {
    pub y: Vec<usize>,
    pub v: Vec<usize>,
}

impl FixingHandles {
    pub fn fix(&self, lp: &mut LpProblem, y_bar: &[f64], v_bar: &[f64]) {
        debug_assert_eq!(y_bar.len(), self.y.len());
        debug_assert_eq!(v_bar.len(), self.v.len());
        for (idx, &val) in self.y.iter().zip(y_bar) {
            lp.set_bounds(*idx, val, val).expect("fixing bounds");
        }
        for (idx, &val) in self.v.iter().zip(v_bar) {
            lp.set_bounds(*idx, val, val).expect("fixing bounds");
        }
    }
}

fn check_gamma(instance: &Instance, config: &RobustConfig) -> Result<(), ModelError> {
    if config.gamma > instance.n_customers() {
        return Err(ModelError::GammaOutOfRange { gamma: config.gamma, max: instance.n_customers() });
    }
    Ok(())
}

struct Skeleton {
    model: ModelIR,
    y: Vec<usize>,
    v: Vec<usize>,
    /// x variable index per covering pair, aligned with `Instance::pairs`.
    x: Vec<usize>,
}

/// Variables and rows shared by the deterministic, extended and
/// perspective formulations. The caller decides how v's cost is paid.
fn build_allocation_core(
    instance: &Instance,
    config: &RobustConfig,
    kind: FormulationKind,
) -> Skeleton {
    let nf = instance.n_facilities();
    let nc = instance.n_customers();
    let gamma = config.effective_gamma() as f64;
    let protect_load = config.mode.protects_load() && config.gamma > 0;
    let protect_cov = config.mode.protects_coverage() && config.gamma > 0;

    let mut model = ModelIR::new(kind, Objective::Minimize);

    let y: Vec<usize> = (0..nf)
        .map(|i| model.add_var(format!("y_{i}"), VarKind::Binary, 0.0, 1.0, instance.facilities[i].f))
        .collect();
    let pairs = instance.pairs();
    let x: Vec<usize> = pairs
        .iter()
        .map(|&(i, j)| model.add_var(format!("x_{i}_{j}"), VarKind::Continuous, 0.0, 1.0, 0.0))
        .collect();
    let v: Vec<usize> = (0..nf)
        .map(|i| model.add_var(format!("v_{i}"), VarKind::Continuous, 0.0, f64::INFINITY, instance.facilities[i].b))
        .collect();

    let mut tau = None;
    let mut pi = Vec::new();
    let mut rho = Vec::new();
    let mut sig = Vec::new();
    if protect_cov {
        tau = Some(model.add_var("tau".into(), VarKind::Continuous, 0.0, f64::INFINITY, 0.0));
        pi = (0..nc)
            .map(|j| model.add_var(format!("pi_{j}"), VarKind::Continuous, 0.0, f64::INFINITY, 0.0))
            .collect();
    }
    if protect_load {
        rho = (0..nf)
            .map(|i| model.add_var(format!("rho_{i}"), VarKind::Continuous, 0.0, f64::INFINITY, 0.0))
            .collect();
        sig = pairs
            .iter()
            .map(|&(i, j)| model.add_var(format!("sig_{i}_{j}"), VarKind::Continuous, 0.0, f64::INFINITY, 0.0))
            .collect();
    }

    let d = |j: usize| instance.customers[j].d;
    let dh = |j: usize| instance.customers[j].d_hat;

    // Load definition rows: v_i >= nominal load (+ protection).
    for i in 0..nf {
        let mut coeffs = vec![(v[i], 1.0)];
        for (p, &(pi_, pj)) in pairs.iter().enumerate() {
            if pi_ == i {
                coeffs.push((x[p], -d(pj)));
                if protect_load {
                    coeffs.push((sig[p], -1.0));
                }
            }
        }
        if protect_load {
            coeffs.push((rho[i], -gamma));
        }
        model.add_row(coeffs, Sense::Ge, 0.0);
    }

    // Coverage row: nominal demand minus coverage protection >= D.
    {
        let mut coeffs: Vec<(usize, f64)> =
            pairs.iter().enumerate().map(|(p, &(_, j))| (x[p], d(j))).collect();
        if protect_cov {
            coeffs.push((tau.unwrap(), -gamma));
            for &pj in &pi {
                coeffs.push((pj, -1.0));
            }
        }
        model.add_row(coeffs, Sense::Ge, instance.target_demand);
    }

    // Coverage-protection dual rows: tau + pi_j >= sum_i dhat_j x_ij.
    if protect_cov {
        for j in 0..nc {
            if instance.facilities_covering(j).is_empty() {
                continue;
            }
            let mut coeffs = vec![(tau.unwrap(), 1.0), (pi[j], 1.0)];
            for (p, &(_, pj)) in pairs.iter().enumerate() {
                if pj == j {
                    coeffs.push((x[p], -dh(j)));
                }
            }
            model.add_row(coeffs, Sense::Ge, 0.0);
        }
    }

    // Load-protection dual rows: rho_i + sig_ij >= dhat_j x_ij.
    if protect_load {
        for (p, &(i, j)) in pairs.iter().enumerate() {
            model.add_row(vec![(rho[i], 1.0), (sig[p], 1.0), (x[p], -dh(j))], Sense::Ge, 0.0);
        }
    }

    // Assignment rows: sum_i x_ij <= 1.
    for j in 0..nc {
        let coeffs: Vec<(usize, f64)> = pairs
            .iter()
            .enumerate()
            .filter(|(_, &(_, pj))| pj == j)
            .map(|(p, _)| (x[p], 1.0))
            .collect();
        if !coeffs.is_empty() {
            model.add_row(coeffs, Sense::Le, 1.0);
        }
    }

    // Linking rows: x_ij <= y_i.
    for (p, &(i, _)) in pairs.iter().enumerate() {
        model.add_row(vec![(x[p], 1.0), (y[i], -1.0)], Sense::Le, 0.0);
    }

    Skeleton { model, y, v, x }
}

/// Deterministic formulation: quadratic congestion on the load variables,
/// no protection terms. Identical for every robust config.
pub fn build_deterministic(instance: &Instance) -> ModelIR {
    let config = RobustConfig::deterministic();
    let mut sk = build_allocation_core(instance, &config, FormulationKind::DeterministicMiqp);
    for (i, &vi) in sk.v.iter().enumerate() {
        sk.model.vars[vi].obj_quad = instance.facilities[i].a;
    }
    sk.model
}

/// Extended robust formulation: dualized protection terms, quadratic
/// congestion kept in the objective.
pub fn build_extended_robust(instance: &Instance, config: &RobustConfig) -> Result<ModelIR, ModelError> {
    check_gamma(instance, config)?;
    let mut sk = build_allocation_core(instance, config, FormulationKind::ExtendedRobustMiqp);
    for (i, &vi) in sk.v.iter().enumerate() {
        sk.model.vars[vi].obj_quad = instance.facilities[i].a;
    }
    Ok(sk.model)
}

/// Perspective reformulation: the squared load cost becomes a linear cost
/// on `u_i` plus rotated cones `v_i^2 <= u_i y_i`.
pub fn build_perspective(instance: &Instance, config: &RobustConfig) -> Result<ModelIR, ModelError> {
    check_gamma(instance, config)?;
    let mut sk = build_allocation_core(instance, config, FormulationKind::PerspectiveMisocp);
    for i in 0..instance.n_facilities() {
        let u = sk.model.add_var(
            format!("u_{i}"),
            VarKind::Continuous,
            0.0,
            f64::INFINITY,
            instance.facilities[i].a,
        );
        sk.model.cones.push(RotatedCone { v: sk.v[i], u, y: sk.y[i] });
    }
    Ok(sk.model)
}

/// Benders master: openings, loads and perspective epigraphs only.
/// Feasibility cuts in (y, v) arrive later as linear rows.
pub fn build_master(instance: &Instance, config: &RobustConfig) -> Result<ModelIR, ModelError> {
    check_gamma(instance, config)?;
    let nf = instance.n_facilities();
    let mut model = ModelIR::new(FormulationKind::BendersMaster, Objective::Minimize);
    let y: Vec<usize> = (0..nf)
        .map(|i| model.add_var(format!("y_{i}"), VarKind::Binary, 0.0, 1.0, instance.facilities[i].f))
        .collect();
    for i in 0..nf {
        let cap = instance.load_cap(i);
        let v = model.add_var(format!("v_{i}"), VarKind::Continuous, 0.0, cap, instance.facilities[i].b);
        let u = model.add_var(format!("u_{i}"), VarKind::Continuous, 0.0, cap * cap, instance.facilities[i].a);
        model.cones.push(RotatedCone { v, u, y: y[i] });
    }
    Ok(model)
}

/// Normalized max-coverage subproblem with the master variables kept as
/// (fixable) variables. Rows mirror the chosen uncertainty mode.
pub fn build_subproblem(
    instance: &Instance,
    config: &RobustConfig,
) -> Result<(ModelIR, FixingHandles), ModelError> {
    check_gamma(instance, config)?;
    let nf = instance.n_facilities();
    let nc = instance.n_customers();
    let gamma = config.effective_gamma() as f64;
    let protect_load = config.mode.protects_load() && config.gamma > 0;
    let protect_cov = config.mode.protects_coverage() && config.gamma > 0;
    let pairs = instance.pairs();
    let d = |j: usize| instance.customers[j].d;
    let dh = |j: usize| instance.customers[j].d_hat;

    let mut model = ModelIR::new(FormulationKind::BendersSubproblem, Objective::Maximize);

    // Objective: worst-case coverage.
    let x: Vec<usize> = pairs
        .iter()
        .map(|&(i, j)| model.add_var(format!("x_{i}_{j}"), VarKind::Continuous, 0.0, 1.0, d(j)))
        .collect();
    let mut tau = None;
    let mut pi = Vec::new();
    let mut rho = Vec::new();
    let mut sig = Vec::new();
    if protect_cov {
        tau = Some(model.add_var("tau".into(), VarKind::Continuous, 0.0, f64::INFINITY, -gamma));
        pi = (0..nc)
            .map(|j| model.add_var(format!("pi_{j}"), VarKind::Continuous, 0.0, f64::INFINITY, -1.0))
            .collect();
    }
    if protect_load {
        rho = (0..nf)
            .map(|i| model.add_var(format!("rho_{i}"), VarKind::Continuous, 0.0, f64::INFINITY, 0.0))
            .collect();
        sig = pairs
            .iter()
            .map(|&(i, j)| model.add_var(format!("sig_{i}_{j}"), VarKind::Continuous, 0.0, f64::INFINITY, 0.0))
            .collect();
    }
    let y: Vec<usize> =
        (0..nf).map(|i| model.add_var(format!("y_{i}"), VarKind::Continuous, 0.0, 1.0, 0.0)).collect();
    let v: Vec<usize> = (0..nf)
        .map(|i| model.add_var(format!("v_{i}"), VarKind::Continuous, 0.0, instance.load_cap(i), 0.0))
        .collect();

    // Load rows: nominal load (+ protection) - v_i <= 0.
    for i in 0..nf {
        let mut coeffs = Vec::new();
        for (p, &(pi_, pj)) in pairs.iter().enumerate() {
            if pi_ == i {
                coeffs.push((x[p], d(pj)));
                if protect_load {
                    coeffs.push((sig[p], 1.0));
                }
            }
        }
        if protect_load {
            coeffs.push((rho[i], gamma));
        }
        coeffs.push((v[i], -1.0));
        model.add_row(coeffs, Sense::Le, 0.0);
    }

    if protect_cov {
        for j in 0..nc {
            if instance.facilities_covering(j).is_empty() {
                continue;
            }
            let mut coeffs = vec![(tau.unwrap(), 1.0), (pi[j], 1.0)];
            for (p, &(_, pj)) in pairs.iter().enumerate() {
                if pj == j {
                    coeffs.push((x[p], -dh(j)));
                }
            }
            model.add_row(coeffs, Sense::Ge, 0.0);
        }
    }
    if protect_load {
        for (p, &(i, j)) in pairs.iter().enumerate() {
            model.add_row(vec![(sig[p], 1.0), (rho[i], 1.0), (x[p], -dh(j))], Sense::Ge, 0.0);
        }
    }

    for j in 0..nc {
        let coeffs: Vec<(usize, f64)> = pairs
            .iter()
            .enumerate()
            .filter(|(_, &(_, pj))| pj == j)
            .map(|(p, _)| (x[p], 1.0))
            .collect();
        if !coeffs.is_empty() {
            model.add_row(coeffs, Sense::Le, 1.0);
        }
    }
    for (p, &(i, _)) in pairs.iter().enumerate() {
        model.add_row(vec![(x[p], 1.0), (y[i], -1.0)], Sense::Le, 0.0);
    }

    let handles = FixingHandles { y, v };
    Ok((model, handles))
}

/// Extracts the per-pair allocation values from a primal vector of any
/// allocation-bearing formulation, aligned with `Instance::pairs`.
pub fn extract_pair_values(instance: &Instance, model: &ModelIR, primal: &[f64]) -> Vec<f64> {
    instance
        .pairs()
        .iter()
        .map(|&(i, j)| model.var(&format!("x_{i}_{j}")).map(|idx| primal[idx]).unwrap_or(0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, GenParams, Meta, UncertaintyMode};
    use crate::instance::{Customer, Facility, Instance};

    fn tiny() -> Instance {
        // 1 facility, 1 customer, d = 10, D = 10, sitting on top of each other.
        Instance::new(
            Meta { seed: 0, generator_version: 0 },
            vec![Facility { id: 0, x: 0.0, y: 0.0, f: 5.0, a: 0.5, b: 1.0 }],
            vec![Customer { id: 0, x: 0.0, y: 0.0, d: 10.0, d_hat: 2.0 }],
            1.0,
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn deterministic_counts() {
        let inst = tiny();
        let m = build_deterministic(&inst);
        m.check().unwrap();
        assert_eq!(m.n_vars(), 3); // y_0, x_0_0, v_0
        assert!(m.var("y_0").is_some() && m.var("x_0_0").is_some() && m.var("v_0").is_some());
        // load definition + coverage + assignment + linking
        assert_eq!(m.rows.len(), 4);
        assert!(m.cones.is_empty());
        assert_eq!(m.vars[m.var("v_0").unwrap()].obj_quad, 0.5);
    }

    #[test]
    fn uncovered_customer_gets_no_allocation_vars() {
        let inst = Instance::new(
            Meta { seed: 0, generator_version: 0 },
            vec![Facility { id: 0, x: 0.0, y: 0.0, f: 5.0, a: 0.0, b: 1.0 }],
            vec![
                Customer { id: 0, x: 0.0, y: 0.0, d: 10.0, d_hat: 0.0 },
                Customer { id: 1, x: 20.0, y: 20.0, d: 7.0, d_hat: 0.0 },
            ],
            1.0,
            10.0,
        )
        .unwrap();
        let m = build_deterministic(&inst);
        assert!(m.var("x_0_1").is_none());
        assert!(m.var("x_0_0").is_some());
    }

    #[test]
    fn deterministic_ignores_config() {
        let inst = tiny();
        let a = build_deterministic(&inst);
        let b = build_extended_robust(&inst, &RobustConfig::new(1, UncertaintyMode::Deterministic)).unwrap();
        assert_eq!(a.n_vars(), b.n_vars());
        assert_eq!(a.rows.len(), b.rows.len());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.coeffs, rb.coeffs);
            assert_eq!(ra.rhs, rb.rhs);
        }
    }

    #[test]
    fn extended_robust_gamma_bounds() {
        let inst = tiny();
        let err = build_extended_robust(&inst, &RobustConfig::new(5, UncertaintyMode::Both));
        assert!(matches!(err, Err(ModelError::GammaOutOfRange { .. })));
    }

    #[test]
    fn extended_robust_has_protection_vars() {
        let inst = tiny();
        let m = build_extended_robust(&inst, &RobustConfig::new(1, UncertaintyMode::Both)).unwrap();
        m.check().unwrap();
        for name in ["tau", "pi_0", "rho_0", "sig_0_0"] {
            assert!(m.var(name).is_some(), "missing {name}");
        }
        let load_only = build_extended_robust(&inst, &RobustConfig::new(1, UncertaintyMode::LoadOnly)).unwrap();
        assert!(load_only.var("tau").is_none());
        assert!(load_only.var("rho_0").is_some());
        let cov_only =
            build_extended_robust(&inst, &RobustConfig::new(1, UncertaintyMode::CoverageOnly)).unwrap();
        assert!(cov_only.var("tau").is_some());
        assert!(cov_only.var("rho_0").is_none());
    }

    #[test]
    fn perspective_moves_quadratic_into_cones() {
        let inst = tiny();
        let m = build_perspective(&inst, &RobustConfig::new(1, UncertaintyMode::Both)).unwrap();
        m.check().unwrap();
        assert_eq!(m.cones.len(), 1);
        let v = m.var("v_0").unwrap();
        let u = m.var("u_0").unwrap();
        assert_eq!(m.vars[v].obj_quad, 0.0);
        assert_eq!(m.vars[u].obj_lin, 0.5);
    }

    #[test]
    fn master_shape() {
        let mut p = GenParams::new(3, 4, 12, 12.0);
        p.coverage_fraction = 0.5;
        let inst = generate(&p).unwrap();
        let m = build_master(&inst, &RobustConfig::new(3, UncertaintyMode::Both)).unwrap();
        m.check().unwrap();
        assert_eq!(m.n_vars(), 3 * inst.n_facilities());
        assert!(m.rows.is_empty());
        assert_eq!(m.cones.len(), inst.n_facilities());
        for i in 0..inst.n_facilities() {
            let v = m.var(&format!("v_{i}")).unwrap();
            let cap = inst.load_cap(i);
            assert_eq!(m.vars[v].hi, cap);
            let u = m.var(&format!("u_{i}")).unwrap();
            assert_eq!(m.vars[u].hi, cap * cap);
        }
    }

    #[test]
    fn subproblem_handles_point_at_master_vars() {
        let inst = tiny();
        let (m, handles) = build_subproblem(&inst, &RobustConfig::new(1, UncertaintyMode::Both)).unwrap();
        m.check().unwrap();
        assert_eq!(handles.y.len(), 1);
        assert_eq!(handles.v.len(), 1);
        assert_eq!(m.vars[handles.y[0]].name, "y_0");
        assert_eq!(m.vars[handles.v[0]].name, "v_0");
        assert_eq!(m.sense, Objective::Maximize);
    }

    #[test]
    fn family_lookup_is_ordered() {
        let inst = tiny();
        let m = build_master(&inst, &RobustConfig::new(0, UncertaintyMode::Both)).unwrap();
        assert_eq!(m.family("y_"), vec![m.var("y_0").unwrap()]);
    }

    #[test]
    fn lp_text_mentions_cones() {
        let inst = tiny();
        let m = build_perspective(&inst, &RobustConfig::new(1, UncertaintyMode::Both)).unwrap();
        let text = m.to_lp_text();
        assert!(text.contains("\\ cone: v_0^2 <= u_0 y_0"), "{text}");
    }
}
