//! Problem data: facilities, customers, coverage structure, and the
//! random testbed generator.
//!
//! Instances are immutable once built. Coverage sets are always derived
//! from coordinates and the radius (squared-distance comparison, no
//! square roots), never stored in files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bumped whenever the generator's draw order changes.
pub const GENERATOR_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facility {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Opening cost `f_i`.
    pub f: f64,
    /// Quadratic congestion coefficient `a_i`.
    pub a: f64,
    /// Linear congestion coefficient `b_i`.
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Customer {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Nominal demand `d_j`.
    pub d: f64,
    /// Maximum deviation from nominal demand.
    pub d_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub seed: u64,
    pub generator_version: u32,
}

/// Which robust terms enter the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UncertaintyMode {
    /// Protect congestion and coverage.
    Both,
    /// Protect only the facility loads.
    LoadOnly,
    /// Protect only the coverage constraint.
    CoverageOnly,
    /// No protection at all (equivalent to gamma = 0).
    Deterministic,
}

impl UncertaintyMode {
    pub fn protects_load(self) -> bool {
        matches!(self, UncertaintyMode::Both | UncertaintyMode::LoadOnly)
    }

    pub fn protects_coverage(self) -> bool {
        matches!(self, UncertaintyMode::Both | UncertaintyMode::CoverageOnly)
    }

    pub fn flag_name(self) -> &'static str {
        match self {
            UncertaintyMode::Both => "both",
            UncertaintyMode::LoadOnly => "load",
            UncertaintyMode::CoverageOnly => "coverage",
            UncertaintyMode::Deterministic => "det",
        }
    }

    pub fn from_flag(s: &str) -> Option<Self> {
        match s {
            "both" => Some(UncertaintyMode::Both),
            "load" => Some(UncertaintyMode::LoadOnly),
            "coverage" => Some(UncertaintyMode::CoverageOnly),
            "det" => Some(UncertaintyMode::Deterministic),
            _ => None,
        }
    }
}

impl fmt::Display for UncertaintyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.flag_name())
    }
}

/// Protection budget and mode for one solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RobustConfig {
    /// Number of demand deviations protected against, in `[0, |J|]`.
    pub gamma: usize,
    pub mode: UncertaintyMode,
}

impl RobustConfig {
    pub fn new(gamma: usize, mode: UncertaintyMode) -> Self {
        RobustConfig { gamma, mode }
    }

    pub fn deterministic() -> Self {
        RobustConfig { gamma: 0, mode: UncertaintyMode::Deterministic }
    }

    /// Effective budget: zero whenever the mode ignores uncertainty.
    pub fn effective_gamma(&self) -> usize {
        if self.mode == UncertaintyMode::Deterministic { 0 } else { self.gamma }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub meta: Meta,
    pub facilities: Vec<Facility>,
    pub customers: Vec<Customer>,
    pub radius: f64,
    pub target_demand: f64,
    /// `I(j)`: facilities within the radius of customer j. Derived.
    pub(crate) covering: Vec<Vec<usize>>,
    /// `J(i)`: customers within the radius of facility i. Derived.
    pub(crate) covered: Vec<Vec<usize>>,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("structurally infeasible: coverable demand {coverable} < target demand {target}")]
    StructurallyInfeasible { coverable: f64, target: f64 },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid instance: {0}")]
    Validation(ViolationList),
}

/// One broken invariant: which field, at which index, which rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub index: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]: {}", self.field, self.index, self.rule)
    }
}

#[derive(Debug, Clone)]
pub struct ViolationList(pub Vec<Violation>);

impl fmt::Display for ViolationList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Cost parameters for the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Quadratic congestion coefficient applied to every facility.
    pub congestion_quad: f64,
    /// Linear congestion coefficient applied to every facility.
    pub congestion_lin: f64,
    /// Opening cost drawn as an integer uniform on this inclusive range.
    pub open_cost_range: (u64, u64),
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams { congestion_quad: 0.01, congestion_lin: 1.0, open_cost_range: (200, 500) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub seed: u64,
    pub n_facilities: usize,
    pub n_customers: usize,
    pub radius: f64,
    /// Fraction of total nominal demand that must be covered, in (0, 1].
    pub coverage_fraction: f64,
    /// Deviations drawn uniform on `[0, floor(dev_fraction * d_j)]`.
    pub dev_fraction: f64,
    pub cost: CostParams,
}

impl GenParams {
    pub fn new(seed: u64, n_facilities: usize, n_customers: usize, radius: f64) -> Self {
        GenParams {
            seed,
            n_facilities,
            n_customers,
            radius,
            coverage_fraction: 0.5,
            dev_fraction: 0.20,
            cost: CostParams::default(),
        }
    }
}

const COORD_MAX: f64 = 30.0;

/// Generates a random instance. Pure function of its parameters: the RNG
/// is a ChaCha8 stream seeded with `seed` and the draw order is fixed.
pub fn generate(p: &GenParams) -> Result<Instance, InstanceError> {
    if p.n_facilities == 0 || p.n_customers == 0 {
        return Err(InstanceError::BadParam("facility and customer counts must be >= 1".into()));
    }
    if !(p.coverage_fraction > 0.0 && p.coverage_fraction <= 1.0) {
        return Err(InstanceError::BadParam(format!(
            "coverage_fraction must lie in (0, 1], got {}",
            p.coverage_fraction
        )));
    }
    if !(p.dev_fraction >= 0.0) || !p.dev_fraction.is_finite() {
        return Err(InstanceError::BadParam(format!(
            "dev_fraction must be a finite non-negative ratio, got {}",
            p.dev_fraction
        )));
    }
    if !(p.radius > 0.0) || !p.radius.is_finite() {
        return Err(InstanceError::BadParam(format!("radius must be positive, got {}", p.radius)));
    }
    let (f_lo, f_hi) = p.cost.open_cost_range;
    if f_lo > f_hi {
        return Err(InstanceError::BadParam("open_cost_range is empty".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    let facilities: Vec<Facility> = (0..p.n_facilities)
        .map(|id| {
            let x = rng.gen_range(0.0..=COORD_MAX);
            let y = rng.gen_range(0.0..=COORD_MAX);
            let f = rng.gen_range(f_lo..=f_hi) as f64;
            Facility { id, x, y, f, a: p.cost.congestion_quad, b: p.cost.congestion_lin }
        })
        .collect();

    let customers: Vec<Customer> = (0..p.n_customers)
        .map(|id| {
            let x = rng.gen_range(0.0..=COORD_MAX);
            let y = rng.gen_range(0.0..=COORD_MAX);
            let d = rng.gen_range(1u64..=100) as f64;
            let max_dev = (p.dev_fraction * d).floor().min(d) as u64;
            let d_hat = rng.gen_range(0..=max_dev) as f64;
            Customer { id, x, y, d, d_hat }
        })
        .collect();

    let total_demand: f64 = customers.iter().map(|c| c.d).sum();
    let target_demand = (p.coverage_fraction * total_demand).ceil();

    let meta = Meta { seed: p.seed, generator_version: GENERATOR_VERSION };
    Instance::new(meta, facilities, customers, p.radius, target_demand)
}

impl Instance {
    /// Builds an instance from parts, deriving the coverage maps and
    /// rejecting invalid data.
    pub fn new(
        meta: Meta,
        facilities: Vec<Facility>,
        customers: Vec<Customer>,
        radius: f64,
        target_demand: f64,
    ) -> Result<Instance, InstanceError> {
        let (covering, covered) = derive_coverage(&facilities, &customers, radius);
        let inst = Instance { meta, facilities, customers, radius, target_demand, covering, covered };
        let violations = inst.validate();
        if !violations.is_empty() {
            return Err(InstanceError::Validation(ViolationList(violations)));
        }
        let coverable = inst.coverable_demand();
        if coverable < inst.target_demand {
            return Err(InstanceError::StructurallyInfeasible {
                coverable,
                target: inst.target_demand,
            });
        }
        Ok(inst)
    }

    pub fn n_facilities(&self) -> usize {
        self.facilities.len()
    }

    pub fn n_customers(&self) -> usize {
        self.customers.len()
    }

    /// `I(j)`: facilities that can cover customer `j`.
    pub fn facilities_covering(&self, j: usize) -> &[usize] {
        &self.covering[j]
    }

    /// `J(i)`: customers coverable by facility `i`.
    pub fn customers_covered_by(&self, i: usize) -> &[usize] {
        &self.covered[i]
    }

    /// All (facility, customer) pairs with coverage, customer-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.n_customers() {
            for &i in &self.covering[j] {
                out.push((i, j));
            }
        }
        out
    }

    /// Total nominal demand of customers covered by at least one facility.
    pub fn coverable_demand(&self) -> f64 {
        self.customers
            .iter()
            .enumerate()
            .filter(|(j, _)| !self.covering[*j].is_empty())
            .map(|(_, c)| c.d)
            .sum()
    }

    pub fn total_demand(&self) -> f64 {
        self.customers.iter().map(|c| c.d).sum()
    }

    /// `V_i = sum_{j in J(i)} (d_j + d_hat_j)`: a level no feasible load
    /// on facility `i` can exceed, deviations included.
    pub fn load_cap(&self, i: usize) -> f64 {
        self.covered[i].iter().map(|&j| self.customers[j].d + self.customers[j].d_hat).sum()
    }

    /// Checks every invariant; returns an empty list iff the instance is
    /// well formed. Never panics.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let push = |out: &mut Vec<Violation>, field: &str, index: String, rule: String| {
            out.push(Violation { field: field.into(), index, rule });
        };

        for (i, fac) in self.facilities.iter().enumerate() {
            if fac.id != i {
                push(&mut out, "facilities", i.to_string(), format!("id {} != position {}", fac.id, i));
            }
            for (name, v) in [("x", fac.x), ("y", fac.y)] {
                if !v.is_finite() {
                    push(&mut out, "facilities", i.to_string(), format!("{name} not finite"));
                }
            }
            for (name, v) in [("f", fac.f), ("a", fac.a), ("b", fac.b)] {
                if !(v >= 0.0) || !v.is_finite() {
                    push(&mut out, "facilities", i.to_string(), format!("{name} must be finite and >= 0, got {v}"));
                }
            }
        }
        for (j, cust) in self.customers.iter().enumerate() {
            if cust.id != j {
                push(&mut out, "customers", j.to_string(), format!("id {} != position {}", cust.id, j));
            }
            for (name, v) in [("x", cust.x), ("y", cust.y)] {
                if !v.is_finite() {
                    push(&mut out, "customers", j.to_string(), format!("{name} not finite"));
                }
            }
            if !(cust.d >= 0.0) || !cust.d.is_finite() {
                push(&mut out, "customers", j.to_string(), format!("d must be finite and >= 0, got {}", cust.d));
            }
            if !(cust.d_hat >= 0.0) || !cust.d_hat.is_finite() {
                push(&mut out, "customers", j.to_string(), format!("d_hat must be finite and >= 0, got {}", cust.d_hat));
            } else if cust.d_hat > cust.d {
                push(&mut out, "customers", j.to_string(), format!("d_hat {} exceeds d {}", cust.d_hat, cust.d));
            }
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            push(&mut out, "radius", String::new(), format!("must be positive and finite, got {}", self.radius));
        }
        let total = self.total_demand();
        if !(self.target_demand > 0.0) || self.target_demand > total {
            push(
                &mut out,
                "target_demand",
                String::new(),
                format!("must satisfy 0 < D <= total demand {total}, got {}", self.target_demand),
            );
        }

        // Coverage maps must agree with geometry in both directions.
        let (covering, _) = derive_coverage(&self.facilities, &self.customers, self.radius);
        if self.covering.len() != self.customers.len() || self.covered.len() != self.facilities.len() {
            push(&mut out, "coverage", String::new(), "coverage map sizes do not match instance".into());
        } else {
            for j in 0..self.customers.len() {
                if self.covering[j] != covering[j] {
                    for &i in self.covering[j].iter().chain(covering[j].iter()) {
                        let stored = self.covering[j].contains(&i);
                        let geo = covering[j].contains(&i);
                        if stored != geo {
                            push(
                                &mut out,
                                "coverage",
                                format!("({i},{j})"),
                                format!("I(j) disagrees with dist^2 <= R^2 (stored {stored}, derived {geo})"),
                            );
                        }
                    }
                }
            }
            for i in 0..self.facilities.len() {
                for &j in &self.covered[i] {
                    if !self.covering.get(j).map(|s| s.contains(&i)).unwrap_or(false) {
                        push(&mut out, "coverage", format!("({i},{j})"), "J(i) contains j but I(j) lacks i".into());
                    }
                }
                for (j, cov) in self.covering.iter().enumerate() {
                    if cov.contains(&i) && !self.covered[i].contains(&j) {
                        push(&mut out, "coverage", format!("({i},{j})"), "I(j) contains i but J(i) lacks j".into());
                    }
                }
            }
        }
        out.sort_by(|a, b| (&a.field, &a.index).cmp(&(&b.field, &b.index)));
        out.dedup();
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        let file = InstanceFile::from(self);
        let text = serde_json::to_string_pretty(&file)
            .map_err(|e| InstanceError::Parse(e.to_string()))?;
        std::fs::write(path, text)
            .map_err(|e| InstanceError::Io { path: path.display().to_string(), source: e })
    }

    pub fn load(path: &Path) -> Result<Instance, InstanceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InstanceError::Io { path: path.display().to_string(), source: e })?;
        Instance::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Instance, InstanceError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
        Instance::new(file.meta, file.facilities, file.customers, file.radius, file.target_demand)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }

    /// Short identifier used in reports: `s<seed>-R<radius>`.
    pub fn label(&self) -> String {
        format!("s{}-R{}", self.meta.seed, self.radius)
    }
}

/// On-disk schema. Coverage sets are derived on load, never stored.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    meta: Meta,
    facilities: Vec<Facility>,
    customers: Vec<Customer>,
    radius: f64,
    target_demand: f64,
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            meta: inst.meta.clone(),
            facilities: inst.facilities.clone(),
            customers: inst.customers.clone(),
            radius: inst.radius,
            target_demand: inst.target_demand,
        }
    }
}

fn derive_coverage(
    facilities: &[Facility],
    customers: &[Customer],
    radius: f64,
) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let r2 = radius * radius;
    let mut covering = vec![Vec::new(); customers.len()];
    let mut covered = vec![Vec::new(); facilities.len()];
    for (j, c) in customers.iter().enumerate() {
        for (i, f) in facilities.iter().enumerate() {
            let dx = f.x - c.x;
            let dy = f.y - c.y;
            if dx * dx + dy * dy <= r2 {
                covering[j].push(i);
                covered[i].push(j);
            }
        }
    }
    (covering, covered)
}

/// Resolves a gamma argument that may be absolute (`"12"`) or a
/// percentage of the customer count (`"30%"`).
pub fn parse_gamma(arg: &str, n_customers: usize) -> Result<usize, InstanceError> {
    let arg = arg.trim();
    let gamma = if let Some(pct) = arg.strip_suffix('%') {
        let p: f64 = pct
            .trim()
            .parse()
            .map_err(|_| InstanceError::BadParam(format!("bad gamma percentage '{arg}'")))?;
        if !(0.0..=100.0).contains(&p) {
            return Err(InstanceError::BadParam(format!("gamma percentage out of [0,100]: {arg}")));
        }
        (p / 100.0 * n_customers as f64).round() as usize
    } else {
        arg.parse::<usize>()
            .map_err(|_| InstanceError::BadParam(format!("bad gamma '{arg}'")))?
    };
    if gamma > n_customers {
        return Err(InstanceError::BadParam(format!(
            "gamma {gamma} exceeds customer count {n_customers}"
        )));
    }
    Ok(gamma)
}

/// The paper's sweep grid as percentages of the customer count.
pub const SWEEP_GRID_PCT: [f64; 14] =
    [0.0, 2.5, 5.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0];

/// Rounds the percentage grid onto `[0, |J|]`, deduplicated and sorted.
pub fn gamma_grid(pcts: &[f64], n_customers: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = pcts
        .iter()
        .map(|p| ((p / 100.0) * n_customers as f64).round() as usize)
        .map(|g| g.min(n_customers))
        .collect();
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Deterministic key for duplicate detection in tests.
pub fn coverage_histogram(inst: &Instance) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for j in 0..inst.n_customers() {
        *hist.entry(inst.facilities_covering(j).len()).or_insert(0) += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params() -> GenParams {
        let mut p = GenParams::new(7, 2, 3, 100.0);
        p.coverage_fraction = 1.0;
        p
    }

    #[test]
    fn full_coverage_when_radius_exceeds_box() {
        let inst = generate(&small_params()).unwrap();
        for j in 0..inst.n_customers() {
            assert_eq!(inst.facilities_covering(j), &[0, 1]);
        }
        assert_eq!(inst.target_demand, inst.total_demand());
    }

    #[test]
    fn deviations_respect_dev_fraction() {
        let mut p = GenParams::new(11, 5, 1000, 8.0);
        p.coverage_fraction = 0.4;
        let inst = generate(&p).unwrap();
        for c in &inst.customers {
            assert!(c.d_hat <= 0.2 * c.d + 1e-12, "d_hat {} > 0.2 d {}", c.d_hat, c.d);
            assert!(c.d_hat <= c.d);
            assert!((1.0..=100.0).contains(&c.d));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&small_params()).unwrap();
        let b = generate(&small_params()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn rejects_bad_coverage_fraction() {
        let mut p = small_params();
        p.coverage_fraction = 0.0;
        assert!(matches!(generate(&p), Err(InstanceError::BadParam(_))));
        p.coverage_fraction = 1.5;
        assert!(matches!(generate(&p), Err(InstanceError::BadParam(_))));
    }

    #[test]
    fn structurally_infeasible_when_radius_too_small() {
        // Radius so small that no customer is coverable.
        let mut p = GenParams::new(3, 2, 40, 1e-9);
        p.coverage_fraction = 1.0;
        match generate(&p) {
            Err(InstanceError::StructurallyInfeasible { .. }) => {}
            other => panic!("expected structural infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn save_load_round_trip() {
        let inst = generate(&small_params()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        inst.save(&path).unwrap();
        let back = Instance::load(&path).unwrap();
        assert_eq!(inst.to_json(), back.to_json());
        assert_eq!(inst.covering, back.covering);
        assert_eq!(inst.covered, back.covered);
    }

    #[test]
    fn load_rejects_deviation_above_demand() {
        let inst = generate(&small_params()).unwrap();
        let mut file: serde_json::Value = serde_json::from_str(&inst.to_json()).unwrap();
        file["customers"][0]["d_hat"] = serde_json::json!(1e6);
        let err = Instance::from_json(&file.to_string()).unwrap_err();
        match err {
            InstanceError::Validation(list) => {
                assert!(list.0.iter().any(|v| v.field == "customers" && v.rule.contains("d_hat")));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_missing_target_demand() {
        let inst = generate(&small_params()).unwrap();
        let mut file: serde_json::Value = serde_json::from_str(&inst.to_json()).unwrap();
        file.as_object_mut().unwrap().remove("target_demand");
        let err = Instance::from_json(&file.to_string()).unwrap_err();
        match err {
            InstanceError::Parse(msg) => assert!(msg.contains("target_demand"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn validate_reports_target_demand_excess() {
        let mut inst = generate(&small_params()).unwrap();
        inst.target_demand = inst.total_demand() + 1.0;
        let violations = inst.validate();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].field, "target_demand");
    }

    #[test]
    fn validate_reports_asymmetric_coverage() {
        let mut inst = generate(&small_params()).unwrap();
        // Corrupt one direction of the map.
        inst.covering[1].retain(|&i| i != 0);
        let violations = inst.validate();
        assert!(!violations.is_empty());
        assert!(violations.iter().any(|v| v.field == "coverage" && v.index == "(0,1)"), "{violations:?}");
    }

    #[test]
    fn valid_instance_has_no_violations() {
        let inst = generate(&small_params()).unwrap();
        assert!(inst.validate().is_empty());
    }

    #[test]
    fn coverage_symmetry_counts() {
        let mut p = GenParams::new(5, 9, 60, 9.0);
        p.coverage_fraction = 0.5;
        let inst = generate(&p).unwrap();
        let lhs: usize = (0..inst.n_customers()).map(|j| inst.facilities_covering(j).len()).sum();
        let rhs: usize = (0..inst.n_facilities()).map(|i| inst.customers_covered_by(i).len()).sum();
        assert_eq!(lhs, rhs);
        assert_eq!(lhs, inst.pairs().len());
    }

    #[test]
    fn gamma_parsing() {
        assert_eq!(parse_gamma("12", 60).unwrap(), 12);
        assert_eq!(parse_gamma("50%", 60).unwrap(), 30);
        assert_eq!(parse_gamma("2.5%", 1000).unwrap(), 25);
        assert!(parse_gamma("61", 60).is_err());
        assert!(parse_gamma("x", 60).is_err());
    }

    #[test]
    fn grid_rounds_and_dedups() {
        let grid = gamma_grid(&SWEEP_GRID_PCT, 20);
        assert_eq!(grid.first(), Some(&0));
        assert_eq!(grid.last(), Some(&20));
        for w in grid.windows(2) {
            assert!(w[0] < w[1]);
        }
    }
}
