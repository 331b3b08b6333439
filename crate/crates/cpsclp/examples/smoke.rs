use cpsclp::instance::{generate, GenParams, RobustConfig, UncertaintyMode};
use cpsclp::mip::{solve_mip, SolverParams};
use cpsclp::model::build_perspective;

fn main() {
    let mut p2 = GenParams::new(5, 8, 25, 11.0);
    p2.coverage_fraction = 0.5;
    let inst = generate(&p2).unwrap();
    let config = RobustConfig::new(7, UncertaintyMode::Both);
    let params = SolverParams::default();
    let m0 = build_perspective(&inst, &config).unwrap();
    let rep = solve_mip(&m0, &params, None).unwrap();
    println!("solve: {:?} {} nodes={}", rep.status, rep.objective, rep.nodes);
}
