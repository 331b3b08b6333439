//! Independent brute-force verifiers for the robust machinery: protection
//! functions by sorting and by subset enumeration, and a whole-problem
//! enumerator for tiny linear-congestion instances. Everything here stays
//! deliberately naive; these are the referees, not the contestants.

use thiserror::Error;

use crate::instance::{Instance, RobustConfig};
use crate::lp::{self, LpProblem, LpStatus, Objective, Sense};

/// A protection query over one facility row: allocation fractions,
/// deviations, and the budget.
#[derive(Debug, Clone)]
pub struct ProtectionQuery {
    pub x: Vec<f64>,
    pub d_hat: Vec<f64>,
    pub gamma: usize,
}

impl ProtectionQuery {
    pub fn new(x: Vec<f64>, d_hat: Vec<f64>, gamma: usize) -> Self {
        debug_assert_eq!(x.len(), d_hat.len());
        debug_assert!(x.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
        ProtectionQuery { x, d_hat, gamma }
    }
}

/// Sum of the `gamma` largest products `d_hat_j * x_j`: the worst-case
/// load deviation for one facility.
pub fn alpha_bruteforce(query: &ProtectionQuery) -> f64 {
    let mut products: Vec<f64> = query.x.iter().zip(&query.d_hat).map(|(x, dh)| x * dh).collect();
    products.sort_by(|a, b| b.partial_cmp(a).unwrap());
    products.iter().take(query.gamma).sum()
}

/// Same value by full subset enumeration; only sensible for small rows.
pub fn alpha_enumerate(query: &ProtectionQuery) -> f64 {
    let n = query.x.len();
    assert!(n <= 20, "enumeration limited to 20 customers");
    let products: Vec<f64> = query.x.iter().zip(&query.d_hat).map(|(x, dh)| x * dh).collect();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        if (mask.count_ones() as usize) > query.gamma {
            continue;
        }
        let total: f64 = (0..n).filter(|j| mask & (1 << j) != 0).map(|j| products[j]).sum();
        best = best.max(total);
    }
    best
}

/// Worst-case coverage deviation over a full allocation: the `gamma`
/// largest column aggregates `d_hat_j * sum_i x_ij`. The allocation comes
/// as (customer, value) pairs so callers with sparse pair layouts can
/// feed it directly.
pub fn beta_bruteforce(pair_x: &[(usize, f64)], d_hat: &[f64], gamma: usize) -> f64 {
    let mut col = vec![0.0; d_hat.len()];
    for &(j, x) in pair_x {
        col[j] += x;
    }
    let mut products: Vec<f64> = col.iter().zip(d_hat).map(|(c, dh)| c * dh).collect();
    products.sort_by(|a, b| b.partial_cmp(a).unwrap());
    products.iter().take(gamma).sum()
}

/// Beta by subset enumeration, capped to keep the binomial explosion at
/// bay; the sorting shortcut is cross-checked against this at small sizes.
pub fn beta_enumerate(pair_x: &[(usize, f64)], d_hat: &[f64], gamma: usize) -> f64 {
    let n = d_hat.len();
    assert!(n <= 20 && gamma <= 10, "enumeration limited to |J| <= 20, gamma <= 10");
    let mut col = vec![0.0; n];
    for &(j, x) in pair_x {
        col[j] += x;
    }
    let products: Vec<f64> = col.iter().zip(d_hat).map(|(c, dh)| c * dh).collect();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        if (mask.count_ones() as usize) > gamma {
            continue;
        }
        let total: f64 = (0..n).filter(|j| mask & (1 << j) != 0).map(|j| products[j]).sum();
        best = best.max(total);
    }
    best
}

/// Solves the protection dual `min gamma*rho + sum_j sigma_j` s.t.
/// `rho + sigma_j >= d_hat_j x_j` with the LP engine. Strong duality says
/// this equals [`alpha_bruteforce`].
pub fn alpha_dual_lp(query: &ProtectionQuery) -> Result<f64, lp::LpError> {
    let n = query.x.len();
    let mut p = LpProblem::new(Objective::Minimize);
    let rho = p.add_var(0.0, f64::INFINITY, query.gamma as f64);
    let sig: Vec<usize> = (0..n).map(|_| p.add_var(0.0, f64::INFINITY, 1.0)).collect();
    for j in 0..n {
        p.add_row(vec![(rho, 1.0), (sig[j], 1.0)], Sense::Ge, query.d_hat[j] * query.x[j]);
    }
    let sol = lp::solve(&p, None)?;
    debug_assert_eq!(sol.status, LpStatus::Optimal);
    Ok(sol.objective)
}

/// The coverage-side dual `min gamma*tau + sum_j pi_j` s.t.
/// `tau + pi_j >= d_hat_j * sum_i x_ij`.
pub fn beta_dual_lp(pair_x: &[(usize, f64)], d_hat: &[f64], gamma: usize) -> Result<f64, lp::LpError> {
    let n = d_hat.len();
    let mut col = vec![0.0; n];
    for &(j, x) in pair_x {
        col[j] += x;
    }
    let mut p = LpProblem::new(Objective::Minimize);
    let tau = p.add_var(0.0, f64::INFINITY, gamma as f64);
    let pi: Vec<usize> = (0..n).map(|_| p.add_var(0.0, f64::INFINITY, 1.0)).collect();
    for j in 0..n {
        p.add_row(vec![(tau, 1.0), (pi[j], 1.0)], Sense::Ge, d_hat[j] * col[j]);
    }
    let sol = lp::solve(&p, None)?;
    debug_assert_eq!(sol.status, LpStatus::Optimal);
    Ok(sol.objective)
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle restricted to |I| <= 4, |J| <= 8, linear congestion; got {0}")]
    OutOfScope(String),
    #[error("no opening vector is feasible")]
    AllInfeasible,
    #[error(transparent)]
    Lp(#[from] lp::LpError),
}

/// Exact optimum of the robust problem for tiny linear-congestion
/// instances, by enumerating every opening vector and materializing one
/// constraint per deviation subset (the pre-dualization form).
pub fn robust_lp_optimum_bruteforce(
    instance: &Instance,
    config: &RobustConfig,
) -> Result<f64, OracleError> {
    let nf = instance.n_facilities();
    let nc = instance.n_customers();
    if nf > 4 || nc > 8 {
        return Err(OracleError::OutOfScope(format!("|I|={nf}, |J|={nc}")));
    }
    if instance.facilities.iter().any(|f| f.a != 0.0) {
        return Err(OracleError::OutOfScope("quadratic congestion".into()));
    }
    let gamma = config.effective_gamma();
    let protect_load = config.mode.protects_load() && gamma > 0;
    let protect_cov = config.mode.protects_coverage() && gamma > 0;

    // All index subsets with |S| <= gamma; the empty set supplies the
    // nominal rows.
    let mut subsets: Vec<u32> = (0u32..(1 << nc)).filter(|m| (m.count_ones() as usize) <= gamma).collect();
    subsets.sort_unstable();

    let pairs = instance.pairs();
    let mut best: Option<f64> = None;
    for open_mask in 0u32..(1 << nf) {
        let open = |i: usize| open_mask & (1 << i) != 0;
        let open_cost: f64 =
            (0..nf).filter(|&i| open(i)).map(|i| instance.facilities[i].f).sum();

        let mut p = LpProblem::new(Objective::Minimize);
        let x: Vec<usize> = pairs
            .iter()
            .map(|&(i, _)| p.add_var(0.0, if open(i) { 1.0 } else { 0.0 }, 0.0))
            .collect();
        let v: Vec<usize> =
            (0..nf).map(|i| p.add_var(0.0, f64::INFINITY, instance.facilities[i].b)).collect();

        let d = |j: usize| instance.customers[j].d;
        let dh = |j: usize| instance.customers[j].d_hat;

        let load_subsets: &[u32] = if protect_load { &subsets } else { &subsets[..1] };
        for &s in load_subsets {
            for i in 0..nf {
                let mut coeffs = vec![(v[i], -1.0)];
                for (pidx, &(pi_, pj)) in pairs.iter().enumerate() {
                    if pi_ == i {
                        let mut c = d(pj);
                        if s & (1 << pj) != 0 {
                            c += dh(pj);
                        }
                        coeffs.push((x[pidx], c));
                    }
                }
                p.add_row(coeffs, Sense::Le, 0.0);
            }
        }
        let cov_subsets: &[u32] = if protect_cov { &subsets } else { &subsets[..1] };
        for &s in cov_subsets {
            let mut coeffs = Vec::new();
            for (pidx, &(_, pj)) in pairs.iter().enumerate() {
                let mut c = d(pj);
                if s & (1 << pj) != 0 {
                    c -= dh(pj);
                }
                coeffs.push((x[pidx], c));
            }
            p.add_row(coeffs, Sense::Ge, instance.target_demand);
        }
        for j in 0..nc {
            let coeffs: Vec<(usize, f64)> = pairs
                .iter()
                .enumerate()
                .filter(|(_, &(_, pj))| pj == j)
                .map(|(pidx, _)| (x[pidx], 1.0))
                .collect();
            if !coeffs.is_empty() {
                p.add_row(coeffs, Sense::Le, 1.0);
            }
        }

        let sol = lp::solve(&p, None)?;
        if sol.status == LpStatus::Optimal {
            let total = open_cost + sol.objective;
            best = Some(best.map_or(total, |b: f64| b.min(total)));
        }
    }
    best.ok_or(OracleError::AllInfeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn alpha_takes_two_largest() {
        let q = ProtectionQuery::new(vec![1.0, 1.0, 1.0], vec![3.0, 5.0, 1.0], 2);
        assert_eq!(alpha_bruteforce(&q), 8.0);
    }

    #[test]
    fn alpha_zero_budget() {
        let q = ProtectionQuery::new(vec![1.0, 1.0], vec![3.0, 5.0], 0);
        assert_eq!(alpha_bruteforce(&q), 0.0);
    }

    #[test]
    fn alpha_sorting_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let n = 10;
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let dh: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..20.0)).collect();
            let gamma = rng.gen_range(0..=n);
            let q = ProtectionQuery::new(x, dh, gamma);
            let a = alpha_bruteforce(&q);
            let b = alpha_enumerate(&q);
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn alpha_monotone_in_gamma_and_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let n = 8;
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let dh: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..20.0)).collect();
            let mut prev = 0.0;
            for gamma in 0..=n {
                let val = alpha_bruteforce(&ProtectionQuery::new(x.clone(), dh.clone(), gamma));
                assert!(val >= prev - 1e-12);
                prev = val;
            }
            // Raising one component never lowers the value.
            let gamma = rng.gen_range(1..=n);
            let base = alpha_bruteforce(&ProtectionQuery::new(x.clone(), dh.clone(), gamma));
            let mut x2 = x.clone();
            let k = rng.gen_range(0..n);
            x2[k] = (x2[k] + 0.3).min(1.0);
            let bumped = alpha_bruteforce(&ProtectionQuery::new(x2, dh.clone(), gamma));
            assert!(bumped >= base - 1e-12);
        }
    }

    #[test]
    fn beta_aggregates_across_facilities() {
        // One customer served half by each of two facilities.
        let pair_x = vec![(0usize, 0.5), (0usize, 0.5)];
        let d_hat = vec![4.0];
        assert_eq!(beta_bruteforce(&pair_x, &d_hat, 1), 4.0);
    }

    #[test]
    fn beta_full_budget_sums_everything() {
        let pair_x = vec![(0, 0.5), (1, 1.0), (0, 0.25)];
        let d_hat = vec![4.0, 2.0];
        let full = beta_bruteforce(&pair_x, &d_hat, 2);
        assert!((full - (0.75 * 4.0 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn beta_sorting_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let n = 9;
            let mut pair_x = Vec::new();
            for i in 0..3 {
                let _ = i;
                for j in 0..n {
                    if rng.gen_bool(0.6) {
                        pair_x.push((j, rng.gen_range(0.0..=1.0)));
                    }
                }
            }
            let dh: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..15.0)).collect();
            let gamma = rng.gen_range(0..=n.min(10));
            let a = beta_bruteforce(&pair_x, &dh, gamma);
            let b = beta_enumerate(&pair_x, &dh, gamma);
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn duals_match_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..40 {
            let n = rng.gen_range(1..=12);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let dh: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..20.0)).collect();
            let gamma = rng.gen_range(0..=n);
            let q = ProtectionQuery::new(x.clone(), dh.clone(), gamma);
            let alpha = alpha_bruteforce(&q);
            let dual = alpha_dual_lp(&q).unwrap();
            assert!((alpha - dual).abs() <= 1e-8, "alpha {alpha} dual {dual}");

            let pair_x: Vec<(usize, f64)> = x.iter().enumerate().map(|(j, &v)| (j, v)).collect();
            let beta = beta_bruteforce(&pair_x, &dh, gamma);
            let dual_b = beta_dual_lp(&pair_x, &dh, gamma).unwrap();
            assert!((beta - dual_b).abs() <= 1e-8, "beta {beta} dual {dual_b}");
        }
    }
}
