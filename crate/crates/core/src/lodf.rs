//! Line-outage distribution factors and related linear sensitivities.
//!
//! LODF_i^k is the fraction of line k's pre-outage flow that shifts onto line
//! i when line k trips. With X the reduced susceptance inverse re-augmented
//! by a zero slack row/column, x_i = 1/d_i, line i from p to q and line k
//! from m to n:
//!
//! ```text
//! LODF_i^k = (x_k / x_i) (X_pm - X_pn - X_qm + X_qn)
//!            -----------------------------------------
//!               x_k - (X_mm + X_nn - 2 X_mn)
//! ```
//!
//! A vanishing denominator means removing line k disconnects the network
//! (the factor is undefined); such outages are flagged as islanding and
//! excluded from contingency constraints everywhere downstream.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dc_powerflow::{build_b_matrix, reduced_index, susceptance_laplacian, PowerFlowState};
use crate::grid_model::GridCase;
use crate::linalg::{invert, Matrix};

/// Outages whose LODF denominator is smaller than this (in reactance units)
/// are treated as islanding.
pub const ISLANDING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LodfMatrix {
    /// factors[(i, k)] = LODF_i^k. Diagonal stored as -1 (a tripped line
    /// loses its own flow); islanding columns are zeroed off-diagonal.
    pub factors: Matrix,
    /// islanding[k] is true when removing line k disconnects the network.
    pub islanding: Vec<bool>,
}

impl LodfMatrix {
    pub fn num_lines(&self) -> usize {
        self.islanding.len()
    }

    /// Iterator over outage indices that keep the network connected.
    pub fn non_islanding(&self) -> impl Iterator<Item = usize> + '_ {
        self.islanding.iter().enumerate().filter(|(_, &f)| !f).map(|(k, _)| k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LodfError {
    /// Post-contingency flows were requested for an islanding outage.
    IslandingOutage { line: usize },
    Dimension { what: &'static str, expected: usize, found: usize },
}

impl fmt::Display for LodfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LodfError::IslandingOutage { line } => {
                write!(f, "outage of line {} islands the network; LODF undefined", line + 1)
            }
            LodfError::Dimension { what, expected, found } => {
                write!(f, "{what}: expected length {expected}, found {found}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LodfError {}

/// Full b x b bus admittance matrix. Under the lossless DC model this is the
/// susceptance Laplacian: symmetric, zero row sums, off-diagonal -d.
pub fn build_ybus(case: &GridCase) -> Matrix {
    susceptance_laplacian(case)
}

/// Reduced susceptance inverse re-augmented with a zero row/column at the
/// slack bus, so entries can be addressed by plain bus indices.
fn bus_reactance_matrix(case: &GridCase) -> Matrix {
    let b = case.num_buses();
    let reduced = build_b_matrix(case);
    let inv = invert(&reduced).expect("connected case has nonsingular reduced susceptance matrix");
    let slack0 = case.slack0();
    let mut x = Matrix::zeros(b, b);
    for j in 0..b {
        let Some(rj) = reduced_index(slack0, j) else { continue };
        for k in 0..b {
            let Some(rk) = reduced_index(slack0, k) else { continue };
            x[(j, k)] = inv[(rj, rk)];
        }
    }
    x
}

/// Injection shift factors: an l x b matrix M with M[(i, j)] the change in
/// line i's flow per unit extra injection at bus j (withdrawn at the slack).
/// M[(i, j)] = d_i (X_{f_i, j} - X_{e_i, j}); the slack column is zero.
pub fn injection_shift_factors(case: &GridCase) -> Matrix {
    let x = bus_reactance_matrix(case);
    let l = case.num_lines();
    let b = case.num_buses();
    let mut m = Matrix::zeros(l, b);
    for (i, line) in case.lines.iter().enumerate() {
        for j in 0..b {
            m[(i, j)] = line.admittance * (x[(line.from0(), j)] - x[(line.to0(), j)]);
        }
    }
    m
}

/// Compute the full LODF matrix and islanding flags for a case. Pure
/// topology/admittance data; independent of any operating point.
pub fn compute_lodf(case: &GridCase) -> LodfMatrix {
    let x = bus_reactance_matrix(case);
    let l = case.num_lines();
    let mut factors = Matrix::zeros(l, l);
    let mut islanding = vec![false; l];
    for (k, outage) in case.lines.iter().enumerate() {
        let (m, n) = (outage.from0(), outage.to0());
        let x_k = 1.0 / outage.admittance;
        let denom = x_k - (x[(m, m)] + x[(n, n)] - 2.0 * x[(m, n)]);
        factors[(k, k)] = -1.0;
        if libm::fabs(denom) < ISLANDING_TOL {
            islanding[k] = true;
            continue;
        }
        for (i, line) in case.lines.iter().enumerate() {
            if i == k {
                continue;
            }
            let (p, q) = (line.from0(), line.to0());
            let numer = (x_k * line.admittance)
                * (x[(p, m)] - x[(p, n)] - x[(q, m)] + x[(q, n)]);
            factors[(i, k)] = numer / denom;
        }
    }
    LodfMatrix { factors, islanding }
}

/// Predicted flows after the outage of line k: P^L_i + LODF_i^k * P^L_k for
/// every surviving line i, returned as (line index, flow) pairs.
pub fn post_contingency_flows(
    state: &PowerFlowState,
    lodf: &LodfMatrix,
    k: usize,
) -> Result<Vec<(usize, f64)>, LodfError> {
    let l = lodf.num_lines();
    if state.line_flow.len() != l {
        return Err(LodfError::Dimension { what: "state.line_flow", expected: l, found: state.line_flow.len() });
    }
    if lodf.islanding[k] {
        return Err(LodfError::IslandingOutage { line: k });
    }
    let outage_flow = state.line_flow[k];
    Ok((0..l)
        .filter(|&i| i != k)
        .map(|i| (i, state.line_flow[i] + lodf.factors[(i, k)] * outage_flow))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dc_powerflow::solve_powerflow;
    use crate::test_support::{path_case, random_connected_case, triangle_case, without_line};
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn ybus_two_bus() {
        let case = path_case(&[4.0]);
        let y = build_ybus(&case);
        assert_eq!((y[(0, 0)], y[(0, 1)]), (4.0, -4.0));
        assert_eq!((y[(1, 0)], y[(1, 1)]), (-4.0, 4.0));
    }

    #[test]
    fn ybus_equal_triangle() {
        let case = triangle_case(&[1.0, 1.0, 1.0], &[100.0; 3]);
        let y = build_ybus(&case);
        for j in 0..3 {
            for k in 0..3 {
                let expect = if j == k { 2.0 } else { -1.0 };
                assert_eq!(y[(j, k)], expect);
            }
        }
    }

    #[test]
    fn ybus_rows_sum_to_zero_and_symmetric() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let case = random_connected_case(&mut rng, 10, 8);
            let y = build_ybus(&case);
            let b = case.num_buses();
            for j in 0..b {
                let sum: f64 = (0..b).map(|k| y[(j, k)]).sum();
                assert_abs_diff_eq!(sum, 0.0, epsilon = 1e-12);
                for k in 0..b {
                    assert_eq!(y[(j, k)], y[(k, j)]);
                }
            }
        }
    }

    #[test]
    fn triangle_outage_factors_are_exactly_unit() {
        // Tripping any triangle line makes the survivors a radial path, so
        // redistribution is topologically forced regardless of admittances.
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..10 {
            let d = [
                rng.gen_range(0.5..20.0),
                rng.gen_range(0.5..20.0),
                rng.gen_range(0.5..20.0),
            ];
            let case = triangle_case(&d, &[100.0; 3]);
            let lodf = compute_lodf(&case);
            assert!(lodf.islanding.iter().all(|&f| !f));
            // Lines: 0 = (1-2), 1 = (1-3), 2 = (2-3).
            // Trip (2-3): bus-3 power must arrive via (1-3) directly.
            assert_abs_diff_eq!(lodf.factors[(0, 2)], -1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(lodf.factors[(1, 2)], 1.0, epsilon = 1e-9);
            // Trip (1-2): reroute 1->3->2.
            assert_abs_diff_eq!(lodf.factors[(1, 0)], 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(lodf.factors[(2, 0)], -1.0, epsilon = 1e-9);
            // Trip (1-3): reroute 1->2->3.
            assert_abs_diff_eq!(lodf.factors[(0, 1)], 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(lodf.factors[(2, 1)], 1.0, epsilon = 1e-9);
            for k in 0..3 {
                assert_eq!(lodf.factors[(k, k)], -1.0);
            }
        }
    }

    #[test]
    fn chain_outages_are_islanding() {
        let case = path_case(&[2.0, 3.0]);
        let lodf = compute_lodf(&case);
        assert_eq!(lodf.islanding, vec![true, true]);
        match post_contingency_flows(
            &PowerFlowState { theta: vec![0.0; 3], line_flow: vec![0.0; 2], injection: vec![0.0; 3] },
            &lodf,
            0,
        ) {
            Err(LodfError::IslandingOutage { line: 0 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn islanding_flags_agree_with_bridge_finding() {
        let mut rng = StdRng::seed_from_u64(29);
        for _ in 0..40 {
            let case = random_connected_case(&mut rng, 9, 7);
            let lodf = compute_lodf(&case);
            for k in 0..case.num_lines() {
                // Brute-force bridge test: BFS with line k removed.
                let b = case.num_buses();
                let mut adj = vec![Vec::new(); b];
                for (i, line) in case.lines.iter().enumerate() {
                    if i != k {
                        adj[line.from0()].push(line.to0());
                        adj[line.to0()].push(line.from0());
                    }
                }
                let mut seen = vec![false; b];
                let mut stack = vec![0usize];
                seen[0] = true;
                while let Some(u) = stack.pop() {
                    for &v in &adj[u] {
                        if !seen[v] {
                            seen[v] = true;
                            stack.push(v);
                        }
                    }
                }
                let is_bridge = seen.iter().any(|s| !s);
                assert_eq!(lodf.islanding[k], is_bridge, "line {k}");
            }
        }
    }

    #[test]
    fn prediction_matches_line_removal_resolve() {
        let mut rng = StdRng::seed_from_u64(57);
        for _ in 0..25 {
            let case = random_connected_case(&mut rng, 9, 7);
            let b = case.num_buses();
            let lodf = compute_lodf(&case);
            // Two distinct injection vectors: the same LODF matrix must
            // predict both (factors depend on topology only).
            for round in 0..2 {
                let load: Vec<f64> = (0..b).map(|_| rng.gen_range(0.0..3.0)).collect();
                let mut gen: Vec<f64> = (0..b).map(|_| rng.gen_range(0.1..3.0)).collect();
                let scale = load.iter().sum::<f64>() / gen.iter().sum::<f64>();
                gen.iter_mut().for_each(|g| *g *= scale);
                let state = solve_powerflow(&case, &gen, &load).unwrap();
                for k in 0..case.num_lines() {
                    if lodf.islanding[k] {
                        continue;
                    }
                    let predicted = post_contingency_flows(&state, &lodf, k).unwrap();
                    let reduced_case = without_line(&case, k);
                    let resolved = solve_powerflow(&reduced_case, &gen, &load).unwrap();
                    for (idx, (i, flow)) in predicted.iter().enumerate() {
                        // Removed-line re-solve indexes surviving lines compactly.
                        let shifted = if *i < k { *i } else { *i - 1 };
                        assert_eq!(idx, shifted);
                        assert_abs_diff_eq!(*flow, resolved.line_flow[shifted], epsilon = 1e-6);
                    }
                }
                let _ = round;
            }
        }
    }

    #[test]
    fn zero_base_flows_predict_zero() {
        let case = triangle_case(&[2.0, 3.0, 4.0], &[100.0; 3]);
        let lodf = compute_lodf(&case);
        let state = solve_powerflow(&case, &[0.0; 3], &[0.0; 3]).unwrap();
        for (_, flow) in post_contingency_flows(&state, &lodf, 2).unwrap() {
            assert_eq!(flow, 0.0);
        }
    }

    #[test]
    fn equal_triangle_trip_forces_direct_feed() {
        // Injections (+10, +2, -12) pu; tripping (2-3) leaves bus 3 fed only
        // by (1-3), which must then carry the full 12 pu.
        let case = triangle_case(&[1.0, 1.0, 1.0], &[100.0; 3]);
        let lodf = compute_lodf(&case);
        let state = solve_powerflow(&case, &[10.0, 2.0, 0.0], &[0.0, 0.0, 12.0]).unwrap();
        let flows = post_contingency_flows(&state, &lodf, 2).unwrap();
        assert_eq!(flows.len(), 2);
        assert_eq!(flows[0].0, 0);
        assert_abs_diff_eq!(flows[0].1, -2.0, epsilon = 1e-9); // bus 2 exports its surplus
        assert_eq!(flows[1].0, 1);
        assert_abs_diff_eq!(flows[1].1, 12.0, epsilon = 1e-9);
    }

    #[test]
    fn injection_shift_factors_match_perturbation() {
        let mut rng = StdRng::seed_from_u64(71);
        for _ in 0..15 {
            let case = random_connected_case(&mut rng, 8, 6);
            let b = case.num_buses();
            let m = injection_shift_factors(&case);
            let slack0 = case.slack0();
            for j in 0..b {
                // Inject 1 pu at bus j, withdraw at the slack.
                let mut gen = vec![0.0; b];
                let mut load = vec![0.0; b];
                gen[j] += 1.0;
                load[slack0] += 1.0;
                let state = solve_powerflow(&case, &gen, &load).unwrap();
                for i in 0..case.num_lines() {
                    assert_abs_diff_eq!(m[(i, j)], state.line_flow[i], epsilon = 1e-9);
                }
            }
        }
    }
}
