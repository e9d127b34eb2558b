//! DC power-flow model.
//!
//! Lossless lines, flat voltage profile, small angle differences: the flow on
//! line i is P^L_i = d_i (theta_{f_i} - theta_{e_i}) and bus angles solve
//! B theta = P^G - P^D with the slack angle pinned to zero. B is the
//! susceptance Laplacian (diagonal: sum of incident admittances, off-diagonal:
//! -d for each line), with the slack row and column removed to make it
//! invertible.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::grid_model::GridCase;
use crate::linalg::{lu_factor, Matrix};

/// Generation and load totals must agree to this tolerance (pu) before a
/// power flow is solved; the DC model has no way to place the mismatch.
pub const BALANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum PowerFlowError {
    /// Total generation and total load differ by more than [`BALANCE_TOL`].
    Imbalance { mismatch: f64 },
    /// Reduced susceptance matrix is singular (islanded topology).
    Singular,
    /// An input vector had the wrong length.
    Dimension { what: &'static str, expected: usize, found: usize },
}

impl fmt::Display for PowerFlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerFlowError::Imbalance { mismatch } => {
                write!(f, "generation minus load is {mismatch} pu; inputs must balance")
            }
            PowerFlowError::Singular => write!(f, "susceptance matrix is singular"),
            PowerFlowError::Dimension { what, expected, found } => {
                write!(f, "{what}: expected length {expected}, found {found}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PowerFlowError {}

/// Solved operating point. `injection[j]` is the net bus consumption
/// P^B_j = P^D_j - P^G_j, reconstructed from the line flows (incoming minus
/// outgoing) so that conservation holds at every bus by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowState {
    /// Bus angles in radians, slack pinned to zero.
    pub theta: Vec<f64>,
    /// Line flows in pu, oriented from -> to.
    pub line_flow: Vec<f64>,
    /// Net bus consumption in pu (positive where load exceeds generation).
    pub injection: Vec<f64>,
}

/// Map a 0-based bus index to its row in the slack-reduced system, or None
/// for the slack bus itself.
pub fn reduced_index(slack0: usize, bus0: usize) -> Option<usize> {
    use core::cmp::Ordering::*;
    match bus0.cmp(&slack0) {
        Less => Some(bus0),
        Equal => None,
        Greater => Some(bus0 - 1),
    }
}

/// Full b x b susceptance Laplacian.
pub fn susceptance_laplacian(case: &GridCase) -> Matrix {
    let b = case.num_buses();
    let mut m = Matrix::zeros(b, b);
    for line in &case.lines {
        let (f, e, d) = (line.from0(), line.to0(), line.admittance);
        m[(f, f)] += d;
        m[(e, e)] += d;
        m[(f, e)] -= d;
        m[(e, f)] -= d;
    }
    m
}

/// Slack-reduced (b-1) x (b-1) susceptance matrix.
pub fn build_b_matrix(case: &GridCase) -> Matrix {
    let b = case.num_buses();
    let full = susceptance_laplacian(case);
    let slack0 = case.slack0();
    let mut m = Matrix::zeros(b - 1, b - 1);
    for j in 0..b {
        let Some(rj) = reduced_index(slack0, j) else { continue };
        for k in 0..b {
            let Some(rk) = reduced_index(slack0, k) else { continue };
            m[(rj, rk)] = full[(j, k)];
        }
    }
    m
}

/// Line flows implied by a full b-vector of bus angles.
pub fn flows_from_theta(case: &GridCase, theta: &[f64]) -> Vec<f64> {
    case.lines
        .iter()
        .map(|l| l.admittance * (theta[l.from0()] - theta[l.to0()]))
        .collect()
}

/// Net consumption at each bus implied by line flows: incoming (lines ending
/// at the bus) minus outgoing (lines starting there).
pub fn injection_from_flows(case: &GridCase, flows: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; case.num_buses()];
    for (line, &flow) in case.lines.iter().zip(flows) {
        c[line.to0()] += flow;
        c[line.from0()] -= flow;
    }
    c
}

/// Solve the DC power flow for per-bus generation and load vectors (pu).
/// Totals must balance to [`BALANCE_TOL`].
pub fn solve_powerflow(
    case: &GridCase,
    gen: &[f64],
    load: &[f64],
) -> Result<PowerFlowState, PowerFlowError> {
    let b = case.num_buses();
    for (what, v) in [("gen", gen), ("load", load)] {
        if v.len() != b {
            return Err(PowerFlowError::Dimension { what, expected: b, found: v.len() });
        }
    }
    let mismatch: f64 = gen.iter().sum::<f64>() - load.iter().sum::<f64>();
    if libm::fabs(mismatch) > BALANCE_TOL {
        return Err(PowerFlowError::Imbalance { mismatch });
    }
    let reduced = build_b_matrix(case);
    let slack0 = case.slack0();
    let mut rhs = Vec::with_capacity(b - 1);
    for j in 0..b {
        if j != slack0 {
            rhs.push(gen[j] - load[j]);
        }
    }
    let lu = lu_factor(&reduced).map_err(|_| PowerFlowError::Singular)?;
    let reduced_theta = lu.solve(&rhs);
    let mut theta = vec![0.0; b];
    for j in 0..b {
        if let Some(rj) = reduced_index(slack0, j) {
            theta[j] = reduced_theta[rj];
        }
    }
    let line_flow = flows_from_theta(case, &theta);
    let injection = injection_from_flows(case, &line_flow);
    Ok(PowerFlowState { theta, line_flow, injection })
}
