//! Weighted-least-squares DC state estimation, residual-based bad-data
//! detection, and the stealthiness certificate for measurement injections.
//!
//! The estimator sees z = Hx + e where x is the vector of non-slack bus
//! angles and H maps angles to the taken measurements. An injected
//! perturbation a added to z is invisible to residual tests exactly when
//! a = Hc for some state shift c: the residual of (z + a) around (x_hat + c)
//! is identical to the original.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_core::{RngCore, SeedableRng};

use crate::dc_powerflow::{reduced_index, PowerFlowState};
use crate::grid_model::{GridCase, MeasKind};
use crate::linalg::{lu_factor, norm2, rank, Matrix};

/// Residual-invariance and injection-consistency tolerance for stealth
/// verdicts.
pub const STEALTH_TOL: f64 = 1e-9;

/// Measured values for the taken measurements only, in measurement-index
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    pub z: Vec<f64>,
}

impl MeasurementVector {
    /// Simulate noiseless meters from a solved operating point: line flows in
    /// stored orientation at from-buses, negated at to-buses, net consumption
    /// at buses.
    pub fn from_state(case: &GridCase, state: &PowerFlowState) -> Self {
        let z = taken_indices(case)
            .into_iter()
            .map(|m0| match case.meas_kind(m0) {
                MeasKind::ForwardFlow(i) => state.line_flow[i],
                MeasKind::BackwardFlow(i) => -state.line_flow[i],
                MeasKind::Consumption(j) => state.injection[j],
            })
            .collect();
        MeasurementVector { z }
    }
}

/// 0-based indices of the taken measurements, ascending.
pub fn taken_indices(case: &GridCase) -> Vec<usize> {
    case.measurements
        .iter()
        .enumerate()
        .filter(|(_, m)| m.taken)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    /// Estimated non-slack bus angles (length b - 1, reduced indexing).
    pub x_hat: Vec<f64>,
    /// Euclidean norm of z - H x_hat over taken measurements (unweighted;
    /// weights shape the estimate, the detection rule uses the plain norm).
    pub residual_norm: f64,
    /// Bad-data verdict: residual_norm > tau.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimationError {
    /// Taken rows of H do not determine the state; `deficiency` is the
    /// dimension of the unobservable angle subspace.
    Unobservable { deficiency: usize },
    Dimension { what: &'static str, expected: usize, found: usize },
}

impl fmt::Display for EstimationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimationError::Unobservable { deficiency } => {
                write!(f, "system unobservable: {deficiency}-dimensional angle subspace undetermined")
            }
            EstimationError::Dimension { what, expected, found } => {
                write!(f, "{what}: expected length {expected}, found {found}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EstimationError {}

/// Full m x (b-1) measurement matrix over ALL measurements (taken or not),
/// m = 2l + b. Row order follows measurement indexing; columns are non-slack
/// bus angles in reduced order.
pub fn build_h_matrix(case: &GridCase) -> Matrix {
    let b = case.num_buses();
    let l = case.num_lines();
    let n = b - 1;
    let slack0 = case.slack0();
    let mut h = Matrix::zeros(2 * l + b, n);
    for (i, line) in case.lines.iter().enumerate() {
        if let Some(cf) = reduced_index(slack0, line.from0()) {
            h[(i, cf)] = line.admittance;
            h[(l + i, cf)] = -line.admittance;
        }
        if let Some(ce) = reduced_index(slack0, line.to0()) {
            h[(i, ce)] = -line.admittance;
            h[(l + i, ce)] = line.admittance;
        }
    }
    // Consumption at bus j: incoming line flows minus outgoing line flows.
    for (i, line) in case.lines.iter().enumerate() {
        for col in 0..n {
            let row_val = h[(i, col)];
            h[(2 * l + line.to0(), col)] += row_val;
            h[(2 * l + line.from0(), col)] -= row_val;
        }
    }
    h
}

/// Rows of `h` for the taken measurements only.
fn taken_rows(case: &GridCase, h: &Matrix) -> Matrix {
    let idx = taken_indices(case);
    let n = h.cols();
    let mut t = Matrix::zeros(idx.len(), n);
    for (r, &m0) in idx.iter().enumerate() {
        for c in 0..n {
            t[(r, c)] = h[(m0, c)];
        }
    }
    t
}

/// Weighted-least-squares estimate from taken measurements.
///
/// `weights` are per-measurement variance reciprocals indexed over the FULL
/// measurement set (length m); entries of untaken measurements are ignored.
/// `None` means identity weighting. `tau` overrides the bad-data threshold
/// [`default_tau`].
pub fn estimate(
    case: &GridCase,
    z: &MeasurementVector,
    weights: Option<&[f64]>,
    tau: Option<f64>,
) -> Result<EstimationResult, EstimationError> {
    let taken = taken_indices(case);
    let m_full = case.num_measurements();
    if z.z.len() != taken.len() {
        return Err(EstimationError::Dimension { what: "z", expected: taken.len(), found: z.z.len() });
    }
    if let Some(w) = weights {
        if w.len() != m_full {
            return Err(EstimationError::Dimension { what: "weights", expected: m_full, found: w.len() });
        }
    }
    let n = case.num_buses() - 1;
    let h_full = build_h_matrix(case);
    let ht = taken_rows(case, &h_full);
    let w_of = |r: usize| weights.map_or(1.0, |w| w[taken[r]]);

    // Normal equations: (Hᵀ W H) x = Hᵀ W z.
    let mut a = Matrix::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for r in 0..ht.rows() {
        let w = w_of(r);
        for c1 in 0..n {
            let hv = ht[(r, c1)];
            if hv == 0.0 {
                continue;
            }
            rhs[c1] += w * hv * z.z[r];
            for c2 in 0..n {
                a[(c1, c2)] += w * hv * ht[(r, c2)];
            }
        }
    }
    let lu = match lu_factor(&a) {
        Ok(lu) => lu,
        Err(_) => {
            let deficiency = n - rank(&ht, 1e-9);
            return Err(EstimationError::Unobservable { deficiency: deficiency.max(1) });
        }
    };
    let x_hat = lu.solve(&rhs);
    let residual_norm = residual(&ht, &z.z, &x_hat);
    let tau = tau.unwrap_or_else(|| default_tau(case));
    Ok(EstimationResult { flagged: residual_norm > tau, x_hat, residual_norm })
}

fn residual(ht: &Matrix, z: &[f64], x: &[f64]) -> f64 {
    let fit = ht.matvec(x);
    let diff: Vec<f64> = z.iter().zip(&fit).map(|(a, b)| a - b).collect();
    norm2(&diff)
}

/// Default bad-data threshold: 1e-4 * sqrt(number of taken measurements).
pub fn default_tau(case: &GridCase) -> f64 {
    libm::sqrt(taken_indices(case).len() as f64) * 1e-4
}

/// Outcome of the stealthiness test for a candidate injection.
#[derive(Debug, Clone, PartialEq)]
pub struct StealthVerdict {
    /// True iff the injection is invisible: residual unchanged AND a = Hc.
    pub passed: bool,
    /// | ‖(z+a) − H(x_hat+c)‖ − ‖z − H x_hat‖ |.
    pub residual_delta: f64,
    /// max over taken measurements of |a − Hc|.
    pub injection_mismatch: f64,
}

/// Check that injection `a` (full m-vector; untaken entries ignored) with
/// claimed state shift `c` (length b-1) leaves the estimator's residual
/// unchanged on top of `z`.
pub fn stealth_check(
    case: &GridCase,
    z: &MeasurementVector,
    a: &[f64],
    c: &[f64],
) -> Result<StealthVerdict, EstimationError> {
    let m_full = case.num_measurements();
    let n = case.num_buses() - 1;
    if a.len() != m_full {
        return Err(EstimationError::Dimension { what: "a", expected: m_full, found: a.len() });
    }
    if c.len() != n {
        return Err(EstimationError::Dimension { what: "c", expected: n, found: c.len() });
    }
    let base = estimate(case, z, None, None)?;
    let h_full = build_h_matrix(case);
    let ht = taken_rows(case, &h_full);
    let taken = taken_indices(case);

    let hc = ht.matvec(c);
    let mut injection_mismatch = 0.0f64;
    for (r, &m0) in taken.iter().enumerate() {
        let diff = libm::fabs(a[m0] - hc[r]);
        if diff > injection_mismatch {
            injection_mismatch = diff;
        }
    }
    let z_attacked: Vec<f64> = taken.iter().enumerate().map(|(r, &m0)| z.z[r] + a[m0]).collect();
    let x_shifted: Vec<f64> = base.x_hat.iter().zip(c).map(|(x, dc)| x + dc).collect();
    let shifted_residual = residual(&ht, &z_attacked, &x_shifted);
    let residual_delta = libm::fabs(shifted_residual - base.residual_norm);
    Ok(StealthVerdict {
        passed: residual_delta <= STEALTH_TOL && injection_mismatch <= STEALTH_TOL,
        residual_delta,
        injection_mismatch,
    })
}

/// Add seeded Gaussian noise (standard deviation `sigma`) to every entry of
/// `z`: the deterministic companion to noisy bad-data exercises.
pub fn apply_gaussian_noise(z: &mut MeasurementVector, sigma: f64, seed: u64) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = || {
        // (0, 1], avoiding log(0).
        (rng.next_u64() as f64 + 1.0) / (u64::MAX as f64 + 1.0)
    };
    for value in z.z.iter_mut() {
        let (u1, u2) = (uniform(), uniform());
        let gaussian = libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2);
        *value += sigma * gaussian;
    }
}
