//! Independent replay of an attack vector: does the injection really evade
//! the estimator, does the operator's re-optimization really absorb it at no
//! extra cost, and do the claimed post-contingency overloads really appear on
//! the physical system?
//!
//! Nothing here trusts the synthesizer. The estimator residual is recomputed
//! from the measurement model, the corrupted dispatch is recomputed by the
//! same optimizer the operator runs, and every overload is confirmed by two
//! unrelated flow oracles — the outage-distribution-factor shortcut and a
//! from-scratch solve of the grid with the line physically removed — which
//! must agree before a pair is reported.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::attack_synthesis::AttackVector;
use crate::dc_powerflow::{solve_powerflow, PowerFlowError, PowerFlowState};
use crate::grid_model::GridCase;
use crate::lodf::{compute_lodf, post_contingency_flows, LodfMatrix};
use crate::scopf::{evaluate_cost, solve_scopf, ScopfSolution};
use crate::state_estimation::{stealth_check, MeasurementVector};

/// Two flow oracles must agree this closely for an overload to count.
pub const ORACLE_TOL: f64 = 1e-6;

/// One (surviving line, tripped line) entry of a contingency screen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenEntry {
    /// 0-based surviving line.
    pub line: usize,
    /// 0-based tripped line.
    pub outage: usize,
    /// |post-contingency flow| / capacity; above 1.0 is a violation.
    pub loading: f64,
}

/// Every non-islanding (line, outage) pair ranked by post-contingency
/// loading, heaviest first; ties broken by (line, outage) indices.
pub fn contingency_screen(
    case: &GridCase,
    state: &PowerFlowState,
    lodf: &LodfMatrix,
) -> Vec<ScreenEntry> {
    let mut entries = Vec::new();
    for k in lodf.non_islanding() {
        let Ok(post) = post_contingency_flows(state, lodf, k) else {
            continue;
        };
        for (line, flow) in post {
            let cap = case.lines[line].capacity;
            entries.push(ScreenEntry { line, outage: k, loading: libm::fabs(flow) / cap });
        }
    }
    entries.sort_by(|a, b| {
        b.loading
            .partial_cmp(&a.loading)
            .unwrap()
            .then(a.line.cmp(&b.line))
            .then(a.outage.cmp(&b.outage))
    });
    entries
}

/// Post-outage flows by brute force: remove line `k` from the model and
/// solve the remaining grid from scratch. Returns (original line index,
/// flow) for every surviving line. Islanding outages fail with `Singular`.
pub fn resolve_outage_flows(
    case: &GridCase,
    gen: &[f64],
    load: &[f64],
    k: usize,
) -> Result<Vec<(usize, f64)>, PowerFlowError> {
    let mut reduced = case.clone();
    reduced.lines.remove(k);
    for (pos, line) in reduced.lines.iter_mut().enumerate() {
        line.id = pos + 1;
    }
    let state = solve_powerflow(&reduced, gen, load)?;
    Ok(state
        .line_flow
        .iter()
        .enumerate()
        .map(|(pos, &flow)| (if pos < k { pos } else { pos + 1 }, flow))
        .collect())
}

/// A dispatch examined against one load pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchView {
    /// Per-bus generation (pu).
    pub dispatch: Vec<f64>,
    /// Dollars.
    pub cost: f64,
    /// Base-case line flows (pu).
    pub base_flows: Vec<f64>,
    /// Base-case violations as (line, loading), heaviest first.
    pub base_violations: Vec<(usize, f64)>,
    /// Full post-contingency ranking.
    pub screen: Vec<ScreenEntry>,
}

/// What the operator's re-optimization does with the attacked loads.
#[derive(Debug, Clone, PartialEq)]
pub enum EmsView {
    /// The optimizer absorbed the shifted loads into a new dispatch.
    Redispatch(DispatchView),
    /// The shifted loads admit no dispatch at all; the attack would be
    /// conspicuous rather than stealthy.
    Infeasible { reason: String },
}

/// An overload vouched for by both flow oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfirmedOverload {
    /// 0-based surviving line.
    pub line: usize,
    /// 0-based tripped line.
    pub outage: usize,
    /// Signed post-contingency flow (pu).
    pub flow: f64,
    /// 100 * |flow| / capacity — e.g. 109.1 means 109.1% of the limit.
    pub loading_percent: f64,
    /// 100 * (|flow| - capacity) / capacity — the same overload phrased as
    /// 9.1% above the limit.
    pub excess_percent: f64,
}

/// The verdict on one attack vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// The injection leaves the estimation residual unchanged.
    pub stealthy: bool,
    /// How much the residual actually moved.
    pub residual_delta: f64,
    /// The operator's view: re-optimized dispatch against attacked loads,
    /// screened against the loads the operator believes in.
    pub ems_view: EmsView,
    /// Physics under the re-optimized dispatch with the real loads.
    pub true_with_ems_dispatch: Option<DispatchView>,
    /// Physics under the dispatch the vector itself claims, real loads.
    pub true_with_vector_dispatch: DispatchView,
    /// Overloads both oracles agree on, under the dispatch the operator
    /// would actually run (the vector's own if re-optimization failed),
    /// deepest first.
    pub confirmed_overloads: Vec<ConfirmedOverload>,
    /// Re-optimized cost minus baseline cost; None if re-optimization
    /// failed. At or below zero the attack raises no economic alarm.
    pub cost_delta: Option<f64>,
}

impl VerificationReport {
    /// Confirmed pairs whose excess meets a margin (a fraction, e.g. 0.05).
    pub fn confirmed_at_margin(&self, margin: f64) -> usize {
        self.confirmed_overloads
            .iter()
            .filter(|o| o.excess_percent >= 100.0 * margin - 1e-9)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VerificationError {
    /// The vector violates a structural invariant for this case.
    Invariant(String),
    /// The baseline solution or the case itself cannot be replayed.
    Baseline(String),
}

impl core::fmt::Display for VerificationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            VerificationError::Invariant(msg) => write!(f, "attack vector invariant: {msg}"),
            VerificationError::Baseline(msg) => write!(f, "baseline replay: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for VerificationError {}

/// Replay an attack vector end to end against its case and baseline.
pub fn verify(
    case: &GridCase,
    pre: &ScopfSolution,
    attack: &AttackVector,
) -> Result<VerificationReport, VerificationError> {
    attack.check_invariants(case).map_err(VerificationError::Invariant)?;
    if pre.dispatch.len() != case.num_buses()
        || pre.flows.line_flow.len() != case.num_lines()
    {
        return Err(VerificationError::Baseline(String::from(
            "baseline solution does not match the case dimensions",
        )));
    }
    let lodf = compute_lodf(case);
    let loads = case.load_vector();

    // Stealth: the residual of the baseline measurements must not move.
    let z = MeasurementVector::from_state(case, &pre.flows);
    let a = attack.injection(case);
    let slack = case.slack0();
    let c: Vec<f64> = (0..case.num_buses())
        .filter(|&j| j != slack)
        .map(|j| attack.delta_theta[j])
        .collect();
    let verdict = stealth_check(case, &z, &a, &c)
        .map_err(|e| VerificationError::Invariant(e.to_string()))?;

    // The operator's response, recomputed from scratch.
    let mut seen_loads = attack.attacked_load.clone();
    for (j, v) in seen_loads.iter_mut().enumerate() {
        match case.load_at(j) {
            Some(spec) => *v = libm::fmin(libm::fmax(*v, spec.min), spec.max),
            None => *v = 0.0,
        }
    }
    let ems = solve_scopf(case, &seen_loads);
    let (ems_view, ems_dispatch, cost_delta) = match ems {
        Ok(solution) => {
            let view = dispatch_view(case, &solution.dispatch, &seen_loads, &lodf)
                .map_err(|e| VerificationError::Baseline(e.to_string()))?;
            let delta = solution.cost - pre.cost;
            (EmsView::Redispatch(view), Some(solution.dispatch), Some(delta))
        }
        Err(e) => (EmsView::Infeasible { reason: e.to_string() }, None, None),
    };

    // Physics: real loads under each dispatch of interest.
    let true_with_ems_dispatch = match &ems_dispatch {
        Some(d) => Some(
            dispatch_view(case, d, &loads, &lodf)
                .map_err(|e| VerificationError::Baseline(e.to_string()))?,
        ),
        None => None,
    };
    let true_with_vector_dispatch =
        dispatch_view(case, &attack.corrupted_dispatch, &loads, &lodf)
            .map_err(|e| VerificationError::Invariant(format!("claimed dispatch: {e}")))?;

    // Confirm overloads under the dispatch the operator would actually run.
    let running = ems_dispatch.as_deref().unwrap_or(&attack.corrupted_dispatch);
    let confirmed_overloads =
        confirm_overloads(case, running, &loads, &lodf).map_err(VerificationError::Baseline)?;

    Ok(VerificationReport {
        stealthy: verdict.passed,
        residual_delta: verdict.residual_delta,
        ems_view,
        true_with_ems_dispatch,
        true_with_vector_dispatch,
        confirmed_overloads,
        cost_delta,
    })
}

fn dispatch_view(
    case: &GridCase,
    dispatch: &[f64],
    loads: &[f64],
    lodf: &LodfMatrix,
) -> Result<DispatchView, PowerFlowError> {
    let state = solve_powerflow(case, dispatch, loads)?;
    let mut base_violations: Vec<(usize, f64)> = state
        .line_flow
        .iter()
        .enumerate()
        .map(|(i, &f)| (i, libm::fabs(f) / case.lines[i].capacity))
        .filter(|&(_, loading)| loading > 1.0)
        .collect();
    base_violations.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let screen = contingency_screen(case, &state, lodf);
    let cost = evaluate_cost(case, dispatch).unwrap_or(f64::NAN);
    Ok(DispatchView {
        dispatch: dispatch.to_vec(),
        cost,
        base_flows: state.line_flow,
        base_violations,
        screen,
    })
}

fn confirm_overloads(
    case: &GridCase,
    dispatch: &[f64],
    loads: &[f64],
    lodf: &LodfMatrix,
) -> Result<Vec<ConfirmedOverload>, String> {
    let state = solve_powerflow(case, dispatch, loads).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for k in lodf.non_islanding() {
        let shortcut =
            post_contingency_flows(&state, lodf, k).map_err(|e| e.to_string())?;
        let resolved =
            resolve_outage_flows(case, dispatch, loads, k).map_err(|e| e.to_string())?;
        for (&(line, fast), &(line2, slow)) in shortcut.iter().zip(resolved.iter()) {
            debug_assert_eq!(line, line2);
            let cap = case.lines[line].capacity;
            let agree = libm::fabs(fast - slow) <= ORACLE_TOL;
            if agree && libm::fabs(fast) > cap && libm::fabs(slow) > cap {
                out.push(ConfirmedOverload {
                    line,
                    outage: k,
                    flow: fast,
                    loading_percent: 100.0 * libm::fabs(fast) / cap,
                    excess_percent: 100.0 * (libm::fabs(fast) - cap) / cap,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.excess_percent
            .partial_cmp(&a.excess_percent)
            .unwrap()
            .then(a.line.cmp(&b.line))
            .then(a.outage.cmp(&b.outage))
    });
    Ok(out)
}
