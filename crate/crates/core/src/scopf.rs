//! Security-constrained optimal power flow.
//!
//! Minimize total generation cost sum over running generators of
//! (alpha + beta * P) subject to: generation balances load; each generator is
//! either off (P = 0) or within [P_min, P_max]; every base-case line flow is
//! within capacity; and every post-contingency flow (predicted via LODF for
//! each non-islanding single-line outage) is within capacity.
//!
//! The on/off disjunction is handled by exact enumeration of generator
//! subsets (practical for the small generator counts targeted here); each
//! subset yields a linear program solved with contingency-row generation:
//! start from base constraints, add post-contingency rows only as the
//! candidate dispatch violates them. Equal-cost ties are broken by the
//! lexicographically smallest per-bus dispatch vector.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dc_powerflow::{solve_powerflow, PowerFlowState};
use crate::grid_model::{Generator, GridCase};
use crate::linalg::Matrix;
use crate::lodf::{compute_lodf, injection_shift_factors, LodfMatrix};
use crate::simplex::{solve_lp, LinearProgram, LpOutcome, Rel};

/// Dispatch entries with magnitude at or below this are "off".
pub const OFF_TOL: f64 = 1e-9;
/// Constraint-violation tolerance for row generation and rechecks (pu).
pub const FLOW_TOL: f64 = 1e-9;
/// A constraint within this distance of its limit is reported binding (pu).
pub const BIND_TOL: f64 = 1e-6;
/// Subset enumeration guard: 2^count linear programs.
pub const MAX_ENUMERATED_GENERATORS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Base-case flow at capacity; subject = line.
    BaseFlow,
    /// Post-contingency flow at capacity; subject = line, outage set.
    ContingencyFlow,
    /// Generator at its minimum output; subject = bus.
    GeneratorMin,
    /// Generator at its maximum output; subject = bus.
    GeneratorMax,
}

/// A constraint sitting at its limit in the returned solution (0-based
/// subject/outage indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BindingConstraint {
    pub kind: ConstraintKind,
    pub subject: usize,
    pub outage: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScopfSolution {
    /// Per-bus generation (pu), zero at buses without a running generator.
    pub dispatch: Vec<f64>,
    /// Total cost in dollars: sum of alpha + beta * P over P > 0.
    pub cost: f64,
    /// Base-case operating point at the optimal dispatch.
    pub flows: PowerFlowState,
    /// Constraints at their limits, deterministically ordered.
    pub binding: Vec<BindingConstraint>,
    /// Outages excluded from security constraints because they island the
    /// network (0-based line indices).
    pub islanding_excluded: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScopfError {
    Dimension { what: &'static str, expected: usize, found: usize },
    /// A load input violates its rated bounds (or is nonzero off a load bus).
    LoadOutOfBounds { bus: usize, message: String },
    TooManyGenerators { count: usize },
    /// No dispatch satisfies every constraint; `hint` names an irreducible
    /// culprit found by incremental diagnosis.
    Infeasible { hint: String },
    /// A dispatch failed the off-or-within-limits rule.
    InvalidDispatch { bus: usize, message: String },
    /// LP kernel failure (iteration limit); not expected on sane inputs.
    Numerical,
}

impl fmt::Display for ScopfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScopfError::Dimension { what, expected, found } => {
                write!(f, "{what}: expected length {expected}, found {found}")
            }
            ScopfError::LoadOutOfBounds { bus, message } => {
                write!(f, "load at bus {}: {message}", bus + 1)
            }
            ScopfError::TooManyGenerators { count } => {
                write!(f, "{count} generators exceed the subset-enumeration limit of {MAX_ENUMERATED_GENERATORS}")
            }
            ScopfError::Infeasible { hint } => write!(f, "no secure dispatch exists: {hint}"),
            ScopfError::InvalidDispatch { bus, message } => {
                write!(f, "dispatch at bus {}: {message}", bus + 1)
            }
            ScopfError::Numerical => write!(f, "linear program did not converge"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ScopfError {}

/// Cost of a per-bus dispatch: sum of alpha + beta * P over generators with
/// P > 0; zero-output generators contribute nothing. Rejects dispatches that
/// are neither off nor within [P_min, P_max], and nonzero entries at buses
/// without a generator.
pub fn evaluate_cost(case: &GridCase, dispatch: &[f64]) -> Result<f64, ScopfError> {
    let b = case.num_buses();
    if dispatch.len() != b {
        return Err(ScopfError::Dimension { what: "dispatch", expected: b, found: dispatch.len() });
    }
    let mut cost = 0.0;
    for (bus0, &p) in dispatch.iter().enumerate() {
        match case.generator_at(bus0) {
            None => {
                if libm::fabs(p) > OFF_TOL {
                    return Err(ScopfError::InvalidDispatch {
                        bus: bus0,
                        message: format!("{p} pu at a bus without a generator"),
                    });
                }
            }
            Some(g) => {
                if libm::fabs(p) <= OFF_TOL {
                    continue; // off
                }
                if p < g.p_min - BIND_TOL || p > g.p_max + BIND_TOL {
                    return Err(ScopfError::InvalidDispatch {
                        bus: bus0,
                        message: format!(
                            "{p} pu is neither 0 nor within [{}, {}]",
                            g.p_min, g.p_max
                        ),
                    });
                }
                cost += g.alpha + g.beta * p;
            }
        }
    }
    Ok(cost)
}

/// Immutable per-case data shared by every subset LP.
struct Workspace<'a> {
    case: &'a GridCase,
    total_load: f64,
    gens: Vec<&'a Generator>,
    isf: Matrix,
    lodf: LodfMatrix,
    /// Per-line flow contribution of the fixed loads: (ISF * loads)_i.
    load_flow: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn new(case: &'a GridCase, loads: &'a [f64]) -> Result<Self, ScopfError> {
        let b = case.num_buses();
        if loads.len() != b {
            return Err(ScopfError::Dimension { what: "loads", expected: b, found: loads.len() });
        }
        for bus0 in 0..b {
            match case.load_at(bus0) {
                Some(spec) => {
                    if loads[bus0] < spec.min - 1e-9 || loads[bus0] > spec.max + 1e-9 {
                        return Err(ScopfError::LoadOutOfBounds {
                            bus: bus0,
                            message: format!(
                                "{} pu outside rated bounds [{}, {}]",
                                loads[bus0], spec.min, spec.max
                            ),
                        });
                    }
                }
                None => {
                    if loads[bus0] != 0.0 {
                        return Err(ScopfError::LoadOutOfBounds {
                            bus: bus0,
                            message: format!("{} pu at a bus without a load", loads[bus0]),
                        });
                    }
                }
            }
        }
        let mut gens: Vec<&Generator> = case.generators.iter().collect();
        gens.sort_by_key(|g| g.bus);
        if gens.len() > MAX_ENUMERATED_GENERATORS {
            return Err(ScopfError::TooManyGenerators { count: gens.len() });
        }
        let total_load: f64 = loads.iter().sum();
        let capacity: f64 = gens.iter().map(|g| g.p_max).sum();
        if capacity < total_load - FLOW_TOL {
            return Err(ScopfError::Infeasible {
                hint: format!("total generation capacity {capacity} pu below total load {total_load} pu"),
            });
        }
        let isf = injection_shift_factors(case);
        let lodf = compute_lodf(case);
        let load_flow = isf.matvec(loads);
        Ok(Workspace { case, total_load, gens, isf, lodf, load_flow })
    }

    /// Base-case flow on line i for LP variable values `p` over `on`.
    fn base_flow(&self, on: &[usize], p: &[f64], i: usize) -> f64 {
        let mut flow = -self.load_flow[i];
        for (v, &g) in on.iter().enumerate() {
            flow += self.isf[(i, self.gens[g].bus - 1)] * p[v];
        }
        flow
    }

    /// LP coefficient rows for |flow_i + lodf * flow_k| <= cap_i, expressed
    /// over the `on` variables; `outage` of None means the base case.
    fn flow_row(&self, on: &[usize], i: usize, outage: Option<usize>) -> (Vec<(usize, f64)>, f64) {
        let lodf_ik = outage.map_or(0.0, |k| self.lodf.factors[(i, k)]);
        let mut coeffs = Vec::with_capacity(on.len());
        for (v, &g) in on.iter().enumerate() {
            let bus0 = self.gens[g].bus - 1;
            let mut coef = self.isf[(i, bus0)];
            if let Some(k) = outage {
                coef += lodf_ik * self.isf[(k, bus0)];
            }
            coeffs.push((v, coef));
        }
        let mut constant = self.load_flow[i];
        if let Some(k) = outage {
            constant += lodf_ik * self.load_flow[k];
        }
        (coeffs, constant)
    }
}

fn base_lp(ws: &Workspace, on: &[usize], with_base_rows: bool, relaxed: bool) -> LinearProgram {
    let mut lp = LinearProgram::new(on.len());
    let mut balance = Vec::with_capacity(on.len());
    for (v, &g) in on.iter().enumerate() {
        let gen = ws.gens[g];
        let lo = if relaxed { 0.0 } else { gen.p_min };
        lp.set_bounds(v, lo, gen.p_max);
        lp.set_objective(v, gen.beta);
        balance.push((v, 1.0));
    }
    lp.add_row(Rel::Eq, ws.total_load, &balance);
    if with_base_rows {
        for i in 0..ws.case.num_lines() {
            add_flow_rows(&mut lp, ws, on, i, None);
        }
    }
    lp
}

fn add_flow_rows(lp: &mut LinearProgram, ws: &Workspace, on: &[usize], i: usize, outage: Option<usize>) {
    let (coeffs, constant) = ws.flow_row(on, i, outage);
    let cap = ws.case.lines[i].capacity;
    lp.add_row(Rel::Le, cap + constant, &coeffs);
    lp.add_row(Rel::Ge, -cap + constant, &coeffs);
}

/// Scan every non-islanding (line, outage) pair at dispatch `p`; returns
/// violated pairs in deterministic order.
fn violated_pairs(ws: &Workspace, on: &[usize], p: &[f64]) -> Vec<(usize, usize)> {
    let l = ws.case.num_lines();
    let flows: Vec<f64> = (0..l).map(|i| ws.base_flow(on, p, i)).collect();
    let mut out = Vec::new();
    for k in 0..l {
        if ws.lodf.islanding[k] {
            continue;
        }
        for i in 0..l {
            if i == k {
                continue;
            }
            let post = flows[i] + ws.lodf.factors[(i, k)] * flows[k];
            if libm::fabs(post) > ws.case.lines[i].capacity + FLOW_TOL {
                out.push((i, k));
            }
        }
    }
    out
}

enum SubsetOutcome {
    Feasible(Vec<f64>),
    Infeasible,
}

/// Solve one on-subset to optimality with contingency-row generation, then
/// refine to the lexicographically smallest dispatch among cost ties.
fn solve_subset(
    ws: &Workspace,
    on: &[usize],
    with_contingencies: bool,
) -> Result<SubsetOutcome, ScopfError> {
    let mut added: BTreeSet<(usize, usize)> = BTreeSet::new();
    loop {
        // Phase A: optimize under the current row set.
        let mut lp = base_lp(ws, on, true, false);
        for &(i, k) in &added {
            add_flow_rows(&mut lp, ws, on, i, Some(k));
        }
        let (p_opt, cost) = match solve_lp(&lp).map_err(|_| ScopfError::Numerical)? {
            LpOutcome::Optimal { x, objective } => (x, objective),
            LpOutcome::Infeasible => return Ok(SubsetOutcome::Infeasible),
            LpOutcome::Unbounded => return Err(ScopfError::Numerical),
        };
        if with_contingencies {
            let violated = violated_pairs(ws, on, &p_opt);
            if !violated.is_empty() {
                let before = added.len();
                added.extend(violated);
                if added.len() == before {
                    return Err(ScopfError::Numerical);
                }
                continue;
            }
        }
        // Phase B: pin the optimal cost, then minimize each variable in bus
        // order for a deterministic representative of the optimal face.
        let mut refined = lp;
        let cost_row: Vec<(usize, f64)> =
            on.iter().enumerate().map(|(v, &g)| (v, ws.gens[g].beta)).collect();
        refined.add_row(Rel::Eq, cost, &cost_row);
        let mut p_final = p_opt;
        for v in 0..on.len() {
            for obj in 0..on.len() {
                refined.set_objective(obj, if obj == v { 1.0 } else { 0.0 });
            }
            match solve_lp(&refined).map_err(|_| ScopfError::Numerical)? {
                LpOutcome::Optimal { x, .. } => {
                    refined.add_row(Rel::Eq, x[v], &[(v, 1.0)]);
                    p_final = x;
                }
                // Tolerance stack-up on the pinned rows: fall back to the
                // unrefined optimum rather than fail.
                LpOutcome::Infeasible => break,
                LpOutcome::Unbounded => return Err(ScopfError::Numerical),
            }
        }
        if with_contingencies {
            let violated = violated_pairs(ws, on, &p_final);
            if !violated.is_empty() {
                added.extend(violated);
                continue;
            }
        }
        return Ok(SubsetOutcome::Feasible(p_final));
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if libm::fabs(x - y) > 1e-9 {
            return x < y;
        }
    }
    false
}

/// Pinpoint an infeasibility cause for the error hint: relax on/off and
/// minimum-output restrictions, then add constraint families until the LP
/// breaks.
fn diagnose(ws: &Workspace) -> String {
    let all: Vec<usize> = (0..ws.gens.len()).collect();
    let balance_only = base_lp(ws, &all, false, true);
    if !lp_feasible(&balance_only) {
        return format!("cannot balance {} pu of load within generator ratings", ws.total_load);
    }
    let mut lp = base_lp(ws, &all, true, true);
    if !lp_feasible(&lp) {
        return String::from("base-case line limits exclude every balanced dispatch");
    }
    for k in 0..ws.case.num_lines() {
        if ws.lodf.islanding[k] {
            continue;
        }
        for i in 0..ws.case.num_lines() {
            if i != k {
                add_flow_rows(&mut lp, ws, &all, i, Some(k));
            }
        }
        if !lp_feasible(&lp) {
            return format!("post-contingency limits for outage of line {} exclude every remaining dispatch", k + 1);
        }
    }
    String::from("generator minimum-output (on/off) restrictions exclude every dispatch")
}

fn lp_feasible(lp: &LinearProgram) -> bool {
    matches!(solve_lp(lp), Ok(LpOutcome::Optimal { .. }))
}

fn solve_dispatch(
    case: &GridCase,
    loads: &[f64],
    with_contingencies: bool,
) -> Result<ScopfSolution, ScopfError> {
    let ws = Workspace::new(case, loads)?;
    let g = ws.gens.len();
    let b = case.num_buses();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0..(1u32 << g) {
        let on: Vec<usize> = (0..g).filter(|v| mask & (1 << v) != 0).collect();
        let pmax: f64 = on.iter().map(|&v| ws.gens[v].p_max).sum();
        let pmin: f64 = on.iter().map(|&v| ws.gens[v].p_min).sum();
        if pmax < ws.total_load - FLOW_TOL || pmin > ws.total_load + FLOW_TOL {
            continue;
        }
        let SubsetOutcome::Feasible(p) = solve_subset(&ws, &on, with_contingencies)? else {
            continue;
        };
        let mut dispatch = vec![0.0; b];
        for (v, &gi) in on.iter().enumerate() {
            dispatch[ws.gens[gi].bus - 1] = if p[v] <= OFF_TOL { 0.0 } else { p[v] };
        }
        let cost = evaluate_cost(case, &dispatch)?;
        let better = match &best {
            None => true,
            Some((c, d)) => cost < c - 1e-9 || (libm::fabs(cost - c) <= 1e-9 && lex_less(&dispatch, d)),
        };
        if better {
            best = Some((cost, dispatch));
        }
    }
    let Some((cost, dispatch)) = best else {
        return Err(ScopfError::Infeasible { hint: diagnose(&ws) });
    };
    let flows = solve_powerflow(case, &dispatch, loads).map_err(|_| ScopfError::Numerical)?;
    let binding = find_binding(&ws, &dispatch, &flows, with_contingencies);
    let islanding_excluded = (0..case.num_lines()).filter(|&k| ws.lodf.islanding[k]).collect();
    Ok(ScopfSolution { dispatch, cost, flows, binding, islanding_excluded })
}

fn find_binding(
    ws: &Workspace,
    dispatch: &[f64],
    flows: &PowerFlowState,
    with_contingencies: bool,
) -> Vec<BindingConstraint> {
    let mut binding = Vec::new();
    for gen in &ws.gens {
        let p = dispatch[gen.bus - 1];
        if p <= OFF_TOL {
            continue;
        }
        if libm::fabs(p - gen.p_max) <= BIND_TOL {
            binding.push(BindingConstraint {
                kind: ConstraintKind::GeneratorMax,
                subject: gen.bus - 1,
                outage: None,
            });
        } else if libm::fabs(p - gen.p_min) <= BIND_TOL {
            binding.push(BindingConstraint {
                kind: ConstraintKind::GeneratorMin,
                subject: gen.bus - 1,
                outage: None,
            });
        }
    }
    let l = ws.case.num_lines();
    for i in 0..l {
        if libm::fabs(flows.line_flow[i]) >= ws.case.lines[i].capacity - BIND_TOL {
            binding.push(BindingConstraint { kind: ConstraintKind::BaseFlow, subject: i, outage: None });
        }
    }
    if with_contingencies {
        for k in 0..l {
            if ws.lodf.islanding[k] {
                continue;
            }
            for i in 0..l {
                if i == k {
                    continue;
                }
                let post = flows.line_flow[i] + ws.lodf.factors[(i, k)] * flows.line_flow[k];
                if libm::fabs(post) >= ws.case.lines[i].capacity - BIND_TOL {
                    binding.push(BindingConstraint {
                        kind: ConstraintKind::ContingencyFlow,
                        subject: i,
                        outage: Some(k),
                    });
                }
            }
        }
    }
    binding
}

/// Solve the security-constrained OPF for the given per-bus loads (pu).
pub fn solve_scopf(case: &GridCase, loads: &[f64]) -> Result<ScopfSolution, ScopfError> {
    solve_dispatch(case, loads, true)
}

/// Plain OPF variant without post-contingency constraints; its optimal cost
/// is a lower bound on [`solve_scopf`]'s.
pub fn solve_opf(case: &GridCase, loads: &[f64]) -> Result<ScopfSolution, ScopfError> {
    solve_dispatch(case, loads, false)
}
