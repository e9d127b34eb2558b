//! Search for stealthy false-data-injection vectors that keep the operator's
//! state estimator quiet, keep the re-dispatched cost under a budget, and
//! still leave the real system exposed to post-contingency line overloads.
//!
//! The search is exact over its discrete choices: an outer enumeration over
//! compromised-bus subsets (ascending size, then lexicographic), an inner
//! enumeration over overload-target pair sets and flow signs, and generator
//! on/off subsets as in the dispatch optimizer. For a fixed subset, the
//! stealth structure collapses to a linear subspace: every line whose flow
//! measurements the attacker cannot touch pins its endpoint angle shifts
//! together, and every bus whose consumption cannot change pins a Laplacian
//! row to zero. A nullspace basis of those equalities parameterizes all
//! invisible state shifts, and the remaining question — does some shift plus
//! some plausible re-dispatch overload the targeted pairs? — is a linear
//! program. Unsat therefore comes with an exhaustiveness certificate rather
//! than a sampling claim.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dc_powerflow::{solve_powerflow, susceptance_laplacian};
use crate::grid_model::GridCase;
use crate::linalg::{nullspace, Matrix};
use crate::lodf::{compute_lodf, post_contingency_flows, injection_shift_factors, LodfMatrix};
use crate::scopf::{solve_scopf, ScopfSolution, MAX_ENUMERATED_GENERATORS, OFF_TOL};
use crate::simplex::{solve_lp, LinearProgram, LpOutcome, Rel};

/// Tightening of the strict overload inequality inside the LP.
pub const EXCESS_EPS: f64 = 1e-6;
/// Threshold below which a shift is treated as zero when deriving the
/// altered/corrupted/compromised flags.
pub const DELTA_TOL: f64 = 1e-9;
/// Rank tolerance for the stealth-structure nullspace.
const NULLSPACE_TOL: f64 = 1e-9;
/// Slack allowed when re-checking LP rows against exact arithmetic.
const ROW_TOL: f64 = 1e-6;

/// What the attacker wants to achieve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisGoal {
    /// Minimum number of (overloaded line, tripped line) pairs.
    pub min_overload_pairs: usize,
    /// Overloads must exceed capacity by this fraction.
    pub overload_margin: f64,
    /// Ceiling on the corrupted-dispatch cost in dollars.
    pub cost_budget: f64,
}

impl SynthesisGoal {
    /// Goal implied by the case file: pair count from the line fraction,
    /// margin from the case, budget from the case or the pre-attack optimum.
    pub fn from_case(case: &GridCase, pre: &ScopfSolution) -> Self {
        SynthesisGoal {
            min_overload_pairs: case.target_line_count(),
            overload_margin: case.attacker_limits.delta_l,
            cost_budget: case.attacker_limits.cost_budget.unwrap_or(pre.cost),
        }
    }
}

/// A complete, self-consistent attack plan.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackVector {
    /// Per-bus state (angle) shift the estimator will absorb; slack entry 0.
    pub delta_theta: Vec<f64>,
    /// Per-line shift of the forward flow measurement (pu).
    pub delta_line: Vec<f64>,
    /// Per-bus consumption shift (pu); equals the load shift.
    pub delta_bus: Vec<f64>,
    /// Per-measurement altered flags (length 2l + b).
    pub altered: Vec<bool>,
    /// Per-bus corrupted-state flags (angle shifted).
    pub corrupted: Vec<bool>,
    /// Per-bus compromised flags (some altered measurement is metered there).
    pub compromised: Vec<bool>,
    /// Loads as the operator will see them after the attack (pu).
    pub attacked_load: Vec<f64>,
    /// The dispatch the operator's re-optimization settles on (pu per bus).
    pub corrupted_dispatch: Vec<f64>,
    /// Cost of that dispatch in dollars.
    pub corrupted_cost: f64,
    /// Realized (overloaded line, tripped line, percent above capacity)
    /// triples under real loads and the corrupted dispatch, 0-based indices.
    pub overload_pairs: Vec<(usize, usize, f64)>,
}

impl AttackVector {
    /// Number of altered measurements.
    pub fn altered_count(&self) -> usize {
        self.altered.iter().filter(|&&a| a).count()
    }

    /// Number of compromised buses.
    pub fn compromised_count(&self) -> usize {
        self.compromised.iter().filter(|&&h| h).count()
    }

    /// The measurement injection vector `a` (length 2l + b): forward flow
    /// shifts, negated backward shifts, consumption shifts.
    pub fn injection(&self, case: &GridCase) -> Vec<f64> {
        let l = case.num_lines();
        let b = case.num_buses();
        let mut a = vec![0.0; 2 * l + b];
        for i in 0..l {
            a[i] = self.delta_line[i];
            a[l + i] = -self.delta_line[i];
        }
        for j in 0..b {
            a[2 * l + j] = self.delta_bus[j];
        }
        a
    }

    /// Structural invariants; returns a description of the first violation.
    pub fn check_invariants(&self, case: &GridCase) -> Result<(), String> {
        let b = case.num_buses();
        let l = case.num_lines();
        let m = case.num_measurements();
        if self.delta_theta.len() != b
            || self.delta_bus.len() != b
            || self.attacked_load.len() != b
            || self.corrupted_dispatch.len() != b
            || self.corrupted.len() != b
            || self.compromised.len() != b
            || self.delta_line.len() != l
            || self.altered.len() != m
        {
            return Err(String::from("field lengths do not match the case"));
        }
        for (m0, &altered) in self.altered.iter().enumerate() {
            if !altered {
                continue;
            }
            let mc = &case.measurements[m0];
            if !mc.taken || mc.secured || !mc.alterable {
                return Err(format!(
                    "measurement {} is altered but not (taken, unsecured, alterable)",
                    m0 + 1
                ));
            }
            if !self.compromised[case.meter_bus(m0)] {
                return Err(format!(
                    "measurement {} is altered but its metering bus is not compromised",
                    m0 + 1
                ));
            }
        }
        let limits = &case.attacker_limits;
        if self.compromised_count() > limits.max_buses {
            return Err(format!(
                "{} compromised buses exceed the limit of {}",
                self.compromised_count(),
                limits.max_buses
            ));
        }
        if self.altered_count() > limits.max_measurements {
            return Err(format!(
                "{} altered measurements exceed the limit of {}",
                self.altered_count(),
                limits.max_measurements
            ));
        }
        let mut shift_sum = 0.0;
        for j in 0..b {
            let load = case.load_at(j).map_or(0.0, |spec| spec.current);
            let shift = self.delta_bus[j];
            if libm::fabs(shift) > limits.delta_b * load + ROW_TOL {
                return Err(format!(
                    "bus {} load shift {shift} exceeds {}% of {load}",
                    j + 1,
                    limits.delta_b * 100.0
                ));
            }
            if libm::fabs(self.attacked_load[j] - (load + shift)) > ROW_TOL {
                return Err(format!("bus {} attacked load disagrees with its shift", j + 1));
            }
            shift_sum += shift;
        }
        if libm::fabs(shift_sum) > 1e-8 {
            return Err(format!("load shifts sum to {shift_sum}, not zero"));
        }
        if self.delta_theta[case.slack0()] != 0.0 {
            return Err(String::from("slack angle shift must be zero"));
        }
        for j in 0..b {
            let shifted = libm::fabs(self.delta_theta[j]) > DELTA_TOL;
            if self.corrupted[j] != shifted {
                return Err(format!("corrupted flag at bus {} disagrees with its shift", j + 1));
            }
        }
        Ok(())
    }
}

/// Proof of exhaustive exploration backing an Unsat verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnsatCertificate {
    /// Largest subset size explored (the bus limit).
    pub max_subset_size: usize,
    /// Bus subsets of size 1..=max examined.
    pub subsets_explored: usize,
    /// Subsets whose stealth structure admits only the zero shift.
    pub structurally_pruned: usize,
    /// (subset, pair set, sign) leaves whose exact feasibility system was
    /// solved to infeasibility.
    pub leaves_refuted: usize,
    /// Feasible candidates discarded because they exceeded the altered-
    /// measurement budget even after sparsification; a nonzero value means
    /// the verdict is exhaustive over this search's candidate solutions but
    /// not over every point of the feasible polytopes.
    pub rejected_by_measurement_budget: usize,
    /// Feasible candidates discarded because the operator's re-optimization
    /// absorbed the shift without creating the required overloads.
    pub rejected_by_replay: usize,
}

/// Result of a synthesis run.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthesisOutcome {
    Sat(AttackVector),
    Unsat(UnsatCertificate),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthesisError {
    /// The pair goal exceeds what the topology offers.
    GoalImpossible { requested: usize, available: usize },
    /// Resource limits contradict the goal outright.
    InconsistentLimits { message: String },
    TooManyGenerators { count: usize },
}

impl core::fmt::Display for SynthesisError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SynthesisError::GoalImpossible { requested, available } => write!(
                f,
                "goal requires {requested} overload pairs but only {available} \
                 (line, outage) pairs exist"
            ),
            SynthesisError::InconsistentLimits { message } => {
                write!(f, "inconsistent attacker limits: {message}")
            }
            SynthesisError::TooManyGenerators { count } => write!(
                f,
                "{count} generators exceed the on/off enumeration limit of \
                 {MAX_ENUMERATED_GENERATORS}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SynthesisError {}

/// Everything found by an exploration run.
#[derive(Debug, Clone)]
pub struct AttackSpace {
    /// Verified vectors, deduplicated by (compromised-bus set, pair set).
    pub vectors: Vec<AttackVector>,
    /// Bus subsets admitting at least one exactly-feasible pair set. This is
    /// the attack-space size metric: it provably never shrinks when the
    /// load-shift budget grows and never grows when the overload margin or
    /// the required pair count grows, because removing a pair from a
    /// feasible set keeps it feasible and a wider shift window contains the
    /// narrower one.
    pub viable_subsets: usize,
    /// Count of (bus subset, pair set, sign) combinations whose exact
    /// feasibility system is satisfiable. Only exhaustive exploration visits
    /// every combination; the cheaper modes undercount by design.
    pub combo_count: usize,
    /// The exploration record (certificate when `vectors` is empty).
    pub certificate: UnsatCertificate,
}

/// How much of the space a run visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RunMode {
    /// Stop everything at the first verified vector.
    FirstVector,
    /// Visit every subset, but leave each one after its first exactly
    /// feasible pair set (replaying only that one). Bounded work per
    /// subset; the basis of the sweep metric.
    PerSubset,
    /// Visit every feasible pair set of every subset.
    Exhaustive,
}

/// Find one attack vector, or prove none exists at these limits.
pub fn synthesize(
    case: &GridCase,
    pre: &ScopfSolution,
    goal: &SynthesisGoal,
) -> Result<SynthesisOutcome, SynthesisError> {
    check_pre(case, pre)?;
    let mut search = Search::new(case, goal)?;
    let space = search.run(RunMode::FirstVector);
    Ok(match space.vectors.into_iter().next() {
        Some(v) => SynthesisOutcome::Sat(v),
        None => SynthesisOutcome::Unsat(space.certificate),
    })
}

/// All satisfying vectors (deduplicated) plus the attack-space size.
pub fn explore_attack_space(
    case: &GridCase,
    pre: &ScopfSolution,
    goal: &SynthesisGoal,
) -> Result<AttackSpace, SynthesisError> {
    check_pre(case, pre)?;
    let mut search = Search::new(case, goal)?;
    Ok(search.run(RunMode::Exhaustive))
}

/// The attack-space size and one representative vector per viable subset,
/// at bounded cost per subset — the workhorse of parameter sweeps.
pub fn measure_attack_space(
    case: &GridCase,
    pre: &ScopfSolution,
    goal: &SynthesisGoal,
) -> Result<AttackSpace, SynthesisError> {
    check_pre(case, pre)?;
    let mut search = Search::new(case, goal)?;
    Ok(search.run(RunMode::PerSubset))
}

/// All satisfying vectors under the search's discretization, deduplicated by
/// (compromised-bus set, overload-pair set).
pub fn enumerate_attack_space(
    case: &GridCase,
    pre: &ScopfSolution,
    goal: &SynthesisGoal,
) -> Result<Vec<AttackVector>, SynthesisError> {
    Ok(explore_attack_space(case, pre, goal)?.vectors)
}

/// A candidate (overloaded line, tripped line, flow sign) that survived the
/// relaxed single-pair screen.
#[derive(Debug, Clone, Copy)]
struct ScreenedPair {
    line: usize,
    outage: usize,
    sign: f64,
    /// Upper bound on achievable post-contingency |flow| on `line`.
    reach: f64,
}

struct Search<'a> {
    case: &'a GridCase,
    goal: SynthesisGoal,
    lap: Matrix,
    isf: Matrix,
    lodf: LodfMatrix,
    loads: Vec<f64>,
    /// (bus0, p_min, p_max, alpha, beta) per generator, bus-ascending.
    gens: Vec<(usize, f64, f64, f64, f64)>,
    /// Per-line generator coefficients of the true flow: mg[i][g].
    mg: Vec<Vec<f64>>,
    /// Constant part of the true flow: -(M P^D)_i.
    base_true: Vec<f64>,
    /// Admissible load-shift interval per bus; None = pinned to zero.
    shift_bounds: Vec<Option<(f64, f64)>>,
    screened: Vec<ScreenedPair>,
    cert: UnsatCertificate,
    combo_count: usize,
}

impl<'a> Search<'a> {
    fn new(case: &'a GridCase, goal: &SynthesisGoal) -> Result<Self, SynthesisError> {
        let limits = &case.attacker_limits;
        if goal.min_overload_pairs == 0 {
            return Err(SynthesisError::InconsistentLimits {
                message: String::from("the goal must target at least one overload pair"),
            });
        }
        if limits.max_measurements == 0 {
            return Err(SynthesisError::InconsistentLimits {
                message: String::from(
                    "no measurements may be altered, so no overload goal is reachable",
                ),
            });
        }
        if case.generators.len() > MAX_ENUMERATED_GENERATORS {
            return Err(SynthesisError::TooManyGenerators { count: case.generators.len() });
        }
        let lodf = compute_lodf(case);
        let l = case.num_lines();
        let available =
            lodf.non_islanding().count() * l.saturating_sub(1);
        if goal.min_overload_pairs > available {
            return Err(SynthesisError::GoalImpossible {
                requested: goal.min_overload_pairs,
                available,
            });
        }

        let loads = case.load_vector();
        let isf = injection_shift_factors(case);
        let mut gens: Vec<(usize, f64, f64, f64, f64)> = case
            .generators
            .iter()
            .map(|g| (g.bus - 1, g.p_min, g.p_max, g.alpha, g.beta))
            .collect();
        gens.sort_by_key(|g| g.0);

        let mg: Vec<Vec<f64>> =
            (0..l).map(|i| gens.iter().map(|g| isf[(i, g.0)]).collect()).collect();
        let base_true: Vec<f64> = {
            let mp = isf.matvec(&loads);
            mp.iter().map(|v| -v).collect()
        };

        let delta_b = limits.delta_b;
        let shift_bounds: Vec<Option<(f64, f64)>> = (0..case.num_buses())
            .map(|j| match case.load_at(j) {
                Some(spec) if spec.current > 0.0 => {
                    let lo = libm::fmax(spec.min - spec.current, -delta_b * spec.current);
                    let hi = libm::fmin(spec.max - spec.current, delta_b * spec.current);
                    if lo > -1e-15 && hi < 1e-15 {
                        None
                    } else {
                        Some((lo, hi))
                    }
                }
                _ => None,
            })
            .collect();

        let mut search = Search {
            case,
            goal: *goal,
            lap: susceptance_laplacian(case),
            isf,
            lodf,
            loads,
            gens,
            mg,
            base_true,
            shift_bounds,
            screened: Vec::new(),
            cert: UnsatCertificate {
                max_subset_size: limits.max_buses,
                subsets_explored: 0,
                structurally_pruned: 0,
                leaves_refuted: 0,
                rejected_by_measurement_budget: 0,
                rejected_by_replay: 0,
            },
            combo_count: 0,
        };
        search.screened = search.screen_pairs();
        Ok(search)
    }

    /// The flow a pair needs to count as overloaded.
    fn required_flow(&self, line: usize) -> f64 {
        (1.0 + self.goal.overload_margin) * self.case.lines[line].capacity + EXCESS_EPS
    }

    /// Upper-bound each (line, outage, sign) by maximizing the true
    /// post-contingency flow over every budget-respecting dispatch,
    /// ignoring the stealth structure entirely. Pairs that fail here fail
    /// everywhere, for every bus subset.
    fn screen_pairs(&self) -> Vec<ScreenedPair> {
        let l = self.case.num_lines();
        let g = self.gens.len();
        let total: f64 = self.loads.iter().sum();
        let alpha_min =
            self.gens.iter().map(|g| g.3).fold(f64::INFINITY, libm::fmin);

        let mut base = LinearProgram::new(g);
        for (idx, gen) in self.gens.iter().enumerate() {
            base.set_bounds(idx, 0.0, gen.2);
        }
        base.add_row(Rel::Eq, total, &self.gen_row(1.0));
        let cost_row: Vec<(usize, f64)> =
            self.gens.iter().enumerate().map(|(idx, g)| (idx, g.4)).collect();
        base.add_row(Rel::Le, self.goal.cost_budget - alpha_min, &cost_row);
        for i in 0..l {
            let row: Vec<(usize, f64)> =
                self.mg[i].iter().enumerate().map(|(idx, &c)| (idx, c)).collect();
            let cap = self.case.lines[i].capacity;
            base.add_row(Rel::Le, cap - self.base_true[i], &row);
            base.add_row(Rel::Ge, -cap - self.base_true[i], &row);
        }

        let mut out = Vec::new();
        for k in self.lodf.non_islanding() {
            for i in 0..l {
                if i == k {
                    continue;
                }
                for sign in [1.0, -1.0] {
                    let mut lp = base.clone();
                    for (idx, coef) in self.pair_gen_coeffs(i, k).into_iter().enumerate() {
                        lp.set_objective(idx, -sign * coef);
                    }
                    let reach = match solve_lp(&lp) {
                        Ok(LpOutcome::Optimal { objective, .. }) => {
                            -objective + sign * self.pair_constant(i, k)
                        }
                        _ => continue,
                    };
                    if reach >= self.required_flow(i) {
                        out.push(ScreenedPair { line: i, outage: k, sign, reach });
                    }
                }
            }
        }
        // Most promising first; ties broken by indices for determinism.
        out.sort_by(|a, b| {
            b.reach
                .partial_cmp(&a.reach)
                .unwrap()
                .then(a.line.cmp(&b.line))
                .then(a.outage.cmp(&b.outage))
                .then(a.sign.partial_cmp(&b.sign).unwrap())
        });
        out
    }

    /// Generator coefficients of `flow_i + LODF_ik flow_k`.
    fn pair_gen_coeffs(&self, i: usize, k: usize) -> Vec<f64> {
        let f = self.lodf.factors[(i, k)];
        (0..self.gens.len()).map(|idx| self.mg[i][idx] + f * self.mg[k][idx]).collect()
    }

    /// Constant part of `flow_i + LODF_ik flow_k`.
    fn pair_constant(&self, i: usize, k: usize) -> f64 {
        self.base_true[i] + self.lodf.factors[(i, k)] * self.base_true[k]
    }

    fn gen_row(&self, coef: f64) -> Vec<(usize, f64)> {
        (0..self.gens.len()).map(|idx| (idx, coef)).collect()
    }

    fn run(&mut self, mode: RunMode) -> AttackSpace {
        let b = self.case.num_buses();
        let mut t = Traversal {
            mode,
            vectors: Vec::new(),
            seen: BTreeSet::new(),
            viable_subsets: 0,
            subset_had_leaf: false,
        };

        if !self.screened.is_empty() {
            let max_size = self.case.attacker_limits.max_buses.min(b);
            let mut subset = Vec::new();
            for size in 1..=max_size {
                subset.clear();
                if self.visit_subsets(&mut subset, 0, size, &mut t) {
                    break;
                }
            }
        } else {
            // No (line, outage) pair can reach the margin under any
            // budget-respecting dispatch at all, so every subset is covered
            // by the screen's dispatch-exhaustive bound.
            self.cert.subsets_explored = count_subsets(b, self.case.attacker_limits.max_buses);
        }

        AttackSpace {
            vectors: t.vectors,
            viable_subsets: t.viable_subsets,
            combo_count: self.combo_count,
            certificate: self.cert.clone(),
        }
    }

    /// Depth-first enumeration of bus subsets of exactly `size` members.
    /// Returns true if the whole search should stop.
    fn visit_subsets(
        &mut self,
        subset: &mut Vec<usize>,
        from: usize,
        size: usize,
        t: &mut Traversal,
    ) -> bool {
        if subset.len() == size {
            return self.examine_subset(subset, t);
        }
        for bus in from..self.case.num_buses() {
            subset.push(bus);
            if self.visit_subsets(subset, bus + 1, size, t) {
                subset.pop();
                return true;
            }
            subset.pop();
        }
        false
    }

    /// Full treatment of one compromised-bus subset. Returns true if the
    /// whole search should stop.
    fn examine_subset(&mut self, subset: &[usize], t: &mut Traversal) -> bool {
        self.cert.subsets_explored += 1;
        let structure = match self.stealth_structure(subset) {
            Some(s) => s,
            None => {
                self.cert.structurally_pruned += 1;
                return false;
            }
        };

        // Anti-monotone depth-first search over pair sets: a set that is
        // infeasible in the relaxed system stays infeasible when extended.
        t.subset_had_leaf = false;
        let mut chosen: Vec<ScreenedPair> = Vec::new();
        let flow = self.extend_pairs(&structure, &mut chosen, 0, t);
        if t.subset_had_leaf {
            t.viable_subsets += 1;
        }
        matches!(flow, Flow::StopAll)
    }

    fn extend_pairs(
        &mut self,
        structure: &StealthStructure,
        chosen: &mut Vec<ScreenedPair>,
        from: usize,
        t: &mut Traversal,
    ) -> Flow {
        if chosen.len() == self.goal.min_overload_pairs {
            return self.examine_leaf(structure, chosen, t);
        }
        for idx in from..self.screened.len() {
            let pair = self.screened[idx];
            if chosen.iter().any(|p| p.line == pair.line && p.outage == pair.outage) {
                continue;
            }
            chosen.push(pair);
            let viable = match self.solve_inner(structure, chosen, false) {
                InnerOutcome::Feasible(_) => true,
                InnerOutcome::Infeasible => false,
            };
            if viable {
                match self.extend_pairs(structure, chosen, idx + 1, t) {
                    Flow::Continue => {}
                    stop => {
                        chosen.pop();
                        return stop;
                    }
                }
            }
            chosen.pop();
        }
        Flow::Continue
    }

    /// A complete pair set: prove or refute it exactly, then replay the
    /// operator's response before accepting.
    fn examine_leaf(
        &mut self,
        structure: &StealthStructure,
        chosen: &[ScreenedPair],
        t: &mut Traversal,
    ) -> Flow {
        let exact = match self.solve_inner(structure, chosen, true) {
            InnerOutcome::Feasible(point) => point,
            InnerOutcome::Infeasible => {
                self.cert.leaves_refuted += 1;
                return Flow::Continue;
            }
        };
        self.combo_count += 1;
        t.subset_had_leaf = true;
        // Bounded work per subset: in this mode the first exactly feasible
        // pair set settles the subset, whatever the replay says.
        let settled = if t.mode == RunMode::PerSubset { Flow::StopSubset } else { Flow::Continue };

        let mut vector = match self.build_candidate(structure, &exact) {
            Some(v) => v,
            None => {
                self.cert.rejected_by_measurement_budget += 1;
                return settled;
            }
        };
        if vector.altered_count() > self.case.attacker_limits.max_measurements {
            match self.sparsify(structure, chosen, &exact) {
                Some(v) => vector = v,
                None => {
                    self.cert.rejected_by_measurement_budget += 1;
                    return settled;
                }
            }
        }

        if self.replay(&mut vector) {
            let key = (
                (0..self.case.num_buses()).filter(|&j| vector.compromised[j]).collect(),
                vector.overload_pairs.iter().map(|&(i, k, _)| (i, k)).collect(),
            );
            if t.seen.insert(key) {
                t.vectors.push(vector);
                if t.mode == RunMode::FirstVector {
                    return Flow::StopAll;
                }
            }
            settled
        } else {
            self.cert.rejected_by_replay += 1;
            settled
        }
    }

    /// Stealth structure of a subset: nullspace basis of the equalities the
    /// attacker cannot escape, or None when only the zero shift survives.
    fn stealth_structure(&self, subset: &[usize]) -> Option<StealthStructure> {
        let case = self.case;
        let b = case.num_buses();
        let l = case.num_lines();
        let slack = case.slack0();
        let in_subset = |bus: usize| subset.contains(&bus);
        let meas_free = |m0: usize| {
            let mc = &case.measurements[m0];
            !mc.taken || (mc.alterable && !mc.secured && in_subset(case.meter_bus(m0)))
        };

        let col = |bus: usize| crate::dc_powerflow::reduced_index(slack, bus);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for i in 0..l {
            if meas_free(i) && meas_free(l + i) {
                continue;
            }
            // Flow measurements out of reach: the line's flow cannot change.
            let mut row = vec![0.0; b - 1];
            if let Some(cf) = col(case.lines[i].from0()) {
                row[cf] += 1.0;
            }
            if let Some(ce) = col(case.lines[i].to0()) {
                row[ce] -= 1.0;
            }
            if row.iter().any(|&v| v != 0.0) {
                rows.push(row);
            }
        }
        for j in 0..b {
            let pinned = !meas_free(2 * l + j) || self.shift_bounds[j].is_none();
            if !pinned {
                continue;
            }
            // Consumption out of reach (or no room to move): Laplacian row 0.
            let mut row = vec![0.0; b - 1];
            for jj in 0..b {
                if let Some(c) = col(jj) {
                    row[c] = self.lap[(j, jj)];
                }
            }
            if row.iter().any(|&v| v != 0.0) {
                rows.push(row);
            }
        }

        let basis = if rows.is_empty() {
            // Unconstrained: identity basis over the b-1 reduced angles.
            (0..b - 1)
                .map(|i| {
                    let mut e = vec![0.0; b - 1];
                    e[i] = 1.0;
                    e
                })
                .collect()
        } else {
            nullspace(&Matrix::from_rows(&rows), NULLSPACE_TOL)
        };
        if basis.is_empty() {
            return None;
        }

        // Expand basis vectors to full bus length (slack row zero).
        let r = basis.len();
        let mut n_full = Matrix::zeros(b, r);
        for (c, vec_red) in basis.iter().enumerate() {
            for bus in 0..b {
                if let Some(red) = col(bus) {
                    n_full[(bus, c)] = vec_red[red];
                }
            }
        }
        // Load-shift map G = -Lap N (b x r) and corrupted-flow map C = isf Lap N.
        let lap_n = self.lap.matmul(&n_full);
        let mut shift_map = lap_n.clone();
        for i in 0..b {
            for c in 0..r {
                shift_map[(i, c)] = -lap_n[(i, c)];
            }
        }
        let corr_map = self.isf.matmul(&lap_n);
        Some(StealthStructure { n_full, shift_map, corr_map })
    }

    /// Feasibility of (subset, pair set): relaxed when `exact` is false
    /// (generator minimums and commitment ignored — a sound pruning bound),
    /// exact otherwise (on/off subsets enumerated).
    fn solve_inner(
        &self,
        structure: &StealthStructure,
        chosen: &[ScreenedPair],
        exact: bool,
    ) -> InnerOutcome {
        let g = self.gens.len();
        let r = structure.n_full.cols();
        let alpha_min = self.gens.iter().map(|g| g.3).fold(f64::INFINITY, libm::fmin);
        let relaxed = self.solve_commitment(structure, chosen, None, alpha_min);
        let InnerOutcome::Feasible(ref point) = relaxed else {
            return InnerOutcome::Infeasible;
        };
        if !exact {
            return relaxed;
        }
        // The relaxed optimum may already respect a valid commitment.
        let x = &point[r..];
        let on: Vec<bool> = x.iter().map(|&v| v > OFF_TOL).collect();
        if self.commitment_ok(x, &on) {
            if let ok @ InnerOutcome::Feasible(_) =
                self.solve_commitment(structure, chosen, Some(&on), 0.0)
            {
                return ok;
            }
        }
        // Enumerate commitments: all-on first, then descending size, so the
        // cheapest-feasible shape is found quickly; order is deterministic.
        let total: f64 = self.loads.iter().sum();
        let mut masks: Vec<u32> = (1..(1u32 << g)).collect();
        masks.sort_by_key(|m| core::cmp::Reverse(m.count_ones()));
        for mask in masks {
            let on: Vec<bool> = (0..g).map(|idx| mask & (1 << idx) != 0).collect();
            let p_max: f64 =
                (0..g).filter(|&i| on[i]).map(|i| self.gens[i].2).sum();
            let p_min: f64 =
                (0..g).filter(|&i| on[i]).map(|i| self.gens[i].1).sum();
            if p_max + 1e-9 < total || p_min > total + 1e-9 {
                continue;
            }
            if let ok @ InnerOutcome::Feasible(_) =
                self.solve_commitment(structure, chosen, Some(&on), 0.0)
            {
                return ok;
            }
        }
        InnerOutcome::Infeasible
    }

    fn commitment_ok(&self, x: &[f64], on: &[bool]) -> bool {
        let mut cost = 0.0;
        for (idx, gen) in self.gens.iter().enumerate() {
            if on[idx] {
                if x[idx] < gen.1 - 1e-9 {
                    return false;
                }
                cost += gen.3 + gen.4 * x[idx];
            }
        }
        cost <= self.goal.cost_budget + 1e-9
    }

    /// The inner LP for one commitment (None = relaxed continuous bound).
    fn solve_commitment(
        &self,
        structure: &StealthStructure,
        chosen: &[ScreenedPair],
        on: Option<&[bool]>,
        alpha_slack: f64,
    ) -> InnerOutcome {
        let case = self.case;
        let l = case.num_lines();
        let b = case.num_buses();
        let g = self.gens.len();
        let r = structure.n_full.cols();
        // Variables: w_0..w_{r-1} (free), then generator outputs.
        let mut lp = LinearProgram::new(r + g);
        for (idx, gen) in self.gens.iter().enumerate() {
            match on {
                None => lp.set_bounds(r + idx, 0.0, gen.2),
                Some(on) if on[idx] => lp.set_bounds(r + idx, gen.1, gen.2),
                Some(_) => lp.set_bounds(r + idx, 0.0, 0.0),
            }
        }

        // Load-shift windows.
        for j in 0..b {
            let Some((lo, hi)) = self.shift_bounds[j] else { continue };
            let row: Vec<(usize, f64)> = (0..r)
                .map(|c| (c, structure.shift_map[(j, c)]))
                .filter(|&(_, v)| v != 0.0)
                .collect();
            if row.is_empty() {
                continue;
            }
            lp.add_row(Rel::Le, hi, &row);
            lp.add_row(Rel::Ge, lo, &row);
        }

        // Dispatch balances the (attacked) total, whose sum equals the real one.
        let total: f64 = self.loads.iter().sum();
        let balance: Vec<(usize, f64)> = (0..g).map(|idx| (r + idx, 1.0)).collect();
        lp.add_row(Rel::Eq, total, &balance);

        // Cost ceiling.
        let mut budget = self.goal.cost_budget - alpha_slack;
        if let Some(on) = on {
            let alpha_sum: f64 =
                (0..g).filter(|&i| on[i]).map(|i| self.gens[i].3).sum();
            budget = self.goal.cost_budget - alpha_sum;
        }
        let cost_row: Vec<(usize, f64)> =
            self.gens.iter().enumerate().map(|(idx, gen)| (r + idx, gen.4)).collect();
        lp.add_row(Rel::Le, budget, &cost_row);

        // True base-case flows stay inside capacity.
        for i in 0..l {
            let row: Vec<(usize, f64)> = self.mg[i]
                .iter()
                .enumerate()
                .map(|(idx, &c)| (r + idx, c))
                .filter(|&(_, v)| v != 0.0)
                .collect();
            let cap = case.lines[i].capacity;
            lp.add_row(Rel::Le, cap - self.base_true[i], &row);
            lp.add_row(Rel::Ge, -cap - self.base_true[i], &row);
        }

        // Corrupted base-case flows as the operator will compute them.
        for i in 0..l {
            let row = self.corrupted_flow_row(structure, i, None);
            let cap = case.lines[i].capacity;
            lp.add_row(Rel::Le, cap - self.base_true[i], &row);
            lp.add_row(Rel::Ge, -cap - self.base_true[i], &row);
        }

        // Targeted overloads, with the strict inequality tightened. The
        // objective maximizes their combined depth: deep overloads survive
        // the operator's re-optimization most often.
        let mut depth = vec![0.0; g];
        for pair in chosen {
            let coeffs = self.pair_gen_coeffs(pair.line, pair.outage);
            let row: Vec<(usize, f64)> = coeffs
                .iter()
                .enumerate()
                .map(|(idx, &c)| (r + idx, pair.sign * c))
                .filter(|&(_, v)| v != 0.0)
                .collect();
            let rhs = self.required_flow(pair.line)
                - pair.sign * self.pair_constant(pair.line, pair.outage);
            lp.add_row(Rel::Ge, rhs, &row);
            for (idx, &c) in coeffs.iter().enumerate() {
                depth[idx] -= pair.sign * c;
            }
        }
        for (idx, &c) in depth.iter().enumerate() {
            if c != 0.0 {
                lp.set_objective(r + idx, c);
            }
        }

        // Corrupted post-contingency limits are generated as violated. Each
        // round either terminates or adds at least one of the 2*l*(l-1)
        // possible cuts, so the loop bound cannot bind.
        let mut cut_set: BTreeSet<(usize, usize, i8)> = BTreeSet::new();
        for _round in 0..(2 * l * l + 2) {
            let outcome = match solve_lp(&lp) {
                Ok(LpOutcome::Optimal { x, .. }) => x,
                Ok(_) => return InnerOutcome::Infeasible,
                Err(_) => return InnerOutcome::Infeasible,
            };
            let (w, xg) = outcome.split_at(r);
            let corr = self.corrupted_flows(structure, w, xg);
            let mut added = false;
            for k in self.lodf.non_islanding() {
                for i in 0..l {
                    if i == k {
                        continue;
                    }
                    let flow = corr[i] + self.lodf.factors[(i, k)] * corr[k];
                    let cap = case.lines[i].capacity;
                    for (sig, val) in [(1i8, flow), (-1i8, -flow)] {
                        if val > cap + ROW_TOL && cut_set.insert((i, k, sig)) {
                            let row = self.corrupted_flow_row(structure, i, Some((k, sig)));
                            let konst = self.pair_constant(i, k) * f64::from(sig);
                            lp.add_row(Rel::Le, cap - konst, &row);
                            added = true;
                        }
                    }
                }
            }
            if !added {
                return InnerOutcome::Feasible(outcome);
            }
        }
        InnerOutcome::Infeasible
    }

    /// LP row of the corrupted flow on line i (optionally under outage k,
    /// scaled by `sig`): generator and w coefficients.
    fn corrupted_flow_row(
        &self,
        structure: &StealthStructure,
        i: usize,
        outage: Option<(usize, i8)>,
    ) -> Vec<(usize, f64)> {
        let r = structure.n_full.cols();
        let mut row: Vec<(usize, f64)> = Vec::new();
        match outage {
            None => {
                for c in 0..r {
                    let v = structure.corr_map[(i, c)];
                    if v != 0.0 {
                        row.push((c, v));
                    }
                }
                for (idx, &cgen) in self.mg[i].iter().enumerate() {
                    if cgen != 0.0 {
                        row.push((r + idx, cgen));
                    }
                }
            }
            Some((k, sig)) => {
                let s = f64::from(sig);
                let f = self.lodf.factors[(i, k)];
                for c in 0..r {
                    let v = s * (structure.corr_map[(i, c)] + f * structure.corr_map[(k, c)]);
                    if v != 0.0 {
                        row.push((c, v));
                    }
                }
                for idx in 0..self.gens.len() {
                    let v = s * (self.mg[i][idx] + f * self.mg[k][idx]);
                    if v != 0.0 {
                        row.push((r + idx, v));
                    }
                }
            }
        }
        row
    }

    /// Corrupted base flows at a concrete (w, dispatch) point.
    fn corrupted_flows(&self, structure: &StealthStructure, w: &[f64], xg: &[f64]) -> Vec<f64> {
        let l = self.case.num_lines();
        let r = structure.n_full.cols();
        (0..l)
            .map(|i| {
                let mut v = self.base_true[i];
                for c in 0..r {
                    v += structure.corr_map[(i, c)] * w[c];
                }
                for (idx, &x) in xg.iter().enumerate() {
                    v += self.mg[i][idx] * x;
                }
                v
            })
            .collect()
    }

    /// Assemble the physical quantities of a candidate from the LP point.
    /// Returns None when the load-shift bounds are violated in exact
    /// arithmetic (LP row tolerance artifacts).
    fn build_candidate(
        &self,
        structure: &StealthStructure,
        solution: &[f64],
    ) -> Option<AttackVector> {
        let case = self.case;
        let b = case.num_buses();
        let l = case.num_lines();
        let r = structure.n_full.cols();
        let (w, _) = solution.split_at(r);

        let mut delta_theta = vec![0.0; b];
        for j in 0..b {
            for c in 0..r {
                delta_theta[j] += structure.n_full[(j, c)] * w[c];
            }
        }
        let mut delta_bus = vec![0.0; b];
        for j in 0..b {
            for c in 0..r {
                delta_bus[j] += structure.shift_map[(j, c)] * w[c];
            }
        }
        let delta_line: Vec<f64> = (0..l)
            .map(|i| {
                case.lines[i].admittance
                    * (delta_theta[case.lines[i].from0()] - delta_theta[case.lines[i].to0()])
            })
            .collect();

        // Exact-arithmetic re-check of the shift windows.
        for j in 0..b {
            match self.shift_bounds[j] {
                Some((lo, hi)) => {
                    if delta_bus[j] < lo - ROW_TOL || delta_bus[j] > hi + ROW_TOL {
                        return None;
                    }
                }
                None => {
                    if libm::fabs(delta_bus[j]) > ROW_TOL {
                        return None;
                    }
                }
            }
        }

        let mut altered = vec![false; case.num_measurements()];
        for i in 0..l {
            if libm::fabs(delta_line[i]) > DELTA_TOL {
                if case.measurements[i].taken {
                    altered[i] = true;
                }
                if case.measurements[l + i].taken {
                    altered[l + i] = true;
                }
            }
        }
        for j in 0..b {
            if libm::fabs(delta_bus[j]) > DELTA_TOL && case.measurements[2 * l + j].taken {
                altered[2 * l + j] = true;
            }
        }
        let corrupted: Vec<bool> =
            delta_theta.iter().map(|&v| libm::fabs(v) > DELTA_TOL).collect();
        let mut compromised = vec![false; b];
        for (m0, &is_altered) in altered.iter().enumerate() {
            if is_altered {
                compromised[case.meter_bus(m0)] = true;
            }
        }
        let attacked_load: Vec<f64> =
            (0..b).map(|j| self.loads[j] + delta_bus[j]).collect();

        Some(AttackVector {
            delta_theta,
            delta_line,
            delta_bus,
            altered,
            corrupted,
            compromised,
            attacked_load,
            corrupted_dispatch: vec![0.0; b],
            corrupted_cost: 0.0,
            overload_pairs: Vec::new(),
        })
    }

    /// Try to meet the measurement budget by pinning the smallest line
    /// shifts to zero and re-solving, shrinking the nullspace each round.
    fn sparsify(
        &self,
        structure: &StealthStructure,
        chosen: &[ScreenedPair],
        solution: &[f64],
    ) -> Option<AttackVector> {
        let case = self.case;
        let l = case.num_lines();
        let budget = case.attacker_limits.max_measurements;
        let mut structure = structure.clone();
        let mut current = solution.to_vec();
        for _ in 0..l {
            let candidate = self.build_candidate(&structure, &current)?;
            if candidate.altered_count() <= budget {
                return Some(candidate);
            }
            // Pin the line with the smallest nonzero flow shift.
            let target = candidate
                .delta_line
                .iter()
                .enumerate()
                .filter(|(_, v)| libm::fabs(**v) > DELTA_TOL)
                .min_by(|a, b| libm::fabs(*a.1).partial_cmp(&libm::fabs(*b.1)).unwrap())
                .map(|(i, _)| i)?;
            structure = self.pin_line(&structure, target)?;
            current = match self.solve_inner(&structure, chosen, true) {
                InnerOutcome::Feasible(point) => point,
                InnerOutcome::Infeasible => return None,
            };
        }
        None
    }

    /// Restrict a structure's nullspace so one line's flow shift is zero.
    fn pin_line(&self, structure: &StealthStructure, line: usize) -> Option<StealthStructure> {
        let case = self.case;
        let b = case.num_buses();
        let r = structure.n_full.cols();
        let mut row = vec![0.0; r];
        for c in 0..r {
            row[c] = structure.n_full[(case.lines[line].from0(), c)]
                - structure.n_full[(case.lines[line].to0(), c)];
        }
        let reduced = nullspace(&Matrix::from_rows(&[row]), NULLSPACE_TOL);
        if reduced.is_empty() {
            return None;
        }
        let rr = reduced.len();
        let mut n_full = Matrix::zeros(b, rr);
        for (c, coef) in reduced.iter().enumerate() {
            for bus in 0..b {
                let mut v = 0.0;
                for (old, &weight) in coef.iter().enumerate() {
                    v += structure.n_full[(bus, old)] * weight;
                }
                n_full[(bus, c)] = v;
            }
        }
        let lap_n = self.lap.matmul(&n_full);
        let mut shift_map = lap_n.clone();
        for i in 0..b {
            for c in 0..rr {
                shift_map[(i, c)] = -lap_n[(i, c)];
            }
        }
        let corr_map = self.isf.matmul(&lap_n);
        Some(StealthStructure { n_full, shift_map, corr_map })
    }

    /// The decisive gate: re-optimize dispatch against the attacked loads
    /// exactly as the operator would, then count genuine overload pairs
    /// under real loads. Fills the vector's dispatch/cost/pair fields.
    fn replay(&self, vector: &mut AttackVector) -> bool {
        let case = self.case;
        // Clamp LP-boundary values into the rated window for the solver and
        // scrub float dust off buses that carry no load at all.
        let mut seen_loads = vector.attacked_load.clone();
        for (j, v) in seen_loads.iter_mut().enumerate() {
            match case.load_at(j) {
                Some(spec) => *v = libm::fmin(libm::fmax(*v, spec.min), spec.max),
                None => *v = 0.0,
            }
        }
        let Ok(ems) = solve_scopf(case, &seen_loads) else {
            return false;
        };
        if ems.cost > self.goal.cost_budget + 1e-6 {
            return false;
        }
        let Ok(true_state) = solve_powerflow(case, &ems.dispatch, &self.loads) else {
            return false;
        };
        let mut pairs = Vec::new();
        for k in self.lodf.non_islanding() {
            let Ok(post) = post_contingency_flows(&true_state, &self.lodf, k) else {
                continue;
            };
            for (i, flow) in post {
                let cap = case.lines[i].capacity;
                if libm::fabs(flow) > (1.0 + self.goal.overload_margin) * cap {
                    let over = 100.0 * (libm::fabs(flow) - cap) / cap;
                    pairs.push((i, k, over));
                }
            }
        }
        if pairs.len() < self.goal.min_overload_pairs {
            return false;
        }
        pairs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        vector.corrupted_dispatch = ems.dispatch;
        vector.corrupted_cost = ems.cost;
        vector.overload_pairs = pairs;
        true
    }
}

/// Nullspace parameterization of the invisible state shifts for a subset.
#[derive(Debug, Clone)]
struct StealthStructure {
    /// b x r basis of angle shifts (slack row zero).
    n_full: Matrix,
    /// b x r map from w to per-bus load shifts.
    shift_map: Matrix,
    /// l x r map from w to the corrupted-flow correction.
    corr_map: Matrix,
}

enum InnerOutcome {
    /// The concatenated (w, dispatch) point found by the LP.
    Feasible(Vec<f64>),
    Infeasible,
}

/// Mutable state threaded through one exploration.
struct Traversal {
    mode: RunMode,
    vectors: Vec<AttackVector>,
    seen: BTreeSet<(Vec<usize>, Vec<(usize, usize)>)>,
    viable_subsets: usize,
    subset_had_leaf: bool,
}

/// Where control goes after a leaf.
enum Flow {
    Continue,
    StopSubset,
    StopAll,
}

/// The baseline solution must belong to this case.
fn check_pre(case: &GridCase, pre: &ScopfSolution) -> Result<(), SynthesisError> {
    if pre.dispatch.len() != case.num_buses() {
        return Err(SynthesisError::InconsistentLimits {
            message: String::from("the baseline dispatch does not match the case's bus count"),
        });
    }
    Ok(())
}

fn count_subsets(n: usize, k: usize) -> usize {
    let mut total = 0usize;
    let mut level = 1usize; // C(n, 0)
    for size in 1..=k.min(n) {
        level = level * (n - size + 1) / size;
        total += level;
    }
    total
}
