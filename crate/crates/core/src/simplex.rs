//! Bounded-variable two-phase simplex.
//!
//! Solves `min c'x` subject to sparse rows `a'x {<=,=,>=} b` and box bounds
//! `lo <= x <= hi` (either side may be infinite). Everything downstream —
//! SCOPF, the corrupted-dispatch feasibility checks, and the attack-vector
//! inner problems — runs through this one kernel, so it favors transparent,
//! deterministic pivoting over speed: Dantzig's rule with a permanent switch
//! to Bland's rule once the objective stalls, and fixed tie-breaking by
//! lowest index everywhere. Identical inputs always take the identical pivot
//! path.
//!
//! Internally variables are rewritten so every column has range `[0, U]`
//! (`U` possibly infinite): finite lower bounds are shifted out, upper-only
//! variables are reflected, and genuinely free variables are split into
//! positive/negative parts. One artificial column per row provides the
//! phase-1 basis.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::abs;

/// Reduced-cost threshold: candidates closer to zero than this do not enter.
const DUAL_TOL: f64 = 1e-9;
/// Pivot magnitude below which a tableau entry is treated as zero.
const PIVOT_TOL: f64 = 1e-9;
/// Residual infeasibility accepted at the end of phase 1.
const FEAS_TOL: f64 = 1e-7;
/// Objective stagnation iterations before switching to Bland's rule.
const STALL_LIMIT: usize = 40;
/// Hard cap on pivots; tiny problems here should never get close.
const MAX_ITER: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

/// One sparse constraint row.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rel: Rel,
    pub rhs: f64,
}

/// An LP in natural (bounded-variable) form.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpError {
    /// A variable's lower bound exceeds its upper bound.
    BadBounds { var: usize },
    /// A coefficient or bound is NaN.
    NotFinite,
    /// Pivot count exceeded MAX_ITER (numerical trouble, not a model verdict).
    IterationLimit,
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::BadBounds { var } => write!(f, "variable {var} has lower bound above upper bound"),
            LpError::NotFinite => write!(f, "NaN coefficient in linear program"),
            LpError::IterationLimit => write!(f, "simplex iteration limit exceeded"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LpError {}

impl LinearProgram {
    /// New LP with `num_vars` variables, zero objective, free bounds.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.bounds[var] = (lo, hi);
    }

    pub fn add_row(&mut self, rel: Rel, rhs: f64, coeffs: &[(usize, f64)]) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.num_vars));
        self.rows.push(Row { coeffs: coeffs.to_vec(), rel, rhs });
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }
}

/// How an original variable maps onto internal `[0, U]` columns.
#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// x = lo + y
    Shifted { col: usize, lo: f64 },
    /// x = hi - y  (lower bound infinite)
    Reflected { col: usize, hi: f64 },
    /// x = y_pos - y_neg (both bounds infinite)
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    AtLower,
    AtUpper,
    Basic,
}

struct Tableau {
    /// rows x cols dense body, kept equal to B^-1 * A.
    t: Vec<Vec<f64>>,
    /// Current basic-variable values (one per row).
    xb: Vec<f64>,
    /// Column index of the basic variable in each row.
    basis: Vec<usize>,
    state: Vec<VarState>,
    upper: Vec<f64>,
    cols: usize,
}

impl Tableau {
    fn value_of(&self, col: usize) -> f64 {
        match self.state[col] {
            VarState::AtLower => 0.0,
            VarState::AtUpper => self.upper[col],
            VarState::Basic => {
                let r = self.basis.iter().position(|&b| b == col).expect("basic column");
                self.xb[r]
            }
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.t.len();
        // y = c_B, d_j = c_j - y . T[:,j]
        let cb: Vec<f64> = (0..m).map(|i| cost[self.basis[i]]).collect();
        let mut d = cost.to_vec();
        for i in 0..m {
            let ci = cb[i];
            if ci == 0.0 {
                continue;
            }
            for (dj, tij) in d.iter_mut().zip(&self.t[i]) {
                *dj -= ci * tij;
            }
        }
        d
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        (0..self.cols).map(|j| cost[j] * self.value_of(j)).sum()
    }

    /// One phase of simplex iterations under `cost`. Returns Ok(true) if an
    /// optimum was reached, Ok(false) on unboundedness.
    fn optimize(&mut self, cost: &[f64]) -> Result<bool, LpError> {
        let m = self.t.len();
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = self.objective_value(cost);
        for _iter in 0..MAX_ITER {
            let d = self.reduced_costs(cost);
            // Entering column: improving nonbasic variable.
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.cols {
                if self.upper[j] <= 0.0 {
                    continue; // fixed column can never move
                }
                let improving = match self.state[j] {
                    VarState::AtLower => d[j] < -DUAL_TOL,
                    VarState::AtUpper => d[j] > DUAL_TOL,
                    VarState::Basic => false,
                };
                if !improving {
                    continue;
                }
                if bland {
                    entering = Some((j, d[j]));
                    break;
                }
                match entering {
                    Some((_, best)) if abs(d[j]) <= abs(best) => {}
                    _ => entering = Some((j, d[j])),
                }
            }
            let Some((q, _)) = entering else {
                return Ok(true); // optimal
            };
            // Direction: increasing from lower bound, decreasing from upper.
            let sigma = if self.state[q] == VarState::AtLower { 1.0 } else { -1.0 };

            // Ratio test: how far can the entering variable move?
            let mut t_best = self.upper[q]; // bound-to-bound flip distance
            let mut leave: Option<usize> = None; // row index
            for i in 0..m {
                let w = sigma * self.t[i][q];
                let (limit, _hits_upper) = if w > PIVOT_TOL {
                    (self.xb[i] / w, false)
                } else if w < -PIVOT_TOL {
                    let ub = self.upper[self.basis[i]];
                    if ub.is_infinite() {
                        continue;
                    }
                    ((ub - self.xb[i]) / -w, true)
                } else {
                    continue;
                };
                let limit = if limit < 0.0 { 0.0 } else { limit };
                let replace = match leave {
                    None => limit < t_best - 1e-12,
                    Some(r) => {
                        limit < t_best - 1e-12
                            || (limit < t_best + 1e-12 && {
                                if bland {
                                    // Bland: lowest basic column index leaves.
                                    self.basis[i] < self.basis[r]
                                } else {
                                    // Stability: biggest pivot among ties.
                                    abs(self.t[i][q]) > abs(self.t[r][q])
                                }
                            })
                    }
                };
                if replace {
                    t_best = limit;
                    leave = Some(i);
                }
            }

            if t_best.is_infinite() {
                return Ok(false); // unbounded ray
            }

            // Apply the move to the basic values.
            for i in 0..m {
                self.xb[i] -= sigma * t_best * self.t[i][q];
            }

            match leave {
                None => {
                    // Bound-to-bound flip, basis unchanged.
                    self.state[q] = if sigma > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                }
                Some(r) => {
                    let old = self.basis[r];
                    // Where did the leaving variable land?
                    let w = sigma * self.t[r][q];
                    self.state[old] = if w > 0.0 { VarState::AtLower } else { VarState::AtUpper };
                    // Entering variable's new value.
                    let enter_val = if sigma > 0.0 { t_best } else { self.upper[q] - t_best };
                    self.basis[r] = q;
                    self.state[q] = VarState::Basic;
                    self.pivot(r, q);
                    self.xb[r] = enter_val;
                }
            }

            // Stall detection drives the Bland switch.
            let obj = self.objective_value(cost);
            if obj < last_obj - 1e-12 {
                stall = 0;
            } else {
                stall += 1;
                if stall >= STALL_LIMIT {
                    bland = true;
                }
            }
            last_obj = obj;
        }
        Err(LpError::IterationLimit)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let piv = self.t[r][q];
        debug_assert!(abs(piv) > PIVOT_TOL * 1e-3, "tiny pivot {piv}");
        let inv = 1.0 / piv;
        for v in self.t[r].iter_mut() {
            *v *= inv;
        }
        let prow = self.t[r].clone();
        for i in 0..self.t.len() {
            if i == r {
                continue;
            }
            let f = self.t[i][q];
            if f == 0.0 {
                continue;
            }
            for (v, p) in self.t[i].iter_mut().zip(&prow) {
                *v -= f * p;
            }
            // Kill residual round-off in the pivot column.
            self.t[i][q] = 0.0;
        }
        self.t[r][q] = 1.0;
    }
}

/// Solve the LP. Deterministic; `Infeasible`/`Unbounded` are verdicts, not errors.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    // -- validate -----------------------------------------------------------
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        if lo.is_nan() || hi.is_nan() {
            return Err(LpError::NotFinite);
        }
        if lo > hi {
            return Err(LpError::BadBounds { var: j });
        }
    }
    if lp.objective.iter().any(|c| c.is_nan())
        || lp.rows.iter().any(|r| r.rhs.is_nan() || r.coeffs.iter().any(|(_, c)| c.is_nan()))
    {
        return Err(LpError::NotFinite);
    }

    // -- map variables onto [0, U] columns ---------------------------------
    let mut maps = Vec::with_capacity(lp.num_vars);
    let mut upper: Vec<f64> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        if lo.is_finite() {
            maps.push(ColMap::Shifted { col: upper.len(), lo });
            upper.push(hi - lo);
        } else if hi.is_finite() {
            maps.push(ColMap::Reflected { col: upper.len(), hi });
            upper.push(f64::INFINITY);
        } else {
            maps.push(ColMap::Split { pos: upper.len(), neg: upper.len() + 1 });
            upper.push(f64::INFINITY);
            upper.push(f64::INFINITY);
        }
    }
    let n_struct = upper.len();

    // -- assemble rows in column space, slacks, artificials ------------------
    let m = lp.rows.len();
    let slack_base = n_struct;
    let n_slack = lp.rows.iter().filter(|r| r.rel != Rel::Eq).count();
    let art_base = slack_base + n_slack;
    let cols = art_base + m;
    upper.extend(core::iter::repeat(f64::INFINITY).take(n_slack + m));

    let mut body = vec![vec![0.0; cols]; m];
    let mut rhs = vec![0.0; m];
    let mut next_slack = slack_base;
    for (i, row) in lp.rows.iter().enumerate() {
        let mut b = row.rhs;
        for &(var, coef) in &row.coeffs {
            match maps[var] {
                ColMap::Shifted { col, lo } => {
                    body[i][col] += coef;
                    b -= coef * lo;
                }
                ColMap::Reflected { col, hi } => {
                    body[i][col] -= coef;
                    b -= coef * hi;
                }
                ColMap::Split { pos, neg } => {
                    body[i][pos] += coef;
                    body[i][neg] -= coef;
                }
            }
        }
        match row.rel {
            Rel::Le => {
                body[i][next_slack] = 1.0;
                next_slack += 1;
            }
            Rel::Ge => {
                body[i][next_slack] = -1.0;
                next_slack += 1;
            }
            Rel::Eq => {}
        }
        rhs[i] = b;
    }

    // Artificial columns: sign chosen so each starts basic and nonnegative.
    let mut basis = Vec::with_capacity(m);
    let mut xb = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
        if sign < 0.0 {
            for v in body[i].iter_mut() {
                *v = -*v;
            }
            rhs[i] = -rhs[i];
        }
        body[i][art_base + i] = 1.0;
        basis.push(art_base + i);
        xb.push(rhs[i]);
    }

    let mut state = vec![VarState::AtLower; cols];
    for &b in &basis {
        state[b] = VarState::Basic;
    }
    let mut tab = Tableau { t: body, xb, basis, state, upper, cols };

    // -- phase 1 -------------------------------------------------------------
    let mut cost1 = vec![0.0; cols];
    for c in cost1.iter_mut().skip(art_base) {
        *c = 1.0;
    }
    if !tab.optimize(&cost1)? {
        // Sum of artificials is bounded below by zero; an unbounded ray here
        // means the tableau lost feasibility numerically.
        return Err(LpError::IterationLimit);
    }
    let infeas = tab.objective_value(&cost1);
    if infeas > FEAS_TOL {
        return Ok(LpOutcome::Infeasible);
    }
    // Pin artificials at zero for phase 2.
    for j in art_base..cols {
        tab.upper[j] = 0.0;
        if tab.state[j] == VarState::AtUpper {
            tab.state[j] = VarState::AtLower;
        }
    }
    for i in 0..m {
        if tab.basis[i] >= art_base && tab.xb[i] < 0.0 {
            tab.xb[i] = 0.0; // clamp round-off on a basic artificial
        }
    }

    // -- phase 2 -------------------------------------------------------------
    let mut cost2 = vec![0.0; cols];
    for (var, &c) in lp.objective.iter().enumerate() {
        match maps[var] {
            ColMap::Shifted { col, .. } => cost2[col] += c,
            ColMap::Reflected { col, .. } => cost2[col] -= c,
            ColMap::Split { pos, neg } => {
                cost2[pos] += c;
                cost2[neg] -= c;
            }
        }
    }
    if !tab.optimize(&cost2)? {
        return Ok(LpOutcome::Unbounded);
    }

    // -- recover the original variables --------------------------------------
    let mut x = vec![0.0; lp.num_vars];
    for (var, map) in maps.iter().enumerate() {
        x[var] = match *map {
            ColMap::Shifted { col, lo } => lo + tab.value_of(col),
            ColMap::Reflected { col, hi } => hi - tab.value_of(col),
            ColMap::Split { pos, neg } => tab.value_of(pos) - tab.value_of(neg),
        };
    }
    let objective = crate::linalg::dot(&lp.objective, &x);
    Ok(LpOutcome::Optimal { x, objective })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &LinearProgram) -> (Vec<f64>, f64) {
        match solve_lp(lp).unwrap() {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn textbook_two_variable_lp() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x,y >= 0  -> (1.6, 1.2), 2.8
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -1.0);
        lp.set_objective(1, -1.0);
        lp.set_bounds(0, 0.0, f64::INFINITY);
        lp.set_bounds(1, 0.0, f64::INFINITY);
        lp.add_row(Rel::Le, 4.0, &[(0, 1.0), (1, 2.0)]);
        lp.add_row(Rel::Le, 6.0, &[(0, 3.0), (1, 1.0)]);
        let (x, obj) = optimal(&lp);
        assert!(abs(obj + 2.8) < 1e-9);
        assert!(abs(x[0] - 1.6) < 1e-9 && abs(x[1] - 1.2) < 1e-9);
    }

    #[test]
    fn equality_with_free_variable() {
        // min |structure|: x free, y in [0,1]; x + y = 3; minimize x -> x = 2 at y = 1.
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.set_bounds(1, 0.0, 1.0);
        lp.add_row(Rel::Eq, 3.0, &[(0, 1.0), (1, 1.0)]);
        let (x, obj) = optimal(&lp);
        assert!(abs(obj - 2.0) < 1e-9);
        assert!(abs(x[0] - 2.0) < 1e-9 && abs(x[1] - 1.0) < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.set_bounds(0, 0.0, 1.0);
        lp.add_row(Rel::Ge, 2.0, &[(0, 1.0)]);
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.set_objective(0, -1.0);
        lp.set_bounds(0, 0.0, f64::INFINITY);
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn upper_bound_flips_are_taken() {
        // max x + 10 y, x in [0,2], y in [0,3], x + y <= 4 -> y=3, x=1.
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -1.0);
        lp.set_objective(1, -10.0);
        lp.set_bounds(0, 0.0, 2.0);
        lp.set_bounds(1, 0.0, 3.0);
        lp.add_row(Rel::Le, 4.0, &[(0, 1.0), (1, 1.0)]);
        let (x, obj) = optimal(&lp);
        assert!(abs(obj + 31.0) < 1e-9, "obj {obj}");
        assert!(abs(x[0] - 1.0) < 1e-9 && abs(x[1] - 3.0) < 1e-9);
    }

    #[test]
    fn negative_lower_bounds() {
        // min x + y with x in [-3,-1], y in [-2, 5], x + y >= -4 -> (-2,-2) or (-3,-1): obj -4.
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.set_objective(1, 1.0);
        lp.set_bounds(0, -3.0, -1.0);
        lp.set_bounds(1, -2.0, 5.0);
        lp.add_row(Rel::Ge, -4.0, &[(0, 1.0), (1, 1.0)]);
        let (_, obj) = optimal(&lp);
        assert!(abs(obj + 4.0) < 1e-9);
    }

    #[test]
    fn fixed_variable_via_equal_bounds() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(1, 1.0);
        lp.set_bounds(0, 2.0, 2.0);
        lp.set_bounds(1, 0.0, 10.0);
        lp.add_row(Rel::Ge, 5.0, &[(0, 1.0), (1, 1.0)]);
        let (x, obj) = optimal(&lp);
        assert!(abs(x[0] - 2.0) < 1e-12);
        assert!(abs(obj - 3.0) < 1e-9);
    }

    /// Brute-force oracle: enumerate candidate vertices as intersections of n
    /// active constraints (rows at equality and bounds), keep feasible ones,
    /// and take the best objective. Sound for fully boxed variables.
    fn brute_force(lp: &LinearProgram) -> Option<f64> {
        use crate::linalg::{solve, Matrix};
        let n = lp.num_vars();
        #[derive(Clone)]
        struct Active {
            coeffs: Vec<f64>,
            rhs: f64,
        }
        let mut cands: Vec<Active> = Vec::new();
        for row in &lp.rows {
            let mut c = vec![0.0; n];
            for &(j, v) in &row.coeffs {
                c[j] += v;
            }
            cands.push(Active { coeffs: c, rhs: row.rhs });
        }
        for j in 0..n {
            let mut lo_c = vec![0.0; n];
            lo_c[j] = 1.0;
            cands.push(Active { coeffs: lo_c.clone(), rhs: lp.bounds[j].0 });
            cands.push(Active { coeffs: lo_c, rhs: lp.bounds[j].1 });
        }
        let feasible = |x: &[f64]| -> bool {
            for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
                if x[j] < lo - 1e-7 || x[j] > hi + 1e-7 {
                    return false;
                }
            }
            for row in &lp.rows {
                let lhs: f64 = row.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
                let ok = match row.rel {
                    Rel::Le => lhs <= row.rhs + 1e-7,
                    Rel::Ge => lhs >= row.rhs - 1e-7,
                    Rel::Eq => abs(lhs - row.rhs) <= 1e-7,
                };
                if !ok {
                    return false;
                }
            }
            true
        };
        let mut best: Option<f64> = None;
        let k = cands.len();
        let mut idx = vec![0usize; n];
        // Iterate over all n-subsets of candidate active constraints.
        fn subsets(k: usize, n: usize, start: usize, idx: &mut Vec<usize>, depth: usize, f: &mut dyn FnMut(&[usize])) {
            if depth == n {
                f(idx);
                return;
            }
            for i in start..k {
                idx[depth] = i;
                subsets(k, n, i + 1, idx, depth + 1, f);
            }
        }
        let mut visit = |sel: &[usize]| {
            let rows: Vec<Vec<f64>> = sel.iter().map(|&i| cands[i].coeffs.clone()).collect();
            let rhs: Vec<f64> = sel.iter().map(|&i| cands[i].rhs).collect();
            let a = Matrix::from_rows(&rows);
            if let Ok(x) = solve(&a, &rhs) {
                if feasible(&x) {
                    let obj = crate::linalg::dot(&lp.objective, &x);
                    best = Some(match best {
                        None => obj,
                        Some(b) if obj < b => obj,
                        Some(b) => b,
                    });
                }
            }
        };
        subsets(k, n, 0, &mut idx, 0, &mut visit);
        best
    }

    #[test]
    fn randomized_cross_check_against_vertex_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut optimal_seen = 0;
        let mut infeasible_seen = 0;
        for case in 0..300 {
            let n = rng.gen_range(1..=3);
            let m = rng.gen_range(0..=4);
            let mut lp = LinearProgram::new(n);
            for j in 0..n {
                let lo = rng.gen_range(-5..=0) as f64;
                let hi = rng.gen_range(0..=5) as f64;
                lp.set_bounds(j, lo, hi);
                lp.set_objective(j, rng.gen_range(-3..=3) as f64);
            }
            for _ in 0..m {
                let coeffs: Vec<(usize, f64)> =
                    (0..n).map(|j| (j, rng.gen_range(-3..=3) as f64)).collect();
                let rel = match rng.gen_range(0..3) {
                    0 => Rel::Le,
                    1 => Rel::Ge,
                    _ => Rel::Eq,
                };
                lp.add_row(rel, rng.gen_range(-6..=6) as f64, &coeffs);
            }
            let got = solve_lp(&lp).unwrap();
            let want = brute_force(&lp);
            match (got, want) {
                (LpOutcome::Optimal { objective, .. }, Some(w)) => {
                    assert!(
                        abs(objective - w) < 1e-6,
                        "case {case}: simplex {objective} vs brute force {w}"
                    );
                    optimal_seen += 1;
                }
                (LpOutcome::Infeasible, None) => {
                    infeasible_seen += 1;
                }
                (g, w) => panic!("case {case}: verdict mismatch {g:?} vs {w:?}"),
            }
        }
        // Make sure the generator exercises both verdicts.
        assert!(optimal_seen > 50 && infeasible_seen > 10, "{optimal_seen}/{infeasible_seen}");
    }

    #[test]
    fn degenerate_problems_terminate() {
        // Many redundant rows through the same vertex; exercises stall/Bland path.
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, -1.0);
        lp.set_objective(1, -1.0);
        lp.set_bounds(0, 0.0, f64::INFINITY);
        lp.set_bounds(1, 0.0, f64::INFINITY);
        for k in 1..=6 {
            lp.add_row(Rel::Le, k as f64, &[(0, k as f64), (1, k as f64)]);
        }
        let (_, obj) = optimal(&lp);
        assert!(abs(obj + 1.0) < 1e-9);
    }
}
