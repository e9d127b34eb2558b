//! Batch experiments: capability sweeps over the attacker-limit axes,
//! measurement-securing policies, compromised-bus statistics and
//! line-overload heatmaps, emitted as deterministic CSV.
//!
//! The attack-space size of a cell is `viable_subsets` from
//! [`measure_attack_space`]: the number of compromised-bus subsets admitting
//! at least one exactly feasible overload plan. That count is monotone along
//! every sweep axis, which is what makes the curves comparable.
//!
//! Bus frequencies and heatmaps are accumulated from the *unsecured*
//! baseline cells (securing policies answer "how much smaller does the space
//! get", and grading them against the baseline's own statistics is the whole
//! point of the analytical policy).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Result};
use gridthreat_core::attack_synthesis::{measure_attack_space, AttackVector, SynthesisGoal};
use gridthreat_core::grid_model::{validate_case, GridCase};
use gridthreat_core::scopf::ScopfSolution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Which measurements the operator hardens before the attacker moves.
#[derive(Debug, Clone, PartialEq)]
pub enum SecuringPolicy {
    /// Nothing secured; the baseline.
    None,
    /// `floor(percent/100 * m)` measurements drawn uniformly without
    /// replacement from all m, freshly per repetition from a recorded seed.
    RandomPercent { percent: f64 },
    /// Every measurement metered at the `buses` most frequently compromised
    /// buses of the unsecured baseline.
    AnalyticalTop { buses: usize },
}

impl SecuringPolicy {
    /// Stable label used in CSV rows and file names.
    pub fn label(&self) -> String {
        match self {
            SecuringPolicy::None => "none".to_string(),
            SecuringPolicy::RandomPercent { percent } => format!("random_p={percent}"),
            SecuringPolicy::AnalyticalTop { buses } => format!("top_k={buses}"),
        }
    }

    fn randomized(&self) -> bool {
        matches!(self, SecuringPolicy::RandomPercent { .. })
    }
}

/// Parse a `--policy` argument: `none`, `random:<percent>`, `top:<buses>`.
pub fn parse_policy(text: &str) -> Result<SecuringPolicy> {
    if text == "none" {
        return Ok(SecuringPolicy::None);
    }
    if let Some(pct) = text.strip_prefix("random:") {
        let percent: f64 = pct.parse().map_err(|_| {
            anyhow::anyhow!("bad policy {text:?}: expected random:<percent>")
        })?;
        if !(0.0..=100.0).contains(&percent) {
            bail!("bad policy {text:?}: percent must lie in [0, 100]");
        }
        return Ok(SecuringPolicy::RandomPercent { percent });
    }
    if let Some(k) = text.strip_prefix("top:") {
        let buses: usize = k
            .parse()
            .map_err(|_| anyhow::anyhow!("bad policy {text:?}: expected top:<buses>"))?;
        return Ok(SecuringPolicy::AnalyticalTop { buses });
    }
    bail!("unknown policy {text:?}: expected none, random:<percent> or top:<buses>")
}

/// The experiment grid. Axes are cartesian-producted; percent axes use the
/// same units as case files (20 means 20%).
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub delta_b_pct: Vec<f64>,
    pub delta_l_pct: Vec<f64>,
    pub line_fraction_pct: Vec<f64>,
    pub max_buses: Vec<usize>,
    pub policies: Vec<SecuringPolicy>,
    /// Repetitions for randomized policies (deterministic ones run once).
    pub repetitions: usize,
    /// Seed of repetition r is `base_seed + r`.
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [
            ("delta-b", &self.delta_b_pct),
            ("delta-l", &self.delta_l_pct),
            ("line-fraction", &self.line_fraction_pct),
        ] {
            if axis.is_empty() {
                bail!("sweep axis {name} is empty");
            }
            if let Some(v) = axis.iter().find(|v| !(0.0..=100.0).contains(*v)) {
                bail!("sweep axis {name}: {v} outside [0, 100] percent");
            }
        }
        if self.max_buses.is_empty() {
            bail!("sweep axis max-buses is empty");
        }
        if self.max_buses.iter().any(|&k| k == 0) {
            bail!("sweep axis max-buses: 0 admits no attacker at all");
        }
        if self.policies.is_empty() {
            bail!("no securing policies given");
        }
        if self.repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        Ok(())
    }
}

/// One grid coordinate (percent units as given in the spec).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinate {
    pub delta_b_pct: f64,
    pub delta_l_pct: f64,
    pub line_fraction_pct: f64,
    pub max_buses: usize,
}

/// What happened in one cell.
#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Done { viable_subsets: usize, vectors: usize, combos: usize },
    Failed { error: String },
}

/// One CSV row of `attack_space.csv`.
#[derive(Debug, Clone)]
pub struct CellRecord {
    pub coordinate: Coordinate,
    pub policy: String,
    pub secured: usize,
    pub seed: Option<u64>,
    pub rep: usize,
    pub outcome: CellOutcome,
}

/// Everything a sweep produces.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<CellRecord>,
    /// Per-bus compromise count over the baseline vectors, indexed 0-based.
    pub bus_frequency: Vec<usize>,
    /// Buses ranked by that count, 1-based, zero-count buses omitted.
    pub ranking: Vec<usize>,
    /// Per max-buses value: counts[tripped line][overloaded line] over the
    /// baseline vectors' confirmed pairs.
    pub heatmaps: BTreeMap<usize, Vec<Vec<u64>>>,
}

/// Compromise counts per bus (0-based) over a pile of vectors.
pub fn compromise_frequency(vectors: &[AttackVector], num_buses: usize) -> Vec<usize> {
    let mut freq = vec![0usize; num_buses];
    for v in vectors {
        for (j, &hit) in v.compromised.iter().enumerate() {
            if hit {
                freq[j] += 1;
            }
        }
    }
    freq
}

/// 1-based bus ids sorted by descending compromise count, ties by bus id;
/// buses never compromised are omitted.
pub fn rank_buses_by_frequency(vectors: &[AttackVector]) -> Vec<usize> {
    let num_buses = match vectors.first() {
        Some(v) => v.compromised.len(),
        None => return Vec::new(),
    };
    let freq = compromise_frequency(vectors, num_buses);
    let mut order: Vec<usize> = (0..num_buses).filter(|&j| freq[j] > 0).collect();
    order.sort_by(|&a, &b| freq[b].cmp(&freq[a]).then(a.cmp(&b)));
    order.into_iter().map(|j| j + 1).collect()
}

fn select_secured(
    case: &GridCase,
    policy: &SecuringPolicy,
    ranking: &[usize],
    seed: Option<u64>,
) -> Vec<usize> {
    let m = case.num_measurements();
    match policy {
        SecuringPolicy::None => Vec::new(),
        SecuringPolicy::RandomPercent { percent } => {
            let count = ((percent / 100.0) * m as f64).floor() as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.expect("randomized policy needs a seed"));
            let mut picked = rand::seq::index::sample(&mut rng, m, count.min(m)).into_vec();
            picked.sort_unstable();
            picked
        }
        SecuringPolicy::AnalyticalTop { buses } => {
            let top: Vec<usize> = ranking.iter().take(*buses).map(|&id| id - 1).collect();
            (0..m).filter(|&m0| top.contains(&case.meter_bus(m0))).collect()
        }
    }
}

fn cell_case(base: &GridCase, coordinate: &Coordinate, secured: &[usize]) -> Result<GridCase> {
    let mut case = base.clone();
    case.attacker_limits.delta_b = coordinate.delta_b_pct / 100.0;
    case.attacker_limits.delta_l = coordinate.delta_l_pct / 100.0;
    case.attacker_limits.target_line_fraction = coordinate.line_fraction_pct / 100.0;
    case.attacker_limits.max_buses = coordinate.max_buses;
    for &m0 in secured {
        case.measurements[m0].secured = true;
    }
    validate_case(&case)?;
    Ok(case)
}

fn run_cell(pre: &ScopfSolution, case: Result<GridCase>) -> (CellOutcome, Vec<AttackVector>) {
    let case = match case {
        Ok(c) => c,
        Err(e) => return (CellOutcome::Failed { error: e.to_string() }, Vec::new()),
    };
    let goal = SynthesisGoal::from_case(&case, pre);
    match measure_attack_space(&case, pre, &goal) {
        Ok(space) => (
            CellOutcome::Done {
                viable_subsets: space.viable_subsets,
                vectors: space.vectors.len(),
                combos: space.combo_count,
            },
            space.vectors,
        ),
        Err(e) => (CellOutcome::Failed { error: e.to_string() }, Vec::new()),
    }
}

/// Run the whole grid. Baseline (unsecured) cells are always computed — they
/// carry the frequency ranking the analytical policy needs and feed the
/// heatmaps — and are reported as rows only when `none` is among the
/// requested policies. Cells run data-parallel; output order is the nested
/// axis order and is independent of scheduling.
pub fn run_sweep(base: &GridCase, pre: &ScopfSolution, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let coordinates: Vec<Coordinate> = spec
        .delta_b_pct
        .iter()
        .flat_map(|&db| {
            spec.delta_l_pct.iter().flat_map(move |&dl| {
                spec.line_fraction_pct.iter().flat_map(move |&lf| {
                    spec.max_buses.iter().map(move |&tb| Coordinate {
                        delta_b_pct: db,
                        delta_l_pct: dl,
                        line_fraction_pct: lf,
                        max_buses: tb,
                    })
                })
            })
        })
        .collect();

    // Phase 1: unsecured baseline for every coordinate.
    let baseline: Vec<(CellOutcome, Vec<AttackVector>)> = coordinates
        .par_iter()
        .map(|c| run_cell(pre, cell_case(base, c, &[])))
        .collect();

    let pooled: Vec<AttackVector> =
        baseline.iter().flat_map(|(_, vs)| vs.iter().cloned()).collect();
    let bus_frequency = compromise_frequency(&pooled, base.num_buses());
    let ranking = rank_buses_by_frequency(&pooled);

    let l = base.num_lines();
    let mut heatmaps: BTreeMap<usize, Vec<Vec<u64>>> = BTreeMap::new();
    for &tb in &spec.max_buses {
        heatmaps.entry(tb).or_insert_with(|| vec![vec![0u64; l]; l]);
    }
    for (coordinate, (_, vectors)) in coordinates.iter().zip(&baseline) {
        let grid = heatmaps.get_mut(&coordinate.max_buses).expect("axis value present");
        for v in vectors {
            for &(line, outage, _) in &v.overload_pairs {
                grid[outage][line] += 1;
            }
        }
    }

    // Phase 2: the requested (coordinate, policy, repetition) cells.
    struct Job {
        coordinate: Coordinate,
        policy: String,
        seed: Option<u64>,
        rep: usize,
        secured: Vec<usize>,
        /// Index into `baseline` when the work is already done.
        reuse: Option<usize>,
    }
    let mut jobs = Vec::new();
    for (ci, coordinate) in coordinates.iter().enumerate() {
        for policy in &spec.policies {
            let reps = if policy.randomized() { spec.repetitions } else { 1 };
            for rep in 0..reps {
                let seed = policy.randomized().then(|| spec.base_seed + rep as u64);
                jobs.push(Job {
                    coordinate: *coordinate,
                    policy: policy.label(),
                    seed,
                    rep,
                    secured: select_secured(base, policy, &ranking, seed),
                    reuse: matches!(policy, SecuringPolicy::None).then_some(ci),
                });
            }
        }
    }
    let cells: Vec<CellRecord> = jobs
        .par_iter()
        .map(|job| {
            let outcome = match job.reuse {
                Some(ci) => baseline[ci].0.clone(),
                None => run_cell(pre, cell_case(base, &job.coordinate, &job.secured)).0,
            };
            CellRecord {
                coordinate: job.coordinate,
                policy: job.policy.clone(),
                secured: job.secured.len(),
                seed: job.seed,
                rep: job.rep,
                outcome,
            }
        })
        .collect();

    Ok(SweepResult { cells, bus_frequency, ranking, heatmaps })
}

fn csv_safe(text: &str) -> String {
    text.replace(['\n', '\r'], " ").replace(',', ";")
}

/// `attack_space.csv`: one row per cell.
pub fn attack_space_csv(result: &SweepResult) -> String {
    let mut out = String::from(
        "delta_b_pct,delta_l_pct,line_fraction_pct,max_buses,policy,secured,seed,rep,viable_subsets,vectors,combos,status\n",
    );
    for cell in &result.cells {
        let c = &cell.coordinate;
        let seed = cell.seed.map(|s| s.to_string()).unwrap_or_default();
        let (viable, vectors, combos, status) = match &cell.outcome {
            CellOutcome::Done { viable_subsets, vectors, combos } => {
                (viable_subsets.to_string(), vectors.to_string(), combos.to_string(), "ok".to_string())
            }
            CellOutcome::Failed { error } => {
                (String::new(), String::new(), String::new(), format!("error: {}", csv_safe(error)))
            }
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.delta_b_pct,
            c.delta_l_pct,
            c.line_fraction_pct,
            c.max_buses,
            cell.policy,
            cell.secured,
            seed,
            cell.rep,
            viable,
            vectors,
            combos,
            status
        );
    }
    out
}

/// `bus_frequency.csv`: every bus with its baseline compromise count.
pub fn bus_frequency_csv(result: &SweepResult) -> String {
    let mut out = String::from("bus,count\n");
    for (j, count) in result.bus_frequency.iter().enumerate() {
        let _ = writeln!(out, "{},{}", j + 1, count);
    }
    out
}

/// One `heatmap_TB<k>.csv` per max-buses axis value: header row of 1-based
/// line ids, then one row per tripped line of per-overloaded-line counts.
pub fn heatmap_csvs(result: &SweepResult) -> Vec<(String, String)> {
    result
        .heatmaps
        .iter()
        .map(|(tb, grid)| {
            let l = grid.len();
            let header: Vec<String> = (1..=l).map(|id| id.to_string()).collect();
            let mut out = header.join(",");
            out.push('\n');
            for row in grid {
                let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            (format!("heatmap_TB{tb}.csv"), out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridthreat_core::fixtures::load_fixture;
    use gridthreat_core::solve_scopf;

    fn triangle() -> (GridCase, ScopfSolution) {
        let (case, _) = load_fixture("3bus").unwrap();
        let loads = case.load_vector();
        let pre = solve_scopf(&case, &loads).unwrap();
        (case, pre)
    }

    fn spec_with(policies: Vec<SecuringPolicy>) -> SweepSpec {
        SweepSpec {
            delta_b_pct: vec![25.0],
            delta_l_pct: vec![5.0],
            line_fraction_pct: vec![33.0],
            max_buses: vec![3],
            policies,
            repetitions: 1,
            base_seed: 7,
        }
    }

    #[test]
    fn frozen_loads_empty_every_cell() {
        let (case, pre) = triangle();
        let mut spec = spec_with(vec![SecuringPolicy::None]);
        spec.delta_b_pct = vec![0.0];
        let result = run_sweep(&case, &pre, &spec).unwrap();
        assert_eq!(result.cells.len(), 1);
        assert_eq!(
            result.cells[0].outcome,
            CellOutcome::Done { viable_subsets: 0, vectors: 0, combos: 0 }
        );
        assert!(result.ranking.is_empty());
    }

    #[test]
    fn margin_axis_only_tightens() {
        let (case, pre) = triangle();
        let mut spec = spec_with(vec![SecuringPolicy::None]);
        spec.delta_l_pct = vec![2.0, 5.0, 8.0];
        let result = run_sweep(&case, &pre, &spec).unwrap();
        let sizes: Vec<usize> = result
            .cells
            .iter()
            .map(|c| match c.outcome {
                CellOutcome::Done { viable_subsets, .. } => viable_subsets,
                CellOutcome::Failed { .. } => panic!("cell failed"),
            })
            .collect();
        assert_eq!(sizes.len(), 3);
        assert!(sizes[0] >= sizes[1] && sizes[1] >= sizes[2], "sizes {sizes:?}");
        assert!(sizes[0] > 0, "baseline should admit attacks");
    }

    #[test]
    fn securing_policies_never_help_the_attacker() {
        let (case, pre) = triangle();
        let spec = spec_with(vec![
            SecuringPolicy::None,
            SecuringPolicy::AnalyticalTop { buses: 1 },
            SecuringPolicy::RandomPercent { percent: 30.0 },
        ]);
        let result = run_sweep(&case, &pre, &spec).unwrap();
        let size = |i: usize| match result.cells[i].outcome {
            CellOutcome::Done { viable_subsets, .. } => viable_subsets,
            CellOutcome::Failed { .. } => panic!("cell failed"),
        };
        assert!(size(0) > 0);
        assert!(size(1) <= size(0), "analytical securing grew the space");
        assert!(size(2) <= size(0), "random securing grew the space");
        assert!(result.cells[1].secured > 0);
        assert_eq!(result.cells[2].seed, Some(7));
    }

    #[test]
    fn csv_is_reproducible() {
        let (case, pre) = triangle();
        let mut spec = spec_with(vec![
            SecuringPolicy::RandomPercent { percent: 40.0 },
            SecuringPolicy::None,
        ]);
        spec.repetitions = 2;
        let first = run_sweep(&case, &pre, &spec).unwrap();
        let second = run_sweep(&case, &pre, &spec).unwrap();
        assert_eq!(attack_space_csv(&first), attack_space_csv(&second));
        assert_eq!(bus_frequency_csv(&first), bus_frequency_csv(&second));
        assert_eq!(heatmap_csvs(&first), heatmap_csvs(&second));
    }

    #[test]
    fn heatmap_rows_cover_every_outage_used() {
        let (case, pre) = triangle();
        let spec = spec_with(vec![SecuringPolicy::None]);
        let result = run_sweep(&case, &pre, &spec).unwrap();
        let grid = &result.heatmaps[&3];
        // Rebuild the per-outage vector counts the slow way and compare.
        let coordinate = result.cells[0].coordinate;
        let mut cell = case.clone();
        cell.attacker_limits.delta_b = coordinate.delta_b_pct / 100.0;
        cell.attacker_limits.delta_l = coordinate.delta_l_pct / 100.0;
        cell.attacker_limits.target_line_fraction = coordinate.line_fraction_pct / 100.0;
        cell.attacker_limits.max_buses = coordinate.max_buses;
        let goal = SynthesisGoal::from_case(&cell, &pre);
        let pooled = gridthreat_core::attack_synthesis::measure_attack_space(&cell, &pre, &goal)
            .unwrap()
            .vectors;
        for k in 0..case.num_lines() {
            let row_total: u64 = grid[k].iter().sum();
            let vectors_using_k = pooled
                .iter()
                .filter(|v| v.overload_pairs.iter().any(|&(_, outage, _)| outage == k))
                .count() as u64;
            assert!(row_total >= vectors_using_k, "outage {k}");
        }
    }

    #[test]
    fn ranking_follows_the_counts() {
        let (case, pre) = triangle();
        let goal = SynthesisGoal::from_case(&case, &pre);
        let vectors =
            gridthreat_core::attack_synthesis::enumerate_attack_space(&case, &pre, &goal).unwrap();
        assert!(!vectors.is_empty());
        let ranking = rank_buses_by_frequency(&vectors);
        let freq = compromise_frequency(&vectors, case.num_buses());
        for pair in ranking.windows(2) {
            let (a, b) = (pair[0] - 1, pair[1] - 1);
            assert!(freq[a] > freq[b] || (freq[a] == freq[b] && a < b));
        }
        assert!(rank_buses_by_frequency(&[]).is_empty());
    }

    #[test]
    fn policy_grammar() {
        assert_eq!(parse_policy("none").unwrap(), SecuringPolicy::None);
        assert_eq!(
            parse_policy("random:25").unwrap(),
            SecuringPolicy::RandomPercent { percent: 25.0 }
        );
        assert_eq!(parse_policy("top:2").unwrap(), SecuringPolicy::AnalyticalTop { buses: 2 });
        assert!(parse_policy("random:150").is_err());
        assert!(parse_policy("frequent").is_err());
    }
}
