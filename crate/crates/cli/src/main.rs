//! Command-line frontend for the grid-threat toolkit.
//!
//! One executable, eight subcommands: `powerflow`, `lodf`, `estimate`,
//! `scopf`, `synthesize`, `verify`, `sweep` and `fixtures`. Reports go to
//! stdout as CSV tables (dollars with 2 decimals, per-unit quantities with
//! 6, '.' as the decimal separator); `--out DIR` additionally writes them as
//! files, atomically. Exit codes: 0 for success — an unsat synthesis verdict
//! is a result, not an error — 1 for usage errors, 2 for input or validation
//! errors. Log level comes from the `GRIDTHREAT_LOG` environment variable.

mod evaluation;
mod io;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gridthreat_core::attack_synthesis::{
    synthesize, AttackVector, SynthesisGoal, SynthesisOutcome, UnsatCertificate,
};
use gridthreat_core::dc_powerflow::{solve_powerflow, PowerFlowState};
use gridthreat_core::fixtures::{fixture_names, fixture_text, load_fixture};
use gridthreat_core::grid_model::{parse_case, validate_case, GridCase};
use gridthreat_core::lodf::compute_lodf;
use gridthreat_core::scopf::{ConstraintKind, ScopfSolution};
use gridthreat_core::state_estimation::{
    apply_gaussian_noise, default_tau, estimate, taken_indices, MeasurementVector,
};
use gridthreat_core::verification::{verify, DispatchView, EmsView};
use gridthreat_core::solve_scopf;

use evaluation::{parse_policy, run_sweep, SecuringPolicy, SweepSpec};
use io::{format_attack_vector, parse_attack_vector, write_atomic};

#[derive(Parser)]
#[command(
    name = "gridthreat",
    version,
    about = "Power-grid attack-surface analysis on DC models: power flow, N-1 \
             screening, state estimation, security-constrained dispatch, stealthy \
             load-redistribution attack synthesis and independent verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the DC power flow and print bus angles and line flows
    Powerflow(PowerflowArgs),
    /// Print the line-outage distribution factor matrix
    Lodf(LodfArgs),
    /// Estimate the state from measurements and run the bad-data check
    Estimate(EstimateArgs),
    /// Compute the security-constrained least-cost dispatch
    Scopf(ScopfArgs),
    /// Search for a stealthy attack vector that forces post-contingency overloads
    Synthesize(SynthesizeArgs),
    /// Replay an attack vector against the real system and grade it
    Verify(VerifyArgs),
    /// Run a parameter-grid experiment and emit CSV reports
    Sweep(SweepArgs),
    /// List the bundled example cases or write one out
    Fixtures(FixturesArgs),
}

#[derive(Args)]
struct CaseArgs {
    /// Grid case file (see `fixtures --emit` for examples of the format)
    #[arg(long)]
    case: PathBuf,
    /// Reference (slack) bus, 1-based; overrides the case file
    #[arg(long)]
    slack: Option<usize>,
}

impl CaseArgs {
    fn load(&self) -> Result<GridCase> {
        let text = std::fs::read_to_string(&self.case)
            .with_context(|| format!("reading case file {}", self.case.display()))?;
        let mut case = parse_case(&text)
            .with_context(|| format!("parsing case file {}", self.case.display()))?;
        if let Some(slack) = self.slack {
            case.slack_bus = slack;
            validate_case(&case).context("applying --slack override")?;
        }
        Ok(case)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Directory to write output files into (atomically)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutArgs {
    fn write(&self, name: &str, content: &str) -> Result<()> {
        if let Some(dir) = &self.out {
            let path = dir.join(name);
            write_atomic(&path, content.as_bytes())?;
            log::info!("wrote {}", path.display());
        }
        Ok(())
    }
}

#[derive(Args)]
struct PowerflowArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Per-bus generation CSV (`bus,p_gen_pu`); omitted buses generate 0.
    /// Defaults to the security-constrained optimal dispatch
    #[arg(long)]
    dispatch: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct LodfArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Measurement CSV (`index,value`), 1-based indices covering exactly the
    /// taken measurements. Defaults to noiseless meters at the
    /// security-constrained optimum
    #[arg(long)]
    measurements: Option<PathBuf>,
    /// Bad-data threshold on the residual norm; defaults to
    /// 1e-4 * sqrt(taken measurement count)
    #[arg(long)]
    tau: Option<f64>,
    /// Standard deviation of Gaussian meter noise added before estimating
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Seed for the noise generator
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ScopfArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Compromised-bus budget T_B; overrides the case file
    #[arg(long)]
    max_buses: Option<usize>,
    /// Altered-measurement budget; overrides the case file
    #[arg(long)]
    max_measurements: Option<usize>,
    /// Load-shift budget as a percent of each load; overrides the case file
    #[arg(long)]
    delta_b: Option<f64>,
    /// Required overload margin as a percent of line capacity; overrides the
    /// case file
    #[arg(long)]
    delta_l: Option<f64>,
    /// Percent of lines that must be overloadable; overrides the case file
    #[arg(long)]
    line_fraction: Option<f64>,
    /// Corrupted-dispatch cost ceiling in dollars; negative means "use the
    /// pre-attack optimum"; overrides the case file
    #[arg(long)]
    cost_budget: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Attack-vector file produced by `synthesize`
    #[arg(long)]
    vector: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Load-shift budget axis, percent (repeatable); defaults to the case value
    #[arg(long)]
    delta_b: Vec<f64>,
    /// Overload-margin axis, percent (repeatable); defaults to the case value
    #[arg(long)]
    delta_l: Vec<f64>,
    /// Overloaded-line-fraction axis, percent (repeatable); defaults to the
    /// case value
    #[arg(long)]
    line_fraction: Vec<f64>,
    /// Compromised-bus budget axis (repeatable); defaults to the case value
    #[arg(long)]
    max_buses: Vec<usize>,
    /// Securing policy: `none`, `random:<percent>` or `top:<buses>`
    /// (repeatable); defaults to `none`
    #[arg(long)]
    policy: Vec<String>,
    /// Repetitions per randomized-policy cell
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Base seed; repetition r uses seed + r
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the cell grid; defaults to the number of cores
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for the CSV reports; defaults to the current directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct FixturesArgs {
    /// Write this bundled case (`3bus` or `ieee14`) as a .grid file
    #[arg(long)]
    emit: Option<String>,
    #[command(flatten)]
    out: OutArgs,
}

fn main() {
    // Die quietly when a downstream pager or `head` closes the pipe,
    // instead of panicking on the failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIDTHREAT_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Powerflow(args) => cmd_powerflow(args),
        Command::Lodf(args) => cmd_lodf(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Scopf(args) => cmd_scopf(args),
        Command::Synthesize(args) => cmd_synthesize(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Fixtures(args) => cmd_fixtures(args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    }
}

fn pu(v: f64) -> String {
    format!("{v:.6}")
}

fn dollars(v: f64) -> String {
    format!("{v:.2}")
}

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

fn angles_csv(theta: &[f64]) -> String {
    let mut out = String::from("bus,angle_rad\n");
    for (j, t) in theta.iter().enumerate() {
        let _ = writeln!(out, "{},{}", j + 1, pu(*t));
    }
    out
}

fn flows_csv(case: &GridCase, state: &PowerFlowState) -> String {
    let mut out = String::from("line,from,to,flow_pu,capacity_pu,loading_pct\n");
    for (i, line) in case.lines.iter().enumerate() {
        let flow = state.line_flow[i];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            line.id,
            line.from,
            line.to,
            pu(flow),
            pu(line.capacity),
            pct(100.0 * flow.abs() / line.capacity)
        );
    }
    out
}

fn parse_dispatch_csv(case: &GridCase, path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading dispatch file {}", path.display()))?;
    let mut dispatch = vec![0.0; case.num_buses()];
    let mut seen = vec![false; case.num_buses()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let bus_field = fields.next().unwrap_or("").trim();
        if lineno == 0 && bus_field.parse::<usize>().is_err() {
            continue; // header row
        }
        let bus: usize = bus_field
            .parse()
            .with_context(|| format!("line {}: bad bus id {bus_field:?}", lineno + 1))?;
        let value: f64 = fields
            .next()
            .context("missing value column")?
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad generation value", lineno + 1))?;
        if bus == 0 || bus > case.num_buses() {
            bail!("line {}: bus {bus} out of range 1..={}", lineno + 1, case.num_buses());
        }
        if seen[bus - 1] {
            bail!("line {}: duplicate bus {bus}", lineno + 1);
        }
        seen[bus - 1] = true;
        dispatch[bus - 1] = value;
    }
    Ok(dispatch)
}

fn cmd_powerflow(args: PowerflowArgs) -> Result<()> {
    let case = args.case.load()?;
    let loads = case.load_vector();
    let dispatch = match &args.dispatch {
        Some(path) => parse_dispatch_csv(&case, path)?,
        None => {
            log::info!("no --dispatch given; using the security-constrained optimum");
            solve_scopf(&case, &loads)?.dispatch
        }
    };
    let state = solve_powerflow(&case, &dispatch, &loads)?;
    let angles = angles_csv(&state.theta);
    let flows = flows_csv(&case, &state);
    print!("{angles}\n{flows}");
    args.out.write("angles.csv", &angles)?;
    args.out.write("flows.csv", &flows)?;
    Ok(())
}

fn cmd_lodf(args: LodfArgs) -> Result<()> {
    let case = args.case.load()?;
    let lodf = compute_lodf(&case);
    let l = case.num_lines();
    let mut out = String::from("line,islanding");
    for line in &case.lines {
        let _ = write!(out, ",outage_{}", line.id);
    }
    out.push('\n');
    for i in 0..l {
        let _ = write!(out, "{},{}", case.lines[i].id, lodf.islanding[i]);
        for k in 0..l {
            let _ = write!(out, ",{}", pu(lodf.factors[(i, k)]));
        }
        out.push('\n');
    }
    print!("{out}");
    args.out.write("lodf.csv", &out)?;
    Ok(())
}

fn parse_measurement_csv(case: &GridCase, path: &Path) -> Result<MeasurementVector> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading measurement file {}", path.display()))?;
    let m = case.num_measurements();
    let mut values: Vec<Option<f64>> = vec![None; m];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let idx_field = fields.next().unwrap_or("").trim();
        if lineno == 0 && idx_field.parse::<usize>().is_err() {
            continue; // header row
        }
        let index: usize = idx_field
            .parse()
            .with_context(|| format!("line {}: bad measurement index {idx_field:?}", lineno + 1))?;
        let value: f64 = fields
            .next()
            .context("missing value column")?
            .trim()
            .parse()
            .with_context(|| format!("line {}: bad measurement value", lineno + 1))?;
        if index == 0 || index > m {
            bail!("line {}: measurement index {index} out of range 1..={m}", lineno + 1);
        }
        if values[index - 1].is_some() {
            bail!("line {}: duplicate measurement {index}", lineno + 1);
        }
        values[index - 1] = Some(value);
    }
    let taken = taken_indices(case);
    let mut z = Vec::with_capacity(taken.len());
    for &m0 in &taken {
        match values[m0] {
            Some(v) => z.push(v),
            None => bail!("measurement {} is taken but missing from the file", m0 + 1),
        }
    }
    for (m0, v) in values.iter().enumerate() {
        if v.is_some() && !taken.contains(&m0) {
            bail!("measurement {} is not taken in this case but appears in the file", m0 + 1);
        }
    }
    Ok(MeasurementVector { z })
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let case = args.case.load()?;
    let mut z = match &args.measurements {
        Some(path) => parse_measurement_csv(&case, path)?,
        None => {
            log::info!("no --measurements given; simulating meters at the security-constrained optimum");
            let loads = case.load_vector();
            let pre = solve_scopf(&case, &loads)?;
            MeasurementVector::from_state(&case, &pre.flows)
        }
    };
    if args.noise_sigma > 0.0 {
        apply_gaussian_noise(&mut z, args.noise_sigma, args.seed);
    }
    let result = estimate(&case, &z, None, args.tau)?;

    let slack0 = case.slack0();
    let mut state = String::from("bus,theta_hat_rad\n");
    let mut r = 0usize;
    for j in 0..case.num_buses() {
        let theta = if j == slack0 {
            0.0
        } else {
            let v = result.x_hat[r];
            r += 1;
            v
        };
        let _ = writeln!(state, "{},{}", j + 1, pu(theta));
    }
    let tau = args.tau.unwrap_or_else(|| default_tau(&case));
    let mut verdict = String::from("residual_norm,tau,flagged\n");
    let _ = writeln!(verdict, "{:.6e},{:.6e},{}", result.residual_norm, tau, result.flagged);
    print!("{state}\n{verdict}");
    args.out.write("estimate_state.csv", &state)?;
    args.out.write("estimate_verdict.csv", &verdict)?;
    Ok(())
}

fn binding_csv(case: &GridCase, solution: &ScopfSolution) -> String {
    let mut out = String::from("kind,subject,outage\n");
    for b in &solution.binding {
        let kind = match b.kind {
            ConstraintKind::BaseFlow => "base_flow",
            ConstraintKind::ContingencyFlow => "contingency_flow",
            ConstraintKind::GeneratorMin => "generator_min",
            ConstraintKind::GeneratorMax => "generator_max",
        };
        let outage = b.outage.map(|k| case.lines[k].id.to_string()).unwrap_or_default();
        let subject = match b.kind {
            ConstraintKind::BaseFlow | ConstraintKind::ContingencyFlow => case.lines[b.subject].id,
            ConstraintKind::GeneratorMin | ConstraintKind::GeneratorMax => b.subject + 1,
        };
        let _ = writeln!(out, "{kind},{subject},{outage}");
    }
    out
}

fn dispatch_csv(case: &GridCase, dispatch: &[f64]) -> String {
    let mut out = String::from("bus,p_gen_pu\n");
    for g in &case.generators {
        let _ = writeln!(out, "{},{}", g.bus, pu(dispatch[g.bus - 1]));
    }
    out
}

fn cmd_scopf(args: ScopfArgs) -> Result<()> {
    let case = args.case.load()?;
    let loads = case.load_vector();
    let solution = solve_scopf(&case, &loads)?;
    let dispatch = dispatch_csv(&case, &solution.dispatch);
    let cost = format!("cost,{}\n", dollars(solution.cost));
    let binding = binding_csv(&case, &solution);
    let excluded = if solution.islanding_excluded.is_empty() {
        "none".to_string()
    } else {
        solution
            .islanding_excluded
            .iter()
            .map(|&k| case.lines[k].id.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    print!("{dispatch}\n{cost}\n{binding}");
    println!("# islanding outages excluded from security constraints: {excluded}");
    args.out.write("dispatch.csv", &dispatch)?;
    args.out.write("binding.csv", &binding)?;
    args.out.write("flows.csv", &flows_csv(&case, &solution.flows))?;
    Ok(())
}

fn percent_override(name: &str, value: Option<f64>, target: &mut f64) -> Result<()> {
    if let Some(v) = value {
        if !(0.0..=100.0).contains(&v) {
            bail!("--{name} {v} outside [0, 100] percent");
        }
        *target = v / 100.0;
    }
    Ok(())
}

fn apply_overrides(case: &mut GridCase, args: &SynthesizeArgs) -> Result<()> {
    let limits = &mut case.attacker_limits;
    if let Some(v) = args.max_buses {
        limits.max_buses = v;
    }
    if let Some(v) = args.max_measurements {
        limits.max_measurements = v;
    }
    percent_override("delta-b", args.delta_b, &mut limits.delta_b)?;
    percent_override("delta-l", args.delta_l, &mut limits.delta_l)?;
    percent_override("line-fraction", args.line_fraction, &mut limits.target_line_fraction)?;
    if let Some(v) = args.cost_budget {
        limits.cost_budget = if v < 0.0 { None } else { Some(v) };
    }
    validate_case(case).context("applying attacker-limit overrides")?;
    Ok(())
}

fn sat_report(case: &GridCase, goal: &SynthesisGoal, vector: &AttackVector) -> String {
    let mut out = String::from("verdict: sat\n");
    let ids = |flags: &[bool]| {
        flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| (i + 1).to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "compromised buses: {}", ids(&vector.compromised));
    let _ = writeln!(
        out,
        "altered measurements: {} of {} allowed (ids: {})",
        vector.altered_count(),
        case.attacker_limits.max_measurements,
        ids(&vector.altered)
    );
    let shifts: Vec<String> = vector
        .delta_bus
        .iter()
        .enumerate()
        .filter(|(_, &d)| d.abs() > 1e-12)
        .map(|(j, &d)| format!("{}:{}{}", j + 1, if d >= 0.0 { "+" } else { "" }, pu(d)))
        .collect();
    let _ = writeln!(out, "load shifts (pu): {}", shifts.join(" "));
    let _ = writeln!(
        out,
        "corrupted dispatch cost: ${} (budget ${})",
        dollars(vector.corrupted_cost),
        dollars(goal.cost_budget)
    );
    let pairs: Vec<String> = vector
        .overload_pairs
        .iter()
        .map(|&(line, outage, excess)| {
            format!(
                "(line {} overloads by {}% when line {} trips)",
                case.lines[line].id,
                pct(excess),
                case.lines[outage].id
            )
        })
        .collect();
    let _ = writeln!(
        out,
        "overload pairs: {} required, {} found: {}",
        goal.min_overload_pairs,
        vector.overload_pairs.len(),
        pairs.join(" ")
    );
    out
}

fn unsat_report(cert: &UnsatCertificate) -> String {
    let mut out = String::from("verdict: unsat\n");
    let _ = writeln!(out, "exhaustive up to {} compromised buses", cert.max_subset_size);
    let _ = writeln!(out, "subsets explored: {}", cert.subsets_explored);
    let _ = writeln!(out, "structurally pruned: {}", cert.structurally_pruned);
    let _ = writeln!(out, "infeasible leaves: {}", cert.leaves_refuted);
    let _ = writeln!(out, "dropped by measurement budget: {}", cert.rejected_by_measurement_budget);
    let _ = writeln!(out, "absorbed by re-optimization: {}", cert.rejected_by_replay);
    out
}

fn certificate_kv(cert: &UnsatCertificate) -> String {
    let mut out = String::from("verdict = unsat\n");
    let _ = writeln!(out, "max_subset_size = {}", cert.max_subset_size);
    let _ = writeln!(out, "subsets_explored = {}", cert.subsets_explored);
    let _ = writeln!(out, "structurally_pruned = {}", cert.structurally_pruned);
    let _ = writeln!(out, "leaves_refuted = {}", cert.leaves_refuted);
    let _ = writeln!(out, "rejected_by_measurement_budget = {}", cert.rejected_by_measurement_budget);
    let _ = writeln!(out, "rejected_by_replay = {}", cert.rejected_by_replay);
    out
}

fn cmd_synthesize(args: SynthesizeArgs) -> Result<()> {
    let mut case = args.case.load()?;
    apply_overrides(&mut case, &args)?;
    let loads = case.load_vector();
    let pre = solve_scopf(&case, &loads).context("pre-attack dispatch")?;
    log::info!("pre-attack cost ${}", dollars(pre.cost));
    let goal = SynthesisGoal::from_case(&case, &pre);
    match synthesize(&case, &pre, &goal)? {
        SynthesisOutcome::Sat(vector) => {
            print!("{}", sat_report(&case, &goal, &vector));
            args.out.write("attack_vector.kv", &format_attack_vector(&case, &vector))?;
        }
        SynthesisOutcome::Unsat(cert) => {
            print!("{}", unsat_report(&cert));
            args.out.write("certificate.kv", &certificate_kv(&cert))?;
        }
    }
    Ok(())
}

fn view_line(case: &GridCase, label: &str, view: &DispatchView) -> String {
    let worst = view
        .screen
        .first()
        .map(|e| {
            format!(
                "worst post-contingency loading {}% (line {} under outage of line {})",
                pct(100.0 * e.loading),
                case.lines[e.line].id,
                case.lines[e.outage].id
            )
        })
        .unwrap_or_else(|| "no screened contingencies".to_string());
    format!(
        "{label}: cost ${}, {} base-case violations, {worst}\n",
        dollars(view.cost),
        view.base_violations.len()
    )
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let case = args.case.load()?;
    let text = std::fs::read_to_string(&args.vector)
        .with_context(|| format!("reading vector file {}", args.vector.display()))?;
    let vector = parse_attack_vector(&case, &text)?;
    let loads = case.load_vector();
    let pre = solve_scopf(&case, &loads).context("pre-attack dispatch")?;
    let report = verify(&case, &pre, &vector)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "stealthy: {} (residual delta {:.3e})",
        if report.stealthy { "yes" } else { "no" },
        report.residual_delta
    );
    let _ = writeln!(out, "baseline cost: ${}", dollars(pre.cost));
    match &report.ems_view {
        EmsView::Redispatch(view) => {
            out.push_str(&view_line(&case, "operator view (attacked loads)", view));
            let delta = report.cost_delta.unwrap_or(f64::NAN);
            let _ = writeln!(
                out,
                "cost delta: {}{} dollars ({})",
                if delta > 0.0 { "+" } else { "" },
                dollars(delta),
                if delta <= 1e-6 { "no economic alarm" } else { "raises an economic alarm" }
            );
        }
        EmsView::Infeasible { reason } => {
            let _ = writeln!(out, "operator view: re-optimization infeasible ({reason})");
        }
    }
    if let Some(view) = &report.true_with_ems_dispatch {
        out.push_str(&view_line(&case, "real system (operator dispatch)", view));
    }
    out.push_str(&view_line(&case, "real system (vector dispatch)", &report.true_with_vector_dispatch));
    let _ = writeln!(out, "confirmed overloads (both oracles): {}", report.confirmed_overloads.len());
    print!("{out}");

    let mut csv = String::from("line,outage,flow_pu,loading_pct,excess_pct\n");
    for c in &report.confirmed_overloads {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            case.lines[c.line].id,
            case.lines[c.outage].id,
            pu(c.flow),
            pct(c.loading_percent),
            pct(c.excess_percent)
        );
    }
    print!("{csv}");
    args.out.write("confirmed_overloads.csv", &csv)?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let case = args.case.load()?;
    let limits = &case.attacker_limits;
    let or_default = |axis: &[f64], fallback: f64| {
        if axis.is_empty() { vec![fallback] } else { axis.to_vec() }
    };
    let policies: Vec<SecuringPolicy> = if args.policy.is_empty() {
        vec![SecuringPolicy::None]
    } else {
        args.policy.iter().map(|p| parse_policy(p)).collect::<Result<_>>()?
    };
    let spec = SweepSpec {
        delta_b_pct: or_default(&args.delta_b, limits.delta_b * 100.0),
        delta_l_pct: or_default(&args.delta_l, limits.delta_l * 100.0),
        line_fraction_pct: or_default(&args.line_fraction, limits.target_line_fraction * 100.0),
        max_buses: if args.max_buses.is_empty() { vec![limits.max_buses] } else { args.max_buses.clone() },
        policies,
        repetitions: args.reps,
        base_seed: args.seed,
    };
    let loads = case.load_vector();
    let pre = solve_scopf(&case, &loads).context("pre-attack dispatch")?;

    let result = match args.workers {
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .context("building worker pool")?;
            pool.install(|| run_sweep(&case, &pre, &spec))?
        }
        None => run_sweep(&case, &pre, &spec)?,
    };

    let out = OutArgs { out: Some(args.out.clone()) };
    out.write("attack_space.csv", &evaluation::attack_space_csv(&result))?;
    out.write("bus_frequency.csv", &evaluation::bus_frequency_csv(&result))?;
    let mut names = vec!["attack_space.csv".to_string(), "bus_frequency.csv".to_string()];
    for (name, content) in evaluation::heatmap_csvs(&result) {
        out.write(&name, &content)?;
        names.push(name);
    }
    let failed = result
        .cells
        .iter()
        .filter(|c| matches!(c.outcome, evaluation::CellOutcome::Failed { .. }))
        .count();
    println!("cells: {} ({} ok, {} failed)", result.cells.len(), result.cells.len() - failed, failed);
    let ranking: Vec<String> = result.ranking.iter().map(|b| b.to_string()).collect();
    println!(
        "top compromised buses: {}",
        if ranking.is_empty() { "none".to_string() } else { ranking.join(" ") }
    );
    println!(
        "wrote: {}",
        names.iter().map(|n| args.out.join(n).display().to_string()).collect::<Vec<_>>().join(" ")
    );
    Ok(())
}

fn cmd_fixtures(args: FixturesArgs) -> Result<()> {
    match &args.emit {
        None => {
            for name in fixture_names() {
                let (case, _) = load_fixture(name).expect("bundled fixture must load");
                println!(
                    "{name}: {} buses, {} lines, {} measurements",
                    case.num_buses(),
                    case.num_lines(),
                    case.num_measurements()
                );
            }
        }
        Some(name) => {
            let text = fixture_text(name)
                .with_context(|| format!("unknown fixture {name:?}; available: {}", fixture_names().join(", ")))?;
            let dir = args.out.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let path = dir.join(format!("{name}.grid"));
            write_atomic(&path, text.as_bytes())?;
            println!("wrote: {}", path.display());
        }
    }
    Ok(())
}
