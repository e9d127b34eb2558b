//! Grid case data model plus the text-format parser/serializer.
//!
//! The case file is line-oriented: `#` lines are comments, and a comment
//! whose text begins with one of nine known section names opens that section
//! (sections must appear in order). Records are whitespace-separated numbers.
//! Section order and record layouts:
//!
//! ```text
//! # Topology (Line) Information            id from to admittance capacity
//! # Bus Types                              bus is_generator is_load
//! # Generator Information                  bus p_max p_min alpha beta
//! # Load Information                       bus current max min
//! # Measurement Information                index taken secured alterable
//! # Cost Constraint                        dollars (-1 = recompute from pre-attack SCOPF)
//! # Attacker's Resource Limitation         max_measurements max_buses
//! # Maximum percent of delta load          percent
//! # % of minimum Overloading amount, ...   overload_percent line_percent
//! ```
//!
//! Percentages are written as whole numbers ("20" means 20%) and converted to
//! fractions on parse. Powers are per-unit on a 100 MVA base. Measurement
//! indices run 1..=l forward line flows, l+1..=2l backward line flows,
//! 2l+1..=2l+b bus consumptions, so m = 2l + b exactly.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    /// 1-based, contiguous.
    pub id: usize,
    pub is_generator: bool,
    pub is_load: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    /// 1-based, contiguous.
    pub id: usize,
    /// 1-based bus id the line is oriented from (f_i).
    pub from: usize,
    /// 1-based bus id the line is oriented to (e_i).
    pub to: usize,
    /// Per-unit admittance d_i (reciprocal of reactance; lines are lossless).
    pub admittance: f64,
    /// Per-unit flow capacity.
    pub capacity: f64,
}

impl Line {
    /// 0-based endpoint indices.
    pub fn from0(&self) -> usize {
        self.from - 1
    }

    pub fn to0(&self) -> usize {
        self.to - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    /// 1-based bus id; at most one generator per bus.
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// Fixed cost in dollars, charged whenever output is positive.
    pub alpha: f64,
    /// Marginal cost in dollars per pu.
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadSpec {
    /// 1-based bus id.
    pub bus: usize,
    /// Present-day consumption (pu).
    pub current: f64,
    /// Rated bounds (pu).
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementConfig {
    /// 1-based measurement index.
    pub index: usize,
    pub taken: bool,
    pub secured: bool,
    /// Whether the attacker's access allows altering this measurement (r_i).
    pub alterable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackerLimits {
    pub max_measurements: usize,
    pub max_buses: usize,
    /// Max load shift as a fraction of the original load (delta_b).
    pub delta_b: f64,
    /// Overload margin as a fraction of rated capacity (delta_l).
    pub delta_l: f64,
    /// Fraction of lines the attacker wants overloaded.
    pub target_line_fraction: f64,
    /// Generation-cost ceiling for the corrupted dispatch; None means
    /// "recompute from the pre-attack SCOPF optimum" (written as -1).
    pub cost_budget: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCase {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub loads: Vec<LoadSpec>,
    pub measurements: Vec<MeasurementConfig>,
    pub attacker_limits: AttackerLimits,
    /// 1-based reference bus whose angle is fixed to zero. Defaults to 1.
    pub slack_bus: usize,
}

/// Which physical quantity a measurement index refers to (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasKind {
    /// Line flow in stored orientation, metered at the from-bus.
    ForwardFlow(usize),
    /// Negated line flow, metered at the to-bus.
    BackwardFlow(usize),
    /// Bus consumption P^B_j, metered at the bus.
    Consumption(usize),
}

impl GridCase {
    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn num_measurements(&self) -> usize {
        2 * self.lines.len() + self.buses.len()
    }

    /// 0-based slack index.
    pub fn slack0(&self) -> usize {
        self.slack_bus - 1
    }

    /// Per-bus current load vector (0-based, zeros where no load).
    pub fn load_vector(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.num_buses()];
        for l in &self.loads {
            v[l.bus - 1] = l.current;
        }
        v
    }

    pub fn total_load(&self) -> f64 {
        self.loads.iter().map(|l| l.current).sum()
    }

    pub fn generator_at(&self, bus0: usize) -> Option<&Generator> {
        self.generators.iter().find(|g| g.bus - 1 == bus0)
    }

    pub fn load_at(&self, bus0: usize) -> Option<&LoadSpec> {
        self.loads.iter().find(|l| l.bus - 1 == bus0)
    }

    /// Meaning of 0-based measurement index `m0`.
    pub fn meas_kind(&self, m0: usize) -> MeasKind {
        let l = self.num_lines();
        if m0 < l {
            MeasKind::ForwardFlow(m0)
        } else if m0 < 2 * l {
            MeasKind::BackwardFlow(m0 - l)
        } else {
            MeasKind::Consumption(m0 - 2 * l)
        }
    }

    /// 0-based bus where measurement `m0` is metered (forward flows at the
    /// from-bus, backward flows at the to-bus, consumptions at the bus).
    pub fn meter_bus(&self, m0: usize) -> usize {
        match self.meas_kind(m0) {
            MeasKind::ForwardFlow(i) => self.lines[i].from0(),
            MeasKind::BackwardFlow(i) => self.lines[i].to0(),
            MeasKind::Consumption(j) => j,
        }
    }

    /// Number of overload pairs the attacker must achieve:
    /// ceil(target_line_fraction * l), at least 1.
    pub fn target_line_count(&self) -> usize {
        let raw = self.attacker_limits.target_line_fraction * self.num_lines() as f64;
        // Guard against float fuzz like 0.05 * 20 = 1.0000000000000002.
        let t = libm::ceil(raw - 1e-9) as usize;
        t.max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaseError {
    /// A record failed to parse; carries the 1-based source line.
    Malformed { line: usize, section: &'static str, message: String },
    /// A section marker appeared out of order (or a record preceded all markers).
    UnexpectedContent { line: usize, message: String },
    MissingSection { section: &'static str },
    DanglingBus { section: &'static str, bus: usize },
    MeasurementCountMismatch { expected: usize, found: usize },
    /// The in-service line graph does not connect all buses.
    Disconnected,
    /// Any other structural invariant violation.
    Invalid { message: String },
}

impl fmt::Display for CaseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseError::Malformed { line, section, message } => {
                write!(f, "line {line} ({section} section): {message}")
            }
            CaseError::UnexpectedContent { line, message } => write!(f, "line {line}: {message}"),
            CaseError::MissingSection { section } => write!(f, "missing section: {section}"),
            CaseError::DanglingBus { section, bus } => {
                write!(f, "{section} section references unknown bus {bus}")
            }
            CaseError::MeasurementCountMismatch { expected, found } => {
                write!(f, "expected 2l + b = {expected} measurements, found {found}")
            }
            CaseError::Disconnected => write!(f, "line graph is disconnected"),
            CaseError::Invalid { message } => write!(f, "{message}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CaseError {}

/// Section markers in required order: (match prefix, short name). A comment
/// line opens a section when its text, lowercased, starts with the prefix.
const SECTIONS: [(&str, &str); 9] = [
    ("topology", "lines"),
    ("bus types", "bus types"),
    ("generator information", "generators"),
    ("load information", "loads"),
    ("measurement information", "measurements"),
    ("cost constraint", "cost constraint"),
    ("attacker's resource limitation", "attacker resources"),
    ("maximum percent of delta load", "max delta load"),
    ("% of minimum overloading", "overload spec"),
];

fn lower(s: &str) -> String {
    s.chars().flat_map(char::to_lowercase).collect()
}

struct RecordParser<'a> {
    line_no: usize,
    section: &'static str,
    fields: Vec<&'a str>,
    taken: usize,
}

impl<'a> RecordParser<'a> {
    fn new(line_no: usize, section: &'static str, text: &'a str) -> Self {
        RecordParser { line_no, section, fields: text.split_whitespace().collect(), taken: 0 }
    }

    fn err(&self, message: String) -> CaseError {
        CaseError::Malformed { line: self.line_no, section: self.section, message }
    }

    fn f64(&mut self, what: &str) -> Result<f64, CaseError> {
        let raw = self
            .fields
            .get(self.taken)
            .ok_or_else(|| self.err(format!("missing field `{what}`")))?;
        self.taken += 1;
        raw.parse::<f64>().map_err(|_| self.err(format!("field `{what}`: `{raw}` is not a number")))
    }

    fn usize(&mut self, what: &str) -> Result<usize, CaseError> {
        let raw = self
            .fields
            .get(self.taken)
            .ok_or_else(|| self.err(format!("missing field `{what}`")))?;
        self.taken += 1;
        raw.parse::<usize>()
            .map_err(|_| self.err(format!("field `{what}`: `{raw}` is not a non-negative integer")))
    }

    fn flag(&mut self, what: &str) -> Result<bool, CaseError> {
        match self.usize(what)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(self.err(format!("field `{what}`: expected 0 or 1, got {v}"))),
        }
    }

    fn finish(self) -> Result<(), CaseError> {
        if self.taken != self.fields.len() {
            let extra = self.fields.len() - self.taken;
            return Err(self.err(format!("{extra} extra field(s) in record")));
        }
        Ok(())
    }
}

/// Parse a case file. The result is fully validated (see [`validate_case`]).
pub fn parse_case(text: &str) -> Result<GridCase, CaseError> {
    let mut lines_sec: Vec<Line> = Vec::new();
    let mut buses: Vec<Bus> = Vec::new();
    let mut generators: Vec<Generator> = Vec::new();
    let mut loads: Vec<LoadSpec> = Vec::new();
    let mut measurements: Vec<MeasurementConfig> = Vec::new();
    let mut cost_budget: Option<Option<f64>> = None;
    let mut resources: Option<(usize, usize)> = None;
    let mut delta_b: Option<f64> = None;
    let mut overload: Option<(f64, f64)> = None;

    // Index into SECTIONS of the currently open section; none before the first marker.
    let mut current: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let lowered = lower(comment.trim());
            if let Some(pos) = SECTIONS.iter().position(|(tag, _)| lowered.starts_with(tag)) {
                let expected = current.map_or(0, |c| c + 1);
                if pos != expected {
                    return Err(CaseError::UnexpectedContent {
                        line: line_no,
                        message: format!(
                            "section `{}` out of order (expected `{}`)",
                            SECTIONS[pos].1,
                            SECTIONS.get(expected).map_or("end of file", |s| s.1)
                        ),
                    });
                }
                current = Some(pos);
            }
            // Non-marker comments are ignored.
            continue;
        }
        let Some(sec) = current else {
            return Err(CaseError::UnexpectedContent {
                line: line_no,
                message: "record before any section marker".to_string(),
            });
        };
        let section = SECTIONS[sec].1;
        let mut rec = RecordParser::new(line_no, section, trimmed);
        match sec {
            0 => {
                let id = rec.usize("line no")?;
                let from = rec.usize("from bus")?;
                let to = rec.usize("to bus")?;
                let admittance = rec.f64("admittance")?;
                let capacity = rec.f64("capacity")?;
                rec.finish()?;
                lines_sec.push(Line { id, from, to, admittance, capacity });
            }
            1 => {
                let id = rec.usize("bus no")?;
                let is_generator = rec.flag("is generator")?;
                let is_load = rec.flag("is load")?;
                rec.finish()?;
                buses.push(Bus { id, is_generator, is_load });
            }
            2 => {
                let bus = rec.usize("bus no")?;
                let p_max = rec.f64("max generation")?;
                let p_min = rec.f64("min generation")?;
                let alpha = rec.f64("alpha")?;
                let beta = rec.f64("beta")?;
                rec.finish()?;
                generators.push(Generator { bus, p_min, p_max, alpha, beta });
            }
            3 => {
                let bus = rec.usize("bus no")?;
                let current_load = rec.f64("existing load")?;
                let max = rec.f64("max load")?;
                let min = rec.f64("min load")?;
                rec.finish()?;
                loads.push(LoadSpec { bus, current: current_load, min, max });
            }
            4 => {
                let index = rec.usize("measurement no")?;
                let taken = rec.flag("taken")?;
                let secured = rec.flag("secured")?;
                let alterable = rec.flag("alterable")?;
                rec.finish()?;
                measurements.push(MeasurementConfig { index, taken, secured, alterable });
            }
            5 => {
                let dollars = rec.f64("cost constraint")?;
                rec.finish()?;
                if cost_budget.is_some() {
                    return Err(rec_dup(line_no, section));
                }
                cost_budget = Some(if dollars < 0.0 { None } else { Some(dollars) });
            }
            6 => {
                let meas = rec.usize("measurements")?;
                let buses_lim = rec.usize("buses")?;
                rec.finish()?;
                if resources.is_some() {
                    return Err(rec_dup(line_no, section));
                }
                resources = Some((meas, buses_lim));
            }
            7 => {
                let pct = rec.f64("delta load percent")?;
                rec.finish()?;
                if delta_b.is_some() {
                    return Err(rec_dup(line_no, section));
                }
                delta_b = Some(pct / 100.0);
            }
            8 => {
                let over_pct = rec.f64("overload percent")?;
                let line_pct = rec.f64("line percent")?;
                rec.finish()?;
                if overload.is_some() {
                    return Err(rec_dup(line_no, section));
                }
                overload = Some((over_pct / 100.0, line_pct / 100.0));
            }
            _ => unreachable!(),
        }
    }

    let missing = |sec: usize| CaseError::MissingSection { section: SECTIONS[sec].1 };
    match current {
        Some(c) if c == SECTIONS.len() - 1 => {}
        Some(c) => return Err(missing(c + 1)),
        None => return Err(missing(0)),
    }
    let cost_budget = cost_budget.ok_or_else(|| missing(5))?;
    let (max_measurements, max_buses) = resources.ok_or_else(|| missing(6))?;
    let delta_b = delta_b.ok_or_else(|| missing(7))?;
    let (delta_l, target_line_fraction) = overload.ok_or_else(|| missing(8))?;

    let case = GridCase {
        buses,
        lines: lines_sec,
        generators,
        loads,
        measurements,
        attacker_limits: AttackerLimits {
            max_measurements,
            max_buses,
            delta_b,
            delta_l,
            target_line_fraction,
            cost_budget,
        },
        slack_bus: 1,
    };
    validate_case(&case)?;
    Ok(case)
}

fn rec_dup(line: usize, section: &'static str) -> CaseError {
    CaseError::Malformed { line, section, message: "duplicate record in single-record section".to_string() }
}

/// Check every structural invariant of a [`GridCase`].
pub fn validate_case(case: &GridCase) -> Result<(), CaseError> {
    let b = case.buses.len();
    let l = case.lines.len();
    if b == 0 {
        return Err(CaseError::Invalid { message: "case has no buses".to_string() });
    }
    for (i, bus) in case.buses.iter().enumerate() {
        if bus.id != i + 1 {
            return Err(CaseError::Invalid {
                message: format!("bus ids must be contiguous from 1; record {} has id {}", i + 1, bus.id),
            });
        }
    }
    let bus_ok = |id: usize| id >= 1 && id <= b;
    for (i, line) in case.lines.iter().enumerate() {
        if line.id != i + 1 {
            return Err(CaseError::Invalid {
                message: format!("line ids must be contiguous from 1; record {} has id {}", i + 1, line.id),
            });
        }
        for end in [line.from, line.to] {
            if !bus_ok(end) {
                return Err(CaseError::DanglingBus { section: "lines", bus: end });
            }
        }
        if line.from == line.to {
            return Err(CaseError::Invalid { message: format!("line {} is a self-loop", line.id) });
        }
        if !(line.admittance > 0.0) {
            return Err(CaseError::Invalid {
                message: format!("line {} admittance must be positive", line.id),
            });
        }
        if !(line.capacity > 0.0) {
            return Err(CaseError::Invalid {
                message: format!("line {} capacity must be positive", line.id),
            });
        }
    }
    if !bus_ok(case.slack_bus) {
        return Err(CaseError::DanglingBus { section: "slack", bus: case.slack_bus });
    }

    // Generators: one per bus, flags consistent, sane limits.
    let mut gen_seen = vec![false; b];
    for g in &case.generators {
        if !bus_ok(g.bus) {
            return Err(CaseError::DanglingBus { section: "generators", bus: g.bus });
        }
        if gen_seen[g.bus - 1] {
            return Err(CaseError::Invalid {
                message: format!("bus {} has more than one generator", g.bus),
            });
        }
        gen_seen[g.bus - 1] = true;
        if !case.buses[g.bus - 1].is_generator {
            return Err(CaseError::Invalid {
                message: format!("generator record at bus {} but bus not flagged as generator", g.bus),
            });
        }
        if !(0.0 <= g.p_min && g.p_min <= g.p_max) {
            return Err(CaseError::Invalid {
                message: format!("generator at bus {}: need 0 <= p_min <= p_max", g.bus),
            });
        }
    }
    for bus in &case.buses {
        if bus.is_generator && !gen_seen[bus.id - 1] {
            return Err(CaseError::Invalid {
                message: format!("bus {} flagged as generator but has no generator record", bus.id),
            });
        }
    }

    // Loads: one per bus, flags consistent, bounds order.
    let mut load_seen = vec![false; b];
    for ld in &case.loads {
        if !bus_ok(ld.bus) {
            return Err(CaseError::DanglingBus { section: "loads", bus: ld.bus });
        }
        if load_seen[ld.bus - 1] {
            return Err(CaseError::Invalid { message: format!("bus {} has more than one load record", ld.bus) });
        }
        load_seen[ld.bus - 1] = true;
        if !case.buses[ld.bus - 1].is_load {
            return Err(CaseError::Invalid {
                message: format!("load record at bus {} but bus not flagged as load", ld.bus),
            });
        }
        if !(ld.min <= ld.current && ld.current <= ld.max) {
            return Err(CaseError::Invalid {
                message: format!("load at bus {}: need min <= current <= max", ld.bus),
            });
        }
    }
    for bus in &case.buses {
        if bus.is_load && !load_seen[bus.id - 1] {
            return Err(CaseError::Invalid {
                message: format!("bus {} flagged as load but has no load record", bus.id),
            });
        }
    }

    // Measurements: exactly m = 2l + b, contiguous indices.
    let m = 2 * l + b;
    if case.measurements.len() != m {
        return Err(CaseError::MeasurementCountMismatch { expected: m, found: case.measurements.len() });
    }
    for (i, meas) in case.measurements.iter().enumerate() {
        if meas.index != i + 1 {
            return Err(CaseError::Invalid {
                message: format!("measurement indices must be contiguous from 1; record {} has index {}", i + 1, meas.index),
            });
        }
    }

    // Connectivity (BFS over the line graph).
    if b > 1 {
        let mut adj = vec![Vec::new(); b];
        for line in &case.lines {
            adj[line.from0()].push(line.to0());
            adj[line.to0()].push(line.from0());
        }
        let mut seen = vec![false; b];
        let mut queue = vec![0usize];
        seen[0] = true;
        while let Some(u) = queue.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push(v);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(CaseError::Disconnected);
        }
    }

    // Adequacy: capacity must cover current load.
    let cap: f64 = case.generators.iter().map(|g| g.p_max).sum();
    let load = case.total_load();
    if cap < load - 1e-9 {
        return Err(CaseError::Invalid {
            message: format!("total generation capacity {cap} below total load {load}"),
        });
    }

    let al = &case.attacker_limits;
    for (name, v) in [("delta_b", al.delta_b), ("delta_l", al.delta_l)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CaseError::Invalid { message: format!("{name} must lie in [0, 1]") });
        }
    }
    if al.target_line_fraction < 0.0 {
        return Err(CaseError::Invalid { message: "target_line_fraction must be non-negative".to_string() });
    }
    Ok(())
}

fn push_f64(out: &mut String, v: f64) {
    // Shortest round-trip formatting keeps parse(serialize(x)) exact.
    out.push_str(&format!("{v}"));
}

/// Serialize a validated case to canonical text. Output reparses to an equal
/// structure and is byte-stable.
pub fn serialize_case(case: &GridCase) -> Result<String, CaseError> {
    validate_case(case)?;
    let mut out = String::new();
    out.push_str("# Topology (Line) Information\n");
    out.push_str("# (line no, from bus, to bus, admittance, line capacity)\n");
    for l in &case.lines {
        out.push_str(&format!("{} {} {} ", l.id, l.from, l.to));
        push_f64(&mut out, l.admittance);
        out.push(' ');
        push_f64(&mut out, l.capacity);
        out.push('\n');
    }
    out.push_str("\n# Bus Types (bus no, is generator?, is load?)\n");
    for bus in &case.buses {
        out.push_str(&format!("{} {} {}\n", bus.id, bus.is_generator as u8, bus.is_load as u8));
    }
    out.push_str("\n# Generator Information (bus no, max generation, min generation, cost coefficients)\n");
    for g in &case.generators {
        out.push_str(&format!("{} ", g.bus));
        push_f64(&mut out, g.p_max);
        out.push(' ');
        push_f64(&mut out, g.p_min);
        out.push(' ');
        push_f64(&mut out, g.alpha);
        out.push(' ');
        push_f64(&mut out, g.beta);
        out.push('\n');
    }
    out.push_str("\n# Load Information (bus no, existing load, max load, min load)\n");
    for ld in &case.loads {
        out.push_str(&format!("{} ", ld.bus));
        push_f64(&mut out, ld.current);
        out.push(' ');
        push_f64(&mut out, ld.max);
        out.push(' ');
        push_f64(&mut out, ld.min);
        out.push('\n');
    }
    out.push_str("\n# Measurement Information\n");
    out.push_str("# (measurement no, measurement taken?, secured?, can attacker alter?)\n");
    for meas in &case.measurements {
        out.push_str(&format!(
            "{} {} {} {}\n",
            meas.index, meas.taken as u8, meas.secured as u8, meas.alterable as u8
        ));
    }
    out.push_str("\n# Cost Constraint\n");
    match case.attacker_limits.cost_budget {
        Some(v) => {
            push_f64(&mut out, v);
            out.push('\n');
        }
        None => out.push_str("-1\n"),
    }
    out.push_str("\n# Attacker's Resource Limitation (measurements, buses)\n");
    out.push_str(&format!(
        "{} {}\n",
        case.attacker_limits.max_measurements, case.attacker_limits.max_buses
    ));
    out.push_str("\n# Maximum percent of delta load\n");
    push_f64(&mut out, case.attacker_limits.delta_b * 100.0);
    out.push('\n');
    out.push_str("\n# % of minimum Overloading amount, % of lines to be overloaded\n");
    push_f64(&mut out, case.attacker_limits.delta_l * 100.0);
    out.push(' ');
    push_f64(&mut out, case.attacker_limits.target_line_fraction * 100.0);
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_case_text() -> &'static str {
        "# Topology (Line) Information\n\
         1 1 2 5 1.0\n\
         # Bus Types (bus no, is generator?, is load?)\n\
         1 1 0\n\
         2 0 1\n\
         # Generator Information\n\
         1 2.0 0.0 10 100\n\
         # Load Information\n\
         2 1.0 1.5 0.1\n\
         # Measurement Information\n\
         1 1 0 1\n\
         2 1 0 1\n\
         3 1 0 1\n\
         4 1 0 1\n\
         # Cost Constraint\n\
         -1\n\
         # Attacker's Resource Limitation (measurements, buses)\n\
         4 2\n\
         # Maximum percent of delta load\n\
         20\n\
         # % of minimum Overloading amount, % of lines to be overloaded\n\
         5 50\n"
    }

    #[test]
    fn parses_the_paper_style_line_record() {
        let mut text = tiny_case_text().to_string();
        text = text.replace("1 1 2 5 1.0", "1    1    2    16.90    0.65");
        // Admittance/capacity change alone keeps the case valid.
        let case = parse_case(&text).unwrap();
        let line = &case.lines[0];
        assert_eq!((line.id, line.from, line.to), (1, 1, 2));
        assert_eq!(line.admittance, 16.90);
        assert_eq!(line.capacity, 0.65);
    }

    #[test]
    fn round_trips_structurally() {
        let case = parse_case(tiny_case_text()).unwrap();
        let text = serialize_case(&case).unwrap();
        let again = parse_case(&text).unwrap();
        assert_eq!(case, again);
        // Serialization is byte-stable.
        assert_eq!(text, serialize_case(&again).unwrap());
    }

    #[test]
    fn percentages_become_fractions() {
        let case = parse_case(tiny_case_text()).unwrap();
        assert_eq!(case.attacker_limits.delta_b, 0.20);
        assert_eq!(case.attacker_limits.delta_l, 0.05);
        assert_eq!(case.attacker_limits.target_line_fraction, 0.50);
        assert_eq!(case.attacker_limits.cost_budget, None);
        assert_eq!(case.target_line_count(), 1);
    }

    #[test]
    fn measurement_count_is_checked() {
        let text = tiny_case_text().replace("4 1 0 1\n", "");
        match parse_case(&text) {
            Err(CaseError::MeasurementCountMismatch { expected: 4, found: 3 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn disconnected_topology_is_named() {
        // Two islands: add bus 3 with no incident line.
        let text = tiny_case_text()
            .replace("2 0 1\n", "2 0 1\n3 0 0\n")
            .replace("4 1 0 1\n# Cost", "4 1 0 1\n5 1 0 1\n# Cost");
        assert_eq!(parse_case(&text), Err(CaseError::Disconnected));
    }

    #[test]
    fn malformed_record_reports_line_and_section() {
        let text = tiny_case_text().replace("1 1 2 5 1.0", "1 1 2 five 1.0");
        match parse_case(&text) {
            Err(CaseError::Malformed { line: 2, section: "lines", .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn out_of_order_section_is_rejected() {
        let text = tiny_case_text().replace("# Bus Types", "# Load Information\n# Bus Types");
        match parse_case(&text) {
            Err(CaseError::UnexpectedContent { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dangling_line_endpoint_is_rejected() {
        let text = tiny_case_text().replace("1 1 2 5 1.0", "1 1 9 5 1.0");
        match parse_case(&text) {
            Err(CaseError::DanglingBus { section: "lines", bus: 9 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn meter_buses_follow_the_indexing_scheme() {
        let case = parse_case(tiny_case_text()).unwrap();
        // m = 2l + b = 4: forward at bus 1, backward at bus 2, consumptions at 1, 2.
        assert_eq!(case.meter_bus(0), 0);
        assert_eq!(case.meter_bus(1), 1);
        assert_eq!(case.meter_bus(2), 0);
        assert_eq!(case.meter_bus(3), 1);
        assert_eq!(case.meas_kind(1), MeasKind::BackwardFlow(0));
    }
}
