//! Case builders shared by unit tests.

use alloc::vec::Vec;

use rand::Rng;

use crate::grid_model::{
    validate_case, AttackerLimits, Bus, Generator, GridCase, Line, LoadSpec, MeasurementConfig,
};

fn default_limits() -> AttackerLimits {
    AttackerLimits {
        max_measurements: usize::MAX,
        max_buses: 3,
        delta_b: 0.2,
        delta_l: 0.05,
        target_line_fraction: 0.05,
        cost_budget: None,
    }
}

fn flesh_out(buses: Vec<Bus>, lines: Vec<Line>) -> GridCase {
    let m = 2 * lines.len() + buses.len();
    let generators = buses
        .iter()
        .filter(|b| b.is_generator)
        .map(|b| Generator { bus: b.id, p_min: 0.0, p_max: 1000.0, alpha: 0.0, beta: 1.0 })
        .collect();
    let loads = buses
        .iter()
        .filter(|b| b.is_load)
        .map(|b| LoadSpec { bus: b.id, current: 0.0, min: 0.0, max: 100.0 })
        .collect();
    let case = GridCase {
        buses,
        lines,
        generators,
        loads,
        measurements: (1..=m)
            .map(|index| MeasurementConfig { index, taken: true, secured: false, alterable: true })
            .collect(),
        attacker_limits: default_limits(),
        slack_bus: 1,
    };
    validate_case(&case).expect("test case must be valid");
    case
}

/// Three buses, lines (1-2), (1-3), (2-3), every bus both generator and load.
pub(crate) fn triangle_case(admittance: &[f64; 3], capacity: &[f64; 3]) -> GridCase {
    let buses = (1..=3).map(|id| Bus { id, is_generator: true, is_load: true }).collect();
    let ends = [(1, 2), (1, 3), (2, 3)];
    let lines = (0..3)
        .map(|i| Line {
            id: i + 1,
            from: ends[i].0,
            to: ends[i].1,
            admittance: admittance[i],
            capacity: capacity[i],
        })
        .collect();
    flesh_out(buses, lines)
}

/// Random connected topology: a spanning tree plus up to `max_extra` chords.
/// Every bus is both generator and load so callers can inject anywhere.
pub(crate) fn random_connected_case<R: Rng>(rng: &mut R, max_b: usize, max_extra: usize) -> GridCase {
    let b = rng.gen_range(2..=max_b);
    let buses: Vec<Bus> = (1..=b).map(|id| Bus { id, is_generator: true, is_load: true }).collect();
    let mut ends: Vec<(usize, usize)> = Vec::new();
    for j in 2..=b {
        ends.push((rng.gen_range(1..j), j));
    }
    for _ in 0..max_extra {
        let a = rng.gen_range(1..=b);
        let c = rng.gen_range(1..=b);
        let (lo, hi) = (a.min(c), a.max(c));
        if lo != hi && !ends.contains(&(lo, hi)) {
            ends.push((lo, hi));
        }
    }
    let lines = ends
        .into_iter()
        .enumerate()
        .map(|(i, (from, to))| Line {
            id: i + 1,
            from,
            to,
            admittance: rng.gen_range(0.5..20.0),
            capacity: 100.0,
        })
        .collect();
    flesh_out(buses, lines)
}

/// Copy of `case` with line `k0` removed (ids and measurements renumbered).
/// Only valid when the removal does not island the network.
pub(crate) fn without_line(case: &GridCase, k0: usize) -> GridCase {
    let mut lines = case.lines.clone();
    lines.remove(k0);
    for (i, line) in lines.iter_mut().enumerate() {
        line.id = i + 1;
    }
    let m = 2 * lines.len() + case.buses.len();
    let mut reduced = case.clone();
    reduced.lines = lines;
    reduced.measurements = (1..=m)
        .map(|index| MeasurementConfig { index, taken: true, secured: false, alterable: true })
        .collect();
    validate_case(&reduced).expect("line removal must not island the network");
    reduced
}

/// A path graph 1-2-...-b (every interior line is a bridge).
pub(crate) fn path_case(admittance: &[f64]) -> GridCase {
    let b = admittance.len() + 1;
    let buses = (1..=b).map(|id| Bus { id, is_generator: true, is_load: true }).collect();
    let lines = admittance
        .iter()
        .enumerate()
        .map(|(i, &d)| Line { id: i + 1, from: i + 1, to: i + 2, admittance: d, capacity: 100.0 })
        .collect();
    flesh_out(buses, lines)
}
