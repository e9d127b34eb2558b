//! File plumbing: atomic output writes and the on-disk attack-vector format.
//!
//! Attack vectors travel between `synthesize` and `verify` as a line-oriented
//! `key = value` file. Floats use shortest round-trip formatting, so a
//! write/read cycle reproduces the vector bit for bit. Bus, line and
//! measurement ids are 1-based, matching the case-file convention.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gridthreat_core::attack_synthesis::AttackVector;
use gridthreat_core::grid_model::GridCase;

/// Write `bytes` to `path` via a temporary sibling and rename, so readers
/// never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let name = path
        .file_name()
        .with_context(|| format!("output path {} has no file name", path.display()))?
        .to_string_lossy()
        .into_owned();
    let tmp = dir.join(format!(".{}.{}.tmp", name, std::process::id()));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))?;
    Ok(())
}

fn push_floats(out: &mut String, key: &str, values: &[f64]) {
    let joined: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    let _ = writeln!(out, "{key} = {}", joined.join(","));
}

fn push_indices(out: &mut String, key: &str, flags: &[bool]) {
    let ids: Vec<String> = flags
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| format!("{}", i + 1))
        .collect();
    let _ = writeln!(out, "{key} = {}", ids.join(","));
}

/// Serialize an attack vector to the key = value exchange format.
pub fn format_attack_vector(case: &GridCase, vector: &AttackVector) -> String {
    let mut out = String::new();
    out.push_str("# attack vector (ids 1-based, quantities pu, cost dollars)\n");
    let _ = writeln!(out, "buses = {}", case.num_buses());
    let _ = writeln!(out, "lines = {}", case.num_lines());
    let _ = writeln!(out, "measurements = {}", case.num_measurements());
    push_indices(&mut out, "compromised", &vector.compromised);
    push_indices(&mut out, "corrupted", &vector.corrupted);
    push_indices(&mut out, "altered", &vector.altered);
    push_floats(&mut out, "delta_theta", &vector.delta_theta);
    push_floats(&mut out, "delta_line", &vector.delta_line);
    push_floats(&mut out, "delta_bus", &vector.delta_bus);
    push_floats(&mut out, "attacked_load", &vector.attacked_load);
    push_floats(&mut out, "corrupted_dispatch", &vector.corrupted_dispatch);
    let _ = writeln!(out, "corrupted_cost = {}", vector.corrupted_cost);
    let pairs: Vec<String> = vector
        .overload_pairs
        .iter()
        .map(|&(line, outage, excess)| format!("{}:{}:{}", line + 1, outage + 1, excess))
        .collect();
    let _ = writeln!(out, "overload_pairs = {}", pairs.join(","));
    out
}

fn parse_floats(key: &str, value: &str, expected: usize) -> Result<Vec<f64>> {
    let items: Vec<f64> = if value.is_empty() {
        Vec::new()
    } else {
        value
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .with_context(|| format!("{key}: bad float {s:?}"))
            })
            .collect::<Result<_>>()?
    };
    if items.len() != expected {
        bail!("{key}: expected {expected} values, found {}", items.len());
    }
    Ok(items)
}

fn parse_flags(key: &str, value: &str, len: usize) -> Result<Vec<bool>> {
    let mut flags = vec![false; len];
    if value.is_empty() {
        return Ok(flags);
    }
    for item in value.split(',') {
        let id: usize = item
            .trim()
            .parse()
            .with_context(|| format!("{key}: bad id {item:?}"))?;
        if id == 0 || id > len {
            bail!("{key}: id {id} out of range 1..={len}");
        }
        flags[id - 1] = true;
    }
    Ok(flags)
}

/// Parse the exchange format back into a vector, checking dimensions against
/// the case it is meant for.
pub fn parse_attack_vector(case: &GridCase, text: &str) -> Result<AttackVector> {
    let b = case.num_buses();
    let l = case.num_lines();
    let m = case.num_measurements();
    let mut vector = AttackVector {
        delta_theta: Vec::new(),
        delta_line: Vec::new(),
        delta_bus: Vec::new(),
        altered: Vec::new(),
        corrupted: Vec::new(),
        compromised: Vec::new(),
        attacked_load: Vec::new(),
        corrupted_dispatch: Vec::new(),
        corrupted_cost: f64::NAN,
        overload_pairs: Vec::new(),
    };
    let mut seen = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected key = value", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if seen.contains(&key.to_string()) {
            bail!("line {}: duplicate key {key}", lineno + 1);
        }
        seen.push(key.to_string());
        match key {
            "buses" | "lines" | "measurements" => {
                let expected = match key {
                    "buses" => b,
                    "lines" => l,
                    _ => m,
                };
                let found: usize = value.parse().with_context(|| format!("{key}: bad count"))?;
                if found != expected {
                    bail!("{key}: file says {found}, case has {expected}");
                }
            }
            "compromised" => vector.compromised = parse_flags(key, value, b)?,
            "corrupted" => vector.corrupted = parse_flags(key, value, b)?,
            "altered" => vector.altered = parse_flags(key, value, m)?,
            "delta_theta" => vector.delta_theta = parse_floats(key, value, b)?,
            "delta_line" => vector.delta_line = parse_floats(key, value, l)?,
            "delta_bus" => vector.delta_bus = parse_floats(key, value, b)?,
            "attacked_load" => vector.attacked_load = parse_floats(key, value, b)?,
            "corrupted_dispatch" => vector.corrupted_dispatch = parse_floats(key, value, b)?,
            "corrupted_cost" => {
                vector.corrupted_cost =
                    value.parse().with_context(|| format!("{key}: bad float"))?;
            }
            "overload_pairs" => {
                if value.is_empty() {
                    continue;
                }
                for item in value.split(',') {
                    let parts: Vec<&str> = item.trim().split(':').collect();
                    if parts.len() != 3 {
                        bail!("overload_pairs: expected line:outage:excess, found {item:?}");
                    }
                    let line_id: usize =
                        parts[0].parse().context("overload_pairs: bad line id")?;
                    let outage_id: usize =
                        parts[1].parse().context("overload_pairs: bad outage id")?;
                    let excess: f64 =
                        parts[2].parse().context("overload_pairs: bad excess")?;
                    if line_id == 0 || line_id > l || outage_id == 0 || outage_id > l {
                        bail!("overload_pairs: ids {item:?} out of range 1..={l}");
                    }
                    vector.overload_pairs.push((line_id - 1, outage_id - 1, excess));
                }
            }
            other => bail!("unknown key {other:?}"),
        }
    }
    for (key, have, expected) in [
        ("delta_theta", vector.delta_theta.len(), b),
        ("delta_line", vector.delta_line.len(), l),
        ("delta_bus", vector.delta_bus.len(), b),
        ("attacked_load", vector.attacked_load.len(), b),
        ("corrupted_dispatch", vector.corrupted_dispatch.len(), b),
        ("altered", vector.altered.len(), m),
        ("corrupted", vector.corrupted.len(), b),
        ("compromised", vector.compromised.len(), b),
    ] {
        if have != expected {
            bail!("missing or short key {key}: expected {expected} entries");
        }
    }
    if vector.corrupted_cost.is_nan() {
        bail!("missing key corrupted_cost");
    }
    Ok(vector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridthreat_core::attack_synthesis::{synthesize, SynthesisGoal, SynthesisOutcome};
    use gridthreat_core::fixtures::load_fixture;
    use gridthreat_core::solve_scopf;

    fn sample_vector() -> (GridCase, AttackVector) {
        let (case, _) = load_fixture("3bus").unwrap();
        let loads = case.load_vector();
        let pre = solve_scopf(&case, &loads).unwrap();
        let goal = SynthesisGoal::from_case(&case, &pre);
        match synthesize(&case, &pre, &goal).unwrap() {
            SynthesisOutcome::Sat(v) => (case, v),
            SynthesisOutcome::Unsat(_) => panic!("fixture attack should exist"),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let (case, vector) = sample_vector();
        let text = format_attack_vector(&case, &vector);
        let back = parse_attack_vector(&case, &text).unwrap();
        assert_eq!(back, vector);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let (case, vector) = sample_vector();
        let text = format_attack_vector(&case, &vector);
        let (other, _) = load_fixture("ieee14").unwrap();
        let err = parse_attack_vector(&other, &text).unwrap_err();
        assert!(err.to_string().contains("case has"), "{err}");
    }

    #[test]
    fn junk_keys_are_rejected() {
        let (case, _) = sample_vector();
        let err = parse_attack_vector(&case, "mystery = 3\n").unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("out.csv");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        let leftovers: Vec<_> = fs::read_dir(path.parent().unwrap())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty(), "temp files left behind");
    }
}
