//! Bundled example systems: a three-bus demonstration network and a
//! fourteen-bus test system, shipped as case-format text and parsed on demand.
//!
//! Each fixture comes with a manifest that records where every number comes
//! from. `Documented` values are taken from the systems' published parameter
//! tables; `StandardDataset` values fill gaps from the standard 14-bus
//! reactance set; `Fitted` values were chosen by us (and how is noted) so the
//! cases are complete and the documented operating points reproduce. Expected
//! values carry a tolerance class: hard goldens must reproduce exactly (tests
//! enforce them), soft annotations are recorded observations whose exact
//! reproduction depends on parameters the documentation leaves out.

use alloc::string::String;

use crate::grid_model::{parse_case, CaseError, GridCase};

/// Where a fixture number comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Stated in the system's published parameter tables.
    Documented,
    /// Taken from the standard 14-bus reactance/load dataset.
    StandardDataset,
    /// Chosen here to complete the case (rule noted in the field name).
    Fitted,
}

/// How strictly an expected value must reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceClass {
    /// Tests assert this value.
    HardGolden,
    /// Recorded observation; not asserted because the source data is partial.
    SoftAnnotation,
}

/// Provenance of one group of fields.
#[derive(Debug, Clone, Copy)]
pub struct ProvenanceNote {
    pub field: &'static str,
    pub provenance: Provenance,
}

/// An expected value attached to a fixture.
#[derive(Debug, Clone, Copy)]
pub struct Annotation {
    pub what: &'static str,
    pub value: f64,
    pub class: ToleranceClass,
}

/// Source notes and expected values for a bundled case.
#[derive(Debug, Clone, Copy)]
pub struct FixtureManifest {
    pub name: &'static str,
    pub notes: &'static [ProvenanceNote],
    pub annotations: &'static [Annotation],
}

#[derive(Debug, Clone, PartialEq)]
pub enum FixtureError {
    UnknownName { name: String },
    /// A bundled file failed validation; indicates a packaging defect.
    Corrupt(CaseError),
}

impl core::fmt::Display for FixtureError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FixtureError::UnknownName { name } => {
                write!(f, "unknown fixture `{name}` (available: 3bus, ieee14)")
            }
            FixtureError::Corrupt(e) => write!(f, "bundled fixture is invalid: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FixtureError {}

const THREE_BUS_TEXT: &str = include_str!("../fixtures/3bus.grid");
const IEEE14_TEXT: &str = include_str!("../fixtures/ieee14.grid");

const THREE_BUS_NOTES: &[ProvenanceNote] = &[
    ProvenanceNote { field: "line capacities (1100/1200/1200 MW)", provenance: Provenance::Documented },
    ProvenanceNote {
        field: "line admittances (12.70/6.15/17.70; fitted so the documented dispatch reproduces \
                the documented flows at angles 0/-0.4/-0.8)",
        provenance: Provenance::Fitted,
    },
    ProvenanceNote { field: "generator limits and cost coefficients", provenance: Provenance::Documented },
    ProvenanceNote { field: "present and rated loads", provenance: Provenance::Documented },
    ProvenanceNote { field: "minimum loads (0.01 pu floor)", provenance: Provenance::Fitted },
    ProvenanceNote { field: "attacker limits (9 measurements / 3 buses / 25% / 5% over / 33% of lines)", provenance: Provenance::Documented },
];

const THREE_BUS_ANNOTATIONS: &[Annotation] = &[
    Annotation { what: "cost of the documented dispatch (1800/1000/200 MW), $", value: 4430.0, class: ToleranceClass::HardGolden },
    Annotation { what: "optimal pre-attack cost (dispatch 1900/900/200 MW), $", value: 4330.0, class: ToleranceClass::HardGolden },
    Annotation { what: "dispatch cost on corrupted loads (2000/900/100 MW), $", value: 4130.0, class: ToleranceClass::HardGolden },
    Annotation { what: "base flow, line 1, documented dispatch (pu)", value: 5.08, class: ToleranceClass::HardGolden },
    Annotation { what: "base flow, line 2, documented dispatch (pu)", value: 4.92, class: ToleranceClass::HardGolden },
    Annotation { what: "base flow, line 3, documented dispatch (pu)", value: 7.08, class: ToleranceClass::HardGolden },
];

const IEEE14_NOTES: &[ProvenanceNote] = &[
    ProvenanceNote { field: "admittances, lines 1/2/3/19/20", provenance: Provenance::Documented },
    ProvenanceNote {
        field: "admittances, remaining lines (reciprocal standard reactances, 2 decimals)",
        provenance: Provenance::StandardDataset,
    },
    ProvenanceNote { field: "capacities, lines 1/2/3/6/19/20", provenance: Provenance::Documented },
    ProvenanceNote {
        field: "capacities, remaining lines (1.25x the worst base/post-outage flow at the \
                documented dispatch, rounded up to 2 decimals; line 14 sized for its generator)",
        provenance: Provenance::Fitted,
    },
    ProvenanceNote { field: "generators at buses 1/2/6/8", provenance: Provenance::Documented },
    ProvenanceNote {
        field: "generator at bus 3 (limits/coefficients chosen to make it the cheapest unit, \
                matching its documented dispatch share)",
        provenance: Provenance::Fitted,
    },
    ProvenanceNote { field: "loads at buses 2/3/13/14 (present and rated)", provenance: Provenance::Documented },
    ProvenanceNote { field: "present loads at remaining buses", provenance: Provenance::StandardDataset },
    ProvenanceNote { field: "rated loads at remaining buses (roughly 2.5x present)", provenance: Provenance::Fitted },
    ProvenanceNote { field: "minimum loads (0.01 pu floor)", provenance: Provenance::Fitted },
    ProvenanceNote {
        field: "measurement flags (all 54 taken, unsecured, alterable, per the narrative rather \
                than the partially-shown table rows)",
        provenance: Provenance::Documented,
    },
    ProvenanceNote { field: "attacker limits (20 measurements / 3 buses / 20% / 5% over / 5% of lines)", provenance: Provenance::Documented },
];

const IEEE14_ANNOTATIONS: &[Annotation] = &[
    Annotation { what: "total present load (pu)", value: 2.448, class: ToleranceClass::HardGolden },
    Annotation { what: "documented pre-attack cost ($; depends on undocumented coefficients)", value: 382.0, class: ToleranceClass::SoftAnnotation },
    Annotation { what: "documented pre-attack dispatch at bus 2 (pu)", value: 0.284, class: ToleranceClass::SoftAnnotation },
    Annotation { what: "documented pre-attack dispatch at bus 3 (pu)", value: 0.944, class: ToleranceClass::SoftAnnotation },
    Annotation { what: "documented pre-attack dispatch at bus 6 (pu)", value: 1.220, class: ToleranceClass::SoftAnnotation },
    Annotation { what: "reported post-contingency overload when line 3 trips (% above capacity, line 6)", value: 13.5, class: ToleranceClass::SoftAnnotation },
];

const MANIFESTS: [FixtureManifest; 2] = [
    FixtureManifest { name: "3bus", notes: THREE_BUS_NOTES, annotations: THREE_BUS_ANNOTATIONS },
    FixtureManifest { name: "ieee14", notes: IEEE14_NOTES, annotations: IEEE14_ANNOTATIONS },
];

/// Raw case-format text of a bundled fixture, if the name is known.
pub fn fixture_text(name: &str) -> Option<&'static str> {
    match name {
        "3bus" => Some(THREE_BUS_TEXT),
        "ieee14" => Some(IEEE14_TEXT),
        _ => None,
    }
}

/// Names of all bundled fixtures.
pub fn fixture_names() -> &'static [&'static str] {
    &["3bus", "ieee14"]
}

/// Parse a bundled case and return it with its manifest.
pub fn load_fixture(name: &str) -> Result<(GridCase, FixtureManifest), FixtureError> {
    let text = fixture_text(name)
        .ok_or_else(|| FixtureError::UnknownName { name: String::from(name) })?;
    let case = parse_case(text).map_err(FixtureError::Corrupt)?;
    let manifest = MANIFESTS.iter().find(|m| m.name == name).copied().unwrap();
    Ok((case, manifest))
}
