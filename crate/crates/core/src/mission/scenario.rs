//! Declarative mission description and its JSON schema.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::dynamics::MotionLimits;
use crate::stl::{GridError, TimeGrid};

/// Axis-aligned box, `lower < upper` componentwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3 {
    lower: [f64; 3],
    upper: [f64; 3],
}

impl Box3 {
    pub fn new(lower: [f64; 3], upper: [f64; 3]) -> Result<Self, ScenarioError> {
        if (0..3).all(|j| lower[j] < upper[j]) {
            Ok(Self { lower, upper })
        } else {
            Err(ScenarioError::Invalid(format!(
                "box lower {lower:?} must be strictly below upper {upper:?} on every axis"
            )))
        }
    }

    pub fn from_center_size(center: [f64; 3], size: [f64; 3]) -> Result<Self, ScenarioError> {
        let lower = std::array::from_fn(|j| center[j] - size[j] / 2.0);
        let upper = std::array::from_fn(|j| center[j] + size[j] / 2.0);
        Self::new(lower, upper)
    }

    pub fn lower(&self) -> [f64; 3] {
        self.lower
    }

    pub fn upper(&self) -> [f64; 3] {
        self.upper
    }

    pub fn center(&self) -> [f64; 3] {
        std::array::from_fn(|j| (self.lower[j] + self.upper[j]) / 2.0)
    }

    pub fn half_widths(&self) -> [f64; 3] {
        std::array::from_fn(|j| (self.upper[j] - self.lower[j]) / 2.0)
    }

    /// Strict interior membership.
    pub fn contains(&self, point: [f64; 3]) -> bool {
        (0..3).all(|j| self.lower[j] < point[j] && point[j] < self.upper[j])
    }

    /// Closed containment of another box.
    pub fn contains_box(&self, other: &Box3) -> bool {
        (0..3).all(|j| self.lower[j] <= other.lower[j] && other.upper[j] <= self.upper[j])
    }

    /// Open-interior overlap.
    pub fn intersects_open(&self, other: &Box3) -> bool {
        (0..3).all(|j| self.lower[j] < other.upper[j] && other.lower[j] < self.upper[j])
    }

    /// Closed overlap; true for abutting boxes sharing a face.
    pub fn intersects_closed(&self, other: &Box3) -> bool {
        (0..3).all(|j| self.lower[j] <= other.upper[j] && other.lower[j] <= self.upper[j])
    }

    pub fn translated(&self, offset: [f64; 3]) -> Box3 {
        Box3 {
            lower: std::array::from_fn(|j| self.lower[j] + offset[j]),
            upper: std::array::from_fn(|j| self.upper[j] + offset[j]),
        }
    }
}

/// Direction an operator accepts the vehicle from, relative to their heading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproachDirection {
    Front,
    Left,
    Right,
    Above,
    Below,
}

impl ApproachDirection {
    /// Unit vector of the direction given the operator's front vector.
    pub fn vector(self, front: [f64; 3]) -> [f64; 3] {
        match self {
            ApproachDirection::Front => front,
            // Left is the operator's left: front rotated +90 degrees about z.
            ApproachDirection::Left => [-front[1], front[0], 0.0],
            ApproachDirection::Right => [front[1], -front[0], 0.0],
            ApproachDirection::Above => [0.0, 0.0, 1.0],
            ApproachDirection::Below => [0.0, 0.0, -1.0],
        }
    }
}

/// How multiple approach preferences combine in the mission formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefCombinator {
    /// At least one preferred direction must hold at the handover start.
    #[default]
    Any,
    /// Every preferred direction must hold at the handover start.
    All,
}

/// A human operator with derived handover, behind, and preference regions.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub id: String,
    pub position: [f64; 3],
    pub heading: f64,
    /// Heading quantized to an axis-aligned unit vector.
    pub front: [f64; 3],
    pub handover_box: Box3,
    pub behind_box: Box3,
    pub preferences: Vec<(ApproachDirection, Box3)>,
    pub pref_combinator: PrefCombinator,
}

/// Validated mission description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub workspace: Box3,
    pub obstacles: Vec<Box3>,
    pub operators: Vec<Operator>,
    pub refill_stations: Vec<Box3>,
    pub depot: [f64; 3],
    pub capacity: u32,
    /// Mission horizon [s].
    pub mission_time: f64,
    /// Handover hold duration [s].
    pub handover_time: f64,
    /// Refill hold duration [s].
    pub refill_time: f64,
    pub grid: TimeGrid,
    pub limits: MotionLimits,
    /// Energy penalty weight `q` (the penalty matrix is `q · I`).
    pub energy_weight: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("operator heading {0} rad is not axis-aligned (multiple of pi/2)")]
    HeadingNotAxisAligned(f64),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Quantizes a yaw angle to the nearest axis direction.
///
/// Fails unless the heading is within 1e-6 rad of a multiple of pi/2.
pub fn quantize_heading(heading: f64) -> Result<[f64; 3], ScenarioError> {
    let quarter_turns = (heading / FRAC_PI_2).round();
    if (heading - quarter_turns * FRAC_PI_2).abs() > 1e-6 {
        return Err(ScenarioError::HeadingNotAxisAligned(heading));
    }
    Ok(match (quarter_turns as i64).rem_euclid(4) {
        0 => [1.0, 0.0, 0.0],
        1 => [0.0, 1.0, 0.0],
        2 => [-1.0, 0.0, 0.0],
        _ => [0.0, -1.0, 0.0],
    })
}

/// Axis-aligned box behind the operator: opposite their heading, starting at
/// the operator's plane and extending `depth` backwards, `width` across and
/// `height` vertically.
pub fn behind_region(
    position: [f64; 3],
    heading: f64,
    depth: f64,
    width: f64,
    height: f64,
) -> Result<Box3, ScenarioError> {
    if !(depth > 0.0 && width > 0.0 && height > 0.0) {
        return Err(ScenarioError::Invalid(format!(
            "behind region dimensions must be positive, got {depth}x{width}x{height}"
        )));
    }
    let front = quantize_heading(heading)?;
    let center = std::array::from_fn(|j| position[j] - front[j] * depth / 2.0);
    let size = if front[0] != 0.0 { [depth, width, height] } else { [width, depth, height] };
    Box3::from_center_size(center, size)
}

/// Default edge length of derived handover/preference/refill boxes [m].
pub const DEFAULT_BOX_SIZE: f64 = 1.0;
/// Default distance from operator to handover-box center, along heading [m].
pub const DEFAULT_HANDOVER_OFFSET: f64 = 1.0;
/// Default distance from handover center to a preference-box center [m].
/// Short of half a box edge, so the preference region strictly contains the
/// handover center and a hold at the center can satisfy it.
pub const DEFAULT_PREF_OFFSET: f64 = 0.4;
/// Default depth of the behind region [m].
pub const DEFAULT_BEHIND_DEPTH: f64 = 1.0;

mod file {
    //! Raw serde view of the scenario file.

    use super::*;

    #[derive(Debug, Serialize, Deserialize)]
    #[serde(untagged)]
    pub(super) enum BoxSpec {
        Bounds { lower: [f64; 3], upper: [f64; 3] },
        Centered {
            center: [f64; 3],
            #[serde(default = "unit_size")]
            size: [f64; 3],
        },
    }

    fn unit_size() -> [f64; 3] {
        [DEFAULT_BOX_SIZE; 3]
    }

    impl BoxSpec {
        pub(super) fn build(&self) -> Result<Box3, ScenarioError> {
            match self {
                BoxSpec::Bounds { lower, upper } => Box3::new(*lower, *upper),
                BoxSpec::Centered { center, size } => Box3::from_center_size(*center, *size),
            }
        }
    }

    #[derive(Debug, Serialize, Deserialize)]
    pub(super) struct OperatorSpec {
        #[serde(default)]
        pub id: Option<String>,
        pub position: [f64; 3],
        pub heading_rad: f64,
        pub preferences: Vec<ApproachDirection>,
        #[serde(default)]
        pub handover_box: Option<BoxSpec>,
        #[serde(default)]
        pub behind_box: Option<BoxSpec>,
        #[serde(default)]
        pub pref_boxes: Option<std::collections::BTreeMap<String, BoxSpec>>,
        #[serde(default)]
        pub pref_combinator: Option<PrefCombinator>,
    }

    #[derive(Debug, Serialize, Deserialize)]
    pub(super) struct TimesSpec {
        #[serde(rename = "T_N")]
        pub mission: f64,
        #[serde(rename = "T_han")]
        pub handover: f64,
        #[serde(rename = "T_rs")]
        pub refill: f64,
        #[serde(rename = "T_s")]
        pub sampling: f64,
    }

    #[derive(Debug, Serialize, Deserialize)]
    pub(super) struct LimitsSpec {
        pub v_max: f64,
        pub a_max: f64,
    }

    #[derive(Debug, Serialize, Deserialize)]
    pub(super) struct ScenarioFile {
        pub workspace: BoxSpec,
        #[serde(default)]
        pub obstacles: Vec<BoxSpec>,
        pub operators: Vec<OperatorSpec>,
        pub refill_stations: Vec<BoxSpec>,
        pub depot: [f64; 3],
        pub capacity: u32,
        pub times: TimesSpec,
        pub limits: LimitsSpec,
        #[serde(default = "default_energy_weight")]
        pub energy_weight: f64,
        #[serde(default)]
        pub pref_combinator: PrefCombinator,
    }

    pub(super) fn default_energy_weight() -> f64 {
        0.1
    }
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let raw: file::ScenarioFile = serde_json::from_str(text)?;
        Self::from_file(raw)
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self, ScenarioError> {
        let raw: file::ScenarioFile = serde_json::from_reader(reader)?;
        Self::from_file(raw)
    }

    fn from_file(raw: file::ScenarioFile) -> Result<Self, ScenarioError> {
        let workspace = raw.workspace.build()?;
        let obstacles =
            raw.obstacles.iter().map(file::BoxSpec::build).collect::<Result<Vec<_>, _>>()?;
        let refill_stations = raw
            .refill_stations
            .iter()
            .map(file::BoxSpec::build)
            .collect::<Result<Vec<_>, _>>()?;

        if raw.capacity == 0 {
            return Err(ScenarioError::Invalid("payload capacity must be at least 1".into()));
        }
        if raw.energy_weight < 0.0 {
            return Err(ScenarioError::Invalid("energy_weight must be non-negative".into()));
        }

        let limits = MotionLimits::new(raw.limits.v_max, raw.limits.a_max)
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;

        let times = &raw.times;
        if !(times.handover > 0.0 && times.refill > 0.0) {
            return Err(ScenarioError::Invalid("hold durations must be positive".into()));
        }
        if times.handover >= times.mission || times.refill >= times.mission {
            return Err(ScenarioError::Invalid(
                "hold durations must be shorter than the mission time".into(),
            ));
        }
        let grid = TimeGrid::from_horizon(times.sampling, times.mission)?;
        if (grid.horizon() - times.mission).abs() > 1e-9 {
            return Err(ScenarioError::Invalid(format!(
                "mission time {} is not a whole number of sampling periods {}",
                times.mission, times.sampling
            )));
        }

        let mut ids = BTreeSet::new();
        let mut operators = Vec::with_capacity(raw.operators.len());
        for (index, spec) in raw.operators.iter().enumerate() {
            let operator = build_operator(spec, index, raw.pref_combinator)?;
            if !ids.insert(operator.id.clone()) {
                return Err(ScenarioError::Invalid(format!("duplicate operator id `{}`", operator.id)));
            }
            operators.push(operator);
        }

        let scenario = Scenario {
            workspace,
            obstacles,
            operators,
            refill_stations,
            depot: raw.depot,
            capacity: raw.capacity,
            mission_time: times.mission,
            handover_time: times.handover,
            refill_time: times.refill,
            grid,
            limits,
            energy_weight: raw.energy_weight,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if !self.workspace.contains(self.depot) {
            return Err(ScenarioError::Invalid("depot lies outside the workspace".into()));
        }
        for (i, station) in self.refill_stations.iter().enumerate() {
            if !self.workspace.contains_box(station) {
                return Err(ScenarioError::Invalid(format!(
                    "refill station {i} lies outside the workspace"
                )));
            }
        }
        for operator in &self.operators {
            if !self.workspace.contains_box(&operator.handover_box) {
                return Err(ScenarioError::Invalid(format!(
                    "handover box of `{}` lies outside the workspace",
                    operator.id
                )));
            }
            for (direction, pref_box) in &operator.preferences {
                if operator.behind_box.intersects_open(pref_box) {
                    return Err(ScenarioError::Invalid(format!(
                        "behind region of `{}` intersects its {direction:?} preference box",
                        operator.id
                    )));
                }
                if !pref_box.intersects_closed(&operator.handover_box) {
                    return Err(ScenarioError::Invalid(format!(
                        "{direction:?} preference box of `{}` does not touch its handover box",
                        operator.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Rigid translation of the whole scenario.
    pub fn translated(&self, offset: [f64; 3]) -> Scenario {
        let shift_point =
            |p: [f64; 3]| -> [f64; 3] { std::array::from_fn(|j| p[j] + offset[j]) };
        Scenario {
            workspace: self.workspace.translated(offset),
            obstacles: self.obstacles.iter().map(|b| b.translated(offset)).collect(),
            operators: self
                .operators
                .iter()
                .map(|op| Operator {
                    id: op.id.clone(),
                    position: shift_point(op.position),
                    heading: op.heading,
                    front: op.front,
                    handover_box: op.handover_box.translated(offset),
                    behind_box: op.behind_box.translated(offset),
                    preferences: op
                        .preferences
                        .iter()
                        .map(|(d, b)| (*d, b.translated(offset)))
                        .collect(),
                    pref_combinator: op.pref_combinator,
                })
                .collect(),
            refill_stations: self.refill_stations.iter().map(|b| b.translated(offset)).collect(),
            depot: shift_point(self.depot),
            ..self.clone()
        }
    }
}

fn build_operator(
    spec: &file::OperatorSpec,
    index: usize,
    default_combinator: PrefCombinator,
) -> Result<Operator, ScenarioError> {
    if spec.preferences.is_empty() {
        return Err(ScenarioError::Invalid(format!(
            "operator {index} needs at least one approach preference"
        )));
    }
    let id = spec.id.clone().unwrap_or_else(|| format!("op{}", index + 1));
    let front = quantize_heading(spec.heading_rad)?;

    let handover_box = match &spec.handover_box {
        Some(b) => b.build()?,
        None => Box3::from_center_size(
            std::array::from_fn(|j| spec.position[j] + front[j] * DEFAULT_HANDOVER_OFFSET),
            [DEFAULT_BOX_SIZE; 3],
        )?,
    };
    let behind_box = match &spec.behind_box {
        Some(b) => b.build()?,
        None => behind_region(
            spec.position,
            spec.heading_rad,
            DEFAULT_BEHIND_DEPTH,
            DEFAULT_BOX_SIZE,
            DEFAULT_BOX_SIZE,
        )?,
    };

    let mut seen = BTreeSet::new();
    let mut preferences = Vec::new();
    for &direction in &spec.preferences {
        if !seen.insert(direction) {
            continue;
        }
        let key = serde_json::to_value(direction)
            .expect("direction serializes")
            .as_str()
            .expect("direction serializes to a string")
            .to_string();
        let pref_box = match spec.pref_boxes.as_ref().and_then(|m| m.get(&key)) {
            Some(b) => b.build()?,
            None => {
                let dir = direction.vector(front);
                let han_center = handover_box.center();
                Box3::from_center_size(
                    std::array::from_fn(|j| han_center[j] + dir[j] * DEFAULT_PREF_OFFSET),
                    [DEFAULT_BOX_SIZE; 3],
                )?
            }
        };
        preferences.push((direction, pref_box));
    }

    Ok(Operator {
        id,
        position: spec.position,
        heading: spec.heading_rad,
        front,
        handover_box,
        behind_box,
        preferences,
        pref_combinator: spec.pref_combinator.unwrap_or(default_combinator),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn behind_region_examples() {
        // Facing -x: the behind region sits on the +x side.
        let b = behind_region([0.0; 3], PI, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(b.lower()[0], 0.0, epsilon = 1e-9);
        assert_relative_eq!(b.upper()[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(b.lower()[1], -0.5);
        assert_relative_eq!(b.upper()[1], 0.5);
        assert_relative_eq!(b.lower()[2], -0.5);

        // Facing +x mirrors to the -x side.
        let b = behind_region([0.0; 3], 0.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(b.lower()[0], -1.0, epsilon = 1e-9);
        assert_relative_eq!(b.upper()[0], 0.0, epsilon = 1e-9);

        assert!(matches!(
            behind_region([0.0; 3], PI / 4.0, 1.0, 1.0, 1.0),
            Err(ScenarioError::HeadingNotAxisAligned(_))
        ));
    }

    #[test]
    fn heading_quantization_accepts_near_multiples() {
        assert_eq!(quantize_heading(0.0).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(quantize_heading(FRAC_PI_2).unwrap(), [0.0, 1.0, 0.0]);
        assert_eq!(quantize_heading(PI).unwrap(), [-1.0, 0.0, 0.0]);
        assert_eq!(quantize_heading(-FRAC_PI_2).unwrap(), [0.0, -1.0, 0.0]);
        assert_eq!(quantize_heading(2.0 * PI + 1e-7).unwrap(), [1.0, 0.0, 0.0]);
        assert!(quantize_heading(0.3).is_err());
    }

    #[test]
    fn box_relations() {
        let a = Box3::new([0.0; 3], [1.0; 3]).unwrap();
        let b = Box3::new([1.0, 0.0, 0.0], [2.0, 1.0, 1.0]).unwrap();
        assert!(!a.intersects_open(&b));
        assert!(a.intersects_closed(&b));
        assert!(a.contains([0.5; 3]));
        assert!(!a.contains([1.0, 0.5, 0.5]));
        assert!(Box3::new([0.0; 3], [0.0, 1.0, 1.0]).is_err());
    }

    fn minimal_scenario_json() -> serde_json::Value {
        serde_json::json!({
            "workspace": {"lower": [-5.0, -5.0, 0.0], "upper": [5.0, 5.0, 3.0]},
            "obstacles": [],
            "operators": [
                {"position": [2.0, 0.0, 1.0], "heading_rad": PI, "preferences": ["left", "right"]}
            ],
            "refill_stations": [{"center": [-1.0, 0.0, 1.0]}],
            "depot": [0.0, 0.0, 1.0],
            "capacity": 1,
            "times": {"T_N": 23.0, "T_han": 3.0, "T_rs": 3.0, "T_s": 0.05},
            "limits": {"v_max": 1.1, "a_max": 1.1}
        })
    }

    #[test]
    fn parses_and_derives_geometry() {
        let scenario = Scenario::from_json_str(&minimal_scenario_json().to_string()).unwrap();
        assert_eq!(scenario.grid.sample_count(), 461);
        assert_relative_eq!(scenario.energy_weight, 0.1);
        let op = &scenario.operators[0];
        assert_eq!(op.id, "op1");
        // Facing -x: handover box centered one meter in front.
        assert_relative_eq!(op.handover_box.center()[0], 1.0);
        assert_eq!(op.preferences.len(), 2);
        assert_eq!(op.pref_combinator, PrefCombinator::Any);
        // Left of an operator facing -x points toward -y.
        let (direction, pref_box) = &op.preferences[0];
        assert_eq!(*direction, ApproachDirection::Left);
        assert_relative_eq!(pref_box.center()[1], -0.4);
        assert!(pref_box.contains(op.handover_box.center()));
    }

    #[test]
    fn rejects_inconsistent_times_and_geometry() {
        let mut bad = minimal_scenario_json();
        bad["times"]["T_han"] = serde_json::json!(30.0);
        assert!(Scenario::from_json_str(&bad.to_string()).is_err());

        let mut bad = minimal_scenario_json();
        bad["depot"] = serde_json::json!([20.0, 0.0, 1.0]);
        assert!(Scenario::from_json_str(&bad.to_string()).is_err());

        let mut bad = minimal_scenario_json();
        bad["operators"][0]["preferences"] = serde_json::json!([]);
        assert!(Scenario::from_json_str(&bad.to_string()).is_err());

        let mut bad = minimal_scenario_json();
        bad["operators"][0]["heading_rad"] = serde_json::json!(0.7);
        assert!(Scenario::from_json_str(&bad.to_string()).is_err());
    }

    #[test]
    fn translation_is_rigid() {
        let scenario = Scenario::from_json_str(&minimal_scenario_json().to_string()).unwrap();
        let moved = scenario.translated([1.0, -2.0, 0.5]);
        assert_relative_eq!(moved.depot[0], 1.0);
        assert_relative_eq!(
            moved.operators[0].handover_box.center()[1],
            scenario.operators[0].handover_box.center()[1] - 2.0
        );
    }
}
