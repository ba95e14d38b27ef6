//! Declarative scenario documents (JSON).

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use supermode_core::analysis::{DEFAULT_AMBIGUITY_MARGIN, DEFAULT_CONFIGURATION_CAP, DEFAULT_PATHWAY_CAP};
use supermode_core::model::{validate, Violation};
use supermode_core::{ChainSpec, ModelError, ScanGrid, Thresholds, ValidationReport};

use crate::error::CliError;

/// Default oracle tolerance (relative).
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// `T`, `R` and `T_ind` over the scan for every length set.
    Spectrum,
    /// Spectrum plus the refined `ΔT` peak of every length set.
    Superness,
    /// Peak `ΔT` and `ΔT/T` of uniform chains over a range of `N`.
    LengthScan,
    /// Reflection signatures of every atom configuration.
    Reflection,
    /// Pathway expansion of the transmission at one detuning.
    Pathways,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Superness => "superness",
            Task::LengthScan => "length_scan",
            Task::Reflection => "reflection",
            Task::Pathways => "pathways",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheck {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl Default for OracleCheck {
    fn default() -> Self {
        Self {
            enabled: false,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: Format,
    /// Output directory. Relative paths resolve against the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupernessSpec {
    /// Restrict the peak search to `[lo, hi]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthScanSpec {
    pub min_n: usize,
    pub max_n: usize,
    /// Spacing between neighbours (λ).
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectionSpec {
    /// Detunings at which every signature is sampled.
    #[serde(default)]
    pub landmarks: Vec<f64>,
    #[serde(default = "default_ambiguity")]
    pub ambiguity_margin: f64,
    #[serde(default = "default_configuration_cap")]
    pub max_subsystems: usize,
}

fn default_ambiguity() -> f64 {
    DEFAULT_AMBIGUITY_MARGIN
}
fn default_configuration_cap() -> usize {
    DEFAULT_CONFIGURATION_CAP
}

impl Default for ReflectionSpec {
    fn default() -> Self {
        Self {
            landmarks: Vec::new(),
            ambiguity_margin: DEFAULT_AMBIGUITY_MARGIN,
            max_subsystems: DEFAULT_CONFIGURATION_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathwaySpec {
    /// Probe detuning; the superness peak of the chain when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<f64>,
    #[serde(default = "default_max_bounces")]
    pub max_bounces: usize,
    #[serde(default = "default_pathway_cap")]
    pub cap: usize,
}

fn default_max_bounces() -> usize {
    20
}
fn default_pathway_cap() -> usize {
    DEFAULT_PATHWAY_CAP
}

impl Default for PathwaySpec {
    fn default() -> Self {
        Self {
            detuning: None,
            max_bounces: default_max_bounces(),
            cap: DEFAULT_PATHWAY_CAP,
        }
    }
}

/// Values chosen for parameters that have no reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub kappa_ex: f64,
    pub kappa_i: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub chain: ChainSpec,
    pub scan: ScanGrid,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub oracle_check: OracleCheck,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Alternative segment lengths, one series each. Empty means the
    /// chain's own lengths.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub length_sets: Vec<Vec<f64>>,
    #[serde(default)]
    pub superness: SupernessSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_scan: Option<LengthScanSpec>,
    #[serde(default)]
    pub reflection: ReflectionSpec,
    #[serde(default)]
    pub pathways: PathwaySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
}

impl Scenario {
    pub fn has_task(&self, task: Task) -> bool {
        self.tasks.contains(&task)
    }

    /// The chains evaluated by the spectrum and superness tasks, paired with
    /// their segment lengths.
    pub fn series(&self) -> Vec<ChainSpec> {
        if self.length_sets.is_empty() {
            return vec![self.chain.clone()];
        }
        self.length_sets
            .iter()
            .map(|lengths| ChainSpec {
                lengths: lengths.clone(),
                ..self.chain.clone()
            })
            .collect()
    }

    /// Every invariant of the scenario, with dotted paths.
    pub fn validate(&self) -> ValidationReport {
        let mut report = validate(&self.chain);
        let push = |report: &mut ValidationReport, path: &str, msg: &str| {
            report.violations.push(Violation::new(path, msg));
        };
        if let Err(ModelError::Invalid(r)) = ScanGrid::new(self.scan.start, self.scan.stop, self.scan.points) {
            report.extend(r);
        }
        if self.tasks.is_empty() {
            push(&mut report, "tasks", "at least one task required");
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if self.tasks[..i].contains(t) {
                push(&mut report, &format!("tasks[{i}]"), "duplicate task");
            }
        }
        let tol = self.oracle_check.tolerance;
        if !(tol.is_finite() && tol > 0.0) {
            push(&mut report, "oracle_check.tolerance", "must be finite and > 0");
        }
        let th = &self.thresholds;
        for (name, v) in [
            ("saturation", th.saturation),
            ("relative_floor", th.relative_floor),
            ("opacity", th.opacity),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                push(&mut report, &format!("thresholds.{name}"), "must be finite and >= 0");
            }
        }
        let n = self.chain.subsystems.len();
        for (i, set) in self.length_sets.iter().enumerate() {
            if set.len() + 1 != n.max(1) {
                push(
                    &mut report,
                    &format!("length_sets[{i}]"),
                    &format!("lengths.count ≠ N−1 (got {} lengths for {n} subsystems)", set.len()),
                );
            }
            if set.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                push(&mut report, &format!("length_sets[{i}]"), "lengths must be finite and > 0");
            }
        }
        for (key, w) in [
            ("superness.window", self.superness.window),
            ("length_scan.window", self.length_scan.and_then(|s| s.window)),
        ] {
            if let Some([lo, hi]) = w {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    push(&mut report, key, "must be [lo, hi] with lo < hi");
                }
            }
        }
        if self.has_task(Task::LengthScan) {
            match &self.length_scan {
                None => push(&mut report, "length_scan", "required by the length_scan task"),
                Some(s) => {
                    if s.min_n < 2 || s.max_n < s.min_n {
                        push(&mut report, "length_scan", "need 2 <= min_n <= max_n");
                    }
                    if !(s.length.is_finite() && s.length > 0.0) {
                        push(&mut report, "length_scan.length", "must be finite and > 0");
                    }
                }
            }
        }
        if self.has_task(Task::Reflection) {
            if n > self.reflection.max_subsystems {
                push(
                    &mut report,
                    "reflection.max_subsystems",
                    &format!("{n} subsystems exceed the configuration cap of {}", self.reflection.max_subsystems),
                );
            }
            if self.reflection.ambiguity_margin.is_nan() || self.reflection.ambiguity_margin < 0.0 {
                push(&mut report, "reflection.ambiguity_margin", "must be >= 0");
            }
        }
        if self.has_task(Task::Pathways) {
            if !self.pathways.max_bounces.is_multiple_of(2) {
                push(&mut report, "pathways.max_bounces", "must be even");
            }
            if self.pathways.detuning.is_some_and(|x| !x.is_finite()) {
                push(&mut report, "pathways.detuning", "must be finite");
            }
        }
        report
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    let report = scenario.validate();
    if report.is_valid() {
        Ok(scenario)
    } else {
        Err(CliError::Validation(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "chain": {"subsystems": [{"cavity": {"h": 0, "kappa_ex": 1, "kappa_i": 1}}]},
        "scan": {"start": -10, "stop": 10, "points": 21},
        "tasks": ["spectrum"]
    }"#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.chain.len(), 1);
        assert!(s.chain.lengths.is_empty());
        assert!(!s.oracle_check.enabled);
        assert_eq!(s.oracle_check.tolerance, DEFAULT_TOLERANCE);
        assert_eq!(s.output.format, Format::Csv);
        assert_eq!(s.thresholds, Thresholds::default());
        assert_eq!(s.pathways.max_bounces, 20);
    }

    #[test]
    fn lengths_mismatch_names_the_field() {
        let text = MINIMAL.replace(r#""subsystems""#, r#""lengths": [100.0], "subsystems""#);
        match parse_scenario(&text) {
            Err(CliError::Validation(r)) => {
                assert!(r.violations.iter().any(|v| v.path == "chain.lengths"), "{r}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_task_is_a_parse_error() {
        let text = MINIMAL.replace(r#"["spectrum"]"#, r#"["spectrum", "plot"]"#);
        match parse_scenario(&text) {
            Err(CliError::Parse { path, line, .. }) => {
                assert_eq!(path, "tasks[1]");
                assert!(line > 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_top_level_key_rejected() {
        let text = MINIMAL.replacen('{', r#"{"colour": 1,"#, 1);
        assert!(matches!(parse_scenario(&text), Err(CliError::Parse { .. })));
    }

    #[test]
    fn empty_task_list_rejected() {
        let text = MINIMAL.replace(r#"["spectrum"]"#, "[]");
        match parse_scenario(&text) {
            Err(CliError::Validation(r)) => assert!(r.violations.iter().any(|v| v.path == "tasks")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn length_scan_task_requires_section() {
        let text = MINIMAL.replace(r#"["spectrum"]"#, r#"["length_scan"]"#);
        match parse_scenario(&text) {
            Err(CliError::Validation(r)) => assert!(r.violations.iter().any(|v| v.path == "length_scan")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_loss_reported() {
        let text = MINIMAL.replace(r#""kappa_ex": 1, "kappa_i": 1"#, r#""kappa_ex": 0, "kappa_i": 0"#);
        match parse_scenario(&text) {
            Err(CliError::Validation(r)) => {
                assert!(r.violations.iter().any(|v| v.message.contains("total loss must be positive")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn length_sets_follow_chain_size() {
        let text = MINIMAL.replace(r#""tasks""#, r#""length_sets": [[1.0]], "tasks""#);
        match parse_scenario(&text) {
            Err(CliError::Validation(r)) => assert!(r.violations.iter().any(|v| v.path == "length_sets[0]")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trips_through_json() {
        let s = parse_scenario(MINIMAL).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(parse_scenario(&text).unwrap(), s);
    }
}
