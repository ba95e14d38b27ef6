//! Domain types for atom-cavity chains.
//!
//! Rates are expressed in units of the atomic decay rate `gamma` and lengths in
//! units of the probe wavelength. A probe scan shifts every cavity and atom
//! detuning by a common amount: subsystem `n` evaluated at probe detuning `x`
//! sees a cavity detuning `cavity.delta0 + x` and an atomic detuning
//! `atom.delta0 + x`.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// A single whispering-gallery resonator described by two counterpropagating
/// modes coupled to the fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Cavity-laser detuning offset applied on top of the probe detuning.
    #[serde(default)]
    pub delta0: f64,
    /// Intermodal scattering rate between the counterpropagating modes.
    pub h: f64,
    /// Coupling rate to the fiber.
    pub kappa_ex: f64,
    /// Intrinsic loss rate.
    pub kappa_i: f64,
}

impl CavityParams {
    pub fn new(h: f64, kappa_ex: f64, kappa_i: f64) -> Self {
        Self {
            delta0: 0.0,
            h,
            kappa_ex,
            kappa_i,
        }
    }

    /// Total field decay rate `kappa_i + kappa_ex`.
    pub fn kappa(&self) -> f64 {
        self.kappa_i + self.kappa_ex
    }
}

/// A two-level atom in the evanescent field of a resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// Atom-laser detuning offset applied on top of the probe detuning.
    #[serde(default)]
    pub delta0: f64,
    /// Decay rate of the atomic coherence. The unit of every other rate.
    #[serde(default = "unit_gamma")]
    pub gamma: f64,
    /// Coupling to the symmetric normal mode `A = (a + b)/sqrt(2)`.
    #[serde(default)]
    pub g_a: f64,
    /// Coupling to the antisymmetric normal mode `B = (a - b)/sqrt(2)`.
    #[serde(default)]
    pub g_b: f64,
}

fn unit_gamma() -> f64 {
    1.0
}

impl AtomParams {
    /// Atom coupled only to the `B` normal mode, the configuration used for
    /// every bundled scenario.
    pub fn coupled_to_b(g_b: f64) -> Self {
        Self {
            delta0: 0.0,
            gamma: 1.0,
            g_a: 0.0,
            g_b,
        }
    }

    pub fn is_coupled(&self) -> bool {
        self.g_a != 0.0 || self.g_b != 0.0
    }
}

/// One resonator together with an optional atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsystemParams {
    pub cavity: CavityParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<AtomParams>,
}

impl SubsystemParams {
    pub fn empty(cavity: CavityParams) -> Self {
        Self { cavity, atom: None }
    }

    pub fn with_atom(cavity: CavityParams, atom: AtomParams) -> Self {
        Self {
            cavity,
            atom: Some(atom),
        }
    }

    /// Same resonator with the atom removed.
    pub fn without_atom(&self) -> Self {
        Self::empty(self.cavity)
    }

    pub(crate) fn violations(&self, path: &str, out: &mut Vec<Violation>) {
        let c = &self.cavity;
        let mut check = |ok: bool, field: &str, message: &str| {
            if !ok {
                out.push(Violation::new(format!("{path}.{field}"), message));
            }
        };
        check(c.delta0.is_finite(), "cavity.delta0", "must be finite");
        check(c.h.is_finite() && c.h >= 0.0, "cavity.h", "must be finite and >= 0");
        check(
            c.kappa_ex.is_finite() && c.kappa_ex >= 0.0,
            "cavity.kappa_ex",
            "must be finite and >= 0",
        );
        check(
            c.kappa_i.is_finite() && c.kappa_i >= 0.0,
            "cavity.kappa_i",
            "must be finite and >= 0",
        );
        check(c.kappa() > 0.0, "cavity", "total loss must be positive");
        if let Some(a) = &self.atom {
            check(a.delta0.is_finite(), "atom.delta0", "must be finite");
            check(a.gamma.is_finite() && a.gamma > 0.0, "atom.gamma", "must be > 0");
            check(a.g_a.is_finite() && a.g_a >= 0.0, "atom.g_a", "must be finite and >= 0");
            check(a.g_b.is_finite() && a.g_b >= 0.0, "atom.g_b", "must be finite and >= 0");
        }
    }
}

/// End of the chain that receives the probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Drive {
    /// Probe enters cavity 1 travelling forward; nothing enters at cavity N.
    #[default]
    Left,
    /// Probe enters cavity N travelling backward.
    Right,
}

/// An ordered chain of subsystems joined by fiber segments.
///
/// `lengths[n]` is the distance between the fiber coupling points of
/// subsystems `n` and `n + 1`, in wavelengths. The same length is used for
/// both propagation directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub subsystems: Vec<SubsystemParams>,
    #[serde(default)]
    pub lengths: Vec<f64>,
    #[serde(default)]
    pub drive: Drive,
}

impl ChainSpec {
    pub fn new(subsystems: Vec<SubsystemParams>, lengths: Vec<f64>) -> Self {
        Self {
            subsystems,
            lengths,
            drive: Drive::Left,
        }
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    /// Propagation phase of segment `n`, reduced to `[0, 2pi)`.
    pub fn phase(&self, n: usize) -> f64 {
        segment_phase(self.lengths[n])
    }

    /// Subsystems and segments in reverse order. The drive setting is kept.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.subsystems.reverse();
        out.lengths.reverse();
        out
    }

    /// The chain in the orientation where the probe enters from the left.
    pub fn left_driven(&self) -> Self {
        match self.drive {
            Drive::Left => self.clone(),
            Drive::Right => {
                let mut m = self.mirrored();
                m.drive = Drive::Left;
                m
            }
        }
    }

    /// Checks every invariant and returns `Ok(())` or the validation report
    /// wrapped in an error.
    pub fn validated(&self) -> Result<(), ModelError> {
        let report = validate(self);
        if report.is_valid() {
            Ok(())
        } else {
            Err(ModelError::Invalid(report))
        }
    }
}

/// Phase `2 pi L` of a segment of length `L` wavelengths, reduced mod `2 pi`.
///
/// Only the fractional part of `L` matters; reducing before multiplying keeps
/// lengths like `100.3` from losing digits to the large integer part.
pub fn segment_phase(length: f64) -> f64 {
    TAU * length.rem_euclid(1.0)
}

/// Uniform probe-detuning grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl ScanGrid {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self, ModelError> {
        let grid = Self {
            start,
            stop,
            points,
        };
        let mut violations = Vec::new();
        grid.violations("scan", &mut violations);
        if violations.is_empty() {
            Ok(grid)
        } else {
            Err(ModelError::Invalid(ValidationReport { violations }))
        }
    }

    /// Grid with the given spacing between `start` and `stop` (inclusive).
    pub fn with_step(start: f64, stop: f64, step: f64) -> Result<Self, ModelError> {
        let n = ((stop - start) / step).round();
        if !n.is_finite() || n < 1.0 {
            return Err(ModelError::Invalid(ValidationReport {
                violations: vec![Violation::new("scan.step", "must produce at least 2 points")],
            }));
        }
        Self::new(start, stop, n as usize + 1)
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.points - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.stop
        } else {
            self.start + self.step() * i as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }

    pub(crate) fn violations(&self, path: &str, out: &mut Vec<Violation>) {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            out.push(Violation::new(format!("{path}.start"), "bounds must be finite"));
        } else if self.stop <= self.start {
            out.push(Violation::new(format!("{path}.stop"), "must exceed start"));
        }
        if self.points < 2 {
            out.push(Violation::new(format!("{path}.points"), "must be >= 2"));
        }
    }
}

/// A single failed invariant, addressed by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks a chain against every structural and parameter invariant.
pub fn validate(spec: &ChainSpec) -> ValidationReport {
    let mut violations = Vec::new();
    if spec.subsystems.is_empty() {
        violations.push(Violation::new("chain.subsystems", "at least one subsystem required"));
    }
    if spec.lengths.len() + 1 != spec.subsystems.len().max(1) {
        violations.push(Violation::new(
            "chain.lengths",
            format!(
                "lengths.count ≠ N−1 (got {} lengths for {} subsystems)",
                spec.lengths.len(),
                spec.subsystems.len()
            ),
        ));
    }
    for (i, l) in spec.lengths.iter().enumerate() {
        if !(l.is_finite() && *l > 0.0) {
            violations.push(Violation::new(format!("chain.lengths[{i}]"), "must be finite and > 0"));
        }
    }
    for (i, sub) in spec.subsystems.iter().enumerate() {
        sub.violations(&format!("chain.subsystems[{i}]"), &mut violations);
    }
    ValidationReport { violations }
}

/// A chain of `n` identical subsystems separated by equal segments.
pub fn uniform_chain(n: usize, sub: SubsystemParams, length: f64) -> Result<ChainSpec, ModelError> {
    if n == 0 {
        return Err(ModelError::EmptyChain);
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(ModelError::Invalid(ValidationReport {
            violations: vec![Violation::new("length", "must be finite and > 0")],
        }));
    }
    Ok(ChainSpec::new(vec![sub; n], vec![length; n - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub() -> SubsystemParams {
        SubsystemParams::with_atom(CavityParams::new(50.0, 40.0, 2.0), AtomParams::coupled_to_b(70.0))
    }

    #[test]
    fn two_cavity_chain_is_valid() {
        let spec = ChainSpec::new(vec![sub(), sub()], vec![100.3]);
        assert!(validate(&spec).is_valid());
    }

    #[test]
    fn missing_length_is_reported() {
        let spec = ChainSpec::new(vec![sub(), sub()], vec![]);
        let report = validate(&spec);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].path, "chain.lengths");
        assert!(report.violations[0].message.contains("lengths.count ≠ N−1"));
    }

    #[test]
    fn lossless_closed_cavity_is_rejected() {
        let mut s = sub();
        s.cavity.kappa_ex = 0.0;
        s.cavity.kappa_i = 0.0;
        let spec = ChainSpec::new(vec![s], vec![]);
        let report = validate(&spec);
        assert!(report
            .violations
            .iter()
            .any(|v| v.message == "total loss must be positive"));
    }

    #[test]
    fn validate_does_not_touch_input() {
        let spec = ChainSpec::new(vec![sub(), sub()], vec![-1.0]);
        let before = spec.clone();
        let _ = validate(&spec);
        assert_eq!(spec, before);
    }

    #[test]
    fn uniform_chain_shapes() {
        let one = uniform_chain(1, sub(), 100.2).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one.lengths.is_empty());

        let three = uniform_chain(3, sub(), 100.2).unwrap();
        assert_eq!(three.lengths, vec![100.2, 100.2]);

        let twenty = uniform_chain(20, sub(), 100.2).unwrap();
        assert_eq!(twenty.len(), 20);
        assert_eq!(twenty.lengths.len(), 19);

        assert!(matches!(uniform_chain(0, sub(), 100.2), Err(ModelError::EmptyChain)));
    }

    #[test]
    fn phase_uses_fractional_part() {
        let p = segment_phase(100.3);
        assert!((p - 0.6 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(segment_phase(7.0), 0.0);
    }

    #[test]
    fn grid_values_are_uniform_and_hit_endpoints() {
        let g = ScanGrid::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.values(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(ScanGrid::new(1.0, 1.0, 5).is_err());
        assert!(ScanGrid::new(0.0, 1.0, 1).is_err());
        let g = ScanGrid::with_step(-150.0, 150.0, 0.1).unwrap();
        assert_eq!(g.points, 3001);
    }

    #[test]
    fn mirrored_twice_is_identity() {
        let mut s2 = sub();
        s2.atom = None;
        let spec = ChainSpec::new(vec![sub(), s2, sub()], vec![100.1, 100.2]);
        assert_eq!(spec.mirrored().mirrored(), spec);
        assert_eq!(spec.mirrored().lengths, vec![100.2, 100.1]);
    }
}
