//! Supermode quantification, pathway decomposition and reflection-based
//! identification of which cavities carry atoms.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{self, ChainResponse, DEFAULT_OPACITY_EPS};
use crate::error::SolveError;
use crate::model::{uniform_chain, ChainSpec, ScanGrid, SubsystemParams};
use crate::oracle;
use crate::resonator::{scattering_amplitudes, steady_state, SteadyState, DEFAULT_SATURATION_THRESHOLD};

/// Below this transmission the relative superness is reported as undefined.
pub const DEFAULT_RELATIVE_FLOOR: f64 = 1e-9;

/// Default cap on the number of enumerated pathways.
pub const DEFAULT_PATHWAY_CAP: usize = 100_000;

/// Default cap on the chain length for configuration enumeration.
pub const DEFAULT_CONFIGURATION_CAP: usize = 4;

/// Default classification margin below which a match is ambiguous.
pub const DEFAULT_AMBIGUITY_MARGIN: f64 = 0.01;

/// Numerical thresholds shared by the analysis routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `|σ⁻|²` above which a point is flagged as saturated.
    #[serde(default = "default_saturation")]
    pub saturation: f64,
    /// `ε_T`: transmission below which `ΔT/T` is undefined.
    #[serde(default = "default_relative_floor")]
    pub relative_floor: f64,
    /// `ε_t`: subsystem `|t|` below which the direct solver is used.
    #[serde(default = "default_opacity")]
    pub opacity: f64,
}

fn default_saturation() -> f64 {
    DEFAULT_SATURATION_THRESHOLD
}
fn default_relative_floor() -> f64 {
    DEFAULT_RELATIVE_FLOOR
}
fn default_opacity() -> f64 {
    DEFAULT_OPACITY_EPS
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            saturation: DEFAULT_SATURATION_THRESHOLD,
            relative_floor: DEFAULT_RELATIVE_FLOOR,
            opacity: DEFAULT_OPACITY_EPS,
        }
    }
}

/// Which solver produced a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolvePath {
    Transfer,
    Oracle,
}

/// Chain response plus the internal state of every cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResponse {
    pub response: ChainResponse,
    pub states: Vec<SteadyState>,
    pub path: SolvePath,
}

impl PointResponse {
    pub fn max_excitation(&self) -> f64 {
        self.states.iter().map(SteadyState::excitation).fold(0.0, f64::max)
    }
}

/// Evaluates one probe detuning through the transfer-matrix path, falling
/// back to the direct solve when a subsystem is opaque.
pub fn evaluate_point(spec: &ChainSpec, probe: f64, eps_t: f64) -> Result<PointResponse, SolveError> {
    spec.validated()?;
    let spec = spec.left_driven();
    let t_ind: f64 = chain::independent_transmission(&spec, probe)?;
    match chain::evaluate(&spec, probe, eps_t) {
        Ok(response) => {
            let states = chain::cavity_inputs(&spec, probe, eps_t)?
                .into_iter()
                .zip(&spec.subsystems)
                .map(|((a_in, b_in), sub)| steady_state(sub, probe, a_in, b_in))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(PointResponse {
                response,
                states,
                path: SolvePath::Transfer,
            })
        }
        Err(SolveError::Opaque { .. }) | Err(SolveError::DegenerateChain { .. }) => {
            let one = Complex64::new(1.0, 0.0);
            let sol = oracle::solve_full(&spec, probe, (one, Complex64::new(0.0, 0.0)))?;
            let t_total = sol.cavities.last().map(|c| c.a_out).unwrap_or_default();
            let r_total = sol.cavities[0].b_out;
            Ok(PointResponse {
                response: ChainResponse {
                    t_total,
                    r_total,
                    transmission: sol.transmission,
                    reflection: sol.reflection,
                    independent: Some(t_ind),
                },
                states: sol.cavities.iter().map(|c| c.state).collect(),
                path: SolvePath::Oracle,
            })
        }
        Err(e) => Err(e),
    }
}

/// Superness at one probe detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupernessPoint {
    pub detuning: f64,
    pub transmission: f64,
    pub reflection: f64,
    pub independent: f64,
    /// `ΔT = T − T_ind`
    pub delta_t: f64,
    /// `ΔT/T`, or `None` when `T` is below the relative floor.
    pub relative: Option<f64>,
    pub max_excitation: f64,
    pub saturated: bool,
}

impl SupernessPoint {
    fn from_point(detuning: f64, p: &PointResponse, thresholds: &Thresholds) -> Self {
        let transmission = p.response.transmission;
        let independent = p.response.independent.unwrap_or(0.0);
        let delta_t = transmission - independent;
        let max_excitation = p.max_excitation();
        Self {
            detuning,
            transmission,
            reflection: p.response.reflection,
            independent,
            delta_t,
            relative: (transmission >= thresholds.relative_floor).then(|| delta_t / transmission),
            max_excitation,
            saturated: max_excitation > thresholds.saturation,
        }
    }
}

/// Superness evaluated at a single detuning.
pub fn superness_at(spec: &ChainSpec, probe: f64, thresholds: &Thresholds) -> Result<SupernessPoint, SolveError> {
    let p = evaluate_point(spec, probe, thresholds.opacity)?;
    Ok(SupernessPoint::from_point(probe, &p, thresholds))
}

/// `ΔT` and `ΔT/T` at every grid point, in grid order.
pub fn superness_spectrum(
    spec: &ChainSpec,
    grid: &ScanGrid,
    thresholds: &Thresholds,
) -> Result<Vec<SupernessPoint>, SolveError> {
    spec.validated()?;
    grid.values()
        .into_par_iter()
        .map(|x| superness_at(spec, x, thresholds))
        .collect()
}

/// Indices of strict-or-plateau-left local maxima of `values`, including
/// endpoints that exceed their single neighbour.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] > values[i - 1];
            let right = i + 1 == n || values[i] >= values[i + 1];
            left && right && n > 1
        })
        .collect()
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// A refined spectral maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub detuning: f64,
    pub point: SupernessPoint,
}

/// Largest `ΔT` of the chain over `grid`, optionally restricted to
/// `window = (lo, hi)`, refined by golden-section search between the
/// neighbouring grid points.
pub fn superness_peak(
    spec: &ChainSpec,
    grid: &ScanGrid,
    window: Option<(f64, f64)>,
    thresholds: &Thresholds,
) -> Result<Option<Peak>, SolveError> {
    let spectrum = superness_spectrum(spec, grid, thresholds)?;
    peak_of_spectrum(spec, grid, &spectrum, window, thresholds)
}

pub(crate) fn peak_of_spectrum(
    spec: &ChainSpec,
    grid: &ScanGrid,
    spectrum: &[SupernessPoint],
    window: Option<(f64, f64)>,
    thresholds: &Thresholds,
) -> Result<Option<Peak>, SolveError> {
    let in_window = |x: f64| window.is_none_or(|(lo, hi)| x >= lo && x <= hi);
    let values: Vec<f64> = spectrum.iter().map(|p| p.delta_t).collect();
    let best = local_maxima(&values)
        .into_iter()
        .filter(|&i| in_window(spectrum[i].detuning))
        .max_by(|&i, &j| values[i].total_cmp(&values[j]));
    let Some(i) = best else {
        return Ok(None);
    };
    let lo = grid.value(i.saturating_sub(1));
    let hi = grid.value((i + 1).min(grid.points - 1));
    let mut failure = None;
    let (x, _) = golden_section_max(
        |x| match superness_at(spec, x, thresholds) {
            Ok(p) => p.delta_t,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        1e-7 * grid.step().max(1.0),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let refined = superness_at(spec, x, thresholds)?;
    // Refinement never loses to the grid sample it started from.
    let point = if refined.delta_t >= spectrum[i].delta_t {
        refined
    } else {
        spectrum[i]
    };
    Ok(Some(Peak {
        detuning: point.detuning,
        point,
    }))
}

/// Supermode strength for one chain length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthScanRow {
    pub n: usize,
    pub peak: Peak,
    /// Largest defined `ΔT/T` anywhere on the grid.
    pub max_relative: Option<f64>,
}

impl LengthScanRow {
    pub fn peak_delta_t(&self) -> f64 {
        self.peak.point.delta_t
    }

    /// `ΔT/T` at the `ΔT` peak.
    pub fn peak_relative(&self) -> Option<f64> {
        self.peak.point.relative
    }
}

/// Builds uniform chains for every count in `counts` and extracts the
/// supermode peak of each.
pub fn scan_chain_length(
    sub: &SubsystemParams,
    length: f64,
    counts: &[usize],
    grid: &ScanGrid,
    window: Option<(f64, f64)>,
    thresholds: &Thresholds,
) -> Result<Vec<LengthScanRow>, SolveError> {
    if counts.is_empty() || counts.iter().any(|&n| n < 2) {
        return Err(SolveError::BadLengthRange);
    }
    counts
        .iter()
        .map(|&n| {
            let spec = uniform_chain(n, *sub, length)?;
            let spectrum = superness_spectrum(&spec, grid, thresholds)?;
            let peak = peak_of_spectrum(&spec, grid, &spectrum, window, thresholds)?.unwrap_or(Peak {
                detuning: spectrum[0].detuning,
                point: spectrum[0],
            });
            let max_relative = spectrum
                .iter()
                .filter_map(|p| p.relative)
                .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
            Ok(LengthScanRow { n, peak, max_relative })
        })
        .collect()
}

/// One step of a light path through the chain. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathEvent {
    Transmit(usize),
    Reflect(usize),
    /// Segment between cavities `k` and `k + 1`, travelled left to right.
    Forward(usize),
    /// Segment between cavities `k` and `k + 1`, travelled right to left.
    Backward(usize),
}

impl fmt::Display for PathEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathEvent::Transmit(k) => write!(f, "t{}", k + 1),
            PathEvent::Reflect(k) => write!(f, "r{}", k + 1),
            PathEvent::Forward(k) => write!(f, ">{}", k + 1),
            PathEvent::Backward(k) => write!(f, "<{}", k + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pathway {
    pub events: Vec<PathEvent>,
    pub amplitude: Complex64,
    pub bounces: usize,
}

impl Pathway {
    pub fn descriptor(&self) -> String {
        self.events
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathwaySum {
    pub pathways: Vec<Pathway>,
    pub truncated_sum: Complex64,
}

/// Enumerates every path from the left input to the right output with at
/// most `max_bounces` reflections and sums their amplitudes.
pub fn pathways(spec: &ChainSpec, probe: f64, max_bounces: usize, cap: usize) -> Result<PathwaySum, SolveError> {
    if !max_bounces.is_multiple_of(2) {
        return Err(SolveError::OddBounces(max_bounces));
    }
    spec.validated()?;
    let spec = spec.left_driven();
    let responses = chain::subsystem_responses(&spec, probe)?;
    let phases: Vec<Complex64> = (0..spec.lengths.len())
        .map(|k| Complex64::from_polar(1.0, spec.phase(k)))
        .collect();

    struct Walker<'a> {
        responses: &'a [crate::resonator::ScatteringResponse],
        phases: &'a [Complex64],
        max_bounces: usize,
        cap: usize,
        out: Vec<Pathway>,
        events: Vec<PathEvent>,
    }

    impl Walker<'_> {
        // `forward`: light arrives at cavity `k` travelling left to right.
        fn visit(&mut self, k: usize, forward: bool, amp: Complex64, bounces: usize) -> Result<(), SolveError> {
            let last = self.responses.len() - 1;
            let resp = &self.responses[k];
            let remaining = self.max_bounces - bounces;

            // Transmit and keep direction.
            self.events.push(PathEvent::Transmit(k));
            let a = amp * resp.t;
            if forward {
                if k == last {
                    if self.out.len() >= self.cap {
                        return Err(SolveError::TooManyPathways { cap: self.cap });
                    }
                    self.out.push(Pathway {
                        events: self.events.clone(),
                        amplitude: a,
                        bounces,
                    });
                } else {
                    self.events.push(PathEvent::Forward(k));
                    self.visit(k + 1, true, a * self.phases[k], bounces)?;
                    self.events.pop();
                }
            } else if k > 0 && remaining > 0 {
                self.events.push(PathEvent::Backward(k - 1));
                self.visit(k - 1, false, a * self.phases[k - 1], bounces)?;
                self.events.pop();
            }
            self.events.pop();

            // Reflect and reverse direction.
            if remaining > 0 {
                self.events.push(PathEvent::Reflect(k));
                if forward {
                    // A backward-travelling path needs one more reflection.
                    if k > 0 && remaining >= 2 {
                        let a = amp * resp.r;
                        self.events.push(PathEvent::Backward(k - 1));
                        self.visit(k - 1, false, a * self.phases[k - 1], bounces + 1)?;
                        self.events.pop();
                    }
                } else if k < last {
                    let a = amp * resp.r_back;
                    self.events.push(PathEvent::Forward(k));
                    self.visit(k + 1, true, a * self.phases[k], bounces + 1)?;
                    self.events.pop();
                }
                self.events.pop();
            }
            Ok(())
        }
    }

    let mut walker = Walker {
        responses: &responses,
        phases: &phases,
        max_bounces,
        cap,
        out: Vec::new(),
        events: Vec::new(),
    };
    walker.visit(0, true, Complex64::new(1.0, 0.0), 0)?;
    let truncated_sum = walker.out.iter().map(|p| p.amplitude).sum();
    Ok(PathwaySum {
        pathways: walker.out,
        truncated_sum,
    })
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let w = (x + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Phase mismatch `arg r_a + arg r_b + 2φ` in `(−π, π]` of a double
/// reflection against the direct path. Zero is perfectly constructive.
pub fn constructive_condition(r_a: Complex64, r_b: Complex64, phi: f64) -> Result<f64, SolveError> {
    if r_a.norm() == 0.0 || r_b.norm() == 0.0 {
        return Err(SolveError::UndefinedPhase);
    }
    Ok(wrap_phase(r_a.arg() + r_b.arg() + 2.0 * phi))
}

/// Which cavities of a chain carry their atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtomConfiguration(pub Vec<bool>);

impl AtomConfiguration {
    pub fn all(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn none(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// Applies the configuration to `base`, removing atoms where the flag is
    /// false.
    pub fn apply(&self, base: &ChainSpec) -> ChainSpec {
        let mut spec = base.clone();
        for (sub, &on) in spec.subsystems.iter_mut().zip(&self.0) {
            if !on {
                sub.atom = None;
            }
        }
        spec
    }
}

impl fmt::Display for AtomConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let on: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i + 1).to_string())
            .collect();
        if on.is_empty() {
            write!(f, "none")
        } else {
            write!(f, "{}", on.join("+"))
        }
    }
}

/// A reflection spectrum on a scan grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSpectrum {
    pub grid: ScanGrid,
    pub values: Vec<f64>,
}

impl ReflectionSpectrum {
    pub fn compute(spec: &ChainSpec, grid: &ScanGrid, eps_t: f64) -> Result<Self, SolveError> {
        spec.validated()?;
        let values = grid
            .values()
            .into_par_iter()
            .map(|x| evaluate_point(spec, x, eps_t).map(|p| p.response.reflection))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { grid: *grid, values })
    }

    /// Value at the grid point closest to `detuning`.
    pub fn nearest(&self, detuning: f64) -> f64 {
        let i = ((detuning - self.grid.start) / self.grid.step()).round();
        let i = i.clamp(0.0, (self.grid.points - 1) as f64) as usize;
        self.values[i]
    }

    /// Largest pointwise difference between two spectra on the same grid.
    pub fn max_distance(&self, other: &ReflectionSpectrum) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFeatures {
    pub min_detuning: f64,
    pub min_value: f64,
    pub max_detuning: f64,
    pub max_value: f64,
}

impl SpectralFeatures {
    fn of(spectrum: &ReflectionSpectrum) -> Self {
        let xs = spectrum.grid.values();
        let (imin, imax) = spectrum.values.iter().enumerate().fold((0, 0), |(lo, hi), (i, v)| {
            (
                if *v < spectrum.values[lo] { i } else { lo },
                if *v > spectrum.values[hi] { i } else { hi },
            )
        });
        Self {
            min_detuning: xs[imin],
            min_value: spectrum.values[imin],
            max_detuning: xs[imax],
            max_value: spectrum.values[imax],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationSignature {
    pub configuration: AtomConfiguration,
    pub label: String,
    pub spectrum: ReflectionSpectrum,
    pub features: SpectralFeatures,
    /// `(detuning, R)` at each requested landmark, nearest grid point.
    pub landmarks: Vec<(f64, f64)>,
}

/// Reflection spectra for every atom on/off configuration of `base`.
///
/// Configurations are ordered by the bitmask with cavity 1 as the lowest
/// bit: none, 1, 2, 1+2, 3, ...
pub fn reflection_signatures(
    base: &ChainSpec,
    grid: &ScanGrid,
    landmarks: &[f64],
    eps_t: f64,
    cap: usize,
) -> Result<Vec<ConfigurationSignature>, SolveError> {
    base.validated()?;
    let n = base.len();
    if n > cap {
        return Err(SolveError::TooManyConfigurations { n, cap });
    }
    (0..1usize << n)
        .map(|mask| {
            let configuration = AtomConfiguration((0..n).map(|k| mask & (1 << k) != 0).collect());
            let spec = configuration.apply(base);
            let spectrum = ReflectionSpectrum::compute(&spec, grid, eps_t)?;
            let features = SpectralFeatures::of(&spectrum);
            let landmarks = landmarks.iter().map(|&x| (x, spectrum.nearest(x))).collect();
            Ok(ConfigurationSignature {
                label: configuration.to_string(),
                configuration,
                spectrum,
                features,
                landmarks,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: String,
    pub configuration: AtomConfiguration,
    /// Max-norm distance to the winning candidate.
    pub distance: f64,
    /// Runner-up distance minus winner distance; infinite with one candidate.
    pub margin: f64,
    pub ambiguous: bool,
}

/// Nearest candidate to `observed` under the maximum pointwise distance.
pub fn classify_configuration(
    observed: &ReflectionSpectrum,
    candidates: &[ConfigurationSignature],
    ambiguity_margin: f64,
) -> Result<Classification, SolveError> {
    if candidates.is_empty() {
        return Err(SolveError::NoCandidates);
    }
    let mut scored = Vec::with_capacity(candidates.len());
    for c in candidates {
        if c.spectrum.grid != observed.grid || c.spectrum.values.len() != observed.values.len() {
            return Err(SolveError::GridMismatch { label: c.label.clone() });
        }
        scored.push((observed.max_distance(&c.spectrum), c));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (distance, winner) = scored[0];
    let margin = scored.get(1).map_or(f64::INFINITY, |(d, _)| d - distance);
    Ok(Classification {
        label: winner.label.clone(),
        configuration: winner.configuration.clone(),
        distance,
        margin,
        ambiguous: margin < ambiguity_margin,
    })
}

/// `|t|` and `|r|` of every subsystem at `probe`, for monitoring how evenly
/// light is split at a spectral feature.
pub fn split_ratios(spec: &ChainSpec, probe: f64) -> Result<Vec<(f64, f64)>, SolveError> {
    spec.subsystems
        .iter()
        .map(|s| scattering_amplitudes(s, probe).map(|r| (r.t.norm(), r.r.norm())))
        .collect()
}
