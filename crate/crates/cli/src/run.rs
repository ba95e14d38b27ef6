//! Executes the tasks of a scenario into an in-memory report.

use rayon::prelude::*;
use serde::Serialize;
use supermode_core::analysis::{
    self, classify_configuration, AtomConfiguration, evaluate_point, reflection_signatures, scan_chain_length, superness_peak,
    superness_spectrum, Classification, LengthScanRow, Pathway, SpectralFeatures,
};
use supermode_core::chain;
use supermode_core::oracle::{self, relative_difference};
use supermode_core::{ChainSpec, Complex64, SupernessPoint};

use crate::error::CliError;
use crate::scenario::{Scenario, Task};

/// `ΔT` and friends over the scan for one set of segment lengths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesResult {
    pub lengths: Vec<f64>,
    pub points: Vec<SupernessPoint>,
}

/// `|A_n|²` and `|B_n|²` of one cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModePopulation {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakSummary {
    pub series: usize,
    pub lengths: Vec<f64>,
    pub point: SupernessPoint,
    pub populations: Vec<ModePopulation>,
}

impl PeakSummary {
    /// Largest `|B_n|²/|A_n|²` over the cavities.
    pub fn max_b_over_a(&self) -> f64 {
        self.populations.iter().map(|p| p.b / p.a).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignatureSummary {
    pub label: String,
    pub configuration: AtomConfiguration,
    pub features: SpectralFeatures,
    pub landmarks: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionResult {
    pub signatures: Vec<SignatureSummary>,
    /// One reflection spectrum per signature, on the scenario grid.
    pub spectra: Vec<Vec<f64>>,
    /// Each configuration classified from its own spectrum.
    pub self_classification: Vec<Classification>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub max_bounces: usize,
    pub partial: Complex64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathwayResult {
    pub detuning: f64,
    pub lengths: Vec<f64>,
    pub exact: Complex64,
    pub pathways: Vec<Pathway>,
    pub convergence: Vec<ConvergenceRow>,
    /// `arg r_2 + arg r_1 + 2φ_1` wrapped to `(−π, π]`, for two subsystems.
    pub constructive_phase: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSummary {
    pub tolerance: f64,
    pub checked: usize,
    pub max_transmission: f64,
    pub max_reflection: f64,
    pub mismatches: usize,
}

impl OracleSummary {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: Scenario,
    pub series: Vec<SeriesResult>,
    pub peaks: Vec<PeakSummary>,
    pub length_scan: Option<Vec<LengthScanRow>>,
    pub reflection: Option<ReflectionResult>,
    pub pathways: Option<PathwayResult>,
    pub oracle: Option<OracleSummary>,
}

impl Report {
    pub fn saturated_points(&self) -> usize {
        self.series
            .iter()
            .flat_map(|s| &s.points)
            .filter(|p| p.saturated)
            .count()
    }

    /// Fails with an oracle mismatch if the check ran and did not pass.
    pub fn oracle_gate(&self) -> Result<(), CliError> {
        match self.oracle {
            Some(o) if !o.passed() => Err(CliError::OracleMismatch {
                count: o.mismatches,
                worst: o.max_transmission.max(o.max_reflection),
                tolerance: o.tolerance,
            }),
            _ => Ok(()),
        }
    }
}

/// One emitted quantity to cross-check against the direct solve.
struct Emitted<'a> {
    spec: &'a ChainSpec,
    detuning: f64,
    transmission: Option<f64>,
    reflection: f64,
}

fn window(w: Option<[f64; 2]>) -> Option<(f64, f64)> {
    w.map(|[lo, hi]| (lo, hi))
}

fn populations(spec: &ChainSpec, x: f64, eps_t: f64) -> Result<Vec<ModePopulation>, CliError> {
    Ok(evaluate_point(spec, x, eps_t)?
        .states
        .iter()
        .map(|s| ModePopulation {
            a: s.a_mode.norm_sqr(),
            b: s.b_mode.norm_sqr(),
        })
        .collect())
}

/// Runs every task of `scenario`. The oracle check, when enabled, is
/// recorded in the report; use [`Report::oracle_gate`] to act on it.
pub fn execute(scenario: &Scenario) -> Result<Report, CliError> {
    let report = scenario.validate();
    if !report.is_valid() {
        return Err(CliError::Validation(report));
    }
    let th = &scenario.thresholds;
    let grid = &scenario.scan;
    let chains = scenario.series();

    let mut series = Vec::new();
    let mut peaks = Vec::new();
    if scenario.has_task(Task::Spectrum) || scenario.has_task(Task::Superness) {
        for spec in &chains {
            series.push(SeriesResult {
                lengths: spec.lengths.clone(),
                points: superness_spectrum(spec, grid, th)?,
            });
        }
    }
    if scenario.has_task(Task::Superness) || scenario.has_task(Task::Pathways) {
        for (i, spec) in chains.iter().enumerate() {
            if let Some(peak) = superness_peak(spec, grid, window(scenario.superness.window), th)? {
                peaks.push(PeakSummary {
                    series: i,
                    lengths: spec.lengths.clone(),
                    point: peak.point,
                    populations: populations(spec, peak.detuning, th.opacity)?,
                });
            }
        }
    }

    let length_scan = match (scenario.has_task(Task::LengthScan), scenario.length_scan) {
        (true, Some(ls)) => {
            let counts: Vec<usize> = (ls.min_n..=ls.max_n).collect();
            Some(scan_chain_length(
                &scenario.chain.subsystems[0],
                ls.length,
                &counts,
                grid,
                window(ls.window),
                th,
            )?)
        }
        _ => None,
    };

    let reflection = if scenario.has_task(Task::Reflection) {
        let signatures = reflection_signatures(
            &scenario.chain,
            grid,
            &scenario.reflection.landmarks,
            th.opacity,
            scenario.reflection.max_subsystems,
        )?;
        let self_classification = signatures
            .iter()
            .map(|s| classify_configuration(&s.spectrum, &signatures, scenario.reflection.ambiguity_margin))
            .collect::<Result<Vec<_>, _>>()?;
        Some(ReflectionResult {
            spectra: signatures.iter().map(|s| s.spectrum.values.clone()).collect(),
            signatures: signatures
                .into_iter()
                .map(|s| SignatureSummary {
                    label: s.label,
                    configuration: s.configuration,
                    features: s.features,
                    landmarks: s.landmarks,
                })
                .collect(),
            self_classification,
        })
    } else {
        None
    };

    let pathways = if scenario.has_task(Task::Pathways) {
        Some(run_pathways(scenario, &chains, &peaks)?)
    } else {
        None
    };

    let oracle = if scenario.oracle_check.enabled {
        Some(check_oracle(
            scenario,
            &chains,
            &series,
            &peaks,
            length_scan.as_deref(),
            reflection.as_ref(),
            pathways.as_ref(),
        )?)
    } else {
        None
    };

    Ok(Report {
        scenario: scenario.clone(),
        series,
        peaks,
        length_scan,
        reflection,
        pathways,
        oracle,
    })
}

fn run_pathways(scenario: &Scenario, chains: &[ChainSpec], peaks: &[PeakSummary]) -> Result<PathwayResult, CliError> {
    let opts = &scenario.pathways;
    let (spec, detuning) = match opts.detuning {
        Some(x) => (&chains[0], x),
        None => {
            // The strongest supermode among the length sets.
            let best = peaks
                .iter()
                .max_by(|a, b| a.point.delta_t.total_cmp(&b.point.delta_t))
                .ok_or(supermode_core::SolveError::NoCandidates)?;
            (&chains[best.series], best.point.detuning)
        }
    };
    let exact = chain::evaluate(spec, detuning, scenario.thresholds.opacity)?.t_total;
    let sum = analysis::pathways(spec, detuning, opts.max_bounces, opts.cap)?;
    let mut convergence = Vec::new();
    let mut partial = Complex64::new(0.0, 0.0);
    for order in (0..=opts.max_bounces).step_by(2) {
        partial += sum
            .pathways
            .iter()
            .filter(|p| p.bounces == order)
            .map(|p| p.amplitude)
            .sum::<Complex64>();
        convergence.push(ConvergenceRow {
            max_bounces: order,
            partial,
            abs_error: (partial - exact).norm(),
        });
    }
    let constructive_phase = if spec.len() == 2 {
        let responses = chain::subsystem_responses(&spec.left_driven(), detuning)?;
        analysis::constructive_condition(responses[1].r, responses[0].r_back, spec.phase(0)).ok()
    } else {
        None
    };
    Ok(PathwayResult {
        detuning,
        lengths: spec.lengths.clone(),
        exact,
        pathways: sum.pathways,
        convergence,
        constructive_phase,
    })
}

fn check_oracle(
    scenario: &Scenario,
    chains: &[ChainSpec],
    series: &[SeriesResult],
    peaks: &[PeakSummary],
    length_scan: Option<&[LengthScanRow]>,
    reflection: Option<&ReflectionResult>,
    pathways: Option<&PathwayResult>,
) -> Result<OracleSummary, CliError> {
    let mut emitted = Vec::new();
    for (spec, s) in chains.iter().zip(series) {
        emitted.extend(s.points.iter().map(|p| Emitted {
            spec,
            detuning: p.detuning,
            transmission: Some(p.transmission),
            reflection: p.reflection,
        }));
    }
    for p in peaks {
        emitted.push(Emitted {
            spec: &chains[p.series],
            detuning: p.point.detuning,
            transmission: Some(p.point.transmission),
            reflection: p.point.reflection,
        });
    }
    let uniform: Vec<ChainSpec> = match (length_scan, scenario.length_scan) {
        (Some(rows), Some(ls)) => rows
            .iter()
            .map(|r| supermode_core::uniform_chain(r.n, scenario.chain.subsystems[0], ls.length))
            .collect::<Result<_, _>>()
            .map_err(supermode_core::SolveError::from)?,
        _ => Vec::new(),
    };
    if let Some(rows) = length_scan {
        for (spec, row) in uniform.iter().zip(rows) {
            emitted.push(Emitted {
                spec,
                detuning: row.peak.detuning,
                transmission: Some(row.peak.point.transmission),
                reflection: row.peak.point.reflection,
            });
        }
    }
    let configured: Vec<ChainSpec> = reflection
        .map(|r| {
            r.signatures
                .iter()
                .map(|s| s.configuration.apply(&scenario.chain))
                .collect()
        })
        .unwrap_or_default();
    if let Some(r) = reflection {
        let xs = scenario.scan.values();
        for (spec, values) in configured.iter().zip(&r.spectra) {
            emitted.extend(xs.iter().zip(values).map(|(&x, &v)| Emitted {
                spec,
                detuning: x,
                transmission: None,
                reflection: v,
            }));
        }
    }
    let pathway_chain = pathways.map(|p| ChainSpec {
        lengths: p.lengths.clone(),
        ..scenario.chain.clone()
    });
    if let (Some(p), Some(spec)) = (pathways, pathway_chain.as_ref()) {
        let response = chain::evaluate(spec, p.detuning, scenario.thresholds.opacity)?;
        emitted.push(Emitted {
            spec,
            detuning: p.detuning,
            transmission: Some(p.exact.norm_sqr()),
            reflection: response.reflection,
        });
    }

    let diffs = emitted
        .par_iter()
        .map(|e| {
            let (t, r) = oracle::transmission_reflection(e.spec, e.detuning)?;
            let dt = e.transmission.map_or(0.0, |v| relative_difference(v, t));
            Ok((dt, relative_difference(e.reflection, r)))
        })
        .collect::<Result<Vec<_>, supermode_core::SolveError>>()?;
    let tolerance = scenario.oracle_check.tolerance;
    let mut summary = OracleSummary {
        tolerance,
        checked: diffs.len(),
        max_transmission: 0.0,
        max_reflection: 0.0,
        mismatches: 0,
    };
    for (dt, dr) in diffs {
        summary.max_transmission = summary.max_transmission.max(dt);
        summary.max_reflection = summary.max_reflection.max(dr);
        if dt > tolerance || dr > tolerance {
            summary.mismatches += 1;
        }
    }
    Ok(summary)
}
