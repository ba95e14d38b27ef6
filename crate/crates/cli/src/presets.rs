//! Built-in scenarios for the four reference studies.
//!
//! `h = 50γ`, `g_B = 70γ`, the segment lengths and the chain sizes are
//! fixed reference values. The fiber and intrinsic loss rates are not, so each
//! preset carries a calibration chosen to reproduce the qualitative
//! features of its study; these are labelled as such in the output.

use supermode_core::{AtomParams, CavityParams, ChainSpec, ScanGrid, SubsystemParams, Thresholds};

use crate::error::CliError;
use crate::scenario::{
    Calibration, LengthScanSpec, OracleCheck, OutputSpec, PathwaySpec, ReflectionSpec, Scenario, SupernessSpec, Task,
};

pub const SCATTERING_RATE: f64 = 50.0;
pub const ATOM_COUPLING: f64 = 70.0;
/// Distance between the outer subsystems of the three-cavity chain (λ).
pub const TOTAL_LENGTH: f64 = 200.3;

pub const FIG2_LENGTHS: [f64; 4] = [100.0, 100.15, 100.25, 100.35];
pub const FIG3_LENGTH: f64 = 100.2;
pub const FIG4_LENGTH: f64 = 100.3;
pub const FIG5_FIRST_LENGTHS: [f64; 4] = [100.0, 100.05, 100.1, 100.15];

/// Calibrated loss rates shared by the two-cavity and three-cavity spectra.
pub const KAPPA_EX: f64 = 50.0;
pub const KAPPA_I: f64 = 9.0;
/// Intrinsic loss for the chain-length study.
pub const KAPPA_I_LENGTH_SCAN: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresetInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: [PresetInfo; 4] = [
    PresetInfo {
        name: "fig2",
        description: "N = 2 superness for L_1 = 100.0, 100.15, 100.25, 100.35 λ, with pathway analysis at the peak",
    },
    PresetInfo {
        name: "fig3",
        description: "peak ΔT and ΔT/T of uniform chains, N = 2..20, L_n = 100.2 λ",
    },
    PresetInfo {
        name: "fig4",
        description: "N = 2 reflection for the four atom configurations, L_1 = 100.3 λ",
    },
    PresetInfo {
        name: "fig5",
        description: "N = 3 superness, L_1 + L_2 = 200.3 λ, L_1 = 100.0, 100.05, 100.1, 100.15 λ",
    },
];

pub fn presets() -> &'static [PresetInfo] {
    &PRESETS
}

/// Subsystem with an atom coupled to the antisymmetric mode only.
pub fn subsystem(kappa_ex: f64, kappa_i: f64) -> SubsystemParams {
    SubsystemParams::with_atom(
        CavityParams::new(SCATTERING_RATE, kappa_ex, kappa_i),
        AtomParams::coupled_to_b(ATOM_COUPLING),
    )
}

pub fn standard_grid() -> ScanGrid {
    ScanGrid {
        start: -150.0,
        stop: 150.0,
        points: 3001,
    }
}

fn calibration(kappa_ex: f64, kappa_i: f64) -> Calibration {
    Calibration {
        kappa_ex,
        kappa_i,
        note: "calibration: loss rates have no reference value; chosen to reproduce the qualitative spectral features".into(),
    }
}

fn base(name: &str, chain: ChainSpec, tasks: Vec<Task>, kappa_i: f64) -> Scenario {
    Scenario {
        name: Some(name.into()),
        chain,
        scan: standard_grid(),
        tasks,
        oracle_check: OracleCheck::default(),
        output: OutputSpec::default(),
        thresholds: Thresholds::default(),
        length_sets: Vec::new(),
        superness: SupernessSpec::default(),
        length_scan: None,
        reflection: ReflectionSpec::default(),
        pathways: PathwaySpec::default(),
        calibration: Some(calibration(KAPPA_EX, kappa_i)),
    }
}

pub fn preset(name: &str) -> Result<Scenario, CliError> {
    let sub = subsystem(KAPPA_EX, KAPPA_I);
    let scenario = match name {
        "fig2" => Scenario {
            length_sets: FIG2_LENGTHS.iter().map(|&l| vec![l]).collect(),
            pathways: PathwaySpec {
                max_bounces: 80,
                ..PathwaySpec::default()
            },
            ..base(
                name,
                ChainSpec::new(vec![sub; 2], vec![FIG2_LENGTHS[0]]),
                vec![Task::Superness, Task::Pathways],
                KAPPA_I,
            )
        },
        "fig3" => {
            let sub = subsystem(KAPPA_EX, KAPPA_I_LENGTH_SCAN);
            Scenario {
                length_scan: Some(LengthScanSpec {
                    min_n: 2,
                    max_n: 20,
                    length: FIG3_LENGTH,
                    window: None,
                }),
                ..base(
                    name,
                    ChainSpec::new(vec![sub; 2], vec![FIG3_LENGTH]),
                    vec![Task::LengthScan],
                    KAPPA_I_LENGTH_SCAN,
                )
            }
        }
        "fig4" => Scenario {
            reflection: ReflectionSpec {
                landmarks: vec![-50.0, 0.0, 37.0],
                ..ReflectionSpec::default()
            },
            ..base(
                name,
                ChainSpec::new(vec![sub; 2], vec![FIG4_LENGTH]),
                vec![Task::Reflection],
                KAPPA_I,
            )
        },
        "fig5" => Scenario {
            length_sets: FIG5_FIRST_LENGTHS
                .iter()
                .map(|&l| vec![l, TOTAL_LENGTH - l])
                .collect(),
            ..base(
                name,
                ChainSpec::new(
                    vec![sub; 3],
                    vec![FIG5_FIRST_LENGTHS[0], TOTAL_LENGTH - FIG5_FIRST_LENGTHS[0]],
                ),
                vec![Task::Superness],
                KAPPA_I,
            )
        },
        other => return Err(CliError::UnknownPreset(other.to_string())),
    };
    Ok(scenario)
}
