//! Direct solution of the fully coupled chain.
//!
//! Every cavity contributes its normal-mode amplitudes, its atomic coherence
//! (if it has an atom) and its two fiber inputs as unknowns. The fiber links
//!
//! ```text
//! a_in,n = a_out,n−1 · e^{iφ(n−1)}      b_in,n = b_out,n+1 · e^{iφ(n)}
//! ```
//!
//! and the per-subsystem steady-state equations are assembled into one dense
//! complex system and solved by LU with partial pivoting. This path does not
//! use transfer matrices, so it also covers opaque subsystems.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::chain;
use crate::error::SolveError;
use crate::model::{ChainSpec, ScanGrid};
use crate::resonator::{Coefficients, SteadyState};

/// Condition number above which a solution is flagged as unreliable.
pub const CONDITION_WARNING: f64 = 1e12;

/// Floor under the denominator of relative discrepancies, so that values at
/// rounding level (an `R` of 1e−30, say) do not register as large relative
/// errors.
pub const RELATIVE_FLOOR: f64 = 1e-12;

/// Port fields and internal state of one cavity in a solved chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityFields {
    pub state: SteadyState,
    pub a_in: Complex64,
    pub b_in: Complex64,
    pub a_out: Complex64,
    pub b_out: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullSolution {
    pub cavities: Vec<CavityFields>,
    /// Transmitted intensity normalised to the driven input.
    pub transmission: f64,
    /// Reflected intensity normalised to the driven input.
    pub reflection: f64,
    /// 1-norm condition estimate of the assembled system.
    pub condition: f64,
    pub ill_conditioned: bool,
}

impl FullSolution {
    /// `|σ⁻_n|²` for every cavity.
    pub fn excitations(&self) -> Vec<f64> {
        self.cavities.iter().map(|c| c.state.excitation()).collect()
    }

    pub fn max_excitation(&self) -> f64 {
        self.excitations().into_iter().fold(0.0, f64::max)
    }
}

struct Layout {
    /// Offset of the first unknown of each cavity.
    offsets: Vec<usize>,
    has_atom: Vec<bool>,
    size: usize,
}

impl Layout {
    fn new(coeffs: &[Coefficients]) -> Self {
        let mut offsets = Vec::with_capacity(coeffs.len());
        let mut has_atom = Vec::with_capacity(coeffs.len());
        let mut size = 0;
        for c in coeffs {
            offsets.push(size);
            has_atom.push(c.has_atom);
            size += if c.has_atom { 5 } else { 4 };
        }
        Self {
            offsets,
            has_atom,
            size,
        }
    }

    fn a(&self, n: usize) -> usize {
        self.offsets[n]
    }
    fn b(&self, n: usize) -> usize {
        self.offsets[n] + 1
    }
    fn sigma(&self, n: usize) -> Option<usize> {
        self.has_atom[n].then(|| self.offsets[n] + 2)
    }
    fn a_in(&self, n: usize) -> usize {
        self.offsets[n] + if self.has_atom[n] { 3 } else { 2 }
    }
    fn b_in(&self, n: usize) -> usize {
        self.a_in(n) + 1
    }
}

/// Solves the coupled chain at `probe` with input `drive = (a_in,1, b_in,N)`.
///
/// The `drive` field of `spec` is ignored; the explicit inputs decide which
/// ends are driven.
pub fn solve_full(
    spec: &ChainSpec,
    probe: f64,
    drive: (Complex64, Complex64),
) -> Result<FullSolution, SolveError> {
    spec.validated()?;
    let n_cav = spec.len();
    let coeffs: Vec<Coefficients> = spec
        .subsystems
        .iter()
        .map(|s| Coefficients::new(s, probe))
        .collect();
    let layout = Layout::new(&coeffs);
    let dim = layout.size;
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);

    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let mut rhs = DVector::<Complex64>::zeros(dim);

    for (n, co) in coeffs.iter().enumerate() {
        let (ia, ib, iain, ibin) = (layout.a(n), layout.b(n), layout.a_in(n), layout.b_in(n));
        let s = co.coupling * FRAC_1_SQRT_2;
        let row_a = ia;
        let row_b = ib;
        // Cavity normal modes.
        m[(row_a, ia)] = co.a_diag;
        m[(row_a, iain)] = -s * one;
        m[(row_a, ibin)] = -s * one;
        m[(row_b, ib)] = co.b_diag;
        m[(row_b, iain)] = -s * one;
        m[(row_b, ibin)] = s * one;
        if let Some(isig) = layout.sigma(n) {
            m[(row_a, isig)] = i * co.g_a;
            m[(row_b, isig)] = co.g_b * one;
            m[(isig, ia)] = i * co.g_a;
            m[(isig, ib)] = -co.g_b * one;
            m[(isig, isig)] = co.sigma_diag;
        }

        // Forward input: drive at the left end, otherwise the phase-shifted
        // forward output of the previous cavity.
        m[(iain, iain)] = one;
        if n == 0 {
            rhs[iain] = drive.0;
        } else {
            let p = n - 1;
            let e = Complex64::from_polar(1.0, spec.phase(p));
            let sp = coeffs[p].coupling * FRAC_1_SQRT_2;
            m[(iain, layout.a_in(p))] = e;
            m[(iain, layout.a(p))] = -e * sp;
            m[(iain, layout.b(p))] = -e * sp;
        }

        // Backward input: drive at the right end, otherwise the phase-shifted
        // backward output of the next cavity.
        m[(ibin, ibin)] = one;
        if n + 1 == n_cav {
            rhs[ibin] = drive.1;
        } else {
            let q = n + 1;
            let e = Complex64::from_polar(1.0, spec.phase(n));
            let sq = coeffs[q].coupling * FRAC_1_SQRT_2;
            m[(ibin, layout.b_in(q))] = e;
            m[(ibin, layout.a(q))] = -e * sq;
            m[(ibin, layout.b(q))] = e * sq;
        }
    }

    let norm1 = one_norm(&m);
    let lu = m.lu();
    let inverse = lu.try_inverse().ok_or(SolveError::IllConditioned {
        condition: f64::INFINITY,
    })?;
    let condition = norm1 * one_norm(&inverse);
    if !condition.is_finite() {
        return Err(SolveError::IllConditioned { condition });
    }
    let x = lu.solve(&rhs).ok_or(SolveError::IllConditioned { condition })?;
    if x.iter().any(|z| !z.is_finite()) {
        return Err(SolveError::IllConditioned { condition });
    }

    let cavities: Vec<CavityFields> = (0..n_cav)
        .map(|n| {
            let state = SteadyState {
                a_mode: x[layout.a(n)],
                b_mode: x[layout.b(n)],
                sigma: layout.sigma(n).map_or(Complex64::new(0.0, 0.0), |k| x[k]),
            };
            let a_in = x[layout.a_in(n)];
            let b_in = x[layout.b_in(n)];
            let (a, b) = state.running_modes();
            let c = coeffs[n].coupling;
            CavityFields {
                state,
                a_in,
                b_in,
                a_out: -a_in + a * c,
                b_out: -b_in + b * c,
            }
        })
        .collect();

    let first = &cavities[0];
    let last = &cavities[n_cav - 1];
    let (transmission, reflection) = if drive.0.norm_sqr() > 0.0 {
        let p = drive.0.norm_sqr();
        (last.a_out.norm_sqr() / p, first.b_out.norm_sqr() / p)
    } else if drive.1.norm_sqr() > 0.0 {
        let p = drive.1.norm_sqr();
        (first.b_out.norm_sqr() / p, last.a_out.norm_sqr() / p)
    } else {
        (0.0, 0.0)
    };

    Ok(FullSolution {
        cavities,
        transmission,
        reflection,
        condition,
        ill_conditioned: condition > CONDITION_WARNING,
    })
}

/// Left-driven transmission and reflection through the direct solve.
pub fn transmission_reflection(spec: &ChainSpec, probe: f64) -> Result<(f64, f64), SolveError> {
    let spec = spec.left_driven();
    let sol = solve_full(&spec, probe, (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)))?;
    Ok((sol.transmission, sol.reflection))
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest violation of any model equation by `sol`, relative to the size of
/// the fields involved.
///
/// Evaluates the steady-state, input-output and fiber-link relations directly
/// from the returned fields rather than from the assembled matrix.
pub fn residual(spec: &ChainSpec, probe: f64, drive: (Complex64, Complex64), sol: &FullSolution) -> f64 {
    let n_cav = spec.len();
    let i = Complex64::new(0.0, 1.0);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = drive.0.norm().max(drive.1.norm());
    for f in &sol.cavities {
        scale = scale
            .max(f.state.a_mode.norm())
            .max(f.state.b_mode.norm())
            .max(f.state.sigma.norm())
            .max(f.a_in.norm())
            .max(f.b_in.norm())
            .max(f.a_out.norm())
            .max(f.b_out.norm());
    }
    let mut check = |z: Complex64| worst = worst.max(z.norm());

    for (n, (f, sub)) in sol.cavities.iter().zip(&spec.subsystems).enumerate() {
        let co = Coefficients::new(sub, probe);
        let src_a = (f.a_in + f.b_in) * FRAC_1_SQRT_2 * co.coupling;
        let src_b = (f.a_in - f.b_in) * FRAC_1_SQRT_2 * co.coupling;
        let st = &f.state;
        check(co.a_diag * st.a_mode + i * co.g_a * st.sigma - src_a);
        check(co.b_diag * st.b_mode + co.g_b * st.sigma - src_b);
        if co.has_atom {
            check(i * co.g_a * st.a_mode - co.g_b * st.b_mode + co.sigma_diag * st.sigma);
        }
        let (a, b) = st.running_modes();
        check(f.a_out - (-f.a_in + a * co.coupling));
        check(f.b_out - (-f.b_in + b * co.coupling));
        if n == 0 {
            check(f.a_in - drive.0);
        } else {
            check(f.a_in - sol.cavities[n - 1].a_out * Complex64::from_polar(1.0, spec.phase(n - 1)));
        }
        if n + 1 == n_cav {
            check(f.b_in - drive.1);
        } else {
            check(f.b_in - sol.cavities[n + 1].b_out * Complex64::from_polar(1.0, spec.phase(n)));
        }
    }
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

/// `|a − b| / max(|a|, |b|, RELATIVE_FLOOR)`
pub fn relative_difference(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}

/// Agreement between the transfer-matrix and direct-solve paths on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub tolerance: f64,
    pub max_transmission: f64,
    pub max_reflection: f64,
    pub mean_transmission: f64,
    pub mean_reflection: f64,
    /// Detunings where either discrepancy exceeds the tolerance.
    pub flagged: Vec<f64>,
    /// Detunings where the transfer path is unavailable (opaque subsystem).
    pub unavailable: Vec<f64>,
    /// Detunings where the direct solve itself failed.
    pub failed: Vec<f64>,
}

impl DiscrepancyReport {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty() && self.failed.is_empty()
    }
}

enum PointOutcome {
    Compared(f64, f64),
    Unavailable,
    Failed,
}

/// Evaluates both solution paths on every grid point and summarises the
/// relative discrepancies of `T` and `R`.
pub fn compare_with_transfer(spec: &ChainSpec, grid: &ScanGrid, tolerance: f64, eps_t: f64) -> DiscrepancyReport {
    let xs = grid.values();
    let outcomes: Vec<PointOutcome> = xs
        .par_iter()
        .map(|&x| {
            let direct = match transmission_reflection(spec, x) {
                Ok(v) => v,
                Err(_) => return PointOutcome::Failed,
            };
            match chain::evaluate(spec, x, eps_t) {
                Ok(r) => PointOutcome::Compared(
                    relative_difference(r.transmission, direct.0),
                    relative_difference(r.reflection, direct.1),
                ),
                Err(SolveError::Opaque { .. }) | Err(SolveError::DegenerateChain { .. }) => {
                    PointOutcome::Unavailable
                }
                Err(_) => PointOutcome::Failed,
            }
        })
        .collect();

    let mut report = DiscrepancyReport {
        tolerance,
        max_transmission: 0.0,
        max_reflection: 0.0,
        mean_transmission: 0.0,
        mean_reflection: 0.0,
        flagged: Vec::new(),
        unavailable: Vec::new(),
        failed: Vec::new(),
    };
    let mut compared = 0usize;
    for (x, outcome) in xs.iter().zip(outcomes) {
        match outcome {
            PointOutcome::Compared(dt, dr) => {
                compared += 1;
                report.max_transmission = report.max_transmission.max(dt);
                report.max_reflection = report.max_reflection.max(dr);
                report.mean_transmission += dt;
                report.mean_reflection += dr;
                if dt > tolerance || dr > tolerance {
                    report.flagged.push(*x);
                }
            }
            PointOutcome::Unavailable => report.unavailable.push(*x),
            PointOutcome::Failed => report.failed.push(*x),
        }
    }
    if compared > 0 {
        report.mean_transmission /= compared as f64;
        report.mean_reflection /= compared as f64;
    }
    report
}
