//! Transfer-matrix cascade of subsystems and fiber segments.
//!
//! A transfer matrix maps the left port pair `(a_in, b_out)` of an element to
//! its right port pair `(a_out, b_in)`:
//!
//! ```text
//! ⎡a_out⎤ = ⎡m11 m12⎤ ⎡a_in ⎤
//! ⎣b_in ⎦   ⎣m21 m22⎦ ⎣b_out⎦
//! ```
//!
//! so a chain composes as `M_N · M_φ(N−1) · … · M_φ1 · M_1`.

use std::ops::Mul;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::SolveError;
use crate::model::{ChainSpec, ScanGrid};
use crate::resonator::{scattering_amplitudes, ScatteringResponse};

/// Default opacity gate on `|t|` below which a subsystem has no transfer
/// matrix.
pub const DEFAULT_OPACITY_EPS: f64 = 1e-12;

/// Smallest `|m22|` accepted by [`response`].
pub const DEGENERATE_EPS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl TransferMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            m11: one,
            m12: zero,
            m21: zero,
            m22: one,
        }
    }

    /// Transfer matrix of a scatterer with `a_out = t a_in + r_back b_in` and
    /// `b_out = r a_in + t b_in`.
    pub fn from_scattering(resp: &ScatteringResponse, eps_t: f64) -> Result<Self, SolveError> {
        Self::from_amplitudes(resp.t, resp.r, resp.r_back, eps_t).map_err(|e| match e {
            SolveError::Opaque { magnitude, .. } => SolveError::Opaque { index: 0, magnitude },
            other => other,
        })
    }

    /// `(1/t)·[[t² − r·r_back, r_back], [−r, 1]]`.
    pub fn from_amplitudes(
        t: Complex64,
        r: Complex64,
        r_back: Complex64,
        eps_t: f64,
    ) -> Result<Self, SolveError> {
        let magnitude = t.norm();
        if magnitude.is_nan() || magnitude <= eps_t {
            return Err(SolveError::Opaque { index: 0, magnitude });
        }
        let inv = t.inv();
        Ok(Self {
            m11: t - r * r_back * inv,
            m12: r_back * inv,
            m21: -r * inv,
            m22: inv,
        })
    }

    /// Free propagation over a segment with phase `phi`.
    pub fn propagation(phi: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            m11: Complex64::from_polar(1.0, phi),
            m12: zero,
            m21: zero,
            m22: Complex64::from_polar(1.0, -phi),
        }
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// `|det − 1|` scaled by the size of the products that form the determinant.
    pub fn det_error(&self) -> f64 {
        let scale = 1f64
            .max((self.m11 * self.m22).norm())
            .max((self.m12 * self.m21).norm());
        (self.det() - 1.0).norm() / scale
    }

    /// Largest entry modulus, a scale for relative comparisons.
    pub fn max_abs(&self) -> f64 {
        [self.m11, self.m12, self.m21, self.m22]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    /// `self · rhs`: apply `rhs` first, then `self`.
    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
        }
    }
}

/// End-to-end response of a left-driven chain with unit input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainResponse {
    pub t_total: Complex64,
    pub r_total: Complex64,
    /// `T = |t_total|²`
    pub transmission: f64,
    /// `R = |r_total|²`
    pub reflection: f64,
    /// Product of the individual subsystem transmissions, when computed.
    pub independent: Option<f64>,
}

impl ChainResponse {
    fn from_amplitudes(t_total: Complex64, r_total: Complex64) -> Self {
        Self {
            t_total,
            r_total,
            transmission: t_total.norm_sqr(),
            reflection: r_total.norm_sqr(),
            independent: None,
        }
    }

    pub fn with_independent(mut self, t_ind: f64) -> Self {
        self.independent = Some(t_ind);
        self
    }

    /// `ΔT = T − T_ind`
    pub fn superness(&self) -> Option<f64> {
        self.independent.map(|t_ind| self.transmission - t_ind)
    }
}

/// Per-subsystem scattering responses of a chain, in chain order.
pub fn subsystem_responses(spec: &ChainSpec, probe: f64) -> Result<Vec<ScatteringResponse>, SolveError> {
    spec.subsystems
        .iter()
        .map(|s| scattering_amplitudes(s, probe))
        .collect()
}

/// Total transfer matrix of the chain at `probe`, oriented so the probe
/// enters from the left.
pub fn compose(spec: &ChainSpec, probe: f64, eps_t: f64) -> Result<TransferMatrix, SolveError> {
    spec.validated()?;
    let spec = spec.left_driven();
    let responses = subsystem_responses(&spec, probe)?;
    compose_responses(&spec, &responses, eps_t)
}

pub(crate) fn compose_responses(
    spec: &ChainSpec,
    responses: &[ScatteringResponse],
    eps_t: f64,
) -> Result<TransferMatrix, SolveError> {
    let mut total: Option<TransferMatrix> = None;
    for (index, resp) in responses.iter().enumerate() {
        let m = TransferMatrix::from_amplitudes(resp.t, resp.r, resp.r_back, eps_t).map_err(|e| match e {
            SolveError::Opaque { magnitude, .. } => SolveError::Opaque { index, magnitude },
            other => other,
        })?;
        total = Some(match total {
            None => m,
            Some(acc) => m * TransferMatrix::propagation(spec.phase(index - 1)) * acc,
        });
    }
    total.ok_or(SolveError::Model(crate::error::ModelError::EmptyChain))
}

/// Transmission and reflection of a chain matrix for unit drive at the left
/// port and nothing entering on the right.
pub fn response(m: &TransferMatrix) -> Result<ChainResponse, SolveError> {
    let magnitude = m.m22.norm();
    if !magnitude.is_finite() || magnitude <= DEGENERATE_EPS {
        return Err(SolveError::DegenerateChain { magnitude });
    }
    let r_total = -m.m21 / m.m22;
    // det M = 1 for every factor, so 1/m22 avoids the cancellation in m11·m22 − m12·m21.
    let t_total = m.m22.inv();
    Ok(ChainResponse::from_amplitudes(t_total, r_total))
}

/// Transmission of the same subsystems with all backcoupling removed:
/// `T_ind = Π |t_n|²`.
pub fn independent_transmission(spec: &ChainSpec, probe: f64) -> Result<f64, SolveError> {
    spec.validated()?;
    Ok(subsystem_responses(spec, probe)?
        .iter()
        .map(|r| r.t.norm_sqr())
        .product())
}

/// Full response, including `T_ind`, through the transfer-matrix path.
pub fn evaluate(spec: &ChainSpec, probe: f64, eps_t: f64) -> Result<ChainResponse, SolveError> {
    spec.validated()?;
    let spec = spec.left_driven();
    let responses = subsystem_responses(&spec, probe)?;
    let t_ind = responses.iter().map(|r| r.t.norm_sqr()).product();
    let m = compose_responses(&spec, &responses, eps_t)?;
    Ok(response(&m)?.with_independent(t_ind))
}

/// Fiber inputs `(a_in,n, b_in,n)` reaching every cavity of the left-driven
/// chain under unit drive, recovered by stepping the left port pair through
/// the cascade.
pub fn cavity_inputs(
    spec: &ChainSpec,
    probe: f64,
    eps_t: f64,
) -> Result<Vec<(Complex64, Complex64)>, SolveError> {
    spec.validated()?;
    let spec = spec.left_driven();
    let responses = subsystem_responses(&spec, probe)?;
    let total = response(&compose_responses(&spec, &responses, eps_t)?)?;
    let mut forward = Complex64::new(1.0, 0.0);
    let mut backward_out = total.r_total;
    let mut out = Vec::with_capacity(responses.len());
    for (n, resp) in responses.iter().enumerate() {
        let m = TransferMatrix::from_amplitudes(resp.t, resp.r, resp.r_back, eps_t)?;
        let a_out = m.m11 * forward + m.m12 * backward_out;
        let b_in = m.m21 * forward + m.m22 * backward_out;
        out.push((forward, b_in));
        if n + 1 < responses.len() {
            let p = TransferMatrix::propagation(spec.phase(n));
            forward = p.m11 * a_out;
            backward_out = p.m22 * b_in;
        }
    }
    Ok(out)
}

/// Evaluates a chain on every grid point, in grid order.
pub fn scan(spec: &ChainSpec, grid: &ScanGrid, eps_t: f64) -> Result<Vec<ChainResponse>, SolveError> {
    grid.values()
        .into_par_iter()
        .map(|x| evaluate(spec, x, eps_t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AtomParams, CavityParams, SubsystemParams};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn transparent_scatterers() {
        let id = TransferMatrix::from_amplitudes(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), 1e-12).unwrap();
        assert_eq!(id, TransferMatrix::identity());
        let neg = TransferMatrix::from_amplitudes(c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), 1e-12).unwrap();
        assert_eq!(neg.m11, c(-1.0, 0.0));
        assert_eq!(neg.m22, c(-1.0, 0.0));
        assert_eq!(neg.m12.norm() + neg.m21.norm(), 0.0);
        assert_eq!(response(&neg).unwrap().transmission, 1.0);
    }

    #[test]
    fn scatterer_matrix_inverts_scattering_relations() {
        // b_out = r a_in + t b_in  ⇒  b_in = (b_out − r a_in)/t
        // a_out = t a_in + r b_in  ⇒  a_out = (t − r²/t) a_in + (r/t) b_out
        // With t = 0.6, r = 0.8i: t − r²/t = 0.6 + 0.64/0.6, r/t = 4i/3.
        let m = TransferMatrix::from_amplitudes(c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), 1e-12).unwrap();
        assert!(close(m.m11, c(0.6 + 0.64 / 0.6, 0.0), 1e-15));
        assert!(close(m.m12, c(0.0, 4.0 / 3.0), 1e-15));
        assert!(close(m.m21, c(0.0, -4.0 / 3.0), 1e-15));
        assert!(close(m.m22, c(1.0 / 0.6, 0.0), 1e-15));
        assert!(close(m.det(), c(1.0, 0.0), 1e-15));

        // Arbitrary port values satisfy both relations.
        let (a_in, b_in) = (c(0.3, -0.2), c(-0.7, 0.4));
        let (t, r) = (c(0.6, 0.0), c(0.0, 0.8));
        let a_out = t * a_in + r * b_in;
        let b_out = r * a_in + t * b_in;
        assert!(close(m.m11 * a_in + m.m12 * b_out, a_out, 1e-15));
        assert!(close(m.m21 * a_in + m.m22 * b_out, b_in, 1e-15));
    }

    #[test]
    fn opaque_scatterer_is_rejected() {
        let err = TransferMatrix::from_amplitudes(c(1e-13, 0.0), c(0.9, 0.0), c(0.9, 0.0), 1e-12);
        assert!(matches!(err, Err(SolveError::Opaque { .. })));
    }

    #[test]
    fn propagation_matrices() {
        assert_eq!(TransferMatrix::propagation(0.0), TransferMatrix::identity());
        let pi = TransferMatrix::propagation(PI);
        assert!(close(pi.m11, c(-1.0, 0.0), 1e-15));
        assert!(close(pi.m22, c(-1.0, 0.0), 1e-15));
        let long = TransferMatrix::propagation(crate::model::segment_phase(100.3));
        assert!(close(long.m11, Complex64::from_polar(1.0, 0.6 * PI), 1e-13));
        assert!(close(long.m22, Complex64::from_polar(1.0, -0.6 * PI), 1e-13));
        let r = response(&long).unwrap();
        assert!((r.transmission - 1.0).abs() < 1e-15);
        assert_eq!(r.reflection, 0.0);
    }

    #[test]
    fn identity_response() {
        let r = response(&TransferMatrix::identity()).unwrap();
        assert_eq!(r.transmission, 1.0);
        assert_eq!(r.reflection, 0.0);
    }

    #[test]
    fn single_scatterer_response_round_trips() {
        let (t, rr) = (c(0.3, -0.4), c(0.5, 0.2));
        let m = TransferMatrix::from_amplitudes(t, rr, rr, 1e-12).unwrap();
        let resp = response(&m).unwrap();
        assert!((resp.transmission - t.norm_sqr()).abs() < 1e-15);
        assert!((resp.reflection - rr.norm_sqr()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_matrix_is_rejected() {
        let mut m = TransferMatrix::identity();
        m.m22 = c(0.0, 0.0);
        assert!(matches!(response(&m), Err(SolveError::DegenerateChain { .. })));
    }

    fn sub(kex: f64) -> SubsystemParams {
        SubsystemParams::with_atom(CavityParams::new(50.0, kex, 2.0), AtomParams::coupled_to_b(70.0))
    }

    #[test]
    fn single_subsystem_compose_is_its_own_matrix() {
        let s = sub(30.0);
        let spec = ChainSpec::new(vec![s], vec![]);
        let m = compose(&spec, 7.0, DEFAULT_OPACITY_EPS).unwrap();
        let direct =
            TransferMatrix::from_scattering(&scattering_amplitudes(&s, 7.0).unwrap(), DEFAULT_OPACITY_EPS).unwrap();
        assert_eq!(m, direct);
    }

    #[test]
    fn uncoupled_chain_is_transparent() {
        let spec = ChainSpec::new(vec![sub(0.0), sub(0.0), sub(0.0)], vec![100.13, 57.9]);
        for x in [-60.0, 0.0, 95.0] {
            let r = evaluate(&spec, x, DEFAULT_OPACITY_EPS).unwrap();
            assert!((r.transmission - 1.0).abs() < 1e-14);
            assert!(r.reflection < 1e-28);
        }
    }

    #[test]
    fn opaque_index_is_reported() {
        let mut s = SubsystemParams::empty(CavityParams::new(0.0, 5.0, 5.0));
        s.cavity.delta0 = 0.0;
        let spec = ChainSpec::new(vec![sub(30.0), s], vec![100.0]);
        match compose(&spec, 0.0, 1e-12) {
            Err(SolveError::Opaque { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected opaque error, got {other:?}"),
        }
    }

    #[test]
    fn independent_transmission_cases() {
        let s = sub(30.0);
        let one = ChainSpec::new(vec![s], vec![]);
        let t1 = scattering_amplitudes(&s, 4.0).unwrap().t.norm_sqr();
        assert_eq!(independent_transmission(&one, 4.0).unwrap(), t1);

        let clear = ChainSpec::new(vec![sub(0.0); 4], vec![100.0, 100.5, 99.1]);
        assert_eq!(independent_transmission(&clear, 4.0).unwrap(), 1.0);
    }

    #[test]
    fn reflectionless_chain_equals_independent_product() {
        // Atom-free resonators with h = 0 never reflect.
        let mk = |kex, ki| SubsystemParams::empty(CavityParams::new(0.0, kex, ki));
        let spec = ChainSpec::new(vec![mk(3.0, 1.0), mk(1.0, 0.5), mk(7.0, 2.0)], vec![100.3, 100.77]);
        for x in [-5.0, -0.3, 0.0, 2.0, 11.0] {
            let r = evaluate(&spec, x, DEFAULT_OPACITY_EPS).unwrap();
            assert!((r.transmission - r.independent.unwrap()).abs() < 1e-15);
            assert!(r.superness().unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn right_drive_is_mirrored_left_drive() {
        let mut a = sub(30.0);
        a.atom = None;
        let mut spec = ChainSpec::new(vec![a, sub(20.0)], vec![100.3]);
        let left = evaluate(&spec.mirrored(), 37.0, DEFAULT_OPACITY_EPS).unwrap();
        spec.drive = crate::model::Drive::Right;
        let right = evaluate(&spec, 37.0, DEFAULT_OPACITY_EPS).unwrap();
        assert_eq!(left.transmission, right.transmission);
        assert_eq!(left.reflection, right.reflection);
    }
}
