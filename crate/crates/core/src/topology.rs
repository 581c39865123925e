//! Topological invariants of the homogeneous walk.
//!
//! Conventions: the loop integral runs over the full zone starting at
//! `k = pi` with decreasing k (see [`KGrid::brillouin`]). The in-plane angle
//! `theta = atan2(d2, -d3)` has period pi in k, so it winds an even number
//! of times around this loop and `phi_B / 2pi` is even. The second time frame
//! enters the gap invariants with the opposite orientation.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::bloch::{
    bands, bloch_vector, classify_pt, floquet_momentum_matrix, floquet_momentum_matrix_in, KGrid, ModelParams, PtClass,
    TimeFrame,
};
use crate::error::{Error, Result};
use crate::numerics::{eig_general, integrate_periodic, principal_angle, unwrap_winding, DEFAULT_UNWRAP_MARGIN};

/// Default number of momentum samples for loop integrals.
pub const DEFAULT_NK: usize = 1024;

/// Largest grid reached by automatic refinement.
pub const MAX_NK: usize = 1 << 16;

/// Planar norm `|(d2, d3)| / alpha` below which the polar angle is undefined.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Distance of `beta / d` from one treated as the exceptional point itself.
pub const CASE3_TOL: f64 = 1e-14;

/// Required closeness of a quadrature winding to an integer.
pub const INTEGER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    Plus,
    Minus,
}

/// Regime of the local spectrum: `d0^2 < 1`, `d0^2 > 1` or `d0^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConnectionCase {
    I,
    II,
    III,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerryConnectionSample {
    pub k: f64,
    pub theta_angle: f64,
    pub theta_prime: f64,
    /// Frame angle with `sin 2 omega = beta / d`.
    pub omega: C64,
    /// Frame angle with `cosh 2 xi = beta / d`.
    pub xi_frame: C64,
    /// `None` where the connection diverges.
    pub a_plus: Option<C64>,
    pub a_minus: Option<C64>,
    pub case: ConnectionCase,
}

impl BerryConnectionSample {
    /// `a_plus + a_minus`; the finite limit `theta'` at the exceptional point.
    pub fn sum(&self) -> C64 {
        match (self.a_plus, self.a_minus) {
            (Some(a), Some(b)) => a + b,
            _ => C64::new(self.theta_prime, 0.0),
        }
    }

    pub fn band(&self, band: Band) -> Option<C64> {
        match band {
            Band::Plus => self.a_plus,
            Band::Minus => self.a_minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TopoNumbers {
    pub nu_prime: i64,
    pub nu_double_prime: i64,
    pub nu_zero: i64,
    pub nu_pi: i64,
}

/// Closed-form test for a topological phase boundary: the in-plane vector
/// vanishes at k = 0 or k = pi/2 exactly when `sin(theta1 +- theta2) = 0`.
pub fn on_phase_boundary(params: &ModelParams) -> bool {
    let a = (params.theta1 + params.theta2).sin().abs();
    let b = (params.theta1 - params.theta2).sin().abs();
    a.min(b) < BOUNDARY_TOL
}

fn boundary_error(params: &ModelParams) -> Error {
    Error::PhaseBoundary { theta1: params.theta1, theta2: params.theta2 }
}

pub fn theta_angle(params: &ModelParams, k: f64) -> Result<f64> {
    let d = bloch_vector(params, k);
    if d.planar_norm() <= BOUNDARY_TOL * params.alpha {
        return Err(boundary_error(params));
    }
    Ok(d.d2.re.atan2(-d.d3.re))
}

/// Analytic `d theta / dk`.
pub fn theta_derivative(params: &ModelParams, k: f64) -> Result<f64> {
    let d = bloch_vector(params, k);
    let norm2 = d.d2.re * d.d2.re + d.d3.re * d.d3.re;
    if norm2.sqrt() <= BOUNDARY_TOL * params.alpha {
        return Err(boundary_error(params));
    }
    let (s1, _) = params.theta1.sin_cos();
    let c2 = params.theta2.cos();
    let (s2k, c2k) = (2.0 * k).sin_cos();
    let d2p = -2.0 * params.alpha * s2k * c2 * s1;
    let d3p = -2.0 * params.alpha * c2k * c2;
    Ok((d.d2.re * d3p - d.d3.re * d2p) / norm2)
}

/// Per-band connections from the in-plane angle derivative.
fn connection_from(params: &ModelParams, k: f64, theta: f64, theta_prime: f64) -> BerryConnectionSample {
    let d = bloch_vector(params, k).planar_norm();
    let q = params.beta / d;
    let qc = C64::new(q, 0.0);
    let omega = qc.asin() / 2.0;
    let xi_frame = qc.acosh() / 2.0;
    let half = C64::new(theta_prime / 2.0, 0.0);

    let (case, a_plus, a_minus) = if (q - 1.0).abs() <= CASE3_TOL {
        (ConnectionCase::III, None, None)
    } else if q < 1.0 {
        let tan2omega = q / (1.0 - q * q).sqrt();
        let im = C64::new(0.0, theta_prime * tan2omega / 2.0);
        (ConnectionCase::I, Some(half - im), Some(half + im))
    } else {
        // sinh 2xi = sqrt(q^2 - 1) and exp(+-2xi) = q +- sqrt(q^2 - 1).
        let s = (q * q - 1.0).sqrt();
        let ap = -(q - s) * theta_prime / (2.0 * s);
        let am = (q + s) * theta_prime / (2.0 * s);
        (ConnectionCase::II, Some(C64::new(ap, 0.0)), Some(C64::new(am, 0.0)))
    };
    BerryConnectionSample { k, theta_angle: theta, theta_prime, omega, xi_frame, a_plus, a_minus, case }
}

/// Connections at one momentum, with `theta'` from a central difference of
/// step `dk` (analytic derivative when `dk == 0`).
pub fn berry_connection(params: &ModelParams, k: f64, dk: f64) -> Result<BerryConnectionSample> {
    let theta = theta_angle(params, k)?;
    let theta_prime = if dk > 0.0 {
        let fwd = theta_angle(params, k + dk)?;
        let bwd = theta_angle(params, k - dk)?;
        principal_angle(fwd - bwd) / (2.0 * dk)
    } else {
        theta_derivative(params, k)?
    };
    Ok(connection_from(params, k, theta, theta_prime))
}

fn winding_on(params: &ModelParams, grid: KGrid) -> Result<f64> {
    let samples = grid.points().map(|k| theta_angle(params, k)).collect::<Result<Vec<_>>>()?;
    Ok(unwrap_winding(&samples, DEFAULT_UNWRAP_MARGIN)?.total_angle)
}

/// Global Berry phase: the total change of the polar angle around the loop.
pub fn global_berry_phase(params: &ModelParams, n_k: usize) -> Result<f64> {
    global_berry_phase_on(params, KGrid::brillouin(n_k))
}

pub fn global_berry_phase_on(params: &ModelParams, grid: KGrid) -> Result<f64> {
    if grid.n < 64 {
        return Err(Error::TooFewSamples { got: grid.n, need: 64 });
    }
    if on_phase_boundary(params) {
        return Err(boundary_error(params));
    }
    let mut grid = grid;
    loop {
        match winding_on(params, grid) {
            Err(Error::RefinementNeeded { .. }) if grid.n < MAX_NK => grid = grid.refined(),
            Err(Error::RefinementNeeded { .. }) => return Err(Error::RefinementExhausted { n_k: grid.n }),
            other => return other,
        }
    }
}

/// `(1/2pi) * loop integral of theta'`, by quadrature of the analytic
/// derivative; refined until the result is within [`INTEGER_TOL`] of an
/// integer.
pub fn winding_number_projected(params: &ModelParams, n_k: usize) -> Result<i64> {
    winding_number_projected_on(params, KGrid::brillouin(n_k))
}

pub fn winding_number_projected_on(params: &ModelParams, grid: KGrid) -> Result<i64> {
    if on_phase_boundary(params) {
        return Err(boundary_error(params));
    }
    let mut grid = grid;
    loop {
        let samples =
            grid.points().map(|k| theta_derivative(params, k).map(|v| C64::new(v, 0.0))).collect::<Result<Vec<_>>>()?;
        let nu = integrate_periodic(&samples, grid.period())?.re / TAU;
        if (nu - nu.round()).abs() < INTEGER_TOL {
            return Ok(nu.round() as i64);
        }
        if grid.n >= MAX_NK {
            return Err(Error::RefinementExhausted { n_k: grid.n });
        }
        grid = grid.refined();
    }
}

fn require_gapped(params: &ModelParams) -> Result<PtClass> {
    let class = classify_pt(params, 1024)?;
    if !class.is_gapped() {
        return Err(Error::ZakPhaseUndefined { class: class.label().to_string() });
    }
    Ok(class)
}

/// Per-band phase by quadrature of the analytic connection.
pub fn generalized_zak_phase(params: &ModelParams, band: Band, n_k: usize) -> Result<C64> {
    require_gapped(params)?;
    if on_phase_boundary(params) {
        return Err(boundary_error(params));
    }
    let mut grid = KGrid::brillouin(n_k);
    let mut shifted = false;
    loop {
        let mut samples = Vec::with_capacity(grid.n);
        let mut hit_case3 = false;
        for k in grid.points() {
            let c = connection_from(params, k, theta_angle(params, k)?, theta_derivative(params, k)?);
            match c.band(band) {
                Some(a) => samples.push(a),
                None => {
                    hit_case3 = true;
                    break;
                }
            }
        }
        if !hit_case3 {
            return integrate_periodic(&samples, grid.period());
        }
        if shifted {
            return Err(Error::ZakPhaseUndefined { class: "exceptional_point".into() });
        }
        grid = grid.half_shifted();
        shifted = true;
    }
}

/// Right and left (biorthonormal) eigenvectors of the momentum block for one band.
fn band_vectors(params: &ModelParams, k: f64, band: Band) -> Result<([C64; 2], [C64; 2])> {
    let m = floquet_momentum_matrix(params, k);
    let mat = faer::Mat::from_fn(2, 2, |i, j| m[i][j]);
    let spec = eig_general(mat.as_ref(), 1e-9)?;
    let target = match band {
        Band::Plus => bands(params, k).lambda_plus,
        Band::Minus => bands(params, k).lambda_minus,
    };
    let idx = if (spec.eigenvalues[0] - target).norm() <= (spec.eigenvalues[1] - target).norm() { 0 } else { 1 };
    let r = spec.right(idx);
    let l = spec.left(idx);
    Ok(([r[0], r[1]], [l[0], l[1]]))
}

fn inner(l: &[C64; 2], r: &[C64; 2]) -> C64 {
    l[0].conj() * r[0] + l[1].conj() * r[1]
}

/// Per-band phase from the discrete biorthogonal Wilson loop, symmetrized
/// between forward and backward link overlaps. The real part is reduced
/// to (-pi, pi].
pub fn wilson_loop_zak_phase(params: &ModelParams, band: Band, n_k: usize) -> Result<C64> {
    require_gapped(params)?;
    let grid = KGrid::brillouin(n_k);
    let vecs = grid.points().map(|k| band_vectors(params, k, band)).collect::<Result<Vec<_>>>()?;
    let n = vecs.len();
    let mut forward = C64::new(0.0, 0.0);
    let mut backward = C64::new(0.0, 0.0);
    for j in 0..n {
        let (r0, l0) = &vecs[j];
        let (r1, l1) = &vecs[(j + 1) % n];
        forward += inner(l0, r1).ln();
        backward += inner(l1, r0).ln();
    }
    // Each sum is a holonomy defined modulo 2pi; align the branches before
    // averaging so the average keeps that period.
    let w_fwd = -C64::i() * forward;
    let w_bwd = C64::i() * backward;
    let shift = ((w_fwd.re - w_bwd.re) / TAU).round() * TAU;
    let avg = (w_fwd + w_bwd + shift) / 2.0;
    Ok(C64::new(principal_angle(avg.re), avg.im))
}

/// `(nu_0, nu_pi)` from the two time frames.
pub fn topo_numbers(params: &ModelParams, n_k: usize) -> Result<TopoNumbers> {
    let swapped = params.swapped();
    for &k in &[0.3, 1.1, -2.0] {
        let direct = floquet_momentum_matrix_in(params, k, TimeFrame::Gmf);
        let via_swap = floquet_momentum_matrix(&swapped, k);
        let err = (0..4).map(|e| (direct[e / 2][e % 2] - via_swap[e / 2][e % 2]).norm()).fold(0.0, f64::max);
        if err > 1e-10 {
            return Err(Error::ConstructionInconsistent { residual: err });
        }
    }
    let nu_prime = (global_berry_phase(params, n_k)? / TAU).round() as i64;
    let nu_double_prime = -(global_berry_phase(&swapped, n_k)? / TAU).round() as i64;
    debug_assert_eq!((nu_prime - nu_double_prime).rem_euclid(2), 0);
    Ok(TopoNumbers {
        nu_prime,
        nu_double_prime,
        nu_zero: (nu_prime - nu_double_prime) / 2,
        nu_pi: (nu_prime + nu_double_prime) / 2,
    })
}

/// Inclusive linear grid over the two coin angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaGrid {
    pub theta1: (f64, f64),
    pub theta2: (f64, f64),
    pub n1: usize,
    pub n2: usize,
}

fn linspace(range: (f64, f64), n: usize, i: usize) -> f64 {
    if n <= 1 {
        range.0
    } else {
        range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
    }
}

impl ThetaGrid {
    pub fn theta1_at(&self, i: usize) -> f64 {
        linspace(self.theta1, self.n1, i)
    }

    pub fn theta2_at(&self, j: usize) -> f64 {
        linspace(self.theta2, self.n2, j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellFlag {
    Ok,
    /// Cell lies on a topological phase boundary; invariants not computed.
    Boundary,
    /// Invariants could not be resolved on the refinement budget.
    Unresolved,
}

impl CellFlag {
    pub fn label(&self) -> &'static str {
        match self {
            CellFlag::Ok => "ok",
            CellFlag::Boundary => "boundary",
            CellFlag::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCell {
    pub theta1: f64,
    pub theta2: f64,
    pub numbers: Option<TopoNumbers>,
    pub pt_class: PtClass,
    pub flag: CellFlag,
}

/// One row per grid cell, row-major with theta1 as the outer index. Cells
/// are evaluated in parallel; the output order is deterministic.
pub fn phase_diagram(grid: &ThetaGrid, p: f64, n_k: usize) -> Result<Vec<PhaseCell>> {
    if grid.n1 == 0 || grid.n2 == 0 {
        return Err(Error::InvalidArgument("phase diagram grid must be non-empty".into()));
    }
    let base = ModelParams::new(0.0, 0.0, p)?;
    (0..grid.n1 * grid.n2)
        .into_par_iter()
        .map(|idx| {
            let params = base.with_angles(grid.theta1_at(idx / grid.n2), grid.theta2_at(idx % grid.n2));
            let pt_class = classify_pt(&params, n_k.max(64))?;
            let (numbers, flag) = match topo_numbers(&params, n_k) {
                Ok(t) => (Some(t), CellFlag::Ok),
                Err(Error::PhaseBoundary { .. }) => (None, CellFlag::Boundary),
                Err(Error::RefinementExhausted { .. }) => (None, CellFlag::Unresolved),
                Err(e) => return Err(e),
            };
            Ok(PhaseCell { theta1: params.theta1, theta2: params.theta2, numbers, pt_class, flag })
        })
        .collect()
}
