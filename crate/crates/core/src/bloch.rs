//! Momentum-space description of the homogeneous walk.
//!
//! The one-period operator at quasimomentum k is written as
//! `d0 I - i (d1 sx + d2 sy + d3 sz)`. With real coin angles `d0, d2, d3`
//! are real and `d1 = i beta`, so the complex normalization
//! `d0^2 + d1^2 + d2^2 + d3^2 = 1` holds even though the operator is not
//! unitary.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numerics::principal_angle;

pub type Mat2 = [[C64; 2]; 2];

/// Classification tolerance on `d0^2`.
pub const PT_TOLERANCE: f64 = 1e-4;

/// Smallest grid accepted by [`classify_pt`].
pub const MIN_CLASSIFY_POINTS: usize = 64;

/// Where the one-period window starts: `F M G` or `G M F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TimeFrame {
    #[default]
    Fmg,
    Gmf,
}

/// Bulk coin angles and loss, with the derived gain/loss constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub theta1: f64,
    pub theta2: f64,
    pub p: f64,
    /// `(1 - p)^(-1/4)`
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(theta1: f64, theta2: f64, p: f64) -> Result<Self> {
        make_params(theta1, theta2, p)
    }

    /// Same loss with the two coin angles exchanged. The `G M F` frame at
    /// `(theta1, theta2)` coincides with the `F M G` frame here.
    pub fn swapped(&self) -> Self {
        ModelParams { theta1: self.theta2, theta2: self.theta1, ..*self }
    }

    pub fn with_angles(&self, theta1: f64, theta2: f64) -> Self {
        ModelParams { theta1, theta2, ..*self }
    }
}

pub fn make_params(theta1: f64, theta2: f64, p: f64) -> Result<ModelParams> {
    if !(0.0..1.0).contains(&p) || !p.is_finite() {
        return Err(Error::InvalidLoss { p });
    }
    if !theta1.is_finite() || !theta2.is_finite() {
        return Err(Error::InvalidArgument("coin angles must be finite".into()));
    }
    let q = (1.0 - p).sqrt();
    let gamma = (1.0 - p).powf(-0.25);
    Ok(ModelParams { theta1, theta2, p, gamma, alpha: gamma * (1.0 + q) / 2.0, beta: gamma * (1.0 - q) / 2.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub k: f64,
    pub d0: C64,
    pub d1: C64,
    pub d2: C64,
    pub d3: C64,
}

impl BlochVector {
    /// `d0^2 + d1^2 + d2^2 + d3^2`, equal to one.
    pub fn norm_identity(&self) -> C64 {
        self.d0 * self.d0 + self.d1 * self.d1 + self.d2 * self.d2 + self.d3 * self.d3
    }

    /// Length of the in-plane part `(d2, d3)`.
    pub fn planar_norm(&self) -> f64 {
        self.d2.re.hypot(self.d3.re)
    }

    /// Reassemble `d0 I - i d.sigma`.
    pub fn matrix(&self) -> Mat2 {
        let i = C64::i();
        [[self.d0 - i * self.d3, -i * self.d1 - self.d2], [-i * self.d1 + self.d2, self.d0 + i * self.d3]]
    }
}

pub fn bloch_vector(params: &ModelParams, k: f64) -> BlochVector {
    let (s1, c1) = params.theta1.sin_cos();
    let (s2, c2) = params.theta2.sin_cos();
    let (s2k, c2k) = (2.0 * k).sin_cos();
    let a = params.alpha;
    BlochVector {
        k,
        d0: C64::new(a * (c2k * c1 * c2 - s1 * s2), 0.0),
        d1: C64::new(0.0, params.beta),
        d2: C64::new(a * (c2k * c2 * s1 + c1 * s2), 0.0),
        d3: C64::new(-a * s2k * c2, 0.0),
    }
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Coin rotation `exp(-i theta sy)`.
pub fn rotation(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

/// Gain/loss operator; `scaled` selects the balanced form carrying the
/// factor gamma, otherwise the purely lossy one.
pub fn gain_loss(params: &ModelParams, scaled: bool) -> Mat2 {
    let q = (1.0 - params.p).sqrt();
    let g = if scaled { params.gamma } else { 1.0 };
    let diag = C64::new(g * (1.0 + q) / 2.0, 0.0);
    let off = C64::new(g * (1.0 - q) / 2.0, 0.0);
    [[diag, off], [off, diag]]
}

fn shift(k: f64) -> Mat2 {
    let z = C64::new(0.0, 0.0);
    [[C64::from_polar(1.0, k), z], [z, C64::from_polar(1.0, -k)]]
}

/// `F(k) M G(k)` (or `G M F`) as an explicit matrix product, with
/// `F = R(theta1/2) S R(theta2/2)` and `G = R(theta2/2) S R(theta1/2)`.
pub fn floquet_momentum_matrix_in(params: &ModelParams, k: f64, frame: TimeFrame) -> Mat2 {
    let r1 = rotation(params.theta1 / 2.0);
    let r2 = rotation(params.theta2 / 2.0);
    let s = shift(k);
    let f = mat2_mul(&mat2_mul(&r1, &s), &r2);
    let g = mat2_mul(&mat2_mul(&r2, &s), &r1);
    let m = gain_loss(params, true);
    match frame {
        TimeFrame::Fmg => mat2_mul(&mat2_mul(&f, &m), &g),
        TimeFrame::Gmf => mat2_mul(&mat2_mul(&g, &m), &f),
    }
}

pub fn floquet_momentum_matrix(params: &ModelParams, k: f64) -> Mat2 {
    floquet_momentum_matrix_in(params, k, TimeFrame::Fmg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    pub eps_plus: C64,
    pub eps_minus: C64,
}

/// Quasienergy `i ln(lambda)` with the real part on (-pi, pi].
pub fn quasienergy(lambda: C64) -> C64 {
    let re = -lambda.arg();
    let re = if re <= -PI { PI } else { principal_angle(re) };
    C64::new(re, lambda.norm().ln())
}

pub fn bands_from(d0: C64) -> BandPoint {
    let root = (C64::new(1.0, 0.0) - d0 * d0).sqrt();
    let root = if d0.im == 0.0 {
        // Keep the branch cut on the correct side for real d0.
        let x = 1.0 - d0.re * d0.re;
        if x >= 0.0 {
            C64::new(x.sqrt(), 0.0)
        } else {
            C64::new(0.0, (-x).sqrt())
        }
    } else {
        root
    };
    let i = C64::i();
    let lambda_plus = d0 - i * root;
    let lambda_minus = d0 + i * root;
    BandPoint { lambda_plus, lambda_minus, eps_plus: quasienergy(lambda_plus), eps_minus: quasienergy(lambda_minus) }
}

pub fn bands(params: &ModelParams, k: f64) -> BandPoint {
    bands_from(bloch_vector(params, k).d0)
}

/// Uniform momentum grid `k_j = start + j * step`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KGrid {
    pub start: f64,
    pub step: f64,
    pub n: usize,
}

impl KGrid {
    /// The full zone traversed once, from pi downwards.
    pub fn brillouin(n: usize) -> Self {
        KGrid { start: PI, step: -2.0 * PI / n as f64, n }
    }

    /// Same loop, opposite orientation.
    pub fn reversed(&self) -> Self {
        KGrid { step: -self.step, ..*self }
    }

    pub fn half_shifted(&self) -> Self {
        KGrid { start: self.start + self.step / 2.0, ..*self }
    }

    /// Same start and orientation at twice the density.
    pub fn refined(&self) -> Self {
        KGrid { start: self.start, step: self.step / 2.0, n: self.n * 2 }
    }

    /// Signed loop length.
    pub fn period(&self) -> f64 {
        self.step * self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        self.start + j as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.point(j))
    }
}

/// Sub-case of a completely broken spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BrokenBranch {
    /// `d0 > 1` everywhere: real positive eigenvalues, purely imaginary quasienergies.
    PurelyImaginary,
    /// `d0 < -1` everywhere: real negative eigenvalues, `Re eps = pi`.
    RePi,
    /// `|d0| > 1` everywhere with both signs present.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PtClass {
    Unbroken,
    ExceptionalPoint,
    PartiallyBroken,
    CompletelyBroken(BrokenBranch),
}

impl PtClass {
    /// Both bands separated over the whole zone.
    pub fn is_gapped(&self) -> bool {
        matches!(self, PtClass::Unbroken | PtClass::CompletelyBroken(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            PtClass::Unbroken => "unbroken",
            PtClass::ExceptionalPoint => "exceptional_point",
            PtClass::PartiallyBroken => "partially_broken",
            PtClass::CompletelyBroken(BrokenBranch::PurelyImaginary) => "completely_broken",
            PtClass::CompletelyBroken(BrokenBranch::RePi) => "completely_broken_re_pi",
            PtClass::CompletelyBroken(BrokenBranch::Mixed) => "completely_broken_mixed",
        }
    }
}

impl std::fmt::Display for PtClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

pub fn classify_pt(params: &ModelParams, n_k: usize) -> Result<PtClass> {
    classify_pt_with(params, n_k, PT_TOLERANCE)
}

pub fn classify_pt_with(params: &ModelParams, n_k: usize, tau: f64) -> Result<PtClass> {
    if n_k < MIN_CLASSIFY_POINTS {
        return Err(Error::TooFewSamples { got: n_k, need: MIN_CLASSIFY_POINTS });
    }
    // Without gain/loss the walk is unitary and no eigenvectors can coalesce.
    if params.beta == 0.0 {
        return Ok(PtClass::Unbroken);
    }
    let d0: Vec<f64> = KGrid::brillouin(n_k).points().map(|k| bloch_vector(params, k).d0.re).collect();
    let sq = d0.iter().map(|x| x * x);
    let max = sq.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = sq.fold(f64::INFINITY, f64::min);

    Ok(if max < 1.0 - tau {
        PtClass::Unbroken
    } else if min > 1.0 + tau {
        let branch = if d0.iter().all(|&x| x > 1.0) {
            BrokenBranch::PurelyImaginary
        } else if d0.iter().all(|&x| x < -1.0) {
            BrokenBranch::RePi
        } else {
            BrokenBranch::Mixed
        };
        PtClass::CompletelyBroken(branch)
    } else if max <= 1.0 + tau {
        PtClass::ExceptionalPoint
    } else {
        PtClass::PartiallyBroken
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const XI: f64 = 0.1113;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn derived_constants() {
        let p0 = make_params(0.3, 0.4, 0.0).unwrap();
        assert_eq!((p0.gamma, p0.alpha, p0.beta), (1.0, 1.0, 0.0));

        let p = make_params(0.0, 0.0, 9.0 / 25.0).unwrap();
        let g = 5f64.sqrt() / 2.0;
        assert!((p.gamma - g).abs() < 1e-14);
        assert!((p.alpha - 0.9 * g).abs() < 1e-14);
        assert!((p.beta - 0.1 * g).abs() < 1e-14);

        let p = make_params(0.0, 0.0, 0.5).unwrap();
        assert!((p.gamma - 2f64.powf(0.25)).abs() < 1e-14);
        assert!((p.alpha * p.alpha - p.beta * p.beta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_domain() {
        assert!(matches!(make_params(0.0, 0.0, 1.0), Err(Error::InvalidLoss { .. })));
        assert!(matches!(make_params(0.0, 0.0, -0.1), Err(Error::InvalidLoss { .. })));
        assert!(make_params(f64::NAN, 0.0, 0.1).is_err());
    }

    #[test]
    fn free_shift_limit() {
        let p = make_params(0.0, 0.0, 0.0).unwrap();
        let k = 0.37;
        let d = bloch_vector(&p, k);
        assert!((d.d0.re - (2.0 * k).cos()).abs() < 1e-15);
        assert!((d.d3.re + (2.0 * k).sin()).abs() < 1e-15);
        assert_eq!(d.d2.re, 0.0);
        assert_eq!(d.d1, C64::new(0.0, 0.0));
    }

    #[test]
    fn zero_momentum_angle_addition() {
        let p = make_params(0.4, -1.1, 0.3).unwrap();
        let d = bloch_vector(&p, 0.0);
        assert!((d.d0.re - p.alpha * (0.4f64 - 1.1).cos()).abs() < 1e-14);
        assert!((d.d2.re - p.alpha * (0.4f64 - 1.1).sin()).abs() < 1e-14);
        assert_eq!(d.d3.re, 0.0);
    }

    #[test]
    fn product_matches_expansion() {
        let p = make_params(0.7, -0.2, 0.4).unwrap();
        for &k in &[0.0, 0.3, -1.2, 2.9] {
            let direct = floquet_momentum_matrix(&p, k);
            let expanded = bloch_vector(&p, k).matrix();
            for i in 0..2 {
                for j in 0..2 {
                    assert!(close(direct[i][j], expanded[i][j], 1e-12));
                }
            }
        }
    }

    #[test]
    fn second_frame_is_angle_swap() {
        let p = make_params(0.7, -0.2, 0.4).unwrap();
        for &k in &[0.1, 1.3] {
            let a = floquet_momentum_matrix_in(&p, k, TimeFrame::Gmf);
            let b = floquet_momentum_matrix(&p.swapped(), k);
            for i in 0..2 {
                for j in 0..2 {
                    assert!(close(a[i][j], b[i][j], 1e-12));
                }
            }
        }
    }

    #[test]
    fn band_special_values() {
        let b = bands_from(C64::new(0.0, 0.0));
        assert!(close(b.lambda_plus, C64::new(0.0, -1.0), 1e-15));
        assert!(close(b.lambda_minus, C64::new(0.0, 1.0), 1e-15));
        assert!(close(b.eps_plus, C64::new(PI / 2.0, 0.0), 1e-15));
        assert!(close(b.eps_minus, C64::new(-PI / 2.0, 0.0), 1e-15));

        let b = bands_from(C64::new(1.0, 0.0));
        assert!(close(b.lambda_plus, b.lambda_minus, 1e-15));
        assert!(b.eps_plus.norm() < 1e-15);

        let b = bands_from(C64::new(1.5, 0.0));
        assert!(b.lambda_plus.im == 0.0 && b.lambda_plus.re > 0.0);
        assert_eq!(b.eps_plus.re, 0.0);

        let b = bands_from(C64::new(-1.5, 0.0));
        assert!(b.lambda_plus.re < 0.0 && b.lambda_minus.re < 0.0);
        assert_eq!(b.eps_plus.re, PI);
        assert_eq!(b.eps_minus.re, PI);
    }

    #[test]
    fn partially_broken_example_has_complex_quasienergy() {
        let p = make_params(-17.0 * PI / 36.0, 19.0 * PI / 36.0 + XI / 2.0, 9.0 / 25.0).unwrap();
        let grid = KGrid::brillouin(512);
        let pts: Vec<BandPoint> = grid.points().map(|k| bands(&p, k)).collect();
        assert!(pts.iter().any(|b| b.eps_plus.im.abs() > 1e-3));
        assert!(pts.iter().any(|b| b.eps_plus.im.abs() < 1e-12));
        assert!(pts.iter().any(|b| (b.lambda_plus.norm() - 1.0).abs() > 1e-3 && b.lambda_plus.re > 0.0));
    }

    #[test]
    fn grid_orientation() {
        let g = KGrid::brillouin(8);
        assert_eq!(g.point(0), PI);
        assert!(g.step < 0.0);
        assert!((g.period() + 2.0 * PI).abs() < 1e-15);
        assert!((g.reversed().period() - 2.0 * PI).abs() < 1e-15);
        assert_eq!(g.refined().n, 16);
    }

    #[test]
    fn classify_rejects_coarse_grid() {
        let p = make_params(0.1, 0.2, 0.1).unwrap();
        assert!(classify_pt(&p, 32).is_err());
    }

    #[test]
    fn unitary_limit_is_unbroken_off_boundary() {
        let p = make_params(0.3, 0.9, 0.0).unwrap();
        assert_eq!(classify_pt(&p, 256).unwrap(), PtClass::Unbroken);
    }
}
