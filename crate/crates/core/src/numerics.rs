//! Numerical substrate: dense non-Hermitian eigenproblems with paired
//! left/right eigenvectors, periodic quadrature and winding extraction
//! from sampled angles.

use std::f64::consts::{PI, TAU};

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Relative residual accepted by [`eig_general`] unless the caller asks otherwise.
pub const DEFAULT_EIG_TOL: f64 = 1e-9;

/// Normalized overlap |<l|r>| / (|l| |r|) below which an eigenpair is flagged
/// as near-defective.
pub const NEAR_DEFECTIVE_OVERLAP: f64 = 1e-8;

/// Safety margin (radians) below pi for consecutive angle increments.
pub const DEFAULT_UNWRAP_MARGIN: f64 = 0.1;

/// Minimum number of samples accepted by [`integrate_periodic`].
pub const MIN_QUADRATURE_SAMPLES: usize = 8;

/// Eigenvalues of a dense complex matrix with right eigenvectors (unit
/// 2-norm, stored as columns) and left eigenvectors scaled so that
/// `<l_i|r_j> = delta_ij`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    pub right_vectors: Mat<C64>,
    pub left_vectors: Mat<C64>,
    /// Indices whose left/right overlap fell below [`NEAR_DEFECTIVE_OVERLAP`].
    pub near_defective: Vec<usize>,
    /// Largest relative residual over all checked eigenpairs.
    pub worst_residual: f64,
}

impl Spectrum {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn right(&self, i: usize) -> Vec<C64> {
        self.right_vectors.col(i).iter().copied().collect()
    }

    pub fn left(&self, i: usize) -> Vec<C64> {
        self.left_vectors.col(i).iter().copied().collect()
    }

    /// `<l_i|r_j>` with the conjugate on the left vector.
    pub fn overlap(&self, i: usize, j: usize) -> C64 {
        let l = self.left_vectors.col(i);
        let r = self.right_vectors.col(j);
        l.iter().zip(r.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_near_defective(&self, i: usize) -> bool {
        self.near_defective.contains(&i)
    }
}

/// Frobenius norm of a dense complex matrix.
pub fn frobenius_norm(m: MatRef<'_, C64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

/// Largest `|| A v_i - mu_i v_i || / |v_i|` over the columns of `vectors`,
/// with products done by the dense kernel.
fn column_residuals(
    product: MatRef<'_, C64>,
    vectors: MatRef<'_, C64>,
    mu: impl Fn(usize) -> C64,
    skip: &[usize],
) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..vectors.ncols() {
        if skip.contains(&j) {
            continue;
        }
        let (mut res, mut norm) = (0.0, 0.0);
        let m = mu(j);
        for (a, v) in product.col(j).iter().zip(vectors.col(j).iter()) {
            res += (a - m * v).norm_sqr();
            norm += v.norm_sqr();
        }
        worst = worst.max((res / norm).sqrt());
    }
    worst
}

/// Full eigendecomposition of a square complex matrix.
///
/// Right eigenvectors come from a dense QR-based solver; left eigenvectors
/// are the conjugated rows of the inverse right-eigenvector matrix, which
/// makes the pairing and biorthonormality exact by construction. When that
/// inverse does not exist (defective input) the left set is taken from the
/// adjoint problem and paired by eigenvalue, ties broken by maximal overlap.
///
/// Every right pair, and every left pair not flagged near-defective, must
/// satisfy `|| M v - lambda v || <= tol * ||M||_F`; otherwise
/// [`Error::NotConverged`] carries the worst residual seen.
pub fn eig_general(matrix: MatRef<'_, C64>, tol: f64) -> Result<Spectrum> {
    let n = matrix.nrows();
    if n == 0 || matrix.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "eigensolver needs a non-empty square matrix, got {}x{}",
            n,
            matrix.ncols()
        )));
    }
    for j in 0..n {
        for i in 0..n {
            let z = matrix[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite entry at ({i}, {j})")));
            }
        }
    }

    let scale = frobenius_norm(matrix).max(f64::MIN_POSITIVE);
    let evd = matrix.eigen().map_err(|_| Error::NotConverged { worst_residual: f64::INFINITY })?;
    let eigenvalues: Vec<C64> = evd.S().column_vector().iter().copied().collect();
    let mut right = evd.U().to_owned();
    for j in 0..n {
        let norm = right.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..n {
                right[(i, j)] /= norm;
            }
        }
    }

    let inverse = right.partial_piv_lu().inverse();
    let inverse_ok = inverse.col_iter().all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()));

    let mut near_defective = Vec::new();
    let left = if inverse_ok {
        let left = Mat::from_fn(n, n, |i, j| inverse[(j, i)].conj());
        for j in 0..n {
            // <l|r> = 1 exactly, so the normalized overlap is 1/|l|.
            let lnorm = left.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if 1.0 / lnorm < NEAR_DEFECTIVE_OVERLAP {
                near_defective.push(j);
            }
        }
        left
    } else {
        adjoint_left_vectors(matrix, &eigenvalues, right.as_ref(), scale * tol, &mut near_defective)?
    };

    let mr = matrix * &right;
    let ml = matrix.adjoint() * &left;
    let worst = column_residuals(mr.as_ref(), right.as_ref(), |i| eigenvalues[i], &[]).max(column_residuals(
        ml.as_ref(),
        left.as_ref(),
        |i| eigenvalues[i].conj(),
        &near_defective,
    )) / scale;
    if !worst.is_finite() || worst > tol {
        return Err(Error::NotConverged { worst_residual: worst });
    }

    Ok(Spectrum { eigenvalues, right_vectors: right, left_vectors: left, near_defective, worst_residual: worst })
}

fn adjoint_left_vectors(
    matrix: MatRef<'_, C64>,
    eigenvalues: &[C64],
    right: MatRef<'_, C64>,
    tie_tol: f64,
    near_defective: &mut Vec<usize>,
) -> Result<Mat<C64>> {
    let n = eigenvalues.len();
    let adjoint = Mat::from_fn(n, n, |i, j| matrix[(j, i)].conj());
    let evd = adjoint.eigen().map_err(|_| Error::NotConverged { worst_residual: f64::INFINITY })?;
    let mu: Vec<C64> = evd.S().column_vector().iter().copied().collect();
    let candidates = evd.U();
    let mut used = vec![false; n];
    let mut left = Mat::<C64>::zeros(n, n);

    for i in 0..n {
        let target = eigenvalues[i].conj();
        let best_dist = (0..n).filter(|&j| !used[j]).map(|j| (mu[j] - target).norm()).fold(f64::INFINITY, f64::min);
        let overlap_with = |j: usize| -> C64 { (0..n).map(|k| candidates[(k, j)].conj() * right[(k, i)]).sum() };
        let pick = (0..n)
            .filter(|&j| !used[j] && (mu[j] - target).norm() <= best_dist + tie_tol)
            .max_by(|&a, &b| overlap_with(a).norm().total_cmp(&overlap_with(b).norm()))
            .expect("at least one unused candidate");
        used[pick] = true;

        let ov = overlap_with(pick);
        let lnorm = (0..n).map(|k| candidates[(k, pick)].norm_sqr()).sum::<f64>().sqrt();
        let normalized = ov.norm() / lnorm;
        // Scale so <l|r> = 1 unless the pair has (numerically) coalesced.
        let factor = if normalized < NEAR_DEFECTIVE_OVERLAP {
            near_defective.push(i);
            C64::new(1.0 / lnorm, 0.0)
        } else {
            C64::new(1.0, 0.0) / ov.conj()
        };
        for k in 0..n {
            left[(k, i)] = candidates[(k, pick)] * factor;
        }
    }
    Ok(left)
}

/// Map an angle onto the principal branch (-pi, pi].
pub fn principal_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// Total winding of a closed loop of sampled angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub turns: i64,
    /// Sum of principal-branch increments around the loop (radians).
    pub total_angle: f64,
    /// `|total_angle / 2pi - turns|`.
    pub residue: f64,
}

/// Winding number of angles sampled in order around a closed loop (the
/// increment from the last sample back to the first is included).
///
/// Every increment must satisfy `|d| < pi - margin`; a larger step means the
/// grid is too coarse to resolve the branch unambiguously.
pub fn unwrap_winding(samples: &[f64], margin: f64) -> Result<Winding> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { got: 0, need: 1 });
    }
    let n = samples.len();
    let mut total = 0.0;
    for i in 0..n {
        let next = samples[(i + 1) % n];
        let d = principal_angle(next - samples[i]);
        if d.abs() >= PI - margin {
            return Err(Error::RefinementNeeded { index: i, increment: d });
        }
        total += d;
    }
    let raw = total / TAU;
    let turns = raw.round();
    Ok(Winding { turns: turns as i64, total_angle: total, residue: (raw - turns).abs() })
}

/// Rectangle-rule estimate of the loop integral of uniformly spaced
/// periodic samples; `period` is the signed length of the loop, so a
/// negative value integrates against the traversal direction.
pub fn integrate_periodic(samples: &[C64], period: f64) -> Result<C64> {
    if samples.len() < MIN_QUADRATURE_SAMPLES {
        return Err(Error::TooFewSamples { got: samples.len(), need: MIN_QUADRATURE_SAMPLES });
    }
    let sum: C64 = samples.iter().sum();
    Ok(sum * (period / samples.len() as f64))
}
