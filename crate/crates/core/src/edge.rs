//! Topological edge states at the `x = 0` interface between two bulks.
//!
//! The closed-form construction works in the unitary frame: decay rates
//! follow from the dispersion at `cos E = +-1`, the coin is fixed to `|+>` or
//! `|->` by the chiral symmetry, and the two amplitudes are matched on the
//! interface rows of the eigenvalue equation. With gain/loss the same
//! spatial profile is an eigenstate with eigenvalue `+-gamma` or `+-1/gamma`.

use num_complex::Complex64 as C64;

use crate::bloch::{quasienergy, TimeFrame};
use crate::error::{Error, Result};
use crate::numerics::Spectrum;
use crate::realspace::{make_inhomogeneous, step, Coin, LatticeConfig, ProbabilitySeries, WalkState};
use crate::topology::topo_numbers;

/// Largest acceptable `exp(-2 kappa N)` for the analytic construction.
pub const RING_TAIL_LIMIT: f64 = 1e-12;

/// Tolerance on the eigenvalue equation away from the far interface.
pub const CONSTRUCTION_TOL: f64 = 1e-8;

/// Half-width (in sites) of the interface window used to fix `(r, t)`.
const MATCH_WINDOW: i64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gap {
    Zero,
    Pi,
}

impl Gap {
    pub fn cos_e(&self) -> f64 {
        match self {
            Gap::Zero => 1.0,
            Gap::Pi => -1.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Gap::Zero => "zero",
            Gap::Pi => "pi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Bright,
    Dark,
}

impl Kind {
    pub fn label(&self) -> &'static str {
        match self {
            Kind::Bright => "bright",
            Kind::Dark => "dark",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn of(x: i64) -> Self {
        if x.rem_euclid(2) == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn other(&self) -> Self {
        match self {
            Parity::Odd => Parity::Even,
            Parity::Even => Parity::Odd,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
        }
    }
}

/// Decay of an evanescent bulk solution. When the dispersion gives
/// `cosh 2 kappa < -1` the momentum sits at `pi/2 + i kappa` and the
/// amplitude alternates sign every two sites (`stagger = -1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evanescent {
    pub kappa: f64,
    pub stagger: f64,
}

fn rhs_and_slope(theta: (f64, f64), gap: Gap) -> Result<(f64, f64)> {
    let (s1, c1) = theta.0.sin_cos();
    let (s2, c2) = theta.1.sin_cos();
    let den = c1 * c2;
    if den.abs() < 1e-12 {
        return Err(Error::SingularParameters);
    }
    let cos_e = gap.cos_e();
    Ok(((cos_e + s1 * s2) / den, (cos_e * s1 + s2) / den))
}

pub fn evanescent(theta: (f64, f64), gap: Gap) -> Result<Evanescent> {
    let (rhs, _) = rhs_and_slope(theta, gap)?;
    if rhs.abs() <= 1.0 {
        return Err(Error::NoLocalizedSolution { rhs });
    }
    Ok(Evanescent { kappa: 0.5 * rhs.abs().acosh(), stagger: rhs.signum() })
}

/// Spatial decay rate per site on one side of the interface.
pub fn decay_rate(theta: (f64, f64), gap: Gap) -> Result<f64> {
    Ok(evanescent(theta, gap)?.kappa)
}

/// Coin of the edge state in this gap, or `None` when the sign conditions
/// on the two sides cannot both be met.
pub fn coin_selector(theta_l: (f64, f64), theta_r: (f64, f64), gap: Gap) -> Result<Option<Coin>> {
    let left = evanescent(theta_l, gap)?;
    let right = evanescent(theta_r, gap)?;
    let (_, q_l) = rhs_and_slope(theta_l, gap)?;
    let (_, q_r) = rhs_and_slope(theta_r, gap)?;
    let l = left.stagger * q_l;
    let r = -right.stagger * q_r;
    Ok(if l > 0.0 && r > 0.0 {
        Some(Coin::Plus)
    } else if l < 0.0 && r < 0.0 {
        Some(Coin::Minus)
    } else {
        None
    })
}

/// Kind and eigenvalue of the non-unitary edge state for a coin and gap.
pub fn classify_edge(coin: Coin, gap: Gap, gamma: f64) -> (Kind, f64) {
    match (coin, gap) {
        (Coin::Plus, Gap::Zero) => (Kind::Bright, gamma),
        (Coin::Minus, Gap::Zero) => (Kind::Dark, 1.0 / gamma),
        (Coin::Minus, Gap::Pi) => (Kind::Bright, -gamma),
        (_, Gap::Pi) => (Kind::Dark, -1.0 / gamma),
        (Coin::PlusIMinus, Gap::Zero) => unreachable!("edge states carry |+> or |->"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStateSolution {
    pub theta_l: (f64, f64),
    pub theta_r: (f64, f64),
    pub gap: Gap,
    pub kind: Kind,
    pub parity: Parity,
    pub kappa_l: f64,
    pub kappa_r: f64,
    pub stagger_l: f64,
    pub stagger_r: f64,
    /// Amplitude on the left, multiplying the unit coin vector.
    pub r_coeff: f64,
    pub t_coeff: f64,
    pub coin: Coin,
    pub eigenvalue: C64,
    pub quasienergy: C64,
    pub gamma: f64,
    pub n_half: usize,
    /// `|| U psi - lambda psi ||` over the whole ring, including the far
    /// interface where the ansatz is truncated.
    pub ring_residual: f64,
}

/// Sites of one parity on each side of `x = 0`, nearest first.
fn first_site(parity: Parity, left: bool) -> i64 {
    match (parity, left) {
        (Parity::Odd, true) => -1,
        (Parity::Even, true) => -2,
        (Parity::Odd, false) => 1,
        (Parity::Even, false) => 0,
    }
}

struct Ansatz {
    n_half: usize,
    parity: Parity,
    left: Evanescent,
    right: Evanescent,
    coin: [C64; 2],
}

impl Ansatz {
    fn side(&self, r: f64, t: f64, take_left: bool, take_right: bool) -> Vec<C64> {
        let n = self.n_half as i64;
        let mut v = vec![C64::new(0.0, 0.0); 2 * (2 * self.n_half + 1)];
        if take_left {
            let x0 = first_site(self.parity, true);
            let mut x = x0;
            while x >= -n {
                let m = (x0 - x) / 2;
                let amp = r * (self.left.kappa * x as f64).exp() * self.left.stagger.powi(m as i32);
                let i = (x + n) as usize;
                v[2 * i] = self.coin[0] * amp;
                v[2 * i + 1] = self.coin[1] * amp;
                x -= 2;
            }
        }
        if take_right {
            let x0 = first_site(self.parity, false);
            let mut x = x0;
            while x <= n {
                let m = (x - x0) / 2;
                let amp = t * (-self.right.kappa * x as f64).exp() * self.right.stagger.powi(m as i32);
                let i = (x + n) as usize;
                v[2 * i] = self.coin[0] * amp;
                v[2 * i + 1] = self.coin[1] * amp;
                x += 2;
            }
        }
        v
    }
}

fn eigen_defect(config: &LatticeConfig, v: &[C64], lambda: f64) -> Result<Vec<C64>> {
    let state = WalkState::from_amplitudes(config.n_half, v.to_vec())?;
    let u = step(&state, config, true)?;
    Ok(u.amplitudes.iter().zip(v).map(|(a, b)| a - b * lambda).collect())
}

fn rows_norm(v: &[C64], n_half: usize, keep: impl Fn(i64) -> bool) -> f64 {
    v.chunks(2)
        .enumerate()
        .filter(|(i, _)| keep(*i as i64 - n_half as i64))
        .map(|(_, c)| c[0].norm_sqr() + c[1].norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Closed-form edge state at the `x = 0` interface on one parity sublattice.
pub fn edge_state(
    theta_l: (f64, f64),
    theta_r: (f64, f64),
    gap: Gap,
    parity: Parity,
    gamma: f64,
    n_half: usize,
) -> Result<EdgeStateSolution> {
    if !gamma.is_finite() || gamma < 1.0 {
        return Err(Error::InvalidArgument(format!("gamma must be finite and >= 1, got {gamma}")));
    }
    let p = 1.0 - gamma.powi(-4);
    let coin = coin_selector(theta_l, theta_r, gap)?.ok_or_else(|| {
        Error::NoEdgeState(format!(
            "sign conditions for |+> and |-> both fail in the {} gap; the bulks carry the same invariant",
            gap.label()
        ))
    })?;
    let left = evanescent(theta_l, gap)?;
    let right = evanescent(theta_r, gap)?;
    for kappa in [left.kappa, right.kappa] {
        let tail = (-2.0 * kappa * n_half as f64).exp();
        if tail >= RING_TAIL_LIMIT {
            return Err(Error::RingTooSmall { kappa, tail });
        }
    }

    let config = make_inhomogeneous(theta_l, theta_r, n_half, p, TimeFrame::Fmg)?;
    let (kind, lambda) = classify_edge(coin, gap, config.gamma());
    let ansatz = Ansatz { n_half, parity, left, right, coin: coin.amplitudes() };

    // Minimize || r a + t b || over the interface window.
    let near = |x: i64| x.abs() <= MATCH_WINDOW;
    let a = eigen_defect(&config, &ansatz.side(1.0, 0.0, true, false), lambda)?;
    let b = eigen_defect(&config, &ansatz.side(0.0, 1.0, false, true), lambda)?;
    let dot = |u: &[C64], w: &[C64]| -> C64 {
        u.chunks(2)
            .zip(w.chunks(2))
            .enumerate()
            .filter(|(i, _)| near(*i as i64 - n_half as i64))
            .map(|(_, (p, q))| p[0].conj() * q[0] + p[1].conj() * q[1])
            .sum()
    };
    let (gaa, gbb, gab) = (dot(&a, &a).re, dot(&b, &b).re, dot(&a, &b));
    // Smallest eigenvector of the Hermitian Gram matrix [[gaa, gab], [gab*, gbb]].
    let mean = 0.5 * (gaa + gbb);
    let disc = (0.25 * (gaa - gbb).powi(2) + gab.norm_sqr()).sqrt();
    let mu = mean - disc;
    let (mut r, mut t) = if gab.norm() > 1e-300 {
        (-gab, C64::new(gaa - mu, 0.0))
    } else if gaa <= gbb {
        (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    } else {
        (C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    };
    // Fix the global phase so that r is real and non-negative.
    let phase = if r.norm() > 0.0 { r.conj() / r.norm() } else { t.conj() / t.norm() };
    r *= phase;
    t *= phase;
    if t.im.abs() > 1e-8 * t.norm().max(1e-300) {
        return Err(Error::ConstructionInconsistent { residual: t.im.abs() });
    }
    let (r, t) = (r.re, t.re);

    let raw = ansatz.side(r, t, true, true);
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let (r, t) = (r / norm, t / norm);
    let psi: Vec<C64> = raw.iter().map(|z| z / norm).collect();

    let defect = eigen_defect(&config, &psi, lambda)?;
    let n = n_half as i64;
    let local = rows_norm(&defect, n_half, |x| x.abs() <= n - 4);
    if local.is_nan() || local > CONSTRUCTION_TOL {
        return Err(Error::ConstructionInconsistent { residual: local });
    }
    let ring_residual = rows_norm(&defect, n_half, |_| true);

    let eigenvalue = C64::new(lambda, 0.0);
    Ok(EdgeStateSolution {
        theta_l,
        theta_r,
        gap,
        kind,
        parity,
        kappa_l: left.kappa,
        kappa_r: right.kappa,
        stagger_l: left.stagger,
        stagger_r: right.stagger,
        r_coeff: r,
        t_coeff: t,
        coin,
        eigenvalue,
        quasienergy: quasienergy(eigenvalue),
        gamma: config.gamma(),
        n_half,
        ring_residual,
    })
}

impl EdgeStateSolution {
    /// Normalized amplitudes on the ring, layout as in `realspace`.
    pub fn wavefunction(&self) -> Vec<C64> {
        let ansatz = Ansatz {
            n_half: self.n_half,
            parity: self.parity,
            left: Evanescent { kappa: self.kappa_l, stagger: self.stagger_l },
            right: Evanescent { kappa: self.kappa_r, stagger: self.stagger_r },
            coin: self.coin.amplitudes(),
        };
        ansatz.side(self.r_coeff, self.t_coeff, true, true)
    }

    /// `|psi(x)|^2` per site from `x = -N`.
    pub fn profile(&self) -> Vec<f64> {
        self.wavefunction().chunks(2).map(|c| c[0].norm_sqr() + c[1].norm_sqr()).collect()
    }

    /// Same state on the other parity sublattice.
    pub fn partner(&self) -> Result<EdgeStateSolution> {
        edge_state(self.theta_l, self.theta_r, self.gap, self.parity.other(), self.gamma, self.n_half)
    }
}

/// Inverse participation ratio of a normalized distribution.
pub fn ipr(probabilities: &[f64]) -> Result<f64> {
    let sum: f64 = probabilities.iter().sum();
    if sum.is_nan() || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Unnormalized { sum });
    }
    Ok(probabilities.iter().map(|p| p * p).sum())
}

/// Selection thresholds for numeric edge states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFilter {
    pub mod_tol: f64,
    pub ipr_floor: f64,
}

impl EdgeFilter {
    /// `mod_tol = (gamma - 1)/2` (floored at 1e-9 for the unitary case) and
    /// `ipr_floor = 10 / (2N + 1)`.
    pub fn defaults(gamma: f64, n_half: usize) -> Self {
        EdgeFilter { mod_tol: ((gamma - 1.0) / 2.0).max(1e-9), ipr_floor: 10.0 / (2 * n_half + 1) as f64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericEdgeState {
    pub index: usize,
    pub eigenvalue: C64,
    pub profile: Vec<f64>,
    pub ipr: f64,
    pub gap: Gap,
    pub kind: Kind,
}

impl NumericEdgeState {
    /// Site of maximal probability.
    pub fn peak_site(&self, n_half: usize) -> i64 {
        let (i, _) = self
            .profile
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        i as i64 - n_half as i64
    }
}

/// Site probabilities of right eigenvector `i`, normalized to one.
pub fn eigenvector_profile(spectrum: &Spectrum, i: usize) -> Vec<f64> {
    let v = spectrum.right(i);
    let mut probs: Vec<f64> = v.chunks(2).map(|c| c[0].norm_sqr() + c[1].norm_sqr()).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    probs
}

/// Eigenpairs on the `gamma` or `1/gamma` shells that are also localized.
pub fn find_edge_states_numeric(spectrum: &Spectrum, gamma: f64, filter: EdgeFilter) -> Vec<NumericEdgeState> {
    let mut found = Vec::new();
    for (i, &lam) in spectrum.eigenvalues.iter().enumerate() {
        let modulus = lam.norm();
        let kind = if (modulus - gamma).abs() <= filter.mod_tol {
            Kind::Bright
        } else if (modulus - 1.0 / gamma).abs() <= filter.mod_tol {
            Kind::Dark
        } else {
            continue;
        };
        let profile = eigenvector_profile(spectrum, i);
        let value: f64 = profile.iter().map(|p| p * p).sum();
        if value < filter.ipr_floor {
            continue;
        }
        let gap = if lam.re > 0.0 { Gap::Zero } else { Gap::Pi };
        found.push(NumericEdgeState { index: i, eigenvalue: lam, profile, ipr: value, gap, kind });
    }
    found
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryCount {
    /// `0` for the central interface, `N` for the one across the ring seam.
    pub site: i64,
    pub zero: usize,
    pub pi: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BulkBoundaryReport {
    pub delta_nu0: u64,
    pub delta_nu_pi: u64,
    /// States counted at the `x = 0` interface.
    pub counted_zero_states_per_boundary: usize,
    pub counted_pi_states_per_boundary: usize,
    pub boundaries: Vec<BoundaryCount>,
    pub states: Vec<NumericEdgeState>,
    /// Every boundary carries `delta_nu0` zero-gap and `delta_nu_pi` pi-gap states.
    pub consistent: bool,
}

/// Assign states to the interface nearest their probability peak.
pub fn count_by_boundary(states: &[NumericEdgeState], n_half: usize) -> Vec<BoundaryCount> {
    let mut counts =
        vec![BoundaryCount { site: 0, zero: 0, pi: 0 }, BoundaryCount { site: n_half as i64, zero: 0, pi: 0 }];
    for s in states {
        let slot = if s.peak_site(n_half).abs() <= n_half as i64 / 2 { 0 } else { 1 };
        match s.gap {
            Gap::Zero => counts[slot].zero += 1,
            Gap::Pi => counts[slot].pi += 1,
        }
    }
    counts
}

/// Compare bulk invariants with numerically counted interface states.
pub fn bulk_boundary_check(
    theta_l: (f64, f64),
    theta_r: (f64, f64),
    p: f64,
    n_half: usize,
    n_k: usize,
) -> Result<BulkBoundaryReport> {
    let config = make_inhomogeneous(theta_l, theta_r, n_half, p, TimeFrame::Fmg)?;
    let base = config.params();
    let nu_l = topo_numbers(&base.with_angles(theta_l.0, theta_l.1), n_k)?;
    let nu_r = topo_numbers(&base.with_angles(theta_r.0, theta_r.1), n_k)?;
    let delta_nu0 = (nu_l.nu_zero - nu_r.nu_zero).unsigned_abs();
    let delta_nu_pi = (nu_l.nu_pi - nu_r.nu_pi).unsigned_abs();

    let u = crate::realspace::build_floquet(&config, true)?;
    let spectrum = crate::numerics::eig_general(u.as_ref(), crate::numerics::DEFAULT_EIG_TOL)?;
    let states = find_edge_states_numeric(&spectrum, base.gamma, EdgeFilter::defaults(base.gamma, n_half));
    let boundaries = count_by_boundary(&states, n_half);
    let consistent = boundaries.iter().all(|b| b.zero as u64 == delta_nu0 && b.pi as u64 == delta_nu_pi);
    Ok(BulkBoundaryReport {
        delta_nu0,
        delta_nu_pi,
        counted_zero_states_per_boundary: boundaries[0].zero,
        counted_pi_states_per_boundary: boundaries[0].pi,
        boundaries,
        states,
        consistent,
    })
}

/// L1 distance between `P_N(., t)` and the analytic profile. When the walk
/// occupies both sublattices the reference mixes the two parity solutions
/// with the walk's own sublattice weights.
pub fn compare_to_dynamics(solution: &EdgeStateSolution, series: &ProbabilitySeries, t: usize) -> Result<f64> {
    if series.n_half != solution.n_half {
        return Err(Error::SizeMismatch { expected: 2 * solution.n_half + 1, got: 2 * series.n_half + 1 });
    }
    let pn = series.normalized.get(t).ok_or_else(|| Error::InvalidArgument(format!("time step {t} not recorded")))?;
    let n = solution.n_half as i64;
    let weight = |par: Parity| -> f64 {
        pn.iter().enumerate().filter(|(i, _)| Parity::of(*i as i64 - n) == par).map(|(_, p)| p).sum()
    };
    let own = weight(solution.parity);
    let other = weight(solution.parity.other());
    let mut reference = solution.profile();
    if other > 1e-12 {
        let partner = solution.partner()?.profile();
        for (r, q) in reference.iter_mut().zip(partner) {
            *r = *r * own + q * other;
        }
    }
    Ok(pn.iter().zip(&reference).map(|(a, b)| (a - b).abs()).sum())
}
