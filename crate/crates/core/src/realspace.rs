//! Position-space walks on a ring of `2N + 1` sites.
//!
//! Site `x` in `-N..=N` maps to index `x + N`; the amplitude of coin `c` at
//! that site lives at `2 * (x + N) + c`.

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bloch::{gain_loss, make_params, rotation, Mat2, ModelParams, TimeFrame};
use crate::error::{Error, Result};

/// Recorded alongside disorder realizations so runs can be reproduced.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// Ring half-size used for edge-state studies unless overridden.
pub const DEFAULT_N_HALF: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConfig {
    pub n_half: usize,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub p: f64,
    pub timeframe: TimeFrame,
}

impl LatticeConfig {
    pub fn sites(&self) -> usize {
        2 * self.n_half + 1
    }

    pub fn dimension(&self) -> usize {
        2 * self.sites()
    }

    pub fn index_of(&self, x: i64) -> Result<usize> {
        site_index(x, self.n_half)
    }

    pub fn site_of(&self, index: usize) -> i64 {
        index as i64 - self.n_half as i64
    }

    /// Loss-dependent constants (the angles are irrelevant here).
    pub fn params(&self) -> ModelParams {
        make_params(0.0, 0.0, self.p).expect("validated at construction")
    }

    pub fn gamma(&self) -> f64 {
        self.params().gamma
    }

    /// `theta(x) = theta(N - x)` with ring arithmetic modulo `2N + 1`.
    pub fn is_pt_symmetric(&self) -> bool {
        let l = self.sites() as i64;
        let n = self.n_half as i64;
        (-n..=n).all(|x| {
            let mirror = (n - x + n).rem_euclid(l) as usize;
            let i = (x + n) as usize;
            self.theta1[i] == self.theta1[mirror] && self.theta2[i] == self.theta2[mirror]
        })
    }

    fn validate(&self) -> Result<()> {
        make_params(0.0, 0.0, self.p)?;
        let l = self.sites();
        for prof in [&self.theta1, &self.theta2] {
            if prof.len() != l {
                return Err(Error::SizeMismatch { expected: l, got: prof.len() });
            }
            if prof.iter().any(|t| !t.is_finite()) {
                return Err(Error::InvalidArgument("coin angle profile must be finite".into()));
            }
        }
        Ok(())
    }
}

pub fn site_index(x: i64, n_half: usize) -> Result<usize> {
    let n = n_half as i64;
    if x < -n || x > n {
        return Err(Error::SiteOutOfRange { x, n_half });
    }
    Ok((x + n) as usize)
}

fn check_n_half(n_half: usize) -> Result<()> {
    if n_half < 2 {
        return Err(Error::InvalidArgument(format!("n_half must be at least 2, got {n_half}")));
    }
    Ok(())
}

pub fn make_homogeneous(theta: (f64, f64), n_half: usize, p: f64, timeframe: TimeFrame) -> Result<LatticeConfig> {
    make_inhomogeneous(theta, theta, n_half, p, timeframe)
}

/// Region `L` on `x < 0`, region `R` on `x >= 0`.
pub fn make_inhomogeneous(
    theta_l: (f64, f64),
    theta_r: (f64, f64),
    n_half: usize,
    p: f64,
    timeframe: TimeFrame,
) -> Result<LatticeConfig> {
    check_n_half(n_half)?;
    let n = n_half as i64;
    let pick = |x: i64| if x < 0 { theta_l } else { theta_r };
    let config = LatticeConfig {
        n_half,
        theta1: (-n..=n).map(|x| pick(x).0).collect(),
        theta2: (-n..=n).map(|x| pick(x).1).collect(),
        p,
        timeframe,
    };
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DisorderMode {
    /// One draw per site added to both angles.
    #[default]
    Shared,
    /// Separate draws for the two angles.
    Independent,
}

/// Static disorder: `delta theta` uniform in `[-amplitude, amplitude]`, one
/// value per site.
pub fn apply_disorder(config: &LatticeConfig, amplitude: f64, seed: u64) -> Result<LatticeConfig> {
    apply_disorder_with(config, amplitude, seed, DisorderMode::Shared)
}

pub fn apply_disorder_with(
    config: &LatticeConfig,
    amplitude: f64,
    seed: u64,
    mode: DisorderMode,
) -> Result<LatticeConfig> {
    if !amplitude.is_finite() || amplitude < 0.0 {
        return Err(Error::InvalidArgument(format!("disorder amplitude must be >= 0, got {amplitude}")));
    }
    let mut out = config.clone();
    if amplitude == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..out.sites() {
        let d1 = rng.random_range(-amplitude..=amplitude);
        let d2 = match mode {
            DisorderMode::Shared => d1,
            DisorderMode::Independent => rng.random_range(-amplitude..=amplitude),
        };
        out.theta1[i] += d1;
        out.theta2[i] += d2;
    }
    Ok(out)
}

/// Block-diagonal matrix of site-local coin operators.
fn local_operator(config: &LatticeConfig, coin: impl Fn(usize) -> Mat2) -> Mat<C64> {
    let dim = config.dimension();
    let mut m = Mat::<C64>::zeros(dim, dim);
    for i in 0..config.sites() {
        let c = coin(i);
        for a in 0..2 {
            for b in 0..2 {
                m[(2 * i + a, 2 * i + b)] = c[a][b];
            }
        }
    }
    m
}

/// Coin 0 moves one site left, coin 1 one site right, around the ring.
fn shift_operator(config: &LatticeConfig) -> Mat<C64> {
    let l = config.sites();
    let dim = config.dimension();
    let mut m = Mat::<C64>::zeros(dim, dim);
    let one = C64::new(1.0, 0.0);
    for i in 0..l {
        m[(2 * ((i + l - 1) % l), 2 * i)] = one;
        m[(2 * ((i + 1) % l) + 1, 2 * i + 1)] = one;
    }
    m
}

/// Dense one-period operator `F M G` (or `G M F`). `scaled` selects the
/// balanced gain/loss operator; otherwise the passive one, smaller by `gamma`.
pub fn build_floquet(config: &LatticeConfig, scaled: bool) -> Result<Mat<C64>> {
    config.validate()?;
    let r1 = local_operator(config, |i| rotation(config.theta1[i] / 2.0));
    let r2 = local_operator(config, |i| rotation(config.theta2[i] / 2.0));
    let gl = gain_loss(&config.params(), scaled);
    let m = local_operator(config, |_| gl);
    let s = shift_operator(config);
    let f = &r1 * &s * &r2;
    let g = &r2 * &s * &r1;
    Ok(match config.timeframe {
        TimeFrame::Fmg => &f * &m * &g,
        TimeFrame::Gmf => &g * &m * &f,
    })
}

/// `|| eta U^dagger eta - U ||_max` with `eta` swapping the two coin states.
pub fn pseudo_antiunitarity_defect(config: &LatticeConfig) -> Result<f64> {
    let u = build_floquet(config, true)?;
    let dim = config.dimension();
    let flip = |a: usize| a ^ 1;
    let mut worst: f64 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            let lhs = u[(flip(b), flip(a))].conj();
            worst = worst.max((lhs - u[(a, b)]).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coin {
    Plus,
    Minus,
    /// `(|+> + i|->) / sqrt 2`
    PlusIMinus,
}

impl Coin {
    pub fn amplitudes(&self) -> [C64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Coin::Plus => [C64::new(h, 0.0), C64::new(h, 0.0)],
            Coin::Minus => [C64::new(h, 0.0), C64::new(-h, 0.0)],
            Coin::PlusIMinus => [C64::new(0.5, 0.5), C64::new(0.5, -0.5)],
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Coin::Plus => "plus",
            Coin::Minus => "minus",
            Coin::PlusIMinus => "plus_i_minus",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    pub n_half: usize,
    pub amplitudes: Vec<C64>,
    pub step: usize,
}

impl WalkState {
    pub fn from_amplitudes(n_half: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let expected = 2 * (2 * n_half + 1);
        if amplitudes.len() != expected {
            return Err(Error::SizeMismatch { expected, got: amplitudes.len() });
        }
        Ok(WalkState { n_half, amplitudes, step: 0 })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `|psi(x, 0)|^2 + |psi(x, 1)|^2` per site, ordered from `x = -N`.
    pub fn site_probabilities(&self) -> Vec<f64> {
        self.amplitudes.chunks(2).map(|c| c[0].norm_sqr() + c[1].norm_sqr()).collect()
    }
}

pub fn initial_state(x0: i64, coin: Coin, n_half: usize) -> Result<WalkState> {
    let i = site_index(x0, n_half)?;
    let mut amplitudes = vec![C64::new(0.0, 0.0); 2 * (2 * n_half + 1)];
    let c = coin.amplitudes();
    amplitudes[2 * i] = c[0];
    amplitudes[2 * i + 1] = c[1];
    Ok(WalkState { n_half, amplitudes, step: 0 })
}

fn apply_rotations(amp: &mut [C64], angles: &[f64]) {
    for (site, theta) in amp.chunks_mut(2).zip(angles) {
        let (s, c) = (theta / 2.0).sin_cos();
        let (a, b) = (site[0], site[1]);
        site[0] = a * c - b * s;
        site[1] = a * s + b * c;
    }
}

fn apply_shift(amp: &[C64]) -> Vec<C64> {
    let l = amp.len() / 2;
    let mut out = vec![C64::new(0.0, 0.0); amp.len()];
    for i in 0..l {
        out[2 * ((i + l - 1) % l)] = amp[2 * i];
        out[2 * ((i + 1) % l) + 1] = amp[2 * i + 1];
    }
    out
}

fn apply_gain_loss(amp: &mut [C64], m: &Mat2) {
    for site in amp.chunks_mut(2) {
        let (a, b) = (site[0], site[1]);
        site[0] = m[0][0] * a + m[0][1] * b;
        site[1] = m[1][0] * a + m[1][1] * b;
    }
}

/// One period applied factor by factor in time linear in the ring size.
pub fn step(state: &WalkState, config: &LatticeConfig, scaled: bool) -> Result<WalkState> {
    if state.amplitudes.len() != config.dimension() {
        return Err(Error::SizeMismatch { expected: config.dimension(), got: state.amplitudes.len() });
    }
    let m = gain_loss(&config.params(), scaled);
    let mut amp = state.amplitudes.clone();
    // G = R(theta2/2) S R(theta1/2), F = R(theta1/2) S R(theta2/2); the
    // rightmost factor acts first.
    let (first, second) = match config.timeframe {
        TimeFrame::Fmg => (&config.theta1, &config.theta2),
        TimeFrame::Gmf => (&config.theta2, &config.theta1),
    };
    apply_rotations(&mut amp, first);
    amp = apply_shift(&amp);
    apply_rotations(&mut amp, second);
    apply_gain_loss(&mut amp, &m);
    apply_rotations(&mut amp, second);
    amp = apply_shift(&amp);
    apply_rotations(&mut amp, first);
    Ok(WalkState { n_half: state.n_half, amplitudes: amp, step: state.step + 1 })
}

/// Site probabilities recorded at `t = 0..=t_max`, indexed `[t][x + N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySeries {
    pub n_half: usize,
    pub gamma: f64,
    /// `P_R`: probabilities of the passive (lossy) walk.
    pub raw: Vec<Vec<f64>>,
    /// `P_C = gamma^(2t) P_R`.
    pub corrected: Vec<Vec<f64>>,
    /// `P_N = P_R / sum_x P_R`.
    pub normalized: Vec<Vec<f64>>,
    /// Set when `2 t_max >= N`, i.e. the walk may have wrapped around the ring.
    pub wraparound: bool,
}

impl ProbabilitySeries {
    pub fn steps(&self) -> usize {
        self.raw.len().saturating_sub(1)
    }

    pub fn corrected_at(&self, x: i64, t: usize) -> Result<f64> {
        Ok(self.corrected[t][site_index(x, self.n_half)?])
    }
}

/// Evolve with the passive walk and record the three probability records.
pub fn evolve(initial: &WalkState, config: &LatticeConfig, t_max: usize) -> Result<ProbabilitySeries> {
    if initial.amplitudes.len() != config.dimension() {
        return Err(Error::SizeMismatch { expected: config.dimension(), got: initial.amplitudes.len() });
    }
    let gamma = config.gamma();
    let mut state = initial.clone();
    let mut raw = Vec::with_capacity(t_max + 1);
    raw.push(state.site_probabilities());
    for _ in 0..t_max {
        state = step(&state, config, false)?;
        raw.push(state.site_probabilities());
    }
    let corrected = raw
        .iter()
        .enumerate()
        .map(|(t, row)| {
            let g = gamma.powi(2 * t as i32);
            row.iter().map(|v| v * g).collect()
        })
        .collect();
    let normalized = raw
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter().map(|v| v / total).collect()
            } else {
                row.clone()
            }
        })
        .collect();
    Ok(ProbabilitySeries {
        n_half: config.n_half,
        gamma,
        raw,
        corrected,
        normalized,
        wraparound: 2 * t_max >= config.n_half,
    })
}
