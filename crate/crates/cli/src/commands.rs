use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptwalk::bloch::{bands, classify_pt, make_params, KGrid, ModelParams, TimeFrame};
use ptwalk::edge::{edge_state, eigenvector_profile, find_edge_states_numeric, ipr, EdgeFilter, Gap, Parity};
use ptwalk::numerics::{eig_general, DEFAULT_EIG_TOL};
use ptwalk::realspace::{
    apply_disorder_with, build_floquet, evolve, initial_state, make_homogeneous, make_inhomogeneous, Coin,
    DisorderMode, LatticeConfig, RNG_NAME,
};
use ptwalk::topology::{
    berry_connection, generalized_zak_phase, global_berry_phase, phase_diagram, topo_numbers, Band, ThetaGrid,
};

use crate::table::{Format, Table};
use crate::CliError;

/// Two comma-separated numbers, e.g. `0.196,0.982`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair(pub f64, pub f64);

impl FromStr for Pair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two comma-separated numbers, got '{s}'"))?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
        Ok(Pair(num(a)?, num(b)?))
    }
}

#[derive(Debug, Parser)]
#[command(name = "ptwalk", version, about = "PT-symmetric non-unitary quantum walk studies")]
pub struct Cli {
    #[command(flatten)]
    pub output: OutputArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Read all angle arguments in degrees instead of radians.
    #[arg(long, global = true)]
    pub degrees: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Topological numbers and PT class over a grid of coin angles.
    PhaseDiagram {
        /// theta1 range (inclusive).
        #[arg(long, allow_hyphen_values = true, default_value = "-3.141592653589793,3.141592653589793")]
        theta1_range: Pair,
        /// theta2 range (inclusive).
        #[arg(long, allow_hyphen_values = true, default_value = "-3.141592653589793,3.141592653589793")]
        theta2_range: Pair,
        #[arg(long, default_value_t = 64)]
        n1: usize,
        #[arg(long, default_value_t = 64)]
        n2: usize,
        #[command(flatten)]
        bulk: LossArgs,
    },
    /// Quasienergies and Floquet eigenvalues across the Brillouin zone.
    Bands {
        #[command(flatten)]
        angles: AngleArgs,
        #[command(flatten)]
        bulk: LossArgs,
    },
    /// Berry connections per momentum, with Berry phase and invariants as metadata.
    Berry {
        #[command(flatten)]
        angles: AngleArgs,
        #[command(flatten)]
        bulk: LossArgs,
    },
    /// Time evolution of site probabilities on the ring.
    Evolve {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        /// Initial site.
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        x0: i64,
        #[arg(long, value_enum, default_value_t = CoinArg::Plus)]
        coin: CoinArg,
    },
    /// Eigenvalues of the real-space Floquet operator with edge-state flags.
    Spectrum {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Minimum distance of |lambda| from 1 for an edge candidate.
        #[arg(long)]
        mod_tol: Option<f64>,
        /// Minimum inverse participation ratio for an edge candidate.
        #[arg(long)]
        ipr_floor: Option<f64>,
    },
    /// Closed-form edge state at the x = 0 interface.
    EdgeState {
        #[arg(long, allow_hyphen_values = true)]
        theta_l: Pair,
        #[arg(long, allow_hyphen_values = true)]
        theta_r: Pair,
        #[arg(long, value_enum, default_value_t = GapArg::Zero)]
        gap: GapArg,
        #[arg(long, value_enum, default_value_t = ParityArg::Odd)]
        parity: ParityArg,
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        #[arg(long, default_value_t = ptwalk::realspace::DEFAULT_N_HALF)]
        n_half: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct AngleArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub theta1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub theta2: f64,
}

#[derive(Debug, Clone, Args)]
pub struct LossArgs {
    /// Loss probability in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
    /// Momentum samples over the Brillouin zone.
    #[arg(long, default_value_t = ptwalk::topology::DEFAULT_NK)]
    pub n_k: usize,
}

#[derive(Debug, Clone, Args)]
pub struct LatticeArgs {
    /// Coin angles for x < 0 (and the whole ring if --theta-r is absent).
    #[arg(long, allow_hyphen_values = true)]
    pub theta_l: Pair,
    /// Coin angles for x >= 0.
    #[arg(long, allow_hyphen_values = true)]
    pub theta_r: Option<Pair>,
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
    /// Ring sites run from -N to N.
    #[arg(long, default_value_t = ptwalk::realspace::DEFAULT_N_HALF)]
    pub n_half: usize,
    /// Static angle disorder amplitude (radians unless --degrees).
    #[arg(long, default_value_t = 0.0)]
    pub disorder: f64,
    #[arg(long, value_enum, default_value_t = DisorderArg::Shared)]
    pub disorder_mode: DisorderArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FrameArg::Fmg)]
    pub timeframe: FrameArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoinArg {
    Plus,
    Minus,
    PlusIMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GapArg {
    Zero,
    Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParityArg {
    Odd,
    Even,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DisorderArg {
    Shared,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameArg {
    Fmg,
    Gmf,
}

/// Converts angles read from the command line to radians.
#[derive(Debug, Clone, Copy)]
struct Angles {
    degrees: bool,
}

impl Angles {
    fn one(&self, x: f64) -> f64 {
        if self.degrees {
            x.to_radians()
        } else {
            x
        }
    }

    fn pair(&self, p: Pair) -> (f64, f64) {
        (self.one(p.0), self.one(p.1))
    }
}

pub fn run(cli: &Cli) -> Result<Table, CliError> {
    let angles = Angles { degrees: cli.output.degrees };
    let mut table = match &cli.command {
        Command::PhaseDiagram { theta1_range, theta2_range, n1, n2, bulk } => {
            cmd_phase_diagram(angles.pair(*theta1_range), angles.pair(*theta2_range), *n1, *n2, bulk)
        }
        Command::Bands { angles: a, bulk } => cmd_bands(bulk_params(angles, a, bulk)?, bulk.n_k),
        Command::Berry { angles: a, bulk } => cmd_berry(bulk_params(angles, a, bulk)?, bulk.n_k),
        Command::Evolve { lattice, steps, x0, coin } => {
            cmd_evolve(&lattice_config(angles, lattice)?, *steps, *x0, *coin)
        }
        Command::Spectrum { lattice, mod_tol, ipr_floor } => {
            cmd_spectrum(&lattice_config(angles, lattice)?, *mod_tol, *ipr_floor)
        }
        Command::EdgeState { theta_l, theta_r, gap, parity, p, n_half } => {
            cmd_edge_state(angles.pair(*theta_l), angles.pair(*theta_r), *gap, *parity, *p, *n_half)
        }
    }?;
    let mut meta = vec![("command".to_string(), command_name(&cli.command).to_string())];
    meta.append(&mut table.meta);
    table.meta = meta;
    Ok(table)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::PhaseDiagram { .. } => "phase-diagram",
        Command::Bands { .. } => "bands",
        Command::Berry { .. } => "berry",
        Command::Evolve { .. } => "evolve",
        Command::Spectrum { .. } => "spectrum",
        Command::EdgeState { .. } => "edge-state",
    }
}

fn bulk_params(angles: Angles, a: &AngleArgs, bulk: &LossArgs) -> Result<ModelParams, CliError> {
    check_finite("theta1", a.theta1)?;
    check_finite("theta2", a.theta2)?;
    if bulk.n_k < 8 {
        return Err(CliError::Validation(format!("--n-k must be at least 8, got {}", bulk.n_k)));
    }
    Ok(make_params(angles.one(a.theta1), angles.one(a.theta2), bulk.p)?)
}

fn check_finite(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name} must be finite, got {x}")))
    }
}

fn lattice_config(angles: Angles, a: &LatticeArgs) -> Result<LatticeConfig, CliError> {
    for x in [a.theta_l.0, a.theta_l.1].into_iter().chain(a.theta_r.into_iter().flat_map(|r| [r.0, r.1])) {
        check_finite("lattice angle", x)?;
    }
    let frame = match a.timeframe {
        FrameArg::Fmg => TimeFrame::Fmg,
        FrameArg::Gmf => TimeFrame::Gmf,
    };
    let left = angles.pair(a.theta_l);
    let base = match a.theta_r {
        Some(r) => make_inhomogeneous(left, angles.pair(r), a.n_half, a.p, frame)?,
        None => make_homogeneous(left, a.n_half, a.p, frame)?,
    };
    let mode = match a.disorder_mode {
        DisorderArg::Shared => DisorderMode::Shared,
        DisorderArg::Independent => DisorderMode::Independent,
    };
    Ok(apply_disorder_with(&base, angles.one(a.disorder), a.seed, mode)?)
}

fn lattice_meta(table: &mut Table, config: &LatticeConfig) {
    table.meta("n_half", config.n_half);
    table.meta("p", config.p);
    table.meta("gamma", config.gamma());
    table.meta("pt_symmetric", config.is_pt_symmetric());
}

fn cmd_phase_diagram(
    theta1: (f64, f64),
    theta2: (f64, f64),
    n1: usize,
    n2: usize,
    bulk: &LossArgs,
) -> Result<Table, CliError> {
    if n1 == 0 || n2 == 0 {
        return Err(CliError::Validation("grid sizes must be positive".into()));
    }
    let grid = ThetaGrid { theta1, theta2, n1, n2 };
    let cells = phase_diagram(&grid, bulk.p, bulk.n_k)?;
    let mut t = Table::new(&["theta1", "theta2", "nu0", "nu_pi", "pt_class", "boundary_flag"]);
    t.meta("p", bulk.p);
    t.meta("n_k", bulk.n_k);
    t.meta("n1", n1);
    t.meta("n2", n2);
    for c in cells {
        t.push(vec![
            c.theta1.into(),
            c.theta2.into(),
            c.numbers.map(|n| n.nu_zero).into(),
            c.numbers.map(|n| n.nu_pi).into(),
            c.pt_class.label().into(),
            c.flag.label().into(),
        ]);
    }
    Ok(t)
}

fn cmd_bands(params: ModelParams, n_k: usize) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "k",
        "re_eps_plus",
        "im_eps_plus",
        "re_eps_minus",
        "im_eps_minus",
        "re_lambda_plus",
        "im_lambda_plus",
        "re_lambda_minus",
        "im_lambda_minus",
    ]);
    bulk_meta(&mut t, &params, n_k);
    t.meta("pt_class", classify_pt(&params, n_k.max(ptwalk::bloch::MIN_CLASSIFY_POINTS))?.label());
    for k in KGrid::brillouin(n_k).points() {
        let b = bands(&params, k);
        t.push(vec![
            k.into(),
            b.eps_plus.re.into(),
            b.eps_plus.im.into(),
            b.eps_minus.re.into(),
            b.eps_minus.im.into(),
            b.lambda_plus.re.into(),
            b.lambda_plus.im.into(),
            b.lambda_minus.re.into(),
            b.lambda_minus.im.into(),
        ]);
    }
    Ok(t)
}

fn bulk_meta(t: &mut Table, params: &ModelParams, n_k: usize) {
    t.meta("theta1", params.theta1);
    t.meta("theta2", params.theta2);
    t.meta("p", params.p);
    t.meta("gamma", params.gamma);
    t.meta("n_k", n_k);
}

fn cmd_berry(params: ModelParams, n_k: usize) -> Result<Table, CliError> {
    let mut t =
        Table::new(&["k", "theta", "theta_prime", "case", "re_a_plus", "im_a_plus", "re_a_minus", "im_a_minus"]);
    bulk_meta(&mut t, &params, n_k);
    let class = classify_pt(&params, n_k.max(ptwalk::bloch::MIN_CLASSIFY_POINTS))?;
    let numbers = topo_numbers(&params, n_k)?;
    t.meta("pt_class", class.label());
    t.meta("berry_phase", global_berry_phase(&params, n_k)?);
    t.meta("nu_prime", numbers.nu_prime);
    t.meta("nu_double_prime", numbers.nu_double_prime);
    t.meta("nu0", numbers.nu_zero);
    t.meta("nu_pi", numbers.nu_pi);
    for (key, band) in [("zak_plus", Band::Plus), ("zak_minus", Band::Minus)] {
        match generalized_zak_phase(&params, band, n_k) {
            Ok(z) => {
                t.meta(&format!("{key}_re"), z.re);
                t.meta(&format!("{key}_im"), z.im);
            }
            Err(e) if e.is_numerical() => t.meta(key, format!("undefined ({e})")),
            Err(e) => return Err(e.into()),
        }
    }
    for k in KGrid::brillouin(n_k).points() {
        let c = berry_connection(&params, k, 0.0)?;
        t.push(vec![
            k.into(),
            c.theta_angle.into(),
            c.theta_prime.into(),
            format!("{:?}", c.case).as_str().into(),
            c.a_plus.map(|a| a.re).into(),
            c.a_plus.map(|a| a.im).into(),
            c.a_minus.map(|a| a.re).into(),
            c.a_minus.map(|a| a.im).into(),
        ]);
    }
    Ok(t)
}

fn cmd_evolve(config: &LatticeConfig, steps: usize, x0: i64, coin: CoinArg) -> Result<Table, CliError> {
    let coin = match coin {
        CoinArg::Plus => Coin::Plus,
        CoinArg::Minus => Coin::Minus,
        CoinArg::PlusIMinus => Coin::PlusIMinus,
    };
    let series = evolve(&initial_state(x0, coin, config.n_half)?, config, steps)?;
    let mut t = Table::new(&["t", "x", "p_raw", "p_corrected", "p_normalized"]);
    lattice_meta(&mut t, config);
    t.meta("steps", steps);
    t.meta("x0", x0);
    t.meta("coin", coin.label());
    t.meta("rng", RNG_NAME);
    t.meta("wraparound", series.wraparound);
    for step in 0..=steps {
        for i in 0..config.sites() {
            t.push(vec![
                (step as i64).into(),
                config.site_of(i).into(),
                series.raw[step][i].into(),
                series.corrected[step][i].into(),
                series.normalized[step][i].into(),
            ]);
        }
    }
    Ok(t)
}

fn cmd_spectrum(config: &LatticeConfig, mod_tol: Option<f64>, ipr_floor: Option<f64>) -> Result<Table, CliError> {
    let gamma = config.gamma();
    let mut filter = EdgeFilter::defaults(gamma, config.n_half);
    if let Some(m) = mod_tol {
        filter.mod_tol = m;
    }
    if let Some(f) = ipr_floor {
        filter.ipr_floor = f;
    }
    let spectrum = eig_general(build_floquet(config, true)?.as_ref(), DEFAULT_EIG_TOL)?;
    let edges = find_edge_states_numeric(&spectrum, gamma, filter);

    let mut t = Table::new(&["re_lambda", "im_lambda", "ipr", "edge_flag", "gap_sector", "kind", "peak_site"]);
    lattice_meta(&mut t, config);
    t.meta("mod_tol", filter.mod_tol);
    t.meta("ipr_floor", filter.ipr_floor);
    t.meta("worst_residual", spectrum.worst_residual);
    t.meta("near_defective", spectrum.near_defective.len());
    t.meta("edge_states", edges.len());
    for (i, lam) in spectrum.eigenvalues.iter().enumerate() {
        let edge = edges.iter().find(|s| s.index == i);
        let profile = eigenvector_profile(&spectrum, i);
        t.push(vec![
            lam.re.into(),
            lam.im.into(),
            ipr(&profile)?.into(),
            i64::from(edge.is_some()).into(),
            edge.map(|s| s.gap.label()).into(),
            edge.map(|s| s.kind.label()).into(),
            edge.map(|s| s.peak_site(config.n_half)).into(),
        ]);
    }
    Ok(t)
}

fn cmd_edge_state(
    theta_l: (f64, f64),
    theta_r: (f64, f64),
    gap: GapArg,
    parity: ParityArg,
    p: f64,
    n_half: usize,
) -> Result<Table, CliError> {
    let gamma = make_params(0.0, 0.0, p)?.gamma;
    let gap = match gap {
        GapArg::Zero => Gap::Zero,
        GapArg::Pi => Gap::Pi,
    };
    let parity = match parity {
        ParityArg::Odd => Parity::Odd,
        ParityArg::Even => Parity::Even,
    };
    let sol = edge_state(theta_l, theta_r, gap, parity, gamma, n_half)?;
    let mut t = Table::new(&["x", "prob", "re_psi0", "im_psi0", "re_psi1", "im_psi1"]);
    t.meta("n_half", n_half);
    t.meta("p", p);
    t.meta("gamma", gamma);
    t.meta("gap", gap.label());
    t.meta("parity", parity.label());
    t.meta("kappa_l", sol.kappa_l);
    t.meta("kappa_r", sol.kappa_r);
    t.meta("r", sol.r_coeff);
    t.meta("t", sol.t_coeff);
    t.meta("coin", sol.coin.label());
    t.meta("kind", sol.kind.label());
    t.meta("re_eigenvalue", sol.eigenvalue.re);
    t.meta("im_eigenvalue", sol.eigenvalue.im);
    t.meta("re_quasienergy", sol.quasienergy.re);
    t.meta("im_quasienergy", sol.quasienergy.im);
    t.meta("ring_residual", sol.ring_residual);
    let psi = sol.wavefunction();
    for (i, prob) in sol.profile().into_iter().enumerate() {
        let (a, b) = (psi[2 * i], psi[2 * i + 1]);
        t.push(vec![
            (i as i64 - n_half as i64).into(),
            prob.into(),
            a.re.into(),
            a.im.into(),
            b.re.into(),
            b.im.into(),
        ]);
    }
    Ok(t)
}
