use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use ptwalk::bloch::{bands, bloch_vector, floquet_momentum_matrix, make_params, KGrid, TimeFrame};
use ptwalk::edge::{coin_selector, edge_state, evanescent, Gap, Parity};
use ptwalk::numerics::{eig_general, principal_angle, unwrap_winding, DEFAULT_EIG_TOL, DEFAULT_UNWRAP_MARGIN};
use ptwalk::realspace::{
    apply_disorder, build_floquet, initial_state, make_inhomogeneous, site_index, step, Coin, WalkState,
};
use ptwalk::topology::{
    berry_connection, global_berry_phase, on_phase_boundary, theta_derivative, topo_numbers, winding_number_projected,
};

fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

fn loss() -> impl Strategy<Value = f64> {
    0.0..0.95
}

fn det(m: &[[C64; 2]; 2]) -> C64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Keep away from the boundary lines so invariants are well resolved.
fn off_boundary(t1: f64, t2: f64) -> bool {
    (t1 + t2).sin().abs().min((t1 - t2).sin().abs()) > 1e-3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn d_vector_identities(t1 in angle(), t2 in angle(), p in loss(), k in angle()) {
        let params = make_params(t1, t2, p).unwrap();
        prop_assert!((params.alpha.powi(2) - params.beta.powi(2) - 1.0).abs() < 1e-12);
        let d = bloch_vector(&params, k);
        prop_assert!((d.norm_identity() - 1.0).norm() < 1e-12);
        prop_assert_eq!(d.d1, C64::new(0.0, params.beta));

        let m = floquet_momentum_matrix(&params, k);
        let e = d.matrix();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((m[i][j] - e[i][j]).norm() < 1e-12);
            }
        }
        prop_assert!((m[0][0] + m[1][1] - d.d0 * 2.0).norm() < 1e-12);
        prop_assert!((det(&m) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn bands_pair_and_repeat(t1 in angle(), t2 in angle(), p in loss(), k in angle()) {
        let params = make_params(t1, t2, p).unwrap();
        let b = bands(&params, k);
        prop_assert!((b.lambda_plus * b.lambda_minus - 1.0).norm() < 1e-12);
        let shifted = bands(&params, k + PI);
        prop_assert!((b.lambda_plus - shifted.lambda_plus).norm() < 1e-12);
        let eps = b.eps_plus.re;
        prop_assert!(eps > -PI && eps <= PI);

        let free = make_params(t1, t2, 0.0).unwrap();
        let b0 = bands(&free, k);
        prop_assert!((b0.lambda_plus.norm() - 1.0).abs() < 1e-12);
        prop_assert!((b0.lambda_minus.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_frame_equals_swap(t1 in angle(), t2 in angle(), p in loss(), k in angle()) {
        let params = make_params(t1, t2, p).unwrap();
        let a = ptwalk::bloch::floquet_momentum_matrix_in(&params, k, TimeFrame::Gmf);
        let b = floquet_momentum_matrix(&params.swapped(), k);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((a[i][j] - b[i][j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn connection_sum_is_theta_prime(t1 in angle(), t2 in angle(), p in loss(), k in angle()) {
        let params = make_params(t1, t2, p).unwrap();
        prop_assume!(bloch_vector(&params, k).planar_norm() > 1e-3);
        let c = berry_connection(&params, k, 0.0).unwrap();
        let exact = theta_derivative(&params, k).unwrap();
        prop_assert!((c.sum() - exact).norm() <= 1e-9 * exact.abs().max(1.0));
        if let (Some(a), Some(b)) = (c.a_plus, c.a_minus) {
            if c.case == ptwalk::topology::ConnectionCase::I {
                prop_assert!((a.im + b.im).abs() < 1e-9 * a.im.abs().max(1.0));
            }
        }
    }

    #[test]
    fn unwrap_is_offset_and_rotation_invariant(turns in -3i64..=3, offset in -10.0..10.0f64, rot in 0usize..128) {
        let n = 128;
        let samples: Vec<f64> = (0..n)
            .map(|j| principal_angle(2.0 * PI * turns as f64 * j as f64 / n as f64 + 0.3 * (j as f64).sin()))
            .collect();
        let base = unwrap_winding(&samples, DEFAULT_UNWRAP_MARGIN).unwrap().turns;
        prop_assert_eq!(base, turns);
        let shifted: Vec<f64> = samples.iter().map(|s| s + offset).collect();
        prop_assert_eq!(unwrap_winding(&shifted, DEFAULT_UNWRAP_MARGIN).unwrap().turns, base);
        let mut rotated = samples.clone();
        rotated.rotate_left(rot);
        prop_assert_eq!(unwrap_winding(&rotated, DEFAULT_UNWRAP_MARGIN).unwrap().turns, base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn route_equivalence_and_parity(t1 in angle(), t2 in angle(), p in loss()) {
        prop_assume!(off_boundary(t1, t2));
        let params = make_params(t1, t2, p).unwrap();
        let phi = global_berry_phase(&params, 1024).unwrap();
        prop_assert_eq!(winding_number_projected(&params, 1024).unwrap(), (phi / (2.0 * PI)).round() as i64);
        let n = topo_numbers(&params, 1024).unwrap();
        prop_assert_eq!((n.nu_prime - n.nu_double_prime).rem_euclid(2), 0);
        prop_assert_eq!(n.nu_zero * 2, n.nu_prime - n.nu_double_prime);
    }

    #[test]
    fn invariants_are_two_pi_periodic(t1 in angle(), t2 in angle(), p in loss()) {
        prop_assume!(off_boundary(t1, t2));
        let a = topo_numbers(&make_params(t1, t2, p).unwrap(), 1024).unwrap();
        let b = topo_numbers(&make_params(t1 + 2.0 * PI, t2, p).unwrap(), 1024).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn hermitian_input_gives_matching_left_vectors(entries in prop::collection::vec(-1.0..1.0f64, 32)) {
        let n = 4;
        let mut m = Mat::<C64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let z = C64::new(entries[2 * (i * n + j)], entries[2 * (i * n + j) + 1]);
                m[(i, j)] += z;
                m[(j, i)] += z.conj();
            }
        }
        let s = eig_general(m.as_ref(), DEFAULT_EIG_TOL).unwrap();
        for i in 0..n {
            let ov = s.overlap(i, i);
            prop_assert!((ov - 1.0).norm() < 1e-9);
            let lnorm: f64 = s.left(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!((lnorm - 1.0).abs() < 1e-8, "left norm {}", lnorm);
        }
    }

    #[test]
    fn biorthonormal_and_adjoint_spectrum(entries in prop::collection::vec(-1.0..1.0f64, 50)) {
        let n = 5;
        let m = Mat::from_fn(n, n, |i, j| C64::new(entries[2 * (i * n + j)], entries[2 * (i * n + j) + 1]));
        let s = eig_general(m.as_ref(), DEFAULT_EIG_TOL).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((s.overlap(i, j) - want).norm() < 1e-9);
            }
        }
        let adj = Mat::from_fn(n, n, |i, j| m[(j, i)].conj());
        let sa = eig_general(adj.as_ref(), DEFAULT_EIG_TOL).unwrap();
        for lam in &s.eigenvalues {
            let best = sa.eigenvalues.iter().map(|mu| (mu.conj() - lam).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(best < 1e-9);
        }
    }

    #[test]
    fn pt_spectral_pairing(l1 in angle(), l2 in angle(), r1 in angle(), r2 in angle(), p in loss()) {
        let config = make_inhomogeneous((l1, l2), (r1, r2), 6, p, TimeFrame::Fmg).unwrap();
        prop_assert!(config.is_pt_symmetric());
        let s = eig_general(build_floquet(&config, true).unwrap().as_ref(), DEFAULT_EIG_TOL).unwrap();
        for lam in &s.eigenvalues {
            let partner = C64::new(1.0, 0.0) / lam.conj();
            let best = s.eigenvalues.iter().map(|mu| (mu - partner).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(best < 1e-6, "no partner for {}", lam);
        }
    }

    #[test]
    fn steps_compose_like_matrix_powers(l1 in angle(), r1 in angle(), p in loss(), seed in 0u64..100) {
        let base = make_inhomogeneous((l1, 0.4), (r1, -0.9), 5, p, TimeFrame::Fmg).unwrap();
        let config = apply_disorder(&base, 0.2, seed).unwrap();
        let u = build_floquet(&config, true).unwrap();
        let mut state = initial_state(0, Coin::PlusIMinus, 5).unwrap();
        let mut v = faer::Col::from_fn(u.nrows(), |i| state.amplitudes[i]);
        for _ in 0..3 {
            state = step(&state, &config, true).unwrap();
            v = &u * &v;
        }
        for (a, b) in state.amplitudes.iter().zip(v.iter()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn parity_sectors_decouple(l1 in angle(), l2 in angle(), p in loss(), seed in 0u64..100) {
        let base = make_inhomogeneous((l1, l2), (0.3, 1.2), 8, p, TimeFrame::Fmg).unwrap();
        let config = apply_disorder(&base, 0.1, seed).unwrap();
        let mut state = initial_state(2, Coin::Plus, 8).unwrap();
        for _ in 0..3 {
            state = step(&state, &config, false).unwrap();
            for x in -8i64..=8 {
                if x.rem_euclid(2) == 1 {
                    let i = site_index(x, 8).unwrap();
                    prop_assert_eq!(state.amplitudes[2 * i], C64::new(0.0, 0.0));
                    prop_assert_eq!(state.amplitudes[2 * i + 1], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn unitary_determinant_has_unit_modulus(l1 in angle(), l2 in angle(), r1 in angle(), r2 in angle()) {
        let config = make_inhomogeneous((l1, l2), (r1, r2), 4, 0.0, TimeFrame::Fmg).unwrap();
        let s = eig_general(build_floquet(&config, true).unwrap().as_ref(), DEFAULT_EIG_TOL).unwrap();
        let det: C64 = s.eigenvalues.iter().product();
        prop_assert!((det.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn analytic_edge_states_solve_the_walk(l1 in angle(), l2 in angle(), r1 in angle(), r2 in angle(),
                                           p in loss(), gap_pi in any::<bool>(), odd in any::<bool>()) {
        let gap = if gap_pi { Gap::Pi } else { Gap::Zero };
        let parity = if odd { Parity::Odd } else { Parity::Even };
        let (Ok(left), Ok(right)) = (evanescent((l1, l2), gap), evanescent((r1, r2), gap)) else {
            return Ok(());
        };
        prop_assume!(left.kappa.min(right.kappa) > 0.4);
        prop_assume!(coin_selector((l1, l2), (r1, r2), gap).unwrap().is_some());
        let gamma = (1.0 - p).powf(-0.25);
        let s = edge_state((l1, l2), (r1, r2), gap, parity, gamma, 50).unwrap();
        prop_assert!(s.ring_residual < 1e-8, "residual {}", s.ring_residual);
        let even = edge_state((l1, l2), (r1, r2), gap, parity.other(), gamma, 50).unwrap();
        prop_assert_eq!(s.eigenvalue, even.eigenvalue);
    }
}

#[test]
fn wilson_loop_is_gauge_invariant() {
    let params = make_params(-PI / 4.0, 3.0 * PI / 4.0 - 3.0 * 0.1113, 0.36).unwrap();
    let grid = KGrid::brillouin(256);
    let mut vecs = Vec::new();
    for k in grid.points() {
        let m = floquet_momentum_matrix(&params, k);
        let s = eig_general(Mat::from_fn(2, 2, |i, j| m[i][j]).as_ref(), DEFAULT_EIG_TOL).unwrap();
        let target = bands(&params, k).lambda_plus;
        let idx = if (s.eigenvalues[0] - target).norm() < (s.eigenvalues[1] - target).norm() { 0 } else { 1 };
        vecs.push((s.right(idx), s.left(idx)));
    }
    let holonomy = |phases: &dyn Fn(usize) -> f64| -> C64 {
        let n = vecs.len();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            let c0 = C64::from_polar(1.0, phases(j));
            let c1 = C64::from_polar(1.0, phases((j + 1) % n));
            let (_, l0) = &vecs[j];
            let (r1, _) = &vecs[(j + 1) % n];
            let ov: C64 = l0.iter().zip(r1).map(|(a, b)| (a * c0).conj() * (b * c1)).sum();
            acc += ov.ln();
        }
        -C64::i() * acc
    };
    let plain = holonomy(&|_| 0.0);
    let gauged = holonomy(&|j| 0.7 * (j as f64).sin() + 0.01 * (j * j) as f64);
    assert!(principal_angle(plain.re - gauged.re).abs() < 1e-10);
    assert!((plain.im - gauged.im).abs() < 1e-10);
}

#[test]
fn divergence_cancels_near_exceptional_momenta() {
    let params = make_params(-4.0 * PI / 9.0, 5.0 * PI / 9.0 + 0.1113, 0.36).unwrap();
    let mut checked = 0;
    for j in 0..200_000 {
        let k = PI / 2.0 - 0.2 + 0.4 * j as f64 / 200_000.0;
        let d0 = bloch_vector(&params, k).d0.re;
        if (d0.abs() - 1.0).abs() > 1e-3 {
            continue;
        }
        let c = berry_connection(&params, k, 0.0).unwrap();
        let exact = theta_derivative(&params, k).unwrap();
        assert!((c.sum() - exact).norm() <= 1e-6 * exact.abs());
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn norm_conserved_without_loss() {
    let config = make_inhomogeneous((0.2, 1.0), (-1.2, 0.5), 10, 0.0, TimeFrame::Gmf).unwrap();
    let mut state: WalkState = initial_state(-3, Coin::Minus, 10).unwrap();
    for _ in 0..50 {
        state = step(&state, &config, false).unwrap();
        assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn boundary_lines_match_closed_form() {
    let p = make_params(0.7, 0.7 - PI, 0.2).unwrap();
    assert!(on_phase_boundary(&p));
    assert!(global_berry_phase(&p, 256).is_err());
}
