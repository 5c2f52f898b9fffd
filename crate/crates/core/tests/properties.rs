use proptest::collection::vec;
use proptest::prelude::*;

use ugks::oracles::dense_spectral;
use ugks::report::{read_snapshot_csv, write_snapshot_csv, SnapshotCsv};
use ugks::scheme::{
    flux_coefficients, half_moments, macro_flux, micro_flux, KineticState, SchemeParams, Ugks,
    Variant,
};
use ugks::velocity::{build_grid, entropy_dissipation, pseudo_inverse_apply, OperatorKind};
use ugks::Execution;

fn kind() -> impl Strategy<Value = OperatorKind> {
    prop_oneof![
        Just(OperatorKind::Bgk),
        Just(OperatorKind::FokkerPlanck),
        Just(OperatorKind::Scattering),
    ]
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::ExplicitDiffusion), Just(Variant::ImplicitDiffusion)]
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn pseudo_inverse_round_trip(kind in kind(), half in 2usize..40, seed in vec(-1.0f64..1.0, 80)) {
        let g = build_grid(half).unwrap();
        let op = kind.build(&g).unwrap();
        let mut phi = seed[..g.len()].to_vec();
        let m = phi.iter().sum::<f64>() / g.len() as f64;
        phi.iter_mut().for_each(|p| *p -= m);
        prop_assume!(norm(&phi) > 1e-6);
        let psi = pseudo_inverse_apply(&op, &phi).unwrap();
        let mut back = vec![0.0; g.len()];
        op.apply(&psi, &mut back);
        let err: Vec<f64> = back.iter().zip(&phi).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&err) <= 1e-9 * norm(&phi));
        prop_assert!(psi.iter().sum::<f64>().abs() <= 1e-10 * norm(&psi).max(1.0));
    }

    #[test]
    fn pseudo_inverse_matches_spectrum(kind in kind(), half in 2usize..20, seed in vec(-1.0f64..1.0, 40)) {
        let g = build_grid(half).unwrap();
        let op = kind.build(&g).unwrap();
        let mut phi = seed[..g.len()].to_vec();
        let m = phi.iter().sum::<f64>() / g.len() as f64;
        phi.iter_mut().for_each(|p| *p -= m);
        let dense = dense_spectral(&op).unwrap().pseudo_inverse() * nalgebra::DVector::from_vec(phi.clone());
        let psi = pseudo_inverse_apply(&op, &phi).unwrap();
        let scale = dense.amax().max(1e-300);
        for (a, b) in psi.iter().zip(dense.iter()) {
            prop_assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn entropy_is_dissipated(kind in kind(), f in vec(0.01f64..5.0, 20)) {
        let g = build_grid(10).unwrap();
        let op = kind.build(&g).unwrap();
        let e = entropy_dissipation(&op, &f).unwrap();
        prop_assert!(e <= 1e-12 * norm(&f));
        let c = vec![f[0]; 20];
        prop_assert!(entropy_dissipation(&op, &c).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn coefficient_identity(
        eta in -8.0f64..2.0, eps in -8.0f64..8.0, sigma in -1.0f64..1.0,
        dt in -7.0f64..0.0, lam in 0.1f64..5.0,
    ) {
        let (eta, eps, sigma, dt) = (10f64.powf(eta), 10f64.powf(eps), 10f64.powf(sigma), 10f64.powf(dt));
        let p = SchemeParams::new(eta, eps, sigma, dt, 10, Variant::ExplicitDiffusion).unwrap();
        let c = flux_coefficients(&p, -lam).unwrap();
        prop_assert!((c.a_coef + c.c_coef - 1.0 / eta).abs() <= 1e-12 / eta);
        prop_assert!(c.a_coef > 0.0 && c.a_coef <= 1.0 / eta);
        prop_assert!(c.c_coef >= 0.0 && c.c_coef < 1.0 / eta);
        prop_assert!(c.d_coef <= 0.0 && c.w < 0.0);
    }

    #[test]
    fn macro_flux_is_average_of_micro_flux(
        kind in kind(), left in vec(0.0f64..2.0, 16), right in vec(0.0f64..2.0, 16),
        eps in -4.0f64..1.0,
    ) {
        let g = build_grid(8).unwrap();
        let op = kind.build(&g).unwrap();
        let eps = 10f64.powf(eps);
        let p = SchemeParams::new(eps, eps, 1.0, 1e-4, 20, Variant::ExplicitDiffusion).unwrap();
        let c = flux_coefficients(&p, op.lambda_star).unwrap();
        let phi = micro_flux(&left, &right, &c, &op, &g, p.dx);
        let avg = phi.iter().sum::<f64>() / g.len() as f64;
        let big = macro_flux(&left, &right, &c, &g, p.dx);
        let scale = phi.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!((avg - big).abs() <= 1e-12 * scale);
        let m = half_moments(&left, &g);
        prop_assert!(m.j_minus <= 0.0 && m.j_plus >= 0.0);
        let rho = left.iter().sum::<f64>() / 16.0;
        prop_assert!((m.density() - rho).abs() <= 1e-12 * rho.max(1.0));
    }

    #[test]
    fn steps_conserve_mass_and_consistency(
        kind in kind(), variant in variant(), f in vec(0.01f64..1.0, 12 * 12), eps in -4.0f64..1.0,
    ) {
        let eps = 10f64.powf(eps);
        let g = build_grid(6).unwrap();
        let op = kind.build(&g).unwrap();
        let p = SchemeParams::new(eps, eps, 1.0, 1e-4, 12, variant).unwrap();
        let s = Ugks::new(g, op, p).unwrap();
        let init = KineticState::from_distribution(f, 12, 0.0).unwrap();
        let end = s.advance(&init, 20).unwrap();
        let m0 = init.total_density();
        prop_assert!((end.total_density() - m0).abs() <= 1e-12 * m0);
        let peak = end.rho.iter().cloned().fold(0.0, f64::max);
        prop_assert!(end.micro_macro_defect() <= 1e-11 * peak);
    }

    #[test]
    fn execution_modes_agree(kind in kind(), f in vec(0.01f64..1.0, 10 * 8)) {
        let g = build_grid(4).unwrap();
        let op = kind.build(&g).unwrap();
        let p = SchemeParams::new(0.05, 0.05, 1.0, 1e-4, 10, Variant::ExplicitDiffusion).unwrap();
        let s = Ugks::new(g, op, p).unwrap();
        let init = KineticState::from_distribution(f, 8, 0.0).unwrap();
        let a = s.clone().with_execution(Execution::Sequential).advance(&init, 3).unwrap();
        let b = s.with_execution(Execution::Parallel).advance(&init, 3).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip(rho in vec(-1e300f64..1e300, 1..50), with_ref in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let n = rho.len();
        let data = SnapshotCsv {
            x: (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(),
            rho_ref: with_ref.then(|| rho.iter().map(|r| r / 3.0).collect()),
            rho,
        };
        write_snapshot_csv(&path, &data).unwrap();
        prop_assert_eq!(read_snapshot_csv(&path).unwrap(), data);
    }
}

/// Mass and micro-macro consistency over 10⁴ steps for every operator and
/// both variants, on a coarse mesh.
#[test]
fn long_run_invariants() {
    let g = build_grid(10).unwrap();
    let nx = 20;
    let f: Vec<f64> = (0..nx * g.len())
        .map(|k| {
            let x = ((k / g.len()) as f64 + 0.5) / nx as f64;
            let v = g.velocities()[k % g.len()];
            (-(x - 0.5f64).powi(2) - 10.0 * (1.0 - v).powi(2)).exp()
        })
        .collect();
    let init = KineticState::from_distribution(f, g.len(), 0.0).unwrap();
    let m0 = init.total_density();
    for kind in OperatorKind::ALL {
        for variant in [Variant::ExplicitDiffusion, Variant::ImplicitDiffusion] {
            for eps in [100.0, 0.1, 1e-4] {
                let eta = if eps > 1.0 { 1.0 } else { eps };
                let p = SchemeParams::new(eta, eps, 1.0, 1e-5, nx, variant).unwrap();
                let s = Ugks::new(g.clone(), kind.build(&g).unwrap(), p).unwrap();
                let mut state = init.clone();
                for _ in 0..10_000 {
                    state = s.step(&state).unwrap();
                }
                let peak = state.rho.iter().cloned().fold(0.0, f64::max);
                let drift = ((state.total_density() - m0) / m0).abs();
                assert!(drift <= 1e-12, "{kind} {variant} {eps}");
                assert!(state.micro_macro_defect() <= 1e-11 * peak, "{kind} {variant} {eps}");
            }
        }
    }
}
