use std::f64::consts::TAU;
use std::io::BufReader;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sglab::elliptic::{hessian_det, solve_sg_potential, SolveOptions};
use sglab::inequalities::{
    check_det_expansion, check_det_lip, check_h1_interp, check_sobolev_interp,
};
use sglab::lab::{ols, parse_config, InitialData, ParsedConfig, Preset, RunConfig};
use sglab::spectral::{
    derivative, inv_laplacian, l2, laplacian, norm, perp_gradient, random_field, read_field,
    refine, write_field, DumpHeader,
};
use sglab::transport::Model;
use sglab::wasserstein::{w2_exact_small, DensityOnTorus};
use sglab::{NormKind, ScalarField, TorusGrid};

fn field(n: usize, seed: u64, gamma: f64) -> ScalarField {
    let grid = TorusGrid::new(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_field(&grid, gamma, Some(n as i64 / 3), &mut rng)
}

fn density(side: usize, seed: u64) -> DensityOnTorus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..side * side)
        .map(|_| rand::Rng::random_range(&mut rng, 0.2..1.0))
        .collect();
    DensityOnTorus::new(side, w).unwrap()
}

fn gamma() -> impl Strategy<Value = f64> {
    prop_oneof![Just(2.0), Just(3.0), Just(4.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(seed in any::<u64>(), g in gamma()) {
        let f = field(32, seed, g).map(|v| v + 0.25);
        let n2 = f.values().len() as f64;
        let spec: f64 = f.spectral().iter().map(|c| c.norm_sqr()).sum::<f64>() / (n2 * n2);
        let l = l2(&f).powi(2);
        prop_assert!((spec - l).abs() <= 1e-12 * l);
    }

    #[test]
    fn laplacian_inverts_up_to_mean(seed in any::<u64>(), g in gamma(), shift in -2.0..2.0f64) {
        let f = field(32, seed, g).map(|v| v + shift);
        let centred = f.mean_free();
        let back = laplacian(&inv_laplacian(&centred).unwrap());
        prop_assert!(l2(&back.sub(&centred).unwrap()) <= 1e-10 * l2(&centred));
        let composed = derivative(&inv_laplacian(&centred).unwrap(), (2, 0)).unwrap()
            .add(&derivative(&inv_laplacian(&centred).unwrap(), (0, 2)).unwrap()).unwrap();
        prop_assert!(l2(&composed.sub(&centred).unwrap()) <= 1e-10 * l2(&centred));
    }

    #[test]
    fn perp_gradient_is_divergence_free(seed in any::<u64>(), g in gamma()) {
        let psi = field(32, seed, g);
        let (u, v) = perp_gradient(&psi);
        let div = derivative(&u, (1, 0)).unwrap().add(&derivative(&v, (0, 1)).unwrap()).unwrap();
        let d2 = norm(&psi, NormKind::Hs { s: 2.0 }).unwrap();
        prop_assert!(l2(&div) <= 1e-12 * d2.max(1e-300));
    }

    #[test]
    fn sobolev_interpolation_has_constant_one(
        seed in any::<u64>(),
        g in gamma(),
        s0 in -2.0..0.0f64,
        s1 in 0.5..3.0f64,
        theta in 0.0..1.0f64,
    ) {
        let f = field(32, seed, g);
        let s = theta * s0 + (1.0 - theta) * s1;
        let r = check_sobolev_interp(&f, s0, s, s1).unwrap();
        prop_assert!(r.ratio <= 1.0 + 1e-12, "{}", r.ratio);
        let h = check_h1_interp(&f).unwrap();
        prop_assert!(h.ratio <= 1.0 + 1e-12 && h.pass);
    }

    #[test]
    fn determinant_identities(seed in any::<u64>(), g in gamma(), eps in 0.0..0.2f64) {
        let phi = field(32, seed, g);
        let eta = field(32, seed ^ 0x9e37_79b9, g);
        let det = hessian_det(&phi);
        let scale = l2(&derivative(&phi, (2, 0)).unwrap()).powi(2) + l2(&derivative(&phi, (1, 1)).unwrap()).powi(2);
        prop_assert!(det.mean().abs() <= 1e-10 * scale.max(1e-300));
        prop_assert!(check_det_expansion(&phi, &eta, eps).unwrap().pass);
        prop_assert!(check_det_lip(&phi, &eta).unwrap().ratio <= 2.0);
    }

    #[test]
    fn sg_potential_solves_its_equation(seed in any::<u64>(), g in gamma(), eps in 0.0..0.02f64) {
        let rho = sglab::spectral::normalize_linf(&field(32, seed, g));
        let (psi, rep) = solve_sg_potential(&rho, eps, SolveOptions::default()).unwrap();
        prop_assert!(rep.converged);
        let lhs = laplacian(&psi).add(&hessian_det(&psi).scale(eps)).unwrap();
        prop_assert!(l2(&lhs.sub(&rho).unwrap()) <= 1e-10);
    }

    #[test]
    fn refinement_keeps_coarse_samples(seed in any::<u64>(), g in gamma(), factor in prop_oneof![Just(1usize), Just(2), Just(4)]) {
        let f = field(32, seed, g);
        let fine = refine(&f, factor).unwrap();
        let m = fine.grid().n() / 32;
        let worst = (0..32)
            .flat_map(|i| (0..32).map(move |j| (i, j)))
            .map(|(i, j)| (fine.at(i * m, j * m) - f.at(i, j)).abs())
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e-12 * sglab::spectral::linf(&f).max(1.0));
    }

    #[test]
    fn dump_round_trip_is_bitwise(seed in any::<u64>(), t in 0.0..10.0f64) {
        let f = field(32, seed, 3.0);
        let header = DumpHeader { n: 32, kind: "rho".into(), time: t, epsilon: Some(0.01) };
        let mut buf = Vec::new();
        write_field(&mut buf, &f, &header).unwrap();
        let (h, g) = read_field(BufReader::new(buf.as_slice())).unwrap();
        prop_assert_eq!(h, header);
        prop_assert_eq!(g.values(), f.values());
    }

    #[test]
    fn ols_recovers_lines(a in -5.0..5.0f64, b in -5.0..5.0f64, k in 3usize..12) {
        let x: Vec<f64> = (0..k).map(|i| i as f64 * 0.3 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let f = ols(&x, &y).unwrap();
        prop_assert!((f.slope - a).abs() <= 1e-9 && (f.intercept - b).abs() <= 1e-9);
    }

    #[test]
    fn run_config_round_trips(
        exp in 5u32..8,
        eps in 0.0..0.2f64,
        t_final in 0.1..5.0f64,
        scale in 0.01..2.0f64,
        seed in any::<u64>(),
        model in prop_oneof![Just(Model::SGeps), Just(Model::Corrector)],
    ) {
        let cfg = RunConfig {
            n: 1 << exp,
            model,
            eps,
            t_final,
            initial_data: InitialData::Scaled { preset: Preset::Steep, scale },
            seed,
            ..RunConfig::default()
        };
        let parsed = ParsedConfig::Run(cfg.clone());
        let text = parsed.to_canonical_json();
        match parse_config(&text).unwrap() {
            ParsedConfig::Run(back) => prop_assert_eq!(back, cfg),
            ParsedConfig::Experiment(_) => prop_assert!(false, "round trip changed the kind"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exact_w2_is_a_metric(sa in any::<u64>(), sb in any::<u64>(), sc in any::<u64>()) {
        let (a, b, c) = (density(4, sa), density(4, sb), density(4, sc));
        let ab = w2_exact_small(&a, &b).unwrap().distance;
        let ba = w2_exact_small(&b, &a).unwrap().distance;
        let bc = w2_exact_small(&b, &c).unwrap().distance;
        let ac = w2_exact_small(&a, &c).unwrap().distance;
        prop_assert!((ab - ba).abs() <= 1e-10);
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!(w2_exact_small(&a, &a).unwrap().distance <= 1e-10);
        if sa != sb {
            prop_assert!(ab > 0.0);
        }
    }
}

#[test]
fn shear_is_stationary_for_the_sg_solver() {
    let grid = TorusGrid::new(32).unwrap();
    let rho = ScalarField::from_fn(&grid, |_, y| (TAU * y).sin() + 0.2 * (2.0 * TAU * y).cos());
    let euler = inv_laplacian(&rho).unwrap();
    let (psi, _) = solve_sg_potential(&rho, 0.1, SolveOptions::default()).unwrap();
    assert!(sglab::spectral::linf(&psi.sub(&euler).unwrap()) <= 1e-12);
}
