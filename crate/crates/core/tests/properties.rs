use mkdv_core::envelopes::{build_envelope, ENVELOPE_TOL};
use mkdv_core::equations::{evaluate_rhs, EquationSpec, Sign, SystemState};
use mkdv_core::modified_energy::{boundary_form, quartic_form};
use mkdv_core::random::{random_field, RandomLaw};
use mkdv_core::resonance::{non_resonant, omega3, omega4, FrequencyTuple, SymbolFunction};
use mkdv_core::spacetime::{shell_masses, xk_norm, SpaceTimeSpectrum};
use mkdv_core::spectral::{forward_transform, inverse_transform, project_dyadic, DyadicBlock, SpectralField};
use mkdv_core::exec::Execution;
use num_complex::Complex64;
use proptest::prelude::*;

fn field(n_max: usize, seed: u64) -> SpectralField {
    random_field(n_max, &RandomLaw::new(1.0), seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omega4_factorizes(a in -(1i64 << 20)..(1i64 << 20), b in -(1i64 << 20)..(1i64 << 20), c in -(1i64 << 20)..(1i64 << 20)) {
        let t = FrequencyTuple::new([a, b, c, -a - b - c]).unwrap();
        let expected = -3 * (a + b) as i128 * (a + c) as i128 * (b + c) as i128;
        prop_assert_eq!(omega4(&t), expected);
        prop_assert_eq!(omega4(&t) == 0, !non_resonant(a, b, c));
    }

    #[test]
    fn omega3_factorizes(a in -(1i64 << 20)..(1i64 << 20), b in -(1i64 << 20)..(1i64 << 20)) {
        let t = FrequencyTuple::new([a, b, -a - b]).unwrap();
        prop_assert_eq!(omega3(&t), 3 * a as i128 * b as i128 * (-a - b) as i128);
    }

    #[test]
    fn transforms_round_trip(seed in any::<u64>(), n_max in 1usize..40) {
        let u = field(n_max, seed);
        let grid = 2 * n_max + 1 + (seed % 7) as usize;
        let back = forward_transform(&inverse_transform(&u, grid).unwrap(), n_max).unwrap();
        let err = (&back - &u).l2_sq().sqrt();
        prop_assert!(err <= 1e-12 * u.l2_sq().sqrt());
    }

    #[test]
    fn blocks_sum_to_identity(seed in any::<u64>(), n_max in 1usize..80) {
        let u = field(n_max, seed);
        let mut total = SpectralField::zeros(n_max);
        let mut energy = 0.0;
        for k in DyadicBlock::covering(n_max) {
            let p = project_dyadic(&u, k);
            prop_assert_eq!(&project_dyadic(&p, k), &p);
            energy += p.l2_sq();
            total = &total + &p;
        }
        prop_assert_eq!(&total, &u);
        prop_assert!((energy - u.l2_sq()).abs() <= 1e-12 * u.l2_sq());
    }

    #[test]
    fn tendencies_preserve_mean(seed in any::<u64>(), n_max in 1usize..24) {
        let state = SystemState::scalar(field(n_max, seed), 0.0);
        for eq in [EquationSpec::mkdv(Sign::Focusing), EquationSpec::renormalized(Sign::Defocusing), EquationSpec::kdv(), EquationSpec::kdv_mkdv(Sign::Focusing)] {
            let r = evaluate_rhs(&state, &eq).unwrap();
            prop_assert_eq!(r.u().get(0), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn quartic_forms_are_translation_invariant(seed in any::<u64>(), shift in -3.0f64..3.0) {
        let u = field(12, seed);
        let a = SymbolFunction::sobolev(0.5, 0.125);
        let moved = u.translated(shift);
        let (q0, q1) = (quartic_form(&u, &a, None), quartic_form(&moved, &a, None));
        prop_assert!((q0 - q1).abs() <= 1e-10 * q0.abs().max(1.0));
        let (b0, b1) = (boundary_form(&u, &a, 2, Execution::Sequential), boundary_form(&moved, &a, 2, Execution::Sequential));
        prop_assert!((b0 - b1).abs() <= 1e-10 * b0.abs().max(1.0));
    }

    #[test]
    fn envelope_invariants(seed in any::<u64>(), sigma in 0.0f64..2.0, s in prop::sample::select(vec![0.0, 0.25, 0.5]), scale in 0.01f64..100.0, power in -20i32..20) {
        let u = random_field(300, &RandomLaw::new(sigma), seed);
        let env = build_envelope(&u, s, 0.125).unwrap();
        prop_assert!(env.verify().holds(0.125, ENVELOPE_TOL));
        for (c, b) in env.energies.iter().zip(&env.beta) {
            prop_assert!(b >= c);
        }
        // Scaling by a power of two is exact in floating point, so the
        // envelope is bit-identical; other factors agree to rounding.
        prop_assert_eq!(&build_envelope(&(&u * (power as f64).exp2()), s, 0.125).unwrap().beta, &env.beta);
        let scaled = build_envelope(&(&u * scale), s, 0.125).unwrap();
        for (a, b) in scaled.beta.iter().zip(&env.beta) {
            prop_assert!((a - b).abs() <= 1e-14 * b);
        }
    }

    #[test]
    fn xk_is_a_norm(seed in any::<u64>(), lambda in -4.0f64..4.0) {
        let modes: Vec<i64> = (8..16).collect();
        let bins = 256;
        let mut rng = mkdv_core::random::rng(seed);
        let mut random_spec = || {
            let values = (0..modes.len() * bins).map(|_| mkdv_core::random::complex_normal(&mut rng)).collect();
            SpaceTimeSpectrum::from_cells(modes.clone(), bins, 0.75, values).unwrap()
        };
        let (f, g) = (random_spec(), random_spec());
        let k = DyadicBlock(3);
        let (nf, ng) = (xk_norm(&f, k).unwrap(), xk_norm(&g, k).unwrap());
        let scaled = xk_norm(&f.scaled(lambda), k).unwrap();
        prop_assert!((scaled - lambda.abs() * nf).abs() <= 1e-10 * nf);
        prop_assert!(xk_norm(&f.added(&g).unwrap(), k).unwrap() <= nf + ng + 1e-10 * (nf + ng));
        let l2: f64 = shell_masses(&f).iter().enumerate().map(|(j, m)| (j as f64).exp2() * m * m).sum::<f64>().sqrt();
        prop_assert!(nf >= l2 * (1.0 - 1e-12));
    }
}

#[test]
fn single_block_envelope_decays_at_half_eps_per_block() {
    let eps = 0.125;
    let u = SpectralField::from_fn(1024, |n| if DyadicBlock::of(n).0 == 6 { Complex64::new(0.3, -0.2) } else { Complex64::new(0.0, 0.0) });
    let env = build_envelope(&u, 0.25, eps).unwrap();
    for n in 6..env.blocks() - 1 {
        assert!((env.beta[n + 1] / env.beta[n] - (-eps / 2.0).exp2()).abs() < 1e-14);
    }
    for n in 3..6 {
        assert!((env.beta[n] / env.beta[n + 1] - (-eps / 2.0).exp2()).abs() < 1e-14);
    }
}
