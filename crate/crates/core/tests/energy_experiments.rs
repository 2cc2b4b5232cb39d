use mkdv_core::calibration::CalibrationTable;
use mkdv_core::equations::{calibrate_gauge, calibrate_miura, physical_l2_sq, EquationSpec, Sign, SystemState};
use mkdv_core::exec::Execution;
use mkdv_core::integrator::evolve;
use mkdv_core::modified_energy::{boundary_form, corrected_energy};
use mkdv_core::random::{random_field, RandomLaw};
use mkdv_core::resonance::SymbolFunction;
use mkdv_core::spectral::{weighted_norm_sq, Weight};

fn drift(values: &[f64]) -> f64 {
    values.iter().map(|v| (v - values[0]).abs()).fold(0.0, f64::max)
}

#[test]
fn corrected_energy_drifts_less_on_most_seeds() {
    let table = CalibrationTable::shipped();
    let a = SymbolFunction::sobolev(0.1, 0.05);
    let eq = EquationSpec::renormalized(Sign::Focusing);
    let m = 4;
    let law = RandomLaw::new(0.6).normalized(0.0, 4.0);
    let mut wins = 0;
    let seeds = 50;
    for seed in 0..seeds {
        let u0 = SystemState::scalar(random_field(32, &law, 1000 + seed), 0.0);
        let traj = evolve(&u0, &eq, 0.02, 2.5e-4, 4).unwrap();
        let plain: Vec<f64> = traj.slices.iter().map(|s| weighted_norm_sq(s.u(), Weight::Symbol(&a)).unwrap()).collect();
        let corrected: Vec<f64> = traj
            .slices
            .iter()
            .map(|s| corrected_energy(s.u(), &a, m, eq.sigma(), &table, Execution::default()).unwrap())
            .collect();
        if drift(&corrected) <= drift(&plain) {
            wins += 1;
        }
    }
    println!("corrected energy drifts less on {wins}/{seeds} seeds");
    assert!(wins * 5 >= seeds * 4, "{wins}/{seeds}");
}

#[test]
fn boundary_term_decays_in_cutoff() {
    let a = SymbolFunction::sobolev(0.25, 0.125);
    let law = RandomLaw::new(1.0);
    let cutoffs = [2usize, 4, 8, 16];
    let mut mean = vec![0.0; cutoffs.len()];
    for seed in 0..8 {
        let u = random_field(64, &law, 500 + seed);
        for (slot, &m) in mean.iter_mut().zip(&cutoffs) {
            *slot += boundary_form(&u, &a, m, Execution::default()).abs() / 8.0;
        }
    }
    println!("mean |B| at M = {cutoffs:?}: {mean:?}");
    for w in mean.windows(2) {
        assert!(w[1] <= 1.05 * w[0], "{mean:?}");
    }
}

#[test]
fn gauge_constant_is_recovered_by_calibration() {
    let u0 = random_field(64, &RandomLaw::new(2.0).normalized(1.0, 1.0), 17);
    let mass = physical_l2_sq(&u0);
    let state = SystemState::scalar(u0, 0.0);
    let plain = evolve(&state, &EquationSpec::mkdv(Sign::Focusing), 0.25, 5e-4, 500).unwrap();
    let renorm = evolve(&state, &EquationSpec::renormalized(Sign::Focusing), 0.25, 5e-4, 500).unwrap();
    let (c, dist) = calibrate_gauge(&plain, &renorm, mass).unwrap();
    let shipped = CalibrationTable::shipped().gauge.unwrap();
    assert!((c - shipped).abs() < 1e-8, "fitted {c}, shipped {shipped}");
    assert!(dist < 1e-8);
}

#[test]
fn miura_coefficients_are_recovered_by_calibration() {
    let u0 = random_field(32, &RandomLaw::new(2.0).band(8).normalized(1.0, 1.0), 5);
    let traj = evolve(&SystemState::scalar(u0, 0.0), &EquationSpec::mkdv(Sign::Defocusing), 0.05, 5e-4, 25).unwrap();
    let fit = calibrate_miura(&traj, 2.0, 0.7).unwrap();
    let shipped = CalibrationTable::shipped().miura.unwrap();
    assert!((fit.beta - shipped.beta).abs() < 1e-6, "{fit:?}");
    assert!((fit.kdv_coupling - shipped.kdv_coupling).abs() < 1e-6, "{fit:?}");
}
