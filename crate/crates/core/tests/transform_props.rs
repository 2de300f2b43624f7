mod common;

use common::*;
use gch_core::lagrangian::{eval_u_at, forward_transform, reconstruct, GridSpec, LagrangianState};
use gch_core::model::{InitialProfile, NonlinearitySpec, GchParams};
use gch_core::semilinear::energy;
use gch_core::GchError;
use proptest::prelude::*;

#[test]
fn zero_data_gives_identity_coordinate() {
    let data = InitialProfile::Zero.sample(-6.0, 6.0, 121).unwrap();
    let s = forward_transform(&data, GridSpec::new(41, 5.0).unwrap()).unwrap();
    for j in 0..41 {
        assert!((s.x[j] - s.y[j]).abs() < 1e-12);
    }
    assert!(s.u.iter().chain(&s.v).all(|&v| v == 0.0));
    assert!(s.xi.iter().all(|&v| v == 1.0));
}

// Y(x) = x + sign(x)(1 - e^{-2|x|})/2 for u0 = e^{-|x|}
fn peakon_label(x: f64) -> f64 {
    x + x.signum() * 0.5 * (1.0 - (-2.0 * x.abs()).exp())
}

#[test]
fn peakon_label_matches_antiderivative_with_refinement() {
    let profile = InitialProfile::Peakon { c: 1.0, center: 0.0 };
    let mut errs = vec![];
    for m in [801, 3201, 12801] {
        let data = profile.sample(-40.0, 40.0, m).unwrap();
        let mut worst = 0.0f64;
        for x in [-2.0, -1.0, 1.0, 2.0] {
            let y = peakon_label(x);
            // grid with ±y among its nodes
            let cells = (41.0 / y.abs()).ceil() as usize;
            let s = forward_transform(&data, GridSpec::new(32 * cells + 1, cells as f64 * y.abs()).unwrap()).unwrap();
            let node = s.y.iter().position(|&yy| (yy - y).abs() < 1e-9).unwrap();
            worst = worst.max((s.x[node] - x).abs());
        }
        errs.push(worst);
    }
    assert!(errs[2] < 1e-5, "{errs:?}");
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn round_trip_reproduces_samples() {
    let profile = gaussian(0.8);
    let data = sampled(&profile, 10.0);
    let s = forward_transform(&data, GridSpec::new(8193, 16.0).unwrap()).unwrap();
    let f = reconstruct(&s, &GchParams::new(1.0, 0.0, 0.0, 0.0, NonlinearitySpec::square()).unwrap()).unwrap();
    let mut worst = 0.0f64;
    for (x, u) in data.x.iter().zip(&data.u0).step_by(50) {
        worst = worst.max((eval_u_at(&f, *x).unwrap() - u).abs());
    }
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn broken_interval_collapses_to_one_point() {
    let mut s = LagrangianState::zero(GridSpec::new(21, 2.0).unwrap());
    for j in 8..=12 {
        s.v[j] = std::f64::consts::PI;
        s.x[j] = s.x[8];
        s.u[j] = 0.25;
    }
    let f = reconstruct(&s, &ch()).unwrap();
    assert_eq!(f.x.len(), 21 - 4);
    let idx = f.x.iter().position(|&x| x == s.x[8]).unwrap();
    assert!(f.ux[idx].is_nan());
    assert_eq!(f.u[idx], 0.25);
}

#[test]
fn decreasing_positions_are_rejected() {
    let mut s = LagrangianState::zero(GridSpec::new(11, 2.0).unwrap());
    s.x[5] = s.x[6] + 0.1;
    assert!(matches!(reconstruct(&s, &ch()), Err(GchError::StateCorrupt(_))));
}

#[test]
fn evaluation_conventions() {
    let s = forward_transform(&default_samples(&gaussian(0.5)), GridSpec::new(257, 16.0).unwrap()).unwrap();
    let f = reconstruct(&s, &ch()).unwrap();
    assert_eq!(eval_u_at(&f, f.x[100]).unwrap(), f.u[100]);
    let mid = 0.5 * (f.x[100] + f.x[101]);
    assert!((eval_u_at(&f, mid).unwrap() - 0.5 * (f.u[100] + f.u[101])).abs() < 1e-15);
    assert!(matches!(eval_u_at(&f, 1e3), Err(GchError::OutOfDomain { .. })));
    let z = reconstruct(&LagrangianState::zero(GridSpec::new(11, 2.0).unwrap()), &ch()).unwrap();
    assert_eq!(eval_u_at(&z, 0.3).unwrap(), 0.0);
}

#[test]
fn transported_peakon_within_five_label_spacings() {
    let data = default_samples(&InitialProfile::Peakon { c: 1.0, center: 0.0 });
    let tr = run_y(&data, &ch(), 1024, 0.5, 1e-3, &[]);
    let f = field_y(&tr.final_state, &ch());
    let err = f.x.iter().zip(&f.u).map(|(x, u)| (u - peakon_exact(1.0, 0.5, *x)).abs()).fold(0.0, f64::max);
    assert!(err <= 5.0 * tr.final_state.dy, "{err} vs {}", tr.final_state.dy);
}

#[test]
fn reconstructed_energy_excess_vanishes_under_refinement() {
    let data = default_samples(&InitialProfile::Steep { amp: 2.0 });
    let mut excess = vec![];
    for n in [512, 1024, 2048] {
        let tr = run_y(&data, &ch(), n, 1.2, 2e-3, &[0.0, 0.4, 0.8, 1.2]);
        let worst = tr
            .snapshots
            .iter()
            .map(|s| (field_y(&s.state, &ch()).h1_energy() - s.energy.energy).max(0.0) / s.energy.energy)
            .fold(0.0, f64::max);
        excess.push(worst);
    }
    assert!(ratios(&excess).iter().all(|r| *r <= 0.5), "{excess:?}");
    assert!(excess[2] < 1e-3, "{excess:?}");
}

#[test]
fn solver_states_stay_monotone() {
    let data = default_samples(&InitialProfile::Steep { amp: 2.0 });
    let tr = run_y(&data, &ch(), 1024, 1.5, 2e-3, &[0.5, 1.0, 1.5]);
    for snap in &tr.snapshots {
        let tol = gch_core::lagrangian::grid_tolerance(snap.state.dy);
        assert!(snap.state.monotonicity_violation() <= tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn initial_density_is_one(amp in -1.5f64..1.5, width in 0.5f64..2.0, center in -2.0f64..2.0) {
        let data = InitialProfile::Gaussian { amp, width, center }.sample(-14.0, 14.0, 2801).unwrap();
        let s = forward_transform(&data, GridSpec::new(129, 22.0).unwrap()).unwrap();
        prop_assert!(s.xi.iter().all(|&v| v == 1.0));
        prop_assert!(s.x.windows(2).all(|w| w[1] > w[0]));
        // the label never runs behind the position
        prop_assert!(s.x.windows(2).zip(s.y.windows(2)).all(|(x, y)| x[1] - x[0] <= y[1] - y[0] + 1e-12));
        let e = energy(&s, &ch(), 0.0).energy;
        prop_assert!((e - data.h1_norm_sq()).abs() < 2e-2 * data.h1_norm_sq().max(1e-3));
    }
}
