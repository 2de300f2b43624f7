mod common;

use common::*;
use gch_core::lagrangian::{forward_transform, GridSpec, LagrangianState};
use gch_core::model::{make_preset, GchParams, InitialProfile, NonlinearitySpec, Preset};
use gch_core::nonlocal::{compute_sources, cumulative_metric, source_bounds, KernelWorkspace};
use gch_core::semilinear::energy;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(n: usize, rng: &mut impl Rng) -> LagrangianState {
    let mut s = LagrangianState::zero(GridSpec::new(n, rng.gen_range(1.0..5.0)).unwrap());
    for j in 0..n {
        s.u[j] = rng.gen_range(-1.5..1.5);
        s.v[j] = rng.gen_range(-3.14..3.14);
        s.xi[j] = rng.gen_range(0.2..2.5);
    }
    s
}

#[test]
fn metric_of_flat_and_fully_broken_states() {
    let mut s = LagrangianState::zero(GridSpec::new(25, 3.0).unwrap());
    let mut ws = KernelWorkspace::default();
    cumulative_metric(&s, &mut ws).unwrap();
    for j in 0..25 {
        assert!((ws.c[j] - (s.y[j] - s.y[0])).abs() < 1e-14);
    }
    s.v.iter_mut().for_each(|v| *v = std::f64::consts::PI);
    cumulative_metric(&s, &mut ws).unwrap();
    assert!(ws.c.iter().all(|&c| c == 0.0));
}

#[test]
fn metric_matches_per_interval_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s = random_state(17, &mut rng);
    let mut ws = KernelWorkspace::default();
    cumulative_metric(&s, &mut ws).unwrap();
    for j in 0..17 {
        let direct: f64 = (0..j)
            .map(|l| {
                let a = s.xi[l] * (0.5 * s.v[l]).cos().powi(2);
                let b = s.xi[l + 1] * (0.5 * s.v[l + 1]).cos().powi(2);
                0.5 * s.dy * (a + b)
            })
            .sum();
        assert!((ws.c[j] - direct).abs() < 1e-14);
    }
}

#[test]
fn even_data_gives_even_potential_and_odd_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 41;
    let mut s = LagrangianState::zero(GridSpec::new(n, 4.0).unwrap());
    for j in 0..=n / 2 {
        let (u, v, xi) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..3.0), rng.gen_range(0.3..2.0));
        let m = n - 1 - j;
        s.u[j] = u;
        s.u[m] = u;
        s.xi[j] = xi;
        s.xi[m] = xi;
        s.v[j] = -v;
        s.v[m] = if m == j { 0.0 } else { v };
    }
    let p = GchParams::new(0.8, 0.0, 0.4, 0.0, NonlinearitySpec::square()).unwrap();
    let src = compute_sources(&s, &p, &mut KernelWorkspace::default()).unwrap();
    for j in 0..n {
        let m = n - 1 - j;
        assert!((src.p1[j] - src.p1[m]).abs() < 1e-10);
        assert!((src.dx_p1[j] + src.dx_p1[m]).abs() < 1e-10);
    }
}

#[test]
fn kernel_weights_are_one_on_broken_intervals() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut s = random_state(40, &mut rng);
    for j in 10..20 {
        s.v[j] = std::f64::consts::PI;
    }
    let mut ws = KernelWorkspace::default();
    cumulative_metric(&s, &mut ws).unwrap();
    for j in 0..40 {
        for l in 0..40 {
            let w = (-(ws.c[j] - ws.c[l]).abs()).exp();
            assert!(w <= 1.0);
            if (10..20).contains(&j) && (10..20).contains(&l) {
                assert_eq!(w, 1.0);
            }
        }
    }
}

#[test]
fn peakon_has_no_forcing_terms_under_ch() {
    let data = default_samples(&InitialProfile::Peakon { c: 1.0, center: 0.0 });
    let s = forward_transform(&data, GridSpec::new(513, 44.0).unwrap()).unwrap();
    let src = compute_sources(&s, &ch(), &mut KernelWorkspace::default()).unwrap();
    assert!(src.dx_p2.iter().chain(&src.p2).all(|&v| v == 0.0));
}

#[test]
fn source_bounds_hold_along_a_trajectory() {
    let p = GchParams { k: 0.5, ..make_preset(&Preset::ChDissipative { lambda: 0.3 }).unwrap() };
    let data = default_samples(&gaussian(1.0));
    let tr = run_y(&data, &p, 512, 1.0, 5e-3, &every_step(1.0, 5e-3));
    let mut ws = KernelWorkspace::default();
    for snap in &tr.snapshots {
        let e = energy(&snap.state, &p, 0.0).energy;
        let (b1, b2) = source_bounds(&p, e);
        let src = compute_sources(&snap.state, &p, &mut ws).unwrap();
        let m1 = src.p1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let m2 = src.dx_p2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(m1 <= b1 && m2 <= b2, "T={}: {m1} vs {b1}, {m2} vs {b2}", snap.state.time);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn scan_matches_direct_sum(seed in any::<u64>(), n in 3usize..65, alpha in -2.0f64..2.0, k in -1.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(n, &mut rng);
        let p = GchParams::new(alpha, 0.0, k, 0.0, NonlinearitySpec::polynomial(vec![0.0, 0.3, 1.0, -0.2]).unwrap()).unwrap();
        let fast = compute_sources(&s, &p, &mut KernelWorkspace::default()).unwrap();
        let slow = direct_sources(&s, &p);
        for (a, b) in [(&fast.p1, &slow[0]), (&fast.dx_p1, &slow[1]), (&fast.p2, &slow[2]), (&fast.dx_p2, &slow[3])] {
            let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
            }
        }
    }
}
