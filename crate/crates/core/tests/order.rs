use std::f64::consts::TAU;

use kslab_core::kinetic::project_cells;
use kslab_core::order::{
    dissipation_rate, global_order, kinetic_potential, local_order, phase_moments, phidot_bound,
    phidot_formula, rdot_formula,
};
use kslab_core::{
    FrequencyDensity, InitialProfile, KineticState, PhaseGrid, Stepper, StepperConfig,
};
use proptest::prelude::*;

fn asymmetric(n: usize, g: &FrequencyDensity, n_omega: usize, k: f64) -> KineticState {
    let grid = PhaseGrid::new(n).unwrap();
    KineticState::from_slices(grid.clone(), g, n_omega, k, |i| {
        project_cells(&grid, |th| {
            1.0 + 0.4 * (th - 0.2 * i as f64).cos() + 0.2 * (2.0 * th).sin()
        })
    })
    .unwrap()
}

#[test]
fn cosine_amplitude_matches_fourier_coefficient() {
    for &n in &[32usize, 64, 256] {
        for &a in &[0.05, 0.25, 0.5] {
            let s = KineticState::from_profile(
                PhaseGrid::new(n).unwrap(),
                &FrequencyDensity::dirac(),
                1,
                1.0,
                &InitialProfile::Cosine {
                    amplitude: a,
                    center: 4.0,
                },
            )
            .unwrap();
            let op = global_order(&s);
            let h = TAU / n as f64;
            assert!((op.r - a).abs() <= 5.0 * h * h, "n={n} a={a} R={}", op.r);
            assert!((op.phi - 4.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn narrow_bump_approaches_full_sync() {
    let s = KineticState::from_profile(
        PhaseGrid::new(512).unwrap(),
        &FrequencyDensity::dirac(),
        1,
        1.0,
        &InitialProfile::VonMises {
            concentration: 400.0,
            center: 1.0,
        },
    )
    .unwrap();
    let op = global_order(&s);
    assert!(op.r > 0.998);
    assert!((op.phi - 1.0).abs() < 1e-10);
    // no mass away from φ, so the sine-square moment nearly vanishes
    assert!(rdot_formula(&s).unwrap().abs() < 5e-3);
}

#[test]
fn local_orders_recombine() {
    let g = FrequencyDensity::uniform(0.8).unwrap();
    let s = asymmetric(128, &g, 8, 1.0);
    let op = global_order(&s);
    let h = s.grid().dtheta();
    let mut cos_sum = 0.0;
    let mut sin_sum = 0.0;
    for k in 0..s.n_omega() {
        let mass: f64 = s.slice(k).iter().sum::<f64>() * h;
        let l = local_order(&s, k).unwrap();
        cos_sum += mass * l.r * (l.phi - op.phi).cos();
        sin_sum += mass * l.r * (l.phi - op.phi).sin();
    }
    assert!((cos_sum - op.r).abs() <= 5.0 * h * h);
    assert!(sin_sum.abs() <= 5.0 * h * h);
}

#[test]
fn zero_mass_slice_is_an_error() {
    let g = FrequencyDensity::uniform(0.5).unwrap();
    let grid = PhaseGrid::new(32).unwrap();
    let res = KineticState::from_slices(grid, &g, 4, 1.0, |i| {
        if i == 2 {
            vec![0.0; 32]
        } else {
            vec![1.0; 32]
        }
    });
    // either the constructor or local_order must refuse the empty slice
    if let Ok(s) = res {
        assert!(local_order(&s, 2).is_err());
    }
}

#[test]
fn sine_moment_vanishes() {
    let g = FrequencyDensity::uniform(0.5).unwrap();
    let s = asymmetric(64, &g, 4, 1.0);
    let m = phase_moments(&s).unwrap();
    let h = s.grid().dtheta();
    assert!(m.sin_rho.abs() <= 5.0 * h * h);
}

/// Samples `(t, R, φ, Ṙ formula, φ̇ formula, V_k, dissipation)` along a run.
fn record(s: &mut KineticState, t_end: f64, every: f64) -> (Vec<[f64; 7]>, f64) {
    let mut st = Stepper::new(StepperConfig::default()).unwrap();
    let tr = st
        .run(s, t_end, every, |s, _| {
            let op = global_order(s);
            [
                s.t(),
                op.r,
                op.phi,
                rdot_formula(s).unwrap(),
                phidot_formula(s).unwrap(),
                kinetic_potential(s),
                dissipation_rate(s),
            ]
        })
        .unwrap();
    (tr.samples, tr.stats.dt_max)
}

fn unwrap(phi: &[f64]) -> Vec<f64> {
    let mut out = vec![phi[0]];
    for w in phi.windows(2) {
        let mut d = w[1] - w[0];
        d -= TAU * (d / TAU).round();
        out.push(out.last().unwrap() + d);
    }
    out
}

#[test]
fn formulas_match_measured_derivatives() {
    let g = FrequencyDensity::uniform(0.5).unwrap();
    let mut s = asymmetric(256, &g, 16, 2.0);
    let (rec, dt) = record(&mut s, 2.0, 0.02);
    let h = TAU / 256.0;
    let tol = 10.0 * (dt + h * h);
    let phi = unwrap(&rec.iter().map(|r| r[2]).collect::<Vec<_>>());
    for i in 1..rec.len() - 1 {
        let span = rec[i + 1][0] - rec[i - 1][0];
        let rdot = (rec[i + 1][1] - rec[i - 1][1]) / span;
        let phidot = (phi[i + 1] - phi[i - 1]) / span;
        assert!(
            (rdot - rec[i][3]).abs() <= tol,
            "t={} Ṙ {rdot} vs {}",
            rec[i][0],
            rec[i][3]
        );
        assert!(
            (phidot - rec[i][4]).abs() <= tol,
            "t={} φ̇ {phidot} vs {}",
            rec[i][0],
            rec[i][4]
        );
        assert!(rec[i][4].abs() <= phidot_bound(rec[i][1], 0.5, 2.0).unwrap());
        assert!(rdot.abs() <= 0.5 + 2.0 + 0.01);
    }
}

#[test]
fn identical_energy_dissipates() {
    let mut s = asymmetric(128, &FrequencyDensity::dirac(), 1, 1.5);
    let (rec, dt) = record(&mut s, 6.0, 0.02);
    let h = TAU / 128.0;
    let tol = 10.0 * (dt + h * h);
    for w in rec.windows(2) {
        assert!(w[1][5] <= w[0][5] + 1e-9);
    }
    for i in 1..rec.len() - 1 {
        let dv = (rec[i + 1][5] - rec[i - 1][5]) / (rec[i + 1][0] - rec[i - 1][0]);
        assert!(
            (dv + rec[i][6]).abs() <= tol,
            "t={} {dv} vs {}",
            rec[i][0],
            -rec[i][6]
        );
    }
    let r0 = rec[0][1];
    assert!(rec.iter().all(|r| r[1] >= r0 - 1e-8));
}

#[test]
fn identical_amplitude_settles() {
    let mut s = asymmetric(64, &FrequencyDensity::dirac(), 1, 2.0);
    let (rec, _) = record(&mut s, 20.0, 0.1);
    let q = rec.len() * 3 / 4;
    let max_rdot = rec[q..].iter().map(|r| r[3].abs()).fold(0.0, f64::max);
    assert!(max_rdot < 1e-3);
}

#[test]
fn even_density_has_no_phase_drift() {
    let s = KineticState::from_profile(
        PhaseGrid::new(64).unwrap(),
        &FrequencyDensity::dirac(),
        1,
        3.0,
        &InitialProfile::VonMises {
            concentration: 2.0,
            center: 0.7,
        },
    )
    .unwrap();
    assert!(phidot_formula(&s).unwrap().abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identical_rdot_nonnegative(
        a in 0.01f64..0.5,
        b in -0.25f64..0.25,
        c in 0.0f64..TAU,
        k in 0.0f64..10.0,
    ) {
        let grid = PhaseGrid::new(64).unwrap();
        let cells = project_cells(&grid, |th| {
            (1.0 + 2.0 * a * (th - c).cos() + 2.0 * b * (2.0 * th).sin()).max(0.0)
        });
        let s = KineticState::from_cells(grid, &FrequencyDensity::dirac(), 1, k, cells).unwrap();
        if global_order(&s).defined {
            prop_assert!(rdot_formula(&s).unwrap() >= 0.0);
        }
    }

    #[test]
    fn rotation_shifts_phase(shift in 0usize..64, c in 0.0f64..TAU, kappa in 0.1f64..5.0) {
        let s = KineticState::from_profile(
            PhaseGrid::new(64).unwrap(),
            &FrequencyDensity::uniform(0.3).unwrap(),
            4,
            1.0,
            &InitialProfile::VonMises { concentration: kappa, center: c },
        )
        .unwrap();
        let a = global_order(&s);
        let b = global_order(&s.rotated(shift));
        prop_assert!((a.r - b.r).abs() <= 1e-12);
        let mut d = b.phi - a.phi - shift as f64 * TAU / 64.0;
        d -= TAU * (d / TAU).round();
        prop_assert!(d.abs() <= 1e-12);
    }

    #[test]
    fn amplitude_in_unit_interval(kappa in 0.0f64..50.0, c in 0.0f64..TAU) {
        let s = KineticState::from_profile(
            PhaseGrid::new(64).unwrap(),
            &FrequencyDensity::dirac(),
            1,
            1.0,
            &InitialProfile::VonMises { concentration: kappa, center: c },
        )
        .unwrap();
        let r = global_order(&s).r;
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r));
    }
}
