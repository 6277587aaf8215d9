use std::f64::consts::{FRAC_PI_2, PI, TAU};

use kslab_core::kinetic::{cfl_dt, characteristics, project_cells, velocity_field, OrderSeries};
use kslab_core::order::{global_order, OrderParams};
use kslab_core::{
    FrequencyDensity, InitialProfile, KineticState, PhaseGrid, Scheme, Stepper, StepperConfig,
};
use proptest::prelude::*;

fn dirac_cosine(n: usize, k: f64, a: f64) -> KineticState {
    KineticState::from_profile(
        PhaseGrid::new(n).unwrap(),
        &FrequencyDensity::dirac(),
        1,
        k,
        &InitialProfile::Cosine {
            amplitude: a,
            center: 0.0,
        },
    )
    .unwrap()
}

#[test]
fn velocity_examples() {
    let g = FrequencyDensity::uniform(0.1).unwrap();
    let s = KineticState::from_profile(
        PhaseGrid::new(64).unwrap(),
        &g,
        2,
        2.0,
        &InitialProfile::Uniform,
    )
    .unwrap();
    let n = 64;
    let j = 10;
    let edge = s.grid().edge(j);

    // θ_edge = φ
    let op = OrderParams {
        r: 0.5,
        phi: edge,
        defined: true,
    };
    let v = velocity_field(&s, &op);
    for k in 0..2 {
        assert!((v[k * n + j] - s.omegas()[k]).abs() < 1e-15);
    }

    // K R = 0
    let op = OrderParams {
        r: 0.0,
        phi: 1.0,
        defined: false,
    };
    let v = velocity_field(&s, &op);
    for k in 0..2 {
        assert!(v[k * n..(k + 1) * n].iter().all(|&x| x == s.omegas()[k]));
    }

    // ω = 0.1, K = 2, R = 0.5, θ − φ = π/2 gives 0.1 − 1.0
    let single = KineticState::from_cells(
        PhaseGrid::new(64).unwrap(),
        &FrequencyDensity::table(vec![0.0999, 0.1, 0.1001], vec![0.0, 1.0, 0.0]).unwrap(),
        1,
        2.0,
        vec![1.0; 64],
    )
    .unwrap();
    let w = single.omegas()[0];
    let op = OrderParams {
        r: 0.5,
        phi: edge - FRAC_PI_2,
        defined: true,
    };
    let v = velocity_field(&single, &op);
    assert!((v[j] - (w - 1.0)).abs() < 1e-14);
    assert!((w - 0.1).abs() < 1e-12);
}

#[test]
fn cfl_example() {
    // M = 1, K = 4, Δθ = 2π/256, cfl = 1/2
    let g = FrequencyDensity::uniform(1.0).unwrap();
    let s = KineticState::from_profile(
        PhaseGrid::new(256).unwrap(),
        &g,
        16,
        4.0,
        &InitialProfile::Cosine {
            amplitude: 0.3,
            center: 0.0,
        },
    )
    .unwrap();
    let dt = cfl_dt(&s, 0.5, 1.0);
    let dtheta = TAU / 256.0;
    let r = global_order(&s).r;
    let vmax_bound = s.max_abs_omega() + 4.0 * r;
    assert!((dt - 0.5 * dtheta / vmax_bound).abs() < 1e-15);
    // the M + K bound is the most restrictive possible step
    assert!(dt >= 0.5 * dtheta / 5.0);
    let op = global_order(&s);
    let vmax = velocity_field(&s, &op)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(vmax <= 5.0);
    assert!(dt <= 0.5 * dtheta / vmax + 1e-15);
}

/// Donor-cell semi-discretization on a uniform grid, advanced with small-step
/// classic RK4. Shares no code with the crate.
fn oracle_run(rho0: &[f64], k: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let n = rho0.len();
    let h = TAU / n as f64;
    let rhs = |f: &[f64]| -> Vec<f64> {
        let (mut c, mut s) = (0.0, 0.0);
        for (j, v) in f.iter().enumerate() {
            let th = (j as f64 + 0.5) * h;
            c += v * th.cos() * h;
            s += v * th.sin() * h;
        }
        let flux: Vec<f64> = (0..n)
            .map(|j| {
                let th = j as f64 * h;
                // K Im(J e^{-iθ}) = −K R sin(θ − φ)
                let v = k * (s * th.cos() - c * th.sin());
                if v > 0.0 {
                    v * f[(j + n - 1) % n]
                } else {
                    v * f[j]
                }
            })
            .collect();
        (0..n).map(|j| -(flux[(j + 1) % n] - flux[j]) / h).collect()
    };
    let mut f = rho0.to_vec();
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        let k1 = rhs(&f);
        let y: Vec<f64> = f.iter().zip(&k1).map(|(a, b)| a + 0.5 * dt * b).collect();
        let k2 = rhs(&y);
        let y: Vec<f64> = f.iter().zip(&k2).map(|(a, b)| a + 0.5 * dt * b).collect();
        let k3 = rhs(&y);
        let y: Vec<f64> = f.iter().zip(&k3).map(|(a, b)| a + dt * b).collect();
        let k4 = rhs(&y);
        for j in 0..n {
            f[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    f
}

fn oracle_r(f: &[f64]) -> f64 {
    let h = TAU / f.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for (j, v) in f.iter().enumerate() {
        let th = (j as f64 + 0.5) * h;
        c += v * th.cos() * h;
        s += v * th.sin() * h;
    }
    c.hypot(s)
}

#[test]
fn identical_step_increases_amplitude() {
    let mut s = dirac_cosine(64, 1.0, 0.2);
    let r0 = global_order(&s).r;
    let mut st = Stepper::new(StepperConfig::default()).unwrap();
    let dt = st.cfl_dt(&s);
    st.step(&mut s, dt).unwrap();
    let r1 = global_order(&s).r;
    assert!(r1 > r0);

    // the oracle's amplitude increases by the same amount to leading order
    let f0 = project_cells(&PhaseGrid::new(64).unwrap(), |th| {
        (1.0 + 0.4 * th.cos()) / TAU
    });
    let f1 = oracle_run(&f0, 1.0, dt, dt / 8.0);
    let d_oracle = oracle_r(&f1) - oracle_r(&f0);
    assert!(d_oracle > 0.0);
    assert!((r1 - r0 - d_oracle).abs() < 0.05 * d_oracle);
}

#[test]
fn identical_run_synchronizes_like_oracle() {
    let mut s = dirac_cosine(64, 1.0, 0.1);
    let mut st = Stepper::new(StepperConfig::default()).unwrap();
    let tr = st.run(&mut s, 40.0, 1.0, |s, _| global_order(s).r).unwrap();
    let r_end = *tr.samples.last().unwrap();
    assert!(r_end >= 0.99, "R(40) = {r_end}");
    assert!(tr.stats.min_step_dr >= -1e-9);

    let f0 = project_cells(&PhaseGrid::new(64).unwrap(), |th| {
        (1.0 + 0.2 * th.cos()) / TAU
    });
    let f = oracle_run(&f0, 1.0, 10.0, 0.01);
    let mut s10 = dirac_cosine(64, 1.0, 0.1);
    let tr10 = st
        .run(&mut s10, 10.0, 10.0, |s, _| global_order(s).r)
        .unwrap();
    assert!((tr10.samples[1] - oracle_r(&f)).abs() < 0.05);
}

#[test]
fn runs_are_bit_identical() {
    let g = FrequencyDensity::uniform(0.3).unwrap();
    let make = || {
        KineticState::from_profile(
            PhaseGrid::new(64).unwrap(),
            &g,
            8,
            1.5,
            &InitialProfile::VonMises {
                concentration: 1.0,
                center: 2.0,
            },
        )
        .unwrap()
    };
    let mut a = make();
    let mut b = make();
    let mut st = Stepper::new(StepperConfig::default()).unwrap();
    let ta = st
        .run(&mut a, 2.0, 0.5, |s, _| global_order(s).r.to_bits())
        .unwrap();
    let tb = st
        .run(&mut b, 2.0, 0.5, |s, _| global_order(s).r.to_bits())
        .unwrap();
    assert_eq!(ta.samples, tb.samples);
    assert_eq!(a.values(), b.values());
}

#[test]
fn characteristic_matches_closed_form() {
    // θ̇ = −sin θ has tan(θ/2) = tan(θ₀/2) e^{−t}
    let series = OrderSeries::constant(2.0, 0.5, 0.0, 0.0, 1.0).unwrap();
    let path = characteristics(&series, 0.1, 0.0, 0.0, 1.0, 1e-3).unwrap();
    let (t, th) = *path.last().unwrap();
    let exact = 2.0 * ((0.05f64).tan() * (-t).exp()).atan();
    assert!((th - exact).abs() < 1e-8);
}

#[test]
fn moment_identity_holds() {
    let s = KineticState::from_profile(
        PhaseGrid::new(128).unwrap(),
        &FrequencyDensity::uniform(0.5).unwrap(),
        8,
        1.0,
        &InitialProfile::VonMises {
            concentration: 2.0,
            center: 4.0,
        },
    )
    .unwrap();
    let op = global_order(&s);
    let rho = s.density();
    let h = s.grid().dtheta();
    let m: f64 = rho
        .iter()
        .enumerate()
        .map(|(j, r)| (s.grid().center(j) - op.phi).sin() * r * h)
        .sum();
    assert!(m.abs() <= 5.0 * h * h);
}

/// L1 distance between the `n`-cell solution and the reference aggregated to
/// the same cells.
fn l1_vs_reference(coarse: &[f64], fine: &[f64]) -> f64 {
    let ratio = fine.len() / coarse.len();
    let h = TAU / coarse.len() as f64;
    coarse
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let avg = fine[j * ratio..(j + 1) * ratio].iter().sum::<f64>() / ratio as f64;
            (c - avg).abs() * h
        })
        .sum()
}

fn convergence_rate(scheme: Scheme) -> f64 {
    // dt_max out of the way so dt shrinks with dθ
    let cfg = StepperConfig {
        scheme,
        cfl: 0.4,
        dt_max: 1.0,
    };
    let solve = |n: usize| {
        let mut s = KineticState::from_profile(
            PhaseGrid::new(n).unwrap(),
            &FrequencyDensity::dirac(),
            1,
            1.0,
            &InitialProfile::Cosine {
                amplitude: 0.2,
                center: 1.0,
            },
        )
        .unwrap();
        let mut st = Stepper::new(cfg).unwrap();
        st.run(&mut s, 1.0, 1.0, |_, _| ()).unwrap();
        s.values().to_vec()
    };
    let reference = solve(4096);
    let e1 = l1_vs_reference(&solve(64), &reference);
    let e2 = l1_vs_reference(&solve(128), &reference);
    let e3 = l1_vs_reference(&solve(256), &reference);
    let r1 = (e1 / e2).log2();
    let r2 = (e2 / e3).log2();
    r1.min(r2)
}

#[test]
fn upwind_is_first_order() {
    let rate = convergence_rate(Scheme::Upwind);
    assert!(rate >= 0.8, "upwind rate {rate}");
}

#[test]
fn muscl_is_second_order() {
    let rate = convergence_rate(Scheme::Muscl);
    assert!(rate >= 1.7, "MUSCL rate {rate}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn slice_masses_are_conserved(
        a in 0.0f64..0.5,
        c in 0.0f64..TAU,
        k in 0.0f64..5.0,
        ell in 0.01f64..2.0,
        steps in 1usize..40,
        upwind in any::<bool>(),
    ) {
        let g = FrequencyDensity::uniform(ell).unwrap();
        let mut s = KineticState::from_slices(PhaseGrid::new(64).unwrap(), &g, 6, k, |i| {
            project_cells(&PhaseGrid::new(64).unwrap(), |th| {
                1.0 + 2.0 * a * (th - c - 0.3 * i as f64).cos()
            })
        })
        .unwrap();
        let m0 = s.slice_masses();
        let scheme = if upwind { Scheme::Upwind } else { Scheme::Muscl };
        let mut st = Stepper::new(StepperConfig { scheme, cfl: 0.4, dt_max: 0.05 }).unwrap();
        for _ in 0..steps {
            let dt = st.cfl_dt(&s);
            st.step(&mut s, dt).unwrap();
            let op = global_order(&s);
            let vmax = velocity_field(&s, &op).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(vmax <= ell + k + 1e-12);
        }
        for (m, m_start) in s.slice_masses().iter().zip(&m0) {
            prop_assert!((m - m_start).abs() <= 1e-12 * m_start);
        }
        prop_assert!((s.total_mass() - 1.0).abs() <= 1e-10);
        prop_assert!(s.min_value() >= -1e-13);
    }

    #[test]
    fn identical_amplitude_never_drops(a in 0.02f64..0.5, k in 0.1f64..4.0, c in 0.0f64..TAU) {
        let mut s = KineticState::from_profile(
            PhaseGrid::new(64).unwrap(),
            &FrequencyDensity::dirac(),
            1,
            k,
            &InitialProfile::Cosine { amplitude: a, center: c },
        )
        .unwrap();
        let mut st = Stepper::new(StepperConfig::default()).unwrap();
        let tr = st.run(&mut s, 3.0, 0.5, |_, _| ()).unwrap();
        prop_assert!(tr.stats.min_step_dr >= -1e-9);
    }
}

#[test]
fn rotated_state_rotates_phase() {
    let s = dirac_cosine(64, 1.0, 0.3);
    let op = global_order(&s);
    let rot = s.rotated(5);
    let op2 = global_order(&rot);
    assert!((op.r - op2.r).abs() < 1e-12);
    let expected = (op.phi + 5.0 * TAU / 64.0).rem_euclid(TAU);
    assert!((op2.phi - expected).abs() < 1e-12);
    let _ = PI;
}

#[test]
fn fourier_profile() {
    let p: InitialProfile =
        serde_json::from_str(r#"{"kind":"fourier","cos":[0.2],"sin":[0.0,0.1]}"#).unwrap();
    let s = KineticState::from_profile(
        PhaseGrid::new(128).unwrap(),
        &FrequencyDensity::dirac(),
        1,
        1.0,
        &p,
    )
    .unwrap();
    let op = global_order(&s);
    let h = TAU / 128.0;
    assert!((op.r - 0.2).abs() <= 5.0 * h * h);
    let neg = InitialProfile::Fourier {
        cos: vec![0.6],
        sin: vec![],
    };
    assert!(neg.validate().is_err());
    assert!(
        serde_json::from_str::<InitialProfile>(r#"{"kind":"cosine","amplitude":0.1}"#).is_err()
    );
}
