use ade::analysis::{field_stats, fit_loglog_slope, mean_profile, radial_energy_spectrum, SpectrumProfile};
use ade::noise::NormalStream;
use ade::turbulence::{TurbulenceGenerator, TurbulenceSpec};
use ade::{ScalarField, VelocityField};
use proptest::prelude::*;

fn velocity_profile(v: &VelocityField) -> SpectrumProfile {
    let mut p = radial_energy_spectrum(&ScalarField::from_vec(v.nx, v.ny, v.vx.clone()).unwrap()).unwrap();
    let py = radial_energy_spectrum(&ScalarField::from_vec(v.nx, v.ny, v.vy.clone()).unwrap()).unwrap();
    p.energy.iter_mut().zip(&py.energy).for_each(|(a, b)| *a += b);
    p
}

fn relative_change(a: &VelocityField, b: &VelocityField) -> f64 {
    let num: f64 = a.vx.iter().chain(&a.vy).zip(b.vx.iter().chain(&b.vy)).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = a.vx.iter().chain(&a.vy).map(|x| x * x).sum();
    (num / den).sqrt()
}

#[test]
fn unlimited_field_follows_the_slope_inside_the_band() {
    let spec = TurbulenceSpec::square(64);
    let k_hi = (spec.resolved_band()[1] / std::f64::consts::TAU).floor();
    let g = TurbulenceGenerator::new(spec, 2024).unwrap();
    let v = g.generate_unlimited(0, 1e-4).unwrap();
    let fit = fit_loglog_slope(&velocity_profile(&v), 2.0, k_hi - 1.0).unwrap();
    assert!((-2.3..=-1.7).contains(&fit.slope), "slope {}", fit.slope);
}

#[test]
fn modes_outside_the_band_carry_no_energy() {
    let spec = TurbulenceSpec::square(64);
    let k_hi = (spec.resolved_band()[1] / std::f64::consts::TAU).floor() as usize;
    let g = TurbulenceGenerator::new(spec, 5).unwrap();
    let p = velocity_profile(&g.generate_unlimited(0, 1e-4).unwrap());
    let inside: f64 = p.energy[..k_hi].iter().sum();
    let outside: f64 = p.energy[k_hi + 1..].iter().sum();
    assert!(outside <= 1e-20 * inside, "{outside} vs {inside}");
}

#[test]
fn white_noise_profile_is_flat_per_mode() {
    let n = 64;
    let mut profiles = Vec::new();
    for seed in 0..100 {
        let mut rng = NormalStream::new(seed, 0);
        let f = ScalarField::from_fn(n, n, |_, _| rng.next_standard());
        profiles.push(radial_energy_spectrum(&f).unwrap());
    }
    let mean = mean_profile(&profiles).unwrap();
    let per_mode: Vec<f64> = (1..mean.nyquist).map(|r| mean.energy[r - 1] / mean.counts[r - 1] as f64).collect();
    let (lo, hi) = per_mode.iter().fold((f64::MAX, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    assert!(hi / lo < 3.0, "ratio {}", hi / lo);
}

#[test]
fn phase_steps_change_the_field_gradually() {
    let mut changes = Vec::new();
    for dt in [1e-4, 1e-3, 1e-2] {
        let mut spec = TurbulenceSpec::square(32);
        spec.dt_turb = dt;
        let g = TurbulenceGenerator::new(spec, 8).unwrap();
        let a = g.generate_unlimited(10, 1e-4).unwrap();
        let b = g.generate_unlimited(11, 1e-4).unwrap();
        changes.push(relative_change(&a, &b));
    }
    assert!(changes[0] < 1e-2, "{changes:?}");
    assert!(changes[0] < changes[1] && changes[1] < changes[2], "{changes:?}");
}

#[test]
fn components_are_centred_with_the_requested_spread() {
    let g = TurbulenceGenerator::new(TurbulenceSpec::rect(48, 32), 3).unwrap();
    let v = g.generate_unlimited(0, 2e-4).unwrap();
    for c in [&v.vx, &v.vy] {
        let s = field_stats(c).unwrap();
        assert!(s.mean.abs() < 1e-18);
        assert!((s.std - 2e-4).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn limited_speed_never_reaches_the_cap(
        seed in any::<u64>(),
        n in 4usize..24,
        step in 0u64..1000,
        rms in 1e-6f64..1.0,
        cap in 1e-4f64..1e-2,
    ) {
        let mut spec = TurbulenceSpec::square(n);
        spec.cap = cap;
        let g = TurbulenceGenerator::new(spec, seed).unwrap();
        let v = g.generate(step, rms).unwrap();
        prop_assert!(v.max_speed() < cap);
        prop_assert!(v.vx.iter().chain(&v.vy).all(|x| x.is_finite()));
    }

    #[test]
    fn same_seed_same_field(seed in any::<u64>(), step in 0u64..100) {
        let a = TurbulenceGenerator::new(TurbulenceSpec::square(16), seed).unwrap();
        let b = TurbulenceGenerator::new(TurbulenceSpec::square(16), seed).unwrap();
        prop_assert_eq!(a.generate(step, 1e-4).unwrap(), b.generate(step, 1e-4).unwrap());
    }
}
