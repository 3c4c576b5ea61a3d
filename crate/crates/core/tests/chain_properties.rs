use ade::analysis::mass_audit;
use ade::corruption::{
    add_training_noise, forward_chain, make_training_pair, precompute_dataset, ChainParams, CorruptionChain,
    ForwardConfig, NoiseParams,
};
use ade::io::pnm;
use ade::io::tensor::read_tensor;
use ade::noise::{NormalStream, UniformStream};
use ade::reverse::{sample, GaussianNoise, OraclePredictor};
use ade::field::EXACT_GRID;
use ade::lattice::Precision;
use ade::schedule::{DiffusionSchedule, PecletReference};
use ade::FieldStack;
use proptest::prelude::*;

fn random_image(seed: u64, c: usize, n: usize) -> FieldStack {
    let mut rng = UniformStream::new(seed, 0);
    FieldStack::from_vec(c, n, n, (0..c * n * n).map(|_| rng.next_unit()).collect()).unwrap()
}

fn chain(img: &FieldStack, params: &ChainParams, seed: u64) -> CorruptionChain {
    forward_chain(img, &params.forward_config(img.width, img.height, seed).unwrap()).unwrap()
}

#[test]
fn three_steps_give_four_snapshots() {
    let img = random_image(0, 3, 10);
    let c = chain(&img, &ChainParams { sigma_max: 2.0, steps: 3, ..ChainParams::default() }, 0);
    assert_eq!(c.to_tensor().dims(), &[4, 3, 10, 10]);
    assert!(c.snapshot(0).max_abs_diff(&img) <= EXACT_GRID);
}

fn fo_chain(img: &FieldStack, fo: Vec<f64>) -> CorruptionChain {
    let schedule = DiffusionSchedule::from_fo(fo, img.width, 0.0, 1.0, 1e-3, PecletReference::PerInterval).unwrap();
    let cfg = ForwardConfig { schedule, turbulence: None, seed: 0, precision: Precision::F64 };
    forward_chain(img, &cfg).unwrap()
}

#[test]
fn zero_budget_schedule_repeats_the_image() {
    let img = random_image(1, 1, 12);
    let c = fo_chain(&img, vec![0.0; 4]);
    for k in 1..=c.steps {
        assert!(c.snapshot(k).bitwise_eq(&c.snapshot(0)));
    }
}

#[test]
fn zero_width_intervals_hold_the_state() {
    let img = random_image(1, 1, 12);
    let c = fo_chain(&img, vec![1e-3; 3]);
    assert!(!c.snapshot(1).bitwise_eq(&c.snapshot(0)));
    for k in 2..=c.steps {
        assert!(c.snapshot(k).bitwise_eq(&c.snapshot(1)));
    }
}

#[test]
fn training_noise_statistics() {
    let n = 1_000_000;
    let u = FieldStack::zeros(1, 1000, 1000);
    let noisy = add_training_noise(&u, 0.01, &mut NormalStream::new(77, 3)).unwrap();
    let mean = noisy.data.iter().sum::<f64>() / n as f64;
    let var = noisy.data.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n as f64;
    assert!(mean.abs() <= 5e-5, "mean {mean}");
    assert!((var.sqrt() - 0.01).abs() <= 1e-4, "std {}", var.sqrt());
}

#[test]
fn chains_never_contain_training_noise() {
    let img = random_image(2, 1, 10);
    let params = ChainParams { sigma_max: 3.0, steps: 4, pe: 0.06, ..ChainParams::default() };
    let a = chain(&img, &params, 9);
    let mut rng = NormalStream::new(1, 1);
    for k in 1..=a.steps {
        make_training_pair(&a, k, &NoiseParams::default(), &mut rng).unwrap();
    }
    assert_eq!(a, chain(&img, &params, 9));
}

#[test]
fn mnist_scale_dataset_is_conservative_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("images");
    std::fs::create_dir(&images).unwrap();
    for i in 0..10 {
        pnm::write_image(&images.join(format!("digit{i}.pgm")), &random_image(100 + i, 1, 28), 255).unwrap();
    }
    let params = ChainParams { steps: 10, pe: 0.06, sigma_max: 8.0, ..ChainParams::default() };
    let first = precompute_dataset(&images, &params, &dir.path().join("a")).unwrap();
    let second = precompute_dataset(&images, &params, &dir.path().join("b")).unwrap();
    assert_eq!(first.written.len(), 10);
    assert!(first.failures.is_empty());
    for (a, b) in first.written.iter().zip(&second.written) {
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        let t = read_tensor(a).unwrap();
        assert_eq!(t.dims(), &[11, 1, 28, 28]);
        let snaps: Vec<FieldStack> = t
            .to_f64_vec()
            .chunks(28 * 28)
            .map(|s| FieldStack::from_vec(1, 28, 28, s.to_vec()).unwrap())
            .collect();
        let c = CorruptionChain::from_snapshots(snaps, chain(&random_image(0, 1, 28), &params, 0).meta).unwrap();
        assert!(mass_audit(&c).max_drift().unwrap() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn zero_peclet_ignores_the_turbulence_switch(seed in any::<u64>(), n in 5usize..14, steps in 2usize..5) {
        let img = random_image(seed, 1, n);
        let on = ChainParams { sigma_max: 2.0, steps, pe: 0.0, turbulence: true, ..ChainParams::default() };
        let off = ChainParams { turbulence: false, ..on.clone() };
        prop_assert_eq!(chain(&img, &on, seed).snapshots, chain(&img, &off, seed).snapshots);
    }

    #[test]
    fn every_chain_conserves_channel_mass(
        seed in any::<u64>(),
        n in 5usize..16,
        channels in 1usize..4,
        steps in 2usize..5,
        pe in 0.0f64..0.14,
        sigma_max in 1.0f64..4.0,
    ) {
        let img = random_image(seed, channels, n);
        let c = chain(&img, &ChainParams { sigma_max, steps, pe, ..ChainParams::default() }, seed);
        prop_assert!(mass_audit(&c).max_drift().unwrap() <= 1e-10);
    }

    #[test]
    fn training_target_recovers_previous_snapshot(seed in any::<u64>(), k in 1usize..5) {
        let img = random_image(seed, 1, 8);
        let c = chain(&img, &ChainParams { sigma_max: 2.0, steps: 4, pe: 0.1, ..ChainParams::default() }, seed);
        let pair = make_training_pair(&c, k, &NoiseParams::from_training(0.01).unwrap(), &mut NormalStream::new(seed, 5)).unwrap();
        let back: Vec<f64> = pair.input.data.iter().zip(&pair.target.data).map(|(u, d)| u + d).collect();
        prop_assert_eq!(back, c.snapshot_slice(k - 1).to_vec());
        prop_assert_eq!(pair.loss(&pair.target).unwrap(), 0.0);
    }

    #[test]
    fn oracle_sampling_returns_the_clean_image(seed in any::<u64>(), noisy in any::<bool>(), pe in 0.0f64..0.14) {
        let img = random_image(seed, 2, 8);
        let c = chain(&img, &ChainParams { sigma_max: 2.5, steps: 4, pe, ..ChainParams::default() }, seed);
        let sigma_s = if noisy { 0.01 / 1.25 } else { 0.0 };
        let out = sample(&c.prior(), &OraclePredictor::new(&c), c.steps, sigma_s, &mut GaussianNoise::new(seed), false).unwrap();
        prop_assert!(out.output.bitwise_eq(&c.snapshot(0)));
        prop_assert!(out.output.max_abs_diff(&img) <= EXACT_GRID);
    }
}
