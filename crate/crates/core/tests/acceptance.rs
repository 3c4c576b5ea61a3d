//! Acceptance suite. Runs every check with its tolerance and wall-clock
//! budget, prints one PASS/FAIL line per check and exits nonzero if any
//! check fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_rational::Ratio;

use ade::analysis::{fit_loglog_slope, mass_audit, radial_energy_spectrum};
use ade::corruption::{forward_chain, ChainParams, CorruptionChain, ForwardConfig, NoiseParams};
use ade::field::{FieldStack, ScalarField};
use ade::lattice::{equilibrium, Precision, D2Q9};
use ade::noise::UniformStream;
use ade::reverse::{sample, GaussianNoise, OraclePredictor, ZeroPredictor};
use ade::schedule::{
    exp_schedule, DEFAULT_TAU_MAX, fo_to_sigma, plan_intervals, sigma_to_fo, DiffusionSchedule, PecletReference, ScheduleParams,
};
use ade::turbulence::{TurbulenceGenerator, TurbulenceSpec};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ulp(x: f64) -> f64 {
    let a = x.abs();
    f64::from_bits(a.to_bits() + 1) - a
}

fn d2q9_moments() -> Outcome {
    let w: Vec<Ratio<i64>> = D2Q9::WEIGHT_RATIOS.iter().map(|&(n, d)| Ratio::new(n, d)).collect();
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    let cs2 = Ratio::new(D2Q9::CS2_RATIO.0, D2Q9::CS2_RATIO.1);
    let sum: Ratio<i64> = w.iter().sum();
    let mut first = [zero; 2];
    let mut second = [[zero; 2]; 2];
    for (k, wk) in w.iter().enumerate() {
        let c = D2Q9::DIRECTIONS[k].map(|v| Ratio::from_integer(v as i64));
        for a in 0..2 {
            first[a] += *wk * c[a];
            for b in 0..2 {
                second[a][b] += *wk * c[a] * c[b];
            }
        }
    }
    let rational_ok = sum == one
        && first == [zero; 2]
        && second == [[cs2, zero], [zero, cs2]]
        && cs2 == Ratio::new(1, 3);

    let mut rng = UniformStream::new(2024, 0);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let u = rng.next_unit();
        let r = 1e-2 * rng.next_unit().sqrt();
        let th = std::f64::consts::TAU * rng.next_unit();
        let feq = equilibrium(u, [r * th.cos(), r * th.sin()]).map_err(|e| e.to_string())?;
        let s: f64 = feq.iter().sum();
        if u > 0.0 {
            worst = worst.max((s - u).abs() / ulp(u));
        }
    }
    check(
        rational_ok && worst <= 8.0,
        format!("rational identities {rational_ok}, worst zeroth-moment error {worst} ulp over 1e5 draws"),
    )
}

/// Explicit five-point heat solver on the `(nx-2) x (ny-2)` interior with
/// mirrored (no-flux) edges, advanced to total diffusion time `alpha_t`.
fn fd_heat(u0: &ScalarField, alpha_t: f64) -> ScalarField {
    let (mx, my) = (u0.nx - 2, u0.ny - 2);
    let mut u: Vec<f64> = (0..mx * my).map(|i| u0.get(i % mx + 1, i / mx + 1)).collect();
    let steps = (alpha_t / 0.02).ceil() as usize;
    let r = alpha_t / steps as f64;
    let mut next = u.clone();
    for _ in 0..steps {
        for y in 0..my {
            for x in 0..mx {
                let c = u[y * mx + x];
                let l = if x > 0 { u[y * mx + x - 1] } else { c };
                let rr = if x + 1 < mx { u[y * mx + x + 1] } else { c };
                let d = if y > 0 { u[(y - 1) * mx + x] } else { c };
                let t = if y + 1 < my { u[(y + 1) * mx + x] } else { c };
                next[y * mx + x] = c + r * (l + rr + d + t - 4.0 * c);
            }
        }
        std::mem::swap(&mut u, &mut next);
    }
    let mut out = ScalarField::zeros(u0.nx, u0.ny);
    for y in 0..my {
        for x in 0..mx {
            out.set(x + 1, y + 1, u[y * mx + x]);
        }
    }
    out
}

fn smooth_image(n: usize) -> ScalarField {
    let c = (n as f64 - 1.0) / 2.0;
    ScalarField::from_fn(n, n, |x, y| {
        let (dx, dy) = (x as f64 - c, y as f64 - c);
        let blob = (-(dx * dx + dy * dy) / 40.0).exp();
        let side = (-((x as f64 - 0.3 * n as f64).powi(2) + (y as f64 - 0.7 * n as f64).powi(2)) / 12.0).exp();
        0.2 + 0.6 * blob + 0.3 * side
    })
}

fn blur_params(sigma_max: f64, steps: usize) -> ChainParams {
    ChainParams {
        sigma_max,
        steps,
        pe: 0.0,
        turbulence: false,
        ..ChainParams::default()
    }
}

fn heat_errors(img: &ScalarField, tau_max: f64) -> Result<(f64, f64, f64), String> {
    let n = img.nx;
    let mut params = blur_params(4.0, 10);
    params.tau_max = tau_max;
    let stack = FieldStack::from_channels(std::slice::from_ref(img)).unwrap();
    let cfg = params.forward_config(n, n, 0).map_err(|e| e.to_string())?;
    let chain = forward_chain(&stack, &cfg).map_err(|e| e.to_string())?;
    let alpha_t = cfg.schedule.fo.last().unwrap() * (n * n) as f64;
    let reference = fd_heat(img, alpha_t);
    let last = chain.prior().channel(0);
    let (mut linf, mut sq, mut count) = (0.0f64, 0.0, 0usize);
    for y in 1..n - 1 {
        for x in 1..n - 1 {
            let d = last.get(x, y) - reference.get(x, y);
            linf = linf.max(d.abs());
            sq += d * d;
            count += 1;
        }
    }
    Ok((alpha_t, linf, (sq / count as f64).sqrt()))
}

fn heat_oracle() -> Outcome {
    let img = smooth_image(64);
    let (alpha_t, linf, l2) = heat_errors(&img, DEFAULT_TAU_MAX)?;
    let (_, linf_hi, l2_hi) = heat_errors(&img, 1.1)?;
    check(
        linf <= 1e-3 && l2 <= 1e-4,
        format!(
            "alpha*t = {alpha_t}, tau_max {DEFAULT_TAU_MAX}: interior L_inf {linf:.3e} (<= 1e-3), RMS {l2:.3e} (<= 1e-4); \
             at tau_max 1.1: L_inf {linf_hi:.3e}, RMS {l2_hi:.3e}"
        ),
    )
}

fn closed_box_chain(pe: f64, precision: Precision, seed: u64) -> Result<CorruptionChain, String> {
    let n = 64;
    let fo = 1000.0 / (6.0 * (n * n) as f64);
    let schedule =
        DiffusionSchedule::from_fo(vec![fo / 2.0, fo], n, pe, 1.0, 1e-3, PecletReference::PerInterval)
            .map_err(|e| e.to_string())?;
    let mut rng = UniformStream::new(seed, 0);
    let img = FieldStack::from_vec(1, n, n, (0..n * n).map(|_| rng.next_unit()).collect()).unwrap();
    let cfg = ForwardConfig {
        schedule,
        turbulence: (pe > 0.0).then(|| TurbulenceSpec::square(n)),
        seed,
        precision,
    };
    forward_chain(&img, &cfg).map_err(|e| e.to_string())
}

fn conservation() -> Outcome {
    let mut worst64 = 0.0f64;
    let mut worst32 = 0.0f64;
    let mut steps = 0;
    for (i, pe) in [0.0, 0.06, 0.14].into_iter().enumerate() {
        let c64 = closed_box_chain(pe, Precision::F64, i as u64)?;
        let c32 = closed_box_chain(pe, Precision::F32, i as u64)?;
        steps = 1000;
        worst64 = worst64.max(mass_audit(&c64).max_drift().unwrap());
        worst32 = worst32.max(mass_audit(&c32).max_drift().unwrap());
    }
    check(
        worst64 <= 1e-10 && worst32 <= 1e-4,
        format!("{steps} steps on 64x64, Pe in {{0, 0.06, 0.14}}: f64 drift {worst64:.2e}, f32 drift {worst32:.2e}"),
    )
}

fn turbulence_spectrum() -> Outcome {
    let n = 64;
    let mut slopes = Vec::new();
    let mut peak = 0.0f64;
    for seed in 0..10u64 {
        let spec = TurbulenceSpec::square(n);
        let k_hi = (spec.resolved_band()[1] / std::f64::consts::TAU).floor();
        let g = TurbulenceGenerator::new(spec, seed).map_err(|e| e.to_string())?;
        let v = g.generate(0, 1e-4).map_err(|e| e.to_string())?;
        let strong = g.generate(0, 1e-2).map_err(|e| e.to_string())?;
        peak = peak.max(v.max_speed()).max(strong.max_speed());
        let px = radial_energy_spectrum(&ScalarField::from_vec(n, n, v.vx.clone()).unwrap()).unwrap();
        let py = radial_energy_spectrum(&ScalarField::from_vec(n, n, v.vy.clone()).unwrap()).unwrap();
        let mut p = px.clone();
        p.energy.iter_mut().zip(&py.energy).for_each(|(a, b)| *a += b);
        let fit = fit_loglog_slope(&p, 1.0, k_hi).map_err(|e| e.to_string())?;
        slopes.push(fit.slope);
    }
    slopes.sort_by(f64::total_cmp);
    let median = 0.5 * (slopes[4] + slopes[5]);
    check(
        (-2.3..=-1.7).contains(&median) && peak <= 1e-3,
        format!("median slope {median:.3} over 10 seeds, max node speed {peak:.3e}"),
    )
}

fn oracle_reverse() -> Outcome {
    let n = 28;
    let noise = NoiseParams::default();
    let mut checked = 0;
    for i in 0..20u64 {
        let pe = [0.0, 0.06, 0.14][i as usize % 3];
        let mut rng = UniformStream::new(100 + i, 0);
        let img = FieldStack::from_vec(1, n, n, (0..n * n).map(|_| rng.next_unit()).collect()).unwrap();
        let params = ChainParams {
            sigma_max: 6.0,
            steps: 6,
            pe,
            seed: i,
            ..ChainParams::default()
        };
        let chain = forward_chain(&img, &params.forward_config(n, n, i).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let oracle = OraclePredictor::new(&chain);
        for sigma in [0.0, noise.sigma_s] {
            let s = sample(&chain.prior(), &oracle, chain.steps, sigma, &mut GaussianNoise::new(i), false)
                .map_err(|e| e.to_string())?;
            if !s.output.bitwise_eq(&chain.snapshot(0)) {
                return Err(format!("chain {i} (Pe {pe}, sigma_s {sigma}) not reconstructed bitwise"));
            }
            checked += 1;
        }
        let z = sample(&chain.prior(), &ZeroPredictor, chain.steps, 0.0, &mut GaussianNoise::new(i), false)
            .map_err(|e| e.to_string())?;
        if !z.output.bitwise_eq(&chain.prior()) {
            return Err(format!("zero predictor changed prior of chain {i}"));
        }
    }
    check(true, format!("{checked} oracle reconstructions bitwise exact, zero predictor keeps 20 priors"))
}

fn scheduler() -> Outcome {
    let mut rng = UniformStream::new(7, 0);
    let (mut end_err, mut budget_err, mut trip_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let fo_min = 10f64.powf(-6.0 + 3.0 * rng.next_unit());
        let fo_max = fo_min * 10f64.powf(0.1 + 3.0 * rng.next_unit());
        let steps = 2 + (rng.next_unit() * 30.0) as usize;
        let length = 16 + (rng.next_unit() * 240.0) as usize;
        let fo = exp_schedule(fo_min, fo_max, steps).map_err(|e| e.to_string())?;
        end_err = end_err
            .max(((fo[0] - fo_min) / fo_min).abs())
            .max(((fo[steps - 1] - fo_max) / fo_max).abs());
        let l = length as f64;
        let plan = plan_intervals(&fo, l, 1.0).map_err(|e| e.to_string())?;
        let budget: f64 = plan.iter().map(|p| p.alpha * p.n_steps as f64 / (l * l)).sum();
        budget_err = budget_err.max(((budget - (fo_max - fo_min)) / (fo_max - fo_min)).abs());
        let s = DiffusionSchedule::new(&ScheduleParams {
            fo_min,
            fo_max,
            steps,
            length,
            pe: 0.0,
            tau_max: 1.0,
            velocity_cap: 1e-3,
            peclet_reference: PecletReference::PerInterval,
        })
        .map_err(|e| e.to_string())?;
        let total: f64 = s.plan.iter().map(|p| p.alpha * p.n_steps as f64 / (l * l)).sum();
        budget_err = budget_err.max(((total - fo_max) / fo_max).abs());
        let sigma = 0.1 + 50.0 * rng.next_unit();
        let back = fo_to_sigma(sigma_to_fo(sigma, l).unwrap(), l).unwrap();
        trip_err = trip_err.max(((back - sigma) / sigma).abs());
    }
    check(
        end_err <= 1e-15 && budget_err <= 1e-12 && trip_err <= 1e-14,
        format!("endpoint rel err {end_err:.1e}, budget rel err {budget_err:.1e}, sigma/Fo round trip {trip_err:.1e}"),
    )
}

fn resolution_transfer() -> Outcome {
    let small = 32;
    let mut rng = UniformStream::new(11, 0);
    let coarse = ScalarField::from_fn(small, small, |x, y| {
        let c = (x as f64 - 12.0).hypot(y as f64 - 18.0);
        (if c < 7.0 { 0.8 } else { 0.2 }) + 0.1 * rng.next_unit()
    });
    let fine = ScalarField::from_fn(2 * small, 2 * small, |x, y| coarse.get(x / 2, y / 2));
    let fo_min = sigma_to_fo(0.5, small as f64).unwrap();
    let fo_max = sigma_to_fo(3.0, small as f64).unwrap();
    let run = |img: &ScalarField| -> Result<ScalarField, String> {
        let params = ScheduleParams {
            fo_min,
            fo_max,
            steps: 8,
            length: img.nx,
            pe: 0.0,
            tau_max: 1.0,
            velocity_cap: 1e-3,
            peclet_reference: PecletReference::PerInterval,
        };
        let cfg = ForwardConfig {
            schedule: DiffusionSchedule::new(&params).map_err(|e| e.to_string())?,
            turbulence: None,
            seed: 0,
            precision: Precision::F64,
        };
        let chain = forward_chain(&FieldStack::from_channels(std::slice::from_ref(img)).unwrap(), &cfg)
            .map_err(|e| e.to_string())?;
        Ok(chain.prior().channel(0))
    };
    let a = run(&coarse)?;
    let b = run(&fine)?;
    let down = ScalarField::from_fn(small, small, |x, y| {
        0.25 * (b.get(2 * x, 2 * y) + b.get(2 * x + 1, 2 * y) + b.get(2 * x, 2 * y + 1) + b.get(2 * x + 1, 2 * y + 1))
    });
    let diff = a.max_abs_diff(&down);
    check(diff <= 5e-2, format!("L_inf between L=32 and downsampled L=64 blur: {diff:.3e}"))
}

fn spectral_decay() -> Outcome {
    let n = 48;
    let schedules = [(4.0, 6), (8.0, 10), (16.0, 5)];
    let mut checked = 0;
    for &(sigma_max, steps) in &schedules {
        for seed in 0..5u64 {
            let mut rng = UniformStream::new(500 + seed, 0);
            let img = FieldStack::from_vec(1, n, n, (0..n * n).map(|_| rng.next_unit()).collect()).unwrap();
            let params = blur_params(sigma_max, steps);
            let chain = forward_chain(&img, &params.forward_config(n, n, seed).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let mut prev = f64::INFINITY;
            for k in 0..=chain.steps {
                let inner = chain.snapshot(k).interior().map_err(|e| e.to_string())?.channel(0);
                let e = radial_energy_spectrum(&inner).unwrap().top_quartile_energy();
                if e > prev {
                    return Err(format!(
                        "sigma_max {sigma_max}, seed {seed}: top-quartile energy rises at step {k} ({prev:.4e} -> {e:.4e})"
                    ));
                }
                prev = e;
                checked += 1;
            }
        }
    }
    check(true, format!("top-quartile energy non-increasing over {checked} interior snapshots (3 schedules x 5 seeds)"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn cli(args: &[String]) -> Result<(), String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = ade::cli::run(std::iter::once("ade".to_string()).chain(args.iter().cloned()), &mut out, &mut err);
    if code == 0 {
        Ok(())
    } else {
        Err(format!("ade {} -> {code}: {}", args.join(" "), String::from_utf8_lossy(&err)))
    }
}

fn args(s: &[&str]) -> Vec<String> {
    s.iter().map(|a| a.to_string()).collect()
}

fn same_bytes(a: &Path, b: &Path) -> Result<bool, String> {
    let x = std::fs::read(a).map_err(|e| format!("{}: {e}", a.display()))?;
    let y = std::fs::read(b).map_err(|e| format!("{}: {e}", b.display()))?;
    Ok(x == y)
}

fn manifest_of(p: &Path) -> String {
    format!("{}.manifest", p.display())
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = |name: &str| dir.path().join(name);
    let s = |p: &Path| p.display().to_string();
    let img = fixture("fixture16.pgm");
    let mut compared = 0;

    let chain1 = d("chain1.adet");
    cli(&args(&[
        "--threads", "1", "corrupt", "--in", &s(&img), "--out", &s(&chain1), "--sigma-max", "4", "--pe", "0.14",
        "--steps", "5", "--seed", "9",
    ]))?;
    let chain2 = d("chain2.adet");
    cli(&args(&["--threads", "4", "--config", &manifest_of(&chain1), "corrupt", "--out", &s(&chain2)]))?;
    let rgb1 = d("rgb1.adet");
    cli(&args(&[
        "corrupt", "--in", &s(&fixture("fixture16_rgb.ppm")), "--out", &s(&rgb1), "--pe", "0.06", "--precision", "f32",
    ]))?;
    let rgb2 = d("rgb2.adet");
    cli(&args(&["--threads", "3", "--config", &manifest_of(&rgb1), "corrupt", "--out", &s(&rgb2)]))?;

    let vel1 = d("vel1.adet");
    cli(&args(&["gen-velocity", "--size", "16", "--seed", "5", "--steps", "4", "--out", &s(&vel1)]))?;
    let vel2 = d("vel2.adet");
    cli(&args(&["--threads", "2", "--config", &manifest_of(&vel1), "gen-velocity", "--out", &s(&vel2)]))?;

    let rec1 = d("rec1.adet");
    cli(&args(&[
        "reverse", "--chain", &s(&chain1), "--predictor", "oracle", "--sigma-s", "0.008", "--seed", "3", "--out",
        &s(&rec1),
    ]))?;
    let rec2 = d("rec2.adet");
    cli(&args(&["--threads", "4", "--config", &manifest_of(&rec1), "reverse", "--out", &s(&rec2)]))?;

    let spec1 = d("spec1.csv");
    let plot1 = d("plot1.pgm");
    cli(&args(&["spectrum", "--in", &s(&img), "--compare", "--out", &s(&spec1), "--plot", &s(&plot1)]))?;
    let spec2 = d("spec2.csv");
    let plot2 = d("plot2.pgm");
    cli(&args(&[
        "--threads", "2", "--config", &manifest_of(&spec1), "spectrum", "--out", &s(&spec2), "--plot", &s(&plot2),
    ]))?;

    let (set1, set2) = (d("set1"), d("set2"));
    cli(&args(&[
        "chain", "--in-dir", &s(&fixture("images")), "--out-dir", &s(&set1), "--pe", "0.06", "--steps", "4",
    ]))?;
    cli(&args(&[
        "--threads", "3", "--config", &s(&set1.join("dataset.manifest")), "chain", "--out-dir", &s(&set2),
    ]))?;

    let mut pairs = vec![
        (chain1, chain2),
        (rgb1, rgb2),
        (vel1, vel2),
        (rec1, rec2),
        (spec1, spec2),
        (plot1, plot2),
    ];
    for name in ["a.chain.adet", "b.chain.adet"] {
        pairs.push((set1.join(name), set2.join(name)));
    }
    for (a, b) in &pairs {
        if !same_bytes(a, b)? {
            return Err(format!("{} and {} differ", a.display(), b.display()));
        }
        compared += 1;
    }
    check(true, format!("{compared} artifacts byte-identical on replay across 1-4 threads"))
}

fn main() {
    let checks: [(&str, fn() -> Outcome, Duration); 9] = [
        ("d2q9 moment identities", d2q9_moments, Duration::from_secs(1)),
        ("heat-equation oracle", heat_oracle, Duration::from_secs(30)),
        ("mass conservation", conservation, Duration::from_secs(30)),
        ("turbulence spectrum", turbulence_spectrum, Duration::from_secs(10)),
        ("oracle reverse chain", oracle_reverse, Duration::from_secs(10)),
        ("scheduler exactness", scheduler, Duration::from_secs(1)),
        ("resolution transfer", resolution_transfer, Duration::from_secs(30)),
        ("spectral decay", spectral_decay, Duration::from_secs(20)),
        ("manifest replay", reproducibility, Duration::from_secs(20)),
    ];
    let mut failed = 0;
    for (name, f, budget) in checks {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) => (took <= budget, d),
            Err(d) => (false, d),
        };
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {detail} [{:.2}s of {}s]", took.as_secs_f64(), budget.as_secs());
        if !ok {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
