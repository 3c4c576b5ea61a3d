// Synthesises a 64x64 velocity field and fits the slope of its spectrum.

use ade::analysis::{fit_loglog_slope, radial_energy_spectrum};
use ade::turbulence::{TurbulenceGenerator, TurbulenceSpec};
use ade::ScalarField;

pub fn run_example() -> ade::Result<()> {
    let n = 64;
    let spec = TurbulenceSpec::square(n);
    let k_hi = (spec.resolved_band()[1] / std::f64::consts::TAU).floor();
    let gen = TurbulenceGenerator::new(spec, 7)?;
    let v = gen.generate(0, 5e-4)?;
    println!("max speed {:.3e} (cap 1e-3)", v.max_speed());

    let mut p = radial_energy_spectrum(&ScalarField::from_vec(n, n, v.vx.clone())?)?;
    let py = radial_energy_spectrum(&ScalarField::from_vec(n, n, v.vy.clone())?)?;
    p.energy.iter_mut().zip(&py.energy).for_each(|(a, b)| *a += b);
    let fit = fit_loglog_slope(&p, 1.0, k_hi)?;
    println!("fitted slope {:.3} over {} bins", fit.slope, fit.points);

    let later = gen.generate(1, 5e-4)?;
    let change: f64 = v.vx.iter().zip(&later.vx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("largest change after one phase step: {change:.2e}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
