// Diffuses a single hot pixel on a closed 32x32 box and prints the mass.

use ade::lattice::{init_from_image, macro_update, solver_step, LatticeState, ZeroVelocity};
use ade::ScalarField;

pub fn run_example() -> ade::Result<()> {
    let n = 32;
    let mut img = ScalarField::filled(n, n, 0.1);
    img.set(n / 2, n / 2, 1.0);
    let mut state: LatticeState<f64> = init_from_image(&img)?;
    let m0 = state.total_mass();
    let still = ZeroVelocity { nx: n, ny: n };
    for step in 0..200 {
        solver_step(&mut state, &still, 1.0, step)?;
    }
    let u = macro_update(&state);
    let drift = (state.total_mass() - m0).abs() / m0;
    println!("peak after 200 steps: {:.5}", u.get(n / 2, n / 2));
    println!("relative mass drift: {drift:.2e}");
    assert!(drift < 1e-12);
    assert!(u.get(n / 2, n / 2) < 1.0);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
