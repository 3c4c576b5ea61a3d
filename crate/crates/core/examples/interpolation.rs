// Interpolates between two blurred priors with SLERP-mixed sampling noise.

use ade::corruption::{forward_chain, ChainParams, NoiseParams};
use ade::reverse::{interpolation_run, lambda_grid, slerp, ZeroPredictor};
use ade::{FieldStack, ScalarField};

fn blob(n: usize, cx: f64, cy: f64) -> ade::Result<FieldStack> {
    let f = ScalarField::from_fn(n, n, |x, y| {
        let r2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        (-r2 / 8.0).exp()
    });
    FieldStack::from_channels(&[f])
}

pub fn run_example() -> ade::Result<()> {
    let n = 16;
    let params = ChainParams { sigma_max: 3.0, steps: 3, turbulence: false, ..ChainParams::default() };
    let a = forward_chain(&blob(n, 4.0, 4.0)?, &params.forward_config(n, n, 0)?)?;
    let b = forward_chain(&blob(n, 11.0, 11.0)?, &params.forward_config(n, n, 0)?)?;

    let lambdas = lambda_grid(5);
    let images = interpolation_run(&a, &b, &ZeroPredictor, &lambdas, &NoiseParams::default(), 1, 2)?;
    for (l, img) in lambdas.iter().zip(&images) {
        println!("lambda {l:.2}: u(4,4) = {:.4}, u(11,11) = {:.4}", img.data[4 * n + 4], img.data[11 * n + 11]);
    }

    let mid = slerp(&[1.0, 0.0], &[0.0, 1.0], 0.5)?;
    println!("slerp of unit axes at 0.5: [{:.4}, {:.4}]", mid[0], mid[1]);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
