// Reverses a chain with the oracle predictor and recovers the clean image.

use ade::corruption::{forward_chain, ChainParams, NoiseParams};
use ade::noise::UniformStream;
use ade::reverse::{sample, GaussianNoise, OraclePredictor, ZeroPredictor};
use ade::FieldStack;

pub fn run_example() -> ade::Result<()> {
    let n = 24;
    let mut rng = UniformStream::new(9, 0);
    let image = FieldStack::from_vec(1, n, n, (0..n * n).map(|_| rng.next_unit()).collect())?;
    let params = ChainParams { sigma_max: 5.0, steps: 6, pe: 0.06, ..ChainParams::default() };
    let chain = forward_chain(&image, &params.forward_config(n, n, 1)?)?;

    let sigma_s = NoiseParams::default().sigma_s;
    let oracle = OraclePredictor::new(&chain);
    let out = sample(&chain.prior(), &oracle, chain.steps, sigma_s, &mut GaussianNoise::new(4), true)?;
    println!("oracle output matches u_0 bitwise: {}", out.output.bitwise_eq(&chain.snapshot(0)));
    println!("trajectory length: {}", out.trajectory.as_ref().map_or(0, |t| t.len()));

    let still = sample(&chain.prior(), &ZeroPredictor, chain.steps, 0.0, &mut GaussianNoise::new(4), false)?;
    println!("zero predictor keeps the prior: {}", still.output.bitwise_eq(&chain.prior()));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
