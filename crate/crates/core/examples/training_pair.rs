// Draws a training pair and checks that the exact difference has zero loss.

use ade::corruption::{forward_chain, make_training_pair, ChainParams, NoiseParams};
use ade::noise::{NormalStream, UniformStream};
use ade::FieldStack;

pub fn run_example() -> ade::Result<()> {
    let n = 16;
    let mut rng = UniformStream::new(3, 0);
    let image = FieldStack::from_vec(1, n, n, (0..n * n).map(|_| rng.next_unit()).collect())?;
    let params = ChainParams { sigma_max: 4.0, steps: 4, turbulence: false, ..ChainParams::default() };
    let chain = forward_chain(&image, &params.forward_config(n, n, 0)?)?;

    let mut noise = NormalStream::new(3, 1);
    let pair = make_training_pair(&chain, 2, &NoiseParams::default(), &mut noise)?;
    let zero = FieldStack::zeros(1, n, n);
    println!("loss of a zero prediction: {:.4e}", pair.loss(&zero)?);
    println!("loss of the target itself: {:.1e}", pair.loss(&pair.target)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
