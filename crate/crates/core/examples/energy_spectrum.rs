// Compares how blur and additive noise change the radial energy spectrum.

use ade::analysis::radial_energy_spectrum;
use ade::corruption::{add_training_noise, forward_chain, ChainParams};
use ade::noise::{NormalStream, UniformStream};
use ade::FieldStack;

pub fn run_example() -> ade::Result<()> {
    let n = 32;
    let mut rng = UniformStream::new(5, 0);
    let image = FieldStack::from_vec(1, n, n, (0..n * n).map(|_| rng.next_unit()).collect())?;
    let params = ChainParams { sigma_max: 4.0, steps: 4, turbulence: false, ..ChainParams::default() };
    let chain = forward_chain(&image, &params.forward_config(n, n, 0)?)?;
    let mut normal = NormalStream::new(5, 1);

    println!("  k  blur-top-quartile  noise-top-quartile");
    for k in 0..=chain.steps {
        let blurred = radial_energy_spectrum(&chain.snapshot(k).interior()?.channel(0))?;
        let noisy = add_training_noise(&image, 0.1 * k as f64, &mut normal)?;
        let noisy = radial_energy_spectrum(&noisy.interior()?.channel(0))?;
        println!("{k:>3}  {:>17.4e}  {:>18.4e}", blurred.top_quartile_energy(), noisy.top_quartile_energy());
    }
    println!("{}", radial_energy_spectrum(&chain.prior().channel(0))?.to_table());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
