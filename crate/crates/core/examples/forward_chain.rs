// Runs an advection-diffusion chain on a striped image and audits its mass.

use ade::analysis::mass_audit;
use ade::corruption::{forward_chain, ChainParams};
use ade::{FieldStack, ScalarField};

pub fn run_example() -> ade::Result<()> {
    let n = 32;
    let stripes = ScalarField::from_fn(n, n, |x, _| if (x / 4) % 2 == 0 { 0.9 } else { 0.1 });
    let image = FieldStack::from_channels(&[stripes])?;
    let params = ChainParams {
        sigma_max: 6.0,
        steps: 5,
        pe: 0.1,
        ..ChainParams::default()
    };
    let chain = forward_chain(&image, &params.forward_config(n, n, 11)?)?;
    for k in 0..=chain.steps {
        // the one-node wall ring is left out
        let s = chain.snapshot(k).channel(0);
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for y in 1..n - 1 {
            for x in 1..n - 1 {
                lo = lo.min(s.get(x, y));
                hi = hi.max(s.get(x, y));
            }
        }
        println!("u_{k}: interior range [{lo:.4}, {hi:.4}]");
    }
    let audit = mass_audit(&chain);
    println!("{}", audit.report());
    assert!(audit.max_drift().unwrap() < 1e-10);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
