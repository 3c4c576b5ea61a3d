// Serves reverse-step predictions from a second thread through files.

use std::thread;
use std::time::Duration;

use ade::io::tensor::{read_tensor, write_tensor, Tensor};
use ade::reverse::{sample, ExternalPredictor, GaussianNoise};
use ade::FieldStack;

pub fn run_example() -> ade::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| ade::AdeError::io(std::env::temp_dir(), e))?;
    let exchange = dir.path().to_path_buf();
    let steps = 3;

    let peer = {
        let exchange = exchange.clone();
        thread::spawn(move || -> ade::Result<()> {
            for k in (1..=steps).rev() {
                let req = ExternalPredictor::request_path(&exchange, k);
                while !req.exists() {
                    thread::sleep(Duration::from_millis(2));
                }
                thread::sleep(Duration::from_millis(2));
                let state = read_tensor(&req)?;
                // halve every value
                let delta: Vec<f64> = state.to_f64_vec().iter().map(|v| -0.5 * v).collect();
                let tmp = exchange.join("response.partial");
                write_tensor(&tmp, &Tensor::from_f64(state.dims().to_vec(), delta)?)?;
                let resp = ExternalPredictor::response_path(&exchange, k);
                std::fs::rename(&tmp, &resp).map_err(|e| ade::AdeError::io(&resp, e))?;
            }
            Ok(())
        })
    };

    let predictor = ExternalPredictor::new(&exchange)?.with_timeout(Duration::from_secs(10));
    let prior = FieldStack::from_vec(1, 2, 2, vec![8.0, 4.0, 2.0, 1.0])?;
    let out = sample(&prior, &predictor, steps, 0.0, &mut GaussianNoise::new(0), false)?;
    peer.join().unwrap()?;
    println!("after {steps} halvings: {:?}", out.output.data);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
