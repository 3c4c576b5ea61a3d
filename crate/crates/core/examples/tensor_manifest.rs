// Writes a chain tensor with its run manifest and reads both back.

use ade::corruption::{forward_chain, ChainMeta, ChainParams, CorruptionChain};
use ade::io::manifest::RunManifest;
use ade::io::tensor::{read_tensor, write_tensor};
use ade::io::{read_bytes, sha256_hex};
use ade::FieldStack;

pub fn run_example() -> ade::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| ade::AdeError::io(std::env::temp_dir(), e))?;
    let n = 12;
    let image = FieldStack::from_vec(1, n, n, (0..n * n).map(|i| (i % 7) as f64 / 7.0).collect())?;
    let params = ChainParams { sigma_max: 2.0, steps: 3, ..ChainParams::default() };
    let chain = forward_chain(&image, &params.forward_config(n, n, params.seed)?)?;

    let path = dir.path().join("chain.adet");
    write_tensor(&path, &chain.to_tensor())?;
    let mut manifest = RunManifest::for_chain_params(&params);
    manifest.record_schedule(&chain.meta.fo, n);
    manifest.set("output_sha256", sha256_hex(&read_bytes(&path)?));
    manifest.write(&dir.path().join("chain.adet.manifest"))?;

    let meta: ChainMeta = chain.meta.clone();
    let back = CorruptionChain::from_tensor(&read_tensor(&path)?, meta)?;
    println!("round trip identical: {}", back == chain);
    print!("{}", RunManifest::read(&dir.path().join("chain.adet.manifest"))?.to_text());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
