//! Known-plaintext attack: least squares on (raw, encoded) patch pairs.
//! Exact against a linear encoder, far off against the deep one.

use neuracrypt::attack::PlaintextMethod;
use neuracrypt::encoder::{ArchConfig, Encoder, EncoderKey, LinearEncoder};
use neuracrypt::io::{synth_generate, Scenario, SyntheticConfig, Target};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synth_generate(&SyntheticConfig::new(16, 16, 90, 2))?;
    let labels: Vec<bool> = data.labels.iter().map(|&l| l == 1).collect();
    let arch = ArchConfig {
        height: 16,
        width: 16,
        channels: 1,
        patch: 4,
        depth: 7,
        hidden: 8,
    };
    for (name, target) in [
        ("linear", Target::Linear(LinearEncoder::new(7, 1, 4, 8)?)),
        ("depth-7", Target::NeuraCrypt(Encoder::new(EncoderKey::new(7, arch)?)?)),
    ] {
        let out = Scenario::new(&data.images, &labels, &target)?.plaintext(PlaintextMethod::LeastSquares)?;
        println!("{name}: {}", out.report.summary());
    }
    Ok(())
}
