//! Downstream utility: logistic regression on mean-pooled encodings against
//! the same model on raw pixels.

use neuracrypt::encoder::{ArchConfig, Encoder, EncoderKey};
use neuracrypt::io::{synth_generate, utility_proxy, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synth_generate(&SyntheticConfig::new(32, 32, 300, 3))?;
    let labels: Vec<bool> = data.labels.iter().map(|&l| l == 1).collect();
    let arch = ArchConfig {
        height: 32,
        width: 32,
        channels: 1,
        patch: 8,
        depth: 7,
        hidden: 128,
    };
    let encoder = Encoder::new(EncoderKey::new(99, arch)?)?;
    let nonces: Vec<u64> = (0..data.images.len() as u64).map(|i| encoder.nonce_for(i)).collect();
    let encoded: Vec<Vec<f64>> = encoder
        .encode_batch(&data.images, &nonces)?
        .iter()
        .map(|p| p.mean_pool())
        .collect();
    let raw: Vec<Vec<f64>> = data.images.iter().map(|t| t.data().iter().map(|&v| v as f64).collect()).collect();
    for (name, features) in [("raw pixels", &raw), ("encoded", &encoded)] {
        let m = utility_proxy(features, &labels, 0)?;
        println!("{name}: test accuracy {:.3}, AUC {:.3} (lr {})", m.accuracy, m.auc.unwrap_or(f64::NAN), m.learning_rate);
    }
    Ok(())
}
