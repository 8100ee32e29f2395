//! Encodes one synthetic 256×256 image with the default architecture and
//! shows that the nonce changes only the patch order.

use std::time::Instant;

use neuracrypt::encoder::{ArchConfig, Encoder, EncoderKey};
use neuracrypt::io::{synth_generate, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arch = ArchConfig::default();
    let key = EncoderKey::new(2024, arch)?;
    println!("{} parameters, key file {} bytes", arch.parameter_count(), key.to_bytes()?.len());
    let t = Instant::now();
    let encoder = Encoder::new(key)?;
    println!("weights drawn in {:.0} ms", t.elapsed().as_secs_f64() * 1e3);

    let image = synth_generate(&SyntheticConfig::new(256, 256, 1, 5))?.images.remove(0);
    let t = Instant::now();
    let a = encoder.encode(&image, encoder.nonce_for(0))?;
    println!("encoded to {} patches x {} dims in {:.0} ms", a.len(), a.dim(), t.elapsed().as_secs_f64() * 1e3);
    let b = encoder.encode(&image, encoder.nonce_for(1))?;
    println!("second nonce: same multiset {}, same order {}", a.multiset_eq(&b), a.bit_eq(&b));

    let path = std::env::temp_dir().join("neuracrypt-example.nct");
    std::fs::write(&path, a.to_tensor().to_nct_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}
