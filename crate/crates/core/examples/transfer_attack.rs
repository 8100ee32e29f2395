//! Transfer attack: a classifier fitted on the attacker's own T*(x) and then
//! applied to the published encodings.

use neuracrypt::attack::{AttackerKind, AttackerModel, MmdConfig, TrainConfig, TransferConfig};
use neuracrypt::encoder::{ArchConfig, Encoder, EncoderKey};
use neuracrypt::io::{synth_generate, Scenario, SyntheticConfig, Target};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synth_generate(&SyntheticConfig::subtle(16, 16, 300, 1))?;
    let labels: Vec<bool> = data.labels.iter().map(|&l| l == 1).collect();
    let arch = ArchConfig {
        height: 16,
        width: 16,
        channels: 1,
        patch: 4,
        depth: 7,
        hidden: 128,
    };
    let target = Target::NeuraCrypt(Encoder::new(EncoderKey::new(7, arch)?)?);
    let s = Scenario::new(&data.images, &labels, &target)?;
    let mut attacker = AttackerModel::random(AttackerKind::TwoLayer, 16, 32, 128, 3);
    println!("{}", s.mmd(&mut attacker, &TrainConfig::default(), &MmdConfig::default())?.summary());
    println!("{}", s.transfer(&attacker, &TransferConfig::default())?.summary());
    Ok(())
}
