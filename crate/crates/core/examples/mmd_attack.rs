//! Distribution-matching attack: a generator trained by MMD to map the
//! attacker's raw patches onto the published distribution.

use neuracrypt::attack::{AttackerKind, AttackerModel, MmdConfig, TrainConfig};
use neuracrypt::encoder::{ArchConfig, Encoder, EncoderKey, LinearEncoder};
use neuracrypt::io::{synth_generate, Scenario, SyntheticConfig, Target};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synth_generate(&SyntheticConfig::new(16, 16, 300, 1))?;
    let labels: Vec<bool> = data.labels.iter().map(|&l| l == 1).collect();
    let arch = ArchConfig {
        height: 16,
        width: 16,
        channels: 1,
        patch: 4,
        depth: 7,
        hidden: 8,
    };
    let targets = [
        ("linear", Target::Linear(LinearEncoder::new(7, 1, 4, 8)?), AttackerKind::Linear),
        ("depth-7", Target::NeuraCrypt(Encoder::new(EncoderKey::new(7, arch)?)?), AttackerKind::TwoLayer),
    ];
    for (name, target, kind) in targets {
        let s = Scenario::new(&data.images, &labels, &target)?;
        let mut attacker = AttackerModel::random(kind, 16, 32, 8, 3);
        let r = s.mmd(&mut attacker, &TrainConfig::default(), &MmdConfig::default())?;
        println!("{name}: {}", r.summary());
    }
    Ok(())
}
