//! Composing a second family after the first merges anonymity classes.
//! Encoders here are listed by preimage: entry i is T⁻¹(x_i).

use neuracrypt::discrete::{Caps, DatasetPrior, DiscreteInstance, EncoderFamily, Permutation};
use neuracrypt::privacy::{compose_families, mutual_information, partition_by_lc};

fn by_preimage(rows: &[&[usize]]) -> Result<EncoderFamily, Box<dyn std::error::Error>> {
    let members = rows
        .iter()
        .map(|r| Permutation::from_one_based(r).map(|p| p.invert()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EncoderFamily::uniform(members)?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = DiscreteInstance::with_label_config("++---")?;
    let f = by_preimage(&[&[1, 2, 3, 4, 5], &[2, 1, 3, 5, 4], &[1, 2, 5, 4, 3], &[1, 3, 2, 4, 5], &[1, 5, 2, 3, 4]])?;
    let f_prime = by_preimage(&[&[1, 2, 3, 4, 5], &[3, 2, 1, 4, 5]])?;
    let composed = compose_families(&f_prime, &f)?;
    let prior = DatasetPrior::uniform_subsets(5, 2)?;
    let caps = Caps::default();
    for (name, fam) in [("F", &f), ("F'∘F", &composed)] {
        let part = partition_by_lc(&inst, fam)?;
        println!("{name}: {} encoders, MI {:.4} bits", fam.len(), mutual_information(&inst, fam, &prior, &caps)?);
        for c in &part.classes {
            let rows: Vec<String> = c
                .members
                .iter()
                .map(|&m| format!("{:?}", fam.members()[m].invert().to_one_based()))
                .collect();
            println!("  {} x{}: {}", inst.render_labels(c.label_config.entries()), c.members.len(), rows.join(" "));
        }
    }
    Ok(())
}
