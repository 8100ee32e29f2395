//! The label-preserving family against all of Sym(X): same labels leaked,
//! very different posteriors.

use neuracrypt::discrete::{Caps, DatasetPrior, DiscreteInstance};
use neuracrypt::privacy::{is_perfectly_private, partition_by_lc};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let caps = Caps::default();
    let inst = DiscreteInstance::with_label_config("++---o")?;
    let prior = DatasetPrior::uniform_subsets(inst.len(), 3)?;
    let f0 = inst.f0_family(&caps)?;
    let sym = inst.enumerate_sym(&caps)?;
    for (name, family) in [("F0", &f0), ("Sym", &sym)] {
        let report = is_perfectly_private(&inst, family, &prior, &caps)?;
        let worst = report
            .per_observation
            .iter()
            .map(|o| o.tv_distance.clone())
            .max()
            .unwrap_or_default();
        println!(
            "{name}: {} encoders, {} LC classes, MI {:.4} bits, guess {}, worst tv {worst}, perfectly private: {}",
            family.len(),
            partition_by_lc(&inst, family)?.classes.len(),
            report.mutual_information_bits,
            report.guess_probability_exact,
            report.perfectly_private
        );
    }
    Ok(())
}
