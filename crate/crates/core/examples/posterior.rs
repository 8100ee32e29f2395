//! Eve's view of a six-encoder family on five labeled samples: the possible
//! datasets and membership probabilities under two dataset priors.

use num_bigint::BigInt;

use neuracrypt::discrete::{DatasetPrior, DiscreteInstance, EncoderFamily, Observation, Prob};
use neuracrypt::privacy::{
    anonymity_list, dataset_posterior, label_configuration, membership_probability, possible_datasets,
};

fn tuple<T: std::fmt::Display>(d: &[T]) -> String {
    format!("({})", d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = DiscreteInstance::with_label_config("++---")?;
    let family = EncoderFamily::uniform_one_based(&[
        &[2, 1, 5, 4, 3],
        &[2, 1, 3, 5, 4],
        &[1, 2, 3, 5, 4],
        &[4, 3, 1, 2, 5],
        &[3, 4, 2, 1, 5],
        &[5, 2, 4, 3, 1],
    ])?;
    let x_a = [1, 2, 3]; // samples 2, 3, 4

    for (name, idx) in [("T1", 0), ("T4", 3), ("T6", 5)] {
        let t = &family.members()[idx];
        let lc = label_configuration(&inst, t);
        let obs = Observation::new(t.apply(&x_a)?, lc.0.clone());
        let list = anonymity_list(&inst, &family, t)?;
        let pos = possible_datasets(&inst, &family, &obs)?;
        println!(
            "T_A = {name}: LC {}, anonymity list {:?}, Pos {:?}",
            inst.render_labels(lc.entries()),
            list.iter().map(|i| format!("T{}", i + 1)).collect::<Vec<_>>(),
            pos.iter().map(|d| tuple(&inst.idents_of(d))).collect::<Vec<_>>()
        );
    }

    let t1 = &family.members()[0];
    let obs = Observation::new(t1.apply(&x_a)?, label_configuration(&inst, t1).0);
    let r = |n: i64, d: i64| Prob::new(BigInt::from(n), BigInt::from(d));
    let priors = [
        ("uniform", DatasetPrior::uniform_subsets(5, 3)?),
        (
            "skewed",
            DatasetPrior::new(vec![
                (vec![1, 2, 3], r(1, 10)),
                (vec![1, 3, 4], r(1, 10)),
                (vec![0, 3, 4], r(4, 10)),
                (vec![0, 1, 2], r(4, 10)),
            ])?,
        ),
    ];
    for (name, prior) in &priors {
        let post = dataset_posterior(&inst, &family, prior, &obs)?;
        let m: Vec<String> = (0..5)
            .map(|x| format!("Pr[{} in X_A] = {}", x + 1, membership_probability(&post, x)))
            .collect();
        println!("{name} prior: {}", m.join(", "));
    }
    Ok(())
}
