use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use super::posterior::{label_only_posterior, Conditioning, PosteriorTable};
use super::{check_degree, label_configuration, Result};
use crate::discrete::{
    canonical, Caps, DatasetPrior, DiscreteError, DiscreteInstance, EncoderFamily, Observation,
    Prob,
};

/// Per-observation slice of a [`PrivacyReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationReport {
    pub observation: Observation,
    /// Pr[Z, C].
    pub probability: Prob,
    pub posterior: PosteriorTable,
    pub label_only: PosteriorTable,
    pub tv_distance: Prob,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyReport {
    pub mutual_information_bits: f64,
    pub max_guess_probability: f64,
    pub guess_probability_exact: Prob,
    pub perfectly_private: bool,
    pub per_observation: Vec<ObservationReport>,
}

struct ObservationMass {
    total: Prob,
    /// (display tuple, mass) per distinct dataset, first-seen order.
    datasets: Vec<(Vec<usize>, Prob)>,
    index: HashMap<Vec<usize>, usize>,
    encoded: Vec<usize>,
}

/// Every realizable observation with its joint mass over datasets, in
/// ascending observation order.
fn enumerate(
    instance: &DiscreteInstance,
    family: &EncoderFamily,
    prior: &DatasetPrior,
    caps: &Caps,
) -> Result<BTreeMap<Observation, ObservationMass>> {
    check_degree(instance, family)?;
    if let Some(m) = prior.max_index() {
        if m >= instance.len() {
            return Err(super::AnalysisError::InstanceMismatch(instance.len(), m + 1));
        }
    }
    let pairs = BigUint::from(prior.support().len()) * BigUint::from(family.len());
    if pairs > BigUint::from(caps.max_pairs) {
        return Err(DiscreteError::TooLarge {
            what: "(dataset, encoder) pairs",
            needed: pairs.to_string(),
            cap: caps.max_pairs.to_string(),
        }
        .into());
    }
    let lcs: Vec<Vec<usize>> = family
        .members()
        .iter()
        .map(|t| label_configuration(instance, t).0)
        .collect();
    let inverses: Vec<_> = family.members().iter().map(|t| t.invert()).collect();
    let mut out: BTreeMap<Observation, ObservationMass> = BTreeMap::new();
    for (tuple, p) in prior.support().iter().filter(|(_, p)| !p.is_zero()) {
        let key = canonical(tuple);
        for (m, (t, w)) in family.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            let obs = Observation::new(t.apply(tuple)?, lcs[m].clone());
            let mass = p * w;
            let entry = out.entry(obs).or_insert_with_key(|o| ObservationMass {
                total: Prob::zero(),
                datasets: Vec::new(),
                index: HashMap::new(),
                encoded: o.encoded.clone(),
            });
            entry.total += &mass;
            match entry.index.get(&key) {
                Some(&i) => entry.datasets[i].1 += mass,
                None => {
                    // display order: entry i is T⁻¹(z_i)
                    let display = entry.encoded.iter().map(|&z| inverses[m].at(z)).collect();
                    entry.index.insert(key.clone(), entry.datasets.len());
                    entry.datasets.push((display, mass));
                }
            }
        }
    }
    Ok(out)
}

fn to_f64(p: &Prob) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

/// I(X_A; (Z, C)) in bits and Σ_o max_X̄ Pr[X̄, o], from one enumeration.
fn metrics(
    prior: &DatasetPrior,
    observations: &BTreeMap<Observation, ObservationMass>,
) -> (f64, Prob) {
    let prior_of: HashMap<Vec<usize>, &Prob> = prior
        .support()
        .iter()
        .map(|(t, p)| (canonical(t), p))
        .collect();
    let mut mi = 0.0;
    let mut guess = Prob::zero();
    for (_, om) in observations.iter() {
        let mut best = Prob::zero();
        for (tuple, joint) in &om.datasets {
            if joint.is_zero() {
                continue;
            }
            let ps = prior_of[&canonical(tuple)];
            let ratio = joint / (ps * &om.total);
            mi += to_f64(joint) * to_f64(&ratio).log2();
            if *joint > best {
                best = joint.clone();
            }
        }
        guess += best;
    }
    (mi.max(0.0), guess)
}

/// Mutual information between the private dataset and Eve's observation, in bits.
pub fn mutual_information(
    instance: &DiscreteInstance,
    family: &EncoderFamily,
    prior: &DatasetPrior,
    caps: &Caps,
) -> Result<f64> {
    let obs = enumerate(instance, family, prior, caps)?;
    Ok(metrics(prior, &obs).0)
}

/// Eve's one-shot success probability under MAP guessing.
pub fn guessing_probability(
    instance: &DiscreteInstance,
    family: &EncoderFamily,
    prior: &DatasetPrior,
    caps: &Caps,
) -> Result<Prob> {
    let obs = enumerate(instance, family, prior, caps)?;
    Ok(metrics(prior, &obs).1)
}

/// Compares, for every realizable observation, the posterior given (Z, C)
/// with the posterior given the labels alone.
pub fn is_perfectly_private(
    instance: &DiscreteInstance,
    family: &EncoderFamily,
    prior: &DatasetPrior,
    caps: &Caps,
) -> Result<PrivacyReport> {
    let observations = enumerate(instance, family, prior, caps)?;
    let (mi, guess) = metrics(prior, &observations);
    let mut per_observation = Vec::with_capacity(observations.len());
    for (obs, om) in observations {
        let labels = obs.labels();
        let posterior = PosteriorTable::from_masses(
            om.datasets,
            Conditioning::Observation(obs.clone()),
        )?;
        let label_only = label_only_posterior(instance, prior, &labels)?;
        let tv_distance = posterior.tv_distance(&label_only);
        per_observation.push(ObservationReport {
            observation: obs,
            probability: om.total,
            posterior,
            label_only,
            tv_distance,
        });
    }
    let perfectly_private = per_observation.iter().all(|o| o.tv_distance.is_zero());
    Ok(PrivacyReport {
        mutual_information_bits: mi,
        max_guess_probability: to_f64(&guess),
        guess_probability_exact: guess,
        perfectly_private,
        per_observation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::Permutation;
    use crate::privacy::dataset_posterior;
    use num_traits::One;

    #[test]
    fn identity_family_reveals_everything() {
        let inst = DiscreteInstance::with_label_config("++---").unwrap();
        let fam = EncoderFamily::uniform(vec![Permutation::identity(5)]).unwrap();
        let prior = DatasetPrior::uniform_subsets(5, 2).unwrap();
        let caps = Caps::default();
        let report = is_perfectly_private(&inst, &fam, &prior, &caps).unwrap();
        assert!(!report.perfectly_private);
        assert!(report.guess_probability_exact.is_one());
        assert!((report.mutual_information_bits - 10f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn point_prior_has_zero_information() {
        let inst = DiscreteInstance::with_label_config("+-+-").unwrap();
        let fam = inst.enumerate_sym(&Caps::default()).unwrap();
        let prior = DatasetPrior::new(vec![(vec![0, 3], Prob::one())]).unwrap();
        let mi = mutual_information(&inst, &fam, &prior, &Caps::default()).unwrap();
        assert_eq!(mi, 0.0);
    }

    #[test]
    fn report_posteriors_match_direct_route() {
        let inst = DiscreteInstance::with_label_config("++---").unwrap();
        let fam = EncoderFamily::uniform_one_based(&[
            &[2, 1, 5, 4, 3],
            &[2, 1, 3, 5, 4],
            &[1, 2, 3, 5, 4],
            &[4, 3, 1, 2, 5],
            &[3, 4, 2, 1, 5],
            &[5, 2, 4, 3, 1],
        ])
        .unwrap();
        let prior = DatasetPrior::uniform_subsets(5, 3).unwrap();
        let report = is_perfectly_private(&inst, &fam, &prior, &Caps::default()).unwrap();
        let total: Prob = report.per_observation.iter().map(|o| o.probability.clone()).sum();
        assert!(total.is_one());
        for o in &report.per_observation {
            let direct = dataset_posterior(&inst, &fam, &prior, &o.observation).unwrap();
            assert_eq!(direct.tv_distance(&o.posterior), Prob::zero());
            assert!(o.posterior.is_normalized());
        }
    }

    #[test]
    fn pair_cap_is_enforced() {
        let inst = DiscreteInstance::with_label_config("++---").unwrap();
        let fam = inst.enumerate_sym(&Caps::default()).unwrap();
        let prior = DatasetPrior::uniform_subsets(5, 2).unwrap();
        let caps = Caps {
            max_pairs: 100,
            ..Caps::default()
        };
        assert!(matches!(
            is_perfectly_private(&inst, &fam, &prior, &caps),
            Err(crate::privacy::AnalysisError::Discrete(DiscreteError::TooLarge { .. }))
        ));
    }
}
