use std::collections::HashMap;

use num_traits::{One, Zero};

use super::{check_degree, label_configuration, AnalysisError, LcVector, Result};
use crate::discrete::{
    canonical, DatasetPrior, DiscreteError, DiscreteInstance, EncoderFamily, Observation, Prob,
};

/// What a posterior was conditioned on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conditioning {
    /// Eve's full view: encoded samples and label configuration.
    Observation(Observation),
    /// The label multiset Y_A only, as label indices.
    Labels(Vec<usize>),
}

/// An exact distribution over candidate datasets.
///
/// Entries are keyed by the set of samples they hold; the stored tuple is
/// just one ordering of that set, kept for display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosteriorTable {
    entries: Vec<(Vec<usize>, Prob)>,
    conditioning: Conditioning,
}

impl PosteriorTable {
    pub(crate) fn from_masses(
        masses: Vec<(Vec<usize>, Prob)>,
        conditioning: Conditioning,
    ) -> Result<Self> {
        let total: Prob = masses.iter().map(|(_, p)| p).sum();
        if total.is_zero() {
            return Err(AnalysisError::ZeroEvidence);
        }
        let entries = masses
            .into_iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|(t, p)| (t, p / &total))
            .collect();
        Ok(PosteriorTable {
            entries,
            conditioning,
        })
    }

    pub fn entries(&self) -> &[(Vec<usize>, Prob)] {
        &self.entries
    }

    pub fn conditioning(&self) -> &Conditioning {
        &self.conditioning
    }

    pub fn total(&self) -> Prob {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// Mass on the dataset holding exactly the samples of `tuple`.
    pub fn probability_of(&self, tuple: &[usize]) -> Prob {
        let key = canonical(tuple);
        self.entries
            .iter()
            .filter(|(t, _)| canonical(t) == key)
            .map(|(_, p)| p.clone())
            .sum()
    }

    pub fn max_probability(&self) -> Prob {
        self.entries
            .iter()
            .map(|(_, p)| p.clone())
            .max()
            .unwrap_or_else(Prob::zero)
    }

    /// Total-variation distance, comparing entries as sets.
    pub fn tv_distance(&self, other: &PosteriorTable) -> Prob {
        let mut diff: HashMap<Vec<usize>, Prob> = HashMap::new();
        for (t, p) in &self.entries {
            *diff.entry(canonical(t)).or_insert_with(Prob::zero) += p;
        }
        for (t, p) in &other.entries {
            *diff.entry(canonical(t)).or_insert_with(Prob::zero) -= p;
        }
        let sum: Prob = diff.values().map(|d| if d < &Prob::zero() { -d } else { d.clone() }).sum();
        sum / Prob::from_integer(2.into())
    }
}

/// One (candidate dataset, encoder) pair of the joint posterior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointEntry {
    pub dataset: Vec<usize>,
    pub member: usize,
    pub probability: Prob,
}

fn check_observation(instance: &DiscreteInstance, obs: &Observation) -> Result<()> {
    let n = instance.len();
    if obs.label_config.len() != n {
        return Err(DiscreteError::LengthMismatch {
            expected: n,
            found: obs.label_config.len(),
        }
        .into());
    }
    if let Some(&z) = obs.encoded.iter().find(|&&z| z >= n) {
        return Err(DiscreteError::UnknownSample(crate::discrete::Ident::Int(z as i64)).into());
    }
    Ok(())
}

/// Members of the observed anonymity list with the candidate each one implies:
/// entry i of the candidate is T⁻¹(z_i), z ascending.
fn candidates<'a>(
    instance: &'a DiscreteInstance,
    family: &'a EncoderFamily,
    obs: &'a Observation,
) -> Result<impl Iterator<Item = (usize, Vec<usize>)> + 'a> {
    check_degree(instance, family)?;
    check_observation(instance, obs)?;
    let target = LcVector(obs.label_config.clone());
    if !family
        .members()
        .iter()
        .any(|t| label_configuration(instance, t) == target)
    {
        return Err(AnalysisError::InconsistentObservation);
    }
    Ok(family
        .members()
        .iter()
        .enumerate()
        .filter(move |(_, t)| label_configuration(instance, t) == target)
        .map(move |(i, t)| {
            let inv = t.invert();
            (i, obs.encoded.iter().map(|&z| inv.at(z)).collect())
        }))
}

/// Pos(X_A): every dataset some member of the observed anonymity list maps onto Z.
/// Candidates naming the same set of samples are listed once.
pub fn possible_datasets(
    instance: &DiscreteInstance,
    family: &EncoderFamily,
    obs: &Observation,
) -> Result<Vec<Vec<usize>>> {
    let mut seen = std::collections::HashSet::new();
    Ok(candidates(instance, family, obs)?
        .filter_map(|(_, tuple)| seen.insert(canonical(&tuple)).then_some(tuple))
        .collect())
}

/// Pr[X_A = X̄, T_A = T | Z, C] ∝ 1(T(X̄)=Z)·1(LC(T)=C)·Pr[X̄]·Pr[T].
pub fn joint_posterior(
    instance: &DiscreteInstance,
    family: &EncoderFamily,
    prior: &DatasetPrior,
    obs: &Observation,
) -> Result<Vec<JointEntry>> {
    let raw: Vec<JointEntry> = candidates(instance, family, obs)?
        .map(|(member, dataset)| {
            let probability = prior.probability_of(&dataset) * &family.weights()[member];
            JointEntry {
                dataset,
                member,
                probability,
            }
        })
        .filter(|e| !e.probability.is_zero())
        .collect();
    let total: Prob = raw.iter().map(|e| &e.probability).sum();
    if total.is_zero() {
        return Err(AnalysisError::ZeroEvidence);
    }
    Ok(raw
        .into_iter()
        .map(|mut e| {
            e.probability /= &total;
            e
        })
        .collect())
}

/// Pr[X_A = X̄ | Z, C]: the joint posterior summed over encoders.
pub fn dataset_posterior(
    instance: &DiscreteInstance,
    family: &EncoderFamily,
    prior: &DatasetPrior,
    obs: &Observation,
) -> Result<PosteriorTable> {
    let joint = joint_posterior(instance, family, prior, obs)?;
    let mut masses: Vec<(Vec<usize>, Prob)> = Vec::new();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    for e in joint {
        let key = canonical(&e.dataset);
        match index.get(&key) {
            Some(&i) => masses[i].1 += e.probability,
            None => {
                index.insert(key, masses.len());
                masses.push((e.dataset, e.probability));
            }
        }
    }
    PosteriorTable::from_masses(masses, Conditioning::Observation(obs.clone()))
}

fn label_counts(labels: impl Iterator<Item = usize>, alphabet: usize) -> Vec<usize> {
    let mut counts = vec![0; alphabet];
    for y in labels {
        counts[y] += 1;
    }
    counts
}

/// Pr[X_A = X̄ | Y_A] ∝ 1(Y_A = {L(x)}_{x∈X̄})·Pr[X̄].
pub fn label_only_posterior(
    instance: &DiscreteInstance,
    prior: &DatasetPrior,
    labels: &[usize],
) -> Result<PosteriorTable> {
    if labels.is_empty() {
        return Err(DiscreteError::InvalidPrior("empty label multiset".into()).into());
    }
    let k = instance.alphabet().len();
    if let Some(&y) = labels.iter().find(|&&y| y >= k) {
        return Err(DiscreteError::UnknownLabel(crate::discrete::Ident::Int(y as i64)).into());
    }
    let want = label_counts(labels.iter().copied(), k);
    let masses = prior
        .support()
        .iter()
        .filter(|(t, _)| {
            t.iter().all(|&x| x < instance.len())
                && label_counts(t.iter().map(|&x| instance.label_of(x)), k) == want
        })
        .map(|(t, p)| (t.clone(), p.clone()))
        .collect();
    PosteriorTable::from_masses(masses, Conditioning::Labels(labels.to_vec()))
}

/// Pr[x ∈ X_A] under a posterior.
pub fn membership_probability(posterior: &PosteriorTable, x: usize) -> Prob {
    posterior
        .entries()
        .iter()
        .filter(|(t, _)| t.contains(&x))
        .map(|(_, p)| p.clone())
        .sum()
}

impl PosteriorTable {
    pub fn is_normalized(&self) -> bool {
        self.total().is_one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::Permutation;
    use num_bigint::BigInt;

    fn r(n: i64, d: i64) -> Prob {
        Prob::new(BigInt::from(n), BigInt::from(d))
    }

    fn ex2() -> (DiscreteInstance, EncoderFamily) {
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
        (inst, fam)
    }

    fn obs_for(inst: &DiscreteInstance, t: &Permutation, xa: &[usize]) -> Observation {
        Observation::new(
            t.apply(xa).unwrap(),
            label_configuration(inst, t).0,
        )
    }

    fn one_based(v: &[Vec<usize>]) -> Vec<Vec<usize>> {
        v.iter().map(|t| t.iter().map(|x| x + 1).collect()).collect()
    }

    #[test]
    fn pos_for_t1() {
        let (inst, fam) = ex2();
        let obs = obs_for(&inst, &fam.members()[0], &[1, 2, 3]);
        assert_eq!(obs.encoded, vec![0, 3, 4]);
        let pos = possible_datasets(&inst, &fam, &obs).unwrap();
        assert_eq!(
            one_based(&pos),
            vec![vec![2, 4, 3], vec![2, 5, 4], vec![1, 5, 4]]
        );
    }

    #[test]
    fn identity_family_reveals_dataset() {
        let inst = DiscreteInstance::with_label_config("++---").unwrap();
        let fam = EncoderFamily::uniform(vec![Permutation::identity(5)]).unwrap();
        let obs = Observation::new(vec![4, 1], inst.labels().to_vec());
        assert_eq!(possible_datasets(&inst, &fam, &obs).unwrap(), vec![vec![1, 4]]);
        let prior = DatasetPrior::new(vec![(vec![1, 4], Prob::one())]).unwrap();
        let joint = joint_posterior(&inst, &fam, &prior, &obs).unwrap();
        assert_eq!(joint.len(), 1);
        assert!(joint[0].probability.is_one());
    }

    #[test]
    fn inconsistent_and_zero_evidence() {
        let (inst, fam) = ex2();
        let prior = DatasetPrior::uniform_subsets(5, 3).unwrap();
        // (+,-,+,-,-) is not the label configuration of any member.
        let bad = Observation::new(vec![0, 1, 2], vec![0, 1, 0, 1, 1]);
        assert_eq!(
            possible_datasets(&inst, &fam, &bad),
            Err(AnalysisError::InconsistentObservation)
        );
        assert_eq!(
            joint_posterior(&inst, &fam, &prior, &bad),
            Err(AnalysisError::InconsistentObservation)
        );
        let point = DatasetPrior::new(vec![(vec![0, 1, 2], Prob::one())]).unwrap();
        let obs = obs_for(&inst, &fam.members()[0], &[1, 2, 3]);
        assert_eq!(
            dataset_posterior(&inst, &fam, &point, &obs),
            Err(AnalysisError::ZeroEvidence)
        );
    }

    #[test]
    fn six_encoder_membership() {
        let (inst, fam) = ex2();
        let obs = obs_for(&inst, &fam.members()[0], &[1, 2, 3]);
        let uniform = DatasetPrior::uniform_subsets(5, 3).unwrap();
        let post = dataset_posterior(&inst, &fam, &uniform, &obs).unwrap();
        assert!(post.is_normalized());
        assert_eq!(membership_probability(&post, 0), r(1, 3));
        assert_eq!(membership_probability(&post, 1), r(2, 3));
        assert_eq!(membership_probability(&post, 3), r(1, 1));
        assert_eq!(membership_probability(&post, 2), r(1, 3));

        let skewed = DatasetPrior::new(vec![
            (vec![1, 2, 3], r(1, 10)),
            (vec![1, 3, 4], r(1, 10)),
            (vec![0, 3, 4], r(4, 10)),
            (vec![0, 1, 2], r(4, 10)),
        ])
        .unwrap();
        let post = dataset_posterior(&inst, &fam, &skewed, &obs).unwrap();
        assert_eq!(membership_probability(&post, 0), r(2, 3));
        assert_eq!(membership_probability(&post, 1), r(1, 3));
    }

    #[test]
    fn label_only_posterior_filters_by_multiset() {
        let inst = DiscreteInstance::with_label_config("++---").unwrap();
        let prior = DatasetPrior::uniform_subsets(5, 3).unwrap();
        // one '+' and two '-': 2 * C(3,2) = 6 datasets
        let post = label_only_posterior(&inst, &prior, &[1, 0, 1]).unwrap();
        assert_eq!(post.entries().len(), 6);
        assert!(post.entries().iter().all(|(_, p)| *p == r(1, 6)));
        let point = DatasetPrior::new(vec![(vec![0, 2, 3], Prob::one())]).unwrap();
        let post = label_only_posterior(&inst, &point, &[0, 1, 1]).unwrap();
        assert_eq!(post.entries().len(), 1);
        // three '+' labels: only two '+' samples exist
        assert_eq!(
            label_only_posterior(&inst, &prior, &[0, 0, 0]),
            Err(AnalysisError::ZeroEvidence)
        );
    }

    #[test]
    fn membership_of_absent_sample_is_zero() {
        let (inst, fam) = ex2();
        let obs = obs_for(&inst, &fam.members()[5], &[1, 2, 3]);
        let prior = DatasetPrior::uniform_subsets(5, 3).unwrap();
        let post = dataset_posterior(&inst, &fam, &prior, &obs).unwrap();
        assert_eq!(post.entries().len(), 1);
        assert_eq!(membership_probability(&post, 0), Prob::zero());
    }
}
