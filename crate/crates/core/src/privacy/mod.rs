//! Exact privacy calculus over a [`DiscreteInstance`].
//!
//! Everything here enumerates: label configurations, LC-anonymity lists, the
//! candidate datasets consistent with an observation, posteriors under exact
//! rational arithmetic, and the derived privacy metrics.

mod posterior;
mod report;

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use thiserror::Error;

use crate::discrete::{DiscreteError, DiscreteInstance, EncoderFamily, Permutation, Prob};

pub use posterior::{
    dataset_posterior, joint_posterior, label_only_posterior, membership_probability,
    possible_datasets, Conditioning, JointEntry, PosteriorTable,
};
pub use report::{
    guessing_probability, is_perfectly_private, mutual_information, ObservationReport,
    PrivacyReport,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    Discrete(#[from] DiscreteError),
    #[error("encoder is not a member of the family")]
    NotInFamily,
    #[error("no family member has the observed label configuration")]
    InconsistentObservation,
    #[error("observation has zero probability under the priors")]
    ZeroEvidence,
    #[error("sample spaces differ: {0} vs {1}")]
    InstanceMismatch(usize, usize),
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;

/// LC(T): entry i is L(T⁻¹(x_i)), as label indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LcVector(pub Vec<usize>);

impl LcVector {
    pub fn entries(&self) -> &[usize] {
        &self.0
    }
}

pub fn label_configuration(instance: &DiscreteInstance, t: &Permutation) -> LcVector {
    let mut lc = vec![0; t.len()];
    for (x, &tx) in t.image().iter().enumerate() {
        lc[tx] = instance.label_of(x);
    }
    LcVector(lc)
}

/// One LC-anonymity list: family members (by index) sharing a label configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcClass {
    pub label_config: LcVector,
    pub members: Vec<usize>,
}

/// The family split into LC-anonymity lists, ordered lexicographically by LC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnonymityPartition {
    pub classes: Vec<LcClass>,
}

impl AnonymityPartition {
    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.members.len()).collect()
    }

    pub fn min_class_size(&self) -> usize {
        self.sizes().into_iter().min().unwrap_or(0)
    }
}

pub(crate) fn check_degree(instance: &DiscreteInstance, family: &EncoderFamily) -> Result<()> {
    if family.degree() != instance.len() {
        return Err(AnalysisError::InstanceMismatch(instance.len(), family.degree()));
    }
    Ok(())
}

pub fn partition_by_lc(
    instance: &DiscreteInstance,
    family: &EncoderFamily,
) -> Result<AnonymityPartition> {
    check_degree(instance, family)?;
    let mut classes: BTreeMap<LcVector, Vec<usize>> = BTreeMap::new();
    for (i, t) in family.members().iter().enumerate() {
        classes
            .entry(label_configuration(instance, t))
            .or_default()
            .push(i);
    }
    Ok(AnonymityPartition {
        classes: classes
            .into_iter()
            .map(|(label_config, members)| LcClass {
                label_config,
                members,
            })
            .collect(),
    })
}

/// F_T: indices of the members whose label configuration equals LC(T).
pub fn anonymity_list(
    instance: &DiscreteInstance,
    family: &EncoderFamily,
    t: &Permutation,
) -> Result<Vec<usize>> {
    check_degree(instance, family)?;
    family.position(t).ok_or(AnalysisError::NotInFamily)?;
    let target = label_configuration(instance, t);
    Ok(family
        .members()
        .iter()
        .enumerate()
        .filter(|(_, m)| label_configuration(instance, m) == target)
        .map(|(i, _)| i)
        .collect())
}

/// |F_T| when F = Sym(X): every arrangement of each label class, prod_y |X^y|!.
/// Counted, never enumerated.
pub fn sym_anonymity_list_size(instance: &DiscreteInstance) -> BigUint {
    instance.label_preserving_count()
}

/// F' ∘ F = {T' ∘ T}: T is applied first, then T'. Weights multiply; entries
/// that coincide as functions are merged by summing their weights.
pub fn compose_families(outer: &EncoderFamily, inner: &EncoderFamily) -> Result<EncoderFamily> {
    if outer.degree() != inner.degree() {
        return Err(AnalysisError::InstanceMismatch(outer.degree(), inner.degree()));
    }
    let mut members: Vec<Permutation> = Vec::new();
    let mut weights: Vec<Prob> = Vec::new();
    let mut index: HashMap<Permutation, usize> = HashMap::new();
    for (tp, wp) in outer.iter() {
        for (t, w) in inner.iter() {
            let composed = tp.compose(t);
            let mass = wp * w;
            match index.get(&composed) {
                Some(&i) => weights[i] += mass,
                None => {
                    index.insert(composed.clone(), members.len());
                    members.push(composed);
                    weights.push(mass);
                }
            }
        }
    }
    Ok(EncoderFamily::new(members, weights)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::Caps;

    fn lc_str(inst: &DiscreteInstance, t: &[usize]) -> String {
        let t = Permutation::from_one_based(t).unwrap();
        inst.render_labels(label_configuration(inst, &t).entries())
    }

    #[test]
    fn label_configuration_examples() {
        let ex2 = DiscreteInstance::with_label_config("++---").unwrap();
        assert_eq!(lc_str(&ex2, &[2, 1, 5, 4, 3]), "++---");
        assert_eq!(lc_str(&ex2, &[1, 2, 3, 4, 5]), "++---");
        assert_eq!(lc_str(&ex2, &[4, 3, 1, 2, 5]), "--++-");
        assert_eq!(lc_str(&ex2, &[5, 2, 4, 3, 1]), "-+--+");
        let ex1 = DiscreteInstance::with_label_config("++--++----------").unwrap();
        assert_eq!(
            lc_str(&ex1, &[12, 2, 11, 4, 6, 8, 16, 15, 13, 7, 9, 5, 3, 14, 1, 10]),
            "-+---+-+---+----"
        );
    }

    #[test]
    fn anonymity_list_of_six_encoders() {
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
        let t1 = fam.members()[0].clone();
        assert_eq!(anonymity_list(&inst, &fam, &t1).unwrap(), vec![0, 1, 2]);
        let t6 = fam.members()[5].clone();
        assert_eq!(anonymity_list(&inst, &fam, &t6).unwrap(), vec![5]);
        let outsider = Permutation::identity(5);
        assert_eq!(
            anonymity_list(&inst, &fam, &outsider),
            Err(AnalysisError::NotInFamily)
        );
    }

    #[test]
    fn f0_is_a_single_class() {
        let inst = DiscreteInstance::with_label_config("ab-ab-").unwrap();
        let f0 = inst.f0_family(&Caps::default()).unwrap();
        let part = partition_by_lc(&inst, &f0).unwrap();
        assert_eq!(part.classes.len(), 1);
        assert_eq!(part.classes[0].label_config.entries(), inst.labels());
    }

    #[test]
    fn compose_with_identity_and_sym_closure() {
        let inst = DiscreteInstance::with_label_config("+-+-").unwrap();
        let sym = inst.enumerate_sym(&Caps::default()).unwrap();
        let id = EncoderFamily::uniform(vec![Permutation::identity(4)]).unwrap();
        assert_eq!(compose_families(&id, &sym).unwrap(), sym);
        let sq = compose_families(&sym, &sym).unwrap();
        assert_eq!(sq.len(), 24);
        let w = Prob::new(1.into(), 24.into());
        assert!(sq.weights().iter().all(|x| *x == w));
        let other = EncoderFamily::uniform(vec![Permutation::identity(3)]).unwrap();
        assert_eq!(
            compose_families(&other, &sym),
            Err(AnalysisError::InstanceMismatch(3, 4))
        );
    }
}
