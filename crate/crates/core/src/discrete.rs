//! Finite sample spaces, labelings, permutation encoders and priors.
//!
//! Samples and labels are addressed internally by their index in the
//! instance's fixed order. Identifiers ([`Ident`]) only matter at the
//! boundaries (JSON, reports).

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact probability.
pub type Prob = BigRational;

/// Default maximum |X| for full symmetric-group enumeration.
pub const DEFAULT_SYM_CAP: usize = 8;
/// Default maximum member count for the label-preserving family.
pub const DEFAULT_F0_CAP: u128 = 1_000_000;
/// Default maximum number of (dataset, encoder) pairs an analysis may visit.
pub const DEFAULT_PAIR_CAP: u128 = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiscreteError {
    #[error("sample {0} appears more than once in the permutation image")]
    DuplicateImage(Ident),
    #[error("unknown sample {0}")]
    UnknownSample(Ident),
    #[error("unknown label {0}")]
    UnknownLabel(Ident),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("enumeration too large: {what} needs {needed} members, cap is {cap}")]
    TooLarge {
        what: &'static str,
        needed: String,
        cap: String,
    },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid encoder family: {0}")]
    InvalidFamily(String),
    #[error("invalid dataset prior: {0}")]
    InvalidPrior(String),
}

pub type Result<T, E = DiscreteError> = std::result::Result<T, E>;

/// A sample or label identifier, either an integer or a string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ident {
    Int(i64),
    Str(String),
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ident::Int(i) => write!(f, "{i}"),
            Ident::Str(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Ident {
    fn from(v: i64) -> Self {
        Ident::Int(v)
    }
}

impl From<&str> for Ident {
    fn from(v: &str) -> Self {
        Ident::Str(v.to_owned())
    }
}

/// Enumeration limits guarding against factorial blow-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub sym_max_samples: usize,
    pub f0_max_members: u128,
    pub max_pairs: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            sym_max_samples: DEFAULT_SYM_CAP,
            f0_max_members: DEFAULT_F0_CAP,
            max_pairs: DEFAULT_PAIR_CAP,
        }
    }
}

/// The sample space X with its total order, the labeling L and the label alphabet Y.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteInstance {
    samples: Vec<Ident>,
    alphabet: Vec<Ident>,
    labels: Vec<usize>,
}

impl DiscreteInstance {
    /// `labels[i]` is the label of `samples[i]`; every label must be in `alphabet`.
    pub fn new(samples: Vec<Ident>, alphabet: Vec<Ident>, labels: Vec<Ident>) -> Result<Self> {
        if samples.is_empty() {
            return Err(DiscreteError::InvalidInstance("no samples".into()));
        }
        if alphabet.is_empty() {
            return Err(DiscreteError::InvalidInstance("empty label alphabet".into()));
        }
        if labels.len() != samples.len() {
            return Err(DiscreteError::LengthMismatch {
                expected: samples.len(),
                found: labels.len(),
            });
        }
        let mut seen = HashSet::new();
        for s in &samples {
            if !seen.insert(s) {
                return Err(DiscreteError::InvalidInstance(format!("duplicate sample {s}")));
            }
        }
        let mut seen = HashSet::new();
        for y in &alphabet {
            if !seen.insert(y) {
                return Err(DiscreteError::InvalidInstance(format!("duplicate label {y}")));
            }
        }
        let labels = labels
            .iter()
            .map(|y| {
                alphabet
                    .iter()
                    .position(|a| a == y)
                    .ok_or_else(|| DiscreteError::UnknownLabel(y.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscreteInstance {
            samples,
            alphabet,
            labels,
        })
    }

    /// Builds the alphabet from the labels in order of first appearance.
    pub fn from_labels(samples: Vec<Ident>, labels: Vec<Ident>) -> Result<Self> {
        let alphabet: Vec<Ident> = labels.iter().cloned().unique().collect();
        Self::new(samples, alphabet, labels)
    }

    /// Samples `1..=n` labelled by the characters of `config`, e.g. `"++---"`.
    pub fn with_label_config(config: &str) -> Result<Self> {
        let samples = (1..=config.chars().count() as i64).map(Ident::Int).collect();
        let labels = config.chars().map(|c| Ident::Str(c.to_string())).collect();
        Self::from_labels(samples, labels)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Ident] {
        &self.samples
    }

    pub fn alphabet(&self) -> &[Ident] {
        &self.alphabet
    }

    /// Label index of every sample, in instance order (this is LC(X)).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_of(&self, sample: usize) -> usize {
        self.labels[sample]
    }

    pub fn sample_index(&self, id: &Ident) -> Result<usize> {
        self.samples
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| DiscreteError::UnknownSample(id.clone()))
    }

    pub fn label_index(&self, id: &Ident) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| DiscreteError::UnknownLabel(id.clone()))
    }

    pub fn indices_of(&self, ids: &[Ident]) -> Result<Vec<usize>> {
        ids.iter().map(|id| self.sample_index(id)).collect()
    }

    pub fn idents_of(&self, indices: &[usize]) -> Vec<Ident> {
        indices.iter().map(|&i| self.samples[i].clone()).collect()
    }

    /// Label string like `"++---"` when every label renders as one character.
    pub fn render_labels(&self, labels: &[usize]) -> String {
        let parts: Vec<String> = labels.iter().map(|&y| self.alphabet[y].to_string()).collect();
        if parts.iter().all(|p| p.chars().count() == 1) {
            parts.concat()
        } else {
            parts.join(",")
        }
    }

    /// The classes X^y = {x : L(x) = y}, in alphabet order, omitting empty classes.
    pub fn label_classes(&self) -> Vec<(usize, Vec<usize>)> {
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &y) in self.labels.iter().enumerate() {
            classes.entry(y).or_default().push(i);
        }
        classes.into_iter().collect()
    }

    /// Number of label-preserving bijections, prod_y |X^y|!.
    pub fn label_preserving_count(&self) -> num_bigint::BigUint {
        self.label_classes()
            .iter()
            .map(|(_, members)| factorial(members.len()))
            .product()
    }

    /// Elementwise image of a tuple of identifiers under `t`.
    pub fn apply_encoder(&self, t: &Permutation, xs: &[Ident]) -> Result<Vec<Ident>> {
        let idx = self.indices_of(xs)?;
        Ok(self.idents_of(&t.apply(&idx)?))
    }

    /// Checks that `image` (the vector whose i-th entry is T(x_i)) is a bijection.
    pub fn validate_permutation(&self, image: &[Ident]) -> Result<Permutation> {
        if image.len() != self.len() {
            return Err(DiscreteError::LengthMismatch {
                expected: self.len(),
                found: image.len(),
            });
        }
        let mut seen = vec![false; self.len()];
        let mut out = Vec::with_capacity(image.len());
        for id in image {
            let j = self.sample_index(id)?;
            if std::mem::replace(&mut seen[j], true) {
                return Err(DiscreteError::DuplicateImage(id.clone()));
            }
            out.push(j);
        }
        Ok(Permutation { image: out })
    }

    /// Uniform family over all |X|! bijections, in lexicographic order.
    pub fn enumerate_sym(&self, caps: &Caps) -> Result<EncoderFamily> {
        let n = self.len();
        if n > caps.sym_max_samples {
            return Err(DiscreteError::TooLarge {
                what: "Sym(X)",
                needed: format!("{n}! = {}", factorial(n)),
                cap: format!("|X| <= {}", caps.sym_max_samples),
            });
        }
        let members = (0..n)
            .permutations(n)
            .map(|image| Permutation { image })
            .collect();
        EncoderFamily::uniform(members)
    }

    /// Uniform family over {T : T(X^y) = X^y for all y}.
    pub fn f0_family(&self, caps: &Caps) -> Result<EncoderFamily> {
        let count = self.label_preserving_count();
        if count > num_bigint::BigUint::from(caps.f0_max_members) {
            return Err(DiscreteError::TooLarge {
                what: "F0",
                needed: count.to_string(),
                cap: caps.f0_max_members.to_string(),
            });
        }
        let classes = self.label_classes();
        let mut members = vec![Permutation::identity(self.len())];
        for (_, class) in &classes {
            let k = class.len();
            let mut next = Vec::with_capacity(members.len() * factorial_usize(k));
            for base in &members {
                for perm in (0..k).permutations(k) {
                    let mut image = base.image.clone();
                    for (from, to) in perm.iter().enumerate() {
                        image[class[from]] = class[*to];
                    }
                    next.push(Permutation { image });
                }
            }
            members = next;
        }
        EncoderFamily::uniform(members)
    }
}

pub(crate) fn factorial(n: usize) -> num_bigint::BigUint {
    (1..=n as u64).map(num_bigint::BigUint::from).product()
}

fn factorial_usize(n: usize) -> usize {
    (1..=n).product()
}

/// A bijection of the sample space, stored as the vector whose i-th entry is T(x_i).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            image: (0..n).collect(),
        }
    }

    /// Validates an index image.
    pub fn from_image(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &j in &image {
            if j >= n {
                return Err(DiscreteError::UnknownSample(Ident::Int(j as i64)));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(DiscreteError::DuplicateImage(Ident::Int(j as i64)));
            }
        }
        Ok(Permutation { image })
    }

    /// Same as [`Permutation::from_image`] with 1-based entries, matching the
    /// usual way the vectors are written down for samples `1..=n`.
    pub fn from_one_based(image: &[usize]) -> Result<Self> {
        if image.contains(&0) {
            return Err(DiscreteError::UnknownSample(Ident::Int(0)));
        }
        Self::from_image(image.iter().map(|&v| v - 1).collect())
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn at(&self, x: usize) -> usize {
        self.image[x]
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.image.iter().map(|v| v + 1).collect()
    }

    /// Elementwise image of a tuple, preserving tuple order.
    pub fn apply(&self, xs: &[usize]) -> Result<Vec<usize>> {
        xs.iter()
            .map(|&x| {
                self.image
                    .get(x)
                    .copied()
                    .ok_or(DiscreteError::UnknownSample(Ident::Int(x as i64)))
            })
            .collect()
    }

    pub fn invert(&self) -> Permutation {
        let mut inv = vec![0; self.image.len()];
        for (i, &j) in self.image.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { image: inv }
    }

    /// `self ∘ inner`, i.e. x ↦ self(inner(x)).
    pub fn compose(&self, inner: &Permutation) -> Permutation {
        Permutation {
            image: inner.image.iter().map(|&j| self.image[j]).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &j)| i == j)
    }
}

/// A finite family of encoders with a sampling distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderFamily {
    degree: usize,
    members: Vec<Permutation>,
    weights: Vec<Prob>,
}

impl EncoderFamily {
    pub fn new(members: Vec<Permutation>, weights: Vec<Prob>) -> Result<Self> {
        if members.is_empty() {
            return Err(DiscreteError::InvalidFamily("no members".into()));
        }
        if members.len() != weights.len() {
            return Err(DiscreteError::LengthMismatch {
                expected: members.len(),
                found: weights.len(),
            });
        }
        let degree = members[0].len();
        if members.iter().any(|m| m.len() != degree) {
            return Err(DiscreteError::InvalidFamily(
                "members act on different sample spaces".into(),
            ));
        }
        let mut seen = HashSet::new();
        for (i, m) in members.iter().enumerate() {
            if !seen.insert(m) {
                return Err(DiscreteError::InvalidFamily(format!(
                    "member {i} duplicates an earlier member"
                )));
            }
        }
        if weights.iter().any(|w| w < &Prob::zero()) {
            return Err(DiscreteError::InvalidFamily("negative weight".into()));
        }
        let total: Prob = weights.iter().sum();
        if !total.is_one() {
            return Err(DiscreteError::InvalidFamily(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(EncoderFamily {
            degree,
            members,
            weights,
        })
    }

    pub fn uniform(members: Vec<Permutation>) -> Result<Self> {
        let n = members.len().max(1);
        let w = Prob::new(BigInt::one(), BigInt::from(n));
        let weights = vec![w; members.len()];
        Self::new(members, weights)
    }

    /// Parses 1-based image vectors; convenient for small worked instances.
    pub fn uniform_one_based(images: &[&[usize]]) -> Result<Self> {
        let members = images
            .iter()
            .map(|im| Permutation::from_one_based(im))
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(members)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Permutation] {
        &self.members
    }

    pub fn weights(&self) -> &[Prob] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Permutation, &Prob)> {
        self.members.iter().zip(self.weights.iter())
    }

    pub fn position(&self, t: &Permutation) -> Option<usize> {
        self.members.iter().position(|m| m == t)
    }
}

/// A distribution over Alice's private dataset.
///
/// Entries are ordered tuples of distinct samples. Two tuples holding the same
/// samples denote the same dataset and are rejected as duplicates; tuple order
/// only affects how entries are displayed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPrior {
    support: Vec<(Vec<usize>, Prob)>,
}

impl DatasetPrior {
    pub fn new(support: Vec<(Vec<usize>, Prob)>) -> Result<Self> {
        if support.is_empty() {
            return Err(DiscreteError::InvalidPrior("empty support".into()));
        }
        let k = support[0].0.len();
        let mut seen = HashSet::new();
        for (tuple, p) in &support {
            if tuple.len() != k {
                return Err(DiscreteError::InvalidPrior(format!(
                    "tuples of different sizes ({k} and {})",
                    tuple.len()
                )));
            }
            if tuple.iter().collect::<HashSet<_>>().len() != tuple.len() {
                return Err(DiscreteError::InvalidPrior(format!(
                    "tuple {tuple:?} repeats a sample"
                )));
            }
            if !seen.insert(canonical(tuple)) {
                return Err(DiscreteError::InvalidPrior(format!(
                    "tuple {tuple:?} listed twice"
                )));
            }
            if p < &Prob::zero() {
                return Err(DiscreteError::InvalidPrior("negative probability".into()));
            }
        }
        let total: Prob = support.iter().map(|(_, p)| p).sum();
        if !total.is_one() {
            return Err(DiscreteError::InvalidPrior(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(DatasetPrior { support })
    }

    /// Uniform over the given tuples.
    pub fn uniform(tuples: Vec<Vec<usize>>) -> Result<Self> {
        let n = BigInt::from(tuples.len().max(1));
        let p = Prob::new(BigInt::one(), n);
        Self::new(tuples.into_iter().map(|t| (t, p.clone())).collect())
    }

    /// Uniform over all k-subsets of an n-sample space.
    pub fn uniform_subsets(n: usize, k: usize) -> Result<Self> {
        Self::uniform((0..n).combinations(k).collect())
    }

    pub fn support(&self) -> &[(Vec<usize>, Prob)] {
        &self.support
    }

    /// |X_A|.
    pub fn dataset_size(&self) -> usize {
        self.support[0].0.len()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.support.iter().flat_map(|(t, _)| t.iter().copied()).max()
    }

    /// Probability of the dataset holding exactly the samples of `tuple`.
    pub fn probability_of(&self, tuple: &[usize]) -> Prob {
        let key = canonical(tuple);
        self.support
            .iter()
            .find(|(t, _)| canonical(t) == key)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Prob::zero)
    }
}

/// Sorted copy of a tuple; the set-level key of a dataset.
pub fn canonical(tuple: &[usize]) -> Vec<usize> {
    let mut v = tuple.to_vec();
    v.sort_unstable();
    v
}

/// What Eve sees: the encoded samples Z (ascending) and the label configuration C.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Observation {
    pub encoded: Vec<usize>,
    pub label_config: Vec<usize>,
}

impl Observation {
    /// Sorts `encoded` into instance order.
    pub fn new(mut encoded: Vec<usize>, label_config: Vec<usize>) -> Self {
        encoded.sort_unstable();
        Observation {
            encoded,
            label_config,
        }
    }

    /// Y_A: labels read off the label configuration at Z's positions.
    pub fn labels(&self) -> Vec<usize> {
        self.encoded.iter().map(|&z| self.label_config[z]).collect()
    }
}
