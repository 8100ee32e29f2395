//! Instance files for the exact privacy analysis, and the JSON report.
//!
//! ```json
//! {
//!   "samples": [1, 2, 3, 4, 5],
//!   "labels": ["+", "+", "-", "-", "-"],
//!   "family": [[2, 1, 5, 4, 3], [1, 2, 3, 5, 4]],
//!   "encoder_prior": ["1/2", 0.5],
//!   "dataset_prior": [{"tuple": [1, 2, 3], "p": 1}],
//!   "observe": {"encoder": [2, 1, 5, 4, 3], "dataset": [2, 3, 4]}
//! }
//! ```
//!
//! `family` may also be `"F0"` or `"Sym"`; `encoder_prior` defaults to
//! uniform; `dataset_prior` may be `{"uniform_subsets": k}`. Weights are exact:
//! either a fraction string or a decimal number.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::IoError;
use crate::discrete::{
    Caps, DatasetPrior, DiscreteInstance, EncoderFamily, Ident, Observation, Permutation, Prob,
};
use crate::privacy::{
    dataset_posterior, is_perfectly_private, label_configuration, membership_probability,
    partition_by_lc, possible_datasets, PosteriorTable, PrivacyReport,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Number(f64),
    Text(String),
}

impl Weight {
    pub fn to_prob(&self) -> Result<Prob, IoError> {
        match self {
            // shortest round-trip text of the literal, then exact decimal
            Weight::Number(v) => parse_prob(&format!("{v}")),
            Weight::Text(s) => parse_prob(s),
        }
    }
}

/// Exact value of `"a/b"`, `"0.125"`, `"3"` or `"1e-3"`.
pub fn parse_prob(s: &str) -> Result<Prob, IoError> {
    let bad = || IoError::Format(format!("not an exact probability: {s:?}"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Prob::new(n, d));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Prob::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Prob::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}

fn prob_text(p: &Prob) -> String {
    if p.denom().is_one() {
        p.numer().to_string()
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    Named(String),
    Explicit(Vec<Vec<Ident>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorEntry {
    pub tuple: Vec<Ident>,
    pub p: Weight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetPriorSpec {
    UniformSubsets { uniform_subsets: usize },
    Explicit(Vec<PriorEntry>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserveSpec {
    /// T_A as its image vector.
    pub encoder: Vec<Ident>,
    /// X_A.
    pub dataset: Vec<Ident>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub samples: Vec<Ident>,
    pub labels: Vec<Ident>,
    pub family: FamilySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder_prior: Option<Vec<Weight>>,
    pub dataset_prior: DatasetPriorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observe: Option<ObserveSpec>,
}

/// A parsed instance ready for analysis.
#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub instance: DiscreteInstance,
    pub family: EncoderFamily,
    pub prior: DatasetPrior,
    pub observe: Option<(Permutation, Vec<usize>)>,
}

impl InstanceSpec {
    /// Parse errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(|e| {
            IoError::Format(format!("instance JSON, line {} column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn load(&self, caps: &Caps) -> Result<LoadedInstance, IoError> {
        let instance = DiscreteInstance::from_labels(self.samples.clone(), self.labels.clone())?;
        let family = match &self.family {
            FamilySpec::Named(name) => {
                if self.encoder_prior.is_some() {
                    return Err(IoError::Data("named families are uniform; drop encoder_prior".into()));
                }
                match name.as_str() {
                    "F0" => instance.f0_family(caps)?,
                    "Sym" => instance.enumerate_sym(caps)?,
                    other => return Err(IoError::Data(format!("unknown family {other:?}"))),
                }
            }
            FamilySpec::Explicit(images) => {
                let members = images
                    .iter()
                    .map(|img| instance.validate_permutation(img))
                    .collect::<Result<Vec<_>, _>>()?;
                match &self.encoder_prior {
                    None => EncoderFamily::uniform(members)?,
                    Some(ws) => {
                        let weights = ws.iter().map(Weight::to_prob).collect::<Result<Vec<_>, _>>()?;
                        if weights.len() != members.len() {
                            return Err(IoError::Data(format!(
                                "{} encoder weights for {} members",
                                weights.len(),
                                members.len()
                            )));
                        }
                        EncoderFamily::new(members, weights)?
                    }
                }
            }
        };
        let prior = match &self.dataset_prior {
            DatasetPriorSpec::UniformSubsets { uniform_subsets } => {
                DatasetPrior::uniform_subsets(instance.len(), *uniform_subsets)?
            }
            DatasetPriorSpec::Explicit(entries) => {
                let support = entries
                    .iter()
                    .map(|e| Ok((instance.indices_of(&e.tuple)?, e.p.to_prob()?)))
                    .collect::<Result<Vec<_>, IoError>>()?;
                DatasetPrior::new(support)?
            }
        };
        let observe = match &self.observe {
            None => None,
            Some(o) => Some((instance.validate_permutation(&o.encoder)?, instance.indices_of(&o.dataset)?)),
        };
        Ok(LoadedInstance {
            instance,
            family,
            prior,
            observe,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMass {
    pub dataset: Vec<Ident>,
    pub p: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub sample: Ident,
    pub p: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcClassDto {
    pub label_config: String,
    pub size: usize,
    /// Members as image vectors.
    pub members: Vec<Vec<Ident>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationDto {
    pub encoded: Vec<Ident>,
    pub label_config: String,
    pub probability: String,
    pub posterior: Vec<DatasetMass>,
    pub label_only: Vec<DatasetMass>,
    pub tv_distance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusDto {
    pub encoded: Vec<Ident>,
    pub label_config: String,
    pub possible_datasets: Vec<Vec<Ident>>,
    pub posterior: Vec<DatasetMass>,
    pub membership: Vec<Membership>,
}

/// JSON form of the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReportDto {
    pub samples: usize,
    pub family_size: usize,
    pub mutual_information_bits: f64,
    pub max_guess_probability: f64,
    pub guess_probability_exact: String,
    pub perfectly_private: bool,
    pub anonymity_classes: Vec<LcClassDto>,
    pub observations: Vec<ObservationDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus: Option<FocusDto>,
}

fn masses(inst: &DiscreteInstance, t: &PosteriorTable) -> Vec<DatasetMass> {
    t.entries()
        .iter()
        .map(|(d, p)| DatasetMass {
            dataset: inst.idents_of(d),
            p: prob_text(p),
        })
        .collect()
}

impl PrivacyReportDto {
    pub fn build(loaded: &LoadedInstance, report: &PrivacyReport) -> Result<Self, IoError> {
        let inst = &loaded.instance;
        let part = partition_by_lc(inst, &loaded.family)?;
        let anonymity_classes = part
            .classes
            .iter()
            .map(|c| LcClassDto {
                label_config: inst.render_labels(c.label_config.entries()),
                size: c.members.len(),
                members: c
                    .members
                    .iter()
                    .map(|&m| inst.idents_of(loaded.family.members()[m].image()))
                    .collect(),
            })
            .collect();
        let observations = report
            .per_observation
            .iter()
            .map(|o| ObservationDto {
                encoded: inst.idents_of(&o.observation.encoded),
                label_config: inst.render_labels(&o.observation.label_config),
                probability: prob_text(&o.probability),
                posterior: masses(inst, &o.posterior),
                label_only: masses(inst, &o.label_only),
                tv_distance: prob_text(&o.tv_distance),
            })
            .collect();
        let focus = match &loaded.observe {
            None => None,
            Some((t, xa)) => {
                let obs = Observation::new(t.apply(xa)?, label_configuration(inst, t).0);
                let pos = possible_datasets(inst, &loaded.family, &obs)?;
                let post = dataset_posterior(inst, &loaded.family, &loaded.prior, &obs)?;
                Some(FocusDto {
                    encoded: inst.idents_of(&obs.encoded),
                    label_config: inst.render_labels(&obs.label_config),
                    possible_datasets: pos.iter().map(|d| inst.idents_of(d)).collect(),
                    posterior: masses(inst, &post),
                    membership: (0..inst.len())
                        .map(|x| Membership {
                            sample: inst.samples()[x].clone(),
                            p: prob_text(&membership_probability(&post, x)),
                        })
                        .collect(),
                })
            }
        };
        Ok(PrivacyReportDto {
            samples: inst.len(),
            family_size: loaded.family.len(),
            mutual_information_bits: report.mutual_information_bits,
            max_guess_probability: report.max_guess_probability,
            guess_probability_exact: prob_text(&report.guess_probability_exact),
            perfectly_private: report.perfectly_private,
            anonymity_classes,
            observations,
            focus,
        })
    }
}

/// Full pipeline: parse, enumerate, report.
pub fn analyze(json: &str, caps: &Caps) -> Result<PrivacyReportDto, IoError> {
    let loaded = InstanceSpec::from_json(json)?.load(caps)?;
    let report = is_perfectly_private(&loaded.instance, &loaded.family, &loaded.prior, caps)?;
    PrivacyReportDto::build(&loaded, &report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Prob {
        Prob::new(n.into(), d.into())
    }

    #[test]
    fn exact_weights() {
        assert_eq!(parse_prob("1/3").unwrap(), r(1, 3));
        assert_eq!(parse_prob("0.1").unwrap(), r(1, 10));
        assert_eq!(parse_prob("2.5e-1").unwrap(), r(1, 4));
        assert_eq!(parse_prob("1").unwrap(), r(1, 1));
        assert_eq!(Weight::Number(0.1).to_prob().unwrap(), r(1, 10));
        assert!(parse_prob("1/0").is_err());
        assert!(parse_prob("x").is_err());
        assert!(parse_prob(".").is_err());
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = InstanceSpec::from_json("{\n  \"samples\": [1, 2,\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn six_encoder_focus() {
        let json = r#"{
            "samples": [1, 2, 3, 4, 5],
            "labels": ["+", "+", "-", "-", "-"],
            "family": [[2,1,5,4,3],[2,1,3,5,4],[1,2,3,5,4],[4,3,1,2,5],[3,4,2,1,5],[5,2,4,3,1]],
            "dataset_prior": {"uniform_subsets": 3},
            "observe": {"encoder": [2,1,5,4,3], "dataset": [2,3,4]}
        }"#;
        let dto = analyze(json, &Caps::default()).unwrap();
        let focus = dto.focus.unwrap();
        let id = |v: &[i64]| v.iter().map(|&i| Ident::Int(i)).collect::<Vec<_>>();
        assert_eq!(focus.possible_datasets, vec![id(&[2, 4, 3]), id(&[2, 5, 4]), id(&[1, 5, 4])]);
        let m: Vec<&str> = focus.membership.iter().map(|m| m.p.as_str()).collect();
        assert_eq!(m, vec!["1/3", "2/3", "1/3", "1", "2/3"]);
        assert_eq!(dto.anonymity_classes.iter().map(|c| c.size).sum::<usize>(), 6);
    }

    #[test]
    fn rejects_bad_instances() {
        let base = |family: &str, prior: &str| {
            format!(r#"{{"samples":[1,2,3],"labels":["a","b","a"],"family":{family},"dataset_prior":{prior}}}"#)
        };
        let caps = Caps::default();
        assert!(analyze(&base("[[1,1,2]]", r#"{"uniform_subsets":1}"#), &caps).is_err());
        assert!(analyze(&base("\"Nope\"", r#"{"uniform_subsets":1}"#), &caps).is_err());
        assert!(analyze(&base("\"F0\"", r#"[{"tuple":[1],"p":"1/2"}]"#), &caps).is_err());
        assert!(analyze(&base("\"F0\"", r#"[{"tuple":[9],"p":1}]"#), &caps).is_err());
        let ok = analyze(&base("\"F0\"", r#"[{"tuple":[1],"p":0.5},{"tuple":[2],"p":"1/2"}]"#), &caps).unwrap();
        assert!(ok.perfectly_private);
    }
}
