//! Plain-text rendering of JSON reports.

use std::fmt::Write;

use super::instance::{DatasetMass, PrivacyReportDto};
use super::utility::{UtilityMetrics, UtilityReport};
use crate::attack::AttackReport;

fn tuple(d: &[crate::discrete::Ident]) -> String {
    let parts: Vec<String> = d.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

fn masses(rows: &[DatasetMass]) -> String {
    rows.iter()
        .map(|m| format!("{} {}", tuple(&m.dataset), m.p))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn render_privacy_report(r: &PrivacyReportDto) -> String {
    let mut s = String::new();
    let verdict = if r.perfectly_private { "perfectly private" } else { "NOT perfectly private" };
    writeln!(s, "{} samples, {} encoders: {verdict}", r.samples, r.family_size).unwrap();
    writeln!(s, "mutual information  {:.6} bits", r.mutual_information_bits).unwrap();
    writeln!(
        s,
        "guessing probability {} ({:.6})",
        r.guess_probability_exact, r.max_guess_probability
    )
    .unwrap();
    writeln!(s).unwrap();
    writeln!(s, "{:<24} {:>6}", "label configuration", "size").unwrap();
    for c in &r.anonymity_classes {
        writeln!(s, "{:<24} {:>6}", c.label_config, c.size).unwrap();
    }
    writeln!(s).unwrap();
    if r.observations.is_empty() {
        writeln!(s, "no observations").unwrap();
    } else {
        writeln!(s, "observations:").unwrap();
        for o in &r.observations {
            writeln!(
                s,
                "  Z={} C={} p={} tv={}\n    posterior: {}",
                tuple(&o.encoded),
                o.label_config,
                o.probability,
                o.tv_distance,
                masses(&o.posterior)
            )
            .unwrap();
        }
    }
    if let Some(f) = &r.focus {
        writeln!(s, "\nobserved Z={} C={}", tuple(&f.encoded), f.label_config).unwrap();
        let pos: Vec<String> = f.possible_datasets.iter().map(|d| tuple(d)).collect();
        writeln!(s, "  possible datasets: {}", pos.join(" ")).unwrap();
        writeln!(s, "  posterior: {}", masses(&f.posterior)).unwrap();
        for m in &f.membership {
            writeln!(s, "  Pr[{} in X_A] = {}", m.sample, m.p).unwrap();
        }
    }
    s
}

/// Anonymity classes as `label_config,size` rows.
pub fn render_lc_csv(r: &PrivacyReportDto) -> String {
    let mut s = String::from("label_config,size\n");
    for c in &r.anonymity_classes {
        writeln!(s, "{},{}", c.label_config, c.size).unwrap();
    }
    s
}

pub fn render_attack(r: &AttackReport) -> String {
    r.summary()
}

fn metrics_row(name: &str, m: &UtilityMetrics) -> String {
    let auc = m.auc.map_or("n/a".to_owned(), |a| format!("{a:.4}"));
    format!("{name:<16} {:>6} {:>9.4} {:>8}", m.n_test, m.accuracy, auc)
}

pub fn render_utility(r: &UtilityReport) -> String {
    let mut s = format!("{:<16} {:>6} {:>9} {:>8}\n", "model", "test", "accuracy", "auc");
    for o in &r.owners {
        s.push_str(&metrics_row(&o.owner_id, &o.metrics));
        s.push('\n');
    }
    s.push_str(&metrics_row("pooled", &r.pooled));
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::Caps;
    use crate::io::instance::analyze;

    #[test]
    fn privacy_table() {
        let json = r#"{"samples":[1,2,3,4],"labels":["+","+","-","-"],"family":"F0","dataset_prior":{"uniform_subsets":2}}"#;
        let r = analyze(json, &Caps::default()).unwrap();
        let text = render_privacy_report(&r);
        assert!(text.contains("encoders: perfectly private"));
        assert!(text.contains("++--"));
        assert!(text.contains("     4"));
        assert_eq!(render_lc_csv(&r), "label_config,size\n++--,4\n");
    }

    #[test]
    fn empty_report() {
        let r = PrivacyReportDto {
            samples: 0,
            family_size: 0,
            mutual_information_bits: 0.0,
            max_guess_probability: 0.0,
            guess_probability_exact: "0".into(),
            perfectly_private: true,
            anonymity_classes: vec![],
            observations: vec![],
            focus: None,
        };
        assert!(render_privacy_report(&r).contains("no observations"));
    }

    #[test]
    fn attack_line() {
        let r = AttackReport {
            attack: "mmd".into(),
            mse_ratio: Some(0.5),
            attacker_mse: Some(1.0),
            baseline_mse: Some(2.0),
            initial_mse_ratio: Some(0.9),
            epochs_run: 500,
            final_loss: Some(0.01),
            transfer_auc_on_zstar: None,
            transfer_auc_on_z: None,
            rank_deficient: false,
        };
        let line = render_attack(&r);
        assert!(!line.contains('\n'));
        assert!(line.contains("0.5000"));
    }
}
