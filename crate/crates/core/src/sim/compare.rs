use std::fmt::Write as _;

use serde::Serialize;

use super::config::{AdversarySpec, Mode, PresenceSpan, ReportSpec, SimConfig};
use super::metrics::Metrics;
use super::SimError;

/// Everything two runs must share to be compared: the scenario minus the
/// revocation mode and the baseline-only knobs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioKey {
    pub seed: u64,
    pub duration_s: u64,
    pub vehicles: u64,
    pub adversaries: Vec<AdversarySpec>,
    pub beacon_period_s: f64,
    pub report: Option<ReportSpec>,
    pub schedule: Vec<PresenceSpan>,
    pub delivery_delay_ms: u64,
    pub loss_probability: f64,
}

impl ScenarioKey {
    pub fn of(cfg: &SimConfig) -> ScenarioKey {
        ScenarioKey {
            seed: cfg.seed,
            duration_s: cfg.duration_s,
            vehicles: cfg.vehicles,
            adversaries: cfg.adversaries.clone(),
            beacon_period_s: cfg.beacon_period_s,
            report: cfg.report.clone(),
            schedule: cfg.schedule.clone(),
            delivery_delay_ms: cfg.delivery_delay_ms,
            loss_probability: cfg.loss_probability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub al_revocation_bytes: u64,
    pub crl_revocation_bytes: u64,
    pub al_total_bytes: u64,
    pub crl_total_bytes: u64,
    pub al_decrypts: u64,
    pub crl_decrypts: u64,
    pub al_time_to_isolation_s: Option<f64>,
    pub crl_time_to_isolation_s: Option<f64>,
    pub al_acceptance_of_adversary: u64,
    pub crl_acceptance_of_adversary: u64,
    /// Baseline CRL had no entries, so its broadcasts carry no revocations.
    pub degenerate_baseline: bool,
}

impl ComparisonReport {
    pub fn al_cheaper(&self) -> bool {
        self.al_revocation_bytes < self.crl_revocation_bytes
    }

    /// Baseline revocation bytes per adversary-list revocation byte.
    pub fn byte_ratio(&self) -> Option<f64> {
        (self.al_revocation_bytes > 0).then(|| self.crl_revocation_bytes as f64 / self.al_revocation_bytes as f64)
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |s| format!("{s:.3} s"));
        let mut out = String::new();
        let _ = writeln!(out, "{:<32}{:>16}{:>16}", "metric", "adversary_list", "crl_baseline");
        let _ = writeln!(
            out,
            "{:<32}{:>16}{:>16}",
            "revocation bytes", self.al_revocation_bytes, self.crl_revocation_bytes
        );
        let _ = writeln!(out, "{:<32}{:>16}{:>16}", "total bytes", self.al_total_bytes, self.crl_total_bytes);
        let _ = writeln!(out, "{:<32}{:>16}{:>16}", "decryptions", self.al_decrypts, self.crl_decrypts);
        let _ = writeln!(
            out,
            "{:<32}{:>16}{:>16}",
            "time to isolation",
            opt(self.al_time_to_isolation_s),
            opt(self.crl_time_to_isolation_s)
        );
        let _ = writeln!(
            out,
            "{:<32}{:>16}{:>16}",
            "accepted from revoked", self.al_acceptance_of_adversary, self.crl_acceptance_of_adversary
        );
        match self.byte_ratio() {
            Some(r) => {
                let _ = writeln!(out, "baseline/adversary-list revocation bytes: {r:.2}");
            }
            None => {
                let _ = writeln!(out, "baseline/adversary-list revocation bytes: n/a (no revocation traffic)");
            }
        }
        if self.degenerate_baseline {
            let _ = writeln!(out, "note: baseline CRL is empty; broadcasts carry no entries");
        }
        out
    }
}

/// Compares an adversary-list run with a baseline run of the same scenario.
pub fn compare(al: &Metrics, crl: &Metrics) -> Result<ComparisonReport, SimError> {
    if al.mode != Mode::AdversaryList || crl.mode != Mode::CrlBaseline {
        return Err(SimError::IncomparableRuns(format!(
            "expected adversary_list vs crl_baseline, got {:?} vs {:?}",
            al.mode, crl.mode
        )));
    }
    if al.scenario != crl.scenario {
        return Err(SimError::IncomparableRuns(
            "runs were produced from different scenarios".to_string(),
        ));
    }
    Ok(ComparisonReport {
        al_revocation_bytes: al.revocation_bytes(),
        crl_revocation_bytes: crl.revocation_bytes(),
        al_total_bytes: al.total_channel_bytes(),
        crl_total_bytes: crl.total_channel_bytes(),
        al_decrypts: al.total_decrypts(),
        crl_decrypts: crl.total_decrypts(),
        al_time_to_isolation_s: al.time_to_isolation_s(),
        crl_time_to_isolation_s: crl.time_to_isolation_s(),
        al_acceptance_of_adversary: al.acceptance_of_adversary_count,
        crl_acceptance_of_adversary: crl.acceptance_of_adversary_count,
        degenerate_baseline: crl.crl.is_empty(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatched_scenarios_are_rejected() {
        let a = SimConfig::canonical();
        let al = Metrics::new(Mode::AdversaryList, ScenarioKey::of(&a));
        let crl = Metrics::new(Mode::CrlBaseline, ScenarioKey::of(&SimConfig { seed: 99, ..a.clone() }));
        assert!(matches!(compare(&al, &crl), Err(SimError::IncomparableRuns(_))));
        let crl = Metrics::new(Mode::CrlBaseline, ScenarioKey::of(&a));
        assert!(compare(&al, &crl).is_ok());
        assert!(matches!(compare(&crl, &al), Err(SimError::IncomparableRuns(_))));
    }

    #[test]
    fn baseline_only_knobs_do_not_affect_comparability() {
        let a = SimConfig::canonical();
        let b = SimConfig {
            crl_seed_size: 0,
            crl_broadcast_period_s: 3.0,
            ..a.clone()
        };
        assert_eq!(ScenarioKey::of(&a), ScenarioKey::of(&b));
    }
}
