use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::messages::category_lookup;

use super::SimError;

/// Highest vehicle count accepted; keeps vehicle ids clear of the fixed
/// infrastructure ids.
pub const MAX_VEHICLES: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    AdversaryList,
    CrlBaseline,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::AdversaryList => "adversary_list",
            Mode::CrlBaseline => "crl_baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    pub id: u64,
    /// Whether the tamper-proof device honours erase/insert orders.
    #[serde(default = "yes")]
    pub compliant: bool,
    /// Claim sent instead of the true report value.
    pub false_claim: i64,
}

fn yes() -> bool {
    true
}

/// Periodic event reports every vehicle sends alongside its beacons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    pub category: u16,
    pub claim: i64,
    pub period_s: f64,
}

/// Overrides the default "on the road for the whole run" presence of one
/// vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresenceSpan {
    pub vehicle: u64,
    pub join_s: f64,
    #[serde(default)]
    pub leave_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrlRequestSpec {
    pub vehicle: u64,
    pub at_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub seed: u64,
    pub duration_s: u64,
    /// Vehicle ids are `0..vehicles`.
    pub vehicles: u64,
    pub adversaries: Vec<AdversarySpec>,
    pub beacon_period_s: f64,
    pub al_capacity: usize,
    pub presence_window_s: u64,
    pub freshness_window_s: u64,
    pub observation_window_s: u64,
    pub mode: Mode,
    pub crl_broadcast_period_s: f64,
    /// Revoked entries preloaded into the baseline CRL.
    pub crl_seed_size: u64,
    pub delivery_delay_ms: u64,
    pub loss_probability: f64,
    pub report: Option<ReportSpec>,
    pub schedule: Vec<PresenceSpan>,
    pub crl_requests: Vec<CrlRequestSpec>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            duration_s: 300,
            vehicles: 10,
            adversaries: Vec::new(),
            beacon_period_s: 1.0,
            al_capacity: crate::adversary_list::DEFAULT_CAPACITY,
            presence_window_s: 30,
            freshness_window_s: 5,
            observation_window_s: 10,
            mode: Mode::AdversaryList,
            crl_broadcast_period_s: 10.0,
            crl_seed_size: 0,
            delivery_delay_ms: 10,
            loss_probability: 0.0,
            report: None,
            schedule: Vec::new(),
            crl_requests: Vec::new(),
        }
    }
}

/// Converts a positive period in seconds to whole milliseconds.
pub(crate) fn to_ms(seconds: f64) -> u64 {
    (seconds * 1000.0).round() as u64
}

impl SimConfig {
    /// Ten vehicles, vehicle 9 reporting a contradictory category-001
    /// claim, compliant device, 300 s, 100-entry baseline CRL every 10 s.
    pub fn canonical() -> SimConfig {
        SimConfig {
            seed: 7,
            adversaries: vec![AdversarySpec {
                id: 9,
                compliant: true,
                false_claim: 55,
            }],
            report: Some(ReportSpec {
                category: 1,
                claim: 100,
                period_s: 1.0,
            }),
            crl_seed_size: 100,
            ..SimConfig::default()
        }
    }

    pub fn from_json(text: &str) -> Result<SimConfig, SimError> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| SimError::Config {
            field: json_field(&e.to_string()),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config always serializes")
    }

    pub fn with_mode(&self, mode: Mode) -> SimConfig {
        SimConfig {
            mode,
            ..self.clone()
        }
    }

    pub fn adversary(&self, id: u64) -> Option<&AdversarySpec> {
        self.adversaries.iter().find(|a| a.id == id)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field: &str, reason: String| Err(SimError::Config {
            field: field.to_string(),
            reason,
        });
        if self.duration_s == 0 {
            return bad("duration_s", "must be positive".into());
        }
        if self.vehicles > MAX_VEHICLES {
            return bad("vehicles", format!("at most {MAX_VEHICLES} vehicles are supported"));
        }
        for (name, v) in [
            ("beacon_period_s", self.beacon_period_s),
            ("crl_broadcast_period_s", self.crl_broadcast_period_s),
        ] {
            if !(v.is_finite() && to_ms(v) > 0) {
                return bad(name, format!("period must be at least 1 ms, got {v}"));
            }
        }
        for (name, v) in [
            ("presence_window_s", self.presence_window_s),
            ("freshness_window_s", self.freshness_window_s),
            ("observation_window_s", self.observation_window_s),
        ] {
            if v == 0 {
                return bad(name, "window must be positive".into());
            }
        }
        if self.al_capacity == 0 {
            return bad("al_capacity", "must be positive".into());
        }
        if !(0.0..1.0).contains(&self.loss_probability) {
            return bad("loss_probability", format!("must be in [0, 1), got {}", self.loss_probability));
        }
        let mut seen = BTreeSet::new();
        for a in &self.adversaries {
            if a.id >= self.vehicles {
                return bad("adversaries", format!("adversary id {} is not a vehicle id", a.id));
            }
            if !seen.insert(a.id) {
                return bad("adversaries", format!("adversary id {} listed twice", a.id));
            }
        }
        if let Some(r) = &self.report {
            if category_lookup(r.category).is_err() {
                return bad("report.category", format!("unknown category {:03}", r.category));
            }
            if !(r.period_s.is_finite() && to_ms(r.period_s) > 0) {
                return bad("report.period_s", format!("period must be at least 1 ms, got {}", r.period_s));
            }
        }
        let mut spans = BTreeSet::new();
        for s in &self.schedule {
            if s.vehicle >= self.vehicles {
                return bad("schedule", format!("vehicle {} does not exist", s.vehicle));
            }
            if !spans.insert(s.vehicle) {
                return bad("schedule", format!("vehicle {} has two presence spans", s.vehicle));
            }
            if !(s.join_s.is_finite() && s.join_s >= 0.0) {
                return bad("schedule", format!("vehicle {} join time must be non-negative", s.vehicle));
            }
            if let Some(l) = s.leave_s {
                if !(l.is_finite() && l > s.join_s) {
                    return bad("schedule", format!("vehicle {} leaves before it joins", s.vehicle));
                }
            }
        }
        for r in &self.crl_requests {
            if r.vehicle >= self.vehicles {
                return bad("crl_requests", format!("vehicle {} does not exist", r.vehicle));
            }
            if !(r.at_s.is_finite() && r.at_s >= 0.0) {
                return bad("crl_requests", "request time must be non-negative".into());
            }
        }
        Ok(())
    }
}

fn json_field(message: &str) -> String {
    // serde_json reports unknown fields as "unknown field `name`"
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "<document>".to_string())
}
