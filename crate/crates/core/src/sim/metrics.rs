use std::collections::BTreeMap;

use serde::Serialize;

use crate::messages::{CrlEntry, WireKind};

use super::compare::ScenarioKey;
use super::config::Mode;

/// Traffic classes used for byte accounting. Everything other than `Data`
/// is revocation-related.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageClass {
    Data,
    Warning,
    Accusation,
    Order,
    CrlBroadcast,
    CrlExchange,
}

impl MessageClass {
    pub const ALL: [MessageClass; 6] = [
        MessageClass::Data,
        MessageClass::Warning,
        MessageClass::Accusation,
        MessageClass::Order,
        MessageClass::CrlBroadcast,
        MessageClass::CrlExchange,
    ];

    pub fn of(kind: WireKind) -> MessageClass {
        match kind {
            WireKind::Data => MessageClass::Data,
            WireKind::Warning => MessageClass::Warning,
            WireKind::VehicleAccusation | WireKind::RsuAccusation => MessageClass::Accusation,
            WireKind::Order => MessageClass::Order,
            WireKind::CrlBroadcast => MessageClass::CrlBroadcast,
            WireKind::CrlRequest | WireKind::CrlResponse => MessageClass::CrlExchange,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MessageClass::Data => "data",
            MessageClass::Warning => "warning",
            MessageClass::Accusation => "accusation",
            MessageClass::Order => "order",
            MessageClass::CrlBroadcast => "crl_broadcast",
            MessageClass::CrlExchange => "crl_exchange",
        }
    }

    pub fn is_revocation(self) -> bool {
        self != MessageClass::Data
    }
}

/// Timeline of one adversary, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IsolationRecord {
    pub first_contradiction_ms: Option<u64>,
    pub revoked_ms: Option<u64>,
    pub isolated_ms: Option<u64>,
}

impl IsolationRecord {
    pub fn time_to_isolation_ms(&self) -> Option<u64> {
        Some(self.isolated_ms?.saturating_sub(self.first_contradiction_ms.unwrap_or(0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub mode: Mode,
    pub scenario: ScenarioKey,
    /// Bytes each transmission put on the channel, counted once per send.
    pub channel_bytes: BTreeMap<MessageClass, u64>,
    pub messages_sent: BTreeMap<MessageClass, u64>,
    pub deliveries: u64,
    pub lost: u64,
    pub decrypt_count: BTreeMap<u64, u64>,
    pub al_lookup_count: u64,
    pub crl_lookup_count: u64,
    pub acceptance_of_adversary_count: u64,
    pub acceptance_after_isolation_count: u64,
    pub accusations_sent: u64,
    pub accusations_dropped: u64,
    pub warnings_sent: u64,
    pub isolation: BTreeMap<u64, IsolationRecord>,
    pub crl: Vec<CrlEntry>,
}

impl Metrics {
    pub fn new(mode: Mode, scenario: ScenarioKey) -> Self {
        Metrics {
            mode,
            scenario,
            channel_bytes: MessageClass::ALL.iter().map(|c| (*c, 0)).collect(),
            messages_sent: MessageClass::ALL.iter().map(|c| (*c, 0)).collect(),
            deliveries: 0,
            lost: 0,
            decrypt_count: BTreeMap::new(),
            al_lookup_count: 0,
            crl_lookup_count: 0,
            acceptance_of_adversary_count: 0,
            acceptance_after_isolation_count: 0,
            accusations_sent: 0,
            accusations_dropped: 0,
            warnings_sent: 0,
            isolation: BTreeMap::new(),
            crl: Vec::new(),
        }
    }

    pub fn record_send(&mut self, class: MessageClass, bytes: usize) {
        *self.channel_bytes.entry(class).or_default() += bytes as u64;
        *self.messages_sent.entry(class).or_default() += 1;
    }

    pub fn bytes(&self, class: MessageClass) -> u64 {
        self.channel_bytes.get(&class).copied().unwrap_or(0)
    }

    pub fn total_channel_bytes(&self) -> u64 {
        self.channel_bytes.values().sum()
    }

    pub fn revocation_bytes(&self) -> u64 {
        self.channel_bytes
            .iter()
            .filter(|(c, _)| c.is_revocation())
            .map(|(_, b)| b)
            .sum()
    }

    pub fn total_decrypts(&self) -> u64 {
        self.decrypt_count.values().sum()
    }

    /// Slowest adversary; `None` unless every adversary was isolated.
    pub fn time_to_isolation_ms(&self) -> Option<u64> {
        if self.isolation.is_empty() {
            return None;
        }
        self.isolation
            .values()
            .map(IsolationRecord::time_to_isolation_ms)
            .collect::<Option<Vec<_>>>()
            .and_then(|v| v.into_iter().max())
    }

    pub fn time_to_isolation_s(&self) -> Option<f64> {
        self.time_to_isolation_ms().map(|ms| ms as f64 / 1000.0)
    }

    /// `name,value,unit` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "value", "unit"]).expect("in-memory write");
        let mut row = |name: &str, value: String, unit: &str| {
            w.write_record([name, value.as_str(), unit]).expect("in-memory write");
        };
        row("mode", self.mode.label().to_string(), "");
        row("duration", self.scenario.duration_s.to_string(), "s");
        for c in MessageClass::ALL {
            row(&format!("channel_bytes.{}", c.name()), self.bytes(c).to_string(), "bytes");
            row(
                &format!("messages_sent.{}", c.name()),
                self.messages_sent.get(&c).copied().unwrap_or(0).to_string(),
                "messages",
            );
        }
        row("channel_bytes.total", self.total_channel_bytes().to_string(), "bytes");
        row("channel_bytes.revocation", self.revocation_bytes().to_string(), "bytes");
        row("deliveries", self.deliveries.to_string(), "messages");
        row("lost", self.lost.to_string(), "messages");
        row("decrypt_count.total", self.total_decrypts().to_string(), "operations");
        for (id, n) in &self.decrypt_count {
            row(&format!("decrypt_count.vehicle_{id}"), n.to_string(), "operations");
        }
        row("al_lookup_count", self.al_lookup_count.to_string(), "lookups");
        row("crl_lookup_count", self.crl_lookup_count.to_string(), "lookups");
        row(
            "time_to_isolation",
            self.time_to_isolation_s().map_or_else(|| "none".to_string(), |s| format!("{s:.3}")),
            "s",
        );
        row(
            "acceptance_of_adversary_count",
            self.acceptance_of_adversary_count.to_string(),
            "messages",
        );
        row(
            "acceptance_after_isolation_count",
            self.acceptance_after_isolation_count.to_string(),
            "messages",
        );
        row("accusations_sent", self.accusations_sent.to_string(), "messages");
        row("accusations_dropped", self.accusations_dropped.to_string(), "messages");
        row("warnings_sent", self.warnings_sent.to_string(), "messages");
        row("crl_entries", self.crl.len().to_string(), "entries");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}
