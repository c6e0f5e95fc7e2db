use serde::Serialize;

use crate::protocol::VehicleCounters;

/// One line of the structured event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub time_ms: u64,
    /// `vehicle:<id>`, `rsu`, `ca` or `channel`.
    pub agent: String,
    pub event: &'static str,
    /// Wire kind of the message involved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<String>,
    /// Vehicle the event is about: sender, accused or adversary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subject: Option<u64>,
    /// First 8 bytes of SHA-256 over the wire frame, hex.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counters: Option<VehicleCounters>,
    /// Adversary-list ids, newest first, after the event.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub al: Option<Vec<u64>>,
}

impl EventRecord {
    pub fn new(time_ms: u64, agent: impl Into<String>, event: &'static str) -> Self {
        EventRecord {
            time_ms,
            agent: agent.into(),
            event,
            message: None,
            decision: None,
            subject: None,
            digest: None,
            counters: None,
            al: None,
        }
    }

    pub fn message(mut self, kind: &'static str) -> Self {
        self.message = Some(kind);
        self
    }

    pub fn decision(mut self, d: impl Into<String>) -> Self {
        self.decision = Some(d.into());
        self
    }

    pub fn subject(mut self, id: u64) -> Self {
        self.subject = Some(id);
        self
    }

    pub fn digest(mut self, d: &str) -> Self {
        self.digest = Some(d.to_string());
        self
    }

    pub fn counters(mut self, c: VehicleCounters) -> Self {
        self.counters = Some(c);
        self
    }

    pub fn al(mut self, ids: Vec<u64>) -> Self {
        self.al = Some(ids);
        self
    }
}

pub fn vehicle_agent(id: u64) -> String {
    format!("vehicle:{id}")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

impl EventLog {
    pub fn push(&mut self, r: EventRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EventRecord> {
        self.records.iter()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn is_time_ordered(&self) -> bool {
        self.records.windows(2).all(|w| w[0].time_ms <= w[1].time_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optional_fields_are_omitted() {
        let mut log = EventLog::default();
        log.push(EventRecord::new(10, "rsu", "forward").subject(9));
        log.push(EventRecord::new(12, vehicle_agent(3), "receive").decision("accept").al(vec![]));
        let text = log.to_jsonl();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], r#"{"time_ms":10,"agent":"rsu","event":"forward","subject":9}"#);
        assert_eq!(
            lines[1],
            r#"{"time_ms":12,"agent":"vehicle:3","event":"receive","decision":"accept","al":[]}"#
        );
        assert!(log.is_time_ordered());
    }
}
