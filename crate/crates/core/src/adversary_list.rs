//! Per-vehicle bounded Adversary List (AL).
//!
//! Entries are kept newest first. Recording a new adversary pushes it on
//! top and drops the last entry when the list is full; recording or
//! touching a known adversary moves it to the top.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::certs::ReasonCode;

pub const DEFAULT_CAPACITY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AlError {
    #[error("vehicle {0} is not in the adversary list")]
    NotFound(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct AdversaryListEntry {
    pub warning_issuer_id: u64,
    pub adversary_id: u64,
    pub timestamp: u64,
    pub reason_code: ReasonCode,
    pub review_date: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryList {
    capacity: usize,
    entries: VecDeque<AdversaryListEntry>,
}

impl Default for AdversaryList {
    fn default() -> Self {
        AdversaryList::with_capacity(DEFAULT_CAPACITY)
    }
}

impl AdversaryList {
    pub fn new() -> Self {
        Self::default()
    }

    /// # Panics
    /// If `capacity` is zero.
    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity > 0, "adversary list capacity must be positive");
        AdversaryList {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &AdversaryListEntry> {
        self.entries.iter()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.adversary_id).collect()
    }

    pub fn position(&self, vehicle_id: u64) -> Option<usize> {
        self.entries.iter().position(|e| e.adversary_id == vehicle_id)
    }

    pub fn contains(&self, vehicle_id: u64) -> bool {
        self.position(vehicle_id).is_some()
    }

    /// Puts `entry` on top. An existing entry for the same adversary is
    /// replaced (all fields refreshed); otherwise the oldest entry is
    /// evicted when the list is full. Returns the evicted entry, if any.
    pub fn record(&mut self, entry: AdversaryListEntry) -> Option<AdversaryListEntry> {
        let mut evicted = None;
        if let Some(pos) = self.position(entry.adversary_id) {
            self.entries.remove(pos);
        } else if self.entries.len() == self.capacity {
            evicted = self.entries.pop_back();
        }
        self.entries.push_front(entry);
        evicted
    }

    /// Moves a known adversary to the top and stamps it with `now`.
    pub fn touch(&mut self, vehicle_id: u64, now: u64) -> Result<(), AlError> {
        let pos = self.position(vehicle_id).ok_or(AlError::NotFound(vehicle_id))?;
        let mut entry = self.entries.remove(pos).expect("position is in bounds");
        entry.timestamp = now;
        self.entries.push_front(entry);
        Ok(())
    }

    /// Drops every entry whose adversary has left the road.
    pub fn purge_departed(&mut self, departed: &BTreeSet<u64>) -> usize {
        let before = self.entries.len();
        self.entries.retain(|e| !departed.contains(&e.adversary_id));
        before - self.entries.len()
    }

    /// One line per entry, newest first: `pos issuer adv ts reason review`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (pos, e) in self.entries.iter().enumerate() {
            let _ = writeln!(
                out,
                "{pos} {} {} {} {} {}",
                e.warning_issuer_id,
                e.adversary_id,
                e.timestamp,
                e.reason_code.code(),
                e.review_date
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(adv: u64, ts: u64) -> AdversaryListEntry {
        AdversaryListEntry {
            warning_issuer_id: 100,
            adversary_id: adv,
            timestamp: ts,
            reason_code: ReasonCode::BogusTrafficInformation,
            review_date: ts + 31_536_000,
        }
    }

    fn list_of(ids_newest_first: &[u64]) -> AdversaryList {
        let mut al = AdversaryList::new();
        for (i, id) in ids_newest_first.iter().rev().enumerate() {
            al.record(entry(*id, i as u64));
        }
        al
    }

    #[test]
    fn full_list_evicts_the_tenth() {
        let mut al = list_of(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        assert_eq!(al.ids(), vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        let evicted = al.record(entry(11, 50));
        assert_eq!(evicted.map(|e| e.adversary_id), Some(10));
        assert_eq!(al.ids(), vec![11, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn re_recording_moves_to_top_and_refreshes() {
        let mut al = list_of(&[5, 3]);
        assert!(al.record(entry(3, 99)).is_none());
        assert_eq!(al.ids(), vec![3, 5]);
        assert_eq!(al.entries().next().unwrap().timestamp, 99);
    }

    #[test]
    fn record_into_empty() {
        let mut al = AdversaryList::new();
        al.record(entry(7, 0));
        assert_eq!(al.ids(), vec![7]);
    }

    #[test]
    fn contains_and_eviction() {
        let al = list_of(&[5, 3]);
        assert!(al.contains(3));
        assert!(!al.contains(4));
        let mut al = AdversaryList::new();
        for id in 0..11 {
            al.record(entry(id, id));
        }
        assert!(!al.contains(0));
        assert!(al.contains(1));
    }

    #[test]
    fn touch_moves_to_top() {
        let mut al = list_of(&[5, 3, 9]);
        al.touch(9, 77).unwrap();
        assert_eq!(al.ids(), vec![9, 5, 3]);
        assert_eq!(al.entries().next().unwrap().timestamp, 77);
        let mut single = list_of(&[5]);
        single.touch(5, 1).unwrap();
        assert_eq!(single.ids(), vec![5]);
        assert_eq!(list_of(&[5, 3]).touch(4, 0), Err(AlError::NotFound(4)));
    }

    #[test]
    fn purge_departed_keeps_order() {
        let mut al = list_of(&[5, 3, 9]);
        assert_eq!(al.purge_departed(&BTreeSet::from([3])), 1);
        assert_eq!(al.ids(), vec![5, 9]);
        let mut al = list_of(&[5, 3]);
        al.purge_departed(&BTreeSet::new());
        assert_eq!(al.ids(), vec![5, 3]);
        let mut al = list_of(&[5]);
        al.purge_departed(&BTreeSet::from([5, 6]));
        assert!(al.is_empty());
    }

    #[test]
    fn custom_capacity() {
        let mut al = AdversaryList::with_capacity(2);
        for id in 0..5 {
            al.record(entry(id, id));
        }
        assert_eq!(al.ids(), vec![4, 3]);
    }

    #[test]
    fn dump_format() {
        let al = list_of(&[5, 3]);
        assert_eq!(al.dump(), "0 100 5 1 1 31536001\n1 100 3 0 1 31536000\n");
    }

    #[derive(Debug, Clone)]
    enum Op {
        Record(u64),
        Touch(u64),
        Purge(Vec<u64>),
    }

    fn arb_op() -> impl Strategy<Value = Op> {
        prop_oneof![
            5 => (0u64..20).prop_map(Op::Record),
            3 => (0u64..20).prop_map(Op::Touch),
            1 => proptest::collection::vec(0u64..20, 0..3).prop_map(Op::Purge),
        ]
    }

    proptest! {
        #[test]
        fn recency_order_and_uniqueness(ops in proptest::collection::vec(arb_op(), 1..200)) {
            let mut al = AdversaryList::new();
            for (t, op) in ops.into_iter().enumerate() {
                let t = t as u64;
                match op {
                    Op::Record(id) => { al.record(entry(id, t)); }
                    Op::Touch(id) => { let _ = al.touch(id, t); }
                    Op::Purge(ids) => { al.purge_departed(&ids.into_iter().collect()); }
                }
                prop_assert!(al.len() <= DEFAULT_CAPACITY);
                let ids = al.ids();
                let unique: BTreeSet<_> = ids.iter().collect();
                prop_assert_eq!(unique.len(), ids.len());
                let ts: Vec<u64> = al.entries().map(|e| e.timestamp).collect();
                prop_assert!(ts.windows(2).all(|w| w[0] > w[1]));
            }
        }
    }
}
