//! In-process checks for packagers: the 16-case receive truth table and an
//! adversary-list replay against a naive reference model.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adversary_list::{AdversaryList, AdversaryListEntry, DEFAULT_CAPACITY};
use crate::certs::{CertKind, ReasonCode};
use crate::messages::{category_lookup, DataMessage};
use crate::protocol::{Deployment, ReceiveDecision, RejectCause, RevocationCheck};

/// One combination of the four receive-side conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruthCase {
    pub sender_in_al: bool,
    pub status_is_ac: bool,
    pub signature_ok: bool,
    pub identity_fresh: bool,
}

impl TruthCase {
    pub fn all() -> Vec<TruthCase> {
        (0..16u8)
            .map(|bits| TruthCase {
                sender_in_al: bits & 8 != 0,
                status_is_ac: bits & 4 != 0,
                signature_ok: bits & 2 != 0,
                identity_fresh: bits & 1 != 0,
            })
            .collect()
    }

    pub fn label(&self) -> String {
        let b = |v: bool| if v { 1 } else { 0 };
        format!(
            "in_al={} ac={} sig_ok={} fresh={}",
            b(self.sender_in_al),
            b(self.status_is_ac),
            b(self.signature_ok),
            b(self.identity_fresh)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruthOutcome {
    pub decision: ReceiveDecision,
    /// Decryptions the receiver performed for this message.
    pub decrypts: u64,
}

const RECEIVER: u64 = 0;
const SENDER: u64 = 5;

/// Builds the message for `case` from real credentials and runs it through
/// a fresh receiver.
pub fn evaluate(case: TruthCase) -> TruthOutcome {
    let mut d = Deployment::simple([RECEIVER, SENDER], 1200);
    let now = if case.identity_fresh { 10 } else { 610 };
    let crypto = d.env.crypto();
    let sender = d.vehicle(SENDER);
    let identity = *sender.identity_at(0).expect("slot 0 identity exists");
    let status = if case.status_is_ac {
        d.ca.issuer()
            .issue(
                crypto,
                CertKind::Adversary,
                SENDER,
                sender.keys().fingerprint,
                0,
                Some(ReasonCode::BogusTrafficInformation),
            )
            .expect("AC issues")
    } else {
        *sender.valid_cert().expect("enrolled vehicle holds a VC")
    };
    let mut msg: DataMessage = DataMessage::build(
        crypto,
        &sender.keys().public_key,
        &sender.keys().private_key,
        &d.env.group.public_key,
        SENDER,
        category_lookup(2).expect("category 002 exists"),
        0,
        now,
        identity,
        &status,
    )
    .expect("message builds");
    if !case.signature_ok {
        msg.signature.0[0] ^= 1;
    }
    let env = d.env.clone();
    let receiver = d.vehicle_mut(RECEIVER);
    if case.sender_in_al {
        receiver.adversary_list_mut().record(AdversaryListEntry {
            warning_issuer_id: 3,
            adversary_id: SENDER,
            timestamp: 1,
            reason_code: ReasonCode::BogusTrafficInformation,
            review_date: 1,
        });
    }
    let before = receiver.counters.decrypts;
    let out = receiver.receive(&env, &msg, now, RevocationCheck::AdversaryList);
    TruthOutcome {
        decision: out.decision,
        decrypts: receiver.counters.decrypts - before,
    }
}

/// Reference decision table.
pub fn expected(case: TruthCase) -> ReceiveDecision {
    if case.sender_in_al {
        ReceiveDecision::IgnoreKnownAdversary
    } else if case.status_is_ac {
        ReceiveDecision::NewAdversaryDetected
    } else if !case.signature_ok {
        ReceiveDecision::Reject(RejectCause::BadSignature)
    } else if !case.identity_fresh {
        ReceiveDecision::Reject(RejectCause::ExpiredIdentity)
    } else {
        ReceiveDecision::Accept
    }
}

#[derive(Debug, Clone)]
pub struct TruthRow {
    pub case: TruthCase,
    pub expected: ReceiveDecision,
    pub actual: TruthOutcome,
}

impl TruthRow {
    pub fn passed(&self) -> bool {
        self.actual.decision == self.expected && (!self.case.sender_in_al || self.actual.decrypts == 0)
    }
}

pub fn truth_table() -> Vec<TruthRow> {
    TruthCase::all()
        .into_iter()
        .map(|case| TruthRow {
            case,
            expected: expected(case),
            actual: evaluate(case),
        })
        .collect()
}

/// Operations accepted by the adversary list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlOp {
    Record(AdversaryListEntry),
    Touch { id: u64, now: u64 },
    Purge(BTreeSet<u64>),
}

/// Random stream over a small id space so that hits, moves and evictions
/// all occur often.
pub fn random_ops(seed: u64, count: usize) -> Vec<AlOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count as u64)
        .map(|t| match rng.random_range(0..10) {
            0..=5 => AlOp::Record(AdversaryListEntry {
                warning_issuer_id: rng.random_range(0..50),
                adversary_id: rng.random_range(0..25),
                timestamp: t,
                reason_code: ReasonCode::ALL[rng.random_range(0..4)],
                review_date: t + 1000,
            }),
            6..=8 => AlOp::Touch {
                id: rng.random_range(0..25),
                now: t,
            },
            _ => AlOp::Purge((0..rng.random_range(1..4)).map(|_| rng.random_range(0..25)).collect()),
        })
        .collect()
}

/// Replays `ops` on a real list and on a plain vector model; returns the
/// index and description of the first divergence.
pub fn replay_check(ops: &[AlOp]) -> Result<(), String> {
    let mut al = AdversaryList::with_capacity(DEFAULT_CAPACITY);
    let mut model: Vec<AdversaryListEntry> = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        match op {
            AlOp::Record(e) => {
                let evicted = al.record(*e);
                let mut model_evicted = None;
                if let Some(p) = model.iter().position(|m| m.adversary_id == e.adversary_id) {
                    model.remove(p);
                } else if model.len() == DEFAULT_CAPACITY {
                    model_evicted = model.pop();
                }
                model.insert(0, *e);
                if evicted != model_evicted {
                    return Err(format!("op {i}: evicted {evicted:?}, model evicted {model_evicted:?}"));
                }
            }
            AlOp::Touch { id, now } => {
                let hit = al.touch(*id, *now).is_ok();
                let model_hit = match model.iter().position(|m| m.adversary_id == *id) {
                    Some(p) => {
                        let mut e = model.remove(p);
                        e.timestamp = *now;
                        model.insert(0, e);
                        true
                    }
                    None => false,
                };
                if hit != model_hit {
                    return Err(format!("op {i}: touch {id} hit={hit}, model hit={model_hit}"));
                }
            }
            AlOp::Purge(ids) => {
                let n = al.purge_departed(ids);
                let before = model.len();
                model.retain(|m| !ids.contains(&m.adversary_id));
                if n != before - model.len() {
                    return Err(format!("op {i}: purged {n}, model purged {}", before - model.len()));
                }
            }
        }
        let state: Vec<_> = al.entries().copied().collect();
        if state != model {
            return Err(format!("op {i}: list {:?} differs from model {:?}", al.ids(), model.iter().map(|m| m.adversary_id).collect::<Vec<_>>()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_truth_row_passes() {
        for row in truth_table() {
            assert!(row.passed(), "{}: expected {:?}, got {:?}", row.case.label(), row.expected, row.actual);
        }
    }

    #[test]
    fn replay_matches_model() {
        replay_check(&random_ops(11, 2000)).unwrap();
    }
}
