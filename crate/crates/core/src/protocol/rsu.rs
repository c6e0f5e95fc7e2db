use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::certs::{CertKind, ValidationResult};
use crate::crypto::{Ciphertext, KeyPair, PublicKey, Signature};
use crate::messages::{
    AccusationReport, ControlOrder, CrlEntry, CrlRequest, CrlResponse, OrderKind, RsuAccusation, SealedBody,
    SealedOrder,
};

use super::ProtocolEnv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RsuDrop {
    /// Not decryptable with the RSU key, or not a well-formed body.
    Undecryptable,
    /// The accuser presented an adversary certificate.
    AdversaryAccuser,
    InvalidCertificate,
    UnknownAccuser,
    BadSignature,
    Stale,
    SelfAccusation,
    WrongOrderKind,
    UnknownAccused,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CollectOutcome {
    /// Counted; not yet over the threshold.
    Counted { accused: u64, accusers: usize, present: usize },
    /// Threshold crossed: sealed accusation for the CA.
    Forward { accused: u64, sealed: Ciphertext },
    /// The accused was already forwarded; nothing to do.
    Absorbed { accused: u64 },
    Dropped(RsuDrop),
}

/// Orders produced from one CA erase order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutedOrders {
    pub accused_id: u64,
    /// Sealed to the accused vehicle.
    pub erase: SealedOrder,
    /// Sealed to the accused vehicle.
    pub insert: SealedOrder,
    /// Sealed to the group key for every vehicle on the road.
    pub add: SealedOrder,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RsuStats {
    pub accusations_counted: u64,
    pub accusations_dropped: u64,
    pub forwarded: u64,
    pub orders_executed: u64,
    pub orders_dropped: u64,
}

/// RSU-side view of the road.
#[derive(Debug, Clone)]
pub struct RoadState {
    pub id: u64,
    keys: KeyPair,
    /// Last time each vehicle was heard, in seconds.
    present: BTreeMap<u64, u64>,
    /// Distinct verified accusers per accused vehicle.
    accusation_box: BTreeMap<u64, BTreeSet<u64>>,
    forwarded: BTreeSet<u64>,
    directory: BTreeMap<u64, PublicKey>,
    crl_mirror: Vec<CrlEntry>,
    pub stats: RsuStats,
}

impl RoadState {
    pub fn new(id: u64, keys: KeyPair, directory: BTreeMap<u64, PublicKey>) -> Self {
        RoadState {
            id,
            keys,
            present: BTreeMap::new(),
            accusation_box: BTreeMap::new(),
            forwarded: BTreeSet::new(),
            directory,
            crl_mirror: Vec::new(),
            stats: RsuStats::default(),
        }
    }

    pub fn keys(&self) -> &KeyPair {
        &self.keys
    }

    pub fn observe_presence(&mut self, vehicle_id: u64, now: u64) {
        let seen = self.present.entry(vehicle_id).or_insert(now);
        *seen = (*seen).max(now);
    }

    /// Vehicles heard within the presence window ending at `now`.
    pub fn present_vehicles(&self, env: &ProtocolEnv, now: u64) -> Vec<u64> {
        self.present
            .iter()
            .filter(|(_, &seen)| now.saturating_sub(seen) <= env.timing.presence_s)
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn accusers_of(&self, accused: u64) -> usize {
        self.accusation_box.get(&accused).map_or(0, BTreeSet::len)
    }

    pub fn was_forwarded(&self, accused: u64) -> bool {
        self.forwarded.contains(&accused)
    }

    /// Strictly more than half of the present vehicles must accuse.
    pub fn threshold_met(accusers: usize, present: usize) -> bool {
        accusers > present / 2
    }

    /// Checks one sealed accusation against the three revocation rules and
    /// forwards to the CA once the distinct-accuser count crosses the
    /// threshold.
    pub fn collect(&mut self, env: &ProtocolEnv, sealed: &Ciphertext, now: u64) -> CollectOutcome {
        let outcome = self.collect_inner(env, sealed, now);
        match &outcome {
            CollectOutcome::Dropped(_) => self.stats.accusations_dropped += 1,
            CollectOutcome::Forward { .. } => {
                self.stats.accusations_counted += 1;
                self.stats.forwarded += 1;
            }
            CollectOutcome::Counted { .. } => self.stats.accusations_counted += 1,
            CollectOutcome::Absorbed { .. } => {}
        }
        outcome
    }

    fn collect_inner(&mut self, env: &ProtocolEnv, sealed: &Ciphertext, now: u64) -> CollectOutcome {
        use CollectOutcome::Dropped;
        let crypto = env.crypto();
        let Ok(report) = AccusationReport::open(crypto, &self.keys.private_key, sealed) else {
            return Dropped(RsuDrop::Undecryptable);
        };
        let vc = &report.accuser_vc;
        if vc.kind != CertKind::Valid {
            return Dropped(RsuDrop::AdversaryAccuser);
        }
        if vc.validate(crypto, &env.ca_key, now) != ValidationResult::Valid {
            return Dropped(RsuDrop::InvalidCertificate);
        }
        let accuser = vc.vehicle_id;
        let Some(key) = self.directory.get(&accuser) else {
            return Dropped(RsuDrop::UnknownAccuser);
        };
        if crypto.fingerprint(key) != vc.key_fingerprint {
            return Dropped(RsuDrop::UnknownAccuser);
        }
        if !report.verify(crypto, key) {
            return Dropped(RsuDrop::BadSignature);
        }
        if !env.timing.is_fresh(report.timestamp, now) {
            return Dropped(RsuDrop::Stale);
        }
        let accused = report.accused_id;
        if accuser == accused {
            return Dropped(RsuDrop::SelfAccusation);
        }
        if self.forwarded.contains(&accused) {
            return CollectOutcome::Absorbed { accused };
        }

        let accusers = {
            let set = self.accusation_box.entry(accused).or_default();
            set.insert(accuser);
            set.len()
        };
        let present = self.present_vehicles(env, now).len();
        if !Self::threshold_met(accusers, present) {
            return CollectOutcome::Counted {
                accused,
                accusers,
                present,
            };
        }
        let sealed = RsuAccusation::build(crypto, &self.keys.private_key, report.reason, now, accused)
            .and_then(|a| a.seal(crypto, &env.ca_key));
        match sealed {
            Ok(sealed) => {
                self.forwarded.insert(accused);
                CollectOutcome::Forward { accused, sealed }
            }
            Err(_) => Dropped(RsuDrop::Undecryptable),
        }
    }

    /// Turns a CA erase order into the erase and insert orders for the
    /// accused vehicle and the add broadcast for the whole road.
    pub fn execute(&mut self, env: &ProtocolEnv, order: &SealedOrder, now: u64) -> Result<ExecutedOrders, RsuDrop> {
        let out = self.execute_inner(env, order, now);
        match out {
            Ok(_) => self.stats.orders_executed += 1,
            Err(_) => self.stats.orders_dropped += 1,
        }
        out
    }

    fn execute_inner(&mut self, env: &ProtocolEnv, order: &SealedOrder, now: u64) -> Result<ExecutedOrders, RsuDrop> {
        let crypto = env.crypto();
        if order.kind != OrderKind::EraseFromCa {
            return Err(RsuDrop::WrongOrderKind);
        }
        let opened = order
            .open(crypto, &self.keys.private_key)
            .map_err(|_| RsuDrop::Undecryptable)?;
        if !opened.verify(crypto, &env.ca_key) {
            return Err(RsuDrop::BadSignature);
        }
        let ControlOrder::EraseFromCa {
            reason,
            timestamp,
            accused_id,
            adversary_cert,
            ..
        } = opened
        else {
            return Err(RsuDrop::WrongOrderKind);
        };
        if !env.timing.is_fresh(timestamp, now) {
            return Err(RsuDrop::Stale);
        }
        let accused_key = *self.directory.get(&accused_id).ok_or(RsuDrop::UnknownAccused)?;
        let sign_key = &self.keys.private_key;
        let seal = |o: ControlOrder, to: &PublicKey| {
            o.signed(crypto, sign_key)
                .and_then(|o| o.seal(crypto, to))
                .map_err(|_| RsuDrop::Undecryptable)
        };
        let erase = seal(
            ControlOrder::EraseToVehicle {
                reason,
                signature: Signature::ZERO,
                timestamp: now,
                accused_id,
            },
            &accused_key,
        )?;
        let insert = seal(
            ControlOrder::InsertAc {
                adversary_cert,
                timestamp: now,
                signature: Signature::ZERO,
            },
            &accused_key,
        )?;
        let add = seal(
            ControlOrder::AddBroadcast {
                accused_id,
                timestamp: now,
                signature: Signature::ZERO,
                reason,
                review_date: adversary_cert.review_date,
            },
            &env.group.public_key,
        )?;
        self.crl_mirror.push(CrlEntry {
            accused_id,
            timestamp,
            reason,
        });
        Ok(ExecutedOrders {
            accused_id,
            erase,
            insert,
            add,
        })
    }

    /// The RSU answers CRL requests from its mirror of executed revocations.
    pub fn serve_crl(&self, _request: &CrlRequest) -> CrlResponse {
        CrlResponse {
            entries: self.crl_mirror.clone(),
        }
    }
}
