use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use crate::adversary_list::{AdversaryList, AdversaryListEntry};
use crate::certs::{CertKind, Certificate, ReasonCode, ValidationResult};
use crate::crypto::{Ciphertext, KeyPair, PrivateKey, Signature};
use crate::messages::{
    AccusationReport, ControlOrder, CrlBroadcast, DataMessage, MessageCategory, MessageError, OrderKind, SealedBody,
    SealedOrder, WarningMessage,
};

use super::suspicion::{ObservedClaim, SuspicionTracker};
use super::{Enrollment, ProtocolEnv, ReceiveDecision, RejectCause};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct VehicleCounters {
    pub decrypts: u64,
    pub al_lookups: u64,
    pub crl_lookups: u64,
}

/// Which local structure the first receive step consults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevocationCheck {
    AdversaryList,
    /// Baseline: the latest CRL pushed by the RSU.
    Crl,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiveOutcome {
    pub decision: ReceiveDecision,
    /// Warning to broadcast after a new adversary was detected.
    pub warning: Option<WarningMessage>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WarningOutcome {
    Recorded { adversary: u64 },
    DroppedStale,
    DroppedAdversaryIssuer,
    DroppedInvalidIssuer,
    DroppedBadSignature,
    DroppedSelf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrderOutcome {
    Recorded { adversary: u64 },
    CredentialsErased,
    AdversaryCertInstalled,
    IgnoredNonCompliant,
    IgnoredSelf,
    DroppedWrongRecipient,
    DroppedBadSignature,
    DroppedStale,
    DroppedReplay,
    DroppedInvalid,
}

#[derive(Debug, Clone, Default)]
pub struct WindowOutcome {
    pub contradictions: Vec<(u64, u16)>,
    /// Sealed accusations for the RSU, keyed by accused vehicle.
    pub accusations: Vec<(u64, Ciphertext)>,
}

/// One vehicle agent.
#[derive(Debug, Clone)]
pub struct Vehicle {
    pub id: u64,
    keys: KeyPair,
    valid_cert: Option<Certificate>,
    adversary_cert: Option<Certificate>,
    identities: Vec<Certificate>,
    al: AdversaryList,
    tracker: SuspicionTracker,
    window: Vec<ObservedClaim>,
    compliant: bool,
    erased: bool,
    seen_orders: HashSet<(OrderKind, Signature)>,
    latest_crl: Option<BTreeSet<u64>>,
    pub counters: VehicleCounters,
}

impl Vehicle {
    pub fn new(id: u64, keys: KeyPair, enrollment: Enrollment, al_capacity: usize, compliant: bool) -> Self {
        Vehicle {
            id,
            keys,
            valid_cert: Some(enrollment.valid_cert),
            adversary_cert: None,
            identities: enrollment.identities,
            al: AdversaryList::with_capacity(al_capacity),
            tracker: SuspicionTracker::default(),
            window: Vec::new(),
            compliant,
            erased: false,
            seen_orders: HashSet::new(),
            latest_crl: None,
            counters: VehicleCounters::default(),
        }
    }

    pub fn keys(&self) -> &KeyPair {
        &self.keys
    }

    pub fn adversary_list(&self) -> &AdversaryList {
        &self.al
    }

    pub fn adversary_list_mut(&mut self) -> &mut AdversaryList {
        &mut self.al
    }

    pub fn tracker(&self) -> &SuspicionTracker {
        &self.tracker
    }

    pub fn is_compliant(&self) -> bool {
        self.compliant
    }

    pub fn credentials_erased(&self) -> bool {
        self.erased
    }

    pub fn valid_cert(&self) -> Option<&Certificate> {
        self.valid_cert.as_ref()
    }

    pub fn adversary_cert(&self) -> Option<&Certificate> {
        self.adversary_cert.as_ref()
    }

    /// Certificate that goes into the status slot of outgoing messages.
    pub fn status_cert(&self) -> Option<&Certificate> {
        self.adversary_cert.as_ref().or(self.valid_cert.as_ref())
    }

    pub fn identity_at(&self, now: u64) -> Option<&Certificate> {
        self.identities
            .iter()
            .find(|c| c.issued_at <= now && now < c.expires_at)
    }

    pub fn latest_crl(&self) -> Option<&BTreeSet<u64>> {
        self.latest_crl.as_ref()
    }

    fn signing_key(&self) -> PrivateKey {
        if self.erased {
            PrivateKey::ERASED
        } else {
            self.keys.private_key
        }
    }

    /// Builds the next outgoing data message. A vehicle holding an AC puts
    /// it in both certificate slots.
    pub fn compose(
        &self,
        env: &ProtocolEnv,
        category: MessageCategory,
        claim: i64,
        now: u64,
    ) -> Result<DataMessage, MessageError> {
        let no_cred = || MessageError::Malformed {
            offset: 0,
            reason: format!("vehicle {} has no usable credential at t={now}", self.id),
        };
        let (identity, status) = match &self.adversary_cert {
            Some(ac) => (*ac, *ac),
            None => (
                *self.identity_at(now).ok_or_else(no_cred)?,
                *self.valid_cert.as_ref().ok_or_else(no_cred)?,
            ),
        };
        DataMessage::build(
            env.crypto(),
            &self.keys.public_key,
            &self.signing_key(),
            &env.group.public_key,
            self.id,
            category,
            claim,
            now,
            identity,
            &status,
        )
    }

    /// Receive pipeline: the adversary list (or baseline CRL) is consulted
    /// before any decryption; only unknown senders get their status
    /// certificate decrypted and checked.
    pub fn receive(&mut self, env: &ProtocolEnv, msg: &DataMessage, now: u64, check: RevocationCheck) -> ReceiveOutcome {
        let sender = msg.sender_id;
        let known = match check {
            RevocationCheck::AdversaryList => {
                self.counters.al_lookups += 1;
                self.al.touch(sender, now).is_ok()
            }
            RevocationCheck::Crl => {
                self.counters.crl_lookups += 1;
                self.latest_crl.as_ref().is_some_and(|crl| crl.contains(&sender))
            }
        };
        if known {
            return decided(ReceiveDecision::IgnoreKnownAdversary);
        }

        let crypto = env.crypto();
        self.counters.decrypts += 1;
        let status = match crypto
            .decrypt(&env.group.private_key, &msg.status_cert)
            .ok()
            .and_then(|plain| Certificate::decode(&plain).ok())
        {
            Some(c) => c,
            None => return reject(RejectCause::MalformedCert),
        };
        match status.validate(crypto, &env.ca_key, now) {
            ValidationResult::Valid => {}
            ValidationResult::BadSignature => return reject(RejectCause::BadSignature),
            ValidationResult::InvariantViolation(_) | ValidationResult::Expired => {
                return reject(RejectCause::MalformedCert)
            }
        }

        match status.kind {
            CertKind::Identity => reject(RejectCause::MalformedCert),
            CertKind::Adversary => {
                if status.vehicle_id != sender {
                    return reject(RejectCause::IdentityMismatch);
                }
                let reason = status.reason().unwrap_or(ReasonCode::BogusTrafficInformation);
                if check == RevocationCheck::Crl {
                    return decided(ReceiveDecision::NewAdversaryDetected);
                }
                self.al.record(AdversaryListEntry {
                    warning_issuer_id: self.id,
                    adversary_id: sender,
                    timestamp: now,
                    reason_code: reason,
                    review_date: status.review_date,
                });
                ReceiveOutcome {
                    decision: ReceiveDecision::NewAdversaryDetected,
                    warning: self.make_warning(env, sender, now, reason, status.review_date),
                }
            }
            CertKind::Valid => {
                if !msg.verify(crypto) {
                    return reject(RejectCause::BadSignature);
                }
                let identity = &msg.identity_cert;
                if identity.kind != CertKind::Identity {
                    return reject(RejectCause::MalformedCert);
                }
                match identity.validate(crypto, &env.ca_key, now) {
                    ValidationResult::Valid => {}
                    ValidationResult::Expired => return reject(RejectCause::ExpiredIdentity),
                    ValidationResult::BadSignature => return reject(RejectCause::BadSignature),
                    ValidationResult::InvariantViolation(_) => return reject(RejectCause::MalformedCert),
                }
                let key_fp = crypto.fingerprint(&msg.sender_key);
                if identity.vehicle_id != sender
                    || status.vehicle_id != sender
                    || identity.key_fingerprint != key_fp
                    || status.key_fingerprint != key_fp
                {
                    return reject(RejectCause::IdentityMismatch);
                }
                self.window.push(ObservedClaim {
                    sender,
                    category: msg.category.code,
                    claim: msg.claim,
                });
                decided(ReceiveDecision::Accept)
            }
        }
    }

    fn make_warning(
        &self,
        env: &ProtocolEnv,
        adversary: u64,
        now: u64,
        reason: ReasonCode,
        review_date: u64,
    ) -> Option<WarningMessage> {
        if self.erased || self.adversary_cert.is_some() {
            return None;
        }
        let vc = self.valid_cert?;
        WarningMessage::build(
            env.crypto(),
            &self.keys.public_key,
            &self.keys.private_key,
            self.id,
            adversary,
            now,
            reason,
            review_date,
            vc,
        )
        .ok()
    }

    pub fn process_warning(&mut self, env: &ProtocolEnv, w: &WarningMessage, now: u64) -> WarningOutcome {
        let crypto = env.crypto();
        if w.adversary_id == self.id {
            return WarningOutcome::DroppedSelf;
        }
        if !env.timing.is_fresh(w.timestamp, now) {
            return WarningOutcome::DroppedStale;
        }
        if w.issuer_vc.kind != CertKind::Valid || self.al.contains(w.warning_issuer_id) {
            return WarningOutcome::DroppedAdversaryIssuer;
        }
        if w.issuer_vc.validate(crypto, &env.ca_key, now) != ValidationResult::Valid
            || w.issuer_vc.vehicle_id != w.warning_issuer_id
            || w.issuer_vc.key_fingerprint != crypto.fingerprint(&w.issuer_key)
        {
            return WarningOutcome::DroppedInvalidIssuer;
        }
        if !w.verify(crypto) {
            return WarningOutcome::DroppedBadSignature;
        }
        self.al.record(AdversaryListEntry {
            warning_issuer_id: w.warning_issuer_id,
            adversary_id: w.adversary_id,
            timestamp: w.timestamp,
            reason_code: w.reason_code,
            review_date: w.review_date,
        });
        WarningOutcome::Recorded {
            adversary: w.adversary_id,
        }
    }

    /// Closes the current observation window and seals an accusation for
    /// every sender that contradicted the majority often enough.
    pub fn close_window(&mut self, env: &ProtocolEnv, now: u64) -> WindowOutcome {
        let batch = std::mem::take(&mut self.window);
        let report = self.tracker.observe(&batch);
        let mut out = WindowOutcome {
            contradictions: report.contradictions,
            accusations: Vec::new(),
        };
        if self.erased || self.adversary_cert.is_some() {
            return out;
        }
        let Some(vc) = self.valid_cert else {
            return out;
        };
        for accused in report.suspects {
            if self.al.contains(accused) {
                continue;
            }
            let sealed = AccusationReport::build(
                env.crypto(),
                &self.keys.private_key,
                ReasonCode::BogusTrafficInformation,
                vc,
                now,
                accused,
            )
            .and_then(|r| r.seal(env.crypto(), &env.rsu_key));
            if let Ok(ct) = sealed {
                out.accusations.push((accused, ct));
            }
        }
        out
    }

    /// Applies an RSU order: add broadcasts feed the adversary list; erase
    /// and insert orders are honoured only by a compliant device.
    pub fn apply_order(&mut self, env: &ProtocolEnv, order: &SealedOrder, now: u64) -> OrderOutcome {
        let crypto = env.crypto();
        let key = match order.kind {
            OrderKind::AddBroadcast => env.group.private_key,
            OrderKind::EraseToVehicle | OrderKind::InsertAc => self.keys.private_key,
            OrderKind::EraseFromCa | OrderKind::CrlAdd => return OrderOutcome::DroppedInvalid,
        };
        self.counters.decrypts += 1;
        let opened = match order.open(crypto, &key) {
            Ok(o) => o,
            Err(MessageError::Crypto(crate::crypto::CryptoError::WrongRecipient)) => {
                return OrderOutcome::DroppedWrongRecipient
            }
            Err(_) => return OrderOutcome::DroppedInvalid,
        };
        if !opened.verify(crypto, &env.rsu_key) {
            return OrderOutcome::DroppedBadSignature;
        }
        let ts = opened.timestamp();
        if !env.timing.is_fresh(ts, now) {
            return OrderOutcome::DroppedStale;
        }
        let sig = opened.signature().unwrap_or(Signature::ZERO);
        if !self.seen_orders.insert((order.kind, sig)) {
            return OrderOutcome::DroppedReplay;
        }

        match opened {
            ControlOrder::AddBroadcast {
                accused_id,
                timestamp,
                reason,
                review_date,
                ..
            } => {
                if accused_id == self.id {
                    return OrderOutcome::IgnoredSelf;
                }
                self.al.record(AdversaryListEntry {
                    warning_issuer_id: env.rsu_id,
                    adversary_id: accused_id,
                    timestamp,
                    reason_code: reason,
                    review_date,
                });
                OrderOutcome::Recorded { adversary: accused_id }
            }
            ControlOrder::EraseToVehicle { accused_id, .. } => {
                if accused_id != self.id {
                    return OrderOutcome::DroppedInvalid;
                }
                if !self.compliant {
                    return OrderOutcome::IgnoredNonCompliant;
                }
                self.valid_cert = None;
                self.identities.clear();
                self.erased = true;
                OrderOutcome::CredentialsErased
            }
            ControlOrder::InsertAc { adversary_cert, .. } => {
                if adversary_cert.kind != CertKind::Adversary
                    || adversary_cert.vehicle_id != self.id
                    || adversary_cert.validate(crypto, &env.ca_key, now) != ValidationResult::Valid
                {
                    return OrderOutcome::DroppedInvalid;
                }
                if !self.compliant {
                    return OrderOutcome::IgnoredNonCompliant;
                }
                self.valid_cert = None;
                self.identities.clear();
                self.erased = true;
                self.adversary_cert = Some(adversary_cert);
                OrderOutcome::AdversaryCertInstalled
            }
            ControlOrder::EraseFromCa { .. } | ControlOrder::CrlAdd(_) => OrderOutcome::DroppedInvalid,
        }
    }

    /// Baseline mode: replaces the local CRL copy with a verified RSU push.
    pub fn apply_crl_broadcast(&mut self, env: &ProtocolEnv, b: &CrlBroadcast) -> bool {
        if !b.verify(env.crypto(), &env.rsu_key) {
            return false;
        }
        self.latest_crl = Some(b.entries.iter().map(|e| e.accused_id).collect());
        true
    }

    pub fn purge_departed(&mut self, departed: &BTreeSet<u64>) -> usize {
        self.al.purge_departed(departed)
    }
}

fn decided(decision: ReceiveDecision) -> ReceiveOutcome {
    ReceiveOutcome {
        decision,
        warning: None,
    }
}

fn reject(cause: RejectCause) -> ReceiveOutcome {
    decided(ReceiveDecision::Reject(cause))
}
