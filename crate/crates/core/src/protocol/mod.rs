//! Agent behaviour: the vehicle receive pipeline, warnings, suspicion
//! tracking, and the RSU and CA roles of the revocation protocol.
//!
//! Every agent is a plain single-owner state machine. Agents never share
//! state; they only exchange [`crate::messages`] values.

mod ca;
mod rsu;
mod suspicion;
mod vehicle;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

pub use ca::{CaDrop, CaState, Enrollment};
pub use rsu::{CollectOutcome, ExecutedOrders, RoadState, RsuDrop, RsuStats};
pub use suspicion::{ObservedClaim, SuspicionTracker, WindowReport, DEFAULT_ACCUSE_AFTER};
pub use vehicle::{
    OrderOutcome, ReceiveOutcome, RevocationCheck, Vehicle, VehicleCounters, WarningOutcome, WindowOutcome,
};

use crate::certs::{CertError, Issuer};
use crate::crypto::{CryptoProvider, DigestBackend, KeyPair, PublicKey};

pub const CA_ID: u64 = 1_000_000_001;
pub const RSU_ID: u64 = 1_000_000_002;

const CA_KEY_SEED: u64 = 1;
const RSU_KEY_SEED: u64 = 2;
const GROUP_KEY_SEED: u64 = 3;
const VEHICLE_KEY_SEED_BASE: u64 = 1 << 32;

pub fn vehicle_key_seed(vehicle_id: u64) -> u64 {
    VEHICLE_KEY_SEED_BASE.wrapping_add(vehicle_id)
}

/// The CA signer every deployment uses.
pub fn ca_issuer(crypto: &dyn CryptoProvider) -> Issuer {
    Issuer::new(CA_ID, crypto.generate_keypair(CA_KEY_SEED))
}

/// Windows that govern freshness, presence and suspicion, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Timing {
    pub freshness_s: u64,
    pub presence_s: u64,
    pub observation_s: u64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            freshness_s: 5,
            presence_s: 30,
            observation_s: 10,
        }
    }
}

impl Timing {
    pub fn is_fresh(&self, timestamp: u64, now: u64) -> bool {
        timestamp.abs_diff(now) <= self.freshness_s
    }
}

/// Public facts every agent on the road knows.
#[derive(Clone)]
pub struct ProtocolEnv {
    pub crypto: Arc<dyn CryptoProvider>,
    pub ca_id: u64,
    pub ca_key: PublicKey,
    pub rsu_id: u64,
    pub rsu_key: PublicKey,
    /// Road-wide group key sealing status certificates and add broadcasts.
    pub group: KeyPair,
    pub timing: Timing,
}

impl ProtocolEnv {
    pub fn crypto(&self) -> &dyn CryptoProvider {
        &*self.crypto
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RejectCause {
    MalformedCert,
    BadSignature,
    ExpiredIdentity,
    IdentityMismatch,
}

/// Outcome of one received data message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ReceiveDecision {
    Accept,
    IgnoreKnownAdversary,
    /// The sender presented an AC; it was recorded and a warning is due.
    NewAdversaryDetected,
    Reject(RejectCause),
}

impl ReceiveDecision {
    pub fn label(self) -> &'static str {
        match self {
            ReceiveDecision::Accept => "accept",
            ReceiveDecision::IgnoreKnownAdversary => "ignore_known_adversary",
            ReceiveDecision::NewAdversaryDetected => "new_adversary_detected",
            ReceiveDecision::Reject(RejectCause::MalformedCert) => "reject_malformed_cert",
            ReceiveDecision::Reject(RejectCause::BadSignature) => "reject_bad_signature",
            ReceiveDecision::Reject(RejectCause::ExpiredIdentity) => "reject_expired_identity",
            ReceiveDecision::Reject(RejectCause::IdentityMismatch) => "reject_identity_mismatch",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VehicleSpec {
    pub id: u64,
    /// Whether the on-board tamper-proof device honours erase/insert orders.
    pub compliant: bool,
}

/// A fully provisioned road: CA, one RSU, and enrolled vehicles.
pub struct Deployment {
    pub env: ProtocolEnv,
    pub ca: CaState,
    pub rsu: RoadState,
    pub vehicles: BTreeMap<u64, Vehicle>,
}

impl Deployment {
    /// Enrolls every vehicle with a VC and enough identity certificates to
    /// cover `[0, horizon_s]`.
    pub fn new(
        crypto: Arc<dyn CryptoProvider>,
        vehicles: &[VehicleSpec],
        horizon_s: u64,
        al_capacity: usize,
        timing: Timing,
    ) -> Result<Deployment, CertError> {
        let issuer = ca_issuer(&*crypto);
        let rsu_keys = crypto.generate_keypair(RSU_KEY_SEED);
        let env = ProtocolEnv {
            ca_id: CA_ID,
            ca_key: issuer.keys.public_key,
            rsu_id: RSU_ID,
            rsu_key: rsu_keys.public_key,
            group: crypto.generate_keypair(GROUP_KEY_SEED),
            timing,
            crypto,
        };
        let mut ca = CaState::new(issuer);
        let mut agents = BTreeMap::new();
        for spec in vehicles {
            let keys = env.crypto.generate_keypair(vehicle_key_seed(spec.id));
            let enrollment = ca.enroll(env.crypto(), spec.id, keys.public_key, horizon_s)?;
            agents.insert(
                spec.id,
                Vehicle::new(spec.id, keys, enrollment, al_capacity, spec.compliant),
            );
        }
        let rsu = RoadState::new(RSU_ID, rsu_keys, ca.directory());
        Ok(Deployment {
            env,
            ca,
            rsu,
            vehicles: agents,
        })
    }

    /// Deployment over the default digest backend with default timing.
    pub fn simple(vehicle_ids: impl IntoIterator<Item = u64>, horizon_s: u64) -> Deployment {
        let specs: Vec<_> = vehicle_ids
            .into_iter()
            .map(|id| VehicleSpec { id, compliant: true })
            .collect();
        Deployment::new(
            Arc::new(DigestBackend),
            &specs,
            horizon_s,
            crate::adversary_list::DEFAULT_CAPACITY,
            Timing::default(),
        )
        .expect("enrollment with the digest backend cannot fail")
    }

    pub fn vehicle(&self, id: u64) -> &Vehicle {
        &self.vehicles[&id]
    }

    pub fn vehicle_mut(&mut self, id: u64) -> &mut Vehicle {
        self.vehicles.get_mut(&id).expect("unknown vehicle id")
    }
}
