use std::collections::BTreeMap;

use serde::Serialize;

use crate::certs::{CertError, CertKind, Certificate, Issuer, IDENTITY_LIFETIME_S};
use crate::crypto::{Ciphertext, CryptoProvider, PublicKey, Signature};
use crate::messages::{
    ControlOrder, CrlEntry, CrlRequest, CrlResponse, RsuAccusation, SealedBody, SealedOrder,
};

use super::ProtocolEnv;

/// Credentials handed to a vehicle at enrollment.
#[derive(Debug, Clone)]
pub struct Enrollment {
    pub valid_cert: Certificate,
    /// Identity certificates for consecutive 600 s slots starting at 0.
    pub identities: Vec<Certificate>,
}

#[derive(Debug, Clone)]
struct Registration {
    public_key: PublicKey,
    certs: Vec<Certificate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaDrop {
    Undecryptable,
    BadSignature,
    Stale,
    UnknownVehicle,
}

/// Certification authority: issues credentials and keeps the global CRL.
#[derive(Debug, Clone)]
pub struct CaState {
    issuer: Issuer,
    crl: Vec<CrlEntry>,
    registry: BTreeMap<u64, Registration>,
}

impl CaState {
    pub fn new(issuer: Issuer) -> Self {
        CaState {
            issuer,
            crl: Vec::new(),
            registry: BTreeMap::new(),
        }
    }

    pub fn issuer(&self) -> &Issuer {
        &self.issuer
    }

    pub fn crl(&self) -> &[CrlEntry] {
        &self.crl
    }

    pub fn is_revoked(&self, vehicle_id: u64) -> bool {
        self.crl.iter().any(|e| e.accused_id == vehicle_id)
    }

    /// Certificates issued to a vehicle so far, oldest first.
    pub fn issued_certs(&self, vehicle_id: u64) -> &[Certificate] {
        self.registry.get(&vehicle_id).map_or(&[], |r| &r.certs)
    }

    /// Vehicle public keys, shared with the RSU so it can check accuser
    /// signatures.
    pub fn directory(&self) -> BTreeMap<u64, PublicKey> {
        self.registry.iter().map(|(id, r)| (*id, r.public_key)).collect()
    }

    pub fn enroll(
        &mut self,
        crypto: &dyn CryptoProvider,
        vehicle_id: u64,
        public_key: PublicKey,
        horizon_s: u64,
    ) -> Result<Enrollment, CertError> {
        let fp = crypto.fingerprint(&public_key);
        let valid_cert = self.issuer.issue(crypto, CertKind::Valid, vehicle_id, fp, 0, None)?;
        let slots = horizon_s / IDENTITY_LIFETIME_S + 1;
        let identities = (0..slots)
            .map(|k| self.issuer.issue(crypto, CertKind::Identity, vehicle_id, fp, k * IDENTITY_LIFETIME_S, None))
            .collect::<Result<Vec<_>, _>>()?;
        let mut certs = vec![valid_cert];
        certs.extend_from_slice(&identities);
        self.registry.insert(vehicle_id, Registration { public_key, certs });
        Ok(Enrollment { valid_cert, identities })
    }

    /// Handles an accusation forwarded by the RSU: issues an AC, appends
    /// the CRL record and returns the erase order sealed for the RSU.
    /// `Ok(None)` means the vehicle is already revoked.
    pub fn process_accusation(
        &mut self,
        env: &ProtocolEnv,
        sealed: &Ciphertext,
        now: u64,
    ) -> Result<Option<SealedOrder>, CaDrop> {
        let crypto = env.crypto();
        let acc = RsuAccusation::open(crypto, &self.issuer.keys.private_key, sealed).map_err(|_| CaDrop::Undecryptable)?;
        if !acc.verify(crypto, &env.rsu_key) {
            return Err(CaDrop::BadSignature);
        }
        if !env.timing.is_fresh(acc.timestamp, now) {
            return Err(CaDrop::Stale);
        }
        if self.is_revoked(acc.accused_id) {
            return Ok(None);
        }
        let subject = self.registry.get(&acc.accused_id).ok_or(CaDrop::UnknownVehicle)?;
        let fp = crypto.fingerprint(&subject.public_key);
        let ac = self
            .issuer
            .issue(crypto, CertKind::Adversary, acc.accused_id, fp, now, Some(acc.reason))
            .map_err(|_| CaDrop::UnknownVehicle)?;
        let order = ControlOrder::EraseFromCa {
            reason: acc.reason,
            signature: Signature::ZERO,
            timestamp: now,
            accused_id: acc.accused_id,
            adversary_cert: ac,
        }
        .signed(crypto, &self.issuer.keys.private_key)
        .and_then(|o| o.seal(crypto, &env.rsu_key))
        .map_err(|_| CaDrop::Undecryptable)?;

        self.crl.push(CrlEntry {
            accused_id: acc.accused_id,
            timestamp: now,
            reason: acc.reason,
        });
        if let Some(r) = self.registry.get_mut(&acc.accused_id) {
            r.certs.push(ac);
        }
        Ok(Some(order))
    }

    pub fn serve_crl(&self, _request: &CrlRequest) -> CrlResponse {
        CrlResponse {
            entries: self.crl.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certs::ReasonCode;
    use crate::crypto::KeyPair;
    use crate::messages::OrderKind;
    use crate::protocol::{Deployment, RSU_KEY_SEED};

    fn forwarded(env: &ProtocolEnv, rsu: &KeyPair, accused: u64, ts: u64) -> Ciphertext {
        RsuAccusation::build(env.crypto(), &rsu.private_key, ReasonCode::BogusTrafficInformation, ts, accused)
            .unwrap()
            .seal(env.crypto(), &env.ca_key)
            .unwrap()
    }

    #[test]
    fn forwarded_accusation_yields_erase_order_and_crl_entry() {
        let mut d = Deployment::simple(0..10, 600);
        let rsu = d.env.crypto().generate_keypair(RSU_KEY_SEED);
        let ct = forwarded(&d.env, &rsu, 9, 20);
        let order = d.ca.process_accusation(&d.env, &ct, 20).unwrap().unwrap();
        assert_eq!(order.kind, OrderKind::EraseFromCa);
        match order.open(d.env.crypto(), &rsu.private_key).unwrap() {
            ControlOrder::EraseFromCa {
                reason,
                accused_id,
                adversary_cert,
                timestamp,
                ..
            } => {
                assert_eq!((reason, accused_id, timestamp), (ReasonCode::BogusTrafficInformation, 9, 20));
                assert_eq!(adversary_cert.kind, CertKind::Adversary);
                assert_eq!(adversary_cert.vehicle_id, 9);
                assert_eq!(adversary_cert.encode().len(), 100);
            }
            other => panic!("unexpected order {other:?}"),
        }
        assert_eq!(
            d.ca.crl(),
            &[CrlEntry {
                accused_id: 9,
                timestamp: 20,
                reason: ReasonCode::BogusTrafficInformation
            }]
        );
        assert!(d.ca.issued_certs(9).iter().any(|c| c.is_adversary()));
    }

    #[test]
    fn duplicates_do_not_grow_the_crl() {
        let mut d = Deployment::simple(0..10, 600);
        let rsu = d.env.crypto().generate_keypair(RSU_KEY_SEED);
        assert!(d.ca.process_accusation(&d.env, &forwarded(&d.env, &rsu, 9, 20), 20).unwrap().is_some());
        assert!(d.ca.process_accusation(&d.env, &forwarded(&d.env, &rsu, 9, 21), 21).unwrap().is_none());
        assert_eq!(d.ca.crl().len(), 1);
    }

    #[test]
    fn forged_or_stale_accusations_are_dropped() {
        let mut d = Deployment::simple(0..10, 600);
        let imposter = d.env.crypto().generate_keypair(77);
        assert_eq!(
            d.ca.process_accusation(&d.env, &forwarded(&d.env, &imposter, 9, 20), 20),
            Err(CaDrop::BadSignature)
        );
        let rsu = d.env.crypto().generate_keypair(RSU_KEY_SEED);
        assert_eq!(
            d.ca.process_accusation(&d.env, &forwarded(&d.env, &rsu, 9, 20), 40),
            Err(CaDrop::Stale)
        );
        let wrong_recipient = RsuAccusation::build(d.env.crypto(), &rsu.private_key, ReasonCode::NetworkDisruption, 20, 9)
            .unwrap()
            .seal(d.env.crypto(), &d.env.rsu_key)
            .unwrap();
        assert_eq!(
            d.ca.process_accusation(&d.env, &wrong_recipient, 20),
            Err(CaDrop::Undecryptable)
        );
        assert_eq!(
            d.ca.process_accusation(&d.env, &forwarded(&d.env, &rsu, 4242, 20), 20),
            Err(CaDrop::UnknownVehicle)
        );
        assert!(d.ca.crl().is_empty());
    }

    #[test]
    fn crl_service_returns_append_order() {
        let mut d = Deployment::simple(0..10, 600);
        let req = CrlRequest { requester_id: 0 };
        assert!(d.ca.serve_crl(&req).entries.is_empty());
        let rsu = d.env.crypto().generate_keypair(RSU_KEY_SEED);
        d.ca.process_accusation(&d.env, &forwarded(&d.env, &rsu, 9, 20), 20).unwrap();
        assert_eq!(d.ca.serve_crl(&req).entries.len(), 1);
        d.ca.process_accusation(&d.env, &forwarded(&d.env, &rsu, 3, 25), 25).unwrap();
        let ids: Vec<_> = d.ca.serve_crl(&req).entries.iter().map(|e| e.accused_id).collect();
        assert_eq!(ids, vec![9, 3]);
    }

    #[test]
    fn enrollment_covers_the_horizon() {
        let d = Deployment::simple([5], 1300);
        let certs = d.ca.issued_certs(5);
        assert_eq!(certs[0].kind, CertKind::Valid);
        let starts: Vec<_> = certs[1..].iter().map(|c| c.issued_at).collect();
        assert_eq!(starts, vec![0, 600, 1200]);
    }
}
