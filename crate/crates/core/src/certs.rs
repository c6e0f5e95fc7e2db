//! Valid, adversary and identity certificates.
//!
//! All three kinds share one fixed 100-byte big-endian layout:
//!
//! ```text
//! off len field
//!   0   1 type (1 = VC, 2 = AC, 3 = Identity)
//!   1   8 vehicle_id
//!   9   8 issuer_id
//!  17   8 issued_at
//!  25   8 expires_at
//!  33   1 reason code (0 unless AC)
//!  34   8 review_date (0 unless AC)
//!  42  16 key fingerprint of the subject
//!  58   2 reserved, zero
//!  60  40 issuer signature over bytes 0..60
//! ```

use std::fmt;

use thiserror::Error;

use crate::crypto::{CryptoProvider, Fingerprint, KeyPair, PublicKey, Signature, FINGERPRINT_LEN, SIGNATURE_LEN};

pub const CERT_LEN: usize = 100;
pub const SIGNED_LEN: usize = 60;
/// Lifetime of an identity (pseudonym) certificate.
pub const IDENTITY_LIFETIME_S: u64 = 600;
/// Review period of an adversary certificate, 365 days.
pub const AC_REVIEW_PERIOD_S: u64 = 31_536_000;
/// Validity period stamped on valid certificates.
pub const VC_LIFETIME_S: u64 = AC_REVIEW_PERIOD_S;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertError {
    #[error("malformed certificate: {0}")]
    Malformed(String),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("unknown revocation reason code {0}")]
    UnknownReason(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum CertKind {
    Valid,
    Adversary,
    Identity,
}

impl CertKind {
    pub fn tag(self) -> u8 {
        match self {
            CertKind::Valid => 1,
            CertKind::Adversary => 2,
            CertKind::Identity => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<CertKind> {
        match tag {
            1 => Some(CertKind::Valid),
            2 => Some(CertKind::Adversary),
            3 => Some(CertKind::Identity),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CertKind::Valid => "VC",
            CertKind::Adversary => "AC",
            CertKind::Identity => "Identity",
        }
    }
}

/// Why a vehicle was revoked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum ReasonCode {
    BogusTrafficInformation = 1,
    NetworkDisruption = 2,
    IdentityPositionSpeedCheating = 3,
    IdentityUncovering = 4,
}

impl ReasonCode {
    pub const ALL: [ReasonCode; 4] = [
        ReasonCode::BogusTrafficInformation,
        ReasonCode::NetworkDisruption,
        ReasonCode::IdentityPositionSpeedCheating,
        ReasonCode::IdentityUncovering,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<ReasonCode, CertError> {
        match code {
            1 => Ok(ReasonCode::BogusTrafficInformation),
            2 => Ok(ReasonCode::NetworkDisruption),
            3 => Ok(ReasonCode::IdentityPositionSpeedCheating),
            4 => Ok(ReasonCode::IdentityUncovering),
            other => Err(CertError::UnknownReason(other)),
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ReasonCode::BogusTrafficInformation => "Bogus traffic information",
            ReasonCode::NetworkDisruption => "Disruption of network operation",
            ReasonCode::IdentityPositionSpeedCheating => "Cheating with identity, position or speed",
            ReasonCode::IdentityUncovering => "Uncovering the identities of other vehicles",
        }
    }
}

pub fn reason_lookup(code: u8) -> Result<&'static str, CertError> {
    ReasonCode::from_code(code).map(ReasonCode::description)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Certificate {
    pub kind: CertKind,
    pub vehicle_id: u64,
    pub issuer_id: u64,
    pub issued_at: u64,
    pub expires_at: u64,
    /// Raw revocation reason; 0 for VC and identity certificates.
    pub reason_code: u8,
    pub review_date: u64,
    pub key_fingerprint: Fingerprint,
    pub signature: Signature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationResult {
    Valid,
    InvariantViolation(&'static str),
    BadSignature,
    Expired,
}

impl ValidationResult {
    pub fn is_valid(self) -> bool {
        self == ValidationResult::Valid
    }
}

/// Identity and keys of a certificate issuer (the CA).
#[derive(Debug, Clone, Copy)]
pub struct Issuer {
    pub id: u64,
    pub keys: KeyPair,
}

impl Issuer {
    pub fn new(id: u64, keys: KeyPair) -> Self {
        Issuer { id, keys }
    }

    /// Issues and signs a certificate. `reason` must be present exactly
    /// when `kind` is [`CertKind::Adversary`].
    pub fn issue(
        &self,
        crypto: &dyn CryptoProvider,
        kind: CertKind,
        vehicle_id: u64,
        subject_key: Fingerprint,
        now: u64,
        reason: Option<ReasonCode>,
    ) -> Result<Certificate, CertError> {
        let (expires_at, reason_code, review_date) = match (kind, reason) {
            (CertKind::Adversary, Some(r)) => {
                let review = now + AC_REVIEW_PERIOD_S;
                (review, r.code(), review)
            }
            (CertKind::Adversary, None) => {
                return Err(CertError::InvalidInput("adversary certificate requires a reason"))
            }
            (_, Some(_)) => {
                return Err(CertError::InvalidInput("reason is only allowed on adversary certificates"))
            }
            (CertKind::Valid, None) => (now + VC_LIFETIME_S, 0, 0),
            (CertKind::Identity, None) => (now + IDENTITY_LIFETIME_S, 0, 0),
        };
        let mut cert = Certificate {
            kind,
            vehicle_id,
            issuer_id: self.id,
            issued_at: now,
            expires_at,
            reason_code,
            review_date,
            key_fingerprint: subject_key,
            signature: Signature::ZERO,
        };
        cert.signature = crypto
            .sign(&self.keys.private_key, &cert.signed_bytes())
            .map_err(|_| CertError::InvalidInput("issuer failed to sign"))?;
        Ok(cert)
    }
}

impl Certificate {
    pub fn is_adversary(&self) -> bool {
        self.kind == CertKind::Adversary
    }

    pub fn reason(&self) -> Option<ReasonCode> {
        ReasonCode::from_code(self.reason_code).ok()
    }

    pub fn signed_bytes(&self) -> [u8; SIGNED_LEN] {
        let full = self.encode();
        let mut out = [0u8; SIGNED_LEN];
        out.copy_from_slice(&full[..SIGNED_LEN]);
        out
    }

    pub fn encode(&self) -> [u8; CERT_LEN] {
        let mut out = [0u8; CERT_LEN];
        out[0] = self.kind.tag();
        out[1..9].copy_from_slice(&self.vehicle_id.to_be_bytes());
        out[9..17].copy_from_slice(&self.issuer_id.to_be_bytes());
        out[17..25].copy_from_slice(&self.issued_at.to_be_bytes());
        out[25..33].copy_from_slice(&self.expires_at.to_be_bytes());
        out[33] = self.reason_code;
        out[34..42].copy_from_slice(&self.review_date.to_be_bytes());
        out[42..58].copy_from_slice(&self.key_fingerprint.0);
        // 58..60 reserved
        out[60..100].copy_from_slice(&self.signature.0);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Certificate, CertError> {
        if bytes.len() != CERT_LEN {
            return Err(CertError::Malformed(format!(
                "certificate must be {CERT_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let kind = CertKind::from_tag(bytes[0])
            .ok_or_else(|| CertError::Malformed(format!("unknown certificate type byte {:#04x}", bytes[0])))?;
        if bytes[58..60] != [0, 0] {
            return Err(CertError::Malformed("reserved bytes 58..60 must be zero".into()));
        }
        let u64_at = |off: usize| {
            let mut b = [0u8; 8];
            b.copy_from_slice(&bytes[off..off + 8]);
            u64::from_be_bytes(b)
        };
        let mut fp = [0u8; FINGERPRINT_LEN];
        fp.copy_from_slice(&bytes[42..58]);
        let mut sig = [0u8; SIGNATURE_LEN];
        sig.copy_from_slice(&bytes[60..100]);
        Ok(Certificate {
            kind,
            vehicle_id: u64_at(1),
            issuer_id: u64_at(9),
            issued_at: u64_at(17),
            expires_at: u64_at(25),
            reason_code: bytes[33],
            review_date: u64_at(34),
            key_fingerprint: Fingerprint(fp),
            signature: Signature(sig),
        })
    }

    /// Structural rules for each kind, checked without any key.
    pub fn check_invariants(&self) -> Result<(), &'static str> {
        match self.kind {
            CertKind::Adversary => {
                if ReasonCode::from_code(self.reason_code).is_err() {
                    return Err("adversary certificate reason code outside 1..=4");
                }
                if self.review_date != self.issued_at.wrapping_add(AC_REVIEW_PERIOD_S) {
                    return Err("adversary certificate review date must be one year after issue");
                }
            }
            CertKind::Valid => {
                if self.reason_code != 0 || self.review_date != 0 {
                    return Err("valid certificate carries revocation fields");
                }
            }
            CertKind::Identity => {
                if self.reason_code != 0 || self.review_date != 0 {
                    return Err("identity certificate carries revocation fields");
                }
                if self.expires_at != self.issued_at.wrapping_add(IDENTITY_LIFETIME_S) {
                    return Err("identity certificate lifetime must be 600 s");
                }
            }
        }
        Ok(())
    }

    /// Checks invariants, then the issuer signature, then expiry of
    /// identity certificates. Returns the first failing check.
    pub fn validate(&self, crypto: &dyn CryptoProvider, issuer_key: &PublicKey, now: u64) -> ValidationResult {
        if let Err(why) = self.check_invariants() {
            return ValidationResult::InvariantViolation(why);
        }
        if !crypto.verify(issuer_key, &self.signed_bytes(), &self.signature) {
            return ValidationResult::BadSignature;
        }
        if self.kind == CertKind::Identity && now >= self.expires_at {
            return ValidationResult::Expired;
        }
        ValidationResult::Valid
    }

    /// Two-line dump: a `key=value` summary and the raw hex.
    pub fn dump(&self) -> String {
        format!("{self}\nhex={}", hex::encode(self.encode()))
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "type={} vehicle={} issuer={} issued={} expires={} reason={}",
            self.kind.label(),
            self.vehicle_id,
            self.issuer_id,
            self.issued_at,
            self.expires_at,
            self.reason_code
        )?;
        if let Some(r) = self.reason().filter(|_| self.is_adversary()) {
            write!(f, " reason_text=\"{}\"", r.description())?;
        }
        write!(
            f,
            " review={} key={} sig={}",
            self.review_date,
            hex::encode(self.key_fingerprint.0),
            hex::encode(&self.signature.0[..8])
        )
    }
}

/// Validates many certificates against one issuer key.
#[cfg(feature = "parallel")]
pub fn validate_batch(
    crypto: &dyn CryptoProvider,
    certs: &[Certificate],
    issuer_key: &PublicKey,
    now: u64,
) -> Vec<ValidationResult> {
    use rayon::prelude::*;
    certs.par_iter().map(|c| c.validate(crypto, issuer_key, now)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn validate_batch(
    crypto: &dyn CryptoProvider,
    certs: &[Certificate],
    issuer_key: &PublicKey,
    now: u64,
) -> Vec<ValidationResult> {
    validate_batch_sequential(crypto, certs, issuer_key, now)
}

pub fn validate_batch_sequential(
    crypto: &dyn CryptoProvider,
    certs: &[Certificate],
    issuer_key: &PublicKey,
    now: u64,
) -> Vec<ValidationResult> {
    certs.iter().map(|c| c.validate(crypto, issuer_key, now)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::DigestBackend;
    use proptest::prelude::*;

    fn ca() -> Issuer {
        Issuer::new(1, DigestBackend.generate_keypair(1))
    }

    fn subject() -> Fingerprint {
        DigestBackend.generate_keypair(42).fingerprint
    }

    #[test]
    fn adversary_certificate_review_date_is_one_year_out() {
        let c = ca()
            .issue(&DigestBackend, CertKind::Adversary, 42, subject(), 0, Some(ReasonCode::BogusTrafficInformation))
            .unwrap();
        assert_eq!(c.review_date, 31_536_000);
        assert_eq!(c.reason_code, 1);
    }

    #[test]
    fn identity_certificate_lives_ten_minutes() {
        let c = ca().issue(&DigestBackend, CertKind::Identity, 42, subject(), 0, None).unwrap();
        assert_eq!(c.expires_at, 600);
        assert_eq!(c.validate(&DigestBackend, &ca().keys.public_key, 599), ValidationResult::Valid);
        assert_eq!(c.validate(&DigestBackend, &ca().keys.public_key, 601), ValidationResult::Expired);
    }

    #[test]
    fn valid_certificate_has_no_revocation_fields() {
        let c = ca().issue(&DigestBackend, CertKind::Valid, 42, subject(), 0, None).unwrap();
        assert_eq!((c.reason_code, c.review_date), (0, 0));
    }

    #[test]
    fn reason_must_match_kind() {
        let r = Some(ReasonCode::NetworkDisruption);
        assert!(matches!(
            ca().issue(&DigestBackend, CertKind::Valid, 42, subject(), 0, r),
            Err(CertError::InvalidInput(_))
        ));
        assert!(matches!(
            ca().issue(&DigestBackend, CertKind::Identity, 42, subject(), 0, r),
            Err(CertError::InvalidInput(_))
        ));
        assert!(matches!(
            ca().issue(&DigestBackend, CertKind::Adversary, 42, subject(), 0, None),
            Err(CertError::InvalidInput(_))
        ));
    }

    #[test]
    fn out_of_table_reason_is_an_invariant_violation() {
        let mut c = ca()
            .issue(&DigestBackend, CertKind::Adversary, 42, subject(), 0, Some(ReasonCode::IdentityUncovering))
            .unwrap();
        c.reason_code = 5;
        assert!(matches!(
            c.validate(&DigestBackend, &ca().keys.public_key, 0),
            ValidationResult::InvariantViolation(_)
        ));
    }

    #[test]
    fn tampered_signature_is_rejected() {
        let mut c = ca().issue(&DigestBackend, CertKind::Valid, 42, subject(), 0, None).unwrap();
        c.signature.0[3] ^= 0x80;
        assert_eq!(c.validate(&DigestBackend, &ca().keys.public_key, 0), ValidationResult::BadSignature);
        let other = DigestBackend.generate_keypair(99).public_key;
        let c = ca().issue(&DigestBackend, CertKind::Valid, 42, subject(), 0, None).unwrap();
        assert_eq!(c.validate(&DigestBackend, &other, 0), ValidationResult::BadSignature);
    }

    #[test]
    fn decode_rejects_bad_input() {
        let c = ca().issue(&DigestBackend, CertKind::Valid, 42, subject(), 0, None).unwrap();
        let bytes = c.encode();
        assert!(matches!(Certificate::decode(&bytes[..99]), Err(CertError::Malformed(_))));
        let mut long = bytes.to_vec();
        long.push(0);
        assert!(Certificate::decode(&long).is_err());
        let mut bad_type = bytes;
        bad_type[0] = 9;
        assert!(Certificate::decode(&bad_type).is_err());
        let mut reserved = bytes;
        reserved[59] = 1;
        assert!(Certificate::decode(&reserved).is_err());
    }

    #[test]
    fn reason_table() {
        assert_eq!(reason_lookup(1).unwrap(), "Bogus traffic information");
        assert_eq!(reason_lookup(3).unwrap(), "Cheating with identity, position or speed");
        assert_eq!(reason_lookup(0), Err(CertError::UnknownReason(0)));
        assert_eq!(reason_lookup(5), Err(CertError::UnknownReason(5)));
    }

    #[test]
    fn dump_names_kind_and_reason_text() {
        let ac = ca()
            .issue(&DigestBackend, CertKind::Adversary, 7, subject(), 10, Some(ReasonCode::IdentityUncovering))
            .unwrap();
        let dump = ac.dump();
        assert!(dump.starts_with("type=AC vehicle=7 issuer=1 issued=10"));
        assert!(dump.contains("Uncovering the identities of other vehicles"));
        assert!(dump.lines().nth(1).unwrap().starts_with("hex="));
        assert_eq!(dump.lines().nth(1).unwrap().len(), 4 + 200);
    }

    #[test]
    fn batch_validation_matches_sequential() {
        let issuer = ca();
        let mut certs: Vec<_> = (0..64)
            .map(|v| issuer.issue(&DigestBackend, CertKind::Identity, v, subject(), v * 10, None).unwrap())
            .collect();
        certs[5].signature.0[0] ^= 1;
        let par = validate_batch(&DigestBackend, &certs, &issuer.keys.public_key, 300);
        let seq = validate_batch_sequential(&DigestBackend, &certs, &issuer.keys.public_key, 300);
        assert_eq!(par, seq);
        assert_eq!(par[5], ValidationResult::BadSignature);
    }

    fn arb_cert() -> impl Strategy<Value = Certificate> {
        (
            prop_oneof![Just(CertKind::Valid), Just(CertKind::Adversary), Just(CertKind::Identity)],
            any::<u64>(),
            0u64..1_000_000_000,
            1u8..=4,
            any::<u64>(),
        )
            .prop_map(|(kind, vehicle, now, reason, key_seed)| {
                let reason = (kind == CertKind::Adversary).then(|| ReasonCode::from_code(reason).unwrap());
                let fp = DigestBackend.generate_keypair(key_seed).fingerprint;
                ca().issue(&DigestBackend, kind, vehicle, fp, now, reason).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn encode_decode_identity(c in arb_cert()) {
            let bytes = c.encode();
            prop_assert_eq!(bytes.len(), CERT_LEN);
            prop_assert_eq!(Certificate::decode(&bytes).unwrap(), c);
            prop_assert_eq!(c.validate(&DigestBackend, &ca().keys.public_key, c.issued_at), ValidationResult::Valid);
        }

        #[test]
        fn decode_encode_identity(raw in proptest::array::uniform32(any::<u8>()), tail in proptest::collection::vec(any::<u8>(), 68), tag in 1u8..=3) {
            let mut bytes = [0u8; CERT_LEN];
            bytes[..32].copy_from_slice(&raw);
            bytes[32..].copy_from_slice(&tail);
            bytes[0] = tag;
            bytes[58] = 0;
            bytes[59] = 0;
            let c = Certificate::decode(&bytes).unwrap();
            prop_assert_eq!(c.encode(), bytes);
        }
    }
}
