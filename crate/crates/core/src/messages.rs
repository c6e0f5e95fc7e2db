//! Wire formats for every protocol message.
//!
//! A wire frame is `version (0x01) | kind tag | body`. Bodies use
//! big-endian fixed-width integers, 100-byte certificates, and
//! length-prefixed ciphertexts. Encrypted messages carry their plaintext
//! body inside a [`Ciphertext`]; those plaintext bodies have their own
//! codecs below so their field sets can be checked byte for byte.

use serde::Serialize;
use thiserror::Error;

use crate::certs::{CertError, CertKind, Certificate, ReasonCode, CERT_LEN};
use crate::crypto::{
    Ciphertext, CryptoError, CryptoProvider, PrivateKey, PublicKey, Signature, PUBLIC_KEY_LEN, SIGNATURE_LEN,
};

pub const WIRE_VERSION: u8 = 0x01;
/// Encoded size of one CRL entry: accused id, timestamp, reason.
pub const CRL_ENTRY_LEN: usize = 17;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("malformed message at offset {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("unknown message category {0:03}")]
    UnknownCategory(u16),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Cert(#[from] CertError),
}

fn malformed(offset: usize, reason: impl Into<String>) -> MessageError {
    MessageError::Malformed {
        offset,
        reason: reason.into(),
    }
}

// ---------------------------------------------------------------------------
// categories

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Priority {
    SafetyOfLife,
    Safety,
    NonSafety,
}

impl Priority {
    pub fn label(self) -> &'static str {
        match self {
            Priority::SafetyOfLife => "Safety of Life",
            Priority::Safety => "Safety",
            Priority::NonSafety => "Non-Safety",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct MessageCategory {
    pub code: u16,
    pub priority: Priority,
    pub application: &'static str,
}

pub const CATEGORIES: [MessageCategory; 7] = [
    MessageCategory {
        code: 1,
        priority: Priority::SafetyOfLife,
        application: "Intersection Collision Warning /Avoidance",
    },
    MessageCategory {
        code: 2,
        priority: Priority::SafetyOfLife,
        application: "Cooperative Collision Warning",
    },
    MessageCategory {
        code: 3,
        priority: Priority::Safety,
        application: "Work Zone Warning",
    },
    MessageCategory {
        code: 4,
        priority: Priority::Safety,
        application: "Transit Vehicle Signal Priority",
    },
    MessageCategory {
        code: 5,
        priority: Priority::NonSafety,
        application: "Toll Collection",
    },
    MessageCategory {
        code: 6,
        priority: Priority::NonSafety,
        application: "Service Announcement",
    },
    MessageCategory {
        code: 7,
        priority: Priority::NonSafety,
        application: "Movie Download(2 hours of MPEG 1)",
    },
];

pub fn category_lookup(code: u16) -> Result<MessageCategory, MessageError> {
    CATEGORIES
        .iter()
        .find(|c| c.code == code)
        .copied()
        .ok_or(MessageError::UnknownCategory(code))
}

// ---------------------------------------------------------------------------
// byte helpers

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }
    fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }
    fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }
    fn i64(&mut self, v: i64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }
    fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }
    fn cert(&mut self, c: &Certificate) -> &mut Self {
        self.bytes(&c.encode())
    }
    fn ciphertext(&mut self, c: &Ciphertext) -> &mut Self {
        c.encode_into(&mut self.buf);
        self
    }
    fn finish(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.buf)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    /// Offset of `bytes[0]` inside the outer frame, for diagnostics.
    base: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], base: usize) -> Self {
        Reader { bytes, pos: 0, base }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], MessageError> {
        if self.bytes.len() - self.pos < n {
            return Err(malformed(self.base + self.pos, format!("truncated {what}")));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N], MessageError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N, what)?);
        Ok(out)
    }

    fn u8(&mut self, what: &str) -> Result<u8, MessageError> {
        Ok(self.take(1, what)?[0])
    }
    fn u32(&mut self, what: &str) -> Result<u32, MessageError> {
        Ok(u32::from_be_bytes(self.array(what)?))
    }
    fn u64(&mut self, what: &str) -> Result<u64, MessageError> {
        Ok(u64::from_be_bytes(self.array(what)?))
    }
    fn i64(&mut self, what: &str) -> Result<i64, MessageError> {
        Ok(i64::from_be_bytes(self.array(what)?))
    }
    fn reason(&mut self) -> Result<ReasonCode, MessageError> {
        let at = self.base + self.pos;
        let code = self.u8("reason")?;
        ReasonCode::from_code(code).map_err(|_| malformed(at, format!("reason code {code} outside 1..=4")))
    }
    fn signature(&mut self) -> Result<Signature, MessageError> {
        Ok(Signature(self.array::<SIGNATURE_LEN>("signature")?))
    }
    fn public_key(&mut self) -> Result<PublicKey, MessageError> {
        Ok(PublicKey(self.array::<PUBLIC_KEY_LEN>("public key")?))
    }
    fn cert(&mut self) -> Result<Certificate, MessageError> {
        let at = self.base + self.pos;
        let raw = self.take(CERT_LEN, "certificate")?;
        Certificate::decode(raw).map_err(|e| malformed(at, e.to_string()))
    }
    fn ciphertext(&mut self) -> Result<Ciphertext, MessageError> {
        let at = self.base + self.pos;
        let (ct, used) =
            Ciphertext::decode_prefix(&self.bytes[self.pos..]).map_err(|e| malformed(at, e.to_string()))?;
        self.pos += used;
        Ok(ct)
    }
    fn finish(&self) -> Result<(), MessageError> {
        if self.pos != self.bytes.len() {
            return Err(malformed(
                self.base + self.pos,
                format!("{} trailing bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}

fn sign(crypto: &dyn CryptoProvider, key: &PrivateKey, bytes: &[u8]) -> Result<Signature, MessageError> {
    Ok(crypto.sign(key, bytes)?)
}

// ---------------------------------------------------------------------------
// data messages

/// Broadcast application message. The payload travels in clear; the
/// status certificate (VC or AC) is encrypted under the road group key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DataMessage {
    pub sender_id: u64,
    pub category: MessageCategory,
    pub claim: i64,
    pub timestamp: u64,
    pub identity_cert: Certificate,
    pub sender_key: PublicKey,
    pub status_cert: Ciphertext,
    pub signature: Signature,
}

impl DataMessage {
    /// Builds and signs a data message, sealing `status` for the group key.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        crypto: &dyn CryptoProvider,
        sender_key: &PublicKey,
        signing_key: &PrivateKey,
        group_key: &PublicKey,
        sender_id: u64,
        category: MessageCategory,
        claim: i64,
        timestamp: u64,
        identity_cert: Certificate,
        status: &Certificate,
    ) -> Result<DataMessage, MessageError> {
        let status_cert = crypto.encrypt_for(group_key, &status.encode())?;
        let mut msg = DataMessage {
            sender_id,
            category,
            claim,
            timestamp,
            identity_cert,
            sender_key: *sender_key,
            status_cert,
            signature: Signature::ZERO,
        };
        msg.signature = sign(crypto, signing_key, &msg.signed_bytes())?;
        Ok(msg)
    }

    /// A data message pairs an identity certificate with a VC or AC. Once
    /// a vehicle holds an AC it has no other credential, so the AC fills
    /// the identity slot as well.
    pub fn check_structure(&self, status: &Certificate) -> bool {
        match status.kind {
            CertKind::Valid => self.identity_cert.kind == CertKind::Identity,
            CertKind::Adversary => self.identity_cert.kind == CertKind::Identity || self.identity_cert == *status,
            CertKind::Identity => false,
        }
    }

    fn write_unsigned(&self, w: &mut Writer) {
        w.u64(self.sender_id)
            .u8(self.category.code as u8)
            .i64(self.claim)
            .u64(self.timestamp)
            .cert(&self.identity_cert)
            .bytes(&self.sender_key.0)
            .ciphertext(&self.status_cert);
    }

    pub fn signed_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        self.write_unsigned(&mut w);
        w.finish()
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider) -> bool {
        crypto.verify(&self.sender_key, &self.signed_bytes(), &self.signature)
    }

    fn read(r: &mut Reader<'_>) -> Result<DataMessage, MessageError> {
        let sender_id = r.u64("sender id")?;
        let at = r.base + r.pos;
        let code = r.u8("category")?;
        let category = category_lookup(code as u16).map_err(|_| malformed(at, format!("unknown category {code:03}")))?;
        Ok(DataMessage {
            sender_id,
            category,
            claim: r.i64("claim")?,
            timestamp: r.u64("timestamp")?,
            identity_cert: r.cert()?,
            sender_key: r.public_key()?,
            status_cert: r.ciphertext()?,
            signature: r.signature()?,
        })
    }
}

// ---------------------------------------------------------------------------
// warnings

/// Adversary warning sent to neighbours. The first five fields are the
/// warning proper; the issuer's VC, key and signature authenticate it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WarningMessage {
    pub warning_issuer_id: u64,
    pub adversary_id: u64,
    pub timestamp: u64,
    pub reason_code: ReasonCode,
    pub review_date: u64,
    pub issuer_vc: Certificate,
    pub issuer_key: PublicKey,
    pub signature: Signature,
}

/// Encoded warning length including the two-byte frame header.
pub const WARNING_WIRE_LEN: usize = 2 + 8 + 8 + 8 + 1 + 8 + CERT_LEN + PUBLIC_KEY_LEN + SIGNATURE_LEN;

impl WarningMessage {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        crypto: &dyn CryptoProvider,
        issuer_key: &PublicKey,
        signing_key: &PrivateKey,
        warning_issuer_id: u64,
        adversary_id: u64,
        timestamp: u64,
        reason_code: ReasonCode,
        review_date: u64,
        issuer_vc: Certificate,
    ) -> Result<WarningMessage, MessageError> {
        let mut msg = WarningMessage {
            warning_issuer_id,
            adversary_id,
            timestamp,
            reason_code,
            review_date,
            issuer_vc,
            issuer_key: *issuer_key,
            signature: Signature::ZERO,
        };
        msg.signature = sign(crypto, signing_key, &msg.signed_bytes())?;
        Ok(msg)
    }

    fn write_unsigned(&self, w: &mut Writer) {
        w.u64(self.warning_issuer_id)
            .u64(self.adversary_id)
            .u64(self.timestamp)
            .u8(self.reason_code.code())
            .u64(self.review_date)
            .cert(&self.issuer_vc)
            .bytes(&self.issuer_key.0);
    }

    pub fn signed_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        self.write_unsigned(&mut w);
        w.finish()
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider) -> bool {
        crypto.verify(&self.issuer_key, &self.signed_bytes(), &self.signature)
    }

    fn read(r: &mut Reader<'_>) -> Result<WarningMessage, MessageError> {
        Ok(WarningMessage {
            warning_issuer_id: r.u64("warning issuer id")?,
            adversary_id: r.u64("adversary id")?,
            timestamp: r.u64("timestamp")?,
            reason_code: r.reason()?,
            review_date: r.u64("review date")?,
            issuer_vc: r.cert()?,
            issuer_key: r.public_key()?,
            signature: r.signature()?,
        })
    }
}

// ---------------------------------------------------------------------------
// encrypted bodies

/// Plaintext bodies that travel inside a [`Ciphertext`].
pub trait SealedBody: Sized {
    fn encode_body(&self) -> Vec<u8>;
    fn decode_body(bytes: &[u8]) -> Result<Self, MessageError>;

    fn seal(&self, crypto: &dyn CryptoProvider, recipient: &PublicKey) -> Result<Ciphertext, MessageError> {
        Ok(crypto.encrypt_for(recipient, &self.encode_body())?)
    }

    fn open(crypto: &dyn CryptoProvider, key: &PrivateKey, ct: &Ciphertext) -> Result<Self, MessageError> {
        let plain = crypto.decrypt(key, ct)?;
        Self::decode_body(&plain)
    }
}

/// Vehicle to RSU accusation: `{RR, VC, Sig, TS, AV}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AccusationReport {
    pub reason: ReasonCode,
    pub accuser_vc: Certificate,
    pub signature: Signature,
    pub timestamp: u64,
    pub accused_id: u64,
}

impl AccusationReport {
    pub fn build(
        crypto: &dyn CryptoProvider,
        signing_key: &PrivateKey,
        reason: ReasonCode,
        accuser_vc: Certificate,
        timestamp: u64,
        accused_id: u64,
    ) -> Result<Self, MessageError> {
        let mut r = AccusationReport {
            reason,
            accuser_vc,
            signature: Signature::ZERO,
            timestamp,
            accused_id,
        };
        r.signature = sign(crypto, signing_key, &r.signed_bytes())?;
        Ok(r)
    }

    pub fn signed_bytes(&self) -> Vec<u8> {
        Writer::default()
            .u8(self.reason.code())
            .cert(&self.accuser_vc)
            .u64(self.timestamp)
            .u64(self.accused_id)
            .finish()
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider, accuser_key: &PublicKey) -> bool {
        crypto.verify(accuser_key, &self.signed_bytes(), &self.signature)
    }
}

impl SealedBody for AccusationReport {
    fn encode_body(&self) -> Vec<u8> {
        Writer::default()
            .u8(self.reason.code())
            .cert(&self.accuser_vc)
            .bytes(&self.signature.0)
            .u64(self.timestamp)
            .u64(self.accused_id)
            .finish()
    }

    fn decode_body(bytes: &[u8]) -> Result<Self, MessageError> {
        let mut r = Reader::new(bytes, 0);
        let out = AccusationReport {
            reason: r.reason()?,
            accuser_vc: r.cert()?,
            signature: r.signature()?,
            timestamp: r.u64("timestamp")?,
            accused_id: r.u64("accused id")?,
        };
        r.finish()?;
        Ok(out)
    }
}

/// RSU to CA accusation: `{RR, Sig, TS, AV}`, signed by the RSU.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RsuAccusation {
    pub reason: ReasonCode,
    pub signature: Signature,
    pub timestamp: u64,
    pub accused_id: u64,
}

impl RsuAccusation {
    pub fn build(
        crypto: &dyn CryptoProvider,
        signing_key: &PrivateKey,
        reason: ReasonCode,
        timestamp: u64,
        accused_id: u64,
    ) -> Result<Self, MessageError> {
        let mut r = RsuAccusation {
            reason,
            signature: Signature::ZERO,
            timestamp,
            accused_id,
        };
        r.signature = sign(crypto, signing_key, &r.signed_bytes())?;
        Ok(r)
    }

    pub fn signed_bytes(&self) -> Vec<u8> {
        Writer::default()
            .u8(self.reason.code())
            .u64(self.timestamp)
            .u64(self.accused_id)
            .finish()
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider, rsu_key: &PublicKey) -> bool {
        crypto.verify(rsu_key, &self.signed_bytes(), &self.signature)
    }
}

impl SealedBody for RsuAccusation {
    fn encode_body(&self) -> Vec<u8> {
        Writer::default()
            .u8(self.reason.code())
            .bytes(&self.signature.0)
            .u64(self.timestamp)
            .u64(self.accused_id)
            .finish()
    }

    fn decode_body(bytes: &[u8]) -> Result<Self, MessageError> {
        let mut r = Reader::new(bytes, 0);
        let out = RsuAccusation {
            reason: r.reason()?,
            signature: r.signature()?,
            timestamp: r.u64("timestamp")?,
            accused_id: r.u64("accused id")?,
        };
        r.finish()?;
        Ok(out)
    }
}

/// One CRL record `{AV, TS, RR}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CrlEntry {
    pub accused_id: u64,
    pub timestamp: u64,
    pub reason: ReasonCode,
}

impl CrlEntry {
    pub fn encode(&self) -> [u8; CRL_ENTRY_LEN] {
        let mut out = [0u8; CRL_ENTRY_LEN];
        out[..8].copy_from_slice(&self.accused_id.to_be_bytes());
        out[8..16].copy_from_slice(&self.timestamp.to_be_bytes());
        out[16] = self.reason.code();
        out
    }

    fn read(r: &mut Reader<'_>) -> Result<CrlEntry, MessageError> {
        Ok(CrlEntry {
            accused_id: r.u64("crl accused id")?,
            timestamp: r.u64("crl timestamp")?,
            reason: r.reason()?,
        })
    }

    pub fn decode(bytes: &[u8]) -> Result<CrlEntry, MessageError> {
        let mut r = Reader::new(bytes, 0);
        let e = CrlEntry::read(&mut r)?;
        r.finish()?;
        Ok(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OrderKind {
    /// CA to RSU: `{RR, Sig, TS, AV, AC}`.
    EraseFromCa,
    /// RSU to accused vehicle: `{RR, Sig, TS, AV}`.
    EraseToVehicle,
    /// RSU to accused vehicle: `{AC, TS, Sig}`.
    InsertAc,
    /// RSU to every vehicle on the road: `{AV, TS, Sig, RR, RD}`.
    AddBroadcast,
    /// CA-internal CRL append: `{AV, TS, RR}`, never encrypted.
    CrlAdd,
}

impl OrderKind {
    pub fn tag(self) -> u8 {
        match self {
            OrderKind::EraseFromCa => 1,
            OrderKind::EraseToVehicle => 2,
            OrderKind::InsertAc => 3,
            OrderKind::AddBroadcast => 4,
            OrderKind::CrlAdd => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<OrderKind> {
        Some(match tag {
            1 => OrderKind::EraseFromCa,
            2 => OrderKind::EraseToVehicle,
            3 => OrderKind::InsertAc,
            4 => OrderKind::AddBroadcast,
            5 => OrderKind::CrlAdd,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ControlOrder {
    EraseFromCa {
        reason: ReasonCode,
        signature: Signature,
        timestamp: u64,
        accused_id: u64,
        adversary_cert: Certificate,
    },
    EraseToVehicle {
        reason: ReasonCode,
        signature: Signature,
        timestamp: u64,
        accused_id: u64,
    },
    InsertAc {
        adversary_cert: Certificate,
        timestamp: u64,
        signature: Signature,
    },
    AddBroadcast {
        accused_id: u64,
        timestamp: u64,
        signature: Signature,
        reason: ReasonCode,
        review_date: u64,
    },
    CrlAdd(CrlEntry),
}

impl ControlOrder {
    pub fn kind(&self) -> OrderKind {
        match self {
            ControlOrder::EraseFromCa { .. } => OrderKind::EraseFromCa,
            ControlOrder::EraseToVehicle { .. } => OrderKind::EraseToVehicle,
            ControlOrder::InsertAc { .. } => OrderKind::InsertAc,
            ControlOrder::AddBroadcast { .. } => OrderKind::AddBroadcast,
            ControlOrder::CrlAdd(_) => OrderKind::CrlAdd,
        }
    }

    pub fn timestamp(&self) -> u64 {
        match self {
            ControlOrder::EraseFromCa { timestamp, .. }
            | ControlOrder::EraseToVehicle { timestamp, .. }
            | ControlOrder::InsertAc { timestamp, .. }
            | ControlOrder::AddBroadcast { timestamp, .. } => *timestamp,
            ControlOrder::CrlAdd(e) => e.timestamp,
        }
    }

    fn signature_mut(&mut self) -> Option<&mut Signature> {
        match self {
            ControlOrder::EraseFromCa { signature, .. }
            | ControlOrder::EraseToVehicle { signature, .. }
            | ControlOrder::InsertAc { signature, .. }
            | ControlOrder::AddBroadcast { signature, .. } => Some(signature),
            ControlOrder::CrlAdd(_) => None,
        }
    }

    pub fn signature(&self) -> Option<Signature> {
        self.clone().signature_mut().map(|s| *s)
    }

    /// Bytes covered by the signature: every other field, kind-prefixed.
    pub fn signed_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.u8(self.kind().tag());
        match self {
            ControlOrder::EraseFromCa {
                reason,
                timestamp,
                accused_id,
                adversary_cert,
                ..
            } => w.u8(reason.code()).u64(*timestamp).u64(*accused_id).cert(adversary_cert),
            ControlOrder::EraseToVehicle {
                reason,
                timestamp,
                accused_id,
                ..
            } => w.u8(reason.code()).u64(*timestamp).u64(*accused_id),
            ControlOrder::InsertAc {
                adversary_cert,
                timestamp,
                ..
            } => w.cert(adversary_cert).u64(*timestamp),
            ControlOrder::AddBroadcast {
                accused_id,
                timestamp,
                reason,
                review_date,
                ..
            } => w.u64(*accused_id).u64(*timestamp).u8(reason.code()).u64(*review_date),
            ControlOrder::CrlAdd(e) => w.bytes(&e.encode()),
        };
        w.finish()
    }

    /// Fills in the signature (no-op for `CrlAdd`).
    pub fn signed(mut self, crypto: &dyn CryptoProvider, key: &PrivateKey) -> Result<Self, MessageError> {
        let sig = sign(crypto, key, &self.signed_bytes())?;
        if let Some(s) = self.signature_mut() {
            *s = sig;
        }
        Ok(self)
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider, signer: &PublicKey) -> bool {
        match self.signature() {
            Some(sig) => crypto.verify(signer, &self.signed_bytes(), &sig),
            None => true,
        }
    }

    pub fn encode_body(&self) -> Vec<u8> {
        let mut w = Writer::default();
        match self {
            ControlOrder::EraseFromCa {
                reason,
                signature,
                timestamp,
                accused_id,
                adversary_cert,
            } => w
                .u8(reason.code())
                .bytes(&signature.0)
                .u64(*timestamp)
                .u64(*accused_id)
                .cert(adversary_cert),
            ControlOrder::EraseToVehicle {
                reason,
                signature,
                timestamp,
                accused_id,
            } => w.u8(reason.code()).bytes(&signature.0).u64(*timestamp).u64(*accused_id),
            ControlOrder::InsertAc {
                adversary_cert,
                timestamp,
                signature,
            } => w.cert(adversary_cert).u64(*timestamp).bytes(&signature.0),
            ControlOrder::AddBroadcast {
                accused_id,
                timestamp,
                signature,
                reason,
                review_date,
            } => w
                .u64(*accused_id)
                .u64(*timestamp)
                .bytes(&signature.0)
                .u8(reason.code())
                .u64(*review_date),
            ControlOrder::CrlAdd(e) => w.bytes(&e.encode()),
        };
        w.finish()
    }

    pub fn decode_body(kind: OrderKind, bytes: &[u8]) -> Result<ControlOrder, MessageError> {
        let mut r = Reader::new(bytes, 0);
        let out = match kind {
            OrderKind::EraseFromCa => ControlOrder::EraseFromCa {
                reason: r.reason()?,
                signature: r.signature()?,
                timestamp: r.u64("timestamp")?,
                accused_id: r.u64("accused id")?,
                adversary_cert: r.cert()?,
            },
            OrderKind::EraseToVehicle => ControlOrder::EraseToVehicle {
                reason: r.reason()?,
                signature: r.signature()?,
                timestamp: r.u64("timestamp")?,
                accused_id: r.u64("accused id")?,
            },
            OrderKind::InsertAc => ControlOrder::InsertAc {
                adversary_cert: r.cert()?,
                timestamp: r.u64("timestamp")?,
                signature: r.signature()?,
            },
            OrderKind::AddBroadcast => ControlOrder::AddBroadcast {
                accused_id: r.u64("accused id")?,
                timestamp: r.u64("timestamp")?,
                signature: r.signature()?,
                reason: r.reason()?,
                review_date: r.u64("review date")?,
            },
            OrderKind::CrlAdd => ControlOrder::CrlAdd(CrlEntry::read(&mut r)?),
        };
        r.finish()?;
        Ok(out)
    }

    /// Encrypts the body for `recipient`. `CrlAdd` never leaves the CA.
    pub fn seal(&self, crypto: &dyn CryptoProvider, recipient: &PublicKey) -> Result<SealedOrder, MessageError> {
        if self.kind() == OrderKind::CrlAdd {
            return Err(malformed(0, "CRL add records are internal to the CA"));
        }
        Ok(SealedOrder {
            kind: self.kind(),
            ciphertext: crypto.encrypt_for(recipient, &self.encode_body())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SealedOrder {
    pub kind: OrderKind,
    pub ciphertext: Ciphertext,
}

impl SealedOrder {
    pub fn open(&self, crypto: &dyn CryptoProvider, key: &PrivateKey) -> Result<ControlOrder, MessageError> {
        let plain = crypto.decrypt(key, &self.ciphertext)?;
        ControlOrder::decode_body(self.kind, &plain)
    }
}

// ---------------------------------------------------------------------------
// CRL exchange

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CrlRequest {
    pub requester_id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrlResponse {
    pub entries: Vec<CrlEntry>,
}

/// Periodic CRL push used by the baseline mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrlBroadcast {
    pub rsu_id: u64,
    pub timestamp: u64,
    pub entries: Vec<CrlEntry>,
    pub signature: Signature,
}

/// Fixed bytes of a CRL broadcast frame: header, RSU id, timestamp, entry
/// count, signature.
pub const CRL_BROADCAST_OVERHEAD: usize = 2 + 8 + 8 + 4 + SIGNATURE_LEN;

impl CrlBroadcast {
    pub fn build(
        crypto: &dyn CryptoProvider,
        signing_key: &PrivateKey,
        rsu_id: u64,
        timestamp: u64,
        entries: Vec<CrlEntry>,
    ) -> Result<Self, MessageError> {
        let mut b = CrlBroadcast {
            rsu_id,
            timestamp,
            entries,
            signature: Signature::ZERO,
        };
        b.signature = sign(crypto, signing_key, &b.signed_bytes())?;
        Ok(b)
    }

    fn write_unsigned(&self, w: &mut Writer) {
        w.u64(self.rsu_id).u64(self.timestamp).u32(self.entries.len() as u32);
        for e in &self.entries {
            w.bytes(&e.encode());
        }
    }

    pub fn signed_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        self.write_unsigned(&mut w);
        w.finish()
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider, rsu_key: &PublicKey) -> bool {
        crypto.verify(rsu_key, &self.signed_bytes(), &self.signature)
    }
}

fn read_entries(r: &mut Reader<'_>) -> Result<Vec<CrlEntry>, MessageError> {
    let at = r.base + r.pos;
    let n = r.u32("crl entry count")? as usize;
    if (r.bytes.len() - r.pos) < n.saturating_mul(CRL_ENTRY_LEN) {
        return Err(malformed(at, format!("crl declares {n} entries but payload is short")));
    }
    (0..n).map(|_| CrlEntry::read(r)).collect()
}

// ---------------------------------------------------------------------------
// frames

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum WireKind {
    Data = 0x01,
    Warning = 0x02,
    VehicleAccusation = 0x03,
    RsuAccusation = 0x04,
    Order = 0x05,
    CrlRequest = 0x06,
    CrlResponse = 0x07,
    CrlBroadcast = 0x08,
}

impl WireKind {
    pub const ALL: [WireKind; 8] = [
        WireKind::Data,
        WireKind::Warning,
        WireKind::VehicleAccusation,
        WireKind::RsuAccusation,
        WireKind::Order,
        WireKind::CrlRequest,
        WireKind::CrlResponse,
        WireKind::CrlBroadcast,
    ];

    pub fn label(self) -> &'static str {
        match self {
            WireKind::Data => "data",
            WireKind::Warning => "warning",
            WireKind::VehicleAccusation => "vehicle_accusation",
            WireKind::RsuAccusation => "rsu_accusation",
            WireKind::Order => "order",
            WireKind::CrlRequest => "crl_request",
            WireKind::CrlResponse => "crl_response",
            WireKind::CrlBroadcast => "crl_broadcast",
        }
    }

    pub fn from_tag(tag: u8) -> Option<WireKind> {
        WireKind::ALL.into_iter().find(|k| *k as u8 == tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "body")]
pub enum WireMessage {
    Data(DataMessage),
    Warning(WarningMessage),
    /// Sealed [`AccusationReport`] addressed to the RSU.
    VehicleAccusation(Ciphertext),
    /// Sealed [`RsuAccusation`] addressed to the CA.
    RsuAccusation(Ciphertext),
    Order(SealedOrder),
    CrlRequest(CrlRequest),
    CrlResponse(CrlResponse),
    CrlBroadcast(CrlBroadcast),
}

impl WireMessage {
    pub fn kind(&self) -> WireKind {
        match self {
            WireMessage::Data(_) => WireKind::Data,
            WireMessage::Warning(_) => WireKind::Warning,
            WireMessage::VehicleAccusation(_) => WireKind::VehicleAccusation,
            WireMessage::RsuAccusation(_) => WireKind::RsuAccusation,
            WireMessage::Order(_) => WireKind::Order,
            WireMessage::CrlRequest(_) => WireKind::CrlRequest,
            WireMessage::CrlResponse(_) => WireKind::CrlResponse,
            WireMessage::CrlBroadcast(_) => WireKind::CrlBroadcast,
        }
    }

    pub fn encode_wire(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.u8(WIRE_VERSION).u8(self.kind() as u8);
        match self {
            WireMessage::Data(m) => {
                m.write_unsigned(&mut w);
                w.bytes(&m.signature.0);
            }
            WireMessage::Warning(m) => {
                m.write_unsigned(&mut w);
                w.bytes(&m.signature.0);
            }
            WireMessage::VehicleAccusation(ct) | WireMessage::RsuAccusation(ct) => {
                w.ciphertext(ct);
            }
            WireMessage::Order(o) => {
                w.u8(o.kind.tag()).ciphertext(&o.ciphertext);
            }
            WireMessage::CrlRequest(r) => {
                w.u64(r.requester_id);
            }
            WireMessage::CrlResponse(r) => {
                w.u32(r.entries.len() as u32);
                for e in &r.entries {
                    w.bytes(&e.encode());
                }
            }
            WireMessage::CrlBroadcast(b) => {
                b.write_unsigned(&mut w);
                w.bytes(&b.signature.0);
            }
        }
        w.finish()
    }

    pub fn decode_wire(bytes: &[u8]) -> Result<WireMessage, MessageError> {
        if bytes.len() < 2 {
            return Err(malformed(0, "frame shorter than two-byte header"));
        }
        if bytes[0] != WIRE_VERSION {
            return Err(malformed(0, format!("unsupported wire version {:#04x}", bytes[0])));
        }
        let kind = WireKind::from_tag(bytes[1]).ok_or_else(|| malformed(1, format!("unknown kind tag {:#04x}", bytes[1])))?;
        let mut r = Reader::new(&bytes[2..], 2);
        let msg = match kind {
            WireKind::Data => WireMessage::Data(DataMessage::read(&mut r)?),
            WireKind::Warning => WireMessage::Warning(WarningMessage::read(&mut r)?),
            WireKind::VehicleAccusation => WireMessage::VehicleAccusation(r.ciphertext()?),
            WireKind::RsuAccusation => WireMessage::RsuAccusation(r.ciphertext()?),
            WireKind::Order => {
                let at = r.base + r.pos;
                let tag = r.u8("order kind")?;
                let kind = OrderKind::from_tag(tag)
                    .filter(|k| *k != OrderKind::CrlAdd)
                    .ok_or_else(|| malformed(at, format!("invalid order kind {tag}")))?;
                WireMessage::Order(SealedOrder {
                    kind,
                    ciphertext: r.ciphertext()?,
                })
            }
            WireKind::CrlRequest => WireMessage::CrlRequest(CrlRequest {
                requester_id: r.u64("requester id")?,
            }),
            WireKind::CrlResponse => WireMessage::CrlResponse(CrlResponse {
                entries: read_entries(&mut r)?,
            }),
            WireKind::CrlBroadcast => {
                let rsu_id = r.u64("rsu id")?;
                let timestamp = r.u64("timestamp")?;
                let entries = read_entries(&mut r)?;
                WireMessage::CrlBroadcast(CrlBroadcast {
                    rsu_id,
                    timestamp,
                    entries,
                    signature: r.signature()?,
                })
            }
        };
        r.finish()?;
        Ok(msg)
    }

    pub fn wire_size(&self) -> usize {
        self.encode_wire().len()
    }

    /// JSON rendering for traces.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("wire messages always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certs::Issuer;
    use crate::crypto::{DigestBackend, KeyPair};
    use proptest::prelude::*;

    const C: DigestBackend = DigestBackend;

    struct Fixture {
        ca: Issuer,
        rsu: KeyPair,
        group: KeyPair,
        vehicle: KeyPair,
    }

    fn fixture() -> Fixture {
        Fixture {
            ca: Issuer::new(1, C.generate_keypair(1)),
            rsu: C.generate_keypair(2),
            group: C.generate_keypair(3),
            vehicle: C.generate_keypair(100),
        }
    }

    fn vc(f: &Fixture, id: u64) -> Certificate {
        f.ca.issue(&C, CertKind::Valid, id, f.vehicle.fingerprint, 0, None).unwrap()
    }

    fn ac(f: &Fixture, id: u64) -> Certificate {
        f.ca
            .issue(&C, CertKind::Adversary, id, f.vehicle.fingerprint, 0, Some(ReasonCode::BogusTrafficInformation))
            .unwrap()
    }

    fn data(f: &Fixture, claim: i64) -> DataMessage {
        let id = f.ca.issue(&C, CertKind::Identity, 4, f.vehicle.fingerprint, 0, None).unwrap();
        DataMessage::build(
            &C,
            &f.vehicle.public_key,
            &f.vehicle.private_key,
            &f.group.public_key,
            4,
            category_lookup(1).unwrap(),
            claim,
            3,
            id,
            &vc(f, 4),
        )
        .unwrap()
    }

    fn warning(f: &Fixture, adv: u64, ts: u64) -> WarningMessage {
        WarningMessage::build(
            &C,
            &f.vehicle.public_key,
            &f.vehicle.private_key,
            4,
            adv,
            ts,
            ReasonCode::NetworkDisruption,
            ts + 31_536_000,
            vc(f, 4),
        )
        .unwrap()
    }

    fn one_of_each(f: &Fixture) -> Vec<WireMessage> {
        let report = AccusationReport::build(&C, &f.vehicle.private_key, ReasonCode::BogusTrafficInformation, vc(f, 4), 20, 9)
            .unwrap();
        let fwd = RsuAccusation::build(&C, &f.rsu.private_key, ReasonCode::BogusTrafficInformation, 20, 9).unwrap();
        let erase = ControlOrder::EraseToVehicle {
            reason: ReasonCode::BogusTrafficInformation,
            signature: Signature::ZERO,
            timestamp: 20,
            accused_id: 9,
        }
        .signed(&C, &f.rsu.private_key)
        .unwrap();
        let entries = vec![CrlEntry {
            accused_id: 9,
            timestamp: 20,
            reason: ReasonCode::BogusTrafficInformation,
        }];
        vec![
            WireMessage::Data(data(f, 100)),
            WireMessage::Warning(warning(f, 9, 20)),
            WireMessage::VehicleAccusation(report.seal(&C, &f.rsu.public_key).unwrap()),
            WireMessage::RsuAccusation(fwd.seal(&C, &f.ca.keys.public_key).unwrap()),
            WireMessage::Order(erase.seal(&C, &f.vehicle.public_key).unwrap()),
            WireMessage::CrlRequest(CrlRequest { requester_id: 4 }),
            WireMessage::CrlResponse(CrlResponse { entries: entries.clone() }),
            WireMessage::CrlBroadcast(CrlBroadcast::build(&C, &f.rsu.private_key, 2, 30, entries).unwrap()),
        ]
    }

    #[test]
    fn every_kind_round_trips() {
        let f = fixture();
        let msgs = one_of_each(&f);
        let kinds: Vec<_> = msgs.iter().map(WireMessage::kind).collect();
        assert_eq!(kinds, WireKind::ALL.to_vec());
        for m in msgs {
            let bytes = m.encode_wire();
            assert_eq!(bytes[0], WIRE_VERSION);
            assert_eq!(m.wire_size(), bytes.len());
            assert_eq!(WireMessage::decode_wire(&bytes).unwrap(), m);
        }
    }

    #[test]
    fn warning_keeps_its_five_fields_and_fixed_size() {
        let f = fixture();
        let w = warning(&f, 9, 42);
        let back = match WireMessage::decode_wire(&WireMessage::Warning(w.clone()).encode_wire()).unwrap() {
            WireMessage::Warning(w) => w,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(
            (back.warning_issuer_id, back.adversary_id, back.timestamp, back.reason_code, back.review_date),
            (4, 9, 42, ReasonCode::NetworkDisruption, 42 + 31_536_000)
        );
        assert!(back.verify(&C));
        assert_eq!(WireMessage::Warning(w).wire_size(), WARNING_WIRE_LEN);
        assert_eq!(WireMessage::Warning(warning(&f, u64::MAX, 0)).wire_size(), WARNING_WIRE_LEN);
    }

    #[test]
    fn data_message_carries_two_certificates() {
        let f = fixture();
        let m = data(&f, -5);
        assert!(WireMessage::Data(m.clone()).wire_size() >= 200);
        assert!(m.verify(&C));
        let status = Certificate::decode(&C.decrypt(&f.group.private_key, &m.status_cert).unwrap()).unwrap();
        assert_eq!(status.kind, CertKind::Valid);
        assert!(m.check_structure(&status));
        let mut tampered = m;
        tampered.claim = 6;
        assert!(!tampered.verify(&C));
    }

    #[test]
    fn decode_rejects_garbage() {
        let f = fixture();
        assert!(matches!(WireMessage::decode_wire(&[]), Err(MessageError::Malformed { offset: 0, .. })));
        assert!(WireMessage::decode_wire(&[0x02, 0x01]).is_err());
        assert!(matches!(
            WireMessage::decode_wire(&[0x01, 0x7f]),
            Err(MessageError::Malformed { offset: 1, .. })
        ));
        for m in one_of_each(&f) {
            let bytes = m.encode_wire();
            assert!(WireMessage::decode_wire(&bytes[..bytes.len() - 1]).is_err(), "{:?}", m.kind());
            let mut long = bytes.clone();
            long.push(0);
            assert!(WireMessage::decode_wire(&long).is_err(), "{:?}", m.kind());
        }
        let mut order = WireMessage::CrlRequest(CrlRequest { requester_id: 1 }).encode_wire();
        order[1] = WireKind::Order as u8;
        assert!(WireMessage::decode_wire(&order).is_err());
    }

    #[test]
    fn category_table() {
        let first = category_lookup(1).unwrap();
        assert_eq!((first.priority, first.application), (Priority::SafetyOfLife, "Intersection Collision Warning /Avoidance"));
        let last = category_lookup(7).unwrap();
        assert_eq!((last.priority, last.application), (Priority::NonSafety, "Movie Download(2 hours of MPEG 1)"));
        assert_eq!(category_lookup(8), Err(MessageError::UnknownCategory(8)));
        assert_eq!(category_lookup(0), Err(MessageError::UnknownCategory(0)));
    }

    /// Each plaintext body is exactly the sum of its listed fields, so no
    /// field is missing and none is added.
    #[test]
    fn plaintext_bodies_match_their_field_sets() {
        let f = fixture();
        const RR: usize = 1;
        const TS: usize = 8;
        const AV: usize = 8;
        const RD: usize = 8;
        const SIG: usize = SIGNATURE_LEN;
        const CERT: usize = CERT_LEN;

        let report = AccusationReport::build(&C, &f.vehicle.private_key, ReasonCode::BogusTrafficInformation, vc(&f, 4), 1, 9)
            .unwrap();
        assert_eq!(report.encode_body().len(), RR + CERT + SIG + TS + AV);
        let fwd = RsuAccusation::build(&C, &f.rsu.private_key, ReasonCode::BogusTrafficInformation, 1, 9).unwrap();
        assert_eq!(fwd.encode_body().len(), RR + SIG + TS + AV);

        let r = ReasonCode::BogusTrafficInformation;
        let s = Signature::ZERO;
        let cases = [
            (
                ControlOrder::EraseFromCa { reason: r, signature: s, timestamp: 1, accused_id: 9, adversary_cert: ac(&f, 9) },
                RR + SIG + TS + AV + CERT,
            ),
            (ControlOrder::EraseToVehicle { reason: r, signature: s, timestamp: 1, accused_id: 9 }, RR + SIG + TS + AV),
            (ControlOrder::InsertAc { adversary_cert: ac(&f, 9), timestamp: 1, signature: s }, CERT + TS + SIG),
            (
                ControlOrder::AddBroadcast { accused_id: 9, timestamp: 1, signature: s, reason: r, review_date: 5 },
                AV + TS + SIG + RR + RD,
            ),
            (ControlOrder::CrlAdd(CrlEntry { accused_id: 9, timestamp: 1, reason: r }), AV + TS + RR),
        ];
        for (order, len) in cases {
            let order = order.signed(&C, &f.rsu.private_key).unwrap();
            let body = order.encode_body();
            assert_eq!(body.len(), len, "{:?}", order.kind());
            assert_eq!(ControlOrder::decode_body(order.kind(), &body).unwrap(), order);
            assert!(order.verify(&C, &f.rsu.public_key));
        }
        assert_eq!(CRL_ENTRY_LEN, AV + TS + RR);
    }

    #[test]
    fn sealed_bodies_open_only_for_the_recipient() {
        let f = fixture();
        let report = AccusationReport::build(&C, &f.vehicle.private_key, ReasonCode::IdentityUncovering, vc(&f, 4), 7, 9).unwrap();
        let ct = report.seal(&C, &f.rsu.public_key).unwrap();
        assert_eq!(AccusationReport::open(&C, &f.rsu.private_key, &ct).unwrap(), report);
        assert!(matches!(
            AccusationReport::open(&C, &f.group.private_key, &ct),
            Err(MessageError::Crypto(CryptoError::WrongRecipient))
        ));
        assert!(report.verify(&C, &f.vehicle.public_key));
        assert!(!report.verify(&C, &f.rsu.public_key));
        assert!(ControlOrder::CrlAdd(CrlEntry { accused_id: 1, timestamp: 1, reason: ReasonCode::NetworkDisruption })
            .seal(&C, &f.rsu.public_key)
            .is_err());
    }

    #[test]
    fn json_rendering_names_the_kind() {
        let f = fixture();
        for m in one_of_each(&f) {
            let v = m.to_json();
            assert!(v.get("kind").is_some());
        }
    }

    fn arb_reason() -> impl Strategy<Value = ReasonCode> {
        proptest::sample::select(ReasonCode::ALL.to_vec())
    }

    fn arb_entries() -> impl Strategy<Value = Vec<CrlEntry>> {
        proptest::collection::vec(
            (any::<u64>(), any::<u64>(), arb_reason()).prop_map(|(a, t, r)| CrlEntry { accused_id: a, timestamp: t, reason: r }),
            0..20,
        )
    }

    fn arb_message() -> impl Strategy<Value = WireMessage> {
        let f = fixture();
        let vc4 = vc(&f, 4);
        let ident = f.ca.issue(&C, CertKind::Identity, 4, f.vehicle.fingerprint, 0, None).unwrap();
        prop_oneof![
            (1u16..=7, any::<i64>(), any::<u64>(), any::<bool>()).prop_map(move |(cat, claim, ts, adv)| {
                let f = fixture();
                let status = if adv { ac(&f, 4) } else { vc4 };
                WireMessage::Data(
                    DataMessage::build(
                        &C,
                        &f.vehicle.public_key,
                        &f.vehicle.private_key,
                        &f.group.public_key,
                        4,
                        category_lookup(cat).unwrap(),
                        claim,
                        ts,
                        ident,
                        &status,
                    )
                    .unwrap(),
                )
            }),
            (any::<u64>(), any::<u64>(), any::<u64>()).prop_map(|(i, a, t)| {
                let f = fixture();
                let mut w = warning(&f, a, t);
                w.warning_issuer_id = i;
                WireMessage::Warning(w)
            }),
            proptest::collection::vec(any::<u8>(), 0..300).prop_map(|p| {
                let f = fixture();
                WireMessage::VehicleAccusation(C.encrypt_for(&f.rsu.public_key, &p).unwrap())
            }),
            proptest::collection::vec(any::<u8>(), 0..300).prop_map(|p| {
                let f = fixture();
                WireMessage::RsuAccusation(C.encrypt_for(&f.ca.keys.public_key, &p).unwrap())
            }),
            (1u8..=4, proptest::collection::vec(any::<u8>(), 0..300)).prop_map(|(k, p)| {
                let f = fixture();
                WireMessage::Order(SealedOrder {
                    kind: OrderKind::from_tag(k).unwrap(),
                    ciphertext: C.encrypt_for(&f.vehicle.public_key, &p).unwrap(),
                })
            }),
            any::<u64>().prop_map(|r| WireMessage::CrlRequest(CrlRequest { requester_id: r })),
            arb_entries().prop_map(|entries| WireMessage::CrlResponse(CrlResponse { entries })),
            (any::<u64>(), any::<u64>(), arb_entries()).prop_map(|(id, ts, entries)| {
                let f = fixture();
                WireMessage::CrlBroadcast(CrlBroadcast::build(&C, &f.rsu.private_key, id, ts, entries).unwrap())
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8000))]

        #[test]
        fn wire_round_trip(m in arb_message()) {
            let bytes = m.encode_wire();
            prop_assert_eq!(bytes.len(), m.wire_size());
            prop_assert_eq!(WireMessage::decode_wire(&bytes).unwrap(), m);
        }
    }

    proptest! {
        #[test]
        fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..400)) {
            let _ = WireMessage::decode_wire(&bytes);
        }
    }
}
