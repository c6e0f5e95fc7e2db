//! Pluggable cryptographic provider.
//!
//! Protocol code only talks to [`CryptoProvider`]. The default
//! [`DigestBackend`] is a deterministic keyed-digest construction that gives
//! every sign, verify, encrypt and decrypt step a real code path and a real
//! failure mode, without any claim to cryptographic strength.

use std::fmt;

use sha2::{Digest, Sha256, Sha512};
use thiserror::Error;

pub const PUBLIC_KEY_LEN: usize = 32;
pub const PRIVATE_KEY_LEN: usize = 32;
pub const FINGERPRINT_LEN: usize = 16;
pub const SIGNATURE_LEN: usize = 40;
/// Upper bound on a single plaintext handed to [`CryptoProvider::encrypt_for`].
pub const MAX_PLAINTEXT_LEN: usize = 64 * 1024;

const TAG_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("ciphertext is addressed to a different key")]
    WrongRecipient,
    #[error("malformed ciphertext: {0}")]
    Malformed(&'static str),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublicKey(pub [u8; PUBLIC_KEY_LEN]);

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PrivateKey(pub [u8; PRIVATE_KEY_LEN]);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub [u8; FINGERPRINT_LEN]);

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature(pub [u8; SIGNATURE_LEN]);

impl PrivateKey {
    /// All-zero key left behind after a tamper-proof device wipes its keys.
    pub const ERASED: PrivateKey = PrivateKey([0; PRIVATE_KEY_LEN]);
}

impl Signature {
    pub const ZERO: Signature = Signature([0; SIGNATURE_LEN]);
}

macro_rules! hex_debug {
    ($($ty:ident),*) => {$(
        impl fmt::Debug for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!(stringify!($ty), "({})"), hex::encode(self.0))
            }
        }
    )*};
}
hex_debug!(PublicKey, Fingerprint, Signature);

macro_rules! hex_serialize {
    ($($ty:ident),*) => {$(
        impl serde::Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&hex::encode(self.0))
            }
        }
    )*};
}
hex_serialize!(PublicKey, Fingerprint, Signature);

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PrivateKey(..)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyPair {
    pub public_key: PublicKey,
    pub private_key: PrivateKey,
    pub fingerprint: Fingerprint,
}

/// Public-key ciphertext addressed to the holder of one key.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Ciphertext {
    pub recipient_fingerprint: Fingerprint,
    #[serde(serialize_with = "hex::serde::serialize")]
    pub payload: Vec<u8>,
}

impl Ciphertext {
    /// Size of the wire form: fingerprint, u32 length prefix, payload.
    pub fn encoded_len(&self) -> usize {
        FINGERPRINT_LEN + 4 + self.payload.len()
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.recipient_fingerprint.0);
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
    }

    /// Parses a ciphertext from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Ciphertext, usize), CryptoError> {
        if bytes.len() < FINGERPRINT_LEN + 4 {
            return Err(CryptoError::Malformed("truncated ciphertext header"));
        }
        let mut fp = [0u8; FINGERPRINT_LEN];
        fp.copy_from_slice(&bytes[..FINGERPRINT_LEN]);
        let mut len = [0u8; 4];
        len.copy_from_slice(&bytes[FINGERPRINT_LEN..FINGERPRINT_LEN + 4]);
        let len = u32::from_be_bytes(len) as usize;
        let start = FINGERPRINT_LEN + 4;
        if bytes.len() - start < len {
            return Err(CryptoError::Malformed("truncated ciphertext payload"));
        }
        Ok((
            Ciphertext {
                recipient_fingerprint: Fingerprint(fp),
                payload: bytes[start..start + len].to_vec(),
            },
            start + len,
        ))
    }
}

pub trait CryptoProvider: Send + Sync {
    fn generate_keypair(&self, seed: u64) -> KeyPair;

    fn fingerprint(&self, public_key: &PublicKey) -> Fingerprint;

    fn sign(&self, private_key: &PrivateKey, message: &[u8]) -> Result<Signature, CryptoError>;

    fn verify(&self, public_key: &PublicKey, message: &[u8], signature: &Signature) -> bool;

    fn encrypt_for(&self, public_key: &PublicKey, plaintext: &[u8]) -> Result<Ciphertext, CryptoError>;

    fn decrypt(&self, private_key: &PrivateKey, ciphertext: &Ciphertext) -> Result<Vec<u8>, CryptoError>;
}

/// Deterministic keyed-keystream and keyed-digest backend.
///
/// The public key is a digest of the private key, signatures are a digest
/// of the public key and message, and encryption XORs a keystream derived
/// from the recipient's public key followed by a 16-byte integrity tag.
/// Anyone holding a public key can forge under it; that is acceptable for
/// simulation and nothing else.
#[derive(Debug, Clone, Copy, Default)]
pub struct DigestBackend;

impl DigestBackend {
    fn public_from_private(private_key: &PrivateKey) -> PublicKey {
        let mut h = Sha256::new();
        h.update(b"vanet/pk");
        h.update(private_key.0);
        PublicKey(h.finalize().into())
    }

    fn keystream(public_key: &PublicKey, len: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(len + 32);
        let mut counter = 0u64;
        while out.len() < len {
            let mut h = Sha256::new();
            h.update(b"vanet/ks");
            h.update(public_key.0);
            h.update(counter.to_be_bytes());
            out.extend_from_slice(&h.finalize());
            counter += 1;
        }
        out.truncate(len);
        out
    }

    fn tag(public_key: &PublicKey, body: &[u8]) -> [u8; TAG_LEN] {
        let mut h = Sha256::new();
        h.update(b"vanet/tag");
        h.update(public_key.0);
        h.update(body);
        let digest = h.finalize();
        let mut tag = [0u8; TAG_LEN];
        tag.copy_from_slice(&digest[..TAG_LEN]);
        tag
    }

    fn signature_for(public_key: &PublicKey, message: &[u8]) -> Signature {
        let mut h = Sha512::new();
        h.update(b"vanet/sig");
        h.update(public_key.0);
        h.update((message.len() as u64).to_be_bytes());
        h.update(message);
        let digest = h.finalize();
        let mut sig = [0u8; SIGNATURE_LEN];
        sig.copy_from_slice(&digest[..SIGNATURE_LEN]);
        Signature(sig)
    }
}

impl CryptoProvider for DigestBackend {
    fn generate_keypair(&self, seed: u64) -> KeyPair {
        let mut h = Sha256::new();
        h.update(b"vanet/sk");
        h.update(seed.to_be_bytes());
        let private_key = PrivateKey(h.finalize().into());
        let public_key = Self::public_from_private(&private_key);
        KeyPair {
            public_key,
            private_key,
            fingerprint: self.fingerprint(&public_key),
        }
    }

    fn fingerprint(&self, public_key: &PublicKey) -> Fingerprint {
        let mut h = Sha256::new();
        h.update(b"vanet/fp");
        h.update(public_key.0);
        let digest = h.finalize();
        let mut fp = [0u8; FINGERPRINT_LEN];
        fp.copy_from_slice(&digest[..FINGERPRINT_LEN]);
        Fingerprint(fp)
    }

    fn sign(&self, private_key: &PrivateKey, message: &[u8]) -> Result<Signature, CryptoError> {
        if message.is_empty() {
            return Err(CryptoError::InvalidInput("cannot sign an empty message"));
        }
        Ok(Self::signature_for(&Self::public_from_private(private_key), message))
    }

    fn verify(&self, public_key: &PublicKey, message: &[u8], signature: &Signature) -> bool {
        if message.is_empty() {
            return false;
        }
        let expected = Self::signature_for(public_key, message);
        // no early exit on the first differing byte
        expected
            .0
            .iter()
            .zip(signature.0.iter())
            .fold(0u8, |acc, (a, b)| acc | (a ^ b))
            == 0
    }

    fn encrypt_for(&self, public_key: &PublicKey, plaintext: &[u8]) -> Result<Ciphertext, CryptoError> {
        if plaintext.len() > MAX_PLAINTEXT_LEN {
            return Err(CryptoError::InvalidInput("plaintext exceeds 64 KiB"));
        }
        let ks = Self::keystream(public_key, plaintext.len());
        let mut payload: Vec<u8> = plaintext.iter().zip(ks).map(|(p, k)| p ^ k).collect();
        let tag = Self::tag(public_key, &payload);
        payload.extend_from_slice(&tag);
        Ok(Ciphertext {
            recipient_fingerprint: self.fingerprint(public_key),
            payload,
        })
    }

    fn decrypt(&self, private_key: &PrivateKey, ciphertext: &Ciphertext) -> Result<Vec<u8>, CryptoError> {
        let public_key = Self::public_from_private(private_key);
        if self.fingerprint(&public_key) != ciphertext.recipient_fingerprint {
            return Err(CryptoError::WrongRecipient);
        }
        if ciphertext.payload.len() < TAG_LEN {
            return Err(CryptoError::Malformed("payload shorter than integrity tag"));
        }
        let (body, tag) = ciphertext.payload.split_at(ciphertext.payload.len() - TAG_LEN);
        if Self::tag(&public_key, body) != tag {
            return Err(CryptoError::Malformed("integrity tag mismatch"));
        }
        let ks = Self::keystream(&public_key, body.len());
        Ok(body.iter().zip(ks).map(|(c, k)| c ^ k).collect())
    }
}
