//! Random-oracle-style hash functions: the l-bit exponent hash `h`, the
//! k-bit key-derivation hash `H_K`, injective transcript encoding, and the
//! MQV conversion function.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};

use crate::group::{GroupElement, GroupParams, Scalar};

#[derive(Debug, thiserror::Error)]
pub enum HashError {
    #[error("H_K rejects the identity element (failed subgroup policy upstream)")]
    IdentityInput,
    #[error("invalid hash configuration: {0}")]
    InvalidConfig(String),
}

/// Output lengths and domain-separation tag for one protocol instantiation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashConfig {
    /// Exponent-hash output bit length; 1 <= l <= bitlen_q.
    pub l: u64,
    /// Key-hash output bit length, k >= 128; defaults to 256.
    pub k: u64,
    /// Nonempty per-scheme domain-separation tag.
    pub scheme_label: Vec<u8>,
}

impl HashConfig {
    pub fn new(l: u64, k: u64, scheme_label: impl Into<Vec<u8>>) -> Result<Self, HashError> {
        let scheme_label = scheme_label.into();
        if l == 0 {
            return Err(HashError::InvalidConfig("l must be >= 1".into()));
        }
        if k < 128 {
            return Err(HashError::InvalidConfig("k must be >= 128".into()));
        }
        if scheme_label.is_empty() {
            return Err(HashError::InvalidConfig("scheme label must be nonempty".into()));
        }
        Ok(Self { l, k, scheme_label })
    }

    /// l = bitlen_q - 1, as the OAKE family sets the output length of h to
    /// approximately |q|.
    pub fn oake_family(params: &GroupParams, label: impl Into<Vec<u8>>) -> Self {
        Self::new(params.bitlen_q() - 1, 256, label).expect("valid config")
    }

    /// l = ceil(bitlen_q / 2), the (H)MQV setting.
    pub fn hmqv_family(params: &GroupParams, label: impl Into<Vec<u8>>) -> Self {
        Self::new((params.bitlen_q() + 1) / 2, 256, label).expect("valid config")
    }
}

/// One entry of the injectively encoded hash transcript.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TranscriptItem {
    Identity(Vec<u8>),
    Element(Vec<u8>),
    Scalar(Vec<u8>),
    Literal(Vec<u8>),
}

impl TranscriptItem {
    pub fn identity(name: &str) -> Self {
        TranscriptItem::Identity(name.as_bytes().to_vec())
    }

    pub fn element(x: &GroupElement, params: &GroupParams) -> Self {
        TranscriptItem::Element(x.to_fixed_bytes(params))
    }

    pub fn scalar(s: &Scalar, params: &GroupParams) -> Self {
        TranscriptItem::Scalar(s.to_fixed_bytes(params))
    }

    pub fn literal(bytes: impl Into<Vec<u8>>) -> Self {
        TranscriptItem::Literal(bytes.into())
    }

    fn kind_byte(&self) -> u8 {
        match self {
            TranscriptItem::Identity(_) => 0x01,
            TranscriptItem::Element(_) => 0x02,
            TranscriptItem::Scalar(_) => 0x03,
            TranscriptItem::Literal(_) => 0x04,
        }
    }

    fn payload(&self) -> &[u8] {
        match self {
            TranscriptItem::Identity(p)
            | TranscriptItem::Element(p)
            | TranscriptItem::Scalar(p)
            | TranscriptItem::Literal(p) => p,
        }
    }
}

/// Injective encoding: each item as (1 kind byte || 4-byte BE length || payload).
pub fn encode_items(items: &[TranscriptItem]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        out.push(item.kind_byte());
        out.extend_from_slice(&(item.payload().len() as u32).to_be_bytes());
        out.extend_from_slice(item.payload());
    }
    out
}

fn digest_domain(context: &[u8], label: &[u8], data: &[u8], block: u32) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(context);
    hasher.update((label.len() as u32).to_be_bytes());
    hasher.update(label);
    hasher.update(block.to_be_bytes());
    hasher.update(data);
    hasher.finalize().into()
}

/// The exponent hash h: leading l bits of the digest as an integer; a zero
/// truncation falls back to 2^l, which stays in Z_q^* since 2^l < q.
pub fn ro_h(params: &GroupParams, cfg: &HashConfig, items: &[TranscriptItem]) -> Scalar {
    assert!(!items.is_empty(), "ro_h requires at least one item");
    ro_h_encoded(params, cfg, &encode_items(items))
}

/// As `ro_h`, over an already-encoded transcript (used by vector checking).
pub fn ro_h_encoded(params: &GroupParams, cfg: &HashConfig, encoded: &[u8]) -> Scalar {
    assert!(cfg.l < params.bitlen_q(), "l must satisfy 2^l < q");
    let nbytes = ((cfg.l + 7) / 8) as usize;
    let mut bytes = Vec::with_capacity(nbytes);
    let mut block = 0u32;
    while bytes.len() < nbytes {
        bytes.extend_from_slice(&digest_domain(b"oake/h", &cfg.scheme_label, encoded, block));
        block += 1;
    }
    bytes.truncate(nbytes);
    let mut v = BigUint::from_bytes_be(&bytes);
    let excess = nbytes as u64 * 8 - cfg.l;
    v >>= excess;
    if v.is_zero() {
        v = BigUint::one() << cfg.l;
    }
    params.scalar(v)
}

/// The key-derivation hash H_K over an encoded (sigma, optional suffix),
/// producing exactly k bits. Rejects the identity element.
pub fn ro_hk(
    params: &GroupParams,
    cfg: &HashConfig,
    sigma: &GroupElement,
    suffix: Option<u8>,
) -> Result<Vec<u8>, HashError> {
    if sigma.is_identity() {
        return Err(HashError::IdentityInput);
    }
    let mut items = vec![TranscriptItem::element(sigma, params)];
    if let Some(s) = suffix {
        items.push(TranscriptItem::literal(vec![s]));
    }
    let encoded = encode_items(&items);
    let nbytes = ((cfg.k + 7) / 8) as usize;
    let mut bytes = Vec::with_capacity(nbytes);
    let mut block = 0u32;
    while bytes.len() < nbytes {
        bytes.extend_from_slice(&digest_domain(b"oake/HK", &cfg.scheme_label, &encoded, block));
        block += 1;
    }
    bytes.truncate(nbytes);
    if cfg.k % 8 != 0 {
        let mask = 0xffu8 << (8 - cfg.k % 8);
        let last = bytes.len() - 1;
        bytes[last] &= mask;
    }
    Ok(bytes)
}

/// MQV conversion: 2^l + (x mod 2^l), reduced mod q.
pub fn mqv_convert(params: &GroupParams, x: &GroupElement, l: u64) -> Scalar {
    let two_l = BigUint::one() << l;
    let low = x.value() % &two_l;
    params.scalar(two_l + low)
}
