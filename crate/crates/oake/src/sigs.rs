//! Challenge-divided Schnorr signature suite: the Schnorr baseline, both
//! online forms of challenge-divided Schnorr (with offline token storage),
//! and DSS, sharing the conversion function f and a scalar-op cost ledger.

use rand::Rng;

use crate::group::{GroupElement, GroupParams, OpCounter, Scalar};
use crate::hashing::{self, HashConfig, TranscriptItem};

#[derive(Debug, thiserror::Error)]
pub enum SigError {
    #[error("offline token already consumed")]
    TokenReuse,
    #[error("degenerate signature value (z = 0); discard the token and re-sign")]
    DegenerateValue,
}

/// Counts the scalar work of one signing/verification phase. Modular
/// inversions are the expensive operation the divided scheme avoids.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SigOpLedger {
    pub scalar_muls: u64,
    pub scalar_adds: u64,
    pub inversions: u64,
}

/// Hash configuration for message hashing in this suite; the conversion
/// function f stays the plain mod-q map and is deliberately not identified
/// with h.
pub fn sig_hash_config(params: &GroupParams) -> HashConfig {
    HashConfig::oake_family(params, "sig-h")
}

/// e = h(m), the divided-scheme and DSS message challenge.
pub fn message_challenge(params: &GroupParams, cfg: &HashConfig, m: &[u8]) -> Scalar {
    hashing::ro_h(params, cfg, &[TranscriptItem::literal(m.to_vec())])
}

/// e = h(a, m), the Fiat-Shamir Schnorr challenge.
pub fn schnorr_challenge(params: &GroupParams, cfg: &HashConfig, a: &GroupElement, m: &[u8]) -> Scalar {
    hashing::ro_h(
        params,
        cfg,
        &[TranscriptItem::element(a, params), TranscriptItem::literal(m.to_vec())],
    )
}

/// Conversion function f: the canonical integer reduced mod q, with the
/// usual zero fallback to 2^(bitlen_q - 1).
pub fn f_convert(params: &GroupParams, a: &GroupElement) -> Scalar {
    let s = params.scalar(a.value().clone());
    if s.is_zero() {
        params.scalar(num_bigint::BigUint::from(1u8) << (params.bitlen_q() - 1))
    } else {
        s
    }
}

// ---------------------------------------------------------------- Schnorr

/// Plain Schnorr key pair, U = g^w.
#[derive(Clone, Debug)]
pub struct SchnorrKeyPair {
    pub w: Scalar,
    pub u: GroupElement,
}

impl SchnorrKeyPair {
    pub fn generate<R: Rng + ?Sized>(params: &GroupParams, rng: &mut R) -> Self {
        let w = params.random_nonzero_scalar(rng);
        let u = params.exp(&params.generator(), &w, &mut OpCounter::new());
        Self { w, u }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchnorrSig {
    pub e: Scalar,
    pub z: Scalar,
}

/// Fiat-Shamir Schnorr: a = g^r, e = h(a, m), z = r + e*w.
pub fn schnorr_sign<R: Rng + ?Sized>(
    params: &GroupParams,
    cfg: &HashConfig,
    kp: &SchnorrKeyPair,
    m: &[u8],
    rng: &mut R,
    ledger: &mut SigOpLedger,
) -> SchnorrSig {
    let r = params.random_nonzero_scalar(rng);
    let a = params.exp(&params.generator(), &r, &mut OpCounter::new());
    let e = schnorr_challenge(params, cfg, &a, m);
    ledger.scalar_muls += 1;
    ledger.scalar_adds += 1;
    let z = params.scalar_add(&r, &params.scalar_mul(&e, &kp.w));
    SchnorrSig { e, z }
}

/// Reconstructs the commitment a = g^z * U^(-e) for the check g^z = a * U^e.
pub fn schnorr_recover_commitment(
    params: &GroupParams,
    u: &GroupElement,
    sig: &SchnorrSig,
) -> GroupElement {
    let mut ops = OpCounter::new();
    let gz = params.exp(&params.generator(), &sig.z, &mut ops);
    let ue = params.exp(u, &params.scalar_neg(&sig.e), &mut ops);
    params.mul(&gz, &ue, &mut ops)
}

pub fn schnorr_verify(
    params: &GroupParams,
    cfg: &HashConfig,
    u: &GroupElement,
    m: &[u8],
    sig: &SchnorrSig,
) -> bool {
    let a = schnorr_recover_commitment(params, u, sig);
    schnorr_challenge(params, cfg, &a, m) == sig.e
}

// --------------------------------------------- challenge-divided Schnorr

/// Online form of the divided scheme: which linear combination the signer
/// computes, and therefore what the offline token stores.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DsVariant {
    /// z = e*r + d*w; token stores (r, d, d*w).
    ErPlusDw,
    /// z = d*r + e*w; token stores (d, d*r).
    DrPlusEw,
}

/// Divided-Schnorr key pair with the sign convention U = g^(-w).
#[derive(Clone, Debug)]
pub struct DividedSchnorrKeyPair {
    pub w: Scalar,
    pub u: GroupElement,
}

impl DividedSchnorrKeyPair {
    pub fn generate<R: Rng + ?Sized>(params: &GroupParams, rng: &mut R) -> Self {
        let w = params.random_nonzero_scalar(rng);
        Self::from_secret(params, w)
    }

    pub fn from_secret(params: &GroupParams, w: Scalar) -> Self {
        let u = params.exp(&params.generator(), &params.scalar_neg(&w), &mut OpCounter::new());
        Self { w, u }
    }
}

/// Single-use offline precomputation: d = f(g^r) plus the variant's stored
/// scalars. Variant 2 stores one scalar fewer.
#[derive(Clone, Debug)]
pub struct OfflineToken {
    variant: DsVariant,
    d: Scalar,
    /// r for variant 1, d*r for variant 2.
    r_part: Scalar,
    /// d*w, stored by variant 1 only.
    dw: Option<Scalar>,
    consumed: bool,
}

impl OfflineToken {
    pub fn variant(&self) -> DsVariant {
        self.variant
    }

    /// Number of stored scalars: 3 for variant 1, 2 for variant 2.
    pub fn stored_scalars(&self) -> usize {
        2 + usize::from(self.dw.is_some())
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }
}

/// Offline phase: draw r, compute a = g^r, d = f(a), and the stored parts.
pub fn ds_offline<R: Rng + ?Sized>(
    params: &GroupParams,
    kp: &DividedSchnorrKeyPair,
    variant: DsVariant,
    rng: &mut R,
    ledger: &mut SigOpLedger,
) -> OfflineToken {
    let r = params.random_nonzero_scalar(rng);
    ds_offline_with_r(params, kp, variant, r, ledger)
}

pub fn ds_offline_with_r(
    params: &GroupParams,
    kp: &DividedSchnorrKeyPair,
    variant: DsVariant,
    r: Scalar,
    ledger: &mut SigOpLedger,
) -> OfflineToken {
    let a = params.exp(&params.generator(), &r, &mut OpCounter::new());
    let d = f_convert(params, &a);
    ledger.scalar_muls += 1;
    match variant {
        DsVariant::ErPlusDw => {
            let dw = params.scalar_mul(&d, &kp.w);
            OfflineToken { variant, d, r_part: r, dw: Some(dw), consumed: false }
        }
        DsVariant::DrPlusEw => {
            let dr = params.scalar_mul(&d, &r);
            OfflineToken { variant, d, r_part: dr, dw: None, consumed: false }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DividedSchnorrSig {
    pub d: Scalar,
    pub z: Scalar,
}

/// Online signing: e = h(m), then one scalar multiplication and one
/// addition. Consumes the token.
pub fn ds_sign(
    params: &GroupParams,
    cfg: &HashConfig,
    kp: &DividedSchnorrKeyPair,
    token: &mut OfflineToken,
    m: &[u8],
    ledger: &mut SigOpLedger,
) -> Result<DividedSchnorrSig, SigError> {
    let e = message_challenge(params, cfg, m);
    ds_sign_prehashed(params, kp, token, &e, ledger)
}

/// Signing with a caller-provided message hash e.
pub fn ds_sign_prehashed(
    params: &GroupParams,
    kp: &DividedSchnorrKeyPair,
    token: &mut OfflineToken,
    e: &Scalar,
    ledger: &mut SigOpLedger,
) -> Result<DividedSchnorrSig, SigError> {
    if token.consumed {
        return Err(SigError::TokenReuse);
    }
    token.consumed = true;
    let z = match token.variant {
        DsVariant::ErPlusDw => {
            // z = e*r + dw with dw prestored.
            let er = params.scalar_mul(e, &token.r_part);
            ledger.scalar_muls += 1;
            ledger.scalar_adds += 1;
            params.scalar_add(&er, token.dw.as_ref().expect("variant 1 stores dw"))
        }
        DsVariant::DrPlusEw => {
            // z = dr + e*w with dr prestored.
            let ew = params.scalar_mul(e, &kp.w);
            ledger.scalar_muls += 1;
            ledger.scalar_adds += 1;
            params.scalar_add(&token.r_part, &ew)
        }
    };
    if z.is_zero() {
        return Err(SigError::DegenerateValue);
    }
    Ok(DividedSchnorrSig { d: token.d.clone(), z })
}

/// Recomputes the commitment from a divided signature and challenge e:
/// variant 1 checks f(g^(z/e) * U^(d/e)) = d, variant 2 divides by d.
/// Returns `None` when the divisor is not invertible or a field is out of
/// Z_q^*.
pub fn ds_recover_commitment(
    params: &GroupParams,
    u: &GroupElement,
    sig: &DividedSchnorrSig,
    e: &Scalar,
    variant: DsVariant,
    ledger: &mut SigOpLedger,
) -> Option<GroupElement> {
    if sig.d.is_zero() || sig.z.is_zero() || e.is_zero() {
        return None;
    }
    let inv = match variant {
        DsVariant::ErPlusDw => params.scalar_inv(e)?,
        DsVariant::DrPlusEw => params.scalar_inv(&sig.d)?,
    };
    ledger.inversions += 1;
    let (gexp, uexp) = match variant {
        DsVariant::ErPlusDw => (params.scalar_mul(&sig.z, &inv), params.scalar_mul(&sig.d, &inv)),
        DsVariant::DrPlusEw => (params.scalar_mul(&sig.z, &inv), params.scalar_mul(e, &inv)),
    };
    ledger.scalar_muls += 2;
    let mut ops = OpCounter::new();
    Some(params.multi_exp2(&params.generator(), &gexp, u, &uexp, &mut ops))
}

pub fn ds_verify(
    params: &GroupParams,
    cfg: &HashConfig,
    u: &GroupElement,
    m: &[u8],
    sig: &DividedSchnorrSig,
    variant: DsVariant,
    ledger: &mut SigOpLedger,
) -> bool {
    let e = message_challenge(params, cfg, m);
    ds_verify_prehashed(params, u, &e, sig, variant, ledger)
}

/// Verification with a precomputed e = h(m); the inversion then happens in
/// the verifier's offline phase for variant 1.
pub fn ds_verify_prehashed(
    params: &GroupParams,
    u: &GroupElement,
    e: &Scalar,
    sig: &DividedSchnorrSig,
    variant: DsVariant,
    ledger: &mut SigOpLedger,
) -> bool {
    match ds_recover_commitment(params, u, sig, e, variant, ledger) {
        Some(a) => f_convert(params, &a) == sig.d,
        None => false,
    }
}

// -------------------------------------------------------------------- DSS

/// DSS key pair, U = g^w.
pub type DssKeyPair = SchnorrKeyPair;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DssSig {
    pub d: Scalar,
    pub s: Scalar,
}

/// DSS signing: d = f(g^r), s = (h(m) + d*w) * r^(-1); degenerate r or s is
/// resampled. One inversion per signature.
pub fn dss_sign<R: Rng + ?Sized>(
    params: &GroupParams,
    cfg: &HashConfig,
    kp: &DssKeyPair,
    m: &[u8],
    rng: &mut R,
    ledger: &mut SigOpLedger,
) -> DssSig {
    let e = message_challenge(params, cfg, m);
    loop {
        let r = params.random_nonzero_scalar(rng);
        if let Some(sig) = dss_sign_with_r(params, kp, &e, &r, ledger) {
            return sig;
        }
    }
}

/// One DSS signing attempt with fixed randomness; `None` when s degenerates.
pub fn dss_sign_with_r(
    params: &GroupParams,
    kp: &DssKeyPair,
    e: &Scalar,
    r: &Scalar,
    ledger: &mut SigOpLedger,
) -> Option<DssSig> {
    let a = params.exp(&params.generator(), r, &mut OpCounter::new());
    let d = f_convert(params, &a);
    let r_inv = params.scalar_inv(r)?;
    ledger.inversions += 1;
    let dw = params.scalar_mul(&d, &kp.w);
    let s = params.scalar_mul(&params.scalar_add(e, &dw), &r_inv);
    ledger.scalar_muls += 2;
    ledger.scalar_adds += 1;
    if s.is_zero() {
        return None;
    }
    Some(DssSig { d, s })
}

/// DSS commitment recovery: g^(e/s) * U^(d/s); the inversion of s cannot be
/// precomputed since s arrives with the signature.
pub fn dss_recover_commitment(
    params: &GroupParams,
    u: &GroupElement,
    e: &Scalar,
    sig: &DssSig,
    ledger: &mut SigOpLedger,
) -> Option<GroupElement> {
    if sig.d.is_zero() || sig.s.is_zero() {
        return None;
    }
    let s_inv = params.scalar_inv(&sig.s)?;
    ledger.inversions += 1;
    let gexp = params.scalar_mul(e, &s_inv);
    let uexp = params.scalar_mul(&sig.d, &s_inv);
    ledger.scalar_muls += 2;
    Some(params.multi_exp2(&params.generator(), &gexp, u, &uexp, &mut OpCounter::new()))
}

pub fn dss_verify(
    params: &GroupParams,
    cfg: &HashConfig,
    u: &GroupElement,
    m: &[u8],
    sig: &DssSig,
    ledger: &mut SigOpLedger,
) -> bool {
    let e = message_challenge(params, cfg, m);
    match dss_recover_commitment(params, u, &e, sig, ledger) {
        Some(a) => f_convert(params, &a) == sig.d,
        None => false,
    }
}
