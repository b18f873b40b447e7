//! Protocol core: per-scheme exponent derivation (c, d, e), shared-secret
//! formulas, offline precomputation, subgroup-test policies, key derivation
//! and confirmation, and HDR signature values with message slots.

use hmac::{Hmac, Mac};
use num_bigint::BigUint;
use rand::Rng;
use sha2::Sha256;

use crate::group::{GroupElement, GroupParams, OpCounter, Scalar};
use crate::hashing::{self, HashConfig, HashError, TranscriptItem};

pub mod split;

#[derive(Debug, thiserror::Error)]
pub enum KexError {
    #[error("peer element is not a valid DH-component")]
    InvalidPeerElement,
    #[error("small subgroup detected: a key-share factor collapsed to the identity")]
    SmallSubgroupDetected,
    #[error("confirmation MAC mismatch")]
    MacMismatch,
    #[error("hash-derived exponent is not invertible")]
    NonInvertibleExponent,
    #[error("invalid challenge DH-component")]
    InvalidChallenge,
    #[error("scheme requires a peer DH-component")]
    MissingPeerDh,
    #[error("operation not defined for scheme {0}")]
    UnsupportedScheme(&'static str),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Group(#[from] crate::group::GroupError),
}

/// The implemented protocol taxonomy. `OOake` and `OHmqv` are one-round and
/// admit no responder DH-component; as such they intrinsically lack perfect
/// forward secrecy and are vulnerable to key-compromise impersonation once
/// the responder's static key leaks.
///
/// OAKE and sOAKE are reasonably deniable: their shared secret is computable
/// from the two ephemeral DH-exponents and the public transcript alone. The
/// robust variants fold g^ab into the secret and give that property up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeId {
    Oake,
    SOake,
    ROake,
    RsOake,
    OOake,
    Hmqv,
    Mqv,
    OHmqv,
}

impl SchemeId {
    pub const ALL: [SchemeId; 8] = [
        SchemeId::Oake,
        SchemeId::SOake,
        SchemeId::ROake,
        SchemeId::RsOake,
        SchemeId::OOake,
        SchemeId::Hmqv,
        SchemeId::Mqv,
        SchemeId::OHmqv,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SchemeId::Oake => "oake",
            SchemeId::SOake => "soake",
            SchemeId::ROake => "roake",
            SchemeId::RsOake => "rsoake",
            SchemeId::OOake => "ooake",
            SchemeId::Hmqv => "hmqv",
            SchemeId::Mqv => "mqv",
            SchemeId::OHmqv => "ohmqv",
        }
    }

    pub fn parse(s: &str) -> Option<SchemeId> {
        Self::ALL.into_iter().find(|sch| sch.label() == s)
    }

    pub fn is_one_round(self) -> bool {
        matches!(self, SchemeId::OOake | SchemeId::OHmqv)
    }

    /// OAKE, sOAKE and the robust variants; these carry HDR message slots
    /// and support the Case-1 embedded subgroup test via separable factors.
    pub fn is_oake_two_round(self) -> bool {
        matches!(self, SchemeId::Oake | SchemeId::SOake | SchemeId::ROake | SchemeId::RsOake)
    }

    pub fn is_mqv_family(self) -> bool {
        matches!(self, SchemeId::Hmqv | SchemeId::Mqv | SchemeId::OHmqv)
    }

    /// Robust variants multiply the shared secret by g^ab.
    pub fn is_robust(self) -> bool {
        matches!(self, SchemeId::ROake | SchemeId::RsOake)
    }

    /// Single-hash variants fix c = d = 1.
    pub fn is_single_hash(self) -> bool {
        matches!(self, SchemeId::SOake | SchemeId::RsOake)
    }
}

/// Subgroup-test policy for a peer's DH-component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CofactorMode {
    /// Verify x^q = 1 on receipt; key formulas use plain exponents.
    Explicit,
    /// Exponents multiplied by t; factors computed separately and the
    /// ephemeral factor checked against the identity.
    EmbeddedCase1,
    /// Exponents multiplied by t; only the final secret checked (schemes
    /// that check at all).
    EmbeddedCase2,
}

impl CofactorMode {
    pub const ALL: [CofactorMode; 3] =
        [CofactorMode::Explicit, CofactorMode::EmbeddedCase1, CofactorMode::EmbeddedCase2];

    pub fn label(self) -> &'static str {
        match self {
            CofactorMode::Explicit => "explicit",
            CofactorMode::EmbeddedCase1 => "embedded1",
            CofactorMode::EmbeddedCase2 => "embedded2",
        }
    }

    pub fn parse(s: &str) -> Option<CofactorMode> {
        Self::ALL.into_iter().find(|m| m.label() == s)
    }

    pub fn is_embedded(self) -> bool {
        !matches!(self, CofactorMode::Explicit)
    }
}

/// Which transcript feeds the OAKE `d` exponent. `Hdr` is the default; the
/// other two are textual variants kept behind this switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExponentVariant {
    /// d = h(m_B, B-id, B, X)
    #[default]
    Hdr,
    /// d = h(A-id, B-id, B, X), the SSJPOK form.
    Ssjpok,
    /// d = h(B-id, B, Y), the form used by the public-computation split,
    /// which makes d*b offline-precomputable by the responder.
    SplitFriendly,
}

/// Full per-run protocol configuration, including the deterministic
/// exponent-override hook used by oracle-checked tests.
#[derive(Clone, Debug)]
pub struct SchemeConfig {
    pub scheme: SchemeId,
    pub t_mode: CofactorMode,
    /// Drop public keys (not identities) from the c/d/e hash inputs.
    pub public_key_free: bool,
    pub variant: ExponentVariant,
    pub hash: HashConfig,
    /// Test hook: inject fixed (c, d, e) instead of hash-derived values.
    pub stub: Option<Exponents>,
}

impl SchemeConfig {
    pub fn new(scheme: SchemeId, t_mode: CofactorMode, params: &GroupParams) -> Self {
        let hash = if scheme.is_mqv_family() {
            HashConfig::hmqv_family(params, scheme.label())
        } else {
            HashConfig::oake_family(params, scheme.label())
        };
        Self { scheme, t_mode, public_key_free: false, variant: ExponentVariant::default(), hash, stub: None }
    }

    pub fn with_stub(mut self, exps: Exponents) -> Self {
        self.stub = Some(exps);
        self
    }

    pub fn pk_free(mut self, on: bool) -> Self {
        self.public_key_free = on;
        self
    }

    pub fn with_variant(mut self, variant: ExponentVariant) -> Self {
        self.variant = variant;
        self
    }
}

/// A party's long-term identity and static key pair (a, A = g^a).
#[derive(Clone, Debug)]
pub struct KeyPair {
    pub identity: String,
    pub secret: Scalar,
    pub public: GroupElement,
}

impl KeyPair {
    pub fn generate<R: Rng + ?Sized>(params: &GroupParams, identity: &str, rng: &mut R) -> Self {
        let secret = params.random_nonzero_scalar(rng);
        Self::from_secret(params, identity, secret)
    }

    pub fn from_secret(params: &GroupParams, identity: &str, secret: Scalar) -> Self {
        let public = params.pow_fast(&params.generator(), secret.value());
        debug_assert!(params.explicit_subgroup_test(&public));
        Self { identity: identity.to_string(), secret, public }
    }
}

/// The per-session derived exponents. Unused slots are fixed to 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exponents {
    pub c: Scalar,
    pub d: Scalar,
    pub e: Scalar,
}

impl Exponents {
    pub fn stub_u64(params: &GroupParams, c: u64, d: u64, e: u64) -> Self {
        Self {
            c: params.scalar_from_u64(c),
            d: params.scalar_from_u64(d),
            e: params.scalar_from_u64(e),
        }
    }
}

/// Offline-precomputed ephemeral state: the DH-exponent and component, plus
/// the static-peer term (B^dx for an initiator, A^cy for a responder; robust
/// variants fold in the extra static exponent) when the scheme's exponent
/// inputs are available before the peer's DH-component arrives.
#[derive(Clone, Debug)]
pub struct PrecomputedLeaf {
    pub x: Scalar,
    pub big_x: GroupElement,
    pub static_peer_term: Option<GroupElement>,
}

impl PrecomputedLeaf {
    /// Draw a fresh DH pair with no precomputed peer term.
    pub fn fresh<R: Rng + ?Sized>(params: &GroupParams, rng: &mut R) -> Self {
        let x = params.random_nonzero_scalar(rng);
        let big_x = params.pow_fast(&params.generator(), x.value());
        Self { x, big_x, static_peer_term: None }
    }

    pub fn from_exponent(params: &GroupParams, x: Scalar) -> Self {
        let big_x = params.pow_fast(&params.generator(), x.value());
        Self { x, big_x, static_peer_term: None }
    }

    /// Attach the offline static-peer term for `role` when the scheme admits
    /// one ((s)OAKE and robust variants; (H)MQV cannot precompute B^e or A^d).
    pub fn attach_peer_term(
        &mut self,
        params: &GroupParams,
        cfg: &SchemeConfig,
        role: Role,
        own: &KeyPair,
        peer_id: &str,
        peer_pk: &GroupElement,
        m_a: &[u8],
        m_b: &[u8],
        ops: &mut OpCounter,
    ) {
        if !cfg.scheme.is_oake_two_round() {
            return;
        }
        let mask = match role {
            Role::Initiator => {
                // d pairs with the initiator's own x; d = 1 for single-hash
                // variants, hash-derived otherwise.
                if cfg.scheme.is_single_hash() {
                    params.scalar_from_u64(1)
                } else {
                    match cfg.variant {
                        ExponentVariant::SplitFriendly => return, // d needs Y
                        _ => stubbed(cfg, |s| s.d.clone()).unwrap_or_else(|| {
                            h_d(params, cfg, m_b, &own.identity, peer_id, Some(peer_pk), &self.big_x, None)
                        }),
                    }
                }
            }
            Role::Responder => {
                if cfg.scheme.is_single_hash() {
                    params.scalar_from_u64(1)
                } else {
                    stubbed(cfg, |s| s.c.clone())
                        .unwrap_or_else(|| h_c(params, cfg, m_a, peer_id, Some(peer_pk), &self.big_x))
                }
            }
        };
        let mut k = params.scalar_mul(&mask, &self.x).value().clone();
        if cfg.scheme.is_robust() {
            k += own.secret.value();
        }
        if cfg.t_mode.is_embedded() {
            k *= params.cofactor();
        }
        self.static_peer_term = Some(params.exp_int(peer_pk, &k, ops));
    }
}

/// Which side of the exchange this party plays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Initiator,
    Responder,
}

impl Role {
    pub fn flip(self) -> Role {
        match self {
            Role::Initiator => Role::Responder,
            Role::Responder => Role::Initiator,
        }
    }
}

/// The shared DH-secret sigma = K_A = K_B.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedSecret {
    pub sigma: GroupElement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionKey(pub Vec<u8>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacKey(pub Vec<u8>);

pub(crate) fn stubbed<F: Fn(&Exponents) -> Scalar>(cfg: &SchemeConfig, pick: F) -> Option<Scalar> {
    cfg.stub.as_ref().map(pick)
}

fn push_pk(items: &mut Vec<TranscriptItem>, cfg: &SchemeConfig, params: &GroupParams, pk: Option<&GroupElement>) {
    if cfg.public_key_free {
        return;
    }
    if let Some(pk) = pk {
        items.push(TranscriptItem::element(pk, params));
    }
}

/// c = h(m_A, A-id, A, Y) for the OAKE family.
pub(crate) fn h_c(
    params: &GroupParams,
    cfg: &SchemeConfig,
    m_a: &[u8],
    id_a: &str,
    pk_a: Option<&GroupElement>,
    y: &GroupElement,
) -> Scalar {
    let mut items = vec![TranscriptItem::literal(m_a.to_vec()), TranscriptItem::identity(id_a)];
    push_pk(&mut items, cfg, params, pk_a);
    items.push(TranscriptItem::element(y, params));
    hashing::ro_h(params, &cfg.hash, &items)
}

/// The OAKE-family d exponent under the configured input variant. The
/// SSJPOK form additionally binds the initiator identity `id_a`; the
/// split-friendly form binds Y instead of X so that d*b can be computed
/// offline by the responder.
#[allow(clippy::too_many_arguments)]
pub(crate) fn h_d(
    params: &GroupParams,
    cfg: &SchemeConfig,
    m_b: &[u8],
    id_a: &str,
    id_b: &str,
    pk_b: Option<&GroupElement>,
    x: &GroupElement,
    y: Option<&GroupElement>,
) -> Scalar {
    let mut items = Vec::new();
    match cfg.variant {
        ExponentVariant::Hdr => {
            items.push(TranscriptItem::literal(m_b.to_vec()));
            items.push(TranscriptItem::identity(id_b));
            push_pk(&mut items, cfg, params, pk_b);
            items.push(TranscriptItem::element(x, params));
        }
        ExponentVariant::Ssjpok => {
            items.push(TranscriptItem::identity(id_a));
            items.push(TranscriptItem::identity(id_b));
            push_pk(&mut items, cfg, params, pk_b);
            items.push(TranscriptItem::element(x, params));
        }
        ExponentVariant::SplitFriendly => {
            items.push(TranscriptItem::identity(id_b));
            push_pk(&mut items, cfg, params, pk_b);
            items.push(TranscriptItem::element(
                y.expect("split-friendly d requires the responder component"),
                params,
            ));
        }
    }
    hashing::ro_h(params, &cfg.hash, &items)
}

pub(crate) fn h_e_pair(params: &GroupParams, cfg: &SchemeConfig, x: &GroupElement, y: &GroupElement) -> Scalar {
    let items = vec![TranscriptItem::element(x, params), TranscriptItem::element(y, params)];
    hashing::ro_h(params, &cfg.hash, &items)
}

/// e = h(m_A, m_B, A-id, A, B-id, B, X, Y), the single sOAKE hash.
#[allow(clippy::too_many_arguments)]
pub(crate) fn h_e_soake(
    params: &GroupParams,
    cfg: &SchemeConfig,
    m_a: &[u8],
    m_b: &[u8],
    id_a: &str,
    pk_a: Option<&GroupElement>,
    id_b: &str,
    pk_b: Option<&GroupElement>,
    x: &GroupElement,
    y: &GroupElement,
) -> Scalar {
    let mut items = vec![
        TranscriptItem::literal(m_a.to_vec()),
        TranscriptItem::literal(m_b.to_vec()),
        TranscriptItem::identity(id_a),
    ];
    push_pk(&mut items, cfg, params, pk_a);
    items.push(TranscriptItem::identity(id_b));
    push_pk(&mut items, cfg, params, pk_b);
    items.push(TranscriptItem::element(x, params));
    items.push(TranscriptItem::element(y, params));
    hashing::ro_h(params, &cfg.hash, &items)
}

/// Derives the scheme's (c, d, e) from the transcript, or returns the
/// injected stub when the test hook is set.
#[allow(clippy::too_many_arguments)]
pub fn derive_cde(
    params: &GroupParams,
    cfg: &SchemeConfig,
    m_a: &[u8],
    m_b: &[u8],
    id_a: &str,
    pk_a: &GroupElement,
    id_b: &str,
    pk_b: &GroupElement,
    x: &GroupElement,
    y: Option<&GroupElement>,
) -> Result<Exponents, KexError> {
    if let Some(stub) = &cfg.stub {
        return Ok(stub.clone());
    }
    if y.is_none() && !cfg.scheme.is_one_round() {
        return Err(KexError::MissingPeerDh);
    }
    let one = params.scalar_from_u64(1);
    let pk_a_opt = Some(pk_a);
    let pk_b_opt = Some(pk_b);
    let exps = match cfg.scheme {
        SchemeId::Oake | SchemeId::ROake => {
            let y = y.ok_or(KexError::MissingPeerDh)?;
            let c = h_c(params, cfg, m_a, id_a, pk_a_opt, y);
            let d = h_d(params, cfg, m_b, id_a, id_b, pk_b_opt, x, Some(y));
            let e = h_e_pair(params, cfg, x, y);
            Exponents { c, d, e }
        }
        SchemeId::SOake | SchemeId::RsOake => {
            let y = y.ok_or(KexError::MissingPeerDh)?;
            let e = h_e_soake(params, cfg, m_a, m_b, id_a, pk_a_opt, id_b, pk_b_opt, x, y);
            Exponents { c: one.clone(), d: one, e }
        }
        SchemeId::OOake => {
            let mut items = vec![TranscriptItem::identity(id_a)];
            push_pk(&mut items, cfg, params, pk_a_opt);
            items.push(TranscriptItem::identity(id_b));
            push_pk(&mut items, cfg, params, pk_b_opt);
            items.push(TranscriptItem::element(x, params));
            let e = hashing::ro_h(params, &cfg.hash, &items);
            Exponents { c: one.clone(), d: one, e }
        }
        SchemeId::Hmqv => {
            let y = y.ok_or(KexError::MissingPeerDh)?;
            let d_items = vec![TranscriptItem::element(x, params), TranscriptItem::identity(id_b)];
            let e_items = vec![TranscriptItem::element(y, params), TranscriptItem::identity(id_a)];
            Exponents {
                c: one,
                d: hashing::ro_h(params, &cfg.hash, &d_items),
                e: hashing::ro_h(params, &cfg.hash, &e_items),
            }
        }
        SchemeId::Mqv => {
            let y = y.ok_or(KexError::MissingPeerDh)?;
            Exponents {
                c: one,
                d: hashing::mqv_convert(params, x, cfg.hash.l),
                e: hashing::mqv_convert(params, y, cfg.hash.l),
            }
        }
        SchemeId::OHmqv => {
            let items = vec![
                TranscriptItem::element(x, params),
                TranscriptItem::identity(id_a),
                TranscriptItem::identity(id_b),
            ];
            Exponents { c: one.clone(), d: hashing::ro_h(params, &cfg.hash, &items), e: one }
        }
    };
    Ok(exps)
}

/// Validates a received DH-component under the configured subgroup policy.
/// Explicit mode runs the full x^q = 1 test; embedded modes only require
/// supergroup membership (excluding the identity) and rely on the t-powered
/// key formula.
pub fn validate_peer_dh(params: &GroupParams, mode: CofactorMode, x: &GroupElement) -> Result<(), KexError> {
    if x.is_identity() {
        return Err(KexError::InvalidPeerElement);
    }
    if mode == CofactorMode::Explicit && !params.explicit_subgroup_test(x) {
        return Err(KexError::InvalidPeerElement);
    }
    Ok(())
}

struct FactorPlan {
    /// Exponent on the peer's static public key.
    static_exp: BigUint,
    /// Exponent on the peer's DH-component.
    eph_exp: BigUint,
}

fn plan_factors(
    params: &GroupParams,
    cfg: &SchemeConfig,
    role: Role,
    own: &KeyPair,
    eph: &PrecomputedLeaf,
    exps: &Exponents,
) -> FactorPlan {
    // Orientation: the initiator pairs d with its own x and folds c into its
    // ephemeral-side exponent; the responder is the mirror image.
    let (mask_static, mask_eph) = match role {
        Role::Initiator => (&exps.d, &exps.c),
        Role::Responder => (&exps.c, &exps.d),
    };
    let mut static_exp = params.scalar_mul(mask_static, &eph.x).value().clone();
    if cfg.scheme.is_robust() {
        static_exp += own.secret.value();
        static_exp %= params.order();
    }
    let eph_scalar = params.scalar_add(
        &params.scalar_mul(mask_eph, &own.secret),
        &params.scalar_mul(&exps.e, &eph.x),
    );
    FactorPlan { static_exp, eph_exp: eph_scalar.value().clone() }
}

/// Computes sigma for this party. The peer's DH-component must already have
/// passed `validate_peer_dh` for the configured mode; embedded modes apply
/// the cofactor inside the formula and run their identity checks here.
#[allow(clippy::too_many_arguments)]
pub fn compute_shared_secret(
    params: &GroupParams,
    cfg: &SchemeConfig,
    role: Role,
    own: &KeyPair,
    eph: Option<&PrecomputedLeaf>,
    peer_pk: &GroupElement,
    peer_dh: Option<&GroupElement>,
    exps: &Exponents,
    ops: &mut OpCounter,
) -> Result<SharedSecret, KexError> {
    let t = params.cofactor();
    let embedded = cfg.t_mode.is_embedded();
    let tfactor = |k: &BigUint| if embedded { k * t } else { k.clone() };

    let sigma = match (cfg.scheme.is_one_round(), role) {
        // One-round initiator: no incoming component at all.
        (true, Role::Initiator) => {
            let eph = eph.ok_or(KexError::MissingPeerDh)?;
            let mask = match cfg.scheme {
                SchemeId::OOake => &exps.e,
                SchemeId::OHmqv => &exps.d,
                _ => unreachable!(),
            };
            // oOAKE: B^(a+ex); oHMQV: B^(x+da).
            let k = match cfg.scheme {
                SchemeId::OOake => params.scalar_add(&own.secret, &params.scalar_mul(mask, &eph.x)),
                _ => params.scalar_add(&eph.x, &params.scalar_mul(mask, &own.secret)),
            };
            params.exp_int(peer_pk, &tfactor(k.value()), ops)
        }
        // One-round responder: holds no ephemeral of its own.
        // oOAKE: A^b * X^(eb); oHMQV: A^(db) * X^b.
        (true, Role::Responder) => {
            let x = peer_dh.ok_or(KexError::MissingPeerDh)?;
            let (pk_mask, dh_mask) = match cfg.scheme {
                SchemeId::OOake => (None, Some(&exps.e)),
                SchemeId::OHmqv => (Some(&exps.d), None),
                _ => unreachable!(),
            };
            let masked = |mask: Option<&Scalar>| match mask {
                Some(m) => params.scalar_mul(m, &own.secret),
                None => own.secret.clone(),
            };
            let static_exp = tfactor(masked(pk_mask).value());
            let eph_exp = tfactor(masked(dh_mask).value());
            if cfg.t_mode == CofactorMode::EmbeddedCase1 {
                let static_term = params.exp_int(peer_pk, &static_exp, ops);
                let eph_term = params.exp_int(x, &eph_exp, ops);
                if eph_term.is_identity() {
                    return Err(KexError::SmallSubgroupDetected);
                }
                params.mul(&static_term, &eph_term, ops)
            } else {
                params.multi_exp2_int(peer_pk, &static_exp, x, &eph_exp, ops)
            }
        }
        (false, _) => {
            let eph = eph.ok_or(KexError::MissingPeerDh)?;
            let peer_dh = peer_dh.ok_or(KexError::MissingPeerDh)?;
            if cfg.scheme.is_mqv_family() {
                // (peer_dh * peer_pk^mask_peer)^(own_eph + mask_own * own_static),
                // expanded to a two-base product for simultaneous exponentiation.
                let (mask_own, mask_peer) = match role {
                    Role::Initiator => (&exps.d, &exps.e),
                    Role::Responder => (&exps.e, &exps.d),
                };
                let s = params.scalar_add(&eph.x, &params.scalar_mul(mask_own, &own.secret));
                let st = tfactor(s.value());
                let peer_exp = tfactor(params.scalar_mul(mask_peer, &s).value());
                params.multi_exp2_int(peer_dh, &st, peer_pk, &peer_exp, ops)
            } else {
                let plan = plan_factors(params, cfg, role, own, eph, exps);
                let eph_exp = tfactor(&plan.eph_exp);
                if cfg.t_mode == CofactorMode::EmbeddedCase1 {
                    let static_term = match &eph.static_peer_term {
                        Some(term) => term.clone(),
                        None => params.exp_int(peer_pk, &tfactor(&plan.static_exp), ops),
                    };
                    let eph_term = params.exp_int(peer_dh, &eph_exp, ops);
                    if eph_term.is_identity() {
                        return Err(KexError::SmallSubgroupDetected);
                    }
                    params.mul(&static_term, &eph_term, ops)
                } else if let Some(term) = &eph.static_peer_term {
                    let eph_term = params.exp_int(peer_dh, &eph_exp, ops);
                    params.mul(term, &eph_term, ops)
                } else {
                    params.multi_exp2_int(peer_pk, &tfactor(&plan.static_exp), peer_dh, &eph_exp, ops)
                }
            }
        }
    };

    // MQV checks sigma != 1 in every mode; Case-2 checks it for every scheme
    // except basic HMQV and its one-round variant, which deliberately skip it.
    let checks_sigma = cfg.scheme == SchemeId::Mqv
        || (cfg.t_mode == CofactorMode::EmbeddedCase2
            && !matches!(cfg.scheme, SchemeId::Hmqv | SchemeId::OHmqv));
    if checks_sigma && sigma.is_identity() {
        return Err(KexError::SmallSubgroupDetected);
    }
    Ok(SharedSecret { sigma })
}

/// Session-key (and MAC-key, in confirmed mode) derivation from sigma.
pub fn derive_keys(
    params: &GroupParams,
    cfg: &SchemeConfig,
    sigma: &SharedSecret,
    confirmed: bool,
) -> Result<(SessionKey, Option<MacKey>), KexError> {
    if confirmed {
        let k = hashing::ro_hk(params, &cfg.hash, &sigma.sigma, Some(1))?;
        let km = hashing::ro_hk(params, &cfg.hash, &sigma.sigma, Some(0))?;
        Ok((SessionKey(k), Some(MacKey(km))))
    } else {
        let k = hashing::ro_hk(params, &cfg.hash, &sigma.sigma, None)?;
        Ok((SessionKey(k), None))
    }
}

/// Key-confirmation message family: (s)OAKE MACs the literal bits 1/0,
/// three-round HMQV MACs 0/1, three-round MQV MACs the full direction tuple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfirmFamily {
    OakeFamily,
    Hmqv3,
    Mqv3,
}

impl ConfirmFamily {
    pub fn for_scheme(scheme: SchemeId) -> ConfirmFamily {
        match scheme {
            SchemeId::Hmqv | SchemeId::OHmqv => ConfirmFamily::Hmqv3,
            SchemeId::Mqv => ConfirmFamily::Mqv3,
            _ => ConfirmFamily::OakeFamily,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfirmDirection {
    ResponderToInitiator,
    InitiatorToResponder,
}

/// Transcript context for the MQV confirmation tuples.
#[derive(Clone, Debug)]
pub struct ConfirmContext {
    pub initiator_id: String,
    pub responder_id: String,
    pub x: GroupElement,
    pub y: GroupElement,
}

fn confirm_message(
    family: ConfirmFamily,
    direction: ConfirmDirection,
    params: &GroupParams,
    ctx: Option<&ConfirmContext>,
) -> Vec<u8> {
    use ConfirmDirection::*;
    match family {
        ConfirmFamily::OakeFamily => match direction {
            ResponderToInitiator => vec![1u8],
            InitiatorToResponder => vec![0u8],
        },
        ConfirmFamily::Hmqv3 => match direction {
            ResponderToInitiator => vec![0u8],
            InitiatorToResponder => vec![1u8],
        },
        ConfirmFamily::Mqv3 => {
            let ctx = ctx.expect("MQV confirmation needs the session context");
            let items = match direction {
                ResponderToInitiator => vec![
                    TranscriptItem::literal(vec![2u8]),
                    TranscriptItem::identity(&ctx.responder_id),
                    TranscriptItem::identity(&ctx.initiator_id),
                    TranscriptItem::element(&ctx.y, params),
                    TranscriptItem::element(&ctx.x, params),
                ],
                InitiatorToResponder => vec![
                    TranscriptItem::literal(vec![3u8]),
                    TranscriptItem::identity(&ctx.initiator_id),
                    TranscriptItem::identity(&ctx.responder_id),
                    TranscriptItem::element(&ctx.x, params),
                    TranscriptItem::element(&ctx.y, params),
                ],
            };
            hashing::encode_items(&items)
        }
    }
}

type HmacSha256 = Hmac<Sha256>;

/// HMAC-SHA256 confirmation tag over the scheme-specified message.
pub fn confirm_tag(
    family: ConfirmFamily,
    params: &GroupParams,
    key: &MacKey,
    direction: ConfirmDirection,
    ctx: Option<&ConfirmContext>,
) -> Vec<u8> {
    let msg = confirm_message(family, direction, params, ctx);
    let mut mac = HmacSha256::new_from_slice(&key.0).expect("HMAC accepts any key length");
    mac.update(&msg);
    mac.finalize().into_bytes().to_vec()
}

pub fn verify_confirm_tag(
    family: ConfirmFamily,
    params: &GroupParams,
    key: &MacKey,
    direction: ConfirmDirection,
    ctx: Option<&ConfirmContext>,
    tag: &[u8],
) -> Result<(), KexError> {
    let expected = confirm_tag(family, params, key, direction, ctx);
    if expected == tag {
        Ok(())
    } else {
        Err(KexError::MacMismatch)
    }
}

/// The HDR signature vector: peer naming, message slots, challenge/response
/// components, and the hashed dual value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HdrSignature {
    pub peer_identity: String,
    pub peer_pk: GroupElement,
    pub m_a: Vec<u8>,
    pub m_b: Vec<u8>,
    pub x: GroupElement,
    pub y: GroupElement,
    pub value: Vec<u8>,
}

/// Signer-side HDR computation: value = H_K(A^yc * X^(bd+ye)), with the
/// challenge X required to lie in G minus the identity. The (y, Y, A^cy)
/// triple may come from a PrecomputedLeaf.
#[allow(clippy::too_many_arguments)]
pub fn hdr_sign(
    params: &GroupParams,
    cfg: &SchemeConfig,
    signer: &KeyPair,
    eph: &PrecomputedLeaf,
    peer_id: &str,
    peer_pk: &GroupElement,
    m_a: &[u8],
    m_b: &[u8],
    challenge_x: &GroupElement,
) -> Result<HdrSignature, KexError> {
    if !cfg.scheme.is_oake_two_round() {
        return Err(KexError::UnsupportedScheme("HDR signatures are defined for the OAKE family"));
    }
    if !params.explicit_subgroup_test(challenge_x) {
        return Err(KexError::InvalidChallenge);
    }
    let exps = derive_cde(
        params, cfg, m_a, m_b, peer_id, peer_pk, &signer.identity, &signer.public, challenge_x,
        Some(&eph.big_x),
    )?;
    let mut ops = OpCounter::new();
    // HDR values are defined without cofactor powering.
    let plain = SchemeConfig { t_mode: CofactorMode::Explicit, ..cfg.clone() };
    let secret = compute_shared_secret(
        params, &plain, Role::Responder, signer, Some(eph), peer_pk, Some(challenge_x), &exps, &mut ops,
    )?;
    let value = hashing::ro_hk(params, &cfg.hash, &secret.sigma, None)?;
    Ok(HdrSignature {
        peer_identity: peer_id.to_string(),
        peer_pk: peer_pk.clone(),
        m_a: m_a.to_vec(),
        m_b: m_b.to_vec(),
        x: challenge_x.clone(),
        y: eph.big_x.clone(),
        value,
    })
}

/// Challenger-side dual computation: recompute H_K(B^dx * Y^(ca+ex)) from
/// (a, x) and compare.
#[allow(clippy::too_many_arguments)]
pub fn hdr_dual_verify(
    params: &GroupParams,
    cfg: &SchemeConfig,
    verifier: &KeyPair,
    eph: &PrecomputedLeaf,
    signer_id: &str,
    signer_pk: &GroupElement,
    m_a: &[u8],
    m_b: &[u8],
    response_y: &GroupElement,
    value: &[u8],
) -> bool {
    if !cfg.scheme.is_oake_two_round() || !params.explicit_subgroup_test(response_y) {
        return false;
    }
    let exps = match derive_cde(
        params, cfg, m_a, m_b, &verifier.identity, &verifier.public, signer_id, signer_pk,
        &eph.big_x, Some(response_y),
    ) {
        Ok(e) => e,
        Err(_) => return false,
    };
    let mut ops = OpCounter::new();
    let plain = SchemeConfig { t_mode: CofactorMode::Explicit, ..cfg.clone() };
    let secret = match compute_shared_secret(
        params, &plain, Role::Initiator, verifier, Some(eph), signer_pk, Some(response_y), &exps, &mut ops,
    ) {
        Ok(s) => s,
        Err(_) => return false,
    };
    match hashing::ro_hk(params, &cfg.hash, &secret.sigma, None) {
        Ok(recomputed) => recomputed == value,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests;
