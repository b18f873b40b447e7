//! Public-computation split for (s)OAKE: a low-power authentication device
//! holds (b, y) and emits Y, A^cy and s = d*b + e*y; an untrusted computation
//! device validates the challenge and assembles sigma = A^cy * X^s.
//!
//! With sOAKE (d = 1) or OAKE under the split-friendly d variant, d*b is
//! offline-precomputable and the device's online work is one scalar
//! multiplication (e*y) and one addition.

use rand::Rng;

use crate::group::{GroupElement, GroupParams, OpCounter, Scalar};
use crate::hashing::{self, TranscriptItem};
use crate::kex::{
    h_e_pair, h_e_soake, stubbed, validate_peer_dh, CofactorMode, ExponentVariant, KexError, KeyPair,
    SchemeConfig, SchemeId, SharedSecret,
};

/// Online scalar-operation ledger for the authentication device.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SplitOpLedger {
    pub online_scalar_muls: u64,
    pub online_scalar_adds: u64,
    pub online_exponentiations: u64,
}

/// Authentication-device state between the two rounds. Single-owner;
/// consumed by `split_auth_round2`.
pub struct SplitAuthState {
    cfg: SchemeConfig,
    own: KeyPair,
    y: Scalar,
    big_y: GroupElement,
    peer: Option<(String, GroupElement)>,
    /// d*b, precomputed in round 1 whenever d does not depend on X.
    db: Option<Scalar>,
}

fn check_split_scheme(cfg: &SchemeConfig) -> Result<(), KexError> {
    match cfg.scheme {
        SchemeId::Oake | SchemeId::SOake => Ok(()),
        _ => Err(KexError::UnsupportedScheme("the public-computation split is defined for OAKE and sOAKE")),
    }
}

/// Round 1: draw (y, Y) and, when the peer is already known, the static term
/// A^cy (t-powered in embedded modes) plus the offline part of s.
pub fn split_auth_round1<R: Rng + ?Sized>(
    params: &GroupParams,
    cfg: &SchemeConfig,
    own: &KeyPair,
    peer: Option<(&str, &GroupElement)>,
    rng: &mut R,
) -> Result<(GroupElement, Option<GroupElement>, SplitAuthState), KexError> {
    check_split_scheme(cfg)?;
    let y = params.random_nonzero_scalar(rng);
    let big_y = params.exp(&params.generator(), &y, &mut OpCounter::new());

    let static_term = match peer {
        Some((peer_id, peer_pk)) => {
            let c = if cfg.scheme.is_single_hash() {
                params.scalar_from_u64(1)
            } else {
                stubbed(cfg, |s| s.c.clone())
                    .unwrap_or_else(|| super::h_c(params, cfg, b"", peer_id, Some(peer_pk), &big_y))
            };
            let mut k = params.scalar_mul(&c, &y).value().clone();
            if cfg.t_mode.is_embedded() {
                k *= params.cofactor();
            }
            Some(params.exp_int(peer_pk, &k, &mut OpCounter::new()))
        }
        None => None,
    };

    // d*b is offline whenever d is independent of the incoming challenge.
    let db = if cfg.scheme.is_single_hash() {
        Some(own.secret.clone())
    } else if cfg.variant == ExponentVariant::SplitFriendly {
        let d = stubbed(cfg, |s| s.d.clone()).unwrap_or_else(|| {
            let mut items = vec![TranscriptItem::identity(&own.identity)];
            if !cfg.public_key_free {
                items.push(TranscriptItem::element(&own.public, params));
            }
            items.push(TranscriptItem::element(&big_y, params));
            hashing::ro_h(params, &cfg.hash, &items)
        });
        Some(params.scalar_mul(&d, &own.secret))
    } else {
        None
    };

    let state = SplitAuthState {
        cfg: cfg.clone(),
        own: own.clone(),
        y,
        big_y: big_y.clone(),
        peer: peer.map(|(id, pk)| (id.to_string(), pk.clone())),
        db,
    };
    Ok((big_y, static_term, state))
}

/// Round 2: fold the challenge into s = d*b + e*y. Consumes the state, so a
/// device cannot answer two challenges with one y. Returns the op ledger so
/// callers can assert the online budget.
pub fn split_auth_round2(
    params: &GroupParams,
    state: SplitAuthState,
    challenge_x: &GroupElement,
) -> Result<(Scalar, SplitOpLedger), KexError> {
    let cfg = &state.cfg;
    let mut ledger = SplitOpLedger::default();
    let (peer_id, peer_pk) = state.peer.as_ref().ok_or(KexError::MissingPeerDh)?;

    let e = stubbed(cfg, |s| s.e.clone()).unwrap_or_else(|| {
        if cfg.scheme.is_single_hash() {
            h_e_soake(params, cfg, b"", b"", peer_id, Some(peer_pk), &state.own.identity,
                Some(&state.own.public), challenge_x, &state.big_y)
        } else {
            h_e_pair(params, cfg, challenge_x, &state.big_y)
        }
    });

    let db = match &state.db {
        Some(db) => db.clone(),
        None => {
            // HDR-variant d depends on X, so it lands in the online budget.
            let d = stubbed(cfg, |s| s.d.clone()).unwrap_or_else(|| {
                super::h_d(params, cfg, b"", peer_id, &state.own.identity, Some(&state.own.public),
                    challenge_x, Some(&state.big_y))
            });
            ledger.online_scalar_muls += 1;
            params.scalar_mul(&d, &state.own.secret)
        }
    };

    let ey = params.scalar_mul(&e, &state.y);
    ledger.online_scalar_muls += 1;
    let s = params.scalar_add(&db, &ey);
    ledger.online_scalar_adds += 1;
    Ok((s, ledger))
}

/// Computation device: validate the challenge per the subgroup policy and
/// assemble sigma = A^cy * X^s (t-powered in embedded modes).
pub fn split_compute(
    params: &GroupParams,
    cfg: &SchemeConfig,
    static_term: &GroupElement,
    challenge_x: &GroupElement,
    s: &Scalar,
    ops: &mut OpCounter,
) -> Result<SharedSecret, KexError> {
    check_split_scheme(cfg)?;
    validate_peer_dh(params, cfg.t_mode, challenge_x)?;
    let mut k = s.value().clone();
    if cfg.t_mode.is_embedded() {
        k *= params.cofactor();
    }
    let eph_term = params.exp_int(challenge_x, &k, ops);
    if cfg.t_mode == CofactorMode::EmbeddedCase1 && eph_term.is_identity() {
        return Err(KexError::SmallSubgroupDetected);
    }
    let sigma = params.mul(static_term, &eph_term, ops);
    if cfg.t_mode == CofactorMode::EmbeddedCase2 && sigma.is_identity() {
        return Err(KexError::SmallSubgroupDetected);
    }
    Ok(SharedSecret { sigma })
}
