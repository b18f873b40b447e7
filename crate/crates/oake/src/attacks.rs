//! Executable attack constructions: the exponent-dependent attacks (EDA)
//! against (H)MQV, the naive-JPOK malleation examples, the transplanted
//! (negative) EDA attempt against the OAKE family, and session-key
//! computational-fairness diagnostics.

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::group::{GroupElement, GroupParams, OpCounter, Scalar};
use crate::hashing::{self, TranscriptItem};
use crate::kex::{
    compute_shared_secret, derive_cde, CofactorMode, KexError, KeyPair, PrecomputedLeaf, Role,
    SchemeConfig, SchemeId,
};

#[derive(Debug, thiserror::Error)]
pub enum AttackError {
    #[error("the derived exponent d is not invertible mod q")]
    NonInvertibleD,
    #[error("EDA targets the (H)MQV family, not {0}")]
    WrongTarget(&'static str),
    #[error(transparent)]
    Kex(#[from] KexError),
    #[error(transparent)]
    Group(#[from] crate::group::GroupError),
}

/// The adversary's free parameter t (distinct from the group cofactor) and
/// its target scheme. t = 0 and t = d^(-1) are the distinguished values with
/// fully public predictions.
#[derive(Clone, Debug)]
pub struct EdaParams {
    pub attack_t: Scalar,
    pub target: SchemeId,
}

/// What one EDA run produced. The prediction function receives only public
/// values, so `secret_exponentiations` is zero by construction; the honest
/// responder's full key computation is counted for contrast.
#[derive(Clone, Debug)]
pub struct AttackOutcome {
    pub forged_pubkey: GroupElement,
    pub honest_sigma: Option<GroupElement>,
    pub predicted_sigma: GroupElement,
    pub responder_aborted: bool,
    pub prediction_matches: bool,
    pub secret_exponentiations: u64,
    pub public_exponentiations: u64,
    pub honest_cost_equivalents: f64,
}

/// The EDA d exponent for the target scheme, computable from the challenge
/// and identities alone.
pub fn eda_exponent(
    params: &GroupParams,
    cfg: &SchemeConfig,
    x: &GroupElement,
    initiator_id: &str,
    responder_id: &str,
) -> Scalar {
    eda_d(params, cfg, x, initiator_id, responder_id)
}

fn eda_d(
    params: &GroupParams,
    cfg: &SchemeConfig,
    x: &GroupElement,
    initiator_id: &str,
    responder_id: &str,
) -> Scalar {
    match cfg.scheme {
        SchemeId::Hmqv => hashing::ro_h(
            params,
            &cfg.hash,
            &[TranscriptItem::element(x, params), TranscriptItem::identity(responder_id)],
        ),
        SchemeId::Mqv => hashing::mqv_convert(params, x, cfg.hash.l),
        SchemeId::OHmqv => hashing::ro_h(
            params,
            &cfg.hash,
            &[
                TranscriptItem::element(x, params),
                TranscriptItem::identity(initiator_id),
                TranscriptItem::identity(responder_id),
            ],
        ),
        _ => unreachable!("eda_d is only called for the (H)MQV family"),
    }
}

/// Registers A = X^(-d^(-1)) * g^t without knowing log X. The result is a
/// legitimate member of G, so subgroup checks at registration do not block it.
pub fn eda_forge_pubkey(
    params: &GroupParams,
    cfg: &SchemeConfig,
    x: &GroupElement,
    attack: &EdaParams,
    initiator_id: &str,
    responder_id: &str,
) -> Result<GroupElement, AttackError> {
    if !attack.target.is_mqv_family() {
        return Err(AttackError::WrongTarget(attack.target.label()));
    }
    let d = eda_d(params, cfg, x, initiator_id, responder_id);
    let d_inv = params.scalar_inv(&d).ok_or(AttackError::NonInvertibleD)?;
    let mut ops = OpCounter::new();
    let x_part = params.exp(x, &params.scalar_neg(&d_inv), &mut ops);
    let g_part = params.exp(&params.generator(), &attack.attack_t, &mut ops);
    Ok(params.mul(&x_part, &g_part, &mut ops))
}

/// The public prediction: sigma = Y^(t*d) * B^(t*d*e). Its inputs are the
/// transcript and the responder's public key only; no secret scalar is in
/// scope, which is the asymmetry the attack demonstrates.
fn predict_sigma_public(
    params: &GroupParams,
    t_mode: CofactorMode,
    attack_t: &Scalar,
    d: &Scalar,
    e: Option<&Scalar>,
    y: Option<&GroupElement>,
    responder_pk: &GroupElement,
) -> (GroupElement, u64) {
    let td = params.scalar_mul(attack_t, d);
    let cofactor = |k: &Scalar| {
        let mut v = k.value().clone();
        if t_mode.is_embedded() {
            v *= params.cofactor();
        }
        v
    };
    if td.is_zero() {
        return (params.identity(), 0);
    }
    let mut ops = OpCounter::new();
    let mut exps = 0;
    let mut acc = match y {
        Some(y) => {
            exps += 1;
            params.exp_int(y, &cofactor(&td), &mut ops)
        }
        None => params.identity(),
    };
    if let Some(e) = e {
        let tde = params.scalar_mul(&td, e);
        exps += 1;
        let b_part = params.exp_int(responder_pk, &cofactor(&tde), &mut ops);
        acc = if y.is_some() { params.mul(&acc, &b_part, &mut ops) } else { b_part };
    } else if y.is_none() {
        // One-round target: sigma = B^(t*d).
        exps += 1;
        acc = params.exp_int(responder_pk, &cofactor(&td), &mut ops);
    }
    (acc, exps)
}

/// Runs the full EDA flow against an honest responder: forge the public key
/// from the challenge, let the responder compute its side, and compare with
/// the adversary's public prediction.
pub fn eda_run(
    params: &GroupParams,
    cfg: &SchemeConfig,
    attack: &EdaParams,
    seed: u64,
) -> Result<AttackOutcome, AttackError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let responder = KeyPair::generate(params, "bob", &mut rng);
    let initiator_id = "mallory";

    // The adversary receives or relays some X = g^x; the harness draws it,
    // but the exponent never reaches the adversary's code path below.
    let challenge = PrecomputedLeaf::fresh(params, &mut rng);
    let forged = eda_forge_pubkey(params, cfg, &challenge.big_x, attack, initiator_id, &responder.identity)?;
    // Registration-side subgroup check passes: A lands inside G.
    debug_assert!(forged.is_identity() || params.explicit_subgroup_test(&forged));

    let responder_leaf = if cfg.scheme.is_one_round() {
        None
    } else {
        Some(PrecomputedLeaf::fresh(params, &mut rng))
    };
    let y = responder_leaf.as_ref().map(|l| l.big_x.clone());
    let exps = derive_cde(
        params, cfg, b"", b"", initiator_id, &forged, &responder.identity, &responder.public,
        &challenge.big_x, y.as_ref(),
    )?;

    let mut honest_ops = OpCounter::new();
    let honest = compute_shared_secret(
        params, cfg, Role::Responder, &responder, responder_leaf.as_ref(), &forged,
        Some(&challenge.big_x), &exps, &mut honest_ops,
    );
    let (honest_sigma, aborted) = match honest {
        Ok(s) => (Some(s.sigma), false),
        Err(KexError::SmallSubgroupDetected) => (None, true),
        Err(e) => return Err(AttackError::Kex(e)),
    };

    let d = eda_d(params, cfg, &challenge.big_x, initiator_id, &responder.identity);
    let e = match cfg.scheme {
        SchemeId::OHmqv => None,
        _ => Some(exps.e.clone()),
    };
    let (predicted, public_exps) = predict_sigma_public(
        params, cfg.t_mode, &attack.attack_t, &d, e.as_ref(), y.as_ref(), &responder.public,
    );

    Ok(AttackOutcome {
        forged_pubkey: forged,
        prediction_matches: honest_sigma.as_ref() == Some(&predicted),
        honest_sigma,
        predicted_sigma: predicted,
        responder_aborted: aborted,
        secret_exponentiations: 0,
        public_exponentiations: public_exps,
        honest_cost_equivalents: honest_ops.equivalents(params),
    })
}

/// Result of transplanting the EDA strategy onto the OAKE family in the toy
/// group: for every forged key in the family (which sweeps all of G as t
/// sweeps Z_q), does the t-formula predict the honest sigma for every
/// responder ephemeral?
#[derive(Clone, Debug, Default)]
pub struct OakeEdaScan {
    pub candidates_tried: u64,
    pub universal_predictions: u64,
    pub forced_identity_relations: u64,
}

/// Exhaustive negative test: no forged A of the form X^(-d^(-1)) * g^t makes
/// the honest OAKE/sOAKE sigma publicly predictable by the t-formula, and no
/// choice of A alone forces the fairness relation V1*V2 = 1.
pub fn eda_attempt_on_oake(params: &GroupParams, scheme: SchemeId, seed: u64) -> Result<OakeEdaScan, AttackError> {
    assert!(
        matches!(scheme, SchemeId::Oake | SchemeId::SOake),
        "the transplant scan targets OAKE or sOAKE"
    );
    let cfg = SchemeConfig::new(scheme, CofactorMode::Explicit, params);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let responder = KeyPair::generate(params, "bob", &mut rng);
    let initiator_id = "mallory";
    let q = params.order().to_u64().expect("toy group required");
    let mut scan = OakeEdaScan::default();
    let mut ops = OpCounter::new();

    for x_exp in 1..q {
        let x_scalar = params.scalar_from_u64(x_exp);
        let challenge = params.pow_fast(&params.generator(), x_scalar.value());
        // The OAKE-family d binds the responder and X but not A, so the
        // adversary can compute it before forging (sOAKE has d = 1).
        let d = match scheme {
            SchemeId::Oake => {
                let items = vec![
                    TranscriptItem::literal(vec![]),
                    TranscriptItem::identity(&responder.identity),
                    TranscriptItem::element(&responder.public, params),
                    TranscriptItem::element(&challenge, params),
                ];
                hashing::ro_h(params, &cfg.hash, &items)
            }
            _ => params.scalar_from_u64(1),
        };
        let d_inv = params.scalar_inv(&d).ok_or(AttackError::NonInvertibleD)?;

        for t in 0..q {
            let attack_t = params.scalar_from_u64(t);
            let x_part = params.exp(&challenge, &params.scalar_neg(&d_inv), &mut ops);
            let g_part = params.exp(&params.generator(), &attack_t, &mut ops);
            let forged_value = params.mul(&x_part, &g_part, &mut ops);
            if forged_value.is_identity() {
                // The identity is not a registrable public key.
                continue;
            }
            scan.candidates_tried += 1;

            let mut predicts_every_y = true;
            let mut forces_identity = true;
            for y_exp in 1..q {
                let y_scalar = params.scalar_from_u64(y_exp);
                let big_y = params.pow_fast(&params.generator(), y_scalar.value());
                let exps = derive_cde(
                    params, &cfg, b"", b"", initiator_id, &forged_value, &responder.identity,
                    &responder.public, &challenge, Some(&big_y),
                )?;
                // Honest responder: sigma = A^(cy) * X^(db+ey).
                let leaf = PrecomputedLeaf::from_exponent(params, y_scalar.clone());
                let honest = compute_shared_secret(
                    params, &cfg, Role::Responder, &responder, Some(&leaf), &forged_value,
                    Some(&challenge), &exps, &mut ops,
                )?;
                // The t-formula prediction from public values.
                let (predicted, _) = predict_sigma_public(
                    params, CofactorMode::Explicit, &attack_t, &exps.d, Some(&exps.e), Some(&big_y),
                    &responder.public,
                );
                if honest.sigma != predicted {
                    predicts_every_y = false;
                }
                if !honest.sigma.is_identity() {
                    forces_identity = false;
                }
                if !predicts_every_y && !forces_identity {
                    break;
                }
            }
            scan.universal_predictions += u64::from(predicts_every_y);
            scan.forced_identity_relations += u64::from(forces_identity);
        }
    }
    Ok(scan)
}

/// The two insecure warm-up JPOK constructions and their malleation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JpokVariant {
    /// JPOK = X^(b+y); malleated by Y = B^(-1).
    Sum,
    /// JPOK = X^(db+ey) with d = h(B, A-id), e = h(X, B-id); malleated by
    /// Y = B^(-d/e).
    Masked,
}

#[derive(Clone, Debug)]
pub struct JpokMalleation {
    pub adversarial_y: GroupElement,
    pub predicted_value: GroupElement,
}

fn jpok_masked_exponents(
    params: &GroupParams,
    cfg: &SchemeConfig,
    b_pk: &GroupElement,
    x: &GroupElement,
    verifier_id: &str,
    prover_id: &str,
) -> (Scalar, Scalar) {
    let d = hashing::ro_h(
        params,
        &cfg.hash,
        &[TranscriptItem::element(b_pk, params), TranscriptItem::identity(verifier_id)],
    );
    let e = hashing::ro_h(
        params,
        &cfg.hash,
        &[TranscriptItem::element(x, params), TranscriptItem::identity(prover_id)],
    );
    (d, e)
}

/// Chooses the adversarial Y that pins the verifier's JPOK value to the
/// identity. Both variants compute their hash inputs before Y is chosen,
/// which is exactly the malleability being demonstrated.
pub fn naive_jpok_malleate(
    params: &GroupParams,
    variant: JpokVariant,
    b_pk: &GroupElement,
    x: &GroupElement,
    verifier_id: &str,
    prover_id: &str,
) -> JpokMalleation {
    let cfg = SchemeConfig::new(SchemeId::Oake, CofactorMode::Explicit, params);
    let mut ops = OpCounter::new();
    let adversarial_y = match variant {
        JpokVariant::Sum => params.inv_element(b_pk),
        JpokVariant::Masked => {
            let (d, e) = jpok_masked_exponents(params, &cfg, b_pk, x, verifier_id, prover_id);
            let e_inv = params.scalar_inv(&e).expect("h never returns zero");
            let exp = params.scalar_neg(&params.scalar_mul(&d, &e_inv));
            params.exp(b_pk, &exp, &mut ops)
        }
    };
    JpokMalleation { adversarial_y, predicted_value: params.identity() }
}

/// The verifier-side JPOK value for the naive variants: (B*Y)^x for the sum
/// form, (B^d * Y^e)^x for the masked form.
pub fn naive_jpok_value(
    params: &GroupParams,
    variant: JpokVariant,
    b_pk: &GroupElement,
    y: &GroupElement,
    x_exp: &Scalar,
    x: &GroupElement,
    verifier_id: &str,
    prover_id: &str,
) -> GroupElement {
    let cfg = SchemeConfig::new(SchemeId::Oake, CofactorMode::Explicit, params);
    let mut ops = OpCounter::new();
    match variant {
        JpokVariant::Sum => {
            let by = params.mul(b_pk, y, &mut ops);
            params.exp(&by, x_exp, &mut ops)
        }
        JpokVariant::Masked => {
            let (d, e) = jpok_masked_exponents(params, &cfg, b_pk, x, verifier_id, prover_id);
            let joint = params.multi_exp2(b_pk, &d, y, &e, &mut ops);
            params.exp(&joint, x_exp, &mut ops)
        }
    }
}

/// The SSJPOK value (B^d * Y^e)^x with d = h(B-id, B, X), e = h(X, Y); the
/// exhaustive scan shows no Y forces the identity beyond chance.
pub fn ssjpok_value(
    params: &GroupParams,
    cfg: &SchemeConfig,
    prover_id: &str,
    b_pk: &GroupElement,
    y: &GroupElement,
    x_exp: &Scalar,
    x: &GroupElement,
) -> GroupElement {
    let d = hashing::ro_h(
        params,
        &cfg.hash,
        &[
            TranscriptItem::identity(prover_id),
            TranscriptItem::element(b_pk, params),
            TranscriptItem::element(x, params),
        ],
    );
    let e = hashing::ro_h(
        params,
        &cfg.hash,
        &[TranscriptItem::element(x, params), TranscriptItem::element(y, params)],
    );
    let mut ops = OpCounter::new();
    let joint = params.multi_exp2(b_pk, &d, y, &e, &mut ops);
    params.exp(&joint, x_exp, &mut ops)
}

/// The fairness relations from the dominant-operation analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FairnessRelation {
    /// R(V1, V2) = 1 iff V1 * V2 = 1_G.
    ProductIsIdentity,
    /// R(V1, V2) = 1 iff V1 * V2 = Y * B^e (publicly computable from the tag).
    ProductIsYBe,
}

/// Where the scanned sessions come from.
#[derive(Clone, Debug)]
pub enum SessionSource {
    Honest,
    /// EDA sessions against the configured (H)MQV target with this t.
    Eda { attack_t: u64 },
}

#[derive(Clone, Debug)]
pub struct FairnessReport {
    pub scheme: SchemeId,
    pub relation: FairnessRelation,
    pub trials: u64,
    pub hits: u64,
    /// First few (V1, V2) samples for the report.
    pub samples: Vec<(GroupElement, GroupElement)>,
}

/// Computes the initiator-side dominant-operation values (V1, V2) for one
/// session: B^dx and Y^(ca+ex) for the OAKE family, Y^(x+da) and B^(e(x+da))
/// for (H)MQV.
fn dominant_values(
    params: &GroupParams,
    scheme: SchemeId,
    exps: &crate::kex::Exponents,
    a: &Scalar,
    x: &Scalar,
    b_pk: &GroupElement,
    y: &GroupElement,
) -> (GroupElement, GroupElement) {
    match scheme {
        SchemeId::Oake | SchemeId::SOake => {
            let v1 = params.pow_fast(b_pk, params.scalar_mul(&exps.d, x).value());
            let mask = params.scalar_add(&params.scalar_mul(&exps.c, a), &params.scalar_mul(&exps.e, x));
            let v2 = params.pow_fast(y, mask.value());
            (v1, v2)
        }
        SchemeId::Hmqv | SchemeId::Mqv => {
            let s = params.scalar_add(x, &params.scalar_mul(&exps.d, a));
            let v1 = params.pow_fast(y, s.value());
            let v2 = params.pow_fast(b_pk, params.scalar_mul(&exps.e, &s).value());
            (v1, v2)
        }
        other => unreachable!("no fairness profile for {}", other.label()),
    }
}

/// Samples sessions and reports how often the relation holds on (V1, V2).
pub fn fairness_scan(
    params: &GroupParams,
    scheme: SchemeId,
    relation: FairnessRelation,
    source: &SessionSource,
    trials: u64,
    seed: u64,
) -> Result<FairnessReport, AttackError> {
    let cfg = SchemeConfig::new(scheme, CofactorMode::Explicit, params);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut hits = 0;
    let mut samples = Vec::new();
    let mut ops = OpCounter::new();

    for _ in 0..trials {
        let responder = KeyPair::generate(params, "bob", &mut rng);
        let y_leaf = PrecomputedLeaf::fresh(params, &mut rng);
        let x_leaf = PrecomputedLeaf::fresh(params, &mut rng);

        let (v1, v2, e_for_relation) = match source {
            SessionSource::Honest => {
                let initiator = KeyPair::generate(params, "alice", &mut rng);
                let exps = derive_cde(
                    params, &cfg, b"", b"", &initiator.identity, &initiator.public,
                    &responder.identity, &responder.public, &x_leaf.big_x, Some(&y_leaf.big_x),
                )?;
                let (v1, v2) = dominant_values(
                    params, scheme, &exps, &initiator.secret, &x_leaf.x, &responder.public, &y_leaf.big_x,
                );
                (v1, v2, exps.e)
            }
            SessionSource::Eda { attack_t } => {
                if !scheme.is_mqv_family() {
                    return Err(AttackError::WrongTarget(scheme.label()));
                }
                let t = params.scalar_from_u64(*attack_t);
                let d = eda_d(params, &cfg, &x_leaf.big_x, "mallory", &responder.identity);
                // a = -x/d + t makes x + d*a = d*t exactly, so the dominant
                // values are public powers of Y and B.
                let td = params.scalar_mul(&t, &d);
                let e = match scheme {
                    SchemeId::Mqv => hashing::mqv_convert(params, &y_leaf.big_x, cfg.hash.l),
                    _ => hashing::ro_h(
                        params,
                        &cfg.hash,
                        &[TranscriptItem::element(&y_leaf.big_x, params), TranscriptItem::identity("mallory")],
                    ),
                };
                let v1 = params.pow_fast(&y_leaf.big_x, td.value());
                let v2 = params.pow_fast(&responder.public, params.scalar_mul(&e, &td).value());
                (v1, v2, e)
            }
        };

        let product = params.mul(&v1, &v2, &mut ops);
        let hit = match relation {
            FairnessRelation::ProductIsIdentity => product.is_identity(),
            FairnessRelation::ProductIsYBe => {
                let ybe = params.mul(
                    &y_leaf.big_x,
                    &params.pow_fast(&responder.public, e_for_relation.value()),
                    &mut ops,
                );
                product == ybe
            }
        };
        hits += u64::from(hit);
        if samples.len() < 4 {
            samples.push((v1, v2));
        }
    }
    Ok(FairnessReport { scheme, relation, trials, hits, samples })
}

/// Exhaustive stubbed-oracle enumeration for OAKE: with a fixed tag, sweep
/// (c, d, e) over Z_q^* x Z_q^* x Z_q^*, drop combinations whose V1 or V2
/// leaves G minus the identity, and count the joint (V1, V2) distribution.
pub fn oake_stubbed_pair_distribution(
    params: &GroupParams,
    a: u64,
    b: u64,
    x: u64,
    y: u64,
) -> Result<std::collections::BTreeMap<(u64, u64), u64>, AttackError> {
    let q = params.order().to_u64().ok_or(crate::group::GroupError::OracleBoundExceeded)?;
    let a_s = params.scalar_from_u64(a);
    let x_s = params.scalar_from_u64(x);
    let b_pk = params.pow_fast(&params.generator(), params.scalar_from_u64(b).value());
    let big_y = params.pow_fast(&params.generator(), params.scalar_from_u64(y).value());
    let mut counts = std::collections::BTreeMap::new();
    for c in 1..q {
        for d in 1..q {
            for e in 1..q {
                let exps = crate::kex::Exponents::stub_u64(params, c, d, e);
                let (v1, v2) = dominant_values(params, SchemeId::Oake, &exps, &a_s, &x_s, &b_pk, &big_y);
                if v1.is_identity() || v2.is_identity() {
                    continue;
                }
                let key = (
                    v1.value().to_u64().expect("toy group"),
                    v2.value().to_u64().expect("toy group"),
                );
                *counts.entry(key).or_insert(0) += 1;
            }
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eda_t0_forces_identity_on_hmqv() {
        let params = GroupParams::toy();
        let cfg = SchemeConfig::new(SchemeId::Hmqv, CofactorMode::Explicit, &params);
        for seed in 0..50 {
            let attack = EdaParams { attack_t: params.scalar_from_u64(0), target: SchemeId::Hmqv };
            let out = eda_run(&params, &cfg, &attack, seed).unwrap();
            assert!(!out.responder_aborted, "basic HMQV does not check sigma");
            assert!(out.honest_sigma.as_ref().unwrap().is_identity());
            assert!(out.prediction_matches);
            assert_eq!(out.secret_exponentiations, 0);
            assert_eq!(out.public_exponentiations, 0, "t=0 needs no exponentiation at all");
        }
    }

    #[test]
    fn eda_t_dinv_predicts_ybe_publicly() {
        let params = GroupParams::toy();
        let cfg = SchemeConfig::new(SchemeId::Hmqv, CofactorMode::Explicit, &params);
        for seed in 0..50 {
            // t = d^(-1) depends on the challenge; replay the seed's draws to
            // compute d the same way the adversary does, from public values.
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let responder = KeyPair::generate(&params, "bob", &mut rng);
            let challenge = PrecomputedLeaf::fresh(&params, &mut rng);
            let d = eda_d(&params, &cfg, &challenge.big_x, "mallory", &responder.identity);
            let t = params.scalar_inv(&d).unwrap();
            let out = eda_run(&params, &cfg, &EdaParams { attack_t: t, target: SchemeId::Hmqv }, seed).unwrap();
            assert!(out.prediction_matches, "seed {seed}");
            // sigma equals Y * B^e exactly: t*d = 1 collapses the prediction.
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let responder = KeyPair::generate(&params, "bob", &mut rng);
            let _challenge = PrecomputedLeaf::fresh(&params, &mut rng);
            let y_leaf = PrecomputedLeaf::fresh(&params, &mut rng);
            let e = hashing::ro_h(&params, &cfg.hash,
                &[TranscriptItem::element(&y_leaf.big_x, &params), TranscriptItem::identity("mallory")]);
            let ybe = params.mul(&y_leaf.big_x, &params.pow_fast(&responder.public, e.value()),
                &mut OpCounter::new());
            assert_eq!(out.honest_sigma.unwrap(), ybe, "seed {seed}");
        }
    }

    #[test]
    fn eda_general_t_matches_prediction() {
        let params = GroupParams::toy();
        for scheme in [SchemeId::Hmqv, SchemeId::Mqv, SchemeId::OHmqv] {
            let cfg = SchemeConfig::new(scheme, CofactorMode::Explicit, &params);
            for t in 1..10u64 {
                let attack = EdaParams { attack_t: params.scalar_from_u64(t), target: scheme };
                let out = eda_run(&params, &cfg, &attack, 100 + t).unwrap();
                if !out.responder_aborted {
                    assert!(out.prediction_matches, "{} t={t}", scheme.label());
                }
            }
        }
    }

    #[test]
    fn eda_exhaustive_toy_identity() {
        // (X*A^d)^(y+eb) = Y^(td) * B^(tde) for every t, b, y in the toy group.
        let params = GroupParams::toy();
        let cfg = SchemeConfig::new(SchemeId::Hmqv, CofactorMode::Explicit, &params);
        let mut ops = OpCounter::new();
        for t in 0..11u64 {
            for b in 1..11u64 {
                for y in 1..11u64 {
                    for x in 1..11u64 {
                        let responder = KeyPair::from_secret(&params, "bob", params.scalar_from_u64(b));
                        let challenge = params.pow_fast(&params.generator(), &num_bigint::BigUint::from(x));
                        let attack = EdaParams { attack_t: params.scalar_from_u64(t), target: SchemeId::Hmqv };
                        let forged = eda_forge_pubkey(&params, &cfg, &challenge, &attack, "mallory", "bob").unwrap();
                        if forged.is_identity() {
                            continue;
                        }
                        let big_y = params.pow_fast(&params.generator(), &num_bigint::BigUint::from(y));
                        let exps = derive_cde(&params, &cfg, b"", b"", "mallory", &forged, "bob",
                            &responder.public, &challenge, Some(&big_y)).unwrap();
                        let leaf = PrecomputedLeaf::from_exponent(&params, params.scalar_from_u64(y));
                        let honest = compute_shared_secret(&params, &cfg, Role::Responder, &responder,
                            Some(&leaf), &forged, Some(&challenge), &exps, &mut ops).unwrap();
                        let d = eda_d(&params, &cfg, &challenge, "mallory", "bob");
                        let (predicted, _) = predict_sigma_public(&params, CofactorMode::Explicit,
                            &attack.attack_t, &d, Some(&exps.e), Some(&big_y), &responder.public);
                        assert_eq!(honest.sigma, predicted, "t={t} b={b} y={y} x={x}");
                    }
                }
            }
        }
    }

    #[test]
    fn mqv_aborts_on_t0_but_not_general_t() {
        let params = GroupParams::toy();
        let cfg = SchemeConfig::new(SchemeId::Mqv, CofactorMode::Explicit, &params);
        let out = eda_run(&params, &cfg, &EdaParams { attack_t: params.scalar_from_u64(0), target: SchemeId::Mqv }, 5).unwrap();
        assert!(out.responder_aborted, "MQV's sigma != 1 check blocks t = 0");

        let mut successes = 0;
        for t in 1..11u64 {
            let out = eda_run(&params, &cfg, &EdaParams { attack_t: params.scalar_from_u64(t), target: SchemeId::Mqv }, 50 + t).unwrap();
            if !out.responder_aborted {
                assert!(out.prediction_matches, "t={t}");
                successes += 1;
            }
        }
        assert!(successes >= 8, "general t must usually go through: {successes}/10");
    }

    #[test]
    fn oake_transplant_finds_nothing() {
        let params = GroupParams::toy();
        for scheme in [SchemeId::Oake, SchemeId::SOake] {
            let scan = eda_attempt_on_oake(&params, scheme, 7).unwrap();
            assert!(scan.candidates_tried > 90, "sweep covers the key family");
            assert_eq!(scan.universal_predictions, 0, "{}", scheme.label());
            assert_eq!(scan.forced_identity_relations, 0, "{}", scheme.label());
        }
    }

    #[test]
    fn naive_jpok_malleations_force_identity() {
        let params = GroupParams::toy();
        for b in 1..11u64 {
            for x in 1..11u64 {
                let b_pk = params.pow_fast(&params.generator(), &num_bigint::BigUint::from(b));
                let x_s = params.scalar_from_u64(x);
                let big_x = params.pow_fast(&params.generator(), x_s.value());
                for variant in [JpokVariant::Sum, JpokVariant::Masked] {
                    let mal = naive_jpok_malleate(&params, variant, &b_pk, &big_x, "alice", "bob");
                    let value = naive_jpok_value(&params, variant, &b_pk, &mal.adversarial_y, &x_s, &big_x, "alice", "bob");
                    assert!(value.is_identity(), "{variant:?} b={b} x={x}");
                    assert_eq!(value, mal.predicted_value);
                }
            }
        }
    }

    #[test]
    fn ssjpok_resists_identity_forcing() {
        // Exhausting Y finds identity hits only at the chance rate, and no Y
        // works across challenges the way the naive malleation does.
        let params = GroupParams::toy();
        let cfg = SchemeConfig::new(SchemeId::Oake, CofactorMode::Explicit, &params);
        let mut total_hits = 0u64;
        let mut trials = 0u64;
        let mut universal_y = 0u64;
        for y in 1..11u64 {
            let big_y = params.pow_fast(&params.generator(), &num_bigint::BigUint::from(y));
            let mut all_hit = true;
            for b in 1..11u64 {
                for x in 1..11u64 {
                    let b_pk = params.pow_fast(&params.generator(), &num_bigint::BigUint::from(b));
                    let x_s = params.scalar_from_u64(x);
                    let big_x = params.pow_fast(&params.generator(), x_s.value());
                    let v = ssjpok_value(&params, &cfg, "bob", &b_pk, &big_y, &x_s, &big_x);
                    trials += 1;
                    if v.is_identity() {
                        total_hits += 1;
                    } else {
                        all_hit = false;
                    }
                }
            }
            universal_y += u64::from(all_hit);
        }
        assert_eq!(universal_y, 0, "no single Y forces the identity across challenges");
        // Chance rate is ~1/q = 9%; allow a generous band around it.
        let rate = total_hits as f64 / trials as f64;
        assert!(rate < 0.3, "identity rate {rate} is beyond chance");
    }

    #[test]
    fn fairness_relation_hits() {
        let params = GroupParams::toy();
        // HMQV EDA t=0 sessions satisfy V1*V2 = 1 with frequency 1.
        let report = fairness_scan(&params, SchemeId::Hmqv, FairnessRelation::ProductIsIdentity,
            &SessionSource::Eda { attack_t: 0 }, 200, 1).unwrap();
        assert_eq!(report.hits, report.trials);

        // Honest OAKE sessions at 64-bit q never satisfy it.
        let fair = GroupParams::fair64();
        let report = fairness_scan(&fair, SchemeId::Oake, FairnessRelation::ProductIsIdentity,
            &SessionSource::Honest, 500, 2).unwrap();
        assert_eq!(report.hits, 0);
    }

    #[test]
    fn eda_sessions_satisfy_ybe_relation_when_t_is_dinv() {
        // With t = d^(-1), V1*V2 = sigma = Y*B^e; the scan can only fix one t
        // for all sessions, so check single-session behavior via eda_run
        // instead: prediction matched and sigma = Y * B^e was verified there.
        let params = GroupParams::toy();
        let report = fairness_scan(&params, SchemeId::Hmqv, FairnessRelation::ProductIsYBe,
            &SessionSource::Honest, 300, 3).unwrap();
        // Honest sessions satisfy the YBe relation only by chance (~1/11).
        assert!(report.hits < 100, "honest YBe rate too high: {}/{}", report.hits, report.trials);
    }

    #[test]
    fn stubbed_pair_distribution_is_exactly_uniform() {
        let params = GroupParams::toy();
        let counts = oake_stubbed_pair_distribution(&params, 6, 3, 4, 5).unwrap();
        // Support: all of (G \ 1)^2, 10 x 10 pairs, each hit equally often.
        assert_eq!(counts.len(), 100);
        let first = *counts.values().next().unwrap();
        assert!(counts.values().all(|&c| c == first), "non-uniform joint distribution");
    }
}
