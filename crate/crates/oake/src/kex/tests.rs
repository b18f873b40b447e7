use super::*;
use crate::group::GroupParams;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn toy() -> GroupParams {
    GroupParams::toy()
}

fn toy_pair(params: &GroupParams, a: u64, b: u64) -> (KeyPair, KeyPair) {
    (
        KeyPair::from_secret(params, "alice", params.scalar_from_u64(a)),
        KeyPair::from_secret(params, "bob", params.scalar_from_u64(b)),
    )
}

fn toy_leaf(params: &GroupParams, x: u64) -> PrecomputedLeaf {
    PrecomputedLeaf::from_exponent(params, params.scalar_from_u64(x))
}

/// Runs both roles of one exchange and returns each side's outcome. In toy
/// groups an honest sigma collapses to the identity at rate ~1/q, and the
/// scheme's policy then rejects on both sides; callers decide how to treat
/// that.
pub(crate) fn exchange_outcomes(
    params: &GroupParams,
    cfg: &SchemeConfig,
    alice: &KeyPair,
    bob: &KeyPair,
    leaf_a: &PrecomputedLeaf,
    leaf_b: Option<&PrecomputedLeaf>,
) -> (Result<SharedSecret, KexError>, Result<SharedSecret, KexError>) {
    let y = leaf_b.map(|l| l.big_x.clone());
    let exps = derive_cde(
        params, cfg, b"", b"", &alice.identity, &alice.public, &bob.identity, &bob.public,
        &leaf_a.big_x, y.as_ref(),
    )
    .expect("test fixtures always derive");
    let mut ops = OpCounter::new();
    let sigma_a = compute_shared_secret(
        params, cfg, Role::Initiator, alice, Some(leaf_a), &bob.public, y.as_ref(), &exps, &mut ops,
    );
    let sigma_b = compute_shared_secret(
        params, cfg, Role::Responder, bob, leaf_b, &alice.public, Some(&leaf_a.big_x), &exps, &mut ops,
    );
    (sigma_a, sigma_b)
}

/// As `exchange_outcomes`, but demands success on both sides.
pub(crate) fn honest_exchange(
    params: &GroupParams,
    cfg: &SchemeConfig,
    alice: &KeyPair,
    bob: &KeyPair,
    leaf_a: &PrecomputedLeaf,
    leaf_b: Option<&PrecomputedLeaf>,
) -> Result<(SharedSecret, SharedSecret), KexError> {
    let (a, b) = exchange_outcomes(params, cfg, alice, bob, leaf_a, leaf_b);
    Ok((a?, b?))
}

#[test]
fn stubbed_soake_matches_bruteforce_vector() {
    // a=6, b=3, x=4, y=5, stubbed c=d=1, e=2 -> sigma = 9 from both roles:
    // 8^4 * 9^(6+2*4 mod 11) = 2*16 = 9 and 18^5 * 16^(3+2*5 mod 11) = 3*3 = 9.
    let params = toy();
    let cfg = SchemeConfig::new(SchemeId::SOake, CofactorMode::Explicit, &params)
        .with_stub(Exponents::stub_u64(&params, 1, 1, 2));
    let (alice, bob) = toy_pair(&params, 6, 3);
    let (sa, sb) = honest_exchange(&params, &cfg, &alice, &bob, &toy_leaf(&params, 4), Some(&toy_leaf(&params, 5))).unwrap();
    assert_eq!(sa.sigma, params.element_from_u64(9).unwrap());
    assert_eq!(sb.sigma, params.element_from_u64(9).unwrap());
}

#[test]
fn stubbed_hmqv_matches_bruteforce_vector() {
    // Same keys, stubbed d=e=1: sigma = (9*8)^10 = (16*18)^8 = 8 mod 23.
    let params = toy();
    let cfg = SchemeConfig::new(SchemeId::Hmqv, CofactorMode::Explicit, &params)
        .with_stub(Exponents::stub_u64(&params, 1, 1, 1));
    let (alice, bob) = toy_pair(&params, 6, 3);
    let (sa, sb) = honest_exchange(&params, &cfg, &alice, &bob, &toy_leaf(&params, 4), Some(&toy_leaf(&params, 5))).unwrap();
    assert_eq!(sa.sigma, params.element_from_u64(8).unwrap());
    assert_eq!(sb.sigma, params.element_from_u64(8).unwrap());
}

#[test]
fn robust_oake_is_plain_oake_times_gab() {
    let params = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for _ in 0..30 {
        let alice = KeyPair::generate(&params, "alice", &mut rng);
        let bob = KeyPair::generate(&params, "bob", &mut rng);
        let la = PrecomputedLeaf::fresh(&params, &mut rng);
        let lb = PrecomputedLeaf::fresh(&params, &mut rng);
        // Same stub so the two schemes share (c, d, e).
        let stub = Exponents::stub_u64(&params, 3, 5, 7);
        let plain_cfg = SchemeConfig::new(SchemeId::Oake, CofactorMode::Explicit, &params).with_stub(stub.clone());
        let robust_cfg = SchemeConfig::new(SchemeId::ROake, CofactorMode::Explicit, &params).with_stub(stub);
        let (plain, _) = honest_exchange(&params, &plain_cfg, &alice, &bob, &la, Some(&lb)).unwrap();
        let (robust, robust_b) = honest_exchange(&params, &robust_cfg, &alice, &bob, &la, Some(&lb)).unwrap();
        assert_eq!(robust.sigma, robust_b.sigma);
        let gab = params.cdh_oracle(&alice.public, &bob.public).unwrap();
        let expected = params.mul(&plain.sigma, &gab, &mut OpCounter::new());
        assert_eq!(robust.sigma, expected);
    }
}

#[test]
fn derive_cde_properties() {
    let params = toy();
    let (alice, bob) = toy_pair(&params, 6, 3);
    let x = toy_leaf(&params, 4).big_x;
    let y = toy_leaf(&params, 5).big_x;

    // sOAKE always has c = d = 1.
    let cfg = SchemeConfig::new(SchemeId::SOake, CofactorMode::Explicit, &params);
    let e1 = derive_cde(&params, &cfg, b"", b"", "alice", &alice.public, "bob", &bob.public, &x, Some(&y)).unwrap();
    assert_eq!(e1.c, params.scalar_from_u64(1));
    assert_eq!(e1.d, params.scalar_from_u64(1));

    // Determinism for OAKE.
    let cfg = SchemeConfig::new(SchemeId::Oake, CofactorMode::Explicit, &params);
    let a1 = derive_cde(&params, &cfg, b"", b"", "alice", &alice.public, "bob", &bob.public, &x, Some(&y)).unwrap();
    let a2 = derive_cde(&params, &cfg, b"", b"", "alice", &alice.public, "bob", &bob.public, &x, Some(&y)).unwrap();
    assert_eq!(a1, a2);

    // MQV in the toy group with l=2: d = 4 + (9 mod 4) = 5 for X = 9.
    let cfg = SchemeConfig::new(SchemeId::Mqv, CofactorMode::Explicit, &params);
    assert_eq!(cfg.hash.l, 2);
    let x9 = params.element_from_u64(9).unwrap();
    let mqv = derive_cde(&params, &cfg, b"", b"", "alice", &alice.public, "bob", &bob.public, &x9, Some(&y)).unwrap();
    assert_eq!(mqv.d, params.scalar_from_u64(5));

    // Two-round schemes demand a responder component.
    assert!(matches!(
        derive_cde(&params, &cfg, b"", b"", "alice", &alice.public, "bob", &bob.public, &x, None),
        Err(KexError::MissingPeerDh)
    ));
    // One-round schemes do not.
    let cfg = SchemeConfig::new(SchemeId::OOake, CofactorMode::Explicit, &params);
    assert!(derive_cde(&params, &cfg, b"", b"", "alice", &alice.public, "bob", &bob.public, &x, None).is_ok());
}

#[test]
fn agreement_sampled_all_schemes_and_modes() {
    let params = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for scheme in SchemeId::ALL {
        for mode in CofactorMode::ALL {
            let cfg = SchemeConfig::new(scheme, mode, &params);
            for _ in 0..25 {
                let alice = KeyPair::generate(&params, "alice", &mut rng);
                let bob = KeyPair::generate(&params, "bob", &mut rng);
                let la = PrecomputedLeaf::fresh(&params, &mut rng);
                let lb = if scheme.is_one_round() { None } else { Some(PrecomputedLeaf::fresh(&params, &mut rng)) };
                match exchange_outcomes(&params, &cfg, &alice, &bob, &la, lb.as_ref()) {
                    (Ok(sa), Ok(sb)) => {
                        assert_eq!(sa.sigma, sb.sigma, "{}/{}", scheme.label(), mode.label());
                        if !sa.sigma.is_identity() {
                            let (ka, _) = derive_keys(&params, &cfg, &sa, false).unwrap();
                            let (kb, _) = derive_keys(&params, &cfg, &sb, false).unwrap();
                            assert_eq!(ka, kb);
                        }
                    }
                    // A collapsed factor aborts. Case-1 checks each side's own
                    // ephemeral factor, which collapse independently at toy
                    // scale, so a one-sided abort is legitimate there.
                    (Err(KexError::SmallSubgroupDetected), Err(KexError::SmallSubgroupDetected)) => {}
                    (Ok(_), Err(KexError::SmallSubgroupDetected))
                    | (Err(KexError::SmallSubgroupDetected), Ok(_))
                        if mode == CofactorMode::EmbeddedCase1 => {}
                    (a, b) => panic!("asymmetric outcomes for {}/{}: {a:?} vs {b:?}", scheme.label(), mode.label()),
                }
            }
        }
    }
}

#[test]
fn agreement_desk_scale_smoke() {
    let params = GroupParams::desk();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for scheme in [SchemeId::Oake, SchemeId::SOake, SchemeId::Hmqv, SchemeId::Mqv] {
        let cfg = SchemeConfig::new(scheme, CofactorMode::Explicit, &params);
        let alice = KeyPair::generate(&params, "alice", &mut rng);
        let bob = KeyPair::generate(&params, "bob", &mut rng);
        let la = PrecomputedLeaf::fresh(&params, &mut rng);
        let lb = PrecomputedLeaf::fresh(&params, &mut rng);
        let (sa, sb) = honest_exchange(&params, &cfg, &alice, &bob, &la, Some(&lb)).unwrap();
        assert_eq!(sa.sigma, sb.sigma, "{}", scheme.label());
    }
}

#[test]
fn oake_algebraic_identity_exhaustive_exponents() {
    // B^dx * Y^(ca+ex) = A^cy * X^(db+ey) reduces to
    // dxb + (ca+ex)y = cya + (db+ey)x mod q; check all 10^7 scalar tuples.
    let q = 11u64;
    for a in 1..q {
        for b in 1..q {
            for x in 1..q {
                for y in 1..q {
                    for c in 1..q {
                        for d in 1..q {
                            for e in 1..q {
                                let lhs = (d * x % q * b + (c * a + e * x) % q * y) % q;
                                let rhs = (c * y % q * a + (d * b + e * y) % q * x) % q;
                                assert_eq!(lhs, rhs);
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn embedded_sigma_is_plain_sigma_to_the_t() {
    let params = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    for scheme in SchemeId::ALL {
        let plain = SchemeConfig::new(scheme, CofactorMode::Explicit, &params);
        let embedded = SchemeConfig::new(scheme, CofactorMode::EmbeddedCase2, &params);
        for _ in 0..10 {
            let alice = KeyPair::generate(&params, "alice", &mut rng);
            let bob = KeyPair::generate(&params, "bob", &mut rng);
            let la = PrecomputedLeaf::fresh(&params, &mut rng);
            let lb = if scheme.is_one_round() { None } else { Some(PrecomputedLeaf::fresh(&params, &mut rng)) };
            let sp = match exchange_outcomes(&params, &plain, &alice, &bob, &la, lb.as_ref()) {
                (Ok(sp), Ok(_)) => sp,
                // MQV rejects collapsed secrets even in explicit mode.
                _ => continue,
            };
            let se = match honest_exchange(&params, &embedded, &alice, &bob, &la, lb.as_ref()) {
                Ok((se, _)) => se,
                // Case-2 rejects when sigma^t collapses; consistent by definition.
                Err(KexError::SmallSubgroupDetected) => continue,
                Err(e) => panic!("{e}"),
            };
            let expected = params.exp_int(&sp.sigma, params.cofactor(), &mut OpCounter::new());
            assert_eq!(se.sigma, expected, "{}", scheme.label());
        }
    }
}

#[test]
fn precomputation_is_transparent() {
    let params = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for scheme in [SchemeId::Oake, SchemeId::SOake, SchemeId::ROake, SchemeId::RsOake] {
        for mode in CofactorMode::ALL {
            let cfg = SchemeConfig::new(scheme, mode, &params);
            for _ in 0..10 {
                let alice = KeyPair::generate(&params, "alice", &mut rng);
                let bob = KeyPair::generate(&params, "bob", &mut rng);
                let mut la = PrecomputedLeaf::fresh(&params, &mut rng);
                let lb = PrecomputedLeaf::fresh(&params, &mut rng);
                let bare = match honest_exchange(&params, &cfg, &alice, &bob, &la, Some(&lb)) {
                    Ok(pair) => pair,
                    Err(KexError::SmallSubgroupDetected) => continue,
                    Err(e) => panic!("{e}"),
                };
                la.attach_peer_term(&params, &cfg, Role::Initiator, &alice, "bob", &bob.public, b"", b"",
                    &mut OpCounter::new());
                assert!(la.static_peer_term.is_some());
                let cached = honest_exchange(&params, &cfg, &alice, &bob, &la, Some(&lb)).unwrap();
                assert_eq!(bare.0.sigma, cached.0.sigma);
                if bare.0.sigma.is_identity() {
                    continue;
                }
                let kb = derive_keys(&params, &cfg, &bare.0, false).unwrap().0;
                let kc = derive_keys(&params, &cfg, &cached.0, false).unwrap().0;
                assert_eq!(kb, kc, "precomputed leaf must yield byte-identical keys");
            }
        }
    }
}

#[test]
fn derived_keys_have_contracted_shape() {
    let params = toy();
    let cfg = SchemeConfig::new(SchemeId::Oake, CofactorMode::Explicit, &params);
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let k = params.random_nonzero_scalar(&mut rng);
        let sigma = SharedSecret { sigma: params.exp(&params.generator(), &k, &mut OpCounter::new()) };
        let (k_plain, none) = derive_keys(&params, &cfg, &sigma, false).unwrap();
        assert!(none.is_none());
        assert_eq!(k_plain.0.len() * 8, 256);
        let (k_conf, km) = derive_keys(&params, &cfg, &sigma, true).unwrap();
        let km = km.unwrap();
        assert_ne!(k_conf.0, km.0, "session key and MAC key must differ");
        assert_ne!(k_plain.0, k_conf.0, "confirmed-mode key uses the 1 suffix");
    }
}

#[test]
fn confirm_tag_roundtrip_and_direction() {
    let params = toy();
    let key = MacKey(vec![7u8; 32]);
    let ctx = ConfirmContext {
        initiator_id: "alice".into(),
        responder_id: "bob".into(),
        x: params.element_from_u64(16).unwrap(),
        y: params.element_from_u64(9).unwrap(),
    };
    for family in [ConfirmFamily::OakeFamily, ConfirmFamily::Hmqv3, ConfirmFamily::Mqv3] {
        let tag = confirm_tag(family, &params, &key, ConfirmDirection::ResponderToInitiator, Some(&ctx));
        assert!(verify_confirm_tag(family, &params, &key, ConfirmDirection::ResponderToInitiator, Some(&ctx), &tag).is_ok());
        let mut bad = tag.clone();
        bad[0] ^= 1;
        assert!(matches!(
            verify_confirm_tag(family, &params, &key, ConfirmDirection::ResponderToInitiator, Some(&ctx), &bad),
            Err(KexError::MacMismatch)
        ));
        let other = confirm_tag(family, &params, &key, ConfirmDirection::InitiatorToResponder, Some(&ctx));
        assert_ne!(tag, other, "initiator and responder tags must differ for the same key");
    }
}

#[test]
fn hdr_sign_and_dual_verify() {
    // Toy group for brute-force-checkable honest instances, then the 64-bit
    // group where sigma collisions are negligible and tampering checks are
    // exact.
    let toy_params = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    for scheme in [SchemeId::Oake, SchemeId::SOake, SchemeId::ROake, SchemeId::RsOake] {
        let cfg = SchemeConfig::new(scheme, CofactorMode::Explicit, &toy_params);
        for trial in 0..50 {
            let alice = KeyPair::generate(&toy_params, "alice", &mut rng);
            let bob = KeyPair::generate(&toy_params, "bob", &mut rng);
            let la = PrecomputedLeaf::fresh(&toy_params, &mut rng);
            let lb = PrecomputedLeaf::fresh(&toy_params, &mut rng);
            let (m_a, m_b): (&[u8], &[u8]) = if trial % 2 == 0 { (b"hello", b"world") } else { (b"", b"") };
            let sig = match hdr_sign(&toy_params, &cfg, &bob, &lb, "alice", &alice.public, m_a, m_b, &la.big_x) {
                Ok(sig) => sig,
                // Toy-scale sigma collapse; H_K refuses the identity.
                Err(KexError::Hash(crate::hashing::HashError::IdentityInput)) => continue,
                Err(e) => panic!("{e}"),
            };
            assert!(hdr_dual_verify(&toy_params, &cfg, &alice, &la, "bob", &bob.public, m_a, m_b, &sig.y, &sig.value));
        }
    }

    let params = GroupParams::fair64();
    for scheme in [SchemeId::Oake, SchemeId::SOake, SchemeId::ROake, SchemeId::RsOake] {
        let cfg = SchemeConfig::new(scheme, CofactorMode::Explicit, &params);
        for trial in 0..25 {
            let alice = KeyPair::generate(&params, "alice", &mut rng);
            let bob = KeyPair::generate(&params, "bob", &mut rng);
            let la = PrecomputedLeaf::fresh(&params, &mut rng);
            let lb = PrecomputedLeaf::fresh(&params, &mut rng);
            let (m_a, m_b): (&[u8], &[u8]) = if trial % 2 == 0 { (b"hello", b"world") } else { (b"", b"") };
            let sig = hdr_sign(&params, &cfg, &bob, &lb, "alice", &alice.public, m_a, m_b, &la.big_x).unwrap();
            assert!(hdr_dual_verify(&params, &cfg, &alice, &la, "bob", &bob.public, m_a, m_b, &sig.y, &sig.value));
            // Wrong response component fails.
            let wrong_y = PrecomputedLeaf::fresh(&params, &mut rng).big_x;
            assert!(!hdr_dual_verify(&params, &cfg, &alice, &la, "bob", &bob.public, m_a, m_b, &wrong_y, &sig.value));
            // One flipped message byte changes the value.
            if !m_a.is_empty() {
                let sig2 =
                    hdr_sign(&params, &cfg, &bob, &lb, "alice", &alice.public, b"hellp", m_b, &la.big_x).unwrap();
                assert_ne!(sig.value, sig2.value);
                assert!(!hdr_dual_verify(&params, &cfg, &alice, &la, "bob", &bob.public, m_a, m_b, &sig.y, &sig2.value));
            }
        }
    }
}

#[test]
fn hdr_with_empty_messages_equals_protocol_session_key() {
    let params = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    for scheme in [SchemeId::Oake, SchemeId::SOake] {
        let cfg = SchemeConfig::new(scheme, CofactorMode::Explicit, &params);
        for _ in 0..30 {
            let alice = KeyPair::generate(&params, "alice", &mut rng);
            let bob = KeyPair::generate(&params, "bob", &mut rng);
            let la = PrecomputedLeaf::fresh(&params, &mut rng);
            let lb = PrecomputedLeaf::fresh(&params, &mut rng);
            let sig = match hdr_sign(&params, &cfg, &bob, &lb, "alice", &alice.public, b"", b"", &la.big_x) {
                Ok(sig) => sig,
                Err(KexError::Hash(crate::hashing::HashError::IdentityInput)) => continue,
                Err(e) => panic!("{e}"),
            };
            let (sa, _) = honest_exchange(&params, &cfg, &alice, &bob, &la, Some(&lb)).unwrap();
            let (k, _) = derive_keys(&params, &cfg, &sa, false).unwrap();
            assert_eq!(sig.value, k.0, "HDR value with empty slots must equal the session key bit-for-bit");
        }
    }
}

#[test]
fn hdr_rejects_bad_challenge_and_schemes() {
    let params = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let bob = KeyPair::generate(&params, "bob", &mut rng);
    let alice = KeyPair::generate(&params, "alice", &mut rng);
    let lb = PrecomputedLeaf::fresh(&params, &mut rng);
    let cfg = SchemeConfig::new(SchemeId::Oake, CofactorMode::Explicit, &params);
    // Identity and order-2 elements are invalid challenges.
    assert!(matches!(
        hdr_sign(&params, &cfg, &bob, &lb, "alice", &alice.public, b"", b"", &params.identity()),
        Err(KexError::InvalidChallenge)
    ));
    let order2 = params.element_from_u64(22).unwrap();
    assert!(matches!(
        hdr_sign(&params, &cfg, &bob, &lb, "alice", &alice.public, b"", b"", &order2),
        Err(KexError::InvalidChallenge)
    ));
    let cfg = SchemeConfig::new(SchemeId::Hmqv, CofactorMode::Explicit, &params);
    assert!(matches!(
        hdr_sign(&params, &cfg, &bob, &lb, "alice", &alice.public, b"", b"", &params.generator()),
        Err(KexError::UnsupportedScheme(_))
    ));
}

#[test]
fn hdr_toy_vector_with_stubbed_exponents() {
    // Stubbed c=2, d=3, e=5 on a=6, b=3, x=4, y=5: the dual value is
    // H_K(sigma) with sigma = A^cy * X^(db+ey) computable by brute force:
    // 18^(2*5 mod 11) * 16^((3*3 + 5*5) mod 11) = 18^10 * 16^1 = 9*16 = 6.
    let params = toy();
    let cfg = SchemeConfig::new(SchemeId::Oake, CofactorMode::Explicit, &params)
        .with_stub(Exponents::stub_u64(&params, 2, 3, 5));
    let (alice, bob) = toy_pair(&params, 6, 3);
    let la = toy_leaf(&params, 4);
    let lb = toy_leaf(&params, 5);
    let sig = hdr_sign(&params, &cfg, &bob, &lb, "alice", &alice.public, b"", b"", &la.big_x).unwrap();

    let mut sigma = 1u64;
    for _ in 0..10 {
        sigma = sigma * 18 % 23;
    }
    sigma = sigma * 16 % 23;
    assert_eq!(sigma, 6);
    let expect = crate::hashing::ro_hk(&params, &cfg.hash, &params.element_from_u64(sigma).unwrap(), None).unwrap();
    assert_eq!(sig.value, expect);
    assert!(hdr_dual_verify(&params, &cfg, &alice, &la, "bob", &bob.public, b"", b"", &lb.big_x, &sig.value));
}

#[test]
fn tbss_sampling_no_sigma_value_over_represented() {
    // Fixed complete tag; 10^4 fresh-oracle salts (distinct scheme labels).
    // TBSS bounds Pr[sigma = alpha] by 1/(2^l - 1) for every alpha != 1; with
    // l = 3 in the toy group that is n/7 per value, checked with a one-sided
    // single-cell chi-square allowance at 0.999 confidence.
    let params = toy();
    let (alice, bob) = toy_pair(&params, 6, 3);
    let la = toy_leaf(&params, 4);
    let lb = toy_leaf(&params, 5);
    let n = 10_000usize;
    let mut counts = vec![0u64; 23 + 1];
    for i in 0..n {
        let mut cfg = SchemeConfig::new(SchemeId::Oake, CofactorMode::Explicit, &params);
        cfg.hash.scheme_label = format!("tbss-salt-{i}").into_bytes();
        let (sa, _) = honest_exchange(&params, &cfg, &alice, &bob, &la, Some(&lb)).unwrap();
        counts[sa.sigma.value().to_u64().unwrap() as usize] += 1;
    }
    let l_bound = (1u64 << 3) - 1; // 2^l - 1 with l = 3
    let expected = n as f64 / l_bound as f64;
    let chi_crit = 10.83; // chi-square df=1 at 0.999
    for (value, &count) in counts.iter().enumerate() {
        if value == 1 {
            continue; // identity is not a valid sigma target
        }
        if count as f64 > expected {
            let cell = (count as f64 - expected).powi(2) / expected;
            assert!(
                cell < chi_crit,
                "sigma value {value} repeated {count} times vs TBSS expectation {expected:.1}"
            );
        }
    }
}

#[test]
fn deniability_sigma_from_ephemerals_alone() {
    // Reasonable deniability: for OAKE and sOAKE, sigma = B^dx * A^cy *
    // (g^xy)^e is assembled from (x, y) and the public transcript, without
    // either static secret. The robust variants differ by exactly g^ab and
    // the same assembly no longer matches.
    let params = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    for scheme in [SchemeId::Oake, SchemeId::SOake, SchemeId::ROake, SchemeId::RsOake] {
        let cfg = SchemeConfig::new(scheme, CofactorMode::Explicit, &params);
        for _ in 0..20 {
            let alice = KeyPair::generate(&params, "alice", &mut rng);
            let bob = KeyPair::generate(&params, "bob", &mut rng);
            let la = PrecomputedLeaf::fresh(&params, &mut rng);
            let lb = PrecomputedLeaf::fresh(&params, &mut rng);
            let (honest, _) = honest_exchange(&params, &cfg, &alice, &bob, &la, Some(&lb)).unwrap();
            let exps = derive_cde(&params, &cfg, b"", b"", "alice", &alice.public, "bob", &bob.public,
                &la.big_x, Some(&lb.big_x)).unwrap();
            let mut ops = OpCounter::new();
            let b_dx = params.exp(&bob.public, &params.scalar_mul(&exps.d, &la.x), &mut ops);
            let a_cy = params.exp(&alice.public, &params.scalar_mul(&exps.c, &lb.x), &mut ops);
            let g_exy = params.exp(
                &params.exp(&params.generator(), &params.scalar_mul(&la.x, &lb.x), &mut ops),
                &exps.e,
                &mut ops,
            );
            let assembled = params.mul(&params.mul(&b_dx, &a_cy, &mut ops), &g_exy, &mut ops);
            if scheme.is_robust() {
                let gab = params.cdh_oracle(&alice.public, &bob.public).unwrap();
                assert_ne!(
                    assembled, honest.sigma,
                    "robust sigma must not be ephemeral-only computable (except when g^ab = 1)"
                );
                let fixed = params.mul(&assembled, &gab, &mut ops);
                assert_eq!(fixed, honest.sigma, "the gap is exactly g^ab");
            } else {
                assert_eq!(assembled, honest.sigma, "{}", scheme.label());
            }
        }
    }
}

#[test]
fn validate_peer_dh_policies() {
    let params = toy();
    let order2 = params.element_from_u64(22).unwrap();
    assert!(validate_peer_dh(&params, CofactorMode::Explicit, &params.generator()).is_ok());
    assert!(validate_peer_dh(&params, CofactorMode::Explicit, &params.identity()).is_err());
    assert!(validate_peer_dh(&params, CofactorMode::Explicit, &order2).is_err());
    // Embedded modes accept supergroup members; the formula handles torsion.
    assert!(validate_peer_dh(&params, CofactorMode::EmbeddedCase1, &order2).is_ok());
    assert!(validate_peer_dh(&params, CofactorMode::EmbeddedCase2, &order2).is_ok());
}

#[test]
fn case1_detects_order2_component_case2_only_on_collapse() {
    let params = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let order2 = params.element_from_u64(22).unwrap();
    for scheme in [SchemeId::Oake, SchemeId::SOake, SchemeId::ROake, SchemeId::RsOake] {
        let alice = KeyPair::generate(&params, "alice", &mut rng);
        let bob = KeyPair::generate(&params, "bob", &mut rng);
        let lb = PrecomputedLeaf::fresh(&params, &mut rng);
        // Responder receives an order-2 X under Case-1: the ephemeral factor
        // X^((db+ey)t) is forced to 1 and must be flagged.
        let cfg = SchemeConfig::new(scheme, CofactorMode::EmbeddedCase1, &params);
        let exps = derive_cde(&params, &cfg, b"", b"", "alice", &alice.public, "bob", &bob.public, &order2, Some(&lb.big_x)).unwrap();
        let got = compute_shared_secret(
            &params, &cfg, Role::Responder, &bob, Some(&lb), &alice.public, Some(&order2), &exps,
            &mut OpCounter::new(),
        );
        assert!(matches!(got, Err(KexError::SmallSubgroupDetected)), "{}", scheme.label());

        // Case-2 computes sigma = A^(cyt) != 1 and accepts; the order-2
        // component slips through, which is exactly the documented caveat.
        let cfg = SchemeConfig::new(scheme, CofactorMode::EmbeddedCase2, &params);
        let got = compute_shared_secret(
            &params, &cfg, Role::Responder, &bob, Some(&lb), &alice.public, Some(&order2), &exps,
            &mut OpCounter::new(),
        )
        .unwrap();
        assert!(!got.sigma.is_identity());
    }
}

#[test]
fn online_cost_windows_on_bench_group() {
    let params = GroupParams::bench();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let runs = 24;

    // (s)OAKE with a precomputed static term under EmbeddedCase1: online work
    // is one full exponentiation (plus the final multiplication).
    let cfg = SchemeConfig::new(SchemeId::Oake, CofactorMode::EmbeddedCase1, &params);
    let mut total = 0.0;
    for _ in 0..runs {
        let alice = KeyPair::generate(&params, "alice", &mut rng);
        let bob = KeyPair::generate(&params, "bob", &mut rng);
        let mut la = PrecomputedLeaf::fresh(&params, &mut rng);
        la.attach_peer_term(&params, &cfg, Role::Initiator, &alice, "bob", &bob.public, b"", b"",
            &mut OpCounter::new());
        let lb = PrecomputedLeaf::fresh(&params, &mut rng);
        let exps = derive_cde(&params, &cfg, b"", b"", "alice", &alice.public, "bob", &bob.public,
            &la.big_x, Some(&lb.big_x)).unwrap();
        let mut online = OpCounter::new();
        compute_shared_secret(&params, &cfg, Role::Initiator, &alice, Some(&la), &bob.public,
            Some(&lb.big_x), &exps, &mut online).unwrap();
        total += online.equivalents(&params);
    }
    let oake_online = total / runs as f64;
    assert!((0.95..=1.05).contains(&oake_online), "(s)OAKE online cost {oake_online}");

    // HMQV cannot precompute B^e; its online work is the full double
    // exponentiation at about 1.3 equivalents.
    let cfg = SchemeConfig::new(SchemeId::Hmqv, CofactorMode::EmbeddedCase2, &params);
    let mut total = 0.0;
    for _ in 0..runs {
        let alice = KeyPair::generate(&params, "alice", &mut rng);
        let bob = KeyPair::generate(&params, "bob", &mut rng);
        let la = PrecomputedLeaf::fresh(&params, &mut rng);
        let lb = PrecomputedLeaf::fresh(&params, &mut rng);
        let exps = derive_cde(&params, &cfg, b"", b"", "alice", &alice.public, "bob", &bob.public,
            &la.big_x, Some(&lb.big_x)).unwrap();
        let mut online = OpCounter::new();
        compute_shared_secret(&params, &cfg, Role::Initiator, &alice, Some(&la), &bob.public,
            Some(&lb.big_x), &exps, &mut online).unwrap();
        total += online.equivalents(&params);
    }
    let hmqv_online = total / runs as f64;
    assert!(hmqv_online >= 1.25, "HMQV online cost {hmqv_online} should exceed 1.25");
    assert!(hmqv_online <= 1.40, "HMQV online cost {hmqv_online} should stay under 1.40");
}
