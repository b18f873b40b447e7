//! Test-vector file formats: hash vectors (`h` / `HK` lines), session-key
//! vectors (`kex` lines), and signature vectors (`sig` lines), with emitters
//! and checkers for each.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::fmt::Write as _;

use crate::group::{GroupParams, OpCounter, Scalar};
use crate::hashing::{self, HashConfig};
use crate::kex::{
    compute_shared_secret, derive_cde, derive_keys, CofactorMode, KeyPair, PrecomputedLeaf, Role,
    SchemeConfig, SchemeId,
};
use crate::sigs::{
    self, ds_offline_with_r, ds_sign_prehashed, DividedSchnorrKeyPair, DsVariant, SchnorrKeyPair,
    SigOpLedger,
};

#[derive(Debug, thiserror::Error)]
pub enum VectorError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: vector mismatch ({what})")]
    Mismatch { line: usize, what: String },
    #[error(transparent)]
    Kex(#[from] crate::kex::KexError),
    #[error(transparent)]
    Hash(#[from] crate::hashing::HashError),
}

fn parse_err(line: usize, reason: impl Into<String>) -> VectorError {
    VectorError::Parse { line, reason: reason.into() }
}

fn hex_scalar(params: &GroupParams, s: &Scalar) -> String {
    hex::encode(s.to_fixed_bytes(params))
}

fn scalar_from_hex(params: &GroupParams, line: usize, s: &str) -> Result<Scalar, VectorError> {
    let bytes = hex::decode(s).map_err(|e| parse_err(line, format!("bad scalar hex: {e}")))?;
    Ok(params.scalar_from_bytes(&bytes))
}

fn kv<'a>(line: usize, token: &'a str, key: &str) -> Result<&'a str, VectorError> {
    token
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| parse_err(line, format!("expected {key}=<hex>, got `{token}`")))
}

/// Hash configuration matching a vector-file scheme label.
fn hash_cfg_for_label(params: &GroupParams, label: &str) -> HashConfig {
    match SchemeId::parse(label) {
        Some(s) if s.is_mqv_family() => HashConfig::hmqv_family(params, label.as_bytes().to_vec()),
        _ => HashConfig::oake_family(params, label.as_bytes().to_vec()),
    }
}

/// Emits `h <label> <hex-items> -> <hex-scalar>` and
/// `HK <hex-sigma> <suffix|-> -> <hex-key>` lines.
pub fn emit_hash_vectors(params: &GroupParams, count: usize, seed: u64) -> String {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = String::new();
    for i in 0..count {
        let label = SchemeId::ALL[i % SchemeId::ALL.len()].label();
        let cfg = hash_cfg_for_label(params, label);
        let items = vec![
            hashing::TranscriptItem::identity("alice"),
            hashing::TranscriptItem::literal(format!("vector-{i}").into_bytes()),
        ];
        let encoded = hashing::encode_items(&items);
        let value = hashing::ro_h(params, &cfg, &items);
        let _ = writeln!(out, "h {label} {} -> {}", hex::encode(&encoded), hex_scalar(params, &value));

        let sigma = params.pow_fast(&params.generator(), params.random_nonzero_scalar(&mut rng).value());
        let suffix = match i % 3 {
            0 => None,
            1 => Some(0u8),
            _ => Some(1u8),
        };
        let cfg = hash_cfg_for_label(params, "oake");
        let key = hashing::ro_hk(params, &cfg, &sigma, suffix).expect("nonidentity sigma");
        let suffix_str = suffix.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "HK {} {suffix_str} -> {}",
            hex::encode(sigma.to_fixed_bytes(params)),
            hex::encode(&key)
        );
    }
    out
}

/// Re-evaluates every hash-vector line; returns how many lines verified.
pub fn check_hash_vectors(params: &GroupParams, text: &str) -> Result<usize, VectorError> {
    let mut verified = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (lhs, rhs) = line
            .split_once("->")
            .ok_or_else(|| parse_err(line_no, "missing `->`"))?;
        let lhs: Vec<&str> = lhs.split_whitespace().collect();
        let rhs = rhs.trim();
        match lhs.as_slice() {
            ["h", label, items_hex] => {
                let cfg = hash_cfg_for_label(params, label);
                let encoded = hex::decode(items_hex).map_err(|e| parse_err(line_no, format!("bad hex: {e}")))?;
                let got = hashing::ro_h_encoded(params, &cfg, &encoded);
                if hex_scalar(params, &got) != rhs {
                    return Err(VectorError::Mismatch { line: line_no, what: "h output".into() });
                }
            }
            ["HK", sigma_hex, suffix_str] => {
                let cfg = hash_cfg_for_label(params, "oake");
                let bytes = hex::decode(sigma_hex).map_err(|e| parse_err(line_no, format!("bad hex: {e}")))?;
                let sigma = params
                    .element_from_bytes(&bytes)
                    .map_err(|e| parse_err(line_no, format!("bad sigma: {e}")))?;
                let suffix = match *suffix_str {
                    "-" => None,
                    s => Some(s.parse::<u8>().map_err(|_| parse_err(line_no, "bad suffix"))?),
                };
                let key = hashing::ro_hk(params, &cfg, &sigma, suffix)?;
                if hex::encode(&key) != rhs {
                    return Err(VectorError::Mismatch { line: line_no, what: "HK output".into() });
                }
            }
            other => return Err(parse_err(line_no, format!("unknown vector kind {other:?}"))),
        }
        verified += 1;
    }
    Ok(verified)
}

/// One honest exchange from fixed exponents; `None` when the run aborts
/// (possible at toy scale under the sigma checks).
#[allow(clippy::too_many_arguments)]
fn kex_vector_values(
    params: &GroupParams,
    cfg: &SchemeConfig,
    a: &Scalar,
    b: &Scalar,
    x: &Scalar,
    y: Option<&Scalar>,
) -> Result<Option<(crate::group::GroupElement, Vec<u8>)>, VectorError> {
    let alice = KeyPair::from_secret(params, "alice", a.clone());
    let bob = KeyPair::from_secret(params, "bob", b.clone());
    let leaf_a = PrecomputedLeaf::from_exponent(params, x.clone());
    let leaf_b = y.map(|y| PrecomputedLeaf::from_exponent(params, y.clone()));
    let big_y = leaf_b.as_ref().map(|l| l.big_x.clone());
    let exps = derive_cde(
        params, cfg, b"", b"", "alice", &alice.public, "bob", &bob.public, &leaf_a.big_x, big_y.as_ref(),
    )?;
    let sigma = match compute_shared_secret(
        params, cfg, Role::Initiator, &alice, Some(&leaf_a), &bob.public, big_y.as_ref(), &exps,
        &mut OpCounter::new(),
    ) {
        Ok(s) => s,
        Err(crate::kex::KexError::SmallSubgroupDetected) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    if sigma.sigma.is_identity() {
        return Ok(None);
    }
    let (k, _) = derive_keys(params, cfg, &sigma, false)?;
    Ok(Some((sigma.sigma, k.0)))
}

/// Emits `kex <scheme> <t_mode> a= b= x= y= -> sigma= K=` lines across every
/// scheme and subgroup-test mode.
pub fn emit_kex_vectors(params: &GroupParams, per_combo: usize, seed: u64) -> String {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = String::new();
    for scheme in SchemeId::ALL {
        for mode in CofactorMode::ALL {
            let cfg = SchemeConfig::new(scheme, mode, params);
            let mut emitted = 0;
            while emitted < per_combo {
                let a = params.random_nonzero_scalar(&mut rng);
                let b = params.random_nonzero_scalar(&mut rng);
                let x = params.random_nonzero_scalar(&mut rng);
                let y = if scheme.is_one_round() { None } else { Some(params.random_nonzero_scalar(&mut rng)) };
                let Ok(Some((sigma, k))) = kex_vector_values(params, &cfg, &a, &b, &x, y.as_ref()) else {
                    continue; // aborted draw; try again
                };
                let y_str = y
                    .as_ref()
                    .map(|y| hex_scalar(params, y))
                    .unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    out,
                    "kex {} {} a={} b={} x={} y={} -> sigma={} K={}",
                    scheme.label(),
                    mode.label(),
                    hex_scalar(params, &a),
                    hex_scalar(params, &b),
                    hex_scalar(params, &x),
                    y_str,
                    hex::encode(sigma.to_fixed_bytes(params)),
                    hex::encode(&k),
                );
                emitted += 1;
            }
        }
    }
    out
}

pub fn check_kex_vectors(params: &GroupParams, text: &str) -> Result<usize, VectorError> {
    let mut verified = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (lhs, rhs) = line.split_once("->").ok_or_else(|| parse_err(line_no, "missing `->`"))?;
        let l: Vec<&str> = lhs.split_whitespace().collect();
        let r: Vec<&str> = rhs.split_whitespace().collect();
        let ["kex", scheme_str, mode_str, a_kv, b_kv, x_kv, y_kv] = l.as_slice() else {
            return Err(parse_err(line_no, "expected `kex <scheme> <mode> a= b= x= y=`"));
        };
        let [sigma_kv, k_kv] = r.as_slice() else {
            return Err(parse_err(line_no, "expected `sigma=<hex> K=<hex>`"));
        };
        let scheme = SchemeId::parse(scheme_str).ok_or_else(|| parse_err(line_no, "unknown scheme"))?;
        let mode = CofactorMode::parse(mode_str).ok_or_else(|| parse_err(line_no, "unknown t-mode"))?;
        let cfg = SchemeConfig::new(scheme, mode, params);
        let a = scalar_from_hex(params, line_no, kv(line_no, a_kv, "a")?)?;
        let b = scalar_from_hex(params, line_no, kv(line_no, b_kv, "b")?)?;
        let x = scalar_from_hex(params, line_no, kv(line_no, x_kv, "x")?)?;
        let y_raw = kv(line_no, y_kv, "y")?;
        let y = if y_raw == "-" { None } else { Some(scalar_from_hex(params, line_no, y_raw)?) };
        let Some((sigma, k)) = kex_vector_values(params, &cfg, &a, &b, &x, y.as_ref())? else {
            return Err(VectorError::Mismatch { line: line_no, what: "run aborted on recomputation".into() });
        };
        if hex::encode(sigma.to_fixed_bytes(params)) != kv(line_no, sigma_kv, "sigma")? {
            return Err(VectorError::Mismatch { line: line_no, what: "sigma".into() });
        }
        if hex::encode(&k) != kv(line_no, k_kv, "K")? {
            return Err(VectorError::Mismatch { line: line_no, what: "session key".into() });
        }
        verified += 1;
    }
    Ok(verified)
}

/// Emits `sig <scheme> <variant> w= r= m= -> ...` lines. Schnorr lines carry
/// (e, z) in the (d, z) slots since e plays the first-component role there.
pub fn emit_sig_vectors(params: &GroupParams, per_scheme: usize, seed: u64) -> String {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let cfg = sigs::sig_hash_config(params);
    let mut out = String::new();
    let mut ledger = SigOpLedger::default();
    for i in 0..per_scheme {
        let m = format!("vector message {i}");
        let m_hex = hex::encode(m.as_bytes());

        let w = params.random_nonzero_scalar(&mut rng);
        let r = params.random_nonzero_scalar(&mut rng);

        // Schnorr with pinned randomness.
        let skp = SchnorrKeyPair { w: w.clone(), u: params.pow_fast(&params.generator(), w.value()) };
        let a = params.pow_fast(&params.generator(), r.value());
        let e = sigs::schnorr_challenge(params, &cfg, &a, m.as_bytes());
        let z = params.scalar_add(&r, &params.scalar_mul(&e, &skp.w));
        let _ = writeln!(
            out,
            "sig schnorr - w={} r={} m={m_hex} -> d={} z={}",
            hex_scalar(params, &w),
            hex_scalar(params, &r),
            hex_scalar(params, &e),
            hex_scalar(params, &z),
        );

        // Divided Schnorr, both variants.
        let dkp = DividedSchnorrKeyPair::from_secret(params, w.clone());
        for (variant, name) in [(DsVariant::ErPlusDw, "1"), (DsVariant::DrPlusEw, "2")] {
            let mut token = ds_offline_with_r(params, &dkp, variant, r.clone(), &mut ledger);
            let e = sigs::message_challenge(params, &cfg, m.as_bytes());
            if let Ok(sig) = ds_sign_prehashed(params, &dkp, &mut token, &e, &mut ledger) {
                let _ = writeln!(
                    out,
                    "sig divided {name} w={} r={} m={m_hex} -> d={} z={}",
                    hex_scalar(params, &w),
                    hex_scalar(params, &r),
                    hex_scalar(params, &sig.d),
                    hex_scalar(params, &sig.z),
                );
            }
        }

        // DSS.
        let e = sigs::message_challenge(params, &cfg, m.as_bytes());
        if let Some(sig) = sigs::dss_sign_with_r(params, &skp, &e, &r, &mut ledger) {
            let _ = writeln!(
                out,
                "sig dss - w={} r={} m={m_hex} -> d={} s={}",
                hex_scalar(params, &w),
                hex_scalar(params, &r),
                hex_scalar(params, &sig.d),
                hex_scalar(params, &sig.s),
            );
        }
    }
    out
}

pub fn check_sig_vectors(params: &GroupParams, text: &str) -> Result<usize, VectorError> {
    let cfg = sigs::sig_hash_config(params);
    let mut ledger = SigOpLedger::default();
    let mut verified = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (lhs, rhs) = line.split_once("->").ok_or_else(|| parse_err(line_no, "missing `->`"))?;
        let l: Vec<&str> = lhs.split_whitespace().collect();
        let r: Vec<&str> = rhs.split_whitespace().collect();
        let ["sig", scheme, variant, w_kv, r_kv, m_kv] = l.as_slice() else {
            return Err(parse_err(line_no, "expected `sig <scheme> <variant> w= r= m=`"));
        };
        let [first_kv, second_kv] = r.as_slice() else {
            return Err(parse_err(line_no, "expected two output fields"));
        };
        let w = scalar_from_hex(params, line_no, kv(line_no, w_kv, "w")?)?;
        let rr = scalar_from_hex(params, line_no, kv(line_no, r_kv, "r")?)?;
        let m = hex::decode(kv(line_no, m_kv, "m")?).map_err(|e| parse_err(line_no, format!("bad m: {e}")))?;

        match *scheme {
            "schnorr" => {
                let a = params.pow_fast(&params.generator(), rr.value());
                let e = sigs::schnorr_challenge(params, &cfg, &a, &m);
                let z = params.scalar_add(&rr, &params.scalar_mul(&e, &w));
                if hex_scalar(params, &e) != kv(line_no, first_kv, "d")?
                    || hex_scalar(params, &z) != kv(line_no, second_kv, "z")?
                {
                    return Err(VectorError::Mismatch { line: line_no, what: "schnorr signature".into() });
                }
                // And the signature must verify against the public key.
                let u = params.pow_fast(&params.generator(), w.value());
                let sig = sigs::SchnorrSig { e, z };
                if !sigs::schnorr_verify(params, &cfg, &u, &m, &sig) {
                    return Err(VectorError::Mismatch { line: line_no, what: "schnorr verification".into() });
                }
            }
            "divided" => {
                let var = match *variant {
                    "1" => DsVariant::ErPlusDw,
                    "2" => DsVariant::DrPlusEw,
                    other => return Err(parse_err(line_no, format!("unknown variant `{other}`"))),
                };
                let dkp = DividedSchnorrKeyPair::from_secret(params, w);
                let mut token = ds_offline_with_r(params, &dkp, var, rr, &mut ledger);
                let e = sigs::message_challenge(params, &cfg, &m);
                let sig = ds_sign_prehashed(params, &dkp, &mut token, &e, &mut ledger)
                    .map_err(|e| parse_err(line_no, format!("degenerate vector: {e}")))?;
                if hex_scalar(params, &sig.d) != kv(line_no, first_kv, "d")?
                    || hex_scalar(params, &sig.z) != kv(line_no, second_kv, "z")?
                {
                    return Err(VectorError::Mismatch { line: line_no, what: "divided signature".into() });
                }
                if !sigs::ds_verify(params, &cfg, &dkp.u, &m, &sig, var, &mut ledger) {
                    return Err(VectorError::Mismatch { line: line_no, what: "divided verification".into() });
                }
            }
            "dss" => {
                let skp = SchnorrKeyPair { u: params.pow_fast(&params.generator(), w.value()), w };
                let e = sigs::message_challenge(params, &cfg, &m);
                let sig = sigs::dss_sign_with_r(params, &skp, &e, &rr, &mut ledger)
                    .ok_or_else(|| parse_err(line_no, "degenerate vector"))?;
                if hex_scalar(params, &sig.d) != kv(line_no, first_kv, "d")?
                    || hex_scalar(params, &sig.s) != kv(line_no, second_kv, "s")?
                {
                    return Err(VectorError::Mismatch { line: line_no, what: "dss signature".into() });
                }
                if !sigs::dss_verify(params, &cfg, &skp.u, &m, &sig, &mut ledger) {
                    return Err(VectorError::Mismatch { line: line_no, what: "dss verification".into() });
                }
            }
            other => return Err(parse_err(line_no, format!("unknown signature scheme `{other}`"))),
        }
        verified += 1;
    }
    Ok(verified)
}
