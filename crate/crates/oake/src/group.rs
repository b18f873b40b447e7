//! Arithmetic over a prime-order subgroup G of the multiplicative group
//! modulo an odd integer, with subgroup/cofactor tests, instrumented
//! (multi-)exponentiation, and small-group brute-force oracles for tests.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Brute-force oracles refuse subgroups larger than this.
pub const ORACLE_BOUND_BITS: u64 = 20;

/// Operation-count weights: a multiplication is charged as three squarings,
/// so one exponentiation-equivalent (`bitlen_q` squarings plus `bitlen_q/2`
/// multiplications) costs `2.5 * bitlen_q` weight units and a simultaneous
/// double exponentiation with full-width exponents comes out at 1.3.
const SQUARING_WEIGHT: f64 = 1.0;
const MULTIPLICATION_WEIGHT: f64 = 3.0;

#[derive(Debug, thiserror::Error)]
pub enum GroupError {
    #[error("value is not a unit of the supergroup")]
    NotAnElement,
    #[error("element is not in the prime-order subgroup")]
    NotInSubgroup,
    #[error("brute-force oracle bound exceeded (q > 2^{ORACLE_BOUND_BITS})")]
    OracleBoundExceeded,
    #[error("invalid group parameters: {0}")]
    InvalidParams(String),
    #[error("malformed parameter file: {0}")]
    ParseError(String),
}

/// Element of the supergroup G', canonical residue in `[1, modulus - 1]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupElement(BigUint);

impl GroupElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_one()
    }

    /// Big-endian encoding left-padded to the group's element width.
    pub fn to_fixed_bytes(&self, params: &GroupParams) -> Vec<u8> {
        left_pad(&self.0, params.element_width())
    }
}

impl std::fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GroupElement({:x})", self.0)
    }
}

/// Exponent reduced mod q.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar(BigUint);

impl Scalar {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_fixed_bytes(&self, params: &GroupParams) -> Vec<u8> {
        left_pad(&self.0, params.scalar_width())
    }
}

impl std::fmt::Debug for Scalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Scalar({:x})", self.0)
    }
}

/// Per-scope accumulator for exponentiation cost, passed explicitly.
///
/// `full_exponentiations` counts single-base exponentiation calls,
/// `multi_exp_equivalent` accumulates all exponentiation work in
/// exponentiation-equivalents under the weighting above, and
/// `multiplications` counts standalone group multiplications.
#[derive(Clone, Debug, Default)]
pub struct OpCounter {
    pub full_exponentiations: u64,
    pub multi_exp_equivalent: f64,
    pub multiplications: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    fn charge(&mut self, squarings: u64, multiplications: u64, params: &GroupParams) {
        let unit = 2.5 * params.bitlen_q() as f64;
        self.multi_exp_equivalent +=
            (squarings as f64 * SQUARING_WEIGHT + multiplications as f64 * MULTIPLICATION_WEIGHT) / unit;
    }

    /// Total cost in exponentiation-equivalents, folding in bare multiplications.
    pub fn equivalents(&self, params: &GroupParams) -> f64 {
        let unit = 2.5 * params.bitlen_q() as f64;
        self.multi_exp_equivalent + self.multiplications as f64 * MULTIPLICATION_WEIGHT / unit
    }
}

/// The cyclic group G of prime order `q` inside the multiplicative group
/// modulo `modulus`, with generator `g` and cofactor `t = |G'| / q`.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupParams {
    modulus: BigUint,
    q: BigUint,
    g: BigUint,
    t: BigUint,
    bitlen_q: u64,
}

impl std::fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GroupParams(|p|={}, |q|={})", self.modulus.bits(), self.bitlen_q)
    }
}

// Built-in parameter sets. DESK/BENCH/FAIR64 were produced by a one-off
// search for p = q*t + 1 with both p and q prime and g of order q.
const TOY: (u64, u64, u64, u64) = (23, 11, 2, 2);

const DESK_P: &str = "9b56246d4f821a3549be597a30771f5b8eee4968975a5fdbc17b37d7cf4a78d14af98f6a2df384df2a02cd63c1fc89eb7c68dd42a4e184a021a48f01d74b910907dbe697e4f546c41e0a09588816c7842326915729484774e699b3684ff987486e4101417a2e4ce38b441de77ded97013d9280d93a9d01544d462207073e6f7403b0b59df684066d720b58835ebb82e0b1152c531b2aee4865c51e882bffd9f0e6534be85de40edb2c5233d5a9bee91c5a7aeccecf8c9f532f986d37d9a18bfceaeb7669eb01f90072f5e65217b8ed4f4ef382e9cd1b1ed6371d9df7190241de3189877f25d264a65896a855fc47cbb989eeba551bdf6a21d23267c9f87e7d49";
const DESK_Q: &str = "fecbf662cac67cf57e8e1b67192087a907474c9b615fc458d9aa44681705a683";
const DESK_G: &str = "8e8ca867c08711f7ee1b6df8c8f138e7e6e88d208b068d894e72abe7fde81ba5ced76d315ea3bbf18ef4259e680266d9c65cbd81a29f29f2e6105c393d4add3dc3e8b7a56045d0d0801c3dd1483d07ea629b246aa95f55f91596be8123d83d2be5ae084f6cdfb2055fb93d0dd2b221b1fe79101fc60e5835f9328545356a50ebf25b0ac46a3e20204590e9364a7ab92bb549e7755d4093388ca8fbafe61657795e07449adf55a1133461155bdaa2cb663fccb1fcd32189ed910d36202fed9f42c0b74b3444a42451bccbd9c1fa475c1bf9713a2f7745d4edb13492ee1df1759ebf0eab4e0eae21cf13d76f5b658c430bae50e916fab696c66c3c673b817e846c";
const DESK_T: &str = "9c11efde5fef3951864a75d7e029ac196787a04c79788a74c21cd277386f15036f1d692b56235088cf0d5a1e46c460b43a3a2767e897542f6e8361dfc9ab9a48cd548067c3fe89bf39ef1e9225f25027d35a80aa9d0f210329076107d1c796d23a7a110e4fd0a2cd9fb99b9b57587a038f0369a3373d0cbaabbac91237d4556357f38bbbb387a04279656d2dfb0b61bde4ced2bfe71c1e41bd3686c5b295776cc8d3a63c2f0b84404f21bb391f0eb6030a2d89448f49411cb3f3f1469883ca4616858171cfc4b5aed7c66e2b8de8872787cc40f7f3fac786358407b1bbcfcb18";

const BENCH_P: &str = "12573f4cb5eb1f0cf5ff408c8c6872a15288a3bfb9ea43c1fba9b2093d1cac103";
const BENCH_Q: &str = "92b9fa65af58f867affa04646343950a94451dfdcf521e0fdd4d9049e8e56081";
const BENCH_G: &str = "4";
const BENCH_T: &str = "2";

const FAIR64_P: &str = "91552534a4c8db0f1757d1e6bc38d028b58acc7090492222948dec90ef37db2fa65d0a1a72c975740a68bd6ac1fda15bfb1e1c1cc6f03fceab69984461344db3";
const FAIR64_Q: &str = "ffcbc3bc090b8215";
const FAIR64_G: &str = "8574c2b31b4373ab0bb2e5cb351dc7a6dff2e89ff936a46cb13bc5e1dd7d0d89ecda2bd68ec66fcafc3cd0021ff9b61e02b3db170855d896135a22800a1a1d1a";
const FAIR64_T: &str = "9172d2c4fb8e880aba82371ac05d983ceee26157db136d4eb3d73d3548c12771b36c9d6acb2810ee70dfc46af617abdbb6f795d886b7ed6a";

fn hexint(s: &str) -> BigUint {
    BigUint::parse_bytes(s.as_bytes(), 16).expect("valid hex constant")
}

impl GroupParams {
    /// Validates that q is prime, t*q = modulus - 1, and g has order q.
    pub fn new(modulus: BigUint, q: BigUint, g: BigUint, t: BigUint) -> Result<Self, GroupError> {
        if modulus.is_even() || modulus <= BigUint::from(3u8) {
            return Err(GroupError::InvalidParams("modulus must be an odd integer > 3".into()));
        }
        if !is_prime(&q) {
            return Err(GroupError::InvalidParams("q is not prime".into()));
        }
        let n = &modulus - 1u8;
        if &t * &q != n {
            return Err(GroupError::InvalidParams("t*q != modulus - 1".into()));
        }
        if g.is_one() || g.is_zero() || g >= modulus {
            return Err(GroupError::InvalidParams("generator out of range".into()));
        }
        if !g.modpow(&q, &modulus).is_one() {
            return Err(GroupError::InvalidParams("generator does not have order q".into()));
        }
        let bitlen_q = q.bits();
        Ok(Self { modulus, q, g, t, bitlen_q })
    }

    fn new_unchecked(p: &str, q: &str, g: &str, t: &str) -> Self {
        let q = hexint(q);
        let bitlen_q = q.bits();
        Self { modulus: hexint(p), q, g: hexint(g), t: hexint(t), bitlen_q }
    }

    /// Toy group p=23, q=11, g=2, t=2; all brute-force oracles work here.
    pub fn toy() -> Self {
        let (p, q, g, t) = TOY;
        Self {
            modulus: BigUint::from(p),
            q: BigUint::from(q),
            g: BigUint::from(g),
            t: BigUint::from(t),
            bitlen_q: 4,
        }
    }

    /// Desk-scale group: 2048-bit modulus, 256-bit prime-order subgroup.
    pub fn desk() -> Self {
        Self::new_unchecked(DESK_P, DESK_Q, DESK_G, DESK_T)
    }

    /// Safe-prime group (257-bit modulus, 256-bit q, cofactor 2); the small
    /// cofactor makes embedded subgroup tests meaningful at full exponent width,
    /// so this is the group the efficiency ledger is measured on.
    pub fn bench() -> Self {
        Self::new_unchecked(BENCH_P, BENCH_Q, BENCH_G, BENCH_T)
    }

    /// 64-bit subgroup order over a 512-bit modulus, for fairness sampling.
    pub fn fair64() -> Self {
        Self::new_unchecked(FAIR64_P, FAIR64_Q, FAIR64_G, FAIR64_T)
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn order(&self) -> &BigUint {
        &self.q
    }

    pub fn cofactor(&self) -> &BigUint {
        &self.t
    }

    pub fn bitlen_q(&self) -> u64 {
        self.bitlen_q
    }

    /// Serialized element width in bytes: ceil(|p| / 8).
    pub fn element_width(&self) -> usize {
        ((self.modulus.bits() + 7) / 8) as usize
    }

    pub fn scalar_width(&self) -> usize {
        ((self.bitlen_q + 7) / 8) as usize
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(BigUint::one())
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement(self.g.clone())
    }

    /// Canonicalizes into `[1, modulus - 1]`; rejects 0 and non-units.
    pub fn element(&self, value: BigUint) -> Result<GroupElement, GroupError> {
        let v = value % &self.modulus;
        if v.is_zero() || !v.gcd(&self.modulus).is_one() {
            return Err(GroupError::NotAnElement);
        }
        Ok(GroupElement(v))
    }

    pub fn element_from_u64(&self, value: u64) -> Result<GroupElement, GroupError> {
        self.element(BigUint::from(value))
    }

    pub fn element_from_bytes(&self, bytes: &[u8]) -> Result<GroupElement, GroupError> {
        self.element(BigUint::from_bytes_be(bytes))
    }

    pub fn scalar(&self, value: BigUint) -> Scalar {
        Scalar(value % &self.q)
    }

    pub fn scalar_from_u64(&self, value: u64) -> Scalar {
        self.scalar(BigUint::from(value))
    }

    pub fn scalar_from_bytes(&self, bytes: &[u8]) -> Scalar {
        self.scalar(BigUint::from_bytes_be(bytes))
    }

    /// Uniform scalar in `[1, q-1]`.
    pub fn random_nonzero_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> Scalar {
        loop {
            let v = rng.gen_biguint_below(&self.q);
            if !v.is_zero() {
                return Scalar(v);
            }
        }
    }

    pub fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.q)
    }

    pub fn scalar_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar(((&self.q + &a.0) - &b.0) % &self.q)
    }

    pub fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % &self.q)
    }

    pub fn scalar_neg(&self, a: &Scalar) -> Scalar {
        if a.0.is_zero() {
            Scalar(BigUint::zero())
        } else {
            Scalar(&self.q - &a.0)
        }
    }

    /// Multiplicative inverse mod q; `None` for zero.
    pub fn scalar_inv(&self, a: &Scalar) -> Option<Scalar> {
        if a.0.is_zero() {
            return None;
        }
        // q is prime, so a^(q-2) = a^-1.
        let e = &self.q - 2u8;
        Some(Scalar(a.0.modpow(&e, &self.q)))
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement, ops: &mut OpCounter) -> GroupElement {
        ops.multiplications += 1;
        GroupElement((&a.0 * &b.0) % &self.modulus)
    }

    /// Uncounted exponentiation for setup work (key generation, validation,
    /// oracles); instrumented paths use `exp`/`multi_exp2`.
    pub fn pow_fast(&self, base: &GroupElement, k: &BigUint) -> GroupElement {
        GroupElement(base.0.modpow(k, &self.modulus))
    }

    pub fn inv_element(&self, a: &GroupElement) -> GroupElement {
        // Units mod an odd modulus; Euler inverse via the supergroup order.
        let e = &self.modulus - 2u8;
        if is_prime(&self.modulus) {
            GroupElement(a.0.modpow(&e, &self.modulus))
        } else {
            let phi_exp = &self.t * &self.q - 1u8;
            GroupElement(a.0.modpow(&phi_exp, &self.modulus))
        }
    }

    /// `base^k` in the supergroup, charging the measured square-and-multiply
    /// cost to `ops` (one full exponentiation-equivalent for a full-width k).
    pub fn exp(&self, base: &GroupElement, k: &Scalar, ops: &mut OpCounter) -> GroupElement {
        self.exp_int(base, &k.0, ops)
    }

    /// `base^k` for an arbitrary-width nonnegative integer exponent.
    pub fn exp_int(&self, base: &GroupElement, k: &BigUint, ops: &mut OpCounter) -> GroupElement {
        ops.full_exponentiations += 1;
        if k.is_zero() {
            return self.identity();
        }
        let mut acc = base.0.clone();
        let mut squarings = 0u64;
        let mut mults = 0u64;
        let bits = k.bits();
        for i in (0..bits - 1).rev() {
            acc = (&acc * &acc) % &self.modulus;
            squarings += 1;
            if k.bit(i) {
                acc = (&acc * &base.0) % &self.modulus;
                mults += 1;
            }
        }
        ops.charge(squarings, mults, self);
        GroupElement(acc)
    }

    /// `b1^k1 * b2^k2` by interleaved (simultaneous) square-and-multiply.
    /// For full-width exponent pairs this charges about 1.3 equivalents.
    pub fn multi_exp2(
        &self,
        b1: &GroupElement,
        k1: &Scalar,
        b2: &GroupElement,
        k2: &Scalar,
        ops: &mut OpCounter,
    ) -> GroupElement {
        self.multi_exp2_int(b1, &k1.0, b2, &k2.0, ops)
    }

    pub fn multi_exp2_int(
        &self,
        b1: &GroupElement,
        k1: &BigUint,
        b2: &GroupElement,
        k2: &BigUint,
        ops: &mut OpCounter,
    ) -> GroupElement {
        let bits = k1.bits().max(k2.bits());
        if bits == 0 {
            return self.identity();
        }
        let mut squarings = 0u64;
        let mut mults = 0u64;
        // Table entry for the joint bit pattern 11.
        let b12 = (&b1.0 * &b2.0) % &self.modulus;
        mults += 1;
        let mut acc = BigUint::one();
        for i in (0..bits).rev() {
            if !acc.is_one() {
                acc = (&acc * &acc) % &self.modulus;
                squarings += 1;
            }
            let factor = match (k1.bit(i), k2.bit(i)) {
                (false, false) => None,
                (true, false) => Some(&b1.0),
                (false, true) => Some(&b2.0),
                (true, true) => Some(&b12),
            };
            if let Some(f) = factor {
                if acc.is_one() {
                    acc = f.clone();
                } else {
                    acc = (&acc * f) % &self.modulus;
                    mults += 1;
                }
            }
        }
        ops.charge(squarings, mults, self);
        GroupElement(acc)
    }

    /// True iff `x` is in G' minus the identity and `x^q = 1`.
    pub fn explicit_subgroup_test(&self, x: &GroupElement) -> bool {
        !x.is_identity() && x.0.modpow(&self.q, &self.modulus).is_one()
    }

    /// True iff `x` is in G' and `x^t != 1`, i.e. x is not t-torsion.
    pub fn cofactor_check(&self, x: &GroupElement) -> bool {
        !x.0.modpow(&self.t, &self.modulus).is_one()
    }

    fn check_oracle_bound(&self) -> Result<(), GroupError> {
        if self.bitlen_q > ORACLE_BOUND_BITS {
            return Err(GroupError::OracleBoundExceeded);
        }
        Ok(())
    }

    /// Exhaustive discrete log to base g; test oracle, toy groups only.
    pub fn dlog_bruteforce(&self, x: &GroupElement) -> Result<Scalar, GroupError> {
        self.check_oracle_bound()?;
        if !x.is_identity() && !self.explicit_subgroup_test(x) {
            return Err(GroupError::NotInSubgroup);
        }
        let mut acc = BigUint::one();
        let mut k = BigUint::zero();
        while k < self.q {
            if acc == x.0 {
                return Ok(Scalar(k));
            }
            acc = (&acc * &self.g) % &self.modulus;
            k += 1u8;
        }
        Err(GroupError::NotInSubgroup)
    }

    /// Constructive CDH oracle: `g^(log x * log y)`, toy groups only.
    pub fn cdh_oracle(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement, GroupError> {
        let xl = self.dlog_bruteforce(x)?;
        let yl = self.dlog_bruteforce(y)?;
        let k = self.scalar_mul(&xl, &yl);
        Ok(self.exp(&self.generator(), &k, &mut OpCounter::new()))
    }

    /// Fixed element-order iteration over all of G, identity first. Oracle-bounded.
    pub fn enumerate_subgroup(&self) -> Result<Vec<GroupElement>, GroupError> {
        self.check_oracle_bound()?;
        let mut out = Vec::new();
        let mut acc = BigUint::one();
        let mut k = BigUint::zero();
        while k < self.q {
            out.push(GroupElement(acc.clone()));
            acc = (&acc * &self.g) % &self.modulus;
            k += 1u8;
        }
        Ok(out)
    }

    /// Parses the labeled-line parameter format: `p=<hex>`, `q=<hex>`,
    /// `g=<hex>`, `t=<hex>`, one per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, GroupError> {
        let mut p = None;
        let mut q = None;
        let mut g = None;
        let mut t = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| GroupError::ParseError(format!("line {}: expected key=value", lineno + 1)))?;
            let val = BigUint::parse_bytes(val.trim().as_bytes(), 16)
                .ok_or_else(|| GroupError::ParseError(format!("line {}: bad hex", lineno + 1)))?;
            match key.trim() {
                "p" => p = Some(val),
                "q" => q = Some(val),
                "g" => g = Some(val),
                "t" => t = Some(val),
                other => {
                    return Err(GroupError::ParseError(format!("line {}: unknown key `{}`", lineno + 1, other)))
                }
            }
        }
        match (p, q, g, t) {
            (Some(p), Some(q), Some(g), Some(t)) => Self::new(p, q, g, t),
            _ => Err(GroupError::ParseError("missing one of p, q, g, t".into())),
        }
    }

    pub fn to_file_string(&self) -> String {
        format!("p={:x}\nq={:x}\ng={:x}\nt={:x}\n", self.modulus, self.q, self.g, self.t)
    }

    /// Generates fresh parameters with `|q| = qbits`, `|p| = pbits`, seeded.
    pub fn generate(qbits: u64, pbits: u64, seed: u64) -> Result<Self, GroupError> {
        if qbits < 4 || pbits <= qbits {
            return Err(GroupError::InvalidParams("need pbits > qbits >= 4".into()));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let q = loop {
            let mut cand = rng.gen_biguint(qbits);
            cand.set_bit(qbits - 1, true);
            cand.set_bit(0, true);
            if is_prime(&cand) {
                break cand;
            }
        };
        let cbits = pbits - qbits;
        loop {
            let mut c = rng.gen_biguint(cbits);
            c.set_bit(cbits - 1, true);
            c.set_bit(0, false);
            let p = &q * &c + 1u8;
            if p.bits() != pbits || !is_prime(&p) {
                continue;
            }
            let mut h = BigUint::from(2u8);
            let g = loop {
                let g = h.modpow(&c, &p);
                if !g.is_one() {
                    break g;
                }
                h += 1u8;
            };
            return Self::new(p, q, g, c);
        }
    }
}

fn left_pad(v: &BigUint, width: usize) -> Vec<u8> {
    let bytes = v.to_bytes_be();
    assert!(bytes.len() <= width, "value wider than target width");
    let mut out = vec![0u8; width - bytes.len()];
    out.extend_from_slice(&bytes);
    out
}

/// Miller-Rabin with 40 pseudo-random bases derived from the candidate.
pub fn is_prime(n: &BigUint) -> bool {
    if *n < BigUint::from(2u8) {
        return false;
    }
    for small in [2u8, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let s = BigUint::from(small);
        if *n == s {
            return true;
        }
        if (n % &s).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u8;
    let r = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> r;
    let mut seed = [0u8; 32];
    let nb = n.to_bytes_le();
    for (i, b) in nb.iter().enumerate() {
        seed[i % 32] ^= *b;
    }
    let mut rng = ChaCha20Rng::from_seed(seed);
    let two = BigUint::from(2u8);
    'witness: for _ in 0..40 {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..r.saturating_sub(1) {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
