//! Workbench for implicitly authenticated Diffie-Hellman key exchange.
//!
//! Implements the (s)OAKE protocol family next to (H)MQV baselines over
//! prime-order subgroups of modular groups, the exponent-dependent attack
//! constructions against (H)MQV, session-key computational-fairness
//! diagnostics, a CK-style scriptable session harness, and the
//! challenge-divided Schnorr signature suite. Toy parameters (p=23, q=11)
//! keep every protocol value checkable against brute-force oracles.

pub mod attacks;
pub mod group;
pub mod hashing;
pub mod kex;
pub mod sessions;
pub mod sigs;
pub mod vectors;
pub mod wire;

pub use group::{GroupElement, GroupParams, OpCounter, Scalar};
pub use kex::{CofactorMode, KeyPair, Role, SchemeConfig, SchemeId};
