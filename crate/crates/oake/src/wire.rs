//! Handshake wire format: 1-byte message type, scheme byte, length-prefixed
//! identity, fixed-width group elements, and an optional MAC tag.

use crate::group::{GroupElement, GroupParams};
use crate::kex::SchemeId;

pub const MSG_INIT: u8 = 0x01;
pub const MSG_RESPOND: u8 = 0x02;
pub const MSG_CONFIRM: u8 = 0x03;
pub const MAC_LEN: usize = 32;
const MAX_IDENTITY_LEN: usize = 255;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WireError {
    #[error("message truncated")]
    Truncated,
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("unknown scheme byte {0:#04x}")]
    UnknownScheme(u8),
    #[error("identity is not valid UTF-8 or too long")]
    BadIdentity,
    #[error("group element rejected")]
    BadElement,
    #[error("trailing bytes after message body")]
    TrailingBytes,
    #[error("missing or malformed MAC tag")]
    BadMac,
}

/// Decoded handshake message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WireMsg {
    Init { scheme: SchemeId, sender: String, x: GroupElement },
    Respond { scheme: SchemeId, sender: String, x: GroupElement, y: GroupElement, mac: Option<Vec<u8>> },
    Confirm { scheme: SchemeId, sender: String, x: GroupElement, y: GroupElement, mac: Vec<u8> },
}

fn scheme_byte(scheme: SchemeId) -> u8 {
    SchemeId::ALL.iter().position(|s| *s == scheme).expect("scheme in taxonomy") as u8
}

fn scheme_from_byte(b: u8) -> Result<SchemeId, WireError> {
    SchemeId::ALL.get(b as usize).copied().ok_or(WireError::UnknownScheme(b))
}

fn push_identity(out: &mut Vec<u8>, sender: &str) {
    let bytes = sender.as_bytes();
    assert!(bytes.len() <= MAX_IDENTITY_LEN, "identity too long to encode");
    out.extend_from_slice(&(bytes.len() as u16).to_be_bytes());
    out.extend_from_slice(bytes);
}

pub fn encode(params: &GroupParams, msg: &WireMsg) -> Vec<u8> {
    let mut out = Vec::new();
    match msg {
        WireMsg::Init { scheme, sender, x } => {
            out.push(MSG_INIT);
            out.push(scheme_byte(*scheme));
            push_identity(&mut out, sender);
            out.extend_from_slice(&x.to_fixed_bytes(params));
        }
        WireMsg::Respond { scheme, sender, x, y, mac } => {
            out.push(MSG_RESPOND);
            out.push(scheme_byte(*scheme));
            push_identity(&mut out, sender);
            out.extend_from_slice(&x.to_fixed_bytes(params));
            out.extend_from_slice(&y.to_fixed_bytes(params));
            if let Some(mac) = mac {
                assert_eq!(mac.len(), MAC_LEN, "MAC tags are 32 bytes");
                out.extend_from_slice(mac);
            }
        }
        WireMsg::Confirm { scheme, sender, x, y, mac } => {
            out.push(MSG_CONFIRM);
            out.push(scheme_byte(*scheme));
            push_identity(&mut out, sender);
            out.extend_from_slice(&x.to_fixed_bytes(params));
            out.extend_from_slice(&y.to_fixed_bytes(params));
            assert_eq!(mac.len(), MAC_LEN, "MAC tags are 32 bytes");
            out.extend_from_slice(mac);
        }
    }
    out
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.0.len() < n {
            return Err(WireError::Truncated);
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn byte(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn remaining(&self) -> usize {
        self.0.len()
    }
}

/// Decodes and validates one handshake message. Elements are canonicalized
/// and rejected if they fall outside the supergroup's units.
pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<WireMsg, WireError> {
    let mut r = Reader(bytes);
    let msg_type = r.byte()?;
    let scheme = scheme_from_byte(r.byte()?)?;
    let id_len = r.u16()? as usize;
    if id_len > MAX_IDENTITY_LEN {
        return Err(WireError::BadIdentity);
    }
    let sender = std::str::from_utf8(r.take(id_len)?)
        .map_err(|_| WireError::BadIdentity)?
        .to_string();
    let width = params.element_width();
    let element = |r: &mut Reader| -> Result<GroupElement, WireError> {
        params.element_from_bytes(r.take(width)?).map_err(|_| WireError::BadElement)
    };
    let msg = match msg_type {
        MSG_INIT => {
            let x = element(&mut r)?;
            WireMsg::Init { scheme, sender, x }
        }
        MSG_RESPOND => {
            let x = element(&mut r)?;
            let y = element(&mut r)?;
            let mac = match r.remaining() {
                0 => None,
                MAC_LEN => Some(r.take(MAC_LEN)?.to_vec()),
                _ => return Err(WireError::BadMac),
            };
            WireMsg::Respond { scheme, sender, x, y, mac }
        }
        MSG_CONFIRM => {
            let x = element(&mut r)?;
            let y = element(&mut r)?;
            if r.remaining() != MAC_LEN {
                return Err(WireError::BadMac);
            }
            WireMsg::Confirm { scheme, sender, x, y, mac: r.take(MAC_LEN)?.to_vec() }
        }
        other => return Err(WireError::UnknownType(other)),
    };
    if r.remaining() != 0 {
        return Err(WireError::TrailingBytes);
    }
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> GroupParams {
        GroupParams::toy()
    }

    #[test]
    fn malformed_messages_reject_without_panicking() {
        let params = toy();
        assert_eq!(decode(&params, &[]), Err(WireError::Truncated));
        assert_eq!(decode(&params, &[0x09, 0]), Err(WireError::Truncated));
        assert_eq!(decode(&params, &[0x09, 0, 0, 0, 2]), Err(WireError::UnknownType(0x09)));
        assert_eq!(decode(&params, &[MSG_INIT, 0xff, 0, 0, 2]), Err(WireError::UnknownScheme(0xff)));
        // Identity element on the wire is not a valid DH-component carrier.
        assert_eq!(decode(&params, &[MSG_INIT, 0, 0, 1, b'a', 0]), Err(WireError::BadElement));
        // Trailing garbage.
        let msg = WireMsg::Init { scheme: SchemeId::Oake, sender: "a".into(), x: params.generator() };
        let mut bytes = encode(&params, &msg);
        bytes.push(0);
        assert_eq!(decode(&params, &bytes), Err(WireError::TrailingBytes));
        // Respond with a half-length MAC.
        let msg = WireMsg::Respond {
            scheme: SchemeId::Mqv,
            sender: "b".into(),
            x: params.generator(),
            y: params.element_from_u64(9).unwrap(),
            mac: None,
        };
        let mut bytes = encode(&params, &msg);
        bytes.extend_from_slice(&[0u8; 16]);
        assert_eq!(decode(&params, &bytes), Err(WireError::BadMac));
    }

    proptest! {
        #[test]
        fn roundtrip_all_message_shapes(
            scheme_idx in 0usize..8,
            sender in "[a-z]{1,12}",
            xk in 1u64..11,
            yk in 1u64..11,
            with_mac in any::<bool>(),
            mac in prop::collection::vec(any::<u8>(), 32),
        ) {
            let params = toy();
            let scheme = SchemeId::ALL[scheme_idx];
            let x = params.pow_fast(&params.generator(), &num_bigint::BigUint::from(xk));
            let y = params.pow_fast(&params.generator(), &num_bigint::BigUint::from(yk));
            for msg in [
                WireMsg::Init { scheme, sender: sender.clone(), x: x.clone() },
                WireMsg::Respond {
                    scheme,
                    sender: sender.clone(),
                    x: x.clone(),
                    y: y.clone(),
                    mac: with_mac.then(|| mac.clone()),
                },
                WireMsg::Confirm { scheme, sender: sender.clone(), x, y, mac },
            ] {
                let bytes = encode(&params, &msg);
                prop_assert_eq!(decode(&params, &bytes).unwrap(), msg);
            }
        }

        #[test]
        fn decode_never_panics_on_junk(bytes in prop::collection::vec(any::<u8>(), 0..160)) {
            let _ = decode(&toy(), &bytes);
            let _ = decode(&GroupParams::fair64(), &bytes);
        }
    }
}
