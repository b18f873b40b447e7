//! CK-style session engine: activations (initiate/respond/complete), unique
//! session tags with matching logic, exposure queries, and a line-oriented
//! adversary script that owns the network.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::group::{GroupElement, GroupParams, OpCounter, Scalar};
use crate::kex::{
    compute_shared_secret, confirm_tag, derive_cde, derive_keys, validate_peer_dh, verify_confirm_tag,
    ConfirmContext, ConfirmDirection, ConfirmFamily, KexError, KeyPair, MacKey, PrecomputedLeaf, Role,
    SchemeConfig, SessionKey,
};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("unknown party `{0}`")]
    UnknownParty(String),
    #[error("received DH-component failed validation; activation ignored")]
    InvalidDhComponent,
    #[error("no open session matches the activation; ignored")]
    NoOpenSession,
    #[error("session state already erased")]
    StateErased,
    #[error("party `{0}` holds no static secret")]
    NoSecret(String),
    #[error("session {0} not found")]
    NoSuchSession(usize),
    #[error("message {0} not found or already consumed")]
    NoSuchMessage(usize),
    #[error("malformed directive at step {step}: {reason}")]
    MalformedDirective { step: usize, reason: String },
    #[error(transparent)]
    Kex(#[from] KexError),
}

/// Session tag (owner, peer, own component, peer component); complete once
/// the peer component exists. The matching tag is the transposed one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionTag {
    pub owner: String,
    pub peer: String,
    pub own_dh: GroupElement,
    pub peer_dh: Option<GroupElement>,
}

impl SessionTag {
    pub fn is_complete(&self) -> bool {
        self.peer_dh.is_some()
    }

    /// True iff `other` is this tag's (unique) matching session tag.
    pub fn matches(&self, other: &SessionTag) -> bool {
        self.is_complete()
            && other.is_complete()
            && self.owner == other.peer
            && self.peer == other.owner
            && Some(&self.own_dh) == other.peer_dh.as_ref()
            && self.peer_dh.as_ref() == Some(&other.own_dh)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lifecycle {
    Incomplete,
    AwaitingConfirm,
    Complete,
    Aborted,
    Expired,
}

impl Lifecycle {
    fn label(self) -> &'static str {
        match self {
            Lifecycle::Incomplete => "incomplete",
            Lifecycle::AwaitingConfirm => "awaiting-confirm",
            Lifecycle::Complete => "complete",
            Lifecycle::Aborted => "aborted",
            Lifecycle::Expired => "expired",
        }
    }
}

/// One session owned by one party. Ephemeral state is erased as soon as the
/// key is computed or the session dies; keys are erased on expiry.
#[derive(Clone, Debug)]
pub struct SessionRecord {
    pub id: usize,
    pub role: Role,
    pub tag: SessionTag,
    pub lifecycle: Lifecycle,
    ephemeral: Option<PrecomputedLeaf>,
    key: Option<SessionKey>,
    mac_key: Option<MacKey>,
    pub exposed: bool,
    pub mac_outcome: Option<bool>,
}

impl SessionRecord {
    pub fn session_key(&self) -> Option<&SessionKey> {
        self.key.as_ref()
    }

    pub fn has_ephemeral(&self) -> bool {
        self.ephemeral.is_some()
    }

    fn erase_ephemeral(&mut self) {
        self.ephemeral = None;
    }
}

struct Party {
    public: GroupElement,
    keypair: Option<KeyPair>,
    corrupted: bool,
}

/// Wire messages as the adversary sees them.
#[derive(Clone, Debug)]
pub enum ScriptMsg {
    /// Initiator's X, addressed from/to identities.
    Dh1 { from: String, to: String, x: GroupElement },
    /// Responder's Y answering x, with an optional confirmation tag.
    Dh2 { from: String, to: String, x: GroupElement, y: GroupElement, tag: Option<Vec<u8>> },
    /// Initiator's closing confirmation tag.
    Confirm { from: String, to: String, x: GroupElement, y: GroupElement, tag: Vec<u8> },
}

/// Deterministic single-owner engine; concurrency is adversary-chosen
/// interleaving of activations, which is what the model requires.
pub struct Engine {
    pub params: GroupParams,
    pub cfg: SchemeConfig,
    pub confirmed: bool,
    rng: ChaCha20Rng,
    parties: BTreeMap<String, Party>,
    sessions: Vec<SessionRecord>,
}

impl Engine {
    pub fn new(params: GroupParams, cfg: SchemeConfig, confirmed: bool, seed: u64) -> Self {
        Self {
            params,
            cfg,
            confirmed,
            rng: ChaCha20Rng::seed_from_u64(seed),
            parties: BTreeMap::new(),
            sessions: Vec::new(),
        }
    }

    pub fn register(&mut self, id: &str) -> KeyPair {
        let kp = KeyPair::generate(&self.params, id, &mut self.rng);
        self.parties.insert(
            id.to_string(),
            Party { public: kp.public.clone(), keypair: Some(kp.clone()), corrupted: false },
        );
        kp
    }

    /// Registration without proof-of-possession: a bare public key, possibly
    /// adversarially correlated with some DH-component.
    pub fn register_public_key(&mut self, id: &str, public: GroupElement) {
        self.parties.insert(id.to_string(), Party { public, keypair: None, corrupted: false });
    }

    /// Registers an existing key pair (e.g. to mirror a party across two
    /// engine instances on either end of a transport).
    pub fn adopt_keypair(&mut self, kp: KeyPair) {
        self.parties.insert(
            kp.identity.clone(),
            Party { public: kp.public.clone(), keypair: Some(kp), corrupted: false },
        );
    }

    pub fn public_key_of(&self, id: &str) -> Result<&GroupElement, SessionError> {
        self.parties.get(id).map(|p| &p.public).ok_or_else(|| SessionError::UnknownParty(id.into()))
    }

    pub fn is_corrupted(&self, id: &str) -> bool {
        self.parties.get(id).map(|p| p.corrupted).unwrap_or(false)
    }

    fn keypair_of(&self, id: &str) -> Result<&KeyPair, SessionError> {
        let party = self.parties.get(id).ok_or_else(|| SessionError::UnknownParty(id.into()))?;
        party.keypair.as_ref().ok_or_else(|| SessionError::NoSecret(id.into()))
    }

    pub fn sessions(&self) -> &[SessionRecord] {
        &self.sessions
    }

    pub fn session(&self, id: usize) -> Result<&SessionRecord, SessionError> {
        self.sessions.get(id).ok_or(SessionError::NoSuchSession(id))
    }

    /// Initiate(A, B): draw (x, X), precompute the static-peer term where the
    /// scheme admits it, open the incomplete session (A, B, X).
    pub fn initiate(&mut self, id_a: &str, id_b: &str) -> Result<(usize, ScriptMsg), SessionError> {
        let own = self.keypair_of(id_a)?.clone();
        let peer_pk = self.public_key_of(id_b)?.clone();
        let mut leaf = PrecomputedLeaf::fresh(&self.params, &mut self.rng);
        leaf.attach_peer_term(
            &self.params, &self.cfg, Role::Initiator, &own, id_b, &peer_pk, b"", b"",
            &mut OpCounter::new(),
        );
        let record = SessionRecord {
            id: self.sessions.len(),
            role: Role::Initiator,
            tag: SessionTag {
                owner: id_a.into(),
                peer: id_b.into(),
                own_dh: leaf.big_x.clone(),
                peer_dh: None,
            },
            lifecycle: Lifecycle::Incomplete,
            key: None,
            mac_key: None,
            exposed: false,
            mac_outcome: None,
            ephemeral: Some(leaf),
        };
        let x = record.tag.own_dh.clone();
        let id = record.id;
        self.sessions.push(record);
        Ok((id, ScriptMsg::Dh1 { from: id_a.into(), to: id_b.into(), x }))
    }

    /// Respond(B, A, X): validate X, compute the key, and either complete
    /// (basic mode) or await the closing confirmation (confirmed mode).
    pub fn respond(
        &mut self,
        id_b: &str,
        id_a: &str,
        x_in: &GroupElement,
    ) -> Result<(usize, ScriptMsg), SessionError> {
        let own = self.keypair_of(id_b)?.clone();
        let peer_pk = self.public_key_of(id_a)?.clone();
        validate_peer_dh(&self.params, self.cfg.t_mode, x_in).map_err(|_| SessionError::InvalidDhComponent)?;

        let mut leaf = PrecomputedLeaf::fresh(&self.params, &mut self.rng);
        leaf.attach_peer_term(
            &self.params, &self.cfg, Role::Responder, &own, id_a, &peer_pk, b"", b"",
            &mut OpCounter::new(),
        );
        let exps = derive_cde(
            &self.params, &self.cfg, b"", b"", id_a, &peer_pk, id_b, &own.public, x_in, Some(&leaf.big_x),
        )?;
        let sigma = compute_shared_secret(
            &self.params, &self.cfg, Role::Responder, &own, Some(&leaf), &peer_pk, Some(x_in), &exps,
            &mut OpCounter::new(),
        )
        .map_err(|e| match e {
            KexError::SmallSubgroupDetected => SessionError::InvalidDhComponent,
            other => SessionError::Kex(other),
        })?;
        // A collapsed shared secret is a failed subgroup policy; the
        // activation is ignored the same way an invalid component is.
        let (key, mac_key) = derive_keys(&self.params, &self.cfg, &sigma, self.confirmed)
            .map_err(|_| SessionError::InvalidDhComponent)?;

        let y = leaf.big_x.clone();
        let tag = if self.confirmed {
            let ctx = ConfirmContext {
                initiator_id: id_a.into(),
                responder_id: id_b.into(),
                x: x_in.clone(),
                y: y.clone(),
            };
            Some(confirm_tag(
                ConfirmFamily::for_scheme(self.cfg.scheme),
                &self.params,
                mac_key.as_ref().expect("confirmed mode derives a MAC key"),
                ConfirmDirection::ResponderToInitiator,
                Some(&ctx),
            ))
        } else {
            None
        };

        let mut record = SessionRecord {
            id: self.sessions.len(),
            role: Role::Responder,
            tag: SessionTag {
                owner: id_b.into(),
                peer: id_a.into(),
                own_dh: y.clone(),
                peer_dh: Some(x_in.clone()),
            },
            lifecycle: if self.confirmed { Lifecycle::AwaitingConfirm } else { Lifecycle::Complete },
            key: Some(key),
            mac_key,
            exposed: false,
            mac_outcome: None,
            ephemeral: Some(leaf),
        };
        // Key computed; the DH-exponent is erased promptly after use.
        record.erase_ephemeral();
        let id = record.id;
        self.sessions.push(record);
        Ok((
            id,
            ScriptMsg::Dh2 { from: id_b.into(), to: id_a.into(), x: x_in.clone(), y, tag },
        ))
    }

    /// Complete(A, B, X, Y): close the open session (A, B, X) if it exists.
    pub fn complete(
        &mut self,
        id_a: &str,
        id_b: &str,
        x: &GroupElement,
        y: &GroupElement,
        responder_tag: Option<&[u8]>,
    ) -> Result<(usize, Option<ScriptMsg>), SessionError> {
        let own = self.keypair_of(id_a)?.clone();
        let peer_pk = self.public_key_of(id_b)?.clone();
        // Newest-first: honest flows close the most recently opened session.
        let idx = self
            .sessions
            .iter()
            .rposition(|s| {
                s.lifecycle == Lifecycle::Incomplete
                    && s.role == Role::Initiator
                    && s.tag.owner == id_a
                    && s.tag.peer == id_b
                    && s.tag.own_dh == *x
            })
            .ok_or(SessionError::NoOpenSession)?;
        if validate_peer_dh(&self.params, self.cfg.t_mode, y).is_err() {
            return Err(SessionError::InvalidDhComponent);
        }

        let leaf = self.sessions[idx].ephemeral.clone().ok_or(SessionError::StateErased)?;
        let exps = derive_cde(
            &self.params, &self.cfg, b"", b"", id_a, &own.public, id_b, &peer_pk, x, Some(y),
        )?;
        let sigma = match compute_shared_secret(
            &self.params, &self.cfg, Role::Initiator, &own, Some(&leaf), &peer_pk, Some(y), &exps,
            &mut OpCounter::new(),
        ) {
            Ok(s) => s,
            Err(KexError::SmallSubgroupDetected) => {
                let record = &mut self.sessions[idx];
                record.lifecycle = Lifecycle::Aborted;
                record.erase_ephemeral();
                return Err(SessionError::InvalidDhComponent);
            }
            Err(e) => return Err(SessionError::Kex(e)),
        };
        let (key, mac_key) = match derive_keys(&self.params, &self.cfg, &sigma, self.confirmed) {
            Ok(pair) => pair,
            Err(_) => {
                let record = &mut self.sessions[idx];
                record.lifecycle = Lifecycle::Aborted;
                record.erase_ephemeral();
                return Err(SessionError::InvalidDhComponent);
            }
        };

        let mut reply = None;
        let mut mac_outcome = None;
        if self.confirmed {
            let ctx = ConfirmContext {
                initiator_id: id_a.into(),
                responder_id: id_b.into(),
                x: x.clone(),
                y: y.clone(),
            };
            let family = ConfirmFamily::for_scheme(self.cfg.scheme);
            let mk = mac_key.as_ref().expect("confirmed mode derives a MAC key");
            let ok = responder_tag
                .map(|t| {
                    verify_confirm_tag(family, &self.params, mk, ConfirmDirection::ResponderToInitiator, Some(&ctx), t)
                        .is_ok()
                })
                .unwrap_or(false);
            mac_outcome = Some(ok);
            if !ok {
                let record = &mut self.sessions[idx];
                record.lifecycle = Lifecycle::Aborted;
                record.erase_ephemeral();
                record.mac_outcome = mac_outcome;
                return Err(SessionError::Kex(KexError::MacMismatch));
            }
            let tag = confirm_tag(family, &self.params, mk, ConfirmDirection::InitiatorToResponder, Some(&ctx));
            reply = Some(ScriptMsg::Confirm {
                from: id_a.into(),
                to: id_b.into(),
                x: x.clone(),
                y: y.clone(),
                tag,
            });
        }

        let record = &mut self.sessions[idx];
        record.tag.peer_dh = Some(y.clone());
        record.lifecycle = Lifecycle::Complete;
        record.key = Some(key);
        record.mac_key = mac_key;
        record.mac_outcome = mac_outcome;
        record.erase_ephemeral();
        Ok((idx, reply))
    }

    /// Responder-side handling of the closing confirmation tag.
    pub fn confirm(
        &mut self,
        id_b: &str,
        id_a: &str,
        x: &GroupElement,
        y: &GroupElement,
        tag: &[u8],
    ) -> Result<usize, SessionError> {
        let idx = self
            .sessions
            .iter()
            .rposition(|s| {
                s.lifecycle == Lifecycle::AwaitingConfirm
                    && s.tag.owner == id_b
                    && s.tag.peer == id_a
                    && s.tag.own_dh == *y
                    && s.tag.peer_dh.as_ref() == Some(x)
            })
            .ok_or(SessionError::NoOpenSession)?;
        let ctx = ConfirmContext {
            initiator_id: id_a.into(),
            responder_id: id_b.into(),
            x: x.clone(),
            y: y.clone(),
        };
        let family = ConfirmFamily::for_scheme(self.cfg.scheme);
        let record = &mut self.sessions[idx];
        let mk = record.mac_key.as_ref().expect("awaiting-confirm sessions hold a MAC key");
        let ok = verify_confirm_tag(family, &self.params, mk, ConfirmDirection::InitiatorToResponder, Some(&ctx), tag)
            .is_ok();
        record.mac_outcome = Some(ok);
        record.lifecycle = if ok { Lifecycle::Complete } else { Lifecycle::Aborted };
        if !ok {
            record.key = None;
            record.mac_key = None;
            return Err(SessionError::Kex(KexError::MacMismatch));
        }
        Ok(idx)
    }

    /// State-reveal query against an incomplete session: returns the
    /// DH-component, DH-exponent, and precomputed static-peer term, and marks
    /// the session exposed. Completed or aborted sessions have erased state.
    pub fn state_reveal(
        &mut self,
        session: usize,
    ) -> Result<(GroupElement, Scalar, Option<GroupElement>), SessionError> {
        let record = self.sessions.get_mut(session).ok_or(SessionError::NoSuchSession(session))?;
        if record.lifecycle != Lifecycle::Incomplete {
            return Err(SessionError::StateErased);
        }
        let leaf = record.ephemeral.as_ref().ok_or(SessionError::StateErased)?;
        record.exposed = true;
        Ok((leaf.big_x.clone(), leaf.x.clone(), leaf.static_peer_term.clone()))
    }

    /// Session-key query against a completed session; marks it exposed.
    pub fn session_key_query(&mut self, session: usize) -> Result<SessionKey, SessionError> {
        let record = self.sessions.get_mut(session).ok_or(SessionError::NoSuchSession(session))?;
        match (&record.lifecycle, &record.key) {
            (Lifecycle::Complete, Some(k)) => {
                record.exposed = true;
                Ok(k.clone())
            }
            _ => Err(SessionError::StateErased),
        }
    }

    /// Corruption: the party's long-term secret leaks and all its sessions
    /// count as exposed.
    pub fn corrupt(&mut self, id: &str) -> Result<Option<Scalar>, SessionError> {
        let party = self.parties.get_mut(id).ok_or_else(|| SessionError::UnknownParty(id.into()))?;
        party.corrupted = true;
        let secret = party.keypair.as_ref().map(|kp| kp.secret.clone());
        for s in &mut self.sessions {
            if s.tag.owner == id {
                s.exposed = true;
            }
        }
        Ok(secret)
    }

    /// Expiry erases the session key.
    pub fn expire(&mut self, session: usize) -> Result<(), SessionError> {
        let record = self.sessions.get_mut(session).ok_or(SessionError::NoSuchSession(session))?;
        record.lifecycle = Lifecycle::Expired;
        record.key = None;
        record.mac_key = None;
        record.erase_ephemeral();
        Ok(())
    }

    /// Index of the unique matching session, if one completed.
    pub fn matching_of(&self, session: usize) -> Option<usize> {
        let tag = &self.sessions.get(session)?.tag;
        self.sessions
            .iter()
            .find(|s| s.id != session && tag.matches(&s.tag))
            .map(|s| s.id)
    }

    /// One report line per session.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for s in &self.sessions {
            let matched = self
                .matching_of(s.id)
                .map(|m| format!("s{m}"))
                .unwrap_or_else(|| "-".into());
            let key = s
                .key
                .as_ref()
                .map(|k| hex::encode(&k.0[..8]))
                .unwrap_or_else(|| "-".into());
            let mac = match s.mac_outcome {
                Some(true) => "ok",
                Some(false) => "fail",
                None => "-",
            };
            let _ = writeln!(
                out,
                "s{} owner={} role={} peer={} X={} Y={} lifecycle={} matched={} exposed={} mac={} key={}",
                s.id,
                s.tag.owner,
                match s.role {
                    Role::Initiator => "initiator",
                    Role::Responder => "responder",
                },
                s.tag.peer,
                hex::encode(s.tag.own_dh.to_fixed_bytes(&self.params)),
                s.tag
                    .peer_dh
                    .as_ref()
                    .map(|y| hex::encode(y.to_fixed_bytes(&self.params)))
                    .unwrap_or_else(|| "-".into()),
                s.lifecycle.label(),
                matched,
                if s.exposed { "yes" } else { "no" },
                mac,
                key,
            );
        }
        out
    }
}

/// Outcome of one script run: the engine (for inspection) plus a transcript
/// of notable events.
pub struct ScriptOutcome {
    pub engine: Engine,
    pub events: Vec<String>,
}

impl ScriptOutcome {
    pub fn report(&self) -> String {
        self.engine.report()
    }
}

fn parse_hex_element(params: &GroupParams, s: &str) -> Result<GroupElement, String> {
    let cleaned = s.trim_start_matches("0x");
    let bytes = hex::decode(cleaned).map_err(|e| format!("bad hex: {e}"))?;
    params.element_from_bytes(&bytes).map_err(|e| format!("bad element: {e}"))
}

/// Runs a line-oriented adversary script. Directives:
///
/// ```text
/// <step>: register <id>
/// <step>: initiate <initiator> <responder>     # emits m<step>
/// <step>: deliver m<k>                         # may emit m<step> (the reply)
/// <step>: drop m<k>
/// <step>: modify m<k> element=<hex>            # rebinds as m<step>
/// <step>: inject dh1 from=<id> to=<id> x=<hex>
/// <step>: inject dh2 from=<id> to=<id> x=<hex> y=<hex>
/// <step>: reflect m<k>                         # answer a dh1 with its own X
/// <step>: state_reveal s<i>
/// <step>: key_query s<i>
/// <step>: corrupt <id>
/// <step>: expire s<i>
/// ```
///
/// Failed activations (invalid components, missing sessions, MAC mismatches)
/// are recorded as events rather than hard errors, the way a real peer
/// silently ignores bad traffic.
pub fn run_script(mut engine: Engine, script: &str) -> Result<ScriptOutcome, SessionError> {
    let mut messages: BTreeMap<usize, ScriptMsg> = BTreeMap::new();
    let mut events = Vec::new();

    for raw in script.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (step_str, rest) = line.split_once(':').ok_or_else(|| SessionError::MalformedDirective {
            step: 0,
            reason: format!("missing `<step>:` prefix in `{line}`"),
        })?;
        let step: usize = step_str.trim().parse().map_err(|_| SessionError::MalformedDirective {
            step: 0,
            reason: format!("bad step number `{step_str}`"),
        })?;
        let mut words = rest.split_whitespace();
        let directive = words.next().ok_or(SessionError::MalformedDirective {
            step,
            reason: "empty directive".into(),
        })?;
        let args: Vec<&str> = words.collect();
        let malformed = |reason: &str| SessionError::MalformedDirective { step, reason: reason.into() };

        let kv = |key: &str| -> Option<&str> {
            args.iter().find_map(|a| a.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        };
        let mref = |s: &str| -> Result<usize, SessionError> {
            s.strip_prefix('m')
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| malformed(&format!("expected m<step>, got `{s}`")))
        };
        let sref = |s: &str| -> Result<usize, SessionError> {
            s.strip_prefix('s')
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| malformed(&format!("expected s<index>, got `{s}`")))
        };

        match directive {
            "register" => {
                let id = args.first().ok_or_else(|| malformed("register needs an identity"))?;
                engine.register(id);
                events.push(format!("{step}: registered {id}"));
            }
            "initiate" => {
                let [a, b] = args[..] else { return Err(malformed("initiate needs two identities")) };
                let (sid, msg) = engine.initiate(a, b)?;
                messages.insert(step, msg);
                events.push(format!("{step}: s{sid} opened, m{step} = X from {a}"));
            }
            "deliver" => {
                let m = mref(args.first().ok_or_else(|| malformed("deliver needs a message"))?)?;
                let msg = messages.remove(&m).ok_or(SessionError::NoSuchMessage(m))?;
                match msg {
                    ScriptMsg::Dh1 { from, to, x } => match engine.respond(&to, &from, &x) {
                        Ok((sid, reply)) => {
                            messages.insert(step, reply);
                            events.push(format!("{step}: {to} responded, s{sid}, m{step} = Y"));
                        }
                        Err(e) => events.push(format!("{step}: respond ignored ({e})")),
                    },
                    ScriptMsg::Dh2 { from, to, x, y, tag } => {
                        match engine.complete(&to, &from, &x, &y, tag.as_deref()) {
                            Ok((sid, reply)) => {
                                if let Some(r) = reply {
                                    messages.insert(step, r);
                                }
                                events.push(format!("{step}: {to} completed s{sid}"));
                            }
                            Err(e) => events.push(format!("{step}: complete ignored ({e})")),
                        }
                    }
                    ScriptMsg::Confirm { from, to, x, y, tag } => {
                        match engine.confirm(&to, &from, &x, &y, &tag) {
                            Ok(sid) => events.push(format!("{step}: {to} confirmed s{sid}")),
                            Err(e) => events.push(format!("{step}: confirm ignored ({e})")),
                        }
                    }
                }
            }
            "drop" => {
                let m = mref(args.first().ok_or_else(|| malformed("drop needs a message"))?)?;
                messages.remove(&m).ok_or(SessionError::NoSuchMessage(m))?;
                events.push(format!("{step}: dropped m{m}"));
            }
            "modify" => {
                let m = mref(args.first().ok_or_else(|| malformed("modify needs a message"))?)?;
                let element = kv("element").ok_or_else(|| malformed("modify needs element=<hex>"))?;
                let new = parse_hex_element(&engine.params, element).map_err(|r| malformed(&r))?;
                let msg = messages.remove(&m).ok_or(SessionError::NoSuchMessage(m))?;
                let modified = match msg {
                    ScriptMsg::Dh1 { from, to, .. } => ScriptMsg::Dh1 { from, to, x: new },
                    ScriptMsg::Dh2 { from, to, x, tag, .. } => ScriptMsg::Dh2 { from, to, x, y: new, tag },
                    ScriptMsg::Confirm { .. } => return Err(malformed("cannot modify a confirm message")),
                };
                messages.insert(step, modified);
                events.push(format!("{step}: m{m} modified into m{step}"));
            }
            "inject" => {
                let kind = *args.first().ok_or_else(|| malformed("inject needs dh1|dh2"))?;
                let from = kv("from").ok_or_else(|| malformed("inject needs from=<id>"))?.to_string();
                let to = kv("to").ok_or_else(|| malformed("inject needs to=<id>"))?.to_string();
                let x = parse_hex_element(&engine.params, kv("x").ok_or_else(|| malformed("inject needs x=<hex>"))?)
                    .map_err(|r| malformed(&r))?;
                let msg = match kind {
                    "dh1" => ScriptMsg::Dh1 { from, to, x },
                    "dh2" => {
                        let y = parse_hex_element(
                            &engine.params,
                            kv("y").ok_or_else(|| malformed("inject dh2 needs y=<hex>"))?,
                        )
                        .map_err(|r| malformed(&r))?;
                        ScriptMsg::Dh2 { from, to, x, y, tag: None }
                    }
                    other => return Err(malformed(&format!("unknown inject kind `{other}`"))),
                };
                messages.insert(step, msg);
                events.push(format!("{step}: injected m{step}"));
            }
            "reflect" => {
                let m = mref(args.first().ok_or_else(|| malformed("reflect needs a message"))?)?;
                let msg = messages.remove(&m).ok_or(SessionError::NoSuchMessage(m))?;
                let ScriptMsg::Dh1 { from, to, x } = msg else {
                    return Err(malformed("reflect expects a dh1 message"));
                };
                // Echo the initiator's own X back as the response.
                let reflected = ScriptMsg::Dh2 { from: to, to: from, x: x.clone(), y: x, tag: None };
                messages.insert(step, reflected);
                events.push(format!("{step}: reflected m{m} into m{step}"));
            }
            "state_reveal" => {
                let s = sref(args.first().ok_or_else(|| malformed("state_reveal needs a session"))?)?;
                match engine.state_reveal(s) {
                    Ok((x, exp, term)) => events.push(format!(
                        "{step}: revealed s{s}: X={} x={:x} term={}",
                        hex::encode(x.to_fixed_bytes(&engine.params)),
                        exp.value(),
                        term.map(|t| hex::encode(t.to_fixed_bytes(&engine.params))).unwrap_or_else(|| "-".into()),
                    )),
                    Err(e) => events.push(format!("{step}: state_reveal failed ({e})")),
                }
            }
            "key_query" => {
                let s = sref(args.first().ok_or_else(|| malformed("key_query needs a session"))?)?;
                match engine.session_key_query(s) {
                    Ok(k) => events.push(format!("{step}: key of s{s} = {}", hex::encode(&k.0[..8]))),
                    Err(e) => events.push(format!("{step}: key_query failed ({e})")),
                }
            }
            "corrupt" => {
                let id = args.first().ok_or_else(|| malformed("corrupt needs an identity"))?;
                engine.corrupt(id)?;
                events.push(format!("{step}: corrupted {id}"));
            }
            "expire" => {
                let s = sref(args.first().ok_or_else(|| malformed("expire needs a session"))?)?;
                engine.expire(s)?;
                events.push(format!("{step}: expired s{s}"));
            }
            other => return Err(SessionError::MalformedDirective { step, reason: format!("unknown directive `{other}`") }),
        }
    }

    Ok(ScriptOutcome { engine, events })
}
