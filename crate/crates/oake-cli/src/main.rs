//! Workbench frontend: handshake demos (in-process or over a local socket),
//! attack and fairness reports, efficiency benchmarks, test-vector emit and
//! check, and parameter generation. Every run is reproducible from --seed.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use oake::attacks::{
    self, eda_attempt_on_oake, eda_run, fairness_scan, naive_jpok_malleate, naive_jpok_value,
    EdaParams, FairnessRelation, JpokVariant, SessionSource,
};
use oake::group::{GroupParams, OpCounter};
use oake::kex::{
    compute_shared_secret, derive_cde, derive_keys, CofactorMode, KeyPair, PrecomputedLeaf, Role,
    SchemeConfig, SchemeId,
};
use oake::sessions::{Engine, Lifecycle, ScriptMsg};
use oake::vectors;
use oake::wire::{self, WireMsg};

#[derive(Parser)]
#[command(name = "oake", about = "Key-exchange workbench for the (s)OAKE and (H)MQV protocol families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Oake,
    Soake,
    Roake,
    Rsoake,
    Ooake,
    Hmqv,
    Mqv,
    Ohmqv,
}

impl SchemeArg {
    fn id(self) -> SchemeId {
        match self {
            SchemeArg::Oake => SchemeId::Oake,
            SchemeArg::Soake => SchemeId::SOake,
            SchemeArg::Roake => SchemeId::ROake,
            SchemeArg::Rsoake => SchemeId::RsOake,
            SchemeArg::Ooake => SchemeId::OOake,
            SchemeArg::Hmqv => SchemeId::Hmqv,
            SchemeArg::Mqv => SchemeId::Mqv,
            SchemeArg::Ohmqv => SchemeId::OHmqv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TModeArg {
    Explicit,
    Embedded1,
    Embedded2,
}

impl TModeArg {
    fn mode(self) -> CofactorMode {
        match self {
            TModeArg::Explicit => CofactorMode::Explicit,
            TModeArg::Embedded1 => CofactorMode::EmbeddedCase1,
            TModeArg::Embedded2 => CofactorMode::EmbeddedCase2,
        }
    }
}

#[derive(Args)]
struct GroupArgs {
    /// Toy group p=23, q=11 (oracle-checkable).
    #[arg(long, conflicts_with_all = ["desk", "params"])]
    toy: bool,
    /// Desk-scale group (2048-bit modulus, 256-bit subgroup).
    #[arg(long, conflicts_with = "params")]
    desk: bool,
    /// Load parameters from a p=/q=/g=/t= file.
    #[arg(long)]
    params: Option<PathBuf>,
}

impl GroupArgs {
    fn load(&self) -> Result<GroupParams, String> {
        if let Some(path) = &self.params {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            return GroupParams::parse(&text).map_err(|e| e.to_string());
        }
        if self.desk {
            return Ok(GroupParams::desk());
        }
        Ok(GroupParams::toy())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a two-party handshake and print both sides' values.
    Handshake {
        #[arg(long, value_enum, default_value = "soake")]
        scheme: SchemeArg,
        #[arg(long = "t-mode", value_enum, default_value = "explicit")]
        t_mode: TModeArg,
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Three-round mode with key confirmation MACs.
        #[arg(long)]
        confirmed: bool,
        /// Drop public keys from the exponent-hash inputs.
        #[arg(long = "pk-free")]
        pk_free: bool,
        /// Replace the responder's component in flight; the run must fail.
        #[arg(long)]
        tamper: bool,
        /// Run the exchange over a localhost TCP socket with the wire format.
        #[arg(long)]
        socket: bool,
    },
    /// Attack demonstrations.
    Attack {
        #[command(subcommand)]
        what: AttackCommand,
    },
    /// Per-scheme operation-count table (offline vs online vs total).
    Bench {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        runs: u32,
    },
    /// Emit or check test-vector files.
    Vectors {
        #[command(subcommand)]
        action: VectorsCommand,
    },
    /// Group-parameter utilities.
    Params {
        #[command(subcommand)]
        action: ParamsCommand,
    },
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Exponent-dependent attack against an (H)MQV responder, or the
    /// exhaustive negative transplant against (s)OAKE with --exhaust.
    Eda {
        #[arg(long, value_enum, default_value = "hmqv")]
        scheme: SchemeArg,
        /// The attack parameter t; "dinv" uses t = d^(-1).
        #[arg(long, default_value = "0")]
        t: String,
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "t-mode", value_enum, default_value = "explicit")]
        t_mode: TModeArg,
        /// Exhaustive toy-group sweep of the forged-key family (OAKE/sOAKE).
        #[arg(long)]
        exhaust: bool,
    },
    /// Naive-JPOK malleation demonstrations.
    Jpok {
        #[arg(long, value_enum, default_value = "sum")]
        variant: JpokArg,
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fairness-relation hit-rate scan.
    Fairness {
        #[arg(long, value_enum, default_value = "oake")]
        scheme: SchemeArg,
        /// Relation 1: V1*V2 = 1_G; relation 2: V1*V2 = Y*B^e.
        #[arg(long, default_value_t = 1)]
        relation: u8,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        group: GroupArgs,
        /// Sample EDA sessions with this t instead of honest ones.
        #[arg(long)]
        eda_t: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum JpokArg {
    Sum,
    Masked,
}

#[derive(Subcommand)]
enum VectorsCommand {
    /// Write params.txt, hash.vec, kex.vec and sig.vec into a directory.
    Emit {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-verify a directory of vector files.
    Check {
        #[arg(long = "in")]
        dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum ParamsCommand {
    /// Print a built-in or loaded parameter set in the file format.
    Show {
        #[command(flatten)]
        group: GroupArgs,
    },
    /// Generate fresh parameters (q of qbits inside p of pbits).
    Gen {
        #[arg(long, default_value_t = 64)]
        qbits: u64,
        #[arg(long, default_value_t = 512)]
        pbits: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Handshake { scheme, t_mode, group, seed, confirmed, pk_free, tamper, socket } => {
            let params = group.load()?;
            let cfg = SchemeConfig::new(scheme.id(), t_mode.mode(), &params).pk_free(pk_free);
            if socket {
                handshake_socket(params, cfg, confirmed, seed, tamper)
            } else {
                handshake_local(params, cfg, confirmed, seed, tamper)
            }
        }
        Command::Attack { what } => attack(what),
        Command::Bench { seed, runs } => {
            bench(seed, runs);
            Ok(ExitCode::SUCCESS)
        }
        Command::Vectors { action } => vectors_cmd(action),
        Command::Params { action } => params_cmd(action),
    }
}

fn print_session_line(engine: &Engine, label: &str, id: usize) {
    let s = engine.session(id).expect("session exists");
    let key = s.session_key().map(|k| hex::encode(&k.0)).unwrap_or_else(|| "-".into());
    println!(
        "{label}: tag=({}, {}, X={}, Y={}) lifecycle={:?} K={key}",
        s.tag.owner,
        s.tag.peer,
        hex::encode(s.tag.own_dh.to_fixed_bytes(&engine.params)),
        s.tag
            .peer_dh
            .as_ref()
            .map(|y| hex::encode(y.to_fixed_bytes(&engine.params)))
            .unwrap_or_else(|| "-".into()),
        s.lifecycle,
    );
}

fn handshake_local(
    params: GroupParams,
    cfg: SchemeConfig,
    confirmed: bool,
    seed: u64,
    tamper: bool,
) -> Result<ExitCode, String> {
    let scheme = cfg.scheme;
    println!(
        "handshake scheme={} t_mode={} confirmed={confirmed} seed={seed} |q|={}",
        scheme.label(),
        cfg.t_mode.label(),
        params.bitlen_q()
    );
    if scheme.is_one_round() {
        return one_round_exchange(&params, &cfg, seed);
    }
    let mut engine = Engine::new(params.clone(), cfg, confirmed, seed);
    engine.register("alice");
    engine.register("bob");

    let (init_sid, m1) = engine.initiate("alice", "bob").map_err(|e| e.to_string())?;
    let ScriptMsg::Dh1 { from, to, x } = m1 else { unreachable!() };
    let (resp_sid, m2) = engine.respond(&to, &from, &x).map_err(|e| e.to_string())?;
    let ScriptMsg::Dh2 { x, mut y, tag, .. } = m2 else { unreachable!() };
    if tamper {
        // Adversary swaps the responder's component for a fresh one.
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x7461_6d70);
        y = params.pow_fast(&params.generator(), params.random_nonzero_scalar(&mut rng).value());
        println!("tampering: substituted Y in flight");
    }
    let completion = engine.complete("alice", "bob", &x, &y, tag.as_deref());
    match completion {
        Ok((_, reply)) => {
            if let Some(ScriptMsg::Confirm { from, to, x, y, tag }) = reply {
                match engine.confirm(&to, &from, &x, &y, &tag) {
                    Ok(_) => println!("confirmation MACs verified on both sides"),
                    Err(e) => println!("responder ignored the confirmation: {e}"),
                }
            }
        }
        Err(e) => println!("initiator rejected the exchange: {e}"),
    }

    print_session_line(&engine, "initiator", init_sid);
    print_session_line(&engine, "responder", resp_sid);

    let complete = |id: usize| {
        engine
            .session(id)
            .ok()
            .filter(|s| s.lifecycle == Lifecycle::Complete)
            .and_then(|s| s.session_key().cloned())
    };
    let (ka, kb) = (complete(init_sid), complete(resp_sid));
    let agreed = matches!((&ka, &kb), (Some(a), Some(b)) if a == b);
    if tamper {
        println!("note: tampering was injected; a failed exchange is the expected outcome");
    }
    if agreed {
        println!("result: keys agree");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("result: protocol failure");
        Ok(ExitCode::from(1))
    }
}

fn one_round_exchange(params: &GroupParams, cfg: &SchemeConfig, seed: u64) -> Result<ExitCode, String> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let alice = KeyPair::generate(params, "alice", &mut rng);
    let bob = KeyPair::generate(params, "bob", &mut rng);
    let leaf = PrecomputedLeaf::fresh(params, &mut rng);
    let exps = derive_cde(
        params, cfg, b"", b"", "alice", &alice.public, "bob", &bob.public, &leaf.big_x, None,
    )
    .map_err(|e| e.to_string())?;
    let mut ops = OpCounter::new();
    let sa = compute_shared_secret(params, cfg, Role::Initiator, &alice, Some(&leaf), &bob.public, None, &exps, &mut ops)
        .map_err(|e| e.to_string())?;
    let sb = compute_shared_secret(params, cfg, Role::Responder, &bob, None, &alice.public, Some(&leaf.big_x), &exps, &mut ops)
        .map_err(|e| e.to_string())?;
    println!("initiator sigma={}", hex::encode(sa.sigma.to_fixed_bytes(params)));
    println!("responder sigma={}", hex::encode(sb.sigma.to_fixed_bytes(params)));
    if sa.sigma != sb.sigma {
        println!("result: protocol failure");
        return Ok(ExitCode::from(1));
    }
    let (k, _) = derive_keys(params, cfg, &sa, false).map_err(|e| e.to_string())?;
    println!("K={}", hex::encode(&k.0));
    println!("result: keys agree (one-round; no responder DH-component)");
    Ok(ExitCode::SUCCESS)
}

fn read_frame(stream: &mut TcpStream) -> std::io::Result<Vec<u8>> {
    let mut len = [0u8; 4];
    stream.read_exact(&mut len)?;
    let mut buf = vec![0u8; u32::from_be_bytes(len) as usize];
    stream.read_exact(&mut buf)?;
    Ok(buf)
}

fn write_frame(stream: &mut TcpStream, bytes: &[u8]) -> std::io::Result<()> {
    stream.write_all(&(bytes.len() as u32).to_be_bytes())?;
    stream.write_all(bytes)
}

/// Two sequential-turn endpoints over a localhost socket, speaking the wire
/// format; the responder runs on a helper thread.
fn handshake_socket(
    params: GroupParams,
    cfg: SchemeConfig,
    confirmed: bool,
    seed: u64,
    tamper: bool,
) -> Result<ExitCode, String> {
    if cfg.scheme.is_one_round() {
        return Err("socket mode drives the two-round schemes".into());
    }
    let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?;
    // The ephemeral port goes to stderr so stdout stays byte-reproducible
    // under a fixed seed.
    eprintln!("socket endpoint: {addr}");
    println!(
        "handshake scheme={} t_mode={} confirmed={confirmed} seed={seed} socket=local",
        cfg.scheme.label(),
        cfg.t_mode.label()
    );

    let mut engine = Engine::new(params.clone(), cfg.clone(), confirmed, seed);
    let alice = engine.register("alice");
    let bob = engine.register("bob");
    let scheme = cfg.scheme;

    // Responder endpoint.
    let responder_params = params.clone();
    let responder = std::thread::spawn(move || -> Result<Option<Vec<u8>>, String> {
        let (mut stream, _) = listener.accept().map_err(|e| e.to_string())?;
        let mut resp_engine = Engine::new(responder_params.clone(), cfg.clone(), confirmed, seed ^ 1);
        resp_engine.register_public_key("alice", alice.public.clone());
        // The responder owns bob's secret; re-register it keypair-complete.
        resp_engine.adopt_keypair(bob.clone());

        let bytes = read_frame(&mut stream).map_err(|e| e.to_string())?;
        let msg = wire::decode(&responder_params, &bytes).map_err(|e| e.to_string())?;
        let WireMsg::Init { scheme: s, sender, x } = msg else {
            return Err("expected init message".into());
        };
        if s != scheme {
            return Err("scheme mismatch on the wire".into());
        }
        let (sid, reply) = resp_engine.respond("bob", &sender, &x).map_err(|e| e.to_string())?;
        let ScriptMsg::Dh2 { x, y, tag, .. } = reply else { unreachable!() };
        let wire_reply = WireMsg::Respond { scheme, sender: "bob".into(), x, y, mac: tag };
        write_frame(&mut stream, &wire::encode(&responder_params, &wire_reply)).map_err(|e| e.to_string())?;

        if confirmed {
            let bytes = read_frame(&mut stream).map_err(|e| e.to_string())?;
            let msg = wire::decode(&responder_params, &bytes).map_err(|e| e.to_string())?;
            let WireMsg::Confirm { sender, x, y, mac, .. } = msg else {
                return Err("expected confirm message".into());
            };
            resp_engine.confirm("bob", &sender, &x, &y, &mac).map_err(|e| e.to_string())?;
        }
        Ok(resp_engine.session(sid).ok().and_then(|s| s.session_key().map(|k| k.0.clone())))
    });

    // Initiator endpoint.
    let mut stream = TcpStream::connect(addr).map_err(|e| e.to_string())?;
    let (init_sid, m1) = engine.initiate("alice", "bob").map_err(|e| e.to_string())?;
    let ScriptMsg::Dh1 { x, .. } = m1 else { unreachable!() };
    let init_msg = WireMsg::Init { scheme, sender: "alice".into(), x: x.clone() };
    write_frame(&mut stream, &wire::encode(&params, &init_msg)).map_err(|e| e.to_string())?;

    let bytes = read_frame(&mut stream).map_err(|e| e.to_string())?;
    let msg = wire::decode(&params, &bytes).map_err(|e| e.to_string())?;
    let WireMsg::Respond { x: xe, mut y, mac, .. } = msg else {
        return Err("expected respond message".into());
    };
    if tamper {
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x7461_6d70);
        y = params.pow_fast(&params.generator(), params.random_nonzero_scalar(&mut rng).value());
        println!("tampering: substituted Y in flight");
    }
    let completion = engine.complete("alice", "bob", &xe, &y, mac.as_deref());
    if let Ok((_, Some(ScriptMsg::Confirm { x, y, tag, .. }))) = &completion {
        let confirm = WireMsg::Confirm { scheme, sender: "alice".into(), x: x.clone(), y: y.clone(), mac: tag.clone() };
        write_frame(&mut stream, &wire::encode(&params, &confirm)).map_err(|e| e.to_string())?;
    }
    drop(stream);
    let responder_key = responder.join().map_err(|_| "responder thread panicked".to_string())?;

    print_session_line(&engine, "initiator", init_sid);
    let ka = engine.session(init_sid).ok().and_then(|s| s.session_key().map(|k| k.0.clone()));
    let kb = match responder_key {
        Ok(k) => k,
        Err(e) => {
            println!("responder endpoint: {e}");
            None
        }
    };
    println!(
        "responder: K={}",
        kb.as_ref().map(|k| hex::encode(k)).unwrap_or_else(|| "-".into())
    );
    let agreed = matches!((&ka, &kb), (Some(a), Some(b)) if a == b);
    if agreed == !tamper {
        println!("result: {}", if agreed { "keys agree" } else { "exchange correctly failed" });
        Ok(ExitCode::SUCCESS)
    } else {
        println!("result: protocol failure");
        Ok(ExitCode::from(1))
    }
}

fn attack(what: AttackCommand) -> Result<ExitCode, String> {
    match what {
        AttackCommand::Eda { scheme, t, group, seed, t_mode, exhaust } => {
            let params = group.load()?;
            if exhaust {
                let id = scheme.id();
                if !matches!(id, SchemeId::Oake | SchemeId::SOake) {
                    return Err("--exhaust sweeps OAKE or sOAKE".into());
                }
                let scan = eda_attempt_on_oake(&params, id, seed).map_err(|e| e.to_string())?;
                println!(
                    "eda transplant on {}: {} forged keys tried, {} universal predictions, {} forced identity relations",
                    id.label(), scan.candidates_tried, scan.universal_predictions, scan.forced_identity_relations
                );
                println!(
                    "result: {}",
                    if scan.universal_predictions == 0 { "no public prediction found" } else { "ATTACK FOUND" }
                );
                return Ok(ExitCode::SUCCESS);
            }
            let id = scheme.id();
            let cfg = SchemeConfig::new(id, t_mode.mode(), &params);
            let attack_t = if t == "dinv" {
                // Replay the seed's public draws to compute d, then invert.
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                let responder = KeyPair::generate(&params, "bob", &mut rng);
                let challenge = PrecomputedLeaf::fresh(&params, &mut rng);
                let d = attacks::eda_exponent(&params, &cfg, &challenge.big_x, "mallory", &responder.identity);
                params.scalar_inv(&d).ok_or("d not invertible")?
            } else {
                let tv: u64 = t.parse().map_err(|_| format!("bad t value `{t}`"))?;
                params.scalar_from_u64(tv)
            };
            let out = eda_run(&params, &cfg, &EdaParams { attack_t, target: id }, seed).map_err(|e| e.to_string())?;
            println!("eda target={} t={t} seed={seed}", id.label());
            println!(
                "sigma_honest={}",
                out.honest_sigma
                    .as_ref()
                    .map(|s| hex::encode(s.to_fixed_bytes(&params)))
                    .unwrap_or_else(|| "aborted".into())
            );
            println!("sigma_predicted={}", hex::encode(out.predicted_sigma.to_fixed_bytes(&params)));
            println!(
                "match={} responder_aborted={} secret_exponentiations={} public_exponentiations={}",
                out.prediction_matches, out.responder_aborted, out.secret_exponentiations, out.public_exponentiations
            );
            Ok(ExitCode::SUCCESS)
        }
        AttackCommand::Jpok { variant, group, seed } => {
            let params = group.load()?;
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let b = params.random_nonzero_scalar(&mut rng);
            let x = params.random_nonzero_scalar(&mut rng);
            let b_pk = params.pow_fast(&params.generator(), b.value());
            let big_x = params.pow_fast(&params.generator(), x.value());
            let var = match variant {
                JpokArg::Sum => JpokVariant::Sum,
                JpokArg::Masked => JpokVariant::Masked,
            };
            let mal = naive_jpok_malleate(&params, var, &b_pk, &big_x, "alice", "bob");
            let value = naive_jpok_value(&params, var, &b_pk, &mal.adversarial_y, &x, &big_x, "alice", "bob");
            println!("jpok variant={variant:?} seed={seed}", variant = match var {
                JpokVariant::Sum => "sum",
                JpokVariant::Masked => "masked",
            });
            println!("adversarial_Y={}", hex::encode(mal.adversarial_y.to_fixed_bytes(&params)));
            println!("verifier_value={}", hex::encode(value.to_fixed_bytes(&params)));
            println!("forced_identity={}", value.is_identity());
            Ok(ExitCode::SUCCESS)
        }
        AttackCommand::Fairness { scheme, relation, trials, seed, group, eda_t } => {
            let params = group.load()?;
            let rel = match relation {
                1 => FairnessRelation::ProductIsIdentity,
                2 => FairnessRelation::ProductIsYBe,
                other => return Err(format!("unknown relation {other}")),
            };
            let source = match eda_t {
                Some(t) => SessionSource::Eda { attack_t: t },
                None => SessionSource::Honest,
            };
            let report = fairness_scan(&params, scheme.id(), rel, &source, trials, seed).map_err(|e| e.to_string())?;
            println!(
                "fairness scheme={} relation={relation} trials={} hits={} rate={:.4}",
                report.scheme.label(),
                report.trials,
                report.hits,
                report.hits as f64 / report.trials.max(1) as f64
            );
            for (i, (v1, v2)) in report.samples.iter().enumerate() {
                println!(
                    "sample{} V1={} V2={}",
                    i,
                    hex::encode(v1.to_fixed_bytes(&params)),
                    hex::encode(v2.to_fixed_bytes(&params))
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn bench(seed: u64, runs: u32) {
    let params = GroupParams::bench();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    println!("bench group: |p|={} |q|={} cofactor=2, {} runs per scheme", 257, params.bitlen_q(), runs);
    println!("{:<8} {:>9} {:>9} {:>9}", "scheme", "offline", "online", "total");
    for scheme in SchemeId::ALL {
        if scheme.is_one_round() {
            continue;
        }
        let mode = if scheme.is_oake_two_round() { CofactorMode::EmbeddedCase1 } else { CofactorMode::EmbeddedCase2 };
        let cfg = SchemeConfig::new(scheme, mode, &params);
        let joint_cfg = SchemeConfig::new(scheme, CofactorMode::EmbeddedCase2, &params);
        let mut offline = 0.0;
        let mut online = 0.0;
        let mut total = 0.0;
        for _ in 0..runs {
            let alice = KeyPair::generate(&params, "alice", &mut rng);
            let bob = KeyPair::generate(&params, "bob", &mut rng);
            let peer = PrecomputedLeaf::fresh(&params, &mut rng);

            let mut off_ops = OpCounter::new();
            let x = params.random_nonzero_scalar(&mut rng);
            let mut leaf = PrecomputedLeaf {
                big_x: params.exp(&params.generator(), &x, &mut off_ops),
                x,
                static_peer_term: None,
            };
            leaf.attach_peer_term(&params, &cfg, Role::Initiator, &alice, "bob", &bob.public, b"", b"", &mut off_ops);
            offline += off_ops.equivalents(&params);

            let exps = derive_cde(&params, &cfg, b"", b"", "alice", &alice.public, "bob", &bob.public,
                &leaf.big_x, Some(&peer.big_x)).unwrap();
            let mut on_ops = OpCounter::new();
            compute_shared_secret(&params, &cfg, Role::Initiator, &alice, Some(&leaf), &bob.public,
                Some(&peer.big_x), &exps, &mut on_ops).unwrap();
            online += on_ops.equivalents(&params);

            let bare = PrecomputedLeaf { static_peer_term: None, ..leaf };
            let mut tot_ops = OpCounter::new();
            compute_shared_secret(&params, &joint_cfg, Role::Initiator, &alice, Some(&bare), &bob.public,
                Some(&peer.big_x), &exps, &mut tot_ops).unwrap();
            total += tot_ops.equivalents(&params);
        }
        let n = runs as f64;
        println!(
            "{:<8} {:>9.3} {:>9.3} {:>9.3}",
            scheme.label(),
            offline / n,
            online / n,
            total / n
        );
    }
    println!("units: exponentiation-equivalents (offline = X and static-peer term; total = joint computation, no precomputation)");
}

fn vectors_cmd(action: VectorsCommand) -> Result<ExitCode, String> {
    match action {
        VectorsCommand::Emit { out, group, seed } => {
            let params = group.load()?;
            std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
            let write = |name: &str, content: String| -> Result<(), String> {
                std::fs::write(out.join(name), content).map_err(|e| format!("{name}: {e}"))
            };
            write("params.txt", params.to_file_string())?;
            write("hash.vec", vectors::emit_hash_vectors(&params, 16, seed))?;
            write("kex.vec", vectors::emit_kex_vectors(&params, 2, seed.wrapping_add(1)))?;
            write("sig.vec", vectors::emit_sig_vectors(&params, 8, seed.wrapping_add(2)))?;
            println!("wrote params.txt, hash.vec, kex.vec, sig.vec to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        VectorsCommand::Check { dir } => {
            let read = |name: &str| -> Result<String, String> {
                std::fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"))
            };
            let params = GroupParams::parse(&read("params.txt")?).map_err(|e| e.to_string())?;
            let mut failures = 0;
            for (name, outcome) in [
                ("hash.vec", vectors::check_hash_vectors(&params, &read("hash.vec")?).map_err(|e| e.to_string())),
                ("kex.vec", vectors::check_kex_vectors(&params, &read("kex.vec")?).map_err(|e| e.to_string())),
                ("sig.vec", vectors::check_sig_vectors(&params, &read("sig.vec")?).map_err(|e| e.to_string())),
            ] {
                match outcome {
                    Ok(n) => println!("{name}: {n} vectors verified"),
                    Err(e) => {
                        println!("{name}: FAILED ({e})");
                        failures += 1;
                    }
                }
            }
            Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn params_cmd(action: ParamsCommand) -> Result<ExitCode, String> {
    match action {
        ParamsCommand::Show { group } => {
            let params = group.load()?;
            print!("{}", params.to_file_string());
            Ok(ExitCode::SUCCESS)
        }
        ParamsCommand::Gen { qbits, pbits, seed, out } => {
            let params = GroupParams::generate(qbits, pbits, seed).map_err(|e| e.to_string())?;
            let text = params.to_file_string();
            match out {
                Some(path) => {
                    std::fs::write(&path, text).map_err(|e| e.to_string())?;
                    println!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
