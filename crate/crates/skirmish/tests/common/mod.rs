#![allow(dead_code)]

use std::thread::{self, JoinHandle};
use std::time::Duration;

use skirmish::server::{MatchReport, Mode, Opponent, Server, ServerConfig, ServerError};
use skirmish::transport::{Connection, Endpoint, Stream};
use skirmish_core::codec::{decode_message, Command, EndInfo, Hello, Message, Setup};
use skirmish_core::engine::{GameConfig, Scenario, Spawn, World};
use skirmish_core::frame::Frame;
use skirmish_core::roster::TROOPER;
use skirmish_core::rules::Policy;
use skirmish_core::PROTO_VERSION;

pub type ServerHandle = JoinHandle<Result<Vec<MatchReport>, ServerError>>;

pub fn mirror(seed: u64, max_frames: u32) -> GameConfig {
    GameConfig {
        seed,
        max_frames,
        scenario: Scenario::RandomMirror { count: 5, type_id: TROOPER },
        ..GameConfig::default()
    }
}

/// Two troopers per side, in range of each other from the start.
pub fn duel(max_frames: u32) -> GameConfig {
    let s = |owner, x, y| Spawn { type_id: TROOPER, owner, x, y };
    GameConfig {
        seed: 7,
        max_frames,
        scenario: Scenario::Spawns(vec![s(0, 100, 100), s(0, 100, 140), s(1, 200, 100), s(1, 200, 150)]),
        ..GameConfig::default()
    }
}

pub fn tcp() -> Endpoint {
    Endpoint::Tcp("127.0.0.1:0".into())
}

pub fn serve(mode: Mode, game: GameConfig, opponent: Opponent, max_matches: Option<u64>) -> (Endpoint, ServerHandle) {
    let mut cfg = ServerConfig::new(mode, tcp(), game, opponent);
    cfg.max_matches = max_matches;
    cfg.handshake_timeout = Duration::from_secs(5);
    let server = Server::bind(cfg).expect("bind");
    let ep = server.endpoint().clone();
    (ep, server.spawn())
}

/// Everything one client saw in a match, with the raw STATE payloads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub setup: Setup,
    pub states: Vec<Vec<u8>>,
    pub frames: Vec<Frame>,
    pub commands: Vec<Vec<Command>>,
    pub end: EndInfo,
}

impl Transcript {
    pub fn messages(&self) -> Vec<Message> {
        let mut out = vec![Message::Setup(self.setup.clone())];
        for (f, c) in self.frames.iter().zip(&self.commands) {
            out.push(Message::State(f.clone()));
            out.push(Message::Commands(c.clone()));
        }
        out.push(Message::End(self.end));
        out
    }
}

/// Sends HELLO and reads SETUP without going through the client library.
pub fn hello(ep: &Endpoint) -> (Connection, Setup) {
    let mut conn = Connection::new(Stream::connect(ep).expect("connect"));
    conn.send(&Message::Hello(Hello { proto_version: PROTO_VERSION, client_name: "raw".into(), requested_role: 0 }))
        .unwrap();
    match conn.recv().unwrap() {
        Message::Setup(s) => (conn, s),
        other => panic!("expected SETUP, got {other:?}"),
    }
}

/// Plays the rest of a match on a raw connection.
pub fn play_on(conn: &mut Connection, setup: Setup, policy: Policy, delay: Duration) -> Transcript {
    let mut t = Transcript { setup, states: vec![], frames: vec![], commands: vec![], end: EndInfo {
        outcome: skirmish_core::MatchOutcome::Draw,
        final_frame: 0,
    } };
    loop {
        let payload = conn.recv_payload().expect("recv");
        match decode_message(&payload).expect("decode") {
            Message::State(f) => {
                if !delay.is_zero() {
                    thread::sleep(delay);
                }
                let cmds = policy.commands(&f);
                conn.send(&Message::Commands(cmds.clone())).expect("send");
                t.states.push(payload);
                t.frames.push(f);
                t.commands.push(cmds);
            }
            Message::End(e) => {
                t.end = e;
                return t;
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

pub fn play_raw(ep: &Endpoint, policy: Policy) -> Transcript {
    let (mut conn, setup) = hello(ep);
    play_on(&mut conn, setup, policy, Duration::ZERO)
}

/// Runs a whole match in process, no sockets: player 0's frames, one per
/// lockstep step, and the final tick.
pub fn simulate(game: &GameConfig, p0: Policy, p1: Policy) -> (Vec<Frame>, World) {
    let mut world = World::new(game).unwrap();
    let mut frames = Vec::new();
    while world.result.is_none() {
        let f0 = world.frame_for(0).unwrap();
        let f1 = world.frame_for(1).unwrap();
        world.apply_commands(0, &p0.commands(&f0)).unwrap();
        world.apply_commands(1, &p1.commands(&f1)).unwrap();
        frames.push(f0);
        world.step(u32::from(game.frame_skip)).unwrap();
    }
    (frames, world)
}
