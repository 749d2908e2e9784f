//! Match server: handshake, the lockstep loop, and the two hosting modes.
//!
//! In *controlled* mode every match gets its own connection(s); the server
//! closes them after END and the client reconnects for the next match.
//! Matches run on their own threads, so one listener hosts many at once.
//!
//! In *attached* mode a single client keeps one connection across matches:
//! after END it sends RESTART for another match or QUIT to stop the server.
//! Further connection attempts while a client is attached are refused.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use log::{info, warn};
use skirmish_core::codec::{Command, EndInfo, MatchOutcome, Message, Setup};
use skirmish_core::engine::{ConfigError, GameConfig, MatchResult, World};
use skirmish_core::rules::Policy;
use skirmish_core::{PlayerId, PROTO_VERSION};
use thiserror::Error;

use crate::transport::{Connection, Endpoint, Listener, Stream, WireError};

/// ERROR codes sent to clients.
pub mod error_code {
    pub const VERSION_MISMATCH: u16 = 1;
    pub const MALFORMED: u16 = 2;
    pub const ILLEGAL_IN_MODE: u16 = 3;
    pub const INTERNAL: u16 = 4;
}

pub const DEFAULT_HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Controlled,
    Attached,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Opponent {
    BuiltinIdle,
    BuiltinAttackClosest,
    /// A second client connection plays player 1.
    Client,
}

impl Opponent {
    fn builtin(self) -> Option<Policy> {
        match self {
            Opponent::BuiltinIdle => Some(Policy::Idle),
            Opponent::BuiltinAttackClosest => Some(Policy::AttackClosest),
            Opponent::Client => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub mode: Mode,
    pub endpoint: Endpoint,
    pub game: GameConfig,
    pub opponent: Opponent,
    pub handshake_timeout: Duration,
    /// Stop after this many matches. `None` serves forever (controlled) or
    /// until QUIT (attached).
    pub max_matches: Option<u64>,
}

impl ServerConfig {
    pub fn new(mode: Mode, endpoint: Endpoint, game: GameConfig, opponent: Opponent) -> Self {
        ServerConfig {
            mode,
            endpoint,
            game,
            opponent,
            handshake_timeout: DEFAULT_HANDSHAKE_TIMEOUT,
            max_matches: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot listen on {endpoint}: {source}")]
    Bind { endpoint: Endpoint, source: std::io::Error },
    #[error("invalid game config: {0}")]
    Config(#[from] ConfigError),
    #[error("attached mode serves a single client; opponent=client is not available")]
    AttachedTwoClients,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum HandshakeError {
    #[error("client speaks protocol version {0}")]
    Version(u16),
    #[error("expected HELLO, got {0}")]
    Unexpected(&'static str),
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// One client's side of a match.
#[derive(Debug)]
pub struct Session {
    pub conn: Connection,
    pub connection_id: u64,
    pub player_id: PlayerId,
    pub version: u16,
    pub frame_skip: u8,
    pub states_sent: u64,
    pub commands_received: u64,
    /// Largest observed `states_sent - commands_received`.
    pub max_outstanding: u64,
}

impl Session {
    fn send_state(&mut self, world: &World) -> Result<(), WireError> {
        let frame = world.frame_for(self.player_id).expect("session player is 0 or 1");
        self.conn.send(&Message::State(frame))?;
        self.states_sent += 1;
        self.max_outstanding = self.max_outstanding.max(self.states_sent - self.commands_received);
        Ok(())
    }
}

/// Counters reported per client at the end of a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LockstepStats {
    pub player_id: PlayerId,
    pub connection_id: u64,
    pub states_sent: u64,
    pub commands_received: u64,
    pub max_outstanding: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchReport {
    pub match_index: u64,
    pub seed: u64,
    pub result: MatchResult,
    pub final_frame: u32,
    /// Why the match was cut short, if it was.
    pub aborted: Option<String>,
    pub clients: Vec<LockstepStats>,
}

pub fn setup_for(game: &GameConfig, player_id: PlayerId, seed: u64) -> Setup {
    Setup {
        player_id,
        map_w: game.map_w,
        map_h: game.map_h,
        fog: game.fog,
        frame_skip: game.frame_skip,
        seed,
        roster: game.roster.clone(),
    }
}

fn send_error(conn: &mut Connection, code: u16, text: &str) {
    let _ = conn.send(&Message::Error { code, text: text.to_string() });
}

/// Reads HELLO and answers with SETUP. On failure the client has been sent
/// an ERROR (where one applies) and the connection closed.
pub fn handshake(
    mut conn: Connection,
    connection_id: u64,
    setup: Setup,
    timeout: Duration,
) -> Result<Session, HandshakeError> {
    let outcome = (|| {
        conn.set_read_timeout(Some(timeout)).map_err(WireError::Io)?;
        let hello = match conn.recv() {
            Ok(Message::Hello(h)) => h,
            Ok(other) => {
                send_error(&mut conn, error_code::MALFORMED, "expected HELLO");
                return Err(HandshakeError::Unexpected(other.name()));
            }
            Err(e @ WireError::Decode(_)) => {
                send_error(&mut conn, error_code::MALFORMED, &e.to_string());
                return Err(e.into());
            }
            Err(e) => return Err(e.into()),
        };
        if hello.proto_version != PROTO_VERSION {
            send_error(&mut conn, error_code::VERSION_MISMATCH, "unsupported protocol version");
            return Err(HandshakeError::Version(hello.proto_version));
        }
        conn.set_read_timeout(None).map_err(WireError::Io)?;
        conn.send(&Message::Setup(setup.clone()))?;
        Ok(hello.proto_version)
    })();
    match outcome {
        Ok(version) => Ok(Session {
            conn,
            connection_id,
            player_id: setup.player_id,
            version,
            frame_skip: setup.frame_skip,
            states_sent: 0,
            commands_received: 0,
            max_outstanding: 0,
        }),
        Err(e) => {
            conn.close();
            Err(e)
        }
    }
}

/// How a match loop finished.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchEnd {
    pub result: MatchResult,
    pub final_frame: u32,
    pub aborted: Option<String>,
    /// Sessions that can no longer be used (disconnected or sent garbage).
    pub dead: Vec<PlayerId>,
}

fn outcome_for(result: MatchResult, player: PlayerId) -> MatchOutcome {
    match result {
        MatchResult::Draw => MatchOutcome::Draw,
        MatchResult::Winner(p) if p == player => MatchOutcome::Win,
        MatchResult::Winner(_) => MatchOutcome::Loss,
    }
}

/// The lockstep loop: send every client its STATE, wait for exactly one
/// COMMANDS from each, apply them, advance `frame_skip` ticks; repeat until
/// the match ends, then send each client its END.
///
/// A client that disconnects or misbehaves forfeits: the match is aborted
/// and scored as a loss for that client.
pub fn run_match(sessions: &mut [Session], world: &mut World, builtin: Option<Policy>, mode: Mode, frame_skip: u8) -> MatchEnd {
    let forfeit = |world: &World, sessions: &mut [Session], who: PlayerId, why: String| {
        let winner = 1 - who;
        let result = MatchResult::Winner(winner);
        for s in sessions.iter_mut().filter(|s| s.player_id != who) {
            let end = EndInfo { outcome: outcome_for(result, s.player_id), final_frame: world.tick };
            let _ = s.conn.send(&Message::End(end));
        }
        if let Some(s) = sessions.iter().find(|s| s.player_id == who) {
            s.conn.close();
        }
        MatchEnd { result, final_frame: world.tick, aborted: Some(why), dead: vec![who] }
    };

    loop {
        for i in 0..sessions.len() {
            if let Err(e) = sessions[i].send_state(world) {
                let who = sessions[i].player_id;
                return forfeit(world, sessions, who, format!("player {who}: {e}"));
            }
        }
        let mut orders: [Vec<Command>; 2] = [Vec::new(), Vec::new()];
        for i in 0..sessions.len() {
            let who = sessions[i].player_id;
            let s = &mut sessions[i];
            match s.conn.recv() {
                Ok(Message::Commands(cmds)) => {
                    s.commands_received += 1;
                    orders[who as usize] = cmds;
                }
                Ok(Message::Restart) => {
                    let text = match mode {
                        Mode::Controlled => "restart not supported in controlled mode",
                        Mode::Attached => "restart is only accepted after END",
                    };
                    send_error(&mut s.conn, error_code::ILLEGAL_IN_MODE, text);
                    return forfeit(world, sessions, who, format!("player {who}: RESTART mid-match"));
                }
                Ok(Message::Quit) => {
                    return forfeit(world, sessions, who, format!("player {who}: quit mid-match"));
                }
                Ok(other) => {
                    send_error(&mut s.conn, error_code::MALFORMED, "expected COMMANDS");
                    return forfeit(world, sessions, who, format!("player {who}: unexpected {}", other.name()));
                }
                Err(e @ WireError::Decode(_)) => {
                    send_error(&mut s.conn, error_code::MALFORMED, &e.to_string());
                    return forfeit(world, sessions, who, format!("player {who}: {e}"));
                }
                Err(e) => return forfeit(world, sessions, who, format!("player {who}: {e}")),
            }
        }
        if let Some(policy) = builtin {
            let frame = world.frame_for(1).expect("player 1 exists");
            orders[1] = policy.commands(&frame);
        }
        for (player, cmds) in orders.iter().enumerate() {
            let outcomes = world.apply_commands(player as PlayerId, cmds).expect("match is running");
            for (cmd, r) in cmds.iter().zip(outcomes) {
                if let Err(why) = r {
                    log::debug!("tick {}: player {player} {cmd:?} rejected: {why}", world.tick);
                }
            }
        }
        world.step(u32::from(frame_skip)).expect("match is running");
        if let Some(result) = world.result {
            for s in sessions.iter_mut() {
                let end = EndInfo { outcome: outcome_for(result, s.player_id), final_frame: world.tick };
                let _ = s.conn.send(&Message::End(end));
            }
            return MatchEnd { result, final_frame: world.tick, aborted: None, dead: Vec::new() };
        }
    }
}

pub struct Server {
    config: ServerConfig,
    listener: Listener,
    endpoint: Endpoint,
    next_connection: Arc<AtomicU64>,
}

impl Server {
    /// Validates the game config and binds the endpoint.
    pub fn bind(config: ServerConfig) -> Result<Server, ServerError> {
        World::new(&config.game)?;
        if config.mode == Mode::Attached && config.opponent == Opponent::Client {
            return Err(ServerError::AttachedTwoClients);
        }
        let listener = Listener::bind(&config.endpoint)
            .map_err(|source| ServerError::Bind { endpoint: config.endpoint.clone(), source })?;
        let endpoint = listener.local_endpoint()?;
        Ok(Server { config, listener, endpoint, next_connection: Arc::new(AtomicU64::new(0)) })
    }

    /// The endpoint clients should connect to.
    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    /// Serves until `max_matches` is reached (or QUIT in attached mode) and
    /// returns the reports of all matches played.
    pub fn run(self) -> Result<Vec<MatchReport>, ServerError> {
        match self.config.mode {
            Mode::Controlled => self.serve_controlled(),
            Mode::Attached => self.serve_attached(),
        }
    }

    /// Runs the server on a background thread.
    pub fn spawn(self) -> thread::JoinHandle<Result<Vec<MatchReport>, ServerError>> {
        thread::spawn(move || self.run())
    }

    fn accept(&self) -> std::io::Result<(Connection, u64)> {
        let stream = self.listener.accept()?;
        Ok((Connection::new(stream), self.next_connection.fetch_add(1, Ordering::Relaxed)))
    }

    fn serve_controlled(self) -> Result<Vec<MatchReport>, ServerError> {
        let mut matches = Vec::new();
        let mut index = 0u64;
        while self.config.max_matches.is_none_or(|m| index < m) {
            let mut conns = Vec::new();
            let wanted = if self.config.opponent == Opponent::Client { 2 } else { 1 };
            while conns.len() < wanted {
                match self.accept() {
                    Ok(c) => conns.push(c),
                    Err(e) => warn!("accept failed: {e}"),
                }
            }
            let game = self.config.game.clone();
            let opponent = self.config.opponent;
            let timeout = self.config.handshake_timeout;
            let match_index = index;
            matches.push(thread::spawn(move || controlled_match(conns, game, opponent, timeout, match_index)));
            index += 1;
        }
        Ok(matches.into_iter().filter_map(|h| h.join().ok().flatten()).collect())
    }

    fn serve_attached(self) -> Result<Vec<MatchReport>, ServerError> {
        let Server { config, listener, next_connection, .. } = self;
        let active = Arc::new(AtomicBool::new(false));
        let stop = Arc::new(AtomicBool::new(false));
        let (tx, rx) = mpsc::channel::<(Stream, u64)>();
        listener.set_nonblocking(true)?;
        let acceptor = {
            let (active, stop) = (active.clone(), stop.clone());
            thread::spawn(move || {
                while !stop.load(Ordering::Acquire) {
                    match listener.accept() {
                        Ok(stream) => {
                            let id = next_connection.fetch_add(1, Ordering::Relaxed);
                            if active.swap(true, Ordering::AcqRel) {
                                let mut c = Connection::new(stream);
                                send_error(&mut c, error_code::ILLEGAL_IN_MODE, "another client is attached");
                                c.close();
                                info!("refused connection {id}: a client is already attached");
                            } else if tx.send((stream, id)).is_err() {
                                break;
                            }
                        }
                        Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                            thread::sleep(Duration::from_millis(2));
                        }
                        Err(e) => warn!("accept failed: {e}"),
                    }
                }
            })
        };

        let mut reports = Vec::new();
        let mut index = 0u64;
        'sessions: while let Ok((stream, connection_id)) = rx.recv() {
            let seed = config.game.seed.wrapping_add(index);
            let setup = setup_for(&config.game, 0, seed);
            let mut session =
                match handshake(Connection::new(stream), connection_id, setup, config.handshake_timeout) {
                    Ok(s) => s,
                    Err(e) => {
                        warn!("handshake with connection {connection_id} failed: {e}");
                        active.store(false, Ordering::Release);
                        continue;
                    }
                };
            loop {
                let seed = config.game.seed.wrapping_add(index);
                let report = play(&mut session, &config, index, seed);
                index += 1;
                let alive = report.aborted.is_none();
                reports.push(report);
                if !alive {
                    break;
                }
                if config.max_matches.is_some_and(|m| index >= m) {
                    session.conn.close();
                    break 'sessions;
                }
                match session.conn.recv() {
                    Ok(Message::Restart) => {
                        let next = setup_for(&config.game, 0, config.game.seed.wrapping_add(index));
                        if session.conn.send(&Message::Setup(next)).is_err() {
                            break;
                        }
                    }
                    Ok(Message::Quit) => {
                        info!("client quit; shutting down");
                        session.conn.close();
                        break 'sessions;
                    }
                    Ok(other) => {
                        send_error(&mut session.conn, error_code::ILLEGAL_IN_MODE, "expected RESTART or QUIT");
                        warn!("unexpected {} between matches", other.name());
                        session.conn.close();
                        break;
                    }
                    Err(e) => {
                        info!("attached client left: {e}");
                        break;
                    }
                }
            }
            active.store(false, Ordering::Release);
        }
        stop.store(true, Ordering::Release);
        let _ = acceptor.join();
        Ok(reports)
    }
}

fn play(session: &mut Session, config: &ServerConfig, index: u64, seed: u64) -> MatchReport {
    let game = GameConfig { seed, ..config.game.clone() };
    let mut world = World::new(&game).expect("validated at bind");
    session.states_sent = 0;
    session.commands_received = 0;
    session.max_outstanding = 0;
    let end = run_match(
        std::slice::from_mut(session),
        &mut world,
        config.opponent.builtin(),
        Mode::Attached,
        game.frame_skip,
    );
    report(index, seed, end, std::slice::from_ref(session))
}

fn report(match_index: u64, seed: u64, end: MatchEnd, sessions: &[Session]) -> MatchReport {
    let r = MatchReport {
        match_index,
        seed,
        result: end.result,
        final_frame: end.final_frame,
        aborted: end.aborted,
        clients: sessions
            .iter()
            .map(|s| LockstepStats {
                player_id: s.player_id,
                connection_id: s.connection_id,
                states_sent: s.states_sent,
                commands_received: s.commands_received,
                max_outstanding: s.max_outstanding,
            })
            .collect(),
    };
    let result = match r.result {
        MatchResult::Winner(p) => format!("player {p} wins"),
        MatchResult::Draw => "draw".to_string(),
    };
    match &r.aborted {
        None => info!("match {} (seed {}): {result} at frame {}", r.match_index, r.seed, r.final_frame),
        Some(why) => info!("match {} (seed {}): aborted ({why}); {result} at frame {}", r.match_index, r.seed, r.final_frame),
    }
    r
}

fn controlled_match(
    conns: Vec<(Connection, u64)>,
    game: GameConfig,
    opponent: Opponent,
    timeout: Duration,
    match_index: u64,
) -> Option<MatchReport> {
    let seed = game.seed.wrapping_add(match_index);
    let mut sessions = Vec::new();
    for (player, (conn, id)) in conns.into_iter().enumerate() {
        match handshake(conn, id, setup_for(&game, player as PlayerId, seed), timeout) {
            Ok(s) => sessions.push(s),
            Err(e) => {
                warn!("match {match_index}: handshake with connection {id} failed: {e}");
                for s in &sessions {
                    s.conn.close();
                }
                return None;
            }
        }
    }
    let game = GameConfig { seed, ..game };
    let mut world = World::new(&game).expect("validated at bind");
    let end = run_match(&mut sessions, &mut world, opponent.builtin(), Mode::Controlled, game.frame_skip);
    for s in &sessions {
        s.conn.close();
    }
    Some(report(match_index, seed, end, &sessions))
}
