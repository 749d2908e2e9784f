//! Reference agent loop and the loopback throughput benchmark.

use std::fs::File;
use std::path::Path;
use std::time::{Duration, Instant};

use skirmish_core::codec::{Command, EndInfo};
use skirmish_core::engine::{GameConfig, Scenario};
use skirmish_core::frame::Frame;
use skirmish_core::roster::TROOPER;
use skirmish_core::rules::Policy;
use thiserror::Error;

use crate::client::{Client, ClientError};
use crate::replay::{ReplayError, ReplayWriter};
use crate::server::{Mode, Opponent, Server, ServerConfig, ServerError};
use crate::transport::Endpoint;

#[derive(Debug, Error)]
pub enum BotError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Server(#[from] ServerError),
}

/// Plays one match to its END with `policy`, calling `observe` on every frame
/// before answering it.
pub fn play_match(
    client: &mut Client,
    policy: Policy,
    mut observe: impl FnMut(&Frame, &[Command]),
) -> Result<EndInfo, ClientError> {
    loop {
        client.receive()?;
        if let Some(end) = client.state().last_result {
            return Ok(end);
        }
        let frame = client.frame().expect("STATE received");
        let cmds = policy.commands(frame);
        observe(frame, &cmds);
        client.send_commands(&cmds)?;
    }
}

/// Plays one match, optionally recording this player's view to `record`.
pub fn run_bot(
    client: &mut Client,
    policy: Policy,
    record: Option<(&Path, u32)>,
) -> Result<EndInfo, BotError> {
    let mut writer = match record {
        Some((path, k)) => Some(ReplayWriter::<File>::create(path, client.setup(), k)?),
        None => None,
    };
    let mut write_err = None;
    let end = play_match(client, policy, |frame, _| {
        if let Some(w) = writer.as_mut() {
            if write_err.is_none() {
                write_err = w.push_frame(frame).err();
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    if let Some(w) = writer {
        w.finish(end)?;
    }
    Ok(end)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub frames: u64,
    pub elapsed: Duration,
    pub frames_per_sec: f64,
    /// Mean STATE payload size.
    pub state_bytes_per_frame: f64,
    /// Mean bytes on the wire per lockstep frame, both directions, framing included.
    pub wire_bytes_per_frame: f64,
}

/// Runs `frames` lockstep frames of a 5v5 trooper match against an
/// in-process server over loopback TCP, idle on both sides so the match
/// lasts exactly `frames` frames.
pub fn bench(frames: u32, seed: u64) -> Result<BenchReport, BotError> {
    let game = GameConfig {
        seed,
        max_frames: frames.max(1),
        scenario: Scenario::RandomMirror { count: 5, type_id: TROOPER },
        ..GameConfig::default()
    };
    let mut cfg = ServerConfig::new(Mode::Controlled, Endpoint::Tcp("127.0.0.1:0".into()), game, Opponent::BuiltinIdle);
    cfg.max_matches = Some(1);
    let server = Server::bind(cfg)?;
    let endpoint = server.endpoint().clone();
    let handle = server.spawn();

    let mut client = Client::connect(&endpoint)?;
    let (rx0, tx0) = (client.connection().bytes_received, client.connection().bytes_sent);
    let mut count = 0u64;
    let start = Instant::now();
    play_match(&mut client, Policy::Idle, |_, _| count += 1)?;
    let elapsed = start.elapsed();
    // END is 4 bytes of framing plus a 6-byte payload
    let state_wire = (client.connection().bytes_received - rx0 - 10) as f64;
    let sent = (client.connection().bytes_sent - tx0) as f64;
    drop(client);
    handle.join().expect("server thread").map_err(BotError::Server)?;

    let n = count.max(1) as f64;
    Ok(BenchReport {
        frames: count,
        elapsed,
        frames_per_sec: count as f64 / elapsed.as_secs_f64().max(1e-9),
        state_bytes_per_frame: state_wire / n - 4.0,
        wire_bytes_per_frame: (state_wire + sent) / n,
    })
}
