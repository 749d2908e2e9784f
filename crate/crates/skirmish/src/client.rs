//! Agent-side library: connect, receive state, send commands.
//!
//! ```no_run
//! use skirmish::client::Client;
//! use skirmish_core::rules::attack_closest;
//!
//! let mut tc = Client::connect(&"127.0.0.1:11111".parse().unwrap())?;
//! while !tc.state().game_ended {
//!     tc.receive()?;
//!     if let Some(frame) = tc.frame().cloned() {
//!         tc.send_commands(&attack_closest(&frame))?;
//!     }
//! }
//! # Ok::<(), skirmish::client::ClientError>(())
//! ```

use std::time::Duration;

use skirmish_core::codec::{Command, EndInfo, Hello, MatchOutcome, Message, Setup, MAX_COMMANDS};
use skirmish_core::frame::Frame;
use skirmish_core::PROTO_VERSION;
use thiserror::Error;

use crate::server::error_code;
use crate::transport::{Connection, Endpoint, Stream, WireError};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("cannot connect to {endpoint}: {source}")]
    Connect { endpoint: Endpoint, source: std::io::Error },
    #[error("server rejected protocol version: {0}")]
    Version(String),
    #[error("server error {code}: {text}")]
    Server { code: u16, text: String },
    #[error("protocol violation: expected {expected}, got {got}")]
    Unexpected { expected: &'static str, got: &'static str },
    #[error("usage error: {0}")]
    Usage(&'static str),
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// Everything the agent knows about the current match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientState {
    pub setup: Setup,
    pub latest_frame: Option<Frame>,
    pub game_ended: bool,
    pub last_result: Option<EndInfo>,
}

/// A connection to a match server. Calls must alternate strictly:
/// `receive`, `send_commands`, `receive`, ... until the match ends.
#[derive(Debug)]
pub struct Client {
    conn: Connection,
    state: ClientState,
    awaiting_reply: bool,
}

impl Client {
    pub fn connect(endpoint: &Endpoint) -> Result<Client, ClientError> {
        Self::connect_as(endpoint, "skirmish-client", PROTO_VERSION)
    }

    /// Connects announcing a name and protocol version.
    pub fn connect_as(endpoint: &Endpoint, name: &str, version: u16) -> Result<Client, ClientError> {
        let stream = Stream::connect(endpoint)
            .map_err(|source| ClientError::Connect { endpoint: endpoint.clone(), source })?;
        let mut conn = Connection::new(stream);
        conn.send(&Message::Hello(Hello {
            proto_version: version,
            client_name: name.to_string(),
            requested_role: 0,
        }))?;
        let setup = expect_setup(&mut conn)?;
        Ok(Client {
            conn,
            state: ClientState { setup, latest_frame: None, game_ended: false, last_result: None },
            awaiting_reply: false,
        })
    }

    pub fn state(&self) -> &ClientState {
        &self.state
    }

    pub fn setup(&self) -> &Setup {
        &self.state.setup
    }

    pub fn frame(&self) -> Option<&Frame> {
        self.state.latest_frame.as_ref()
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    /// Limits how long `receive` may block. `None` waits forever.
    pub fn set_timeout(&self, t: Option<Duration>) -> Result<(), ClientError> {
        self.conn.set_read_timeout(t).map_err(|e| ClientError::Wire(e.into()))
    }

    /// Blocks for the next STATE or END.
    pub fn receive(&mut self) -> Result<&ClientState, ClientError> {
        if self.state.game_ended {
            return Err(ClientError::Usage("the match has ended"));
        }
        if self.awaiting_reply {
            return Err(ClientError::Usage("receive called twice without send_commands"));
        }
        match self.conn.recv()? {
            Message::State(frame) => {
                self.state.latest_frame = Some(frame);
                self.awaiting_reply = true;
            }
            Message::End(end) => {
                self.state.game_ended = true;
                self.state.last_result = Some(end);
            }
            Message::Error { code, text } => return Err(ClientError::Server { code, text }),
            other => return Err(ClientError::Unexpected { expected: "STATE or END", got: other.name() }),
        }
        Ok(&self.state)
    }

    /// Answers the last STATE. The list may be empty.
    pub fn send_commands(&mut self, cmds: &[Command]) -> Result<(), ClientError> {
        if self.state.game_ended {
            return Err(ClientError::Usage("the match has ended"));
        }
        if !self.awaiting_reply {
            return Err(ClientError::Usage("send_commands called without a pending STATE"));
        }
        if cmds.len() > MAX_COMMANDS {
            return Err(ClientError::Usage("more than 1024 commands in one message"));
        }
        self.conn.send(&Message::Commands(cmds.to_vec()))?;
        self.awaiting_reply = false;
        Ok(())
    }

    /// Attached mode only: asks for another match on this connection.
    pub fn restart(&mut self) -> Result<&ClientState, ClientError> {
        if !self.state.game_ended {
            return Err(ClientError::Usage("restart is only possible after END"));
        }
        self.conn.send(&Message::Restart)?;
        self.state = ClientState {
            setup: expect_setup(&mut self.conn)?,
            latest_frame: None,
            game_ended: false,
            last_result: None,
        };
        Ok(&self.state)
    }

    /// Tells the server to stop and closes the connection.
    pub fn quit(mut self) -> Result<(), ClientError> {
        self.conn.send(&Message::Quit)?;
        self.conn.close();
        Ok(())
    }

    pub fn outcome(&self) -> Option<MatchOutcome> {
        self.state.last_result.map(|e| e.outcome)
    }
}

fn expect_setup(conn: &mut Connection) -> Result<Setup, ClientError> {
    match conn.recv()? {
        Message::Setup(s) => Ok(s),
        Message::Error { code: error_code::VERSION_MISMATCH, text } => Err(ClientError::Version(text)),
        Message::Error { code, text } => Err(ClientError::Server { code, text }),
        other => Err(ClientError::Unexpected { expected: "SETUP", got: other.name() }),
    }
}
