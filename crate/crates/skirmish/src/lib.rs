//! Networked side of the skirmish environment: the lockstep match server in
//! its two hosting modes, the agent client library, replay files and the
//! operator CLI. Game logic and the wire codec live in `skirmish-core`.

pub mod bot;
pub mod client;
pub mod config;
pub mod replay;
pub mod server;
pub mod transport;

pub use skirmish_core as core;
