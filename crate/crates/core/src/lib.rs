//! Core of the skirmish environment: a deterministic micro-RTS engine, the
//! per-player observation model, the binary wire codec and frame deltas.
//!
//! Everything here is pure computation over owned values. Sockets, files and
//! the command line live in the `skirmish` crate.
#![no_std]

extern crate alloc;

pub mod codec;
pub mod combat;
pub mod delta;
pub mod engine;
pub mod frame;
pub mod rng;
pub mod roster;
pub mod rules;

pub use codec::{Command, EndInfo, Hello, Message, MatchOutcome, Setup};
pub use engine::{GameConfig, MatchResult, Scenario, World};
pub use frame::{Frame, Position, UnitState};
pub use roster::{UnitTypeSpec, Weapon};

/// Protocol version spoken by this crate.
pub const PROTO_VERSION: u16 = 1;

/// Players are numbered 0 and 1.
pub type PlayerId = u8;

/// Unit identifiers are unique per match.
pub type UnitId = u32;
