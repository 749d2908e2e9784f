//! Binary wire format.
//!
//! Every message is a payload starting with a one-byte tag, carried on the
//! stream behind a 4-byte little-endian length. All integers are
//! little-endian; strings are a `u16` byte length followed by UTF-8.
//!
//! | tag  | message  | body                                                    |
//! |------|----------|---------------------------------------------------------|
//! | 0x01 | HELLO    | u16 version, string name, u8 role                       |
//! | 0x02 | SETUP    | u8 player, u32 w, u32 h, u8 fog, u8 skip, u64 seed, roster |
//! | 0x03 | STATE    | u32 frame, then myself and enemy unit groups            |
//! | 0x04 | COMMANDS | u16 count, 13 bytes per command                         |
//! | 0x05 | END      | u8 result, u32 final frame                              |
//! | 0x06 | RESTART  | empty                                                   |
//! | 0x07 | QUIT     | empty                                                   |
//! | 0x08 | ERROR    | u16 code, string text                                   |
//!
//! A unit group is a `u16` count followed by units in ascending id order,
//! each a `u32` id and the twenty `i32` fields of [`UnitState::fields`].

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::frame::{Frame, UnitState, FIELD_COUNT};
use crate::roster::{UnitTypeSpec, Weapon};
use crate::{PlayerId, UnitId};

pub const TAG_HELLO: u8 = 0x01;
pub const TAG_SETUP: u8 = 0x02;
pub const TAG_STATE: u8 = 0x03;
pub const TAG_COMMANDS: u8 = 0x04;
pub const TAG_END: u8 = 0x05;
pub const TAG_RESTART: u8 = 0x06;
pub const TAG_QUIT: u8 = 0x07;
pub const TAG_ERROR: u8 = 0x08;

/// Largest payload accepted on a stream.
pub const MAX_PAYLOAD: usize = 16 * 1024 * 1024;
pub const MAX_COMMANDS: usize = 1024;
/// Encoded size of one unit record: id plus twenty fields.
pub const UNIT_RECORD_LEN: usize = 4 + 4 * FIELD_COUNT;
const COMMAND_LEN: usize = 13;

/// Unit order issued by an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Stop { unit: UnitId },
    Move { unit: UnitId, x: i32, y: i32 },
    Attack { unit: UnitId, target: UnitId },
}

impl Command {
    pub fn unit_id(&self) -> UnitId {
        match *self {
            Command::Stop { unit } | Command::Move { unit, .. } | Command::Attack { unit, .. } => unit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hello {
    pub proto_version: u16,
    pub client_name: String,
    pub requested_role: u8,
}

/// Match parameters announced to a client after the handshake.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Setup {
    pub player_id: PlayerId,
    pub map_w: u32,
    pub map_h: u32,
    pub fog: bool,
    pub frame_skip: u8,
    pub seed: u64,
    pub roster: Vec<UnitTypeSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchOutcome {
    Loss = 0,
    Win = 1,
    Draw = 2,
}

impl MatchOutcome {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(MatchOutcome::Loss),
            1 => Some(MatchOutcome::Win),
            2 => Some(MatchOutcome::Draw),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EndInfo {
    pub outcome: MatchOutcome,
    pub final_frame: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Hello(Hello),
    Setup(Setup),
    State(Frame),
    Commands(Vec<Command>),
    End(EndInfo),
    Restart,
    Quit,
    Error { code: u16, text: String },
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::Hello(_) => TAG_HELLO,
            Message::Setup(_) => TAG_SETUP,
            Message::State(_) => TAG_STATE,
            Message::Commands(_) => TAG_COMMANDS,
            Message::End(_) => TAG_END,
            Message::Restart => TAG_RESTART,
            Message::Quit => TAG_QUIT,
            Message::Error { .. } => TAG_ERROR,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Message::Hello(_) => "HELLO",
            Message::Setup(_) => "SETUP",
            Message::State(_) => "STATE",
            Message::Commands(_) => "COMMANDS",
            Message::End(_) => "END",
            Message::Restart => "RESTART",
            Message::Quit => "QUIT",
            Message::Error { .. } => "ERROR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("{0} commands exceed the limit of 1024")]
    TooManyCommands(usize),
    #[error("string of {0} bytes does not fit a u16 length")]
    StringTooLong(usize),
    #[error("{0} units in one group exceed the u16 count")]
    TooManyUnits(usize),
    #[error("{0} roster entries exceed the u8 count")]
    TooManyTypes(usize),
    #[error("unit {0}: map key and id differ")]
    KeyMismatch(UnitId),
    #[error("unit {0}: enemy flag disagrees with its group")]
    WrongGroup(UnitId),
    #[error("unit {0} present in both groups")]
    DuplicateUnit(UnitId),
    #[error("attack target {0} does not fit an i32")]
    TargetTooLarge(UnitId),
    #[error("payload of {0} bytes exceeds the 16 MiB cap")]
    PayloadTooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeErrorKind {
    #[error("empty payload")]
    Empty,
    #[error("unknown tag {0:#04x}")]
    UnknownTag(u8),
    #[error("payload ends before the declared contents")]
    LengthMismatch,
    #[error("trailing bytes after the message")]
    TrailingBytes,
    #[error("invalid UTF-8 string")]
    BadUtf8,
    #[error("invalid value for {0}")]
    BadValue(&'static str),
    #[error("unit ids not strictly ascending")]
    UnsortedIds,
    #[error("unit {0} present in both groups")]
    DuplicateUnit(UnitId),
    #[error("declared length exceeds the 16 MiB cap")]
    TooLarge,
}

/// Decoding failure with the byte offset where it was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{kind} at offset {offset}")]
pub struct DecodeError {
    pub offset: usize,
    pub kind: DecodeErrorKind,
}

/// Prefixes `payload` with its 4-byte little-endian length.
pub fn write_framed(payload: &[u8]) -> Result<Vec<u8>, EncodeError> {
    let mut out = Vec::with_capacity(payload.len() + 4);
    append_framed(&mut out, payload)?;
    Ok(out)
}

pub fn append_framed(out: &mut Vec<u8>, payload: &[u8]) -> Result<(), EncodeError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(EncodeError::PayloadTooLarge(payload.len()));
    }
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
    Ok(())
}

/// Splits one framed payload off the front of `buf`. Returns `Ok(None)` when
/// `buf` holds only part of a message.
pub fn split_framed(buf: &[u8]) -> Result<Option<(&[u8], &[u8])>, DecodeError> {
    let Some(header) = buf.get(..4) else {
        return Ok(None);
    };
    let len = u32::from_le_bytes(header.try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(DecodeError { offset: 0, kind: DecodeErrorKind::TooLarge });
    }
    match buf[4..].split_at_checked(len) {
        Some((payload, rest)) => Ok(Some((payload, rest))),
        None => Ok(None),
    }
}

pub fn encode_message(msg: &Message) -> Result<Vec<u8>, EncodeError> {
    let mut out = Vec::new();
    encode_message_into(msg, &mut out)?;
    Ok(out)
}

/// Appends the payload for `msg` to `out`. On error `out` may hold a partial
/// payload.
pub fn encode_message_into(msg: &Message, out: &mut Vec<u8>) -> Result<(), EncodeError> {
    out.push(msg.tag());
    match msg {
        Message::Hello(h) => {
            out.extend_from_slice(&h.proto_version.to_le_bytes());
            put_str(out, &h.client_name)?;
            out.push(h.requested_role);
        }
        Message::Setup(s) => encode_setup(s, out)?,
        Message::State(f) => encode_frame_body(f, out)?,
        Message::Commands(cmds) => encode_commands(cmds, out)?,
        Message::End(e) => {
            out.push(e.outcome as u8);
            out.extend_from_slice(&e.final_frame.to_le_bytes());
        }
        Message::Restart | Message::Quit => {}
        Message::Error { code, text } => {
            out.extend_from_slice(&code.to_le_bytes());
            put_str(out, text)?;
        }
    }
    Ok(())
}

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<(), EncodeError> {
    let len = u16::try_from(s.len()).map_err(|_| EncodeError::StringTooLong(s.len()))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

fn put_i32s(out: &mut Vec<u8>, vals: &[i32]) {
    for v in vals {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn encode_setup(s: &Setup, out: &mut Vec<u8>) -> Result<(), EncodeError> {
    out.push(s.player_id);
    out.extend_from_slice(&s.map_w.to_le_bytes());
    out.extend_from_slice(&s.map_h.to_le_bytes());
    out.push(u8::from(s.fog));
    out.push(s.frame_skip);
    out.extend_from_slice(&s.seed.to_le_bytes());
    let count = u8::try_from(s.roster.len()).map_err(|_| EncodeError::TooManyTypes(s.roster.len()))?;
    out.push(count);
    for t in &s.roster {
        out.push(t.type_id);
        put_str(out, &t.name)?;
        put_i32s(out, &[t.max_hp, t.max_shield, t.max_energy, t.armor, t.speed_fp, t.sight_range]);
        out.push(u8::from(t.flyer));
        let (g, a) = (t.ground_weapon, t.air_weapon);
        put_i32s(out, &[g.damage, g.range, g.cooldown, a.damage, a.range, a.cooldown]);
    }
    Ok(())
}

fn encode_commands(cmds: &[Command], out: &mut Vec<u8>) -> Result<(), EncodeError> {
    if cmds.len() > MAX_COMMANDS {
        return Err(EncodeError::TooManyCommands(cmds.len()));
    }
    out.extend_from_slice(&(cmds.len() as u16).to_le_bytes());
    for c in cmds {
        let (kind, a, b) = match *c {
            Command::Stop { .. } => (0u8, 0, 0),
            Command::Move { x, y, .. } => (1, x, y),
            Command::Attack { target, .. } => {
                (2, i32::try_from(target).map_err(|_| EncodeError::TargetTooLarge(target))?, 0)
            }
        };
        out.push(kind);
        out.extend_from_slice(&c.unit_id().to_le_bytes());
        put_i32s(out, &[a, b]);
    }
    Ok(())
}

/// Appends a unit group: count, then records in ascending id order.
pub(crate) fn encode_group(
    group: &BTreeMap<UnitId, UnitState>,
    enemy: bool,
    out: &mut Vec<u8>,
) -> Result<(), EncodeError> {
    let count = u16::try_from(group.len()).map_err(|_| EncodeError::TooManyUnits(group.len()))?;
    out.extend_from_slice(&count.to_le_bytes());
    for (&id, u) in group {
        if u.id != id {
            return Err(EncodeError::KeyMismatch(id));
        }
        if u.enemy != enemy {
            return Err(EncodeError::WrongGroup(id));
        }
        out.extend_from_slice(&id.to_le_bytes());
        put_i32s(out, &u.fields());
    }
    Ok(())
}

/// STATE body without the tag byte.
pub fn encode_frame_body(f: &Frame, out: &mut Vec<u8>) -> Result<(), EncodeError> {
    if let Some(id) = f.units_enemy.keys().find(|id| f.units_myself.contains_key(id)) {
        return Err(EncodeError::DuplicateUnit(*id));
    }
    out.reserve(8 + UNIT_RECORD_LEN * f.len());
    out.extend_from_slice(&f.frame_number.to_le_bytes());
    encode_group(&f.units_myself, false, out)?;
    encode_group(&f.units_enemy, true, out)
}

/// Byte cursor that reports the offset of every failure.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub(crate) fn offset(&self) -> usize {
        self.pos
    }

    pub(crate) fn err(&self, kind: DecodeErrorKind) -> DecodeError {
        DecodeError { offset: self.pos, kind }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(self.err(DecodeErrorKind::LengthMismatch));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn i32(&mut self) -> Result<i32, DecodeError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn bool(&mut self, what: &'static str) -> Result<bool, DecodeError> {
        let at = self.pos;
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(DecodeError { offset: at, kind: DecodeErrorKind::BadValue(what) }),
        }
    }

    fn string(&mut self) -> Result<String, DecodeError> {
        let len = self.u16()? as usize;
        let at = self.pos;
        let bytes = self.take(len)?;
        core::str::from_utf8(bytes)
            .map(String::from)
            .map_err(|_| DecodeError { offset: at, kind: DecodeErrorKind::BadUtf8 })
    }

    /// Fails unless `n` fixed-size records of `each` bytes remain, before
    /// anything is allocated for them.
    pub(crate) fn expect_records(&self, n: usize, each: usize) -> Result<(), DecodeError> {
        if self.remaining() < n * each {
            return Err(self.err(DecodeErrorKind::LengthMismatch));
        }
        Ok(())
    }

    pub(crate) fn finish(&self) -> Result<(), DecodeError> {
        if self.remaining() != 0 {
            return Err(self.err(DecodeErrorKind::TrailingBytes));
        }
        Ok(())
    }
}

pub fn decode_message(payload: &[u8]) -> Result<Message, DecodeError> {
    let mut r = Reader::new(payload);
    if payload.is_empty() {
        return Err(r.err(DecodeErrorKind::Empty));
    }
    let tag = r.u8()?;
    let msg = match tag {
        TAG_HELLO => Message::Hello(Hello {
            proto_version: r.u16()?,
            client_name: r.string()?,
            requested_role: r.u8()?,
        }),
        TAG_SETUP => Message::Setup(decode_setup(&mut r)?),
        TAG_STATE => Message::State(decode_frame_body(&mut r)?),
        TAG_COMMANDS => Message::Commands(decode_commands(&mut r)?),
        TAG_END => {
            let at = r.offset();
            let outcome = MatchOutcome::from_u8(r.u8()?)
                .ok_or(DecodeError { offset: at, kind: DecodeErrorKind::BadValue("result") })?;
            Message::End(EndInfo { outcome, final_frame: r.u32()? })
        }
        TAG_RESTART => Message::Restart,
        TAG_QUIT => Message::Quit,
        TAG_ERROR => Message::Error { code: r.u16()?, text: r.string()? },
        other => {
            return Err(DecodeError { offset: 0, kind: DecodeErrorKind::UnknownTag(other) });
        }
    };
    r.finish()?;
    Ok(msg)
}

fn decode_setup(r: &mut Reader<'_>) -> Result<Setup, DecodeError> {
    let player_id = r.u8()?;
    let map_w = r.u32()?;
    let map_h = r.u32()?;
    let fog = r.bool("fog")?;
    let frame_skip = r.u8()?;
    let seed = r.u64()?;
    let count = r.u8()? as usize;
    let mut roster = Vec::with_capacity(count);
    for _ in 0..count {
        let type_id = r.u8()?;
        let name = r.string()?;
        let mut s = [0i32; 6];
        for v in &mut s {
            *v = r.i32()?;
        }
        let flyer = r.bool("flyer")?;
        let mut w = [0i32; 6];
        for v in &mut w {
            *v = r.i32()?;
        }
        roster.push(UnitTypeSpec {
            type_id,
            name,
            max_hp: s[0],
            max_shield: s[1],
            max_energy: s[2],
            armor: s[3],
            speed_fp: s[4],
            sight_range: s[5],
            flyer,
            ground_weapon: Weapon::new(w[0], w[1], w[2]),
            air_weapon: Weapon::new(w[3], w[4], w[5]),
        });
    }
    Ok(Setup { player_id, map_w, map_h, fog, frame_skip, seed, roster })
}

fn decode_commands(r: &mut Reader<'_>) -> Result<Vec<Command>, DecodeError> {
    let at = r.offset();
    let count = r.u16()? as usize;
    if count > MAX_COMMANDS {
        return Err(DecodeError { offset: at, kind: DecodeErrorKind::BadValue("command count") });
    }
    r.expect_records(count, COMMAND_LEN)?;
    let mut cmds = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.offset();
        let bad = |what| DecodeError { offset: at, kind: DecodeErrorKind::BadValue(what) };
        let kind = r.u8()?;
        let unit = r.u32()?;
        let a = r.i32()?;
        let b = r.i32()?;
        cmds.push(match kind {
            0 if a == 0 && b == 0 => Command::Stop { unit },
            0 => return Err(bad("stop arguments")),
            1 => Command::Move { unit, x: a, y: b },
            2 if a >= 0 && b == 0 => Command::Attack { unit, target: a as UnitId },
            2 => return Err(bad("attack arguments")),
            _ => return Err(bad("command kind")),
        });
    }
    Ok(cmds)
}

pub(crate) fn decode_unit(r: &mut Reader<'_>, enemy: bool) -> Result<UnitState, DecodeError> {
    let id = r.u32()?;
    let start = r.offset();
    let mut f = [0i32; FIELD_COUNT];
    for v in &mut f {
        *v = r.i32()?;
    }
    UnitState::from_fields(id, &f, enemy).map_err(|bad| DecodeError {
        offset: start + 4 * bad.index,
        kind: DecodeErrorKind::BadValue(crate::frame::FIELD_NAMES[bad.index]),
    })
}

fn decode_group(
    r: &mut Reader<'_>,
    enemy: bool,
    other: Option<&BTreeMap<UnitId, UnitState>>,
) -> Result<BTreeMap<UnitId, UnitState>, DecodeError> {
    let count = r.u16()? as usize;
    r.expect_records(count, UNIT_RECORD_LEN)?;
    let mut group = BTreeMap::new();
    let mut last: Option<UnitId> = None;
    for _ in 0..count {
        let at = r.offset();
        let u = decode_unit(r, enemy)?;
        if last.is_some_and(|l| u.id <= l) {
            return Err(DecodeError { offset: at, kind: DecodeErrorKind::UnsortedIds });
        }
        if other.is_some_and(|o| o.contains_key(&u.id)) {
            return Err(DecodeError { offset: at, kind: DecodeErrorKind::DuplicateUnit(u.id) });
        }
        last = Some(u.id);
        group.insert(u.id, u);
    }
    Ok(group)
}

pub(crate) fn decode_frame_body(r: &mut Reader<'_>) -> Result<Frame, DecodeError> {
    let frame_number = r.u32()?;
    let units_myself = decode_group(r, false, None)?;
    let units_enemy = decode_group(r, true, Some(&units_myself))?;
    Ok(Frame { frame_number, units_myself, units_enemy })
}

/// Canonical STATE payload for a frame, tag included.
pub fn encode_state(f: &Frame) -> Result<Vec<u8>, EncodeError> {
    let mut out = alloc::vec![TAG_STATE];
    encode_frame_body(f, &mut out)?;
    Ok(out)
}
