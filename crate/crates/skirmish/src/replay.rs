//! Replay files (`.tcr`): one player's observed frames, keyframes plus
//! per-frame deltas.
//!
//! ```text
//! "TCR1"
//! framed SETUP payload
//! framed record*        STATE (0x03) keyframe or DELTA (0x09) vs previous frame
//! framed END payload
//! ```
//!
//! Every record is written with a single `write_all`, so a file cut short by
//! a crash ends on or inside a record and the damage is visible from the
//! framing alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::Path;

use skirmish_core::codec::{
    self, decode_message, split_framed, DecodeErrorKind, EncodeError, EndInfo, Message, Setup, TAG_END, TAG_STATE,
};
use skirmish_core::delta::{decode_delta, delta_apply, delta_encode, encode_delta, DeltaError, TAG_DELTA};
use skirmish_core::frame::{validate_frame, Frame, Position, UnitState};
use skirmish_core::roster::{self, UNIT_SIZE};
use skirmish_core::UnitId;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"TCR1";
pub const DEFAULT_KEYFRAME_INTERVAL: u32 = 32;
pub const EXTENSION: &str = "tcr";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Corruption {
    #[error("bad magic")]
    BadMagic,
    #[error("record truncated")]
    Truncated,
    #[error("record length exceeds the 16 MiB cap")]
    TooLarge,
    #[error("{0}")]
    Decode(DecodeErrorKind),
    #[error("{0}")]
    Delta(DeltaError),
    #[error("unexpected record tag {0:#04x}")]
    UnexpectedRecord(u8),
    #[error("first record is a delta")]
    DeltaFirst,
    #[error("delta is not in canonical form")]
    NonCanonicalDelta,
    #[error("file ends without an END trailer")]
    MissingTrailer,
    #[error("data after the END trailer")]
    TrailingData,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("offset {offset}: {kind}")]
    Corrupt { offset: u64, kind: Corruption },
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("write failed after {records} records, the file is incomplete: {source}")]
    PartialWrite { records: u64, source: io::Error },
    #[error("keyframe interval must be at least 1")]
    BadInterval,
    #[error("transcript: {0}")]
    Transcript(&'static str),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

impl ReplayError {
    pub fn offset(&self) -> Option<u64> {
        match self {
            ReplayError::Corrupt { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

fn corrupt(offset: usize, kind: Corruption) -> ReplayError {
    ReplayError::Corrupt { offset: offset as u64, kind }
}

/// Streams frames into a replay. Each frame is stored as a delta against the
/// previous one, except every `keyframe_interval`-th frame (starting with
/// the first), which is stored whole.
#[derive(Debug)]
pub struct ReplayWriter<W: Write> {
    out: W,
    keyframe_interval: u32,
    prev: Option<Frame>,
    frames: u64,
    keyframes: u64,
    bytes: u64,
    buf: Vec<u8>,
}

/// Counts of what was written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordSummary {
    pub frames: u64,
    pub keyframes: u64,
    pub deltas: u64,
    pub bytes: u64,
}

impl ReplayWriter<File> {
    pub fn create(path: &Path, setup: &Setup, keyframe_interval: u32) -> Result<Self, ReplayError> {
        ReplayWriter::new(File::create(path)?, setup, keyframe_interval)
    }
}

impl<W: Write> ReplayWriter<W> {
    pub fn new(out: W, setup: &Setup, keyframe_interval: u32) -> Result<Self, ReplayError> {
        if keyframe_interval == 0 {
            return Err(ReplayError::BadInterval);
        }
        let mut w = ReplayWriter {
            out,
            keyframe_interval,
            prev: None,
            frames: 0,
            keyframes: 0,
            bytes: 0,
            buf: Vec::new(),
        };
        let mut header = MAGIC.to_vec();
        codec::append_framed(&mut header, &codec::encode_message(&Message::Setup(setup.clone()))?)?;
        w.write_record(header)?;
        Ok(w)
    }

    fn write_record(&mut self, bytes: Vec<u8>) -> Result<(), ReplayError> {
        let records = self.frames;
        self.out
            .write_all(&bytes)
            .and_then(|_| self.out.flush())
            .map_err(|source| ReplayError::PartialWrite { records, source })?;
        self.bytes += bytes.len() as u64;
        self.buf = bytes;
        Ok(())
    }

    pub fn push_frame(&mut self, frame: &Frame) -> Result<(), ReplayError> {
        let keyframe = self.frames % u64::from(self.keyframe_interval) == 0;
        let payload = match (&self.prev, keyframe) {
            (Some(prev), false) => encode_delta(&delta_encode(prev, frame))?,
            _ => codec::encode_state(frame)?,
        };
        let mut rec = std::mem::take(&mut self.buf);
        rec.clear();
        codec::append_framed(&mut rec, &payload)?;
        self.write_record(rec)?;
        self.frames += 1;
        if keyframe {
            self.keyframes += 1;
        }
        self.prev = Some(frame.clone());
        Ok(())
    }

    /// Writes the END trailer and returns the sink.
    pub fn finish(mut self, end: EndInfo) -> Result<(W, RecordSummary), ReplayError> {
        let rec = codec::write_framed(&codec::encode_message(&Message::End(end))?)?;
        self.write_record(rec)?;
        let summary = RecordSummary {
            frames: self.frames,
            keyframes: self.keyframes,
            deltas: self.frames - self.keyframes,
            bytes: self.bytes,
        };
        Ok((self.out, summary))
    }
}

/// Writes a transcript (SETUP, STATE..., END; COMMANDS are skipped) to `path`.
pub fn record<I>(messages: I, path: &Path, keyframe_interval: u32) -> Result<RecordSummary, ReplayError>
where
    I: IntoIterator<Item = Message>,
{
    let file = File::create(path)?;
    let (_, summary) = record_to(messages, file, keyframe_interval)?;
    Ok(summary)
}

pub fn record_to<I, W>(messages: I, out: W, keyframe_interval: u32) -> Result<(W, RecordSummary), ReplayError>
where
    I: IntoIterator<Item = Message>,
    W: Write,
{
    let mut it = messages.into_iter();
    let setup = match it.next() {
        Some(Message::Setup(s)) => s,
        _ => return Err(ReplayError::Transcript("must start with SETUP")),
    };
    let mut writer = ReplayWriter::new(out, &setup, keyframe_interval)?;
    for msg in it {
        match msg {
            Message::State(frame) => writer.push_frame(&frame)?,
            Message::Commands(_) => {}
            Message::End(end) => return writer.finish(end),
            _ => return Err(ReplayError::Transcript("only STATE, COMMANDS and END may follow SETUP")),
        }
    }
    Err(ReplayError::Transcript("missing END"))
}

/// Sequential reader over a replay held in memory. Yields frames until the
/// trailer or the first error; frames before a damaged record are still
/// delivered.
#[derive(Debug)]
pub struct ReplayReader {
    data: Vec<u8>,
    pos: usize,
    setup: Setup,
    prev: Option<Frame>,
    end: Option<EndInfo>,
    done: bool,
}

impl ReplayReader {
    pub fn open(path: &Path) -> Result<Self, ReplayError> {
        Self::from_bytes(fs::read(path)?)
    }

    pub fn from_bytes(data: Vec<u8>) -> Result<Self, ReplayError> {
        if data.get(..4) != Some(&MAGIC[..]) {
            return Err(corrupt(0, Corruption::BadMagic));
        }
        let (payload, _) = framed_at(&data, 4)?;
        let setup = match decode_message(payload) {
            Ok(Message::Setup(s)) => s,
            Ok(other) => return Err(corrupt(8, Corruption::UnexpectedRecord(other.tag()))),
            Err(e) => return Err(corrupt(8 + e.offset, Corruption::Decode(e.kind))),
        };
        let pos = 8 + payload.len();
        Ok(ReplayReader { data, pos, setup, prev: None, end: None, done: false })
    }

    pub fn setup(&self) -> &Setup {
        &self.setup
    }

    /// The trailer, available once iteration has reached it.
    pub fn end(&self) -> Option<EndInfo> {
        self.end
    }

    fn next_frame(&mut self) -> Result<Option<Frame>, ReplayError> {
        let at = self.pos;
        if at == self.data.len() {
            return Err(corrupt(at, Corruption::MissingTrailer));
        }
        let (payload, next) = framed_at(&self.data, at)?;
        let body = at + 4;
        let decode_err = |e: codec::DecodeError| corrupt(body + e.offset, Corruption::Decode(e.kind));
        let frame = match payload[0] {
            TAG_STATE => match decode_message(payload).map_err(decode_err)? {
                Message::State(f) => f,
                _ => unreachable!("tag checked"),
            },
            TAG_DELTA => {
                let d = decode_delta(payload).map_err(decode_err)?;
                let prev = self.prev.as_ref().ok_or_else(|| corrupt(at, Corruption::DeltaFirst))?;
                let frame = delta_apply(prev, &d).map_err(|e| corrupt(body, Corruption::Delta(e)))?;
                // the writer patches exactly the fields that changed
                if encode_delta(&delta_encode(prev, &frame)).ok().as_deref() != Some(payload) {
                    return Err(corrupt(body, Corruption::NonCanonicalDelta));
                }
                frame
            }
            TAG_END => {
                match decode_message(payload).map_err(decode_err)? {
                    Message::End(e) => self.end = Some(e),
                    _ => unreachable!("tag checked"),
                }
                if next != self.data.len() {
                    return Err(corrupt(next, Corruption::TrailingData));
                }
                self.pos = next;
                return Ok(None);
            }
            tag => return Err(corrupt(body, Corruption::UnexpectedRecord(tag))),
        };
        self.pos = next;
        self.prev = Some(frame.clone());
        Ok(Some(frame))
    }
}

/// Payload of the record starting at `at` and the offset just past it.
fn framed_at(data: &[u8], at: usize) -> Result<(&[u8], usize), ReplayError> {
    match split_framed(&data[at..]) {
        Ok(Some((payload, _))) if payload.is_empty() => {
            Err(corrupt(at + 4, Corruption::Decode(DecodeErrorKind::Empty)))
        }
        Ok(Some((payload, _))) => Ok((payload, at + 4 + payload.len())),
        Ok(None) => Err(corrupt(at, Corruption::Truncated)),
        Err(_) => Err(corrupt(at, Corruption::TooLarge)),
    }
}

impl Iterator for ReplayReader {
    type Item = Result<Frame, ReplayError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_frame() {
            Ok(Some(f)) => Some(Ok(f)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// A fully decoded replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub setup: Setup,
    pub frames: Vec<Frame>,
    pub end: EndInfo,
}

impl Replay {
    /// The transcript this replay was recorded from (minus commands).
    pub fn messages(&self) -> impl Iterator<Item = Message> + '_ {
        std::iter::once(Message::Setup(self.setup.clone()))
            .chain(self.frames.iter().cloned().map(Message::State))
            .chain(std::iter::once(Message::End(self.end)))
    }
}

pub fn load(path: &Path) -> Result<Replay, ReplayError> {
    load_bytes(fs::read(path)?)
}

pub fn load_bytes(data: Vec<u8>) -> Result<Replay, ReplayError> {
    let mut reader = ReplayReader::from_bytes(data)?;
    let frames = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    let end = reader.end().expect("iteration finished without error");
    Ok(Replay { setup: reader.setup, frames, end })
}

/// Result of [`verify_bytes`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Verification {
    pub frames: usize,
    pub problems: Vec<String>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

pub fn verify(path: &Path) -> Result<Verification, io::Error> {
    Ok(verify_bytes(fs::read(path)?))
}

/// Decodes every record and checks each reconstructed frame: frame
/// invariants against the recorded setup, canonical re-encoding, and
/// consistency with the frames before it (units never heal, move no faster
/// than their speed, keep their type and stats, and target only units this
/// player has observed).
pub fn verify_bytes(data: Vec<u8>) -> Verification {
    let mut v = Verification::default();
    let mut reader = match ReplayReader::from_bytes(data) {
        Ok(r) => r,
        Err(e) => {
            v.problems.push(e.to_string());
            return v;
        }
    };
    let setup = reader.setup().clone();
    let mut checker = Continuity::new(&setup);
    let mut last_frame = None;
    for item in reader.by_ref() {
        let frame = match item {
            Ok(f) => f,
            Err(e) => {
                v.problems.push(e.to_string());
                return v;
            }
        };
        v.frames += 1;
        let n = frame.frame_number;
        for bad in validate_frame(&frame, setup.map_w, setup.map_h, &setup.roster) {
            v.problems.push(format!("frame {n}: {bad}"));
        }
        let bytes = codec::encode_state(&frame);
        match bytes.as_deref().map(decode_message) {
            Ok(Ok(Message::State(back))) if back == frame => {}
            _ => v.problems.push(format!("frame {n}: does not re-encode canonically")),
        }
        checker.check(&frame, &mut v.problems);
        last_frame = Some(n);
    }
    if let (Some(end), Some(last)) = (reader.end(), last_frame) {
        let skip = u32::from(setup.frame_skip.max(1));
        if end.final_frame <= last || end.final_frame > last.saturating_add(skip) {
            v.problems.push(format!("END final_frame {} does not follow frame {last}", end.final_frame));
        }
    }
    v
}

/// Cross-frame plausibility checks.
struct Continuity<'a> {
    setup: &'a Setup,
    prev_number: Option<u32>,
    /// Last observation of each unit: (frame number, state).
    last_seen: BTreeMap<UnitId, (u32, UnitState)>,
    seen_myself: BTreeSet<UnitId>,
    seen_enemy: BTreeSet<UnitId>,
}

impl<'a> Continuity<'a> {
    fn new(setup: &'a Setup) -> Self {
        Continuity {
            setup,
            prev_number: None,
            last_seen: BTreeMap::new(),
            seen_myself: BTreeSet::new(),
            seen_enemy: BTreeSet::new(),
        }
    }

    fn check(&mut self, frame: &Frame, problems: &mut Vec<String>) {
        let n = frame.frame_number;
        let skip = u32::from(self.setup.frame_skip.max(1));
        let first = self.prev_number.is_none();
        if let Some(p) = self.prev_number {
            if n != p.wrapping_add(skip) {
                problems.push(format!("frame {n}: expected frame number {}", p.wrapping_add(skip)));
            }
        }
        self.prev_number = Some(n);

        for id in frame.units_myself.keys() {
            if !first && !self.seen_myself.contains(id) {
                problems.push(format!("frame {n}: unit {id} of ours appeared mid-match"));
            }
        }
        if !self.setup.fog {
            // without fog every enemy is visible from the first frame on
            for id in frame.units_enemy.keys() {
                if !first && !self.seen_enemy.contains(id) {
                    problems.push(format!("frame {n}: enemy unit {id} appeared mid-match without fog"));
                }
            }
        }
        self.seen_myself.extend(frame.units_myself.keys());
        self.seen_enemy.extend(frame.units_enemy.keys());

        for u in frame.units_myself.values().chain(frame.units_enemy.values()) {
            let mut bad = |what: &str| problems.push(format!("frame {n}: unit {}: {what}", u.id));
            let opposing = if u.enemy { &self.seen_myself } else { &self.seen_enemy };
            if u.target != -1 && !opposing.contains(&(u.target as UnitId)) {
                bad("targets a unit never observed");
            }
            if u.idle && (u.target != -1 || u.targetpos != Position::default()) {
                bad("idle with an active order");
            }
            if u.target != -1 && u.targetpos != Position::default() {
                bad("attack order with a move target");
            }
            let Some(spec) = roster::lookup(&self.setup.roster, u.unit_type) else {
                continue;
            };
            let (g, a) = (spec.ground_weapon, spec.air_weapon);
            let expected = [
                u.armor == spec.armor,
                u.size == UNIT_SIZE,
                u.energy == spec.max_energy,
                u.gwtype == i32::from(g.is_present()),
                u.awtype == i32::from(a.is_present()),
                (u.gwattack, u.gwrange) == (g.damage, g.range),
                (u.awattack, u.awrange) == (a.damage, a.range),
            ];
            if expected.contains(&false) {
                bad("static stats differ from the roster");
            }
            if let Some((then, old)) = self.last_seen.get(&u.id) {
                let elapsed = i64::from(n.wrapping_sub(*then));
                if old.unit_type != u.unit_type {
                    bad("changed type");
                }
                if old.enemy != u.enemy {
                    bad("changed sides");
                }
                if u.hp > old.hp || u.shield > old.shield {
                    bad("regained hp or shield");
                }
                // each tick moves at most speed + 1 fixed-point units; pixel flooring adds < 2
                let reach = elapsed.saturating_mul(i64::from(spec.speed_fp) + 1) / 256 + 2;
                if old.position.squared_distance(u.position) > reach.saturating_mul(reach) {
                    bad("moved faster than its speed");
                }
                if elapsed == i64::from(skip) {
                    let cd_ok = |before: i32, now: i32, constant: i32| {
                        let s = skip as i32;
                        now == before.saturating_sub(s).max(0) || (now > constant.saturating_sub(s) && now <= constant)
                    };
                    if !cd_ok(old.gwcd, u.gwcd, g.cooldown) || !cd_ok(old.awcd, u.awcd, a.cooldown) {
                        bad("cooldown out of sequence");
                    }
                }
            }
            self.last_seen.insert(u.id, (n, u.clone()));
        }
    }
}
