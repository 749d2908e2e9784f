//! Frame-to-frame deltas used by replay files.
//!
//! Payload layout (tag 0x09), all little-endian:
//!
//! ```text
//! u8  tag
//! u32 base frame_number
//! u32 new frame_number
//! u16 removed count + u32 ids      (myself)
//! u16 removed count + u32 ids      (enemy)
//! u16 patch count + patches        (myself)
//! u16 patch count + patches        (enemy)
//! patch = u32 id, u32 field mask, one i32 per set mask bit in field order
//! ```

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::codec::{self, DecodeError, DecodeErrorKind, EncodeError, Reader};
use crate::frame::{Frame, UnitState, FIELD_COUNT, FIELD_NAMES};
use crate::UnitId;

pub const TAG_DELTA: u8 = 0x09;
/// Mask selecting all twenty fields; marks a unit absent from the base.
pub const FULL_MASK: u32 = (1 << FIELD_COUNT) - 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitPatch {
    pub id: UnitId,
    pub mask: u32,
    /// Values of the masked fields, in field order.
    pub values: Vec<i32>,
}

/// Changes within one unit group.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupDelta {
    pub removed: Vec<UnitId>,
    pub patches: Vec<UnitPatch>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameDelta {
    pub base_frame: u32,
    pub new_frame: u32,
    pub myself: GroupDelta,
    pub enemy: GroupDelta,
}

impl FrameDelta {
    pub fn is_identity(&self) -> bool {
        self.myself == GroupDelta::default() && self.enemy == GroupDelta::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DeltaError {
    #[error("delta base frame {delta} does not match frame {frame}")]
    BaseMismatch { frame: u32, delta: u32 },
    #[error("unit {0} is not in the base frame")]
    UnknownUnit(UnitId),
    #[error("unit {0}: mask has bits outside the 20 fields")]
    BadMask(UnitId),
    #[error("unit {0}: mask and value count differ")]
    ValueCount(UnitId),
    #[error("unit {id}: invalid {field}")]
    BadField { id: UnitId, field: &'static str },
}

fn diff_group(prev: &BTreeMap<UnitId, UnitState>, next: &BTreeMap<UnitId, UnitState>) -> GroupDelta {
    let removed = prev.keys().filter(|id| !next.contains_key(id)).copied().collect();
    let mut patches = Vec::new();
    for (&id, u) in next {
        let new = u.fields();
        let (mask, values) = match prev.get(&id) {
            None => (FULL_MASK, new.to_vec()),
            Some(old) => {
                let old = old.fields();
                let mut mask = 0;
                let mut values = Vec::new();
                for i in 0..FIELD_COUNT {
                    if old[i] != new[i] {
                        mask |= 1 << i;
                        values.push(new[i]);
                    }
                }
                (mask, values)
            }
        };
        if mask != 0 {
            patches.push(UnitPatch { id, mask, values });
        }
    }
    GroupDelta { removed, patches }
}

/// Smallest delta turning `prev` into `next`.
pub fn delta_encode(prev: &Frame, next: &Frame) -> FrameDelta {
    FrameDelta {
        base_frame: prev.frame_number,
        new_frame: next.frame_number,
        myself: diff_group(&prev.units_myself, &next.units_myself),
        enemy: diff_group(&prev.units_enemy, &next.units_enemy),
    }
}

fn apply_group(
    group: &mut BTreeMap<UnitId, UnitState>,
    d: &GroupDelta,
    enemy: bool,
) -> Result<(), DeltaError> {
    for id in &d.removed {
        group.remove(id).ok_or(DeltaError::UnknownUnit(*id))?;
    }
    for p in &d.patches {
        if p.mask & !FULL_MASK != 0 {
            return Err(DeltaError::BadMask(p.id));
        }
        if p.values.len() != p.mask.count_ones() as usize {
            return Err(DeltaError::ValueCount(p.id));
        }
        let mut fields = match group.get(&p.id) {
            Some(u) => u.fields(),
            None if p.mask == FULL_MASK => [0; FIELD_COUNT],
            None => return Err(DeltaError::UnknownUnit(p.id)),
        };
        let mut vals = p.values.iter();
        for (i, f) in fields.iter_mut().enumerate() {
            if p.mask & (1 << i) != 0 {
                *f = *vals.next().expect("length checked");
            }
        }
        let unit = UnitState::from_fields(p.id, &fields, enemy)
            .map_err(|b| DeltaError::BadField { id: p.id, field: FIELD_NAMES[b.index] })?;
        group.insert(p.id, unit);
    }
    Ok(())
}

/// Rebuilds the successor of `prev` described by `d`.
pub fn delta_apply(prev: &Frame, d: &FrameDelta) -> Result<Frame, DeltaError> {
    if d.base_frame != prev.frame_number {
        return Err(DeltaError::BaseMismatch { frame: prev.frame_number, delta: d.base_frame });
    }
    let mut next = prev.clone();
    next.frame_number = d.new_frame;
    apply_group(&mut next.units_myself, &d.myself, false)?;
    apply_group(&mut next.units_enemy, &d.enemy, true)?;
    Ok(next)
}

pub fn encode_delta(d: &FrameDelta) -> Result<Vec<u8>, EncodeError> {
    let mut out = alloc::vec![TAG_DELTA];
    out.extend_from_slice(&d.base_frame.to_le_bytes());
    out.extend_from_slice(&d.new_frame.to_le_bytes());
    for g in [&d.myself, &d.enemy] {
        let n = u16::try_from(g.removed.len()).map_err(|_| EncodeError::TooManyUnits(g.removed.len()))?;
        out.extend_from_slice(&n.to_le_bytes());
        for id in &g.removed {
            out.extend_from_slice(&id.to_le_bytes());
        }
    }
    for g in [&d.myself, &d.enemy] {
        let n = u16::try_from(g.patches.len()).map_err(|_| EncodeError::TooManyUnits(g.patches.len()))?;
        out.extend_from_slice(&n.to_le_bytes());
        for p in &g.patches {
            out.extend_from_slice(&p.id.to_le_bytes());
            out.extend_from_slice(&p.mask.to_le_bytes());
            for v in &p.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

fn read_ids(r: &mut Reader<'_>) -> Result<Vec<UnitId>, DecodeError> {
    let n = r.u16()? as usize;
    r.expect_records(n, 4)?;
    let mut ids: Vec<UnitId> = Vec::with_capacity(n);
    for _ in 0..n {
        let at = r.offset();
        let id = r.u32()?;
        if ids.last().is_some_and(|&l| id <= l) {
            return Err(DecodeError { offset: at, kind: DecodeErrorKind::UnsortedIds });
        }
        ids.push(id);
    }
    Ok(ids)
}

fn read_patches(r: &mut Reader<'_>) -> Result<Vec<UnitPatch>, DecodeError> {
    let n = r.u16()? as usize;
    r.expect_records(n, 8)?;
    let mut patches: Vec<UnitPatch> = Vec::with_capacity(n);
    for _ in 0..n {
        let at = r.offset();
        let id = r.u32()?;
        if patches.last().is_some_and(|l| id <= l.id) {
            return Err(DecodeError { offset: at, kind: DecodeErrorKind::UnsortedIds });
        }
        let mask_at = r.offset();
        let mask = r.u32()?;
        if mask == 0 || mask & !FULL_MASK != 0 {
            return Err(DecodeError { offset: mask_at, kind: DecodeErrorKind::BadValue("field mask") });
        }
        let k = mask.count_ones() as usize;
        r.expect_records(k, 4)?;
        let values = (0..k).map(|_| r.i32()).collect::<Result<_, _>>()?;
        patches.push(UnitPatch { id, mask, values });
    }
    Ok(patches)
}

/// Decodes a DELTA payload, tag included.
pub fn decode_delta(payload: &[u8]) -> Result<FrameDelta, DecodeError> {
    let mut r = Reader::new(payload);
    let tag = r.u8()?;
    if tag != TAG_DELTA {
        return Err(DecodeError { offset: 0, kind: DecodeErrorKind::UnknownTag(tag) });
    }
    let base_frame = r.u32()?;
    let new_frame = r.u32()?;
    let removed_myself = read_ids(&mut r)?;
    let removed_enemy = read_ids(&mut r)?;
    let patches_myself = read_patches(&mut r)?;
    let patches_enemy = read_patches(&mut r)?;
    r.finish()?;
    Ok(FrameDelta {
        base_frame,
        new_frame,
        myself: GroupDelta { removed: removed_myself, patches: patches_myself },
        enemy: GroupDelta { removed: removed_enemy, patches: patches_enemy },
    })
}

/// Encoded size a full STATE of `f` would take; used to compare against deltas.
pub fn state_len(f: &Frame) -> usize {
    1 + 4 + 2 + 2 + codec::UNIT_RECORD_LEN * f.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Position;

    fn unit(id: UnitId, x: i32, enemy: bool) -> UnitState {
        UnitState {
            id,
            unit_type: 0,
            position: Position::new(x, 10),
            hp: 40,
            shield: 0,
            energy: 0,
            armor: 0,
            size: 1,
            gwtype: 1,
            awtype: 1,
            gwcd: 0,
            awcd: 0,
            gwattack: 6,
            awattack: 6,
            gwrange: 128,
            awrange: 128,
            idle: true,
            target: -1,
            targetpos: Position::default(),
            enemy,
        }
    }

    fn frame(n: u32, units: &[UnitState]) -> Frame {
        let mut f = Frame::new(n);
        for u in units {
            f.insert(u.clone());
        }
        f
    }

    #[test]
    fn identical_frames_give_empty_delta() {
        let a = frame(0, &[unit(0, 5, false), unit(1, 9, true)]);
        let mut b = a.clone();
        b.frame_number = 1;
        let d = delta_encode(&a, &b);
        assert!(d.is_identity());
        assert_eq!(delta_apply(&a, &d).unwrap(), b);
    }

    #[test]
    fn single_field_change() {
        let a = frame(0, &[unit(0, 5, false)]);
        let b = frame(1, &[unit(0, 10, false)]);
        let d = delta_encode(&a, &b);
        assert_eq!(d.myself.patches, [UnitPatch { id: 0, mask: 1 << 1, values: alloc::vec![10] }]);
        assert!(d.myself.removed.is_empty());
    }

    #[test]
    fn death_is_a_removal() {
        let a = frame(0, &[unit(0, 5, false), unit(1, 9, true)]);
        let b = frame(1, &[unit(0, 5, false)]);
        let d = delta_encode(&a, &b);
        assert_eq!(d.enemy.removed, [1]);
        assert!(d.myself.patches.is_empty() && d.enemy.patches.is_empty());
        assert_eq!(delta_apply(&a, &d).unwrap(), b);
    }

    #[test]
    fn new_unit_uses_full_mask() {
        let a = frame(0, &[]);
        let b = frame(1, &[unit(4, 5, true)]);
        let d = delta_encode(&a, &b);
        assert_eq!(d.enemy.patches[0].mask, FULL_MASK);
        assert_eq!(delta_apply(&a, &d).unwrap(), b);
    }

    #[test]
    fn corrupt_deltas() {
        let a = frame(3, &[unit(0, 5, false)]);
        let partial = FrameDelta {
            base_frame: 3,
            new_frame: 4,
            myself: GroupDelta {
                removed: alloc::vec![],
                patches: alloc::vec![UnitPatch { id: 9, mask: 2, values: alloc::vec![1] }],
            },
            enemy: GroupDelta::default(),
        };
        assert_eq!(delta_apply(&a, &partial), Err(DeltaError::UnknownUnit(9)));
        let mut wrong_base = partial.clone();
        wrong_base.base_frame = 2;
        assert!(matches!(delta_apply(&a, &wrong_base), Err(DeltaError::BaseMismatch { .. })));
        let removal = FrameDelta {
            myself: GroupDelta { removed: alloc::vec![5], patches: alloc::vec![] },
            ..partial
        };
        assert_eq!(delta_apply(&a, &removal), Err(DeltaError::UnknownUnit(5)));
    }

    #[test]
    fn wire_round_trip() {
        let a = frame(0, &[unit(0, 5, false), unit(2, 9, true)]);
        let b = frame(1, &[unit(0, 6, false), unit(3, 1, true)]);
        let d = delta_encode(&a, &b);
        let bytes = encode_delta(&d).unwrap();
        assert_eq!(decode_delta(&bytes).unwrap(), d);
        assert!(decode_delta(&bytes[..bytes.len() - 1]).is_err());
        assert!(bytes.len() < state_len(&b));
    }
}
