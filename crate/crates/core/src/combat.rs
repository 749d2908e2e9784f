//! Movement and damage primitives. All arithmetic is integer.

use crate::engine::SimUnit;
use crate::frame::Position;
use crate::roster::{self, UnitTypeSpec};

/// Fixed-point coordinates in 1/256 pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FixedPos {
    pub x: i64,
    pub y: i64,
}

pub const FP_SHIFT: u32 = 8;
pub const FP_ONE: i64 = 1 << FP_SHIFT;

impl FixedPos {
    pub const fn new(x: i64, y: i64) -> Self {
        FixedPos { x, y }
    }

    /// Center of the given pixel.
    pub fn pixel_center(p: Position) -> Self {
        FixedPos::new(
            (i64::from(p.x) << FP_SHIFT) + FP_ONE / 2,
            (i64::from(p.y) << FP_SHIFT) + FP_ONE / 2,
        )
    }

    /// Floor to whole pixels.
    pub fn to_pixels(self) -> Position {
        Position::new((self.x >> FP_SHIFT) as i32, (self.y >> FP_SHIFT) as i32)
    }
}

/// Integer square root (floor).
pub fn isqrt(n: u64) -> u64 {
    n.isqrt()
}

/// Advances `pos` toward the center of pixel `target` by at most `speed_fp`,
/// landing exactly on the target when it is within reach. The result is
/// clamped to the `map_w` x `map_h` pixel area.
pub fn move_toward(pos: FixedPos, target: Position, speed_fp: i32, map_w: u32, map_h: u32) -> FixedPos {
    let goal = FixedPos::pixel_center(target);
    let dx = goal.x - pos.x;
    let dy = goal.y - pos.y;
    let speed = i64::from(speed_fp.max(0));
    let d2 = (dx * dx + dy * dy) as u64;
    let next = if d2 <= (speed * speed) as u64 {
        goal
    } else {
        let dist = isqrt(d2) as i64;
        FixedPos::new(pos.x + dx * speed / dist, pos.y + dy * speed / dist)
    };
    clamp(next, map_w, map_h)
}

fn clamp(p: FixedPos, map_w: u32, map_h: u32) -> FixedPos {
    let max_x = (i64::from(map_w) << FP_SHIFT) - 1;
    let max_y = (i64::from(map_h) << FP_SHIFT) - 1;
    FixedPos::new(p.x.clamp(0, max_x.max(0)), p.y.clamp(0, max_y.max(0)))
}

/// Splits raw weapon damage between shield and hit points. Shields soak raw
/// damage first; armor reduces what gets through, but any damage that
/// reaches hit points removes at least one.
pub fn damage_split(raw: i32, shield: i32, armor: i32) -> (i32, i32) {
    let to_shield = shield.min(raw).max(0);
    let leftover = raw - to_shield;
    let to_hp = if leftover == 0 { 0 } else { (leftover - armor).max(1) };
    (to_shield, to_hp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeaponSlot {
    Ground,
    Air,
}

/// Outcome of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hit {
    pub weapon: WeaponSlot,
    pub shield_damage: i32,
    pub hp_damage: i32,
    /// Cooldown the attacker's weapon resets to.
    pub cooldown: i32,
}

/// Weapon `attacker_type` would use against `target_type`, with its slot.
pub fn select_weapon<'a>(
    attacker_type: &'a UnitTypeSpec,
    target_type: &UnitTypeSpec,
) -> (WeaponSlot, &'a roster::Weapon) {
    if target_type.flyer {
        (WeaponSlot::Air, &attacker_type.air_weapon)
    } else {
        (WeaponSlot::Ground, &attacker_type.ground_weapon)
    }
}

/// Damage `attacker` deals to `target` with the weapon matching the target's
/// class. Returns `None` when the attacker has no such weapon, the weapon is
/// cooling down, or the target is out of range.
pub fn resolve_attack(attacker: &SimUnit, target: &SimUnit, roster: &[UnitTypeSpec]) -> Option<Hit> {
    let a_spec = roster::lookup(roster, i32::from(attacker.unit_type))?;
    let t_spec = roster::lookup(roster, i32::from(target.unit_type))?;
    let (slot, weapon) = select_weapon(a_spec, t_spec);
    if !weapon.is_present() {
        return None;
    }
    let cd = match slot {
        WeaponSlot::Ground => attacker.gwcd,
        WeaponSlot::Air => attacker.awcd,
    };
    let range = i64::from(weapon.range);
    if cd != 0 || attacker.position().squared_distance(target.position()) > range * range {
        return None;
    }
    let (shield_damage, hp_damage) = damage_split(weapon.damage, target.shield, t_spec.armor);
    Some(Hit { weapon: slot, shield_damage, hp_damage, cooldown: weapon.cooldown })
}
