//! Client-side rule helpers and the reference scripted policies.

use alloc::vec::Vec;

use thiserror::Error;

use crate::codec::Command;
use crate::frame::{Frame, Position, UnitState};
use crate::roster::{self, UnitTypeSpec};
use crate::UnitId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("unit {0} is not one of ours in this frame")]
pub struct UnknownUnit(pub UnitId);

pub fn squared_distance(a: Position, b: Position) -> i64 {
    a.squared_distance(b)
}

/// Damage and range of the weapon `attacker` would use on `target`, or
/// `None` when it has no such weapon.
fn weapon_for(attacker: &UnitState, target: &UnitState, roster: &[UnitTypeSpec]) -> Option<(i32, i32)> {
    let flyer = roster::lookup(roster, target.unit_type)?.flyer;
    let (damage, range) =
        if flyer { (attacker.awattack, attacker.awrange) } else { (attacker.gwattack, attacker.gwrange) };
    (damage > 0).then_some((damage, range))
}

/// Whether `attacker` carries a weapon able to damage `target` at all.
pub fn can_hit(attacker: &UnitState, target: &UnitState, roster: &[UnitTypeSpec]) -> bool {
    weapon_for(attacker, target, roster).is_some()
}

/// Whether `target` is within reach of the matching weapon right now.
pub fn in_range(attacker: &UnitState, target: &UnitState, roster: &[UnitTypeSpec]) -> bool {
    weapon_for(attacker, target, roster).is_some_and(|(_, range)| {
        let r = i64::from(range);
        squared_distance(attacker.position, target.position) <= r * r
    })
}

/// Nearest visible enemy of our unit `unit_id`; ties go to the lower id.
pub fn closest_enemy(frame: &Frame, unit_id: UnitId) -> Result<Option<UnitId>, UnknownUnit> {
    let me = frame.units_myself.get(&unit_id).ok_or(UnknownUnit(unit_id))?;
    // units_enemy iterates in ascending id, and min_by_key keeps the first minimum
    Ok(frame
        .units_enemy
        .values()
        .min_by_key(|e| squared_distance(me.position, e.position))
        .map(|e| e.id))
}

/// Scripted behaviours shared by the server's builtin opponents and the bot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Never issues a command.
    Idle,
    /// Every unit attacks its closest visible enemy, re-evaluated each frame.
    AttackClosest,
}

impl Policy {
    pub fn commands(&self, frame: &Frame) -> Vec<Command> {
        match self {
            Policy::Idle => Vec::new(),
            Policy::AttackClosest => attack_closest(frame),
        }
    }
}

pub fn attack_closest(frame: &Frame) -> Vec<Command> {
    frame
        .units_myself
        .keys()
        .filter_map(|&unit| {
            let target = closest_enemy(frame, unit).ok().flatten()?;
            Some(Command::Attack { unit, target })
        })
        .collect()
}
