//! Per-player observations: the unit record, the frame, its validator and the
//! fog-of-war visibility query.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::roster::{self, UnitTypeSpec};
use crate::{PlayerId, UnitId};

/// Pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Position {
    pub x: i32,
    pub y: i32,
}

impl Position {
    pub const fn new(x: i32, y: i32) -> Self {
        Position { x, y }
    }

    pub fn squared_distance(self, other: Position) -> i64 {
        let dx = i64::from(self.x) - i64::from(other.x);
        let dy = i64::from(self.y) - i64::from(other.y);
        // saturates for coordinates far outside any map
        dx.saturating_mul(dx).saturating_add(dy.saturating_mul(dy))
    }
}

/// Number of serialized fields following the id of a unit record.
pub const FIELD_COUNT: usize = 20;

/// Names of the serialized fields, in wire order.
pub const FIELD_NAMES: [&str; FIELD_COUNT] = [
    "type", "x", "y", "hp", "shield", "energy", "armor", "size", "gwtype", "awtype", "gwcd",
    "awcd", "gwattack", "awattack", "gwrange", "awrange", "idle", "target", "target_x",
    "target_y",
];

/// Observable record of one unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitState {
    pub id: UnitId,
    pub unit_type: i32,
    pub position: Position,
    pub hp: i32,
    pub shield: i32,
    pub energy: i32,
    pub armor: i32,
    pub size: i32,
    pub gwtype: i32,
    pub awtype: i32,
    pub gwcd: i32,
    pub awcd: i32,
    pub gwattack: i32,
    pub awattack: i32,
    pub gwrange: i32,
    pub awrange: i32,
    pub idle: bool,
    /// Unit being attacked, or -1.
    pub target: i32,
    /// Goal of an active move order, else (0,0).
    pub targetpos: Position,
    pub enemy: bool,
}

/// A field value outside its domain, e.g. `idle` not 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BadField {
    pub index: usize,
    pub value: i32,
}

impl UnitState {
    /// The twenty serialized fields in wire order.
    pub fn fields(&self) -> [i32; FIELD_COUNT] {
        [
            self.unit_type,
            self.position.x,
            self.position.y,
            self.hp,
            self.shield,
            self.energy,
            self.armor,
            self.size,
            self.gwtype,
            self.awtype,
            self.gwcd,
            self.awcd,
            self.gwattack,
            self.awattack,
            self.gwrange,
            self.awrange,
            i32::from(self.idle),
            self.target,
            self.targetpos.x,
            self.targetpos.y,
        ]
    }

    pub fn from_fields(id: UnitId, f: &[i32; FIELD_COUNT], enemy: bool) -> Result<Self, BadField> {
        let idle = match f[16] {
            0 => false,
            1 => true,
            value => return Err(BadField { index: 16, value }),
        };
        Ok(UnitState {
            id,
            unit_type: f[0],
            position: Position::new(f[1], f[2]),
            hp: f[3],
            shield: f[4],
            energy: f[5],
            armor: f[6],
            size: f[7],
            gwtype: f[8],
            awtype: f[9],
            gwcd: f[10],
            awcd: f[11],
            gwattack: f[12],
            awattack: f[13],
            gwrange: f[14],
            awrange: f[15],
            idle,
            target: f[17],
            targetpos: Position::new(f[18], f[19]),
            enemy,
        })
    }
}

/// What one player sees at one tick.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Frame {
    pub frame_number: u32,
    pub units_myself: BTreeMap<UnitId, UnitState>,
    pub units_enemy: BTreeMap<UnitId, UnitState>,
}

impl Frame {
    pub fn new(frame_number: u32) -> Self {
        Frame { frame_number, ..Default::default() }
    }

    /// Inserts into the group selected by `unit.enemy`.
    pub fn insert(&mut self, unit: UnitState) {
        let group = if unit.enemy { &mut self.units_enemy } else { &mut self.units_myself };
        group.insert(unit.id, unit);
    }

    pub fn unit(&self, id: UnitId) -> Option<&UnitState> {
        self.units_myself.get(&id).or_else(|| self.units_enemy.get(&id))
    }

    pub fn len(&self) -> usize {
        self.units_myself.len() + self.units_enemy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One broken frame invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Offending unit, or `None` for frame-level problems.
    pub unit: Option<UnitId>,
    pub field: &'static str,
    pub problem: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            Some(id) => write!(f, "unit {}: {} {}", id, self.field, self.problem),
            None => write!(f, "frame: {} {}", self.field, self.problem),
        }
    }
}

/// Checks every frame and unit invariant against the map bounds and roster.
/// An empty result means the frame is valid.
pub fn validate_frame(frame: &Frame, map_w: u32, map_h: u32, roster: &[UnitTypeSpec]) -> Vec<Violation> {
    let mut out = Vec::new();
    let w = i64::from(map_w);
    let h = i64::from(map_h);

    for (group, enemy) in [(&frame.units_myself, false), (&frame.units_enemy, true)] {
        for (&key, u) in group {
            let mut bad = |field: &'static str, problem: &str| {
                out.push(Violation { unit: Some(u.id), field, problem: problem.into() })
            };
            if key != u.id {
                bad("id", "does not match its map key");
            }
            if u.enemy != enemy {
                bad("enemy", "disagrees with the group it is reported in");
            }
            if enemy && frame.units_myself.contains_key(&key) {
                bad("id", "appears in both units_myself and units_enemy");
            }
            let (x, y) = (i64::from(u.position.x), i64::from(u.position.y));
            if x < 0 || x >= w {
                bad("x", "out of bounds");
            }
            if y < 0 || y >= h {
                bad("y", "out of bounds");
            }
            let nonneg = [
                ("hp", u.hp),
                ("shield", u.shield),
                ("energy", u.energy),
                ("armor", u.armor),
                ("gwcd", u.gwcd),
                ("awcd", u.awcd),
                ("gwattack", u.gwattack),
                ("awattack", u.awattack),
                ("gwrange", u.gwrange),
                ("awrange", u.awrange),
            ];
            for (field, v) in nonneg {
                if v < 0 {
                    bad(field, "is negative");
                }
            }
            if !(0..=1).contains(&u.gwtype) {
                bad("gwtype", "is not a known weapon class");
            }
            if !(0..=1).contains(&u.awtype) {
                bad("awtype", "is not a known weapon class");
            }
            if !((u.gwtype == 0) == (u.gwattack == 0) && (u.gwattack == 0) == (u.gwrange == 0)) {
                bad("gwtype", "inconsistent with gwattack/gwrange");
            }
            if !((u.awtype == 0) == (u.awattack == 0) && (u.awattack == 0) == (u.awrange == 0)) {
                bad("awtype", "inconsistent with awattack/awrange");
            }
            if u.target < -1 {
                bad("target", "is neither -1 nor a unit id");
            }
            if u.idle && u.target != -1 {
                bad("target", "set on an idle unit");
            }
            if u.targetpos != Position::default() {
                let (tx, ty) = (i64::from(u.targetpos.x), i64::from(u.targetpos.y));
                if tx < 0 || tx >= w || ty < 0 || ty >= h {
                    bad("targetpos", "out of bounds");
                }
            }
            match roster::lookup(roster, u.unit_type) {
                None => bad("type", "unknown unit type"),
                Some(spec) => {
                    if u.hp > spec.max_hp {
                        bad("hp", "exceeds max_hp");
                    }
                    if u.shield > spec.max_shield {
                        bad("shield", "exceeds max_shield");
                    }
                    if u.energy > spec.max_energy {
                        bad("energy", "exceeds max_energy");
                    }
                    if u.gwcd > spec.ground_weapon.cooldown {
                        bad("gwcd", "exceeds ground cooldown");
                    }
                    if u.awcd > spec.air_weapon.cooldown {
                        bad("awcd", "exceeds air cooldown");
                    }
                }
            }
        }
    }
    out
}

/// Minimal positional record used by the visibility query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sighting {
    pub owner: PlayerId,
    pub id: UnitId,
    pub unit_type: i32,
    pub position: Position,
}

/// Opposing units `observer` can see. With fog disabled that is every
/// opposing unit; with fog, a unit is visible when some observer-owned unit
/// has it within its sight range.
pub fn visible_enemies(
    units: &[Sighting],
    observer: PlayerId,
    roster: &[UnitTypeSpec],
    fog: bool,
) -> BTreeSet<UnitId> {
    let opposing = units.iter().filter(|u| u.owner != observer);
    if !fog {
        return opposing.map(|u| u.id).collect();
    }
    let eyes: Vec<(Position, i64)> = units
        .iter()
        .filter(|u| u.owner == observer)
        .filter_map(|u| {
            let sight = i64::from(roster::lookup(roster, u.unit_type)?.sight_range);
            Some((u.position, sight * sight))
        })
        .collect();
    opposing
        .filter(|e| eyes.iter().any(|&(p, r2)| p.squared_distance(e.position) <= r2))
        .map(|u| u.id)
        .collect()
}
