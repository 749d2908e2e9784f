//! Unit type table shared by the engine, the codec and client-side rules.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

/// One weapon slot. A weapon with zero damage is absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Weapon {
    pub damage: i32,
    /// Maximum reach in pixels, compared against squared pixel distance.
    pub range: i32,
    /// Ticks between two shots.
    pub cooldown: i32,
}

impl Weapon {
    pub const NONE: Weapon = Weapon { damage: 0, range: 0, cooldown: 0 };

    pub const fn new(damage: i32, range: i32, cooldown: i32) -> Self {
        Weapon { damage, range, cooldown }
    }

    pub fn is_present(&self) -> bool {
        self.damage > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitTypeSpec {
    pub type_id: u8,
    pub name: String,
    pub max_hp: i32,
    pub max_shield: i32,
    pub max_energy: i32,
    pub armor: i32,
    /// Pixels per tick in 1/256 pixel units.
    pub speed_fp: i32,
    pub sight_range: i32,
    pub flyer: bool,
    pub ground_weapon: Weapon,
    pub air_weapon: Weapon,
}

/// Size class reported for every unit. Carried opaquely on the wire.
pub const UNIT_SIZE: i32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RosterError {
    #[error("type {type_id}: {what}")]
    Invalid { type_id: u8, what: &'static str },
    #[error("duplicate type id {0}")]
    Duplicate(u8),
    #[error("line {line}: {what}")]
    Parse { line: usize, what: String },
}

impl UnitTypeSpec {
    /// The weapon used against `target`: air weapons hit flyers, ground weapons
    /// hit everything else.
    pub fn weapon_against(&self, target: &UnitTypeSpec) -> &Weapon {
        if target.flyer {
            &self.air_weapon
        } else {
            &self.ground_weapon
        }
    }

    pub fn validate(&self) -> Result<(), RosterError> {
        let bad = |what| Err(RosterError::Invalid { type_id: self.type_id, what });
        if self.max_hp <= 0 {
            return bad("max_hp must be positive");
        }
        if self.max_shield < 0 || self.max_energy < 0 || self.armor < 0 {
            return bad("negative stat");
        }
        if self.speed_fp < 0 {
            return bad("negative speed");
        }
        if self.sight_range <= 0 {
            return bad("sight range must be positive");
        }
        for w in [&self.ground_weapon, &self.air_weapon] {
            if w.damage < 0 || w.range < 0 || w.cooldown < 0 {
                return bad("negative weapon stat");
            }
            if w.damage == 0 && (w.range != 0 || w.cooldown != 0) {
                return bad("weapon without damage must have zero range and cooldown");
            }
            // a present weapon with zero range would report gwtype != 0 with gwrange == 0
            if w.damage > 0 && w.range == 0 {
                return bad("weapon with damage must have positive range");
            }
        }
        Ok(())
    }
}

/// Checks every entry and rejects duplicate type ids.
pub fn validate_roster(roster: &[UnitTypeSpec]) -> Result<(), RosterError> {
    for (i, spec) in roster.iter().enumerate() {
        spec.validate()?;
        if roster[..i].iter().any(|o| o.type_id == spec.type_id) {
            return Err(RosterError::Duplicate(spec.type_id));
        }
    }
    Ok(())
}

pub fn lookup(roster: &[UnitTypeSpec], type_id: i32) -> Option<&UnitTypeSpec> {
    roster.iter().find(|t| i32::from(t.type_id) == type_id)
}

pub const TROOPER: u8 = 0;
pub const BLADE: u8 = 1;
pub const HAWK: u8 = 2;

/// The three-type roster used when no roster file is supplied: a ranged
/// ground unit, a shielded melee unit and a flyer.
pub fn default_roster() -> Vec<UnitTypeSpec> {
    alloc::vec![
        UnitTypeSpec {
            type_id: TROOPER,
            name: "trooper".to_string(),
            max_hp: 40,
            max_shield: 0,
            max_energy: 0,
            armor: 0,
            speed_fp: 256,
            sight_range: 256,
            flyer: false,
            ground_weapon: Weapon::new(6, 128, 15),
            air_weapon: Weapon::new(6, 128, 15),
        },
        UnitTypeSpec {
            type_id: BLADE,
            name: "blade".to_string(),
            max_hp: 80,
            max_shield: 20,
            max_energy: 0,
            armor: 1,
            speed_fp: 320,
            sight_range: 224,
            flyer: false,
            ground_weapon: Weapon::new(8, 16, 14),
            air_weapon: Weapon::NONE,
        },
        UnitTypeSpec {
            type_id: HAWK,
            name: "hawk".to_string(),
            max_hp: 60,
            max_shield: 0,
            max_energy: 0,
            armor: 0,
            speed_fp: 384,
            sight_range: 288,
            flyer: true,
            ground_weapon: Weapon::new(7, 160, 20),
            air_weapon: Weapon::new(7, 160, 20),
        },
    ]
}

/// Parses the line-oriented roster format:
///
/// ```text
/// type <id> <name> <max_hp> <max_shield> <max_energy> <armor> <speed_fp> <sight> <flyer:0|1> <gdmg> <grange> <gcd> <admg> <arange> <acd>
/// ```
///
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_roster(text: &str) -> Result<Vec<UnitTypeSpec>, RosterError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |what: &str| RosterError::Parse { line, what: what.to_string() };
        let tok: Vec<&str> = trimmed.split_whitespace().collect();
        if tok[0] != "type" {
            return Err(err("expected `type`"));
        }
        if tok.len() != 16 {
            return Err(err("expected 15 fields after `type`"));
        }
        let type_id: u8 = tok[1].parse().map_err(|_| err("bad type id"))?;
        let mut nums = [0i32; 13];
        for (slot, t) in nums.iter_mut().zip(&tok[3..]) {
            *slot = t.parse().map_err(|_| err("bad integer"))?;
        }
        let flyer = match nums[6] {
            0 => false,
            1 => true,
            _ => return Err(err("flyer must be 0 or 1")),
        };
        let spec = UnitTypeSpec {
            type_id,
            name: tok[2].to_string(),
            max_hp: nums[0],
            max_shield: nums[1],
            max_energy: nums[2],
            armor: nums[3],
            speed_fp: nums[4],
            sight_range: nums[5],
            flyer,
            ground_weapon: Weapon::new(nums[7], nums[8], nums[9]),
            air_weapon: Weapon::new(nums[10], nums[11], nums[12]),
        };
        out.push(spec);
    }
    validate_roster(&out)?;
    Ok(out)
}
