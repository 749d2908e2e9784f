//! The authoritative world and its tick function.
//!
//! A tick runs these phases in order:
//!
//! 1. weapon cooldowns tick down;
//! 2. units with a move order advance, ascending id, going idle on arrival;
//! 3. units with an attack order, ascending id, either drop a dead target,
//!    chase a target out of range, or fire when their weapon is ready;
//! 4. all shots fired this tick land together, then dead units are removed;
//! 5. the tick counter advances;
//! 6. the end condition is evaluated.
//!
//! Nothing here uses floating point, so identical inputs give identical
//! worlds on every platform.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use thiserror::Error;

use crate::codec::Command;
use crate::combat::{self, damage_split, FixedPos, WeaponSlot};
use crate::frame::{self, Frame, Position, Sighting, UnitState};
use crate::rng::RngState;
use crate::roster::{self, RosterError, UnitTypeSpec, UNIT_SIZE};
use crate::{PlayerId, UnitId};

pub const DEFAULT_MAP_SIZE: u32 = 512;
pub const DEFAULT_MAX_FRAMES: u32 = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Spawn {
    pub type_id: u8,
    pub owner: PlayerId,
    pub x: i32,
    pub y: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scenario {
    Spawns(Vec<Spawn>),
    /// `count` units of one type for player 0 at random positions in the left
    /// part of the map, mirrored through the map center for player 1.
    RandomMirror { count: u32, type_id: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameConfig {
    pub map_w: u32,
    pub map_h: u32,
    pub seed: u64,
    pub fog: bool,
    /// Ticks simulated between two observations.
    pub frame_skip: u8,
    pub max_frames: u32,
    pub roster: Vec<UnitTypeSpec>,
    pub scenario: Scenario,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            map_w: DEFAULT_MAP_SIZE,
            map_h: DEFAULT_MAP_SIZE,
            seed: 0,
            fog: false,
            frame_skip: 1,
            max_frames: DEFAULT_MAX_FRAMES,
            roster: roster::default_roster(),
            scenario: Scenario::Spawns(Vec::new()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("map must be at least 8x8 pixels")]
    MapTooSmall,
    #[error("frame_skip must be at least 1")]
    ZeroFrameSkip,
    #[error("spawn {index}: ({x}, {y}) is outside the map")]
    SpawnOutOfBounds { index: usize, x: i32, y: i32 },
    #[error("spawn {index}: owner {owner} is not 0 or 1")]
    BadOwner { index: usize, owner: PlayerId },
    #[error("unknown unit type {0}")]
    UnknownType(u8),
    #[error(transparent)]
    Roster(#[from] RosterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("the match is already over")]
    MatchOver,
    #[error("unknown player {0}")]
    UnknownPlayer(PlayerId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Order {
    #[default]
    None,
    MoveTo(Position),
    AttackUnit(UnitId),
}

/// Authoritative unit record. Static stats (armor, weapons) come from the
/// roster entry for `unit_type`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimUnit {
    pub id: UnitId,
    pub owner: PlayerId,
    pub unit_type: u8,
    pub position_fp: FixedPos,
    pub hp: i32,
    pub shield: i32,
    pub energy: i32,
    pub gwcd: i32,
    pub awcd: i32,
    pub order: Order,
}

impl SimUnit {
    pub fn position(&self) -> Position {
        self.position_fp.to_pixels()
    }

    pub fn is_idle(&self) -> bool {
        self.order == Order::None
    }

    fn sighting(&self) -> Sighting {
        Sighting {
            owner: self.owner,
            id: self.id,
            unit_type: i32::from(self.unit_type),
            position: self.position(),
        }
    }

    /// Observable record of this unit; `enemy` is from the observer's view.
    pub fn observe(&self, spec: &UnitTypeSpec, enemy: bool) -> UnitState {
        let (target, targetpos) = match self.order {
            Order::None => (-1, Position::default()),
            Order::MoveTo(p) => (-1, p),
            Order::AttackUnit(t) => (t as i32, Position::default()),
        };
        let g = spec.ground_weapon;
        let a = spec.air_weapon;
        UnitState {
            id: self.id,
            unit_type: i32::from(self.unit_type),
            position: self.position(),
            hp: self.hp,
            shield: self.shield,
            energy: self.energy,
            armor: spec.armor,
            size: UNIT_SIZE,
            gwtype: i32::from(g.is_present()),
            awtype: i32::from(a.is_present()),
            gwcd: self.gwcd,
            awcd: self.awcd,
            gwattack: g.damage,
            awattack: a.damage,
            gwrange: g.range,
            awrange: a.range,
            idle: self.is_idle(),
            target,
            targetpos,
            enemy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchResult {
    Winner(PlayerId),
    Draw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Damage {
        tick: u32,
        attacker: UnitId,
        target: UnitId,
        weapon: WeaponSlot,
        shield_damage: i32,
        hp_damage: i32,
        /// Squared pixel distance when the shot was fired.
        distance_sq: i64,
        range: i32,
    },
    Death { tick: u32, unit: UnitId, owner: PlayerId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("unknown unit")]
    UnknownUnit,
    #[error("not owner")]
    NotOwner,
    #[error("out of bounds")]
    OutOfBounds,
    #[error("target not visible")]
    TargetNotVisible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct World {
    pub tick: u32,
    pub map_w: u32,
    pub map_h: u32,
    pub fog: bool,
    pub max_frames: u32,
    /// Sorted by ascending id.
    pub units: Vec<SimUnit>,
    pub rng: RngState,
    pub roster: Vec<UnitTypeSpec>,
    pub result: Option<MatchResult>,
}

impl World {
    pub fn new(config: &GameConfig) -> Result<World, ConfigError> {
        if config.map_w < 8 || config.map_h < 8 {
            return Err(ConfigError::MapTooSmall);
        }
        if config.frame_skip == 0 {
            return Err(ConfigError::ZeroFrameSkip);
        }
        roster::validate_roster(&config.roster)?;
        let mut world = World {
            tick: 0,
            map_w: config.map_w,
            map_h: config.map_h,
            fog: config.fog,
            max_frames: config.max_frames,
            units: Vec::new(),
            rng: RngState::new(config.seed),
            roster: config.roster.clone(),
            result: None,
        };
        match &config.scenario {
            Scenario::Spawns(spawns) => {
                for (index, s) in spawns.iter().enumerate() {
                    if s.owner > 1 {
                        return Err(ConfigError::BadOwner { index, owner: s.owner });
                    }
                    if !world.in_bounds(s.x, s.y) {
                        return Err(ConfigError::SpawnOutOfBounds { index, x: s.x, y: s.y });
                    }
                    world.spawn(s.type_id, s.owner, Position::new(s.x, s.y))?;
                }
            }
            &Scenario::RandomMirror { count, type_id } => {
                let (w, h) = (u64::from(config.map_w), u64::from(config.map_h));
                let mut placed = Vec::with_capacity(count as usize);
                for _ in 0..count {
                    let x = world.rng.next_in(w / 8, 3 * w / 8) as i32;
                    let y = world.rng.next_in(h / 4, 3 * h / 4) as i32;
                    placed.push(Position::new(x, y));
                }
                for &p in &placed {
                    world.spawn(type_id, 0, p)?;
                }
                for &p in &placed {
                    let mirrored =
                        Position::new(config.map_w as i32 - 1 - p.x, config.map_h as i32 - 1 - p.y);
                    world.spawn(type_id, 1, mirrored)?;
                }
            }
        }
        Ok(world)
    }

    fn spawn(&mut self, type_id: u8, owner: PlayerId, at: Position) -> Result<(), ConfigError> {
        let spec = roster::lookup(&self.roster, i32::from(type_id))
            .ok_or(ConfigError::UnknownType(type_id))?;
        let id = self.units.len() as UnitId;
        self.units.push(SimUnit {
            id,
            owner,
            unit_type: type_id,
            position_fp: FixedPos::pixel_center(at),
            hp: spec.max_hp,
            shield: spec.max_shield,
            energy: spec.max_energy,
            gwcd: 0,
            awcd: 0,
            order: Order::None,
        });
        Ok(())
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as u32) < self.map_w && (y as u32) < self.map_h
    }

    pub fn unit(&self, id: UnitId) -> Option<&SimUnit> {
        self.index_of(id).map(|i| &self.units[i])
    }

    fn index_of(&self, id: UnitId) -> Option<usize> {
        self.units.binary_search_by_key(&id, |u| u.id).ok()
    }

    fn spec(&self, type_id: u8) -> &UnitTypeSpec {
        roster::lookup(&self.roster, i32::from(type_id)).expect("unit type validated at spawn")
    }

    pub fn sightings(&self) -> Vec<Sighting> {
        self.units.iter().map(SimUnit::sighting).collect()
    }

    /// Opposing units currently visible to `player` under the world's fog setting.
    pub fn visible_to(&self, player: PlayerId, fog: bool) -> BTreeSet<UnitId> {
        frame::visible_enemies(&self.sightings(), player, &self.roster, fog)
    }

    /// Applies one player's commands in order. Each command yields an
    /// acceptance or a rejection reason; later orders to the same unit win.
    pub fn apply_commands(
        &mut self,
        player: PlayerId,
        cmds: &[Command],
    ) -> Result<Vec<Result<(), Rejection>>, EngineError> {
        if player > 1 {
            return Err(EngineError::UnknownPlayer(player));
        }
        if self.result.is_some() {
            return Err(EngineError::MatchOver);
        }
        let visible = self.visible_to(player, self.fog);
        let mut outcomes = Vec::with_capacity(cmds.len());
        for cmd in cmds {
            outcomes.push(self.apply_one(player, cmd, &visible));
        }
        Ok(outcomes)
    }

    fn apply_one(&mut self, player: PlayerId, cmd: &Command, visible: &BTreeSet<UnitId>) -> Result<(), Rejection> {
        let idx = self.index_of(cmd.unit_id()).ok_or(Rejection::UnknownUnit)?;
        if self.units[idx].owner != player {
            return Err(Rejection::NotOwner);
        }
        let order = match *cmd {
            Command::Stop { .. } => Order::None,
            Command::Move { x, y, .. } => {
                if !self.in_bounds(x, y) {
                    return Err(Rejection::OutOfBounds);
                }
                Order::MoveTo(Position::new(x, y))
            }
            Command::Attack { target, .. } => {
                if !visible.contains(&target) {
                    return Err(Rejection::TargetNotVisible);
                }
                Order::AttackUnit(target)
            }
        };
        self.units[idx].order = order;
        Ok(())
    }

    /// Advances up to `ticks` ticks, stopping early once the match ends.
    pub fn step(&mut self, ticks: u32) -> Result<Vec<Event>, EngineError> {
        if self.result.is_some() {
            return Err(EngineError::MatchOver);
        }
        let mut events = Vec::new();
        for _ in 0..ticks {
            self.tick_once(&mut events);
            if self.result.is_some() {
                break;
            }
        }
        Ok(events)
    }

    fn tick_once(&mut self, events: &mut Vec<Event>) {
        let (w, h) = (self.map_w, self.map_h);

        for u in &mut self.units {
            if u.gwcd > 0 {
                u.gwcd -= 1;
            }
            if u.awcd > 0 {
                u.awcd -= 1;
            }
        }

        for i in 0..self.units.len() {
            if let Order::MoveTo(goal) = self.units[i].order {
                let speed = self.spec(self.units[i].unit_type).speed_fp;
                let u = &mut self.units[i];
                u.position_fp = combat::move_toward(u.position_fp, goal, speed, w, h);
                if u.position_fp == FixedPos::pixel_center(goal) {
                    u.order = Order::None;
                }
            }
        }

        // (attacker index, target id, slot, raw damage, distance², range)
        let mut shots: Vec<(usize, UnitId, WeaponSlot, i32, i64, i32)> = Vec::new();
        for i in 0..self.units.len() {
            let Order::AttackUnit(target_id) = self.units[i].order else {
                continue;
            };
            let Some(t) = self.index_of(target_id) else {
                self.units[i].order = Order::None;
                continue;
            };
            let a_spec = self.spec(self.units[i].unit_type);
            let t_spec = self.spec(self.units[t].unit_type);
            let (slot, weapon) = combat::select_weapon(a_spec, t_spec);
            let weapon = *weapon;
            let speed = a_spec.speed_fp;
            let target_pos = self.units[t].position();
            let d2 = self.units[i].position().squared_distance(target_pos);
            let reach = i64::from(weapon.range);
            if !weapon.is_present() || d2 > reach * reach {
                let u = &mut self.units[i];
                u.position_fp = combat::move_toward(u.position_fp, target_pos, speed, w, h);
                continue;
            }
            let u = &mut self.units[i];
            let cd = match slot {
                WeaponSlot::Ground => &mut u.gwcd,
                WeaponSlot::Air => &mut u.awcd,
            };
            if *cd == 0 {
                *cd = weapon.cooldown;
                shots.push((i, target_id, slot, weapon.damage, d2, weapon.range));
            }
        }

        for &(i, target_id, slot, raw, distance_sq, range) in &shots {
            let t = self.index_of(target_id).expect("no unit is removed while shots land");
            let armor = self.spec(self.units[t].unit_type).armor;
            let target = &mut self.units[t];
            let (to_shield, to_hp) = damage_split(raw, target.shield, armor);
            let to_hp = to_hp.min(target.hp);
            target.shield -= to_shield;
            target.hp -= to_hp;
            events.push(Event::Damage {
                tick: self.tick,
                attacker: self.units[i].id,
                target: target_id,
                weapon: slot,
                shield_damage: to_shield,
                hp_damage: to_hp,
                distance_sq,
                range,
            });
        }
        let tick = self.tick;
        self.units.retain(|u| {
            if u.hp <= 0 {
                events.push(Event::Death { tick, unit: u.id, owner: u.owner });
                false
            } else {
                true
            }
        });

        self.tick += 1;
        self.result = self.check_end().map(|(r, _)| r);
    }

    /// End condition: a side with no units loses (both empty is a draw);
    /// reaching `max_frames` is a draw.
    pub fn check_end(&self) -> Option<(MatchResult, u32)> {
        let alive = |p: PlayerId| self.units.iter().any(|u| u.owner == p);
        let result = match (alive(0), alive(1)) {
            (false, false) => Some(MatchResult::Draw),
            (true, false) => Some(MatchResult::Winner(0)),
            (false, true) => Some(MatchResult::Winner(1)),
            (true, true) if self.tick >= self.max_frames => Some(MatchResult::Draw),
            (true, true) => None,
        };
        result.map(|r| (r, self.tick))
    }

    /// Observation for `player` using the world's own fog setting.
    pub fn frame_for(&self, player: PlayerId) -> Result<Frame, EngineError> {
        build_player_frame(self, player, self.fog)
    }
}

/// Builds `player`'s observation: all own units, plus the opposing units
/// visible under `fog`.
pub fn build_player_frame(world: &World, player: PlayerId, fog: bool) -> Result<Frame, EngineError> {
    if player > 1 {
        return Err(EngineError::UnknownPlayer(player));
    }
    let visible = world.visible_to(player, fog);
    let mut frame = Frame::new(world.tick);
    for u in &world.units {
        let spec = world.spec(u.unit_type);
        if u.owner == player {
            frame.units_myself.insert(u.id, u.observe(spec, false));
        } else if visible.contains(&u.id) {
            frame.units_enemy.insert(u.id, u.observe(spec, true));
        }
    }
    Ok(frame)
}
