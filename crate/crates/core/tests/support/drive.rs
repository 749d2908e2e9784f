//! Runs the engine side by side with the naive reference, and checks the
//! per-tick invariants.

use skirmish_core::codec::Command;
use skirmish_core::combat::WeaponSlot;
use skirmish_core::engine::{Event, GameConfig, Order, Scenario, Spawn, World};
use skirmish_core::frame::validate_frame;

use super::oracle::{NaiveOrder, NaiveUnit, NaiveWorld};

/// Spawns, fog, per-tick commands `(player, command)` and the frame limit.
#[derive(Debug, Clone)]
pub struct OracleCase {
    pub spawns: Vec<Spawn>,
    pub fog: bool,
    pub schedule: Vec<Vec<(u8, Command)>>,
    pub max_frames: u32,
}

impl OracleCase {
    pub fn world(&self) -> World {
        World::new(&GameConfig {
            map_w: 256,
            map_h: 256,
            fog: self.fog,
            max_frames: self.max_frames,
            scenario: Scenario::Spawns(self.spawns.clone()),
            ..GameConfig::default()
        })
        .unwrap()
    }
}

pub fn project(w: &World) -> Vec<NaiveUnit> {
    w.units
        .iter()
        .map(|u| NaiveUnit {
            id: u.id,
            owner: u.owner,
            kind: u.unit_type,
            fx: u.position_fp.x,
            fy: u.position_fp.y,
            hp: u.hp as i64,
            shield: u.shield as i64,
            gcd: u.gwcd as i64,
            acd: u.awcd as i64,
            order: match u.order {
                Order::None => NaiveOrder::Idle,
                Order::MoveTo(p) => NaiveOrder::Move(p.x as i64, p.y as i64),
                Order::AttackUnit(t) => NaiveOrder::Attack(t),
            },
        })
        .collect()
}

pub fn naive_from(w: &World) -> NaiveWorld {
    NaiveWorld {
        tick: w.tick as u64,
        w: w.map_w as i64,
        h: w.map_h as i64,
        max_frames: w.max_frames as u64,
        units: project(w),
        roster: w.roster.clone(),
        done: w.result.is_some(),
    }
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

/// Steps both engines through the case and compares the full unit state
/// after every command batch and every tick. Returns the ticks compared.
pub fn compare_with_oracle(case: &OracleCase) -> Result<u32, String> {
    let mut world = case.world();
    let mut naive = naive_from(&world);
    let mut ticks = 0;
    for cmds in &case.schedule {
        if world.result.is_some() {
            ensure!(naive.done, "engine ended at tick {} but the reference did not", world.tick);
            break;
        }
        for &(player, cmd) in cmds {
            if world.apply_commands(player, &[cmd]).unwrap()[0].is_ok() {
                let i = naive.units.iter().position(|u| u.id == cmd.unit_id()).unwrap();
                naive.units[i].order = match cmd {
                    Command::Stop { .. } => NaiveOrder::Idle,
                    Command::Move { x, y, .. } => NaiveOrder::Move(x as i64, y as i64),
                    Command::Attack { target, .. } => NaiveOrder::Attack(target),
                };
            }
        }
        ensure!(project(&world) == naive.units, "orders differ at tick {}", world.tick);
        world.step(1).unwrap();
        naive.tick();
        ticks += 1;
        ensure!(world.tick as u64 == naive.tick, "tick counters differ");
        ensure!(
            project(&world) == naive.units,
            "tick {}: engine {:?} vs reference {:?}",
            world.tick,
            project(&world),
            naive.units
        );
        ensure!(world.result.is_some() == naive.done, "end detection differs at tick {}", world.tick);
    }
    Ok(ticks)
}

fn cooldown(u: &skirmish_core::engine::SimUnit, slot: WeaponSlot) -> i32 {
    match slot {
        WeaponSlot::Ground => u.gwcd,
        WeaponSlot::Air => u.awcd,
    }
}

/// Conservation, monotonicity, range and cooldown discipline, and frame
/// validity, checked after every tick of the case.
pub fn check_tick_invariants(case: &OracleCase) -> Result<(), String> {
    let mut world = case.world();
    let roster = world.roster.clone();
    for cmds in &case.schedule {
        if world.result.is_some() {
            break;
        }
        for &(player, cmd) in cmds {
            world.apply_commands(player, &[cmd]).unwrap();
        }
        let before = world.clone();
        let events = world.step(1).unwrap();
        let t = world.tick;

        let mut dealt = 0i64;
        for e in &events {
            let Event::Damage { attacker, target, weapon, shield_damage, hp_damage, distance_sq, range, .. } = *e
            else {
                continue;
            };
            dealt += (shield_damage + hp_damage) as i64;
            ensure!(distance_sq <= (range as i64) * (range as i64), "tick {t}: shot from out of range");
            // the weapon was ready once cooldowns were decremented
            let a = before.unit(attacker).unwrap();
            ensure!(cooldown(a, weapon) <= 1, "tick {t}: unit {attacker} fired while cooling down");
            let spec = roster.iter().find(|s| s.type_id == a.unit_type).unwrap();
            let reset = match weapon {
                WeaponSlot::Ground => spec.ground_weapon.cooldown,
                WeaponSlot::Air => spec.air_weapon.cooldown,
            };
            if let Some(after) = world.unit(attacker) {
                ensure!(cooldown(after, weapon) == reset, "tick {t}: cooldown not reset");
            }
            let tb = before.unit(target).unwrap();
            if tb.shield == 0 && hp_damage == 0 {
                // the only way to land a zero-hp hit is on a unit already killed this tick
                let died = events.iter().any(|e| matches!(e, Event::Death { unit, .. } if *unit == target));
                ensure!(died, "tick {t}: hit on {target} dealt no damage");
            }
        }
        let mut lost = 0i64;
        for b in &before.units {
            let now = world.unit(b.id).map_or(0, |u| (u.hp + u.shield) as i64);
            ensure!(now <= (b.hp + b.shield) as i64, "tick {t}: unit {} gained hp or shield", b.id);
            lost += (b.hp + b.shield) as i64 - now;
        }
        ensure!(dealt == lost, "tick {t}: dealt {dealt} but {lost} was lost");

        for p in 0..2 {
            let f = world.frame_for(p).unwrap();
            let bad = validate_frame(&f, 256, 256, &roster);
            ensure!(bad.is_empty(), "tick {t}: {:?}", bad);
            for u in f.units_myself.values().chain(f.units_enemy.values()) {
                ensure!(!u.idle || u.target == -1, "tick {t}: idle unit {} has a target", u.id);
            }
        }
    }
    Ok(())
}
