use proptest::prelude::*;
use skirmish_core::codec::{Command, EndInfo, Hello, MatchOutcome, Message, Setup};
use skirmish_core::engine::Spawn;
use skirmish_core::frame::{Frame, Position, UnitState};
use skirmish_core::roster::{UnitTypeSpec, Weapon};

use super::drive::OracleCase;

pub fn unit_strategy(enemy: bool) -> impl Strategy<Value = UnitState> {
    (0u32..64, prop::array::uniform20(any::<i32>()), any::<bool>()).prop_map(move |(id, f, idle)| UnitState {
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

pub fn frame_strategy() -> impl Strategy<Value = Frame> {
    (
        any::<u32>(),
        prop::collection::vec(unit_strategy(false), 0..6),
        prop::collection::vec(unit_strategy(true), 0..6),
    )
        .prop_map(|(n, mine, theirs)| {
            let mut f = Frame::new(n);
            for u in mine {
                f.insert(u);
            }
            for u in theirs {
                if !f.units_myself.contains_key(&u.id) {
                    f.insert(u);
                }
            }
            f
        })
}

pub fn command_strategy() -> impl Strategy<Value = Command> {
    prop_oneof![
        any::<u32>().prop_map(|unit| Command::Stop { unit }),
        (any::<u32>(), any::<i32>(), any::<i32>()).prop_map(|(unit, x, y)| Command::Move { unit, x, y }),
        (any::<u32>(), 0u32..=i32::MAX as u32).prop_map(|(unit, target)| Command::Attack { unit, target }),
    ]
}

pub fn spec_strategy() -> impl Strategy<Value = UnitTypeSpec> {
    (any::<u8>(), "[a-z]{0,12}", prop::array::uniform12(any::<i32>()), any::<bool>()).prop_map(
        |(type_id, name, v, flyer)| UnitTypeSpec {
            type_id,
            name,
            max_hp: v[0],
            max_shield: v[1],
            max_energy: v[2],
            armor: v[3],
            speed_fp: v[4],
            sight_range: v[5],
            flyer,
            ground_weapon: Weapon::new(v[6], v[7], v[8]),
            air_weapon: Weapon::new(v[9], v[10], v[11]),
        },
    )
}

pub fn message_strategy() -> impl Strategy<Value = Message> {
    prop_oneof![
        (any::<u16>(), "\\PC{0,20}", any::<u8>()).prop_map(|(proto_version, client_name, requested_role)| {
            Message::Hello(Hello { proto_version, client_name, requested_role })
        }),
        (any::<u8>(), any::<u32>(), any::<u32>(), any::<bool>(), any::<u8>(), any::<u64>(),
            prop::collection::vec(spec_strategy(), 0..4))
            .prop_map(|(player_id, map_w, map_h, fog, frame_skip, seed, roster)| {
                Message::Setup(Setup { player_id, map_w, map_h, fog, frame_skip, seed, roster })
            }),
        frame_strategy().prop_map(Message::State),
        prop::collection::vec(command_strategy(), 0..20).prop_map(Message::Commands),
        (0u8..3, any::<u32>()).prop_map(|(r, final_frame)| Message::End(EndInfo {
            outcome: MatchOutcome::from_u8(r).unwrap(),
            final_frame
        })),
        Just(Message::Restart),
        Just(Message::Quit),
        (any::<u16>(), "\\PC{0,30}").prop_map(|(code, text)| Message::Error { code, text }),
    ]
}

/// Up to 20 units of any type anywhere on a 512x512 map.
pub fn world_strategy() -> impl Strategy<Value = Vec<Spawn>> {
    prop::collection::vec(
        (0u8..3, 0u8..2, 0i32..512, 0i32..512).prop_map(|(type_id, owner, x, y)| Spawn { type_id, owner, x, y }),
        0..=20,
    )
}

/// Two to four units clustered around a random point, at least one per
/// side, so that fights actually happen.
fn clustered_spawns() -> impl Strategy<Value = Vec<Spawn>> {
    (16i32..240, 16i32..240).prop_flat_map(|(cx, cy)| {
        prop::collection::vec((0u8..3, 0u8..2, -80i32..80, -80i32..80), 2..=4).prop_map(move |units| {
            units
                .into_iter()
                .enumerate()
                .map(|(i, (type_id, owner, dx, dy))| Spawn {
                    type_id,
                    owner: if i < 2 { i as u8 } else { owner },
                    x: (cx + dx).clamp(0, 255),
                    y: (cy + dy).clamp(0, 255),
                })
                .collect()
        })
    })
}

/// A command for one of `owners.len()` units (or a missing id), usually
/// issued by the unit's owner and usually an attack on some other unit.
fn scheduled_command(owners: Vec<u8>) -> impl Strategy<Value = (u8, Command)> {
    let n = owners.len() as u32;
    (0..=n, 0..10u8, 0..n + 1, -2i32..260, -2i32..260, 0..9u8).prop_map(move |(unit, who, target, x, y, kind)| {
        let owner = owners.get(unit as usize).copied().unwrap_or(0);
        // one in ten commands comes from the wrong player
        let player = if who == 0 { 1 - owner } else { owner };
        let cmd = match kind {
            0 => Command::Stop { unit },
            1 | 2 => Command::Move { unit, x, y },
            _ => Command::Attack { unit, target },
        };
        (player, cmd)
    })
}

/// At most 4 units on a 256x256 map and at most 50 ticks of commands.
pub fn oracle_case() -> impl Strategy<Value = OracleCase> {
    clustered_spawns().prop_flat_map(|spawns| {
        let owners: Vec<u8> = spawns.iter().map(|s| s.owner).collect();
        (
            Just(spawns),
            any::<bool>(),
            prop::collection::vec(prop::collection::vec(scheduled_command(owners), 0..2), 1..=50),
            20u32..60,
        )
            .prop_map(|(spawns, fog, schedule, max_frames)| OracleCase { spawns, fog, schedule, max_frames })
    })
}
