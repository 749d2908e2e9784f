//! Golden wire fixtures shared with other client implementations.
//!
//! Each `tests/golden/<name>.bin` holds one framed message (u32 length
//! prefix, then the payload). Regenerate with `SKIRMISH_BLESS=1 cargo test
//! -p skirmish-core --test golden` after a deliberate wire change.

use std::path::PathBuf;

use skirmish_core::codec::{decode_message, encode_message, split_framed, write_framed, Command, EndInfo, Hello, Message, Setup};
use skirmish_core::delta::{decode_delta, delta_encode, encode_delta};
use skirmish_core::engine::{GameConfig, Scenario, Spawn, World};
use skirmish_core::roster::{default_roster, BLADE, HAWK, TROOPER};
use skirmish_core::MatchOutcome;

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn world() -> World {
    let s = |type_id, owner, x, y| Spawn { type_id, owner, x, y };
    World::new(&GameConfig {
        fog: true,
        scenario: Scenario::Spawns(vec![
            s(TROOPER, 0, 100, 100),
            s(HAWK, 0, 120, 90),
            s(BLADE, 1, 300, 100),
            s(TROOPER, 1, 500, 500),
        ]),
        ..GameConfig::default()
    })
    .unwrap()
}

fn fixtures() -> Vec<(&'static str, Message)> {
    let mut w = world();
    let f0 = w.frame_for(0).unwrap();
    w.apply_commands(0, &[Command::Attack { unit: 0, target: 2 }, Command::Move { unit: 1, x: 200, y: 60 }])
        .unwrap();
    w.apply_commands(1, &[Command::Attack { unit: 2, target: 0 }]).unwrap();
    w.step(40).unwrap();
    let f40 = w.frame_for(0).unwrap();
    vec![
        ("hello", Message::Hello(Hello { proto_version: 1, client_name: "golden".into(), requested_role: 0 })),
        (
            "setup",
            Message::Setup(Setup {
                player_id: 1,
                map_w: 512,
                map_h: 256,
                fog: true,
                frame_skip: 4,
                seed: 0x0123_4567_89AB_CDEF,
                roster: default_roster(),
            }),
        ),
        ("state_empty", Message::State(skirmish_core::Frame::new(0))),
        ("state_start", Message::State(f0)),
        ("state_fight", Message::State(f40)),
        ("commands_empty", Message::Commands(vec![])),
        (
            "commands",
            Message::Commands(vec![
                Command::Stop { unit: 3 },
                Command::Move { unit: 0, x: -1, y: 70_000 },
                Command::Attack { unit: 1, target: 2_000_000_000 },
            ]),
        ),
        ("end_win", Message::End(EndInfo { outcome: MatchOutcome::Win, final_frame: 1234 })),
        ("end_draw", Message::End(EndInfo { outcome: MatchOutcome::Draw, final_frame: 5000 })),
        ("restart", Message::Restart),
        ("quit", Message::Quit),
        ("error", Message::Error { code: 3, text: "restart not supported in controlled mode".into() }),
    ]
}

fn check(name: &str, framed: &[u8]) -> Vec<u8> {
    let path = dir().join(format!("{name}.bin"));
    if std::env::var_os("SKIRMISH_BLESS").is_some() {
        std::fs::write(&path, framed).unwrap();
    }
    let golden = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(framed, golden.as_slice(), "{name}: encoding drifted from the golden file");
    golden
}

#[test]
fn messages_match_golden_bytes() {
    for (name, msg) in fixtures() {
        let golden = check(name, &write_framed(&encode_message(&msg).unwrap()).unwrap());
        let (payload, rest) = split_framed(&golden).unwrap().unwrap();
        assert!(rest.is_empty());
        let back = decode_message(payload).unwrap();
        assert_eq!(back, msg, "{name}");
        assert_eq!(encode_message(&back).unwrap(), payload, "{name}: re-encode");
    }
}

#[test]
fn delta_matches_golden_bytes() {
    let mut w = world();
    let before = w.frame_for(0).unwrap();
    w.apply_commands(0, &[Command::Move { unit: 0, x: 110, y: 100 }]).unwrap();
    w.step(3).unwrap();
    let after = w.frame_for(0).unwrap();
    let payload = encode_delta(&delta_encode(&before, &after)).unwrap();
    let golden = check("delta", &write_framed(&payload).unwrap());
    let (p, _) = split_framed(&golden).unwrap().unwrap();
    assert_eq!(encode_delta(&decode_delta(p).unwrap()).unwrap(), p);
}

#[test]
fn hand_computed_layouts() {
    let read = |name: &str| std::fs::read(dir().join(format!("{name}.bin"))).unwrap();
    assert_eq!(read("quit"), [1, 0, 0, 0, 0x07]);
    assert_eq!(read("restart"), [1, 0, 0, 0, 0x06]);
    assert_eq!(read("end_win"), [6, 0, 0, 0, 0x05, 1, 0xD2, 0x04, 0, 0]);
    assert_eq!(read("commands_empty"), [3, 0, 0, 0, 0x04, 0, 0]);
    // tag, frame number, two empty group counts
    assert_eq!(read("state_empty"), [9, 0, 0, 0, 0x03, 0, 0, 0, 0, 0, 0, 0, 0]);
    let hello = read("hello");
    assert_eq!(&hello[4..7], [0x01, 1, 0]);
    // 2 units of ours, 1 visible enemy under fog
    assert_eq!(read("state_start").len(), 4 + 1 + 4 + 2 + 2 + 3 * 84);
}
