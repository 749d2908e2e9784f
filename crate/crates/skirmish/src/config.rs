//! Game configuration and roster files.
//!
//! ```text
//! # duel.cfg
//! map 512 512
//! seed 42
//! fog 0
//! frame_skip 1
//! max_frames 5000
//! roster units.roster        # optional, relative to this file
//! spawn 0 0 100 100          # type owner x y, repeatable
//! random_mirror 5 0          # count type; excludes spawn lines
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use skirmish_core::engine::{GameConfig, Scenario, Spawn};
use skirmish_core::roster::{parse_roster, RosterError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {what}")]
    Syntax { line: usize, what: String },
    #[error("roster {path}: {source}")]
    Roster { path: PathBuf, source: RosterError },
}

pub fn load_roster(path: &Path) -> Result<Vec<skirmish_core::UnitTypeSpec>, ConfigFileError> {
    let text = fs::read_to_string(path)
        .map_err(|source| ConfigFileError::Io { path: path.to_path_buf(), source })?;
    parse_roster(&text).map_err(|source| ConfigFileError::Roster { path: path.to_path_buf(), source })
}

pub fn load_game_config(path: &Path) -> Result<GameConfig, ConfigFileError> {
    let text = fs::read_to_string(path)
        .map_err(|source| ConfigFileError::Io { path: path.to_path_buf(), source })?;
    parse_game_config(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Parses config text; `roster` paths resolve against `base_dir`.
pub fn parse_game_config(text: &str, base_dir: &Path) -> Result<GameConfig, ConfigFileError> {
    let mut cfg = GameConfig::default();
    let mut spawns = Vec::new();
    let mut mirror = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |what: &str| ConfigFileError::Syntax { line, what: what.to_string() };
        let tok: Vec<&str> = content.split_whitespace().collect();
        let args = &tok[1..];
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(syntax(&format!("`{}` takes {n} argument(s)", tok[0])))
            }
        };
        fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, ConfigFileError> {
            s.parse().map_err(|_| ConfigFileError::Syntax { line, what: format!("bad number `{s}`") })
        }
        match tok[0] {
            "map" => {
                want(2)?;
                cfg.map_w = num(args[0], line)?;
                cfg.map_h = num(args[1], line)?;
            }
            "seed" => {
                want(1)?;
                cfg.seed = num(args[0], line)?;
            }
            "fog" => {
                want(1)?;
                cfg.fog = match args[0] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(syntax("fog must be 0 or 1")),
                };
            }
            "frame_skip" => {
                want(1)?;
                cfg.frame_skip = num(args[0], line)?;
                if cfg.frame_skip == 0 {
                    return Err(syntax("frame_skip must be at least 1"));
                }
            }
            "max_frames" => {
                want(1)?;
                cfg.max_frames = num(args[0], line)?;
            }
            "roster" => {
                want(1)?;
                cfg.roster = load_roster(&base_dir.join(args[0]))?;
            }
            "spawn" => {
                want(4)?;
                spawns.push(Spawn {
                    type_id: num(args[0], line)?,
                    owner: num(args[1], line)?,
                    x: num(args[2], line)?,
                    y: num(args[3], line)?,
                });
            }
            "random_mirror" => {
                want(2)?;
                if mirror.is_some() {
                    return Err(syntax("random_mirror given twice"));
                }
                mirror = Some(Scenario::RandomMirror { count: num(args[0], line)?, type_id: num(args[1], line)? });
            }
            other => return Err(syntax(&format!("unknown directive `{other}`"))),
        }
    }
    cfg.scenario = match mirror {
        Some(_) if !spawns.is_empty() => {
            return Err(ConfigFileError::Syntax { line: 0, what: "spawn and random_mirror are exclusive".into() })
        }
        Some(m) => m,
        None => Scenario::Spawns(spawns),
    };
    Ok(cfg)
}
