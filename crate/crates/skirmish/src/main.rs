use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use skirmish::bot::{self, BotError};
use skirmish::client::Client;
use skirmish::config::load_game_config;
use skirmish::replay::{self, ReplayReader, DEFAULT_KEYFRAME_INTERVAL};
use skirmish::server::{Mode, Opponent, Server, ServerConfig};
use skirmish::transport::Endpoint;
use skirmish_core::codec::MatchOutcome;
use skirmish_core::engine::{GameConfig, Scenario};
use skirmish_core::roster::TROOPER;
use skirmish_core::rules::Policy;

#[derive(Parser)]
#[command(name = "skirmish", version, about = "Lockstep micro-RTS environment server and tools")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Host matches.
    Serve(ServeArgs),
    /// Play matches with a scripted policy. Exits 0 on win, 1 on loss, 2 on draw.
    Bot(BotArgs),
    /// Inspect replay files.
    Replay {
        #[command(subcommand)]
        action: ReplayCmd,
    },
    /// Measure lockstep throughput over loopback.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Controlled,
    Attached,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpponentArg {
    Idle,
    #[value(name = "attack_closest")]
    AttackClosest,
    Client,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Idle,
    #[value(name = "attack_closest")]
    AttackClosest,
}

#[derive(Args)]
#[group(id = "endpoint", required = true, multiple = false)]
struct ListenArgs {
    /// TCP address to listen on, host:port.
    #[arg(long)]
    listen: Option<String>,
    /// Unix socket path.
    #[arg(long)]
    pipe: Option<PathBuf>,
}

#[derive(Args)]
#[group(id = "endpoint", required = true, multiple = false)]
struct ConnectArgs {
    /// TCP address of the server, host:port.
    #[arg(long)]
    connect: Option<String>,
    /// Unix socket path.
    #[arg(long)]
    pipe: Option<PathBuf>,
}

fn endpoint(tcp: &Option<String>, pipe: &Option<PathBuf>) -> Endpoint {
    match (tcp, pipe) {
        (Some(addr), _) => Endpoint::Tcp(addr.clone()),
        (_, Some(path)) => Endpoint::Pipe(path.clone()),
        _ => unreachable!("clap requires one endpoint"),
    }
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[command(flatten)]
    endpoint: ListenArgs,
    /// Game config file; defaults to a 5v5 trooper mirror match.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "idle")]
    opponent: OpponentArg,
    /// Stop after this many matches.
    #[arg(long)]
    matches: Option<u64>,
}

#[derive(Args)]
struct BotArgs {
    #[command(flatten)]
    endpoint: ConnectArgs,
    #[arg(long, value_enum, default_value = "attack_closest")]
    policy: PolicyArg,
    /// Record this player's view of the (last) match to a .tcr file.
    #[arg(long)]
    record: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_KEYFRAME_INTERVAL)]
    keyframe_interval: u32,
    /// Matches to play over one attached-mode connection, using RESTART.
    #[arg(long, default_value_t = 1)]
    matches: u32,
    /// Send QUIT when done (stops an attached-mode server).
    #[arg(long)]
    quit: bool,
}

#[derive(Subcommand)]
enum ReplayCmd {
    /// Check every frame; exit 0 when the file is sound, 1 otherwise.
    Verify { path: PathBuf },
    /// Print one summary line per frame.
    Dump { path: PathBuf },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 10_000)]
    frames: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Info).init();
    let cli = Cli::parse();
    match cli.command {
        Cmd::Serve(args) => serve(args),
        Cmd::Bot(args) => run_bot(args),
        Cmd::Replay { action } => replay_cmd(action),
        Cmd::Bench(args) => bench(args),
    }
}

fn serve(args: ServeArgs) -> ExitCode {
    let game = match &args.config {
        Some(path) => match load_game_config(path) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => GameConfig { scenario: Scenario::RandomMirror { count: 5, type_id: TROOPER }, ..GameConfig::default() },
    };
    let mode = match args.mode {
        ModeArg::Controlled => Mode::Controlled,
        ModeArg::Attached => Mode::Attached,
    };
    let opponent = match args.opponent {
        OpponentArg::Idle => Opponent::BuiltinIdle,
        OpponentArg::AttackClosest => Opponent::BuiltinAttackClosest,
        OpponentArg::Client => Opponent::Client,
    };
    let mut cfg = ServerConfig::new(mode, endpoint(&args.endpoint.listen, &args.endpoint.pipe), game, opponent);
    cfg.max_matches = args.matches;
    let server = match Server::bind(cfg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    log::info!("listening on {}", server.endpoint());
    match server.run() {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run_bot(args: BotArgs) -> ExitCode {
    let policy = match args.policy {
        PolicyArg::Idle => Policy::Idle,
        PolicyArg::AttackClosest => Policy::AttackClosest,
    };
    let mut client = match Client::connect(&endpoint(&args.endpoint.connect, &args.endpoint.pipe)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let mut last = None;
    for i in 0..args.matches.max(1) {
        if i > 0 {
            if let Err(e) = client.restart() {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
        }
        let is_last = i + 1 == args.matches.max(1);
        let record = args.record.as_deref().filter(|_| is_last).map(|p| (p, args.keyframe_interval));
        match bot::run_bot(&mut client, policy, record) {
            Ok(end) => {
                println!("match {}: {:?} at frame {}", i, end.outcome, end.final_frame);
                last = Some(end.outcome);
            }
            Err(e @ BotError::Replay(_)) => {
                eprintln!("error: {e}");
                return ExitCode::from(4);
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
        }
    }
    if args.quit {
        // the server may already have closed its side
        let _ = client.quit();
    }
    match last {
        Some(MatchOutcome::Win) => ExitCode::from(0),
        Some(MatchOutcome::Loss) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn replay_cmd(action: ReplayCmd) -> ExitCode {
    match action {
        ReplayCmd::Verify { path } => match replay::verify(&path) {
            Ok(v) if v.ok() => {
                println!("ok: {} frames", v.frames);
                ExitCode::SUCCESS
            }
            Ok(v) => {
                for p in &v.problems {
                    println!("{p}");
                }
                println!("FAILED: {} problem(s) after {} frames", v.problems.len(), v.frames);
                ExitCode::FAILURE
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                ExitCode::FAILURE
            }
        },
        ReplayCmd::Dump { path } => {
            let reader = match ReplayReader::open(&path) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            for item in reader {
                match item {
                    Ok(f) => {
                        let hp = |g: &std::collections::BTreeMap<u32, skirmish_core::UnitState>| {
                            g.values().map(|u| i64::from(u.hp)).sum::<i64>()
                        };
                        println!(
                            "frame {} myself {} enemy {} hp_myself {} hp_enemy {}",
                            f.frame_number,
                            f.units_myself.len(),
                            f.units_enemy.len(),
                            hp(&f.units_myself),
                            hp(&f.units_enemy)
                        );
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::FAILURE;
                    }
                }
            }
            ExitCode::SUCCESS
        }
    }
}

fn bench(args: BenchArgs) -> ExitCode {
    match bot::bench(args.frames, args.seed) {
        Ok(r) => {
            println!("frames: {}", r.frames);
            println!("elapsed: {:.3} s", r.elapsed.as_secs_f64());
            println!("frames/sec: {:.0}", r.frames_per_sec);
            println!("bytes/frame (STATE payload): {:.1}", r.state_bytes_per_frame);
            println!("bytes/frame (wire, both directions): {:.1}", r.wire_bytes_per_frame);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
