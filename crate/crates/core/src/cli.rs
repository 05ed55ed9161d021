//! Command-line verbs. `main` only parses arguments and maps the outcome to
//! an exit code: 0 on success, 1 for usage errors, 2 for bad data.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arena::{play_match, Agent, ArenaConfig, MctsAgent, RandomAgent};
use crate::game::{Action, Game, GameStatus, Player};
use crate::games::{AnyGame, AnyState};
use crate::mcts::{run_search, NetworkEvaluator, SearchConfig};
use crate::nn::{
    grow_add_block, grow_add_channels, grow_kernel, load_checkpoint, save_checkpoint, ChannelGroup,
    Checkpoint,
};
use crate::serve::{Engine, MatchStore};
use crate::training::wire::{read_record, spec_hash, write_record, SampleRecord};
use crate::training::{self_play_game, TrainConfig, Trainer};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "polyzero",
    version,
    about = "Zero-knowledge self-play training for board games"
)]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train from a config file.
    Train(TrainArgs),
    /// Play self-play games with a checkpoint and write samples in the wire format.
    Selfplay(SelfplayArgs),
    /// Play an arena match between two players.
    Eval(EvalArgs),
    /// Grow a checkpoint without changing what it computes.
    Convert(ConvertArgs),
    /// Play against a checkpoint in the terminal.
    Play(PlayArgs),
    /// Serve the HTTP match API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub config: PathBuf,
    /// Override a config key, e.g. `--set max_games=100`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Continue from this checkpoint instead of a fresh network.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Preload the replay buffer from sample files written by `selfplay`.
    #[arg(long)]
    pub import: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelfplayArgs {
    pub checkpoint: PathBuf,
    #[arg(short = 'n', long, default_value_t = 10)]
    pub games: u32,
    #[arg(long, default_value_t = 600)]
    pub sims: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Board size override.
    #[arg(long)]
    pub size: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// A checkpoint path, `random`, or `uct:M` for rollout UCT with M simulations.
    pub a: String,
    pub b: String,
    #[arg(short = 'n', long, default_value_t = 100)]
    pub games: u32,
    #[arg(long, default_value_t = 600)]
    pub sims: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Moves drawn from the visit distribution at the start of each game.
    #[arg(long, default_value_t = 2)]
    pub sample_plies: u32,
    /// Game id; needed when neither player is a checkpoint.
    #[arg(long)]
    pub game: Option<String>,
    /// Board size override, e.g. evaluate a 7×7 network on 9×9.
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("growth").required(true).args(["add_block", "add_channels", "grow_kernel"])))]
pub struct ConvertArgs {
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub add_block: bool,
    /// Extra channels for the trunk (see `--group`).
    #[arg(long, value_name = "X")]
    pub add_channels: Option<usize>,
    #[arg(long, value_name = "K")]
    pub grow_kernel: Option<usize>,
    /// Channel group for `--add-channels`: trunk, value-pool or value-hidden.
    #[arg(long, default_value = "trunk")]
    pub group: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; defaults to `<input>-grown.pzck`.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlayArgs {
    pub checkpoint: PathBuf,
    /// Your seat: first or second.
    #[arg(long, default_value = "first")]
    pub human: String,
    #[arg(long, default_value_t = 600)]
    pub sims: u32,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Default engine simulations per move.
    #[arg(long, default_value_t = 600)]
    pub sims: u32,
    /// Directory receiving one move-history file per match.
    #[arg(long)]
    pub matches_dir: Option<PathBuf>,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => train(a, out),
        Command::Selfplay(a) => selfplay(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Convert(a) => convert(a, out),
        Command::Play(a) => {
            let stdin = std::io::stdin();
            play(a, &mut stdin.lock(), out)
        }
        Command::Serve(a) => serve(a),
    }
}

fn load(path: &Path) -> Result<Checkpoint, CliError> {
    load_checkpoint(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn game_for(ckpt: &Checkpoint, size: Option<usize>) -> Result<AnyGame, CliError> {
    let game = AnyGame::from_id(&ckpt.game_id).map_err(data)?;
    match size {
        Some(s) => game.resized(s).map_err(data),
        None => Ok(game),
    }
}

fn train(args: TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config = TrainConfig::load(&args.config)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.config.display())))?;
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("`--set {kv}`: expected KEY=VALUE")))?;
        config.set(k.trim(), v.trim()).map_err(data)?;
    }
    let mut trainer = match &args.resume {
        Some(p) => Trainer::resume(config, load(p)?).map_err(data)?,
        None => Trainer::new(config).map_err(data)?,
    };
    let expected = spec_hash(trainer.network().spec());
    for path in &args.import {
        let mut input = BufReader::new(
            File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        );
        while let Some(record) = read_record(&mut input)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        {
            if record.game_id != trainer.game().id() || record.spec_hash != expected {
                return Err(CliError::Data(format!(
                    "{}: samples for {} do not match this run",
                    path.display(),
                    record.game_id
                )));
            }
            trainer.push_samples(record.samples);
        }
    }
    let summary = trainer
        .run(Arc::new(AtomicBool::new(false)))
        .map_err(data)?;
    writeln!(
        out,
        "games {} (abandoned {}), steps {}, samples {}, max reuse {}, dev elo {:.1}",
        summary.games,
        summary.abandoned,
        summary.steps,
        summary.samples_produced,
        summary.buffer.max_reuse,
        summary.dev_rating
    )
    .map_err(data)?;
    Ok(())
}

fn selfplay(args: SelfplayArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ckpt = load(&args.checkpoint)?;
    let game = game_for(&ckpt, args.size)?;
    let hash = spec_hash(ckpt.spec());
    let evaluator = NetworkEvaluator::new(Arc::new(ckpt.network));
    let mut config = crate::training::SelfPlayConfig::default();
    config.search.simulations = args.sims;
    config
        .search
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(data)?)),
        None => Box::new(BufWriter::new(out)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut samples = 0;
    for _ in 0..args.games {
        let rec = self_play_game(&game, &evaluator, &config, &mut rng).map_err(data)?;
        samples += rec.samples.len();
        let record = SampleRecord {
            game_id: game.id(),
            spec_hash: hash,
            samples: rec.samples,
        };
        write_record(&mut sink, &record).map_err(data)?;
    }
    sink.flush().map_err(data)?;
    log::info!("{} games, {samples} samples", args.games);
    Ok(())
}

/// An arena player and, for checkpoints, the game it was trained on.
type AgentSpec = (Box<dyn Agent<AnyGame>>, Option<String>);

fn agent_for(spec: &str, sims: u32, sample_plies: u32) -> Result<AgentSpec, CliError> {
    if spec == "random" {
        return Ok((Box::new(RandomAgent), None));
    }
    if let Some(m) = spec.strip_prefix("uct:") {
        let m = m
            .parse()
            .map_err(|_| CliError::Usage(format!("bad simulation count in `{spec}`")))?;
        return Ok((
            Box::new(MctsAgent::uct(m, 1.0).with_sample_plies(sample_plies)),
            None,
        ));
    }
    let ckpt = load(Path::new(spec))?;
    let agent =
        MctsAgent::network(spec, Arc::new(ckpt.network), sims).with_sample_plies(sample_plies);
    Ok((Box::new(agent), Some(ckpt.game_id)))
}

fn eval(args: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (a, a_game) = agent_for(&args.a, args.sims, args.sample_plies)?;
    let (b, b_game) = agent_for(&args.b, args.sims, args.sample_plies)?;
    let family = |id: &str| AnyGame::from_id(id).map(|g| g.family()).map_err(data);
    if let (Some(x), Some(y)) = (&a_game, &b_game) {
        if family(x)? != family(y)? {
            return Err(CliError::Data(format!(
                "checkpoints are for different games: {x} and {y}"
            )));
        }
    }
    let id = args
        .game
        .clone()
        .or(a_game)
        .or(b_game)
        .ok_or_else(|| CliError::Usage("no checkpoint given; pass --game".into()))?;
    let mut game = AnyGame::from_id(&id).map_err(data)?;
    if let Some(s) = args.size {
        game = game.resized(s).map_err(data)?;
    }
    let config = ArenaConfig {
        games: args.games,
        seed: args.seed,
        ..ArenaConfig::default()
    };
    let report = play_match(&game, a.as_ref(), b.as_ref(), &config).map_err(data)?;
    writeln!(out, "game {}  {} vs {}", game.id(), a.name(), b.name()).map_err(data)?;
    writeln!(
        out,
        "A wins {}  draws {}  B wins {}",
        report.a_wins, report.draws, report.b_wins
    )
    .map_err(data)?;
    match report.elo_delta() {
        Some(d) => writeln!(out, "elo delta (A - B) {d:+.1}"),
        None => writeln!(out, "no games played"),
    }
    .map_err(data)
}

fn convert(args: ConvertArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ckpt = load(&args.checkpoint)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let grown = if args.add_block {
        grow_add_block(&ckpt.network, &mut rng)
    } else if let Some(x) = args.add_channels {
        let group: ChannelGroup = args
            .group
            .parse()
            .map_err(|e: crate::nn::NnError| CliError::Usage(e.to_string()))?;
        grow_add_channels(&ckpt.network, group, x, &mut rng)
            .map_err(|e| CliError::Usage(e.to_string()))?
    } else if let Some(k) = args.grow_kernel {
        grow_kernel(&ckpt.network, k).map_err(|e| CliError::Usage(e.to_string()))?
    } else {
        return Err(CliError::Usage(
            "choose --add-block, --add-channels or --grow-kernel".into(),
        ));
    };
    let path = args.out.unwrap_or_else(|| {
        let stem = args
            .checkpoint
            .file_stem()
            .unwrap_or_default()
            .to_string_lossy();
        args.checkpoint.with_file_name(format!("{stem}-grown.pzck"))
    });
    let result = Checkpoint {
        network: grown,
        ..ckpt
    };
    save_checkpoint(&result, &path).map_err(data)?;
    let s = result.spec();
    writeln!(
        out,
        "wrote {} ({} blocks, {} channels, kernel {}, {} parameters)",
        path.display(),
        s.residual_blocks,
        s.trunk_channels,
        s.kernel_size,
        s.param_count()
    )
    .map_err(data)
}

/// Text board: `X` for First, `O` for Second, `.` empty. Hex-grid games
/// shift each row right by half a cell.
pub fn render_board(game: &AnyGame, state: &AnyState) -> String {
    let (h, w) = game.board_dims();
    let hexagonal = matches!(game, AnyGame::Hex(_) | AnyGame::Havannah(_));
    let mut s = String::from("   ");
    for c in 0..w {
        s.push_str(&format!("{c:>2}"));
    }
    s.push('\n');
    for r in 0..h {
        s.push_str(&format!("{r:>2} "));
        if hexagonal {
            s.push_str(&" ".repeat(r));
        }
        for c in 0..w {
            let ch = if !game.on_board(r, c) {
                ' '
            } else {
                match game.owner_at(state, r, c) {
                    Some(Player::First) => 'X',
                    Some(Player::Second) => 'O',
                    None => '.',
                }
            };
            s.push(' ');
            s.push(ch);
        }
        s.push('\n');
    }
    s
}

/// Reads `r c`, `channel,r,c`, `swap` or `quit`.
fn parse_move(line: &str) -> Option<Result<Action, String>> {
    let line = line.trim();
    match line {
        "" => return Some(Err("enter a move".into())),
        "quit" | "q" => return None,
        "swap" => {
            return Some(Ok(Action {
                channel: 1,
                row: 0,
                col: 0,
            }))
        }
        _ => {}
    }
    let nums: Result<Vec<usize>, _> = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect();
    Some(match nums.as_deref() {
        Ok([r, c]) => Ok(Action {
            channel: 0,
            row: *r,
            col: *c,
        }),
        Ok([ch, r, c]) => Ok(Action {
            channel: *ch,
            row: *r,
            col: *c,
        }),
        _ => Err(format!(
            "cannot read `{line}`; try `row col` or `channel,row,col`"
        )),
    })
}

/// Terminal play. Reads moves from `input` and writes the board to `out`.
pub fn play(args: PlayArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    let ckpt = load(&args.checkpoint)?;
    let game = game_for(&ckpt, args.size)?;
    let human = match args.human.as_str() {
        "first" => Player::First,
        "second" => Player::Second,
        other => {
            return Err(CliError::Usage(format!(
                "--human must be first or second, got `{other}`"
            )))
        }
    };
    let evaluator = NetworkEvaluator::new(Arc::new(ckpt.network));
    let config = SearchConfig {
        root_noise: false,
        ..SearchConfig::puct(args.sims)
    };
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let space = game.action_space();
    let mut state = game.initial_state();
    let w = |out: &mut dyn Write, s: String| out.write_all(s.as_bytes()).map_err(data);
    loop {
        let status = game.status(&state);
        if status.is_terminal() {
            w(out, render_board(&game, &state))?;
            let msg = match status {
                GameStatus::Win(p) if p == human => "you win\n",
                GameStatus::Win(_) => "engine wins\n",
                _ => "draw\n",
            };
            return w(out, msg.into());
        }
        if game.is_chance(&state) {
            let outcomes = game.chance_outcomes(&state).map_err(data)?;
            let i = (rng.next_u64() % outcomes.len() as u64) as usize;
            w(out, format!("roll: {}\n", outcomes[i].label))?;
            state = outcomes.into_iter().nth(i).expect("outcome").state;
            continue;
        }
        if game.player_to_move(&state) == human {
            w(out, render_board(&game, &state))?;
            w(out, "your move> ".into())?;
            out.flush().map_err(data)?;
            let mut line = String::new();
            if input.read_line(&mut line).map_err(data)? == 0 {
                return Ok(());
            }
            let action = match parse_move(&line) {
                None => return Ok(()),
                Some(Err(msg)) => {
                    w(out, format!("{msg}\n"))?;
                    continue;
                }
                Some(Ok(a)) => a,
            };
            let legal = game.legal_actions(&state).map_err(data)?;
            match space.index(action).filter(|i| legal.contains(i)) {
                Some(i) => state = game.apply(&state, i).map_err(data)?,
                None => w(out, format!("{action} is not legal\n"))?,
            }
        } else {
            let result = run_search(&game, &state, &evaluator, &config, &mut rng).map_err(data)?;
            let a = space.action(result.chosen).expect("action in space");
            w(
                out,
                format!("engine plays {a} (value {:+.2})\n", result.value),
            )?;
            state = game.apply(&state, result.chosen).map_err(data)?;
        }
    }
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let ckpt = load(&args.checkpoint)?;
    let engine = Engine::from_checkpoint(ckpt, args.sims).map_err(data)?;
    if let Some(dir) = &args.matches_dir {
        std::fs::create_dir_all(dir).map_err(data)?;
    }
    let store = Arc::new(MatchStore::new(
        engine,
        args.matches_dir.clone(),
        rand::random(),
    ));
    let addr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| CliError::Usage(format!("bad address: {e}")))?;
    let runtime = tokio::runtime::Runtime::new().map_err(data)?;
    runtime
        .block_on(crate::serve::run_server(store, addr))
        .map_err(data)
}
