//! Acceptance suite. Prints one `PASS` / `FAIL` line per criterion, even
//! under a plain `cargo test`, and fails if any criterion fails.
//!
//! ```text
//! cargo test --release -p polyzero --test acceptance -- --nocapture
//! ```
//!
//! `ACCEPTANCE_ONLY=hex-no-draw,tournament` restricts the run to the named
//! criteria.

mod common;

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::AtomicBool;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use common::{hex_connected, DelayMinimax, Minimax, RefConnect};
use polyzero::arena::{play_match, Agent, ArenaConfig, MctsAgent, RandomAgent};
use polyzero::game::{Game, GameStatus, Player, FEATURE_PLANES};
use polyzero::games::{AnyGame, AnyState, ConnectK, Hex};
use polyzero::mcts::{
    run_search, NodeKind, SearchConfig, SearchError, Tree, UniformEvaluator, ROOT,
};
use polyzero::nn::{
    global_pool, grow_add_block, grow_add_channels, grow_kernel, load_checkpoint, save_checkpoint,
    sgd_step, ChannelGroup, Checkpoint, CheckpointError, Conv2d, Example, Linear, Network,
    NetworkSpec, Tensor,
};
use polyzero::tournament::{EloPool, GameResult, Opponent, POOL_CAPACITY};
use polyzero::training::{
    checkpoint_path, Sample, TrainConfig, Trainer, FINAL_CHECKPOINT, MAX_REUSE,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Outcome of one criterion.
struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn run(name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = f();
    // Written to the handle rather than through `println!`, which the test
    // harness captures, so the verdicts show up in a plain `cargo test`.
    let mut out = std::io::stdout();
    let _ = writeln!(
        out,
        "{} {name}: {} [{:.1}s]",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        start.elapsed().as_secs_f64()
    );
    let _ = out.flush();
    v.pass
}

type Criterion = (&'static str, fn() -> Verdict);

#[test]
fn acceptance_suite() {
    let criteria: [Criterion; 11] = [
        ("hex-no-draw", hex_no_draw),
        ("rules-oracle", rules_oracle),
        ("search-strength", search_strength),
        ("gradient-checks", gradient_checks),
        ("neuroplasticity", neuroplasticity),
        ("scale-invariance", scale_invariance),
        ("end-to-end", end_to_end),
        ("tournament", tournament),
        ("replay-discipline", replay_discipline),
        ("checkpoint-round-trip", checkpoint_round_trip),
        ("determinism", determinism),
    ];
    let only = std::env::var("ACCEPTANCE_ONLY").ok();
    let selected = |name: &str| {
        only.as_deref()
            .is_none_or(|list| list.split(',').any(|n| n.trim() == name))
    };
    let failed: Vec<&str> = criteria
        .into_iter()
        .filter(|(name, _)| selected(name))
        .filter_map(|(name, f)| (!run(name, f)).then_some(name))
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

// ---------------------------------------------------------------- games

fn hex_no_draw() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut total, mut one_winner, mut agree) = (0, 0, 0);
    for n in 2..=8 {
        let game = Hex::new(n).expect("valid size");
        for _ in 0..1000 {
            let mut order: Vec<usize> = (0..n * n).collect();
            order.shuffle(&mut rng);
            let mut cells = vec![0u8; n * n];
            for (i, &x) in order.iter().enumerate() {
                cells[x] = if i % 2 == 0 { 1 } else { 2 };
            }
            let (black, white) = (hex_connected(n, &cells, 1), hex_connected(n, &cells, 2));
            total += 1;
            if black != white {
                one_winner += 1;
            }
            let mut s = game.initial_state();
            for &x in &order {
                if game.status(&s).is_terminal() {
                    break;
                }
                s = game.apply(&s, x).expect("empty cell is legal");
            }
            let expected = if black { Player::First } else { Player::Second };
            if game.status(&s) == GameStatus::Win(expected) {
                agree += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        one_winner == total && agree == total && secs < 10.0,
        format!(
            "N in 2..=8: exactly one winner in {one_winner}/{total} fills, library agrees on {agree}/{total}, {secs:.2}s (< 10s)"
        ),
    )
}

fn connect3x3() -> ConnectK {
    ConnectK::new(3, 3, 3).expect("valid board")
}

fn to_ref(game: &ConnectK, s: &<ConnectK as Game>::State) -> RefConnect {
    let mut r = RefConnect::new(3, 3, 3);
    for row in 0..3 {
        for col in 0..3 {
            r.cells[row * 3 + col] = match game.owner_at(s, row, col) {
                None => 0,
                Some(Player::First) => 1,
                Some(Player::Second) => 2,
            };
        }
    }
    r
}

/// Every reachable position, discovered through the library's own moves.
fn reachable(game: &ConnectK) -> Vec<<ConnectK as Game>::State> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::from([game.initial_state()]);
    while let Some(s) = queue.pop_front() {
        if !seen.insert(to_ref(game, &s).cells) {
            continue;
        }
        for a in game.legal_actions(&s).expect("decision node") {
            queue.push_back(game.apply(&s, a).expect("legal"));
        }
        out.push(s);
    }
    out
}

fn oracle_status(r: &RefConnect) -> GameStatus {
    match r.winner() {
        Some(1) => GameStatus::Win(Player::First),
        Some(_) => GameStatus::Win(Player::Second),
        None if r.full() => GameStatus::Draw,
        None => GameStatus::Ongoing,
    }
}

/// Negamax over the library's transitions, for comparison with the oracle.
fn library_value(
    game: &ConnectK,
    s: &<ConnectK as Game>::State,
    memo: &mut HashMap<Vec<u8>, i8>,
) -> i8 {
    let mover = game.player_to_move(s);
    match game.status(s) {
        GameStatus::Win(p) => return if p == mover { 1 } else { -1 },
        GameStatus::Draw => return 0,
        GameStatus::Ongoing => {}
    }
    let key = to_ref(game, s).cells;
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let v = game
        .legal_actions(s)
        .expect("decision node")
        .into_iter()
        .map(|a| -library_value(game, &game.apply(s, a).expect("legal"), memo))
        .max()
        .expect("moves exist");
    memo.insert(key, v);
    v
}

fn rules_oracle() -> Verdict {
    // Reachable-state counts from an independent Python enumeration.
    const STATES: usize = 694;
    const TERMINAL: usize = 189;
    const ROOT_VALUE: i8 = 0;

    let start = Instant::now();
    let game = connect3x3();
    let states = reachable(&game);
    let mut oracle = Minimax::default();
    let mut memo = HashMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut mismatches, mut terminal, mut edges_checked) = (Vec::new(), 0, 0);
    for s in &states {
        let r = to_ref(&game, s);
        let status = game.status(s);
        if status != oracle_status(&r) {
            mismatches.push(format!("status {:?}", r.cells));
        }
        if game.legal_actions(s).expect("decision node") != r.moves() {
            mismatches.push(format!("legal {:?}", r.cells));
        }
        if library_value(&game, s, &mut memo) != oracle.value(&r) {
            mismatches.push(format!("value {:?}", r.cells));
        }
        let config = SearchConfig::uct(r.moves().len().max(1) as u32, 1.0);
        if status.is_terminal() {
            terminal += 1;
            if !matches!(
                run_search(&game, s, &UniformEvaluator, &config, &mut rng),
                Err(SearchError::TerminalRoot)
            ) {
                mismatches.push(format!("terminal root searched {:?}", r.cells));
            }
            continue;
        }
        // One simulation per legal move visits every root child once.
        let mut tree =
            Tree::new(&game, s, &UniformEvaluator, &config, &mut rng).expect("non-terminal root");
        for _ in 0..config.simulations {
            tree.simulate(&game, &UniformEvaluator, &config, &mut rng)
                .expect("simulation");
        }
        for edge in &tree.node(ROOT).edges {
            edges_checked += 1;
            let child_ref = r.play(edge.label);
            let kind = edge.child.map(|id| tree.node(id).kind);
            let expected = match child_ref.winner() {
                Some(1) => NodeKind::Terminal(1.0),
                Some(_) => NodeKind::Terminal(-1.0),
                None if child_ref.full() => NodeKind::Terminal(0.0),
                None => NodeKind::Decision(if child_ref.to_move() == 1 {
                    Player::First
                } else {
                    Player::Second
                }),
            };
            if kind != Some(expected) {
                mismatches.push(format!(
                    "child {} of {:?}: {kind:?} vs {expected:?}",
                    edge.label, r.cells
                ));
            }
        }
    }
    let root_value = oracle.value(&RefConnect::new(3, 3, 3));
    let secs = start.elapsed().as_secs_f64();
    verdict(
        mismatches.is_empty()
            && states.len() == STATES
            && terminal == TERMINAL
            && root_value == ROOT_VALUE
            && secs < 60.0,
        format!(
            "{} states ({terminal} terminal), {edges_checked} tree edges, root value {root_value}, {} mismatches{}, {secs:.2}s (< 60s)",
            states.len(),
            mismatches.len(),
            mismatches.first().map(|m| format!(" e.g. {m}")).unwrap_or_default()
        ),
    )
}

fn search_strength() -> Verdict {
    let start = Instant::now();
    let game = connect3x3();
    let positions: Vec<_> = reachable(&game)
        .into_iter()
        .filter(|s| !game.status(s).is_terminal())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let picked: Vec<_> = positions.choose_multiple(&mut rng, 100).cloned().collect();
    let config = SearchConfig::uct(10_000, 1.0);
    let mut oracle = Minimax::default();
    let (mut optimal, mut discriminating) = (0, 0);
    for s in &picked {
        let values = oracle.move_values(&to_ref(&game, s));
        let best = values.iter().map(|&(_, v)| v).max().expect("moves");
        if values.iter().any(|&(_, v)| v != best) {
            discriminating += 1;
        }
        let chosen = run_search(&game, s, &UniformEvaluator, &config, &mut rng)
            .expect("search")
            .chosen;
        if values.iter().any(|&(m, v)| m == chosen && v == best) {
            optimal += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        optimal >= 95 && secs < 300.0,
        format!(
            "UCT k=1 M=10000 optimal in {optimal}/100 positions ({discriminating} have a suboptimal move), {secs:.1}s (< 300s)"
        ),
    )
}

// -------------------------------------------------------------- network

/// Relative error with a floor on the denominator, so that gradients that
/// are zero up to rounding are judged on absolute error.
const REL_FLOOR: f64 = 1e-4;
const FD_STEP: f64 = 1e-6;

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn random_tensor(shape: &[usize], rng: &mut impl Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("shape")
}

/// Largest relative error between `analytic` and central differences of
/// `loss` with respect to every entry of `param`.
fn fd_check(
    param: &mut Tensor<f64>,
    analytic: &[f64],
    mut loss: impl FnMut(&Tensor<f64>) -> f64,
) -> f64 {
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = param.data()[i];
        param.data_mut()[i] = orig + FD_STEP;
        let up = loss(param);
        param.data_mut()[i] = orig - FD_STEP;
        let down = loss(param);
        param.data_mut()[i] = orig;
        worst = worst.max(rel_err(a, (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gradient_checks() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut net_worst, mut conv_worst, mut lin_worst, mut pool_worst) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut params = 0;
    for _ in 0..20 {
        // Whole network: stem, residual blocks, ReLU, both heads, pooling,
        // masked softmax cross-entropy, squared value error and decay.
        let spec = NetworkSpec {
            input_channels: FEATURE_PLANES,
            trunk_channels: rng.random_range(1..=4),
            residual_blocks: rng.random_range(1..=2),
            kernel_size: *[1, 3, 5].choose(&mut rng).expect("non-empty"),
            policy_channels: rng.random_range(1..=2),
            value_pool_channels: rng.random_range(1..=3),
            value_hidden: rng.random_range(1..=4),
        };
        let mut net: Network<f64> = Network::new(spec, &mut rng).expect("valid spec");
        for t in net.tensors_mut() {
            for v in t.data_mut() {
                *v = rng.random_range(-0.5..0.5);
            }
        }
        let (h, w) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let size = spec.policy_channels * h * w;
        let lambda = rng.random_range(0.0..1e-2);
        let inputs: Vec<Tensor<f64>> = (0..2)
            .map(|_| random_tensor(&[FEATURE_PLANES, h, w], &mut rng))
            .collect();
        let masks: Vec<Vec<bool>> = (0..2)
            .map(|_| {
                let mut m: Vec<bool> = (0..size).map(|_| rng.random_bool(0.6)).collect();
                m[rng.random_range(0..size)] = true;
                m
            })
            .collect();
        let targets: Vec<Vec<f64>> = masks
            .iter()
            .map(|m| {
                let raw: Vec<f64> = m
                    .iter()
                    .map(|&b| if b { rng.random::<f64>() } else { 0.0 })
                    .collect();
                let total: f64 = raw.iter().sum::<f64>().max(1e-12);
                raw.iter().map(|x| x / total).collect()
            })
            .collect();
        let rewards: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let batch: Vec<Example<'_, f64>> = (0..2)
            .map(|i| Example {
                input: &inputs[i],
                policy: &targets[i],
                mask: &masks[i],
                reward: rewards[i],
            })
            .collect();
        let (_, grads) = net.loss_and_gradients(&batch, lambda).expect("loss");
        let grad_data: Vec<Vec<f64>> = grads
            .named_tensors()
            .iter()
            .map(|(_, t)| t.data().to_vec())
            .collect();
        for (ti, analytic) in grad_data.iter().enumerate() {
            params += analytic.len();
            for (i, &a) in analytic.iter().enumerate() {
                let orig = net.tensors_mut()[ti].data()[i];
                net.tensors_mut()[ti].data_mut()[i] = orig + FD_STEP;
                let up = net
                    .loss_and_gradients(&batch, lambda)
                    .expect("loss")
                    .0
                    .total();
                net.tensors_mut()[ti].data_mut()[i] = orig - FD_STEP;
                let down = net
                    .loss_and_gradients(&batch, lambda)
                    .expect("loss")
                    .0
                    .total();
                net.tensors_mut()[ti].data_mut()[i] = orig;
                net_worst = net_worst.max(rel_err(a, (up - down) / (2.0 * FD_STEP)));
            }
        }

        // Convolution on its own, including the input gradient.
        let (cin, cout, k) = (
            rng.random_range(1..=3),
            rng.random_range(1..=3),
            *[1, 3, 5].choose(&mut rng).expect("k"),
        );
        let mut conv = Conv2d {
            weight: random_tensor(&[cout, cin, k, k], &mut rng),
            bias: random_tensor(&[cout], &mut rng),
        };
        let mut x = random_tensor(&[cin, h, w], &mut rng);
        let g = random_tensor(&[cout, h, w], &mut rng);
        let (_, cols) = conv.forward(&x).expect("conv");
        let (cg, xg) = conv.backward(&cols, &g, true);
        let xg = xg.expect("input gradient requested");
        let probe = conv.clone();
        conv_worst = conv_worst.max(fd_check(&mut x, xg.data(), |x| {
            dot(probe.forward(x).expect("conv").0.data(), g.data())
        }));
        let (bias, x0) = (conv.bias.clone(), x.clone());
        conv_worst = conv_worst.max(fd_check(&mut conv.weight, cg.weight.data(), |wt| {
            dot(
                polyzero::nn::conv2d(&x0, wt, &bias).expect("conv").0.data(),
                g.data(),
            )
        }));
        let weight = conv.weight.clone();
        conv_worst = conv_worst.max(fd_check(&mut conv.bias, cg.bias.data(), |b| {
            dot(
                polyzero::nn::conv2d(&x0, &weight, b)
                    .expect("conv")
                    .0
                    .data(),
                g.data(),
            )
        }));

        // Fully connected layer.
        let (fin, fout) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let mut lin = Linear {
            weight: random_tensor(&[fout, fin], &mut rng),
            bias: random_tensor(&[fout], &mut rng),
        };
        let mut xv = random_tensor(&[fin], &mut rng);
        let gv = random_tensor(&[fout], &mut rng);
        let (lg, xg) = lin.backward(xv.data(), gv.data());
        let probe = lin.clone();
        lin_worst = lin_worst.max(fd_check(&mut xv, &xg, |x| {
            dot(&probe.forward(x.data()).expect("linear"), gv.data())
        }));
        let (lb, x0) = (lin.bias.clone(), xv.clone());
        lin_worst = lin_worst.max(fd_check(&mut lin.weight, lg.weight.data(), |wt| {
            let l = Linear {
                weight: wt.clone(),
                bias: lb.clone(),
            };
            dot(&l.forward(x0.data()).expect("linear"), gv.data())
        }));
        let lw = lin.weight.clone();
        lin_worst = lin_worst.max(fd_check(&mut lin.bias, lg.bias.data(), |b| {
            let l = Linear {
                weight: lw.clone(),
                bias: b.clone(),
            };
            dot(&l.forward(x0.data()).expect("linear"), gv.data())
        }));

        // Global max+mean pooling.
        let c = rng.random_range(1..=3);
        let mut feat = random_tensor(&[c, h, w], &mut rng);
        let gp = random_tensor(&[2 * c], &mut rng);
        let (_, argmax) = global_pool(&feat).expect("pool");
        let analytic = polyzero::nn::layers::global_pool_backward(gp.data(), &argmax, h, w);
        pool_worst = pool_worst.max(fd_check(&mut feat, analytic.data(), |f| {
            dot(&global_pool(f).expect("pool").0, gp.data())
        }));
    }
    let worst = net_worst.max(conv_worst).max(lin_worst).max(pool_worst);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-4 && secs < 60.0,
        format!(
            "20 configs, {params} network parameters; max rel err network {net_worst:.1e}, conv {conv_worst:.1e}, linear {lin_worst:.1e}, pool {pool_worst:.1e} (< 1e-4, h={FD_STEP:.0e}, floor {REL_FLOOR:.0e}), {secs:.1}s (< 60s)"
        ),
    )
}

fn randomized_net(spec: NetworkSpec, rng: &mut ChaCha8Rng) -> Network<f32> {
    let mut net: Network<f32> = Network::new(spec, rng).expect("valid spec");
    for t in net.tensors_mut() {
        for v in t.data_mut() {
            *v = rng.random_range(-0.5..0.5);
        }
    }
    net
}

fn neuroplasticity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = NetworkSpec {
        input_channels: FEATURE_PLANES,
        trunk_channels: 6,
        residual_blocks: 1,
        kernel_size: 3,
        policy_channels: 1,
        value_pool_channels: 3,
        value_hidden: 5,
    };
    let base = randomized_net(spec, &mut rng);
    let grown: Vec<(&str, Network<f32>)> = vec![
        ("add-block", grow_add_block(&base, &mut rng)),
        (
            "add-channels trunk",
            grow_add_channels(&base, ChannelGroup::Trunk, 3, &mut rng).expect("grow"),
        ),
        (
            "add-channels value-pool",
            grow_add_channels(&base, ChannelGroup::ValuePool, 2, &mut rng).expect("grow"),
        ),
        (
            "add-channels value-hidden",
            grow_add_channels(&base, ChannelGroup::ValueHidden, 4, &mut rng).expect("grow"),
        ),
        ("grow-kernel 5", grow_kernel(&base, 5).expect("grow")),
    ];

    let mut ok = true;
    let mut parts = Vec::new();
    for (name, net) in &grown {
        let mut diff = 0.0f64;
        for _ in 0..100 {
            let (h, w) = (rng.random_range(1..=8), rng.random_range(1..=8));
            let n = FEATURE_PLANES * h * w;
            let x = Tensor::new(
                &[FEATURE_PLANES, h, w],
                (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
            .expect("shape");
            let (a, b) = (
                base.forward(&x).expect("forward"),
                net.forward(&x).expect("forward"),
            );
            diff = diff
                .max(a.policy.max_abs_diff(&b.policy))
                .max(f64::from((a.value - b.value).abs()));
        }

        // A fixed batch on a 4×4 board, trained for up to 100 steps.
        let samples: Vec<Sample> = (0..16)
            .map(|_| {
                let input = Tensor::new(
                    &[FEATURE_PLANES, 4, 4],
                    (0..48).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
                .expect("shape");
                let mask: Vec<bool> = (0..16)
                    .map(|i| i % 3 != 0 || rng.random_bool(0.5))
                    .collect();
                let raw: Vec<f32> = mask
                    .iter()
                    .map(|&m| if m { rng.random::<f32>() } else { 0.0 })
                    .collect();
                let total: f32 = raw.iter().sum();
                Sample {
                    input,
                    policy: raw.iter().map(|x| x / total).collect(),
                    mask,
                    reward: rng.random_range(-1.0..1.0),
                }
            })
            .collect();
        let batch: Vec<Example<'_, f32>> = samples.iter().map(Sample::example).collect();
        let mut trained = net.clone();
        let first = trained
            .loss_and_gradients(&batch, 1e-4)
            .expect("loss")
            .0
            .total();
        let mut last = first;
        for _ in 0..100 {
            let (loss, grads) = trained.loss_and_gradients(&batch, 1e-4).expect("loss");
            last = loss.total();
            sgd_step(&mut trained, &grads, 0.02).expect("finite gradients");
        }
        let decreased = last < first;
        ok &= diff == 0.0 && decreased;
        parts.push(format!("{name}: diff {diff:e}, loss {first:.3}->{last:.3}"));
    }
    verdict(ok, parts.join("; "))
}

// ------------------------------------------------------------- training

fn connect3_config(out: &Path) -> TrainConfig {
    TrainConfig::from_text(&format!(
        "game = connect4x4k3\n\
         trunk_channels = 16\n\
         residual_blocks = 2\n\
         simulations = 64\n\
         max_games = 2000\n\
         batch_size = 64\n\
         buffer_capacity = 4000\n\
         checkpoint_interval = 500\n\
         learning_rate = 0.02\n\
         value_pool_channels = 16\n\
         value_hidden = 64\n\
         out_dir = {}\n",
        out.display()
    ))
    .expect("valid config")
}

fn arena(games: u32, seed: u64) -> ArenaConfig {
    ArenaConfig {
        games,
        seed,
        ..ArenaConfig::default()
    }
}

fn scale_invariance() -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = TrainConfig::from_text(&format!(
        "game = hex7\n\
         trunk_channels = 16\n\
         residual_blocks = 2\n\
         simulations = 64\n\
         max_games = 300\n\
         batch_size = 64\n\
         buffer_capacity = 4000\n\
         checkpoint_interval = 100000\n\
         learning_rate = 0.02\n\
         value_pool_channels = 8\n\
         value_hidden = 32\n\
         out_dir = {}\n",
        dir.path().display()
    ))
    .expect("valid config");
    let summary = Trainer::new(config)
        .expect("trainer")
        .run_synchronous()
        .expect("training");
    let ckpt = load_checkpoint(dir.path().join(FINAL_CHECKPOINT)).expect("final checkpoint");
    let net = Arc::new(ckpt.network);

    let mut shapes_ok = true;
    let mut shapes = Vec::new();
    for n in [9, 11, 13] {
        let game = Hex::new(n).expect("size");
        let out = net
            .forward(&game.encode(&game.initial_state()).expect("encode"))
            .expect("forward");
        let space = game.action_space();
        let ok = out.policy.shape() == [space.channels, n, n]
            && out.value.is_finite()
            && out.value.abs() < 1.0;
        shapes_ok &= ok;
        shapes.push(format!("{n}:{:?}", out.policy.shape()));
    }

    let hex9 = AnyGame::from_id("hex9").expect("id");
    let me = MctsAgent::network("hex7-final", net, 64);
    let report = play_match(&hex9, &me, &RandomAgent, &arena(100, 11)).expect("arena");
    let untrained = load_checkpoint(checkpoint_path(dir.path(), "step-0")).expect("step-0");
    let baseline = MctsAgent::network("hex7-step-0", Arc::new(untrained.network), 64);
    let base_report = play_match(&hex9, &baseline, &RandomAgent, &arena(100, 11)).expect("arena");
    verdict(
        shapes_ok && report.a_wins >= 80,
        format!(
            "trained {} hex7 games; policy shapes {}; 9x9 vs random at M=64: {} wins / {} draws / {} losses (>= 80); untrained step-0 wins {}",
            summary.games,
            shapes.join(" "),
            report.a_wins,
            report.draws,
            report.b_wins,
            base_report.a_wins
        ),
    )
}

/// Perfect Connect-K play from the oracle, with quick wins and slow losses.
/// Like the arena's network agents it samples among its best moves for
/// the first two plies.
struct PerfectPlayer {
    w: usize,
    h: usize,
    k: usize,
    minimax: Mutex<DelayMinimax>,
}

impl Agent<AnyGame> for PerfectPlayer {
    fn name(&self) -> String {
        "perfect".into()
    }

    fn choose(
        &self,
        game: &AnyGame,
        state: &AnyState,
        rng: &mut dyn RngCore,
    ) -> Result<usize, SearchError> {
        let mut r = RefConnect::new(self.w, self.h, self.k);
        for row in 0..self.h {
            for col in 0..self.w {
                r.cells[row * self.w + col] = match game.owner_at(state, row, col) {
                    None => 0,
                    Some(Player::First) => 1,
                    Some(Player::Second) => 2,
                };
            }
        }
        let best = self.minimax.lock().expect("oracle lock").best_moves(&r);
        Ok(if game.ply(state) < 2 {
            best[rng.next_u32() as usize % best.len()]
        } else {
            best[0]
        })
    }
}

fn end_to_end() -> Verdict {
    let start = Instant::now();
    let dir = tempfile::tempdir().expect("tempdir");
    let summary = Trainer::new(connect3_config(dir.path()))
        .expect("trainer")
        .run_synchronous()
        .expect("training");
    let train_secs = start.elapsed().as_secs_f64();
    let game = AnyGame::from_id("connect4x4k3").expect("id");
    let load = |path| Arc::new(load_checkpoint(path).expect("checkpoint").network);
    let me = MctsAgent::network("final", load(dir.path().join(FINAL_CHECKPOINT)), 64)
        .with_sample_plies(2);
    let old = MctsAgent::network("step-0", load(checkpoint_path(dir.path(), "step-0")), 64)
        .with_sample_plies(2);
    let vs_random = play_match(&game, &me, &RandomAgent, &arena(100, 7)).expect("arena");
    let vs_initial = play_match(&game, &me, &old, &arena(100, 7)).expect("arena");
    // How well flawless play does against the same step-0 network.
    let perfect = PerfectPlayer {
        w: 4,
        h: 4,
        k: 3,
        minimax: Mutex::new(DelayMinimax::default()),
    };
    let reference = play_match(&game, &perfect, &old, &arena(100, 7)).expect("arena");
    let secs = start.elapsed().as_secs_f64();
    verdict(
        vs_random.a_wins >= 95 && vs_initial.a_wins >= 70 && secs < 7200.0,
        format!(
            "{} games, {} steps in {train_secs:.0}s; vs random {}/{}/{} (>= 95 wins); vs step-0 {}/{}/{} (>= 70 wins); perfect play vs the same step-0 wins {}",
            summary.games,
            summary.steps,
            vs_random.a_wins,
            vs_random.draws,
            vs_random.b_wins,
            vs_initial.a_wins,
            vs_initial.draws,
            vs_initial.b_wins,
            reference.a_wins
        ),
    )
}

fn tournament() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    // Capacity under admissions interleaved with games.
    let mut pool = EloPool::default();
    let mut largest = 0;
    for i in 0..1000 {
        pool.admit(&format!("step-{i}")).expect("valid id");
        largest = largest.max(pool.len());
        for _ in 0..rng.random_range(0..5) {
            let id = pool
                .members()
                .choose(&mut rng)
                .expect("non-empty")
                .id
                .clone();
            let result = *[GameResult::Win, GameResult::Loss, GameResult::Draw]
                .choose(&mut rng)
                .expect("r");
            pool.record_result(&id, result).expect("member");
        }
    }

    // Selection frequencies against exp(-(dev - elo)/400), computed here.
    let dev = pool.dev_rating();
    let raw: Vec<f64> = pool
        .members()
        .iter()
        .map(|m| (-(dev - m.rating) / 400.0).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let mut counts: HashMap<String, u64> = HashMap::new();
    const DRAWS: u64 = 10_000;
    for _ in 0..DRAWS {
        match pool.select_opponent(&mut rng) {
            Opponent::Member(id) => *counts.entry(id).or_default() += 1,
            Opponent::SelfPlay => unreachable!("pool is not empty"),
        }
    }
    let mut chi2 = 0.0;
    let mut min_expected = f64::INFINITY;
    for (m, w) in pool.members().iter().zip(&raw) {
        let expected = DRAWS as f64 * w / total;
        min_expected = min_expected.min(expected);
        let observed = *counts.get(&m.id).unwrap_or(&0) as f64;
        chi2 += (observed - expected).powi(2) / expected;
    }
    let df = (pool.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(df).expect("df > 0").cdf(chi2);
    let spread = pool
        .members()
        .iter()
        .map(|m| m.rating)
        .fold(f64::NEG_INFINITY, f64::max)
        - pool
            .members()
            .iter()
            .map(|m| m.rating)
            .fold(f64::INFINITY, f64::min);

    // Zero-sum updates.
    let sum = |p: &EloPool| p.dev_rating() + p.members().iter().map(|m| m.rating).sum::<f64>();
    let initial = sum(&pool);
    let mut drift = 0.0f64;
    for _ in 0..10_000 {
        let id = pool
            .members()
            .choose(&mut rng)
            .expect("non-empty")
            .id
            .clone();
        let result = *[GameResult::Win, GameResult::Loss, GameResult::Draw]
            .choose(&mut rng)
            .expect("r");
        pool.record_result(&id, result).expect("member");
        drift = drift.max((sum(&pool) - initial).abs());
    }
    verdict(
        largest <= POOL_CAPACITY && p > 0.01 && min_expected >= 5.0 && drift <= 1e-9,
        format!(
            "max pool size {largest} (<= {POOL_CAPACITY}); chi-square {chi2:.2} on {df} df, p = {p:.3} (> 0.01), rating spread {spread:.0}; max rating-sum drift {drift:.1e} over 10000 updates (<= 1e-9)"
        ),
    )
}

fn small_config(out: &Path, extra: &str) -> TrainConfig {
    TrainConfig::from_text(&format!(
        "game = connect4x4k3\n\
         trunk_channels = 8\n\
         residual_blocks = 1\n\
         simulations = 16\n\
         batch_size = 16\n\
         buffer_capacity = 64\n\
         games_per_round = 4\n\
         checkpoint_interval = 25\n\
         value_pool_channels = 4\n\
         value_hidden = 8\n\
         out_dir = {}\n{extra}",
        out.display()
    ))
    .expect("valid config")
}

fn replay_discipline() -> Verdict {
    // Synchronous run driven step by step, auditing the buffer around every
    // round of self-play.
    let dir = tempfile::tempdir().expect("tempdir");
    let mut trainer = Trainer::new(small_config(dir.path(), "max_steps = 200\n")).expect("trainer");
    let cap = trainer.buffer().capacity();
    let (mut over_cap, mut order_violations, mut rounds, mut starved) = (0, 0, 0, 0);
    while trainer.step() < 200 {
        while trainer.step() < 200 && trainer.train_step().expect("step").is_some() {
            if trainer.buffer().stats().max_reuse > MAX_REUSE {
                over_cap += 1;
            }
        }
        if trainer.step() >= 200 {
            break;
        }
        starved += 1;
        let before: Vec<Sample> = (0..trainer.buffer().len())
            .map(|i| trainer.buffer().slot(i).expect("slot").clone())
            .collect();
        let pushed_before = trainer.buffer().stats().total_pushed;
        let cursor = trainer.buffer().cursor();
        trainer.play_round(4).expect("round");
        let added = (trainer.buffer().stats().total_pushed - pushed_before) as usize;
        rounds += 1;
        // Exactly the `added` slots following the cursor changed, wrapping.
        let written: HashSet<usize> = (0..added.min(cap)).map(|i| (cursor + i) % cap).collect();
        for i in 0..trainer.buffer().len() {
            let ok = if written.contains(&i) {
                trainer.buffer().reuse(i) == Some(0)
            } else {
                before.get(i) == trainer.buffer().slot(i)
            };
            if !ok {
                order_violations += 1;
            }
        }
        if trainer.buffer().cursor() != (cursor + added) % cap {
            order_violations += 1;
        }
    }
    let stats = trainer.buffer().stats();
    let sync_ok = stats.max_reuse == MAX_REUSE
        && over_cap == 0
        && order_violations == 0
        && stats.total_pushed > 2 * cap as u64;

    // Threaded run: the trainer outpaces one worker and has to wait.
    let dir = tempfile::tempdir().expect("tempdir");
    let mut threaded = Trainer::new(small_config(
        dir.path(),
        "synchronous = false\nworkers = 1\nmax_steps = 40\n",
    ))
    .expect("trainer");
    let summary = threaded
        .run(Arc::new(AtomicBool::new(false)))
        .expect("threaded run");
    let threaded_ok = summary.steps == 40
        && summary.starved_waits > 0
        && summary.buffer.total_pushed == summary.samples_produced
        && summary.buffer.max_reuse <= MAX_REUSE;
    verdict(
        sync_ok && threaded_ok,
        format!(
            "synchronous: {rounds} rounds, {starved} starved pauses, {} samples through {cap} slots, max reuse {} (= {MAX_REUSE}), {order_violations} overwrite-order violations; threaded: {} steps, {} starved waits, pushed {} of {} produced, max reuse {}",
            stats.total_pushed,
            stats.max_reuse,
            summary.steps,
            summary.starved_waits,
            summary.buffer.total_pushed,
            summary.samples_produced,
            summary.buffer.max_reuse
        ),
    )
}

fn checkpoint_round_trip() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let dir = tempfile::tempdir().expect("tempdir");
    let (mut identical, mut grown, mut rejected) = (0, 0, 0);
    for i in 0..50 {
        let spec = NetworkSpec {
            input_channels: FEATURE_PLANES,
            trunk_channels: rng.random_range(1..=8),
            residual_blocks: rng.random_range(1..=3),
            kernel_size: *[1, 3, 5].choose(&mut rng).expect("k"),
            policy_channels: rng.random_range(1..=3),
            value_pool_channels: rng.random_range(1..=4),
            value_hidden: rng.random_range(1..=8),
        };
        let mut net = randomized_net(spec, &mut rng);
        if i % 2 == 1 {
            grown += 1;
            net = match rng.random_range(0..3) {
                0 => grow_add_block(&net, &mut rng),
                1 => {
                    grow_add_channels(&net, ChannelGroup::Trunk, rng.random_range(1..=3), &mut rng)
                        .expect("grow")
                }
                _ => grow_kernel(&net, spec.kernel_size + 2).expect("grow"),
            };
        }
        let mut ckpt = Checkpoint::new(format!("hex{}", rng.random_range(2..=19)), net);
        ckpt.step = rng.random();
        ckpt.elo = rng.random_bool(0.5).then(|| rng.random_range(0.0..2000.0));
        let path = dir.path().join(format!("{i}.pzck"));
        save_checkpoint(&ckpt, &path).expect("save");
        let loaded = load_checkpoint(&path).expect("load");
        let bits = |c: &Checkpoint| -> Vec<u32> {
            c.network
                .named_tensors()
                .iter()
                .flat_map(|(_, t)| t.data().iter().map(|v| v.to_bits()))
                .collect()
        };
        if loaded == ckpt
            && bits(&loaded) == bits(&ckpt)
            && std::fs::read(&path).expect("read") == ckpt.to_bytes()
        {
            identical += 1;
        }

        // Flip one bit in the parameters or the trailer.
        let mut bytes = ckpt.to_bytes();
        let params = 4 * ckpt.spec().param_count();
        let at = bytes.len() - 4 - params + rng.random_range(0..params + 4);
        bytes[at] ^= 1 << rng.random_range(0..8);
        std::fs::write(&path, &bytes).expect("write");
        if matches!(
            load_checkpoint(&path),
            Err(CheckpointError::Checksum { .. })
        ) {
            rejected += 1;
        }
    }
    verdict(
        identical == 50 && rejected == 50,
        format!("{identical}/50 bitwise identical ({grown} grown); {rejected}/50 corrupted files rejected by checksum"),
    )
}

fn determinism() -> Verdict {
    let config = "max_steps = 50\nworkers = 1\nseed = 42\n";
    let dirs: Vec<_> = (0..2)
        .map(|_| tempfile::tempdir().expect("tempdir"))
        .collect();
    let summaries: Vec<_> = dirs
        .iter()
        .map(|d| {
            Trainer::new(small_config(d.path(), config))
                .expect("trainer")
                .run_synchronous()
                .expect("training")
        })
        .collect();
    let files = [
        "step-0.pzck",
        "step-25.pzck",
        "step-50.pzck",
        FINAL_CHECKPOINT,
        "pool.txt",
    ];
    let mut same = 0;
    for f in files {
        let a = std::fs::read(dirs[0].path().join(f)).expect("file");
        let b = std::fs::read(dirs[1].path().join(f)).expect("file");
        if a == b {
            same += 1;
        }
    }
    verdict(
        same == files.len() && summaries.iter().all(|s| s.steps == 50),
        format!(
            "{same}/{} files byte-identical across two 50-step runs ({} games each)",
            files.len(),
            summaries[0].games
        ),
    )
}
