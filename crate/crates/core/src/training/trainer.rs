use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::buffer::{BufferStats, ReplayBuffer, Sample};
use super::config::TrainConfig;
use super::selfplay::{play_game, self_play_game, GameRecord, Recorded, SelfPlayConfig};
use super::TrainError;
use crate::game::{Game, GameStatus, Player};
use crate::games::AnyGame;
use crate::mcts::{Evaluator, NetworkEvaluator, SearchError};
use crate::nn::{load_checkpoint, save_checkpoint, sgd_step, Checkpoint, LossBreakdown, Network};
use crate::tournament::{EloPool, GameResult, Opponent};

pub const POOL_LEDGER: &str = "pool.txt";
pub const FINAL_CHECKPOINT: &str = "final.pzck";

const BACKOFF_MIN: Duration = Duration::from_millis(10);
const BACKOFF_MAX: Duration = Duration::from_secs(1);

pub fn checkpoint_id(step: u64) -> String {
    format!("step-{step}")
}

pub fn checkpoint_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.pzck"))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainSummary {
    pub games: u64,
    pub abandoned: u64,
    pub steps: u64,
    pub samples_produced: u64,
    /// Times the trainer found too few fresh samples and waited.
    pub starved_waits: u64,
    pub worker_restarts: u64,
    pub checkpoints: Vec<PathBuf>,
    pub buffer: BufferStats,
    pub dev_rating: f64,
    pub last_loss: Option<LossBreakdown>,
}

/// Who dev faces in one game.
#[derive(Clone, Debug)]
struct Job {
    opponent: Option<(String, Arc<Network<f32>>)>,
    dev_first: bool,
    seed: u64,
}

fn play_job(
    game: &AnyGame,
    dev: &Arc<Network<f32>>,
    job: &Job,
    config: &SelfPlayConfig,
) -> Result<GameRecord, SearchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let dev_ev = NetworkEvaluator::new(Arc::clone(dev));
    match &job.opponent {
        None => self_play_game(game, &dev_ev, config, &mut rng),
        Some((_, net)) => {
            let opp_ev = NetworkEvaluator::new(Arc::clone(net));
            let (players, dev_player): ([&dyn Evaluator<AnyGame>; 2], Player) = if job.dev_first {
                ([&dev_ev, &opp_ev], Player::First)
            } else {
                ([&opp_ev, &dev_ev], Player::Second)
            };
            play_game(game, players, Recorded::Only(dev_player), config, &mut rng)
        }
    }
}

fn dev_result(status: GameStatus, dev_first: bool) -> Option<GameResult> {
    let dev = if dev_first {
        Player::First
    } else {
        Player::Second
    };
    match status {
        GameStatus::Ongoing => None,
        GameStatus::Draw => Some(GameResult::Draw),
        GameStatus::Win(p) if p == dev => Some(GameResult::Win),
        GameStatus::Win(_) => Some(GameResult::Loss),
    }
}

/// Loads pool members' networks on demand and keeps them.
#[derive(Default)]
struct OpponentCache {
    nets: HashMap<String, Arc<Network<f32>>>,
}

impl OpponentCache {
    fn get(&mut self, dir: &Path, id: &str) -> Option<Arc<Network<f32>>> {
        if let Some(n) = self.nets.get(id) {
            return Some(Arc::clone(n));
        }
        match load_checkpoint(checkpoint_path(dir, id)) {
            Ok(ckpt) => {
                let net = Arc::new(ckpt.network);
                self.nets.insert(id.to_string(), Arc::clone(&net));
                Some(net)
            }
            Err(e) => {
                log::warn!("pool member {id} unavailable ({e}); playing dev against itself");
                None
            }
        }
    }
}

fn choose_job<R: Rng + ?Sized>(
    pool: &EloPool,
    cache: &mut OpponentCache,
    dir: &Path,
    fraction: f64,
    game_no: u64,
    rng: &mut R,
) -> Job {
    let opponent = if !pool.is_empty() && rng.random::<f64>() < fraction {
        match pool.select_opponent(rng) {
            Opponent::Member(id) => cache.get(dir, &id).map(|net| (id, net)),
            Opponent::SelfPlay => None,
        }
    } else {
        None
    };
    Job {
        opponent,
        dev_first: game_no.is_multiple_of(2),
        seed: rng.random(),
    }
}

fn write_checkpoint(
    dir: &Path,
    game_id: &str,
    net: &Network<f32>,
    step: u64,
    pool: &mut EloPool,
) -> Result<PathBuf, TrainError> {
    let id = checkpoint_id(step);
    let path = checkpoint_path(dir, &id);
    let mut ckpt = Checkpoint::new(game_id, net.clone());
    ckpt.step = step;
    ckpt.elo = Some(pool.dev_rating());
    save_checkpoint(&ckpt, &path)?;
    if let Some(gone) = pool.admit(&id)? {
        log::info!("pool full: dropped {} (elo {:.1})", gone.id, gone.rating);
    }
    pool.save(&dir.join(POOL_LEDGER))?;
    log::info!(
        "checkpoint {} (dev elo {:.1})",
        path.display(),
        pool.dev_rating()
    );
    Ok(path)
}

/// Self-play plus training for one game and one network.
pub struct Trainer {
    config: TrainConfig,
    game: AnyGame,
    net: Network<f32>,
    buffer: ReplayBuffer,
    pool: EloPool,
    cache: OpponentCache,
    rng: ChaCha8Rng,
    summary: TrainSummary,
    step: u64,
}

impl Trainer {
    /// Starts from a freshly initialised network and writes it as the
    /// step-0 checkpoint, which also seeds the opponent pool.
    pub fn new(config: TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let game = AnyGame::from_id(&config.game)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let spec = config.network_spec(game.action_space().channels);
        let net = Network::new(spec, &mut rng)?;
        let mut t = Self::assemble(config, game, net, 0, EloPool::default(), rng)?;
        let path = write_checkpoint(&t.config.out_dir, &t.game.id(), &t.net, 0, &mut t.pool)?;
        t.summary.checkpoints.push(path);
        Ok(t)
    }

    /// Continues from a checkpoint, reusing the pool ledger in the output
    /// directory when there is one.
    pub fn resume(config: TrainConfig, ckpt: Checkpoint) -> Result<Self, TrainError> {
        config.validate()?;
        let game = AnyGame::from_id(&config.game)?;
        if ckpt.game_id != game.id() {
            return Err(TrainError::Mismatch(format!(
                "checkpoint is for {} but the config trains {}",
                ckpt.game_id,
                game.id()
            )));
        }
        let ledger = config.out_dir.join(POOL_LEDGER);
        let pool = if ledger.exists() {
            EloPool::load(&ledger)?
        } else {
            EloPool::new(ckpt.elo.unwrap_or(crate::tournament::INITIAL_RATING))
        };
        let rng = ChaCha8Rng::seed_from_u64(config.seed ^ ckpt.step.rotate_left(32));
        Self::assemble(config, game, ckpt.network, ckpt.step, pool, rng)
    }

    fn assemble(
        config: TrainConfig,
        game: AnyGame,
        net: Network<f32>,
        step: u64,
        pool: EloPool,
        rng: ChaCha8Rng,
    ) -> Result<Self, TrainError> {
        let expected = game.action_space().channels;
        if net.spec().policy_channels != expected {
            return Err(TrainError::Mismatch(format!(
                "network has {} policy channels, {} needs {expected}",
                net.spec().policy_channels,
                game.id()
            )));
        }
        std::fs::create_dir_all(&config.out_dir)?;
        let buffer = ReplayBuffer::new(config.buffer_capacity);
        Ok(Self {
            config,
            game,
            net,
            buffer,
            pool,
            cache: OpponentCache::default(),
            rng,
            summary: TrainSummary::default(),
            step,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn game(&self) -> &AnyGame {
        &self.game
    }

    pub fn network(&self) -> &Network<f32> {
        &self.net
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn pool(&self) -> &EloPool {
        &self.pool
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn summary(&self) -> TrainSummary {
        TrainSummary {
            buffer: self.buffer.stats(),
            dev_rating: self.pool.dev_rating(),
            steps: self.step,
            ..self.summary.clone()
        }
    }

    /// Adds externally produced samples (for instance read from a worker stream).
    pub fn push_samples(&mut self, samples: impl IntoIterator<Item = Sample>) {
        for s in samples {
            self.buffer.push(s);
            self.summary.samples_produced += 1;
        }
    }

    /// One SGD step on a fresh batch; `None` when the buffer is starved.
    pub fn train_step(&mut self) -> Result<Option<LossBreakdown>, TrainError> {
        let batch = match self
            .buffer
            .sample_batch(self.config.batch_size, &mut self.rng)
        {
            Ok(b) => b,
            Err(_) => return Ok(None),
        };
        let loss = apply_batch(&mut self.net, &batch, &self.config)?;
        self.step += 1;
        self.summary.last_loss = Some(loss);
        if self.step.is_multiple_of(100) {
            log::debug!("step {} loss {:.4}", self.step, loss.total());
        }
        if self.step.is_multiple_of(self.config.checkpoint_interval) {
            let path = write_checkpoint(
                &self.config.out_dir,
                &self.game.id(),
                &self.net,
                self.step,
                &mut self.pool,
            )?;
            self.summary.checkpoints.push(path);
        }
        Ok(Some(loss))
    }

    /// Plays `n` games with the current network. Opponents and seeds are
    /// drawn in order from the trainer's generator, the games run in
    /// parallel, and results are applied in game order.
    pub fn play_round(&mut self, n: usize) -> Result<(), TrainError> {
        let dir = self.config.out_dir.clone();
        let jobs: Vec<Job> = (0..n as u64)
            .map(|i| {
                choose_job(
                    &self.pool,
                    &mut self.cache,
                    &dir,
                    self.config.pool_game_fraction,
                    self.summary.games + i,
                    &mut self.rng,
                )
            })
            .collect();
        let dev = Arc::new(self.net.clone());
        let sp = self.config.self_play();
        let game = &self.game;
        let records: Vec<Result<GameRecord, SearchError>> = jobs
            .par_iter()
            .map(|job| play_job(game, &dev, job, &sp))
            .collect();
        for (job, rec) in jobs.iter().zip(records) {
            let rec = rec?;
            self.absorb(job, rec)?;
        }
        Ok(())
    }

    fn absorb(&mut self, job: &Job, rec: GameRecord) -> Result<(), TrainError> {
        self.summary.games += 1;
        if rec.abandoned {
            self.summary.abandoned += 1;
            return Ok(());
        }
        if let (Some((id, _)), Some(result)) =
            (&job.opponent, dev_result(rec.status, job.dev_first))
        {
            // the member may have been evicted while the game was running
            if self.pool.get(id).is_some() {
                self.pool.record_result(id, result)?;
            }
        }
        self.push_samples(rec.samples);
        Ok(())
    }

    fn limits_reached(&self) -> bool {
        let c = &self.config;
        (c.max_steps > 0 && self.step >= c.max_steps)
            || (c.max_games > 0
                && self.summary.games >= c.max_games
                && self.buffer.eligible() < c.batch_size)
    }

    /// Alternates a round of games with training until the buffer runs dry.
    /// Reproducible for a fixed seed.
    pub fn run_synchronous(&mut self) -> Result<TrainSummary, TrainError> {
        loop {
            while !(self.config.max_steps > 0 && self.step >= self.config.max_steps) {
                if self.train_step()?.is_none() {
                    self.summary.starved_waits += 1;
                    break;
                }
            }
            if self.limits_reached() {
                break;
            }
            let remaining = if self.config.max_games > 0 {
                (self.config.max_games - self.summary.games) as usize
            } else {
                usize::MAX
            };
            if remaining == 0 {
                break;
            }
            self.play_round(self.config.games_per_round.min(remaining))?;
        }
        self.finish()
    }

    fn finish(&mut self) -> Result<TrainSummary, TrainError> {
        let mut ckpt = Checkpoint::new(self.game.id(), self.net.clone());
        ckpt.step = self.step;
        ckpt.elo = Some(self.pool.dev_rating());
        let path = self.config.out_dir.join(FINAL_CHECKPOINT);
        save_checkpoint(&ckpt, &path)?;
        self.pool.save(&self.config.out_dir.join(POOL_LEDGER))?;
        log::info!(
            "finished: {} games, {} steps, final checkpoint {}",
            self.summary.games,
            self.step,
            path.display()
        );
        Ok(self.summary())
    }

    /// Runs according to `config.synchronous`. Threaded runs stop when the
    /// limits are reached or `stop` is raised.
    pub fn run(&mut self, stop: Arc<AtomicBool>) -> Result<TrainSummary, TrainError> {
        if self.config.synchronous {
            self.run_synchronous()
        } else {
            self.run_threaded(stop)
        }
    }

    /// Worker threads play games into a shared buffer while this thread
    /// trains. A starved trainer backs off from 10 ms up to 1 s between
    /// polls. A worker that panics is logged and restarted.
    pub fn run_threaded(&mut self, stop: Arc<AtomicBool>) -> Result<TrainSummary, TrainError> {
        let buffer = Mutex::new(std::mem::replace(&mut self.buffer, ReplayBuffer::new(1)));
        let pool = Mutex::new(std::mem::take(&mut self.pool));
        let cache = Mutex::new(std::mem::take(&mut self.cache));
        let model = RwLock::new(Arc::new(self.net.clone()));
        let started = AtomicU64::new(self.summary.games);
        let finished = AtomicU64::new(self.summary.games);
        let abandoned = AtomicU64::new(0);
        let produced = AtomicU64::new(0);
        let restarts = AtomicU64::new(0);
        let alive = AtomicUsize::new(self.config.workers);
        let failure: Mutex<Option<TrainError>> = Mutex::new(None);
        let halt = AtomicBool::new(false);
        let config = self.config.clone();
        let game = self.game.clone();
        let sp = config.self_play();
        let base_seed: u64 = self.rng.random();

        let outcome = std::thread::scope(|scope| -> Result<(), TrainError> {
            for w in 0..config.workers {
                let (buffer, pool, cache, model) = (&buffer, &pool, &cache, &model);
                let (started, finished, abandoned, produced) =
                    (&started, &finished, &abandoned, &produced);
                let (restarts, alive, failure, halt, stop) =
                    (&restarts, &alive, &failure, &halt, &stop);
                let (config, game, sp) = (&config, &game, &sp);
                scope.spawn(move || {
                    let mut generation = 0u64;
                    loop {
                        let body = AssertUnwindSafe(|| -> Result<(), TrainError> {
                            let mut rng = ChaCha8Rng::seed_from_u64(
                                base_seed ^ ((w as u64 + 1) << 32) ^ generation,
                            );
                            loop {
                                if stop.load(Ordering::Relaxed) || halt.load(Ordering::Relaxed) {
                                    return Ok(());
                                }
                                let n = started.fetch_add(1, Ordering::SeqCst);
                                if config.max_games > 0 && n >= config.max_games {
                                    return Ok(());
                                }
                                let job = {
                                    let pool = pool.lock().expect("pool lock");
                                    let mut cache = cache.lock().expect("cache lock");
                                    choose_job(
                                        &pool,
                                        &mut cache,
                                        &config.out_dir,
                                        config.pool_game_fraction,
                                        n,
                                        &mut rng,
                                    )
                                };
                                let dev = Arc::clone(&model.read().expect("model lock"));
                                let rec = play_job(game, &dev, &job, sp)?;
                                if rec.abandoned {
                                    abandoned.fetch_add(1, Ordering::Relaxed);
                                } else {
                                    if let (Some((id, _)), Some(r)) =
                                        (&job.opponent, dev_result(rec.status, job.dev_first))
                                    {
                                        let mut pool = pool.lock().expect("pool lock");
                                        if pool.get(id).is_some() {
                                            pool.record_result(id, r)?;
                                        }
                                    }
                                    let count = rec.samples.len() as u64;
                                    let mut buf = buffer.lock().expect("buffer lock");
                                    for s in rec.samples {
                                        buf.push(s);
                                    }
                                    produced.fetch_add(count, Ordering::Relaxed);
                                }
                                finished.fetch_add(1, Ordering::SeqCst);
                            }
                        });
                        match catch_unwind(body) {
                            Ok(Ok(())) => break,
                            Ok(Err(e)) => {
                                log::error!("worker {w} failed: {e}");
                                failure.lock().expect("failure lock").get_or_insert(e);
                                halt.store(true, Ordering::SeqCst);
                                break;
                            }
                            Err(_) => {
                                restarts.fetch_add(1, Ordering::Relaxed);
                                generation += 1;
                                log::error!("worker {w} crashed; restarting");
                            }
                        }
                    }
                    alive.fetch_sub(1, Ordering::SeqCst);
                });
            }

            let mut backoff = BACKOFF_MIN;
            let result = loop {
                if stop.load(Ordering::Relaxed) || halt.load(Ordering::Relaxed) {
                    break Ok(());
                }
                if config.max_steps > 0 && self.step >= config.max_steps {
                    break Ok(());
                }
                let batch = buffer
                    .lock()
                    .expect("buffer lock")
                    .sample_batch(config.batch_size, &mut self.rng);
                let batch = match batch {
                    Ok(b) => b,
                    Err(_) => {
                        let games_done = config.max_games > 0
                            && finished.load(Ordering::SeqCst) >= config.max_games;
                        if games_done || (alive.load(Ordering::SeqCst) == 0 && config.workers > 0) {
                            break Ok(());
                        }
                        self.summary.starved_waits += 1;
                        std::thread::sleep(backoff);
                        backoff = (backoff * 2).min(BACKOFF_MAX);
                        continue;
                    }
                };
                backoff = BACKOFF_MIN;
                let loss = match apply_batch(&mut self.net, &batch, &config) {
                    Ok(l) => l,
                    Err(e) => break Err(e),
                };
                self.step += 1;
                self.summary.last_loss = Some(loss);
                *model.write().expect("model lock") = Arc::new(self.net.clone());
                if self.step.is_multiple_of(config.checkpoint_interval) {
                    let mut pool = pool.lock().expect("pool lock");
                    match write_checkpoint(
                        &config.out_dir,
                        &game.id(),
                        &self.net,
                        self.step,
                        &mut pool,
                    ) {
                        Ok(p) => self.summary.checkpoints.push(p),
                        Err(e) => break Err(e),
                    }
                }
            };
            halt.store(true, Ordering::SeqCst);
            result
        });

        self.buffer = buffer.into_inner().expect("buffer lock");
        self.pool = pool.into_inner().expect("pool lock");
        self.cache = cache.into_inner().expect("cache lock");
        self.summary.games = finished.load(Ordering::SeqCst);
        self.summary.abandoned += abandoned.load(Ordering::SeqCst);
        self.summary.samples_produced += produced.load(Ordering::SeqCst);
        self.summary.worker_restarts += restarts.load(Ordering::SeqCst);
        outcome?;
        if let Some(e) = failure.into_inner().expect("failure lock") {
            return Err(e);
        }
        self.finish()
    }
}

fn apply_batch(
    net: &mut Network<f32>,
    batch: &[Sample],
    config: &TrainConfig,
) -> Result<LossBreakdown, TrainError> {
    let examples: Vec<_> = batch.iter().map(Sample::example).collect();
    let (loss, grads) = net.loss_and_gradients(&examples, config.weight_decay)?;
    sgd_step(net, &grads, config.learning_rate as f32)?;
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(dir: &Path) -> TrainConfig {
        TrainConfig {
            game: "connect3x3k3".into(),
            batch_size: 16,
            checkpoint_interval: 10,
            buffer_capacity: 500,
            simulations: 8,
            games_per_round: 4,
            trunk_channels: 4,
            residual_blocks: 1,
            value_pool_channels: 2,
            value_hidden: 4,
            out_dir: dir.to_path_buf(),
            ..TrainConfig::default()
        }
    }

    #[test]
    fn synchronous_run_writes_checkpoints_and_respects_reuse() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny(dir.path());
        config.max_steps = 25;
        let mut t = Trainer::new(config).unwrap();
        let s = t.run_synchronous().unwrap();
        assert_eq!(s.steps, 25);
        let names: Vec<String> = s
            .checkpoints
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["step-0.pzck", "step-10.pzck", "step-20.pzck"]);
        assert!(s.buffer.max_reuse <= 8);
        assert_eq!(s.buffer.total_pushed, s.samples_produced);
        let fin = load_checkpoint(dir.path().join(FINAL_CHECKPOINT)).unwrap();
        assert_eq!(fin.step, 25);
        let pool = EloPool::load(&dir.path().join(POOL_LEDGER)).unwrap();
        assert_eq!(pool.len(), 3);
    }

    #[test]
    fn game_limit_drains_the_buffer() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny(dir.path());
        config.max_games = 6;
        let s = Trainer::new(config).unwrap().run_synchronous().unwrap();
        assert_eq!(s.games, 6);
        assert!(s.buffer.eligible < 16);
        assert!(s.steps > 0);
    }

    #[test]
    fn threaded_run_stops_at_the_step_limit() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny(dir.path());
        config.synchronous = false;
        config.workers = 2;
        config.max_steps = 12;
        let mut t = Trainer::new(config).unwrap();
        let s = t.run(Arc::new(AtomicBool::new(false))).unwrap();
        assert_eq!(s.steps, 12);
        assert!(s.games > 0);
        assert_eq!(s.buffer.total_pushed, s.samples_produced);
        assert!(s.buffer.max_reuse <= 8);
    }

    #[test]
    fn without_workers_the_trainer_idles_until_stopped() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny(dir.path());
        config.synchronous = false;
        config.workers = 0;
        let mut t = Trainer::new(config).unwrap();
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let stopper = std::thread::spawn(move || {
            std::thread::sleep(Duration::from_millis(150));
            flag.store(true, Ordering::SeqCst);
        });
        let s = t.run(stop).unwrap();
        stopper.join().unwrap();
        assert_eq!(s.steps, 0);
        assert!(s.starved_waits >= 2);
    }

    #[test]
    fn resume_rejects_another_game() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny(dir.path());
        config.max_steps = 1;
        let t = Trainer::new(config.clone()).unwrap();
        let ckpt = Checkpoint::new("hex5", t.network().clone());
        assert!(matches!(
            Trainer::resume(config, ckpt),
            Err(TrainError::Mismatch(_))
        ));
    }
}
