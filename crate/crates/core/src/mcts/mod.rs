//! Monte Carlo tree search.
//!
//! Two modes share one tree:
//!
//! * **UCT** scores children with `avg + k·sqrt(ln N / n)` and evaluates a
//!   new leaf with a uniformly random rollout to the end of the game.
//! * **PUCT** scores children with `avg + prior·sqrt(N) / (1 + n)` and
//!   evaluates a new leaf with an [`Evaluator`] (normally the network).
//!
//! Chance nodes are resolved by sampling an outcome with its probability.
//!
//! Visit accounting: the root is evaluated once when the tree is built, so
//! after `M` simulations the root has `M + 1` visits and its children have
//! exactly `M` between them. Every decision node satisfies
//! `num_sims = 1 + Σ children`; a chance node has `num_sims = Σ children`.

mod evaluator;
mod policy;

use rand::Rng;
use thiserror::Error;

use crate::game::{Game, GameError, Player};
use crate::nn::NnError;

pub use evaluator::{Evaluation, Evaluator, NetworkEvaluator, UniformEvaluator};
pub use policy::{add_dirichlet_noise, masked_softmax, puct_score, uct_score};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("cannot search from a terminal position")]
    TerminalRoot,
    #[error("the search root must be a decision node")]
    ChanceRoot,
    #[error("expected a chance node")]
    NotChanceNode,
    #[error("no legal entry in the mask")]
    EmptyMask,
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    Uct,
    Puct,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub mode: SearchMode,
    /// Simulations per move (`M`).
    pub simulations: u32,
    /// UCT exploration constant `k`.
    pub exploration: f64,
    /// Softmax temperature applied to network logits.
    pub temperature: f32,
    pub dirichlet_alpha: f64,
    pub dirichlet_epsilon: f64,
    /// Mix Dirichlet noise into the root priors (self-play only).
    pub root_noise: bool,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            mode: SearchMode::Puct,
            simulations: 600,
            exploration: 1.0,
            temperature: 1.0,
            dirichlet_alpha: 0.3,
            dirichlet_epsilon: 0.25,
            root_noise: false,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn uct(simulations: u32, exploration: f64) -> Self {
        Self {
            mode: SearchMode::Uct,
            simulations,
            exploration,
            ..Self::default()
        }
    }

    pub fn puct(simulations: u32) -> Self {
        Self {
            simulations,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: String| Err(SearchError::Config(m));
        if self.simulations == 0 {
            return bad("at least one simulation is required".into());
        }
        if self.exploration.is_nan() || self.exploration < 0.0 {
            return bad(format!(
                "exploration constant must be >= 0, got {}",
                self.exploration
            ));
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return bad(format!("temperature must be > 0, got {}", self.temperature));
        }
        if !(0.0..=1.0).contains(&self.dirichlet_epsilon) {
            return bad(format!(
                "dirichlet epsilon must be in [0, 1], got {}",
                self.dirichlet_epsilon
            ));
        }
        if self.dirichlet_alpha.is_nan() || self.dirichlet_alpha <= 0.0 {
            return bad(format!(
                "dirichlet alpha must be > 0, got {}",
                self.dirichlet_alpha
            ));
        }
        Ok(())
    }
}

pub type NodeId = usize;

pub const ROOT: NodeId = 0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeKind {
    Decision(Player),
    Chance,
    /// Final reward from `First`'s perspective.
    Terminal(f64),
}

/// An outgoing edge: a legal action (decision node) or an outcome
/// position (chance node), with its prior or probability.
#[derive(Clone, Debug)]
pub struct Edge {
    pub label: usize,
    pub weight: f64,
    pub child: Option<NodeId>,
}

#[derive(Clone, Debug)]
pub struct Node<S> {
    pub state: S,
    pub kind: NodeKind,
    /// The player whose perspective `total_reward` is kept in: the mover at
    /// the parent decision node.
    pub perspective: Player,
    pub num_sims: u32,
    pub total_reward: f64,
    pub edges: Vec<Edge>,
    expanded: bool,
}

impl<S> Node<S> {
    pub fn avg_reward(&self) -> f64 {
        if self.num_sims == 0 {
            0.0
        } else {
            self.total_reward / self.num_sims as f64
        }
    }
}

/// A search tree stored in an arena. Node 0 is the root.
#[derive(Clone, Debug)]
pub struct Tree<G: Game> {
    nodes: Vec<Node<G::State>>,
}

fn sample_weighted<R: Rng + ?Sized>(
    weights: impl Iterator<Item = f64> + Clone,
    rng: &mut R,
) -> usize {
    let total: f64 = weights.clone().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
            if u < w {
                return i;
            }
            u -= w;
        }
    }
    last
}

/// Plays uniformly random moves (and probability-weighted chance outcomes)
/// to the end; returns the reward from `First`'s perspective.
pub fn random_rollout<G: Game, R: Rng + ?Sized>(
    game: &G,
    state: &G::State,
    rng: &mut R,
) -> Result<f64, SearchError> {
    let mut s = state.clone();
    loop {
        if game.status(&s).is_terminal() {
            return Ok(f64::from(game.outcome(&s, Player::First)?));
        }
        s = if game.is_chance(&s) {
            let mut outcomes = game.chance_outcomes(&s)?;
            let i = sample_weighted(outcomes.iter().map(|o| o.probability), rng);
            outcomes.swap_remove(i).state
        } else {
            let legal = game.legal_actions(&s)?;
            game.apply(&s, legal[rng.random_range(0..legal.len())])?
        };
    }
}

impl<G: Game> Tree<G> {
    /// Builds a tree whose root is evaluated once (counting as its first visit).
    pub fn new<E: Evaluator<G> + ?Sized, R: Rng + ?Sized>(
        game: &G,
        root: &G::State,
        evaluator: &E,
        config: &SearchConfig,
        rng: &mut R,
    ) -> Result<Self, SearchError> {
        config.validate()?;
        if game.status(root).is_terminal() {
            return Err(SearchError::TerminalRoot);
        }
        if game.is_chance(root) {
            return Err(SearchError::ChanceRoot);
        }
        let mover = game.player_to_move(root);
        let mut tree = Tree { nodes: Vec::new() };
        tree.push_node(game, root.clone(), mover.opponent())?;
        let value = tree.expand(game, ROOT, evaluator, config, rng)?;
        if config.root_noise && config.mode == SearchMode::Puct {
            let priors: Vec<f64> = tree.nodes[ROOT].edges.iter().map(|e| e.weight).collect();
            let noisy = add_dirichlet_noise(
                &priors,
                config.dirichlet_alpha,
                config.dirichlet_epsilon,
                rng,
            )?;
            for (e, p) in tree.nodes[ROOT].edges.iter_mut().zip(noisy) {
                e.weight = p;
            }
        }
        tree.backup(&[ROOT], value);
        Ok(tree)
    }

    pub fn node(&self, id: NodeId) -> &Node<G::State> {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push_node(
        &mut self,
        game: &G,
        state: G::State,
        perspective: Player,
    ) -> Result<NodeId, SearchError> {
        let kind = if game.status(&state).is_terminal() {
            NodeKind::Terminal(f64::from(game.outcome(&state, Player::First)?))
        } else if game.is_chance(&state) {
            NodeKind::Chance
        } else {
            NodeKind::Decision(game.player_to_move(&state))
        };
        self.nodes.push(Node {
            state,
            kind,
            perspective,
            num_sims: 0,
            total_reward: 0.0,
            edges: Vec::new(),
            expanded: false,
        });
        Ok(self.nodes.len() - 1)
    }

    /// Creates the edges of a decision node and returns the leaf value
    /// from `First`'s perspective.
    fn expand<E: Evaluator<G> + ?Sized, R: Rng + ?Sized>(
        &mut self,
        game: &G,
        id: NodeId,
        evaluator: &E,
        config: &SearchConfig,
        rng: &mut R,
    ) -> Result<f64, SearchError> {
        let node = &self.nodes[id];
        let NodeKind::Decision(mover) = node.kind else {
            unreachable!("only decision nodes are expanded");
        };
        let legal = game.legal_actions(&node.state)?;
        if legal.is_empty() {
            return Err(SearchError::EmptyMask);
        }
        let (priors, value) = match config.mode {
            SearchMode::Uct => {
                let v = random_rollout(game, &node.state, rng)?;
                (vec![1.0 / legal.len() as f64; legal.len()], v)
            }
            SearchMode::Puct => {
                let ev = evaluator.evaluate(game, &node.state, &legal)?;
                if ev.priors.len() != legal.len() {
                    return Err(SearchError::Config(format!(
                        "evaluator returned {} priors for {} legal actions",
                        ev.priors.len(),
                        legal.len()
                    )));
                }
                (
                    ev.priors,
                    ev.value.clamp(-1.0, 1.0) * f64::from(mover.sign()),
                )
            }
        };
        let node = &mut self.nodes[id];
        node.edges = legal
            .into_iter()
            .zip(priors)
            .map(|(label, weight)| Edge {
                label,
                weight,
                child: None,
            })
            .collect();
        node.expanded = true;
        Ok(value)
    }

    /// Index of the edge with the best selection score (lowest index on ties).
    fn select(&self, id: NodeId, config: &SearchConfig) -> usize {
        let node = &self.nodes[id];
        let parent_sims = node.num_sims;
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, e) in node.edges.iter().enumerate() {
            let (avg, n) = match e.child {
                Some(c) => (self.nodes[c].avg_reward(), self.nodes[c].num_sims),
                None => (0.0, 0),
            };
            let score = match config.mode {
                SearchMode::Uct => uct_score(avg, n, parent_sims, config.exploration),
                SearchMode::Puct => puct_score(avg, e.weight, n, parent_sims),
            };
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }

    fn child(&mut self, game: &G, id: NodeId, edge: usize) -> Result<NodeId, SearchError> {
        if let Some(c) = self.nodes[id].edges[edge].child {
            return Ok(c);
        }
        let NodeKind::Decision(mover) = self.nodes[id].kind else {
            unreachable!("chance children are created eagerly");
        };
        let state = game.apply(&self.nodes[id].state, self.nodes[id].edges[edge].label)?;
        let c = self.push_node(game, state, mover)?;
        self.nodes[id].edges[edge].child = Some(c);
        Ok(c)
    }

    /// Samples the successor of a chance node with its outcome probability.
    /// Outcome children share the chance node's perspective, so the chance
    /// node's average is the visit-weighted average of its children.
    pub fn chance_step<R: Rng + ?Sized>(
        &mut self,
        game: &G,
        id: NodeId,
        rng: &mut R,
    ) -> Result<NodeId, SearchError> {
        if self.nodes[id].kind != NodeKind::Chance {
            return Err(SearchError::NotChanceNode);
        }
        if !self.nodes[id].expanded {
            let perspective = self.nodes[id].perspective;
            let outcomes = game.chance_outcomes(&self.nodes[id].state)?;
            let mut edges = Vec::with_capacity(outcomes.len());
            for o in outcomes {
                let child = self.push_node(game, o.state, perspective)?;
                edges.push(Edge {
                    label: o.label as usize,
                    weight: o.probability,
                    child: Some(child),
                });
            }
            self.nodes[id].edges = edges;
            self.nodes[id].expanded = true;
        }
        let edges = &self.nodes[id].edges;
        let i = sample_weighted(edges.iter().map(|e| e.weight), rng);
        Ok(edges[i].child.expect("chance children exist"))
    }

    fn backup(&mut self, path: &[NodeId], value_first: f64) {
        for &id in path {
            let node = &mut self.nodes[id];
            node.num_sims += 1;
            node.total_reward += value_first * f64::from(node.perspective.sign());
        }
    }

    /// One descent from the root, leaf evaluation and backup.
    pub fn simulate<E: Evaluator<G> + ?Sized, R: Rng + ?Sized>(
        &mut self,
        game: &G,
        evaluator: &E,
        config: &SearchConfig,
        rng: &mut R,
    ) -> Result<(), SearchError> {
        let mut path = vec![ROOT];
        let mut id = ROOT;
        let value = loop {
            match self.nodes[id].kind {
                NodeKind::Terminal(v) => break v,
                NodeKind::Chance => id = self.chance_step(game, id, rng)?,
                NodeKind::Decision(_) if !self.nodes[id].expanded => {
                    break self.expand(game, id, evaluator, config, rng)?;
                }
                NodeKind::Decision(_) => {
                    let edge = self.select(id, config);
                    id = self.child(game, id, edge)?;
                }
            }
            path.push(id);
        };
        self.backup(&path, value);
        Ok(())
    }

    /// Visit counts of the root's legal actions.
    pub fn result(&self) -> SearchResult {
        let root = &self.nodes[ROOT];
        let actions: Vec<usize> = root.edges.iter().map(|e| e.label).collect();
        let visits: Vec<u32> = root
            .edges
            .iter()
            .map(|e| e.child.map_or(0, |c| self.nodes[c].num_sims))
            .collect();
        let mut chosen = 0;
        for (i, &v) in visits.iter().enumerate() {
            if v > visits[chosen] {
                chosen = i;
            }
        }
        let (total, sims) = root
            .edges
            .iter()
            .filter_map(|e| e.child)
            .fold((0.0, 0u32), |(t, n), c| {
                (t + self.nodes[c].total_reward, n + self.nodes[c].num_sims)
            });
        SearchResult {
            chosen: actions[chosen],
            actions,
            visits,
            root_visits: root.num_sims,
            value: if sims > 0 { total / sims as f64 } else { 0.0 },
        }
    }
}

/// Outcome of a search from one position.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    /// Legal actions at the root, in increasing order.
    pub actions: Vec<usize>,
    /// Visits of each action, aligned with `actions`.
    pub visits: Vec<u32>,
    /// Most visited action, lowest index on ties.
    pub chosen: usize,
    pub root_visits: u32,
    /// Average backed-up reward for the player to move at the root.
    pub value: f64,
}

impl SearchResult {
    pub fn total_visits(&self) -> u32 {
        self.visits.iter().sum()
    }

    /// Visit proportions aligned with `actions`; sums to 1.
    pub fn distribution(&self) -> Vec<f64> {
        let total = self.total_visits().max(1) as f64;
        self.visits.iter().map(|&v| v as f64 / total).collect()
    }

    /// Visit proportions laid out like the canonical policy tensor, zero on
    /// illegal actions.
    pub fn policy_target<G: Game>(&self, game: &G, state: &G::State) -> Vec<f32> {
        let mut target = vec![0.0f32; game.action_space().total()];
        for (&a, p) in self.actions.iter().zip(self.distribution()) {
            target[game.policy_index(state, a)] = p as f32;
        }
        target
    }

    /// Action drawn with probability proportional to its visit count.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.actions[sample_weighted(self.visits.iter().map(|&v| f64::from(v)), rng)]
    }

    /// Self-play move choice: proportional to visits for the first
    /// `sample_plies` plies, most visited afterwards.
    pub fn pick<R: Rng + ?Sized>(&self, ply: u32, sample_plies: u32, rng: &mut R) -> usize {
        if ply < sample_plies {
            self.sample(rng)
        } else {
            self.chosen
        }
    }
}

/// Runs `config.simulations` simulations from `root` and reports the visit counts.
pub fn run_search<G: Game, E: Evaluator<G> + ?Sized, R: Rng + ?Sized>(
    game: &G,
    root: &G::State,
    evaluator: &E,
    config: &SearchConfig,
    rng: &mut R,
) -> Result<SearchResult, SearchError> {
    let mut tree = Tree::new(game, root, evaluator, config, rng)?;
    for _ in 0..config.simulations {
        tree.simulate(game, evaluator, config, rng)?;
    }
    Ok(tree.result())
}
