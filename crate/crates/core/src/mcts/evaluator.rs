use std::sync::Arc;

use super::{masked_softmax, SearchError};
use crate::game::Game;
use crate::nn::Network;

/// Leaf evaluation: a prior per legal action (aligned with the `legal`
/// slice passed in) and a value in `[-1, 1]` for the player to move.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub priors: Vec<f64>,
    pub value: f64,
}

pub trait Evaluator<G: Game>: Send + Sync {
    fn evaluate(
        &self,
        game: &G,
        state: &G::State,
        legal: &[usize],
    ) -> Result<Evaluation, SearchError>;
}

/// Flat priors and a neutral value. Useful as an untrained baseline.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformEvaluator;

impl<G: Game> Evaluator<G> for UniformEvaluator {
    fn evaluate(
        &self,
        _game: &G,
        _state: &G::State,
        legal: &[usize],
    ) -> Result<Evaluation, SearchError> {
        if legal.is_empty() {
            return Err(SearchError::EmptyMask);
        }
        Ok(Evaluation {
            priors: vec![1.0 / legal.len() as f64; legal.len()],
            value: 0.0,
        })
    }
}

/// Priors from the masked temperature softmax of the policy head, value
/// from the value head.
#[derive(Clone, Debug)]
pub struct NetworkEvaluator {
    network: Arc<Network<f32>>,
    temperature: f32,
}

impl NetworkEvaluator {
    pub fn new(network: Arc<Network<f32>>) -> Self {
        Self {
            network,
            temperature: 1.0,
        }
    }

    pub fn with_temperature(mut self, temperature: f32) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn network(&self) -> &Arc<Network<f32>> {
        &self.network
    }
}

impl<G: Game> Evaluator<G> for NetworkEvaluator {
    fn evaluate(
        &self,
        game: &G,
        state: &G::State,
        legal: &[usize],
    ) -> Result<Evaluation, SearchError> {
        let input = game.encode(state)?;
        let out = self.network.forward(&input)?;
        let space = game.action_space();
        if out.policy.len() != space.total() {
            return Err(SearchError::Config(format!(
                "network policy has {} entries but {} has {} actions",
                out.policy.len(),
                game.id(),
                space.total()
            )));
        }
        let logits: Vec<f32> = legal
            .iter()
            .map(|&a| out.policy.data()[game.policy_index(state, a)])
            .collect();
        let priors = masked_softmax(&logits, &vec![true; logits.len()], self.temperature)?;
        Ok(Evaluation {
            priors: priors.into_iter().map(f64::from).collect(),
            value: f64::from(out.value).clamp(-1.0, 1.0),
        })
    }
}
