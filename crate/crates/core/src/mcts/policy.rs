use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::SearchError;

/// UCT selection score. Unvisited children score `+∞`; the logarithm is natural.
pub fn uct_score(avg_reward: f64, child_sims: u32, parent_sims: u32, k: f64) -> f64 {
    if child_sims == 0 {
        return f64::INFINITY;
    }
    avg_reward + k * ((parent_sims.max(1) as f64).ln() / child_sims as f64).sqrt()
}

/// PUCT selection score. Callers pass `avg_reward = 0` for unvisited children.
pub fn puct_score(avg_reward: f64, prior: f64, child_sims: u32, parent_sims: u32) -> f64 {
    avg_reward + prior * (parent_sims as f64).sqrt() / (1.0 + child_sims as f64)
}

/// `p_a ∝ exp(T·logit_a)` over the legal entries, zero elsewhere.
pub fn masked_softmax(
    logits: &[f32],
    mask: &[bool],
    temperature: f32,
) -> Result<Vec<f32>, SearchError> {
    if logits.len() != mask.len() {
        return Err(SearchError::Config(format!(
            "{} logits but {} mask entries",
            logits.len(),
            mask.len()
        )));
    }
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(SearchError::Config(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| temperature * l)
        .fold(f32::NEG_INFINITY, f32::max);
    if max == f32::NEG_INFINITY {
        return Err(SearchError::EmptyMask);
    }
    let mut out: Vec<f32> = logits
        .iter()
        .zip(mask)
        .map(|(&l, &m)| {
            if m {
                (temperature * l - max).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f32 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    Ok(out)
}

/// Mixes `ε·Dir(α)` into a prior over the legal actions.
pub fn add_dirichlet_noise<R: Rng + ?Sized>(
    priors: &[f64],
    alpha: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<Vec<f64>, SearchError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(SearchError::Config(format!(
            "dirichlet epsilon must be in [0, 1], got {epsilon}"
        )));
    }
    if epsilon == 0.0 || priors.is_empty() {
        return Ok(priors.to_vec());
    }
    let gamma = Gamma::new(alpha, 1.0)
        .map_err(|e| SearchError::Config(format!("dirichlet alpha {alpha}: {e}")))?;
    let mut noise: Vec<f64> = (0..priors.len()).map(|_| gamma.sample(rng)).collect();
    let total: f64 = noise.iter().sum();
    if total > 0.0 && total.is_finite() {
        noise.iter_mut().for_each(|x| *x /= total);
    } else {
        // every draw underflowed: fall back to a uniform sample
        let u = 1.0 / noise.len() as f64;
        noise.iter_mut().for_each(|x| *x = u);
    }
    let mixed: Vec<f64> = priors
        .iter()
        .zip(&noise)
        .map(|(&p, &n)| (1.0 - epsilon) * p + epsilon * n)
        .collect();
    let sum: f64 = mixed.iter().sum();
    Ok(mixed.iter().map(|&x| x / sum).collect())
}
