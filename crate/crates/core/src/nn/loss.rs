//! Policy cross-entropy, value squared error and weight decay.

use rayon::prelude::*;

use super::{Network, NnError, Scalar, Tensor};

/// One training example as seen by the loss.
#[derive(Clone, Copy, Debug)]
pub struct Example<'a, T> {
    pub input: &'a Tensor<T>,
    /// Target distribution in policy-tensor layout.
    pub policy: &'a [T],
    /// Legal actions in policy-tensor layout.
    pub mask: &'a [bool],
    /// Final reward from the perspective of the player to move.
    pub reward: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub policy: f64,
    pub value: f64,
    pub decay: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.policy + self.value + self.decay
    }
}

/// `log softmax` restricted to legal entries; illegal entries get `-inf`.
pub fn masked_log_softmax<T: Scalar>(logits: &[T], mask: &[bool]) -> Result<Vec<T>, NnError> {
    if logits.len() != mask.len() {
        return Err(NnError::Shape(format!(
            "{} logits but mask of length {}",
            logits.len(),
            mask.len()
        )));
    }
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| l)
        .fold(None, |acc: Option<T>, l| {
            Some(acc.map_or(l, |a| if l > a { l } else { a }))
        })
        .ok_or(NnError::EmptyMask)?;
    let sum: T = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| (l - max).exp())
        .sum();
    let lse = max + sum.ln();
    Ok(logits
        .iter()
        .zip(mask)
        .map(|(&l, &m)| if m { l - lse } else { T::neg_infinity() })
        .collect())
}

/// Per-example terms: `(cross-entropy, squared error, d/dlogits, d/dvalue)`.
pub fn policy_value_loss<T: Scalar>(
    logits: &[T],
    mask: &[bool],
    target: &[T],
    value: T,
    reward: T,
) -> Result<(f64, f64, Vec<T>, T), NnError> {
    if target.len() != logits.len() {
        return Err(NnError::Shape(format!(
            "{} logits but target of length {}",
            logits.len(),
            target.len()
        )));
    }
    let sum: f64 = target.iter().map(|p| p.as_f64()).sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(NnError::BadTarget { sum });
    }
    let logp = masked_log_softmax(logits, mask)?;
    let mut ce = 0.0;
    let mut grad = vec![T::zero(); logits.len()];
    for i in 0..logits.len() {
        if !mask[i] {
            continue;
        }
        let p = target[i];
        if p > T::zero() {
            ce -= p.as_f64() * logp[i].as_f64();
        }
        grad[i] = logp[i].exp() - p;
    }
    let diff = value - reward;
    let sq = diff.as_f64() * diff.as_f64();
    Ok((ce, sq, grad, diff + diff))
}

/// Cross-entropy, squared value error and gradients of one example.
type PerExample<T> = Result<(f64, f64, Network<T>), NnError>;

impl<T: Scalar> Network<T> {
    /// Mean policy+value loss over the batch plus `lambda·Σθ²`, and its
    /// gradient with respect to every parameter.
    pub fn loss_and_gradients(
        &self,
        batch: &[Example<'_, T>],
        lambda: f64,
    ) -> Result<(LossBreakdown, Network<T>), NnError> {
        if batch.is_empty() {
            return Err(NnError::Shape("empty batch".into()));
        }
        let per_example: Vec<PerExample<T>> = batch
            .par_iter()
            .map(|ex| {
                let (out, cache) = self.forward_cached(ex.input)?;
                let (ce, sq, dlogits, dvalue) =
                    policy_value_loss(out.policy.data(), ex.mask, ex.policy, out.value, ex.reward)?;
                let dpolicy = Tensor::new(out.policy.shape(), dlogits)?;
                Ok((ce, sq, self.backward(&cache, &dpolicy, dvalue, out.value)))
            })
            .collect();

        let n = batch.len() as f64;
        let inv = T::from_f64(1.0 / n);
        let mut breakdown = LossBreakdown::default();
        let mut grads: Option<Network<T>> = None;
        for r in per_example {
            let (ce, sq, g) = r?;
            breakdown.policy += ce / n;
            breakdown.value += sq / n;
            match grads.as_mut() {
                None => grads = Some(g),
                Some(acc) => {
                    for (a, b) in acc.tensors_mut().into_iter().zip(g.named_tensors()) {
                        a.add_assign(b.1);
                    }
                }
            }
        }
        let mut grads = grads.expect("non-empty batch");
        let decay = T::from_f64(2.0 * lambda);
        let params = self.named_tensors();
        for (g, (_, p)) in grads.tensors_mut().into_iter().zip(params) {
            g.scale(inv);
            for (gv, &pv) in g.data_mut().iter_mut().zip(p.data()) {
                *gv += decay * pv;
            }
        }
        breakdown.decay = lambda * self.sum_squares();
        Ok((breakdown, grads))
    }
}
