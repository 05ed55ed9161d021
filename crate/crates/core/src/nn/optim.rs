use super::{Network, NnError, Scalar};

/// Plain gradient descent: `θ ← θ − lr·g`. Nothing is updated when any
/// gradient entry is non-finite.
pub fn sgd_step<T: Scalar>(
    net: &mut Network<T>,
    grads: &Network<T>,
    learning_rate: T,
) -> Result<(), NnError> {
    if net.spec != grads.spec {
        return Err(NnError::Shape(
            "gradient spec differs from network spec".into(),
        ));
    }
    let named = grads.named_tensors();
    if let Some((name, _)) = named
        .iter()
        .find(|(_, g)| g.data().iter().any(|v| !v.is_finite()))
    {
        return Err(NnError::NonFiniteGradient {
            layer: name.clone(),
        });
    }
    for (p, (_, g)) in net.tensors_mut().into_iter().zip(named) {
        for (pv, &gv) in p.data_mut().iter_mut().zip(g.data()) {
            *pv -= learning_rate * gv;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NetworkSpec;

    fn tiny() -> Network<f32> {
        Network::zeros(NetworkSpec {
            input_channels: 1,
            trunk_channels: 1,
            residual_blocks: 1,
            kernel_size: 1,
            policy_channels: 1,
            value_pool_channels: 1,
            value_hidden: 1,
        })
        .unwrap()
    }

    #[test]
    fn plain_update() {
        let mut net = tiny();
        net.stem.weight.data_mut()[0] = 1.0;
        let mut g = tiny();
        g.stem.weight.data_mut()[0] = 0.5;
        sgd_step(&mut net, &g, 0.1).unwrap();
        assert!((net.stem.weight.data()[0] - 0.95).abs() < 1e-7);

        let before = net.clone();
        sgd_step(&mut net, &g, 0.0).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn non_finite_gradient_names_the_layer() {
        let mut net = tiny();
        let mut g = tiny();
        g.value_fc1.weight.data_mut()[0] = f32::NAN;
        g.stem.weight.data_mut()[0] = 1.0;
        let before = net.clone();
        match sgd_step(&mut net, &g, 0.1) {
            Err(NnError::NonFiniteGradient { layer }) => assert_eq!(layer, "value_fc1.weight"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(net, before);
    }
}
