//! Residual trunk, fully convolutional policy head and a global-pooling
//! value head. Nothing in the network depends on the board size, so one
//! weight set evaluates boards of any `H×W`.

use rand::Rng;

use super::layers::{
    global_pool, global_pool_backward, relu_backward_in_place, relu_in_place, Conv2d, Linear,
};
use super::{NnError, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NetworkSpec {
    pub input_channels: usize,
    pub trunk_channels: usize,
    pub residual_blocks: usize,
    pub kernel_size: usize,
    pub policy_channels: usize,
    pub value_pool_channels: usize,
    pub value_hidden: usize,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<(), NnError> {
        let counts = [
            ("input_channels", self.input_channels),
            ("trunk_channels", self.trunk_channels),
            ("residual_blocks", self.residual_blocks),
            ("kernel_size", self.kernel_size),
            ("policy_channels", self.policy_channels),
            ("value_pool_channels", self.value_pool_channels),
            ("value_hidden", self.value_hidden),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(NnError::Spec(format!("{name} must be at least 1")));
            }
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(NnError::Spec(format!(
                "kernel_size {} must be odd",
                self.kernel_size
            )));
        }
        Ok(())
    }

    /// Field values in checkpoint order.
    pub fn fields(&self) -> [usize; 7] {
        [
            self.input_channels,
            self.trunk_channels,
            self.residual_blocks,
            self.kernel_size,
            self.policy_channels,
            self.value_pool_channels,
            self.value_hidden,
        ]
    }

    pub fn from_fields(f: [usize; 7]) -> Self {
        Self {
            input_channels: f[0],
            trunk_channels: f[1],
            residual_blocks: f[2],
            kernel_size: f[3],
            policy_channels: f[4],
            value_pool_channels: f[5],
            value_hidden: f[6],
        }
    }

    /// Shapes of every parameter tensor, in checkpoint order.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let (c, k) = (self.trunk_channels, self.kernel_size);
        let mut shapes = vec![vec![c, self.input_channels, k, k], vec![c]];
        for _ in 0..self.residual_blocks {
            shapes.extend([vec![c, c, k, k], vec![c], vec![c, c, k, k], vec![c]]);
        }
        shapes.extend([
            vec![self.policy_channels, c, 1, 1],
            vec![self.policy_channels],
            vec![self.value_pool_channels, c, 1, 1],
            vec![self.value_pool_channels],
            vec![self.value_hidden, 2 * self.value_pool_channels],
            vec![self.value_hidden],
            vec![1, self.value_hidden],
            vec![1],
        ]);
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes()
            .iter()
            .map(|s| s.iter().product::<usize>())
            .sum()
    }
}

/// `conv → ReLU → conv`, added to the identity skip, then ReLU.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualBlock<T = f32> {
    pub conv1: Conv2d<T>,
    pub conv2: Conv2d<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network<T = f32> {
    pub(crate) spec: NetworkSpec,
    pub(crate) stem: Conv2d<T>,
    pub(crate) blocks: Vec<ResidualBlock<T>>,
    pub(crate) policy: Conv2d<T>,
    pub(crate) value_conv: Conv2d<T>,
    pub(crate) value_fc1: Linear<T>,
    pub(crate) value_fc2: Linear<T>,
}

#[derive(Clone, Debug)]
pub struct NetworkOutput<T = f32> {
    /// `policy_channels × H × W` logits.
    pub policy: Tensor<T>,
    /// Position value in `(-1, 1)` for the player to move.
    pub value: T,
}

/// Intermediate activations kept for the backward pass.
pub(crate) struct ForwardCache<T> {
    h: usize,
    w: usize,
    stem_cols: Vec<T>,
    stem_out: Vec<T>,
    blocks: Vec<BlockCache<T>>,
    head_cols: Vec<T>,
    value_cols: Vec<T>,
    pool_argmax: Vec<usize>,
    pooled: Vec<T>,
    hidden: Vec<T>,
}

struct BlockCache<T> {
    cols1: Vec<T>,
    mid: Vec<T>,
    cols2: Vec<T>,
    out: Vec<T>,
}

impl<T: Scalar> Network<T> {
    /// He-uniform initialization with zero biases.
    pub fn new<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self, NnError> {
        spec.validate()?;
        let (c, k) = (spec.trunk_channels, spec.kernel_size);
        Ok(Self {
            spec,
            stem: Conv2d::he_uniform(c, spec.input_channels, k, rng),
            blocks: (0..spec.residual_blocks)
                .map(|_| ResidualBlock {
                    conv1: Conv2d::he_uniform(c, c, k, rng),
                    conv2: Conv2d::he_uniform(c, c, k, rng),
                })
                .collect(),
            policy: Conv2d::he_uniform(spec.policy_channels, c, 1, rng),
            value_conv: Conv2d::he_uniform(spec.value_pool_channels, c, 1, rng),
            value_fc1: Linear::he_uniform(spec.value_hidden, 2 * spec.value_pool_channels, rng),
            value_fc2: Linear::he_uniform(1, spec.value_hidden, rng),
        })
    }

    /// A network whose parameters are all exactly zero.
    pub fn zeros(spec: NetworkSpec) -> Result<Self, NnError> {
        spec.validate()?;
        let (c, k) = (spec.trunk_channels, spec.kernel_size);
        Ok(Self {
            spec,
            stem: Conv2d::zeros(c, spec.input_channels, k),
            blocks: (0..spec.residual_blocks)
                .map(|_| ResidualBlock {
                    conv1: Conv2d::zeros(c, c, k),
                    conv2: Conv2d::zeros(c, c, k),
                })
                .collect(),
            policy: Conv2d::zeros(spec.policy_channels, c, 1),
            value_conv: Conv2d::zeros(spec.value_pool_channels, c, 1),
            value_fc1: Linear::zeros(spec.value_hidden, 2 * spec.value_pool_channels),
            value_fc2: Linear::zeros(1, spec.value_hidden),
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn blocks(&self) -> &[ResidualBlock<T>] {
        &self.blocks
    }

    pub fn stem(&self) -> &Conv2d<T> {
        &self.stem
    }

    /// Parameter tensors with their names, in checkpoint order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = vec![
            ("stem.weight".to_string(), &self.stem.weight),
            ("stem.bias".to_string(), &self.stem.bias),
        ];
        for (i, b) in self.blocks.iter().enumerate() {
            out.push((format!("blocks.{i}.conv1.weight"), &b.conv1.weight));
            out.push((format!("blocks.{i}.conv1.bias"), &b.conv1.bias));
            out.push((format!("blocks.{i}.conv2.weight"), &b.conv2.weight));
            out.push((format!("blocks.{i}.conv2.bias"), &b.conv2.bias));
        }
        out.extend([
            ("policy.weight".to_string(), &self.policy.weight),
            ("policy.bias".to_string(), &self.policy.bias),
            ("value_conv.weight".to_string(), &self.value_conv.weight),
            ("value_conv.bias".to_string(), &self.value_conv.bias),
            ("value_fc1.weight".to_string(), &self.value_fc1.weight),
            ("value_fc1.bias".to_string(), &self.value_fc1.bias),
            ("value_fc2.weight".to_string(), &self.value_fc2.weight),
            ("value_fc2.bias".to_string(), &self.value_fc2.bias),
        ]);
        out
    }

    /// Mutable parameter tensors in checkpoint order.
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = vec![&mut self.stem.weight, &mut self.stem.bias];
        for b in &mut self.blocks {
            out.push(&mut b.conv1.weight);
            out.push(&mut b.conv1.bias);
            out.push(&mut b.conv2.weight);
            out.push(&mut b.conv2.bias);
        }
        out.extend([
            &mut self.policy.weight,
            &mut self.policy.bias,
            &mut self.value_conv.weight,
            &mut self.value_conv.bias,
            &mut self.value_fc1.weight,
            &mut self.value_fc1.bias,
            &mut self.value_fc2.weight,
            &mut self.value_fc2.bias,
        ]);
        out
    }

    /// Builds a network from tensors in checkpoint order.
    pub fn from_tensors(spec: NetworkSpec, tensors: Vec<Tensor<T>>) -> Result<Self, NnError> {
        let mut net = Self::zeros(spec)?;
        let slots = net.tensors_mut();
        if slots.len() != tensors.len() {
            return Err(NnError::Shape(format!(
                "spec has {} parameter tensors, got {}",
                slots.len(),
                tensors.len()
            )));
        }
        for (slot, t) in slots.into_iter().zip(tensors) {
            if slot.shape() != t.shape() {
                return Err(NnError::Shape(format!(
                    "parameter shape {:?} does not match spec {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            *slot = t;
        }
        Ok(net)
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let tensors = self
            .named_tensors()
            .into_iter()
            .map(|(_, t)| t.cast())
            .collect();
        Network::from_tensors(self.spec, tensors).expect("same spec")
    }

    pub fn sum_squares(&self) -> f64 {
        self.named_tensors()
            .iter()
            .map(|(_, t)| t.sum_squares().as_f64())
            .sum()
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<NetworkOutput<T>, NnError> {
        self.forward_cached(input).map(|(out, _)| out)
    }

    pub(crate) fn forward_cached(
        &self,
        input: &Tensor<T>,
    ) -> Result<(NetworkOutput<T>, ForwardCache<T>), NnError> {
        let (c, h, w) = input.dims3()?;
        if c != self.spec.input_channels {
            return Err(NnError::Shape(format!(
                "network expects {} input planes, got {c}",
                self.spec.input_channels
            )));
        }
        if h == 0 || w == 0 {
            return Err(NnError::Shape("empty board".into()));
        }
        let (mut x, stem_cols) = self.stem.forward(input)?;
        relu_in_place(x.data_mut());
        let stem_out = x.data().to_vec();

        let mut blocks = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (mut mid, cols1) = block.conv1.forward(&x)?;
            relu_in_place(mid.data_mut());
            let (mut z, cols2) = block.conv2.forward(&mid)?;
            z.add_assign(&x);
            relu_in_place(z.data_mut());
            blocks.push(BlockCache {
                cols1,
                mid: mid.into_data(),
                cols2,
                out: z.data().to_vec(),
            });
            x = z;
        }

        let (policy, head_cols) = self.policy.forward(&x)?;
        let (vfeat, value_cols) = self.value_conv.forward(&x)?;
        let (pooled, pool_argmax) = global_pool(&vfeat)?;
        let mut hidden = self.value_fc1.forward(&pooled)?;
        relu_in_place(&mut hidden);
        let value = self.value_fc2.forward(&hidden)?[0].tanh();

        let cache = ForwardCache {
            h,
            w,
            stem_cols,
            stem_out,
            blocks,
            head_cols,
            value_cols,
            pool_argmax,
            pooled,
            hidden,
        };
        Ok((NetworkOutput { policy, value }, cache))
    }

    /// Parameter gradients given the gradients of the policy logits and of
    /// the (post-tanh) value.
    pub(crate) fn backward(
        &self,
        cache: &ForwardCache<T>,
        grad_policy: &Tensor<T>,
        grad_value: T,
        value: T,
    ) -> Network<T> {
        let (h, w) = (cache.h, cache.w);
        let pre = grad_value * (T::one() - value * value);
        let (g_fc2, mut d_hidden) = self.value_fc2.backward(&cache.hidden, &[pre]);
        relu_backward_in_place(&cache.hidden, &mut d_hidden);
        let (g_fc1, d_pooled) = self.value_fc1.backward(&cache.pooled, &d_hidden);
        let d_vfeat = global_pool_backward(&d_pooled, &cache.pool_argmax, h, w);
        let (g_vconv, d_trunk_v) = self.value_conv.backward(&cache.value_cols, &d_vfeat, true);
        let (g_policy, d_trunk_p) = self.policy.backward(&cache.head_cols, grad_policy, true);

        let mut d = d_trunk_v.expect("input grad requested");
        d.add_assign(&d_trunk_p.expect("input grad requested"));

        let mut g_blocks = Vec::with_capacity(self.blocks.len());
        for (block, bc) in self.blocks.iter().zip(&cache.blocks).rev() {
            relu_backward_in_place(&bc.out, d.data_mut());
            let (g2, d_mid) = block.conv2.backward(&bc.cols2, &d, true);
            let mut d_mid = d_mid.expect("input grad requested");
            relu_backward_in_place(&bc.mid, d_mid.data_mut());
            let (g1, d_conv) = block.conv1.backward(&bc.cols1, &d_mid, true);
            d.add_assign(&d_conv.expect("input grad requested"));
            g_blocks.push(ResidualBlock {
                conv1: g1,
                conv2: g2,
            });
        }
        g_blocks.reverse();

        relu_backward_in_place(&cache.stem_out, d.data_mut());
        let (g_stem, _) = self.stem.backward(&cache.stem_cols, &d, false);

        Network {
            spec: self.spec,
            stem: g_stem,
            blocks: g_blocks,
            policy: g_policy,
            value_conv: g_vconv,
            value_fc1: g_fc1,
            value_fc2: g_fc2,
        }
    }
}
