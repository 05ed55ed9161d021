//! Function-preserving growth of a trained network.
//!
//! Every weight that lets a new unit influence an existing one starts at
//! exactly zero, so the grown network computes the same outputs as the
//! original on every input. Weights that only feed new units are random,
//! which keeps gradients flowing into the new capacity.

use rand::Rng;

use super::layers::{fill_he_uniform, Conv2d, Linear};
use super::{Network, NnError, ResidualBlock, Scalar, Tensor};

/// Which set of channels `grow_add_channels` widens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelGroup {
    /// Trunk width: the stem and every residual block.
    Trunk,
    /// Channels of the 1×1 convolution feeding the global pool.
    ValuePool,
    /// Hidden width of the value head after pooling.
    ValueHidden,
}

impl std::str::FromStr for ChannelGroup {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trunk" => Ok(Self::Trunk),
            "value-pool" | "value_pool" => Ok(Self::ValuePool),
            "value-hidden" | "value_hidden" => Ok(Self::ValueHidden),
            other => Err(NnError::Growth(format!("unknown channel group `{other}`"))),
        }
    }
}

/// Appends a residual block whose second convolution is all zeros.
pub fn grow_add_block<T: Scalar, R: Rng + ?Sized>(net: &Network<T>, rng: &mut R) -> Network<T> {
    let mut grown = net.clone();
    let (c, k) = (net.spec.trunk_channels, net.spec.kernel_size);
    grown.blocks.push(ResidualBlock {
        conv1: Conv2d::he_uniform(c, c, k, rng),
        conv2: Conv2d::zeros(c, c, k),
    });
    grown.spec.residual_blocks += 1;
    grown
}

/// Copies `old` into a larger weight array. Entries linking a new input to
/// an old output are zero; rows producing new outputs are He-random.
fn widen<T: Scalar, R: Rng + ?Sized>(
    old: &Tensor<T>,
    new_out: usize,
    new_in: usize,
    rng: &mut R,
) -> Tensor<T> {
    let shape = old.shape();
    let (old_out, old_in) = (shape[0], shape[1]);
    let taps: usize = shape[2..].iter().product();
    let mut new_shape = shape.to_vec();
    new_shape[0] = new_out;
    new_shape[1] = new_in;

    let mut fresh = Tensor::zeros(&[new_out - old_out, new_in * taps]);
    fill_he_uniform(&mut fresh, new_in * taps, rng);

    let mut out = Tensor::zeros(&new_shape);
    let data = out.data_mut();
    for o in 0..new_out {
        for i in 0..new_in {
            let dst = &mut data[(o * new_in + i) * taps..][..taps];
            if o < old_out {
                if i < old_in {
                    dst.copy_from_slice(&old.data()[(o * old_in + i) * taps..][..taps]);
                }
            } else {
                dst.copy_from_slice(&fresh.data()[((o - old_out) * new_in + i) * taps..][..taps]);
            }
        }
    }
    out
}

fn widen_bias<T: Scalar>(old: &Tensor<T>, new_out: usize) -> Tensor<T> {
    let mut data = old.data().to_vec();
    data.resize(new_out, T::zero());
    Tensor::new(&[new_out], data).expect("bias shape")
}

fn widen_conv<T: Scalar, R: Rng + ?Sized>(
    conv: &Conv2d<T>,
    new_out: usize,
    new_in: usize,
    rng: &mut R,
) -> Conv2d<T> {
    Conv2d {
        weight: widen(&conv.weight, new_out, new_in, rng),
        bias: widen_bias(&conv.bias, new_out),
    }
}

fn widen_linear<T: Scalar, R: Rng + ?Sized>(
    l: &Linear<T>,
    new_out: usize,
    new_in: usize,
    rng: &mut R,
) -> Linear<T> {
    Linear {
        weight: widen(&l.weight, new_out, new_in, rng),
        bias: widen_bias(&l.bias, new_out),
    }
}

/// Adds `extra` channels to one channel group.
pub fn grow_add_channels<T: Scalar, R: Rng + ?Sized>(
    net: &Network<T>,
    group: ChannelGroup,
    extra: usize,
    rng: &mut R,
) -> Result<Network<T>, NnError> {
    if extra == 0 {
        return Err(NnError::Growth(
            "extra channel count must be at least 1".into(),
        ));
    }
    let mut g = net.clone();
    let spec = net.spec;
    match group {
        ChannelGroup::Trunk => {
            let c = spec.trunk_channels + extra;
            g.stem = widen_conv(&net.stem, c, spec.input_channels, rng);
            g.blocks = net
                .blocks
                .iter()
                .map(|b| ResidualBlock {
                    conv1: widen_conv(&b.conv1, c, c, rng),
                    conv2: widen_conv(&b.conv2, c, c, rng),
                })
                .collect();
            g.policy = widen_conv(&net.policy, spec.policy_channels, c, rng);
            g.value_conv = widen_conv(&net.value_conv, spec.value_pool_channels, c, rng);
            g.spec.trunk_channels = c;
        }
        ChannelGroup::ValuePool => {
            let v = spec.value_pool_channels + extra;
            g.value_conv = widen_conv(&net.value_conv, v, spec.trunk_channels, rng);
            // pooled features are [max, mean] per channel, so new channels append
            g.value_fc1 = widen_linear(&net.value_fc1, spec.value_hidden, 2 * v, rng);
            g.spec.value_pool_channels = v;
        }
        ChannelGroup::ValueHidden => {
            let hdn = spec.value_hidden + extra;
            g.value_fc1 = widen_linear(&net.value_fc1, hdn, 2 * spec.value_pool_channels, rng);
            g.value_fc2 = widen_linear(&net.value_fc2, 1, hdn, rng);
            g.spec.value_hidden = hdn;
        }
    }
    Ok(g)
}

fn embed_kernel<T: Scalar>(conv: &Conv2d<T>, new_k: usize) -> Conv2d<T> {
    let (o, i, k) = (conv.out_channels(), conv.in_channels(), conv.kernel_size());
    let off = (new_k - k) / 2;
    let mut w = Tensor::zeros(&[o, i, new_k, new_k]);
    let data = w.data_mut();
    for oi in 0..o * i {
        for y in 0..k {
            for x in 0..k {
                data[oi * new_k * new_k + (y + off) * new_k + x + off] =
                    conv.weight.data()[oi * k * k + y * k + x];
            }
        }
    }
    Conv2d {
        weight: w,
        bias: conv.bias.clone(),
    }
}

/// Enlarges every trunk kernel to `new_k × new_k`, keeping the old kernel
/// at the center and zeros around it.
pub fn grow_kernel<T: Scalar>(net: &Network<T>, new_k: usize) -> Result<Network<T>, NnError> {
    let k = net.spec.kernel_size;
    if new_k.is_multiple_of(2) || new_k <= k {
        return Err(NnError::Growth(format!(
            "new kernel size must be odd and larger than {k}, got {new_k}"
        )));
    }
    let mut g = net.clone();
    g.stem = embed_kernel(&net.stem, new_k);
    for (dst, src) in g.blocks.iter_mut().zip(&net.blocks) {
        dst.conv1 = embed_kernel(&src.conv1, new_k);
        dst.conv2 = embed_kernel(&src.conv2, new_k);
    }
    g.spec.kernel_size = new_k;
    Ok(g)
}
