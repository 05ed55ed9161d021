//! Layer primitives with explicit backward passes. All feature maps are
//! single samples laid out `C×H×W`.

use rand::Rng;

use super::{NnError, Scalar, Tensor};

/// Same-padded 2-D cross-correlation.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d<T = f32> {
    /// `out × in × k × k`
    pub weight: Tensor<T>,
    /// `out`
    pub bias: Tensor<T>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn zeros(out_channels: usize, in_channels: usize, kernel: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[out_channels, in_channels, kernel, kernel]),
            bias: Tensor::zeros(&[out_channels]),
        }
    }

    /// He-uniform weights, zero bias.
    pub fn he_uniform<R: Rng + ?Sized>(
        out_channels: usize,
        in_channels: usize,
        kernel: usize,
        rng: &mut R,
    ) -> Self {
        let mut conv = Self::zeros(out_channels, in_channels, kernel);
        fill_he_uniform(&mut conv.weight, in_channels * kernel * kernel, rng);
        conv
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn kernel_size(&self) -> usize {
        self.weight.shape()[2]
    }

    /// Returns the output and the im2col buffer needed by `backward`.
    pub fn forward(&self, input: &Tensor<T>) -> Result<(Tensor<T>, Vec<T>), NnError> {
        conv2d(input, &self.weight, &self.bias)
    }

    /// Gradients w.r.t. the weights (as a `Conv2d`) and, when
    /// `input_grad` is set, w.r.t. the input.
    pub fn backward(
        &self,
        cols: &[T],
        grad_out: &Tensor<T>,
        input_grad: bool,
    ) -> (Conv2d<T>, Option<Tensor<T>>) {
        conv2d_backward(cols, grad_out, &self.weight, input_grad)
    }
}

pub(crate) fn fill_he_uniform<T: Scalar, R: Rng + ?Sized>(
    t: &mut Tensor<T>,
    fan_in: usize,
    rng: &mut R,
) {
    let limit = (6.0 / fan_in.max(1) as f64).sqrt();
    for v in t.data_mut() {
        *v = T::from_f64(rng.random_range(-limit..limit));
    }
}

fn im2col<T: Scalar>(input: &[T], cin: usize, h: usize, w: usize, k: usize) -> Vec<T> {
    let hw = h * w;
    let pad = (k / 2) as isize;
    let mut cols = vec![T::zero(); cin * k * k * hw];
    for ci in 0..cin {
        let plane = &input[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = &mut cols[((ci * k + ky) * k + kx) * hw..][..hw];
                for y in 0..h {
                    let iy = y as isize + ky as isize - pad;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * w..][..w];
                    let dst = &mut row[y * w..][..w];
                    for (x, d) in dst.iter_mut().enumerate() {
                        let ix = x as isize + kx as isize - pad;
                        if ix >= 0 && ix < w as isize {
                            *d = src[ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im<T: Scalar>(cols: &[T], cin: usize, h: usize, w: usize, k: usize) -> Vec<T> {
    let hw = h * w;
    let pad = (k / 2) as isize;
    let mut out = vec![T::zero(); cin * hw];
    for ci in 0..cin {
        let plane = &mut out[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = &cols[((ci * k + ky) * k + kx) * hw..][..hw];
                for y in 0..h {
                    let iy = y as isize + ky as isize - pad;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for x in 0..w {
                        let ix = x as isize + kx as isize - pad;
                        if ix >= 0 && ix < w as isize {
                            plane[iy as usize * w + ix as usize] += row[y * w + x];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Cross-correlation with zero padding `(k-1)/2`; output keeps `H×W`.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<(Tensor<T>, Vec<T>), NnError> {
    let (cin, h, w) = input.dims3()?;
    let (cout, kin, k) = match kernel.shape() {
        &[o, i, k1, k2] if k1 == k2 => (o, i, k1),
        s => return Err(NnError::Shape(format!("kernel must be O×I×k×k, got {s:?}"))),
    };
    if k % 2 == 0 {
        return Err(NnError::Shape(format!("kernel size {k} is even")));
    }
    if kin != cin {
        return Err(NnError::Shape(format!(
            "input has {cin} channels, kernel expects {kin}"
        )));
    }
    if bias.shape() != [cout] {
        return Err(NnError::Shape(format!(
            "bias shape {:?} does not match {cout} output channels",
            bias.shape()
        )));
    }
    let hw = h * w;
    let taps = cin * k * k;
    let cols = im2col(input.data(), cin, h, w, k);
    let wdata = kernel.data();
    let mut out = vec![T::zero(); cout * hw];
    for co in 0..cout {
        let orow = &mut out[co * hw..(co + 1) * hw];
        orow.fill(bias.data()[co]);
        let wrow = &wdata[co * taps..(co + 1) * taps];
        for (r, &wv) in wrow.iter().enumerate() {
            let crow = &cols[r * hw..(r + 1) * hw];
            for (o, &c) in orow.iter_mut().zip(crow) {
                *o += wv * c;
            }
        }
    }
    Ok((Tensor::new(&[cout, h, w], out)?, cols))
}

pub fn conv2d_backward<T: Scalar>(
    cols: &[T],
    grad_out: &Tensor<T>,
    kernel: &Tensor<T>,
    input_grad: bool,
) -> (Conv2d<T>, Option<Tensor<T>>) {
    let (cout, h, w) = grad_out.dims3().expect("conv gradient is C×H×W");
    let (cin, k) = (kernel.shape()[1], kernel.shape()[2]);
    let hw = h * w;
    let taps = cin * k * k;
    let g = grad_out.data();
    let wdata = kernel.data();

    let mut gw = vec![T::zero(); cout * taps];
    let mut gb = vec![T::zero(); cout];
    for co in 0..cout {
        let grow = &g[co * hw..(co + 1) * hw];
        gb[co] = grow.iter().copied().sum();
        for r in 0..taps {
            let crow = &cols[r * hw..(r + 1) * hw];
            gw[co * taps + r] = grow.iter().zip(crow).map(|(&a, &b)| a * b).sum();
        }
    }

    let gin = input_grad.then(|| {
        let mut dcols = vec![T::zero(); taps * hw];
        for co in 0..cout {
            let grow = &g[co * hw..(co + 1) * hw];
            for r in 0..taps {
                let wv = wdata[co * taps + r];
                let drow = &mut dcols[r * hw..(r + 1) * hw];
                for (d, &gv) in drow.iter_mut().zip(grow) {
                    *d += wv * gv;
                }
            }
        }
        Tensor::new(&[cin, h, w], col2im(&dcols, cin, h, w, k)).expect("input gradient shape")
    });

    let grads = Conv2d {
        weight: Tensor::new(kernel.shape(), gw).expect("weight gradient shape"),
        bias: Tensor::new(&[cout], gb).expect("bias gradient shape"),
    };
    (grads, gin)
}

/// Fully connected layer used after global pooling.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear<T = f32> {
    /// `out × in`
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn zeros(out_features: usize, in_features: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[out_features, in_features]),
            bias: Tensor::zeros(&[out_features]),
        }
    }

    pub fn he_uniform<R: Rng + ?Sized>(
        out_features: usize,
        in_features: usize,
        rng: &mut R,
    ) -> Self {
        let mut l = Self::zeros(out_features, in_features);
        fill_he_uniform(&mut l.weight, in_features, rng);
        l
    }

    pub fn out_features(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>, NnError> {
        let (out, inp) = (self.out_features(), self.in_features());
        if x.len() != inp {
            return Err(NnError::Shape(format!(
                "linear layer expects {inp} inputs, got {}",
                x.len()
            )));
        }
        let w = self.weight.data();
        Ok((0..out)
            .map(|o| {
                let mut acc = self.bias.data()[o];
                for (&wv, &xv) in w[o * inp..(o + 1) * inp].iter().zip(x) {
                    acc += wv * xv;
                }
                acc
            })
            .collect())
    }

    pub fn backward(&self, x: &[T], grad_out: &[T]) -> (Linear<T>, Vec<T>) {
        let (out, inp) = (self.out_features(), self.in_features());
        let w = self.weight.data();
        let mut gw = vec![T::zero(); out * inp];
        let mut gx = vec![T::zero(); inp];
        for o in 0..out {
            let g = grad_out[o];
            for i in 0..inp {
                gw[o * inp + i] = g * x[i];
                gx[i] += w[o * inp + i] * g;
            }
        }
        let grads = Linear {
            weight: Tensor::new(&[out, inp], gw).expect("linear weight gradient"),
            bias: Tensor::new(&[out], grad_out.to_vec()).expect("linear bias gradient"),
        };
        (grads, gx)
    }
}

pub fn relu_in_place<T: Scalar>(xs: &mut [T]) {
    for v in xs {
        *v = if *v > T::zero() { *v } else { T::zero() };
    }
}

/// Zeroes `grad` wherever the ReLU output was not positive.
pub fn relu_backward_in_place<T: Scalar>(output: &[T], grad: &mut [T]) {
    for (g, &o) in grad.iter_mut().zip(output) {
        if o <= T::zero() {
            *g = T::zero();
        }
    }
}

/// Per-channel `(max, mean)` over the spatial extent, interleaved as
/// `[max_0, mean_0, max_1, mean_1, ...]`. Also returns the flat argmax of
/// each channel for the backward pass.
pub fn global_pool<T: Scalar>(features: &Tensor<T>) -> Result<(Vec<T>, Vec<usize>), NnError> {
    let (c, h, w) = features.dims3()?;
    let hw = h * w;
    if hw == 0 {
        return Err(NnError::Shape("cannot pool an empty feature map".into()));
    }
    let mut pooled = Vec::with_capacity(2 * c);
    let mut argmax = Vec::with_capacity(c);
    let n = T::from_f64(hw as f64);
    for ch in features.data().chunks_exact(hw) {
        let mut best = 0;
        for (i, &v) in ch.iter().enumerate() {
            if v > ch[best] {
                best = i;
            }
        }
        let mean = ch.iter().copied().sum::<T>() / n;
        pooled.push(ch[best]);
        pooled.push(mean);
        argmax.push(best);
    }
    Ok((pooled, argmax))
}

pub fn global_pool_backward<T: Scalar>(
    grad: &[T],
    argmax: &[usize],
    h: usize,
    w: usize,
) -> Tensor<T> {
    let c = argmax.len();
    let hw = h * w;
    let inv = T::one() / T::from_f64(hw as f64);
    let mut out = vec![T::zero(); c * hw];
    for ch in 0..c {
        let g_max = grad[2 * ch];
        let g_mean = grad[2 * ch + 1] * inv;
        let plane = &mut out[ch * hw..(ch + 1) * hw];
        for v in plane.iter_mut() {
            *v = g_mean;
        }
        plane[argmax[ch]] += g_max;
    }
    Tensor::new(&[c, h, w], out).expect("pool gradient shape")
}
