//! Fully connected network with ELU hidden activations and manual backprop.
//!
//! All weights live in one flat `f32` buffer so the optimiser, gradient
//! clipping and checkpointing can treat a network as a single vector. Layer
//! `l` stores its weight matrix row-major with shape `[inputs, outputs]`,
//! followed by its bias.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f32>,
}

/// Activations kept from the forward pass for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[l]` is the input to layer `l` (post-activation of layer `l-1`).
    inputs: Vec<Array2<f32>>,
    output: Array2<f32>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f32> {
        &self.output
    }
}

fn elu(x: f32) -> f32 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

/// ELU derivative expressed through its output.
fn elu_grad_from_output(y: f32) -> f32 {
    if y > 0.0 {
        1.0
    } else {
        y + 1.0
    }
}

impl Mlp {
    /// Uniform Glorot initialisation; the output layer is scaled by `out_gain`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], out_gain: f32, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let mut params = Vec::with_capacity(Self::param_count(sizes));
        let layers = sizes.len() - 1;
        for l in 0..layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let gain = if l + 1 == layers { out_gain } else { 1.0 };
            let bound = gain * (6.0 / (fan_in + fan_out) as f32).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            params.extend((0..fan_in * fan_out).map(|_| dist.sample(rng)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self { sizes: sizes.to_vec(), params }
    }

    pub fn from_params(sizes: &[usize], params: Vec<f32>) -> Option<Self> {
        (sizes.len() >= 2 && params.len() == Self::param_count(sizes))
            .then(|| Self { sizes: sizes.to_vec(), params })
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    fn offsets(&self, layer: usize) -> (usize, usize, usize) {
        let start: usize = self.sizes.windows(2).take(layer).map(|w| w[0] * w[1] + w[1]).sum();
        let (i, o) = (self.sizes[layer], self.sizes[layer + 1]);
        (start, start + i * o, start + i * o + o)
    }

    fn layer(&self, l: usize) -> (ArrayView2<'_, f32>, ArrayView1<'_, f32>) {
        let (w0, b0, end) = self.offsets(l);
        let w = ArrayView2::from_shape((self.sizes[l], self.sizes[l + 1]), &self.params[w0..b0]).expect("layout");
        let b = ArrayView1::from(&self.params[b0..end]);
        (w, b)
    }

    pub fn forward(&self, x: ArrayView2<'_, f32>) -> Array2<f32> {
        let layers = self.sizes.len() - 1;
        let mut h = x.to_owned();
        for l in 0..layers {
            let (w, b) = self.layer(l);
            let mut z = h.dot(&w);
            z += &b;
            if l + 1 < layers {
                z.mapv_inplace(elu);
            }
            h = z;
        }
        h
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, f32>) -> ForwardCache {
        let layers = self.sizes.len() - 1;
        let mut inputs = Vec::with_capacity(layers);
        let mut h = x.to_owned();
        for l in 0..layers {
            let (w, b) = self.layer(l);
            let mut z = h.dot(&w);
            z += &b;
            if l + 1 < layers {
                z.mapv_inplace(elu);
            }
            inputs.push(std::mem::replace(&mut h, z));
        }
        ForwardCache { inputs, output: h }
    }

    /// Accumulates `dL/dparams` into `grads` given `dL/doutput`.
    pub fn backward(&self, cache: &ForwardCache, grad_output: ArrayView2<'_, f32>, grads: &mut [f32]) {
        assert_eq!(grads.len(), self.params.len());
        let layers = self.sizes.len() - 1;
        let mut delta = grad_output.to_owned();
        for l in (0..layers).rev() {
            let (w0, b0, end) = self.offsets(l);
            let input = &cache.inputs[l];
            let gw = input.t().dot(&delta);
            for (g, v) in grads[w0..b0].iter_mut().zip(gw.iter()) {
                *g += *v;
            }
            let gb = delta.sum_axis(Axis(0));
            for (g, v) in grads[b0..end].iter_mut().zip(gb.iter()) {
                *g += *v;
            }
            if l > 0 {
                let (w, _) = self.layer(l);
                let mut d_in = delta.dot(&w.t());
                // `input` is the ELU output of layer l-1
                d_in.zip_mut_with(input, |d, &y| *d *= elu_grad_from_output(y));
                delta = d_in;
            }
        }
    }
}
