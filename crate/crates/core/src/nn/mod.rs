//! From-scratch dense and 1-D convolution networks.
//!
//! Everything here is plain `f64` on flat buffers: deterministic seeded
//! initialization, explicit forward/backward passes, Adam updates, and a
//! finite-difference gradient checker. No autograd, no BLAS.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

mod adam;
mod serialize;
mod train;

pub use adam::{adam_step, AdamParams, AdamState};
pub use serialize::{load_network, load_network_file, save_network, save_network_file};
pub use train::{
    bce_with_logits, gradient_check, softmax_cross_entropy, train_binary, train_binary_raw,
    train_multiclass, train_multiclass_raw, BinaryScorer, CheckLoss, MulticlassClassifier,
    Target, TrainConfig, TrainLog,
};

/// Errors from network construction, training, and serialization.
#[derive(Debug, Error)]
pub enum NnError {
    #[error("input length {got} does not match expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid network spec: {0}")]
    BadSpec(String),
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },
    #[error("dataset has no fitted scaler; fit one on the training split first")]
    MissingScaler,
    #[error("gradient check is for small networks: {count} parameters exceeds {cap}")]
    TooManyParams { count: usize, cap: usize },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Network architecture family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backbone {
    /// A single dense layer straight to the logits.
    Logistic,
    /// Dense hidden layers with ReLU, given widths.
    Mlp(Vec<usize>),
    /// 1-D CNN with this many conv blocks (1 or 3). One block is
    /// conv(k=7) + ReLU (+ average pool 2 in the 3-block variant); a
    /// global average pool and a dense head follow the blocks.
    Cnn1d(usize),
}

const CONV_KERNEL: usize = 7;
const CONV_CHANNELS: [usize; 3] = [8, 16, 32];

/// A network's shape contract: backbone plus input/output widths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub backbone: Backbone,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl NetworkSpec {
    pub fn logistic(input_dim: usize, output_dim: usize) -> Self {
        Self {
            backbone: Backbone::Logistic,
            input_dim,
            output_dim,
        }
    }

    /// MLP with the default single hidden layer of 64 units.
    pub fn mlp_default(input_dim: usize, output_dim: usize) -> Self {
        Self {
            backbone: Backbone::Mlp(vec![64]),
            input_dim,
            output_dim,
        }
    }

    pub fn mlp(hidden: Vec<usize>, input_dim: usize, output_dim: usize) -> Self {
        Self {
            backbone: Backbone::Mlp(hidden),
            input_dim,
            output_dim,
        }
    }

    pub fn cnn1d(blocks: usize, input_dim: usize, output_dim: usize) -> Self {
        Self {
            backbone: Backbone::Cnn1d(blocks),
            input_dim,
            output_dim,
        }
    }

    fn validate(&self) -> Result<(), NnError> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(NnError::BadSpec("zero input or output width".into()));
        }
        match &self.backbone {
            Backbone::Logistic => Ok(()),
            Backbone::Mlp(hidden) => {
                if hidden.is_empty() || hidden.iter().any(|&h| h == 0) {
                    return Err(NnError::BadSpec("hidden sizes must be >= 1".into()));
                }
                Ok(())
            }
            Backbone::Cnn1d(blocks) => {
                if !(*blocks == 1 || *blocks == 3) {
                    return Err(NnError::BadSpec(format!(
                        "cnn variant has 1 or 3 blocks, got {blocks}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// One layer. Activations flow as (channels, positions) buffers; dense
/// layers treat the buffer as flat.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Layer {
    Dense {
        /// Row-major (out_dim x in_dim).
        w: Vec<f64>,
        b: Vec<f64>,
        in_dim: usize,
        out_dim: usize,
    },
    Relu,
    Conv1d {
        /// (out_ch x in_ch x k), valid padding, stride 1.
        w: Vec<f64>,
        b: Vec<f64>,
        in_ch: usize,
        out_ch: usize,
        k: usize,
    },
    /// Average pool with window and stride 2; an odd trailing element is
    /// dropped.
    AvgPool2,
    /// Mean over positions, per channel.
    GlobalAvgPool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Shape {
    pub ch: usize,
    pub len: usize,
}

impl Shape {
    fn flat(&self) -> usize {
        self.ch * self.len
    }
}

impl Layer {
    fn out_shape(&self, input: Shape) -> Result<Shape, NnError> {
        match self {
            Layer::Dense { in_dim, out_dim, .. } => {
                if input.flat() != *in_dim {
                    return Err(NnError::BadSpec(format!(
                        "dense expects {in_dim} inputs, got {}",
                        input.flat()
                    )));
                }
                Ok(Shape { ch: 1, len: *out_dim })
            }
            Layer::Relu => Ok(input),
            Layer::Conv1d { in_ch, out_ch, k, .. } => {
                if input.ch != *in_ch {
                    return Err(NnError::BadSpec(format!(
                        "conv expects {in_ch} channels, got {}",
                        input.ch
                    )));
                }
                if input.len < *k {
                    return Err(NnError::BadSpec(format!(
                        "conv kernel {k} longer than input length {}",
                        input.len
                    )));
                }
                Ok(Shape {
                    ch: *out_ch,
                    len: input.len - k + 1,
                })
            }
            Layer::AvgPool2 => {
                if input.len < 2 {
                    return Err(NnError::BadSpec(format!(
                        "pool needs length >= 2, got {}",
                        input.len
                    )));
                }
                Ok(Shape {
                    ch: input.ch,
                    len: input.len / 2,
                })
            }
            Layer::GlobalAvgPool => Ok(Shape { ch: input.ch, len: 1 }),
        }
    }

    fn param_count(&self) -> usize {
        match self {
            Layer::Dense { w, b, .. } | Layer::Conv1d { w, b, .. } => w.len() + b.len(),
            _ => 0,
        }
    }
}

/// Per-layer weight/bias gradients; empty vectors for parameterless layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub(crate) layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    fn zeros_like(net: &Network) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| match l {
                Layer::Dense { w, b, .. } | Layer::Conv1d { w, b, .. } => {
                    (vec![0.0; w.len()], vec![0.0; b.len()])
                }
                _ => (Vec::new(), Vec::new()),
            })
            .collect();
        Self { layers }
    }

    fn scale(&mut self, s: f64) {
        for (w, b) in &mut self.layers {
            for x in w.iter_mut() {
                *x *= s;
            }
            for x in b.iter_mut() {
                *x *= s;
            }
        }
    }
}

/// A concrete network: spec plus trained weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    pub(crate) layers: Vec<Layer>,
}

fn layer_plan(spec: &NetworkSpec) -> Result<Vec<Layer>, NnError> {
    spec.validate()?;
    let mut layers = Vec::new();
    match &spec.backbone {
        Backbone::Logistic => {
            layers.push(Layer::Dense {
                w: Vec::new(),
                b: Vec::new(),
                in_dim: spec.input_dim,
                out_dim: spec.output_dim,
            });
        }
        Backbone::Mlp(hidden) => {
            let mut prev = spec.input_dim;
            for &h in hidden {
                layers.push(Layer::Dense {
                    w: Vec::new(),
                    b: Vec::new(),
                    in_dim: prev,
                    out_dim: h,
                });
                layers.push(Layer::Relu);
                prev = h;
            }
            layers.push(Layer::Dense {
                w: Vec::new(),
                b: Vec::new(),
                in_dim: prev,
                out_dim: spec.output_dim,
            });
        }
        Backbone::Cnn1d(blocks) => {
            let mut ch = 1;
            for block in 0..*blocks {
                layers.push(Layer::Conv1d {
                    w: Vec::new(),
                    b: Vec::new(),
                    in_ch: ch,
                    out_ch: CONV_CHANNELS[block],
                    k: CONV_KERNEL,
                });
                layers.push(Layer::Relu);
                if *blocks > 1 {
                    layers.push(Layer::AvgPool2);
                }
                ch = CONV_CHANNELS[block];
            }
            layers.push(Layer::GlobalAvgPool);
            layers.push(Layer::Dense {
                w: Vec::new(),
                b: Vec::new(),
                in_dim: ch,
                out_dim: spec.output_dim,
            });
        }
    }
    Ok(layers)
}

/// Exact trainable-parameter count of a spec.
pub fn param_count(spec: &NetworkSpec) -> Result<usize, NnError> {
    let layers = layer_plan(spec)?;
    // Walk shapes to validate, then sum what the weights will hold.
    let mut shape = Shape { ch: 1, len: spec.input_dim };
    let mut total = 0;
    for layer in &layers {
        shape = layer.out_shape(shape)?;
        total += match layer {
            Layer::Dense { in_dim, out_dim, .. } => in_dim * out_dim + out_dim,
            Layer::Conv1d { in_ch, out_ch, k, .. } => out_ch * in_ch * k + out_ch,
            _ => 0,
        };
    }
    Ok(total)
}

impl Network {
    /// Builds a network with Kaiming-uniform fan-in initialization
    /// (`U(+-sqrt(6/fan_in))`, zero biases) drawn from `seed`.
    pub fn init(spec: &NetworkSpec, seed: u64) -> Result<Self, NnError> {
        let mut layers = layer_plan(spec)?;
        let mut shape = Shape { ch: 1, len: spec.input_dim };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut layers {
            match layer {
                Layer::Dense { w, b, in_dim, out_dim } => {
                    let bound = (6.0 / *in_dim as f64).sqrt();
                    *w = (0..*in_dim * *out_dim)
                        .map(|_| rng.gen_range(-bound..bound))
                        .collect();
                    *b = vec![0.0; *out_dim];
                }
                Layer::Conv1d { w, b, in_ch, out_ch, k } => {
                    let fan_in = *in_ch * *k;
                    let bound = (6.0 / fan_in as f64).sqrt();
                    *w = (0..*out_ch * *in_ch * *k)
                        .map(|_| rng.gen_range(-bound..bound))
                        .collect();
                    *b = vec![0.0; *out_ch];
                }
                _ => {}
            }
            shape = layer.out_shape(shape)?;
        }
        if shape.flat() != spec.output_dim {
            return Err(NnError::BadSpec(format!(
                "network ends with {} values, expected {}",
                shape.flat(),
                spec.output_dim
            )));
        }
        Ok(Self {
            spec: spec.clone(),
            layers,
        })
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Forward pass returning the output logits.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(self.forward_cached(x)?.1)
    }

    /// Forward pass keeping each layer's input for the backward pass.
    /// Returns `(per-layer inputs, output)`.
    pub(crate) fn forward_cached(&self, x: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>), NnError> {
        if x.len() != self.spec.input_dim {
            return Err(NnError::DimensionMismatch {
                expected: self.spec.input_dim,
                got: x.len(),
            });
        }
        let mut shape = Shape { ch: 1, len: self.spec.input_dim };
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let out_shape = layer.out_shape(shape).expect("validated at init");
            let out = apply_layer(layer, &cur, shape, out_shape);
            inputs.push(cur);
            cur = out;
            shape = out_shape;
        }
        Ok((inputs, cur))
    }

    /// Backward pass from the loss gradient at the output. `inputs` is the
    /// cache returned by `forward_cached`.
    pub(crate) fn backward(&self, inputs: &[Vec<f64>], dout: &[f64]) -> Gradients {
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(inputs, dout, &mut grads);
        grads
    }

    /// Backward pass accumulating into existing gradient buffers, so a
    /// mini-batch can share one allocation.
    pub(crate) fn backward_into(&self, inputs: &[Vec<f64>], dout: &[f64], grads: &mut Gradients) {
        // Recompute the shape ladder once.
        let mut shapes = Vec::with_capacity(self.layers.len() + 1);
        let mut shape = Shape { ch: 1, len: self.spec.input_dim };
        shapes.push(shape);
        for layer in &self.layers {
            shape = layer.out_shape(shape).expect("validated at init");
            shapes.push(shape);
        }
        let mut delta = dout.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (in_shape, out_shape) = (shapes[i], shapes[i + 1]);
            // The first layer's input gradient is never consumed.
            let need_dx = i > 0;
            delta = backprop_layer(
                layer,
                &inputs[i],
                &delta,
                in_shape,
                out_shape,
                &mut grads.layers[i],
                need_dx,
            );
        }
    }

    /// Applies `f` to every (weights, biases) pair in layer order.
    pub(crate) fn visit_params_mut(&mut self, mut f: impl FnMut(usize, &mut [f64], &mut [f64])) {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            match layer {
                Layer::Dense { w, b, .. } | Layer::Conv1d { w, b, .. } => f(i, w, b),
                _ => {}
            }
        }
    }

    /// Flattens all parameters into one vector (layer order, weights before
    /// biases). Used by the gradient checker and tests.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            if let Layer::Dense { w, b, .. } | Layer::Conv1d { w, b, .. } = layer {
                out.extend_from_slice(w);
                out.extend_from_slice(b);
            }
        }
        out
    }

    /// Writes a flat parameter vector back (inverse of `flat_params`).
    pub fn set_flat_params(&mut self, params: &[f64]) {
        let mut off = 0;
        self.visit_params_mut(|_, w, b| {
            w.copy_from_slice(&params[off..off + w.len()]);
            off += w.len();
            b.copy_from_slice(&params[off..off + b.len()]);
            off += b.len();
        });
        assert_eq!(off, params.len(), "parameter vector length mismatch");
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|layer| match layer {
            Layer::Dense { w, b, .. } | Layer::Conv1d { w, b, .. } => {
                w.iter().chain(b.iter()).all(|v| v.is_finite())
            }
            _ => true,
        })
    }
}

fn apply_layer(layer: &Layer, x: &[f64], in_shape: Shape, out_shape: Shape) -> Vec<f64> {
    match layer {
        Layer::Dense { w, b, in_dim, out_dim } => {
            let mut out = b.clone();
            for (o, out_v) in out.iter_mut().enumerate().take(*out_dim) {
                let row = &w[o * in_dim..(o + 1) * in_dim];
                let mut acc = 0.0;
                for (wi, xi) in row.iter().zip(x) {
                    acc += wi * xi;
                }
                *out_v += acc;
            }
            out
        }
        Layer::Relu => x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
        Layer::Conv1d { w, b, in_ch, out_ch, k } => {
            let in_len = in_shape.len;
            let out_len = out_shape.len;
            let mut out = vec![0.0; out_ch * out_len];
            for oc in 0..*out_ch {
                let dst = &mut out[oc * out_len..(oc + 1) * out_len];
                dst.fill(b[oc]);
                for ic in 0..*in_ch {
                    let src = &x[ic * in_len..(ic + 1) * in_len];
                    let ker = &w[(oc * in_ch + ic) * k..(oc * in_ch + ic + 1) * k];
                    for (p, d) in dst.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (j, kj) in ker.iter().enumerate() {
                            acc += kj * src[p + j];
                        }
                        *d += acc;
                    }
                }
            }
            out
        }
        Layer::AvgPool2 => {
            let (ch, in_len, out_len) = (in_shape.ch, in_shape.len, out_shape.len);
            let mut out = vec![0.0; ch * out_len];
            for c in 0..ch {
                let src = &x[c * in_len..(c + 1) * in_len];
                let dst = &mut out[c * out_len..(c + 1) * out_len];
                for (p, d) in dst.iter_mut().enumerate() {
                    *d = 0.5 * (src[2 * p] + src[2 * p + 1]);
                }
            }
            out
        }
        Layer::GlobalAvgPool => {
            let (ch, in_len) = (in_shape.ch, in_shape.len);
            (0..ch)
                .map(|c| x[c * in_len..(c + 1) * in_len].iter().sum::<f64>() / in_len as f64)
                .collect()
        }
    }
}

fn backprop_layer(
    layer: &Layer,
    x: &[f64],
    dy: &[f64],
    in_shape: Shape,
    out_shape: Shape,
    grad: &mut (Vec<f64>, Vec<f64>),
    need_dx: bool,
) -> Vec<f64> {
    match layer {
        Layer::Dense { w, in_dim, out_dim, .. } => {
            for o in 0..*out_dim {
                let g = dy[o];
                grad.1[o] += g;
                let grow = &mut grad.0[o * in_dim..(o + 1) * in_dim];
                for (gw, xi) in grow.iter_mut().zip(x) {
                    *gw += g * xi;
                }
            }
            if !need_dx {
                return Vec::new();
            }
            let mut dx = vec![0.0; *in_dim];
            for o in 0..*out_dim {
                let g = dy[o];
                let row = &w[o * in_dim..(o + 1) * in_dim];
                for (d, wi) in dx.iter_mut().zip(row) {
                    *d += g * wi;
                }
            }
            dx
        }
        Layer::Relu => x
            .iter()
            .zip(dy)
            .map(|(&xi, &g)| if xi > 0.0 { g } else { 0.0 })
            .collect(),
        Layer::Conv1d { w, in_ch, out_ch, k, .. } => {
            let in_len = in_shape.len;
            let out_len = out_shape.len;
            for oc in 0..*out_ch {
                let dyc = &dy[oc * out_len..(oc + 1) * out_len];
                grad.1[oc] += dyc.iter().sum::<f64>();
                for ic in 0..*in_ch {
                    let src = &x[ic * in_len..(ic + 1) * in_len];
                    let gker = &mut grad.0[(oc * in_ch + ic) * k..(oc * in_ch + ic + 1) * k];
                    for (j, gk) in gker.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (p, g) in dyc.iter().enumerate() {
                            acc += g * src[p + j];
                        }
                        *gk += acc;
                    }
                }
            }
            if !need_dx {
                return Vec::new();
            }
            let mut dx = vec![0.0; in_ch * in_len];
            for oc in 0..*out_ch {
                let dyc = &dy[oc * out_len..(oc + 1) * out_len];
                for ic in 0..*in_ch {
                    let ker = &w[(oc * in_ch + ic) * k..(oc * in_ch + ic + 1) * k];
                    let dst = &mut dx[ic * in_len..(ic + 1) * in_len];
                    for (p, g) in dyc.iter().enumerate() {
                        for (j, kj) in ker.iter().enumerate() {
                            dst[p + j] += g * kj;
                        }
                    }
                }
            }
            dx
        }
        Layer::AvgPool2 => {
            let (ch, in_len, out_len) = (in_shape.ch, in_shape.len, out_shape.len);
            let mut dx = vec![0.0; ch * in_len];
            for c in 0..ch {
                let dyc = &dy[c * out_len..(c + 1) * out_len];
                let dst = &mut dx[c * in_len..(c + 1) * in_len];
                for (p, g) in dyc.iter().enumerate() {
                    dst[2 * p] = 0.5 * g;
                    dst[2 * p + 1] = 0.5 * g;
                }
            }
            dx
        }
        Layer::GlobalAvgPool => {
            let (ch, in_len) = (in_shape.ch, in_shape.len);
            let mut dx = vec![0.0; ch * in_len];
            for c in 0..ch {
                let g = dy[c] / in_len as f64;
                dx[c * in_len..(c + 1) * in_len].fill(g);
            }
            dx
        }
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn logistic_zero_weights_gives_even_odds() {
        let spec = NetworkSpec::logistic(4, 1);
        let mut net = Network::init(&spec, 1).unwrap();
        net.set_flat_params(&vec![0.0; net.param_count()]);
        let out = net.forward(&[0.3, -0.1, 2.0, 0.7]).unwrap();
        assert_eq!(out[0], 0.0);
        assert_eq!(sigmoid(out[0]), 0.5);
    }

    #[test]
    fn mlp_forward_matches_hand_arithmetic() {
        // 2-2-1 net with hand-picked weights:
        //   hidden pre-activations: [0.3 + 0.5, -0.2 - 0.25] = [0.8, -0.45]
        //   after ReLU: [0.8, 0]
        //   logit: 2*0.8 - 3*0 + 0.1 = 1.7
        let spec = NetworkSpec::mlp(vec![2], 2, 1);
        let mut net = Network::init(&spec, 1).unwrap();
        net.set_flat_params(&[1.0, 0.0, 0.0, 1.0, 0.5, -0.25, 2.0, -3.0, 0.1]);
        let out = net.forward(&[0.3, -0.2]).unwrap();
        assert_relative_eq!(out[0], 1.7, max_relative = 1e-15);
    }

    #[test]
    fn conv_of_ones_is_a_sliding_window_sum() {
        let spec = NetworkSpec {
            backbone: Backbone::Cnn1d(1),
            input_dim: 8,
            output_dim: 1,
        };
        let mut net = Network::init(&spec, 1).unwrap();
        // Reach inside: set the first conv channel to a length-3-like probe
        // is not possible (kernel is 7); instead check the conv layer math
        // directly with a standalone layer.
        let layer = Layer::Conv1d {
            w: vec![1.0; 3],
            b: vec![0.0],
            in_ch: 1,
            out_ch: 1,
            k: 3,
        };
        let x: Vec<f64> = (1..=8).map(f64::from).collect();
        let in_shape = Shape { ch: 1, len: 8 };
        let out_shape = layer.out_shape(in_shape).unwrap();
        let y = apply_layer(&layer, &x, in_shape, out_shape);
        // Brute-force sliding 3-window sums.
        let expect: Vec<f64> = (0..6).map(|p| x[p] + x[p + 1] + x[p + 2]).collect();
        assert_eq!(y, expect);
        let _ = net.forward(&vec![0.0; 8]).unwrap();
    }

    #[test]
    fn param_counts_match_hand_sums() {
        assert_eq!(param_count(&NetworkSpec::logistic(201, 1)).unwrap(), 202);
        assert_eq!(
            param_count(&NetworkSpec::mlp(vec![64], 201, 1)).unwrap(),
            201 * 64 + 64 + 64 + 1
        );
        assert_eq!(param_count(&NetworkSpec::mlp(vec![64], 201, 1)).unwrap(), 12_993);
        // Cnn1d(1): conv 7*1*8+8, dense 8+1.
        assert_eq!(
            param_count(&NetworkSpec::cnn1d(1, 201, 1)).unwrap(),
            7 * 8 + 8 + 8 + 1
        );
        // Cnn1d(3): three conv blocks then dense from 32 channels.
        let by_hand = (7 * 8 + 8) + (7 * 8 * 16 + 16) + (7 * 16 * 32 + 32) + (32 * 7 + 7);
        assert_eq!(param_count(&NetworkSpec::cnn1d(3, 201, 7)).unwrap(), by_hand);
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let spec = NetworkSpec::mlp(vec![8], 16, 1);
        let a = Network::init(&spec, 9).unwrap();
        let b = Network::init(&spec, 9).unwrap();
        let c = Network::init(&spec, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bad_specs_are_rejected() {
        assert!(Network::init(&NetworkSpec::cnn1d(2, 201, 1), 0).is_err());
        assert!(Network::init(&NetworkSpec::mlp(vec![], 201, 1), 0).is_err());
        assert!(Network::init(&NetworkSpec::mlp(vec![0], 201, 1), 0).is_err());
        // Too short for three conv blocks.
        assert!(Network::init(&NetworkSpec::cnn1d(3, 20, 1), 0).is_err());
        let net = Network::init(&NetworkSpec::logistic(4, 1), 0).unwrap();
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(NnError::DimensionMismatch { expected: 4, got: 2 })
        ));
    }

    #[test]
    fn flat_params_roundtrip() {
        let spec = NetworkSpec::cnn1d(1, 32, 3);
        let mut net = Network::init(&spec, 5).unwrap();
        let p = net.flat_params();
        assert_eq!(p.len(), net.param_count());
        let mut p2 = p.clone();
        p2[0] += 1.0;
        net.set_flat_params(&p2);
        assert_eq!(net.flat_params(), p2);
    }
}
