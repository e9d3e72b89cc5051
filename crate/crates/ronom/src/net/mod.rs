//! Minimal reverse-mode neural-network substrate: dense, 1D/2D convolution
//! layers with circular or zero padding, tanh/GELU activations, explicit
//! forward tapes, exact backward passes, and an Adam optimizer. Parameters
//! live in one flat vector per network, which keeps optimizer state,
//! checkpoints, and gradient accumulation trivial.

mod adam;
mod checkpoint;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_network, save_network};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("shape mismatch at layer {layer}: expected {expected}, got {got}")]
    ShapeMismatch {
        layer: usize,
        expected: String,
        got: String,
    },
    #[error("missing forward tape")]
    MissingTape,
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, NetError>;

/// Dense data with an explicit shape; layers validate against it.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn from_flat(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Same data, new shape (must preserve the element count).
    pub fn reshaped(mut self, shape: Vec<usize>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), self.data.len());
        self.shape = shape;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Padding {
    /// Wrap around the spatial axes (periodic boundary).
    Circular,
    /// Out-of-range taps read zero (Dirichlet-style boundary).
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    /// tanh-form approximation 0.5x(1 + tanh(√(2/π)(x + 0.044715x³))).
    Gelu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Gelu => {
                let g = GELU_C * (x + GELU_A * x * x * x);
                0.5 * x * (1.0 + g.tanh())
            }
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Gelu => {
                let g = GELU_C * (x + GELU_A * x * x * x);
                let t = g.tanh();
                let gp = GELU_C * (1.0 + 3.0 * GELU_A * x * x);
                0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * gp
            }
        }
    }

    /// Certified upper bound on |activation′| (tanh: exactly 1; the
    /// tanh-form GELU derivative peaks at ≈1.1290 near x ≈ 1.41, padded
    /// to a safe constant).
    pub fn lipschitz(self) -> f64 {
        match self {
            Activation::Tanh => 1.0,
            Activation::Gelu => 1.13,
        }
    }
}

const GELU_C: f64 = 0.797884560802865; // √(2/π)
const GELU_A: f64 = 0.044715;

/// Layer shape descriptors; weights live in the owning network's flat
/// parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LayerSpec {
    Dense {
        input: usize,
        output: usize,
    },
    Conv1d {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        padding: Padding,
    },
    Conv2d {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        padding: Padding,
    },
    Activation(Activation),
}

impl LayerSpec {
    pub fn param_count(&self) -> usize {
        match self {
            LayerSpec::Dense { input, output } => input * output + output,
            LayerSpec::Conv1d {
                in_ch,
                out_ch,
                kernel,
                ..
            } => out_ch * in_ch * kernel + out_ch,
            LayerSpec::Conv2d {
                in_ch,
                out_ch,
                kernel,
                ..
            } => out_ch * in_ch * kernel * kernel + out_ch,
            LayerSpec::Activation(_) => 0,
        }
    }

    fn fan_in(&self) -> usize {
        match self {
            LayerSpec::Dense { input, .. } => *input,
            LayerSpec::Conv1d { in_ch, kernel, .. } => in_ch * kernel,
            LayerSpec::Conv2d { in_ch, kernel, .. } => in_ch * kernel * kernel,
            LayerSpec::Activation(_) => 1,
        }
    }
}

/// Sequential network with a flat parameter view.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<LayerSpec>,
    offsets: Vec<usize>,
    pub params: Vec<f64>,
    pub seed: u64,
}

/// Per-layer saved inputs from one forward pass; consumed by `backward`.
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<Tensor>,
    output: Tensor,
}

impl Tape {
    pub fn output(&self) -> &Tensor {
        &self.output
    }
}

impl Network {
    /// Builds a network with uniform Kaiming-style fan-in initialization
    /// from the given seed.
    pub fn new(layers: Vec<LayerSpec>, seed: u64) -> Self {
        let mut offsets = Vec::with_capacity(layers.len());
        let mut total = 0usize;
        for l in &layers {
            offsets.push(total);
            total += l.param_count();
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut params = vec![0.0; total];
        for (l, &off) in layers.iter().zip(&offsets) {
            let bound = (1.0 / l.fan_in() as f64).sqrt();
            for p in params[off..off + l.param_count()].iter_mut() {
                *p = rng.gen_range(-bound..bound);
            }
        }
        Network {
            layers,
            offsets,
            params,
            seed,
        }
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn layer_params(&self, idx: usize) -> &[f64] {
        let off = self.offsets[idx];
        &self.params[off..off + self.layers[idx].param_count()]
    }

    /// Forward pass recording the tape for a later backward pass.
    pub fn forward_tape(&self, x: &Tensor) -> Result<(Tensor, Tape)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for (idx, layer) in self.layers.iter().enumerate() {
            inputs.push(cur.clone());
            cur = layer_forward(layer, self.layer_params(idx), &cur, idx)?;
        }
        let tape = Tape {
            inputs,
            output: cur.clone(),
        };
        Ok((cur, tape))
    }

    /// Forward pass without tape bookkeeping.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut cur = x.clone();
        for (idx, layer) in self.layers.iter().enumerate() {
            cur = layer_forward(layer, self.layer_params(idx), &cur, idx)?;
        }
        Ok(cur)
    }

    /// Reverse pass: accumulates parameter gradients into `grads` (same
    /// layout as `params`) and returns the gradient w.r.t. the input.
    pub fn backward(&self, tape: &Tape, grad_out: &Tensor, grads: &mut [f64]) -> Result<Tensor> {
        assert_eq!(grads.len(), self.params.len());
        if tape.inputs.len() != self.layers.len() {
            return Err(NetError::MissingTape);
        }
        let mut grad = grad_out.clone();
        for idx in (0..self.layers.len()).rev() {
            let off = self.offsets[idx];
            let pc = self.layers[idx].param_count();
            grad = layer_backward(
                &self.layers[idx],
                self.layer_params(idx),
                &tape.inputs[idx],
                &grad,
                &mut grads[off..off + pc],
            );
        }
        Ok(grad)
    }

    /// Linear-operator application of a single layer (bias dropped); used by
    /// the Lipschitz estimates. Returns layer(x) − layer(0).
    pub fn layer_linear(&self, idx: usize, x: &Tensor) -> Result<Tensor> {
        let y = layer_forward(&self.layers[idx], self.layer_params(idx), x, idx)?;
        let zero = Tensor::zeros(x.shape.clone());
        let y0 = layer_forward(&self.layers[idx], self.layer_params(idx), &zero, idx)?;
        Ok(Tensor::new(
            y.shape.clone(),
            y.data.iter().zip(&y0.data).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Adjoint of the layer's linear part, via the backward pass.
    pub fn layer_adjoint(&self, idx: usize, input_shape: &[usize], y: &Tensor) -> Tensor {
        let x = Tensor::zeros(input_shape.to_vec());
        let mut scratch = vec![0.0; self.layers[idx].param_count()];
        layer_backward(
            &self.layers[idx],
            self.layer_params(idx),
            &x,
            y,
            &mut scratch,
        )
    }

    /// Spectral norm of one layer's linear part on inputs of the given
    /// shape, by power iteration on AᵀA with a fixed-seed start.
    pub fn layer_operator_norm(&self, idx: usize, input_shape: &[usize]) -> f64 {
        if let LayerSpec::Activation(_) = self.layers[idx] {
            return 1.0;
        }
        let n: usize = input_shape.iter().product();
        let mut state = 0x6a09e667f3bcc909u64;
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                ((state >> 11) as f64 / (1u64 << 53) as f64) + 0.25
            })
            .collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        let mut sigma = 0.0;
        for _ in 0..500 {
            let ax = self
                .layer_linear(idx, &Tensor::new(input_shape.to_vec(), v.clone()))
                .expect("shape fixed");
            let w = self.layer_adjoint(idx, input_shape, &ax);
            let wnorm = w.data.iter().map(|a| a * a).sum::<f64>().sqrt();
            if wnorm == 0.0 {
                return 0.0;
            }
            let new_sigma = v
                .iter()
                .zip(&w.data)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .max(0.0)
                .sqrt();
            v = w.data.iter().map(|a| a / wnorm).collect();
            if (new_sigma - sigma).abs() <= 1e-12 * new_sigma.max(1e-300) {
                return new_sigma;
            }
            sigma = new_sigma;
        }
        sigma
    }

    /// Product of per-layer operator norms and activation Lipschitz
    /// constants: an upper bound on the network's Lipschitz constant.
    /// `input_shape` is threaded through the layers to size the conv
    /// operators.
    pub fn lipschitz_upper_bound(&self, input_shape: &[usize]) -> f64 {
        let mut shape = input_shape.to_vec();
        let mut bound = 1.0;
        for (idx, layer) in self.layers.iter().enumerate() {
            match layer {
                LayerSpec::Activation(a) => bound *= a.lipschitz(),
                _ => {
                    bound *= self.layer_operator_norm(idx, &shape);
                    shape = output_shape(layer, &shape);
                }
            }
        }
        bound
    }
}

fn output_shape(layer: &LayerSpec, input: &[usize]) -> Vec<usize> {
    match layer {
        LayerSpec::Dense { output, .. } => vec![*output],
        LayerSpec::Conv1d { out_ch, .. } => vec![*out_ch, input[1]],
        LayerSpec::Conv2d { out_ch, .. } => vec![*out_ch, input[1], input[2]],
        LayerSpec::Activation(_) => input.to_vec(),
    }
}

fn shape_err(layer: usize, expected: String, got: &[usize]) -> NetError {
    NetError::ShapeMismatch {
        layer,
        expected,
        got: format!("{got:?}"),
    }
}

fn layer_forward(layer: &LayerSpec, params: &[f64], x: &Tensor, idx: usize) -> Result<Tensor> {
    match layer {
        LayerSpec::Dense { input, output } => {
            if x.len() != *input {
                return Err(shape_err(idx, format!("flat length {input}"), &x.shape));
            }
            let (w, b) = params.split_at(input * output);
            let mut y = vec![0.0; *output];
            for o in 0..*output {
                let row = &w[o * input..(o + 1) * input];
                y[o] = b[o]
                    + row
                        .iter()
                        .zip(&x.data)
                        .map(|(wi, xi)| wi * xi)
                        .sum::<f64>();
            }
            Ok(Tensor::from_flat(y))
        }
        LayerSpec::Conv1d {
            in_ch,
            out_ch,
            kernel,
            padding,
        } => {
            if x.shape.len() != 2 || x.shape[0] != *in_ch {
                return Err(shape_err(idx, format!("[{in_ch}, L]"), &x.shape));
            }
            let l = x.shape[1];
            let half = (*kernel as isize - 1) / 2;
            let (w, b) = params.split_at(out_ch * in_ch * kernel);
            let mut y = vec![0.0; out_ch * l];
            for o in 0..*out_ch {
                for pos in 0..l {
                    let mut acc = b[o];
                    for c in 0..*in_ch {
                        let wrow = &w[(o * in_ch + c) * kernel..(o * in_ch + c + 1) * kernel];
                        for (k, wk) in wrow.iter().enumerate() {
                            let src = pos as isize + k as isize - half;
                            let xv = match padding {
                                Padding::Circular => {
                                    x.data[c * l + src.rem_euclid(l as isize) as usize]
                                }
                                Padding::Zero => {
                                    if src < 0 || src >= l as isize {
                                        0.0
                                    } else {
                                        x.data[c * l + src as usize]
                                    }
                                }
                            };
                            acc += wk * xv;
                        }
                    }
                    y[o * l + pos] = acc;
                }
            }
            Ok(Tensor::new(vec![*out_ch, l], y))
        }
        LayerSpec::Conv2d {
            in_ch,
            out_ch,
            kernel,
            padding,
        } => {
            if x.shape.len() != 3 || x.shape[0] != *in_ch {
                return Err(shape_err(idx, format!("[{in_ch}, H, W]"), &x.shape));
            }
            let (h, w_sp) = (x.shape[1], x.shape[2]);
            let half = (*kernel as isize - 1) / 2;
            let (w, b) = params.split_at(out_ch * in_ch * kernel * kernel);
            let mut y = vec![0.0; out_ch * h * w_sp];
            for o in 0..*out_ch {
                for r in 0..h {
                    for cpos in 0..w_sp {
                        let mut acc = b[o];
                        for c in 0..*in_ch {
                            for kr in 0..*kernel {
                                for kc in 0..*kernel {
                                    let sr = r as isize + kr as isize - half;
                                    let sc = cpos as isize + kc as isize - half;
                                    let xv = match padding {
                                        Padding::Circular => {
                                            let rr = sr.rem_euclid(h as isize) as usize;
                                            let cc = sc.rem_euclid(w_sp as isize) as usize;
                                            x.data[(c * h + rr) * w_sp + cc]
                                        }
                                        Padding::Zero => {
                                            if sr < 0
                                                || sr >= h as isize
                                                || sc < 0
                                                || sc >= w_sp as isize
                                            {
                                                0.0
                                            } else {
                                                x.data[(c * h + sr as usize) * w_sp + sc as usize]
                                            }
                                        }
                                    };
                                    acc += w[((o * in_ch + c) * kernel + kr) * kernel + kc] * xv;
                                }
                            }
                        }
                        y[(o * h + r) * w_sp + cpos] = acc;
                    }
                }
            }
            Ok(Tensor::new(vec![*out_ch, h, w_sp], y))
        }
        LayerSpec::Activation(a) => Ok(Tensor::new(
            x.shape.clone(),
            x.data.iter().map(|&v| a.apply(v)).collect(),
        )),
    }
}

fn layer_backward(
    layer: &LayerSpec,
    params: &[f64],
    x: &Tensor,
    grad_out: &Tensor,
    grad_params: &mut [f64],
) -> Tensor {
    match layer {
        LayerSpec::Dense { input, output } => {
            let (w, _) = params.split_at(input * output);
            let (gw, gb) = grad_params.split_at_mut(input * output);
            let mut gx = vec![0.0; *input];
            for o in 0..*output {
                let go = grad_out.data[o];
                gb[o] += go;
                let row = &w[o * input..(o + 1) * input];
                let grow = &mut gw[o * input..(o + 1) * input];
                for i in 0..*input {
                    grow[i] += go * x.data[i];
                    gx[i] += go * row[i];
                }
            }
            Tensor::from_flat(gx)
        }
        LayerSpec::Conv1d {
            in_ch,
            out_ch,
            kernel,
            padding,
        } => {
            let l = x.shape[1];
            let half = (*kernel as isize - 1) / 2;
            let (w, _) = params.split_at(out_ch * in_ch * kernel);
            let (gw, gb) = grad_params.split_at_mut(out_ch * in_ch * kernel);
            let mut gx = vec![0.0; in_ch * l];
            for o in 0..*out_ch {
                for pos in 0..l {
                    let go = grad_out.data[o * l + pos];
                    if go == 0.0 {
                        continue;
                    }
                    gb[o] += go;
                    for c in 0..*in_ch {
                        for k in 0..*kernel {
                            let src = pos as isize + k as isize - half;
                            let src_idx = match padding {
                                Padding::Circular => Some(src.rem_euclid(l as isize) as usize),
                                Padding::Zero => {
                                    if src < 0 || src >= l as isize {
                                        None
                                    } else {
                                        Some(src as usize)
                                    }
                                }
                            };
                            if let Some(s) = src_idx {
                                gw[(o * in_ch + c) * kernel + k] += go * x.data[c * l + s];
                                gx[c * l + s] += go * w[(o * in_ch + c) * kernel + k];
                            }
                        }
                    }
                }
            }
            Tensor::new(vec![*in_ch, l], gx)
        }
        LayerSpec::Conv2d {
            in_ch,
            out_ch,
            kernel,
            padding,
        } => {
            let (h, w_sp) = (x.shape[1], x.shape[2]);
            let half = (*kernel as isize - 1) / 2;
            let (w, _) = params.split_at(out_ch * in_ch * kernel * kernel);
            let (gw, gb) = grad_params.split_at_mut(out_ch * in_ch * kernel * kernel);
            let mut gx = vec![0.0; in_ch * h * w_sp];
            for o in 0..*out_ch {
                for r in 0..h {
                    for cpos in 0..w_sp {
                        let go = grad_out.data[(o * h + r) * w_sp + cpos];
                        if go == 0.0 {
                            continue;
                        }
                        gb[o] += go;
                        for c in 0..*in_ch {
                            for kr in 0..*kernel {
                                for kc in 0..*kernel {
                                    let sr = r as isize + kr as isize - half;
                                    let sc = cpos as isize + kc as isize - half;
                                    let idx = match padding {
                                        Padding::Circular => {
                                            let rr = sr.rem_euclid(h as isize) as usize;
                                            let cc = sc.rem_euclid(w_sp as isize) as usize;
                                            Some((c * h + rr) * w_sp + cc)
                                        }
                                        Padding::Zero => {
                                            if sr < 0
                                                || sr >= h as isize
                                                || sc < 0
                                                || sc >= w_sp as isize
                                            {
                                                None
                                            } else {
                                                Some((c * h + sr as usize) * w_sp + sc as usize)
                                            }
                                        }
                                    };
                                    if let Some(s) = idx {
                                        let wi = ((o * in_ch + c) * kernel + kr) * kernel + kc;
                                        gw[wi] += go * x.data[s];
                                        gx[s] += go * w[wi];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Tensor::new(vec![*in_ch, h, w_sp], gx)
        }
        LayerSpec::Activation(a) => Tensor::new(
            x.shape.clone(),
            x.data
                .iter()
                .zip(&grad_out.data)
                .map(|(&xi, &gi)| gi * a.derivative(xi))
                .collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_diff_check(net: &Network, x: &Tensor, tol_rel: f64) {
        let loss = |n: &Network| -> f64 {
            let y = n.forward(x).unwrap();
            // simple nonlinear functional of the output
            y.data.iter().enumerate().map(|(i, v)| (i as f64 * 0.1 + 1.0) * v * v).sum()
        };
        let (y, tape) = net.forward_tape(x).unwrap();
        let grad_y = Tensor::new(
            y.shape.clone(),
            y.data
                .iter()
                .enumerate()
                .map(|(i, v)| 2.0 * (i as f64 * 0.1 + 1.0) * v)
                .collect(),
        );
        let mut grads = vec![0.0; net.param_count()];
        net.backward(&tape, &grad_y, &mut grads).unwrap();
        let h = 1e-5;
        for pi in 0..net.param_count() {
            let mut plus = net.clone();
            plus.params[pi] += h;
            let mut minus = net.clone();
            minus.params[pi] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let err = (grads[pi] - fd).abs();
            assert!(
                err <= tol_rel * fd.abs().max(grads[pi].abs()) + 1e-7,
                "param {pi}: analytic {} vs fd {}",
                grads[pi],
                fd
            );
        }
    }

    #[test]
    fn empty_network_is_identity() {
        let net = Network::new(vec![], 0);
        let x = Tensor::from_flat(vec![1.0, -2.0, 3.0]);
        assert_eq!(net.forward(&x).unwrap(), x);
    }

    #[test]
    fn identity_dense_layer() {
        let mut net = Network::new(
            vec![LayerSpec::Dense {
                input: 3,
                output: 3,
            }],
            0,
        );
        net.params.iter_mut().for_each(|p| *p = 0.0);
        for i in 0..3 {
            net.params[i * 3 + i] = 1.0;
        }
        let x = Tensor::from_flat(vec![0.5, -1.0, 2.0]);
        assert_eq!(net.forward(&x).unwrap(), x);
    }

    #[test]
    fn delta_kernel_conv1d_is_identity() {
        let mut net = Network::new(
            vec![LayerSpec::Conv1d {
                in_ch: 1,
                out_ch: 1,
                kernel: 3,
                padding: Padding::Circular,
            }],
            0,
        );
        net.params.iter_mut().for_each(|p| *p = 0.0);
        net.params[1] = 1.0; // center tap
        let x = Tensor::new(vec![1, 5], vec![1.0, 2.0, -0.5, 0.0, 3.0]);
        assert_eq!(net.forward(&x).unwrap(), x);
    }

    #[test]
    fn shape_mismatch_names_layer() {
        let net = Network::new(
            vec![
                LayerSpec::Dense {
                    input: 4,
                    output: 2,
                },
                LayerSpec::Dense {
                    input: 3,
                    output: 1,
                },
            ],
            0,
        );
        match net.forward(&Tensor::from_flat(vec![0.0; 4])) {
            Err(NetError::ShapeMismatch { layer, .. }) => assert_eq!(layer, 1),
            other => panic!("expected shape mismatch, got {other:?}"),
        }
    }

    #[test]
    fn constant_loss_zero_gradient() {
        let net = Network::new(
            vec![LayerSpec::Dense {
                input: 2,
                output: 2,
            }],
            7,
        );
        let (y, tape) = net.forward_tape(&Tensor::from_flat(vec![1.0, 2.0])).unwrap();
        let mut grads = vec![0.0; net.param_count()];
        net.backward(&tape, &Tensor::zeros(y.shape.clone()), &mut grads)
            .unwrap();
        assert!(grads.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn hand_chain_rule_scalar_dense() {
        // y = w·x, loss = y², x = 1, w = 3 ⇒ dL/dw = 2y·x = 6
        let mut net = Network::new(
            vec![LayerSpec::Dense {
                input: 1,
                output: 1,
            }],
            0,
        );
        net.params[0] = 3.0;
        net.params[1] = 0.0;
        let (y, tape) = net.forward_tape(&Tensor::from_flat(vec![1.0])).unwrap();
        let mut grads = vec![0.0; 2];
        net.backward(&tape, &Tensor::from_flat(vec![2.0 * y.data[0]]), &mut grads)
            .unwrap();
        assert!((grads[0] - 6.0).abs() < 1e-14);
        assert!((grads[1] - 2.0 * 3.0).abs() < 1e-14);
    }

    #[test]
    fn gradients_dense_tanh_stack() {
        let net = Network::new(
            vec![
                LayerSpec::Dense {
                    input: 4,
                    output: 6,
                },
                LayerSpec::Activation(Activation::Tanh),
                LayerSpec::Dense {
                    input: 6,
                    output: 3,
                },
            ],
            11,
        );
        let x = Tensor::from_flat(vec![0.3, -0.8, 1.2, 0.05]);
        finite_diff_check(&net, &x, 1e-4);
    }

    #[test]
    fn gradients_conv1d_both_paddings() {
        for padding in [Padding::Circular, Padding::Zero] {
            let net = Network::new(
                vec![
                    LayerSpec::Conv1d {
                        in_ch: 2,
                        out_ch: 3,
                        kernel: 3,
                        padding,
                    },
                    LayerSpec::Activation(Activation::Gelu),
                    LayerSpec::Conv1d {
                        in_ch: 3,
                        out_ch: 1,
                        kernel: 3,
                        padding,
                    },
                ],
                21,
            );
            let x = Tensor::new(vec![2, 7], (0..14).map(|i| (i as f64 * 0.37).sin()).collect());
            finite_diff_check(&net, &x, 1e-4);
        }
    }

    #[test]
    fn gradients_conv2d() {
        let net = Network::new(
            vec![
                LayerSpec::Conv2d {
                    in_ch: 1,
                    out_ch: 2,
                    kernel: 3,
                    padding: Padding::Zero,
                },
                LayerSpec::Activation(Activation::Tanh),
                LayerSpec::Conv2d {
                    in_ch: 2,
                    out_ch: 1,
                    kernel: 3,
                    padding: Padding::Circular,
                },
            ],
            31,
        );
        let x = Tensor::new(
            vec![1, 4, 5],
            (0..20).map(|i| ((i * i) as f64 * 0.11).cos()).collect(),
        );
        finite_diff_check(&net, &x, 1e-4);
    }

    #[test]
    fn gradient_wrt_input_matches_fd() {
        let net = Network::new(
            vec![
                LayerSpec::Dense {
                    input: 3,
                    output: 5,
                },
                LayerSpec::Activation(Activation::Gelu),
                LayerSpec::Dense {
                    input: 5,
                    output: 1,
                },
            ],
            41,
        );
        let x = Tensor::from_flat(vec![0.2, -0.4, 0.9]);
        let (_, tape) = net.forward_tape(&x).unwrap();
        let mut grads = vec![0.0; net.param_count()];
        let gx = net
            .backward(&tape, &Tensor::from_flat(vec![1.0]), &mut grads)
            .unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut xp = x.clone();
            xp.data[i] += h;
            let mut xm = x.clone();
            xm.data[i] -= h;
            let fd =
                (net.forward(&xp).unwrap().data[0] - net.forward(&xm).unwrap().data[0]) / (2.0 * h);
            assert!((gx.data[i] - fd).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn circular_conv_shift_equivariant() {
        let net = Network::new(
            vec![LayerSpec::Conv1d {
                in_ch: 2,
                out_ch: 2,
                kernel: 5,
                padding: Padding::Circular,
            }],
            51,
        );
        let l = 9;
        let x = Tensor::new(
            vec![2, l],
            (0..2 * l).map(|i| (i as f64 * 0.711).sin()).collect(),
        );
        let y = net.forward(&x).unwrap();
        let shift = 3;
        let mut xs = Tensor::zeros(vec![2, l]);
        for c in 0..2 {
            for i in 0..l {
                xs.data[c * l + (i + shift) % l] = x.data[c * l + i];
            }
        }
        let ys = net.forward(&xs).unwrap();
        for c in 0..2 {
            for i in 0..l {
                let a = y.data[c * l + i];
                let b = ys.data[c * l + (i + shift) % l];
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn forward_reproducible_for_fixed_seed() {
        let a = Network::new(
            vec![
                LayerSpec::Dense {
                    input: 3,
                    output: 4,
                },
                LayerSpec::Activation(Activation::Tanh),
            ],
            1234,
        );
        let b = Network::new(a.layers().to_vec(), 1234);
        assert_eq!(a.params, b.params);
        let x = Tensor::from_flat(vec![0.1, 0.2, 0.3]);
        assert_eq!(a.forward(&x).unwrap(), b.forward(&x).unwrap());
    }

    #[test]
    fn gelu_lipschitz_constant_is_an_upper_bound() {
        // scan the derivative on a fine grid; tails saturate to {0, 1}
        let mut max = 0.0f64;
        let mut x = -8.0;
        while x <= 8.0 {
            max = max.max(Activation::Gelu.derivative(x).abs());
            x += 1e-3;
        }
        assert!(max < Activation::Gelu.lipschitz(), "measured sup {max}");
        assert!(max > 1.12, "constant should be tight-ish: {max}");
        assert_eq!(Activation::Tanh.lipschitz(), 1.0);
    }

    #[test]
    fn dense_operator_norm_matches_svd() {
        let net = Network::new(
            vec![LayerSpec::Dense {
                input: 4,
                output: 3,
            }],
            61,
        );
        let w = crate::numerics::Matrix::from_fn(3, 4, |o, i| net.params[o * 4 + i]);
        let by_svd = crate::numerics::jacobi_svd(&w).sigma[0];
        let by_power = net.layer_operator_norm(0, &[4]);
        assert!((by_svd - by_power).abs() < 1e-9 * by_svd);
    }

    #[test]
    fn identity_conv_operator_norm_is_one() {
        let mut net = Network::new(
            vec![LayerSpec::Conv1d {
                in_ch: 1,
                out_ch: 1,
                kernel: 3,
                padding: Padding::Circular,
            }],
            0,
        );
        net.params.iter_mut().for_each(|p| *p = 0.0);
        net.params[1] = 1.0;
        let norm = net.layer_operator_norm(0, &[1, 8]);
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lipschitz_product_bounds_random_pairs() {
        let net = Network::new(
            vec![
                LayerSpec::Dense {
                    input: 3,
                    output: 8,
                },
                LayerSpec::Activation(Activation::Tanh),
                LayerSpec::Dense {
                    input: 8,
                    output: 2,
                },
            ],
            71,
        );
        let bound = net.lipschitz_upper_bound(&[3]);
        let mut state = 5u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut best_ratio = 0.0f64;
        for _ in 0..200 {
            let a: Vec<f64> = (0..3).map(|_| 2.0 * next()).collect();
            let b: Vec<f64> = (0..3).map(|_| 2.0 * next()).collect();
            let ya = net.forward(&Tensor::from_flat(a.clone())).unwrap();
            let yb = net.forward(&Tensor::from_flat(b.clone())).unwrap();
            let dy = ya
                .data
                .iter()
                .zip(&yb.data)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            let dx = a
                .iter()
                .zip(&b)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            if dx > 0.0 {
                best_ratio = best_ratio.max(dy / dx);
            }
        }
        assert!(best_ratio <= bound, "ratio {best_ratio} exceeds bound {bound}");
        assert!(best_ratio > 0.0);
    }
}
