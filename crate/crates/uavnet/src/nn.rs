//! Minimal dense network engine: forward pass, exact reverse-mode gradients,
//! Adam, and a finite-difference gradient checker. 64-bit floats throughout.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Linear,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    /// The ReLU subgradient at 0 is taken as 0.
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
            Activation::Tanh => 1.0 - out * out,
        }
    }
}

/// One dense layer; weights are row-major `out_dim x in_dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub act: Activation,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// Plain multilayer perceptron.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpNet {
    pub layers: Vec<Layer>,
}

/// Per-layer activations of one forward pass: `acts[0]` is the input,
/// `acts[i + 1]` the output of layer `i`.
#[derive(Clone, Debug)]
pub struct Cache {
    pub acts: Vec<Vec<f64>>,
}

impl Cache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("cache of a forward pass")
    }
}

#[derive(Clone, Debug)]
pub struct LayerGrad {
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

/// Gradients for all layers plus the input.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    pub d_input: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &MlpNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad { dw: vec![0.0; l.w.len()], db: vec![0.0; l.b.len()] })
                .collect(),
            d_input: vec![0.0; net.input_dim()],
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.dw.iter_mut().zip(&b.dw) {
                *x += y;
            }
            for (x, y) in a.db.iter_mut().zip(&b.db) {
                *x += y;
            }
        }
        for (x, y) in self.d_input.iter_mut().zip(&other.d_input) {
            *x += y;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.dw.iter_mut().for_each(|x| *x *= s);
            l.db.iter_mut().for_each(|x| *x *= s);
        }
        self.d_input.iter_mut().for_each(|x| *x *= s);
    }
}

impl MlpNet {
    /// Build a net from `dims = [in, h1, ..., out]` with one activation per layer.
    /// Weights are uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
    pub fn new(dims: &[usize], acts: &[Activation], rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "need at least one layer");
        assert_eq!(dims.len() - 1, acts.len(), "one activation per layer");
        let layers = dims
            .windows(2)
            .zip(acts)
            .map(|(d, &act)| {
                let (fan_in, fan_out) = (d[0], d[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    in_dim: fan_in,
                    out_dim: fan_out,
                    act,
                    w: (0..fan_in * fan_out)
                        .map(|_| rng.gen_range(-bound..bound))
                        .collect(),
                    b: vec![0.0; fan_out],
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = layer_forward(layer, &cur);
        }
        cur
    }

    pub fn forward_cached(&self, x: &[f64]) -> Cache {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let next = layer_forward(layer, acts.last().unwrap());
            acts.push(next);
        }
        Cache { acts }
    }

    /// Exact reverse-mode gradients for all weights, biases and the input.
    pub fn backward(&self, cache: &Cache, upstream: &[f64]) -> Gradients {
        assert_eq!(cache.acts.len(), self.layers.len() + 1, "stale cache");
        assert_eq!(upstream.len(), self.output_dim());
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = upstream.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let out = &cache.acts[i + 1];
            let input = &cache.acts[i];
            // dz = g (.) act'(z), derivative recovered from the output value
            let dz: Vec<f64> = g
                .iter()
                .zip(out)
                .map(|(gi, &oi)| gi * layer.act.derivative_from_output(oi))
                .collect();
            let mut dw = vec![0.0; layer.w.len()];
            for (o, &dzo) in dz.iter().enumerate() {
                let row = &mut dw[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (wi, &xi) in row.iter_mut().zip(input) {
                    *wi = dzo * xi;
                }
            }
            let mut prev = vec![0.0; layer.in_dim];
            for (o, &dzo) in dz.iter().enumerate() {
                let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (pi, &wi) in prev.iter_mut().zip(row) {
                    *pi += wi * dzo;
                }
            }
            grads.push(LayerGrad { dw, db: dz });
            g = prev;
        }
        grads.reverse();
        Gradients { layers: grads, d_input: g }
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Flat parameter accessors (weights then biases, layer by layer).
    pub fn param_get(&self, mut idx: usize) -> f64 {
        for l in &self.layers {
            if idx < l.w.len() {
                return l.w[idx];
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                return l.b[idx];
            }
            idx -= l.b.len();
        }
        panic!("parameter index out of range")
    }

    pub fn param_set(&mut self, mut idx: usize, v: f64) {
        for l in &mut self.layers {
            if idx < l.w.len() {
                l.w[idx] = v;
                return;
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                l.b[idx] = v;
                return;
            }
            idx -= l.b.len();
        }
        panic!("parameter index out of range")
    }

    /// Flatten gradients in the same order as the parameter accessors.
    pub fn flatten_grads(grads: &Gradients) -> Vec<f64> {
        let mut flat = Vec::new();
        for l in &grads.layers {
            flat.extend_from_slice(&l.dw);
            flat.extend_from_slice(&l.db);
        }
        flat
    }

    /// Overwrite parameters with `other`'s (hard copy).
    pub fn copy_params_from(&mut self, other: &MlpNet) {
        debug_assert_eq!(self.layers.len(), other.layers.len());
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.w.copy_from_slice(&b.w);
            a.b.copy_from_slice(&b.b);
        }
    }

    /// Soft update: `self <- tau * online + (1 - tau) * self`, element-wise.
    pub fn polyak_from(&mut self, online: &MlpNet, tau: f64) {
        debug_assert_eq!(self.layers.len(), online.layers.len());
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            for (a, b) in t.w.iter_mut().zip(&o.w) {
                *a = tau * b + (1.0 - tau) * *a;
            }
            for (a, b) in t.b.iter_mut().zip(&o.b) {
                *a = tau * b + (1.0 - tau) * *a;
            }
        }
    }
}

fn layer_forward(layer: &Layer, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(layer.out_dim);
    for (row, &bias) in layer.w.chunks_exact(layer.in_dim).zip(&layer.b) {
        let mut acc = bias;
        for (wi, xi) in row.iter().zip(x) {
            acc += wi * xi;
        }
        out.push(layer.act.apply(acc));
    }
    out
}

/// Per-parameter Adam accumulators, shaped like the net they update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub m_w: Vec<Vec<f64>>,
    pub v_w: Vec<Vec<f64>>,
    pub m_b: Vec<Vec<f64>>,
    pub v_b: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &MlpNet) -> Self {
        Self {
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m_w: net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            v_w: net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            m_b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
            v_b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        }
    }
}

/// One bias-corrected Adam step minimizing along `grads`.
pub fn adam_step(state: &mut AdamState, net: &mut MlpNet, grads: &Gradients, lr: f64) {
    assert_eq!(state.m_w.len(), net.layers.len(), "optimizer/net shape mismatch");
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for (i, layer) in net.layers.iter_mut().enumerate() {
        adam_update(
            &mut state.m_w[i],
            &mut state.v_w[i],
            &mut layer.w,
            &grads.layers[i].dw,
            state.beta1,
            state.beta2,
            state.epsilon,
            lr,
            bc1,
            bc2,
        );
        adam_update(
            &mut state.m_b[i],
            &mut state.v_b[i],
            &mut layer.b,
            &grads.layers[i].db,
            state.beta1,
            state.beta2,
            state.epsilon,
            lr,
            bc1,
            bc2,
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_update(
    m: &mut [f64],
    v: &mut [f64],
    p: &mut [f64],
    g: &[f64],
    beta1: f64,
    beta2: f64,
    eps: f64,
    lr: f64,
    bc1: f64,
    bc2: f64,
) {
    assert_eq!(p.len(), g.len(), "gradient shape mismatch");
    for i in 0..p.len() {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Compare analytic gradients against central finite differences (step 1e-5).
/// `loss` maps the net output to a scalar and its gradient w.r.t. the output.
/// Returns the worst relative error over all parameters.
pub fn grad_check<L>(net: &mut MlpNet, x: &[f64], loss: L) -> f64
where
    L: Fn(&[f64]) -> (f64, Vec<f64>),
{
    const H: f64 = 1e-5;
    let cache = net.forward_cached(x);
    let (_, dout) = loss(cache.output());
    let analytic = MlpNet::flatten_grads(&net.backward(&cache, &dout));

    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = net.param_get(i);
        net.param_set(i, orig + H);
        let (up, _) = loss(&net.forward(x));
        net.param_set(i, orig - H);
        let (down, _) = loss(&net.forward(x));
        net.param_set(i, orig);
        let numeric = (up - down) / (2.0 * H);
        let denom = (a.abs() + numeric.abs()).max(1e-6);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}
