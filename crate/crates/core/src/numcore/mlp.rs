//! Softmax MLP policies with exact first- and second-order derivatives of
//! the action log-probability.
//!
//! Parameter layout is fixed so checkpoints stay portable: for each layer in
//! forward order, the weight matrix (row-major, `fan_out x fan_in`, one row per
//! output unit) followed by the bias vector.
//!
//! Second derivatives use the R-operator (forward-mode differentiation of the
//! backward pass): `H v` is exact for any direction `v`, and the dense Hessian
//! is assembled column by column.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{DenseMatrix, ParamVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => a.tanh(),
            Activation::Relu => a.max(0.0),
        }
    }

    /// First derivative expressed through the activation output `h`.
    fn d1(self, h: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - h * h,
            Activation::Relu => {
                if h > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Second derivative expressed through the activation output `h`.
    fn d2(self, h: f64) -> f64 {
        match self {
            Activation::Tanh => -2.0 * h * (1.0 - h * h),
            Activation::Relu => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// Architecture of a softmax policy network.
///
/// `input_dim` may be zero for stateless games, in which case the output
/// layer biases act as the logits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    w_off: usize,
    b_off: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, output_dim: usize, hidden: Vec<usize>, activation: Activation) -> Result<Self> {
        if output_dim == 0 {
            return Err(Error::Config("policy needs at least one action".into()));
        }
        if hidden.iter().any(|&w| w == 0) {
            return Err(Error::Config(format!("hidden widths must be positive, got {hidden:?}")));
        }
        Ok(Self { input_dim, output_dim, hidden, activation })
    }

    /// Softmax over biases only: `input_dim = 0`, no hidden layers.
    pub fn tabular(n_actions: usize) -> Self {
        Self { input_dim: 0, output_dim: n_actions, hidden: Vec::new(), activation: Activation::Tanh }
    }

    fn layers(&self) -> Vec<Layer> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden);
        dims.push(self.output_dim);
        let mut off = 0;
        dims.windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let layer = Layer { fan_in, fan_out, w_off: off, b_off: off + fan_in * fan_out };
                off += (fan_in + 1) * fan_out;
                layer
            })
            .collect()
    }

    /// Σ (fan_in + 1) · fan_out over layers.
    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| (l.fan_in + 1) * l.fan_out).sum()
    }

    /// Uniform(-s, s) weights with s = 1/sqrt(fan_in); zero biases.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        let mut p = ParamVector::zeros(self.param_count());
        for layer in self.layers() {
            if layer.fan_in == 0 {
                continue;
            }
            let s = 1.0 / (layer.fan_in as f64).sqrt();
            for w in &mut p[layer.w_off..layer.b_off] {
                *w = rng.gen_range(-s..s);
            }
        }
        p
    }

    fn check(&self, params: &[f64], obs: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Config(format!(
                "parameter vector has length {}, network expects {}",
                params.len(),
                self.param_count()
            )));
        }
        if obs.len() != self.input_dim {
            return Err(Error::Config(format!(
                "observation has length {}, network expects {}",
                obs.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.output_dim {
            return Err(Error::Input(format!("action {action} out of range [0, {})", self.output_dim)));
        }
        Ok(())
    }
}

/// Forward activations for one observation.
struct Tape {
    /// `acts[0]` is the observation, `acts[l]` the output of hidden layer l.
    acts: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

fn forward_tape(spec: &MlpSpec, layers: &[Layer], params: &[f64], obs: &[f64]) -> Tape {
    let mut acts = Vec::with_capacity(layers.len());
    acts.push(obs.to_vec());
    let last = layers.len() - 1;
    let mut logits = Vec::new();
    for (l, layer) in layers.iter().enumerate() {
        let input = &acts[l];
        let w = &params[layer.w_off..layer.b_off];
        let b = &params[layer.b_off..layer.b_off + layer.fan_out];
        let out: Vec<f64> = (0..layer.fan_out)
            .map(|r| {
                let row = &w[r * layer.fan_in..(r + 1) * layer.fan_in];
                b[r] + row.iter().zip(input).map(|(x, y)| x * y).sum::<f64>()
            })
            .collect();
        if l == last {
            logits = out;
        } else {
            acts.push(out.into_iter().map(|a| spec.activation.apply(a)).collect());
        }
    }
    Tape { acts, logits }
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Inverse-CDF draw from a categorical distribution.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub fn mlp_forward(spec: &MlpSpec, params: &[f64], obs: &[f64]) -> Result<Vec<f64>> {
    spec.check(params, obs)?;
    Ok(forward_tape(spec, &spec.layers(), params, obs).logits)
}

pub fn log_prob(spec: &MlpSpec, params: &[f64], obs: &[f64], action: usize) -> Result<f64> {
    spec.check_action(action)?;
    let logits = mlp_forward(spec, params, obs)?;
    Ok(log_softmax(&logits)[action])
}

/// Backward-pass intermediates: per-layer output deltas and input gradients.
struct Backward {
    /// `deltas[l]`: d log π / d (pre-activation output of layer l).
    deltas: Vec<Vec<f64>>,
    /// `gins[l]`: d log π / d (input of layer l), for l ≥ 1.
    gins: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

fn backward(spec: &MlpSpec, layers: &[Layer], params: &[f64], tape: &Tape, action: usize, grad: &mut [f64]) -> Backward {
    let probs = softmax(&tape.logits);
    let n_layers = layers.len();
    let mut deltas = vec![Vec::new(); n_layers];
    let mut gins = vec![Vec::new(); n_layers];
    let mut delta: Vec<f64> = probs.iter().map(|p| -p).collect();
    delta[action] += 1.0;
    for l in (0..n_layers).rev() {
        let layer = layers[l];
        let input = &tape.acts[l];
        for r in 0..layer.fan_out {
            let d = delta[r];
            let gw = &mut grad[layer.w_off + r * layer.fan_in..layer.w_off + (r + 1) * layer.fan_in];
            for (g, x) in gw.iter_mut().zip(input) {
                *g += d * x;
            }
            grad[layer.b_off + r] += d;
        }
        if l > 0 {
            let w = &params[layer.w_off..layer.b_off];
            let mut gin = vec![0.0; layer.fan_in];
            for r in 0..layer.fan_out {
                let d = delta[r];
                for (g, wv) in gin.iter_mut().zip(&w[r * layer.fan_in..(r + 1) * layer.fan_in]) {
                    *g += wv * d;
                }
            }
            let next: Vec<f64> = gin.iter().zip(input).map(|(g, h)| g * spec.activation.d1(*h)).collect();
            gins[l] = gin;
            deltas[l] = std::mem::replace(&mut delta, next);
        } else {
            deltas[l] = std::mem::take(&mut delta);
        }
    }
    Backward { deltas, gins, probs }
}

pub fn log_prob_grad(spec: &MlpSpec, params: &[f64], obs: &[f64], action: usize) -> Result<ParamVector> {
    spec.check(params, obs)?;
    spec.check_action(action)?;
    let layers = spec.layers();
    let tape = forward_tape(spec, &layers, params, obs);
    let mut grad = ParamVector::zeros(params.len());
    backward(spec, &layers, params, &tape, action, &mut grad);
    Ok(grad)
}

/// Work space for one R-pass.
struct HvpBuffers {
    r_in: Vec<Vec<f64>>,
    r_pre: Vec<Vec<f64>>,
    r_delta: Vec<f64>,
    r_gin: Vec<f64>,
}

impl HvpBuffers {
    fn new(spec: &MlpSpec, layers: &[Layer]) -> Self {
        let mut r_in = vec![vec![0.0; spec.input_dim]];
        r_in.extend(layers.iter().take(layers.len() - 1).map(|l| vec![0.0; l.fan_out]));
        let widest = layers.iter().map(|l| l.fan_in.max(l.fan_out)).max().unwrap_or(0);
        Self {
            r_in,
            r_pre: layers.iter().map(|l| vec![0.0; l.fan_out]).collect(),
            r_delta: Vec::with_capacity(widest),
            r_gin: vec![0.0; widest],
        }
    }
}

/// Cached forward/backward state for repeated Hessian-vector products at one
/// (params, obs, action) point.
pub struct CurvaturePoint<'a> {
    spec: &'a MlpSpec,
    layers: Vec<Layer>,
    params: &'a [f64],
    tape: Tape,
    bw: Backward,
}

impl<'a> CurvaturePoint<'a> {
    pub fn new(spec: &'a MlpSpec, params: &'a [f64], obs: &[f64], action: usize) -> Result<Self> {
        spec.check(params, obs)?;
        spec.check_action(action)?;
        let layers = spec.layers();
        let tape = forward_tape(spec, &layers, params, obs);
        let mut scratch = vec![0.0; params.len()];
        let bw = backward(spec, &layers, params, &tape, action, &mut scratch);
        Ok(Self { spec, layers, params, tape, bw })
    }

    /// Adds `scale * H v` to `out`, where H is the Hessian of log π(action|obs).
    pub fn add_hvp(&self, v: &[f64], scale: f64, out: &mut [f64]) {
        let mut buf = HvpBuffers::new(self.spec, &self.layers);
        self.hvp_into(v, scale, out, 0, &mut buf);
    }

    /// `v` must vanish on every layer before `start`.
    fn hvp_into(&self, v: &[f64], scale: f64, out: &mut [f64], start: usize, buf: &mut HvpBuffers) {
        let layers = &self.layers;
        let n_layers = layers.len();
        let act = self.spec.activation;
        let params = self.params;

        // R-forward: r_in[l] = R{input of layer l}, r_pre[l] = R{pre-activation of layer l}.
        for l in 0..=start.min(n_layers - 1) {
            buf.r_in[l].iter_mut().for_each(|x| *x = 0.0);
        }
        for l in 0..start {
            buf.r_pre[l].iter_mut().for_each(|x| *x = 0.0);
        }
        for (l, layer) in layers.iter().enumerate().skip(start) {
            let input = &self.tape.acts[l];
            let w = &params[layer.w_off..layer.b_off];
            let vw = &v[layer.w_off..layer.b_off];
            let vb = &v[layer.b_off..layer.b_off + layer.fan_out];
            let (r_in, r_in_next) = buf.r_in.split_at_mut(l + 1);
            let rin = &r_in[l];
            let ra = &mut buf.r_pre[l];
            for r in 0..layer.fan_out {
                let span = r * layer.fan_in..(r + 1) * layer.fan_in;
                let mut s = vb[r];
                for ((wv, vwv), (x, rx)) in w[span.clone()].iter().zip(&vw[span]).zip(input.iter().zip(rin)) {
                    s += vwv * x + wv * rx;
                }
                ra[r] = s;
            }
            if l + 1 < n_layers {
                let h = &self.tape.acts[l + 1];
                for ((o, r), hv) in r_in_next[0].iter_mut().zip(ra.iter()).zip(h) {
                    *o = act.d1(*hv) * r;
                }
            }
        }

        // R{delta} at the logits: delta = e_a - p, so R{delta} = -R{p}.
        let p = &self.bw.probs;
        let rz = &buf.r_pre[n_layers - 1];
        let p_rz: f64 = p.iter().zip(rz).map(|(a, b)| a * b).sum();
        buf.r_delta.clear();
        buf.r_delta.extend(p.iter().zip(rz).map(|(pk, rk)| -pk * (rk - p_rz)));

        for l in (0..n_layers).rev() {
            let layer = layers[l];
            let input = &self.tape.acts[l];
            let rin = &buf.r_in[l];
            let delta = &self.bw.deltas[l];
            for r in 0..layer.fan_out {
                let (rd, d) = (buf.r_delta[r], delta[r]);
                let o = &mut out[layer.w_off + r * layer.fan_in..layer.w_off + (r + 1) * layer.fan_in];
                if l >= start {
                    for ((g, x), rx) in o.iter_mut().zip(input).zip(rin) {
                        *g += scale * (rd * x + d * rx);
                    }
                } else {
                    for (g, x) in o.iter_mut().zip(input) {
                        *g += scale * rd * x;
                    }
                }
                out[layer.b_off + r] += scale * rd;
            }
            if l > 0 {
                let w = &params[layer.w_off..layer.b_off];
                let vw = &v[layer.w_off..layer.b_off];
                let r_gin = &mut buf.r_gin[..layer.fan_in];
                r_gin.iter_mut().for_each(|g| *g = 0.0);
                for r in 0..layer.fan_out {
                    let (rd, d) = (buf.r_delta[r], delta[r]);
                    let span = r * layer.fan_in..(r + 1) * layer.fan_in;
                    if l >= start {
                        for ((g, wv), vwv) in r_gin.iter_mut().zip(&w[span.clone()]).zip(&vw[span]) {
                            *g += vwv * d + wv * rd;
                        }
                    } else {
                        for (g, wv) in r_gin.iter_mut().zip(&w[span]) {
                            *g += wv * rd;
                        }
                    }
                }
                let gin = &self.bw.gins[l];
                let ra_prev = &buf.r_pre[l - 1];
                buf.r_delta.clear();
                buf.r_delta.extend((0..layer.fan_in).map(|c| {
                    let h = input[c];
                    r_gin[c] * act.d1(h) + gin[c] * act.d2(h) * ra_prev[c]
                }));
            }
        }
    }

    /// Adds `scale * R{δ}` for a unit perturbation of the gradient at input `c`
    /// of layer `l`, propagated into the parameters of the layers below.
    fn unit_backward(&self, l: usize, c: usize, scale: f64, out: &mut [f64], buf: &mut HvpBuffers) {
        let act = self.spec.activation;
        let fan_in = self.layers[l].fan_in;
        buf.r_delta.clear();
        buf.r_delta.resize(fan_in, 0.0);
        buf.r_delta[c] = act.d1(self.tape.acts[l][c]);
        for k in (0..l).rev() {
            let layer = self.layers[k];
            let input = &self.tape.acts[k];
            for r in 0..layer.fan_out {
                let rd = buf.r_delta[r];
                if rd == 0.0 {
                    continue;
                }
                let o = &mut out[layer.w_off + r * layer.fan_in..layer.w_off + (r + 1) * layer.fan_in];
                for (g, x) in o.iter_mut().zip(input) {
                    *g += scale * rd * x;
                }
                out[layer.b_off + r] += scale * rd;
            }
            if k > 0 {
                let w = &self.params[layer.w_off..layer.b_off];
                let r_gin = &mut buf.r_gin[..layer.fan_in];
                r_gin.iter_mut().for_each(|g| *g = 0.0);
                for r in 0..layer.fan_out {
                    let rd = buf.r_delta[r];
                    for (g, wv) in r_gin.iter_mut().zip(&w[r * layer.fan_in..(r + 1) * layer.fan_in]) {
                        *g += wv * rd;
                    }
                }
                buf.r_delta.clear();
                buf.r_delta.extend((0..layer.fan_in).map(|c| r_gin[c] * act.d1(input[c])));
            }
        }
    }

    /// Adds `scale * H` to the square matrix `out`.
    ///
    /// Hidden layers: the column of bias b_i comes from a Hessian-vector
    /// product, and the column of weight W_ic is x_c times that column plus
    /// δ_i times a backward pass seeded at input c. The output-layer block,
    /// where the logits are linear in the parameters, is
    /// −(diag p − ppᵀ) ⊗ x̃x̃ᵀ with x̃ = [x; 1].
    pub fn add_hessian(&self, scale: f64, out: &mut DenseMatrix) {
        let n = self.params.len();
        assert!(out.rows() == n && out.cols() == n, "Hessian accumulator has wrong shape");
        let last = self.layers.len() - 1;
        let top = self.layers[last];
        let off = top.w_off;
        let mut buf = HvpBuffers::new(self.spec, &self.layers);
        let mut e = vec![0.0; n];
        let mut bias_cols = vec![vec![0.0; n]; self.layers.iter().map(|l| l.fan_out).max().unwrap_or(0)];
        let mut back_cols = vec![vec![0.0; off]; self.layers[..last].iter().map(|l| l.fan_in).max().unwrap_or(0)];
        for l in 0..last {
            let layer = self.layers[l];
            for (i, c) in bias_cols.iter_mut().take(layer.fan_out).enumerate() {
                c.iter_mut().for_each(|x| *x = 0.0);
                e[layer.b_off + i] = 1.0;
                self.hvp_into(&e, scale, c, l, &mut buf);
                e[layer.b_off + i] = 0.0;
            }
            // Seeded below layer l, so only parameters before w_off are touched.
            if l > 0 {
                for (c, b) in back_cols.iter_mut().take(layer.fan_in).enumerate() {
                    b.iter_mut().for_each(|x| *x = 0.0);
                    self.unit_backward(l, c, scale, b, &mut buf);
                }
            }
            let x = &self.tape.acts[l];
            let delta = &self.bw.deltas[l];
            for i in 0..layer.fan_out {
                let bias = &bias_cols[i];
                for c in 0..layer.fan_in {
                    let j = layer.w_off + i * layer.fan_in + c;
                    let xc = x[c];
                    let row = out.row_mut(j);
                    for (o, b) in row.iter_mut().zip(bias) {
                        *o += xc * b;
                    }
                    if l > 0 {
                        let di = delta[i];
                        for (o, u) in row[..layer.w_off].iter_mut().zip(&back_cols[c]) {
                            *o += di * u;
                        }
                    }
                    for k in off..n {
                        out[(k, j)] += xc * bias[k];
                    }
                }
                let j = layer.b_off + i;
                for (o, b) in out.row_mut(j).iter_mut().zip(bias) {
                    *o += b;
                }
                for k in off..n {
                    out[(k, j)] += bias[k];
                }
            }
        }

        let x = &self.tape.acts[last];
        let p = &self.bw.probs;
        let index = |r: usize, c: usize| if c < top.fan_in { top.w_off + r * top.fan_in + c } else { top.b_off + r };
        let xt = |c: usize| if c < top.fan_in { x[c] } else { 1.0 };
        for r in 0..top.fan_out {
            for r2 in 0..top.fan_out {
                let coef = -scale * p[r] * (f64::from(u8::from(r == r2)) - p[r2]);
                if coef == 0.0 {
                    continue;
                }
                for c in 0..=top.fan_in {
                    let a = coef * xt(c);
                    let row = out.row_mut(index(r, c));
                    for c2 in 0..top.fan_in {
                        row[top.w_off + r2 * top.fan_in + c2] += a * x[c2];
                    }
                    row[top.b_off + r2] += a;
                }
            }
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.bw.probs
    }
}

pub fn log_prob_hvp(spec: &MlpSpec, params: &[f64], obs: &[f64], action: usize, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != params.len() {
        return Err(Error::Config("direction length does not match parameters".into()));
    }
    let point = CurvaturePoint::new(spec, params, obs, action)?;
    let mut out = vec![0.0; params.len()];
    point.add_hvp(v, 1.0, &mut out);
    Ok(out)
}

/// Exact Hessian of log π(action|obs) with respect to the parameters,
/// symmetrized (the exact Hessian differs from its transpose only by rounding).
pub fn log_prob_hessian(spec: &MlpSpec, params: &[f64], obs: &[f64], action: usize) -> Result<DenseMatrix> {
    let point = CurvaturePoint::new(spec, params, obs, action)?;
    let n = params.len();
    let mut h = DenseMatrix::zeros(n, n);
    point.add_hessian(1.0, &mut h);
    h.symmetrize();
    Ok(h)
}

/// A policy network together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub spec: MlpSpec,
    pub params: ParamVector,
}

impl Policy {
    pub fn new(spec: MlpSpec, params: ParamVector) -> Result<Self> {
        if params.dim() != spec.param_count() {
            return Err(Error::Config(format!(
                "parameter vector has length {}, network expects {}",
                params.dim(),
                spec.param_count()
            )));
        }
        Ok(Self { spec, params })
    }

    pub fn random<R: Rng + ?Sized>(spec: MlpSpec, rng: &mut R) -> Self {
        let params = spec.init(rng);
        Self { spec, params }
    }

    pub fn n_params(&self) -> usize {
        self.params.dim()
    }

    pub fn probs(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&mlp_forward(&self.spec, &self.params, obs)?))
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<(usize, f64)> {
        let logp = log_softmax(&mlp_forward(&self.spec, &self.params, obs)?);
        let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
        let a = sample_categorical(&probs, rng);
        Ok((a, logp[a]))
    }

    pub fn greedy(&self, obs: &[f64]) -> Result<usize> {
        let logits = mlp_forward(&self.spec, &self.params, obs)?;
        Ok(logits
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &z)| if z > best.1 { (i, z) } else { best })
            .0)
    }

    pub fn log_prob(&self, obs: &[f64], action: usize) -> Result<f64> {
        log_prob(&self.spec, &self.params, obs, action)
    }

    pub fn grad_log_prob(&self, obs: &[f64], action: usize) -> Result<ParamVector> {
        log_prob_grad(&self.spec, &self.params, obs, action)
    }

    /// Adds ∇ log π(action|obs) to `acc` without allocating a fresh gradient.
    pub fn accumulate_grad(&self, obs: &[f64], action: usize, acc: &mut [f64]) -> Result<()> {
        self.spec.check(&self.params, obs)?;
        self.spec.check_action(action)?;
        let layers = self.spec.layers();
        let tape = forward_tape(&self.spec, &layers, &self.params, obs);
        backward(&self.spec, &layers, &self.params, &tape, action, acc);
        Ok(())
    }

    pub fn curvature(&self, obs: &[f64], action: usize) -> Result<CurvaturePoint<'_>> {
        CurvaturePoint::new(&self.spec, &self.params, obs, action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Straight-line forward pass for a two-hidden-layer tanh network,
    /// written independently of the layer loop above.
    fn oracle_forward_2h(params: &[f64], obs: &[f64], h1: usize, h2: usize, k: usize) -> Vec<f64> {
        let d = obs.len();
        let mut off = 0;
        let mut layer = |inp: &[f64], fan_out: usize, activate: bool| -> Vec<f64> {
            let fan_in = inp.len();
            let mut out = vec![0.0; fan_out];
            for r in 0..fan_out {
                let mut s = 0.0;
                for c in 0..fan_in {
                    s += params[off + r * fan_in + c] * inp[c];
                }
                s += params[off + fan_in * fan_out + r];
                out[r] = if activate { s.tanh() } else { s };
            }
            off += (fan_in + 1) * fan_out;
            out
        };
        let a = layer(obs, h1, true);
        let b = layer(&a, h2, true);
        let z = layer(&b, k, false);
        assert_eq!(off, (d + 1) * h1 + (h1 + 1) * h2 + (h2 + 1) * k);
        z
    }

    fn random_case(seed: u64) -> (MlpSpec, ParamVector, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = MlpSpec::new(3, 4, vec![5, 6], Activation::Tanh).unwrap();
        let mut params = spec.init(&mut rng);
        for p in params.iter_mut() {
            *p += rng.gen_range(-0.3..0.3);
        }
        let obs: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (spec, params, obs)
    }

    #[test]
    fn zero_params_give_zero_logits_and_uniform_policy() {
        let spec = MlpSpec::new(3, 4, vec![8, 8], Activation::Tanh).unwrap();
        let params = ParamVector::zeros(spec.param_count());
        let logits = mlp_forward(&spec, &params, &[0.3, -1.0, 2.0]).unwrap();
        assert_eq!(logits, vec![0.0; 4]);
        let lp = log_prob(&spec, &params, &[0.3, -1.0, 2.0], 2).unwrap();
        assert!((lp - 0.25f64.ln()).abs() < 1e-12);
        assert!((lp + 1.386294).abs() < 1e-6);
    }

    #[test]
    fn identity_linear_layer() {
        let spec = MlpSpec::new(3, 3, vec![], Activation::Tanh).unwrap();
        let mut params = ParamVector::zeros(spec.param_count());
        for i in 0..3 {
            params[i * 3 + i] = 1.0;
        }
        let x = [0.5, -2.0, 7.0];
        assert_eq!(mlp_forward(&spec, &params, &x).unwrap(), x.to_vec());
    }

    #[test]
    fn forward_matches_straight_line_oracle() {
        for seed in 0..20 {
            let (spec, params, obs) = random_case(seed);
            let got = mlp_forward(&spec, &params, &obs).unwrap();
            let want = oracle_forward_2h(&params, &obs, 5, 6, 4);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let spec = MlpSpec::new(3, 2, vec![4], Activation::Tanh).unwrap();
        let params = ParamVector::zeros(spec.param_count());
        assert!(matches!(mlp_forward(&spec, &params, &[1.0]), Err(Error::Config(_))));
        assert!(matches!(mlp_forward(&spec, &params[..3], &[1.0, 2.0, 3.0]), Err(Error::Config(_))));
    }

    #[test]
    fn out_of_range_action_is_input_error() {
        let spec = MlpSpec::new(1, 2, vec![], Activation::Tanh).unwrap();
        let params = ParamVector::zeros(spec.param_count());
        assert!(matches!(log_prob(&spec, &params, &[0.0], 2), Err(Error::Input(_))));
    }

    #[test]
    fn dominant_logit_saturates() {
        let spec = MlpSpec::tabular(3);
        let params = ParamVector::from(vec![50.0, 0.0, 0.0]);
        let lp = log_prob(&spec, &params, &[], 0).unwrap();
        assert!(lp >= -1e-9 && lp <= 0.0);
    }

    #[test]
    fn log_prob_matches_direct_sum_exp() {
        for seed in 0..20 {
            let (spec, params, obs) = random_case(seed);
            let z = oracle_forward_2h(&params, &obs, 5, 6, 4);
            let denom: f64 = z.iter().map(|v| v.exp()).sum();
            for a in 0..4 {
                let want = (z[a].exp() / denom).ln();
                let got = log_prob(&spec, &params, &obs, a).unwrap();
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_point_output_weight_gradient() {
        // Zero output layer -> uniform policy; d log π_a / d W3[a][c] = (1 - 1/K) h2[c].
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = MlpSpec::new(2, 4, vec![3, 3], Activation::Tanh).unwrap();
        let mut params = spec.init(&mut rng);
        let layers = spec.layers();
        let out = layers[2];
        for p in &mut params[out.w_off..] {
            *p = 0.0;
        }
        let obs = [0.4, -0.7];
        let tape = forward_tape(&spec, &layers, &params, &obs);
        let h2 = &tape.acts[2];
        let a = 1;
        let g = log_prob_grad(&spec, &params, &obs, a).unwrap();
        for c in 0..3 {
            let got = g[out.w_off + a * 3 + c];
            assert!((got - 0.75 * h2[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn score_identity() {
        for seed in 0..20 {
            let (spec, params, obs) = random_case(seed);
            let probs = softmax(&mlp_forward(&spec, &params, &obs).unwrap());
            let mut acc = vec![0.0; params.len()];
            for (a, p) in probs.iter().enumerate() {
                let g = log_prob_grad(&spec, &params, &obs, a).unwrap();
                for (s, gi) in acc.iter_mut().zip(g.iter()) {
                    *s += p * gi;
                }
            }
            assert!(acc.iter().all(|v| v.abs() < 1e-8));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-5;
        for seed in 0..10 {
            let (spec, params, obs) = random_case(seed);
            let a = (seed % 4) as usize;
            let g = log_prob_grad(&spec, &params, &obs, a).unwrap();
            let mut p = params.clone();
            for i in 0..params.len() {
                p[i] = params[i] + h;
                let up = log_prob(&spec, &p, &obs, a).unwrap();
                p[i] = params[i] - h;
                let down = log_prob(&spec, &p, &obs, a).unwrap();
                p[i] = params[i];
                let fd = (up - down) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-4 * (1.0 + fd.abs()), "param {i}: fd {fd} exact {}", g[i]);
            }
        }
    }

    #[test]
    fn hessian_matches_fd_of_gradient_and_is_symmetric() {
        let h = 1e-4;
        for seed in 0..5 {
            let (spec, params, obs) = random_case(seed);
            let a = (seed % 4) as usize;
            let hess = log_prob_hessian(&spec, &params, &obs, a).unwrap();
            assert!(hess.max_asymmetry() <= 1e-8);
            let mut p = params.clone();
            for j in 0..params.len() {
                p[j] = params[j] + h;
                let up = log_prob_grad(&spec, &p, &obs, a).unwrap();
                p[j] = params[j] - h;
                let down = log_prob_grad(&spec, &p, &obs, a).unwrap();
                p[j] = params[j];
                for i in 0..params.len() {
                    let fd = (up[i] - down[i]) / (2.0 * h);
                    let e = hess[(i, j)];
                    assert!((fd - e).abs() <= 1e-3 * (1.0 + e.abs()));
                }
            }
        }
    }

    #[test]
    fn hessian_columns_match_unit_hvps() {
        for (activation, hidden) in [(Activation::Tanh, vec![3, 4, 2]), (Activation::Relu, vec![5, 3]), (Activation::Tanh, vec![])] {
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let spec = MlpSpec::new(4, 3, hidden, activation).unwrap();
            let params: Vec<f64> = (0..spec.param_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let obs = [0.4, -0.7, 1.1, 0.2];
            let n = params.len();
            let hess = log_prob_hessian(&spec, &params, &obs, 1).unwrap();
            let mut e = vec![0.0; n];
            for j in 0..n {
                e[j] = 1.0;
                let col = log_prob_hvp(&spec, &params, &obs, 1, &e).unwrap();
                e[j] = 0.0;
                for i in 0..n {
                    assert!((hess[(i, j)] - col[i]).abs() <= 1e-12, "{activation:?} ({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn unsymmetrized_hessian_is_symmetric_to_rounding() {
        let (spec, params, obs) = random_case(11);
        let point = CurvaturePoint::new(&spec, &params, &obs, 0).unwrap();
        let n = params.len();
        let mut hm = DenseMatrix::zeros(n, n);
        point.add_hessian(1.0, &mut hm);
        assert!(hm.max_asymmetry() <= 1e-12);
    }

    #[test]
    fn linear_softmax_closed_form_hessian() {
        // Logits z = W x + b; H = -(diag p - p pᵀ) ⊗ x̃ x̃ᵀ on the weight block, with the
        // bias block acting as an extra constant input.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (d, k) = (3, 4);
        let spec = MlpSpec::new(d, k, vec![], Activation::Tanh).unwrap();
        let params = spec.init(&mut rng);
        let obs = [0.3, -1.2, 0.8];
        let p = softmax(&mlp_forward(&spec, &params, &obs).unwrap());
        let hess = log_prob_hessian(&spec, &params, &obs, 2).unwrap();
        let coord = |r: usize, c: Option<usize>| match c {
            Some(c) => r * d + c,
            None => d * k + r,
        };
        let feat = |c: Option<usize>| c.map_or(1.0, |c| obs[c]);
        let inputs: Vec<Option<usize>> = (0..d).map(Some).chain(std::iter::once(None)).collect();
        for r1 in 0..k {
            for r2 in 0..k {
                let f = if r1 == r2 { p[r1] - p[r1] * p[r2] } else { -p[r1] * p[r2] };
                for &c1 in &inputs {
                    for &c2 in &inputs {
                        let want = -f * feat(c1) * feat(c2);
                        let got = hess[(coord(r1, c1), coord(r2, c2))];
                        assert!((got - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn init_respects_bounds_and_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = MlpSpec::new(4, 3, vec![16, 8], Activation::Relu).unwrap();
        assert_eq!(spec.param_count(), 5 * 16 + 17 * 8 + 9 * 3);
        let p = spec.init(&mut rng);
        let layers = spec.layers();
        for layer in layers {
            let s = 1.0 / (layer.fan_in as f64).sqrt();
            assert!(p[layer.w_off..layer.b_off].iter().all(|w| w.abs() < s));
            assert!(p[layer.b_off..layer.b_off + layer.fan_out].iter().all(|b| *b == 0.0));
        }
    }

    #[test]
    fn forward_is_bit_deterministic() {
        let (spec, params, obs) = random_case(2);
        let a = mlp_forward(&spec, &params, &obs).unwrap();
        let b = mlp_forward(&spec, &params, &obs).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
