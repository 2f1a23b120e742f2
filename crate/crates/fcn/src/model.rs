use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use lvo_core::rng::stream;

use crate::config::FcnConfig;
use crate::ops::{
    conv_backward_input, conv_backward_params, conv_forward, maxpool2, maxpool2_backward, relu, relu_backward,
    upsample2, upsample2_backward, ConvShape,
};
use crate::FcnError;

/// Probabilities are clamped to `[BCE_EPS, 1 − BCE_EPS]` in [`bce`].
pub const BCE_EPS: f64 = 1e-7;

/// Mean binary cross-entropy of probabilities against a mask.
pub fn bce(probs: &[f64], mask: &[f64]) -> f64 {
    let n = probs.len().max(1) as f64;
    probs
        .iter()
        .zip(mask)
        .map(|(p, y)| {
            let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Bce,
    /// BCE plus `1 − soft Dice` (smoothing 1).
    #[default]
    BceDice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Conv {
    cin: usize,
    cout: usize,
    k: usize,
    weight: usize,
    bias: usize,
}

impl Conv {
    fn shape(&self, h: usize, w: usize) -> ConvShape {
        ConvShape { cin: self.cin, cout: self.cout, k: self.k, h, w }
    }
}

/// `(image, mask)` pairs, each `height·width` long.
pub type Batch<'a> = [(&'a [f64], &'a [f64])];

#[derive(Debug, Clone, PartialEq)]
pub struct FcnModel {
    config: FcnConfig,
    params: Vec<Param>,
    convs: Vec<Conv>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub probs: Vec<f64>,
    pub logits: Vec<f64>,
    /// Deepest post-ReLU encoder activation, channel-major.
    pub bottleneck: Vec<f64>,
}

enum Op {
    Input,
    Conv { x: usize, conv: usize },
    Relu { x: usize },
    Pool { x: usize, arg: Vec<u32> },
    Up { x: usize },
    Concat { a: usize, b: usize },
}

struct Node {
    c: usize,
    h: usize,
    w: usize,
    value: Vec<f64>,
    op: Op,
}

struct Tape<'m> {
    model: &'m FcnModel,
    nodes: Vec<Node>,
}

impl Tape<'_> {
    fn push(&mut self, c: usize, h: usize, w: usize, value: Vec<f64>, op: Op) -> usize {
        self.nodes.push(Node { c, h, w, value, op });
        self.nodes.len() - 1
    }

    fn conv(&mut self, x: usize, idx: usize) -> usize {
        let spec = self.model.convs[idx];
        let src = &self.nodes[x];
        let shape = spec.shape(src.h, src.w);
        let p = &self.model.params;
        let y = conv_forward(shape, &src.value, &p[spec.weight].data, &p[spec.bias].data);
        self.push(spec.cout, src.h, src.w, y, Op::Conv { x, conv: idx })
    }

    fn relu(&mut self, x: usize) -> usize {
        let n = &self.nodes[x];
        let (c, h, w, v) = (n.c, n.h, n.w, relu(&n.value));
        self.push(c, h, w, v, Op::Relu { x })
    }

    fn pool(&mut self, x: usize) -> usize {
        let n = &self.nodes[x];
        let (c, h, w) = (n.c, n.h, n.w);
        let (v, arg) = maxpool2(&n.value, c, h, w);
        self.push(c, h / 2, w / 2, v, Op::Pool { x, arg })
    }

    fn up(&mut self, x: usize) -> usize {
        let n = &self.nodes[x];
        let (c, h, w) = (n.c, n.h, n.w);
        let v = upsample2(&n.value, c, h, w);
        self.push(c, 2 * h, 2 * w, v, Op::Up { x })
    }

    fn concat(&mut self, a: usize, b: usize) -> usize {
        let (na, nb) = (&self.nodes[a], &self.nodes[b]);
        let (c, h, w) = (na.c + nb.c, na.h, na.w);
        let mut v = na.value.clone();
        v.extend_from_slice(&nb.value);
        self.push(c, h, w, v, Op::Concat { a, b })
    }

    /// Reverse pass from `d_out` at the last node; returns one gradient per
    /// parameter.
    fn backward(self, d_out: Vec<f64>) -> Vec<Vec<f64>> {
        let model = self.model;
        let mut grads: Vec<Vec<f64>> = model.params.iter().map(|p| vec![0.0; p.data.len()]).collect();
        let mut g: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        let last = self.nodes.len() - 1;
        g[last] = Some(d_out);
        let add = |g: &mut Vec<Option<Vec<f64>>>, i: usize, d: Vec<f64>| match &mut g[i] {
            Some(acc) => acc.iter_mut().zip(&d).for_each(|(a, b)| *a += b),
            slot @ None => *slot = Some(d),
        };
        for i in (0..self.nodes.len()).rev() {
            let Some(dy) = g[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Relu { x } => add(&mut g, *x, relu_backward(&node.value, &dy)),
                Op::Pool { x, arg } => add(&mut g, *x, maxpool2_backward(arg, &dy, self.nodes[*x].value.len())),
                Op::Up { x } => {
                    let s = &self.nodes[*x];
                    add(&mut g, *x, upsample2_backward(&dy, s.c, s.h, s.w));
                }
                Op::Concat { a, b } => {
                    let split = self.nodes[*a].value.len();
                    add(&mut g, *a, dy[..split].to_vec());
                    add(&mut g, *b, dy[split..].to_vec());
                }
                Op::Conv { x, conv } => {
                    let spec = model.convs[*conv];
                    let src = &self.nodes[*x];
                    let shape = spec.shape(src.h, src.w);
                    let (lo, hi) = grads.split_at_mut(spec.bias);
                    conv_backward_params(shape, &dy, &src.value, &mut lo[spec.weight], &mut hi[0]);
                    if !matches!(src.op, Op::Input) {
                        add(&mut g, *x, conv_backward_input(shape, &dy, &model.params[spec.weight].data));
                    }
                }
            }
        }
        grads
    }
}

impl FcnModel {
    /// He-normal weights (`sd = √(2 / fan_in)`), zero biases.
    pub fn init(config: FcnConfig, seed: u64) -> Result<Self, FcnError> {
        let mut m = Self::zeros(config)?;
        let mut rng = stream(seed, "fcn-init");
        for conv in m.convs.clone() {
            let fan_in = (conv.cin * conv.k * conv.k) as f64;
            let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive sd");
            for v in &mut m.params[conv.weight].data {
                *v = normal.sample(&mut rng);
            }
        }
        Ok(m)
    }

    /// Every weight and bias zero.
    pub fn zeros(config: FcnConfig) -> Result<Self, FcnError> {
        config.validate()?;
        let mut params = Vec::new();
        let mut convs = Vec::new();
        let mut add = |name: String, cin: usize, cout: usize, k: usize| {
            let weight = params.len();
            params.push(Param { name: format!("{name}.weight"), shape: vec![cout, cin, k, k], data: vec![0.0; cout * cin * k * k] });
            params.push(Param { name: format!("{name}.bias"), shape: vec![cout], data: vec![0.0; cout] });
            convs.push(Conv { cin, cout, k, weight, bias: weight + 1 });
        };
        let d = config.depth;
        let mut cin = config.in_channels;
        for i in 0..=d {
            let c = config.channels(i);
            let stage = if i == d { "mid".to_string() } else { format!("enc{i}") };
            for j in 0..config.convs_per_block {
                add(format!("{stage}.conv{j}"), cin, c, 3);
                cin = c;
            }
        }
        for i in (0..d).rev() {
            let c = config.channels(i);
            add(format!("dec{i}.up"), config.channels(i + 1), c, 3);
            let mut cin = if config.skip_connections { 2 * c } else { c };
            for j in 0..config.convs_per_block {
                add(format!("dec{i}.conv{j}"), cin, c, 3);
                cin = c;
            }
        }
        add("head".into(), config.base_channels, 1, 1);
        Ok(Self { config, params, convs })
    }

    pub fn config(&self) -> &FcnConfig {
        &self.config
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    /// The same weights behind a different input size. Parameter shapes do
    /// not depend on the spatial size, so a model trained on small patches
    /// runs unchanged on full crops.
    pub fn with_input_size(&self, height: usize, width: usize) -> Result<Self, FcnError> {
        let config = FcnConfig { height, width, ..self.config.clone() };
        config.validate()?;
        Ok(Self { config, params: self.params.clone(), convs: self.convs.clone() })
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub(crate) fn from_parts(config: FcnConfig, params: Vec<Param>) -> Result<Self, FcnError> {
        let mut m = Self::zeros(config)?;
        if params.len() != m.params.len() {
            return Err(FcnError::Format(format!("{} parameter tensors, expected {}", params.len(), m.params.len())));
        }
        for (slot, p) in m.params.iter_mut().zip(params) {
            if p.name != slot.name || p.shape != slot.shape || p.data.len() != slot.data.len() {
                return Err(FcnError::Format(format!("parameter {:?} does not match {:?}", p.name, slot.name)));
            }
            if p.data.iter().any(|v| !v.is_finite()) {
                return Err(FcnError::Format(format!("parameter {:?} holds a non-finite value", p.name)));
            }
            slot.data = p.data;
        }
        Ok(m)
    }

    fn check_input(&self, image: &[f64]) -> Result<(), FcnError> {
        let expected = self.config.input_len();
        if image.len() != expected {
            return Err(FcnError::Shape { expected, got: image.len() });
        }
        Ok(())
    }

    /// Builds the tape; stops after the bottleneck when `full` is false.
    /// Returns the tape and the bottleneck node index.
    fn run<'m>(&'m self, image: &[f64], full: bool) -> (Tape<'m>, usize) {
        let cfg = &self.config;
        let mut t = Tape { model: self, nodes: Vec::new() };
        let mut x = t.push(cfg.in_channels, cfg.height, cfg.width, image.to_vec(), Op::Input);
        let mut layer = 0;
        let mut skips = Vec::with_capacity(cfg.depth);
        for i in 0..=cfg.depth {
            for _ in 0..cfg.convs_per_block {
                x = t.conv(x, layer);
                x = t.relu(x);
                layer += 1;
            }
            if i < cfg.depth {
                skips.push(x);
                x = t.pool(x);
            }
        }
        let bottleneck = x;
        if !full {
            return (t, bottleneck);
        }
        for i in (0..cfg.depth).rev() {
            x = t.up(x);
            x = t.conv(x, layer);
            x = t.relu(x);
            layer += 1;
            if cfg.skip_connections {
                x = t.concat(x, skips[i]);
            }
            for _ in 0..cfg.convs_per_block {
                x = t.conv(x, layer);
                x = t.relu(x);
                layer += 1;
            }
        }
        t.conv(x, layer);
        (t, bottleneck)
    }

    pub fn forward(&self, image: &[f64]) -> Result<Forward, FcnError> {
        self.check_input(image)?;
        let (t, b) = self.run(image, true);
        let logits = t.nodes.last().expect("nonempty tape").value.clone();
        let probs = logits.iter().map(|z| sigmoid(*z)).collect();
        Ok(Forward { probs, logits, bottleneck: t.nodes[b].value.clone() })
    }

    /// Bottleneck vector only; runs the encoder alone.
    pub fn extract_features(&self, image: &[f64]) -> Result<Vec<f64>, FcnError> {
        self.check_input(image)?;
        let (mut t, b) = self.run(image, false);
        Ok(std::mem::take(&mut t.nodes[b].value))
    }

    fn sample_loss_grad(&self, image: &[f64], mask: &[f64], kind: LossKind) -> (f64, Vec<Vec<f64>>) {
        let (t, _) = self.run(image, true);
        let z = &t.nodes.last().expect("nonempty tape").value;
        let n = z.len() as f64;
        let mut loss = 0.0;
        let mut dz = Vec::with_capacity(z.len());
        let p: Vec<f64> = z.iter().map(|v| sigmoid(*v)).collect();
        for ((zi, pi), yi) in z.iter().zip(&p).zip(mask) {
            loss += zi.max(0.0) - zi * yi + (-zi.abs()).exp().ln_1p();
            dz.push((pi - yi) / n);
        }
        loss /= n;
        if kind == LossKind::BceDice {
            let inter: f64 = p.iter().zip(mask).map(|(a, b)| a * b).sum();
            let num = 2.0 * inter + 1.0;
            let den = p.iter().sum::<f64>() + mask.iter().sum::<f64>() + 1.0;
            loss += 1.0 - num / den;
            for ((d, pi), yi) in dz.iter_mut().zip(&p).zip(mask) {
                let dp = -(2.0 * yi * den - num) / (den * den);
                *d += dp * pi * (1.0 - pi);
            }
        }
        (loss, t.backward(dz))
    }

    /// Mean loss over the batch and its gradient for every parameter.
    /// Per-sample work may run in parallel; results are summed in batch
    /// order.
    pub fn loss_and_grad(&self, batch: &Batch, kind: LossKind) -> Result<(f64, Vec<Vec<f64>>), FcnError> {
        if batch.is_empty() {
            return Err(FcnError::EmptyBatch);
        }
        for (img, mask) in batch {
            self.check_input(img)?;
            if mask.len() != self.config.pixels() {
                return Err(FcnError::Shape { expected: self.config.pixels(), got: mask.len() });
            }
            if mask.iter().any(|v| *v != 0.0 && *v != 1.0) {
                return Err(FcnError::NonBinaryMask);
            }
        }
        let parts: Vec<(f64, Vec<Vec<f64>>)> =
            batch.par_iter().map(|(img, mask)| self.sample_loss_grad(img, mask, kind)).collect();
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        let mut grads: Vec<Vec<f64>> = self.params.iter().map(|p| vec![0.0; p.data.len()]).collect();
        for (l, g) in parts {
            total += l;
            for (acc, gi) in grads.iter_mut().zip(g) {
                acc.iter_mut().zip(gi).for_each(|(a, b)| *a += b);
            }
        }
        grads.iter_mut().flatten().for_each(|v| *v *= scale);
        Ok((total * scale, grads))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
