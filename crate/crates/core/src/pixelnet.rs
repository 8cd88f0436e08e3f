//! Per-pixel classifier: a stack of fully connected layers (equivalent to
//! 1x1 convolutions) with ReLU, optional identity skips and a softmax head,
//! trained by mini-batch gradient descent with momentum.
//!
//! Inputs are standardized per feature with the training mean and standard
//! deviation, which are stored in the model.
//!
//! # `PXNT` model file
//!
//! Little-endian: magic `b"PXNT"`, `u16` version (1), `u8` pixel mode code,
//! `u32` input width, `u32` class count, class ids as `u16`, input means and
//! scales as `f64`, `u32` layer count, then per layer `u32` inputs, `u32`
//! outputs, `u8` skip flag, row-major `outputs x inputs` weights and
//! `outputs` biases as `f64`.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;

use crate::cube::{extract_pixel_dataset, LabeledCube, PixelDataset, PixelMode, SpectralCube};
use crate::dataio::{ClassId, LabelMap};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"PXNT";
pub const MODEL_VERSION: u16 = 1;

const PREDICT_BLOCK_ROWS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Normal with standard deviation `sqrt(2 / fan_in)`, zero biases.
    #[default]
    He,
    /// All parameters zero.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    /// Adds the layer input to its output. Needs `inputs == outputs`.
    pub skip: bool,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize, skip: bool) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
            skip,
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// `out = a W^T + b` for `n` rows.
    fn affine(&self, a: &[f64], out: &mut Vec<f64>) {
        let n = a.len() / self.inputs;
        out.clear();
        out.resize(n * self.outputs, 0.0);
        for (o, x) in out.chunks_mut(self.outputs).zip(a.chunks(self.inputs)) {
            for (j, oj) in o.iter_mut().enumerate() {
                let w = &self.weights[j * self.inputs..(j + 1) * self.inputs];
                *oj = self.biases[j] + w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PixelClassifierModel {
    pub mode: PixelMode,
    /// Output index `k` predicts `classes[k]`. Sorted ascending.
    pub classes: Vec<ClassId>,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    /// Hidden layers followed by the output layer.
    pub layers: Vec<Dense>,
}

impl PixelClassifierModel {
    /// A model with identity standardization.
    pub fn new<R: Rng>(
        mode: PixelMode,
        hidden: &[usize],
        skips: &[bool],
        classes: Vec<ClassId>,
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        if hidden.len() != skips.len() {
            return Err(Error::invalid(format!(
                "{} hidden widths but {} skip flags",
                hidden.len(),
                skips.len()
            )));
        }
        if classes.len() < 2 {
            return Err(Error::invalid("a classifier needs at least 2 classes"));
        }
        if !classes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("class ids must be strictly increasing"));
        }
        let input = mode.feature_width();
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(classes.len());
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for (l, w) in widths.windows(2).enumerate() {
            let skip = skips.get(l).copied().unwrap_or(false);
            if w[0] == 0 || w[1] == 0 {
                return Err(Error::invalid("layer widths must be positive"));
            }
            if skip && w[0] != w[1] {
                return Err(Error::invalid(format!(
                    "skip on layer {l} needs equal widths, got {} -> {}",
                    w[0], w[1]
                )));
            }
            let mut d = Dense::zeros(w[0], w[1], skip);
            if init == Init::He {
                let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt())
                    .map_err(|e| Error::invalid(e.to_string()))?;
                for v in &mut d.weights {
                    *v = rng.sample(normal);
                }
            }
            layers.push(d);
        }
        Ok(Self {
            mode,
            classes,
            input_mean: vec![0.0; input],
            input_scale: vec![1.0; input],
            layers,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_mean.len()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    /// All weights then biases, layer by layer.
    pub fn parameters(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            v.extend_from_slice(&l.weights);
            v.extend_from_slice(&l.biases);
        }
        v
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, r) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (b, r) = r.split_at(l.biases.len());
            l.biases.copy_from_slice(b);
            rest = r;
        }
        Ok(())
    }

    fn check_width(&self, features: &[f64]) -> Result<usize> {
        let d = self.input_dim();
        if features.is_empty() || !features.len().is_multiple_of(d) {
            return Err(Error::invalid(format!(
                "feature buffer of length {} is not a non-empty multiple of the input width {d}",
                features.len()
            )));
        }
        Ok(features.len() / d)
    }

    fn standardize(&self, features: &[f64]) -> Vec<f64> {
        let d = self.input_dim();
        let mut out = features.to_vec();
        for row in out.chunks_mut(d) {
            for ((x, m), s) in row.iter_mut().zip(&self.input_mean).zip(&self.input_scale) {
                *x = (*x - m) / s;
            }
        }
        out
    }

    fn class_index(&self, class: ClassId) -> Option<usize> {
        self.classes.binary_search(&class).ok()
    }
}

/// Per-layer activations kept for the backward pass.
struct Tape {
    /// Input of each layer; one extra entry holds the logits.
    acts: Vec<Vec<f64>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Vec<f64>>,
}

fn forward_tape(model: &PixelClassifierModel, x: Vec<f64>) -> Tape {
    let last = model.layers.len() - 1;
    let mut acts = vec![x];
    let mut pre = Vec::with_capacity(last);
    for (l, layer) in model.layers.iter().enumerate() {
        let mut z = Vec::new();
        layer.affine(&acts[l], &mut z);
        if l == last {
            acts.push(z);
            break;
        }
        let mut h: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
        if layer.skip {
            for (h, a) in h.iter_mut().zip(&acts[l]) {
                *h += a;
            }
        }
        pre.push(z);
        acts.push(h);
    }
    Tape { acts, pre }
}

fn softmax_rows(logits: &mut [f64], k: usize) {
    for row in logits.chunks_mut(k) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
}

/// Unnormalized class scores, `n x class_count`.
pub fn logits(model: &PixelClassifierModel, features: &[f64]) -> Result<Vec<f64>> {
    model.check_width(features)?;
    let tape = forward_tape(model, model.standardize(features));
    Ok(tape.acts.into_iter().next_back().unwrap())
}

/// Class probabilities, `n x class_count`, each row summing to 1.
pub fn forward(model: &PixelClassifierModel, features: &[f64]) -> Result<Vec<f64>> {
    let mut z = logits(model, features)?;
    softmax_rows(&mut z, model.class_count());
    Ok(z)
}

/// Gradient with the layout of [`PixelClassifierModel::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradient {
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for (w, b) in &self.layers {
            v.extend_from_slice(w);
            v.extend_from_slice(b);
        }
        v
    }
}

fn loss_and_gradient_std(
    model: &PixelClassifierModel,
    x: Vec<f64>,
    targets: &[usize],
) -> (f64, Gradient, usize) {
    let n = targets.len();
    let k = model.class_count();
    let tape = forward_tape(model, x);
    let logits = tape.acts.last().unwrap();

    let mut loss = 0.0;
    let mut correct = 0;
    let mut delta = vec![0.0; n * k];
    for (r, (&t, z)) in targets.iter().zip(logits.chunks(k)).enumerate() {
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - z[t];
        if argmax(z) == t {
            correct += 1;
        }
        for (j, zj) in z.iter().enumerate() {
            let p = (zj - lse).exp();
            let onehot = if j == t { 1.0 } else { 0.0 };
            delta[r * k + j] = (p - onehot) / n as f64;
        }
    }

    let mut grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(model.layers.len());
    for (l, layer) in model.layers.iter().enumerate().rev() {
        if l < model.layers.len() - 1 {
            // delta holds d loss / d output of layer l; pass it through ReLU
            let z = &tape.pre[l];
            let (mut dz, skip_part) = (delta.clone(), delta);
            for (d, &zv) in dz.iter_mut().zip(z) {
                if zv <= 0.0 {
                    *d = 0.0;
                }
            }
            let (gw, gb, da) = affine_backward(layer, &tape.acts[l], &dz);
            grads.push((gw, gb));
            delta = da;
            if layer.skip {
                for (d, s) in delta.iter_mut().zip(&skip_part) {
                    *d += s;
                }
            }
        } else {
            let (gw, gb, da) = affine_backward(layer, &tape.acts[l], &delta);
            grads.push((gw, gb));
            delta = da;
        }
    }
    grads.reverse();
    (loss / n as f64, Gradient { layers: grads }, correct)
}

/// Returns weight gradient, bias gradient and the gradient w.r.t. the input.
fn affine_backward(layer: &Dense, a: &[f64], dz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (ni, no) = (layer.inputs, layer.outputs);
    let mut gw = vec![0.0; ni * no];
    let mut gb = vec![0.0; no];
    let mut da = vec![0.0; a.len()];
    for ((x, g), dx) in a.chunks(ni).zip(dz.chunks(no)).zip(da.chunks_mut(ni)) {
        for (j, &gj) in g.iter().enumerate() {
            if gj == 0.0 {
                continue;
            }
            gb[j] += gj;
            let w = &layer.weights[j * ni..(j + 1) * ni];
            let gwr = &mut gw[j * ni..(j + 1) * ni];
            for i in 0..ni {
                gwr[i] += gj * x[i];
                dx[i] += gj * w[i];
            }
        }
    }
    (gw, gb, da)
}

/// Mean cross-entropy of `features` against `targets` (output indices) and
/// its gradient.
pub fn loss_and_gradient(
    model: &PixelClassifierModel,
    features: &[f64],
    targets: &[usize],
) -> Result<(f64, Gradient)> {
    if targets.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let n = model.check_width(features)?;
    if n != targets.len() {
        return Err(Error::invalid(format!(
            "{n} feature rows but {} targets",
            targets.len()
        )));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= model.class_count()) {
        return Err(Error::invalid(format!(
            "target {t} outside 0..{}",
            model.class_count()
        )));
    }
    let (loss, g, _) = loss_and_gradient_std(model, model.standardize(features), targets);
    Ok((loss, g))
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub init: Init,
    pub hidden: Vec<usize>,
    pub skips: Vec<bool>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 64,
            epochs: 30,
            seed: 0,
            init: Init::He,
            hidden: vec![64, 64, 64],
            skips: vec![false, true, false],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::invalid("batch size and epochs must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Accuracy of the batches as seen before each update.
    pub running_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: PixelClassifierModel,
    pub history: Vec<EpochStats>,
}

/// Trains on every row of `dataset`. The class set is the sorted set of
/// labels it contains.
pub fn train(dataset: &PixelDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let mut classes: Vec<ClassId> = dataset.labels.clone();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid(format!(
            "training needs at least 2 classes, found {}",
            classes.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = PixelClassifierModel::new(
        dataset.mode,
        &cfg.hidden,
        &cfg.skips,
        classes,
        cfg.init,
        &mut rng,
    )?;
    let d = model.input_dim();
    if dataset.feature_width != d {
        return Err(Error::invalid(format!(
            "dataset rows have width {} but mode {} needs {d}",
            dataset.feature_width, dataset.mode
        )));
    }
    let n = dataset.len();
    let mut mean = vec![0.0; d];
    for row in dataset.features.chunks(d) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for row in dataset.features.chunks(d) {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    model.input_scale = var
        .iter()
        .map(|v| {
            let s = (v / n as f64).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    model.input_mean = mean;

    let x = model.standardize(&dataset.features);
    let targets: Vec<usize> = dataset
        .labels
        .iter()
        .map(|&c| model.class_index(c).unwrap())
        .collect();

    let mut velocity = vec![0.0; model.param_count()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut params = model.parameters();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let mut bx = Vec::with_capacity(idx.len() * d);
            let mut bt = Vec::with_capacity(idx.len());
            for &i in idx {
                bx.extend_from_slice(&x[i * d..(i + 1) * d]);
                bt.push(targets[i]);
            }
            let (loss, grad, hits) = loss_and_gradient_std(&model, bx, &bt);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch, loss });
            }
            loss_sum += loss * idx.len() as f64;
            correct += hits;
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(grad.flat()) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *p += *v;
            }
            model.set_parameters(&params)?;
        }
        let stats = EpochStats {
            epoch,
            mean_loss: loss_sum / n as f64,
            running_accuracy: correct as f64 / n as f64,
        };
        log::debug!(
            "epoch {epoch}: loss {:.6}, accuracy {:.4}",
            stats.mean_loss,
            stats.running_accuracy
        );
        history.push(stats);
    }
    Ok(TrainOutcome { model, history })
}

/// Most probable class per row, ties to the lowest class id.
///
/// Rows are processed in parallel blocks; each row's result does not depend
/// on the blocking.
pub fn predict_features(model: &PixelClassifierModel, features: &[f64]) -> Result<Vec<ClassId>> {
    model.check_width(features)?;
    let block = PREDICT_BLOCK_ROWS * model.input_dim();
    let parts: Vec<Vec<ClassId>> = features
        .par_chunks(block)
        .map(|chunk| {
            let tape = forward_tape(model, model.standardize(chunk));
            tape.acts
                .last()
                .unwrap()
                .chunks(model.class_count())
                .map(|row| model.classes[argmax(row)])
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

pub fn predict(model: &PixelClassifierModel, dataset: &PixelDataset) -> Result<Vec<ClassId>> {
    if dataset.mode != model.mode {
        return Err(Error::invalid(format!(
            "model expects {} features but dataset holds {}",
            model.mode, dataset.mode
        )));
    }
    if dataset.is_empty() {
        return Ok(Vec::new());
    }
    predict_features(model, &dataset.features)
}

/// Predicts every annotated pixel of one image.
pub fn predict_image(
    model: &PixelClassifierModel,
    image_id: &str,
    cube: &SpectralCube,
    labels: &LabelMap,
) -> Result<LabelMap> {
    let ds = extract_pixel_dataset(
        &[LabeledCube {
            image_id,
            cube,
            labels,
        }],
        model.mode,
    )?;
    let mut out = LabelMap::new(cube.height(), cube.width());
    for (&(_, pixel), class) in ds.origins.iter().zip(predict(model, &ds)?) {
        out.insert(pixel, class)?;
    }
    Ok(out)
}

pub fn encode_model(model: &PixelClassifierModel) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(MODEL_MAGIC);
    b.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    b.push(model.mode.code());
    b.extend_from_slice(&(model.input_dim() as u32).to_le_bytes());
    b.extend_from_slice(&(model.class_count() as u32).to_le_bytes());
    for c in &model.classes {
        b.extend_from_slice(&c.0.to_le_bytes());
    }
    for v in model.input_mean.iter().chain(&model.input_scale) {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b.extend_from_slice(&(model.layers.len() as u32).to_le_bytes());
    for l in &model.layers {
        b.extend_from_slice(&(l.inputs as u32).to_le_bytes());
        b.extend_from_slice(&(l.outputs as u32).to_le_bytes());
        b.push(u8::from(l.skip));
        for v in l.weights.iter().chain(&l.biases) {
            b.extend_from_slice(&v.to_le_bytes());
        }
    }
    b
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Corruption {
                offset: self.pos as u64,
                expected: (self.pos + n) as u64,
                actual: self.buf.len() as u64,
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::Format("size overflow".into()))?,
        )?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_model(buf: &[u8]) -> Result<PixelClassifierModel> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4)? != MODEL_MAGIC {
        return Err(Error::Format("not a PXNT model file".into()));
    }
    let version = c.u16()?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {version}"
        )));
    }
    let code = c.u8()?;
    let mode = PixelMode::from_code(code)
        .ok_or_else(|| Error::Format(format!("unknown pixel mode code {code}")))?;
    let input = c.u32()?;
    if input != mode.feature_width() {
        return Err(Error::Format(format!(
            "input width {input} does not match mode {mode}"
        )));
    }
    let k = c.u32()?;
    let classes = (0..k)
        .map(|_| c.u16().map(ClassId))
        .collect::<Result<Vec<_>>>()?;
    let input_mean = c.f64s(input)?;
    let input_scale = c.f64s(input)?;
    let n_layers = c.u32()?;
    let mut layers = Vec::new();
    let mut width = input;
    for l in 0..n_layers {
        let inputs = c.u32()?;
        let outputs = c.u32()?;
        let skip = c.u8()? != 0;
        if inputs != width || (skip && inputs != outputs) {
            return Err(Error::Format(format!(
                "layer {l} has inconsistent dimensions"
            )));
        }
        let weights = c.f64s(inputs * outputs)?;
        let biases = c.f64s(outputs)?;
        width = outputs;
        layers.push(Dense {
            inputs,
            outputs,
            weights,
            biases,
            skip,
        });
    }
    if layers.is_empty() || width != k {
        return Err(Error::Format(
            "output width does not match class count".into(),
        ));
    }
    if c.pos != buf.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after model",
            buf.len() - c.pos
        )));
    }
    let model = PixelClassifierModel {
        mode,
        classes,
        input_mean,
        input_scale,
        layers,
    };
    if !model.parameters().iter().all(|v| v.is_finite()) {
        return Err(Error::Format("model holds non-finite parameters".into()));
    }
    Ok(model)
}

pub fn write_model(path: &Path, model: &PixelClassifierModel) -> Result<()> {
    fs::write(path, encode_model(model))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_model(path: &Path) -> Result<PixelClassifierModel> {
    let bytes =
        fs::read(path).map_err(|e| Error::io(format!("reading model {}", path.display()), e))?;
    decode_model(&bytes)
}

pub fn history_csv(history: &[EpochStats]) -> String {
    let mut s = String::from("epoch,mean_loss,running_accuracy\n");
    for h in history {
        s.push_str(&format!(
            "{},{:e},{}\n",
            h.epoch, h.mean_loss, h.running_accuracy
        ));
    }
    s
}
