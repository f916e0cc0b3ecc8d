//! Windowed feedforward BIO tagger with per-sentence loss and gradients.
//!
//! Each token is classified from the embeddings of the tokens in a context
//! window of radius `window` around it: embed -> affine -> tanh -> affine ->
//! softmax. The model is deliberately small so that per-example gradients are
//! cheap and exact; anything implementing the same forward / gradient /
//! parameter-layout surface (e.g. a recurrent tagger) can replace it.
//!
//! Gradient conventions: the loss of a sentence is the mean per-token
//! cross-entropy, gradients of different sentences are fully independent, and
//! all accumulation happens in a fixed left-to-right order so training is
//! bitwise reproducible for a fixed seed.

mod metrics;

pub use metrics::{ClassCounts, MetricReport, MetricTally};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{LayoutId, ModelShape, ParameterVector, NUM_CLASSES};

/// Reserved vocabulary index used to pad context windows at sentence edges.
pub const PAD_INDEX: usize = 0;
/// Reserved vocabulary index for tokens outside the closed vocabulary.
pub const UNK_INDEX: usize = 1;

/// BIO label of one token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BioTag {
    B,
    I,
    O,
}

impl BioTag {
    /// Class index used for logits and metric tallies.
    pub fn class_index(self) -> usize {
        match self {
            BioTag::B => 0,
            BioTag::I => 1,
            BioTag::O => 2,
        }
    }

    pub fn from_class_index(index: usize) -> Option<BioTag> {
        match index {
            0 => Some(BioTag::B),
            1 => Some(BioTag::I),
            2 => Some(BioTag::O),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BioTag::B => "B",
            BioTag::I => "I",
            BioTag::O => "O",
        }
    }
}

impl std::str::FromStr for BioTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" => Ok(BioTag::B),
            "I" => Ok(BioTag::I),
            "O" => Ok(BioTag::O),
            other => Err(Error::invalid_input(format!("unknown BIO label {other:?}"))),
        }
    }
}

/// One labeled sentence, already encoded against a closed vocabulary.
///
/// Construction enforces well-formed BIO: an `I` never starts a sentence and
/// never follows an `O`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    tokens: Vec<usize>,
    labels: Vec<BioTag>,
}

impl Sentence {
    pub fn new(tokens: Vec<usize>, labels: Vec<BioTag>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::invalid_input("sentence must be non-empty"));
        }
        if tokens.len() != labels.len() {
            return Err(Error::invalid_input(format!(
                "token/label length mismatch: {} vs {}",
                tokens.len(),
                labels.len()
            )));
        }
        let mut prev = BioTag::O;
        for (pos, &label) in labels.iter().enumerate() {
            if label == BioTag::I && (pos == 0 || prev == BioTag::O) {
                return Err(Error::invalid_input(format!(
                    "malformed BIO: I at position {pos} does not continue an entity"
                )));
            }
            prev = label;
        }
        Ok(Sentence { tokens, labels })
    }

    pub fn tokens(&self) -> &[usize] {
        &self.tokens
    }

    pub fn labels(&self) -> &[BioTag] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// The trainable tagger: a fixed shape plus one flat parameter buffer in the
/// layout documented in [`crate::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    shape: ModelShape,
    values: Vec<f64>,
}

impl TaggerModel {
    /// All-zero parameters; mostly useful in tests.
    pub fn zeros(shape: ModelShape) -> Self {
        TaggerModel { values: vec![0.0; shape.param_count()], shape }
    }

    /// Seeded random initialization.
    ///
    /// Embeddings are uniform in [-0.1, 0.1]; the two affine maps use
    /// Xavier-uniform bounds; biases start at zero. The draw order is part of
    /// the reproducibility contract.
    pub fn init(shape: ModelShape, rng: &mut ChaCha8Rng) -> Self {
        let mut values = vec![0.0; shape.param_count()];
        let emb_end = shape.hidden_weights_offset();
        for v in &mut values[..emb_end] {
            *v = rng.random_range(-0.1..0.1);
        }
        let input_dim = shape.input_dim();
        let w1_bound = (6.0 / (input_dim + shape.hidden_dim) as f64).sqrt();
        let w1_end = shape.hidden_bias_offset();
        for v in &mut values[emb_end..w1_end] {
            *v = rng.random_range(-w1_bound..w1_bound);
        }
        let w2_bound = (6.0 / (shape.hidden_dim + NUM_CLASSES) as f64).sqrt();
        let (w2_start, w2_end) = (shape.output_weights_offset(), shape.output_bias_offset());
        for v in &mut values[w2_start..w2_end] {
            *v = rng.random_range(-w2_bound..w2_bound);
        }
        TaggerModel { shape, values }
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn layout_id(&self) -> LayoutId {
        self.shape.layout_id()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Flatten into a [`ParameterVector`] (a copy).
    pub fn to_params(&self) -> ParameterVector {
        ParameterVector::new(self.shape.layout_id(), self.values.clone())
            .expect("model buffer always matches its own layout")
    }

    /// Rebuild a model from a flat vector; the inverse of [`Self::to_params`].
    pub fn from_params(params: &ParameterVector) -> TaggerModel {
        TaggerModel {
            shape: params.layout().shape(),
            values: params.values().to_vec(),
        }
    }

    pub fn digest(&self) -> String {
        self.to_params().digest()
    }

    fn check_tokens(&self, sentence: &Sentence) -> Result<()> {
        for &t in sentence.tokens() {
            if t >= self.shape.vocab_size {
                return Err(Error::invalid_input(format!(
                    "token index {t} out of range for vocab size {}",
                    self.shape.vocab_size
                )));
            }
        }
        Ok(())
    }

    /// Concatenated window embeddings for the token at `pos`.
    fn gather_input(&self, tokens: &[usize], pos: usize, x: &mut [f64]) {
        let shape = self.shape;
        let w = shape.window as isize;
        for (slot, offset) in (-w..=w).enumerate() {
            let j = pos as isize + offset;
            let token = if j < 0 || j >= tokens.len() as isize {
                PAD_INDEX
            } else {
                tokens[j as usize]
            };
            let row = shape.embedding_offset(token);
            let dst = slot * shape.embed_dim;
            x[dst..dst + shape.embed_dim]
                .copy_from_slice(&self.values[row..row + shape.embed_dim]);
        }
    }

    /// Hidden activation and class probabilities for one token position.
    fn forward_token(&self, x: &[f64], hidden: &mut [f64], probs: &mut [f64; NUM_CLASSES]) {
        let shape = self.shape;
        let w1 = &self.values[shape.hidden_weights_offset()..shape.hidden_bias_offset()];
        let b1 = &self.values[shape.hidden_bias_offset()..shape.output_weights_offset()];
        let w2 = &self.values[shape.output_weights_offset()..shape.output_bias_offset()];
        let b2 = &self.values[shape.output_bias_offset()..];

        let h_dim = shape.hidden_dim;
        hidden.copy_from_slice(b1);
        for (d, &xv) in x.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let row = &w1[d * h_dim..(d + 1) * h_dim];
            for (h, &wv) in hidden.iter_mut().zip(row) {
                *h += xv * wv;
            }
        }
        for h in hidden.iter_mut() {
            *h = h.tanh();
        }

        let mut logits = [b2[0], b2[1], b2[2]];
        for (i, &hv) in hidden.iter().enumerate() {
            let row = &w2[i * NUM_CLASSES..(i + 1) * NUM_CLASSES];
            for (c, &wv) in row.iter().enumerate() {
                logits[c] += hv * wv;
            }
        }
        softmax3(&logits, probs);
    }
}

/// Numerically stable softmax over three logits.
fn softmax3(logits: &[f64; NUM_CLASSES], out: &mut [f64; NUM_CLASSES]) {
    let max = logits[0].max(logits[1]).max(logits[2]);
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Per-token class probabilities over {B, I, O} for every token of `sentence`.
pub fn forward(model: &TaggerModel, sentence: &Sentence) -> Result<Vec<[f64; NUM_CLASSES]>> {
    model.check_tokens(sentence)?;
    let shape = model.shape();
    let mut x = vec![0.0; shape.input_dim()];
    let mut hidden = vec![0.0; shape.hidden_dim];
    let mut out = Vec::with_capacity(sentence.len());
    for pos in 0..sentence.len() {
        model.gather_input(sentence.tokens(), pos, &mut x);
        let mut probs = [0.0; NUM_CLASSES];
        model.forward_token(&x, &mut hidden, &mut probs);
        out.push(probs);
    }
    Ok(out)
}

/// Mean per-token cross-entropy of `sentence` and its exact gradient in the
/// model's parameter layout.
pub fn loss_and_gradient(
    model: &TaggerModel,
    sentence: &Sentence,
) -> Result<(f64, ParameterVector)> {
    model.check_tokens(sentence)?;
    let shape = model.shape();
    let mut grad = ParameterVector::zeros(shape.layout_id());
    let loss = accumulate_gradient(model, sentence, grad.values_mut());
    Ok((loss, grad))
}

/// Add the gradient of `sentence` into `grad_values`; returns the loss.
fn accumulate_gradient(model: &TaggerModel, sentence: &Sentence, grad_values: &mut [f64]) -> f64 {
    let shape = model.shape();
    let h_dim = shape.hidden_dim;
    let inv_len = 1.0 / sentence.len() as f64;

    let w1 = &model.values[shape.hidden_weights_offset()..shape.hidden_bias_offset()];
    let w2 = &model.values[shape.output_weights_offset()..shape.output_bias_offset()];

    let (g_rest, g_b2) = grad_values.split_at_mut(shape.output_bias_offset());
    let (g_rest, g_w2) = g_rest.split_at_mut(shape.output_weights_offset());
    let (g_rest, g_b1) = g_rest.split_at_mut(shape.hidden_bias_offset());
    let (g_emb, g_w1) = g_rest.split_at_mut(shape.hidden_weights_offset());

    let mut x = vec![0.0; shape.input_dim()];
    let mut hidden = vec![0.0; h_dim];
    let mut d_hidden = vec![0.0; h_dim];
    let mut loss = 0.0;

    for pos in 0..sentence.len() {
        model.gather_input(sentence.tokens(), pos, &mut x);
        let mut probs = [0.0; NUM_CLASSES];
        model.forward_token(&x, &mut hidden, &mut probs);

        let gold = sentence.labels()[pos].class_index();
        loss += -(probs[gold].max(f64::MIN_POSITIVE)).ln() * inv_len;

        // d loss / d logits, already scaled by 1/len.
        let mut d_logits = probs;
        d_logits[gold] -= 1.0;
        for d in d_logits.iter_mut() {
            *d *= inv_len;
        }

        for c in 0..NUM_CLASSES {
            g_b2[c] += d_logits[c];
        }
        d_hidden.iter_mut().for_each(|v| *v = 0.0);
        for (i, &hv) in hidden.iter().enumerate() {
            let w_row = &w2[i * NUM_CLASSES..(i + 1) * NUM_CLASSES];
            let g_row = &mut g_w2[i * NUM_CLASSES..(i + 1) * NUM_CLASSES];
            let mut acc = 0.0;
            for c in 0..NUM_CLASSES {
                g_row[c] += hv * d_logits[c];
                acc += w_row[c] * d_logits[c];
            }
            // tanh'(a) = 1 - tanh(a)^2
            d_hidden[i] = acc * (1.0 - hv * hv);
        }

        for h in 0..h_dim {
            g_b1[h] += d_hidden[h];
        }
        let w = shape.window as isize;
        for (slot, offset) in (-w..=w).enumerate() {
            let j = pos as isize + offset;
            let token = if j < 0 || j >= sentence.len() as isize {
                PAD_INDEX
            } else {
                sentence.tokens()[j as usize]
            };
            let emb_row = shape.embedding_offset(token);
            for e in 0..shape.embed_dim {
                let d = slot * shape.embed_dim + e;
                let xv = x[d];
                let w1_row = &w1[d * h_dim..(d + 1) * h_dim];
                let g_row = &mut g_w1[d * h_dim..(d + 1) * h_dim];
                let mut d_x = 0.0;
                for h in 0..h_dim {
                    g_row[h] += xv * d_hidden[h];
                    d_x += w1_row[h] * d_hidden[h];
                }
                g_emb[emb_row + e] += d_x;
            }
        }
    }
    loss
}

/// One plain SGD step on the unweighted mean gradient of `batch`.
///
/// Gradients are summed left to right and divided by the batch length, so the
/// update is bitwise deterministic for a fixed batch order. Returns the mean
/// sentence loss before the step.
pub fn sgd_step(model: &mut TaggerModel, batch: &[&Sentence], learning_rate: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid_input("sgd step needs a non-empty batch"));
    }
    // Sum whole per-sentence gradients rather than streaming token
    // contributions into the total: the noisy-step path is defined over
    // per-sentence gradients and the two must agree bit for bit at sigma 0.
    let mut summed = ParameterVector::zeros(model.layout_id());
    let mut scratch = ParameterVector::zeros(model.layout_id());
    let mut loss_sum = 0.0;
    for sentence in batch {
        model.check_tokens(sentence)?;
        scratch.values_mut().fill(0.0);
        loss_sum += accumulate_gradient(model, sentence, scratch.values_mut());
        summed.add_assign(&scratch)?;
    }
    let divisor = batch.len() as f64;
    if learning_rate != 0.0 {
        for (p, s) in model.values.iter_mut().zip(summed.values()) {
            *p -= learning_rate * (s / divisor);
        }
    }
    Ok(loss_sum / divisor)
}

/// One epoch of mini-batch SGD over a seeded shuffle of `sentences`.
///
/// Performs `ceil(N / batch_size)` steps; the trailing batch may be short and
/// is averaged over its own length.
pub fn train_epoch(
    model: &mut TaggerModel,
    sentences: &[Sentence],
    learning_rate: f64,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    if sentences.is_empty() {
        return Err(Error::invalid_input("cannot train on an empty dataset"));
    }
    if batch_size == 0 {
        return Err(Error::config("batch_size must be >= 1"));
    }
    // A zero rate is a valid no-op (useful for counterfactual runs); only
    // negative rates are rejected.
    if learning_rate < 0.0 {
        return Err(Error::config("learning_rate must be >= 0"));
    }
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    use rand::seq::SliceRandom;
    order.shuffle(rng);
    for chunk in order.chunks(batch_size) {
        let batch: Vec<&Sentence> = chunk.iter().map(|&i| &sentences[i]).collect();
        sgd_step(model, &batch, learning_rate)?;
    }
    Ok(())
}

/// Mean cross-entropy of `model` over `sentences` without updating anything.
pub fn mean_loss(model: &TaggerModel, sentences: &[Sentence]) -> Result<f64> {
    if sentences.is_empty() {
        return Err(Error::invalid_input("mean_loss needs a non-empty set"));
    }
    let mut total = 0.0;
    for sentence in sentences {
        let (loss, _) = loss_and_gradient(model, sentence)?;
        total += loss;
    }
    Ok(total / sentences.len() as f64)
}

/// Predicted tag for one probability triple.
///
/// Ties break toward O, then B, then I, so an untrained model degrades to the
/// majority class deterministically.
pub fn predict_tag(probs: &[f64; NUM_CLASSES]) -> BioTag {
    let mut best = BioTag::O;
    let mut best_p = probs[BioTag::O.class_index()];
    for tag in [BioTag::B, BioTag::I] {
        let p = probs[tag.class_index()];
        if p > best_p {
            best = tag;
            best_p = p;
        }
    }
    best
}

/// Token-level 1-vs-all precision/recall/F1 for B and I over `sentences`.
pub fn evaluate(model: &TaggerModel, sentences: &[Sentence]) -> Result<MetricReport> {
    if sentences.is_empty() {
        return Err(Error::invalid_input("evaluation set must be non-empty"));
    }
    let mut tally = MetricTally::new();
    for sentence in sentences {
        let probs = forward(model, sentence)?;
        for (pos, gold) in sentence.labels().iter().enumerate() {
            tally.record(*gold, predict_tag(&probs[pos]));
        }
    }
    Ok(tally.report())
}
