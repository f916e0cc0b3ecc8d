//! Flat parameter vectors with a fixed, documented layout.
//!
//! Every model in this crate stores its parameters as one flat `f64` slice so
//! that updates can be shipped, averaged, clipped and hashed without knowing
//! the model internals. The flattening order for the windowed feedforward
//! tagger is:
//!
//! 1. embedding table, row-major: `vocab_size x embed_dim`
//! 2. hidden weights, row-major: `(2*window+1)*embed_dim x hidden_dim`
//! 3. hidden bias: `hidden_dim`
//! 4. output weights, row-major: `hidden_dim x 3`
//! 5. output bias: `3`
//!
//! A [`LayoutId`] binds a vector to the shape that produced it; elementwise
//! operations refuse to mix layouts.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;

use crate::error::{Error, Result};

/// Number of output classes (B, I, O).
pub const NUM_CLASSES: usize = 3;

/// Dimensions of the windowed feedforward tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelShape {
    /// Closed vocabulary size, including the padding and unknown entries.
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Context window radius; each token sees `2*window+1` positions.
    pub window: usize,
}

impl ModelShape {
    pub fn new(vocab_size: usize, embed_dim: usize, hidden_dim: usize, window: usize) -> Result<Self> {
        if vocab_size == 0 || embed_dim == 0 || hidden_dim == 0 {
            return Err(Error::config("model dimensions must all be >= 1"));
        }
        Ok(ModelShape { vocab_size, embed_dim, hidden_dim, window })
    }

    /// Width of the concatenated window input.
    pub fn input_dim(&self) -> usize {
        (2 * self.window + 1) * self.embed_dim
    }

    /// Total number of parameters under the documented flattening order.
    pub fn param_count(&self) -> usize {
        self.vocab_size * self.embed_dim
            + self.input_dim() * self.hidden_dim
            + self.hidden_dim
            + self.hidden_dim * NUM_CLASSES
            + NUM_CLASSES
    }

    /// Offset of the embedding row for `token`.
    pub fn embedding_offset(&self, token: usize) -> usize {
        token * self.embed_dim
    }

    pub fn hidden_weights_offset(&self) -> usize {
        self.vocab_size * self.embed_dim
    }

    pub fn hidden_bias_offset(&self) -> usize {
        self.hidden_weights_offset() + self.input_dim() * self.hidden_dim
    }

    pub fn output_weights_offset(&self) -> usize {
        self.hidden_bias_offset() + self.hidden_dim
    }

    pub fn output_bias_offset(&self) -> usize {
        self.output_weights_offset() + self.hidden_dim * NUM_CLASSES
    }

    pub fn layout_id(&self) -> LayoutId {
        LayoutId(*self)
    }
}

/// Identifier binding a flat vector to the shape (and flattening scheme)
/// that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayoutId(pub ModelShape);

impl LayoutId {
    pub fn shape(&self) -> ModelShape {
        self.0
    }
}

impl fmt::Display for LayoutId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "wff1-v{}-e{}-h{}-w{}",
            self.0.vocab_size, self.0.embed_dim, self.0.hidden_dim, self.0.window
        )
    }
}

/// Flat real-valued parameter or gradient container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    layout: LayoutId,
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(layout: LayoutId, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.shape().param_count() {
            return Err(Error::Protocol(format!(
                "value count {} does not match layout {} ({} parameters)",
                values.len(),
                layout,
                layout.shape().param_count()
            )));
        }
        Ok(ParameterVector { layout, values })
    }

    pub fn zeros(layout: LayoutId) -> Self {
        ParameterVector { values: vec![0.0; layout.shape().param_count()], layout }
    }

    pub fn layout(&self) -> LayoutId {
        self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_layout(&self, other: &ParameterVector) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Protocol(format!(
                "layout mismatch: {} vs {}",
                self.layout, other.layout
            )));
        }
        Ok(())
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &ParameterVector) -> Result<()> {
        self.check_layout(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    /// Elementwise scaling.
    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.values.iter()
    }

    /// SHA-256 over the layout id and the little-endian component bytes.
    ///
    /// Two vectors share a digest exactly when they are bitwise identical
    /// and carry the same layout.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.layout.to_string().as_bytes());
        hasher.update([0x00]);
        for v in &self.values {
            hasher.update(v.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}
