//! Log-likelihood-ratio frames exchanged between estimator, de-shaper and
//! decoder. Convention: `ln(Pr(bit = 0) / Pr(bit = 1))`, positive favours 0.

use std::ops::{Deref, DerefMut};

/// Saturation magnitude for every LLR message in the crate.
pub const LLR_CLAMP: f64 = 38.0;

#[inline]
pub fn clamp_llr(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-LLR_CLAMP, LLR_CLAMP)
    }
}

/// Hard decision; `None` for an exact zero.
#[inline]
pub fn hard_bit(llr: f64) -> Option<u8> {
    if llr > 0.0 {
        Some(0)
    } else if llr < 0.0 {
        Some(1)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlrFrame(Vec<f64>);

impl LlrFrame {
    /// Builds a frame, saturating every value to `±LLR_CLAMP`.
    pub fn new(values: Vec<f64>) -> Self {
        let mut v = values;
        v.iter_mut().for_each(|x| *x = clamp_llr(*x));
        LlrFrame(v)
    }

    pub fn zeros(len: usize) -> Self {
        LlrFrame(vec![0.0; len])
    }

    /// Hard decisions with ties resolved to 0.
    pub fn hard_decisions(&self) -> Vec<u8> {
        self.0.iter().map(|&l| hard_bit(l).unwrap_or(0)).collect()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LlrFrame {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for LlrFrame {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for LlrFrame {
    fn from(v: Vec<f64>) -> Self {
        LlrFrame::new(v)
    }
}
