//! Per-array sneak-path-rate estimation and the elementary signal estimator.

use crate::crossbar::ChannelParams;
use crate::llr::{clamp_llr, LlrFrame, LLR_CLAMP};
use crate::numerics::log_add_exp;

/// Noise-free read levels, in increasing resistance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    R1,
    R0Prime,
    R0,
}

impl Level {
    pub fn resistance(self, params: &ChannelParams) -> f64 {
        match self {
            Level::R1 => params.r1(),
            Level::R0Prime => params.r0_prime(),
            Level::R0 => params.r0(),
        }
    }
}

/// Nearest level to `y`. Ties go to the lower resistance.
pub fn hard_decision(y: f64, params: &ChannelParams) -> Level {
    let mut best = Level::R1;
    let mut best_dist = (y - params.r1()).abs();
    for level in [Level::R0Prime, Level::R0] {
        let d = (y - level.resistance(params)).abs();
        if d < best_dist {
            best = level;
            best_dist = d;
        }
    }
    best
}

/// Sneak-path rate estimate of one array segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayEstimate {
    pub epsilon_hat: f64,
    pub n_r0: u64,
    pub n_r0_prime: u64,
    pub n_r1: u64,
    /// True when no cell was decided as a 0 and `epsilon_hat` is the fallback.
    pub fallback: bool,
}

impl ArrayEstimate {
    pub fn from_counts(n_r0: u64, n_r0_prime: u64, n_r1: u64, fallback: f64) -> Self {
        let zeros = n_r0 + n_r0_prime;
        let (epsilon_hat, used_fallback) = if zeros > 0 {
            (n_r0_prime as f64 / zeros as f64, false)
        } else {
            (fallback, true)
        };
        ArrayEstimate { epsilon_hat, n_r0, n_r0_prime, n_r1, fallback: used_fallback }
    }
}

/// `ε̂ = n_R0' / (n_R0' + n_R0)` from hard decisions on `segment`, or
/// `fallback` (normally `ε_q`) when the denominator is zero.
pub fn estimate_epsilon(segment: &[f64], params: &ChannelParams, fallback: f64) -> ArrayEstimate {
    let mut counts = [0u64; 3];
    for &y in segment {
        counts[hard_decision(y, params) as usize] += 1;
    }
    ArrayEstimate::from_counts(counts[Level::R0 as usize], counts[Level::R0Prime as usize], counts[Level::R1 as usize], fallback)
}

/// Channel LLR `log p(y | x=0) / p(y | x=1)` of the (ε̂, σ)-channel.
///
/// At σ = 0 the result saturates by the nearest level.
pub fn ese_llr(y: f64, epsilon_hat: f64, params: &ChannelParams) -> f64 {
    let sigma = params.sigma();
    if sigma == 0.0 {
        return match hard_decision(y, params) {
            Level::R1 => -LLR_CLAMP,
            _ => LLR_CLAMP,
        };
    }
    let inv = 0.5 / (sigma * sigma);
    let sq = |level: f64| (y - level) * (y - level) * inv;
    let sneak = epsilon_hat.ln() - sq(params.r0_prime());
    let clean = (1.0 - epsilon_hat).ln() - sq(params.r0());
    clamp_llr(log_add_exp(sneak, clean) + sq(params.r1()))
}

pub fn ese_llrs(values: &[f64], epsilon_hat: f64, params: &ChannelParams) -> LlrFrame {
    LlrFrame::new(values.iter().map(|&y| ese_llr(y, epsilon_hat, params)).collect())
}
