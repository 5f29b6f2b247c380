//! Single m×n crossbar array: stored data, selector failures, sneak paths
//! and noisy readback.
//!
//! Cells are addressed `(row, column)` with zero-based indices and stored
//! row-major. A cell storing 0 sits in the High-Resistance State `R0`, a cell
//! storing 1 in the Low-Resistance State `R1`. A 0-cell `(i, j)` is hit by a
//! sneak path when some `k != i`, `l != j` has `x[i][l] = x[k][l] = x[k][j] = 1`
//! and the selector of the diagonal cell `(k, l)` has failed; its resistance
//! then reads as `R0' = (1/R0 + 1/Rs)^-1`.

use rand::Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_probability, Error, Result};
use crate::numerics::{ln_binomial, mean_and_stderr};
use crate::seed::{self, tag};

/// Default Taylor balance factor for [`sneak_rate_taylor`].
pub const DEFAULT_ALPHA: f64 = 0.8;

/// Largest dimension accepted by [`sneak_rate_exact`].
pub const MAX_EXACT_DIM: usize = 4096;

/// Resistances and noise of the memory channel, plus the input bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    r0: f64,
    r1: f64,
    rs: f64,
    r0_prime: f64,
    sigma: f64,
    p_f: f64,
    q: f64,
    alpha: f64,
}

impl ChannelParams {
    pub fn new(r0: f64, r1: f64, rs: f64, sigma: f64, p_f: f64, q: f64) -> Result<Self> {
        if !(rs > 0.0 && rs.is_finite()) {
            return Err(Error::invalid("rs", format!("{rs} must be positive and finite")));
        }
        if !(r1 > 0.0 && r0.is_finite()) {
            return Err(Error::invalid("r1", format!("{r1} must be positive")));
        }
        let r0_prime = 1.0 / (1.0 / r0 + 1.0 / rs);
        if !(r0 > r0_prime && r0_prime > r1) {
            return Err(Error::invalid(
                "r0/r1/rs",
                format!("need r0 > r0' > r1 > 0, got r0={r0}, r0'={r0_prime}, r1={r1}"),
            ));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("{sigma} must be non-negative")));
        }
        check_probability("p_f", p_f)?;
        check_probability("q", q)?;
        Ok(ChannelParams { r0, r1, rs, r0_prime, sigma, p_f, q, alpha: DEFAULT_ALPHA })
    }

    /// `R1 = 100`, `R0 = 1000`, `Rs = 250` ohms and `p_f = 1e-3`, the
    /// operating point used throughout the experiments.
    pub fn reference(sigma: f64, q: f64) -> Result<Self> {
        ChannelParams::new(1000.0, 100.0, 250.0, sigma, 1e-3, q)
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        ChannelParams::new(self.r0, self.r1, self.rs, sigma, self.p_f, self.q)
            .map(|p| p.with_alpha(self.alpha))
    }

    pub fn with_q(self, q: f64) -> Result<Self> {
        ChannelParams::new(self.r0, self.r1, self.rs, self.sigma, self.p_f, q)
            .map(|p| p.with_alpha(self.alpha))
    }

    pub fn with_p_f(self, p_f: f64) -> Result<Self> {
        ChannelParams::new(self.r0, self.r1, self.rs, self.sigma, p_f, self.q)
            .map(|p| p.with_alpha(self.alpha))
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }
    pub fn r1(&self) -> f64 {
        self.r1
    }
    pub fn rs(&self) -> f64 {
        self.rs
    }
    pub fn r0_prime(&self) -> f64 {
        self.r0_prime
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn p_f(&self) -> f64 {
        self.p_f
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Noiseless read level of a cell.
    #[inline]
    pub fn level(&self, bit: bool, sneak: bool) -> f64 {
        match (bit, sneak) {
            (true, _) => self.r1,
            (false, true) => self.r0_prime,
            (false, false) => self.r0,
        }
    }
}

/// The physical array: stored bits plus the (permanent) selector-failure map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossbarState {
    m: usize,
    n: usize,
    data: Vec<bool>,
    failed: Vec<bool>,
}

impl CrossbarState {
    pub fn new(m: usize, n: usize, data: Vec<bool>, failed: Vec<bool>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("m/n", "array dimensions must be at least 1"));
        }
        for v in [&data, &failed] {
            if v.len() != m * n {
                return Err(Error::LengthMismatch { expected: m * n, actual: v.len() });
            }
        }
        Ok(CrossbarState { m, n, data, failed })
    }

    pub fn rows(&self) -> usize {
        self.m
    }
    pub fn cols(&self) -> usize {
        self.n
    }
    pub fn len(&self) -> usize {
        self.m * self.n
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    #[inline]
    pub fn bit(&self, i: usize, j: usize) -> bool {
        self.data[i * self.n + j]
    }
    #[inline]
    pub fn is_failed(&self, i: usize, j: usize) -> bool {
        self.failed[i * self.n + j]
    }
    pub fn data(&self) -> &[bool] {
        &self.data
    }
    pub fn failed(&self) -> &[bool] {
        &self.failed
    }
    pub fn zero_count(&self) -> usize {
        self.data.iter().filter(|&&b| !b).count()
    }

    /// Overwrites cell `positions[i]` (row-major index) with `bits[i]`.
    pub(crate) fn write_cells(&mut self, positions: &[usize], bits: &[bool]) {
        for (&p, &b) in positions.iter().zip(bits) {
            self.data[p] = b;
        }
    }

    /// Data and failure maps in the plain-text grid format.
    pub fn to_grid_text(&self) -> (String, String) {
        (format_grid(&self.data, self.m, self.n), format_grid(&self.failed, self.m, self.n))
    }

    pub fn from_grid_text(data: &str, failed: &str) -> Result<Self> {
        let (m, n, d) = parse_grid(data)?;
        let (fm, fn_, f) = parse_grid(failed)?;
        if (m, n) != (fm, fn_) {
            return Err(Error::Parse {
                what: "failure map",
                reason: format!("shape {fm}x{fn_} differs from data shape {m}x{n}"),
            });
        }
        CrossbarState::new(m, n, d, f)
    }
}

/// One line per row, characters `0`/`1`.
pub fn format_grid(cells: &[bool], m: usize, n: usize) -> String {
    let mut s = String::with_capacity(m * (n + 1));
    for row in cells.chunks(n).take(m) {
        s.extend(row.iter().map(|&b| if b { '1' } else { '0' }));
        s.push('\n');
    }
    s
}

pub fn parse_grid(text: &str) -> Result<(usize, usize, Vec<bool>)> {
    let mut cells = Vec::new();
    let mut n = None;
    let mut m = 0;
    for (lineno, line) in text.lines().map(str::trim).enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Vec<bool> = line
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    what: "grid",
                    reason: format!("line {}: unexpected character {other:?}", lineno + 1),
                }),
            })
            .collect::<Result<_>>()?;
        match n {
            None => n = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    what: "grid",
                    reason: format!("line {} has {} cells, expected {w}", lineno + 1, row.len()),
                })
            }
            _ => {}
        }
        cells.extend(row);
        m += 1;
    }
    match n {
        Some(n) if m > 0 => Ok((m, n, cells)),
        _ => Err(Error::Parse { what: "grid", reason: "empty grid".into() }),
    }
}

/// Noisy readback of one array.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadbackArray {
    pub m: usize,
    pub n: usize,
    /// Measured resistances `y[i][j]`, row-major.
    pub values: Vec<f64>,
    /// Ground-truth sneak indicators `e[i][j]`. For test oracles only.
    pub sneak: Vec<bool>,
}

/// Samples an array with i.i.d. Bernoulli(`q`) data and i.i.d. selector
/// failures of probability `p_f`.
pub fn generate_array(m: usize, n: usize, q: f64, p_f: f64, rng_seed: u64) -> Result<CrossbarState> {
    generate_array_with(m, n, q, p_f, &mut seed::rng(rng_seed))
}

pub fn generate_array_with<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    q: f64,
    p_f: f64,
    rng: &mut R,
) -> Result<CrossbarState> {
    check_probability("q", q)?;
    check_probability("p_f", p_f)?;
    if m == 0 || n == 0 {
        return Err(Error::invalid("m/n", "array dimensions must be at least 1"));
    }
    let cells = m * n;
    let data = random_bits(cells, q, rng);
    let failed = sparse_bits(cells, p_f, rng);
    Ok(CrossbarState { m, n, data, failed })
}

pub(crate) fn random_bits<R: Rng + ?Sized>(len: usize, q: f64, rng: &mut R) -> Vec<bool> {
    if q <= 0.0 {
        return vec![false; len];
    }
    if q >= 1.0 {
        return vec![true; len];
    }
    (0..len).map(|_| rng.random_bool(q)).collect()
}

/// Bernoulli(`p`) indicators drawn by geometric gap sampling, which is
/// distributionally identical to per-cell draws and cheap for small `p`.
fn sparse_bits<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Vec<bool> {
    let mut out = vec![false; len];
    if p <= 0.0 {
        return out;
    }
    if p >= 1.0 {
        out.fill(true);
        return out;
    }
    let gaps = Geometric::new(p).expect("p in (0, 1)");
    let mut pos: u64 = 0;
    loop {
        pos = pos.saturating_add(gaps.sample(rng));
        if pos >= len as u64 {
            break;
        }
        out[pos as usize] = true;
        pos += 1;
    }
    out
}

/// Sneak-path indicator `e[i][j]` straight from the definition.
///
/// Always `false` for a cell storing 1: only High-Resistance reads are
/// affected.
pub fn detect_sneak_path(state: &CrossbarState, i: usize, j: usize) -> bool {
    assert!(i < state.m && j < state.n, "cell ({i}, {j}) outside {}x{}", state.m, state.n);
    if state.bit(i, j) {
        return false;
    }
    (0..state.n).filter(|&l| l != j && state.bit(i, l)).any(|l| {
        (0..state.m)
            .filter(|&k| k != i)
            .any(|k| state.bit(k, l) && state.bit(k, j) && state.is_failed(k, l))
    })
}

/// All sneak indicators of an array at once.
///
/// Only a failed selector on a 1-cell `(k, l)` can close a sneak path, and it
/// affects exactly the 0-cells `(i, j)` with `x[i][l] = 1` and `x[k][j] = 1`.
/// Rows are processed as 64-bit column masks.
pub fn sneak_map(state: &CrossbarState) -> Vec<bool> {
    let (m, n) = (state.m, state.n);
    let words = n.div_ceil(64);
    let mut row_mask = vec![0u64; m * words];
    for i in 0..m {
        for j in 0..n {
            if state.bit(i, j) {
                row_mask[i * words + j / 64] |= 1 << (j % 64);
            }
        }
    }
    let mut hit = vec![0u64; m * words];
    for k in 0..m {
        for l in 0..n {
            if !(state.is_failed(k, l) && state.bit(k, l)) {
                continue;
            }
            for i in (0..m).filter(|&i| i != k && state.bit(i, l)) {
                for w in 0..words {
                    hit[i * words + w] |= row_mask[k * words + w];
                }
            }
        }
    }
    let mut out = vec![false; m * n];
    for i in 0..m {
        for j in 0..n {
            let idx = i * words + j / 64;
            let bit = 1u64 << (j % 64);
            out[i * n + j] = hit[idx] & bit != 0 && row_mask[idx] & bit == 0;
        }
    }
    out
}

/// Reads every cell: level from data and sneak state plus N(0, σ²) noise.
pub fn read_array(state: &CrossbarState, params: &ChannelParams, rng_seed: u64) -> ReadbackArray {
    read_array_with(state, params, &mut seed::rng(rng_seed))
}

pub fn read_array_with<R: Rng + ?Sized>(
    state: &CrossbarState,
    params: &ChannelParams,
    rng: &mut R,
) -> ReadbackArray {
    let sneak = sneak_map(state);
    let sigma = params.sigma();
    let values = state
        .data
        .iter()
        .zip(&sneak)
        .map(|(&bit, &e)| {
            let level = params.level(bit, e);
            if sigma > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                level + sigma * z
            } else {
                level
            }
        })
        .collect();
    ReadbackArray { m: state.m, n: state.n, values, sneak }
}

/// Mean sneak-path rate `Pr(e = 1 | x = 0)` for i.i.d. Bernoulli(q) data.
///
/// Conditioned on the read cell being 0, with `u` ones among the other cells
/// of its column and `v` among the other cells of its row, each of the `u·v`
/// diagonal cells independently closes a path with probability `p_f·q`.
/// The double binomial sum is accumulated with log-domain weights and
/// `1 - (1 - p_f q)^{uv}` evaluated by `expm1`, so no cancellation occurs for
/// small rates.
pub fn sneak_rate_exact(m: usize, n: usize, q: f64, p_f: f64) -> Result<f64> {
    check_probability("q", q)?;
    check_probability("p_f", p_f)?;
    if m == 0 || n == 0 {
        return Err(Error::invalid("m/n", "array dimensions must be at least 1"));
    }
    if m > MAX_EXACT_DIM || n > MAX_EXACT_DIM {
        return Err(Error::invalid("m/n", format!("exact sum limited to {MAX_EXACT_DIM} per side")));
    }
    if q == 0.0 || p_f == 0.0 {
        return Ok(0.0);
    }
    let (mu, nv) = ((m - 1) as u64, (n - 1) as u64);
    if q == 1.0 {
        return Ok(-((mu * nv) as f64 * (-p_f).ln_1p()).exp_m1());
    }
    let log_weights = |len: u64| -> Vec<f64> {
        (0..=len)
            .map(|u| {
                ln_binomial(len, u) + u as f64 * q.ln() + (len - u) as f64 * (-q).ln_1p()
            })
            .collect()
    };
    let wu = log_weights(mu);
    let wv = log_weights(nv);
    let pq = p_f * q;
    let ln_keep = (-pq).ln_1p();
    let mut eps = 0.0;
    for (u, &lu) in wu.iter().enumerate() {
        for (v, &lv) in wv.iter().enumerate() {
            let paths = (u * v) as f64;
            let hit = if paths == 0.0 {
                0.0
            } else if pq >= 1.0 {
                1.0
            } else {
                -(paths * ln_keep).exp_m1()
            };
            eps += (lu + lv).exp() * hit;
        }
    }
    Ok(eps.clamp(0.0, 1.0))
}

/// Closed-form second-order approximation of [`sneak_rate_exact`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorRate {
    /// Approximation clamped to `[0, 1]`.
    pub rate: f64,
    /// Unclamped value of the expansion.
    pub raw: f64,
    /// `false` when `p_f q^3 (m-1)(n-1)` is not small (taken as `>= 0.5`)
    /// or the raw value left `[0, 1]`.
    pub valid: bool,
}

/// Expands `(1 - p_f q)^{uv} ≈ 1 - uv p_f q + α C(uv, 2) p_f² q²` inside the
/// exact sum, which collapses to
/// `(m-1)(n-1) p_f q³ - α [2q C(m-1,2) C(n-1,2) + (n-1) C(m-1,2) + (m-1) C(n-1,2)] p_f² q⁵`.
pub fn sneak_rate_taylor(m: usize, n: usize, q: f64, p_f: f64, alpha: f64) -> TaylorRate {
    let c2 = |x: f64| x * (x - 1.0) / 2.0;
    let (mu, nv) = (m.saturating_sub(1) as f64, n.saturating_sub(1) as f64);
    let first = mu * nv * p_f * q.powi(3);
    let second = alpha
        * (2.0 * q * c2(mu) * c2(nv) + nv * c2(mu) + mu * c2(nv))
        * p_f.powi(2)
        * q.powi(5);
    let raw = first - second;
    let rate = raw.clamp(0.0, 1.0);
    TaylorRate { rate, raw, valid: first < 0.5 && raw == rate }
}

/// Distribution of the sneak-path rate over one codeword spread across `t`
/// arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct SneakRatePmf {
    pub m: usize,
    pub n: usize,
    pub q: f64,
    pub t: usize,
    /// `(rate, probability)` at bin centres.
    pub bins: Vec<(f64, f64)>,
    /// Unbinned sample mean.
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
    pub samples: usize,
}

/// Maximum number of display bins of a [`SneakRatePmf`].
pub const MAX_PMF_BINS: usize = 200;

/// Sneak-path counts of `samples` codewords of `m·n` cells, each split into
/// `t` equal segments stored row-major at the start of `t` independent arrays.
pub fn sample_sneak_counts(
    m: usize,
    n: usize,
    q: f64,
    p_f: f64,
    t: usize,
    samples: usize,
    rng_seed: u64,
) -> Result<Vec<u64>> {
    check_probability("q", q)?;
    check_probability("p_f", p_f)?;
    if t == 0 || !(m * n).is_multiple_of(t) {
        return Err(Error::invalid("t", format!("{t} must divide the {} cells of a codeword", m * n)));
    }
    let segment = m * n / t;
    (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut count = 0u64;
            for a in 0..t {
                let mut rng = seed::rng_at(rng_seed, &[tag::PMF, s as u64, a as u64]);
                let state = generate_array_with(m, n, q, p_f, &mut rng)?;
                count += sneak_map(&state)[..segment].iter().filter(|&&e| e).count() as u64;
            }
            Ok(count)
        })
        .collect()
}

/// Per-codeword sneak-path rates `Σe / (m n (1 - q))`; zero when `q = 1`.
pub fn sample_sneak_rates(
    m: usize,
    n: usize,
    q: f64,
    p_f: f64,
    t: usize,
    samples: usize,
    rng_seed: u64,
) -> Result<Vec<f64>> {
    let denom = (m * n) as f64 * (1.0 - q);
    let counts = sample_sneak_counts(m, n, q, p_f, t, samples, rng_seed)?;
    Ok(counts
        .into_iter()
        .map(|c| if denom > 0.0 { c as f64 / denom } else { 0.0 })
        .collect())
}

/// Empirical PMF of the sneak-path rate.
///
/// The natural resolution is one sneak count per bin; counts are merged into
/// at most [`MAX_PMF_BINS`] equal-width bins.
pub fn estimate_pmf(
    m: usize,
    n: usize,
    q: f64,
    p_f: f64,
    t: usize,
    samples: usize,
    rng_seed: u64,
) -> Result<SneakRatePmf> {
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    let counts = sample_sneak_counts(m, n, q, p_f, t, samples, rng_seed)?;
    let denom = (m * n) as f64 * (1.0 - q);
    let scale = if denom > 0.0 { 1.0 / denom } else { 0.0 };
    let rates: Vec<f64> = counts.iter().map(|&c| c as f64 * scale).collect();
    let (mean, std_err) = mean_and_stderr(&rates);
    let std_dev = std_err * (samples as f64).sqrt();

    let lo = *counts.iter().min().unwrap();
    let hi = *counts.iter().max().unwrap();
    let span = hi - lo + 1;
    let width = span.div_ceil(MAX_PMF_BINS as u64);
    let nbins = span.div_ceil(width) as usize;
    let mut hist = vec![0usize; nbins];
    for &c in &counts {
        hist[((c - lo) / width) as usize] += 1;
    }
    let bins = hist
        .into_iter()
        .enumerate()
        .map(|(b, h)| {
            let centre = lo as f64 + (b as u64 * width) as f64 + (width - 1) as f64 / 2.0;
            (centre * scale, h as f64 / samples as f64)
        })
        .collect();
    Ok(SneakRatePmf { m, n, q, t, bins, mean, std_dev, std_err, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(m: usize, n: usize, ones: &[(usize, usize)], fails: &[(usize, usize)]) -> CrossbarState {
        let mut data = vec![false; m * n];
        let mut failed = vec![false; m * n];
        for &(i, j) in ones {
            data[i * n + j] = true;
        }
        for &(i, j) in fails {
            failed[i * n + j] = true;
        }
        CrossbarState::new(m, n, data, failed).unwrap()
    }

    // 4x4 example, one-based (row, col): target (3,2), path through
    // (3,4), (1,4), (1,2); the diagonal cell is (1,4).
    #[test]
    fn four_by_four_sneak_path() {
        let ones = [(2, 3), (0, 3), (0, 1)];
        let with_fail = cell(4, 4, &ones, &[(0, 3)]);
        assert!(detect_sneak_path(&with_fail, 2, 1));
        assert!(sneak_map(&with_fail)[2 * 4 + 1]);

        let no_fail = cell(4, 4, &ones, &[]);
        assert!(!detect_sneak_path(&no_fail, 2, 1));
        assert!(sneak_map(&no_fail).iter().all(|&e| !e));
    }

    #[test]
    fn only_the_diagonal_selector_matters() {
        let ones = [(2, 3), (0, 3), (0, 1)];
        let fail_elsewhere = cell(4, 4, &ones, &[(2, 3), (0, 1)]);
        assert!(!detect_sneak_path(&fail_elsewhere, 2, 1));
    }

    #[test]
    fn all_zero_array_has_no_sneak_paths() {
        let s = CrossbarState::new(5, 6, vec![false; 30], vec![true; 30]).unwrap();
        assert!(sneak_map(&s).iter().all(|&e| !e));
        for i in 0..5 {
            for j in 0..6 {
                assert!(!detect_sneak_path(&s, i, j));
            }
        }
    }

    #[test]
    fn degenerate_generation() {
        let s = generate_array(8, 9, 0.0, 0.5, 1).unwrap();
        assert!(s.data().iter().all(|&b| !b));
        let s = generate_array(8, 9, 0.5, 0.0, 1).unwrap();
        assert!(s.failed().iter().all(|&f| !f));
        assert_eq!(generate_array(8, 9, 0.5, 0.1, 3).unwrap(), generate_array(8, 9, 0.5, 0.1, 3).unwrap());
        assert!(generate_array(8, 9, 1.5, 0.1, 3).is_err());
        assert!(generate_array(8, 9, 0.5, -0.1, 3).is_err());
    }

    #[test]
    fn noiseless_read_levels() {
        let p = ChannelParams::reference(0.0, 0.5).unwrap();
        assert_eq!(p.r0_prime(), 200.0);
        let s = cell(4, 4, &[(2, 3), (0, 3), (0, 1)], &[(0, 3)]);
        let y = read_array(&s, &p, 9);
        assert_eq!(y.values[2 * 4 + 3], 100.0);
        assert_eq!(y.values[2 * 4 + 1], 200.0);
        assert_eq!(y.values[3 * 4 + 3], 1000.0);
    }

    #[test]
    fn params_invariants() {
        assert!(ChannelParams::new(1000.0, 100.0, 250.0, 10.0, 1e-3, 0.5).is_ok());
        // r0' = 1000*100/1100 ~ 90.9 < r1
        assert!(ChannelParams::new(1000.0, 100.0, 100.0, 10.0, 1e-3, 0.5).is_err());
        assert!(ChannelParams::new(1000.0, 100.0, 250.0, -1.0, 1e-3, 0.5).is_err());
        assert!(ChannelParams::new(1000.0, 100.0, 250.0, 1.0, 2.0, 0.5).is_err());
        let p = ChannelParams::reference(50.0, 0.25).unwrap();
        assert_eq!(p.r0_prime(), 1.0 / (1.0 / 1000.0 + 1.0 / 250.0));
        assert_eq!(p.alpha(), 0.8);
    }

    #[test]
    fn exact_rate_two_by_two_collapses() {
        for &q in &[0.1, 0.25, 0.5, 0.9] {
            for &pf in &[1e-3, 0.2, 1.0] {
                let e = sneak_rate_exact(2, 2, q, pf).unwrap();
                let want = pf * q * q * q;
                assert!((e - want).abs() < 1e-15 * want.max(1.0), "q={q} pf={pf}: {e} vs {want}");
            }
        }
    }

    #[test]
    fn exact_rate_edge_values() {
        assert_eq!(sneak_rate_exact(64, 64, 0.0, 1e-3).unwrap(), 0.0);
        assert_eq!(sneak_rate_exact(64, 64, 0.5, 0.0).unwrap(), 0.0);
        let full = sneak_rate_exact(16, 8, 1.0, 1e-2).unwrap();
        let want = 1.0 - (1.0f64 - 1e-2).powi(15 * 7);
        assert!((full - want).abs() < 1e-14);
        assert!(sneak_rate_exact(MAX_EXACT_DIM + 1, 4, 0.5, 1e-3).is_err());
    }

    #[test]
    fn exact_rate_monotone_in_q() {
        for &(m, n) in &[(8, 8), (64, 64), (128, 32)] {
            let mut prev = 0.0;
            for k in 0..=100 {
                let e = sneak_rate_exact(m, n, k as f64 / 100.0, 1e-3).unwrap();
                assert!(e >= prev - 1e-15, "({m},{n}) q={} {e} < {prev}", k as f64 / 100.0);
                prev = e;
            }
        }
    }

    #[test]
    fn taylor_matches_two_by_two_and_reference_means() {
        let t = sneak_rate_taylor(2, 2, 0.3, 1e-3, DEFAULT_ALPHA);
        assert!((t.rate - 1e-3 * 0.027).abs() < 1e-18);
        let a = sneak_rate_taylor(64, 64, 0.25, 1e-3, DEFAULT_ALPHA).rate;
        assert!((a - 0.06).abs() < 0.005, "{a}");
        let b = sneak_rate_taylor(128, 128, 0.25, 1e-3, DEFAULT_ALPHA).rate;
        assert!((b - 0.2216).abs() < 0.01, "{b}");
    }

    #[test]
    fn taylor_clamps_outside_validity() {
        let t = sneak_rate_taylor(512, 512, 0.9, 1e-2, DEFAULT_ALPHA);
        assert!(!t.valid);
        assert!((0.0..=1.0).contains(&t.rate));
    }

    #[test]
    fn taylor_within_five_percent_in_validity_regime() {
        for &m in &[32, 64] {
            for &n in &[32, 64] {
                for k in 1..=20 {
                    let q = 0.025 * k as f64;
                    let exact = sneak_rate_exact(m, n, q, 1e-3).unwrap();
                    let approx = sneak_rate_taylor(m, n, q, 1e-3, DEFAULT_ALPHA).rate;
                    let rel = (approx - exact).abs() / exact;
                    assert!(rel <= 0.05, "({m},{n}) q={q}: rel {rel}");
                }
            }
        }
    }

    #[test]
    fn grid_text_round_trip_and_errors() {
        let s = generate_array(5, 7, 0.4, 0.2, 11).unwrap();
        let (d, f) = s.to_grid_text();
        assert_eq!(d.lines().count(), 5);
        assert_eq!(CrossbarState::from_grid_text(&d, &f).unwrap(), s);
        assert!(parse_grid("010\n01\n").is_err());
        assert!(parse_grid("01x\n").is_err());
        assert!(parse_grid("\n\n").is_err());
        assert!(CrossbarState::from_grid_text("01\n10\n", "0\n").is_err());
    }

    #[test]
    fn pmf_degenerate_and_shape() {
        let p = estimate_pmf(16, 16, 0.0, 1e-2, 1, 50, 4).unwrap();
        assert_eq!(p.bins, vec![(0.0, 1.0)]);
        assert_eq!(p.mean, 0.0);
        assert!(estimate_pmf(16, 16, 0.5, 1e-2, 3, 10, 4).is_err());
        let p = estimate_pmf(32, 32, 0.5, 1e-2, 2, 400, 5).unwrap();
        assert!(p.bins.len() <= MAX_PMF_BINS);
        let total: f64 = p.bins.iter().map(|b| b.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
