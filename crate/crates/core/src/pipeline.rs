//! Across-array storage of shaped IRA codewords and the BER harness.
//!
//! A codeword of length N is split into T segments of N/T bits; segment t
//! goes to array t, whose other cells hold Bernoulli(q) filler. Decoding
//! estimates ε per array, forms channel LLRs and alternates between the
//! de-shaper and the IRA decoder.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ChannelSection;
use crate::crossbar::{generate_array_with, sample_sneak_rates, sneak_map, sneak_rate_exact, ChannelParams, CrossbarState};
use crate::detect::{ese_llr, estimate_epsilon};
use crate::error::{Error, Result};
use crate::ira::{encode, CodeDescriptor, IraCodeSpec, IraDecoder, DEFAULT_DECODER_ITERS};
use crate::numerics::{mean_and_stderr, normal_sf, wilson_interval, Z95};
use crate::seed::{self, tag};
use crate::shaper::{shape, Deshaper, ShaperDescriptor, ShaperSpec};

/// How the stored bits are corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// Full crossbar simulation with sneak paths from the array geometry.
    #[default]
    Reram,
    /// Per array, ε^t drawn from sampled single-array sneak rates, then
    /// i.i.d. sneak paths on the segment's 0-cells.
    BlockVarying,
    /// i.i.d. sneak paths with the mean rate ε_q.
    Iid,
}

/// Cells of each array that receive the codeword segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    #[default]
    RowMajor,
    /// A seeded random subset of cells, shared by all arrays.
    Random,
}

mod defaults {
    pub fn yes() -> bool {
        true
    }
    pub fn global_iters() -> usize {
        30
    }
    pub fn inner_iters() -> usize {
        1
    }
    pub fn decoder_iters() -> usize {
        crate::ira::DEFAULT_DECODER_ITERS
    }
    pub fn trials() -> u64 {
        1000
    }
    pub fn errors_target() -> u64 {
        100
    }
    pub fn pmf_pool() -> usize {
        4000
    }
}

/// Full description of a storage experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    /// Number of arrays sharing one codeword.
    pub t: usize,
    pub code: CodeDescriptor,
    pub shaper: ShaperDescriptor,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub kind: ChannelKind,
    /// Per-array ε estimation; when off the decoder uses ε_q.
    #[serde(default = "defaults::yes")]
    pub estimate: bool,
    #[serde(default)]
    pub placement: Placement,
    #[serde(default = "defaults::global_iters")]
    pub global_iters: usize,
    /// De-shaper rounds per global iteration.
    #[serde(default = "defaults::inner_iters")]
    pub inner_iters: usize,
    /// Sum-product iterations per global iteration.
    #[serde(default = "defaults::decoder_iters")]
    pub decoder_iters: usize,
    /// Trial cap per σ point.
    #[serde(default = "defaults::trials")]
    pub trials: u64,
    /// Bit errors after which a σ point stops.
    #[serde(default = "defaults::errors_target")]
    pub errors_target: u64,
    /// Single-array sneak rates sampled for the block-varying channel.
    #[serde(default = "defaults::pmf_pool")]
    pub pmf_pool: usize,
    /// σ points of a sweep; empty means `channel.sigma` alone.
    #[serde(default)]
    pub sigmas: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        crate::config::from_toml(text, "experiment config")
    }

    pub fn to_toml(&self) -> String {
        crate::config::to_toml(self)
    }

    pub fn sigma_grid(&self) -> Vec<f64> {
        if self.sigmas.is_empty() {
            vec![self.channel.sigma]
        } else {
            self.sigmas.clone()
        }
    }
}

/// Outcome of one stored and decoded codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub bit_errors: u64,
    pub info_bits: u64,
    pub converged: bool,
    pub global_iterations: usize,
    pub epsilon_hats: Vec<f64>,
    /// Fraction of the segment's 0-cells hit by a sneak path, per array.
    pub epsilon_truth: Vec<f64>,
}

/// Stopping rule of a σ point: run deterministic batches until either bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub errors_target: u64,
    pub trials_cap: u64,
    pub batch: u64,
}

impl StopRule {
    pub fn new(errors_target: u64, trials_cap: u64) -> Self {
        StopRule { errors_target, trials_cap, batch: 32 }
    }
}

/// Aggregated BER at one σ.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub sigma: f64,
    pub t: usize,
    pub trials: u64,
    pub bit_errors: u64,
    pub info_bits: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Bit errors of every trial, in trial order.
    pub trial_errors: Vec<u64>,
}

pub const BER_CSV_HEADER: &str = "sigma,T,trials,bit_errors,ber,ci_low,ci_high";

impl BerPoint {
    fn from_trials(sigma: f64, t: usize, bits_per_trial: u64, trial_errors: Vec<u64>) -> Self {
        let trials = trial_errors.len() as u64;
        let bit_errors: u64 = trial_errors.iter().sum();
        let info_bits = trials * bits_per_trial;
        let frame_errors = trial_errors.iter().filter(|&&e| e > 0).count() as u64;
        let ber = if info_bits > 0 { bit_errors as f64 / info_bits as f64 } else { 0.0 };
        let (ci_low, ci_high) = wilson_interval(bit_errors, info_bits, Z95);
        BerPoint { sigma, t, trials, bit_errors, info_bits, frame_errors, ber, ci_low, ci_high, trial_errors }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6e},{:.6e},{:.6e}",
            self.sigma, self.t, self.trials, self.bit_errors, self.ber, self.ci_low, self.ci_high
        )
    }

    /// Mean and standard error of the per-trial BER. Errors cluster inside
    /// failed frames, so this is the right spread for comparing points.
    pub fn clustered_stderr(&self) -> f64 {
        let k = (self.info_bits / self.trials.max(1)) as f64;
        let per: Vec<f64> = self.trial_errors.iter().map(|&e| e as f64 / k).collect();
        mean_and_stderr(&per).1
    }
}

pub fn ber_csv(points: &[BerPoint]) -> String {
    let mut s = String::from(BER_CSV_HEADER);
    s.push('\n');
    for p in points {
        s.push_str(&p.csv_row());
        s.push('\n');
    }
    s
}

/// Two-sided p-value for equal BER at two points, using per-trial
/// (cluster) variances.
pub fn two_proportion_p_value(a: &BerPoint, b: &BerPoint) -> f64 {
    let se = (a.clustered_stderr().powi(2) + b.clustered_stderr().powi(2)).sqrt();
    let diff = (a.ber - b.ber).abs();
    if se == 0.0 {
        return if diff == 0.0 { 1.0 } else { 0.0 };
    }
    2.0 * normal_sf(diff / se)
}

/// Writes a codeword across `t` fresh arrays with Bernoulli(`q`) filler.
///
/// Returns the arrays and the cell positions used in each array; bit
/// `s·(N/t) + i` of the codeword sits at `positions[i]` of array `s`.
pub fn store_codeword(
    codeword: &[u8],
    t: usize,
    m: usize,
    n: usize,
    q: f64,
    p_f: f64,
    rng_seed: u64,
) -> Result<(Vec<CrossbarState>, Vec<usize>)> {
    let segment = segment_len(codeword.len(), t, m, n)?;
    let positions: Vec<usize> = (0..segment).collect();
    let arrays = (0..t)
        .map(|a| {
            let mut rng = seed::rng_at(rng_seed, &[tag::ARRAY, a as u64]);
            let mut state = generate_array_with(m, n, q, p_f, &mut rng)?;
            let bits: Vec<bool> = codeword[a * segment..(a + 1) * segment].iter().map(|&b| b == 1).collect();
            state.write_cells(&positions, &bits);
            Ok(state)
        })
        .collect::<Result<_>>()?;
    Ok((arrays, positions))
}

fn segment_len(len: usize, t: usize, m: usize, n: usize) -> Result<usize> {
    if t == 0 || !len.is_multiple_of(t) {
        return Err(Error::invalid("T", format!("{t} does not divide the codeword length {len}")));
    }
    let needed = len / t;
    if needed > m * n {
        return Err(Error::CapacityExceeded { needed, m, n });
    }
    Ok(needed)
}

/// A configured experiment with its code and shaper built once.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    code: IraCodeSpec,
    shaper: ShaperSpec,
    params: ChannelParams,
    epsilon_q: f64,
    segment: usize,
    positions: Vec<usize>,
    pool: Vec<f64>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let code = config.code.build()?;
        let shaper = config.shaper.build(code.n())?;
        let q = shaper.q();
        let params = config.channel.params(q)?;
        let (m, n) = (config.m, config.n);
        let segment = segment_len(code.n(), config.t, m, n)?;
        for (name, v) in [("global_iters", config.global_iters), ("inner_iters", config.inner_iters), ("decoder_iters", config.decoder_iters)] {
            if v == 0 {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        let epsilon_q = sneak_rate_exact(m, n, q, params.p_f())?;
        let positions = match config.placement {
            Placement::RowMajor => (0..segment).collect(),
            Placement::Random => {
                let mut cells: Vec<usize> = (0..m * n).collect();
                cells.shuffle(&mut seed::rng_at(config.seed, &[tag::DATA]));
                cells.truncate(segment);
                cells
            }
        };
        let pool = if config.kind == ChannelKind::BlockVarying {
            if config.pmf_pool == 0 {
                return Err(Error::invalid("pmf_pool", "block-varying channel needs sampled rates"));
            }
            sample_sneak_rates(m, n, q, params.p_f(), 1, config.pmf_pool, seed::derive(config.seed, &[tag::PMF]))?
        } else {
            Vec::new()
        };
        Ok(Experiment { config, code, shaper, params, epsilon_q, segment, positions, pool })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }
    pub fn code(&self) -> &IraCodeSpec {
        &self.code
    }
    pub fn shaper(&self) -> &ShaperSpec {
        &self.shaper
    }
    pub fn params(&self) -> &ChannelParams {
        &self.params
    }
    pub fn epsilon_q(&self) -> f64 {
        self.epsilon_q
    }
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Same experiment with a different channel kind; reuses code and shaper.
    pub fn with_kind(&self, kind: ChannelKind) -> Result<Self> {
        let mut config = self.config.clone();
        config.kind = kind;
        Experiment::new(config)
    }

    /// Sneak indicators of the segment cells of array `a`.
    fn segment_sneaks(&self, a: usize, bits: &[bool], trial_seed: u64) -> Result<Vec<bool>> {
        let mut rng = seed::rng_at(trial_seed, &[tag::ARRAY, a as u64]);
        let iid = |eps: f64, rng: &mut seed::SimRng| -> Vec<bool> {
            bits.iter().map(|&b| !b && rng.random::<f64>() < eps).collect()
        };
        Ok(match self.config.kind {
            ChannelKind::Reram => {
                let c = &self.config;
                let mut state = generate_array_with(c.m, c.n, self.params.q(), self.params.p_f(), &mut rng)?;
                state.write_cells(&self.positions, bits);
                let map = sneak_map(&state);
                self.positions.iter().map(|&p| map[p]).collect()
            }
            ChannelKind::BlockVarying => {
                let eps = self.pool[rng.random_range(0..self.pool.len())];
                iid(eps, &mut rng)
            }
            ChannelKind::Iid => iid(self.epsilon_q, &mut rng),
        })
    }

    /// Trial `index` at noise level `sigma`. Everything random except the
    /// noise scale is fixed by `(seed, index)`, so σ sweeps share data,
    /// arrays and standard-normal noise draws.
    pub fn run_trial(&self, index: u64, sigma: f64) -> Result<TrialResult> {
        let params = self.params.with_sigma(sigma)?;
        let trial_seed = seed::derive(self.config.seed, &[tag::TRIAL, index]);
        let mut info_rng = seed::rng_at(trial_seed, &[tag::INFO]);
        let info: Vec<u8> = (0..self.code.k()).map(|_| info_rng.random::<bool>() as u8).collect();
        let codeword = encode(&self.code, &info)?;
        let stored = shape(&self.shaper, &codeword)?;

        let t = self.config.t;
        let mut llrs = Vec::with_capacity(stored.len());
        let mut epsilon_hats = Vec::with_capacity(t);
        let mut epsilon_truth = Vec::with_capacity(t);
        for (a, seg) in stored.chunks_exact(self.segment).enumerate() {
            let bits: Vec<bool> = seg.iter().map(|&b| b == 1).collect();
            let sneaks = self.segment_sneaks(a, &bits, trial_seed)?;
            let mut noise = seed::rng_at(trial_seed, &[tag::NOISE, a as u64]);
            let y: Vec<f64> = bits
                .iter()
                .zip(&sneaks)
                .map(|(&b, &e)| {
                    let z: f64 = noise.sample(StandardNormal);
                    params.level(b, e) + sigma * z
                })
                .collect();
            let zeros = bits.iter().filter(|&&b| !b).count();
            let hits = sneaks.iter().filter(|&&e| e).count();
            epsilon_truth.push(if zeros > 0 { hits as f64 / zeros as f64 } else { 0.0 });
            let eps = if self.config.estimate {
                estimate_epsilon(&y, &params, self.epsilon_q).epsilon_hat
            } else {
                self.epsilon_q
            };
            epsilon_hats.push(eps);
            llrs.extend(y.iter().map(|&v| ese_llr(v, eps, &params)));
        }

        let mut decoder = IraDecoder::new(&self.code);
        let mut deshaper = Deshaper::new(&self.shaper);
        let mut ecc_priors = vec![0.0; self.code.n()];
        let mut decisions = vec![0u8; self.code.k()];
        let mut converged = false;
        let mut global_iterations = 0;
        for _ in 0..self.config.global_iters {
            global_iterations += 1;
            let to_ecc = deshaper.run(&self.shaper, &llrs, &ecc_priors, self.config.inner_iters)?;
            let out = decoder.run(&to_ecc, self.config.decoder_iters)?;
            ecc_priors = out.extrinsic.into_inner();
            decisions = out.info_bits;
            if out.converged {
                converged = true;
                break;
            }
        }
        let bit_errors = decisions.iter().zip(&info).filter(|(a, b)| a != b).count() as u64;
        Ok(TrialResult {
            bit_errors,
            info_bits: self.code.k() as u64,
            converged,
            global_iterations,
            epsilon_hats,
            epsilon_truth,
        })
    }

    /// Runs trials `first..first + count` in parallel, results in order.
    pub fn run_trials(&self, first: u64, count: u64, sigma: f64) -> Result<Vec<TrialResult>> {
        (first..first + count).into_par_iter().map(|i| self.run_trial(i, sigma)).collect()
    }

    /// BER at every σ of `sigmas` under `stop`. Batches are fixed, so the
    /// result does not depend on the thread count.
    pub fn ber_sweep(&self, sigmas: &[f64], stop: StopRule) -> Result<Vec<BerPoint>> {
        let batch = stop.batch.max(1);
        sigmas
            .iter()
            .map(|&sigma| {
                let mut errors = Vec::new();
                let mut total = 0u64;
                while (errors.len() as u64) < stop.trials_cap && total < stop.errors_target {
                    let count = batch.min(stop.trials_cap - errors.len() as u64);
                    for r in self.run_trials(errors.len() as u64, count, sigma)? {
                        total += r.bit_errors;
                        errors.push(r.bit_errors);
                    }
                }
                Ok(BerPoint::from_trials(sigma, self.config.t, self.code.k() as u64, errors))
            })
            .collect()
    }

    /// Sweep with the config's own grid and stopping rule.
    pub fn default_sweep(&self) -> Result<Vec<BerPoint>> {
        self.ber_sweep(&self.config.sigma_grid(), StopRule::new(self.config.errors_target, self.config.trials))
    }
}

/// One trial of the configured experiment at `config.channel.sigma`.
pub fn run_trial(config: &ExperimentConfig) -> Result<TrialResult> {
    Experiment::new(config.clone())?.run_trial(0, config.channel.sigma)
}

/// As [`run_trial`] on the synthesized block-varying channel.
pub fn run_blockvary_trial(config: &ExperimentConfig) -> Result<TrialResult> {
    let mut config = config.clone();
    config.kind = ChannelKind::BlockVarying;
    run_trial(&config)
}

/// Sweep over `sigma_grid` with the config's stopping rule.
pub fn ber_sweep(config: &ExperimentConfig, sigma_grid: &[f64]) -> Result<Vec<BerPoint>> {
    Experiment::new(config.clone())?.ber_sweep(sigma_grid, StopRule::new(config.errors_target, config.trials))
}

/// Mean squared errors of the per-array estimate and of the fixed ε_q,
/// both against each array's empirical sneak-path rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationMse {
    pub sigma: f64,
    pub mse_estimated: f64,
    pub mse_average: f64,
    pub arrays: usize,
}

pub fn estimation_mse(m: usize, n: usize, params: &ChannelParams, arrays: usize, rng_seed: u64) -> Result<EstimationMse> {
    if arrays == 0 {
        return Err(Error::invalid("arrays", "need at least one array"));
    }
    let q = params.q();
    let eps_q = sneak_rate_exact(m, n, q, params.p_f())?;
    let sigma = params.sigma();
    let sq: Vec<(f64, f64)> = (0..arrays as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = seed::rng_at(rng_seed, &[tag::ARRAY, s]);
            let state = generate_array_with(m, n, q, params.p_f(), &mut rng)?;
            let read = crate::crossbar::read_array_with(&state, params, &mut seed::rng_at(rng_seed, &[tag::NOISE, s]));
            let zeros = state.zero_count();
            let truth = if zeros > 0 { read.sneak.iter().filter(|&&e| e).count() as f64 / zeros as f64 } else { 0.0 };
            let est = estimate_epsilon(&read.values, params, eps_q).epsilon_hat;
            Ok(((est - truth).powi(2), (eps_q - truth).powi(2)))
        })
        .collect::<Result<_>>()?;
    let k = arrays as f64;
    Ok(EstimationMse {
        sigma,
        mse_estimated: sq.iter().map(|x| x.0).sum::<f64>() / k,
        mse_average: sq.iter().map(|x| x.1).sum::<f64>() / k,
        arrays,
    })
}

/// Code and shaper descriptors used by the shipped configurations.
pub mod presets {
    use super::*;
    use crate::shaper::InterleaverKind;

    pub const LAMBDA_64: [(usize, f64); 2] = [(3, 0.567736), (50, 0.432264)];
    pub const A_64: usize = 6;
    pub const LAMBDA_128: [(usize, f64); 2] = [(3, 0.501564), (50, 0.498436)];
    pub const A_128: usize = 4;

    pub fn code(lambda: &[(usize, f64)], a: usize, n: usize, seed: u64) -> CodeDescriptor {
        CodeDescriptor {
            degrees: lambda.iter().map(|x| x.0).collect(),
            fractions: lambda.iter().map(|x| x.1).collect(),
            a,
            n,
            seed,
        }
    }

    pub fn shaper(l: usize, q: f64, interleaver: InterleaverKind, seed: u64) -> ShaperDescriptor {
        ShaperDescriptor { l, q: Some(q), table: None, interleaver, seed }
    }

    /// Reference rate-0.54 code for 64×64 arrays with Mapping A, scaled to length `n_code`.
    pub fn table_64(n_code: usize, t: usize) -> ExperimentConfig {
        ExperimentConfig {
            m: 64,
            n: 64,
            t,
            code: code(&LAMBDA_64, A_64, n_code, 1),
            shaper: shaper(4, 5.0 / 16.0, InterleaverKind::Structured, 1),
            channel: ChannelSection::default(),
            kind: ChannelKind::Reram,
            estimate: true,
            placement: Placement::RowMajor,
            global_iters: defaults::global_iters(),
            inner_iters: defaults::inner_iters(),
            decoder_iters: DEFAULT_DECODER_ITERS,
            trials: defaults::trials(),
            errors_target: defaults::errors_target(),
            pmf_pool: defaults::pmf_pool(),
            sigmas: Vec::new(),
            seed: 1,
        }
    }

    /// Reference rate-0.41 code for 128×128 arrays with Mapping B, scaled to length `n_code`.
    pub fn table_128(n_code: usize, t: usize) -> ExperimentConfig {
        ExperimentConfig {
            m: 128,
            n: 128,
            code: code(&LAMBDA_128, A_128, n_code, 1),
            shaper: shaper(4, 3.0 / 16.0, InterleaverKind::Structured, 1),
            ..table_64(n_code, t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(t: usize) -> ExperimentConfig {
        let mut c = presets::table_64(1024, t);
        c.global_iters = 10;
        c.decoder_iters = 20;
        c
    }

    #[test]
    fn store_single_array_no_filler() {
        let mut rng = seed::rng(1);
        let cw: Vec<u8> = (0..64).map(|_| rng.random::<bool>() as u8).collect();
        let (arrays, pos) = store_codeword(&cw, 1, 8, 8, 0.3, 0.0, 2).unwrap();
        assert_eq!(pos, (0..64).collect::<Vec<_>>());
        let data: Vec<u8> = arrays[0].data().iter().map(|&b| b as u8).collect();
        assert_eq!(data, cw);
    }

    #[test]
    fn store_four_arrays_invertible() {
        let mut rng = seed::rng(3);
        let cw: Vec<u8> = (0..64).map(|_| rng.random::<bool>() as u8).collect();
        let (arrays, pos) = store_codeword(&cw, 4, 8, 8, 0.3, 0.0, 2).unwrap();
        let back: Vec<u8> = arrays
            .iter()
            .flat_map(|a| pos.iter().map(move |&p| a.data()[p] as u8))
            .collect();
        assert_eq!(back, cw);
        assert!(matches!(store_codeword(&cw, 1, 4, 4, 0.3, 0.0, 2), Err(Error::CapacityExceeded { .. })));
        assert!(store_codeword(&cw, 3, 8, 8, 0.3, 0.0, 2).is_err());
    }

    #[test]
    fn filler_has_bias_q() {
        let cw = vec![0u8; 16];
        let mut ones = 0usize;
        let mut cells = 0usize;
        for s in 0..50 {
            let (arrays, _) = store_codeword(&cw, 1, 32, 32, 0.25, 0.0, s).unwrap();
            ones += arrays[0].data()[16..].iter().filter(|&&b| b).count();
            cells += 32 * 32 - 16;
        }
        let p = ones as f64 / cells as f64;
        let se = (0.25f64 * 0.75 / cells as f64).sqrt();
        assert!((p - 0.25).abs() < 3.0 * se, "{p}");
    }

    #[test]
    fn noiseless_trial_is_error_free() {
        let mut c = small(4);
        c.channel.p_f = 0.0;
        c.channel.sigma = 0.01;
        let r = run_trial(&c).unwrap();
        assert_eq!(r.bit_errors, 0);
        assert!(r.converged);
        assert!(r.epsilon_truth.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn trials_are_reproducible() {
        let exp = Experiment::new(small(4)).unwrap();
        assert_eq!(exp.run_trial(5, 120.0).unwrap(), exp.run_trial(5, 120.0).unwrap());
        let again = Experiment::new(small(4)).unwrap();
        assert_eq!(exp.run_trial(5, 120.0).unwrap(), again.run_trial(5, 120.0).unwrap());
    }

    #[test]
    fn random_placement_uses_distinct_cells() {
        let mut c = small(1);
        c.placement = Placement::Random;
        let exp = Experiment::new(c).unwrap();
        let mut p = exp.positions().to_vec();
        p.sort_unstable();
        p.dedup();
        assert_eq!(p.len(), 1024);
        assert!(exp.positions().iter().any(|&x| x >= 1024));
    }

    #[test]
    fn config_round_trip_and_validation() {
        let c = small(2);
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        let mut bad = small(3);
        bad.t = 3;
        assert!(Experiment::new(bad).is_err());
        let mut bad = small(1);
        bad.m = 16;
        bad.n = 16;
        assert!(matches!(Experiment::new(bad), Err(Error::CapacityExceeded { .. })));
    }

    #[test]
    fn sweep_stop_rule_and_csv() {
        let exp = Experiment::new(small(1)).unwrap();
        let pts = exp.ber_sweep(&[300.0], StopRule { errors_target: 1, trials_cap: 64, batch: 4 }).unwrap();
        assert_eq!(pts[0].trials, 4);
        assert!(pts[0].bit_errors >= 1);
        let csv = ber_csv(&pts);
        assert!(csv.starts_with(BER_CSV_HEADER));
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn p_value_of_identical_points_is_one() {
        let a = BerPoint::from_trials(1.0, 1, 100, vec![0, 3, 5, 0]);
        assert_eq!(two_proportion_p_value(&a, &a), 1.0);
        let b = BerPoint::from_trials(1.0, 1, 100, vec![90, 95, 99, 97]);
        assert!(two_proportion_p_value(&a, &b) < 1e-6);
    }
}
