//! Monte Carlo density evolution of the joint de-shaper and IRA graph.
//!
//! The mapper is not symmetric, so messages into and out of a variable node
//! have different laws for the two bit values. Every population is kept as
//! a pair indexed by the true bit and holds plain LLRs. Variable nodes add
//! samples drawn with the same bit; check nodes draw the other bits
//! uniformly subject to the parity constraint.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::capacity::EsChannel;
use crate::detect::ese_llr;
use crate::error::{Error, Result};
use crate::llr::clamp_llr;
use crate::seed::{self, SimRng};
use crate::shaper::{InterleaverKind, MappingTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityConfig {
    /// Population size per message type and bit value.
    pub samples: usize,
    pub max_iters: usize,
    /// Info-bit error probability counted as converged.
    pub target_error: f64,
    pub seed: u64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig { samples: 100_000, max_iters: 150, target_error: 1e-5, seed: 1 }
    }
}

struct Sampler {
    cumulative: Vec<f64>,
    values: Vec<usize>,
}

impl Sampler {
    fn new(weights: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc = 0.0;
        let mut cumulative = Vec::new();
        let mut values = Vec::new();
        for (v, w) in weights {
            acc += w;
            cumulative.push(acc);
            values.push(v);
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        Sampler { cumulative, values }
    }

    fn draw(&self, rng: &mut SimRng) -> usize {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c < u);
        self.values[i.min(self.values.len() - 1)]
    }
}

/// Message population split by the value of the bit it concerns.
#[derive(Clone)]
struct Pop([Vec<f64>; 2]);

impl Pop {
    fn zeros(s: usize) -> Self {
        Pop([vec![0.0; s], vec![0.0; s]])
    }

    #[inline]
    fn pick(&self, bit: usize, rng: &mut SimRng) -> f64 {
        let p = &self.0[bit];
        p[rng.random_range(0..p.len())]
    }

    /// Refills both halves with `f(bit)` samples.
    fn fill(&mut self, rng: &mut SimRng, mut f: impl FnMut(usize, &mut SimRng) -> f64) {
        for bit in 0..2 {
            for i in 0..self.0[bit].len() {
                self.0[bit][i] = clamp_llr(f(bit, rng));
            }
        }
    }
}

/// Check-node output toward an edge whose bit is `bit`. The remaining
/// edges are drawn from `others` (one population per edge) with uniform
/// bits whose parity matches `bit`.
fn check_sample(bit: usize, others: &[&Pop], rng: &mut SimRng) -> f64 {
    let mut parity = bit;
    let mut prod = 1.0;
    let last = others.len() - 1;
    for (i, pop) in others.iter().enumerate() {
        let b = if i == last { parity } else { rng.random_range(0..2) };
        parity ^= b;
        prod *= (0.5 * pop.pick(b, rng)).tanh();
    }
    2.0 * prod.atanh()
}

/// Runs density evolution at the channel's σ; returns whether the info-bit
/// error probability fell below the target and its final value.
pub fn de_converges(
    lambda: &[(usize, f64)],
    a: usize,
    table: &MappingTable,
    interleaver: InterleaverKind,
    channel: &EsChannel,
    config: &DensityConfig,
) -> Result<(bool, f64)> {
    let rate = super::rate_of(lambda, a)?;
    if config.samples == 0 || config.max_iters == 0 {
        return Err(Error::invalid("samples", "population and iteration counts must be positive"));
    }
    let s = config.samples;
    let l = table.l();
    let params = &channel.params;
    let eps = channel.epsilon;
    let sigma = params.sigma();
    let edge_degree = Sampler::new(lambda.iter().copied());
    let inv_avg: f64 = lambda.iter().map(|&(d, f)| f / d as f64).sum();
    let node_degree = Sampler::new(lambda.iter().map(|&(d, f)| (d, f / d as f64 / inv_avg)));
    let mut rng = seed::rng(config.seed);

    let mut m2v = vec![Pop::zeros(s); l];
    let mut v2m = vec![Pop::zeros(s); l];
    let mut to_ecc = Pop::zeros(s);
    let mut from_ecc = Pop::zeros(s);
    let mut c2i = Pop::zeros(s);
    let mut c2p = Pop::zeros(s);
    let mut vi = Pop::zeros(s);
    let mut vp = Pop::zeros(s);
    let mut weights = vec![0.0; 1 << l];
    let mut priors = vec![0.0; l];
    let mut out = vec![0.0; l];
    let mut bits = vec![0usize; l];
    let mut error = 1.0;

    let slot_for = |k: usize, rng: &mut SimRng| match interleaver {
        InterleaverKind::Structured => k,
        InterleaverKind::Random => rng.random_range(0..l),
    };

    for _ in 0..config.max_iters {
        // Repetition nodes toward the mappers.
        for (k, pop) in v2m.iter_mut().enumerate() {
            pop.fill(&mut rng, |bit, rng| {
                let mut sum = from_ecc.pick(bit, rng);
                for j in (0..l).filter(|&j| j != k) {
                    sum += m2v[slot_for(j, rng)].pick(bit, rng);
                }
                sum
            });
        }
        // Mapping nodes with sampled inputs and channel output.
        let mut next: Vec<[Vec<f64>; 2]> = vec![[Vec::with_capacity(s), Vec::with_capacity(s)]; l];
        while next.iter().any(|p| p[0].len() < s || p[1].len() < s) {
            let mut pattern = 0usize;
            for k in 0..l {
                bits[k] = rng.random_range(0..2);
                pattern |= bits[k] << k;
                priors[k] = v2m[k].pick(bits[k], &mut rng);
            }
            let level = if table.output(pattern) {
                params.r1()
            } else if rng.random::<f64>() < eps {
                params.r0_prime()
            } else {
                params.r0()
            };
            let z: f64 = rng.sample(StandardNormal);
            let lx = ese_llr(level + sigma * z, eps, params);
            table.extrinsic_into(lx, &priors, &mut weights, &mut out);
            for k in 0..l {
                let half = &mut next[k][bits[k]];
                if half.len() < s {
                    half.push(out[k]);
                }
            }
        }
        m2v = next.into_iter().map(Pop).collect();
        // Repetition nodes toward the code.
        to_ecc.fill(&mut rng, |bit, rng| (0..l).map(|k| m2v[slot_for(k, rng)].pick(bit, rng)).sum());
        // Code variables toward checks.
        vi.fill(&mut rng, |bit, rng| {
            let d = edge_degree.draw(rng);
            to_ecc.pick(bit, rng) + (1..d).map(|_| c2i.pick(bit, rng)).sum::<f64>()
        });
        vp.fill(&mut rng, |bit, rng| to_ecc.pick(bit, rng) + c2p.pick(bit, rng));
        // Checks: `a` info edges and two accumulator edges.
        let mut toward_info: Vec<&Pop> = vec![&vp, &vp];
        toward_info.extend(std::iter::repeat_n(&vi, a - 1));
        let mut toward_parity: Vec<&Pop> = vec![&vp];
        toward_parity.extend(std::iter::repeat_n(&vi, a));
        let mut new_c2i = Pop::zeros(s);
        new_c2i.fill(&mut rng, |bit, rng| check_sample(bit, &toward_info, rng));
        let mut new_c2p = Pop::zeros(s);
        new_c2p.fill(&mut rng, |bit, rng| check_sample(bit, &toward_parity, rng));
        c2i = new_c2i;
        c2p = new_c2p;
        // Code toward the shaper, and the info-bit error rate.
        let mut wrong = 0.0;
        let mut info = 0.0;
        for bit in 0..2 {
            for i in 0..s {
                let x = if rng.random::<f64>() < rate {
                    let d = node_degree.draw(&mut rng);
                    let sum: f64 = (0..d).map(|_| c2i.pick(bit, &mut rng)).sum();
                    let post = (sum + to_ecc.pick(bit, &mut rng)) * (1.0 - 2.0 * bit as f64);
                    info += 1.0;
                    if post < 0.0 {
                        wrong += 1.0;
                    } else if post == 0.0 {
                        wrong += 0.5;
                    }
                    sum
                } else {
                    c2p.pick(bit, &mut rng) + c2p.pick(bit, &mut rng)
                };
                from_ecc.0[bit][i] = clamp_llr(x);
            }
        }
        error = wrong / f64::max(info, 1.0);
        if error < config.target_error {
            return Ok((true, error));
        }
    }
    Ok((false, error))
}

/// Largest σ in `sigma_grid` at which density evolution converges, or
/// `None` if it fails everywhere. The grid is scanned from the top.
pub fn de_threshold(
    lambda: &[(usize, f64)],
    a: usize,
    table: &MappingTable,
    interleaver: InterleaverKind,
    channel: &EsChannel,
    sigma_grid: &[f64],
    config: &DensityConfig,
) -> Result<Option<f64>> {
    if sigma_grid.is_empty() {
        return Err(Error::invalid("sigma_grid", "empty grid"));
    }
    let mut grid = sigma_grid.to_vec();
    grid.sort_by(|x, y| y.total_cmp(x));
    for sigma in grid {
        let ch = EsChannel::new(channel.epsilon, channel.params.with_sigma(sigma)?)?;
        if de_converges(lambda, a, table, interleaver, &ch, config)?.0 {
            return Ok(Some(sigma));
        }
    }
    Ok(None)
}
