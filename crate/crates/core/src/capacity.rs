//! Mutual information of the (ε, σ)-channel and capacity bounds of the
//! block-varying channel.
//!
//! The (ε, σ)-channel maps bit 1 to `R1` and bit 0 to `R0'` with probability
//! ε (else `R0`), then adds N(0, σ²) noise. For input Bernoulli(q):
//!
//! ```text
//! I(X;Y) = h(Y) - q h(N(0,σ²)) - (1-q) h(Y | X=0)
//! ```
//!
//! Differential entropies are integrated with composite Simpson over
//! `±10σ` windows around the three levels at step `σ/50`.

use rayon::prelude::*;

use crate::crossbar::{sample_sneak_rates, sneak_rate_exact, ChannelParams};
use crate::error::{check_probability, Error, Result};
use crate::numerics::{binary_entropy, gaussian_entropy_bits, mean_and_stderr, merged_windows};
use crate::seed;

/// Integration half-width in units of σ.
pub const WINDOW_SIGMAS: f64 = 10.0;
/// Steps per σ.
pub const STEPS_PER_SIGMA: f64 = 50.0;
/// Accepted difference between the σ/50 and σ/25 Simpson estimates.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;
/// Densities below this contribute nothing to `p log p`.
const DENSITY_FLOOR: f64 = 1e-300;

/// Binary-input channel with ternary noiseless levels and Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsChannel {
    pub epsilon: f64,
    pub params: ChannelParams,
}

impl EsChannel {
    pub fn new(epsilon: f64, params: ChannelParams) -> Result<Self> {
        check_probability("epsilon", epsilon)?;
        Ok(EsChannel { epsilon, params })
    }
}

/// Mutual information `I(X;Y)` in bits per cell for input Bernoulli(`q`).
pub fn mutual_information(channel: &EsChannel, q: f64) -> Result<f64> {
    let (value, err) = mutual_information_with_error(channel, q)?;
    if err > QUADRATURE_TOLERANCE {
        return Err(Error::QuadratureNotConverged { achieved: err, tolerance: QUADRATURE_TOLERANCE });
    }
    Ok(value)
}

/// Mutual information and the difference between the σ/50 and σ/25 Simpson
/// estimates (zero for the exact σ = 0 case).
pub fn mutual_information_with_error(channel: &EsChannel, q: f64) -> Result<(f64, f64)> {
    check_probability("q", q)?;
    if q == 0.0 || q == 1.0 {
        return Ok((0.0, 0.0));
    }
    let p = &channel.params;
    let eps = channel.epsilon;
    let sigma = p.sigma();
    if sigma == 0.0 {
        return Ok((discrete_information(eps, q), 0.0));
    }

    let (r1, r0p, r0) = (p.r1(), p.r0_prime(), p.r0());
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
    let inv2s2 = 1.0 / (2.0 * sigma * sigma);
    let plogp = |x: f64| if x < DENSITY_FLOOR { 0.0 } else { x * x.log2() };
    // -p_Y log p_Y + (1-q) p_{Y|0} log p_{Y|0}
    let integrand = |y: f64| {
        let g = |mu: f64| norm * (-(y - mu) * (y - mu) * inv2s2).exp();
        let p0 = eps * g(r0p) + (1.0 - eps) * g(r0);
        let py = (1.0 - q) * p0 + q * g(r1);
        -plogp(py) + (1.0 - q) * plogp(p0)
    };

    let step = sigma / STEPS_PER_SIGMA;
    let mut fine = 0.0;
    let mut coarse = 0.0;
    for (a, b) in merged_windows(&[r1, r0p, r0], WINDOW_SIGMAS * sigma) {
        // Interval count divisible by 4 so the coarse rule reuses even points.
        let mut k = ((b - a) / step).ceil() as usize;
        k = k.div_ceil(4) * 4;
        let h = (b - a) / k as f64;
        let mut sf = 0.0;
        let mut sc = 0.0;
        for i in 0..=k {
            let f = integrand(a + i as f64 * h);
            let wf = if i == 0 || i == k { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            sf += wf * f;
            if i % 2 == 0 {
                let j = i / 2;
                let wc = if j == 0 || j == k / 2 { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
                sc += wc * f;
            }
        }
        fine += sf * h / 3.0;
        coarse += sc * 2.0 * h / 3.0;
    }
    let gauss = q * gaussian_entropy_bits(sigma);
    let value = (fine - gauss).max(0.0);
    Ok((value, (fine - coarse).abs()))
}

/// σ = 0: the outputs `R1`, `R0'`, `R0` are distinct, so `I = H(Y) - (1-q) H_b(ε)`.
fn discrete_information(eps: f64, q: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    let hy = h(q) + h((1.0 - q) * eps) + h((1.0 - q) * (1.0 - eps));
    (hy - (1.0 - q) * binary_entropy(eps)).max(0.0)
}

/// Lower bound `C_q(ε_q, σ)`: the channel at the mean sneak-path rate.
pub fn lower_bound(params: &ChannelParams, m: usize, n: usize) -> Result<f64> {
    let eps = sneak_rate_exact(m, n, params.q(), params.p_f())?;
    mutual_information(&EsChannel::new(eps, *params)?, params.q())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Minimum number of arrays for [`upper_bound`].
pub const MIN_UPPER_SAMPLES: usize = 100;

/// Upper bound `Σ_ε F(ε) C_q(ε, σ)` by averaging over sneak-path rates of
/// independently sampled single arrays.
pub fn upper_bound(
    params: &ChannelParams,
    m: usize,
    n: usize,
    samples: usize,
    rng_seed: u64,
) -> Result<BoundEstimate> {
    if samples < MIN_UPPER_SAMPLES {
        return Err(Error::invalid("samples", format!("need at least {MIN_UPPER_SAMPLES}")));
    }
    let rates = sample_sneak_rates(m, n, params.q(), params.p_f(), 1, samples, rng_seed)?;
    upper_bound_from_rates(params, &rates)
}

/// Averages `C_q(ε_i, σ)` over given per-array rates (clamped to `[0, 1]`).
pub fn upper_bound_from_rates(params: &ChannelParams, rates: &[f64]) -> Result<BoundEstimate> {
    let values: Vec<f64> = rates
        .par_iter()
        .map(|&e| mutual_information(&EsChannel::new(e.clamp(0.0, 1.0), *params)?, params.q()))
        .collect::<Result<_>>()?;
    let (mean, std_err) = mean_and_stderr(&values);
    Ok(BoundEstimate { mean, std_err })
}

/// `k/64` for `k = 1..=63`.
pub fn default_q_grid() -> Vec<f64> {
    (1..64).map(|k| k as f64 / 64.0).collect()
}

/// Grid point maximising the lower bound; ties go to the smaller q.
pub fn optimize_q(params: &ChannelParams, m: usize, n: usize, q_grid: &[f64]) -> Result<(f64, f64)> {
    if q_grid.is_empty() {
        return Err(Error::invalid("q_grid", "grid is empty"));
    }
    let values: Vec<(f64, f64)> = q_grid
        .par_iter()
        .map(|&q| Ok((q, lower_bound(&params.with_q(q)?, m, n)?)))
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold((f64::NAN, f64::NEG_INFINITY), |best, (q, v)| {
        if v > best.1 || (v == best.1 && q < best.0) {
            (q, v)
        } else {
            best
        }
    }))
}

/// Lower and upper bounds across a q grid for one array size and noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub m: usize,
    pub n: usize,
    pub sigma: f64,
    /// Block length `M = m·n` of the equivalent block-varying channel.
    pub block_length: usize,
    pub q_grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub upper_stderr: Vec<f64>,
    pub argmax_q_lower: f64,
    pub max_lower: f64,
}

impl CapacityReport {
    /// Evaluates both bounds at every grid point; the upper bound uses
    /// `samples` arrays per point.
    pub fn compute(
        params: &ChannelParams,
        m: usize,
        n: usize,
        q_grid: &[f64],
        samples: usize,
        rng_seed: u64,
    ) -> Result<Self> {
        if q_grid.is_empty() {
            return Err(Error::invalid("q_grid", "grid is empty"));
        }
        let mut lower = Vec::with_capacity(q_grid.len());
        let mut upper = Vec::with_capacity(q_grid.len());
        let mut upper_stderr = Vec::with_capacity(q_grid.len());
        for (k, &q) in q_grid.iter().enumerate() {
            let p = params.with_q(q)?;
            lower.push(lower_bound(&p, m, n)?);
            let ub = upper_bound(&p, m, n, samples, seed::derive(rng_seed, &[k as u64]))?;
            upper.push(ub.mean);
            upper_stderr.push(ub.std_err);
        }
        let (argmax_q_lower, max_lower) = q_grid
            .iter()
            .zip(&lower)
            .fold((f64::NAN, f64::NEG_INFINITY), |best, (&q, &v)| {
                if v > best.1 || (v == best.1 && q < best.0) {
                    (q, v)
                } else {
                    best
                }
            });
        Ok(CapacityReport {
            m,
            n,
            sigma: params.sigma(),
            block_length: m * n,
            q_grid: q_grid.to_vec(),
            lower,
            upper,
            upper_stderr,
            argmax_q_lower,
            max_lower,
        })
    }

    /// `q,lower,upper,stderr` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("q,lower,upper,stderr\n");
        for i in 0..self.q_grid.len() {
            s.push_str(&format!(
                "{:.8},{:.8},{:.8},{:.8}\n",
                self.q_grid[i], self.lower[i], self.upper[i], self.upper_stderr[i]
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{binary_entropy, normal_pdf};

    fn chan(eps: f64, sigma: f64) -> EsChannel {
        EsChannel::new(eps, ChannelParams::reference(sigma, 0.5).unwrap()).unwrap()
    }

    #[test]
    fn deterministic_input_carries_nothing() {
        for &(e, s) in &[(0.0, 10.0), (0.3, 100.0), (1.0, 0.0)] {
            assert_eq!(mutual_information(&chan(e, s), 0.0).unwrap(), 0.0);
            assert_eq!(mutual_information(&chan(e, s), 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn separable_outputs_reach_input_entropy() {
        for &q in &[0.1, 0.3125, 0.5, 0.8] {
            for &s in &[0.0, 0.5, 1.0] {
                let v = mutual_information(&chan(0.0, s), q).unwrap();
                assert!((v - binary_entropy(q)).abs() < 1e-6, "q={q} s={s}: {v}");
            }
        }
    }

    // Independent oracle: plain Riemann sum over a wide range at σ/500.
    fn riemann_information(eps: f64, q: f64, sigma: f64) -> f64 {
        let (r1, r0p, r0) = (100.0, 200.0, 1000.0);
        let h = sigma / 500.0;
        let (lo, hi) = (r1 - 12.0 * sigma, r0 + 12.0 * sigma);
        let mut hy = 0.0;
        let mut hy0 = 0.0;
        let mut y = lo;
        while y <= hi {
            let p0 = eps * normal_pdf(y, r0p, sigma) + (1.0 - eps) * normal_pdf(y, r0, sigma);
            let py = (1.0 - q) * p0 + q * normal_pdf(y, r1, sigma);
            if py > 0.0 {
                hy -= py * py.log2() * h;
            }
            if p0 > 0.0 {
                hy0 -= p0 * p0.log2() * h;
            }
            y += h;
        }
        let hn = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sigma * sigma).log2();
        hy - q * hn - (1.0 - q) * hy0
    }

    #[test]
    fn agrees_with_refined_riemann_sum() {
        let v = mutual_information(&chan(0.5, 100.0), 0.5).unwrap();
        let oracle = riemann_information(0.5, 0.5, 100.0);
        assert!((v - oracle).abs() < 1e-4, "{v} vs {oracle}");
        let v = mutual_information(&chan(0.12, 60.0), 0.3).unwrap();
        let oracle = riemann_information(0.12, 0.3, 60.0);
        assert!((v - oracle).abs() < 1e-4, "{v} vs {oracle}");
    }

    #[test]
    fn halving_step_is_stable() {
        for &s in &[30.0, 50.0, 100.0, 200.0] {
            for &e in &[0.0, 0.2, 0.9] {
                let (_, err) = mutual_information_with_error(&chan(e, s), 0.4).unwrap();
                assert!(err < 1e-6, "s={s} e={e} err={err}");
            }
        }
    }

    #[test]
    fn nonincreasing_in_epsilon_and_sigma() {
        for &s in &[30.0, 100.0] {
            let mut prev = f64::INFINITY;
            for k in 0..=20 {
                let v = mutual_information(&chan(k as f64 / 20.0, s), 0.4).unwrap();
                assert!(v <= prev + 1e-9, "eps step {k}: {v} > {prev}");
                prev = v;
            }
        }
        let mut prev = f64::INFINITY;
        for s in (1..=30).map(|k| k as f64 * 10.0) {
            let v = mutual_information(&chan(0.2, s), 0.3).unwrap();
            assert!(v <= prev + 1e-9, "sigma {s}: {v} > {prev}");
            prev = v;
        }
    }

    #[test]
    fn lower_bound_at_zero_failure_rate() {
        let p = ChannelParams::reference(100.0, 0.3).unwrap().with_p_f(0.0).unwrap();
        let lb = lower_bound(&p, 64, 64).unwrap();
        let direct = mutual_information(&EsChannel::new(0.0, p).unwrap(), 0.3).unwrap();
        assert_eq!(lb, direct);
    }

    #[test]
    fn lower_bound_falls_with_array_size() {
        let p = ChannelParams::reference(50.0, 0.3).unwrap();
        let mut prev = f64::INFINITY;
        for &m in &[32, 64, 128, 256] {
            let v = lower_bound(&p, m, m).unwrap();
            assert!(v < prev, "{m}: {v} >= {prev}");
            prev = v;
        }
    }

    #[test]
    fn optimize_q_edge_cases() {
        let p = ChannelParams::reference(100.0, 0.5).unwrap();
        assert_eq!(optimize_q(&p, 64, 64, &[0.3]).unwrap().0, 0.3);
        assert!(optimize_q(&p, 64, 64, &[]).is_err());
    }

    #[test]
    fn upper_bound_degenerate_pmf() {
        let p = ChannelParams::reference(100.0, 0.0).unwrap();
        let ub = upper_bound(&p, 16, 16, 100, 1).unwrap();
        assert_eq!(ub.mean, 0.0);
        let p = ChannelParams::reference(100.0, 0.3).unwrap().with_p_f(0.0).unwrap();
        let ub = upper_bound(&p, 16, 16, 100, 1).unwrap();
        let direct = mutual_information(&EsChannel::new(0.0, p).unwrap(), 0.3).unwrap();
        assert!((ub.mean - direct).abs() < 1e-12);
        assert!(upper_bound(&p, 16, 16, 99, 1).is_err());
    }

    #[test]
    fn report_csv_layout() {
        let p = ChannelParams::reference(100.0, 0.5).unwrap();
        let r = CapacityReport::compute(&p, 16, 16, &[0.25, 0.5], 100, 3).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "q,lower,upper,stderr");
        assert_eq!(lines.len(), 3);
        assert_eq!(r.block_length, 256);
    }
}
