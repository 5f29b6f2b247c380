use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use reram::capacity::{default_q_grid, CapacityReport};
use reram::config::{self, ChannelSection};
use reram::crossbar::estimate_pmf;
use reram::pipeline::{ber_csv, estimation_mse, StopRule};
use reram::{seed, Experiment, ExperimentConfig};

use crate::CliError;

/// Resolved config text, seed and CSV body of one run.
pub type Output = (String, u64, String);

fn parse<T: DeserializeOwned>(text: &str, what: &'static str) -> Result<T, CliError> {
    config::from_toml(text, what).map_err(|e| CliError::Config(e.to_string()))
}

fn require(ok: bool, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

fn default_upper_samples() -> usize {
    200
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityConfig {
    /// `[m, n]` array sizes.
    pub arrays: Vec<[usize; 2]>,
    pub sigmas: Vec<f64>,
    #[serde(default = "default_q_grid")]
    pub q: Vec<f64>,
    /// Arrays sampled per grid point for the upper bound.
    #[serde(default = "default_upper_samples")]
    pub upper_samples: usize,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub seed: u64,
}

pub fn capacity(text: &str, seed_override: Option<u64>) -> Result<Output, CliError> {
    let mut cfg: CapacityConfig = parse(text, "capacity config")?;
    cfg.seed = seed_override.unwrap_or(cfg.seed);
    require(!cfg.q.is_empty(), "q grid is empty")?;
    require(!cfg.arrays.is_empty(), "no array sizes")?;
    require(!cfg.sigmas.is_empty(), "no sigma values")?;
    let base = cfg.channel.params(0.5).map_err(|e| CliError::Config(e.to_string()))?;

    let mut csv = String::from("m,n,sigma,q,lower,upper,upper_stderr\n");
    for (i, &[m, n]) in cfg.arrays.iter().enumerate() {
        for (j, &sigma) in cfg.sigmas.iter().enumerate() {
            let params = base.with_sigma(sigma).map_err(|e| CliError::Config(e.to_string()))?;
            let r = CapacityReport::compute(&params, m, n, &cfg.q, cfg.upper_samples, seed::derive(cfg.seed, &[i as u64, j as u64]))?;
            for k in 0..r.q_grid.len() {
                csv.push_str(&format!(
                    "{m},{n},{sigma},{:.8},{:.8},{:.8},{:.8}\n",
                    r.q_grid[k], r.lower[k], r.upper[k], r.upper_stderr[k]
                ));
            }
        }
    }
    Ok((config::to_toml(&cfg), cfg.seed, csv))
}

fn default_ts() -> Vec<usize> {
    vec![1]
}

fn default_pmf_samples() -> usize {
    10_000
}

fn default_p_f() -> f64 {
    1e-3
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmfConfig {
    pub m: usize,
    pub n: usize,
    pub q: Vec<f64>,
    /// Arrays per codeword.
    #[serde(default = "default_ts")]
    pub t: Vec<usize>,
    #[serde(default = "default_pmf_samples")]
    pub samples: usize,
    #[serde(default = "default_p_f")]
    pub p_f: f64,
    #[serde(default)]
    pub seed: u64,
}

pub fn pmf(text: &str, seed_override: Option<u64>) -> Result<Output, CliError> {
    let mut cfg: PmfConfig = parse(text, "pmf config")?;
    cfg.seed = seed_override.unwrap_or(cfg.seed);
    require(!cfg.q.is_empty(), "q list is empty")?;
    require(!cfg.t.is_empty(), "T list is empty")?;
    require(cfg.samples > 0, "samples must be positive")?;
    require(cfg.m > 0 && cfg.n > 0, "array dimensions must be positive")?;

    let mut csv = String::from("q,T,mean,std_dev,epsilon,probability\n");
    for (i, &q) in cfg.q.iter().enumerate() {
        for (j, &t) in cfg.t.iter().enumerate() {
            let p = estimate_pmf(cfg.m, cfg.n, q, cfg.p_f, t, cfg.samples, seed::derive(cfg.seed, &[i as u64, j as u64]))
                .map_err(|e| CliError::Config(e.to_string()))?;
            for (eps, prob) in &p.bins {
                csv.push_str(&format!("{q},{t},{:.8},{:.8},{eps:.8},{prob:.8}\n", p.mean, p.std_dev));
            }
        }
    }
    Ok((config::to_toml(&cfg), cfg.seed, csv))
}

pub fn ber(
    text: &str,
    seed_override: Option<u64>,
    trials_cap: Option<u64>,
    errors_target: Option<u64>,
) -> Result<Output, CliError> {
    let mut cfg = ExperimentConfig::from_toml(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.seed = seed_override.unwrap_or(cfg.seed);
    cfg.trials = trials_cap.unwrap_or(cfg.trials);
    cfg.errors_target = errors_target.unwrap_or(cfg.errors_target);
    require(cfg.trials > 0, "trials cap must be positive")?;
    let grid = cfg.sigma_grid();
    let exp = Experiment::new(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let c = exp.config();
    let points = exp.ber_sweep(&grid, StopRule::new(c.errors_target, c.trials))?;
    Ok((c.to_toml(), c.seed, ber_csv(&points)))
}

fn default_estimate_arrays() -> usize {
    1000
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub m: usize,
    pub n: usize,
    pub q: f64,
    pub sigmas: Vec<f64>,
    #[serde(default = "default_estimate_arrays")]
    pub arrays: usize,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub seed: u64,
}

pub fn estimate(text: &str, seed_override: Option<u64>) -> Result<Output, CliError> {
    let mut cfg: EstimateConfig = parse(text, "estimate config")?;
    cfg.seed = seed_override.unwrap_or(cfg.seed);
    require(!cfg.sigmas.is_empty(), "no sigma values")?;
    require(cfg.arrays > 0, "arrays must be positive")?;
    let base = cfg.channel.params(cfg.q).map_err(|e| CliError::Config(e.to_string()))?;

    let mut csv = String::from("sigma,mse_estimated,mse_average\n");
    for (i, &sigma) in cfg.sigmas.iter().enumerate() {
        let params = base.with_sigma(sigma).map_err(|e| CliError::Config(e.to_string()))?;
        let r = estimation_mse(cfg.m, cfg.n, &params, cfg.arrays, seed::derive(cfg.seed, &[i as u64]))?;
        csv.push_str(&format!("{sigma},{:.8e},{:.8e}\n", r.mse_estimated, r.mse_average));
    }
    Ok((config::to_toml(&cfg), cfg.seed, csv))
}
