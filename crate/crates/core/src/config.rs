//! TOML experiment descriptions.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::crossbar::{ChannelParams, DEFAULT_ALPHA};
use crate::error::{Error, Result};

/// Device and noise parameters as written in a config file. The data bias
/// `q` is not listed here; it follows from the shaper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default = "defaults::r0")]
    pub r0: f64,
    #[serde(default = "defaults::r1")]
    pub r1: f64,
    #[serde(default = "defaults::rs")]
    pub rs: f64,
    #[serde(default = "defaults::sigma")]
    pub sigma: f64,
    #[serde(default = "defaults::p_f")]
    pub p_f: f64,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
}

mod defaults {
    pub fn r0() -> f64 {
        1000.0
    }
    pub fn r1() -> f64 {
        100.0
    }
    pub fn rs() -> f64 {
        250.0
    }
    pub fn sigma() -> f64 {
        100.0
    }
    pub fn p_f() -> f64 {
        1e-3
    }
    pub fn alpha() -> f64 {
        super::DEFAULT_ALPHA
    }
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            r0: defaults::r0(),
            r1: defaults::r1(),
            rs: defaults::rs(),
            sigma: defaults::sigma(),
            p_f: defaults::p_f(),
            alpha: defaults::alpha(),
        }
    }
}

impl ChannelSection {
    pub fn params(&self, q: f64) -> Result<ChannelParams> {
        Ok(ChannelParams::new(self.r0, self.r1, self.rs, self.sigma, self.p_f, q)?.with_alpha(self.alpha))
    }
}

/// Parses TOML into `T`, naming `what` in errors.
pub fn from_toml<T: DeserializeOwned>(text: &str, what: &'static str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse { what, reason: e.to_string() })
}

pub fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("config types serialize")
}
