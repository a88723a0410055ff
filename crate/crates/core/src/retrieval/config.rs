use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Query-time retrieval tunables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    /// Number of top-scoring descriptions whose entities seed activation.
    pub k: usize,
    /// Hop radius of the fetched subgraph.
    pub n: usize,
    /// Linear rescale factor applied to arc weights.
    pub c: f64,
    /// Activation threshold (strict).
    pub tau_a: f64,
    /// Document pruning threshold (inclusive).
    pub tau_d: f64,
    /// Relation relevance threshold (strict, on the raw cosine).
    pub tau_r: f64,
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid retrieval config: {0}")]
pub struct ConfigError(pub String);

impl RetrievalConfig {
    pub const DEFAULT_C: f64 = 0.4;
    pub const DEFAULT_TAU_A: f64 = 0.5;
    pub const DEFAULT_TAU_D: f64 = 0.45;
    pub const DEFAULT_TAU_R: f64 = 0.5;

    /// k = 3 seeds, 4 hops.
    pub fn musique() -> Self {
        Self::with_seeds_and_hops(3, 4)
    }

    /// k = 10 seeds, 3 hops.
    pub fn two_wiki() -> Self {
        Self::with_seeds_and_hops(10, 3)
    }

    pub fn with_seeds_and_hops(k: usize, n: usize) -> Self {
        RetrievalConfig {
            k,
            n,
            c: Self::DEFAULT_C,
            tau_a: Self::DEFAULT_TAU_A,
            tau_d: Self::DEFAULT_TAU_D,
            tau_r: Self::DEFAULT_TAU_R,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "musique" => Some(Self::musique()),
            "twowiki" | "2wiki" => Some(Self::two_wiki()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError("k must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.c) {
            return Err(ConfigError(format!("c = {} outside [0, 1)", self.c)));
        }
        if !(0.0..=1.0).contains(&self.tau_a) {
            return Err(ConfigError(format!(
                "tau_a = {} outside [0, 1]",
                self.tau_a
            )));
        }
        for (name, v) in [("tau_d", self.tau_d), ("tau_r", self.tau_r)] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(ConfigError(format!("{name} = {v} outside [-1, 1]")));
            }
        }
        Ok(())
    }
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self::musique()
    }
}
