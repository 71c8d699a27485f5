//! Ancestry-weighted merger dynamics.
//!
//! A population of agents undergoes discrete cycles. In each cycle every
//! live agent becomes a *source* independently with probability
//! `p * (1 + ancestry)^exponent` (clamped to 1). Sources act in a random
//! order; each one absorbs a partner chosen uniformly from the other live
//! agents and adds `partner.ancestry + 1` to its own ancestry. Cycles repeat
//! until the live count falls to the target.
//!
//! With `ancestry_weighting` off every agent merges with the same constant
//! probability `p`, which is the random-walk null model.

mod engine;
mod ensemble;
mod population;

pub use engine::{
    execute_cycle, execute_cycle_logged, run_simulation, run_simulation_observed, select_sources, CycleStats,
    MergerRecord, Outcome, SimulationResult,
};
pub use ensemble::{
    run_ensemble, run_ensemble_with, BinEnvelope, EnsembleOptions, EnsembleSummary, RankEnvelope, RunOutcome,
};
pub use population::{Agent, AgentId, Population};

use thiserror::Error;

/// Default per-agent, per-cycle base merger probability.
pub const DEFAULT_BASE_PROBABILITY: f64 = 1.0 / 40_000.0;
/// Default ancestry exponent.
pub const DEFAULT_ANCESTRY_EXPONENT: f64 = 1.5;
pub const DEFAULT_MAX_CYCLES: u64 = 10_000_000;
pub const DEFAULT_ENSEMBLE_RUNS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("base probability must lie in (0, 1], got {0}")]
    BaseProbability(f64),
    #[error("ancestry exponent must be finite and non-negative, got {0}")]
    Exponent(f64),
    #[error("target count {target} must satisfy 0 < target < initial ({initial})")]
    Counts { initial: usize, target: usize },
    #[error("max_cycles must be positive")]
    MaxCycles,
    #[error("ensemble needs at least one run")]
    NoRuns,
}

/// Knobs of the merger model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub base_probability: f64,
    pub ancestry_exponent: f64,
    /// Off gives the constant-probability random-walk baseline.
    pub ancestry_weighting: bool,
    pub initial_count: usize,
    pub target_count: usize,
    pub max_cycles: u64,
}

impl ModelParams {
    /// Default probability and exponent with the given population bounds.
    pub fn new(initial_count: usize, target_count: usize) -> Self {
        Self {
            base_probability: DEFAULT_BASE_PROBABILITY,
            ancestry_exponent: DEFAULT_ANCESTRY_EXPONENT,
            ancestry_weighting: true,
            initial_count,
            target_count,
            max_cycles: DEFAULT_MAX_CYCLES,
        }
    }

    pub fn with_base_probability(mut self, p: f64) -> Self {
        self.base_probability = p;
        self
    }

    pub fn with_exponent(mut self, exponent: f64) -> Self {
        self.ancestry_exponent = exponent;
        self
    }

    pub fn with_weighting(mut self, on: bool) -> Self {
        self.ancestry_weighting = on;
        self
    }

    pub fn with_max_cycles(mut self, max_cycles: u64) -> Self {
        self.max_cycles = max_cycles;
        self
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        let p = self.base_probability;
        if !(p > 0.0 && p <= 1.0) {
            return Err(ParamsError::BaseProbability(p));
        }
        if !(self.ancestry_exponent.is_finite() && self.ancestry_exponent >= 0.0) {
            return Err(ParamsError::Exponent(self.ancestry_exponent));
        }
        if self.target_count == 0 || self.target_count >= self.initial_count {
            return Err(ParamsError::Counts { initial: self.initial_count, target: self.target_count });
        }
        if self.max_cycles == 0 {
            return Err(ParamsError::MaxCycles);
        }
        Ok(())
    }
}

/// Probability that an agent with `ancestry` ancestors originates a merger
/// in one cycle: `min(1, p * (1 + ancestry)^exponent)`, or plain `p` when
/// weighting is off.
pub fn merger_probability(ancestry: u64, params: &ModelParams) -> f64 {
    if !params.ancestry_weighting {
        return params.base_probability;
    }
    let weight = (1.0 + ancestry as f64).powf(params.ancestry_exponent);
    (params.base_probability * weight).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_params() -> ModelParams {
        ModelParams::new(100, 50)
    }

    #[test]
    fn zero_ancestry_is_base_probability() {
        assert_eq!(merger_probability(0, &default_params()), 1.0 / 40_000.0);
    }

    #[test]
    fn three_ancestors_is_eight_times_base() {
        let q = merger_probability(3, &default_params());
        assert_eq!(q, 8.0 / 40_000.0);
        assert_eq!(q, 2.0e-4);
    }

    #[test]
    fn clamp_engages_at_integer_threshold() {
        // Oracle: smallest A with (1 + A)^3 >= 40000^2, in exact integer arithmetic.
        let bound: u128 = 40_000u128 * 40_000;
        let threshold = (0u64..).find(|&a| (1 + a as u128).pow(3) >= bound).unwrap();
        assert_eq!(threshold, 1169);

        let params = default_params();
        assert!(merger_probability(threshold - 1, &params) < 1.0);
        for a in [threshold, 1170, 5000, 1_169_000] {
            assert_eq!(merger_probability(a, &params), 1.0);
        }
    }

    #[test]
    fn baseline_ignores_ancestry() {
        let params = default_params().with_weighting(false);
        assert_eq!(merger_probability(500, &params), 1.0 / 40_000.0);
    }

    #[test]
    fn rejects_invalid_params() {
        assert_eq!(ModelParams::new(10, 5).with_base_probability(0.0).validate(), Err(ParamsError::BaseProbability(0.0)));
        assert!(ModelParams::new(10, 5).with_base_probability(1.5).validate().is_err());
        assert!(ModelParams::new(10, 5).with_exponent(-1.0).validate().is_err());
        assert!(ModelParams::new(10, 10).validate().is_err());
        assert!(ModelParams::new(10, 0).validate().is_err());
        assert!(ModelParams::new(10, 5).with_max_cycles(0).validate().is_err());
        assert!(ModelParams::new(10, 5).with_base_probability(1.0).validate().is_ok());
    }

    proptest! {
        #[test]
        fn probability_within_unit_interval(
            ancestry in 0u64..=1_000_000_000,
            p in 1e-9f64..=1.0,
            exponent in 0.0f64..4.0,
            weighting in any::<bool>(),
        ) {
            let params = ModelParams::new(10, 5).with_base_probability(p).with_exponent(exponent).with_weighting(weighting);
            let q = merger_probability(ancestry, &params);
            prop_assert!((0.0..=1.0).contains(&q));
        }

        #[test]
        fn baseline_is_constant(a in 0u64..1_000_000_000, b in 0u64..1_000_000_000) {
            let params = default_params().with_weighting(false);
            prop_assert_eq!(merger_probability(a, &params), merger_probability(b, &params));
        }
    }
}
