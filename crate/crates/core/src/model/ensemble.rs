use std::collections::BTreeMap;

use rayon::prelude::*;

use super::engine::{run_simulation, Outcome};
use super::{ModelParams, ParamsError};
use crate::analysis::{ancestry_distribution, Binning};
use crate::rng::derive_run_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    pub n_runs: usize,
    pub master_seed: u64,
    /// Lower and upper quantiles of the per-rank band, in [0, 1].
    pub band: (f64, f64),
    pub binning: Binning,
    /// Execute runs on the rayon pool. The summary does not depend on this.
    pub parallel: bool,
}

impl EnsembleOptions {
    pub fn new(n_runs: usize, master_seed: u64) -> Self {
        Self { n_runs, master_seed, band: (0.05, 0.95), binning: Binning::Logarithmic, parallel: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    pub run_index: u64,
    pub seed: u64,
    pub outcome: Outcome,
    pub cycles_run: u64,
}

/// Spread of the rank-`rank` ancestry (descending order) across runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankEnvelope {
    pub rank: usize,
    pub min: u64,
    pub band_low: f64,
    pub band_high: f64,
    pub max: u64,
    pub mean: f64,
}

/// Spread of one histogram bin's frequency across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinEnvelope {
    pub lower: u64,
    pub upper: u64,
    pub min: u64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub params: ModelParams,
    pub options: EnsembleOptions,
    pub runs: Vec<RunOutcome>,
    /// Ranks 1..=R where R is the longest non-zero tail over all runs. A run
    /// with fewer agents at a rank counts as ancestry 0 there.
    pub rank_envelope: Vec<RankEnvelope>,
    pub distribution_envelope: Vec<BinEnvelope>,
    /// Min and max number of zero-ancestry survivors.
    pub zero_bucket: (u64, u64),
}

impl EnsembleSummary {
    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn normal_terminations(&self) -> usize {
        self.runs.iter().filter(|r| r.outcome.terminated_normally()).count()
    }
}

/// Runs `n_runs` seeded simulations and summarizes their final ancestries.
pub fn run_ensemble(params: &ModelParams, n_runs: usize, master_seed: u64) -> Result<EnsembleSummary, ParamsError> {
    run_ensemble_with(params, &EnsembleOptions::new(n_runs, master_seed))
}

pub fn run_ensemble_with(params: &ModelParams, options: &EnsembleOptions) -> Result<EnsembleSummary, ParamsError> {
    params.validate()?;
    if options.n_runs == 0 {
        return Err(ParamsError::NoRuns);
    }
    let run_one = |index: usize| {
        let seed = derive_run_seed(options.master_seed, index as u64);
        let result = run_simulation(params, seed).expect("params validated");
        let outcome =
            RunOutcome { run_index: index as u64, seed, outcome: result.outcome, cycles_run: result.cycles_run };
        (outcome, result.ancestries())
    };
    let runs: Vec<(RunOutcome, Vec<u64>)> = if options.parallel {
        (0..options.n_runs).into_par_iter().map(run_one).collect()
    } else {
        (0..options.n_runs).map(run_one).collect()
    };
    Ok(summarize(params, options, runs))
}

/// Reduces per-run ancestries into envelopes. The result does not depend on
/// the order of `runs`.
fn summarize(params: &ModelParams, options: &EnsembleOptions, mut runs: Vec<(RunOutcome, Vec<u64>)>) -> EnsembleSummary {
    runs.sort_by_key(|(o, _)| o.run_index);
    let n = runs.len();

    let mut sorted: Vec<Vec<u64>> = runs
        .iter()
        .map(|(_, a)| {
            let mut v: Vec<u64> = a.iter().copied().filter(|&x| x > 0).collect();
            v.sort_unstable_by(|a, b| b.cmp(a));
            v
        })
        .collect();
    let depth = sorted.iter().map(Vec::len).max().unwrap_or(0);
    for v in &mut sorted {
        v.resize(depth, 0);
    }

    let mut rank_envelope = Vec::with_capacity(depth);
    let mut column = vec![0u64; n];
    for r in 0..depth {
        for (slot, run) in column.iter_mut().zip(&sorted) {
            *slot = run[r];
        }
        column.sort_unstable();
        let sum: f64 = column.iter().map(|&x| x as f64).sum();
        rank_envelope.push(RankEnvelope {
            rank: r + 1,
            min: column[0],
            band_low: quantile_sorted(&column, options.band.0),
            band_high: quantile_sorted(&column, options.band.1),
            max: column[n - 1],
            mean: sum / n as f64,
        });
    }

    let mut bins: BTreeMap<(u64, u64), Vec<u64>> = BTreeMap::new();
    let mut zeros = Vec::with_capacity(n);
    for (i, (_, ancestries)) in runs.iter().enumerate() {
        let hist = ancestry_distribution(ancestries, options.binning).expect("runs are non-empty");
        zeros.push(hist.zero_count);
        for bin in hist.bins {
            bins.entry((bin.lower, bin.upper)).or_insert_with(|| vec![0; n])[i] = bin.frequency;
        }
    }
    let distribution_envelope = bins
        .into_iter()
        .map(|((lower, upper), freqs)| BinEnvelope {
            lower,
            upper,
            min: *freqs.iter().min().unwrap(),
            max: *freqs.iter().max().unwrap(),
        })
        .collect();

    EnsembleSummary {
        params: *params,
        options: *options,
        runs: runs.into_iter().map(|(o, _)| o).collect(),
        rank_envelope,
        distribution_envelope,
        zero_bucket: (*zeros.iter().min().unwrap(), *zeros.iter().max().unwrap()),
    }
}

/// Linear-interpolation quantile of ascending `values` (the "type 7" rule).
fn quantile_sorted(values: &[u64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    values[lo] as f64 + (values[hi] as f64 - values[lo] as f64) * frac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::run_simulation;

    fn small_params() -> ModelParams {
        ModelParams::new(400, 150).with_base_probability(0.001)
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0, 10, 20, 30, 40];
        assert_eq!(quantile_sorted(&v, 0.0), 0.0);
        assert_eq!(quantile_sorted(&v, 1.0), 40.0);
        assert_eq!(quantile_sorted(&v, 0.5), 20.0);
        assert_eq!(quantile_sorted(&v, 0.125), 5.0);
    }

    #[test]
    fn single_run_envelope_collapses() {
        let params = small_params();
        let summary = run_ensemble(&params, 1, 3).unwrap();
        let run = run_simulation(&params, derive_run_seed(3, 0)).unwrap();
        let mut expected: Vec<u64> = run.ancestries().into_iter().filter(|&a| a > 0).collect();
        expected.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(summary.rank_envelope.len(), expected.len());
        for (env, &value) in summary.rank_envelope.iter().zip(&expected) {
            assert_eq!(env.min, value);
            assert_eq!(env.max, value);
            assert_eq!(env.band_low, value as f64);
            assert_eq!(env.band_high, value as f64);
        }
        assert!(summary.distribution_envelope.iter().all(|b| b.min == b.max));
        assert_eq!(summary.normal_terminations(), 1);
    }

    #[test]
    fn envelope_bounds_are_ordered_and_monotone() {
        let summary = run_ensemble(&small_params(), 40, 8).unwrap();
        for env in &summary.rank_envelope {
            assert!(env.min as f64 <= env.band_low);
            assert!(env.band_low <= env.band_high);
            assert!(env.band_high <= env.max as f64);
        }
        for pair in summary.rank_envelope.windows(2) {
            assert!(pair[0].min >= pair[1].min);
            assert!(pair[0].max >= pair[1].max);
            assert!(pair[0].band_low >= pair[1].band_low);
            assert!(pair[0].band_high >= pair[1].band_high);
        }
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let params = small_params();
        let mut options = EnsembleOptions::new(24, 5);
        let parallel = run_ensemble_with(&params, &options).unwrap();
        options.parallel = false;
        let sequential = run_ensemble_with(&params, &options).unwrap();
        assert_eq!(parallel.rank_envelope, sequential.rank_envelope);
        assert_eq!(parallel.distribution_envelope, sequential.distribution_envelope);
        assert_eq!(parallel.runs, sequential.runs);
    }

    #[test]
    fn summary_ignores_run_order() {
        let params = small_params();
        let options = EnsembleOptions::new(12, 2);
        let runs: Vec<_> = (0..12)
            .map(|i| {
                let seed = derive_run_seed(2, i);
                let r = run_simulation(&params, seed).unwrap();
                (RunOutcome { run_index: i, seed, outcome: r.outcome, cycles_run: r.cycles_run }, r.ancestries())
            })
            .collect();
        let forward = summarize(&params, &options, runs.clone());
        let mut reversed = runs;
        reversed.reverse();
        reversed.swap(0, 5);
        assert_eq!(forward, summarize(&params, &options, reversed));
    }

    #[test]
    fn zero_runs_rejected() {
        assert_eq!(run_ensemble(&small_params(), 0, 1), Err(ParamsError::NoRuns));
    }
}
