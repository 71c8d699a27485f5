use std::collections::BTreeMap;

use super::{AnalysisError, Histogram, ZipfPoint};
use crate::model::EnsembleSummary;

/// Observed series to overlay on an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum EmpiricalSeries {
    Zipf(Vec<ZipfPoint>),
    Distribution(Histogram),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageEntry {
    /// Rank for Zipf overlays, bin lower edge for distributions.
    pub position: u64,
    /// Exclusive upper bin edge; equals `position + 1` for ranks.
    pub upper: u64,
    pub value: u64,
    pub min: u64,
    pub max: u64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub axis: &'static str,
    pub entries: Vec<CoverageEntry>,
}

impl CoverageReport {
    pub fn inside_count(&self) -> usize {
        self.entries.iter().filter(|e| e.inside).count()
    }

    /// Fraction of positions inside the ensemble min–max band.
    pub fn coverage(&self) -> f64 {
        self.inside_count() as f64 / self.entries.len() as f64
    }
}

/// Checks, position by position, whether `data` lies within the ensemble's
/// min–max band.
///
/// Zipf ranks beyond the ensemble's deepest run fall against a band of
/// `[0, 0]`. Distribution overlays need the ensemble's binning and cover the
/// union of non-empty bins, with absent bins counted as frequency 0.
pub fn distribution_envelope(summary: &EnsembleSummary, data: &EmpiricalSeries) -> Result<CoverageReport, AnalysisError> {
    let entries: Vec<CoverageEntry> = match data {
        EmpiricalSeries::Zipf(series) => series
            .iter()
            .map(|p| {
                let (min, max) = summary
                    .rank_envelope
                    .get(p.rank.wrapping_sub(1))
                    .filter(|env| env.rank == p.rank)
                    .map_or((0, 0), |env| (env.min, env.max));
                CoverageEntry {
                    position: p.rank as u64,
                    upper: p.rank as u64 + 1,
                    value: p.ancestry,
                    min,
                    max,
                    inside: min <= p.ancestry && p.ancestry <= max,
                }
            })
            .collect(),
        EmpiricalSeries::Distribution(hist) => {
            if hist.binning != summary.options.binning {
                return Err(AnalysisError::AxisMismatch(format!(
                    "data binned as {}, ensemble as {}",
                    hist.binning.label(),
                    summary.options.binning.label()
                )));
            }
            let mut rows: BTreeMap<(u64, u64), (u64, u64, u64)> = BTreeMap::new();
            for b in &summary.distribution_envelope {
                rows.insert((b.lower, b.upper), (0, b.min, b.max));
            }
            for b in &hist.bins {
                rows.entry((b.lower, b.upper)).or_insert((0, 0, 0)).0 = b.frequency;
            }
            rows.into_iter()
                .map(|((lower, upper), (value, min, max))| CoverageEntry {
                    position: lower,
                    upper,
                    value,
                    min,
                    max,
                    inside: min <= value && value <= max,
                })
                .collect()
        }
    };
    if entries.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let axis = match data {
        EmpiricalSeries::Zipf(_) => "rank",
        EmpiricalSeries::Distribution(_) => "bin",
    };
    Ok(CoverageReport { axis, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{ancestry_distribution, zipf_series, Binning};
    use crate::model::{run_ensemble, run_simulation, ModelParams};
    use crate::rng::derive_run_seed;

    fn setup() -> (ModelParams, EnsembleSummary) {
        let params = ModelParams::new(300, 120).with_base_probability(0.002);
        let summary = run_ensemble(&params, 15, 21).unwrap();
        (params, summary)
    }

    #[test]
    fn ensemble_member_is_fully_covered() {
        let (params, summary) = setup();
        let member = run_simulation(&params, derive_run_seed(21, 4)).unwrap().ancestries();
        let zipf = distribution_envelope(&summary, &EmpiricalSeries::Zipf(zipf_series(&member).unwrap())).unwrap();
        assert_eq!(zipf.coverage(), 1.0);
        let hist = ancestry_distribution(&member, Binning::Logarithmic).unwrap();
        let dist = distribution_envelope(&summary, &EmpiricalSeries::Distribution(hist)).unwrap();
        assert_eq!(dist.coverage(), 1.0);
    }

    #[test]
    fn data_above_max_is_uncovered() {
        let (_, summary) = setup();
        let series: Vec<ZipfPoint> = summary
            .rank_envelope
            .iter()
            .map(|e| ZipfPoint { rank: e.rank, ancestry: e.max + 1 })
            .collect();
        let report = distribution_envelope(&summary, &EmpiricalSeries::Zipf(series)).unwrap();
        assert_eq!(report.coverage(), 0.0);
    }

    #[test]
    fn binning_mismatch_is_rejected() {
        let (_, summary) = setup();
        let hist = ancestry_distribution(&[1, 2, 3], Binning::Linear { width: 1 }).unwrap();
        assert!(matches!(
            distribution_envelope(&summary, &EmpiricalSeries::Distribution(hist)),
            Err(AnalysisError::AxisMismatch(_))
        ));
    }

    #[test]
    fn ranks_past_envelope_fall_outside() {
        let (_, summary) = setup();
        let depth = summary.rank_envelope.len();
        let series = vec![ZipfPoint { rank: depth + 5, ancestry: 1 }];
        let report = distribution_envelope(&summary, &EmpiricalSeries::Zipf(series)).unwrap();
        assert!(!report.entries[0].inside);
    }
}
