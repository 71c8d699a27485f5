//! Statistics over ancestry counts, merger events, and balance sheets.

mod distribution;
mod envelope;
mod growth;
mod market_share;
mod rank_compare;
mod zipf;

pub use distribution::{ancestry_distribution, Bin, Binning, Histogram};
pub use envelope::{distribution_envelope, CoverageEntry, CoverageReport, EmpiricalSeries};
pub use growth::{organic_growth, weighted_mean_growth, GrowthExclusion, GrowthRecord, GrowthReport};
pub use market_share::{market_share_percentiles, ShareSeries, YearShares, PERCENTILES};
pub use rank_compare::{
    rank_merger_forecast, Averaging, RankGroup, RankGroupReport, RankMethod, RankingComparison, DEFAULT_GROUP_SIZE,
    DEFAULT_WINDOW_YEARS,
};
pub use zipf::{zipf_series, zipf_slope, zipf_slope_values, SlopeFit, ZipfPoint};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::genealogy::EntityId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("input is empty")]
    EmptyInput,
    #[error("need at least {needed} points in range, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("all fit points share one rank")]
    DegenerateFit,
    #[error("axis mismatch: {0}")]
    AxisMismatch(String),
    #[error("no observations for year {0}")]
    EmptyYear(i32),
    #[error("no GDP value for year {0}")]
    MissingGdp(i32),
    #[error("no surviving entities with end-year balances")]
    NoSurvivors,
    #[error("start year {start} must precede end year {end}")]
    YearOrder { start: i32, end: i32 },
    #[error("window must span at least one year")]
    EmptyWindow,
    #[error("group size must be positive")]
    EmptyGroup,
    #[error("balance for {entity} in {year} must be positive and finite, got {value}")]
    NonPositiveBalance { entity: EntityId, year: i32, value: f64 },
    #[error("duplicate observation for {entity} in {year}")]
    DuplicateObservation { entity: EntityId, year: i32 },
    #[error("GDP for {year} must be positive and finite, got {value}")]
    NonPositiveGdp { year: i32, value: f64 },
    #[error("duplicate GDP year {0}")]
    DuplicateGdpYear(i32),
}

/// Balance-sheet sizes by year and entity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BalancePanel {
    by_year: BTreeMap<i32, BTreeMap<EntityId, f64>>,
}

impl BalancePanel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_observations(
        obs: impl IntoIterator<Item = (EntityId, i32, f64)>,
    ) -> Result<Self, AnalysisError> {
        let mut panel = Self::new();
        for (entity, year, balance) in obs {
            panel.insert(entity, year, balance)?;
        }
        Ok(panel)
    }

    pub fn insert(&mut self, entity: EntityId, year: i32, balance: f64) -> Result<(), AnalysisError> {
        if !(balance.is_finite() && balance > 0.0) {
            return Err(AnalysisError::NonPositiveBalance { entity, year, value: balance });
        }
        let year_map = self.by_year.entry(year).or_default();
        if year_map.contains_key(&entity) {
            return Err(AnalysisError::DuplicateObservation { entity, year });
        }
        year_map.insert(entity, balance);
        Ok(())
    }

    pub fn get(&self, entity: &EntityId, year: i32) -> Option<f64> {
        self.by_year.get(&year)?.get(entity).copied()
    }

    /// Observations for one year, keyed by entity.
    pub fn year(&self, year: i32) -> Option<&BTreeMap<EntityId, f64>> {
        self.by_year.get(&year).filter(|m| !m.is_empty())
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.by_year.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.by_year.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All observations ordered by year, then entity.
    pub fn observations(&self) -> impl Iterator<Item = (&EntityId, i32, f64)> {
        self.by_year.iter().flat_map(|(&y, m)| m.iter().map(move |(e, &b)| (e, y, b)))
    }

    /// Every balance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let by_year = self
            .by_year
            .iter()
            .map(|(&y, m)| (y, m.iter().map(|(e, &b)| (e.clone(), b * factor)).collect()))
            .collect();
        Self { by_year }
    }
}

/// GDP index level per year.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GdpSeries {
    values: BTreeMap<i32, f64>,
}

impl GdpSeries {
    pub fn from_values(values: impl IntoIterator<Item = (i32, f64)>) -> Result<Self, AnalysisError> {
        let mut out = BTreeMap::new();
        for (year, value) in values {
            if !(value.is_finite() && value > 0.0) {
                return Err(AnalysisError::NonPositiveGdp { year, value });
            }
            if out.insert(year, value).is_some() {
                return Err(AnalysisError::DuplicateGdpYear(year));
            }
        }
        Ok(Self { values: out })
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        self.values.get(&year).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.values.iter().map(|(&y, &v)| (y, v))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { values: self.values.iter().map(|(&y, &v)| (y, v * factor)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_rejects_duplicates_and_non_positive() {
        let mut p = BalancePanel::new();
        p.insert("A".into(), 2000, 1.0).unwrap();
        assert!(matches!(p.insert("A".into(), 2000, 2.0), Err(AnalysisError::DuplicateObservation { .. })));
        assert!(matches!(p.insert("B".into(), 2000, -1.0), Err(AnalysisError::NonPositiveBalance { .. })));
        assert!(matches!(p.insert("B".into(), 2000, 0.0), Err(AnalysisError::NonPositiveBalance { .. })));
        assert_eq!(p.len(), 1);
        assert_eq!(p.get(&"A".into(), 2000), Some(1.0));
    }

    #[test]
    fn gdp_rejects_duplicates() {
        assert!(GdpSeries::from_values([(2000, 1.0), (2000, 2.0)]).is_err());
        assert!(GdpSeries::from_values([(2000, 0.0)]).is_err());
        assert_eq!(GdpSeries::from_values([(2000, 3.0)]).unwrap().get(2000), Some(3.0));
    }
}
