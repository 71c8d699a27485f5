use chrono::NaiveDate;

use super::{AnalysisError, BalancePanel, GdpSeries};
use crate::genealogy::{EntityId, GenealogyForest};

/// Organic growth of one surviving entity over the study period.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRecord {
    pub entity: EntityId,
    /// Ancestors as of the end of the end year.
    pub acquisition_count: u64,
    /// Start-year balances of the entity and its in-period ancestors,
    /// scaled by the GDP ratio.
    pub baseline: f64,
    pub end_balance: f64,
    /// `log10(end_balance / baseline)`: positive means growth above GDP.
    pub growth_index: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthExclusion {
    pub entity: EntityId,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub start_year: i32,
    pub end_year: i32,
    pub gdp_factor: f64,
    pub records: Vec<GrowthRecord>,
    pub excluded: Vec<GrowthExclusion>,
    /// In-period ancestors dropped from a baseline for lack of a start-year balance.
    pub ancestors_missing_start_balance: usize,
}

/// Compares each survivor's end-year balance with the GDP-indexed sum of the
/// start-year balances of itself and every ancestor it absorbed after the
/// start year.
///
/// Ancestors absorbed on or before the start year are already inside some
/// start-year balance and are not added again.
pub fn organic_growth(
    forest: &GenealogyForest,
    panel: &BalancePanel,
    gdp: &GdpSeries,
    start_year: i32,
    end_year: i32,
) -> Result<GrowthReport, AnalysisError> {
    if start_year >= end_year {
        return Err(AnalysisError::YearOrder { start: start_year, end: end_year });
    }
    let gdp_start = gdp.get(start_year).ok_or(AnalysisError::MissingGdp(start_year))?;
    let gdp_end = gdp.get(end_year).ok_or(AnalysisError::MissingGdp(end_year))?;
    let gdp_factor = gdp_end / gdp_start;

    let end_balances = panel.year(end_year).ok_or(AnalysisError::NoSurvivors)?;
    let end_date = NaiveDate::from_ymd_opt(end_year, 12, 31).expect("year in range");
    let start_close = NaiveDate::from_ymd_opt(start_year, 12, 31).expect("year in range");

    let mut records = Vec::new();
    let mut excluded = Vec::new();
    let mut missing = 0;
    let mut survivors = 0;
    for (entity, &end_balance) in end_balances {
        if !forest.is_live(entity, end_date) {
            continue;
        }
        survivors += 1;
        let mut base_sum = panel.get(entity, start_year).unwrap_or(0.0);
        let ancestors = forest.ancestors(entity, end_date);
        let acquisition_count = ancestors.len() as u64;
        for ancestor in ancestors {
            let absorbed = forest.absorption(ancestor).expect("ancestor was absorbed").date;
            if absorbed <= start_close {
                continue;
            }
            match panel.get(ancestor, start_year) {
                Some(b) => base_sum += b,
                None => missing += 1,
            }
        }
        if base_sum <= 0.0 {
            excluded.push(GrowthExclusion { entity: entity.clone(), reason: "no start-year balance for entity or ancestors" });
            continue;
        }
        let baseline = base_sum * gdp_factor;
        records.push(GrowthRecord {
            entity: entity.clone(),
            acquisition_count,
            baseline,
            end_balance,
            growth_index: (end_balance / baseline).log10(),
        });
    }
    if survivors == 0 {
        return Err(AnalysisError::NoSurvivors);
    }
    Ok(GrowthReport { start_year, end_year, gdp_factor, records, excluded, ancestors_missing_start_balance: missing })
}

/// End-balance-weighted mean growth index over records with at least
/// `min_acquisitions` ancestors, or `None` when none qualify.
pub fn weighted_mean_growth(records: &[GrowthRecord], min_acquisitions: u64) -> Option<f64> {
    let (num, den) = records
        .iter()
        .filter(|r| r.acquisition_count >= min_acquisitions)
        .fold((0.0, 0.0), |(n, d), r| (n + r.growth_index * r.end_balance, d + r.end_balance));
    (den > 0.0).then(|| num / den)
}
