//! Does ranking by ancestry or by balance-sheet size better predict who
//! acquires next?
//!
//! For each base year `Y` the entities observed in the panel for `Y - 1`
//! and still live at the close of `Y - 1` are ranked twice: by ancestry as of
//! 31 December `Y - 1`, and by their `Y - 1` balance sheet. Ties go to the
//! smaller id. Each entity's acquisitions dated in `[1 Jan Y, 1 Jan Y+window)`
//! are then summed per rank group, and group totals are averaged over the
//! base years.

use chrono::NaiveDate;

use super::{AnalysisError, BalancePanel};
use crate::genealogy::{EntityId, GenealogyForest};

pub const DEFAULT_WINDOW_YEARS: u32 = 3;
pub const DEFAULT_GROUP_SIZE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMethod {
    Ancestry,
    BalanceSheet,
}

impl RankMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RankMethod::Ancestry => "ancestry",
            RankMethod::BalanceSheet => "balance_sheet",
        }
    }
}

/// How a group's forward-window total becomes the reported figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// Mean over base years of the window total.
    #[default]
    WindowTotal,
    /// Same, divided by the window length (mergers per year).
    PerYear,
}

impl Averaging {
    pub fn as_str(self) -> &'static str {
        match self {
            Averaging::WindowTotal => "window_total",
            Averaging::PerYear => "per_year",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankGroup {
    /// 1-based ranks covered, inclusive.
    pub rank_lo: usize,
    pub rank_hi: usize,
    pub mean_mergers: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankGroupReport {
    pub method: RankMethod,
    pub groups: Vec<RankGroup>,
    /// Forward-window mergers of the top group for each base year used.
    pub top_group_by_year: Vec<(i32, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingComparison {
    pub ancestry: RankGroupReport,
    pub balance_sheet: RankGroupReport,
    pub years_used: Vec<i32>,
    /// Base years with no panel observations for the preceding year.
    pub years_skipped: Vec<i32>,
    pub window_years: u32,
    pub group_size: usize,
    pub averaging: Averaging,
}

fn jan1(year: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, 1, 1).expect("year in chrono range")
}

fn dec31(year: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, 12, 31).expect("year in chrono range")
}

pub fn rank_merger_forecast(
    forest: &GenealogyForest,
    panel: &BalancePanel,
    years: &[i32],
    window_years: u32,
    group_size: usize,
    averaging: Averaging,
) -> Result<RankingComparison, AnalysisError> {
    if window_years == 0 {
        return Err(AnalysisError::EmptyWindow);
    }
    if group_size == 0 {
        return Err(AnalysisError::EmptyGroup);
    }
    let mut years = years.to_vec();
    years.sort_unstable();
    years.dedup();

    let mut used = Vec::new();
    let mut skipped = Vec::new();
    // per method: per group index, total forward mergers summed over years
    let mut totals: [Vec<u64>; 2] = [Vec::new(), Vec::new()];
    let mut top_by_year: [Vec<(i32, u64)>; 2] = [Vec::new(), Vec::new()];

    for &year in &years {
        let Some(balances) = panel.year(year - 1) else {
            skipped.push(year);
            continue;
        };
        let snapshot = dec31(year - 1);
        let (from, until) = (jan1(year), jan1(year + window_years as i32));

        let universe: Vec<(&EntityId, u64, f64, usize)> = balances
            .iter()
            .filter(|(e, _)| forest.is_live(e, snapshot))
            .map(|(e, &b)| {
                let ancestry = if forest.contains(e) { forest.ancestry_count(e, snapshot).unwrap_or(0) } else { 0 };
                (e, ancestry, b, forest.acquisitions_between(e, from, until))
            })
            .collect();
        if universe.is_empty() {
            skipped.push(year);
            continue;
        }
        used.push(year);

        // `balances` iterates in id order, so stable sorts break ties by id.
        let mut by_ancestry = universe.clone();
        by_ancestry.sort_by_key(|r| std::cmp::Reverse(r.1));
        let mut by_balance = universe;
        by_balance.sort_by(|a, b| b.2.total_cmp(&a.2));

        for (m, ranked) in [by_ancestry, by_balance].iter().enumerate() {
            let n_groups = ranked.len().div_ceil(group_size);
            if totals[m].len() < n_groups {
                totals[m].resize(n_groups, 0);
            }
            for (g, chunk) in ranked.chunks(group_size).enumerate() {
                let sum: u64 = chunk.iter().map(|r| r.3 as u64).sum();
                totals[m][g] += sum;
                if g == 0 {
                    top_by_year[m].push((year, sum));
                }
            }
        }
    }

    let n_groups = totals[0].len().max(totals[1].len());
    let divisor = used.len() as f64
        * match averaging {
            Averaging::WindowTotal => 1.0,
            Averaging::PerYear => window_years as f64,
        };
    let report = |m: usize, method: RankMethod| RankGroupReport {
        method,
        groups: (0..n_groups)
            .map(|g| RankGroup {
                rank_lo: g * group_size + 1,
                rank_hi: (g + 1) * group_size,
                mean_mergers: totals[m].get(g).copied().unwrap_or(0) as f64 / divisor,
            })
            .collect(),
        top_group_by_year: top_by_year[m].clone(),
    };

    Ok(RankingComparison {
        ancestry: report(0, RankMethod::Ancestry),
        balance_sheet: report(1, RankMethod::BalanceSheet),
        years_used: used,
        years_skipped: skipped,
        window_years,
        group_size,
        averaging,
    })
}
