use super::{AnalysisError, BalancePanel};

pub const PERCENTILES: usize = 100;

/// Asset shares of the 100 size percentiles in one year.
#[derive(Debug, Clone, PartialEq)]
pub struct YearShares {
    pub year: i32,
    pub entity_count: usize,
    /// `shares[0]` is the largest percentile.
    pub shares: Vec<f64>,
    /// Entities per percentile.
    pub bucket_sizes: Vec<usize>,
    /// Fewer than 100 entities, so some percentiles are empty.
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShareSeries {
    pub years: Vec<YearShares>,
    /// Per year, `cumulative[y][k - 2]` for percentile `k` in 2..=100 is the
    /// summed change in share of percentiles 2..=k since the first year. The
    /// last entry equals minus the top percentile's change.
    pub cumulative: Vec<Vec<f64>>,
}

/// Sorts each year's entities by balance (largest first, ties by id),
/// splits them into 100 count-based buckets and reports each bucket's
/// fraction of total assets.
///
/// When the count is not a multiple of 100 the remainder goes one extra
/// entity each to the largest buckets, starting from percentile 1.
pub fn market_share_percentiles(panel: &BalancePanel, years: &[i32]) -> Result<ShareSeries, AnalysisError> {
    if years.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut out = Vec::with_capacity(years.len());
    for &year in years {
        let obs = panel.year(year).ok_or(AnalysisError::EmptyYear(year))?;
        let mut balances: Vec<f64> = obs.values().copied().collect();
        // Stable sort over id-ordered values: ties keep id order.
        balances.sort_by(|a, b| b.total_cmp(a));
        let n = balances.len();
        let total: f64 = balances.iter().sum();

        let (base, extra) = (n / PERCENTILES, n % PERCENTILES);
        let bucket_sizes: Vec<usize> = (0..PERCENTILES).map(|k| base + usize::from(k < extra)).collect();
        let mut shares = Vec::with_capacity(PERCENTILES);
        let mut offset = 0;
        for &size in &bucket_sizes {
            let sum: f64 = balances[offset..offset + size].iter().sum();
            shares.push(sum / total);
            offset += size;
        }
        out.push(YearShares { year, entity_count: n, shares, bucket_sizes, degraded: n < PERCENTILES });
    }

    let first = out[0].shares.clone();
    let cumulative = out
        .iter()
        .map(|ys| {
            let mut acc = 0.0;
            (1..PERCENTILES)
                .map(|k| {
                    acc += ys.shares[k] - first[k];
                    acc
                })
                .collect()
        })
        .collect();
    Ok(ShareSeries { years: out, cumulative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genealogy::EntityId;
    use proptest::prelude::*;

    fn panel(year: i32, balances: &[f64]) -> BalancePanel {
        BalancePanel::from_observations(balances.iter().enumerate().map(|(i, &b)| (EntityId(format!("E{i:04}")), year, b)))
            .unwrap()
    }

    #[test]
    fn equal_entities_give_uniform_shares() {
        let s = market_share_percentiles(&panel(2000, &[3.0; 100]), &[2000]).unwrap();
        assert!(s.years[0].shares.iter().all(|&x| (x - 0.01).abs() < 1e-15));
        assert!(!s.years[0].degraded);
    }

    #[test]
    fn single_giant_takes_top_percentile() {
        let s = market_share_percentiles(&panel(2000, &[42.0]), &[2000]).unwrap();
        assert_eq!(s.years[0].shares[0], 1.0);
        assert!(s.years[0].shares[1..].iter().all(|&x| x == 0.0));
        assert!(s.years[0].degraded);
    }

    #[test]
    fn remainder_goes_to_top_buckets() {
        let s = market_share_percentiles(&panel(2000, &[1.0; 250]), &[2000]).unwrap();
        let sizes = &s.years[0].bucket_sizes;
        assert!(sizes[..50].iter().all(|&n| n == 3));
        assert!(sizes[50..].iter().all(|&n| n == 2));
        assert_eq!(sizes.iter().sum::<usize>(), 250);
    }

    #[test]
    fn cumulative_change_balances_top_percentile() {
        let mut obs: Vec<(EntityId, i32, f64)> = (0..200).map(|i| (EntityId(format!("E{i:03}")), 2000, 1.0 + i as f64)).collect();
        obs.extend((0..200).map(|i| (EntityId(format!("E{i:03}")), 2010, if i == 199 { 5000.0 } else { 1.0 + i as f64 })));
        let s = market_share_percentiles(&BalancePanel::from_observations(obs).unwrap(), &[2000, 2010]).unwrap();
        assert!(s.cumulative[0].iter().all(|&x| x == 0.0));
        let top_gain = s.years[1].shares[0] - s.years[0].shares[0];
        assert!(top_gain > 0.0);
        assert!((s.cumulative[1][98] + top_gain).abs() < 1e-12);
    }

    #[test]
    fn empty_year_is_error() {
        assert_eq!(market_share_percentiles(&panel(2000, &[1.0]), &[2001]), Err(AnalysisError::EmptyYear(2001)));
    }

    proptest! {
        #[test]
        fn shares_sum_to_one(balances in proptest::collection::vec(1e-3f64..1e9, 1..600)) {
            let s = market_share_percentiles(&panel(1999, &balances), &[1999]).unwrap();
            let sum: f64 = s.years[0].shares.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn transfer_to_top_never_lowers_top_share(
            balances in proptest::collection::vec(1.0f64..1e6, 2..400),
            from in any::<prop::sample::Index>(),
            frac in 0.0f64..1.0,
        ) {
            let before = market_share_percentiles(&panel(1, &balances), &[1]).unwrap();
            let top = balances.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            let donor = from.index(balances.len());
            prop_assume!(donor != top);
            let mut moved = balances.clone();
            let amount = moved[donor] * frac * 0.999;
            moved[donor] -= amount;
            moved[top] += amount;
            let after = market_share_percentiles(&panel(1, &moved), &[1]).unwrap();
            prop_assert!(after.years[0].shares[0] >= before.years[0].shares[0] - 1e-12);
        }
    }
}
