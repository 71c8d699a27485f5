use std::ops::RangeInclusive;

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZipfPoint {
    pub rank: usize,
    pub ancestry: u64,
}

/// Rank-ordered non-zero counts, largest first, ranks starting at 1.
///
/// Ties keep input order, so callers passing counts in id order get ties
/// broken by id. All-zero input gives an empty series.
pub fn zipf_series(counts: &[u64]) -> Result<Vec<ZipfPoint>, AnalysisError> {
    if counts.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut values: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    values.sort_by(|a, b| b.cmp(a));
    Ok(values.into_iter().enumerate().map(|(i, ancestry)| ZipfPoint { rank: i + 1, ancestry }).collect())
}

/// Least-squares line through `(log10 rank, log10 ancestry)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; 0 for an exact fit or three collinear points.
    pub std_error: f64,
    pub points: usize,
}

/// Fits the log-log slope of `series` over the ranks in `rank_range`
/// (the whole series when `None`).
pub fn zipf_slope(series: &[ZipfPoint], rank_range: Option<RangeInclusive<usize>>) -> Result<SlopeFit, AnalysisError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|p| p.ancestry > 0 && rank_range.as_ref().is_none_or(|r| r.contains(&p.rank)))
        .map(|p| ((p.rank as f64).log10(), (p.ancestry as f64).log10()))
        .collect();
    fit_line(&pts)
}

/// Same fit on real-valued points, for planted or interpolated data.
pub fn zipf_slope_values(points: &[(f64, f64)]) -> Result<SlopeFit, AnalysisError> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(r, v)| *r > 0.0 && *v > 0.0)
        .map(|(r, v)| (r.log10(), v.log10()))
        .collect();
    fit_line(&pts)
}

fn fit_line(pts: &[(f64, f64)]) -> Result<SlopeFit, AnalysisError> {
    let n = pts.len();
    if n < 3 {
        return Err(AnalysisError::TooFewPoints { needed: 3, found: n });
    }
    let nf = n as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::DegenerateFit);
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let std_error = (rss / (nf - 2.0) / sxx).sqrt();
    Ok(SlopeFit { slope, intercept, std_error, points: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn descending_with_ranks_from_one() {
        let s = zipf_series(&[3, 5, 3]).unwrap();
        assert_eq!(
            s,
            vec![
                ZipfPoint { rank: 1, ancestry: 5 },
                ZipfPoint { rank: 2, ancestry: 3 },
                ZipfPoint { rank: 3, ancestry: 3 }
            ]
        );
        assert_eq!(zipf_series(&[7]).unwrap(), vec![ZipfPoint { rank: 1, ancestry: 7 }]);
    }

    #[test]
    fn zeros_are_excluded() {
        assert!(zipf_series(&[0, 0]).unwrap().is_empty());
        assert_eq!(zipf_series(&[0, 2, 0]).unwrap().len(), 1);
        assert_eq!(zipf_series(&[]), Err(AnalysisError::EmptyInput));
    }

    #[test]
    fn planted_exponents_are_recovered() {
        for s in [-3.0, -2.0, -1.0, -0.5] {
            let pts: Vec<(f64, f64)> = (1..=100).map(|r| (r as f64, 1000.0 * (r as f64).powf(s))).collect();
            let fit = zipf_slope_values(&pts).unwrap();
            assert!((fit.slope - s).abs() < 1e-9, "s={s} fit={fit:?}");
            assert!((fit.intercept - 3.0).abs() < 1e-9);
            assert!(fit.std_error < 1e-9);
        }
    }

    #[test]
    fn integer_series_fit_over_range() {
        // ancestry = 2^20 / rank^2 is an integer for ranks that are powers of 2
        // and the fit is exact on any subset of points from the law.
        let series: Vec<ZipfPoint> =
            (0..8).map(|k| ZipfPoint { rank: 1 << k, ancestry: (1u64 << 20) >> (2 * k) }).collect();
        let fit = zipf_slope(&series, Some(1..=64)).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert_eq!(fit.points, 7);
    }

    #[test]
    fn too_few_points() {
        let series = zipf_series(&[4, 2]).unwrap();
        assert_eq!(zipf_slope(&series, None), Err(AnalysisError::TooFewPoints { needed: 3, found: 2 }));
        let series = zipf_series(&[9, 4, 2, 1]).unwrap();
        assert!(zipf_slope(&series, Some(3..=10)).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut counts in proptest::collection::vec(0u64..1000, 1..200), seed in any::<u64>()) {
            let base = zipf_series(&counts).unwrap();
            use rand::{seq::SliceRandom, SeedableRng};
            counts.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(zipf_series(&counts).unwrap(), base.clone());
            // Independent sort oracle.
            let mut oracle: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
            oracle.sort_unstable();
            oracle.reverse();
            prop_assert_eq!(base.iter().map(|p| p.ancestry).collect::<Vec<_>>(), oracle);
        }

        #[test]
        fn planted_exponent_range(s in -3.0f64..=-0.5, c in 0.1f64..1e6) {
            let pts: Vec<(f64, f64)> = (1..=100).map(|r| (r as f64, c * (r as f64).powf(s))).collect();
            let fit = zipf_slope_values(&pts).unwrap();
            prop_assert!((fit.slope - s).abs() < 1e-9);
        }
    }
}
