use std::collections::BTreeMap;

use super::AnalysisError;

/// Bin layout for ancestry histograms. Bins are half-open `[lower, upper)`
/// over positive counts; zeros are tallied separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binning {
    /// `[k*width, (k+1)*width)`; width 1 gives one bin per count value.
    Linear { width: u64 },
    /// Powers of two: `[1,2), [2,4), [4,8), ...`.
    Logarithmic,
}

impl Binning {
    pub fn bounds(&self, value: u64) -> (u64, u64) {
        debug_assert!(value > 0);
        match *self {
            Binning::Linear { width } => {
                let width = width.max(1);
                let lower = value / width * width;
                (lower, lower.saturating_add(width))
            }
            Binning::Logarithmic => {
                let lower = 1u64 << (63 - value.leading_zeros());
                (lower, lower.saturating_mul(2))
            }
        }
    }

    /// `linear:<width>` or `log2`.
    pub fn label(&self) -> String {
        match self {
            Binning::Linear { width } => format!("linear:{width}"),
            Binning::Logarithmic => "log2".to_string(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "log2" | "log" | "logarithmic" => Some(Binning::Logarithmic),
            "linear" => Some(Binning::Linear { width: 1 }),
            _ => {
                let width: u64 = s.strip_prefix("linear:")?.parse().ok()?;
                (width > 0).then_some(Binning::Linear { width })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bin {
    pub lower: u64,
    pub upper: u64,
    pub frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub binning: Binning,
    pub zero_count: u64,
    /// Non-empty bins in ascending order.
    pub bins: Vec<Bin>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.zero_count + self.bins.iter().map(|b| b.frequency).sum::<u64>()
    }
}

/// Tallies ancestry counts into bins; zero counts go to `zero_count`.
pub fn ancestry_distribution(counts: &[u64], binning: Binning) -> Result<Histogram, AnalysisError> {
    if counts.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut zero_count = 0;
    let mut tally: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    for &c in counts {
        if c == 0 {
            zero_count += 1;
        } else {
            *tally.entry(binning.bounds(c)).or_default() += 1;
        }
    }
    let bins = tally.into_iter().map(|((lower, upper), frequency)| Bin { lower, upper, frequency }).collect();
    Ok(Histogram { binning, zero_count, bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_zero_counts() {
        let h = ancestry_distribution(&[0, 0, 0], Binning::Logarithmic).unwrap();
        assert_eq!(h.zero_count, 3);
        assert!(h.bins.is_empty());
    }

    #[test]
    fn unit_width_tally() {
        let h = ancestry_distribution(&[1, 1, 2, 4], Binning::Linear { width: 1 }).unwrap();
        let freq: Vec<(u64, u64)> = h.bins.iter().map(|b| (b.lower, b.frequency)).collect();
        assert_eq!(freq, vec![(1, 2), (2, 1), (4, 1)]);
        assert_eq!(h.zero_count, 0);
    }

    #[test]
    fn log_bin_edges() {
        let b = Binning::Logarithmic;
        assert_eq!(b.bounds(1), (1, 2));
        assert_eq!(b.bounds(2), (2, 4));
        assert_eq!(b.bounds(3), (2, 4));
        assert_eq!(b.bounds(4), (4, 8));
        assert_eq!(b.bounds(1023), (512, 1024));
        assert_eq!(b.bounds(1024), (1024, 2048));
    }

    #[test]
    fn wide_linear_bins() {
        let b = Binning::Linear { width: 5 };
        assert_eq!(b.bounds(1), (0, 5));
        assert_eq!(b.bounds(5), (5, 10));
    }

    #[test]
    fn empty_input_is_error() {
        assert_eq!(ancestry_distribution(&[], Binning::Logarithmic), Err(AnalysisError::EmptyInput));
    }

    #[test]
    fn binning_labels_parse_back() {
        for b in [Binning::Logarithmic, Binning::Linear { width: 1 }, Binning::Linear { width: 7 }] {
            assert_eq!(Binning::parse(&b.label()), Some(b));
        }
        assert_eq!(Binning::parse("linear:0"), None);
    }

    proptest! {
        #[test]
        fn matches_brute_force_tally(counts in proptest::collection::vec(0u64..5000, 1..300), width in 1u64..20) {
            for binning in [Binning::Logarithmic, Binning::Linear { width }] {
                let h = ancestry_distribution(&counts, binning).unwrap();
                prop_assert_eq!(h.total(), counts.len() as u64);
                prop_assert_eq!(h.zero_count, counts.iter().filter(|&&c| c == 0).count() as u64);
                for bin in &h.bins {
                    let direct = counts.iter().filter(|&&c| c > 0 && bin.lower <= c && c < bin.upper).count() as u64;
                    prop_assert_eq!(bin.frequency, direct);
                }
            }
        }
    }
}
