//! Per-citing-year top-percentile membership, the N_TOPp+ landmark
//! indicator, and the RPYS median-deviation spectrum.
//!
//! For each citing year the windowed counts of all references in play are
//! sorted in descending order and the count `c` at rank `floor(1 + n*p)` is
//! taken as the percentile threshold. A reference is a top cited reference
//! in that year when its windowed count is strictly above `c` and strictly
//! above the year's expected (mean) count. N_TOPp+ is the number of citing
//! years in which that holds.
//!
//! Membership never touches floating point: ranks come from exact rational
//! scaling and the mean comparison `count > total / n` is evaluated as
//! `count * n > total` in wide integers.

use rayon::prelude::*;

use crate::fraction::Fraction;
use crate::matrix::CitationMatrix;

/// Percentile level and smoothing half-width for the indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PercentileConfig {
    /// Fraction in (0, 1): 0.001 for the top 0.1%, 0.01 for the top 1%.
    pub p: Fraction,
    /// Half-width of the citing-year window (`n_pct_range`).
    pub n_pct_range: u32,
}

impl PercentileConfig {
    pub fn new(p: Fraction, n_pct_range: u32) -> Self {
        assert!(p.is_proper(), "percentile level must lie strictly in (0, 1)");
        PercentileConfig { p, n_pct_range }
    }
}

/// One output row of the indicator table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorRow {
    pub cr: String,
    pub rpy: Option<i32>,
    pub n_cr: u64,
    pub n_top: u32,
}

/// One row of the RPYS spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct RpySpectrumRow {
    pub rpy: i32,
    /// Occurrences of all references published in this year.
    pub n_cr_year: u64,
    /// `n_cr_year` minus the sliding median; an exact multiple of 0.5
    /// because an even-length window takes the mean of its central pair.
    pub median_dev: f64,
}

/// The year's expected citation count `total / n`, kept as an exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpectedCount {
    pub total: u64,
    pub n: u64,
}

impl ExpectedCount {
    /// `count > total / n`, evaluated exactly.
    pub fn exceeded_by(&self, count: u64) -> bool {
        count as u128 * self.n as u128 > self.total as u128
    }

    pub fn as_f64(&self) -> f64 {
        self.total as f64 / self.n as f64
    }
}

/// 1-based rank of the percentile threshold in a descending sort of `n`
/// counts: `floor(1 + n*p)`. For p = 0.001 and n = 10,000 this is rank 11,
/// the reference that follows the top 0.1%.
pub fn threshold_rank(n: u64, p: Fraction) -> u64 {
    debug_assert!(n >= 1);
    1 + p.scaled_floor(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct YearStats {
    threshold: u64,
    population: u64,
    total: u64,
}

/// Shared per-year computation: windowed counts of every row.
fn windowed_counts(matrix: &CitationMatrix, year: i32, r: u32) -> Vec<u64> {
    (0..matrix.rows().len())
        .map(|row| matrix.windowed_count(row, year, r))
        .collect()
}

/// Threshold count, population and total from the windowed counts of one
/// citing year. `None` when no reference has a positive windowed count.
fn year_stats_from(counts: &[u64], p: Fraction) -> Option<YearStats> {
    let mut positive: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    if positive.is_empty() {
        return None;
    }
    let n = positive.len() as u64;
    let total: u64 = positive.iter().sum();
    let rank = threshold_rank(n, p);
    debug_assert!(rank >= 1 && rank <= n);
    let k = (rank - 1) as usize;
    let (_, &mut threshold, _) = positive.select_nth_unstable_by(k, |a, b| b.cmp(a));
    Some(YearStats {
        threshold,
        population: n,
        total,
    })
}

fn year_stats(matrix: &CitationMatrix, year: i32, cfg: &PercentileConfig) -> Option<YearStats> {
    year_stats_from(&windowed_counts(matrix, year, cfg.n_pct_range), cfg.p)
}

/// The citation count at the percentile rank for one citing year, i.e. the
/// value a top reference must strictly exceed. `None` means the year has no
/// citations in its window and therefore no top references.
pub fn threshold_count(matrix: &CitationMatrix, year: i32, cfg: &PercentileConfig) -> Option<u64> {
    year_stats(matrix, year, cfg).map(|s| s.threshold)
}

/// The year's expected citation count (uniform mean over the window).
/// `None` when the windowed population is empty.
pub fn expected_count(
    matrix: &CitationMatrix,
    year: i32,
    cfg: &PercentileConfig,
) -> Option<ExpectedCount> {
    year_stats(matrix, year, cfg).map(|s| ExpectedCount {
        total: s.total,
        n: s.population,
    })
}

/// Is row `row` a top cited reference in `year`? Strictly above both the
/// percentile threshold and the expected count; false in every sentinel
/// case.
pub fn is_top(matrix: &CitationMatrix, row: usize, year: i32, cfg: &PercentileConfig) -> bool {
    let Some(stats) = year_stats(matrix, year, cfg) else {
        return false;
    };
    let count = matrix.windowed_count(row, year, cfg.n_pct_range);
    is_top_with(&stats, count)
}

fn is_top_with(stats: &YearStats, count: u64) -> bool {
    count > stats.threshold
        && ExpectedCount {
            total: stats.total,
            n: stats.population,
        }
        .exceeded_by(count)
}

/// Number of citing years in `[py_min, py_max]` where row `row` is a top
/// cited reference.
pub fn n_top(
    matrix: &CitationMatrix,
    row: usize,
    cfg: &PercentileConfig,
    py_min: i32,
    py_max: i32,
) -> u32 {
    (py_min..=py_max)
        .filter(|&year| is_top(matrix, row, year, cfg))
        .count() as u32
}

/// Indicator rows for every reference in the matrix, over the matrix's own
/// citing-year range.
///
/// Years are processed one at a time; within a year the windowed counts of
/// all rows are computed in parallel. Output order follows the matrix rows.
pub fn indicator_rows(matrix: &CitationMatrix, cfg: &PercentileConfig) -> Vec<IndicatorRow> {
    let mut n_top = vec![0u32; matrix.rows().len()];
    let (py_min, py_max) = matrix.year_range();
    for year in py_min..=py_max {
        let counts: Vec<u64> = (0..matrix.rows().len())
            .into_par_iter()
            .map(|row| matrix.windowed_count(row, year, cfg.n_pct_range))
            .collect();
        let Some(stats) = year_stats_from(&counts, cfg.p) else {
            continue;
        };
        for (row, &count) in counts.iter().enumerate() {
            if is_top_with(&stats, count) {
                n_top[row] += 1;
            }
        }
    }
    matrix
        .rows()
        .iter()
        .zip(n_top)
        .map(|(row, n_top)| IndicatorRow {
            cr: row.canonical_raw.clone(),
            rpy: row.rpy,
            n_cr: row.n_cr,
            n_top,
        })
        .collect()
}

/// Median of a non-empty window; for an even length, the mean of the two
/// central values. Counts are far below 2^53, so the result is exact.
fn median(window: &[u64]) -> f64 {
    debug_assert!(!window.is_empty());
    let mut sorted = window.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid] as f64
    } else {
        (sorted[mid - 1] + sorted[mid]) as f64 / 2.0
    }
}

/// The RPYS spectrum: per reference publication year, the total occurrences
/// of references published that year and the deviation from the sliding
/// median over `[rpy - m, rpy + m]`, clipped at the data's RPY extremes.
///
/// Years without a reference year are not representable here and rows with
/// `rpy = None` are skipped; gap years inside the observed span are
/// included with a zero count.
pub fn rpys_spectrum(matrix: &CitationMatrix, median_range: u32) -> Vec<RpySpectrumRow> {
    let mut by_rpy: std::collections::BTreeMap<i32, u64> = std::collections::BTreeMap::new();
    for row in matrix.rows() {
        if let Some(rpy) = row.rpy {
            *by_rpy.entry(rpy).or_insert(0) += row.n_cr;
        }
    }
    let (Some(&lo), Some(&hi)) = (by_rpy.keys().next(), by_rpy.keys().next_back()) else {
        return Vec::new();
    };
    let series: Vec<u64> = (lo..=hi)
        .map(|y| by_rpy.get(&y).copied().unwrap_or(0))
        .collect();
    let m = median_range as usize;
    series
        .iter()
        .enumerate()
        .map(|(i, &n_cr_year)| {
            let start = i.saturating_sub(m);
            let end = (i + m).min(series.len() - 1);
            let med = median(&series[start..=end]);
            RpySpectrumRow {
                rpy: lo + i as i32,
                n_cr_year,
                median_dev: n_cr_year as f64 - med,
            }
        })
        .collect()
}
