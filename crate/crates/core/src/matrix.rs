//! The cited-reference × citing-year count structure and its
//! window-smoothed views.

use std::collections::BTreeMap;

use crate::dedup::MergedCR;
use crate::{Error, Result};

/// Smoothing ranges shared by the indicators: `n_pct_range` widens the
/// per-year counts used for percentile ranking, `median_range` is the
/// half-width of the spectrum's sliding median. Defaults are 2 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothingConfig {
    pub n_pct_range: u32,
    pub median_range: u32,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            n_pct_range: 2,
            median_range: 2,
        }
    }
}

/// Windowed population of one citing year: `n` references seen, `total`
/// occurrences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Population {
    /// Number of merged references with a positive windowed count.
    pub n: u64,
    /// Sum of windowed counts over all rows.
    pub total: u64,
}

/// Immutable count structure over the merged cited references.
#[derive(Debug, Clone)]
pub struct CitationMatrix {
    rows: Vec<MergedCR>,
    py_min: i32,
    py_max: i32,
    totals: BTreeMap<i32, u64>,
    distinct: BTreeMap<i32, usize>,
}

/// Build the matrix for the citing-year range `[py_min, py_max]`.
///
/// Counts outside the range are dropped and each row's `n_cr` is recomputed
/// from what remains, so the matrix invariants hold even when the range is
/// narrower than the import window. Errors on an empty input.
pub fn build_matrix(
    mut merged: Vec<MergedCR>,
    py_min: i32,
    py_max: i32,
) -> Result<CitationMatrix> {
    assert!(py_min <= py_max, "citing-year range must be non-empty");
    if merged.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut totals: BTreeMap<i32, u64> = BTreeMap::new();
    let mut distinct: BTreeMap<i32, usize> = BTreeMap::new();
    for row in &mut merged {
        row.counts_by_year.retain(|&y, _| py_min <= y && y <= py_max);
        row.n_cr = row.counts_by_year.values().sum();
        for (&year, &count) in &row.counts_by_year {
            *totals.entry(year).or_insert(0) += count;
            if count > 0 {
                *distinct.entry(year).or_insert(0) += 1;
            }
        }
    }
    Ok(CitationMatrix {
        rows: merged,
        py_min,
        py_max,
        totals,
        distinct,
    })
}

impl CitationMatrix {
    pub fn rows(&self) -> &[MergedCR] {
        &self.rows
    }

    pub fn year_range(&self) -> (i32, i32) {
        (self.py_min, self.py_max)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.py_min..=self.py_max
    }

    /// Total occurrences in one citing year.
    pub fn total_in(&self, year: i32) -> u64 {
        self.totals.get(&year).copied().unwrap_or(0)
    }

    /// Number of merged references cited at least once in one citing year.
    pub fn distinct_in(&self, year: i32) -> usize {
        self.distinct.get(&year).copied().unwrap_or(0)
    }

    /// Occurrences of row `row` summed over `[year - r, year + r]`, clipped
    /// at the corpus boundaries. `r = 0` is the plain per-year count.
    pub fn windowed_count(&self, row: usize, year: i32, r: u32) -> u64 {
        let lo = year.saturating_sub(r as i32);
        let hi = year.saturating_add(r as i32);
        self.rows[row]
            .counts_by_year
            .range(lo..=hi)
            .map(|(_, &c)| c)
            .sum()
    }

    /// Windowed population for one citing year: how many references are in
    /// play and how many occurrences they add up to. This is the `n` and
    /// the mass that percentile ranks and the expected count are computed
    /// from.
    pub fn windowed_population(&self, year: i32, r: u32) -> Population {
        let mut n = 0;
        let mut total = 0;
        for row in 0..self.rows.len() {
            let c = self.windowed_count(row, year, r);
            if c > 0 {
                n += 1;
                total += c;
            }
        }
        Population { n, total }
    }
}
