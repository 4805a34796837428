//! End-to-end pipeline execution: ingest → gate → cluster → merge →
//! indicators → filter → sort → export, plus the `info` corpus report and
//! the standalone spectrum export.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rpys_core::dedup::{cluster, merge, MergedCR};
use rpys_core::indicators::{indicator_rows, rpys_spectrum, PercentileConfig};
use rpys_core::ingest::{
    default_linked_predicate, ingest, linked_ratio, CitedRefVariant, ImportOptions, IngestStats,
    LinkedStats,
};
use rpys_core::matrix::{build_matrix, CitationMatrix};
use rpys_core::Fraction;
use thiserror::Error;

use crate::config::{compare_rows, effective_sort, PipelineConfig};
use crate::export;

/// Pipeline failures, mapped onto process exit codes by the CLI:
/// configuration problems exit 2, a failed corpus gate exits 3, I/O and
/// data errors exit 4.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),

    #[error("linked reference ratio {ratio:.4} is below the required minimum {min} ({linked}/{total} occurrences); pass --force to analyse anyway")]
    GateFailed {
        ratio: f64,
        min: Fraction,
        linked: u64,
        total: u64,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },

    #[error("no records")]
    NoRecords,

    #[error(transparent)]
    Core(#[from] rpys_core::Error),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::GateFailed { .. } => 3,
            PipelineError::Io { .. } | PipelineError::NoRecords | PipelineError::Core(_) => 4,
        }
    }
}

/// What `run` did, printed to stderr by the CLI.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records_read: u64,
    pub records_skipped: u64,
    pub records_malformed: u64,
    pub occurrences: u64,
    pub variants: usize,
    pub clusters: usize,
    pub rows_exported: usize,
    pub linked_ratio: f64,
    pub gate_forced: bool,
    pub min_n_top: u32,
}

impl RunSummary {
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "records read: {}", self.records_read)?;
        writeln!(w, "records skipped: {}", self.records_skipped)?;
        if self.records_malformed > 0 {
            writeln!(w, "records malformed: {}", self.records_malformed)?;
        }
        writeln!(w, "cited reference occurrences: {}", self.occurrences)?;
        writeln!(w, "distinct variants: {}", self.variants)?;
        writeln!(w, "clusters: {}", self.clusters)?;
        writeln!(w, "linked ratio: {:.4}", self.linked_ratio)?;
        writeln!(w, "rows exported: {}", self.rows_exported)?;
        if self.rows_exported == 0 && self.min_n_top > 0 {
            writeln!(
                w,
                "note: no cited reference reached N_TOP >= {}; retry with a smaller --min-indicator",
                self.min_n_top
            )?;
        }
        Ok(())
    }
}

struct Corpus {
    variants: Vec<CitedRefVariant>,
    stats: IngestStats,
    linked: LinkedStats,
}

fn import_options(config: &PipelineConfig, input: &Path) -> ImportOptions {
    ImportOptions {
        py_window: config.py,
        rpy_window: config.rpy,
        max_cr: config.max_cr,
        doc_type_filter: config.doc_type.clone(),
        source_label: input.display().to_string(),
    }
}

fn required_input(config: &PipelineConfig) -> Result<std::path::PathBuf, PipelineError> {
    config
        .input
        .clone()
        .ok_or_else(|| PipelineError::Config("no input file given (use --input)".into()))
}

fn required_output(config: &PipelineConfig) -> Result<std::path::PathBuf, PipelineError> {
    config
        .output
        .clone()
        .ok_or_else(|| PipelineError::Config("no output file given (use --out)".into()))
}

fn load_corpus(config: &PipelineConfig, force: bool) -> Result<Corpus, PipelineError> {
    let input = required_input(config)?;
    let file = File::open(&input).map_err(|e| PipelineError::Io {
        context: format!("cannot open {}", input.display()),
        source: e,
    })?;
    let reader = BufReader::with_capacity(256 * 1024, file);
    let (table, stats) = ingest(reader, import_options(config, &input))?;
    let variants = table.into_variants();
    let linked = linked_ratio(&variants, default_linked_predicate)?;

    let gate_passes = config.linked_ratio_min.le_frac(linked.linked, linked.total);
    if !gate_passes {
        if !force {
            return Err(PipelineError::GateFailed {
                ratio: linked.fraction(),
                min: config.linked_ratio_min,
                linked: linked.linked,
                total: linked.total,
            });
        }
        eprintln!(
            "warning: linked reference ratio {:.4} is below the minimum {}, continuing because of --force",
            linked.fraction(),
            config.linked_ratio_min
        );
    }
    Ok(Corpus {
        variants,
        stats,
        linked,
    })
}

fn dump_clusters(path: &Path, merged: &[MergedCR]) -> Result<(), PipelineError> {
    let file = File::create(path).map_err(|e| PipelineError::Io {
        context: format!("cannot create {}", path.display()),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    let result = (|| {
        for m in merged {
            let rpy = m.rpy.map(|y| y.to_string()).unwrap_or_default();
            writeln!(w, "{rpy}\t{}\t{}", m.member_count, m.canonical_raw)?;
        }
        w.flush()
    })();
    result.map_err(|e| PipelineError::Io {
        context: format!("cannot write {}", path.display()),
        source: e,
    })
}

fn cluster_and_merge(
    config: &PipelineConfig,
    variants: &[CitedRefVariant],
) -> Result<(Vec<MergedCR>, usize), PipelineError> {
    let partition = cluster(variants, &config.cluster);
    let merged = merge(variants, &partition);
    if let Some(path) = &config.dump_clusters {
        dump_clusters(path, &merged)?;
    }
    Ok((merged, partition.len()))
}

fn matrix_of(config: &PipelineConfig, merged: Vec<MergedCR>) -> Result<CitationMatrix, PipelineError> {
    Ok(build_matrix(
        merged,
        config.py.min_year,
        config.py.max_year,
    )?)
}

/// Execute the full pipeline and write the indicator CSV (plus the spectrum
/// file when enabled). Aborts without writing anything when the linked
/// ratio is below the gate and `force` is false.
pub fn run(config: &PipelineConfig, force: bool) -> Result<RunSummary, PipelineError> {
    let output = required_output(config)?;
    let corpus = load_corpus(config, force)?;
    let gate_forced = !config
        .linked_ratio_min
        .le_frac(corpus.linked.linked, corpus.linked.total);

    let (merged, cluster_count) = cluster_and_merge(config, &corpus.variants)?;
    let matrix = matrix_of(config, merged)?;

    let pct = PercentileConfig::new(config.pct, config.smoothing.n_pct_range);
    let mut rows = indicator_rows(&matrix, &pct);
    rows.retain(|row| row.n_top >= config.min_n_top);
    let keys = effective_sort(&config.sort);
    rows.sort_by(|a, b| compare_rows(a, b, &keys));

    let spectrum = config
        .spectrum
        .then(|| rpys_spectrum(&matrix, config.smoothing.median_range));
    let p_comment = config.p_comment.then_some(config.pct);
    export::export_csv(&rows, spectrum.as_deref(), &output, p_comment)?;

    Ok(RunSummary {
        records_read: corpus.stats.records_admitted,
        records_skipped: corpus.stats.records_skipped,
        records_malformed: corpus.stats.records_malformed,
        occurrences: corpus.stats.occurrences_admitted,
        variants: corpus.variants.len(),
        clusters: cluster_count,
        rows_exported: rows.len(),
        linked_ratio: corpus.linked.fraction(),
        gate_forced,
        min_n_top: config.min_n_top,
    })
}

/// Corpus statistics, one `key: value` line each.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoReport {
    pub records: u64,
    pub citing_year_span: Option<(i32, i32)>,
    pub occurrences: u64,
    pub distinct_variants: usize,
    pub linked: LinkedStats,
    pub rpy_span: Option<(i32, i32)>,
}

impl fmt::Display for InfoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let span = |s: Option<(i32, i32)>| match s {
            Some((lo, hi)) => format!("{lo}-{hi}"),
            None => "none".to_string(),
        };
        writeln!(f, "records: {}", self.records)?;
        writeln!(f, "citing year span: {}", span(self.citing_year_span))?;
        writeln!(f, "cited reference occurrences: {}", self.occurrences)?;
        writeln!(f, "distinct variants: {}", self.distinct_variants)?;
        writeln!(f, "linked ratio: {:.4}", self.linked.fraction())?;
        write!(f, "rpy span: {}", span(self.rpy_span))
    }
}

/// Parse the corpus and report its shape without clustering or exporting.
pub fn info(config: &PipelineConfig) -> Result<InfoReport, PipelineError> {
    let input = required_input(config)?;
    let file = File::open(&input).map_err(|e| PipelineError::Io {
        context: format!("cannot open {}", input.display()),
        source: e,
    })?;
    let reader = BufReader::with_capacity(256 * 1024, file);
    let (table, stats) = ingest(reader, import_options(config, &input))?;
    if stats.records_admitted == 0 {
        return Err(PipelineError::NoRecords);
    }
    let variants = table.into_variants();
    let linked = linked_ratio(&variants, default_linked_predicate)?;

    let mut citing_year_span: Option<(i32, i32)> = None;
    let mut rpy_span: Option<(i32, i32)> = None;
    let widen = |span: &mut Option<(i32, i32)>, year: i32| {
        *span = Some(match *span {
            None => (year, year),
            Some((lo, hi)) => (lo.min(year), hi.max(year)),
        });
    };
    for v in &variants {
        for &year in v.counts_by_year.keys() {
            widen(&mut citing_year_span, year);
        }
        if let Some(rpy) = v.rpy {
            widen(&mut rpy_span, rpy);
        }
    }

    Ok(InfoReport {
        records: stats.records_admitted,
        citing_year_span,
        occurrences: stats.occurrences_admitted,
        distinct_variants: variants.len(),
        linked,
        rpy_span,
    })
}

/// Run ingest → gate → cluster → merge and write only the spectrum CSV to
/// the configured output path.
pub fn spectrum(config: &PipelineConfig, force: bool) -> Result<RunSummary, PipelineError> {
    let output = required_output(config)?;
    let corpus = load_corpus(config, force)?;
    let gate_forced = !config
        .linked_ratio_min
        .le_frac(corpus.linked.linked, corpus.linked.total);
    let (merged, cluster_count) = cluster_and_merge(config, &corpus.variants)?;
    let matrix = matrix_of(config, merged)?;
    let rows = rpys_spectrum(&matrix, config.smoothing.median_range);
    export::write_spectrum_csv(&output, &rows)?;
    Ok(RunSummary {
        records_read: corpus.stats.records_admitted,
        records_skipped: corpus.stats.records_skipped,
        records_malformed: corpus.stats.records_malformed,
        occurrences: corpus.stats.occurrences_admitted,
        variants: corpus.variants.len(),
        clusters: cluster_count,
        rows_exported: rows.len(),
        linked_ratio: corpus.linked.fraction(),
        gate_forced,
        min_n_top: 0,
    })
}
