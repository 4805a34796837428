//! Streaming parser for Web of Science tagged-field plain-text exports.
//!
//! The tagged format is line oriented: a record opens at a `PT ` line,
//! fields are two-character tags at the start of a line, continuation lines
//! begin with three spaces, `ER` closes a record and `EF` closes the file.
//! [`WosReader`] walks that structure in a single pass holding one record at
//! a time, so memory is bounded by the largest record rather than the file.
//!
//! Each continuation line of the `CR` field is one raw cited-reference
//! string; [`parse_cr`] applies the comma-separated micro-grammar
//! (`AUTHOR, YEAR, SOURCE` plus optional `V…`/`P…`/`DOI …` segments) and
//! [`VariantTable`] aggregates occurrence counts per citing year.
//!
//! Input is decoded as UTF-8 with lossy replacement; WoS exports are
//! occasionally Latin-1 contaminated and ingestion must never abort on
//! encoding.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::io::BufRead;
use std::io::Write;
use std::mem;

use crate::{Error, Result};

/// Year admission window. The flag controls whether records or references
/// without a parseable year are admitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImportWindow {
    pub min_year: i32,
    pub max_year: i32,
    pub include_missing_year: bool,
}

impl ImportWindow {
    pub fn new(min_year: i32, max_year: i32, include_missing_year: bool) -> Self {
        assert!(min_year <= max_year, "window min_year must be <= max_year");
        ImportWindow {
            min_year,
            max_year,
            include_missing_year,
        }
    }

    pub fn admits(&self, year: Option<i32>) -> bool {
        match year {
            Some(y) => self.min_year <= y && y <= self.max_year,
            None => self.include_missing_year,
        }
    }
}

/// One citing paper from the export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceRecord {
    /// UT tag when present, otherwise a synthetic `label:offset` id.
    pub record_id: String,
    /// Parsed PY tag. `None` only when the PY window admits missing years.
    pub citing_year: Option<i32>,
    /// DT tag, verbatim.
    pub doc_type: Option<String>,
    /// Raw CR strings in file order, no empty entries.
    pub cited_refs: Vec<String>,
}

/// One parsed cited-reference string with its occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitedRefVariant {
    /// The CR string exactly as read.
    pub raw: String,
    pub author: String,
    /// Reference publication year, absent when no segment is a 4-digit year.
    pub rpy: Option<i32>,
    pub source: String,
    /// Stored without the `V` prefix.
    pub volume: Option<String>,
    /// Stored without the `P` prefix.
    pub page: Option<String>,
    /// Stored without the `DOI ` prefix.
    pub doi: Option<String>,
    /// Occurrences per citing year.
    pub counts_by_year: BTreeMap<i32, u64>,
    /// Sum of `counts_by_year` values.
    pub total_count: u64,
}

impl CitedRefVariant {
    fn count(&mut self, citing_year: i32) {
        *self.counts_by_year.entry(citing_year).or_insert(0) += 1;
        self.total_count += 1;
    }
}

/// Import-time options, defaulting to the windows the pipeline was designed
/// around: PY [1980, 2017], RPY [1900, 2015], both dropping missing years,
/// no per-record reference cap and no document-type filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportOptions {
    pub py_window: ImportWindow,
    pub rpy_window: ImportWindow,
    /// 0 means no cap; otherwise each record keeps only its first `max_cr`
    /// references.
    pub max_cr: u32,
    /// When set, only records whose DT equals this (case-insensitively) are
    /// admitted.
    pub doc_type_filter: Option<String>,
    /// Used for synthetic record ids when UT is absent.
    pub source_label: String,
}

impl Default for ImportOptions {
    fn default() -> Self {
        ImportOptions {
            py_window: ImportWindow::new(1980, 2017, false),
            rpy_window: ImportWindow::new(1900, 2015, false),
            max_cr: 0,
            doc_type_filter: None,
            source_label: "input".to_string(),
        }
    }
}

/// Counters accumulated while reading and aggregating.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    /// Records yielded (window and filter passed).
    pub records_admitted: u64,
    /// Records dropped by the PY window or document-type filter.
    pub records_skipped: u64,
    /// Structurally broken records (no ER before the next PT or EOF).
    pub records_malformed: u64,
    /// CR occurrences counted into the variant table.
    pub occurrences_admitted: u64,
    /// CR occurrences dropped by the RPY window.
    pub occurrences_rejected: u64,
    /// CR occurrences from admitted records without a citing year; they
    /// cannot be bucketed and do not enter the table.
    pub occurrences_yearless: u64,
}

struct PendingRecord {
    offset: u64,
    py: Option<String>,
    ut: Option<String>,
    dt: Option<String>,
    refs: Vec<String>,
}

/// Single-pass reader over a tagged-field WoS export.
///
/// Yields one [`SourceRecord`] per admitted `PT`…`ER` block. I/O failures
/// are fatal and carry the byte offset reached; structurally broken records
/// are skipped and counted in [`IngestStats::records_malformed`].
pub struct WosReader<R: BufRead> {
    inner: R,
    options: ImportOptions,
    line: Vec<u8>,
    offset: u64,
    pending: Option<PendingRecord>,
    in_cr: bool,
    done: bool,
    stats: IngestStats,
}

impl<R: BufRead> WosReader<R> {
    pub fn new(inner: R, options: ImportOptions) -> Self {
        WosReader {
            inner,
            options,
            line: Vec::new(),
            offset: 0,
            pending: None,
            in_cr: false,
            done: false,
            stats: IngestStats::default(),
        }
    }

    pub fn options(&self) -> &ImportOptions {
        &self.options
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    /// Byte offset consumed so far.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn push_ref(refs: &mut Vec<String>, max_cr: u32, value: &str) {
        let value = value.trim();
        if value.is_empty() {
            return;
        }
        if max_cr > 0 && refs.len() >= max_cr as usize {
            return;
        }
        refs.push(value.to_string());
    }

    fn finish(&mut self, record: PendingRecord) -> Option<SourceRecord> {
        let citing_year = record.py.as_deref().and_then(parse_year);
        if !self.options.py_window.admits(citing_year) {
            self.stats.records_skipped += 1;
            return None;
        }
        if let Some(filter) = &self.options.doc_type_filter {
            let matches = record
                .dt
                .as_deref()
                .is_some_and(|dt| dt.eq_ignore_ascii_case(filter));
            if !matches {
                self.stats.records_skipped += 1;
                return None;
            }
        }
        self.stats.records_admitted += 1;
        let record_id = match record.ut.filter(|ut| !ut.is_empty()) {
            Some(ut) => ut,
            None => format!("{}:{}", self.options.source_label, record.offset),
        };
        Some(SourceRecord {
            record_id,
            citing_year,
            doc_type: record.dt,
            cited_refs: record.refs,
        })
    }

    /// Advance to the next admitted record, or `None` at end of input.
    pub fn next_record(&mut self) -> Result<Option<SourceRecord>> {
        loop {
            if self.done {
                return Ok(None);
            }
            self.line.clear();
            let line_offset = self.offset;
            let n = self
                .inner
                .read_until(b'\n', &mut self.line)
                .map_err(|source| Error::Io {
                    offset: line_offset,
                    source,
                })?;
            if n == 0 {
                self.done = true;
                if self.pending.take().is_some() {
                    self.stats.records_malformed += 1;
                }
                return Ok(None);
            }
            self.offset += n as u64;

            let mut line: &[u8] = &self.line;
            while let Some((&last, rest)) = line.split_last() {
                if last == b'\n' || last == b'\r' {
                    line = rest;
                } else {
                    break;
                }
            }
            if line_offset == 0 {
                // UTF-8 byte-order mark
                line = line.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(line);
            }
            if line.is_empty() {
                continue;
            }

            if line.starts_with(b"   ") {
                if self.in_cr {
                    if let Some(pending) = self.pending.as_mut() {
                        let value = String::from_utf8_lossy(&line[3..]);
                        Self::push_ref(&mut pending.refs, self.options.max_cr, &value);
                    }
                }
                continue;
            }

            // A tag line is two characters optionally followed by a space
            // and the value.
            if line.len() != 2 && (line.len() < 3 || line[2] != b' ') {
                continue;
            }
            let tag = &line[..2];
            let value_bytes = if line.len() > 3 { &line[3..] } else { &[][..] };

            match tag {
                b"PT" => {
                    if self.pending.take().is_some() {
                        self.stats.records_malformed += 1;
                    }
                    self.in_cr = false;
                    self.pending = Some(PendingRecord {
                        offset: line_offset,
                        py: None,
                        ut: None,
                        dt: None,
                        refs: Vec::new(),
                    });
                }
                b"ER" => {
                    self.in_cr = false;
                    if let Some(pending) = self.pending.take() {
                        if let Some(record) = self.finish(pending) {
                            return Ok(Some(record));
                        }
                    }
                }
                b"EF" => {
                    self.done = true;
                    if self.pending.take().is_some() {
                        self.stats.records_malformed += 1;
                    }
                    return Ok(None);
                }
                _ => {
                    if let Some(pending) = self.pending.as_mut() {
                        self.in_cr = false;
                        match tag {
                            b"PY" => {
                                pending.py =
                                    Some(String::from_utf8_lossy(value_bytes).trim().to_string());
                            }
                            b"DT" => {
                                pending.dt =
                                    Some(String::from_utf8_lossy(value_bytes).trim().to_string());
                            }
                            b"UT" => {
                                pending.ut =
                                    Some(String::from_utf8_lossy(value_bytes).trim().to_string());
                            }
                            b"CR" => {
                                self.in_cr = true;
                                let value = String::from_utf8_lossy(value_bytes);
                                Self::push_ref(&mut pending.refs, self.options.max_cr, &value);
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
    }
}

impl<R: BufRead> Iterator for WosReader<R> {
    type Item = Result<SourceRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

/// A year is exactly four consecutive ASCII digits, nothing else.
fn parse_year(s: &str) -> Option<i32> {
    let s = s.trim();
    if s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

/// Parse one raw CR string into its structured fields.
///
/// Segments are comma separated in the conventional order
/// `AUTHOR, YEAR, SOURCE`, then optionally `V<token>`, `P<token>` and
/// `DOI <token>` in any order. The author is the first segment, the
/// reference year is the first segment that is a 4-digit integer, and the
/// source is the first untagged non-year segment after the author.
///
/// This function is total: arbitrary garbage degrades to empty or absent
/// fields. `None` is returned only when the RPY window rejects the
/// reference (missing year with `include_missing_year` false, or a year
/// outside the window).
pub fn parse_cr(raw: &str, rpy_window: &ImportWindow) -> Option<CitedRefVariant> {
    let mut author = "";
    let mut rpy = None;
    let mut source = "";
    let mut volume = None;
    let mut page = None;
    let mut doi = None;

    for (i, segment) in raw.split(',').enumerate() {
        let s = segment.trim();
        if i == 0 {
            author = s;
        }
        if rpy.is_none() {
            if let Some(year) = parse_year(s) {
                rpy = Some(year);
                continue;
            }
        }
        if i == 0 {
            continue;
        }
        if let Some(rest) = s.strip_prefix("DOI ") {
            let rest = rest.trim();
            if doi.is_none() && !rest.is_empty() {
                doi = Some(rest.to_string());
            }
            continue;
        }
        if let Some(rest) = tagged_token(s, b'V') {
            if volume.is_none() {
                volume = Some(rest.to_string());
            }
            continue;
        }
        if let Some(rest) = tagged_token(s, b'P') {
            if page.is_none() {
                page = Some(rest.to_string());
            }
            continue;
        }
        if source.is_empty() && parse_year(s).is_none() {
            source = s;
        }
    }

    if !rpy_window.admits(rpy) {
        return None;
    }
    Some(CitedRefVariant {
        raw: raw.to_string(),
        author: author.to_string(),
        rpy,
        source: source.to_string(),
        volume,
        page,
        doi,
        counts_by_year: BTreeMap::new(),
        total_count: 0,
    })
}

/// `V32` → `32`, `P163` → `163`. The remainder must start with a digit so
/// that sources like `VACCINE` or `PHYS REV` are not mistaken for tokens.
fn tagged_token(s: &str, prefix: u8) -> Option<&str> {
    let bytes = s.as_bytes();
    if bytes.len() >= 2 && bytes[0] == prefix && bytes[1].is_ascii_digit() {
        Some(&s[1..])
    } else {
        None
    }
}

/// Aggregated cited-reference variants keyed by their raw string.
///
/// Built incrementally from a record stream; its size depends on the number
/// of distinct admitted references, never on the input length.
#[derive(Debug, Default)]
pub struct VariantTable {
    variants: HashMap<String, CitedRefVariant>,
    occurrences_admitted: u64,
    occurrences_rejected: u64,
    occurrences_yearless: u64,
}

impl VariantTable {
    pub fn new() -> Self {
        VariantTable::default()
    }

    /// Count every admissible reference of `record` into the table.
    pub fn add_record(&mut self, record: &SourceRecord, rpy_window: &ImportWindow) {
        let Some(year) = record.citing_year else {
            self.occurrences_yearless += record.cited_refs.len() as u64;
            return;
        };
        for raw in &record.cited_refs {
            if let Some(variant) = self.variants.get_mut(raw) {
                variant.count(year);
                self.occurrences_admitted += 1;
            } else if let Some(mut variant) = parse_cr(raw, rpy_window) {
                variant.count(year);
                self.occurrences_admitted += 1;
                self.variants.insert(raw.clone(), variant);
            } else {
                self.occurrences_rejected += 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.variants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    pub fn occurrences_admitted(&self) -> u64 {
        self.occurrences_admitted
    }

    /// Drain into a vector ordered by raw string, so downstream results do
    /// not depend on hash iteration order.
    pub fn into_variants(self) -> Vec<CitedRefVariant> {
        let mut variants: Vec<CitedRefVariant> = self.variants.into_values().collect();
        variants.sort_unstable_by(|a, b| a.raw.cmp(&b.raw));
        variants
    }

    /// Lower-bound estimate of the table's live heap bytes: string
    /// capacities (the raw string is held twice, as key and as field),
    /// entry structs and count-map payloads. Allocator and bucket overhead
    /// are not modelled.
    pub fn approx_heap_bytes(&self) -> usize {
        let mut bytes = self.variants.capacity()
            * (mem::size_of::<String>() + mem::size_of::<CitedRefVariant>());
        for (key, v) in &self.variants {
            bytes += key.capacity();
            bytes += v.raw.capacity();
            bytes += v.author.capacity();
            bytes += v.source.capacity();
            for s in [&v.volume, &v.page, &v.doi].into_iter().flatten() {
                bytes += mem::size_of::<String>() + s.capacity();
            }
            bytes += v.counts_by_year.len() * (mem::size_of::<i32>() + mem::size_of::<u64>());
        }
        bytes
    }

    fn stats(&self) -> IngestStats {
        IngestStats {
            occurrences_admitted: self.occurrences_admitted,
            occurrences_rejected: self.occurrences_rejected,
            occurrences_yearless: self.occurrences_yearless,
            ..IngestStats::default()
        }
    }
}

/// Parse a whole export and aggregate it in one pass.
pub fn ingest<R: BufRead>(reader: R, options: ImportOptions) -> Result<(VariantTable, IngestStats)> {
    let rpy_window = options.rpy_window;
    let mut wos = WosReader::new(reader, options);
    let mut table = VariantTable::new();
    while let Some(record) = wos.next_record()? {
        table.add_record(&record, &rpy_window);
    }
    let mut stats = wos.stats();
    let table_stats = table.stats();
    stats.occurrences_admitted = table_stats.occurrences_admitted;
    stats.occurrences_rejected = table_stats.occurrences_rejected;
    stats.occurrences_yearless = table_stats.occurrences_yearless;
    Ok((table, stats))
}

/// Occurrence-weighted fraction of references satisfying `linked`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkedStats {
    pub linked: u64,
    pub total: u64,
}

impl LinkedStats {
    pub fn fraction(&self) -> f64 {
        self.linked as f64 / self.total as f64
    }
}

/// Compute the linked-reference ratio over all occurrences.
///
/// Each occurrence of a variant counts once, so a reference cited 50 times
/// weighs 50, not 1. Errors with [`Error::NoCitedReferences`] on an empty
/// corpus.
pub fn linked_ratio<F>(variants: &[CitedRefVariant], linked: F) -> Result<LinkedStats>
where
    F: Fn(&CitedRefVariant) -> bool,
{
    let mut stats = LinkedStats { linked: 0, total: 0 };
    for v in variants {
        stats.total += v.total_count;
        if linked(v) {
            stats.linked += v.total_count;
        }
    }
    if stats.total == 0 {
        return Err(Error::NoCitedReferences);
    }
    Ok(stats)
}

/// Stand-in for "resolvable to an indexed record": carries a DOI, or has
/// year, volume and page all present.
pub fn default_linked_predicate(v: &CitedRefVariant) -> bool {
    v.doi.is_some() || (v.rpy.is_some() && v.volume.is_some() && v.page.is_some())
}

/// Serialize a record back to the tagged format accepted by [`WosReader`].
///
/// The record id is written as UT, so synthetic ids survive a round trip.
pub fn write_record<W: Write>(w: &mut W, record: &SourceRecord) -> std::io::Result<()> {
    writeln!(w, "PT J")?;
    if let Some(year) = record.citing_year {
        writeln!(w, "PY {year}")?;
    }
    if let Some(dt) = &record.doc_type {
        writeln!(w, "DT {dt}")?;
    }
    writeln!(w, "UT {}", record.record_id)?;
    let mut refs = record.cited_refs.iter();
    if let Some(first) = refs.next() {
        writeln!(w, "CR {first}")?;
        for r in refs {
            writeln!(w, "   {r}")?;
        }
    }
    writeln!(w, "ER")?;
    writeln!(w)
}
