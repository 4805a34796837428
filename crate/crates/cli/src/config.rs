//! Pipeline configuration: a flat `key = value` file whose keys mirror the
//! batch-script parameters (`py`, `rpy`, `max_cr`, `cluster.threshold`,
//! `n_pct_range`, `filter.min_n_top`, `sort`, …), with every key also
//! settable through a CLI flag of the same name.

use std::cmp::Ordering;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rpys_core::dedup::ClusterConfig;
use rpys_core::indicators::IndicatorRow;
use rpys_core::ingest::ImportWindow;
use rpys_core::matrix::SmoothingConfig;
use rpys_core::Fraction;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Sortable output columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortColumn {
    NTop,
    NCr,
    Rpy,
    Cr,
}

impl fmt::Display for SortColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SortColumn::NTop => "N_TOP",
            SortColumn::NCr => "N_CR",
            SortColumn::Rpy => "RPY",
            SortColumn::Cr => "CR",
        };
        f.write_str(s)
    }
}

impl FromStr for SortColumn {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "N_TOP" => Ok(SortColumn::NTop),
            "N_CR" => Ok(SortColumn::NCr),
            "RPY" => Ok(SortColumn::Rpy),
            "CR" => Ok(SortColumn::Cr),
            other => err(format!(
                "unknown sort column {other:?} (expected N_TOP, N_CR, RPY or CR)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortDir {
    Asc,
    Desc,
}

/// One sort key, e.g. `N_TOP DESC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SortKey {
    pub column: SortColumn,
    pub dir: SortDir,
}

impl fmt::Display for SortKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.dir {
            SortDir::Asc => "ASC",
            SortDir::Desc => "DESC",
        };
        write!(f, "{} {}", self.column, dir)
    }
}

impl FromStr for SortKey {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split_whitespace();
        let column: SortColumn = parts
            .next()
            .ok_or_else(|| ConfigError("empty sort key".into()))?
            .parse()?;
        let dir = match parts.next() {
            None => SortDir::Asc,
            Some(d) => match d.to_ascii_uppercase().as_str() {
                "ASC" => SortDir::Asc,
                "DESC" => SortDir::Desc,
                other => return err(format!("unknown sort direction {other:?}")),
            },
        };
        if let Some(extra) = parts.next() {
            return err(format!("trailing token {extra:?} in sort key"));
        }
        Ok(SortKey { column, dir })
    }
}

/// Tie-breakers appended to every sort so the output order is total and
/// runs are byte-identical.
pub const DEFAULT_SORT: [SortKey; 4] = [
    SortKey {
        column: SortColumn::NTop,
        dir: SortDir::Desc,
    },
    SortKey {
        column: SortColumn::NCr,
        dir: SortDir::Desc,
    },
    SortKey {
        column: SortColumn::Rpy,
        dir: SortDir::Asc,
    },
    SortKey {
        column: SortColumn::Cr,
        dir: SortDir::Asc,
    },
];

/// User keys first, then any missing default key. The result always orders
/// totally because `CR` (unique per row) is present.
pub fn effective_sort(user: &[SortKey]) -> Vec<SortKey> {
    let mut keys = user.to_vec();
    for d in DEFAULT_SORT {
        if !keys.iter().any(|k| k.column == d.column) {
            keys.push(d);
        }
    }
    keys
}

/// Compare two indicator rows under a key list. A missing RPY sorts after
/// every year in ascending direction.
pub fn compare_rows(a: &IndicatorRow, b: &IndicatorRow, keys: &[SortKey]) -> Ordering {
    for key in keys {
        let ord = match key.column {
            SortColumn::NTop => a.n_top.cmp(&b.n_top),
            SortColumn::NCr => a.n_cr.cmp(&b.n_cr),
            SortColumn::Rpy => match (a.rpy, b.rpy) {
                (Some(x), Some(y)) => x.cmp(&y),
                (None, None) => Ordering::Equal,
                (None, Some(_)) => Ordering::Greater,
                (Some(_), None) => Ordering::Less,
            },
            SortColumn::Cr => a.cr.cmp(&b.cr),
        };
        let ord = match key.dir {
            SortDir::Asc => ord,
            SortDir::Desc => ord.reverse(),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Every parameter of one pipeline invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub py: ImportWindow,
    pub rpy: ImportWindow,
    pub max_cr: u32,
    pub doc_type: Option<String>,
    pub cluster: ClusterConfig,
    pub smoothing: SmoothingConfig,
    /// Percentile level for the indicator (0.001 = top 0.1%).
    pub pct: Fraction,
    /// Export filter: keep rows with `n_top >=` this.
    pub min_n_top: u32,
    pub sort: Vec<SortKey>,
    pub linked_ratio_min: Fraction,
    pub spectrum: bool,
    /// Emit a `# p=<value>` comment line above the CSV header.
    pub p_comment: bool,
    /// Optional per-cluster diagnostic dump file.
    pub dump_clusters: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            output: None,
            py: ImportWindow::new(1980, 2017, false),
            rpy: ImportWindow::new(1900, 2015, false),
            max_cr: 0,
            doc_type: None,
            cluster: ClusterConfig::default(),
            smoothing: SmoothingConfig::default(),
            pct: Fraction::new(1, 1000),
            min_n_top: 10,
            sort: vec![DEFAULT_SORT[0], DEFAULT_SORT[1]],
            linked_ratio_min: Fraction::new(3, 10),
            spectrum: false,
            p_comment: false,
            dump_clusters: None,
        }
    }
}

fn parse_bool(value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => err(format!("expected true or false, got {other:?}")),
    }
}

fn parse_window(value: &str) -> Result<ImportWindow, ConfigError> {
    let inner = value
        .trim()
        .trim_start_matches('[')
        .trim_end_matches(']');
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return err(format!(
            "expected \"min, max, include_missing\", got {value:?}"
        ));
    }
    let min: i32 = parts[0]
        .parse()
        .map_err(|_| ConfigError(format!("invalid year {:?}", parts[0])))?;
    let max: i32 = parts[1]
        .parse()
        .map_err(|_| ConfigError(format!("invalid year {:?}", parts[1])))?;
    let include_missing = parse_bool(parts[2])?;
    if min > max {
        return err(format!("window minimum {min} exceeds maximum {max}"));
    }
    Ok(ImportWindow::new(min, max, include_missing))
}

fn parse_fraction(key: &str, value: &str) -> Result<Fraction, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|e| ConfigError(format!("{key}: {e}")))
}

pub fn parse_sort(value: &str) -> Result<Vec<SortKey>, ConfigError> {
    value
        .split(',')
        .map(|part| part.trim().parse())
        .collect()
}

fn sort_to_string(keys: &[SortKey]) -> String {
    keys.iter()
        .map(SortKey::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl PipelineConfig {
    /// Apply one `key = value` assignment; shared by the config-file parser
    /// and the CLI flag overrides.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "output" => self.output = Some(PathBuf::from(value)),
            "py" => self.py = parse_window(value)?,
            "rpy" => self.rpy = parse_window(value)?,
            "max_cr" => {
                self.max_cr = value
                    .parse()
                    .map_err(|_| ConfigError(format!("max_cr: invalid count {value:?}")))?;
            }
            "doc_type" => self.doc_type = Some(value.to_string()),
            "cluster.threshold" => {
                let t: f64 = value
                    .parse()
                    .map_err(|_| ConfigError(format!("cluster.threshold: {value:?}")))?;
                if !(0.0..=1.0).contains(&t) {
                    return err(format!("cluster.threshold {t} outside [0, 1]"));
                }
                self.cluster.threshold = t;
            }
            "cluster.volume" => self.cluster.require_volume = parse_bool(value)?,
            "cluster.page" => self.cluster.require_page = parse_bool(value)?,
            "cluster.doi" => self.cluster.require_doi = parse_bool(value)?,
            "n_pct_range" => {
                self.smoothing.n_pct_range = value
                    .parse()
                    .map_err(|_| ConfigError(format!("n_pct_range: {value:?}")))?;
            }
            "median_range" => {
                self.smoothing.median_range = value
                    .parse()
                    .map_err(|_| ConfigError(format!("median_range: {value:?}")))?;
            }
            "pct" => {
                let p = parse_fraction("pct", value)?;
                if !p.is_proper() {
                    return err(format!("pct {value} must lie strictly between 0 and 1"));
                }
                self.pct = p;
            }
            "filter.min_n_top" => {
                self.min_n_top = value
                    .parse()
                    .map_err(|_| ConfigError(format!("filter.min_n_top: {value:?}")))?;
            }
            "sort" => self.sort = parse_sort(value)?,
            "linked_ratio_min" => self.linked_ratio_min = parse_fraction("linked_ratio_min", value)?,
            "spectrum" => self.spectrum = parse_bool(value)?,
            "p_comment" => self.p_comment = parse_bool(value)?,
            "dump_clusters" => self.dump_clusters = Some(PathBuf::from(value)),
            other => return err(format!("unknown configuration key {other:?}")),
        }
        Ok(())
    }

    /// Parse a whole config file body. `#` starts a comment; blank lines
    /// are ignored.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut config = PipelineConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected key = value", lineno + 1));
            };
            config
                .apply(key.trim(), value)
                .map_err(|e| ConfigError(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// Serialize to the flat format; `parse_str` of the result yields an
    /// equal configuration.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: &str| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        };
        if let Some(input) = &self.input {
            line("input", &input.display().to_string());
        }
        if let Some(output) = &self.output {
            line("output", &output.display().to_string());
        }
        let window = |w: &ImportWindow| {
            format!("{}, {}, {}", w.min_year, w.max_year, w.include_missing_year)
        };
        line("py", &window(&self.py));
        line("rpy", &window(&self.rpy));
        line("max_cr", &self.max_cr.to_string());
        if let Some(doc_type) = &self.doc_type {
            line("doc_type", doc_type);
        }
        line("cluster.threshold", &self.cluster.threshold.to_string());
        line("cluster.volume", &self.cluster.require_volume.to_string());
        line("cluster.page", &self.cluster.require_page.to_string());
        line("cluster.doi", &self.cluster.require_doi.to_string());
        line("n_pct_range", &self.smoothing.n_pct_range.to_string());
        line("median_range", &self.smoothing.median_range.to_string());
        line("pct", &self.pct.to_string());
        line("filter.min_n_top", &self.min_n_top.to_string());
        line("sort", &sort_to_string(&self.sort));
        line("linked_ratio_min", &self.linked_ratio_min.to_string());
        line("spectrum", &self.spectrum.to_string());
        line("p_comment", &self.p_comment.to_string());
        if let Some(dump) = &self.dump_clusters {
            line("dump_clusters", &dump.display().to_string());
        }
        out
    }
}
