//! Deterministic CSV export.
//!
//! UTF-8, LF line endings, RFC 4180 quoting (fields containing a comma,
//! quote or line break are double-quoted with embedded quotes doubled),
//! exactly one LF after the last row and no timestamps, so identical runs
//! produce identical bytes. A failed write removes the partial file.

use std::borrow::Cow;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rpys_core::indicators::{IndicatorRow, RpySpectrumRow};
use rpys_core::Fraction;

use crate::pipeline::PipelineError;

pub const INDICATOR_HEADER: &str = "CR,RPY,N_CR,N_TOP0_1+";
pub const SPECTRUM_HEADER: &str = "RPY,N_CR,MEDIAN_DEV";

fn csv_field(s: &str) -> Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        let mut quoted = String::with_capacity(s.len() + 2);
        quoted.push('"');
        for c in s.chars() {
            if c == '"' {
                quoted.push('"');
            }
            quoted.push(c);
        }
        quoted.push('"');
        Cow::Owned(quoted)
    } else {
        Cow::Borrowed(s)
    }
}

fn year_field(rpy: Option<i32>) -> String {
    rpy.map(|y| y.to_string()).unwrap_or_default()
}

/// Deviations are exact multiples of 0.5; print integers without a point.
fn median_dev_field(dev: f64) -> String {
    if dev.fract() == 0.0 {
        format!("{}", dev as i64)
    } else {
        format!("{dev:.1}")
    }
}

fn io_error(context: &str, path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        context: format!("{context} {}", path.display()),
        source,
    }
}

fn write_file<F>(path: &Path, write_body: F) -> Result<(), PipelineError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| io_error("cannot create", path, e))?;
    let mut writer = BufWriter::new(file);
    let result = write_body(&mut writer).and_then(|()| writer.flush());
    if let Err(e) = result {
        drop(writer);
        let _ = std::fs::remove_file(path);
        return Err(io_error("cannot write", path, e));
    }
    Ok(())
}

pub fn write_indicator_csv(
    path: &Path,
    rows: &[IndicatorRow],
    p_comment: Option<Fraction>,
) -> Result<(), PipelineError> {
    write_file(path, |w| {
        if let Some(p) = p_comment {
            writeln!(w, "# p={p}")?;
        }
        writeln!(w, "{INDICATOR_HEADER}")?;
        for row in rows {
            writeln!(
                w,
                "{},{},{},{}",
                csv_field(&row.cr),
                year_field(row.rpy),
                row.n_cr,
                row.n_top
            )?;
        }
        Ok(())
    })
}

pub fn write_spectrum_csv(path: &Path, rows: &[RpySpectrumRow]) -> Result<(), PipelineError> {
    write_file(path, |w| {
        writeln!(w, "{SPECTRUM_HEADER}")?;
        for row in rows {
            writeln!(
                w,
                "{},{},{}",
                row.rpy,
                row.n_cr_year,
                median_dev_field(row.median_dev)
            )?;
        }
        Ok(())
    })
}

/// The spectrum rides along as `<path>.rpys.csv`.
pub fn spectrum_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".rpys.csv");
    PathBuf::from(name)
}

/// Write the indicator table and, when given, the spectrum file next to it.
pub fn export_csv(
    rows: &[IndicatorRow],
    spectrum: Option<&[RpySpectrumRow]>,
    path: &Path,
    p_comment: Option<Fraction>,
) -> Result<(), PipelineError> {
    write_indicator_csv(path, rows, p_comment)?;
    if let Some(spectrum) = spectrum {
        write_spectrum_csv(&spectrum_path(path), spectrum)?;
    }
    Ok(())
}
