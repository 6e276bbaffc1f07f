//! CSV output with `#` comment headers and round-trip float formatting.

use std::io::{self, Write};

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    /// Writes each line of `comment` prefixed by `# `, then the column header.
    pub fn new(mut out: W, comment: &str, columns: &[&str]) -> io::Result<Self> {
        for line in comment.lines() {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "{}", columns.join(","))?;
        Ok(Self { out, columns: columns.len() })
    }

    pub fn row(&mut self, values: &[f64]) -> io::Result<()> {
        let fields: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
        self.text_row(&fields)
    }

    pub fn text_row(&mut self, fields: &[String]) -> io::Result<()> {
        if fields.len() != self.columns {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("row has {} fields, header has {}", fields.len(), self.columns),
            ));
        }
        writeln!(self.out, "{}", fields.join(","))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Parses the numeric body of a CSV written by [`CsvWriter`], skipping
/// comments and the header.
pub fn read_numeric_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or("missing header")?;
    let columns: Vec<String> = header.split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|e| format!("{f:?}: {e}")))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((columns, rows))
}
