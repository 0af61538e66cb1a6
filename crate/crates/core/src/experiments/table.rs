//! Numeric tables and their CSV / JSON serialization.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use super::config::OutputFormat;
use crate::error::{Error, Result};

const SIGNIFICANT: i32 = 6;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl OutputTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Configuration(format!(
                "row has {} values, header has {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_g6(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// `{"header": [...], "rows": [[...], ...]}`. Non-finite values become
    /// `null`, which JSON requires.
    pub fn to_json(&self) -> String {
        let header: Vec<String> = self.header.iter().map(|h| json_string(h)).collect();
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|row| {
                let cells: Vec<String> = row
                    .iter()
                    .map(|&v| if v.is_finite() { format_g6(v) } else { "null".into() })
                    .collect();
                format!("[{}]", cells.join(","))
            })
            .collect();
        format!("{{\"header\":[{}],\"rows\":[{}]}}\n", header.join(","), rows.join(","))
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// C `printf("%.6g")`.
pub fn format_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    // The exponent after rounding to six significant digits picks the style.
    let sci = format!("{:.*e}", (SIGNIFICANT - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..SIGNIFICANT).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIGNIFICANT - 1 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes the table to `path`, or to standard output when `path` is `-`.
pub fn write_table(table: &OutputTable, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    let path = path.as_ref();
    let body = table.render(format);
    let io_err = |source: io::Error| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if path == Path::new("-") {
        let mut out = io::stdout().lock();
        out.write_all(body.as_bytes()).map_err(io_err)?;
        return out.flush().map_err(io_err);
    }
    let mut file = File::create(path).map_err(io_err)?;
    file.write_all(body.as_bytes()).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (100000.0, "100000"),
            (1000000.0, "1e+06"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (0.0001, "0.0001"),
            (0.00001, "1e-05"),
            (0.000123456789, "0.000123457"),
            (1e-12, "1e-12"),
            (-2.5, "-2.5"),
            (0.173627446966806, "0.173627"),
            (4.34485319720607, "4.34485"),
            (999999.5, "1e+06"),
            (66.666666666, "66.6667"),
            (1e100, "1e+100"),
            (0.0, "0"),
            (f64::NAN, "nan"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g6(x), want, "{x}");
        }
    }

    #[test]
    fn csv_contract() {
        let mut t = OutputTable::new(["a", "b"]);
        assert_eq!(t.to_csv(), "a,b\n");
        t.push_row(vec![1.0, 0.5]).unwrap();
        assert_eq!(t.to_csv(), "a,b\n1,0.5\n");
        assert!(t.push_row(vec![1.0]).is_err());
    }

    #[test]
    fn json_shape() {
        let mut t = OutputTable::new(["x", "y\"q"]);
        t.push_row(vec![1e-12, f64::NAN]).unwrap();
        assert_eq!(t.to_json(), "{\"header\":[\"x\",\"y\\\"q\"],\"rows\":[[1e-12,null]]}\n");
    }

    #[test]
    fn write_reports_path() {
        let t = OutputTable::new(["a"]);
        let err = write_table(&t, "/nonexistent-dir/out.csv", OutputFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }
}
