//! CSV tables: tabulated states and clocks in, densities / posteriors /
//! samples / sweep tables out. Floats are written with 17 significant digits
//! so files reproduce the in-memory values exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Round-trip float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A complex-valued table keyed by a strictly increasing abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTable {
    pub x: Vec<f64>,
    pub y: Vec<C64>,
}

impl ComplexTable {
    pub fn new(x: Vec<f64>, y: Vec<C64>) -> std::result::Result<Self, String> {
        if x.len() != y.len() {
            return Err("column lengths differ".into());
        }
        if x.len() < 2 {
            return Err("need at least two rows".into());
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err("non-finite entry".into());
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err("abscissa not strictly increasing".into());
        }
        Ok(Self { x, y })
    }

    /// Linear interpolation, zero outside the tabulated range.
    pub fn interpolate(&self, at: f64) -> C64 {
        let (x, y) = (&self.x, &self.y);
        if at < x[0] || at > x[x.len() - 1] {
            return C64::new(0.0, 0.0);
        }
        let k = x.partition_point(|&v| v <= at);
        if k == 0 {
            return y[0];
        }
        if k >= x.len() {
            return y[x.len() - 1];
        }
        let t = (at - x[k - 1]) / (x[k] - x[k - 1]);
        y[k - 1] * (1.0 - t) + y[k] * t
    }

    /// Trapezoid integral of `|y|^2` over `[lo, hi]` (clipped to the table).
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        self.x
            .windows(2)
            .zip(self.y.windows(2))
            .filter_map(|(xw, yw)| {
                let (a, b) = (xw[0].max(lo), xw[1].min(hi));
                (b > a).then(|| {
                    let ya = interp2(xw, yw, a).norm_sqr();
                    let yb = interp2(xw, yw, b).norm_sqr();
                    0.5 * (ya + yb) * (b - a)
                })
            })
            .sum()
    }
}

fn interp2(xw: &[f64], yw: &[C64], at: f64) -> C64 {
    let t = (at - xw[0]) / (xw[1] - xw[0]);
    yw[0] * (1.0 - t) + yw[1] * t
}

/// Read a three-column complex table with header `<key>,re,im`.
pub fn read_complex_table(path: &Path, key: &str) -> Result<ComplexTable> {
    let mut rdr = csv::Reader::from_path(path).map_err(|source| Error::Csv { path: path.to_path_buf(), source })?;
    let headers = rdr.headers().map_err(|source| Error::Csv { path: path.to_path_buf(), source })?.clone();
    let want = [key, "re", "im"];
    if headers.len() != 3 || headers.iter().zip(want).any(|(h, w)| h.trim() != w) {
        return Err(Error::Table(
            path.to_path_buf(),
            format!("expected header `{key},re,im`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|source| Error::Csv { path: path.to_path_buf(), source })?;
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Table(path.to_path_buf(), format!("row {}: column {}: {e}", line + 2, i + 1)))
        };
        x.push(parse(0)?);
        y.push(C64::new(parse(1)?, parse(2)?));
    }
    ComplexTable::new(x, y).map_err(|msg| {
        if msg.contains("non-finite") {
            Error::NonFinite(path.display().to_string())
        } else {
            Error::Table(path.to_path_buf(), msg)
        }
    })
}

/// Write rows of floats under `header`.
pub fn write_rows<'a, I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    write_with(path, header, rows.into_iter().map(|r| r.into_iter().map(fmt_f64).collect()))
}

/// Write pre-formatted rows; used where the first column is an integer index.
pub fn write_with<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", header.join(",")).map_err(io_err)?;
    for row in rows {
        writeln!(w, "{}", row.join(",")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Read back a numeric CSV written by [`write_rows`].
pub fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|source| Error::Csv { path: path.to_path_buf(), source })?;
    let header = rdr
        .headers()
        .map_err(|source| Error::Csv { path: path.to_path_buf(), source })?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|source| Error::Csv { path: path.to_path_buf(), source })?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Table(path.to_path_buf(), e.to_string()))?;
        rows.push(row);
    }
    Ok((header, rows))
}
