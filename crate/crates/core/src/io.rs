//! CSV emission and parsing of phase-space grids and curves.
//!
//! Grid files hold `#`-prefixed `key = value` metadata lines, a `q,p,rho`
//! header and one row per cell, row-major in `q` then `p`. Floats are written
//! with 17 significant digits, which round-trips every `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::dynamics::PhaseSpaceDistribution;
use crate::error::{Error, Result};

/// `{:.16e}`: 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A rectangular grid of values with free-form metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct GridData {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `values[[i, j]]` at `(q[i], p[j])`.
    pub values: Array2<f64>,
    pub metadata: Vec<(String, String)>,
}

impl GridData {
    pub fn from_distribution(dist: &PhaseSpaceDistribution, metadata: Vec<(String, String)>) -> Self {
        Self {
            q: dist.q.clone(),
            p: dist.p.clone(),
            values: dist.values.clone(),
            metadata,
        }
    }

    /// Rescales axes and values, e.g. from reduced to SI units.
    pub fn scaled(mut self, q_scale: f64, p_scale: f64, value_scale: f64) -> Self {
        self.q.iter_mut().for_each(|q| *q *= q_scale);
        self.p.iter_mut().for_each(|p| *p *= p_scale);
        self.values.mapv_inplace(|v| v * value_scale);
        self
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `data` as CSV to `out`.
pub fn write_grid<W: Write>(data: &GridData, out: W) -> Result<()> {
    if data.q.is_empty() || data.p.is_empty() {
        return Err(Error::InvalidState("refusing to write an empty grid".into()));
    }
    if data.values.dim() != (data.q.len(), data.p.len()) {
        return Err(Error::Mismatch(format!(
            "values are {:?} but axes are {} x {}",
            data.values.dim(),
            data.q.len(),
            data.p.len()
        )));
    }
    let mut out = BufWriter::new(out);
    let io = |e: std::io::Error| Error::Io {
        path: "<grid output>".into(),
        source: e,
    };
    for (k, v) in &data.metadata {
        writeln!(out, "# {k} = {v}").map_err(io)?;
    }
    writeln!(out, "q,p,rho").map_err(io)?;
    for (i, q) in data.q.iter().enumerate() {
        let qs = format_float(*q);
        for (j, p) in data.p.iter().enumerate() {
            writeln!(out, "{qs},{},{}", format_float(*p), format_float(data.values[[i, j]])).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

/// Writes `data` to `path`.
pub fn emit_grid(data: &GridData, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    write_grid(data, file).map_err(|e| match e {
        Error::Io { source, .. } => io_error(path, source),
        other => other,
    })
}

/// Reads a grid written by [`write_grid`]. Errors carry 1-based line numbers.
pub fn parse_grid<R: Read>(input: R) -> Result<GridData> {
    let reader = BufReader::new(input);
    let mut metadata = Vec::new();
    let mut header_seen = false;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = meta.split_once('=') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols != ["q", "p", "rho"] {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("expected header `q,p,rho`, found `{trimmed}`"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let parse = |s: &str, name: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                reason: format!("{name}: `{}` ({e})", s.trim()),
            })
        };
        rows.push((parse(fields[0], "q")?, parse(fields[1], "p")?, parse(fields[2], "rho")?));
    }
    if !header_seen {
        return Err(Error::Parse {
            line: 0,
            reason: "missing `q,p,rho` header".into(),
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            reason: "grid has no rows".into(),
        });
    }
    let first_q = rows[0].0;
    let p_count = rows.iter().take_while(|r| r.0.to_bits() == first_q.to_bits()).count();
    if !rows.len().is_multiple_of(p_count) {
        return Err(Error::Parse {
            line: 0,
            reason: format!("{} rows do not form columns of {p_count}", rows.len()),
        });
    }
    let q_count = rows.len() / p_count;
    let p: Vec<f64> = rows[..p_count].iter().map(|r| r.1).collect();
    let mut q = Vec::with_capacity(q_count);
    let mut values = Array2::zeros((q_count, p_count));
    for i in 0..q_count {
        let col = &rows[i * p_count..(i + 1) * p_count];
        q.push(col[0].0);
        for (j, r) in col.iter().enumerate() {
            if r.0.to_bits() != col[0].0.to_bits() || r.1.to_bits() != p[j].to_bits() {
                return Err(Error::Parse {
                    line: 0,
                    reason: format!("row {} breaks the rectangular q-major layout", i * p_count + j + 1),
                });
            }
            values[[i, j]] = r.2;
        }
    }
    Ok(GridData { q, p, values, metadata })
}

pub fn read_grid(path: &Path) -> Result<GridData> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    parse_grid(file)
}

/// Writes a `q,p` curve.
pub fn write_curve(path: &Path, points: &[(f64, f64)], metadata: &[(String, String)]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut out = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        for (k, v) in metadata {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(out, "q,p")?;
        for (q, p) in points {
            writeln!(out, "{},{}", format_float(*q), format_float(*p))?;
        }
        out.flush()
    };
    body().map_err(|e| io_error(path, e))
}

/// Reads the first two columns of a CSV with a header line as `(q, p)` pairs.
pub fn read_curve(path: &Path) -> Result<Vec<(f64, f64)>> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |k: usize| -> Result<f64> {
            record
                .get(k)
                .ok_or_else(|| Error::Parse {
                    line,
                    reason: format!("missing column {}", k + 1),
                })?
                .parse::<f64>()
                .map_err(|e| Error::Parse {
                    line,
                    reason: e.to_string(),
                })
        };
        points.push((field(0)?, field(1)?));
    }
    Ok(points)
}

/// Writes a CSV table with the given header and rows of preformatted cells.
pub fn write_table(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let wrap = |e: csv::Error| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    };
    writer.write_record(header).map_err(wrap)?;
    for row in rows {
        writer.write_record(&row).map_err(wrap)?;
    }
    writer.flush().map_err(|e| io_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridData {
        GridData {
            q: vec![0.1, 0.2],
            p: vec![-1.0, 0.0, 1.0],
            values: Array2::from_shape_fn((2, 3), |(i, j)| (i * 3 + j) as f64 / 7.0),
            metadata: vec![("nu".into(), "0".into())],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut buf = Vec::new();
        write_grid(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# nu = 0\nq,p,rho\n"));
        assert_eq!(parse_grid(buf.as_slice()).unwrap(), sample());
    }

    #[test]
    fn empty_grid_rejected() {
        let mut g = sample();
        g.q.clear();
        g.values = Array2::zeros((0, 3));
        assert!(write_grid(&g, Vec::new()).is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "# a = 1\nq,p,rho\n0,0,1\n0,1,x\n";
        match parse_grid(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }
}
