//! `N x p` replicate matrix with provenance, plus its CSV and binary forms.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Result, StatsError};

/// First 16 bytes of the binary sample format.
pub const BINARY_MAGIC: &[u8; 16] = b"STEINPA-SAMPLES1";
const CSV_META_PREFIX: &str = "# steinpa-samples ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Meta {
    model: String,
    seed: Option<u64>,
    params: Value,
    #[serde(default)]
    warnings: Vec<String>,
    #[serde(default)]
    columns: Vec<String>,
    #[serde(default)]
    rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    p: usize,
    pub columns: Vec<String>,
    pub model: String,
    pub seed: Option<u64>,
    /// Full parameter record of the run that produced the samples.
    pub params: Value,
    pub warnings: Vec<String>,
}

impl SampleMatrix {
    /// `data` is row-major with `p` entries per row.
    pub fn new(data: Vec<f64>, p: usize, columns: Vec<String>, model: &str) -> Result<Self> {
        if p == 0 || columns.len() != p {
            return Err(StatsError::Shape(format!(
                "{} column names for p = {p}",
                columns.len()
            )));
        }
        if data.is_empty() || data.len() % p != 0 {
            return Err(StatsError::Shape(format!(
                "{} values do not form rows of {p}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite {
                row: i / p,
                col: i % p,
                value: data[i],
            });
        }
        Ok(SampleMatrix {
            data,
            p,
            columns,
            model: model.to_string(),
            seed: None,
            params: Value::Object(Default::default()),
            warnings: Vec::new(),
        })
    }

    pub fn from_columns(cols: &[Vec<f64>], names: Vec<String>, model: &str) -> Result<Self> {
        let n = cols.first().map_or(0, |c| c.len());
        if cols.iter().any(|c| c.len() != n) {
            return Err(StatsError::Shape("columns differ in length".into()));
        }
        let mut data = Vec::with_capacity(n * cols.len());
        for i in 0..n {
            for c in cols {
                data.push(c[i]);
            }
        }
        Self::new(data, cols.len(), names, model)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_params(mut self, params: Value) -> Self {
        self.params = params;
        self
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.p
    }

    pub fn cols(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.iter().skip(j).step_by(self.p).copied().collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn meta(&self) -> Meta {
        Meta {
            model: self.model.clone(),
            seed: self.seed,
            params: self.params.clone(),
            warnings: self.warnings.clone(),
            columns: self.columns.clone(),
            rows: self.rows(),
        }
    }

    /// CSV with a leading `# steinpa-samples {json}` provenance line, a
    /// header row and one row per replicate.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let meta = serde_json::to_string(&self.meta()).expect("metadata serializes");
        writeln!(w, "{CSV_META_PREFIX}{meta}")?;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.columns)?;
        for i in 0..self.rows() {
            wr.write_record(self.row(i).iter().map(|v| v.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads CSV written by [`write_csv`](Self::write_csv) or any plain
    /// comma-separated file with a header row and numeric cells. Lines
    /// starting with `#` before the header are treated as comments.
    pub fn read_csv<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut meta: Option<Meta> = None;
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            if !line.starts_with('#') {
                break;
            }
            if let Some(json) = line.trim_end().strip_prefix(CSV_META_PREFIX) {
                meta = Some(
                    serde_json::from_str(json)
                        .map_err(|e| StatsError::Format(format!("provenance line: {e}")))?,
                );
            }
            body_start += line.len();
        }
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text[body_start..].as_bytes());
        let columns: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if columns.is_empty() || columns.iter().all(|c| c.is_empty()) {
            return Err(StatsError::Format("missing header row".into()));
        }
        if columns.iter().any(|c| c.parse::<f64>().is_ok()) {
            return Err(StatsError::Format(
                "header row looks numeric; a header row is required".into(),
            ));
        }
        let mut data = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            if rec.len() != columns.len() {
                return Err(StatsError::Format(format!(
                    "row {} has {} fields, header has {}",
                    i + 1,
                    rec.len(),
                    columns.len()
                )));
            }
            for (j, f) in rec.iter().enumerate() {
                data.push(f.parse::<f64>().map_err(|_| {
                    StatsError::Format(format!("row {}, column {}: not a number: {f:?}", i + 1, j + 1))
                })?);
            }
        }
        let p = columns.len();
        let model = meta.as_ref().map_or("unknown", |m| m.model.as_str()).to_string();
        let mut s = Self::new(data, p, columns, &model)?;
        if let Some(m) = meta {
            s.seed = m.seed;
            s.params = m.params;
            s.warnings = m.warnings;
        }
        Ok(s)
    }

    /// Magic, little-endian `u64` metadata length, JSON metadata, then the
    /// values column by column as little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let meta = serde_json::to_vec(&self.meta()).expect("metadata serializes");
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(meta.len() as u64).to_le_bytes())?;
        w.write_all(&meta)?;
        for j in 0..self.p {
            for v in self.data.iter().skip(j).step_by(self.p) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 16];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(StatsError::Format("bad magic".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len) as usize;
        let mut meta = vec![0u8; len];
        r.read_exact(&mut meta)?;
        let meta: Meta = serde_json::from_slice(&meta)
            .map_err(|e| StatsError::Format(format!("metadata: {e}")))?;
        let p = meta.columns.len();
        let n = meta.rows;
        let mut data = vec![0.0; n * p];
        let mut buf = [0u8; 8];
        for j in 0..p {
            for i in 0..n {
                r.read_exact(&mut buf)?;
                data[i * p + j] = f64::from_le_bytes(buf);
            }
        }
        let mut s = Self::new(data, p, meta.columns, &meta.model)?;
        s.seed = meta.seed;
        s.params = meta.params;
        s.warnings = meta.warnings;
        Ok(s)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        self.write_binary(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        Self::read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SampleMatrix {
        SampleMatrix::new(
            vec![0.1, -2.5, 1e-17, 3.0, 0.3333333333333333, -7.25],
            2,
            vec!["M_0".into(), "M_1".into()],
            "ising",
        )
        .unwrap()
        .with_seed(42)
        .with_params(serde_json::json!({"beta": 0.5, "n": 16}))
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = sample();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# steinpa-samples "));
        assert!(text.lines().nth(1).unwrap() == "M_0,M_1");
        let back = SampleMatrix::read_csv(&buf[..]).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let s = sample();
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..16], b"STEINPA-SAMPLES1");
        assert_eq!(SampleMatrix::read_binary(&buf[..]).unwrap(), s);
        buf[0] = b'X';
        assert!(SampleMatrix::read_binary(&buf[..]).is_err());
    }

    #[test]
    fn plain_csv_and_errors() {
        let s = SampleMatrix::read_csv("x\n1\n2.5\n-3\n".as_bytes()).unwrap();
        assert_eq!(s.column(0), vec![1.0, 2.5, -3.0]);
        assert_eq!(s.model, "unknown");
        assert!(SampleMatrix::read_csv("1\n2\n".as_bytes()).is_err());
        assert!(SampleMatrix::read_csv("x,y\n1,2\n3\n".as_bytes()).is_err());
        assert!(SampleMatrix::read_csv("x\nfoo\n".as_bytes()).is_err());
        assert!(SampleMatrix::new(vec![f64::NAN], 1, vec!["x".into()], "m").is_err());
    }
}
