use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::{Acf, PosteriorTable};
use crate::error::{Error, Result};
use crate::sampler::DrawRecord;

pub const TRACE_FILE: &str = "trace.csv";
pub const ALLOC_FILE: &str = "alloc.bin";
pub const THETA_FILE: &str = "theta.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const POSTERIOR_K_FILE: &str = "posterior_k.csv";
pub const PARTITION_FILE: &str = "partition.csv";
pub const ACF_FILE: &str = "acf.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const IDENTIFIED_FILE: &str = "identified.json";

const ALLOC_MAGIC: &[u8; 4] = b"MFMA";
const ALLOC_VERSION: u32 = 1;

/// Formats a float with 17 significant digits, enough to round-trip.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().from_writer(create(path)?))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().from_reader(f))
}

fn parse<T: std::str::FromStr>(path: &Path, line: usize, field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Data(format!("{}: line {line}: cannot parse '{field}'", path.display())))
}

/// Streaming writer of the per-draw trace.
pub struct TraceWriter {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut inner = csv_writer(path)?;
        inner
            .write_record(["iteration", "K", "Kplus", "concentration", "accept_flag"])
            .map_err(|e| csv_err(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub fn write(&mut self, r: &DrawRecord) -> Result<()> {
        self.inner
            .write_record([
                r.iteration.to_string(),
                r.k.to_string(),
                r.k_plus.to_string(),
                fmt_f64(r.concentration),
                u8::from(r.accepted).to_string(),
            ])
            .map_err(|e| csv_err(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn read_trace(path: &Path) -> Result<Vec<DrawRecord>> {
    let mut out = Vec::new();
    for (i, rec) in csv_reader(path)?.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        if rec.len() != 5 {
            return Err(Error::Data(format!("{}: line {line}: expected 5 fields", path.display())));
        }
        out.push(DrawRecord {
            iteration: parse(path, line, &rec[0])?,
            k: parse(path, line, &rec[1])?,
            k_plus: parse(path, line, &rec[2])?,
            concentration: parse(path, line, &rec[3])?,
            accepted: parse::<u8>(path, line, &rec[4])? == 1,
        });
    }
    Ok(out)
}

/// Streaming writer of `alloc.bin`: a 16-byte header (`MFMA`, format
/// version, number of observations, number of rows; little-endian `u32`)
/// followed by row-major little-endian `u32` 1-based labels.
pub struct AllocWriter {
    path: PathBuf,
    inner: BufWriter<File>,
    n: usize,
    rows: u32,
}

impl AllocWriter {
    pub fn create(path: &Path, n: usize) -> Result<Self> {
        let n32 = u32::try_from(n).map_err(|_| Error::invalid("too many observations"))?;
        let mut inner = create(path)?;
        let mut header = Vec::with_capacity(16);
        header.extend_from_slice(ALLOC_MAGIC);
        header.extend_from_slice(&ALLOC_VERSION.to_le_bytes());
        header.extend_from_slice(&n32.to_le_bytes());
        header.extend_from_slice(&0u32.to_le_bytes());
        inner.write_all(&header).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner,
            n,
            rows: 0,
        })
    }

    /// Appends one row of 0-based labels.
    pub fn write_row(&mut self, labels: &[usize]) -> Result<()> {
        debug_assert_eq!(labels.len(), self.n);
        let mut buf = Vec::with_capacity(4 * labels.len());
        for &l in labels {
            buf.extend_from_slice(&(l as u32 + 1).to_le_bytes());
        }
        self.inner.write_all(&buf).map_err(|e| Error::io(&self.path, e))?;
        self.rows += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        let io = |e| Error::io(&self.path, e);
        self.inner.seek(SeekFrom::Start(12)).map_err(io)?;
        self.inner.write_all(&self.rows.to_le_bytes()).map_err(io)?;
        self.inner.flush().map_err(io)
    }
}

/// Reads `alloc.bin`, returning `(n_obs, rows, 0-based labels)`.
pub fn read_alloc(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut header = [0u8; 16];
    r.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
    if &header[..4] != ALLOC_MAGIC {
        return Err(Error::Data(format!("{}: not an allocation file", path.display())));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes"));
    if word(4) != ALLOC_VERSION {
        return Err(Error::Data(format!("{}: unsupported version {}", path.display(), word(4))));
    }
    let (n, rows) = (word(8) as usize, word(12) as usize);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    if bytes.len() != 4 * n * rows {
        return Err(Error::Data(format!("{}: truncated allocation file", path.display())));
    }
    let labels = bytes
        .chunks_exact(4)
        .map(|c| {
            let v = u32::from_le_bytes(c.try_into().expect("4 bytes"));
            if v == 0 || v > u16::MAX as u32 {
                Err(Error::Data(format!("{}: invalid label {v}", path.display())))
            } else {
                Ok((v - 1) as u16)
            }
        })
        .collect::<Result<_>>()?;
    Ok((n, rows, labels))
}

/// Streaming writer of `theta.csv`: one line per filled component per draw
/// with columns `iteration,component,p1,p2,...`.
pub struct ThetaWriter {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl ThetaWriter {
    pub fn create(path: &Path, n_params: usize) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().flexible(true).from_writer(create(path)?);
        let mut header = vec!["iteration".to_string(), "component".to_string()];
        header.extend((1..=n_params).map(|j| format!("p{j}")));
        inner.write_record(&header).map_err(|e| csv_err(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub fn write_draw(&mut self, iteration: usize, components: &[Vec<f64>]) -> Result<()> {
        for (j, p) in components.iter().enumerate() {
            let mut rec = vec![iteration.to_string(), (j + 1).to_string()];
            rec.extend(p.iter().map(|&x| fmt_f64(x)));
            self.inner.write_record(&rec).map_err(|e| csv_err(&self.path, e))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Reads `theta.csv` grouped by iteration, in file order.
pub fn read_theta(path: &Path) -> Result<Vec<(usize, Vec<Vec<f64>>)>> {
    let mut out: Vec<(usize, Vec<Vec<f64>>)> = Vec::new();
    let mut rdr = csv_reader(path)?;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        let it: usize = parse(path, line, &rec[0])?;
        let comp: usize = parse(path, line, &rec[1])?;
        let vals = rec
            .iter()
            .skip(2)
            .map(|f| parse(path, line, f))
            .collect::<Result<Vec<f64>>>()?;
        match out.last_mut() {
            Some((last, comps)) if *last == it => {
                if comp != comps.len() + 1 {
                    return Err(Error::Data(format!("{}: line {line}: components out of order", path.display())));
                }
                comps.push(vals);
            }
            _ => {
                if comp != 1 {
                    return Err(Error::Data(format!("{}: line {line}: components out of order", path.display())));
                }
                out.push((it, vec![vals]));
            }
        }
    }
    Ok(out)
}

/// `value,p_K,p_Kplus` for every value observed for either quantity.
pub fn write_posterior_k(path: &Path, table: &PosteriorTable) -> Result<()> {
    let hi = table
        .k
        .pmf
        .iter()
        .chain(&table.k_plus.pmf)
        .map(|(v, _)| *v)
        .max()
        .unwrap_or(0);
    let mut w = csv_writer(path)?;
    w.write_record(["value", "p_K", "p_Kplus"]).map_err(|e| csv_err(path, e))?;
    for v in 1..=hi {
        w.write_record([v.to_string(), fmt_f64(table.k.prob(v)), fmt_f64(table.k_plus.prob(v))])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `observation_id,cluster`, both 1-based.
pub fn write_partition(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["observation_id", "cluster"]).map_err(|e| csv_err(path, e))?;
    for (i, &l) in labels.iter().enumerate() {
        w.write_record([(i + 1).to_string(), (l + 1).to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_partition(path: &Path) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, rec) in csv_reader(path)?.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let c: usize = parse(path, i + 2, &rec[1])?;
        out.push(c - 1);
    }
    Ok(out)
}

/// One column per named series; degenerate series are written as `NA`.
pub fn write_acf(path: &Path, max_lag: usize, series: &[(&str, Acf)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["lag".to_string()];
    header.extend(series.iter().map(|(n, _)| n.to_string()));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for lag in 0..=max_lag {
        let mut rec = vec![lag.to_string()];
        for (_, a) in series {
            rec.push(match a {
                Acf::Values(v) => fmt_f64(v[lag]),
                Acf::Degenerate => "NA".to_string(),
            });
        }
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `k,p_K,p_Kplus` prior table.
pub fn write_prior_table<W: Write>(out: W, p_k: &[f64], p_kplus: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::Runtime(e.to_string());
    w.write_record(["k", "p_K", "p_Kplus"]).map_err(wrap)?;
    for (i, (a, b)) in p_k.iter().zip(p_kplus).enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(*a), fmt_f64(*b)]).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::Runtime(e.to_string()))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Runtime(e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}
