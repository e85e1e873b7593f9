use std::path::Path;

use crate::error::{Error, Result};

/// Parsed observations.
#[derive(Debug, Clone, PartialEq)]
pub enum Observations {
    Continuous {
        names: Vec<String>,
        rows: Vec<Vec<f64>>,
    },
    /// Category codes are stored 0-based.
    Categorical {
        levels: Vec<usize>,
        rows: Vec<Vec<u16>>,
    },
}

impl Observations {
    pub fn len(&self) -> usize {
        match self {
            Observations::Continuous { rows, .. } => rows.len(),
            Observations::Categorical { rows, .. } => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Observations::Continuous { names, .. } => names.len(),
            Observations::Categorical { levels, .. } => levels.len(),
        }
    }
}

/// Observations plus an optional column of reference labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub observations: Observations,
    pub truth: Option<Vec<String>>,
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut out = Vec::new();
    for (i, rec) in reader(path)?.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{}: no data", path.display())));
    }
    Ok(out)
}

fn parse_number(field: &str, path: &Path, line: usize, col: usize) -> Result<f64> {
    if field.is_empty() || field.eq_ignore_ascii_case("na") || field.eq_ignore_ascii_case("nan") {
        return Err(Error::Data(format!(
            "{}: line {line}, column {col}: missing value",
            path.display()
        )));
    }
    let v: f64 = field.parse().map_err(|_| {
        Error::Data(format!(
            "{}: line {line}, column {col}: '{field}' is not a number",
            path.display()
        ))
    })?;
    if !v.is_finite() {
        return Err(Error::Data(format!(
            "{}: line {line}, column {col}: non-finite value",
            path.display()
        )));
    }
    Ok(v)
}

/// Reads numeric observations, one per row. A first row that does not parse
/// as numbers is taken as a header of column names. `truth_column` names a
/// column (or gives its 1-based index) holding reference labels, which is
/// removed from the observations.
pub fn read_continuous(path: &Path, truth_column: Option<&str>) -> Result<Dataset> {
    let recs = records(path)?;
    let width = recs[0].len();
    let has_header = recs[0].iter().any(|f| f.parse::<f64>().is_err());
    let names: Vec<String> = if has_header {
        recs[0].iter().map(str::to_string).collect()
    } else {
        (1..=width).map(|j| format!("x{j}")).collect()
    };
    let truth_idx = match truth_column {
        None => None,
        Some(t) => Some(
            names
                .iter()
                .position(|n| n == t)
                .or_else(|| t.parse::<usize>().ok().filter(|&i| i >= 1 && i <= width).map(|i| i - 1))
                .ok_or_else(|| Error::Config(format!("no column '{t}' in {}", path.display())))?,
        ),
    };
    let body = if has_header { &recs[1..] } else { &recs[..] };
    if body.is_empty() {
        return Err(Error::Data(format!("{}: no observations", path.display())));
    }
    let offset = usize::from(has_header) + 1;
    let mut rows = Vec::with_capacity(body.len());
    let mut truth = truth_idx.map(|_| Vec::with_capacity(body.len()));
    for (i, rec) in body.iter().enumerate() {
        let line = i + offset;
        if rec.len() != width {
            return Err(Error::Data(format!(
                "{}: line {line} has {} fields, expected {width}",
                path.display(),
                rec.len()
            )));
        }
        let mut row = Vec::with_capacity(width);
        for (j, f) in rec.iter().enumerate() {
            if Some(j) == truth_idx {
                truth.as_mut().expect("truth column").push(f.to_string());
            } else {
                row.push(parse_number(f, path, line, j + 1)?);
            }
        }
        rows.push(row);
    }
    let names = names
        .into_iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != truth_idx)
        .map(|(_, n)| n)
        .collect::<Vec<_>>();
    if names.is_empty() {
        return Err(Error::Data(format!("{}: no feature columns", path.display())));
    }
    Ok(Dataset {
        observations: Observations::Continuous { names, rows },
        truth,
    })
}

/// Reads categorical records. The first line lists the number of
/// categories of every variable; the following lines hold 1-based codes.
pub fn read_categorical(path: &Path) -> Result<Dataset> {
    let recs = records(path)?;
    let levels: Vec<usize> = recs[0]
        .iter()
        .enumerate()
        .map(|(j, f)| {
            f.parse::<usize>()
                .ok()
                .filter(|&l| (2..=u16::MAX as usize).contains(&l))
                .ok_or_else(|| {
                    Error::Data(format!(
                        "{}: column {}: category count '{f}' must be an integer >= 2",
                        path.display(),
                        j + 1
                    ))
                })
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(recs.len() - 1);
    for (i, rec) in recs[1..].iter().enumerate() {
        let line = i + 2;
        if rec.len() != levels.len() {
            return Err(Error::Data(format!(
                "{}: line {line} has {} fields, expected {}",
                path.display(),
                rec.len(),
                levels.len()
            )));
        }
        let row = rec
            .iter()
            .zip(&levels)
            .enumerate()
            .map(|(j, (f, &l))| {
                f.parse::<usize>()
                    .ok()
                    .filter(|&c| c >= 1 && c <= l)
                    .map(|c| (c - 1) as u16)
                    .ok_or_else(|| {
                        Error::Data(format!(
                            "{}: line {line}, column {}: '{f}' is not a code in 1..={l}",
                            path.display(),
                            j + 1
                        ))
                    })
            })
            .collect::<Result<Vec<u16>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no observations", path.display())));
    }
    Ok(Dataset {
        observations: Observations::Categorical { levels, rows },
        truth: None,
    })
}
