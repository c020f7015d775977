//! Classification datasets: numeric CSV with a trailing class column, the
//! PROBEN1 row layout, and a synthetic threshold problem.

use std::io::Read;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    /// Class labels in `0 .. num_classes`.
    pub classes: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    /// The class count is one more than the largest label.
    pub fn new(inputs: Vec<Vec<f64>>, classes: Vec<usize>) -> Result<Self> {
        let num_classes = classes.iter().max().map_or(0, |&c| c + 1);
        Self::with_classes(inputs, classes, num_classes)
    }

    pub fn with_classes(inputs: Vec<Vec<f64>>, classes: Vec<usize>, num_classes: usize) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidParameter("empty dataset".into()));
        }
        if inputs.len() != classes.len() {
            return Err(Error::InvalidParameter(format!(
                "{} input rows but {} labels",
                inputs.len(),
                classes.len()
            )));
        }
        let width = inputs[0].len();
        if let Some(k) = inputs.iter().position(|r| r.len() != width) {
            return Err(Error::InvalidParameter(format!("row {k} has {} inputs, expected {width}", inputs[k].len())));
        }
        if let Some(&c) = classes.iter().find(|&&c| c >= num_classes) {
            return Err(Error::InvalidParameter(format!("label {c} outside 0..{num_classes}")));
        }
        Ok(Self {
            inputs,
            classes,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }
}

/// Reads numeric CSV rows of inputs followed by an integer class label.
pub fn read_csv<R: Read>(reader: R, has_headers: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut inputs = Vec::new();
    let mut classes = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        let bad = |m: String| Error::Parse { line, message: m };
        let n = record.len();
        if n < 2 {
            return Err(bad("expected inputs and a class column".into()));
        }
        let row = record
            .iter()
            .take(n - 1)
            .map(|f| f.parse::<f64>().map_err(|e| bad(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let label = &record[n - 1];
        let class = label
            .parse::<usize>()
            .or_else(|_| match label.parse::<f64>() {
                Ok(v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
                _ => Err(bad(format!("class label {label:?} is not a nonnegative integer"))),
            })?;
        inputs.push(row);
        classes.push(class);
    }
    Dataset::new(inputs, classes)
}

pub fn load_csv(path: impl AsRef<Path>, has_headers: bool) -> Result<Dataset> {
    read_csv(std::fs::File::open(path)?, has_headers)
}

/// Training, validation and test partitions of a PROBEN1 file.
#[derive(Debug, Clone, PartialEq)]
pub struct Proben1 {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Parses the PROBEN1 layout: `key=value` header lines giving the input and
/// output counts and the partition sizes, then whitespace-separated
/// examples with one-hot outputs after the inputs.
pub fn parse_proben1(text: &str) -> Result<Proben1> {
    let mut header = std::collections::HashMap::new();
    let mut numbers: Vec<(usize, f64)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some((key, value)) = trimmed.split_once('=') {
            let v = value.trim().parse::<usize>().map_err(|e| Error::Parse {
                line,
                message: format!("header {key}: {e}"),
            })?;
            header.insert(key.trim().to_string(), v);
            continue;
        }
        for tok in trimmed.split_whitespace() {
            let v = tok.parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("{tok:?}: {e}"),
            })?;
            numbers.push((line, v));
        }
    }
    let get = |key: &str| {
        header.get(key).copied().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("missing header {key}"),
        })
    };
    let n_in = get("bool_in")? + get("real_in")?;
    let n_out = get("bool_out")? + get("real_out")?;
    let sizes = [get("training_examples")?, get("validation_examples")?, get("test_examples")?];
    let width = n_in + n_out;
    if n_out == 0 {
        return Err(Error::Parse {
            line: 0,
            message: "no output columns".into(),
        });
    }
    let expected = width * sizes.iter().sum::<usize>();
    if numbers.len() != expected {
        let line = numbers.last().map_or(0, |&(l, _)| l);
        return Err(Error::Parse {
            line,
            message: format!("expected {expected} values, found {}", numbers.len()),
        });
    }
    let mut rows = numbers.chunks(width);
    let mut take = |count: usize| -> Result<Dataset> {
        let mut inputs = Vec::with_capacity(count);
        let mut classes = Vec::with_capacity(count);
        for chunk in rows.by_ref().take(count) {
            inputs.push(chunk[..n_in].iter().map(|&(_, v)| v).collect());
            let outputs = &chunk[n_in..];
            let class = outputs
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (i, &(_, v))| if v > b.1 { (i, v) } else { b })
                .0;
            classes.push(class);
        }
        Dataset::with_classes(inputs, classes, n_out)
    };
    Ok(Proben1 {
        train: take(sizes[0])?,
        validation: take(sizes[1])?,
        test: take(sizes[2])?,
    })
}

pub fn load_proben1(path: impl AsRef<Path>) -> Result<Proben1> {
    parse_proben1(&std::fs::read_to_string(path)?)
}

/// Rows `(x1, x2)` with `x1, x2` uniform in `[0, 1]` and class `[x1 > 0.5]`;
/// `x2` is noise.
pub fn threshold_dataset<R: Rng + ?Sized>(rows: usize, rng: &mut R) -> Dataset {
    let inputs: Vec<Vec<f64>> = (0..rows)
        .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
        .collect();
    let classes = inputs.iter().map(|r| usize::from(r[0] > 0.5)).collect();
    Dataset::with_classes(inputs, classes, 2).expect("well-formed synthetic data")
}
