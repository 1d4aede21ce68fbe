use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::textprep::LabeledDocument;

/// Reads a UTF-8 CSV with a `text,label` header (column order is free,
/// extra columns are ignored).
pub fn load_dataset(path: &Path) -> Result<Vec<LabeledDocument>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file).map_err(|e| match e {
        Error::Dataset(msg) => Error::Dataset(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Vec<LabeledDocument>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv
        .byte_headers()
        .map_err(|e| Error::Dataset(format!("cannot read header: {e}")))?
        .clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Dataset("file is empty".into()));
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_ascii() == name.as_bytes())
            .ok_or_else(|| Error::Dataset(format!("header is missing the `{name}` column")))
    };
    let (text_col, label_col) = (column("text")?, column("label")?);

    let mut docs = Vec::new();
    for record in csv.byte_records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Dataset(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |col: usize, name: &str| -> Result<String> {
            let raw = record
                .get(col)
                .ok_or_else(|| Error::Dataset(format!("line {line}: missing `{name}` field")))?;
            String::from_utf8(raw.to_vec())
                .map_err(|_| Error::Dataset(format!("line {line}: `{name}` is not valid UTF-8")))
        };
        let text = field(text_col, "text")?;
        let label = field(label_col, "label")?.trim().to_owned();
        if label.is_empty() {
            return Err(Error::Dataset(format!("line {line}: empty label")));
        }
        docs.push(LabeledDocument { text, label });
    }
    if docs.is_empty() {
        return Err(Error::Dataset("no data rows after the header".into()));
    }
    Ok(docs)
}

/// Row indices of a train/test partition, each ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified, seeded split. Each class contributes `round(ratio · n_c)`
/// rows to training; both sides keep dataset order.
pub fn train_test_split(labels: &[u8], ratio: f64, seed: u64) -> Result<SplitIndices> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Argument(format!("split ratio {ratio} is not in (0, 1)")));
    }
    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut idx) in by_class {
        let n = idx.len();
        let n_train = (ratio * n as f64).round() as usize;
        if n_train == 0 || n_train == n {
            return Err(Error::Dataset(format!(
                "class {class} has {n} rows; a {ratio} split leaves one side without it"
            )));
        }
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}
