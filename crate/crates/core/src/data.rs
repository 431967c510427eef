//! Dataset pathways: the synthetic checkerboard, CSV input/output and
//! missing-value corruption.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, SpeError};
use crate::rng::RandomSource;

/// Components per side of the checkerboard grid.
pub const GRID: usize = 4;

/// 4×4 grid of isotropic Gaussians at integer points `(r, c)`; component
/// `(r, c)` belongs to the minority class when `r + c` is odd.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckerboardSpec {
    pub cov_scale: f64,
    pub n_minority: usize,
    pub n_majority: usize,
    pub seed: u64,
}

impl Default for CheckerboardSpec {
    fn default() -> Self {
        CheckerboardSpec {
            cov_scale: 0.1,
            n_minority: 1000,
            n_majority: 10_000,
            seed: 0,
        }
    }
}

impl CheckerboardSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.cov_scale > 0.0 && self.cov_scale.is_finite()) {
            return Err(SpeError::param("cov", "must be a positive number"));
        }
        if self.n_minority == 0 {
            return Err(SpeError::param("n_minority", "must be at least 1"));
        }
        if self.n_majority == 0 {
            return Err(SpeError::param("n_majority", "must be at least 1"));
        }
        Ok(())
    }

    /// Grid points of one class, row-major.
    pub fn components(label: u8) -> Vec<(usize, usize)> {
        (0..GRID)
            .flat_map(|r| (0..GRID).map(move |c| (r, c)))
            .filter(|(r, c)| ((r + c) % 2) as u8 == label)
            .collect()
    }

    pub fn generate(&self) -> Result<Dataset> {
        self.generate_with_components().map(|(d, _)| d)
    }

    /// Like [`generate`](Self::generate), also returning each row's source component.
    pub fn generate_with_components(&self) -> Result<(Dataset, Vec<(usize, usize)>)> {
        self.validate()?;
        let root = RandomSource::new(self.seed);
        let sd = self.cov_scale.sqrt();
        let mut rows: Vec<([f64; 2], u8, (usize, usize))> =
            Vec::with_capacity(self.n_minority + self.n_majority);
        for (label, count) in [(1u8, self.n_minority), (0u8, self.n_majority)] {
            let comps = Self::components(label);
            let mut rng = root.derive("class", label as u64);
            for _ in 0..count {
                let (r, c) = comps[rng.random_range(0..comps.len())];
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                rows.push(([r as f64 + sd * dx, c as f64 + sd * dy], label, (r, c)));
            }
        }
        rows.shuffle(&mut root.derive("order", 0));

        let features = rows.iter().flat_map(|(x, _, _)| *x).collect();
        let labels = rows.iter().map(|(_, y, _)| *y).collect();
        let comps = rows.iter().map(|(_, _, rc)| *rc).collect();
        let data = Dataset::new(features, 2, labels)?
            .with_feature_names(vec!["x0".into(), "x1".into()])?;
        Ok((data, comps))
    }
}

/// Which column of a CSV holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    /// Negative values count from the end; `-1` is the last column.
    Index(i64),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Index(-1)
    }
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<i64>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub positive_label: String,
    pub missing_token: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label_column: LabelColumn::default(),
            positive_label: "1".into(),
            missing_token: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    /// Cells equal to the missing token, imputed as 0.0.
    pub missing_cells: usize,
    pub label_column: String,
}

fn labels_match(cell: &str, positive: &str) -> bool {
    if cell == positive {
        return true;
    }
    match (cell.parse::<f64>(), positive.parse::<f64>()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<LoadedCsv> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| SpeError::io(path, e))?;
    read_csv(file, options)
}

/// Parses CSV text with a mandatory header row.
pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<LoadedCsv> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(SpeError::InvalidInput("CSV header row is missing".into()));
    }
    let label_idx = match &options.label_column {
        LabelColumn::Name(name) => header.iter().position(|h| h == name).ok_or_else(|| {
            SpeError::InvalidInput(format!("label column `{name}` not in header {header:?}"))
        })?,
        &LabelColumn::Index(i) => {
            let n = header.len() as i64;
            let resolved = if i < 0 { n + i } else { i };
            if !(0..n).contains(&resolved) {
                return Err(SpeError::InvalidInput(format!(
                    "label column index {i} out of range for {n} columns"
                )));
            }
            resolved as usize
        }
    };
    if header.len() < 2 {
        return Err(SpeError::InvalidInput("CSV needs at least one feature column".into()));
    }
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| c != label_idx).collect();
    let mut features = Vec::with_capacity(records.len() * feature_cols.len());
    let mut labels = Vec::with_capacity(records.len());
    let mut missing = 0;
    let mut negatives = BTreeSet::new();
    for (r, rec) in records.iter().enumerate() {
        // header is line 1, first data row is line 2
        let line = r + 2;
        let label = rec.get(label_idx).unwrap_or("").trim();
        if labels_match(label, &options.positive_label) {
            labels.push(1);
        } else {
            negatives.insert(label.to_string());
            if negatives.len() > 1 {
                return Err(SpeError::Label(format!(
                    "label column `{}` has values {:?} besides positive label `{}`; only one negative value is allowed",
                    header[label_idx], negatives, options.positive_label
                )));
            }
            labels.push(0);
        }
        for &c in &feature_cols {
            let cell = rec.get(c).unwrap_or("").trim();
            if cell == options.missing_token {
                missing += 1;
                features.push(0.0);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) => features.push(v),
                Err(_) => {
                    let numeric_elsewhere = records.iter().any(|other| {
                        other.get(c).is_some_and(|v| v.trim().parse::<f64>().is_ok())
                    });
                    let reason = if numeric_elsewhere {
                        format!("`{cell}` is not a number")
                    } else {
                        format!(
                            "column is not numeric (found `{cell}`); encode categorical features before loading"
                        )
                    };
                    return Err(SpeError::Parse {
                        row: line,
                        column: header[c].clone(),
                        reason,
                    });
                }
            }
        }
    }
    let names = feature_cols.iter().map(|&c| header[c].clone()).collect();
    let dataset = Dataset::new(features, feature_cols.len(), labels)?.with_feature_names(names)?;
    Ok(LoadedCsv {
        dataset,
        missing_cells: missing,
        label_column: header[label_idx].clone(),
    })
}

/// Unlabelled feature rows, as read for scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub missing_cells: usize,
}

impl FeatureTable {
    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.values.len() / self.names.len().max(1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.names.len();
        &self.values[i * n..(i + 1) * n]
    }
}

/// Reads every column as a feature; same dialect as [`read_csv`].
pub fn read_features<R: Read>(reader: R, missing_token: &str) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(SpeError::InvalidInput("CSV header row is missing".into()));
    }
    let mut values = Vec::new();
    let mut missing = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (c, name) in names.iter().enumerate() {
            let cell = rec.get(c).unwrap_or("").trim();
            if cell == missing_token {
                missing += 1;
                values.push(0.0);
                continue;
            }
            values.push(cell.parse::<f64>().map_err(|_| SpeError::Parse {
                row: r + 2,
                column: name.clone(),
                reason: format!("`{cell}` is not a number"),
            })?);
        }
    }
    Ok(FeatureTable {
        names,
        values,
        missing_cells: missing,
    })
}

/// Writes features then a `label` column, reals in shortest round-trip form.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let names: Vec<String> = match data.feature_names() {
        Some(n) => n.to_vec(),
        None => (0..data.n_features()).map(|j| format!("x{j}")).collect(),
    };
    w.write_record(names.iter().map(String::as_str).chain(["label"]))?;
    let mut record = Vec::with_capacity(data.n_features() + 1);
    for (i, row) in data.rows().enumerate() {
        record.clear();
        record.extend(row.iter().map(f64::to_string));
        record.push(data.label(i).to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| SpeError::io("<csv>", e))?;
    Ok(())
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| SpeError::io(path, e))?;
    write_csv(data, std::io::BufWriter::new(file))
}

/// Zeroes `⌊ratio · rows · columns⌋` distinct feature cells chosen uniformly.
pub fn corrupt_missing(data: &Dataset, ratio: f64, rng: &mut RandomSource) -> Result<Dataset> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(SpeError::param("missing_ratio", format!("{ratio} not in [0, 1)")));
    }
    let cells = data.n_rows() * data.n_features();
    let count = (ratio * cells as f64).floor() as usize;
    let mut out = data.clone();
    if count > 0 {
        let values = out.features_mut();
        for cell in index::sample(rng, cells, count) {
            values[cell] = 0.0;
        }
    }
    Ok(out)
}
