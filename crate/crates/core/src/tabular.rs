//! CSV ingestion, train-mean imputation, min-max scaling and seeded splits.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Cell values treated as absent when no explicit token set is given.
pub const DEFAULT_MISSING_TOKENS: [&str; 3] = ["", "NA", "NaN"];

/// Column-major table of real attributes plus one label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    column_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    labels: Vec<String>,
    missing_mask: Vec<Vec<bool>>,
}

impl TabularDataset {
    /// Builds a dataset, checking shape invariants. `missing_mask` defaults to
    /// all-present.
    pub fn new(
        column_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        labels: Vec<String>,
        missing_mask: Option<Vec<Vec<bool>>>,
    ) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::NoAttributes);
        }
        if column_names.len() != columns.len() {
            return Err(Error::LengthMismatch {
                expected: columns.len(),
                actual: column_names.len(),
            });
        }
        let n = labels.len();
        if n < 2 {
            return Err(Error::TooFewSamples(n));
        }
        for col in &columns {
            if col.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: col.len(),
                });
            }
        }
        let missing_mask = match missing_mask {
            Some(mask) => {
                if mask.len() != columns.len() || mask.iter().any(|m| m.len() != n) {
                    return Err(Error::InconsistentInputs(
                        "missing mask shape differs from columns".into(),
                    ));
                }
                mask
            }
            None => vec![vec![false; n]; columns.len()],
        };
        Ok(Self {
            column_names,
            columns,
            labels,
            missing_mask,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn missing_mask(&self) -> &[Vec<bool>] {
        &self.missing_mask
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing_mask[col][row]
    }

    pub fn has_missing(&self) -> bool {
        self.missing_mask.iter().flatten().any(|&m| m)
    }

    /// Attribute values of one sample, in column order.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Restricts every column to the given sample indices, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let pick = |v: &Vec<f64>| rows.iter().map(|&r| v[r]).collect::<Vec<_>>();
        Self {
            column_names: self.column_names.clone(),
            columns: self.columns.iter().map(pick).collect(),
            labels: rows.iter().map(|&r| self.labels[r].clone()).collect(),
            missing_mask: self
                .missing_mask
                .iter()
                .map(|m| rows.iter().map(|&r| m[r]).collect())
                .collect(),
        }
    }
}

/// Reads a headered CSV file. Every column except `label_column` must hold
/// real numbers or one of `missing_tokens` (compared after trimming
/// whitespace). Missing cells hold `0.0` and are flagged in the mask.
pub fn load_csv<S: AsRef<str>>(
    path: impl AsRef<Path>,
    label_column: &str,
    missing_tokens: &[S],
) -> Result<TabularDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column, missing_tokens)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read, S: AsRef<str>>(
    reader: R,
    label_column: &str,
    missing_tokens: &[S],
) -> Result<TabularDataset> {
    let tokens: HashSet<&str> = missing_tokens.iter().map(|s| s.as_ref()).collect();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let attr_idx: Vec<usize> = (0..header.len()).filter(|&i| i != label_idx).collect();

    let mut columns = vec![Vec::new(); attr_idx.len()];
    let mut mask = vec![Vec::new(); attr_idx.len()];
    let mut labels = Vec::new();

    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        for (slot, &ci) in attr_idx.iter().enumerate() {
            let cell = record.get(ci).unwrap_or("").trim();
            if tokens.contains(cell) {
                columns[slot].push(0.0);
                mask[slot].push(true);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    columns[slot].push(v);
                    mask[slot].push(false);
                }
                _ => {
                    return Err(Error::Parse {
                        row: r + 1,
                        column: header[ci].clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        labels.push(record.get(label_idx).unwrap_or("").trim().to_string());
    }

    let names = attr_idx.iter().map(|&i| header[i].clone()).collect();
    TabularDataset::new(names, columns, labels, Some(mask))
}

/// Partition of sample indices into train and test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRole {
    Train,
    Test,
}

impl SplitRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitRole::Train => "train",
            SplitRole::Test => "test",
        }
    }
}

impl SplitAssignment {
    pub fn n_samples(&self) -> usize {
        self.train_indices.len() + self.test_indices.len()
    }

    /// Role of every sample, indexed by sample id.
    pub fn roles(&self) -> Vec<SplitRole> {
        let mut roles = vec![SplitRole::Test; self.n_samples()];
        for &i in &self.train_indices {
            roles[i] = SplitRole::Train;
        }
        roles
    }

    /// Writes `sample_id,split` rows sorted by sample id.
    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("sample_id,split\n");
        for (id, role) in self.roles().into_iter().enumerate() {
            out.push_str(&format!("{id},{}\n", role.as_str()));
        }
        File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// Number of training samples for `n` samples at `ratio` (half rounds away from zero).
pub fn train_size(n: usize, ratio: f64) -> usize {
    (ratio * n as f64).round() as usize
}

/// Seeded shuffle of `0..n`; the first `round(ratio * n)` indices are train.
pub fn split(ds: &TabularDataset, ratio: f64, seed: u64) -> Result<SplitAssignment> {
    split_n(ds.n_samples(), ratio, seed)
}

pub fn split_n(n: usize, ratio: f64, seed: u64) -> Result<SplitAssignment> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidRatio(ratio));
    }
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let n_train = train_size(n, ratio);
    if n_train == 0 || n_train >= n {
        return Err(Error::DegenerateSplit {
            n,
            ratio,
            train: n_train,
        });
    }
    let mut perm = rng::permutation(n, seed);
    let test_indices = perm.split_off(n_train);
    Ok(SplitAssignment {
        train_indices: perm,
        test_indices,
        seed,
        ratio,
    })
}

fn check_split(ds: &TabularDataset, split: &SplitAssignment) -> Result<()> {
    let n = ds.n_samples();
    let mut seen = vec![false; n];
    for &i in split.train_indices.iter().chain(&split.test_indices) {
        if i >= n || seen[i] {
            return Err(Error::InconsistentInputs(format!(
                "split index {i} out of range or repeated for {n} samples"
            )));
        }
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InconsistentInputs(
            "split does not cover every sample".into(),
        ));
    }
    Ok(())
}

/// Per-column fill values learned from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    pub fill: Vec<f64>,
}

impl Imputer {
    /// Mean of present training values per column; 0 when a column has none.
    pub fn fit(ds: &TabularDataset, split: &SplitAssignment) -> Result<Self> {
        check_split(ds, split)?;
        let fill = (0..ds.n_attributes())
            .map(|j| {
                let (sum, count) = split
                    .train_indices
                    .iter()
                    .filter(|&&i| !ds.is_missing(i, j))
                    .fold((0.0, 0usize), |(s, c), &i| (s + ds.column(j)[i], c + 1));
                if count == 0 {
                    0.0
                } else {
                    sum / count as f64
                }
            })
            .collect();
        Ok(Self { fill })
    }

    pub fn apply(&self, ds: &TabularDataset) -> Result<TabularDataset> {
        if self.fill.len() != ds.n_attributes() {
            return Err(Error::LengthMismatch {
                expected: ds.n_attributes(),
                actual: self.fill.len(),
            });
        }
        let columns = ds
            .columns()
            .iter()
            .zip(ds.missing_mask())
            .zip(&self.fill)
            .map(|((col, mask), &fill)| {
                col.iter()
                    .zip(mask)
                    .map(|(&v, &m)| if m { fill } else { v })
                    .collect()
            })
            .collect();
        TabularDataset::new(
            ds.column_names().to_vec(),
            columns,
            ds.labels().to_vec(),
            None,
        )
    }
}

pub fn impute_missing(ds: &TabularDataset, split: &SplitAssignment) -> Result<TabularDataset> {
    Imputer::fit(ds, split)?.apply(ds)
}

/// Scaled value assigned to every cell of a column that is constant on train.
pub const CONSTANT_COLUMN_VALUE: f64 = 0.5;

/// Min-max scaler fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(ds: &TabularDataset, split: &SplitAssignment) -> Result<Self> {
        check_split(ds, split)?;
        if ds.has_missing() {
            return Err(Error::MissingValues);
        }
        let (min, max) = ds
            .columns()
            .iter()
            .map(|col| {
                split
                    .train_indices
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                        (lo.min(col[i]), hi.max(col[i]))
                    })
            })
            .unzip();
        Ok(Self { min, max })
    }

    pub fn scale_value(&self, j: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[j], self.max[j]);
        if hi <= lo {
            return CONSTANT_COLUMN_VALUE;
        }
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    pub fn apply(&self, ds: &TabularDataset) -> Result<TabularDataset> {
        if ds.has_missing() {
            return Err(Error::MissingValues);
        }
        if self.min.len() != ds.n_attributes() {
            return Err(Error::LengthMismatch {
                expected: ds.n_attributes(),
                actual: self.min.len(),
            });
        }
        let columns = ds
            .columns()
            .iter()
            .enumerate()
            .map(|(j, col)| col.iter().map(|&v| self.scale_value(j, v)).collect())
            .collect();
        TabularDataset::new(
            ds.column_names().to_vec(),
            columns,
            ds.labels().to_vec(),
            None,
        )
    }
}

/// Fits on train rows and maps every column into `[0, 1]`; test values outside
/// the training range are clamped.
pub fn min_max_scale(ds: &TabularDataset, split: &SplitAssignment) -> Result<TabularDataset> {
    MinMaxScaler::fit(ds, split)?.apply(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(cols: Vec<Vec<f64>>) -> TabularDataset {
        let n = cols[0].len();
        let names = (0..cols.len()).map(|j| format!("c{j}")).collect();
        TabularDataset::new(names, cols, vec!["x".into(); n], None).unwrap()
    }

    fn manual_split(train: Vec<usize>, test: Vec<usize>) -> SplitAssignment {
        SplitAssignment {
            train_indices: train,
            test_indices: test,
            seed: 0,
            ratio: 0.5,
        }
    }

    #[test]
    fn parses_simple_csv() {
        let text = "a,b,label\n1,2,x\n3,4,y\n5,6,x\n";
        let d = read_csv(text.as_bytes(), "label", &DEFAULT_MISSING_TOKENS).unwrap();
        assert_eq!(d.n_samples(), 3);
        assert_eq!(d.n_attributes(), 2);
        assert_eq!(d.column_names(), ["a", "b"]);
        assert_eq!(d.column(1), [2.0, 4.0, 6.0]);
        assert_eq!(d.labels(), ["x", "y", "x"]);
        assert!(!d.has_missing());
    }

    #[test]
    fn label_may_sit_anywhere() {
        let text = "label,a\nx,1\ny,2\n";
        let d = read_csv(text.as_bytes(), "label", &DEFAULT_MISSING_TOKENS).unwrap();
        assert_eq!(d.column_names(), ["a"]);
        assert_eq!(d.column(0), [1.0, 2.0]);
    }

    #[test]
    fn missing_token_sets_mask() {
        let text = "a,b,label\n1,NaN,x\n3,4,y\n";
        let d = read_csv(text.as_bytes(), "label", &["NaN"]).unwrap();
        assert!(d.is_missing(0, 1));
        assert_eq!(d.column(1)[0], 0.0);
        assert!(!d.is_missing(1, 1));
    }

    #[test]
    fn unlisted_nan_is_a_parse_error() {
        let text = "a,label\n1,x\nNaN,y\n";
        let err = read_csv(text.as_bytes(), "label", &["NA"]).unwrap_err();
        match err {
            Error::Parse { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "a", "NaN"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_error_names_cell() {
        let text = "a,b,label\n1,2,x\n3,oops,y\n";
        let err = read_csv(text.as_bytes(), "label", &DEFAULT_MISSING_TOKENS).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, ref column, .. } if column == "b"));
    }

    #[test]
    fn missing_label_column() {
        let text = "a,b\n1,2\n3,4\n";
        let err = read_csv(text.as_bytes(), "label", &DEFAULT_MISSING_TOKENS).unwrap_err();
        assert!(matches!(err, Error::MissingLabelColumn(_)));
    }

    #[test]
    fn missing_file() {
        let err = load_csv("/nonexistent/file.csv", "y", &DEFAULT_MISSING_TOKENS).unwrap_err();
        assert!(matches!(err, Error::FileNotFound(_)));
    }

    #[test]
    fn wide_header() {
        let mut text = (0..591)
            .map(|j| format!("f{j}"))
            .collect::<Vec<_>>()
            .join(",");
        text.push_str(",label\n");
        for r in 0..3 {
            let row = (0..591)
                .map(|j| format!("{}", r * j))
                .collect::<Vec<_>>()
                .join(",");
            text.push_str(&row);
            text.push_str(",-1\n");
        }
        let d = read_csv(text.as_bytes(), "label", &DEFAULT_MISSING_TOKENS).unwrap();
        assert_eq!(d.n_attributes(), 591);
    }

    #[test]
    fn impute_train_mean() {
        let mask = vec![vec![false, true, false]];
        let d = TabularDataset::new(
            vec!["a".into()],
            vec![vec![1.0, 0.0, 3.0]],
            vec!["x".into(); 3],
            Some(mask),
        )
        .unwrap();
        let out = impute_missing(&d, &manual_split(vec![0, 2], vec![1])).unwrap();
        assert_eq!(out.column(0), [1.0, 2.0, 3.0]);
        assert!(!out.has_missing());
    }

    #[test]
    fn impute_only_train_rows_count() {
        let d = TabularDataset::new(
            vec!["a".into()],
            vec![vec![2.0, 4.0, 0.0]],
            vec!["x".into(); 3],
            Some(vec![vec![false, false, true]]),
        )
        .unwrap();
        let out = impute_missing(&d, &manual_split(vec![0], vec![1, 2])).unwrap();
        assert_eq!(out.column(0), [2.0, 4.0, 2.0]);
    }

    #[test]
    fn impute_fully_missing_column() {
        let d = TabularDataset::new(
            vec!["a".into()],
            vec![vec![0.0; 3]],
            vec!["x".into(); 3],
            Some(vec![vec![true; 3]]),
        )
        .unwrap();
        let out = impute_missing(&d, &manual_split(vec![0, 1], vec![2])).unwrap();
        assert_eq!(out.column(0), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn scale_basic() {
        let d = ds(vec![vec![0.0, 5.0, 10.0]]);
        let out = min_max_scale(&d, &manual_split(vec![0, 1, 2], vec![])).unwrap();
        assert_eq!(out.column(0), [0.0, 0.5, 1.0]);
    }

    #[test]
    fn scale_constant_column() {
        let d = ds(vec![vec![7.0, 7.0]]);
        let out = min_max_scale(&d, &manual_split(vec![0, 1], vec![])).unwrap();
        assert_eq!(out.column(0), [0.5, 0.5]);
    }

    #[test]
    fn scale_clamps_test_values() {
        let d = ds(vec![vec![0.0, 10.0, 12.0, -3.0]]);
        let out = min_max_scale(&d, &manual_split(vec![0, 1], vec![2, 3])).unwrap();
        assert_eq!(out.column(0), [0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn scale_rejects_missing() {
        let d = TabularDataset::new(
            vec!["a".into()],
            vec![vec![1.0, 0.0]],
            vec!["x".into(); 2],
            Some(vec![vec![false, true]]),
        )
        .unwrap();
        let err = min_max_scale(&d, &manual_split(vec![0], vec![1])).unwrap_err();
        assert!(matches!(err, Error::MissingValues));
    }

    #[test]
    fn split_sizes() {
        let s = split_n(10, 0.8, 1000).unwrap();
        assert_eq!((s.train_indices.len(), s.test_indices.len()), (8, 2));
        let s = split_n(150, 0.8, 1000).unwrap();
        assert_eq!((s.train_indices.len(), s.test_indices.len()), (120, 30));
    }

    #[test]
    fn split_is_seeded() {
        assert_eq!(
            split_n(150, 0.8, 1000).unwrap(),
            split_n(150, 0.8, 1000).unwrap()
        );
        assert_ne!(
            split_n(150, 0.8, 1000).unwrap().train_indices,
            split_n(150, 0.8, 2000).unwrap().train_indices
        );
    }

    #[test]
    fn split_errors() {
        assert!(matches!(split_n(10, 0.0, 1), Err(Error::InvalidRatio(_))));
        assert!(matches!(split_n(10, 1.0, 1), Err(Error::InvalidRatio(_))));
        assert!(matches!(
            split_n(2, 0.9, 1),
            Err(Error::DegenerateSplit { .. })
        ));
        assert!(matches!(
            split_n(2, 0.1, 1),
            Err(Error::DegenerateSplit { .. })
        ));
    }

    #[test]
    fn split_manifest_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.csv");
        let s = split_n(5, 0.6, 3).unwrap();
        s.write_manifest(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "sample_id,split");
        assert_eq!(lines.len(), 6);
        let n_train = lines[1..].iter().filter(|l| l.ends_with(",train")).count();
        assert_eq!(n_train, 3);
        for (i, l) in lines[1..].iter().enumerate() {
            assert!(l.starts_with(&format!("{i},")));
        }
    }

    proptest! {
        #[test]
        fn split_partitions(n in 2usize..300, ratio in 0.05f64..0.95, seed in any::<u64>()) {
            match split_n(n, ratio, seed) {
                Ok(s) => {
                    prop_assert_eq!(s.train_indices.len(), train_size(n, ratio));
                    let mut all: Vec<usize> =
                        s.train_indices.iter().chain(&s.test_indices).copied().collect();
                    all.sort_unstable();
                    prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                }
                Err(Error::DegenerateSplit { .. }) => {
                    let t = train_size(n, ratio);
                    prop_assert!(t == 0 || t == n);
                }
                Err(e) => prop_assert!(false, "unexpected {e:?}"),
            }
        }

        #[test]
        fn scaling_idempotent_and_bounded(
            cols in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 12), 1..5),
            seed in any::<u64>(),
        ) {
            let d = ds(cols);
            let s = split(&d, 0.75, seed).unwrap();
            let once = min_max_scale(&d, &s).unwrap();
            let twice = min_max_scale(&once, &s).unwrap();
            prop_assert_eq!(&once, &twice);
            for col in once.columns() {
                prop_assert!(col.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }

        #[test]
        fn imputation_keeps_present_values(
            vals in prop::collection::vec(-50f64..50.0, 10),
            holes in prop::collection::vec(any::<bool>(), 10),
            seed in any::<u64>(),
        ) {
            let d = TabularDataset::new(
                vec!["a".into()],
                vec![vals.clone()],
                vec!["x".into(); 10],
                Some(vec![holes.clone()]),
            ).unwrap();
            let s = split(&d, 0.7, seed).unwrap();
            let out = impute_missing(&d, &s).unwrap();
            for i in 0..10 {
                if !holes[i] {
                    prop_assert_eq!(out.column(0)[i], vals[i]);
                }
            }
            prop_assert!(!out.has_missing());
        }
    }
}
