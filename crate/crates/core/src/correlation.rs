//! Pearson correlation and the summed-absolute-correlation attribute ranking.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::TabularDataset;

/// Sort direction for correlation scores. `Ascending` puts the least
/// correlated attribute first, i.e. at the spiral center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ascending,
    Descending,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Ascending => "ascending",
            Direction::Descending => "descending",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ascending" | "asc" => Ok(Direction::Ascending),
            "descending" | "desc" => Ok(Direction::Descending),
            other => Err(format!(
                "unknown direction `{other}` (expected ascending or descending)"
            )),
        }
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A column with its mean removed, plus its sum of squared deviations.
struct Centered {
    dev: Vec<f64>,
    ss: f64,
}

impl Centered {
    fn new(x: &[f64]) -> Self {
        let mean = compensated_sum(x.iter().copied()) / x.len() as f64;
        let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let ss = compensated_sum(dev.iter().map(|d| d * d));
        Self { dev, ss }
    }
}

fn pearson_centered(a: &Centered, b: &Centered) -> f64 {
    if a.ss == 0.0 || b.ss == 0.0 {
        return 0.0;
    }
    let cross = compensated_sum(a.dev.iter().zip(&b.dev).map(|(x, y)| x * y));
    (cross / (a.ss * b.ss).sqrt()).clamp(-1.0, 1.0)
}

/// Pearson correlation coefficient of two equally long vectors.
///
/// Returns 0 when either vector has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFewSamples(a.len()));
    }
    Ok(pearson_centered(&Centered::new(a), &Centered::new(b)))
}

/// Symmetric k×k matrix of pairwise correlations, row-major.
pub fn correlation_matrix(ds: &TabularDataset) -> Vec<f64> {
    let k = ds.n_attributes();
    let centered: Vec<Centered> = ds.columns().par_iter().map(|c| Centered::new(c)).collect();
    let upper: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|i| {
            (i..k)
                .map(|j| pearson_centered(&centered[i], &centered[j]))
                .collect()
        })
        .collect();
    let mut m = vec![0.0; k * k];
    for (i, row) in upper.iter().enumerate() {
        for (off, &r) in row.iter().enumerate() {
            let j = i + off;
            m[i * k + j] = r;
            m[j * k + i] = r;
        }
    }
    m
}

/// `c_i = sum_j |r(x_i, x_j)|` over all attributes, self-term included.
pub fn correlation_scores(ds: &TabularDataset) -> Vec<f64> {
    let k = ds.n_attributes();
    let m = correlation_matrix(ds);
    (0..k)
        .map(|i| compensated_sum(m[i * k..(i + 1) * k].iter().map(|r| r.abs())))
        .collect()
}

/// Stable ranking of `scores`; ties keep ascending column index in both
/// directions.
pub fn rank(scores: &[f64], direction: Direction) -> Result<Vec<usize>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("correlation scores"));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore(i));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Finite inputs: partial_cmp never fails.
    match direction {
        Direction::Ascending => order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap()),
        Direction::Descending => order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap()),
    }
    Ok(order)
}

/// Attribute scores and the resulting placement order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    pub scores: Vec<f64>,
    /// `order[t]` is the attribute placed at spiral position `t`.
    pub order: Vec<usize>,
    pub direction: Direction,
}

impl CorrelationProfile {
    pub fn from_scores(scores: Vec<f64>, direction: Direction) -> Result<Self> {
        let order = rank(&scores, direction)?;
        Ok(Self {
            scores,
            order,
            direction,
        })
    }

    pub fn from_dataset(ds: &TabularDataset, direction: Direction) -> Result<Self> {
        if ds.has_missing() {
            return Err(Error::MissingValues);
        }
        Self::from_scores(correlation_scores(ds), direction)
    }

    pub fn k(&self) -> usize {
        self.scores.len()
    }

    /// Rank position of each attribute (inverse of `order`).
    pub fn rank_of(&self) -> Vec<usize> {
        let mut inv = vec![0; self.order.len()];
        for (t, &attr) in self.order.iter().enumerate() {
            inv[attr] = t;
        }
        inv
    }

    /// `column_name,score,rank` rows in column order.
    pub fn to_csv(&self, column_names: &[String]) -> String {
        let ranks = self.rank_of();
        let mut out = String::from("column_name,score,rank\n");
        for (j, name) in column_names.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                csv_field(name),
                self.scores[j],
                ranks[j]
            ));
        }
        out
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(cols: Vec<Vec<f64>>) -> TabularDataset {
        let n = cols[0].len();
        let names = (0..cols.len()).map(|j| format!("c{j}")).collect();
        TabularDataset::new(names, cols, vec!["y".into(); n], None).unwrap()
    }

    #[test]
    fn perfect_and_anti() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn integer_case_matches_exact_rational() {
        // Exact: sum of products of deviations 4, both squared-deviation sums 5.
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() <= 1e-12);
    }

    #[test]
    fn constant_column_is_uncorrelated() {
        assert_eq!(pearson(&[2.0, 2.0, 2.0], &[1.0, 5.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn length_errors() {
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            pearson(&[1.0], &[1.0]),
            Err(Error::TooFewSamples(1))
        ));
    }

    #[test]
    fn single_attribute_score() {
        assert_eq!(correlation_scores(&table(vec![vec![1.0, 4.0, 2.0]])), [1.0]);
    }

    #[test]
    fn duplicate_columns_score_two() {
        let c = vec![0.1, 0.7, 0.3, 0.9];
        assert_eq!(correlation_scores(&table(vec![c.clone(), c])), [2.0, 2.0]);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(
            rank(&[3.0, 1.0, 2.0], Direction::Ascending).unwrap(),
            [1, 2, 0]
        );
        assert_eq!(
            rank(&[3.0, 1.0, 2.0], Direction::Descending).unwrap(),
            [0, 2, 1]
        );
        assert_eq!(
            rank(&[5.0, 5.0, 5.0], Direction::Ascending).unwrap(),
            [0, 1, 2]
        );
        assert_eq!(
            rank(&[5.0, 5.0, 5.0], Direction::Descending).unwrap(),
            [0, 1, 2]
        );
    }

    #[test]
    fn rank_rejects_bad_scores() {
        assert!(matches!(
            rank(&[1.0, f64::NAN], Direction::Ascending),
            Err(Error::NonFiniteScore(1))
        ));
        assert!(matches!(
            rank(&[], Direction::Ascending),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn scores_csv() {
        let p = CorrelationProfile::from_scores(vec![2.5, 1.0], Direction::Ascending).unwrap();
        let csv = p.to_csv(&["a,b".into(), "c".into()]);
        assert_eq!(csv, "column_name,score,rank\n\"a,b\",2.5,1\nc,1,0\n");
    }

    #[test]
    fn direction_parse() {
        assert_eq!(
            "ascending".parse::<Direction>().unwrap(),
            Direction::Ascending
        );
        assert_eq!("DESC".parse::<Direction>().unwrap(), Direction::Descending);
        assert!("sideways".parse::<Direction>().is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(
            a in prop::collection::vec(-1e3f64..1e3, 2..40),
            seed in prop::collection::vec(-1e3f64..1e3, 40),
        ) {
            let b = &seed[..a.len()];
            let ab = pearson(&a, b).unwrap();
            let ba = pearson(b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab.abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn affine_invariance(
            a in prop::collection::vec(0f64..1.0, 5..30),
            noise in prop::collection::vec(0f64..1.0, 30),
            alpha in prop_oneof![-50f64..-0.1, 0.1f64..50.0],
            beta in -10f64..10.0,
        ) {
            let b: Vec<f64> = a.iter().zip(&noise).map(|(x, e)| x + e).collect();
            let scaled: Vec<f64> = a.iter().map(|x| alpha * x + beta).collect();
            let base = pearson(&a, &b).unwrap();
            let moved = pearson(&scaled, &b).unwrap();
            prop_assert!((moved - alpha.signum() * base).abs() <= 1e-12);
        }

        #[test]
        fn self_correlation_is_one(a in prop::collection::vec(-1e3f64..1e3, 2..50)) {
            let r = pearson(&a, &a).unwrap();
            if a.iter().any(|&v| v != a[0]) {
                prop_assert_eq!(r, 1.0);
            }
        }

        #[test]
        fn reverse_without_ties(scores in prop::collection::hash_set(-1000i32..1000, 1..30)) {
            let c: Vec<f64> = scores.into_iter().map(f64::from).collect();
            let mut asc = rank(&c, Direction::Ascending).unwrap();
            asc.reverse();
            prop_assert_eq!(asc, rank(&c, Direction::Descending).unwrap());
        }

        #[test]
        fn order_invariant_under_positive_scaling(
            c in prop::collection::vec(1f64..20.0, 1..30),
            factor in 0.01f64..100.0,
        ) {
            let scaled: Vec<f64> = c.iter().map(|v| v * factor).collect();
            prop_assert_eq!(
                rank(&c, Direction::Ascending).unwrap(),
                rank(&scaled, Direction::Ascending).unwrap()
            );
        }
    }
}
