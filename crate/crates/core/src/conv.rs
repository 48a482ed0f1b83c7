//! Counting 3x3 valid-convolution windows by how many feature pixels they cover.
//!
//! A "convolution operation" is one position of a 3x3 kernel slid over the
//! already padded or distanced image without further padding. `N_i` is the
//! number of positions that see exactly `i` feature pixels.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::layout::{GridDims, Strategy};

/// Feature counts a window can take under the supported geometries.
pub const COVER_KEYS: [usize; 6] = [1, 2, 3, 4, 6, 9];

/// Histogram of window positions by number of covered feature pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConvBudget {
    pub strategy: Strategy,
    pub dims: GridDims,
    /// `histogram[i]` = positions covering exactly `i` features, `i in 0..=9`.
    pub histogram: [u64; 10],
}

impl ConvBudget {
    fn from_pairs(strategy: Strategy, dims: GridDims, pairs: &[(usize, i64)]) -> Self {
        let mut histogram = [0u64; 10];
        for &(i, count) in pairs {
            debug_assert!(count >= 0, "negative count for N_{i}");
            histogram[i] = count as u64;
        }
        Self {
            strategy,
            dims,
            histogram,
        }
    }

    pub fn count(&self, covered: usize) -> u64 {
        self.histogram[covered]
    }

    pub fn total(&self) -> u64 {
        self.histogram.iter().sum()
    }

    /// `(i, N_i)` for the canonical keys.
    pub fn counts(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        COVER_KEYS.iter().map(|&i| (i, self.histogram[i]))
    }

    /// Sum of `i * N_i`: total feature-pixel coverings.
    pub fn feature_coverings(&self) -> u64 {
        self.histogram
            .iter()
            .enumerate()
            .map(|(i, &n)| i as u64 * n)
            .sum()
    }

    /// Window counts outside the canonical key set (must be empty).
    pub fn off_key_counts(&self) -> Vec<(usize, u64)> {
        (0..10)
            .filter(|i| !COVER_KEYS.contains(i))
            .filter(|&i| self.histogram[i] > 0)
            .map(|i| (i, self.histogram[i]))
            .collect()
    }
}

fn check_dims(strategy: Strategy, dims: GridDims) -> Result<()> {
    let min = match strategy {
        Strategy::None => 3,
        _ => 2,
    };
    if dims.m < min || dims.n < min {
        return Err(Error::UnsupportedDims {
            strategy,
            m: dims.m,
            n: dims.n,
        });
    }
    Ok(())
}

/// Closed-form `N_i` per strategy.
pub fn closed_form(strategy: Strategy, dims: GridDims) -> Result<ConvBudget> {
    check_dims(strategy, dims)?;
    let (m, n) = (dims.m as i64, dims.n as i64);
    let edge = 2 * m + 2 * n - 8;
    let interior = m * n - 2 * m - 2 * n + 4;
    let pairs: Vec<(usize, i64)> = match strategy {
        Strategy::None => vec![(9, (m - 2) * (n - 2))],
        Strategy::Zpos1 => vec![(4, 4), (6, edge), (9, interior)],
        Strategy::Zpos2 => vec![(1, 4), (2, 8), (3, edge), (4, 4), (6, edge), (9, interior)],
        Strategy::Distancing => vec![(1, m * n), (2, 2 * m * n - m - n), (4, m * n - m - n + 1)],
    };
    Ok(ConvBudget::from_pairs(strategy, dims, &pairs))
}

/// Closed-form total window count ("all cases").
pub fn closed_form_total(strategy: Strategy, dims: GridDims) -> u64 {
    let (m, n) = (dims.m as u64, dims.n as u64);
    match strategy {
        Strategy::None => m.saturating_sub(2) * n.saturating_sub(2),
        Strategy::Zpos1 => m * n,
        Strategy::Zpos2 => m * n + 2 * m + 2 * n + 4,
        Strategy::Distancing => 4 * m * n - 2 * m - 2 * n + 1,
    }
}

/// Slides a 3x3 window over every valid position of the strategy's occupancy
/// mask and histograms the number of feature pixels under it.
pub fn brute_force(strategy: Strategy, dims: GridDims) -> Result<ConvBudget> {
    let (h, w) = strategy.image_size(dims);
    if h < 3 || w < 3 {
        return Err(Error::ImageTooSmall {
            height: h,
            width: w,
        });
    }
    let mask = strategy.occupancy(dims);
    let mut histogram = [0u64; 10];
    for r in 0..=h - 3 {
        for c in 0..=w - 3 {
            let covered = (r..r + 3)
                .flat_map(|y| (c..c + 3).map(move |x| y * w + x))
                .filter(|&p| mask[p])
                .count();
            histogram[covered] += 1;
        }
    }
    Ok(ConvBudget {
        strategy,
        dims,
        histogram,
    })
}

/// One strategy at one grid size, both ways.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetRow {
    pub strategy: Strategy,
    pub dims: GridDims,
    pub image: (usize, usize),
    pub closed: ConvBudget,
    pub brute: ConvBudget,
}

impl BudgetRow {
    pub fn agrees(&self) -> bool {
        self.closed == self.brute && self.brute.off_key_counts().is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetReport {
    pub rows: Vec<BudgetRow>,
}

/// Evaluates every `(dims, strategy)` pair.
pub fn budget_report(dims_list: &[GridDims], strategies: &[Strategy]) -> Result<BudgetReport> {
    if dims_list.is_empty() {
        return Err(Error::EmptyInput("grid dimensions"));
    }
    if strategies.is_empty() {
        return Err(Error::EmptyInput("strategies"));
    }
    let mut rows = Vec::with_capacity(dims_list.len() * strategies.len());
    for &dims in dims_list {
        for &strategy in strategies {
            rows.push(BudgetRow {
                strategy,
                dims,
                image: strategy.image_size(dims),
                closed: closed_form(strategy, dims)?,
                brute: brute_force(strategy, dims)?,
            });
        }
    }
    Ok(BudgetReport { rows })
}

impl BudgetReport {
    pub fn all_agree(&self) -> bool {
        self.rows.iter().all(BudgetRow::agrees)
    }

    /// Aligned text table: one line per row with closed-form and brute-force
    /// counts side by side.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "{:<11} {:>7} {:>9} {:<7}",
            "strategy", "grid", "image", "method"
        );
        for i in COVER_KEYS {
            let _ = write!(out, " {:>6}", format!("N{i}"));
        }
        let _ = writeln!(out, " {:>7}  check", "total");
        for row in &self.rows {
            let image = format!("{}x{}", row.image.0, row.image.1);
            for (method, b) in [("closed", &row.closed), ("brute", &row.brute)] {
                let _ = write!(
                    out,
                    "{:<11} {:>7} {:>9} {:<7}",
                    row.strategy.as_str(),
                    row.dims.to_string(),
                    image,
                    method
                );
                for (_, n) in b.counts() {
                    let _ = write!(out, " {n:>6}");
                }
                let check = match (method, row.agrees()) {
                    ("brute", true) => "ok",
                    ("brute", false) => "MISMATCH",
                    _ => "",
                };
                let _ = writeln!(out, " {:>7}  {check}", b.total());
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,m,n,height,width,method");
        for i in COVER_KEYS {
            let _ = write!(out, ",n{i}");
        }
        out.push_str(",total,agrees\n");
        for row in &self.rows {
            for (method, b) in [("closed", &row.closed), ("brute", &row.brute)] {
                let _ = write!(
                    out,
                    "{},{},{},{},{},{method}",
                    row.strategy, row.dims.m, row.dims.n, row.image.0, row.image.1
                );
                for (_, n) in b.counts() {
                    let _ = write!(out, ",{n}");
                }
                let _ = writeln!(out, ",{},{}", b.total(), row.agrees());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(m: usize, n: usize) -> GridDims {
        GridDims::new(m, n)
    }

    #[test]
    fn twenty_five_at_three_by_three() {
        assert_eq!(closed_form(Strategy::Zpos2, d(3, 3)).unwrap().total(), 25);
        assert_eq!(
            closed_form(Strategy::Distancing, d(3, 3)).unwrap().total(),
            25
        );
    }

    #[test]
    fn zpos1_three_by_three() {
        let b = closed_form(Strategy::Zpos1, d(3, 3)).unwrap();
        assert_eq!(
            (b.count(4), b.count(6), b.count(9), b.total()),
            (4, 4, 1, 9)
        );
    }

    #[test]
    fn distancing_two_by_two() {
        let b = closed_form(Strategy::Distancing, d(2, 2)).unwrap();
        assert_eq!(
            (b.count(1), b.count(2), b.count(4), b.total()),
            (4, 4, 1, 9)
        );
        assert_eq!(b, brute_force(Strategy::Distancing, d(2, 2)).unwrap());
    }

    #[test]
    fn distancing_two_by_three_hand_slide() {
        let b = brute_force(Strategy::Distancing, d(2, 3)).unwrap();
        assert_eq!((b.count(1), b.count(2), b.count(4)), (6, 7, 2));
        assert_eq!(b.total(), 15);
    }

    #[test]
    fn no_padding_single_window() {
        let b = brute_force(Strategy::None, d(3, 3)).unwrap();
        assert_eq!(b.total(), 1);
        assert_eq!(b.count(9), 1);
    }

    #[test]
    fn preconditions() {
        assert!(matches!(
            closed_form(Strategy::Zpos1, d(1, 1)),
            Err(Error::UnsupportedDims { .. })
        ));
        assert!(matches!(
            closed_form(Strategy::None, d(2, 5)),
            Err(Error::UnsupportedDims { .. })
        ));
        assert!(matches!(
            brute_force(Strategy::None, d(2, 2)),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn report_errors_on_empty_input() {
        assert!(budget_report(&[d(3, 3)], &[]).is_err());
        assert!(budget_report(&[], &Strategy::ALL).is_err());
    }

    #[test]
    fn report_four_by_five_distancing() {
        let r = budget_report(&[d(4, 5)], &[Strategy::Distancing]).unwrap();
        assert!(r.all_agree());
        assert_eq!(r.rows[0].closed.total(), 63);
    }

    #[test]
    fn report_table_rows() {
        let r = budget_report(&[d(3, 3)], &Strategy::ALL).unwrap();
        assert!(r.all_agree());
        let totals: Vec<u64> = r.rows.iter().map(|row| row.closed.total()).collect();
        assert_eq!(totals, [1, 9, 25, 25]);
        let text = r.to_text();
        assert_eq!(text.lines().count(), 1 + 8);
        assert!(!text.contains("MISMATCH"));
        assert_eq!(r.to_csv().lines().count(), 1 + 8);
    }

    #[test]
    fn zpos2_corner_windows_are_the_four_fours() {
        // Windows centred on a corner feature's diagonal neighbour see a 2x2
        // block of features; there is one per grid corner.
        let dims = d(5, 4);
        let (h, w) = Strategy::Zpos2.image_size(dims);
        let mask = Strategy::Zpos2.occupancy(dims);
        let mut fours = Vec::new();
        for r in 0..=h - 3 {
            for c in 0..=w - 3 {
                let n = (r..r + 3)
                    .flat_map(|y| (c..c + 3).map(move |x| y * w + x))
                    .filter(|&p| mask[p])
                    .count();
                if n == 4 {
                    fours.push((r, c));
                }
            }
        }
        assert_eq!(fours, [(1, 1), (1, w - 4), (h - 4, 1), (h - 4, w - 4)]);
    }
}
