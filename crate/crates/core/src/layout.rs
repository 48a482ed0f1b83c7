//! Feature-grid sizing, center-out spiral placement, and image embedding.
//!
//! Ranked attributes are laid on an `m x n` grid following a clockwise square
//! spiral that starts at the grid center and steps right, down, left, up with
//! run lengths 1, 1, 2, 2, 3, 3, ... Lattice points outside the grid are
//! skipped. Rank `t` therefore never sits on an outer ring before every rank
//! `< t` has filled the inner rings.
//!
//! The grid is then embedded into an image under one of four geometries:
//!
//! | strategy     | image size           | feature `(i, j)` at pixel |
//! |--------------|----------------------|---------------------------|
//! | `none`       | `m x n`              | `(i, j)`                  |
//! | `zpos1`      | `(m + 2) x (n + 2)`  | `(i + 1, j + 1)`          |
//! | `zpos2`      | `(m + 4) x (n + 4)`  | `(i + 2, j + 2)`          |
//! | `distancing` | `(2m + 1) x (2n + 1)`| `(2i + 1, 2j + 1)`        |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationProfile;
use crate::emit::Tensor3;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    None,
    Zpos1,
    Zpos2,
    Distancing,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::None,
        Strategy::Zpos1,
        Strategy::Zpos2,
        Strategy::Distancing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Zpos1 => "zpos1",
            Strategy::Zpos2 => "zpos2",
            Strategy::Distancing => "distancing",
        }
    }

    /// Image height and width for a feature grid of `dims`.
    pub fn image_size(self, dims: GridDims) -> (usize, usize) {
        let GridDims { m, n } = dims;
        match self {
            Strategy::None => (m, n),
            Strategy::Zpos1 => (m + 2, n + 2),
            Strategy::Zpos2 => (m + 4, n + 4),
            Strategy::Distancing => (2 * m + 1, 2 * n + 1),
        }
    }

    /// Pixel holding grid cell `(row, col)`.
    pub fn pixel_of(self, row: usize, col: usize) -> (usize, usize) {
        match self {
            Strategy::None => (row, col),
            Strategy::Zpos1 => (row + 1, col + 1),
            Strategy::Zpos2 => (row + 2, col + 2),
            Strategy::Distancing => (2 * row + 1, 2 * col + 1),
        }
    }

    /// Row-major occupancy mask of the embedded image.
    pub fn occupancy(self, dims: GridDims) -> Vec<bool> {
        let (h, w) = self.image_size(dims);
        let mut mask = vec![false; h * w];
        for i in 0..dims.m {
            for j in 0..dims.n {
                let (r, c) = self.pixel_of(i, j);
                mask[r * w + c] = true;
            }
        }
        mask
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Strategy::None),
            "zpos1" => Ok(Strategy::Zpos1),
            "zpos2" => Ok(Strategy::Zpos2),
            "distancing" => Ok(Strategy::Distancing),
            other => Err(format!(
                "unknown strategy `{other}` (expected none, zpos1, zpos2 or distancing)"
            )),
        }
    }
}

/// Feature grid shape: `m` rows by `n` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDims {
    pub m: usize,
    pub n: usize,
}

impl GridDims {
    pub fn new(m: usize, n: usize) -> Self {
        Self { m, n }
    }

    pub fn cells(self) -> usize {
        self.m * self.n
    }

    pub fn center(self) -> (usize, usize) {
        ((self.m - 1) / 2, (self.n - 1) / 2)
    }
}

impl fmt::Display for GridDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.m, self.n)
    }
}

impl FromStr for GridDims {
    type Err = String;

    /// Parses `MxN`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected MxN, got `{s}`"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("expected MxN, got `{s}`"))
        };
        let dims = GridDims::new(parse(a)?, parse(b)?);
        if dims.m == 0 || dims.n == 0 {
            return Err(format!("grid dimensions must be positive, got `{s}`"));
        }
        Ok(dims)
    }
}

/// Smallest `m` with `m * m >= k`.
fn ceil_sqrt(k: usize) -> usize {
    let mut m = (k as f64).sqrt() as usize;
    while m * m < k {
        m += 1;
    }
    while m > 0 && (m - 1) * (m - 1) >= k {
        m -= 1;
    }
    m
}

/// Grid for `k` attributes: `m = ceil(sqrt(k))`, `n = ceil(k / m)`.
pub fn derive_dims(k: usize) -> Result<GridDims> {
    if k == 0 {
        return Err(Error::NoAttributes);
    }
    let m = ceil_sqrt(k);
    Ok(GridDims::new(m, k.div_ceil(m)))
}

/// Grid cells in spiral order, starting at the center.
pub fn vortex_cells(dims: GridDims) -> Vec<(usize, usize)> {
    const STEPS: [(i64, i64); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
    let total = dims.cells();
    let (m, n) = (dims.m as i64, dims.n as i64);
    let (cr, cc) = dims.center();
    let (mut r, mut c) = (cr as i64, cc as i64);
    let mut cells = Vec::with_capacity(total);
    cells.push((cr, cc));
    let mut run = 1;
    let mut leg = 0;
    while cells.len() < total {
        let (dr, dc) = STEPS[leg % 4];
        for _ in 0..run {
            r += dr;
            c += dc;
            if (0..m).contains(&r) && (0..n).contains(&c) {
                cells.push((r as usize, c as usize));
                if cells.len() == total {
                    break;
                }
            }
        }
        leg += 1;
        if leg % 2 == 0 {
            run += 1;
        }
    }
    cells
}

/// Chebyshev distance of a cell from the grid center.
pub fn ring(dims: GridDims, cell: (usize, usize)) -> usize {
    let (cr, cc) = dims.center();
    cell.0.abs_diff(cr).max(cell.1.abs_diff(cc))
}

/// Spiral assignment of ranks to grid cells for `k` active attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VortexLayout {
    pub dims: GridDims,
    /// Cell for every rank in `0..m*n`; ranks `>= k` are zero padding.
    pub cell_of_rank: Vec<(usize, usize)>,
    pub k: usize,
}

impl VortexLayout {
    pub fn new(dims: GridDims, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::NoAttributes);
        }
        if k > dims.cells() {
            return Err(Error::InconsistentInputs(format!(
                "{k} attributes do not fit a {dims} grid"
            )));
        }
        Ok(Self {
            dims,
            cell_of_rank: vortex_cells(dims),
            k,
        })
    }

    pub fn for_attributes(k: usize) -> Result<Self> {
        Self::new(derive_dims(k)?, k)
    }

    /// Places `sample` so that attribute `profile.order[t]` lands on the
    /// spiral's `t`-th cell.
    pub fn place(&self, profile: &CorrelationProfile, sample: &[f64]) -> Result<FeatureGrid> {
        if sample.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: sample.len(),
            });
        }
        if profile.order.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: profile.order.len(),
            });
        }
        let mut values = vec![0.0; self.dims.cells()];
        for (&attr, &(r, c)) in profile.order.iter().zip(&self.cell_of_rank) {
            values[r * self.dims.n + c] = sample[attr];
        }
        Ok(FeatureGrid {
            dims: self.dims,
            values,
        })
    }
}

pub fn place(profile: &CorrelationProfile, sample: &[f64], dims: GridDims) -> Result<FeatureGrid> {
    VortexLayout::new(dims, sample.len())?.place(profile, sample)
}

/// Dense `m x n` matrix of placed feature values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub dims: GridDims,
    pub values: Vec<f64>,
}

impl FeatureGrid {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.dims.n + col]
    }
}

/// Single-channel image with a mask of the pixels that carry grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedImage {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    pub occupancy: Vec<bool>,
    pub strategy: Strategy,
    pub source_dims: GridDims,
}

impl EmbeddedImage {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

pub fn embed(grid: &FeatureGrid, strategy: Strategy) -> EmbeddedImage {
    let dims = grid.dims;
    let (height, width) = strategy.image_size(dims);
    let mut values = vec![0.0; height * width];
    for i in 0..dims.m {
        for j in 0..dims.n {
            let (r, c) = strategy.pixel_of(i, j);
            values[r * width + c] = grid.get(i, j);
        }
    }
    EmbeddedImage {
        height,
        width,
        values,
        occupancy: strategy.occupancy(dims),
        strategy,
        source_dims: dims,
    }
}

/// Copies the single plane into three identical channels.
pub fn to_three_channels(img: &EmbeddedImage) -> Tensor3 {
    let plane: Vec<f32> = img.values.iter().map(|&v| v as f32).collect();
    let mut data = Vec::with_capacity(plane.len() * 3);
    for _ in 0..3 {
        data.extend_from_slice(&plane);
    }
    Tensor3 {
        channels: 3,
        height: img.height,
        width: img.width,
        data,
    }
}
