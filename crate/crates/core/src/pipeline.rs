//! End-to-end conversion: load, split, impute, scale, correlate, rank, lay
//! out, emit.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationProfile, Direction};
use crate::emit::{
    self, layout_csv, layout_entries, DatasetManifest, EmitRequest, ManifestHeader, LAYOUT_CSV,
    SCORES_CSV, SPLIT_CSV,
};
use crate::error::{Error, Result};
use crate::layout::{embed, to_three_channels, EmbeddedImage, Strategy, VortexLayout};
use crate::tabular::{
    self, Imputer, MinMaxScaler, SplitAssignment, TabularDataset, DEFAULT_MISSING_TOKENS,
};

pub const DEFAULT_RATIO: f64 = 0.8;
pub const DEFAULT_SEED: u64 = 1000;

/// Rows used to compute correlation scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrScope {
    #[default]
    Train,
    Full,
}

impl CorrScope {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrScope::Train => "train",
            CorrScope::Full => "full",
        }
    }
}

impl fmt::Display for CorrScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorrScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(CorrScope::Train),
            "full" => Ok(CorrScope::Full),
            other => Err(format!(
                "unknown correlation scope `{other}` (expected train or full)"
            )),
        }
    }
}

/// Conversion parameters independent of file locations.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvertOptions {
    pub strategy: Strategy,
    pub direction: Direction,
    pub ratio: f64,
    pub seed: u64,
    pub corr_scope: CorrScope,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Distancing,
            direction: Direction::Ascending,
            ratio: DEFAULT_RATIO,
            seed: DEFAULT_SEED,
            corr_scope: CorrScope::Train,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub label_column: String,
    pub out_dir: PathBuf,
    pub emit_png: bool,
    pub missing_tokens: Vec<String>,
    pub options: ConvertOptions,
}

impl RunConfig {
    pub fn new(
        input_path: impl Into<PathBuf>,
        label_column: impl Into<String>,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            input_path: input_path.into(),
            label_column: label_column.into(),
            out_dir: out_dir.into(),
            emit_png: false,
            missing_tokens: DEFAULT_MISSING_TOKENS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            options: ConvertOptions::default(),
        }
    }
}

/// A dataset carried through every stage up to, but not including, emission.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub label_column: String,
    pub options: ConvertOptions,
    pub split: SplitAssignment,
    pub imputer: Imputer,
    pub scaler: MinMaxScaler,
    /// Imputed and scaled values.
    pub dataset: TabularDataset,
    pub profile: CorrelationProfile,
    pub layout: VortexLayout,
}

impl Prepared {
    pub fn from_dataset(
        raw: &TabularDataset,
        label_column: impl Into<String>,
        options: ConvertOptions,
    ) -> Result<Self> {
        let split = tabular::split(raw, options.ratio, options.seed)?;
        let imputer = Imputer::fit(raw, &split)?;
        let imputed = imputer.apply(raw)?;
        let scaler = MinMaxScaler::fit(&imputed, &split)?;
        let dataset = scaler.apply(&imputed)?;
        let corr_rows = match options.corr_scope {
            CorrScope::Train => dataset.select_rows(&split.train_indices),
            CorrScope::Full => dataset.clone(),
        };
        let profile = CorrelationProfile::from_dataset(&corr_rows, options.direction)?;
        let layout = VortexLayout::for_attributes(dataset.n_attributes())?;
        info!(
            "prepared {} samples x {} attributes, grid {}",
            dataset.n_samples(),
            dataset.n_attributes(),
            layout.dims
        );
        Ok(Self {
            label_column: label_column.into(),
            options,
            split,
            imputer,
            scaler,
            dataset,
            profile,
            layout,
        })
    }

    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let raw = tabular::load_csv(&cfg.input_path, &cfg.label_column, &cfg.missing_tokens)?;
        info!(
            "loaded {} rows from {}",
            raw.n_samples(),
            cfg.input_path.display()
        );
        Self::from_dataset(&raw, cfg.label_column.clone(), cfg.options.clone())
    }

    pub fn k(&self) -> usize {
        self.dataset.n_attributes()
    }

    pub fn image_size(&self) -> (usize, usize) {
        self.options.strategy.image_size(self.layout.dims)
    }

    pub fn render(&self, sample_id: usize) -> Result<EmbeddedImage> {
        if sample_id >= self.dataset.n_samples() {
            return Err(Error::NotFound(format!("sample {sample_id}")));
        }
        let grid = self
            .layout
            .place(&self.profile, &self.dataset.row(sample_id))?;
        Ok(embed(&grid, self.options.strategy))
    }

    pub fn tensor(&self, sample_id: usize) -> Result<emit::Tensor3> {
        Ok(to_three_channels(&self.render(sample_id)?))
    }

    pub fn header(&self) -> ManifestHeader {
        let (height, width) = self.image_size();
        ManifestHeader {
            format_version: emit::TENSOR_VERSION,
            strategy: self.options.strategy,
            direction: self.options.direction,
            grid: self.layout.dims,
            k: self.k(),
            channels: 3,
            height,
            width,
            seed: self.options.seed,
            ratio: self.options.ratio,
            corr_scope: self.options.corr_scope.as_str().to_string(),
            label_column: self.label_column.clone(),
            column_names: self.dataset.column_names().to_vec(),
            imputer: self.imputer.clone(),
            scaler: self.scaler.clone(),
            layout: layout_entries(
                self.dataset.column_names(),
                &self.profile,
                &self.layout,
                self.options.strategy,
            ),
        }
    }

    /// Writes tensors, optional PNGs, the manifest, and the split, score and
    /// layout reports under `out_dir`.
    pub fn emit(&self, out_dir: impl AsRef<Path>, emit_png: bool) -> Result<DatasetManifest> {
        let out_dir = out_dir.as_ref();
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let header = self.header();
        let layout_text = layout_csv(&header.layout, self.options.strategy);
        let manifest = emit::emit_dataset(
            EmitRequest {
                dataset: &self.dataset,
                split: &self.split,
                profile: &self.profile,
                layout: &self.layout,
                header,
                emit_png,
            },
            out_dir,
        )?;
        self.split.write_manifest(out_dir.join(SPLIT_CSV))?;
        write_text(
            &out_dir.join(SCORES_CSV),
            &self.profile.to_csv(self.dataset.column_names()),
        )?;
        write_text(&out_dir.join(LAYOUT_CSV), &layout_text)?;
        Ok(manifest)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvertSummary {
    pub k: usize,
    pub grid: crate::layout::GridDims,
    pub image: (usize, usize),
    pub n_outputs: usize,
    pub n_train: usize,
    pub n_test: usize,
}

impl fmt::Display for ConvertSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={} grid={} image=3x{}x{} outputs={} (train {}, test {})",
            self.k,
            self.grid,
            self.image.0,
            self.image.1,
            self.n_outputs,
            self.n_train,
            self.n_test
        )
    }
}

pub fn convert(cfg: &RunConfig) -> Result<ConvertSummary> {
    let prepared = Prepared::load(cfg)?;
    let manifest = prepared.emit(&cfg.out_dir, cfg.emit_png)?;
    Ok(ConvertSummary {
        k: prepared.k(),
        grid: prepared.layout.dims,
        image: prepared.image_size(),
        n_outputs: manifest.entries.len(),
        n_train: prepared.split.train_indices.len(),
        n_test: prepared.split.test_indices.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TabularDataset {
        let text = "a,b,c,y\n1,2,NA,p\n2,1,5,q\n3,4,6,p\n4,3,7,q\n5,6,8,p\n";
        tabular::read_csv(text.as_bytes(), "y", &DEFAULT_MISSING_TOKENS).unwrap()
    }

    #[test]
    fn prepares_small_table() {
        let p = Prepared::from_dataset(&small(), "y", ConvertOptions::default()).unwrap();
        assert_eq!(p.k(), 3);
        assert_eq!(p.layout.dims, crate::layout::GridDims::new(2, 2));
        assert_eq!(p.image_size(), (5, 5));
        assert!(!p.dataset.has_missing());
        for col in p.dataset.columns() {
            assert!(col.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let img = p.render(0).unwrap();
        assert_eq!(img.occupancy.iter().filter(|&&o| o).count(), 4);
        assert!(matches!(p.render(99), Err(Error::NotFound(_))));
    }

    #[test]
    fn full_scope_uses_every_row() {
        let opts = ConvertOptions {
            corr_scope: CorrScope::Full,
            ..ConvertOptions::default()
        };
        let p = Prepared::from_dataset(&small(), "y", opts).unwrap();
        let expected = crate::correlation::correlation_scores(&p.dataset);
        assert_eq!(p.profile.scores, expected);
    }

    #[test]
    fn scope_parse() {
        assert_eq!("full".parse::<CorrScope>().unwrap(), CorrScope::Full);
        assert!("half".parse::<CorrScope>().is_err());
    }
}
