//! Vortex feature positioning: turn rows of a tabular dataset into small
//! images whose pixel layout follows attribute correlation.
//!
//! Attributes are scored by the sum of their absolute Pearson correlations
//! with every attribute, ranked, and laid on a near-square grid along a
//! center-out spiral, so that (in ascending mode) the least correlated
//! attributes sit where a 3x3 convolution visits most often. The grid is
//! embedded into an image by zero padding, distancing, or as-is, and each
//! image is replicated to three channels.
//!
//! The [`conv`] module counts 3x3 window positions per embedding geometry,
//! both in closed form and by exhaustive sliding.

pub mod cli;
pub mod conv;
pub mod correlation;
pub mod emit;
pub mod error;
pub mod layout;
pub mod pipeline;
pub mod rng;
pub mod tabular;

pub use conv::{brute_force, budget_report, closed_form, BudgetReport, ConvBudget};
pub use correlation::{correlation_scores, pearson, rank, CorrelationProfile, Direction};
pub use emit::{
    emit_dataset, read_tensor, write_png, write_tensor, DatasetManifest, ManifestEntry,
    ManifestHeader, Tensor3,
};
pub use error::{Error, Result};
pub use layout::{
    derive_dims, embed, place, to_three_channels, vortex_cells, EmbeddedImage, FeatureGrid,
    GridDims, Strategy, VortexLayout,
};
pub use pipeline::{convert, ConvertOptions, CorrScope, Prepared, RunConfig};
pub use tabular::{
    impute_missing, load_csv, min_max_scale, split, SplitAssignment, TabularDataset,
};
