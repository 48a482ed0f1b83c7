//! On-disk outputs: float tensor files, grayscale PNG previews, and the
//! dataset manifest.
//!
//! Tensor file layout (all integers little-endian):
//!
//! | offset | size      | field                                   |
//! |--------|-----------|-----------------------------------------|
//! | 0      | 4         | magic `b"VFPT"`                         |
//! | 4      | 2         | version, `u16` = 1                      |
//! | 6      | 4         | channels `c`, `u32`                     |
//! | 10     | 4         | height `h`, `u32`                       |
//! | 14     | 4         | width `w`, `u32`                        |
//! | 18     | 4·c·h·w   | `f32` payload, channel-major, row-major |

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{csv_field, CorrelationProfile, Direction};
use crate::error::{Error, Result};
use crate::layout::{embed, to_three_channels, GridDims, Strategy, VortexLayout};
use crate::tabular::{Imputer, MinMaxScaler, SplitAssignment, TabularDataset};

pub const TENSOR_MAGIC: [u8; 4] = *b"VFPT";
pub const TENSOR_VERSION: u16 = 1;
pub const TENSOR_HEADER_LEN: usize = 18;

pub const MANIFEST_CSV: &str = "manifest.csv";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const SPLIT_CSV: &str = "split.csv";
pub const SCORES_CSV: &str = "scores.csv";
pub const LAYOUT_CSV: &str = "layout.csv";
pub const TENSOR_DIR: &str = "tensors";
pub const PNG_DIR: &str = "png";

/// Dense `c x h x w` float tensor, channel-major then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Tensor3 {
    pub fn plane(&self, channel: usize) -> &[f32] {
        let len = self.height * self.width;
        &self.data[channel * len..(channel + 1) * len]
    }

    /// True when every channel equals channel 0 bit for bit.
    pub fn channels_identical(&self) -> bool {
        let first = self.plane(0);
        (1..self.channels).all(|c| {
            self.plane(c)
                .iter()
                .zip(first)
                .all(|(a, b)| a.to_bits() == b.to_bits())
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let expected = self.channels * self.height * self.width;
        if self.data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: self.data.len(),
            });
        }
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        let dim = |d: usize| {
            u32::try_from(d)
                .map_err(|_| Error::InconsistentInputs(format!("dimension {d} exceeds u32")))
        };
        let mut out = Vec::with_capacity(TENSOR_HEADER_LEN + 4 * expected);
        out.extend_from_slice(&TENSOR_MAGIC);
        out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
        for d in [self.channels, self.height, self.width] {
            out.extend_from_slice(&dim(d)?.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    /// Parses a tensor file image. `origin` only labels errors.
    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            path: origin.to_path_buf(),
            reason,
        };
        if bytes.len() < TENSOR_HEADER_LEN {
            return Err(bad(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        if bytes[..4] != TENSOR_MAGIC {
            return Err(bad("bad magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != TENSOR_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let word = |at: usize| {
            u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]) as usize
        };
        let (channels, height, width) = (word(6), word(10), word(14));
        let count = channels
            .checked_mul(height)
            .and_then(|x| x.checked_mul(width))
            .ok_or_else(|| bad("dimensions overflow".into()))?;
        let payload = &bytes[TENSOR_HEADER_LEN..];
        if payload.len() != 4 * count {
            return Err(bad(format!(
                "payload is {} bytes, header implies {}",
                payload.len(),
                4 * count
            )));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }
}

pub fn write_tensor(path: impl AsRef<Path>, tensor: &Tensor3) -> Result<()> {
    let path = path.as_ref();
    let bytes = tensor.to_bytes()?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor3> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Tensor3::from_bytes(&bytes, path)
}

/// 8-bit level for a value in `[0, 1]`, rounding halves up.
pub fn quantize(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Writes an 8-bit grayscale, non-interlaced PNG of a row-major plane.
pub fn write_png(
    path: impl AsRef<Path>,
    height: usize,
    width: usize,
    values: &[f64],
) -> Result<()> {
    let path = path.as_ref();
    if values.len() != height * width {
        return Err(Error::LengthMismatch {
            expected: height * width,
            actual: values.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InconsistentInputs(format!(
            "pixel {i} value {} outside [0, 1]",
            values[i]
        )));
    }
    let pixels: Vec<u8> = values.iter().map(|&v| quantize(v)).collect();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(&pixels)?;
    writer.finish()?;
    Ok(())
}

/// One placed attribute in the layout report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub rank: usize,
    pub column_name: String,
    pub score: f64,
    pub grid_row: usize,
    pub grid_col: usize,
    pub pixel_row: usize,
    pub pixel_col: usize,
}

pub fn layout_entries(
    column_names: &[String],
    profile: &CorrelationProfile,
    layout: &VortexLayout,
    strategy: Strategy,
) -> Vec<LayoutEntry> {
    profile
        .order
        .iter()
        .zip(&layout.cell_of_rank)
        .enumerate()
        .map(|(rank, (&attr, &(r, c)))| {
            let (pr, pc) = strategy.pixel_of(r, c);
            LayoutEntry {
                rank,
                column_name: column_names[attr].clone(),
                score: profile.scores[attr],
                grid_row: r,
                grid_col: c,
                pixel_row: pr,
                pixel_col: pc,
            }
        })
        .collect()
}

pub fn layout_csv(entries: &[LayoutEntry], strategy: Strategy) -> String {
    let mut out =
        String::from("strategy,rank,column_name,score,grid_row,grid_col,pixel_row,pixel_col\n");
    for e in entries {
        out.push_str(&format!(
            "{strategy},{},{},{},{},{},{},{}\n",
            e.rank,
            csv_field(&e.column_name),
            e.score,
            e.grid_row,
            e.grid_col,
            e.pixel_row,
            e.pixel_col
        ));
    }
    out
}

/// Run parameters recorded alongside the emitted samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format_version: u16,
    pub strategy: Strategy,
    pub direction: Direction,
    pub grid: GridDims,
    pub k: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    pub ratio: f64,
    pub corr_scope: String,
    pub label_column: String,
    pub column_names: Vec<String>,
    pub imputer: Imputer,
    pub scaler: MinMaxScaler,
    pub layout: Vec<LayoutEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sample_id: usize,
    pub label: String,
    pub split: String,
    pub tensor_path: String,
    pub png_path: Option<String>,
}

/// Header plus one entry per sample; paths are relative to the output
/// directory.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let json_path = out_dir.join(MANIFEST_JSON);
        let mut json = serde_json::to_string_pretty(&self.header)?;
        json.push('\n');
        fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;

        let csv_path = out_dir.join(MANIFEST_CSV);
        let mut out = String::from("sample_id,label,split,tensor_path,png_path\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.sample_id,
                csv_field(&e.label),
                e.split,
                csv_field(&e.tensor_path),
                csv_field(e.png_path.as_deref().unwrap_or(""))
            ));
        }
        fs::write(&csv_path, out).map_err(|e| Error::io(&csv_path, e))
    }

    pub fn read(out_dir: impl AsRef<Path>) -> Result<Self> {
        let out_dir = out_dir.as_ref();
        let json_path = out_dir.join(MANIFEST_JSON);
        let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
        let header: ManifestHeader = serde_json::from_str(&text)?;

        let csv_path = out_dir.join(MANIFEST_CSV);
        let file = File::open(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("").to_string();
            let sample_id = field(0).parse().map_err(|_| Error::Parse {
                row: entries.len() + 1,
                column: "sample_id".into(),
                value: field(0),
            })?;
            let png = field(4);
            entries.push(ManifestEntry {
                sample_id,
                label: field(1),
                split: field(2),
                tensor_path: field(3),
                png_path: (!png.is_empty()).then_some(png),
            });
        }
        Ok(Self { header, entries })
    }

    pub fn entry(&self, sample_id: usize) -> Option<&ManifestEntry> {
        self.entries
            .binary_search_by_key(&sample_id, |e| e.sample_id)
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Everything needed to render and write one converted dataset.
pub struct EmitRequest<'a> {
    /// Imputed and scaled table.
    pub dataset: &'a TabularDataset,
    pub split: &'a SplitAssignment,
    pub profile: &'a CorrelationProfile,
    pub layout: &'a VortexLayout,
    pub header: ManifestHeader,
    pub emit_png: bool,
}

pub fn tensor_file_name(sample_id: usize) -> String {
    format!("sample_{sample_id}.vfpt")
}

/// Writes one tensor (and optionally one PNG) per sample plus the manifest.
pub fn emit_dataset(req: EmitRequest<'_>, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let out_dir = out_dir.as_ref();
    let ds = req.dataset;
    let k = ds.n_attributes();
    let strategy = req.header.strategy;
    if req.profile.k() != k || req.layout.k != k || req.header.k != k {
        return Err(Error::InconsistentInputs(format!(
            "attribute counts differ: dataset {k}, profile {}, layout {}, header {}",
            req.profile.k(),
            req.layout.k,
            req.header.k
        )));
    }
    if req.split.n_samples() != ds.n_samples() {
        return Err(Error::InconsistentInputs(format!(
            "split covers {} samples, dataset has {}",
            req.split.n_samples(),
            ds.n_samples()
        )));
    }
    if ds.has_missing() {
        return Err(Error::MissingValues);
    }
    let (h, w) = strategy.image_size(req.layout.dims);
    if req.layout.dims != req.header.grid || (h, w) != (req.header.height, req.header.width) {
        return Err(Error::InconsistentInputs(
            "header geometry differs from layout".into(),
        ));
    }

    let tensor_dir = out_dir.join(TENSOR_DIR);
    fs::create_dir_all(&tensor_dir).map_err(|e| Error::io(&tensor_dir, e))?;
    let png_dir = out_dir.join(PNG_DIR);
    if req.emit_png {
        fs::create_dir_all(&png_dir).map_err(|e| Error::io(&png_dir, e))?;
    }

    let roles = req.split.roles();
    let entries = (0..ds.n_samples())
        .into_par_iter()
        .map(|id| -> Result<ManifestEntry> {
            let grid = req.layout.place(req.profile, &ds.row(id))?;
            let img = embed(&grid, strategy);
            let name = tensor_file_name(id);
            write_tensor(tensor_dir.join(&name), &to_three_channels(&img))?;
            let png_path = if req.emit_png {
                let png_name = format!("sample_{id}.png");
                write_png(png_dir.join(&png_name), img.height, img.width, &img.values)?;
                Some(format!("{PNG_DIR}/{png_name}"))
            } else {
                None
            };
            Ok(ManifestEntry {
                sample_id: id,
                label: ds.labels()[id].clone(),
                split: roles[id].as_str().to_string(),
                tensor_path: format!("{TENSOR_DIR}/{name}"),
                png_path,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        header: req.header,
        entries,
    };
    manifest.write(out_dir)?;
    Ok(manifest)
}

/// Checks that every manifest entry points at a readable tensor of the
/// header's shape with three identical channels. Returns the number of files
/// checked.
pub fn verify_output(out_dir: impl AsRef<Path>) -> Result<usize> {
    let out_dir = out_dir.as_ref();
    let manifest = DatasetManifest::read(out_dir)?;
    let hd = &manifest.header;
    for e in &manifest.entries {
        let path: PathBuf = out_dir.join(&e.tensor_path);
        let t = read_tensor(&path)?;
        if (t.channels, t.height, t.width) != (hd.channels, hd.height, hd.width) {
            return Err(Error::Format {
                path,
                reason: format!(
                    "shape {}x{}x{} differs from header {}x{}x{}",
                    t.channels, t.height, t.width, hd.channels, hd.height, hd.width
                ),
            });
        }
        if !t.channels_identical() {
            return Err(Error::Format {
                path,
                reason: "channels differ".into(),
            });
        }
        if let Some(png) = &e.png_path {
            let p = out_dir.join(png);
            if !p.is_file() {
                return Err(Error::FileNotFound(p));
            }
        }
    }
    Ok(manifest.entries.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use proptest::strategy::Strategy;

    #[test]
    fn tiny_tensor_layout() {
        let t = Tensor3 {
            channels: 3,
            height: 1,
            width: 1,
            data: vec![0.5; 3],
        };
        let bytes = t.to_bytes().unwrap();
        assert_eq!(bytes.len(), 30);
        assert_eq!(&bytes[..4], b"VFPT");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..18], &[3, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&bytes[18..22], &0.5f32.to_le_bytes());
    }

    #[test]
    fn five_by_five_file_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.vfpt");
        let t = Tensor3 {
            channels: 3,
            height: 5,
            width: 5,
            data: (0..75).map(|i| i as f32 / 75.0).collect(),
        };
        write_tensor(&path, &t).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 318);
        assert_eq!(read_tensor(&path).unwrap(), t);
    }

    #[test]
    fn rejects_corruption() {
        let t = Tensor3 {
            channels: 3,
            height: 2,
            width: 2,
            data: vec![0.25; 12],
        };
        let bytes = t.to_bytes().unwrap();
        let origin = Path::new("x.vfpt");
        assert!(Tensor3::from_bytes(&bytes[..bytes.len() - 1], origin).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Tensor3::from_bytes(&extra, origin).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(Tensor3::from_bytes(&magic, origin).is_err());
        let mut version = bytes;
        version[4] = 2;
        assert!(Tensor3::from_bytes(&version, origin).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let t = Tensor3 {
            channels: 1,
            height: 1,
            width: 2,
            data: vec![0.0, f32::NAN],
        };
        assert!(matches!(t.to_bytes(), Err(Error::NonFiniteValue(1))));
    }

    #[test]
    fn quantize_levels() {
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(0.5), 128);
    }

    #[test]
    fn png_round_trip_levels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.png");
        let mut values = vec![0.0; 25];
        values[6] = 1.0;
        values[7] = 0.5;
        write_png(&path, 5, 5, &values).unwrap();
        let decoder = png::Decoder::new(std::io::BufReader::new(File::open(&path).unwrap()));
        let mut reader = decoder.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        assert_eq!((info.width, info.height), (5, 5));
        assert_eq!(info.color_type, png::ColorType::Grayscale);
        assert_eq!(info.bit_depth, png::BitDepth::Eight);
        assert_eq!(buf[6], 255);
        assert_eq!(buf[7], 128);
        assert_eq!(buf.iter().filter(|&&b| b != 0).count(), 2);
        assert!(write_png(&path, 1, 1, &[1.5]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(
            (h, w, data) in (1usize..8, 1usize..8).prop_flat_map(|(h, w)| {
                (Just(h), Just(w), prop::collection::vec(-1e6f32..1e6, 3 * h * w))
            })
        ) {
            let t = Tensor3 { channels: 3, height: h, width: w, data };
            let back = Tensor3::from_bytes(&t.to_bytes().unwrap(), Path::new("mem")).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
