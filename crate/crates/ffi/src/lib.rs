//! C ABI over `vfp-core`.
//!
//! Every fallible entry point returns a [`VfpStatus`]. On failure a
//! human-readable message is stored per thread and can be fetched with
//! [`vfp_last_error_message`]. Pipelines and tensors are opaque handles
//! owned by the caller and released with their `_free` function.
//!
//! Integer parameters for strategy, direction and correlation scope take the
//! `VFP_STRATEGY_*`, `VFP_DIRECTION_*` and `VFP_SCOPE_*` constants; unknown
//! values yield `VFP_STATUS_INVALID_ARGUMENT`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use vfp_core::emit::Tensor3;
use vfp_core::pipeline::{ConvertOptions, CorrScope, Prepared, RunConfig};
use vfp_core::tabular::SplitRole;
use vfp_core::{conv, layout, Direction, Error, GridDims, Strategy};

pub const VFP_STRATEGY_NONE: u32 = 0;
pub const VFP_STRATEGY_ZPOS1: u32 = 1;
pub const VFP_STRATEGY_ZPOS2: u32 = 2;
pub const VFP_STRATEGY_DISTANCING: u32 = 3;

pub const VFP_DIRECTION_ASCENDING: u32 = 0;
pub const VFP_DIRECTION_DESCENDING: u32 = 1;

pub const VFP_SCOPE_TRAIN: u32 = 0;
pub const VFP_SCOPE_FULL: u32 = 1;

/// Length of the histogram filled by the convolution budget functions.
/// Entry `i` counts 3x3 windows covering exactly `i` attribute pixels.
pub const VFP_COUNTS_LEN: usize = 10;

/// Number of channels in every rendered image.
pub const VFP_CHANNELS: usize = 3;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VfpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    FileNotFound = 3,
    Io = 4,
    Parse = 5,
    InvalidData = 6,
    UnsupportedDims = 7,
    Format = 8,
    NotFound = 9,
    BufferTooSmall = 10,
    Panic = 11,
    Internal = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VfpOptions {
    pub strategy: u32,
    pub direction: u32,
    /// Training fraction, strictly between 0 and 1.
    pub ratio: f64,
    pub seed: u64,
    pub corr_scope: u32,
}

/// A loaded, split, imputed, scaled and ranked dataset.
pub struct VfpPipeline {
    inner: Prepared,
}

/// A decoded tensor file.
pub struct VfpTensor {
    inner: Tensor3,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: VfpStatus,
    message: String,
}

impl Failure {
    fn new(status: VfpStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Self {
        Self::new(VfpStatus::NullPointer, format!("`{what}` is null"))
    }

    fn arg(message: impl Into<String>) -> Self {
        Self::new(VfpStatus::InvalidArgument, message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::FileNotFound(_) => VfpStatus::FileNotFound,
            Error::Io { .. } => VfpStatus::Io,
            Error::Csv(_) | Error::Parse { .. } | Error::MissingLabelColumn(_) => VfpStatus::Parse,
            Error::InvalidRatio(_) | Error::LengthMismatch { .. } | Error::EmptyInput(_) => {
                VfpStatus::InvalidArgument
            }
            Error::UnsupportedDims { .. } | Error::ImageTooSmall { .. } => {
                VfpStatus::UnsupportedDims
            }
            Error::Format { .. } | Error::Json(_) => VfpStatus::Format,
            Error::NotFound(_) => VfpStatus::NotFound,
            Error::TooFewSamples(_)
            | Error::NoAttributes
            | Error::DegenerateSplit { .. }
            | Error::MissingValues
            | Error::NonFiniteScore(_)
            | Error::NonFiniteValue(_)
            | Error::InconsistentInputs(_) => VfpStatus::InvalidData,
            _ => VfpStatus::Internal,
        };
        Self::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VfpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VfpStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            VfpStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::arg(format!("`{what}` is not valid UTF-8")))
}

fn strategy(code: u32) -> Result<Strategy, Failure> {
    match code {
        VFP_STRATEGY_NONE => Ok(Strategy::None),
        VFP_STRATEGY_ZPOS1 => Ok(Strategy::Zpos1),
        VFP_STRATEGY_ZPOS2 => Ok(Strategy::Zpos2),
        VFP_STRATEGY_DISTANCING => Ok(Strategy::Distancing),
        other => Err(Failure::arg(format!("unknown strategy code {other}"))),
    }
}

fn direction(code: u32) -> Result<Direction, Failure> {
    match code {
        VFP_DIRECTION_ASCENDING => Ok(Direction::Ascending),
        VFP_DIRECTION_DESCENDING => Ok(Direction::Descending),
        other => Err(Failure::arg(format!("unknown direction code {other}"))),
    }
}

fn scope(code: u32) -> Result<CorrScope, Failure> {
    match code {
        VFP_SCOPE_TRAIN => Ok(CorrScope::Train),
        VFP_SCOPE_FULL => Ok(CorrScope::Full),
        other => Err(Failure::arg(format!(
            "unknown correlation scope code {other}"
        ))),
    }
}

impl VfpOptions {
    fn to_core(self) -> Result<ConvertOptions, Failure> {
        Ok(ConvertOptions {
            strategy: strategy(self.strategy)?,
            direction: direction(self.direction)?,
            ratio: self.ratio,
            seed: self.seed,
            corr_scope: scope(self.corr_scope)?,
        })
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vfp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vfp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

const STATUS_NAMES: [&str; 13] = [
    "VFP_STATUS_OK\0",
    "VFP_STATUS_NULL_POINTER\0",
    "VFP_STATUS_INVALID_ARGUMENT\0",
    "VFP_STATUS_FILE_NOT_FOUND\0",
    "VFP_STATUS_IO\0",
    "VFP_STATUS_PARSE\0",
    "VFP_STATUS_INVALID_DATA\0",
    "VFP_STATUS_UNSUPPORTED_DIMS\0",
    "VFP_STATUS_FORMAT\0",
    "VFP_STATUS_NOT_FOUND\0",
    "VFP_STATUS_BUFFER_TOO_SMALL\0",
    "VFP_STATUS_PANIC\0",
    "VFP_STATUS_INTERNAL\0",
];

/// Static name of a status code, e.g. `"VFP_STATUS_OK"`, or NULL for a
/// value outside the enum.
#[no_mangle]
pub extern "C" fn vfp_status_name(status: i32) -> *const c_char {
    usize::try_from(status)
        .ok()
        .and_then(|i| STATUS_NAMES.get(i))
        .map_or(ptr::null(), |s| s.as_ptr().cast())
}

/// Defaults: distancing, ascending, ratio 0.8, seed 1000, train scope.
#[no_mangle]
pub extern "C" fn vfp_options_default() -> VfpOptions {
    let d = ConvertOptions::default();
    VfpOptions {
        strategy: match d.strategy {
            Strategy::None => VFP_STRATEGY_NONE,
            Strategy::Zpos1 => VFP_STRATEGY_ZPOS1,
            Strategy::Zpos2 => VFP_STRATEGY_ZPOS2,
            Strategy::Distancing => VFP_STRATEGY_DISTANCING,
        },
        direction: match d.direction {
            Direction::Ascending => VFP_DIRECTION_ASCENDING,
            Direction::Descending => VFP_DIRECTION_DESCENDING,
        },
        ratio: d.ratio,
        seed: d.seed,
        corr_scope: match d.corr_scope {
            CorrScope::Train => VFP_SCOPE_TRAIN,
            CorrScope::Full => VFP_SCOPE_FULL,
        },
    }
}

/// Grid dimensions for `k` attributes.
#[no_mangle]
pub unsafe extern "C" fn vfp_derive_dims(k: usize, m: *mut usize, n: *mut usize) -> VfpStatus {
    guard(|| {
        let m = out_ref(m, "m")?;
        let n = out_ref(n, "n")?;
        if k == 0 {
            return Err(Failure::arg("k must be positive"));
        }
        let dims = layout::derive_dims(k)?;
        *m = dims.m;
        *n = dims.n;
        Ok(())
    })
}

/// Image height and width for an `m` x `n` grid under `strategy`.
#[no_mangle]
pub unsafe extern "C" fn vfp_image_size(
    strategy_code: u32,
    m: usize,
    n: usize,
    height: *mut usize,
    width: *mut usize,
) -> VfpStatus {
    guard(|| {
        let s = strategy(strategy_code)?;
        let height = out_ref(height, "height")?;
        let width = out_ref(width, "width")?;
        if m == 0 || n == 0 {
            return Err(Failure::arg("grid dimensions must be positive"));
        }
        (*height, *width) = s.image_size(GridDims::new(m, n));
        Ok(())
    })
}

unsafe fn budget_out(
    budget: conv::ConvBudget,
    counts: *mut u64,
    total: *mut u64,
) -> Result<(), Failure> {
    if counts.is_null() {
        return Err(Failure::null("counts"));
    }
    let counts = std::slice::from_raw_parts_mut(counts, VFP_COUNTS_LEN);
    for (i, slot) in counts.iter_mut().enumerate() {
        *slot = budget.count(i);
    }
    if !total.is_null() {
        *total = budget.total();
    }
    Ok(())
}

/// Closed-form window-coverage histogram. `counts` must hold
/// `VFP_COUNTS_LEN` entries; `total` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn vfp_conv_closed_form(
    strategy_code: u32,
    m: usize,
    n: usize,
    counts: *mut u64,
    total: *mut u64,
) -> VfpStatus {
    guard(|| {
        let budget = conv::closed_form(strategy(strategy_code)?, GridDims::new(m, n))?;
        budget_out(budget, counts, total)
    })
}

/// Same as [`vfp_conv_closed_form`] but by sliding a 3x3 window over the
/// occupancy mask.
#[no_mangle]
pub unsafe extern "C" fn vfp_conv_brute_force(
    strategy_code: u32,
    m: usize,
    n: usize,
    counts: *mut u64,
    total: *mut u64,
) -> VfpStatus {
    guard(|| {
        let budget = conv::brute_force(strategy(strategy_code)?, GridDims::new(m, n))?;
        budget_out(budget, counts, total)
    })
}

/// Pearson correlation of two equally long series.
#[no_mangle]
pub unsafe extern "C" fn vfp_pearson(
    a: *const f64,
    b: *const f64,
    len: usize,
    out: *mut f64,
) -> VfpStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            return Err(Failure::null(if a.is_null() { "a" } else { "b" }));
        }
        let out = out_ref(out, "out")?;
        let a = std::slice::from_raw_parts(a, len);
        let b = std::slice::from_raw_parts(b, len);
        *out = vfp_core::pearson(a, b)?;
        Ok(())
    })
}

/// Load a CSV and prepare it for rendering. `options` may be NULL for
/// defaults. Missing-value tokens are the empty string, `NA` and `NaN`.
/// On success `*out` receives a handle to free with [`vfp_pipeline_free`].
#[no_mangle]
pub unsafe extern "C" fn vfp_pipeline_load(
    csv_path: *const c_char,
    label_column: *const c_char,
    options: *const VfpOptions,
    out: *mut *mut VfpPipeline,
) -> VfpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let path = c_str(csv_path, "csv_path")?;
        let label = c_str(label_column, "label_column")?;
        let opts = match options.as_ref() {
            Some(o) => *o,
            None => vfp_options_default(),
        };
        let mut cfg = RunConfig::new(path, label, PathBuf::new());
        cfg.options = opts.to_core()?;
        let inner = Prepared::load(&cfg)?;
        *out = Box::into_raw(Box::new(VfpPipeline { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn vfp_pipeline_free(pipeline: *mut VfpPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}

#[no_mangle]
pub unsafe extern "C" fn vfp_pipeline_num_samples(
    pipeline: *const VfpPipeline,
    out: *mut usize,
) -> VfpStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(pipeline, "pipeline")?.inner.dataset.n_samples();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn vfp_pipeline_num_attributes(
    pipeline: *const VfpPipeline,
    out: *mut usize,
) -> VfpStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(pipeline, "pipeline")?.inner.k();
        Ok(())
    })
}

/// Shape of every rendered tensor. Any output pointer may be NULL.
#[no_mangle]
pub unsafe extern "C" fn vfp_pipeline_image_shape(
    pipeline: *const VfpPipeline,
    channels: *mut usize,
    height: *mut usize,
    width: *mut usize,
) -> VfpStatus {
    guard(|| {
        let (h, w) = in_ref(pipeline, "pipeline")?.inner.image_size();
        for (p, v) in [(channels, VFP_CHANNELS), (height, h), (width, w)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Attribute rank order: `order[r]` is the column index placed at rank `r`.
/// `order` must hold as many entries as there are attributes.
#[no_mangle]
pub unsafe extern "C" fn vfp_pipeline_order(
    pipeline: *const VfpPipeline,
    order: *mut usize,
    len: usize,
) -> VfpStatus {
    guard(|| {
        let p = in_ref(pipeline, "pipeline")?;
        if order.is_null() {
            return Err(Failure::null("order"));
        }
        let src = &p.inner.profile.order;
        if len < src.len() {
            return Err(Failure::new(
                VfpStatus::BufferTooSmall,
                format!("order needs {} entries, got {len}", src.len()),
            ));
        }
        std::slice::from_raw_parts_mut(order, src.len()).copy_from_slice(src);
        Ok(())
    })
}

/// 1 if the sample belongs to the training split, 0 otherwise.
#[no_mangle]
pub unsafe extern "C" fn vfp_pipeline_is_train(
    pipeline: *const VfpPipeline,
    sample_id: usize,
    out: *mut i32,
) -> VfpStatus {
    guard(|| {
        let p = in_ref(pipeline, "pipeline")?;
        let out = out_ref(out, "out")?;
        let roles = p.inner.split.roles();
        let role = roles
            .get(sample_id)
            .ok_or_else(|| Failure::new(VfpStatus::NotFound, format!("sample {sample_id}")))?;
        *out = i32::from(*role == SplitRole::Train);
        Ok(())
    })
}

/// Copy the label of a sample into `buf` as a NUL-terminated string.
/// `needed` (may be NULL) receives the required size including the NUL.
/// Passing a NULL `buf` with `cap` 0 only queries the size.
#[no_mangle]
pub unsafe extern "C" fn vfp_pipeline_label(
    pipeline: *const VfpPipeline,
    sample_id: usize,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> VfpStatus {
    guard(|| {
        let p = in_ref(pipeline, "pipeline")?;
        let label = p
            .inner
            .dataset
            .labels()
            .get(sample_id)
            .ok_or_else(|| Failure::new(VfpStatus::NotFound, format!("sample {sample_id}")))?;
        let size = label.len() + 1;
        if let Some(n) = needed.as_mut() {
            *n = size;
        }
        if buf.is_null() && cap == 0 {
            return Ok(());
        }
        if buf.is_null() {
            return Err(Failure::null("buf"));
        }
        if cap < size {
            return Err(Failure::new(
                VfpStatus::BufferTooSmall,
                format!("label needs {size} bytes, got {cap}"),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(buf.cast::<u8>(), size);
        dst[..label.len()].copy_from_slice(label.as_bytes());
        dst[label.len()] = 0;
        Ok(())
    })
}

/// Render one sample as a channel-major `3 x H x W` float tensor into `buf`,
/// which must hold at least `3 * H * W` floats.
#[no_mangle]
pub unsafe extern "C" fn vfp_pipeline_render(
    pipeline: *const VfpPipeline,
    sample_id: usize,
    buf: *mut f32,
    len: usize,
) -> VfpStatus {
    guard(|| {
        let p = in_ref(pipeline, "pipeline")?;
        if buf.is_null() {
            return Err(Failure::null("buf"));
        }
        let (h, w) = p.inner.image_size();
        let need = VFP_CHANNELS * h * w;
        if len < need {
            return Err(Failure::new(
                VfpStatus::BufferTooSmall,
                format!("render needs {need} floats, got {len}"),
            ));
        }
        let t = p.inner.tensor(sample_id)?;
        std::slice::from_raw_parts_mut(buf, need).copy_from_slice(&t.data);
        Ok(())
    })
}

/// Write manifests, tensors and optionally PNG previews under `out_dir`.
/// `written` (may be NULL) receives the number of samples emitted.
#[no_mangle]
pub unsafe extern "C" fn vfp_pipeline_emit(
    pipeline: *const VfpPipeline,
    out_dir: *const c_char,
    emit_png: bool,
    written: *mut usize,
) -> VfpStatus {
    guard(|| {
        let p = in_ref(pipeline, "pipeline")?;
        let dir = c_str(out_dir, "out_dir")?;
        let manifest = p.inner.emit(dir, emit_png)?;
        if let Some(w) = written.as_mut() {
            *w = manifest.entries.len();
        }
        Ok(())
    })
}

/// Read a tensor file. On success `*out` receives a handle to free with
/// [`vfp_tensor_free`].
#[no_mangle]
pub unsafe extern "C" fn vfp_tensor_read(
    path: *const c_char,
    out: *mut *mut VfpTensor,
) -> VfpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let inner = vfp_core::read_tensor(c_str(path, "path")?)?;
        *out = Box::into_raw(Box::new(VfpTensor { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn vfp_tensor_free(tensor: *mut VfpTensor) {
    if !tensor.is_null() {
        drop(Box::from_raw(tensor));
    }
}

/// Any output pointer may be NULL.
#[no_mangle]
pub unsafe extern "C" fn vfp_tensor_shape(
    tensor: *const VfpTensor,
    channels: *mut usize,
    height: *mut usize,
    width: *mut usize,
) -> VfpStatus {
    guard(|| {
        let t = &in_ref(tensor, "tensor")?.inner;
        for (p, v) in [(channels, t.channels), (height, t.height), (width, t.width)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Borrowed pointer to the channel-major payload, valid until the handle
/// is freed. `len` (may be NULL) receives the number of floats.
#[no_mangle]
pub unsafe extern "C" fn vfp_tensor_data(tensor: *const VfpTensor, len: *mut usize) -> *const f32 {
    match tensor.as_ref() {
        Some(t) => {
            if let Some(l) = len.as_mut() {
                *l = t.inner.data.len();
            }
            t.inner.data.as_ptr()
        }
        None => {
            set_last_error("`tensor` is null");
            ptr::null()
        }
    }
}
