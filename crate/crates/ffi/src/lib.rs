//! C ABI over the `amra` transforms.
//!
//! Conventions:
//! - every fallible call returns an [`AmraStatus`]; on failure the message
//!   is available from [`amra_last_error_message`] on the same thread;
//! - images and coefficient canvases are row-major with interleaved
//!   channels (`rows × cols × channels`), as `double`;
//! - handles are opaque and must be released with their `_free` function;
//! - strings returned by the library are released with [`amra_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use amra::{CoefficientSet, Error, ImageTensor, SubbandLayout, TransformSpec};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmraStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidSpec = 2,
    InvalidArgument = 3,
    Size = 4,
    Layout = 5,
    Shape = 6,
    Format = 7,
    Io = 8,
    Internal = 9,
}

/// Coefficients plus their sub-band layout.
pub struct AmraCoefficients {
    inner: CoefficientSet,
}

/// A feature tensor or image.
pub struct AmraImage {
    inner: ImageTensor,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AmraStatus {
    match e {
        Error::Spec { .. } | Error::UnknownWavelet(_) => AmraStatus::InvalidSpec,
        Error::Argument(_) | Error::Construction(_) | Error::Perturbation(_) => {
            AmraStatus::InvalidArgument
        }
        Error::Size(_) => AmraStatus::Size,
        Error::Layout(_) => AmraStatus::Layout,
        Error::Shape(_) => AmraStatus::Shape,
        Error::Format(_) | Error::Corruption(_) | Error::Decode { .. } => AmraStatus::Format,
        Error::Io { .. } => AmraStatus::Io,
    }
}

struct Fail(AmraStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(AmraStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AmraStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AmraStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".into());
            set_error(format!("internal error: {msg}"));
            AmraStatus::Internal
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(AmraStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn read_image(
    data: *const f64,
    rows: usize,
    cols: usize,
    channels: usize,
) -> Result<ImageTensor, Fail> {
    if data.is_null() {
        return Err(null("data"));
    }
    let n = rows
        .checked_mul(cols)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| Fail(AmraStatus::Shape, "image size overflows".into()))?;
    let slice = std::slice::from_raw_parts(data, n);
    Ok(ImageTensor::new(rows, cols, channels, slice.to_vec())?)
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn coeffs<'a>(c: *const AmraCoefficients) -> Result<&'a CoefficientSet, Fail> {
    c.as_ref().map(|c| &c.inner).ok_or_else(|| null("coefficients"))
}

/// Forward transform of a `rows × cols × channels` image.
///
/// # Safety
/// `data` must point to `rows·cols·channels` doubles, `spec` to a
/// NUL-terminated string and `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn amra_transform(
    data: *const f64,
    rows: usize,
    cols: usize,
    channels: usize,
    spec: *const c_char,
    out: *mut *mut AmraCoefficients,
) -> AmraStatus {
    guard(|| {
        let spec: TransformSpec = read_str(spec, "spec")?.parse()?;
        let img = read_image(data, rows, cols, channels)?;
        let inner = amra::transforms::forward(&img, &spec)?;
        write_out(out, AmraCoefficients { inner })
    })
}

/// Inverse transform into a caller buffer of `len` doubles; the required
/// size comes from [`amra_coefficients_input_shape`].
///
/// # Safety
/// `c` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn amra_inverse(
    c: *const AmraCoefficients,
    buf: *mut f64,
    len: usize,
) -> AmraStatus {
    guard(|| {
        let c = coeffs(c)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let img = amra::transforms::inverse(c)?;
        if img.data().len() != len {
            return Err(Fail(
                AmraStatus::Shape,
                format!("buffer holds {len} values, image needs {}", img.data().len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(img.data());
        Ok(())
    })
}

/// Block-wise normalized copy of `c`.
///
/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn amra_normalize(
    c: *const AmraCoefficients,
    out: *mut *mut AmraCoefficients,
) -> AmraStatus {
    guard(|| {
        let inner = amra::blockwise_normalize(coeffs(c)?);
        write_out(out, AmraCoefficients { inner })
    })
}

/// Classifier-ready features (transform, optional normalization, packet
/// stacking) of an image.
///
/// # Safety
/// As for [`amra_transform`].
#[no_mangle]
pub unsafe extern "C" fn amra_extract_features(
    data: *const f64,
    rows: usize,
    cols: usize,
    channels: usize,
    spec: *const c_char,
    out: *mut *mut AmraImage,
) -> AmraStatus {
    guard(|| {
        let spec: TransformSpec = read_str(spec, "spec")?.parse()?;
        let img = read_image(data, rows, cols, channels)?;
        let inner = amra::extract_features(&img, &spec)?;
        write_out(out, AmraImage { inner })
    })
}

/// Canvas shape of the coefficients.
///
/// # Safety
/// `c` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn amra_coefficients_shape(
    c: *const AmraCoefficients,
    rows: *mut usize,
    cols: *mut usize,
    channels: *mut usize,
) -> AmraStatus {
    guard(|| {
        let c = coeffs(c)?;
        if rows.is_null() || cols.is_null() || channels.is_null() {
            return Err(null("shape output"));
        }
        let (r, cc, ch) = c.shape();
        (*rows, *cols, *channels) = (r, cc, ch);
        Ok(())
    })
}

/// Shape of the image the coefficients reconstruct to.
///
/// # Safety
/// As for [`amra_coefficients_shape`].
#[no_mangle]
pub unsafe extern "C" fn amra_coefficients_input_shape(
    c: *const AmraCoefficients,
    rows: *mut usize,
    cols: *mut usize,
    channels: *mut usize,
) -> AmraStatus {
    guard(|| {
        let c = coeffs(c)?;
        if rows.is_null() || cols.is_null() || channels.is_null() {
            return Err(null("shape output"));
        }
        (*rows, *cols, *channels) = (c.layout.input_rows, c.layout.input_cols, c.channels);
        Ok(())
    })
}

/// Borrowed pointer to the canvas values (valid until the handle is freed);
/// null for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn amra_coefficients_data(c: *const AmraCoefficients) -> *const f64 {
    c.as_ref().map_or(ptr::null(), |c| c.inner.data.as_ptr())
}

/// Layout record as JSON; free with [`amra_string_free`]. Null on error.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn amra_coefficients_layout_json(c: *const AmraCoefficients) -> *mut c_char {
    let mut result = ptr::null_mut();
    guard(|| {
        let json = serde_json::to_string(&coeffs(c)?.layout)
            .map_err(|e| Fail(AmraStatus::Internal, e.to_string()))?;
        result = CString::new(json)
            .map_err(|e| Fail(AmraStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    });
    result
}

/// Rebuilds a handle from canvas values and a layout JSON string.
///
/// # Safety
/// `data` must hold `rows·cols·channels` doubles; `layout_json` must be
/// NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn amra_coefficients_from_parts(
    data: *const f64,
    rows: usize,
    cols: usize,
    channels: usize,
    layout_json: *const c_char,
    out: *mut *mut AmraCoefficients,
) -> AmraStatus {
    guard(|| {
        let layout: SubbandLayout = serde_json::from_str(read_str(layout_json, "layout")?)
            .map_err(|e| Fail(AmraStatus::Layout, format!("layout JSON: {e}")))?;
        if (layout.rows, layout.cols) != (rows, cols) {
            return Err(Fail(
                AmraStatus::Layout,
                format!("layout is {}x{}, data is {rows}x{cols}", layout.rows, layout.cols),
            ));
        }
        let values = read_image(data, rows, cols, channels)?.into_data();
        let inner = CoefficientSet::new(values, channels, layout)?;
        write_out(out, AmraCoefficients { inner })
    })
}

/// # Safety
/// `c` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn amra_coefficients_free(c: *mut AmraCoefficients) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `img` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn amra_image_shape(
    img: *const AmraImage,
    rows: *mut usize,
    cols: *mut usize,
    channels: *mut usize,
) -> AmraStatus {
    guard(|| {
        let img = img.as_ref().ok_or_else(|| null("image"))?;
        if rows.is_null() || cols.is_null() || channels.is_null() {
            return Err(null("shape output"));
        }
        (*rows, *cols, *channels) = img.inner.shape();
        Ok(())
    })
}

/// Borrowed pointer to the image values; null for a null handle.
///
/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn amra_image_data(img: *const AmraImage) -> *const f64 {
    img.as_ref().map_or(ptr::null(), |i| i.inner.data().as_ptr())
}

/// # Safety
/// `img` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn amra_image_free(img: *mut AmraImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Message of the last failed call on this thread (null if none). The
/// pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn amra_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version (static string).
#[no_mangle]
pub extern "C" fn amra_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// # Safety
/// `s` must be null or a string returned by this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn amra_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
