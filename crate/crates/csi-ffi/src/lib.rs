//! C ABI for the correlated spiral imaging engine.
//!
//! All handles are opaque; every fallible call returns a [`CsiStatus`] and
//! writes results through out-pointers. Handles must be released with the
//! matching `*_free` function. The generated header lives in `include/csi.h`.

use csi_core::amplitudes::{compute_table, AmplitudeTable, QuadratureGrid};
use csi_core::detection;
use csi_core::error::Error;
use csi_core::imaging;
use csi_core::scene::{SceneTransform, Shape, TransmissionMap};
use csi_core::spectra::{self, JointSpectrum, SpdcSource};
use num_complex::Complex64;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument value was out of range or malformed.
    InvalidArgument = 2,
    /// A shape or pose failed geometric validation.
    InvalidGeometry = 3,
    /// Raster bytes could not be parsed.
    ParseError = 4,
    /// Detector rates are mutually inconsistent.
    Inconsistent = 5,
    /// The requested distribution carries no usable mass.
    Degenerate = 6,
    /// The request exceeds a resource budget.
    ResourceLimit = 7,
    /// Unexpected internal failure.
    Internal = 8,
}

/// Opaque transmission map handle.
pub struct CsiMap(TransmissionMap);

/// Opaque amplitude table handle.
pub struct CsiTable(AmplitudeTable);

/// Opaque joint spectrum handle.
pub struct CsiSpectrum(JointSpectrum);

fn status_of(err: &Error) -> CsiStatus {
    match err {
        Error::InvalidGeometry(_) => CsiStatus::InvalidGeometry,
        Error::RasterParse { .. } => CsiStatus::ParseError,
        Error::InconsistentRates(_) => CsiStatus::Inconsistent,
        Error::DegenerateDistribution(_) => CsiStatus::Degenerate,
        Error::CorrelationUndefined(_) => CsiStatus::Degenerate,
        Error::ResourceLimit(_) => CsiStatus::ResourceLimit,
        Error::InvalidConfig(_) => CsiStatus::InvalidArgument,
        Error::Io(_) => CsiStatus::Internal,
    }
}

/// Run a closure, translating panics into `Internal` instead of unwinding
/// across the C boundary.
fn guarded(f: impl FnOnce() -> CsiStatus) -> CsiStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(CsiStatus::Internal)
}

macro_rules! not_null {
    ($ptr:expr) => {
        if $ptr.is_null() {
            return CsiStatus::NullArgument;
        }
    };
}

/// Create a map from a shape description such as `disc:1` or `star:5`.
/// On success writes a new handle to `out`.
///
/// # Safety
/// `desc` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csi_map_shape(desc: *const c_char, out: *mut *mut CsiMap) -> CsiStatus {
    not_null!(desc);
    not_null!(out);
    let text = match CStr::from_ptr(desc).to_str() {
        Ok(t) => t,
        Err(_) => return CsiStatus::InvalidArgument,
    };
    guarded(|| match Shape::parse(text).and_then(TransmissionMap::from_shape) {
        Ok(map) => {
            *out = Box::into_raw(Box::new(CsiMap(map)));
            CsiStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Create a map from PGM bytes (P2 or P5). `pitch` is the world width of
/// one pixel; (`origin_x`, `origin_y`) is the world position of the raster
/// center. On success writes a new handle to `out`.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csi_map_raster_pgm(
    bytes: *const u8,
    len: usize,
    pitch: f64,
    origin_x: f64,
    origin_y: f64,
    out: *mut *mut CsiMap,
) -> CsiStatus {
    not_null!(bytes);
    not_null!(out);
    let data = std::slice::from_raw_parts(bytes, len);
    guarded(|| match TransmissionMap::load_raster(data, pitch, [origin_x, origin_y]) {
        Ok(map) => {
            *out = Box::into_raw(Box::new(CsiMap(map)));
            CsiStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Replace the map's pose: scale, then clockwise rotation by `rotation`
/// radians, then translation.
///
/// # Safety
/// `map` must be a live handle from a `csi_map_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn csi_map_pose(
    map: *mut CsiMap,
    rotation: f64,
    dx: f64,
    dy: f64,
    scale: f64,
) -> CsiStatus {
    not_null!(map);
    guarded(|| {
        let handle = &mut *map;
        let pose = SceneTransform { rotation, translation: [dx, dy], scale };
        match handle.0.clone().with_pose(pose) {
            Ok(updated) => {
                handle.0 = updated;
                CsiStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Set or clear the inverted transmission convention (T -> 1 - T).
///
/// # Safety
/// `map` must be a live handle from a `csi_map_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn csi_map_set_invert(map: *mut CsiMap, invert: c_int) -> CsiStatus {
    not_null!(map);
    guarded(|| {
        let handle = &mut *map;
        handle.0 = handle.0.clone().with_invert(invert != 0);
        CsiStatus::Ok
    })
}

/// Sample the transmission at a world point.
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csi_map_sample(
    map: *const CsiMap,
    x: f64,
    y: f64,
    out: *mut f64,
) -> CsiStatus {
    not_null!(map);
    not_null!(out);
    guarded(|| {
        *out = (*map).0.sample(x, y);
        CsiStatus::Ok
    })
}

/// Release a map handle. A null pointer is ignored.
///
/// # Safety
/// `map` must be null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn csi_map_free(map: *mut CsiMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Compute the transition-amplitude table of `map` for |l| <= l_max,
/// p <= p_max on an (half_width, n) midpoint grid. Pass
/// `grid_half_width <= 0` or `grid_n == 0` to use the defaults.
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csi_table_compute(
    map: *const CsiMap,
    l_max: u32,
    p_max: u32,
    grid_half_width: f64,
    grid_n: usize,
    out: *mut *mut CsiTable,
) -> CsiStatus {
    not_null!(map);
    not_null!(out);
    guarded(|| {
        let grid = if grid_half_width <= 0.0 || grid_n == 0 {
            Ok(QuadratureGrid::default())
        } else {
            QuadratureGrid::new(grid_half_width, grid_n)
        };
        let grid = match grid {
            Ok(g) => g,
            Err(e) => return status_of(&e),
        };
        match compute_table(&(*map).0, l_max, p_max, &grid) {
            Ok(table) => {
                *out = Box::into_raw(Box::new(CsiTable(table)));
                CsiStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Read one complex entry of the table.
///
/// # Safety
/// `table` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csi_table_get(
    table: *const CsiTable,
    l_out: i32,
    p_out: u32,
    l_in: i32,
    p_in: u32,
    re: *mut f64,
    im: *mut f64,
) -> CsiStatus {
    not_null!(table);
    not_null!(re);
    not_null!(im);
    guarded(|| {
        use csi_core::modes::ModeIndex;
        match (*table).0.get(ModeIndex::new(l_out, p_out), ModeIndex::new(l_in, p_in)) {
            Some(a) => {
                *re = a.re;
                *im = a.im;
                CsiStatus::Ok
            }
            None => CsiStatus::InvalidArgument,
        }
    })
}

/// Release a table handle. A null pointer is ignored.
///
/// # Safety
/// `table` must be null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn csi_table_free(table: *mut CsiTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Singles rates of the two detection ports for amplitude (re, im).
///
/// # Safety
/// `n_plus` and `n_minus` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csi_singles_rates(
    re: f64,
    im: f64,
    n_plus: *mut f64,
    n_minus: *mut f64,
) -> CsiStatus {
    not_null!(n_plus);
    not_null!(n_minus);
    guarded(|| {
        let rates = detection::singles_rates(Complex64::new(re, im));
        *n_plus = rates.n_plus;
        *n_minus = rates.n_minus;
        CsiStatus::Ok
    })
}

/// Recover the amplitude from the two singles rates. `re_magnitude`
/// receives |Re a| — the sign is not observable; `im` is exact.
///
/// # Safety
/// `re_magnitude` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csi_invert_rates(
    n_plus: f64,
    n_minus: f64,
    re_magnitude: *mut f64,
    im: *mut f64,
) -> CsiStatus {
    not_null!(re_magnitude);
    not_null!(im);
    guarded(|| {
        match detection::invert_rates(detection::SinglesRates { n_plus, n_minus }) {
            Ok(r) => {
                *re_magnitude = r.re_magnitude;
                *im = r.im;
                CsiStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Build the joint coincidence spectrum of a table. `gamma <= 0` selects
/// flat source weights, otherwise weights decay as gamma^(|l|+p). Nonzero
/// `zero_diagonal` removes the conserved diagonal and renormalizes.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csi_spectrum_compute(
    table: *const CsiTable,
    gamma: f64,
    zero_diagonal: c_int,
    out: *mut *mut CsiSpectrum,
) -> CsiStatus {
    not_null!(table);
    not_null!(out);
    guarded(|| {
        let source = if gamma <= 0.0 {
            Ok(SpdcSource::flat())
        } else {
            SpdcSource::geometric(gamma)
        };
        let source = match source {
            Ok(s) => s,
            Err(e) => return status_of(&e),
        };
        let spectrum = spectra::joint_spectrum(&(*table).0, &source).and_then(|s| {
            if zero_diagonal != 0 {
                spectra::zero_diagonal(&s, true)
            } else {
                Ok(s)
            }
        });
        match spectrum {
            Ok(s) => {
                *out = Box::into_raw(Box::new(CsiSpectrum(s)));
                CsiStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Read one probability of the joint spectrum.
///
/// # Safety
/// `spectrum` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csi_spectrum_get(
    spectrum: *const CsiSpectrum,
    l_obj: i32,
    p_obj: u32,
    l_ref: i32,
    p_ref: u32,
    out: *mut f64,
) -> CsiStatus {
    not_null!(spectrum);
    not_null!(out);
    guarded(|| {
        use csi_core::modes::ModeIndex;
        match (*spectrum).0.get(ModeIndex::new(l_obj, p_obj), ModeIndex::new(l_ref, p_ref)) {
            Some(p) => {
                *out = p;
                CsiStatus::Ok
            }
            None => CsiStatus::InvalidArgument,
        }
    })
}

/// Mutual information of the joint spectrum, in bits.
///
/// # Safety
/// `spectrum` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csi_spectrum_mutual_information(
    spectrum: *const CsiSpectrum,
    out: *mut f64,
) -> CsiStatus {
    not_null!(spectrum);
    not_null!(out);
    guarded(|| {
        *out = spectra::mutual_information(&(*spectrum).0);
        CsiStatus::Ok
    })
}

/// Release a spectrum handle. A null pointer is ignored.
///
/// # Safety
/// `spectrum` must be null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn csi_spectrum_free(spectrum: *mut CsiSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Reconstruct the image into caller-owned buffers of `resolution *
/// resolution` doubles each (row-major, x fastest, y ascending).
///
/// # Safety
/// `table` must be a live handle; `re_out` and `im_out` must each point to
/// `resolution * resolution` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn csi_reconstruct(
    table: *const CsiTable,
    resolution: usize,
    half_width: f64,
    re_out: *mut f64,
    im_out: *mut f64,
) -> CsiStatus {
    not_null!(table);
    not_null!(re_out);
    not_null!(im_out);
    if resolution == 0 || !(half_width > 0.0) {
        return CsiStatus::InvalidArgument;
    }
    guarded(|| {
        let image = imaging::reconstruct(&(*table).0, resolution, half_width);
        let re = std::slice::from_raw_parts_mut(re_out, resolution * resolution);
        let im = std::slice::from_raw_parts_mut(im_out, resolution * resolution);
        for (k, v) in image.values.iter().enumerate() {
            re[k] = v.re;
            im[k] = v.im;
        }
        CsiStatus::Ok
    })
}

/// Fraction of off-diagonal |a|^2 mass violating the N-fold selection rule.
///
/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csi_symmetry_audit(
    table: *const CsiTable,
    n_fold: u32,
    out: *mut f64,
) -> CsiStatus {
    not_null!(table);
    not_null!(out);
    guarded(|| match csi_core::experiments::symmetry_audit(&(*table).0, n_fold) {
        Ok(v) => {
            *out = v;
            CsiStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Static description of a status code. Never null.
#[no_mangle]
pub extern "C" fn csi_status_message(status: CsiStatus) -> *const c_char {
    let text: &'static [u8] = match status {
        CsiStatus::Ok => b"ok\0",
        CsiStatus::NullArgument => b"required pointer argument was null\0",
        CsiStatus::InvalidArgument => b"argument out of range or malformed\0",
        CsiStatus::InvalidGeometry => b"shape or pose failed validation\0",
        CsiStatus::ParseError => b"raster bytes could not be parsed\0",
        CsiStatus::Inconsistent => b"detector rates are mutually inconsistent\0",
        CsiStatus::Degenerate => b"distribution carries no usable mass\0",
        CsiStatus::ResourceLimit => b"request exceeds a resource budget\0",
        CsiStatus::Internal => b"internal failure\0",
    };
    text.as_ptr() as *const c_char
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn csi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
