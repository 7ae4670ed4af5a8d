//! C ABI for the rotor prognosis toolkit.
//!
//! The surface covers what another language typically needs to bind: scoring
//! a prediction series (accuracy, time-weighted `S`, consistency `C`),
//! calibrating penalty coefficients for a loop layout, denoising a wave, and
//! extracting the 24 per-sensor features.
//!
//! Conventions:
//!
//! * Every function returns an [`RpStatus`] code; outputs go through pointer
//!   arguments. `RP_STATUS_OK` (0) means success.
//! * `RpCalibration` is an opaque handle created by [`rp_calibration_new`]
//!   and released by [`rp_calibration_free`]. Handles are immutable and safe
//!   to share across threads.
//! * States are `0` (normal), `1` (risky), `2` (high-risk).
//! * No function panics across the boundary; internal panics are caught and
//!   reported as `RP_STATUS_INTERNAL`.
//!
//! The generated header is written to `include/rotor_prognosis.h` at build
//! time.

use std::ffi::{c_char, c_double, c_ulonglong};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rotor_prognosis::features::{
    freq_domain_features_partial, time_domain_features_partial, FREQ_DOMAIN_NAMES,
    PER_SENSOR_FEATURES, TIME_DOMAIN_NAMES,
};
use rotor_prognosis::metrics::{
    accuracy, c_score, calibrate, s_score, sequence_consistency, LoopLayout, PredictionSeries,
    Weights,
};
use rotor_prognosis::signal::{wavelet_denoise, Wave};

/// Status codes returned by every FFI function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpStatus {
    /// Success.
    RpStatusOk = 0,
    /// A required pointer argument was null.
    RpStatusNullPointer = 1,
    /// An argument was out of range (state > 2, zero length, bad weights).
    RpStatusInvalidArgument = 2,
    /// The loop layout violates `N1 >= 2`, `N2 >= 1`, `N3 >= 1`.
    RpStatusDegenerateLayout = 3,
    /// The layout admits no feasible calibration for the given weights.
    RpStatusInfeasibleCalibration = 4,
    /// Buffer lengths disagree with the layout or with each other.
    RpStatusLengthMismatch = 5,
    /// The wave cannot be processed (too short, not a multiple of 16, or
    /// non-finite samples).
    RpStatusInvalidWave = 6,
    /// Unexpected internal failure.
    RpStatusInternal = 7,
}

/// Accuracy and index scores of one prediction series.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpOpaiReport {
    pub accuracy: c_double,
    pub s: c_double,
    pub c: c_double,
    pub c1: c_double,
    pub c2: c_double,
    pub c3: c_double,
}

/// Opaque calibrated-coefficients handle.
pub struct RpCalibration {
    inner: rotor_prognosis::metrics::Calibration,
}

fn guard(f: impl FnOnce() -> RpStatus) -> RpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => RpStatus::RpStatusInternal,
    }
}

fn make_layout(n1: c_ulonglong, n2: c_ulonglong, n3: c_ulonglong) -> Result<LoopLayout, RpStatus> {
    LoopLayout::new(n1 as usize, n2 as usize, n3 as usize)
        .map_err(|_| RpStatus::RpStatusDegenerateLayout)
}

fn make_weights(w1: c_double, w2: c_double, w3: c_double) -> Result<Weights, RpStatus> {
    Weights::new(w1, w2, w3).map_err(|_| RpStatus::RpStatusInvalidArgument)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Human-readable description of a status code (static string).
#[no_mangle]
pub extern "C" fn rp_status_message(status: RpStatus) -> *const c_char {
    let message: &'static str = match status {
        RpStatus::RpStatusOk => "ok\0",
        RpStatus::RpStatusNullPointer => "null pointer argument\0",
        RpStatus::RpStatusInvalidArgument => "invalid argument\0",
        RpStatus::RpStatusDegenerateLayout => "degenerate loop layout\0",
        RpStatus::RpStatusInfeasibleCalibration => "infeasible calibration\0",
        RpStatus::RpStatusLengthMismatch => "length mismatch\0",
        RpStatus::RpStatusInvalidWave => "invalid wave\0",
        RpStatus::RpStatusInternal => "internal error\0",
    };
    message.as_ptr() as *const c_char
}

/// Calibrate penalty coefficients for a loop layout and score weights.
///
/// # Safety
/// `out` must point to a writable handle slot. The returned handle must be
/// released with [`rp_calibration_free`].
#[no_mangle]
pub unsafe extern "C" fn rp_calibration_new(
    n1: c_ulonglong,
    n2: c_ulonglong,
    n3: c_ulonglong,
    w1: c_double,
    w2: c_double,
    w3: c_double,
    out: *mut *mut RpCalibration,
) -> RpStatus {
    guard(|| {
        if out.is_null() {
            return RpStatus::RpStatusNullPointer;
        }
        let layout = match make_layout(n1, n2, n3) {
            Ok(l) => l,
            Err(s) => return s,
        };
        let weights = match make_weights(w1, w2, w3) {
            Ok(w) => w,
            Err(s) => return s,
        };
        match calibrate(layout, weights) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(RpCalibration { inner })) };
                RpStatus::RpStatusOk
            }
            Err(_) => RpStatus::RpStatusInfeasibleCalibration,
        }
    })
}

/// Release a calibration handle. Null is accepted and ignored.
///
/// # Safety
/// `handle` must be null or a pointer previously returned by
/// [`rp_calibration_new`]; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rp_calibration_free(handle: *mut RpCalibration) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Read the calibrated coefficients out of a handle. `feasible` is 1 when
/// `beta >= 0` and `gamma >= 0` (so `S` stays in `[0, 1]`), else 0.
///
/// # Safety
/// `handle` must be a live handle from [`rp_calibration_new`]; output
/// pointers may be null to skip a field.
#[no_mangle]
pub unsafe extern "C" fn rp_calibration_params(
    handle: *const RpCalibration,
    alpha: *mut c_double,
    beta: *mut c_double,
    gamma: *mut c_double,
    feasible: *mut i32,
) -> RpStatus {
    guard(|| {
        if handle.is_null() {
            return RpStatus::RpStatusNullPointer;
        }
        let calibration = unsafe { &(*handle).inner };
        if !alpha.is_null() {
            unsafe { *alpha = calibration.alpha() };
        }
        if !beta.is_null() {
            unsafe { *beta = calibration.beta() };
        }
        if !gamma.is_null() {
            unsafe { *gamma = calibration.gamma() };
        }
        if !feasible.is_null() {
            unsafe { *feasible = i32::from(calibration.is_feasible()) };
        }
        RpStatus::RpStatusOk
    })
}

/// Time-weighted accuracy `S` of a prediction sequence under a calibration.
/// The sequence length must equal the calibrated layout's total.
///
/// # Safety
/// `predicted` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_s_score(
    handle: *const RpCalibration,
    predicted: *const u8,
    len: c_ulonglong,
    out: *mut c_double,
) -> RpStatus {
    guard(|| {
        if handle.is_null() || predicted.is_null() || out.is_null() {
            return RpStatus::RpStatusNullPointer;
        }
        let calibration = unsafe { &(*handle).inner };
        let states = unsafe { std::slice::from_raw_parts(predicted, len as usize) };
        if states.len() != calibration.layout().total() {
            return RpStatus::RpStatusLengthMismatch;
        }
        let series = match PredictionSeries::new(states.to_vec(), calibration.layout()) {
            Ok(s) => s,
            Err(_) => return RpStatus::RpStatusInvalidArgument,
        };
        match s_score(&series, calibration) {
            Ok(s) => {
                unsafe { *out = s };
                RpStatus::RpStatusOk
            }
            Err(_) => RpStatus::RpStatusInternal,
        }
    })
}

/// Full report (accuracy, S, C, C1..C3) for a prediction sequence over the
/// layout `(n1, n2, n3)` with the standard 0.2/0.3/0.5 weights.
///
/// # Safety
/// `predicted` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_score_series(
    predicted: *const u8,
    len: c_ulonglong,
    n1: c_ulonglong,
    n2: c_ulonglong,
    n3: c_ulonglong,
    out: *mut RpOpaiReport,
) -> RpStatus {
    guard(|| {
        if predicted.is_null() || out.is_null() {
            return RpStatus::RpStatusNullPointer;
        }
        let layout = match make_layout(n1, n2, n3) {
            Ok(l) => l,
            Err(s) => return s,
        };
        let states = unsafe { std::slice::from_raw_parts(predicted, len as usize) };
        if states.len() != layout.total() {
            return RpStatus::RpStatusLengthMismatch;
        }
        let series = match PredictionSeries::new(states.to_vec(), layout) {
            Ok(s) => s,
            Err(_) => return RpStatus::RpStatusInvalidArgument,
        };
        let calibration = match calibrate(layout, Weights::default()) {
            Ok(c) => c,
            Err(_) => return RpStatus::RpStatusInfeasibleCalibration,
        };
        let s = match s_score(&series, &calibration) {
            Ok(s) => s,
            Err(_) => return RpStatus::RpStatusInternal,
        };
        let consistency = match c_score(series.predicted(), layout) {
            Ok(c) => c,
            Err(_) => return RpStatus::RpStatusInternal,
        };
        unsafe {
            *out = RpOpaiReport {
                accuracy: accuracy(&series),
                s,
                c: consistency.c,
                c1: consistency.c1,
                c2: consistency.c2,
                c3: consistency.c3,
            };
        }
        RpStatus::RpStatusOk
    })
}

/// Consistency of one undivided prediction sequence
/// (`1 - mean squared difference of consecutive predictions`).
///
/// # Safety
/// `predicted` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_sequence_consistency(
    predicted: *const u8,
    len: c_ulonglong,
    out: *mut c_double,
) -> RpStatus {
    guard(|| {
        if predicted.is_null() || out.is_null() {
            return RpStatus::RpStatusNullPointer;
        }
        let states = unsafe { std::slice::from_raw_parts(predicted, len as usize) };
        if states.iter().any(|s| *s > 2) {
            return RpStatus::RpStatusInvalidArgument;
        }
        unsafe { *out = sequence_consistency(states) };
        RpStatus::RpStatusOk
    })
}

/// Wavelet-denoise a wave in place semantics: reads `len` samples from
/// `samples` and writes the denoised wave to `out` (same length). The length
/// must be a multiple of 16 and at least 16.
///
/// # Safety
/// `samples` must point to `len` readable doubles and `out` to `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rp_wave_denoise(
    samples: *const c_double,
    len: c_ulonglong,
    out: *mut c_double,
) -> RpStatus {
    guard(|| {
        if samples.is_null() || out.is_null() {
            return RpStatus::RpStatusNullPointer;
        }
        let input = unsafe { std::slice::from_raw_parts(samples, len as usize) };
        let wave = match Wave::new("ffi", 1, 0.0, input.to_vec()) {
            Ok(w) => w,
            Err(_) => return RpStatus::RpStatusInvalidWave,
        };
        match wavelet_denoise(&wave) {
            Ok(denoised) => {
                let result = denoised.samples();
                unsafe {
                    std::ptr::copy_nonoverlapping(result.as_ptr(), out, result.len());
                }
                RpStatus::RpStatusOk
            }
            Err(_) => RpStatus::RpStatusInvalidWave,
        }
    })
}

/// Extract the 24 per-sensor features of one wave into `out` (24 doubles:
/// 13 time-domain then 11 time-frequency, in the library's canonical order).
/// Features whose formula is undefined for this wave are written as NaN.
///
/// # Safety
/// `samples` must point to `len` readable doubles and `out` to 24 writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn rp_wave_features(
    samples: *const c_double,
    len: c_ulonglong,
    out: *mut c_double,
) -> RpStatus {
    guard(|| {
        if samples.is_null() || out.is_null() {
            return RpStatus::RpStatusNullPointer;
        }
        let input = unsafe { std::slice::from_raw_parts(samples, len as usize) };
        let wave = match Wave::new("ffi", 1, 0.0, input.to_vec()) {
            Ok(w) => w,
            Err(_) => return RpStatus::RpStatusInvalidWave,
        };
        let time = time_domain_features_partial(&wave);
        let freq = match freq_domain_features_partial(&wave) {
            Ok(f) => f,
            Err(_) => return RpStatus::RpStatusInvalidWave,
        };
        let values = unsafe { std::slice::from_raw_parts_mut(out, PER_SENSOR_FEATURES) };
        for (slot, value) in values.iter_mut().zip(time.iter().chain(freq.iter())) {
            *slot = value.unwrap_or(f64::NAN);
        }
        RpStatus::RpStatusOk
    })
}

/// Name of per-sensor feature `index` (0..24) as a static string, or null
/// when out of range.
#[no_mangle]
pub extern "C" fn rp_feature_name(index: c_ulonglong) -> *const c_char {
    const NAMES: [&str; PER_SENSOR_FEATURES] = [
        "Max\0",
        "Min\0",
        "Mean\0",
        "Peak_Peak\0",
        "Var\0",
        "Std\0",
        "Rms\0",
        "Skew\0",
        "Kurt\0",
        "Shape_factor\0",
        "Crest_factor\0",
        "Pulse_factor\0",
        "Clearance_factor\0",
        "FFT_max\0",
        "FFT_mean\0",
        "FFT_std\0",
        "Energy_1\0",
        "Energy_2\0",
        "Energy_3\0",
        "Energy_4\0",
        "Energy_1_por\0",
        "Energy_2_por\0",
        "Energy_3_por\0",
        "Energy_4_por\0",
    ];
    // The static table mirrors the canonical name lists; a unit test checks
    // they stay in sync.
    let _ = (&TIME_DOMAIN_NAMES, &FREQ_DOMAIN_NAMES);
    match NAMES.get(index as usize) {
        Some(name) => name.as_ptr() as *const c_char,
        None => std::ptr::null(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_name_table_matches_library_order() {
        for (i, expected) in TIME_DOMAIN_NAMES.iter().chain(FREQ_DOMAIN_NAMES.iter()).enumerate() {
            let ptr = rp_feature_name(i as c_ulonglong);
            let name = unsafe { std::ffi::CStr::from_ptr(ptr) }.to_str().unwrap();
            assert_eq!(&name, expected);
        }
        assert!(rp_feature_name(PER_SENSOR_FEATURES as c_ulonglong).is_null());
    }
}
