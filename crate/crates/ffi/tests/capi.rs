//! Exercises the C ABI exactly as a foreign caller would: raw pointers,
//! status codes, and opaque handles.

use std::ffi::CStr;
use std::ptr;

use rotor_prognosis_ffi::*;

fn status_of(code: RpStatus) -> &'static str {
    unsafe { CStr::from_ptr(rp_status_message(code)) }
        .to_str()
        .unwrap()
}

#[test]
fn version_and_messages_are_static_strings() {
    let version = unsafe { CStr::from_ptr(rp_version()) }.to_str().unwrap();
    assert!(!version.is_empty());
    assert_eq!(status_of(RpStatus::RpStatusOk), "ok");
    assert_eq!(status_of(RpStatus::RpStatusDegenerateLayout), "degenerate loop layout");
}

#[test]
fn calibration_handle_roundtrip() {
    let mut handle: *mut RpCalibration = ptr::null_mut();
    let status =
        unsafe { rp_calibration_new(4, 3, 2, 0.2, 0.3, 0.5, &mut handle) };
    assert_eq!(status, RpStatus::RpStatusOk);
    assert!(!handle.is_null());

    let (mut alpha, mut beta, mut gamma, mut feasible) = (0.0, 0.0, 0.0, 0);
    let status = unsafe {
        rp_calibration_params(handle, &mut alpha, &mut beta, &mut gamma, &mut feasible)
    };
    assert_eq!(status, RpStatus::RpStatusOk);
    assert!((alpha - 0.0360674).abs() < 1e-6);
    assert!((beta - 0.0837166).abs() < 1e-6);
    assert!((gamma - 0.0432112).abs() < 1e-6);
    assert_eq!(feasible, 1);

    // Single error at the last high-risk sample.
    let predicted: [u8; 9] = [0, 0, 0, 0, 1, 1, 1, 2, 1];
    let mut s = 0.0;
    let status = unsafe { rp_s_score(handle, predicted.as_ptr(), 9, &mut s) };
    assert_eq!(status, RpStatus::RpStatusOk);
    assert!((s - 0.685183).abs() < 1e-6);

    unsafe { rp_calibration_free(handle) };
    unsafe { rp_calibration_free(ptr::null_mut()) }; // null is a no-op
}

#[test]
fn degenerate_layout_and_null_pointers_are_reported() {
    let mut handle: *mut RpCalibration = ptr::null_mut();
    assert_eq!(
        unsafe { rp_calibration_new(1, 3, 2, 0.2, 0.3, 0.5, &mut handle) },
        RpStatus::RpStatusDegenerateLayout
    );
    assert_eq!(
        unsafe { rp_calibration_new(4, 3, 2, 0.2, 0.3, 0.5, ptr::null_mut()) },
        RpStatus::RpStatusNullPointer
    );
    let mut out = 0.0;
    assert_eq!(
        unsafe { rp_sequence_consistency(ptr::null(), 3, &mut out) },
        RpStatus::RpStatusNullPointer
    );
}

#[test]
fn score_series_full_report() {
    let predicted: [u8; 9] = [0, 0, 1, 0, 1, 1, 2, 2, 2];
    let mut report = RpOpaiReport {
        accuracy: 0.0,
        s: 0.0,
        c: 0.0,
        c1: 0.0,
        c2: 0.0,
        c3: 0.0,
    };
    let status = unsafe { rp_score_series(predicted.as_ptr(), 9, 4, 3, 2, &mut report) };
    assert_eq!(status, RpStatus::RpStatusOk);
    assert!((report.c1 - 1.0 / 3.0).abs() < 1e-12);
    assert!((report.c2 - 0.5).abs() < 1e-12);
    assert!((report.c3 - 1.0).abs() < 1e-12);
    assert!((report.c - 0.6111111111111112).abs() < 1e-12);
    assert!(report.accuracy > 0.0 && report.s <= 1.0);

    // Length mismatch is caught before any scoring.
    assert_eq!(
        unsafe { rp_score_series(predicted.as_ptr(), 8, 4, 3, 2, &mut report) },
        RpStatus::RpStatusLengthMismatch
    );
    // States outside {0, 1, 2} are rejected.
    let bad: [u8; 9] = [0, 0, 0, 0, 1, 1, 1, 2, 9];
    assert_eq!(
        unsafe { rp_score_series(bad.as_ptr(), 9, 4, 3, 2, &mut report) },
        RpStatus::RpStatusInvalidArgument
    );
}

#[test]
fn sequence_consistency_matches_flicker_math() {
    let flicker: [u8; 4] = [0, 2, 0, 2];
    let mut out = 0.0;
    assert_eq!(
        unsafe { rp_sequence_consistency(flicker.as_ptr(), 4, &mut out) },
        RpStatus::RpStatusOk
    );
    assert_eq!(out, -3.0);
}

#[test]
fn denoise_and_features_through_the_abi() {
    let len = 1024usize;
    let mut noisy = Vec::with_capacity(len);
    for i in 0..len {
        let clean = 10.0 * (2.0 * std::f64::consts::PI * 8.0 * i as f64 / len as f64).sin();
        // Deterministic pseudo-noise.
        let jitter = 0.5 * (((i * 2654435761) % 1000) as f64 / 500.0 - 1.0);
        noisy.push(clean + jitter);
    }
    let mut denoised = vec![0.0; len];
    assert_eq!(
        unsafe { rp_wave_denoise(noisy.as_ptr(), len as u64, denoised.as_mut_ptr()) },
        RpStatus::RpStatusOk
    );
    assert!(denoised.iter().all(|v| v.is_finite()));

    let mut features = vec![0.0; 24];
    assert_eq!(
        unsafe { rp_wave_features(noisy.as_ptr(), len as u64, features.as_mut_ptr()) },
        RpStatus::RpStatusOk
    );
    // Rms (index 6) of a 10-amplitude sine is near 10/sqrt(2).
    assert!((features[6] - 10.0 / std::f64::consts::SQRT_2).abs() < 0.2);
    let name = unsafe { CStr::from_ptr(rp_feature_name(6)) }.to_str().unwrap();
    assert_eq!(name, "Rms");

    // Indivisible lengths are rejected.
    assert_eq!(
        unsafe { rp_wave_denoise(noisy.as_ptr(), 1000, denoised.as_mut_ptr()) },
        RpStatus::RpStatusInvalidWave
    );
}
