use std::ffi::CStr;
use std::ptr;

use supercode_ffi::*;

fn last_error() -> String {
    let p = supercode_last_error();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn params(rho: f64, n: usize) -> *mut SupercodeParams {
    let mut p = ptr::null_mut();
    let st = unsafe { supercode_params_new(1.0, 1.0, 1.0, rho, n, &mut p) };
    assert_eq!(st, SupercodeStatus::Ok);
    p
}

#[test]
fn scalar_theory() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(supercode_capacity(3.0, 1.0, &mut v), SupercodeStatus::Ok);
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(supercode_optimal_distortion(1.0, 3.0, 1.0, &mut v), SupercodeStatus::Ok);
        assert!((v - 0.25).abs() < 1e-12);
        assert_eq!(supercode_distortion_rate(2.0, 1.0, &mut v), SupercodeStatus::Ok);
        assert!((v - 0.5).abs() < 1e-12);
    }
    assert!(supercode_last_error().is_null());
}

#[test]
fn errors_map_to_status_codes() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(supercode_capacity(-1.0, 1.0, &mut v), SupercodeStatus::InvalidParameter);
        assert!(last_error().contains("power") || last_error().contains("invalid"));
        assert_eq!(
            supercode_capacity(1.0, 1.0, ptr::null_mut()),
            SupercodeStatus::NullPointer
        );
        assert!(last_error().contains("null"));

        let mut p = ptr::null_mut();
        assert_eq!(
            supercode_params_new(1.0, 1.0, 1.0, 0.5, 8, &mut p),
            SupercodeStatus::AboveCapacity
        );
        assert!(p.is_null());
        assert_eq!(
            supercode_params_new(1.0, 1.0, 1.0, 0.45, 96, &mut p),
            SupercodeStatus::Resource
        );
    }
}

#[test]
fn coefficients_at_zero_rate() {
    let mut p = ptr::null_mut();
    let mut c = SupercodeCoefficients::default();
    unsafe {
        assert_eq!(supercode_params_new(1.0, 3.0, 1.0, 0.0, 4, &mut p), SupercodeStatus::Ok);
        assert_eq!(supercode_coefficients(p, &mut c), SupercodeStatus::Ok);
        supercode_params_free(p);
    }
    assert!((c.alpha - 3f64.sqrt()).abs() < 1e-9);
    assert!((c.beta - (2.0 - 3f64.sqrt())).abs() < 1e-9);
    assert_eq!(c.radius2, 0.0);
}

#[test]
fn rejected_setter_leaves_handle_unchanged() {
    let p = params(0.25, 16);
    unsafe {
        assert_eq!(supercode_params_set_delta(p, 1.5), SupercodeStatus::InvalidParameter);
        assert_eq!(supercode_params_set_delta(p, 0.05), SupercodeStatus::Ok);
        let mut c = SupercodeCoefficients::default();
        assert_eq!(supercode_coefficients(p, &mut c), SupercodeStatus::Ok);
        let expect = (1.0 - 2f64.powf(-0.5)) * 0.95f64.powi(2);
        assert!((c.radius2 - expect).abs() < 1e-12);
        supercode_params_free(p);
    }
}

#[test]
fn codebook_quantize_decode_round_trip() {
    let p = params(0.25, 16);
    unsafe {
        assert_eq!(supercode_params_set_seed(p, 11), SupercodeStatus::Ok);
        let mut cb = ptr::null_mut();
        assert_eq!(supercode_codebook_build(p, &mut cb), SupercodeStatus::Ok);
        assert_eq!(supercode_codebook_len(cb), 16);
        assert_eq!(supercode_codebook_dim(cb), 16);
        assert_eq!(supercode_codebook_len(ptr::null()), 0);

        let mut u = vec![0.0; 16];
        assert_eq!(
            supercode_codebook_codeword(cb, 3, u.as_mut_ptr(), 16),
            SupercodeStatus::Ok
        );
        let mut idx = usize::MAX;
        assert_eq!(supercode_decode(cb, u.as_ptr(), 16, &mut idx), SupercodeStatus::Ok);
        assert_eq!(idx, 3);
        assert_eq!(supercode_decode(cb, u.as_ptr(), 15, &mut idx), SupercodeStatus::Usage);
        assert_eq!(
            supercode_codebook_codeword(cb, 16, u.as_mut_ptr(), 16),
            SupercodeStatus::Usage
        );

        // a codeword quantizes to itself under a tight band at cosine 1
        let mut q = 0i64;
        assert_eq!(
            supercode_quantize(cb, u.as_ptr(), 16, 1.0, 1e-9, 0, &mut q),
            SupercodeStatus::Ok
        );
        assert_eq!(q, 3);
        // nothing is exactly orthogonal
        assert_eq!(
            supercode_quantize(cb, u.as_ptr(), 16, 0.0, 0.0, 0, &mut q),
            SupercodeStatus::Ok
        );
        assert_eq!(q, SUPERCODE_NO_CODEWORD);
        let zero = [0.0; 16];
        assert_eq!(
            supercode_quantize(cb, zero.as_ptr(), 16, 0.5, 0.1, 0, &mut q),
            SupercodeStatus::Domain
        );

        supercode_codebook_free(cb);
        supercode_params_free(p);
    }
}

#[test]
fn run_summary_and_report() {
    let p = params(0.0, 8);
    unsafe {
        let mut s = SupercodeRunSummary::default();
        let mut json = ptr::null_mut();
        assert_eq!(
            supercode_run(
                p,
                2000,
                SUPERCODE_MODE_UNCODED,
                SUPERCODE_POLICY_FIXED,
                &mut s,
                &mut json
            ),
            SupercodeStatus::Ok
        );
        assert_eq!(s.num_trials, 2000);
        assert_eq!(s.codebook_size, 1);
        assert!((s.mean_distortion - 0.5).abs() < 4.0 * s.stderr_distortion + 1e-3);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        supercode_string_free(json);
        assert!(text.contains("\"num_trials\": 2000"), "{text}");
        assert!(!text.contains("generated_at_unix"));

        assert_eq!(
            supercode_run(p, 10, 7, SUPERCODE_POLICY_FIXED, &mut s, ptr::null_mut()),
            SupercodeStatus::Usage
        );
        assert_eq!(
            supercode_run(
                p,
                0,
                SUPERCODE_MODE_FULL,
                SUPERCODE_POLICY_FIXED,
                &mut s,
                ptr::null_mut()
            ),
            SupercodeStatus::InvalidParameter
        );
        supercode_params_free(p);
    }
}

#[test]
fn string_free_accepts_null() {
    unsafe { supercode_string_free(ptr::null_mut()) };
}
