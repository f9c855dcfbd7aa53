use std::ffi::{CStr, CString};
use std::ptr;

use acfid_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(acfid_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn two_level_round_trip() {
    unsafe {
        let mut spec = ptr::null_mut();
        assert_eq!(acfid_spec_two_level(1.0, &mut spec), AcfidStatus::Ok);
        assert_eq!(acfid_spec_dim(spec), 2);

        let mut s = 0.0;
        assert_eq!(acfid_fidelity_change(spec, -5e-6, 1e-5, 0, &mut s), AcfidStatus::Ok);
        assert!((s - 0.125).abs() < 1e-6, "{s}");

        let mut sw = ptr::null_mut();
        assert_eq!(acfid_sweep(spec, -5.0, 5.0, 2001, 0.0, &mut sw), AcfidStatus::Ok);
        assert_eq!(acfid_sweep_points(sw), 2001);
        assert_eq!(acfid_sweep_levels(sw), 2);
        let mut row = vec![0.0; 2001];
        assert_eq!(acfid_sweep_s_row(sw, 0, row.as_mut_ptr(), row.len()), AcfidStatus::Ok);
        assert!((row[1000] - 0.125).abs() < 1e-8);
        assert_eq!(acfid_sweep_s_row(sw, 0, row.as_mut_ptr(), 10), AcfidStatus::InvalidArgument);
        assert_eq!(acfid_sweep_s_row(sw, 2, row.as_mut_ptr(), row.len()), AcfidStatus::InvalidArgument);

        let mut det = ptr::null_mut();
        assert_eq!(acfid_detect(spec, sw, 0.0, &mut det), AcfidStatus::Ok);
        assert_eq!(acfid_detection_len(det), 1);
        let mut ev = std::mem::zeroed::<AcfidEvent>();
        assert_eq!(acfid_detection_event(det, 0, &mut ev), AcfidStatus::Ok);
        assert_eq!((ev.level_lo, ev.level_hi, ev.paired), (0, 1, 1));
        assert!((ev.c_est - 2.0).abs() < 0.01);
        assert_eq!(acfid_detection_event(det, 1, &mut ev), AcfidStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));

        let mut json = ptr::null_mut();
        assert_eq!(acfid_detection_to_json(det, &mut json), AcfidStatus::Ok);
        assert!(CStr::from_ptr(json).to_str().unwrap().contains("\"c_est\""));
        acfid_string_free(json);

        acfid_detection_free(det);
        acfid_sweep_free(sw);
        acfid_spec_free(spec);
    }
}

#[test]
fn spec_json_round_trip() {
    unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(acfid_spec_triple(0.0, 2.0, 3.0, &mut a), AcfidStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(acfid_spec_to_json(a, &mut text), AcfidStatus::Ok);
        let mut b = ptr::null_mut();
        assert_eq!(acfid_spec_from_json(text, &mut b), AcfidStatus::Ok);
        assert_eq!(acfid_spec_dim(b), 3);
        acfid_string_free(text);
        acfid_spec_free(a);
        acfid_spec_free(b);

        let bad = CString::new("{\"kind\": 5}").unwrap();
        let mut c = ptr::null_mut();
        assert_eq!(acfid_spec_from_json(bad.as_ptr(), &mut c), AcfidStatus::Parse);
        assert!(c.is_null());
        assert!(!last_error().is_empty());
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut spec = ptr::null_mut();
        assert_eq!(acfid_spec_two_level(-1.0, &mut spec), AcfidStatus::InvalidArgument);
        assert!(last_error().contains("coupling"));
        assert_eq!(acfid_spec_two_level(1.0, ptr::null_mut()), AcfidStatus::NullPointer);
        assert_eq!(acfid_spec_dim(ptr::null()), 0);
        let mut s = 0.0;
        assert_eq!(acfid_fidelity_change(ptr::null(), 0.0, 1e-3, 0, &mut s), AcfidStatus::NullPointer);

        let m = [1.0, 2.0, 0.0, 1.0];
        let mut lp = ptr::null_mut();
        assert_eq!(acfid_spec_linear_pair(2, m.as_ptr(), m.as_ptr(), &mut lp), AcfidStatus::InvalidArgument);

        let mut g = 0.0;
        assert_eq!(acfid_fit_gamma([1.0; 10].as_ptr(), 10, &mut g), AcfidStatus::Numerical);
        // erf(1/sqrt(pi))
        assert!((acfid_goe_width_cdf(1.0) - 0.575062516316638).abs() < 1e-12);
        assert!(acfid_goe_width_cdf(-1.0).is_nan());
    }
}

#[test]
fn goe_and_linear_pair() {
    unsafe {
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(acfid_spec_goe_interp(8, 1, 2, &mut a), AcfidStatus::Ok);
        assert_eq!(acfid_spec_goe_interp(8, 1, 2, &mut b), AcfidStatus::Ok);
        let (mut sa, mut sb) = (0.0, 0.0);
        acfid_fidelity_change(a, 0.3, 1e-4, 3, &mut sa);
        acfid_fidelity_change(b, 0.3, 1e-4, 3, &mut sb);
        assert_eq!(sa, sb);
        acfid_spec_free(a);
        acfid_spec_free(b);

        let h1 = [0.0, 1.0, 1.0, 0.0];
        let h2 = [1.0, 0.0, 0.0, -1.0];
        let mut lp = ptr::null_mut();
        assert_eq!(acfid_spec_linear_pair(2, h1.as_ptr(), h2.as_ptr(), &mut lp), AcfidStatus::Ok);
        let mut s = 0.0;
        assert_eq!(acfid_fidelity_change(lp, -5e-6, 1e-5, 1, &mut s), AcfidStatus::Ok);
        assert!((s - 0.125).abs() < 1e-6);
        acfid_spec_free(lp);
        assert!(CStr::from_ptr(acfid_version()).to_str().unwrap().starts_with("0."));
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let out = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(format!("{dir}/include"))
        .arg(format!("{dir}/tests/smoke.c"))
        .output();
    match out {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => panic!("no C compiler available: {e}"),
    }
}
