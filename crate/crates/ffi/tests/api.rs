use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mot_ffi::*;

fn measure(atoms: &[(f64, f64)]) -> *mut MotMeasure {
    let xs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    let ms: Vec<f64> = atoms.iter().map(|a| a.1).collect();
    let mut out = ptr::null_mut();
    let status = unsafe { mot_measure_new(xs.as_ptr(), ms.as_ptr(), xs.len(), &mut out) };
    assert_eq!(status, MotStatus::Ok);
    out
}

fn last_error() -> String {
    let p = mot_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn sweep_and_lp_agree() {
    let mu = measure(&[(-0.5, 0.5), (0.5, 0.5)]);
    let nu = measure(&[(-2.0, 0.25), (-1.0, 0.25), (1.0, 0.25), (2.0, 0.25)]);
    unsafe {
        assert_eq!(mot_measure_len(mu), 2);
        assert!((mot_measure_total_mass(nu) - 1.0).abs() < 1e-15);

        let mut report = MotOrderReport::default();
        assert_eq!(mot_convex_order_check(mu, nu, 1e-12, &mut report), MotStatus::Ok);
        assert!(report.in_order);

        let mut sweep = ptr::null_mut();
        assert_eq!(mot_solve_sweep(mu, nu, f64::NAN, f64::NAN, 1e-9, &mut sweep), MotStatus::Ok);
        let mut lp = ptr::null_mut();
        assert_eq!(mot_solve_lp(mu, nu, 0.5, false, &mut lp), MotStatus::Ok);
        assert!((mot_coupling_cost(sweep, 0.5) - mot_coupling_cost(lp, 0.5)).abs() < 1e-9);

        let mut total = 0.0;
        for i in 0..mot_coupling_len(sweep) {
            let mut e = MotEntry::default();
            assert_eq!(mot_coupling_entry(sweep, i, &mut e), MotStatus::Ok);
            total += e.mass;
        }
        assert!((total - 1.0).abs() < 1e-12);
        let mut e = MotEntry::default();
        assert_eq!(mot_coupling_entry(sweep, 999, &mut e), MotStatus::InvalidInput);

        assert_eq!(mot_coupling_map_count(sweep), 2);
        assert_eq!(mot_coupling_map_count(lp), 0);
        let mut row = MotMapRow::default();
        assert_eq!(mot_coupling_map_row(sweep, 0, &mut row), MotStatus::Ok);
        assert_eq!(row.x, -0.5);
        assert!(row.s < -0.5 && row.t > 0.5);

        let json = mot_coupling_to_json(sweep);
        assert!(!json.is_null());
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        mot_string_free(json);
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(parsed["entries"].is_array());

        mot_coupling_free(sweep);
        mot_coupling_free(lp);
        mot_measure_free(mu);
        mot_measure_free(nu);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let wide = measure(&[(-2.0, 0.5), (2.0, 0.5)]);
    let narrow = measure(&[(0.0, 1.0)]);
    unsafe {
        let mut report = MotOrderReport::default();
        assert_eq!(mot_convex_order_check(wide, narrow, 1e-12, &mut report), MotStatus::Ok);
        assert!(!report.in_order);

        let mut c = ptr::null_mut();
        let status = mot_solve_sweep(wide, narrow, f64::NAN, f64::NAN, 1e-9, &mut c);
        assert_ne!(status, MotStatus::Ok);
        assert!(c.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(mot_solve_lp(narrow, wide, -1.0, false, &mut c), MotStatus::InvalidInput);
        assert_eq!(mot_solve_lp(ptr::null(), wide, 0.5, false, &mut c), MotStatus::NullPointer);
        assert!(last_error().contains("null"));

        let xs = [0.0];
        let ms = [-1.0];
        let mut m = ptr::null_mut();
        assert_eq!(mot_measure_new(xs.as_ptr(), ms.as_ptr(), 1, &mut m), MotStatus::InvalidInput);
        assert!(m.is_null());

        assert_eq!(mot_measure_len(ptr::null()), 0);
        assert!(mot_measure_total_mass(ptr::null()).is_nan());
        assert!(mot_coupling_cost(ptr::null(), 0.5).is_nan());
        mot_measure_free(ptr::null_mut());
        mot_coupling_free(ptr::null_mut());
        mot_string_free(ptr::null_mut());

        mot_measure_free(wide);
        mot_measure_free(narrow);
    }
}

#[test]
fn swap_gain_and_deformation_curve() {
    unsafe {
        let mut g = 0.0;
        assert_eq!(mot_swap_gain(0.0, -2.0, 2.0, 0.5, 1.0, 0.5, &mut g), MotStatus::Ok);
        let direct = mot_core::verify::swap_gain(0.0, -2.0, 2.0, 0.5, 1.0, 0.5).unwrap();
        assert_eq!(g, direct);
        assert_eq!(mot_swap_gain(0.0, -2.0, 2.0, 0.5, 1.0, 2.0, &mut g), MotStatus::InvalidInput);

        let n = 21;
        let mut t = vec![0.0; n];
        let mut c = vec![0.0; n];
        assert_eq!(
            mot_deformation_curve(0.7, 1.0, 0.3, 0.5, n, t.as_mut_ptr(), c.as_mut_ptr()),
            MotStatus::Ok
        );
        assert_eq!(t[0], 0.0);
        assert_eq!(t[n - 1], 1.0);
        assert!(c.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(
            mot_deformation_curve(0.7, 1.0, 3.0, 0.5, n, t.as_mut_ptr(), c.as_mut_ptr()),
            MotStatus::InvalidInput
        );
    }
}

#[test]
fn header_compiles_as_c() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/mot.h");
    assert!(header.exists());
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("cc not available, skipping header check");
        return;
    };
    assert!(status.success());
}
