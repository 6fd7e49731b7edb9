use std::f64::consts::PI;
use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use bessel_dt_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bdt_last_error_message()) }.to_string_lossy().into_owned()
}

fn kernel(lambda: f64) -> *mut BdtKernel {
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { bdt_kernel_new(lambda, &mut k) }, BdtStatus::Ok);
    assert!(!k.is_null());
    k
}

fn closed_form(t: f64, x: f64, y: f64) -> f64 {
    4.0 * t / PI / (((x - y).powi(2) + t * t) * ((x + y).powi(2) + t * t))
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(bdt_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn kernel_value_matches_closed_form() {
    let k = kernel(1.0);
    let mut out = 0.0;
    assert_eq!(unsafe { bdt_kernel_value(k, 0.7, 1.3, 0.4, &mut out) }, BdtStatus::Ok);
    let c = closed_form(0.7, 1.3, 0.4);
    assert!((out - c).abs() <= 1e-10 * c);
    let mut jet = BdtJet::default();
    assert_eq!(unsafe { bdt_kernel_jet(k, 0.7, 1.3, 0.4, &mut jet) }, BdtStatus::Ok);
    assert!((jet.value - c).abs() <= 1e-10 * c);
    let h = 1e-5;
    let fd = (closed_form(0.7 + h, 1.3, 0.4) - closed_form(0.7 - h, 1.3, 0.4)) / (2.0 * h);
    assert!((jet.dt - fd).abs() <= 1e-6 * fd.abs());
    unsafe { bdt_kernel_free(k) };
}

#[test]
fn errors_map_to_codes_and_messages() {
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { bdt_kernel_new(-1.0, &mut k) }, BdtStatus::InvalidParameter);
    assert!(k.is_null());
    assert!(!last_error().is_empty());

    let k = kernel(1.0);
    let mut out = 0.0;
    assert_eq!(unsafe { bdt_kernel_value(k, -1.0, 1.0, 1.0, &mut out) }, BdtStatus::InvalidParameter);
    assert_eq!(unsafe { bdt_kernel_value(ptr::null(), 1.0, 1.0, 1.0, &mut out) }, BdtStatus::NullPointer);
    assert!(last_error().contains("kernel"));
    assert_eq!(unsafe { bdt_kernel_value(k, 1.0, 1.0, 1.0, &mut out) }, BdtStatus::Ok);
    assert_eq!(last_error(), "");
    assert_eq!(unsafe { bdt_kernel_value(k, 1.0, 1.0, 1.0, ptr::null_mut()) }, BdtStatus::NullPointer);

    let mut s = ptr::null_mut();
    let (a, v) = ([1.0, 0.5, 4.0], [1.0, 1.0]);
    assert_eq!(unsafe { bdt_setup_new(0, a.as_ptr(), v.as_ptr(), 3, 2.0, &mut s) }, BdtStatus::NotIncreasing);
    assert!(s.is_null());
    unsafe {
        bdt_kernel_free(k);
        bdt_kernel_free(ptr::null_mut());
        bdt_function_free(ptr::null_mut());
        bdt_setup_free(ptr::null_mut());
    }
}

#[test]
fn transform_pipeline() {
    let k = kernel(1.0);
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { bdt_function_gaussian(1.0, 1.0, 0.3, &mut f) }, BdtStatus::Ok);
    let a: Vec<f64> = (-6..=6).map(|j| 2f64.powi(j)).collect();
    let ones = vec![1.0; a.len() - 1];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { bdt_setup_new(-6, a.as_ptr(), ones.as_ptr(), a.len(), 2.0, &mut s) }, BdtStatus::Ok);
    let xs = [0.25, 0.5, 1.0, 2.0, 4.0];
    let mut tn = [0.0; 5];
    let mut hi = [0.0; 5];
    let mut lo = [0.0; 5];
    unsafe {
        assert_eq!(bdt_apply_t_n(k, s, f, -4, 3, xs.as_ptr(), 5, tn.as_mut_ptr()), BdtStatus::Ok);
        assert_eq!(bdt_poisson_apply(k, f, 16.0, xs.as_ptr(), 5, hi.as_mut_ptr()), BdtStatus::Ok);
        assert_eq!(bdt_poisson_apply(k, f, 1.0 / 16.0, xs.as_ptr(), 5, lo.as_mut_ptr()), BdtStatus::Ok);
    }
    // coefficients all one: the sum telescopes
    for i in 0..5 {
        assert!((tn[i] - (hi[i] - lo[i])).abs() <= 1e-13);
    }
    let mut star = [0.0; 5];
    unsafe {
        assert_eq!(bdt_maximal_t_star(k, s, f, 4, xs.as_ptr(), 5, star.as_mut_ptr()), BdtStatus::Ok);
        assert_eq!(bdt_maximal_t_star(k, s, f, 9, xs.as_ptr(), 5, star.as_mut_ptr()), BdtStatus::WindowOutOfRange);
        assert_eq!(bdt_apply_t_n(k, s, f, 3, 3, xs.as_ptr(), 5, tn.as_mut_ptr()), BdtStatus::InvalidParameter);
    }
    for i in 0..5 {
        assert!(star[i] + 1e-15 >= (hi[i] - lo[i]).abs());
    }
    unsafe {
        bdt_setup_free(s);
        bdt_function_free(f);
        bdt_kernel_free(k);
    }
}

#[test]
fn sampled_input_matches_analytic() {
    let k = kernel(0.5);
    let nodes: Vec<f64> = (0..400).map(|i| 1e-3 * 1e6f64.powf(i as f64 / 399.0)).collect();
    let vals: Vec<f64> = nodes.iter().map(|x| (-0.5 * x * x).exp()).collect();
    let (mut g, mut sf) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(bdt_function_gaussian(1.0, 0.0, 1.0, &mut g), BdtStatus::Ok);
        assert_eq!(
            bdt_function_sampled(nodes.as_ptr(), vals.as_ptr(), 400, BdtTail::Zero, 0.0, &mut sf),
            BdtStatus::Ok
        );
    }
    let xs = [0.5, 1.0, 2.0];
    let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
    unsafe {
        assert_eq!(bdt_poisson_apply(k, g, 0.5, xs.as_ptr(), 3, a.as_mut_ptr()), BdtStatus::Ok);
        assert_eq!(bdt_poisson_apply(k, sf, 0.5, xs.as_ptr(), 3, b.as_mut_ptr()), BdtStatus::Ok);
    }
    for i in 0..3 {
        assert!((a[i] - b[i]).abs() <= 1e-6, "{} vs {}", a[i], b[i]);
    }
    unsafe {
        bdt_function_free(g);
        bdt_function_free(sf);
        bdt_kernel_free(k);
    }
}

#[test]
fn scalar_helpers() {
    let mut j = 0.0;
    // J_{1/2}(x) = sqrt(2/(pi x)) sin x
    assert_eq!(unsafe { bdt_bessel_j(0.5, 2.0, &mut j) }, BdtStatus::Ok);
    assert!((j - (2.0 / (PI * 2.0)).sqrt() * 2f64.sin()).abs() <= 1e-13);
    assert_eq!(unsafe { bdt_bessel_j(0.5, -1.0, &mut j) }, BdtStatus::Domain);
    let mut m = 0.0;
    // interval (0, 3) under x^2 dx
    assert_eq!(unsafe { bdt_measure_interval(1.0, 1.0, 2.0, &mut m) }, BdtStatus::Ok);
    assert!((m - 9.0).abs() <= 1e-12);
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { bdt_function_indicator(2.0, 1.0, 1.0, &mut f) }, BdtStatus::InvalidParameter);
    assert!(f.is_null());
}

#[test]
fn header_declares_the_api() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/bessel_dt.h")).unwrap();
    for name in [
        "bdt_version",
        "bdt_last_error_message",
        "bdt_kernel_new",
        "bdt_kernel_free",
        "bdt_kernel_value",
        "bdt_kernel_jet",
        "bdt_function_gaussian",
        "bdt_function_indicator",
        "bdt_function_sampled",
        "bdt_function_free",
        "bdt_setup_new",
        "bdt_setup_free",
        "bdt_poisson_apply",
        "bdt_apply_t_n",
        "bdt_maximal_t_star",
        "bdt_bessel_j",
        "bdt_measure_interval",
        "typedef struct BdtKernel BdtKernel;",
        "BDT_STATUS_OK = 0",
        "BDT_STATUS_PANIC = 11",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    // the header must be valid C on its own when a compiler is around
    if let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", "/dev/null", "-include"])
        .arg(dir.join("include/bessel_dt.h"))
        .status()
    {
        assert!(status.success());
    }
}
