use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use eqk_ffi::*;

fn norm(json: &str) -> *mut EqkNorm {
    let text = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { eqk_norm_from_json(text.as_ptr(), &mut out) }, EqkStatus::Ok);
    out
}

fn last_error() -> String {
    let p = eqk_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn certify(set: *const EqkPointSet, n: *const EqkNorm, tol: f64) -> EqkCertificate {
    let mut cert = EqkCertificate::default();
    assert_eq!(unsafe { eqk_certify(set, n, tol, &mut cert) }, EqkStatus::Ok);
    cert
}

#[test]
fn construct_and_certify_lp() {
    let n = norm(r#"{"dim":3,"family":{"lp":{"p":2.0}}}"#);
    unsafe {
        assert_eq!(eqk_norm_dim(n), 3);
        let mut v = 0.0;
        assert_eq!(eqk_norm_eval(n, [3.0, 4.0, 0.0].as_ptr(), 3, &mut v), EqkStatus::Ok);
        assert!((v - 5.0).abs() < 1e-15);
        let mut set = ptr::null_mut();
        assert_eq!(eqk_construct(n, 0, &mut set), EqkStatus::Ok);
        assert_eq!((eqk_point_set_len(set), eqk_point_set_dim(set)), (4, 3));
        assert!((eqk_point_set_distance(set) - 2f64.sqrt()).abs() < 1e-15);
        let cert = certify(set, n, 1e-9);
        assert!(cert.pass && cert.m == 4);
        let mut p = [0.0; 3];
        assert_eq!(eqk_point_set_point(set, 0, p.as_mut_ptr(), 3), EqkStatus::Ok);
        assert_eq!(p, [1.0, 0.0, 0.0]);
        assert_eq!(eqk_point_set_point(set, 9, p.as_mut_ptr(), 3), EqkStatus::Parameter);
        assert_eq!(eqk_point_set_point(set, 0, p.as_mut_ptr(), 2), EqkStatus::Parameter);
        eqk_point_set_free(set);
        eqk_norm_free(n);
    }
}

#[test]
fn certificate_against_a_different_norm_fails_without_error() {
    let l2 = norm(r#"{"dim":3,"family":{"lp":{"p":2.0}}}"#);
    let l1 = norm(r#"{"dim":3,"family":{"lp":{"p":1.0}}}"#);
    unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(eqk_construct(l2, 0, &mut set), EqkStatus::Ok);
        assert!(!certify(set, l1, 1e-9).pass);
        eqk_point_set_free(set);
        eqk_norm_free(l1);
        eqk_norm_free(l2);
    }
}

#[test]
fn hyperplane_sign_cube() {
    let h = norm(r#"{"dim":4,"family":{"linfty_hyperplane":{"a":[1.0,1.0,1.0,1.0]}}}"#);
    unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(eqk_construct(h, 0, &mut set), EqkStatus::Ok);
        assert_eq!(eqk_point_set_len(set), 4);
        assert!(certify(set, h, 1e-12).pass);
        eqk_point_set_free(set);
        eqk_norm_free(h);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut out = ptr::null_mut();
        let bad = CString::new("{\"dim\":3,").unwrap();
        assert_eq!(eqk_norm_from_json(bad.as_ptr(), &mut out), EqkStatus::Parse);
        assert!(out.is_null());
        assert!(last_error().contains("line"));
        assert_eq!(eqk_norm_from_json(ptr::null(), &mut out), EqkStatus::NullPointer);

        let n = norm(r#"{"dim":3,"family":{"lp":{"p":2.0}}}"#);
        let mut v = 0.0;
        assert_eq!(eqk_norm_eval(n, [1.0, 2.0].as_ptr(), 2, &mut v), EqkStatus::Domain);
        assert_eq!(eqk_norm_eval(n, [1.0, f64::NAN, 0.0].as_ptr(), 3, &mut v), EqkStatus::Domain);
        assert_eq!(eqk_norm_eval(n, ptr::null(), 3, &mut v), EqkStatus::NullPointer);
        assert_eq!(eqk_norm_dim(ptr::null()), 0);
        assert!(eqk_point_set_distance(ptr::null()).is_nan());

        let scaled = norm(
            r#"{"dim":2,"family":{"scaled":{"base":{"dim":2,"family":{"lp":{"p":2.0}}},"t":{"diagonal":[1.0,2.0]}}}}"#,
        );
        let mut set = ptr::null_mut();
        assert_eq!(eqk_construct(scaled, 0, &mut set), EqkStatus::Capability);
        assert!(last_error().contains("structure"));

        let mut r = 0.0;
        assert_eq!(eqk_radius_lp(1.0, 10, &mut r), EqkStatus::Parameter);
        let mut cert = EqkCertificate::default();
        assert_eq!(eqk_certify(ptr::null(), n, 1e-9, &mut cert), EqkStatus::NullPointer);
        eqk_norm_free(scaled);
        eqk_norm_free(n);
        eqk_norm_free(ptr::null_mut());
        eqk_point_set_free(ptr::null_mut());
    }
}

#[test]
fn radius_value() {
    let mut r = 0.0;
    assert_eq!(unsafe { eqk_radius_lp(2.0, 100, &mut r) }, EqkStatus::Ok);
    assert!((r - 1.002_560_756_742_079).abs() < 1e-12, "{r}");
}

#[test]
fn perturb_subspace_identity() {
    let h = norm(r#"{"dim":4,"family":{"linfty_hyperplane":{"a":[1.0,1.0,1.0,1.0]}}}"#);
    let variant = CString::new("subspace").unwrap();
    unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(eqk_perturb(h, h, variant.as_ptr(), 0, 0, &mut set), EqkStatus::Ok, "{}", last_error());
        assert!(certify(set, h, 1e-9).pass);
        eqk_point_set_free(set);
        let nonsense = CString::new("sideways").unwrap();
        assert_eq!(eqk_perturb(h, h, nonsense.as_ptr(), 0, 0, &mut set), EqkStatus::Parameter);
        eqk_norm_free(h);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(eqk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Directory holding the compiled `libeqk_ffi` artifacts.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let dir = artifact_dir();
    let lib = dir.join("libeqk_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let tmp_dir = tempfile::tempdir().unwrap();
    let tmp = tmp_dir.path();
    let src = tmp.join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "eqk.h"
int main(void) {
    EqkNorm *norm = NULL;
    if (eqk_norm_from_json("{\"dim\":3,\"family\":{\"lp\":{\"p\":2.0}}}", &norm) != EQK_STATUS_OK) return 1;
    EqkPointSet *set = NULL;
    if (eqk_construct(norm, 0, &set) != EQK_STATUS_OK) return 2;
    EqkCertificate cert;
    if (eqk_certify(set, norm, 1e-9, &cert) != EQK_STATUS_OK || !cert.pass) return 3;
    printf("%zu %.17g\n", eqk_point_set_len(set), eqk_point_set_distance(set));
    eqk_point_set_free(set);
    eqk_norm_free(norm);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "4 1.4142135623730951");
}
