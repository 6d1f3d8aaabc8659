use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use symfcs_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(symfcs_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn model(b_z: f64, gamma: f64, n: f64, deph: f64) -> *mut SymfcsModel {
    let mut m = ptr::null_mut();
    let s = unsafe { symfcs_model_new(b_z, gamma, n, deph, &mut m) };
    assert_eq!(s, SymfcsStatus::Ok, "{}", last_error());
    assert!(!m.is_null());
    m
}

fn engine(m: *const SymfcsModel) -> *mut SymfcsEngine {
    let mut e = ptr::null_mut();
    let s = unsafe { symfcs_engine_new(m, &mut e) };
    assert_eq!(s, SymfcsStatus::Ok, "{}", last_error());
    e
}

#[test]
fn reference_averages_and_geometry() {
    let m = model(0.5, 0.1, 0.1, 0.0);
    let e = engine(m);
    unsafe {
        let mut k = 0.0;
        assert_eq!(symfcs_model_kappa(m, &mut k), SymfcsStatus::Ok);
        assert!((k - (0.1f64 / 1.1).ln()).abs() < 1e-14);

        let mut avg = SymfcsAverages::default();
        assert_eq!(symfcs_engine_averages(e, &mut avg), SymfcsStatus::Ok);
        assert!(avg.q_s < 0.0 && avg.q_a.abs() < 1e-10);
        assert!(avg.a_s > avg.a_a && avg.a_a > 0.0);

        let mut geo = SymfcsGeometry::default();
        assert_eq!(symfcs_engine_geometry(e, &mut geo), SymfcsStatus::Ok);
        assert!(geo.a_c > avg.a_a && geo.a_c < avg.a_s);
        assert!((geo.kappa - k).abs() < 1e-14);
        assert!((geo.q_s - avg.q_s).abs() < 1e-12);

        let (mut mu, mut sec) = (f64::NAN, SymfcsSector::Both);
        assert_eq!(symfcs_engine_mu(e, 0.3, 0.0, SymfcsSector::Both, &mut mu, &mut sec), SymfcsStatus::Ok);
        let (mut mu_gc, mut sec_gc) = (f64::NAN, SymfcsSector::Both);
        symfcs_engine_mu(e, k - 0.3, 0.0, SymfcsSector::Both, &mut mu_gc, &mut sec_gc);
        assert!((mu - mu_gc).abs() < 1e-10);
        // null out_sector is allowed
        assert_eq!(symfcs_engine_mu(e, 0.0, 0.0, SymfcsSector::Antisymmetric, &mut mu, ptr::null_mut()), SymfcsStatus::Ok);
        assert!(mu.abs() < 1e-10);

        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(symfcs_engine_sector_eigenvalue(e, 0.0, 0.0, SymfcsSector::Symmetric, &mut re, &mut im), SymfcsStatus::Ok);
        assert!(re.abs() < 1e-10 && im.abs() < 1e-10);
        assert_eq!(
            symfcs_engine_sector_eigenvalue(e, 0.0, 0.0, SymfcsSector::Both, &mut re, &mut im),
            SymfcsStatus::InvalidParams
        );

        symfcs_engine_free(e);
        symfcs_model_free(m);
    }
}

#[test]
fn steady_states_are_normalised() {
    let m = model(0.5, 0.1, 0.1, 0.0);
    let (mut re, mut im) = (vec![0.0; 64], vec![0.0; 64]);
    unsafe {
        for s in [SymfcsSector::Symmetric, SymfcsSector::Antisymmetric] {
            assert_eq!(symfcs_steady_state(m, s, re.as_mut_ptr(), im.as_mut_ptr(), 64), SymfcsStatus::Ok);
            let tr: f64 = (0..8).map(|i| re[i * 8 + i]).sum();
            assert!((tr - 1.0).abs() < 1e-10);
        }
        // γ = 0 has two stationary states
        assert_eq!(
            symfcs_steady_state(m, SymfcsSector::Both, re.as_mut_ptr(), im.as_mut_ptr(), 64),
            SymfcsStatus::BrokenSymmetry
        );
        assert_eq!(
            symfcs_steady_state(m, SymfcsSector::Symmetric, re.as_mut_ptr(), im.as_mut_ptr(), 10),
            SymfcsStatus::BufferTooSmall
        );
        assert!(last_error().contains("64"));
        symfcs_model_free(m);

        let d = model(0.5, 0.1, 0.1, 0.01);
        assert_eq!(symfcs_steady_state(d, SymfcsSector::Both, re.as_mut_ptr(), im.as_mut_ptr(), 64), SymfcsStatus::Ok);
        symfcs_model_free(d);
    }
}

#[test]
fn error_codes_and_null_handling() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(symfcs_model_new(0.5, -0.1, 0.1, 0.0, &mut m), SymfcsStatus::InvalidParams);
        assert!(m.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(symfcs_model_new(f64::NAN, 0.1, 0.1, 0.0, &mut m), SymfcsStatus::InvalidParams);
        assert_eq!(symfcs_model_new(0.5, 0.1, 0.1, 0.0, ptr::null_mut()), SymfcsStatus::NullPointer);

        let mut k = 0.0;
        assert_eq!(symfcs_model_kappa(ptr::null(), &mut k), SymfcsStatus::NullPointer);
        let mut e = ptr::null_mut();
        assert_eq!(symfcs_engine_new(ptr::null(), &mut e), SymfcsStatus::NullPointer);
        let mut mu = 0.0;
        assert_eq!(
            symfcs_engine_mu(ptr::null(), 0.0, 0.0, SymfcsSector::Both, &mut mu, ptr::null_mut()),
            SymfcsStatus::NullPointer
        );
        symfcs_model_free(ptr::null_mut());
        symfcs_engine_free(ptr::null_mut());

        // success clears the message
        let good = model(0.5, 0.1, 0.1, 0.0);
        assert!(last_error().is_empty());

        // sector-resolved quantities need the symmetry
        let d = model(0.5, 0.1, 0.1, 0.01);
        let de = engine(d);
        let mut avg = SymfcsAverages::default();
        assert_eq!(symfcs_engine_averages(de, &mut avg), SymfcsStatus::BrokenSymmetry);
        // without the symmetry the overlap is ignored and no sector is reported
        let (mut mu, mut sec) = (f64::NAN, SymfcsSector::Symmetric);
        assert_eq!(
            symfcs_engine_mu(de, 0.0, 0.0, SymfcsSector::Symmetric, &mut mu, &mut sec),
            SymfcsStatus::Ok
        );
        assert!(mu.abs() < 1e-10);
        assert_eq!(sec, SymfcsSector::Both);

        let mut xi = [0.0; 2];
        assert_eq!(
            symfcs_xi_master_equation(good, 0.5, [1.0, 0.5].as_ptr(), 2, xi.as_mut_ptr()),
            SymfcsStatus::InvalidParams
        );
        assert_eq!(
            symfcs_xi_master_equation(good, 1.5, [0.0, 1.0].as_ptr(), 2, xi.as_mut_ptr()),
            SymfcsStatus::InvalidParams
        );

        symfcs_engine_free(de);
        symfcs_model_free(d);
        symfcs_model_free(good);
    }
}

#[test]
fn ensemble_matches_master_equation() {
    let m = model(0.5, 0.1, 0.1, 0.0);
    unsafe {
        let mut s = SymfcsEnsembleSummary::default();
        assert_eq!(symfcs_ensemble_run(m, 0.5, 400.0, 200, 7, &mut s), SymfcsStatus::Ok, "{}", last_error());
        assert_eq!(s.n_traj, 200);
        assert_eq!(s.unfrozen, 0);
        assert!((s.fraction_to_a - s.mean_xi_final).abs() < 1e-3, "{s:?}");

        let mut xi = [f64::NAN; 3];
        let t = [0.0, 10.0, 400.0];
        assert_eq!(symfcs_xi_master_equation(m, 0.5, t.as_ptr(), 3, xi.as_mut_ptr()), SymfcsStatus::Ok);
        assert!(xi.iter().all(|x| (x - 0.5).abs() < 1e-10));
        assert!((s.mean_xi_final - 0.5).abs() < 4.0 * 0.5 / (200f64).sqrt());

        let mut again = SymfcsEnsembleSummary::default();
        symfcs_ensemble_run(m, 0.5, 400.0, 200, 7, &mut again);
        assert_eq!(s.mean_q.to_bits(), again.mean_q.to_bits());
        symfcs_model_free(m);
    }
}

#[test]
fn version_is_the_package_version() {
    let v = unsafe { CStr::from_ptr(symfcs_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/symfcs.h")).unwrap()
}

#[test]
fn header_declares_every_entry_point() {
    let h = header();
    for f in [
        "symfcs_last_error", "symfcs_version", "symfcs_model_new", "symfcs_model_free",
        "symfcs_model_kappa", "symfcs_steady_state", "symfcs_engine_new", "symfcs_engine_free",
        "symfcs_engine_mu", "symfcs_engine_sector_eigenvalue", "symfcs_engine_averages",
        "symfcs_engine_geometry", "symfcs_ensemble_run", "symfcs_xi_master_equation",
        "typedef struct SymfcsModel SymfcsModel", "SYMFCS_STATUS_NULL_POINTER = 1",
    ] {
        assert!(h.contains(f), "header lacks {f}");
    }
}

/// Directory holding the built `libsymfcs_ffi.{a,so}`.
fn lib_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler ({cc}); skipping");
        return;
    }
    let lib = lib_dir().join("libsymfcs_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new(&cc)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "smoke exited {:?}", run.status.code());
    let line = String::from_utf8_lossy(&run.stdout);
    assert!(line.starts_with(env!("CARGO_PKG_VERSION")), "{line}");
}
