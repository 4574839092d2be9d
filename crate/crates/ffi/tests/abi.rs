use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gglab::gibbs::{free_energy_per_site, reference_moments};
use gglab::model::{build_ea, build_sk};
use gglab_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    unsafe {
        gglab_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn sk(n: usize) -> *mut GglabModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { gglab_model_sk(n, 1.0, 0.5, 0.3, 42, 3, &mut m) }, GglabStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn sk_matches_the_library() {
    let m = sk(8);
    let inst = build_sk(8, 1.0, 0.5, 0.3, 42, 3).unwrap();
    let reference = reference_moments(&inst).unwrap();
    unsafe {
        assert_eq!(gglab_model_size(m), 8);
        assert_eq!(gglab_model_feature_count(m), inst.feature_count());
        let (mut log_z, mut psi, mut q2) = (0.0, 0.0, 0.0);
        assert_eq!(gglab_model_log_partition(m, &mut log_z), GglabStatus::Ok);
        assert_eq!(gglab_model_free_energy(m, &mut psi), GglabStatus::Ok);
        assert_eq!(gglab_model_pair_overlap(m, &mut q2), GglabStatus::Ok);
        assert!((log_z - reference.log_partition).abs() < 1e-10);
        assert_eq!(psi, free_energy_per_site(&inst).unwrap());
        assert!((0.0..=1.0).contains(&q2));

        let mut means = vec![f64::NAN; inst.feature_count()];
        let mut written = 0;
        let s = gglab_model_feature_averages(m, means.as_mut_ptr(), means.len(), &mut written);
        assert_eq!(s, GglabStatus::Ok);
        assert_eq!(written, means.len());
        for (a, b) in means.iter().zip(&reference.feature_means) {
            assert!((a - b).abs() < 1e-10);
        }
        gglab_model_free(m);
    }
}

#[test]
fn ea_lattice() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(gglab_model_ea(2, 3, false, 0.7, 5, 0, &mut m), GglabStatus::Ok);
        assert_eq!(gglab_model_size(m), 6);
        let inst = build_ea(&[2, 3], false, 0.7, 5, 0).unwrap();
        let mut psi = 0.0;
        assert_eq!(gglab_model_free_energy(m, &mut psi), GglabStatus::Ok);
        assert_eq!(psi, free_energy_per_site(&inst).unwrap());
        gglab_model_free(m);
    }
}

#[test]
fn short_buffers_report_the_needed_length() {
    let m = sk(6);
    unsafe {
        let mut written = 0;
        let s = gglab_model_feature_averages(m, ptr::null_mut(), 0, &mut written);
        assert_eq!(s, GglabStatus::BufferTooSmall);
        assert_eq!(written, gglab_model_feature_count(m));
        assert!(last_error().contains("need"));

        let mut spins = [0i8; 11];
        assert_eq!(gglab_model_sample(m, 1, 2, spins.as_mut_ptr(), spins.len()), GglabStatus::BufferTooSmall);
        assert_eq!(spins, [0; 11]);
        gglab_model_free(m);
    }
}

#[test]
fn sampling_is_seeded_and_valid() {
    let m = sk(6);
    let draw = |seed| {
        let mut spins = vec![0i8; 6 * 50];
        assert_eq!(unsafe { gglab_model_sample(m, seed, 50, spins.as_mut_ptr(), spins.len()) }, GglabStatus::Ok);
        spins
    };
    let (a, b, c) = (draw(9), draw(9), draw(10));
    assert!(a.iter().all(|&s| s == 1 || s == -1));
    assert_eq!(a, b);
    assert_ne!(a, c);
    unsafe { gglab_model_free(m) };
}

#[test]
fn errors_map_to_statuses() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(gglab_model_sk(40, 1.0, 0.5, 0.3, 1, 0, ptr::null_mut()), GglabStatus::NullPointer);
        assert_eq!(gglab_model_sk(0, 1.0, 0.5, 0.3, 1, 0, &mut m), GglabStatus::InvalidModel);
        assert!(m.is_null());
        assert!(!last_error().is_empty());

        // Beyond exact enumeration the handle builds but exact moments refuse.
        assert_eq!(gglab_model_sk(30, 1.0, 0.5, 0.3, 1, 0, &mut m), GglabStatus::Ok);
        let mut x = 0.0;
        assert_eq!(gglab_model_log_partition(m, &mut x), GglabStatus::TooLarge);
        assert_eq!(x, 0.0);
        assert!(last_error().contains("exceeds"));
        gglab_model_free(m);

        assert_eq!(gglab_model_free_energy(ptr::null(), &mut x), GglabStatus::NullPointer);
        assert_eq!(gglab_model_size(ptr::null()), 0);
        gglab_model_free(ptr::null_mut());
    }
}

#[test]
fn last_error_truncates() {
    unsafe {
        let mut m = ptr::null_mut();
        gglab_model_sk(0, 1.0, 0.5, 0.3, 1, 0, &mut m);
        let full = gglab_last_error(ptr::null_mut(), 0);
        let mut buf = [1 as std::ffi::c_char; 5];
        assert_eq!(gglab_last_error(buf.as_mut_ptr(), buf.len()), full);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_bytes().len(), 4);
    }
}

#[test]
fn run_config_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "seed = 1\n[[check]]\nname = \"oracle_equivalence\"\nN = [4]\npoints = [{ beta = 1.0, gamma = 0.5, h = 0.3 }]\n",
    )
    .unwrap();
    let c = CString::new(cfg.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    let mut failures = usize::MAX;
    unsafe {
        assert_eq!(gglab_run_config(c.as_ptr(), out.as_ptr(), &mut failures), GglabStatus::Ok);
        assert_eq!(failures, 0);
        assert!(dir.path().join("out/report.csv").exists());

        std::fs::write(&cfg, "seed = 1\n[[check]]\nname = \"nope\"\nN = [4]\npoints = [{ gamma = 0.5 }]\n").unwrap();
        assert_eq!(gglab_run_config(c.as_ptr(), out.as_ptr(), &mut failures), GglabStatus::Config);
        assert_eq!(gglab_run_config(ptr::null(), out.as_ptr(), &mut failures), GglabStatus::NullPointer);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(gglab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles and runs a C program against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include/gglab.h");
    assert!(header.exists(), "header not generated");
    // target/<profile>/deps/abi-* -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libgglab_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; checked the header exists only");
        return;
    }
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    let psi: f64 = text.split_whitespace().next().unwrap().parse().unwrap();
    let expected = free_energy_per_site(&build_sk(6, 1.0, 0.5, 0.3, 42, 0).unwrap()).unwrap();
    assert!((psi - expected).abs() < 1e-12);
}
