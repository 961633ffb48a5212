use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use x3d_forge_ffi::*;

fn preset(name: &str) -> *mut X3dArch {
    let name = CString::new(name).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { x3d_arch_from_preset(name.as_ptr(), &mut h) }, X3dStatus::Ok);
    assert!(!h.is_null());
    h
}

fn complexity(h: *const X3dArch) -> (u64, u64) {
    let (mut f, mut p) = (0, 0);
    assert_eq!(unsafe { x3d_arch_complexity(h, &mut f, &mut p) }, X3dStatus::Ok);
    (f, p)
}

fn last_error() -> String {
    let p = x3d_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn preset_complexity() {
    let h = preset("X3D-S");
    let (f, p) = complexity(h);
    assert!((f as f64 / 1.96e9 - 1.0).abs() < 0.02);
    assert!((p as f64 / 3.76e6 - 1.0).abs() < 0.02);
    let mut input = X3dInput::default();
    assert_eq!(unsafe { x3d_arch_input(h, &mut input) }, X3dStatus::Ok);
    assert_eq!((input.frames, input.resolution), (13, 160));
    unsafe { x3d_arch_free(h) };
}

#[test]
fn stages_and_bounds() {
    let h = preset("X3D-XL");
    let mut n = 0;
    assert_eq!(unsafe { x3d_arch_stage_count(h, &mut n) }, X3dStatus::Ok);
    assert_eq!(n, 4);
    let depths: Vec<u32> = (0..n)
        .map(|i| {
            let mut s = X3dStage::default();
            assert_eq!(unsafe { x3d_arch_stage(h, i, &mut s) }, X3dStatus::Ok);
            s.blocks
        })
        .collect();
    assert_eq!(depths, vec![5, 10, 25, 15]);
    let mut s = X3dStage::default();
    assert_eq!(unsafe { x3d_arch_stage(h, 4, &mut s) }, X3dStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe { x3d_arch_free(h) };
}

#[test]
fn errors_and_null_pointers() {
    let mut h = ptr::null_mut();
    let bad = CString::new("X3D-Q").unwrap();
    assert_eq!(unsafe { x3d_arch_from_preset(bad.as_ptr(), &mut h) }, X3dStatus::InvalidArgument);
    assert!(h.is_null());
    assert!(last_error().contains("X3D-Q"));
    assert_eq!(unsafe { x3d_arch_from_preset(ptr::null(), &mut h) }, X3dStatus::NullPointer);
    assert_eq!(unsafe { x3d_arch_complexity(ptr::null(), ptr::null_mut(), ptr::null_mut()) }, X3dStatus::NullPointer);
    assert_eq!(
        unsafe { x3d_arch_from_factors(1.0, 1.0, 0.1, 1.0, 1.0, 1.0, &mut h) },
        X3dStatus::Infeasible
    );
    assert_eq!(
        unsafe { x3d_arch_from_factors(1.0, -1.0, 1.0, 1.0, 1.0, 1.0, &mut h) },
        X3dStatus::Infeasible
    );
    let garbage = CString::new("not = [toml").unwrap();
    assert_eq!(unsafe { x3d_arch_from_toml(garbage.as_ptr(), &mut h) }, X3dStatus::Parse);

    let ok = preset("X2D");
    assert!(x3d_last_error_message().is_null());
    unsafe { x3d_arch_free(ok) };
    unsafe { x3d_arch_free(ptr::null_mut()) };
}

#[test]
fn toml_round_trip() {
    let h = preset("X3D-M");
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { x3d_arch_to_toml(h, &mut text) }, X3dStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { x3d_arch_from_toml(text, &mut back) }, X3dStatus::Ok);
    assert_eq!(complexity(h), complexity(back));
    unsafe {
        x3d_string_free(text);
        x3d_arch_free(h);
        x3d_arch_free(back);
    }
}

#[test]
fn inference_cost_views() {
    let h = preset("X3D-M");
    let mut c = X3dInferenceCost::default();
    assert_eq!(
        unsafe { x3d_arch_inference_cost(h, X3dStrategy::LeftCenterRight, 10, &mut c) },
        X3dStatus::Ok
    );
    assert_eq!(c.views, 30);
    assert!((c.per_view_flops as f64 / 6.2e9 - 1.0).abs() < 0.02);
    assert_eq!(unsafe { x3d_arch_inference_cost(h, X3dStrategy::Center, 0, &mut c) }, X3dStatus::InvalidArgument);
    unsafe { x3d_arch_free(h) };
}

#[test]
fn expand_to_xs() {
    let start = CString::new("X2D").unwrap();
    let regime = CString::new("XS").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { x3d_arch_expand_to_regime(start.as_ptr(), regime.as_ptr(), &mut h) },
        X3dStatus::Ok
    );
    let (f, _) = complexity(h);
    assert!(f <= 600_000_000 && f > 300_000_000, "{f}");
    unsafe { x3d_arch_free(h) };
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(x3d_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header_dir().join("x3d_forge.h")).unwrap();
    for sym in [
        "x3d_last_error_message",
        "x3d_version",
        "x3d_arch_from_preset",
        "x3d_arch_from_factors",
        "x3d_arch_from_toml",
        "x3d_arch_expand_to_regime",
        "x3d_arch_free",
        "x3d_arch_complexity",
        "x3d_arch_input",
        "x3d_arch_stage_count",
        "x3d_arch_stage",
        "x3d_arch_inference_cost",
        "x3d_arch_to_toml",
        "x3d_string_free",
        "typedef struct X3dArch X3dArch;",
    ] {
        assert!(h.contains(sym), "{sym}");
    }
}

/// Builds the C smoke program against the static library when a C
/// compiler and the archive are available.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let Some(lib) = exe
        .ancestors()
        .skip(1)
        .take(3)
        .map(|d| d.join("libx3d_forge_ffi.a"))
        .find(|p| p.is_file())
    else {
        eprintln!("static library not found; skipping");
        return;
    };
    let out = Path::new(env!("CARGO_TARGET_TMPDIR")).join("x3d_smoke");
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let Ok(status) = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-I")
        .arg(header_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.starts_with("16 224 "), "{text}");
}
