//! C ABI over `x3d-forge`.
//!
//! Architectures live behind the opaque `X3dArch` handle. Every call
//! returns an `X3dStatus`; on failure the message is available from
//! `x3d_last_error_message` on the same thread. Strings returned by the
//! library are released with `x3d_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use x3d_forge::arch::{instantiate, preset, ArchConfig, ArchSpec, ExpansionFactors};
use x3d_forge::cost::{inference_cost, report, InferenceStrategy};
use x3d_forge::criterion::AnalyticOracle;
use x3d_forge::expansion::{forward_expand, select_instance, ArchCost, ExpansionSettings, Regime};
use x3d_forge::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum X3dStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    Io = 4,
    Parse = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum X3dStrategy {
    Center = 0,
    LeftCenterRight = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct X3dInput {
    pub frames: u32,
    pub stride: u32,
    pub resolution: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct X3dStage {
    pub blocks: u32,
    pub out_width: u32,
    pub bottleneck_width: u32,
    pub spatial_stride: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct X3dInferenceCost {
    pub crop: u32,
    pub per_view_flops: u64,
    pub views: u64,
    pub total_flops: u64,
}

/// Opaque instantiated architecture.
pub struct X3dArch {
    spec: ArchSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> X3dStatus {
    match e {
        Error::Io { .. } => X3dStatus::Io,
        Error::Csv(_) | Error::TomlDe(_) | Error::TomlSer(_) | Error::Malformed { .. } => X3dStatus::Parse,
        e if e.is_infeasible() => X3dStatus::Infeasible,
        _ => X3dStatus::InvalidArgument,
    }
}

struct Fail(X3dStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> X3dStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => X3dStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            X3dStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(X3dStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(X3dStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn arch_arg<'a>(h: *const X3dArch) -> Result<&'a X3dArch, Fail> {
    h.as_ref().ok_or_else(|| null("architecture handle"))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_arch(out: *mut *mut X3dArch, spec: ArchSpec) -> Result<(), Fail> {
    put(out, Box::into_raw(Box::new(X3dArch { spec })), "output handle")
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn x3d_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn x3d_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `name` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn x3d_arch_from_preset(name: *const c_char, out: *mut *mut X3dArch) -> X3dStatus {
    guard(|| {
        let f = preset(str_arg(name, "preset name")?)?;
        put_arch(out, instantiate(&f, &ArchConfig::default())?)
    })
}

/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn x3d_arch_from_factors(
    gamma_tau: f64,
    gamma_t: f64,
    gamma_s: f64,
    gamma_w: f64,
    gamma_b: f64,
    gamma_d: f64,
    out: *mut *mut X3dArch,
) -> X3dStatus {
    guard(|| {
        let f = ExpansionFactors::new(gamma_tau, gamma_t, gamma_s, gamma_w, gamma_b, gamma_d)?;
        put_arch(out, instantiate(&f, &ArchConfig::default())?)
    })
}

/// Parses a spec document as written by `x3d_arch_to_toml`.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn x3d_arch_from_toml(text: *const c_char, out: *mut *mut X3dArch) -> X3dStatus {
    guard(|| put_arch(out, ArchSpec::from_toml(str_arg(text, "spec text")?)?))
}

/// Runs greedy expansion from `start` (a preset name) with the analytic
/// oracle and returns the instance selected for `regime`.
///
/// # Safety
/// `start` and `regime` must be nul-terminated strings and `out` a
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn x3d_arch_expand_to_regime(
    start: *const c_char,
    regime: *const c_char,
    out: *mut *mut X3dArch,
) -> X3dStatus {
    guard(|| {
        let f = preset(str_arg(start, "start preset")?)?;
        let r: Regime = str_arg(regime, "regime")?.parse()?;
        let settings = ExpansionSettings::default();
        let cost = ArchCost::default();
        let t = forward_expand(&f, r.bound_flops(), &AnalyticOracle::default(), &cost, &settings)?;
        let s = select_instance(&t, r.bound_flops(), &cost, settings.epsilon)?;
        put_arch(out, instantiate(&s.factors, &ArchConfig::default())?)
    })
}

/// # Safety
/// `arch` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn x3d_arch_free(arch: *mut X3dArch) {
    if !arch.is_null() {
        drop(Box::from_raw(arch));
    }
}

/// # Safety
/// `arch` must be a live handle and the outputs writable (either may be
/// null to skip it).
#[no_mangle]
pub unsafe extern "C" fn x3d_arch_complexity(arch: *const X3dArch, flops: *mut u64, params: *mut u64) -> X3dStatus {
    guard(|| {
        let r = report(&arch_arg(arch)?.spec)?;
        if !flops.is_null() {
            flops.write(r.flops_madds);
        }
        if !params.is_null() {
            params.write(r.params);
        }
        Ok(())
    })
}

/// # Safety
/// `arch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn x3d_arch_input(arch: *const X3dArch, out: *mut X3dInput) -> X3dStatus {
    guard(|| {
        let i = &arch_arg(arch)?.spec.input;
        put(
            out,
            X3dInput {
                frames: i.frames as u32,
                stride: i.stride as u32,
                resolution: i.resolution as u32,
            },
            "output",
        )
    })
}

/// # Safety
/// `arch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn x3d_arch_stage_count(arch: *const X3dArch, out: *mut usize) -> X3dStatus {
    guard(|| put(out, arch_arg(arch)?.spec.stages.len(), "output"))
}

/// # Safety
/// `arch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn x3d_arch_stage(arch: *const X3dArch, index: usize, out: *mut X3dStage) -> X3dStatus {
    guard(|| {
        let stages = &arch_arg(arch)?.spec.stages;
        let s = stages.get(index).ok_or_else(|| {
            Fail(
                X3dStatus::InvalidArgument,
                format!("stage {index} out of range (0..{})", stages.len()),
            )
        })?;
        put(
            out,
            X3dStage {
                blocks: s.blocks as u32,
                out_width: s.out_width as u32,
                bottleneck_width: s.bottleneck_width as u32,
                spatial_stride: s.spatial_stride as u32,
            },
            "output",
        )
    })
}

/// # Safety
/// `arch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn x3d_arch_inference_cost(
    arch: *const X3dArch,
    strategy: X3dStrategy,
    clips: u64,
    out: *mut X3dInferenceCost,
) -> X3dStatus {
    guard(|| {
        let s = match strategy {
            X3dStrategy::Center => InferenceStrategy::KCenter,
            X3dStrategy::LeftCenterRight => InferenceStrategy::KLeftCenterRight,
        };
        let c = inference_cost(&arch_arg(arch)?.spec, s, clips)?;
        put(
            out,
            X3dInferenceCost {
                crop: c.crop as u32,
                per_view_flops: c.per_view_flops,
                views: c.views,
                total_flops: c.total,
            },
            "output",
        )
    })
}

/// Serializes the spec; release the string with `x3d_string_free`.
///
/// # Safety
/// `arch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn x3d_arch_to_toml(arch: *const X3dArch, out: *mut *mut c_char) -> X3dStatus {
    guard(|| {
        let text = arch_arg(arch)?.spec.to_toml()?;
        let c = CString::new(text).map_err(|e| Fail(X3dStatus::Parse, e.to_string()))?;
        put(out, c.into_raw(), "output")
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn x3d_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
