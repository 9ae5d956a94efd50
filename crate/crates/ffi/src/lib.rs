//! C ABI over the mdnuc planner.
//!
//! All objects are opaque handles created by `mdnuc_config_from_*`,
//! `mdnuc_scene_build` and `mdnuc_plan` and released with the matching
//! `_free`. Every fallible call returns an [`MdnucStatus`]; on failure
//! `mdnuc_last_error()` describes the error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mdnuc::config::{preset, RunConfig};
use mdnuc::pipeline::Scene;
use mdnuc::planner::{CoveragePath, PlannerKind};
use mdnuc::sonar::opening_angle;
use mdnuc::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdnucStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Terrain = 4,
    Planning = 5,
    UnreachableRegion = 6,
    Simulation = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdnucPlanner {
    Bf = 0,
    Mdbf = 1,
    Nuc = 2,
    Mdnuc = 3,
}

impl From<MdnucPlanner> for PlannerKind {
    fn from(p: MdnucPlanner) -> Self {
        match p {
            MdnucPlanner::Bf => PlannerKind::Bf,
            MdnucPlanner::Mdbf => PlannerKind::Mdbf,
            MdnucPlanner::Nuc => PlannerKind::Nuc,
            MdnucPlanner::Mdnuc => PlannerKind::Mdnuc,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MdnucWaypoint {
    pub x: f64,
    pub y: f64,
    pub theta_deg: f64,
    pub region: u32,
    /// 1 when the opening angle changes at this waypoint.
    pub angle_switch: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MdnucReport {
    pub coverage_pct: f64,
    pub path_length: f64,
    pub redundancy: f64,
    pub angle_switch_count: u64,
    pub covered_cells: u64,
    pub mask_cells: u64,
    pub pings: u64,
    pub skipped_pings: u64,
}

/// Run configuration handle.
pub struct MdnucConfig(RunConfig);

/// Terrain, mesh and partition built from a configuration.
pub struct MdnucScene(Scene);

/// One or more planned coverage paths.
pub struct MdnucPlan(Vec<CoveragePath>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut s = msg.into();
    s.retain(|c| c != '\0');
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).expect("nul bytes removed"));
}

fn fail(status: MdnucStatus, msg: impl Into<String>) -> MdnucStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> MdnucStatus {
    match e {
        Error::Config(_) => MdnucStatus::Config,
        Error::UnreachableRegion { .. } => MdnucStatus::UnreachableRegion,
        Error::Format { .. } | Error::Io(_) => MdnucStatus::Terrain,
        Error::EmptyPath | Error::EmptyMask => MdnucStatus::Simulation,
        _ => MdnucStatus::Planning,
    }
}

fn guard(f: impl FnOnce() -> MdnucStatus) -> MdnucStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == MdnucStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(MdnucStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, MdnucStatus> {
    if p.is_null() {
        return Err(fail(MdnucStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MdnucStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn into_handle<T>(value: T, out: *mut *mut T) {
    // SAFETY: callers check `out` for null before computing `value`.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mdnuc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mdnuc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opening angle in degrees for footprint `w` at depth `d`, clamped at `theta_max_deg`.
///
/// # Safety
/// `out` must be null or point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_opening_angle(w: f64, d: f64, theta_max_deg: f64, out: *mut f64) -> MdnucStatus {
    guard(|| {
        if out.is_null() {
            return fail(MdnucStatus::NullArgument, "null output pointer");
        }
        match opening_angle(w, d, theta_max_deg) {
            Ok(t) => {
                *out = t;
                MdnucStatus::Ok
            }
            Err(e) => fail(MdnucStatus::OutOfRange, e.to_string()),
        }
    })
}

/// Parses a TOML run configuration.
///
/// # Safety
/// `toml` must be null or a NUL-terminated string; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_config_from_toml(toml: *const c_char, out: *mut *mut MdnucConfig) -> MdnucStatus {
    guard(|| {
        if out.is_null() {
            return fail(MdnucStatus::NullArgument, "null output pointer");
        }
        let text = match str_arg(toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match RunConfig::from_toml(text) {
            Ok(c) => {
                into_handle(MdnucConfig(c), out);
                MdnucStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Loads a shipped preset: "shaft", "saddle" or "channel".
///
/// # Safety
/// As for [`mdnuc_config_from_toml`].
#[no_mangle]
pub unsafe extern "C" fn mdnuc_config_from_preset(name: *const c_char, out: *mut *mut MdnucConfig) -> MdnucStatus {
    guard(|| {
        if out.is_null() {
            return fail(MdnucStatus::NullArgument, "null output pointer");
        }
        let name = match str_arg(name) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match preset(name) {
            Ok(c) => {
                into_handle(MdnucConfig(c), out);
                MdnucStatus::Ok
            }
            Err(e) => fail(MdnucStatus::Config, e.to_string()),
        }
    })
}

/// Sets the sonar resolution in meters; the footprint follows.
///
/// # Safety
/// `cfg` must be null or a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_config_set_resolution(cfg: *mut MdnucConfig, resolution: f64) -> MdnucStatus {
    guard(|| {
        let Some(cfg) = cfg.as_mut() else {
            return fail(MdnucStatus::NullArgument, "null config");
        };
        let mut next = cfg.0.clone();
        next.sonar.resolution = resolution;
        match next.validate() {
            Ok(()) => {
                cfg.0 = next;
                MdnucStatus::Ok
            }
            Err(e) => fail(MdnucStatus::Config, e.to_string()),
        }
    })
}

/// Sonar footprint width in meters, or NaN for a null handle.
///
/// # Safety
/// `cfg` must be null or a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_config_footprint(cfg: *const MdnucConfig) -> f64 {
    cfg.as_ref().map_or(f64::NAN, |c| c.0.footprint())
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_config_free(cfg: *mut MdnucConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Generates the terrain and builds the mesh and partition.
///
/// # Safety
/// `cfg` must be null or live; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_scene_build(cfg: *const MdnucConfig, out: *mut *mut MdnucScene) -> MdnucStatus {
    guard(|| {
        let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else {
            return fail(MdnucStatus::NullArgument, "null config or output pointer");
        };
        let hf = match cfg.0.terrain.build(None) {
            Ok(h) => h,
            Err(Error::Config(m)) => return fail(MdnucStatus::Config, m),
            Err(e) => return fail(MdnucStatus::Terrain, e.to_string()),
        };
        match Scene::from_heightfield(&cfg.0, hf) {
            Ok(s) => {
                into_handle(MdnucScene(s), out);
                MdnucStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Number of mesh faces, 0 for a null handle.
///
/// # Safety
/// `scene` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_scene_face_count(scene: *const MdnucScene) -> usize {
    scene.as_ref().map_or(0, |s| s.0.mesh.face_count())
}

/// Number of depth regions, 0 for a null handle.
///
/// # Safety
/// `scene` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_scene_region_count(scene: *const MdnucScene) -> usize {
    scene.as_ref().map_or(0, |s| s.0.partition.region_count())
}

/// Number of gate edges, 0 for a null handle.
///
/// # Safety
/// `scene` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_scene_gate_count(scene: *const MdnucScene) -> usize {
    scene.as_ref().map_or(0, |s| s.0.partition.gates.len())
}

/// # Safety
/// `scene` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_scene_free(scene: *mut MdnucScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Plans coverage paths with `planner`. The config must be the one the
/// scene was built from.
///
/// # Safety
/// `scene` and `cfg` must be null or live; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_plan(
    scene: *const MdnucScene,
    cfg: *const MdnucConfig,
    planner: MdnucPlanner,
    out: *mut *mut MdnucPlan,
) -> MdnucStatus {
    guard(|| {
        let (Some(scene), Some(cfg), false) = (scene.as_ref(), cfg.as_ref(), out.is_null()) else {
            return fail(MdnucStatus::NullArgument, "null scene, config or output pointer");
        };
        match scene.0.plan(&cfg.0, planner.into()) {
            Ok(p) => {
                into_handle(MdnucPlan(p), out);
                MdnucStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Number of paths in a plan: one per region for MDB&F, otherwise one.
///
/// # Safety
/// `plan` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_plan_path_count(plan: *const MdnucPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.0.len())
}

/// Waypoints of path `index`, 0 when out of range.
///
/// # Safety
/// `plan` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_plan_waypoint_count(plan: *const MdnucPlan, index: usize) -> usize {
    plan.as_ref().and_then(|p| p.0.get(index)).map_or(0, CoveragePath::len)
}

/// Total length of all paths in meters.
///
/// # Safety
/// `plan` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_plan_length(plan: *const MdnucPlan) -> f64 {
    plan.as_ref()
        .map_or(0.0, |p| p.0.iter().map(CoveragePath::length).sum())
}

/// Copies up to `capacity` waypoints of path `index` into `buf` and stores
/// the number copied in `written`.
///
/// # Safety
/// `buf` must be null or have room for `capacity` waypoints; `written` must
/// be null or writable.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_plan_waypoints(
    plan: *const MdnucPlan,
    index: usize,
    buf: *mut MdnucWaypoint,
    capacity: usize,
    written: *mut usize,
) -> MdnucStatus {
    guard(|| {
        let (Some(plan), false, false) = (plan.as_ref(), buf.is_null() && capacity > 0, written.is_null()) else {
            return fail(MdnucStatus::NullArgument, "null plan, buffer or count pointer");
        };
        let Some(path) = plan.0.get(index) else {
            return fail(
                MdnucStatus::OutOfRange,
                format!("path index {index} of {}", plan.0.len()),
            );
        };
        let n = path.len().min(capacity);
        for (i, w) in path.waypoints.iter().take(n).enumerate() {
            *buf.add(i) = MdnucWaypoint {
                x: w.pos.x,
                y: w.pos.y,
                theta_deg: w.theta_deg,
                region: w.region as u32,
                angle_switch: path.angle_switches.contains(&i) as u32,
            };
        }
        *written = n;
        MdnucStatus::Ok
    })
}

/// # Safety
/// `plan` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_plan_free(plan: *mut MdnucPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Simulates the survey of `plan` and fills `out` with its metrics.
///
/// # Safety
/// `scene`, `cfg` and `plan` must be null or live; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mdnuc_survey(
    scene: *const MdnucScene,
    cfg: *const MdnucConfig,
    plan: *const MdnucPlan,
    out: *mut MdnucReport,
) -> MdnucStatus {
    guard(|| {
        let (Some(scene), Some(cfg), Some(plan), false) = (scene.as_ref(), cfg.as_ref(), plan.as_ref(), out.is_null())
        else {
            return fail(MdnucStatus::NullArgument, "null scene, config, plan or output pointer");
        };
        match scene.0.survey(&cfg.0, &plan.0) {
            Ok((_, r)) => {
                *out = MdnucReport {
                    coverage_pct: r.coverage_pct,
                    path_length: r.path_length,
                    redundancy: r.redundancy,
                    angle_switch_count: r.angle_switch_count as u64,
                    covered_cells: r.covered_cells as u64,
                    mask_cells: r.mask_cells as u64,
                    pings: r.pings,
                    skipped_pings: r.skipped_pings,
                };
                MdnucStatus::Ok
            }
            Err(e) => fail(MdnucStatus::Simulation, e.to_string()),
        }
    })
}

#[cfg(test)]
mod tests {
    use std::ptr;

    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::Config("x".into())), MdnucStatus::Config);
        assert_eq!(
            status_of(&Error::UnreachableRegion {
                face: 1,
                region: Some(0)
            }),
            MdnucStatus::UnreachableRegion
        );
        assert_eq!(status_of(&Error::EmptyPath), MdnucStatus::Simulation);
        assert_eq!(
            status_of(&Error::FragmentedRoi { components: 2 }),
            MdnucStatus::Planning
        );
    }

    #[test]
    fn error_strips_nul() {
        set_error("a\0b");
        let s = unsafe { CStr::from_ptr(mdnuc_last_error()) };
        assert_eq!(s.to_str().unwrap(), "ab");
    }

    #[test]
    fn null_out_pointer() {
        let s = unsafe { mdnuc_opening_angle(1.0, 1.0, 160.0, ptr::null_mut()) };
        assert_eq!(s, MdnucStatus::NullArgument);
    }
}
