use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use mdnuc_ffi::*;

const SMALL: &str = r#"
[terrain]
kind = "shaft"
plain_depth = 6.0
pit_depth = 24.0
pit_center = { x = 60.0, y = 60.0 }
pit_radius = 30.0
wall_smoothing = 8.0
cell_size = 1.0
extent = { width = 120.0, height = 120.0 }

[depth]
splits = [15.0]

[sonar]
n_beams = 64
resolution = 0.25

[sim]
eval_resolution = 0.5
"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(mdnuc_last_error()) }
        .to_str()
        .unwrap()
        .to_string()
}

fn small_config() -> *mut MdnucConfig {
    let text = CString::new(SMALL).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(
        unsafe { mdnuc_config_from_toml(text.as_ptr(), &mut cfg) },
        MdnucStatus::Ok
    );
    cfg
}

#[test]
fn opening_angle_through_the_abi() {
    let mut t = 0.0;
    assert_eq!(
        unsafe { mdnuc_opening_angle(25.6, 14.6, 160.0, &mut t) },
        MdnucStatus::Ok
    );
    let oracle = (2.0 * (25.6f64 / 29.2).atan()).to_degrees();
    assert!((t - oracle).abs() < 1e-12);
    assert_eq!(
        unsafe { mdnuc_opening_angle(25.6, -1.0, 160.0, &mut t) },
        MdnucStatus::OutOfRange
    );
    assert!(!last_error().is_empty());
}

#[test]
fn plan_and_survey_round_trip() {
    let cfg = small_config();
    assert!((unsafe { mdnuc_config_footprint(cfg) } - 16.0).abs() < 1e-12);
    let mut scene = ptr::null_mut();
    assert_eq!(unsafe { mdnuc_scene_build(cfg, &mut scene) }, MdnucStatus::Ok);
    let faces = unsafe { mdnuc_scene_face_count(scene) };
    assert!(faces > 0);
    assert!(unsafe { mdnuc_scene_region_count(scene) } >= 2);
    assert!(unsafe { mdnuc_scene_gate_count(scene) } >= 1);

    let mut plan = ptr::null_mut();
    assert_eq!(
        unsafe { mdnuc_plan(scene, cfg, MdnucPlanner::Mdnuc, &mut plan) },
        MdnucStatus::Ok
    );
    assert_eq!(unsafe { mdnuc_plan_path_count(plan) }, 1);
    let n = unsafe { mdnuc_plan_waypoint_count(plan, 0) };
    assert_eq!(n, 3 * faces);
    let mut buf = vec![MdnucWaypoint::default(); n + 4];
    let mut written = 0;
    assert_eq!(
        unsafe { mdnuc_plan_waypoints(plan, 0, buf.as_mut_ptr(), buf.len(), &mut written) },
        MdnucStatus::Ok
    );
    assert_eq!(written, n);
    assert!(buf[..n].iter().any(|w| w.angle_switch == 1));
    // closed cycle: length equals the sum of hops including the wrap
    let hops: f64 = (0..n)
        .map(|i| {
            let (a, b) = (buf[i], buf[(i + 1) % n]);
            (a.x - b.x).hypot(a.y - b.y)
        })
        .sum();
    assert!((hops - unsafe { mdnuc_plan_length(plan) }).abs() < 1e-6);
    assert_eq!(
        unsafe { mdnuc_plan_waypoints(plan, 1, buf.as_mut_ptr(), buf.len(), &mut written) },
        MdnucStatus::OutOfRange
    );

    let mut report = MdnucReport::default();
    assert_eq!(unsafe { mdnuc_survey(scene, cfg, plan, &mut report) }, MdnucStatus::Ok);
    assert!(report.coverage_pct > 50.0 && report.coverage_pct <= 100.0);
    assert_eq!(
        report.coverage_pct,
        100.0 * report.covered_cells as f64 / report.mask_cells as f64
    );
    unsafe {
        mdnuc_plan_free(plan);
        mdnuc_scene_free(scene);
        mdnuc_config_free(cfg);
    }
}

#[test]
fn errors_are_reported() {
    let mut cfg = ptr::null_mut();
    let bad = CString::new("bogus = 1").unwrap();
    assert_eq!(
        unsafe { mdnuc_config_from_toml(bad.as_ptr(), &mut cfg) },
        MdnucStatus::Config
    );
    assert!(last_error().contains("bogus"));
    assert!(cfg.is_null());

    let name = CString::new("reef").unwrap();
    assert_eq!(
        unsafe { mdnuc_config_from_preset(name.as_ptr(), &mut cfg) },
        MdnucStatus::Config
    );
    assert!(last_error().contains("shaft"));

    assert_eq!(
        unsafe { mdnuc_config_from_toml(ptr::null(), &mut cfg) },
        MdnucStatus::NullArgument
    );
    let mut scene = ptr::null_mut();
    assert_eq!(
        unsafe { mdnuc_scene_build(ptr::null(), &mut scene) },
        MdnucStatus::NullArgument
    );

    let cfg = small_config();
    assert_eq!(unsafe { mdnuc_config_set_resolution(cfg, -1.0) }, MdnucStatus::Config);
    assert!((unsafe { mdnuc_config_footprint(cfg) } - 16.0).abs() < 1e-12);
    unsafe { mdnuc_config_free(cfg) };
    unsafe { mdnuc_config_free(ptr::null_mut()) };
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(mdnuc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/mdnuc.h")).unwrap();
    for name in [
        "mdnuc_last_error",
        "mdnuc_config_from_toml",
        "mdnuc_scene_build",
        "mdnuc_plan",
        "mdnuc_plan_waypoints",
        "mdnuc_survey",
        "typedef struct MdnucScene MdnucScene",
        "MDNUC_STATUS_UNREACHABLE_REGION = 6",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    // compile the C example against the header when a C compiler is present
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(dir.join("tests/smoke.c"))
        .output()
    else {
        eprintln!("no C compiler; skipped the compile check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
