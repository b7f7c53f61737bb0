use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use keysched_ffi::*;

fn seq16() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/seq16")
}

fn last_error() -> String {
    let p = ks_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn pipeline_through_handles() {
    let dir = CString::new(seq16().to_str().unwrap()).unwrap();
    unsafe {
        let mut frames = ptr::null_mut();
        assert_eq!(ks_frames_load(dir.as_ptr(), 24.0, &mut frames), KsStatus::Ok);
        assert_eq!(ks_frames_len(frames), 16);

        let mut curve = ptr::null_mut();
        assert_eq!(ks_motion_curve(frames, true, &mut curve), KsStatus::Ok);
        let mut vals = [0.0; 16];
        let mut len = 0;
        assert_eq!(ks_curve_values(curve, vals.as_mut_ptr(), 16, &mut len), KsStatus::Ok);
        assert_eq!(len, 16);
        assert_eq!(vals[14], vals[15]);

        let mut sched = ptr::null_mut();
        assert_eq!(ks_select(curve, 6, false, 0, &mut sched), KsStatus::Ok);
        assert_eq!(ks_schedule_len(sched), 6);
        let mut keys = [0usize; 6];
        assert_eq!(ks_schedule_keyframes(sched, keys.as_mut_ptr(), 6, &mut len), KsStatus::Ok);
        assert_eq!(keys[0], 0);
        assert!(keys.windows(2).all(|w| w[0] < w[1]));

        let mut json = ptr::null_mut();
        assert_eq!(ks_schedule_to_json(sched, &mut json), KsStatus::Ok);
        let parsed = keysched::ingest::parse_schedule_json(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(parsed.keyframes, keys);
        ks_string_free(json);

        ks_schedule_free(sched);
        ks_curve_free(curve);
        ks_frames_free(frames);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut frames = ptr::null_mut();
        let missing = CString::new("/nonexistent/keysched").unwrap();
        assert_eq!(ks_frames_load(missing.as_ptr(), 24.0, &mut frames), KsStatus::Io);
        assert!(frames.is_null());
        assert!(last_error().contains("nonexistent"));

        assert_eq!(ks_frames_load(ptr::null(), 24.0, &mut frames), KsStatus::NullPointer);

        let v = [0.1, 0.5, 0.2, 0.9, 0.3, 0.1, 0.0, 0.4, 0.8, 0.2, 0.1, 0.3, 0.6, 0.2];
        let mut curve = ptr::null_mut();
        assert_eq!(ks_curve_from_values(v.as_ptr(), v.len(), &mut curve), KsStatus::Ok);
        let mut sched = ptr::null_mut();
        assert_eq!(ks_select(curve, 60, false, 0, &mut sched), KsStatus::Select);
        assert!(sched.is_null());

        let mut small = [0.0; 4];
        let mut len = 0;
        assert_eq!(ks_curve_values(curve, small.as_mut_ptr(), 4, &mut len), KsStatus::BufferTooSmall);
        assert_eq!(len, v.len());
        ks_curve_free(curve);

        let bad = [-1.0];
        assert_eq!(ks_curve_from_values(bad.as_ptr(), 1, &mut curve), KsStatus::InvalidArgument);

        let mut w = [KsWindow::default(); 8];
        assert_eq!(ks_freenoise_windows(48, 6, 12, w.as_mut_ptr(), 8, &mut len), KsStatus::Geometry);

        let mut n = 0;
        assert_eq!(ks_patch_token_count(196, 16, 10, &mut n), KsStatus::Ok);
        assert_eq!(n, 19);
        assert_eq!(ks_patch_token_count(196, 16, 0, &mut n), KsStatus::InvalidArgument);

        ks_frames_free(ptr::null_mut());
        ks_curve_free(ptr::null_mut());
        ks_schedule_free(ptr::null_mut());
        ks_string_free(ptr::null_mut());
    }
}

#[test]
fn numeric_entry_points() {
    unsafe {
        let e: Vec<[f64; 3]> = vec![[1.0, 2.0, 3.0], [0.5, 0.5, 0.5], [4.0, -1.0, 0.0], [2.0, 2.0, 2.0]];
        let mut out = [0.0; 3];
        let st = ks_cfg_combine(e[0].as_ptr(), e[1].as_ptr(), e[2].as_ptr(), e[3].as_ptr(), 3, 1.0, 1.0, 1.0, out.as_mut_ptr());
        assert_eq!(st, KsStatus::Ok);
        assert_eq!(out, e[3]);
        ks_cfg_combine(e[0].as_ptr(), e[1].as_ptr(), e[2].as_ptr(), e[3].as_ptr(), 3, 0.0, 0.0, 0.0, out.as_mut_ptr());
        assert_eq!(out, e[0]);

        let (gt, pred) = ([5usize, 20], [6usize, 40]);
        let mut m = 0;
        assert_eq!(ks_match_keypoints(gt.as_ptr(), 2, pred.as_ptr(), 2, 3, false, &mut m), KsStatus::Ok);
        assert_eq!(m, 1);
        assert_eq!(ks_match_keypoints(gt.as_ptr(), 2, pred.as_ptr(), 2, 1, true, &mut m), KsStatus::Ok);
        assert_eq!(m, 0);
        assert_eq!(ks_match_keypoints(ptr::null(), 0, ptr::null(), 0, 3, false, &mut m), KsStatus::Ok);
        assert_eq!(m, 0);

        let mut w = [KsWindow::default(); 7];
        let mut len = 0;
        assert_eq!(ks_freenoise_windows(48, 12, 6, w.as_mut_ptr(), 7, &mut len), KsStatus::Ok);
        assert_eq!(len, 7);
        assert!(w.iter().enumerate().all(|(i, w)| w.start == 6 * i && w.end == 6 * i + 12));
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ks_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps/
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include/keysched.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["ks_frames_load", "ks_select", "ks_cfg_combine", "ks_match_keypoints", "ks_last_error"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let lib = target_dir().join("libkeysched_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping C link check: no C compiler or static library");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let out = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).arg(seq16()).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
