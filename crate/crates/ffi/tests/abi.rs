use std::ffi::{CStr, CString};
use std::ptr;

use mogro_ffi::*;

fn last_error() -> String {
    let p = mogro_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn worked_example_gaps_through_the_abi() {
    let mu = [1.0, 0.0, 0.0, 1.0, 0.3, 0.3];
    let mut gap = f64::NAN;
    let mut witness = [f64::NAN; 3];
    let st = unsafe { mogro_effective_gap(mu.as_ptr(), 3, 2, 2, &mut gap, witness.as_mut_ptr()) };
    assert_eq!(st, MogroStatus::Ok);
    assert!((gap - 0.2).abs() < 1e-9);
    assert!((witness[0] - 0.5).abs() < 1e-9 && (witness[1] - 0.5).abs() < 1e-9);

    let st = unsafe { mogro_pareto_gap(mu.as_ptr(), 3, 2, 2, &mut gap) };
    assert_eq!(st, MogroStatus::Ok);
    assert_eq!(gap, 0.0);

    let st = unsafe { mogro_effective_gap(mu.as_ptr(), 3, 2, 0, &mut gap, witness.as_mut_ptr()) };
    assert_eq!(st, MogroStatus::Ok);
    assert_eq!(gap, 0.0);
    assert_eq!(witness, [0.0; 3]);
}

#[test]
fn errors_map_to_codes_and_messages() {
    let mu = [1.0, 0.0];
    let mut gap = 0.0;
    let st = unsafe { mogro_effective_gap(mu.as_ptr(), 1, 2, 5, &mut gap, ptr::null_mut()) };
    assert_eq!(st, MogroStatus::InvalidInput);
    assert!(last_error().contains("out of range"));

    let st = unsafe { mogro_pareto_gap(ptr::null(), 1, 2, 0, &mut gap) };
    assert_eq!(st, MogroStatus::NullPointer);
    assert!(last_error().contains("mu"));

    let mut inst = ptr::null_mut();
    let st = unsafe { mogro_instance_generate(3, 4, 2, 0.1, 1, &mut inst) };
    assert_eq!(st, MogroStatus::InvalidConfig);
    assert!(inst.is_null());

    let missing = CString::new("/nonexistent/dir/instance.json").unwrap();
    let st = unsafe { mogro_instance_load(missing.as_ptr(), &mut inst) };
    assert_eq!(st, MogroStatus::Io);
    assert!(last_error().contains("/nonexistent/dir/instance.json"));

    // A success clears the slot.
    let st = unsafe { mogro_pareto_gap(mu.as_ptr(), 1, 2, 0, &mut gap) };
    assert_eq!(st, MogroStatus::Ok);
    assert!(mogro_last_error_message().is_null());
}

#[test]
fn instance_lifecycle_and_episode() {
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { mogro_instance_generate(4, 12, 2, 0.1, 3, &mut inst) }, MogroStatus::Ok);
    let (mut d, mut k, mut m) = (0, 0, 0);
    assert_eq!(unsafe { mogro_instance_dims(inst, &mut d, &mut k, &mut m) }, MogroStatus::Ok);
    assert_eq!((d, k, m), (4, 12, 2));

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("i.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { mogro_instance_save(inst, path.as_ptr()) }, MogroStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { mogro_instance_load(path.as_ptr(), &mut loaded) }, MogroStatus::Ok);
    let mut a = vec![0.0; k * m];
    let mut b = vec![0.0; k * m];
    unsafe {
        assert_eq!(mogro_instance_reward_table(inst, a.as_mut_ptr(), a.len()), MogroStatus::Ok);
        assert_eq!(mogro_instance_reward_table(loaded, b.as_mut_ptr(), b.len()), MogroStatus::Ok);
        assert_eq!(mogro_instance_reward_table(inst, b.as_mut_ptr(), 3), MogroStatus::InvalidInput);
    }
    assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), {
        let mut c = vec![0.0; k * m];
        unsafe { mogro_instance_reward_table(loaded, c.as_mut_ptr(), c.len()) };
        c.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
    });

    let mut traj = ptr::null_mut();
    let st = unsafe { mogro_run_episode(inst, MogroPolicyKind::MogroRw, 1.0, 300, 11, &mut traj) };
    assert_eq!(st, MogroStatus::Ok);
    let n = unsafe { mogro_trajectory_len(traj) };
    assert_eq!(n, 300);
    assert!(unsafe { mogro_trajectory_t0(traj) } > 0);
    let mut arms = vec![usize::MAX; n];
    let mut pg = vec![f64::NAN; n];
    let mut eg = vec![f64::NAN; n];
    let st = unsafe { mogro_trajectory_copy(traj, arms.as_mut_ptr(), pg.as_mut_ptr(), eg.as_mut_ptr(), n) };
    assert_eq!(st, MogroStatus::Ok);
    assert!(arms.iter().all(|&a| a < k));
    assert!(pg.iter().zip(&eg).all(|(p, e)| *p >= 0.0 && p <= e));

    // Same seed, same trajectory.
    let mut again = ptr::null_mut();
    unsafe { mogro_run_episode(inst, MogroPolicyKind::MogroRw, 1.0, 300, 11, &mut again) };
    let mut arms2 = vec![0usize; n];
    unsafe { mogro_trajectory_copy(again, arms2.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), n) };
    assert_eq!(arms, arms2);

    let (mut verified, mut worst, mut lambda) = (false, 0.0, 0.0);
    let st = unsafe { mogro_verify_goodness(inst, 0.5, 0.05, 200, 0, &mut verified, &mut worst, &mut lambda) };
    assert_eq!(st, MogroStatus::Ok);
    assert!(lambda > 0.0 && worst.is_finite());

    unsafe {
        mogro_trajectory_free(traj);
        mogro_trajectory_free(again);
        mogro_trajectory_free(ptr::null_mut());
        mogro_instance_free(inst);
        mogro_instance_free(loaded);
        mogro_instance_free(ptr::null_mut());
    }
}

#[test]
fn instance_from_arrays_checks_shapes() {
    let features = [1.0, 0.0, 0.0, 1.0, 0.6, 0.6];
    let objectives = [1.0, 0.0, 0.0, 1.0];
    let mut inst = ptr::null_mut();
    let st = unsafe { mogro_instance_from_arrays(2, 3, 2, features.as_ptr(), objectives.as_ptr(), 0.0, &mut inst) };
    assert_eq!(st, MogroStatus::Ok);
    let mut table = [0.0; 6];
    unsafe { mogro_instance_reward_table(inst, table.as_mut_ptr(), 6) };
    assert_eq!(table, [1.0, 0.0, 0.0, 1.0, 0.6, 0.6]);
    unsafe { mogro_instance_free(inst) };

    let st = unsafe { mogro_instance_from_arrays(0, 3, 2, features.as_ptr(), objectives.as_ptr(), 0.0, &mut inst) };
    assert_eq!(st, MogroStatus::InvalidInput);
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/mogro.h");
    for name in [
        "mogro_last_error_message",
        "mogro_instance_generate",
        "mogro_instance_from_arrays",
        "mogro_instance_load",
        "mogro_instance_save",
        "mogro_instance_dims",
        "mogro_instance_reward_table",
        "mogro_instance_free",
        "mogro_pareto_gap",
        "mogro_effective_gap",
        "mogro_verify_goodness",
        "mogro_run_episode",
        "mogro_trajectory_len",
        "mogro_trajectory_t0",
        "mogro_trajectory_copy",
        "mogro_trajectory_free",
        "typedef struct MogroInstance MogroInstance",
        "MOGRO_STATUS_PANIC = 7",
    ] {
        assert!(header.contains(name), "header is missing `{name}`");
    }
}

/// Compiles and runs a C program against the generated header and the static
/// library. Skipped when no C compiler is on PATH.
#[test]
fn c_program_links_against_static_library() {
    use std::path::PathBuf;
    use std::process::Command;

    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // CARGO_TARGET_TMPDIR is <target>/tmp; the library sits in the profile dir.
    let target = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).parent().unwrap().to_path_buf();
    let lib = ["debug", "release"]
        .iter()
        .map(|p| target.join(p).join("libmogro_ffi.a"))
        .filter(|p| p.exists())
        .max_by_key(|p| std::fs::metadata(p).and_then(|m| m.modified()).ok());
    let Some(lib) = lib else {
        eprintln!("skipping: static library not built");
        return;
    };
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("mogro_c_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C smoke test exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
