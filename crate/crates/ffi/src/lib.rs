//! C ABI over the `mogro` engine.
//!
//! Every function returns a [`MogroStatus`]; on failure the message is kept
//! per thread and can be read with [`mogro_last_error_message`]. Instances and
//! trajectories are opaque heap handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use mogro::goodness::verify_goodness;
use mogro::harness::{run_episode, EpisodeStreams, Trajectory};
use mogro::instances::generate_synthetic;
use mogro::numerics::RngStream;
use mogro::pareto::{effective_pareto_gap, pareto_gap, RewardTable};
use mogro::{ContextSampler, Error, Instance, PolicyConfig, PolicyKind};

// ── Status codes ────────────────────────────────────────────────────────────

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MogroStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidConfig = 3,
    Numerical = 4,
    Io = 5,
    Format = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MogroPolicyKind {
    MogroRw = 0,
    MogroRr = 1,
    MogroGeneral = 2,
    EpsilonGreedy = 3,
    Ucb = 4,
    Thompson = 5,
}

impl MogroPolicyKind {
    fn to_core(self) -> (PolicyKind, &'static str) {
        match self {
            MogroPolicyKind::MogroRw => (PolicyKind::MogroRw, "mogro_rw"),
            MogroPolicyKind::MogroRr => (PolicyKind::MogroRr, "mogro_rr"),
            MogroPolicyKind::MogroGeneral => (PolicyKind::MogroGeneral, "mogro_general"),
            MogroPolicyKind::EpsilonGreedy => (PolicyKind::EpsilonGreedy, "epsilon_greedy"),
            MogroPolicyKind::Ucb => (PolicyKind::Ucb, "ucb"),
            MogroPolicyKind::Thompson => (PolicyKind::Thompson, "thompson"),
        }
    }
}

fn status_of(e: &Error) -> MogroStatus {
    match e {
        Error::InvalidInput(_) => MogroStatus::InvalidInput,
        Error::InvalidConfig(_) => MogroStatus::InvalidConfig,
        Error::ContractViolation(_) | Error::InconsistentSystem { .. } | Error::Rank(_) => MogroStatus::Numerical,
        Error::Io { .. } => MogroStatus::Io,
        Error::Schema(_) | Error::Parse { .. } | Error::Format(_) => MogroStatus::Format,
        Error::Episode { source, .. } => status_of(source),
    }
}

// ── Last-error slot ─────────────────────────────────────────────────────────

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mogro_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

struct Fail(MogroStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MogroStatus::NullPointer, format!("`{what}` is NULL"))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MogroStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MogroStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            MogroStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(MogroStatus::InvalidInput, format!("`{what}` is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn rows(flat: &[f64], n: usize, width: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| flat[i * width..(i + 1) * width].to_vec()).collect()
}

// ── Instances ───────────────────────────────────────────────────────────────

/// Opaque problem instance.
pub struct MogroInstance(Instance);

/// Opaque episode trajectory.
pub struct MogroTrajectory(Trajectory);

/// Generates a synthetic instance with `k` arms in dimension `d` and `m`
/// objectives.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mogro_instance_generate(
    d: usize,
    k: usize,
    m: usize,
    sigma: f64,
    seed: u64,
    out: *mut *mut MogroInstance,
) -> MogroStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mut rng = RngStream::new(seed, 0);
        let inst = generate_synthetic(&mut rng, d, k, m, sigma)?;
        *out = Box::into_raw(Box::new(MogroInstance(inst)));
        Ok(())
    })
}

/// Builds an instance from row-major `features` (k×d) and `objectives` (m×d).
///
/// # Safety
/// `features` must point to `k*d` doubles, `objectives` to `m*d` doubles and
/// `out` to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mogro_instance_from_arrays(
    d: usize,
    k: usize,
    m: usize,
    features: *const f64,
    objectives: *const f64,
    sigma: f64,
    out: *mut *mut MogroInstance,
) -> MogroStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if d == 0 || k == 0 || m == 0 {
            return Err(Fail(MogroStatus::InvalidInput, "d, k and m must be positive".into()));
        }
        let f = slice_arg(features, k * d, "features")?;
        let o = slice_arg(objectives, m * d, "objectives")?;
        let inst = Instance::new(rows(f, k, d), rows(o, m, d), sigma)?;
        *out = Box::into_raw(Box::new(MogroInstance(inst)));
        Ok(())
    })
}

/// Loads an instance JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable storage for one
/// handle.
#[no_mangle]
pub unsafe extern "C" fn mogro_instance_load(path: *const c_char, out: *mut *mut MogroInstance) -> MogroStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = path_arg(path, "path")?;
        *out = Box::into_raw(Box::new(MogroInstance(Instance::load(&p)?)));
        Ok(())
    })
}

/// Saves an instance as JSON.
///
/// # Safety
/// `inst` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mogro_instance_save(inst: *const MogroInstance, path: *const c_char) -> MogroStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let p = path_arg(path, "path")?;
        inst.0.save(&p)?;
        Ok(())
    })
}

/// Writes the dimensions of an instance. Any output pointer may be NULL.
///
/// # Safety
/// `inst` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mogro_instance_dims(
    inst: *const MogroInstance,
    d: *mut usize,
    k: *mut usize,
    m: *mut usize,
) -> MogroStatus {
    guard(|| {
        let inst = &inst.as_ref().ok_or_else(|| null("inst"))?.0;
        for (p, v) in [(d, inst.d), (k, inst.k), (m, inst.m)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Copies the k×m mean-reward table (row-major) into `out`.
///
/// # Safety
/// `inst` must be a live handle and `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mogro_instance_reward_table(
    inst: *const MogroInstance,
    out: *mut f64,
    len: usize,
) -> MogroStatus {
    guard(|| {
        let inst = &inst.as_ref().ok_or_else(|| null("inst"))?.0;
        let need = inst.k * inst.m;
        if len < need {
            return Err(Fail(MogroStatus::InvalidInput, format!("buffer holds {len}, need {need}")));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dst = std::slice::from_raw_parts_mut(out, need);
        for (i, row) in inst.reward_table().mu.iter().enumerate() {
            dst[i * inst.m..(i + 1) * inst.m].copy_from_slice(row);
        }
        Ok(())
    })
}

/// Releases an instance. NULL is ignored.
///
/// # Safety
/// `inst` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mogro_instance_free(inst: *mut MogroInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

// ── Gaps ────────────────────────────────────────────────────────────────────

unsafe fn table_arg(mu: *const f64, k: usize, m: usize, arm: usize) -> Result<RewardTable, Fail> {
    if k == 0 || m == 0 {
        return Err(Fail(MogroStatus::InvalidInput, "k and m must be positive".into()));
    }
    if arm >= k {
        return Err(Fail(MogroStatus::InvalidInput, format!("arm {arm} out of range for k = {k}")));
    }
    let flat = slice_arg(mu, k * m, "mu")?;
    Ok(RewardTable::from_flat(k, m, flat)?)
}

/// Pareto suboptimality gap of `arm` in a row-major k×m reward table.
///
/// # Safety
/// `mu` must point to `k*m` doubles and `gap` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mogro_pareto_gap(
    mu: *const f64,
    k: usize,
    m: usize,
    arm: usize,
    gap: *mut f64,
) -> MogroStatus {
    guard(|| {
        let gap = gap.as_mut().ok_or_else(|| null("gap"))?;
        *gap = pareto_gap(&table_arg(mu, k, m, arm)?, arm);
        Ok(())
    })
}

/// Effective Pareto gap of `arm`. When `witness` is non-NULL it receives the
/// mixture over the `k` arms that certifies a positive gap (all zeros when
/// the arm is on the effective front).
///
/// # Safety
/// `mu` must point to `k*m` doubles, `gap` must be writable and `witness`
/// NULL or writable for `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn mogro_effective_gap(
    mu: *const f64,
    k: usize,
    m: usize,
    arm: usize,
    gap: *mut f64,
    witness: *mut f64,
) -> MogroStatus {
    guard(|| {
        let gap = gap.as_mut().ok_or_else(|| null("gap"))?;
        let r = effective_pareto_gap(&table_arg(mu, k, m, arm)?, arm);
        *gap = r.effective_gap;
        if !witness.is_null() {
            let dst = std::slice::from_raw_parts_mut(witness, k);
            match &r.witness_weight {
                Some(w) => dst.copy_from_slice(w),
                None => dst.fill(0.0),
            }
        }
        Ok(())
    })
}

// ── Goodness ────────────────────────────────────────────────────────────────

/// Monte-Carlo γ-goodness check with `n_directions` samples per ball. Any
/// output pointer may be NULL.
///
/// # Safety
/// `inst` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mogro_verify_goodness(
    inst: *const MogroInstance,
    gamma: f64,
    alpha: f64,
    n_directions: usize,
    seed: u64,
    verified: *mut bool,
    worst_margin: *mut f64,
    lambda: *mut f64,
) -> MogroStatus {
    guard(|| {
        let inst = &inst.as_ref().ok_or_else(|| null("inst"))?.0;
        let mut rng = RngStream::new(seed, 0);
        let report = verify_goodness(inst, gamma, alpha, n_directions, &mut rng)?;
        if let Some(p) = verified.as_mut() {
            *p = report.verified;
        }
        if let Some(p) = worst_margin.as_mut() {
            *p = report.worst_margin;
        }
        if let Some(p) = lambda.as_mut() {
            *p = report.lambda;
        }
        Ok(())
    })
}

// ── Episodes ────────────────────────────────────────────────────────────────

/// Runs one fixed-feature episode of `horizon` rounds with eigenvalue
/// threshold `b` and default policy settings.
///
/// # Safety
/// `inst` must be a live handle and `out` writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mogro_run_episode(
    inst: *const MogroInstance,
    kind: MogroPolicyKind,
    b: f64,
    horizon: usize,
    seed: u64,
    out: *mut *mut MogroTrajectory,
) -> MogroStatus {
    guard(|| {
        let inst = &inst.as_ref().ok_or_else(|| null("inst"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        if horizon == 0 {
            return Err(Fail(MogroStatus::InvalidInput, "horizon must be positive".into()));
        }
        let (kind, name) = kind.to_core();
        let cfg = PolicyConfig::new(name, kind, b);
        let mut streams = EpisodeStreams::derive(seed, 0, 0, name);
        let ep = run_episode(inst, &ContextSampler::Fixed, &cfg, horizon, b, &mut streams)?;
        *out = Box::into_raw(Box::new(MogroTrajectory(ep.trajectory)));
        Ok(())
    })
}

/// Number of rounds in a trajectory (0 for NULL).
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mogro_trajectory_len(traj: *const MogroTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.rows.len())
}

/// Exploration rounds before the gate opened, or -1 if it never did.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mogro_trajectory_t0(traj: *const MogroTrajectory) -> i64 {
    traj.as_ref()
        .and_then(|t| t.0.t0)
        .map_or(-1, |v| v as i64)
}

/// Copies per-round arms and gaps. Any output pointer may be NULL; non-NULL
/// buffers must hold `len` elements with `len` ≥ the trajectory length.
///
/// # Safety
/// `traj` must be a live handle; non-NULL buffers must be writable for `len`
/// elements.
#[no_mangle]
pub unsafe extern "C" fn mogro_trajectory_copy(
    traj: *const MogroTrajectory,
    arms: *mut usize,
    pareto_gaps: *mut f64,
    effective_gaps: *mut f64,
    len: usize,
) -> MogroStatus {
    guard(|| {
        let t = &traj.as_ref().ok_or_else(|| null("traj"))?.0;
        let n = t.rows.len();
        if len < n {
            return Err(Fail(MogroStatus::InvalidInput, format!("buffer holds {len}, need {n}")));
        }
        for (i, r) in t.rows.iter().enumerate() {
            if !arms.is_null() {
                *arms.add(i) = r.arm;
            }
            if !pareto_gaps.is_null() {
                *pareto_gaps.add(i) = r.pareto_gap;
            }
            if !effective_gaps.is_null() {
                *effective_gaps.add(i) = r.effective_gap;
            }
        }
        Ok(())
    })
}

/// Releases a trajectory. NULL is ignored.
///
/// # Safety
/// `traj` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mogro_trajectory_free(traj: *mut MogroTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}
