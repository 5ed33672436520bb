//! C interface over instance generation, file loading, and matching. Every
//! fallible call returns a status code; on failure a message for the calling
//! thread is retrievable with `sm_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use seedmatch::csbm::{sample_instance, CsbmParams};
use seedmatch::error::Error;
use seedmatch::graph::Graph;
use seedmatch::harness::{accuracy, read_indexed_edges, read_seed_rows};
use seedmatch::matchers::{run_method, Method};

/// Success.
pub const SM_OK: i32 = 0;
/// A required pointer argument was null.
pub const SM_ERR_NULL_ARGUMENT: i32 = -1;
/// A parameter was out of range or otherwise rejected.
pub const SM_ERR_INVALID_PARAM: i32 = -2;
/// A file could not be read.
pub const SM_ERR_IO: i32 = -3;
/// A file was readable but malformed.
pub const SM_ERR_PARSE: i32 = -4;
/// The LP backend failed to solve the relaxation.
pub const SM_ERR_SOLVER: i32 = -5;
/// The instance carries no ground truth, so no accuracy exists.
pub const SM_ERR_NO_TRUTH: i32 = -6;
/// The caller's buffer is too small for the requested data.
pub const SM_ERR_BUFFER_TOO_SMALL: i32 = -7;
/// A string argument was not valid UTF-8.
pub const SM_ERR_BAD_UTF8: i32 = -8;
/// An unexpected internal failure; treat the handle as poisoned.
pub const SM_ERR_INTERNAL: i32 = -9;

/// A matching problem: two graphs, the revealed correspondence, and
/// optionally the full ground truth.
pub struct SmInstance {
    a: Graph,
    b: Graph,
    revealed: Vec<usize>,
    pi_r: Vec<usize>,
    truth: Option<Vec<usize>>,
}

/// A completed matching: the full permutation plus metadata.
pub struct SmMatch {
    pi_hat: Vec<usize>,
    accuracy: Option<f64>,
    elapsed_seconds: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let owned = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn fail(code: i32, message: &str) -> i32 {
    set_error(message);
    code
}

fn fail_with(err: &Error) -> i32 {
    let code = match err {
        Error::Io { .. } => SM_ERR_IO,
        Error::Parse { .. } => SM_ERR_PARSE,
        Error::LpBackend(_) => SM_ERR_SOLVER,
        _ => SM_ERR_INVALID_PARAM,
    };
    fail(code, &err.to_string())
}

fn guarded(body: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(_) => fail(SM_ERR_INTERNAL, "internal panic"),
    }
}

unsafe fn required_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, i32> {
    if ptr.is_null() {
        return Err(fail(SM_ERR_NULL_ARGUMENT, &format!("{name} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(SM_ERR_BAD_UTF8, &format!("{name} is not valid utf-8")))
}

/// Returns the message for the most recent failure on the calling thread.
/// The pointer stays valid until the next failing call on the same thread;
/// it is never null.
#[no_mangle]
pub extern "C" fn sm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Samples a fresh instance of the correlated two-community model and
/// reveals a `seed_fraction` share of the true correspondence. On success
/// writes an owned handle to `out`; release it with `sm_instance_free`.
#[no_mangle]
pub unsafe extern "C" fn sm_instance_generate(
    n: u64,
    a: f64,
    b: f64,
    s: f64,
    seed_fraction: f64,
    rng_seed: u64,
    out: *mut *mut SmInstance,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return fail(SM_ERR_NULL_ARGUMENT, "out is null");
        }
        let params = CsbmParams { n: n as usize, a, b, s, rng_seed };
        match sample_instance(&params, seed_fraction) {
            Ok(inst) => {
                let pi_r: Vec<usize> =
                    inst.revealed.iter().map(|&r| inst.pi_star[r]).collect();
                let handle = SmInstance {
                    a: inst.a,
                    b: inst.b,
                    revealed: inst.revealed,
                    pi_r,
                    truth: Some(inst.pi_star),
                };
                *out = Box::into_raw(Box::new(handle));
                SM_OK
            }
            Err(err) => fail_with(&err),
        }
    })
}

fn load_instance(
    a_path: &str,
    b_path: &str,
    seeds_path: &str,
    truth_path: Option<&str>,
) -> seedmatch::error::Result<SmInstance> {
    let (a_edges, a_n) = read_indexed_edges(Path::new(a_path))?;
    let (b_edges, b_n) = read_indexed_edges(Path::new(b_path))?;
    let seed_rows = read_seed_rows(Path::new(seeds_path))?;
    let truth_rows = truth_path.map(|p| read_seed_rows(Path::new(p))).transpose()?;

    let mut n = a_n.max(b_n);
    for &(u, p, _) in &seed_rows {
        n = n.max(u + 1).max(p + 1);
    }
    if let Some(rows) = &truth_rows {
        for &(u, p, _) in rows {
            n = n.max(u + 1).max(p + 1);
        }
    }

    let mut seeds: Vec<(usize, usize)> =
        seed_rows.into_iter().map(|(u, p, _)| (u, p)).collect();
    seeds.sort_unstable();
    let mut seen = vec![false; n];
    for &(u, _) in &seeds {
        if seen[u] {
            return Err(Error::InvalidParam(format!("vertex {u} revealed twice")));
        }
        seen[u] = true;
    }

    let truth = match truth_rows {
        None => None,
        Some(rows) => {
            let mut full = vec![usize::MAX; n];
            for (u, p, _) in rows {
                full[u] = p;
            }
            if let Some(missing) = full.iter().position(|&p| p == usize::MAX) {
                return Err(Error::InvalidParam(format!(
                    "truth file does not cover vertex {missing}"
                )));
            }
            Some(full)
        }
    };

    Ok(SmInstance {
        a: Graph::from_edges(n, a_edges),
        b: Graph::from_edges(n, b_edges),
        revealed: seeds.iter().map(|&(u, _)| u).collect(),
        pi_r: seeds.iter().map(|&(_, p)| p).collect(),
        truth,
    })
}

/// Loads an instance from edge-list files for both graphs and a seeds csv
/// (`u,pi_u,sigma_u` rows). `truth_path` may be null; without it the
/// instance carries no ground truth and accuracies are unavailable. Vertices
/// are zero-based indices; the vertex count is the largest index mentioned
/// in any file plus one.
#[no_mangle]
pub unsafe extern "C" fn sm_instance_load(
    a_path: *const c_char,
    b_path: *const c_char,
    seeds_path: *const c_char,
    truth_path: *const c_char,
    out: *mut *mut SmInstance,
) -> i32 {
    guarded(|| {
        if out.is_null() {
            return fail(SM_ERR_NULL_ARGUMENT, "out is null");
        }
        let a_path = match required_str(a_path, "a_path") {
            Ok(p) => p,
            Err(code) => return code,
        };
        let b_path = match required_str(b_path, "b_path") {
            Ok(p) => p,
            Err(code) => return code,
        };
        let seeds_path = match required_str(seeds_path, "seeds_path") {
            Ok(p) => p,
            Err(code) => return code,
        };
        let truth_path = if truth_path.is_null() {
            None
        } else {
            match required_str(truth_path, "truth_path") {
                Ok(p) => Some(p),
                Err(code) => return code,
            }
        };
        match load_instance(a_path, b_path, seeds_path, truth_path) {
            Ok(handle) => {
                *out = Box::into_raw(Box::new(handle));
                SM_OK
            }
            Err(err) => fail_with(&err),
        }
    })
}

/// Writes the instance's vertex count to `out`.
#[no_mangle]
pub unsafe extern "C" fn sm_instance_vertex_count(
    inst: *const SmInstance,
    out: *mut u64,
) -> i32 {
    guarded(|| {
        if inst.is_null() || out.is_null() {
            return fail(SM_ERR_NULL_ARGUMENT, "inst and out must be non-null");
        }
        *out = (*inst).a.n() as u64;
        SM_OK
    })
}

/// Writes the number of revealed vertices to `out`.
#[no_mangle]
pub unsafe extern "C" fn sm_instance_seed_count(
    inst: *const SmInstance,
    out: *mut u64,
) -> i32 {
    guarded(|| {
        if inst.is_null() || out.is_null() {
            return fail(SM_ERR_NULL_ARGUMENT, "inst and out must be non-null");
        }
        *out = (*inst).revealed.len() as u64;
        SM_OK
    })
}

/// Releases an instance handle. Null is accepted and ignored.
#[no_mangle]
pub unsafe extern "C" fn sm_instance_free(inst: *mut SmInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Runs one matcher on the instance. `method` is one of
/// `overlap_hungarian`, `overlap_greedy`, `lp_exact`, `fw_linear`, `hop2`;
/// `fw_iterations` only affects `fw_linear`. On success writes an owned
/// handle to `out`; release it with `sm_match_free`.
#[no_mangle]
pub unsafe extern "C" fn sm_match_run(
    inst: *const SmInstance,
    method: *const c_char,
    fw_iterations: u64,
    out: *mut *mut SmMatch,
) -> i32 {
    guarded(|| {
        if inst.is_null() || out.is_null() {
            return fail(SM_ERR_NULL_ARGUMENT, "inst and out must be non-null");
        }
        let name = match required_str(method, "method") {
            Ok(name) => name,
            Err(code) => return code,
        };
        let method: Method = match name.parse() {
            Ok(method) => method,
            Err(err) => return fail_with(&err),
        };
        let inst = &*inst;
        match run_method(
            method,
            &inst.a,
            &inst.b,
            &inst.revealed,
            &inst.pi_r,
            fw_iterations as usize,
        ) {
            Ok(result) => {
                let acc = inst.truth.as_ref().and_then(|truth| {
                    let mut is_revealed = vec![false; inst.a.n()];
                    for &r in &inst.revealed {
                        is_revealed[r] = true;
                    }
                    let unrevealed: Vec<usize> =
                        (0..inst.a.n()).filter(|&u| !is_revealed[u]).collect();
                    accuracy(&result.pi_hat, truth, &unrevealed).ok()
                });
                let handle = SmMatch {
                    pi_hat: result.pi_hat,
                    accuracy: acc,
                    elapsed_seconds: result.elapsed_seconds,
                };
                *out = Box::into_raw(Box::new(handle));
                SM_OK
            }
            Err(err) => fail_with(&err),
        }
    })
}

/// Writes the matched permutation's length to `out`.
#[no_mangle]
pub unsafe extern "C" fn sm_match_vertex_count(m: *const SmMatch, out: *mut u64) -> i32 {
    guarded(|| {
        if m.is_null() || out.is_null() {
            return fail(SM_ERR_NULL_ARGUMENT, "match and out must be non-null");
        }
        *out = (*m).pi_hat.len() as u64;
        SM_OK
    })
}

/// Copies the full permutation into the caller's buffer, one image per
/// vertex. `capacity` is the buffer length in elements and must be at least
/// the match's vertex count.
#[no_mangle]
pub unsafe extern "C" fn sm_match_permutation(
    m: *const SmMatch,
    out: *mut u64,
    capacity: u64,
) -> i32 {
    guarded(|| {
        if m.is_null() || out.is_null() {
            return fail(SM_ERR_NULL_ARGUMENT, "match and out must be non-null");
        }
        let pi_hat = &(*m).pi_hat;
        if (capacity as usize) < pi_hat.len() {
            return fail(
                SM_ERR_BUFFER_TOO_SMALL,
                &format!("permutation needs {} elements, buffer holds {capacity}", pi_hat.len()),
            );
        }
        let target = std::slice::from_raw_parts_mut(out, pi_hat.len());
        for (slot, &image) in target.iter_mut().zip(pi_hat.iter()) {
            *slot = image as u64;
        }
        SM_OK
    })
}

/// Writes the accuracy over unrevealed vertices to `out`. Fails with
/// `SM_ERR_NO_TRUTH` when the instance was loaded without ground truth.
#[no_mangle]
pub unsafe extern "C" fn sm_match_accuracy(m: *const SmMatch, out: *mut f64) -> i32 {
    guarded(|| {
        if m.is_null() || out.is_null() {
            return fail(SM_ERR_NULL_ARGUMENT, "match and out must be non-null");
        }
        match (*m).accuracy {
            Some(acc) => {
                *out = acc;
                SM_OK
            }
            None => fail(SM_ERR_NO_TRUTH, "instance has no ground truth"),
        }
    })
}

/// Writes the matching-stage runtime in seconds to `out`.
#[no_mangle]
pub unsafe extern "C" fn sm_match_elapsed_seconds(m: *const SmMatch, out: *mut f64) -> i32 {
    guarded(|| {
        if m.is_null() || out.is_null() {
            return fail(SM_ERR_NULL_ARGUMENT, "match and out must be non-null");
        }
        *out = (*m).elapsed_seconds;
        SM_OK
    })
}

/// Releases a match handle. Null is accepted and ignored.
#[no_mangle]
pub unsafe extern "C" fn sm_match_free(m: *mut SmMatch) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
