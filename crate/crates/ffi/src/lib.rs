//! C ABI for the spbandit solvers.
//!
//! Every fallible function returns an [`SpbStatus`] and writes its results
//! through caller-provided pointers, only on success. Handles come from a
//! `*_new` function and must be released with the matching `*_free`. After a
//! failure, [`spb_last_error_message`] returns a description of it (per
//! thread). Users and arms are 0-based. Panics never cross the boundary;
//! they surface as [`SpbStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use spbandit::model::{validate_instance, ArmOrder, Instance, InstanceFile, Matching, ModelError};
use spbandit::offline::{brute_force_opt, greedy_max, sp_matching_any_order, OfflineError};
use spbandit::pqtree::{PQTree, PqError};
use spbandit::sp::{asp_delta, extract_order, SpError};
use spbandit::PreferenceMatrix;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// No column order makes the matrix single-peaked.
    NotSinglePeaked = 3,
    Solver = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque problem instance.
pub struct SpbInstance {
    inner: Instance,
}

/// Opaque PQ-tree.
pub struct SpbPqTree {
    inner: PQTree,
}

struct Failure {
    status: SpbStatus,
    message: String,
}

impl Failure {
    fn new(status: SpbStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::new(SpbStatus::InvalidArgument, e.to_string())
    }
}

impl From<SpError> for Failure {
    fn from(e: SpError) -> Self {
        let status = match e {
            SpError::OrderLength { .. } => SpbStatus::InvalidArgument,
            _ => SpbStatus::NotSinglePeaked,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<OfflineError> for Failure {
    fn from(e: OfflineError) -> Self {
        match e {
            OfflineError::NotPsp(inner) => inner.into(),
            OfflineError::InvalidCosts(_) => {
                Failure::new(SpbStatus::InvalidArgument, e.to_string())
            }
            _ => Failure::new(SpbStatus::Solver, e.to_string()),
        }
    }
}

impl From<PqError> for Failure {
    fn from(e: PqError) -> Self {
        Failure::new(SpbStatus::InvalidArgument, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpbStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".to_string());
        Err(Failure::new(SpbStatus::Panic, msg))
    });
    match outcome {
        Ok(()) => SpbStatus::Ok,
        Err(f) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = f.message);
            f.status
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::new(SpbStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn read<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn write<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a>(p: *const SpbInstance) -> Result<&'a Instance, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null("instance"))
}

unsafe fn tree<'a>(p: *mut SpbPqTree) -> Result<&'a mut PQTree, Failure> {
    p.as_mut().map(|h| &mut h.inner).ok_or_else(|| null("tree"))
}

fn matching_for(inst: &Instance, assignment: &[usize]) -> Result<Matching, Failure> {
    if assignment.len() != inst.users() {
        return Err(Failure::new(
            SpbStatus::InvalidArgument,
            format!(
                "{} assignments for {} users",
                assignment.len(),
                inst.users()
            ),
        ));
    }
    Ok(Matching::new(assignment.to_vec())?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated and
/// always NUL-terminated when `capacity > 0`) and returns its full length in
/// bytes, excluding the terminator. Returns 0 when no call has failed yet.
///
/// # Safety
/// `buf` must be null or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn spb_last_error_message(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && capacity > 0 {
            let n = msg.len().min(capacity - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds an instance from a row-major `users x arms` matrix with entries in
/// `[0, 1]`, `arms` costs in `1..=budget`, and `horizon >= max(users, arms)`.
///
/// # Safety
/// `theta` must point to `users * arms` doubles, `costs` to `arms` values and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn spb_instance_new(
    users: usize,
    arms: usize,
    theta: *const f64,
    costs: *const u32,
    budget: u32,
    horizon: u64,
    out_instance: *mut *mut SpbInstance,
) -> SpbStatus {
    guard(|| {
        let slot = out(out_instance, "out_instance")?;
        let len = users
            .checked_mul(arms)
            .ok_or_else(|| Failure::new(SpbStatus::InvalidArgument, "users * arms overflows"))?;
        let values = read(theta, len, "theta")?.to_vec();
        let costs = read(costs, arms, "costs")?.to_vec();
        let matrix = PreferenceMatrix::new(users, arms, values)?;
        let inner = Instance::new(matrix, costs, budget, horizon)?;
        *slot = Box::into_raw(Box::new(SpbInstance { inner }));
        Ok(())
    })
}

/// Parses an instance from the JSON instance-file format.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_instance` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spb_instance_from_json(
    json: *const c_char,
    out_instance: *mut *mut SpbInstance,
) -> SpbStatus {
    guard(|| {
        let slot = out(out_instance, "out_instance")?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure::new(SpbStatus::InvalidArgument, e.to_string()))?;
        let raw = InstanceFile::from_json(text)
            .map_err(|e| Failure::new(SpbStatus::InvalidArgument, e.to_string()))?;
        let inner = validate_instance(&raw)?;
        *slot = Box::into_raw(Box::new(SpbInstance { inner }));
        Ok(())
    })
}

/// Releases an instance. Null is ignored.
///
/// # Safety
/// `instance` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spb_instance_free(instance: *mut SpbInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of users, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spb_instance_users(instance: *const SpbInstance) -> usize {
    instance.as_ref().map_or(0, |h| h.inner.users())
}

/// Number of arms, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spb_instance_arms(instance: *const SpbInstance) -> usize {
    instance.as_ref().map_or(0, |h| h.inner.arms())
}

/// Value of a matching (one arm per user).
///
/// # Safety
/// `assignment` must point to `len` values; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spb_matching_value(
    instance: *const SpbInstance,
    assignment: *const usize,
    len: usize,
    out_value: *mut f64,
) -> SpbStatus {
    guard(|| {
        let inst = handle(instance)?;
        let m = matching_for(inst, read(assignment, len, "assignment")?)?;
        *out(out_value, "out_value")? = m.value(inst.theta())?;
        Ok(())
    })
}

/// Budget feasibility and total cost of the distinct selected arms.
///
/// # Safety
/// `assignment` must point to `len` values; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn spb_matching_feasible(
    instance: *const SpbInstance,
    assignment: *const usize,
    len: usize,
    out_feasible: *mut bool,
    out_cost: *mut u64,
) -> SpbStatus {
    guard(|| {
        let inst = handle(instance)?;
        let m = matching_for(inst, read(assignment, len, "assignment")?)?;
        let f = m.feasibility(inst)?;
        *out(out_feasible, "out_feasible")? = f.feasible;
        *out(out_cost, "out_cost")? = f.cost;
        Ok(())
    })
}

/// Optimal matching of a matrix that is single-peaked under some column
/// order (found automatically). Fails with `NOT_SINGLE_PEAKED` otherwise.
///
/// # Safety
/// `out_assignment` must hold `users` values; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spb_sp_matching(
    instance: *const SpbInstance,
    out_assignment: *mut usize,
    out_value: *mut f64,
) -> SpbStatus {
    guard(|| {
        let inst = handle(instance)?;
        let assignment = write(out_assignment, inst.users(), "out_assignment")?;
        let value = out(out_value, "out_value")?;
        let (sol, _) = sp_matching_any_order(inst.theta(), inst.costs(), inst.budget())?;
        assignment.copy_from_slice(sol.matching.assignment());
        *value = sol.value;
        Ok(())
    })
}

/// Optimal matching by exhaustive search over arm subsets (any matrix,
/// at most 22 arms).
///
/// # Safety
/// `out_assignment` must hold `users` values; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spb_brute_force_opt(
    instance: *const SpbInstance,
    out_assignment: *mut usize,
    out_value: *mut f64,
) -> SpbStatus {
    guard(|| {
        let inst = handle(instance)?;
        let assignment = write(out_assignment, inst.users(), "out_assignment")?;
        let value = out(out_value, "out_value")?;
        let sol = brute_force_opt(inst.theta(), inst.costs(), inst.budget())?;
        assignment.copy_from_slice(sol.matching.assignment());
        *value = sol.value;
        Ok(())
    })
}

/// Greedy+Max arm subset (sorted) and its coverage value.
///
/// # Safety
/// `out_selected` must hold `capacity` values; the other outputs must be
/// writable. `capacity >= arms` always suffices.
#[no_mangle]
pub unsafe extern "C" fn spb_greedy_max(
    instance: *const SpbInstance,
    out_selected: *mut usize,
    capacity: usize,
    out_len: *mut usize,
    out_value: *mut f64,
) -> SpbStatus {
    guard(|| {
        let inst = handle(instance)?;
        let len = out(out_len, "out_len")?;
        let value = out(out_value, "out_value")?;
        let (subset, v) = greedy_max(inst.theta(), inst.costs(), inst.budget());
        if subset.len() > capacity {
            *len = subset.len();
            return Err(Failure::new(
                SpbStatus::BufferTooSmall,
                format!("{} arms selected, capacity {capacity}", subset.len()),
            ));
        }
        write(out_selected, subset.len(), "out_selected")?.copy_from_slice(&subset);
        *len = subset.len();
        *value = v;
        Ok(())
    })
}

/// Column order from PQ-tree order extraction at tolerance `eps`.
///
/// # Safety
/// `out_order` must hold `arms` values.
#[no_mangle]
pub unsafe extern "C" fn spb_extract_order(
    instance: *const SpbInstance,
    eps: f64,
    out_order: *mut usize,
) -> SpbStatus {
    guard(|| {
        let inst = handle(instance)?;
        let dst = write(out_order, inst.arms(), "out_order")?;
        if eps.is_nan() || eps < 0.0 {
            return Err(Failure::new(SpbStatus::InvalidArgument, "eps must be >= 0"));
        }
        let order = extract_order(inst.theta(), eps)?;
        dst.copy_from_slice(order.as_slice());
        Ok(())
    })
}

/// Smallest delta for which the matrix is delta-approximately single-peaked
/// under `order` (a permutation of the arms).
///
/// # Safety
/// `order` must point to `arms` values; `out_delta` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spb_asp_delta(
    instance: *const SpbInstance,
    order: *const usize,
    out_delta: *mut f64,
) -> SpbStatus {
    guard(|| {
        let inst = handle(instance)?;
        let order = ArmOrder::new(read(order, inst.arms(), "order")?.to_vec())?;
        *out(out_delta, "out_delta")? = asp_delta(inst.theta(), &order)?.delta;
        Ok(())
    })
}

/// Fresh PQ-tree over arms `0..arms`, admitting every permutation.
///
/// # Safety
/// `out_tree` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spb_pqtree_new(arms: usize, out_tree: *mut *mut SpbPqTree) -> SpbStatus {
    guard(|| {
        let slot = out(out_tree, "out_tree")?;
        let inner = PQTree::new(arms)?;
        *slot = Box::into_raw(Box::new(SpbPqTree { inner }));
        Ok(())
    })
}

/// Releases a tree. Null is ignored.
///
/// # Safety
/// `tree` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spb_pqtree_free(tree: *mut SpbPqTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Requires the `len` arms of `set` to be contiguous. `*out_ok` is false,
/// and the tree unchanged, when no admitted permutation satisfies this.
///
/// # Safety
/// `set` must point to `len` values; `out_ok` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spb_pqtree_reduce(
    tree_handle: *mut SpbPqTree,
    set: *const usize,
    len: usize,
    out_ok: *mut bool,
) -> SpbStatus {
    guard(|| {
        let t = tree(tree_handle)?;
        let set = read(set, len, "set")?;
        let ok = out(out_ok, "out_ok")?;
        *ok = t.reduce(set)?;
        Ok(())
    })
}

/// The canonical admitted permutation.
///
/// # Safety
/// `out_order` must hold as many values as the tree has arms.
#[no_mangle]
pub unsafe extern "C" fn spb_pqtree_frontier(
    tree_handle: *mut SpbPqTree,
    out_order: *mut usize,
) -> SpbStatus {
    guard(|| {
        let t = tree(tree_handle)?;
        let dst = write(out_order, t.universe(), "out_order")?;
        dst.copy_from_slice(t.frontier().as_slice());
        Ok(())
    })
}

/// Number of admitted permutations, saturating at `UINT64_MAX`.
///
/// # Safety
/// `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spb_pqtree_frontier_count(
    tree_handle: *mut SpbPqTree,
    out_count: *mut u64,
) -> SpbStatus {
    guard(|| {
        let t = tree(tree_handle)?;
        *out(out_count, "out_count")? = u64::try_from(t.frontier_count()).unwrap_or(u64::MAX);
        Ok(())
    })
}
