//! C interface to `bertrand-core`.
//!
//! Objects are opaque handles created by `bn_*` constructors and released with the
//! matching `*_free`. Fallible calls return a [`BnStatus`]; on failure the message is
//! available from [`bn_last_error`] on the same thread. Strings returned through out
//! parameters are owned by the caller and must be released with [`bn_string_free`].
//! Networks, profiles and verification use exact rational arithmetic.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bertrand_core::closed_form::{clique_candidate, solve_line, solve_star, solve_tree, solve_two};
use bertrand_core::verifier::{verify_profile, Verdict};
use bertrand_core::{Network, Rational, StrategyProfile, Tolerance};

/// Network of sellers and markets.
pub struct BnNetwork {
    net: Network<Rational>,
}

/// Strategy profile bound to the network it was built for.
pub struct BnProfile {
    net: Network<Rational>,
    profile: StrategyProfile<Rational>,
    utilities: Option<Vec<Rational>>,
}

/// Result of verifying a profile.
pub struct BnReport {
    verdict: Verdict,
    max_violation: f64,
    worst_seller: Option<usize>,
    utilities: Vec<f64>,
    json: String,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Unsupported = 4,
    OutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnSolveKind {
    Two = 0,
    Line = 1,
    Tree = 2,
    Star = 3,
    Clique = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnVerdict {
    Equilibrium = 0,
    NotEquilibrium = 1,
    Inconclusive = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn fail(status: BnStatus, msg: impl Into<String>) -> BnStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into `BnStatus::Panic` and clearing the error on success.
fn guard(f: impl FnOnce() -> BnStatus) -> BnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(BnStatus::Ok) => {
            set_error("");
            BnStatus::Ok
        }
        Ok(s) => s,
        Err(_) => fail(BnStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, BnStatus> {
    if p.is_null() {
        return Err(fail(BnStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(BnStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Parses a network from its JSON document.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_network_from_json(json: *const c_char, out: *mut *mut BnNetwork) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return fail(BnStatus::NullPointer, "null out pointer");
        }
        *out = ptr::null_mut();
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Network::<Rational>::from_json_str(text) {
            Ok(net) => {
                *out = Box::into_raw(Box::new(BnNetwork { net }));
                BnStatus::Ok
            }
            Err(e) => fail(BnStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Number of sellers; 0 for a null handle.
///
/// # Safety
/// `net` must be null or a handle from `bn_network_from_json`.
#[no_mangle]
pub unsafe extern "C" fn bn_network_len(net: *const BnNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.net.len())
}

/// # Safety
/// `net` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bn_network_free(net: *mut BnNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Closed-form equilibrium of the given kind.
///
/// # Safety
/// `net` must be a live network handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_solve(net: *const BnNetwork, kind: BnSolveKind, out: *mut *mut BnProfile) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return fail(BnStatus::NullPointer, "null out pointer");
        }
        *out = ptr::null_mut();
        let Some(n) = net.as_ref() else { return fail(BnStatus::NullPointer, "null network") };
        let net = &n.net;
        let sol = match kind {
            BnSolveKind::Two => solve_two(net),
            BnSolveKind::Line => solve_line(net),
            BnSolveKind::Tree => solve_tree(net),
            BnSolveKind::Star => solve_star(net, None).map(|s| s.solution),
            BnSolveKind::Clique => clique_candidate(net).map(|c| c.solution),
        };
        match sol {
            Ok(sol) => {
                *out = Box::into_raw(Box::new(BnProfile {
                    net: net.clone(),
                    profile: sol.profile,
                    utilities: Some(sol.utilities),
                }));
                BnStatus::Ok
            }
            Err(e) => fail(BnStatus::Unsupported, e.to_string()),
        }
    })
}

/// Parses a profile for `net` from its JSON document.
///
/// # Safety
/// `net` must be a live network handle, `json` a nul-terminated string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bn_profile_from_json(
    net: *const BnNetwork,
    json: *const c_char,
    out: *mut *mut BnProfile,
) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return fail(BnStatus::NullPointer, "null out pointer");
        }
        *out = ptr::null_mut();
        let Some(n) = net.as_ref() else { return fail(BnStatus::NullPointer, "null network") };
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let value = match text.parse() {
            Ok(v) => v,
            Err(e) => return fail(BnStatus::InvalidInput, format!("invalid JSON: {e}")),
        };
        match StrategyProfile::from_json(&value, &n.net, Tolerance::exact()) {
            Ok(profile) => {
                *out = Box::into_raw(Box::new(BnProfile { net: n.net.clone(), profile, utilities: None }));
                BnStatus::Ok
            }
            Err(e) => fail(BnStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Writes the profile's JSON document to `*out`; free it with `bn_string_free`.
///
/// # Safety
/// `profile` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_profile_to_json(profile: *const BnProfile, out: *mut *mut c_char) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return fail(BnStatus::NullPointer, "null out pointer");
        }
        *out = ptr::null_mut();
        let Some(p) = profile.as_ref() else { return fail(BnStatus::NullPointer, "null profile") };
        *out = to_c_string(p.profile.to_json(&p.net).to_string());
        BnStatus::Ok
    })
}

/// Utility of seller `i` as computed by the solver. Only profiles from `bn_solve` carry
/// utilities; use `bn_report_utility` otherwise.
///
/// # Safety
/// `profile` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_profile_utility(profile: *const BnProfile, i: usize, out: *mut f64) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return fail(BnStatus::NullPointer, "null out pointer");
        }
        let Some(p) = profile.as_ref() else { return fail(BnStatus::NullPointer, "null profile") };
        let Some(u) = &p.utilities else { return fail(BnStatus::Unsupported, "profile carries no utilities") };
        match u.get(i) {
            Some(v) => {
                *out = v.to_f64();
                BnStatus::Ok
            }
            None => fail(BnStatus::OutOfRange, format!("seller index {i} out of range")),
        }
    })
}

/// # Safety
/// `profile` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bn_profile_free(profile: *mut BnProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Exact equilibrium check of `profile` on `net`.
///
/// # Safety
/// Both handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_verify(net: *const BnNetwork, profile: *const BnProfile, out: *mut *mut BnReport) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return fail(BnStatus::NullPointer, "null out pointer");
        }
        *out = ptr::null_mut();
        let (Some(n), Some(p)) = (net.as_ref(), profile.as_ref()) else {
            return fail(BnStatus::NullPointer, "null handle");
        };
        match verify_profile(&n.net, &p.profile, Tolerance::exact()) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(BnReport {
                    verdict: r.verdict,
                    max_violation: r.max_violation.to_f64(),
                    worst_seller: r.worst_seller,
                    utilities: r.utilities().iter().map(|u| u.to_f64()).collect(),
                    json: r.to_json(&n.net).to_string(),
                }));
                BnStatus::Ok
            }
            Err(e) => fail(BnStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Verdict of a report; `NotEquilibrium` for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bn_report_verdict(report: *const BnReport) -> BnVerdict {
    match report.as_ref().map(|r| r.verdict) {
        Some(Verdict::Equilibrium) => BnVerdict::Equilibrium,
        Some(Verdict::Inconclusive) => BnVerdict::Inconclusive,
        _ => BnVerdict::NotEquilibrium,
    }
}

/// Largest deviation gain over all sellers; NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bn_report_max_violation(report: *const BnReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.max_violation)
}

/// Index of the seller with the largest gain, or -1 if nobody gains.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bn_report_worst_seller(report: *const BnReport) -> i64 {
    report.as_ref().and_then(|r| r.worst_seller).map_or(-1, |i| i as i64)
}

/// Equilibrium utility of seller `i` as measured by the verifier.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_report_utility(report: *const BnReport, i: usize, out: *mut f64) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return fail(BnStatus::NullPointer, "null out pointer");
        }
        let Some(r) = report.as_ref() else { return fail(BnStatus::NullPointer, "null report") };
        match r.utilities.get(i) {
            Some(v) => {
                *out = *v;
                BnStatus::Ok
            }
            None => fail(BnStatus::OutOfRange, format!("seller index {i} out of range")),
        }
    })
}

/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_report_to_json(report: *const BnReport, out: *mut *mut c_char) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return fail(BnStatus::NullPointer, "null out pointer");
        }
        let Some(r) = report.as_ref() else { return fail(BnStatus::NullPointer, "null report") };
        *out = to_c_string(r.json.clone());
        BnStatus::Ok
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bn_report_free(report: *mut BnReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread; empty after a success. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn bn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn bn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
