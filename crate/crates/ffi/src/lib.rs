//! C ABI over `chromalg`.
//!
//! Every fallible function returns a [`ChromalgStatus`] and writes its
//! result through an out pointer. On failure a message is available from
//! [`chromalg_last_error`] on the same thread. Handles are opaque and must be
//! released with the matching `_free` function; strings returned through
//! `char **` must be released with [`chromalg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chromalg::dieudonne::{self, DieudonneModule, ModuleData};
use chromalg::fgl::{self, FglData, Height, TruncatedFGL};
use chromalg::hopfring::{self, Certificate};
use chromalg::padic::make_ring;
use chromalg::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChromalgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Malformed = 3,
    NotPrime = 4,
    OutOfRange = 5,
    RingMismatch = 6,
    NotUnit = 7,
    NotDivisible = 8,
    PrecisionExhausted = 9,
    Shape = 10,
    ExteriorDivisibility = 11,
    InvalidLaw = 12,
    ZeroSeries = 13,
    NotIntegral = 14,
    DegreeTooSmall = 15,
    SideCondition = 16,
    Bidegree = 17,
    Unsupported = 18,
    Panic = 99,
}

impl From<&Error> for ChromalgStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NotPrime(_) => ChromalgStatus::NotPrime,
            Error::OutOfRange(_) => ChromalgStatus::OutOfRange,
            Error::RingMismatch => ChromalgStatus::RingMismatch,
            Error::NotUnit => ChromalgStatus::NotUnit,
            Error::NotDivisible => ChromalgStatus::NotDivisible,
            Error::PrecisionExhausted(_) => ChromalgStatus::PrecisionExhausted,
            Error::Shape(_) => ChromalgStatus::Shape,
            Error::ExteriorDivisibility(_) => ChromalgStatus::ExteriorDivisibility,
            Error::InvalidLaw(_) => ChromalgStatus::InvalidLaw,
            Error::ZeroSeries => ChromalgStatus::ZeroSeries,
            Error::NotIntegral(_) => ChromalgStatus::NotIntegral,
            Error::DegreeTooSmall(_) => ChromalgStatus::DegreeTooSmall,
            Error::SideCondition(_) => ChromalgStatus::SideCondition,
            Error::Bidegree(_) => ChromalgStatus::Bidegree,
            Error::Unsupported(_) => ChromalgStatus::Unsupported,
            Error::Malformed(_) => ChromalgStatus::Malformed,
        }
    }
}

/// Outcome of searching for a homomorphism to the multiplicative law.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChromalgFglVerdict {
    Iso = 0,
    NoNonzeroHom = 1,
    NonzeroHomNotIso = 2,
}

/// A Dieudonne module over `W(F_{p^d}) / p^N`.
pub struct ChromalgModule(DieudonneModule);

/// A formal group law over `F_{p^d}` truncated at some degree.
pub struct ChromalgLaw(TruncatedFGL);

/// A nilpotence certificate.
pub struct ChromalgCertificate(Certificate);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(ChromalgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn guard(f: impl FnOnce() -> Outcome) -> ChromalgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChromalgStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            ChromalgStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ChromalgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> std::result::Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Outcome {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn read_str<'a>(s: *const c_char) -> std::result::Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null("input string"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| Failure(ChromalgStatus::InvalidUtf8, e.to_string()))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Outcome {
    let c = CString::new(s).map_err(|e| Failure(ChromalgStatus::Malformed, e.to_string()))?;
    if out.is_null() {
        return Err(null("output string"));
    }
    out.write(c.into_raw());
    Ok(())
}

fn malformed(e: impl std::fmt::Display) -> Failure {
    Failure(ChromalgStatus::Malformed, e.to_string())
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn chromalg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn chromalg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn chromalg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------- modules

fn new_module(out: *mut *mut ChromalgModule, m: DieudonneModule) -> Outcome {
    unsafe { put(out, Box::into_raw(Box::new(ChromalgModule(m))), "output handle") }
}

/// Parses a module from its JSON form.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_module_from_json(json: *const c_char, out: *mut *mut ChromalgModule) -> ChromalgStatus {
    guard(|| {
        let data: ModuleData = serde_json::from_str(read_str(json)?).map_err(malformed)?;
        let ring = make_ring(data.ring.p, data.ring.d, data.ring.n)?;
        new_module(out, DieudonneModule::from_data(data, ring)?)
    })
}

/// The module of the multiplicative group over `W(F_{p^d}) / p^N`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_module_gm(p: u64, d: usize, n: u32, out: *mut *mut ChromalgModule) -> ChromalgStatus {
    guard(|| new_module(out, dieudonne::gm_module(&make_ring(p, d, n)?)))
}

/// The Honda module of height `h`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_module_honda(
    p: u64,
    d: usize,
    n: u32,
    h: usize,
    out: *mut *mut ChromalgModule,
) -> ChromalgStatus {
    guard(|| new_module(out, dieudonne::honda_module(&make_ring(p, d, n)?, h)?))
}

/// Serializes a module to JSON.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_module_to_json(m: *const ChromalgModule, out: *mut *mut c_char) -> ChromalgStatus {
    guard(|| put_string(out, pretty(&deref(m, "module")?.0.to_data())))
}

/// Rank of the underlying free module.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_module_rank(m: *const ChromalgModule, out: *mut usize) -> ChromalgStatus {
    guard(|| put(out, deref(m, "module")?.0.rank(), "output"))
}

/// Runs the structural checks. `report` may be null; otherwise it receives
/// the JSON report.
///
/// # Safety
/// `m` must be a live handle; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_module_validate(
    m: *const ChromalgModule,
    passed: *mut bool,
    report: *mut *mut c_char,
) -> ChromalgStatus {
    guard(|| {
        let r = dieudonne::validate(&deref(m, "module")?.0);
        put(passed, r.passed(), "passed")?;
        if !report.is_null() {
            put_string(report, pretty(&r))?;
        }
        Ok(())
    })
}

/// `k`-th exterior power as a new handle.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_module_exterior_power(
    m: *const ChromalgModule,
    k: usize,
    out: *mut *mut ChromalgModule,
) -> ChromalgStatus {
    guard(|| new_module(out, dieudonne::exterior_power(&deref(m, "module")?.0, k)?))
}

/// Whether the top exterior power is the module of the multiplicative group.
///
/// # Safety
/// `m` must be a live handle; `iso` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_module_detect_gm(m: *const ChromalgModule, iso: *mut bool) -> ChromalgStatus {
    guard(|| {
        let (verdict, _, _) = dieudonne::top_exterior_is_gm(&deref(m, "module")?.0)?;
        put(iso, verdict.multiplicative, "iso")
    })
}

/// # Safety
/// `m` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn chromalg_module_free(m: *mut ChromalgModule) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

// ---------------------------------------------------------------- laws

fn new_law(out: *mut *mut ChromalgLaw, g: TruncatedFGL) -> Outcome {
    unsafe { put(out, Box::into_raw(Box::new(ChromalgLaw(g))), "output handle") }
}

/// Parses a law from its JSON form.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_law_from_json(json: *const c_char, out: *mut *mut ChromalgLaw) -> ChromalgStatus {
    guard(|| {
        let data: FglData = serde_json::from_str(read_str(json)?).map_err(malformed)?;
        new_law(out, TruncatedFGL::from_data(&data)?)
    })
}

/// The multiplicative law `x + y + xy` over `F_{p^d}`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_law_gm(p: u64, d: usize, degree: usize, out: *mut *mut ChromalgLaw) -> ChromalgStatus {
    guard(|| new_law(out, fgl::gm_law(&fgl::field(p, d)?, degree)?))
}

/// The additive law over `F_{p^d}`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_law_ga(p: u64, d: usize, degree: usize, out: *mut *mut ChromalgLaw) -> ChromalgStatus {
    guard(|| new_law(out, fgl::ga_law(&fgl::field(p, d)?, degree)?))
}

/// The Honda law of height `n` over `F_p`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_law_honda(p: u64, n: u32, degree: usize, out: *mut *mut ChromalgLaw) -> ChromalgStatus {
    guard(|| new_law(out, fgl::honda_law(p, n, degree)?))
}

/// Serializes a law to JSON.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_law_to_json(g: *const ChromalgLaw, out: *mut *mut c_char) -> ChromalgStatus {
    guard(|| put_string(out, pretty(&deref(g, "law")?.0.to_data())))
}

/// Height of the law. `exact` is false when `[p](x)` vanishes to the
/// truncation degree, in which case `height` is a lower bound.
///
/// # Safety
/// `g` must be a live handle; `height` and `exact` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_law_height(g: *const ChromalgLaw, height: *mut u32, exact: *mut bool) -> ChromalgStatus {
    guard(|| {
        let (h, e) = match deref(g, "law")?.0.height()? {
            Height::Exact(h) => (h, true),
            Height::AtLeast(h) => (h, false),
        };
        put(height, h, "height")?;
        put(exact, e, "exact")
    })
}

/// Searches for a homomorphism to the multiplicative law up to `degree`,
/// which must not exceed the truncation degree of `g`.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_law_detect_gm(
    g: *const ChromalgLaw,
    degree: usize,
    out: *mut ChromalgFglVerdict,
) -> ChromalgStatus {
    guard(|| {
        let g = &deref(g, "law")?.0;
        if degree > g.degree() {
            return Err(Error::DegreeTooSmall(format!("law is known to degree {}, asked for {degree}", g.degree())).into());
        }
        let d = fgl::detect_gm(&g.truncate(degree)?, degree)?;
        let v = match d.verdict {
            fgl::Verdict::IsoToDegree(_) => ChromalgFglVerdict::Iso,
            fgl::Verdict::NoNonzeroHom(_) => ChromalgFglVerdict::NoNonzeroHom,
            fgl::Verdict::NonzeroHomNotIso(_) => ChromalgFglVerdict::NonzeroHomNotIso,
        };
        put(out, v, "verdict")
    })
}

/// # Safety
/// `g` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn chromalg_law_free(g: *mut ChromalgLaw) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

// ---------------------------------------------------------------- certificates

/// Builds the nilpotence certificate for parameters `(p, h, n)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_certificate_build(
    p: u64,
    h: u32,
    n: u32,
    out: *mut *mut ChromalgCertificate,
) -> ChromalgStatus {
    guard(|| {
        let cert = hopfring::verify_xpzero(p, h, n)?;
        put(out, Box::into_raw(Box::new(ChromalgCertificate(cert))), "output handle")
    })
}

/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_certificate_verified(c: *const ChromalgCertificate, out: *mut bool) -> ChromalgStatus {
    guard(|| put(out, deref(c, "certificate")?.0.verdict == hopfring::Verdict::Verified, "output"))
}

/// Recomputes the certificate and compares the traces byte for byte.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_certificate_replay(c: *const ChromalgCertificate, out: *mut bool) -> ChromalgStatus {
    guard(|| put(out, deref(c, "certificate")?.0.replay()?, "output"))
}

/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_certificate_to_json(c: *const ChromalgCertificate, out: *mut *mut c_char) -> ChromalgStatus {
    guard(|| put_string(out, deref(c, "certificate")?.0.to_json_string()))
}

/// # Safety
/// `c` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn chromalg_certificate_free(c: *mut ChromalgCertificate) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Powers `f^{p^m}`, `m <= m_max`, in the height-`h` quotient, as a JSON
/// report. `passed` is set when every power matches its closed form.
///
/// # Safety
/// `passed` and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chromalg_f0_report(
    p: u64,
    h: u32,
    m_max: u32,
    passed: *mut bool,
    out: *mut *mut c_char,
) -> ChromalgStatus {
    guard(|| {
        let r = hopfring::f0_nonnilpotence(p, h, m_max)?;
        put(passed, r.passed(), "passed")?;
        put_string(out, pretty(&r))
    })
}
