//! C ABI over the `pseudomeasure` library.
//!
//! Every fallible call returns a [`PmStatus`] code; on failure the message is
//! available from [`pm_last_error_message`] on the same thread. Strings
//! returned through out-parameters are owned by the caller and released with
//! [`pm_string_free`]; handles are released with their `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pseudomeasure::boundary::{ContinuedFraction, P1};
use pseudomeasure::coeff::Poly;
use pseudomeasure::gauss::{limiting_measure, CosetModule, Side};
use pseudomeasure::levy::verify_dirichlet_identity;
use pseudomeasure::measure::PseudoMeasure;
use pseudomeasure::modular::{basis_measures, seed_space, FromSeed};
use pseudomeasure::quadratic::PeriodicCF;
use pseudomeasure::Error;

/// Status codes.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Domain = 4,
    Invariant = 5,
    Limit = 6,
    Panic = 7,
}

fn status_of(e: &Error) -> PmStatus {
    match e {
        Error::Parse(_) => PmStatus::Parse,
        Error::NotPrimitive(_) | Error::MalformedChain(_) | Error::BadMove(_) | Error::Domain(_) => PmStatus::Domain,
        Error::SeedInvariant(_) | Error::Inconsistent(_) => PmStatus::Invariant,
        Error::Limit(_) => PmStatus::Limit,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(PmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording the error message and mapping panics to `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PmStatus::Ok as i32,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code as i32
        }
        Err(_) => {
            set_error("internal panic".into());
            PmStatus::Panic as i32
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(PmStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(PmStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

fn check_out<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure(PmStatus::NullPointer, format!("{name} is null")));
    }
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) {
    *out = CString::new(s).expect("no interior nul").into_raw();
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn pm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Continued fraction of a rational such as "3/7", written as "[0;2,3]".
#[no_mangle]
pub unsafe extern "C" fn pm_cf(x: *const c_char, out: *mut *mut c_char) -> i32 {
    guard(|| {
        check_out(out, "out")?;
        let v = pseudomeasure::boundary::parse_q(read_str(x, "x")?)?;
        write_string(out, ContinuedFraction::expand(&v).to_string());
        Ok(())
    })
}

/// Dimension of the weight-`weight` seed space.
#[no_mangle]
pub extern "C" fn pm_seed_dimension(weight: u32, out: *mut u32) -> i32 {
    guard(|| {
        check_out(out, "out")?;
        let d = seed_space(weight as usize).basis.len();
        unsafe { *out = d as u32 };
        Ok(())
    })
}

/// Opaque modular pseudo-measure built from a polynomial seed.
pub struct PmMeasure {
    inner: FromSeed<Poly>,
}

/// Measure from the `index`-th basis seed of the given weight.
#[no_mangle]
pub extern "C" fn pm_measure_from_seed(weight: u32, index: u32, out: *mut *mut PmMeasure) -> i32 {
    guard(|| {
        check_out(out, "out")?;
        let space = seed_space(weight as usize);
        let dim = space.basis.len();
        let inner = basis_measures(&space)
            .into_iter()
            .nth(index as usize)
            .ok_or_else(|| Failure(PmStatus::Domain, format!("weight {weight} has {dim} basis seeds")))?;
        unsafe { *out = Box::into_raw(Box::new(PmMeasure { inner })) };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pm_measure_free(m: *mut PmMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// μ(from, to) as a JSON array of coefficient strings, e.g. `["1","0","-1"]`.
/// Points are written "p/q" or "inf".
#[no_mangle]
pub unsafe extern "C" fn pm_measure_eval(m: *const PmMeasure, from: *const c_char, to: *const c_char, out: *mut *mut c_char) -> i32 {
    guard(|| {
        check_out(out, "out")?;
        let m = m.as_ref().ok_or_else(|| Failure(PmStatus::NullPointer, "measure is null".into()))?;
        let a: P1 = read_str(from, "from")?.parse()?;
        let b: P1 = read_str(to, "to")?.parse()?;
        let v = m.inner.eval(&a, &b);
        write_string(out, serde_json::to_string(&v).expect("serializable"));
        Ok(())
    })
}

/// Checks the Lévy–Mellin Dirichlet-series identity up to `truncation`;
/// `*pass` is 1 when every coefficient agrees.
#[no_mangle]
pub unsafe extern "C" fn pm_levymellin_verify(m: *const PmMeasure, truncation: u32, pass: *mut i32) -> i32 {
    guard(|| {
        check_out(pass, "pass")?;
        let m = m.as_ref().ok_or_else(|| Failure(PmStatus::NullPointer, "measure is null".into()))?;
        if truncation == 0 || truncation > 10_000 {
            return Err(Failure(PmStatus::Limit, "truncation must be in 1..=10000".into()));
        }
        let r = verify_dirichlet_identity(&m.inner, truncation as usize)?;
        *pass = i32::from(r.pass);
        Ok(())
    })
}

/// Exact limiting value `μ^lim(∞, θ)` for the `index`-th permutation-module
/// seed on Γ₀(level), as JSON. θ is written like "[1;(2)]".
#[no_mangle]
pub unsafe extern "C" fn pm_limiting_gamma0(level: u64, index: u32, cf: *const c_char, out: *mut *mut c_char) -> i32 {
    guard(|| {
        check_out(out, "out")?;
        let theta: PeriodicCF = read_str(cf, "cf")?.parse()?;
        if level == 0 || level > 10_000 {
            return Err(Failure(PmStatus::Limit, "level must be in 1..=10000".into()));
        }
        let m = CosetModule::gamma0(level, index as usize)?;
        let r = limiting_measure(&m, &theta, Side::FromInfinity)?;
        write_string(out, serde_json::to_string(&r).expect("serializable"));
        Ok(())
    })
}
