//! C ABI for the hocrwl library.
//!
//! Programs are opaque handles created by [`hocrwl_program_parse`] and
//! released with [`hocrwl_program_free`]. Queries return a status code and
//! hand back results as JSON strings owned by the caller, to be released
//! with [`hocrwl_string_free`]; on failure the output pointer is set to
//! NULL. After a non-OK status,
//! [`hocrwl_last_error`] describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hocrwl::analysis::{ext_equiv, observe, ExtBound, ObservationKind};
use hocrwl::calculus::{derive, Calculus, SearchBudget};
use hocrwl::parser::{parse_expr, parse_expr_with, parse_programs, ExprOptions, PRELUDE};
use hocrwl::syntax::{Expr, Program, ProgramFlags};
use hocrwl::transforms::{distinguish, Variant};
use hocrwl::Error;
use serde_json::{json, Value};

/// A validated program.
pub struct HocrwlProgram {
    program: Program,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HocrwlStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidProgram = 4,
    /// A query failed, e.g. a value that is not a pattern or an unsafe
    /// generated extension.
    QueryError = 5,
    /// The requested value is not derivable within the budget.
    NotFound = 6,
    Panic = 7,
}

/// Search limits; zero fields take the library defaults.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct HocrwlBudget {
    pub max_or_depth: u32,
    pub max_pattern_size: u32,
    pub max_results: u32,
}

impl HocrwlBudget {
    fn resolve(self) -> SearchBudget {
        let d = SearchBudget::default();
        SearchBudget {
            max_or_depth: if self.max_or_depth == 0 {
                d.max_or_depth
            } else {
                self.max_or_depth
            },
            max_pattern_size: if self.max_pattern_size == 0 {
                d.max_pattern_size
            } else {
                self.max_pattern_size as usize
            },
            max_results: if self.max_results == 0 {
                d.max_results
            } else {
                Some(self.max_results as usize)
            },
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HocrwlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) | Error::Undeclared(_) => HocrwlStatus::ParseError,
            Error::InvalidProgram(_) | Error::Signature(_) => HocrwlStatus::InvalidProgram,
            Error::NotDerivable { .. } => HocrwlStatus::NotFound,
            _ => HocrwlStatus::QueryError,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, recording any failure (including a panic) for the thread.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HocrwlStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HocrwlStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HocrwlStatus::Panic
        }
    }
}

/// # Safety
/// `p` is NULL or a NUL-terminated string valid for the call.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(
            HocrwlStatus::NullArgument,
            format!("{what} is NULL"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(HocrwlStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` is NULL or a handle from [`hocrwl_program_parse`] not yet freed.
unsafe fn program<'a>(p: *const HocrwlProgram) -> Result<&'a Program, Failure> {
    p.as_ref()
        .map(|h| &h.program)
        .ok_or_else(|| Failure(HocrwlStatus::NullArgument, "program is NULL".into()))
}

/// # Safety
/// `out` is NULL or valid for a pointer write.
unsafe fn reset<T>(out: *mut *mut T) {
    if !out.is_null() {
        *out = ptr::null_mut();
    }
}

/// # Safety
/// `out` is NULL or valid for a pointer write.
unsafe fn emit(out: *mut *mut c_char, doc: Value) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(
            HocrwlStatus::NullArgument,
            "output pointer is NULL".into(),
        ));
    }
    let s = CString::new(doc.to_string()).expect("JSON has no NULs");
    *out = s.into_raw();
    Ok(())
}

fn strings<T: ToString>(xs: &[T]) -> Vec<String> {
    xs.iter().map(ToString::to_string).collect()
}

fn expr_of(p: &Program, src: &str) -> Result<Expr, Failure> {
    Ok(parse_expr(src, p.signature())?)
}

/// Parses and validates a program. On success `*out` receives a handle.
///
/// # Safety
/// `src` is a NUL-terminated string; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hocrwl_program_parse(
    src: *const c_char,
    prelude: bool,
    extra_variables: bool,
    left_fo: bool,
    out: *mut *mut HocrwlProgram,
) -> HocrwlStatus {
    reset(out);
    guard(|| {
        let src = text(src, "source")?;
        if out.is_null() {
            return Err(Failure(
                HocrwlStatus::NullArgument,
                "output pointer is NULL".into(),
            ));
        }
        let flags = ProgramFlags {
            extra_variables_allowed: extra_variables,
            left_fo_required: left_fo,
        };
        let sources: Vec<&str> = if prelude {
            vec![PRELUDE, src]
        } else {
            vec![src]
        };
        let program = parse_programs(&sources, flags)?;
        *out = Box::into_raw(Box::new(HocrwlProgram { program }));
        Ok(())
    })
}

/// Releases a program handle. NULL is ignored.
///
/// # Safety
/// `p` is NULL or a handle from [`hocrwl_program_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hocrwl_program_free(p: *mut HocrwlProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// The program in source syntax.
///
/// # Safety
/// `p` is a live handle; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hocrwl_program_source(
    p: *const HocrwlProgram,
    out: *mut *mut c_char,
) -> HocrwlStatus {
    reset(out);
    guard(|| {
        let p = program(p)?;
        if out.is_null() {
            return Err(Failure(
                HocrwlStatus::NullArgument,
                "output pointer is NULL".into(),
            ));
        }
        *out = CString::new(p.to_source())
            .expect("source has no NULs")
            .into_raw();
        Ok(())
    })
}

/// `{"elements": [...], "maximal": [...], "bound": n, "complete_at_bound": b, "truncated": b}`.
///
/// # Safety
/// `p` is a live handle; `expr` is a NUL-terminated string; `out` is valid
/// for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hocrwl_denote(
    p: *const HocrwlProgram,
    expr: *const c_char,
    budget: HocrwlBudget,
    out: *mut *mut c_char,
) -> HocrwlStatus {
    reset(out);
    guard(|| {
        let p = program(p)?;
        let e = expr_of(p, text(expr, "expression")?)?;
        let d = Calculus::new(p, budget.resolve()).denote(&e);
        emit(
            out,
            json!({
                "elements": strings(&d.elements()),
                "maximal": strings(d.maximal()),
                "bound": d.bound(),
                "complete_at_bound": d.complete_at_bound(),
                "truncated": d.is_truncated(),
            }),
        )
    })
}

/// A proof tree for `expr ~> value`, or status `NotFound`.
///
/// # Safety
/// As for [`hocrwl_denote`]; `value` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hocrwl_derive(
    p: *const HocrwlProgram,
    expr: *const c_char,
    value: *const c_char,
    budget: HocrwlBudget,
    out: *mut *mut c_char,
) -> HocrwlStatus {
    reset(out);
    guard(|| {
        let p = program(p)?;
        let e = expr_of(p, text(expr, "expression")?)?;
        let t = parse_expr_with(
            text(value, "value")?,
            p.signature(),
            ExprOptions { allow_bottom: true },
        )?;
        let Some(proof) = derive(p, &e, &t, budget.resolve())? else {
            return Err(Error::NotDerivable {
                expr: e.to_string(),
                value: t.to_string(),
            }
            .into());
        };
        emit(
            out,
            serde_json::to_value(&proof).expect("proof trees serialize"),
        )
    })
}

/// `{"values": [...], "exhausted": b}`; `fo` keeps first-order values only.
///
/// # Safety
/// As for [`hocrwl_denote`].
#[no_mangle]
pub unsafe extern "C" fn hocrwl_observe(
    p: *const HocrwlProgram,
    expr: *const c_char,
    fo: bool,
    budget: HocrwlBudget,
    out: *mut *mut c_char,
) -> HocrwlStatus {
    reset(out);
    guard(|| {
        let p = program(p)?;
        let e = expr_of(p, text(expr, "expression")?)?;
        let kind = if fo {
            ObservationKind::FO
        } else {
            ObservationKind::HO
        };
        let o = observe(p, &e, kind, budget.resolve());
        emit(
            out,
            json!({ "values": strings(&o.values), "exhausted": o.exhausted }),
        )
    })
}

/// Bounded `n`-extensional comparison; the JSON `verdict` field is
/// `equivalent-at-bound` or `distinguished`.
///
/// # Safety
/// As for [`hocrwl_denote`]; `right` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hocrwl_ext_equiv(
    p: *const HocrwlProgram,
    left: *const c_char,
    right: *const c_char,
    n: usize,
    budget: HocrwlBudget,
    out: *mut *mut c_char,
) -> HocrwlStatus {
    reset(out);
    guard(|| {
        let p = program(p)?;
        let e = expr_of(p, text(left, "left expression")?)?;
        let e2 = expr_of(p, text(right, "right expression")?)?;
        let bound = ExtBound {
            budget: budget.resolve(),
            ..ExtBound::default()
        };
        let v = ext_equiv(p, &e, &e2, n, bound);
        emit(out, serde_json::to_value(&v).expect("verdicts serialize"))
    })
}

/// A separating context and its extension rules, or `{"found": false}`.
///
/// # Safety
/// As for [`hocrwl_ext_equiv`].
#[no_mangle]
pub unsafe extern "C" fn hocrwl_distinguish(
    p: *const HocrwlProgram,
    left: *const c_char,
    right: *const c_char,
    fo: bool,
    budget: HocrwlBudget,
    out: *mut *mut c_char,
) -> HocrwlStatus {
    reset(out);
    guard(|| {
        let p = program(p)?;
        let e = expr_of(p, text(left, "left expression")?)?;
        let e2 = expr_of(p, text(right, "right expression")?)?;
        let variant = if fo { Variant::FO } else { Variant::HO };
        let doc = match distinguish(p, &e, &e2, budget.resolve(), variant)? {
            None => json!({ "found": false }),
            Some(r) => json!({
                "found": true,
                "witness": r.witness.to_string(),
                "in_left": r.in_left,
                "context": r.context.to_string(),
                "hat": r.distinguisher.hat.to_string(),
                "verified": r.verified,
                "extension": r.extension_source,
            }),
        };
        emit(out, doc)
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` is NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hocrwl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The message for the last failure on this thread, or NULL. Valid until
/// the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn hocrwl_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn hocrwl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
