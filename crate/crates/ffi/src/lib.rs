//! C ABI over `dle-correspond`.
//!
//! Signatures are opaque handles. Every call returns a [`DleStatus`]; on
//! failure a message is available from [`dle_last_error`] until the next
//! call on the same thread. Strings handed out must be released with
//! [`dle_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dle_correspond::alba::run_alba;
use dle_correspond::classifier::{classify_inequality, Label};
use dle_correspond::corpus::builtin_signature;
use dle_correspond::inverse::inverse_alba;
use dle_correspond::kracht::inductive_to_kracht;
use dle_correspond::oracle::{battery, equivalent, Formula};
use dle_correspond::signature::Signature;
use dle_correspond::syntax::{parse_ineq, parse_meta, print_ineq, print_meta};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Signature = 3,
    Parse = 4,
    /// Input outside the class an operation accepts.
    Classification = 5,
    Oracle = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DleLabel {
    NotInductive = 0,
    Inductive = 1,
    Sahlqvist = 2,
    VerySimpleSahlqvist = 3,
}

impl From<Label> for DleLabel {
    fn from(l: Label) -> Self {
        match l {
            Label::NotInductive => DleLabel::NotInductive,
            Label::Inductive => DleLabel::Inductive,
            Label::Sahlqvist => DleLabel::Sahlqvist,
            Label::VerySimpleSahlqvist => DleLabel::VerySimpleSahlqvist,
        }
    }
}

/// Opaque signature handle.
pub struct DleSignature(Signature);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

type Res<T> = Result<T, (DleStatus, String)>;

fn err<E: std::fmt::Display>(status: DleStatus) -> impl Fn(E) -> (DleStatus, String) {
    move |e| (status, e.to_string())
}

/// Runs `f`, recording failures and converting panics.
fn guard(f: impl FnOnce() -> Res<()>) -> DleStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DleStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DleStatus::Internal
        }
    }
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn text<'a>(p: *const c_char) -> Res<&'a str> {
    if p.is_null() {
        return Err((DleStatus::NullPointer, "null string argument".into()));
    }
    // SAFETY: non-null and NUL-terminated per the caller contract.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(err(DleStatus::InvalidUtf8))
}

/// # Safety
/// `p` must be null or a handle from this library that has not been freed.
unsafe fn sig<'a>(p: *const DleSignature) -> Res<&'a Signature> {
    // SAFETY: see above.
    unsafe { p.as_ref() }.map(|s| &s.0).ok_or((DleStatus::NullPointer, "null signature".into()))
}

fn out_string(out: *mut *mut c_char, s: String) -> Res<()> {
    if out.is_null() {
        return Err((DleStatus::NullPointer, "null output pointer".into()));
    }
    let c = CString::new(s).map_err(err(DleStatus::Internal))?;
    // SAFETY: `out` is non-null and points to writable storage per the API contract.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Parses a signature from its text format.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn dle_signature_parse(src: *const c_char, out: *mut *mut DleSignature) -> DleStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let t = unsafe { text(src) }?;
        let s = Signature::parse(t).map_err(err(DleStatus::Signature))?;
        if out.is_null() {
            return Err((DleStatus::NullPointer, "null output pointer".into()));
        }
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(DleSignature(s))) };
        Ok(())
    })
}

/// One of the builtin signatures: `modal`, `tense`, `lambek`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn dle_signature_builtin(name: *const c_char, out: *mut *mut DleSignature) -> DleStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let n = unsafe { text(name) }?;
        let s = builtin_signature(n).ok_or((DleStatus::Signature, format!("no builtin signature `{n}`")))?;
        if out.is_null() {
            return Err((DleStatus::NullPointer, "null output pointer".into()));
        }
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(DleSignature(s))) };
        Ok(())
    })
}

/// Releases a signature. Null is ignored.
///
/// # Safety
/// `s` must be null or an unfreed handle from this library.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn dle_signature_free(s: *mut DleSignature) {
    if !s.is_null() {
        // SAFETY: the handle came from `Box::into_raw` and is freed once.
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Best label of an inequality.
///
/// # Safety
/// Pointers must be valid as documented on the module.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn dle_classify(s: *const DleSignature, ineq: *const c_char, out: *mut DleLabel) -> DleStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (s, t) = unsafe { (sig(s)?, text(ineq)?) };
        let i = parse_ineq(t, s).map_err(err(DleStatus::Parse))?;
        if out.is_null() {
            return Err((DleStatus::NullPointer, "null output pointer".into()));
        }
        // SAFETY: checked non-null above.
        unsafe { *out = classify_inequality(&i, s).label.into() };
        Ok(())
    })
}

/// Pure first-order output of the forward reduction.
///
/// # Safety
/// Pointers must be valid as documented on the module.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn dle_alba(s: *const DleSignature, ineq: *const c_char, out: *mut *mut c_char) -> DleStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (s, t) = unsafe { (sig(s)?, text(ineq)?) };
        let i = parse_ineq(t, s).map_err(err(DleStatus::Parse))?;
        let run = run_alba(&i, s).map_err(err(DleStatus::Classification))?;
        out_string(out, print_meta(&run.output))
    })
}

/// Kracht form of a definite inductive inequality.
///
/// # Safety
/// Pointers must be valid as documented on the module.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn dle_to_kracht(s: *const DleSignature, ineq: *const c_char, out: *mut *mut c_char) -> DleStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (s, t) = unsafe { (sig(s)?, text(ineq)?) };
        let i = parse_ineq(t, s).map_err(err(DleStatus::Parse))?;
        let k = inductive_to_kracht(&i, s).map_err(err(DleStatus::Classification))?;
        out_string(out, print_meta(&k.to_meta()))
    })
}

/// Inverse correspondence as a JSON object with keys `kracht`, `quasi`,
/// `vss`, `inductive`, `flags`.
///
/// # Safety
/// Pointers must be valid as documented on the module.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn dle_inverse_json(s: *const DleSignature, meta: *const c_char, out: *mut *mut c_char) -> DleStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (s, t) = unsafe { (sig(s)?, text(meta)?) };
        let m = parse_meta(t, s).map_err(err(DleStatus::Parse))?;
        let r = inverse_alba(&m, s).map_err(err(DleStatus::Classification))?;
        let j = serde_json::json!({
            "kracht": r.kracht.to_string(),
            "quasi": r.quasi.to_string(),
            "vss": print_ineq(&r.vss),
            "inductive": print_ineq(&r.inductive),
            "flags": r.flags,
        });
        out_string(out, j.to_string())
    })
}

fn formula(t: &str, s: &Signature) -> Res<Formula> {
    match parse_ineq(t, s) {
        Ok(i) => Ok(Formula::Ineq(i)),
        Err(e) => parse_meta(t, s).map(Formula::Meta).map_err(|_| (DleStatus::Parse, e.to_string())),
    }
}

/// Whether two formulas (inequalities or meta-formulas) agree on the seeded
/// battery.
///
/// # Safety
/// Pointers must be valid as documented on the module.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn dle_equivalent(
    s: *const DleSignature,
    a: *const c_char,
    b: *const c_char,
    seed: u64,
    out: *mut bool,
) -> DleStatus {
    guard(|| {
        // SAFETY: forwarded caller contract.
        let (s, ta, tb) = unsafe { (sig(s)?, text(a)?, text(b)?) };
        let (fa, fb) = (formula(ta, s)?, formula(tb, s)?);
        let eq = equivalent(&battery(s, seed), &fa, &fb).map_err(err(DleStatus::Oracle))?;
        if out.is_null() {
            return Err((DleStatus::NullPointer, "null output pointer".into()));
        }
        // SAFETY: checked non-null above.
        unsafe { *out = eq };
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library; valid until the next call.
#[unsafe(no_mangle)]
pub extern "C" fn dle_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `p` must be null or a string from this library, freed once.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn dle_string_free(p: *mut c_char) {
    if !p.is_null() {
        // SAFETY: produced by `CString::into_raw` in this crate.
        drop(unsafe { CString::from_raw(p) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_arguments_are_reported() {
        let mut out = ptr::null_mut();
        // SAFETY: null input is part of the tested contract.
        let st = unsafe { dle_signature_parse(ptr::null(), &mut out) };
        assert_eq!(st, DleStatus::NullPointer);
        assert!(!dle_last_error().is_null());
        // SAFETY: null handle is accepted.
        unsafe { dle_signature_free(ptr::null_mut()) };
    }

    #[test]
    fn classify_through_handle() {
        let mut s = ptr::null_mut();
        // SAFETY: valid C strings and out-pointers.
        unsafe {
            assert_eq!(dle_signature_builtin(c"modal".as_ptr(), &mut s), DleStatus::Ok);
            let mut l = DleLabel::NotInductive;
            assert_eq!(dle_classify(s, c"box(p) <= box(box(p))".as_ptr(), &mut l), DleStatus::Ok);
            assert_eq!(l, DleLabel::VerySimpleSahlqvist);
            assert_eq!(dle_classify(s, c"box(p <=".as_ptr(), &mut l), DleStatus::Parse);
            dle_signature_free(s);
        }
    }
}
