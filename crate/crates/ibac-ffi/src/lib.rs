//! C ABI over the ibac core crate.
//!
//! Every function is a thin shim: policies live behind an opaque handle,
//! strings cross the boundary as NUL-terminated UTF-8 owned by whichever
//! side allocated them, and failures come back as an [`IbacStatus`] plus a
//! thread-local message readable through [`ibac_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ibac::{LabelSet, PolicySchema, Scheme, Token};

/// Result of any fallible call in this interface.
///
/// Non-zero values are failures; call `ibac_last_error` on the same thread
/// for a human-readable message.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IbacStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument,
    /// A string argument was not valid UTF-8.
    Utf8,
    /// Policy JSON could not be parsed.
    Json,
    /// The policy fails its own consistency rules.
    InvalidPolicy,
    /// The scheme name was not `bitvec`, `expsum`, or `primeprod`.
    UnknownScheme,
    /// A label name does not exist in the policy.
    UnknownLabel,
    /// The label set was shaped wrongly (missing level, level among marks, ...).
    BadLabelSet,
    /// Token text did not parse or decode under the policy.
    MalformedToken,
    /// The two tokens use different encoding schemes.
    SchemeMismatch,
    /// The token belongs to a different policy.
    SchemaMismatch,
    /// Any other failure; the error message has the details.
    Other,
}

/// Opaque policy handle. Create with `ibac_policy_from_json` or
/// `ibac_policy_demo`, release with `ibac_policy_free`.
pub struct IbacPolicy {
    inner: PolicySchema,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last(msg: &str) {
    // Interior NUL cannot reach C; swap it out rather than lose the message.
    let owned = CString::new(msg.replace('\0', "?")).expect("NUL replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn status_of(err: &ibac::Error) -> IbacStatus {
    use ibac::Error;
    match err {
        Error::UnknownLabel(_) => IbacStatus::UnknownLabel,
        Error::NotALevel(_)
        | Error::LevelInMarks(_)
        | Error::MultipleLevels(..)
        | Error::MissingLevel => IbacStatus::BadLabelSet,
        Error::InvalidSchema { .. } => IbacStatus::InvalidPolicy,
        Error::SchemaMismatch { .. } => IbacStatus::SchemaMismatch,
        Error::SchemeMismatch(_) => IbacStatus::SchemeMismatch,
        Error::MalformedToken(_) | Error::TokenSyntax(_) => IbacStatus::MalformedToken,
        Error::Json(_) => IbacStatus::Json,
        _ => IbacStatus::Other,
    }
}

fn fail(err: ibac::Error) -> IbacStatus {
    let status = status_of(&err);
    set_last(&err.to_string());
    status
}

fn guarded(f: impl FnOnce() -> IbacStatus) -> IbacStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_last("internal panic");
        IbacStatus::Other
    })
}

unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, IbacStatus> {
    if ptr.is_null() {
        set_last(&format!("{name} is NULL"));
        return Err(IbacStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last(&format!("{name} is not valid UTF-8"));
        IbacStatus::Utf8
    })
}

unsafe fn policy_arg<'a>(ptr: *const IbacPolicy) -> Result<&'a PolicySchema, IbacStatus> {
    if ptr.is_null() {
        set_last("policy is NULL");
        return Err(IbacStatus::NullArgument);
    }
    Ok(&(*ptr).inner)
}

fn give_string(text: String) -> Result<*mut c_char, IbacStatus> {
    CString::new(text).map(CString::into_raw).map_err(|_| {
        set_last("result contains an interior NUL byte");
        IbacStatus::Other
    })
}

fn scheme_by_name(schema: &PolicySchema, name: &str) -> Result<Scheme, IbacStatus> {
    match name {
        "bitvec" => Ok(Scheme::BitVec),
        "expsum" => Ok(Scheme::expsum_of(schema)),
        "primeprod" => Ok(Scheme::PrimeProd),
        other => {
            set_last(&format!(
                "unknown scheme `{other}`, expected bitvec, expsum, or primeprod"
            ));
            Err(IbacStatus::UnknownScheme)
        }
    }
}

macro_rules! check {
    ($expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Library version as a static C string. Never NULL; do not free.
#[no_mangle]
pub extern "C" fn ibac_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message from the most recent failing call on this thread, as a C string
/// owned by the library. Empty until a call fails. The pointer is valid
/// until the next failing call on the same thread; copy it if you need it
/// longer, and never free it.
#[no_mangle]
pub extern "C" fn ibac_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Release a string returned through any `out_` parameter of this library.
/// Accepts NULL.
///
/// # Safety
///
/// `text` must be a pointer previously returned by this library and not yet
/// freed; passing anything else is undefined behavior.
#[no_mangle]
pub unsafe extern "C" fn ibac_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Parse a policy from its JSON document into `*out_policy`.
///
/// Parsing accepts structurally well-formed JSON even when the policy breaks
/// its own consistency rules, so that `ibac_policy_validate` can report what
/// is wrong; every other call on such a handle fails with `InvalidPolicy`.
///
/// # Safety
///
/// `json` must be a NUL-terminated string and `out_policy` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ibac_policy_from_json(
    json: *const c_char,
    out_policy: *mut *mut IbacPolicy,
) -> IbacStatus {
    guarded(|| {
        if out_policy.is_null() {
            set_last("out_policy is NULL");
            return IbacStatus::NullArgument;
        }
        *out_policy = ptr::null_mut();
        let text = check!(str_arg(json, "json"));
        match PolicySchema::from_json(text) {
            Ok(inner) => {
                *out_policy = Box::into_raw(Box::new(IbacPolicy { inner }));
                IbacStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Create the built-in demonstration policy into `*out_policy`.
///
/// # Safety
///
/// `out_policy` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ibac_policy_demo(out_policy: *mut *mut IbacPolicy) -> IbacStatus {
    guarded(|| {
        if out_policy.is_null() {
            set_last("out_policy is NULL");
            return IbacStatus::NullArgument;
        }
        let inner = ibac::demo::demo_policy();
        *out_policy = Box::into_raw(Box::new(IbacPolicy { inner }));
        IbacStatus::Ok
    })
}

/// Release a policy handle. Accepts NULL.
///
/// # Safety
///
/// `policy` must come from `ibac_policy_from_json` or `ibac_policy_demo` and
/// must not be used after this call.
#[no_mangle]
pub unsafe extern "C" fn ibac_policy_free(policy: *mut IbacPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Copy the policy identifier into `*out_id`. Free it with
/// `ibac_string_free`.
///
/// # Safety
///
/// `policy` must be a live handle and `out_id` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ibac_policy_id(
    policy: *const IbacPolicy,
    out_id: *mut *mut c_char,
) -> IbacStatus {
    guarded(|| {
        if out_id.is_null() {
            set_last("out_id is NULL");
            return IbacStatus::NullArgument;
        }
        *out_id = ptr::null_mut();
        let schema = check!(policy_arg(policy));
        *out_id = check!(give_string(schema.id().to_string()));
        IbacStatus::Ok
    })
}

/// Check the policy against its consistency rules.
///
/// Returns `Ok` for a sound policy. Returns `InvalidPolicy` otherwise and,
/// when `out_report` is not NULL, stores a newline-separated description of
/// every violation there (free it with `ibac_string_free`).
///
/// # Safety
///
/// `policy` must be a live handle; `out_report` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn ibac_policy_validate(
    policy: *const IbacPolicy,
    out_report: *mut *mut c_char,
) -> IbacStatus {
    guarded(|| {
        if !out_report.is_null() {
            *out_report = ptr::null_mut();
        }
        let schema = check!(policy_arg(policy));
        let report = schema.validate();
        if report.is_ok() {
            return IbacStatus::Ok;
        }
        let text = report.to_string();
        if !out_report.is_null() {
            *out_report = check!(give_string(text.clone()));
        }
        set_last(&text);
        IbacStatus::InvalidPolicy
    })
}

unsafe fn encode_common(
    policy: *const IbacPolicy,
    scheme: *const c_char,
    labels: *const c_char,
    out_token: *mut *mut c_char,
    subject: bool,
) -> IbacStatus {
    if out_token.is_null() {
        set_last("out_token is NULL");
        return IbacStatus::NullArgument;
    }
    *out_token = ptr::null_mut();
    let schema = check!(policy_arg(policy));
    let scheme = check!(scheme_by_name(schema, check!(str_arg(scheme, "scheme"))));
    let label_text = check!(str_arg(labels, "labels"));
    let set = match LabelSet::from_names(schema, label_text.split_whitespace()) {
        Ok(set) => set,
        Err(err) => return fail(err),
    };
    // Subjects encode their downward closure, objects exactly their own label.
    let names = if subject {
        match schema.expand_subject(&set) {
            Ok(clearance) => clearance.included().clone(),
            Err(err) => return fail(err),
        }
    } else {
        match schema.object_label(&set) {
            Ok(label) => label.names(),
            Err(err) => return fail(err),
        }
    };
    let token = match ibac::codec::encode(schema, scheme, names.iter().map(String::as_str)) {
        Ok(token) => token,
        Err(err) => return fail(err),
    };
    *out_token = check!(give_string(token.to_string()));
    IbacStatus::Ok
}

/// Encode a subject clearance as a token in `*out_token`.
///
/// `labels` is a space-separated list naming at most one level plus any
/// marks, for example `"Secret MI6 overwatch"`. The token covers everything
/// the clearance includes under the policy's ordering and hierarchy. Free
/// the token text with `ibac_string_free`.
///
/// # Safety
///
/// `policy` must be a live handle; `scheme`, `labels`, and `out_token` must
/// be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ibac_encode_subject(
    policy: *const IbacPolicy,
    scheme: *const c_char,
    labels: *const c_char,
    out_token: *mut *mut c_char,
) -> IbacStatus {
    guarded(|| encode_common(policy, scheme, labels, out_token, true))
}

/// Encode an object label as a token in `*out_token`.
///
/// `labels` names exactly one level plus any marks. Unlike subjects, objects
/// carry only their own labels. Free the token text with `ibac_string_free`.
///
/// # Safety
///
/// Same contract as `ibac_encode_subject`.
#[no_mangle]
pub unsafe extern "C" fn ibac_encode_object(
    policy: *const IbacPolicy,
    scheme: *const c_char,
    labels: *const c_char,
    out_token: *mut *mut c_char,
) -> IbacStatus {
    guarded(|| encode_common(policy, scheme, labels, out_token, false))
}

/// Decode a token back to its label names.
///
/// Stores the names space-separated in policy declaration order into
/// `*out_labels`; an empty token yields an empty string. Free the result
/// with `ibac_string_free`.
///
/// # Safety
///
/// `policy` must be a live handle; `token` and `out_labels` must be valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn ibac_decode(
    policy: *const IbacPolicy,
    token: *const c_char,
    out_labels: *mut *mut c_char,
) -> IbacStatus {
    guarded(|| {
        if out_labels.is_null() {
            set_last("out_labels is NULL");
            return IbacStatus::NullArgument;
        }
        *out_labels = ptr::null_mut();
        let schema = check!(policy_arg(policy));
        let text = check!(str_arg(token, "token"));
        let token = match Token::parse(text, schema) {
            Ok(token) => token,
            Err(err) => return fail(err),
        };
        let names = match ibac::codec::decode(schema, &token) {
            Ok(names) => names,
            Err(err) => return fail(err),
        };
        let ordered: Vec<&str> = schema
            .label_order()
            .filter(|name| names.contains(*name))
            .collect();
        *out_labels = check!(give_string(ordered.join(" ")));
        IbacStatus::Ok
    })
}

/// Decide whether the subject token dominates the object token.
///
/// Both tokens must use the same scheme under the same policy; the check
/// runs on the scheme's native route. `*out_holds` receives the verdict.
/// When the check fails and `out_witness` is not NULL, `*out_witness`
/// receives one label the subject lacks (free with `ibac_string_free`);
/// on success it is set to NULL.
///
/// # Safety
///
/// `policy` must be a live handle; `subject`, `object`, and `out_holds`
/// must be valid pointers. `out_witness` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn ibac_check(
    policy: *const IbacPolicy,
    subject: *const c_char,
    object: *const c_char,
    out_holds: *mut bool,
    out_witness: *mut *mut c_char,
) -> IbacStatus {
    guarded(|| {
        if out_holds.is_null() {
            set_last("out_holds is NULL");
            return IbacStatus::NullArgument;
        }
        if !out_witness.is_null() {
            *out_witness = ptr::null_mut();
        }
        let schema = check!(policy_arg(policy));
        let subject = match Token::parse(check!(str_arg(subject, "subject")), schema) {
            Ok(token) => token,
            Err(err) => return fail(err),
        };
        let object = match Token::parse(check!(str_arg(object, "object")), schema) {
            Ok(token) => token,
            Err(err) => return fail(err),
        };
        let verdict = match ibac::dominance::decide(schema, &subject, &object) {
            Ok(verdict) => verdict,
            Err(err) => return fail(err),
        };
        *out_holds = verdict.holds();
        if let (Some(witness), false) = (verdict.witness(), out_witness.is_null()) {
            *out_witness = check!(give_string(witness.to_string()));
        }
        IbacStatus::Ok
    })
}
