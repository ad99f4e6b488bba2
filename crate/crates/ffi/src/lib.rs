//! C ABI over `prodramsey`.
//!
//! Every fallible function returns a [`PrsStatus`] whose values match the CLI exit
//! codes. On failure the message is kept per thread and can be fetched with
//! [`prs_last_error_message`]. Strings handed out by this library are released
//! with [`prs_string_free`]; handles with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use prodramsey::eigen::{self, SpectrumReport};
use prodramsey::qip::{self, QipInstance, SolveOptions, Symmetry};
use prodramsey::ramsey::{self, GridSpec, SearchOptions};
use prodramsey::{matrix, subset, Error, SubsetIndex, SubsetVector};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrsStatus {
    Ok = 0,
    Io = 1,
    Validation = 2,
    Capacity = 3,
    Integrity = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrsMethod {
    Exhaustive = 0,
    BranchAndBound = 1,
}

/// Result of a QIP solve. `third` is meaningful only when `unbounded` is false.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PrsQipResult {
    pub t: i64,
    pub third: u64,
    pub unbounded: bool,
    pub nodes_explored: u64,
}

/// Opaque spectrum report.
pub struct PrsSpectrum {
    report: SpectrumReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PrsStatus {
    match err.exit_code() {
        1 => PrsStatus::Io,
        2 => PrsStatus::Validation,
        3 => PrsStatus::Capacity,
        4 => PrsStatus::Integrity,
        _ => PrsStatus::Internal,
    }
}

fn fail(status: PrsStatus, msg: impl Into<String>) -> PrsStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> prodramsey::Result<()>) -> PrsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PrsStatus::Ok,
        Ok(Err(e)) => fail(status_of(&e), e.to_string()),
        Err(_) => fail(PrsStatus::Internal, "panic inside prodramsey"),
    }
}

fn null_arg(name: &str) -> Error {
    Error::Validation(format!("{name} must not be null"))
}

fn to_i64(x: i128) -> prodramsey::Result<i64> {
    i64::try_from(x).map_err(|_| Error::Overflow("value does not fit in int64_t"))
}

/// Copy of the last error message on this thread, or null if none. Free with [`prs_string_free`].
#[no_mangle]
pub extern "C" fn prs_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(ptr::null_mut(), |c| c.clone().into_raw())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn prs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn prs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Writes `M_r(S, T)` for subset masks `s` and `t` to `out`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn prs_matrix_entry(r: u32, s: u32, t: u32, out: *mut i64) -> PrsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        let v = matrix::entry(r, SubsetIndex::new(s, r)?, SubsetIndex::new(t, r)?)?;
        *out = to_i64(v)?;
        Ok(())
    })
}

/// Computes `M_r x` without materializing `M_r`. Both buffers hold `2^r` values.
///
/// # Safety
/// `input` must be readable and `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn prs_apply(
    r: u32,
    input: *const i64,
    out: *mut i64,
    len: usize,
) -> PrsStatus {
    guard(|| {
        if input.is_null() || out.is_null() {
            return Err(null_arg("input/out"));
        }
        if r > subset::MAX_R {
            return Err(Error::Capacity(format!(
                "r <= {} is required",
                subset::MAX_R
            )));
        }
        let data: Vec<i128> = std::slice::from_raw_parts(input, len)
            .iter()
            .map(|&x| x as i128)
            .collect();
        let v = SubsetVector::from_vec(r, data)?;
        let y = matrix::apply(r, &v)?;
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (d, &x) in dst.iter_mut().zip(y.as_slice()) {
            *d = to_i64(x)?;
        }
        Ok(())
    })
}

/// Builds and verifies the spectrum of `M_r`. Release with [`prs_spectrum_free`].
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn prs_spectrum_new(r: u32, out: *mut *mut PrsSpectrum) -> PrsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        let report = eigen::assemble_spectrum(r)?;
        *out = Box::into_raw(Box::new(PrsSpectrum { report }));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`prs_spectrum_new`] that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn prs_spectrum_free(h: *mut PrsSpectrum) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of distinct eigenvalue classes, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn prs_spectrum_class_count(h: *const PrsSpectrum) -> usize {
    h.as_ref().map_or(0, |h| h.report.classes.len())
}

/// Reads class `index`. Any output pointer may be null.
///
/// # Safety
/// `h` must be a live spectrum handle; non-null outputs must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn prs_spectrum_class(
    h: *const PrsSpectrum,
    index: usize,
    eigenvalue: *mut i64,
    multiplicity: *mut u64,
    verified: *mut bool,
) -> PrsStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null_arg("handle"))?;
        let c = h
            .report
            .classes
            .get(index)
            .ok_or_else(|| Error::Validation(format!("class index {index} out of range")))?;
        if !eigenvalue.is_null() {
            *eigenvalue = to_i64(c.eigenvalue)?;
        }
        if !multiplicity.is_null() {
            *multiplicity = c.multiplicity;
        }
        if !verified.is_null() {
            *verified = c.verified;
        }
        Ok(())
    })
}

/// True when every class is verified and the trace identity holds.
///
/// # Safety
/// `h` must be null or a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn prs_spectrum_is_consistent(h: *const PrsSpectrum) -> bool {
    h.as_ref()
        .is_some_and(|h| h.report.trace_ok && h.report.classes.iter().all(|c| c.verified))
}

/// The report as JSON, or null on error. Free with [`prs_string_free`].
///
/// # Safety
/// `h` must be null or a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn prs_spectrum_to_json(h: *const PrsSpectrum) -> *mut c_char {
    let Some(h) = h.as_ref() else {
        set_error("handle must not be null".into());
        return ptr::null_mut();
    };
    match serde_json::to_string(&h.report) {
        Ok(s) => CString::new(s).map_or(ptr::null_mut(), CString::into_raw),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Solves the QIP for `(r, s)`. When `argmin` is non-null it receives the `s`
/// minimizing subset masks in ascending order; `argmin_len` must then be at least `s`.
///
/// # Safety
/// `out` must be valid for one write; `argmin`, if non-null, for `argmin_len` writes.
#[no_mangle]
pub unsafe extern "C" fn prs_qip_solve(
    r: u32,
    s: u32,
    method: PrsMethod,
    symmetry: bool,
    budget: u64,
    out: *mut PrsQipResult,
    argmin: *mut u32,
    argmin_len: usize,
) -> PrsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        if !argmin.is_null() && argmin_len < s as usize {
            return Err(Error::Validation(format!(
                "argmin buffer holds {argmin_len}, need {s}"
            )));
        }
        let inst = QipInstance::new(r, s)?;
        let opts = SolveOptions {
            budget,
            symmetry: if symmetry {
                Symmetry::Full
            } else {
                Symmetry::None
            },
            parallel: true,
        };
        let sol = match method {
            PrsMethod::Exhaustive => qip::solve_exhaustive(inst, opts)?,
            PrsMethod::BranchAndBound => qip::solve_bnb(inst, opts)?,
        };
        let triple = qip::guaranteed_triple(inst, &sol);
        let third = match triple.third {
            Some(x) => u64::try_from(x).map_err(|_| Error::Overflow("third exceeds uint64_t"))?,
            None => 0,
        };
        if !argmin.is_null() {
            std::slice::from_raw_parts_mut(argmin, s as usize).copy_from_slice(&sol.argmin);
        }
        *out = PrsQipResult {
            t: to_i64(sol.t)?,
            third,
            unbounded: triple.third.is_none(),
            nodes_explored: sol.nodes_explored,
        };
        Ok(())
    })
}

/// Decides whether the grid `dims[0] x ... x dims[d-1]` is `colors`-guaranteed.
/// When it is not and `witness` is non-null, a box-free coloring is written there
/// in row-major order (last axis fastest); `witness_len` must cover every cell.
///
/// # Safety
/// `dims` must be readable for `d` values; `guaranteed` valid for one write;
/// `witness`, if non-null, valid for `witness_len` writes.
#[no_mangle]
pub unsafe extern "C" fn prs_is_guaranteed(
    dims: *const u32,
    d: usize,
    colors: u32,
    symmetry: bool,
    guaranteed: *mut bool,
    witness: *mut u8,
    witness_len: usize,
) -> PrsStatus {
    guard(|| {
        if dims.is_null() || guaranteed.is_null() {
            return Err(null_arg("dims/guaranteed"));
        }
        let spec = GridSpec::new(std::slice::from_raw_parts(dims, d).to_vec(), colors)?;
        if !witness.is_null() && witness_len < spec.cells() {
            return Err(Error::Validation(format!(
                "witness buffer holds {witness_len}, need {}",
                spec.cells()
            )));
        }
        let v = ramsey::is_guaranteed(&spec, SearchOptions::new(symmetry))?;
        *guaranteed = v.guaranteed;
        if let (Some(w), false) = (&v.witness, witness.is_null()) {
            std::slice::from_raw_parts_mut(witness, w.cells.len()).copy_from_slice(&w.cells);
        }
        Ok(())
    })
}

/// Checks binomial identity `id` (1-5) at the given parameters.
///
/// # Safety
/// `params` must be readable for `len` values; `holds` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn prs_check_identity(
    id: u8,
    params: *const i64,
    len: usize,
    holds: *mut bool,
) -> PrsStatus {
    guard(|| {
        if holds.is_null() || (params.is_null() && len > 0) {
            return Err(null_arg("params/holds"));
        }
        let p = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(params, len)
        };
        *holds = subset::check_identity(id, p)?;
        Ok(())
    })
}
