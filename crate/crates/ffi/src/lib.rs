//! C ABI for the `btensor` library.
//!
//! Tensors are passed as opaque `BtTensor` handles created by
//! `bt_tensor_new_dense` or `bt_tensor_from_json` and released with
//! `bt_tensor_free`. Every fallible call returns a `BtStatus`; on failure the
//! message is available from `bt_last_error_message` on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use btensor::opnorms::{b_bounds, general_upper_bound, Operator};
use btensor::spectral::eigen_bounds;
use btensor::structure::{classify_with_tolerance, row_data};
use btensor::tcp::{solution_lower_bounds, solve, SolverConfig};
use btensor::{Error, NormKind, Tensor, Variant, Verdict};

/// Opaque tensor handle.
pub struct BtTensor(Tensor);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtStatus {
    Ok = 0,
    NullPointer = 1,
    DimensionMismatch = 2,
    InvalidTensor = 3,
    UnsupportedOrder = 4,
    NegativeBase = 5,
    InvalidNorm = 6,
    WrongClass = 7,
    GridTooLarge = 8,
    InvalidArgument = 9,
    ZeroSolution = 10,
    Parse = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtVerdict {
    B = 0,
    B0 = 1,
    Neither = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtOperator {
    T = 0,
    F = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BtNormBounds {
    pub general_upper: f64,
    pub lower: f64,
    pub upper: f64,
    pub diagonal_upper: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BtEigenBounds {
    /// NaN for odd order.
    pub h_bound: f64,
    pub z_bound: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BtTcpLowerBounds {
    pub lb_inf: f64,
    pub lb_2: f64,
    /// NaN for odd order.
    pub lb_m: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> BtStatus {
    match e {
        Error::DimensionMismatch { .. } => BtStatus::DimensionMismatch,
        Error::InvalidTensor(_) => BtStatus::InvalidTensor,
        Error::UnsupportedOrder(_) => BtStatus::UnsupportedOrder,
        Error::NegativeBase { .. } => BtStatus::NegativeBase,
        Error::InvalidNorm(_) => BtStatus::InvalidNorm,
        Error::WrongClass { .. } => BtStatus::WrongClass,
        Error::GridTooLarge { .. } => BtStatus::GridTooLarge,
        Error::InvalidArgument(_) => BtStatus::InvalidArgument,
        Error::ZeroSolution => BtStatus::ZeroSolution,
        Error::Parse(_) => BtStatus::Parse,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            BtStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            BtStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            BtStatus::Panic
        }
    }
}

unsafe fn tensor<'a>(t: *const BtTensor) -> Result<&'a Tensor, Fail> {
    t.as_ref().map(|t| &t.0).ok_or(Fail::Null("tensor"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(
    p: *mut f64,
    len: usize,
    what: &'static str,
) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    p.write(v);
    Ok(())
}

fn check_len(expected: usize, actual: usize) -> Result<(), Fail> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual }.into());
    }
    Ok(())
}

fn norm_kind(p: f64) -> NormKind {
    if p.is_infinite() && p > 0.0 {
        NormKind::Infinity
    } else {
        NormKind::P(p)
    }
}

fn variant(t: &Tensor) -> Result<Variant, Fail> {
    match btensor::classify(t).verdict {
        Verdict::B => Ok(Variant::B),
        Verdict::B0 => Ok(Variant::B0),
        Verdict::Neither => Err(Error::WrongClass {
            required: "B0 (or B)",
            actual: "Neither",
        }
        .into()),
    }
}

fn nan_if_none(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn bt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a tensor of order `order` and dimension `dim` from `len = dim^order`
/// entries in lexicographic order (first index slowest).
///
/// # Safety
/// `entries` must be valid for `len` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_tensor_new_dense(
    order: usize,
    dim: usize,
    entries: *const f64,
    len: usize,
    out: *mut *mut BtTensor,
) -> BtStatus {
    guard(|| {
        let data = slice(entries, len, "entries")?.to_vec();
        let t = Tensor::new(order, dim, data)?;
        write(out, Box::into_raw(Box::new(BtTensor(t))), "out")
    })
}

/// Parses a tensor from its JSON text (dense or sparse form).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_tensor_from_json(
    json: *const c_char,
    out: *mut *mut BtTensor,
) -> BtStatus {
    guard(|| {
        if json.is_null() {
            return Err(Fail::Null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Error::Parse(format!("invalid UTF-8: {e}")))?;
        let t = btensor::io::parse_tensor(text)?;
        write(out, Box::into_raw(Box::new(BtTensor(t))), "out")
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `t` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bt_tensor_free(t: *mut BtTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bt_tensor_order(t: *const BtTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.order())
}

/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bt_tensor_dim(t: *const BtTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.dim())
}

/// Computes `A x^{m-1}` into `out`; both buffers have length `n = dim`.
///
/// # Safety
/// `x` and `out` must be valid for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn bt_tensor_contract(
    t: *const BtTensor,
    x: *const f64,
    out: *mut f64,
    n: usize,
) -> BtStatus {
    guard(|| {
        let t = tensor(t)?;
        check_len(t.dim(), n)?;
        let y = t.contract(slice(x, n, "x")?)?;
        slice_mut(out, n, "out")?.copy_from_slice(&y);
        Ok(())
    })
}

/// Classifies the tensor; `tol = 0` is exact.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_classify(
    t: *const BtTensor,
    tol: f64,
    out: *mut BtVerdict,
) -> BtStatus {
    guard(|| {
        let report = classify_with_tolerance(tensor(t)?, tol);
        let v = match report.verdict {
            Verdict::B => BtVerdict::B,
            Verdict::B0 => BtVerdict::B0,
            Verdict::Neither => BtVerdict::Neither,
        };
        write(out, v, "out")
    })
}

/// Writes row sums and `beta_i` for each row; either output may be null.
///
/// # Safety
/// Non-null outputs must be valid for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn bt_row_data(
    t: *const BtTensor,
    row_sums: *mut f64,
    betas: *mut f64,
    n: usize,
) -> BtStatus {
    guard(|| {
        let t = tensor(t)?;
        check_len(t.dim(), n)?;
        let rows = row_data(t);
        if !row_sums.is_null() {
            for (o, r) in slice_mut(row_sums, n, "row_sums")?.iter_mut().zip(&rows) {
                *o = r.row_sum;
            }
        }
        if !betas.is_null() {
            for (o, r) in slice_mut(betas, n, "betas")?.iter_mut().zip(&rows) {
                *o = r.beta;
            }
        }
        Ok(())
    })
}

/// Operator-norm bounds for `T_A` or `F_A` in the `p`-norm (`p = INFINITY`
/// for the max norm). Fails with `WrongClass` unless the tensor is B or B0.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_norm_bounds(
    t: *const BtTensor,
    op: BtOperator,
    p: f64,
    out: *mut BtNormBounds,
) -> BtStatus {
    guard(|| {
        let t = tensor(t)?;
        let op = match op {
            BtOperator::T => Operator::T,
            BtOperator::F => Operator::F,
        };
        let kind = norm_kind(p);
        let general_upper = general_upper_bound(t, op, kind)?;
        let b = b_bounds(t, op, kind, variant(t)?)?;
        write(
            out,
            BtNormBounds {
                general_upper,
                lower: b.lower,
                upper: b.upper,
                diagonal_upper: b.diagonal_upper,
            },
            "out",
        )
    })
}

/// Diagonal-only bounds on H- and Z-eigenvalue moduli.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_eigen_bounds(t: *const BtTensor, out: *mut BtEigenBounds) -> BtStatus {
    guard(|| {
        let t = tensor(t)?;
        let r = eigen_bounds(t, variant(t)?)?;
        write(
            out,
            BtEigenBounds {
                h_bound: nan_if_none(r.h_bound),
                z_bound: r.z_bound,
            },
            "out",
        )
    })
}

/// Solves `x >= 0, w = q + A x^{m-1} >= 0, x.w = 0`. Writes the best point
/// found to `x_out`, its residual and whether it met the tolerance.
///
/// # Safety
/// `q` and `x_out` must be valid for `n` elements; the scalar outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn bt_tcp_solve(
    t: *const BtTensor,
    q: *const f64,
    n: usize,
    seed: u64,
    x_out: *mut f64,
    residual: *mut f64,
    converged: *mut bool,
) -> BtStatus {
    guard(|| {
        let t = tensor(t)?;
        check_len(t.dim(), n)?;
        let cfg = SolverConfig {
            seed,
            ..Default::default()
        };
        let out = solve(t, slice(q, n, "q")?, &cfg)?;
        slice_mut(x_out, n, "x_out")?.copy_from_slice(&out.x);
        if !residual.is_null() {
            residual.write(out.residual);
        }
        if !converged.is_null() {
            converged.write(out.converged);
        }
        Ok(())
    })
}

/// Lower bounds on `||x||^{m-1}` over nonzero solutions of the TCP.
///
/// # Safety
/// `q` must be valid for `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_tcp_lower_bounds(
    t: *const BtTensor,
    q: *const f64,
    n: usize,
    out: *mut BtTcpLowerBounds,
) -> BtStatus {
    guard(|| {
        let t = tensor(t)?;
        check_len(t.dim(), n)?;
        let c = solution_lower_bounds(t, slice(q, n, "q")?)?;
        write(
            out,
            BtTcpLowerBounds {
                lb_inf: c.lb_inf,
                lb_2: c.lb_2,
                lb_m: nan_if_none(c.lb_m),
            },
            "out",
        )
    })
}
