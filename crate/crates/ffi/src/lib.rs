//! C interface to `bessel-dt`.
//!
//! Objects are opaque handles created by `bdt_*_new` functions and released with the
//! matching `bdt_*_free`. Every fallible call returns a [`BdtStatus`]; on failure the
//! message is available from [`bdt_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bessel_dt::hankel::{bessel_j, BesselOrder};
use bessel_dt::transform::maximal_t_star;
use bessel_dt::{
    Error, Grid, IndexWindow, Interval, KernelPoint, LacunarySetup, LambdaSpace, PoissonKernel, Profile,
    QuadratureSpec, RadialFunction, SampledFunction, TailPolicy, TruncationLevel,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Domain = 3,
    NotConverged = 4,
    TailEstimate = 5,
    WindowOutOfRange = 6,
    NotIncreasing = 7,
    NotLacunary = 8,
    NonFinite = 9,
    Empty = 10,
    Panic = 11,
}

/// Kernel value with its first partial derivatives.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BdtJet {
    pub value: f64,
    pub dt: f64,
    pub dx: f64,
    pub dy: f64,
}

/// Extension of sampled input beyond its last node.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdtTail {
    Zero = 0,
    Constant = 1,
    PowerLaw = 2,
}

pub struct BdtKernel(PoissonKernel);

pub struct BdtFunction(Box<dyn RadialFunction>);

pub struct BdtSetup(LacunarySetup);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BdtStatus {
    match e {
        Error::InvalidParameter(_) => BdtStatus::InvalidParameter,
        Error::Domain(_) => BdtStatus::Domain,
        Error::NotConverged { .. } => BdtStatus::NotConverged,
        Error::TailEstimate { .. } => BdtStatus::TailEstimate,
        Error::WindowOutOfRange { .. } => BdtStatus::WindowOutOfRange,
        Error::NotIncreasing(_) => BdtStatus::NotIncreasing,
        Error::NotLacunary { .. } => BdtStatus::NotLacunary,
        Error::NonFinite(_) => BdtStatus::NonFinite,
        Error::Empty(_) => BdtStatus::Empty,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> BdtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            BdtStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            BdtStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            BdtStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn target<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write_samples(out: *mut f64, values: &[f64]) -> Result<(), Failure> {
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bdt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
///
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn bdt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a kernel for `lambda > 0` with default quadrature settings.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bdt_kernel_new(lambda: f64, out: *mut *mut BdtKernel) -> BdtStatus {
    guard(|| {
        let slot = target(out, "out")?;
        *slot = ptr::null_mut();
        let k = PoissonKernel::new(LambdaSpace::new(lambda)?, QuadratureSpec::default())?;
        *slot = Box::into_raw(Box::new(BdtKernel(k)));
        Ok(())
    })
}

/// # Safety
/// `kernel` must be null or a handle from [`bdt_kernel_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bdt_kernel_free(kernel: *mut BdtKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// # Safety
/// `kernel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bdt_kernel_value(
    kernel: *const BdtKernel,
    t: f64,
    x: f64,
    y: f64,
    out: *mut f64,
) -> BdtStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let slot = target(out, "out")?;
        *slot = k.0.value(&KernelPoint::new(t, x, y)?)?;
        Ok(())
    })
}

/// # Safety
/// `kernel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bdt_kernel_jet(
    kernel: *const BdtKernel,
    t: f64,
    x: f64,
    y: f64,
    out: *mut BdtJet,
) -> BdtStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let slot = target(out, "out")?;
        let j = k.0.jet(&KernelPoint::new(t, x, y)?)?;
        *slot = BdtJet { value: j.value, dt: j.dt, dx: j.dx, dy: j.dy };
        Ok(())
    })
}

unsafe fn boxed_profile(p: Profile, out: *mut *mut BdtFunction) -> Result<(), Failure> {
    p.validate()?;
    *target(out, "out")? = Box::into_raw(Box::new(BdtFunction(Box::new(p))));
    Ok(())
}

/// `amplitude * exp(-((x - center)/width)^2 / 2)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bdt_function_gaussian(
    amplitude: f64,
    center: f64,
    width: f64,
    out: *mut *mut BdtFunction,
) -> BdtStatus {
    guard(|| {
        *target(out, "out")? = ptr::null_mut();
        boxed_profile(Profile::Gaussian { amplitude, center, width }, out)
    })
}

/// `height` on `[lo, hi)`, zero elsewhere.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bdt_function_indicator(
    lo: f64,
    hi: f64,
    height: f64,
    out: *mut *mut BdtFunction,
) -> BdtStatus {
    guard(|| {
        *target(out, "out")? = ptr::null_mut();
        boxed_profile(Profile::Indicator { lo, hi, height }, out)
    })
}

/// Function given by `n` samples on increasing positive nodes.
///
/// `tail_exponent` is used only with [`BdtTail::PowerLaw`].
///
/// # Safety
/// `nodes` and `values` must point to `n` doubles, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bdt_function_sampled(
    nodes: *const f64,
    values: *const f64,
    n: usize,
    tail: BdtTail,
    tail_exponent: f64,
    out: *mut *mut BdtFunction,
) -> BdtStatus {
    guard(|| {
        let slot = target(out, "out")?;
        *slot = ptr::null_mut();
        let grid = Grid::new(slice(nodes, n, "nodes")?.to_vec())?;
        let tail = match tail {
            BdtTail::Zero => TailPolicy::Zero,
            BdtTail::Constant => TailPolicy::Constant,
            BdtTail::PowerLaw => TailPolicy::PowerLaw(tail_exponent),
        };
        let f = SampledFunction::new(grid, slice(values, n, "values")?.to_vec(), tail)?;
        *slot = Box::into_raw(Box::new(BdtFunction(Box::new(f))));
        Ok(())
    })
}

/// # Safety
/// `function` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bdt_function_free(function: *mut BdtFunction) {
    if !function.is_null() {
        drop(Box::from_raw(function));
    }
}

/// Sequence `a_j` for `j = j_min .. j_min + count - 1` with `count - 1` coefficients `v_j`.
///
/// # Safety
/// `times` must point to `count` doubles, `coefficients` to `count - 1`, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bdt_setup_new(
    j_min: i64,
    times: *const f64,
    coefficients: *const f64,
    count: usize,
    rho: f64,
    out: *mut *mut BdtSetup,
) -> BdtStatus {
    guard(|| {
        let slot = target(out, "out")?;
        *slot = ptr::null_mut();
        let a = slice(times, count, "times")?.to_vec();
        let v = slice(coefficients, count.saturating_sub(1), "coefficients")?.to_vec();
        *slot = Box::into_raw(Box::new(BdtSetup(LacunarySetup::new(j_min, a, v, rho)?)));
        Ok(())
    })
}

/// # Safety
/// `setup` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bdt_setup_free(setup: *mut BdtSetup) {
    if !setup.is_null() {
        drop(Box::from_raw(setup));
    }
}

/// Writes `P_t f` at the `n` increasing points `xs` into `out`.
///
/// # Safety
/// Handles must be live, `xs` and `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn bdt_poisson_apply(
    kernel: *const BdtKernel,
    function: *const BdtFunction,
    t: f64,
    xs: *const f64,
    n: usize,
    out: *mut f64,
) -> BdtStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let f = handle(function, "function")?;
        let grid = Grid::new(slice(xs, n, "xs")?.to_vec())?;
        let r = k.0.apply(f.0.as_ref(), t, &grid)?;
        write_samples(out, r.values())
    })
}

/// Writes `T_N f` for the window `N = (n1, n2)` at the points `xs` into `out`.
///
/// # Safety
/// Handles must be live, `xs` and `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn bdt_apply_t_n(
    kernel: *const BdtKernel,
    setup: *const BdtSetup,
    function: *const BdtFunction,
    n1: i64,
    n2: i64,
    xs: *const f64,
    n: usize,
    out: *mut f64,
) -> BdtStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let s = handle(setup, "setup")?;
        let f = handle(function, "function")?;
        let grid = Grid::new(slice(xs, n, "xs")?.to_vec())?;
        let w = IndexWindow::new(n1, n2)?;
        let r = bessel_dt::transform::apply_t_n(&k.0, &s.0, &w, f.0.as_ref(), &grid)?;
        write_samples(out, r.values())
    })
}

/// Writes the truncated maximal transform `T*_M f` at the points `xs` into `out`.
///
/// # Safety
/// Handles must be live, `xs` and `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn bdt_maximal_t_star(
    kernel: *const BdtKernel,
    setup: *const BdtSetup,
    function: *const BdtFunction,
    m_cap: i64,
    xs: *const f64,
    n: usize,
    out: *mut f64,
) -> BdtStatus {
    guard(|| {
        let k = handle(kernel, "kernel")?;
        let s = handle(setup, "setup")?;
        let f = handle(function, "function")?;
        let grid = Grid::new(slice(xs, n, "xs")?.to_vec())?;
        let cap = TruncationLevel::new(m_cap)?;
        let r = maximal_t_star(&k.0, &s.0, &cap, f.0.as_ref(), &grid)?;
        write_samples(out, r.values())
    })
}

/// Bessel function of the first kind `J_nu(x)` for `nu > -1/2`, `x >= 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bdt_bessel_j(nu: f64, x: f64, out: *mut f64) -> BdtStatus {
    guard(|| {
        let slot = target(out, "out")?;
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::Domain(format!("argument must be finite and nonnegative, got {x}")).into());
        }
        *slot = bessel_j(BesselOrder::new(nu)?, x);
        Ok(())
    })
}

/// Measure `x^{2 lambda} dx` of the interval of `radius` around `center` within the half-line.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bdt_measure_interval(lambda: f64, center: f64, radius: f64, out: *mut f64) -> BdtStatus {
    guard(|| {
        let slot = target(out, "out")?;
        let space = LambdaSpace::new(lambda)?;
        *slot = space.measure_interval(&Interval::new(center, radius)?);
        Ok(())
    })
}
