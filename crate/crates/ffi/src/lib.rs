//! C ABI for tree enumeration, pairing geometry and moment evaluation.
//!
//! Every fallible function returns a [`WtcStatus`]. On failure the message is
//! kept per thread and read back with [`wtc_last_error`]. Handles are opaque
//! and must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use wtchaos::ensemble::SpectralEnsemble;
use wtchaos::model::{catalog, Model};
use wtchaos::moments::{oracle_moment, structural_moment, MomentQuery};
use wtchaos::ntree::{enumerate_codes_capped, tree_count, PolishCode};
use wtchaos::pairing::{
    enumerate_pairings_capped, sigma_dimension, BlockIndexSet, Pairing, SigmaStatus,
};
use wtchaos::{Error, KVec};

/// Result codes shared by all functions.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WtcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Budget = 3,
    Threshold = 4,
    Inconsistent = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> WtcStatus {
    match e {
        Error::Budget { .. } => WtcStatus::Budget,
        Error::Threshold { .. } => WtcStatus::Threshold,
        Error::Inconsistent(_) | Error::Acceptance(_) => WtcStatus::Inconsistent,
        _ => WtcStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WtcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WtcStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            WtcStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            WtcStatus::Internal
        }
    }
}

fn nonnull<T>(p: *const T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(())
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    nonnull(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies `s` NUL-terminated into `buf` (truncating) and returns the full
/// length without the terminator.
unsafe fn copy_out(s: &str, buf: *mut c_char, cap: usize) -> usize {
    if !buf.is_null() && cap > 0 {
        let n = s.len().min(cap - 1);
        std::ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
    }
    s.len()
}

/// Copies the last error message of this thread into `buf`; returns its
/// length. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn wtc_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| copy_out(&e.borrow(), buf, cap))
}

/// Number of `arity`-trees with `n` internal nodes; fails with `Budget` when
/// it does not fit in 64 bits.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn wtc_tree_count(arity: usize, n: usize, out: *mut u64) -> WtcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let c = tree_count(arity, n)?;
        *out = u64::try_from(&c).map_err(|_| Error::Budget {
            what: "tree count",
            requested: u128::MAX,
            cap: u64::MAX as u128,
        })?;
        Ok(())
    })
}

/// Polish codes of all trees of one size, in enumeration order.
pub struct WtcTreeList {
    codes: Vec<PolishCode>,
    text: Vec<String>,
}

/// Enumerates trees with `n` internal nodes, refusing more than `cap`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn wtc_trees_enumerate(
    arity: usize,
    n: usize,
    cap: u64,
    out: *mut *mut WtcTreeList,
) -> WtcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let codes = enumerate_codes_capped(arity, n, cap)?;
        let text = codes.iter().map(|c| c.to_string()).collect();
        *out = Box::into_raw(Box::new(WtcTreeList { codes, text }));
        Ok(())
    })
}

/// # Safety
/// `list` must come from [`wtc_trees_enumerate`].
#[no_mangle]
pub unsafe extern "C" fn wtc_trees_len(list: *const WtcTreeList) -> usize {
    list.as_ref().map_or(0, |l| l.codes.len())
}

/// Writes code `index` as a `0`/`1` string; `len` receives its length.
///
/// # Safety
/// `list` must come from [`wtc_trees_enumerate`]; `buf` must be null or valid
/// for `cap` bytes; `len` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn wtc_trees_code(
    list: *const WtcTreeList,
    index: usize,
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> WtcStatus {
    guard(|| {
        let l = list.as_ref().ok_or(Failure::Null("list"))?;
        let s = l.text.get(index).ok_or_else(|| {
            Error::invalid(format!("index {index} out of range ({})", l.text.len()))
        })?;
        let n = copy_out(s, buf, cap);
        if let Some(len) = len.as_mut() {
            *len = n;
        }
        Ok(())
    })
}

/// # Safety
/// `list` must be null or come from [`wtc_trees_enumerate`], and is invalid
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn wtc_trees_free(list: *mut WtcTreeList) {
    if !list.is_null() {
        drop(Box::from_raw(list));
    }
}

/// All pairings of a block index set.
pub struct WtcPairingList {
    set: BlockIndexSet,
    pairings: Vec<Pairing>,
}

/// Enumerates the pairings of the set with the given block sizes, refusing
/// sets with more than `cap` elements.
///
/// # Safety
/// `sizes` must be valid for `blocks` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn wtc_pairings_enumerate(
    sizes: *const usize,
    blocks: usize,
    cap: usize,
    out: *mut *mut WtcPairingList,
) -> WtcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let sizes = slice(sizes, blocks, "sizes")?;
        if sizes.contains(&0) {
            return Err(Error::invalid("block sizes must be positive").into());
        }
        let set = BlockIndexSet::new(sizes.to_vec());
        let pairings = enumerate_pairings_capped(&set, cap)?;
        *out = Box::into_raw(Box::new(WtcPairingList { set, pairings }));
        Ok(())
    })
}

/// # Safety
/// `list` must come from [`wtc_pairings_enumerate`].
#[no_mangle]
pub unsafe extern "C" fn wtc_pairings_len(list: *const WtcPairingList) -> usize {
    list.as_ref().map_or(0, |l| l.pairings.len())
}

/// Writes the 0-based partner of every flat index of pairing `index` into
/// `partners`, which must hold the set size.
///
/// # Safety
/// `list` must come from [`wtc_pairings_enumerate`]; `partners` must be valid
/// for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn wtc_pairings_partners(
    list: *const WtcPairingList,
    index: usize,
    partners: *mut usize,
    cap: usize,
) -> WtcStatus {
    guard(|| {
        let l = list.as_ref().ok_or(Failure::Null("list"))?;
        nonnull(partners, "partners")?;
        let p = l
            .pairings
            .get(index)
            .ok_or_else(|| Error::invalid(format!("index {index} out of range")))?;
        if cap < p.len() {
            return Err(Error::invalid(format!("buffer holds {cap}, need {}", p.len())).into());
        }
        for m in 0..p.len() {
            *partners.add(m) = p.partner(m);
        }
        Ok(())
    })
}

/// Solution-set geometry of pairing `index` for one `dim`-vector per block,
/// given row-major in `freqs`. `nonempty` is 0 or 1; `s_sigma` is the number
/// of free parameters.
///
/// # Safety
/// `list` must come from [`wtc_pairings_enumerate`]; `freqs` must hold
/// `blocks * dim` values; the outputs must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn wtc_pairings_sigma(
    list: *const WtcPairingList,
    index: usize,
    freqs: *const i64,
    dim: usize,
    nonempty: *mut i32,
    s_sigma: *mut usize,
) -> WtcStatus {
    guard(|| {
        let l = list.as_ref().ok_or(Failure::Null("list"))?;
        nonnull(nonempty, "nonempty")?;
        nonnull(s_sigma, "s_sigma")?;
        let p = l
            .pairings
            .get(index)
            .ok_or_else(|| Error::invalid(format!("index {index} out of range")))?;
        let fs = kvecs(freqs, l.set.blocks(), dim)?;
        let g = sigma_dimension(p, &l.set, &fs)?;
        *nonempty = (g.status == SigmaStatus::Nonempty) as i32;
        *s_sigma = g.s_sigma;
        Ok(())
    })
}

/// # Safety
/// `list` must be null or come from [`wtc_pairings_enumerate`].
#[no_mangle]
pub unsafe extern "C" fn wtc_pairings_free(list: *mut WtcPairingList) {
    if !list.is_null() {
        drop(Box::from_raw(list));
    }
}

unsafe fn kvecs(p: *const i64, count: usize, dim: usize) -> Result<Vec<KVec>, Failure> {
    if !(1..=3).contains(&dim) {
        return Err(Error::invalid(format!("dimension {dim} not in 1..=3")).into());
    }
    let flat = slice(p, count * dim, "frequencies")?;
    Ok(flat.chunks(dim).map(KVec::new).collect())
}

/// A model from the built-in catalog.
pub struct WtcModel(Arc<dyn Model>);

/// Looks up a model by id, e.g. `"toy-1d"` or `"euler-2d"`.
///
/// # Safety
/// `id` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn wtc_model_new(id: *const c_char, out: *mut *mut WtcModel) -> WtcStatus {
    guard(|| {
        nonnull(id, "id")?;
        nonnull(out, "out")?;
        let id = CStr::from_ptr(id)
            .to_str()
            .map_err(|_| Error::invalid("model id is not UTF-8"))?;
        *out = Box::into_raw(Box::new(WtcModel(catalog(id)?)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or come from [`wtc_model_new`].
#[no_mangle]
pub unsafe extern "C" fn wtc_model_free(model: *mut WtcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// A Gaussian initial-datum ensemble on the torus of scale `L`.
pub struct WtcEnsemble(SpectralEnsemble);

/// Ensemble with the same `amplitude` on every component of every mode with
/// `|k/L|_∞ ≤ radius`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn wtc_ensemble_flat(
    dim: usize,
    components: usize,
    scale: usize,
    radius: f64,
    amplitude: f64,
    out: *mut *mut WtcEnsemble,
) -> WtcStatus {
    guard(|| {
        nonnull(out, "out")?;
        if !(1..=3).contains(&dim) || components == 0 || scale == 0 {
            return Err(Error::invalid("need 1 ≤ dim ≤ 3, components ≥ 1 and scale ≥ 1").into());
        }
        let e = SpectralEnsemble::from_profile(dim, components, scale, radius, |_| {
            vec![amplitude; components]
        })?;
        *out = Box::into_raw(Box::new(WtcEnsemble(e)));
        Ok(())
    })
}

/// # Safety
/// `ens` must be null or come from [`wtc_ensemble_flat`].
#[no_mangle]
pub unsafe extern "C" fn wtc_ensemble_free(ens: *mut WtcEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

/// Which moment evaluator to use.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WtcMomentMethod {
    /// Sum over pairings and lattice solution sets.
    Structural = 0,
    /// Symbolic expansion with Gaussian moment rules.
    Oracle = 1,
}

/// `E Π_l û_{n_l}^{(i_l)}(ξ_l)` at time `t` for `factors` factors. Orders and
/// 0-based components have one entry per factor; `kvecs` is row-major with
/// the model's dimension.
///
/// # Safety
/// Handles must be live; arrays must hold the stated lengths (`components`
/// may be null for scalar models); `re` and `im` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn wtc_moment(
    model: *const WtcModel,
    ens: *const WtcEnsemble,
    method: WtcMomentMethod,
    orders: *const usize,
    components: *const usize,
    kvecs_flat: *const i64,
    factors: usize,
    t: f64,
    re: *mut f64,
    im: *mut f64,
) -> WtcStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Failure::Null("model"))?;
        let e = ens.as_ref().ok_or(Failure::Null("ensemble"))?;
        nonnull(re, "re")?;
        nonnull(im, "im")?;
        let orders = slice(orders, factors, "orders")?.to_vec();
        let components = if components.is_null() {
            vec![0; factors]
        } else {
            slice(components, factors, "components")?.to_vec()
        };
        let q = MomentQuery {
            orders,
            components,
            kvecs: kvecs(kvecs_flat, factors, m.0.dim())?,
            t,
        };
        let v = match method {
            WtcMomentMethod::Structural => structural_moment(m.0.as_ref(), &e.0, &q)?,
            WtcMomentMethod::Oracle => oracle_moment(m.0.as_ref(), &e.0, &q)?,
        };
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}
