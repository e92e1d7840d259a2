//! C ABI over `rqc_purity`.
//!
//! Every fallible call returns an [`RqcStatus`]; on failure the message is
//! available from [`rqc_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Vertex lists are
//! arrays of `size_t`, edges are given in compressed form (`offsets` of length
//! `n_edges + 1` into a flat `vertices` array).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use rqc_purity::cem::{chain_asymptote, chain_purity_series, chain_spectrum};
use rqc_purity::graph::{boundary_fraction, GraphFile};
use rqc_purity::oracle::{estimate_moments_with, OracleOptions};
use rqc_purity::perm::{single_edge_alpha_moment, single_edge_purity_variance};
use rqc_purity::rem::{complete_graph_asymptote, complete_graph_purity, k_min_bound, rem_purity, spectral_analysis};
use rqc_purity::{build_graph, evolve, Bipartition, EdgeProcess, Error, EvolveMode, Graph, PuritySeries, SweepKind, VertexSet};

/// Result codes shared by every function.
#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RqcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    Numerical = 4,
    Panic = 5,
}

/// Sweep order for the contiguous edge model.
#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RqcSweep {
    Best = 0,
    Worst = 1,
}

/// Opaque graph handle.
pub struct RqcGraph(Graph);

/// Opaque purity series handle.
pub struct RqcSeries(PuritySeries);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(RqcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Invalid(_) => RqcStatus::InvalidArgument,
            Error::Capacity(_) => RqcStatus::Capacity,
            Error::Numerical(_) => RqcStatus::Numerical,
        };
        Failure(code, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RqcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RqcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RqcStatus::Ok
        }
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            RqcStatus::Panic
        }
    }
}

unsafe fn slice_or_empty<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null(what))
    } else {
        Ok(slice::from_raw_parts(p, len))
    }
}

unsafe fn graph_ref<'a>(g: *const RqcGraph) -> Result<&'a Graph, Failure> {
    g.as_ref().map(|g| &g.0).ok_or_else(|| null("graph"))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn bipartition(g: &Graph, a: *const usize, a_len: usize) -> Result<Bipartition, Failure> {
    let a = slice_or_empty(a, a_len, "subsystem")?;
    let set = VertexSet::from_indices(a, g.n_vertices())?;
    Ok(Bipartition::for_graph(g, set)?)
}

unsafe fn series_out(out: *mut *mut RqcSeries, s: PuritySeries) -> Result<(), Failure> {
    write_out(out, Box::into_raw(Box::new(RqcSeries(s))), "series output")
}

fn sweep(kind: RqcSweep) -> SweepKind {
    match kind {
        RqcSweep::Best => SweepKind::Best,
        RqcSweep::Worst => SweepKind::Worst,
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes. Returns 0
/// when the last call succeeded. `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rqc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn rqc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph on `n` vertices with local dimension `d`.
///
/// # Safety
/// `offsets` must hold `n_edges + 1` entries, `vertices` at least
/// `offsets[n_edges]`, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_graph_new(
    n: usize,
    d: usize,
    offsets: *const usize,
    vertices: *const usize,
    n_edges: usize,
    out: *mut *mut RqcGraph,
) -> RqcStatus {
    guard(|| {
        let offsets = slice_or_empty(offsets, n_edges + 1, "offsets")?;
        let total = *offsets.last().expect("n_edges + 1 >= 1");
        if offsets.windows(2).any(|w| w[0] > w[1]) || offsets[0] != 0 {
            return Err(Failure(RqcStatus::InvalidArgument, "offsets must start at 0 and be non-decreasing".into()));
        }
        let verts = slice_or_empty(vertices, total, "vertices")?;
        let edges: Vec<Vec<usize>> = offsets.windows(2).map(|w| verts[w[0]..w[1]].to_vec()).collect();
        let g = build_graph(n, &edges, d)?;
        write_out(out, Box::into_raw(Box::new(RqcGraph(g))), "graph output")
    })
}

/// Parses `{"n": .., "d": .., "edges": [[..], ..]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_graph_from_json(json: *const c_char, out: *mut *mut RqcGraph) -> RqcStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(RqcStatus::InvalidArgument, format!("graph json is not UTF-8: {e}")))?;
        let g = GraphFile::parse(text)?;
        write_out(out, Box::into_raw(Box::new(RqcGraph(g))), "graph output")
    })
}

/// # Safety
/// `g` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn rqc_graph_free(g: *mut RqcGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a valid handle and `n_vertices`, `n_edges` writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_graph_size(g: *const RqcGraph, n_vertices: *mut usize, n_edges: *mut usize) -> RqcStatus {
    guard(|| {
        let g = graph_ref(g)?;
        write_out(n_vertices, g.n_vertices(), "n_vertices")?;
        write_out(n_edges, g.edges().len(), "n_edges")
    })
}

/// Fraction of edges with vertices on both sides of `A`.
///
/// # Safety
/// `a` must hold `a_len` vertex indices and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_boundary_fraction(
    g: *const RqcGraph,
    a: *const usize,
    a_len: usize,
    out: *mut f64,
) -> RqcStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let p = bipartition(g, a, a_len)?;
        write_out(out, boundary_fraction(g, &p), "output")
    })
}

/// Expected purity over `k` uniformly random gates.
///
/// # Safety
/// Pointer arguments as for [`rqc_boundary_fraction`]; `out` receives a new
/// series handle.
#[no_mangle]
pub unsafe extern "C" fn rqc_evolve_uniform(
    g: *const RqcGraph,
    a: *const usize,
    a_len: usize,
    k: usize,
    out: *mut *mut RqcSeries,
) -> RqcStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let p = bipartition(g, a, a_len)?;
        let s = evolve(g, &p, &EdgeProcess::uniform(g), k, EvolveMode::Expectation)?;
        series_out(out, s)
    })
}

/// Purity after every prefix of a fixed sequence of edge indices.
///
/// # Safety
/// `sequence` must hold `len` entries; other pointers as above.
#[no_mangle]
pub unsafe extern "C" fn rqc_evolve_fixed(
    g: *const RqcGraph,
    a: *const usize,
    a_len: usize,
    sequence: *const usize,
    len: usize,
    out: *mut *mut RqcSeries,
) -> RqcStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let p = bipartition(g, a, a_len)?;
        let seq = slice_or_empty(sequence, len, "sequence")?;
        let proc = EdgeProcess::fixed_indices(g, seq.to_vec())?;
        series_out(out, evolve(g, &p, &proc, len, EvolveMode::Expectation)?)
    })
}

/// Expected purity for a Markov edge process. `kernel` is row-major
/// `n_edges × n_edges`.
///
/// # Safety
/// `initial` must hold `n_edges` and `kernel` `n_edges²` entries.
#[no_mangle]
pub unsafe extern "C" fn rqc_evolve_markov(
    g: *const RqcGraph,
    a: *const usize,
    a_len: usize,
    initial: *const f64,
    kernel: *const f64,
    k: usize,
    out: *mut *mut RqcSeries,
) -> RqcStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let p = bipartition(g, a, a_len)?;
        let m = g.edges().len();
        let initial = slice_or_empty(initial, m, "initial")?.to_vec();
        let kernel = slice_or_empty(kernel, m * m, "kernel")?.chunks(m.max(1)).map(<[f64]>::to_vec).collect();
        let proc = EdgeProcess::markov(g, initial, kernel)?;
        series_out(out, evolve(g, &p, &proc, k, EvolveMode::Expectation)?)
    })
}

/// Purity series on the complete graph `K_n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_complete_graph_series(
    n: usize,
    n_a: usize,
    d: usize,
    k: usize,
    out: *mut *mut RqcSeries,
) -> RqcStatus {
    guard(|| series_out(out, complete_graph_purity(n, n_a, d, k)?))
}

/// Purity after `0..=n_c` sweeps of a chain of length `l` with `A` the first
/// `l_a` sites.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_chain_series(
    l: usize,
    l_a: usize,
    d: usize,
    kind: RqcSweep,
    n_c: usize,
    out: *mut *mut RqcSeries,
) -> RqcStatus {
    guard(|| series_out(out, chain_purity_series(l, l_a, d, sweep(kind), n_c)?))
}

/// Number of values in a series (steps plus one); 0 for a null handle.
///
/// # Safety
/// `s` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rqc_series_len(s: *const RqcSeries) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Copies `min(len, series length)` values into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rqc_series_values(s: *const RqcSeries, buf: *mut f64, len: usize) -> RqcStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("series"))?;
        if len > 0 && buf.is_null() {
            return Err(null("buffer"));
        }
        let n = len.min(s.0.len());
        if n > 0 {
            ptr::copy_nonoverlapping(s.0.values.as_ptr(), buf, n);
        }
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn rqc_series_free(s: *mut RqcSeries) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// `E[Tr ρ_A^α]` after one Haar gate on a single edge.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_single_edge_moment(alpha: usize, d: usize, out: *mut f64) -> RqcStatus {
    guard(|| write_out(out, single_edge_alpha_moment(alpha, d)?.value, "output"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_single_edge_variance(d: usize, out: *mut f64) -> RqcStatus {
    guard(|| write_out(out, single_edge_purity_variance(d)?, "output"))
}

/// Random-edge-model purity after `k` steps at boundary fraction `q`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_rem_purity(q: f64, d: usize, k: usize, out: *mut f64) -> RqcStatus {
    guard(|| write_out(out, rem_purity(q, d, k)?, "output"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_complete_graph_asymptote(n: usize, n_a: usize, d: usize, out: *mut f64) -> RqcStatus {
    guard(|| write_out(out, complete_graph_asymptote(n, n_a, d)?, "output"))
}

/// Spectral gap and conditioning of the complete-graph operator.
///
/// # Safety
/// `delta` and `norm_product` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_spectral_gap(n: usize, d: usize, delta: *mut f64, norm_product: *mut f64) -> RqcStatus {
    guard(|| {
        let r = spectral_analysis(n, d)?;
        write_out(delta, r.delta, "delta")?;
        write_out(norm_product, r.norm_product, "norm_product")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_k_min_bound(n: usize, n_a: usize, d: usize, eps: f64, out: *mut u64) -> RqcStatus {
    guard(|| write_out(out, k_min_bound(n, n_a, d, eps)?, "output"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_chain_asymptote(l: usize, l_a: usize, d: usize, out: *mut f64) -> RqcStatus {
    guard(|| write_out(out, chain_asymptote(l, l_a, d)?, "output"))
}

/// Largest eigenvalue below 1 of the chain sweep operator.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_chain_lambda2(l: usize, l_a: usize, d: usize, kind: RqcSweep, out: *mut f64) -> RqcStatus {
    guard(|| write_out(out, chain_spectrum(l, l_a, sweep(kind), d)?.lambda2, "output"))
}

/// Monte Carlo estimate of `E[Tr ρ_A^α]` from Haar-random statevector runs.
/// A null `sequence` draws `k` uniform edges per sample, otherwise the
/// `k = len` edge indices are applied in order.
///
/// # Safety
/// `sequence` must be null or hold `len` entries; `mean` and `stderr`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rqc_oracle_moment(
    g: *const RqcGraph,
    a: *const usize,
    a_len: usize,
    sequence: *const usize,
    len: usize,
    k: usize,
    alpha: usize,
    samples: usize,
    seed: u64,
    mean: *mut f64,
    stderr: *mut f64,
) -> RqcStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let p = bipartition(g, a, a_len)?;
        let (proc, k) = if sequence.is_null() {
            (EdgeProcess::uniform(g), k)
        } else {
            (EdgeProcess::fixed_indices(g, slice::from_raw_parts(sequence, len).to_vec())?, len)
        };
        let s = estimate_moments_with(g, &proc, &p, k, &OracleOptions::new(alpha, samples, seed))?;
        write_out(mean, s.mean, "mean")?;
        write_out(stderr, s.stderr(), "stderr")
    })
}
