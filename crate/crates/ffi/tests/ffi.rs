use std::ffi::{c_char, CStr};
use std::ptr;

use rqc_purity_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { rqc_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned()
}

fn chain(n: usize) -> *mut RqcGraph {
    let offsets: Vec<usize> = (0..n).map(|i| 2 * i).collect();
    let vertices: Vec<usize> = (0..n - 1).flat_map(|i| [i, i + 1]).collect();
    let mut g = ptr::null_mut();
    let st = unsafe { rqc_graph_new(n, 2, offsets.as_ptr(), vertices.as_ptr(), n - 1, &mut g) };
    assert_eq!(st, RqcStatus::Ok);
    g
}

fn values(s: *const RqcSeries) -> Vec<f64> {
    let n = unsafe { rqc_series_len(s) };
    let mut v = vec![0.0; n];
    assert_eq!(unsafe { rqc_series_values(s, v.as_mut_ptr(), n) }, RqcStatus::Ok);
    v
}

#[test]
fn scalar_closed_forms() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(rqc_single_edge_moment(2, 2, &mut x), RqcStatus::Ok);
        assert!((x - 0.8).abs() < 1e-12);
        assert_eq!(rqc_single_edge_variance(2, &mut x), RqcStatus::Ok);
        assert!((x - 0.6 / 35.0).abs() < 1e-12);
        assert_eq!(rqc_rem_purity(0.5, 2, 2, &mut x), RqcStatus::Ok);
        assert!((x - 0.81).abs() < 1e-12);
        assert_eq!(rqc_complete_graph_asymptote(10, 5, 2, &mut x), RqcStatus::Ok);
        assert!((x - 64.0 / 1025.0).abs() < 1e-15);
        assert_eq!(rqc_chain_asymptote(4, 2, 2, &mut x), RqcStatus::Ok);
        assert!((x - 8.0 / 17.0).abs() < 1e-15);
        let (mut delta, mut norm) = (0.0, 0.0);
        assert_eq!(rqc_spectral_gap(8, 2, &mut delta, &mut norm), RqcStatus::Ok);
        assert!(delta > 0.0 && delta < 1.0 && norm >= 1.0);
        let mut k = 0u64;
        assert_eq!(rqc_k_min_bound(8, 4, 2, 1e-3, &mut k), RqcStatus::Ok);
        assert!(k > 0);
        assert_eq!(rqc_chain_lambda2(20, 10, 2, RqcSweep::Best, &mut x), RqcStatus::Ok);
        assert!((x - 0.64).abs() < 0.05);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(rqc_rem_purity(2.0, 2, 1, &mut x), RqcStatus::InvalidArgument);
        assert!(last_error().contains("outside [0, 1]"));
        assert_eq!(rqc_rem_purity(0.5, 2, 1, ptr::null_mut()), RqcStatus::NullPointer);
        let mut s = ptr::null_mut();
        assert_eq!(rqc_complete_graph_series(100, 3, 2, 5, &mut s), RqcStatus::Capacity);
        assert!(s.is_null());
        assert_eq!(rqc_single_edge_moment(2, 2, &mut x), RqcStatus::Ok);
        assert_eq!(rqc_last_error_message(ptr::null_mut(), 0), 0);
        assert_eq!(rqc_graph_size(ptr::null(), ptr::null_mut(), ptr::null_mut()), RqcStatus::NullPointer);
    }
}

#[test]
fn truncated_error_message_is_terminated() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(rqc_rem_purity(-1.0, 2, 1, &mut x), RqcStatus::InvalidArgument);
        let full = rqc_last_error_message(ptr::null_mut(), 0);
        let mut buf = [1 as c_char; 8];
        assert_eq!(rqc_last_error_message(buf.as_mut_ptr(), buf.len()), full);
        assert_eq!(buf[7], 0);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_bytes().len(), 7);
    }
}

#[test]
fn graph_handles_and_series() {
    let g = chain(3);
    let a = [0usize];
    unsafe {
        let (mut n, mut m) = (0, 0);
        assert_eq!(rqc_graph_size(g, &mut n, &mut m), RqcStatus::Ok);
        assert_eq!((n, m), (3, 2));
        let mut q = 0.0;
        assert_eq!(rqc_boundary_fraction(g, a.as_ptr(), 1, &mut q), RqcStatus::Ok);
        assert_eq!(q, 0.5);

        let mut s = ptr::null_mut();
        assert_eq!(rqc_evolve_uniform(g, a.as_ptr(), 1, 2, &mut s), RqcStatus::Ok);
        let v = values(s);
        assert_eq!(v.len(), 3);
        assert!((v[1] - 0.9).abs() < 1e-12 && (v[2] - 0.83).abs() < 1e-12);
        rqc_series_free(s);

        let seq = [1usize, 0];
        assert_eq!(rqc_evolve_fixed(g, a.as_ptr(), 1, seq.as_ptr(), 2, &mut s), RqcStatus::Ok);
        assert!((values(s)[2] - 0.72).abs() < 1e-12);
        rqc_series_free(s);

        let initial = [1.0, 0.0];
        let kernel = [0.0, 1.0, 1.0, 0.0];
        assert_eq!(rqc_evolve_markov(g, a.as_ptr(), 1, initial.as_ptr(), kernel.as_ptr(), 2, &mut s), RqcStatus::Ok);
        // alternating edges starting at (0,1) equals the fixed sequence 0, 1
        let seq = [0usize, 1];
        let mut f = ptr::null_mut();
        assert_eq!(rqc_evolve_fixed(g, a.as_ptr(), 1, seq.as_ptr(), 2, &mut f), RqcStatus::Ok);
        assert!((values(s)[2] - values(f)[2]).abs() < 1e-12);
        rqc_series_free(s);
        rqc_series_free(f);

        let bad = [7usize];
        assert_eq!(rqc_evolve_uniform(g, bad.as_ptr(), 1, 2, &mut s), RqcStatus::InvalidArgument);
        assert_eq!(rqc_evolve_fixed(g, a.as_ptr(), 1, bad.as_ptr(), 1, &mut s), RqcStatus::InvalidArgument);

        let (mut mean, mut err) = (0.0, 0.0);
        let st = rqc_oracle_moment(g, a.as_ptr(), 1, seq.as_ptr(), 2, 0, 2, 4000, 3, &mut mean, &mut err);
        assert_eq!(st, RqcStatus::Ok);
        // (0,1) then (1,2): the second gate misses A
        assert!((mean - 0.8).abs() < 3.0 * err, "{mean} ± {err}");
        rqc_graph_free(g);
    }
}

#[test]
fn json_graphs_and_series_families() {
    unsafe {
        let mut g = ptr::null_mut();
        let json = c"{\"n\": 4, \"d\": 2, \"edges\": [[0, 1, 2], [2, 3]]}";
        assert_eq!(rqc_graph_from_json(json.as_ptr(), &mut g), RqcStatus::Ok);
        let mut m = 0;
        let mut n = 0;
        assert_eq!(rqc_graph_size(g, &mut n, &mut m), RqcStatus::Ok);
        assert_eq!((n, m), (4, 2));
        rqc_graph_free(g);

        let bad = c"{\"n\": 2, \"d\": 2, \"edges\": [[0, 0]]}";
        let mut g = ptr::null_mut();
        assert_eq!(rqc_graph_from_json(bad.as_ptr(), &mut g), RqcStatus::InvalidArgument);
        assert!(g.is_null());

        let mut s = ptr::null_mut();
        assert_eq!(rqc_complete_graph_series(10, 5, 2, 400, &mut s), RqcStatus::Ok);
        assert!((values(s)[400] - 64.0 / 1025.0).abs() < 1e-6);
        rqc_series_free(s);
        assert_eq!(rqc_chain_series(16, 8, 2, RqcSweep::Worst, 1, &mut s), RqcStatus::Ok);
        assert!((values(s)[1] - 0.8).abs() < 1e-12);
        rqc_series_free(s);
        rqc_series_free(ptr::null_mut());
        rqc_graph_free(ptr::null_mut());
        assert_eq!(rqc_series_len(ptr::null()), 0);
    }
}

#[test]
fn version_is_terminated() {
    let v = unsafe { CStr::from_ptr(rqc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
