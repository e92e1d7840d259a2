//! Random Edge Model closed forms and the complete-graph spin-block reduction.
//!
//! On `K_n` the averaged superoperator commutes with vertex permutations, so
//! the symmetric sector of the subset basis is spanned by the vectors
//! `|n_A⟩ = binom(n, n_A)^{-1/2} Σ_{|A| = n_A} T_A`, `n_A = 0..n`. In that basis
//! the operator is tridiagonal.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::perm::{binomial_u128, nd_constant, second_moment_i, single_edge_alpha_moment};
use crate::series::{PuritySeries, SeriesMeta};

/// Largest complete graph handled by the spin-block routines.
pub const MAX_SPIN_N: usize = 64;

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("boundary probability q={q} is outside [0, 1]")));
    }
    Ok(())
}

/// `(1 − q(1 − 2N_d))^k`
pub fn rem_purity(q: f64, d: usize, k: usize) -> Result<f64> {
    check_q(q)?;
    let nd = nd_constant(d)?;
    Ok((1.0 - q * (1.0 - 2.0 * nd)).powi(k as i32))
}

/// One REM step for Renyi order `alpha`: `1 + q(C(α,d) − 1)`.
pub fn rem_alpha_purity(q: f64, d: usize, alpha: usize) -> Result<f64> {
    check_q(q)?;
    let c = single_edge_alpha_moment(alpha, d)?.value;
    Ok(1.0 + q * (c - 1.0))
}

/// Variance of the one-step REM purity; `approx` gives the small-`q` form.
pub fn rem_variance(q: f64, d: usize, approx: bool) -> Result<f64> {
    check_q(q)?;
    let nd = nd_constant(d)?;
    let i_bar = second_moment_i(d)?;
    if approx {
        Ok(q * (1.0 + i_bar - 4.0 * nd))
    } else {
        let mean = 1.0 - q + 2.0 * q * nd;
        Ok((1.0 - q + q * i_bar) - mean * mean)
    }
}

/// Lower bound on the REM Renyi-2 entropy, in bits.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct RenyiBound {
    pub bound: f64,
    /// Small-`q` linearization `q·k·(1 − 2N_d)·log₂ e`.
    pub linearized: f64,
}

pub fn renyi2_bound(q: f64, d: usize, k: usize) -> Result<RenyiBound> {
    check_q(q)?;
    let x = q * (1.0 - 2.0 * nd_constant(d)?);
    let k = k as f64;
    Ok(RenyiBound {
        bound: -k * (-x).ln_1p() / std::f64::consts::LN_2,
        linearized: k * x * std::f64::consts::LOG2_E,
    })
}

/// Averaged REM superoperator on `K_n` restricted to the symmetric sector.
///
/// `diag[i]`, `upper[i] = R[i][i+1]` and `lower[i] = R[i+1][i]`, where the
/// index `i` is the subsystem size `n_A` (equivalently `m = i − n/2`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpinBlock {
    pub n: usize,
    pub d: usize,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

pub fn build_spin_block(n: usize, d: usize) -> Result<SpinBlock> {
    if n < 2 {
        return Err(Error::invalid(format!("complete graph needs n >= 2, got {n}")));
    }
    if n > MAX_SPIN_N {
        return Err(Error::capacity(format!("n={n} exceeds the limit of {MAX_SPIN_N}")));
    }
    let nd = nd_constant(d)?;
    let edges = (n * (n - 1) / 2) as f64;
    let diag = (0..=n).map(|i| 1.0 - (i * (n - i)) as f64 / edges).collect();
    let lower = (0..n)
        .map(|i| nd / edges * i as f64 * (((n - i) * (i + 1)) as f64).sqrt())
        .collect();
    let upper = (0..n)
        .map(|i| nd / edges * (n - i - 1) as f64 * (((i + 1) * (n - i)) as f64).sqrt())
        .collect();
    Ok(SpinBlock { n, d, diag, upper, lower })
}

impl SpinBlock {
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..=n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i - 1] * x[i - 1];
                }
                if i < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n + 1, n + 1);
        for i in 0..=n {
            m[(i, i)] = self.diag[i];
        }
        for i in 0..n {
            m[(i, i + 1)] = self.upper[i];
            m[(i + 1, i)] = self.lower[i];
        }
        m
    }
}

fn sqrt_binomials(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| (binomial_u128(n as u128, i as u128).expect("n <= 64 fits in u128") as f64).sqrt())
        .collect()
}

fn check_sizes(n: usize, n_a: usize) -> Result<()> {
    if n_a > n {
        return Err(Error::invalid(format!("n_a={n_a} exceeds n={n}")));
    }
    Ok(())
}

/// REM purity on `K_n` for a subsystem of `n_a` vertices, steps `0..=k`.
pub fn complete_graph_purity(n: usize, n_a: usize, d: usize, k: usize) -> Result<PuritySeries> {
    check_sizes(n, n_a)?;
    let block = build_spin_block(n, d)?;
    let w = sqrt_binomials(n);
    let mut x = vec![0.0; n + 1];
    x[n_a] = 1.0;
    let mut values = Vec::with_capacity(k + 1);
    for step in 0..=k {
        values.push(w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / w[n_a]);
        if step < k {
            x = block.apply(&x);
        }
    }
    let meta = SeriesMeta::new("rem-complete", d).size("n", n).size("n_a", n_a);
    Ok(PuritySeries::new(values, meta))
}

/// Long-time purity on `K_n`: `(d^{2n−n_a} + d^{n+n_a}) / (d^n (d^n + 1))`.
pub fn complete_graph_asymptote(n: usize, n_a: usize, d: usize) -> Result<f64> {
    check_sizes(n, n_a)?;
    nd_constant(d)?;
    Ok(haar_asymptote(n, n_a, d))
}

/// Purity of `n_a` sites of a Haar-random state on `n` sites, evaluated as
/// `(d^{−n_a} + d^{n_a−n}) / (1 + d^{−n})` to stay finite for large `n`.
pub(crate) fn haar_asymptote(n: usize, n_a: usize, d: usize) -> f64 {
    let df = d as f64;
    (df.powi(-(n_a as i32)) + df.powi(n_a as i32 - n as i32)) / (1.0 + df.powi(-(n as i32)))
}

/// Spectrum and conditioning of a spin block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub n: usize,
    pub d: usize,
    /// `1 − λ₃`, the distance of the largest sub-unit eigenvalue from 1.
    pub delta: f64,
    /// `‖M‖_∞·‖M⁻¹‖_∞` for the diagonalizing transform `M = Uᵀ S`.
    pub norm_product: f64,
    /// All `n + 1` eigenvalues, sorted descending.
    pub eigenvalues: Vec<f64>,
}

impl GapReport {
    /// Number of eigenvalues within `tol` of one.
    pub fn unit_multiplicity(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|&&l| (l - 1.0).abs() <= tol).count()
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Diagonalizes the spin block through a diagonal similarity to a symmetric
/// matrix.
///
/// The end states `n_A = 0, n` are fixed points that only receive weight, so
/// the matrix is block triangular: the ends contribute two unit eigenvalues
/// and the interior block `1..n−1` is symmetrized. `M` and its norms refer to
/// that interior block.
pub fn spectral_analysis(n: usize, d: usize) -> Result<GapReport> {
    let block = build_spin_block(n, d)?;
    let m = n - 1;
    if m == 1 {
        let lam = block.diag[1];
        return Ok(GapReport { n, d, delta: 1.0 - lam, norm_product: 1.0, eigenvalues: vec![1.0, 1.0, lam] });
    }
    // s[j] scales interior state j+1
    let mut s = vec![1.0; m];
    let mut h = DMatrix::zeros(m, m);
    for j in 0..m {
        h[(j, j)] = block.diag[j + 1];
    }
    for j in 0..m - 1 {
        let (up, lo) = (block.upper[j + 1], block.lower[j + 1]);
        if !(up > 0.0 && lo > 0.0) {
            return Err(Error::numerical(format!(
                "coupling product {} at index {} is not positive",
                up * lo,
                j + 1
            )));
        }
        s[j + 1] = s[j] * (up / lo).sqrt();
        let off = (up * lo).sqrt();
        h[(j, j + 1)] = off;
        h[(j + 1, j)] = off;
    }
    let eig = SymmetricEigen::new(h);
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let lam3 = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let sm = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.clone()));
    let u = &eig.eigenvectors;
    let mmat = u.transpose() * &sm;
    let sinv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(m, s.iter().map(|x| 1.0 / x)));
    let minv = sinv * u;
    let norm_product = inf_norm(&mmat) * inf_norm(&minv);

    eigenvalues.push(1.0);
    eigenvalues.push(1.0);
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    Ok(GapReport { n, d, delta: 1.0 - lam3, norm_product, eigenvalues })
}

/// Spectral analysis for each `n` in parallel, in input order.
pub fn gap_scan(ns: &[usize], d: usize) -> Result<Vec<GapReport>> {
    ns.par_iter().map(|&n| spectral_analysis(n, d)).collect()
}

/// Iteration count after which the purity is guaranteed within `eps` of its
/// limit: `⌈(ln C + ln(‖M‖‖M⁻¹‖) + ln(1/ε)) / Δ⌉` with `C = binom(n, n_a)^{-1/2}`.
pub fn k_min_bound(n: usize, n_a: usize, d: usize, eps: f64) -> Result<u64> {
    let report = spectral_analysis(n, d)?;
    k_min_from_report(&report, n_a, eps)
}

pub fn k_min_from_report(report: &GapReport, n_a: usize, eps: f64) -> Result<u64> {
    check_sizes(report.n, n_a)?;
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps={eps} must be positive")));
    }
    let ln_c = -0.5 * (binomial_u128(report.n as u128, n_a as u128).expect("n <= 64") as f64).ln();
    let k = (ln_c + report.norm_product.ln() - eps.ln()) / report.delta;
    Ok(k.ceil().max(0.0) as u64)
}

/// First step `k` with `P_k − P_∞ ≤ eps`; the series decreases monotonically
/// to its limit, so every later step is also within `eps`.
pub fn empirical_convergence_step(n: usize, n_a: usize, d: usize, eps: f64, max_k: usize) -> Result<usize> {
    check_sizes(n, n_a)?;
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps={eps} must be positive")));
    }
    let block = build_spin_block(n, d)?;
    let p_inf = haar_asymptote(n, n_a, d);
    let w = sqrt_binomials(n);
    let mut x = vec![0.0; n + 1];
    x[n_a] = 1.0;
    for k in 0..=max_k {
        let p = w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / w[n_a];
        if (p - p_inf).abs() <= eps {
            return Ok(k);
        }
        x = block.apply(&x);
    }
    Err(Error::capacity(format!("not within {eps} of the limit after {max_k} steps")))
}
