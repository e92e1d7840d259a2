//! Contiguous Edge Model on a chain, and boundary statistics on a square grid.
//!
//! On a chain of `L` sites split as `A = {0..L_A}`, every averaged observable
//! reachable from `T_A` by nearest-neighbour twirls lies in the span of the
//! prefix swaps `|i⟩ = T_{{0..i}}`, `i = 0..L`. The edge `(v, v+1)` fixes every
//! `|i⟩` except `|v+1⟩ ↦ N_d(|v⟩ + |v+2⟩)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{build_graph, cem_edge_labels, Bipartition, SweepKind, VertexSet};
use crate::perm::{nd_constant, second_moment_i};
use crate::rem::haar_asymptote;
use crate::series::{PuritySeries, SeriesMeta};
use crate::swap::apply_sequence;

/// One sweep of the chain in the contiguous-swap basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainOperator {
    l: usize,
    l_a: usize,
    kind: SweepKind,
    d: usize,
    nd: f64,
    /// Left vertices of the swept edges, in the order gates hit the state.
    sweep: Vec<usize>,
    matrix: DMatrix<f64>,
}

fn check_chain(l: usize, l_a: usize, d: usize) -> Result<f64> {
    if l_a == 0 || l_a >= l {
        return Err(Error::invalid(format!("need 1 <= L_A < L, got L_A={l_a}, L={l}")));
    }
    nd_constant(d)
}

pub fn build_chain_operator(l: usize, l_a: usize, kind: SweepKind, d: usize) -> Result<ChainOperator> {
    let nd = check_chain(l, l_a, d)?;
    let sweep: Vec<usize> = cem_edge_labels(l_a, l - l_a, kind).into_iter().map(|e| e.left_vertex(l_a)).collect();
    // R = E_{x_1} E_{x_2} ... E_{x_n}; right-multiplying by E_v rewrites column v+1.
    let mut m = DMatrix::<f64>::identity(l + 1, l + 1);
    for &v in &sweep {
        let i = v + 1;
        let col = (m.column(i - 1) + m.column(i + 1)) * nd;
        m.set_column(i, &col);
    }
    Ok(ChainOperator { l, l_a, kind, d, nd, sweep, matrix: m })
}

impl ChainOperator {
    pub fn size(&self) -> usize {
        self.l + 1
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn l_a(&self) -> usize {
        self.l_a
    }

    pub fn kind(&self) -> SweepKind {
        self.kind
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `R x`, applied gate by gate in `O(L)` time.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for &v in self.sweep.iter().rev() {
            let i = v + 1;
            let c = self.nd * y[i];
            y[i] = 0.0;
            y[i - 1] += c;
            y[i + 1] += c;
        }
        y
    }
}

/// Purity after `0..=n_c` sweeps starting from `T_A`.
pub fn chain_purity_series(l: usize, l_a: usize, d: usize, kind: SweepKind, n_c: usize) -> Result<PuritySeries> {
    let op = build_chain_operator(l, l_a, kind, d)?;
    let mut x = vec![0.0; l + 1];
    x[l_a] = 1.0;
    let mut values = Vec::with_capacity(n_c + 1);
    values.push(1.0);
    for _ in 0..n_c {
        x = op.apply(&x);
        values.push(x.iter().sum());
    }
    let meta = SeriesMeta::new("cem-chain", d).size("L", l).size("L_A", l_a).kind(kind.to_string());
    Ok(PuritySeries::new(values, meta))
}

/// Worst-sweep purity `Σ_{m<n_c} binom(n_c+m−1, m)·2N_d^{n_c+m}`, exact while
/// `n_c ≤ L_A ≤ L_B`. With `large` set returns `2(N_d/(1−N_d))^{n_c}`.
pub fn chain_worst_closed_form(n_c: usize, d: usize, large: bool) -> Result<f64> {
    let nd = nd_constant(d)?;
    if large {
        return Ok(2.0 * (nd / (1.0 - nd)).powi(n_c as i32));
    }
    if n_c == 0 {
        return Ok(1.0);
    }
    let mut term = nd.powi(n_c as i32);
    let mut sum = 0.0;
    for m in 0..n_c {
        sum += term;
        term *= (n_c + m) as f64 / (m + 1) as f64 * nd;
    }
    Ok(2.0 * sum)
}

/// First best-sweep purity `Σ_X (Σ_{j=2}^{L_X} N_d^j + N_d^{L_X})`, or its
/// large-chain limit `2N_d²/(1−N_d)`.
pub fn chain_best_first_cycle(l_a: usize, l_b: usize, d: usize, large: bool) -> Result<f64> {
    let nd = nd_constant(d)?;
    if large {
        return Ok(2.0 * nd * nd / (1.0 - nd));
    }
    if l_a == 0 || l_b == 0 {
        return Err(Error::invalid("both sides of the chain need at least one site"));
    }
    let side = |len: usize| (2..=len).map(|j| nd.powi(j as i32)).sum::<f64>() + nd.powi(len as i32);
    Ok(side(l_a) + side(l_b))
}

/// Long-time chain purity `(d^{2L−L_A} + d^{L+L_A}) / (d^L (d^L + 1))`.
pub fn chain_asymptote(l: usize, l_a: usize, d: usize) -> Result<f64> {
    if l_a > l {
        return Err(Error::invalid(format!("L_A={l_a} exceeds L={l}")));
    }
    nd_constant(d)?;
    Ok(haar_asymptote(l, l_a, d))
}

/// Leading eigenvalue data of a chain operator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSpectrum {
    pub l: usize,
    pub l_a: usize,
    pub kind: SweepKind,
    /// Largest eigenvalue below the two fixed points (Perron root of the
    /// interior block).
    pub lambda2: f64,
    /// Collatz–Wielandt bracket around `lambda2`.
    pub lambda2_lower: f64,
    pub lambda2_upper: f64,
    /// Eigenvalues within `1e-9` of one.
    pub unit_multiplicity: usize,
}

/// Tolerance for counting unit eigenvalues.
pub const UNIT_TOL: f64 = 1e-9;

/// `|0⟩` and `|L⟩` are fixed columns, so the spectrum is `{1, 1}` together with
/// that of the nonnegative interior block, whose spectral radius is found by
/// power iteration with certified bounds.
pub fn chain_spectrum(l: usize, l_a: usize, kind: SweepKind, d: usize) -> Result<ChainSpectrum> {
    let op = build_chain_operator(l, l_a, kind, d)?;
    let (lower, upper) = interior_perron(&op)?;
    let lambda2 = 0.5 * (lower + upper);
    let unit_multiplicity = if upper < 1.0 - UNIT_TOL {
        2
    } else {
        2 + interior_eigenvalues(&op).iter().filter(|z| (*z - 1.0).norm() <= UNIT_TOL).count()
    };
    Ok(ChainSpectrum { l, l_a, kind, lambda2, lambda2_lower: lower, lambda2_upper: upper, unit_multiplicity })
}

fn interior_apply(op: &ChainOperator, x: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; op.l + 1];
    full[1..op.l].copy_from_slice(x);
    let y = op.apply(&full);
    y[1..op.l].to_vec()
}

fn interior_perron(op: &ChainOperator) -> Result<(f64, f64)> {
    let m = op.l - 1;
    if m == 0 {
        return Ok((0.0, 0.0));
    }
    let mut x = vec![1.0 / m as f64; m];
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for it in 0..200_000 {
        let y = interior_apply(op, &x);
        let total: f64 = y.iter().sum();
        if total == 0.0 {
            return Ok((0.0, 0.0));
        }
        if it % 16 == 0 {
            // Lower bound from nonnegative x, upper bound from a strictly positive
            // shift. Nonnegative products carry no cancellation, so tiny components
            // are accurate and the shift must stay far below them.
            lo = y
                .iter()
                .zip(&x)
                .filter(|(_, &xi)| xi > 0.0)
                .map(|(yi, xi)| yi / xi)
                .fold(f64::INFINITY, f64::min)
                .max(lo);
            let shift = 1e-280;
            let xs: Vec<f64> = x.iter().map(|v| v + shift).collect();
            let ys = interior_apply(op, &xs);
            hi = ys.iter().zip(&xs).map(|(a, b)| a / b).fold(0.0, f64::max).min(hi);
            if hi - lo <= 1e-12 * hi.max(1e-300) {
                break;
            }
        }
        x = y.into_iter().map(|v| v / total).collect();
    }
    if !(lo <= hi) {
        return Err(Error::numerical(format!("Perron bracket [{lo}, {hi}] is inverted")));
    }
    Ok((lo, hi))
}

fn interior_eigenvalues(op: &ChainOperator) -> Vec<Complex64> {
    let m = op.l - 1;
    op.matrix.view((1, 1), (m, m)).into_owned().complex_eigenvalues().iter().copied().collect()
}

/// All `L + 1` eigenvalues from a dense Schur decomposition, sorted by
/// modulus descending. The operator is far from normal, so individual values
/// carry rounding errors well above machine precision for long chains.
pub fn chain_eigenvalues(l: usize, l_a: usize, kind: SweepKind, d: usize) -> Result<Vec<Complex64>> {
    let op = build_chain_operator(l, l_a, kind, d)?;
    let mut ev: Vec<Complex64> = op.matrix.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)));
    Ok(ev)
}

/// `max |R_bestᵀ G − G R_worst|` for the Gram matrix `G_ij = d^{−|i−j|}` of the
/// prefix swaps. Each edge twirl is self-adjoint for that inner product and
/// the best sweep is the worst sweep reversed, so a vanishing residual proves
/// the two operators are similar and share their spectrum exactly.
pub fn best_worst_similarity_residual(l: usize, l_a: usize, d: usize) -> Result<f64> {
    let best = build_chain_operator(l, l_a, SweepKind::Best, d)?;
    let worst = build_chain_operator(l, l_a, SweepKind::Worst, d)?;
    let df = d as f64;
    let g = DMatrix::from_fn(l + 1, l + 1, |i, j| df.powi(-((i as i32 - j as i32).abs())));
    let lhs = best.matrix.transpose() * &g;
    let rhs = &g * &worst.matrix;
    Ok((lhs - rhs).amax())
}

/// Trace-distance bound `½·√(d^{L_A}/d^{L_B})` of the asymptotic reduced
/// state from the maximally mixed state.
pub fn mixedness_bound(d: usize, l_a: usize, l_b: usize) -> Result<f64> {
    nd_constant(d)?;
    if l_a == 0 || l_b == 0 {
        return Err(Error::invalid("both sides of the chain need at least one site"));
    }
    Ok(0.5 * (d as f64).powf((l_a as f64 - l_b as f64) / 2.0))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct GridStats {
    pub purity: f64,
    pub variance: f64,
}

/// One layer of gates across a boundary of `l` disjoint edges.
pub fn grid_boundary_stats(l: usize, d: usize) -> Result<GridStats> {
    if l == 0 {
        return Err(Error::invalid("boundary length must be at least 1"));
    }
    let two_nd = 2.0 * nd_constant(d)?;
    let i_bar = second_moment_i(d)?;
    Ok(GridStats { purity: two_nd.powi(l as i32), variance: i_bar.powi(l as i32) - two_nd.powi(2 * l as i32) })
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct GridOrdering {
    pub boundary_first: f64,
    pub internal_first: f64,
}

/// Four sites `a1, a2 | b1, b2` (indices 0, 1 | 2, 3) with `A = {a1, a2}`:
/// one gate on every edge, either boundary edges first or internal edges first.
pub fn grid_ordering_example(d: usize) -> Result<GridOrdering> {
    let g = build_graph(4, &[vec![0, 1], vec![2, 3], vec![0, 2], vec![1, 3]], d)?;
    let a = Bipartition::for_graph(&g, VertexSet::prefix(2))?.a();
    let e = |x: usize, y: usize| VertexSet::from_indices(&[x, y], 4).expect("valid edge");
    let boundary_first = [e(1, 3), e(0, 2), e(0, 1), e(2, 3)];
    let internal_first = [e(0, 1), e(2, 3), e(1, 3), e(0, 2)];
    Ok(GridOrdering {
        boundary_first: apply_sequence(&g, a, &boundary_first)?.purity(),
        internal_first: apply_sequence(&g, a, &internal_first)?.purity(),
    })
}
