//! Exact Haar-averaged purity dynamics in the swap-operator basis.
//!
//! The averaged two-copy observable is tracked as a nonnegative combination
//! `Σ_A c_A T_A` of swap operators on vertex subsets. A Haar gate on an edge
//! `X` maps `T_A ↦ c_keep T_{A\X} + c_join T_{A∪X}` and the purity of any
//! product fiducial state is `Σ_A c_A`.
//!
//! Superoperators compose in reverse gate order: for gates applied as
//! `X_1, ..., X_k` the averaged observable is `R_{X_1}(...R_{X_k}(T_A))`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{sample_sequence, Bipartition, EdgeProcess, Graph, ProcessKind, VertexSet};
use crate::series::{PuritySeries, SeriesMeta};

/// Coefficients below this are dropped after each edge application.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Default limit on the number of stored swap terms.
pub const DEFAULT_TERM_CAP: usize = 1 << 24;

/// Projection of a restricted swap onto `span{1, T_X}` under the Haar twirl.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TwirlCoefficients {
    pub keep: f64,
    pub join: f64,
}

/// Twirl of `T_{A∩X}` over `U(d^m)` for an edge of `m` sites sharing `s`
/// sites with `A`.
///
/// Solves `Tr(O) = a D² + b D`, `Tr(O T_X) = a D + b D²` with `D = d^m`,
/// `Tr O = d^{2m-s}` and `Tr(O T_X) = d^{m+s}`.
pub fn twirl_coefficients(m: usize, s: usize, d: usize) -> Result<TwirlCoefficients> {
    if m < 2 {
        return Err(Error::invalid(format!("edge cardinality {m} must be >= 2")));
    }
    if s > m {
        return Err(Error::invalid(format!("overlap {s} exceeds edge cardinality {m}")));
    }
    if d < 2 {
        return Err(Error::invalid(format!("local dimension d={d} must be >= 2")));
    }
    if s == 0 {
        return Ok(TwirlCoefficients { keep: 1.0, join: 0.0 });
    }
    if s == m {
        return Ok(TwirlCoefficients { keep: 0.0, join: 1.0 });
    }
    // Work with traces divided by D² to stay in range for large edges.
    let df = d as f64;
    let big_d = df.powi(m as i32);
    let t0 = df.powi(-(s as i32)); // d^{2m-s} / D²
    let t1 = df.powi(s as i32 - m as i32); // d^{m+s} / D²
    let den = big_d * big_d - 1.0;
    Ok(TwirlCoefficients {
        keep: (big_d * big_d * t0 - big_d * t1) / den,
        join: (big_d * big_d * t1 - big_d * t0) / den,
    })
}

/// Sparse nonnegative combination of swap operators.
#[derive(Clone, Debug, PartialEq)]
pub struct SwapVector {
    n: usize,
    d: usize,
    terms: BTreeMap<VertexSet, f64>,
}

impl SwapVector {
    /// The single swap operator `T_A`.
    pub fn basis(a: VertexSet, n: usize, d: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(a, 1.0);
        Self { n, d, terms }
    }

    pub fn from_terms(n: usize, d: usize, terms: impl IntoIterator<Item = (VertexSet, f64)>) -> Self {
        let mut v = Self { n, d, terms: BTreeMap::new() };
        for (a, c) in terms {
            v.add(a, c);
        }
        v
    }

    fn zero_like(&self) -> Self {
        Self { n: self.n, d: self.d, terms: BTreeMap::new() }
    }

    fn add(&mut self, a: VertexSet, c: f64) {
        *self.terms.entry(a).or_insert(0.0) += c;
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn coefficient(&self, a: VertexSet) -> f64 {
        self.terms.get(&a).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (VertexSet, f64)> + '_ {
        self.terms.iter().map(|(&a, &c)| (a, c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Ensemble purity `Σ_A c_A`; every `⟨ω⊗ω, T_B⟩` equals one for a
    /// product fiducial state.
    pub fn purity(&self) -> f64 {
        self.terms.values().sum()
    }

    /// Averages over a Haar gate on `x`.
    pub fn apply_edge(&self, x: VertexSet) -> Self {
        let mut out = self.zero_like();
        self.accumulate_edge(x, 1.0, &mut out);
        out.prune();
        out
    }

    fn accumulate_edge(&self, x: VertexSet, weight: f64, out: &mut Self) {
        let m = x.len();
        for (&a, &c) in &self.terms {
            let s = a.intersection(x).len();
            if s == 0 || s == m {
                out.add(a, weight * c);
                continue;
            }
            let tw = twirl_coefficients(m, s, self.d).expect("validated edge");
            out.add(a.difference(x), weight * c * tw.keep);
            out.add(a.union(x), weight * c * tw.join);
        }
    }

    /// Probability-weighted mixture `Σ_X P(X) R_X(self)`.
    pub fn apply_mixture(&self, edges: &[(VertexSet, f64)]) -> Self {
        let mut out = self.zero_like();
        for &(x, p) in edges {
            if p > 0.0 {
                self.accumulate_edge(x, p, &mut out);
            }
        }
        out.prune();
        out
    }

    fn scaled_add(&mut self, other: &Self, w: f64) {
        for (&a, &c) in &other.terms {
            self.add(a, w * c);
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| *c >= PRUNE_THRESHOLD);
    }
}

/// Purity of a swap vector.
pub fn purity(v: &SwapVector) -> f64 {
    v.purity()
}

/// How the edge randomness is treated by [`evolve`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum EvolveMode {
    /// Exact average over edge choices and Haar gates.
    Expectation,
    /// One edge sequence drawn with the seed; exact over Haar gates only.
    Sampled { seed: u64 },
}

/// Limits for [`evolve_with_cap`].
fn check_cap(v: &SwapVector, cap: usize) -> Result<()> {
    if v.term_count() > cap {
        return Err(Error::capacity(format!(
            "swap vector grew to {} terms, above the cap of {cap}",
            v.term_count()
        )));
    }
    Ok(())
}

/// Purity after `k` steps starting from `T_A`, with the default term cap.
pub fn evolve(
    g: &Graph,
    start: &Bipartition,
    proc: &EdgeProcess,
    k: usize,
    mode: EvolveMode,
) -> Result<PuritySeries> {
    evolve_with_cap(g, start, proc, k, mode, DEFAULT_TERM_CAP)
}

pub fn evolve_with_cap(
    g: &Graph,
    start: &Bipartition,
    proc: &EdgeProcess,
    k: usize,
    mode: EvolveMode,
    cap: usize,
) -> Result<PuritySeries> {
    if start.n_vertices() != g.n_vertices() {
        return Err(Error::invalid("bipartition and graph have different vertex counts"));
    }
    let meta = SeriesMeta::new("swap-engine", g.local_dim())
        .size("n", g.n_vertices())
        .size("n_a", start.a().len());
    match mode {
        EvolveMode::Sampled { seed } => {
            let seq = sample_sequence(proc, k, seed)?;
            let mut series = sequence_series(g, start, &seq, cap)?;
            series.meta = meta.kind("sampled").seed(seed);
            Ok(series)
        }
        EvolveMode::Expectation => match proc.kind() {
            ProcessKind::UniformIid => {
                let mut s = iid_series(g, start, proc.edges(), k, cap)?;
                s.meta = meta.kind("expectation-uniform");
                Ok(s)
            }
            ProcessKind::FixedSequence(_) => {
                let seq = sample_sequence(proc, k, 0)?;
                let mut s = sequence_series(g, start, &seq, cap)?;
                s.meta = meta.kind("expectation-fixed");
                Ok(s)
            }
            ProcessKind::MarkovChain { initial, kernel } => {
                let mut s = markov_series(g, start, proc.edges(), initial, kernel, k, cap)?;
                s.meta = meta.kind("expectation-markov");
                Ok(s)
            }
        },
    }
}

fn iid_series(
    g: &Graph,
    start: &Bipartition,
    edges: &[VertexSet],
    k: usize,
    cap: usize,
) -> Result<PuritySeries> {
    if k > 0 && edges.is_empty() {
        return Err(Error::invalid("cannot draw from an empty edge list"));
    }
    let p = 1.0 / edges.len().max(1) as f64;
    let mixture: Vec<(VertexSet, f64)> = edges.iter().map(|&e| (e, p)).collect();
    let mut v = SwapVector::basis(start.a(), g.n_vertices(), g.local_dim());
    let mut values = Vec::with_capacity(k + 1);
    values.push(v.purity());
    for _ in 0..k {
        v = v.apply_mixture(&mixture);
        check_cap(&v, cap)?;
        values.push(v.purity());
    }
    Ok(PuritySeries::new(values, SeriesMeta::default()))
}

/// Purity after every prefix of an explicit gate sequence.
///
/// Each prefix is rebuilt from `T_A` because the last gate acts first on the
/// observable.
fn sequence_series(
    g: &Graph,
    start: &Bipartition,
    seq: &[VertexSet],
    cap: usize,
) -> Result<PuritySeries> {
    let mut values = Vec::with_capacity(seq.len() + 1);
    let mut gates = Vec::with_capacity(seq.len() + 1);
    values.push(1.0);
    gates.push(0);
    let mut gate_total = 0;
    for t in 1..=seq.len() {
        let v = apply_sequence_capped(g, start.a(), &seq[..t], cap)?;
        values.push(v.purity());
        gate_total += seq[t - 1].len();
        gates.push(gate_total);
    }
    let mut s = PuritySeries::new(values, SeriesMeta::default());
    s.gate_counts = Some(gates);
    Ok(s)
}

fn apply_sequence_capped(g: &Graph, a: VertexSet, seq: &[VertexSet], cap: usize) -> Result<SwapVector> {
    let mut v = SwapVector::basis(a, g.n_vertices(), g.local_dim());
    for &x in seq.iter().rev() {
        v = v.apply_edge(x);
        check_cap(&v, cap)?;
    }
    Ok(v)
}

/// Averaged observable `R_{X_1}(...R_{X_k}(T_A))` for gates applied in the
/// order `seq`.
pub fn apply_sequence(g: &Graph, a: VertexSet, seq: &[VertexSet]) -> Result<SwapVector> {
    apply_sequence_capped(g, a, seq, DEFAULT_TERM_CAP)
}

/// Markov edge process: backward recursion over the last-drawn edge.
fn markov_series(
    g: &Graph,
    start: &Bipartition,
    edges: &[VertexSet],
    initial: &[f64],
    kernel: &[Vec<f64>],
    k: usize,
    cap: usize,
) -> Result<PuritySeries> {
    let (n, d) = (g.n_vertices(), g.local_dim());
    let mut values = Vec::with_capacity(k + 1);
    values.push(1.0);
    for steps in 1..=k {
        // conditioned[x] = average of R_{X_t}...R_{X_steps}(T_A) given X_t = x
        let mut conditioned: Vec<SwapVector> =
            edges.iter().map(|&x| SwapVector::basis(start.a(), n, d).apply_edge(x)).collect();
        for _ in 1..steps {
            let mut next = Vec::with_capacity(edges.len());
            for (i, &x) in edges.iter().enumerate() {
                let mut mix = SwapVector::basis(VertexSet::EMPTY, n, d).zero_like();
                for (j, v) in conditioned.iter().enumerate() {
                    if kernel[i][j] > 0.0 {
                        mix.scaled_add(v, kernel[i][j]);
                    }
                }
                let out = mix.apply_edge(x);
                check_cap(&out, cap)?;
                next.push(out);
            }
            conditioned = next;
        }
        let p: f64 = conditioned.iter().zip(initial).map(|(v, &w)| w * v.purity()).sum();
        values.push(p);
    }
    Ok(PuritySeries::new(values, SeriesMeta::default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, Graph};
    use approx::assert_abs_diff_eq;

    fn vs(v: &[usize]) -> VertexSet {
        VertexSet::from_indices(v, 64).unwrap()
    }

    #[test]
    fn two_site_coefficients() {
        let c = twirl_coefficients(2, 1, 2).unwrap();
        assert_abs_diff_eq!(c.keep, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(c.join, 0.4, epsilon = 1e-15);
        for d in 2..7 {
            assert_eq!(twirl_coefficients(2, 0, d).unwrap(), TwirlCoefficients { keep: 1.0, join: 0.0 });
            assert_eq!(twirl_coefficients(3, 3, d).unwrap(), TwirlCoefficients { keep: 0.0, join: 1.0 });
            let nd = d as f64 / (d as f64 * d as f64 + 1.0);
            let c = twirl_coefficients(2, 1, d).unwrap();
            assert_abs_diff_eq!(c.keep, nd, epsilon = 1e-14);
            assert_abs_diff_eq!(c.join, nd, epsilon = 1e-14);
        }
        assert!(twirl_coefficients(1, 0, 2).is_err());
        assert!(twirl_coefficients(2, 3, 2).is_err());
    }

    #[test]
    fn hyperedge_coefficients_reproduce_haar_state_purity() {
        // One site of a Haar-random state on m sites: (d + d^{m-1}) / (d^m + 1).
        for m in 2..6 {
            for d in 2..4 {
                let c = twirl_coefficients(m, 1, d).unwrap();
                let (df, dm) = (d as f64, (d as f64).powi(m as i32));
                let expected = (df + dm / df) / (dm + 1.0);
                assert_abs_diff_eq!(c.keep + c.join, expected, epsilon = 1e-13);
                assert!(c.keep > 0.0 && c.join > 0.0);
            }
        }
    }

    #[test]
    fn straddling_edge_action() {
        let v = SwapVector::basis(vs(&[0, 1]), 4, 2).apply_edge(vs(&[1, 2]));
        assert_abs_diff_eq!(v.coefficient(vs(&[0])), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(v.coefficient(vs(&[0, 1, 2])), 0.4, epsilon = 1e-15);
        assert_eq!(v.term_count(), 2);
        assert_abs_diff_eq!(purity(&v), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn internal_edges_and_fixed_points() {
        let a = vs(&[0, 1, 2]);
        let v = SwapVector::basis(a, 5, 2).apply_edge(vs(&[0, 1]));
        assert_eq!(v, SwapVector::basis(a, 5, 2));
        for x in [vs(&[0, 1]), vs(&[3, 4]), vs(&[1, 2, 3])] {
            for fixed in [VertexSet::EMPTY, VertexSet::full(5)] {
                assert_eq!(SwapVector::basis(fixed, 5, 2).apply_edge(x), SwapVector::basis(fixed, 5, 2));
            }
        }
    }

    #[test]
    fn purity_is_the_coefficient_sum() {
        assert_eq!(SwapVector::basis(vs(&[2]), 3, 2).purity(), 1.0);
        let v = SwapVector::from_terms(3, 2, [(VertexSet::EMPTY, 0.4), (VertexSet::full(3), 0.4)]);
        assert_abs_diff_eq!(v.purity(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn single_edge_graph_saturates() {
        let g = build_graph(2, &[vec![0, 1]], 2).unwrap();
        let p = Bipartition::new(vs(&[0]), 2).unwrap();
        let s = evolve(&g, &p, &EdgeProcess::uniform(&g), 5, EvolveMode::Expectation).unwrap();
        assert_eq!(s.values[0], 1.0);
        for &v in &s.values[1..] {
            assert_abs_diff_eq!(v, 0.8, epsilon = 1e-15);
        }
        let s0 = evolve(&g, &p, &EdgeProcess::uniform(&g), 0, EvolveMode::Expectation).unwrap();
        assert_eq!(s0.values, vec![1.0]);
    }

    #[test]
    fn complete_graph_first_step() {
        let g = Graph::complete(4, 2).unwrap();
        let p = Bipartition::new(vs(&[0, 1]), 4).unwrap();
        let s = evolve(&g, &p, &EdgeProcess::uniform(&g), 1, EvolveMode::Expectation).unwrap();
        let q = 2.0 / 3.0;
        assert_abs_diff_eq!(s.values[1], (1.0 - q) + 2.0 * q * 0.4, epsilon = 1e-15);
    }

    #[test]
    fn sampled_mode_matches_explicit_sequence() {
        let g = Graph::complete(4, 2).unwrap();
        let p = Bipartition::new(vs(&[0]), 4).unwrap();
        let proc = EdgeProcess::uniform(&g);
        let s = evolve(&g, &p, &proc, 6, EvolveMode::Sampled { seed: 3 }).unwrap();
        let seq = sample_sequence(&proc, 6, 3).unwrap();
        for t in 0..=6 {
            let v = apply_sequence(&g, p.a(), &seq[..t]).unwrap();
            assert_abs_diff_eq!(v.purity(), s.values[t], epsilon = 1e-15);
        }
        assert_eq!(s.gate_counts.as_ref().unwrap()[6], 12);
    }

    #[test]
    fn markov_with_uniform_kernel_matches_iid() {
        let g = build_graph(4, &[vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]], 2).unwrap();
        let p = Bipartition::new(vs(&[0, 1]), 4).unwrap();
        let m = g.edges().len();
        let flat = vec![1.0 / m as f64; m];
        let markov = EdgeProcess::markov(&g, flat.clone(), vec![flat; m]).unwrap();
        let a = evolve(&g, &p, &markov, 5, EvolveMode::Expectation).unwrap();
        let b = evolve(&g, &p, &EdgeProcess::uniform(&g), 5, EvolveMode::Expectation).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn deterministic_markov_matches_fixed_sequence() {
        let g = build_graph(4, &[vec![0, 1], vec![1, 2], vec![2, 3]], 2).unwrap();
        let p = Bipartition::new(vs(&[0, 1]), 4).unwrap();
        // 1 -> 0 -> 2 -> 1 -> ...
        let kernel = vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let markov = EdgeProcess::markov(&g, vec![0.0, 1.0, 0.0], kernel).unwrap();
        let fixed = EdgeProcess::fixed_indices(&g, vec![1, 0, 2]).unwrap();
        let a = evolve(&g, &p, &markov, 7, EvolveMode::Expectation).unwrap();
        let b = evolve(&g, &p, &fixed, 7, EvolveMode::Expectation).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn term_cap_is_enforced() {
        let g = Graph::complete(8, 2).unwrap();
        let p = Bipartition::new(vs(&[0, 1, 2, 3]), 8).unwrap();
        let err = evolve_with_cap(&g, &p, &EdgeProcess::uniform(&g), 10, EvolveMode::Expectation, 16)
            .unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
    }
}
