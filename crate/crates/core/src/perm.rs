//! Single-edge Haar moments of arbitrary Renyi order through sums over the
//! symmetric group.
//!
//! A permutation `σ ∈ S_α` acting on `α` copies of a `d`-dimensional space has
//! trace `d^{c(σ)}`, with `c` the number of cycles. The average of
//! `Tr(ρ_A^α)` after one Haar gate on a two-site edge is
//!
//! ```text
//! C(α, d) = 1 / binom(α + d² - 1, d² - 1) · (1/α!) · Σ_σ d^{c(σ∘τ)} d^{c(σ)}
//! ```
//!
//! where `τ` is the cyclic shift of the copies. Sums are accumulated in exact
//! integer arithmetic and divided once at the end.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest Renyi order for which `S_α` is enumerated.
pub const MAX_ALPHA: usize = 8;

/// A permutation of `{0, ..., len-1}` stored as its image array.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || seen[i] {
                return Err(Error::invalid(format!("{images:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(len: usize) -> Self {
        Self { images: (0..len).collect() }
    }

    /// The cyclic shift `i ↦ i + 1 (mod len)`.
    pub fn shift(len: usize) -> Self {
        Self { images: (0..len).map(|i| (i + 1) % len).collect() }
    }

    /// Product of transpositions given as disjoint pairs, e.g. `(01)(23)`.
    pub fn from_transpositions(len: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut images: Vec<usize> = (0..len).collect();
        for &(a, b) in pairs {
            if a >= len || b >= len {
                return Err(Error::invalid(format!("transposition ({a} {b}) out of range")));
            }
            images.swap(a, b);
        }
        Self::new(images)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "permutations of different degree");
        Self { images: other.images.iter().map(|&j| self.images[j]).collect() }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Self { images: inv }
    }

    /// Number of disjoint cycles, fixed points included.
    pub fn cycle_count(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut cycles = 0;
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.images[i];
            }
        }
        cycles
    }

    /// All permutations of degree `len` (Heap's algorithm).
    pub fn all(len: usize) -> Vec<Self> {
        let mut images: Vec<usize> = (0..len).collect();
        let mut out = vec![Self { images: images.clone() }];
        let mut c = vec![0usize; len];
        let mut i = 1;
        while i < len {
            if c[i] < i {
                if i % 2 == 0 {
                    images.swap(0, i);
                } else {
                    images.swap(c[i], i);
                }
                out.push(Self { images: images.clone() });
                c[i] += 1;
                i = 1;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        out
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.images)
    }
}

/// Number of disjoint cycles of `p`.
pub fn cycle_count(p: &Permutation) -> usize {
    p.cycle_count()
}

/// The constant `N_d = d / (d² + 1)` of the two-site swap twirl.
pub fn nd_constant(d: usize) -> Result<f64> {
    check_dim(d)?;
    let d = d as f64;
    Ok(d / (d * d + 1.0))
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::invalid(format!("local dimension d={d} must be >= 2")));
    }
    Ok(())
}

/// Exact value of `Σ_{σ ∈ S_α} d^{c(target∘σ)} · d^{c(σ)}`.
///
/// The first factor is the trace of `target·σ` on one site, the second the
/// trace of `σ` on the other site of the edge.
pub fn schur_cycle_sum(target: &Permutation, d: usize) -> Result<u128> {
    check_dim(d)?;
    if target.len() > MAX_ALPHA {
        return Err(Error::capacity(format!(
            "enumerating S_{} exceeds the limit α <= {MAX_ALPHA}",
            target.len()
        )));
    }
    let overflow = || Error::capacity(format!("cycle sum overflows 128 bits at d={d}"));
    let d = d as u128;
    let mut total: u128 = 0;
    for sigma in Permutation::all(target.len()) {
        let exp = target.compose(&sigma).cycle_count() + sigma.cycle_count();
        let term = d.checked_pow(exp as u32).ok_or_else(overflow)?;
        total = total.checked_add(term).ok_or_else(overflow)?;
    }
    Ok(total)
}

/// `binom(n, k)` in exact arithmetic.
pub(crate) fn binomial_u128(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n.checked_sub(k)?);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

fn factorial_u128(n: usize) -> u128 {
    (1..=n as u128).product()
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn ratio(num: u128, den: u128) -> f64 {
    let g = gcd(num, den).max(1);
    (num / g) as f64 / (den / g) as f64
}

/// Average of `Tr(ρ^α)` for one reduced site after a Haar gate on an edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentResult {
    pub alpha: usize,
    pub d: usize,
    pub value: f64,
}

/// `C(α, d)` for `1 <= α <= 8`.
pub fn single_edge_alpha_moment(alpha: usize, d: usize) -> Result<MomentResult> {
    check_dim(d)?;
    if alpha == 0 {
        return Err(Error::invalid("Renyi order must be >= 1"));
    }
    if alpha > MAX_ALPHA {
        return Err(Error::capacity(format!(
            "Renyi order {alpha} exceeds the enumeration limit {MAX_ALPHA}"
        )));
    }
    let sum = schur_cycle_sum(&Permutation::shift(alpha), d)?;
    let d2 = (d * d) as u128;
    let sym_dim = binomial_u128(alpha as u128 + d2 - 1, d2 - 1)
        .ok_or_else(|| Error::capacity("symmetric subspace dimension overflows"))?;
    let den = factorial_u128(alpha)
        .checked_mul(sym_dim)
        .ok_or_else(|| Error::capacity("moment denominator overflows"))?;
    Ok(MomentResult { alpha, d, value: ratio(sum, den) })
}

/// `Tr[Π₊ (T^{(12)} ⊗ T^{(34)})]` on one edge, i.e. `(1/24) Σ_σ ...` over `S_4`.
pub fn second_moment_numerator(d: usize) -> Result<f64> {
    let target = Permutation::from_transpositions(4, &[(0, 1), (2, 3)])?;
    Ok(ratio(schur_cycle_sum(&target, d)?, 24))
}

/// Average squared purity `Ī = E[(Tr ρ_A²)²]` after one Haar gate on an edge.
pub fn second_moment_i(d: usize) -> Result<f64> {
    check_dim(d)?;
    let target = Permutation::from_transpositions(4, &[(0, 1), (2, 3)])?;
    let sum = schur_cycle_sum(&target, d)?;
    let d2 = (d * d) as u128;
    let sym_dim = binomial_u128(d2 + 3, 4).ok_or_else(|| Error::capacity("d₊ overflows"))?;
    Ok(ratio(sum, 24 * sym_dim))
}

/// Variance of the purity after one Haar gate on an edge:
/// `2(d²-1)² / [(d²+3)(d²+2)(d²+1)²]`.
pub fn single_edge_purity_variance(d: usize) -> Result<f64> {
    check_dim(d)?;
    let d2 = (d * d) as f64;
    let closed = 2.0 * (d2 - 1.0).powi(2) / ((d2 + 3.0) * (d2 + 2.0) * (d2 + 1.0).powi(2));
    debug_assert!({
        let nd2 = 2.0 * nd_constant(d)?;
        let via_sum = second_moment_i(d)? - nd2 * nd2;
        (via_sum - closed).abs() <= 1e-12
    });
    Ok(closed)
}
