//! Brute-force statevector sampling of Haar random circuits.
//!
//! Basis index `Σ_v s_v d^v`: vertex 0 is the least significant digit.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Bipartition, EdgeProcess, Graph, VertexSet};

/// Largest number of amplitudes the oracle will allocate.
pub const MAX_AMPLITUDES: usize = 1 << 24;
/// Largest gate dimension `d^{|X|}`.
pub const MAX_GATE_DIM: usize = 1 << 12;
/// Samples per parallel work unit; results are merged in chunk order.
const CHUNK: usize = 256;

fn checked_pow(d: usize, n: usize, limit: usize, what: &str) -> Result<usize> {
    let mut total: usize = 1;
    for _ in 0..n {
        total = match total.checked_mul(d) {
            Some(t) if t <= limit => t,
            _ => return Err(Error::capacity(format!("{what} {d}^{n} exceeds {limit}"))),
        };
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    d: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The product state `|0…0⟩`.
    pub fn zero(n: usize, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("local dimension d={d} must be >= 2")));
        }
        let len = checked_pow(d, n, MAX_AMPLITUDES, "state size")?;
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, d, amps })
    }

    pub fn from_amplitudes(n: usize, d: usize, amps: Vec<Complex64>) -> Result<Self> {
        let len = checked_pow(d, n, MAX_AMPLITUDES, "state size")?;
        if amps.len() != len {
            return Err(Error::invalid(format!("expected {len} amplitudes, got {}", amps.len())));
        }
        Ok(Self { n, d, amps })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Applies `u` to the sites of `x`; the lowest site of `x` is the least
    /// significant digit of the gate's local index.
    pub fn apply_gate(&mut self, x: VertexSet, u: &DMatrix<Complex64>) -> Result<()> {
        let sites = x.to_vec();
        if sites.iter().any(|&v| v >= self.n) {
            return Err(Error::invalid(format!("gate support {x:?} exceeds {} vertices", self.n)));
        }
        let dim = checked_pow(self.d, sites.len(), MAX_GATE_DIM, "gate dimension")?;
        if u.nrows() != dim || u.ncols() != dim {
            return Err(Error::invalid(format!(
                "gate is {}x{}, support needs {dim}x{dim}",
                u.nrows(),
                u.ncols()
            )));
        }
        let strides: Vec<usize> = sites.iter().map(|&v| self.d.pow(v as u32)).collect();
        let offsets: Vec<usize> = (0..dim)
            .map(|mut j| {
                let mut off = 0;
                for s in &strides {
                    off += (j % self.d) * s;
                    j /= self.d;
                }
                off
            })
            .collect();
        let mut buf = vec![Complex64::new(0.0, 0.0); dim];
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for base in 0..self.amps.len() {
            if strides.iter().any(|&s| (base / s) % self.d != 0) {
                continue;
            }
            for (b, &o) in buf.iter_mut().zip(&offsets) {
                *b = self.amps[base + o];
            }
            for (r, o) in out.iter_mut().enumerate() {
                *o = (0..dim).map(|c| u[(r, c)] * buf[c]).sum();
            }
            for (&v, &o) in out.iter().zip(&offsets) {
                self.amps[base + o] = v;
            }
        }
        Ok(())
    }

    /// Coefficient matrix `Ψ[a, b]` over the digits of `a_set` and its complement.
    fn split(&self, a_set: VertexSet) -> DMatrix<Complex64> {
        let a_sites = a_set.to_vec();
        let b_sites = a_set.complement(self.n).to_vec();
        let rows = self.d.pow(a_sites.len() as u32);
        let cols = self.d.pow(b_sites.len() as u32);
        let mut psi = DMatrix::zeros(rows, cols);
        for (idx, &amp) in self.amps.iter().enumerate() {
            let digit = |v: usize| (idx / self.d.pow(v as u32)) % self.d;
            let fold = |sites: &[usize]| sites.iter().rev().fold(0, |acc, &v| acc * self.d + digit(v));
            psi[(fold(&a_sites), fold(&b_sites))] = amp;
        }
        psi
    }
}

/// Haar-distributed unitary from the QR decomposition of a complex Ginibre
/// matrix, with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DMatrix<Complex64>> {
    if dim < 1 {
        return Err(Error::invalid("unitary dimension must be positive"));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// `Tr ρ_A^α` of a pure state.
pub fn renyi_moment(psi: &StateVector, a: VertexSet, alpha: usize) -> Result<f64> {
    if alpha == 0 {
        return Err(Error::invalid("Renyi order must be at least 1"));
    }
    if !a.is_subset(VertexSet::full(psi.n)) {
        return Err(Error::invalid(format!("subsystem {a:?} exceeds {} vertices", psi.n)));
    }
    let norm_sq = psi.norm().powi(2);
    if alpha == 1 {
        return Ok(norm_sq);
    }
    // ρ_A and ρ_B share their nonzero spectrum; use the smaller factor.
    let small = if 2 * a.len() <= psi.n { a } else { a.complement(psi.n) };
    let m = psi.split(small);
    let rho = &m * m.adjoint();
    if alpha == 2 {
        return Ok(rho.iter().map(|z| z.norm_sqr()).sum());
    }
    let eig = SymmetricEigen::new(rho);
    Ok(eig.eigenvalues.iter().map(|&l| l.max(0.0).powi(alpha as i32)).sum())
}

/// Streaming mean and variance.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize)]
pub struct SampleStats {
    pub n_samples: u64,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
}

impl SampleStats {
    pub fn push(&mut self, x: f64) {
        self.n_samples += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n_samples as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.n_samples == 0 {
            return *other;
        }
        if other.n_samples == 0 {
            return *self;
        }
        let n = self.n_samples + other.n_samples;
        let (na, nb, nf) = (self.n_samples as f64, other.n_samples as f64, n as f64);
        let delta = other.mean - self.mean;
        Self {
            n_samples: n,
            mean: self.mean + delta * nb / nf,
            m2: self.m2 + other.m2 + delta * delta * na * nb / nf,
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n_samples < 2 {
            0.0
        } else {
            (self.m2 / (self.n_samples - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n_samples == 0 {
            0.0
        } else {
            (self.variance() / self.n_samples as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for SampleStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.push(x);
        }
        s
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct OracleOptions {
    pub alpha: usize,
    pub samples: usize,
    pub seed: u64,
    /// Rotate the fiducial state by Haar single-site unitaries per sample.
    pub random_fiducial: bool,
}

impl OracleOptions {
    pub fn new(alpha: usize, samples: usize, seed: u64) -> Self {
        Self { alpha, samples, seed, random_fiducial: false }
    }
}

/// Samples `Tr ρ_A^α` after `k` Haar gates placed by `proc`.
pub fn estimate_moments(
    g: &Graph,
    proc: &EdgeProcess,
    p: &Bipartition,
    k: usize,
    alpha: usize,
    samples: usize,
    seed: u64,
) -> Result<SampleStats> {
    estimate_moments_with(g, proc, p, k, &OracleOptions::new(alpha, samples, seed))
}

pub fn estimate_moments_with(
    g: &Graph,
    proc: &EdgeProcess,
    p: &Bipartition,
    k: usize,
    opts: &OracleOptions,
) -> Result<SampleStats> {
    if opts.samples < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {}", opts.samples)));
    }
    if opts.alpha == 0 {
        return Err(Error::invalid("Renyi order must be at least 1"));
    }
    if p.n_vertices() != g.n_vertices() {
        return Err(Error::invalid("bipartition and graph have different vertex counts"));
    }
    StateVector::zero(g.n_vertices(), g.local_dim())?;
    for &x in proc.edges() {
        checked_pow(g.local_dim(), x.len(), MAX_GATE_DIM, "gate dimension")?;
    }
    let chunks = opts.samples.div_ceil(CHUNK);
    let partial: Vec<SampleStats> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(opts.samples);
            let mut s = SampleStats::default();
            for i in lo..hi {
                s.push(one_sample(g, proc, p, k, opts, i as u64)?);
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(partial.iter().fold(SampleStats::default(), |acc, s| acc.merge(s)))
}

fn one_sample(
    g: &Graph,
    proc: &EdgeProcess,
    p: &Bipartition,
    k: usize,
    opts: &OracleOptions,
    index: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index);
    let d = g.local_dim();
    let mut psi = StateVector::zero(g.n_vertices(), d)?;
    if opts.random_fiducial {
        for v in 0..g.n_vertices() {
            psi.apply_gate(VertexSet::singleton(v), &haar_unitary(d, &mut rng)?)?;
        }
    }
    for x in proc.sample_with(k, &mut rng)? {
        let u = haar_unitary(d.pow(x.len() as u32), &mut rng)?;
        psi.apply_gate(x, &u)?;
    }
    renyi_moment(&psi, p.a(), opts.alpha)
}
