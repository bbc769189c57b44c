//! Exhaustive exclusive projector histories at equal spacing and the
//! decoherence matrix built from the reduced Markovian propagator.
//!
//! A history is a sequence of projector indices (j₁,…,j_N) applied at times
//! Δt, 2Δt, …, NΔt. The decoherence matrix D over pairs of histories is
//! Hermitian, PSD, trace-1, and block-diagonal in the final index; it is
//! stored as one dense block per final projector.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::dynamics::{DensityMatrix, NetworkModel, PropagatorCache};
use crate::numerics::{self, CMatrix};
use crate::{Error, Result, Scalar};

/// Default cap on the number of decoherence-matrix entries d_b^(2N).
pub const DEFAULT_ENTRY_CAP: u64 = 100_000_000;

/// Projection basis for history construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionBasis {
    /// Localized chromophore states |i⟩.
    Site,
    /// Eigenstates |E_i⟩ of the network Hamiltonian.
    Exciton,
}

impl std::fmt::Display for ProjectionBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProjectionBasis::Site => write!(f, "site"),
            ProjectionBasis::Exciton => write!(f, "exciton"),
        }
    }
}

/// Defines an exhaustive exclusive history set: basis, number of equally
/// spaced projections, and their spacing in ps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistorySpec<T> {
    pub basis: ProjectionBasis,
    pub n_projections: usize,
    pub step: T,
    /// Forced true when the model has a trap, so that ΣP = I on the full
    /// sink-inclusive space.
    pub include_sink_projector: bool,
}

impl<T: Scalar> HistorySpec<T> {
    pub fn new(basis: ProjectionBasis, n_projections: usize, step: T) -> Result<Self> {
        if n_projections == 0 {
            return Err(Error::InvalidGrid("need at least one projection".into()));
        }
        if step <= T::zero() || !step.is_finite() {
            return Err(Error::InvalidGrid("projection spacing must be > 0".into()));
        }
        Ok(Self {
            basis,
            n_projections,
            step,
            include_sink_projector: true,
        })
    }
}

/// Orthonormal rank-1 projector family, stored by unit vectors.
#[derive(Debug, Clone)]
pub struct ProjectorFamily<T: Scalar> {
    vectors: Vec<Array1<Complex<T>>>,
}

impl<T: Scalar> ProjectorFamily<T> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, i: usize) -> &Array1<Complex<T>> {
        &self.vectors[i]
    }

    /// Dense projector |v_i⟩⟨v_i|.
    pub fn projector(&self, i: usize) -> CMatrix<T> {
        let v = &self.vectors[i];
        let d = v.len();
        Array2::from_shape_fn((d, d), |(r, c)| v[r] * v[c].conj())
    }

    /// Max entrywise deviation of ΣP from the identity.
    pub fn completeness_deviation(&self) -> T {
        let d = self.vectors[0].len();
        let mut sum = Array2::from_elem((d, d), Complex::<T>::zero());
        for i in 0..self.len() {
            sum = sum + self.projector(i);
        }
        let id = numerics::identity::<T>(d);
        (&sum - &id).iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }
}

/// Build the projector family for a model: site or exciton basis, extended
/// with the sink projector when the model is trapped.
pub fn projector_family<T: Scalar>(
    model: &NetworkModel<T>,
    basis: ProjectionBasis,
) -> Result<ProjectorFamily<T>> {
    let d0 = model.n_sites();
    let d = model.dim();
    let mut vectors = Vec::with_capacity(d);
    match basis {
        ProjectionBasis::Site => {
            for i in 0..d0 {
                let mut v = Array1::from_elem(d, Complex::<T>::zero());
                v[i] = Complex::new(T::one(), T::zero());
                vectors.push(v);
            }
        }
        ProjectionBasis::Exciton => {
            let h = model
                .hamiltonian()
                .mapv(|x| Complex::new(x, T::zero()));
            let eig = numerics::eig_hermitian(&h)?;
            for i in 0..d0 {
                let mut v = Array1::from_elem(d, Complex::<T>::zero());
                for r in 0..d0 {
                    v[r] = eig.eigenvectors[(r, i)];
                }
                vectors.push(v);
            }
        }
    }
    if model.trap().is_some() {
        let mut v = Array1::from_elem(d, Complex::<T>::zero());
        v[d - 1] = Complex::new(T::one(), T::zero());
        vectors.push(v);
    }
    Ok(ProjectorFamily { vectors })
}

/// One history: the sequence of projector indices (j₁,…,j_N), 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryIndex(pub Vec<usize>);

/// Result of a decoherence check at a given tolerance.
#[derive(Debug, Clone, Copy)]
pub struct DecoherenceCheck<T> {
    /// D_jk = 0 for all j != k (within tol).
    pub medium: bool,
    /// Re D_jk = 0 for all j != k (within tol).
    pub weak: bool,
    pub max_offdiag: T,
}

/// Decoherence matrix over a history set, stored as d_b dense blocks over
/// the final index (entries with j_N != k_N vanish by construction).
#[derive(Debug, Clone)]
pub struct DecoherenceMatrix<T: Scalar> {
    basis_size: usize,
    n_projections: usize,
    step: T,
    blocks: Vec<CMatrix<T>>,
}

impl<T: Scalar> DecoherenceMatrix<T> {
    pub fn basis_size(&self) -> usize {
        self.basis_size
    }

    pub fn n_projections(&self) -> usize {
        self.n_projections
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn n_histories(&self) -> usize {
        self.basis_size.pow(self.n_projections as u32)
    }

    /// Rows per final-index block: d_b^(N−1).
    pub fn block_size(&self) -> usize {
        self.basis_size.pow(self.n_projections as u32 - 1)
    }

    /// Sub-block of histories sharing final index `site`.
    pub fn final_block(&self, site: usize) -> Result<&CMatrix<T>> {
        self.blocks.get(site).ok_or(Error::IndexOutOfRange {
            index: site,
            len: self.blocks.len(),
        })
    }

    pub fn blocks(&self) -> &[CMatrix<T>] {
        &self.blocks
    }

    fn split_index(&self, j: &HistoryIndex) -> Result<(usize, usize)> {
        if j.0.len() != self.n_projections {
            return Err(Error::IndexOutOfRange {
                index: j.0.len(),
                len: self.n_projections,
            });
        }
        let mut inner = 0usize;
        for &jl in &j.0[..self.n_projections - 1] {
            if jl >= self.basis_size {
                return Err(Error::IndexOutOfRange {
                    index: jl,
                    len: self.basis_size,
                });
            }
            inner = inner * self.basis_size + jl;
        }
        let last = j.0[self.n_projections - 1];
        if last >= self.basis_size {
            return Err(Error::IndexOutOfRange {
                index: last,
                len: self.basis_size,
            });
        }
        Ok((last, inner))
    }

    /// Matrix element D_jk; zero when the final indices differ.
    pub fn entry(&self, j: &HistoryIndex, k: &HistoryIndex) -> Result<Complex<T>> {
        let (jf, ji) = self.split_index(j)?;
        let (kf, ki) = self.split_index(k)?;
        if jf != kf {
            return Ok(Complex::zero());
        }
        Ok(self.blocks[jf][(ji, ki)])
    }

    /// Diagonal of D: history weights, ordered by (final index, inner
    /// lexicographic prefix).
    pub fn weights(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_histories());
        for b in &self.blocks {
            out.extend(b.diag().iter().map(|z| z.re));
        }
        out
    }

    pub fn trace(&self) -> T {
        self.blocks
            .iter()
            .map(|b| b.diag().iter().map(|z| z.re).sum::<T>())
            .sum()
    }

    /// Weight of the coarse-grained history merging `histories`: the sum of
    /// the sub-block of D they span.
    pub fn coarse_grain_weight(&self, histories: &[HistoryIndex]) -> Result<T> {
        if histories.is_empty() {
            return Err(Error::InvalidGrid("empty history set".into()));
        }
        let mut acc = Complex::<T>::zero();
        for j in histories {
            for k in histories {
                acc = acc + self.entry(j, k)?;
            }
        }
        Ok(acc.re)
    }

    /// Global interference of histories ending at `site`: the sum of the
    /// off-diagonal entries of the final block (real by Hermiticity).
    pub fn interference(&self, site: usize) -> Result<T> {
        let b = self.final_block(site)?;
        let total = b.iter().fold(Complex::<T>::zero(), |a, z| a + *z);
        let diag: T = b.diag().iter().map(|z| z.re).sum();
        Ok(total.re - diag)
    }

    /// Sum of the weights of histories ending at `site`.
    pub fn final_weight_sum(&self, site: usize) -> Result<T> {
        Ok(self.final_block(site)?.diag().iter().map(|z| z.re).sum())
    }

    pub fn decoherence_check(&self, tol: T) -> DecoherenceCheck<T> {
        let mut max_off = T::zero();
        let mut max_re = T::zero();
        for b in &self.blocks {
            let n = b.nrows();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let z = b[(i, j)];
                    max_off = max_off.max(z.norm());
                    max_re = max_re.max(z.re.abs());
                }
            }
        }
        DecoherenceCheck {
            medium: max_off < tol,
            weak: max_re < tol,
            max_offdiag: max_off,
        }
    }

    /// Binary dump: header (N, d_b, Δt) then the dense blocks in final-index
    /// order, row-major, each entry as little-endian f64 (re, im).
    pub fn write_blocks<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.n_projections as u64).to_le_bytes())?;
        w.write_all(&(self.basis_size as u64).to_le_bytes())?;
        w.write_all(&self.step.to_f64().unwrap_or(f64::NAN).to_le_bytes())?;
        for b in &self.blocks {
            for z in b.iter() {
                w.write_all(&z.re.to_f64().unwrap_or(f64::NAN).to_le_bytes())?;
                w.write_all(&z.im.to_f64().unwrap_or(f64::NAN).to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Read a dump produced by [`write_blocks`](Self::write_blocks).
    pub fn read_blocks<R: Read>(r: &mut R) -> Result<DecoherenceMatrix<f64>> {
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)?;
        let n = u64::from_le_bytes(buf8) as usize;
        r.read_exact(&mut buf8)?;
        let db = u64::from_le_bytes(buf8) as usize;
        r.read_exact(&mut buf8)?;
        let step = f64::from_le_bytes(buf8);
        if n == 0 || db == 0 {
            return Err(Error::ParseError("empty decoherence dump header".into()));
        }
        let bs = db.pow(n as u32 - 1);
        let mut blocks = Vec::with_capacity(db);
        for _ in 0..db {
            let mut data = Vec::with_capacity(bs * bs);
            for _ in 0..bs * bs {
                r.read_exact(&mut buf8)?;
                let re = f64::from_le_bytes(buf8);
                r.read_exact(&mut buf8)?;
                let im = f64::from_le_bytes(buf8);
                data.push(Complex::new(re, im));
            }
            blocks.push(
                Array2::from_shape_vec((bs, bs), data)
                    .map_err(|e| Error::ParseError(e.to_string()))?,
            );
        }
        Ok(DecoherenceMatrix {
            basis_size: db,
            n_projections: n,
            step,
            blocks,
        })
    }
}

/// Build the decoherence matrix for `spec` from `rho0`, reusing propagators
/// from `cache`. Depth-first over prefix pairs; entries with j >= k are
/// computed and mirrored by Hermiticity.
pub fn build_decoherence_matrix_cached<T: Scalar>(
    cache: &PropagatorCache<T>,
    rho0: &DensityMatrix<T>,
    spec: &HistorySpec<T>,
    entry_cap: u64,
) -> Result<DecoherenceMatrix<T>> {
    let model = cache.model();
    let family = projector_family(model, spec.basis)?;
    let db = family.len();
    let n = spec.n_projections;
    let entries = (db as u128)
        .checked_pow(2 * n as u32)
        .unwrap_or(u128::MAX);
    if entries > entry_cap as u128 {
        return Err(Error::BudgetExceeded {
            entries,
            cap: entry_cap,
        });
    }
    if rho0.dim() != model.dim() {
        return Err(Error::StateInvalid(format!(
            "state dimension {} does not match model dimension {}",
            rho0.dim(),
            model.dim()
        )));
    }
    let prop = cache.get(spec.step)?;

    let bs = db.pow(n as u32 - 1);
    let mut blocks = vec![Array2::from_elem((bs, bs), Complex::<T>::zero()); db];

    if n == 1 {
        let evolved = prop.apply(rho0.matrix());
        for (j, block) in blocks.iter_mut().enumerate() {
            block[(0, 0)] = Complex::new(expectation(&family, j, &evolved).re, T::zero());
        }
        return Ok(DecoherenceMatrix {
            basis_size: db,
            n_projections: n,
            step: spec.step,
            blocks,
        });
    }

    // With rank-1 projectors every branch is amp · |v_j⟩⟨v_k|, so one
    // propagation-plus-projection step is fully described by the transfer
    // table t[a,b,j,k] = ⟨v_j| K(|v_a⟩⟨v_b|) |v_k⟩. Precomputing it turns the
    // depth-first build into a pure scalar product tree: d_b² propagator
    // applications total instead of one per tree node.
    let table: Vec<Complex<T>> = (0..db * db)
        .into_par_iter()
        .flat_map_iter(|ab| {
            let y = prop.apply(&dyad(
                &family,
                ab / db,
                ab % db,
                Complex::new(T::one(), T::zero()),
            ));
            (0..db * db)
                .map(|jk| transition(&family, jk / db, jk % db, &y))
                .collect::<Vec<_>>()
        })
        .collect();

    // First level: one shared propagation of rho0, then independent subtrees
    // per (j1, k1) pair with j1 >= k1.
    let evolved = prop.apply(rho0.matrix());
    let mut pairs = Vec::new();
    for j in 0..db {
        for k in 0..=j {
            pairs.push((j, k));
        }
    }
    let leaves: Vec<Vec<(usize, usize, usize, Complex<T>)>> = pairs
        .par_iter()
        .map(|&(j, k)| {
            let mut out = Vec::new();
            let amp = transition(&family, j, k, &evolved);
            if amp.norm_sqr().is_zero() {
                return out;
            }
            let mut ctx = ScalarDfs {
                table: &table,
                n,
                db,
                out: &mut out,
            };
            ctx.descend(amp, j, k, 1, j, k, j == k);
            out
        })
        .collect();

    for leaf_set in leaves {
        for (site, row, col, val) in leaf_set {
            blocks[site][(row, col)] = val;
            if row != col {
                blocks[site][(col, row)] = val.conj();
            }
        }
    }
    // diagonal entries of Hermitian D are real up to roundoff
    for b in blocks.iter_mut() {
        for i in 0..bs {
            let z = b[(i, i)];
            b[(i, i)] = Complex::new(z.re, T::zero());
        }
    }
    Ok(DecoherenceMatrix {
        basis_size: db,
        n_projections: n,
        step: spec.step,
        blocks,
    })
}

/// Convenience wrapper building a one-off propagator cache.
pub fn build_decoherence_matrix<T: Scalar>(
    model: &NetworkModel<T>,
    rho0: &DensityMatrix<T>,
    spec: &HistorySpec<T>,
) -> Result<DecoherenceMatrix<T>> {
    let cache = PropagatorCache::new(model.clone());
    build_decoherence_matrix_cached(&cache, rho0, spec, DEFAULT_ENTRY_CAP)
}

struct ScalarDfs<'a, T: Scalar> {
    /// Transfer table, indexed [a, b, j, k] row-major.
    table: &'a [Complex<T>],
    n: usize,
    db: usize,
    /// (final index, block row, block col, value) per computed leaf.
    out: &'a mut Vec<(usize, usize, usize, Complex<T>)>,
}

impl<T: Scalar> ScalarDfs<'_, T> {
    fn t(&self, a: usize, b: usize, j: usize, k: usize) -> Complex<T> {
        self.table[((a * self.db + b) * self.db + j) * self.db + k]
    }

    /// `amp` is the branch amplitude after `level` projections whose last
    /// index pair is (`lastj`, `lastk`); `jpfx`/`kpfx` encode all indices so
    /// far in base d_b. `on_diagonal` marks equal prefixes, below which only
    /// k <= j children are traversed (the rest follows by Hermiticity).
    fn descend(
        &mut self,
        amp: Complex<T>,
        lastj: usize,
        lastk: usize,
        level: usize,
        jpfx: usize,
        kpfx: usize,
        on_diagonal: bool,
    ) {
        if level == self.n - 1 {
            for m in 0..self.db {
                let val = amp * self.t(lastj, lastk, m, m);
                self.out.push((m, jpfx, kpfx, val));
            }
            return;
        }
        for j in 0..self.db {
            let kmax = if on_diagonal { j } else { self.db - 1 };
            for k in 0..=kmax {
                let child = amp * self.t(lastj, lastk, j, k);
                if child.norm_sqr().is_zero() {
                    continue;
                }
                self.descend(
                    child,
                    j,
                    k,
                    level + 1,
                    jpfx * self.db + j,
                    kpfx * self.db + k,
                    on_diagonal && j == k,
                );
            }
        }
    }
}

/// ⟨v_j| Y |v_j⟩ for the rank-1 projector j.
fn expectation<T: Scalar>(family: &ProjectorFamily<T>, j: usize, y: &CMatrix<T>) -> Complex<T> {
    transition(family, j, j, y)
}

/// ⟨v_j| Y |v_k⟩.
fn transition<T: Scalar>(
    family: &ProjectorFamily<T>,
    j: usize,
    k: usize,
    y: &CMatrix<T>,
) -> Complex<T> {
    let vj = family.vector(j);
    let vk = family.vector(k);
    let d = vj.len();
    let mut acc = Complex::<T>::zero();
    for r in 0..d {
        let mut row = Complex::<T>::zero();
        for c in 0..d {
            row = row + y[(r, c)] * vk[c];
        }
        acc = acc + vj[r].conj() * row;
    }
    acc
}

/// amp · |v_j⟩⟨v_k| — the branch matrix P_j Y P_k for rank-1 projectors.
fn dyad<T: Scalar>(
    family: &ProjectorFamily<T>,
    j: usize,
    k: usize,
    amp: Complex<T>,
) -> CMatrix<T> {
    let vj = family.vector(j);
    let vk = family.vector(k);
    let d = vj.len();
    Array2::from_shape_fn((d, d), |(r, c)| amp * vj[r] * vk[c].conj())
}
