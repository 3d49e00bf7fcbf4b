//! Truncated two-mode Fock space.
//!
//! Basis states `|n1, n2>` with `0 <= n_i <= n_max` are laid out row-major
//! with mode 1 major: `index = n1 * (n_max + 1) + n2`. Every matrix in the
//! crate uses this ordering.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = Mat<C64>;

/// Tail weight tolerated beyond the cutoff when building coherent amplitudes.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
/// Entrywise Hermiticity tolerance for density operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues in `(-NEGATIVE_FLOOR, 0)` are treated as roundoff and clipped.
pub const NEGATIVE_FLOOR: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Photon-number cutoff shared by both signal modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FockTruncation {
    n_max: usize,
    tail_tol: f64,
}

impl FockTruncation {
    pub fn new(n_max: usize) -> Self {
        Self {
            n_max,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }

    pub fn with_tail_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    /// Smallest cutoff whose coherent tail `sum_{n > n_max} |c_n|^2` for
    /// amplitude `|alpha|` is below `tail_tol`.
    pub fn for_amplitude(abs_alpha: f64, tail_tol: f64) -> Self {
        let mut n_max = 0;
        while coherent_tail(abs_alpha, n_max) >= tail_tol {
            n_max += 1;
        }
        Self { n_max, tail_tol }
    }

    /// The closed-form default `ceil(|a|^2 + 10|a| + 20)`; always at least as
    /// large as the tail rule at tolerance 1e-12.
    pub fn default_for_amplitude(abs_alpha: f64) -> Self {
        let n = (abs_alpha * abs_alpha + 10.0 * abs_alpha + 20.0).ceil();
        Self::new(n as usize)
    }

    pub fn doubled(self) -> Self {
        Self {
            n_max: 2 * self.n_max.max(1),
            tail_tol: self.tail_tol,
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Number of levels per mode.
    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    /// Dimension of the two-mode space.
    pub fn dim(&self) -> usize {
        self.levels() * self.levels()
    }

    pub fn index(&self, n1: usize, n2: usize) -> usize {
        debug_assert!(n1 <= self.n_max && n2 <= self.n_max);
        n1 * self.levels() + n2
    }

    pub fn occupations(&self, index: usize) -> (usize, usize) {
        (index / self.levels(), index % self.levels())
    }

    /// Total photon number of every basis state, in basis order.
    pub fn total_numbers(&self) -> Vec<usize> {
        (0..self.dim())
            .map(|i| {
                let (a, b) = self.occupations(i);
                a + b
            })
            .collect()
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Poisson weight `e^{-x} x^n / n!` with `x = |alpha|^2`.
fn poisson_weight(abs_alpha: f64, n: usize) -> f64 {
    if abs_alpha == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let x = abs_alpha * abs_alpha;
    (-x + n as f64 * x.ln() - ln_factorial(n)).exp()
}

/// Probability weight a coherent state of amplitude `|alpha|` places above
/// `n_max`, summed term by term (no `1 - sum` cancellation).
pub fn coherent_tail(abs_alpha: f64, n_max: usize) -> f64 {
    if abs_alpha == 0.0 {
        return 0.0;
    }
    let x = abs_alpha * abs_alpha;
    let mut n = n_max + 1;
    let mut term = poisson_weight(abs_alpha, n);
    let mut total = 0.0;
    loop {
        total += term;
        n += 1;
        term *= x / n as f64;
        if n as f64 > x && term <= total * 1e-17 {
            break;
        }
        if term == 0.0 && n as f64 > x {
            break;
        }
    }
    total
}

/// Coherent amplitudes `c_n = e^{-|a|^2/2} a^n / sqrt(n!)` for `n <= n_max`.
pub fn coherent_vector(alpha: C64, trunc: FockTruncation) -> Result<Vec<C64>> {
    let abs = alpha.norm();
    let tail = coherent_tail(abs, trunc.n_max());
    if tail > trunc.tail_tol() {
        return Err(Error::TruncationTooSmall {
            n_max: trunc.n_max(),
            tail,
            tol: trunc.tail_tol(),
        });
    }
    Ok(coherent_amplitudes(alpha, trunc.n_max()))
}

/// Coherent amplitudes without the tail check.
pub(crate) fn coherent_amplitudes(alpha: C64, n_max: usize) -> Vec<C64> {
    let abs = alpha.norm();
    let phase = alpha.arg();
    (0..=n_max)
        .map(|n| {
            if abs == 0.0 {
                return if n == 0 { ONE } else { ZERO };
            }
            let magnitude = poisson_weight(abs, n).sqrt();
            C64::from_polar(magnitude, n as f64 * phase)
        })
        .collect()
}

/// Which of the two signal modes an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
}

/// A single-mode operator embedded in the two-mode space.
#[derive(Clone, Debug)]
pub struct ModeOperator {
    matrix: CMat,
    mode: Mode,
}

impl ModeOperator {
    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn adjoint(&self) -> ModeOperator {
        ModeOperator {
            matrix: self.matrix.adjoint().to_owned(),
            mode: self.mode,
        }
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        let amplitudes = mat_vec(self.matrix.as_ref(), &state.amplitudes);
        StateVector {
            amplitudes,
            truncation: state.truncation,
        }
    }
}

/// Embeds the single-mode matrix element function `f(m, n) = <m|op|n>`
/// on `mode`, acting as identity on the other mode.
fn embed_single_mode(
    mode: Mode,
    trunc: FockTruncation,
    f: impl Fn(usize, usize) -> f64,
) -> CMat {
    let dim = trunc.dim();
    Mat::from_fn(dim, dim, |i, j| {
        let (a1, a2) = trunc.occupations(i);
        let (b1, b2) = trunc.occupations(j);
        let value = match mode {
            Mode::One if a2 == b2 => f(a1, b1),
            Mode::Two if a1 == b1 => f(a2, b2),
            _ => 0.0,
        };
        C64::new(value, 0.0)
    })
}

pub fn annihilation(mode: Mode, trunc: FockTruncation) -> ModeOperator {
    let matrix = embed_single_mode(mode, trunc, |m, n| {
        if n >= 1 && m == n - 1 {
            (n as f64).sqrt()
        } else {
            0.0
        }
    });
    ModeOperator { matrix, mode }
}

pub fn creation(mode: Mode, trunc: FockTruncation) -> ModeOperator {
    annihilation(mode, trunc).adjoint()
}

pub fn number_operator(mode: Mode, trunc: FockTruncation) -> ModeOperator {
    let matrix = embed_single_mode(mode, trunc, |m, n| if m == n { m as f64 } else { 0.0 });
    ModeOperator { matrix, mode }
}

pub(crate) fn mat_vec(m: MatRef<'_, C64>, v: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// A ket over the truncated two-mode basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    truncation: FockTruncation,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>, truncation: FockTruncation) -> Result<Self> {
        if amplitudes.len() != truncation.dim() {
            return Err(Error::DimensionMismatch {
                expected: truncation.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            amplitudes,
            truncation,
        })
    }

    /// The basis ket `|n1, n2>`.
    pub fn basis(n1: usize, n2: usize, truncation: FockTruncation) -> Result<Self> {
        if n1 > truncation.n_max() || n2 > truncation.n_max() {
            return Err(Error::TruncationTooSmall {
                n_max: truncation.n_max(),
                tail: 1.0,
                tol: truncation.tail_tol(),
            });
        }
        let mut amplitudes = vec![ZERO; truncation.dim()];
        amplitudes[truncation.index(n1, n2)] = ONE;
        Ok(Self {
            amplitudes,
            truncation,
        })
    }

    /// `|u> (x) |v>` from single-mode amplitude arrays of length `n_max + 1`.
    pub fn product(u: &[C64], v: &[C64], truncation: FockTruncation) -> Result<Self> {
        let levels = truncation.levels();
        for len in [u.len(), v.len()] {
            if len != levels {
                return Err(Error::DimensionMismatch {
                    expected: levels,
                    found: len,
                });
            }
        }
        let amplitudes = u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        Ok(Self {
            amplitudes,
            truncation,
        })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn truncation(&self) -> FockTruncation {
        self.truncation
    }

    pub fn amplitude(&self, n1: usize, n2: usize) -> C64 {
        self.amplitudes[self.truncation.index(n1, n2)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Self {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= norm);
        }
        self
    }

    pub fn scaled(mut self, factor: C64) -> Self {
        self.amplitudes.iter_mut().for_each(|a| *a *= factor);
        self
    }

    pub fn add(&self, other: &StateVector) -> StateVector {
        let amplitudes = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a + b)
            .collect();
        StateVector {
            amplitudes,
            truncation: self.truncation,
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `<self|D|self>` for an operator diagonal in the Fock basis.
    pub fn diagonal_expectation(&self, diagonal: &[f64]) -> f64 {
        self.amplitudes
            .iter()
            .zip(diagonal)
            .map(|(a, d)| a.norm_sqr() * d)
            .sum()
    }

    pub fn projector(&self) -> DensityOperator {
        let dim = self.amplitudes.len();
        let a = &self.amplitudes;
        DensityOperator {
            matrix: Mat::from_fn(dim, dim, |i, j| a[i] * a[j].conj()),
            truncation: self.truncation,
        }
    }
}

/// A density matrix over the truncated two-mode basis.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    matrix: CMat,
    truncation: FockTruncation,
}

impl DensityOperator {
    /// Wraps `matrix`, checking shape and Hermiticity. Trace and positivity
    /// are checked by [`DensityOperator::validate`].
    pub fn from_matrix(matrix: CMat, truncation: FockTruncation) -> Result<Self> {
        let dim = truncation.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let deviation = hermiticity_deviation(matrix.as_ref());
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { matrix, truncation })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMat, truncation: FockTruncation) -> Self {
        Self { matrix, truncation }
    }

    pub fn vacuum(truncation: FockTruncation) -> Self {
        let dim = truncation.dim();
        let mut matrix = Mat::zeros(dim, dim);
        matrix[(0, 0)] = ONE;
        Self { matrix, truncation }
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn truncation(&self) -> FockTruncation {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// Expectation value of an operator diagonal in the Fock basis.
    pub fn diagonal_expectation(&self, diagonal: &[f64]) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re * diagonal[i]).sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(self.matrix.as_ref())
    }

    /// Checks Hermiticity (1e-12 entrywise), unit trace (1e-10) and
    /// eigenvalues above `-1e-10`.
    pub fn validate(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = self.trace();
        if (trace - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidProbe(format!("trace {trace} differs from 1")));
        }
        let spectrum = self.eigen()?;
        if let Some(&min) = spectrum.eigenvalues().last() {
            if min < -NEGATIVE_FLOOR {
                return Err(Error::NegativeEigenvalue {
                    value: min,
                    floor: -NEGATIVE_FLOOR,
                });
            }
        }
        Ok(())
    }

    pub fn eigen(&self) -> Result<HermitianEigen> {
        eigendecompose_hermitian(self)
    }

    pub fn max_abs_diff(&self, other: &DensityOperator) -> f64 {
        max_abs_diff(self.matrix.as_ref(), other.matrix.as_ref())
    }

    /// Trace of the block spanned by basis states with `n1 + n2 = total`.
    pub fn sector_trace(&self, total: usize) -> f64 {
        (0..self.dim())
            .filter(|&i| {
                let (a, b) = self.truncation.occupations(i);
                a + b == total
            })
            .map(|i| self.matrix[(i, i)].re)
            .sum()
    }
}

pub fn hermiticity_deviation(m: MatRef<'_, C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// Kronecker product `a (x) b`.
pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> CMat {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Eigenpairs of one invariant block of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct EigenBlock {
    /// Global basis indices spanned by this block.
    pub indices: Vec<usize>,
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, expressed on `indices`.
    pub vectors: CMat,
}

/// Spectral decomposition of a Hermitian matrix, split into the blocks of
/// its exact sparsity pattern. Entries that are exactly zero decouple basis
/// states; nothing is dropped by thresholding.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    dim: usize,
    blocks: Vec<EigenBlock>,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[EigenBlock] {
        &self.blocks
    }

    /// All eigenvalues, sorted descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.clone()).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        values
    }

    /// Eigenpairs `(value, dense eigenvector)` sorted by descending value.
    pub fn eigenpairs(&self) -> Vec<(f64, Vec<C64>)> {
        let mut pairs: Vec<(f64, Vec<C64>)> = Vec::with_capacity(self.dim);
        for block in &self.blocks {
            for (k, &value) in block.values.iter().enumerate() {
                let mut v = vec![ZERO; self.dim];
                for (local, &global) in block.indices.iter().enumerate() {
                    v[global] = block.vectors[(local, k)];
                }
                pairs.push((value, v));
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        pairs
    }

    /// `V diag(values) V^dagger`.
    pub fn reconstruct(&self) -> CMat {
        let mut out = Mat::zeros(self.dim, self.dim);
        for block in &self.blocks {
            for (a, &ga) in block.indices.iter().enumerate() {
                for (b, &gb) in block.indices.iter().enumerate() {
                    let mut acc = ZERO;
                    for (k, &value) in block.values.iter().enumerate() {
                        acc += block.vectors[(a, k)] * block.vectors[(b, k)].conj() * value;
                    }
                    out[(ga, gb)] = acc;
                }
            }
        }
        out
    }
}

/// Groups basis indices into connected components of the nonzero pattern.
fn invariant_blocks(m: MatRef<'_, C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if m[(i, j)] != ZERO || m[(j, i)] != ZERO {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

/// Eigendecomposition of an arbitrary Hermitian matrix.
pub fn eigendecompose_hermitian_matrix(m: MatRef<'_, C64>) -> Result<HermitianEigen> {
    let deviation = hermiticity_deviation(m);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let dim = m.nrows();
    let mut blocks = Vec::new();
    for indices in invariant_blocks(m) {
        if indices.len() == 1 {
            let i = indices[0];
            blocks.push(EigenBlock {
                values: vec![m[(i, i)].re],
                vectors: Mat::from_fn(1, 1, |_, _| ONE),
                indices,
            });
            continue;
        }
        let k = indices.len();
        let sub = Mat::from_fn(k, k, |a, b| m[(indices[a], indices[b])]);
        let evd = sub
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::EigenFailure)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        // faer returns ascending order
        let values: Vec<f64> = (0..k).rev().map(|c| s[c].re).collect();
        let vectors = Mat::from_fn(k, k, |r, c| u[(r, k - 1 - c)]);
        blocks.push(EigenBlock {
            indices,
            values,
            vectors,
        });
    }
    Ok(HermitianEigen { dim, blocks })
}

pub fn eigendecompose_hermitian(rho: &DensityOperator) -> Result<HermitianEigen> {
    eigendecompose_hermitian_matrix(rho.matrix())
}

/// Dimensions of a multi-mode tensor-product space, mode 0 major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorLayout {
    dims: Vec<usize>,
}

impl TensorLayout {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for m in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[m] = strides[m + 1] * self.dims[m + 1];
        }
        strides
    }

    /// For every kept flat index `a` and traced flat index `t`, the full
    /// flat index. Both sub-spaces keep mode 0 major ordering.
    fn split_table(&self, keep: &[usize]) -> Result<(TensorLayout, Vec<Vec<usize>>)> {
        let modes = self.dims.len();
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        if let Some(&bad) = keep_sorted.iter().find(|&&m| m >= modes) {
            return Err(Error::DimensionMismatch {
                expected: modes,
                found: bad + 1,
            });
        }
        let traced: Vec<usize> = (0..modes).filter(|m| !keep_sorted.contains(m)).collect();
        let kept_layout = TensorLayout::new(keep_sorted.iter().map(|&m| self.dims[m]).collect());
        let traced_layout = TensorLayout::new(traced.iter().map(|&m| self.dims[m]).collect());
        let strides = self.strides();
        let decode = |flat: usize, layout: &TensorLayout| -> Vec<usize> {
            let mut digits = vec![0; layout.dims.len()];
            let mut rest = flat;
            for m in (0..layout.dims.len()).rev() {
                digits[m] = rest % layout.dims[m];
                rest /= layout.dims[m];
            }
            digits
        };
        let mut table = Vec::with_capacity(kept_layout.total());
        for a in 0..kept_layout.total() {
            let kd = decode(a, &kept_layout);
            let base: usize = kd.iter().zip(&keep_sorted).map(|(d, &m)| d * strides[m]).sum();
            let row = (0..traced_layout.total())
                .map(|t| {
                    let td = decode(t, &traced_layout);
                    base + td
                        .iter()
                        .zip(&traced)
                        .map(|(d, &m)| d * strides[m])
                        .sum::<usize>()
                })
                .collect();
            table.push(row);
        }
        Ok((kept_layout, table))
    }
}

/// A density matrix on an arbitrary tensor product of modes; used for the
/// signal-plus-environment workspace.
#[derive(Clone, Debug)]
pub struct MultiModeDensity {
    matrix: CMat,
    layout: TensorLayout,
}

impl MultiModeDensity {
    pub fn new(matrix: CMat, layout: TensorLayout) -> Result<Self> {
        let total = layout.total();
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                found: matrix.nrows(),
            });
        }
        Ok(Self { matrix, layout })
    }

    pub fn from_pure(amplitudes: &[C64], layout: TensorLayout) -> Result<Self> {
        let n = amplitudes.len();
        let matrix = Mat::from_fn(n, n, |i, j| amplitudes[i] * amplitudes[j].conj());
        Self::new(matrix, layout)
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    pub fn layout(&self) -> &TensorLayout {
        &self.layout
    }

    pub fn trace(&self) -> f64 {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// Traces out every mode not listed in `keep`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<MultiModeDensity> {
        let (kept, table) = self.layout.split_table(keep)?;
        let dk = kept.total();
        let matrix = Mat::from_fn(dk, dk, |a, b| {
            table[a]
                .iter()
                .zip(&table[b])
                .map(|(&i, &j)| self.matrix[(i, j)])
                .sum()
        });
        Ok(MultiModeDensity {
            matrix,
            layout: kept,
        })
    }

    /// Reinterprets a two-mode result with equal mode dimensions as a
    /// [`DensityOperator`].
    pub fn into_two_mode(self, truncation: FockTruncation) -> Result<DensityOperator> {
        let expected = vec![truncation.levels(); 2];
        if self.layout.dims != expected {
            return Err(Error::DimensionMismatch {
                expected: truncation.dim(),
                found: self.layout.total(),
            });
        }
        DensityOperator::from_matrix(self.matrix, truncation)
    }
}

/// Reduced density matrix of a pure multi-mode state, computed without
/// forming the full projector.
pub fn partial_trace_pure(
    amplitudes: &[C64],
    layout: &TensorLayout,
    keep: &[usize],
) -> Result<MultiModeDensity> {
    if amplitudes.len() != layout.total() {
        return Err(Error::DimensionMismatch {
            expected: layout.total(),
            found: amplitudes.len(),
        });
    }
    let (kept, table) = layout.split_table(keep)?;
    let dk = kept.total();
    let matrix = Mat::from_fn(dk, dk, |a, b| {
        table[a]
            .iter()
            .zip(&table[b])
            .map(|(&i, &j)| amplitudes[i] * amplitudes[j].conj())
            .sum()
    });
    Ok(MultiModeDensity {
        matrix,
        layout: kept,
    })
}
