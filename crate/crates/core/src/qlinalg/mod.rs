//! Dense complex linear algebra and Liouville-space helpers.
//!
//! Qubit `q` of an `n`-qubit register is the `q`-th tensor factor from the
//! left, i.e. bit `n - 1 - q` of a computational-basis index. Operators are
//! vectorized by stacking columns, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)` and the
//! adjoint of a superoperator is its conjugate transpose.

mod eig;
mod expm;

pub use eig::{eig_general, hermitian_eigen, EigenDecomposition};
pub use expm::matrix_exponential;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Superoperators are plain matrices acting on column-stacked operators.
pub type Superoperator = ComplexMatrix;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default absolute tolerance for matrix comparisons.
pub const EQ_TOL: f64 = 1e-10;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-9;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `|ket⟩⟨bra|` for column vectors.
pub fn outer(ket: &ComplexVector, bra: &ComplexVector) -> ComplexMatrix {
    ket * bra.adjoint()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn ensure_square(a: &ComplexMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in comparison");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn approx_eq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs_diff(a, b) <= tol
}

/// Largest absolute entry of `a - a†`.
pub fn hermiticity_defect(a: &ComplexMatrix) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// `Tr{A B}` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let (rows, cols) = a.shape();
    let bs = b.as_slice();
    let mut acc = ZERO;
    // Tr{AB} = Σ_ij A_ij B_ji; B is column-major so B_ji = bs[j + i*cols].
    for j in 0..cols {
        let col = a.column(j);
        for i in 0..rows {
            acc += col[i] * bs[j + i * cols];
        }
    }
    acc
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> f64 {
    if a.nrows() == 2 && a.ncols() == 2 {
        // σ₁ + σ₂ = sqrt(‖A‖_F² + 2|det A|)
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        return (a.norm_squared() + 2.0 * det.norm()).max(0.0).sqrt();
    }
    a.clone().svd(false, false).singular_values.iter().sum()
}

/// Column-stacked operator `|A⟩⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedOperator {
    dim: usize,
    data: ComplexVector,
}

impl VectorizedOperator {
    pub fn from_matrix(a: &ComplexMatrix) -> Result<Self> {
        let dim = ensure_square(a)?;
        Ok(Self {
            dim,
            data: ComplexVector::from_column_slice(a.as_slice()),
        })
    }

    pub fn from_vector(dim: usize, data: ComplexVector) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_column_slice(self.dim, self.dim, self.data.as_slice())
    }

    pub fn as_vector(&self) -> &ComplexVector {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `⟨⟨self|other⟩⟩ = Tr{self† other}`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.data.dotc(&other.data)
    }
}

pub fn vectorize(a: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(a.as_slice())
}

pub fn devectorize(v: &ComplexVector) -> ComplexMatrix {
    let dim = (v.len() as f64).sqrt().round() as usize;
    assert_eq!(dim * dim, v.len(), "vector length is not a perfect square");
    ComplexMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// Superoperator of `X ↦ A X B`.
pub fn sandwich_superoperator(a: &ComplexMatrix, b: &ComplexMatrix) -> Superoperator {
    kron(&b.transpose(), a)
}

/// Qubit count of a `2^n`-dimensional space.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Index bookkeeping for an operator placed on a subset of qubits.
#[derive(Debug, Clone)]
pub(crate) struct LocalLayout {
    /// Offset of each local basis state; local bit 0 is `sites[0]`.
    offsets: Vec<usize>,
    /// Global indices with all local bits cleared.
    bases: Vec<usize>,
}

impl LocalLayout {
    pub(crate) fn new(n: usize, sites: &[usize]) -> Result<Self> {
        let mut mask = 0usize;
        for &s in sites {
            if s >= n {
                return Err(Error::SiteOutOfRange { site: s, n });
            }
            let bit = 1usize << (n - 1 - s);
            if mask & bit != 0 {
                return Err(Error::DuplicateSite(s));
            }
            mask |= bit;
        }
        let k = sites.len();
        let offsets = (0..1usize << k)
            .map(|a| {
                sites.iter().enumerate().fold(0, |acc, (i, &s)| {
                    if (a >> (k - 1 - i)) & 1 == 1 {
                        acc | (1 << (n - 1 - s))
                    } else {
                        acc
                    }
                })
            })
            .collect();
        let bases = (0..1usize << n).filter(|i| i & mask == 0).collect();
        Ok(Self { offsets, bases })
    }

    fn local_dim(&self) -> usize {
        self.offsets.len()
    }
}

fn check_local_op(op: &ComplexMatrix, sites: &[usize]) -> Result<()> {
    let d = ensure_square(op)?;
    if d != 1 << sites.len() {
        return Err(Error::DimensionMismatch {
            expected: 1 << sites.len(),
            actual: d,
        });
    }
    Ok(())
}

/// Row-major copy of a small local operator.
fn flat(op: &ComplexMatrix) -> Vec<Complex64> {
    let d = op.nrows();
    (0..d * d).map(|k| op[(k / d, k % d)]).collect()
}

/// `X ↦ O X` with `O` acting on the layout's qubits.
pub(crate) fn left_mul_local(x: &mut ComplexMatrix, op: &ComplexMatrix, layout: &LocalLayout) {
    let d = layout.local_dim();
    let dim = x.nrows();
    let o = flat(op);
    let mut buf = vec![ZERO; d];
    for col in x.as_mut_slice().chunks_exact_mut(dim) {
        for &b in &layout.bases {
            for (slot, &off) in buf.iter_mut().zip(&layout.offsets) {
                *slot = col[b + off];
            }
            for (row, &off) in o.chunks_exact(d).zip(&layout.offsets) {
                col[b + off] = row.iter().zip(&buf).map(|(w, v)| w * v).sum();
            }
        }
    }
}

/// `X ↦ X O†` with `O` acting on the layout's qubits.
pub(crate) fn right_mul_local_adjoint(
    x: &mut ComplexMatrix,
    op: &ComplexMatrix,
    layout: &LocalLayout,
) {
    let d = layout.local_dim();
    let nrows = x.nrows();
    // (X O†)_{r,a} = Σ_a' X_{r,a'} conj(O_{a,a'})
    let o: Vec<Complex64> = flat(op).iter().map(|z| z.conj()).collect();
    let data = x.as_mut_slice();
    let mut block = vec![ZERO; d * nrows];
    for &b in &layout.bases {
        for (a, &off) in layout.offsets.iter().enumerate() {
            let src = (b + off) * nrows;
            block[a * nrows..(a + 1) * nrows].copy_from_slice(&data[src..src + nrows]);
        }
        for (a, &off) in layout.offsets.iter().enumerate() {
            let dst = &mut data[(b + off) * nrows..(b + off + 1) * nrows];
            dst.fill(ZERO);
            for (a2, src) in block.chunks_exact(nrows).enumerate() {
                let w = o[a * d + a2];
                if w != ZERO {
                    for (t, s) in dst.iter_mut().zip(src) {
                        *t += s * w;
                    }
                }
            }
        }
    }
}

/// Conjugation `X ↦ O X O†` in place.
pub(crate) fn conjugate_local(x: &mut ComplexMatrix, op: &ComplexMatrix, layout: &LocalLayout) {
    left_mul_local(x, op, layout);
    right_mul_local_adjoint(x, op, layout);
}

/// Local superoperator in place; `sup` acts on the column-stacked local block.
pub(crate) fn apply_super_local(x: &mut ComplexMatrix, sup: &Superoperator, layout: &LocalLayout) {
    let d = layout.local_dim();
    let dim = x.nrows();
    // channels on one qubit are typically sparse
    let rows: Vec<Vec<(usize, Complex64)>> = (0..d * d)
        .map(|i| {
            (0..d * d)
                .filter_map(|j| (sup[(i, j)] != ZERO).then(|| (j, sup[(i, j)])))
                .collect()
        })
        .collect();
    let data = x.as_mut_slice();
    let mut buf = vec![ZERO; d * d];
    for &bc in &layout.bases {
        for &br in &layout.bases {
            for b in 0..d {
                let col = (bc + layout.offsets[b]) * dim + br;
                for a in 0..d {
                    buf[a + d * b] = data[col + layout.offsets[a]];
                }
            }
            for b in 0..d {
                let col = (bc + layout.offsets[b]) * dim + br;
                for a in 0..d {
                    data[col + layout.offsets[a]] =
                        rows[a + d * b].iter().map(|&(j, w)| w * buf[j]).sum();
                }
            }
        }
    }
}

/// `(I ⊗ op ⊗ I) X (I ⊗ op ⊗ I)†` with `op` placed on `sites`.
pub fn apply_local(x: &ComplexMatrix, op: &ComplexMatrix, sites: &[usize]) -> Result<ComplexMatrix> {
    let n = qubits_for_dim(ensure_square(x)?)?;
    check_local_op(op, sites)?;
    let layout = LocalLayout::new(n, sites)?;
    let mut out = x.clone();
    conjugate_local(&mut out, op, &layout);
    Ok(out)
}

/// Applies a `4^k × 4^k` superoperator on `sites` to `X`.
pub fn apply_local_super(
    x: &ComplexMatrix,
    sup: &Superoperator,
    sites: &[usize],
) -> Result<ComplexMatrix> {
    let n = qubits_for_dim(ensure_square(x)?)?;
    let d = ensure_square(sup)?;
    if d != 1 << (2 * sites.len()) {
        return Err(Error::DimensionMismatch {
            expected: 1 << (2 * sites.len()),
            actual: d,
        });
    }
    let layout = LocalLayout::new(n, sites)?;
    let mut out = x.clone();
    apply_super_local(&mut out, sup, &layout);
    Ok(out)
}

/// Full `2^n`-dimensional matrix of `op` acting on `sites`.
pub fn embed_operator(op: &ComplexMatrix, sites: &[usize], n: usize) -> Result<ComplexMatrix> {
    check_local_op(op, sites)?;
    let layout = LocalLayout::new(n, sites)?;
    let dim = 1 << n;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for &b in &layout.bases {
        for (a, &oa) in layout.offsets.iter().enumerate() {
            for (a2, &oa2) in layout.offsets.iter().enumerate() {
                out[(b + oa, b + oa2)] = op[(a, a2)];
            }
        }
    }
    Ok(out)
}

/// A validated `n`-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity at the default tolerances.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let n = qubits_for_dim(ensure_square(&mat)?)?;
        let herm = hermiticity_defect(&mat);
        if herm > EQ_TOL {
            return Err(Error::InvalidState(format!("not Hermitian ({herm:.3e})")));
        }
        let tr = trace(&mat);
        if (tr - ONE).norm() > EQ_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let (evals, _) = hermitian_eigen(&mat)?;
        if let Some(&min) = evals.first() {
            if min < PSD_TOL {
                return Err(Error::InvalidState(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self { n, mat })
    }

    /// Wraps a matrix the caller knows to be a state (e.g. a channel output).
    pub fn from_matrix_unchecked(mat: ComplexMatrix) -> Self {
        let n = mat.nrows().trailing_zeros() as usize;
        debug_assert_eq!(1 << n, mat.nrows());
        Self { n, mat }
    }

    pub fn from_pure(psi: &ComplexVector) -> Result<Self> {
        let n = qubits_for_dim(psi.len())?;
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = psi.unscale(norm);
        Ok(Self {
            n,
            mat: outer(&v, &v),
        })
    }

    /// Ginibre-distributed mixed state `G G† / Tr{G G†}`.
    pub fn random(n: usize, rng: &mut impl rand::Rng) -> Self {
        let dim = 1 << n;
        let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let m = &g * g.adjoint();
        let tr = trace(&m);
        let m = m.map(|z| z / tr);
        Self::from_matrix_unchecked((&m + m.adjoint()).unscale(2.0))
    }

    pub fn basis_state(n: usize, index: usize) -> Self {
        let dim = 1 << n;
        assert!(index < dim, "basis index out of range");
        let mut mat = ComplexMatrix::zeros(dim, dim);
        mat[(index, index)] = ONE;
        Self { n, mat }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1 << n;
        Self {
            n,
            mat: identity(dim).unscale(dim as f64),
        }
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            n: self.n + other.n,
            mat: kron(&self.mat, &other.mat),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        trace(&self.mat).re
    }

    pub fn purity(&self) -> f64 {
        trace_of_product(&self.mat, &self.mat).re
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalized vector.
    pub fn fidelity_with_pure(&self, psi: &ComplexVector) -> f64 {
        (psi.adjoint() * &self.mat * psi)[(0, 0)].re
    }

    /// Smallest eigenvalue, for positivity checks.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (evals, _) = hermitian_eigen(&self.mat)?;
        Ok(evals[0])
    }

    pub fn vectorize(&self) -> VectorizedOperator {
        VectorizedOperator {
            dim: self.dim(),
            data: vectorize(&self.mat),
        }
    }
}
