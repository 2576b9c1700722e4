use nalgebra::linalg::{Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use super::{ensure_square, ComplexMatrix, ComplexVector};
use crate::error::{Error, Result};

/// Eigenvector matrices whose condition number exceeds this are flagged.
pub const NEAR_DEFECTIVE_CONDITION: f64 = 1e10;

/// Eigendecomposition of a diagonalizable matrix.
///
/// Columns of `left` are dual to columns of `right`: `l_i† r_j = δ_ij`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    pub right: ComplexMatrix,
    pub left: ComplexMatrix,
    /// 2-norm condition number of the column-normalized right eigenvector matrix.
    pub condition: f64,
    pub near_defective: bool,
}

impl EigenDecomposition {
    pub fn right_vector(&self, i: usize) -> ComplexVector {
        self.right.column(i).into_owned()
    }

    pub fn left_vector(&self, i: usize) -> ComplexVector {
        self.left.column(i).into_owned()
    }

    /// `Σ_i f(λ_i) r_i l_i†`.
    pub fn reconstruct_with(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexMatrix {
        let mut scaled = self.right.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        scaled * self.left.adjoint()
    }
}

/// General (non-Hermitian) eigendecomposition.
///
/// Eigenvalues come from the complex Schur form. Eigenvalues closer than a
/// relative `1e-8` are treated as one cluster, whose eigenvectors span the
/// numerical null space of `A - μI`. Left vectors are the rows of `R⁻¹`,
/// which is how degenerate clusters stay biorthogonal.
pub fn eig_general(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    let dim = ensure_square(a)?;
    if dim == 0 {
        return Err(Error::Eigen("empty matrix".into()));
    }
    let scale = a.norm().max(1.0);
    // Highly degenerate spectra can stall the QR sweep at machine epsilon.
    let schur = [f64::EPSILON, 1e-14, 1e-13, 1e-12]
        .into_iter()
        .find_map(|eps| Schur::try_new(a.clone(), eps, 50 * dim.max(20)))
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    let raw: Vec<Complex64> = (0..dim).map(|i| t[(i, i)]).collect();

    let cluster_tol = 1e-8 * scale;
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for &lam in &raw {
        match clusters
            .iter_mut()
            .find(|cl| cl.iter().any(|mu| (mu - lam).norm() < cluster_tol))
        {
            Some(cl) => cl.push(lam),
            None => clusters.push(vec![lam]),
        }
    }

    let mut values = Vec::with_capacity(dim);
    let mut right = ComplexMatrix::zeros(dim, dim);
    let mut col = 0;
    for cl in &clusters {
        let mult = cl.len();
        let mu = cl.iter().sum::<Complex64>() / mult as f64;
        let shifted = a - ComplexMatrix::identity(dim, dim) * mu;
        let svd = SVD::new(shifted, false, true);
        let v_t = svd
            .v_t
            .as_ref()
            .ok_or_else(|| Error::Eigen("SVD failed".into()))?;
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        let null_tol = 1e-6 * scale;
        for (k, &idx) in order.iter().take(mult).enumerate() {
            if mult > 1 && svd.singular_values[idx] > null_tol {
                return Err(Error::Eigen(format!(
                    "defective eigenvalue {mu} (geometric multiplicity {k} < {mult})"
                )));
            }
            let v = v_t.row(idx).adjoint();
            right.set_column(col, &v);
            values.push(if mult == 1 { cl[0] } else { mu });
            col += 1;
        }
    }

    let inv = right
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Eigen("eigenvector matrix is singular".into()))?;
    let left = inv.adjoint();

    let sv = right.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    // Rayleigh-quotient refinement of simple eigenvalues.
    for (i, cl) in clusters_by_column(&clusters).enumerate() {
        if cl == 1 {
            let r = right.column(i);
            let l = left.column(i);
            values[i] = (l.adjoint() * a * r)[(0, 0)];
        }
    }

    Ok(EigenDecomposition {
        values,
        right,
        left,
        condition,
        near_defective: condition > NEAR_DEFECTIVE_CONDITION,
    })
}

fn clusters_by_column(clusters: &[Vec<Complex64>]) -> impl Iterator<Item = usize> + '_ {
    clusters
        .iter()
        .flat_map(|cl| std::iter::repeat_n(cl.len(), cl.len()))
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let dim = ensure_square(a)?;
    let herm = (a + a.adjoint()).unscale(2.0);
    let eig = SymmetricEigen::try_new(herm, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Eigen("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = ComplexMatrix::zeros(dim, dim);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok((values, vecs))
}
