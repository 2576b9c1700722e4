//! Matrix exponential: degree-13 Padé approximant with scaling and squaring,
//! and a Schur-diagonal shortcut for normal matrices.

use nalgebra::linalg::Schur;

use super::{ensure_square, ComplexMatrix, ONE};
use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// 1-norm bound below which the degree-13 approximant needs no scaling.
const THETA13: f64 = 5.371920351148152;

pub fn matrix_exponential(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = ensure_square(a)?;
    if dim == 0 {
        return Ok(a.clone());
    }
    let fro = a.norm();
    if fro == 0.0 {
        return Ok(ComplexMatrix::identity(dim, dim));
    }
    if let Some(e) = normal_exponential(a, fro) {
        return Ok(e);
    }
    pade_exponential(a)
}

fn one_norm(a: &ComplexMatrix) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn normal_exponential(a: &ComplexMatrix, fro: f64) -> Option<ComplexMatrix> {
    let adj = a.adjoint();
    let commutator = a * &adj - &adj * a;
    if commutator.norm() > 1e-13 * fro * fro {
        return None;
    }
    let (q, t) = Schur::try_new(a.clone(), f64::EPSILON, 10_000)?.unpack();
    let dim = a.nrows();
    let mut off = 0.0;
    for j in 0..dim {
        for i in 0..dim {
            if i != j {
                off += t[(i, j)].norm_sqr();
            }
        }
    }
    if off.sqrt() > 1e-13 * fro {
        return None;
    }
    let mut scaled = q.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= t[(j, j)].exp();
    }
    Some(scaled * q.adjoint())
}

fn pade_exponential(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.unscale(2f64.powi(squarings));
    let ident = ComplexMatrix::identity(dim, dim);
    let b = PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + ident.scale(b[1]);
    let u = &a * u_inner;
    let v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
        + a6.scale(b[6])
        + a4.scale(b[4])
        + a2.scale(b[2])
        + ident.scale(b[0]);

    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::InvalidArgument("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    debug_assert!(r.iter().all(|z| (z * ONE).is_finite()));
    Ok(r)
}
