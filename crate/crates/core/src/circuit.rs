//! Parametrized circuits.
//!
//! The layered ansatz applies, per layer, one Pauli rotation `R_d(θ) =
//! exp(-iθσ_d/2)` on every qubit followed by the open-boundary chain of
//! controlled-Z gates `CZ(0,1) CZ(1,2) … CZ(n-2,n-1)`. Parameters are ordered
//! layer-major, then by qubit.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::qlinalg::{
    c, conjugate_local, ComplexMatrix, ComplexVector, DensityMatrix, LocalLayout, I, ONE, ZERO,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn label(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// `exp(-iθσ/2)` about `axis`.
pub fn rotation(axis: Axis, theta: f64) -> ComplexMatrix {
    let (cos, sin) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let m = match axis {
        Axis::X => [c(cos), -I * sin, -I * sin, c(cos)],
        Axis::Y => [c(cos), c(-sin), c(sin), c(cos)],
        Axis::Z => [
            num_complex::Complex64::from_polar(1.0, -theta / 2.0),
            ZERO,
            ZERO,
            num_complex::Complex64::from_polar(1.0, theta / 2.0),
        ],
    };
    ComplexMatrix::from_row_slice(2, 2, &m)
}

pub fn controlled_z() -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(4, 4);
    m[(3, 3)] = -ONE;
    m
}

/// Layer structure of the hardware-efficient ansatz: the rotation axis of
/// every (layer, qubit) slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnsatzSpec {
    n: usize,
    depth: usize,
    axes: Vec<Axis>,
}

impl AnsatzSpec {
    /// Axes drawn i.i.d. uniformly from `{x, y, z}`.
    pub fn random(n: usize, depth: usize, rng: &mut impl Rng) -> Result<Self> {
        if n == 0 || depth == 0 {
            return Err(Error::InvalidArgument(
                "ansatz needs at least one qubit and one layer".into(),
            ));
        }
        let axes = (0..n * depth)
            .map(|_| Axis::ALL[rng.random_range(0..3)])
            .collect();
        Ok(Self { n, depth, axes })
    }

    pub fn from_axes(n: usize, depth: usize, axes: Vec<Axis>) -> Result<Self> {
        if n == 0 || depth == 0 {
            return Err(Error::InvalidArgument(
                "ansatz needs at least one qubit and one layer".into(),
            ));
        }
        if axes.len() != n * depth {
            return Err(Error::LengthMismatch {
                expected: n * depth,
                actual: axes.len(),
            });
        }
        Ok(Self { n, depth, axes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn axis(&self, layer: usize, qubit: usize) -> Axis {
        self.axes[layer * self.n + qubit]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn num_params(&self) -> usize {
        self.n * self.depth
    }
}

/// One gate of a compiled circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rotation {
        axis: Axis,
        qubit: usize,
        param: usize,
    },
    Cz {
        a: usize,
        b: usize,
    },
}

impl Gate {
    pub fn param(&self) -> Option<usize> {
        match self {
            Gate::Rotation { param, .. } => Some(*param),
            Gate::Cz { .. } => None,
        }
    }

    pub fn matrix(&self, params: &[f64], shift: f64) -> ComplexMatrix {
        match *self {
            Gate::Rotation { axis, param, .. } => rotation(axis, params[param] + shift),
            Gate::Cz { .. } => controlled_z(),
        }
    }

    fn sites(&self) -> Vec<usize> {
        match *self {
            Gate::Rotation { qubit, .. } => vec![qubit],
            Gate::Cz { a, b } => vec![a, b],
        }
    }

    /// `X ↦ G X G†`, with `shift` added to the gate's angle.
    pub fn apply(&self, x: &mut ComplexMatrix, params: &[f64], shift: f64) {
        let n = x.nrows().trailing_zeros() as usize;
        if let Gate::Cz { a, b } = *self {
            cz_conjugate(x, n, a, b);
            return;
        }
        let layout = LocalLayout::new(n, &self.sites()).expect("gate sites validated at build");
        conjugate_local(x, &self.matrix(params, shift), &layout);
    }

    /// `O ↦ G† O G` (Heisenberg picture).
    pub fn apply_adjoint(&self, x: &mut ComplexMatrix, params: &[f64]) {
        let n = x.nrows().trailing_zeros() as usize;
        if let Gate::Cz { a, b } = *self {
            cz_conjugate(x, n, a, b);
            return;
        }
        let layout = LocalLayout::new(n, &self.sites()).expect("gate sites validated at build");
        conjugate_local(x, &self.matrix(params, 0.0).adjoint(), &layout);
    }
}

/// CZ is diagonal with entries ±1, so conjugation only flips signs.
fn cz_conjugate(x: &mut ComplexMatrix, n: usize, a: usize, b: usize) {
    let mask = (1usize << (n - 1 - a)) | (1usize << (n - 1 - b));
    let dim = x.nrows();
    for (j, col) in x.as_mut_slice().chunks_exact_mut(dim).enumerate() {
        let sj = j & mask == mask;
        for (i, v) in col.iter_mut().enumerate() {
            if (i & mask == mask) != sj {
                *v = -*v;
            }
        }
    }
}

/// Circuits supported by the training loop.
#[derive(Debug, Clone, PartialEq)]
pub enum Ansatz {
    Layered(AnsatzSpec),
    /// `⊗_j exp(-iθ_j σ_x / 2)`.
    ProductX { n: usize },
}

impl Ansatz {
    pub fn n(&self) -> usize {
        match self {
            Ansatz::Layered(spec) => spec.n,
            Ansatz::ProductX { n } => *n,
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            Ansatz::Layered(spec) => spec.num_params(),
            Ansatz::ProductX { n } => *n,
        }
    }

    /// Gates in application order. Every parameter appears exactly once.
    pub fn gates(&self) -> Vec<Gate> {
        match self {
            Ansatz::Layered(spec) => {
                let mut gates = Vec::with_capacity(spec.depth * (2 * spec.n - 1));
                for layer in 0..spec.depth {
                    for qubit in 0..spec.n {
                        gates.push(Gate::Rotation {
                            axis: spec.axis(layer, qubit),
                            qubit,
                            param: layer * spec.n + qubit,
                        });
                    }
                    for a in 0..spec.n.saturating_sub(1) {
                        gates.push(Gate::Cz { a, b: a + 1 });
                    }
                }
                gates
            }
            Ansatz::ProductX { n } => (0..*n)
                .map(|q| Gate::Rotation {
                    axis: Axis::X,
                    qubit: q,
                    param: q,
                })
                .collect(),
        }
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::LengthMismatch {
                expected: self.num_params(),
                actual: params.len(),
            });
        }
        Ok(())
    }

    /// `U(θ) X U(θ)†` on a raw matrix.
    pub fn apply_matrix(&self, params: &[f64], x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_params(params)?;
        if x.nrows() != 1 << self.n() || x.ncols() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n(),
                actual: x.nrows(),
            });
        }
        let mut out = x.clone();
        for gate in self.gates() {
            gate.apply(&mut out, params, 0.0);
        }
        Ok(out)
    }

    pub fn apply(&self, params: &[f64], rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.apply_matrix(params, rho.matrix())
            .map(DensityMatrix::from_matrix_unchecked)
    }
}

pub fn apply_ansatz(
    spec: &AnsatzSpec,
    params: &[f64],
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    Ansatz::Layered(spec.clone()).apply(params, rho)
}

pub fn apply_product_x_ansatz(params: &[f64], rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ansatz::ProductX { n: rho.n() }.apply(params, rho)
}

/// `(R_y(π/4)|0⟩⟨0|R_y(π/4)†)^{⊗n}`.
pub fn initial_state(n: usize) -> DensityMatrix {
    assert!(n >= 1, "initial state needs at least one qubit");
    let single = rotation(Axis::Y, FRAC_PI_4) * ComplexVector::from_column_slice(&[ONE, ZERO]);
    let mut psi = ComplexVector::from_element(1, ONE);
    for _ in 0..n {
        psi = psi.kronecker(&single);
    }
    DensityMatrix::from_pure(&psi).expect("normalized product state")
}
