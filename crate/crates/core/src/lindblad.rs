//! Engineered single-qubit dissipation.
//!
//! Each dissipator relaxes one qubit towards `|ψ₋(α,φ)⟩` through the jump
//! operator `d = |ψ₋⟩⟨ψ₊|`, with
//!
//! ```text
//! |ψ₊⟩ = cos(α/2)|0⟩ + e^{iφ} sin(α/2)|1⟩
//! |ψ₋⟩ = sin(α/2)|0⟩ − e^{iφ} cos(α/2)|1⟩
//! ```
//!
//! Generators on distinct qubits commute, so a channel `exp(LΔt)` is stored
//! as one `4×4` superoperator per dissipated qubit and applied site by site.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qlinalg::{
    self, apply_super_local, c, devectorize, eig_general, ensure_square, hermitian_eigen,
    identity, kron, matrix_exponential, outer, ComplexMatrix, ComplexVector, DensityMatrix,
    LocalLayout, Superoperator, I, ONE,
};

pub fn psi_plus(alpha: f64, phi: f64) -> ComplexVector {
    ComplexVector::from_column_slice(&[
        c((alpha / 2.0).cos()),
        Complex64::from_polar((alpha / 2.0).sin(), phi),
    ])
}

pub fn psi_minus(alpha: f64, phi: f64) -> ComplexVector {
    ComplexVector::from_column_slice(&[
        c((alpha / 2.0).sin()),
        -Complex64::from_polar((alpha / 2.0).cos(), phi),
    ])
}

/// `d = |ψ₋(α,φ)⟩⟨ψ₊(α,φ)|`.
pub fn jump_operator(alpha: f64, phi: f64) -> ComplexMatrix {
    outer(&psi_minus(alpha, phi), &psi_plus(alpha, phi))
}

/// Column-stacked GKLS generator
/// `ρ ↦ −i[h, ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`.
pub fn gkls_generator(
    hamiltonian: Option<&ComplexMatrix>,
    jumps: &[(f64, ComplexMatrix)],
    dim: usize,
) -> Result<Superoperator> {
    let id = identity(dim);
    let mut gen = Superoperator::zeros(dim * dim, dim * dim);
    if let Some(h) = hamiltonian {
        if ensure_square(h)? != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: h.nrows(),
            });
        }
        gen += (kron(&id, h) - kron(&h.transpose(), &id)) * (-I);
    }
    for (rate, l) in jumps {
        if ensure_square(l)? != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: l.nrows(),
            });
        }
        let ldl = l.adjoint() * l;
        let term = kron(&l.conjugate(), l)
            - (kron(&id, &ldl) + kron(&ldl.transpose(), &id)).unscale(2.0);
        gen += term.scale(*rate);
    }
    Ok(gen)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipatorSpec {
    pub site: usize,
    pub alpha: f64,
    pub phi: f64,
    /// Damping rate.
    pub gamma: f64,
}

impl DissipatorSpec {
    pub fn new(site: usize, alpha: f64, phi: f64) -> Self {
        Self {
            site,
            alpha,
            phi,
            gamma: 1.0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn jump_operator(&self) -> ComplexMatrix {
        jump_operator(self.alpha, self.phi)
    }

    /// The qubit state this dissipator pumps into.
    pub fn target_state(&self) -> ComplexVector {
        psi_minus(self.alpha, self.phi)
    }

    /// `4×4` generator of this dissipator on its own qubit.
    pub fn superoperator(&self) -> Superoperator {
        dissipator_superoperator(self)
    }
}

pub fn dissipator_superoperator(spec: &DissipatorSpec) -> Superoperator {
    gkls_generator(None, &[(spec.gamma, spec.jump_operator())], 2)
        .expect("2x2 jump operator")
}

/// A sum of commuting single-qubit dissipators, at most one per qubit, plus
/// an optional global Hamiltonian part.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvillianSpec {
    n: usize,
    dissipators: Vec<DissipatorSpec>,
    hamiltonian_part: Option<ComplexMatrix>,
}

impl LiouvillianSpec {
    pub fn new(n: usize, mut dissipators: Vec<DissipatorSpec>) -> Result<Self> {
        let mut seen = vec![false; n];
        for d in &dissipators {
            if d.site >= n {
                return Err(Error::SiteOutOfRange { site: d.site, n });
            }
            if seen[d.site] {
                return Err(Error::DuplicateSite(d.site));
            }
            if !(d.gamma >= 0.0) || !d.gamma.is_finite() {
                return Err(Error::InvalidChannel(format!(
                    "damping rate {} on site {} must be finite and non-negative",
                    d.gamma, d.site
                )));
            }
            seen[d.site] = true;
        }
        dissipators.sort_by_key(|d| d.site);
        Ok(Self {
            n,
            dissipators,
            hamiltonian_part: None,
        })
    }

    /// Same dissipation direction on every qubit.
    pub fn uniform(n: usize, alpha: f64, phi: f64) -> Self {
        Self::new(n, (0..n).map(|q| DissipatorSpec::new(q, alpha, phi)).collect())
            .expect("one dissipator per site")
    }

    /// Adds a Hermitian `2^n × 2^n` Hamiltonian term. Channels with this
    /// term no longer factorize and are exponentiated densely.
    pub fn with_hamiltonian_part(mut self, h: ComplexMatrix) -> Result<Self> {
        if ensure_square(&h)? != 1 << self.n {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n,
                actual: h.nrows(),
            });
        }
        if qlinalg::hermiticity_defect(&h) > qlinalg::EQ_TOL {
            return Err(Error::InvalidChannel("Hamiltonian part is not Hermitian".into()));
        }
        self.hamiltonian_part = Some(h);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dissipators(&self) -> &[DissipatorSpec] {
        &self.dissipators
    }

    pub fn hamiltonian_part(&self) -> Option<&ComplexMatrix> {
        self.hamiltonian_part.as_ref()
    }

    /// Number of local generators.
    pub fn generator_count(&self) -> usize {
        self.dissipators.len()
    }

    /// Violations of the equal-mixing-time and full-coverage conditions.
    pub fn constraint_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if let Some(first) = self.dissipators.first() {
            if self
                .dissipators
                .iter()
                .any(|d| (d.gamma - first.gamma).abs() > 1e-12)
            {
                warnings.push("damping rates differ, so mixing times differ".to_string());
            }
        }
        if self.dissipators.len() < self.n {
            warnings.push(format!(
                "{} of {} qubits have no dissipator; the steady state is not unique",
                self.n - self.dissipators.len(),
                self.n
            ));
        }
        if self.hamiltonian_part.is_some() {
            warnings.push("Hamiltonian part breaks the local factorization".to_string());
        }
        warnings
    }

    /// Product of the single-qubit target states, when every qubit is
    /// dissipated and there is no Hamiltonian part.
    pub fn product_steady_state(&self) -> Option<DensityMatrix> {
        if self.dissipators.len() != self.n || self.hamiltonian_part.is_some() {
            return None;
        }
        let mut psi = ComplexVector::from_element(1, ONE);
        for d in &self.dissipators {
            psi = psi.kronecker(&d.target_state());
        }
        DensityMatrix::from_pure(&psi).ok()
    }

    /// Dense `4^n × 4^n` generator of the whole register.
    pub fn full_generator(&self) -> Result<Superoperator> {
        let jumps = self
            .dissipators
            .iter()
            .map(|d| {
                qlinalg::embed_operator(&d.jump_operator(), &[d.site], self.n)
                    .map(|l| (d.gamma, l))
            })
            .collect::<Result<Vec<_>>>()?;
        gkls_generator(self.hamiltonian_part.as_ref(), &jumps, 1 << self.n)
    }
}

/// Largest register for which a dense (non-factorized) channel is built.
pub const MAX_DENSE_CHANNEL_QUBITS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub liouvillian: LiouvillianSpec,
    /// Interaction time.
    pub dt: f64,
}

impl ChannelSpec {
    pub fn new(liouvillian: LiouvillianSpec, dt: f64) -> Result<Self> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::InvalidChannel(format!(
                "interaction time {dt} must be finite and non-negative"
            )));
        }
        Ok(Self { liouvillian, dt })
    }

    pub fn n(&self) -> usize {
        self.liouvillian.n
    }

    pub fn compile(&self) -> Result<Channel> {
        Channel::new(self)
    }
}

/// Per-site factors `exp(L_q Δt)`; sites without dissipators are identity.
pub fn channel_superoperators(spec: &ChannelSpec) -> Result<Vec<Superoperator>> {
    let mut factors = vec![identity(4); spec.n()];
    for d in spec.liouvillian.dissipators() {
        factors[d.site] = matrix_exponential(&d.superoperator().scale(spec.dt))?;
    }
    Ok(factors)
}

/// Common interface of the compiled channels.
pub trait QuantumChannel {
    fn n(&self) -> usize;

    /// Schrödinger picture, on any (not necessarily Hermitian) operator.
    fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix;

    /// Heisenberg picture `E†(H)`.
    fn apply_adjoint_matrix(&self, h: &ComplexMatrix) -> ComplexMatrix;

    fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::from_matrix_unchecked(self.apply_matrix(rho.matrix()))
    }

    /// Full `4^n × 4^n` matrix, by acting on the basis dyads.
    fn superoperator(&self) -> Superoperator {
        let dim = 1 << self.n();
        let mut out = Superoperator::zeros(dim * dim, dim * dim);
        for j in 0..dim {
            for i in 0..dim {
                let mut e = ComplexMatrix::zeros(dim, dim);
                e[(i, j)] = ONE;
                out.set_column(i + dim * j, &qlinalg::vectorize(&self.apply_matrix(&e)));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
enum ChannelRepr {
    Factorized(Vec<(usize, Superoperator)>),
    Dense(Superoperator),
}

/// A compiled `exp(LΔt)`.
#[derive(Debug, Clone)]
pub struct Channel {
    n: usize,
    repr: ChannelRepr,
}

impl Channel {
    pub fn new(spec: &ChannelSpec) -> Result<Self> {
        let n = spec.n();
        let repr = if spec.liouvillian.hamiltonian_part.is_some() {
            if n > MAX_DENSE_CHANNEL_QUBITS {
                return Err(Error::InvalidChannel(format!(
                    "a Hamiltonian part forces a dense channel, supported up to {MAX_DENSE_CHANNEL_QUBITS} qubits"
                )));
            }
            ChannelRepr::Dense(matrix_exponential(
                &spec.liouvillian.full_generator()?.scale(spec.dt),
            )?)
        } else {
            let factors = channel_superoperators(spec)?;
            ChannelRepr::Factorized(
                spec.liouvillian
                    .dissipators()
                    .iter()
                    .map(|d| (d.site, factors[d.site].clone()))
                    .collect(),
            )
        };
        Ok(Self { n, repr })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            repr: ChannelRepr::Factorized(Vec::new()),
        }
    }

    /// Per-site factors, if the channel factorizes.
    pub fn factors(&self) -> Option<&[(usize, Superoperator)]> {
        match &self.repr {
            ChannelRepr::Factorized(f) => Some(f),
            ChannelRepr::Dense(_) => None,
        }
    }

    fn apply_with(&self, x: &ComplexMatrix, adjoint: bool) -> ComplexMatrix {
        assert_eq!(x.nrows(), 1 << self.n, "operator dimension mismatch");
        match &self.repr {
            ChannelRepr::Factorized(factors) => {
                let mut out = x.clone();
                for (site, sup) in factors {
                    let layout = LocalLayout::new(self.n, &[*site]).expect("validated site");
                    if adjoint {
                        apply_super_local(&mut out, &sup.adjoint(), &layout);
                    } else {
                        apply_super_local(&mut out, sup, &layout);
                    }
                }
                out
            }
            ChannelRepr::Dense(sup) => {
                let v = qlinalg::vectorize(x);
                let out = if adjoint { sup.adjoint() * v } else { sup * v };
                devectorize(&out)
            }
        }
    }
}

impl QuantumChannel for Channel {
    fn n(&self) -> usize {
        self.n
    }

    fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.apply_with(x, false)
    }

    fn apply_adjoint_matrix(&self, h: &ComplexMatrix) -> ComplexMatrix {
        self.apply_with(h, true)
    }
}

pub fn sigmoid(sigma: f64) -> f64 {
    1.0 / (1.0 + (-sigma).exp())
}

pub fn sigmoid_derivative(sigma: f64) -> f64 {
    let s = sigmoid(sigma);
    s * (1.0 - s)
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    /// Non-negative weights summing to one.
    Explicit(Vec<f64>),
    /// Two branches weighted `s(σ)` and `1 − s(σ)`.
    Sigmoid(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexChannelSpec {
    pub branches: Vec<ChannelSpec>,
    pub weights: WeightSource,
}

impl ConvexChannelSpec {
    pub fn new(branches: Vec<ChannelSpec>, weights: WeightSource) -> Result<Self> {
        let spec = Self { branches, weights };
        spec.validate()?;
        Ok(spec)
    }

    /// The two-branch sigmoid mixture.
    pub fn sigmoid(first: ChannelSpec, second: ChannelSpec, sigma: f64) -> Result<Self> {
        Self::new(vec![first, second], WeightSource::Sigmoid(sigma))
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches.is_empty() {
            return Err(Error::InvalidChannel("convex channel without branches".into()));
        }
        let n = self.branches[0].n();
        if self.branches.iter().any(|b| b.n() != n) {
            return Err(Error::InvalidChannel("branches act on different registers".into()));
        }
        match &self.weights {
            WeightSource::Explicit(w) => {
                if w.len() != self.branches.len() {
                    return Err(Error::LengthMismatch {
                        expected: self.branches.len(),
                        actual: w.len(),
                    });
                }
                if w.iter().any(|&x| !(x >= 0.0)) {
                    return Err(Error::InvalidChannel("negative branch weight".into()));
                }
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidChannel(format!(
                        "branch weights sum to {sum}, not 1"
                    )));
                }
            }
            WeightSource::Sigmoid(sigma) => {
                if self.branches.len() != 2 {
                    return Err(Error::InvalidChannel(
                        "sigmoid weights need exactly two branches".into(),
                    ));
                }
                if sigma.is_nan() {
                    return Err(Error::InvalidChannel("sigmoid parameter is NaN".into()));
                }
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> Vec<f64> {
        mixture_weights(&self.weights)
    }

    pub fn compile(&self) -> Result<ConvexChannel> {
        self.validate()?;
        Ok(ConvexChannel {
            branches: self
                .branches
                .iter()
                .map(Channel::new)
                .collect::<Result<_>>()?,
            weights: self.weights(),
        })
    }
}

pub fn mixture_weights(source: &WeightSource) -> Vec<f64> {
    match source {
        WeightSource::Explicit(w) => w.clone(),
        WeightSource::Sigmoid(sigma) => {
            let s = sigmoid(*sigma);
            vec![s, 1.0 - s]
        }
    }
}

/// `Σ_j β_j exp(L_j Δt)`.
#[derive(Debug, Clone)]
pub struct ConvexChannel {
    pub branches: Vec<Channel>,
    pub weights: Vec<f64>,
}

impl QuantumChannel for ConvexChannel {
    fn n(&self) -> usize {
        self.branches[0].n
    }

    fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(x.nrows(), x.ncols());
        for (w, b) in self.weights.iter().zip(&self.branches) {
            if *w != 0.0 {
                out += b.apply_matrix(x).scale(*w);
            }
        }
        out
    }

    fn apply_adjoint_matrix(&self, h: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(h.nrows(), h.ncols());
        for (w, b) in self.weights.iter().zip(&self.branches) {
            if *w != 0.0 {
                out += b.apply_adjoint_matrix(h).scale(*w);
            }
        }
        out
    }
}

pub fn apply_convex_channel(spec: &ConvexChannelSpec, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let channel = spec.compile()?;
    if channel.n() != rho.n() {
        return Err(Error::DimensionMismatch {
            expected: channel.n(),
            actual: rho.n(),
        });
    }
    Ok(channel.apply(rho))
}

/// `H' = exp(L† Δt) H`.
pub fn adjoint_channel_on_observable(spec: &ChannelSpec, h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if ensure_square(h)? != 1 << spec.n() {
        return Err(Error::DimensionMismatch {
            expected: 1 << spec.n(),
            actual: h.nrows(),
        });
    }
    Ok(spec.compile()?.apply_adjoint_matrix(h))
}

/// Choi matrix `Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)` of a column-stacked superoperator.
pub fn choi_matrix(sup: &Superoperator) -> ComplexMatrix {
    let d2 = sup.nrows();
    let d = (d2 as f64).sqrt().round() as usize;
    let mut choi = ComplexMatrix::zeros(d2, d2);
    for i in 0..d {
        for j in 0..d {
            let block = devectorize(&sup.column(i + d * j).into_owned());
            for a in 0..d {
                for b in 0..d {
                    choi[(i * d + a, j * d + b)] = block[(a, b)];
                }
            }
        }
    }
    choi
}

/// Eigenstructure of one local generator, ordered by decreasing real part.
#[derive(Debug, Clone)]
pub struct SpectralAnalysis {
    pub eigenvalues: Vec<Complex64>,
    /// Columns are the right eigenvectors `|r_i⟩⟩`.
    pub right: ComplexMatrix,
    /// Columns are the left eigenvectors `|l_i⟩⟩`, normalized so `⟨⟨l_i|r_i⟩⟩ = 1`.
    pub left: ComplexMatrix,
    pub gap: f64,
    pub steady_state: DensityMatrix,
    pub mixing_time: f64,
    /// Eigenvalues within `1e-10` of zero.
    pub zero_modes: usize,
}

impl SpectralAnalysis {
    /// `Σ_i e^{λ_i Δt} |r_i⟩⟩⟨⟨l_i| / ⟨⟨l_i|r_i⟩⟩`.
    pub fn exponential(&self, dt: f64) -> Superoperator {
        let mut out = Superoperator::zeros(self.right.nrows(), self.right.nrows());
        for (i, lam) in self.eigenvalues.iter().enumerate() {
            let r = self.right.column(i);
            let l = self.left.column(i);
            let norm = l.dotc(&r);
            out += (r * l.adjoint()) * ((lam * dt).exp() / norm);
        }
        out
    }
}

pub fn spectral_analysis(spec: &DissipatorSpec) -> Result<SpectralAnalysis> {
    analyze_generator(&spec.superoperator())
}

/// Spectral data of a single-qubit (`4×4`) or larger generator.
pub fn analyze_generator(generator: &Superoperator) -> Result<SpectralAnalysis> {
    let eig = eig_general(generator)?;
    if eig.near_defective {
        return Err(Error::Eigen(format!(
            "generator is nearly defective (condition {:.2e})",
            eig.condition
        )));
    }
    let dim2 = generator.nrows();
    let mut order: Vec<usize> = (0..dim2).collect();
    order.sort_by(|&a, &b| {
        eig.values[b]
            .re
            .total_cmp(&eig.values[a].re)
            .then(eig.values[b].im.total_cmp(&eig.values[a].im))
    });
    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| eig.values[i]).collect();
    let mut right = ComplexMatrix::zeros(dim2, dim2);
    let mut left = ComplexMatrix::zeros(dim2, dim2);
    for (k, &i) in order.iter().enumerate() {
        right.set_column(k, &eig.right.column(i));
        left.set_column(k, &eig.left.column(i));
    }
    let zero_modes = eigenvalues.iter().filter(|z| z.norm() < 1e-10).count();
    if eigenvalues[0].norm() > 1e-10 {
        return Err(Error::Eigen(format!(
            "leading eigenvalue {} is not zero",
            eigenvalues[0]
        )));
    }
    let mut ss = devectorize(&right.column(0).into_owned());
    let tr = qlinalg::trace(&ss);
    ss /= tr;
    let ss = (&ss + ss.adjoint()).unscale(2.0);
    let steady_state = DensityMatrix::new(ss)?;
    let gap = eigenvalues.get(1).map_or(0.0, |z| z.re.abs());
    Ok(SpectralAnalysis {
        eigenvalues,
        right,
        left,
        gap,
        steady_state,
        mixing_time: if gap > 0.0 { 1.0 / gap } else { f64::INFINITY },
        zero_modes,
    })
}

/// Interaction-time budget `log(Q)·Δt_mix`, never below `Δt_mix`.
pub fn recommended_dt(generator_count: f64, mixing_time: f64) -> f64 {
    assert!(generator_count >= 1.0, "need at least one generator");
    generator_count.ln().max(1.0) * mixing_time
}

/// Minimum eigenvalue of the Hermitian part, used by positivity checks.
pub fn min_hermitian_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigen(m)?.0[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::{max_abs_diff, trace, vectorize};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_state(rng: &mut impl Rng, n: usize) -> DensityMatrix {
        let dim = 1 << n;
        let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let m = &a * a.adjoint();
        let tr = trace(&m);
        DensityMatrix::new(m / tr).unwrap()
    }

    fn random_liouvillian(rng: &mut impl Rng, n: usize) -> LiouvillianSpec {
        LiouvillianSpec::new(
            n,
            (0..n)
                .map(|q| DissipatorSpec::new(q, rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn jump_operator_special_angles() {
        let d = jump_operator(PI, 0.0);
        let mut expected = ComplexMatrix::zeros(2, 2);
        expected[(0, 1)] = ONE;
        assert!(max_abs_diff(&d, &expected) < 1e-15);

        let d0 = jump_operator(0.0, 0.0);
        let mut expected0 = ComplexMatrix::zeros(2, 2);
        expected0[(1, 0)] = -ONE;
        assert!(max_abs_diff(&d0, &expected0) < 1e-15);
    }

    #[test]
    fn jump_operator_is_orthogonal_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let (a, p) = (rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI));
            assert!(psi_plus(a, p).dotc(&psi_minus(a, p)).norm() < 1e-12);
            let d = jump_operator(a, p);
            assert!((&d * &d).norm() < 1e-12);
            assert!((trace(&(d.adjoint() * &d)) - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn generator_spectrum_and_stationarity() {
        let spec = DissipatorSpec::new(0, 1.1, 0.4);
        let gen = spec.superoperator();
        let target = spec.target_state();
        let ss = vectorize(&outer(&target, &target));
        assert!((&gen * ss).norm() < 1e-12);

        let sa = spectral_analysis(&spec).unwrap();
        let expected = [0.0, -0.5, -0.5, -1.0];
        for (got, want) in sa.eigenvalues.iter().zip(expected) {
            assert!((got - Complex64::new(want, 0.0)).norm() < 1e-10, "{got}");
        }
        let doubled = spectral_analysis(&spec.with_gamma(2.0)).unwrap();
        for (a, b) in doubled.eigenvalues.iter().zip(&sa.eigenvalues) {
            assert!((a - b * 2.0).norm() < 1e-10);
        }
        assert!((doubled.gap - 1.0).abs() < 1e-10);
        assert!((doubled.mixing_time - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spectral_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..20 {
            let spec = DissipatorSpec::new(0, rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI));
            let sa = spectral_analysis(&spec).unwrap();
            assert!((sa.gap - 0.5).abs() < 1e-10);
            assert!((sa.mixing_time - 2.0).abs() < 1e-9);
            assert_eq!(sa.zero_modes, 1);
            assert!(sa.steady_state.fidelity_with_pure(&spec.target_state()) > 1.0 - 1e-10);
            // left zero mode ∝ vec(I)
            let l0 = devectorize(&sa.left.column(0).into_owned());
            let scale = l0[(0, 0)];
            assert!(max_abs_diff(&l0, &(identity(2) * scale)) < 1e-10);
            for dt in [0.1, 1.0, 5.0] {
                let exact = matrix_exponential(&spec.superoperator().scale(dt)).unwrap();
                assert!(max_abs_diff(&sa.exponential(dt), &exact) < 1e-9);
            }
            // conjugation symmetry of the spectrum
            for lam in &sa.eigenvalues {
                assert!(sa.eigenvalues.iter().any(|mu| (mu - lam.conj()).norm() < 1e-9));
            }
        }
    }

    #[test]
    fn channel_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let liou = random_liouvillian(&mut rng, 2);
        let zero = ChannelSpec::new(liou.clone(), 0.0).unwrap();
        for f in channel_superoperators(&zero).unwrap() {
            assert!(max_abs_diff(&f, &identity(4)) < 1e-15);
        }
        let rho = random_state(&mut rng, 2);
        let id_out = zero.compile().unwrap().apply(&rho);
        assert!(max_abs_diff(id_out.matrix(), rho.matrix()) < 1e-14);

        let long = ChannelSpec::new(liou.clone(), 50.0).unwrap().compile().unwrap();
        let out = long.apply(&rho);
        let ss = liou.product_steady_state().unwrap();
        assert!(max_abs_diff(out.matrix(), ss.matrix()) < 1e-10);
    }

    #[test]
    fn factorized_channel_matches_dense_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let liou = random_liouvillian(&mut rng, 3);
        let spec = ChannelSpec::new(liou.clone(), 0.8).unwrap();
        let rho = random_state(&mut rng, 3);
        let dense = matrix_exponential(&liou.full_generator().unwrap().scale(0.8)).unwrap();
        let expected = devectorize(&(dense * vectorize(rho.matrix())));
        let got = spec.compile().unwrap().apply(&rho);
        assert!(max_abs_diff(got.matrix(), &expected) < 1e-10);
    }

    #[test]
    fn cptp_and_choi_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let liou = random_liouvillian(&mut rng, 3);
        let channel = ChannelSpec::new(liou, 0.6).unwrap().compile().unwrap();
        let rho = random_state(&mut rng, 3);
        let out = channel.apply(&rho);
        assert!((out.trace() - 1.0).abs() < 1e-10);
        assert!(qlinalg::hermiticity_defect(out.matrix()) < 1e-10);
        assert!(out.min_eigenvalue().unwrap() > -1e-9);
        for (_, f) in channel.factors().unwrap() {
            assert!(min_hermitian_eigenvalue(&choi_matrix(f)).unwrap() > -1e-9);
        }
    }

    #[test]
    fn distinct_site_generators_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let a = DissipatorSpec::new(0, rng.random_range(0.0..PI), 0.3);
        let b = DissipatorSpec::new(1, rng.random_range(0.0..PI), 1.7);
        let la = LiouvillianSpec::new(2, vec![a]).unwrap().full_generator().unwrap();
        let lb = LiouvillianSpec::new(2, vec![b]).unwrap().full_generator().unwrap();
        assert!((&la * &lb - &lb * &la).norm() < 1e-12);
    }

    #[test]
    fn semigroup_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let liou = random_liouvillian(&mut rng, 2);
        let rho = random_state(&mut rng, 2);
        let e1 = ChannelSpec::new(liou.clone(), 0.3).unwrap().compile().unwrap();
        let e2 = ChannelSpec::new(liou.clone(), 1.1).unwrap().compile().unwrap();
        let e12 = ChannelSpec::new(liou, 1.4).unwrap().compile().unwrap();
        let lhs = e1.apply(&e2.apply(&rho));
        assert!(max_abs_diff(lhs.matrix(), e12.apply(&rho).matrix()) < 1e-10);
    }

    #[test]
    fn heisenberg_duality_and_unitality() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let liou = random_liouvillian(&mut rng, 3);
        let spec = ChannelSpec::new(liou.clone(), 0.9).unwrap();
        let a = ComplexMatrix::from_fn(8, 8, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let h = &a + a.adjoint();
        let hp = adjoint_channel_on_observable(&spec, &h).unwrap();
        assert!(qlinalg::hermiticity_defect(&hp) < 1e-10);
        let rho = random_state(&mut rng, 3);
        let lhs = qlinalg::trace_of_product(&h, spec.compile().unwrap().apply(&rho).matrix());
        let rhs = qlinalg::trace_of_product(&hp, rho.matrix());
        assert!((lhs - rhs).norm() < 1e-10);

        let id = adjoint_channel_on_observable(&spec, &identity(8)).unwrap();
        assert!(max_abs_diff(&id, &identity(8)) < 1e-10);
        let zero = ChannelSpec::new(liou, 0.0).unwrap();
        assert!(max_abs_diff(&adjoint_channel_on_observable(&zero, &h).unwrap(), &h) < 1e-14);
    }

    #[test]
    fn convex_channel_mixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let b1 = ChannelSpec::new(LiouvillianSpec::uniform(2, PI, 0.0), 0.7).unwrap();
        let b2 = ChannelSpec::new(LiouvillianSpec::uniform(2, 0.0, 0.0), 0.7).unwrap();
        let rho = random_state(&mut rng, 2);
        let r1 = b1.compile().unwrap().apply(&rho);
        let r2 = b2.compile().unwrap().apply(&rho);

        let sat = ConvexChannelSpec::sigmoid(b1.clone(), b2.clone(), 60.0).unwrap();
        let out = apply_convex_channel(&sat, &rho).unwrap();
        assert!(max_abs_diff(out.matrix(), r1.matrix()) < 1e-12);

        let half = ConvexChannelSpec::sigmoid(b1.clone(), b2.clone(), 0.0).unwrap();
        let out = apply_convex_channel(&half, &rho).unwrap();
        let mid = (r1.matrix() + r2.matrix()).unscale(2.0);
        assert!(max_abs_diff(out.matrix(), &mid) < 1e-14);
        assert!((out.trace() - 1.0).abs() < 1e-10);
        assert!(out.min_eigenvalue().unwrap() > -1e-9);

        // duality for the mixture
        let mixed = ConvexChannelSpec::new(
            vec![b1.clone(), b2.clone()],
            WeightSource::Explicit(vec![0.3, 0.7]),
        )
        .unwrap()
        .compile()
        .unwrap();
        let h = crate::qlinalg::embed_operator(&qlinalg::pauli_z(), &[1], 2).unwrap()
            + crate::qlinalg::embed_operator(&qlinalg::pauli_x(), &[0], 2).unwrap();
        let lhs = qlinalg::trace_of_product(&h, mixed.apply(&rho).matrix());
        let rhs = qlinalg::trace_of_product(&mixed.apply_adjoint_matrix(&h), rho.matrix());
        assert!((lhs - rhs).norm() < 1e-10);

        let bad = ConvexChannelSpec::new(vec![b1.clone(), b2.clone()], WeightSource::Explicit(vec![0.5, 0.6]));
        assert!(bad.is_err());
        let neg = ConvexChannelSpec::new(vec![b1.clone(), b2], WeightSource::Explicit(vec![1.5, -0.5]));
        assert!(neg.is_err());
        assert!(ConvexChannelSpec::new(vec![b1], WeightSource::Sigmoid(0.0)).is_err());
    }

    #[test]
    fn recommended_dt_rules() {
        assert_eq!(recommended_dt(1.0, 2.0), 2.0);
        assert_eq!(recommended_dt(2.0, 2.0), 2.0);
        assert!((recommended_dt(std::f64::consts::E.powi(2), 2.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn liouvillian_validation_and_warnings() {
        assert!(matches!(
            LiouvillianSpec::new(2, vec![DissipatorSpec::new(0, 0.0, 0.0), DissipatorSpec::new(0, 1.0, 0.0)]),
            Err(Error::DuplicateSite(0))
        ));
        assert!(LiouvillianSpec::new(2, vec![DissipatorSpec::new(2, 0.0, 0.0)]).is_err());
        let uneven = LiouvillianSpec::new(
            2,
            vec![DissipatorSpec::new(0, 0.0, 0.0), DissipatorSpec::new(1, 0.0, 0.0).with_gamma(2.0)],
        )
        .unwrap();
        assert_eq!(uneven.constraint_warnings().len(), 1);
        assert!(LiouvillianSpec::uniform(3, 1.0, 0.0).constraint_warnings().is_empty());
    }

    #[test]
    fn hamiltonian_part_uses_dense_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let mut h = ComplexMatrix::zeros(4, 4);
        h[(0, 3)] = Complex64::new(0.2, 0.1);
        h[(3, 0)] = Complex64::new(0.2, -0.1);
        let liou = LiouvillianSpec::uniform(2, PI, 0.0).with_hamiltonian_part(h).unwrap();
        let channel = ChannelSpec::new(liou, 0.5).unwrap().compile().unwrap();
        assert!(channel.factors().is_none());
        let out = channel.apply(&random_state(&mut rng, 2));
        assert!((out.trace() - 1.0).abs() < 1e-10);
        let mut not_herm = ComplexMatrix::zeros(4, 4);
        not_herm[(0, 1)] = ONE;
        assert!(LiouvillianSpec::uniform(2, PI, 0.0)
            .with_hamiltonian_part(not_herm)
            .is_err());
    }
}
