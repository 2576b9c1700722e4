//! Pauli-sum Hamiltonians, benchmark instances and locality profiles.
//!
//! Pauli strings are written with the letter for qubit 0 first, matching the
//! tensor-factor order of [`crate::qlinalg`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lindblad::{DissipatorSpec, LiouvillianSpec, QuantumChannel};
use crate::qlinalg::{
    ensure_square, hermitian_eigen, hermiticity_defect, qubits_for_dim, ComplexMatrix,
    ComplexVector, DensityMatrix, EQ_TOL, ONE,
};

/// The shipped H₂ (STO-3G, 0.74 Å, Jordan-Wigner) Pauli file.
pub const H2_STO3G_FIXTURE: &str = include_str!("../fixtures/h2_sto3g_jw.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(ch: char) -> Option<Self> {
        match ch {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self(letters)
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![Pauli::I; n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.0
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// `(x_mask, z_mask, y_count)` in basis-index bit positions.
    fn masks(&self) -> (usize, usize, usize) {
        let n = self.n();
        let (mut x, mut z, mut y) = (0usize, 0usize, 0usize);
        for (q, p) in self.0.iter().enumerate() {
            let bit = 1 << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    y += 1;
                }
            }
        }
        (x, z, y)
    }

    fn from_masks(n: usize, x: usize, z: usize) -> Self {
        Self(
            (0..n)
                .map(|q| {
                    let bit = 1 << (n - 1 - q);
                    match (x & bit != 0, z & bit != 0) {
                        (false, false) => Pauli::I,
                        (true, false) => Pauli::X,
                        (true, true) => Pauli::Y,
                        (false, true) => Pauli::Z,
                    }
                })
                .collect(),
        )
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_dense(&self) -> ComplexMatrix {
        let dim = 1 << self.n();
        let mut out = ComplexMatrix::zeros(dim, dim);
        let action = PauliAction::new(self);
        for k in 0..dim {
            out[(k ^ action.x, k)] = action.phase(k);
        }
        out
    }
}

/// `P|k⟩ = phase(k) |k ⊕ x⟩`.
struct PauliAction {
    x: usize,
    z: usize,
    y_phase: Complex64,
}

impl PauliAction {
    fn new(p: &PauliString) -> Self {
        let (x, z, y) = p.masks();
        let y_phase = [ONE, Complex64::new(0.0, 1.0), -ONE, Complex64::new(0.0, -1.0)][y % 4];
        Self { x, z, y_phase }
    }

    fn phase(&self, k: usize) -> Complex64 {
        if (k & self.z).count_ones() % 2 == 1 {
            -self.y_phase
        } else {
            self.y_phase
        }
    }

    /// `Tr{A P} = Σ_k phase(k) A[k, k ⊕ x]`.
    fn trace_with(&self, a: &ComplexMatrix) -> Complex64 {
        (0..a.nrows()).map(|k| self.phase(k) * a[(k, k ^ self.x)]).sum()
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| {
                Pauli::from_char(ch)
                    .ok_or_else(|| Error::InvalidArgument(format!("invalid Pauli letter {ch:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .and_then(|v| {
                if v.is_empty() {
                    Err(Error::InvalidArgument("empty Pauli string".into()))
                } else {
                    Ok(Self(v))
                }
            })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// `Σ c_p P` with real coefficients and unique strings, kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    /// Duplicate strings are merged by adding coefficients.
    pub fn new(n: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        let mut merged: BTreeMap<PauliString, f64> = BTreeMap::new();
        for (c, p) in terms {
            if p.n() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: p.n(),
                });
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient for {p}")));
            }
            *merged.entry(p).or_insert(0.0) += c;
        }
        Ok(Self {
            n,
            terms: merged.into_iter().map(|(p, c)| (c, p)).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.terms
            .iter()
            .find(|(_, q)| q == p)
            .map_or(0.0, |(c, _)| *c)
    }

    /// `Σ |c_p|`, an upper bound on the spectral norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let dim = 1 << self.n;
        let mut out = ComplexMatrix::zeros(dim, dim);
        for (c, p) in &self.terms {
            let action = PauliAction::new(p);
            for k in 0..dim {
                out[(k ^ action.x, k)] += action.phase(k) * *c;
            }
        }
        out
    }

    /// Pauli expansion `c_p = Tr{P H}/2^n`; coefficients with `|c_p| ≤ drop_below` are omitted.
    pub fn from_dense(h: &ComplexMatrix, drop_below: f64) -> Result<Self> {
        let dim = ensure_square(h)?;
        let n = qubits_for_dim(dim)?;
        if hermiticity_defect(h) > EQ_TOL * h.norm().max(1.0) {
            return Err(Error::InvalidArgument("operator is not Hermitian".into()));
        }
        let mut terms = Vec::new();
        for x in 0..dim {
            for z in 0..dim {
                let p = PauliString::from_masks(n, x, z);
                let c = PauliAction::new(&p).trace_with(h) / dim as f64;
                if c.re.abs() > drop_below {
                    terms.push((c.re, p));
                }
            }
        }
        Self::new(n, terms)
    }

    pub fn expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        check_dims(self.n, rho)?;
        let m = rho.matrix();
        Ok(self
            .terms
            .iter()
            .map(|(c, p)| c * PauliAction::new(p).trace_with(m).re)
            .sum())
    }

    pub fn locality_profile(&self) -> LocalityProfile {
        let mut weights = vec![0.0; self.n + 1];
        for (c, p) in &self.terms {
            weights[p.weight()] += c * c;
        }
        LocalityProfile::from_weights(weights)
    }

    pub fn ground_energy(&self) -> Result<f64> {
        Ok(hermitian_eigen(&self.to_dense())?.0[0])
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, p) in &self.terms {
            writeln!(f, "{c:.15} {p}")?;
        }
        Ok(())
    }
}

fn check_dims(n: usize, rho: &DensityMatrix) -> Result<()> {
    if rho.n() != n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            actual: rho.dim(),
        });
    }
    Ok(())
}

/// Anything whose expectation value on a state can be computed.
pub trait Observable {
    fn expectation(&self, rho: &DensityMatrix) -> Result<f64>;
}

impl Observable for PauliSum {
    fn expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        PauliSum::expectation(self, rho)
    }
}

impl Observable for ComplexMatrix {
    fn expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        if self.nrows() != rho.dim() || self.ncols() != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                actual: self.nrows(),
            });
        }
        Ok(crate::qlinalg::trace_of_product(self, rho.matrix()).re)
    }
}

pub fn expectation(h: &impl Observable, rho: &DensityMatrix) -> Result<f64> {
    h.expectation(rho)
}

/// Squared Pauli coefficient mass per string weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalityProfile {
    /// `weights[k] = Σ_{|p| = k} c_p²`.
    pub weights: Vec<f64>,
    pub total: f64,
}

impl LocalityProfile {
    fn from_weights(weights: Vec<f64>) -> Self {
        let total = weights.iter().sum();
        Self { weights, total }
    }

    pub fn non_identity_mass(&self) -> f64 {
        self.weights.iter().skip(1).sum()
    }

    /// Share of the non-identity mass carried by strings of weight `1..=k`.
    pub fn non_identity_fraction_up_to(&self, k: usize) -> f64 {
        let rest = self.non_identity_mass();
        if rest == 0.0 {
            return 1.0;
        }
        self.weights.iter().take(k + 1).skip(1).sum::<f64>() / rest
    }

    /// Share of the total mass at weight `k`.
    pub fn relative(&self, k: usize) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            self.weights.get(k).copied().unwrap_or(0.0) / self.total
        }
    }
}

/// Heisenberg-picture Hamiltonian `E†(H)` with its locality profile.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub matrix: ComplexMatrix,
    pub profile: LocalityProfile,
}

pub fn effective_hamiltonian(
    h: &ComplexMatrix,
    channel: &impl QuantumChannel,
) -> Result<EffectiveHamiltonian> {
    let dim = ensure_square(h)?;
    if dim != 1 << channel.n() {
        return Err(Error::DimensionMismatch {
            expected: 1 << channel.n(),
            actual: dim,
        });
    }
    if hermiticity_defect(h) > EQ_TOL * h.norm().max(1.0) {
        return Err(Error::InvalidArgument("Hamiltonian is not Hermitian".into()));
    }
    let hp = channel.apply_adjoint_matrix(h);
    let hp = (&hp + hp.adjoint()).unscale(2.0);
    let profile = PauliSum::from_dense(&hp, 0.0)?.locality_profile();
    Ok(EffectiveHamiltonian { matrix: hp, profile })
}

/// `I − |0…0⟩⟨0…0|` expanded as `I − 2^{-n} Σ_S Z_S`.
pub fn warmup_hamiltonian(n: usize) -> PauliSum {
    assert!(n >= 1, "warm-up Hamiltonian needs at least one qubit");
    let scale = 0.5f64.powi(n as i32);
    let terms = (0..1usize << n).map(|mask| {
        let p = PauliString::from_masks(n, 0, mask);
        let c = if mask == 0 { 1.0 - scale } else { -scale };
        (c, p)
    });
    PauliSum::new(n, terms).expect("consistent lengths")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomHamiltonianSpec {
    pub n: usize,
    pub e_max: f64,
    pub e_min: f64,
    /// Weight of the Haar perturbation added to each anchor.
    pub perturbation: f64,
    pub seed: u64,
}

impl RandomHamiltonianSpec {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            e_max: 1.1,
            e_min: -1.1,
            perturbation: 0.1,
            seed,
        }
    }
}

/// Which computational basis state the ground state is built around.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    AllZeros,
    AllOnes,
}

impl Anchor {
    pub fn basis_index(self, n: usize) -> usize {
        match self {
            Anchor::AllZeros => 0,
            Anchor::AllOnes => (1 << n) - 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomHamiltonian {
    pub matrix: ComplexMatrix,
    /// Eigenvalues in the order of the columns of `eigenvectors`:
    /// ground, top, then the interior levels.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
    pub ground_energy: f64,
    pub ground_state: ComplexVector,
    pub ground_anchor: Anchor,
}

fn gaussian_vector(rng: &mut impl Rng, dim: usize) -> ComplexVector {
    ComplexVector::from_fn(dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

fn haar_vector(rng: &mut impl Rng, dim: usize) -> ComplexVector {
    gaussian_vector(rng, dim).normalize()
}

pub fn random_hamiltonian(spec: &RandomHamiltonianSpec) -> Result<RandomHamiltonian> {
    random_hamiltonian_with(spec, &mut ChaCha8Rng::seed_from_u64(spec.seed))
}

pub fn random_hamiltonian_with(
    spec: &RandomHamiltonianSpec,
    rng: &mut impl Rng,
) -> Result<RandomHamiltonian> {
    let n = spec.n;
    if n < 2 {
        return Err(Error::InvalidArgument("random Hamiltonian needs n >= 2".into()));
    }
    if !(spec.e_min < -1.0 && spec.e_max > 1.0) {
        return Err(Error::InvalidArgument(
            "anchored levels must lie outside (-1, 1)".into(),
        ));
    }
    let dim = 1 << n;
    let mut zeros = ComplexVector::zeros(dim);
    zeros[0] = ONE;
    let mut ones = ComplexVector::zeros(dim);
    ones[dim - 1] = ONE;
    let psi1 = (zeros + haar_vector(rng, dim) * Complex64::from(spec.perturbation)).normalize();
    let psi2 = (ones + haar_vector(rng, dim) * Complex64::from(spec.perturbation)).normalize();

    // Columns 0, 1 of the phase-fixed QR factor are ψ₁ and ψ₂ orthogonalized
    // against ψ₁; the rest is a Haar basis of the complement.
    let mut basis = ComplexMatrix::zeros(dim, dim);
    basis.set_column(0, &psi1);
    basis.set_column(1, &psi2);
    for j in 2..dim {
        basis.set_column(j, &gaussian_vector(rng, dim));
    }
    let qr = basis.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        if d.norm() < 1e-12 {
            return Err(Error::InvalidArgument("degenerate eigenbasis draw".into()));
        }
        let phase = d / d.norm();
        let mut col = q.column_mut(j);
        col *= phase;
    }

    let psi1_is_ground = rng.random_bool(0.5);
    let mut eigenvalues = Vec::with_capacity(dim);
    let (first, second) = if psi1_is_ground {
        (spec.e_min, spec.e_max)
    } else {
        (spec.e_max, spec.e_min)
    };
    eigenvalues.push(first);
    eigenvalues.push(second);
    for _ in 2..dim {
        let mut lam: f64 = rng.random_range(-1.0..1.0);
        while lam == -1.0 {
            lam = rng.random_range(-1.0..1.0);
        }
        eigenvalues.push(lam);
    }

    let mut scaled = q.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= Complex64::from(eigenvalues[j]);
    }
    let mut matrix = scaled * q.adjoint();
    matrix = (&matrix + matrix.adjoint()).unscale(2.0);

    // Order as ground, top, interior.
    if !psi1_is_ground {
        eigenvalues.swap(0, 1);
        q.swap_columns(0, 1);
    }
    let ground_state = q.column(0).into_owned();
    let ground_anchor = if psi1_is_ground {
        Anchor::AllZeros
    } else {
        Anchor::AllOnes
    };
    Ok(RandomHamiltonian {
        matrix,
        ground_energy: spec.e_min,
        eigenvalues,
        eigenvectors: q,
        ground_state,
        ground_anchor,
    })
}

/// A parsed Pauli file: the operator and its `key=value` header metadata.
#[derive(Debug, Clone)]
pub struct PauliDocument {
    pub sum: PauliSum,
    pub metadata: BTreeMap<String, String>,
}

impl PauliDocument {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta(key).and_then(|v| v.trim().parse().ok())
    }
}

fn parse_coefficient(token: &str, line: usize) -> Result<f64> {
    if let Ok(x) = token.parse::<f64>() {
        return Ok(x);
    }
    let z = Complex64::from_str(&token.replace('j', "i")).map_err(|_| Error::Parse {
        line,
        message: format!("malformed coefficient {token:?}"),
    })?;
    if z.im != 0.0 {
        return Err(Error::Parse {
            line,
            message: format!("non-real coefficient {token}"),
        });
    }
    Ok(z.re)
}

pub fn parse_pauli_text(text: &str) -> Result<PauliDocument> {
    let mut metadata = BTreeMap::new();
    let mut terms = Vec::new();
    let mut n: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `<coefficient> <pauli string>`, got {line:?}"),
            });
        }
        let c = parse_coefficient(tokens[0], line_no)?;
        let p: PauliString = tokens[1].parse().map_err(|e: Error| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        match n {
            None => n = Some(p.n()),
            Some(m) if m != p.n() => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("Pauli string length {} differs from {m}", p.n()),
                })
            }
            _ => {}
        }
        terms.push((c, p));
    }
    let n = n.ok_or(Error::Parse {
        line: 0,
        message: "no Hamiltonian terms".into(),
    })?;
    if let Some(declared) = metadata.get("n") {
        if declared.parse::<usize>().ok() != Some(n) {
            return Err(Error::Parse {
                line: 0,
                message: format!("header declares n={declared} but strings have length {n}"),
            });
        }
    }
    Ok(PauliDocument {
        sum: PauliSum::new(n, terms)?,
        metadata,
    })
}

pub fn load_pauli_file(path: impl AsRef<Path>) -> Result<PauliDocument> {
    parse_pauli_text(&std::fs::read_to_string(path)?)
}

/// Dissipators pumping each qubit into its Hartree-Fock occupation:
/// `α = π` for bit 0, `α = 0` for bit 1, `φ = 0`.
pub fn hf_dissipators(bits: &str) -> Result<LiouvillianSpec> {
    let dissipators = bits
        .chars()
        .enumerate()
        .map(|(q, b)| match b {
            '0' => Ok(DissipatorSpec::new(q, std::f64::consts::PI, 0.0)),
            '1' => Ok(DissipatorSpec::new(q, 0.0, 0.0)),
            other => Err(Error::InvalidArgument(format!("invalid bit {other:?} in {bits:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if dissipators.is_empty() {
        return Err(Error::InvalidArgument("empty bit string".into()));
    }
    LiouvillianSpec::new(dissipators.len(), dissipators)
}

/// Basis index of a bit string, leftmost bit on qubit 0.
pub fn bits_to_index(bits: &str) -> Result<usize> {
    usize::from_str_radix(bits, 2)
        .map_err(|_| Error::InvalidArgument(format!("invalid bit string {bits:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{analyze_generator, ChannelSpec};
    use crate::qlinalg::{embed_operator, identity, max_abs_diff, pauli_x, pauli_y, pauli_z};
    use proptest::{prop_assert, proptest};

    fn random_state(rng: &mut impl Rng, n: usize) -> DensityMatrix {
        let dim = 1 << n;
        let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let m = &a * a.adjoint();
        let tr = crate::qlinalg::trace(&m);
        DensityMatrix::new(m / tr).unwrap()
    }

    fn kron_oracle(p: &PauliString) -> ComplexMatrix {
        let mut m = identity(1);
        for letter in p.letters() {
            let f = match letter {
                Pauli::I => identity(2),
                Pauli::X => pauli_x(),
                Pauli::Y => pauli_y(),
                Pauli::Z => pauli_z(),
            };
            m = crate::qlinalg::kron(&m, &f);
        }
        m
    }

    #[test]
    fn pauli_string_dense_matches_kron() {
        for s in ["X", "Y", "Z", "IZ", "XY", "YXZ", "ZZYX", "IYIY"] {
            let p: PauliString = s.parse().unwrap();
            assert!(max_abs_diff(&p.to_dense(), &kron_oracle(&p)) < 1e-15, "{s}");
        }
        assert_eq!("IXZY".parse::<PauliString>().unwrap().weight(), 3);
        assert!("IXA".parse::<PauliString>().is_err());
    }

    #[test]
    fn sum_merges_and_expands() {
        let sum = PauliSum::new(
            2,
            vec![
                (0.5, "IZ".parse().unwrap()),
                (0.25, "IZ".parse().unwrap()),
                (-1.0, "XY".parse().unwrap()),
            ],
        )
        .unwrap();
        assert_eq!(sum.len(), 2);
        assert_eq!(sum.coefficient(&"IZ".parse().unwrap()), 0.75);
        let dense = kron_oracle(&"IZ".parse().unwrap()) * Complex64::from(0.75)
            - kron_oracle(&"XY".parse().unwrap());
        assert!(max_abs_diff(&sum.to_dense(), &dense) < 1e-15);
    }

    #[test]
    fn dense_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for n in 1..=6 {
            let dim = 1 << n;
            let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let h = &a + a.adjoint();
            let sum = PauliSum::from_dense(&h, 0.0).unwrap();
            assert!(max_abs_diff(&sum.to_dense(), &h) < 1e-12, "n={n}");
            // Parseval over the Pauli basis
            let parseval = h.norm_squared() / dim as f64;
            assert!((sum.locality_profile().total - parseval).abs() < 1e-10 * parseval.max(1.0));
        }
    }

    #[test]
    fn warmup_hamiltonian_structure() {
        let one = warmup_hamiltonian(1);
        assert_eq!(one.terms(), &[(0.5, "I".parse().unwrap()), (-0.5, "Z".parse().unwrap())]);
        let h = warmup_hamiltonian(3);
        assert_eq!(h.len(), 8);
        let (vals, _) = hermitian_eigen(&h.to_dense()).unwrap();
        assert!(vals[0].abs() < 1e-12);
        assert!(vals[1..].iter().all(|v| (v - 1.0).abs() < 1e-12));
        let zeros = DensityMatrix::basis_state(3, 0);
        let ones = DensityMatrix::basis_state(3, 7);
        assert!(h.expectation(&zeros).unwrap().abs() < 1e-12);
        assert!((h.expectation(&ones).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_matches_dense_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let rho = random_state(&mut rng, 4);
        let dim = 16;
        let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let h = &a + a.adjoint();
        let sum = PauliSum::from_dense(&h, 0.0).unwrap();
        let e1 = expectation(&sum, &rho).unwrap();
        let e2 = expectation(&h, &rho).unwrap();
        assert!((e1 - e2).abs() < 1e-10);
        assert!((expectation(&identity(16), &rho).unwrap() - 1.0).abs() < 1e-12);
        assert!(expectation(&identity(8), &rho).is_err());
    }

    #[test]
    fn warmup_expectation_on_initial_state() {
        let rho = crate::circuit::initial_state(1);
        let got = warmup_hamiltonian(1).expectation(&rho).unwrap();
        let expected = 1.0 - (std::f64::consts::PI / 8.0).cos().powi(2);
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn parser_rules() {
        let doc = parse_pauli_text("# n=2\n# free comment\n\n0.5 IZ\n0.25 IZ\n-1e-1 XX\n").unwrap();
        assert_eq!(doc.sum.len(), 2);
        assert_eq!(doc.sum.coefficient(&"IZ".parse().unwrap()), 0.75);
        assert_eq!(doc.meta("n"), Some("2"));

        let err = parse_pauli_text("0.5 IZ\nabc IZ\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_pauli_text("0.5 IZ\n0.5 IZZ\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_pauli_text("0.5+0.1j IZ\n").unwrap_err();
        assert!(err.to_string().contains("non-real"), "{err}");
        assert!(parse_pauli_text("0.5+0j IZ\n").is_ok());
        assert!(parse_pauli_text("0.5 IZ extra\n").is_err());
        assert!(parse_pauli_text("# n=3\n0.5 IZ\n").is_err());
        assert!(parse_pauli_text("# only header\n").is_err());
    }

    #[test]
    fn h2_fixture_energies() {
        let doc = parse_pauli_text(H2_STO3G_FIXTURE).unwrap();
        assert_eq!(doc.sum.n(), 4);
        let reference = doc.meta_f64("reference_ground_energy_hartree").unwrap();
        assert!((doc.sum.ground_energy().unwrap() - reference).abs() < 1e-8);
        let bits = doc.meta("hf_bits").unwrap();
        let hf = DensityMatrix::basis_state(4, bits_to_index(bits).unwrap());
        let hf_energy = doc.meta_f64("hf_energy_hartree").unwrap();
        assert!((doc.sum.expectation(&hf).unwrap() - hf_energy).abs() < 1e-8);
    }

    #[test]
    fn random_hamiltonian_spectrum() {
        for seed in 0..20 {
            let rh = random_hamiltonian(&RandomHamiltonianSpec::new(4, seed)).unwrap();
            assert!(hermiticity_defect(&rh.matrix) < 1e-12);
            let (vals, _) = hermitian_eigen(&rh.matrix).unwrap();
            assert!((vals[0] + 1.1).abs() < 1e-9);
            assert!((vals[15] - 1.1).abs() < 1e-9);
            assert!(vals[1..15].iter().all(|v| v.abs() < 1.0));
            let gram = rh.eigenvectors.adjoint() * &rh.eigenvectors;
            assert!(max_abs_diff(&gram, &identity(16)) < 1e-10);
            let hv = &rh.matrix * &rh.ground_state;
            assert!((hv - rh.ground_state.clone() * Complex64::from(-1.1)).norm() < 1e-9);
        }
    }

    #[test]
    fn ground_state_stays_near_anchor() {
        let mut anchors = [0usize; 2];
        for seed in 0..1000 {
            let rh = random_hamiltonian(&RandomHamiltonianSpec::new(4, seed)).unwrap();
            let idx = rh.ground_anchor.basis_index(4);
            assert!(rh.ground_state[idx].norm_sqr() >= 0.9, "seed {seed}");
            anchors[(idx != 0) as usize] += 1;
        }
        // fair coin: 500 ± 3·sqrt(250)
        assert!((anchors[0] as f64 - 500.0).abs() < 48.0, "{anchors:?}");
    }

    #[test]
    fn interior_levels_uniform_ks() {
        let mut samples = Vec::new();
        for seed in 0..200 {
            let rh = random_hamiltonian(&RandomHamiltonianSpec::new(4, 10_000 + seed)).unwrap();
            let (vals, _) = hermitian_eigen(&rh.matrix).unwrap();
            samples.extend_from_slice(&vals[1..15]);
        }
        samples.sort_by(f64::total_cmp);
        let m = samples.len() as f64;
        let d = samples
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let cdf = (x + 1.0) / 2.0;
                (cdf - i as f64 / m).abs().max(((i + 1) as f64 / m - cdf).abs())
            })
            .fold(0.0, f64::max);
        let critical = 1.628 / m.sqrt();
        assert!(d < critical, "KS statistic {d} exceeds {critical}");
    }

    #[test]
    fn random_hamiltonian_is_seed_deterministic() {
        let a = random_hamiltonian(&RandomHamiltonianSpec::new(3, 9)).unwrap();
        let b = random_hamiltonian(&RandomHamiltonianSpec::new(3, 9)).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert!(random_hamiltonian(&RandomHamiltonianSpec::new(1, 9)).is_err());
    }

    #[test]
    fn effective_hamiltonian_localizes() {
        let n = 4;
        let h = warmup_hamiltonian(n).to_dense();
        let liou = LiouvillianSpec::uniform(n, std::f64::consts::PI, 0.0);
        let at = |dt: f64| {
            let ch = ChannelSpec::new(liou.clone(), dt).unwrap().compile().unwrap();
            effective_hamiltonian(&h, &ch).unwrap()
        };
        let zero = at(0.0);
        let base = warmup_hamiltonian(n).locality_profile();
        for (a, b) in zero.profile.weights.iter().zip(&base.weights) {
            assert!((a - b).abs() < 1e-12);
        }
        let late = at(10.0);
        assert!(hermiticity_defect(&late.matrix) < 1e-12);
        assert!(late.profile.non_identity_fraction_up_to(1) > 0.99);

        let sweep: Vec<LocalityProfile> = [0.0, 0.5, 1.0, 2.0].iter().map(|&dt| at(dt).profile).collect();
        for k in 2..=n {
            for w in sweep.windows(2) {
                assert!(w[1].relative(k) < w[0].relative(k), "k={k}");
            }
        }
    }

    #[test]
    fn hf_dissipators_target_hf_state() {
        for bits in ["0000", "1100", "1010"] {
            let liou = hf_dissipators(bits).unwrap();
            let idx = bits_to_index(bits).unwrap();
            let gen = liou.full_generator().unwrap();
            let sa = analyze_generator(&gen).unwrap();
            assert_eq!(sa.zero_modes, 1);
            assert!((sa.steady_state.matrix()[(idx, idx)] - ONE).norm() < 1e-9);

            let mut rng = ChaCha8Rng::seed_from_u64(53);
            let rho = random_state(&mut rng, 4);
            let out = ChannelSpec::new(liou, 50.0).unwrap().compile().unwrap().apply(&rho);
            let mut ket = ComplexVector::zeros(16);
            ket[idx] = ONE;
            assert!(out.fidelity_with_pure(&ket) >= 1.0 - 1e-9);
        }
        assert!(hf_dissipators("01a").is_err());
    }

    #[test]
    fn embedded_single_qubit_terms_have_weight_one_profile() {
        let z1 = embed_operator(&pauli_z(), &[1], 3).unwrap();
        let profile = PauliSum::from_dense(&z1, 0.0).unwrap().locality_profile();
        assert_eq!(profile.weights, vec![0.0, 1.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn pauli_product_is_hermitian_unitary(s in "[IXYZ]{1,5}") {
            let p: PauliString = s.parse().unwrap();
            let m = p.to_dense();
            prop_assert!(hermiticity_defect(&m) < 1e-15);
            prop_assert!(max_abs_diff(&(&m * &m), &identity(m.nrows())) < 1e-15);
        }

        #[test]
        fn expectation_via_masks_matches_dense(s in "[IXYZ]{3}", seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_state(&mut rng, 3);
            let p: PauliString = s.parse().unwrap();
            let sum = PauliSum::new(3, vec![(1.3, p.clone())]).unwrap();
            let dense = crate::qlinalg::trace_of_product(&p.to_dense(), rho.matrix()).re * 1.3;
            prop_assert!((sum.expectation(&rho).unwrap() - dense).abs() < 1e-12);
        }
    }
}
