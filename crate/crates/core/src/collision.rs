//! Collision-model realization of the dissipative channels.
//!
//! Each step couples every dissipated qubit to a fresh `|0⟩` ancilla through
//! `V(τ) = exp(−i√(γτ)(d ⊗ σ⁺ + d† ⊗ σ⁻))` and traces the ancilla out. The
//! ancilla is the second tensor factor and `σ⁺ = |1⟩⟨0|`. `M` steps of length
//! `τ = Δt/M` approximate `exp(LΔt)` to first order in `τ`.

use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lindblad::{ChannelSpec, LiouvillianSpec, QuantumChannel};
use crate::qlinalg::{
    self, apply_local, apply_local_super, ensure_square, kron, matrix_exponential, qubits_for_dim,
    trace_norm, ComplexMatrix, DensityMatrix, Superoperator, I, ONE, ZERO,
};

/// Largest register for which ε is probed over operators rather than one state.
pub const MAX_PROBED_QUBITS: usize = 3;

fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO])
}

/// `exp(−i√τ(d ⊗ σ⁺ + d† ⊗ σ⁻))` on system ⊗ ancilla.
pub fn step_unitary(d: &ComplexMatrix, tau: f64) -> Result<ComplexMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("step time must be non-negative, got {tau}")));
    }
    if d.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: d.nrows(),
        });
    }
    let sp = sigma_plus();
    let g = kron(d, &sp) + kron(&d.adjoint(), &sp.adjoint());
    matrix_exponential(&g.scale(tau.sqrt()).map(|z| -I * z))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionConfig {
    pub liouvillian: LiouvillianSpec,
    pub dt: f64,
    pub steps: usize,
}

impl CollisionConfig {
    pub fn new(liouvillian: LiouvillianSpec, dt: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument("collision step count must be at least 1".into()));
        }
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("total time must be finite and non-negative, got {dt}")));
        }
        if liouvillian.hamiltonian_part().is_some() {
            return Err(Error::InvalidArgument(
                "the collision model realizes dissipators only; drop the Hamiltonian part".into(),
            ));
        }
        Ok(Self {
            liouvillian,
            dt,
            steps,
        })
    }

    pub fn n(&self) -> usize {
        self.liouvillian.n()
    }

    pub fn tau(&self) -> f64 {
        self.dt / self.steps as f64
    }

    fn site_unitaries(&self) -> Result<Vec<(usize, ComplexMatrix)>> {
        let tau = self.tau();
        self.liouvillian
            .dissipators()
            .iter()
            .map(|d| Ok((d.site, step_unitary(&d.jump_operator(), d.gamma * tau)?)))
            .collect()
    }
}

fn partial_trace_last(x: &ComplexMatrix) -> ComplexMatrix {
    let dim = x.nrows() / 2;
    ComplexMatrix::from_fn(dim, dim, |i, j| x[(2 * i, 2 * j)] + x[(2 * i + 1, 2 * j + 1)])
}

fn dilate_and_trace(x: &ComplexMatrix, site: usize, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = qubits_for_dim(ensure_square(x)?)?;
    let mut fresh = ComplexMatrix::zeros(2, 2);
    fresh[(0, 0)] = ONE;
    let joint = apply_local(&kron(x, &fresh), v, &[site, n])?;
    Ok(partial_trace_last(&joint))
}

/// One collision step on an arbitrary operator: every dissipated site in turn
/// meets a fresh ancilla, which is then traced out.
pub fn collision_step_matrix(x: &ComplexMatrix, config: &CollisionConfig) -> Result<ComplexMatrix> {
    if x.nrows() != 1 << config.n() {
        return Err(Error::DimensionMismatch {
            expected: 1 << config.n(),
            actual: x.nrows(),
        });
    }
    let mut out = x.clone();
    for (site, v) in config.site_unitaries()? {
        out = dilate_and_trace(&out, site, &v)?;
    }
    Ok(out)
}

pub fn collision_step(rho: &DensityMatrix, config: &CollisionConfig) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_matrix_unchecked(collision_step_matrix(rho.matrix(), config)?))
}

/// `4×4` superoperator of one single-qubit collision, read off the dilation.
pub fn step_superoperator(v: &ComplexMatrix) -> Result<Superoperator> {
    let mut out = Superoperator::zeros(4, 4);
    for j in 0..2 {
        for i in 0..2 {
            let mut e = ComplexMatrix::zeros(2, 2);
            e[(i, j)] = ONE;
            out.set_column(i + 2 * j, &qlinalg::vectorize(&dilate_and_trace(&e, 0, v)?));
        }
    }
    Ok(out)
}

/// Per-site superoperators of the full `M`-step map.
fn composed_factors(config: &CollisionConfig) -> Result<Vec<(usize, Superoperator)>> {
    config
        .site_unitaries()?
        .into_iter()
        .map(|(site, v)| Ok((site, step_superoperator(&v)?.pow(config.steps as u32))))
        .collect()
}

fn apply_factors(x: &ComplexMatrix, factors: &[(usize, Superoperator)]) -> Result<ComplexMatrix> {
    let mut out = x.clone();
    for (site, sup) in factors {
        out = apply_local_super(&out, sup, &[*site])?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonKind {
    /// Induced trace norm, maximized over all rank-one inputs.
    Exact,
    /// Maximum over a fixed probe set; a certified lower bound.
    LowerBound,
    /// Trace distance on the supplied state only.
    StateProxy,
}

impl EpsilonKind {
    pub fn label(self) -> &'static str {
        match self {
            EpsilonKind::Exact => "exact",
            EpsilonKind::LowerBound => "lower_bound",
            EpsilonKind::StateProxy => "state_proxy",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CollisionOutcome {
    pub state: DensityMatrix,
    pub epsilon: f64,
    pub kind: EpsilonKind,
    /// `‖ρ_collision − ρ_exact‖₁` on the supplied state.
    pub state_error: f64,
}

/// `M` collision steps applied to `ρ`, with the error against `exp(LΔt)`.
pub fn collision_channel(rho: &DensityMatrix, config: &CollisionConfig) -> Result<CollisionOutcome> {
    let n = config.n();
    if rho.n() != n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            actual: rho.dim(),
        });
    }
    let factors = composed_factors(config)?;
    let state = apply_factors(rho.matrix(), &factors)?;
    let exact_state;
    let (epsilon, kind);
    if config.dt == 0.0 {
        exact_state = rho.matrix().clone();
        epsilon = 0.0;
        kind = if n == 1 {
            EpsilonKind::Exact
        } else if n <= MAX_PROBED_QUBITS {
            EpsilonKind::LowerBound
        } else {
            EpsilonKind::StateProxy
        };
    } else {
        let exact = ChannelSpec::new(config.liouvillian.clone(), config.dt)?.compile()?;
        exact_state = exact.apply_matrix(rho.matrix());
        if n == 1 {
            let diff = exact.superoperator() - apply_factors_super(&factors);
            epsilon = induced_trace_norm_qubit(&diff);
            kind = EpsilonKind::Exact;
        } else if n <= MAX_PROBED_QUBITS {
            let mut worst: f64 = 0.0;
            for probe in probe_set(1 << n) {
                let d = exact.apply_matrix(&probe) - apply_factors(&probe, &factors)?;
                worst = worst.max(trace_norm(&d));
            }
            epsilon = worst;
            kind = EpsilonKind::LowerBound;
        } else {
            epsilon = trace_norm(&(&state - &exact_state));
            kind = EpsilonKind::StateProxy;
        }
    }
    let state_error = trace_norm(&(&state - &exact_state));
    Ok(CollisionOutcome {
        state: DensityMatrix::from_matrix_unchecked(state),
        epsilon,
        kind,
        state_error,
    })
}

fn apply_factors_super(factors: &[(usize, Superoperator)]) -> Superoperator {
    // single qubit: at most one factor
    factors
        .iter()
        .fold(Superoperator::identity(4, 4), |acc, (_, s)| s * acc)
}

/// Trace-norm-one probes: basis dyads, their Hermitian parts and pure superpositions.
pub fn probe_set(dim: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::new();
    let half = Complex64::new(0.5, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            let mut e = ComplexMatrix::zeros(dim, dim);
            e[(i, j)] = ONE;
            out.push(e);
            if i < j {
                let mut sym = ComplexMatrix::zeros(dim, dim);
                sym[(i, j)] = half;
                sym[(j, i)] = half;
                out.push(sym);
                let mut anti = ComplexMatrix::zeros(dim, dim);
                anti[(i, j)] = -I * half;
                anti[(j, i)] = I * half;
                out.push(anti);
                for phase in [ONE, I] {
                    let mut pure = ComplexMatrix::zeros(dim, dim);
                    pure[(i, i)] = half;
                    pure[(j, j)] = half;
                    pure[(i, j)] = half * phase.conj();
                    pure[(j, i)] = half * phase;
                    out.push(pure);
                }
            }
        }
    }
    out
}

fn unit_qubit(a: f64, b: f64) -> [Complex64; 2] {
    [Complex64::new(a.cos(), 0.0), Complex64::from_polar(a.sin(), b)]
}

fn rank_one_response(diff: &Superoperator, p: &[f64; 4]) -> f64 {
    let u = unit_qubit(p[0], p[1]);
    let v = unit_qubit(p[2], p[3]);
    let x = ComplexMatrix::from_fn(2, 2, |i, j| u[i] * v[j].conj());
    trace_norm(&qlinalg::devectorize(&(diff * qlinalg::vectorize(&x))))
}

/// `max ‖D(X)‖₁` over `‖X‖₁ = 1` for a single-qubit superoperator `D`.
///
/// The unit ball's extreme points are the dyads `|u⟩⟨v|`, so a coarse grid
/// over both Bloch-sphere angle pairs followed by a compass search suffices.
pub fn induced_trace_norm_qubit(diff: &Superoperator) -> f64 {
    use std::f64::consts::PI;
    const GRID: usize = 12;
    let mut best = [0.0; 4];
    let mut best_val = f64::NEG_INFINITY;
    for ia in 0..=GRID {
        for ib in 0..GRID {
            for ic in 0..=GRID {
                for id in 0..GRID {
                    let p = [
                        ia as f64 * PI / (2.0 * GRID as f64),
                        ib as f64 * 2.0 * PI / GRID as f64,
                        ic as f64 * PI / (2.0 * GRID as f64),
                        id as f64 * 2.0 * PI / GRID as f64,
                    ];
                    let val = rank_one_response(diff, &p);
                    if val > best_val {
                        best_val = val;
                        best = p;
                    }
                }
            }
        }
    }
    let mut step = PI / GRID as f64;
    while step > 1e-10 {
        let mut improved = false;
        for k in 0..4 {
            for sign in [1.0, -1.0] {
                let mut p = best;
                p[k] += sign * step;
                let val = rank_one_response(diff, &p);
                if val > best_val {
                    best_val = val;
                    best = p;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best_val
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceReport {
    pub ancillas: usize,
    pub resets: usize,
    pub interactions: usize,
}

/// Ancillas are reused after every reset, one per dissipated site.
pub fn resource_report(config: &CollisionConfig) -> ResourceReport {
    let sites = config.liouvillian.dissipators().len();
    ResourceReport {
        ancillas: sites,
        resets: config.steps * sites,
        interactions: config.steps * sites,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorScanRow {
    pub steps: usize,
    pub dt: f64,
    pub epsilon: f64,
    pub kind: EpsilonKind,
}

/// ε for every step count in `ladder`, each evaluated on `rho`.
pub fn error_scan(
    liouvillian: &LiouvillianSpec,
    dt: f64,
    ladder: &[usize],
    rho: &DensityMatrix,
) -> Result<Vec<ErrorScanRow>> {
    ladder
        .iter()
        .map(|&m| {
            let cfg = CollisionConfig::new(liouvillian.clone(), dt, m)?;
            let out = collision_channel(rho, &cfg)?;
            Ok(ErrorScanRow {
                steps: m,
                dt,
                epsilon: out.epsilon,
                kind: out.kind,
            })
        })
        .collect()
}

pub fn write_csv(rows: &[ErrorScanRow], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "M,dt,epsilon,epsilon_kind")?;
    for r in rows {
        writeln!(out, "{},{},{:e},{}", r.steps, r.dt, r.epsilon, r.kind.label())?;
    }
    Ok(())
}

/// Least-squares slope of `ln ε` against `ln(1/M)`.
pub fn convergence_order(rows: &[ErrorScanRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (-(r.steps as f64).ln(), r.epsilon.ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
