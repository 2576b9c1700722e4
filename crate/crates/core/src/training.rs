//! Cost, exact gradients and gradient descent for `C = Tr{H E(U ρ U†)}`.
//!
//! Costs are evaluated in the Heisenberg picture: each channel branch is
//! pulled onto the Hamiltonian once, `H_j = E_j†(H)`, so a cost is one
//! circuit sweep and one trace. Parameter-shift gradients reuse a single
//! reverse sweep that un-applies gates from the output state while pulling
//! the observable back through the same gates.

use std::io::{self, Write};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{initial_state, Ansatz, AnsatzSpec, Gate};
use crate::hamiltonian::{
    hf_dissipators, random_hamiltonian, Anchor, PauliDocument, RandomHamiltonianSpec,
};
use crate::error::{Error, Result};
use crate::lindblad::{sigmoid, sigmoid_derivative, Channel, ChannelSpec, LiouvillianSpec, QuantumChannel};
use crate::qlinalg::{ensure_square, hermitian_eigen, trace_of_product, ComplexMatrix, DensityMatrix};
use std::f64::consts::{FRAC_PI_2, PI};

/// The non-unitary layer after the circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    Unitary,
    Fixed(ChannelSpec),
    /// `s(σ) E₁ + (1 − s(σ)) E₂` with trainable `σ`.
    Sigmoid(ChannelSpec, ChannelSpec),
    /// Fixed convex weights.
    Mixture(Vec<(f64, ChannelSpec)>),
}

impl ChannelModel {
    /// Sigmoid mixture of the pumps into `|0…0⟩` and `|1…1⟩`.
    pub fn anchor_pair(n: usize, dt: f64) -> Result<Self> {
        Ok(ChannelModel::Sigmoid(
            ChannelSpec::new(LiouvillianSpec::uniform(n, PI, 0.0), dt)?,
            ChannelSpec::new(LiouvillianSpec::uniform(n, 0.0, 0.0), dt)?,
        ))
    }

    pub fn has_sigma(&self) -> bool {
        matches!(self, ChannelModel::Sigmoid(..))
    }

    /// Interaction time of the branches, when they share one.
    pub fn dt(&self) -> Option<f64> {
        match self {
            ChannelModel::Unitary => None,
            ChannelModel::Fixed(c) => Some(c.dt),
            ChannelModel::Sigmoid(a, _) => Some(a.dt),
            ChannelModel::Mixture(b) => b.first().map(|(_, c)| c.dt),
        }
    }

    fn branches(&self) -> Vec<&ChannelSpec> {
        match self {
            ChannelModel::Unitary => Vec::new(),
            ChannelModel::Fixed(c) => vec![c],
            ChannelModel::Sigmoid(a, b) => vec![a, b],
            ChannelModel::Mixture(b) => b.iter().map(|(_, c)| c).collect(),
        }
    }
}

#[derive(Debug, Clone)]
struct Branch {
    channel: Channel,
    /// `E_j†(H)`.
    observable: ComplexMatrix,
}

/// A compiled training problem.
#[derive(Debug, Clone)]
pub struct Model {
    ansatz: Ansatz,
    gates: Vec<Gate>,
    hamiltonian: ComplexMatrix,
    channel: ChannelModel,
    branches: Vec<Branch>,
    initial: DensityMatrix,
    spectral_bound: f64,
}

/// One evaluation of the cost and, optionally, its gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cost: f64,
    /// `Tr{H_j ρ}` per channel branch (empty when the channel is off).
    pub branch_costs: Vec<f64>,
    pub grad_theta: Vec<f64>,
    pub grad_sigma: Option<f64>,
}

impl Model {
    pub fn new(
        ansatz: Ansatz,
        hamiltonian: ComplexMatrix,
        channel: ChannelModel,
        initial: DensityMatrix,
    ) -> Result<Self> {
        let n = ansatz.n();
        if ensure_square(&hamiltonian)? != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                actual: hamiltonian.nrows(),
            });
        }
        if initial.n() != n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                actual: initial.dim(),
            });
        }
        if let ChannelModel::Mixture(b) = &channel {
            let sum: f64 = b.iter().map(|(w, _)| w).sum();
            if b.is_empty() || b.iter().any(|(w, _)| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidChannel(
                    "mixture weights must be non-negative and sum to 1".into(),
                ));
            }
        }
        let mut branches = Vec::new();
        for spec in channel.branches() {
            if spec.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: spec.n(),
                });
            }
            let compiled = spec.compile()?;
            let observable = compiled.apply_adjoint_matrix(&hamiltonian);
            let observable = (&observable + observable.adjoint()).unscale(2.0);
            branches.push(Branch {
                channel: compiled,
                observable,
            });
        }
        let (eigs, _) = hermitian_eigen(&hamiltonian)?;
        let spectral_bound = eigs[0].abs().max(eigs[eigs.len() - 1].abs());
        Ok(Self {
            gates: ansatz.gates(),
            ansatz,
            hamiltonian,
            channel,
            branches,
            initial,
            spectral_bound,
        })
    }

    pub fn n(&self) -> usize {
        self.ansatz.n()
    }

    pub fn ansatz(&self) -> &Ansatz {
        &self.ansatz
    }

    pub fn num_params(&self) -> usize {
        self.ansatz.num_params()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.initial
    }

    /// Largest `|eigenvalue|` of `H`.
    pub fn spectral_bound(&self) -> f64 {
        self.spectral_bound
    }

    /// The same problem with the channel removed.
    pub fn unitary_only(&self) -> Self {
        Self {
            channel: ChannelModel::Unitary,
            branches: Vec::new(),
            ..self.clone()
        }
    }

    fn check_sigma(&self, sigma: Option<f64>) -> Result<()> {
        match (self.channel.has_sigma(), sigma) {
            (true, None) => Err(Error::InvalidArgument("model needs a sigma value".into())),
            (false, Some(_)) => Err(Error::InvalidArgument("model has no sigma parameter".into())),
            _ => Ok(()),
        }
    }

    /// Branch weights for the given `σ`.
    pub fn weights(&self, sigma: Option<f64>) -> Vec<f64> {
        match &self.channel {
            ChannelModel::Unitary => Vec::new(),
            ChannelModel::Fixed(_) => vec![1.0],
            ChannelModel::Sigmoid(..) => {
                let s = sigmoid(sigma.unwrap_or(0.0));
                vec![s, 1.0 - s]
            }
            ChannelModel::Mixture(b) => b.iter().map(|(w, _)| *w).collect(),
        }
    }

    /// Heisenberg-picture observable `Σ_j β_j E_j†(H)`, or `H` with the channel off.
    pub fn effective_observable(&self, sigma: Option<f64>, channel_on: bool) -> ComplexMatrix {
        if !channel_on || self.branches.is_empty() {
            return self.hamiltonian.clone();
        }
        let mut out = ComplexMatrix::zeros(self.hamiltonian.nrows(), self.hamiltonian.ncols());
        for (w, b) in self.weights(sigma).iter().zip(&self.branches) {
            out += b.observable.scale(*w);
        }
        out
    }

    /// `U(θ) ρ_in U(θ)†`, with `shift` added to parameter `shifted` if given.
    pub fn circuit_state(&self, theta: &[f64], shifted: Option<(usize, f64)>) -> Result<ComplexMatrix> {
        self.ansatz.check_params(theta)?;
        Ok(run_gates(&self.gates, theta, self.initial.matrix(), shifted))
    }

    /// Schrödinger-picture output state `E(U ρ_in U†)`.
    pub fn output_state(&self, theta: &[f64], sigma: Option<f64>) -> Result<DensityMatrix> {
        self.check_sigma(sigma)?;
        let x = self.circuit_state(theta, None)?;
        if self.branches.is_empty() {
            return Ok(DensityMatrix::from_matrix_unchecked(x));
        }
        let mut out = ComplexMatrix::zeros(x.nrows(), x.ncols());
        for (w, b) in self.weights(sigma).iter().zip(&self.branches) {
            out += b.channel.apply_matrix(&x).scale(*w);
        }
        Ok(DensityMatrix::from_matrix_unchecked(out))
    }

    pub fn cost(&self, theta: &[f64], sigma: Option<f64>) -> Result<f64> {
        Ok(self.evaluate(theta, sigma, false)?.cost)
    }

    /// Cost of the circuit alone, `Tr{H U ρ_in U†}`.
    pub fn energy(&self, theta: &[f64]) -> Result<f64> {
        Ok(trace_of_product(&self.hamiltonian, &self.circuit_state(theta, None)?).re)
    }

    pub fn grad_theta(&self, theta: &[f64], sigma: Option<f64>) -> Result<Vec<f64>> {
        Ok(self.evaluate(theta, sigma, true)?.grad_theta)
    }

    /// `∂C/∂σ = s′(σ)(C₁ − C₂)`.
    pub fn grad_sigma(&self, theta: &[f64], sigma: f64) -> Result<f64> {
        if !self.channel.has_sigma() {
            return Err(Error::InvalidArgument("model has no sigma parameter".into()));
        }
        Ok(self
            .evaluate(theta, Some(sigma), false)?
            .grad_sigma
            .expect("sigmoid model"))
    }

    pub fn evaluate(&self, theta: &[f64], sigma: Option<f64>, with_grad: bool) -> Result<Evaluation> {
        self.evaluate_phase(theta, sigma, with_grad, true)
    }

    /// With `channel_on = false` the channel is dropped (`Δt = 0`).
    pub fn evaluate_phase(
        &self,
        theta: &[f64],
        sigma: Option<f64>,
        with_grad: bool,
        channel_on: bool,
    ) -> Result<Evaluation> {
        self.check_sigma(sigma)?;
        let mut rho = self.circuit_state(theta, None)?;
        let active = channel_on && !self.branches.is_empty();
        let observable = self.effective_observable(sigma, active);
        let cost = trace_of_product(&observable, &rho).re;
        let branch_costs: Vec<f64> = if active {
            self.branches
                .iter()
                .map(|b| trace_of_product(&b.observable, &rho).re)
                .collect()
        } else {
            Vec::new()
        };
        let grad_sigma = match (&self.channel, active) {
            (ChannelModel::Sigmoid(..), true) => {
                Some(sigmoid_derivative(sigma.expect("checked")) * (branch_costs[0] - branch_costs[1]))
            }
            _ => None,
        };

        let mut grad_theta = Vec::new();
        if with_grad {
            grad_theta = vec![0.0; theta.len()];
            let mut obs = observable;
            for g in self.gates.iter().rev() {
                // ρ_{k-1} = G_k† ρ_k G_k
                g.apply_adjoint(&mut rho, theta);
                if let Some(p) = g.param() {
                    let mut plus = rho.clone();
                    g.apply(&mut plus, theta, FRAC_PI_2);
                    let mut minus = rho.clone();
                    g.apply(&mut minus, theta, -FRAC_PI_2);
                    grad_theta[p] += 0.5
                        * (trace_of_product(&obs, &plus).re - trace_of_product(&obs, &minus).re);
                }
                g.apply_adjoint(&mut obs, theta);
            }
        }
        Ok(Evaluation {
            cost,
            branch_costs,
            grad_theta,
            grad_sigma,
        })
    }

    /// Circuit outputs with parameter `param` shifted by `±π/2`.
    pub fn shifted_states(&self, theta: &[f64], param: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
        if param >= self.num_params() {
            return Err(Error::InvalidArgument(format!(
                "parameter index {param} out of range for {} parameters",
                self.num_params()
            )));
        }
        Ok((
            self.circuit_state(theta, Some((param, FRAC_PI_2)))?,
            self.circuit_state(theta, Some((param, -FRAC_PI_2)))?,
        ))
    }
}

fn run_gates(gates: &[Gate], theta: &[f64], initial: &ComplexMatrix, shifted: Option<(usize, f64)>) -> ComplexMatrix {
    let mut x = initial.clone();
    for g in gates {
        let shift = match (shifted, g.param()) {
            (Some((p, s)), Some(q)) if p == q => s,
            _ => 0.0,
        };
        g.apply(&mut x, theta, shift);
    }
    x
}

/// `U(θ) X U(θ)†`, with `shift` added to one parameter if given.
pub fn circuit_state(
    ansatz: &Ansatz,
    theta: &[f64],
    initial: &ComplexMatrix,
    shifted: Option<(usize, f64)>,
) -> Result<ComplexMatrix> {
    ansatz.check_params(theta)?;
    if initial.nrows() != 1 << ansatz.n() {
        return Err(Error::DimensionMismatch {
            expected: 1 << ansatz.n(),
            actual: initial.nrows(),
        });
    }
    Ok(run_gates(&ansatz.gates(), theta, initial, shifted))
}

/// Central finite-difference gradient, for cross-checks.
pub fn finite_difference_theta(model: &Model, theta: &[f64], sigma: Option<f64>, h: f64) -> Result<Vec<f64>> {
    (0..theta.len())
        .map(|k| {
            let mut p = theta.to_vec();
            let mut m = theta.to_vec();
            p[k] += h;
            m[k] -= h;
            Ok((model.cost(&p, sigma)? - model.cost(&m, sigma)?) / (2.0 * h))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub eta: f64,
    pub iterations: usize,
    /// Iteration from which the channel is dropped.
    pub hybrid_switch: Option<usize>,
    pub seed: u64,
    /// Learning rate once the channel is dropped; defaults to `eta`.
    pub eta_after_switch: Option<f64>,
}

impl TrainConfig {
    pub fn new(eta: f64, iterations: usize, seed: u64) -> Self {
        Self {
            eta,
            iterations,
            hybrid_switch: None,
            seed,
            eta_after_switch: None,
        }
    }

    pub fn with_switch(mut self, switch: usize) -> Self {
        self.hybrid_switch = Some(switch);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidArgument(format!("learning rate {} must be non-negative", self.eta)));
        }
        if let Some(e) = self.eta_after_switch {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(Error::InvalidArgument(format!("learning rate {e} must be non-negative")));
            }
        }
        if self.iterations < 1 {
            return Err(Error::InvalidArgument("need at least one iteration".into()));
        }
        if let Some(s) = self.hybrid_switch {
            if s > self.iterations {
                return Err(Error::InvalidArgument(format!(
                    "switch {s} exceeds iteration count {}",
                    self.iterations
                )));
            }
        }
        Ok(())
    }

    /// Whether iteration `t` runs with the channel.
    pub fn dissipative_at(&self, t: usize) -> bool {
        self.hybrid_switch.is_none_or(|s| t < s)
    }
}

/// Seeded initial parameters: `θ ~ U[0, 2π)`, then `σ ~ U[−5, 5)` if needed.
pub fn initial_parameters(num_params: usize, with_sigma: bool, seed: u64) -> (Vec<f64>, Option<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = (0..num_params).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let sigma = with_sigma.then(|| rng.random_range(-5.0..5.0));
    (theta, sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Cost before each update plus the final cost (`iterations + 1` entries).
    pub costs: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma: Option<f64>,
    /// `Tr{H U ρ_in U†}` at the final parameters.
    pub final_energy: f64,
    pub seed: u64,
    pub eta: f64,
    pub dt: Option<f64>,
    pub switch: Option<usize>,
    pub wall_time_secs: f64,
}

impl TrainTrace {
    pub fn final_cost(&self) -> f64 {
        *self.costs.last().expect("non-empty trace")
    }

    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        let dt = self.dt.map_or("none".to_string(), |d| d.to_string());
        let switch = self.switch.map_or("none".to_string(), |s| s.to_string());
        writeln!(out, "# seed={}, eta={}, dt={dt}, switch={switch}", self.seed, self.eta)?;
        writeln!(out, "iter,cost")?;
        for (i, c) in self.costs.iter().enumerate() {
            writeln!(out, "{i},{c}")?;
        }
        Ok(())
    }
}

pub fn gradient_descent(model: &Model, config: &TrainConfig) -> Result<TrainTrace> {
    let (theta, sigma) = initial_parameters(model.num_params(), model.channel().has_sigma(), config.seed);
    gradient_descent_from(model, config, theta, sigma)
}

/// Plain gradient descent from explicit starting parameters.
pub fn gradient_descent_from(
    model: &Model,
    config: &TrainConfig,
    mut theta: Vec<f64>,
    mut sigma: Option<f64>,
) -> Result<TrainTrace> {
    config.validate()?;
    model.ansatz().check_params(&theta)?;
    model.check_sigma(sigma)?;
    let start = Instant::now();
    let limit = 10.0 * model.spectral_bound().max(f64::MIN_POSITIVE);
    let guard = |t: usize, c: f64| -> Result<()> {
        if !c.is_finite() || c.abs() > limit {
            return Err(Error::NumericalAbort {
                iteration: t,
                message: format!(
                    "cost {c} left the bound ±{limit:.3e} (seed {}, eta {})",
                    config.seed, config.eta
                ),
            });
        }
        Ok(())
    };
    let mut costs = Vec::with_capacity(config.iterations + 1);
    for t in 0..config.iterations {
        let on = config.dissipative_at(t);
        let eval = model.evaluate_phase(&theta, sigma, true, on)?;
        guard(t, eval.cost)?;
        costs.push(eval.cost);
        let eta = if on {
            config.eta
        } else {
            config.eta_after_switch.unwrap_or(config.eta)
        };
        for (th, g) in theta.iter_mut().zip(&eval.grad_theta) {
            *th -= eta * g;
        }
        if let (Some(s), Some(g)) = (sigma.as_mut(), eval.grad_sigma) {
            *s -= eta * g;
        }
    }
    let t = config.iterations;
    let final_cost = model
        .evaluate_phase(&theta, sigma, false, config.dissipative_at(t))?
        .cost;
    guard(t, final_cost)?;
    costs.push(final_cost);
    Ok(TrainTrace {
        costs,
        final_energy: model.energy(&theta)?,
        theta,
        sigma,
        seed: config.seed,
        eta: config.eta,
        dt: model.channel().dt(),
        switch: config.hybrid_switch,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// A random anchored training problem with the sigmoid anchor-pair channel.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub model: Model,
    pub ground_energy: f64,
    pub ground_anchor: Anchor,
}

/// Ansatz axes and Hamiltonian both come from `seed`; training seeds only
/// choose the starting parameters.
pub fn random_instance(n: usize, depth: usize, dt: f64, seed: u64) -> Result<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = AnsatzSpec::random(n, depth, &mut rng)?;
    let h = random_hamiltonian(&RandomHamiltonianSpec::new(n, seed))?;
    let model = Model::new(
        Ansatz::Layered(spec),
        h.matrix,
        ChannelModel::anchor_pair(n, dt)?,
        initial_state(n),
    )?;
    Ok(RandomInstance {
        model,
        ground_energy: h.ground_energy,
        ground_anchor: h.ground_anchor,
    })
}

/// Molecular problem from a Pauli document carrying an `hf_bits` entry; the
/// channel pumps every qubit into its Hartree-Fock bit.
pub fn molecular_instance(doc: &PauliDocument, depth: usize, dt: f64, seed: u64) -> Result<Model> {
    let bits = doc
        .meta("hf_bits")
        .ok_or_else(|| Error::InvalidArgument("Pauli file has no hf_bits entry".into()))?;
    let n = doc.sum.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = AnsatzSpec::random(n, depth, &mut rng)?;
    Model::new(
        Ansatz::Layered(spec),
        doc.sum.to_dense(),
        ChannelModel::Fixed(ChannelSpec::new(hf_dissipators(bits)?, dt)?),
        initial_state(n),
    )
}
