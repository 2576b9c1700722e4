//! Monte-Carlo estimates of gradient variances over random problem instances.
//!
//! Each sample draws ansatz axes, a Hamiltonian (for the random source),
//! angles and `σ` from its own seed `base ^ index`, so results do not depend
//! on scheduling. The shifted circuit states of a sample are computed once
//! and reused for every interaction time on the grid.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{initial_state, Ansatz, AnsatzSpec};
use crate::error::{Error, Result};
use crate::hamiltonian::{random_hamiltonian_with, warmup_hamiltonian, RandomHamiltonianSpec};
use crate::lindblad::{sigmoid, sigmoid_derivative, Channel, ChannelSpec, LiouvillianSpec, QuantumChannel};
use crate::qlinalg::{trace_of_product, ComplexMatrix, DensityMatrix};
use crate::training::{circuit_state, ChannelModel, Model};
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// First rotation angle of the first layer.
    Theta11,
    Sigma,
}

impl Target {
    pub fn label(self) -> &'static str {
        match self {
            Target::Theta11 => "theta11",
            Target::Sigma => "sigma",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HamiltonianSource {
    /// Fresh anchored random Hamiltonian per sample.
    Random,
    /// `I − |0…0⟩⟨0…0|`.
    Warmup,
    /// One fixed Hamiltonian, e.g. loaded from a Pauli file.
    Fixed(ComplexMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnsatzChoice {
    /// Random-axis layers started from the tilted product state.
    Layered,
    /// x-rotations on every qubit from `|0…0⟩`; depth is ignored.
    ProductX,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelChoice {
    /// The same dissipator on every qubit.
    Uniform { alpha: f64, phi: f64 },
    /// Sigmoid mixture of the `|0…0⟩` and `|1…1⟩` pumps, `σ ~ U[−5, 5)`.
    AnchorPair,
    Explicit(LiouvillianSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceExperiment {
    pub qubits: Vec<usize>,
    pub depths: Vec<usize>,
    /// Positive interaction times, strictly increasing.
    pub dts: Vec<f64>,
    pub samples: usize,
    pub target: Target,
    pub source: HamiltonianSource,
    pub ansatz: AnsatzChoice,
    pub channel: ChannelChoice,
    pub base_seed: u64,
    /// Also estimate the channel-free (`Δt = 0`) variance.
    pub include_unitary: bool,
}

/// `0.1, 0.2, …, 3.0`.
pub fn default_dt_grid() -> Vec<f64> {
    (1..=30).map(|k| k as f64 / 10.0).collect()
}

impl VarianceExperiment {
    /// Random anchored Hamiltonians, layered ansatz, sigmoid channel pair.
    pub fn random(qubits: Vec<usize>, depths: Vec<usize>, base_seed: u64) -> Self {
        Self {
            qubits,
            depths,
            dts: default_dt_grid(),
            samples: 1000,
            target: Target::Theta11,
            source: HamiltonianSource::Random,
            ansatz: AnsatzChoice::Layered,
            channel: ChannelChoice::AnchorPair,
            base_seed,
            include_unitary: true,
        }
    }

    /// Product-state warm-up problem with decay to `|0⟩` on every qubit.
    pub fn warmup(qubits: Vec<usize>, base_seed: u64) -> Self {
        Self {
            qubits,
            depths: vec![1],
            dts: default_dt_grid(),
            samples: 1000,
            target: Target::Theta11,
            source: HamiltonianSource::Warmup,
            ansatz: AnsatzChoice::ProductX,
            channel: ChannelChoice::Uniform { alpha: PI, phi: 0.0 },
            base_seed,
            include_unitary: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::InvalidArgument("need at least two samples".into()));
        }
        if self.qubits.is_empty() || self.depths.is_empty() {
            return Err(Error::InvalidArgument("empty qubit or depth list".into()));
        }
        if self.qubits.iter().any(|&n| n == 0) || self.depths.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument("qubit counts and depths must be positive".into()));
        }
        if self.dts.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidArgument("interaction times must be positive".into()));
        }
        if self.dts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("interaction-time grid must be strictly increasing".into()));
        }
        if self.target == Target::Sigma && self.channel != ChannelChoice::AnchorPair {
            return Err(Error::InvalidArgument("the sigma target needs the anchor-pair channel".into()));
        }
        if matches!(self.source, HamiltonianSource::Random) && self.qubits.iter().any(|&n| n < 2) {
            return Err(Error::InvalidArgument("random Hamiltonians need n >= 2".into()));
        }
        if let HamiltonianSource::Fixed(h) = &self.source {
            if self.qubits.iter().any(|&n| h.nrows() != 1 << n) {
                return Err(Error::InvalidArgument("fixed Hamiltonian size does not match the qubit list".into()));
            }
        }
        if let ChannelChoice::Explicit(l) = &self.channel {
            if self.qubits.iter().any(|&n| n != l.n()) {
                return Err(Error::InvalidArgument("explicit Liouvillian size does not match the qubit list".into()));
            }
        }
        if self.qubits.iter().any(|&n| n > 10) {
            return Err(Error::InvalidArgument("density-matrix benchmarks are limited to n <= 10".into()));
        }
        Ok(())
    }

    fn depths_for(&self) -> Vec<usize> {
        match self.ansatz {
            AnsatzChoice::Layered => self.depths.clone(),
            AnsatzChoice::ProductX => vec![1],
        }
    }
}

/// One random problem instance.
#[derive(Debug, Clone)]
pub struct SampleDraw {
    pub ansatz: Ansatz,
    pub hamiltonian: ComplexMatrix,
    pub theta: Vec<f64>,
    pub sigma: Option<f64>,
}

pub fn sample_seed(base: u64, index: usize) -> u64 {
    base ^ index as u64
}

/// Deterministic draw: axes, Hamiltonian, then `θ ~ U[0, 2π)` and `σ ~ U[−5, 5)`.
pub fn draw_sample(exp: &VarianceExperiment, n: usize, depth: usize, seed: u64) -> Result<SampleDraw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ansatz = match exp.ansatz {
        AnsatzChoice::Layered => Ansatz::Layered(AnsatzSpec::random(n, depth, &mut rng)?),
        AnsatzChoice::ProductX => Ansatz::ProductX { n },
    };
    let hamiltonian = match &exp.source {
        HamiltonianSource::Random => {
            random_hamiltonian_with(&RandomHamiltonianSpec::new(n, seed), &mut rng)?.matrix
        }
        HamiltonianSource::Warmup => warmup_hamiltonian(n).to_dense(),
        HamiltonianSource::Fixed(h) => h.clone(),
    };
    let theta = (0..ansatz.num_params())
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();
    let sigma = (exp.channel == ChannelChoice::AnchorPair).then(|| rng.random_range(-5.0..5.0));
    Ok(SampleDraw {
        ansatz,
        hamiltonian,
        theta,
        sigma,
    })
}

fn liouvillians(choice: &ChannelChoice, n: usize) -> Vec<LiouvillianSpec> {
    match choice {
        ChannelChoice::Uniform { alpha, phi } => vec![LiouvillianSpec::uniform(n, *alpha, *phi)],
        ChannelChoice::AnchorPair => vec![
            LiouvillianSpec::uniform(n, PI, 0.0),
            LiouvillianSpec::uniform(n, 0.0, 0.0),
        ],
        ChannelChoice::Explicit(l) => vec![l.clone()],
    }
}

fn initial_for(choice: AnsatzChoice, n: usize) -> DensityMatrix {
    match choice {
        AnsatzChoice::Layered => initial_state(n),
        AnsatzChoice::ProductX => DensityMatrix::basis_state(n, 0),
    }
}

/// The training model for one draw at one interaction time (`dt = 0`: no channel).
pub fn sample_model(exp: &VarianceExperiment, draw: &SampleDraw, dt: f64) -> Result<Model> {
    let n = draw.ansatz.n();
    let branches = liouvillians(&exp.channel, n);
    let channel = if dt == 0.0 {
        ChannelModel::Unitary
    } else if exp.channel == ChannelChoice::AnchorPair {
        ChannelModel::anchor_pair(n, dt)?
    } else {
        ChannelModel::Fixed(ChannelSpec::new(branches[0].clone(), dt)?)
    };
    Model::new(draw.ansatz.clone(), draw.hamiltonian.clone(), channel, initial_for(exp.ansatz, n))
}

/// The target derivative of one draw, through the full training model.
pub fn sample_gradient(exp: &VarianceExperiment, n: usize, depth: usize, dt: f64, seed: u64) -> Result<f64> {
    let draw = draw_sample(exp, n, depth, seed)?;
    let model = sample_model(exp, &draw, dt)?;
    let sigma = if dt == 0.0 { None } else { draw.sigma };
    match exp.target {
        Target::Theta11 => Ok(model.grad_theta(&draw.theta, sigma)?[0]),
        Target::Sigma => {
            if dt == 0.0 {
                Ok(0.0)
            } else {
                model.grad_sigma(&draw.theta, sigma.expect("anchor pair draws sigma"))
            }
        }
    }
}

/// Channels for every grid time, shared by all samples.
struct ChannelGrid {
    /// `per_dt[k][j]` is branch `j` at `dts[k]`.
    per_dt: Vec<Vec<Channel>>,
}

impl ChannelGrid {
    fn new(exp: &VarianceExperiment, n: usize) -> Result<Self> {
        let branches = liouvillians(&exp.channel, n);
        let per_dt = exp
            .dts
            .iter()
            .map(|&dt| {
                branches
                    .iter()
                    .map(|l| ChannelSpec::new(l.clone(), dt)?.compile())
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self { per_dt })
    }
}

/// Target derivatives of one draw: unitary value first (if requested), then one per grid time.
fn sample_all_dts(
    exp: &VarianceExperiment,
    grid: &ChannelGrid,
    n: usize,
    depth: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let draw = draw_sample(exp, n, depth, seed)?;
    let init = initial_for(exp.ansatz, n);
    let h = &draw.hamiltonian;
    let weights = match draw.sigma {
        Some(s) => {
            let w = sigmoid(s);
            vec![w, 1.0 - w]
        }
        None => vec![1.0],
    };
    let mut out = Vec::with_capacity(exp.dts.len() + 1);
    match exp.target {
        Target::Theta11 => {
            let plus = circuit_state(&draw.ansatz, &draw.theta, init.matrix(), Some((0, FRAC_PI_2)))?;
            let minus = circuit_state(&draw.ansatz, &draw.theta, init.matrix(), Some((0, -FRAC_PI_2)))?;
            let delta = plus - minus;
            if exp.include_unitary {
                out.push(0.5 * trace_of_product(h, &delta).re);
            }
            for channels in &grid.per_dt {
                let g: f64 = channels
                    .iter()
                    .zip(&weights)
                    .map(|(c, w)| w * trace_of_product(h, &c.apply_matrix(&delta)).re)
                    .sum();
                out.push(0.5 * g);
            }
        }
        Target::Sigma => {
            let rho = circuit_state(&draw.ansatz, &draw.theta, init.matrix(), None)?;
            let ds = sigmoid_derivative(draw.sigma.expect("anchor pair"));
            if exp.include_unitary {
                out.push(0.0);
            }
            for channels in &grid.per_dt {
                let c1 = trace_of_product(h, &channels[0].apply_matrix(&rho)).re;
                let c2 = trace_of_product(h, &channels[1].apply_matrix(&rho)).re;
                out.push(ds * (c1 - c2));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariancePoint {
    pub n: usize,
    pub depth: usize,
    /// `0` marks the channel-free baseline.
    pub dt: f64,
    pub target: Target,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
}

/// Jackknife standard error of the unbiased sample variance.
pub fn jackknife_variance_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 3 {
        return f64::INFINITY;
    }
    let m = n as f64;
    let mean = xs.iter().sum::<f64>() / m;
    // centred sums keep the leave-one-out formula well conditioned
    let s1: f64 = xs.iter().map(|x| x - mean).sum();
    let s2: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let loo: Vec<f64> = xs
        .iter()
        .map(|x| {
            let d = x - mean;
            let r1 = s1 - d;
            let r2 = s2 - d * d;
            (r2 - r1 * r1 / (m - 1.0)) / (m - 2.0)
        })
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / m;
    ((m - 1.0) / m * loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>()).sqrt()
}

fn summarize(n: usize, depth: usize, dt: f64, target: Target, xs: &[f64]) -> VariancePoint {
    VariancePoint {
        n,
        depth,
        dt,
        target,
        mean: xs.iter().sum::<f64>() / xs.len() as f64,
        variance: sample_variance(xs),
        std_error: jackknife_variance_se(xs),
        samples: xs.len(),
    }
}

/// The full `(n, depth, dt)` grid, baseline rows first for each `(n, depth)`.
pub fn run_experiment(exp: &VarianceExperiment) -> Result<Vec<VariancePoint>> {
    exp.validate()?;
    let mut points = Vec::new();
    for &n in &exp.qubits {
        let grid = ChannelGrid::new(exp, n)?;
        for depth in exp.depths_for() {
            let draws = (0..exp.samples)
                .into_par_iter()
                .map(|i| sample_all_dts(exp, &grid, n, depth, sample_seed(exp.base_seed, i)))
                .collect::<Result<Vec<_>>>()?;
            let mut dts = Vec::new();
            if exp.include_unitary {
                dts.push(0.0);
            }
            dts.extend_from_slice(&exp.dts);
            for (k, &dt) in dts.iter().enumerate() {
                let column: Vec<f64> = draws.iter().map(|d| d[k]).collect();
                points.push(summarize(n, depth, dt, exp.target, &column));
            }
        }
    }
    Ok(points)
}

/// Largest-variance grid time per `(n, depth)`, with the baseline alongside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestDt {
    pub n: usize,
    pub depth: usize,
    pub best: VariancePoint,
    pub unitary: Option<VariancePoint>,
}

impl BestDt {
    /// Best dissipative variance over the baseline variance.
    pub fn ratio(&self) -> Option<f64> {
        self.unitary.map(|u| self.best.variance / u.variance)
    }
}

pub fn best_dt(points: &[VariancePoint]) -> Vec<BestDt> {
    let mut keys: Vec<(usize, usize)> = points.iter().map(|p| (p.n, p.depth)).collect();
    keys.dedup();
    keys.into_iter()
        .map(|(n, depth)| {
            let group = points.iter().filter(|p| p.n == n && p.depth == depth);
            let unitary = group.clone().find(|p| p.dt == 0.0).copied();
            let best = *group
                .filter(|p| p.dt > 0.0)
                .max_by(|a, b| a.variance.total_cmp(&b.variance))
                .expect("grid has positive interaction times");
            BestDt {
                n,
                depth,
                best,
                unitary,
            }
        })
        .collect()
}

pub fn write_csv(points: &[VariancePoint], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "n,depth,dt,target,variance,std_error,samples")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{:e},{:e},{}",
            p.n,
            p.depth,
            p.dt,
            p.target.label(),
            p.variance,
            p.std_error,
            p.samples
        )?;
    }
    Ok(())
}

/// Weighted least-squares fit of `ln(variance)` against `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSlopeFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
}

/// `points` are `(n, variance, std_error)`; each log-variance is weighted by
/// `(variance / std_error)²`.
pub fn fit_log_variance(points: &[(f64, f64, f64)]) -> LogSlopeFit {
    let w: Vec<f64> = points.iter().map(|&(_, v, se)| (v / se).powi(2)).collect();
    let y: Vec<f64> = points.iter().map(|&(_, v, _)| v.ln()).collect();
    let x: Vec<f64> = points.iter().map(|&(n, _, _)| n).collect();
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = y.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = x
        .iter()
        .zip(&y)
        .zip(&w)
        .map(|((x, y), w)| w * (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    LogSlopeFit {
        slope,
        slope_se: (1.0 / sxx).sqrt(),
        intercept: my - slope * mx,
    }
}
