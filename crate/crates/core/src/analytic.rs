//! Closed forms for the product-state warm-up problem: `H = I − |0…0⟩⟨0…0|`
//! minimized with independent x-rotations from `|0…0⟩`, optionally followed
//! by depolarizing noise or by dissipation towards `|0⟩` on every qubit.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmupConfig {
    pub n: usize,
    pub dt: f64,
    /// Depolarizing probability.
    pub p: f64,
}

/// `1 − Π cos²(θ_j/2)`.
pub fn cost_u(theta: &[f64]) -> f64 {
    1.0 - theta.iter().map(|t| (t / 2.0).cos().powi(2)).product::<f64>()
}

/// `p(1 − 2^{−n}) + (1 − p) C_u`.
pub fn cost_n(theta: &[f64], p: f64) -> f64 {
    let n = theta.len() as i32;
    p * (1.0 - 0.5f64.powi(n)) + (1.0 - p) * cost_u(theta)
}

fn damped_overlap(theta: f64, decay: f64) -> f64 {
    1.0 - (theta / 2.0).sin().powi(2) * decay
}

/// `1 − Π [1 − sin²(θ_j/2) e^{−Δt}]`.
pub fn cost_ed(theta: &[f64], dt: f64) -> f64 {
    let decay = (-dt).exp();
    1.0 - theta
        .iter()
        .map(|&t| damped_overlap(t, decay))
        .product::<f64>()
}

/// `∂C_ed/∂θ_j = ½ sin θ_j e^{−Δt} Π_{k≠j} [1 − sin²(θ_k/2) e^{−Δt}]`.
pub fn grad_ed(theta: &[f64], dt: f64) -> Vec<f64> {
    let decay = (-dt).exp();
    let factors: Vec<f64> = theta.iter().map(|&t| damped_overlap(t, decay)).collect();
    (0..theta.len())
        .map(|j| {
            let rest: f64 = factors
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, f)| f)
                .product();
            0.5 * theta[j].sin() * decay * rest
        })
        .collect()
}

pub fn grad_u(theta: &[f64]) -> Vec<f64> {
    grad_ed(theta, 0.0)
}

/// `Var[∂C_u/∂θ_j] = (1/8)(3/8)^{n−1}` for uniform angles.
pub fn var_grad_u(n: usize) -> f64 {
    assert!(n >= 1);
    0.125 * 0.375f64.powi(n as i32 - 1)
}

/// `Var[∂C_ed/∂θ_j] = (e^{−2Δt}/8)(1 − e^{−Δt} + (3/8)e^{−2Δt})^{n−1}`
/// for uniform angles.
pub fn var_grad_ed(n: usize, dt: f64) -> f64 {
    assert!(n >= 1);
    let x = (-dt).exp();
    0.125 * x * x * (1.0 - x + 0.375 * x * x).powi(n as i32 - 1)
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    (lo + hi) / 2.0
}

/// Interaction time maximizing `var_grad_ed(n, ·)` over `[0, 20]`.
pub fn optimal_dt(n: usize) -> f64 {
    assert!(n >= 2, "optimal interaction time needs n >= 2");
    // The log keeps the objective well scaled at large n.
    golden_section_max(|dt| var_grad_ed(n, dt).ln(), 0.0, 20.0, 1e-4)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LandscapeKind {
    Unitary,
    Noisy { p: f64 },
    Dissipative { dt: f64 },
}

impl LandscapeKind {
    pub fn cost(&self, theta: &[f64]) -> f64 {
        match *self {
            LandscapeKind::Unitary => cost_u(theta),
            LandscapeKind::Noisy { p } => cost_n(theta, p),
            LandscapeKind::Dissipative { dt } => cost_ed(theta, dt),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridAxis {
    fn default() -> Self {
        Self {
            min: -PI,
            max: PI,
            points: 201,
        }
    }
}

impl GridAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let span = self.max - self.min;
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.min + span * i as f64 / last)
            .collect()
    }
}

/// Costs on a grid over `(θ₁, θ₂)` with the other angles held fixed.
#[derive(Debug, Clone)]
pub struct LandscapeGrid {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    /// `values[i][j]` is the cost at `(theta1[i], theta2[j])`.
    pub values: Vec<Vec<f64>>,
}

impl LandscapeGrid {
    pub fn min(&self) -> f64 {
        self.values.iter().flatten().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid indices of the smallest value.
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < self.values[best.0][best.1] {
                    best = (i, j);
                }
            }
        }
        best
    }

    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "theta1,theta2,cost")?;
        for (i, &t1) in self.theta1.iter().enumerate() {
            for (j, &t2) in self.theta2.iter().enumerate() {
                writeln!(out, "{t1},{t2},{}", self.values[i][j])?;
            }
        }
        Ok(())
    }
}

/// `fixed` supplies all `n` angles; entries 0 and 1 are overwritten by the grid.
pub fn landscape_grid(
    kind: LandscapeKind,
    fixed: &[f64],
    axis1: GridAxis,
    axis2: GridAxis,
) -> LandscapeGrid {
    assert!(fixed.len() >= 2, "landscape needs at least two angles");
    let theta1 = axis1.values();
    let theta2 = axis2.values();
    let values = theta1
        .par_iter()
        .map(|&t1| {
            let mut theta = fixed.to_vec();
            theta[0] = t1;
            theta2
                .iter()
                .map(|&t2| {
                    theta[1] = t2;
                    kind.cost(&theta)
                })
                .collect()
        })
        .collect();
    LandscapeGrid {
        theta1,
        theta2,
        values,
    }
}
