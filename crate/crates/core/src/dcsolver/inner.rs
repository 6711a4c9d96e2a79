//! Convex subproblem of one DCA step.
//!
//! At the incumbent `z_t` each `v_k` is replaced by its tangent plane and
//! the piecewise-convex upper model
//!
//! ```text
//! F_t(z) = max_k [u_k(z) - v_k(z_t) - (z - z_t)·∇v_k(z_t)]
//! ```
//!
//! is minimized over the simplex by projected subgradient descent. The
//! best iterate seen is returned, so `F_t(z_{t+1}) ≤ F_t(z_t)` always.

use super::decomposition::{dc_terms, dc_terms_with, Want};
use super::SolverConfig;
use crate::model::ProblemInstance;
use crate::simplex::{project_onto_simplex, SimplexWeights};

/// Tangent-plane model of every `v_k` at `z_t`.
#[derive(Debug, Clone)]
pub struct Linearization {
    z_t: Vec<f64>,
    v_at: Vec<f64>,
    grad_v: Vec<Vec<f64>>,
}

impl Linearization {
    pub fn at(instance: &ProblemInstance, z_t: &SimplexWeights, eta: f64, m_bound: f64) -> Self {
        let t = dc_terms(instance, z_t, eta, m_bound);
        Self {
            z_t: z_t.as_slice().to_vec(),
            v_at: t.v,
            grad_v: t.grad_v,
        }
    }

    /// `v_k(z_t) + (z - z_t)·∇v_k(z_t)`.
    pub fn tangent(&self, k: usize, z: &[f64]) -> f64 {
        self.v_at[k]
            + self.grad_v[k]
                .iter()
                .zip(z.iter().zip(&self.z_t))
                .map(|(g, (a, b))| g * (a - b))
                .sum::<f64>()
    }

    pub fn grad(&self, k: usize) -> &[f64] {
        &self.grad_v[k]
    }
}

/// Value of `F_t` at `z` together with a subgradient.
#[derive(Debug, Clone)]
pub struct ModelEval {
    pub value: f64,
    pub argmax: usize,
    pub subgradient: Vec<f64>,
}

pub fn eval_model(
    instance: &ProblemInstance,
    lin: &Linearization,
    z: &SimplexWeights,
    eta: f64,
    m_bound: f64,
) -> ModelEval {
    let t = dc_terms_with(instance, z, eta, m_bound, Want { v: false });
    let mut best = f64::NEG_INFINITY;
    let mut argmax = 0;
    for k in 0..instance.num_domains() {
        let val = t.u[k] - lin.tangent(k, z.as_slice());
        if val > best {
            best = val;
            argmax = k;
        }
    }
    let subgradient = t.grad_u[argmax]
        .iter()
        .zip(lin.grad(argmax))
        .map(|(gu, gv)| gu - gv)
        .collect();
    ModelEval {
        value: best,
        argmax,
        subgradient,
    }
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub z: SimplexWeights,
    /// `F_t` at the returned point.
    pub value: f64,
    /// `F_t(z_t)`, which equals the true objective at `z_t`.
    pub start_value: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out first.
    pub converged: bool,
}

/// Approximately minimizes `F_t` over the simplex starting from `z_t`.
pub fn solve_inner(
    instance: &ProblemInstance,
    z_t: &SimplexWeights,
    eta: f64,
    m_bound: f64,
    config: &SolverConfig,
) -> InnerResult {
    let lin = Linearization::at(instance, z_t, eta, m_bound);
    solve_model(instance, &lin, z_t, eta, m_bound, config)
}

pub(crate) fn solve_model(
    instance: &ProblemInstance,
    lin: &Linearization,
    z_t: &SimplexWeights,
    eta: f64,
    m_bound: f64,
    config: &SolverConfig,
) -> InnerResult {
    let p = instance.num_domains();
    let start = eval_model(instance, lin, z_t, eta, m_bound);
    let start_value = start.value;
    let mut best_z = z_t.clone();
    let mut best_val = start_value;
    if p == 1 {
        return InnerResult {
            z: best_z,
            value: best_val,
            start_value,
            iterations: 0,
            converged: true,
        };
    }

    // Base step: halve the configured length until a first step descends.
    let Some(base_step) =
        calibrate_step(instance, lin, z_t, &start, eta, m_bound, config.inner_step)
    else {
        return InnerResult {
            z: best_z,
            value: best_val,
            start_value,
            iterations: 0,
            converged: true,
        };
    };

    let mut z = z_t.as_slice().to_vec();
    let mut cur = start;
    let mut since_improvement = 0usize;
    let mut last_checkpoint = best_val;
    let mut converged = false;
    let mut iterations = 0;
    for i in 0..config.max_inner {
        iterations = i + 1;
        let Some(dir) = tangent_direction(&cur.subgradient) else {
            converged = true;
            break;
        };
        let step = base_step / ((i + 1) as f64).sqrt();
        let trial: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a - step * d).collect();
        z = project_onto_simplex(&trial);
        let zw = SimplexWeights::project(&z);
        cur = eval_model(instance, lin, &zw, eta, m_bound);
        if cur.value < best_val {
            best_val = cur.value;
            best_z = zw;
        }
        since_improvement += 1;
        if since_improvement >= config.inner_patience {
            let scale = 1.0f64.max(best_val.abs());
            if last_checkpoint - best_val <= config.inner_tol * scale {
                converged = true;
                break;
            }
            last_checkpoint = best_val;
            since_improvement = 0;
        }
    }
    InnerResult {
        z: best_z,
        value: best_val,
        start_value,
        iterations,
        converged,
    }
}

/// Unit-length component of `g` tangent to the simplex, if nonzero.
fn tangent_direction(g: &[f64]) -> Option<Vec<f64>> {
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let dir: Vec<f64> = g.iter().map(|v| v - mean).collect();
    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
    (norm > 0.0).then(|| dir.into_iter().map(|d| d / norm).collect())
}

const MAX_HALVINGS: usize = 60;

fn calibrate_step(
    instance: &ProblemInstance,
    lin: &Linearization,
    z_t: &SimplexWeights,
    start: &ModelEval,
    eta: f64,
    m_bound: f64,
    initial: f64,
) -> Option<f64> {
    let dir = tangent_direction(&start.subgradient)?;
    let mut step = initial;
    for _ in 0..MAX_HALVINGS {
        let trial: Vec<f64> = z_t.iter().zip(&dir).map(|(a, d)| a - step * d).collect();
        let zw = SimplexWeights::project(&trial);
        if eval_model(instance, lin, &zw, eta, m_bound).value < start.value {
            return Some(step);
        }
        step *= 0.5;
    }
    None
}
