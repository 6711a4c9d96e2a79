//! Robust mixture weight by difference-of-convex programming.
//!
//! The weight `z` is sought as a minimizer over the simplex of
//!
//! ```text
//! f(z) = max_k L(D_k, h_z^η) - Σ_j z_j L(D_j, h_z^η)
//! ```
//!
//! which is a maximum minus one of its own weighted averages and therefore
//! never negative. Each constraint difference splits as `u_k - v_k` with
//! both parts convex (see [`decomposition`]); DCA repeatedly minimizes the
//! convex upper model obtained by linearizing the `v_k` (see [`inner`]).
//! A final value of `f` near zero certifies a near-global solution.

pub mod certificate;
pub mod decomposition;
pub mod inner;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

pub use certificate::{certify, kkt_residual, Certificate};
pub use decomposition::{
    dc_terms, dc_terms_unconstrained, fz_gz_decomposition, uk_value_grad, vk_value_grad, DcTerms,
};
pub use inner::{solve_inner, InnerResult};

use crate::combiner::{CombinerContext, DEFAULT_ETA};
use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::simplex::SimplexWeights;

/// Safety factor applied to the largest pointwise base loss when `M` is
/// derived from the instance.
pub const M_SAFETY_FACTOR: f64 = 1.01;

/// Starting point of the DCA iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPoint {
    Uniform,
    Vertex(usize),
    Given(SimplexWeights),
    /// Uniform draw from the simplex using the configured seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eta: f64,
    pub eta_prime: f64,
    /// Loss bound `M`; derived from the instance when `None`.
    pub m_bound: Option<f64>,
    pub z0: InitialPoint,
    pub max_outer: usize,
    pub max_inner: usize,
    pub inner_tol: f64,
    /// Stop once `|γ_t - γ_{t+1}|` falls below this.
    pub outer_tol: f64,
    /// Stop once `γ_t` falls below this; also the certificate threshold.
    pub global_tol: f64,
    /// Initial subgradient step length of the inner solver.
    pub inner_step: f64,
    /// Inner iterations between progress checks.
    pub inner_patience: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            eta_prime: 1e-4,
            m_bound: None,
            z0: InitialPoint::Uniform,
            max_outer: 200,
            max_inner: 2000,
            inner_tol: 1e-10,
            outer_tol: 1e-8,
            global_tol: 1e-2,
            inner_step: 0.1,
            inner_patience: 50,
            seed: 0,
        }
    }
}

/// `M` derived from the instance: the largest pointwise expected loss of
/// any base predictor, times [`M_SAFETY_FACTOR`].
pub fn default_m_bound(instance: &ProblemInstance) -> f64 {
    instance.max_base_loss() * M_SAFETY_FACTOR
}

impl SolverConfig {
    /// Checks the configuration against an instance and resolves `M`.
    pub fn resolve_m_bound(&self, instance: &ProblemInstance) -> Result<f64> {
        self.validate()?;
        let floor = instance.max_base_loss();
        match self.m_bound {
            None => Ok(floor * M_SAFETY_FACTOR),
            Some(m) if m.is_finite() && m >= floor => Ok(m),
            Some(m) => Err(Error::validation(format!(
                "loss bound M = {m} is below the largest pointwise base loss {floor}"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eta", self.eta),
            ("inner_tol", self.inner_tol),
            ("outer_tol", self.outer_tol),
            ("global_tol", self.global_tol),
            ("inner_step", self.inner_step),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.eta_prime.is_finite() && self.eta_prime >= 0.0) {
            return Err(Error::validation(format!(
                "eta_prime must be nonnegative, got {}",
                self.eta_prime
            )));
        }
        if self.max_outer == 0 || self.max_inner == 0 || self.inner_patience == 0 {
            return Err(Error::validation("iteration budgets must be at least 1"));
        }
        Ok(())
    }

    pub fn initial_point(&self, p: usize) -> Result<SimplexWeights> {
        match &self.z0 {
            InitialPoint::Uniform => Ok(SimplexWeights::uniform(p)),
            InitialPoint::Vertex(k) if *k < p => Ok(SimplexWeights::vertex(p, *k)),
            InitialPoint::Vertex(k) => Err(Error::validation(format!(
                "initial vertex {k} out of range for {p} domains"
            ))),
            InitialPoint::Given(z) if z.dim() == p => Ok(z.clone()),
            InitialPoint::Given(z) => Err(Error::validation(format!(
                "initial point has {} entries for {p} domains",
                z.dim()
            ))),
            InitialPoint::Random => Ok(random_simplex_point(p, self.seed)),
        }
    }
}

/// Uniform draw from the simplex (normalized exponentials).
pub fn random_simplex_point(p: usize, seed: u64) -> SimplexWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..p).map(|_| Exp1.sample(&mut rng)).collect();
    SimplexWeights::normalized(draws).expect("exponential draws are positive")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub z: SimplexWeights,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub z_star: SimplexWeights,
    pub gamma_star: f64,
    pub per_domain_losses: Vec<f64>,
    /// One entry per outer iterate, starting with `z_0`.
    pub trace: Vec<TraceEntry>,
    pub status: SolverStatus,
    pub eta: f64,
    pub m_bound: f64,
}

/// `(f(z), L(D_k, h_z^η) for every k)`.
pub fn objective(instance: &ProblemInstance, z: &SimplexWeights, eta: f64) -> (f64, Vec<f64>) {
    let losses = CombinerContext::new(instance, eta, z).domain_losses();
    (gap(&losses, z), losses)
}

/// `max_k L_k - Σ_j z_j L_j`, written as `Σ_j z_j (max - L_j)` so the
/// result is exactly zero when all losses coincide and never negative.
pub(crate) fn gap(losses: &[f64], z: &SimplexWeights) -> f64 {
    let top = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    losses
        .iter()
        .zip(z.iter())
        .map(|(l, w)| w * (top - l))
        .sum()
}

/// Runs DCA from the configured starting point.
pub fn dca_solve(instance: &ProblemInstance, config: &SolverConfig) -> Result<Solution> {
    let m_bound = config.resolve_m_bound(instance)?;
    let p = instance.num_domains();
    let eta = config.eta;
    let mut z = if p == 1 {
        SimplexWeights::uniform(1)
    } else {
        config.initial_point(p)?
    };
    let (mut gamma, mut losses) = objective(instance, &z, eta);
    let mut trace = vec![TraceEntry {
        z: z.clone(),
        gamma,
    }];
    let mut status = SolverStatus::BudgetExhausted;
    if p == 1 || gamma < config.global_tol {
        status = SolverStatus::Converged;
    } else {
        for _ in 0..config.max_outer {
            let step = solve_inner(instance, &z, eta, m_bound, config);
            let (next_gamma, next_losses) = objective(instance, &step.z, eta);
            let change = (gamma - next_gamma).abs();
            trace.push(TraceEntry {
                z: step.z.clone(),
                gamma: next_gamma,
            });
            z = step.z;
            gamma = next_gamma;
            losses = next_losses;
            if gamma < config.global_tol || change < config.outer_tol {
                status = SolverStatus::Converged;
                break;
            }
        }
    }
    Ok(Solution {
        z_star: z,
        gamma_star: gamma,
        per_domain_losses: losses,
        trace,
        status,
        eta,
        m_bound,
    })
}
