//! Optimality diagnostics for a candidate weight `z`.
//!
//! The objective is a maximum minus its own `z`-weighted average, so a
//! value near zero is both achievable and a global lower bound; that gap
//! is the primary certificate. The KKT residual measures how far `z` is
//! from satisfying the stationarity conditions of the simplex-constrained
//! min-max problem and is a diagnostic only.

use serde::{Deserialize, Serialize};

use super::decomposition::dc_terms;
use super::{default_m_bound, gap, Solution};
use crate::combiner::CombinerContext;
use crate::model::ProblemInstance;
use crate::simplex::{project_onto_simplex, SimplexWeights};

/// Relative tolerance for a loss to count as achieving the maximum.
pub const ACTIVE_SET_TOL: f64 = 1e-7;
/// Coordinates at or below this are treated as on the simplex boundary.
const BOUNDARY_TOL: f64 = 1e-12;
const KKT_ITERS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub gamma_value: f64,
    pub is_near_global: bool,
    /// `max_k [L_k - Σ_j z_j L_j] - η′`; nonpositive when the
    /// distribution-weighted fixed-point inequality holds with slack `η′`.
    pub lemma1_residual: f64,
    pub kkt_residual: f64,
}

pub fn certify(
    instance: &ProblemInstance,
    z: &SimplexWeights,
    eta: f64,
    eta_prime: f64,
    global_tol: f64,
) -> Certificate {
    let losses = CombinerContext::new(instance, eta, z).domain_losses();
    let gamma_value = gap(&losses, z);
    Certificate {
        gamma_value,
        is_near_global: gamma_value <= global_tol,
        lemma1_residual: gamma_value - eta_prime,
        kkt_residual: kkt_residual(instance, z, eta),
    }
}

/// Certifies the output of [`super::dca_solve`].
pub fn certify_solution(
    instance: &ProblemInstance,
    solution: &Solution,
    eta_prime: f64,
    global_tol: f64,
) -> Certificate {
    certify(
        instance,
        &solution.z_star,
        solution.eta,
        eta_prime,
        global_tol,
    )
}

/// Stationarity residual of `z` for `min_z f(z)` over the simplex.
///
/// With `d_k = ∇_z [L(D_k, h_z) - L(D_z, h_z)]` for the active constraints
/// `A`, returns
///
/// ```text
/// min_{μ ∈ Δ(A), β ∈ ℝ, α ≥ 0, α_k = 0 if z_k > 0} ‖Σ_{k∈A} μ_k d_k + β 1 - α‖₂
/// ```
///
/// The small problem alternates an exact fit of `(β, α)` with projected
/// gradient steps on `μ`.
pub fn kkt_residual(instance: &ProblemInstance, z: &SimplexWeights, eta: f64) -> f64 {
    let p = instance.num_domains();
    if p == 1 {
        return 0.0;
    }
    let losses = CombinerContext::new(instance, eta, z).domain_losses();
    let top = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let active: Vec<usize> = (0..p)
        .filter(|&k| top - losses[k] <= ACTIVE_SET_TOL * top.abs().max(1.0))
        .collect();
    // u_k - v_k equals the constraint difference, so the gradients agree.
    // M only shifts both pieces equally.
    let terms = dc_terms(instance, z, eta, default_m_bound(instance).max(1.0));
    let d: Vec<Vec<f64>> = active
        .iter()
        .map(|&k| {
            terms.grad_u[k]
                .iter()
                .zip(&terms.grad_v[k])
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect();
    let on_boundary: Vec<bool> = z.iter().map(|&v| v <= BOUNDARY_TOL).collect();
    stationarity_residual(&d, &on_boundary)
}

/// Best `(β, α)` for a fixed combined gradient `g`.
///
/// For a given `β` the optimal multipliers are `α_k = max(0, g_k + β)` on
/// boundary coordinates, leaving the scalar convex problem
/// `Σ_free (g_k + β)² + Σ_boundary min(g_k + β, 0)²`, whose derivative is
/// monotone in `β`; its root is found by bisection.
fn fit_multipliers(g: &[f64], on_boundary: &[bool]) -> (f64, Vec<f64>) {
    let slope = |beta: f64| -> f64 {
        g.iter()
            .zip(on_boundary)
            .map(|(gk, &b)| if b { (gk + beta).min(0.0) } else { gk + beta })
            .sum()
    };
    let lo_g = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_g = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (-hi_g - 1.0, -lo_g + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * (1.0 + mid.abs()) {
            break;
        }
    }
    let beta = 0.5 * (lo + hi);
    let alpha = g
        .iter()
        .zip(on_boundary)
        .map(|(gk, &b)| if b { (gk + beta).max(0.0) } else { 0.0 })
        .collect();
    (beta, alpha)
}

fn residual_vector(g: &[f64], beta: f64, alpha: &[f64]) -> Vec<f64> {
    g.iter().zip(alpha).map(|(gk, a)| gk + beta - a).collect()
}

fn combine(d: &[Vec<f64>], mu: &[f64]) -> Vec<f64> {
    let p = d[0].len();
    let mut g = vec![0.0; p];
    for (dk, &m) in d.iter().zip(mu) {
        for (gj, v) in g.iter_mut().zip(dk) {
            *gj += m * v;
        }
    }
    g
}

pub(crate) fn stationarity_residual(d: &[Vec<f64>], on_boundary: &[bool]) -> f64 {
    let a = d.len();
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let eval = |mu: &[f64]| {
        let g = combine(d, mu);
        let (beta, alpha) = fit_multipliers(&g, on_boundary);
        let r = residual_vector(&g, beta, &alpha);
        (norm(&r), r)
    };
    let mut mu = vec![1.0 / a as f64; a];
    let (mut best, mut r) = eval(&mu);
    if a == 1 {
        return best;
    }
    // Lipschitz constant of μ ↦ ½‖Dμ + …‖² is at most Σ‖d_k‖².
    let lip: f64 = d
        .iter()
        .map(|dk| dk.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .max(1e-300);
    let step = 1.0 / lip;
    for _ in 0..KKT_ITERS {
        let grad: Vec<f64> = d
            .iter()
            .map(|dk| dk.iter().zip(&r).map(|(a, b)| a * b).sum())
            .collect();
        let trial: Vec<f64> = mu.iter().zip(&grad).map(|(m, g)| m - step * g).collect();
        let next = project_onto_simplex(&trial);
        let (val, next_r) = eval(&next);
        let moved: f64 = next.iter().zip(&mu).map(|(x, y)| (x - y).abs()).sum();
        mu = next;
        r = next_r;
        best = best.min(val);
        if moved < 1e-15 {
            break;
        }
    }
    best
}
