//! Rényi divergences between discrete distributions and the guarantee
//! bounds built on them.
//!
//! Orders are passed as `f64`: `1.0` selects the KL branch and
//! `f64::INFINITY` the log sup-ratio branch. Summands with `P(x) = 0`
//! contribute nothing; a summand with `P(x) > 0 = Q(x)` makes the
//! divergence infinite for `α ≥ 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::simplex::{project_onto_simplex, simplex_grid, SimplexWeights};

const DIST_SUM_TOL: f64 = 1e-9;

/// Nonnegative mass vector summing to one over an indexed support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteDistribution(Vec<f64>);

impl DiscreteDistribution {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::validation("distribution has empty support"));
        }
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::validation(
                "distribution mass must be finite and nonnegative",
            ));
        }
        let s: f64 = mass.iter().sum();
        if (s - 1.0).abs() > DIST_SUM_TOL {
            return Err(Error::validation(format!(
                "distribution sums to {s}, expected 1"
            )));
        }
        Ok(Self(mass))
    }

    pub fn mass(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for DiscreteDistribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiscreteDistribution> for Vec<f64> {
    fn from(d: DiscreteDistribution) -> Self {
        d.0
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::validation(format!(
            "Rényi order must be positive, got {alpha}"
        )));
    }
    Ok(())
}

fn check_sizes(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::validation(format!(
            "domain size mismatch: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// `log Σ_x P(x)^α Q(x)^(1-α)`, computed by log-sum-exp.
///
/// Works on raw mass slices so callers can pass unnormalized mixtures.
fn log_power_sum(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    let mut logs = Vec::with_capacity(p.len());
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            if alpha > 1.0 {
                return f64::INFINITY;
            }
            // Q^(1-α) = 0 for α < 1.
            continue;
        }
        logs.push(alpha * pi.ln() + (1.0 - alpha) * qi.ln());
    }
    log_sum_exp(&logs)
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

fn divergence_raw(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    if alpha == 1.0 {
        let mut kl = 0.0;
        for (&pi, &qi) in p.iter().zip(q) {
            if pi == 0.0 {
                continue;
            }
            if qi == 0.0 {
                return f64::INFINITY;
            }
            kl += pi * (pi / qi).ln();
        }
        kl.max(0.0)
    } else if alpha.is_infinite() {
        let mut best = f64::NEG_INFINITY;
        for (&pi, &qi) in p.iter().zip(q) {
            if pi == 0.0 {
                continue;
            }
            if qi == 0.0 {
                return f64::INFINITY;
            }
            best = best.max(pi.ln() - qi.ln());
        }
        best.max(0.0)
    } else {
        // Clamp rounding below zero; the divergence is nonnegative.
        (log_power_sum(p, q, alpha) / (alpha - 1.0)).max(0.0)
    }
}

/// `D_α(P ‖ Q)`.
pub fn renyi_divergence(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_sizes(p.mass(), q.mass())?;
    Ok(divergence_raw(p.mass(), q.mass(), alpha))
}

/// `d_α(P ‖ Q) = exp(D_α(P ‖ Q))`.
pub fn d_alpha(p: &DiscreteDistribution, q: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    Ok(renyi_divergence(p, q, alpha)?.exp())
}

/// Result of fitting the closest mixture `D_λ` to a target in `d_α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub lambda: SimplexWeights,
    /// `inf_λ d_α(P ‖ D_λ)`; infinite when infeasible.
    pub value: f64,
    /// False when `P` puts mass where every source density vanishes.
    pub feasible: bool,
}

/// Minimizes `d_α(P ‖ Σ_k λ_k D_k)` over the simplex for finite `α > 1`.
///
/// The inner sum `S(λ) = Σ_x P(x)^α / D_λ(x)^(α-1)` is convex in `λ`;
/// it is minimized by projected gradient descent with backtracking,
/// warm-started from the best point of a simplex grid with
/// `grid_resolution` steps per edge (only for `p ≤ 3`).
pub fn d_alpha_to_family(
    target: &DiscreteDistribution,
    instance: &ProblemInstance,
    alpha: f64,
    grid_resolution: usize,
) -> Result<FamilyFit> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::validation(format!(
            "family divergence needs a finite order above 1, got {alpha}"
        )));
    }
    let n = instance.num_points();
    let p = instance.num_domains();
    if target.len() != n {
        return Err(Error::validation(format!(
            "target has {} atoms, instance support has {n}",
            target.len()
        )));
    }
    let pm = target.mass();
    let feasible = instance
        .points
        .iter()
        .zip(pm)
        .all(|(pt, &m)| m == 0.0 || pt.densities.iter().any(|&d| d > 0.0));
    if !feasible {
        return Ok(FamilyFit {
            lambda: SimplexWeights::uniform(p),
            value: f64::INFINITY,
            feasible: false,
        });
    }

    // Only points with target mass matter.
    let active: Vec<(f64, &[f64])> = instance
        .points
        .iter()
        .zip(pm)
        .filter(|(_, &m)| m > 0.0)
        .map(|(pt, &m)| (m, pt.densities.as_slice()))
        .collect();
    let log_s = |lam: &[f64]| -> f64 {
        let mut logs = Vec::with_capacity(active.len());
        for (m, d) in &active {
            let mix: f64 = d.iter().zip(lam).map(|(a, b)| a * b).sum();
            if mix <= 0.0 {
                return f64::INFINITY;
            }
            logs.push(alpha * m.ln() - (alpha - 1.0) * mix.ln());
        }
        log_sum_exp(&logs)
    };
    // Gradient of log S: -(α-1) Σ_x w_x D_k(x) / D_λ(x), w_x ∝ P^α D_λ^(1-α).
    let grad_log_s = |lam: &[f64], ls: f64| -> Vec<f64> {
        let mut g = vec![0.0; p];
        for (m, d) in &active {
            let mix: f64 = d.iter().zip(lam).map(|(a, b)| a * b).sum();
            let w = (alpha * m.ln() - (alpha - 1.0) * mix.ln() - ls).exp();
            for (gk, dk) in g.iter_mut().zip(d.iter()) {
                *gk -= (alpha - 1.0) * w * dk / mix;
            }
        }
        g
    };

    let mut start = SimplexWeights::uniform(p);
    let mut best = log_s(start.as_slice());
    let candidates: Vec<SimplexWeights> = if p <= 3 && grid_resolution > 0 {
        simplex_grid(p, grid_resolution)
    } else {
        (0..p).map(|k| SimplexWeights::vertex(p, k)).collect()
    };
    for c in candidates {
        let v = log_s(c.as_slice());
        if v < best {
            best = v;
            start = c;
        }
    }

    let mut lam = start.into_vec();
    let mut val = best;
    let mut step = 1.0;
    for _ in 0..5000 {
        let g = grad_log_s(&lam, val);
        let mut improved = false;
        while step > 1e-16 {
            let trial: Vec<f64> = lam.iter().zip(&g).map(|(l, gk)| l - step * gk).collect();
            let trial = project_onto_simplex(&trial);
            let tv = log_s(&trial);
            let moved: f64 = trial.iter().zip(&lam).map(|(a, b)| (a - b).powi(2)).sum();
            // Armijo condition on the projected step.
            let decrease: f64 = g
                .iter()
                .zip(trial.iter().zip(&lam))
                .map(|(gk, (a, b))| gk * (a - b))
                .sum();
            if tv.is_finite() && tv <= val + 0.5 * decrease + 1e-15 {
                improved = moved > 0.0 && tv < val;
                lam = trial;
                val = tv;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let value = (val / (alpha - 1.0)).exp().max(1.0);
    Ok(FamilyFit {
        lambda: SimplexWeights::project(&lam),
        value,
        feasible: true,
    })
}

/// A guarantee of the form `[ε · d_α]^((α-1)/α) · M^(1/α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeBound {
    pub alpha: f64,
    /// `ε + δ`, `ε̂ + δ` or `ε_T + δ` depending on the setting.
    pub epsilon_term: f64,
    pub d_alpha_value: f64,
    pub m_bound: f64,
    pub bound_value: f64,
}

/// `[ε_term · d_α]^((α-1)/α) · M^(1/α)`; `α = ∞` gives `ε_term · d_α`.
pub fn guarantee_bound(
    epsilon_term: f64,
    d_alpha_value: f64,
    m_bound: f64,
    alpha: f64,
) -> Result<GuaranteeBound> {
    if !(alpha > 1.0) {
        return Err(Error::validation(format!(
            "bound order must exceed 1, got {alpha}"
        )));
    }
    for (name, v) in [
        ("epsilon term", epsilon_term),
        ("d_alpha", d_alpha_value),
        ("M", m_bound),
    ] {
        if v.is_nan() || v < 0.0 {
            return Err(Error::validation(format!(
                "{name} must be nonnegative, got {v}"
            )));
        }
    }
    let bound_value = holder_bound(epsilon_term * d_alpha_value, m_bound, alpha);
    Ok(GuaranteeBound {
        alpha,
        epsilon_term,
        d_alpha_value,
        m_bound,
        bound_value,
    })
}

/// `base^((α-1)/α) · M^(1/α)`.
fn holder_bound(base: f64, m_bound: f64, alpha: f64) -> f64 {
    if base == 0.0 {
        return 0.0;
    }
    if alpha.is_infinite() {
        return base;
    }
    base.powf((alpha - 1.0) / alpha) * m_bound.powf(1.0 / alpha)
}

/// Per-domain breakdown of an estimate-distribution or
/// distinct-conditional loss term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonReport {
    pub value: f64,
    /// Per-domain bound, before taking the maximum.
    pub per_domain: Vec<f64>,
    /// First domain whose support requirement fails, if any.
    pub support_violation: Option<usize>,
}

/// `ε̂ = max_k [ε · d_α(D̂_k ‖ D_k)]^((α-1)/α) · M^(1/α)`.
pub fn epsilon_hat(
    instance_true: &ProblemInstance,
    instance_estimated: &ProblemInstance,
    epsilon: f64,
    m_bound: f64,
    alpha: f64,
) -> Result<EpsilonReport> {
    if !(alpha > 1.0) {
        return Err(Error::validation(format!(
            "order must exceed 1, got {alpha}"
        )));
    }
    let p = instance_true.num_domains();
    if instance_estimated.num_domains() != p
        || instance_estimated.num_points() != instance_true.num_points()
    {
        return Err(Error::validation(
            "true and estimated instances must share support and domains",
        ));
    }
    let mut per_domain = Vec::with_capacity(p);
    let mut support_violation = None;
    for k in 0..p {
        let est = instance_estimated.density_column(k);
        let tru = instance_true.density_column(k);
        let d = divergence_raw(&est, &tru, alpha).exp();
        if d.is_infinite() && support_violation.is_none() {
            support_violation = Some(k);
        }
        per_domain.push(if epsilon == 0.0 {
            0.0
        } else {
            holder_bound(epsilon * d, m_bound, alpha)
        });
    }
    let value = per_domain.iter().cloned().fold(0.0, f64::max);
    Ok(EpsilonReport {
        value,
        per_domain,
        support_violation,
    })
}

/// `ε_T = max_k [E_{D_k(x)} d_α(D_T(·|x) ‖ D_k(·|x))^(α-1)]^(1/α) ε^((α-1)/α) M^(1/α)`.
///
/// `target[i]` is the target conditional at support point `i`; the
/// per-domain conditionals come from each point's `label_dist`.
pub fn epsilon_t(
    instance: &ProblemInstance,
    target: &[DiscreteDistribution],
    epsilon: f64,
    m_bound: f64,
    alpha: f64,
) -> Result<EpsilonReport> {
    if !(alpha > 1.0) || alpha.is_infinite() {
        return Err(Error::validation(format!(
            "order must be finite and exceed 1, got {alpha}"
        )));
    }
    if target.len() != instance.num_points() {
        return Err(Error::validation(format!(
            "{} target conditionals for {} support points",
            target.len(),
            instance.num_points()
        )));
    }
    let p = instance.num_domains();
    let mut per_domain = Vec::with_capacity(p);
    let mut support_violation = None;
    for k in 0..p {
        // E_{D_k} d_α^(α-1) = Σ_x D_k(x) Σ_y T^α / Q^(α-1)
        let mut expectation = 0.0;
        for (i, (pt, t)) in instance.points.iter().zip(target).enumerate() {
            let ld = pt.label_dist.as_ref().ok_or_else(|| {
                Error::validation(format!("point {i} has no per-domain conditional labels"))
            })?;
            check_sizes(t.mass(), &ld.cond[k])?;
            if pt.densities[k] == 0.0 {
                continue;
            }
            let inner = log_power_sum(t.mass(), &ld.cond[k], alpha).exp();
            expectation += pt.densities[k] * inner;
        }
        if expectation.is_infinite() && support_violation.is_none() {
            support_violation = Some(k);
        }
        let v = if epsilon == 0.0 {
            0.0
        } else {
            expectation.powf(1.0 / alpha)
                * epsilon.powf((alpha - 1.0) / alpha)
                * m_bound.powf(1.0 / alpha)
        };
        per_domain.push(v);
    }
    let value = per_domain.iter().cloned().fold(0.0, f64::max);
    Ok(EpsilonReport {
        value,
        per_domain,
        support_violation,
    })
}

/// Reads the target conditionals stored in each point's `label_dist`.
pub fn target_conditionals(instance: &ProblemInstance) -> Result<Vec<DiscreteDistribution>> {
    instance
        .points
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let t = pt
                .label_dist
                .as_ref()
                .and_then(|ld| ld.target.clone())
                .ok_or_else(|| Error::validation(format!("point {i} has no target conditional")))?;
            DiscreteDistribution::new(t)
        })
        .collect()
}
