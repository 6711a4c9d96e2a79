//! Difference-of-convex pieces of the robust-weight objective.
//!
//! For every domain `k`,
//!
//! ```text
//! L(D_k, h_z) - L(D_z, h_z) = u_k(z) - v_k(z)
//! u_k(z) = Σ_x (D_k + ηU)(x) [ℓ_x(h_z(x)) - 2M log K_z(x)]
//! v_k(z) = Σ_x K_z(x) ℓ_x(h_z(x))   - 2M Σ_x (D_k + ηU)(x) log K_z(x)
//! ```
//!
//! where `ℓ_x(h) = h² - 2 E[y|x] h + E[y²|x]` and `K_z(x) ℓ_x(h_z(x))`
//! expands to `J_z²/K_z - 2E[y|x] J_z + E[y²|x] K_z`. Both are convex on the
//! simplex when `M` bounds the pointwise expected loss of every base
//! predictor.
//!
//! Gradients use `∂K_z/∂z_j = D_j(x)`, `∂J_z/∂z_j = D_j(x) h_j(x)` and hence
//! `∂h_z/∂z_j = D_j(x) (h_j(x) - h_z(x)) / K_z(x)`.

use crate::combiner::CombinerContext;
use crate::model::ProblemInstance;
use crate::simplex::SimplexWeights;

/// `u_k`, `v_k` and their gradients for every domain at one `z`.
#[derive(Debug, Clone)]
pub struct DcTerms {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub grad_u: Vec<Vec<f64>>,
    pub grad_v: Vec<Vec<f64>>,
}

/// Which pieces [`dc_terms`] should compute.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Want {
    pub v: bool,
}

pub fn dc_terms(instance: &ProblemInstance, z: &SimplexWeights, eta: f64, m_bound: f64) -> DcTerms {
    dc_terms_with(instance, z, eta, m_bound, Want { v: true })
}

/// [`dc_terms`] at any nonnegative weight vector, not necessarily summing
/// to one. Both pieces are defined wherever every `K_z(x)` is positive.
pub fn dc_terms_unconstrained(
    instance: &ProblemInstance,
    z: &[f64],
    eta: f64,
    m_bound: f64,
) -> DcTerms {
    assert_eq!(z.len(), instance.num_domains(), "z has the wrong dimension");
    assert!(z.iter().all(|&w| w >= 0.0), "weights must be nonnegative");
    assert!(eta > 0.0, "eta must be positive, got {eta}");
    terms_at(instance, z, eta, m_bound, Want { v: true })
}

pub(crate) fn dc_terms_with(
    instance: &ProblemInstance,
    z: &SimplexWeights,
    eta: f64,
    m_bound: f64,
    want: Want,
) -> DcTerms {
    assert!(eta > 0.0, "eta must be positive, got {eta}");
    assert_eq!(z.dim(), instance.num_domains(), "z has the wrong dimension");
    terms_at(instance, z.as_slice(), eta, m_bound, want)
}

fn terms_at(instance: &ProblemInstance, z: &[f64], eta: f64, m_bound: f64, want: Want) -> DcTerms {
    let p = instance.num_domains();
    let eu = eta * instance.uniform_mass();
    let mut u = vec![0.0; p];
    let mut grad_u = vec![vec![0.0; p]; p];
    // Shared first term of v_k and its gradient.
    let mut v_common = 0.0;
    let mut grad_v_common = vec![0.0; p];
    // Σ_x (D_k + ηU) log K and its gradient, per k.
    let mut log_term = vec![0.0; p];
    let mut grad_log = vec![vec![0.0; p]; p];

    let mut dphi = vec![0.0; p];
    let mut dlogk = vec![0.0; p];
    for pt in &instance.points {
        let mut kz = eu;
        let mut jz = eu * pt.predictions.iter().sum::<f64>() / p as f64;
        for ((&w, &d), &hk) in z.iter().zip(&pt.densities).zip(&pt.predictions) {
            kz += w * d;
            jz += w * d * hk;
        }
        let h = jz / kz;
        let loss = pt.sq_loss(h);
        let lnk = kz.ln();
        let resid = h - pt.y_mean;
        for j in 0..p {
            let dh = pt.densities[j] * (pt.predictions[j] - h) / kz;
            dlogk[j] = pt.densities[j] / kz;
            dphi[j] = 2.0 * resid * dh - 2.0 * m_bound * dlogk[j];
        }
        let phi = loss - 2.0 * m_bound * lnk;
        for k in 0..p {
            let wk = pt.densities[k] + eu;
            u[k] += wk * phi;
            for j in 0..p {
                grad_u[k][j] += wk * dphi[j];
            }
            if want.v {
                log_term[k] += wk * lnk;
                for j in 0..p {
                    grad_log[k][j] += wk * dlogk[j];
                }
            }
        }
        if want.v {
            v_common += kz * loss;
            for j in 0..p {
                grad_v_common[j] +=
                    pt.densities[j] * (loss + 2.0 * resid * (pt.predictions[j] - h));
            }
        }
    }

    let (v, grad_v) = if want.v {
        let v = log_term
            .iter()
            .map(|lt| v_common - 2.0 * m_bound * lt)
            .collect();
        let grad_v = grad_log
            .iter()
            .map(|gl| {
                gl.iter()
                    .zip(&grad_v_common)
                    .map(|(g, c)| c - 2.0 * m_bound * g)
                    .collect()
            })
            .collect();
        (v, grad_v)
    } else {
        (Vec::new(), Vec::new())
    };
    DcTerms {
        u,
        v,
        grad_u,
        grad_v,
    }
}

/// `(u_k(z), ∇u_k(z))`.
pub fn uk_value_grad(
    instance: &ProblemInstance,
    k: usize,
    z: &SimplexWeights,
    eta: f64,
    m_bound: f64,
) -> (f64, Vec<f64>) {
    let mut t = dc_terms_with(instance, z, eta, m_bound, Want { v: false });
    (t.u[k], t.grad_u.swap_remove(k))
}

/// `(v_k(z), ∇v_k(z))`.
pub fn vk_value_grad(
    instance: &ProblemInstance,
    k: usize,
    z: &SimplexWeights,
    eta: f64,
    m_bound: f64,
) -> (f64, Vec<f64>) {
    let mut t = dc_terms(instance, z, eta, m_bound);
    (t.v[k], t.grad_v.swap_remove(k))
}

/// Pointwise decomposition `(h_z(x) - y)² = f_z(x, y) - g_z(x)` with
/// `f_z = (h_z - y)² - 2M log K_z` and `g_z = -2M log K_z`.
pub fn fz_gz_decomposition(
    instance: &ProblemInstance,
    z: &SimplexWeights,
    eta: f64,
    m_bound: f64,
    point_index: usize,
    y: f64,
) -> (f64, f64) {
    let ctx = CombinerContext::new(instance, eta, z);
    let g = -2.0 * m_bound * ctx.k(point_index).ln();
    let r = ctx.predict(point_index) - y;
    (r * r + g, g)
}
