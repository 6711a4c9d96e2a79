//! The distribution-weighted combination predictor `h_z^η`.
//!
//! At a support point `x`,
//!
//! ```text
//! h_z^η(x) = Σ_k  (z_k D_k(x) + η U(x) / p) / (Σ_j z_j D_j(x) + η U(x))  h_k(x)
//!          = J_z(x) / K_z(x)
//! ```
//!
//! with `J_z(x) = Σ_k z_k D_k(x) h_k(x) + η U(x) H(x)`, `H` the plain mean of
//! the base predictions and `K_z(x) = Σ_k z_k D_k(x) + η U(x)`. Both `J_z`
//! and `K_z` are affine in `z`, and `K_z > 0` whenever `η > 0`.

use crate::model::ProblemInstance;
use crate::simplex::SimplexWeights;

/// Default smoothing weight `η`.
pub const DEFAULT_ETA: f64 = 1e-3;

/// Converts a desired slack `δ` and loss bound `M` into `(η, η′)` using
/// `η = δ / (2M)` and `η′ = δ / 2`.
pub fn slack_to_params(delta: f64, m_bound: f64) -> (f64, f64) {
    assert!(
        delta > 0.0 && m_bound > 0.0,
        "slack and loss bound must be positive"
    );
    (delta / (2.0 * m_bound), delta / 2.0)
}

/// Evaluation state of `h_z^η` over the whole support for one `z`.
///
/// Caches `J_z(x)`, `K_z(x)` and `H(x)` per point. Per-point sums are
/// reduced in support order so results are reproducible.
#[derive(Debug, Clone)]
pub struct CombinerContext<'a> {
    instance: &'a ProblemInstance,
    eta: f64,
    z: SimplexWeights,
    j: Vec<f64>,
    k: Vec<f64>,
    h_mean: Vec<f64>,
}

impl<'a> CombinerContext<'a> {
    pub fn new(instance: &'a ProblemInstance, eta: f64, z: &SimplexWeights) -> Self {
        assert!(eta > 0.0, "eta must be positive, got {eta}");
        assert_eq!(z.dim(), instance.num_domains(), "z has the wrong dimension");
        let p = instance.num_domains() as f64;
        let h_mean = instance
            .points
            .iter()
            .map(|pt| pt.predictions.iter().sum::<f64>() / p)
            .collect();
        let mut ctx = Self {
            instance,
            eta,
            z: z.clone(),
            j: Vec::new(),
            k: Vec::new(),
            h_mean,
        };
        ctx.refresh();
        ctx
    }

    pub fn set_z(&mut self, z: &SimplexWeights) {
        assert_eq!(z.dim(), self.instance.num_domains());
        self.z = z.clone();
        self.refresh();
    }

    fn refresh(&mut self) {
        let eu = self.eta * self.instance.uniform_mass();
        let z = self.z.as_slice();
        self.j.clear();
        self.k.clear();
        for (pt, &hm) in self.instance.points.iter().zip(&self.h_mean) {
            let mut j = eu * hm;
            let mut k = eu;
            for ((&zk, &d), &h) in z.iter().zip(&pt.densities).zip(&pt.predictions) {
                j += zk * d * h;
                k += zk * d;
            }
            self.j.push(j);
            self.k.push(k);
        }
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn z(&self) -> &SimplexWeights {
        &self.z
    }

    /// `J_z(x_i)`.
    pub fn j(&self, i: usize) -> f64 {
        self.j[i]
    }

    /// `K_z(x_i)`.
    pub fn k(&self, i: usize) -> f64 {
        self.k[i]
    }

    /// `H(x_i)`, the unweighted mean of the base predictions.
    pub fn h_mean(&self, i: usize) -> f64 {
        self.h_mean[i]
    }

    /// Per-domain combination weights at point `i`; a probability vector.
    pub fn weights(&self, i: usize) -> Vec<f64> {
        let pt = &self.instance.points[i];
        let p = self.instance.num_domains() as f64;
        let share = self.eta * self.instance.uniform_mass() / p;
        pt.densities
            .iter()
            .zip(self.z.iter())
            .map(|(&d, &zk)| (zk * d + share) / self.k[i])
            .collect()
    }

    /// `h_z^η(x_i)`.
    #[inline]
    pub fn predict(&self, i: usize) -> f64 {
        self.j[i] / self.k[i]
    }

    pub fn predictions(&self) -> Vec<f64> {
        (0..self.instance.num_points())
            .map(|i| self.predict(i))
            .collect()
    }

    /// Expected squared loss `L(D_k, h_z^η)`.
    pub fn domain_loss(&self, k: usize) -> f64 {
        self.instance
            .points
            .iter()
            .enumerate()
            .map(|(i, pt)| pt.densities[k] * pt.sq_loss(self.predict(i)))
            .sum()
    }

    /// `L(D_k, h_z^η)` for every domain.
    pub fn domain_losses(&self) -> Vec<f64> {
        let p = self.instance.num_domains();
        let mut out = vec![0.0; p];
        for (i, pt) in self.instance.points.iter().enumerate() {
            let l = pt.sq_loss(self.predict(i));
            for (o, &d) in out.iter_mut().zip(&pt.densities) {
                *o += d * l;
            }
        }
        out
    }

    /// `L(D_λ, h_z^η) = Σ_k λ_k L(D_k, h_z^η)`.
    pub fn mixture_loss(&self, lambda: &SimplexWeights) -> f64 {
        assert_eq!(lambda.dim(), self.instance.num_domains());
        self.domain_losses()
            .iter()
            .zip(lambda.iter())
            .map(|(l, w)| l * w)
            .sum()
    }
}

pub fn combine_weights(
    instance: &ProblemInstance,
    z: &SimplexWeights,
    eta: f64,
    point_index: usize,
) -> Vec<f64> {
    CombinerContext::new(instance, eta, z).weights(point_index)
}

pub fn predict(
    instance: &ProblemInstance,
    z: &SimplexWeights,
    eta: f64,
    point_index: usize,
) -> f64 {
    CombinerContext::new(instance, eta, z).predict(point_index)
}

pub fn domain_loss(instance: &ProblemInstance, k: usize, z: &SimplexWeights, eta: f64) -> f64 {
    CombinerContext::new(instance, eta, z).domain_loss(k)
}

pub fn mixture_loss(
    instance: &ProblemInstance,
    z: &SimplexWeights,
    eta: f64,
    lambda: &SimplexWeights,
) -> f64 {
    CombinerContext::new(instance, eta, z).mixture_loss(lambda)
}

/// Expected squared loss under `D_λ` of an arbitrary pointwise predictor.
pub fn predictor_mixture_loss(
    instance: &ProblemInstance,
    predictions: &[f64],
    lambda: &SimplexWeights,
) -> f64 {
    assert_eq!(predictions.len(), instance.num_points());
    instance
        .points
        .iter()
        .zip(predictions)
        .map(|(pt, &h)| {
            let mass: f64 = pt
                .densities
                .iter()
                .zip(lambda.iter())
                .map(|(d, l)| d * l)
                .sum();
            mass * pt.sq_loss(h)
        })
        .sum()
}
