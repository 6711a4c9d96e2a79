//! Two-dimensional Gaussian-mixture benchmark.
//!
//! Four unit-variance Gaussians sit at `(1, 1)`, `(-1, 1)`, `(-1, -1)` and
//! `(1, -1)`. In the two-domain variant domain 1 is the uniform mixture of
//! the first three and domain 2 of the last three; in the four-domain
//! variant domain `k` mixes components `k` and `k + 1 (mod 4)`. Labels are
//! `f(x) = x₁² + x₂²` and each domain gets its own least-squares linear
//! regressor.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ProblemInstance, SupportPoint};

pub const COMPONENT_MEANS: [[f64; 2]; 4] = [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    TwoDomain,
    FourDomain,
}

impl Variant {
    /// Mixture components of each domain.
    pub fn components(self) -> Vec<Vec<usize>> {
        match self {
            Variant::TwoDomain => vec![vec![0, 1, 2], vec![1, 2, 3]],
            Variant::FourDomain => (0..4).map(|k| vec![k, (k + 1) % 4]).collect(),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_domain" | "two-domain" => Ok(Variant::TwoDomain),
            "four_domain" | "four-domain" => Ok(Variant::FourDomain),
            _ => Err(Error::validation(format!("unknown variant `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaussianBenchConfig {
    pub n_train: usize,
    pub n_support: usize,
    pub seed: u64,
    pub variant: Variant,
}

impl Default for GaussianBenchConfig {
    fn default() -> Self {
        Self {
            n_train: 200,
            n_support: 500,
            seed: 7,
            variant: Variant::TwoDomain,
        }
    }
}

/// The labeling function `x₁² + x₂²`.
pub fn label(x: [f64; 2]) -> f64 {
    x[0] * x[0] + x[1] * x[1]
}

/// Density of the unit-variance Gaussian component `c` at `x`.
pub fn component_pdf(c: usize, x: [f64; 2]) -> f64 {
    let m = COMPONENT_MEANS[c];
    let d2 = (x[0] - m[0]).powi(2) + (x[1] - m[1]).powi(2);
    (-0.5 * d2).exp() / (2.0 * std::f64::consts::PI)
}

/// Density of an equal-weight mixture of components at `x`.
pub fn mixture_pdf(components: &[usize], x: [f64; 2]) -> f64 {
    components.iter().map(|&c| component_pdf(c, x)).sum::<f64>() / components.len() as f64
}

pub fn sample_component<R: Rng>(rng: &mut R, c: usize) -> [f64; 2] {
    let m = COMPONENT_MEANS[c];
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    [m[0] + a, m[1] + b]
}

pub fn sample_mixture<R: Rng>(rng: &mut R, components: &[usize]) -> [f64; 2] {
    let c = components[rng.random_range(0..components.len())];
    sample_component(rng, c)
}

/// Affine predictor `a·x + b` on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: [f64; 2],
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, x: [f64; 2]) -> f64 {
        self.weights[0] * x[0] + self.weights[1] * x[1] + self.intercept
    }
}

/// Ordinary least squares with intercept through the normal equations.
pub fn fit_linear(points: &[([f64; 2], f64)]) -> Result<LinearModel> {
    if points.len() < 3 {
        return Err(Error::DegenerateDesign {
            seed: None,
            reason: format!("{} points, need at least 3", points.len()),
        });
    }
    let mut xtx = Matrix3::<f64>::zeros();
    let mut xty = Vector3::<f64>::zeros();
    for (x, y) in points {
        let row = Vector3::new(x[0], x[1], 1.0);
        xtx += row * row.transpose();
        xty += row * *y;
    }
    // Relative determinant test catches collinear designs that rounding
    // would otherwise let through.
    let scale = xtx.diagonal().iter().product::<f64>();
    if !(xtx.determinant().abs() > 1e-12 * scale) {
        return Err(Error::DegenerateDesign {
            seed: None,
            reason: "sample points are collinear".into(),
        });
    }
    let chol = xtx.cholesky().ok_or_else(|| Error::DegenerateDesign {
        seed: None,
        reason: "normal matrix is not positive definite".into(),
    })?;
    let sol = chol.solve(&xty);
    Ok(LinearModel {
        weights: [sol[0], sol[1]],
        intercept: sol[2],
    })
}

/// A generated benchmark: the instance plus the continuous-space pieces
/// it was built from.
#[derive(Debug, Clone)]
pub struct GaussianProblem {
    pub config: GaussianBenchConfig,
    pub models: Vec<LinearModel>,
    pub support: Vec<[f64; 2]>,
    pub instance: ProblemInstance,
}

impl GaussianProblem {
    pub fn domain_pdf(&self, k: usize, x: [f64; 2]) -> f64 {
        mixture_pdf(&self.config.variant.components()[k], x)
    }
}

/// Draws training sets, fits per-domain regressors and discretizes the
/// domain densities onto a fresh support drawn from the balanced union
/// of the domains.
pub fn make_gaussian_problem(config: &GaussianBenchConfig) -> Result<GaussianProblem> {
    if config.n_train < 3 {
        return Err(Error::validation(format!(
            "n_train = {} must be at least 3",
            config.n_train
        )));
    }
    if config.n_support == 0 {
        return Err(Error::validation("n_support must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let domains = config.variant.components();
    let p = domains.len();

    let mut models = Vec::with_capacity(p);
    for comps in &domains {
        let train: Vec<([f64; 2], f64)> = (0..config.n_train)
            .map(|_| {
                let x = sample_mixture(&mut rng, comps);
                (x, label(x))
            })
            .collect();
        let model = fit_linear(&train).map_err(|e| match e {
            Error::DegenerateDesign { reason, .. } => Error::DegenerateDesign {
                seed: Some(config.seed),
                reason,
            },
            other => other,
        })?;
        models.push(model);
    }

    let support: Vec<[f64; 2]> = (0..config.n_support)
        .map(|_| {
            let k = rng.random_range(0..p);
            sample_mixture(&mut rng, &domains[k])
        })
        .collect();

    let mut points: Vec<SupportPoint> = support
        .iter()
        .map(|&x| {
            let y = label(x);
            SupportPoint {
                densities: domains.iter().map(|c| mixture_pdf(c, x)).collect(),
                predictions: models.iter().map(|m| m.predict(x)).collect(),
                y_mean: y,
                y_sq_mean: y * y,
                label_dist: None,
            }
        })
        .collect();
    for k in 0..p {
        let total: f64 = points.iter().map(|pt| pt.densities[k]).sum();
        for pt in &mut points {
            pt.densities[k] /= total;
        }
    }
    let names = (1..=p).map(|k| format!("D{k}")).collect();
    let instance = ProblemInstance::new(names, points)?;
    Ok(GaussianProblem {
        config: *config,
        models,
        support,
        instance,
    })
}
