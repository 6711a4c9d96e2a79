#![allow(dead_code)]

use dwmsa::{ProblemInstance, SimplexWeights, SupportPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance with strictly positive densities, predictions and
/// label means in [-2, 2] and a small label variance.
pub fn random_instance<R: Rng>(rng: &mut R, p: usize, n: usize) -> ProblemInstance {
    let mut raw: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..p)
                .map(|_| rng.random_range(0.05..1.0f64).powi(2))
                .collect()
        })
        .collect();
    for k in 0..p {
        let total: f64 = raw.iter().map(|r| r[k]).sum();
        for r in &mut raw {
            r[k] /= total;
        }
    }
    let points = raw
        .into_iter()
        .map(|densities| {
            let y_mean = rng.random_range(-2.0..2.0);
            let var = rng.random_range(0.0..0.5);
            SupportPoint {
                densities,
                predictions: (0..p).map(|_| rng.random_range(-2.0..2.0)).collect(),
                y_mean,
                y_sq_mean: y_mean * y_mean + var,
                label_dist: None,
            }
        })
        .collect();
    let names = (1..=p).map(|k| format!("d{k}")).collect();
    ProblemInstance::new(names, points).expect("valid random instance")
}

/// Uniform point on the simplex.
pub fn random_simplex<R: Rng>(rng: &mut R, p: usize) -> SimplexWeights {
    let draws: Vec<f64> = (0..p)
        .map(|_| -rng.random_range(1e-12..1.0f64).ln())
        .collect();
    SimplexWeights::normalized(draws).unwrap()
}

/// Random point with every coordinate at least `floor`.
pub fn random_interior<R: Rng>(rng: &mut R, p: usize, floor: f64) -> SimplexWeights {
    let z = random_simplex(rng, p);
    let w: Vec<f64> = z
        .iter()
        .map(|v| floor + (1.0 - p as f64 * floor) * v)
        .collect();
    SimplexWeights::normalized(w).unwrap()
}

pub fn two_point(z1: f64) -> SimplexWeights {
    SimplexWeights::new(vec![z1, 1.0 - z1]).unwrap()
}
