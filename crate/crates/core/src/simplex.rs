//! Points of the probability simplex and Euclidean projection onto it.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ w_k = 1` accepted by [`SimplexWeights::new`].
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;

/// A point `w` of the `p`-simplex: `w_k ≥ 0`, `Σ w_k = 1`.
///
/// Used both for the solver iterate `z` and for target mixtures `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::validation(
                "simplex weights must have at least one entry",
            ));
        }
        if let Some((k, v)) = w
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::validation(format!(
                "simplex weight {k} is {v}, expected a finite nonnegative value"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::validation(format!(
                "simplex weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self(w))
    }

    /// Scales a nonnegative vector with positive sum onto the simplex.
    pub fn normalized(w: Vec<f64>) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0) || w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::validation(
                "cannot normalize: entries must be finite, nonnegative, with positive sum",
            ));
        }
        Ok(Self(w.into_iter().map(|v| v / sum).collect()))
    }

    pub fn uniform(p: usize) -> Self {
        assert!(p > 0, "simplex dimension must be positive");
        Self(vec![1.0 / p as f64; p])
    }

    pub fn vertex(p: usize, k: usize) -> Self {
        assert!(k < p, "vertex index {k} out of range for p = {p}");
        let mut w = vec![0.0; p];
        w[k] = 1.0;
        Self(w)
    }

    /// Euclidean projection of an arbitrary vector onto the simplex.
    pub fn project(v: &[f64]) -> Self {
        Self(project_onto_simplex(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Convex combination `(1 - t) self + t other`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }
}

impl Index<usize> for SimplexWeights {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl TryFrom<Vec<f64>> for SimplexWeights {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        Self::new(w)
    }
}

impl From<SimplexWeights> for Vec<f64> {
    fn from(w: SimplexWeights) -> Self {
        w.0
    }
}

/// Sort-based projection onto `{w : w ≥ 0, Σ w = 1}` in `O(p log p)`.
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty());
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // Absorb rounding so the result sums to one.
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        w.iter_mut().for_each(|x| *x /= s);
    }
    w
}

/// All points `i / resolution` of the simplex grid in dimension `p`,
/// enumerated in lexicographic order of the leading coordinates.
pub fn simplex_grid(p: usize, resolution: usize) -> Vec<SimplexWeights> {
    assert!(p > 0 && resolution > 0);
    let mut out = Vec::new();
    let mut counts = vec![0usize; p];
    fill_grid(&mut counts, 0, resolution, resolution, &mut out);
    out
}

fn fill_grid(
    counts: &mut [usize],
    idx: usize,
    remaining: usize,
    resolution: usize,
    out: &mut Vec<SimplexWeights>,
) {
    let p = counts.len();
    if idx == p - 1 {
        counts[idx] = remaining;
        let r = resolution as f64;
        out.push(SimplexWeights(
            counts.iter().map(|&c| c as f64 / r).collect(),
        ));
        return;
    }
    for c in 0..=remaining {
        counts[idx] = c;
        fill_grid(counts, idx + 1, remaining - c, resolution, out);
    }
}
