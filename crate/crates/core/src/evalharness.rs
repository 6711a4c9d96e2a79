//! Mixture sweeps comparing the distribution-weighted predictor with
//! baseline ensembles, plus a brute-force simplex-grid oracle for the
//! robust-weight objective.

use serde::{Deserialize, Serialize};

use crate::combiner::{predictor_mixture_loss, CombinerContext};
use crate::dcsolver::objective;
use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::simplex::{simplex_grid, SimplexWeights};

/// Largest dimension accepted by [`brute_force_min`].
pub const MAX_GRID_DIM: usize = 3;

pub const UNIFORM: &str = "uniform";
pub const LAMBDA_COMB: &str = "lambda-comb";
pub const DW: &str = "dw";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub predictor: String,
    pub lambda: SimplexWeights,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn mse(&self, predictor: &str, lambda: &SimplexWeights) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.predictor == predictor && &r.lambda == lambda)
            .map(|r| r.mse)
    }

    pub fn predictors(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.predictor.as_str()) {
                out.push(&r.predictor);
            }
        }
        out
    }

    /// CSV with header `predictor,lambda_1..lambda_p,mse`.
    pub fn to_csv(&self) -> String {
        let p = self.rows.first().map_or(0, |r| r.lambda.dim());
        let mut out = String::from("predictor");
        for k in 1..=p {
            out.push_str(&format!(",lambda_{k}"));
        }
        out.push_str(",mse\n");
        for r in &self.rows {
            out.push_str(&r.predictor);
            for l in r.lambda.iter() {
                out.push(',');
                out.push_str(&fmt_sig(*l, 12));
            }
            out.push(',');
            out.push_str(&fmt_sig(r.mse, 12));
            out.push('\n');
        }
        out
    }
}

/// Formats `x` with `digits` significant digits in the style of C's `%g`.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{exp}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Vertices, every edge at 0.1 steps, and the barycenter.
pub fn default_lambda_grid(p: usize) -> Vec<SimplexWeights> {
    let mut grid: Vec<SimplexWeights> = (0..p).map(|k| SimplexWeights::vertex(p, k)).collect();
    for a in 0..p {
        for b in (a + 1)..p {
            for s in 1..10 {
                let t = s as f64 / 10.0;
                let mut w = vec![0.0; p];
                w[a] = 1.0 - t;
                w[b] = t;
                grid.push(SimplexWeights::new(w).expect("edge point"));
            }
        }
    }
    if p > 2 {
        grid.push(SimplexWeights::uniform(p));
    }
    grid
}

/// MSE of each source predictor, the uniform average, the λ-weighted
/// ensemble and the distribution-weighted predictor under each target
/// mixture `λ`.
pub fn evaluate_predictors(
    instance: &ProblemInstance,
    z_star: &SimplexWeights,
    eta: f64,
    lambda_grid: &[SimplexWeights],
) -> Result<EvalReport> {
    let p = instance.num_domains();
    if z_star.dim() != p {
        return Err(Error::validation(format!(
            "z has {} entries for {p} domains",
            z_star.dim()
        )));
    }
    if let Some(l) = lambda_grid.iter().find(|l| l.dim() != p) {
        return Err(Error::validation(format!(
            "mixture {:?} has the wrong dimension",
            l.as_slice()
        )));
    }
    let sources: Vec<Vec<f64>> = (0..p)
        .map(|k| instance.points.iter().map(|pt| pt.predictions[k]).collect())
        .collect();
    let uniform: Vec<f64> = instance
        .points
        .iter()
        .map(|pt| pt.predictions.iter().sum::<f64>() / p as f64)
        .collect();
    let dw = CombinerContext::new(instance, eta, z_star).predictions();

    let mut rows = Vec::new();
    for lambda in lambda_grid {
        let mut push = |name: String, preds: &[f64]| {
            rows.push(EvalRow {
                predictor: name,
                lambda: lambda.clone(),
                mse: predictor_mixture_loss(instance, preds, lambda),
            });
        };
        for (k, s) in sources.iter().enumerate() {
            push(instance.domain_names[k].clone(), s);
        }
        push(UNIFORM.into(), &uniform);
        let comb: Vec<f64> = instance
            .points
            .iter()
            .map(|pt| {
                pt.predictions
                    .iter()
                    .zip(lambda.iter())
                    .map(|(h, l)| h * l)
                    .sum()
            })
            .collect();
        push(LAMBDA_COMB.into(), &comb);
        push(DW.into(), &dw);
    }
    Ok(EvalReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMinimum {
    pub z_grid: SimplexWeights,
    pub gamma_grid: f64,
    /// Objective at every grid point, in grid order.
    pub values: Vec<(SimplexWeights, f64)>,
}

/// Exhaustive minimization of the objective over a simplex grid with
/// `grid_resolution` steps per edge.
pub fn brute_force_min(
    instance: &ProblemInstance,
    eta: f64,
    grid_resolution: usize,
) -> Result<GridMinimum> {
    let p = instance.num_domains();
    if p > MAX_GRID_DIM {
        return Err(Error::GridTooLarge {
            p,
            max: MAX_GRID_DIM,
        });
    }
    let values: Vec<(SimplexWeights, f64)> = simplex_grid(p, grid_resolution.max(1))
        .into_iter()
        .map(|z| {
            let (f, _) = objective(instance, &z, eta);
            (z, f)
        })
        .collect();
    let (z_grid, gamma_grid) = values
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(z, f)| (z.clone(), *f))
        .expect("grid is nonempty");
    Ok(GridMinimum {
        z_grid,
        gamma_grid,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::t1;

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.5, 12), "0.5");
        assert_eq!(fmt_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(fmt_sig(123456.0, 12), "123456");
        assert_eq!(fmt_sig(1.5e-7, 12), "1.5e-7");
        assert_eq!(fmt_sig(0.0, 12), "0");
        assert_eq!(fmt_sig(-2.25, 12), "-2.25");
    }

    #[test]
    fn grid_contents() {
        assert_eq!(default_lambda_grid(2).len(), 11);
        // 4 vertices + 6 edges × 9 interior points + barycenter.
        assert_eq!(default_lambda_grid(4).len(), 4 + 54 + 1);
    }

    #[test]
    fn vertex_rows_and_linearity() {
        let inst = t1();
        let z = SimplexWeights::uniform(2);
        let grid = default_lambda_grid(2);
        let rep = evaluate_predictors(&inst, &z, 0.2, &grid).unwrap();
        let e1 = SimplexWeights::vertex(2, 0);
        // h_1 is exact on domain 1's support.
        assert_eq!(rep.mse("d1", &e1), Some(0.0));
        assert_eq!(rep.mse("d2", &e1), Some(1.0));
        let e2 = SimplexWeights::vertex(2, 1);
        let mid = e1.lerp(&e2, 0.5);
        for name in rep.predictors() {
            let a = rep.mse(name, &e1).unwrap();
            let b = rep.mse(name, &e2).unwrap();
            let m = rep.mse(name, &mid).unwrap();
            if name != LAMBDA_COMB {
                assert!((m - 0.5 * (a + b)).abs() < 1e-12, "{name}");
            }
        }
        assert!(rep.rows.iter().all(|r| r.mse >= 0.0));
        let csv = rep.to_csv();
        assert!(csv.starts_with("predictor,lambda_1,lambda_2,mse\n"));
        assert_eq!(csv.lines().count(), 1 + grid.len() * 5);
    }

    #[test]
    fn equal_sources_make_uniform_identical() {
        let mut inst = t1();
        for pt in &mut inst.points {
            pt.predictions = vec![0.4, 0.4];
        }
        let grid = default_lambda_grid(2);
        let rep = evaluate_predictors(&inst, &SimplexWeights::uniform(2), 0.2, &grid).unwrap();
        for l in &grid {
            let u = rep.mse(UNIFORM, l).unwrap();
            assert_eq!(u, rep.mse("d1", l).unwrap());
            assert_eq!(u, rep.mse("d2", l).unwrap());
        }
    }

    #[test]
    fn grid_oracle_on_t1() {
        let g = brute_force_min(&t1(), 0.2, 2000).unwrap();
        assert_eq!(g.values.len(), 2001);
        assert!((g.z_grid[0] - 0.5).abs() < 1e-12);
        assert!(g.gamma_grid.abs() < 1e-15);
    }

    #[test]
    fn grid_oracle_identical_domains() {
        let mut inst = t1();
        for pt in &mut inst.points {
            pt.densities = vec![0.5, 0.5];
        }
        let g = brute_force_min(&inst, 0.2, 50).unwrap();
        assert!(g.values.iter().all(|(_, f)| *f == 0.0));
    }

    #[test]
    fn grid_oracle_rejects_large_p() {
        let inst =
            crate::synthetic::make_gaussian_problem(&crate::synthetic::GaussianBenchConfig {
                variant: crate::synthetic::Variant::FourDomain,
                n_support: 20,
                ..Default::default()
            })
            .unwrap()
            .instance;
        assert!(matches!(
            brute_force_min(&inst, 1e-3, 10),
            Err(Error::GridTooLarge { p: 4, .. })
        ));
    }
}
