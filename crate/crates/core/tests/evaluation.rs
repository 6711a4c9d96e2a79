mod common;

use dwmsa::combiner::{mixture_loss, CombinerContext};
use dwmsa::dcsolver::{certify, dca_solve, SolverConfig};
use dwmsa::evalharness::{default_lambda_grid, evaluate_predictors, DW, LAMBDA_COMB, UNIFORM};
use dwmsa::simplex::simplex_grid;
use dwmsa::SimplexWeights;

use common::{random_instance, random_simplex, rng};

const ETA: f64 = 1e-3;

#[test]
fn vertex_rows_are_source_losses() {
    let mut r = rng(1);
    let inst = random_instance(&mut r, 3, 25);
    let z = random_simplex(&mut r, 3);
    let grid = default_lambda_grid(3);
    let rep = evaluate_predictors(&inst, &z, ETA, &grid).unwrap();
    for k in 0..3 {
        let e = SimplexWeights::vertex(3, k);
        let direct: f64 = inst
            .points
            .iter()
            .map(|pt| pt.densities[k] * pt.sq_loss(pt.predictions[k]))
            .sum();
        let row = rep.mse(&inst.domain_names[k], &e).unwrap();
        assert!((row - direct).abs() < 1e-12);
        // λ-comb at a vertex is the source predictor itself.
        assert!((rep.mse(LAMBDA_COMB, &e).unwrap() - row).abs() < 1e-12);
    }
}

#[test]
fn fixed_predictors_are_linear_in_the_mixture() {
    let mut r = rng(2);
    let inst = random_instance(&mut r, 3, 25);
    let z = random_simplex(&mut r, 3);
    let a = random_simplex(&mut r, 3);
    let b = random_simplex(&mut r, 3);
    let mid = a.lerp(&b, 0.5);
    let grid = vec![a.clone(), b.clone(), mid.clone()];
    let rep = evaluate_predictors(&inst, &z, ETA, &grid).unwrap();
    for name in rep.predictors() {
        if name == LAMBDA_COMB {
            continue;
        }
        let (ma, mb, mm) = (
            rep.mse(name, &a).unwrap(),
            rep.mse(name, &b).unwrap(),
            rep.mse(name, &mid).unwrap(),
        );
        assert!((mm - 0.5 * (ma + mb)).abs() < 1e-12, "{name}");
    }
    let dw = mixture_loss(&inst, &z, ETA, &a);
    assert!((rep.mse(DW, &a).unwrap() - dw).abs() < 1e-12);
    assert!(rep.rows.iter().all(|row| row.mse >= 0.0));
}

#[test]
fn dw_bounded_by_worst_vertex_and_certificate() {
    let mut r = rng(3);
    let inst = random_instance(&mut r, 3, 30);
    let cfg = SolverConfig {
        global_tol: 1e-9,
        max_outer: 2000,
        ..SolverConfig::default()
    };
    let sol = dca_solve(&inst, &cfg).unwrap();
    let cert = certify(&inst, &sol.z_star, ETA, 1e-4, 1e-2);
    let losses = CombinerContext::new(&inst, ETA, &sol.z_star).domain_losses();
    let top = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mixed: f64 = losses
        .iter()
        .zip(sol.z_star.iter())
        .map(|(l, w)| l * w)
        .sum();
    let grid = simplex_grid(3, 10);
    let rep = evaluate_predictors(&inst, &sol.z_star, ETA, &grid).unwrap();
    for lambda in &grid {
        let dw = rep.mse(DW, lambda).unwrap();
        assert!(dw <= top * (1.0 + 1e-12));
        if cert.is_near_global {
            assert!(dw <= (mixed + cert.gamma_value) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn uniform_row_ignores_the_weight() {
    let mut r = rng(4);
    let inst = random_instance(&mut r, 2, 10);
    let grid = default_lambda_grid(2);
    let a = evaluate_predictors(&inst, &SimplexWeights::vertex(2, 0), ETA, &grid).unwrap();
    let b = evaluate_predictors(&inst, &SimplexWeights::uniform(2), ETA, &grid).unwrap();
    for l in &grid {
        assert_eq!(a.mse(UNIFORM, l), b.mse(UNIFORM, l));
    }
}

#[test]
fn wrong_dimensions_are_rejected() {
    let mut r = rng(5);
    let inst = random_instance(&mut r, 2, 10);
    assert!(evaluate_predictors(
        &inst,
        &SimplexWeights::uniform(3),
        ETA,
        &default_lambda_grid(2)
    )
    .is_err());
    assert!(evaluate_predictors(
        &inst,
        &SimplexWeights::uniform(2),
        ETA,
        &default_lambda_grid(3)
    )
    .is_err());
}
