//! Browser bindings for three interactive views of the solver:
//! the objective along the two-domain simplex with a DCA trace, the
//! combination weight over the plane, and `d_α` as a function of the order.
//!
//! Each view is a plain function returning JSON so it can be exercised
//! natively; the `#[wasm_bindgen]` wrappers only convert errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use dwmsa::dcsolver::{dca_solve, objective, InitialPoint, SolverConfig};
use dwmsa::renyi::d_alpha;
use dwmsa::synthetic::{
    label, make_gaussian_problem, GaussianBenchConfig, GaussianProblem, Variant,
};
use dwmsa::{DiscreteDistribution, SimplexWeights};

const ETA: f64 = dwmsa::combiner::DEFAULT_ETA;
const CURVE_POINTS: usize = 200;
const PLANE_EXTENT: f64 = 4.0;
const MAX_SUPPORT: usize = 2000;
const MAX_RESOLUTION: usize = 200;

fn problem(n_support: usize, seed: u64) -> Result<GaussianProblem, String> {
    if n_support == 0 || n_support > MAX_SUPPORT {
        return Err(format!("support size must be between 1 and {MAX_SUPPORT}"));
    }
    make_gaussian_problem(&GaussianBenchConfig {
        n_support,
        seed,
        variant: Variant::TwoDomain,
        ..GaussianBenchConfig::default()
    })
    .map_err(|e| e.to_string())
}

fn two_point(z1: f64) -> SimplexWeights {
    SimplexWeights::normalized(vec![z1, 1.0 - z1]).expect("z1 in [0, 1]")
}

#[derive(Debug, Serialize)]
pub struct ObjectiveCurve {
    pub z1: Vec<f64>,
    pub gamma: Vec<f64>,
    pub loss: [Vec<f64>; 2],
    pub trace_z1: Vec<f64>,
    pub trace_gamma: Vec<f64>,
    pub m_bound: f64,
    pub converged: bool,
}

pub fn objective_curve(
    n_support: usize,
    seed: u64,
    z1_start: f64,
    max_outer: usize,
) -> Result<ObjectiveCurve, String> {
    if !(0.0..=1.0).contains(&z1_start) {
        return Err("starting weight must lie in [0, 1]".into());
    }
    let prob = problem(n_support, seed)?;
    let inst = &prob.instance;
    let mut out = ObjectiveCurve {
        z1: Vec::with_capacity(CURVE_POINTS + 1),
        gamma: Vec::with_capacity(CURVE_POINTS + 1),
        loss: [Vec::new(), Vec::new()],
        trace_z1: Vec::new(),
        trace_gamma: Vec::new(),
        m_bound: 0.0,
        converged: false,
    };
    for i in 0..=CURVE_POINTS {
        let z1 = i as f64 / CURVE_POINTS as f64;
        let (f, losses) = objective(inst, &two_point(z1), ETA);
        out.z1.push(z1);
        out.gamma.push(f);
        out.loss[0].push(losses[0]);
        out.loss[1].push(losses[1]);
    }
    let cfg = SolverConfig {
        z0: InitialPoint::Given(two_point(z1_start)),
        max_outer: max_outer.max(1),
        ..SolverConfig::default()
    };
    let sol = dca_solve(inst, &cfg).map_err(|e| e.to_string())?;
    out.trace_z1 = sol.trace.iter().map(|t| t.z[0]).collect();
    out.trace_gamma = sol.trace.iter().map(|t| t.gamma).collect();
    out.m_bound = sol.m_bound;
    out.converged = sol.gamma_star < cfg.global_tol;
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct WeightField {
    pub resolution: usize,
    pub extent: f64,
    /// Row-major from the top-left corner, `y` decreasing by row.
    pub weight: Vec<f64>,
    pub prediction: Vec<f64>,
    pub error: Vec<f64>,
    pub support: Vec<[f64; 2]>,
}

/// Domain-1 weight and the combined prediction of `h_z` on a square grid.
///
/// Off-support densities use the same normalization as the discretized
/// instance, so on support points the values agree with the solver's.
pub fn weight_field(
    n_support: usize,
    seed: u64,
    z1: f64,
    resolution: usize,
) -> Result<WeightField, String> {
    if !(0.0..=1.0).contains(&z1) {
        return Err("weight must lie in [0, 1]".into());
    }
    if !(2..=MAX_RESOLUTION).contains(&resolution) {
        return Err(format!("resolution must be between 2 and {MAX_RESOLUTION}"));
    }
    let prob = problem(n_support, seed)?;
    let totals: Vec<f64> = (0..2)
        .map(|k| prob.support.iter().map(|&x| prob.domain_pdf(k, x)).sum())
        .collect();
    let eu = ETA / n_support as f64;
    let z = [z1, 1.0 - z1];
    let cells = resolution * resolution;
    let mut field = WeightField {
        resolution,
        extent: PLANE_EXTENT,
        weight: Vec::with_capacity(cells),
        prediction: Vec::with_capacity(cells),
        error: Vec::with_capacity(cells),
        support: prob.support.clone(),
    };
    let step = 2.0 * PLANE_EXTENT / (resolution - 1) as f64;
    for row in 0..resolution {
        let y = PLANE_EXTENT - row as f64 * step;
        for col in 0..resolution {
            let x = [-PLANE_EXTENT + col as f64 * step, y];
            let mass: Vec<f64> = (0..2)
                .map(|k| z[k] * prob.domain_pdf(k, x) / totals[k])
                .collect();
            let k_z = mass[0] + mass[1] + eu;
            let w: Vec<f64> = mass.iter().map(|m| (m + eu / 2.0) / k_z).collect();
            let h: f64 = w
                .iter()
                .zip(&prob.models)
                .map(|(wk, m)| wk * m.predict(x))
                .sum();
            field.weight.push(w[0]);
            field.prediction.push(h);
            field.error.push((h - label(x)).abs());
        }
    }
    Ok(field)
}

#[derive(Debug, Serialize)]
pub struct DivergenceCurve {
    pub alpha: Vec<f64>,
    pub d_alpha: Vec<f64>,
    /// `d_α` as `α → ∞` (the largest probability ratio).
    pub d_inf: f64,
    /// `exp(KL)`, the `α → 1` limit.
    pub d_one: f64,
}

fn parse_mass(text: &str) -> Result<DiscreteDistribution, String> {
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| format!("`{s}` is not a number"))
        })
        .collect::<Result<Vec<f64>, String>>()?;
    let total: f64 = values.iter().sum();
    if values.is_empty() || values.iter().any(|v| *v < 0.0 || !v.is_finite()) || total <= 0.0 {
        return Err("masses must be nonnegative with a positive total".into());
    }
    DiscreteDistribution::new(values.iter().map(|v| v / total).collect()).map_err(|e| e.to_string())
}

/// `d_α(P ‖ Q)` on a log-spaced grid of orders in `(1, alpha_max]`.
pub fn divergence_curve(p: &str, q: &str, alpha_max: f64) -> Result<DivergenceCurve, String> {
    let (p, q) = (parse_mass(p)?, parse_mass(q)?);
    if p.len() != q.len() {
        return Err(format!("P has {} masses and Q has {}", p.len(), q.len()));
    }
    if !(alpha_max > 1.0 && alpha_max.is_finite()) {
        return Err("largest order must be a finite number above 1".into());
    }
    let d = |a: f64| d_alpha(&p, &q, a).map_err(|e| e.to_string());
    let lo = 1.01f64.ln();
    let hi = alpha_max.ln().max(lo);
    let alpha: Vec<f64> = (0..=CURVE_POINTS)
        .map(|i| (lo + (hi - lo) * i as f64 / CURVE_POINTS as f64).exp())
        .collect();
    let d_alpha = alpha
        .iter()
        .map(|&a| d(a))
        .collect::<Result<Vec<f64>, String>>()?;
    Ok(DivergenceCurve {
        alpha,
        d_alpha,
        d_inf: d(f64::INFINITY)?,
        d_one: d(1.0)?,
    })
}

fn to_json<T: Serialize>(v: Result<T, String>) -> Result<String, String> {
    v.map(|x| serde_json::to_string(&x).expect("serializable"))
}

pub fn objective_curve_json(
    n_support: usize,
    seed: u64,
    z1_start: f64,
    max_outer: usize,
) -> Result<String, String> {
    to_json(objective_curve(n_support, seed, z1_start, max_outer))
}

pub fn weight_field_json(
    n_support: usize,
    seed: u64,
    z1: f64,
    resolution: usize,
) -> Result<String, String> {
    to_json(weight_field(n_support, seed, z1, resolution))
}

pub fn divergence_curve_json(p: &str, q: &str, alpha_max: f64) -> Result<String, String> {
    to_json(divergence_curve(p, q, alpha_max))
}

#[wasm_bindgen(js_name = objectiveCurve)]
pub fn objective_curve_js(
    n_support: u32,
    seed: u32,
    z1_start: f64,
    max_outer: u32,
) -> Result<String, JsValue> {
    objective_curve_json(
        n_support as usize,
        seed as u64,
        z1_start,
        max_outer as usize,
    )
    .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = weightField)]
pub fn weight_field_js(
    n_support: u32,
    seed: u32,
    z1: f64,
    resolution: u32,
) -> Result<String, JsValue> {
    weight_field_json(n_support as usize, seed as u64, z1, resolution as usize)
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = divergenceCurve)]
pub fn divergence_curve_js(p: &str, q: &str, alpha_max: f64) -> Result<String, JsValue> {
    divergence_curve_json(p, q, alpha_max).map_err(|e| JsValue::from_str(&e))
}
