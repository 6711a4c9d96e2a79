//! Problem instances: a finite shared support with per-domain marginal
//! densities, base-predictor values and label moments.
//!
//! Under a conditional label distribution shared by all domains the
//! squared loss of any predictor at `x` depends on `D(y|x)` only through
//! `E[y|x]` and `E[y²|x]`, so those two moments are all a support point
//! carries. Per-domain conditionals over a finite label set may be added
//! for the distinct-conditionals bound calculator.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column sums within this distance of one are renormalized on load.
pub const DENSITY_RENORM_TOL: f64 = 1e-3;
/// Column sums closer than this to one are left untouched.
const DENSITY_EXACT_TOL: f64 = 1e-12;
const MOMENT_TOL: f64 = 1e-9;
const LABEL_DIST_TOL: f64 = 1e-6;

/// Per-domain conditional label distributions at one support point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDist {
    /// Shared finite label set.
    pub labels: Vec<f64>,
    /// One row per domain, each a distribution over `labels`.
    pub cond: Vec<Vec<f64>>,
    /// Target-domain conditional, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    /// `D_k(x)` for each domain.
    pub densities: Vec<f64>,
    /// `h_k(x)` for each domain.
    pub predictions: Vec<f64>,
    /// `E[y | x]`.
    pub y_mean: f64,
    /// `E[y² | x]`.
    pub y_sq_mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_dist: Option<LabelDist>,
}

impl SupportPoint {
    /// Conditional label variance `E[y²|x] - E[y|x]²`.
    pub fn label_variance(&self) -> f64 {
        self.y_sq_mean - self.y_mean * self.y_mean
    }

    /// Expected squared loss at this point of predicting `h`.
    #[inline]
    pub fn sq_loss(&self, h: f64) -> f64 {
        let r = h - self.y_mean;
        r * r + self.label_variance()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    #[serde(rename = "domains")]
    pub domain_names: Vec<String>,
    pub points: Vec<SupportPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceFormat {
    Json,
    Csv,
}

impl InstanceFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => InstanceFormat::Csv,
            _ => InstanceFormat::Json,
        }
    }
}

impl ProblemInstance {
    /// Validates the raw instance, renormalizing density columns that are
    /// within [`DENSITY_RENORM_TOL`] of summing to one.
    pub fn new(domain_names: Vec<String>, points: Vec<SupportPoint>) -> Result<Self> {
        let mut inst = Self {
            domain_names,
            points,
        };
        inst.validate_and_normalize()?;
        Ok(inst)
    }

    pub fn num_domains(&self) -> usize {
        self.domain_names.len()
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    /// The discrete uniform marginal `U(x) = 1/n`.
    pub fn uniform_mass(&self) -> f64 {
        1.0 / self.points.len() as f64
    }

    /// Density column of domain `k` over the support.
    pub fn density_column(&self, k: usize) -> Vec<f64> {
        self.points.iter().map(|pt| pt.densities[k]).collect()
    }

    /// Largest pointwise expected loss of any base predictor on the support.
    pub fn max_base_loss(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|pt| pt.predictions.iter().map(move |&h| pt.sq_loss(h)))
            .fold(0.0, f64::max)
    }

    pub fn has_label_dists(&self) -> bool {
        self.points.iter().all(|pt| pt.label_dist.is_some())
    }

    fn validate_and_normalize(&mut self) -> Result<()> {
        let p = self.domain_names.len();
        let n = self.points.len();
        if p == 0 {
            return Err(Error::schema("instance has no domains"));
        }
        if n == 0 {
            return Err(Error::schema("instance has no support points"));
        }
        for (i, pt) in self.points.iter().enumerate() {
            if pt.densities.len() != p {
                return Err(Error::schema(format!(
                    "point {i}: {} densities for {p} domains",
                    pt.densities.len()
                )));
            }
            if pt.predictions.len() != p {
                return Err(Error::schema(format!(
                    "point {i}: {} predictions for {p} domains",
                    pt.predictions.len()
                )));
            }
            if let Some(k) = pt.densities.iter().position(|d| !d.is_finite() || *d < 0.0) {
                return Err(Error::validation(format!(
                    "point {i}: density for domain {k} is {}, expected finite and nonnegative",
                    pt.densities[k]
                )));
            }
            if pt.predictions.iter().any(|h| !h.is_finite())
                || !pt.y_mean.is_finite()
                || !pt.y_sq_mean.is_finite()
            {
                return Err(Error::validation(format!(
                    "point {i}: predictions and label moments must be finite"
                )));
            }
            if pt.y_sq_mean < pt.y_mean * pt.y_mean - MOMENT_TOL {
                return Err(Error::validation(format!(
                    "point {i}: y_sq_mean {} is below y_mean² {}",
                    pt.y_sq_mean,
                    pt.y_mean * pt.y_mean
                )));
            }
            if let Some(ld) = &pt.label_dist {
                validate_label_dist(i, ld, p)?;
            }
        }
        for k in 0..p {
            let sum: f64 = self.points.iter().map(|pt| pt.densities[k]).sum();
            let dev = (sum - 1.0).abs();
            if dev > DENSITY_RENORM_TOL {
                return Err(Error::validation(format!(
                    "densities of domain {k} ({}) sum to {sum}",
                    self.domain_names[k]
                )));
            }
            if dev > DENSITY_EXACT_TOL {
                for pt in &mut self.points {
                    pt.densities[k] /= sum;
                }
            }
        }
        Ok(())
    }

    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self> {
        let raw: ProblemInstance =
            serde_json::from_reader(reader).map_err(|e| match e.classify() {
                serde_json::error::Category::Data => Error::Schema(e.to_string()),
                _ => Error::Parse(e.to_string()),
            })?;
        Self::new(raw.domain_names, raw.points)
    }

    /// Reads the CSV form: header `d1..dp,h1..hp,y_mean,y_sq_mean`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .clone();
        let ncol = headers.len();
        if ncol < 4 || (ncol - 2) % 2 != 0 {
            return Err(Error::schema(format!(
                "csv header has {ncol} columns, expected 2p + 2"
            )));
        }
        let p = (ncol - 2) / 2;
        for k in 0..p {
            let (d, h) = (&headers[k], &headers[p + k]);
            if d != format!("d{}", k + 1) || h != format!("h{}", k + 1) {
                return Err(Error::schema(format!(
                    "csv header column mismatch at domain {}: got `{d}`/`{h}`",
                    k + 1
                )));
            }
        }
        if &headers[2 * p] != "y_mean" || &headers[2 * p + 1] != "y_sq_mean" {
            return Err(Error::schema("csv header must end with y_mean,y_sq_mean"));
        }
        let mut points = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != ncol {
                return Err(Error::schema(format!(
                    "csv row {row} has {} fields, expected {ncol}",
                    rec.len()
                )));
            }
            let vals = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("csv row {row}: `{s}`: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            points.push(SupportPoint {
                densities: vals[..p].to_vec(),
                predictions: vals[p..2 * p].to_vec(),
                y_mean: vals[2 * p],
                y_sq_mean: vals[2 * p + 1],
                label_dist: None,
            });
        }
        let names = (1..=p).map(|k| format!("d{k}")).collect();
        Self::new(names, points)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn to_csv_string(&self) -> String {
        let p = self.num_domains();
        let mut out = String::new();
        let mut header: Vec<String> = (1..=p).map(|k| format!("d{k}")).collect();
        header.extend((1..=p).map(|k| format!("h{k}")));
        header.push("y_mean".into());
        header.push("y_sq_mean".into());
        out.push_str(&header.join(","));
        out.push('\n');
        for pt in &self.points {
            let row: Vec<String> = pt
                .densities
                .iter()
                .chain(&pt.predictions)
                .chain([&pt.y_mean, &pt.y_sq_mean])
                .map(|v| format!("{v:?}"))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn validate_label_dist(i: usize, ld: &LabelDist, p: usize) -> Result<()> {
    let m = ld.labels.len();
    if m == 0 {
        return Err(Error::schema(format!("point {i}: empty label set")));
    }
    if ld.cond.len() != p {
        return Err(Error::schema(format!(
            "point {i}: label_dist has {} rows for {p} domains",
            ld.cond.len()
        )));
    }
    let rows = ld.cond.iter().chain(ld.target.iter());
    for (k, row) in rows.enumerate() {
        if row.len() != m {
            return Err(Error::schema(format!(
                "point {i}: label_dist row {k} has {} entries for {m} labels",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::validation(format!(
                "point {i}: label_dist row {k} has a negative or non-finite entry"
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > LABEL_DIST_TOL {
            return Err(Error::validation(format!(
                "point {i}: label_dist row {k} sums to {s}"
            )));
        }
    }
    Ok(())
}

/// Reads an instance from a stream in the given format.
pub fn load_instance<R: Read>(reader: R, format: InstanceFormat) -> Result<ProblemInstance> {
    match format {
        InstanceFormat::Json => ProblemInstance::from_json_reader(reader),
        InstanceFormat::Csv => ProblemInstance::from_csv_reader(reader),
    }
}

/// Reads an instance from disk, choosing the format by file extension.
pub fn load_instance_path(path: &Path) -> Result<ProblemInstance> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_instance(
        std::io::BufReader::new(file),
        InstanceFormat::from_path(path),
    )
}

/// Builds an instance whose densities are the empirical marginals of
/// per-domain samples over a shared point set.
///
/// `samples[k]` lists indices into the support drawn from domain `k`.
/// Points never sampled keep zero density in every domain.
pub fn empirical_instance_from_samples(
    domain_names: Vec<String>,
    samples: &[Vec<usize>],
    predictions: Vec<Vec<f64>>,
    moments: Vec<(f64, f64)>,
) -> Result<ProblemInstance> {
    let p = domain_names.len();
    let n = predictions.len();
    if samples.len() != p {
        return Err(Error::schema(format!(
            "{} sample sets for {p} domains",
            samples.len()
        )));
    }
    if moments.len() != n {
        return Err(Error::schema(format!(
            "{} label moments for {n} support points",
            moments.len()
        )));
    }
    let mut counts = vec![vec![0usize; p]; n];
    for (k, s) in samples.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::validation(format!(
                "domain {k} ({}) has no samples",
                domain_names[k]
            )));
        }
        for &x in s {
            if x >= n {
                return Err(Error::validation(format!(
                    "domain {k} sample {x} is outside the {n}-point support"
                )));
            }
            counts[x][k] += 1;
        }
    }
    let points = counts
        .into_iter()
        .zip(predictions)
        .zip(moments)
        .map(|((c, h), (y_mean, y_sq_mean))| SupportPoint {
            densities: c
                .iter()
                .enumerate()
                .map(|(k, &ck)| ck as f64 / samples[k].len() as f64)
                .collect(),
            predictions: h,
            y_mean,
            y_sq_mean,
            label_dist: None,
        })
        .collect();
    ProblemInstance::new(domain_names, points)
}
