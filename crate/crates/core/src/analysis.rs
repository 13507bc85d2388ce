//! Barren-plateau variance estimation, decay fits, gradient-norm scans,
//! and Hadamard-test resource accounting.
//!
//! Variance estimation draws parameter vectors uniformly from [0, 4 pi]
//! per component (the periodicity interval that makes the expected
//! gradient exactly zero) and evaluates the exact parameter-shift
//! derivative of one component per sample. Sample evaluations run in
//! parallel; accumulation uses Neumaier compensated summation in sample
//! order, so results are deterministic.

use crate::circuit::{build_ansatz, lower, resources};
use crate::cost::{CostEvaluator, CostKind};
use crate::error::{Error, Result};
use crate::hadamard::{enumerate_tests, HadamardRunner};
use crate::optimizer::SolveReport;
use crate::problems::ProblemInstance;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Sampling interval for the variance estimator.
pub const VARIANCE_DOMAIN: (f64, f64) = (0.0, 4.0 * std::f64::consts::PI);

/// Monte-Carlo statistics of one gradient component.
///
/// `se_variance` uses the normal-approximation formula
/// var * sqrt(2 / (samples - 1)); heavy-tailed derivative distributions
/// make it an underestimate, which is acceptable for the trend checks
/// it supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientStats {
    pub component: usize,
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
}

impl GradientStats {
    pub fn csv_header() -> &'static str {
        "n,layers,kind,component,samples,mean,variance,se_mean,se_variance"
    }

    pub fn csv_row(&self, n: usize, layers: usize, kind: CostKind) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            n,
            layers,
            kind,
            self.component,
            self.samples,
            self.mean,
            self.variance,
            self.se_mean,
            self.se_variance
        )
    }
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Monte-Carlo estimate of Var_theta[dC/dtheta_component] with theta
/// uniform over [0, 4 pi]^m, using the exact parameter-shift derivative.
pub fn estimate_gradient_variance(
    inst: &ProblemInstance,
    kind: CostKind,
    layers: usize,
    component: usize,
    samples: usize,
    seed: u64,
) -> Result<GradientStats> {
    if samples < 2 {
        return Err(Error::Invalid("variance estimation needs at least 2 samples".into()));
    }
    let evaluator = CostEvaluator::new(inst, layers)?;
    let m = evaluator.parameter_count();
    if component >= m {
        return Err(Error::Invalid(format!(
            "component {component} out of range for {m} parameters"
        )));
    }
    let derivatives: Result<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let theta: Vec<f64> =
                (0..m).map(|_| rng.gen_range(VARIANCE_DOMAIN.0..VARIANCE_DOMAIN.1)).collect();
            evaluator.gradient_component(&theta, kind, component)
        })
        .collect();
    let derivatives = derivatives?;
    let s = samples as f64;
    let mean = neumaier_sum(derivatives.iter().copied()) / s;
    let variance =
        neumaier_sum(derivatives.iter().map(|d| (d - mean) * (d - mean))) / (s - 1.0);
    Ok(GradientStats {
        component,
        samples,
        mean,
        variance,
        se_mean: (variance / s).sqrt(),
        se_variance: variance * (2.0 / (s - 1.0)).sqrt(),
    })
}

/// Least squares of ln(variance) against n. Returns (slope, intercept,
/// r_squared).
pub fn fit_variance_decay(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 3 {
        return Err(Error::Invalid("decay fit needs at least 3 points".into()));
    }
    if let Some((n, v)) = points.iter().find(|(_, v)| *v <= 0.0) {
        return Err(Error::Invalid(format!("non-positive variance {v} at n = {n}")));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| *n).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let k = points.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / k;
    let mean_y = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("decay fit needs distinct n values".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let r_squared = if ss_tot <= f64::EPSILON * k { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((slope, intercept, r_squared))
}

/// Gradient norms at `count` uniformly random points in [0, 2 pi)^m,
/// sorted ascending.
pub fn gradient_norm_scan(
    inst: &ProblemInstance,
    layers: usize,
    kind: CostKind,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Invalid("scan needs at least one point".into()));
    }
    let evaluator = CostEvaluator::new(inst, layers)?;
    let m = evaluator.parameter_count();
    let norms: Result<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let theta: Vec<f64> =
                (0..m).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            Ok(crate::numerics::norm2_real(&evaluator.gradient(&theta, kind)?))
        })
        .collect();
    let mut norms = norms?;
    norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(norms)
}

/// Gradient norms along the points a solve visited, in visit order.
/// Requires the solve to have recorded its points.
pub fn trajectory_gradient_norms(
    inst: &ProblemInstance,
    layers: usize,
    kind: CostKind,
    report: &SolveReport,
) -> Result<Vec<f64>> {
    let points = report.theta_trajectory.as_ref().ok_or_else(|| {
        Error::Invalid("solve did not record its points; set record_theta".into())
    })?;
    let evaluator = CostEvaluator::new(inst, layers)?;
    let norms: Result<Vec<f64>> = points
        .par_iter()
        .map(|theta| Ok(crate::numerics::norm2_real(&evaluator.gradient(theta, kind)?)))
        .collect();
    norms
}

/// Mean lowered gate counts and depth over one circuit family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResources {
    pub circuits: usize,
    pub mean_counts: BTreeMap<String, f64>,
    pub mean_total: f64,
    pub mean_depth: f64,
}

/// Averaged lowered resources of the denominator and numerator test
/// families of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceSummary {
    pub denominator: FamilyResources,
    pub numerator: FamilyResources,
}

impl ResourceSummary {
    pub fn csv_header() -> &'static str {
        "family,n,circuit_family,gate_kind,mean_count,mean_depth"
    }

    pub fn csv_rows(&self, family: &str, n: usize) -> String {
        let mut out = String::new();
        for (name, stats) in
            [("denominator", &self.denominator), ("numerator", &self.numerator)]
        {
            for (kind, count) in &stats.mean_counts {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    family, n, name, kind, count, stats.mean_depth
                ));
            }
            out.push_str(&format!(
                "{},{},{},TOTAL,{},{}\n",
                family, n, name, stats.mean_total, stats.mean_depth
            ));
        }
        out
    }
}

fn average_family(reports: &[crate::circuit::ResourceReport]) -> FamilyResources {
    let k = reports.len() as f64;
    let mut mean_counts: BTreeMap<String, f64> = BTreeMap::new();
    let mut total = 0.0;
    let mut depth = 0.0;
    for r in reports {
        for (kind, count) in &r.counts {
            *mean_counts.entry(kind.clone()).or_insert(0.0) += *count as f64;
        }
        total += r.total as f64;
        depth += r.depth as f64;
    }
    for v in mean_counts.values_mut() {
        *v /= k;
    }
    FamilyResources {
        circuits: reports.len(),
        mean_counts,
        mean_total: total / k,
        mean_depth: depth / k,
    }
}

/// Builds every Hadamard test circuit for the instance, lowers it, and
/// averages gate counts and depth per family. Gate counts do not depend
/// on the angles, so the ansatz is built at theta = 0.
pub fn resource_report(
    inst: &ProblemInstance,
    layers: usize,
    kind: CostKind,
) -> Result<ResourceSummary> {
    let n = inst.n;
    let m = crate::circuit::ansatz_parameter_count(n, layers);
    let theta = vec![0.0; m];
    let ansatz = build_ansatz(n, layers, &theta)?;
    let runner = HadamardRunner::new(&inst.lcu, &inst.b_circuit, ansatz)?;
    let (specs, _) = enumerate_tests(inst.lcu.len(), n, kind)?;
    let reports: Result<Vec<(bool, crate::circuit::ResourceReport)>> = specs
        .par_iter()
        .map(|spec| {
            let circuit = runner.build_circuit(spec, &theta)?;
            let lowered = lower(&circuit)?;
            Ok((spec.is_numerator(), resources(&lowered)?))
        })
        .collect();
    let reports = reports?;
    let denominator: Vec<_> =
        reports.iter().filter(|(num, _)| !num).map(|(_, r)| r.clone()).collect();
    let numerator: Vec<_> =
        reports.iter().filter(|(num, _)| *num).map(|(_, r)| r.clone()).collect();
    if denominator.is_empty() || numerator.is_empty() {
        return Err(Error::Invalid(
            "resource report needs at least one circuit per family (L >= 2)".into(),
        ));
    }
    Ok(ResourceSummary {
        denominator: average_family(&denominator),
        numerator: average_family(&numerator),
    })
}
