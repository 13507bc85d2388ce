//! Derivative-free optimization and the end-to-end solve loop.
//!
//! [`cobyla_minimize`] is a linear-approximation trust-region method in the
//! COBYLA family: it keeps a simplex of m+1 points, interpolates a linear
//! model of the objective on its edges, and steps to the model minimizer on
//! the trust-region sphere. Iterations either take that step, or move a
//! vertex to restore simplex geometry (every vertex within 2.1 rho of the
//! best one and at distance at least 0.25 rho from the others' span). The
//! radius shrinks by half after a step with poor predicted-to-actual
//! reduction and floors at the final radius; from there the run keeps
//! polling until the no-improvement window closes, so the final-radius
//! condition surfaces through the window-based stop.
//!
//! Termination: the incumbent best failing to improve by more than 1e-12
//! for `no_improve_window` consecutive evaluations after simplex
//! construction, or the evaluation budget. On a constant objective the
//! run stops after exactly (m + 1) + no_improve_window evaluations.

use crate::cost::{CostEvaluator, CostKind};
use crate::error::{Error, Result};
use crate::numerics::cosine_alignment;
use crate::problems::ProblemInstance;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Minimum decrease of the incumbent that counts as an improvement.
pub const IMPROVEMENT_TOL: f64 = 1e-12;

const GEOMETRY_ALPHA: f64 = 0.25;
const GEOMETRY_BETA: f64 = 2.1;
const SHRINK_FACTOR: f64 = 0.5;
const ACCEPT_RATIO: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Initial trust radius in radians.
    pub initial_trust_radius: f64,
    /// Final trust radius; the radius floors here.
    pub final_trust_radius: f64,
    /// Evaluations without improvement that end the run.
    pub no_improve_window: usize,
    pub max_evaluations: usize,
    pub seed: u64,
    /// Record every visited point (for gradient scans along a trajectory).
    #[serde(default)]
    pub record_theta: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            initial_trust_radius: 0.5,
            final_trust_radius: 1e-6,
            no_improve_window: 100,
            max_evaluations: 100_000,
            seed: 0,
            record_theta: false,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.final_trust_radius > 0.0 && self.final_trust_radius < self.initial_trust_radius)
        {
            return Err(Error::Invalid(
                "final trust radius must be positive and below the initial radius".into(),
            ));
        }
        if self.no_improve_window == 0 {
            return Err(Error::Invalid("no-improvement window must be at least 1".into()));
        }
        if self.max_evaluations == 0 {
            return Err(Error::Invalid("evaluation budget must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoImprovementWindow,
    MaxEvaluations,
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    /// Objective value of every evaluation in order.
    pub trajectory: Vec<f64>,
    /// Visited points, when requested.
    pub visited: Option<Vec<Vec<f64>>>,
    pub stop: StopReason,
}

struct Tracker<'f> {
    objective: &'f mut dyn FnMut(&[f64]) -> Result<f64>,
    max_evaluations: usize,
    window: usize,
    evaluations: usize,
    best_value: f64,
    best_point: Vec<f64>,
    trajectory: Vec<f64>,
    visited: Option<Vec<Vec<f64>>>,
    construction_done: bool,
    since_improvement: usize,
    stop: Option<StopReason>,
}

impl<'f> Tracker<'f> {
    fn should_stop(&self) -> bool {
        self.stop.is_some()
    }

    /// Evaluates the objective, recording trajectory, incumbent, window
    /// state, and budget. Returns None when the budget forbids the call.
    fn eval(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.evaluations >= self.max_evaluations {
            self.stop = Some(StopReason::MaxEvaluations);
            return Ok(None);
        }
        let v = (self.objective)(x)?;
        self.evaluations += 1;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective { evaluation: self.evaluations });
        }
        self.trajectory.push(v);
        if let Some(points) = &mut self.visited {
            points.push(x.to_vec());
        }
        if v < self.best_value - IMPROVEMENT_TOL {
            self.best_value = v;
            self.best_point = x.to_vec();
            self.since_improvement = 0;
        } else if self.construction_done {
            self.since_improvement += 1;
            if self.since_improvement >= self.window {
                self.stop = Some(StopReason::NoImprovementWindow);
            }
        }
        if self.evaluations >= self.max_evaluations && self.stop.is_none() {
            self.stop = Some(StopReason::MaxEvaluations);
        }
        Ok(Some(v))
    }
}

/// Gauss-Jordan inverse with partial pivoting; None when singular.
fn invert(matrix: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut a = matrix.to_vec();
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(1e-300);
    for col in 0..m {
        let pivot_row = (col..m)
            .max_by(|&x, &y| a[x * m + col].abs().partial_cmp(&a[y * m + col].abs()).unwrap())?;
        if a[pivot_row * m + col].abs() < 1e-13 * scale {
            return None;
        }
        if pivot_row != col {
            for k in 0..m {
                a.swap(col * m + k, pivot_row * m + k);
                inv.swap(col * m + k, pivot_row * m + k);
            }
        }
        let p = a[col * m + col];
        for k in 0..m {
            a[col * m + k] /= p;
            inv[col * m + k] /= p;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = a[r * m + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                a[r * m + k] -= f * a[col * m + k];
                inv[r * m + k] -= f * inv[col * m + k];
            }
        }
    }
    Some(inv)
}

/// Minimizes an objective from `theta0` under the given policy.
pub fn cobyla_minimize(
    mut objective: impl FnMut(&[f64]) -> Result<f64>,
    theta0: &[f64],
    config: &OptimizerConfig,
) -> Result<MinimizeOutcome> {
    config.validate()?;
    let m = theta0.len();
    if m == 0 {
        return Err(Error::Invalid("objective has no parameters".into()));
    }
    let mut tracker = Tracker {
        objective: &mut objective,
        max_evaluations: config.max_evaluations,
        window: config.no_improve_window,
        evaluations: 0,
        best_value: f64::INFINITY,
        best_point: theta0.to_vec(),
        trajectory: Vec::new(),
        visited: config.record_theta.then(Vec::new),
        construction_done: false,
        since_improvement: 0,
        stop: None,
    };

    let mut rho = config.initial_trust_radius;
    let rho_end = config.final_trust_radius;

    // Initial simplex: theta0 plus one axis step per parameter.
    let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut values: Vec<f64> = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let mut x = theta0.to_vec();
        if i > 0 {
            x[i - 1] += rho;
        }
        match tracker.eval(&x)? {
            Some(v) => {
                vertices.push(x);
                values.push(v);
            }
            None => return Ok(finish(tracker)),
        }
    }
    tracker.construction_done = true;

    let mut probe_axis = 0usize;
    loop {
        if tracker.should_stop() {
            break;
        }
        let best = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let others: Vec<usize> = (0..=m).filter(|&i| i != best).collect();

        // Edge matrix (rows = vertex - best vertex) and its inverse.
        let mut edges = vec![0.0; m * m];
        for (row, &idx) in others.iter().enumerate() {
            for k in 0..m {
                edges[row * m + k] = vertices[idx][k] - vertices[best][k];
            }
        }
        let inv = match invert(&edges, m) {
            Some(inv) => inv,
            None => {
                // Degenerate simplex: respan the axes around the best vertex.
                let best_point = vertices[best].clone();
                for (row, &idx) in others.iter().enumerate() {
                    let mut x = best_point.clone();
                    x[row] += rho;
                    match tracker.eval(&x)? {
                        Some(v) => {
                            vertices[idx] = x;
                            values[idx] = v;
                        }
                        None => return Ok(finish(tracker)),
                    }
                    if tracker.should_stop() {
                        return Ok(finish(tracker));
                    }
                }
                continue;
            }
        };

        // Geometry: distances to the best vertex and distances sigma_j of
        // each vertex from the affine span of the others (1 / |column j|
        // of the inverse edge matrix).
        let mut worst: Option<(usize, f64)> = None;
        for (row, &idx) in others.iter().enumerate() {
            let dist: f64 = (0..m)
                .map(|k| (vertices[idx][k] - vertices[best][k]).powi(2))
                .sum::<f64>()
                .sqrt();
            let col_norm: f64 = (0..m).map(|r| inv[r * m + row].powi(2)).sum::<f64>().sqrt();
            let sigma = 1.0 / col_norm;
            let violation = (dist / (GEOMETRY_BETA * rho)).max(GEOMETRY_ALPHA * rho / sigma);
            if violation > 1.0 && worst.map_or(true, |(_, w)| violation > w) {
                worst = Some((row, violation));
            }
        }

        // Linear model gradient from the interpolation conditions.
        let mut gradient = vec![0.0; m];
        for (row, &idx) in others.iter().enumerate() {
            let df = values[idx] - values[best];
            for k in 0..m {
                gradient[k] += inv[k * m + row] * df;
            }
        }
        let gnorm = crate::numerics::norm2_real(&gradient);

        if let Some((row, _)) = worst {
            // Geometry step: move the offending vertex to distance rho from
            // the best vertex, orthogonally to the other edges, on the
            // model's descent side.
            let mut direction: Vec<f64> = (0..m).map(|r| inv[r * m + row]).collect();
            let norm = crate::numerics::norm2_real(&direction);
            direction.iter_mut().for_each(|d| *d /= norm);
            let slope: f64 = direction.iter().zip(&gradient).map(|(d, g)| d * g).sum();
            let sign = if slope > 0.0 { -1.0 } else { 1.0 };
            let x: Vec<f64> = (0..m)
                .map(|k| vertices[best][k] + sign * rho * direction[k])
                .collect();
            match tracker.eval(&x)? {
                Some(v) => {
                    let idx = others[row];
                    vertices[idx] = x;
                    values[idx] = v;
                }
                None => break,
            }
            continue;
        }

        let flat = gnorm * rho < 1e-14 * (1.0 + values[best].abs());
        if flat {
            if rho > rho_end {
                rho = (rho * SHRINK_FACTOR).max(rho_end);
                continue;
            }
            // Flat model at the floor radius: poll along alternating axes
            // so the run keeps evaluating until the window closes.
            let mut x = vertices[best].clone();
            x[probe_axis] -= rho;
            probe_axis = (probe_axis + 1) % m;
            match tracker.eval(&x)? {
                Some(v) => {
                    let (row, _) = weight_row(&inv, m, &x, &vertices[best]);
                    let idx = others[row];
                    vertices[idx] = x;
                    values[idx] = v;
                }
                None => break,
            }
            continue;
        }

        // Trust-region step to the model minimizer on the rho sphere.
        let x: Vec<f64> = (0..m)
            .map(|k| vertices[best][k] - rho * gradient[k] / gnorm)
            .collect();
        let predicted = rho * gnorm;
        let f_best = values[best];
        match tracker.eval(&x)? {
            Some(v) => {
                let (row, _) = weight_row(&inv, m, &x, &vertices[best]);
                let idx = others[row];
                vertices[idx] = x;
                values[idx] = v;
                let ratio = (f_best - v) / predicted;
                if ratio < ACCEPT_RATIO && rho > rho_end {
                    rho = (rho * SHRINK_FACTOR).max(rho_end);
                }
            }
            None => break,
        }
    }
    Ok(finish(tracker))
}

/// Row of the edge list whose replacement by `x` best preserves the
/// simplex volume: argmax of |w| where (edges^T) w = x - best.
fn weight_row(inv: &[f64], m: usize, x: &[f64], best: &[f64]) -> (usize, f64) {
    let dx: Vec<f64> = (0..m).map(|k| x[k] - best[k]).collect();
    let mut arg = 0usize;
    let mut max = -1.0;
    for row in 0..m {
        let w: f64 = (0..m).map(|k| inv[k * m + row] * dx[k]).sum();
        if w.abs() > max {
            max = w.abs();
            arg = row;
        }
    }
    (arg, max)
}

fn finish(tracker: Tracker<'_>) -> MinimizeOutcome {
    MinimizeOutcome {
        best_point: tracker.best_point,
        best_value: tracker.best_value,
        evaluations: tracker.evaluations,
        trajectory: tracker.trajectory,
        visited: tracker.visited,
        stop: tracker.stop.unwrap_or(StopReason::MaxEvaluations),
    }
}

/// Result of one solve: incumbent parameters, cost, alignment with b, and
/// the per-evaluation cost trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub best_cost: f64,
    pub best_theta: Vec<f64>,
    /// cos of the angle between A x(theta*) and b (signed).
    pub cosine: f64,
    pub evaluations: usize,
    pub trajectory: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_trajectory: Option<Vec<Vec<f64>>>,
    pub stop: StopReason,
    pub wall_time_s: f64,
}

impl SolveReport {
    pub fn trajectory_csv_header() -> &'static str {
        "evaluation,cost"
    }

    pub fn trajectory_csv_rows(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.trajectory.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i, v));
        }
        out
    }

    /// Running minimum of the trajectory; non-increasing by construction.
    pub fn running_best(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.trajectory
            .iter()
            .map(|&v| {
                best = best.min(v);
                best
            })
            .collect()
    }
}

/// Optimizes the cost for `inst` from uniformly random initial angles in
/// [0, 2 pi) and reports the incumbent with its alignment metric.
pub fn solve(
    inst: &ProblemInstance,
    layers: usize,
    kind: CostKind,
    config: &OptimizerConfig,
) -> Result<SolveReport> {
    config.validate()?;
    let evaluator = CostEvaluator::new(inst, layers)?;
    let m = evaluator.parameter_count();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let theta0: Vec<f64> =
        (0..m).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let start = Instant::now();
    let outcome =
        cobyla_minimize(|theta| evaluator.cost_value(theta, kind), &theta0, config)?;
    let psi = evaluator.psi(&outcome.best_point)?;
    let cosine = cosine_alignment(&psi, &inst.b_complex())?;
    Ok(SolveReport {
        best_cost: outcome.best_value,
        best_theta: outcome.best_point,
        cosine,
        evaluations: outcome.evaluations,
        trajectory: outcome.trajectory,
        theta_trajectory: outcome.visited,
        stop: outcome.stop,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Mean and sample standard deviation over repeats of one sweep cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub layers: usize,
    pub repeats: usize,
    pub mean_abs_cosine: f64,
    pub std_abs_cosine: f64,
    pub mean_min_cost: f64,
    pub std_min_cost: f64,
    pub mean_evaluations: f64,
    pub std_evaluations: f64,
}

impl SweepRow {
    pub fn csv_header() -> &'static str {
        "layers,repeats,mean_abs_cosine,std_abs_cosine,mean_min_cost,std_min_cost,mean_evaluations,std_evaluations"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.layers,
            self.repeats,
            self.mean_abs_cosine,
            self.std_abs_cosine,
            self.mean_min_cost,
            self.std_min_cost,
            self.mean_evaluations,
            self.std_evaluations
        )
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Repeats solves with seeds config.seed, config.seed + 1, ... for every
/// layer count and aggregates |cosine|, minimum cost, and evaluations.
pub fn sweep_layers(
    inst: &ProblemInstance,
    layers_list: &[usize],
    kind: CostKind,
    config: &OptimizerConfig,
    repeats: usize,
) -> Result<Vec<SweepRow>> {
    if repeats == 0 {
        return Err(Error::Invalid("sweep needs at least one repeat".into()));
    }
    use rayon::prelude::*;
    let mut rows = Vec::with_capacity(layers_list.len());
    for &layers in layers_list {
        let reports: Result<Vec<SolveReport>> = (0..repeats)
            .into_par_iter()
            .map(|r| {
                let mut cfg = config.clone();
                cfg.seed = config.seed + r as u64;
                cfg.record_theta = false;
                solve(inst, layers, kind, &cfg)
            })
            .collect();
        let reports = reports?;
        let cosines: Vec<f64> = reports.iter().map(|r| r.cosine.abs()).collect();
        let costs: Vec<f64> = reports.iter().map(|r| r.best_cost).collect();
        let evals: Vec<f64> = reports.iter().map(|r| r.evaluations as f64).collect();
        let (mean_abs_cosine, std_abs_cosine) = mean_std(&cosines);
        let (mean_min_cost, std_min_cost) = mean_std(&costs);
        let (mean_evaluations, std_evaluations) = mean_std(&evals);
        rows.push(SweepRow {
            layers,
            repeats,
            mean_abs_cosine,
            std_abs_cosine,
            mean_min_cost,
            std_min_cost,
            mean_evaluations,
            std_evaluations,
        });
    }
    Ok(rows)
}
