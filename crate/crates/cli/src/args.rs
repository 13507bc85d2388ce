//! Argument structures, shared between clap parsing and run manifests.
//!
//! Every command serializes its resolved arguments into
//! `run_manifest.json` inside the output directory; `rerun` feeds such a
//! manifest back through the same dispatch, which reproduces all CSV
//! outputs byte-identically.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "vqls", version, about = "Variational quantum linear solver laboratory")]
pub struct Cli {
    /// JSON config holding a command and its arguments (the run-manifest
    /// format); replaces the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or ingest a problem instance.
    Gen(GenArgs),
    /// Optimize the cost function over one or more seeds.
    Solve(SolveArgs),
    /// Solve repeatedly while varying the ansatz layer count.
    Sweep(SweepArgs),
    /// Estimate gradient-component variances across system sizes.
    Barren(BarrenArgs),
    /// Average lowered gate counts and depths of the Hadamard test circuits.
    Resources(ResourcesArgs),
    /// Re-execute a recorded run manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenArgs {
    /// Instance family: ising, random-pauli, or banded.
    #[arg(long, conflicts_with = "matrix")]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub family: Option<String>,

    /// Qubit count (ising, random-pauli).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,

    /// Ising coupling J.
    #[arg(long, default_value_t = 0.1)]
    #[serde(default = "default_coupling")]
    pub coupling: f64,

    /// Ising offset eta.
    #[arg(long, default_value_t = 5.0)]
    #[serde(default = "default_eta")]
    pub eta: f64,

    /// Block size before padding (banded).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub size: Option<usize>,

    /// Bandwidth (banded).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bandwidth: Option<usize>,

    /// Matrix Market file to ingest instead of generating.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub matrix: Option<PathBuf>,

    /// Right-hand-side vector file (one value per line).
    #[arg(long, requires = "matrix")]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rhs: Option<PathBuf>,

    /// Rows of the extracted upper-right block (defaults to the full matrix).
    #[arg(long, requires = "matrix")]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub block_rows: Option<usize>,

    /// Columns of the extracted upper-right block.
    #[arg(long, requires = "matrix")]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub block_cols: Option<usize>,

    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,

    #[arg(long)]
    pub out_dir: PathBuf,
}

fn default_coupling() -> f64 {
    0.1
}

fn default_eta() -> f64 {
    5.0
}

fn default_layers() -> usize {
    1
}

fn default_kind() -> String {
    "global".into()
}

fn default_seeds() -> usize {
    10
}

fn default_max_evals() -> usize {
    100_000
}

fn default_window() -> usize {
    100
}

fn default_initial_trust() -> f64 {
    0.5
}

fn default_final_trust() -> f64 {
    1e-6
}

fn default_repeats() -> usize {
    10
}

fn default_component() -> usize {
    0
}

fn default_instance_seed_base() -> u64 {
    1000
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OptimizerArgs {
    #[arg(long, default_value_t = 100_000)]
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,

    /// Evaluations without improvement that end a run.
    #[arg(long, default_value_t = 100)]
    #[serde(default = "default_window")]
    pub no_improve_window: usize,

    #[arg(long, default_value_t = 0.5)]
    #[serde(default = "default_initial_trust")]
    pub initial_trust: f64,

    #[arg(long, default_value_t = 1e-6)]
    #[serde(default = "default_final_trust")]
    pub final_trust: f64,
}

impl OptimizerArgs {
    pub fn to_config(&self, seed: u64) -> vqls_core::optimizer::OptimizerConfig {
        vqls_core::optimizer::OptimizerConfig {
            initial_trust_radius: self.initial_trust,
            final_trust_radius: self.final_trust,
            no_improve_window: self.no_improve_window,
            max_evaluations: self.max_evals,
            seed,
            record_theta: false,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    /// Directory holding an instance manifest (from `gen`).
    #[arg(long)]
    pub instance: PathBuf,

    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_layers")]
    pub layers: usize,

    /// Cost kind: global or local.
    #[arg(long, default_value = "global")]
    #[serde(default = "default_kind")]
    pub kind: String,

    /// Number of independent runs (seeds seed, seed+1, ...).
    #[arg(long, default_value_t = 10)]
    #[serde(default = "default_seeds")]
    pub seeds: usize,

    /// Base seed.
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,

    #[command(flatten)]
    #[serde(flatten)]
    pub optimizer: OptimizerArgs,

    /// Also write per-evaluation trajectory CSVs.
    #[arg(long)]
    #[serde(default)]
    pub trajectories: bool,

    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub instance: PathBuf,

    /// Comma-separated layer counts, e.g. 1,2,3.
    #[arg(long)]
    pub layers_list: String,

    #[arg(long, default_value = "global")]
    #[serde(default = "default_kind")]
    pub kind: String,

    #[arg(long, default_value_t = 10)]
    #[serde(default = "default_repeats")]
    pub repeats: usize,

    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,

    #[command(flatten)]
    #[serde(flatten)]
    pub optimizer: OptimizerArgs,

    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BarrenArgs {
    /// Instance family: ising or random-pauli.
    #[arg(long, default_value = "random-pauli")]
    #[serde(default = "default_barren_family")]
    pub family: String,

    /// Comma-separated qubit counts, e.g. 2,3,4.
    #[arg(long)]
    pub n_list: String,

    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_layers")]
    pub layers: usize,

    #[arg(long, default_value = "global")]
    #[serde(default = "default_kind")]
    pub kind: String,

    /// Gradient component under study.
    #[arg(long, default_value_t = 0)]
    #[serde(default = "default_component")]
    pub component: usize,

    /// Monte-Carlo samples; defaults to 4096 for n <= 4 and 1024 beyond.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<usize>,

    /// Seed of the theta sampler.
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,

    /// Random-pauli instance seeds are this base plus n.
    #[arg(long, default_value_t = 1000)]
    #[serde(default = "default_instance_seed_base")]
    pub instance_seed_base: u64,

    #[arg(long)]
    pub out_dir: PathBuf,
}

fn default_barren_family() -> String {
    "random-pauli".into()
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ResourcesArgs {
    #[arg(long, default_value = "ising")]
    #[serde(default = "default_resources_family")]
    pub family: String,

    #[arg(long)]
    pub n_list: String,

    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_layers")]
    pub layers: usize,

    #[arg(long, default_value = "global")]
    #[serde(default = "default_kind")]
    pub kind: String,

    #[arg(long, default_value_t = 1000)]
    #[serde(default = "default_instance_seed_base")]
    pub instance_seed_base: u64,

    /// Print the Hadamard-test budget per instance to stdout.
    #[arg(long)]
    #[serde(default)]
    pub print_budget: bool,

    #[arg(long)]
    pub out_dir: PathBuf,
}

fn default_resources_family() -> String {
    "ising".into()
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    /// Path to a run_manifest.json written by a previous command.
    #[arg(long)]
    pub manifest: PathBuf,

    /// Override the output directory recorded in the manifest.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Recorded command with its resolved arguments.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "command", content = "args", rename_all = "snake_case")]
pub enum RunManifest {
    Gen(GenArgs),
    Solve(SolveArgs),
    Sweep(SweepArgs),
    Barren(BarrenArgs),
    Resources(ResourcesArgs),
}

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    let list: Result<Vec<usize>, _> =
        s.split(',').map(|t| t.trim().parse::<usize>()).collect();
    match list {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("expected a comma-separated list of integers, got '{s}'")),
    }
}
