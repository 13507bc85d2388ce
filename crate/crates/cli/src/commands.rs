//! Command implementations. Each command resolves its arguments, runs the
//! core routines, writes CSV/JSON artifacts plus a run manifest into the
//! output directory, and prints a short summary.
//!
//! Output rows are sorted by (seed, n, layers) and floats are written with
//! the shortest round-trip formatting, so re-running a manifest reproduces
//! every CSV byte for byte. JSON reports carry wall-clock times and are
//! exempt from that guarantee.

use crate::args::{
    parse_usize_list, BarrenArgs, GenArgs, ResourcesArgs, RerunArgs, RunManifest, SolveArgs,
    SweepArgs, RUN_MANIFEST_FILE,
};
use crate::error::{CliError, CliResult};
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};
use vqls_core::analysis::{
    estimate_gradient_variance, fit_variance_decay, resource_report, GradientStats,
    ResourceSummary,
};
use vqls_core::cost::CostKind;
use vqls_core::hadamard::{enumerate_tests, TestBudget};
use vqls_core::optimizer::{solve, sweep_layers, SolveReport, SweepRow};
use vqls_core::problems::{
    extract_and_pad, load_instance, load_matrix_market, load_vector, make_banded_synthetic,
    make_ising, make_random_pauli, save_instance, validate_instance, ProblemInstance,
};

fn parse_kind(kind: &str) -> CliResult<CostKind> {
    kind.parse::<CostKind>().map_err(|e| CliError::Config(e.to_string()))
}

fn write_manifest(out_dir: &Path, manifest: &RunManifest) -> CliResult<()> {
    let json = serde_json::to_string_pretty(manifest).map_err(vqls_core::Error::from)?;
    fs::write(out_dir.join(RUN_MANIFEST_FILE), json).map_err(vqls_core::Error::from)?;
    Ok(())
}

fn write_file(out_dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::write(out_dir.join(name), contents).map_err(vqls_core::Error::from)?;
    Ok(())
}

fn ensure_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(vqls_core::Error::from)?;
    Ok(())
}

/// Builds an instance by family name; used by barren/resources loops.
fn family_instance(family: &str, n: usize, seed_base: u64) -> CliResult<ProblemInstance> {
    match family {
        "ising" => Ok(make_ising(n, 0.1, 5.0)?),
        "random-pauli" => Ok(make_random_pauli(n, seed_base + n as u64)?),
        other => Err(CliError::Config(format!(
            "family '{other}' is not available here; use ising or random-pauli"
        ))),
    }
}

pub fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    ensure_out_dir(&args.out_dir)?;
    let inst = if let Some(matrix_path) = &args.matrix {
        let matrix = load_matrix_market(matrix_path)?;
        let rhs = match &args.rhs {
            Some(p) => load_vector(p)?,
            None => {
                return Err(CliError::Config(
                    "--rhs is required when ingesting a matrix".into(),
                ))
            }
        };
        let rows = args.block_rows.unwrap_or(matrix.rows());
        let cols = args.block_cols.unwrap_or(matrix.cols());
        extract_and_pad(&matrix, &rhs, rows, cols)?
    } else {
        let family = args
            .family
            .as_deref()
            .ok_or_else(|| CliError::Config("either --family or --matrix is required".into()))?;
        match family {
            "ising" => {
                let n = args
                    .n
                    .ok_or_else(|| CliError::Config("--n is required for ising".into()))?;
                make_ising(n, args.coupling, args.eta)?
            }
            "random-pauli" => {
                let n = args
                    .n
                    .ok_or_else(|| CliError::Config("--n is required for random-pauli".into()))?;
                make_random_pauli(n, args.seed)?
            }
            "banded" => {
                let size = args
                    .size
                    .ok_or_else(|| CliError::Config("--size is required for banded".into()))?;
                let bandwidth = args.bandwidth.ok_or_else(|| {
                    CliError::Config("--bandwidth is required for banded".into())
                })?;
                make_banded_synthetic(size, bandwidth, args.seed)?
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown family '{other}' (expected ising, random-pauli, or banded)"
                )))
            }
        }
    };
    validate_instance(&inst)?;
    save_instance(&args.out_dir, &inst)?;
    write_manifest(&args.out_dir, &RunManifest::Gen(args.clone()))?;
    let kappa = match inst.metadata.condition_number {
        Some(k) => k.to_string(),
        None => "singular".into(),
    };
    println!(
        "family={} n={} L={} condition_number={} scale={}",
        inst.metadata.family,
        inst.n,
        inst.lcu.len(),
        kappa,
        inst.metadata.scale
    );
    for w in &inst.metadata.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

const SOLVES_SCHEMA: &str = "# schema: vqls-solves-v1\n";
const AGGREGATE_SCHEMA: &str = "# schema: vqls-aggregate-v1\n";
const SWEEP_SCHEMA: &str = "# schema: vqls-sweep-v1\n";
const BARREN_SCHEMA: &str = "# schema: vqls-barren-v1\n";
const FIT_SCHEMA: &str = "# schema: vqls-fit-v1\n";
const RESOURCES_SCHEMA: &str = "# schema: vqls-resources-v1\n";
const BUDGET_SCHEMA: &str = "# schema: vqls-budget-v1\n";
const TRAJECTORY_SCHEMA: &str = "# schema: vqls-trajectory-v1\n";

pub fn cmd_solve(args: &SolveArgs) -> CliResult<()> {
    if args.seeds == 0 {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    let kind = parse_kind(&args.kind)?;
    ensure_out_dir(&args.out_dir)?;
    let inst = load_instance(&args.instance)?;

    let reports: Result<Vec<(u64, SolveReport)>, vqls_core::Error> = (0..args.seeds as u64)
        .into_par_iter()
        .map(|offset| {
            let seed = args.seed + offset;
            let config = args.optimizer.to_config(seed);
            Ok((seed, solve(&inst, args.layers, kind, &config)?))
        })
        .collect();
    let mut reports = reports?;
    reports.sort_by_key(|(seed, _)| *seed);

    let mut solves = String::from(SOLVES_SCHEMA);
    solves.push_str("seed,n,layers,kind,best_cost,cosine_abs,evaluations\n");
    for (seed, r) in &reports {
        solves.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            seed,
            inst.n,
            args.layers,
            kind,
            r.best_cost,
            r.cosine.abs(),
            r.evaluations
        ));
    }
    write_file(&args.out_dir, "solves.csv", &solves)?;

    let costs: Vec<f64> = reports.iter().map(|(_, r)| r.best_cost).collect();
    let cosines: Vec<f64> = reports.iter().map(|(_, r)| r.cosine.abs()).collect();
    let evals: Vec<f64> = reports.iter().map(|(_, r)| r.evaluations as f64).collect();
    let stat = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let std = if v.len() < 2 {
            0.0
        } else {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
        };
        (mean, std)
    };
    let (mc, sc) = stat(&costs);
    let (mcos, scos) = stat(&cosines);
    let (me, se) = stat(&evals);
    let mut aggregate = String::from(AGGREGATE_SCHEMA);
    aggregate.push_str(
        "n,layers,kind,seeds,mean_min_cost,std_min_cost,mean_abs_cosine,std_abs_cosine,mean_evaluations,std_evaluations\n",
    );
    aggregate.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        inst.n, args.layers, kind, args.seeds, mc, sc, mcos, scos, me, se
    ));
    write_file(&args.out_dir, "aggregate.csv", &aggregate)?;

    for (seed, r) in &reports {
        let json = serde_json::to_string_pretty(r).map_err(vqls_core::Error::from)?;
        write_file(&args.out_dir, &format!("report_seed{seed}.json"), &json)?;
        if args.trajectories {
            let mut t = String::from(TRAJECTORY_SCHEMA);
            t.push_str(SolveReport::trajectory_csv_header());
            t.push('\n');
            t.push_str(&r.trajectory_csv_rows());
            write_file(&args.out_dir, &format!("trajectory_seed{seed}.csv"), &t)?;
        }
    }
    write_manifest(&args.out_dir, &RunManifest::Solve(args.clone()))?;
    println!(
        "n={} layers={} kind={kind} seeds={}: mean min cost={mc} mean |cos|={mcos}",
        inst.n, args.layers, args.seeds
    );
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let kind = parse_kind(&args.kind)?;
    let layers_list = parse_usize_list(&args.layers_list).map_err(CliError::Config)?;
    ensure_out_dir(&args.out_dir)?;
    let inst = load_instance(&args.instance)?;
    let config = args.optimizer.to_config(args.seed);
    let rows: Vec<SweepRow> = sweep_layers(&inst, &layers_list, kind, &config, args.repeats)?;
    let mut csv = String::from(SWEEP_SCHEMA);
    csv.push_str(SweepRow::csv_header());
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    write_file(&args.out_dir, "sweep.csv", &csv)?;
    write_manifest(&args.out_dir, &RunManifest::Sweep(args.clone()))?;
    for row in &rows {
        println!(
            "layers={}: mean |cos|={} mean min cost={}",
            row.layers, row.mean_abs_cosine, row.mean_min_cost
        );
    }
    Ok(())
}

pub fn cmd_barren(args: &BarrenArgs) -> CliResult<()> {
    let kind = parse_kind(&args.kind)?;
    let n_list = parse_usize_list(&args.n_list).map_err(CliError::Config)?;
    ensure_out_dir(&args.out_dir)?;

    let mut csv = String::from(BARREN_SCHEMA);
    csv.push_str(GradientStats::csv_header());
    csv.push('\n');
    let mut points = Vec::new();
    for &n in &n_list {
        let inst = family_instance(&args.family, n, args.instance_seed_base)?;
        let samples = args.samples.unwrap_or(if n <= 4 { 4096 } else { 1024 });
        let stats =
            estimate_gradient_variance(&inst, kind, args.layers, args.component, samples, args.seed)?;
        csv.push_str(&stats.csv_row(n, args.layers, kind));
        csv.push('\n');
        points.push((n as f64, stats.variance));
        println!("n={n}: variance={} mean={} se_mean={}", stats.variance, stats.mean, stats.se_mean);
    }
    write_file(&args.out_dir, "barren.csv", &csv)?;

    let mut fit_csv = String::from(FIT_SCHEMA);
    fit_csv.push_str("kind,layers,component,slope,intercept,r_squared\n");
    if points.len() >= 3 {
        let (slope, intercept, r2) = fit_variance_decay(&points)?;
        fit_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            kind, args.layers, args.component, slope, intercept, r2
        ));
        println!("fit: slope={slope} intercept={intercept} r_squared={r2}");
    }
    write_file(&args.out_dir, "fit.csv", &fit_csv)?;
    write_manifest(&args.out_dir, &RunManifest::Barren(args.clone()))?;
    Ok(())
}

pub fn cmd_resources(args: &ResourcesArgs) -> CliResult<()> {
    let kind = parse_kind(&args.kind)?;
    let n_list = parse_usize_list(&args.n_list).map_err(CliError::Config)?;
    ensure_out_dir(&args.out_dir)?;

    let mut csv = String::from(RESOURCES_SCHEMA);
    csv.push_str(ResourceSummary::csv_header());
    csv.push('\n');
    let mut budget_csv = String::from(BUDGET_SCHEMA);
    budget_csv.push_str(TestBudget::csv_header());
    budget_csv.push('\n');
    for &n in &n_list {
        let inst = family_instance(&args.family, n, args.instance_seed_base)?;
        let summary = resource_report(&inst, args.layers, kind)?;
        csv.push_str(&summary.csv_rows(&inst.metadata.family, n));
        let (_, budget) = enumerate_tests(inst.lcu.len(), n, kind)?;
        budget_csv.push_str(&budget.csv_row());
        budget_csv.push('\n');
        if args.print_budget {
            println!(
                "{kind} L={} n={n}: {} denominator + {} numerator = {} tests",
                budget.l,
                budget.denominator_tests,
                budget.numerator_tests,
                budget.total()
            );
        }
        println!(
            "n={n}: denominator total={} depth={} | numerator total={} depth={}",
            summary.denominator.mean_total,
            summary.denominator.mean_depth,
            summary.numerator.mean_total,
            summary.numerator.mean_depth
        );
    }
    write_file(&args.out_dir, "resources.csv", &csv)?;
    write_file(&args.out_dir, "budget.csv", &budget_csv)?;
    write_manifest(&args.out_dir, &RunManifest::Resources(args.clone()))?;
    Ok(())
}

/// Runs a recorded or hand-written command description, optionally
/// redirecting its output directory.
pub fn run_manifest_file(path: &Path, out_dir: Option<&Path>) -> CliResult<()> {
    let text = fs::read_to_string(path).map_err(vqls_core::Error::from)?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad config: {e}")))?;
    let override_dir =
        |dir: &PathBuf| out_dir.map(Path::to_path_buf).unwrap_or_else(|| dir.clone());
    match manifest {
        RunManifest::Gen(mut a) => {
            a.out_dir = override_dir(&a.out_dir);
            cmd_gen(&a)
        }
        RunManifest::Solve(mut a) => {
            a.out_dir = override_dir(&a.out_dir);
            cmd_solve(&a)
        }
        RunManifest::Sweep(mut a) => {
            a.out_dir = override_dir(&a.out_dir);
            cmd_sweep(&a)
        }
        RunManifest::Barren(mut a) => {
            a.out_dir = override_dir(&a.out_dir);
            cmd_barren(&a)
        }
        RunManifest::Resources(mut a) => {
            a.out_dir = override_dir(&a.out_dir);
            cmd_resources(&a)
        }
    }
}

pub fn cmd_rerun(args: &RerunArgs) -> CliResult<()> {
    run_manifest_file(&args.manifest, args.out_dir.as_deref())
}
