//! End-to-end run on a 4-qubit transverse-field Ising system: generate,
//! check the Hadamard-test budget, solve with both cost functions, and
//! print the lowered circuit resources.

use vqls_core::analysis::resource_report;
use vqls_core::cost::CostKind;
use vqls_core::hadamard::enumerate_tests;
use vqls_core::optimizer::{solve, OptimizerConfig};
use vqls_core::problems::make_ising;

fn main() -> vqls_core::Result<()> {
    let inst = make_ising(4, 0.1, 5.0)?;
    println!(
        "ising n={} with L={} terms, condition number {:.2}, scale {:.4}",
        inst.n,
        inst.lcu.len(),
        inst.metadata.condition_number.unwrap_or(f64::NAN),
        inst.metadata.scale
    );

    for kind in [CostKind::Global, CostKind::Local] {
        let (_, budget) = enumerate_tests(inst.lcu.len(), inst.n, kind)?;
        println!(
            "{kind}: {} denominator + {} numerator = {} Hadamard tests per evaluation",
            budget.denominator_tests,
            budget.numerator_tests,
            budget.total()
        );
        let config = OptimizerConfig { max_evaluations: 20_000, seed: 1, ..Default::default() };
        let report = solve(&inst, 1, kind, &config)?;
        println!(
            "{kind}: cost {:.3e}, |cos| {:.6}, {} evaluations",
            report.best_cost,
            report.cosine.abs(),
            report.evaluations
        );
    }

    let resources = resource_report(&inst, 1, CostKind::Global)?;
    println!(
        "lowered circuits: denominator mean {:.1} gates / depth {:.1}, numerator mean {:.1} gates / depth {:.1}",
        resources.denominator.mean_total,
        resources.denominator.mean_depth,
        resources.numerator.mean_total,
        resources.numerator.mean_depth
    );
    Ok(())
}
