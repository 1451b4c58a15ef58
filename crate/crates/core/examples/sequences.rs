//! Convergence of solutions along right-hand side and kernel sequences.
//!
//! ```bash
//! cargo run --example sequences
//! ```

use shiftsolve::catalog::NonlinearitySpec;
use shiftsolve::linear::LinearOptions;
use shiftsolve::nonlinear::FixedPointOptions;
use shiftsolve::sequence::{
    builtin_sequence, run_kernel_sequence, run_linear_sequence, ConvergenceTable, SequenceKind,
};
use shiftsolve::{Grid, GridFunction, Result, ShiftParams};

fn report(table: &ConvergenceTable) {
    println!(
        "{} sequence '{}':",
        if table.kind == SequenceKind::Rhs {
            "rhs"
        } else {
            "kernel"
        },
        table.name
    );
    for r in &table.rows {
        println!(
            "  m = {:>2}: input gap {:.3e}, H2 gap {:.3e}",
            r.m, r.input_gap, r.solution_gap_h2
        );
    }
    for c in &table.checks {
        println!("  {:<28} {}", c.name, if c.passed { "ok" } else { "FAILED" });
    }
}

fn main() -> Result<()> {
    let grid = Grid::new(40.0, 4096)?;
    let params = ShiftParams::new(1.0, 1.0)?;
    let f = GridFunction::from_real_fn(grid, |x| (-x * x).exp())?;

    let spec = builtin_sequence("scale", SequenceKind::Rhs, &f, None, &params, 8, None)?;
    report(&run_linear_sequence(&spec, &params, &LinearOptions::default())?);

    let kernel = GridFunction::from_real_fn(grid, |x| 0.2 * (-x * x / 2.0).exp())?;
    let nonlinearity = NonlinearitySpec::named("tanh_forcing", 0.1).build(grid)?;
    let spec = builtin_sequence(
        "alternating",
        SequenceKind::Kernel,
        &kernel,
        None,
        &params,
        8,
        Some(0.5),
    )?;
    report(&run_kernel_sequence(
        &spec,
        &nonlinearity,
        &params,
        &FixedPointOptions::default(),
    )?);
    Ok(())
}
