//! At a resonant shift only right-hand sides with f^(±√a) = 0 are solvable.
//!
//! ```bash
//! cargo run --example resonant_solvability
//! ```

use shiftsolve::linear::{
    check_solvability, detuned_refinements, project_solvable, resonant_quotient_mass, solve_linear, LinearOptions,
};
use shiftsolve::{Error, Grid, GridFunction, Result, ShiftParams};

fn main() -> Result<()> {
    let params = ShiftParams::resonant(1.0, 1)?;
    let grid = Grid::new(40.0, 4096)?;

    let gaussian = GridFunction::from_real_fn(grid, |x| (-x * x / 2.0).exp())?;
    let rep = check_solvability(&gaussian, &params, 1e-8)?;
    println!(
        "e^(-x^2/2): solvable = {}, |f^(1)| = {:.12}",
        rep.solvable,
        rep.fhat_plus.norm()
    );
    match solve_linear(&gaussian, &params, &LinearOptions::default()) {
        Err(e @ Error::ResonantNotSolvable { .. }) => println!("  solve refused: {e}"),
        other => println!("  unexpected: {:?}", other.map(|s| s.residual_l2)),
    }

    let hermite = GridFunction::from_real_fn(grid, |x| x * x * (-x * x / 2.0).exp())?;
    let sol = solve_linear(&hermite, &params, &LinearOptions::default())?;
    println!(
        "x^2 e^(-x^2/2): residual {:.2e}, |u|_H2 = {:.6}",
        sol.residual_l2,
        sol.u.h2_norm()
    );

    let projected = project_solvable(&gaussian, &params)?;
    let sol = solve_linear(&projected, &params, &LinearOptions::default())?;
    println!("projected gaussian: residual {:.2e}", sol.residual_l2);

    println!("\nquotient mass near p = ±1 under refinement");
    for (level, l) in detuned_refinements(1.0, 12, 1.0 / 3.0, 4).into_iter().enumerate() {
        let g = Grid::new(l, 1 << (10 + level))?;
        let bad = GridFunction::from_real_fn(g, |x| (-x * x / 2.0).exp())?;
        let good = GridFunction::from_real_fn(g, |x| x * x * (-x * x / 2.0).exp())?;
        println!(
            "  L = {l:>8.3}: violated {:>12.4}, orthogonal {:.6}",
            resonant_quotient_mass(&bad, &params, 0.25),
            resonant_quotient_mass(&good, &params, 0.25)
        );
    }
    Ok(())
}
