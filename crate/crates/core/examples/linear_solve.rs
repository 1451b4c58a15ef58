//! Solve -u'' - a u(x-h) = f for a manufactured solution and watch the error.
//!
//! ```bash
//! cargo run --example linear_solve
//! ```

use shiftsolve::linear::{solve_linear, LinearOptions};
use shiftsolve::operator::estimate_alpha;
use shiftsolve::{Grid, GridFunction, Result, ShiftParams};

fn main() -> Result<()> {
    let params = ShiftParams::new(1.0, 1.0)?;
    let alpha = estimate_alpha(&params)?;
    println!("a = 1, h = 1, alpha = {alpha:.12}");

    for n in [256, 512, 1024, 2048, 4096] {
        let grid = Grid::new(40.0, n)?;
        let exact = GridFunction::from_real_fn(grid, |x| (-x * x).exp())?;
        let f = GridFunction::from_real_fn(grid, |x| {
            (2.0 - 4.0 * x * x) * (-x * x).exp() - (-(x - 1.0).powi(2)).exp()
        })?;
        let sol = solve_linear(&f, &params, &LinearOptions::default())?;
        let err = sol.u.sub(&exact)?.h2_norm() / exact.h2_norm();
        println!(
            "N = {n:>5}: relative H2 error {err:.2e}, residual {:.2e}, |u| sqrt(alpha)/|f| = {:.4}",
            sol.residual_l2,
            sol.u.l2_norm() * alpha.sqrt() / f.l2_norm()
        );
    }
    Ok(())
}
