//! Fixed point of u'' + a u(x-h) + ∫G(x-y)F(u(y),y)dy = 0 by contraction.
//!
//! ```bash
//! cargo run --example fixed_point
//! ```

use shiftsolve::catalog::NonlinearitySpec;
use shiftsolve::nonlinear::{fixed_point_solve, nontriviality_check, FixedPointOptions, DEFAULT_SUPPORT_THRESHOLD};
use shiftsolve::{Grid, GridFunction, Result, ShiftParams};

fn main() -> Result<()> {
    let grid = Grid::new(40.0, 4096)?;
    let params = ShiftParams::new(1.0, 1.0)?;
    let kernel = GridFunction::from_real_fn(grid, |x| 0.3 * (-x * x / 2.0).exp())?;

    for name in ["tanh", "tanh_forcing"] {
        let f = NonlinearitySpec::named(name, 0.1).build(grid)?;
        let overlap = nontriviality_check(&kernel, &f, DEFAULT_SUPPORT_THRESHOLD)?;
        let res = fixed_point_solve(&kernel, &f, &params, &FixedPointOptions::default())?;
        println!("F = {name}: support overlap {overlap}");
        println!(
            "  N = {:.10}, q = {:.6}, {} iterations (a priori {}), observed ratio {:.4}",
            res.n_const, res.q_bound, res.iterations, res.a_priori_iterations, res.observed_ratio
        );
        println!("  |u|_H2 = {:.10}, residual {:.2e}", res.h2_norm_u, res.residual_l2);
    }
    Ok(())
}
