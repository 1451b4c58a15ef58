//! Stability constant N of a kernel and the resulting contraction factor.
//!
//! ```bash
//! cargo run --example stability_constants
//! ```

use shiftsolve::kernel::{assess_kernel, contraction_factor};
use shiftsolve::{Grid, GridFunction, Result, ShiftParams};

fn main() -> Result<()> {
    let grid = Grid::new(40.0, 4096)?;
    let kernels = [
        (
            "0.3 gaussian",
            GridFunction::from_real_fn(grid, |x| 0.3 * (-x * x / 2.0).exp())?,
        ),
        (
            "x^2 e^(-x^2/2)",
            GridFunction::from_real_fn(grid, |x| x * x * (-x * x / 2.0).exp())?,
        ),
        ("e^(-|x|)", GridFunction::from_real_fn(grid, |x| (-x.abs()).exp())?),
    ];
    for params in [ShiftParams::new(1.0, 1.0)?, ShiftParams::resonant(1.0, 1)?] {
        println!("a = {}, h = {:.6}", params.a(), params.h());
        for (name, g) in &kernels {
            let rep = assess_kernel(g, &params, 1e-8)?;
            match rep.n {
                Some(n) => println!(
                    "  {name:<16} N = {n:.10}  q(l = 0.1) = {:.6}  identity residual {:.1e}",
                    contraction_factor(n, 0.1),
                    rep.identity_residual
                ),
                None => println!(
                    "  {name:<16} N infinite, |G^(±√a)| = {:.3e}",
                    rep.ghat_plus.norm().max(rep.ghat_minus.norm())
                ),
            }
        }
    }
    Ok(())
}
