//! Grid transforms: Parseval, shifts as phase factors, and spectral derivatives.
//!
//! ```bash
//! cargo run --example transforms
//! ```

use shiftsolve::{Grid, GridFunction, Result};

fn main() -> Result<()> {
    let grid = Grid::new(40.0, 4096)?;
    println!(
        "dx = {:.6}, dp = {:.6}, band limit = {:.2}",
        grid.spacing(),
        grid.frequency_step(),
        grid.band_limit()
    );

    let u = GridFunction::from_real_fn(grid, |x| (-x * x / 2.0).exp())?;
    let spec = u.forward_transform();
    println!("|u|_L2 = {:.15}", u.l2_norm());
    println!("|u^|_L2 = {:.15}", spec.l2_norm());

    // the Gaussian e^{-x²/2} is its own transform
    for p in [0.0, 0.5, 1.0, 2.0] {
        println!(
            "u^({p}) = {:.15}  (exact {:.15})",
            u.transform_at(p).re,
            (-p * p / 2.0).exp()
        );
    }

    let shifted = u.shift(3.0);
    println!("|u(. - 3)|_L2 = {:.15}", shifted.l2_norm());

    let d2 = u.second_derivative();
    let exact = GridFunction::from_real_fn(grid, |x| (x * x - 1.0) * (-x * x / 2.0).exp())?;
    println!("max |u'' - exact| = {:.2e}", d2.sub(&exact)?.max_abs());
    println!("|u|_H2 = {:.15}", u.h2_norm());
    Ok(())
}
