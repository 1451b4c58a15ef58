//! Scan the symbol p² - a e^{-iph} across shifts and locate resonances.
//!
//! ```bash
//! cargo run --example spectrum_scan
//! ```

use std::f64::consts::PI;

use shiftsolve::operator::{estimate_alpha, gap_minimizer, symbol, symbol_modulus_sq};
use shiftsolve::{FredholmClass, Result, ShiftParams};

fn main() -> Result<()> {
    let a = 1.0;
    println!("{:>8} {:>12} {:>14} {:>10}", "h", "class", "alpha", "argmin p");
    for k in 1..=16 {
        let h = k as f64 * PI / 4.0;
        let params = ShiftParams::new(a, h)?;
        match params.classify()? {
            FredholmClass::Resonant { n } => {
                println!("{h:>8.4} {:>12} {:>14} {:>10}", format!("resonant {n}"), "-", "-")
            }
            FredholmClass::NonResonant { .. } => {
                let alpha = estimate_alpha(&params)?;
                let (p, _) = gap_minimizer(&params)?;
                println!("{h:>8.4} {:>12} {alpha:>14.10} {p:>10.6}", "fredholm");
            }
        }
    }

    let params = ShiftParams::resonant(4.0, 3)?;
    println!("\na = 4, n = 3: h = {:.12}", params.h());
    for p in [1.5, 2.0, 2.5] {
        let l = symbol(p, &params);
        println!(
            "lambda({p}) = {:+.6} {:+.6}i, |lambda|^2 = {:.3e}",
            l.re,
            l.im,
            symbol_modulus_sq(p, &params)
        );
    }
    Ok(())
}
