//! Drive a run from a JSON configuration, as the `shiftsolve` binary does.
//!
//! ```bash
//! cargo run --example config_run
//! ```

use shiftsolve::config::{parse_config_str, Command};
use shiftsolve::run::{run, Overrides};

fn main() -> shiftsolve::Result<()> {
    let out = std::env::temp_dir().join("shiftsolve-config-run");
    let cfg = parse_config_str(
        r#"{
            "a": 1.0,
            "h": 1.0,
            "L": 40.0,
            "N": 4096,
            "G": {"name": "gaussian", "amplitude": 0.3},
            "F": {"name": "tanh_forcing", "l": 0.1}
        }"#,
    )?;
    let overrides = Overrides {
        out: Some(out.clone()),
        seed: Some(7),
    };
    let outcome = run(Command::SolveNonlinear, &cfg, &std::env::current_dir()?, &overrides)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&outcome.summary).expect("summary serializes")
    );
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
