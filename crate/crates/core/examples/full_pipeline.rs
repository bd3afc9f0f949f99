//! Runs the whole pipeline on the bundled demo configuration into a
//! temporary directory and summarizes the run manifest.

use std::path::Path;

use solsent::report::{run_pipeline, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let mut cfg =
        RunConfig::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo/config.json"))?;
    cfg.output_dir = std::env::temp_dir().join("solsent-demo");

    let m = run_pipeline(&cfg)?;
    for s in &m.stages {
        println!(
            "{:<10} {:>6} -> {:<6} {:>7.3}s",
            s.name, s.n_in, s.n_out, s.seconds
        );
    }
    if let Some(avg) = &m.national_average {
        for (mode, v) in avg {
            println!("national {mode}: {v:.3}");
        }
    }
    println!("reconciles: {}", m.reconciles());
    for (name, sum) in &m.artifacts {
        println!("{name:<24} {}", &sum[..12]);
    }
    println!("outputs in {}", cfg.output_dir.display());
    Ok(())
}
