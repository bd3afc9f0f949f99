//! Computes the RPS pace and net-metering scores, first for hand-made
//! inputs and then for every row of the bundled policy table.

use std::path::Path;

use solsent::policyindex::{load_profiles, nem_score, rps_score, NemComponents, RpsInput};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        ("no mandate", RpsInput::no_target(12.0)?),
        ("already met", RpsInput::new(Some(10.0), None, 35.0)?),
        (
            "50% by 2030 from 20%",
            RpsInput::new(Some(50.0), Some(2030), 20.0)?,
        ),
        (
            "100% by 2045 from 31%",
            RpsInput::new(Some(100.0), Some(2045), 31.0)?,
        ),
    ];
    for (label, input) in &cases {
        println!("{label:<24} {:.4} points/year", rps_score(input)?);
    }

    let strongest = NemComponents::new(4, 1, 1, 1, 2)?;
    let weakest = NemComponents::new(0, 0, 0, 0, 0)?;
    println!(
        "net metering range {}..{}",
        nem_score(&weakest),
        nem_score(&strongest)
    );

    let profiles = load_profiles(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo/policy_synthetic.csv"),
    )?;
    let mut by_rps: Vec<_> = profiles.iter().collect();
    by_rps.sort_by(|a, b| b.rps_score.total_cmp(&a.rps_score));
    println!("\nmost demanding RPS paces in the synthetic table:");
    for p in by_rps.iter().take(5) {
        println!(
            "  {} {:>6.3}  nem {}",
            p.state.code(),
            p.rps_score,
            p.nem_score
        );
    }
    Ok(())
}
