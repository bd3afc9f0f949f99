//! Joins state scores to policy covariates, fits the seven single-covariate
//! models plus the full model with HC1 errors, and prints the table.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solsent::aggregate::{scores_from_tallies, tally_states, Population};
use solsent::geolocate::StateCode;
use solsent::policyindex::load_profiles;
use solsent::report::tables::{analysis_rows, regression_models, write_table3};
use solsent::stats::RobustFlavor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let profiles = load_profiles(data.join("demo/policy_synthetic.csv"))?;
    let pop = Population::load(data.join("population.csv"))?;

    // Sentiment that rises with net-metering generosity, plus noise.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut labeled = Vec::new();
    for p in &profiles {
        let lean = 0.5 + 0.04 * p.nem_score as f64;
        for _ in 0..rng.random_range(40..160) {
            labeled.push((p.state, rng.random_bool(lean.min(0.95))));
        }
    }
    debug_assert_eq!(StateCode::all().count(), profiles.len());
    let scores = scores_from_tallies(&tally_states(labeled), &pop)?;

    let rows = analysis_rows(&scores, &profiles);
    let models = regression_models(&rows, RobustFlavor::Hc1)?;
    write_table3(&models, std::io::stdout())?;

    let full = models.last().expect("eight models");
    if let Some(v) = &full.vif {
        println!("\nmean VIF {:.2}", v.mean);
    }
    Ok(())
}
