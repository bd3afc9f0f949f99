//! Aggregates labeled posts into 0-10 state scores with Wilson intervals,
//! compares the two national averages and draws the tile map.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solsent::aggregate::{
    national_average, scores_from_tallies, tally_states, AverageMode, Population,
};
use solsent::geolocate::StateCode;
use solsent::report::svg;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pop = Population::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/population.csv"))?;
    let states: Vec<StateCode> = StateCode::all().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    // Big states post more; every state leans positive by a different amount.
    let labeled: Vec<(StateCode, bool)> = (0..8000)
        .map(|_| {
            let s = states[rng.random_range(0..states.len())];
            let s = if rng.random_bool(0.3) { states[4] } else { s };
            let lean = 0.55 + 0.4 * (s.index() % 7) as f64 / 6.0;
            (s, rng.random_bool(lean))
        })
        .collect();

    let scores = scores_from_tallies(&tally_states(labeled), &pop)?;
    println!("state     n  score  95% interval   per million");
    for s in scores.iter().take(8) {
        println!(
            "{:<4} {:>6}  {:>5.2}  [{:.2}, {:.2}]  {:>8.1}",
            s.state.code(),
            s.n_tweets,
            s.score,
            s.ci_low,
            s.ci_high,
            s.tweets_per_million
        );
    }
    println!("...");
    let weighted = national_average(&scores, AverageMode::TweetWeighted)?;
    let mean = national_average(&scores, AverageMode::StateMean)?;
    println!("national: tweet-weighted {weighted:.3}, state mean {mean:.3}");

    let out = std::env::temp_dir().join("solsent-map.svg");
    std::fs::write(&out, svg::map_svg(&scores))?;
    println!("map written to {}", out.display());
    Ok(())
}
