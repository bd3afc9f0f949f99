//! One-way ANOVA of state scores across the four census regions, with
//! Bonferroni pairwise tests and Bartlett's equal-variance check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solsent::geolocate::{Region, StateCode};
use solsent::stats::{bartlett, oneway_anova, Group};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let shift = |r: Region| match r {
        Region::West => 0.4,
        Region::Northeast => 0.2,
        _ => 0.0,
    };
    let regions = [
        Region::Northeast,
        Region::Midwest,
        Region::South,
        Region::West,
    ];
    let groups: Vec<Group> = regions
        .iter()
        .map(|&r| {
            let values = StateCode::all()
                .filter(|s| s.region() == r)
                .map(|_| 7.5 + shift(r) + rng.random_range(-0.8..0.8))
                .collect();
            Group::new(r.as_str(), values)
        })
        .collect();

    let a = oneway_anova(&groups)?;
    println!(
        "F({}, {}) = {:.3}, p = {:.4}",
        a.df_between, a.df_within, a.f, a.p
    );
    for g in &a.groups {
        println!("  {:<10} n={:>2} mean={:.3}", g.label, g.n, g.mean);
    }
    println!("pairwise (Bonferroni):");
    for p in &a.pairwise {
        println!(
            "  {:<10} vs {:<10} diff {:+.3}  p {:.4} -> {:.4}",
            p.group_a, p.group_b, p.mean_difference, p.p_raw, p.p_bonferroni
        );
    }
    let b = bartlett(&groups)?;
    println!(
        "Bartlett K2 = {:.3} on {} df, p = {:.4}",
        b.statistic, b.df, b.p
    );
    Ok(())
}
