//! Resolves free-text profile locations and coordinates to states.

use std::path::Path;

use solsent::geolocate::Gazetteer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = Gazetteer::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/gazetteer"))?;

    let profiles = [
        "Denver, CO",
        "Portland, OR",
        "living in sunny Cali",
        "Brooklyn",
        "Toronto, Canada",
        "here or there",
        "USA",
    ];
    for p in profiles {
        let (outcome, method) = g.resolve_profile(p);
        println!("{p:<24} {outcome:?} via {method:?}");
    }

    // Coordinates win over whatever the profile says.
    let (outcome, method) = g.resolve(Some("Austin, TX"), Some((39.74, -104.99)));
    println!("Austin, TX @ Denver       {outcome:?} via {method:?}");
    Ok(())
}
