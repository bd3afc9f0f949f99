//! Shows what the text cleanup does to typical posts.

use solsent::textprep::{is_normalized, normalize};

fn main() {
    let samples = [
        "RT @SolarNews: Rooftop #solar is booming https://t.co/abc123",
        "Just got my #SolarPanels installed!!   @installer_co did great",
        "Solar farm tour today pic.twitter.com/xYz123",
        "https://only.a/link",
    ];
    for s in samples {
        let clean = normalize(s);
        assert!(is_normalized(&clean));
        println!(
            "{s:?}\n  -> {clean:?}{}",
            if clean.is_empty() {
                " (dropped before scoring)"
            } else {
                ""
            }
        );
    }
}
