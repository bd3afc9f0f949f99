//! Trains the bag-of-words baseline on the demo annotations, reports test
//! metrics and writes the model file.

use std::path::Path;

use solsent::classify::{load_annotations, BaselineModel};
use solsent::report::train_from_annotations;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let annotations = load_annotations(demo.join("annotations.tsv"))?;
    let outcome = train_from_annotations(&annotations, 42)?;
    println!("{}", serde_json::to_string_pretty(&outcome.report)?);

    let model = &outcome.model;
    for text in ["love my new solar panels", "solar is a total scam"] {
        println!("{:.3}  {text}", model.predict_proba(text));
    }

    let out = std::env::temp_dir().join("solsent-baseline.json");
    model.save(&out)?;
    let reloaded = BaselineModel::load(&out)?;
    assert_eq!(reloaded.to_json(), model.to_json());
    println!("model written to {}", out.display());
    Ok(())
}
