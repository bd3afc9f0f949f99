//! Runs the keyword, relevance, profile and duplicate filters over the demo
//! corpus and prints how many posts each stage removed.

use std::path::Path;

use solsent::ingest::{self, FilterChain, PhraseMatcher};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let chain = FilterChain {
        keywords: PhraseMatcher::from_file(demo.join("keywords.txt"))?,
        stopphrases: PhraseMatcher::from_file(demo.join("stopphrases.txt"))?,
    };
    let records = ingest::open_jsonl(demo.join("corpus.jsonl"))?;
    let (kept, report) = chain.run(records);

    println!("malformed lines      {:>6}", report.n_malformed);
    println!("posts read           {:>6}", report.n_input);
    println!("keyword matches      {:>6}", report.n_keyword_matched);
    println!("irrelevant           {:>6}", report.n_excluded_irrelevant);
    println!("profile-only         {:>6}", report.n_excluded_profile_only);
    println!("duplicate ids        {:>6}", report.n_deduped);
    println!("retained             {:>6}", report.n_retained);
    assert!(report.reconciles());

    for p in kept.iter().take(3) {
        println!("  {} {}", p.id, p.text);
    }
    Ok(())
}
