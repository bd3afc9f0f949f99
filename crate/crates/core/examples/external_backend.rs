//! Serves a baseline model over the line-delimited JSON scorer protocol on a
//! local TCP port, then scores texts through it as the pipeline would.

use std::io::BufReader;
use std::net::TcpListener;
use std::path::Path;
use std::thread;
use std::time::Duration;

use solsent::classify::{self, load_annotations, ClassifierBackend, ExternalBackend};
use solsent::report::train_from_annotations;
use solsent::textprep::NormalizedText;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let mut model =
        train_from_annotations(&load_annotations(demo.join("annotations.tsv"))?, 7)?.model;

    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let mut served = model.clone();
    let server = thread::spawn(move || {
        let (stream, _) = listener.accept().expect("client connects");
        let reader = BufReader::new(stream.try_clone().expect("clone socket"));
        classify::serve(reader, stream, &mut served)
    });

    let texts: Vec<NormalizedText> = [
        "solar panels cut our bill in half",
        "another overpriced solar scam",
        "community solar garden opens today",
    ]
    .iter()
    .enumerate()
    .map(|(i, t)| NormalizedText::new(format!("t{i}"), t))
    .collect();

    let mut remote = ExternalBackend::connect(addr, Duration::from_secs(5))?;
    println!("connected to backend {:?}", remote.backend_id());
    let remote_scores = remote.score(&texts)?;
    let local_scores = model.score(&texts)?;
    for ((t, r), l) in texts.iter().zip(&remote_scores).zip(&local_scores) {
        println!("{} remote={r:.6} local={l:.6}  {}", t.source_id, t.value);
        assert_eq!(r.to_bits(), l.to_bits());
    }
    drop(remote);
    println!("server answered {} batch(es)", server.join().unwrap()?);
    Ok(())
}
