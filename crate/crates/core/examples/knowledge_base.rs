//! Generates the movie knowledge base, runs a few symbolic queries and
//! prints the result summaries the policy sees.

use dialogue_workbench::dialogue::{DONTCARE_VALUE, NULL_VALUE};
use dialogue_workbench::domain::{generate_kb, summarize_results, KbSize, SymbolicQuery};

fn main() -> dialogue_workbench::Result<()> {
    let kb = generate_kb(1, KbSize::default())?;
    println!("{} showings; first three:", kb.len());
    for line in kb.to_text().lines().take(4) {
        println!("  {line}");
    }
    let movie = kb.entities()[0].movie.clone();
    let theater = kb.entities()[0].theater.clone();
    let queries = [
        ("nothing known", [NULL_VALUE, NULL_VALUE, NULL_VALUE, NULL_VALUE, NULL_VALUE]),
        ("movie only", [NULL_VALUE, movie.as_str(), NULL_VALUE, NULL_VALUE, NULL_VALUE]),
        ("movie and theater", ["2", movie.as_str(), theater.as_str(), DONTCARE_VALUE, NULL_VALUE]),
        ("unknown movie", [NULL_VALUE, "no-such-film", NULL_VALUE, NULL_VALUE, NULL_VALUE]),
    ];
    for (label, labels) in queries {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        let results = kb.execute(&SymbolicQuery::from_labels(&labels));
        let summary = summarize_results(&results);
        println!("{label}: {} matches, bucket {}, encoded {:?}", results.len(), summary.bucket, summary.encoded);
    }
    Ok(())
}
