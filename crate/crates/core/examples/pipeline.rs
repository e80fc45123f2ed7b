//! The whole pipeline from a data file to theory, candidate and log files.
//!
//! cargo run --release --example pipeline

use possrel::pipeline::{run_pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("possrel-pipeline-example");
    std::fs::create_dir_all(&dir)?;
    let mut data = String::new();
    for i in 0..10 {
        let j = (i + 1) % 10;
        data.push_str(&format!("fr(p{i},p{j})\nfr(p{j},p{i})\n"));
        if i < 4 {
            data.push_str(&format!("sm(p{i})\nca(p{i})\n"));
        }
    }
    let input = dir.join("friends.db");
    let output = dir.join("friends.theory");
    std::fs::write(&input, data)?;

    let mut cfg = PipelineConfig::default();
    cfg.set("k", "2")?;
    cfg.data = Some(input);
    cfg.output = Some(output.clone());
    let learned = run_pipeline(&cfg)?;
    println!("{} hard rules, {} candidates", learned.hard.len(), learned.rules.len());
    for w in &learned.warnings {
        println!("warning: {w}");
    }
    println!("\n{}:", output.display());
    print!("{}", std::fs::read_to_string(&output)?);
    Ok(())
}
