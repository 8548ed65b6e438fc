//! Trains a short run for two seeds and writes the scheme comparison report
//! (CSV tables, per-slot logs and SVG charts).
//!
//! cargo run --release --example compare -- [out_dir]

use std::path::PathBuf;

use hvac_maac::cli::{cmd_compare, cmd_train, ExperimentConfig};

fn main() -> hvac_maac::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("hvac_compare"));
    let mut config = ExperimentConfig::synthetic();
    config.out_dir = out;
    config.seeds = vec![0, 1];
    config.train.episodes = 200;
    for &seed in &config.seeds {
        let art = cmd_train(&config, seed)?;
        println!("seed {seed}: {}", art.checkpoint.display());
    }
    let report = cmd_compare(&config)?;
    for row in &report.summary {
        let i = &row.interval;
        println!("{:9} {:4} {:10.3} ± {:.3}", row.scheme, row.metric, i.mean, i.half_width);
    }
    println!("report in {}", config.out_dir.join("compare").display());
    Ok(())
}
