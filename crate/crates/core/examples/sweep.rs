//! Sweeps the energy and CO₂ weights over a 2×2 grid with short training
//! runs and prints the mean metrics of each cell.
//!
//! cargo run --release --example sweep -- [episodes]

use hvac_maac::cli::{cmd_sweep, ExperimentConfig, Interval};

fn main() -> hvac_maac::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let mut config = ExperimentConfig::synthetic();
    config.out_dir = std::env::temp_dir().join("hvac_sweep");
    config.seeds = vec![0, 1];
    config.train.episodes = episodes;
    let rows = cmd_sweep(&config)?;
    println!("alpha  beta      TEC     ATD     ACD");
    for &alpha in &config.alpha_grid {
        for &beta in &config.beta_grid {
            let cell: Vec<_> = rows.iter().filter(|r| r.alpha == alpha && r.beta == beta).collect();
            let mean = |f: fn(&hvac_maac::env::Metrics) -> f64| Interval::of(&cell.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>()).mean;
            println!("{alpha:5} {beta:5} {:8.1} {:7.3} {:7.2}", mean(|m| m.tec), mean(|m| m.atd), mean(|m| m.acd));
        }
    }
    println!("tables and charts in {}", config.out_dir.join("sweep").display());
    Ok(())
}
