//! Trains agents on the synthetic four-zone experiment, round-trips the
//! checkpoint and evaluates all three schemes on the held-out days.
//!
//! cargo run --release --example train_eval -- [episodes] [seed]

use hvac_maac::cli::{Experiment, ExperimentConfig, Scheme};
use hvac_maac::env::metrics;
use hvac_maac::maac::AgentSet;

fn main() -> hvac_maac::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut config = ExperimentConfig::synthetic();
    config.train.episodes = episodes;
    let exp = Experiment::prepare(&config)?;

    let (agents, log) = exp.train_with_progress(seed, &mut |ep, log| {
        if (ep + 1) % 50 == 0 {
            let w = 50.min(log.len());
            let team: f64 = log.team_sums()[log.len() - w..].iter().sum::<f64>() / w as f64;
            println!("episode {:5}: mean team reward over the last {w} {team:9.2}", ep + 1);
        }
    })?;
    println!("trained {} episodes with {} learning rounds", log.len(), log.learning_rounds());

    let path = std::env::temp_dir().join(format!("hvac_agents_{seed}.ckpt"));
    agents.save(&path)?;
    let loaded = AgentSet::load(&path)?;
    assert_eq!(loaded, agents);

    let (start, horizon) = exp.test_window();
    println!("held-out slots {start}..{}", start + horizon);
    println!("scheme       TEC(RMB)  ATD(C)  ACD(ppm)  comfort");
    for scheme in Scheme::ALL {
        let log = exp.run_scheme(scheme, Some(&loaded), seed)?;
        let m = metrics(&log, &exp.params)?;
        println!("{:10} {:10.2} {:7.3} {:9.2}  {}", scheme.name(), m.tec, m.atd, m.acd, exp.comfort_ok(&m));
    }
    Ok(())
}
