//! Trains briefly on a four-zone building, then prints how much each
//! agent's critic attends to every other agent, before and after training.
//!
//! cargo run --release --example attention -- [episodes]

use std::sync::Arc;

use hvac_maac::env::BuildingParams;
use hvac_maac::maac::{train, AgentSet, Batch, HvacGame, MarkovGame, TrainConfig, Transition};
use hvac_maac::traces::{synthesize_traces, SynthConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mean_weights(agents: &AgentSet, batch: &Batch) -> hvac_maac::Result<()> {
    let tape = agents.critic.forward_tape(&batch.obs, &batch.actions)?;
    let n = agents.num_agents();
    let names: Vec<String> = (0..n).map(|j| if j + 1 == n { "AHU".into() } else { format!("z{}", j + 1) }).collect();
    println!("       {}", names.iter().map(|s| format!("{s:>6}")).collect::<String>());
    for (i, name) in names.iter().enumerate() {
        let w = tape.attention_weights(i);
        let row: String = (0..n).map(|j| format!("{:6.3}", w.column(j).mean().unwrap_or(0.0))).collect();
        println!("{name:>6} {row}");
    }
    Ok(())
}

fn main() -> hvac_maac::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(150);
    let mut params = BuildingParams::default_line(4);
    params.alpha = 6.0;
    params.beta = 0.1;
    let params = Arc::new(params);
    let traces = Arc::new(synthesize_traces(&SynthConfig { days: 20, ..Default::default() }, 0)?);
    let config = TrainConfig { episodes, ..TrainConfig::compact() };
    let make = |w: usize| HvacGame::all_days(params.clone(), traces.clone(), w as u64);

    let (trained, _) = train(make, &config, 1)?;
    let untrained = AgentSet::new(trained.obs_dims(), trained.action_dims(), &config, &mut ChaCha8Rng::seed_from_u64(1))?;

    // one day of transitions under the trained policy
    let mut game = make(0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut obs = game.reset(&mut rng)?;
    let mut items = Vec::new();
    loop {
        let actions = trained.act(&obs, false, &mut rng)?;
        let step = game.step(&actions)?;
        items.push(Transition {
            obs: std::mem::replace(&mut obs, step.obs.clone()),
            actions,
            next_obs: step.obs,
            rewards: step.rewards,
        });
        if step.done {
            break;
        }
    }
    let batch = Batch::from_transitions(&items.iter().collect::<Vec<_>>())?;
    println!("mean attention weight, row attends to column, before training");
    mean_weights(&untrained, &batch)?;
    println!("after {episodes} episodes");
    mean_weights(&trained, &batch)
}
