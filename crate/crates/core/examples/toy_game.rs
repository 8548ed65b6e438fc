//! Two agents learn a coordination matrix game whose best cell (2, 2) sits
//! next to a safer local optimum at (0, 0). Prints the greedy joint action
//! of each seeded run.
//!
//! cargo run --release --example toy_game -- [runs]

use std::time::Instant;

use hvac_maac::maac::{train, MarkovGame, MatrixGame, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hvac_maac::Result<()> {
    let runs: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let config = TrainConfig::matrix_game();
    let game = MatrixGame::coordination();
    let best = game.best_joint_action();
    let mut hits = 0;
    let started = Instant::now();
    for seed in 0..runs {
        let (agents, log) = train(|_| Ok(MatrixGame::coordination()), &config, seed)?;
        let obs = game.clone().reset(&mut ChaCha8Rng::seed_from_u64(0))?;
        let a = agents.act(&obs, true, &mut ChaCha8Rng::seed_from_u64(0))?;
        let last = log.mean_over(0, log.len() - 20..log.len());
        println!("seed {seed}: greedy ({}, {}), mean episode reward over the last 20 {last:.1}", a[0], a[1]);
        if (a[0], a[1]) == best {
            hits += 1;
        }
    }
    println!("{hits}/{runs} runs chose {best:?} in {:.1?}", started.elapsed());
    Ok(())
}
