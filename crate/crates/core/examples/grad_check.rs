//! Checks the analytic gradients of the joint critic loss and of one actor's
//! policy surrogate against central finite differences.

use hvac_maac::maac::{AgentSet, Batch, TrainConfig};
use hvac_maac::nn::{glorot, grad_check};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> hvac_maac::Result<()> {
    let (obs, acts) = ([5, 4, 6], [3, 3, 2]);
    let config = TrainConfig {
        actor_hidden: 12,
        critic_hidden: 12,
        attend_dim: 6,
        ..TrainConfig::paper()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let size = 8;
    let batch = Batch {
        obs: obs.iter().map(|&d| glorot(size, d, &mut rng)).collect(),
        actions: acts.iter().map(|&a| (0..size).map(|_| rng.gen_range(0..a)).collect()).collect(),
        next_obs: obs.iter().map(|&d| glorot(size, d, &mut rng)).collect(),
        rewards: obs.iter().map(|_| (0..size).map(|_| rng.gen_range(-2.0..0.0)).collect()).collect(),
    };
    let agents = AgentSet::new(&obs, &acts, &config, &mut rng)?;

    let targets = agents.critic_targets(&batch, &mut rng)?;
    let (loss, grad) = agents.critic_loss_grad(&batch, &targets)?;
    let report = grad_check(
        &mut agents.critic.clone(),
        |c| {
            let mut probe = agents.clone();
            probe.critic = c.clone();
            probe.critic_loss_grad(&batch, &targets).expect("shapes match").0
        },
        &grad,
        1e-4,
    );
    println!(
        "critic loss {loss:.4}: {} parameters, max rel error {:.2e}, passed {}",
        report.checked,
        report.max_rel_error,
        report.passed()
    );

    let terms = agents.policy_terms(&batch, &mut rng)?;
    let (value, grad) = agents.policy_surrogate_grad(0, &batch.obs[0], &terms.actions[0], &terms.rho[0])?;
    let report = grad_check(
        &mut agents.actors[0].clone(),
        |a| {
            let mut probe = agents.clone();
            probe.actors[0] = a.clone();
            probe
                .policy_surrogate_grad(0, &batch.obs[0], &terms.actions[0], &terms.rho[0])
                .expect("shapes match")
                .0
        },
        &grad,
        1e-4,
    );
    println!(
        "policy surrogate {value:.4}: {} parameters, max rel error {:.2e}, passed {}",
        report.checked,
        report.max_rel_error,
        report.passed()
    );
    Ok(())
}
