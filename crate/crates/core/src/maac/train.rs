use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AgentSet, MarkovGame, ObsScaler, Optimizers, ReplayBuffer, TrainConfig, Transition};
use crate::env::{run_controller, BuildingParams, Controller, EnvState, EpisodeLog, HvacEnv, JointAction};
use crate::error::{Error, Result};
use crate::traces::TraceSet;

/// Per-episode reward sums of every agent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    num_agents: usize,
    /// `[episode][agent]`
    sums: Vec<Vec<f64>>,
    /// Mean critic loss of the learning rounds in each episode, NaN when
    /// none ran.
    critic_loss: Vec<f64>,
    /// Learning rounds run in each episode.
    rounds: Vec<usize>,
}

impl TrainingLog {
    pub const WINDOW: usize = 200;

    pub fn new(num_agents: usize) -> Self {
        Self {
            num_agents,
            ..Default::default()
        }
    }

    pub fn push(&mut self, sums: Vec<f64>, critic_loss: f64, rounds: usize) {
        assert_eq!(sums.len(), self.num_agents);
        self.sums.push(sums);
        self.critic_loss.push(critic_loss);
        self.rounds.push(rounds);
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    pub fn episode_sums(&self) -> &[Vec<f64>] {
        &self.sums
    }

    pub fn critic_losses(&self) -> &[f64] {
        &self.critic_loss
    }

    /// Total learning rounds (critic, policy and target updates) so far.
    pub fn learning_rounds(&self) -> usize {
        self.rounds.iter().sum()
    }

    /// Mean over the last `window` episodes ending at `episode`, inclusive.
    pub fn running_mean(&self, episode: usize, agent: usize, window: usize) -> f64 {
        let start = (episode + 1).saturating_sub(window);
        let slice = &self.sums[start..=episode];
        slice.iter().map(|s| s[agent]).sum::<f64>() / slice.len() as f64
    }

    /// Mean episode reward of `agent` over `episodes`.
    pub fn mean_over(&self, agent: usize, episodes: std::ops::Range<usize>) -> f64 {
        let slice = &self.sums[episodes];
        slice.iter().map(|s| s[agent]).sum::<f64>() / slice.len() as f64
    }

    /// Sum over agents, per episode.
    pub fn team_sums(&self) -> Vec<f64> {
        self.sums.iter().map(|s| s.iter().sum()).collect()
    }

    /// `episode,agent,reward_sum,running_mean_200`, episodes and agents 1-based.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut out = String::from("episode,agent,reward_sum,running_mean_200\n");
        for (e, sums) in self.sums.iter().enumerate() {
            for (a, s) in sums.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    e + 1,
                    a + 1,
                    s,
                    self.running_mean(e, a, Self::WINDOW)
                ));
            }
        }
        w.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::load(path, e.to_string()))?;
        let header = reader.headers().map_err(|e| Error::load(path, e.to_string()))?.clone();
        if header.iter().collect::<Vec<_>>() != ["episode", "agent", "reward_sum", "running_mean_200"] {
            return Err(Error::load(path, "not a training log header"));
        }
        let mut rows: Vec<(usize, usize, f64)> = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::load(path, format!("row {}: {e}", i + 1)))?;
            let parse_err = || Error::load(path, format!("row {}: malformed", i + 1));
            let e: usize = rec[0].parse().map_err(|_| parse_err())?;
            let a: usize = rec[1].parse().map_err(|_| parse_err())?;
            let s: f64 = rec[2].parse().map_err(|_| parse_err())?;
            rows.push((e, a, s));
        }
        let agents = rows.iter().map(|r| r.1).max().unwrap_or(0);
        let episodes = rows.iter().map(|r| r.0).max().unwrap_or(0);
        if rows.len() != agents * episodes {
            return Err(Error::load(path, "training log is not a full episode × agent grid"));
        }
        let mut log = TrainingLog::new(agents);
        log.sums = vec![vec![f64::NAN; agents]; episodes];
        log.critic_loss = vec![f64::NAN; episodes];
        log.rounds = vec![0; episodes];
        for (e, a, s) in rows {
            if e == 0 || a == 0 {
                return Err(Error::load(path, "episodes and agents are 1-based"));
            }
            log.sums[e - 1][a - 1] = s;
        }
        Ok(log)
    }
}

/// Called after every episode with the episode index and the agents.
pub type EpisodeHook<'a> = dyn FnMut(usize, &AgentSet, &TrainingLog) + 'a;

/// Trains from scratch. Fully determined by `(config, games, seed)` when
/// `parallel_envs == 1`.
pub fn train<G: MarkovGame>(
    make_game: impl FnMut(usize) -> Result<G>,
    config: &TrainConfig,
    seed: u64,
) -> Result<(AgentSet, TrainingLog)> {
    train_with_hook(make_game, config, seed, &mut |_, _, _| {})
}

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn train_with_hook<G: MarkovGame>(
    mut make_game: impl FnMut(usize) -> Result<G>,
    config: &TrainConfig,
    seed: u64,
    hook: &mut EpisodeHook<'_>,
) -> Result<(AgentSet, TrainingLog)> {
    config.validate()?;
    let mut games = (0..config.parallel_envs).map(&mut make_game).collect::<Result<Vec<G>>>()?;
    let obs_dims = games[0].obs_dims();
    let action_dims = games[0].action_dims();
    if games.iter().any(|g| g.obs_dims() != obs_dims || g.action_dims() != action_dims) {
        return Err(Error::Config("parallel environments disagree on shapes".into()));
    }
    let n = action_dims.len();

    let mut init_rng = stream(seed, 0);
    let mut act_rng = stream(seed, 1);
    let mut reset_rng = stream(seed, 2);
    let mut learn_rng = stream(seed, 3);

    let mut agents = AgentSet::new(&obs_dims, &action_dims, config, &mut init_rng)?;
    let mut opt = Optimizers::new(&agents, config.actor_lr, config.critic_lr);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity)?;
    let mut log = TrainingLog::new(n);
    let mut slot = 0usize;
    let workers = games.len() as f64;

    for episode in 0..config.episodes {
        let mut obs = games
            .iter_mut()
            .map(|g| g.reset(&mut reset_rng))
            .collect::<Result<Vec<_>>>()?;
        let mut done = vec![false; games.len()];
        let mut sums = vec![0.0; n];
        let mut loss_sum = 0.0;
        let mut rounds = 0usize;
        for _ in 0..config.slots_per_episode {
            for (w, game) in games.iter_mut().enumerate() {
                if done[w] {
                    continue;
                }
                let actions = agents.act(&obs[w], false, &mut act_rng)?;
                let step = game.step(&actions)?;
                for (s, r) in sums.iter_mut().zip(&step.rewards) {
                    *s += r / workers;
                }
                buffer.push(Transition {
                    obs: std::mem::replace(&mut obs[w], step.obs.clone()),
                    actions,
                    next_obs: step.obs,
                    rewards: step.rewards.iter().map(|r| r * config.reward_scale).collect(),
                });
                done[w] = step.done;
            }
            slot += 1;
            if buffer.len() >= config.batch_size && slot % config.update_every == 0 {
                let batch = buffer.sample(config.batch_size, &mut learn_rng)?;
                loss_sum += agents.critic_update(&batch, &mut opt, &mut learn_rng)?;
                agents.policy_update(&batch, &mut opt, &mut learn_rng)?;
                agents.soft_update();
                rounds += 1;
            }
            if done.iter().all(|d| *d) {
                break;
            }
        }
        let loss = if rounds > 0 { loss_sum / rounds as f64 } else { f64::NAN };
        log.push(sums, loss, rounds);
        hook(episode, &agents, &log);
    }
    Ok((agents, log))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActionMode {
    /// Most probable action of each policy.
    #[default]
    Greedy,
    /// Draw from each policy with the given seed.
    Sample(u64),
}

/// Learned policies acting on the building.
#[derive(Debug, Clone)]
pub struct PolicyController<'a> {
    agents: &'a AgentSet,
    scaler: ObsScaler,
    mode: ActionMode,
    rng: ChaCha8Rng,
}

impl<'a> PolicyController<'a> {
    pub fn new(agents: &'a AgentSet, params: &BuildingParams, slots_per_day: usize, mode: ActionMode) -> Self {
        let seed = match mode {
            ActionMode::Greedy => 0,
            ActionMode::Sample(s) => s,
        };
        Self {
            agents,
            scaler: ObsScaler::new(params, slots_per_day),
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Controller for PolicyController<'_> {
    fn decide(&mut self, params: &BuildingParams, state: &EnvState, traces: &TraceSet) -> Result<(JointAction, bool)> {
        let obs = self.scaler.scale(&params.observe(state, traces));
        let actions = self.agents.act(&obs, self.mode == ActionMode::Greedy, &mut self.rng)?;
        Ok((JointAction::from_agent_indices(&actions), false))
    }
}

/// Runs the learned policies over `horizon` slots from global slot `start`
/// without learning.
pub fn execute(agents: &AgentSet, env: &mut HvacEnv, start: usize, horizon: usize, mode: ActionMode) -> Result<EpisodeLog> {
    let params = env.params().clone();
    if agents.num_agents() != params.num_agents() {
        return Err(Error::Shape(format!(
            "agents control {} agents, building has {}",
            agents.num_agents(),
            params.num_agents()
        )));
    }
    let mut controller = PolicyController::new(agents, &params, env.traces().slots_per_day(), mode);
    run_controller(env, &mut controller, start, horizon)
}
