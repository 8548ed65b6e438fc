//! Multi-actor attention-critic learner.
//!
//! Each agent has a softmax actor over its own observation. The critics see
//! every agent and share one attention block (see [`CriticSet`]). Critics
//! regress onto soft targets from the target networks; actors follow the
//! score-function gradient with a counterfactual baseline that averages the
//! agent's own Q vector under its policy.

mod buffer;
mod game;
mod train;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kv::KvConfig;
use crate::nn::{checkpoint, clip_grad_norm, Activation, Adam, CriticSet, DenseNet, Params};

pub use buffer::{Batch, ReplayBuffer, Transition};
pub use game::{EpisodeDays, GameStep, HvacGame, MarkovGame, MatrixGame, ObsScaler};
pub use train::{execute, train, train_with_hook, ActionMode, PolicyController, TrainingLog};

/// Learner hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Y
    pub episodes: usize,
    /// P: an episode ends when the game says so or after this many slots.
    pub slots_per_episode: usize,
    pub batch_size: usize,
    /// T_update: one learning round every this many slots.
    pub update_every: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    /// Entropy temperature φ.
    pub phi: f64,
    /// Polyak rate ξ.
    pub xi: f64,
    pub actor_hidden: usize,
    pub critic_hidden: usize,
    pub attend_dim: usize,
    pub buffer_capacity: usize,
    /// Per-network global gradient norm cap; 0 disables.
    pub grad_clip: f64,
    pub parallel_envs: usize,
    /// Rewards are multiplied by this before they enter the buffer.
    pub reward_scale: f64,
}

impl TrainConfig {
    /// Values of the original training table.
    pub fn paper() -> Self {
        Self {
            episodes: 5000,
            slots_per_episode: 96,
            batch_size: 120,
            update_every: 1,
            actor_lr: 0.0005,
            critic_lr: 0.001,
            gamma: 0.995,
            phi: 0.1,
            xi: 0.001,
            actor_hidden: 128,
            critic_hidden: 128,
            attend_dim: 128,
            buffer_capacity: 4_800_000,
            grad_clip: 10.0,
            parallel_envs: 1,
            reward_scale: 1.0,
        }
    }

    /// Four-zone setting sized for a single CPU core.
    pub fn desk() -> Self {
        Self {
            episodes: 1500,
            buffer_capacity: 200_000,
            ..Self::paper()
        }
    }

    /// Desk-scale run that fits a minute per seed on one core: narrower
    /// networks, smaller batches and a learning round every fourth slot.
    pub fn compact() -> Self {
        Self {
            batch_size: 32,
            update_every: 4,
            actor_hidden: 32,
            critic_hidden: 32,
            attend_dim: 32,
            ..Self::desk()
        }
    }

    /// Two-agent matrix games with payoffs of order 10 and no future:
    /// γ = 0 and a temperature matched to the payoff scale. 4950 slots.
    pub fn matrix_game() -> Self {
        Self {
            episodes: 495,
            slots_per_episode: 10,
            batch_size: 32,
            gamma: 0.0,
            phi: 5.0,
            xi: 0.01,
            actor_hidden: 16,
            critic_hidden: 16,
            attend_dim: 8,
            buffer_capacity: 5000,
            ..Self::paper()
        }
    }

    /// Preset by name: `paper`, `desk`, `compact` or `matrix_game`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            "compact" => Ok(Self::compact()),
            "matrix_game" => Ok(Self::matrix_game()),
            other => Err(Error::Config(format!("unknown training preset `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("episodes", self.episodes),
            ("slots_per_episode", self.slots_per_episode),
            ("batch_size", self.batch_size),
            ("update_every", self.update_every),
            ("actor_hidden", self.actor_hidden),
            ("critic_hidden", self.critic_hidden),
            ("attend_dim", self.attend_dim),
            ("buffer_capacity", self.buffer_capacity),
            ("parallel_envs", self.parallel_envs),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("`{k}` must be positive")));
        }
        let rates = [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("reward_scale", self.reward_scale),
        ];
        if let Some((k, v)) = rates.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("`{k}` must be positive, got {v}")));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.xi) {
            return Err(Error::Config("gamma and xi must lie in [0, 1]".into()));
        }
        if !(self.phi >= 0.0 && self.phi.is_finite()) || !(self.grad_clip >= 0.0) {
            return Err(Error::Config("phi and grad_clip must be non-negative".into()));
        }
        Ok(())
    }

    /// Overrides from `train.<field>` keys, e.g. `train.episodes = 300`.
    pub fn from_kv(cfg: &KvConfig, base: Self) -> Result<Self> {
        let mut c = base;
        macro_rules! take {
            ($($field:ident),*) => {
                $( c.$field = cfg.get_or(concat!("train.", stringify!($field)), c.$field)?; )*
            };
        }
        take!(
            episodes,
            slots_per_episode,
            batch_size,
            update_every,
            actor_lr,
            critic_lr,
            gamma,
            phi,
            xi,
            actor_hidden,
            critic_hidden,
            attend_dim,
            buffer_capacity,
            grad_clip,
            parallel_envs,
            reward_scale
        );
        c.validate()?;
        Ok(c)
    }
}

/// Adam state for every network the learner updates.
#[derive(Debug, Clone)]
pub struct Optimizers {
    pub actors: Vec<Adam>,
    pub critic: Adam,
}

impl Optimizers {
    pub fn new(agents: &AgentSet, actor_lr: f64, critic_lr: f64) -> Self {
        Self {
            actors: agents.actors.iter().map(|a| Adam::new(a, actor_lr)).collect(),
            critic: Adam::new(&agents.critic, critic_lr),
        }
    }
}

/// Live and target networks of all agents.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSet {
    pub actors: Vec<DenseNet>,
    pub critic: CriticSet,
    pub target_actors: Vec<DenseNet>,
    pub target_critic: CriticSet,
    pub phi: f64,
    pub gamma: f64,
    pub xi: f64,
    pub grad_clip: f64,
}

fn row_log_prob(probs: &Array2<f64>, actions: &[usize]) -> Array1<f64> {
    actions
        .iter()
        .enumerate()
        .map(|(b, &a)| probs[[b, a]].ln())
        .collect()
}

fn sample_rows<R: Rng + ?Sized>(probs: &Array2<f64>, rng: &mut R) -> Vec<usize> {
    probs.rows().into_iter().map(|row| sample_categorical(&row.to_vec(), rng)).collect()
}

/// Draws an index with probability proportional to `probs`.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

/// Expected Q of an agent under its own policy, other agents held fixed.
pub fn multiagent_baseline(q: &[f64], probs: &[f64]) -> f64 {
    q.iter().zip(probs).map(|(q, p)| q * p).sum()
}

fn gather(m: &Array2<f64>, idx: &[usize]) -> Array1<f64> {
    idx.iter().enumerate().map(|(b, &a)| m[[b, a]]).collect()
}

/// Per-sample coefficient `ρ` of the policy gradient for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTerms {
    /// Actions drawn from the live policy.
    pub actions: Vec<Vec<usize>>,
    pub rho: Vec<Array1<f64>>,
}

const CHECKPOINT_VERSION: u32 = 1;

impl AgentSet {
    pub fn new<R: Rng + ?Sized>(obs_dims: &[usize], action_dims: &[usize], config: &TrainConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let actors: Vec<DenseNet> = obs_dims
            .iter()
            .zip(action_dims)
            .map(|(&o, &a)| DenseNet::mlp(&[o, config.actor_hidden, config.actor_hidden, a], Activation::Softmax, rng))
            .collect();
        let critic = CriticSet::new(obs_dims, action_dims, config.critic_hidden, config.attend_dim, rng)?;
        Ok(Self {
            target_actors: actors.clone(),
            target_critic: critic.clone(),
            actors,
            critic,
            phi: config.phi,
            gamma: config.gamma,
            xi: config.xi,
            grad_clip: config.grad_clip,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.actors.len()
    }

    pub fn obs_dims(&self) -> &[usize] {
        self.critic.obs_dims()
    }

    pub fn action_dims(&self) -> &[usize] {
        self.critic.action_dims()
    }

    /// Policy of every agent at one joint observation.
    pub fn policy(&self, obs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if obs.len() != self.num_agents() {
            return Err(Error::Shape(format!("expected {} observations", self.num_agents())));
        }
        self.actors
            .iter()
            .zip(obs)
            .map(|(actor, o)| {
                let x = Array2::from_shape_vec((1, o.len()), o.clone()).expect("row vector");
                Ok(actor.forward(&x)?.row(0).to_vec())
            })
            .collect()
    }

    /// Sampled or greedy joint action.
    pub fn act<R: Rng + ?Sized>(&self, obs: &[Vec<f64>], greedy: bool, rng: &mut R) -> Result<Vec<usize>> {
        Ok(self
            .policy(obs)?
            .iter()
            .map(|p| if greedy { argmax(p) } else { sample_categorical(p, rng) })
            .collect())
    }

    /// `y_i = r_i + γ (Q̄_i(õ, ã)[ã_i] - φ log π̄_i(ã_i | õ_i))` with one
    /// joint sample `ã ~ π̄(õ)`.
    pub fn critic_targets<R: Rng + ?Sized>(&self, batch: &Batch, rng: &mut R) -> Result<Vec<Array1<f64>>> {
        let n = self.num_agents();
        let mut next_actions = Vec::with_capacity(n);
        let mut log_probs = Vec::with_capacity(n);
        for j in 0..n {
            let probs = self.target_actors[j].forward(&batch.next_obs[j])?;
            let a = sample_rows(&probs, rng);
            log_probs.push(row_log_prob(&probs, &a));
            next_actions.push(a);
        }
        let q_next = self.target_critic.forward(&batch.next_obs, &next_actions)?;
        Ok((0..n)
            .map(|i| {
                let q = gather(&q_next[i], &next_actions[i]);
                &batch.rewards[i] + &((&q - &(&log_probs[i] * self.phi)) * self.gamma)
            })
            .collect())
    }

    /// Joint regression loss `Σ_i mean_b (Q_i - y_i)²` and its gradient.
    pub fn critic_loss_grad(&self, batch: &Batch, targets: &[Array1<f64>]) -> Result<(f64, CriticSet)> {
        let tape = self.critic.forward_tape(&batch.obs, &batch.actions)?;
        let qs = CriticSet::outputs(&tape);
        let bsz = batch.len() as f64;
        let mut loss = 0.0;
        let mut dq = Vec::with_capacity(qs.len());
        for (i, q) in qs.iter().enumerate() {
            let mut d = Array2::zeros(q.dim());
            for (b, &a) in batch.actions[i].iter().enumerate() {
                let err = q[[b, a]] - targets[i][b];
                loss += err * err / bsz;
                d[[b, a]] = 2.0 * err / bsz;
            }
            dq.push(d);
        }
        let mut grad = self.critic.zeros_like();
        self.critic.backward(&tape, &dq, &mut grad)?;
        Ok((loss, grad))
    }

    /// One optimizer step on all critic parameters. Returns the loss before
    /// the step.
    pub fn critic_update<R: Rng + ?Sized>(&mut self, batch: &Batch, opt: &mut Optimizers, rng: &mut R) -> Result<f64> {
        let targets = self.critic_targets(batch, rng)?;
        let (loss, mut grad) = self.critic_loss_grad(batch, &targets)?;
        clip_grad_norm(&mut grad, self.grad_clip);
        opt.critic.step(&mut self.critic, &grad)?;
        Ok(loss)
    }

    /// Fresh actions from the live policies and the detached coefficients
    /// `ρ_i = -φ log π_i(a_i) + Q_i(o, a)[a_i] - Σ_k π_i(k) Q_i(o, a)[k]`.
    pub fn policy_terms<R: Rng + ?Sized>(&self, batch: &Batch, rng: &mut R) -> Result<PolicyTerms> {
        let n = self.num_agents();
        let mut probs = Vec::with_capacity(n);
        let mut actions = Vec::with_capacity(n);
        for i in 0..n {
            let p = self.actors[i].forward(&batch.obs[i])?;
            actions.push(sample_rows(&p, rng));
            probs.push(p);
        }
        let q = self.critic.forward(&batch.obs, &actions)?;
        let rho = (0..n)
            .map(|i| {
                let baseline = (&q[i] * &probs[i]).sum_axis(Axis(1));
                let chosen = gather(&q[i], &actions[i]);
                let logp = row_log_prob(&probs[i], &actions[i]);
                &chosen - &baseline - &(&logp * self.phi)
            })
            .collect();
        Ok(PolicyTerms { actions, rho })
    }

    /// Surrogate `mean_b log π_i(a_i | o_i) ρ_i` of one actor and its
    /// gradient with `ρ` held constant.
    pub fn policy_surrogate_grad(&self, agent: usize, obs: &Array2<f64>, actions: &[usize], rho: &Array1<f64>) -> Result<(f64, DenseNet)> {
        let actor = &self.actors[agent];
        let tape = actor.forward_tape(obs)?;
        let probs = tape.output();
        let bsz = actions.len() as f64;
        let mut value = 0.0;
        let mut d = Array2::zeros(probs.dim());
        for (b, &a) in actions.iter().enumerate() {
            value += probs[[b, a]].ln() * rho[b] / bsz;
            d[[b, a]] = rho[b] / (bsz * probs[[b, a]]);
        }
        let mut grad = actor.zeros_like();
        actor.backward(&tape, &d, &mut grad)?;
        Ok((value, grad))
    }

    /// One ascent step per actor. Returns each actor's gradient norm before
    /// clipping.
    pub fn policy_update<R: Rng + ?Sized>(&mut self, batch: &Batch, opt: &mut Optimizers, rng: &mut R) -> Result<Vec<f64>> {
        let terms = self.policy_terms(batch, rng)?;
        self.apply_policy_terms(batch, &terms, opt)
    }

    pub fn apply_policy_terms(&mut self, batch: &Batch, terms: &PolicyTerms, opt: &mut Optimizers) -> Result<Vec<f64>> {
        let mut norms = Vec::with_capacity(self.num_agents());
        for i in 0..self.num_agents() {
            let (_, mut grad) = self.policy_surrogate_grad(i, &batch.obs[i], &terms.actions[i], &terms.rho[i])?;
            grad.scale(-1.0);
            norms.push(clip_grad_norm(&mut grad, self.grad_clip));
            opt.actors[i].step(&mut self.actors[i], &grad)?;
        }
        Ok(norms)
    }

    /// `target <- ξ live + (1 - ξ) target` for actors and critics.
    pub fn soft_update(&mut self) {
        for (t, l) in self.target_actors.iter_mut().zip(&self.actors) {
            t.soft_update(l, self.xi);
        }
        self.target_critic.soft_update(&self.critic, self.xi);
    }

    fn header(&self) -> Vec<u32> {
        let n = self.num_agents();
        let mut h = vec![
            CHECKPOINT_VERSION,
            n as u32,
            self.actors[0].layers()[0].dense.output_dim() as u32,
            self.critic.hidden() as u32,
            self.critic.attend_dim() as u32,
        ];
        h.extend(self.obs_dims().iter().map(|d| *d as u32));
        h.extend(self.action_dims().iter().map(|d| *d as u32));
        h
    }

    fn all_tensors(&self) -> Vec<&Array2<f64>> {
        let mut t = self.actors.tensors();
        t.extend(self.critic.tensors());
        t.extend(self.target_actors.tensors());
        t.extend(self.target_critic.tensors());
        t
    }

    /// Writes the flat binary checkpoint described in [`crate::nn::checkpoint`].
    /// The first tensor is `[φ, γ, ξ, grad_clip]`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let hyper = Array2::from_shape_vec((1, 4), vec![self.phi, self.gamma, self.xi, self.grad_clip]).expect("1x4");
        let mut tensors = vec![&hyper];
        tensors.extend(self.all_tensors());
        checkpoint::write_tensors(&mut w, &self.header(), &tensors)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        let (header, tensors) = checkpoint::read_tensors(&mut BufReader::new(file))?;
        if header.len() < 5 || header[0] != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint("unsupported checkpoint header".into()));
        }
        let n = header[1] as usize;
        if header.len() != 5 + 2 * n {
            return Err(Error::Checkpoint("header length does not match agent count".into()));
        }
        let obs: Vec<usize> = header[5..5 + n].iter().map(|d| *d as usize).collect();
        let act: Vec<usize> = header[5 + n..].iter().map(|d| *d as usize).collect();
        let config = TrainConfig {
            actor_hidden: header[2] as usize,
            critic_hidden: header[3] as usize,
            attend_dim: header[4] as usize,
            ..TrainConfig::paper()
        };
        let mut agents = AgentSet::new(&obs, &act, &config, &mut ChaCha8Rng::seed_from_u64(0))?;
        let hyper = tensors.first().ok_or_else(|| Error::Checkpoint("missing hyperparameters".into()))?;
        if hyper.dim() != (1, 4) {
            return Err(Error::Checkpoint("bad hyperparameter tensor".into()));
        }
        agents.phi = hyper[[0, 0]];
        agents.gamma = hyper[[0, 1]];
        agents.xi = hyper[[0, 2]];
        agents.grad_clip = hyper[[0, 3]];
        let rest = &tensors[1..];
        let mut slots: Vec<&mut Array2<f64>> = agents.actors.tensors_mut();
        slots.extend(agents.critic.tensors_mut());
        slots.extend(agents.target_actors.tensors_mut());
        slots.extend(agents.target_critic.tensors_mut());
        if slots.len() != rest.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                slots.len(),
                rest.len()
            )));
        }
        for (dst, src) in slots.into_iter().zip(rest) {
            if dst.dim() != src.dim() {
                return Err(Error::Checkpoint(format!(
                    "tensor shape {:?} does not match architecture {:?}",
                    src.dim(),
                    dst.dim()
                )));
            }
            dst.assign(src);
        }
        Ok(agents)
    }
}
