use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{BuildingParams, EnvState, Feature, HvacEnv, JointAction};
use crate::error::{Error, Result};
use crate::traces::TraceSet;

#[derive(Debug, Clone, PartialEq)]
pub struct GameStep {
    pub obs: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub done: bool,
}

/// A multi-agent environment with discrete actions, as seen by the learner.
/// Observations are already scaled for the networks.
pub trait MarkovGame {
    fn obs_dims(&self) -> Vec<usize>;
    fn action_dims(&self) -> Vec<usize>;

    fn num_agents(&self) -> usize {
        self.action_dims().len()
    }

    /// Starts a new episode and returns the first joint observation.
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>>;

    fn step(&mut self, actions: &[usize]) -> Result<GameStep>;
}

/// Affine per-feature observation scaling for the building. It depends
/// only on the building and the day length, so training and evaluation
/// windows see the same transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsScaler {
    /// `(offset, scale)` per entry, per agent: `(x - offset) / scale`.
    affine: Vec<Vec<(f64, f64)>>,
}

impl ObsScaler {
    pub const PRICE_SCALE: f64 = 1.0;
    pub const OCCUPANCY_SCALE: f64 = 10.0;

    pub fn new(params: &BuildingParams, slots_per_day: usize) -> Self {
        let slots = slots_per_day as f64;
        let affine = (0..params.num_agents())
            .map(|a| {
                params
                    .observation_layout(a)
                    .into_iter()
                    .map(|f| match f {
                        Feature::OutdoorTemp => (22.0, 5.0),
                        Feature::ZoneTemp(z) => {
                            let zp = &params.zones[z];
                            (0.5 * (zp.t_min + zp.t_max), 0.5 * (zp.t_max - zp.t_min).max(1.0))
                        }
                        Feature::Price => (0.0, Self::PRICE_SCALE),
                        Feature::SlotOfDay => (0.0, slots),
                        Feature::Occupancy(_) => (0.0, Self::OCCUPANCY_SCALE),
                        Feature::Co2(z) => (params.zones[z].o_max, 500.0),
                    })
                    .collect()
            })
            .collect();
        Self { affine }
    }

    pub fn scale(&self, raw: &[Vec<f64>]) -> Vec<Vec<f64>> {
        raw.iter()
            .zip(&self.affine)
            .map(|(o, aff)| o.iter().zip(aff).map(|(x, (c, s))| (x - c) / s).collect())
            .collect()
    }
}

/// Which trace windows an [`HvacGame`] draws its episodes from.
#[derive(Debug, Clone, PartialEq)]
pub enum EpisodeDays {
    /// A uniformly drawn day per episode.
    Random(Vec<usize>),
    /// Days in a fixed rotation.
    Cycle(Vec<usize>),
}

/// The building as a Markov game with one agent per zone plus the AHU.
#[derive(Debug, Clone)]
pub struct HvacGame {
    env: HvacEnv,
    scaler: ObsScaler,
    days: EpisodeDays,
    episode: usize,
}

impl HvacGame {
    pub fn new(params: Arc<BuildingParams>, traces: Arc<TraceSet>, days: EpisodeDays, env_seed: u64) -> Result<Self> {
        let list = match &days {
            EpisodeDays::Random(d) | EpisodeDays::Cycle(d) => d,
        };
        if list.is_empty() {
            return Err(Error::Config("no training days to draw episodes from".into()));
        }
        if let Some(bad) = list.iter().find(|&&d| d >= traces.num_days()) {
            return Err(Error::Config(format!(
                "day {bad} is outside the {} available days",
                traces.num_days()
            )));
        }
        let scaler = ObsScaler::new(&params, traces.slots_per_day());
        let env = HvacEnv::new(params, traces, env_seed)?;
        Ok(Self {
            env,
            scaler,
            days,
            episode: 0,
        })
    }

    /// Draws from every whole day of the traces.
    pub fn all_days(params: Arc<BuildingParams>, traces: Arc<TraceSet>, env_seed: u64) -> Result<Self> {
        let days = (0..traces.num_days()).collect();
        Self::new(params, traces, EpisodeDays::Random(days), env_seed)
    }

    pub fn env(&self) -> &HvacEnv {
        &self.env
    }

    pub fn scaler(&self) -> &ObsScaler {
        &self.scaler
    }

    pub fn state(&self) -> &EnvState {
        self.env.state()
    }
}

impl MarkovGame for HvacGame {
    fn obs_dims(&self) -> Vec<usize> {
        let p = self.env.params();
        (0..p.num_agents()).map(|a| p.observation_layout(a).len()).collect()
    }

    fn action_dims(&self) -> Vec<usize> {
        self.env.params().action_sizes()
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        let day = match &self.days {
            EpisodeDays::Random(d) => d[rng.gen_range(0..d.len())],
            EpisodeDays::Cycle(d) => d[self.episode % d.len()],
        };
        self.episode += 1;
        self.env.reset_day(day)?;
        Ok(self.scaler.scale(&self.env.observe()))
    }

    fn step(&mut self, actions: &[usize]) -> Result<GameStep> {
        let step = self.env.step(&JointAction::from_agent_indices(actions))?;
        Ok(GameStep {
            obs: self.scaler.scale(&self.env.observe()),
            rewards: step.reward.totals,
            done: step.done,
        })
    }
}

/// A stateless cooperative game: every agent sees a constant observation
/// and all receive `payoff[a_1][a_2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    payoff: Vec<Vec<f64>>,
    episode_len: usize,
    steps: usize,
}

impl MatrixGame {
    pub fn new(payoff: Vec<Vec<f64>>, episode_len: usize) -> Result<Self> {
        if payoff.is_empty() || payoff[0].is_empty() || payoff.iter().any(|r| r.len() != payoff[0].len()) {
            return Err(Error::Config("payoff must be a non-empty rectangular matrix".into()));
        }
        if episode_len == 0 {
            return Err(Error::Config("episode length must be positive".into()));
        }
        Ok(Self {
            payoff,
            episode_len,
            steps: 0,
        })
    }

    /// Coordination game whose best joint action is `(2, 2)`; the second
    /// best cell `(0, 0)` is a local optimum for independent learners.
    pub fn coordination() -> Self {
        Self::new(
            vec![
                vec![5.0, -4.0, -8.0],
                vec![-4.0, 1.0, -4.0],
                vec![-8.0, -4.0, 10.0],
            ],
            10,
        )
        .expect("valid payoff")
    }

    pub fn best_joint_action(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (r, row) in self.payoff.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if *v > self.payoff[best.0][best.1] {
                    best = (r, c);
                }
            }
        }
        best
    }

    pub fn payoff(&self, a: usize, b: usize) -> f64 {
        self.payoff[a][b]
    }
}

impl MarkovGame for MatrixGame {
    fn obs_dims(&self) -> Vec<usize> {
        vec![1, 1]
    }

    fn action_dims(&self) -> Vec<usize> {
        vec![self.payoff.len(), self.payoff[0].len()]
    }

    fn reset(&mut self, _rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        self.steps = 0;
        Ok(vec![vec![1.0]; 2])
    }

    fn step(&mut self, actions: &[usize]) -> Result<GameStep> {
        if actions.len() != 2 || actions[0] >= self.payoff.len() || actions[1] >= self.payoff[0].len() {
            return Err(Error::Env("matrix game action out of range".into()));
        }
        if self.steps >= self.episode_len {
            return Err(Error::Env("episode already finished; reset first".into()));
        }
        self.steps += 1;
        let r = self.payoff[actions[0]][actions[1]];
        Ok(GameStep {
            obs: vec![vec![1.0]; 2],
            rewards: vec![r; 2],
            done: self.steps >= self.episode_len,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traces::{synthesize_traces, SynthConfig};
    use rand::SeedableRng;

    #[test]
    fn hvac_game_shapes_and_scaling() {
        let p = Arc::new(BuildingParams::default_line(4));
        let tr = Arc::new(synthesize_traces(&SynthConfig { days: 3, ..Default::default() }, 0).unwrap());
        let mut g = HvacGame::all_days(p, tr, 0).unwrap();
        assert_eq!(g.obs_dims(), vec![7, 8, 8, 7, 10]);
        assert_eq!(g.action_dims(), vec![11; 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let obs = g.reset(&mut rng).unwrap();
        assert!(obs.iter().flatten().all(|v| v.abs() < 5.0));
        let mut steps = 0;
        loop {
            let s = g.step(&[3, 3, 3, 3, 5]).unwrap();
            steps += 1;
            assert_eq!(s.rewards.len(), 5);
            if s.done {
                break;
            }
        }
        assert_eq!(steps, 96);
        assert!(g.step(&[0; 5]).is_err());
    }

    #[test]
    fn bad_days_rejected() {
        let p = Arc::new(BuildingParams::default_line(4));
        let tr = Arc::new(synthesize_traces(&SynthConfig { days: 2, ..Default::default() }, 0).unwrap());
        assert!(HvacGame::new(p.clone(), tr.clone(), EpisodeDays::Cycle(vec![]), 0).is_err());
        assert!(HvacGame::new(p, tr, EpisodeDays::Random(vec![2]), 0).is_err());
    }

    #[test]
    fn matrix_game_best_action() {
        let mut g = MatrixGame::coordination();
        assert_eq!(g.best_joint_action(), (2, 2));
        g.reset(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(g.step(&[2, 2]).unwrap().rewards, vec![10.0, 10.0]);
        assert!(g.step(&[3, 0]).is_err());
    }
}
