use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};

/// One joint step: observations, actions, next observations and rewards of
/// every agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub next_obs: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
}

/// A sampled mini-batch, laid out per agent with one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs: Vec<Array2<f64>>,
    pub actions: Vec<Vec<usize>>,
    pub next_obs: Vec<Array2<f64>>,
    pub rewards: Vec<Array1<f64>>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.actions.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn from_transitions(items: &[&Transition]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::Learner("cannot build an empty batch".into()))?;
        let agents = first.actions.len();
        let stack = |get: &dyn Fn(&Transition) -> &Vec<f64>| -> Result<Array2<f64>> {
            let width = get(first).len();
            let mut m = Array2::zeros((items.len(), width));
            for (r, t) in items.iter().enumerate() {
                let row = get(t);
                if row.len() != width {
                    return Err(Error::Shape("observation widths differ within a batch".into()));
                }
                m.row_mut(r).assign(&ndarray::ArrayView1::from(row.as_slice()));
            }
            Ok(m)
        };
        let mut obs = Vec::with_capacity(agents);
        let mut next_obs = Vec::with_capacity(agents);
        let mut actions = Vec::with_capacity(agents);
        let mut rewards = Vec::with_capacity(agents);
        for j in 0..agents {
            obs.push(stack(&|t: &Transition| &t.obs[j])?);
            next_obs.push(stack(&|t: &Transition| &t.next_obs[j])?);
            actions.push(items.iter().map(|t| t.actions[j]).collect());
            rewards.push(items.iter().map(|t| t.rewards[j]).collect());
        }
        Ok(Self {
            obs,
            actions,
            next_obs,
            rewards,
        })
    }
}

/// Fixed-capacity ring of transitions; the oldest is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay buffer capacity must be positive".into()));
        }
        Ok(Self {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            next: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Stored transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// `size` transitions drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<Batch> {
        if size == 0 {
            return Err(Error::Learner("batch size must be positive".into()));
        }
        if self.items.len() < size {
            return Err(Error::Learner(format!(
                "buffer holds {} transitions, batch needs {size}",
                self.items.len()
            )));
        }
        let picks: Vec<&Transition> = (0..size)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect();
        Batch::from_transitions(&picks)
    }

    /// Like [`sample`](Self::sample) but without the fill guard, so a
    /// buffer of 1 yields `size` copies.
    pub fn sample_unguarded<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<Batch> {
        if self.items.is_empty() {
            return Err(Error::Learner("cannot sample from an empty buffer".into()));
        }
        let picks: Vec<&Transition> = (0..size)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect();
        Batch::from_transitions(&picks)
    }
}
