//! Multi-zone building simulator and its Markov-game view.
//!
//! Agents `0..N` control the supply airflow of each zone, agent `N` (the AHU)
//! controls the recirculation damper. Dynamics use the slot length in
//! seconds, costs use it in hours, and powers are converted from W to kW
//! before pricing.

mod log;
mod params;

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::traces::TraceSet;

pub use log::{metrics, EpisodeLog, LogRow, Metrics};
pub use params::{
    default_airflow_levels, default_damper_levels, BuildingParams, Layout, ZoneParams,
    DEFAULT_ELL, DEFAULT_HBAR, DEFAULT_VARPI, DEFAULT_VOLUME,
};

/// Ground-truth simulator state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    /// °C per zone
    pub temps: Vec<f64>,
    /// ppm per zone
    pub co2: Vec<f64>,
    /// Global slot index into the trace set.
    pub slot: usize,
    pub slot_of_day: usize,
}

/// Discrete joint action: one airflow level per zone and one damper level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointAction {
    pub airflow_idx: Vec<usize>,
    pub damper_idx: usize,
}

impl JointAction {
    pub fn idle(n: usize) -> Self {
        Self {
            airflow_idx: vec![0; n],
            damper_idx: 0,
        }
    }

    /// Per-agent indices, AHU last.
    pub fn to_agent_indices(&self) -> Vec<usize> {
        let mut v = self.airflow_idx.clone();
        v.push(self.damper_idx);
        v
    }

    pub fn from_agent_indices(indices: &[usize]) -> Self {
        let (damper, zones) = indices.split_last().expect("at least the AHU agent");
        Self {
            airflow_idx: zones.to_vec(),
            damper_idx: *damper,
        }
    }
}

/// The four reward parts of one agent (all ≤ 0).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RewardParts {
    pub fan: f64,
    pub coil: f64,
    pub temp: f64,
    pub co2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector {
    /// `alpha * (fan + coil) + beta * co2 + temp` per agent.
    pub totals: Vec<f64>,
    pub parts: Vec<RewardParts>,
    /// RMB
    pub fan_cost: f64,
    /// RMB
    pub coil_cost: f64,
}

impl RewardVector {
    pub fn energy_cost(&self) -> f64 {
        self.fan_cost + self.coil_cost
    }
}

/// Meaning of one observation entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    OutdoorTemp,
    ZoneTemp(usize),
    Price,
    SlotOfDay,
    Occupancy(usize),
    Co2(usize),
}

/// Mixed-air CO₂ concentration. With no airflow there is no return air and
/// the return term is 0.
pub fn co2_mix(co2: &[f64], airflows: &[f64], damper: f64, o_out: f64) -> f64 {
    let total: f64 = airflows.iter().sum();
    let ret = if total > 0.0 {
        co2.iter().zip(airflows).map(|(o, m)| o * m).sum::<f64>() / total
    } else {
        0.0
    };
    (1.0 - damper) * o_out + damper * ret
}

/// Mixed-air temperature, or `None` with no airflow.
pub fn temp_mix(temps: &[f64], airflows: &[f64], damper: f64, t_out: f64) -> Option<f64> {
    let total: f64 = airflows.iter().sum();
    (total > 0.0).then(|| {
        damper * temps.iter().zip(airflows).map(|(t, m)| t * m).sum::<f64>() / total
            + (1.0 - damper) * t_out
    })
}

impl BuildingParams {
    pub fn check_action(&self, action: &JointAction) -> Result<()> {
        if action.airflow_idx.len() != self.num_zones() {
            return Err(Error::Env(format!(
                "action has {} zone entries, building has {}",
                action.airflow_idx.len(),
                self.num_zones()
            )));
        }
        for (i, (&a, z)) in action.airflow_idx.iter().zip(&self.zones).enumerate() {
            if a >= z.num_levels() {
                return Err(Error::Env(format!("zone{} airflow index {a} out of range", i + 1)));
            }
        }
        if action.damper_idx >= self.damper_levels.len() {
            return Err(Error::Env(format!("damper index {} out of range", action.damper_idx)));
        }
        Ok(())
    }

    /// Number of discrete actions of each agent, AHU last.
    pub fn action_sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.zones.iter().map(ZoneParams::num_levels).collect();
        v.push(self.damper_levels.len());
        v
    }

    pub fn airflows(&self, action: &JointAction) -> Vec<f64> {
        action
            .airflow_idx
            .iter()
            .zip(&self.zones)
            .map(|(&a, z)| z.airflow_levels[a])
            .collect()
    }

    pub fn damper(&self, action: &JointAction) -> f64 {
        self.damper_levels[action.damper_idx]
    }

    /// One uniform draw in ±υ per zone. Zones with υ = 0 consume no randomness.
    pub fn sample_disturbance<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.zones
            .iter()
            .map(|z| {
                if z.upsilon > 0.0 {
                    rng.gen_range(-z.upsilon..=z.upsilon)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// RC temperature update for every zone.
    pub fn thermal_update(&self, temps: &[f64], airflows: &[f64], t_out: f64, disturbance: &[f64]) -> Vec<f64> {
        self.zones
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let coupled: f64 = z.hbar.iter().map(|&(nb, h)| h * temps[nb]).sum();
                z.ell * temps[i]
                    + coupled
                    + z.varpi * airflows[i] * (self.t_supply - temps[i])
                    + z.varrho * t_out
                    + disturbance[i]
            })
            .collect()
    }

    /// CO₂ added by `heads` occupants during one slot, ppm.
    pub fn occupancy_source(&self, zone: usize, heads: u32) -> f64 {
        heads as f64 * self.tau_seconds * self.chi * 1000.0 / self.zones[zone].volume
    }

    /// Fraction of zone air replaced by supply air in one slot.
    pub fn mixing_fraction(&self, zone: usize, airflow: f64) -> f64 {
        airflow * self.tau_seconds / (self.kappa * self.zones[zone].volume)
    }

    pub fn co2_update(&self, co2: &[f64], airflows: &[f64], damper: f64, o_out: f64, occupancy: &[u32]) -> Vec<f64> {
        let mix = co2_mix(co2, airflows, damper, o_out);
        (0..self.num_zones())
            .map(|i| {
                let frac = self.mixing_fraction(i, airflows[i]);
                (1.0 - frac) * co2[i] + frac * mix + self.occupancy_source(i, occupancy[i])
            })
            .collect()
    }

    /// Supply fan power, W.
    pub fn fan_power(&self, airflows: &[f64]) -> f64 {
        self.mu * airflows.iter().sum::<f64>().powi(3)
    }

    /// Supply fan energy cost over one slot, RMB.
    pub fn fan_energy_cost(&self, airflows: &[f64], price: f64) -> f64 {
        self.fan_power(airflows) / 1000.0 * price * self.tau_hours
    }

    /// Per-zone coil power before clamping, W. Sums to the mixed-air form.
    pub fn coil_power_unclamped(&self, temps: &[f64], airflows: &[f64], damper: f64, t_out: f64) -> Vec<f64> {
        let k = self.coil_factor();
        temps
            .iter()
            .zip(airflows)
            .map(|(t, m)| m * k * (damper * t + (1.0 - damper) * t_out - self.t_supply))
            .collect()
    }

    /// Per-zone coil power, W; the coil only cools so negatives clamp to 0.
    pub fn coil_power(&self, temps: &[f64], airflows: &[f64], damper: f64, t_out: f64) -> Vec<f64> {
        self.coil_power_unclamped(temps, airflows, damper, t_out)
            .into_iter()
            .map(|p| p.max(0.0))
            .collect()
    }

    /// Coil energy cost over one slot, RMB.
    pub fn coil_energy_cost(&self, powers: &[f64], price: f64) -> f64 {
        powers.iter().sum::<f64>() / 1000.0 * price * self.tau_hours
    }

    pub fn thermal_step<R: Rng + ?Sized>(
        &self,
        state: &EnvState,
        action: &JointAction,
        traces: &TraceSet,
        rng: &mut R,
    ) -> Vec<f64> {
        let noise = self.sample_disturbance(rng);
        self.thermal_update(&state.temps, &self.airflows(action), traces.outdoor_temp(exo(traces, state.slot)), &noise)
    }

    pub fn co2_step(&self, state: &EnvState, action: &JointAction, traces: &TraceSet) -> Vec<f64> {
        let t = exo(traces, state.slot);
        let heads: Vec<u32> = (0..self.num_zones()).map(|z| traces.occupancy(z, t)).collect();
        self.co2_update(&state.co2, &self.airflows(action), self.damper(action), traces.outdoor_co2(t), &heads)
    }

    pub fn coil_power_per_zone(&self, state: &EnvState, action: &JointAction, traces: &TraceSet) -> Vec<f64> {
        let t = exo(traces, state.slot);
        self.coil_power(&state.temps, &self.airflows(action), self.damper(action), traces.outdoor_temp(t))
    }

    /// Rewards for the transition `prev --action--> next`. Energy terms use
    /// the previous slot; comfort terms use the new state and the occupancy
    /// at the new slot.
    pub fn reward(&self, prev: &EnvState, action: &JointAction, next: &EnvState, traces: &TraceSet) -> RewardVector {
        let n = self.num_zones();
        let nf = n as f64;
        let t = exo(traces, prev.slot);
        let price = traces.price(t);
        let airflows = self.airflows(action);
        let powers = self.coil_power(&prev.temps, &airflows, self.damper(action), traces.outdoor_temp(t));
        let fan_cost = self.fan_energy_cost(&airflows, price);
        let coil_cost = self.coil_energy_cost(&powers, price);

        let t_next = exo(traces, next.slot);
        let mut parts = vec![RewardParts::default(); n + 1];
        let mut co2_violation = 0.0;
        for (i, z) in self.zones.iter().enumerate() {
            let occupied = traces.occupancy(i, t_next) > 0;
            let temp_dev = if occupied {
                (next.temps[i] - z.t_max).max(0.0) + (z.t_min - next.temps[i]).max(0.0)
            } else {
                0.0
            };
            let co2_dev = if occupied { (next.co2[i] - z.o_max).max(0.0) } else { 0.0 };
            co2_violation += co2_dev;
            parts[i] = RewardParts {
                fan: -fan_cost / nf,
                coil: -(nf / (nf + 1.0)) * powers[i] / 1000.0 * price * self.tau_hours,
                temp: -temp_dev,
                co2: -(nf / (nf + 1.0)) * co2_dev,
            };
        }
        parts[n] = RewardParts {
            fan: 0.0,
            coil: -coil_cost / (nf + 1.0),
            temp: 0.0,
            co2: -co2_violation / (nf + 1.0),
        };
        let totals = parts
            .iter()
            .map(|p| self.alpha * (p.fan + p.coil) + self.beta * p.co2 + p.temp)
            .collect();
        RewardVector {
            totals,
            parts,
            fan_cost,
            coil_cost,
        }
    }

    /// Entry meanings of agent `agent`'s observation vector.
    ///
    /// Zone agent i: `[T_out, T_i, T_z for z in neighbors (ascending), price, slot_of_day, K_i, O_i]`.
    /// AHU agent: `[price, slot_of_day, K_1..K_N, O_1..O_N]`.
    pub fn observation_layout(&self, agent: usize) -> Vec<Feature> {
        let n = self.num_zones();
        if agent < n {
            let mut v = vec![Feature::OutdoorTemp, Feature::ZoneTemp(agent)];
            v.extend(self.zones[agent].neighbors().map(Feature::ZoneTemp));
            v.extend([Feature::Price, Feature::SlotOfDay, Feature::Occupancy(agent), Feature::Co2(agent)]);
            v
        } else {
            let mut v = vec![Feature::Price, Feature::SlotOfDay];
            v.extend((0..n).map(Feature::Occupancy));
            v.extend((0..n).map(Feature::Co2));
            v
        }
    }

    pub fn observe(&self, state: &EnvState, traces: &TraceSet) -> Vec<Vec<f64>> {
        let t = exo(traces, state.slot);
        let value = |f: Feature| match f {
            Feature::OutdoorTemp => traces.outdoor_temp(t),
            Feature::ZoneTemp(z) => state.temps[z],
            Feature::Price => traces.price(t),
            Feature::SlotOfDay => state.slot_of_day as f64,
            Feature::Occupancy(z) => traces.occupancy(z, t) as f64,
            Feature::Co2(z) => state.co2[z],
        };
        (0..self.num_agents())
            .map(|a| self.observation_layout(a).into_iter().map(value).collect())
            .collect()
    }

    /// Applies one slot of dynamics and returns the next state and rewards.
    pub fn transition<R: Rng + ?Sized>(
        &self,
        state: &EnvState,
        action: &JointAction,
        traces: &TraceSet,
        rng: &mut R,
    ) -> (EnvState, RewardVector) {
        let temps = self.thermal_step(state, action, traces, rng);
        let co2 = self.co2_step(state, action, traces);
        let slot = state.slot + 1;
        let next = EnvState {
            temps,
            co2,
            slot,
            slot_of_day: slot % traces.slots_per_day(),
        };
        let reward = self.reward(state, action, &next, traces);
        (next, reward)
    }
}

/// Exogenous values past the final slot hold the last available slot.
fn exo(traces: &TraceSet, slot: usize) -> usize {
    slot.min(traces.len() - 1)
}

/// Starting temperatures and CO₂ of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditions {
    /// `None` starts each zone at the outdoor temperature clamped into its
    /// comfort band.
    pub temp: Option<f64>,
    pub co2: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        Self { temp: None, co2: 500.0 }
    }
}

/// State at the first slot of day `day_index`.
pub fn reset(params: &BuildingParams, traces: &TraceSet, day_index: usize, init: &InitialConditions) -> Result<EnvState> {
    let window = traces.episode(day_index)?;
    Ok(initial_state(params, traces, window.start(), init))
}

fn initial_state(params: &BuildingParams, traces: &TraceSet, slot: usize, init: &InitialConditions) -> EnvState {
    let t_out = traces.outdoor_temp(slot);
    EnvState {
        temps: params
            .zones
            .iter()
            .map(|z| init.temp.unwrap_or_else(|| t_out.clamp(z.t_min, z.t_max)))
            .collect(),
        co2: vec![init.co2; params.num_zones()],
        slot,
        slot_of_day: slot % traces.slots_per_day(),
    }
}

#[derive(Debug, Clone)]
pub struct Step {
    pub state: EnvState,
    pub reward: RewardVector,
    pub done: bool,
}

/// A simulator instance: owns its state, disturbance stream and the window of
/// slots it runs over. Parameters and traces are shared read-only.
#[derive(Debug, Clone)]
pub struct HvacEnv {
    params: Arc<BuildingParams>,
    traces: Arc<TraceSet>,
    init: InitialConditions,
    state: EnvState,
    horizon: usize,
    steps: usize,
    rng: ChaCha8Rng,
}

impl HvacEnv {
    pub fn new(params: Arc<BuildingParams>, traces: Arc<TraceSet>, seed: u64) -> Result<Self> {
        params.validate()?;
        if traces.num_zones() != params.num_zones() {
            return Err(Error::Env(format!(
                "traces describe {} zones, building has {}",
                traces.num_zones(),
                params.num_zones()
            )));
        }
        let init = InitialConditions::default();
        let state = initial_state(&params, &traces, 0, &init);
        Ok(Self {
            params,
            traces,
            init,
            state,
            horizon: 0,
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn with_initial_conditions(mut self, init: InitialConditions) -> Self {
        self.init = init;
        self
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn params(&self) -> &BuildingParams {
        &self.params
    }

    pub fn traces(&self) -> &TraceSet {
        &self.traces
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_done(&self) -> bool {
        self.steps >= self.horizon
    }

    /// Start a one-day episode.
    pub fn reset_day(&mut self, day_index: usize) -> Result<&EnvState> {
        let window = self.traces.episode(day_index)?;
        self.reset_window(window.start(), window.len())
    }

    /// Start an episode of `horizon` slots at global slot `start`.
    pub fn reset_window(&mut self, start: usize, horizon: usize) -> Result<&EnvState> {
        if start + horizon > self.traces.len() || start >= self.traces.len() {
            return Err(Error::Env(format!(
                "window {start}..{} exceeds trace length {}",
                start + horizon,
                self.traces.len()
            )));
        }
        self.state = initial_state(&self.params, &self.traces, start, &self.init);
        self.horizon = horizon;
        self.steps = 0;
        Ok(&self.state)
    }

    pub fn observe(&self) -> Vec<Vec<f64>> {
        self.params.observe(&self.state, &self.traces)
    }

    pub fn step(&mut self, action: &JointAction) -> Result<Step> {
        if self.is_done() {
            return Err(Error::Env("episode already finished; reset first".into()));
        }
        self.params.check_action(action)?;
        let (next, reward) = self.params.transition(&self.state, action, &self.traces, &mut self.rng);
        self.state = next;
        self.steps += 1;
        Ok(Step {
            state: self.state.clone(),
            reward,
            done: self.is_done(),
        })
    }

    /// Step and append the slot to `log`.
    pub fn step_logged(&mut self, action: &JointAction, log: &mut EpisodeLog) -> Result<Step> {
        let prev_slot = self.state.slot;
        let step = self.step(action)?;
        log.push(LogRow::from_step(&self.params, &self.traces, prev_slot, action, &step, false));
        Ok(step)
    }
}

/// A decision rule that may inspect the true simulator state.
pub trait Controller {
    /// Action for the current slot and whether it was a fallback decision.
    fn decide(&mut self, params: &BuildingParams, state: &EnvState, traces: &TraceSet) -> Result<(JointAction, bool)>;

    /// Called at the start of every episode.
    fn reset(&mut self) {}
}

/// Runs `controller` over `horizon` slots starting at global slot `start`.
pub fn run_controller<C: Controller + ?Sized>(
    env: &mut HvacEnv,
    controller: &mut C,
    start: usize,
    horizon: usize,
) -> Result<EpisodeLog> {
    env.reset_window(start, horizon)?;
    controller.reset();
    let mut log = EpisodeLog::new(env.params().num_zones());
    while !env.is_done() {
        let (action, flag) = controller.decide(&env.params, &env.state, &env.traces)?;
        let prev_slot = env.state.slot;
        let step = env.step(&action)?;
        log.push(LogRow::from_step(&env.params, &env.traces, prev_slot, &action, &step, flag));
    }
    Ok(log)
}
