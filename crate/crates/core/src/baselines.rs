//! Comparison controllers: the rule-based ON/OFF scheme (RS) and the
//! model-aware heuristic (HS).

use crate::env::{BuildingParams, Controller, EnvState, JointAction};
use crate::error::{Error, Result};
use crate::traces::TraceSet;

/// Index of the level nearest to `value`; exact midpoints go to the lower
/// level. `levels` must be ascending.
pub fn snap(levels: &[f64], value: f64) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (k, l) in levels.iter().enumerate() {
        let d = (l - value).abs();
        if d < best_dist {
            best = k;
            best_dist = d;
        }
    }
    best
}

/// ON/OFF control on the zone temperature with a fixed damper.
#[derive(Debug, Clone, PartialEq)]
pub struct RsController {
    prev: Vec<usize>,
    damper_idx: usize,
}

impl RsController {
    pub fn new(num_zones: usize, damper_idx: usize) -> Self {
        Self {
            prev: vec![0; num_zones],
            damper_idx,
        }
    }

    /// Damper fixed at the level nearest σ = 0.5.
    pub fn with_default_damper(params: &BuildingParams) -> Self {
        Self::new(params.num_zones(), snap(&params.damper_levels, 0.5))
    }

    pub fn damper_idx(&self) -> usize {
        self.damper_idx
    }

    pub fn previous(&self) -> &[usize] {
        &self.prev
    }

    /// Occupied and too warm: maximum airflow. Occupied and too cold: the
    /// lowest level. Occupied in band: unchanged. Empty: 0.
    pub fn step(&mut self, params: &BuildingParams, occupancy: &[u32], temps: &[f64]) -> JointAction {
        for (i, z) in params.zones.iter().enumerate() {
            self.prev[i] = if occupancy[i] == 0 {
                0
            } else if temps[i] > z.t_max {
                z.num_levels() - 1
            } else if temps[i] < z.t_min {
                0
            } else {
                self.prev[i]
            };
        }
        JointAction {
            airflow_idx: self.prev.clone(),
            damper_idx: self.damper_idx,
        }
    }
}

impl Controller for RsController {
    fn decide(&mut self, params: &BuildingParams, state: &EnvState, traces: &TraceSet) -> Result<(JointAction, bool)> {
        let t = state.slot.min(traces.len() - 1);
        let occ: Vec<u32> = (0..params.num_zones()).map(|z| traces.occupancy(z, t)).collect();
        Ok((self.step(params, &occ, &state.temps), false))
    }

    fn reset(&mut self) {
        self.prev.fill(0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsParams {
    /// Damper value for zones that need ventilation.
    pub zeta: f64,
}

impl Default for HsParams {
    fn default() -> Self {
        Self { zeta: 0.86 }
    }
}

/// Continuous per-zone decision before snapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneDecision {
    pub airflow: f64,
    pub damper: f64,
    /// No airflow in range satisfies the target.
    pub infeasible: bool,
    pub branch: HsBranch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsBranch {
    Empty,
    Thermal,
    Ventilation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsDecision {
    pub action: JointAction,
    pub zones: Vec<ZoneDecision>,
    /// Average damper before snapping.
    pub damper: f64,
    pub flagged: bool,
}

/// Smallest airflow with `T_{i,t+1} ≤ T_max` under the noise-free RC map,
/// unclamped. `None` when supply air cannot cool the zone.
pub fn thermal_airflow(params: &BuildingParams, zone: usize, temps: &[f64], t_out: f64) -> Option<f64> {
    let z = &params.zones[zone];
    let no_flow = params.thermal_update(temps, &vec![0.0; temps.len()], t_out, &vec![0.0; temps.len()])[zone];
    if no_flow <= z.t_max {
        return Some(0.0);
    }
    let gain = z.varpi * (temps[zone] - params.t_supply);
    (gain > 0.0).then(|| (no_flow - z.t_max) / gain)
}

/// Smallest airflow with `O_{i,t+1} ≤ O_max` when supply air is approximated
/// by `(1-ζ) O_out + ζ max_j O_j`, unclamped. `None` when that supply air is
/// not cleaner than the zone.
pub fn ventilation_airflow(
    params: &BuildingParams,
    zone: usize,
    co2: &[f64],
    o_out: f64,
    source: f64,
    zeta: f64,
) -> Option<f64> {
    let z = &params.zones[zone];
    let o_peak = co2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let denom = (1.0 - zeta) * o_out + zeta * o_peak - co2[zone];
    if denom >= 0.0 {
        return None;
    }
    Some(params.kappa * z.volume * (z.o_max - co2[zone] - source) / (params.tau_seconds * denom))
}

pub fn hs_decide(params: &BuildingParams, hs: &HsParams, state: &EnvState, traces: &TraceSet) -> Result<HsDecision> {
    if !(0.0..=1.0).contains(&hs.zeta) || hs.zeta == 0.0 {
        return Err(Error::Config(format!("HS zeta must lie in (0, 1], got {}", hs.zeta)));
    }
    let n = params.num_zones();
    let t = state.slot.min(traces.len() - 1);
    let t_out = traces.outdoor_temp(t);
    let o_out = traces.outdoor_co2(t);
    let mut zones = Vec::with_capacity(n);
    for (i, z) in params.zones.iter().enumerate() {
        let heads = traces.occupancy(i, t);
        let m_max = z.max_airflow();
        let m_min = z.airflow_levels[0];
        let decision = if heads == 0 {
            ZoneDecision {
                airflow: 0.0,
                damper: 0.0,
                infeasible: false,
                branch: HsBranch::Empty,
            }
        } else {
            let source = params.occupancy_source(i, heads);
            let (raw, damper, branch) = if state.co2[i] + source < z.o_max {
                (thermal_airflow(params, i, &state.temps, t_out), 1.0, HsBranch::Thermal)
            } else {
                (
                    ventilation_airflow(params, i, &state.co2, o_out, source, hs.zeta),
                    hs.zeta,
                    HsBranch::Ventilation,
                )
            };
            ZoneDecision {
                airflow: raw.unwrap_or(m_max).clamp(m_min, m_max),
                damper,
                infeasible: raw.is_none(),
                branch,
            }
        };
        zones.push(decision);
    }
    let damper = zones.iter().map(|d| d.damper).sum::<f64>() / n as f64;
    let action = JointAction {
        airflow_idx: zones
            .iter()
            .zip(&params.zones)
            .map(|(d, z)| snap(&z.airflow_levels, d.airflow))
            .collect(),
        damper_idx: snap(&params.damper_levels, damper),
    };
    Ok(HsDecision {
        action,
        flagged: zones.iter().any(|d| d.infeasible),
        zones,
        damper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HsController {
    pub params: HsParams,
}

impl Controller for HsController {
    fn decide(&mut self, params: &BuildingParams, state: &EnvState, traces: &TraceSet) -> Result<(JointAction, bool)> {
        let d = hs_decide(params, &self.params, state, traces)?;
        Ok((d.action, d.flagged))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::HvacEnv;
    use crate::traces::{synthesize_traces, SynthConfig};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn traces(n: usize, t_out: f64, heads: u32) -> TraceSet {
        TraceSet::new(vec![1.0; 4], vec![t_out; 4], vec![400.0; 4], vec![vec![heads; 4]; n], 15).unwrap()
    }

    fn state(temps: Vec<f64>, co2: Vec<f64>) -> EnvState {
        EnvState {
            temps,
            co2,
            slot: 0,
            slot_of_day: 0,
        }
    }

    #[test]
    fn snapping() {
        let levels: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        assert_eq!(snap(&levels, 0.93), 9);
        assert_eq!(snap(&levels, 0.25), 2);
        assert_eq!(snap(&levels, 0.35), 3);
        assert_eq!(snap(&levels, 0.45), 4);
        assert_eq!(snap(&[0.0, 2.0], 1.0), 0);
        assert_eq!(snap(&levels, 7.0), 10);
        assert_eq!(snap(&levels, -1.0), 0);
    }

    #[test]
    fn rs_rules() {
        let p = BuildingParams::default_line(3);
        let mut rs = RsController::with_default_damper(&p);
        assert_eq!(p.damper_levels[rs.damper_idx()], 0.5);
        let a = rs.step(&p, &[3, 3, 0], &[25.0, 18.0, 30.0]);
        assert_eq!(a.airflow_idx, vec![10, 0, 0]);
        let a = rs.step(&p, &[3, 3, 0], &[21.0, 21.0, 21.0]);
        assert_eq!(a.airflow_idx, vec![10, 0, 0]);
        let a = rs.step(&p, &[0, 3, 3], &[21.0, 25.0, 21.0]);
        assert_eq!(a.airflow_idx, vec![0, 10, 0]);
        assert_eq!(a.damper_idx, 5);
    }

    #[test]
    fn hs_all_empty() {
        let p = BuildingParams::default_line(2);
        let tr = traces(2, 30.0, 0);
        let d = hs_decide(&p, &HsParams::default(), &state(vec![26.0; 2], vec![900.0; 2]), &tr).unwrap();
        assert_eq!(d.action, JointAction::idle(2));
        assert_eq!(d.damper, 0.0);
    }

    #[test]
    fn hs_branch_one_example() {
        // 5 occupants * 900 s * 0.005 * 1000 / 250 m³ = 90 ppm; 1000 + 90 < 1300
        let mut p = BuildingParams::default_line(1);
        p.zones[0].volume = 250.0;
        let tr = traces(1, 30.0, 5);
        assert!((p.occupancy_source(0, 5) - 90.0).abs() < 1e-12);
        let d = hs_decide(&p, &HsParams::default(), &state(vec![25.0], vec![1000.0]), &tr).unwrap();
        assert_eq!(d.zones[0].branch, HsBranch::Thermal);
        assert_eq!(d.zones[0].damper, 1.0);
        assert_eq!(d.action.damper_idx, 10);
    }

    #[test]
    fn hs_ventilation_branch_and_fallback() {
        let p = BuildingParams::default_line(2);
        let tr = traces(2, 30.0, 10);
        let d = hs_decide(&p, &HsParams::default(), &state(vec![22.0; 2], vec![1250.0, 1100.0]), &tr).unwrap();
        assert_eq!(d.zones[0].branch, HsBranch::Ventilation);
        assert!(!d.zones[0].infeasible);
        assert_eq!(d.zones[1].branch, HsBranch::Thermal);
        assert!((d.damper - 0.93).abs() < 1e-12);
        // at ζ = 1 the approximate supply equals the peak zone, so no airflow helps
        let d = hs_decide(&p, &HsParams { zeta: 1.0 }, &state(vec![22.0; 2], vec![1250.0, 1250.0]), &tr).unwrap();
        assert!(d.flagged);
        assert_eq!(d.action.airflow_idx, vec![10, 10]);
        assert!(hs_decide(&p, &HsParams { zeta: 0.0 }, &state(vec![22.0; 2], vec![900.0; 2]), &tr).is_err());
    }

    #[test]
    fn controllers_run_full_days() {
        let p = Arc::new(BuildingParams::default_line(4));
        let tr = Arc::new(synthesize_traces(&SynthConfig { days: 2, ..Default::default() }, 3).unwrap());
        let mut env = HvacEnv::new(p.clone(), tr.clone(), 0).unwrap();
        let w = tr.episode(1).unwrap();
        let rs = crate::env::run_controller(&mut env, &mut RsController::with_default_damper(&p), w.start(), w.len()).unwrap();
        let hs = crate::env::run_controller(&mut env, &mut HsController::default(), w.start(), w.len()).unwrap();
        assert_eq!(rs.len(), 96);
        assert_eq!(hs.len(), 96);
        let empty = crate::env::run_controller(&mut env, &mut HsController::default(), w.start(), 0).unwrap();
        assert!(empty.is_empty());
    }

    proptest! {
        #[test]
        fn hs_thermal_airflow_reaches_band(
            temps in prop::collection::vec(20.0f64..32.0, 3),
            t_out in 15.0f64..40.0,
        ) {
            let p = BuildingParams::default_line(3);
            for i in 0..3 {
                if let Some(m) = thermal_airflow(&p, i, &temps, t_out) {
                    if m <= p.zones[i].max_airflow() {
                        let mut flows = vec![0.0; 3];
                        flows[i] = m;
                        let next = p.thermal_update(&temps, &flows, t_out, &[0.0; 3]);
                        prop_assert!(next[i] <= p.zones[i].t_max + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn hs_ventilation_airflow_reaches_limit(
            co2 in prop::collection::vec(800.0f64..2500.0, 3),
            heads in 0u32..20,
            zeta in 0.05f64..1.0,
        ) {
            let p = BuildingParams::default_line(3);
            let source = p.occupancy_source(0, heads);
            if let Some(m) = ventilation_airflow(&p, 0, &co2, 400.0, source, zeta) {
                if (0.0..=p.zones[0].max_airflow()).contains(&m) {
                    let o_peak = co2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let supply = (1.0 - zeta) * 400.0 + zeta * o_peak;
                    let frac = p.mixing_fraction(0, m);
                    let next = (1.0 - frac) * co2[0] + frac * supply + source;
                    prop_assert!(next <= p.zones[0].o_max + 1e-9);
                }
            }
        }

        #[test]
        fn controllers_emit_valid_indices(
            temps in prop::collection::vec(10.0f64..40.0, 4),
            co2 in prop::collection::vec(400.0f64..3000.0, 4),
            heads in prop::collection::vec(0u32..15, 4),
            t_out in 0.0f64..42.0,
        ) {
            let p = BuildingParams::default_line(4);
            let tr = TraceSet::new(vec![1.0], vec![t_out], vec![400.0], heads.iter().map(|h| vec![*h]).collect(), 15).unwrap();
            let s = state(temps.clone(), co2);
            let d = hs_decide(&p, &HsParams::default(), &s, &tr).unwrap();
            prop_assert!(p.check_action(&d.action).is_ok());
            let mut rs = RsController::with_default_damper(&p);
            prop_assert!(p.check_action(&rs.step(&p, &heads, &temps)).is_ok());
        }
    }
}
