//! Steps the building by hand under two fixed actions and prints the zone
//! temperatures, CO₂ and energy cost of each slot.

use std::sync::Arc;

use hvac_maac::env::{BuildingParams, HvacEnv, JointAction};
use hvac_maac::traces::{synthesize_traces, SynthConfig};

fn main() -> hvac_maac::Result<()> {
    let params = Arc::new(BuildingParams::default_line(3));
    let traces = Arc::new(synthesize_traces(&SynthConfig { days: 1, num_zones: 3, ..Default::default() }, 2)?);
    let mut env = HvacEnv::new(params.clone(), traces.clone(), 0)?;

    let idle = JointAction::idle(3);
    let full = JointAction {
        airflow_idx: vec![params.zones[0].num_levels() - 1; 3],
        damper_idx: params.damper_levels.len() / 2,
    };
    for (name, action) in [("idle", &idle), ("full airflow", &full)] {
        // business hours, 10:00 to 13:00
        env.reset_window(40, 12)?;
        println!("{name}");
        println!("slot  temps(C)               co2(ppm)                 cost(RMB)");
        while !env.is_done() {
            let step = env.step(action)?;
            let s = &step.state;
            let temps: Vec<String> = s.temps.iter().map(|t| format!("{t:5.2}")).collect();
            let co2: Vec<String> = s.co2.iter().map(|c| format!("{c:6.0}")).collect();
            println!("{:4}  {}  {}  {:.4}", s.slot, temps.join(" "), co2.join(" "), step.reward.energy_cost());
        }
    }
    Ok(())
}
