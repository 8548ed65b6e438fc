//! Runs the rule-based and heuristic controllers over a few synthetic days
//! and prints comfort and cost metrics for each.

use std::sync::Arc;

use hvac_maac::baselines::{HsController, RsController};
use hvac_maac::env::{metrics, run_controller, BuildingParams, Controller, HvacEnv};
use hvac_maac::traces::{synthesize_traces, SynthConfig};

fn main() -> hvac_maac::Result<()> {
    let params = Arc::new(BuildingParams::default_line(4));
    let traces = Arc::new(synthesize_traces(&SynthConfig { days: 7, ..Default::default() }, 1)?);
    let mut env = HvacEnv::new(params.clone(), traces.clone(), 0)?;

    let mut controllers: Vec<(&str, Box<dyn Controller>)> = vec![
        ("RS", Box::new(RsController::with_default_damper(&params))),
        ("HS", Box::new(HsController::default())),
    ];
    println!("scheme  day   TEC(RMB)  ATD(C)  ACD(ppm)  reward_sum");
    for (name, c) in controllers.iter_mut() {
        for day in 0..traces.num_days() {
            let w = traces.episode(day)?;
            let log = run_controller(&mut env, c.as_mut(), w.start(), w.len())?;
            let m = metrics(&log, &params)?;
            let reward: f64 = log.rows().iter().flat_map(|r| r.rewards.iter()).sum();
            println!("{name:6} {day:4} {:10.3} {:7.3} {:9.2} {:11.2}", m.tec, m.atd, m.acd, reward);
        }
    }
    Ok(())
}
