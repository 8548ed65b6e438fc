//! Generates synthetic price, weather and occupancy traces, writes them as
//! CSV, loads them back and prints an hourly profile of the first day.
//!
//! cargo run --example synth_traces -- [out_dir]

use std::path::PathBuf;

use hvac_maac::traces::{load_traces, synthesize_traces, LoadConfig, SynthConfig};

fn main() -> hvac_maac::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("hvac_traces"));
    let config = SynthConfig { days: 14, ..SynthConfig::default() };
    let traces = synthesize_traces(&config, 7)?;
    let paths = traces.write_csv(&dir)?;
    let back = load_traces(
        &paths.price,
        &paths.weather,
        &paths.occupancy,
        &LoadConfig::native(config.num_zones, config.slot_minutes),
    )?;
    assert_eq!(back, traces);
    println!("{} days of {}-minute slots in {}", back.num_days(), back.slot_minutes(), dir.display());

    let per_hour = back.slots_per_day() / 24;
    println!("hour  price  T_out  heads");
    for h in 0..24 {
        let t = h * per_hour;
        let heads: u32 = (0..back.num_zones()).map(|z| back.occupancy(z, t)).sum();
        println!("{h:4} {:6.2} {:6.1} {heads:6}", back.price(t), back.outdoor_temp(t));
    }
    Ok(())
}
