//! Per-slot episode logs, their CSV form, and the comfort/cost metrics.
//!
//! CSV columns, for N zones:
//!
//! ```text
//! slot,price,outdoor_temp,temp_1..temp_N,co2_1..co2_N,occ_1..occ_N,
//! airflow_idx_1..airflow_idx_N,damper_idx,airflow_total,damper,
//! fan_cost,coil_cost,reward_1..reward_{N+1},flag
//! ```
//!
//! `slot` is the slot of the resulting state; `price` and `outdoor_temp` are
//! the values the action was priced and simulated under; temperatures, CO₂
//! and occupancy belong to the resulting state.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{BuildingParams, JointAction, Step};
use crate::error::{Error, Result};
use crate::traces::TraceSet;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub slot: usize,
    pub price: f64,
    pub outdoor_temp: f64,
    pub temps: Vec<f64>,
    pub co2: Vec<f64>,
    pub occupancy: Vec<u32>,
    pub airflow_idx: Vec<usize>,
    pub damper_idx: usize,
    /// g/s
    pub airflow_total: f64,
    pub damper: f64,
    pub fan_cost: f64,
    pub coil_cost: f64,
    pub rewards: Vec<f64>,
    /// Set by controllers that had to fall back to a default decision.
    pub flag: bool,
}

impl LogRow {
    pub fn from_step(
        params: &BuildingParams,
        traces: &TraceSet,
        prev_slot: usize,
        action: &JointAction,
        step: &Step,
        flag: bool,
    ) -> Self {
        let last = traces.len() - 1;
        let t = prev_slot.min(last);
        let t_next = step.state.slot.min(last);
        LogRow {
            slot: step.state.slot,
            price: traces.price(t),
            outdoor_temp: traces.outdoor_temp(t),
            temps: step.state.temps.clone(),
            co2: step.state.co2.clone(),
            occupancy: (0..params.num_zones()).map(|z| traces.occupancy(z, t_next)).collect(),
            airflow_idx: action.airflow_idx.clone(),
            damper_idx: action.damper_idx,
            airflow_total: params.airflows(action).iter().sum(),
            damper: params.damper(action),
            fan_cost: step.reward.fan_cost,
            coil_cost: step.reward.coil_cost,
            rewards: step.reward.totals.clone(),
            flag,
        }
    }

    pub fn energy_cost(&self) -> f64 {
        self.fan_cost + self.coil_cost
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeLog {
    num_zones: usize,
    rows: Vec<LogRow>,
}

impl EpisodeLog {
    pub fn new(num_zones: usize) -> Self {
        Self {
            num_zones,
            rows: Vec::new(),
        }
    }

    pub fn num_zones(&self) -> usize {
        self.num_zones
    }

    pub fn push(&mut self, row: LogRow) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[LogRow] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [LogRow] {
        &mut self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_cost(&self) -> f64 {
        self.rows.iter().map(LogRow::energy_cost).sum()
    }

    pub fn header(num_zones: usize) -> Vec<String> {
        let mut h = vec!["slot".to_string(), "price".into(), "outdoor_temp".into()];
        for prefix in ["temp", "co2", "occ", "airflow_idx"] {
            h.extend((1..=num_zones).map(|i| format!("{prefix}_{i}")));
        }
        h.extend(
            ["damper_idx", "airflow_total", "damper", "fan_cost", "coil_cost"]
                .iter()
                .map(|s| s.to_string()),
        );
        h.extend((1..=num_zones + 1).map(|i| format!("reward_{i}")));
        h.push("flag".into());
        h
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut out = Self::header(self.num_zones).join(",");
        out.push('\n');
        for r in &self.rows {
            let mut cells: Vec<String> = vec![r.slot.to_string(), r.price.to_string(), r.outdoor_temp.to_string()];
            cells.extend(r.temps.iter().map(f64::to_string));
            cells.extend(r.co2.iter().map(f64::to_string));
            cells.extend(r.occupancy.iter().map(u32::to_string));
            cells.extend(r.airflow_idx.iter().map(usize::to_string));
            cells.push(r.damper_idx.to_string());
            cells.push(r.airflow_total.to_string());
            cells.push(r.damper.to_string());
            cells.push(r.fan_cost.to_string());
            cells.push(r.coil_cost.to_string());
            cells.extend(r.rewards.iter().map(f64::to_string));
            cells.push(u8::from(r.flag).to_string());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        w.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::load(path, e.to_string()))?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::load(path, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        // 10 fixed columns plus 5 per zone
        if header.len() < 15 || (header.len() - 10) % 5 != 0 {
            return Err(Error::load(path, "not an episode log header"));
        }
        let n = (header.len() - 10) / 5;
        if header != Self::header(n) {
            return Err(Error::load(path, "episode log header does not match the documented layout"));
        }
        let mut log = EpisodeLog::new(n);
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::load(path, format!("row {}: {e}", i + 1)))?;
            let cell = |k: usize| rec.get(k).unwrap_or("");
            let num = |k: usize| -> Result<f64> {
                cell(k)
                    .parse()
                    .map_err(|_| Error::load(path, format!("row {}: `{}` is not numeric", i + 1, cell(k))))
            };
            let int = |k: usize| -> Result<usize> {
                cell(k)
                    .parse()
                    .map_err(|_| Error::load(path, format!("row {}: `{}` is not an integer", i + 1, cell(k))))
            };
            let mut c = 3;
            let take_f = |count: usize, c: &mut usize| -> Result<Vec<f64>> {
                let v = (*c..*c + count).map(num).collect::<Result<Vec<_>>>();
                *c += count;
                v
            };
            let temps = take_f(n, &mut c)?;
            let co2 = take_f(n, &mut c)?;
            let occupancy = (c..c + n).map(|k| int(k).map(|v| v as u32)).collect::<Result<Vec<_>>>()?;
            c += n;
            let airflow_idx = (c..c + n).map(int).collect::<Result<Vec<_>>>()?;
            c += n;
            let damper_idx = int(c)?;
            let airflow_total = num(c + 1)?;
            let damper = num(c + 2)?;
            let fan_cost = num(c + 3)?;
            let coil_cost = num(c + 4)?;
            c += 5;
            let rewards = (c..c + n + 1).map(num).collect::<Result<Vec<_>>>()?;
            c += n + 1;
            let flag = int(c)? != 0;
            log.push(LogRow {
                slot: int(0)?,
                price: num(1)?,
                outdoor_temp: num(2)?,
                temps,
                co2,
                occupancy,
                airflow_idx,
                damper_idx,
                airflow_total,
                damper,
                fan_cost,
                coil_cost,
                rewards,
                flag,
            });
        }
        Ok(log)
    }
}

/// Comfort and cost summary of a log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Average temperature deviation over occupied slots, °C.
    pub atd: f64,
    /// Average CO₂ excess over occupied slots, ppm.
    pub acd: f64,
    /// Total energy cost, RMB.
    pub tec: f64,
}

/// Each zone's deviation is averaged over its own occupied slots, then the
/// zone averages are averaged. A zone that is never occupied contributes 0.
pub fn metrics(log: &EpisodeLog, params: &BuildingParams) -> Result<Metrics> {
    if log.is_empty() {
        return Err(Error::Env("metrics need at least one logged slot".into()));
    }
    let n = params.num_zones();
    if log.num_zones() != n {
        return Err(Error::Env(format!(
            "log has {} zones, building has {n}",
            log.num_zones()
        )));
    }
    let mut atd = 0.0;
    let mut acd = 0.0;
    for (i, z) in params.zones.iter().enumerate() {
        let mut occupied = 0usize;
        let mut temp_sum = 0.0;
        let mut co2_sum = 0.0;
        for r in log.rows() {
            if r.occupancy[i] > 0 {
                occupied += 1;
                temp_sum += (r.temps[i] - z.t_max).max(0.0) + (z.t_min - r.temps[i]).max(0.0);
                co2_sum += (r.co2[i] - z.o_max).max(0.0);
            }
        }
        if occupied > 0 {
            atd += temp_sum / occupied as f64;
            acd += co2_sum / occupied as f64;
        }
    }
    Ok(Metrics {
        atd: atd / n as f64,
        acd: acd / n as f64,
        tec: log.total_cost(),
    })
}
