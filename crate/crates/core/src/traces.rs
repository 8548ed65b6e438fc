//! Exogenous time series that drive the building: electricity price, outdoor
//! temperature, outdoor CO₂ and per-zone occupancy.
//!
//! CSV layouts (comma separated, header row required, slot column 0-based):
//!
//! ```text
//! price.csv      slot,price_rmb_per_kwh
//! weather.csv    slot,outdoor_temp_c,outdoor_co2_ppm
//! occupancy.csv  slot,zone1,zone2,...,zoneN
//! ```

use std::fs::File;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const PRICE_HEADER: [&str; 2] = ["slot", "price_rmb_per_kwh"];
pub const WEATHER_HEADER: [&str; 3] = ["slot", "outdoor_temp_c", "outdoor_co2_ppm"];

pub const PRICE_FILE: &str = "price.csv";
pub const WEATHER_FILE: &str = "weather.csv";
pub const OCCUPANCY_FILE: &str = "occupancy.csv";

/// Aligned per-slot exogenous series.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    price: Vec<f64>,
    outdoor_temp: Vec<f64>,
    outdoor_co2: Vec<f64>,
    /// `occupancy[zone][slot]`
    occupancy: Vec<Vec<u32>>,
    slot_minutes: u32,
}

impl TraceSet {
    pub fn new(
        price: Vec<f64>,
        outdoor_temp: Vec<f64>,
        outdoor_co2: Vec<f64>,
        occupancy: Vec<Vec<u32>>,
        slot_minutes: u32,
    ) -> Result<Self> {
        let len = price.len();
        if len == 0 {
            return Err(Error::Trace("trace set must contain at least one slot".into()));
        }
        if slot_minutes == 0 || 1440 % slot_minutes != 0 {
            return Err(Error::Trace(format!(
                "slot length {slot_minutes} min does not divide a day"
            )));
        }
        if outdoor_temp.len() != len || outdoor_co2.len() != len {
            return Err(Error::Trace(format!(
                "series lengths differ: price {len}, outdoor_temp {}, outdoor_co2 {}",
                outdoor_temp.len(),
                outdoor_co2.len()
            )));
        }
        if occupancy.is_empty() {
            return Err(Error::Trace("occupancy needs at least one zone".into()));
        }
        for (z, series) in occupancy.iter().enumerate() {
            if series.len() != len {
                return Err(Error::Trace(format!(
                    "occupancy of zone {} has {} slots, expected {len}",
                    z + 1,
                    series.len()
                )));
            }
        }
        if let Some(t) = price.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Trace(format!("price at slot {t} must be positive")));
        }
        if let Some(t) = outdoor_co2.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::Trace(format!("outdoor CO2 at slot {t} must be positive")));
        }
        if let Some(t) = outdoor_temp.iter().position(|c| !c.is_finite()) {
            return Err(Error::Trace(format!("outdoor temperature at slot {t} is not finite")));
        }
        Ok(Self {
            price,
            outdoor_temp,
            outdoor_co2,
            occupancy,
            slot_minutes,
        })
    }

    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }

    pub fn num_zones(&self) -> usize {
        self.occupancy.len()
    }

    pub fn slot_minutes(&self) -> u32 {
        self.slot_minutes
    }

    pub fn slots_per_day(&self) -> usize {
        (1440 / self.slot_minutes) as usize
    }

    /// Number of complete days covered.
    pub fn num_days(&self) -> usize {
        self.len() / self.slots_per_day()
    }

    pub fn price(&self, slot: usize) -> f64 {
        self.price[slot]
    }

    pub fn outdoor_temp(&self, slot: usize) -> f64 {
        self.outdoor_temp[slot]
    }

    pub fn outdoor_co2(&self, slot: usize) -> f64 {
        self.outdoor_co2[slot]
    }

    pub fn occupancy(&self, zone: usize, slot: usize) -> u32 {
        self.occupancy[zone][slot]
    }

    pub fn price_series(&self) -> &[f64] {
        &self.price
    }

    pub fn outdoor_temp_series(&self) -> &[f64] {
        &self.outdoor_temp
    }

    pub fn outdoor_co2_series(&self) -> &[f64] {
        &self.outdoor_co2
    }

    pub fn occupancy_series(&self, zone: usize) -> &[u32] {
        &self.occupancy[zone]
    }

    /// Copy of the slots in `range`.
    pub fn slice(&self, range: Range<usize>) -> Result<TraceSet> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::Trace(format!(
                "slice {range:?} outside trace of length {}",
                self.len()
            )));
        }
        TraceSet::new(
            self.price[range.clone()].to_vec(),
            self.outdoor_temp[range.clone()].to_vec(),
            self.outdoor_co2[range.clone()].to_vec(),
            self.occupancy.iter().map(|z| z[range.clone()].to_vec()).collect(),
            self.slot_minutes,
        )
    }

    /// Prefix/suffix split on a day boundary: the first `train_days` days and
    /// the remainder.
    pub fn split(&self, train_days: usize) -> Result<(TraceSet, TraceSet)> {
        let cut = train_days * self.slots_per_day();
        if train_days == 0 || cut >= self.len() {
            return Err(Error::Trace(format!(
                "train_days={train_days} must leave a non-empty prefix and suffix of a {}-slot trace",
                self.len()
            )));
        }
        Ok((self.slice(0..cut)?, self.slice(cut..self.len())?))
    }

    /// Append `other` after `self`.
    pub fn concat(&self, other: &TraceSet) -> Result<TraceSet> {
        if self.slot_minutes != other.slot_minutes || self.num_zones() != other.num_zones() {
            return Err(Error::Trace("cannot concatenate incompatible trace sets".into()));
        }
        let join = |a: &[f64], b: &[f64]| [a, b].concat();
        TraceSet::new(
            join(&self.price, &other.price),
            join(&self.outdoor_temp, &other.outdoor_temp),
            join(&self.outdoor_co2, &other.outdoor_co2),
            self.occupancy
                .iter()
                .zip(&other.occupancy)
                .map(|(a, b)| [a.as_slice(), b.as_slice()].concat())
                .collect(),
            self.slot_minutes,
        )
    }

    /// One day of slots, used as a training episode.
    pub fn episode(&self, day_index: usize) -> Result<EpisodeWindow<'_>> {
        let per_day = self.slots_per_day();
        if day_index >= self.num_days() {
            return Err(Error::Trace(format!(
                "day {day_index} out of range: trace holds {} complete days",
                self.num_days()
            )));
        }
        Ok(EpisodeWindow {
            traces: self,
            start: day_index * per_day,
            len: per_day,
        })
    }

    /// Write the three CSV files into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<TracePaths> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = TracePaths::in_dir(dir);

        let mut out = String::from("slot,price_rmb_per_kwh\n");
        for (t, p) in self.price.iter().enumerate() {
            out.push_str(&format!("{t},{p}\n"));
        }
        write_file(&paths.price, &out)?;

        let mut out = String::from("slot,outdoor_temp_c,outdoor_co2_ppm\n");
        for t in 0..self.len() {
            out.push_str(&format!("{t},{},{}\n", self.outdoor_temp[t], self.outdoor_co2[t]));
        }
        write_file(&paths.weather, &out)?;

        let mut out = String::from("slot");
        for z in 0..self.num_zones() {
            out.push_str(&format!(",zone{}", z + 1));
        }
        out.push('\n');
        for t in 0..self.len() {
            out.push_str(&t.to_string());
            for z in &self.occupancy {
                out.push_str(&format!(",{}", z[t]));
            }
            out.push('\n');
        }
        write_file(&paths.occupancy, &out)?;
        Ok(paths)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

/// A view of `len` consecutive slots starting at `start`.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeWindow<'a> {
    traces: &'a TraceSet,
    start: usize,
    len: usize,
}

impl<'a> EpisodeWindow<'a> {
    pub fn traces(&self) -> &'a TraceSet {
        self.traces
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn slots(&self) -> Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TracePaths {
    pub price: PathBuf,
    pub weather: PathBuf,
    pub occupancy: PathBuf,
}

impl TracePaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            price: dir.join(PRICE_FILE),
            weather: dir.join(WEATHER_FILE),
            occupancy: dir.join(OCCUPANCY_FILE),
        }
    }
}

/// Resolution of each input file and the target slot length. Coarser inputs
/// are step-held: each row is repeated `source / slot` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadConfig {
    pub num_zones: usize,
    pub slot_minutes: u32,
    pub price_minutes: u32,
    pub weather_minutes: u32,
    pub occupancy_minutes: u32,
}

impl LoadConfig {
    /// All files already at slot resolution.
    pub fn native(num_zones: usize, slot_minutes: u32) -> Self {
        Self {
            num_zones,
            slot_minutes,
            price_minutes: slot_minutes,
            weather_minutes: slot_minutes,
            occupancy_minutes: slot_minutes,
        }
    }

    /// All files hourly.
    pub fn hourly(num_zones: usize, slot_minutes: u32) -> Self {
        Self {
            num_zones,
            slot_minutes,
            price_minutes: 60,
            weather_minutes: 60,
            occupancy_minutes: 60,
        }
    }
}

fn repeat_factor(path: &Path, source: u32, slot: u32) -> Result<usize> {
    if slot == 0 || source < slot || source % slot != 0 {
        return Err(Error::load(
            path,
            format!("{source}-minute rows cannot be resampled to {slot}-minute slots"),
        ));
    }
    Ok((source / slot) as usize)
}

/// Reads a CSV with an exact header. Returns the non-slot columns as rows of f64.
fn read_table(path: &Path, expected_header: &[String]) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| Error::load(path, e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::load(path, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.len() != expected_header.len() {
        return Err(Error::load(
            path,
            format!(
                "expected {} columns ({}), found {}",
                expected_header.len(),
                expected_header.join(","),
                header.len()
            ),
        ));
    }
    if header != expected_header {
        return Err(Error::load(
            path,
            format!("header `{}` != `{}`", header.join(","), expected_header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::load(path, format!("row {}: {e}", i + 1)))?;
        if record.len() != expected_header.len() {
            return Err(Error::load(path, format!("row {} is ragged", i + 1)));
        }
        let slot: usize = record[0].trim().parse().map_err(|_| {
            Error::load(path, format!("row {}: slot `{}` is not an index", i + 1, &record[0]))
        })?;
        if slot != i {
            return Err(Error::load(path, format!("row {}: slot {slot}, expected {i}", i + 1)));
        }
        let mut values = Vec::with_capacity(record.len() - 1);
        for (c, cell) in record.iter().enumerate().skip(1) {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::load(
                    path,
                    format!("row {}, column {}: `{cell}` is not numeric", i + 1, expected_header[c]),
                )
            })?;
            values.push(v);
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::load(path, "no data rows"));
    }
    Ok(rows)
}

fn hold<T: Copy>(values: impl Iterator<Item = T>, factor: usize) -> Vec<T> {
    values.flat_map(|v| std::iter::repeat(v).take(factor)).collect()
}

fn header_of(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub fn occupancy_header(num_zones: usize) -> Vec<String> {
    std::iter::once("slot".to_string())
        .chain((1..=num_zones).map(|z| format!("zone{z}")))
        .collect()
}

/// Load and validate the three trace files.
pub fn load_traces(
    price_path: &Path,
    weather_path: &Path,
    occupancy_path: &Path,
    config: &LoadConfig,
) -> Result<TraceSet> {
    let price_rows = read_table(price_path, &header_of(&PRICE_HEADER))?;
    let weather_rows = read_table(weather_path, &header_of(&WEATHER_HEADER))?;

    // The zone count is checked before the header contents so a short file
    // reports the mismatch rather than a header diff.
    {
        let file = File::open(occupancy_path).map_err(|e| Error::load(occupancy_path, e.to_string()))?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let cols = reader
            .headers()
            .map_err(|e| Error::load(occupancy_path, e.to_string()))?
            .len();
        if cols.saturating_sub(1) != config.num_zones {
            return Err(Error::load(
                occupancy_path,
                format!(
                    "zone-count mismatch: file has {} zone columns, config expects {}",
                    cols.saturating_sub(1),
                    config.num_zones
                ),
            ));
        }
    }
    let occ_rows = read_table(occupancy_path, &occupancy_header(config.num_zones))?;

    let pf = repeat_factor(price_path, config.price_minutes, config.slot_minutes)?;
    let wf = repeat_factor(weather_path, config.weather_minutes, config.slot_minutes)?;
    let of = repeat_factor(occupancy_path, config.occupancy_minutes, config.slot_minutes)?;

    let price = hold(price_rows.iter().map(|r| r[0]), pf);
    let outdoor_temp = hold(weather_rows.iter().map(|r| r[0]), wf);
    let outdoor_co2 = hold(weather_rows.iter().map(|r| r[1]), wf);

    let mut occupancy = Vec::with_capacity(config.num_zones);
    for z in 0..config.num_zones {
        let mut series = Vec::with_capacity(occ_rows.len());
        for (i, row) in occ_rows.iter().enumerate() {
            let v = row[z];
            if !(v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64) {
                return Err(Error::load(
                    occupancy_path,
                    format!("row {}, zone{}: occupancy `{v}` is not a non-negative integer", i + 1, z + 1),
                ));
            }
            series.push(v as u32);
        }
        occupancy.push(hold(series.into_iter(), of));
    }

    if price.len() != outdoor_temp.len() || price.len() != occupancy[0].len() {
        return Err(Error::Trace(format!(
            "row counts differ after resampling: price {}, weather {}, occupancy {}",
            price.len(),
            outdoor_temp.len(),
            occupancy[0].len()
        )));
    }
    TraceSet::new(price, outdoor_temp, outdoor_co2, occupancy, config.slot_minutes)
}

/// Parameters of the synthetic trace generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub days: usize,
    pub num_zones: usize,
    pub slot_minutes: u32,
    /// Off-peak, shoulder and peak price (RMB/kWh).
    pub price_tiers: [f64; 3],
    /// Half-open `[from, to)` hour ranges billed at the off-peak tier.
    pub valley_hours: Vec<(u32, u32)>,
    /// Half-open `[from, to)` hour ranges billed at the peak tier.
    pub peak_hours: Vec<(u32, u32)>,
    pub temp_mean: f64,
    pub temp_amplitude: f64,
    /// Hour of the daily temperature maximum.
    pub temp_peak_hour: f64,
    /// Per-slot noise is uniform in ±temp_noise.
    pub temp_noise: f64,
    /// Per-day offset is uniform in ±temp_day_jitter.
    pub temp_day_jitter: f64,
    pub business_open_hour: u32,
    pub business_close_hour: u32,
    /// Head-count cap per zone, cycled when shorter than `num_zones`.
    pub max_occupancy: Vec<u32>,
    /// Largest head-count change between consecutive slots.
    pub occupancy_step: u32,
    pub outdoor_co2: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            days: 61,
            num_zones: 4,
            slot_minutes: 15,
            price_tiers: [0.3, 0.7, 1.2],
            valley_hours: vec![(0, 7), (23, 24)],
            peak_hours: vec![(10, 15), (18, 21)],
            temp_mean: 28.0,
            temp_amplitude: 5.0,
            temp_peak_hour: 15.0,
            temp_noise: 0.5,
            temp_day_jitter: 1.5,
            business_open_hour: 8,
            business_close_hour: 18,
            max_occupancy: vec![12, 5, 10, 8],
            occupancy_step: 2,
            outdoor_co2: 400.0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::Config("synthetic trace needs at least one day".into()));
        }
        if self.num_zones == 0 {
            return Err(Error::Config("synthetic trace needs at least one zone".into()));
        }
        if self.slot_minutes == 0 || 1440 % self.slot_minutes != 0 {
            return Err(Error::Config(format!(
                "slot length {} min does not divide a day",
                self.slot_minutes
            )));
        }
        if self.price_tiers.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Config("price tiers must be positive".into()));
        }
        if self.max_occupancy.is_empty() {
            return Err(Error::Config("max_occupancy must list at least one value".into()));
        }
        if self.business_open_hour >= self.business_close_hour || self.business_close_hour > 24 {
            return Err(Error::Config("business hours must satisfy open < close <= 24".into()));
        }
        if !(self.outdoor_co2 > 0.0) {
            return Err(Error::Config("outdoor CO2 must be positive".into()));
        }
        if self.temp_noise < 0.0 || self.temp_day_jitter < 0.0 {
            return Err(Error::Config("noise widths must be non-negative".into()));
        }
        Ok(())
    }

    fn tier_price(&self, hour: u32) -> f64 {
        let within = |ranges: &[(u32, u32)]| ranges.iter().any(|&(a, b)| hour >= a && hour < b);
        if within(&self.peak_hours) {
            self.price_tiers[2]
        } else if within(&self.valley_hours) {
            self.price_tiers[0]
        } else {
            self.price_tiers[1]
        }
    }
}

/// Deterministic synthetic traces with the shape of a summer retail building:
/// tiered time-of-use price, a diurnal outdoor temperature with bounded noise,
/// and occupancy that is zero outside business hours and a bounded random walk
/// inside them.
pub fn synthesize_traces(config: &SynthConfig, seed: u64) -> Result<TraceSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_day = (1440 / config.slot_minutes) as usize;
    let len = config.days * per_day;

    let mut price = Vec::with_capacity(len);
    let mut outdoor_temp = Vec::with_capacity(len);
    let mut occupancy = vec![Vec::with_capacity(len); config.num_zones];
    let caps: Vec<u32> = (0..config.num_zones)
        .map(|z| config.max_occupancy[z % config.max_occupancy.len()])
        .collect();

    for _day in 0..config.days {
        let day_offset = if config.temp_day_jitter > 0.0 {
            rng.gen_range(-config.temp_day_jitter..=config.temp_day_jitter)
        } else {
            0.0
        };
        let mut heads: Vec<u32> = vec![0; config.num_zones];
        for k in 0..per_day {
            let minute = k as u32 * config.slot_minutes;
            let hour = minute / 60;
            let hour_f = minute as f64 / 60.0;
            price.push(config.tier_price(hour));

            let phase = 2.0 * std::f64::consts::PI * (hour_f - config.temp_peak_hour) / 24.0;
            let noise = if config.temp_noise > 0.0 {
                rng.gen_range(-config.temp_noise..=config.temp_noise)
            } else {
                0.0
            };
            outdoor_temp.push(config.temp_mean + day_offset + config.temp_amplitude * phase.cos() + noise);

            let open = hour >= config.business_open_hour && hour < config.business_close_hour;
            let opening = open && minute == config.business_open_hour * 60;
            for z in 0..config.num_zones {
                heads[z] = if !open {
                    0
                } else if opening {
                    rng.gen_range(0..=caps[z] / 2)
                } else {
                    let step = config.occupancy_step as i64;
                    let delta = rng.gen_range(-step..=step);
                    (heads[z] as i64 + delta).clamp(0, caps[z] as i64) as u32
                };
                occupancy[z].push(heads[z]);
            }
        }
    }
    let outdoor_co2 = vec![config.outdoor_co2; len];
    TraceSet::new(price, outdoor_temp, outdoor_co2, occupancy, config.slot_minutes)
}
