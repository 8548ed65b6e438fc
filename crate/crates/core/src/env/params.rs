//! Building and zone parameters.
//!
//! Parameter files use the flat key/value format of [`crate::kv`]. Keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `n_zones` | number of zones N | 4 |
//! | `layout` | `line` or `ring` adjacency | `line` |
//! | `tau_minutes` | slot length | 15 |
//! | `mu` | fan coefficient, W/(g/s)³ | 2e-6 |
//! | `c_a` | specific heat of air, J/g/°C | 1.005 |
//! | `eta` | coil efficiency | 0.8879 |
//! | `cop` | chiller COP | 5.9153 |
//! | `t_supply` | supply air temperature, °C | 15 |
//! | `kappa` | air density, g/m³ | 1200 |
//! | `chi` | CO₂ generation per person, L/s | 0.005 |
//! | `alpha`, `beta` | reward weights | 24, 0.02 |
//! | `airflow_levels` | comma list, g/s | 0,45,…,450 |
//! | `damper_levels` | comma list in [0,1] | 0,0.1,…,1 |
//! | `zone.<field>` | applied to every zone | see [`ZoneParams::default_for`] |
//! | `zone<i>.<field>` | override for zone i (1-based) | |
//!
//! Zone fields: `ell`, `hbar` (per neighbor), `varpi`, `varrho`, `upsilon`,
//! `volume`, `t_min`, `t_max`, `o_max`, `neighbors` (1-based comma list).
//! When `varrho` is absent it is set to `1 - ell - Σ hbar`.

use crate::error::{Error, Result};
use crate::kv::KvConfig;

/// Thermal, comfort and actuator parameters of one zone.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneParams {
    /// Self-retention coefficient.
    pub ell: f64,
    /// `(neighbor zone index, coupling coefficient)`, ascending by index.
    pub hbar: Vec<(usize, f64)>,
    /// Airflow gain, 1/(g/s).
    pub varpi: f64,
    /// Outdoor gain.
    pub varrho: f64,
    /// Half-width of the uniform thermal disturbance, °C.
    pub upsilon: f64,
    /// m³
    pub volume: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// ppm
    pub o_max: f64,
    /// Strictly increasing, first element 0, g/s.
    pub airflow_levels: Vec<f64>,
}

pub const DEFAULT_ELL: f64 = 0.90;
pub const DEFAULT_HBAR: f64 = 0.02;
pub const DEFAULT_VARPI: f64 = 2e-4;
pub const DEFAULT_VOLUME: f64 = 500.0;

pub fn default_airflow_levels() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0 * 450.0).collect()
}

pub fn default_damper_levels() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

impl ZoneParams {
    /// Default zone with the given neighbors, outdoor gain closing the
    /// retention budget to 1.
    pub fn default_for(neighbors: &[usize]) -> Self {
        let hbar: Vec<(usize, f64)> = neighbors.iter().map(|&z| (z, DEFAULT_HBAR)).collect();
        let coupling: f64 = hbar.iter().map(|(_, h)| h).sum();
        Self {
            ell: DEFAULT_ELL,
            varrho: 1.0 - DEFAULT_ELL - coupling,
            hbar,
            varpi: DEFAULT_VARPI,
            upsilon: 0.0,
            volume: DEFAULT_VOLUME,
            t_min: 19.0,
            t_max: 24.0,
            o_max: 1300.0,
            airflow_levels: default_airflow_levels(),
        }
    }

    pub fn neighbors(&self) -> impl Iterator<Item = usize> + '_ {
        self.hbar.iter().map(|(z, _)| *z)
    }

    pub fn num_levels(&self) -> usize {
        self.airflow_levels.len()
    }

    pub fn max_airflow(&self) -> f64 {
        *self.airflow_levels.last().unwrap_or(&0.0)
    }
}

/// Zone adjacency used by the default constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Zone i touches i-1 and i+1.
    Line,
    /// Line plus a link between the first and last zone.
    Ring,
}

impl Layout {
    pub fn neighbors(self, n: usize, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        if i > 0 {
            out.push(i - 1);
        }
        if i + 1 < n {
            out.push(i + 1);
        }
        if self == Layout::Ring && n > 2 {
            if i == 0 {
                out.push(n - 1);
            } else if i == n - 1 {
                out.push(0);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Whole-building parameters shared by every zone.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingParams {
    pub zones: Vec<ZoneParams>,
    /// Fan coefficient, W/(g/s)³.
    pub mu: f64,
    /// J/g/°C
    pub c_a: f64,
    pub eta: f64,
    pub cop: f64,
    /// °C
    pub t_supply: f64,
    /// g/m³
    pub kappa: f64,
    /// L/s per person
    pub chi: f64,
    /// Recirculated fraction choices, strictly increasing in [0, 1].
    pub damper_levels: Vec<f64>,
    /// Weight of energy cost in rewards, °C/RMB.
    pub alpha: f64,
    /// Weight of CO₂ violation in rewards, °C/ppm.
    pub beta: f64,
    pub tau_seconds: f64,
    pub tau_hours: f64,
}

impl BuildingParams {
    pub fn with_layout(n: usize, layout: Layout) -> Self {
        Self {
            zones: (0..n)
                .map(|i| ZoneParams::default_for(&layout.neighbors(n, i)))
                .collect(),
            mu: 2e-6,
            c_a: 1.005,
            eta: 0.8879,
            cop: 5.9153,
            t_supply: 15.0,
            kappa: 1200.0,
            chi: 0.005,
            damper_levels: default_damper_levels(),
            alpha: 24.0,
            beta: 0.02,
            tau_seconds: 900.0,
            tau_hours: 0.25,
        }
    }

    /// `n` zones in a row with default parameters.
    pub fn default_line(n: usize) -> Self {
        Self::with_layout(n, Layout::Line)
    }

    pub fn num_zones(&self) -> usize {
        self.zones.len()
    }

    /// Zone agents plus the AHU agent.
    pub fn num_agents(&self) -> usize {
        self.zones.len() + 1
    }

    pub fn set_tau_minutes(&mut self, minutes: f64) {
        self.tau_seconds = minutes * 60.0;
        self.tau_hours = minutes / 60.0;
    }

    /// Sets the disturbance half-width of every zone.
    pub fn set_upsilon(&mut self, upsilon: f64) {
        for z in &mut self.zones {
            z.upsilon = upsilon;
        }
    }

    pub fn coil_factor(&self) -> f64 {
        self.c_a / (self.eta * self.cop)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.zones.len();
        let bad = |msg: String| Err(Error::Config(msg));
        if n == 0 {
            return bad("building needs at least one zone".into());
        }
        for (name, v) in [
            ("mu", self.mu),
            ("c_a", self.c_a),
            ("eta", self.eta),
            ("cop", self.cop),
            ("kappa", self.kappa),
            ("chi", self.chi),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("tau_seconds", self.tau_seconds),
            ("tau_hours", self.tau_hours),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if (self.tau_seconds - 3600.0 * self.tau_hours).abs() > 1e-9 * self.tau_seconds {
            return bad("tau_seconds must equal 3600 * tau_hours".into());
        }
        check_levels("damper_levels", &self.damper_levels, false)?;
        if self.damper_levels.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return bad("damper levels must lie in [0, 1]".into());
        }
        for (i, z) in self.zones.iter().enumerate() {
            let zone = i + 1;
            for (name, v) in [
                ("ell", z.ell),
                ("varpi", z.varpi),
                ("varrho", z.varrho),
                ("upsilon", z.upsilon),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return bad(format!("zone{zone}.{name} must be non-negative, got {v}"));
                }
            }
            let mut prev: Option<usize> = None;
            for &(nb, h) in &z.hbar {
                if nb >= n || nb == i {
                    return bad(format!("zone{zone} has invalid neighbor {}", nb + 1));
                }
                if prev.is_some_and(|p| p >= nb) {
                    return bad(format!("zone{zone} neighbors must be strictly ascending"));
                }
                prev = Some(nb);
                if !(h.is_finite() && h >= 0.0) {
                    return bad(format!("zone{zone}.hbar must be non-negative"));
                }
            }
            let budget = z.ell + z.hbar.iter().map(|(_, h)| h).sum::<f64>() + z.varrho;
            if budget > 1.0 + 1e-12 {
                return bad(format!(
                    "zone{zone}: ell + sum(hbar) + varrho = {budget} exceeds 1"
                ));
            }
            if !(z.t_min < z.t_max) {
                return bad(format!("zone{zone}: t_min must be below t_max"));
            }
            if !(z.o_max > 0.0) || !(z.volume > 0.0) {
                return bad(format!("zone{zone}: o_max and volume must be positive"));
            }
            check_levels(&format!("zone{zone}.airflow_levels"), &z.airflow_levels, true)?;
            let frac = z.max_airflow() * self.tau_seconds / (self.kappa * z.volume);
            if frac > 1.0 {
                return bad(format!(
                    "zone{zone}: max airflow replaces {frac:.3} of the zone air per slot (must be <= 1)"
                ));
            }
        }
        Ok(())
    }

    /// Reads parameters from a key/value config, starting from defaults.
    pub fn from_kv(cfg: &KvConfig) -> Result<Self> {
        let n: usize = cfg.get_or("n_zones", 4)?;
        let layout = match cfg.raw("layout").unwrap_or("line") {
            "line" => Layout::Line,
            "ring" => Layout::Ring,
            other => return Err(Error::Config(format!("unknown layout `{other}`"))),
        };
        let mut p = BuildingParams::with_layout(n, layout);
        if let Some(m) = cfg.get::<f64>("tau_minutes")? {
            p.set_tau_minutes(m);
        }
        p.mu = cfg.get_or("mu", p.mu)?;
        p.c_a = cfg.get_or("c_a", p.c_a)?;
        p.eta = cfg.get_or("eta", p.eta)?;
        p.cop = cfg.get_or("cop", p.cop)?;
        p.t_supply = cfg.get_or("t_supply", p.t_supply)?;
        p.kappa = cfg.get_or("kappa", p.kappa)?;
        p.chi = cfg.get_or("chi", p.chi)?;
        p.alpha = cfg.get_or("alpha", p.alpha)?;
        p.beta = cfg.get_or("beta", p.beta)?;
        if let Some(levels) = cfg.get_list::<f64>("damper_levels")? {
            p.damper_levels = levels;
        }
        let shared_levels = cfg.get_list::<f64>("airflow_levels")?;

        for i in 0..n {
            let zone = &mut p.zones[i];
            if let Some(levels) = &shared_levels {
                zone.airflow_levels = levels.clone();
            }
            let key = |field: &str| -> Vec<String> {
                vec![format!("zone.{field}"), format!("zone{}.{field}", i + 1)]
            };
            // zone-specific keys are read last so they win
            let mut hbar_value = DEFAULT_HBAR;
            let mut varrho: Option<f64> = None;
            let mut neighbors: Vec<usize> = zone.neighbors().collect();
            for k in key("ell") {
                zone.ell = cfg.get_or(&k, zone.ell)?;
            }
            for k in key("hbar") {
                hbar_value = cfg.get_or(&k, hbar_value)?;
            }
            for k in key("varpi") {
                zone.varpi = cfg.get_or(&k, zone.varpi)?;
            }
            for k in key("varrho") {
                if let Some(v) = cfg.get::<f64>(&k)? {
                    varrho = Some(v);
                }
            }
            for k in key("upsilon") {
                zone.upsilon = cfg.get_or(&k, zone.upsilon)?;
            }
            for k in key("volume") {
                zone.volume = cfg.get_or(&k, zone.volume)?;
            }
            for k in key("t_min") {
                zone.t_min = cfg.get_or(&k, zone.t_min)?;
            }
            for k in key("t_max") {
                zone.t_max = cfg.get_or(&k, zone.t_max)?;
            }
            for k in key("o_max") {
                zone.o_max = cfg.get_or(&k, zone.o_max)?;
            }
            if let Some(levels) = cfg.get_list::<f64>(&format!("zone{}.airflow_levels", i + 1))? {
                zone.airflow_levels = levels;
            }
            if let Some(list) = cfg.get_list::<usize>(&format!("zone{}.neighbors", i + 1))? {
                if list.iter().any(|&z| z == 0) {
                    return Err(Error::Config(format!("zone{}.neighbors are 1-based", i + 1)));
                }
                neighbors = list.into_iter().map(|z| z - 1).collect();
                neighbors.sort_unstable();
            }
            zone.hbar = neighbors.iter().map(|&z| (z, hbar_value)).collect();
            let coupling: f64 = zone.hbar.iter().map(|(_, h)| h).sum();
            zone.varrho = varrho.unwrap_or(1.0 - zone.ell - coupling);
        }
        p.validate()?;
        Ok(p)
    }
}

fn check_levels(name: &str, levels: &[f64], zero_first: bool) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    if levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config(format!("{name} must be strictly increasing")));
    }
    if zero_first && levels[0] != 0.0 {
        return Err(Error::Config(format!("{name} must start at 0")));
    }
    Ok(())
}
