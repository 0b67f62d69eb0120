//! Scenario description and its text format.
//!
//! The format is one `key = value` per line with dotted section prefixes.
//! `#` starts a comment. Keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `tech` | `cv2x`, `dot11p` or `both` | `both` |
//! | `n` | number of vehicles `N` | 100 |
//! | `adaptive_cam` | adapt `T_C` to the channel busy ratio (802.11p) | `false` |
//! | `traffic.t_c` | CAM interval `T_C`, ms | 100 |
//! | `traffic.t_d` | DENM repetition interval `T_D`, ms | 100 |
//! | `traffic.k` | transmissions per DENM event `K` | 5 |
//! | `traffic.lambda` | DENM events per second `λ` | 1 |
//! | `traffic.t_tilde` | DENM trigger window `T̃`, s | 0.001 |
//! | `traffic.m` | queue capacity `M` | 10 |
//! | `cv2x.gamma` | selection window `Γ`, subframes | 100 |
//! | `cv2x.r_l`, `cv2x.r_h` | resource counter bounds | standard for `Γ` |
//! | `cv2x.p_rk` | resource keep probability | 0.4 |
//! | `cv2x.p_sch` | scheduling success probability | 1 |
//! | `cv2x.csrs_per_subframe` | resources per subframe | 25 |
//! | `dot11p.cw_min` | minimum contention window `Č` | 15 |
//! | `dot11p.aifsn` | AIFS number | 6 |
//! | `dot11p.slot_us` | slot time, µs | 13 |
//! | `dot11p.sifs_us` | SIFS, µs | 32 |
//! | `dot11p.tx_slots` | packet duration `ϑ`, slots | 14 |
//! | `sweep.<key>` | `from:to:step` or `v1,v2,…` over a numeric key | |
//!
//! Sweeps expand to the cartesian product in file order, the first sweep
//! varying slowest. Sweeping `cv2x.gamma` over a standard window also sets
//! that window's counter bounds.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::coupling::Technology;
use crate::cv2x::Cv2xParams;
use crate::dot11p::Dot11pParams;
use crate::error::ModelError;
use crate::traffic::TrafficParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TechSelection {
    Cv2x,
    Dot11p,
    Both,
}

impl TechSelection {
    pub fn technologies(self) -> Vec<Technology> {
        match self {
            TechSelection::Cv2x => vec![Technology::Cv2x],
            TechSelection::Dot11p => vec![Technology::Dot11p],
            TechSelection::Both => Technology::ALL.to_vec(),
        }
    }
}

impl fmt::Display for TechSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TechSelection::Cv2x => "cv2x",
            TechSelection::Dot11p => "dot11p",
            TechSelection::Both => "both",
        })
    }
}

impl FromStr for TechSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cv2x" => Ok(TechSelection::Cv2x),
            "dot11p" => Ok(TechSelection::Dot11p),
            "both" => Ok(TechSelection::Both),
            _ => Err("expected cv2x, dot11p or both".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepValues {
    Range { from: f64, to: f64, step: f64 },
    List(Vec<f64>),
}

impl SweepValues {
    pub fn values(&self) -> Vec<f64> {
        match self {
            SweepValues::List(v) => v.clone(),
            SweepValues::Range { from, to, step } => {
                let count = ((to - from) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|k| from + k as f64 * step).collect()
            }
        }
    }
}

impl fmt::Display for SweepValues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValues::Range { from, to, step } => write!(f, "{from}:{to}:{step}"),
            SweepValues::List(v) => {
                let parts: Vec<String> = v.iter().map(f64::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for SweepValues {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", t.trim()));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [from, to, step] = parts[..] else {
                return Err("a range is written from:to:step".into());
            };
            let (from, to, step) = (num(from)?, num(to)?, num(step)?);
            if !(step > 0.0) || to < from {
                return Err("a range needs step > 0 and to >= from".into());
            }
            Ok(SweepValues::Range { from, to, step })
        } else {
            let v = s.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            Ok(SweepValues::List(v))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: SweepValues,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub tech: TechSelection,
    /// Number of vehicles `N` in the collision domain.
    pub vehicles: u32,
    pub traffic: TrafficParams,
    pub cv2x: Cv2xParams,
    pub dot11p: Dot11pParams,
    pub adaptive_cam: bool,
    pub sweeps: Vec<Sweep>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            tech: TechSelection::Both,
            vehicles: 100,
            traffic: TrafficParams::default(),
            cv2x: Cv2xParams::default(),
            dot11p: Dot11pParams::default(),
            adaptive_cam: false,
            sweeps: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}field `{field}`: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: Option<usize>, field: &str, message: impl Into<String>) -> Self {
        Self { line, field: field.to_owned(), message: message.into() }
    }
}

/// Keys in serialisation order.
pub const KEYS: [&str; 20] = [
    "tech",
    "n",
    "adaptive_cam",
    "traffic.t_c",
    "traffic.t_d",
    "traffic.k",
    "traffic.lambda",
    "traffic.t_tilde",
    "traffic.m",
    "cv2x.gamma",
    "cv2x.r_l",
    "cv2x.r_h",
    "cv2x.p_rk",
    "cv2x.p_sch",
    "cv2x.csrs_per_subframe",
    "dot11p.cw_min",
    "dot11p.aifsn",
    "dot11p.slot_us",
    "dot11p.sifs_us",
    "dot11p.tx_slots",
];

const NON_NUMERIC: [&str; 2] = ["tech", "adaptive_cam"];

fn parse_u32(raw: &str) -> Result<u32, String> {
    if let Ok(v) = raw.parse::<u32>() {
        return Ok(v);
    }
    // Sweeps produce floats; accept them when integral.
    match raw.parse::<f64>() {
        Ok(v) if v >= 0.0 && v <= f64::from(u32::MAX) && v.fract() == 0.0 => Ok(v as u32),
        _ => Err(format!("`{raw}` is not a non-negative integer")),
    }
}

fn parse_f64(raw: &str) -> Result<f64, String> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{raw}` is not a finite number")),
    }
}

impl ScenarioConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), String> {
        let raw = raw.trim();
        match key {
            "tech" => self.tech = raw.parse()?,
            "n" => self.vehicles = parse_u32(raw)?,
            "adaptive_cam" => {
                self.adaptive_cam = raw.parse().map_err(|_| format!("`{raw}` is not true or false"))?
            }
            "traffic.t_c" => self.traffic.cam_interval = parse_u32(raw)?,
            "traffic.t_d" => self.traffic.denm_interval = parse_u32(raw)?,
            "traffic.k" => self.traffic.denm_repeats = parse_u32(raw)?,
            "traffic.lambda" => self.traffic.denm_rate = parse_f64(raw)?,
            "traffic.t_tilde" => self.traffic.trigger_window_s = parse_f64(raw)?,
            "traffic.m" => self.traffic.queue_capacity = parse_u32(raw)?,
            "cv2x.gamma" => self.cv2x.gamma = parse_u32(raw)?,
            "cv2x.r_l" => self.cv2x.rc_low = parse_u32(raw)?,
            "cv2x.r_h" => self.cv2x.rc_high = parse_u32(raw)?,
            "cv2x.p_rk" => self.cv2x.p_keep = parse_f64(raw)?,
            "cv2x.p_sch" => self.cv2x.p_sched = parse_f64(raw)?,
            "cv2x.csrs_per_subframe" => self.cv2x.csrs_per_subframe = parse_u32(raw)?,
            "dot11p.cw_min" => self.dot11p.cw_min = parse_u32(raw)?,
            "dot11p.aifsn" => self.dot11p.aifsn = parse_u32(raw)?,
            "dot11p.slot_us" => self.dot11p.slot_us = parse_f64(raw)?,
            "dot11p.sifs_us" => self.dot11p.sifs_us = parse_f64(raw)?,
            "dot11p.tx_slots" => self.dot11p.tx_slots = parse_u32(raw)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Textual value of one key.
    pub fn get(&self, key: &str) -> Option<String> {
        let v = match key {
            "tech" => self.tech.to_string(),
            "n" => self.vehicles.to_string(),
            "adaptive_cam" => self.adaptive_cam.to_string(),
            "traffic.t_c" => self.traffic.cam_interval.to_string(),
            "traffic.t_d" => self.traffic.denm_interval.to_string(),
            "traffic.k" => self.traffic.denm_repeats.to_string(),
            "traffic.lambda" => self.traffic.denm_rate.to_string(),
            "traffic.t_tilde" => self.traffic.trigger_window_s.to_string(),
            "traffic.m" => self.traffic.queue_capacity.to_string(),
            "cv2x.gamma" => self.cv2x.gamma.to_string(),
            "cv2x.r_l" => self.cv2x.rc_low.to_string(),
            "cv2x.r_h" => self.cv2x.rc_high.to_string(),
            "cv2x.p_rk" => self.cv2x.p_keep.to_string(),
            "cv2x.p_sch" => self.cv2x.p_sched.to_string(),
            "cv2x.csrs_per_subframe" => self.cv2x.csrs_per_subframe.to_string(),
            "dot11p.cw_min" => self.dot11p.cw_min.to_string(),
            "dot11p.aifsn" => self.dot11p.aifsn.to_string(),
            "dot11p.slot_us" => self.dot11p.slot_us.to_string(),
            "dot11p.sifs_us" => self.dot11p.sifs_us.to_string(),
            "dot11p.tx_slots" => self.dot11p.tx_slots.to_string(),
            _ => return None,
        };
        Some(v)
    }

    /// Applies one sweep coordinate.
    pub fn set_sweep_value(&mut self, key: &str, value: f64) -> Result<(), String> {
        self.set(key, &value.to_string())?;
        if key == "cv2x.gamma" {
            if let Some((lo, hi)) = Cv2xParams::standard_counter_bounds(self.cv2x.gamma) {
                self.cv2x.rc_low = lo;
                self.cv2x.rc_high = hi;
            }
        }
        Ok(())
    }

    /// Checks every parameter range, naming the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let wrap = |e: ModelError| match e {
            ModelError::InvalidParameter { name, value, reason } => {
                ConfigError::new(None, name, format!("value {value}: {reason}"))
            }
            other => ConfigError::new(None, "?", other.to_string()),
        };
        if self.vehicles < 1 {
            return Err(ConfigError::new(None, "n", "at least one vehicle is required"));
        }
        self.traffic.validate().map_err(wrap)?;
        self.cv2x.validate().map_err(wrap)?;
        self.dot11p.validate().map_err(wrap)?;
        if self.tech != TechSelection::Dot11p && self.vehicles > self.cv2x.csr_total() {
            return Err(ConfigError::new(
                None,
                "n",
                format!("{} vehicles exceed the {} resources of the selection window", self.vehicles, self.cv2x.csr_total()),
            ));
        }
        Ok(())
    }

    /// Parses and validates a configuration, including every sweep point.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        let mut bounds_given = false;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = Some(idx + 1);
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::new(line_no, line, "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            if let Some(target) = key.strip_prefix("sweep.") {
                if !KEYS.contains(&target) || NON_NUMERIC.contains(&target) {
                    return Err(ConfigError::new(line_no, key, "sweeps need a numeric key"));
                }
                if cfg.sweeps.iter().any(|s| s.key == target) {
                    return Err(ConfigError::new(line_no, key, "swept twice"));
                }
                let values = value.parse().map_err(|m| ConfigError::new(line_no, key, m))?;
                cfg.sweeps.push(Sweep { key: target.to_owned(), values });
                continue;
            }
            cfg.set(key, value).map_err(|m| ConfigError::new(line_no, key, m))?;
            bounds_given |= key == "cv2x.r_l" || key == "cv2x.r_h";
        }
        if !bounds_given {
            if let Some((lo, hi)) = Cv2xParams::standard_counter_bounds(cfg.cv2x.gamma) {
                cfg.cv2x.rc_low = lo;
                cfg.cv2x.rc_high = hi;
            }
        }
        for point in cfg.points()? {
            point.validate()?;
        }
        Ok(cfg)
    }

    /// Serialises every key and sweep; [`parse`](Self::parse) inverts it.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            out.push_str(&format!("{key} = {}\n", self.get(key).expect("known key")));
        }
        for s in &self.sweeps {
            out.push_str(&format!("sweep.{} = {}\n", s.key, s.values));
        }
        out
    }

    /// Expands the sweeps into concrete scenario points, in deterministic order.
    pub fn points(&self) -> Result<Vec<ScenarioConfig>, ConfigError> {
        let mut base = self.clone();
        base.sweeps.clear();
        let mut points = vec![base];
        for sweep in &self.sweeps {
            let values = sweep.values.values();
            let mut next = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for &v in &values {
                    let mut q = p.clone();
                    q.set_sweep_value(&sweep.key, v)
                        .map_err(|m| ConfigError::new(None, &format!("sweep.{}", sweep.key), m))?;
                    next.push(q);
                }
            }
            points = next;
        }
        Ok(points)
    }
}
