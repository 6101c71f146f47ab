//! Per-frame energy kernels and power aggregation.
//!
//! Each kernel is a pure function of explicit arguments. Energies are joules
//! per frame of the module's own frame rate; [`aggregate`] turns them into
//! average power by weighting every module with its own fps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layer::LayerCost;
use crate::system::{CameraSpec, CommLinkSpec, MemoryLevel, MemorySpec, ProcessorSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error(
        "frame budget exceeded: sensing {t_sense:.6e} s + readout {t_comm:.6e} s > frame period {frame_period:.6e} s"
    )]
    FrameBudgetExceeded { t_sense: f64, t_comm: f64, frame_period: f64 },
    #[error("idle underflow: processing {t_processing:.6e} s exceeds frame period {frame_period:.6e} s")]
    IdleUnderflow { t_processing: f64, frame_period: f64 },
    #[error("layer {layer:?} has non-positive throughput {throughput}")]
    ZeroThroughput { layer: String, throughput: f64 },
}

/// Split of one camera frame period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTiming {
    pub t_sense: f64,
    pub t_comm: f64,
    pub t_off: f64,
    pub frame_period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LevelTraffic {
    pub read_bytes: f64,
    pub write_bytes: f64,
}

impl LevelTraffic {
    pub fn scaled(self, k: f64) -> Self {
        Self { read_bytes: self.read_bytes * k, write_bytes: self.write_bytes * k }
    }
}

impl std::ops::Add for LevelTraffic {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { read_bytes: self.read_bytes + o.read_bytes, write_bytes: self.write_bytes + o.write_bytes }
    }
}

/// Bytes read and written per frame at each memory level.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrafficCounts {
    pub l1: LevelTraffic,
    pub l2_activation: LevelTraffic,
    pub l2_weight: LevelTraffic,
}

impl TrafficCounts {
    pub fn level(&self, level: MemoryLevel) -> LevelTraffic {
        match level {
            MemoryLevel::L1 => self.l1,
            MemoryLevel::L2Activation => self.l2_activation,
            MemoryLevel::L2Weight => self.l2_weight,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            l1: self.l1.scaled(k),
            l2_activation: self.l2_activation.scaled(k),
            l2_weight: self.l2_weight.scaled(k),
        }
    }
}

impl std::ops::Add for TrafficCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            l1: self.l1 + o.l1,
            l2_activation: self.l2_activation + o.l2_activation,
            l2_weight: self.l2_weight + o.l2_weight,
        }
    }
}

impl std::iter::Sum for TrafficCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Camera,
    Comm,
    Compute,
    MemoryAccess,
    MemoryLeakage,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Camera,
        Category::Comm,
        Category::Compute,
        Category::MemoryAccess,
        Category::MemoryLeakage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Camera => "camera",
            Category::Comm => "comm",
            Category::Compute => "compute",
            Category::MemoryAccess => "memory-access",
            Category::MemoryLeakage => "memory-leakage",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

/// Where a module physically sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    Sensor,
    Link,
    Aggregator,
}

impl Placement {
    pub fn as_str(self) -> &'static str {
        match self {
            Placement::Sensor => "sensor",
            Placement::Link => "link",
            Placement::Aggregator => "aggregator",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sensor" => Some(Self::Sensor),
            "link" => Some(Self::Link),
            "aggregator" => Some(Self::Aggregator),
            _ => None,
        }
    }
}

/// One summand of the system energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleEnergy {
    pub module_id: String,
    pub category: Category,
    /// Spec identifier the energy is charged to (camera, link, processor or memory name).
    pub resource: String,
    pub placement: Placement,
    pub energy_per_frame: f64,
    pub fps: f64,
}

impl ModuleEnergy {
    pub fn avg_power(&self) -> f64 {
        self.energy_per_frame * self.fps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub modules: Vec<ModuleEnergy>,
    /// Plain sum of per-frame energies by category.
    pub energy_per_frame: BTreeMap<Category, f64>,
    pub power: BTreeMap<Category, f64>,
    pub total_energy_per_frame: f64,
    pub total_avg_power: f64,
    pub shares: BTreeMap<Category, f64>,
}

impl PowerBreakdown {
    pub fn category_power(&self, c: Category) -> f64 {
        self.power.get(&c).copied().unwrap_or(0.0)
    }

    pub fn category_energy(&self, c: Category) -> f64 {
        self.energy_per_frame.get(&c).copied().unwrap_or(0.0)
    }

    /// Sum of average power over modules matching `pred`.
    pub fn power_where(&self, pred: impl Fn(&ModuleEnergy) -> bool) -> f64 {
        self.modules.iter().filter(|m| pred(m)).map(ModuleEnergy::avg_power).sum()
    }

    pub fn energy_where(&self, pred: impl Fn(&ModuleEnergy) -> bool) -> f64 {
        self.modules.iter().filter(|m| pred(m)).map(|m| m.energy_per_frame).sum()
    }
}

/// Split the camera frame period into sensing, readout and off time.
pub fn frame_timing(camera: &CameraSpec, transfer_bytes: f64, link: &CommLinkSpec) -> Result<FrameTiming, EnergyError> {
    let frame_period = 1.0 / camera.fps;
    let t_sense = camera.t_sense();
    let t_comm = transfer_bytes / link.bandwidth;
    let t_off = frame_period - t_sense - t_comm;
    if t_off < 0.0 {
        return Err(EnergyError::FrameBudgetExceeded { t_sense, t_comm, frame_period });
    }
    Ok(FrameTiming { t_sense, t_comm, t_off, frame_period })
}

pub fn camera_energy(camera: &CameraSpec, timing: &FrameTiming) -> f64 {
    camera.p_sense * timing.t_sense + camera.p_read * timing.t_comm + camera.p_off * timing.t_off
}

pub fn comm_energy(link: &CommLinkSpec, bytes: f64) -> f64 {
    bytes * link.energy_per_byte
}

pub fn compute_energy(proc: &ProcessorSpec, macs: f64) -> f64 {
    macs * proc.e_mac
}

/// Read/write energy of `mem`, using the traffic recorded for its level.
pub fn memory_access_energy(mem: &MemorySpec, traffic: &TrafficCounts) -> f64 {
    let t = traffic.level(mem.level);
    t.read_bytes * mem.e_read_per_byte + t.write_bytes * mem.e_write_per_byte
}

/// Busy time of the accelerator over `layer_costs`.
pub fn processing_time(layer_costs: &[LayerCost], f_clk: f64) -> Result<f64, EnergyError> {
    let mut cycles = 0.0;
    for c in layer_costs {
        if !(c.throughput > 0.0) {
            return Err(EnergyError::ZeroThroughput { layer: c.layer.clone(), throughput: c.throughput });
        }
        cycles += c.macs as f64 / c.throughput;
    }
    Ok(cycles / f_clk)
}

/// Leakage split into the busy (on-state) and idle (retention/off) terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageTerms {
    pub on: f64,
    pub idle: f64,
    pub t_idle: f64,
}

impl LeakageTerms {
    pub fn total(&self) -> f64 {
        self.on + self.idle
    }
}

pub fn leakage_terms(mem: &MemorySpec, t_processing: f64, fps: f64) -> Result<LeakageTerms, EnergyError> {
    let frame_period = 1.0 / fps;
    let t_idle = frame_period - t_processing;
    if t_idle < 0.0 {
        return Err(EnergyError::IdleUnderflow { t_processing, frame_period });
    }
    Ok(LeakageTerms { on: t_processing * mem.lk_on, idle: t_idle * mem.lk_idle, t_idle })
}

pub fn leakage_energy(mem: &MemorySpec, t_processing: f64, fps: f64) -> Result<f64, EnergyError> {
    leakage_terms(mem, t_processing, fps).map(|t| t.total())
}

/// Sum module energies into per-category totals and average power.
pub fn aggregate(modules: Vec<ModuleEnergy>) -> PowerBreakdown {
    let mut energy_per_frame = BTreeMap::new();
    let mut power = BTreeMap::new();
    let mut total_energy_per_frame = 0.0;
    let mut total_avg_power = 0.0;
    for m in &modules {
        let p = m.avg_power();
        *energy_per_frame.entry(m.category).or_insert(0.0) += m.energy_per_frame;
        *power.entry(m.category).or_insert(0.0) += p;
        total_energy_per_frame += m.energy_per_frame;
        total_avg_power += p;
    }
    let shares = if total_avg_power > 0.0 {
        power.iter().map(|(c, p)| (*c, p / total_avg_power)).collect()
    } else {
        BTreeMap::new()
    };
    PowerBreakdown { modules, energy_per_frame, power, total_energy_per_frame, total_avg_power, shares }
}
