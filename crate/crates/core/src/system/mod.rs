//! Hardware topology and workload description.
//!
//! All quantities are stored in SI base units (W, J, s, B, Hz). Specs are
//! immutable after loading and can be shared freely across evaluator threads.

mod load;
mod validate;

use serde::{Deserialize, Serialize};

pub use load::{load_system_config, load_workload_config, system_to_toml, workload_to_toml};
pub use validate::{validate_system, validate_workload};

use std::fmt;

use thiserror::Error;

/// A single configuration problem, located by its path in the document.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

/// Every problem found while loading a document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConfigError> {
        self.0.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub name: String,
    /// Sensing (exposure + ADC) power.
    pub p_sense: f64,
    /// Readout power, charged for the transfer time over the readout link.
    pub p_read: f64,
    /// Idle/standby power for the remainder of the frame.
    pub p_off: f64,
    pub t_exposure: f64,
    pub t_adc: f64,
    pub fps: f64,
    pub frame_bytes: f64,
    pub readout_link: String,
}

impl CameraSpec {
    pub fn t_sense(&self) -> f64 {
        self.t_exposure + self.t_adc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommLinkSpec {
    pub name: String,
    /// End-to-end energy per transferred byte.
    pub energy_per_byte: f64,
    /// Bytes per second.
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessorRole {
    OnSensor,
    Aggregator,
}

impl ProcessorRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ProcessorRole::OnSensor => "on-sensor",
            ProcessorRole::Aggregator => "aggregator",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessorSpec {
    pub name: String,
    pub role: ProcessorRole,
    /// Energy per MAC.
    pub e_mac: f64,
    pub peak_macs_per_cycle: f64,
    pub f_clk: f64,
    /// Names of the memories attached to this processor, one per level.
    pub memory_levels: Vec<String>,
    /// Bytes per cycle from the weight memory; bounds the roofline.
    pub weight_stream_bandwidth: f64,
    /// L1 re-read factor approximating tiling (1 = every byte touched once).
    pub tile_revisit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MemoryLevel {
    L1,
    #[serde(rename = "L2-activation")]
    L2Activation,
    #[serde(rename = "L2-weight")]
    L2Weight,
}

impl MemoryLevel {
    pub const ALL: [MemoryLevel; 3] = [MemoryLevel::L1, MemoryLevel::L2Activation, MemoryLevel::L2Weight];

    pub fn as_str(self) -> &'static str {
        match self {
            MemoryLevel::L1 => "L1",
            MemoryLevel::L2Activation => "L2-activation",
            MemoryLevel::L2Weight => "L2-weight",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MemoryTechnology {
    #[serde(rename = "SRAM")]
    Sram,
    #[serde(rename = "STT-MRAM")]
    SttMram,
}

impl MemoryTechnology {
    pub fn as_str(self) -> &'static str {
        match self {
            MemoryTechnology::Sram => "SRAM",
            MemoryTechnology::SttMram => "STT-MRAM",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "SRAM" => Some(Self::Sram),
            "STT-MRAM" => Some(Self::SttMram),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorySpec {
    pub name: String,
    pub level: MemoryLevel,
    pub technology: MemoryTechnology,
    pub capacity: f64,
    pub e_read_per_byte: f64,
    pub e_write_per_byte: f64,
    /// Leakage while the processor is busy.
    pub lk_on: f64,
    /// Retention (SRAM) or off-state (STT-MRAM) leakage while idle.
    pub lk_idle: f64,
    /// Area density relative to SRAM.
    pub density_rel: f64,
}

/// camera → link → on-sensor processor
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraEdge {
    pub camera: String,
    pub link: String,
    pub processor: String,
}

/// on-sensor processor → link → aggregator
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessorEdge {
    pub from: String,
    pub link: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Topology {
    pub camera_edges: Vec<CameraEdge>,
    pub processor_edges: Vec<ProcessorEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub cameras: Vec<CameraSpec>,
    pub links: Vec<CommLinkSpec>,
    pub processors: Vec<ProcessorSpec>,
    pub memories: Vec<MemorySpec>,
    pub topology: Topology,
}

/// Resolved data path of one camera.
#[derive(Debug, Clone, Copy)]
pub struct SensorRoute<'a> {
    pub camera: &'a CameraSpec,
    /// Camera to on-sensor processor.
    pub readout_link: &'a CommLinkSpec,
    pub on_sensor: &'a ProcessorSpec,
    /// On-sensor processor to aggregator.
    pub uplink: &'a CommLinkSpec,
}

impl SystemSpec {
    pub fn camera(&self, name: &str) -> Option<&CameraSpec> {
        self.cameras.iter().find(|c| c.name == name)
    }

    pub fn link(&self, name: &str) -> Option<&CommLinkSpec> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn processor(&self, name: &str) -> Option<&ProcessorSpec> {
        self.processors.iter().find(|p| p.name == name)
    }

    pub fn memory(&self, name: &str) -> Option<&MemorySpec> {
        self.memories.iter().find(|m| m.name == name)
    }

    /// The single aggregator. Validated at load time.
    pub fn aggregator(&self) -> &ProcessorSpec {
        self.processors
            .iter()
            .find(|p| p.role == ProcessorRole::Aggregator)
            .expect("validated system has exactly one aggregator")
    }

    /// Memory attached to `proc` at `level`, if any.
    pub fn processor_memory(&self, proc: &ProcessorSpec, level: MemoryLevel) -> Option<&MemorySpec> {
        proc.memory_levels
            .iter()
            .filter_map(|n| self.memory(n))
            .find(|m| m.level == level)
    }

    /// Memories of `proc` in level order.
    pub fn processor_memories<'a>(&'a self, proc: &'a ProcessorSpec) -> impl Iterator<Item = &'a MemorySpec> + 'a {
        MemoryLevel::ALL
            .into_iter()
            .filter_map(move |lvl| self.processor_memory(proc, lvl))
    }

    pub fn route<'a>(&'a self, camera: &'a CameraSpec) -> Option<SensorRoute<'a>> {
        let edge = self.topology.camera_edges.iter().find(|e| e.camera == camera.name)?;
        let readout_link = self.link(&edge.link)?;
        let on_sensor = self.processor(&edge.processor)?;
        let up = self
            .topology
            .processor_edges
            .iter()
            .find(|e| e.from == on_sensor.name)?;
        let uplink = self.link(&up.link)?;
        Some(SensorRoute { camera, readout_link, on_sensor, uplink })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Depthwise,
    Pointwise,
    Dense,
}

impl LayerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Conv => "conv",
            LayerKind::Depthwise => "depthwise",
            LayerKind::Pointwise => "pointwise",
            LayerKind::Dense => "dense",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "conv" => Some(Self::Conv),
            "depthwise" => Some(Self::Depthwise),
            "pointwise" => Some(Self::Pointwise),
            "dense" => Some(Self::Dense),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub kernel_h: u64,
    pub kernel_w: u64,
    pub c_in: u64,
    pub c_out: u64,
    pub out_h: u64,
    pub out_w: u64,
    pub weight_bytes: f64,
    pub in_activation_bytes: f64,
    pub out_activation_bytes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

impl Stage {
    pub fn weight_bytes(&self) -> f64 {
        self.layers.iter().map(|l| l.weight_bytes).sum()
    }

    /// Bytes produced by the last layer.
    pub fn output_bytes(&self) -> f64 {
        self.layers.last().map_or(0.0, |l| l.out_activation_bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub stages: Vec<Stage>,
    /// Payload between stage `i` and `i + 1`.
    pub boundary_bytes: Vec<f64>,
    pub stage_fps: Vec<f64>,
    /// Aggregator inferences per camera stream (1 = one inference per ROI).
    pub aggregator_inferences_per_camera: f64,
}

impl WorkloadSpec {
    pub fn layers(&self) -> impl Iterator<Item = &LayerSpec> {
        self.stages.iter().flat_map(|s| s.layers.iter())
    }

    pub fn stage_index(&self, name: &str) -> Option<usize> {
        self.stages.iter().position(|s| s.name == name)
    }
}
