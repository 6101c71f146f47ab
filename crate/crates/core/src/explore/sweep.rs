//! One-parameter sweeps over a numeric config field.
//!
//! Paths address fields of the loaded specs:
//!
//! ```text
//! cameras.<name|*>.<field>        links.<name|*>.<field>
//! processors.<name|*>.<field>     memories.<name|*>.<field>
//! workload.boundary_bytes.<index|*>
//! workload.stage_fps.<index|stage|*>
//! workload.layers.<layer|*>.<field>
//! workload.aggregator_inferences_per_camera
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{select_winner, Explorer};
use crate::par::map_ordered;
use crate::system::{validate_system, validate_workload, ConfigErrors, SystemSpec, WorkloadSpec};
use crate::units::Dimension;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("unknown parameter path {0:?}")]
    UnknownPath(String),
    #[error("parameter {0:?} is not numeric")]
    NonNumeric(String),
    #[error("parameter {path:?} set to {value} gives an invalid configuration: {errors}")]
    InvalidValue { path: String, value: f64, errors: ConfigErrors },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Cameras,
    Links,
    Processors,
    Memories,
}

#[derive(Debug, Clone, PartialEq)]
enum Target {
    System { section: Section, name: Selector, field: String },
    Boundary(Selector),
    StageFps(Selector),
    Layer { name: Selector, field: String },
    AggregatorInferences,
}

#[derive(Debug, Clone, PartialEq)]
enum Selector {
    All,
    Named(String),
}

impl Selector {
    fn parse(s: &str) -> Self {
        if s == "*" {
            Selector::All
        } else {
            Selector::Named(s.to_string())
        }
    }

    fn matches(&self, name: &str) -> bool {
        match self {
            Selector::All => true,
            Selector::Named(n) => n == name,
        }
    }
}

/// A parsed and resolved parameter path.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPath {
    text: String,
    target: Target,
    dimension: Dimension,
}

const CAMERA_NUMERIC: &[(&str, Dimension)] = &[
    ("p_sense", Dimension::Power),
    ("p_read", Dimension::Power),
    ("p_off", Dimension::Power),
    ("t_exposure", Dimension::Time),
    ("t_adc", Dimension::Time),
    ("fps", Dimension::Rate),
    ("frame_bytes", Dimension::Bytes),
];
const CAMERA_OTHER: &[&str] = &["name", "readout_link"];
const LINK_NUMERIC: &[(&str, Dimension)] =
    &[("energy_per_byte", Dimension::EnergyPerByte), ("bandwidth", Dimension::ByteRate)];
const LINK_OTHER: &[&str] = &["name"];
const PROCESSOR_NUMERIC: &[(&str, Dimension)] = &[
    ("e_mac", Dimension::Energy),
    ("peak_macs_per_cycle", Dimension::MacsPerCycle),
    ("f_clk", Dimension::Frequency),
    ("weight_stream_bandwidth", Dimension::BytesPerCycle),
    ("tile_revisit", Dimension::Dimensionless),
];
const PROCESSOR_OTHER: &[&str] = &["name", "role", "memory_levels"];
const MEMORY_NUMERIC: &[(&str, Dimension)] = &[
    ("capacity", Dimension::Bytes),
    ("e_read_per_byte", Dimension::EnergyPerByte),
    ("e_write_per_byte", Dimension::EnergyPerByte),
    ("lk_on", Dimension::Power),
    ("lk_idle", Dimension::Power),
    ("density_rel", Dimension::Dimensionless),
];
const MEMORY_OTHER: &[&str] = &["name", "level", "technology"];
const LAYER_NUMERIC: &[(&str, Dimension)] = &[
    ("weight_bytes", Dimension::Bytes),
    ("in_activation_bytes", Dimension::Bytes),
    ("out_activation_bytes", Dimension::Bytes),
    ("kernel_h", Dimension::Dimensionless),
    ("kernel_w", Dimension::Dimensionless),
    ("c_in", Dimension::Dimensionless),
    ("c_out", Dimension::Dimensionless),
    ("out_h", Dimension::Dimensionless),
    ("out_w", Dimension::Dimensionless),
];
const LAYER_OTHER: &[&str] = &["name", "kind"];

fn field_dimension(path: &str, field: &str, numeric: &[(&str, Dimension)], other: &[&str]) -> Result<Dimension, SweepError> {
    if let Some((_, d)) = numeric.iter().find(|(f, _)| *f == field) {
        Ok(*d)
    } else if other.contains(&field) {
        Err(SweepError::NonNumeric(path.to_string()))
    } else {
        Err(SweepError::UnknownPath(path.to_string()))
    }
}

impl ParamPath {
    /// Parse `path` and check that it addresses something in the given specs.
    pub fn resolve(path: &str, system: &SystemSpec, workload: &WorkloadSpec) -> Result<Self, SweepError> {
        let unknown = || SweepError::UnknownPath(path.to_string());
        let parts: Vec<&str> = path.split('.').collect();
        let (target, dimension) = match parts.as_slice() {
            [section @ ("cameras" | "links" | "processors" | "memories"), name, field] => {
                let name = Selector::parse(name);
                let (section, dim, exists) = match *section {
                    "cameras" => (
                        Section::Cameras,
                        field_dimension(path, field, CAMERA_NUMERIC, CAMERA_OTHER)?,
                        system.cameras.iter().any(|c| name.matches(&c.name)),
                    ),
                    "links" => (
                        Section::Links,
                        field_dimension(path, field, LINK_NUMERIC, LINK_OTHER)?,
                        system.links.iter().any(|c| name.matches(&c.name)),
                    ),
                    "processors" => (
                        Section::Processors,
                        field_dimension(path, field, PROCESSOR_NUMERIC, PROCESSOR_OTHER)?,
                        system.processors.iter().any(|c| name.matches(&c.name)),
                    ),
                    _ => (
                        Section::Memories,
                        field_dimension(path, field, MEMORY_NUMERIC, MEMORY_OTHER)?,
                        system.memories.iter().any(|c| name.matches(&c.name)),
                    ),
                };
                if !exists {
                    return Err(unknown());
                }
                (Target::System { section, name, field: field.to_string() }, dim)
            }
            ["workload", "boundary_bytes", idx] => {
                let sel = Selector::parse(idx);
                let ok = match &sel {
                    Selector::All => !workload.boundary_bytes.is_empty(),
                    Selector::Named(i) => i.parse::<usize>().is_ok_and(|i| i < workload.boundary_bytes.len()),
                };
                if !ok {
                    return Err(unknown());
                }
                (Target::Boundary(sel), Dimension::Bytes)
            }
            ["workload", "stage_fps", key] => {
                let sel = match Selector::parse(key) {
                    Selector::All => Selector::All,
                    Selector::Named(k) => match k.parse::<usize>() {
                        Ok(i) if i < workload.stage_fps.len() => Selector::Named(i.to_string()),
                        Ok(_) => return Err(unknown()),
                        Err(_) => {
                            let i = workload.stage_index(&k).ok_or_else(unknown)?;
                            Selector::Named(i.to_string())
                        }
                    },
                };
                (Target::StageFps(sel), Dimension::Rate)
            }
            ["workload", "layers", name, field] => {
                let dim = field_dimension(path, field, LAYER_NUMERIC, LAYER_OTHER)?;
                let name = Selector::parse(name);
                if !workload.layers().any(|l| name.matches(&l.name)) {
                    return Err(unknown());
                }
                (Target::Layer { name, field: field.to_string() }, dim)
            }
            ["workload", "aggregator_inferences_per_camera"] => (Target::AggregatorInferences, Dimension::Dimensionless),
            ["workload", "stages" | "stage_names"] | ["workload", "stages", ..] => {
                return Err(SweepError::NonNumeric(path.to_string()))
            }
            _ => return Err(unknown()),
        };
        Ok(Self { text: path.to_string(), target, dimension })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Unit dimension of the addressed field, for parsing sweep values.
    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    /// Write `value` into every field the path selects.
    pub fn apply(&self, value: f64, system: &mut SystemSpec, workload: &mut WorkloadSpec) {
        match &self.target {
            Target::System { section, name, field } => match section {
                Section::Cameras => {
                    for c in system.cameras.iter_mut().filter(|c| name.matches(&c.name)) {
                        let slot = match field.as_str() {
                            "p_sense" => &mut c.p_sense,
                            "p_read" => &mut c.p_read,
                            "p_off" => &mut c.p_off,
                            "t_exposure" => &mut c.t_exposure,
                            "t_adc" => &mut c.t_adc,
                            "fps" => &mut c.fps,
                            _ => &mut c.frame_bytes,
                        };
                        *slot = value;
                    }
                }
                Section::Links => {
                    for l in system.links.iter_mut().filter(|l| name.matches(&l.name)) {
                        match field.as_str() {
                            "energy_per_byte" => l.energy_per_byte = value,
                            _ => l.bandwidth = value,
                        }
                    }
                }
                Section::Processors => {
                    for p in system.processors.iter_mut().filter(|p| name.matches(&p.name)) {
                        let slot = match field.as_str() {
                            "e_mac" => &mut p.e_mac,
                            "peak_macs_per_cycle" => &mut p.peak_macs_per_cycle,
                            "f_clk" => &mut p.f_clk,
                            "weight_stream_bandwidth" => &mut p.weight_stream_bandwidth,
                            _ => &mut p.tile_revisit,
                        };
                        *slot = value;
                    }
                }
                Section::Memories => {
                    for m in system.memories.iter_mut().filter(|m| name.matches(&m.name)) {
                        let slot = match field.as_str() {
                            "capacity" => &mut m.capacity,
                            "e_read_per_byte" => &mut m.e_read_per_byte,
                            "e_write_per_byte" => &mut m.e_write_per_byte,
                            "lk_on" => &mut m.lk_on,
                            "lk_idle" => &mut m.lk_idle,
                            _ => &mut m.density_rel,
                        };
                        *slot = value;
                    }
                }
            },
            Target::Boundary(sel) => {
                for (i, b) in workload.boundary_bytes.iter_mut().enumerate() {
                    if sel.matches(&i.to_string()) {
                        *b = value;
                    }
                }
            }
            Target::StageFps(sel) => {
                for (i, f) in workload.stage_fps.iter_mut().enumerate() {
                    if sel.matches(&i.to_string()) {
                        *f = value;
                    }
                }
            }
            Target::Layer { name, field } => {
                for l in workload.stages.iter_mut().flat_map(|s| s.layers.iter_mut()) {
                    if !name.matches(&l.name) {
                        continue;
                    }
                    // Shape fields are integral; a negative or fractional value
                    // truncates toward zero and then fails validation if < 1.
                    let count = if value >= 0.0 { value as u64 } else { 0 };
                    match field.as_str() {
                        "weight_bytes" => l.weight_bytes = value,
                        "in_activation_bytes" => l.in_activation_bytes = value,
                        "out_activation_bytes" => l.out_activation_bytes = value,
                        "kernel_h" => l.kernel_h = count,
                        "kernel_w" => l.kernel_w = count,
                        "c_in" => l.c_in = count,
                        "c_out" => l.c_out = count,
                        "out_h" => l.out_h = count,
                        _ => l.out_w = count,
                    }
                }
            }
            Target::AggregatorInferences => workload.aggregator_inferences_per_camera = value,
        }
    }
}

/// Dimension of the field at `path`, used to parse unit-suffixed sweep values.
pub fn param_dimension(path: &str, system: &SystemSpec, workload: &WorkloadSpec) -> Result<Dimension, SweepError> {
    ParamPath::resolve(path, system, workload).map(|p| p.dimension())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// Total power per plan, `None` where the plan is infeasible.
    pub powers: Vec<Option<f64>>,
    pub winner: Option<String>,
}

/// Winner change between two consecutive sweep rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub after_value: f64,
    pub before_value: f64,
    pub from_plan: Option<String>,
    pub to_plan: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub param: String,
    pub plan_ids: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn crossovers(&self) -> Vec<Crossover> {
        self.rows
            .windows(2)
            .filter(|w| w[0].winner != w[1].winner)
            .map(|w| Crossover {
                after_value: w[0].value,
                before_value: w[1].value,
                from_plan: w[0].winner.clone(),
                to_plan: w[1].winner.clone(),
            })
            .collect()
    }
}

impl Explorer<'_> {
    /// Evaluate every plan at every value of `param`. Rows follow `values`
    /// order and plan columns follow cut order.
    pub fn sweep(&self, param: &str, values: &[f64]) -> Result<SweepTable, SweepError> {
        let path = ParamPath::resolve(param, self.system, self.workload)?;
        let plan_ids = self.plans().into_iter().map(|p| p.id).collect();
        let rows = map_ordered(values, self.execution, |&value| {
            let mut system = self.system.clone();
            let mut workload = self.workload.clone();
            path.apply(value, &mut system, &mut workload);
            let mut errors = validate_system(&system);
            errors.extend(validate_workload(&workload));
            if !errors.is_empty() {
                return Err(SweepError::InvalidValue {
                    path: param.to_string(),
                    value,
                    errors: ConfigErrors(errors),
                });
            }
            // Plans are evaluated in order inside a row; rows run in parallel.
            let evals = Explorer { system: &system, workload: &workload, ..*self }
                .with_execution(crate::par::Execution::Sequential)
                .evaluate_all();
            let winner = select_winner(&evals).map(|i| evals[i].plan.id.clone());
            Ok(SweepRow { value, powers: evals.iter().map(|e| e.total_power()).collect(), winner })
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        Ok(SweepTable { param: param.to_string(), plan_ids, rows })
    }
}

pub fn sweep(param: &str, values: &[f64], workload: &WorkloadSpec, system: &SystemSpec) -> Result<SweepTable, SweepError> {
    Explorer::new(system, workload).sweep(param, values)
}
