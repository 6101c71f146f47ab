//! Per-layer MAC counts, memory traffic and roofline throughput.
//!
//! The built-in estimator streams every weight once per frame from the L2
//! weight memory, which is also the level the roofline is measured against.
//! A measured trace can replace the estimate layer by layer.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{LevelTraffic, TrafficCounts};
use crate::system::{LayerKind, LayerSpec, ProcessorSpec, WorkloadSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayerError {
    #[error("tile_revisit must be at least 1, got {0}")]
    InvalidTileRevisit(f64),
    #[error("layer {layer:?}: weight_bytes must be positive")]
    NoWeights { layer: String },
    #[error("layer {layer:?}: traced throughput {throughput} MAC/cycle exceeds processor {processor:?} peak {peak}")]
    TraceAbovePeak { layer: String, processor: String, throughput: f64, peak: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostSource {
    Estimate,
    Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCost {
    pub layer: String,
    pub macs: u64,
    /// Achieved MAC/cycle.
    pub throughput: f64,
    pub traffic: TrafficCounts,
    /// MACs per byte read from the weight memory; `None` when no weight bytes are read.
    pub arithmetic_intensity: Option<f64>,
    /// Roofline bound at this intensity.
    pub attainable: f64,
    pub source: CostSource,
}

#[cfg(test)]
impl LayerCost {
    pub(crate) fn synthetic(layer: &str, macs: u64, throughput: f64) -> Self {
        Self {
            layer: layer.into(),
            macs,
            throughput,
            traffic: TrafficCounts::default(),
            arithmetic_intensity: None,
            attainable: throughput,
            source: CostSource::Estimate,
        }
    }
}

pub fn layer_macs(layer: &LayerSpec) -> u64 {
    let spatial = layer.out_h * layer.out_w;
    match layer.kind {
        LayerKind::Conv => layer.kernel_h * layer.kernel_w * layer.c_in * layer.c_out * spatial,
        LayerKind::Depthwise => layer.kernel_h * layer.kernel_w * layer.c_in * spatial,
        LayerKind::Pointwise => layer.c_in * layer.c_out * spatial,
        LayerKind::Dense => layer.c_in * layer.c_out,
    }
}

pub fn default_traffic(layer: &LayerSpec, tile_revisit: f64) -> Result<TrafficCounts, LayerError> {
    if !(tile_revisit >= 1.0) {
        return Err(LayerError::InvalidTileRevisit(tile_revisit));
    }
    if !(layer.weight_bytes > 0.0) {
        return Err(LayerError::NoWeights { layer: layer.name.clone() });
    }
    Ok(TrafficCounts {
        l2_weight: LevelTraffic { read_bytes: layer.weight_bytes, write_bytes: 0.0 },
        l2_activation: LevelTraffic {
            read_bytes: layer.in_activation_bytes,
            write_bytes: layer.out_activation_bytes,
        },
        l1: LevelTraffic {
            read_bytes: (layer.weight_bytes + layer.in_activation_bytes) * tile_revisit,
            write_bytes: layer.out_activation_bytes * tile_revisit,
        },
    })
}

/// Attainable MAC/cycle: `min(peak, weight_stream_bandwidth * intensity)`.
pub fn roofline_throughput(proc: &ProcessorSpec, intensity: f64) -> f64 {
    proc.peak_macs_per_cycle.min(proc.weight_stream_bandwidth * intensity)
}

pub fn cost_layer(proc: &ProcessorSpec, layer: &LayerSpec, tile_revisit: f64) -> Result<LayerCost, LayerError> {
    let macs = layer_macs(layer);
    let traffic = default_traffic(layer, tile_revisit)?;
    let intensity = macs as f64 / traffic.l2_weight.read_bytes;
    let throughput = roofline_throughput(proc, intensity);
    Ok(LayerCost {
        layer: layer.name.clone(),
        macs,
        throughput,
        traffic,
        arithmetic_intensity: Some(intensity),
        attainable: throughput,
        source: CostSource::Estimate,
    })
}

/// Cost a layer, preferring a trace record when one exists.
pub fn cost_layer_traced(proc: &ProcessorSpec, layer: &LayerSpec, trace: &Trace) -> Result<LayerCost, LayerError> {
    let Some(rec) = trace.get(&layer.name) else {
        return cost_layer(proc, layer, proc.tile_revisit);
    };
    if rec.throughput > proc.peak_macs_per_cycle {
        return Err(LayerError::TraceAbovePeak {
            layer: layer.name.clone(),
            processor: proc.name.clone(),
            throughput: rec.throughput,
            peak: proc.peak_macs_per_cycle,
        });
    }
    let w = rec.traffic.l2_weight.read_bytes;
    let intensity = (w > 0.0).then(|| rec.macs as f64 / w);
    Ok(LayerCost {
        layer: layer.name.clone(),
        macs: rec.macs,
        throughput: rec.throughput,
        traffic: rec.traffic,
        arithmetic_intensity: intensity,
        attainable: roofline_throughput(proc, intensity.unwrap_or(f64::INFINITY)),
        source: CostSource::Trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub layer: String,
    pub macs: u64,
    pub traffic: TrafficCounts,
    pub throughput: f64,
}

/// Measured per-layer costs keyed by layer name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    records: BTreeMap<String, TraceRecord>,
}

impl Trace {
    pub const fn empty() -> Self {
        Self { records: BTreeMap::new() }
    }

    pub fn get(&self, layer: &str) -> Option<&TraceRecord> {
        self.records.get(layer)
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.values()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("malformed trace at line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("trace header is missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("trace names layers absent from the workload: {}", .0.join(", "))]
    UnknownLayers(Vec<String>),
    #[error("trace line {line}: {column} must be non-negative")]
    Negative { line: u64, column: &'static str },
    #[error("trace line {line}: throughput must be positive")]
    NonPositiveThroughput { line: u64 },
    #[error("trace line {line}: duplicate record for layer {layer:?}")]
    Duplicate { line: u64, layer: String },
}

const TRAFFIC_COLUMNS: [&str; 6] = [
    "l2w_read_B",
    "l2w_write_B",
    "l2a_read_B",
    "l2a_write_B",
    "l1_read_B",
    "l1_write_B",
];

/// Parse a delimited trace with a header row. `layer_name`, `macs` and
/// `throughput_mac_per_cycle` are required; missing traffic columns read as 0.
pub fn ingest_trace(text: &str, workload: &WorkloadSpec) -> Result<Trace, TraceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(TraceError::Malformed { line: 1, message: e.to_string() }),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Trace::default());
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let name_col = col("layer_name").ok_or(TraceError::MissingColumn("layer_name"))?;
    let macs_col = col("macs").ok_or(TraceError::MissingColumn("macs"))?;
    let tp_col = col("throughput_mac_per_cycle").ok_or(TraceError::MissingColumn("throughput_mac_per_cycle"))?;
    let traffic_cols: Vec<Option<usize>> = TRAFFIC_COLUMNS.iter().map(|c| col(c)).collect();

    let known: HashSet<&str> = workload.layers().map(|l| l.name.as_str()).collect();
    let mut unknown = Vec::new();
    let mut records = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| TraceError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let number = |idx: usize, column: &'static str| -> Result<f64, TraceError> {
            let v: f64 = row[idx].parse().map_err(|_| TraceError::Malformed {
                line,
                message: format!("{column}: cannot parse {:?}", &row[idx]),
            })?;
            if !(v >= 0.0) {
                return Err(TraceError::Negative { line, column });
            }
            Ok(v)
        };
        let layer = row[name_col].to_string();
        let macs = number(macs_col, "macs")?;
        if macs.fract() != 0.0 {
            return Err(TraceError::Malformed { line, message: "macs must be an integer".into() });
        }
        let mut t = [0.0; 6];
        for (k, idx) in traffic_cols.iter().enumerate() {
            if let Some(idx) = idx {
                t[k] = number(*idx, TRAFFIC_COLUMNS[k])?;
            }
        }
        let throughput = number(tp_col, "throughput_mac_per_cycle")?;
        if !(throughput > 0.0) {
            return Err(TraceError::NonPositiveThroughput { line });
        }
        if !known.contains(layer.as_str()) {
            unknown.push(layer);
            continue;
        }
        let rec = TraceRecord {
            layer: layer.clone(),
            macs: macs as u64,
            traffic: TrafficCounts {
                l2_weight: LevelTraffic { read_bytes: t[0], write_bytes: t[1] },
                l2_activation: LevelTraffic { read_bytes: t[2], write_bytes: t[3] },
                l1: LevelTraffic { read_bytes: t[4], write_bytes: t[5] },
            },
            throughput,
        };
        if records.insert(layer.clone(), rec).is_some() {
            return Err(TraceError::Duplicate { line, layer });
        }
    }
    if !unknown.is_empty() {
        return Err(TraceError::UnknownLayers(unknown));
    }
    Ok(Trace { records })
}
