//! Report documents and their CSV, JSON and table renderings.
//!
//! All numbers are SI base units. CSV floats use the shortest decimal that
//! round-trips, so a CSV and a JSON rendering of one document parse back to
//! identical values. Metadata sits in `#` comment lines at the top of CSV
//! output and under `metadata` in JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::energy::Category;
use crate::explore::{Crossover, PlanEvaluation, ProcessorLoad, SweepTable};
use crate::layer::{cost_layer_traced, CostSource, LayerError, Trace};
use crate::system::{LayerKind, ProcessorSpec, WorkloadSpec};
use crate::units::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    #[default]
    Table,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Reproducibility stamp: tool version and a SHA-256 of every input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool_version: String,
    /// Input role (`system`, `workload`, `trace`) to hex digest.
    pub config_sha256: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new<'a>(inputs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: inputs.into_iter().map(|(k, text)| (k.to_string(), sha256_hex(text))).collect(),
        }
    }

    fn csv_comments(&self, out: &mut String) {
        let _ = writeln!(out, "# tool_version={}", self.tool_version);
        for (k, v) in &self.config_sha256 {
            let _ = writeln!(out, "# {k}_sha256={v}");
        }
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub module: String,
    pub category: Category,
    pub resource: String,
    pub placement: String,
    pub energy_per_frame: f64,
    pub fps: f64,
    pub avg_power: f64,
    pub share: f64,
    pub normalized_power: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: Category,
    pub energy_per_frame: f64,
    pub avg_power: f64,
    pub share: f64,
    pub normalized_power: Option<f64>,
}

/// Breakdown of one plan. Normalized columns are filled only when a
/// baseline was requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub scenario: String,
    pub description: String,
    pub feasible: bool,
    pub infeasibility_reason: Option<String>,
    pub normalized: bool,
    pub baseline: Option<String>,
    pub baseline_power: Option<f64>,
    pub rows: Vec<ReportRow>,
    pub categories: Vec<CategoryRow>,
    pub total_energy_per_frame: f64,
    pub total_avg_power: f64,
    pub normalized_total: Option<f64>,
    pub loads: Vec<ProcessorLoad>,
}

/// A baseline plan id and its total power.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub id: String,
    pub power: f64,
}

impl PlanReport {
    pub fn from_evaluation(eval: &PlanEvaluation, baseline: Option<&Baseline>) -> Self {
        let b = &eval.breakdown;
        let total = b.total_avg_power;
        let share = |p: f64| if total > 0.0 { p / total } else { 0.0 };
        let norm = |p: f64| baseline.map(|base| p / base.power);
        let rows = b
            .modules
            .iter()
            .map(|m| {
                let p = m.avg_power();
                ReportRow {
                    module: m.module_id.clone(),
                    category: m.category,
                    resource: m.resource.clone(),
                    placement: m.placement.as_str().to_string(),
                    energy_per_frame: m.energy_per_frame,
                    fps: m.fps,
                    avg_power: p,
                    share: share(p),
                    normalized_power: norm(p),
                }
            })
            .collect();
        let categories = if eval.feasible {
            Category::ALL
                .iter()
                .map(|&c| CategoryRow {
                    category: c,
                    energy_per_frame: b.category_energy(c),
                    avg_power: b.category_power(c),
                    share: share(b.category_power(c)),
                    normalized_power: norm(b.category_power(c)),
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            scenario: eval.plan.id.clone(),
            description: eval.plan.describe(),
            feasible: eval.feasible,
            infeasibility_reason: eval.infeasibility_reason.clone(),
            normalized: baseline.is_some(),
            baseline: baseline.map(|b| b.id.clone()),
            baseline_power: baseline.map(|b| b.power),
            rows,
            categories,
            total_energy_per_frame: b.total_energy_per_frame,
            total_avg_power: total,
            normalized_total: if eval.feasible { norm(total) } else { None },
            loads: eval.loads.clone(),
        }
    }

    fn table(&self, out: &mut String) {
        let _ = writeln!(out, "plan {} ({})", self.scenario, self.description);
        if let Some(reason) = &self.infeasibility_reason {
            let _ = writeln!(out, "  infeasible: {reason}");
            return;
        }
        let mut t = TextTable::new(&["module", "category", "energy/frame", "fps", "power", "share"]);
        for r in &self.rows {
            t.row(vec![
                r.module.clone(),
                r.category.as_str().to_string(),
                eng(r.energy_per_frame, "J"),
                trim_float(r.fps),
                eng(r.avg_power, "W"),
                percent(r.share),
            ]);
        }
        t.render(out);
        out.push('\n');
        let mut t = TextTable::new(&["category", "energy/frame", "power", "share", "normalized"]);
        for c in &self.categories {
            t.row(vec![
                c.category.as_str().to_string(),
                eng(c.energy_per_frame, "J"),
                eng(c.avg_power, "W"),
                percent(c.share),
                c.normalized_power.map(|v| format!("{v:.4}")).unwrap_or_default(),
            ]);
        }
        t.row(vec![
            "total".into(),
            eng(self.total_energy_per_frame, "J"),
            eng(self.total_avg_power, "W"),
            percent(1.0),
            self.normalized_total.map(|v| format!("{v:.4}")).unwrap_or_default(),
        ]);
        t.render(out);
        if let Some(b) = &self.baseline {
            let _ = writeln!(out, "normalized to {b}");
        }
    }
}

/// Output of `simulate`: one plan plus reproducibility metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    #[serde(flatten)]
    pub report: PlanReport,
    pub metadata: Metadata,
}

const BREAKDOWN_HEADER: [&str; 10] = [
    "scenario",
    "module",
    "category",
    "resource",
    "placement",
    "energy_per_frame",
    "fps",
    "avg_power",
    "share",
    "normalized_power",
];
const BREAKDOWN_UNITS: [&str; 10] = ["unit", "", "", "", "", "J", "1/s", "W", "1", "1"];

impl ReportDocument {
    pub fn render(&self, format: Format) -> Result<String, ReportError> {
        match format {
            Format::Json => json(self),
            Format::Csv => self.to_csv(),
            Format::Table => {
                let mut out = String::new();
                self.report.table(&mut out);
                Ok(out)
            }
        }
    }

    /// Per-module rows followed by a `total` row.
    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut out = String::new();
        self.metadata.csv_comments(&mut out);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(BREAKDOWN_HEADER)?;
        w.write_record(BREAKDOWN_UNITS)?;
        let r = &self.report;
        for row in &r.rows {
            w.write_record([
                r.scenario.clone(),
                row.module.clone(),
                row.category.as_str().to_string(),
                row.resource.clone(),
                row.placement.clone(),
                row.energy_per_frame.to_string(),
                row.fps.to_string(),
                row.avg_power.to_string(),
                row.share.to_string(),
                opt(row.normalized_power),
            ])?;
        }
        w.write_record([
            r.scenario.clone(),
            "total".into(),
            "total".into(),
            String::new(),
            String::new(),
            r.total_energy_per_frame.to_string(),
            String::new(),
            r.total_avg_power.to_string(),
            "1".into(),
            opt(r.normalized_total),
        ])?;
        out.push_str(&finish(w)?);
        Ok(out)
    }

    /// Parse the module rows back out of [`ReportDocument::to_csv`] output.
    pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>, ReportError> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if i == 0 || &rec[1] == "total" {
                continue;
            }
            let category = Category::parse(&rec[2])
                .ok_or_else(|| ReportError::Malformed { line, message: format!("unknown category {:?}", &rec[2]) })?;
            let num = |k: usize| -> Result<f64, ReportError> {
                rec[k].parse().map_err(|_| ReportError::Malformed { line, message: format!("bad number {:?}", &rec[k]) })
            };
            rows.push(ReportRow {
                module: rec[1].to_string(),
                category,
                resource: rec[3].to_string(),
                placement: rec[4].to_string(),
                energy_per_frame: num(5)?,
                fps: num(6)?,
                avg_power: num(7)?,
                share: num(8)?,
                normalized_power: if rec[9].is_empty() { None } else { Some(num(9)?) },
            });
        }
        Ok(rows)
    }
}

/// Output of `partition`: every plan plus the winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub plans: Vec<PlanReport>,
    pub winner: Option<String>,
    pub metadata: Metadata,
}

impl PartitionReport {
    pub fn render(&self, format: Format) -> Result<String, ReportError> {
        match format {
            Format::Json => json(self),
            Format::Csv => self.to_csv(),
            Format::Table => Ok(self.to_table()),
        }
    }

    /// One summary row per plan.
    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut out = String::new();
        self.metadata.csv_comments(&mut out);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["plan", "description", "feasible", "total_energy_per_frame", "total_avg_power", "normalized_power"];
        let cat_cols: Vec<String> = Category::ALL.iter().map(|c| format!("{}_power", c.as_str())).collect();
        header.extend(cat_cols.iter().map(String::as_str));
        header.extend(["winner", "reason"]);
        w.write_record(&header)?;
        let mut units = vec!["unit", "", "", "J", "W", "1"];
        units.extend(Category::ALL.iter().map(|_| "W"));
        units.extend(["", ""]);
        w.write_record(&units)?;
        for p in &self.plans {
            let mut rec = vec![
                p.scenario.clone(),
                p.description.clone(),
                p.feasible.to_string(),
                if p.feasible { p.total_energy_per_frame.to_string() } else { String::new() },
                if p.feasible { p.total_avg_power.to_string() } else { String::new() },
                opt(p.normalized_total),
            ];
            for c in Category::ALL {
                let v = p.categories.iter().find(|r| r.category == c).map(|r| r.avg_power);
                rec.push(opt(v));
            }
            rec.push((self.winner.as_deref() == Some(p.scenario.as_str())).to_string());
            rec.push(p.infeasibility_reason.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        out.push_str(&finish(w)?);
        Ok(out)
    }

    fn to_table(&self) -> String {
        let mut out = String::new();
        let mut t = TextTable::new(&["plan", "description", "power", "normalized", "status"]);
        for p in &self.plans {
            let status = if self.winner.as_deref() == Some(p.scenario.as_str()) {
                "winner".to_string()
            } else if let Some(r) = &p.infeasibility_reason {
                format!("infeasible: {r}")
            } else {
                String::new()
            };
            t.row(vec![
                p.scenario.clone(),
                p.description.clone(),
                if p.feasible { eng(p.total_avg_power, "W") } else { "-".into() },
                p.normalized_total.map(|v| format!("{v:.4}")).unwrap_or_default(),
                status,
            ]);
        }
        t.render(&mut out);
        out.push('\n');
        for p in self.plans.iter().filter(|p| p.feasible) {
            p.table(&mut out);
            out.push('\n');
        }
        match &self.winner {
            Some(w) => {
                let _ = writeln!(out, "winner: {w}");
            }
            None => out.push_str("winner: none (no feasible plan)\n"),
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RooflineRow {
    pub layer: String,
    pub kind: LayerKind,
    /// MACs per weight byte; absent when the layer reads no weights.
    pub arithmetic_intensity: Option<f64>,
    pub attainable_mac_per_cycle: f64,
    pub achieved_mac_per_cycle: f64,
    pub source: CostSource,
}

/// Output of `roofline`: one row per layer on one processor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RooflineReport {
    pub processor: String,
    pub peak_mac_per_cycle: f64,
    pub weight_stream_bandwidth: f64,
    pub rows: Vec<RooflineRow>,
    pub metadata: Metadata,
}

impl RooflineReport {
    pub fn build(proc: &ProcessorSpec, workload: &WorkloadSpec, trace: &Trace, metadata: Metadata) -> Result<Self, LayerError> {
        let rows = workload
            .layers()
            .map(|l| {
                cost_layer_traced(proc, l, trace).map(|c| RooflineRow {
                    layer: c.layer,
                    kind: l.kind,
                    arithmetic_intensity: c.arithmetic_intensity,
                    attainable_mac_per_cycle: c.attainable,
                    achieved_mac_per_cycle: c.throughput,
                    source: c.source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            processor: proc.name.clone(),
            peak_mac_per_cycle: proc.peak_macs_per_cycle,
            weight_stream_bandwidth: proc.weight_stream_bandwidth,
            rows,
            metadata,
        })
    }

    pub fn render(&self, format: Format) -> Result<String, ReportError> {
        match format {
            Format::Json => json(self),
            Format::Csv => self.to_csv(),
            Format::Table => {
                let mut out = String::new();
                let _ = writeln!(
                    out,
                    "processor {} (peak {} MAC/cycle, {} B/cycle)",
                    self.processor, self.peak_mac_per_cycle, self.weight_stream_bandwidth
                );
                let mut t = TextTable::new(&["layer", "kind", "MAC/B", "attainable", "achieved", "source"]);
                for r in &self.rows {
                    t.row(vec![
                        r.layer.clone(),
                        kind_str(r.kind).into(),
                        r.arithmetic_intensity.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
                        format!("{:.3}", r.attainable_mac_per_cycle),
                        format!("{:.3}", r.achieved_mac_per_cycle),
                        source_str(r.source).into(),
                    ]);
                }
                t.render(&mut out);
                Ok(out)
            }
        }
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut out = String::new();
        self.metadata.csv_comments(&mut out);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["layer", "kind", "arithmetic_intensity", "attainable_mac_per_cycle", "achieved_mac_per_cycle", "source"])?;
        w.write_record(["unit", "", "MAC/B", "MAC/cycle", "MAC/cycle", ""])?;
        for r in &self.rows {
            w.write_record([
                r.layer.clone(),
                kind_str(r.kind).into(),
                opt(r.arithmetic_intensity),
                r.attainable_mac_per_cycle.to_string(),
                r.achieved_mac_per_cycle.to_string(),
                source_str(r.source).into(),
            ])?;
        }
        out.push_str(&finish(w)?);
        Ok(out)
    }
}

/// Output of `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    #[serde(flatten)]
    pub table: SweepTable,
    pub unit: String,
    pub crossovers: Vec<Crossover>,
    pub metadata: Metadata,
}

impl SweepReport {
    pub fn new(table: SweepTable, dimension: Dimension, metadata: Metadata) -> Self {
        let crossovers = table.crossovers();
        Self { table, unit: dimension.base_unit().to_string(), crossovers, metadata }
    }

    pub fn render(&self, format: Format) -> Result<String, ReportError> {
        match format {
            Format::Json => json(self),
            Format::Csv => self.to_csv(),
            Format::Table => {
                let mut out = String::new();
                let mut header = vec![format!("{} [{}]", self.table.param, self.unit)];
                header.extend(self.table.plan_ids.iter().cloned());
                header.push("winner".into());
                let refs: Vec<&str> = header.iter().map(String::as_str).collect();
                let mut t = TextTable::new(&refs);
                for r in &self.table.rows {
                    let mut cells = vec![r.value.to_string()];
                    cells.extend(r.powers.iter().map(|p| p.map(|v| eng(v, "W")).unwrap_or_else(|| "infeasible".into())));
                    cells.push(r.winner.clone().unwrap_or_else(|| "-".into()));
                    t.row(cells);
                }
                t.render(&mut out);
                for c in &self.crossovers {
                    let _ = writeln!(out, "{}", crossover_line(c));
                }
                Ok(out)
            }
        }
    }

    /// One row per value; infeasible plans leave an empty cell. Crossovers
    /// follow as trailing comment lines.
    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut out = String::new();
        self.metadata.csv_comments(&mut out);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![self.table.param.clone()];
        header.extend(self.table.plan_ids.iter().map(|p| format!("{p}_power")));
        header.push("winner".into());
        w.write_record(&header)?;
        let mut units = vec![self.unit.clone()];
        units.extend(self.table.plan_ids.iter().map(|_| "W".to_string()));
        units.push(String::new());
        w.write_record(&units)?;
        for r in &self.table.rows {
            let mut rec = vec![r.value.to_string()];
            rec.extend(r.powers.iter().map(|p| opt(*p)));
            rec.push(r.winner.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        out.push_str(&finish(w)?);
        for c in &self.crossovers {
            let _ = writeln!(out, "# {}", crossover_line(c));
        }
        Ok(out)
    }
}

fn crossover_line(c: &Crossover) -> String {
    format!(
        "crossover between {} and {}: {} -> {}",
        c.after_value,
        c.before_value,
        c.from_plan.as_deref().unwrap_or("none"),
        c.to_plan.as_deref().unwrap_or("none")
    )
}

fn json<T: Serialize>(v: &T) -> Result<String, ReportError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, ReportError> {
    let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn kind_str(k: LayerKind) -> &'static str {
    match k {
        LayerKind::Conv => "conv",
        LayerKind::Depthwise => "depthwise",
        LayerKind::Pointwise => "pointwise",
        LayerKind::Dense => "dense",
    }
}

fn source_str(s: CostSource) -> &'static str {
    match s {
        CostSource::Estimate => "estimate",
        CostSource::Trace => "trace",
    }
}

/// Engineering notation with four significant digits, e.g. `138.7 uJ`.
pub fn eng(v: f64, unit: &str) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v} {unit}");
    }
    const PREFIXES: [(f64, &str); 9] = [
        (1e9, "G"),
        (1e6, "M"),
        (1e3, "k"),
        (1.0, ""),
        (1e-3, "m"),
        (1e-6, "u"),
        (1e-9, "n"),
        (1e-12, "p"),
        (1e-15, "f"),
    ];
    let a = v.abs();
    let (scale, p) = PREFIXES.iter().find(|(s, _)| a >= *s * (1.0 - 1e-12)).copied().unwrap_or((1e-15, "f"));
    let x = v / scale;
    let digits = if x.abs() >= 100.0 {
        1
    } else if x.abs() >= 10.0 {
        2
    } else {
        3
    };
    format!("{x:.digits$} {p}{unit}")
}

fn percent(v: f64) -> String {
    format!("{:.2}%", v * 100.0)
}

fn trim_float(v: f64) -> String {
    v.to_string()
}

/// Left-aligned text columns separated by two spaces.
struct TextTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl TextTable {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn render(&self, out: &mut String) {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String], out: &mut String| {
            let mut s = String::new();
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                let _ = write!(s, "{c:<w$}");
            }
            out.push_str(s.trim_end());
            out.push('\n');
        };
        line(&self.header, out);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        line(&rule, out);
        for r in &self.rows {
            line(r, out);
        }
    }
}
