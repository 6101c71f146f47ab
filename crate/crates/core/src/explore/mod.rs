//! Partition plans: enumeration, evaluation and the minimum-power search.
//!
//! A plan cuts the stage pipeline once. Stages before the cut run on every
//! camera's on-sensor processor; the rest run on the aggregator. Cut 0 is the
//! centralized system, where raw frames cross the sensor uplink and the
//! on-sensor processors are absent.

mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{
    aggregate, camera_energy, comm_energy, compute_energy, frame_timing, leakage_terms, memory_access_energy,
    processing_time, Category, ModuleEnergy, Placement, PowerBreakdown, TrafficCounts,
};
use crate::layer::{cost_layer_traced, Trace};
use crate::par::{map_ordered, Execution};
use crate::system::{MemoryLevel, ProcessorSpec, Stage, SystemSpec, WorkloadSpec};

pub use sweep::{param_dimension, sweep, Crossover, ParamPath, SweepError, SweepRow, SweepTable};

pub const CENTRALIZED: &str = "centralized";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StagePlacement {
    OnSensor,
    Aggregator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAssignment {
    pub stage: String,
    pub placement: StagePlacement,
    pub fps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferKind {
    RawFrame,
    Boundary,
    Output,
}

impl TransferKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransferKind::RawFrame => "raw-frame",
            TransferKind::Boundary => "boundary",
            TransferKind::Output => "output",
        }
    }
}

/// One scheduled per-camera transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transfer {
    pub camera: String,
    pub link: String,
    pub kind: TransferKind,
    pub bytes: f64,
    pub fps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub id: String,
    /// Number of leading stages placed on-sensor.
    pub cut: usize,
    pub assignment: Vec<StageAssignment>,
    pub transfers: Vec<Transfer>,
    /// Sensor pipelines running the on-sensor stages.
    pub replication: usize,
}

impl PartitionPlan {
    pub fn on_sensor_stages(&self) -> usize {
        self.cut
    }

    pub fn describe(&self) -> String {
        let on: Vec<&str> = self
            .assignment
            .iter()
            .filter(|a| a.placement == StagePlacement::OnSensor)
            .map(|a| a.stage.as_str())
            .collect();
        if on.is_empty() {
            "all stages on aggregator".to_string()
        } else if on.len() == self.assignment.len() {
            "all stages on-sensor".to_string()
        } else {
            format!("{} on-sensor", on.join("+"))
        }
    }
}

pub fn plan_id(cut: usize) -> String {
    if cut == 0 {
        CENTRALIZED.to_string()
    } else {
        format!("cut-{cut}")
    }
}

/// Per-processor-instance busy time, reported alongside power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessorLoad {
    pub instance: String,
    /// Frame rate the leakage bookkeeping runs at.
    pub reference_fps: f64,
    /// Busy time per reference frame.
    pub processing_time: f64,
    pub busy_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEvaluation {
    pub plan: PartitionPlan,
    pub breakdown: PowerBreakdown,
    pub feasible: bool,
    pub infeasibility_reason: Option<String>,
    pub loads: Vec<ProcessorLoad>,
}

impl PlanEvaluation {
    pub fn total_power(&self) -> Option<f64> {
        self.feasible.then_some(self.breakdown.total_avg_power)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExploreError {
    #[error("no feasible plan: {}", .0.join("; "))]
    NoFeasiblePlan(Vec<String>),
    #[error("unknown plan {0:?}")]
    UnknownPlan(String),
}

/// One plan per cut point, from centralized (cut 0) to fully on-sensor.
pub fn enumerate_plans(workload: &WorkloadSpec, system: &SystemSpec) -> Vec<PartitionPlan> {
    let n = workload.stages.len();
    (0..=n).map(|cut| build_plan(cut, workload, system)).collect()
}

fn build_plan(cut: usize, workload: &WorkloadSpec, system: &SystemSpec) -> PartitionPlan {
    let n = workload.stages.len();
    let assignment = workload
        .stages
        .iter()
        .zip(&workload.stage_fps)
        .enumerate()
        .map(|(i, (s, fps))| StageAssignment {
            stage: s.name.clone(),
            placement: if i < cut { StagePlacement::OnSensor } else { StagePlacement::Aggregator },
            fps: *fps,
        })
        .collect();

    let mut transfers = Vec::new();
    for cam in &system.cameras {
        let Some(route) = system.route(cam) else { continue };
        if cut == 0 {
            transfers.push(Transfer {
                camera: cam.name.clone(),
                link: route.uplink.name.clone(),
                kind: TransferKind::RawFrame,
                bytes: cam.frame_bytes,
                fps: cam.fps,
            });
            continue;
        }
        transfers.push(Transfer {
            camera: cam.name.clone(),
            link: route.readout_link.name.clone(),
            kind: TransferKind::RawFrame,
            bytes: cam.frame_bytes,
            fps: cam.fps,
        });
        // Payloads ship at the rate of the stage that consumes them.
        let (kind, bytes, fps) = if cut < n {
            (TransferKind::Boundary, workload.boundary_bytes[cut - 1], workload.stage_fps[cut])
        } else {
            (TransferKind::Output, workload.stages[n - 1].output_bytes(), workload.stage_fps[n - 1])
        };
        transfers.push(Transfer { camera: cam.name.clone(), link: route.uplink.name.clone(), kind, bytes, fps });
    }

    PartitionPlan { id: plan_id(cut), cut, assignment, transfers, replication: if cut > 0 { system.cameras.len() } else { 0 } }
}

struct StageRun<'a> {
    stage: &'a Stage,
    fps: f64,
    /// Inferences per frame on this processor instance.
    count: f64,
}

struct Infeasible(String);

/// Evaluates plans against one system/workload/trace combination.
#[derive(Debug, Clone, Copy)]
pub struct Explorer<'a> {
    pub system: &'a SystemSpec,
    pub workload: &'a WorkloadSpec,
    pub trace: &'a Trace,
    pub execution: Execution,
}

static EMPTY_TRACE: Trace = Trace::empty();

impl<'a> Explorer<'a> {
    pub fn new(system: &'a SystemSpec, workload: &'a WorkloadSpec) -> Self {
        Self { system, workload, trace: &EMPTY_TRACE, execution: Execution::default() }
    }

    pub fn with_trace(self, trace: &'a Trace) -> Self {
        Self { trace, ..self }
    }

    pub fn with_execution(self, execution: Execution) -> Self {
        Self { execution, ..self }
    }

    pub fn plans(&self) -> Vec<PartitionPlan> {
        enumerate_plans(self.workload, self.system)
    }

    /// Resolve a plan selector: `centralized`, `cut-<k>`, or a stage name
    /// (cut right after that stage).
    pub fn plan(&self, selector: &str) -> Result<PartitionPlan, ExploreError> {
        let n = self.workload.stages.len();
        let cut = if selector == CENTRALIZED {
            Some(0)
        } else if let Some(k) = selector.strip_prefix("cut-") {
            k.parse::<usize>().ok().filter(|k| *k <= n)
        } else {
            self.workload.stage_index(selector).map(|i| i + 1)
        };
        cut.map(|c| build_plan(c, self.workload, self.system))
            .ok_or_else(|| ExploreError::UnknownPlan(selector.to_string()))
    }

    pub fn evaluate(&self, plan: &PartitionPlan) -> PlanEvaluation {
        match self.evaluate_inner(plan) {
            Ok((modules, loads)) => PlanEvaluation {
                plan: plan.clone(),
                breakdown: aggregate(modules),
                feasible: true,
                infeasibility_reason: None,
                loads,
            },
            Err(Infeasible(reason)) => PlanEvaluation {
                plan: plan.clone(),
                breakdown: aggregate(Vec::new()),
                feasible: false,
                infeasibility_reason: Some(reason),
                loads: Vec::new(),
            },
        }
    }

    /// Evaluate every enumerated plan; output order follows the cut index.
    pub fn evaluate_all(&self) -> Vec<PlanEvaluation> {
        let plans = self.plans();
        map_ordered(&plans, self.execution, |p| self.evaluate(p))
    }

    pub fn optimize(&self) -> Result<PlanEvaluation, ExploreError> {
        let evals = self.evaluate_all();
        match select_winner(&evals) {
            Some(i) => Ok(evals.into_iter().nth(i).expect("winner index in range")),
            None => Err(ExploreError::NoFeasiblePlan(
                evals
                    .into_iter()
                    .map(|e| format!("{}: {}", e.plan.id, e.infeasibility_reason.unwrap_or_default()))
                    .collect(),
            )),
        }
    }

    fn evaluate_inner(&self, plan: &PartitionPlan) -> Result<(Vec<ModuleEnergy>, Vec<ProcessorLoad>), Infeasible> {
        let sys = self.system;
        let w = self.workload;
        let n = w.stages.len();
        let cut = plan.cut;
        if cut > n {
            return Err(Infeasible(format!("cut {cut} is beyond the {n}-stage pipeline")));
        }
        let mut modules = Vec::new();
        let mut loads = Vec::new();

        let mut routes = Vec::with_capacity(sys.cameras.len());
        for cam in &sys.cameras {
            let route = sys
                .route(cam)
                .ok_or_else(|| Infeasible(format!("camera {:?} has no route to the aggregator", cam.name)))?;
            let readout = if cut == 0 { route.uplink } else { route.readout_link };
            let timing = frame_timing(cam, cam.frame_bytes, readout)
                .map_err(|e| Infeasible(format!("camera {:?} over {:?}: {e}", cam.name, readout.name)))?;
            modules.push(ModuleEnergy {
                module_id: format!("camera/{}", cam.name),
                category: Category::Camera,
                resource: cam.name.clone(),
                placement: Placement::Sensor,
                energy_per_frame: camera_energy(cam, &timing),
                fps: cam.fps,
            });
            routes.push(route);
        }

        for t in &plan.transfers {
            let link = sys
                .link(&t.link)
                .ok_or_else(|| Infeasible(format!("unknown link {:?}", t.link)))?;
            modules.push(ModuleEnergy {
                module_id: format!("link/{}/{}/{}", link.name, t.camera, t.kind.as_str()),
                category: Category::Comm,
                resource: link.name.clone(),
                placement: Placement::Link,
                energy_per_frame: comm_energy(link, t.bytes),
                fps: t.fps,
            });
        }

        let max_camera_fps = sys.cameras.iter().map(|c| c.fps).fold(0.0, f64::max);

        if cut > 0 {
            for route in &routes {
                let cam = route.camera;
                for (i, fps) in w.stage_fps[..cut].iter().enumerate() {
                    if *fps > cam.fps {
                        return Err(Infeasible(format!(
                            "stage {:?} at {fps} fps outpaces camera {:?} at {} fps",
                            w.stages[i].name, cam.name, cam.fps
                        )));
                    }
                }
                let runs: Vec<StageRun> = w.stages[..cut]
                    .iter()
                    .zip(&w.stage_fps)
                    .map(|(stage, fps)| StageRun { stage, fps: *fps, count: 1.0 })
                    .collect();
                let instance = format!("{}@{}", route.on_sensor.name, cam.name);
                self.evaluate_processor(route.on_sensor, &instance, Placement::Sensor, &runs, cam.fps, &mut modules, &mut loads)?;
            }
        }

        let streams = sys.cameras.len() as f64 * w.aggregator_inferences_per_camera;
        for (i, fps) in w.stage_fps.iter().enumerate().skip(cut) {
            if *fps > max_camera_fps {
                return Err(Infeasible(format!(
                    "stage {:?} at {fps} fps outpaces the cameras ({max_camera_fps} fps)",
                    w.stages[i].name
                )));
            }
        }
        let runs: Vec<StageRun> = w.stages[cut..]
            .iter()
            .zip(&w.stage_fps[cut..])
            .map(|(stage, fps)| StageRun { stage, fps: *fps, count: streams })
            .collect();
        let agg = sys.aggregator();
        self.evaluate_processor(agg, &agg.name, Placement::Aggregator, &runs, max_camera_fps, &mut modules, &mut loads)?;

        Ok((modules, loads))
    }

    #[allow(clippy::too_many_arguments)]
    fn evaluate_processor(
        &self,
        proc: &ProcessorSpec,
        instance: &str,
        placement: Placement,
        runs: &[StageRun<'_>],
        idle_fps: f64,
        modules: &mut Vec<ModuleEnergy>,
        loads: &mut Vec<ProcessorLoad>,
    ) -> Result<(), Infeasible> {
        let sys = self.system;
        let weight_mem = sys
            .processor_memory(proc, MemoryLevel::L2Weight)
            .ok_or_else(|| Infeasible(format!("processor {:?} has no L2-weight memory", proc.name)))?;
        let weights: f64 = runs.iter().map(|r| r.stage.weight_bytes()).sum();
        if weights > weight_mem.capacity {
            return Err(Infeasible(format!(
                "weight capacity: {instance} needs {weights} B of weights, L2-weight {:?} holds {} B",
                weight_mem.name, weight_mem.capacity
            )));
        }

        let mut busy_per_second = 0.0;
        for run in runs {
            let costs = run
                .stage
                .layers
                .iter()
                .map(|l| cost_layer_traced(proc, l, self.trace))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Infeasible(format!("{instance}: {e}")))?;
            let t_stage = processing_time(&costs, proc.f_clk).map_err(|e| Infeasible(format!("{instance}: {e}")))?;
            busy_per_second += t_stage * run.count * run.fps;

            let macs: f64 = costs.iter().map(|c| c.macs as f64).sum();
            modules.push(ModuleEnergy {
                module_id: format!("{instance}/compute/{}", run.stage.name),
                category: Category::Compute,
                resource: proc.name.clone(),
                placement,
                energy_per_frame: compute_energy(proc, macs * run.count),
                fps: run.fps,
            });
            let traffic: TrafficCounts = costs.iter().map(|c| c.traffic).sum::<TrafficCounts>().scaled(run.count);
            for mem in sys.processor_memories(proc) {
                modules.push(ModuleEnergy {
                    module_id: format!("{instance}/{}/access/{}", mem.name, run.stage.name),
                    category: Category::MemoryAccess,
                    resource: mem.name.clone(),
                    placement,
                    energy_per_frame: memory_access_energy(mem, &traffic),
                    fps: run.fps,
                });
            }
        }

        // Leakage is booked per frame of the fastest stage on this processor.
        let reference_fps = runs.iter().map(|r| r.fps).fold(0.0, f64::max);
        let reference_fps = if reference_fps > 0.0 { reference_fps } else { idle_fps };
        let t_processing = busy_per_second / reference_fps;
        for mem in sys.processor_memories(proc) {
            let terms = leakage_terms(mem, t_processing, reference_fps)
                .map_err(|e| Infeasible(format!("{instance}/{}: {e}", mem.name)))?;
            for (suffix, energy) in [("leak-on", terms.on), ("leak-idle", terms.idle)] {
                modules.push(ModuleEnergy {
                    module_id: format!("{instance}/{}/{suffix}", mem.name),
                    category: Category::MemoryLeakage,
                    resource: mem.name.clone(),
                    placement,
                    energy_per_frame: energy,
                    fps: reference_fps,
                });
            }
        }
        loads.push(ProcessorLoad {
            instance: instance.to_string(),
            reference_fps,
            processing_time: t_processing,
            busy_fraction: busy_per_second,
        });
        Ok(())
    }
}

/// Index of the feasible evaluation with minimum power. Ties go to fewer
/// on-sensor stages, then to the lexicographically smaller plan id.
pub fn select_winner(evals: &[PlanEvaluation]) -> Option<usize> {
    evals
        .iter()
        .enumerate()
        .filter(|(_, e)| e.feasible)
        .min_by(|(_, a), (_, b)| {
            a.breakdown
                .total_avg_power
                .total_cmp(&b.breakdown.total_avg_power)
                .then(a.plan.cut.cmp(&b.plan.cut))
                .then_with(|| a.plan.id.cmp(&b.plan.id))
        })
        .map(|(i, _)| i)
}

pub fn evaluate_plan(plan: &PartitionPlan, system: &SystemSpec, workload: &WorkloadSpec) -> PlanEvaluation {
    Explorer::new(system, workload).evaluate(plan)
}

pub fn optimize(workload: &WorkloadSpec, system: &SystemSpec) -> Result<PlanEvaluation, ExploreError> {
    Explorer::new(system, workload).optimize()
}

#[cfg(test)]
mod tests;
