use super::*;
use crate::fixtures;
use crate::layer::ingest_trace;
use crate::system::{load_system_config, load_workload_config, LayerKind, LayerSpec};

fn ht() -> (SystemSpec, WorkloadSpec) {
    (load_system_config(fixtures::HT_SYSTEM).unwrap(), load_workload_config(fixtures::HT_WORKLOAD).unwrap())
}

fn mipi_power(e: &PlanEvaluation) -> f64 {
    e.breakdown.power_where(|m| m.category == Category::Comm && m.resource == "mipi")
}

fn dense(name: &str, c_in: u64, c_out: u64) -> LayerSpec {
    LayerSpec {
        name: name.into(),
        kind: LayerKind::Dense,
        kernel_h: 1,
        kernel_w: 1,
        c_in,
        c_out,
        out_h: 1,
        out_w: 1,
        weight_bytes: (c_in * c_out) as f64,
        in_activation_bytes: c_in as f64,
        out_activation_bytes: c_out as f64,
    }
}

fn chain(n: usize) -> WorkloadSpec {
    WorkloadSpec {
        stages: (0..n)
            .map(|i| Stage { name: format!("s{i}"), layers: vec![dense(&format!("l{i}"), 64, 64)] })
            .collect(),
        boundary_bytes: vec![64.0; n.saturating_sub(1)],
        stage_fps: vec![10.0; n],
        aggregator_inferences_per_camera: 1.0,
    }
}

#[test]
fn plan_count_is_stages_plus_one() {
    let (sys, w) = ht();
    let plans = enumerate_plans(&w, &sys);
    let ids: Vec<&str> = plans.iter().map(|p| p.id.as_str()).collect();
    assert_eq!(ids, ["centralized", "cut-1", "cut-2"]);
    assert_eq!(plans[1].describe(), "DetNet on-sensor");

    let single = load_workload_config(fixtures::ROOFLINE_WORKLOAD).unwrap();
    assert_eq!(enumerate_plans(&single, &sys).len(), 2);
    for n in 1..=8 {
        assert_eq!(enumerate_plans(&chain(n), &sys).len(), n + 1);
    }
}

#[test]
fn plans_keep_single_cut() {
    let (sys, _) = ht();
    for p in enumerate_plans(&chain(5), &sys) {
        let first_agg = p.assignment.iter().position(|a| a.placement == StagePlacement::Aggregator);
        if let Some(i) = first_agg {
            assert!(p.assignment[i..].iter().all(|a| a.placement == StagePlacement::Aggregator));
        }
        assert_eq!(p.on_sensor_stages(), first_agg.unwrap_or(5));
    }
}

#[test]
fn centralized_dominated_by_cameras_and_mipi() {
    let sys = load_system_config(fixtures::TABLE1_TABLE2).unwrap();
    let (_, w) = ht();
    let ex = Explorer::new(&sys, &w);
    let e = ex.evaluate(&ex.plan("centralized").unwrap());
    assert!(e.feasible);
    let share = |c: Category| e.breakdown.shares[&c];
    let cam_mipi = share(Category::Camera) + mipi_power(&e) / e.breakdown.total_avg_power;
    assert!(cam_mipi > 0.5, "camera+MIPI share {cam_mipi}");
    for c in [Category::Compute, Category::MemoryAccess, Category::MemoryLeakage] {
        assert!(share(c) < share(Category::Camera));
    }
    // Raw frames ride the uplink.
    assert_eq!(e.plan.transfers.len(), 1);
    assert_eq!(e.plan.transfers[0].link, "mipi");
    assert_eq!(e.plan.transfers[0].kind, TransferKind::RawFrame);
}

#[test]
fn roi_shrinks_mipi_energy() {
    let (sys, w) = ht();
    let ex = Explorer::new(&sys, &w);
    let central = ex.evaluate(&ex.plan("centralized").unwrap());
    let det = ex.evaluate(&ex.plan("DetNet").unwrap());
    assert!(det.feasible);
    // 4 cameras x 307200 B x 100 pJ/B x 30 fps, against a quarter of that.
    let oracle_central = 4.0 * 307_200.0 * 100e-12 * 30.0;
    let oracle_det = 4.0 * 76_800.0 * 100e-12 * 30.0;
    assert!((mipi_power(&central) - oracle_central).abs() <= 1e-12 * oracle_central);
    assert!((mipi_power(&det) - oracle_det).abs() <= 1e-12 * oracle_det);
    assert!(mipi_power(&det) < mipi_power(&central));
}

#[test]
fn oversized_on_sensor_weights_are_infeasible() {
    let (sys, w) = ht();
    let ex = Explorer::new(&sys, &w);
    let full = ex.evaluate(&ex.plan("cut-2").unwrap());
    assert!(!full.feasible);
    assert!(full.infeasibility_reason.as_deref().unwrap().starts_with("weight capacity"));
    assert_eq!(full.total_power(), None);
}

#[test]
fn unknown_plan_selector() {
    let (sys, w) = ht();
    let ex = Explorer::new(&sys, &w);
    assert_eq!(ex.plan("cut-3"), Err(ExploreError::UnknownPlan("cut-3".into())));
    assert!(ex.plan("nope").is_err());
    assert_eq!(ex.plan("KeyNet").unwrap().cut, 2);
}

#[test]
fn detnet_on_sensor_wins_hand_tracking() {
    let (sys, w) = ht();
    let best = optimize(&w, &sys).unwrap();
    assert_eq!(best.plan.id, "cut-1");
    let all = Explorer::new(&sys, &w).evaluate_all();
    let brute = all
        .iter()
        .filter_map(|e| e.total_power())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(best.breakdown.total_avg_power, brute);
}

#[test]
fn free_mipi_makes_centralized_win() {
    let (mut sys, w) = ht();
    let mipi = sys.links.iter_mut().find(|l| l.name == "mipi").unwrap();
    mipi.energy_per_byte = 0.0;
    mipi.bandwidth = f64::INFINITY;
    sys.processors.iter_mut().find(|p| p.name == "os").unwrap().e_mac = 50e-12;
    let best = optimize(&w, &sys).unwrap();
    assert_eq!(best.plan.id, "centralized");
}

#[test]
fn no_feasible_plan() {
    let (mut sys, w) = ht();
    for c in &mut sys.cameras {
        c.fps = 1000.0;
    }
    match optimize(&w, &sys) {
        Err(ExploreError::NoFeasiblePlan(reasons)) => assert_eq!(reasons.len(), 3),
        other => panic!("expected NoFeasiblePlan, got {other:?}"),
    }
}

#[test]
fn ties_go_to_fewer_on_sensor_stages() {
    let (sys, w) = ht();
    let ex = Explorer::new(&sys, &w);
    let mut evals = ex.evaluate_all();
    evals.truncate(2);
    evals[0].breakdown.total_avg_power = 1.0;
    evals[1].breakdown.total_avg_power = 1.0;
    assert_eq!(select_winner(&evals), Some(0));
    evals.swap(0, 1);
    assert_eq!(select_winner(&evals), Some(1));
    evals[1].feasible = false;
    assert_eq!(select_winner(&evals), Some(0));
    evals[0].feasible = false;
    assert_eq!(select_winner(&evals), None);
}

#[test]
fn sweep_on_sensor_e_mac() {
    let (sys, mut w) = ht();
    // Full-frame ROI: only readout savings remain to pay for on-sensor compute.
    w.boundary_bytes[0] = 307_200.0;
    let values = [0.5e-12, 1e-12, 2e-12, 4e-12];
    let t = sweep("processors.os.e_mac", &values, &w, &sys).unwrap();
    assert_eq!(t.rows.len(), 4);
    let dist: Vec<f64> = t.rows.iter().map(|r| r.powers[1].unwrap()).collect();
    assert!(dist.windows(2).all(|p| p[0] < p[1]), "{dist:?}");
    let central: Vec<f64> = t.rows.iter().map(|r| r.powers[0].unwrap()).collect();
    assert!(central.windows(2).all(|p| p[0] == p[1]));
    let x = t.crossovers();
    assert_eq!(x.len(), 1);
    assert_eq!(x[0].from_plan.as_deref(), Some("cut-1"));
    assert_eq!(x[0].to_plan.as_deref(), Some("centralized"));
    assert_eq!((x[0].after_value, x[0].before_value), (2e-12, 4e-12));

    let again = sweep("processors.os.e_mac", &values, &w, &sys).unwrap();
    assert_eq!(t, again);
}

#[test]
fn sweep_empty_values() {
    let (sys, w) = ht();
    let t = sweep("processors.os.e_mac", &[], &w, &sys).unwrap();
    assert!(t.rows.is_empty());
    assert_eq!(t.plan_ids.len(), 3);
}

#[test]
fn sweep_boundary_bytes_is_linear_up_to_centralized() {
    let (sys, w) = ht();
    let frame = 307_200.0;
    let values: Vec<f64> = (0..=4).map(|i| frame * i as f64 / 4.0).collect();
    let ex = Explorer::new(&sys, &w);
    let central = mipi_power(&ex.evaluate(&ex.plan("centralized").unwrap()));
    let mut mipi = Vec::new();
    for v in &values {
        let mut w2 = w.clone();
        w2.boundary_bytes[0] = *v;
        let ex2 = Explorer::new(&sys, &w2);
        mipi.push(mipi_power(&ex2.evaluate(&ex2.plan("cut-1").unwrap())));
    }
    let step = mipi[1] - mipi[0];
    for pair in mipi.windows(2) {
        assert!((pair[1] - pair[0] - step).abs() <= 1e-12 * central);
    }
    assert_eq!(mipi[0], 0.0);
    assert!((mipi[4] - central).abs() <= 1e-12 * central);

    let t = sweep("workload.boundary_bytes.0", &values, &w, &sys).unwrap();
    assert_eq!(t.rows.len(), 5);
    assert!(t.rows.iter().all(|r| r.powers[1].is_some()));
}

#[test]
fn sweep_path_errors() {
    let (sys, w) = ht();
    assert!(matches!(sweep("processors.os.role", &[1.0], &w, &sys), Err(SweepError::NonNumeric(_))));
    assert!(matches!(sweep("processors.nope.e_mac", &[1.0], &w, &sys), Err(SweepError::UnknownPath(_))));
    assert!(matches!(sweep("cameras.*.bogus", &[1.0], &w, &sys), Err(SweepError::UnknownPath(_))));
    assert!(matches!(sweep("links.mipi.bandwidth", &[0.0], &w, &sys), Err(SweepError::InvalidValue { .. })));
}

#[test]
fn replication_is_linear() {
    let (sys4, mut w4) = ht();
    let mut sys8 = sys4.clone();
    for i in 4..8 {
        let mut cam = sys4.cameras[0].clone();
        cam.name = format!("cam{i}");
        let mut edge = sys4.topology.camera_edges[0].clone();
        edge.camera = cam.name.clone();
        sys8.cameras.push(cam);
        sys8.topology.camera_edges.push(edge);
    }
    // Keep the aggregator's input fixed while sensors double.
    w4.aggregator_inferences_per_camera = 2.0;
    let mut w8 = w4.clone();
    w8.aggregator_inferences_per_camera = 1.0;

    let e4 = Explorer::new(&sys4, &w4).evaluate(&Explorer::new(&sys4, &w4).plan("cut-1").unwrap());
    let e8 = Explorer::new(&sys8, &w8).evaluate(&Explorer::new(&sys8, &w8).plan("cut-1").unwrap());
    assert!(e4.feasible && e8.feasible);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-30);

    assert!(close(e8.breakdown.category_power(Category::Camera), 2.0 * e4.breakdown.category_power(Category::Camera)));
    let sensor = |e: &PlanEvaluation, c: Category| e.breakdown.power_where(|m| m.category == c && m.placement == Placement::Sensor);
    let agg = |e: &PlanEvaluation, c: Category| e.breakdown.power_where(|m| m.category == c && m.placement == Placement::Aggregator);
    for c in [Category::Compute, Category::MemoryAccess, Category::MemoryLeakage] {
        assert!(close(sensor(&e8, c), 2.0 * sensor(&e4, c)), "{c:?}");
        assert!(close(agg(&e8, c), agg(&e4, c)), "{c:?}");
    }
    let utsv = |e: &PlanEvaluation| e.breakdown.power_where(|m| m.resource == "utsv");
    assert!(close(utsv(&e8), 2.0 * utsv(&e4)));
    let share_sum: f64 = e8.breakdown.shares.values().sum();
    assert!((share_sum - 1.0).abs() < 1e-9);
}

#[test]
fn lower_stage_fps_lowers_stage_power_only() {
    let (sys, w) = ht();
    let mut slow = w.clone();
    slow.stage_fps[0] = 5.0;
    let plan = |w: &WorkloadSpec| {
        let ex = Explorer::new(&sys, w);
        ex.evaluate(&ex.plan("cut-1").unwrap())
    };
    let (fast, slow) = (plan(&w), plan(&slow));
    let on_detnet = |m: &ModuleEnergy| {
        m.placement == Placement::Sensor
            && matches!(m.category, Category::Compute | Category::MemoryAccess)
            && m.module_id.ends_with("/DetNet")
    };
    assert!(slow.breakdown.power_where(on_detnet) < fast.breakdown.power_where(on_detnet));
    assert_eq!(slow.breakdown.energy_where(on_detnet), fast.breakdown.energy_where(on_detnet));
}

#[test]
fn stage_faster_than_camera_is_infeasible() {
    let (sys, mut w) = ht();
    w.stage_fps[0] = 60.0;
    let e = evaluate_plan(&Explorer::new(&sys, &w).plan("cut-1").unwrap(), &sys, &w);
    assert!(!e.feasible);
    assert!(e.infeasibility_reason.unwrap().contains("outpaces"));
}

#[test]
fn pricier_mipi_never_hurts_less() {
    let (sys, w) = ht();
    let mut prev_powers: Option<Vec<Option<f64>>> = None;
    let mut prev_mipi_bytes = f64::INFINITY;
    for pj in [0.0, 10.0, 50.0, 100.0, 200.0, 400.0] {
        let mut s = sys.clone();
        s.links.iter_mut().find(|l| l.name == "mipi").unwrap().energy_per_byte = pj * 1e-12;
        let ex = Explorer::new(&s, &w);
        let evals = ex.evaluate_all();
        let powers: Vec<Option<f64>> = evals.iter().map(|e| e.total_power()).collect();
        if let Some(prev) = &prev_powers {
            for (a, b) in prev.iter().zip(&powers) {
                if let (Some(a), Some(b)) = (a, b) {
                    assert!(b >= a);
                }
            }
        }
        let best = ex.optimize().unwrap();
        let bytes: f64 = best.plan.transfers.iter().filter(|t| t.link == "mipi").map(|t| t.bytes * t.fps).sum();
        assert!(bytes <= prev_mipi_bytes);
        prev_mipi_bytes = bytes;
        prev_powers = Some(powers);
    }
}

#[test]
fn trace_overrides_estimate() {
    let (sys, w) = ht();
    let trace = ingest_trace(fixtures::HT_TRACE, &w).unwrap();
    let plain = Explorer::new(&sys, &w).evaluate_all();
    let traced = Explorer::new(&sys, &w).with_trace(&trace).evaluate_all();
    let load = |e: &PlanEvaluation| e.loads.iter().find(|l| l.instance == "agg").unwrap().processing_time;
    assert_ne!(load(&plain[0]), load(&traced[0]));
}

#[test]
fn parallel_and_sequential_agree() {
    let (sys, w) = ht();
    let seq = Explorer::new(&sys, &w).with_execution(Execution::Sequential).evaluate_all();
    let par = Explorer::new(&sys, &w).with_execution(Execution::Parallel).evaluate_all();
    assert_eq!(seq, par);
}
