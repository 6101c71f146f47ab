use std::collections::HashSet;

use super::{ConfigError, LayerKind, MemoryLevel, ProcessorRole, SystemSpec, WorkloadSpec};

#[derive(Default)]
struct Checker {
    errors: Vec<ConfigError>,
}

impl Checker {
    fn fail(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(ConfigError::new(path, message));
    }

    /// Returns whether the check passed. NaN fails every check.
    fn non_negative(&mut self, path: &str, field: &str, v: f64) -> bool {
        let ok = v >= 0.0;
        if !ok {
            self.fail(format!("{path}.{field}"), format!("{field} must be non-negative"));
        }
        ok
    }

    fn positive(&mut self, path: &str, field: &str, v: f64) -> bool {
        let ok = v > 0.0;
        if !ok {
            self.fail(format!("{path}.{field}"), format!("{field} must be positive"));
        }
        ok
    }

    fn unique<'a>(&mut self, section: &str, names: impl Iterator<Item = &'a str>) {
        let mut seen = HashSet::new();
        for (i, n) in names.enumerate() {
            if !seen.insert(n) {
                self.fail(format!("{section}[{i}].name"), format!("duplicate identifier {n:?}"));
            }
        }
    }
}

/// Check every structural and numeric invariant of a system. Relational
/// checks (e.g. `p_off <= p_read`) only run when their operands are valid on
/// their own, so a single bad value yields a single error.
pub fn validate_system(sys: &SystemSpec) -> Vec<ConfigError> {
    let mut c = Checker::default();

    if sys.cameras.is_empty() {
        c.fail("cameras", "at least one camera is required");
    }
    c.unique("cameras", sys.cameras.iter().map(|x| x.name.as_str()));
    c.unique("links", sys.links.iter().map(|x| x.name.as_str()));
    c.unique("processors", sys.processors.iter().map(|x| x.name.as_str()));
    c.unique("memories", sys.memories.iter().map(|x| x.name.as_str()));

    for (i, cam) in sys.cameras.iter().enumerate() {
        let p = format!("cameras[{i}]");
        c.non_negative(&p, "p_sense", cam.p_sense);
        let read_ok = c.non_negative(&p, "p_read", cam.p_read);
        let off_ok = c.non_negative(&p, "p_off", cam.p_off);
        if read_ok && off_ok && cam.p_off > cam.p_read {
            c.fail(format!("{p}.p_off"), "p_off must not exceed p_read");
        }
        let ex_ok = c.non_negative(&p, "t_exposure", cam.t_exposure);
        let adc_ok = c.non_negative(&p, "t_adc", cam.t_adc);
        if ex_ok && adc_ok && cam.t_exposure + cam.t_adc <= 0.0 {
            c.fail(format!("{p}.t_exposure"), "t_exposure + t_adc must be positive");
        }
        c.positive(&p, "fps", cam.fps);
        c.positive(&p, "frame_bytes", cam.frame_bytes);
        if sys.link(&cam.readout_link).is_none() {
            c.fail(format!("{p}.readout_link"), format!("unknown link {:?}", cam.readout_link));
        }
    }

    for (i, l) in sys.links.iter().enumerate() {
        let p = format!("links[{i}]");
        c.non_negative(&p, "energy_per_byte", l.energy_per_byte);
        c.positive(&p, "bandwidth", l.bandwidth);
    }

    let aggregators = sys
        .processors
        .iter()
        .filter(|p| p.role == ProcessorRole::Aggregator)
        .count();
    if aggregators != 1 {
        c.fail("processors", format!("exactly one aggregator processor is required, found {aggregators}"));
    }

    for (i, pr) in sys.processors.iter().enumerate() {
        let p = format!("processors[{i}]");
        c.non_negative(&p, "e_mac", pr.e_mac);
        c.positive(&p, "peak_macs_per_cycle", pr.peak_macs_per_cycle);
        c.positive(&p, "f_clk", pr.f_clk);
        c.positive(&p, "weight_stream_bandwidth", pr.weight_stream_bandwidth);
        if !(pr.tile_revisit >= 1.0) {
            c.fail(format!("{p}.tile_revisit"), "tile_revisit must be at least 1");
        }
        let mut all_resolved = true;
        let mut levels = Vec::new();
        for (j, m) in pr.memory_levels.iter().enumerate() {
            match sys.memory(m) {
                Some(mem) => levels.push((j, mem.level)),
                None => {
                    all_resolved = false;
                    c.fail(format!("{p}.memory_levels[{j}]"), format!("unknown memory {m:?}"));
                }
            }
        }
        if all_resolved {
            for lvl in MemoryLevel::ALL {
                let at: Vec<usize> = levels.iter().filter(|(_, l)| *l == lvl).map(|(j, _)| *j).collect();
                match at.len() {
                    0 => c.fail(format!("{p}.memory_levels"), format!("missing {} memory", lvl.as_str())),
                    1 => {}
                    _ => c.fail(
                        format!("{p}.memory_levels[{}]", at[1]),
                        format!("more than one {} memory", lvl.as_str()),
                    ),
                }
            }
        }
    }

    for (i, m) in sys.memories.iter().enumerate() {
        let p = format!("memories[{i}]");
        c.positive(&p, "capacity", m.capacity);
        c.non_negative(&p, "e_read_per_byte", m.e_read_per_byte);
        c.non_negative(&p, "e_write_per_byte", m.e_write_per_byte);
        let on_ok = c.non_negative(&p, "lk_on", m.lk_on);
        let idle_ok = c.non_negative(&p, "lk_idle", m.lk_idle);
        if on_ok && idle_ok && m.lk_idle > m.lk_on {
            c.fail(format!("{p}.lk_idle"), "lk_idle must not exceed lk_on");
        }
        c.positive(&p, "density_rel", m.density_rel);
    }

    validate_topology(sys, &mut c);
    c.errors
}

fn validate_topology(sys: &SystemSpec, c: &mut Checker) {
    let mut edged_cameras = HashSet::new();
    for (i, e) in sys.topology.camera_edges.iter().enumerate() {
        let p = format!("topology.camera_edges[{i}]");
        let cam = sys.camera(&e.camera);
        match cam {
            None => c.fail(format!("{p}.camera"), format!("unknown camera {:?}", e.camera)),
            Some(_) => {
                if !edged_cameras.insert(e.camera.as_str()) {
                    c.fail(format!("{p}.camera"), format!("camera {:?} has more than one edge", e.camera));
                }
            }
        }
        let link = sys.link(&e.link);
        if link.is_none() {
            c.fail(format!("{p}.link"), format!("unknown link {:?}", e.link));
        }
        if let (Some(cam), Some(_)) = (cam, link) {
            if sys.link(&cam.readout_link).is_some() && cam.readout_link != e.link {
                c.fail(
                    format!("{p}.link"),
                    format!("edge link {:?} differs from camera readout_link {:?}", e.link, cam.readout_link),
                );
            }
        }
        match sys.processor(&e.processor) {
            None => c.fail(format!("{p}.processor"), format!("unknown processor {:?}", e.processor)),
            Some(pr) if pr.role != ProcessorRole::OnSensor => {
                c.fail(format!("{p}.processor"), format!("processor {:?} is not on-sensor", e.processor))
            }
            Some(pr) => {
                if !sys.topology.processor_edges.iter().any(|pe| pe.from == pr.name) {
                    c.fail(format!("{p}.processor"), format!("processor {:?} has no uplink to the aggregator", pr.name));
                }
            }
        }
    }
    for (i, cam) in sys.cameras.iter().enumerate() {
        if !edged_cameras.contains(cam.name.as_str()) {
            c.fail(format!("cameras[{i}]"), format!("camera {:?} has no topology edge", cam.name));
        }
    }

    let mut uplinked = HashSet::new();
    for (i, e) in sys.topology.processor_edges.iter().enumerate() {
        let p = format!("topology.processor_edges[{i}]");
        match sys.processor(&e.from) {
            None => c.fail(format!("{p}.from"), format!("unknown processor {:?}", e.from)),
            Some(pr) if pr.role != ProcessorRole::OnSensor => {
                c.fail(format!("{p}.from"), format!("processor {:?} is not on-sensor", e.from))
            }
            Some(_) => {
                if !uplinked.insert(e.from.as_str()) {
                    c.fail(format!("{p}.from"), format!("processor {:?} has more than one uplink", e.from));
                }
            }
        }
        if sys.link(&e.link).is_none() {
            c.fail(format!("{p}.link"), format!("unknown link {:?}", e.link));
        }
        match sys.processor(&e.to) {
            None => c.fail(format!("{p}.to"), format!("unknown processor {:?}", e.to)),
            Some(pr) if pr.role != ProcessorRole::Aggregator => {
                c.fail(format!("{p}.to"), format!("processor {:?} is not the aggregator", e.to))
            }
            Some(_) => {}
        }
    }
}

pub fn validate_workload(w: &WorkloadSpec) -> Vec<ConfigError> {
    let mut c = Checker::default();
    if w.stages.is_empty() {
        c.fail("stages", "at least one stage is required");
    }
    c.unique("stages", w.stages.iter().map(|s| s.name.as_str()));

    let mut layer_names = HashSet::new();
    for (i, st) in w.stages.iter().enumerate() {
        let sp = format!("stages[{i}]");
        if st.layers.is_empty() {
            c.fail(format!("{sp}.layers"), format!("stage {:?} has no layers", st.name));
        }
        for (j, l) in st.layers.iter().enumerate() {
            let p = format!("{sp}.layers[{j}]");
            if !layer_names.insert(l.name.as_str()) {
                c.fail(format!("{p}.name"), format!("duplicate layer name {:?}", l.name));
            }
            let dims = [
                ("kernel_h", l.kernel_h),
                ("kernel_w", l.kernel_w),
                ("c_in", l.c_in),
                ("c_out", l.c_out),
                ("out_h", l.out_h),
                ("out_w", l.out_w),
            ];
            let mut dims_ok = true;
            for (f, v) in dims {
                if v < 1 {
                    dims_ok = false;
                    c.fail(format!("{p}.{f}"), format!("{f} must be at least 1"));
                }
            }
            if dims_ok {
                match l.kind {
                    LayerKind::Pointwise if l.kernel_h != 1 || l.kernel_w != 1 => {
                        c.fail(format!("{p}.kernel_h"), "pointwise layers need a 1x1 kernel")
                    }
                    LayerKind::Depthwise if l.c_in != l.c_out => {
                        c.fail(format!("{p}.c_out"), "depthwise layers need c_in == c_out")
                    }
                    _ => {}
                }
            }
            c.positive(&p, "weight_bytes", l.weight_bytes);
            c.positive(&p, "in_activation_bytes", l.in_activation_bytes);
            c.positive(&p, "out_activation_bytes", l.out_activation_bytes);
        }
    }

    // Counts are only meaningful against a non-empty stage list.
    let want = w.stages.len().saturating_sub(1);
    if !w.stages.is_empty() && w.boundary_bytes.len() != want {
        c.fail(
            "boundary_bytes",
            format!("missing boundary_bytes: expected {want} entries, found {}", w.boundary_bytes.len()),
        );
    }
    for (i, b) in w.boundary_bytes.iter().enumerate() {
        if !(*b >= 0.0) {
            c.fail(format!("boundary_bytes[{i}]"), "boundary_bytes must be non-negative");
        }
    }
    if !w.stages.is_empty() && w.stage_fps.len() != w.stages.len() {
        c.fail(
            "stage_fps",
            format!("expected {} entries, found {}", w.stages.len(), w.stage_fps.len()),
        );
    }
    for (i, f) in w.stage_fps.iter().enumerate() {
        if !(*f > 0.0) {
            c.fail(format!("stage_fps[{i}]"), "stage_fps must be positive");
        }
    }
    if !(w.aggregator_inferences_per_camera > 0.0) {
        c.fail("aggregator_inferences_per_camera", "aggregator_inferences_per_camera must be positive");
    }
    c.errors
}
