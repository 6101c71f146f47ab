//! TOML config readers.
//!
//! Numeric fields accept either a bare number in SI base units or a string
//! with a unit suffix. Every problem is collected with its document path;
//! loading only fails after the whole document has been inspected.

use toml::{Table, Value};

use super::validate::{validate_system, validate_workload};
use super::*;
use crate::units::{parse_quantity, Dimension};

struct Reader {
    errors: Vec<ConfigError>,
}

impl Reader {
    fn new() -> Self {
        Self { errors: Vec::new() }
    }

    fn fail(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(ConfigError::new(path, message));
    }

    fn check_keys(&mut self, t: &Table, path: &str, allowed: &[&str]) {
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                self.fail(join(path, k), format!("unknown field {k:?}"));
            }
        }
    }

    fn required<'a>(&mut self, t: &'a Table, path: &str, key: &str) -> Option<&'a Value> {
        let v = t.get(key);
        if v.is_none() {
            self.fail(join(path, key), format!("missing required field {key:?}"));
        }
        v
    }

    fn string(&mut self, t: &Table, path: &str, key: &str) -> Option<String> {
        match self.required(t, path, key)? {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.fail(join(path, key), "expected a string");
                None
            }
        }
    }

    fn value_quantity(&mut self, v: &Value, path: &str, dim: Dimension) -> Option<f64> {
        match v {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            Value::String(s) => match parse_quantity(s, dim) {
                Ok(x) => Some(x),
                Err(e) => {
                    self.fail(path, e.to_string());
                    None
                }
            },
            _ => {
                self.fail(path, format!("expected a number or quantity string for {dim}"));
                None
            }
        }
    }

    fn quantity(&mut self, t: &Table, path: &str, key: &str, dim: Dimension) -> Option<f64> {
        let v = self.required(t, path, key)?;
        self.value_quantity(v, &join(path, key), dim)
    }

    fn optional_quantity(&mut self, t: &Table, path: &str, key: &str, dim: Dimension, default: f64) -> Option<f64> {
        match t.get(key) {
            None => Some(default),
            Some(v) => self.value_quantity(v, &join(path, key), dim),
        }
    }

    fn count(&mut self, t: &Table, path: &str, key: &str) -> Option<u64> {
        match self.required(t, path, key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            _ => {
                self.fail(join(path, key), "expected a non-negative integer");
                None
            }
        }
    }

    fn tables<'a>(&mut self, t: &'a Table, path: &str, key: &str) -> Vec<(String, &'a Table)> {
        match t.get(key) {
            None => {
                self.fail(join(path, key), format!("missing required field {key:?}"));
                Vec::new()
            }
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    let p = format!("{}[{i}]", join(path, key));
                    match item {
                        Value::Table(tt) => out.push((p, tt)),
                        _ => self.fail(p, "expected a table"),
                    }
                }
                out
            }
            Some(_) => {
                self.fail(join(path, key), "expected an array of tables");
                Vec::new()
            }
        }
    }

    fn quantity_list(&mut self, t: &Table, key: &str, dim: Dimension) -> Option<Vec<f64>> {
        match self.required(t, "", key)? {
            Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                let mut ok = true;
                for (i, v) in items.iter().enumerate() {
                    match self.value_quantity(v, &format!("{key}[{i}]"), dim) {
                        Some(x) => out.push(x),
                        None => ok = false,
                    }
                }
                ok.then_some(out)
            }
            _ => {
                self.fail(key, "expected an array");
                None
            }
        }
    }

    fn finish<T>(self, value: Option<T>) -> Result<T, ConfigErrors> {
        match value {
            Some(v) if self.errors.is_empty() => Ok(v),
            _ => Err(ConfigErrors(self.errors)),
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn parse_table(text: &str) -> Result<Table, ConfigErrors> {
    text.parse::<Table>()
        .map_err(|e| ConfigErrors(vec![ConfigError::new("<document>", e.message().to_string())]))
}

const CAMERA_FIELDS: &[&str] = &[
    "name", "p_sense", "p_read", "p_off", "t_exposure", "t_adc", "fps", "frame_bytes", "readout_link",
];
const LINK_FIELDS: &[&str] = &["name", "energy_per_byte", "bandwidth"];
const PROCESSOR_FIELDS: &[&str] = &[
    "name",
    "role",
    "e_mac",
    "peak_macs_per_cycle",
    "f_clk",
    "memory_levels",
    "weight_stream_bandwidth",
    "tile_revisit",
];
const MEMORY_FIELDS: &[&str] = &[
    "name",
    "level",
    "technology",
    "capacity",
    "e_read_per_byte",
    "e_write_per_byte",
    "lk_on",
    "lk_idle",
    "density_rel",
];

fn read_camera(r: &mut Reader, p: &str, t: &Table) -> Option<CameraSpec> {
    use Dimension::*;
    r.check_keys(t, p, CAMERA_FIELDS);
    let name = r.string(t, p, "name");
    let p_sense = r.quantity(t, p, "p_sense", Power);
    let p_read = r.quantity(t, p, "p_read", Power);
    let p_off = r.quantity(t, p, "p_off", Power);
    let t_exposure = r.quantity(t, p, "t_exposure", Time);
    let t_adc = r.quantity(t, p, "t_adc", Time);
    let fps = r.quantity(t, p, "fps", Rate);
    let frame_bytes = r.quantity(t, p, "frame_bytes", Bytes);
    let readout_link = r.string(t, p, "readout_link");
    Some(CameraSpec {
        name: name?,
        p_sense: p_sense?,
        p_read: p_read?,
        p_off: p_off?,
        t_exposure: t_exposure?,
        t_adc: t_adc?,
        fps: fps?,
        frame_bytes: frame_bytes?,
        readout_link: readout_link?,
    })
}

fn read_link(r: &mut Reader, p: &str, t: &Table) -> Option<CommLinkSpec> {
    r.check_keys(t, p, LINK_FIELDS);
    let name = r.string(t, p, "name");
    let energy_per_byte = r.quantity(t, p, "energy_per_byte", Dimension::EnergyPerByte);
    let bandwidth = r.quantity(t, p, "bandwidth", Dimension::ByteRate);
    Some(CommLinkSpec { name: name?, energy_per_byte: energy_per_byte?, bandwidth: bandwidth? })
}

fn read_processor(r: &mut Reader, p: &str, t: &Table) -> Option<ProcessorSpec> {
    use Dimension::*;
    r.check_keys(t, p, PROCESSOR_FIELDS);
    let name = r.string(t, p, "name");
    let role = r.string(t, p, "role").and_then(|s| match s.as_str() {
        "on-sensor" => Some(ProcessorRole::OnSensor),
        "aggregator" => Some(ProcessorRole::Aggregator),
        other => {
            r.fail(join(p, "role"), format!("unknown role {other:?} (expected on-sensor or aggregator)"));
            None
        }
    });
    let e_mac = r.quantity(t, p, "e_mac", Energy);
    let peak = r.quantity(t, p, "peak_macs_per_cycle", MacsPerCycle);
    let f_clk = r.quantity(t, p, "f_clk", Frequency);
    let memory_levels = match r.required(t, p, "memory_levels") {
        Some(Value::Array(items)) => {
            let mut names = Vec::new();
            let mut ok = true;
            for (i, v) in items.iter().enumerate() {
                match v {
                    Value::String(s) => names.push(s.clone()),
                    _ => {
                        ok = false;
                        r.fail(format!("{p}.memory_levels[{i}]"), "expected a memory name");
                    }
                }
            }
            ok.then_some(names)
        }
        Some(_) => {
            r.fail(join(p, "memory_levels"), "expected an array of memory names");
            None
        }
        None => None,
    };
    let wsb = r.quantity(t, p, "weight_stream_bandwidth", BytesPerCycle);
    let tile_revisit = r.optional_quantity(t, p, "tile_revisit", Dimensionless, 1.0);
    Some(ProcessorSpec {
        name: name?,
        role: role?,
        e_mac: e_mac?,
        peak_macs_per_cycle: peak?,
        f_clk: f_clk?,
        memory_levels: memory_levels?,
        weight_stream_bandwidth: wsb?,
        tile_revisit: tile_revisit?,
    })
}

fn read_memory(r: &mut Reader, p: &str, t: &Table) -> Option<MemorySpec> {
    use Dimension::*;
    r.check_keys(t, p, MEMORY_FIELDS);
    let name = r.string(t, p, "name");
    let level = r.string(t, p, "level").and_then(|s| {
        MemoryLevel::parse(&s).or_else(|| {
            r.fail(join(p, "level"), format!("unknown level {s:?} (expected L1, L2-activation or L2-weight)"));
            None
        })
    });
    let technology = r.string(t, p, "technology").and_then(|s| {
        MemoryTechnology::parse(&s).or_else(|| {
            r.fail(join(p, "technology"), format!("unknown technology {s:?} (expected SRAM or STT-MRAM)"));
            None
        })
    });
    let capacity = r.quantity(t, p, "capacity", Bytes);
    let e_read = r.quantity(t, p, "e_read_per_byte", EnergyPerByte);
    let e_write = r.quantity(t, p, "e_write_per_byte", EnergyPerByte);
    let lk_on = r.quantity(t, p, "lk_on", Power);
    let lk_idle = r.quantity(t, p, "lk_idle", Power);
    let density_rel = r.optional_quantity(t, p, "density_rel", Dimensionless, 1.0);
    Some(MemorySpec {
        name: name?,
        level: level?,
        technology: technology?,
        capacity: capacity?,
        e_read_per_byte: e_read?,
        e_write_per_byte: e_write?,
        lk_on: lk_on?,
        lk_idle: lk_idle?,
        density_rel: density_rel?,
    })
}

fn read_topology(r: &mut Reader, root: &Table) -> Option<Topology> {
    let t = match r.required(root, "", "topology")? {
        Value::Table(t) => t,
        _ => {
            r.fail("topology", "expected a table");
            return None;
        }
    };
    r.check_keys(t, "topology", &["camera_edges", "processor_edges"]);
    let mut ok = true;
    let mut camera_edges = Vec::new();
    for (p, e) in r.tables(t, "topology", "camera_edges") {
        r.check_keys(e, &p, &["camera", "link", "processor"]);
        let camera = r.string(e, &p, "camera");
        let link = r.string(e, &p, "link");
        let processor = r.string(e, &p, "processor");
        match (camera, link, processor) {
            (Some(camera), Some(link), Some(processor)) => camera_edges.push(CameraEdge { camera, link, processor }),
            _ => ok = false,
        }
    }
    let mut processor_edges = Vec::new();
    for (p, e) in r.tables(t, "topology", "processor_edges") {
        r.check_keys(e, &p, &["from", "link", "to"]);
        let from = r.string(e, &p, "from");
        let link = r.string(e, &p, "link");
        let to = r.string(e, &p, "to");
        match (from, link, to) {
            (Some(from), Some(link), Some(to)) => processor_edges.push(ProcessorEdge { from, link, to }),
            _ => ok = false,
        }
    }
    ok.then_some(Topology { camera_edges, processor_edges })
}

fn read_section<T>(
    r: &mut Reader,
    root: &Table,
    key: &str,
    read: impl Fn(&mut Reader, &str, &Table) -> Option<T>,
) -> Option<Vec<T>> {
    let mut ok = true;
    let mut out = Vec::new();
    for (p, t) in r.tables(root, "", key) {
        match read(r, &p, t) {
            Some(x) => out.push(x),
            None => ok = false,
        }
    }
    ok.then_some(out)
}

/// Load and validate a hardware description.
pub fn load_system_config(text: &str) -> Result<SystemSpec, ConfigErrors> {
    let root = parse_table(text)?;
    let mut r = Reader::new();
    r.check_keys(&root, "", &["cameras", "links", "processors", "memories", "topology"]);
    let cameras = read_section(&mut r, &root, "cameras", read_camera);
    let links = read_section(&mut r, &root, "links", read_link);
    let processors = read_section(&mut r, &root, "processors", read_processor);
    let memories = read_section(&mut r, &root, "memories", read_memory);
    let topology = read_topology(&mut r, &root);
    let sys = (|| {
        Some(SystemSpec {
            cameras: cameras?,
            links: links?,
            processors: processors?,
            memories: memories?,
            topology: topology?,
        })
    })();
    let sys = r.finish(sys)?;
    let errors = validate_system(&sys);
    if errors.is_empty() {
        Ok(sys)
    } else {
        Err(ConfigErrors(errors))
    }
}

const LAYER_FIELDS: &[&str] = &[
    "name",
    "kind",
    "kernel_h",
    "kernel_w",
    "c_in",
    "c_out",
    "out_h",
    "out_w",
    "weight_bytes",
    "in_activation_bytes",
    "out_activation_bytes",
];

fn read_layer(r: &mut Reader, p: &str, t: &Table) -> Option<LayerSpec> {
    r.check_keys(t, p, LAYER_FIELDS);
    let name = r.string(t, p, "name");
    let kind = r.string(t, p, "kind").and_then(|s| {
        LayerKind::parse(&s).or_else(|| {
            r.fail(join(p, "kind"), format!("unknown layer kind {s:?}"));
            None
        })
    });
    let kernel_h = r.count(t, p, "kernel_h");
    let kernel_w = r.count(t, p, "kernel_w");
    let c_in = r.count(t, p, "c_in");
    let c_out = r.count(t, p, "c_out");
    let out_h = r.count(t, p, "out_h");
    let out_w = r.count(t, p, "out_w");
    let weight_bytes = r.quantity(t, p, "weight_bytes", Dimension::Bytes);
    let in_b = r.quantity(t, p, "in_activation_bytes", Dimension::Bytes);
    let out_b = r.quantity(t, p, "out_activation_bytes", Dimension::Bytes);
    Some(LayerSpec {
        name: name?,
        kind: kind?,
        kernel_h: kernel_h?,
        kernel_w: kernel_w?,
        c_in: c_in?,
        c_out: c_out?,
        out_h: out_h?,
        out_w: out_w?,
        weight_bytes: weight_bytes?,
        in_activation_bytes: in_b?,
        out_activation_bytes: out_b?,
    })
}

fn read_stage(r: &mut Reader, p: &str, t: &Table) -> Option<Stage> {
    r.check_keys(t, p, &["name", "layers"]);
    let name = r.string(t, p, "name");
    let mut ok = true;
    let mut layers = Vec::new();
    for (lp, lt) in r.tables(t, p, "layers") {
        match read_layer(r, &lp, lt) {
            Some(l) => layers.push(l),
            None => ok = false,
        }
    }
    let name = name?;
    ok.then_some(Stage { name, layers })
}

/// Load and validate a workload pipeline.
pub fn load_workload_config(text: &str) -> Result<WorkloadSpec, ConfigErrors> {
    let root = parse_table(text)?;
    let mut r = Reader::new();
    r.check_keys(
        &root,
        "",
        &["stages", "boundary_bytes", "stage_fps", "aggregator_inferences_per_camera"],
    );
    let stages = read_section(&mut r, &root, "stages", read_stage);
    // A single-stage pipeline has no boundaries; the key may be omitted.
    let boundary_bytes = if root.contains_key("boundary_bytes") {
        r.quantity_list(&root, "boundary_bytes", Dimension::Bytes)
    } else {
        Some(Vec::new())
    };
    let stage_fps = r.quantity_list(&root, "stage_fps", Dimension::Rate);
    let mult = r.optional_quantity(&root, "", "aggregator_inferences_per_camera", Dimension::Dimensionless, 1.0);
    let w = (|| {
        Some(WorkloadSpec {
            stages: stages?,
            boundary_bytes: boundary_bytes?,
            stage_fps: stage_fps?,
            aggregator_inferences_per_camera: mult?,
        })
    })();
    let w = r.finish(w)?;
    let errors = validate_workload(&w);
    if errors.is_empty() {
        Ok(w)
    } else {
        Err(ConfigErrors(errors))
    }
}

/// Serialize a system back to config text, every quantity in SI base units.
pub fn system_to_toml(sys: &SystemSpec) -> String {
    toml::to_string(sys).expect("system specs always serialize")
}

pub fn workload_to_toml(w: &WorkloadSpec) -> String {
    toml::to_string(w).expect("workload specs always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = crate::fixtures::TABLE1_TABLE2;

    fn errors_of(text: &str) -> Vec<ConfigError> {
        load_system_config(text).expect_err("expected a config error").0
    }

    #[test]
    fn loads_minimal_system() {
        let sys = load_system_config(MINIMAL).unwrap();
        assert_eq!(sys.cameras[0].p_read, 0.036);
        assert_eq!(sys.link("mipi").unwrap().bandwidth, 5e8);
        assert_eq!(sys.processor("os").unwrap().tile_revisit, 1.0);
        assert_eq!(sys.aggregator().name, "agg");
        let route = sys.route(&sys.cameras[0]).unwrap();
        assert_eq!(route.uplink.name, "mipi");
        assert_eq!(route.readout_link.name, "utsv");
    }

    #[test]
    fn zero_bandwidth_is_rejected() {
        let text = MINIMAL.replace("\"0.5 GB/s\"", "0");
        let errs = errors_of(&text);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].path, "links[1].bandwidth");
        assert!(errs[0].message.contains("bandwidth must be positive"));
    }

    #[test]
    fn dangling_link_names_its_path() {
        let text = MINIMAL.replace("link = \"mipi\"", "link = \"mipi2\"");
        let errs = errors_of(&text);
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert_eq!(errs[0].path, "topology.processor_edges[0].link");
        assert!(errs[0].message.contains("mipi2"));
    }

    #[test]
    fn missing_field_and_bad_unit() {
        let text = MINIMAL.replace("t_adc = \"1 ms\"\n", "");
        let errs = errors_of(&text);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].path, "cameras[0].t_adc");
        assert!(errs[0].message.contains("missing"));

        let text = MINIMAL.replace("\"15 mW\"", "\"15 parsecs\"");
        let errs = errors_of(&text);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].path, "cameras[0].p_sense");
    }

    #[test]
    fn negative_parameter_and_unknown_field() {
        let text = MINIMAL.replace("\"0.5 pJ/B\"\nlk_on = \"100 uW\"", "\"-0.5 pJ/B\"\nlk_on = \"100 uW\"");
        let errs = errors_of(&text);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].path, "memories[2].e_write_per_byte");

        let text = MINIMAL.replace("fps = 30", "fps = 30\ncolour = \"red\"");
        let errs = errors_of(&text);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].path, "cameras[0].colour");
    }

    #[test]
    fn aggregator_count_enforced() {
        let text = MINIMAL.replace("role = \"aggregator\"", "role = \"on-sensor\"");
        let errs = errors_of(&text);
        assert!(errs.iter().any(|e| e.message.contains("exactly one aggregator")));
    }

    #[test]
    fn system_round_trips_through_toml() {
        let sys = load_system_config(MINIMAL).unwrap();
        let again = load_system_config(&system_to_toml(&sys)).unwrap();
        assert_eq!(sys, again);
    }

    const WORKLOAD: &str = r#"
stage_fps = [10, "30 fps"]
boundary_bytes = ["75 KiB"]

[[stages]]
name = "DetNet"
[[stages.layers]]
name = "d1"
kind = "conv"
kernel_h = 3
kernel_w = 3
c_in = 1
c_out = 8
out_h = 120
out_w = 160
weight_bytes = 72
in_activation_bytes = 307200
out_activation_bytes = 153600

[[stages]]
name = "KeyNet"
[[stages.layers]]
name = "k1"
kind = "pointwise"
kernel_h = 1
kernel_w = 1
c_in = 8
c_out = 8
out_h = 8
out_w = 8
weight_bytes = 64
in_activation_bytes = 512
out_activation_bytes = 512
"#;

    #[test]
    fn loads_two_stage_workload() {
        let w = load_workload_config(WORKLOAD).unwrap();
        assert_eq!(w.stages.len(), 2);
        assert_eq!(w.boundary_bytes, vec![76800.0]);
        assert_eq!(w.stage_fps, vec![10.0, 30.0]);
        assert_eq!(w.aggregator_inferences_per_camera, 1.0);
        let again = load_workload_config(&workload_to_toml(&w)).unwrap();
        assert_eq!(w, again);
    }

    #[test]
    fn workload_errors() {
        let errs = load_workload_config(&WORKLOAD.replace("boundary_bytes = [\"75 KiB\"]\n", ""))
            .unwrap_err()
            .0;
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("missing boundary_bytes"));

        let errs = load_workload_config(&WORKLOAD.replace("stage_fps = [10,", "stage_fps = [0,"))
            .unwrap_err()
            .0;
        assert_eq!(errs[0].path, "stage_fps[0]");

        let empty_stage = "stage_fps = [10]\n[[stages]]\nname = \"A\"\nlayers = []\n";
        let errs = load_workload_config(empty_stage).unwrap_err().0;
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].path, "stages[0].layers");

        let errs = load_workload_config("stage_fps = []\nstages = []\n").unwrap_err().0;
        assert!(errs.iter().any(|e| e.path == "stages"));
    }

    #[test]
    fn single_stage_needs_no_boundaries() {
        let one = WORKLOAD
            .split("[[stages]]\nname = \"KeyNet\"")
            .next()
            .unwrap()
            .replace("stage_fps = [10, \"30 fps\"]\nboundary_bytes = [\"75 KiB\"]", "stage_fps = [10]");
        let w = load_workload_config(&one).unwrap();
        assert_eq!(w.stages.len(), 1);
        assert!(w.boundary_bytes.is_empty());
    }

    #[test]
    fn layer_shape_invariants() {
        let bad = WORKLOAD.replace("kind = \"pointwise\"\nkernel_h = 1", "kind = \"pointwise\"\nkernel_h = 3");
        let errs = load_workload_config(&bad).unwrap_err().0;
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("1x1"));
    }
}
