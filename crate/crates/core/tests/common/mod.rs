//! Seeded random systems and workloads shared by the integration tests.

#![allow(dead_code)]

use dosc_sim::system::{
    validate_system, validate_workload, CameraEdge, CameraSpec, CommLinkSpec, LayerKind, LayerSpec, MemoryLevel,
    MemorySpec, MemoryTechnology, ProcessorEdge, ProcessorRole, ProcessorSpec, Stage, SystemSpec, Topology,
    WorkloadSpec,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn memory<R: Rng>(rng: &mut R, name: &str, level: MemoryLevel, capacity: f64) -> MemorySpec {
    let lk_on = rng.random_range(1e-6..1e-3);
    MemorySpec {
        name: name.to_string(),
        level,
        technology: MemoryTechnology::Sram,
        capacity,
        e_read_per_byte: rng.random_range(0.01e-12..1e-12),
        e_write_per_byte: rng.random_range(0.01e-12..2e-12),
        lk_on,
        lk_idle: lk_on * rng.random_range(0.0..1.0),
        density_rel: 1.0,
    }
}

fn processor<R: Rng>(rng: &mut R, name: &str, role: ProcessorRole) -> ProcessorSpec {
    ProcessorSpec {
        name: name.to_string(),
        role,
        e_mac: rng.random_range(0.05e-12..2e-12),
        peak_macs_per_cycle: if rng.random_bool(0.5) { 133.0 } else { rng.random_range(16.0..512.0) },
        f_clk: rng.random_range(100e6..1.5e9),
        memory_levels: ["l1", "l2a", "l2w"].iter().map(|l| format!("{name}_{l}")).collect(),
        weight_stream_bandwidth: rng.random_range(2.0..64.0),
        tile_revisit: rng.random_range(1.0..3.0),
    }
}

/// A valid system with 1 to 6 cameras feeding one on-sensor processor type
/// over µTSV and an aggregator over MIPI.
pub fn random_system<R: Rng>(rng: &mut R) -> SystemSpec {
    let n_cams = rng.random_range(1..=6);
    let cameras: Vec<CameraSpec> = (0..n_cams)
        .map(|i| {
            let p_read = rng.random_range(5e-3..60e-3);
            CameraSpec {
                name: format!("cam{i}"),
                p_sense: rng.random_range(5e-3..40e-3),
                p_read,
                p_off: p_read * rng.random_range(0.0..0.2),
                t_exposure: rng.random_range(0.5e-3..5e-3),
                t_adc: rng.random_range(0.1e-3..1e-3),
                fps: [10.0, 15.0, 30.0, 60.0][rng.random_range(0..4)],
                frame_bytes: rng.random_range(20_000.0..400_000.0f64).round(),
                readout_link: "utsv".into(),
            }
        })
        .collect();
    let links = vec![
        CommLinkSpec {
            name: "utsv".into(),
            energy_per_byte: rng.random_range(1e-12..10e-12),
            bandwidth: rng.random_range(20e9..200e9),
        },
        CommLinkSpec {
            name: "mipi".into(),
            energy_per_byte: rng.random_range(10e-12..200e-12),
            bandwidth: rng.random_range(0.4e9..4e9),
        },
    ];
    let processors = vec![processor(rng, "os", ProcessorRole::OnSensor), processor(rng, "agg", ProcessorRole::Aggregator)];
    let os_w = rng.random_range(16_384.0..2_097_152.0f64).round();
    let agg_w = rng.random_range(1_048_576.0..16_777_216.0f64).round();
    let memories = vec![
        memory(rng, "os_l1", MemoryLevel::L1, 65_536.0),
        memory(rng, "os_l2a", MemoryLevel::L2Activation, 524_288.0),
        memory(rng, "os_l2w", MemoryLevel::L2Weight, os_w),
        memory(rng, "agg_l1", MemoryLevel::L1, 262_144.0),
        memory(rng, "agg_l2a", MemoryLevel::L2Activation, 2_097_152.0),
        memory(rng, "agg_l2w", MemoryLevel::L2Weight, agg_w),
    ];
    let topology = Topology {
        camera_edges: cameras
            .iter()
            .map(|c| CameraEdge { camera: c.name.clone(), link: "utsv".into(), processor: "os".into() })
            .collect(),
        processor_edges: vec![ProcessorEdge { from: "os".into(), link: "mipi".into(), to: "agg".into() }],
    };
    let sys = SystemSpec { cameras, links, processors, memories, topology };
    let errs = validate_system(&sys);
    assert!(errs.is_empty(), "generator produced an invalid system: {errs:?}");
    sys
}

pub fn random_layer<R: Rng>(rng: &mut R, name: String) -> LayerSpec {
    let kind = [LayerKind::Conv, LayerKind::Depthwise, LayerKind::Pointwise, LayerKind::Dense][rng.random_range(0..4)];
    let (k, c_in, c_out, out) = match kind {
        LayerKind::Conv => (rng.random_range(1..=7), rng.random_range(1..=64), rng.random_range(1..=64), rng.random_range(1..=64)),
        LayerKind::Depthwise => {
            let c = rng.random_range(1..=128);
            (rng.random_range(1..=5), c, c, rng.random_range(1..=64))
        }
        LayerKind::Pointwise => (1, rng.random_range(1..=128), rng.random_range(1..=128), rng.random_range(1..=64)),
        LayerKind::Dense => (1, rng.random_range(1..=2048), rng.random_range(1..=512), 1),
    };
    let nominal = match kind {
        LayerKind::Depthwise => k * k * c_in,
        _ => k * k * c_in * c_out,
    } as f64;
    LayerSpec {
        name,
        kind,
        kernel_h: k,
        kernel_w: k,
        c_in,
        c_out,
        out_h: out,
        out_w: out,
        // Stored weights vary around the nominal count to spread intensity.
        weight_bytes: (nominal * rng.random_range(0.25..4.0)).max(1.0).round(),
        in_activation_bytes: (c_in * out * out) as f64,
        out_activation_bytes: (c_out * out * out) as f64,
    }
}

/// A valid pipeline of 1..=`max_stages` stages, with stage rates chosen from
/// the camera rates so that some plans outpace a camera.
pub fn random_workload<R: Rng>(rng: &mut R, sys: &SystemSpec, max_stages: usize) -> WorkloadSpec {
    let n = rng.random_range(1..=max_stages);
    let stages: Vec<Stage> = (0..n)
        .map(|i| Stage {
            name: format!("s{i}"),
            layers: (0..rng.random_range(1..=3)).map(|j| random_layer(rng, format!("s{i}_l{j}"))).collect(),
        })
        .collect();
    let min_fps = sys.cameras.iter().map(|c| c.fps).fold(f64::INFINITY, f64::min);
    let max_fps = sys.cameras.iter().map(|c| c.fps).fold(0.0, f64::max);
    let stage_fps = (0..n)
        .map(|_| {
            if rng.random_bool(0.9) {
                min_fps * rng.random_range(0.1..=1.0)
            } else {
                max_fps
            }
        })
        .collect();
    let frame = sys.cameras[0].frame_bytes;
    let boundary_bytes = (1..n).map(|_| (frame * rng.random_range(0.0..1.0)).round()).collect();
    let w = WorkloadSpec {
        stages,
        boundary_bytes,
        stage_fps,
        aggregator_inferences_per_camera: [0.25, 1.0, 1.0, 2.0][rng.random_range(0..4)],
    };
    let errs = validate_workload(&w);
    assert!(errs.is_empty(), "generator produced an invalid workload: {errs:?}");
    w
}
