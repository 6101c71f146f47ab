//! Kernel invariants checked over randomized inputs.

mod common;

use dosc_sim::energy::{aggregate, leakage_terms, processing_time, Category, ModuleEnergy, Placement};
use dosc_sim::fixtures;
use dosc_sim::layer::{cost_layer, default_traffic};
use dosc_sim::system::{load_system_config, load_workload_config, MemoryLevel, MemorySpec, MemoryTechnology};
use proptest::prelude::*;

fn module(i: usize, energy: f64, fps: f64) -> ModuleEnergy {
    ModuleEnergy {
        module_id: format!("m{i}"),
        category: Category::ALL[i % 5],
        resource: format!("r{i}"),
        placement: Placement::Link,
        energy_per_frame: energy,
        fps,
    }
}

fn memory(lk_on: f64, lk_idle: f64) -> MemorySpec {
    MemorySpec {
        name: "m".into(),
        level: MemoryLevel::L2Weight,
        technology: MemoryTechnology::Sram,
        capacity: 1.0,
        e_read_per_byte: 0.0,
        e_write_per_byte: 0.0,
        lk_on,
        lk_idle,
        density_rel: 1.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn power_rises_with_any_module_fps(
        mods in prop::collection::vec((1e-9f64..1e-3, 0.5f64..120.0), 1..12),
        pick in 0usize..12,
        bump in 1.001f64..4.0,
    ) {
        let base: Vec<ModuleEnergy> = mods.iter().enumerate().map(|(i, (e, f))| module(i, *e, *f)).collect();
        let mut faster = base.clone();
        let i = pick % faster.len();
        faster[i].fps *= bump;
        prop_assert!(aggregate(faster).total_avg_power > aggregate(base).total_avg_power);
    }

    #[test]
    fn leakage_is_bounded_by_its_rates(
        lk_on in 0.0f64..1e-2,
        idle_ratio in 0.0f64..=1.0,
        fps in 0.5f64..240.0,
        busy in 0.0f64..=1.0,
    ) {
        let mem = memory(lk_on, lk_on * idle_ratio);
        let t = busy / fps;
        let terms = leakage_terms(&mem, t, fps).unwrap();
        prop_assert!(terms.on >= 0.0 && terms.idle >= 0.0);
        let total = terms.on + terms.idle;
        prop_assert!(total <= lk_on / fps * (1.0 + 1e-12));
        prop_assert!(total >= mem.lk_idle / fps * (1.0 - 1e-12));
        prop_assert!(leakage_terms(&mem, 1.01 / fps, fps).is_err());
    }

    #[test]
    fn processing_time_is_additive(seed in any::<u64>(), n in 1usize..8, f_clk in 1e6f64..2e9) {
        let mut rng = common::rng(seed);
        let sys = common::random_system(&mut rng);
        let proc = &sys.processors[0];
        let costs: Vec<_> = (0..n)
            .map(|i| cost_layer(proc, &common::random_layer(&mut rng, format!("l{i}")), 1.0).unwrap())
            .collect();
        let whole = processing_time(&costs, f_clk).unwrap();
        let parts: f64 = costs.iter().map(|c| processing_time(std::slice::from_ref(c), f_clk).unwrap()).sum();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole);
        let doubled: Vec<_> = costs.iter().chain(&costs).cloned().collect();
        prop_assert!((processing_time(&doubled, f_clk).unwrap() - 2.0 * whole).abs() <= 1e-12 * whole);
    }

    #[test]
    fn revisit_scales_l1_only(seed in any::<u64>(), k in 1.0f64..8.0) {
        let mut rng = common::rng(seed);
        let layer = common::random_layer(&mut rng, "l".into());
        let one = default_traffic(&layer, 1.0).unwrap();
        let many = default_traffic(&layer, k).unwrap();
        prop_assert_eq!(one.l2_weight, many.l2_weight);
        prop_assert_eq!(one.l2_activation, many.l2_activation);
        prop_assert_eq!(many.l1.read_bytes, one.l1.read_bytes * k);
        prop_assert_eq!(many.l1.write_bytes, one.l1.write_bytes * k);
    }
}

#[test]
fn activations_chain_through_hand_tracking() {
    let sys = load_system_config(fixtures::HT_SYSTEM).unwrap();
    let w = load_workload_config(fixtures::HT_WORKLOAD).unwrap();
    let agg = sys.aggregator();
    for stage in &w.stages {
        let traffic: Vec<_> = stage.layers.iter().map(|l| cost_layer(agg, l, 1.0).unwrap().traffic).collect();
        for pair in traffic.windows(2) {
            assert_eq!(pair[0].l2_activation.write_bytes, pair[1].l2_activation.read_bytes, "{}", stage.name);
        }
    }
}
