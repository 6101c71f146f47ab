//! Bundled example configurations.

/// One camera with the published camera state powers and link parameters.
pub const TABLE1_TABLE2: &str = include_str!("../fixtures/table1_table2.toml");
/// Four-camera hand-tracking headset.
pub const HT_SYSTEM: &str = include_str!("../fixtures/ht_system.toml");
/// DetNet/KeyNet hand-tracking pipeline.
pub const HT_WORKLOAD: &str = include_str!("../fixtures/ht_workload.toml");
/// One conv, one pointwise and one depthwise probe layer.
pub const ROOFLINE_WORKLOAD: &str = include_str!("../fixtures/roofline_workload.toml");
/// Measured costs for two KeyNet layers.
pub const HT_TRACE: &str = include_str!("../fixtures/ht_trace.csv");
