//! Fixtures shared by the benchmarks in `benches/`.

use noe_core::{SimConfig, SocietyKind, World};

/// A full-scale world that has already settled into its steady state and can
/// be stepped indefinitely.
pub fn settled_world(society: SocietyKind, warmup: u64) -> World {
    let mut world = World::new(SimConfig {
        society,
        n_steps: u64::MAX,
        seed: 1,
        ..SimConfig::default()
    })
    .expect("default config is valid");
    for _ in 0..warmup {
        world.step_world();
    }
    world
}

/// Ten-run samples with different means, sized like one society's results.
pub fn paired_samples() -> (Vec<f64>, Vec<f64>) {
    let a = (0..10).map(|i| 55.0 + (i * 7 % 5) as f64).collect();
    let b = (0..10).map(|i| 170.0 + (i * 3 % 11) as f64).collect();
    (a, b)
}
