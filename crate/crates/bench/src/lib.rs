//! Fixtures shared by the benchmarks.

use delaylin::elim::ElimConfig;
use delaylin::instance::generate_instance;
use delaylin::{BanditInstance, PayoffKind};

/// The synthetic study instance for `seed` with `n` dimensions.
pub fn study_instance(seed: u64, n: usize, max_delay: f64) -> BanditInstance {
    generate_instance(seed, n, 50).with_max_delay(max_delay)
}

pub fn loss_config(horizon: u64, max_delay: f64) -> ElimConfig {
    ElimConfig::new(PayoffKind::Loss, horizon, max_delay)
}
