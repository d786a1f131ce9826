//! Fixtures shared by the benchmarks.

use ris_core::objective::build_context;
use ris_core::system::synthesize_channels;
use ris_core::{CompositeContext, SystemParams};

/// Composite context for the default scenario with `f` elements.
pub fn context(f: usize, eta: f64, seed: u64) -> CompositeContext {
    let params = SystemParams::default()
        .with_ris_elements(f)
        .expect("f is a multiple of the row count");
    let ch = synthesize_channels(&params, seed).expect("default scenario is valid");
    build_context(&ch, &params, eta).expect("eta in range")
}
