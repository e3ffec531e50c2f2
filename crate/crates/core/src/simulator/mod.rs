//! Data generators.
//!
//! Three processes are provided: the latent state model itself
//! ([`latent`]), a hidden three-state Markov degradation process with a
//! Weibull proportional hazard ([`hmm`]), and a Brownian degradation signal
//! driven by a periodic environment ([`bian`]).
//!
//! Every lifetime draws from its own ChaCha8 stream, selected by the lifetime
//! index, so datasets are reproducible and can be generated in parallel.

pub mod bian;
pub mod hmm;
pub mod latent;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::Event;

pub use bian::{sample_bian_signal, simulate_bian, BianConfig, BianSignal, Prior};
pub use hmm::{sample_hmm_lifetime, simulate_hmm, HmmConfig, HmmSample};
pub use latent::{
    expected_lifetime, sample_lifetime, simulate_dataset, CovariateGenerator, CovariateSource,
    SimConfig,
};

/// RNG for lifetime `index` under `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Inverse-survival sampling on a discrete hazard.
///
/// Accumulates `hazard(t)` for `t = 1, 2, ..` and fails at the first step
/// where the survival `exp(-H(t))` drops to `v` or below. Returns the
/// horizon with [`Event::Censored`] if that never happens.
pub fn sample_discrete_hazard(
    mut hazard: impl FnMut(usize) -> Result<f64>,
    v: f64,
    horizon: usize,
) -> Result<(usize, Event)> {
    let target = -v.ln();
    let mut cumulative = 0.0;
    for t in 1..=horizon {
        cumulative += hazard(t)?;
        if cumulative >= target {
            return Ok((t, Event::Failed));
        }
    }
    Ok((horizon, Event::Censored))
}

/// Uniform draw on the open interval (0, 1).
pub(crate) fn open_unit<R: rand::Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
