//! Crate-internal random draws.
//!
//! Every randomized routine in this crate derives one `ChaCha8` stream per
//! logical draw (or per replicate) from a user-supplied `u64` seed via
//! SplitMix64, so results are reproducible for a given seed and do not
//! depend on evaluation order.
//!
//! Negative-binomial variates use the gamma-Poisson mixture and beta
//! variates the two-gamma ratio, keeping every sampler on top of the two
//! primitives provided by `rand_distr`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

/// SplitMix64 finalizer over `(seed, index)`.
pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for draw `index` of the stream rooted at `seed`.
pub(crate) fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}

/// Gamma draw parameterized by shape and **rate**.
pub(crate) fn draw_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    debug_assert!(shape > 0.0 && rate > 0.0);
    Gamma::new(shape, 1.0 / rate)
        .expect("gamma parameters validated by caller")
        .sample(rng)
}

/// Beta draw via the ratio of two gamma variates.
pub(crate) fn draw_beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    let x = draw_gamma(rng, a, 1.0);
    let y = draw_gamma(rng, b, 1.0);
    if x + y == 0.0 {
        // Both shapes tiny and both draws underflowed; the mass sits at an
        // endpoint, split evenly.
        return if rng.gen::<bool>() { 0.0 } else { 1.0 };
    }
    x / (x + y)
}

/// Poisson draw; `lambda = 0` is the unit mass at zero.
pub(crate) fn draw_poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    debug_assert!(lambda >= 0.0 && lambda.is_finite());
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda)
        .expect("poisson rate validated by caller")
        .sample(rng) as u64
}

/// Negative-binomial draw with real `size` and success probability `p`
/// (mass `C(k+size-1, k) p^k (1-p)^size`), via the gamma-Poisson mixture.
pub(crate) fn draw_negbin<R: Rng + ?Sized>(rng: &mut R, size: f64, p: f64) -> u64 {
    debug_assert!(size > 0.0 && (0.0..1.0).contains(&p));
    if p <= 0.0 {
        return 0;
    }
    let lambda = draw_gamma(rng, size, (1.0 - p) / p);
    draw_poisson(rng, lambda)
}

/// Zero-truncated Poisson draw by rejection; `rate > 0`.
pub(crate) fn draw_trunc_poisson<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> u64 {
    debug_assert!(rate > 0.0);
    loop {
        let k = draw_poisson(rng, rate);
        if k >= 1 {
            return k;
        }
    }
}

/// Inverse-CDF sampler over a fixed finite support.
pub(crate) struct DiscreteCdf {
    cumulative: Vec<f64>,
}

impl DiscreteCdf {
    /// Builds the sampler from non-negative weights (not necessarily
    /// normalized). At least one weight must be positive.
    pub(crate) fn new(weights: &[f64]) -> Self {
        debug_assert!(!weights.is_empty());
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in weights {
            debug_assert!(w >= 0.0);
            acc += w;
            cumulative.push(acc);
        }
        debug_assert!(acc > 0.0, "all weights are zero");
        let norm = acc;
        for c in &mut cumulative {
            *c /= norm;
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        DiscreteCdf { cumulative }
    }

    /// Returns an index in `0..weights.len()`.
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&u).expect("cdf is finite"))
        {
            Ok(i) | Err(i) => i.min(self.cumulative.len() - 1),
        }
    }
}
