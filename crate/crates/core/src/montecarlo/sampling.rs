//! Draws from [`Distribution`] laws.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution as _, StandardNormal};
use statrs::function::erf::erfc_inv;

use crate::model::{normal_upper_tail, pert_shape, Distribution};

/// Below this acceptance probability a truncated normal is drawn by inverse
/// CDF instead of rejection. Both produce the same law.
const REJECTION_MIN_ACCEPTANCE: f64 = 0.05;

/// Spacing between substream slots, in 32-bit words of keystream.
const SLOT_WORDS_LOG2: u32 = 20;

/// Keystream for `(seed, run, slot)`. Each run owns a ChaCha stream; each
/// random quantity in the run (an activity duration, a risk gate, a risk
/// impact) owns a disjoint window of that stream. Draws therefore depend
/// only on their key, never on evaluation order or thread count.
pub fn substream(seed: u64, run: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng.set_word_pos(u128::from(slot) << SLOT_WORDS_LOG2);
    rng
}

/// Draws one value. Uniform, triangular and discrete laws use the inverse
/// CDF of a single uniform; normal laws are truncated at zero.
pub fn sample<R: Rng + ?Sized>(dist: &Distribution, rng: &mut R) -> f64 {
    match *dist {
        Distribution::Point(v) => v,
        Distribution::Uniform { min, max } => {
            let u: f64 = rng.random();
            min + (max - min) * u
        }
        Distribution::Triangular { min, mode, max } => {
            let u: f64 = rng.random();
            triangular_quantile(min, mode, max, u)
        }
        Distribution::Discrete(ref atoms) => {
            let u: f64 = rng.random();
            let mut cumulative = 0.0;
            for &(v, p) in atoms {
                cumulative += p;
                if u < cumulative {
                    return v;
                }
            }
            atoms.last().map(|a| a.0).unwrap_or(0.0)
        }
        Distribution::Pert { min, mode, max } => {
            if max == min {
                return min;
            }
            let (alpha, beta) = pert_shape(min, mode, max);
            let beta = Beta::new(alpha, beta).expect("PERT shapes are >= 1");
            min + (max - min) * beta.sample(rng)
        }
        Distribution::Normal { mean, sd } => {
            if sd == 0.0 {
                return mean;
            }
            let alpha = -mean / sd;
            let (acceptance, _) = normal_upper_tail(alpha);
            if acceptance >= REJECTION_MIN_ACCEPTANCE {
                loop {
                    let z: f64 = rng.sample(StandardNormal);
                    let x = mean + sd * z;
                    if x >= 0.0 {
                        return x;
                    }
                }
            }
            // Z | Z >= alpha: with u in (0, 1], z = Phi^-1(1 - u * acceptance).
            let u = 1.0 - rng.random::<f64>();
            let z = std::f64::consts::SQRT_2 * erfc_inv(2.0 * u * acceptance);
            (mean + sd * z).max(0.0)
        }
    }
}

pub(crate) fn triangular_quantile(min: f64, mode: f64, max: f64, u: f64) -> f64 {
    let range = max - min;
    if range == 0.0 {
        return min;
    }
    let split = (mode - min) / range;
    if u < split {
        min + (u * range * (mode - min)).sqrt()
    } else {
        max - ((1.0 - u) * range * (max - mode)).sqrt()
    }
}
