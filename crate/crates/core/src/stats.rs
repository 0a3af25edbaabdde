//! Small numeric and sampling helpers shared by the samplers.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased (n - 1) sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Derives the seed of stream `index` from a run seed (SplitMix64 finalizer).
pub fn stream_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// Keeps draws strictly inside (0, 1) so their logs stay finite.
fn interior(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

pub fn sample_beta<R: Rng + ?Sized>(rng: &mut R, alpha: f64, beta: f64) -> Result<f64> {
    let dist = Beta::new(alpha, beta).map_err(|e| Error::InvalidParameter(format!("Beta({alpha}, {beta}): {e}")))?;
    let x = dist.sample(rng);
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("Beta({alpha}, {beta}) draw")));
    }
    Ok(interior(x))
}

pub fn sample_dirichlet<R: Rng + ?Sized>(rng: &mut R, alpha: &[f64]) -> Result<Vec<f64>> {
    let mut draws = Vec::with_capacity(alpha.len());
    for &a in alpha {
        let g = Gamma::new(a, 1.0).map_err(|e| Error::InvalidParameter(format!("Gamma({a}, 1): {e}")))?;
        draws.push(g.sample(rng));
    }
    let total: f64 = draws.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::NonFinite(format!("Dirichlet({alpha:?}) draw")));
    }
    draws.iter_mut().for_each(|x| *x /= total);
    Ok(draws)
}

/// Index drawn with probability proportional to `exp(log_weights)`.
/// `scratch` is overwritten.
pub fn sample_log_categorical<R: Rng + ?Sized>(rng: &mut R, log_weights: &[f64], scratch: &mut Vec<f64>) -> Result<usize> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_nan() || max == f64::INFINITY {
        return Err(Error::NonFinite("log weight".to_string()));
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::ZeroMass);
    }
    scratch.clear();
    let mut total = 0.0;
    for &lw in log_weights {
        total += (lw - max).exp();
        scratch.push(total);
    }
    Ok(pick(rng, scratch, total))
}

/// Index drawn with probability proportional to `weights`.
pub fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64], scratch: &mut Vec<f64>) -> Result<usize> {
    scratch.clear();
    let mut total = 0.0;
    for &w in weights {
        total += w;
        scratch.push(total);
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("categorical weight".to_string()));
    }
    if total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(pick(rng, scratch, total))
}

fn pick<R: Rng + ?Sized>(rng: &mut R, cumulative: &[f64], total: f64) -> usize {
    let u = rng.random::<f64>() * total;
    let i = cumulative.partition_point(|&c| c <= u);
    // u < total always, but rounding can push it onto the last edge
    i.min(cumulative.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn variance_is_unbiased() {
        assert_eq!(sample_variance(&[1.0, 3.0]), 2.0);
        assert_eq!(mean(&[1.0, 2.0, 6.0]), 3.0);
    }

    #[test]
    fn stream_seeds_differ() {
        assert_ne!(stream_seed(7, 0), stream_seed(7, 1));
        assert_eq!(stream_seed(7, 3), stream_seed(7, 3));
    }

    #[test]
    fn categorical_skips_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut scratch = Vec::new();
        for _ in 0..1000 {
            let i = sample_categorical(&mut rng, &[0.0, 1.0, 0.0, 2.0], &mut scratch).unwrap();
            assert!(i == 1 || i == 3);
        }
        assert!(matches!(sample_categorical(&mut rng, &[0.0, 0.0], &mut scratch), Err(Error::ZeroMass)));
        assert!(matches!(
            sample_log_categorical(&mut rng, &[f64::NEG_INFINITY], &mut scratch),
            Err(Error::ZeroMass)
        ));
    }

    #[test]
    fn dirichlet_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = sample_dirichlet(&mut rng, &[6.0, 9.0, 12.0]).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
