//! Between/within-chain convergence diagnostics.

use crate::error::{Error, Result};
use crate::stats::{mean, sample_variance};

/// Potential scale reduction factor R̂ of one scalar parameter.
///
/// Returns exactly 1 when the chain means coincide.
pub fn gelman_rubin<C: AsRef<[f64]>>(chains: &[C]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::InvalidConfig("R-hat needs at least 2 chains".to_string()));
    }
    let n = chains[0].as_ref().len();
    if n < 10 || chains.iter().any(|c| c.as_ref().len() != n) {
        return Err(Error::InvalidConfig("R-hat needs equal chain lengths of at least 10".to_string()));
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c.as_ref())).collect();
    let w = mean(&chains.iter().map(|c| sample_variance(c.as_ref())).collect::<Vec<_>>());
    let b = n as f64 * sample_variance(&means);
    if b == 0.0 {
        return Ok(1.0);
    }
    if w == 0.0 {
        return Err(Error::DegenerateChain("zero within-chain variance".to_string()));
    }
    let nf = n as f64;
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    Ok((var_plus / w).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_chains() {
        let c: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        assert_eq!(gelman_rubin(&[c.clone(), c]).unwrap(), 1.0);
    }

    #[test]
    fn offset_chains() {
        let c: Vec<f64> = (0..100).map(|i| (i as f64 * 0.7).sin()).collect();
        let d: Vec<f64> = c.iter().map(|x| x + 10.0).collect();
        assert!(gelman_rubin(&[c, d]).unwrap() > 5.0);
    }

    #[test]
    fn preconditions() {
        let c = vec![0.0; 20];
        assert!(gelman_rubin(std::slice::from_ref(&c)).is_err());
        assert!(gelman_rubin(&[vec![1.0; 5], vec![2.0; 5]]).is_err());
        assert!(matches!(gelman_rubin(&[c, vec![1.0; 20]]), Err(Error::DegenerateChain(_))));
    }
}
