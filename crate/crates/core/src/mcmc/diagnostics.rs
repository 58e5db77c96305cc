//! Split-R̂ and effective sample size for scalar parameters.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarDiagnostic {
    pub name: String,
    /// `None` when undefined (constant draws, too few draws, or chains
    /// that are bit-identical copies of each other).
    pub rhat: Option<f64>,
    pub ess: Option<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn split(chains: &[&[f64]]) -> Option<Vec<Vec<f64>>> {
    let n = chains.iter().map(|c| c.len()).min()?;
    let half = n / 2;
    if half < 2 {
        return None;
    }
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        out.push(c[..half].to_vec());
        out.push(c[n - half..n].to_vec());
    }
    Some(out)
}

/// Within-chain variance W and the pooled estimate var⁺.
fn variance_components(chains: &[Vec<f64>]) -> (f64, f64) {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let grand = mean(&means);
    let b = n / (m - 1.0).max(1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    let var_plus = (n - 1.0) / n * w + b / n;
    (w, var_plus)
}

/// Split-R̂ over equal-length chains (each chain is halved).
pub fn split_rhat(chains: &[&[f64]]) -> Option<f64> {
    let halves = split(chains)?;
    let (w, var_plus) = variance_components(&halves);
    if !(w > 0.0) || !w.is_finite() {
        return None;
    }
    Some((var_plus / w).sqrt())
}

/// Multi-chain effective sample size with Geyer's initial positive
/// sequence truncation of the variogram-based autocorrelations.
pub fn effective_sample_size(chains: &[&[f64]]) -> Option<f64> {
    let n = chains.iter().map(|c| c.len()).min()?;
    if n < 4 {
        return None;
    }
    let cs: Vec<Vec<f64>> = chains.iter().map(|c| c[..n].to_vec()).collect();
    let m = cs.len() as f64;
    let (w, mut var_plus) = variance_components(&cs);
    if cs.len() == 1 {
        var_plus = w;
    }
    if !(var_plus > 0.0) || !var_plus.is_finite() {
        return None;
    }
    let rho = |t: usize| {
        let v: f64 = cs
            .iter()
            .map(|c| (t..n).map(|i| (c[i] - c[i - t]).powi(2)).sum::<f64>())
            .sum::<f64>()
            / (m * (n - t) as f64);
        1.0 - v / (2.0 * var_plus)
    };
    let mut sum = 0.0;
    let mut t = 1;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair < 0.0 {
            break;
        }
        sum += pair;
        t += 2;
    }
    let tau = (-1.0 + 2.0 * (1.0 + sum)).max(1.0 / (m * n as f64).log10().max(1.0));
    Some(m * n as f64 / tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn rhat_near_one_for_iid_chains() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let chains: Vec<Vec<f64>> = (0..4).map(|_| (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let refs: Vec<&[f64]> = chains.iter().map(|c| c.as_slice()).collect();
        let r = split_rhat(&refs).unwrap();
        assert!((r - 1.0).abs() < 0.01, "{r}");
        let ess = effective_sample_size(&refs).unwrap();
        assert!(ess > 6000.0 && ess < 10000.0, "{ess}");
    }

    #[test]
    fn rhat_detects_separated_chains() {
        let a: Vec<f64> = (0..500).map(|i| (i as f64 * 0.1).sin()).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 5.0).collect();
        assert!(split_rhat(&[&a, &b]).unwrap() > 1.5);
    }

    #[test]
    fn constant_draws_are_undefined() {
        let a = vec![1.0; 100];
        assert!(split_rhat(&[&a, &a]).is_none());
        assert!(effective_sample_size(&[&a]).is_none());
    }
}
