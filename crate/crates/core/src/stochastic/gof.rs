//! Pearson χ² goodness-of-fit for binned Monte Carlo samples.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Minimum expected count per bin; sparser adjacent bins are merged.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GofResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub bins_used: usize,
}

/// Tests observed bin counts against expected bin probabilities.
pub fn chi_square_gof(observed: &[u64], expected_prob: &[f64]) -> Result<GofResult> {
    if observed.len() != expected_prob.len() {
        return Err(Error::InvalidParameter(format!(
            "{} observed bins but {} expected probabilities",
            observed.len(),
            expected_prob.len()
        )));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::Empty("observations"));
    }
    let n = n as f64;

    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected_prob) {
        acc.0 += o as f64;
        acc.1 += n * p;
        if acc.1 >= MIN_EXPECTED {
            merged.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 > 0.0 || acc.1 > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => merged.push(acc),
        }
    }
    if merged.len() < 2 {
        return Err(Error::InvalidParameter(
            "fewer than two bins after merging sparse bins".into(),
        ));
    }

    let statistic: f64 = merged.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = merged.len() - 1;
    let dist = ChiSquared::new(dof as f64)
        .map_err(|e| Error::InvalidParameter(format!("chi-squared: {e}")))?;
    Ok(GofResult {
        statistic,
        degrees_of_freedom: dof,
        p_value: dist.sf(statistic),
        bins_used: merged.len(),
    })
}

/// Counts samples into the bins delimited by ascending `edges`; samples
/// outside `[edges[0], edges[last]]` are dropped.
pub fn histogram(samples: &[f64], edges: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; edges.len().saturating_sub(1)];
    if counts.is_empty() {
        return counts;
    }
    let last = edges[edges.len() - 1];
    let top = counts.len() - 1;
    for &x in samples {
        if x < edges[0] || x > last {
            continue;
        }
        let i = edges.partition_point(|&e| e <= x);
        counts[i.saturating_sub(1).min(top)] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_has_p_one() {
        let r = chi_square_gof(&[250, 250, 250, 250], &[0.25; 4]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.degrees_of_freedom, 3);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gross_misfit_is_rejected() {
        let r = chi_square_gof(&[900, 100], &[0.5, 0.5]).unwrap();
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn known_statistic() {
        // (60-50)²/50 + (40-50)²/50 = 4, χ²₁ survival at 4 ≈ 0.0455
        let r = chi_square_gof(&[60, 40], &[0.5, 0.5]).unwrap();
        assert!((r.statistic - 4.0).abs() < 1e-12);
        assert!((r.p_value - 0.045_500_263_896_358_4).abs() < 1e-9);
    }

    #[test]
    fn sparse_bins_merge() {
        let r = chi_square_gof(&[1, 49, 48, 2], &[0.01, 0.49, 0.48, 0.02]).unwrap();
        assert_eq!(r.bins_used, 2);
        assert!(chi_square_gof(&[1, 2], &[0.5]).is_err());
        assert!(chi_square_gof(&[0, 0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn histogram_bins() {
        let c = histogram(&[-1.0, 0.0, 0.1, 0.5, 0.99, 1.0, 2.0], &[0.0, 0.5, 1.0]);
        assert_eq!(c, vec![2, 3]);
    }
}
