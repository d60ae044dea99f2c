//! Oracle-equivalence and invariant checks run by `lensint selfcheck`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array_model::LensArrayConfig;
use crate::error::Result;
use crate::exec::Parallelism;
use crate::harness::{run_scenario_with, ScenarioConfig};
use crate::interference::{
    closed_form_amplitude, first_null, pairwise_interference_direct, sidelobe_ratio_db,
    sweep_pattern_with, AngularPair,
};
use crate::stochastic::gof::{chi_square_gof, histogram};
use crate::stochastic::{effective_prob_closed, SectorModel};

const SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SelfCheckOptions {
    /// Negative control: perturbs the ½ of the product-to-sum identity so
    /// the closed-form equivalence check must fail.
    pub corrupt_closed_form: bool,
    pub parallelism: Parallelism,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn(&SelfCheckOptions) -> Result<(bool, String)>;

const CHECKS: [(&str, Check); 12] = [
    ("closed_form_equivalence", closed_form_equivalence),
    ("grid_orthogonality", grid_orthogonality),
    ("pairwise_symmetry", pairwise_symmetry),
    ("pattern_peak_at_alignment", pattern_peak),
    ("first_null_near_inverse_aperture", first_null_check),
    ("sidelobe_ratio_13db", sidelobe_check),
    ("theta_density_normalization", density_normalization),
    ("theta_histogram_chi_square", theta_histogram),
    ("monte_carlo_vs_quadrature", mc_vs_quadrature),
    ("closed_form_gap_shrinks", closed_gap_shrinks),
    ("monte_carlo_worker_independence", mc_worker_independence),
    ("scenario_additivity_audit", scenario_audit),
];

pub fn run_selfcheck(opts: &SelfCheckOptions) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let (passed, detail) = match check(opts) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome {
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    if a.abs() < 1e-6 || b.abs() < 1e-6 {
        (a - b).abs() <= 1e-12
    } else {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
    }
}

fn closed_form_equivalence(opts: &SelfCheckOptions) -> Result<(bool, String)> {
    let factor = if opts.corrupt_closed_form { 0.51 } else { 0.5 };
    let s = 3f64.sqrt() / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = 0usize;
    let mut total = 0usize;
    for d in [5.0, 10.0, 20.0] {
        let config = LensArrayConfig::new(d, 1.0)?;
        for _ in 0..3334 {
            let l = rng.random_range(-s..=s);
            let k = rng.random_range(-s..=s);
            let pair = AngularPair::new(d, l, k)?;
            let amp = closed_form_amplitude(&config, &pair, factor);
            let closed = amp * amp / config.element_count() as f64;
            let direct = pairwise_interference_direct(&config, l, k)?;
            total += 1;
            if !close(closed, direct) {
                failures += 1;
            }
        }
    }
    Ok((failures == 0, format!("{failures}/{total} pairs disagree")))
}

fn grid_orthogonality(_: &SelfCheckOptions) -> Result<(bool, String)> {
    let config = LensArrayConfig::new(10.0, 1.0)?;
    let mut worst: f64 = 0.0;
    for p in -10..=10 {
        for q in (-10..=10).filter(|&q| q != p) {
            worst = worst.max(pairwise_interference_direct(
                &config,
                p as f64 / 10.0,
                q as f64 / 10.0,
            )?);
        }
    }
    Ok((worst == 0.0, format!("max off-grid power {worst:e}")))
}

fn pairwise_symmetry(_: &SelfCheckOptions) -> Result<(bool, String)> {
    let config = LensArrayConfig::new(12.5, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut bad = 0;
    for _ in 0..1000 {
        let l = rng.random_range(-1.0..=1.0);
        let k = rng.random_range(-1.0..=1.0);
        let v = pairwise_interference_direct(&config, l, k)?;
        if !close(v, pairwise_interference_direct(&config, k, l)?)
            || !close(v, pairwise_interference_direct(&config, -l, -k)?)
        {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad}/1000 asymmetric pairs")))
}

fn pattern_peak(opts: &SelfCheckOptions) -> Result<(bool, String)> {
    let config = LensArrayConfig::new(20.0, 1.0)?;
    let grid: Vec<f64> = (0..2001).map(|i| -0.5 + i as f64 / 2000.0).collect();
    let series = sweep_pattern_with(&config, 0.0, &grid, opts.parallelism)?;
    let at = series.argmax().map(|p| p.delta).unwrap_or(f64::NAN);
    Ok((at == 0.0, format!("argmax at delta = {at}")))
}

fn first_null_check(_: &SelfCheckOptions) -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [10.0, 20.0] {
        let null = first_null(&LensArrayConfig::new(d, 1.0)?, 0.0)?;
        ok &= (null - 1.0 / d).abs() <= 0.1 / d;
        parts.push(format!("D={d}: {null:.6}"));
    }
    Ok((ok, parts.join(", ")))
}

fn sidelobe_check(_: &SelfCheckOptions) -> Result<(bool, String)> {
    let r = sidelobe_ratio_db(&LensArrayConfig::new(20.0, 1.0)?)?;
    Ok(((12.5..=14.0).contains(&r), format!("{r:.4} dB")))
}

fn density_normalization(_: &SelfCheckOptions) -> Result<(bool, String)> {
    let sector = SectorModel::default();
    let mut worst: f64 = 0.0;
    for d in [2.0, 10.0, 50.0] {
        let total = sector.theta_integral(f64::MIN, f64::MAX, d, 1e-10)?;
        worst = worst.max((total - 1.0).abs());
    }
    Ok((worst <= 1e-6, format!("max |integral - 1| = {worst:e}")))
}

/// Equal-width bins over the support of Θ and their quadrature probabilities.
pub fn theta_bins(sector: &SectorModel, d_tilde: f64, bins: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let edge = 2.0 * sector.support() * d_tilde;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| -edge + 2.0 * edge * i as f64 / bins as f64)
        .collect();
    let probs = edges
        .windows(2)
        .map(|w| sector.theta_interval_probability(w[0], w[1], d_tilde, 1e-11))
        .collect::<Result<Vec<_>>>()?;
    Ok((edges, probs))
}

fn theta_histogram(opts: &SelfCheckOptions) -> Result<(bool, String)> {
    let sector = SectorModel::default();
    let d = 10.0;
    let (edges, probs) = theta_bins(&sector, d, 50)?;
    let samples = sector.theta_samples(d, 200_000, SEED, opts.parallelism)?;
    let r = chi_square_gof(&histogram(&samples, &edges), &probs)?;
    Ok((
        r.p_value > 0.01,
        format!(
            "chi2 = {:.2}, dof = {}, p = {:.4}",
            r.statistic, r.degrees_of_freedom, r.p_value
        ),
    ))
}

fn mc_vs_quadrature(opts: &SelfCheckOptions) -> Result<(bool, String)> {
    let sector = SectorModel::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [5.0, 10.0, 20.0] {
        let q = sector.effective_prob_quadrature(d)?;
        let est = sector.effective_prob_mc(d, 200_000, SEED, opts.parallelism)?;
        let z = (est.value - q) / est.std_error;
        ok &= z.abs() <= 3.0;
        parts.push(format!("D={d}: z={z:+.2}"));
    }
    Ok((ok, parts.join(", ")))
}

fn closed_gap_shrinks(_: &SelfCheckOptions) -> Result<(bool, String)> {
    let sector = SectorModel::default();
    let gaps = [5.0, 10.0, 20.0, 40.0]
        .iter()
        .map(|&d| Ok((sector.effective_prob_quadrature(d)? - effective_prob_closed(d)?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let ok = gaps.windows(2).all(|w| w[0] > w[1]);
    let shown: Vec<String> = gaps.iter().map(|g| format!("{g:.2e}")).collect();
    Ok((ok, format!("gaps {}", shown.join(" > "))))
}

fn mc_worker_independence(_: &SelfCheckOptions) -> Result<(bool, String)> {
    let sector = SectorModel::default();
    let n = 300_001;
    let a = sector.effective_prob_mc(10.0, n, SEED, Parallelism::Serial)?;
    let b = sector.effective_prob_mc(10.0, n, SEED, Parallelism::from_threads(Some(3)))?;
    Ok((
        a == b,
        format!("serial {} vs 3 workers {}", a.value, b.value),
    ))
}

fn scenario_audit(opts: &SelfCheckOptions) -> Result<(bool, String)> {
    let config = ScenarioConfig::new(LensArrayConfig::new(10.0, 1.0)?, 8, 1000, SEED)?;
    let r = run_scenario_with(&config, opts.parallelism)?;
    let bounded = r
        .trials
        .iter()
        .all(|t| t.effective.iter().zip(&t.exact).all(|(e, x)| e <= x));
    let s = &r.summary;
    Ok((
        bounded && s.audit_max_rel_error <= 1e-9 && s.audited_trials == 10,
        format!(
            "{} audited trials, max gap {:e}",
            s.audited_trials, s.audit_max_rel_error
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_constant_is_caught() {
        let opts = SelfCheckOptions {
            corrupt_closed_form: true,
            ..Default::default()
        };
        let (ok, _) = closed_form_equivalence(&opts).unwrap();
        assert!(!ok);
        let (ok, _) = closed_form_equivalence(&SelfCheckOptions::default()).unwrap();
        assert!(ok);
    }
}
