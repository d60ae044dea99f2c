//! Distributions induced by uniform drops of terminals in a sector.
//!
//! DOAs are i.i.d. uniform on `[-h, h]` (`h = π/3` for a 2π/3 sector). The
//! spatial frequency `Y = sin φ` then has density `1 / (2h √(1 - y²))` on
//! `|y| ≤ sin h`, and the normalized separation `Θ = D̃(Y_ℓ - Y_k)` has
//! density
//!
//! ```text
//! f_Θ(z) = (1/D̃) (1/2h)² ∫ dy / (√(1 - (y + z/D̃)²) √(1 - y²))
//! ```
//!
//! over `y ∈ [max(-s, -s - z/D̃), min(s, s - z/D̃)]`, `s = sin h`.
//! The substitution `y = sin t` absorbs the second square root exactly.
//!
//! Monte Carlo draws come from ChaCha8 streams: sample `i` belongs to batch
//! `i / MC_BATCH`, and batch `b` reads stream `b` of the seeded generator, so
//! estimates are identical for any worker count.

pub mod gof;
pub mod quadrature;

use std::f64::consts::PI;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Parallelism};
use quadrature::{integrate, QuadOptions};

/// Samples per generator stream.
pub const MC_BATCH: usize = 1 << 16;

const INNER_TOL: f64 = 1e-10;
const OUTER_TOL: f64 = 1e-8;

/// Smallest `D̃` accepted by the closed-form effective-interferer probability.
pub const CLOSED_FORM_MIN_D_TILDE: f64 = 2.0;

/// Generator for stream `stream` under `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorModel {
    half_width: f64,
}

impl Default for SectorModel {
    fn default() -> Self {
        Self {
            half_width: PI / 3.0,
        }
    }
}

impl SectorModel {
    pub fn new(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width <= PI / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "sector half width must lie in (0, pi/2], got {half_width}"
            )));
        }
        Ok(Self { half_width })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Edge of the spatial-frequency support, `sin h`.
    pub fn support(&self) -> f64 {
        self.half_width.sin()
    }

    fn uniform(&self) -> Uniform<f64> {
        Uniform::new_inclusive(-self.half_width, self.half_width)
            .expect("half width validated at construction")
    }

    pub fn spatial_freq_pdf(&self, y: f64) -> f64 {
        if !y.is_finite() || y.abs() > self.support() {
            return 0.0;
        }
        1.0 / (2.0 * self.half_width * (1.0 - y * y).sqrt())
    }

    pub fn spatial_freq_cdf(&self, y: f64) -> f64 {
        let s = self.support();
        if y <= -s {
            0.0
        } else if y >= s {
            1.0
        } else {
            (y.asin() + self.half_width) / (2.0 * self.half_width)
        }
    }

    pub fn theta_pdf(&self, z: f64, d_tilde: f64) -> Result<f64> {
        check_d_tilde(d_tilde)?;
        if !z.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "z must be finite, got {z}"
            )));
        }
        let s = self.support();
        let u = z / d_tilde;
        if u.abs() >= 2.0 * s {
            return Ok(0.0);
        }
        let y_lo = (-s).max(-s - u);
        let y_hi = s.min(s - u);
        let inner = integrate(
            |t: f64| {
                let w = t.sin() + u;
                Ok(1.0 / (1.0 - w * w).sqrt())
            },
            y_lo.asin(),
            y_hi.asin(),
            QuadOptions::with_abs_tol(INNER_TOL),
        )?;
        let c = 1.0 / (2.0 * self.half_width);
        Ok(c * c * inner.value / d_tilde)
    }

    /// `P(lo ≤ Θ ≤ hi)` by quadrature of [`theta_pdf`](Self::theta_pdf).
    pub fn theta_interval_probability(
        &self,
        lo: f64,
        hi: f64,
        d_tilde: f64,
        abs_tol: f64,
    ) -> Result<f64> {
        Ok(self
            .theta_integral(lo, hi, d_tilde, abs_tol)?
            .clamp(0.0, 1.0))
    }

    /// Unclamped integral of the Θ density over `[lo, hi]`.
    pub fn theta_integral(&self, lo: f64, hi: f64, d_tilde: f64, abs_tol: f64) -> Result<f64> {
        check_d_tilde(d_tilde)?;
        let edge = 2.0 * self.support() * d_tilde;
        let lo = lo.max(-edge);
        let hi = hi.min(edge);
        if lo >= hi {
            return Ok(0.0);
        }
        let f = |z: f64| self.theta_pdf(z, d_tilde);
        let opts = QuadOptions::with_abs_tol(abs_tol);
        // The density has a kink at zero.
        let value = if lo < 0.0 && hi > 0.0 {
            integrate(f, lo, 0.0, opts)?.value + integrate(f, 0.0, hi, opts)?.value
        } else {
            integrate(f, lo, hi, opts)?.value
        };
        Ok(value)
    }

    pub fn effective_prob_quadrature(&self, d_tilde: f64) -> Result<f64> {
        check_d_tilde(d_tilde)?;
        let reach = (2.0 * self.support() * d_tilde).min(1.0);
        let f = |z: f64| self.theta_pdf(z, d_tilde);
        let half = integrate(f, 0.0, reach, QuadOptions::with_abs_tol(OUTER_TOL / 2.0))?;
        Ok((2.0 * half.value).clamp(0.0, 1.0))
    }

    pub fn sample_doas(&self, seed: u64, count: usize, par: Parallelism) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::InvalidParameter("count must be at least 1".into()));
        }
        let dist = self.uniform();
        let batches = map_indexed(count.div_ceil(MC_BATCH), par, |b| {
            let len = batch_len(count, b);
            let mut rng = substream(seed, b as u64);
            (0..len).map(|_| dist.sample(&mut rng)).collect::<Vec<_>>()
        })?;
        Ok(batches.concat())
    }

    /// Draws `count` independent pairs and returns `Θ = D̃(sin φ_ℓ - sin φ_k)`.
    pub fn theta_samples(
        &self,
        d_tilde: f64,
        count: usize,
        seed: u64,
        par: Parallelism,
    ) -> Result<Vec<f64>> {
        check_d_tilde(d_tilde)?;
        let batches = map_indexed(count.div_ceil(MC_BATCH), par, |b| {
            let mut out = Vec::with_capacity(batch_len(count, b));
            self.for_each_theta(d_tilde, seed, b, count, |t| out.push(t));
            out
        })?;
        Ok(batches.concat())
    }

    pub fn effective_prob_mc(
        &self,
        d_tilde: f64,
        sample_count: usize,
        seed: u64,
        par: Parallelism,
    ) -> Result<ProbEstimate> {
        check_d_tilde(d_tilde)?;
        if sample_count == 0 {
            return Err(Error::InvalidParameter(
                "sample count must be at least 1".into(),
            ));
        }
        let hits = map_indexed(sample_count.div_ceil(MC_BATCH), par, |b| {
            let mut hits = 0u64;
            self.for_each_theta(d_tilde, seed, b, sample_count, |t| {
                if t.abs() <= 1.0 {
                    hits += 1;
                }
            });
            hits
        })?;
        Ok(ProbEstimate::from_counts(
            hits.iter().sum(),
            sample_count,
            seed,
        ))
    }

    fn for_each_theta<F: FnMut(f64)>(
        &self,
        d_tilde: f64,
        seed: u64,
        batch: usize,
        total: usize,
        mut f: F,
    ) {
        let dist = self.uniform();
        let mut rng = substream(seed, batch as u64);
        for _ in 0..batch_len(total, batch) {
            let phi_l: f64 = dist.sample(&mut rng);
            let phi_k: f64 = dist.sample(&mut rng);
            f(d_tilde * (phi_l.sin() - phi_k.sin()));
        }
    }
}

fn batch_len(total: usize, batch: usize) -> usize {
    MC_BATCH.min(total - batch * MC_BATCH)
}

fn check_d_tilde(d_tilde: f64) -> Result<()> {
    if d_tilde.is_finite() && d_tilde > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "d_tilde must be positive and finite, got {d_tilde}"
        )))
    }
}

/// Probability estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbEstimate {
    pub value: f64,
    pub std_error: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl ProbEstimate {
    pub fn from_counts(hits: u64, sample_count: usize, seed: u64) -> Self {
        let n = sample_count as f64;
        let value = hits as f64 / n;
        Self {
            value,
            std_error: (value * (1.0 - value) / n).sqrt(),
            sample_count,
            seed,
        }
    }
}

pub fn spatial_freq_pdf(y: f64) -> f64 {
    SectorModel::default().spatial_freq_pdf(y)
}

pub fn theta_pdf(z: f64, d_tilde: f64) -> Result<f64> {
    SectorModel::default().theta_pdf(z, d_tilde)
}

/// Probability that an interferer falls inside the mainlobe, `∫_{-1}^{1} f_Θ`.
pub fn effective_prob_quadrature(d_tilde: f64) -> Result<f64> {
    SectorModel::default().effective_prob_quadrature(d_tilde)
}

/// Large-array closed form `9 artanh(√3/2) / (π² D̃)`, capped at one.
pub fn effective_prob_closed(d_tilde: f64) -> Result<f64> {
    if !(d_tilde.is_finite() && d_tilde >= CLOSED_FORM_MIN_D_TILDE) {
        return Err(Error::OutsideApproximationRegime(d_tilde));
    }
    let artanh = (3f64.sqrt() / 2.0).atanh();
    Ok((9.0 * artanh / (PI * PI * d_tilde)).min(1.0))
}

pub fn effective_prob_mc(d_tilde: f64, sample_count: usize, seed: u64) -> Result<ProbEstimate> {
    SectorModel::default().effective_prob_mc(d_tilde, sample_count, seed, Parallelism::default())
}

pub fn sample_doas(seed: u64, count: usize) -> Result<Vec<f64>> {
    SectorModel::default().sample_doas(seed, count, Parallelism::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const S: f64 = 0.866_025_403_784_438_6;

    #[test]
    fn spatial_freq_density() {
        assert_relative_eq!(
            spatial_freq_pdf(0.0),
            3.0 / (2.0 * PI),
            max_relative = 1e-15
        );
        assert_relative_eq!(spatial_freq_pdf(0.0), 0.477465, max_relative = 1e-6);
        assert_eq!(spatial_freq_pdf(0.9), 0.0);
        assert_eq!(spatial_freq_pdf(f64::NAN), 0.0);
        // Normalization by quadrature in the angle variable.
        let r = integrate(
            |t: f64| Ok(spatial_freq_pdf(t.sin()) * t.cos()),
            -PI / 3.0,
            PI / 3.0,
            QuadOptions::with_abs_tol(1e-13),
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let m = SectorModel::default();
        assert_eq!(m.spatial_freq_cdf(-1.0), 0.0);
        assert_eq!(m.spatial_freq_cdf(1.0), 1.0);
        assert_relative_eq!(m.spatial_freq_cdf(0.0), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn theta_density_at_origin() {
        // Inner integral ∫ dy/(1 - y²) over [-s, s] is 2 artanh(s).
        let expect = 0.1 * (9.0 / (4.0 * PI * PI)) * 2.0 * S.atanh();
        let v = theta_pdf(0.0, 10.0).unwrap();
        assert_relative_eq!(v, expect, max_relative = 1e-10);
    }

    #[test]
    fn theta_density_support_and_symmetry() {
        assert_eq!(theta_pdf(2.0 * 3f64.sqrt() * 10.0, 10.0).unwrap(), 0.0);
        assert_eq!(theta_pdf(3f64.sqrt() * 10.0 + 1e-9, 10.0).unwrap(), 0.0);
        for i in 0..40 {
            let z = i as f64 * 0.43;
            let a = theta_pdf(z, 10.0).unwrap();
            let b = theta_pdf(-z, 10.0).unwrap();
            assert!((a - b).abs() <= 1e-12, "z={z}");
        }
        assert!(theta_pdf(0.0, 0.0).is_err());
        assert!(theta_pdf(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn theta_density_normalizes() {
        let m = SectorModel::default();
        for d in [2.0, 10.0, 50.0] {
            let total = m.theta_interval_probability(-1e9, 1e9, d, 1e-10).unwrap();
            assert!((total - 1.0).abs() < 1e-6, "d={d}: {total}");
        }
    }

    #[test]
    fn quadrature_probability_values() {
        // Reference values from an independent nested adaptive quadrature
        // (scipy.integrate.quad, 1e-13 tolerances) cross-checked with a
        // 1e7-sample Monte Carlo draw.
        let reference = [
            (5.0, 0.212_285_540_071_501_2),
            (10.0, 0.112_267_384_238_824_18),
            (20.0, 0.057_948_006_057_202_35),
        ];
        for (d, p) in reference {
            let v = effective_prob_quadrature(d).unwrap();
            assert!((v - p).abs() < 1e-8, "d={d}: {v} vs {p}");
        }
        let tiny = 1.0 / (2.0 * 3f64.sqrt());
        assert!((effective_prob_quadrature(tiny).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quadrature_probability_nonincreasing() {
        let ps: Vec<f64> = [2.0, 5.0, 10.0, 20.0, 50.0]
            .iter()
            .map(|&d| effective_prob_quadrature(d).unwrap())
            .collect();
        assert!(ps.windows(2).all(|w| w[0] >= w[1]), "{ps:?}");
    }

    #[test]
    fn closed_form_values() {
        assert_relative_eq!(
            effective_prob_closed(10.0).unwrap(),
            0.120_092_159_631_191_64,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            effective_prob_closed(20.0).unwrap(),
            0.060046,
            max_relative = 1e-5
        );
        let k = effective_prob_closed(5.0).unwrap() * 5.0;
        for d in [10.0, 20.0, 50.0] {
            assert_relative_eq!(
                effective_prob_closed(d).unwrap() * d,
                k,
                max_relative = 1e-14
            );
        }
        assert_eq!(
            effective_prob_closed(1.0),
            Err(Error::OutsideApproximationRegime(1.0))
        );
        assert!(effective_prob_closed(2.0).is_ok());
    }

    #[test]
    fn closed_form_gap_shrinks_with_aperture() {
        let gaps: Vec<f64> = [5.0, 10.0, 20.0, 40.0]
            .iter()
            .map(|&d| {
                (effective_prob_quadrature(d).unwrap() - effective_prob_closed(d).unwrap()).abs()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[0] > w[1]), "{gaps:?}");
    }

    #[test]
    fn monte_carlo_matches_quadrature() {
        for d in [5.0, 10.0] {
            let est = effective_prob_mc(d, 400_000, 3).unwrap();
            let q = effective_prob_quadrature(d).unwrap();
            assert!(
                (est.value - q).abs() <= 3.0 * est.std_error,
                "{est:?} vs {q}"
            );
            assert_eq!(est.sample_count, 400_000);
            assert_relative_eq!(
                est.std_error,
                (est.value * (1.0 - est.value) / 400_000.0).sqrt()
            );
        }
    }

    #[test]
    fn monte_carlo_small_aperture_is_certain() {
        let est = effective_prob_mc(1.0 / (2.0 * 3f64.sqrt()), 10_000, 9).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn monte_carlo_is_independent_of_workers() {
        let m = SectorModel::default();
        let n = 3 * MC_BATCH + 17;
        let a = m
            .effective_prob_mc(10.0, n, 7, Parallelism::Serial)
            .unwrap();
        let b = m
            .effective_prob_mc(10.0, n, 7, Parallelism::from_threads(Some(4)))
            .unwrap();
        let c = m.effective_prob_mc(10.0, n, 7, Parallelism::Auto).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(m
            .effective_prob_mc(10.0, 0, 7, Parallelism::Serial)
            .is_err());
    }

    #[test]
    fn doa_samples() {
        let h = PI / 3.0;
        let n = 1_000_000;
        let xs = sample_doas(5, n).unwrap();
        assert_eq!(xs.len(), n);
        assert!(xs.iter().all(|x| (-h..=h).contains(x)));
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() <= 3.0 * h / (3.0 * n as f64).sqrt());
        assert_eq!(xs, sample_doas(5, n).unwrap());
        let serial = SectorModel::default()
            .sample_doas(5, n, Parallelism::Serial)
            .unwrap();
        assert_eq!(xs, serial);
        assert!(sample_doas(5, 0).is_err());
    }

    #[test]
    fn spatial_frequency_histogram_matches_density() {
        let m = SectorModel::default();
        let xs = sample_doas(17, 1_000_000).unwrap();
        let bins = 40;
        let edges: Vec<f64> = (0..=bins)
            .map(|i| -S + 2.0 * S * i as f64 / bins as f64)
            .collect();
        let mut counts = vec![0u64; bins];
        for x in &xs {
            let y = x.sin();
            let i = (((y + S) / (2.0 * S)) * bins as f64).floor() as usize;
            counts[i.min(bins - 1)] += 1;
        }
        let probs: Vec<f64> = edges
            .windows(2)
            .map(|w| m.spatial_freq_cdf(w[1]) - m.spatial_freq_cdf(w[0]))
            .collect();
        let r = gof::chi_square_gof(&counts, &probs).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
    }

    #[test]
    fn sector_validation() {
        assert!(SectorModel::new(0.0).is_err());
        assert!(SectorModel::new(2.0).is_err());
        let narrow = SectorModel::new(PI / 6.0).unwrap();
        assert_relative_eq!(narrow.support(), 0.5, max_relative = 1e-15);
        let est = narrow
            .effective_prob_mc(10.0, 200_000, 1, Parallelism::Auto)
            .unwrap();
        let q = narrow.effective_prob_quadrature(10.0).unwrap();
        assert!((est.value - q).abs() <= 3.0 * est.std_error);
    }
}
