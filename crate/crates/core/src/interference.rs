//! Pairwise and aggregate LOS interference under maximum-ratio combining.
//!
//! Two independent routes compute the same quantity
//! `I = |h_ℓᴴ h_k|² / M`:
//!
//! * the direct route builds both channel vectors and takes their Hermitian
//!   inner product;
//! * the closed route expands each product of sincs with
//!   `sin x sin y = ½[cos(x - y) - cos(x + y)]` and sums
//!   `N_m / D_m` over the element indices, where
//!   `N_m = (A/2)[cos(s·D̃Δ) - cos(s(2m - D̃Δ̃))]` and
//!   `D_m = s²[m(m - D̃Δ̃) + D̃² φ̃_ℓ φ̃_k]` with `s = π` for the normalized
//!   sinc and `s = 1` otherwise.
//!
//! The mainlobe (effective) approximation keeps an interferer only when its
//! normalized separation `Θ = D̃(φ̃_ℓ - φ̃_k)` satisfies `|Θ| ≤ 1`.

use serde::Serialize;

use crate::array_model::{
    array_response, check_spatial_freq, cos_pi, sinc, ChannelVector, LensArrayConfig,
    SincConvention,
};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Parallelism};

/// Powers below this are clamped before conversion to dB.
pub const DB_FLOOR: f64 = 1e-300;

/// Closed-form terms whose sinc argument `m - D̃φ̃` is closer to zero than
/// this are evaluated as a direct sinc product.
const CLOSED_FORM_FALLBACK: f64 = 1e-4;

/// Relative power below which a local minimum of the pattern counts as a null.
const NULL_FLOOR: f64 = 1e-12;

/// Pattern scan resolution, in samples per `1/D̃`.
const SCAN_DENSITY: f64 = 256.0;

pub fn power_db(power_linear: f64) -> f64 {
    10.0 * power_linear.max(DB_FLOOR).log10()
}

/// Two spatial frequencies and their separations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngularPair {
    pub phi_tilde_l: f64,
    pub phi_tilde_k: f64,
    /// `Δ = φ̃_ℓ - φ̃_k`
    pub delta: f64,
    /// `Δ̃ = φ̃_ℓ + φ̃_k`
    pub delta_sum: f64,
    /// `Θ = D̃Δ`
    pub theta_norm: f64,
    /// `Θ̃ = D̃Δ̃`
    pub theta_sum_norm: f64,
}

impl AngularPair {
    pub fn new(d_tilde: f64, phi_tilde_l: f64, phi_tilde_k: f64) -> Result<Self> {
        check_spatial_freq(phi_tilde_l)?;
        check_spatial_freq(phi_tilde_k)?;
        let delta = phi_tilde_l - phi_tilde_k;
        let delta_sum = phi_tilde_l + phi_tilde_k;
        Ok(Self {
            phi_tilde_l,
            phi_tilde_k,
            delta,
            delta_sum,
            theta_norm: d_tilde * delta,
            theta_sum_norm: d_tilde * delta_sum,
        })
    }

    /// Whether the interferer falls inside the mainlobe, `|Θ| ≤ 1`.
    pub fn is_effective(&self) -> bool {
        self.theta_norm.abs() <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterferenceSample {
    pub pair: AngularPair,
    pub power_linear: f64,
    pub power_db: f64,
    pub effective: bool,
}

impl InterferenceSample {
    fn new(pair: AngularPair, power_linear: f64) -> Self {
        Self {
            pair,
            power_linear,
            power_db: power_db(power_linear),
            effective: pair.is_effective(),
        }
    }
}

fn normalized_power(config: &LensArrayConfig, amplitude_sq: f64) -> f64 {
    amplitude_sq / config.element_count() as f64
}

fn direct_from_channels(config: &LensArrayConfig, l: &ChannelVector, k: &ChannelVector) -> f64 {
    normalized_power(config, l.inner(k).norm_sqr())
}

/// `(1/M)|h_ℓᴴ h_k|²` from explicit channel vectors.
pub fn pairwise_interference_direct(
    config: &LensArrayConfig,
    phi_tilde_l: f64,
    phi_tilde_k: f64,
) -> Result<f64> {
    let hl = array_response(config, phi_tilde_l)?;
    let hk = array_response(config, phi_tilde_k)?;
    Ok(direct_from_channels(config, &hl, &hk))
}

/// Sum of `N_m / D_m` over the element indices. `numerator_factor` is the
/// `½` of the product-to-sum identity; the self-check perturbs it as a
/// negative control.
pub(crate) fn closed_form_amplitude(
    config: &LensArrayConfig,
    pair: &AngularPair,
    numerator_factor: f64,
) -> f64 {
    let conv = config.convention();
    let s = conv.scale();
    let a_gain = config.aperture();
    let d = config.d_tilde();
    let a = d * pair.phi_tilde_l;
    let b = d * pair.phi_tilde_k;
    let cross = d * d * pair.phi_tilde_l * pair.phi_tilde_k;

    let cos_scaled = |x: f64| match conv {
        SincConvention::Normalized => cos_pi(x),
        SincConvention::Unnormalized => x.cos(),
    };
    let diff_term = cos_scaled(pair.theta_norm);

    config
        .indices()
        .map(|m| {
            let mf = m as f64;
            if (mf - a).abs() < CLOSED_FORM_FALLBACK || (mf - b).abs() < CLOSED_FORM_FALLBACK {
                return a_gain * sinc(mf - a, conv) * sinc(mf - b, conv);
            }
            let numerator = numerator_factor
                * a_gain
                * (diff_term - cos_scaled(2.0 * mf - pair.theta_sum_norm));
            let denominator = s * s * (mf * (mf - pair.theta_sum_norm) + cross);
            numerator / denominator
        })
        .sum()
}

/// Term-by-term trigonometric closed form of the pairwise interference.
pub fn pairwise_interference_closed(
    config: &LensArrayConfig,
    phi_tilde_l: f64,
    phi_tilde_k: f64,
) -> Result<f64> {
    let pair = AngularPair::new(config.d_tilde(), phi_tilde_l, phi_tilde_k)?;
    let amp = closed_form_amplitude(config, &pair, 0.5);
    Ok(normalized_power(config, amp * amp))
}

/// Mainlobe-gated interference: the full pairwise value when `|Θ| ≤ 1`,
/// zero otherwise.
pub fn effective_interference(
    config: &LensArrayConfig,
    phi_tilde_l: f64,
    phi_tilde_k: f64,
) -> Result<InterferenceSample> {
    let pair = AngularPair::new(config.d_tilde(), phi_tilde_l, phi_tilde_k)?;
    let power = if pair.is_effective() {
        pairwise_interference_direct(config, phi_tilde_l, phi_tilde_k)?
    } else {
        0.0
    };
    Ok(InterferenceSample::new(pair, power))
}

/// Row-major `L × L` matrix of pairwise interference values. The diagonal
/// holds each user's own combined signal power.
pub fn interference_matrix(config: &LensArrayConfig, spatial_freqs: &[f64]) -> Result<Vec<f64>> {
    let channels = spatial_freqs
        .iter()
        .map(|&phi| array_response(config, phi))
        .collect::<Result<Vec<_>>>()?;
    let n = channels.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let p = direct_from_channels(config, &channels[i], &channels[j]);
            out[i * n + j] = p;
            out[j * n + i] = p;
        }
    }
    Ok(out)
}

/// Interference at user `index_l` summed over every other user.
pub fn user_total_interference(
    config: &LensArrayConfig,
    index_l: usize,
    spatial_freqs: &[f64],
) -> Result<f64> {
    if spatial_freqs.is_empty() {
        return Err(Error::Empty("user list"));
    }
    if index_l >= spatial_freqs.len() {
        return Err(Error::UserIndex {
            index: index_l,
            count: spatial_freqs.len(),
        });
    }
    let hl = array_response(config, spatial_freqs[index_l])?;
    let mut total = 0.0;
    for (k, &phi) in spatial_freqs.iter().enumerate() {
        if k == index_l {
            continue;
        }
        let hk = array_response(config, phi)?;
        total += direct_from_channels(config, &hl, &hk);
    }
    Ok(total)
}

/// Sum of the per-user totals over all users.
pub fn system_total_interference(config: &LensArrayConfig, spatial_freqs: &[f64]) -> Result<f64> {
    (0..spatial_freqs.len())
        .map(|l| user_total_interference(config, l, spatial_freqs))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternPoint {
    /// Grid separation `δ`; the interferer sits at `φ̃_ℓ - δ`.
    pub delta: f64,
    pub sample: InterferenceSample,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternSeries {
    pub config: LensArrayConfig,
    pub phi_tilde_l: f64,
    pub points: Vec<PatternPoint>,
    /// Grid points dropped because `φ̃_ℓ - δ` left `[-1, 1]`.
    pub skipped: usize,
}

impl PatternSeries {
    /// Point with the largest power; ties resolve to the first.
    pub fn argmax(&self) -> Option<&PatternPoint> {
        self.points.iter().fold(None, |best, p| match best {
            Some(b) if b.sample.power_linear >= p.sample.power_linear => Some(b),
            _ => Some(p),
        })
    }
}

pub fn sweep_pattern(
    config: &LensArrayConfig,
    phi_tilde_l: f64,
    delta_grid: &[f64],
) -> Result<PatternSeries> {
    sweep_pattern_with(config, phi_tilde_l, delta_grid, Parallelism::default())
}

pub fn sweep_pattern_with(
    config: &LensArrayConfig,
    phi_tilde_l: f64,
    delta_grid: &[f64],
    par: Parallelism,
) -> Result<PatternSeries> {
    if delta_grid.is_empty() {
        return Err(Error::Empty("delta grid"));
    }
    if delta_grid.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidGrid("non-finite delta".into()));
    }
    if delta_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid(
            "deltas must be strictly increasing".into(),
        ));
    }
    let hl = array_response(config, phi_tilde_l)?;
    let d = config.d_tilde();

    let evaluated = map_indexed(delta_grid.len(), par, |i| {
        let delta = delta_grid[i];
        let phi_k = phi_tilde_l - delta;
        let pair = AngularPair::new(d, phi_tilde_l, phi_k).ok()?;
        let hk = array_response(config, phi_k).ok()?;
        let power = direct_from_channels(config, &hl, &hk);
        Some(PatternPoint {
            delta,
            sample: InterferenceSample::new(pair, power),
        })
    })?;

    let skipped = evaluated.iter().filter(|p| p.is_none()).count();
    Ok(PatternSeries {
        config: config.clone(),
        phi_tilde_l,
        points: evaluated.into_iter().flatten().collect(),
        skipped,
    })
}

/// Real amplitude `A Σ sinc(m - a) sinc(m - b)`; the common phase cancels in
/// the Hermitian product, so `h_ℓᴴ h_k` is this value exactly.
fn signed_amplitude(config: &LensArrayConfig, phi_tilde_l: f64, phi_tilde_k: f64) -> f64 {
    let conv = config.convention();
    let a = config.d_tilde() * phi_tilde_l;
    let b = config.d_tilde() * phi_tilde_k;
    config.aperture()
        * config
            .indices()
            .map(|m| sinc(m as f64 - a, conv) * sinc(m as f64 - b, conv))
            .sum::<f64>()
}

fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi.abs().max(1e-3) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

fn bisect_sign_change<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest `δ > 0` at which the pattern around `φ̃_ℓ` reaches a null.
///
/// The amplitude is scanned outward from alignment. A sign change is
/// refined by bisection; a local minimum of `|amplitude|` is refined by
/// golden-section search and accepted if its power is below
/// `1e-12` of the aligned peak.
pub fn first_null(config: &LensArrayConfig, phi_tilde_l: f64) -> Result<f64> {
    check_spatial_freq(phi_tilde_l)?;
    let max_delta = (phi_tilde_l + 1.0).min(2.0);
    let amp = |delta: f64| signed_amplitude(config, phi_tilde_l, phi_tilde_l - delta);
    let peak = amp(0.0);
    let step = 1.0 / (config.d_tilde() * SCAN_DENSITY);

    let mut prev2: Option<(f64, f64)> = None;
    let mut prev = (0.0, peak);
    let mut i = 1usize;
    loop {
        let delta = i as f64 * step;
        if delta > max_delta {
            break;
        }
        let value = amp(delta);
        if value == 0.0 {
            return Ok(delta);
        }
        if (value > 0.0) != (prev.1 > 0.0) {
            return Ok(bisect_sign_change(amp, prev.0, delta));
        }
        if let Some(p2) = prev2 {
            if prev.1.abs() < p2.1.abs() && prev.1.abs() <= value.abs() {
                let at = golden_section_min(|x| amp(x).abs(), p2.0, delta);
                let floor = NULL_FLOOR * peak * peak;
                if amp(at).powi(2) <= floor {
                    return Ok(at);
                }
            }
        }
        prev2 = Some(prev);
        prev = (delta, value);
        i += 1;
    }
    Err(Error::NullNotFound { max_delta })
}

/// Mainlobe width, twice the first null offset.
pub fn mainlobe_width(config: &LensArrayConfig, phi_tilde_l: f64) -> Result<f64> {
    Ok(2.0 * first_null(config, phi_tilde_l)?)
}

/// Peak-to-first-sidelobe power ratio in dB of the broadside pattern.
pub fn sidelobe_ratio_db(config: &LensArrayConfig) -> Result<f64> {
    if config.element_count() < 11 {
        return Err(Error::TooFewElements(config.element_count()));
    }
    let power = |delta: f64| signed_amplitude(config, 0.0, -delta).powi(2);
    let null = first_null(config, 0.0)?;
    let step = 1.0 / (config.d_tilde() * SCAN_DENSITY);

    let mut a = (null, power(null));
    let mut b = (null + step, power(null + step));
    let mut i = 2usize;
    loop {
        let delta = null + i as f64 * step;
        if delta > 1.0 {
            return Err(Error::SidelobeNotFound);
        }
        let c = (delta, power(delta));
        if b.1 > a.1 && b.1 >= c.1 {
            let at = golden_section_min(|x| -power(x), a.0, c.0);
            let side = power(at);
            return Ok(10.0 * (power(0.0) / side).log10());
        }
        a = b;
        b = c;
        i += 1;
    }
}
