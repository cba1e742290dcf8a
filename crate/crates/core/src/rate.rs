//! The nonlinear amplitude channel carried by the information branch.
//!
//! A transmit power `s` drawn from a distribution on `[0, A2]` maps through
//! the harvesting nonlinearity to an output amplitude `x = g(s)` (in √W,
//! the square root of the harvested power), which is observed in additive
//! white Gaussian noise: `y = x + n`. This module provides the map `g`, three
//! transmit-distribution variants with CDF evaluation and inverse-CDF
//! sampling, an entropy-power lower bound on the information rate evaluated
//! by change-of-variables quadrature, and closed forms for the variants that
//! admit them.

use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::eh::{harvested_power_closed_form, EhModelParams};
use crate::numerics::adaptive_simpson;
use crate::{Error, Result};

/// Channel parameters for rate evaluation.
#[derive(Debug, Clone, Copy)]
pub struct RateConfig {
    /// Peak transmit power bound, W.
    pub a2: f64,
    /// Noise variance at the amplitude readout, W (variance of `n` in x-units²).
    pub sigma2: f64,
    /// Channel gain in (0, 1].
    pub h: f64,
    /// Ambient photocurrent, A.
    pub pa: f64,
    /// Harvesting model providing the nonlinearity.
    pub eh: EhModelParams,
    /// Spectral responsivity, A/W.
    pub r0: f64,
}

impl RateConfig {
    /// Builds and validates a channel configuration.
    pub fn new(eh: EhModelParams, r0: f64, h: f64, pa: f64, a2: f64, sigma2: f64) -> Result<Self> {
        let cfg = Self { a2, sigma2, h, pa, eh, r0 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks field ranges. The peak power may be zero (degenerate channel,
    /// zero rate); distribution construction additionally requires it to be
    /// positive.
    pub fn validate(&self) -> Result<()> {
        if !(self.a2 >= 0.0 && self.a2.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "peak power must be nonnegative and finite, got {} W",
                self.a2
            )));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise variance must be nonnegative and finite, got {}",
                self.sigma2
            )));
        }
        if !(self.h > 0.0 && self.h <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "channel gain must lie in (0, 1], got {}",
                self.h
            )));
        }
        if !(self.pa >= 0.0 && self.pa.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ambient photocurrent must be nonnegative, got {} A",
                self.pa
            )));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "responsivity must be positive, got {} A/W",
                self.r0
            )));
        }
        Ok(())
    }

    /// Output amplitude `g(s) = sqrt(P_harv(h*s, pa))` in √W.
    ///
    /// Errors outside the transmit range `[0, A2]`.
    pub fn output_amplitude(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s <= self.a2) {
            return Err(Error::Domain(format!(
                "transmit power {s} W outside [0, {} W]",
                self.a2
            )));
        }
        Ok(self.amp_and_slope(s)?.0)
    }

    /// Slope of the amplitude map, `g'(s)` in √W per W.
    pub fn output_amplitude_derivative(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s <= self.a2) {
            return Err(Error::Domain(format!(
                "transmit power {s} W outside [0, {} W]",
                self.a2
            )));
        }
        Ok(self.amp_and_slope(s)?.1)
    }

    /// Amplitude and slope from one closed-form evaluation:
    /// `g = sqrt(RL) * i_EH` and `g' = sqrt(RL) * r0 * h / (1 + W)`.
    fn amp_and_slope(&self, s: f64) -> Result<(f64, f64)> {
        let sol = harvested_power_closed_form(&self.eh, self.r0, self.h * s, self.pa)?;
        let sqrt_rl = self.eh.circuit.rl.sqrt();
        let x = sqrt_rl * sol.i;
        let dx = sqrt_rl * self.r0 * self.h / (1.0 + sol.w);
        Ok((x, dx))
    }

    /// Harvested power `g(s)^2` in W.
    fn harvested_power_at(&self, s: f64) -> Result<f64> {
        let sol = harvested_power_closed_form(&self.eh, self.r0, self.h * s, self.pa)?;
        Ok(sol.power)
    }
}

/// Which transmit distribution shapes the symbols on `[0, A2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    /// Output amplitude `x = g(s)` uniform on `[g(0), g(A2)]` — the
    /// entropy-power-optimal choice.
    AmplitudeUniform,
    /// CDF proportional to harvested power: `F(s) ∝ P_harv(h*s, pa) - P_harv(0, pa)`.
    PowerProportional,
    /// Transmit power `s` itself uniform on `[0, A2]`.
    UniformS,
}

/// One transmitted/received symbol of the simulated channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample {
    /// Transmit power, W.
    pub s: f64,
    /// Noise-free output amplitude, √W.
    pub x: f64,
    /// Additive Gaussian noise draw, √W.
    pub n: f64,
    /// Observed amplitude `x + n`, √W.
    pub y: f64,
}

/// A transmit distribution bound to a channel configuration, with the
/// amplitude/power anchors at `s = 0` and `s = A2` precomputed.
#[derive(Debug, Clone)]
pub struct TransmitDistribution {
    pub kind: DistributionKind,
    pub config: RateConfig,
    x0: f64,
    xa: f64,
    p0: f64,
    pa_pow: f64,
}

/// Stop when the CDF value brackets the target this tightly.
const INVERSE_CDF_TOL: f64 = 1e-12;
const INVERSE_CDF_MAX_ITER: usize = 200;
/// Entropy quadrature: total absolute tolerance in nats and evaluation budget.
const ENTROPY_ABS_TOL: f64 = 1e-6;
const ENTROPY_MAX_EVALS: usize = 1_000_000;
/// Segment boundaries (fractions of `A2`) splitting off the low-power region
/// where the amplitude slope is nearly constant, so each adaptive pass works
/// on a single scale.
const ENTROPY_SEGMENTS: [f64; 11] = [
    0.0, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.25, 0.5, 1.0,
];

impl TransmitDistribution {
    /// Binds a distribution variant to a configuration with `A2 > 0`.
    pub fn new(kind: DistributionKind, config: RateConfig) -> Result<Self> {
        config.validate()?;
        if !(config.a2 > 0.0) {
            return Err(Error::InvalidInput(
                "transmit distributions need a positive peak power".into(),
            ));
        }
        let (x0, _) = config.amp_and_slope(0.0)?;
        let (xa, _) = config.amp_and_slope(config.a2)?;
        if !(xa > x0) {
            return Err(Error::InvalidInput(format!(
                "amplitude range [{x0}, {xa}] is degenerate"
            )));
        }
        let p0 = x0 * x0;
        let pa_pow = xa * xa;
        Ok(Self { kind, config, x0, xa, p0, pa_pow })
    }

    /// Lowest and highest output amplitudes `[g(0), g(A2)]`, √W.
    pub fn amplitude_range(&self) -> (f64, f64) {
        (self.x0, self.xa)
    }

    /// Cumulative distribution of the transmit power; total on the reals,
    /// zero below 0 and one above `A2`.
    pub fn cdf(&self, s: f64) -> f64 {
        if s.is_nan() {
            return f64::NAN;
        }
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.config.a2 {
            return 1.0;
        }
        let f = match self.kind {
            DistributionKind::AmplitudeUniform => {
                let (x, _) = self.amp_and_slope_lossy(s);
                (x - self.x0) / (self.xa - self.x0)
            }
            DistributionKind::PowerProportional => {
                let (x, _) = self.amp_and_slope_lossy(s);
                (x * x - self.p0) / (self.pa_pow - self.p0)
            }
            DistributionKind::UniformS => s / self.config.a2,
        };
        f.clamp(0.0, 1.0)
    }

    /// Probability density of the transmit power; zero outside `(0, A2]`.
    pub fn pdf(&self, s: f64) -> f64 {
        if !(s > 0.0 && s <= self.config.a2) {
            return 0.0;
        }
        let (x, dx) = self.amp_and_slope_lossy(s);
        match self.kind {
            DistributionKind::AmplitudeUniform => dx / (self.xa - self.x0),
            DistributionKind::PowerProportional => 2.0 * x * dx / (self.pa_pow - self.p0),
            DistributionKind::UniformS => 1.0 / self.config.a2,
        }
    }

    /// `g` and `g'` with errors surfaced as NaN, for use inside closures that
    /// must return plain floats; callers check finiteness of their results.
    fn amp_and_slope_lossy(&self, s: f64) -> (f64, f64) {
        self.config
            .amp_and_slope(s)
            .unwrap_or((f64::NAN, f64::NAN))
    }

    /// Inverse-CDF sample: returns `s` with `|F(s) - u| <= 1e-12` by
    /// bisection on the monotone CDF. Deterministic given `u`.
    pub fn sample(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0 && u <= 1.0) {
            return Err(Error::Domain(format!(
                "uniform variate {u} outside [0, 1]"
            )));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(self.config.a2);
        }
        let mut lo = 0.0;
        let mut hi = self.config.a2;
        let mut mid = 0.5 * hi;
        for _ in 0..INVERSE_CDF_MAX_ITER {
            mid = 0.5 * (lo + hi);
            let f = self.cdf(mid);
            if (f - u).abs() <= INVERSE_CDF_TOL {
                return Ok(mid);
            }
            if f < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(mid)
    }

    /// Entropy-power lower bound on the information rate in nats per channel
    /// use, with the output-amplitude entropy evaluated by segmented adaptive
    /// quadrature (absolute tolerance 1e-6 nats).
    pub fn achievable_rate(&self) -> Result<f64> {
        if !(self.config.sigma2 > 0.0) {
            return Err(Error::InvalidInput(
                "rate evaluation needs a positive noise variance".into(),
            ));
        }
        let h_x = self.entropy_of_output_amplitude()?;
        Ok(rate_from_entropy(h_x, self.config.sigma2))
    }

    /// Differential entropy of `x = g(s)` in nats, by change of variables:
    /// `h(X) = -∫ f_s(s) ln(f_s(s)/g'(s)) ds`.
    pub fn entropy_of_output_amplitude(&self) -> Result<f64> {
        let a2 = self.config.a2;
        let segments = ENTROPY_SEGMENTS.len() - 1;
        let seg_tol = ENTROPY_ABS_TOL / segments as f64;
        let seg_budget = ENTROPY_MAX_EVALS / segments;
        let mut total = 0.0;
        for w in ENTROPY_SEGMENTS.windows(2) {
            let (a, b) = (w[0] * a2, w[1] * a2);
            let piece = adaptive_simpson(
                |s| self.entropy_integrand(s),
                a,
                b,
                seg_tol,
                seg_budget,
            )
            .map_err(|e| {
                Error::Quadrature(format!(
                    "entropy integral failed on [{a:e}, {b:e}] W: {e}"
                ))
            })?;
            total += piece;
        }
        if !total.is_finite() {
            return Err(Error::Quadrature(format!(
                "entropy integral is not finite ({total})"
            )));
        }
        Ok(-total)
    }

    /// Integrand `f_s(s) * ln(f_s(s)/g'(s))`, continued by 0 where the
    /// density vanishes (the integrable `0·ln 0` endpoint).
    fn entropy_integrand(&self, s: f64) -> f64 {
        let f = self.pdf(s);
        if f <= 0.0 {
            return if f == 0.0 { 0.0 } else { f64::NAN };
        }
        let (_, dx) = self.amp_and_slope_lossy(s);
        f * (f / dx).ln()
    }

    /// Draws the channel symbol at one stream index. The result depends only
    /// on `(seed, index)`: every index keys its own counter-derived generator
    /// stream, so sequences are reproducible under any parallel chunking.
    pub fn simulate_symbol(&self, index: usize, seed: u64) -> Result<ChannelSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let u: f64 = rng.gen();
        let s = self.sample(u)?;
        let (x, _) = self.config.amp_and_slope(s)?;
        let n = if self.config.sigma2 > 0.0 {
            let sigma = self.config.sigma2.sqrt();
            let gaussian = Normal::new(0.0, sigma).map_err(|e| {
                Error::InvalidInput(format!("bad noise deviation {sigma}: {e}"))
            })?;
            gaussian.sample(&mut rng)
        } else {
            0.0
        };
        Ok(ChannelSample { s, x, n, y: x + n })
    }

    /// Draws `count` channel symbols sequentially (see [`Self::simulate_symbol`]).
    pub fn simulate_channel(&self, count: usize, seed: u64) -> Result<Vec<ChannelSample>> {
        if count == 0 {
            return Err(Error::InvalidInput(
                "channel simulation needs at least one symbol".into(),
            ));
        }
        (0..count).map(|idx| self.simulate_symbol(idx, seed)).collect()
    }
}

/// `½ ln(1 + e^{2 h_X} / (2πe σ²))`, computed in log space when the ratio
/// overflows.
fn rate_from_entropy(h_x: f64, sigma2: f64) -> f64 {
    let log_ratio = 2.0 * h_x - (2.0 * PI * E * sigma2).ln();
    if log_ratio > 700.0 {
        0.5 * log_ratio
    } else {
        0.5 * log_ratio.exp().ln_1p()
    }
}

/// Closed-form maximum of the entropy-power bound, attained by the
/// uniform-amplitude distribution:
/// `½ ln(1 + (g(A2) - g(0))² / (2πe σ²))`.
///
/// A zero peak power yields a degenerate channel and exactly zero rate.
pub fn max_achievable_rate(cfg: &RateConfig) -> Result<f64> {
    cfg.validate()?;
    if !(cfg.sigma2 > 0.0) {
        return Err(Error::InvalidInput(
            "rate evaluation needs a positive noise variance".into(),
        ));
    }
    let (x0, _) = cfg.amp_and_slope(0.0)?;
    let (xa, _) = cfg.amp_and_slope(cfg.a2)?;
    let delta = xa - x0;
    if delta <= 0.0 {
        return Ok(0.0);
    }
    Ok(0.5 * (delta * delta / (2.0 * PI * E * cfg.sigma2)).ln_1p())
}

/// Closed-form rate of the power-proportional variant.
///
/// Its output density is `f_x(x) = 2x/(P_A - P_0)` on `[x0, xA]`, whose
/// entropy is `ln(P_A - P_0) - ln 2 - ½ E[ln P]` with
/// `E[ln P] = (P_A ln P_A - P_A - P_0 ln P_0 + P_0)/(P_A - P_0)`.
pub fn power_proportional_rate_closed_form(cfg: &RateConfig) -> Result<f64> {
    cfg.validate()?;
    if !(cfg.sigma2 > 0.0) {
        return Err(Error::InvalidInput(
            "rate evaluation needs a positive noise variance".into(),
        ));
    }
    if !(cfg.a2 > 0.0) {
        return Err(Error::InvalidInput(
            "the power-proportional closed form needs a positive peak power".into(),
        ));
    }
    let p0 = cfg.harvested_power_at(0.0)?;
    let pa_pow = cfg.harvested_power_at(cfg.a2)?;
    let delta = pa_pow - p0;
    if !(delta > 0.0) {
        return Ok(0.0);
    }
    let x_ln_x = |p: f64| if p > 0.0 { p * p.ln() } else { 0.0 };
    let mean_ln_p = (x_ln_x(pa_pow) - pa_pow - x_ln_x(p0) + p0) / delta;
    let h_x = delta.ln() - std::f64::consts::LN_2 - 0.5 * mean_ln_p;
    Ok(rate_from_entropy(h_x, cfg.sigma2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{spectral_response, CircuitParams, PhysicalConstants};

    /// 950 nm, unit gain, no ambient light, 10 mW peak, -60 dBm noise.
    fn fixture_config() -> RateConfig {
        let eh = EhModelParams::from_circuit(CircuitParams::default()).unwrap();
        let r0 = spectral_response(950e-9, 0.7, &PhysicalConstants::default());
        RateConfig::new(eh, r0, 1.0, 0.0, 10e-3, 1e-9).unwrap()
    }

    fn dist(kind: DistributionKind) -> TransmitDistribution {
        TransmitDistribution::new(kind, fixture_config()).unwrap()
    }

    const RATE_AMPLITUDE_UNIFORM: f64 = 3.412_720_207_639_103_7;
    const RATE_POWER_PROPORTIONAL: f64 = 3.219_828_948_009_168_0;
    const RATE_UNIFORM_S: f64 = 1.725_886_227_688_257_1;

    #[test]
    fn closed_form_rates_match_frozen_values() {
        let cfg = fixture_config();
        let r_max = max_achievable_rate(&cfg).unwrap();
        assert!(
            (r_max - RATE_AMPLITUDE_UNIFORM).abs() < 1e-9,
            "closed-form optimum {r_max}"
        );
        let r_pp = power_proportional_rate_closed_form(&cfg).unwrap();
        assert!(
            (r_pp - RATE_POWER_PROPORTIONAL).abs() < 1e-9,
            "power-proportional closed form {r_pp}"
        );
    }

    #[test]
    fn quadrature_rates_match_closed_forms_and_frozen_values() {
        let r_amp = dist(DistributionKind::AmplitudeUniform)
            .achievable_rate()
            .unwrap();
        assert!(
            (r_amp - RATE_AMPLITUDE_UNIFORM).abs() < 5e-6,
            "quadrature optimum {r_amp}"
        );
        let r_pp = dist(DistributionKind::PowerProportional)
            .achievable_rate()
            .unwrap();
        assert!(
            (r_pp - RATE_POWER_PROPORTIONAL).abs() < 5e-6,
            "quadrature power-proportional {r_pp}"
        );
        let r_uni = dist(DistributionKind::UniformS).achievable_rate().unwrap();
        assert!(
            (r_uni - RATE_UNIFORM_S).abs() < 5e-6,
            "quadrature uniform-s {r_uni}"
        );
    }

    #[test]
    fn optimal_distribution_dominates_the_alternatives() {
        let r_amp = dist(DistributionKind::AmplitudeUniform)
            .achievable_rate()
            .unwrap();
        let r_pp = dist(DistributionKind::PowerProportional)
            .achievable_rate()
            .unwrap();
        let r_uni = dist(DistributionKind::UniformS).achievable_rate().unwrap();
        assert!(r_amp >= r_uni, "{r_amp} vs uniform {r_uni}");
        assert!(r_amp >= r_pp - 1e-9, "{r_amp} vs power-proportional {r_pp}");
    }

    #[test]
    fn cdf_fixtures_at_tenth_and_half_peak() {
        let amp = dist(DistributionKind::AmplitudeUniform);
        let pp = dist(DistributionKind::PowerProportional);
        let a2 = fixture_config().a2;
        assert!((amp.cdf(0.1 * a2) - 0.847_630_482_268_607).abs() < 1e-12);
        assert!((pp.cdf(0.1 * a2) - 0.718_477_434_470_911_3).abs() < 1e-12);
        assert!((amp.cdf(0.5 * a2) - 0.954_806_628_690_226_1).abs() < 1e-12);
        assert!((pp.cdf(0.5 * a2) - 0.911_655_698_190_795_3).abs() < 1e-12);
        let uni = dist(DistributionKind::UniformS);
        assert_eq!(uni.cdf(0.1 * a2), 0.1);
        // The power-proportional CDF is the square of the amplitude CDF here
        // (both anchors vanish at zero ambient light).
        let f = amp.cdf(0.3 * a2);
        assert!((pp.cdf(0.3 * a2) - f * f).abs() < 1e-12);
    }

    #[test]
    fn cdf_is_a_valid_distribution_function() {
        let a2 = fixture_config().a2;
        for kind in [
            DistributionKind::AmplitudeUniform,
            DistributionKind::PowerProportional,
            DistributionKind::UniformS,
        ] {
            let d = dist(kind);
            assert_eq!(d.cdf(0.0), 0.0, "{kind:?}");
            assert_eq!(d.cdf(-1.0), 0.0, "{kind:?}");
            assert_eq!(d.cdf(a2), 1.0, "{kind:?}");
            assert_eq!(d.cdf(2.0 * a2), 1.0, "{kind:?}");
            let mut prev = 0.0;
            for k in 0..=200 {
                let s = a2 * k as f64 / 200.0;
                let f = d.cdf(s);
                assert!(f >= prev, "{kind:?} not monotone at s = {s}");
                assert!((0.0..=1.0).contains(&f));
                prev = f;
            }
        }
    }

    #[test]
    fn pdf_integrates_to_one_and_differentiates_the_cdf() {
        let a2 = fixture_config().a2;
        for kind in [
            DistributionKind::AmplitudeUniform,
            DistributionKind::PowerProportional,
            DistributionKind::UniformS,
        ] {
            let d = dist(kind);
            let mass = adaptive_simpson(|s| d.pdf(s), 0.0, a2, 1e-9, 400_000).unwrap();
            assert!((mass - 1.0).abs() < 1e-7, "{kind:?} total mass {mass}");
            for frac in [0.05, 0.3, 0.8] {
                let s = frac * a2;
                let ds = 1e-7 * a2;
                let fd = (d.cdf(s + ds) - d.cdf(s - ds)) / (2.0 * ds);
                let rel = (d.pdf(s) - fd).abs() / fd.abs();
                assert!(rel < 1e-5, "{kind:?} pdf/cdf mismatch {rel:e} at {s}");
            }
        }
    }

    #[test]
    fn inverse_cdf_round_trips_and_hits_the_frozen_median() {
        for kind in [
            DistributionKind::AmplitudeUniform,
            DistributionKind::PowerProportional,
            DistributionKind::UniformS,
        ] {
            let d = dist(kind);
            assert_eq!(d.sample(0.0).unwrap(), 0.0);
            assert_eq!(d.sample(1.0).unwrap(), d.config.a2);
            let mut u = 0.01;
            while u < 1.0 {
                let s = d.sample(u).unwrap();
                assert!(
                    (d.cdf(s) - u).abs() <= 1e-10,
                    "{kind:?} round trip at u = {u}"
                );
                u += 0.07;
            }
        }
        let median = dist(DistributionKind::AmplitudeUniform).sample(0.5).unwrap();
        let rel = (median - 4.125_235_236_405_565e-5).abs() / 4.125_235_236_405_565e-5;
        assert!(rel < 1e-9, "median {median:e}");
    }

    #[test]
    fn sample_rejects_bad_variates() {
        let d = dist(DistributionKind::AmplitudeUniform);
        assert!(d.sample(-0.1).is_err());
        assert!(d.sample(1.1).is_err());
        assert!(d.sample(f64::NAN).is_err());
    }

    #[test]
    fn output_amplitude_is_monotone_and_range_checked() {
        let cfg = fixture_config();
        let mut prev = -1.0;
        for k in 0..=40 {
            let s = cfg.a2 * k as f64 / 40.0;
            let x = cfg.output_amplitude(s).unwrap();
            assert!(x > prev, "amplitude not strictly increasing at {s}");
            prev = x;
        }
        // sqrt(RL) times the frozen peak-load current at 10 mW.
        let x_peak = cfg.output_amplitude(10e-3).unwrap();
        assert!((x_peak - 3.963_937_730_469_654_3e-3).abs() < 1e-12 * 3.96e-3);
        assert!(cfg.output_amplitude(-1e-9).is_err());
        assert!(cfg.output_amplitude(cfg.a2 * 1.000_001).is_err());
    }

    #[test]
    fn amplitude_slope_matches_finite_differences() {
        let cfg = fixture_config();
        for s in [1e-6, 1e-4, 5e-3, 9e-3] {
            let ds = s * 1e-6;
            let fd = (cfg.output_amplitude(s + ds).unwrap()
                - cfg.output_amplitude(s - ds).unwrap())
                / (2.0 * ds);
            let an = cfg.output_amplitude_derivative(s).unwrap();
            let rel = (an - fd).abs() / fd;
            assert!(rel < 1e-5, "slope mismatch {rel:e} at s = {s}");
        }
    }

    #[test]
    fn empirical_cdf_passes_a_ks_check() {
        let d = dist(DistributionKind::AmplitudeUniform);
        let n = 20_000;
        let samples = d.simulate_channel(n, 7).unwrap();
        let mut s: Vec<f64> = samples.iter().map(|c| c.s).collect();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, &si) in s.iter().enumerate() {
            let f = d.cdf(si);
            ks = ks.max((f - i as f64 / n as f64).abs());
            ks = ks.max((f - (i + 1) as f64 / n as f64).abs());
        }
        // 99% critical value 1.63/sqrt(n) ≈ 0.0115; the draw is deterministic.
        assert!(ks < 0.0115, "KS distance {ks}");
    }

    #[test]
    fn pushed_forward_amplitudes_are_flat() {
        let d = dist(DistributionKind::AmplitudeUniform);
        let n = 20_000;
        let samples = d.simulate_channel(n, 11).unwrap();
        let (x0, xa) = d.amplitude_range();
        let bins = 10usize;
        let mut counts = vec![0usize; bins];
        for c in &samples {
            let b = (((c.x - x0) / (xa - x0)) * bins as f64).floor() as usize;
            counts[b.min(bins - 1)] += 1;
        }
        let expected = n as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&o| {
                let d = o as f64 - expected;
                d * d / expected
            })
            .sum();
        // 99th percentile of chi-squared with 9 degrees of freedom.
        assert!(chi2 < 21.67, "chi-squared statistic {chi2}");
    }

    #[test]
    fn channel_noise_behaves() {
        // Zero variance: the observation equals the amplitude bit for bit.
        let mut cfg = fixture_config();
        cfg.sigma2 = 0.0;
        let d = TransmitDistribution::new(DistributionKind::UniformS, cfg).unwrap();
        for c in d.simulate_channel(100, 3).unwrap() {
            assert_eq!(c.n, 0.0);
            assert_eq!(c.y, c.x);
        }
        // Positive variance: the empirical noise power matches sigma2.
        let d = dist(DistributionKind::UniformS);
        let n = 1_000_000;
        let samples = d.simulate_channel(n, 5).unwrap();
        let mean_sq: f64 = samples.iter().map(|c| (c.y - c.x).powi(2)).sum::<f64>() / n as f64;
        let rel = (mean_sq - 1e-9).abs() / 1e-9;
        assert!(rel < 0.01, "noise power off by {rel:e}");
    }

    #[test]
    fn simulation_is_deterministic_and_chunk_independent() {
        let d = dist(DistributionKind::AmplitudeUniform);
        let a = d.simulate_channel(50, 9).unwrap();
        let b = d.simulate_channel(50, 9).unwrap();
        assert_eq!(a, b);
        // A shorter run is a prefix of a longer one: per-index streams.
        let c = d.simulate_channel(10, 9).unwrap();
        assert_eq!(&a[..10], &c[..]);
        let e = d.simulate_channel(50, 10).unwrap();
        assert_ne!(a, e);
    }

    #[test]
    fn rate_trends_follow_peak_power_and_ambient_light() {
        let base = fixture_config();
        let mut prev = 0.0;
        for a2 in [1e-3, 3e-3, 10e-3, 50e-3] {
            let cfg = RateConfig { a2, ..base };
            let r = max_achievable_rate(&cfg).unwrap();
            assert!(r > prev, "rate not increasing at a2 = {a2}");
            prev = r;
        }
        let mut prev = f64::INFINITY;
        for pa in [0.0, 1e-6, 1e-5, 1e-4] {
            let cfg = RateConfig { pa, ..base };
            let r = max_achievable_rate(&cfg).unwrap();
            assert!(r < prev, "rate not decreasing at pa = {pa}");
            prev = r;
        }
    }

    #[test]
    fn degenerate_and_extreme_noise_cases() {
        let base = fixture_config();
        let cfg = RateConfig { a2: 0.0, ..base };
        assert_eq!(max_achievable_rate(&cfg).unwrap(), 0.0);
        let loud = RateConfig { sigma2: 1e3, ..base };
        let r = max_achievable_rate(&loud).unwrap();
        assert!(r > 0.0 && r < 1e-6, "huge noise should crush the rate, got {r}");
        let silent = RateConfig { sigma2: 0.0, ..base };
        assert!(max_achievable_rate(&silent).is_err());
        assert!(
            TransmitDistribution::new(DistributionKind::UniformS, silent)
                .unwrap()
                .achievable_rate()
                .is_err()
        );
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let eh = EhModelParams::from_circuit(CircuitParams::default()).unwrap();
        let r0 = spectral_response(950e-9, 0.7, &PhysicalConstants::default());
        assert!(RateConfig::new(eh, r0, 0.0, 0.0, 1e-2, 1e-9).is_err());
        assert!(RateConfig::new(eh, r0, 1.5, 0.0, 1e-2, 1e-9).is_err());
        assert!(RateConfig::new(eh, r0, 1.0, -1e-9, 1e-2, 1e-9).is_err());
        assert!(RateConfig::new(eh, r0, 1.0, 0.0, -1e-2, 1e-9).is_err());
        assert!(RateConfig::new(eh, r0, 1.0, 0.0, 1e-2, -1e-9).is_err());
        assert!(RateConfig::new(eh, -r0, 1.0, 0.0, 1e-2, 1e-9).is_err());
        let degenerate = RateConfig::new(eh, r0, 1.0, 0.0, 0.0, 1e-9).unwrap();
        assert!(TransmitDistribution::new(DistributionKind::UniformS, degenerate).is_err());
        assert!(dist(DistributionKind::AmplitudeUniform).simulate_channel(0, 1).is_err());
    }

    #[test]
    fn ambient_light_shifts_the_amplitude_floor() {
        let base = fixture_config();
        let lit = RateConfig { pa: 1e-5, ..base };
        let d = TransmitDistribution::new(DistributionKind::AmplitudeUniform, lit).unwrap();
        let (x0, xa) = d.amplitude_range();
        assert!(x0 > 0.0, "ambient light must lift the amplitude floor");
        assert!(xa > x0);
        // CDF boundaries survive the nonzero floor.
        assert_eq!(d.cdf(0.0), 0.0);
        assert_eq!(d.cdf(lit.a2), 1.0);
        let r_lit = max_achievable_rate(&lit).unwrap();
        let r_dark = max_achievable_rate(&base).unwrap();
        assert!(r_lit < r_dark);
    }
}
