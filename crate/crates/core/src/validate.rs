//! Self-contained invariant suite behind the `validate` command.
//!
//! Every check here is parameter-independent: it asserts an identity,
//! tolerance, or statistical property that must hold for *any* valid circuit
//! parameterization, not just the defaults. The suite reports the measured
//! worst-case deviation next to each threshold so regressions show up as
//! numbers, not just as flipped booleans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{
    solve_dc_operating_point, spectral_response, CircuitParams, DiodeModel, OpticalDrive,
    PhysicalConstants,
};
use crate::eh::{harvested_power_closed_form, harvested_power_derivative, EhModelParams};
use crate::lambert::{lambert_w0_detailed, lambert_w0_of_exp_detailed};
use crate::rate::{
    max_achievable_rate, power_proportional_rate_closed_form, DistributionKind, RateConfig,
    TransmitDistribution,
};
use crate::sweep::{eh_sweep, log_grid, map_grid_seq};
use crate::transient::{simulate, InitialState, SimConfig, SymbolFrame};
use crate::Result;

/// Outcome of one invariant check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    /// Short descriptive name.
    pub name: String,
    /// Whether the measured worst deviation met the threshold.
    pub passed: bool,
    /// Measured worst-case deviation (units depend on the check).
    pub worst: f64,
    /// Largest allowed deviation.
    pub threshold: f64,
    /// Where/how the worst case occurred.
    pub detail: String,
}

impl CheckResult {
    fn from_worst(name: &str, worst: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: worst.is_finite() && worst <= threshold,
            worst,
            threshold,
            detail,
        }
    }
}

/// Results of the whole suite.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One line per check: status, name, worst deviation vs threshold.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!(
                "[{status}] {:<44} worst {:>12.5e}  limit {:>9.1e}  {}\n",
                c.name, c.worst, c.threshold, c.detail
            ));
        }
        let (passed, total) = (
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len(),
        );
        out.push_str(&format!("{passed}/{total} checks passed\n"));
        out
    }
}

/// Number of Monte Carlo draws used by the statistical checks.
const STAT_SAMPLES: usize = 100_000;

/// Runs the full invariant suite for one circuit parameterization.
///
/// `seed` drives the random Lambert-W probe points and the sampler
/// statistics; identical seeds reproduce the report exactly.
pub fn run_all(circuit: &CircuitParams, seed: u64) -> Result<ValidationReport> {
    circuit.validate()?;
    let consts = PhysicalConstants::default();
    let r0 = spectral_response(950e-9, 0.7, &consts);
    let model = EhModelParams::from_circuit(*circuit)?;

    let mut checks = Vec::new();
    checks.push(check_lambert_direct(seed));
    checks.push(check_lambert_log_identity());
    checks.push(check_closed_vs_oracle_with(circuit, r0, |j| {
        harvested_power_closed_form(&model, 1.0, j, 0.0).map(|sol| sol.power)
    }));
    checks.push(check_single_diode_exactness(&model, r0));
    checks.push(check_derivative_vs_finite_difference(&model, r0));
    checks.push(check_transient_identities(circuit)?);
    checks.push(check_sampler_statistics(&model, r0, seed)?);
    checks.push(check_rate_identities(&model, r0)?);
    checks.push(check_rate_trends(&model, r0)?);
    checks.push(check_cdf_round_trip(&model, r0)?);
    checks.push(check_sweep_determinism(circuit)?);
    Ok(ValidationReport { checks })
}

/// Residual of the direct-form evaluation on seeded random probe points in
/// `[-1/e, 1e10]`, measured relative to `max(1, |x|)`.
fn check_lambert_direct(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut worst_x = 0.0f64;
    for _ in 0..2_000 {
        let x = if rng.gen::<bool>() {
            // Linear coverage of the branch-point neighborhood.
            -(1.0 / std::f64::consts::E) + rng.gen::<f64>() * 2.5
        } else {
            // Log coverage of the large-argument range.
            10f64.powf(rng.gen::<f64>() * 10.0)
        };
        match lambert_w0_detailed(x) {
            Ok(res) => {
                let rel = res.residual / x.abs().max(1.0);
                if rel > worst {
                    worst = rel;
                    worst_x = x;
                }
            }
            Err(_) => {
                return CheckResult::from_worst(
                    "lambert direct residual",
                    f64::INFINITY,
                    1e-12,
                    format!("evaluation failed at x = {x:e}"),
                );
            }
        }
    }
    CheckResult::from_worst(
        "lambert direct residual",
        worst,
        1e-12,
        format!("at x = {worst_x:e}"),
    )
}

/// Identity `w + ln w = y` for the log-argument form over `[1e-3, 1e6]`.
fn check_lambert_log_identity() -> CheckResult {
    let mut worst = 0.0f64;
    let mut worst_y = 0.0f64;
    let mut y = 1e-3;
    while y <= 1e6 {
        match lambert_w0_of_exp_detailed(y) {
            Ok(res) => {
                let rel = (res.value + res.value.ln() - y).abs() / y.abs().max(1.0);
                if rel > worst {
                    worst = rel;
                    worst_y = y;
                }
            }
            Err(_) => {
                return CheckResult::from_worst(
                    "lambert log-form identity",
                    f64::INFINITY,
                    1e-10,
                    format!("evaluation failed at y = {y:e}"),
                );
            }
        }
        y *= 1.13;
    }
    CheckResult::from_worst(
        "lambert log-form identity",
        worst,
        1e-10,
        format!("at y = {worst_y:e}"),
    )
}

/// Relative error of a candidate closed-form power model against the exact
/// two-diode DC solve over the canonical power grid.
///
/// Taking the model as a closure makes this check double as a mutation trap:
/// any sign or scale slip in the closed form blows well past the 2% limit.
pub fn check_closed_vs_oracle_with<F>(circuit: &CircuitParams, r0: f64, closed_power: F) -> CheckResult
where
    F: Fn(f64) -> Result<f64>,
{
    let name = "closed form vs two-diode oracle";
    let powers = match log_grid(1e-6, 100e-3, 50) {
        Ok(g) => g,
        Err(e) => {
            return CheckResult::from_worst(name, f64::INFINITY, 0.02, format!("grid: {e}"))
        }
    };
    let mut worst = 0.0f64;
    let mut worst_p = 0.0f64;
    for &p in &powers {
        let j = r0 * p;
        let closed = match closed_power(j) {
            Ok(v) => v,
            Err(e) => {
                return CheckResult::from_worst(
                    name,
                    f64::INFINITY,
                    0.02,
                    format!("closed form failed at p = {p:e}: {e}"),
                )
            }
        };
        let oracle = match solve_dc_operating_point(j, circuit, DiodeModel::full()) {
            Ok(op) => op.p_harv,
            Err(e) => {
                return CheckResult::from_worst(
                    name,
                    f64::INFINITY,
                    0.02,
                    format!("oracle failed at p = {p:e}: {e}"),
                )
            }
        };
        let rel = (closed - oracle).abs() / oracle;
        if rel > worst {
            worst = rel;
            worst_p = p;
        }
    }
    CheckResult::from_worst(name, worst, 0.02, format!("at p = {worst_p:e} W"))
}

/// The closed form must reproduce the exact single-diode solve to near
/// rounding — it is that circuit's analytic solution.
fn check_single_diode_exactness(model: &EhModelParams, r0: f64) -> CheckResult {
    let name = "closed form vs single-diode exact solve";
    let powers = log_grid(1e-6, 100e-3, 21).expect("static grid");
    let mut single = model.circuit;
    single.is1 = model.is_eff;
    let mut worst = 0.0f64;
    let mut worst_p = 0.0f64;
    for &p in &powers {
        let j = r0 * p;
        let closed = match harvested_power_closed_form(model, 1.0, j, 0.0) {
            Ok(sol) => sol.power,
            Err(e) => {
                return CheckResult::from_worst(
                    name,
                    f64::INFINITY,
                    1e-10,
                    format!("closed form failed at p = {p:e}: {e}"),
                )
            }
        };
        let exact = match solve_dc_operating_point(j, &single, DiodeModel::single_diode_bare()) {
            Ok(op) => op.p_harv,
            Err(e) => {
                return CheckResult::from_worst(
                    name,
                    f64::INFINITY,
                    1e-10,
                    format!("solver failed at p = {p:e}: {e}"),
                )
            }
        };
        let rel = (closed - exact).abs() / exact;
        if rel > worst {
            worst = rel;
            worst_p = p;
        }
    }
    CheckResult::from_worst(name, worst, 1e-10, format!("at p = {worst_p:e} W"))
}

/// Analytic power derivative vs central finite differences at 20 grid points.
fn check_derivative_vs_finite_difference(model: &EhModelParams, r0: f64) -> CheckResult {
    let name = "analytic derivative vs finite differences";
    let powers = log_grid(1e-6, 100e-3, 20).expect("static grid");
    let mut worst = 0.0f64;
    let mut worst_p = 0.0f64;
    for &p in &powers {
        // Step choice: large enough that the difference clears the rounding
        // noise of the nearly-cancelling closed form at high power, small
        // enough that truncation stays below 1e-8.
        let dp = p * 1e-5;
        let eval = |pp: f64| harvested_power_closed_form(model, r0, pp, 0.0).map(|s| s.power);
        let (lo, hi, analytic) = match (
            eval(p - dp),
            eval(p + dp),
            harvested_power_derivative(model, r0, p, 0.0),
        ) {
            (Ok(lo), Ok(hi), Ok(d)) => (lo, hi, d),
            _ => {
                return CheckResult::from_worst(
                    name,
                    f64::INFINITY,
                    1e-6,
                    format!("evaluation failed at p = {p:e}"),
                )
            }
        };
        let fd = (hi - lo) / (2.0 * dp);
        let rel = (analytic - fd).abs() / fd.abs();
        if rel > worst {
            worst = rel;
            worst_p = p;
        }
    }
    CheckResult::from_worst(name, worst, 1e-6, format!("at p = {worst_p:e} W"))
}

/// Charge-balance telescoping and nodal current conservation on a short
/// three-symbol waveform.
fn check_transient_identities(circuit: &CircuitParams) -> Result<CheckResult> {
    let name = "transient charge balance and conservation";
    let frame = SymbolFrame::new(vec![10e-3, 2e-3, 8e-3], 2e-3, 10e-3)?;
    let drive = OpticalDrive::new(950e-9, 0.0, 0.0);
    let wave = simulate(
        &frame,
        &drive,
        circuit,
        &SimConfig::default(),
        InitialState::DcOfFirstSymbol,
    )?;
    let (integral, charge) = wave.charge_balance(0, wave.len() - 1, circuit.cd);
    let charge_scale = wave
        .i_id
        .iter()
        .map(|i| i.abs())
        .fold(0.0, f64::max)
        * frame.duration();
    let telescoping = (integral - charge).abs() / charge_scale.max(charge.abs()).max(1e-300);
    let max_current = wave
        .i_out
        .iter()
        .map(|i| i.abs())
        .fold(f64::MIN_POSITIVE, f64::max);
    let conservation = wave.max_conservation_residual() / max_current;
    // The companion update and the trapezoid sum round differently at each
    // of the ~10^4 steps, so the identity carries an accumulated-rounding
    // budget of a few 1e-12 of scale.
    let worst = telescoping.max(conservation);
    Ok(CheckResult::from_worst(
        name,
        worst,
        1e-10,
        format!("telescoping {telescoping:.2e}, conservation {conservation:.2e}"),
    ))
}

/// Kolmogorov–Smirnov fit of the empirical transmit CDF plus a chi-squared
/// flatness test on the pushed-forward amplitudes, both on the optimal
/// distribution with a fixed seed.
fn check_sampler_statistics(model: &EhModelParams, r0: f64, seed: u64) -> Result<CheckResult> {
    let name = "sampler KS and amplitude flatness";
    let cfg = RateConfig::new(*model, r0, 1.0, 0.0, 10e-3, 1e-9)?;
    let dist = TransmitDistribution::new(DistributionKind::AmplitudeUniform, cfg)?;
    let samples = dist.simulate_channel(STAT_SAMPLES, seed)?;
    let n = samples.len();
    let mut s: Vec<f64> = samples.iter().map(|c| c.s).collect();
    s.sort_by(|a, b| a.partial_cmp(b).expect("samples are finite"));
    let mut ks = 0.0f64;
    for (i, &si) in s.iter().enumerate() {
        let f = dist.cdf(si);
        ks = ks.max((f - i as f64 / n as f64).abs());
        ks = ks.max((f - (i + 1) as f64 / n as f64).abs());
    }
    let (x0, xa) = dist.amplitude_range();
    let bins = 50usize;
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
    // Normalize both statistics by their limits so one scalar covers both:
    // KS limit 0.01 at 1e5 draws, chi-squared 95th percentile with 49
    // degrees of freedom.
    const KS_LIMIT: f64 = 0.01;
    const CHI2_LIMIT: f64 = 66.34;
    let worst = (ks / KS_LIMIT).max(chi2 / CHI2_LIMIT);
    Ok(CheckResult::from_worst(
        name,
        worst,
        1.0,
        format!("KS {ks:.4} (limit {KS_LIMIT}), chi2 {chi2:.1} (limit {CHI2_LIMIT})"),
    ))
}

/// Quadrature rates must match the closed forms for both variants that have
/// one, across a small (peak power, ambient) grid.
fn check_rate_identities(model: &EhModelParams, r0: f64) -> Result<CheckResult> {
    let name = "rate quadrature vs closed forms";
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for &(a2, pa) in &[(10e-3, 0.0), (1e-3, 0.0), (10e-3, 1e-5)] {
        let cfg = RateConfig::new(*model, r0, 1.0, pa, a2, 1e-9)?;
        let quad_amp = TransmitDistribution::new(DistributionKind::AmplitudeUniform, cfg)?
            .achievable_rate()?;
        let closed_amp = max_achievable_rate(&cfg)?;
        let quad_pp = TransmitDistribution::new(DistributionKind::PowerProportional, cfg)?
            .achievable_rate()?;
        let closed_pp = power_proportional_rate_closed_form(&cfg)?;
        let dev = (quad_amp - closed_amp).abs().max((quad_pp - closed_pp).abs());
        if dev > worst {
            worst = dev;
            detail = format!("at A2 = {a2:e} W, pa = {pa:e} A");
        }
    }
    Ok(CheckResult::from_worst(name, worst, 1e-3, detail))
}

/// Dominance of the optimal distribution and monotone trends of the maximum
/// rate in peak power and ambient level.
fn check_rate_trends(model: &EhModelParams, r0: f64) -> Result<CheckResult> {
    let name = "rate dominance and monotone trends";
    let a2_list = [1e-3, 5e-3, 10e-3];
    let pa_list = [0.0, 1e-5];
    let mut violations = 0usize;
    let mut detail = String::from("none");
    let mut rates = Vec::new();
    for &pa in &pa_list {
        for &a2 in &a2_list {
            let cfg = RateConfig::new(*model, r0, 1.0, pa, a2, 1e-9)?;
            let r_amp = TransmitDistribution::new(DistributionKind::AmplitudeUniform, cfg)?
                .achievable_rate()?;
            let r_uni =
                TransmitDistribution::new(DistributionKind::UniformS, cfg)?.achievable_rate()?;
            let r_closed = max_achievable_rate(&cfg)?;
            if r_amp < r_uni {
                violations += 1;
                detail = format!("uniform beat optimal at A2 = {a2:e}, pa = {pa:e}");
            }
            rates.push((pa, a2, r_closed));
        }
    }
    for group in rates.chunks(a2_list.len()) {
        for w in group.windows(2) {
            if w[1].2 <= w[0].2 {
                violations += 1;
                detail = format!("rate not increasing in A2 near {:e}", w[1].1);
            }
        }
    }
    for k in 0..a2_list.len() {
        if rates[a2_list.len() + k].2 >= rates[k].2 {
            violations += 1;
            detail = format!("rate not decreasing in pa at A2 = {:e}", rates[k].1);
        }
    }
    Ok(CheckResult::from_worst(
        name,
        violations as f64,
        0.0,
        detail,
    ))
}

/// Inverse-CDF round trip `F(F⁻¹(u)) = u` for all three variants.
fn check_cdf_round_trip(model: &EhModelParams, r0: f64) -> Result<CheckResult> {
    let name = "inverse-CDF round trip";
    let cfg = RateConfig::new(*model, r0, 1.0, 0.0, 10e-3, 1e-9)?;
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for kind in [
        DistributionKind::AmplitudeUniform,
        DistributionKind::PowerProportional,
        DistributionKind::UniformS,
    ] {
        let dist = TransmitDistribution::new(kind, cfg)?;
        let mut u = 0.02;
        while u < 1.0 {
            let s = dist.sample(u)?;
            let dev = (dist.cdf(s) - u).abs();
            if dev > worst {
                worst = dev;
                detail = format!("{kind:?} at u = {u:.2}");
            }
            u += 0.06;
        }
    }
    Ok(CheckResult::from_worst(name, worst, 1e-10, detail))
}

/// The parallel grid map must be bit-identical to the sequential one, and
/// repeated runs must reproduce themselves.
fn check_sweep_determinism(circuit: &CircuitParams) -> Result<CheckResult> {
    let name = "sweep determinism (parallel vs sequential)";
    let powers = log_grid(1e-6, 100e-3, 25)?;
    let lambdas = [400e-9, 950e-9];
    let first = eh_sweep(circuit, &lambdas, &powers, 0.0, 0.7)?;
    let second = eh_sweep(circuit, &lambdas, &powers, 0.0, 0.7)?;
    let model = EhModelParams::from_circuit(*circuit)?;
    let r0 = spectral_response(950e-9, 0.7, &PhysicalConstants::default());
    let seq = map_grid_seq(&powers, |&p| {
        harvested_power_closed_form(&model, r0, p, 0.0).map(|s| s.power)
    })?;
    let mut mismatches = 0usize;
    for (a, b) in first.iter().zip(second.iter()) {
        if a != b {
            mismatches += 1;
        }
    }
    for (row, s) in first
        .iter()
        .filter(|r| r.lambda0 == 950e-9)
        .zip(seq.iter())
    {
        if row.p_closed.to_bits() != s.to_bits() {
            mismatches += 1;
        }
    }
    Ok(CheckResult::from_worst(
        name,
        mismatches as f64,
        0.0,
        format!("{mismatches} mismatching rows"),
    ))
}
