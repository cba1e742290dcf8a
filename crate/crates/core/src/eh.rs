//! Steady-state harvested power.
//!
//! The energy path delivers `P = i_EH^2 * RL` where `i_EH` solves the
//! transcendental node equation. For a single ideality-1 diode without
//! shunt the solution is exact in terms of the Lambert W function:
//!
//! ```text
//! i_EH = j + Is - (VT / R_S) * W0( Is * (R_S/VT) * e^{(R_S/VT)(j + Is)} )
//! ```
//!
//! with `R_S = RL + Rs`. The W argument reaches e^2088 at 10 mW drive, so
//! the evaluation goes through [`crate::lambert::lambert_w0_of_exp`]. The
//! module also carries the analytic drive derivative (used by the rate
//! quadrature), the equivalent-saturation-current fit that reduces a
//! two-diode cell to the single effective `Is`, and the two reference
//! baselines the closed form is compared against: an ideally retuned
//! maximum-power-point load (scaled to agree at a calibration power) and an
//! exact single-diode solve.

use crate::circuit::{mpp_power, solve_dc_operating_point, CircuitParams, DiodeModel};
use crate::error::{Error, Result};
use crate::lambert::lambert_w0_of_exp;
use crate::numerics::{adaptive_simpson, golden_section_min};

/// Circuit parameters plus the single effective saturation current used by
/// the closed-form model.
#[derive(Debug, Clone, Copy)]
pub struct EhModelParams {
    pub circuit: CircuitParams,
    /// Effective saturation current of the reduced single-diode law, A.
    pub is_eff: f64,
}

impl EhModelParams {
    /// Builds the model for a cell, reducing unequal diode saturation
    /// currents to one effective value over the default 0-0.5 V span.
    /// Equal saturation currents reduce to themselves exactly.
    pub fn from_circuit(circuit: CircuitParams) -> Result<Self> {
        circuit.validate()?;
        let is_eff = if circuit.is1 == circuit.is2 {
            circuit.is1
        } else {
            fit_equivalent_saturation_current(circuit.is1, circuit.is2, (0.0, 0.5), circuit.vt)?
        };
        Ok(Self { circuit, is_eff })
    }

    /// Uses an explicitly chosen effective saturation current.
    pub fn with_is_eff(circuit: CircuitParams, is_eff: f64) -> Result<Self> {
        circuit.validate()?;
        if !(is_eff > 0.0 && is_eff.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "effective saturation current {is_eff} A must be positive"
            )));
        }
        Ok(Self { circuit, is_eff })
    }
}

/// A closed-form harvesting solution.
#[derive(Debug, Clone, Copy)]
pub struct HarvestedPower {
    /// Total photocurrent `j = r0 * p + pa`, A.
    pub j: f64,
    /// Load current, A.
    pub i: f64,
    /// The W0 value backing the solution (reused by derivatives).
    pub w: f64,
    /// Log-domain W argument `ln(Is R_S / VT) + (R_S/VT)(j + Is)`.
    pub log_arg: f64,
    /// Power delivered to `RL`, W.
    pub power: f64,
}

/// Closed-form load current for photocurrent `j`.
pub fn eh_current_closed_form(j: f64, model: &EhModelParams) -> Result<HarvestedPower> {
    if !(j >= 0.0) || !j.is_finite() {
        return Err(Error::Domain(format!("photocurrent j = {j} A must be nonnegative")));
    }
    let p = &model.circuit;
    let rs_vt = p.r_sigma() / p.vt;
    let log_arg = (model.is_eff * rs_vt).ln() + rs_vt * (j + model.is_eff);
    let w = lambert_w0_of_exp(log_arg)?;
    // At j = 0 this is a difference of near-equal terms; the true value is
    // positive but far below f64 resolution, so clamp rounding noise.
    let i = (j + model.is_eff - w / rs_vt).clamp(0.0, j + model.is_eff);
    Ok(HarvestedPower { j, i, w, log_arg, power: i * i * p.rl })
}

/// Closed-form harvested power for received optical power `p` (W), ambient
/// photocurrent `pa` (A), and responsivity `r0` (A/W).
pub fn harvested_power_closed_form(
    model: &EhModelParams,
    r0: f64,
    p: f64,
    pa: f64,
) -> Result<HarvestedPower> {
    if !(p >= 0.0 && pa >= 0.0) {
        return Err(Error::Domain(format!(
            "optical power {p} W and ambient photocurrent {pa} A must be nonnegative"
        )));
    }
    eh_current_closed_form(r0 * p + pa, model)
}

/// Analytic derivative `dP_harv/dp` at received power `p`.
///
/// Chain rule through the W solution: `di/dj = 1/(1 + W0)`, `dj/dp = r0`,
/// `dP/di = 2 RL i`.
pub fn harvested_power_derivative(model: &EhModelParams, r0: f64, p: f64, pa: f64) -> Result<f64> {
    let sol = harvested_power_closed_form(model, r0, p, pa)?;
    Ok(2.0 * model.circuit.rl * sol.i * r0 / (1.0 + sol.w))
}

/// Reduced-model input voltage `VT * ln((j - i_eh)/Is + 1)`.
///
/// This is the diode-node voltage implied by the single-diode law when the
/// diode carries `j - i_eh`; the closed-form current makes it consistent
/// with the load equation `v = i_eh * R_S`.
pub fn input_voltage_approx(j: f64, i_eh: f64, is_eff: f64, vt: f64) -> Result<f64> {
    if j < i_eh {
        return Err(Error::Domain(format!(
            "diode current j - i_eh = {:e} A is negative",
            j - i_eh
        )));
    }
    Ok(vt * ((j - i_eh) / is_eff).ln_1p())
}

/// Single saturation current minimizing the absolute current mismatch
/// `integral over v_range of |Is1 e^{v/VT} + Is2 e^{v/2VT} - Is (e^{v/VT} + e^{v/2VT})| dv`.
///
/// The objective is unimodal in `Is` on `[min(Is1,Is2), max(Is1,Is2)]`
/// (asserted); golden-section search to 1e-3 relative, quadrature to
/// 1e-15 A*V absolute.
pub fn fit_equivalent_saturation_current(
    is1: f64,
    is2: f64,
    v_range: (f64, f64),
    vt: f64,
) -> Result<f64> {
    if !(is1 > 0.0 && is2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "saturation currents {is1}, {is2} must be positive"
        )));
    }
    let (v_lo, v_hi) = v_range;
    if !(0.0 <= v_lo && v_lo < v_hi && v_hi <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "fit voltage range [{v_lo}, {v_hi}] must sit inside [0, 1] V"
        )));
    }
    if is1 == is2 {
        return Ok(is1);
    }
    let lo = is1.min(is2);
    let hi = is1.max(is2);
    let objective = |is: f64| -> Result<f64> {
        adaptive_simpson(
            |v| {
                let e1 = (v / vt).exp();
                let e2 = (v / (2.0 * vt)).exp();
                (is1 * e1 + is2 * e2 - is * (e1 + e2)).abs()
            },
            v_lo,
            v_hi,
            1e-15,
            400_000,
        )
    };
    // Surface quadrature failures before the search, then run it infallibly.
    objective(lo)?;
    objective(hi)?;
    let (is_fit, j_fit) =
        golden_section_min(|is| objective(is).unwrap_or(f64::INFINITY), lo, hi, 1e-3);
    // Unimodality guard: the minimum must beat both bracket ends.
    if j_fit > objective(lo)? || j_fit > objective(hi)? {
        return Err(Error::Convergence(format!(
            "saturation-current fit objective not unimodal on [{lo:e}, {hi:e}]"
        )));
    }
    Ok(is_fit)
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// One-point scale calibration for the retuned-load baseline.
#[derive(Debug, Clone, Copy)]
pub struct BaselineCalibration {
    /// Multiplicative scale applied to the MPP power.
    pub kappa: f64,
    /// Received power the scale was fixed at, W.
    pub p_ref: f64,
}

impl BaselineCalibration {
    /// Calibrates `kappa` so the scaled MPP power equals the closed form at
    /// `p_ref` with zero ambient light: `kappa * mpp(j(p_ref)) = P(p_ref, 0)`.
    pub fn at_reference(model: &EhModelParams, r0: f64, p_ref: f64) -> Result<Self> {
        if !(p_ref > 0.0) {
            return Err(Error::InvalidInput(format!(
                "calibration power {p_ref} W must be positive"
            )));
        }
        let closed = harvested_power_closed_form(model, r0, p_ref, 0.0)?;
        let mpp = mpp_power(r0 * p_ref, &model.circuit, DiodeModel::full())?;
        Ok(Self { kappa: closed.power / mpp.power, p_ref })
    }
}

/// Retuned-load baseline: `kappa * mpp_power(j)`, the power an ideal
/// maximum-power-point tracker would extract, scaled to match the fixed-load
/// closed form at the calibration power.
pub fn baseline_mpp(
    model: &EhModelParams,
    cal: &BaselineCalibration,
    r0: f64,
    p: f64,
    pa: f64,
) -> Result<f64> {
    let j = r0 * p + pa;
    Ok(cal.kappa * mpp_power(j, &model.circuit, DiodeModel::full())?.power)
}

/// Single-diode baseline: exact DC solve of the ideality-1-only, shunt-free
/// circuit with saturation current `is_eff`. For equal Table-parameter
/// diodes this coincides with the closed form (the closed form is the exact
/// solution of precisely this circuit).
pub fn baseline_single_diode(model: &EhModelParams, r0: f64, p: f64, pa: f64) -> Result<f64> {
    let mut params = model.circuit;
    params.is1 = model.is_eff;
    let op = solve_dc_operating_point(r0 * p + pa, &params, DiodeModel::single_diode_bare())?;
    Ok(op.p_harv)
}
