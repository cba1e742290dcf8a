//! Principal branch of the Lambert W function.
//!
//! Two entry points:
//!
//! * [`lambert_w0`] evaluates `W0(x)` for `x >= -1/e` given directly.
//! * [`lambert_w0_of_exp`] evaluates `W0(exp(y))` from the exponent alone,
//!   solving `w + ln w = y`. The harvesting current expressions produce
//!   arguments like `exp(2088)`, far beyond f64 range, so every caller in
//!   this crate goes through the log form.
//!
//! Both use Halley iteration from a bracketed seed: a branch-point series
//! near `x = -1/e`, a small-argument series around zero, and the asymptotic
//! expansion `y - ln y + ln y / y` for large arguments. Convergence in a
//! handful of steps; the iteration cap exists only to bound pathological
//! inputs.

use crate::error::{Error, Result};

/// Diagnostics from a single W evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LambertResult {
    /// The branch value `w`.
    pub value: f64,
    /// Halley iterations consumed.
    pub iterations: u32,
    /// Final defect: `|w exp(w) - x|` for the direct form,
    /// `|w + ln w - y|` for the log form.
    pub residual: f64,
}

/// `-1/e`, the lower edge of the principal branch's domain.
pub const BRANCH_POINT: f64 = -0.367_879_441_171_442_33;

/// Inputs this far below `-1/e` are treated as rounding noise and clamped.
const BRANCH_CLAMP: f64 = 1e-15;

const MAX_ITERATIONS: u32 = 50;

// ---------------------------------------------------------------------------
// Direct form
// ---------------------------------------------------------------------------

/// `W0(x)` for `x >= -1/e`. See [`lambert_w0_detailed`] for diagnostics.
pub fn lambert_w0(x: f64) -> Result<f64> {
    Ok(lambert_w0_detailed(x)?.value)
}

/// `W0(x)` with iteration count and final residual.
///
/// Arguments within `1e-15` below `-1/e` are clamped onto the branch point;
/// anything lower is a domain error. The result is never below `-1`.
pub fn lambert_w0_detailed(x: f64) -> Result<LambertResult> {
    if x.is_nan() {
        return Err(Error::Domain("lambert_w0: argument is NaN".into()));
    }
    let x = if x < BRANCH_POINT {
        if x >= BRANCH_POINT - BRANCH_CLAMP {
            BRANCH_POINT
        } else {
            return Err(Error::Domain(format!(
                "lambert_w0: {x} is below -1/e = {BRANCH_POINT}"
            )));
        }
    } else {
        x
    };
    if x == 0.0 {
        return Ok(LambertResult { value: 0.0, iterations: 0, residual: 0.0 });
    }

    // Distance from the branch point controls the seed choice. p is the
    // natural series variable: W = -1 + p - p^2/3 + 11 p^3/72 - ...
    let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
    if p < 1e-4 {
        // Series truncation error O(p^4) < 1e-16 here, and the Halley
        // denominator e^w (1 + w) vanishes at w = -1, so return directly.
        let w = branch_series(p).max(-1.0);
        let residual = (w * w.exp() - x).abs();
        return Ok(LambertResult { value: w, iterations: 0, residual });
    }

    let seed = if x < -0.25 {
        branch_series(p)
    } else if x <= std::f64::consts::E {
        // ln(1+x) tracks W0 well on the middle range.
        x.ln_1p()
    } else {
        let l = x.ln();
        let ll = l.ln();
        l - ll + ll / l
    };
    halley_direct(seed.max(-1.0 + 1e-12), x)
}

fn branch_series(p: f64) -> f64 {
    -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 - p * 43.0 / 540.0)))
}

/// Halley iteration on g(w) = w e^w - x.
fn halley_direct(mut w: f64, x: f64) -> Result<LambertResult> {
    let tol = 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE);
    let mut residual = f64::INFINITY;
    for iter in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let g = w * ew - x;
        residual = g.abs();
        if residual <= tol {
            return Ok(LambertResult { value: w.max(-1.0), iterations: iter, residual });
        }
        let gp = ew * (1.0 + w);
        // Halley step: dw = g / (g' - g (w + 2) / (2 (w + 1))).
        let denom = gp - g * (w + 2.0) / (2.0 * (w + 1.0));
        let dw = if denom != 0.0 && denom.is_finite() { g / denom } else { g / gp };
        let next = w - dw;
        let next = if next <= -1.0 { 0.5 * (w - 1.0) } else { next };
        if (next - w).abs() <= 2.0 * f64::EPSILON * (1.0 + w.abs()) {
            w = next;
            let ew = w.exp();
            residual = (w * ew - x).abs();
            return Ok(LambertResult { value: w.max(-1.0), iterations: iter + 1, residual });
        }
        w = next;
    }
    if residual <= 64.0 * tol {
        // Limit-cycle of one ulp around the root; accept.
        return Ok(LambertResult { value: w.max(-1.0), iterations: MAX_ITERATIONS, residual });
    }
    Err(Error::Convergence(format!(
        "lambert_w0({x}) residual {residual:.3e} after {MAX_ITERATIONS} iterations"
    )))
}

// ---------------------------------------------------------------------------
// Log-argument form
// ---------------------------------------------------------------------------

/// `W0(exp(y))` for any finite `y`. See [`lambert_w0_of_exp_detailed`].
pub fn lambert_w0_of_exp(y: f64) -> Result<f64> {
    Ok(lambert_w0_of_exp_detailed(y)?.value)
}

/// `W0(exp(y))` via the root of `w + ln w = y`, with diagnostics.
///
/// Total over finite `y`: the argument `exp(y)` is always above the branch
/// point, and `y` itself never overflows. For very negative `y` the value is
/// `exp(y)` to machine accuracy and is returned without iterating.
pub fn lambert_w0_of_exp_detailed(y: f64) -> Result<LambertResult> {
    if y.is_nan() {
        return Err(Error::Domain("lambert_w0_of_exp: argument is NaN".into()));
    }
    if !y.is_finite() {
        return Err(Error::Domain(format!("lambert_w0_of_exp: argument {y} is not finite")));
    }
    // W0(e^y) = e^y (1 - e^y + ...); below e^y ~ 1e-16 the first term is
    // already correct to the last bit.
    if y < -37.0 {
        let w = y.exp();
        return Ok(LambertResult { value: w, iterations: 0, residual: w });
    }

    let seed = if y <= 0.5 {
        let ey = y.exp();
        ey / (1.0 + ey)
    } else if y < 3.0 {
        0.567 + 0.41 * y
    } else {
        let ly = y.ln();
        y - ly + ly / y
    };

    let tol = 4.0 * f64::EPSILON * y.abs().max(1.0);
    let mut w = seed.max(1e-300);
    let mut residual = f64::INFINITY;
    for iter in 0..MAX_ITERATIONS {
        let h = w + w.ln() - y;
        residual = h.abs();
        if residual <= tol {
            return Ok(LambertResult { value: w, iterations: iter, residual });
        }
        let hp = 1.0 + 1.0 / w;
        // Halley step for h with h'' = -1/w^2.
        let denom = hp + h / (2.0 * w * w * hp);
        let next = w - h / denom;
        let next = if next <= 0.0 { 0.5 * w } else { next };
        if (next - w).abs() <= 2.0 * f64::EPSILON * w.abs() {
            w = next;
            residual = (w + w.ln() - y).abs();
            return Ok(LambertResult { value: w, iterations: iter + 1, residual });
        }
        w = next;
    }
    if residual <= 64.0 * tol {
        return Ok(LambertResult { value: w, iterations: MAX_ITERATIONS, residual });
    }
    Err(Error::Convergence(format!(
        "lambert_w0_of_exp({y}) residual {residual:.3e} after {MAX_ITERATIONS} iterations"
    )))
}
