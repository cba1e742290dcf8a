//! Scalar numerical building blocks: adaptive Simpson quadrature and
//! golden-section line search. Shared by the DC solver (maximum power
//! point), the saturation-current fit, and the rate quadrature.

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature
// ---------------------------------------------------------------------------

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Classic recursive Simpson with Richardson correction `(s2 - s1) / 15`.
/// `max_evals` caps the total number of integrand evaluations; exceeding it
/// is an error rather than a silent loss of accuracy.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, abs_tol: f64, max_evals: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidInput(format!(
            "integration interval [{a}, {b}] is not finite and ordered"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut evals = 3usize;
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(a, b, fa, fm, fb);
    let value = simpson_step(
        &f, a, b, fa, fm, fb, whole, abs_tol, 60, &mut evals, max_evals,
    )?;
    Ok(value)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    eval: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
    evals: &mut usize,
    max_evals: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if *evals > max_evals {
        return Err(Error::Quadrature(format!(
            "evaluation budget {max_evals} exhausted on [{a}, {b}]"
        )));
    }
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    *evals += 2;
    let flm = eval(lm);
    let frm = eval(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let s2 = left + right;
    let err = s2 - whole;
    // The interval is converged when the Richardson estimate err/15 meets the
    // tolerance, or the subinterval has collapsed to floating point spacing.
    if depth == 0 || err.abs() <= 15.0 * abs_tol || (m - a).abs() <= f64::EPSILON * a.abs().max(1.0)
    {
        if depth == 0 && err.abs() > 15.0 * abs_tol {
            return Err(Error::Quadrature(format!(
                "recursion depth exhausted on [{a}, {b}] with error estimate {:.3e}",
                err.abs() / 15.0
            )));
        }
        return Ok(s2 + err / 15.0);
    }
    let half_tol = 0.5 * abs_tol;
    let l = simpson_step(
        eval, a, m, fa, flm, fm, left, half_tol, depth - 1, evals, max_evals,
    )?;
    let r = simpson_step(
        eval, m, b, fm, frm, fb, right, half_tol, depth - 1, evals, max_evals,
    )?;
    Ok(l + r)
}

// ---------------------------------------------------------------------------
// Golden-section search
// ---------------------------------------------------------------------------

/// Maximizes a unimodal `f` on `[a, b]` by golden-section search.
///
/// Shrinks the bracket until its width is below `rel_tol * max(|lo|, |hi|)`,
/// measured on the *current* bracket so the precision is relative to the
/// maximizer itself (the brackets here span anything from saturation
/// currents near 1e-12 A to volt-scale node voltages). Returns
/// `(x*, f(x*))` at the bracket midpoint.
pub fn golden_section_max<F>(f: F, a: f64, b: f64, rel_tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    debug_assert!(b >= a);
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut lo = a;
    let mut hi = b;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while hi - lo > rel_tol * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) && iter < 300 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
        iter += 1;
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Minimizes a unimodal `f` on `[a, b]`; see [`golden_section_max`].
pub fn golden_section_min<F>(f: F, a: f64, b: f64, rel_tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (x, neg) = golden_section_max(|x| -f(x), a, b, rel_tol);
    (x, -neg)
}
