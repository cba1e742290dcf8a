//! Stiff transient simulation of the receiver front end.
//!
//! The optical input is a piecewise-constant symbol stream. Between symbol
//! edges the circuit obeys two state equations (inductor current in the
//! harvesting branch, capacitor voltage in the information branch) coupled
//! to the nonlinear photovoltaic cell through two algebraic node equations.
//! Each time step discretizes the state equations with the trapezoidal rule,
//! eliminates the states ("companion model"), and solves the remaining 2-D
//! nonlinear system for the cell voltage `v_a` and branch node voltage `v_b`
//! with a damped Newton iteration.
//!
//! The trapezoidal companion form makes the capacitor charge balance
//! telescoping: the trapezoidal integral of the recorded information-branch
//! current over any window equals `Cd * delta(v_C)` up to rounding, which the
//! simulator exposes as a built-in diagnostic.

use crate::circuit::{
    cell_current, cell_current_derivative, spectral_response, CircuitParams, DiodeModel,
    OpticalDrive, PhysicalConstants,
};
use crate::{Error, Result};

/// A frame of piecewise-constant transmit symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    /// Transmit optical power per symbol, in watts.
    pub symbols: Vec<f64>,
    /// Symbol duration in seconds.
    pub t_sym: f64,
    /// Peak transmit power bound in watts (`0 <= symbols[k] <= a2`).
    pub a2: f64,
}

impl SymbolFrame {
    /// Builds a frame after checking the symbol values against the peak bound.
    pub fn new(symbols: Vec<f64>, t_sym: f64, a2: f64) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidInput("symbol frame is empty".into()));
        }
        if !t_sym.is_finite() || t_sym <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "symbol duration must be positive and finite, got {t_sym}"
            )));
        }
        if !a2.is_finite() || a2 < 0.0 {
            return Err(Error::InvalidInput(format!(
                "peak power bound must be nonnegative and finite, got {a2}"
            )));
        }
        for (k, &s) in symbols.iter().enumerate() {
            if !s.is_finite() || s < 0.0 || s > a2 {
                return Err(Error::InvalidInput(format!(
                    "symbol {k} = {s} outside [0, {a2}]"
                )));
            }
        }
        Ok(Self { symbols, t_sym, a2 })
    }

    /// Total frame duration in seconds.
    pub fn duration(&self) -> f64 {
        self.t_sym * self.symbols.len() as f64
    }
}

/// Dynamic state of the receiver: inductor current and capacitor voltage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimState {
    /// Inductor (harvesting-branch) current in amperes.
    pub i_l: f64,
    /// Coupling-capacitor voltage in volts.
    pub v_c: f64,
}

/// How to initialize the dynamic state before the first symbol.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialState {
    /// Start from the DC operating point of the first symbol (settled receiver).
    #[default]
    DcOfFirstSymbol,
    /// Start from zero stored energy (cold receiver).
    Cold,
    /// Start from an explicit state.
    Given(SimState),
}

/// Integrator controls.
///
/// The step size starts at `dt_edge` after every symbol edge and grows by
/// `growth` per accepted step up to `dt_max`; both bounds are additionally
/// clamped to one thousandth of the symbol duration so that every symbol is
/// resolved. A Newton solve that fails to converge within `max_newton`
/// iterations halves the step; if the step falls below `dt_min` the
/// simulation aborts with [`Error::Simulation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Step size immediately after a symbol edge, seconds.
    pub dt_edge: f64,
    /// Largest step size once the transient has settled, seconds.
    pub dt_max: f64,
    /// Multiplicative step growth per accepted step (> 1).
    pub growth: f64,
    /// Newton iteration budget per step.
    pub max_newton: usize,
    /// Smallest step size before the simulation gives up, seconds.
    pub dt_min: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_edge: 1e-7,
            dt_max: 1e-4,
            growth: 1.5,
            max_newton: 50,
            dt_min: 1e-13,
        }
    }
}

impl SimConfig {
    /// Checks internal consistency of the controls.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > 0.0 && self.dt_min.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "dt_min must be positive, got {}",
                self.dt_min
            )));
        }
        if !(self.dt_edge >= self.dt_min && self.dt_edge.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "dt_edge must be finite and at least dt_min, got {}",
                self.dt_edge
            )));
        }
        if !(self.dt_max >= self.dt_edge && self.dt_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "dt_max must be finite and at least dt_edge, got {}",
                self.dt_max
            )));
        }
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "growth must exceed 1, got {}",
                self.growth
            )));
        }
        Ok(())
    }
}

/// Simulated waveform, stored column-wise in sample order.
///
/// Column meanings: `t` simulation time (s); `s` transmit power (W);
/// `v_a` cell terminal voltage (V); `v_b` branch node voltage (V);
/// `i_out` cell output current through the series resistance (A);
/// `i_eh` harvesting-branch current (A, equal to `i_l` by definition);
/// `i_id` information-branch current (A); `v_c` capacitor voltage (V);
/// `i_l` inductor current (A).
#[derive(Debug, Clone, Default)]
pub struct Waveform {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub v_a: Vec<f64>,
    pub v_b: Vec<f64>,
    pub i_out: Vec<f64>,
    pub i_eh: Vec<f64>,
    pub i_id: Vec<f64>,
    pub v_c: Vec<f64>,
    pub i_l: Vec<f64>,
    /// Sample index of the last sample of each symbol (lands exactly on the
    /// symbol boundary).
    pub boundary_index: Vec<usize>,
    /// Total Newton iterations spent over the whole run.
    pub total_newton_iterations: u64,
    /// Smallest step size that was accepted.
    pub min_accepted_dt: f64,
}

impl Waveform {
    /// Number of stored samples.
    pub fn len(&self) -> usize {
        self.t.len()
    }

    /// True when no samples are stored.
    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, t: f64, s: f64, v_a: f64, v_b: f64, i_out: f64, i_id: f64, state: SimState) {
        self.t.push(t);
        self.s.push(s);
        self.v_a.push(v_a);
        self.v_b.push(v_b);
        self.i_out.push(i_out);
        self.i_eh.push(state.i_l);
        self.i_id.push(i_id);
        self.v_c.push(state.v_c);
        self.i_l.push(state.i_l);
    }

    /// Largest violation of current conservation `i_out = i_eh + i_id`
    /// across all samples, in amperes.
    pub fn max_conservation_residual(&self) -> f64 {
        self.i_out
            .iter()
            .zip(self.i_eh.iter())
            .zip(self.i_id.iter())
            .map(|((&out, &eh), &id)| (out - eh - id).abs())
            .fold(0.0, f64::max)
    }

    /// Compares the trapezoidal integral of the information-branch current
    /// over `[start, end]` (sample indices) against the capacitor charge
    /// change `Cd * (v_c[end] - v_c[start])`.
    ///
    /// Returns `(integral, charge_change)` in coulombs. The two agree to
    /// rounding because the integrator is trapezoidal.
    pub fn charge_balance(&self, start: usize, end: usize, cd: f64) -> (f64, f64) {
        assert!(start <= end && end < self.len(), "sample range out of bounds");
        let mut integral = 0.0;
        for n in start..end {
            let dt = self.t[n + 1] - self.t[n];
            integral += 0.5 * dt * (self.i_id[n] + self.i_id[n + 1]);
        }
        let charge = cd * (self.v_c[end] - self.v_c[start]);
        (integral, charge)
    }
}

/// End-of-symbol settling diagnostics.
///
/// `i_id_end` is the information-branch current at the symbol boundary, which
/// decays toward zero as the receiver settles; `vc_mismatch` is
/// `|v_C - RL * i_EH|` at the boundary, which decays toward zero as the
/// capacitor finishes charging to the harvesting-branch voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolMetrics {
    /// Symbol index.
    pub k: usize,
    /// |information-branch current| at the end of the symbol, amperes.
    pub i_id_end: f64,
    /// |v_C - RL*i_EH| at the end of the symbol, volts.
    pub vc_mismatch: f64,
    /// Harvesting-branch current at the end of the symbol, amperes.
    pub i_eh_end: f64,
    /// `i_id_end` relative to the harvesting current scale.
    pub i_id_rel: f64,
    /// `vc_mismatch` relative to the harvesting voltage scale.
    pub vc_rel: f64,
}

/// Per-symbol settling metrics at the symbol boundaries.
///
/// Relative metrics are normalized by the largest end-of-symbol harvesting
/// current (voltage) over the frame, so they stay meaningful for symbols
/// whose own level is near zero.
pub fn steady_state_metrics(w: &Waveform, params: &CircuitParams) -> Vec<SymbolMetrics> {
    let i_scale = w
        .boundary_index
        .iter()
        .map(|&idx| w.i_eh[idx].abs())
        .fold(f64::MIN_POSITIVE, f64::max);
    let v_scale = params.rl * i_scale;
    w.boundary_index
        .iter()
        .enumerate()
        .map(|(k, &idx)| {
            let i_id_end = w.i_id[idx].abs();
            let vc_mismatch = (w.v_c[idx] - params.rl * w.i_eh[idx]).abs();
            SymbolMetrics {
                k,
                i_id_end,
                vc_mismatch,
                i_eh_end: w.i_eh[idx],
                i_id_rel: i_id_end / i_scale,
                vc_rel: vc_mismatch / v_scale,
            }
        })
        .collect()
}

/// Trapezoidal companion coefficients for one step of size `dt`, built from
/// the previous step's node voltage and state.
///
/// After the step, `i_l = a_l + b_l * v_b` and `v_c = a_c + b_c * v_b`.
struct Companion {
    a_l: f64,
    b_l: f64,
    a_c: f64,
    b_c: f64,
}

impl Companion {
    /// `dt = 0` freezes the states, which turns the step solve into the
    /// consistent-initialization solve.
    fn new(dt: f64, v_b_prev: f64, state: SimState, params: &CircuitParams) -> Self {
        let alpha_l = dt * params.rl / (2.0 * params.l);
        let gamma = dt / (2.0 * params.l);
        let b_l = gamma / (1.0 + alpha_l);
        let a_l = ((1.0 - alpha_l) * state.i_l + gamma * v_b_prev) / (1.0 + alpha_l);
        let alpha_c = dt / (2.0 * params.rd * params.cd);
        let b_c = alpha_c / (1.0 + alpha_c);
        let a_c = ((1.0 - alpha_c) * state.v_c + alpha_c * v_b_prev) / (1.0 + alpha_c);
        Self { a_l, b_l, a_c, b_c }
    }

    fn i_l(&self, v_b: f64) -> f64 {
        self.a_l + self.b_l * v_b
    }

    fn v_c(&self, v_b: f64) -> f64 {
        self.a_c + self.b_c * v_b
    }
}

/// Damped 2-D Newton solve of the nodal equations at one time point.
///
/// Unknowns are the cell terminal voltage `v_a` and the branch node voltage
/// `v_b`; the states enter through the companion coefficients. Returns the
/// converged `(v_a, v_b)` or `None` if the iteration budget is exhausted.
fn solve_step(
    j: f64,
    comp: &Companion,
    params: &CircuitParams,
    model: DiodeModel,
    seed: (f64, f64),
    max_newton: usize,
    tol: f64,
) -> Result<Option<(f64, f64)>> {
    let (mut v_a, mut v_b) = seed;
    // Keep the cell voltage inside the representable diode range; the
    // iterate is pulled back by the huge derivative on the next update.
    const V_A_MAX: f64 = 2.0;
    const V_A_MIN: f64 = -100.0;
    const V_B_LIMIT: f64 = 1e3;
    const MAX_STEP_V_A: f64 = 0.1;
    for _ in 0..max_newton {
        let g = cell_current(v_a, j, params, model)?;
        let g_d = cell_current_derivative(v_a, params, model)?;
        let i_rs = (v_a - v_b) / params.rs;
        let f1 = g - i_rs;
        let f2 = i_rs - comp.i_l(v_b) - (v_b - comp.v_c(v_b)) / params.rd;
        if f1.abs() <= tol && f2.abs() <= tol {
            return Ok(Some((v_a, v_b)));
        }
        let j11 = g_d - 1.0 / params.rs;
        let j12 = 1.0 / params.rs;
        let j21 = 1.0 / params.rs;
        let j22 = -1.0 / params.rs - comp.b_l - (1.0 - comp.b_c) / params.rd;
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return Ok(None);
        }
        let mut d_a = (j22 * f1 - j12 * f2) / det;
        let d_b = (-j21 * f1 + j11 * f2) / det;
        if !d_a.is_finite() || !d_b.is_finite() {
            return Ok(None);
        }
        // The diode makes f1 extremely stiff in v_a; damp that component.
        d_a = d_a.clamp(-MAX_STEP_V_A, MAX_STEP_V_A);
        v_a = (v_a - d_a).clamp(V_A_MIN, V_A_MAX);
        v_b = (v_b - d_b).clamp(-V_B_LIMIT, V_B_LIMIT);
    }
    Ok(None)
}

/// Simulates the receiver response to a symbol frame.
///
/// The drive supplies the wavelength, channel gain, ambient photocurrent and
/// quantum efficiency; its `p` field is ignored because the instantaneous
/// received power is `h * symbols[k]`. Samples are recorded after every
/// accepted step, plus one consistent sample at `t = 0`; every symbol
/// boundary lands exactly on a sample.
pub fn simulate(
    frame: &SymbolFrame,
    drive: &OpticalDrive,
    params: &CircuitParams,
    cfg: &SimConfig,
    init: InitialState,
) -> Result<Waveform> {
    cfg.validate()?;
    params.validate()?;
    drive.validate()?;
    if frame.symbols.is_empty() {
        return Err(Error::InvalidInput("symbol frame is empty".into()));
    }
    let model = DiodeModel::full();
    let r0 = spectral_response(
        drive.lambda0,
        drive.quantum_efficiency,
        &PhysicalConstants::default(),
    );
    let photo_currents: Vec<f64> = frame
        .symbols
        .iter()
        .map(|&s| r0 * drive.h * s + drive.pa)
        .collect();
    for (k, &j) in photo_currents.iter().enumerate() {
        if j < 0.0 {
            return Err(Error::Domain(format!(
                "photocurrent for symbol {k} is negative ({j}); ambient level too low"
            )));
        }
    }

    // Resolve every symbol with at least ~1000 steps.
    let dt_edge = cfg.dt_edge.min(frame.t_sym / 1e3).max(cfg.dt_min);
    let dt_max = cfg.dt_max.min(frame.t_sym / 1e3).max(dt_edge);

    let mut state = match init {
        InitialState::Cold => SimState::default(),
        InitialState::Given(s) => s,
        InitialState::DcOfFirstSymbol => {
            let op = crate::circuit::solve_dc_operating_point(photo_currents[0], params, model)?;
            SimState {
                i_l: op.i_eh,
                v_c: params.rl * op.i_eh,
            }
        }
    };

    // Consistent algebraic start: solve the node equations at t = 0 with the
    // states frozen (dt = 0 companion).
    let mut seed = {
        let op = crate::circuit::solve_dc_operating_point(photo_currents[0], params, model)?;
        (op.v_in, params.rl * op.i_eh)
    };
    let j0 = photo_currents[0];
    let tol0 = newton_tolerance(j0, &state);
    let comp0 = Companion::new(0.0, 0.0, state, params);
    let (v_a0, v_b0) = solve_step(j0, &comp0, params, model, seed, cfg.max_newton.max(50), tol0)?
        .ok_or_else(|| Error::Simulation {
            t: 0.0,
            detail: "consistent initialization did not converge".into(),
        })?;
    let mut wave = Waveform {
        min_accepted_dt: f64::INFINITY,
        ..Waveform::default()
    };
    {
        let i_out = (v_a0 - v_b0) / params.rs;
        let i_id = (v_b0 - state.v_c) / params.rd;
        wave.push(0.0, frame.symbols[0], v_a0, v_b0, i_out, i_id, state);
    }
    seed = (v_a0, v_b0);

    let mut v_b_prev = v_b0;
    for (k, &j) in photo_currents.iter().enumerate() {
        let s_k = frame.symbols[k];
        let mut tau = 0.0; // time within the symbol, avoids global-time drift
        let mut dt = dt_edge;
        while tau < frame.t_sym {
            let remaining = frame.t_sym - tau;
            let mut dt_try = dt.min(remaining);
            let (v_a, v_b, comp, dt_used) = loop {
                let comp = Companion::new(dt_try, v_b_prev, state, params);
                let tol = newton_tolerance(j, &state);
                match solve_step(j, &comp, params, model, seed, cfg.max_newton, tol)? {
                    Some((v_a, v_b)) => break (v_a, v_b, comp, dt_try),
                    None => {
                        dt_try *= 0.5;
                        if dt_try < cfg.dt_min {
                            return Err(Error::Simulation {
                                t: k as f64 * frame.t_sym + tau,
                                detail: format!(
                                    "Newton failed to converge even at dt = {dt_try:.3e}"
                                ),
                            });
                        }
                    }
                }
            };
            wave.total_newton_iterations += 1;
            wave.min_accepted_dt = wave.min_accepted_dt.min(dt_used);
            state = SimState {
                i_l: comp.i_l(v_b),
                v_c: comp.v_c(v_b),
            };
            // Snap to the boundary when the step covered the remainder.
            tau = if dt_used >= remaining { frame.t_sym } else { tau + dt_used };
            let t_global = k as f64 * frame.t_sym + tau;
            let i_out = (v_a - v_b) / params.rs;
            let i_id = (v_b - state.v_c) / params.rd;
            wave.push(t_global, s_k, v_a, v_b, i_out, i_id, state);
            seed = (v_a, v_b);
            v_b_prev = v_b;
            dt = (dt_used * cfg.growth).min(dt_max);
        }
        wave.boundary_index.push(wave.len() - 1);
        // Restart the step-size ramp at the upcoming edge.
    }
    Ok(wave)
}

/// Absolute Newton residual tolerance for the nodal currents, scaled to the
/// photocurrent and stored inductor current.
fn newton_tolerance(j: f64, state: &SimState) -> f64 {
    1e-15 + 1e-12 * (j.abs() + state.i_l.abs())
}
