//! Receiver circuit domain: physical constants, device parameters, the
//! induced-photocurrent map, the diode-node current law, the exact DC
//! operating-point solver, and the maximum-power-point search.
//!
//! The receiver is a photovoltaic cell (current source `j` in parallel with
//! an ideality-1 diode, an ideality-2 diode, and a shunt resistance) feeding
//! a series resistance `Rs` and then two branches: the energy path (inductor
//! `L` in series with the load `RL`, carrying the DC component) and the
//! information path (capacitor `Cd` in series with `Rd`, carrying the AC
//! component). The DC solver here is the exact reference the closed-form
//! model in [`crate::eh`] is validated against.

use crate::error::{Error, Result};
use crate::numerics::golden_section_max;

// ---------------------------------------------------------------------------
// Constants and parameters
// ---------------------------------------------------------------------------

/// Fundamental constants (2019 SI exact values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Elementary charge, C.
    pub q0: f64,
    /// Planck constant, J s.
    pub eta: f64,
    /// Speed of light in vacuum, m/s.
    pub cl: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { q0: 1.602_176_634e-19, eta: 6.626_070_15e-34, cl: 2.997_924_58e8 }
    }
}

/// Largest accepted diode exponent `v / VT`. With these parameters the
/// operating voltage never exceeds ~1 V (exponent ~40); an exponent past 700
/// would overflow `exp` and can only come from a non-physical input.
pub const MAX_DIODE_EXPONENT: f64 = 700.0;

/// Electrical parameters of the receiver circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Ideality-1 diode saturation current, A.
    pub is1: f64,
    /// Ideality-2 diode saturation current, A.
    pub is2: f64,
    /// Thermal voltage, V.
    pub vt: f64,
    /// Series resistance, Ohm.
    pub rs: f64,
    /// Shunt resistance, Ohm.
    pub rsh: f64,
    /// Energy-path load resistance, Ohm.
    pub rl: f64,
    /// Information-path resistance, Ohm.
    pub rd: f64,
    /// Information-path coupling capacitance, F.
    pub cd: f64,
    /// Energy-path inductance, H.
    pub l: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self {
            is1: 1e-9,
            is2: 1e-9,
            vt: 25.85e-3,
            rs: 100.0,
            rsh: 100e6,
            rl: 10e3,
            rd: 10e3,
            cd: 2.5e-6,
            l: 10e-3,
        }
    }
}

impl CircuitParams {
    /// Total DC series resistance seen by the cell: `RL + Rs`.
    pub fn r_sigma(&self) -> f64 {
        self.rl + self.rs
    }

    /// Energy-path time constant `L / RL`.
    pub fn eh_time_constant(&self) -> f64 {
        self.l / self.rl
    }

    /// Information-path time constant `Rd * Cd`.
    pub fn info_time_constant(&self) -> f64 {
        self.rd * self.cd
    }

    /// Checks that every parameter is strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("is1", self.is1),
            ("is2", self.is2),
            ("vt", self.vt),
            ("rs", self.rs),
            ("rsh", self.rsh),
            ("rl", self.rl),
            ("rd", self.rd),
            ("cd", self.cd),
            ("l", self.l),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "circuit parameter {name} = {value} must be positive and finite"
                )));
            }
        }
        Ok(())
    }
}

/// Optical-side inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalDrive {
    /// Carrier wavelength, m.
    pub lambda0: f64,
    /// Channel gain, dimensionless, in (0, 1].
    pub h: f64,
    /// Received optical power at the cell, W.
    pub p: f64,
    /// Ambient-light photocurrent, A.
    pub pa: f64,
    /// Conversion efficiency of the p-n junction, dimensionless.
    pub quantum_efficiency: f64,
}

impl OpticalDrive {
    /// Drive at full channel gain and the default 0.7 conversion efficiency.
    pub fn new(lambda0: f64, p: f64, pa: f64) -> Self {
        Self { lambda0, h: 1.0, p, pa, quantum_efficiency: 0.7 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
            return Err(Error::InvalidInput(format!("wavelength {} m", self.lambda0)));
        }
        if !(self.h > 0.0 && self.h <= 1.0) {
            return Err(Error::InvalidInput(format!("channel gain {} outside (0, 1]", self.h)));
        }
        if !(self.p >= 0.0 && self.pa >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "optical power {} W and ambient photocurrent {} A must be nonnegative",
                self.p, self.pa
            )));
        }
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "quantum efficiency {} outside (0, 1]",
                self.quantum_efficiency
            )));
        }
        Ok(())
    }
}

/// Responsivity `r(lambda0) = qe * lambda0 * q0 / (eta * cl)` in A/W.
pub fn spectral_response(lambda0: f64, qe: f64, consts: &PhysicalConstants) -> f64 {
    qe * lambda0 * consts.q0 / (consts.eta * consts.cl)
}

/// Photocurrent induced by a drive: `j = r0 * p + pa`.
pub fn induced_current(drive: &OpticalDrive, r0: f64) -> f64 {
    r0 * drive.p + drive.pa
}

// ---------------------------------------------------------------------------
// Diode-node current law
// ---------------------------------------------------------------------------

/// Which diodes the cell model includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiodeKind {
    /// Ideality-1 diffusion diode plus ideality-2 recombination diode.
    TwoDiode,
    /// Ideality-1 diode only.
    SingleDiodeIdeality1,
}

/// Cell model selector: diode count plus the shunt-leakage term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiodeModel {
    pub kind: DiodeKind,
    pub include_shunt: bool,
}

impl DiodeModel {
    /// The full equivalent circuit: both diodes and the shunt.
    pub fn full() -> Self {
        Self { kind: DiodeKind::TwoDiode, include_shunt: true }
    }

    /// Single ideality-1 diode, no shunt: the circuit the closed-form
    /// harvesting model solves exactly.
    pub fn single_diode_bare() -> Self {
        Self { kind: DiodeKind::SingleDiodeIdeality1, include_shunt: false }
    }

    pub fn without_shunt(self) -> Self {
        Self { include_shunt: false, ..self }
    }
}

/// Current available to the series path at diode-node voltage `v`:
/// `j - Is1*(e^{v/VT} - 1) - Is2*(e^{v/2VT} - 1) - v/Rsh`, with the second
/// and third terms present per `model`.
///
/// Negative `v` (reverse bias, reached transiently after a falling power
/// edge) is fine; the exponentials simply decay. Errors only when `v/VT`
/// exceeds [`MAX_DIODE_EXPONENT`], which no physical operating point does.
pub fn cell_current(v: f64, j: f64, params: &CircuitParams, model: DiodeModel) -> Result<f64> {
    if v / params.vt > MAX_DIODE_EXPONENT {
        return Err(Error::Domain(format!(
            "diode exponent v/VT = {:.1} exceeds {MAX_DIODE_EXPONENT}; non-physical input",
            v / params.vt
        )));
    }
    Ok(cell_current_raw(v, j, params, model))
}

/// Derivative of [`cell_current`] with respect to `v` (always negative).
pub fn cell_current_derivative(v: f64, params: &CircuitParams, model: DiodeModel) -> Result<f64> {
    if v / params.vt > MAX_DIODE_EXPONENT {
        return Err(Error::Domain(format!(
            "diode exponent v/VT = {:.1} exceeds {MAX_DIODE_EXPONENT}; non-physical input",
            v / params.vt
        )));
    }
    Ok(cell_current_derivative_raw(v, params, model))
}

pub(crate) fn cell_current_raw(v: f64, j: f64, params: &CircuitParams, model: DiodeModel) -> f64 {
    // exp_m1 keeps the diode terms accurate at the millivolt node voltages
    // reached for nanoamp photocurrents.
    let mut i = j - params.is1 * (v / params.vt).exp_m1();
    if model.kind == DiodeKind::TwoDiode {
        i -= params.is2 * (v / (2.0 * params.vt)).exp_m1();
    }
    if model.include_shunt {
        i -= v / params.rsh;
    }
    i
}

pub(crate) fn cell_current_derivative_raw(
    v: f64,
    params: &CircuitParams,
    model: DiodeModel,
) -> f64 {
    let mut d = -params.is1 / params.vt * (v / params.vt).exp();
    if model.kind == DiodeKind::TwoDiode {
        d -= params.is2 / (2.0 * params.vt) * (v / (2.0 * params.vt)).exp();
    }
    if model.include_shunt {
        d -= 1.0 / params.rsh;
    }
    d
}

fn min_saturation_current(params: &CircuitParams, model: DiodeModel) -> f64 {
    match model.kind {
        DiodeKind::TwoDiode => params.is1.min(params.is2),
        DiodeKind::SingleDiodeIdeality1 => params.is1,
    }
}

/// Upper bracket for the diode-node voltage: past this point the diode
/// current alone exceeds `j`, so any load equation's residual is negative.
fn bracket_v_max(j: f64, params: &CircuitParams, model: DiodeModel) -> Result<f64> {
    let v_max = 2.0 * params.vt * (j / min_saturation_current(params, model) + 2.0).ln() + 0.1;
    if v_max / params.vt > MAX_DIODE_EXPONENT {
        return Err(Error::Domain(format!(
            "photocurrent {j} A puts the voltage bracket past the exponent guard"
        )));
    }
    Ok(v_max)
}

// ---------------------------------------------------------------------------
// DC operating point
// ---------------------------------------------------------------------------

/// A solved DC steady state of the energy path.
#[derive(Debug, Clone, Copy)]
pub struct DcOperatingPoint {
    /// Diode-node voltage, V.
    pub v_in: f64,
    /// Load current through `Rs + RL`, A. Equals `v_in / r_sigma`.
    pub i_eh: f64,
    /// Ideality-1 diode current, A.
    pub i_d1: f64,
    /// Ideality-2 diode current, A (zero for the single-diode model).
    pub i_d2: f64,
    /// Shunt leakage current, A (zero when the shunt is excluded).
    pub i_sh: f64,
    /// Power delivered to `RL`: `i_eh^2 * RL`, W.
    pub p_harv: f64,
    /// Final defect of the node equation, A.
    pub kcl_residual: f64,
}

/// Solves the DC node equation `cell_current(v, j) = v / r_sigma` exactly.
///
/// In DC the inductor is a short and the capacitor an open, so the full
/// photocurrent splits between the diodes/shunt and the `Rs + RL` path. The
/// residual is strictly decreasing in `v`, positive at 0 and negative at the
/// bracket top, so Newton safeguarded by bisection cannot fail. Iterates to
/// the floating-point floor; the returned residual always satisfies
/// `|residual| <= 1e-15 + 1e-12 * j`.
pub fn solve_dc_operating_point(
    j: f64,
    params: &CircuitParams,
    model: DiodeModel,
) -> Result<DcOperatingPoint> {
    if !(j >= 0.0) || !j.is_finite() {
        return Err(Error::Domain(format!("photocurrent j = {j} A must be nonnegative")));
    }
    let r_sigma = params.r_sigma();
    if j == 0.0 {
        return Ok(DcOperatingPoint {
            v_in: 0.0,
            i_eh: 0.0,
            i_d1: 0.0,
            i_d2: 0.0,
            i_sh: 0.0,
            p_harv: 0.0,
            kcl_residual: 0.0,
        });
    }

    let v_max = bracket_v_max(j, params, model)?;
    let g = |v: f64| cell_current_raw(v, j, params, model) - v / r_sigma;
    if !(g(v_max) < 0.0) {
        return Err(Error::Convergence(format!(
            "voltage bracket invalid at j = {j} A: residual at v_max = {v_max} not negative"
        )));
    }

    // Two seeds bracket the operating regimes: the diode carrying all of j
    // (high drive) and the load carrying all of j (low drive).
    let mut v = (params.vt * (j / params.is1).ln_1p()).min(j * r_sigma).clamp(0.0, v_max);
    let mut lo = 0.0f64;
    let mut hi = v_max;
    // Converge to the rounding floor of g, far below the guaranteed bound;
    // the closed-form equivalence checks need ~1e-13 relative on i_eh.
    let floor = 8.0 * f64::EPSILON * j;
    let mut best_v = v;
    let mut best_g = f64::INFINITY;

    for _ in 0..200 {
        let gv = g(v);
        if gv.abs() < best_g {
            best_g = gv.abs();
            best_v = v;
        }
        if gv.abs() <= floor {
            break;
        }
        if gv > 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let dg = cell_current_derivative_raw(v, params, model) - 1.0 / r_sigma;
        let newton = v - gv / dg;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - v).abs() <= f64::EPSILON * v.abs() {
            break;
        }
        v = next;
    }

    let v = best_v;
    let residual = g(v);
    if residual.abs() > 1e-15 + 1e-12 * j {
        return Err(Error::Convergence(format!(
            "DC solve stalled at j = {j} A: residual {residual:.3e} exceeds bound"
        )));
    }
    let i_eh = v / r_sigma;
    let i_d1 = params.is1 * (v / params.vt).exp_m1();
    let i_d2 = match model.kind {
        DiodeKind::TwoDiode => params.is2 * (v / (2.0 * params.vt)).exp_m1(),
        DiodeKind::SingleDiodeIdeality1 => 0.0,
    };
    let i_sh = if model.include_shunt { v / params.rsh } else { 0.0 };
    Ok(DcOperatingPoint {
        v_in: v,
        i_eh,
        i_d1,
        i_d2,
        i_sh,
        p_harv: i_eh * i_eh * params.rl,
        kcl_residual: residual,
    })
}

// ---------------------------------------------------------------------------
// Maximum power point
// ---------------------------------------------------------------------------

/// A maximum-power-point solution at the cell terminals.
#[derive(Debug, Clone, Copy)]
pub struct MppPoint {
    /// Cell voltage at the maximum, V.
    pub v: f64,
    /// Cell output current at the maximum, A.
    pub i: f64,
    /// Extracted power `v * i`, W.
    pub power: f64,
}

/// Maximum extractable cell power: `max over v of v * cell_current(v, j)`.
///
/// This is the power an ideally retuned load would draw at the cell
/// terminals, before the fixed series path. The power curve is unimodal on
/// `[0, v_max]`; golden-section search to relative tolerance 1e-10.
pub fn mpp_power(j: f64, params: &CircuitParams, model: DiodeModel) -> Result<MppPoint> {
    if !(j >= 0.0) || !j.is_finite() {
        return Err(Error::Domain(format!("photocurrent j = {j} A must be nonnegative")));
    }
    if j == 0.0 {
        return Ok(MppPoint { v: 0.0, i: 0.0, power: 0.0 });
    }
    let v_max = bracket_v_max(j, params, model)?;
    let (v, power) =
        golden_section_max(|v| v * cell_current_raw(v, j, params, model), 0.0, v_max, 1e-10);
    let i = cell_current_raw(v, j, params, model);
    Ok(MppPoint { v, i, power })
}
