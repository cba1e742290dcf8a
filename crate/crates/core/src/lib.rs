//! Models of an optical receiver that splits a photovoltaic cell's output
//! into a DC energy-harvesting path and an AC information path.
//!
//! * [`circuit`] - device constants and the two-diode cell model.
//! * [`eh`] - steady-state harvested power: closed form via Lambert W,
//!   maximum-power-point references, and calibrated baselines.
//! * [`transient`] - stiff two-state simulation of the receiver front end
//!   driven by a modulated optical waveform.
//! * [`rate`] - achievable information rates of the AC path under a peak
//!   constraint, for several input distributions.
//! * [`sweep`] - deterministic parameter sweeps, parallel when the `rayon`
//!   feature is enabled (it is by default).
//! * [`report`] - CSV serialization with pinned headers and digests.
//!
//! ```
//! use fso_swipt_core::circuit::{spectral_response, CircuitParams, PhysicalConstants};
//! use fso_swipt_core::eh::{harvested_power_closed_form, EhModelParams};
//!
//! let model = EhModelParams::from_circuit(CircuitParams::default()).unwrap();
//! let r0 = spectral_response(950e-9, 0.7, &PhysicalConstants::default());
//! // 10 mW of light at 950 nm, no ambient photocurrent.
//! let sol = harvested_power_closed_form(&model, r0, 10e-3, 0.0).unwrap();
//! assert!(sol.power > 1e-5 && sol.power < 2e-5);
//! ```

pub mod circuit;
pub mod eh;
pub mod error;
pub mod lambert;
pub mod numerics;
pub mod rate;
pub mod report;
pub mod sweep;
pub mod transient;
pub mod validate;

pub use error::{Error, Result};
