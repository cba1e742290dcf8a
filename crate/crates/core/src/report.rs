//! CSV assembly, checksums, and the run manifest.
//!
//! Tables are built as strings with one pinned header row, comma separators,
//! `.` decimal separator, and `\n` line endings. Floats are written in Rust's
//! shortest round-trip scientific notation (`{:e}`), so emitted bytes are a
//! pure function of the computed values: identical runs produce identical
//! files. Builders refuse to emit non-finite numbers.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::rate::ChannelSample;
use crate::sweep::{CdfRow, EhSweepRow, RateSweepRow};
use crate::transient::{SymbolMetrics, Waveform};
use crate::{Error, Result};

/// Header of the harvested-power sweep table.
pub const EH_SWEEP_HEADER: &str =
    "p_W,lambda_nm,pa_A,P_closed_W,P_oracle2d_W,P_baseline_mpp_W,P_baseline_1d_W,rel_err_closed_vs_oracle";
/// Header of the transient waveform table.
pub const WAVEFORM_HEADER: &str = "t,s,v_a,v_b,i_out,i_EH,i_ID,v_C,i_L";
/// Header of the CDF table.
pub const CDF_TABLE_HEADER: &str = "A2_W,s_W,F_amplitude_uniform,F_paper_eq12,F_uniform";
/// Header of the rate sweep table.
pub const RATE_SWEEP_HEADER: &str = "A2_W,pa_A,R_optimal_nats,R_uniform_nats,R_closed_form_nats";
/// Header of the channel-sample table.
pub const SAMPLE_HEADER: &str = "k,s_W,x_sqrtW,n_sqrtW,y_sqrtW";

/// Checks that a value destined for a table cell is finite.
fn finite(value: f64, column: &str, row: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidInput(format!(
            "refusing to emit non-finite value {value} in column {column}, row {row}"
        )))
    }
}

/// Formats a wavelength (meters) as nanometers: integral nanometer values
/// print as plain integers, anything else in scientific notation.
fn format_nanometers(lambda0: f64) -> String {
    let nm = lambda0 * 1e9;
    let rounded = nm.round();
    if (nm - rounded).abs() <= 1e-6 * rounded.abs().max(1.0) {
        format!("{rounded:.0}")
    } else {
        format!("{nm:e}")
    }
}

/// Builds the harvested-power sweep table.
pub fn eh_sweep_csv(rows: &[EhSweepRow]) -> Result<String> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(EH_SWEEP_HEADER);
    out.push('\n');
    for (idx, row) in rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:e},{},{:e},{:e},{:e},{:e},{:e},{:e}",
            finite(row.p, "p_W", idx)?,
            format_nanometers(finite(row.lambda0, "lambda_nm", idx)?),
            finite(row.pa, "pa_A", idx)?,
            finite(row.p_closed, "P_closed_W", idx)?,
            finite(row.p_oracle2d, "P_oracle2d_W", idx)?,
            finite(row.p_baseline_mpp, "P_baseline_mpp_W", idx)?,
            finite(row.p_baseline_1d, "P_baseline_1d_W", idx)?,
            finite(row.rel_err_closed_vs_oracle, "rel_err_closed_vs_oracle", idx)?,
        );
    }
    Ok(out)
}

/// Builds the transient waveform table.
pub fn waveform_csv(wave: &Waveform) -> Result<String> {
    let mut out = String::with_capacity(96 * (wave.len() + 1));
    out.push_str(WAVEFORM_HEADER);
    out.push('\n');
    for idx in 0..wave.len() {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            finite(wave.t[idx], "t", idx)?,
            finite(wave.s[idx], "s", idx)?,
            finite(wave.v_a[idx], "v_a", idx)?,
            finite(wave.v_b[idx], "v_b", idx)?,
            finite(wave.i_out[idx], "i_out", idx)?,
            finite(wave.i_eh[idx], "i_EH", idx)?,
            finite(wave.i_id[idx], "i_ID", idx)?,
            finite(wave.v_c[idx], "v_C", idx)?,
            finite(wave.i_l[idx], "i_L", idx)?,
        );
    }
    Ok(out)
}

/// Builds the CDF table.
pub fn cdf_table_csv(rows: &[CdfRow]) -> Result<String> {
    let mut out = String::with_capacity(48 * (rows.len() + 1));
    out.push_str(CDF_TABLE_HEADER);
    out.push('\n');
    for (idx, row) in rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e}",
            finite(row.a2, "A2_W", idx)?,
            finite(row.s, "s_W", idx)?,
            finite(row.f_amplitude_uniform, "F_amplitude_uniform", idx)?,
            finite(row.f_power_proportional, "F_paper_eq12", idx)?,
            finite(row.f_uniform, "F_uniform", idx)?,
        );
    }
    Ok(out)
}

/// Builds the rate sweep table.
pub fn rate_sweep_csv(rows: &[RateSweepRow]) -> Result<String> {
    let mut out = String::with_capacity(48 * (rows.len() + 1));
    out.push_str(RATE_SWEEP_HEADER);
    out.push('\n');
    for (idx, row) in rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e}",
            finite(row.a2, "A2_W", idx)?,
            finite(row.pa, "pa_A", idx)?,
            finite(row.r_optimal, "R_optimal_nats", idx)?,
            finite(row.r_uniform, "R_uniform_nats", idx)?,
            finite(row.r_closed_form, "R_closed_form_nats", idx)?,
        );
    }
    Ok(out)
}

/// Builds the channel-sample table; `k` is the symbol index.
pub fn samples_csv(samples: &[ChannelSample]) -> Result<String> {
    let mut out = String::with_capacity(48 * (samples.len() + 1));
    out.push_str(SAMPLE_HEADER);
    out.push('\n');
    for (idx, sample) in samples.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e}",
            idx,
            finite(sample.s, "s_W", idx)?,
            finite(sample.x, "x_sqrtW", idx)?,
            finite(sample.n, "n_sqrtW", idx)?,
            finite(sample.y, "y_sqrtW", idx)?,
        );
    }
    Ok(out)
}

/// Renders per-symbol settling metrics as a human-readable block (used by
/// the waveform command next to its CSV).
pub fn metrics_text(metrics: &[SymbolMetrics]) -> String {
    let mut out = String::new();
    out.push_str("symbol,i_ID_end_A,vC_mismatch_V,i_EH_end_A,i_ID_rel,vC_rel\n");
    for m in metrics {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e}",
            m.k, m.i_id_end, m.vc_mismatch, m.i_eh_end, m.i_id_rel, m.vc_rel
        );
    }
    out
}

/// Lowercase hex SHA-256 digest.
pub fn sha256_hex(data: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Renders the plain-text run manifest: version and command line, the
/// effective configuration, and one SHA-256 checksum per emitted file.
///
/// The timestamp is informational; reproducibility is defined over the CSV
/// bytes and their checksums, which depend only on configuration and seed.
pub fn manifest_text(
    version: &str,
    command: &str,
    timestamp_utc: &str,
    config: &[(String, String)],
    checksums: &[(String, String)],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "toolkit_version = {version}");
    let _ = writeln!(out, "command = {command}");
    let _ = writeln!(out, "timestamp_utc = {timestamp_utc}");
    out.push_str("[config]\n");
    for (key, value) in config {
        let _ = writeln!(out, "{key} = {value}");
    }
    out.push_str("[checksums]\n");
    for (file, digest) in checksums {
        let _ = writeln!(out, "sha256 {file} = {digest}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{spectral_response, CircuitParams, OpticalDrive, PhysicalConstants};
    use crate::eh::EhModelParams;
    use crate::rate::{DistributionKind, RateConfig, TransmitDistribution};
    use crate::sweep::{cdf_table, eh_sweep, log_grid, rate_sweep};
    use crate::transient::{simulate, InitialState, SimConfig, SymbolFrame};

    fn model() -> EhModelParams {
        EhModelParams::from_circuit(CircuitParams::default()).unwrap()
    }

    fn r0_950() -> f64 {
        spectral_response(950e-9, 0.7, &PhysicalConstants::default())
    }

    #[test]
    fn headers_are_pinned_bytes() {
        assert_eq!(
            EH_SWEEP_HEADER,
            "p_W,lambda_nm,pa_A,P_closed_W,P_oracle2d_W,P_baseline_mpp_W,P_baseline_1d_W,rel_err_closed_vs_oracle"
        );
        assert_eq!(WAVEFORM_HEADER, "t,s,v_a,v_b,i_out,i_EH,i_ID,v_C,i_L");
        assert_eq!(
            CDF_TABLE_HEADER,
            "A2_W,s_W,F_amplitude_uniform,F_paper_eq12,F_uniform"
        );
        assert_eq!(
            RATE_SWEEP_HEADER,
            "A2_W,pa_A,R_optimal_nats,R_uniform_nats,R_closed_form_nats"
        );
        assert_eq!(SAMPLE_HEADER, "k,s_W,x_sqrtW,n_sqrtW,y_sqrtW");
    }

    #[test]
    fn eh_sweep_csv_is_deterministic_and_parseable() {
        let circuit = CircuitParams::default();
        let powers = log_grid(1e-6, 1e-1, 7).unwrap();
        let rows = eh_sweep(&circuit, &[400e-9, 950e-9], &powers, 0.0, 0.7).unwrap();
        let a = eh_sweep_csv(&rows).unwrap();
        let b = eh_sweep_csv(&rows).unwrap();
        assert_eq!(a, b);
        let mut lines = a.lines();
        assert_eq!(lines.next().unwrap(), EH_SWEEP_HEADER);
        let mut count = 0;
        for (idx, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells.len(), 8, "row {idx}");
            // Wavelength column prints whole nanometers.
            assert!(cells[1] == "400" || cells[1] == "950", "row {idx}: {}", cells[1]);
            // Scientific-notation cells parse back to the exact stored bits.
            let p: f64 = cells[0].parse().unwrap();
            let row = &rows[idx];
            assert_eq!(p.to_bits(), row.p.to_bits());
            let closed: f64 = cells[3].parse().unwrap();
            assert_eq!(closed.to_bits(), row.p_closed.to_bits());
            count += 1;
        }
        assert_eq!(count, rows.len());
    }

    #[test]
    fn waveform_csv_has_one_line_per_sample() {
        let frame = SymbolFrame::new(vec![10e-3, 1e-3], 1e-3, 10e-3).unwrap();
        let drive = OpticalDrive::new(950e-9, 0.0, 0.0);
        let wave = simulate(
            &frame,
            &drive,
            &CircuitParams::default(),
            &SimConfig::default(),
            InitialState::DcOfFirstSymbol,
        )
        .unwrap();
        let csv = waveform_csv(&wave).unwrap();
        assert_eq!(csv.lines().count(), wave.len() + 1);
        assert!(csv.starts_with(WAVEFORM_HEADER));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn cdf_and_rate_tables_render() {
        let rows = cdf_table(&model(), r0_950(), 1.0, 0.0, 1e-9, &[10e-3], 5).unwrap();
        let csv = cdf_table_csv(&rows).unwrap();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with(CDF_TABLE_HEADER));
        let rows = rate_sweep(&model(), r0_950(), 1.0, 1e-9, &[1e-3, 10e-3], &[0.0]).unwrap();
        let csv = rate_sweep_csv(&rows).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with(RATE_SWEEP_HEADER));
    }

    #[test]
    fn samples_csv_enumerates_symbols() {
        let cfg = RateConfig::new(model(), r0_950(), 1.0, 0.0, 10e-3, 1e-9).unwrap();
        let dist = TransmitDistribution::new(DistributionKind::AmplitudeUniform, cfg).unwrap();
        let samples = dist.simulate_channel(5, 1).unwrap();
        let csv = samples_csv(&samples).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        for (k, line) in lines[1..].iter().enumerate() {
            assert!(line.starts_with(&format!("{k},")));
        }
    }

    #[test]
    fn non_finite_values_are_refused() {
        let mut rows = vec![CdfRow {
            a2: 1e-2,
            s: 1e-3,
            f_amplitude_uniform: 0.5,
            f_power_proportional: 0.4,
            f_uniform: 0.1,
        }];
        assert!(cdf_table_csv(&rows).is_ok());
        rows[0].f_uniform = f64::NAN;
        assert!(cdf_table_csv(&rows).is_err());
        rows[0].f_uniform = f64::INFINITY;
        assert!(cdf_table_csv(&rows).is_err());
    }

    #[test]
    fn sha256_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn manifest_lists_config_and_checksums() {
        let text = manifest_text(
            "0.1.0",
            "eh-sweep",
            "2026-01-01T00:00:00Z",
            &[("seed".into(), "42".into())],
            &[("eh_sweep.csv".into(), "ab".repeat(32))],
        );
        assert!(text.contains("toolkit_version = 0.1.0"));
        assert!(text.contains("command = eh-sweep"));
        assert!(text.contains("[config]\nseed = 42\n"));
        assert!(text.contains(&format!("sha256 eh_sweep.csv = {}", "ab".repeat(32))));
    }

    #[test]
    fn nanometer_formatting_handles_odd_wavelengths() {
        assert_eq!(format_nanometers(400e-9), "400");
        assert_eq!(format_nanometers(950e-9), "950");
        assert_eq!(format_nanometers(632.8e-9), "6.328e2");
    }
}
