//! Deterministic grid sweeps over operating points, rates, and CDFs.
//!
//! Every sweep maps a pure function over a precomputed grid. With the `rayon`
//! feature enabled (the default) the map runs on the rayon thread pool;
//! output order always equals grid order, so results are bit-identical to the
//! sequential fallback regardless of scheduling.

use crate::circuit::{
    solve_dc_operating_point, spectral_response, CircuitParams, DiodeModel, PhysicalConstants,
};
use crate::eh::{
    baseline_mpp, baseline_single_diode, harvested_power_closed_form, BaselineCalibration,
    EhModelParams,
};
use crate::rate::{
    max_achievable_rate, ChannelSample, DistributionKind, RateConfig, TransmitDistribution,
};
use crate::{Error, Result};

/// Received power the retuned-load baseline is calibrated at, W.
pub const BASELINE_REFERENCE_POWER: f64 = 10e-3;

/// Applies `f` to every grid point, collecting results in grid order.
///
/// Parallel on the rayon pool when the `rayon` feature is enabled; the
/// sequential build produces identical output for a pure `f`.
#[cfg(feature = "rayon")]
pub fn map_grid<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(|item| f(item)).collect()
}

/// Applies `f` to every grid point, collecting results in grid order.
///
/// Parallel on the rayon pool when the `rayon` feature is enabled; the
/// sequential build produces identical output for a pure `f`.
#[cfg(not(feature = "rayon"))]
pub fn map_grid<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    items.iter().map(|item| f(item)).collect()
}

/// Always-sequential grid map, for determinism cross-checks and benchmark
/// baselines.
pub fn map_grid_seq<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    F: Fn(&T) -> Result<U>,
{
    items.iter().map(|item| f(item)).collect()
}

/// `points` logarithmically spaced values from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && min.is_finite() && max >= min && max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "log grid needs 0 < min <= max, got [{min}, {max}]"
        )));
    }
    if points == 0 {
        return Err(Error::InvalidInput("grid needs at least one point".into()));
    }
    if points == 1 || min == max {
        return Ok(vec![min]);
    }
    let log_min = min.ln();
    let log_max = max.ln();
    let n = points - 1;
    Ok((0..points)
        .map(|k| {
            if k == 0 {
                min
            } else if k == n {
                max
            } else {
                (log_min + (log_max - log_min) * k as f64 / n as f64).exp()
            }
        })
        .collect())
}

/// `points` linearly spaced values from `min` to `max` inclusive.
pub fn linear_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min.is_finite() && max >= min && max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "linear grid needs min <= max, got [{min}, {max}]"
        )));
    }
    if points == 0 {
        return Err(Error::InvalidInput("grid needs at least one point".into()));
    }
    if points == 1 || min == max {
        return Ok(vec![min]);
    }
    let n = points - 1;
    Ok((0..points)
        .map(|k| {
            if k == n {
                max
            } else {
                min + (max - min) * k as f64 / n as f64
            }
        })
        .collect())
}

/// One operating point of the harvesting sweep: the closed-form model, the
/// exact two-diode solve it approximates, and the two comparison baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhSweepRow {
    /// Received optical power, W.
    pub p: f64,
    /// Carrier wavelength, m.
    pub lambda0: f64,
    /// Ambient photocurrent, A.
    pub pa: f64,
    /// Closed-form harvested power, W.
    pub p_closed: f64,
    /// Exact two-diode (with shunt) harvested power, W.
    pub p_oracle2d: f64,
    /// Retuned-load baseline harvested power, W.
    pub p_baseline_mpp: f64,
    /// Single-diode exact-solve baseline harvested power, W.
    pub p_baseline_1d: f64,
    /// `|p_closed - p_oracle2d| / p_oracle2d`.
    pub rel_err_closed_vs_oracle: f64,
}

/// Sweeps harvested power over a wavelength × power grid (wavelength-major
/// order), at fixed ambient photocurrent and quantum efficiency.
pub fn eh_sweep(
    circuit: &CircuitParams,
    lambdas: &[f64],
    powers: &[f64],
    pa: f64,
    quantum_efficiency: f64,
) -> Result<Vec<EhSweepRow>> {
    if lambdas.is_empty() || powers.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    let model = EhModelParams::from_circuit(*circuit)?;
    let consts = PhysicalConstants::default();
    let mut grid = Vec::with_capacity(lambdas.len() * powers.len());
    for &lambda0 in lambdas {
        let r0 = spectral_response(lambda0, quantum_efficiency, &consts);
        let cal = BaselineCalibration::at_reference(&model, r0, BASELINE_REFERENCE_POWER)?;
        for &p in powers {
            grid.push((lambda0, r0, cal, p));
        }
    }
    map_grid(&grid, |&(lambda0, r0, cal, p)| {
        let closed = harvested_power_closed_form(&model, r0, p, pa)?;
        let oracle = solve_dc_operating_point(closed.j, circuit, DiodeModel::full())?;
        let p_baseline_mpp = baseline_mpp(&model, &cal, r0, p, pa)?;
        let p_baseline_1d = baseline_single_diode(&model, r0, p, pa)?;
        let rel_err_closed_vs_oracle =
            (closed.power - oracle.p_harv).abs() / oracle.p_harv.max(f64::MIN_POSITIVE);
        Ok(EhSweepRow {
            p,
            lambda0,
            pa,
            p_closed: closed.power,
            p_oracle2d: oracle.p_harv,
            p_baseline_mpp,
            p_baseline_1d,
            rel_err_closed_vs_oracle,
        })
    })
}

/// One rate-sweep grid point: the quadrature rates of the optimal and
/// uniform-power distributions next to the closed-form optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSweepRow {
    /// Peak transmit power, W.
    pub a2: f64,
    /// Ambient photocurrent, A.
    pub pa: f64,
    /// Quadrature rate of the uniform-amplitude distribution, nats.
    pub r_optimal: f64,
    /// Quadrature rate of the uniform-transmit-power distribution, nats.
    pub r_uniform: f64,
    /// Closed-form maximum of the entropy-power bound, nats.
    pub r_closed_form: f64,
}

/// Sweeps achievable rates over ambient level × peak power (ambient-major
/// order) at fixed channel gain and noise variance.
pub fn rate_sweep(
    eh: &EhModelParams,
    r0: f64,
    h: f64,
    sigma2: f64,
    a2_list: &[f64],
    pa_list: &[f64],
) -> Result<Vec<RateSweepRow>> {
    if a2_list.is_empty() || pa_list.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    let mut grid = Vec::with_capacity(a2_list.len() * pa_list.len());
    for &pa in pa_list {
        for &a2 in a2_list {
            grid.push((pa, a2));
        }
    }
    map_grid(&grid, |&(pa, a2)| {
        let cfg = RateConfig::new(*eh, r0, h, pa, a2, sigma2)?;
        let r_optimal = TransmitDistribution::new(DistributionKind::AmplitudeUniform, cfg)?
            .achievable_rate()?;
        let r_uniform =
            TransmitDistribution::new(DistributionKind::UniformS, cfg)?.achievable_rate()?;
        let r_closed_form = max_achievable_rate(&cfg)?;
        Ok(RateSweepRow {
            a2,
            pa,
            r_optimal,
            r_uniform,
            r_closed_form,
        })
    })
}

/// One row of the CDF table: all three transmit-distribution variants
/// evaluated at the same transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfRow {
    /// Peak transmit power of the row group, W.
    pub a2: f64,
    /// Transmit power the CDFs are evaluated at, W.
    pub s: f64,
    /// Uniform-amplitude (optimal) CDF value.
    pub f_amplitude_uniform: f64,
    /// Power-proportional CDF value.
    pub f_power_proportional: f64,
    /// Uniform-transmit-power CDF value.
    pub f_uniform: f64,
}

/// Tabulates the three CDF variants on a dense linear grid of `points`
/// values per peak power.
pub fn cdf_table(
    eh: &EhModelParams,
    r0: f64,
    h: f64,
    pa: f64,
    sigma2: f64,
    a2_list: &[f64],
    points: usize,
) -> Result<Vec<CdfRow>> {
    if a2_list.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    if points < 2 {
        return Err(Error::InvalidInput(
            "a CDF table needs at least two points per group".into(),
        ));
    }
    let mut grid = Vec::with_capacity(a2_list.len() * points);
    for &a2 in a2_list {
        for s in linear_grid(0.0, a2, points)? {
            grid.push((a2, s));
        }
    }
    // The distributions only depend on a2; build one triple per group.
    let mut variants = std::collections::BTreeMap::new();
    for &a2 in a2_list {
        let cfg = RateConfig::new(*eh, r0, h, pa, a2, sigma2)?;
        let amp = TransmitDistribution::new(DistributionKind::AmplitudeUniform, cfg)?;
        let pp = TransmitDistribution::new(DistributionKind::PowerProportional, cfg)?;
        let uni = TransmitDistribution::new(DistributionKind::UniformS, cfg)?;
        variants.insert(a2.to_bits(), (amp, pp, uni));
    }
    map_grid(&grid, |&(a2, s)| {
        let (amp, pp, uni) = variants
            .get(&a2.to_bits())
            .expect("every grid row has a prepared distribution triple");
        Ok(CdfRow {
            a2,
            s,
            f_amplitude_uniform: amp.cdf(s),
            f_power_proportional: pp.cdf(s),
            f_uniform: uni.cdf(s),
        })
    })
}

/// Draws `count` channel symbols through the grid mapper, so sampling
/// parallelizes while staying bit-identical to
/// [`TransmitDistribution::simulate_channel`].
pub fn channel_samples(
    dist: &TransmitDistribution,
    count: usize,
    seed: u64,
) -> Result<Vec<ChannelSample>> {
    if count == 0 {
        return Err(Error::InvalidInput(
            "channel simulation needs at least one symbol".into(),
        ));
    }
    let indices: Vec<usize> = (0..count).collect();
    map_grid(&indices, |&idx| dist.simulate_symbol(idx, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> EhModelParams {
        EhModelParams::from_circuit(CircuitParams::default()).unwrap()
    }

    fn r0_950() -> f64 {
        spectral_response(950e-9, 0.7, &PhysicalConstants::default())
    }

    #[test]
    fn log_grid_hits_endpoints_and_stays_monotone() {
        let g = log_grid(1e-6, 100e-3, 50).unwrap();
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[49], 100e-3);
        for w in g.windows(2) {
            assert!(w[1] > w[0]);
        }
        // Eleven points from 1 uW to 100 mW land on exact decades midway.
        let g = log_grid(1e-6, 1e-1, 11).unwrap();
        assert!((g[8] - 1e-2).abs() < 1e-16);
        assert_eq!(log_grid(5.0, 5.0, 7).unwrap(), vec![5.0]);
        assert_eq!(log_grid(2.0, 8.0, 1).unwrap(), vec![2.0]);
        assert!(log_grid(0.0, 1.0, 5).is_err());
        assert!(log_grid(2.0, 1.0, 5).is_err());
        assert!(log_grid(1.0, 2.0, 0).is_err());
    }

    #[test]
    fn linear_grid_hits_endpoints_and_stays_monotone() {
        let g = linear_grid(0.0, 1.0, 5).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(linear_grid(3.0, 3.0, 4).unwrap(), vec![3.0]);
        assert!(linear_grid(1.0, 0.0, 5).is_err());
        assert!(linear_grid(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn parallel_and_sequential_maps_agree_bitwise() {
        let model = model();
        let r0 = r0_950();
        let grid = log_grid(1e-6, 100e-3, 40).unwrap();
        let f = |&p: &f64| harvested_power_closed_form(&model, r0, p, 0.0).map(|s| s.power);
        let par = map_grid(&grid, f).unwrap();
        let seq = map_grid_seq(&grid, f).unwrap();
        assert_eq!(par.len(), seq.len());
        for (a, b) in par.iter().zip(seq.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn map_grid_propagates_errors() {
        let items = vec![1.0, -1.0, 2.0];
        let res = map_grid(&items, |&x: &f64| {
            if x < 0.0 {
                Err(Error::Domain("negative".into()))
            } else {
                Ok(x)
            }
        });
        assert!(res.is_err());
    }

    #[test]
    fn eh_sweep_rows_follow_grid_order_and_stay_accurate() {
        let circuit = CircuitParams::default();
        let lambdas = [400e-9, 950e-9];
        let powers = log_grid(1e-6, 1e-1, 11).unwrap();
        let rows = eh_sweep(&circuit, &lambdas, &powers, 0.0, 0.7).unwrap();
        assert_eq!(rows.len(), 22);
        // Wavelength-major order.
        assert_eq!(rows[0].lambda0, 400e-9);
        assert_eq!(rows[11].lambda0, 950e-9);
        assert_eq!(rows[3].p, powers[3]);
        for row in &rows {
            assert!(row.rel_err_closed_vs_oracle <= 0.02, "row {row:?}");
            assert!(row.p_closed.is_finite() && row.p_closed >= 0.0);
            assert!(row.p_baseline_mpp > 0.0 && row.p_baseline_1d > 0.0);
        }
        // The retuned-load baseline anchors to the closed form at 10 mW.
        let anchor = rows
            .iter()
            .find(|r| r.lambda0 == 950e-9 && (r.p - 1e-2).abs() < 1e-15)
            .unwrap();
        let rel = (anchor.p_baseline_mpp - anchor.p_closed).abs() / anchor.p_closed;
        assert!(rel < 1e-12, "calibration anchor off by {rel:e}");
        // Longer wavelength harvests strictly more at every power.
        for k in 0..11 {
            assert!(rows[11 + k].p_closed > rows[k].p_closed);
            assert!(rows[11 + k].p_oracle2d > rows[k].p_oracle2d);
        }
    }

    #[test]
    fn eh_sweep_rejects_empty_grids() {
        let circuit = CircuitParams::default();
        assert!(eh_sweep(&circuit, &[], &[1e-3], 0.0, 0.7).is_err());
        assert!(eh_sweep(&circuit, &[950e-9], &[], 0.0, 0.7).is_err());
    }

    #[test]
    fn rate_sweep_trends_and_identities() {
        let model = model();
        let r0 = r0_950();
        let a2_list = [1e-3, 5e-3, 10e-3];
        let pa_list = [0.0, 1e-5];
        let rows = rate_sweep(&model, r0, 1.0, 1e-9, &a2_list, &pa_list).unwrap();
        assert_eq!(rows.len(), 6);
        // Ambient-major order.
        assert_eq!(rows[0].pa, 0.0);
        assert_eq!(rows[3].pa, 1e-5);
        for row in &rows {
            assert!(row.r_optimal >= row.r_uniform, "row {row:?}");
            assert!(
                (row.r_optimal - row.r_closed_form).abs() < 1e-3,
                "quadrature vs closed form in {row:?}"
            );
        }
        // Increasing in peak power at fixed ambient level.
        for group in rows.chunks(3) {
            assert!(group[1].r_optimal > group[0].r_optimal);
            assert!(group[2].r_optimal > group[1].r_optimal);
        }
        // Decreasing in ambient level at fixed peak power.
        for k in 0..3 {
            assert!(rows[k].r_optimal > rows[3 + k].r_optimal);
        }
    }

    #[test]
    fn cdf_table_rows_are_valid_distribution_slices() {
        let model = model();
        let rows = cdf_table(&model, r0_950(), 1.0, 0.0, 1e-9, &[5e-3, 10e-3], 21).unwrap();
        assert_eq!(rows.len(), 42);
        for group in rows.chunks(21) {
            assert_eq!(group[0].f_amplitude_uniform, 0.0);
            assert_eq!(group[0].f_power_proportional, 0.0);
            assert_eq!(group[0].f_uniform, 0.0);
            assert_eq!(group[20].f_amplitude_uniform, 1.0);
            assert_eq!(group[20].f_power_proportional, 1.0);
            assert_eq!(group[20].f_uniform, 1.0);
            for w in group.windows(2) {
                assert!(w[1].f_amplitude_uniform >= w[0].f_amplitude_uniform);
                assert!(w[1].f_power_proportional >= w[0].f_power_proportional);
                assert!(w[1].f_uniform >= w[0].f_uniform);
                assert!(w[1].s > w[0].s);
            }
            // The optimal CDFs concentrate mass at low powers: strictly above
            // the uniform CDF on the interior.
            for row in &group[1..20] {
                assert!(row.f_amplitude_uniform > row.f_uniform, "row {row:?}");
                assert!(row.f_power_proportional > row.f_uniform, "row {row:?}");
            }
        }
    }

    #[test]
    fn parallel_channel_sampling_matches_sequential() {
        let cfg = RateConfig::new(model(), r0_950(), 1.0, 0.0, 10e-3, 1e-9).unwrap();
        let dist = TransmitDistribution::new(DistributionKind::AmplitudeUniform, cfg).unwrap();
        let par = channel_samples(&dist, 200, 17).unwrap();
        let seq = dist.simulate_channel(200, 17).unwrap();
        assert_eq!(par, seq);
        assert!(channel_samples(&dist, 0, 17).is_err());
    }
}
