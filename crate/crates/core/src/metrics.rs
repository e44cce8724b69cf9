//! Image-quality measurement: noise floor, SNR, impulse response width, peak
//! sidelobe ratio, intensity entropy, and the residual level in the leakage
//! band. `compare_pipelines` runs both processing chains on one cube and
//! reports per-metric deltas.

use crate::error::{Error, Result};
use crate::params::{range_of_beat_frequency, ValidatedParams};
use crate::sar::{pipeline_conventional, pipeline_proposed, MethodTag, SarImage};
use crate::sim::{DataCube, PointTarget};

/// Bins excluded on each side of a known target when estimating the floor:
/// covers the Hann mainlobe and first sidelobes at the default FFT sizes.
pub const TARGET_EXCLUSION_HALF_WIDTH: usize = 10;

/// Minimum number of bins the floor estimator needs outside the exclusions.
pub const MIN_FLOOR_BINS: usize = 16;

/// Quality metrics for one focused image.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Median image level outside target mainlobes and the leakage band (dB).
    pub noise_floor_db: f64,
    /// Target peak level minus the noise floor (dB).
    pub snr_db: f64,
    /// -3 dB range mainlobe width (m); None when not measurable.
    pub irw_range_m: Option<f64>,
    /// -3 dB azimuth mainlobe width (m); None when not measurable.
    pub irw_azimuth_m: Option<f64>,
    /// Peak sidelobe ratio of the range cut (dB); None when not measurable.
    pub pslr_db: Option<f64>,
    /// Shannon entropy of the normalized intensity distribution (nats).
    pub entropy: f64,
    /// Peak in the leakage band relative to the target peak (dB).
    pub leakage_residual_db: f64,
    pub method_tag: MethodTag,
}

/// Per-metric differences, oriented so positive means the mitigated
/// pipeline improved on the conventional one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsDelta {
    /// conventional floor - proposed floor.
    pub noise_floor_improvement_db: f64,
    /// proposed SNR - conventional SNR.
    pub snr_gain_db: f64,
    /// conventional entropy - proposed entropy.
    pub entropy_reduction: f64,
    /// conventional residual - proposed residual.
    pub leakage_residual_improvement_db: f64,
}

/// Both pipeline reports plus their deltas.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineComparison {
    pub conventional: MetricsReport,
    pub proposed: MetricsReport,
    pub delta: MetricsDelta,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median of the dB values outside the (inclusive) exclusion intervals.
pub fn noise_floor(profile: &[f64], exclusions: &[(usize, usize)]) -> Result<f64> {
    let mut kept: Vec<f64> = profile
        .iter()
        .enumerate()
        .filter(|(i, _)| !exclusions.iter().any(|&(lo, hi)| *i >= lo && *i <= hi))
        .map(|(_, &v)| v)
        .collect();
    if kept.len() < MIN_FLOOR_BINS {
        return Err(Error::TooFewBins {
            available: kept.len(),
            needed: MIN_FLOOR_BINS,
        });
    }
    Ok(median(&mut kept))
}

/// -3 dB mainlobe width of a linear-magnitude profile, by linear
/// interpolation on each side of `peak_bin`, scaled by `axis_scale`.
pub fn irw(profile: &[f64], peak_bin: usize, axis_scale: f64) -> Result<f64> {
    if peak_bin == 0 || peak_bin + 1 >= profile.len() {
        return Err(Error::NoCrossing);
    }
    let peak = profile[peak_bin];
    let half = peak / std::f64::consts::SQRT_2;

    let mut left = None;
    for i in (0..peak_bin).rev() {
        if profile[i] <= half {
            let frac = (profile[i + 1] - half) / (profile[i + 1] - profile[i]);
            left = Some(i as f64 + (1.0 - frac));
            break;
        }
    }
    let mut right = None;
    for i in peak_bin + 1..profile.len() {
        if profile[i] <= half {
            let frac = (profile[i - 1] - half) / (profile[i - 1] - profile[i]);
            right = Some(i as f64 - (1.0 - frac));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Ok((r - l) * axis_scale),
        _ => Err(Error::NoCrossing),
    }
}

/// Ratio of the highest sidelobe beyond the first nulls to the mainlobe
/// peak, in dB (negative for any well-formed response).
pub fn pslr(profile: &[f64], peak_bin: usize) -> Result<f64> {
    let n = profile.len();
    if peak_bin == 0 || peak_bin + 1 >= n {
        return Err(Error::NoSidelobe);
    }
    let peak = profile[peak_bin];
    if peak <= 0.0 {
        return Err(Error::NoSidelobe);
    }

    // First local minimum on each side bounds the mainlobe.
    let mut left_null = None;
    for i in (1..peak_bin).rev() {
        if profile[i] <= profile[i - 1] && profile[i] <= profile[i + 1] {
            left_null = Some(i);
            break;
        }
    }
    let mut right_null = None;
    for i in peak_bin + 1..n - 1 {
        if profile[i] <= profile[i - 1] && profile[i] <= profile[i + 1] {
            right_null = Some(i);
            break;
        }
    }

    let mut best: Option<f64> = None;
    if let Some(ln) = left_null {
        for &v in &profile[..ln] {
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    if let Some(rn) = right_null {
        for &v in &profile[rn + 1..] {
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    match best {
        Some(side) if side > 0.0 => Ok(20.0 * (side / peak).log10()),
        _ => Err(Error::NoSidelobe),
    }
}

/// Shannon entropy (nats) of the image intensity distribution
/// p = |.|^2 / sum |.|^2.
pub fn image_entropy(img: &SarImage) -> Result<f64> {
    let mut total = 0.0;
    for &db in img.db.iter() {
        total += 10f64.powf(db / 10.0);
    }
    if total <= 0.0 {
        return Err(Error::AllZero);
    }
    let mut entropy = 0.0;
    for &db in img.db.iter() {
        let p = 10f64.powf(db / 10.0) / total;
        if p > 0.0 {
            entropy -= p * p.ln();
        }
    }
    Ok(entropy)
}

fn nearest_bin(axis: &[f64], value: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &a) in axis.iter().enumerate() {
        let d = (a - value).abs();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Range-bin intervals masked out of the floor estimate: the leakage search
/// band plus a guard around each known target's zero-Doppler range.
pub fn exclusion_intervals(
    img: &SarImage,
    p: &ValidatedParams,
    scene: &[PointTarget],
) -> Vec<(usize, usize)> {
    let mut intervals = Vec::new();
    let leak_range = range_of_beat_frequency(p, p.leak_search_max_hz)
        .expect("search band edge is non-negative");
    let leak_hi = img
        .range_axis
        .iter()
        .rposition(|&r| r <= leak_range)
        .unwrap_or(0);
    intervals.push((0, leak_hi));
    for tgt in scene {
        let bin = nearest_bin(&img.range_axis, tgt.y_cross);
        intervals.push((
            bin.saturating_sub(TARGET_EXCLUSION_HALF_WIDTH),
            (bin + TARGET_EXCLUSION_HALF_WIDTH).min(img.range_axis.len() - 1),
        ));
    }
    intervals
}

fn excluded(intervals: &[(usize, usize)], bin: usize) -> bool {
    intervals.iter().any(|&(lo, hi)| bin >= lo && bin <= hi)
}

/// Brightest pixel within the guard boxes around the known targets;
/// falls back to the global peak for an empty scene.
fn target_peak(img: &SarImage, scene: &[PointTarget]) -> (usize, usize, f64) {
    let mut best = (0, 0, f64::NEG_INFINITY);
    if scene.is_empty() {
        for ((r, c), &v) in img.db.indexed_iter() {
            if v > best.2 {
                best = (r, c, v);
            }
        }
        return best;
    }
    let h = TARGET_EXCLUSION_HALF_WIDTH;
    for tgt in scene {
        let rbin = nearest_bin(&img.range_axis, tgt.y_cross);
        let abin = nearest_bin(&img.azimuth_axis, tgt.x_along);
        for r in rbin.saturating_sub(h)..=(rbin + h).min(img.db.nrows() - 1) {
            for c in abin.saturating_sub(h)..=(abin + h).min(img.db.ncols() - 1) {
                let v = img.db[[r, c]];
                if v > best.2 {
                    best = (r, c, v);
                }
            }
        }
    }
    best
}

/// Full metrics report for one focused image, with exclusion zones taken
/// from the known scene geometry.
pub fn report_for_image(
    img: &SarImage,
    p: &ValidatedParams,
    scene: &[PointTarget],
) -> Result<MetricsReport> {
    let intervals = exclusion_intervals(img, p, scene);
    let (peak_r, peak_c, peak_db) = target_peak(img, scene);

    let mut floor_pixels = Vec::new();
    for (r, row) in img.db.rows().into_iter().enumerate() {
        if excluded(&intervals, r) {
            continue;
        }
        floor_pixels.extend(row.iter().copied());
    }
    let noise_floor_db = noise_floor(&floor_pixels, &[])?;

    let range_cut: Vec<f64> = img
        .db
        .column(peak_c)
        .iter()
        .map(|&db| 10f64.powf(db / 20.0))
        .collect();
    let range_scale = if img.range_axis.len() > 1 {
        img.range_axis[1] - img.range_axis[0]
    } else {
        1.0
    };
    let irw_range_m = irw(&range_cut, peak_r, range_scale).ok();
    let pslr_db = pslr(&range_cut, peak_r).ok();

    let irw_azimuth_m = if img.azimuth_axis.len() > 1 {
        let az_cut: Vec<f64> = img
            .db
            .row(peak_r)
            .iter()
            .map(|&db| 10f64.powf(db / 20.0))
            .collect();
        let az_scale = img.azimuth_axis[1] - img.azimuth_axis[0];
        irw(&az_cut, peak_c, az_scale).ok()
    } else {
        None
    };

    let leak_band_end = intervals[0].1;
    let mut leak_peak_db = f64::NEG_INFINITY;
    for r in 0..=leak_band_end.min(img.db.nrows() - 1) {
        for &v in img.db.row(r) {
            leak_peak_db = leak_peak_db.max(v);
        }
    }

    Ok(MetricsReport {
        noise_floor_db,
        snr_db: peak_db - noise_floor_db,
        irw_range_m,
        irw_azimuth_m,
        pslr_db,
        entropy: image_entropy(img)?,
        leakage_residual_db: leak_peak_db - peak_db,
        method_tag: img.method_tag,
    })
}

/// Runs both pipelines on the same cube and reports both metric sets plus
/// their deltas.
pub fn compare_pipelines(
    cube: &DataCube,
    p: &ValidatedParams,
    scene: &[PointTarget],
) -> Result<PipelineComparison> {
    let conv = pipeline_conventional(cube, p)?;
    let prop = pipeline_proposed(cube, p)?;
    let conventional = report_for_image(&conv.image, p, scene)?;
    let proposed = report_for_image(&prop.image, p, scene)?;
    let delta = MetricsDelta {
        noise_floor_improvement_db: conventional.noise_floor_db - proposed.noise_floor_db,
        snr_gain_db: proposed.snr_db - conventional.snr_db,
        entropy_reduction: conventional.entropy - proposed.entropy,
        leakage_residual_improvement_db: conventional.leakage_residual_db
            - proposed.leakage_residual_db,
    };
    Ok(PipelineComparison {
        conventional,
        proposed,
        delta,
    })
}
