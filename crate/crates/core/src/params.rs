//! Waveform, sampling, and geometry parameters of the deramped FMCW radar,
//! with the closed-form conversions between range, beat frequency, and
//! resolution that the rest of the toolkit builds on.

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s), CODATA exact value.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Amplitude weighting applied before the fast-time FFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Rect,
    Hann,
}

/// Radar waveform, sampling, geometry, and processing parameters.
///
/// Defaults describe a Ku-band vehicle-mounted stripmap system: 150 MHz sweep
/// over 800 us sampled at 5 MHz, 2.5 MHz usable digital bandwidth, 60 km/h
/// platform speed, and a 2^19-point zero-padded FFT for leakage estimation.
#[derive(Debug, Clone)]
pub struct RadarParams {
    /// Carrier frequency (Hz).
    pub f_center: f64,
    /// Sweep bandwidth (Hz).
    pub bw: f64,
    /// Sweep period (s).
    pub t_sweep: f64,
    /// Sampling frequency (Hz).
    pub fs: f64,
    /// Zero-padded FFT length for leakage estimation; power of two >= samples per sweep.
    pub nfft_leak: usize,
    /// Final IF carrier frequency (Hz); 0 means baseband output.
    pub f_if_carrier: f64,
    /// Usable digital bandwidth (Hz), <= fs/2.
    pub digital_bw: f64,
    /// Fast-time window applied at range compression.
    pub window: WindowKind,
    /// Platform speed (m/s).
    pub v_platform: f64,
    /// Azimuth half-power beamwidth (rad).
    pub beamwidth: f64,
    /// Number of slow-time sweeps M.
    pub m_sweeps: usize,
    /// Range-compression FFT length; power of two >= samples per sweep.
    pub range_fft_len: usize,
    /// Upper edge (Hz) of the band searched for the leakage tone.
    pub leak_search_max_hz: f64,
    /// Tap count of the truncated-sinc interpolator used for range cell migration.
    pub rcmc_kernel_taps: usize,
}

impl Default for RadarParams {
    fn default() -> Self {
        Self {
            f_center: 14.425e9,
            bw: 150e6,
            t_sweep: 800e-6,
            fs: 5e6,
            nfft_leak: 1 << 19,
            f_if_carrier: 0.0,
            digital_bw: 2.5e6,
            window: WindowKind::Hann,
            v_platform: 60.0 / 3.6, // 60 km/h
            beamwidth: 34f64.to_radians(),
            m_sweeps: 256,
            range_fft_len: 4096,
            leak_search_max_hz: 50e3,
            rcmc_kernel_taps: 8,
        }
    }
}

/// Parameters that passed validation, with derived quantities cached.
#[derive(Debug, Clone)]
pub struct ValidatedParams {
    params: RadarParams,
    samples_per_sweep: usize,
    wavelength: f64,
    prf: f64,
}

impl ValidatedParams {
    /// Samples per sweep N = round(t_sweep * fs).
    pub fn samples_per_sweep(&self) -> usize {
        self.samples_per_sweep
    }

    /// Carrier wavelength c / f_center (m).
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Sweep repetition frequency 1 / t_sweep (Hz).
    pub fn prf(&self) -> f64 {
        self.prf
    }

    pub fn m_sweeps(&self) -> usize {
        self.params.m_sweeps
    }
}

impl std::ops::Deref for ValidatedParams {
    type Target = RadarParams;

    fn deref(&self) -> &RadarParams {
        &self.params
    }
}

fn require(cond: bool, field: &'static str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            field,
            reason: reason.to_string(),
        })
    }
}

/// Validates every parameter invariant and caches N, wavelength, and PRF.
pub fn validate_params(p: RadarParams) -> Result<ValidatedParams> {
    require(p.f_center > 0.0, "f_center", "must be > 0")?;
    require(p.bw > 0.0, "bw", "must be > 0")?;
    require(p.t_sweep > 0.0, "t_sweep", "must be > 0")?;
    require(p.fs > 0.0, "fs", "must be > 0")?;
    require(p.v_platform >= 0.0, "v_platform", "must be >= 0")?;
    require(p.m_sweeps >= 1, "m_sweeps", "must be >= 1")?;
    require(p.beamwidth > 0.0, "beamwidth", "must be > 0")?;
    require(p.leak_search_max_hz >= 0.0, "leak_search_max_hz", "must be >= 0")?;
    require(p.rcmc_kernel_taps >= 2, "rcmc_kernel_taps", "must be >= 2")?;

    let samples_per_sweep = (p.t_sweep * p.fs).round() as usize;
    require(
        samples_per_sweep >= 2,
        "t_sweep",
        "t_sweep * fs must round to at least 2 samples",
    )?;
    require(
        p.nfft_leak >= samples_per_sweep,
        "nfft_leak",
        "must be >= samples per sweep",
    )?;
    require(p.nfft_leak.is_power_of_two(), "nfft_leak", "must be a power of two")?;
    require(
        p.digital_bw <= p.fs / 2.0,
        "digital_bw",
        "must be <= fs/2 for real output processing",
    )?;
    require(p.digital_bw >= 0.0, "digital_bw", "must be >= 0")?;
    require(
        p.range_fft_len >= samples_per_sweep,
        "range_fft_len",
        "must be >= samples per sweep",
    )?;
    require(
        p.range_fft_len.is_power_of_two(),
        "range_fft_len",
        "must be a power of two",
    )?;

    let wavelength = SPEED_OF_LIGHT / p.f_center;
    let prf = 1.0 / p.t_sweep;
    Ok(ValidatedParams {
        params: p,
        samples_per_sweep,
        wavelength,
        prf,
    })
}

/// Sweep slope BW / T (Hz/s).
pub fn chirp_rate(p: &ValidatedParams) -> f64 {
    p.bw / p.t_sweep
}

/// Beat frequency of a target at range `r`: f = 2 r (BW/T) / c.
pub fn beat_frequency_of_range(p: &ValidatedParams, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::NegativeInput("range"));
    }
    Ok(2.0 * r * chirp_rate(p) / SPEED_OF_LIGHT)
}

/// Range of a deramped beat frequency `f`: r = f c / (2 BW/T).
pub fn range_of_beat_frequency(p: &ValidatedParams, f: f64) -> Result<f64> {
    if f < 0.0 {
        return Err(Error::NegativeInput("beat frequency"));
    }
    Ok(f * SPEED_OF_LIGHT / (2.0 * chirp_rate(p)))
}

/// True range resolution c / (2 BW) (m).
pub fn range_resolution(p: &ValidatedParams) -> f64 {
    SPEED_OF_LIGHT / (2.0 * p.bw)
}

/// Range mapped to the edge of the usable digital bandwidth (m).
pub fn max_unambiguous_range(p: &ValidatedParams) -> Result<f64> {
    range_of_beat_frequency(p, p.digital_bw)
}
