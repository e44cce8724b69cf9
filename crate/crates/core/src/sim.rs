//! Synthetic raw-data generation: point-target echoes with stop-and-go
//! azimuth phase history, a TX-RX leakage tone carrying oscillator phase
//! noise, and complex thermal noise.
//!
//! Every sweep is generated from its own counter-based RNG stream keyed by
//! the sweep index, so cubes are bit-identical no matter how the sweeps are
//! scheduled across threads.

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{beat_frequency_of_range, ValidatedParams};

/// Largest cube the simulator will allocate (bytes of complex payload).
pub const MAX_CUBE_BYTES: usize = 2 << 30;

const DOMAIN_PHASE_NOISE: u64 = 0x504e;
const DOMAIN_THERMAL: u64 = 0x544e;

/// Ideal point scatterer in slant-plane coordinates.
#[derive(Debug, Clone, Copy)]
pub struct PointTarget {
    /// Along-track position (m).
    pub x_along: f64,
    /// Cross-track (broadside) range (m), > 0.
    pub y_cross: f64,
    /// Linear voltage gain, >= 0.
    pub amplitude: f64,
}

/// Shaped random process modulating the leakage tone's phase.
#[derive(Debug, Clone, Copy)]
pub struct PhaseNoiseParams {
    /// RMS of the phase-noise process (rad), >= 0.
    pub rms: f64,
    /// Single-pole low-pass shaping corner (Hz), > 0.
    pub corner_hz: f64,
    /// RNG seed for the noise streams.
    pub seed: u64,
}

impl Default for PhaseNoiseParams {
    fn default() -> Self {
        Self {
            rms: 0.0,
            corner_hz: 100e3,
            seed: 0,
        }
    }
}

/// Direct TX-RX coupling model: a strong near-DC beat tone.
#[derive(Debug, Clone, Copy)]
pub struct LeakageModel {
    /// Linear amplitude, >= 0. Zero disables the leakage term.
    pub amplitude: f64,
    /// Beat frequency (Hz); must stay below the leakage search band edge.
    pub beat_freq: f64,
    /// Static phase offset (rad).
    pub static_phase: f64,
    pub phase_noise: PhaseNoiseParams,
}

impl Default for LeakageModel {
    fn default() -> Self {
        Self {
            amplitude: 0.0,
            beat_freq: 1e3,
            static_phase: 0.0,
            phase_noise: PhaseNoiseParams::default(),
        }
    }
}

/// Complex raw beat data: one row per sweep (slow time), fast time contiguous
/// within each row.
#[derive(Debug, Clone)]
pub struct DataCube {
    pub data: Array2<Complex64>,
    pub params: ValidatedParams,
}

impl DataCube {
    /// Fast-time samples per sweep.
    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    /// Slow-time sweep count.
    pub fn m(&self) -> usize {
        self.data.nrows()
    }

    pub fn sweep(&self, m: usize) -> ArrayView1<'_, Complex64> {
        self.data.row(m)
    }
}

fn stream_rng(seed: u64, domain: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Gaussian white noise shaped by a single-pole low-pass at `corner_hz`
/// (relative to the sample rate `fs`), rescaled to exact sample RMS.
/// Deterministic given (`pn.seed`, `stream_id`).
pub fn phase_noise_sequence(
    pn: &PhaseNoiseParams,
    fs: f64,
    count: usize,
    stream_id: u64,
) -> Vec<f64> {
    if pn.rms == 0.0 || count == 0 {
        return vec![0.0; count];
    }
    let mut rng = stream_rng(pn.seed, DOMAIN_PHASE_NOISE, stream_id);
    let alpha = (-2.0 * PI * pn.corner_hz / fs).exp();
    let mut seq = Vec::with_capacity(count);
    let mut prev = 0.0;
    for _ in 0..count {
        let w: f64 = rng.sample(StandardNormal);
        prev = alpha * prev + w;
        seq.push(prev);
    }
    let power: f64 = seq.iter().map(|v| v * v).sum::<f64>() / count as f64;
    if power == 0.0 {
        return seq;
    }
    let scale = pn.rms / power.sqrt();
    for v in &mut seq {
        *v *= scale;
    }
    seq
}

/// Beat frequency and carrier phase of a target as seen from sweep `m`.
///
/// The platform sits at u_m = v t_sweep (m - M/2), so a broadside target
/// peaks mid-aperture. psi = -4 pi R_m / lambda is the two-way carrier phase.
pub fn target_phase_history(p: &ValidatedParams, tgt: &PointTarget, m: usize) -> (f64, f64) {
    let u = platform_position(p, m);
    let range = (tgt.y_cross.powi(2) + (tgt.x_along - u).powi(2)).sqrt();
    let beat = beat_frequency_of_range(p, range).expect("range is non-negative");
    let psi = -4.0 * PI * range / p.wavelength();
    (beat, psi)
}

fn platform_position(p: &ValidatedParams, m: usize) -> f64 {
    p.v_platform * p.t_sweep * (m as f64 - p.m_sweeps() as f64 / 2.0)
}

/// One deramped sweep: in-beam target tones plus the leakage tone with its
/// per-sweep phase-noise draw plus thermal noise. Pure given (`noise_seed`,
/// `m`), so sweeps may be generated in any order or in parallel.
pub fn simulate_sweep(
    p: &ValidatedParams,
    scene: &[PointTarget],
    leak: &LeakageModel,
    m: usize,
    noise_sigma: f64,
    noise_seed: u64,
) -> Vec<Complex64> {
    let n = p.samples_per_sweep();
    let mut sweep = vec![Complex64::new(0.0, 0.0); n];
    let u = platform_position(p, m);

    for tgt in scene {
        // Rectangular beam: no contribution outside the half-power width.
        let off_broadside = (tgt.x_along - u).atan2(tgt.y_cross);
        if off_broadside.abs() > p.beamwidth / 2.0 || tgt.amplitude == 0.0 {
            continue;
        }
        let (beat, psi) = target_phase_history(p, tgt, m);
        let step = 2.0 * PI * beat / p.fs;
        for (i, s) in sweep.iter_mut().enumerate() {
            *s += Complex64::from_polar(tgt.amplitude, step * i as f64 + psi);
        }
    }

    if leak.amplitude > 0.0 {
        let phi = phase_noise_sequence(&leak.phase_noise, p.fs, n, m as u64);
        let step = 2.0 * PI * leak.beat_freq / p.fs;
        for (i, s) in sweep.iter_mut().enumerate() {
            *s += Complex64::from_polar(leak.amplitude, step * i as f64 + leak.static_phase + phi[i]);
        }
    }

    if noise_sigma > 0.0 {
        let mut rng = stream_rng(noise_seed, DOMAIN_THERMAL, m as u64);
        for s in sweep.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *s += Complex64::new(noise_sigma * re, noise_sigma * im);
        }
    }

    sweep
}

/// Stacks `m_sweeps` simulated sweeps into a cube. Deterministic given
/// `seed`; sweeps are generated in parallel with per-sweep RNG streams.
pub fn simulate_cube(
    p: &ValidatedParams,
    scene: &[PointTarget],
    leak: &LeakageModel,
    noise_sigma: f64,
    seed: u64,
) -> Result<DataCube> {
    for tgt in scene {
        if tgt.y_cross <= 0.0 {
            return Err(Error::InvalidParam {
                field: "y_cross",
                reason: "target cross-track range must be > 0".to_string(),
            });
        }
        if tgt.amplitude < 0.0 {
            return Err(Error::InvalidParam {
                field: "amplitude",
                reason: "target amplitude must be >= 0".to_string(),
            });
        }
    }
    if leak.amplitude < 0.0 {
        return Err(Error::InvalidParam {
            field: "leakage.amplitude",
            reason: "must be >= 0".to_string(),
        });
    }
    if leak.amplitude > 0.0 && leak.beat_freq >= p.leak_search_max_hz {
        return Err(Error::InvalidParam {
            field: "leakage.beat_freq",
            reason: format!(
                "{} Hz is outside the {} Hz leakage search band",
                leak.beat_freq, p.leak_search_max_hz
            ),
        });
    }
    if leak.phase_noise.rms < 0.0 || leak.phase_noise.corner_hz <= 0.0 {
        return Err(Error::InvalidParam {
            field: "phase_noise",
            reason: "rms must be >= 0 and corner_hz > 0".to_string(),
        });
    }

    let n = p.samples_per_sweep();
    let m = p.m_sweeps();
    let bytes = n
        .checked_mul(m)
        .and_then(|s| s.checked_mul(std::mem::size_of::<Complex64>()))
        .unwrap_or(usize::MAX);
    if bytes > MAX_CUBE_BYTES {
        return Err(Error::DimensionOverflow {
            n,
            m,
            budget: MAX_CUBE_BYTES,
        });
    }

    let rows: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|sweep_idx| simulate_sweep(p, scene, leak, sweep_idx, noise_sigma, seed))
        .collect();
    let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
    let data = Array2::from_shape_vec((m, n), flat).expect("row dimensions are uniform");
    Ok(DataCube {
        data,
        params: p.clone(),
    })
}
