//! Per-sweep leakage mitigation: estimate the leakage tone's frequency and
//! phase from a zero-padded fast-time FFT, synthesize a matching NCO, mix the
//! sweep against its conjugate, and keep the real part. With the leakage at
//! DC and zero phase, its phase noise rides the cosine's stationary point and
//! only enters the output at second order.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::Fft;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::dsp;
use crate::error::{Error, Result};
use crate::params::ValidatedParams;
use crate::sim::DataCube;

/// Leakage tone parameters recovered from one sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageEstimate {
    /// Peak bin index on the zero-padded grid.
    pub k_leak: usize,
    /// Peak frequency k_leak * fs / nfft (Hz).
    pub f_leak: f64,
    /// Phase response at the peak bin, in (-pi, pi].
    pub theta_leak: f64,
    /// Peak magnitude (linear).
    pub peak_mag: f64,
}

/// Zero-padded fast-time spectrum of one sweep.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    /// Bin spacing fs / nfft (Hz).
    pub bin_hz: f64,
}

/// Forward DFT of the sweep extended with trailing zeros to `nfft_leak`
/// samples. No window is applied; estimation runs on the raw sweep.
pub fn zero_pad_fft(sweep: &[Complex64], nfft_leak: usize, fs: f64) -> Result<Spectrum> {
    if nfft_leak < sweep.len() {
        return Err(Error::BadLength {
            len: sweep.len(),
            nfft: nfft_leak,
        });
    }
    let mut bins = vec![Complex64::new(0.0, 0.0); nfft_leak];
    bins[..sweep.len()].copy_from_slice(sweep);
    dsp::fft_in_place(&mut bins);
    Ok(Spectrum {
        bins,
        bin_hz: fs / nfft_leak as f64,
    })
}

fn principal_branch(theta: f64) -> f64 {
    if theta <= -PI {
        theta + 2.0 * PI
    } else {
        theta
    }
}

fn estimate_from_spectrum(
    bins: &[Complex64],
    bin_hz: f64,
    leak_search_max_hz: f64,
) -> Result<LeakageEstimate> {
    let k_max = ((leak_search_max_hz / bin_hz).floor() as usize).min(bins.len().saturating_sub(1));
    let mut best_k = 0usize;
    let mut best_mag_sq = -1.0f64;
    for (k, bin) in bins.iter().enumerate().take(k_max + 1) {
        let mag_sq = bin.norm_sqr();
        // Ties keep the lowest k.
        if mag_sq > best_mag_sq {
            best_mag_sq = mag_sq;
            best_k = k;
        }
    }
    if best_mag_sq <= 0.0 {
        return Err(Error::NoPeak { sweep: None });
    }
    Ok(LeakageEstimate {
        k_leak: best_k,
        f_leak: best_k as f64 * bin_hz,
        theta_leak: principal_branch(bins[best_k].arg()),
        peak_mag: best_mag_sq.sqrt(),
    })
}

/// Finds the leakage tone as the magnitude peak of the zero-padded spectrum
/// within the configured search band.
pub fn estimate_leakage(sweep: &[Complex64], p: &ValidatedParams) -> Result<LeakageEstimate> {
    let spectrum = zero_pad_fft(sweep, p.nfft_leak, p.fs)?;
    estimate_from_spectrum(&spectrum.bins, spectrum.bin_hz, p.leak_search_max_hz)
}

/// NCO[n] = exp(j (2 pi f_leak n / fs + theta_leak)), n = 0..count-1.
pub fn generate_nco(est: &LeakageEstimate, count: usize, fs: f64) -> Vec<Complex64> {
    let step = 2.0 * PI * est.f_leak / fs;
    (0..count)
        .map(|n| Complex64::from_polar(1.0, step * n as f64 + est.theta_leak))
        .collect()
}

/// out[n] = Re(x[n] * conj(NCO[n])).
pub fn mix_extract_real(sweep: &[Complex64], nco: &[Complex64]) -> Result<Vec<f64>> {
    if sweep.len() != nco.len() {
        return Err(Error::LengthMismatch {
            left: sweep.len(),
            right: nco.len(),
        });
    }
    Ok(sweep
        .iter()
        .zip(nco)
        .map(|(x, n)| x.re * n.re + x.im * n.im)
        .collect())
}

fn mitigate_sweep(
    sweep: &[Complex64],
    p: &ValidatedParams,
    fft: &Arc<dyn Fft<f64>>,
    bins: &mut Vec<Complex64>,
    scratch: &mut Vec<Complex64>,
) -> Result<(Vec<f64>, LeakageEstimate)> {
    bins.clear();
    bins.resize(p.nfft_leak, Complex64::new(0.0, 0.0));
    bins[..sweep.len()].copy_from_slice(sweep);
    scratch.resize(fft.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
    fft.process_with_scratch(bins, scratch);
    let est = estimate_from_spectrum(bins, p.fs / p.nfft_leak as f64, p.leak_search_max_hz)?;
    let nco = generate_nco(&est, sweep.len(), p.fs);
    Ok((mix_extract_real(sweep, &nco)?, est))
}

/// Applies the per-sweep estimate/mix/extract chain to every sweep of the
/// cube. Sweeps are independent, so the loop fans out across threads; the
/// output is bit-identical to sequential execution.
pub fn aspc_cube(cube: &DataCube, p: &ValidatedParams) -> Result<(Array2<f64>, Vec<LeakageEstimate>)> {
    let n = cube.n();
    let m = cube.m();
    let fft = dsp::plan_forward(p.nfft_leak);

    let per_sweep: Vec<(Vec<f64>, LeakageEstimate)> = (0..m)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(bins, scratch), idx| {
                let sweep = cube.sweep(idx);
                mitigate_sweep(sweep.as_slice().expect("rows are contiguous"), p, &fft, bins, scratch)
                    .map_err(|e| match e {
                        Error::NoPeak { .. } => Error::NoPeak { sweep: Some(idx) },
                        other => other,
                    })
            },
        )
        .collect::<Result<Vec<_>>>()?;

    let mut estimates = Vec::with_capacity(m);
    let mut flat = Vec::with_capacity(n * m);
    for (row, est) in per_sweep {
        flat.extend_from_slice(&row);
        estimates.push(est);
    }
    let out = Array2::from_shape_vec((m, n), flat).expect("row dimensions are uniform");
    Ok((out, estimates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate_params, RadarParams, WindowKind};
    use crate::sim::{simulate_cube, LeakageModel, PhaseNoiseParams, PointTarget};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn default_params() -> ValidatedParams {
        validate_params(RadarParams::default()).unwrap()
    }

    fn tone(n: usize, fs: f64, f0: f64, phase: f64, amp: f64) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::from_polar(amp, 2.0 * PI * f0 * i as f64 / fs + phase))
            .collect()
    }

    #[test]
    fn zero_pad_fft_preserves_energy() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let sweep: Vec<Complex64> = (0..400)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let spec = zero_pad_fft(&sweep, 4096, 5e6).unwrap();
        let time_energy: f64 = sweep.iter().map(|x| x.norm_sqr()).sum();
        let freq_energy: f64 = spec.bins.iter().map(|x| x.norm_sqr()).sum::<f64>() / 4096.0;
        assert!((time_energy - freq_energy).abs() / time_energy < 1e-9);
    }

    #[test]
    fn zero_pad_fft_of_impulse_is_flat() {
        let mut sweep = vec![Complex64::new(0.0, 0.0); 16];
        sweep[0] = Complex64::new(1.0, 0.0);
        let spec = zero_pad_fft(&sweep, 64, 5e6).unwrap();
        for bin in &spec.bins {
            assert!((bin - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_pad_fft_rejects_short_transform() {
        let sweep = vec![Complex64::new(1.0, 0.0); 64];
        assert!(matches!(
            zero_pad_fft(&sweep, 32, 5e6),
            Err(Error::BadLength { .. })
        ));
    }

    #[test]
    fn on_grid_tone_peaks_at_its_bin() {
        let p = default_params();
        let f0 = 1024.0 * p.fs / p.nfft_leak as f64; // 9765.625 Hz
        let sweep = tone(p.samples_per_sweep(), p.fs, f0, 0.0, 1.0);
        let spec = zero_pad_fft(&sweep, p.nfft_leak, p.fs).unwrap();
        let peak = spec
            .bins
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().partial_cmp(&b.1.norm_sqr()).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, 1024);
    }

    #[test]
    fn estimates_on_grid_tone_exactly() {
        let p = default_params();
        let f0 = 1024.0 * p.fs / p.nfft_leak as f64;
        let sweep = tone(p.samples_per_sweep(), p.fs, f0, 0.3, 1.0);
        let est = estimate_leakage(&sweep, &p).unwrap();
        assert_eq!(est.k_leak, 1024);
        assert_eq!(est.f_leak, f0);
        assert!((est.theta_leak - 0.3).abs() <= 1e-9);
        assert!((est.peak_mag - 4000.0).abs() / 4000.0 < 1e-9);
    }

    #[test]
    fn estimates_off_grid_tone_within_a_bin() {
        let p = default_params();
        let bin_hz = p.fs / p.nfft_leak as f64;
        let sweep = tone(p.samples_per_sweep(), p.fs, 10_000.0, 0.3, 1.0);
        let est = estimate_leakage(&sweep, &p).unwrap();
        assert!((est.f_leak - 10_000.0).abs() <= bin_hz);
        assert!((est.theta_leak - 0.3).abs() <= 0.02);
    }

    #[test]
    fn all_zero_sweep_has_no_peak() {
        let p = default_params();
        let sweep = vec![Complex64::new(0.0, 0.0); p.samples_per_sweep()];
        assert!(matches!(
            estimate_leakage(&sweep, &p),
            Err(Error::NoPeak { .. })
        ));
    }

    #[test]
    fn nco_basics() {
        let zero = LeakageEstimate {
            k_leak: 0,
            f_leak: 0.0,
            theta_leak: 0.0,
            peak_mag: 1.0,
        };
        for s in generate_nco(&zero, 8, 5e6) {
            assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }

        let offset = LeakageEstimate {
            theta_leak: 0.7,
            ..zero
        };
        let nco = generate_nco(&offset, 4, 5e6);
        assert!((nco[0] - Complex64::from_polar(1.0, 0.7)).norm() < 1e-15);

        let quarter = LeakageEstimate {
            k_leak: 0,
            f_leak: 1.25e6,
            theta_leak: 0.0,
            peak_mag: 1.0,
        };
        let nco = generate_nco(&quarter, 4, 5e6);
        let expect = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        for (got, want) in nco.iter().zip(expect) {
            assert!((got - want).norm() < 1e-12);
            assert!((got.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mixing_against_itself_gives_ones() {
        let est = LeakageEstimate {
            k_leak: 3,
            f_leak: 3.0 * 5e6 / 4096.0,
            theta_leak: -1.1,
            peak_mag: 1.0,
        };
        let nco = generate_nco(&est, 64, 5e6);
        let out = mix_extract_real(&nco, &nco).unwrap();
        for v in out {
            assert!((v - 1.0).abs() < 1e-12);
        }

        let scaled: Vec<Complex64> = nco.iter().map(|s| s * 2.5).collect();
        for v in mix_extract_real(&scaled, &nco).unwrap() {
            assert!((v - 2.5).abs() < 1e-12);
        }

        assert!(matches!(
            mix_extract_real(&nco[..10], &nco),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn residual_power_is_quartic_in_phase_noise() {
        // With an exact estimate the output is A cos(phi); its AC power
        // follows sigma^4 / 2, so doubling sigma multiplies it by ~16.
        let p = default_params();
        let n = p.samples_per_sweep();
        let f0 = 105.0 * p.fs / p.nfft_leak as f64;
        let est = LeakageEstimate {
            k_leak: 105,
            f_leak: f0,
            theta_leak: 0.3,
            peak_mag: n as f64,
        };
        let nco = generate_nco(&est, n, p.fs);

        let mut mean_power = |sigma: f64| -> f64 {
            let mut acc = 0.0;
            for seed in 0..100u64 {
                let pn = PhaseNoiseParams {
                    rms: sigma,
                    corner_hz: 1e5,
                    seed,
                };
                let phi = crate::sim::phase_noise_sequence(&pn, p.fs, n, 0);
                let sweep: Vec<Complex64> = (0..n)
                    .map(|i| {
                        Complex64::from_polar(1.0, 2.0 * PI * f0 * i as f64 / p.fs + 0.3 + phi[i])
                    })
                    .collect();
                let out = mix_extract_real(&sweep, &nco).unwrap();
                let mean = out.iter().sum::<f64>() / n as f64;
                acc += out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            }
            acc / 100.0
        };

        let ratio = mean_power(0.04) / mean_power(0.02);
        assert!(
            ratio > 16.0 / 1.5 && ratio < 16.0 * 1.5,
            "quartic ratio {ratio} outside [10.7, 24]"
        );
    }

    fn small_params(m_sweeps: usize) -> ValidatedParams {
        validate_params(RadarParams {
            fs: 1e6,
            t_sweep: 256e-6,
            nfft_leak: 1024,
            range_fft_len: 256,
            digital_bw: 0.5e6,
            window: WindowKind::Rect,
            m_sweeps,
            ..RadarParams::default()
        })
        .unwrap()
    }

    fn on_grid_leak(p: &ValidatedParams, rms: f64) -> LeakageModel {
        LeakageModel {
            amplitude: 1.0,
            beat_freq: 8.0 * p.fs / p.nfft_leak as f64,
            static_phase: 0.4,
            phase_noise: PhaseNoiseParams {
                rms,
                corner_hz: 1e5,
                seed: 2,
            },
        }
    }

    #[test]
    fn single_sweep_cube_matches_composition() {
        let p = small_params(1);
        let cube = simulate_cube(&p, &[], &on_grid_leak(&p, 0.02), 0.0, 9).unwrap();
        let (out, ests) = aspc_cube(&cube, &p).unwrap();
        let sweep = cube.sweep(0).to_vec();
        let est = estimate_leakage(&sweep, &p).unwrap();
        let nco = generate_nco(&est, sweep.len(), p.fs);
        let direct = mix_extract_real(&sweep, &nco).unwrap();
        assert_eq!(out.row(0).to_vec(), direct);
        assert_eq!(ests[0], est);
    }

    #[test]
    fn identical_sweeps_give_identical_outputs() {
        let p = small_params(4);
        // rms = 0 makes every sweep the same deterministic tone.
        let cube = simulate_cube(&p, &[], &on_grid_leak(&p, 0.0), 0.0, 1).unwrap();
        let (out, ests) = aspc_cube(&cube, &p).unwrap();
        for m in 1..4 {
            assert_eq!(out.row(m).to_vec(), out.row(0).to_vec());
            assert_eq!(ests[m], ests[0]);
        }
    }

    #[test]
    fn clean_on_grid_leakage_collapses_to_dc() {
        let p = small_params(3);
        let cube = simulate_cube(&p, &[], &on_grid_leak(&p, 0.0), 0.0, 1).unwrap();
        let (out, _) = aspc_cube(&cube, &p).unwrap();
        for row in out.rows() {
            for &v in row {
                assert!((v - 1.0).abs() < 1e-9);
            }
            // Unwindowed, unpadded FFT of the mitigated sweep puts everything
            // in the DC bin.
            let mut bins: Vec<Complex64> =
                row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            crate::dsp::fft_in_place(&mut bins);
            let total: f64 = bins.iter().map(|b| b.norm_sqr()).sum();
            assert!(bins[0].norm_sqr() / total >= 0.9999);
        }
    }

    #[test]
    fn cube_output_is_deterministic() {
        let p = small_params(16);
        let cube = simulate_cube(&p, &[], &on_grid_leak(&p, 0.05), 0.001, 77).unwrap();
        let (a, _) = aspc_cube(&cube, &p).unwrap();
        let (b, _) = aspc_cube(&cube, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_peak_reports_sweep_index() {
        let p = small_params(2);
        let mut cube = simulate_cube(&p, &[], &on_grid_leak(&p, 0.0), 0.0, 1).unwrap();
        cube.data.row_mut(1).fill(Complex64::new(0.0, 0.0));
        match aspc_cube(&cube, &p) {
            Err(Error::NoPeak { sweep: Some(1) }) => {}
            other => panic!("expected NoPeak at sweep 1, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn estimator_stays_inside_search_band(
            f_target in 100e3f64..450e3,
            seed in 0u64..1000,
        ) {
            let p = small_params(1);
            let scene = [PointTarget {
                x_along: 0.0,
                y_cross: f_target * crate::params::SPEED_OF_LIGHT
                    / (2.0 * crate::params::chirp_rate(&p)),
                amplitude: 1.0,
            }];
            let cube = simulate_cube(&p, &scene, &LeakageModel::default(), 1e-3, seed).unwrap();
            let est = estimate_leakage(&cube.sweep(0).to_vec(), &p).unwrap();
            prop_assert!(est.f_leak <= p.leak_search_max_hz);
        }
    }
}
