//! Molecular absorption noise.
//!
//! The total noise p.s.d. is a background term, saturated in path length,
//! plus a self-induced term proportional to the transmitted pulse p.s.d.
//! Per-bin variances use the rectangle rule `S_N(f_b) · Δf`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::arraysim::FrequencyGrid;
use crate::channel::{AbsorptionTable, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::pulsebank::PulseSpec;

pub const BOLTZMANN: f64 = 1.380649e-23;
pub const ROOM_TEMPERATURE: f64 = 296.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseParams {
    pub boltzmann: f64,
    pub room_temp: f64,
    pub speed_of_light: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { boltzmann: BOLTZMANN, room_temp: ROOM_TEMPERATURE, speed_of_light: SPEED_OF_LIGHT }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if self.boltzmann > 0.0 && self.room_temp > 0.0 && self.speed_of_light > 0.0 {
            Ok(())
        } else {
            Err(Error::domain("noise parameters must all be positive"))
        }
    }
}

/// Noise variance per frequency bin, in watts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinVariance {
    pub per_bin: Vec<(f64, f64)>,
    pub bin_width: f64,
}

impl BinVariance {
    pub fn variances(&self) -> impl Iterator<Item = f64> + '_ {
        self.per_bin.iter().map(|&(_, v)| v)
    }

    /// Variance of the noise Fourier coefficient in the same units as the
    /// pulse spectrum `G_n(f)`.
    ///
    /// With `S_G = |G_n|² / T_g`, a bin power `P` corresponds to a
    /// coefficient variance `P · T_g / Δf`. Under this scaling the
    /// self-induced noise to signal ratio in a bin is exactly `e^{k d} - 1`.
    pub fn coefficient_variances(&self, pulse_duration: f64) -> Vec<f64> {
        let factor = pulse_duration / self.bin_width;
        self.variances().map(|v| v * factor).collect()
    }
}

/// Background atmospheric noise p.s.d. in the `d → ∞` limit.
///
/// The limit of `1 - exp(-k d)` is 1 when `k(f) > 0` and 0 when `k(f) = 0`,
/// so the result does not depend on `_path_length`.
pub fn background_psd(
    params: &NoiseParams,
    table: &AbsorptionTable,
    f: f64,
    center_hz: f64,
    _path_length: f64,
) -> Result<f64> {
    let k = table.k_at(f)?;
    let saturation = if k > 0.0 { 1.0 } else { 0.0 };
    let aperture = params.speed_of_light / ((4.0 * PI).sqrt() * center_hz);
    Ok(params.boltzmann * params.room_temp * saturation * aperture * aperture)
}

/// Self-induced noise p.s.d. for a transmitted pulse p.s.d. `pulse_psd` at `f`.
pub fn self_psd(
    params: &NoiseParams,
    table: &AbsorptionTable,
    pulse_psd: f64,
    f: f64,
    center_hz: f64,
    path_length: f64,
) -> Result<f64> {
    if !(pulse_psd >= 0.0) {
        return Err(Error::domain(format!("pulse p.s.d. must be nonnegative, got {pulse_psd}")));
    }
    let k = table.k_at(f)?;
    let spread = params.speed_of_light / (4.0 * PI * path_length * center_hz);
    Ok(pulse_psd * -(-k * path_length).exp_m1() * spread * spread)
}

pub fn total_psd(
    params: &NoiseParams,
    table: &AbsorptionTable,
    pulse: &PulseSpec,
    f: f64,
    path_length: f64,
) -> Result<f64> {
    let fc = pulse.center_freq();
    Ok(background_psd(params, table, f, fc, path_length)? + self_psd(params, table, pulse.psd(f), f, fc, path_length)?)
}

pub fn bin_variances(
    params: &NoiseParams,
    table: &AbsorptionTable,
    pulse: &PulseSpec,
    grid: &FrequencyGrid,
    path_length: f64,
) -> Result<BinVariance> {
    params.validate()?;
    if !(path_length > 0.0) {
        return Err(Error::domain(format!("path length must be positive, got {path_length}")));
    }
    let df = grid.bin_width();
    let per_bin = grid
        .centers()
        .iter()
        .map(|&fb| Ok((fb, total_psd(params, table, pulse, fb, path_length)? * df)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BinVariance { per_bin, bin_width: df })
}

/// Circularly-symmetric complex Gaussian noise, one `antennas × snapshots`
/// matrix per variance.
///
/// The generator is ChaCha8 seeded with `seed`; draws are taken bin by bin,
/// column-major within a bin, real part before imaginary part.
pub fn sample_noise(
    variances: &[f64],
    antennas: usize,
    snapshots: usize,
    seed: u64,
) -> Result<Vec<DMatrix<Complex64>>> {
    if antennas == 0 || snapshots == 0 {
        return Err(Error::domain("noise needs at least one antenna and one snapshot"));
    }
    if let Some(v) = variances.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::domain(format!("invalid noise variance {v}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = variances
        .iter()
        .map(|&var| {
            let std = (0.5 * var).sqrt();
            DMatrix::from_fn(antennas, snapshots, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                if std == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(std * re, std * im)
                }
            })
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulsebank::spec_from_center;

    fn positive_table() -> AbsorptionTable {
        AbsorptionTable::constant("c", 50e9, 400e9, 1e-3).unwrap()
    }

    fn zero_table() -> AbsorptionTable {
        AbsorptionTable::constant("z", 50e9, 400e9, 0.0).unwrap()
    }

    #[test]
    fn background_values() {
        let p = NoiseParams::default();
        assert_eq!(background_psd(&p, &zero_table(), 2e11, 2e11, 5.0).unwrap(), 0.0);
        let b = background_psd(&p, &positive_table(), 2e11, 2e11, 5.0).unwrap();
        assert!((b - 7.32e-28).abs() / 7.32e-28 < 1e-3, "{b:e}");
        let far = background_psd(&p, &positive_table(), 2e11, 2e11, 5000.0).unwrap();
        assert_eq!(b, far);
    }

    #[test]
    fn self_noise_values() {
        let p = NoiseParams::default();
        assert_eq!(self_psd(&p, &zero_table(), 1.0, 2e11, 2e11, 10.0).unwrap(), 0.0);
        assert_eq!(self_psd(&p, &positive_table(), 0.0, 2e11, 2e11, 10.0).unwrap(), 0.0);
        let s = self_psd(&p, &positive_table(), 1.0, 2e11, 2e11, 1000.0).unwrap();
        // (1 - e^-1) · (3e8 / (4π · 1000 · 2e11))²
        assert!((s - 9.006638e-15).abs() / 9.006638e-15 < 1e-6, "{s:e}");
        assert!(self_psd(&p, &positive_table(), -1.0, 2e11, 2e11, 10.0).is_err());
    }

    #[test]
    fn lossless_medium_is_silent() {
        let pulse = spec_from_center(6, 131e9, 1e-7).unwrap();
        let grid = FrequencyGrid::build(100e9, 325e9, 42e-12).unwrap();
        let v = bin_variances(&NoiseParams::default(), &zero_table(), &pulse, &grid, 10.0).unwrap();
        assert!(v.variances().all(|x| x == 0.0));
    }

    #[test]
    fn variance_scales_with_bin_width() {
        // same bin centers, half the window: 100, 110, 120 GHz vs 100, 120 GHz
        let pulse = spec_from_center(6, 131e9, 1e-7).unwrap();
        let table = positive_table();
        let fine = FrequencyGrid::build(100e9, 120e9, 100e-12).unwrap();
        let coarse = FrequencyGrid::build(100e9, 120e9, 50e-12).unwrap();
        let p = NoiseParams::default();
        let vf = bin_variances(&p, &table, &pulse, &fine, 10.0).unwrap();
        let vc = bin_variances(&p, &table, &pulse, &coarse, 10.0).unwrap();
        assert_eq!(vf.per_bin.len(), 3);
        assert_eq!(vc.per_bin.len(), 2);
        for (i, j) in [(0, 0), (2, 1)] {
            assert_eq!(vf.per_bin[i].0, vc.per_bin[j].0);
            let r = vc.per_bin[j].1 / vf.per_bin[i].1;
            assert!((r - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_bin_variances_bundled_table() {
        // Frozen from an independent evaluation of the background and
        // self-induced closed forms on the bundled CSV.
        let golden = [
            4.0639252668514037e-17,
            4.0674416833855015e-17,
            4.0676661816779285e-17,
            4.06912237809954e-17,
            4.062703761219764e-17,
            4.06092538577932e-17,
            4.0608446300606005e-17,
            4.060839149667614e-17,
            4.060838880945493e-17,
            4.060838870786332e-17,
        ];
        let pulse = spec_from_center(6, 131e9, 1e-7).unwrap();
        let grid = FrequencyGrid::build(100e9, 325e9, 42e-12).unwrap();
        let v = bin_variances(&NoiseParams::default(), &AbsorptionTable::bundled_summer_air(), &pulse, &grid, 10.0)
            .unwrap();
        assert_eq!(v.per_bin.len(), golden.len());
        for ((_, got), want) in v.per_bin.iter().zip(golden) {
            assert!((got - want).abs() / want < 1e-12, "{got:e} vs {want:e}");
        }
    }

    #[test]
    fn zero_variance_draws_are_zero() {
        let m = sample_noise(&[0.0, 0.0], 4, 3, 7).unwrap();
        assert!(m.iter().all(|b| b.iter().all(|z| *z == Complex64::new(0.0, 0.0))));
    }

    #[test]
    fn same_seed_same_noise() {
        let a = sample_noise(&[1.0, 2.0], 8, 2, 42).unwrap();
        let b = sample_noise(&[1.0, 2.0], 8, 2, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_noise(&[1.0, 2.0], 8, 2, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_variance_matches() {
        let var = 3.5e-20;
        let m = sample_noise(&[var], 1, 100_000, 9).unwrap();
        let est = m[0].iter().map(|z| z.norm_sqr()).sum::<f64>() / 100_000.0;
        assert!((est - var).abs() / var < 0.02, "{est:e}");
        let re = m[0].iter().map(|z| z.re * z.re).sum::<f64>() / 100_000.0;
        assert!((re - 0.5 * var).abs() / (0.5 * var) < 0.03);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(sample_noise(&[1.0], 0, 1, 0).is_err());
        assert!(sample_noise(&[1.0], 1, 0, 0).is_err());
        assert!(sample_noise(&[-1.0], 1, 1, 0).is_err());
    }
}
