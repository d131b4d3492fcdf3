//! Receiver side: covariance, incoherent MUSIC direction finding, pulse
//! p.s.d. recovery, spectral centroid, and nearest-center classification.

mod eig;

pub use eig::{hermitian_eig, EigenDecomposition, HERMITIAN_TOLERANCE};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::arraysim::{ArrayConfig, FrequencyGrid, SnapshotSet};
use crate::error::{Error, Result};

/// One emitter.
pub const SOURCE_COUNT: usize = 1;

/// Floor on the MUSIC denominator `aᴴ E_n E_nᴴ a`.
pub const DENOMINATOR_FLOOR: f64 = 1e-18;

pub const COARSE_STEP_DEG: f64 = 0.1;
pub const FINE_STEP_DEG: f64 = 0.001;
pub const FINE_HALF_WIDTH_DEG: f64 = 0.2;

/// Golden-section iterations inside one fine step; shrinks the bracket
/// below 1e-12 degrees.
const GOLDEN_ITERATIONS: usize = 48;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationOutcome {
    pub theta_hat: f64,
    pub psd_hat: Vec<(f64, f64)>,
    pub centroid: f64,
    pub classified: f64,
    /// IMUSIC spectrum on the coarse angle grid.
    pub spectrum: Vec<(f64, f64)>,
}

/// `(1/K) Y Yᴴ`.
pub fn sample_covariance(snapshots: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let k = snapshots.ncols();
    if k == 0 {
        return Err(Error::domain("covariance needs at least one snapshot"));
    }
    let mut r = snapshots * snapshots.adjoint();
    r.scale_mut(1.0 / k as f64);
    Ok(r)
}

/// Incoherent MUSIC pseudospectrum: per-bin noise-subspace projectors summed
/// over frequency.
#[derive(Debug, Clone)]
pub struct ImusicSpectrum {
    array: ArrayConfig,
    bins: Vec<(f64, DMatrix<Complex64>)>,
}

impl ImusicSpectrum {
    /// `noise_subspaces[b]` is the `N × (N - 1)` matrix `E_n` at bin `b`.
    pub fn new(array: ArrayConfig, grid: &FrequencyGrid, noise_subspaces: &[DMatrix<Complex64>]) -> Result<Self> {
        if noise_subspaces.len() != grid.bins() {
            return Err(Error::domain(format!("{} noise subspaces for {} bins", noise_subspaces.len(), grid.bins())));
        }
        let bins = grid
            .centers()
            .iter()
            .zip(noise_subspaces)
            .map(|(&f, en)| {
                if en.nrows() != array.elements {
                    return Err(Error::domain("noise subspace row count differs from array size"));
                }
                Ok((f, en * en.adjoint()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { array, bins })
    }

    /// From per-bin covariances, taking eigenvectors `2..N` as the noise subspace.
    pub fn from_covariances(
        array: ArrayConfig,
        grid: &FrequencyGrid,
        covariances: &[DMatrix<Complex64>],
    ) -> Result<Self> {
        let subspaces = covariances
            .iter()
            .map(|r| Ok(hermitian_eig(r)?.noise_subspace(SOURCE_COUNT)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(array, grid, &subspaces)
    }

    /// `P(θ) = Σ_b aᴴa / aᴴ E_n E_nᴴ a`, summed in bin order.
    pub fn eval(&self, theta_deg: f64) -> f64 {
        let n = self.array.elements;
        let step = self.array.spacing * theta_deg.to_radians().sin() / self.array.speed_of_light;
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        let mut total = 0.0;
        for (f, proj) in &self.bins {
            for (i, ai) in a.iter_mut().enumerate() {
                *ai = Complex64::from_polar(1.0, -2.0 * PI * f * (i as f64 * step));
            }
            let mut den = 0.0;
            for j in 0..n {
                let mut pa = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    pa += proj[(j, i)] * a[i];
                }
                den += (a[j].conj() * pa).re;
            }
            total += n as f64 / den.max(DENOMINATOR_FLOOR);
        }
        total
    }

    pub fn sample(&self, theta_grid: &[f64]) -> Vec<(f64, f64)> {
        theta_grid.iter().map(|&t| (t, self.eval(t))).collect()
    }
}

pub fn imusic_spectrum(
    noise_subspaces: &[DMatrix<Complex64>],
    grid: &FrequencyGrid,
    cfg: &ArrayConfig,
    theta_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    Ok(ImusicSpectrum::new(*cfg, grid, noise_subspaces)?.sample(theta_grid))
}

/// `[-90, 90]` in coarse steps.
pub fn coarse_grid() -> Vec<f64> {
    let n = (180.0 / COARSE_STEP_DEG).round() as i64;
    (0..=n).map(|i| -90.0 + i as f64 * COARSE_STEP_DEG).collect()
}

/// First index of the largest finite value, so ties go to the smaller angle.
fn argmax(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &(t, v) in points {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((t, v));
        }
    }
    best
}

/// Peak location of an angular spectrum.
///
/// A 0.1° scan over `[-90°, 90°]`, a 0.001° scan over ±0.2° around the coarse
/// peak, then golden-section search within one fine step of the fine peak.
/// The golden-section point is kept only if it scores at least as high as
/// the fine-grid peak.
pub fn estimate_doa(spectrum: impl Fn(f64) -> f64) -> f64 {
    let coarse: Vec<_> = coarse_grid().into_iter().map(|t| (t, spectrum(t))).collect();
    estimate_doa_from_coarse(&coarse, spectrum)
}

fn estimate_doa_from_coarse(coarse: &[(f64, f64)], spectrum: impl Fn(f64) -> f64) -> f64 {
    let Some((c0, _)) = argmax(coarse) else {
        return 0.0;
    };
    let steps = (FINE_HALF_WIDTH_DEG / FINE_STEP_DEG).round() as i64;
    let fine: Vec<_> = (-steps..=steps)
        .map(|i| c0 + i as f64 * FINE_STEP_DEG)
        .filter(|t| (-90.0..=90.0).contains(t))
        .map(|t| (t, spectrum(t)))
        .collect();
    let (f0, fv) = argmax(&fine).unwrap_or((c0, f64::NEG_INFINITY));

    let lo = (f0 - FINE_STEP_DEG).max(-90.0);
    let hi = (f0 + FINE_STEP_DEG).min(90.0);
    let (g, gv) = golden_max(&spectrum, lo, hi);
    if gv >= fv {
        g
    } else {
        f0
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Steering vector pseudo-inverse `a† = aᴴ / (aᴴ a)`.
fn pseudo_inverse_row(a: &nalgebra::DVector<Complex64>) -> nalgebra::RowDVector<Complex64> {
    a.adjoint() / Complex64::new(a.norm_squared(), 0.0)
}

/// `Ŝ(f_b) = a† R̂ (aᴴ)†` at the estimated angle, clamped at zero.
pub fn estimate_psd(
    covariances: &[DMatrix<Complex64>],
    theta_hat: f64,
    grid: &FrequencyGrid,
    cfg: &ArrayConfig,
) -> Result<Vec<(f64, f64)>> {
    if covariances.len() != grid.bins() {
        return Err(Error::domain(format!("{} covariances for {} bins", covariances.len(), grid.bins())));
    }
    grid.centers()
        .iter()
        .zip(covariances)
        .map(|(&f, r)| {
            let a = cfg.steering(f, theta_hat)?;
            let left = pseudo_inverse_row(&a);
            let right = left.adjoint();
            let s = (left * r * right)[(0, 0)].re;
            Ok((f, s.max(0.0)))
        })
        .collect()
}

/// Power-weighted mean frequency.
pub fn spectral_centroid(psd: &[(f64, f64)]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(f, s) in psd {
        num += f * s;
        den += s;
    }
    if !(den > 0.0) {
        return Err(Error::Degenerate("spectrum has no positive power".into()));
    }
    Ok(num / den)
}

/// Nearest center; an exact tie goes to the lower frequency.
pub fn classify(centroid: f64, centers: &[f64]) -> Result<f64> {
    let mut sorted = centers.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    for c in sorted {
        let d = (centroid - c).abs();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((c, d));
        }
    }
    best.map(|(c, _)| c).ok_or_else(|| Error::domain("no candidate center frequencies"))
}

/// Full receiver chain on one snapshot set.
pub fn estimate(
    set: &SnapshotSet,
    grid: &FrequencyGrid,
    cfg: &ArrayConfig,
    centers: &[f64],
) -> Result<EstimationOutcome> {
    if set.per_bin.len() != grid.bins() {
        return Err(Error::domain(format!("{} snapshot bins for {} grid bins", set.per_bin.len(), grid.bins())));
    }
    if set.antennas() != cfg.elements {
        return Err(Error::domain(format!("snapshots have {} elements, array has {}", set.antennas(), cfg.elements)));
    }
    let covariances = set.per_bin.iter().map(sample_covariance).collect::<Result<Vec<_>>>()?;
    let spectrum = ImusicSpectrum::from_covariances(*cfg, grid, &covariances)?;
    let coarse = spectrum.sample(&coarse_grid());
    let theta_hat = estimate_doa_from_coarse(&coarse, |t| spectrum.eval(t));
    let psd_hat = estimate_psd(&covariances, theta_hat, grid, cfg)?;
    let centroid = spectral_centroid(&psd_hat)?;
    let classified = classify(centroid, centers)?;
    Ok(EstimationOutcome { theta_hat, psd_hat, centroid, classified, spectrum: coarse })
}
