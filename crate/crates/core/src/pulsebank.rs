//! Higher time-derivative Gaussian pulses.
//!
//! A pulse of order `n` is `a_n · dⁿ/dtⁿ g(t)` where `g` is the unit-area
//! Gaussian of standard deviation `σ`. Everything here is closed form: the
//! time derivatives go through probabilists' Hermite polynomials, the energy
//! integral through a double factorial, and the spectrum is analytic.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Ratio of the pulse duration to `σ`.
pub const DURATION_IN_SIGMAS: f64 = 10.0;

/// Highest order the bank supports.
pub const MAX_ORDER: u32 = 10;

/// Bisection stops once the bracket is narrower than this.
pub const BAND_EDGE_TOLERANCE_HZ: f64 = 1.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseSpec {
    order: u32,
    sigma: f64,
    energy: f64,
    scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandDescriptor {
    pub f_low: f64,
    pub f_high: f64,
    pub bandwidth: f64,
}

impl BandDescriptor {
    pub fn overlaps(&self, other: &BandDescriptor) -> bool {
        self.f_low <= other.f_high && other.f_low <= self.f_high
    }
}

/// A set of same-order pulses at increasing center frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseBank {
    pub specs: Vec<PulseSpec>,
    pub bands: Vec<BandDescriptor>,
    /// Index pairs `(i, j)`, `i < j`, whose half-power bands intersect.
    pub overlaps: Vec<(usize, usize)>,
}

impl PulseBank {
    pub fn has_overlap(&self) -> bool {
        !self.overlaps.is_empty()
    }
}

impl PulseSpec {
    pub fn new(order: u32, sigma: f64, energy: f64) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::domain(format!("pulse order must be in 1..={MAX_ORDER}, got {order}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        if !(energy > 0.0 && energy.is_finite()) {
            return Err(Error::domain(format!("energy must be positive, got {energy}")));
        }
        Ok(Self { order, sigma, energy, scale: scaling_factor(order, sigma, energy) })
    }

    /// Builds the pulse whose spectral peak sits at `center_hz` and whose
    /// energy over its duration corresponds to `power_w`.
    pub fn from_center(order: u32, center_hz: f64, power_w: f64) -> Result<Self> {
        if !(center_hz > 0.0 && center_hz.is_finite()) {
            return Err(Error::domain(format!("center frequency must be positive, got {center_hz}")));
        }
        if !(power_w > 0.0 && power_w.is_finite()) {
            return Err(Error::domain(format!("power must be positive, got {power_w}")));
        }
        if order == 0 {
            return Err(Error::domain("pulse order must be at least 1"));
        }
        let sigma = f64::from(order).sqrt() / (2.0 * PI * center_hz);
        let energy = power_w * DURATION_IN_SIGMAS * sigma;
        Self::new(order, sigma, energy)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Energy scaling factor `a_n`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn center_freq(&self) -> f64 {
        f64::from(self.order).sqrt() / (2.0 * PI * self.sigma)
    }

    pub fn duration(&self) -> f64 {
        DURATION_IN_SIGMAS * self.sigma
    }

    pub fn power(&self) -> f64 {
        self.energy / self.duration()
    }

    /// Time-domain amplitude at `t` seconds.
    pub fn eval_time(&self, t: f64) -> f64 {
        let x = t / self.sigma;
        let sign = if self.order.is_multiple_of(2) { 1.0 } else { -1.0 };
        self.scale
            * sign
            * self.sigma.powi(-(self.order as i32))
            * hermite_prob(self.order, x)
            * gaussian(t, self.sigma)
    }

    /// Fourier transform `a_n (j2πf)ⁿ exp(-(2πσf)²/2)`.
    pub fn eval_freq(&self, f: f64) -> Complex64 {
        let w = 2.0 * PI * f;
        let jw_n = Complex64::new(0.0, w).powu(self.order);
        jw_n * (self.scale * (-0.5 * (w * self.sigma).powi(2)).exp())
    }

    /// `|G_n(f)|²`, the energy spectral density.
    pub fn energy_density(&self, f: f64) -> f64 {
        let w = 2.0 * PI * f;
        self.scale.powi(2) * w.powi(2 * self.order as i32) * (-(w * self.sigma).powi(2)).exp()
    }

    /// Transmitted power spectral density `|G_n(f)|² / T_g` in W/Hz.
    pub fn psd(&self, f: f64) -> f64 {
        self.energy_density(f) / self.duration()
    }

    /// Half-power band edges around the center frequency.
    pub fn half_power_band(&self) -> BandDescriptor {
        let fc = self.center_freq();
        let n = f64::from(self.order);
        // ln(|G(f)|² / |G(fc)|²) + ln 2, using (2πσ fc)² = n
        let excess = |f: f64| {
            let x = f / fc;
            2.0 * n * x.ln() - n * (x * x - 1.0) + std::f64::consts::LN_2
        };
        let f_low = bisect(excess, fc * 1e-9, fc);
        let f_high = bisect(excess, fc, 10.0 * fc);
        BandDescriptor { f_low, f_high, bandwidth: f_high - f_low }
    }

    /// `samples` points of the waveform over `[-T_g/2, T_g/2]`.
    pub fn sample_waveform(&self, samples: usize) -> Vec<(f64, f64)> {
        let half = 0.5 * self.duration();
        match samples {
            0 => Vec::new(),
            1 => vec![(0.0, self.eval_time(0.0))],
            _ => {
                let step = 2.0 * half / (samples - 1) as f64;
                (0..samples)
                    .map(|i| {
                        let t = -half + step * i as f64;
                        (t, self.eval_time(t))
                    })
                    .collect()
            }
        }
    }
}

/// Bisection for a sign change inside `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let lo_positive = f(lo) > 0.0;
    while hi - lo > BAND_EDGE_TOLERANCE_HZ {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Unit-area Gaussian.
pub fn gaussian(t: f64, sigma: f64) -> f64 {
    (-0.5 * (t / sigma).powi(2)).exp() / ((2.0 * PI).sqrt() * sigma)
}

/// Probabilists' Hermite polynomial `He_n(x)`.
pub fn hermite_prob(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = x * cur - f64::from(k) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `(2n-1)!!`, with `(-1)!! = 1`.
pub fn double_factorial_odd(n: u32) -> f64 {
    (1..=n).map(|k| f64::from(2 * k - 1)).product()
}

/// `∫|dⁿg/dtⁿ|² dt = (2n)! / (2^(2n+1) n! √π σ^(2n+1))`.
pub fn derivative_energy(order: u32, sigma: f64) -> f64 {
    // (2n)! / (2^(2n+1) n!) = (2n-1)!! / 2^(n+1)
    let ratio = double_factorial_odd(order) / 2f64.powi(order as i32 + 1);
    ratio / (PI.sqrt() * sigma.powi(2 * order as i32 + 1))
}

pub fn scaling_factor(order: u32, sigma: f64, energy: f64) -> f64 {
    (energy / derivative_energy(order, sigma)).sqrt()
}

pub fn spec_from_center(order: u32, center_hz: f64, power_w: f64) -> Result<PulseSpec> {
    PulseSpec::from_center(order, center_hz, power_w)
}

/// One pulse per center; overlapping half-power bands are reported, not rejected.
pub fn bank_for_order(order: u32, centers_hz: &[f64], power_w: f64) -> Result<PulseBank> {
    if let Some(w) = centers_hz.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!("centers must be strictly increasing ({} then {})", w[0], w[1])));
    }
    let specs = centers_hz.iter().map(|&fc| PulseSpec::from_center(order, fc, power_w)).collect::<Result<Vec<_>>>()?;
    let bands: Vec<_> = specs.iter().map(PulseSpec::half_power_band).collect();
    let mut overlaps = Vec::new();
    for i in 0..bands.len() {
        for j in i + 1..bands.len() {
            if bands[i].overlaps(&bands[j]) {
                overlaps.push((i, j));
            }
        }
    }
    Ok(PulseBank { specs, bands, overlaps })
}

/// The (order, center) pairs of the half-power band table, centers in GHz.
pub const BAND_TABLE_CENTERS_GHZ: [(u32, f64); 28] = [
    (1, 200.0),
    (2, 150.0),
    (2, 200.0),
    (2, 250.0),
    (3, 148.0),
    (3, 200.0),
    (3, 250.0),
    (4, 139.0),
    (4, 200.0),
    (4, 250.0),
    (5, 134.0),
    (5, 200.0),
    (5, 255.0),
    (6, 131.0),
    (6, 200.0),
    (6, 260.0),
    (7, 128.0),
    (7, 210.0),
    (7, 265.0),
    (8, 125.0),
    (8, 190.0),
    (8, 268.0),
    (9, 123.0),
    (9, 182.5),
    (9, 271.0),
    (10, 123.0),
    (10, 180.0),
    (10, 273.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandTableRow {
    pub order: u32,
    pub center_hz: f64,
    pub band: BandDescriptor,
    pub duration_s: f64,
}

/// Half-power band and duration for every entry of [`BAND_TABLE_CENTERS_GHZ`].
pub fn band_table(power_w: f64) -> Result<Vec<BandTableRow>> {
    BAND_TABLE_CENTERS_GHZ
        .iter()
        .map(|&(order, ghz)| {
            let spec = PulseSpec::from_center(order, ghz * 1e9, power_w)?;
            Ok(BandTableRow { order, center_hz: ghz * 1e9, band: spec.half_power_band(), duration_s: spec.duration() })
        })
        .collect()
}
