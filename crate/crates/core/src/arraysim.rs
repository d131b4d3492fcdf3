//! Uniform linear array and frequency-domain snapshot synthesis.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{AbsorptionTable, ChannelParams, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::noise::{self, NoiseParams};
use crate::pulsebank::PulseSpec;

pub const SNAPSHOT_CSV_HEADER: [&str; 5] = ["bin", "element", "snapshot", "re", "im"];

/// Slack on `B · ΔT` before flooring, so products such as `1e9 · 1e-9` that
/// land a hair under an integer still count it.
const BIN_COUNT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub elements: usize,
    pub spacing: f64,
    pub speed_of_light: f64,
}

impl ArrayConfig {
    pub fn new(elements: usize, spacing: f64) -> Result<Self> {
        let cfg = Self { elements, spacing, speed_of_light: SPEED_OF_LIGHT };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Half-wavelength spacing at `f_max`.
    pub fn half_wavelength(elements: usize, f_max: f64) -> Result<Self> {
        Self::new(elements, SPEED_OF_LIGHT / (2.0 * f_max))
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements < 2 {
            return Err(Error::domain(format!("array needs at least 2 elements, got {}", self.elements)));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::domain(format!("element spacing must be positive, got {}", self.spacing)));
        }
        if !(self.speed_of_light > 0.0) {
            return Err(Error::domain("speed of light must be positive"));
        }
        Ok(())
    }

    /// Arrival delay at each element relative to element 0.
    pub fn delays(&self, theta_deg: f64) -> Result<Vec<f64>> {
        check_angle(theta_deg)?;
        let step = self.spacing * theta_deg.to_radians().sin() / self.speed_of_light;
        Ok((0..self.elements).map(|i| i as f64 * step).collect())
    }

    /// Array manifold vector `exp(-j 2π f τ_i)`.
    pub fn steering(&self, f: f64, theta_deg: f64) -> Result<DVector<Complex64>> {
        check_angle(theta_deg)?;
        Ok(self.steering_unchecked(f, theta_deg))
    }

    pub(crate) fn steering_unchecked(&self, f: f64, theta_deg: f64) -> DVector<Complex64> {
        let step = self.spacing * theta_deg.to_radians().sin() / self.speed_of_light;
        DVector::from_fn(self.elements, |i, _| Complex64::from_polar(1.0, -2.0 * PI * f * (i as f64 * step)))
    }
}

fn check_angle(theta_deg: f64) -> Result<()> {
    if (-90.0..=90.0).contains(&theta_deg) {
        Ok(())
    } else {
        Err(Error::domain(format!("angle {theta_deg} deg outside [-90, 90]")))
    }
}

/// Bin centers `f_min + b/ΔT`, `b = 0..L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyGrid {
    f_min: f64,
    f_max: f64,
    snapshot_time: f64,
    centers: Vec<f64>,
}

impl FrequencyGrid {
    /// `L = ⌊(f_max - f_min) ΔT⌋ + 1` bins spaced `1/ΔT` from `f_min`.
    pub fn build(f_min: f64, f_max: f64, snapshot_time: f64) -> Result<Self> {
        if !(f_min > 0.0 && f_max > f_min && f_max.is_finite()) {
            return Err(Error::domain(format!("need 0 < f_min < f_max, got [{f_min}, {f_max}]")));
        }
        if !(snapshot_time > 0.0 && snapshot_time.is_finite()) {
            return Err(Error::domain(format!("snapshot time must be positive, got {snapshot_time}")));
        }
        let bins = ((f_max - f_min) * snapshot_time + BIN_COUNT_SLACK).floor() as usize + 1;
        let df = 1.0 / snapshot_time;
        let centers = (0..bins).map(|b| (f_min + b as f64 * df).min(f_max)).collect();
        Ok(Self { f_min, f_max, snapshot_time, centers })
    }

    /// Exactly `bins` centers spaced `1/ΔT` from `f_min`; the upper band edge
    /// becomes the last center.
    pub fn with_bins(f_min: f64, snapshot_time: f64, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::domain("bin count must be at least 1"));
        }
        if !(f_min > 0.0 && snapshot_time > 0.0) {
            return Err(Error::domain("f_min and snapshot time must be positive"));
        }
        let df = 1.0 / snapshot_time;
        let centers: Vec<f64> = (0..bins).map(|b| f_min + b as f64 * df).collect();
        let f_max = *centers.last().unwrap();
        Ok(Self { f_min, f_max, snapshot_time, centers })
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn snapshot_time(&self) -> f64 {
        self.snapshot_time
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.snapshot_time
    }

    pub fn bins(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }
}

pub fn grid_build(f_min: f64, f_max: f64, snapshot_time: f64) -> Result<FrequencyGrid> {
    FrequencyGrid::build(f_min, f_max, snapshot_time)
}

/// Parameters that generated a [`SnapshotSet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truth {
    pub theta_deg: f64,
    pub path_length: f64,
    pub pulse: PulseSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    /// One `N × K` matrix per frequency bin.
    pub per_bin: Vec<DMatrix<Complex64>>,
    pub truth: Option<Truth>,
}

impl SnapshotSet {
    pub fn antennas(&self) -> usize {
        self.per_bin.first().map_or(0, |m| m.nrows())
    }

    pub fn snapshots(&self) -> usize {
        self.per_bin.first().map_or(0, |m| m.ncols())
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", SNAPSHOT_CSV_HEADER.join(","))?;
        for (b, m) in self.per_bin.iter().enumerate() {
            for k in 0..m.ncols() {
                for i in 0..m.nrows() {
                    let z = m[(i, k)];
                    writeln!(out, "{b},{i},{k},{:?},{:?}", z.re, z.im)?;
                }
            }
        }
        Ok(())
    }

    /// Reads the flat `bin,element,snapshot,re,im` layout. Every
    /// `(bin, element, snapshot)` cell of the implied box must appear once.
    pub fn read_csv(reader: impl Read, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse { path: origin.to_path_buf(), line, msg };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != SNAPSHOT_CSV_HEADER {
            return Err(parse_err(1, format!("expected header `{}`", SNAPSHOT_CSV_HEADER.join(","))));
        }
        let mut cells = Vec::new();
        let (mut nb, mut ne, mut ns) = (0usize, 0usize, 0usize);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 5 {
                return Err(parse_err(line, format!("expected 5 fields, got {}", rec.len())));
            }
            let idx = |i: usize| rec[i].parse::<usize>().map_err(|e| parse_err(line, format!("`{}`: {e}", &rec[i])));
            let val = |i: usize| rec[i].parse::<f64>().map_err(|e| parse_err(line, format!("`{}`: {e}", &rec[i])));
            let (b, e, s) = (idx(0)?, idx(1)?, idx(2)?);
            nb = nb.max(b + 1);
            ne = ne.max(e + 1);
            ns = ns.max(s + 1);
            cells.push((b, e, s, Complex64::new(val(3)?, val(4)?), line));
        }
        if cells.len() != nb * ne * ns || cells.is_empty() {
            return Err(parse_err(
                0,
                format!("expected {} rows for {nb}x{ne}x{ns}, got {}", nb * ne * ns, cells.len()),
            ));
        }
        let mut per_bin = vec![DMatrix::from_element(ne, ns, Complex64::new(f64::NAN, 0.0)); nb];
        let mut seen = vec![false; nb * ne * ns];
        for (b, e, s, z, line) in cells {
            let slot = (b * ne + e) * ns + s;
            if std::mem::replace(&mut seen[slot], true) {
                return Err(parse_err(line, format!("duplicate cell ({b}, {e}, {s})")));
            }
            per_bin[b][(e, s)] = z;
        }
        Ok(Self { per_bin, truth: None })
    }
}

/// Propagation medium seen by the array.
#[derive(Debug, Clone, Copy)]
pub struct Medium<'a> {
    pub table: &'a AbsorptionTable,
    pub noise: NoiseParams,
}

/// True when the whole pulse fits inside one observation window.
pub fn pulse_fits_window(pulse: &PulseSpec, grid: &FrequencyGrid) -> bool {
    pulse.duration() <= grid.snapshot_time()
}

/// Received Fourier coefficients `Y = H a G 1ᵀ + V` for every bin.
#[allow(clippy::too_many_arguments)]
pub fn synthesize(
    cfg: &ArrayConfig,
    grid: &FrequencyGrid,
    pulse: &PulseSpec,
    medium: Medium<'_>,
    theta_deg: f64,
    path_length: f64,
    snapshots: usize,
    seed: u64,
) -> Result<SnapshotSet> {
    cfg.validate()?;
    check_angle(theta_deg)?;
    if snapshots == 0 {
        return Err(Error::domain("need at least one frequency snapshot"));
    }
    let chan = ChannelParams::with_speed_of_light(path_length, pulse.center_freq(), cfg.speed_of_light)?;
    let variances = noise::bin_variances(&medium.noise, medium.table, pulse, grid, path_length)?
        .coefficient_variances(pulse.duration());
    let noise = noise::sample_noise(&variances, cfg.elements, snapshots, seed)?;
    let per_bin = grid
        .centers()
        .iter()
        .zip(noise)
        .map(|(&fb, v)| {
            let amp = chan.response(medium.table, fb)? * pulse.eval_freq(fb);
            let a = cfg.steering_unchecked(fb, theta_deg);
            Ok(DMatrix::from_fn(cfg.elements, snapshots, |i, k| amp * a[i] + v[(i, k)]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SnapshotSet { per_bin, truth: Some(Truth { theta_deg, path_length, pulse: *pulse }) })
}
