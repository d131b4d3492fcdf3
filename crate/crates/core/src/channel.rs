//! Line-of-sight mmWave channel: spreading loss times molecular absorption.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Header row of absorption CSV files.
pub const ABSORPTION_CSV_HEADER: [&str; 2] = ["frequency_hz", "k_per_meter"];

const BUNDLED_SUMMER_AIR: &str = include_str!("../data/synthetic_summer_air.csv");

/// Sampled medium absorption coefficient `k(f)` in 1/m.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorptionTable {
    name: String,
    freqs: Vec<f64>,
    k: Vec<f64>,
}

impl AbsorptionTable {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::domain("absorption table needs at least 2 points"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::domain(format!(
                    "absorption table frequencies must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(f, k)) = points.iter().find(|p| !(p.1 >= 0.0 && p.1.is_finite())) {
            return Err(Error::domain(format!("negative or non-finite k={k} at {f} Hz")));
        }
        let (freqs, k) = points.into_iter().unzip();
        Ok(Self { name: name.into(), freqs, k })
    }

    /// Constant `k` over `[f_lo, f_hi]`.
    pub fn constant(name: impl Into<String>, f_lo: f64, f_hi: f64, k: f64) -> Result<Self> {
        Self::new(name, vec![(f_lo, k), (f_hi, k)])
    }

    /// Synthetic humid-air table shipped with the crate: a flat floor plus
    /// Lorentzian peaks near 183 GHz and 325 GHz. Shaped like, but not
    /// derived from, line-by-line molecular data.
    pub fn bundled_summer_air() -> Self {
        Self::from_csv_reader("synthetic summer air", BUNDLED_SUMMER_AIR.as_bytes(), Path::new("<bundled>"))
            .expect("bundled absorption table is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freqs.iter().copied().zip(self.k.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.freqs[0], *self.freqs.last().unwrap())
    }

    pub fn contains(&self, f: f64) -> bool {
        let (lo, hi) = self.span();
        f >= lo && f <= hi
    }

    /// Linear interpolation of `k` at `f`.
    pub fn k_at(&self, f: f64) -> Result<f64> {
        let (lo, hi) = self.span();
        if !(f >= lo && f <= hi) {
            return Err(Error::OutOfRange { freq_hz: f, lo_hz: lo, hi_hz: hi });
        }
        let i = self.freqs.partition_point(|&x| x <= f);
        if i == self.freqs.len() {
            return Ok(*self.k.last().unwrap());
        }
        let (f0, f1) = (self.freqs[i - 1], self.freqs[i]);
        let (k0, k1) = (self.k[i - 1], self.k[i]);
        let w = (f - f0) / (f1 - f0);
        Ok(k0 + w * (k1 - k0))
    }

    /// Weighted sum `Σ x_q K_q(f)` on the union of the input grids,
    /// restricted to the span every table covers.
    pub fn combine_species(tables: &[AbsorptionTable], fractions: &[f64]) -> Result<Self> {
        if tables.len() != fractions.len() {
            return Err(Error::domain(format!("{} tables but {} mole fractions", tables.len(), fractions.len())));
        }
        if tables.is_empty() {
            return Err(Error::domain("no species to combine"));
        }
        if let Some(x) = fractions.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::domain(format!("mole fraction {x} outside [0, 1]")));
        }
        let lo = tables.iter().map(|t| t.span().0).fold(f64::NEG_INFINITY, f64::max);
        let hi = tables.iter().map(|t| t.span().1).fold(f64::INFINITY, f64::min);
        let mut grid: Vec<f64> =
            tables.iter().flat_map(|t| t.freqs.iter().copied()).filter(|f| *f >= lo && *f <= hi).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let points = grid
            .into_iter()
            .map(|f| {
                let mut k = 0.0;
                for (t, x) in tables.iter().zip(fractions) {
                    k += x * t.k_at(f)?;
                }
                Ok((f, k))
            })
            .collect::<Result<Vec<_>>>()?;
        let name = tables.iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join("+");
        Self::new(name, points)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let name =
            path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "absorption".to_owned());
        Self::from_csv_reader(name, file, path)
    }

    /// Parses `frequency_hz,k_per_meter` rows; `#` lines are comments.
    pub fn from_csv_reader(name: impl Into<String>, reader: impl Read, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let parse_err = |line: usize, msg: String| Error::Parse { path: origin.to_path_buf(), line, msg };
        let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ABSORPTION_CSV_HEADER {
            return Err(parse_err(1, format!("expected header `{}`", ABSORPTION_CSV_HEADER.join(","))));
        }
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 2 {
                return Err(parse_err(line, format!("expected 2 fields, got {}", rec.len())));
            }
            let field = |i: usize| rec[i].parse::<f64>().map_err(|e| parse_err(line, format!("`{}`: {e}", &rec[i])));
            points.push((field(0)?, field(1)?));
        }
        Self::new(name, points).map_err(|e| parse_err(0, e.to_string()))
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", ABSORPTION_CSV_HEADER.join(","))?;
        for (f, k) in self.points() {
            writeln!(out, "{f:?},{k:?}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    pub path_length: f64,
    pub speed_of_light: f64,
    /// Design center frequency of the pulse; sets the spreading amplitude.
    pub carrier_for_aperture: f64,
}

impl ChannelParams {
    pub fn new(path_length: f64, carrier_for_aperture: f64) -> Result<Self> {
        Self::with_speed_of_light(path_length, carrier_for_aperture, SPEED_OF_LIGHT)
    }

    pub fn with_speed_of_light(path_length: f64, carrier_for_aperture: f64, speed_of_light: f64) -> Result<Self> {
        if !(path_length > 0.0 && path_length.is_finite()) {
            return Err(Error::domain(format!("path length must be positive, got {path_length}")));
        }
        if !(speed_of_light > 0.0) {
            return Err(Error::domain("speed of light must be positive"));
        }
        if !(carrier_for_aperture > 0.0) {
            return Err(Error::domain("carrier frequency must be positive"));
        }
        Ok(Self { path_length, speed_of_light, carrier_for_aperture })
    }

    /// Free-space spreading: amplitude from the design center, phase from `f`.
    pub fn spreading(&self, f: f64) -> Complex64 {
        let amp = self.spreading_amplitude();
        let phase = -2.0 * PI * f * self.path_length / self.speed_of_light;
        Complex64::from_polar(amp, phase)
    }

    pub fn spreading_amplitude(&self) -> f64 {
        self.speed_of_light / (4.0 * PI * self.path_length * self.carrier_for_aperture)
    }

    /// `H(f) = H_spread(f) · exp(-k(f) d / 2)`.
    pub fn response(&self, table: &AbsorptionTable, f: f64) -> Result<Complex64> {
        Ok(self.spreading(f) * absorption_loss(table, f, self.path_length)?)
    }
}

pub fn absorption_loss(table: &AbsorptionTable, f: f64, path_length: f64) -> Result<f64> {
    if !(path_length > 0.0) {
        return Err(Error::domain(format!("path length must be positive, got {path_length}")));
    }
    Ok((-0.5 * table.k_at(f)? * path_length).exp())
}

pub fn spreading(params: &ChannelParams, f: f64) -> Complex64 {
    params.spreading(f)
}

pub fn response(params: &ChannelParams, table: &AbsorptionTable, f: f64) -> Result<Complex64> {
    params.response(table, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp() -> AbsorptionTable {
        AbsorptionTable::new("ramp", vec![(100e9, 0.0), (300e9, 2e-4)]).unwrap()
    }

    #[test]
    fn interpolation() {
        let t = AbsorptionTable::constant("c", 100e9, 300e9, 1e-4).unwrap();
        assert_eq!(t.k_at(200e9).unwrap(), 1e-4);
        assert!((ramp().k_at(200e9).unwrap() - 1e-4).abs() < 1e-18);
        assert_eq!(ramp().k_at(300e9).unwrap(), 2e-4);
        assert_eq!(ramp().k_at(100e9).unwrap(), 0.0);
    }

    #[test]
    fn out_of_span() {
        let t = AbsorptionTable::constant("c", 100e9, 325e9, 1e-4).unwrap();
        assert!(matches!(t.k_at(99e9), Err(Error::OutOfRange { .. })));
        assert!(t.k_at(326e9).is_err());
        assert!(absorption_loss(&t, 99e9, 1.0).is_err());
    }

    #[test]
    fn table_validation() {
        assert!(AbsorptionTable::new("x", vec![(1.0, 0.0)]).is_err());
        assert!(AbsorptionTable::new("x", vec![(2.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(AbsorptionTable::new("x", vec![(1.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(AbsorptionTable::new("x", vec![(1.0, -1e-5), (2.0, 0.0)]).is_err());
    }

    #[test]
    fn combine_identity_and_mix() {
        let a = AbsorptionTable::constant("a", 100e9, 300e9, 1e-4).unwrap();
        let b = AbsorptionTable::constant("b", 100e9, 300e9, 3e-4).unwrap();
        let one = AbsorptionTable::combine_species(std::slice::from_ref(&a), &[1.0]).unwrap();
        assert_eq!(one.points().collect::<Vec<_>>(), a.points().collect::<Vec<_>>());
        let half = AbsorptionTable::combine_species(&[a.clone(), a.clone()], &[0.5, 0.5]).unwrap();
        assert_eq!(half.points().collect::<Vec<_>>(), a.points().collect::<Vec<_>>());
        let mix = AbsorptionTable::combine_species(&[a, b], &[0.25, 0.75]).unwrap();
        for (_, k) in mix.points() {
            assert!((k - 2.5e-4).abs() < 1e-18);
        }
    }

    #[test]
    fn combine_rejects_bad_fractions() {
        let a = ramp();
        assert!(AbsorptionTable::combine_species(std::slice::from_ref(&a), &[0.5, 0.5]).is_err());
        assert!(AbsorptionTable::combine_species(std::slice::from_ref(&a), &[1.5]).is_err());
        assert!(AbsorptionTable::combine_species(&[a], &[-0.1]).is_err());
    }

    #[test]
    fn spreading_values() {
        let p = ChannelParams::new(1.0, 200e9).unwrap();
        assert!((p.spreading(150e9).norm() - 1.1937e-4).abs() < 1e-8);
        assert!((p.spreading(150e9).norm() - p.spreading(300e9).norm()).abs() < 1e-20);
        // f d / c integer: f = 3e8 Hz at d = 1 m
        let z = p.spreading(3e8 * 700.0);
        assert!(z.arg().abs() < 1e-9);
        let p2 = ChannelParams::new(2.0, 200e9).unwrap();
        assert!((p2.spreading_amplitude() * 2.0 - p.spreading_amplitude()).abs() < 1e-20);
    }

    #[test]
    fn absorption_values() {
        let zero = AbsorptionTable::constant("z", 1e9, 1e12, 0.0).unwrap();
        assert_eq!(absorption_loss(&zero, 2e11, 30.0).unwrap(), 1.0);
        let t = AbsorptionTable::constant("c", 1e9, 1e12, 1e-3).unwrap();
        assert!((absorption_loss(&t, 2e11, 2000.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!((absorption_loss(&t, 2e11, 2000.0).unwrap() - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn response_values() {
        let zero = AbsorptionTable::constant("z", 1e9, 1e12, 0.0).unwrap();
        let p = ChannelParams::new(10.0, 131e9).unwrap();
        assert_eq!(p.response(&zero, 2e11).unwrap().norm(), p.spreading(2e11).norm());
        let t = AbsorptionTable::constant("c", 1e9, 1e12, 1e-4).unwrap();
        let h = p.response(&t, 2e11).unwrap().norm();
        assert!((h - 1.8216e-5).abs() / 1.8216e-5 < 1e-4);
        assert!((h - p.response(&t, 1.2e11).unwrap().norm()).abs() < 1e-15 * h);
    }

    #[test]
    fn bundled_table_shape() {
        let t = AbsorptionTable::bundled_summer_air();
        let (lo, hi) = t.span();
        assert!(lo <= 100e9 && hi >= 325e9);
        assert!(t.points().all(|(_, k)| k > 0.0));
        let floor = t.k_at(250e9).unwrap();
        assert!(floor <= 1e-2);
        assert!(t.k_at(183.5e9).unwrap() > 10.0 * floor);
        assert!(t.k_at(325e9).unwrap() > t.k_at(183.5e9).unwrap());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let t = ramp();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = AbsorptionTable::from_csv_reader("ramp", buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, t);

        let bad = "frequency_hz,k\n1,2\n";
        assert!(AbsorptionTable::from_csv_reader("x", bad.as_bytes(), Path::new("mem")).is_err());
        let bad = "frequency_hz,k_per_meter\n# comment\n1,0\n2,abc\n";
        match AbsorptionTable::from_csv_reader("x", bad.as_bytes(), Path::new("mem")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn response_bounded_by_spreading(f in 100e9..325e9f64, d in 0.1..100.0f64) {
            let t = AbsorptionTable::bundled_summer_air();
            let p = ChannelParams::new(d, 150e9).unwrap();
            let h = p.response(&t, f).unwrap();
            prop_assert!(h.norm() > 0.0);
            prop_assert!(h.norm() <= p.spreading(f).norm());
            let expected = (-2.0 * PI * f * d / SPEED_OF_LIGHT).rem_euclid(2.0 * PI);
            let got = h.arg().rem_euclid(2.0 * PI);
            let diff = (got - expected).abs();
            prop_assert!(diff.min(2.0 * PI - diff) < 1e-6);
        }

        #[test]
        fn combine_commutes_and_is_linear(x in 0.0..1.0f64, y in 0.0..1.0f64) {
            let a = ramp();
            let b = AbsorptionTable::new("b", vec![(100e9, 5e-4), (200e9, 1e-4), (300e9, 2e-3)]).unwrap();
            let ab = AbsorptionTable::combine_species(&[a.clone(), b.clone()], &[x, y]).unwrap();
            let ba = AbsorptionTable::combine_species(&[b.clone(), a.clone()], &[y, x]).unwrap();
            for ((f1, k1), (f2, k2)) in ab.points().zip(ba.points()) {
                prop_assert_eq!(f1, f2);
                prop_assert!((k1 - k2).abs() <= 1e-18);
                let lin = x * a.k_at(f1).unwrap() + y * b.k_at(f1).unwrap();
                prop_assert!((k1 - lin).abs() <= 1e-18);
            }
        }
    }
}
