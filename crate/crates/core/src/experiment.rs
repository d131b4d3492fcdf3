//! Monte Carlo harness: per-cell RMSE, true positive rate and confusion
//! counts over path length × order × center × snapshot time.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arraysim::{self, ArrayConfig, FrequencyGrid, Medium};
use crate::channel::{AbsorptionTable, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::estimator::{self, EstimationOutcome};
use crate::noise::{NoiseParams, BOLTZMANN, ROOM_TEMPERATURE};
use crate::pulsebank::{bank_for_order, PulseSpec};

pub const RESULTS_CSV_HEADER: &str = "order,center_hz,d_r_m,delta_t_s,n_run,rmse_theta_deg,rmse_fc_hz,tpr";
pub const CONFUSION_CSV_HEADER: &str = "order,center_true_hz,center_est_hz,count,d_r_m,delta_t_s";

pub const DEFAULT_THETA_DEG: f64 = 12.5175;
pub const DEFAULT_POWER_W: f64 = 1e-7;
pub const DEFAULT_RUNS: usize = 100;
pub const DEFAULT_PATH_LENGTHS_M: [f64; 7] = [1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];

/// Non-overlapping center sets for orders 6 to 10, in Hz.
pub fn standard_centers() -> BTreeMap<u32, Vec<f64>> {
    BTreeMap::from([
        (6, vec![131e9, 260e9]),
        (7, vec![128e9, 265e9]),
        (8, vec![125e9, 268e9]),
        (9, vec![123e9, 182.5e9, 271e9]),
        (10, vec![123e9, 180e9, 273e9]),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub elements: usize,
    pub spacing_m: f64,
    #[serde(default = "default_speed_of_light")]
    pub speed_of_light_m_s: f64,
}

impl ArraySection {
    pub fn to_config(&self) -> Result<ArrayConfig> {
        let cfg =
            ArrayConfig { elements: self.elements, spacing: self.spacing_m, speed_of_light: self.speed_of_light_m_s };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_speed_of_light() -> f64 {
    SPEED_OF_LIGHT
}

fn default_snapshots() -> usize {
    1
}

fn default_room_temp() -> f64 {
    ROOM_TEMPERATURE
}

/// Experiment description, read from TOML. All quantities are SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub runs: usize,
    pub base_seed: u64,
    pub power_w: f64,
    pub theta_deg: f64,
    pub path_lengths_m: Vec<f64>,
    pub snapshot_times_s: Vec<f64>,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins_override: Option<usize>,
    /// Absorption CSV; the bundled synthetic table when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absorption: Option<PathBuf>,
    #[serde(default = "default_room_temp")]
    pub room_temp_k: f64,
    pub array: ArraySection,
    /// Order (as a string key) to center frequencies.
    pub centers_hz: BTreeMap<String, Vec<f64>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            runs: DEFAULT_RUNS,
            base_seed: 0,
            power_w: DEFAULT_POWER_W,
            theta_deg: DEFAULT_THETA_DEG,
            path_lengths_m: DEFAULT_PATH_LENGTHS_M.to_vec(),
            snapshot_times_s: vec![42e-12, 180e-12],
            f_min_hz: 100e9,
            f_max_hz: 325e9,
            snapshots: 1,
            bins_override: None,
            absorption: None,
            room_temp_k: ROOM_TEMPERATURE,
            array: ArraySection { elements: 8, spacing_m: 0.4615e-3, speed_of_light_m_s: SPEED_OF_LIGHT },
            centers_hz: standard_centers().into_iter().map(|(n, c)| (n.to_string(), c)).collect(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0);
            Error::Parse { path: origin.to_path_buf(), line, msg: e.message().to_string() }
        })
    }

    /// Reads a config; a relative `absorption` path is taken relative to the
    /// config file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text, path)?;
        if let Some(abs) = &cfg.absorption {
            if abs.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.absorption = Some(dir.join(abs));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Orders in ascending numeric order with their sorted centers.
    pub fn orders(&self) -> Result<Vec<(u32, Vec<f64>)>> {
        let mut out = self
            .centers_hz
            .iter()
            .map(|(k, v)| {
                let n = k
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Config(format!("centers_hz key {k:?} is not an order")))?;
                Ok((n, v.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        out.sort_by_key(|(n, _)| *n);
        if out.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Config("an order appears twice in centers_hz".into()));
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.runs < 1 {
            return bad("runs must be at least 1".into());
        }
        if self.snapshots < 1 {
            return bad("snapshots must be at least 1".into());
        }
        if !(self.power_w > 0.0 && self.power_w.is_finite()) {
            return bad(format!("power_w must be positive, got {}", self.power_w));
        }
        if !(-90.0..=90.0).contains(&self.theta_deg) {
            return bad(format!("theta_deg must lie in [-90, 90], got {}", self.theta_deg));
        }
        if !(self.f_min_hz > 0.0 && self.f_min_hz < self.f_max_hz && self.f_max_hz.is_finite()) {
            return bad(format!("need 0 < f_min_hz < f_max_hz, got {} and {}", self.f_min_hz, self.f_max_hz));
        }
        if let Some(d) = self.path_lengths_m.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return bad(format!("path length {d} must be positive"));
        }
        if let Some(t) = self.snapshot_times_s.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return bad(format!("snapshot time {t} must be positive"));
        }
        if self.bins_override == Some(0) {
            return bad("bins_override must be at least 1".into());
        }
        if !(self.room_temp_k > 0.0) {
            return bad(format!("room_temp_k must be positive, got {}", self.room_temp_k));
        }
        self.array.to_config().map_err(|e| Error::Config(format!("array: {e}")))?;
        for (n, centers) in self.orders()? {
            bank_for_order(n, centers.as_slice(), self.power_w)
                .map_err(|e| Error::Config(format!("order {n}: {e}")))?;
        }
        Ok(())
    }

    pub fn grid(&self, snapshot_time: f64) -> Result<FrequencyGrid> {
        match self.bins_override {
            Some(l) => FrequencyGrid::with_bins(self.f_min_hz, snapshot_time, l),
            None => FrequencyGrid::build(self.f_min_hz, self.f_max_hz, snapshot_time),
        }
    }

    pub fn noise_params(&self) -> NoiseParams {
        NoiseParams { boltzmann: BOLTZMANN, room_temp: self.room_temp_k, speed_of_light: self.array.speed_of_light_m_s }
    }

    pub fn load_absorption(&self) -> Result<AbsorptionTable> {
        match &self.absorption {
            Some(p) => AbsorptionTable::from_csv_path(p),
            None => Ok(AbsorptionTable::bundled_summer_air()),
        }
    }

    /// Cells whose pulse is longer than the observation window.
    pub fn window_warnings(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for (n, centers) in self.orders()? {
            for fc in centers {
                let pulse = PulseSpec::from_center(n, fc, self.power_w)?;
                for &dt in &self.snapshot_times_s {
                    if pulse.duration() > dt {
                        out.push(format!(
                            "order {n} at {fc:?} Hz lasts {:?} s, longer than the {dt:?} s window",
                            pulse.duration()
                        ));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// One (order, center, path length, snapshot time) combination, resolved.
#[derive(Debug, Clone)]
pub struct Cell<'a> {
    pub pulse: PulseSpec,
    /// Configured center; the pulse's own `center_freq` may differ in the
    /// last bit after the round trip through `σ`.
    pub center_hz: f64,
    pub centers: Vec<f64>,
    pub path_length: f64,
    pub grid: FrequencyGrid,
    pub array: ArrayConfig,
    pub theta_deg: f64,
    pub snapshots: usize,
    pub medium: Medium<'a>,
}

impl Cell<'_> {
    pub fn order(&self) -> u32 {
        self.pulse.order()
    }

    pub fn center(&self) -> f64 {
        self.center_hz
    }
}

/// Synthesize and estimate once.
pub fn run_single(cell: &Cell<'_>, seed: u64) -> Result<EstimationOutcome> {
    let set = arraysim::synthesize(
        &cell.array,
        &cell.grid,
        &cell.pulse,
        cell.medium,
        cell.theta_deg,
        cell.path_length,
        cell.snapshots,
        seed,
    )?;
    estimator::estimate(&set, &cell.grid, &cell.array, &cell.centers)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub theta_hat: f64,
    pub centroid: f64,
    pub classified: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub order: u32,
    pub center_hz: f64,
    pub path_length_m: f64,
    pub snapshot_time_s: f64,
    pub runs: usize,
    pub rmse_theta_deg: f64,
    /// RMSE of the classified center against the true one.
    pub rmse_fc_hz: f64,
    /// RMSE of the raw centroid, kept for diagnostics.
    pub rmse_centroid_hz: f64,
    pub tpr: f64,
    /// `(estimated center, count)` for every candidate center, ascending.
    pub estimated_counts: Vec<(f64, usize)>,
    pub records: Vec<RunRecord>,
}

pub fn rmse(errors: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for e in errors {
        sum += e * e;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Runs seeds `base_seed .. base_seed + runs` in parallel and reduces in
/// seed order.
pub fn monte_carlo(cell: &Cell<'_>, runs: usize, base_seed: u64) -> Result<MetricsReport> {
    if runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    let records = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            let out = run_single(cell, seed)?;
            Ok(RunRecord { seed, theta_hat: out.theta_hat, centroid: out.centroid, classified: out.classified })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(cell, records))
}

fn summarize(cell: &Cell<'_>, records: Vec<RunRecord>) -> MetricsReport {
    let truth = cell.center();
    let mut centers = cell.centers.clone();
    centers.sort_by(f64::total_cmp);
    let estimated_counts: Vec<_> =
        centers.iter().map(|&c| (c, records.iter().filter(|r| r.classified == c).count())).collect();
    let correct = records.iter().filter(|r| r.classified == truth).count();
    MetricsReport {
        order: cell.order(),
        center_hz: truth,
        path_length_m: cell.path_length,
        snapshot_time_s: cell.grid.snapshot_time(),
        runs: records.len(),
        rmse_theta_deg: rmse(records.iter().map(|r| r.theta_hat - cell.theta_deg)),
        rmse_fc_hz: rmse(records.iter().map(|r| r.classified - truth)),
        rmse_centroid_hz: rmse(records.iter().map(|r| r.centroid - truth)),
        tpr: correct as f64 / records.len() as f64,
        estimated_counts,
        records,
    }
}

/// Counts for one order at one path length and snapshot time;
/// `counts[est][true]` so that each column sums to the run count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub order: u32,
    pub centers: Vec<f64>,
    pub path_length_m: f64,
    pub snapshot_time_s: f64,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn tpr(&self) -> f64 {
        let total: usize = self.counts.iter().flatten().sum();
        let diag: usize = (0..self.centers.len()).map(|i| self.counts[i][i]).sum();
        if total == 0 {
            0.0
        } else {
            diag as f64 / total as f64
        }
    }

    /// Per true center.
    pub fn column_tpr(&self, true_idx: usize) -> f64 {
        let col: usize = self.counts.iter().map(|row| row[true_idx]).sum();
        if col == 0 {
            0.0
        } else {
            self.counts[true_idx][true_idx] as f64 / col as f64
        }
    }

    /// Sum of counts where the estimate is below the true center.
    pub fn below_diagonal_misses(&self) -> usize {
        let n = self.centers.len();
        (0..n).flat_map(|t| (0..t).map(move |e| (e, t))).map(|(e, t)| self.counts[e][t]).sum()
    }
}

fn confusion_from(reports: &[&MetricsReport]) -> ConfusionMatrix {
    let first = reports[0];
    let centers: Vec<f64> = first.estimated_counts.iter().map(|&(c, _)| c).collect();
    let n = centers.len();
    let mut counts = vec![vec![0usize; n]; n];
    for r in reports {
        if let Some(t) = centers.iter().position(|&c| c == r.center_hz) {
            for (e, &(_, k)) in r.estimated_counts.iter().enumerate() {
                counts[e][t] += k;
            }
        }
    }
    ConfusionMatrix {
        order: first.order,
        centers,
        path_length_m: first.path_length_m,
        snapshot_time_s: first.snapshot_time_s,
        counts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub reports: Vec<MetricsReport>,
    pub confusion: Vec<ConfusionMatrix>,
}

/// Every cell of the configuration in the order snapshot time, order,
/// path length, center.
pub fn sweep(cfg: &ExperimentConfig, table: &AbsorptionTable) -> Result<SweepResult> {
    cfg.validate()?;
    let array = cfg.array.to_config()?;
    let medium = Medium { table, noise: cfg.noise_params() };
    let orders = cfg.orders()?;
    let mut reports = Vec::new();
    let mut confusion = Vec::new();
    for &dt in &cfg.snapshot_times_s {
        let grid = cfg.grid(dt)?;
        for (n, centers) in &orders {
            let bank = bank_for_order(*n, centers, cfg.power_w)?;
            for &d in &cfg.path_lengths_m {
                let mut group = Vec::with_capacity(bank.specs.len());
                for (pulse, &center_hz) in bank.specs.iter().zip(centers) {
                    let cell = Cell {
                        pulse: *pulse,
                        center_hz,
                        centers: centers.clone(),
                        path_length: d,
                        grid: grid.clone(),
                        array,
                        theta_deg: cfg.theta_deg,
                        snapshots: cfg.snapshots,
                        medium,
                    };
                    group.push(monte_carlo(&cell, cfg.runs, cfg.base_seed)?);
                }
                confusion.push(confusion_from(&group.iter().collect::<Vec<_>>()));
                reports.extend(group);
            }
        }
    }
    Ok(SweepResult { reports, confusion })
}

pub fn write_results_csv(reports: &[MetricsReport], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{RESULTS_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{},{:?},{:?},{:?}",
            r.order, r.center_hz, r.path_length_m, r.snapshot_time_s, r.runs, r.rmse_theta_deg, r.rmse_fc_hz, r.tpr
        )?;
    }
    Ok(())
}

pub fn write_confusion_csv(matrices: &[ConfusionMatrix], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{CONFUSION_CSV_HEADER}")?;
    for m in matrices {
        for (t, &ct) in m.centers.iter().enumerate() {
            for (e, &ce) in m.centers.iter().enumerate() {
                writeln!(
                    out,
                    "{},{:?},{:?},{},{:?},{:?}",
                    m.order, ct, ce, m.counts[e][t], m.path_length_m, m.snapshot_time_s
                )?;
            }
        }
    }
    Ok(())
}
