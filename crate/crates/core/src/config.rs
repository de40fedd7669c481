//! Run configuration: defaults, flat key-value config files, and
//! deterministic per-stage seed derivation.
//!
//! Precedence is defaults < config file < command-line flags; the merged
//! result is validated once and dumped next to the run artifacts so every
//! experiment records exactly what produced it. Keys use dotted section
//! prefixes (`beam.n_elements = 8`), one per line, `#` starts a comment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::beam::BeamModel;
use crate::error::{Error, Result};
use crate::frf::EstimatorKind;
use crate::stabilization::StabilityCriteria;

/// Everything a subcommand might need, fully resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Top-level seed; all stage randomness derives from it.
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Analysis band in Hz (low, high).
    pub band_hz: (f64, f64),
    /// Order sweep (min, max, step).
    pub orders: (usize, usize, usize),
    pub estimator: EstimatorKind,
    /// Noise level in percent for single-run corruption (0 = clean).
    pub noise_pct: f64,
    pub beam: BeamModel,
    pub fs_hz: f64,
    pub n_samples: usize,
    /// Transient window for the direct estimator; `None` analyzes the full
    /// record.
    pub analysis_len: Option<usize>,
    /// Node where the step forces act (both bending planes).
    pub input_node: usize,
    pub amplitude: f64,
    pub h1_seg_len: usize,
    pub h1_overlap: usize,
    pub criteria: StabilityCriteria,
    /// Noise-sweep levels in percent.
    pub noise_levels_pct: Vec<f64>,
    /// Noise-sweep repetitions per level.
    pub noise_seeds: usize,
    /// Record length for the noise sweep (longer records suppress in-window
    /// noise for a fixed relative level).
    pub noise_n_samples: usize,
    pub noise_analysis_len: usize,
    /// Order for single-order identification.
    pub identify_order: usize,
    pub bench_repeats: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            out_dir: PathBuf::from("out"),
            band_hz: (1.0, 399.0),
            orders: (32, 60, 2),
            estimator: EstimatorKind::DirectRatio,
            noise_pct: 0.0,
            beam: BeamModel::default(),
            fs_hz: 800.0,
            n_samples: 1 << 16,
            analysis_len: Some(1 << 11),
            input_node: 1,
            amplitude: 1.0,
            h1_seg_len: crate::signal::H1_DEFAULT_SEG_LEN,
            h1_overlap: crate::signal::H1_DEFAULT_OVERLAP,
            criteria: StabilityCriteria::default(),
            noise_levels_pct: vec![0.1, 0.5, 1.0, 1.5, 2.0],
            noise_seeds: 10,
            noise_n_samples: 1 << 18,
            noise_analysis_len: 1 << 10,
            identify_order: 32,
            bench_repeats: 10,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("key {key}: cannot parse {value:?}")))
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "band.low" => self.band_hz.0 = parse_num(key, value)?,
            "band.high" => self.band_hz.1 = parse_num(key, value)?,
            "orders.min" => self.orders.0 = parse_num(key, value)?,
            "orders.max" => self.orders.1 = parse_num(key, value)?,
            "orders.step" => self.orders.2 = parse_num(key, value)?,
            "estimator.kind" => {
                self.estimator = match value {
                    "direct" | "direct_ratio" => EstimatorKind::DirectRatio,
                    "h1" => EstimatorKind::H1,
                    other => {
                        return Err(Error::Config(format!(
                            "key {key}: unknown estimator {other:?} (direct|h1)"
                        )))
                    }
                }
            }
            "estimator.analysis_len" => {
                self.analysis_len = if value == "full" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "h1.seg_len" => self.h1_seg_len = parse_num(key, value)?,
            "h1.overlap" => self.h1_overlap = parse_num(key, value)?,
            "beam.length_m" => self.beam.length_m = parse_num(key, value)?,
            "beam.n_elements" => self.beam.n_elements = parse_num(key, value)?,
            "beam.youngs_modulus_pa" => self.beam.youngs_modulus_pa = parse_num(key, value)?,
            "beam.density_kg_m3" => self.beam.density_kg_m3 = parse_num(key, value)?,
            "beam.area_m2" => self.beam.area_m2 = parse_num(key, value)?,
            "beam.i_y_m4" => self.beam.i_y_m4 = parse_num(key, value)?,
            "beam.i_z_m4" => self.beam.i_z_m4 = parse_num(key, value)?,
            "beam.modal_damping" => self.beam.modal_damping = parse_num(key, value)?,
            "sim.fs_hz" => self.fs_hz = parse_num(key, value)?,
            "sim.n_samples" => self.n_samples = parse_num(key, value)?,
            "sim.input_node" => self.input_node = parse_num(key, value)?,
            "sim.amplitude" => self.amplitude = parse_num(key, value)?,
            "stab.freq_tol_pct" => self.criteria.freq_tol_pct = parse_num(key, value)?,
            "stab.damp_tol_pct" => self.criteria.damp_tol_pct = parse_num(key, value)?,
            "stab.mac_min" => self.criteria.mac_min = parse_num(key, value)?,
            "stab.min_consecutive" => self.criteria.min_consecutive = parse_num(key, value)?,
            "noise.level_pct" => self.noise_pct = parse_num(key, value)?,
            "noise.levels_pct" => {
                self.noise_levels_pct = value
                    .split(',')
                    .map(|v| parse_num(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "noise.seeds" => self.noise_seeds = parse_num(key, value)?,
            "noise.n_samples" => self.noise_n_samples = parse_num(key, value)?,
            "noise.analysis_len" => self.noise_analysis_len = parse_num(key, value)?,
            "identify.order" => self.identify_order = parse_num(key, value)?,
            "bench.repeats" => self.bench_repeats = parse_num(key, value)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines from a file; `#` comments and blank lines
    /// are skipped. Errors carry the offending line number.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        for (idx, raw) in body.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected key = value, got {raw:?}",
                    path.display(),
                    idx + 1
                ))
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| {
                Error::Config(format!("{}:{}: {e}", path.display(), idx + 1))
            })?;
        }
        Ok(())
    }

    /// The fully resolved configuration as config-file text (sorted keys),
    /// suitable for logging and for re-running the experiment.
    pub fn effective_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "band.high = {}", self.band_hz.1);
        let _ = writeln!(s, "band.low = {}", self.band_hz.0);
        let _ = writeln!(s, "beam.area_m2 = {}", self.beam.area_m2);
        let _ = writeln!(s, "beam.density_kg_m3 = {}", self.beam.density_kg_m3);
        let _ = writeln!(s, "beam.i_y_m4 = {}", self.beam.i_y_m4);
        let _ = writeln!(s, "beam.i_z_m4 = {}", self.beam.i_z_m4);
        let _ = writeln!(s, "beam.length_m = {}", self.beam.length_m);
        let _ = writeln!(s, "beam.modal_damping = {}", self.beam.modal_damping);
        let _ = writeln!(s, "beam.n_elements = {}", self.beam.n_elements);
        let _ = writeln!(s, "beam.youngs_modulus_pa = {}", self.beam.youngs_modulus_pa);
        let _ = writeln!(s, "bench.repeats = {}", self.bench_repeats);
        let _ = writeln!(
            s,
            "estimator.analysis_len = {}",
            self.analysis_len
                .map_or("full".to_string(), |v| v.to_string())
        );
        let _ = writeln!(s, "estimator.kind = {}", self.estimator);
        let _ = writeln!(s, "h1.overlap = {}", self.h1_overlap);
        let _ = writeln!(s, "h1.seg_len = {}", self.h1_seg_len);
        let _ = writeln!(s, "identify.order = {}", self.identify_order);
        let _ = writeln!(
            s,
            "noise.analysis_len = {}",
            self.noise_analysis_len
        );
        let _ = writeln!(s, "noise.level_pct = {}", self.noise_pct);
        let _ = writeln!(
            s,
            "noise.levels_pct = {}",
            self.noise_levels_pct
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        let _ = writeln!(s, "noise.n_samples = {}", self.noise_n_samples);
        let _ = writeln!(s, "noise.seeds = {}", self.noise_seeds);
        let _ = writeln!(s, "orders.max = {}", self.orders.1);
        let _ = writeln!(s, "orders.min = {}", self.orders.0);
        let _ = writeln!(s, "orders.step = {}", self.orders.2);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "sim.amplitude = {}", self.amplitude);
        let _ = writeln!(s, "sim.fs_hz = {}", self.fs_hz);
        let _ = writeln!(s, "sim.input_node = {}", self.input_node);
        let _ = writeln!(s, "sim.n_samples = {}", self.n_samples);
        let _ = writeln!(s, "stab.damp_tol_pct = {}", self.criteria.damp_tol_pct);
        let _ = writeln!(s, "stab.freq_tol_pct = {}", self.criteria.freq_tol_pct);
        let _ = writeln!(s, "stab.mac_min = {}", self.criteria.mac_min);
        let _ = writeln!(
            s,
            "stab.min_consecutive = {}",
            self.criteria.min_consecutive
        );
        s
    }

    /// Front-loads every check the stages would otherwise fail late on.
    pub fn validate(&self) -> Result<()> {
        self.beam.validate()?;
        self.criteria.validate()?;
        if !(self.band_hz.0 > 0.0 && self.band_hz.1 > self.band_hz.0) {
            return Err(Error::Config(format!(
                "band [{}, {}] Hz must be increasing and positive",
                self.band_hz.0, self.band_hz.1
            )));
        }
        if self.fs_hz <= 0.0 {
            return Err(Error::Config(format!(
                "sample rate {} must be positive",
                self.fs_hz
            )));
        }
        if self.band_hz.1 >= self.fs_hz / 2.0 {
            return Err(Error::Config(format!(
                "band top {} Hz must stay below Nyquist {} Hz",
                self.band_hz.1,
                self.fs_hz / 2.0
            )));
        }
        for (label, n) in [
            ("sim.n_samples", self.n_samples),
            ("noise.n_samples", self.noise_n_samples),
        ] {
            if !n.is_power_of_two() {
                return Err(Error::Config(format!("{label} = {n} must be a power of two")));
            }
        }
        if let Some(win) = self.analysis_len {
            if win > self.n_samples {
                return Err(Error::Config(format!(
                    "analysis window {win} exceeds record length {}",
                    self.n_samples
                )));
            }
        }
        if self.noise_analysis_len > self.noise_n_samples {
            return Err(Error::Config(format!(
                "noise analysis window {} exceeds record length {}",
                self.noise_analysis_len, self.noise_n_samples
            )));
        }
        if self.h1_overlap >= self.h1_seg_len {
            return Err(Error::Config(format!(
                "h1 overlap {} must be smaller than segment length {}",
                self.h1_overlap, self.h1_seg_len
            )));
        }
        if self.input_node == 0 || self.input_node > self.beam.n_elements {
            return Err(Error::Config(format!(
                "input node {} outside 1..={} (clamped node 0 cannot be driven)",
                self.input_node, self.beam.n_elements
            )));
        }
        if self.noise_pct < 0.0 || self.noise_levels_pct.iter().any(|&l| l < 0.0) {
            return Err(Error::Config("noise levels must be >= 0".into()));
        }
        if self.noise_seeds == 0 {
            return Err(Error::Config("noise.seeds must be at least 1".into()));
        }
        if self.bench_repeats == 0 {
            return Err(Error::Config("bench.repeats must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parses `min:max[:step]` order ranges (step defaults to 2).
pub fn parse_orders(spec: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Config(format!("orders {spec:?} must be min:max[:step]"));
    match parts.as_slice() {
        [min, max] => Ok((
            min.parse().map_err(|_| bad())?,
            max.parse().map_err(|_| bad())?,
            2,
        )),
        [min, max, step] => Ok((
            min.parse().map_err(|_| bad())?,
            max.parse().map_err(|_| bad())?,
            step.parse().map_err(|_| bad())?,
        )),
        _ => Err(bad()),
    }
}

/// Parses `low:high` frequency bands.
pub fn parse_band(spec: &str) -> Result<(f64, f64)> {
    let bad = || Error::Config(format!("band {spec:?} must be low:high in Hz"));
    let (lo, hi) = spec.split_once(':').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

/// Derives a stage seed from the top-level seed and a stage name, so that
/// independent stages never share RNG streams yet every run is reproducible
/// from one number.
pub fn stage_seed(base: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in stage.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = base ^ h;
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn file_overrides_and_comments() {
        let dir = std::env::temp_dir().join(format!("cfg_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(
            &path,
            "# experiment\nseed = 9\nbeam.n_elements = 4   # coarse\n\nstab.mac_min = 0.99\n",
        )
        .unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply_file(&path).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.beam.n_elements, 4);
        assert_eq!(cfg.criteria.mac_min, 0.99);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn unknown_key_reports_line() {
        let dir = std::env::temp_dir().join(format!("cfg_bad_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.cfg");
        std::fs::write(&path, "seed = 1\nnot.a.key = 2\n").unwrap();
        let mut cfg = RunConfig::default();
        let err = cfg.apply_file(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "missing line number: {err}");
        assert!(err.contains("not.a.key"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn effective_text_reparses_to_same_config() {
        let mut cfg = RunConfig::default();
        cfg.set("seed", "77").unwrap();
        cfg.set("estimator.kind", "h1").unwrap();
        let text = cfg.effective_text();
        let mut re = RunConfig::default();
        for line in text.lines() {
            let (k, v) = line.split_once('=').unwrap();
            re.set(k.trim(), v.trim()).unwrap();
        }
        assert_eq!(re.seed, 77);
        assert_eq!(re.estimator, crate::frf::EstimatorKind::H1);
        assert_eq!(text, re.effective_text());
    }

    #[test]
    fn range_parsers() {
        assert_eq!(parse_orders("32:60").unwrap(), (32, 60, 2));
        assert_eq!(parse_orders("32:60:4").unwrap(), (32, 60, 4));
        assert!(parse_orders("32").is_err());
        assert_eq!(parse_band("1:399").unwrap(), (1.0, 399.0));
        assert!(parse_band("399").is_err());
    }

    #[test]
    fn stage_seeds_are_stable_and_distinct() {
        assert_eq!(stage_seed(1, "directions"), stage_seed(1, "directions"));
        assert_ne!(stage_seed(1, "directions"), stage_seed(2, "directions"));
        assert_ne!(stage_seed(1, "directions"), stage_seed(1, "noise"));
    }

    #[test]
    fn validation_catches_bad_combinations() {
        let mut cfg = RunConfig::default();
        cfg.band_hz = (1.0, 500.0);
        assert!(cfg.validate().is_err());
        cfg = RunConfig::default();
        cfg.n_samples = 1000;
        assert!(cfg.validate().is_err());
        cfg = RunConfig::default();
        cfg.input_node = 9;
        assert!(cfg.validate().is_err());
        cfg = RunConfig::default();
        cfg.h1_overlap = cfg.h1_seg_len;
        assert!(cfg.validate().is_err());
    }
}
