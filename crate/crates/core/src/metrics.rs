//! Accuracy tables and the timing study.
//!
//! [`compare`] grades an identified mode set against a reference set and
//! tabulates per-mode frequency/damping errors and MAC values, plus summary
//! statistics. [`timing_sweep`] wall-clocks identification per model order
//! for the cached-projection path and for the loop-based legacy path, and
//! fits time against order so flatness claims are backed by a slope and its
//! standard error rather than eyeballing.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::frf::FrequencyResponseSet;
use crate::loewner::{
    build_loewner_pencil, identify_loop_baseline, partition_data, real_transform, IlfEngine,
    TransformMode, PINV_REL_TOL,
};
use crate::modal::{match_modes, ModeSet};

/// One matched mode pair with errors relative to the reference.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub reference_freq_hz: f64,
    pub identified_freq_hz: f64,
    /// 100 × (identified − reference) / reference.
    pub freq_err_pct: f64,
    pub reference_damping: f64,
    pub identified_damping: f64,
    pub damping_err_pct: f64,
    pub mac: f64,
}

/// Per-mode error table plus summary statistics.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// Matched pairs, ascending in reference frequency.
    pub rows: Vec<ComparisonRow>,
    /// Reference modes no candidate matched (frequencies, Hz).
    pub unmatched_reference_hz: Vec<f64>,
    /// Identified modes that matched nothing (frequencies, Hz).
    pub unmatched_identified_hz: Vec<f64>,
    pub max_abs_freq_err_pct: f64,
    pub mean_abs_freq_err_pct: f64,
    pub median_abs_freq_err_pct: f64,
    pub max_abs_damping_err_pct: f64,
    pub mean_abs_damping_err_pct: f64,
    pub median_abs_damping_err_pct: f64,
    pub min_mac: f64,
    pub median_mac: f64,
}

fn median(sorted: &mut Vec<f64>) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Matches `identified` against `reference` (greedy best-MAC inside the
/// frequency window) and tabulates the errors.
pub fn compare(
    identified: &ModeSet,
    reference: &ModeSet,
    freq_window_pct: f64,
) -> Result<ComparisonReport> {
    let report = match_modes(identified, reference, freq_window_pct)?;
    let mut rows: Vec<ComparisonRow> = report
        .pairs
        .iter()
        .map(|p| {
            let r = &reference.modes[p.reference];
            let c = &identified.modes[p.candidate];
            ComparisonRow {
                reference_freq_hz: r.natural_frequency_hz,
                identified_freq_hz: c.natural_frequency_hz,
                freq_err_pct: p.freq_err_pct,
                reference_damping: r.damping_ratio,
                identified_damping: c.damping_ratio,
                damping_err_pct: p.damping_err_pct,
                mac: p.mac,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.reference_freq_hz.total_cmp(&b.reference_freq_hz));

    let mut af: Vec<f64> = rows.iter().map(|r| r.freq_err_pct.abs()).collect();
    let mut az: Vec<f64> = rows.iter().map(|r| r.damping_err_pct.abs()).collect();
    let mut macs: Vec<f64> = rows.iter().map(|r| r.mac).collect();
    let fold_max = |v: &[f64]| v.iter().cloned().fold(f64::NAN, f64::max);
    let mean = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Ok(ComparisonReport {
        max_abs_freq_err_pct: fold_max(&af),
        mean_abs_freq_err_pct: mean(&af),
        median_abs_freq_err_pct: median(&mut af),
        max_abs_damping_err_pct: fold_max(&az),
        mean_abs_damping_err_pct: mean(&az),
        median_abs_damping_err_pct: median(&mut az),
        min_mac: macs.iter().cloned().fold(f64::NAN, f64::min),
        median_mac: median(&mut macs),
        unmatched_reference_hz: report
            .unmatched_reference
            .iter()
            .map(|&i| reference.modes[i].natural_frequency_hz)
            .collect(),
        unmatched_identified_hz: report
            .unmatched_candidates
            .iter()
            .map(|&i| identified.modes[i].natural_frequency_hz)
            .collect(),
        rows,
    })
}

impl ComparisonReport {
    pub fn to_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut body = String::from(
            "ref_freq_hz,id_freq_hz,freq_err_pct,ref_damping,id_damping,damping_err_pct,mac\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                body,
                "{},{},{},{},{},{},{}",
                r.reference_freq_hz,
                r.identified_freq_hz,
                r.freq_err_pct,
                r.reference_damping,
                r.identified_damping,
                r.damping_err_pct,
                r.mac
            );
        }
        std::fs::File::create(path)?.write_all(body.as_bytes())?;
        Ok(())
    }

    /// Aligned text table for terminal output.
    pub fn format_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>12} {:>12} {:>9} {:>9} {:>9} {:>9} {:>7}",
            "ref f (Hz)", "id f (Hz)", "df (%)", "ref z", "id z", "dz (%)", "MAC"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>12.4} {:>12.4} {:>9.4} {:>9.5} {:>9.5} {:>9.3} {:>7.4}",
                r.reference_freq_hz,
                r.identified_freq_hz,
                r.freq_err_pct,
                r.reference_damping,
                r.identified_damping,
                r.damping_err_pct,
                r.mac
            );
        }
        let _ = writeln!(
            s,
            "matched {} | max|df| {:.4}% mean|df| {:.4}% | max|dz| {:.3}% | min MAC {:.4}",
            self.rows.len(),
            self.max_abs_freq_err_pct,
            self.mean_abs_freq_err_pct,
            self.max_abs_damping_err_pct,
            self.min_mac
        );
        if !self.unmatched_reference_hz.is_empty() {
            let _ = writeln!(
                s,
                "unmatched reference modes (Hz): {:.4?}",
                self.unmatched_reference_hz
            );
        }
        if !self.unmatched_identified_hz.is_empty() {
            let _ = writeln!(
                s,
                "unmatched identified modes (Hz): {:.4?}",
                self.unmatched_identified_hz
            );
        }
        s
    }
}

/// Identification path being timed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Cached-projection vectorized path.
    Ilf,
    /// Entrywise loop pencil build with dense per-column conversion.
    LfLoopBaseline,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Ilf => write!(f, "ilf"),
            Method::LfLoopBaseline => write!(f, "lf_loop_baseline"),
        }
    }
}

/// Wall-clock statistics for one (method, order) cell.
#[derive(Debug, Clone)]
pub struct TimingRow {
    pub method: Method,
    pub order: usize,
    pub mean_s: f64,
    /// Absent when fewer than two repeats were taken.
    pub std_s: Option<f64>,
    pub times_s: Vec<f64>,
}

/// Least-squares fit of mean time against order.
#[derive(Debug, Clone)]
pub struct RegressionLine {
    pub method: Method,
    pub slope_s_per_order: f64,
    pub intercept_s: f64,
    pub slope_std_err: f64,
}

#[derive(Debug, Clone)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
    pub regressions: Vec<RegressionLine>,
    pub n_repeats: usize,
    /// One-time cost of the cached factorization (pencil build, transform,
    /// and the two truncated SVDs), paid once for all orders. Reported
    /// separately because per-order rows measure the marginal cost of each
    /// additional order.
    pub ilf_setup_s: Option<f64>,
}

/// Times identification per order for the requested methods.
///
/// Runs are strictly sequential. Partitioning the data (common to both
/// paths, independent of order) is excluded; the cached factorization for
/// the vectorized path is timed once into `ilf_setup_s`.
pub fn timing_sweep(
    frf: &FrequencyResponseSet,
    k_range: (usize, usize, usize),
    n_repeats: usize,
    methods: &[Method],
    seed: u64,
) -> Result<TimingReport> {
    if n_repeats == 0 {
        return Err(Error::Config("n_repeats must be at least 1".into()));
    }
    let (k_min, k_max, step) = k_range;
    if k_min < 2 || step == 0 || k_max < k_min {
        return Err(Error::Config(format!(
            "invalid order range ({k_min}, {k_max}, {step})"
        )));
    }
    let orders: Vec<usize> = (k_min..=k_max).step_by(step).collect();
    if methods.is_empty() {
        return Err(Error::Config("no methods selected".into()));
    }

    let data = partition_data(frf, seed)?;
    let mut rows = Vec::new();
    let mut ilf_setup_s = None;

    for &method in methods {
        match method {
            Method::Ilf => {
                let t0 = Instant::now();
                let pencil = build_loewner_pencil(&data)?;
                let real = real_transform(&pencil, &data, TransformMode::Vectorized)?;
                let engine = IlfEngine::from_pencil(&real, *orders.last().unwrap(), PINV_REL_TOL)?;
                ilf_setup_s = Some(t0.elapsed().as_secs_f64());
                for &k in &orders {
                    let mut times = Vec::with_capacity(n_repeats);
                    for _ in 0..n_repeats {
                        let t = Instant::now();
                        let real_k = engine.realize(k)?;
                        std::hint::black_box(&real_k);
                        times.push(t.elapsed().as_secs_f64());
                    }
                    rows.push(stat_row(method, k, times));
                }
            }
            Method::LfLoopBaseline => {
                for &k in &orders {
                    let mut times = Vec::with_capacity(n_repeats);
                    for _ in 0..n_repeats {
                        let t = Instant::now();
                        let real_k = identify_loop_baseline(&data, k)?;
                        std::hint::black_box(&real_k);
                        times.push(t.elapsed().as_secs_f64());
                    }
                    rows.push(stat_row(method, k, times));
                }
            }
        }
    }

    let mut regressions = Vec::new();
    for &method in methods {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| (r.order as f64, r.mean_s))
            .collect();
        regressions.push(regress(method, &pts)?);
    }

    Ok(TimingReport {
        rows,
        regressions,
        n_repeats,
        ilf_setup_s,
    })
}

fn stat_row(method: Method, order: usize, times: Vec<f64>) -> TimingRow {
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let std = if times.len() >= 2 {
        Some(
            (times.iter().map(|&t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0)).sqrt(),
        )
    } else {
        None
    };
    TimingRow {
        method,
        order,
        mean_s: mean,
        std_s: std,
        times_s: times,
    }
}

fn regress(method: Method, pts: &[(f64, f64)]) -> Result<RegressionLine> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return Ok(RegressionLine {
            method,
            slope_s_per_order: 0.0,
            intercept_s: pts.first().map_or(0.0, |p| p.1),
            slope_std_err: f64::INFINITY,
        });
    }
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = pts.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum::<f64>();
    if sxx == 0.0 {
        return Err(Error::Computation(
            "regression needs at least two distinct orders".into(),
        ));
    }
    let sxy = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum::<f64>();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let dof = n - 2.0;
    let sse: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let std_err = if dof > 0.0 {
        (sse / dof / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(RegressionLine {
        method,
        slope_s_per_order: slope,
        intercept_s: intercept,
        slope_std_err: std_err,
    })
}

impl TimingReport {
    pub fn to_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut body = String::from("method,order,mean_s,std_s\n");
        for r in &self.rows {
            let _ = writeln!(
                body,
                "{},{},{},{}",
                r.method,
                r.order,
                r.mean_s,
                r.std_s.map_or(String::new(), |s| s.to_string())
            );
        }
        std::fs::File::create(path)?.write_all(body.as_bytes())?;
        Ok(())
    }

    pub fn format_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>18} {:>6} {:>12} {:>12}",
            "method", "order", "mean (s)", "std (s)"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>18} {:>6} {:>12.6} {:>12}",
                r.method.to_string(),
                r.order,
                r.mean_s,
                r.std_s.map_or("-".to_string(), |v| format!("{v:.6}")),
            );
        }
        if let Some(setup) = self.ilf_setup_s {
            let _ = writeln!(s, "ilf one-time factorization: {setup:.6} s");
        }
        for reg in &self.regressions {
            let _ = writeln!(
                s,
                "{}: time ~ {:.3e}*k + {:.3e}  (slope std err {:.3e})",
                reg.method, reg.slope_s_per_order, reg.intercept_s, reg.slope_std_err
            );
        }
        s
    }
}
