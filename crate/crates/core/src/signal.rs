//! Frequency-domain estimation from time records, plus controlled noise
//! injection for robustness studies.
//!
//! Two estimators are provided. [`frf_direct`] forms the spectral ratio of
//! first-differenced records — differencing removes the non-periodic step
//! ramp that otherwise leaks across the whole band, and cancels exactly in
//! the ratio for any input. For records sampled from a continuous-time
//! system driven by held inputs, the optional zero-order-hold correction
//! restores the continuous response from the difference spectra; at the zero
//! bin (outside the returned grid) the differenced ratio would reduce to the
//! static gain analytically. [`h1_estimate`] is the Welch-averaged
//! H1 = S_YX·S_XX⁻¹ for noisy broadband data.

use ndarray::{Array1, Array2, Array3};
use ndarray_linalg::Solve;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::frf::{EstimatorKind, FrequencyResponseSet, TimeHistorySet};

/// Controls for [`frf_direct`].
#[derive(Debug, Clone)]
pub struct DirectFrfOptions {
    /// Analyze only the first `analysis_len` samples of each record. For
    /// step data on long, settled records this focuses the estimate on the
    /// informative transient; broadband noise injected relative to the
    /// full-record signal level is then suppressed by the unused tail.
    pub analysis_len: Option<usize>,
    /// Correct the zero-order-hold bias: multiply the difference-spectrum
    /// ratio by (jθ)/(1 − e^{−jθ}), θ = ω/fs. Use when the records sample a
    /// continuous-time response to held inputs; leave off for inherently
    /// discrete data.
    pub zoh_correction: bool,
    /// Take spectra of first differences instead of the raw samples. This
    /// turns a step record into a decayed transient, removing the static
    /// offset's leakage across the band (its effect reappears analytically
    /// at the excluded zero bin), and cancels in the ratio otherwise.
    /// Disable for records that are exactly periodic within the analysis
    /// window, where the raw spectra are already leakage-free.
    pub difference: bool,
}

impl Default for DirectFrfOptions {
    fn default() -> Self {
        DirectFrfOptions {
            analysis_len: None,
            zoh_correction: false,
            difference: true,
        }
    }
}

/// Direct spectral-ratio FRF from one experiment per input channel.
///
/// Run q must excite input channel q (other input channels may be present
/// but silent); the per-bin system X·Z = Y is solved across runs, which
/// reduces to the plain column ratio when each run drives exactly one input.
/// Returns bins with `band_hz.0 ≤ f ≤ band_hz.1`, f > 0.
pub fn frf_direct(
    runs: &[TimeHistorySet],
    band_hz: (f64, f64),
    options: &DirectFrfOptions,
) -> Result<FrequencyResponseSet> {
    if runs.is_empty() {
        return Err(Error::Computation("no runs supplied".into()));
    }
    let m = runs[0].inputs.nrows();
    let p = runs[0].outputs.nrows();
    let fs = runs[0].fs_hz;
    let n = runs[0].n_samples();
    if runs.len() != m {
        return Err(Error::Computation(format!(
            "{} runs cannot excite {} input channels; one run per input required",
            runs.len(),
            m
        )));
    }
    for run in runs {
        if run.inputs.nrows() != m
            || run.outputs.nrows() != p
            || run.n_samples() != n
            || run.fs_hz != fs
        {
            return Err(Error::Computation(
                "runs differ in channel layout, length, or sample rate".into(),
            ));
        }
    }
    let win = options.analysis_len.unwrap_or(n);
    if win < 4 || win > n {
        return Err(Error::Config(format!(
            "analysis window {win} outside 4..={n}"
        )));
    }

    // One-sided grid of the analysis window, restricted to the band.
    let n_bins = win / 2 + 1;
    let df = fs / win as f64;
    let sel: Vec<usize> = (0..n_bins)
        .filter(|&k| {
            let f = k as f64 * df;
            f > 0.0 && f >= band_hz.0 && f <= band_hz.1
        })
        .collect();
    if sel.is_empty() {
        return Err(Error::Computation(format!(
            "no bins inside band [{}, {}] Hz at resolution {df} Hz",
            band_hz.0, band_hz.1
        )));
    }

    // Difference spectra per run: X[r] is m×bins, Y[r] is p×bins.
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(win);
    let difference = options.difference;
    let spectrum = |row: ndarray::ArrayView1<f64>| -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = (0..win)
            .map(|i| {
                // First difference with a zero appended at the end keeps the
                // window length; records that start and settle at rest turn
                // into fully decayed transients.
                let d = if !difference {
                    row[i]
                } else if i + 1 < win {
                    row[i + 1] - row[i]
                } else {
                    0.0
                };
                Complex64::new(d, 0.0)
            })
            .collect();
        fft.process(&mut buf);
        sel.iter().map(|&k| buf[k]).collect()
    };

    let mut x_runs: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(m);
    let mut y_runs: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(m);
    for (r, run) in runs.iter().enumerate() {
        let xs: Vec<Vec<Complex64>> = (0..m)
            .map(|c| spectrum(run.inputs.slice(ndarray::s![c, ..win])))
            .collect();
        for (bi, &k) in sel.iter().enumerate() {
            let biggest = xs.iter().map(|ch| ch[bi].norm()).fold(0.0f64, f64::max);
            if biggest < 1e-14 {
                return Err(Error::Computation(format!(
                    "run {r} has no input energy at {} Hz",
                    k as f64 * df
                )));
            }
        }
        x_runs.push(xs);
        y_runs.push(
            (0..p)
                .map(|c| spectrum(run.outputs.slice(ndarray::s![c, ..win])))
                .collect(),
        );
    }

    let mut values = Array3::<Complex64>::zeros((p, m, sel.len()));
    for (bi, &k) in sel.iter().enumerate() {
        let theta = 2.0 * std::f64::consts::PI * (k as f64) / (win as f64);
        let comp = if options.zoh_correction {
            Complex64::new(0.0, theta) / (1.0 - Complex64::new(0.0, -theta).exp())
        } else {
            Complex64::new(1.0, 0.0)
        };
        // X[r, c] = spectrum of input c in run r; solve X·Z = Y.
        let mut xb = Array2::<Complex64>::zeros((m, m));
        for r in 0..m {
            for c in 0..m {
                xb[[r, c]] = x_runs[r][c][bi];
            }
        }
        for o in 0..p {
            let rhs = Array1::from_iter((0..m).map(|r| y_runs[r][o][bi]));
            let z = xb.solve(&rhs).map_err(|e| {
                Error::Computation(format!(
                    "input spectra singular at {} Hz: {e}",
                    k as f64 * df
                ))
            })?;
            for q in 0..m {
                values[[o, q, bi]] = z[q] * comp;
            }
        }
    }

    let freqs = Array1::from_iter(sel.iter().map(|&k| k as f64 * df));
    FrequencyResponseSet::new(
        freqs,
        values,
        runs[0].output_labels.clone(),
        runs[0].input_labels.clone(),
        EstimatorKind::DirectRatio,
    )
}

/// Spectral window for [`h1_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hann,
}

/// Default Welch segmentation for the H1 estimator.
pub const H1_DEFAULT_SEG_LEN: usize = 16384;
pub const H1_DEFAULT_OVERLAP: usize = 8192;

/// Welch-averaged H1 estimator: windowed segment spectra accumulate
/// cross-spectra S_YX and auto-spectra S_XX; H = S_YX·S_XX⁻¹ per bin.
/// Returns every positive-frequency bin of the segment grid.
pub fn h1_estimate(
    th: &TimeHistorySet,
    seg_len: usize,
    overlap: usize,
    _window: WindowKind,
) -> Result<FrequencyResponseSet> {
    let t = th.n_samples();
    let m = th.inputs.nrows();
    let p = th.outputs.nrows();
    if seg_len < 2 {
        return Err(Error::Config(format!("segment length {seg_len} too small")));
    }
    if t < seg_len {
        return Err(Error::Computation(format!(
            "record of {t} samples shorter than segment length {seg_len}"
        )));
    }
    if overlap >= seg_len {
        return Err(Error::Config(format!(
            "overlap {overlap} must be smaller than segment length {seg_len}"
        )));
    }
    let step = seg_len - overlap;
    let hann: Vec<f64> = (0..seg_len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / seg_len as f64).cos())
        .collect();

    let n_bins = seg_len / 2 + 1;
    let mut sxx = Array3::<Complex64>::zeros((m, m, n_bins));
    let mut syx = Array3::<Complex64>::zeros((p, m, n_bins));
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(seg_len);

    let mut start = 0;
    let mut xw = vec![vec![Complex64::new(0.0, 0.0); seg_len]; m];
    let mut yw = vec![vec![Complex64::new(0.0, 0.0); seg_len]; p];
    while start + seg_len <= t {
        for (c, buf) in xw.iter_mut().enumerate() {
            for i in 0..seg_len {
                *buf.get_mut(i).unwrap() = Complex64::new(th.inputs[[c, start + i]] * hann[i], 0.0);
            }
            fft.process(buf);
        }
        for (c, buf) in yw.iter_mut().enumerate() {
            for i in 0..seg_len {
                *buf.get_mut(i).unwrap() =
                    Complex64::new(th.outputs[[c, start + i]] * hann[i], 0.0);
            }
            fft.process(buf);
        }
        for k in 0..n_bins {
            for a in 0..m {
                let xa = xw[a][k];
                for b in 0..m {
                    sxx[[a, b, k]] += xa * xw[b][k].conj();
                }
            }
            for o in 0..p {
                let yo = yw[o][k];
                for b in 0..m {
                    syx[[o, b, k]] += yo * xw[b][k].conj();
                }
            }
        }
        start += step;
    }

    // H·S_XX = S_YX, i.e. S_XXᵀ·Hᵀ = S_YXᵀ, solved per output row.
    let sel: Vec<usize> = (1..n_bins).collect();
    let mut values = Array3::<Complex64>::zeros((p, m, sel.len()));
    for (bi, &k) in sel.iter().enumerate() {
        let mut sxx_t = Array2::<Complex64>::zeros((m, m));
        for a in 0..m {
            for b in 0..m {
                sxx_t[[a, b]] = sxx[[b, a, k]];
            }
        }
        for o in 0..p {
            let rhs = Array1::from_iter((0..m).map(|b| syx[[o, b, k]]));
            let h_row = sxx_t.solve(&rhs).map_err(|e| {
                Error::Computation(format!("input auto-spectra singular at bin {k}: {e}"))
            })?;
            for q in 0..m {
                values[[o, q, bi]] = h_row[q];
            }
        }
    }

    let df = th.fs_hz / seg_len as f64;
    let freqs = Array1::from_iter(sel.iter().map(|&k| k as f64 * df));
    FrequencyResponseSet::new(
        freqs,
        values,
        th.output_labels.clone(),
        th.input_labels.clone(),
        EstimatorKind::H1,
    )
}

/// Adds independent zero-mean Gaussian noise to every channel (inputs and
/// outputs), with per-channel standard deviation `level_pct`/100 times that
/// channel's sample standard deviation. Seeded and reproducible; channels
/// are corrupted in storage order, inputs first.
pub fn add_wgn(th: &TimeHistorySet, level_pct: f64, seed: u64) -> Result<TimeHistorySet> {
    if level_pct < 0.0 {
        return Err(Error::Config(format!(
            "noise level must be >= 0, got {level_pct}"
        )));
    }
    let mut out = th.clone();
    if level_pct == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corrupt = |mat: &mut Array2<f64>| {
        for mut row in mat.rows_mut() {
            let n = row.len() as f64;
            let mean = row.sum() / n;
            let var = row.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
            let sigma = level_pct / 100.0 * var.sqrt();
            for x in row.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *x += sigma * g;
            }
        }
    };
    corrupt(&mut out.inputs);
    corrupt(&mut out.outputs);
    Ok(out)
}

/// Element-wise complex mean of FRF sets sharing one grid and channel
/// layout.
pub fn average_frfs(sets: &[FrequencyResponseSet]) -> Result<FrequencyResponseSet> {
    let first = sets
        .first()
        .ok_or_else(|| Error::Computation("nothing to average".into()))?;
    for s in &sets[1..] {
        if s.freqs_hz != first.freqs_hz {
            return Err(Error::Computation("frequency grids differ".into()));
        }
        if s.values.dim() != first.values.dim() {
            return Err(Error::Computation("channel layouts differ".into()));
        }
    }
    let mut acc = first.values.clone();
    for s in &sets[1..] {
        acc += &s.values;
    }
    let scale = 1.0 / sets.len() as f64;
    acc.mapv_inplace(|x| x * scale);
    FrequencyResponseSet::new(
        first.freqs_hz.clone(),
        acc,
        first.output_labels.clone(),
        first.input_labels.clone(),
        first.estimator_kind,
    )
}
