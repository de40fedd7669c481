//! Frequency-response and time-history containers with CSV interchange.
//!
//! A [`FrequencyResponseSet`] holds sampled MIMO transfer-function data
//! H(jω) on a positive frequency grid, indexed (output, input, bin). A
//! [`TimeHistorySet`] holds synchronous input/output records from one
//! experiment. Both serialize to plain CSV; FRFs carry a JSON sidecar naming
//! the channel pairs and the estimator that produced them, which doubles as
//! the generic ingestion path for external datasets.

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, BufWriter, Write as IoWrite};
use std::path::Path;

use crate::error::{Error, Result};

/// Which estimator produced an FRF set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Direct spectral ratio of output to input transforms.
    DirectRatio,
    /// H1 = S_YX / S_XX from Welch-averaged cross- and auto-spectra.
    H1,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::DirectRatio => write!(f, "direct_ratio"),
            EstimatorKind::H1 => write!(f, "h1"),
        }
    }
}

/// Sampled MIMO frequency-response data.
#[derive(Debug, Clone)]
pub struct FrequencyResponseSet {
    /// Strictly increasing, strictly positive grid in Hz.
    pub freqs_hz: Array1<f64>,
    /// Complex response, shape (n_outputs, n_inputs, n_freqs).
    pub values: Array3<Complex64>,
    pub output_labels: Vec<String>,
    pub input_labels: Vec<String>,
    pub estimator_kind: EstimatorKind,
}

impl FrequencyResponseSet {
    /// Builds a set after checking the grid and dimension invariants.
    pub fn new(
        freqs_hz: Array1<f64>,
        values: Array3<Complex64>,
        output_labels: Vec<String>,
        input_labels: Vec<String>,
        estimator_kind: EstimatorKind,
    ) -> Result<Self> {
        if freqs_hz.is_empty() {
            return Err(Error::Computation("empty frequency grid".into()));
        }
        if freqs_hz[0] <= 0.0 {
            return Err(Error::Computation(format!(
                "frequency grid must be strictly positive, got {}",
                freqs_hz[0]
            )));
        }
        if freqs_hz.windows(2).into_iter().any(|w| w[1] <= w[0]) {
            return Err(Error::Computation(
                "frequency grid must be strictly increasing".into(),
            ));
        }
        let (p, m, nf) = values.dim();
        if p != output_labels.len() || m != input_labels.len() || nf != freqs_hz.len() {
            return Err(Error::Computation(format!(
                "FRF tensor {p}x{m}x{nf} inconsistent with {} outputs, {} inputs, {} bins",
                output_labels.len(),
                input_labels.len(),
                freqs_hz.len()
            )));
        }
        Ok(Self {
            freqs_hz,
            values,
            output_labels,
            input_labels,
            estimator_kind,
        })
    }

    pub fn n_outputs(&self) -> usize {
        self.values.dim().0
    }

    pub fn n_inputs(&self) -> usize {
        self.values.dim().1
    }

    pub fn n_freqs(&self) -> usize {
        self.freqs_hz.len()
    }

    /// Keeps bins with `low ≤ f ≤ high` (Hz).
    pub fn restrict_band(&self, low_hz: f64, high_hz: f64) -> Result<Self> {
        let keep: Vec<usize> = self
            .freqs_hz
            .iter()
            .enumerate()
            .filter(|(_, &f)| f >= low_hz && f <= high_hz)
            .map(|(i, _)| i)
            .collect();
        if keep.is_empty() {
            return Err(Error::Computation(format!(
                "no frequency bins inside band [{low_hz}, {high_hz}] Hz"
            )));
        }
        self.select_bins(&keep)
    }

    /// Keeps every `stride`-th bin, starting at the first.
    pub fn decimate(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Config("decimation stride must be >= 1".into()));
        }
        let keep: Vec<usize> = (0..self.n_freqs()).step_by(stride).collect();
        self.select_bins(&keep)
    }

    fn select_bins(&self, keep: &[usize]) -> Result<Self> {
        let (p, m, _) = self.values.dim();
        let freqs = Array1::from_iter(keep.iter().map(|&i| self.freqs_hz[i]));
        let mut values = Array3::zeros((p, m, keep.len()));
        for (dst, &src) in keep.iter().enumerate() {
            values
                .slice_mut(ndarray::s![.., .., dst])
                .assign(&self.values.slice(ndarray::s![.., .., src]));
        }
        FrequencyResponseSet::new(
            freqs,
            values,
            self.output_labels.clone(),
            self.input_labels.clone(),
            self.estimator_kind,
        )
    }

    /// Writes `<path>` as CSV (`freq_hz,re_1_1,im_1_1,...`, pairs in
    /// output-major order, 1-based) plus a `<path>.json` sidecar naming the
    /// channel pairs and the estimator.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        write!(w, "freq_hz")?;
        let (p, m, _) = self.values.dim();
        for i in 0..p {
            for j in 0..m {
                write!(w, ",re_{}_{},im_{}_{}", i + 1, j + 1, i + 1, j + 1)?;
            }
        }
        writeln!(w)?;
        for (k, &f) in self.freqs_hz.iter().enumerate() {
            write!(w, "{f}")?;
            for i in 0..p {
                for j in 0..m {
                    let h = self.values[[i, j, k]];
                    write!(w, ",{},{}", h.re, h.im)?;
                }
            }
            writeln!(w)?;
        }
        w.flush()?;

        let sidecar = FrfSidecar {
            estimator_kind: self.estimator_kind,
            output_labels: self.output_labels.clone(),
            input_labels: self.input_labels.clone(),
            pairs: (0..p)
                .flat_map(|i| {
                    let out = self.output_labels[i].clone();
                    let inputs = &self.input_labels;
                    (0..m)
                        .map(move |j| PairEntry {
                            re: format!("re_{}_{}", i + 1, j + 1),
                            im: format!("im_{}_{}", i + 1, j + 1),
                            output: out.clone(),
                            input: inputs[j].clone(),
                        })
                        .collect::<Vec<_>>()
                })
                .collect(),
        };
        let json = serde_json::to_string_pretty(&sidecar)
            .map_err(|e| Error::Io(format!("sidecar serialization failed: {e}")))?;
        std::fs::write(sidecar_path(path), json)?;
        Ok(())
    }

    /// Reads a CSV written by [`write_csv`], or any external file in the same
    /// layout. The JSON sidecar supplies labels and estimator kind; without
    /// it, labels fall back to the column names and the kind to
    /// `direct_ratio`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Io(format!("{}: empty file", path.display())))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 3 || cols[0] != "freq_hz" || (cols.len() - 1) % 2 != 0 {
            return Err(Error::Io(format!(
                "{}: expected header freq_hz,re_*,im_*,...",
                path.display()
            )));
        }
        let n_pairs = (cols.len() - 1) / 2;

        // Channel layout comes from the sidecar when present; otherwise infer
        // a (p, m) grid from the re_i_j column names.
        let sidecar: Option<FrfSidecar> = std::fs::read_to_string(sidecar_path(path))
            .ok()
            .and_then(|s| serde_json::from_str(&s).ok());
        let (output_labels, input_labels, kind) = match sidecar {
            Some(sc) => (sc.output_labels, sc.input_labels, sc.estimator_kind),
            None => {
                let (p, m) = infer_grid(&cols[1..])?;
                if p * m != n_pairs {
                    return Err(Error::Io(format!(
                        "{}: {} channel pairs do not fill a {}x{} grid",
                        path.display(),
                        n_pairs,
                        p,
                        m
                    )));
                }
                (
                    (1..=p).map(|i| format!("out{i}")).collect(),
                    (1..=m).map(|j| format!("in{j}")).collect(),
                    EstimatorKind::DirectRatio,
                )
            }
        };
        let (p, m) = (output_labels.len(), input_labels.len());
        if p * m != n_pairs {
            return Err(Error::Io(format!(
                "{}: sidecar names {}x{} channels but CSV has {} pairs",
                path.display(),
                p,
                m,
                n_pairs
            )));
        }

        let mut freqs = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = parse_floats(&line, path, line_no)?;
            if vals.len() != cols.len() {
                return Err(Error::Io(format!(
                    "{}:{line_no}: row has {} fields, expected {}",
                    path.display(),
                    vals.len(),
                    cols.len()
                )));
            }
            freqs.push(vals[0]);
            rows.push(vals[1..].to_vec());
        }
        let nf = freqs.len();
        let mut values = Array3::zeros((p, m, nf));
        for (k, row) in rows.iter().enumerate() {
            for i in 0..p {
                for j in 0..m {
                    let base = 2 * (i * m + j);
                    values[[i, j, k]] = Complex64::new(row[base], row[base + 1]);
                }
            }
        }
        FrequencyResponseSet::new(
            Array1::from_vec(freqs),
            values,
            output_labels,
            input_labels,
            kind,
        )
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    std::path::PathBuf::from(s)
}

fn infer_grid(pair_cols: &[&str]) -> Result<(usize, usize)> {
    let mut pmax = 0usize;
    let mut mmax = 0usize;
    for c in pair_cols.iter().step_by(2) {
        let rest = c
            .strip_prefix("re_")
            .ok_or_else(|| Error::Io(format!("unexpected FRF column name {c}")))?;
        let (i, j) = rest
            .split_once('_')
            .ok_or_else(|| Error::Io(format!("unexpected FRF column name {c}")))?;
        let i: usize = i
            .parse()
            .map_err(|_| Error::Io(format!("unexpected FRF column name {c}")))?;
        let j: usize = j
            .parse()
            .map_err(|_| Error::Io(format!("unexpected FRF column name {c}")))?;
        pmax = pmax.max(i);
        mmax = mmax.max(j);
    }
    Ok((pmax, mmax))
}

fn parse_floats(line: &str, path: &Path, line_no: usize) -> Result<Vec<f64>> {
    line.trim()
        .split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| {
                Error::Io(format!(
                    "{}:{line_no}: bad number {t:?}",
                    path.display()
                ))
            })
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct FrfSidecar {
    estimator_kind: EstimatorKind,
    output_labels: Vec<String>,
    input_labels: Vec<String>,
    pairs: Vec<PairEntry>,
}

#[derive(Serialize, Deserialize)]
struct PairEntry {
    re: String,
    im: String,
    output: String,
    input: String,
}

/// Synchronous input/output time records from one experiment.
#[derive(Debug, Clone)]
pub struct TimeHistorySet {
    pub fs_hz: f64,
    /// Input forces, shape (n_inputs, n_samples).
    pub inputs: Array2<f64>,
    /// Output displacements, shape (n_outputs, n_samples).
    pub outputs: Array2<f64>,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
}

impl TimeHistorySet {
    pub fn new(
        fs_hz: f64,
        inputs: Array2<f64>,
        outputs: Array2<f64>,
        input_labels: Vec<String>,
        output_labels: Vec<String>,
    ) -> Result<Self> {
        if fs_hz <= 0.0 {
            return Err(Error::Computation(format!("fs must be > 0, got {fs_hz}")));
        }
        if inputs.ncols() != outputs.ncols() {
            return Err(Error::Computation(format!(
                "input and output records differ in length: {} vs {}",
                inputs.ncols(),
                outputs.ncols()
            )));
        }
        if inputs.nrows() != input_labels.len() || outputs.nrows() != output_labels.len() {
            return Err(Error::Computation(
                "channel counts inconsistent with label counts".into(),
            ));
        }
        Ok(Self {
            fs_hz,
            inputs,
            outputs,
            input_labels,
            output_labels,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.inputs.ncols()
    }

    /// Writes `t,ch1,...,chN` CSV with inputs first, then outputs; channel
    /// names come from the labels.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        write!(w, "t")?;
        for l in self.input_labels.iter().chain(self.output_labels.iter()) {
            write!(w, ",{l}")?;
        }
        writeln!(w)?;
        let dt = 1.0 / self.fs_hz;
        for n in 0..self.n_samples() {
            write!(w, "{}", n as f64 * dt)?;
            for ch in self.inputs.column(n).iter() {
                write!(w, ",{ch}")?;
            }
            for ch in self.outputs.column(n).iter() {
                write!(w, ",{ch}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `t,ch1..chN` CSV; the first `n_inputs` channels are taken as
    /// inputs, the remainder as outputs. The sample rate is inferred from the
    /// time column.
    pub fn read_csv(path: &Path, n_inputs: usize) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Io(format!("{}: empty file", path.display())))??;
        let cols: Vec<String> = header.trim().split(',').map(|s| s.to_string()).collect();
        if cols.len() < 2 || cols[0] != "t" {
            return Err(Error::Io(format!(
                "{}: expected header t,ch1,...",
                path.display()
            )));
        }
        let n_ch = cols.len() - 1;
        if n_inputs >= n_ch && n_ch > 0 && n_inputs != n_ch {
            return Err(Error::Io(format!(
                "{}: {} channels cannot provide {} inputs plus outputs",
                path.display(),
                n_ch,
                n_inputs
            )));
        }
        let mut t = Vec::new();
        let mut data: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = parse_floats(&line, path, line_no)?;
            if vals.len() != cols.len() {
                return Err(Error::Io(format!(
                    "{}:{line_no}: row has {} fields, expected {}",
                    path.display(),
                    vals.len(),
                    cols.len()
                )));
            }
            t.push(vals[0]);
            data.push(vals[1..].to_vec());
        }
        if t.len() < 2 {
            return Err(Error::Io(format!(
                "{}: need at least two samples",
                path.display()
            )));
        }
        let fs = 1.0 / (t[1] - t[0]);
        let nt = t.len();
        let mut inputs = Array2::zeros((n_inputs, nt));
        let mut outputs = Array2::zeros((n_ch - n_inputs, nt));
        for (n, row) in data.iter().enumerate() {
            for c in 0..n_inputs {
                inputs[[c, n]] = row[c];
            }
            for c in n_inputs..n_ch {
                outputs[[c - n_inputs, n]] = row[c];
            }
        }
        TimeHistorySet::new(
            fs,
            inputs,
            outputs,
            cols[1..=n_inputs].to_vec(),
            cols[n_inputs + 1..].to_vec(),
        )
    }
}
