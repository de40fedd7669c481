//! Modal parameters from state-space realizations, plus shape correlation.
//!
//! A continuous realization is reduced to physical modes by eigenanalysis of
//! its state matrix: stable, underdamped, in-band poles with positive
//! imaginary part, each carrying an output-side mode shape C·v. Mode shapes
//! are compared with the Modal Assurance Criterion and paired across sets by
//! a greedy frequency-window / best-MAC rule.

use ndarray::Array1;
use ndarray_linalg::Eig;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::loewner::StateSpaceRealization;

/// One identified (or analytical) vibration mode.
#[derive(Debug, Clone)]
pub struct Mode {
    pub natural_frequency_hz: f64,
    pub damping_ratio: f64,
    /// Unit-norm shape with its first nonzero entry rotated onto the
    /// positive real axis.
    pub shape: Array1<Complex64>,
    /// Continuous-time eigenvalue, the Im > 0 representative of its pair.
    pub pole: Complex64,
}

impl Mode {
    /// Builds a mode from a pole and an unnormalized shape, deriving
    /// frequency and damping from the pole.
    pub fn from_pole(pole: Complex64, shape: Array1<Complex64>) -> Result<Self> {
        let mag = pole.norm();
        if mag == 0.0 {
            return Err(Error::Computation("zero pole has no modal frequency".into()));
        }
        Ok(Mode {
            natural_frequency_hz: mag / (2.0 * std::f64::consts::PI),
            damping_ratio: -pole.re / mag,
            shape: normalize_shape(shape)?,
            pole,
        })
    }
}

/// A frequency-sorted collection of modes from one identification run.
#[derive(Debug, Clone)]
pub struct ModeSet {
    /// Sorted by ascending natural frequency.
    pub modes: Vec<Mode>,
    /// Model order that produced the set (0 for analytical references).
    pub order_k: usize,
    /// Human-readable provenance, e.g. "analytical" or "ilf k=32".
    pub source: String,
}

impl ModeSet {
    pub fn new(mut modes: Vec<Mode>, order_k: usize, source: impl Into<String>) -> Self {
        modes.sort_by(|a, b| {
            a.natural_frequency_hz
                .partial_cmp(&b.natural_frequency_hz)
                .expect("finite frequencies")
        });
        ModeSet {
            modes,
            order_k,
            source: source.into(),
        }
    }

    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.natural_frequency_hz).collect()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Writes the set as CSV: `freq_hz,damping,pole_re,pole_im` followed by
    /// interleaved real/imaginary shape entries.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::fmt::Write as _;
        use std::io::Write as _;
        let shape_len = self.modes.first().map_or(0, |m| m.shape.len());
        let mut body = String::from("freq_hz,damping,pole_re,pole_im");
        for i in 1..=shape_len {
            let _ = write!(body, ",shape_re_{i},shape_im_{i}");
        }
        body.push('\n');
        for m in &self.modes {
            let _ = write!(
                body,
                "{},{},{},{}",
                m.natural_frequency_hz, m.damping_ratio, m.pole.re, m.pole.im
            );
            for x in m.shape.iter() {
                let _ = write!(body, ",{},{}", x.re, x.im);
            }
            body.push('\n');
        }
        std::fs::File::create(path)?.write_all(body.as_bytes())?;
        Ok(())
    }
}

/// Scales to unit norm and rotates the first nonzero entry to the positive
/// real axis, making MAC tables reproducible across eigensolver phase
/// conventions.
pub fn normalize_shape(mut shape: Array1<Complex64>) -> Result<Array1<Complex64>> {
    let norm = shape.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Computation(
            "mode shape must be nonzero and finite".into(),
        ));
    }
    shape.mapv_inplace(|x| x / norm);
    if let Some(first) = shape.iter().find(|x| x.norm() > 1e-12) {
        let phase = first / first.norm();
        let rot = phase.conj();
        shape.mapv_inplace(|x| x * rot);
    }
    Ok(shape)
}

/// Modal Assurance Criterion: |aᴴb|² / ((aᴴa)(bᴴb)), in [0, 1].
pub fn mac(shape_a: &Array1<Complex64>, shape_b: &Array1<Complex64>) -> Result<f64> {
    if shape_a.len() != shape_b.len() {
        return Err(Error::Computation(format!(
            "MAC of shapes with different lengths {} and {}",
            shape_a.len(),
            shape_b.len()
        )));
    }
    let dot: Complex64 = shape_a
        .iter()
        .zip(shape_b.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    let na: f64 = shape_a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = shape_b.iter().map(|x| x.norm_sqr()).sum();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Computation("MAC of a zero-norm shape".into()));
    }
    Ok(dot.norm_sqr() / (na * nb))
}

/// Physical modes of a continuous realization within a frequency band (Hz,
/// inclusive). Keeps eigenvalues with Im > 0, Re < 0, and damping in (0, 1);
/// shapes are C·v.
pub fn extract_modes(
    realization: &StateSpaceRealization,
    band_hz: (f64, f64),
) -> Result<ModeSet> {
    let (low, high) = band_hz;
    if !(low < high) {
        return Err(Error::Config(format!(
            "band low {low} must be below band high {high}"
        )));
    }
    let ac = realization.ac.as_ref().ok_or_else(|| {
        Error::Computation("realization lacks a continuous state matrix; convert first".into())
    })?;
    let (eigvals, eigvecs) = ac
        .eig()
        .map_err(|e| Error::Computation(format!("eigen decomposition failed: {e}")))?;

    let c_cplx = realization.c.mapv(|x| Complex64::new(x, 0.0));
    let mut modes = Vec::new();
    for (idx, &lam) in eigvals.iter().enumerate() {
        if !(lam.im > 0.0 && lam.re < 0.0) {
            continue;
        }
        let mag = lam.norm();
        let zeta = -lam.re / mag;
        if !(zeta > 0.0 && zeta < 1.0) {
            continue;
        }
        let f = mag / (2.0 * std::f64::consts::PI);
        if f < low || f > high {
            continue;
        }
        let v = eigvecs.column(idx).to_owned();
        let shape = c_cplx.dot(&v);
        modes.push(Mode::from_pole(lam, shape)?);
    }
    Ok(ModeSet::new(
        modes,
        realization.order(),
        format!("extracted k={}", realization.order()),
    ))
}

/// One matched (reference, candidate) mode pair.
#[derive(Debug, Clone)]
pub struct ModePair {
    pub reference: usize,
    pub candidate: usize,
    /// Signed relative frequency deviation in percent, (f_cand − f_ref)/f_ref.
    pub freq_err_pct: f64,
    /// Signed relative damping deviation in percent.
    pub damping_err_pct: f64,
    pub mac: f64,
}

/// Result of pairing a candidate set against a reference set.
#[derive(Debug, Clone)]
pub struct MatchReport {
    pub pairs: Vec<ModePair>,
    pub unmatched_reference: Vec<usize>,
    pub unmatched_candidates: Vec<usize>,
}

/// Greedy pairing by ascending reference frequency: each reference mode takes
/// the unpaired candidate within `freq_window_pct` of its frequency that
/// maximizes MAC. Modes left over on either side are reported unmatched.
pub fn match_modes(
    candidates: &ModeSet,
    reference: &ModeSet,
    freq_window_pct: f64,
) -> Result<MatchReport> {
    if !(freq_window_pct > 0.0) {
        return Err(Error::Config(format!(
            "frequency window must be > 0, got {freq_window_pct}"
        )));
    }
    let mut taken = vec![false; candidates.len()];
    let mut pairs = Vec::new();
    let mut unmatched_reference = Vec::new();
    for (ri, rmode) in reference.modes.iter().enumerate() {
        let fr = rmode.natural_frequency_hz;
        let mut best: Option<(usize, f64)> = None;
        for (ci, cmode) in candidates.modes.iter().enumerate() {
            if taken[ci] {
                continue;
            }
            let df = (cmode.natural_frequency_hz - fr).abs() / fr * 100.0;
            if df > freq_window_pct {
                continue;
            }
            let m = mac(&cmode.shape, &rmode.shape)?;
            if best.map_or(true, |(_, bm)| m > bm) {
                best = Some((ci, m));
            }
        }
        match best {
            Some((ci, m)) => {
                taken[ci] = true;
                let cmode = &candidates.modes[ci];
                pairs.push(ModePair {
                    reference: ri,
                    candidate: ci,
                    freq_err_pct: (cmode.natural_frequency_hz - fr) / fr * 100.0,
                    damping_err_pct: (cmode.damping_ratio - rmode.damping_ratio)
                        / rmode.damping_ratio
                        * 100.0,
                    mac: m,
                });
            }
            None => unmatched_reference.push(ri),
        }
    }
    let unmatched_candidates = (0..candidates.len()).filter(|&i| !taken[i]).collect();
    Ok(MatchReport {
        pairs,
        unmatched_reference,
        unmatched_candidates,
    })
}
