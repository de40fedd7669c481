//! Synthetic modal models with known ground truth.
//!
//! A [`ModalModel`] is a bank of independent single-degree-of-freedom
//! oscillators coupled to the outside world by real shape and participation
//! matrices. It provides three things an identification study needs: exact
//! frequency response values, exactly sampled time responses (the held-input
//! discretization is evaluated in closed form, so no integration error), and
//! the true mode list to grade results against.

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::frf::{EstimatorKind, FrequencyResponseSet, TimeHistorySet};
use crate::modal::{Mode, ModeSet};

/// Parameters for [`ModalModel::random`].
#[derive(Debug, Clone)]
pub struct RandomModelSpec {
    pub n_modes: usize,
    pub n_outputs: usize,
    pub n_inputs: usize,
    /// Natural frequencies are drawn uniformly inside this range...
    pub freq_range_hz: (f64, f64),
    /// ...with at least this spacing between neighbours.
    pub min_gap_hz: f64,
    /// Damping ratios are drawn uniformly inside this range.
    pub zeta_range: (f64, f64),
}

/// Bank of lightly damped oscillators with random coupling.
#[derive(Debug, Clone)]
pub struct ModalModel {
    /// Natural frequencies, ascending.
    pub freqs_hz: Array1<f64>,
    pub zetas: Array1<f64>,
    /// Output shapes, one column per mode (p × n).
    pub shapes: Array2<f64>,
    /// Input participation, one row per mode (n × m).
    pub participation: Array2<f64>,
}

impl ModalModel {
    /// Draws a model from `spec`, deterministically in `seed`.
    ///
    /// Frequencies use the spacing construction: n uniforms on the interval
    /// shrunk by (n−1)·gap, sorted, then shifted apart by i·gap — uniform on
    /// the gap-constrained set without rejection.
    pub fn random(spec: &RandomModelSpec, seed: u64) -> Result<ModalModel> {
        let n = spec.n_modes;
        let (lo, hi) = spec.freq_range_hz;
        let gap = spec.min_gap_hz;
        if n == 0 || spec.n_outputs == 0 || spec.n_inputs == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if !(lo > 0.0 && hi > lo) || gap < 0.0 {
            return Err(Error::Config(format!(
                "invalid frequency range [{lo}, {hi}] / gap {gap}"
            )));
        }
        let squeeze = (n - 1) as f64 * gap;
        if hi - lo <= squeeze {
            return Err(Error::Config(format!(
                "{n} modes with {gap} Hz spacing do not fit in [{lo}, {hi}] Hz"
            )));
        }
        let (z_lo, z_hi) = spec.zeta_range;
        if !(z_lo > 0.0 && z_hi < 1.0 && z_hi >= z_lo) {
            return Err(Error::Config(format!(
                "damping range ({z_lo}, {z_hi}) outside (0, 1)"
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut base: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi - squeeze)).collect();
        base.sort_by(f64::total_cmp);
        let freqs = Array1::from_iter(
            base.iter()
                .enumerate()
                .map(|(i, &f)| f + i as f64 * gap),
        );
        let zetas = Array1::from_iter((0..n).map(|_| rng.gen_range(z_lo..z_hi)));
        let shapes = Array2::from_shape_fn((spec.n_outputs, n), |_| {
            StandardNormal.sample(&mut rng)
        });
        let participation =
            Array2::from_shape_fn((n, spec.n_inputs), |_| StandardNormal.sample(&mut rng));
        Ok(ModalModel {
            freqs_hz: freqs,
            zetas,
            shapes,
            participation,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.freqs_hz.len()
    }

    /// Minimal state-space order representing the model.
    pub fn order(&self) -> usize {
        2 * self.n_modes()
    }

    pub fn n_outputs(&self) -> usize {
        self.shapes.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.participation.ncols()
    }

    /// The true mode list.
    pub fn modes(&self) -> ModeSet {
        let modes = (0..self.n_modes())
            .map(|i| {
                let wn = 2.0 * std::f64::consts::PI * self.freqs_hz[i];
                let zeta = self.zetas[i];
                let pole = Complex64::new(-zeta * wn, wn * (1.0 - zeta * zeta).sqrt());
                let shape = self.shapes.column(i).mapv(|x| Complex64::new(x, 0.0));
                Mode::from_pole(pole, shape).expect("pole is nonzero by construction")
            })
            .collect();
        ModeSet::new(modes, self.order(), "synthetic")
    }

    /// Exact receptance H(jω) = Σ φᵢ·κᵢ / (ωᵢ² − ω² + 2jζᵢωᵢω).
    pub fn exact_frf(&self, freqs_hz: &Array1<f64>) -> Result<FrequencyResponseSet> {
        let (p, m) = (self.n_outputs(), self.n_inputs());
        let mut values = Array3::<Complex64>::zeros((p, m, freqs_hz.len()));
        for (k, &f) in freqs_hz.iter().enumerate() {
            let w = 2.0 * std::f64::consts::PI * f;
            for i in 0..self.n_modes() {
                let wn = 2.0 * std::f64::consts::PI * self.freqs_hz[i];
                let den = Complex64::new(wn * wn - w * w, 2.0 * self.zetas[i] * wn * w);
                let g = 1.0 / den;
                for o in 0..p {
                    let so = self.shapes[[o, i]];
                    for q in 0..m {
                        values[[o, q, k]] += g * so * self.participation[[i, q]];
                    }
                }
            }
        }
        FrequencyResponseSet::new(
            freqs_hz.clone(),
            values,
            (0..p).map(|o| format!("out{}", o + 1)).collect(),
            (0..m).map(|q| format!("in{}", q + 1)).collect(),
            EstimatorKind::DirectRatio,
        )
    }

    /// Samples the response to inputs held constant over each sample
    /// interval. Per mode, the two-state transition over one interval is
    /// evaluated in closed form, so the recursion is exact for held inputs.
    pub fn simulate(&self, inputs: &Array2<f64>, fs_hz: f64) -> Result<TimeHistorySet> {
        let (m, t) = inputs.dim();
        if m != self.n_inputs() {
            return Err(Error::Config(format!(
                "{m} input rows for a model with {} inputs",
                self.n_inputs()
            )));
        }
        if fs_hz <= 0.0 {
            return Err(Error::Config(format!("sample rate {fs_hz} must be positive")));
        }
        let h = 1.0 / fs_hz;
        let p = self.n_outputs();
        let mut outputs = Array2::<f64>::zeros((p, t));
        let mut q_hist = Array1::<f64>::zeros(t);
        for i in 0..self.n_modes() {
            let wn = 2.0 * std::f64::consts::PI * self.freqs_hz[i];
            let zeta = self.zetas[i];
            let wd = wn * (1.0 - zeta * zeta).sqrt();
            // x = [q̇, q]: ẋ = A x + b·u with A = [[−2ζω, −ω²], [1, 0]],
            // b = [1, 0]ᵀ. exp(Ah) via the 2×2 closed form, bd = A⁻¹(Ad−I)b.
            let e = (-zeta * wn * h).exp();
            let (c, s) = ((wd * h).cos(), (wd * h).sin());
            let a11 = e * (c - zeta * wn * s / wd);
            let a12 = e * (-wn * wn * s / wd);
            let a21 = e * (s / wd);
            let a22 = e * (c + zeta * wn * s / wd);
            // A⁻¹ = [[0, 1], [−1/ω², −2ζ/ω]] and (Ad − I)b = [a11 − 1, a21]ᵀ:
            let bd_qdot = a21;
            let bd_q = -(a11 - 1.0) / (wn * wn) - 2.0 * zeta / wn * a21;

            // Modal force per sample.
            let part = self.participation.row(i);
            let (mut qdot, mut q) = (0.0f64, 0.0f64);
            for k in 0..t {
                q_hist[k] = q;
                let u: f64 = part
                    .iter()
                    .zip(inputs.column(k))
                    .map(|(&g, &x)| g * x)
                    .sum();
                let qdot_next = a11 * qdot + a12 * q + bd_qdot * u;
                let q_next = a21 * qdot + a22 * q + bd_q * u;
                qdot = qdot_next;
                q = q_next;
            }
            let shape = self.shapes.column(i);
            for o in 0..p {
                let so = shape[o];
                let mut row = outputs.row_mut(o);
                for k in 0..t {
                    row[k] += so * q_hist[k];
                }
            }
        }
        TimeHistorySet::new(
            fs_hz,
            inputs.clone(),
            outputs,
            (0..m).map(|q| format!("in{}", q + 1)).collect(),
            (0..p).map(|o| format!("out{}", o + 1)).collect(),
        )
    }

    /// Unit-variance Gaussian drive on every input, held per sample.
    pub fn white_noise_inputs(&self, n_samples: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((self.n_inputs(), n_samples), |_| {
            StandardNormal.sample(&mut rng)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec_small() -> RandomModelSpec {
        RandomModelSpec {
            n_modes: 4,
            n_outputs: 3,
            n_inputs: 2,
            freq_range_hz: (8.0, 40.0),
            min_gap_hz: 2.0,
            zeta_range: (0.01, 0.03),
        }
    }

    #[test]
    fn random_model_respects_ranges_and_gaps() {
        let model = ModalModel::random(&spec_small(), 42).unwrap();
        for w in model.freqs_hz.windows(2) {
            assert!(w[1] - w[0] >= 2.0 - 1e-9);
        }
        for &f in &model.freqs_hz {
            assert!((8.0..=40.0).contains(&f));
        }
        for &z in &model.zetas {
            assert!((0.01..0.03).contains(&z));
        }
        let again = ModalModel::random(&spec_small(), 42).unwrap();
        assert_eq!(model.freqs_hz, again.freqs_hz);
        assert_eq!(model.shapes, again.shapes);
        let other = ModalModel::random(&spec_small(), 43).unwrap();
        assert!(model.freqs_hz != other.freqs_hz);
    }

    #[test]
    fn dense_mode_sets_are_constructible_without_rejection() {
        let spec = RandomModelSpec {
            n_modes: 42,
            n_outputs: 91,
            n_inputs: 5,
            freq_range_hz: (8.0, 118.0),
            min_gap_hz: 1.5,
            zeta_range: (0.008, 0.025),
        };
        let model = ModalModel::random(&spec, 1).unwrap();
        assert_eq!(model.n_modes(), 42);
        for w in model.freqs_hz.windows(2) {
            assert!(w[1] - w[0] >= 1.5 - 1e-9);
        }
    }

    #[test]
    fn infeasible_spacing_is_rejected() {
        let mut spec = spec_small();
        spec.min_gap_hz = 20.0;
        assert!(ModalModel::random(&spec, 1).is_err());
    }

    #[test]
    fn exact_frf_matches_hand_sum() {
        let model = ModalModel {
            freqs_hz: ndarray::array![10.0],
            zetas: ndarray::array![0.05],
            shapes: ndarray::array![[2.0], [1.0]],
            participation: ndarray::array![[3.0]],
        };
        let grid = ndarray::array![7.0];
        let frf = model.exact_frf(&grid).unwrap();
        let wn = 2.0 * std::f64::consts::PI * 10.0;
        let w = 2.0 * std::f64::consts::PI * 7.0;
        let want = 6.0 / Complex64::new(wn * wn - w * w, 2.0 * 0.05 * wn * w);
        assert_abs_diff_eq!((frf.values[[0, 0, 0]] - want).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            (frf.values[[1, 0, 0]] - want / 2.0).norm(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn held_input_recursion_matches_continuous_step_solution() {
        // A constant input is a held input, so the recursion must agree with
        // the continuous-time step response at every sample, to rounding.
        let model = ModalModel {
            freqs_hz: ndarray::array![6.0],
            zetas: ndarray::array![0.03],
            shapes: ndarray::array![[1.0]],
            participation: ndarray::array![[1.0]],
        };
        let fs = 200.0;
        let t = 400;
        let inputs = Array2::from_elem((1, t), 1.0);
        let th = model.simulate(&inputs, fs).unwrap();
        let wn = 2.0 * std::f64::consts::PI * 6.0;
        let zeta: f64 = 0.03;
        let wd = wn * (1.0 - zeta * zeta).sqrt();
        for k in 0..t {
            let time = k as f64 / fs;
            let e = (-zeta * wn * time).exp();
            let want = (1.0 / (wn * wn))
                * (1.0
                    - e * ((wd * time).cos()
                        + zeta / (1.0 - zeta * zeta).sqrt() * (wd * time).sin()));
            assert_abs_diff_eq!(th.outputs[[0, k]], want, epsilon = 1e-12);
        }
    }

    #[test]
    fn true_mode_list_carries_poles_and_shapes() {
        let model = ModalModel::random(&spec_small(), 7).unwrap();
        let modes = model.modes();
        assert_eq!(modes.len(), 4);
        for (i, mode) in modes.modes.iter().enumerate() {
            assert_abs_diff_eq!(
                mode.natural_frequency_hz,
                model.freqs_hz[i],
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(mode.damping_ratio, model.zetas[i], epsilon = 1e-12);
        }
    }
}
