//! Generative invariants: random modal models feed the pencil pipeline and
//! the claimed algebraic identities must hold regardless of the draw.

use loewner_modal::beam::{assemble_beam, BeamModel};
use loewner_modal::loewner::{
    build_loewner_pencil, partition_data, real_transform, sylvester_residuals, IlfEngine,
    TransformMode, PINV_REL_TOL,
};
use loewner_modal::modal::{extract_modes, mac};
use loewner_modal::synth::{ModalModel, RandomModelSpec};
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Solve};
use num_complex::Complex64;
use proptest::prelude::*;

fn random_model(seed: u64, n_modes: usize, p: usize, m: usize) -> ModalModel {
    let spec = RandomModelSpec {
        n_modes,
        n_outputs: p,
        n_inputs: m,
        freq_range_hz: (5.0, 90.0),
        min_gap_hz: 3.0,
        zeta_range: (0.01, 0.06),
    };
    ModalModel::random(&spec, seed).unwrap()
}

/// Eigenvalues of pinv(L)·Ls for a square pencil, complex or real.
fn pencil_eigenvalues(
    ll: &Array2<Complex64>,
    lls: &Array2<Complex64>,
) -> Vec<Complex64> {
    let n = ll.nrows();
    let mut ac = Array2::<Complex64>::zeros((n, n));
    for j in 0..n {
        let col = lls.column(j).to_owned();
        let x = ll.solve(&col).unwrap();
        ac.column_mut(j).assign(&x);
    }
    let (vals, _) = ac.eig().unwrap();
    vals.to_vec()
}

/// Greedy nearest-neighbor pairing of two eigenvalue sets; returns the worst
/// relative distance over the pairing. Lexicographic sorting would mispair
/// conjugate partners whose real parts differ only by rounding.
fn worst_eigenvalue_drift(before: &[Complex64], after: &[Complex64]) -> f64 {
    assert_eq!(before.len(), after.len());
    let mut used = vec![false; after.len()];
    let mut worst = 0.0_f64;
    for a in before {
        let (j, dist) = after
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, b)| (j, (a - b).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(dist / a.norm().max(1.0));
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 10,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    /// Noiseless rational data satisfies both Sylvester equations.
    #[test]
    fn sylvester_residuals_vanish_on_noiseless_pencils(
        seed in 0u64..10_000,
        n_modes in 2usize..6,
        p in 1usize..4,
        m in 1usize..3,
    ) {
        let model = random_model(seed, n_modes, p, m);
        let freqs = Array1::linspace(2.0, 110.0, 40);
        let frf = model.exact_frf(&freqs).unwrap();
        let data = partition_data(&frf, seed ^ 0x9e37_79b9).unwrap();
        let pencil = build_loewner_pencil(&data).unwrap();
        let (r_l, r_ls) = sylvester_residuals(&pencil, &data).unwrap();
        prop_assert!(r_l <= 1e-10, "Loewner residual {r_l}");
        prop_assert!(r_ls <= 1e-10, "shifted residual {r_ls}");
    }

    /// The real transform is a unitary congruence: generalized eigenvalues
    /// of a square (Ls, L) pair are preserved.
    #[test]
    fn real_transform_preserves_pencil_eigenvalues(
        seed in 0u64..10_000,
        n_modes in 2usize..5,
    ) {
        let model = random_model(seed, n_modes, 3, 2);
        // As many data points as the model order: square, regular pencil.
        let freqs = Array1::linspace(4.0, 100.0, 2 * n_modes);
        let frf = model.exact_frf(&freqs).unwrap();
        let data = partition_data(&frf, seed.wrapping_mul(31)).unwrap();
        let pencil = build_loewner_pencil(&data).unwrap();
        let real = real_transform(&pencil, &data, TransformMode::Vectorized).unwrap();

        let before = pencil_eigenvalues(&pencil.ll, &pencil.lls);
        let after = pencil_eigenvalues(&real.ll, &real.lls);
        let drift = worst_eigenvalue_drift(&before, &after);
        prop_assert!(drift <= 1e-9, "eigenvalue drift {drift}");
    }

    /// Structured row/column mixing equals the explicit block-diagonal
    /// transform matrices to near machine precision.
    #[test]
    fn vectorized_and_loop_transforms_agree(
        seed in 0u64..10_000,
        n_modes in 2usize..5,
        p in 1usize..4,
        m in 1usize..3,
    ) {
        let model = random_model(seed, n_modes, p, m);
        let freqs = Array1::linspace(3.0, 105.0, 24);
        let frf = model.exact_frf(&freqs).unwrap();
        let data = partition_data(&frf, seed ^ 0x51ed).unwrap();
        let pencil = build_loewner_pencil(&data).unwrap();
        let fast = real_transform(&pencil, &data, TransformMode::Vectorized).unwrap();
        let slow = real_transform(&pencil, &data, TransformMode::LoopBaseline).unwrap();
        for (name, a, b) in [
            ("L", &fast.ll, &slow.ll),
            ("Ls", &fast.lls, &slow.lls),
            ("V", &fast.v, &slow.v),
            ("W", &fast.w, &slow.w),
        ] {
            let scale = a.iter().map(|x| x.norm()).fold(0.0_f64, f64::max).max(1.0);
            let diff = (a - b).iter().map(|x| x.norm()).fold(0.0_f64, f64::max);
            prop_assert!(diff / scale <= 1e-12, "{name} mismatch {}", diff / scale);
        }
    }

    /// MAC is bounded, reflexive, symmetric, and scale-invariant.
    #[test]
    fn mac_bounds_symmetry_and_scale_invariance(
        re in proptest::collection::vec(-5.0f64..5.0, 6),
        im in proptest::collection::vec(-5.0f64..5.0, 6),
        scale_re in -3.0f64..3.0,
        scale_im in -3.0f64..3.0,
    ) {
        let a = Array1::from_iter(
            re.iter().take(3).zip(im.iter().take(3)).map(|(&x, &y)| Complex64::new(x, y)),
        );
        let b = Array1::from_iter(
            re.iter().skip(3).zip(im.iter().skip(3)).map(|(&x, &y)| Complex64::new(x, y)),
        );
        prop_assume!(a.iter().map(|x| x.norm_sqr()).sum::<f64>() > 1e-6);
        prop_assume!(b.iter().map(|x| x.norm_sqr()).sum::<f64>() > 1e-6);
        let alpha = Complex64::new(scale_re, scale_im);
        prop_assume!(alpha.norm() > 1e-3);

        let m_ab = mac(&a, &b).unwrap();
        let m_ba = mac(&b, &a).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&m_ab), "out of bounds: {m_ab}");
        prop_assert!((m_ab - m_ba).abs() <= 1e-12, "asymmetric: {m_ab} vs {m_ba}");
        prop_assert!((mac(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
        let scaled = a.mapv(|x| alpha * x);
        prop_assert!((mac(&scaled, &b).unwrap() - m_ab).abs() <= 1e-9);
    }

    /// A realization of order k carries at most floor(k/2) underdamped
    /// modes, whatever the data.
    #[test]
    fn extracted_mode_count_bounded_by_half_order(
        seed in 0u64..10_000,
        n_modes in 3usize..6,
        k_half in 1usize..4,
    ) {
        let model = random_model(seed, n_modes, 2, 2);
        let freqs = Array1::linspace(2.0, 110.0, 30);
        let frf = model.exact_frf(&freqs).unwrap();
        let data = partition_data(&frf, seed ^ 0xabcd).unwrap();
        let pencil = build_loewner_pencil(&data).unwrap();
        let real = real_transform(&pencil, &data, TransformMode::Vectorized).unwrap();
        let k = 2 * k_half;
        let engine = IlfEngine::from_pencil(&real, k, PINV_REL_TOL).unwrap();
        let realization = engine.realize(k).unwrap();
        let modes = extract_modes(&realization, (1.0, 130.0)).unwrap();
        prop_assert!(
            modes.len() <= k / 2,
            "{} modes from order {k}",
            modes.len()
        );
    }
}

/// Oracle shapes are mass-orthonormal in the restricted coordinates.
#[test]
fn beam_modal_basis_is_mass_orthonormal() {
    let system = assemble_beam(&BeamModel::default()).unwrap();
    let (mt, _, _) = system.translational_system();
    let (_, phi) = system.modal_basis().unwrap();
    let gram = phi.t().dot(&mt).dot(&phi);
    let n = gram.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[[i, j]] - target).abs());
        }
    }
    assert!(worst <= 1e-10, "Gram deviation {worst:.3e}");
}
