//! Property tests for the structural invariants of each module.

use lfpp::baselines::{count_embedding, pmi_matrix};
use lfpp::harness::ModelGenerator;
use lfpp::learn::{kmeans_objective, lloyd, train_logistic, LogisticConfig};
use lfpp::model::{Group, ModelSpec, TransferBank, TransferKernel};
use lfpp::simulate::{conditional_intensity, sample_latent, simulate_patient};
use lfpp::spectral::fourier_transform_raw;
use lfpp::{
    estimate_cross_covariance, fourier_transform_curve, hermitian_eigenvalues, seeded_rng, separation_diagnostic,
    EstimatorConfig, EventSequence, FourierEigenEmbedder, PopulationOracle, SpectralConfig,
};
use proptest::prelude::*;

fn kernel_strategy() -> impl Strategy<Value = TransferKernel> {
    (0..TransferKernel::ALL.len()).prop_map(|i| TransferKernel::ALL[i])
}

/// A short simulated sequence with a few dozen to a couple hundred events.
fn small_sequence(seed: u64, d: usize, t: f64) -> EventSequence {
    let model = ModelGenerator { d, delta: 0.4, ..Default::default() }.build(seed).unwrap();
    let mut rng = seeded_rng(seed, 1);
    simulate_patient(&model, (seed % 2) as usize, t, 6.0, &mut rng).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sequences_reject_unsorted_or_out_of_window(
        mut times in prop::collection::vec(0.0f64..10.0, 2..20),
        extra in 10.0f64..20.0,
    ) {
        times.sort_by(f64::total_cmp);
        prop_assert!(EventSequence::new(10.0, vec![times.clone()]).is_ok());
        let mut outside = times.clone();
        outside.push(extra + 1e-9);
        prop_assert!(EventSequence::new(10.0, vec![outside]).is_err());
        if times.first() != times.last() {
            let mut reversed = times.clone();
            reversed.reverse();
            prop_assert!(EventSequence::new(10.0, vec![reversed.clone()]).is_err());
            let fixed = EventSequence::from_unsorted(10.0, vec![reversed]).unwrap();
            prop_assert_eq!(fixed.component(0), &times[..]);
        }
    }

    #[test]
    fn priors_must_sum_to_one(p in 0.0f64..1.0, eps in prop_oneof![Just(0.0), 1e-9f64..1e-3]) {
        let bank = TransferBank::new(vec![vec![0.2], vec![0.3]], TransferKernel::Exp4).unwrap();
        let groups = vec![
            Group { label: "a".into(), mu: vec![1.0] },
            Group { label: "b".into(), mu: vec![2.0] },
        ];
        let spec = ModelSpec::new(bank, vec![0.1, 0.1], groups, vec![p, 1.0 - p + eps]);
        prop_assert_eq!(spec.is_ok(), eps == 0.0);
    }

    #[test]
    fn kernels_vanish_outside_support(kernel in kernel_strategy(), t in -50.0f64..50.0) {
        let bank = TransferBank::new(vec![vec![1.0]], kernel).unwrap();
        let v = bank.kernel_value(t);
        if t < 0.0 || t >= bank.support_radius {
            prop_assert_eq!(v, 0.0);
        }
        prop_assert!(v <= kernel.sup());
    }

    #[test]
    fn intensity_stays_below_thinning_envelope(
        seed in 0u64..1000,
        kernel in kernel_strategy(),
        t in 0.0f64..30.0,
    ) {
        let mut rng = seeded_rng(seed, 0);
        let bank = TransferBank::random_uniform(3, 2, kernel, 0.0, 0.5, &mut rng).unwrap();
        let model = ModelSpec::new(
            bank,
            vec![0.1; 3],
            vec![
                Group { label: "0".into(), mu: vec![1.0, 2.0] },
                Group { label: "1".into(), mu: vec![2.0, 1.0] },
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let latent = sample_latent(&[1.0, 2.0], 30.0, &mut rng).unwrap();
        let r = model.transfer.support_radius;
        for j in 0..3 {
            let envelope = model.baseline[j]
                + (0..2)
                    .map(|l| {
                        let recent = latent.component(l).iter().filter(|&&u| u < t && u > t - r).count();
                        model.transfer.coefficient(j, l) * kernel.sup() * recent as f64
                    })
                    .sum::<f64>();
            prop_assert!(conditional_intensity(&model, &latent, j, t) <= envelope * (1.0 + 1e-12));
        }
    }

    #[test]
    fn estimator_is_exactly_swap_symmetric(seed in 0u64..500, d in 1usize..5, h in 0.2f64..1.5) {
        let seq = small_sequence(seed, d, 20.0);
        let curve = estimate_cross_covariance(&seq, &EstimatorConfig::default().with_bandwidth(h)).unwrap();
        prop_assert_eq!(curve.swap_symmetry_defect(), 0.0);
    }

    #[test]
    fn spectral_matrices_are_hermitian(seed in 0u64..500, d in 1usize..5, xi in 0.05f64..2.0) {
        let seq = small_sequence(seed, d, 20.0);
        let curve = estimate_cross_covariance(&seq, &EstimatorConfig::default()).unwrap();
        prop_assert!(fourier_transform_raw(&curve, xi).unwrap().hermitian_defect() < 1e-10);
        prop_assert_eq!(fourier_transform_curve(&curve, xi).unwrap().hermitian_defect(), 0.0);
    }

    #[test]
    fn embeddings_ignore_code_relabelling(seed in 0u64..500, shift in 1usize..4) {
        let d = 4;
        let seq = small_sequence(seed, d, 25.0);
        let perm: Vec<usize> = (0..d).map(|j| (j + shift) % d).collect();
        let embedder = FourierEigenEmbedder::new(EstimatorConfig::default(), SpectralConfig { frequency: 0.3, embed_dim: 2 }).unwrap();
        let a = embedder.embed(&seq).unwrap();
        let b = embedder.embed(&seq.permute(&perm).unwrap()).unwrap();
        prop_assert!(a.distance(&b) < 1e-10);
    }

    #[test]
    fn population_matrices_are_psd_and_separated(
        seed in 0u64..10_000,
        d in 3usize..20,
        k in 1usize..4,
        kernel in kernel_strategy(),
        xi in 0.05f64..1.5,
    ) {
        let mut rng = seeded_rng(seed, 0);
        let bank = TransferBank::random_uniform(d, k, kernel, 0.0, 0.5, &mut rng).unwrap();
        let mu = |s: u64| -> Vec<f64> { (0..k).map(|l| 0.2 + ((s * 31 + l as u64 * 17) % 28) as f64 / 10.0).collect() };
        let model = ModelSpec::new(
            bank,
            vec![0.1; d],
            vec![Group { label: "0".into(), mu: mu(seed) }, Group { label: "1".into(), mu: mu(seed + 7) }],
            vec![0.5, 0.5],
        )
        .unwrap();
        let oracle = PopulationOracle::new(&model, xi).unwrap();
        for s in &oracle.spectral {
            let min = hermitian_eigenvalues(s).unwrap().last().copied().unwrap();
            prop_assert!(min >= -1e-10);
        }
        prop_assert!(separation_diagnostic(&oracle, "0", "1").unwrap().holds);
    }

    #[test]
    fn pmi_symmetric_and_counts_total(seed in 0u64..500, d in 1usize..6, window in 0.5f64..5.0) {
        let seq = small_sequence(seed, d, 20.0);
        let m = pmi_matrix(&seq, window, None).unwrap();
        prop_assert_eq!(&m, &m.transpose());
        prop_assert_eq!(count_embedding(&seq).total() as usize, seq.total_events());
    }

    #[test]
    fn lloyd_objective_never_increases(
        points in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 6..30),
    ) {
        let init = vec![points[0].clone(), points[points.len() - 1].clone()];
        let mut previous = f64::INFINITY;
        for rounds in 1..8 {
            let r = lloyd(&points, init.clone(), rounds);
            let objective = kmeans_objective(&points, &r.assignments, &r.centers);
            prop_assert!(objective <= previous + 1e-9);
            previous = objective;
            if r.converged {
                break;
            }
        }
    }

    #[test]
    fn logistic_converges_to_tolerance(
        rows in prop::collection::vec((prop::collection::vec(-3.0f64..3.0, 2), any::<bool>()), 8..40),
    ) {
        let (x, mut y): (Vec<Vec<f64>>, Vec<bool>) = rows.into_iter().unzip();
        y[0] = true;
        y[1] = false;
        let cfg = LogisticConfig::default();
        let model = train_logistic(&x, &y, &cfg).unwrap();
        prop_assert!(model.grad_norm <= cfg.tol);
    }
}
