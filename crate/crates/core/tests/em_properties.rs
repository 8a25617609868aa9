mod common;

use common::{joint_gaussian_log_density, quadrature_posterior, rel_frobenius_sym, to_na};
use plda::{
    accumulate_stats, class_mean_log_likelihood, e_step_class, em_train, generate, inverse_spd, log_likelihood, m_step,
    random_spd, Init, LabeledDataset, PldaModel, PosteriorSolver, SymMatrix, SynthSpec, TrainConfig, Variant,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn posterior_matches_quadrature() {
    let model = PldaModel::new(vec![0.0], SymMatrix::from_diagonal(&[1.7]), SymMatrix::from_diagonal(&[0.6])).unwrap();
    let post = e_step_class(&model, &[0.9], 3).unwrap();
    let (mean, var) = quadrature_posterior(1.7, 0.6, 3, 0.9);
    assert!((post.w[0] - mean).abs() <= 1e-6, "{} vs {mean}", post.w[0]);
    assert!((post.phi_hat.get(0, 0) - var).abs() <= 1e-6);
}

fn random_dataset(seed: u64, dim: usize, classes: usize, max_n: usize) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = (0..classes).map(|_| rng.random_range(1..=max_n)).collect();
    generate(&SynthSpec {
        mu: (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect(),
        phi_b: random_spd(dim, seed ^ 0xb0b),
        phi_w: random_spd(dim, seed ^ 0xe0e),
        samples_per_class: counts,
        seed,
    })
    .unwrap()
}

#[test]
fn log_likelihood_matches_joint_gaussian() {
    for seed in 0..6 {
        let data = random_dataset(seed, 2, 2, 3);
        let stats = accumulate_stats(&data).unwrap();
        let model = PldaModel::new(vec![0.3, -0.1], random_spd(2, 50 + seed), random_spd(2, 60 + seed)).unwrap();
        let ours = log_likelihood(&model, &stats).unwrap();
        let oracle = joint_gaussian_log_density(&data, model.mu(), model.phi_b(), model.phi_w());
        assert!((ours - oracle).abs() <= 1e-8, "seed {seed}: {ours} vs {oracle}");
    }
}

#[test]
fn class_mean_log_likelihood_is_the_mean_marginal() {
    let data = random_dataset(9, 3, 4, 5);
    let stats = accumulate_stats(&data).unwrap();
    let model = PldaModel::new(stats.mu.clone(), random_spd(3, 1), random_spd(3, 2)).unwrap();
    let mut oracle = 0.0;
    for c in &stats.classes {
        let cov = to_na(model.phi_b()) + to_na(model.phi_w()) / c.n as f64;
        let m = nalgebra::DVector::from_column_slice(&c.centered_mean);
        let chol = cov.clone().cholesky().unwrap();
        let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        oracle -= 0.5 * (3.0 * (2.0 * std::f64::consts::PI).ln() + logdet + m.dot(&chol.solve(&m)));
    }
    let ours = class_mean_log_likelihood(&model, &stats).unwrap();
    assert!((ours - oracle).abs() <= 1e-10);
}

fn monotonicity_dataset(seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = (0..50).map(|_| rng.random_range(2..=30)).collect();
    generate(&SynthSpec {
        mu: vec![0.5; 8],
        phi_b: random_spd(8, 100 + seed),
        phi_w: random_spd(8, 200 + seed),
        samples_per_class: counts,
        seed,
    })
    .unwrap()
}

#[test]
fn kaldi_variant_never_decreases_full_likelihood() {
    for seed in 0..4 {
        for init in [Init::DataSplit, Init::Identity] {
            let config = TrainConfig { iterations: 15, variant: Variant::Kaldi, init, ..Default::default() };
            let (_, report) = em_train(&monotonicity_dataset(seed), &config).unwrap();
            assert!(report.jitter_events.is_empty());
            for pair in report.iterations.windows(2) {
                let (a, b) = (pair[0].log_likelihood, pair[1].log_likelihood);
                assert!(b >= a - 1e-8 * a.abs(), "seed {seed} {init}: {a} -> {b}");
            }
        }
    }
}

#[test]
fn paper_variant_ascends_class_mean_likelihood_only() {
    let mut full_decreased = false;
    for seed in 0..4 {
        let config = TrainConfig { iterations: 15, variant: Variant::Paper, ..Default::default() };
        let (_, report) = em_train(&monotonicity_dataset(seed), &config).unwrap();
        for pair in report.iterations.windows(2) {
            let (a, b) = (pair[0].class_mean_log_likelihood, pair[1].class_mean_log_likelihood);
            assert!(b >= a - 1e-8 * a.abs(), "seed {seed}: {a} -> {b}");
            full_decreased |= pair[1].log_likelihood < pair[0].log_likelihood;
        }
    }
    // The paper update ignores the within-class scatter, so the full
    // sample-level likelihood is not its objective.
    assert!(full_decreased);
}

#[test]
fn scale_equivariance() {
    let data = random_dataset(21, 4, 40, 12);
    let c = 3.5;
    let scaled = data.map_vectors(|v| v.iter().map(|x| x * c).collect());
    for variant in [Variant::Kaldi, Variant::Paper] {
        let config = TrainConfig { iterations: 8, variant, ..Default::default() };
        let (a, _) = em_train(&data, &config).unwrap();
        let (b, _) = em_train(&scaled, &config).unwrap();
        let c2 = c * c;
        assert!(rel_frobenius_sym(&b.phi_b().scale(1.0 / c2), a.phi_b()) <= 1e-6);
        assert!(rel_frobenius_sym(&b.phi_w().scale(1.0 / c2), a.phi_w()) <= 1e-6);
    }
}

#[test]
fn m_step_fixed_point_at_truth() {
    let phi_b = random_spd(3, 77);
    let phi_w = random_spd(3, 78);
    let data = generate(&SynthSpec::uniform(vec![0.0; 3], phi_b.clone(), phi_w.clone(), 20_000, 5, 4)).unwrap();
    let stats = accumulate_stats(&data).unwrap();
    let solver = PosteriorSolver::new(&phi_b, &phi_w, 0.0).unwrap();
    let posts: Vec<_> = stats.classes.iter().map(|c| solver.posterior(&c.centered_mean, c.n).unwrap()).collect();
    let means: Vec<Vec<f64>> = stats.classes.iter().map(|c| c.centered_mean.clone()).collect();
    let out = m_step(&posts, &means, &stats, Variant::Kaldi, 0.0).unwrap();
    assert!(rel_frobenius_sym(&out.phi_b, &phi_b) <= 0.05);
    assert!(rel_frobenius_sym(&out.phi_w, &phi_w) <= 0.05);
}

#[test]
fn training_is_deterministic() {
    let data = random_dataset(5, 3, 20, 6);
    let config = TrainConfig::default();
    let (a, ra) = em_train(&data, &config).unwrap();
    let (b, rb) = em_train(&data, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn precision_identity(dim in prop::sample::select(vec![1usize, 2, 8, 32]),
                          n in prop::sample::select(vec![1usize, 2, 17, 1000]),
                          seed in any::<u64>()) {
        let phi_b = random_spd(dim, seed);
        let phi_w = random_spd(dim, seed.wrapping_add(1));
        let model = PldaModel::new(vec![0.0; dim], phi_b.clone(), phi_w.clone()).unwrap();
        let post = e_step_class(&model, &vec![0.5; dim], n).unwrap();
        let lhs = inverse_spd(&post.phi_hat).unwrap();
        let rhs = inverse_spd(&phi_b).unwrap().add(&inverse_spd(&phi_w).unwrap().scale(n as f64));
        let err = lhs.sub(&rhs).max_abs() / rhs.max_abs();
        prop_assert!(err <= 1e-9, "relative error {}", err);
    }

    #[test]
    fn both_variants_share_phi_b(seed in 0u64..1000) {
        let data = random_dataset(seed, 3, 6, 5);
        let one = |variant| TrainConfig { iterations: 1, variant, ..Default::default() };
        let (a, _) = em_train(&data, &one(Variant::Paper)).unwrap();
        let (b, _) = em_train(&data, &one(Variant::Kaldi)).unwrap();
        prop_assert_eq!(a.phi_b(), b.phi_b());
    }
}
