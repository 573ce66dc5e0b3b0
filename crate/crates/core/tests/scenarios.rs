use ndarray::Array2;
use projgate_core::baselines::{it_trim, ItConfig};
use projgate_core::estimators::{trimmed_pca, weighted_covariance};
use projgate_core::rng::{RngStream, DATA};
use projgate_core::rt::{select_subsample, RtConfig};
use projgate_core::simgen::{gen_multivariate, FunctionalCase, FunctionalGenerator, ScenarioSpec};
use projgate_core::{Grid, ObservationSet};
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn far_row_is_trimmed_first_for_every_seed() {
    let mut rng = RngStream::new(11, "far-row").rng();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < 99 {
        let p = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        if p[0] * p[0] + p[1] * p[1] <= 0.25 {
            rows.push(p.to_vec());
        }
    }
    rows.push(vec![1e3, 0.0]);
    let data = ObservationSet::from_rows(&rows).unwrap();
    for seed in 0..50 {
        let cfg = RtConfig {
            alpha: 0.1,
            seed,
            ..RtConfig::default()
        };
        let r = select_subsample(&data, &cfg).unwrap();
        assert_eq!(
            r.trimmed.first().map(|t| t.trimmed_index),
            Some(99),
            "seed {seed}"
        );
        assert_eq!(r.weights[99], 0);
        assert!(r.trimmed.len() <= 10);
    }
}

#[test]
fn functional_noise_has_the_stated_covariance() {
    let generator = FunctionalGenerator::new(FunctionalCase::A, Grid::unit_interval()).unwrap();
    let x = generator
        .generate(10_000, 0.0, &RngStream::new(5, DATA))
        .unwrap();
    let noise = x.values() - &generator.true_mean();
    let col = |j: usize| noise.column(j).to_owned();
    // t = 0.2 and t = 0.5 sit on grid points 20 and 50
    let (a, b) = (col(20), col(50));
    let var = a.mapv(|v| v * v).mean().unwrap();
    assert!((var - 0.3).abs() <= 0.03, "variance {var}");
    let cov = (&a * &b).mean().unwrap();
    let want = 0.3 * (-1.0f64).exp();
    assert!(
        (cov - want).abs() <= 0.15 * want,
        "lag covariance {cov} vs {want}"
    );
}

#[test]
fn uncontaminated_multivariate_sample_is_standard_normal() {
    let spec = ScenarioSpec::multivariate(2000, 5, 0.0, 20.0);
    let x = gen_multivariate(&spec, &RngStream::new(8, DATA)).unwrap();
    let cov = weighted_covariance(&x, &vec![1; 2000]).unwrap();
    let err = &cov - &Array2::<f64>::eye(5);
    assert!(err.iter().all(|v| v.abs() <= 0.15), "{cov}");
    let pca = trimmed_pca(&x, &vec![1; 2000], 5).unwrap();
    assert!(
        pca.eigenvalues.iter().all(|l| (l - 1.0).abs() <= 0.25),
        "{:?}",
        pca.eigenvalues
    );
}

#[test]
fn pca_finds_the_stretched_axis() {
    let mut rng = RngStream::new(2, "stretch").rng();
    let values = Array2::from_shape_fn((500, 3), |(_, j)| {
        let z: f64 = rng.sample(StandardNormal);
        if j == 0 {
            10.0 * z
        } else {
            z
        }
    });
    let x = ObservationSet::new(values).unwrap();
    let pca = trimmed_pca(&x, &vec![1; 500], 1).unwrap();
    assert!(pca.components[[0, 0]].abs() > 0.99);
    assert!(pca.eigenvalues[0] > 80.0);
}

#[test]
fn inter_distance_trimming_strips_the_ring_before_the_core() {
    let mut rng = RngStream::new(3, "ring").rng();
    let mut values = Array2::<f64>::zeros((100, 2));
    for i in 0..80 {
        values[[i, 0]] = rng.sample(StandardNormal);
        values[[i, 1]] = rng.sample(StandardNormal);
    }
    for i in 80..100 {
        let angle = std::f64::consts::TAU * (i - 80) as f64 / 20.0;
        values[[i, 0]] = 8.0 * angle.cos();
        values[[i, 1]] = 8.0 * angle.sin();
    }
    let x = ObservationSet::new(values).unwrap();
    let mut ring = it_trim(
        &x,
        &ItConfig {
            alpha_radius: 0.5,
            beta: 0.2,
        },
    )
    .unwrap()
    .trimmed_indices();
    ring.sort_unstable();
    assert_eq!(ring, (80..100).collect::<Vec<_>>());
    let deeper = it_trim(
        &x,
        &ItConfig {
            alpha_radius: 0.5,
            beta: 0.4,
        },
    )
    .unwrap();
    let idx = deeper.trimmed_indices();
    assert_eq!(idx.len(), 40);
    assert!((80..100).all(|i| idx.contains(&i)));
    assert_eq!(idx.iter().filter(|&&i| i < 80).count(), 20);
    // the ring goes first
    assert!(idx[..20].iter().all(|&i| i >= 80));
}
