use ndarray::{Array1, Array2};
use projgate_core::baselines::{it_alpha_radii, it_trim, ItConfig};
use projgate_core::estimators::{
    correlation_from_covariance, trimmed_pca, weighted_covariance, weighted_mean,
};
use projgate_core::geometry::{distance, project_rows};
use projgate_core::geometry::{dot, inner_product, norm, random_unit_direction, DirectionLaw};
use projgate_core::linalg::{frobenius, symmetric_eigen};
use projgate_core::rng::RngStream;
use projgate_core::rt::{
    max_gap, select_subsample, select_subsample_with, DirectionSequence, DirectionSource,
    RandomDirections, RtConfig, ThresholdMode,
};
use projgate_core::stats::sorted;
use projgate_core::{Grid, ObservationSet, UnitDirection};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_rows(seed: u64, n: usize, d: usize, spread: f64) -> Array2<f64> {
    let mut rng = RngStream::new(seed, "fixture").rng();
    Array2::from_shape_fn((n, d), |_| spread * rng.sample::<f64, _>(StandardNormal))
}

/// A contaminated sample: Gaussian core plus a few shifted rows.
fn contaminated(seed: u64, n: usize, d: usize) -> Array2<f64> {
    let mut x = gaussian_rows(seed, n, d, 1.0);
    for i in 0..n / 10 {
        x[[i, 0]] += 12.0;
    }
    x
}

fn random_orthogonal(seed: u64, d: usize) -> Array2<f64> {
    let a = gaussian_rows(seed, d, d, 1.0);
    symmetric_eigen(&(&a + &a.t())).unwrap().vectors
}

fn directions(seed: u64, d: usize, count: usize) -> Vec<UnitDirection> {
    let mut src = RandomDirections::new(seed, d, DirectionLaw::White, None);
    (0..count).map(|_| src.next_direction().unwrap()).collect()
}

fn set(x: Array2<f64>) -> ObservationSet {
    ObservationSet::new(x).unwrap()
}

fn cfg(mode: ThresholdMode, seed: u64) -> RtConfig {
    RtConfig {
        threshold_mode: mode,
        seed,
        maxiter: 30,
        ..RtConfig::default()
    }
}

fn modes() -> impl Strategy<Value = ThresholdMode> {
    prop_oneof![
        Just(ThresholdMode::PaperFixed),
        Just(ThresholdMode::ScaleAdaptive),
        Just(ThresholdMode::NullQuantile),
    ]
}

fn close(a: &Array2<f64>, b: &Array2<f64>, tol: f64) -> bool {
    let scale = a.iter().chain(b.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(b.iter())
        .all(|(x, y)| (x - y).abs() <= tol * scale)
}

#[test]
fn projection_is_a_contraction_on_many_triples() {
    let grid = Grid::unit_interval();
    let mut rng = RngStream::new(9, "triples").rng();
    for t in 0..10_000 {
        let functional = t % 2 == 0;
        let d = if functional { grid.len() } else { 1 + t % 7 };
        let g = functional.then_some(&grid);
        let x = Array1::from_shape_fn(d, |_| 3.0 * rng.sample::<f64, _>(StandardNormal));
        let y = Array1::from_shape_fn(d, |_| rng.gen_range(-4.0..4.0));
        let h = random_unit_direction(&mut rng, d, DirectionLaw::White, g).unwrap();
        let lhs = (inner_product(x.view(), &h, g).unwrap()
            - inner_product(y.view(), &h, g).unwrap())
        .abs();
        let rhs = norm((&x - &y).view(), g).unwrap();
        assert!(lhs <= rhs + 1e-10 * rhs.max(1.0), "{lhs} > {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_product_axioms(
        seed in 0u64..1_000,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        functional in any::<bool>(),
    ) {
        let grid = Grid::uniform(41, 0.0, 2.0).unwrap();
        let g = functional.then_some(&grid);
        let d = if functional { 41 } else { 6 };
        let m = gaussian_rows(seed, 3, d, 1.0);
        let (x, y, z) = (m.row(0), m.row(1), m.row(2));
        let lhs = dot((&x * a + &y * b).view(), z, g).unwrap();
        let rhs = a * dot(x, z, g).unwrap() + b * dot(y, z, g).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
        prop_assert!((dot(x, y, g).unwrap() - dot(y, x, g).unwrap()).abs() < 1e-12);
        let cs = dot(x, y, g).unwrap().abs();
        prop_assert!(cs <= norm(x, g).unwrap() * norm(y, g).unwrap() + 1e-10);
        prop_assert!(dot(x, x, g).unwrap() >= 0.0);
    }

    #[test]
    fn budget_gap_domination_and_monotone_audit(seed in 0u64..10_000, alpha in 0.0f64..0.5, mode in modes()) {
        let x = set(contaminated(seed, 40, 3));
        let c = RtConfig { alpha, ..cfg(mode, seed) };
        let r = select_subsample(&x, &c).unwrap();
        prop_assert!(r.trimmed.len() <= c.budget(40));
        prop_assert_eq!(r.kept.len() + r.trimmed.len(), 40);
        prop_assert_eq!(r.weights.iter().map(|w| *w as usize).sum::<usize>(), r.kept.len());
        for t in &r.trimmed {
            prop_assert!(t.gap >= t.threshold);
            prop_assert_eq!(r.weights[t.trimmed_index], 0);
        }
        let mut distinct = r.trimmed_indices();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(distinct.len(), r.trimmed.len());
        for pair in r.trimmed.windows(2) {
            prop_assert!(pair[0].direction_ordinal < pair[1].direction_ordinal);
        }
        if let Some(last) = r.trimmed.last() {
            prop_assert!(last.direction_ordinal <= r.directions_consumed);
        }
        prop_assert!((r.gamma - r.trimmed.len() as f64 / 40.0).abs() < 1e-15);
    }

    #[test]
    fn projected_gap_never_exceeds_the_diameter(seed in 0u64..10_000, n in 3usize..40, functional in any::<bool>()) {
        let grid = Grid::uniform(21, 0.0, 1.0).unwrap();
        let d = if functional { 21 } else { 5 };
        let mut x = set(contaminated(seed, n, d));
        if functional {
            x = x.with_grid(grid.clone()).unwrap();
        }
        let rows: Vec<usize> = (0..n).collect();
        let mut diameter = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                diameter = diameter.max(distance(x.row(i), x.row(j), x.grid()).unwrap());
            }
        }
        let mut src = RandomDirections::new(seed, d, DirectionLaw::Brownian, x.grid().cloned());
        for _ in 0..20 {
            let h = src.next_direction().unwrap();
            let (gap, _) = max_gap(&sorted(&project_rows(&x, &rows, &h).unwrap())).unwrap();
            prop_assert!(gap <= diameter * (1.0 + 1e-12));
        }
    }

    #[test]
    fn same_seed_same_result(seed in 0u64..10_000, mode in modes()) {
        let x = set(contaminated(seed, 30, 4));
        let c = cfg(mode, seed);
        prop_assert_eq!(select_subsample(&x, &c).unwrap(), select_subsample(&x, &c).unwrap());
    }

    #[test]
    fn translation_invariance(seed in 0u64..10_000, shift in -50.0f64..50.0, mode in modes()) {
        let x = contaminated(seed, 40, 3);
        let moved = &x + &Array1::from_vec(vec![shift, -0.5 * shift, 2.0]);
        let c = cfg(mode, seed);
        let a = select_subsample_with(&set(x), &c, &mut DirectionSequence::new(directions(seed, 3, 200))).unwrap();
        let b = select_subsample_with(&set(moved), &c, &mut DirectionSequence::new(directions(seed, 3, 200))).unwrap();
        prop_assert_eq!(a.trimmed_indices(), b.trimmed_indices());
        prop_assert_eq!(a.directions_consumed, b.directions_consumed);
    }

    #[test]
    fn orthogonal_invariance(seed in 0u64..10_000, mode in modes()) {
        let d = 4;
        let q = random_orthogonal(seed + 1, d);
        let x = contaminated(seed, 40, d);
        let rotated = x.dot(&q.t());
        let hs = directions(seed, d, 200);
        let rotated_hs: Vec<UnitDirection> = hs
            .iter()
            .map(|h| UnitDirection::normalize(q.dot(h.coords()), None).unwrap())
            .collect();
        let c = cfg(mode, seed);
        let a = select_subsample_with(&set(x), &c, &mut DirectionSequence::new(hs)).unwrap();
        let b = select_subsample_with(&set(rotated), &c, &mut DirectionSequence::new(rotated_hs)).unwrap();
        prop_assert_eq!(a.trimmed_indices(), b.trimmed_indices());
    }

    #[test]
    fn scale_invariance_of_adaptive_modes(
        seed in 0u64..10_000,
        scale in prop_oneof![0.001f64..0.1, 10.0f64..1000.0],
        adaptive in any::<bool>(),
    ) {
        let mode = if adaptive { ThresholdMode::ScaleAdaptive } else { ThresholdMode::NullQuantile };
        let x = contaminated(seed, 40, 3);
        let scaled = &x * scale;
        let c = cfg(mode, seed);
        let a = select_subsample(&set(x), &c).unwrap();
        let b = select_subsample(&set(scaled), &c).unwrap();
        prop_assert_eq!(a.trimmed_indices(), b.trimmed_indices());
    }

    #[test]
    fn covariance_is_psd_and_correlation_bounded(seed in 0u64..10_000, d in 1usize..7, n in 3usize..40) {
        let x = set(gaussian_rows(seed, n, d, 5.0));
        let mut w = vec![1u8; n];
        w[seed as usize % n] = 0;
        let cov = weighted_covariance(&x, &w).unwrap();
        let eig = symmetric_eigen(&cov).unwrap();
        let scale = cov.diag().iter().fold(1.0f64, |a, v| a.max(*v));
        prop_assert!(eig.values.iter().all(|v| *v >= -1e-10 * scale));
        if cov.diag().iter().all(|v| *v > 0.0) {
            let r = correlation_from_covariance(&cov).unwrap();
            prop_assert!(r.iter().all(|v| (-1.0..=1.0).contains(v)));
            prop_assert!(r.diag().iter().all(|v| *v == 1.0));
            let dscale = Array1::from_shape_fn(d, |j| 0.5 + j as f64);
            let scaled = &cov * &dscale * dscale.view().insert_axis(ndarray::Axis(1));
            prop_assert!(close(&correlation_from_covariance(&scaled).unwrap(), &r, 1e-12));
        }
    }

    #[test]
    fn pca_orthonormal_with_exact_residual(seed in 0u64..10_000, d in 2usize..7, q in 1usize..7) {
        let q = q.min(d);
        let x = set(gaussian_rows(seed, 60, d, 2.0));
        let w = vec![1u8; 60];
        let p = trimmed_pca(&x, &w, q).unwrap();
        let gram = p.components.dot(&p.components.t());
        prop_assert!(close(&gram, &Array2::eye(q), 1e-10));
        prop_assert!(p.eigenvalues.windows(2).all(|e| e[0] >= e[1]));
        let cov = weighted_covariance(&x, &w).unwrap();
        let lam = Array2::from_diag(&Array1::from_vec(p.eigenvalues.clone()));
        let approx = p.components.t().dot(&lam).dot(&p.components);
        let all = symmetric_eigen(&cov).unwrap().values;
        let discarded: f64 = all.iter().skip(q).map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((frobenius(&(&cov - &approx)) - discarded).abs() < 1e-9 * frobenius(&cov).max(1.0));
    }

    #[test]
    fn mean_and_covariance_are_affine_equivariant(seed in 0u64..10_000, d in 1usize..6) {
        let x = gaussian_rows(seed, 30, d, 1.0);
        let a = gaussian_rows(seed + 7, d, d, 1.0);
        let b = Array1::from_shape_fn(d, |j| j as f64 - 1.5);
        let y = x.dot(&a.t()) + &b;
        let mut w = vec![1u8; 30];
        w[3] = 0;
        w[17] = 0;
        let (xs, ys) = (set(x), set(y));
        let mx = weighted_mean(&xs, &w).unwrap();
        let my = weighted_mean(&ys, &w).unwrap();
        let want = a.dot(&mx) + &b;
        prop_assert!(my.iter().zip(want.iter()).all(|(p, q)| (p - q).abs() < 1e-10));
        let cx = weighted_covariance(&xs, &w).unwrap();
        let cy = weighted_covariance(&ys, &w).unwrap();
        prop_assert!(close(&cy, &a.dot(&cx).dot(&a.t()), 1e-10));
    }

    #[test]
    fn it_is_permutation_translation_and_rotation_invariant(seed in 0u64..10_000, shift in -20.0f64..20.0) {
        let n = 30;
        let d = 3;
        let x = contaminated(seed, n, d);
        let it = ItConfig { alpha_radius: 0.5, beta: 0.2 };
        let r_base = it_alpha_radii(&set(x.clone()), 0.5).unwrap();
        let base = it_trim(&set(x.clone()), &it).unwrap();

        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        let permuted = x.select(ndarray::Axis(0), &perm);
        let r_perm = it_alpha_radii(&set(permuted.clone()), 0.5).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            prop_assert!((r_perm[i] - r_base[p]).abs() < 1e-12);
        }
        let permuted_trim = it_trim(&set(permuted), &it).unwrap();
        let moved = (&x + shift).dot(&random_orthogonal(seed + 3, d).t());
        let moved_trim = it_trim(&set(moved), &it).unwrap();

        // rows can share a radius exactly, so identity is only fixed away from the cut
        let radii = |r: &projgate_core::rt::TrimResult| -> Vec<f64> { r.trimmed.iter().map(|t| t.gap).collect() };
        let cut = base.trimmed.last().unwrap().threshold;
        let above: Vec<usize> = (0..n).filter(|&i| r_base[i] > cut + 1e-9 * cut.max(1.0)).collect();
        for other in [&permuted_trim, &moved_trim] {
            for (a, b) in radii(&base).iter().zip(radii(other)) {
                prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            }
        }
        let perm_rows: Vec<usize> = permuted_trim.trimmed_indices().iter().map(|&i| perm[i]).collect();
        let moved_rows = moved_trim.trimmed_indices();
        for i in &above {
            prop_assert!(perm_rows.contains(i));
            prop_assert!(moved_rows.contains(i));
        }
    }
}
