use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scare_core::dense::{kron_eye_left, kron_eye_right, lu_solve, rel_diff};
use scare_core::kernels::{chol_spd, ltimes_identities_check, smw_solve, stacked_gram, trunc_svd, RowOrder, ShiftedFactorization, StackedMat};
use scare_core::testgen::stable_matrix;

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat<f64> {
    Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semi_tensor_identities(seed in 0u64..10_000) {
        let dev = ltimes_identities_check(seed).unwrap();
        prop_assert!(dev.max() <= 1e-11, "{dev:?}");
    }

    #[test]
    fn truncation_conserves_energy(seed in 0u64..10_000, p in 1usize..12, n in 1usize..40, frac in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random(&mut rng, p, n);
        let total = c.norm_l2().powi(2);
        let t = trunc_svd(c.as_ref(), frac * total, usize::MAX).unwrap();
        prop_assert!((t.retained_sq() + t.discarded_sq_trace - total).abs() <= 1e-12 * total);
        prop_assert!(t.discarded_sq_trace <= frac * total * (1.0 + 1e-12) + 1e-14);
        prop_assert!(t.sigma.windows(2).all(|w| w[0] >= w[1]));
        // The retained factor is the projection of c onto the kept left vectors.
        let proj = t.u.transpose() * &c;
        prop_assert!((t.factor() - proj).norm_l2() <= 1e-10 * c.norm_l2());
    }

    #[test]
    fn smw_matches_dense_solve(seed in 0u64..10_000, n in 2usize..60, m in 1usize..4, t in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = stable_matrix(&mut rng, n, 0.1);
        let b = random(&mut rng, n, m);
        let f = random(&mut rng, m, n) * 0.3;
        let rows = random(&mut rng, t, n);
        let gamma = rng.gen_range(0.1..5.0);
        let fac = ShiftedFactorization::new(&a, None, gamma).unwrap();
        let got = smw_solve(&fac, b.as_ref(), f.as_ref(), rows.as_ref()).unwrap();
        let mut full = a.to_dense() + &b * &f;
        for i in 0..n {
            full[(i, i)] -= gamma;
        }
        let want = lu_solve(full.transpose(), rows.transpose(), "test").unwrap().transpose().to_owned();
        prop_assert!(rel_diff(got.x.as_ref(), want.as_ref()) <= 1e-10);
        prop_assert!(rel_diff(got.xb.as_ref(), (&want * &b).as_ref()) <= 1e-10);
    }

    #[test]
    fn gram_matches_kronecker_form(seed in 0u64..10_000, k in 0usize..4, p in 1usize..4, m in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g0 = random(&mut rng, p, p);
        let base = &g0 * g0.transpose();
        let blocks: Vec<Mat<f64>> = (0..k).map(|_| random(&mut rng, p, m)).collect();
        let y = StackedMat::from_dense_blocks(blocks, p, m).unwrap();
        for (order, kron) in [(RowOrder::Interleaved, kron_eye_right(base.as_ref(), k)), (RowOrder::BlockMajor, kron_eye_left(k, base.as_ref()))] {
            let flat = y.to_dense(order);
            let want = kron + &flat * flat.transpose();
            prop_assert!((stacked_gram(base.as_ref(), &y, order) - want).norm_l2() <= 1e-13 * (1.0 + base.norm_l2()));
        }
    }

    #[test]
    fn cholesky_reconstructs(seed in 0u64..10_000, n in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random(&mut rng, n, n);
        let mut m = &g * g.transpose();
        for i in 0..n {
            m[(i, i)] += 0.1;
        }
        let p = chol_spd(m.as_ref()).unwrap();
        prop_assert!(rel_diff((p.transpose() * &p).as_ref(), m.as_ref()) <= 1e-13);
        for j in 0..n {
            for i in j + 1..n {
                prop_assert_eq!(p[(i, j)], 0.0);
            }
        }
    }
}
