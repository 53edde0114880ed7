use faer::Mat;
use scare_bench::{gen_heat_problem, gen_noise_blocks, with_noise, HeatSpec, LoadedProblem};
use scare_core::dense::rel_diff;
use scare_core::engine::{radi_solve, SolveOptions};
use scare_core::testgen::stable_matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sample() -> (scare_core::SparseMat, Mat<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = stable_matrix(&mut rng, 60, 0.1);
    let b = Mat::from_fn(60, 3, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
    (a, b)
}

#[test]
fn noise_blocks_follow_the_pattern_and_scale() {
    let (a, b) = sample();
    for ns in [1e-5, 1e-2, 1.0] {
        let (a1, b1) = gen_noise_blocks(&a, &b, ns, 1.0, 9);
        let pattern: std::collections::HashSet<(usize, usize)> = a.triplets().iter().map(|t| (t.0, t.1)).collect();
        assert!(a1.triplets().iter().all(|t| pattern.contains(&(t.0, t.1))));
        assert!(a1.norm_fro() <= ns * a.norm_fro());
        assert!(b1.norm_l2() <= ns * b.norm_l2());
        // Each entry is ns·m·u with u in (0, 1]: same sign, no larger.
        for (x, y) in a.values().iter().zip(a1.values()) {
            assert!(x * y > 0.0 && y.abs() <= ns * x.abs());
        }
    }
}

#[test]
fn noise_blocks_are_reproducible() {
    let (a, b) = sample();
    let (a1, b1) = gen_noise_blocks(&a, &b, 1e-3, 0.5, 4);
    let (a2, b2) = gen_noise_blocks(&a, &b, 1e-3, 0.5, 4);
    assert_eq!(a1.values(), a2.values());
    assert_eq!(a1.col_idx(), a2.col_idx());
    assert_eq!(b1, b2);
    let (a3, _) = gen_noise_blocks(&a, &b, 1e-3, 0.5, 5);
    assert_ne!(a1.values(), a3.values());
    let kept = a1.values().iter().filter(|v| **v != 0.0).count() as f64 / a.nnz() as f64;
    assert!((kept - 0.5).abs() < 0.15);
}

#[test]
fn zero_noise_reproduces_deterministic_run() {
    let p = gen_heat_problem(&HeatSpec::new(80, 2, 2), 1).unwrap();
    let q = with_noise(LoadedProblem::Standard(p.clone()), &[(0.0, 3)]).unwrap().into_standard().unwrap();
    assert_eq!(q.r(), 2);
    let (sp, rp) = radi_solve(&p, &SolveOptions::default()).unwrap();
    let (sq, rq) = radi_solve(&q, &SolveOptions::default()).unwrap();
    assert_eq!(rp.summary.iterations, rq.summary.iterations);
    assert!(rel_diff(sp.x_dense().as_ref(), sq.x_dense().as_ref()) < 1e-12);
}

#[test]
fn heat_stencil_is_negative_definite() {
    let p = gen_heat_problem(&HeatSpec::new(3, 1, 1), 0).unwrap();
    let a = p.a().to_dense();
    let eig = a.self_adjoint_eigen(faer::Side::Lower).unwrap();
    let s = eig.S().column_vector();
    // 16 (-2 + 2 cos(kπ/4)) for k = 1, 2, 3.
    let expect = [-16.0 * (2.0 + 2f64.sqrt()), -32.0, -16.0 * (2.0 - 2f64.sqrt())];
    for (k, e) in expect.iter().enumerate() {
        assert!((s[k] - e).abs() < 1e-12);
    }
    assert!((&a - a.transpose()).norm_l2() == 0.0);
}

#[test]
fn heat_dimensions_and_seeds() {
    let spec = HeatSpec::rail_small();
    let p = gen_heat_problem(&spec, 2).unwrap();
    assert_eq!((p.n(), p.m(), p.l(), p.r()), (1357, 7, 6, 1));
    assert!((p.b().col(3).norm_l2() - 1.0).abs() < 1e-14);
    assert!((p.c().row(5).norm_l2() - 1.0).abs() < 1e-14);
    let q = gen_heat_problem(&spec, 2).unwrap();
    assert_eq!(p.b(), q.b());
    assert_ne!(p.c(), gen_heat_problem(&spec, 3).unwrap().c());
    let m = gen_heat_problem(&HeatSpec { mass: true, ..HeatSpec::new(10, 1, 1) }, 0).unwrap();
    assert_eq!(m.e().unwrap().nnz(), 28);
}
