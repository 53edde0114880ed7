use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scare_core::engine::{radi_solve, step_once, SolveOptions, SolverState, StepParams};
use scare_core::shift::{
    build_basis, hamiltonian_candidates, next_shift, orthonormalize, project, projection_candidates, Projected,
    ShiftCache, ShiftConfig, ShiftEngine, ShiftMode, ShiftStrategy,
};
use scare_core::testgen::{random_standard, GenSpec};

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat<f64> {
    Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

fn orth_error(u: &Mat<f64>) -> f64 {
    (u.transpose() * u - Mat::<f64>::identity(u.ncols(), u.ncols())).norm_l2()
}

#[test]
fn orthonormal_rows_are_kept() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let q = orthonormalize(random(&mut rng, 30, 3).as_ref()).unwrap();
    let s = q.transpose().to_owned();
    let u = build_basis(std::slice::from_ref(&s), 1, s.as_ref()).unwrap();
    for j in 0..3 {
        let d: f64 = (0..30).map(|i| u[(i, j)] * s[(j, i)]).sum();
        assert!((d.abs() - 1.0).abs() < 1e-13);
    }
}

#[test]
fn window_of_two_random_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let hist: Vec<Mat<f64>> = (0..3).map(|_| random(&mut rng, 4, 50)).collect();
    let u = build_basis(&hist, 2, hist[0].as_ref()).unwrap();
    assert_eq!(u.ncols(), 8);
    assert!(orth_error(&u) <= 1e-13);
    // The basis spans the two newest factors.
    for s in &hist[1..] {
        let resid = s.transpose() - &u * (u.transpose() * s.transpose());
        assert!(resid.norm_l2() < 1e-12 * s.norm_l2());
    }
}

/// Independent ranking: null vectors of `H - λI` from a complex SVD.
fn oracle_hamiltonian(proj: &Projected) -> f64 {
    let d = proj.a.nrows();
    let h = Mat::from_fn(2 * d, 2 * d, |i, j| match (i < d, j < d) {
        (true, true) => proj.a[(i, j)],
        (true, false) => proj.g[(i, j - d)],
        (false, true) => proj.q[(i - d, j)],
        (false, false) => -proj.a[(j - d, i - d)],
    });
    let vals = h.eigenvalues().unwrap();
    let mut best: Option<(f64, f64, f64)> = None;
    for lam in vals.iter().filter(|l| l.re < 0.0) {
        let shifted = Mat::from_fn(2 * d, 2 * d, |i, j| c64::new(h[(i, j)], 0.0) - if i == j { *lam } else { c64::new(0.0, 0.0) });
        let svd = shifted.svd().unwrap();
        let v = svd.V();
        let last = 2 * d - 1;
        let lower: f64 = (d..2 * d).map(|i| v[(i, last)].norm_sqr()).sum::<f64>().sqrt();
        let cand = (lower, lam.im.abs(), -lam.re);
        best = match best {
            None => Some(cand),
            Some(b) if (cand.0 - b.0).abs() > 1e-8 => Some(if cand.0 > b.0 { cand } else { b }),
            Some(b) if (cand.1 - b.1).abs() > 1e-12 => Some(if cand.1 < b.1 { cand } else { b }),
            Some(b) => Some(if cand.2 > b.2 { cand } else { b }),
        };
    }
    best.unwrap().2
}

#[test]
fn hamiltonian_selection_matches_dense_oracle() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(10 + seed);
        let d = 6;
        let mut a = random(&mut rng, d, d);
        for i in 0..d {
            a[(i, i)] -= 3.0;
        }
        let bg = random(&mut rng, d, 2);
        let cq = random(&mut rng, 2, d);
        let proj = Projected { a, g: &bg * bg.transpose(), q: cq.transpose() * &cq };
        let got = hamiltonian_candidates(&proj, 1e-12).unwrap();
        let want = oracle_hamiltonian(&proj);
        assert!((got[0] - want).abs() <= 1e-10 * want, "seed {seed}: {} vs {want}", got[0]);
    }
}

#[test]
fn hamiltonian_without_coupling_follows_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut a = random(&mut rng, 5, 5);
    for i in 0..5 {
        a[(i, i)] -= 4.0;
    }
    let zero = Mat::<f64>::zeros(5, 5);
    let proj = Projected { a: a.clone(), g: zero.clone(), q: zero };
    let h = hamiltonian_candidates(&proj, 1e-12).unwrap();
    let p = projection_candidates(a.as_ref(), 1e-12).unwrap();
    assert!((h[0] - p[0]).abs() <= 1e-10 * p[0]);
}

#[test]
fn projection_matches_transposed_spectrum() {
    let p = random_standard(&GenSpec::new(40, 2, 5, 1), 21).unwrap();
    let st = SolverState::new(&p);
    let u = build_basis(&[], 1, st.c.as_ref()).unwrap();
    assert_eq!(u.ncols(), 5);
    let proj = project(u.as_ref(), &p, st.f.as_ref(), st.kpi.as_ref(), st.c.as_ref(), None).unwrap();
    let dense = u.transpose() * p.a().to_dense() * &u;
    assert!((&proj.a - &dense).norm_l2() < 1e-12 * dense.norm_l2());
    let got = projection_candidates(proj.a.as_ref(), 1e-12).unwrap();
    let vals = dense.transpose().to_owned().eigenvalues().unwrap();
    let min_re = vals.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    assert!((got[0] + min_re).abs() <= 1e-10 * min_re.abs());
}

#[test]
fn column_order_does_not_change_selection() {
    let p = random_standard(&GenSpec::new(40, 2, 3, 2), 22).unwrap();
    let st0 = SolverState::new(&p);
    let (st, _) = step_once(&p, &st0, 1.0, StepParams { trunc_rel: 0.0, cap: 100 }).unwrap();
    let hist: Vec<Mat<f64>> = st.s_history.iter().cloned().collect();
    let u = build_basis(&hist, 1, st.c.as_ref()).unwrap();
    let d = u.ncols();
    let perm = Mat::from_fn(u.nrows(), d, |i, j| u[(i, d - 1 - j)]);
    let a = project(u.as_ref(), &p, st.f.as_ref(), st.kpi.as_ref(), st.c.as_ref(), None).unwrap();
    let b = project(perm.as_ref(), &p, st.f.as_ref(), st.kpi.as_ref(), st.c.as_ref(), None).unwrap();
    let ga = hamiltonian_candidates(&a, 1e-12).unwrap()[0];
    let gb = hamiltonian_candidates(&b, 1e-12).unwrap()[0];
    assert!((ga - gb).abs() <= 1e-10 * ga);
    let pa = projection_candidates(a.a.as_ref(), 1e-12).unwrap()[0];
    let pb = projection_candidates(b.a.as_ref(), 1e-12).unwrap()[0];
    assert!((pa - pb).abs() <= 1e-10 * pa);
}

#[test]
fn cached_queue_pops_in_order() {
    let p = random_standard(&GenSpec::new(20, 1, 1, 1), 23).unwrap();
    let st = SolverState::new(&p);
    let cfg = ShiftConfig::new(ShiftStrategy::Hamiltonian, 1, ShiftMode::Cached);
    let (g, cache) = next_shift(&cfg, ShiftCache::new([2.0, 1.5], 0), &p, &st).unwrap();
    assert_eq!(g, 2.0);
    assert_eq!(cache.pending, [1.5]);
    let per = ShiftConfig { mode: ShiftMode::PerIteration, ..cfg };
    let (g, _) = next_shift(&per, ShiftCache::new([2.0, 1.5], 0), &p, &st).unwrap();
    assert_ne!(g, 2.0);
}

#[test]
fn cached_mode_recomputes_when_exhausted() {
    let p = random_standard(&GenSpec::new(50, 2, 2, 2), 24).unwrap();
    let cfg = ShiftConfig::new(ShiftStrategy::Projection, 2, ShiftMode::Cached);
    let mut eng = ShiftEngine::new(cfg, &p).unwrap();
    let mut st = SolverState::new(&p);
    let params = StepParams { trunc_rel: 0.0, cap: 100 };
    for _ in 0..8 {
        let g = eng.next(&p, &st).unwrap();
        assert!(g >= eng.floor());
        st = step_once(&p, &st, g, params).unwrap().0;
    }
    assert!(eng.computations() >= 2);
}

#[test]
fn every_variant_converges_on_small_problem() {
    let p = random_standard(&GenSpec::new(60, 2, 2, 2).with_noise(0.2), 25).unwrap();
    for cfg in ShiftConfig::variants() {
        let opts = SolveOptions { shift: cfg, ..SolveOptions::default() };
        let (_, report) = radi_solve(&p, &opts).unwrap();
        assert!(report.summary.converged, "{cfg}: {:?}", report.summary);
        assert!(report.gammas().iter().all(|&g| g > 0.0));
    }
}
