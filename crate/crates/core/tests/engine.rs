use faer::Mat;
use scare_core::alg1::{alg1_step, Alg1State};
use scare_core::dense::{rel_diff, trace};
use scare_core::engine::{radi_solve, replay, step_once, SolveOptions, SolverState, StepParams, StopReason};
use scare_core::oracle::{care_schur_solve, newton_ref_solve, NewtonOptions};
use scare_core::problem::{adapt_in_place, feedback_dense, residual_dense, standardize, StandardProblem};
use scare_core::testgen::{random_original, random_standard, GenSpec};
use scare_core::SparseMat;

const EXACT: StepParams = StepParams { trunc_rel: 0.0, cap: usize::MAX };

fn scalar(a: f64) -> StandardProblem {
    let a = SparseMat::from_triplets(1, 1, &[(0, 0, a)]).unwrap();
    let one = Mat::from_fn(1, 1, |_, _| 1.0);
    StandardProblem::new(a, one.clone(), one, vec![], vec![], None).unwrap()
}

fn shifts(k: usize) -> Vec<f64> {
    (0..k).map(|i| [0.7, 2.5, 1.3, 5.0, 0.4][i % 5] * (1.0 + 0.1 * i as f64)).collect()
}

#[test]
fn scalar_optimal_shift_is_exact() {
    let p = scalar(-1.0);
    let (st, scratch) = step_once(&p, &SolverState::new(&p), 2f64.sqrt(), EXACT).unwrap();
    assert!((st.x_dense()[(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    assert!(scratch.stacked.norm_l2() < 1e-15);
    assert_eq!(st.k, 1);
}

#[test]
fn first_step_without_feedback_is_plain_solve() {
    let p = random_standard(&GenSpec::new(25, 2, 2, 2), 4).unwrap();
    let gamma = 1.7;
    let (_, scratch) = step_once(&p, &SolverState::new(&p), gamma, EXACT).unwrap();
    let mut shifted = p.a().to_dense();
    for i in 0..25 {
        shifted[(i, i)] -= gamma;
    }
    let expect = p.c() * dense_inverse(&shifted) * (2.0 * gamma).sqrt();
    assert!(rel_diff(scratch.c_gamma.as_ref(), expect.as_ref()) < 1e-12);
}

fn dense_inverse(m: &Mat<f64>) -> Mat<f64> {
    scare_core::dense::lu_inverse(m.as_ref(), "test").unwrap()
}

#[test]
fn matches_prototype_iteration() {
    for (seed, r, mass) in [(1, 2, false), (2, 3, false), (3, 2, true), (4, 1, false)] {
        let spec = GenSpec { mass, ..GenSpec::new(30, 2, 3, r) };
        let p = random_standard(&spec, seed).unwrap();
        let gs = shifts(8);
        let states = replay(&p, &gs, EXACT).unwrap();
        let mut proto = Alg1State::new(&p).unwrap();
        for (k, &g) in gs.iter().enumerate() {
            proto = alg1_step(&proto, g).unwrap();
            let d = rel_diff(states[k + 1].x_dense().as_ref(), proto.x().as_ref());
            assert!(d < 1e-10, "seed {seed} step {k}: {d:e}");
        }
    }
}

#[test]
fn bookkeeping_without_truncation() {
    for (seed, r, mass) in [(11, 2, false), (12, 4, false), (13, 3, true)] {
        let spec = GenSpec { mass, ..GenSpec::new(40, 2, 2, r) };
        let p = random_standard(&spec, seed).unwrap();
        for st in replay(&p, &shifts(6), EXACT).unwrap().iter().skip(1) {
            let res = residual_dense(&p, st.x_dense().as_ref()).unwrap();
            let gram = st.c.transpose() * &st.c;
            let d = rel_diff(res.as_ref(), gram.as_ref());
            assert!(d < 1e-9, "seed {seed} k {}: {d:e}", st.k);
        }
    }
}

#[test]
fn bookkeeping_with_truncation() {
    let p = random_standard(&GenSpec::new(40, 2, 3, 3), 21).unwrap();
    let mut st = SolverState::new(&p);
    let params = StepParams { trunc_rel: 1e-4, cap: 8 };
    let mut omega = Mat::<f64>::zeros(40, 40);
    for g in shifts(8) {
        let (next, scratch) = step_once(&p, &st, g, params).unwrap();
        omega += scratch.omega_gram();
        assert!(next.nu_omega >= st.nu_omega);
        assert!((trace(scratch.omega_gram().as_ref()) - scratch.trunc.discarded_sq_trace).abs() <= 1e-9 * st.nu0);
        st = next;
        let res = residual_dense(&p, st.x_dense().as_ref()).unwrap();
        let expect = st.c.transpose() * &st.c + &omega;
        assert!(rel_diff(res.as_ref(), expect.as_ref()) < 1e-9);
        assert!(st.nres().unwrap() * st.nu0 >= trace(res.as_ref()) - 1e-12 * st.nu0);
    }
}

#[test]
fn accumulated_feedback_matches_dense_feedback() {
    let p = random_standard(&GenSpec::new(30, 3, 2, 3), 31).unwrap();
    for st in replay(&p, &shifts(5), EXACT).unwrap() {
        let fhat = feedback_dense(&p, st.x_dense().as_ref()).unwrap();
        assert!((&st.f - &fhat).norm_l2() <= 1e-10 * fhat.norm_l2().max(1.0));
    }
}

#[test]
fn adapter_and_standard_routes_agree() {
    for (seed, cross) in [(41, true), (42, false)] {
        let orig = random_original(&GenSpec::new(20, 2, 2, 3), seed, cross).unwrap();
        let std = standardize(&orig).unwrap();
        let ada = adapt_in_place(&orig).unwrap();
        let gs = shifts(10);
        let a = replay(&std, &gs, EXACT).unwrap();
        let b = replay(&ada, &gs, EXACT).unwrap();
        for (sa, sb) in a.iter().zip(&b).skip(1) {
            assert!(rel_diff(sa.x_dense().as_ref(), sb.x_dense().as_ref()) < 1e-9);
            let fhat = feedback_dense(&std, sb.x_dense().as_ref()).unwrap();
            let native = ada.native_feedback(&fhat);
            assert!((&sb.f - &native).norm_l2() <= 1e-9 * native.norm_l2().max(1.0));
        }
    }
}

#[test]
fn zero_rhs_returns_immediately() {
    let p = random_standard(&GenSpec::new(10, 1, 1, 2), 5).unwrap();
    let p = p.with_c(Mat::zeros(1, 10)).unwrap();
    let (st, report) = radi_solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(st.k, 0);
    assert_eq!(st.xi_cols(), 0);
    assert!(report.summary.converged);
    assert_eq!(report.summary.reason, StopReason::ZeroRhs);
    assert!(st.nres().is_err());
}

#[test]
fn converges_to_newton_reference() {
    for (seed, r) in [(51, 2), (52, 3)] {
        let p = random_standard(&GenSpec::new(30, 2, 2, r).with_noise(0.3), seed).unwrap();
        let (st, report) = radi_solve(&p, &SolveOptions::default()).unwrap();
        assert!(report.summary.converged, "{:?}", report.summary);
        let x = newton_ref_solve(&p, &NewtonOptions::default()).unwrap().x;
        assert!(rel_diff(st.x_dense().as_ref(), x.as_ref()) < 1e-8);
        let hist = report.nres_history();
        assert_eq!(hist.len(), st.k);
        assert!(*hist.last().unwrap() <= 1e-12);
    }
}

#[test]
fn care_case_matches_hamiltonian_reference() {
    let p = random_standard(&GenSpec::new(60, 2, 2, 1), 61).unwrap();
    let (st, report) = radi_solve(&p, &SolveOptions::default()).unwrap();
    assert!(report.summary.converged);
    let x = care_schur_solve(p.a().to_dense().as_ref(), p.b().as_ref(), p.c().as_ref()).unwrap().x;
    assert!(rel_diff(st.x_dense().as_ref(), x.as_ref()) < 1e-8);
}

#[test]
fn generalized_problem_converges() {
    let p = random_standard(&GenSpec::new(50, 2, 2, 2).with_mass(), 71).unwrap();
    let (st, report) = radi_solve(&p, &SolveOptions::default()).unwrap();
    assert!(report.summary.converged);
    let x = newton_ref_solve(&p, &NewtonOptions::default()).unwrap().x;
    assert!(rel_diff(st.x_dense().as_ref(), x.as_ref()) < 1e-8);
}

#[test]
fn width_cap_sets_flag() {
    let p = random_standard(&GenSpec::new(40, 2, 3, 2), 81).unwrap();
    let opts = SolveOptions { xi_cap: Some(6), ..SolveOptions::default() };
    let (st, report) = radi_solve(&p, &opts).unwrap();
    assert_eq!(report.summary.flags, "m");
    assert!(st.xi_cols() >= 6);
    let opts = SolveOptions { max_iter: 2, ..SolveOptions::default() };
    let (_, report) = radi_solve(&p, &opts).unwrap();
    assert_eq!(report.summary.reason, StopReason::MaxIter);
    assert!(!report.summary.converged);
}

#[test]
fn zero_noise_matches_deterministic_run() {
    let spec = GenSpec::new(30, 2, 2, 2).with_noise(0.0);
    let p = random_standard(&spec, 91).unwrap();
    let q = StandardProblem::new(p.a().clone(), p.b().clone(), p.c().clone(), vec![], vec![], None).unwrap();
    let gs = shifts(5);
    let a = replay(&p, &gs, EXACT).unwrap();
    let b = replay(&q, &gs, EXACT).unwrap();
    assert!(rel_diff(a[5].x_dense().as_ref(), b[5].x_dense().as_ref()) < 1e-12);
}
