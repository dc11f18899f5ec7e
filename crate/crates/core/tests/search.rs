use num_complex::Complex64;

use dirac_search::clifford::RepKind;
use dirac_search::dense::HermitianEigen;
use dirac_search::dynamics::{evolve, run_search, time_grid, EvolveOptions, Method};
use dirac_search::experiment::{
    run_experiment, run_prediction, scaling_study, search_params, ExperimentConfig, Observable,
};
use dirac_search::hamiltonian::{
    assemble_dense, spinless_critical_gamma, SpinlessBaseline, StateVector,
};
use dirac_search::lattice::LatticeConfig;
use dirac_search::oracle::search_pair;

fn opts(method: Method) -> EvolveOptions {
    EvolveOptions {
        method,
        ..Default::default()
    }
}

#[test]
fn end_to_end_run_matches_prediction() {
    let out = run_experiment(&ExperimentConfig::new(3, 10)).unwrap();
    let evo = &out.evolution;
    assert!((out.p_ratio - 1.0).abs() <= 0.25, "p_star/(2R) {}", out.p_ratio);
    assert!((out.t_ratio - 1.0).abs() <= 0.15, "t_star/T {}", out.t_ratio);
    assert!(evo.norm_drift <= 1e-9);
    for (a, b) in evo.p_eta_marked.iter().zip(&evo.p_marked) {
        assert!(*a <= b + 1e-15 && *b <= 1.0 + 1e-12);
    }
}

#[test]
fn dynamics_stays_in_the_search_pair() {
    let cfg = ExperimentConfig::new(3, 8);
    let rec = run_prediction(&cfg).unwrap();
    let params = search_params(&cfg, &rec).unwrap();
    let eig = HermitianEigen::new(&assemble_dense(&params).unwrap()).unwrap();
    let start = StateVector::uniform(params.cfg(), params.rep().eta());
    let (ip, im) = search_pair(&eig, start.amplitudes()).unwrap();
    let (vp, vm) = (eig.vector(ip), eig.vector(im));
    let overlap = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>();
    let cheb = opts(Method::Chebyshev);
    for t in time_grid(2.0 * rec.prediction.t, 9) {
        let psi = evolve(&params, &start, t, &cheb).unwrap();
        let w = overlap(&vp, psi.amplitudes()).norm_sqr() + overlap(&vm, psi.amplitudes()).norm_sqr();
        assert!(w >= 0.9, "weight {w} at t = {t}");
    }
}

#[test]
fn probabilities_do_not_depend_on_the_marked_site() {
    let cfg = ExperimentConfig::new(2, 6);
    let rec = run_prediction(&cfg).unwrap();
    let p0 = search_params(&cfg, &rec).unwrap();
    let p1 = p0.clone().with_marked(23).unwrap();
    let grid = time_grid(2.0 * rec.prediction.t, 40);
    let cheb = EvolveOptions {
        tol: 1e-12,
        method: Method::Chebyshev,
        ..Default::default()
    };
    let a = run_search(&p0, &grid, &cheb).unwrap();
    let b = run_search(&p1, &grid, &cheb).unwrap();
    for (x, y) in a.p_marked.iter().zip(&b.p_marked) {
        assert!((x - y).abs() <= 1e-10);
    }
}

#[test]
fn iterative_propagation_reverses() {
    let cfg = ExperimentConfig::new(3, 6);
    let rec = run_prediction(&cfg).unwrap();
    let params = search_params(&cfg, &rec).unwrap();
    let start = StateVector::uniform(params.cfg(), params.rep().eta());
    let cheb = opts(Method::Chebyshev);
    let t = 1.3 * rec.prediction.t;
    let there = evolve(&params, &start, t, &cheb).unwrap();
    let back = evolve(&params, &there, -t, &cheb).unwrap();
    assert!(back.distance(&start) <= 1e-7);
}

#[test]
fn dense_and_iterative_probabilities_agree() {
    let cfg = ExperimentConfig::new(3, 6).with_rep(RepKind::Full);
    let rec = run_prediction(&cfg).unwrap();
    let params = search_params(&cfg, &rec).unwrap();
    let grid = time_grid(2.0 * rec.prediction.t, 64);
    let a = run_search(&params, &grid, &opts(Method::Dense)).unwrap();
    let b = run_search(&params, &grid, &opts(Method::Chebyshev)).unwrap();
    assert!(a.dense && !b.dense);
    for (x, y) in a.p_marked.iter().zip(&b.p_marked) {
        assert!((x - y).abs() <= 1e-6);
    }
    assert!((a.t_star - b.t_star).abs() <= 1e-6 * a.t_star);
}

#[test]
fn three_dimensional_success_probability_is_size_independent() {
    let study = scaling_study(&ExperimentConfig::new(3, 6), &[6, 8, 10, 12, 14], Observable::PStar).unwrap();
    assert!(study.exponent().abs() <= 0.1, "exponent {}", study.exponent());
}

#[test]
fn spinless_walk_fails_in_two_dimensions() {
    let mut spinless = Vec::new();
    let mut dirac = Vec::new();
    for side in [8, 16, 32, 64] {
        let cfg = LatticeConfig::new(2, side).unwrap();
        let n = cfg.n_sites() as f64;
        let gamma = spinless_critical_gamma(&cfg, 0).unwrap();
        let op = SpinlessBaseline::new(cfg, gamma, 0).unwrap();
        let grid = time_grid(3.0 * n.sqrt() * n.ln(), 400);
        let r = run_search(&op, &grid, &EvolveOptions::default()).unwrap();
        assert!(r.norm_drift <= 1e-9);
        spinless.push((r.p_star, r.t_star, n));
        if side >= 16 {
            dirac.push(run_experiment(&ExperimentConfig::new(2, side)).unwrap().evolution.p_star);
        }
    }
    // p_star vanishes faster than 1/ln N while the peak moves out
    assert!(spinless.windows(2).all(|w| w[1].0 < w[0].0), "{spinless:?}");
    assert!(spinless.windows(2).all(|w| w[1].0 * w[1].2.ln() < w[0].0 * w[0].2.ln()), "{spinless:?}");
    assert!(spinless[3].1 > 4.0 * spinless[0].1, "{spinless:?}");
    assert!(spinless[3].0 < 0.05);
    for (d, s) in dirac.iter().zip(&spinless[1..]) {
        assert!(*d > s.0);
    }
    assert!(dirac[2] > 4.0 * spinless[3].0);
}
