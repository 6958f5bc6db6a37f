use proptest::prelude::*;

use fockspace::fock::FockBasis;
use fockspace::hankel::{build_hankel_gram, gram_rule, singular_spectrum};
use fockspace::lattice::{Lattice, Window};
use fockspace::oscillation::{ida_profile, LocalSolver};
use fockspace::symbols::{Growth, Smoothness, SupportHint, Symbol};
use fockspace::weight::WeightModel;
use fockspace::Cplx;

type C = Cplx<f64>;

fn point() -> impl Strategy<Value = C> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| C::new(a, b))
}

fn g(f: &Symbol<f64>, z: C, r: f64) -> f64 {
    let solver = LocalSolver::new(r, 6, 24).unwrap();
    ida_profile(&solver, f, &[z], 2.0).unwrap()[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lattice_points_are_separated_and_partitioned(r in 0.4..2.5f64, k in 1usize..4, re in -0.5..0.5f64) {
        let l = Lattice::build(C::new(re, 0.0), r, Window::square(4.0)).unwrap();
        prop_assert!(l.min_separation() >= r * (1.0 - 1e-12));
        let subs = l.split_sublattices(k).unwrap();
        let total: usize = subs.iter().map(|s| s.indices.len()).sum();
        prop_assert_eq!(total, l.len());
        for p in l.planar_points().unwrap() {
            prop_assert!(l.window().contains(p));
        }
    }

    #[test]
    fn conj_linear_oscillation_is_constant(z in point(), r in 0.25..2.0f64) {
        let v = g(&Symbol::conj_linear(), z, r);
        prop_assert!((v - r / 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn oscillation_ignores_holomorphic_terms(z in point(), a in point(), b in point()) {
        let f = Symbol::bump(1.5).unwrap();
        let shifted = f.plus_holomorphic(vec![a, b, a * b]);
        prop_assert!((g(&f, z, 1.0) - g(&shifted, z, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn oscillation_commutes_with_translation(z in point(), a in point()) {
        let f = Symbol::conj_gaussian(0.7).unwrap();
        let moved = f.translated(a);
        prop_assert!((g(&moved, z + a, 0.8) - g(&f, z, 0.8)).abs() < 1e-10);
    }

    #[test]
    fn oscillation_scales_with_the_symbol(z in point(), lam in 0.1..5.0f64) {
        let f = Symbol::mixed(1.0).unwrap();
        let c = C::new(lam, 0.0);
        let scaled = Symbol::custom("scaled", move |w| f.eval(w) * c, None, SupportHint::EntirePlane, Smoothness::C1, Growth::Polynomial(1));
        let base = Symbol::mixed(1.0).unwrap();
        let (a, b) = (g(&scaled, z, 1.0), g(&base, z, 1.0));
        prop_assert!((a - lam * b).abs() <= 1e-9 * (1.0 + a));
    }
}

#[test]
fn spectrum_ignores_low_degree_holomorphic_terms() {
    let w = WeightModel::gaussian(1.0).unwrap();
    let f = Symbol::conj_gaussian(1.0).unwrap();
    let p = f.plus_holomorphic(vec![C::new(0.3, 0.0), C::new(0.0, -1.0), C::new(0.25, 0.5)]);
    let spec = |s: &Symbol<f64>| {
        let rule = gram_rule(&w, 16, 10, s).unwrap();
        let basis = FockBasis::build(&w, 16, &rule).unwrap();
        singular_spectrum(&build_hankel_gram(s, &basis, 10, &rule).unwrap()).unwrap().values
    };
    let (a, b) = (spec(&f), spec(&p));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-8, "{x} {y}");
    }
}
