use fockspace::f32::{Complex, FockBasis, Lattice, PlaneRule, Symbol, WeightModel};
use fockspace::lattice::Window;
use fockspace::oscillation::{ida_profile, LocalSolver};

#[test]
fn basis_norms_in_single_precision() {
    let w = WeightModel::gaussian(1.0).unwrap();
    let rule = PlaneRule::gaussian(24, 1.0).unwrap();
    let basis = FockBasis::build(&w, 10, &rule).unwrap();
    let mut fact = 1.0f32;
    for (k, ck) in basis.norms().iter().enumerate() {
        if k > 0 {
            fact *= k as f32;
        }
        let want = std::f32::consts::PI * fact;
        assert!((ck * ck - want).abs() <= 1e-4 * want, "k={k}");
    }
}

#[test]
fn oscillation_and_lattice_in_single_precision() {
    let solver = LocalSolver::<f32>::new(1.0, 4, 16).unwrap();
    let g = ida_profile(&solver, &Symbol::conj_linear(), &[Complex::new(0.5, -1.0)], 2.0).unwrap();
    assert!((g[0] - std::f32::consts::FRAC_1_SQRT_2).abs() < 1e-4);
    let l = Lattice::build(Complex::new(0.0, 0.0), 1.0, Window::square(3.0)).unwrap();
    assert_eq!(l.len(), 49);
}
