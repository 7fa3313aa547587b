use bs5_core::coeffs::{self, Rational, RationalPoly};
use bs5_core::hypergeom::{self, FnmSpec, Hypergeom, SeriesConfig};
use bs5_core::sim::{self, EmpiricalCDF, SimConfig};
use bs5_core::steady::{MarginalForm, SteadyModel};
use num_bigint::BigInt;
use proptest::prelude::*;
use std::sync::OnceLock;

fn model() -> &'static SteadyModel {
    static M: OnceLock<SteadyModel> = OnceLock::new();
    M.get_or_init(|| SteadyModel::default_model().unwrap())
}

fn hyp() -> Hypergeom {
    Hypergeom::new(SeriesConfig::default()).unwrap()
}

fn spec_strategy() -> impl Strategy<Value = FnmSpec> {
    prop_oneof![Just((2, 1)), Just((4, 5)), Just((1, 2)), Just((2, 4)), Just((2, 3))]
        .prop_map(|(n, m)| FnmSpec::new(n, m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauss_equation_holds(spec in spec_strategy(), x in -0.5f64..0.5) {
        let cfg = SeriesConfig::default();
        let f = |o| hypergeom::f_nm_deriv(spec, x, o, &cfg).unwrap();
        let n = spec.n() as f64 / 3.0;
        let (ab, apb, c) = (n * n + 2.0 / 9.0, 2.0 * n, spec.m() as f64 / 3.0);
        let terms = [x * (1.0 - x) * f(2), (c - (apb + 1.0) * x) * f(1), -ab * f(0)];
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        prop_assert!(terms.iter().sum::<f64>().abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn derivative_matches_difference_quotient(spec in spec_strategy(), x in -0.45f64..0.45) {
        let cfg = SeriesConfig::default();
        let h = 1e-5;
        let fd = (hypergeom::f_nm(spec, x + h, &cfg).unwrap() - hypergeom::f_nm(spec, x - h, &cfg).unwrap()) / (2.0 * h);
        prop_assert!((hypergeom::f_nm_deriv(spec, x, 1, &cfg).unwrap() - fd).abs() < 1e-8);
    }

    #[test]
    fn script_g_derivative_is_reflected_g(x in 0.0f64..=1.0) {
        let h = hyp();
        prop_assert!((h.script_g(x, 1).unwrap() - h.g(1.0 - x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn g2_reduces_to_g(x in 0.0f64..=1.0) {
        let h = hyp();
        prop_assert!((h.g2(x, 1.0).unwrap() - h.g(x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn g_satisfies_third_order_equation(x in 0.0f64..=1.0) {
        let h = hyp();
        let d = |o| h.g_deriv(x, o).unwrap();
        let t = 1.0 - x;
        let terms = [4.0 * d(0), -7.0 * t * d(1), 3.0 * t * t * d(2), -(2.0 + t * t * t) / 3.0 * d(3)];
        prop_assert!(terms.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn antiderivative_inverts_differentiation(c in prop::collection::vec(-50i64..50, 1..8), q in 1i64..20) {
        let p = RationalPoly::new(c.iter().map(|&v| Rational::new(BigInt::from(v), BigInt::from(q))).collect());
        let a = p.antiderivative();
        prop_assert_eq!(a.coeff(0), Rational::from_integer(BigInt::from(0)));
        for d in 0..p.coeffs().len() {
            prop_assert_eq!(a.coeff(d + 1) * Rational::from_integer(BigInt::from(d as i64 + 1)), p.coeff(d));
        }
    }

    #[test]
    fn qk_is_polynomial_evaluation(x in 0.0f64..=1.0, dy in 0.0f64..=1.0, k in 1usize..=5) {
        let y = x + (1.0 - x) * dy;
        let t = &coeffs::tables_up_to(5).unwrap()[k - 1];
        let direct: f64 = t.iter().map(|(i, j, v)| {
            let v: f64 = num_traits::ToPrimitive::to_f64(v).unwrap();
            v * x.powi(i as i32) * y.powi(j as i32)
        }).sum();
        prop_assert!((coeffs::eval_qk(t, x, y) - direct).abs() < 1e-12);
    }

    #[test]
    fn step_changes_three_neighbours(seed in any::<u64>(), n in 4usize..12, f in prop::collection::vec(0.0f64..1.0, 12)) {
        let cfg = SimConfig { n_species: n, seed, ..SimConfig::default() };
        let mut s = sim::init(&cfg).unwrap();
        s.set_fitness(&f[..n]).unwrap();
        let before = s.fitness().to_vec();
        let nu = sim::step(&mut s);
        let argmin = (0..n).fold(0, |m, i| if before[i] < before[m] { i } else { m });
        prop_assert_eq!(nu, argmin);
        let touched = [(nu + n - 1) % n, nu, (nu + 1) % n];
        let same = (0..n).filter(|i| before[*i] == s.fitness()[*i]).count();
        prop_assert_eq!(same, n - 3);
        for i in 0..n {
            if !touched.contains(&i) {
                prop_assert_eq!(before[i], s.fitness()[i]);
            }
        }
    }

    #[test]
    fn merge_is_order_independent(a in prop::collection::vec(0.0f64..1.0, 0..30), b in prop::collection::vec(0.0f64..1.0, 0..30)) {
        let ab = EmpiricalCDF::merge([a.clone(), b.clone()]);
        let ba = EmpiricalCDF::merge([b, a]);
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn ks_is_a_bounded_distance(v in prop::collection::vec(0.0f64..1.0, 1..50)) {
        let e = EmpiricalCDF::from_samples(v);
        let d = sim::ks_distance(&e, |x| x);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d >= 1.0 / (2.0 * e.len() as f64) - 1e-15);
        prop_assert_eq!(sim::ks_distance(&e, |x| e.eval(x)), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn joint_density_is_cyclic_and_reflection_invariant(f in prop::array::uniform5(0.0f64..0.99)) {
        let m = model();
        let base = m.joint_density(&f).unwrap().value;
        let rot = [f[2], f[3], f[4], f[0], f[1]];
        let rev = [f[4], f[3], f[2], f[1], f[0]];
        prop_assert!((m.joint_density(&rot).unwrap().value - base).abs() < 1e-12);
        prop_assert!((m.joint_density(&rev).unwrap().value - base).abs() < 1e-12);
    }

    #[test]
    fn cdf_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        let m = model();
        let f = |x| m.marginal_cdf(x, MarginalForm::Integrated).unwrap().value;
        prop_assert!(f(lo) <= f(hi) + 1e-15);
    }
}
