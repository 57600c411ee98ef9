mod common;

use common::{cumulative, cumulative_instance, holds, instance, negatable_instance, rho, LIMITS};
use cumstl::semantics::{self, smooth, SmoothParams};
use cumstl::stl::parse;
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn traditional_matches_reference(seed in any::<u64>()) {
        let inst = instance(seed, &LIMITS);
        let f = parse(&inst.formula.text(), inst.dim).unwrap();
        let traj = inst.signal.trajectory();
        let got = semantics::rho(&f, &traj, 0).unwrap();
        prop_assert!(close(got, rho(&inst.formula, &inst.signal, 0)), "{}", inst.formula.text());
        let verdict = semantics::sat(&f, &traj, 0).unwrap();
        if got != 0.0 {
            prop_assert_eq!(verdict.is_true(), holds(&inst.formula, &inst.signal, 0));
        }
    }

    #[test]
    fn cumulative_matches_reference(seed in any::<u64>()) {
        let inst = cumulative_instance(seed, &LIMITS);
        let f = parse(&inst.formula.text(), inst.dim).unwrap();
        let traj = inst.signal.trajectory();
        let (p, m) = cumulative(&inst.formula, &inst.signal, 0);
        prop_assert!(close(semantics::rho_plus(&f, &traj, 0).unwrap(), p));
        prop_assert!(close(semantics::rho_minus(&f, &traj, 0).unwrap(), m));
        prop_assert!(p >= 0.0 && m <= 0.0);
    }

    #[test]
    fn cumulative_sign_agrees_with_traditional(seed in any::<u64>()) {
        let inst = cumulative_instance(seed, &LIMITS);
        let f = parse(&inst.formula.text(), inst.dim).unwrap();
        let traj = inst.signal.trajectory();
        let r = semantics::rho(&f, &traj, 0).unwrap();
        let p = semantics::rho_plus(&f, &traj, 0).unwrap();
        prop_assert_eq!(p > 0.0, r > 0.0, "{}", inst.formula.text());
        if r > 0.0 {
            prop_assert!(holds(&inst.formula, &inst.signal, 0));
        }
    }

    #[test]
    fn negated_eventualities_are_rejected(seed in any::<u64>()) {
        let inst = instance(seed, &LIMITS);
        let f = parse(&inst.formula.text(), inst.dim).unwrap();
        let traj = inst.signal.trajectory();
        let rejected = semantics::rho_plus(&f, &traj, 0).is_err();
        prop_assert_eq!(rejected, inst.formula.has_negated_eventuality());
    }

    #[test]
    fn de_morgan_and_double_negation(seed in any::<u64>(), other in any::<u64>()) {
        let a = negatable_instance(seed, &LIMITS);
        let b = negatable_instance(other, &LIMITS);
        let dim = a.dim.max(b.dim);
        let traj = if a.dim >= b.dim { a.signal.trajectory() } else { b.signal.trajectory() };
        prop_assume!(traj.len() > a.formula.horizon().max(b.formula.horizon()));
        let (ta, tb) = (a.formula.text(), b.formula.text());
        let eval = |text: String| semantics::rho_plus(&parse(&text, dim).unwrap(), &traj, 0).unwrap();
        prop_assert_eq!(eval(format!("!!{ta}")).to_bits(), eval(ta.clone()).to_bits());
        let lhs = eval(format!("!({ta} && {tb})"));
        let rhs = eval(format!("(!{ta} || !{tb})"));
        prop_assert_eq!(lhs.to_bits(), rhs.to_bits());
    }

    #[test]
    fn smooth_max_error_is_bounded(values in prop::collection::vec(-50.0f64..50.0, 1..20), beta in 0.1f64..100.0) {
        let exact = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gap = smooth::smooth_max(&values, beta) - exact;
        let bound = (values.len() as f64).ln() / beta;
        prop_assert!(gap >= -1e-12 && gap <= bound + 1e-12, "gap {gap} bound {bound}");
        let smin = smooth::smooth_min(&values, beta) - values.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(smin <= 1e-12 && smin >= -bound - 1e-12);
    }

    #[test]
    fn smooth_robustness_approaches_exact(seed in any::<u64>()) {
        let inst = cumulative_instance(seed, &LIMITS);
        let f = parse(&inst.formula.text(), inst.dim).unwrap();
        let traj = inst.signal.trajectory();
        let exact = semantics::rho(&f, &traj, 0).unwrap();
        let near = semantics::rho_smooth(&f, &traj, 0, SmoothParams::new(1e6).unwrap()).unwrap();
        prop_assert!((near - exact).abs() < 1e-3, "{near} vs {exact}");
    }
}
