use potkit::measures::{Atom, AtomicMeasure, Measure};
use potkit::Point;
use proptest::prelude::*;

fn atoms(n: usize) -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    prop::collection::vec((prop::collection::vec(-1.0f64..1.0, n), 0.0f64..2.0), 1..8)
}

fn atomic(n: usize, raw: &[(Vec<f64>, f64)]) -> AtomicMeasure {
    let atoms = raw.iter().map(|(x, m)| Atom { point: Point::new(x.clone()).unwrap(), mass: *m }).collect();
    AtomicMeasure::new(n, atoms).unwrap()
}

proptest! {
    #[test]
    fn ball_mass_is_monotone(raw in atoms(3), x in prop::collection::vec(-1.0f64..1.0, 3),
                             mut ts in prop::collection::vec(0.0f64..4.0, 2..12)) {
        let mu = Measure::Atomic(atomic(3, &raw));
        let x = Point::new(x).unwrap();
        ts.sort_by(f64::total_cmp);
        let m: Vec<f64> = ts.iter().map(|t| mu.ball_mass(&x, *t).unwrap()).collect();
        prop_assert!(m.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn ball_mass_is_additive(a in atoms(2), b in atoms(2), x in prop::collection::vec(-1.0f64..1.0, 2), t in 0.0f64..3.0) {
        let (ma, mb) = (Measure::Atomic(atomic(2, &a)), Measure::Atomic(atomic(2, &b)));
        let x = Point::new(x).unwrap();
        let sum = Measure::sum(vec![ma.clone(), mb.clone()]).unwrap();
        let lhs = sum.ball_mass(&x, t).unwrap();
        let rhs = ma.ball_mass(&x, t).unwrap() + mb.ball_mass(&x, t).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn radial_view_agrees_at_its_center(raw in atoms(3), which in 0usize..8,
                                        ts in prop::collection::vec(0.0f64..3.0, 1..10)) {
        let am = atomic(3, &raw);
        let i = which % raw.len();
        let radial = Measure::Radial(am.as_profile_about(i).unwrap());
        let mu = Measure::Atomic(am);
        let c = Point::new(raw[i].0.clone()).unwrap();
        for t in ts {
            let (a, b) = (mu.ball_mass(&c, t).unwrap(), radial.ball_mass(&c, t).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a), "t = {}: {} vs {}", t, a, b);
        }
    }
}
