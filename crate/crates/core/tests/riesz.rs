use potkit::asymptotic::ApproachPath;
use potkit::measures::{Atom, AtomicMeasure, Measure};
use potkit::riesz::{riesz_asymptotic_report, riesz_potential, RieszParams};
use potkit::Point;
use proptest::prelude::*;

fn atomic(raw: &[(Vec<f64>, f64)]) -> Measure {
    let atoms = raw.iter().map(|(x, m)| Atom { point: Point::new(x.clone()).unwrap(), mass: *m }).collect();
    Measure::Atomic(AtomicMeasure::new(3, atoms).unwrap())
}

fn atoms() -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 3), 0.01f64..2.0), 1..6)
}

proptest! {
    #[test]
    fn linear_in_the_measure(a in atoms(), b in atoms(), x in prop::collection::vec(2.0f64..3.0, 3), alpha in 1.01f64..2.99) {
        let params = RieszParams::new(alpha, None);
        let x = Point::new(x).unwrap();
        let (ma, mb) = (atomic(&a), atomic(&b));
        let sum = Measure::sum(vec![ma.clone(), mb.clone()]).unwrap();
        let lhs = riesz_potential(&sum, &params, &x).unwrap();
        let rhs = riesz_potential(&ma, &params, &x).unwrap() + riesz_potential(&mb, &params, &x).unwrap();
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moving_atoms_outward_lowers_the_potential(
        d1 in prop::collection::vec(-1.0f64..1.0, 3), d2 in prop::collection::vec(-1.0f64..1.0, 3),
        r1 in 0.1f64..1.0, r2 in 0.1f64..1.0, s in 1.0f64..3.0, alpha in 1.01f64..2.99,
    ) {
        let unit = |d: &[f64]| { let l = d.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3); d.iter().map(|v| v / l).collect::<Vec<f64>>() };
        let (u1, u2) = (unit(&d1), unit(&d2));
        prop_assume!(u1.iter().zip(&u2).any(|(a, b)| (a - b).abs() > 1e-6));
        let place = |k: f64| atomic(&[
            (u1.iter().map(|v| v * r1 * k).collect(), 1.0),
            (u2.iter().map(|v| v * r2 * k).collect(), 0.5),
        ]);
        let params = RieszParams::new(alpha, None);
        let o = Point::origin(3);
        let near = riesz_potential(&place(1.0), &params, &o).unwrap();
        let far = riesz_potential(&place(s), &params, &o).unwrap();
        prop_assert!(far <= near * (1.0 + 1e-12));
    }

    #[test]
    fn scales_with_dilation(raw in atoms(), x in prop::collection::vec(1.5f64..2.5, 3), lambda in 0.05f64..4.0, alpha in 1.01f64..2.99) {
        let params = RieszParams::new(alpha, None);
        let scaled: Vec<(Vec<f64>, f64)> = raw.iter().map(|(p, m)| (p.iter().map(|v| v * lambda).collect(), *m)).collect();
        let x = Point::new(x).unwrap();
        let base = riesz_potential(&atomic(&raw), &params, &x).unwrap();
        let moved = riesz_potential(&atomic(&scaled), &params, &x.scaled(lambda)).unwrap();
        prop_assert!((moved / (lambda.powf(alpha - 3.0) * base) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn single_atom_ratio_is_the_mass(mass in 0.01f64..10.0, alpha in 1.01f64..2.99) {
        let o = Point::origin(3);
        let mu = Measure::atom(o.clone(), mass).unwrap();
        let path = ApproachPath::geometric(vec![0.0, 0.0, 1.0], 2.0, 1, 12).unwrap();
        let rep = riesz_asymptotic_report(&mu, &RieszParams::new(alpha, None), &o, &path).unwrap();
        for r in &rep.report.ratios {
            prop_assert!((r / mass - 1.0).abs() < 1e-12);
        }
    }
}
