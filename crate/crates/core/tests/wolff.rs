use potkit::measures::{Atom, AtomicMeasure, Measure};
use potkit::wolff::{wolff_potential, WolffParams};
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
    fn grows_with_the_radius(raw in atoms(), x in prop::collection::vec(-1.0f64..1.0, 3), p in 1.2f64..3.0,
                             r1 in 0.01f64..2.0, dr in 0.0f64..2.0) {
        let mu = atomic(&raw);
        let x = Point::new(x).unwrap();
        let a = wolff_potential(&mu, &WolffParams::new(p, r1), &x).unwrap();
        let b = wolff_potential(&mu, &WolffParams::new(p, r1 + dr), &x).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn grows_with_the_measure(raw in atoms(), extra in prop::collection::vec(0.0f64..1.0, 6),
                              x in prop::collection::vec(-1.0f64..1.0, 3), p in 1.2f64..3.0) {
        let bigger: Vec<(Vec<f64>, f64)> = raw.iter().zip(&extra).map(|((y, m), e)| (y.clone(), m + e)).collect();
        let x = Point::new(x).unwrap();
        let params = WolffParams::new(p, 1.0);
        let a = wolff_potential(&atomic(&raw), &params, &x).unwrap();
        let b = wolff_potential(&atomic(&bigger), &params, &x).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn mass_scaling_is_exact(raw in atoms(), c in 0.01f64..100.0, x in prop::collection::vec(-1.0f64..1.0, 3), p in 1.2f64..3.0) {
        let scaled: Vec<(Vec<f64>, f64)> = raw.iter().map(|(y, m)| (y.clone(), c * m)).collect();
        let x = Point::new(x).unwrap();
        let params = WolffParams::new(p, 1.5);
        let a = wolff_potential(&atomic(&raw), &params, &x).unwrap();
        let b = wolff_potential(&atomic(&scaled), &params, &x).unwrap();
        prop_assume!(a > 0.0);
        prop_assert!((b / (c.powf(1.0 / (p - 1.0)) * a) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_grid_matches_closed_form(raw in atoms(), x in prop::collection::vec(-1.0f64..1.0, 3), p in 1.5f64..3.0) {
        let x = Point::new(x).unwrap();
        let mu = atomic(&raw);
        let exact = wolff_potential(&mu, &WolffParams::new(p, 1.0), &x).unwrap();
        let quad = wolff_potential(&mu, &WolffParams::new(p, 1.0).log_grid(256), &x).unwrap();
        prop_assume!(exact > 1e-8);
        prop_assert!((quad / exact - 1.0).abs() < 1e-6, "{} vs {}", quad, exact);
    }
}

#[test]
fn critical_exponent_is_continuous() {
    let mu = Measure::atom(Point::origin(3), 1.5).unwrap();
    for d in [0.1, 0.25, 0.5] {
        let x = Point::on_axis(3, 0, d);
        let below = wolff_potential(&mu, &WolffParams::new(3.0 - 1e-3, 1.0), &x).unwrap();
        let at = wolff_potential(&mu, &WolffParams::new(3.0, 1.0), &x).unwrap();
        assert!((below / at - 1.0).abs() < 0.01, "|x| = {d}: {below} vs {at}");
    }
}
