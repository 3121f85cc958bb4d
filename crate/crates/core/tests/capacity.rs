use potkit::capacity::{p_capacity, riesz_capacity, Domain, RieszLpOptions, VariationalOptions};
use potkit::sets::{ParametricSet, Primitive};
use potkit::Point;

fn ball(c: [f64; 3], r: f64) -> Primitive {
    Primitive::Ball { center: c.to_vec(), radius: r }
}

fn omega() -> Domain {
    Domain::Ball { center: vec![0.0; 3], radius: 1.0 }
}

#[test]
fn riesz_capacity_is_monotone_and_subadditive() {
    let opts = RieszLpOptions::default();
    let (alpha, h) = (1.5, 1.0 / 16.0);
    let e1 = ParametricSet::new(3, vec![ball([-0.3, 0.0, 0.0], 0.1)]).unwrap();
    let e2 = ParametricSet::new(3, vec![ball([0.3, 0.0, 0.0], 0.15)]).unwrap();
    let big = ParametricSet::new(3, vec![ball([-0.3, 0.0, 0.0], 0.2)]).unwrap();
    let both = e1.union(&e2).unwrap();
    let c1 = riesz_capacity(&e1, &omega(), alpha, h, &opts).unwrap();
    let c2 = riesz_capacity(&e2, &omega(), alpha, h, &opts).unwrap();
    let cb = riesz_capacity(&big, &omega(), alpha, h, &opts).unwrap();
    let cu = riesz_capacity(&both, &omega(), alpha, h, &opts).unwrap();
    assert!(c1.value <= cb.value, "{} vs {}", c1.value, cb.value);
    assert!(cu.value <= (c1.value + c2.value) * 1.02);
    assert!(cu.value >= c2.value.max(c1.value) * 0.98);
    for c in [&c1, &c2, &cb, &cu] {
        assert!(c.lower.unwrap() <= c.value * (1.0 + 1e-12));
        assert!(c.upper.unwrap() >= c.lower.unwrap());
    }
}

#[test]
fn riesz_capacity_settles_under_refinement() {
    let e = ParametricSet::sphere(&Point::origin(3), 0.5).unwrap();
    let opts = RieszLpOptions::default();
    let a = riesz_capacity(&e, &omega(), 1.5, 1.0 / 8.0, &opts).unwrap().value;
    let b = riesz_capacity(&e, &omega(), 1.5, 1.0 / 16.0, &opts).unwrap().value;
    assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
}

#[test]
fn variational_capacity_scales_with_exponent_n_minus_p() {
    let p = 1.5;
    let o = Point::origin(2);
    let k = ParametricSet::ball(&o, 0.125).unwrap();
    let om = Domain::Ball { center: vec![0.0; 2], radius: 0.5 };
    let scales = [1.0, 0.5, 0.25];
    let h = 1.0 / 256.0;
    let values: Vec<f64> = scales
        .iter()
        .map(|l| p_capacity(&k.scaled(o.coords(), *l), &om.scaled(o.coords(), *l), p, h, &VariationalOptions::default()).unwrap().value)
        .collect();
    let slope = potkit::asymptotic::log_log_slope(&scales, &values);
    assert!((slope / (2.0 - p) - 1.0).abs() < 0.1, "slope {slope} from {values:?}");
}
