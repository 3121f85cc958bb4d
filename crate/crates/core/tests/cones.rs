use potkit::cones::{
    a_value, elementary_symmetric, member_a, member_gamma, member_r, p_gamma, p_gamma_k_formula, ConeSpec, CustomCone,
};
use proptest::prelude::*;

fn lambda() -> impl Strategy<Value = Vec<f64>> {
    (2usize..9).prop_flat_map(|n| prop::collection::vec(-3.0f64..3.0, n))
}

proptest! {
    #[test]
    fn membership_ignores_order(l in lambda(), seed in any::<u64>(), p in 2.0f64..8.0, k in 1usize..4) {
        let n = l.len();
        let mut perm = l.clone();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let p = p.min(n as f64);
        prop_assert_eq!(member_a(&l, p), member_a(&perm, p));
        prop_assert_eq!(member_r(&l, (k - 1) % (n / 2) + 1), member_r(&perm, (k - 1) % (n / 2) + 1));
        prop_assert_eq!(member_gamma(&l, k.min(n)), member_gamma(&perm, k.min(n)));
    }

    #[test]
    fn membership_ignores_positive_scaling(l in lambda(), c in 0.001f64..1000.0, k in 1usize..4) {
        let n = l.len();
        let m: Vec<f64> = l.iter().map(|v| c * v).collect();
        prop_assert_eq!(member_a(&l, 2.5f64.min(n as f64)), member_a(&m, 2.5f64.min(n as f64)));
        prop_assert_eq!(member_r(&l, 1), member_r(&m, 1));
        prop_assert_eq!(member_gamma(&l, k.min(n)), member_gamma(&m, k.min(n)));
    }

    #[test]
    fn a_cones_are_nested(l in lambda(), q in 2.0f64..8.0, dp in 0.0f64..4.0) {
        let n = l.len() as f64;
        let q = q.min(n);
        let p = (q + dp).min(n);
        if member_a(&l, p) {
            prop_assert!(member_a(&l, q));
        }
    }
}

#[test]
fn custom_a_cone_round_trips() {
    for n in [3usize, 4, 6, 9] {
        for p in [2.0, 2.5, 3.0] {
            if p > n as f64 {
                continue;
            }
            let custom = CustomCone::new("A", n, 1.0, move |l: &[f64]| a_value(l, p)).unwrap();
            let got = p_gamma(&ConeSpec::Custom(custom), n).unwrap();
            assert!((got - p).abs() < 1e-9, "n = {n}, p = {p}: {got}");
        }
    }
}

#[test]
fn gamma_boundary_ray_is_exact() {
    for n in 2..=12usize {
        for k in 1..n {
            let mut l = vec![1.0; n];
            l[0] = -((n - k) as f64) / k as f64;
            assert!(member_gamma(&l, k), "n = {n}, k = {k}");
            assert!(elementary_symmetric(&l, k)[k].abs() < 1e-12 * 2f64.powi(n as i32));
            let p = p_gamma(&ConeSpec::Gamma { k }, n).unwrap();
            assert!((p - p_gamma_k_formula(n, k)).abs() < 1e-9);
        }
    }
}
