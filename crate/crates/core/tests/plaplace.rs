use potkit::measures::Measure;
use potkit::penergy::GridProblem;
use potkit::plaplace::{comparison_violation, project_measure, solve_p_dirichlet, BoundaryData, PSolveOptions};
use potkit::{BoxDomain, EvaluationGrid, Mirror, Point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn square(cells: usize) -> EvaluationGrid {
    EvaluationGrid::new(&BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), 1.0 / cells as f64).unwrap()
}

fn boundary_nodes(g: &EvaluationGrid) -> Vec<bool> {
    (0..g.node_count()).map(|i| g.on_boundary(i, &Mirror::none(2))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn raising_boundary_data_never_lowers_the_solution(seed in any::<u64>(), p in 1.3f64..4.0) {
        let g = square(16);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = a.iter().map(|v| v + rng.gen_range(0.0..0.5)).collect();
        let zero = Measure::zero(2);
        let opts = PSolveOptions::default();
        let lo = solve_p_dirichlet(&g, &Mirror::none(2), &zero, p, &BoundaryData::Nodal { values: a }, &opts).unwrap();
        let hi = solve_p_dirichlet(&g, &Mirror::none(2), &zero, p, &BoundaryData::Nodal { values: b }, &opts).unwrap();
        prop_assert!(comparison_violation(&lo, &hi) <= 1e-10);
    }

    #[test]
    fn harmonic_extremes_sit_on_the_boundary(seed in any::<u64>(), p in 1.3f64..4.0) {
        let g = square(16);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let on_b = boundary_nodes(&g);
        let (bmin, bmax) = data.iter().zip(&on_b).filter(|(_, b)| **b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| (lo.min(*v), hi.max(*v)));
        let s = solve_p_dirichlet(&g, &Mirror::none(2), &Measure::zero(2), p, &BoundaryData::Nodal { values: data }, &PSolveOptions::default()).unwrap();
        for v in &s.values {
            prop_assert!(*v >= bmin - 1e-10 && *v <= bmax + 1e-10);
        }
    }

    #[test]
    fn perturbations_cost_energy(seed in any::<u64>(), p in 1.5f64..3.5) {
        let g = square(16);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = solve_p_dirichlet(&g, &Mirror::none(2), &Measure::zero(2), p, &BoundaryData::Nodal { values: data }, &PSolveOptions::default()).unwrap();
        let prob = GridProblem::new(g.clone(), Mirror::none(2), p).unwrap();
        let base = prob.dirichlet_energy(&s.values);
        let on_b = boundary_nodes(&g);
        let competitor: Vec<f64> = s.values.iter().zip(&on_b)
            .map(|(v, b)| if *b { *v } else { v + rng.gen_range(-0.05..0.05) })
            .collect();
        prop_assert!(prob.dirichlet_energy(&competitor) >= base * (1.0 - 1e-9));
    }
}

#[test]
fn weak_form_balances_the_load() {
    let g = square(32);
    let mirror = Mirror::none(2);
    let mu = Measure::atom(Point::new(vec![0.4, 0.55]).unwrap(), 1.0).unwrap();
    let p = 2.5;
    let opts = PSolveOptions { energy_rtol: 1e-12, ..PSolveOptions::default() };
    let s = solve_p_dirichlet(&g, &mirror, &mu, p, &BoundaryData::Constant { value: 0.0 }, &opts).unwrap();
    let mut prob = GridProblem::new(g.clone(), mirror.clone(), p).unwrap();
    prob.load = project_measure(&mu, &g, &mirror).unwrap();
    prob.fixed = boundary_nodes(&g);
    let mut grad = vec![0.0; g.node_count()];
    prob.functional(&s.values, &mut grad);
    // test functions: interior bumps sin(πx)sin(πy) and sin(2πx)sin(πy)
    for (kx, ky) in [(1.0, 1.0), (2.0, 1.0), (1.0, 3.0)] {
        let phi: Vec<f64> = (0..g.node_count())
            .map(|i| {
                let x = g.node_coords(i);
                (kx * std::f64::consts::PI * x[0]).sin() * (ky * std::f64::consts::PI * x[1]).sin()
            })
            .collect();
        let residual: f64 = grad.iter().zip(&phi).map(|(r, f)| r * f).sum();
        let load: f64 = prob.load.iter().zip(&phi).map(|(m, f)| m * f).sum();
        assert!(residual.abs() <= 1e-4 * load.abs().max(1e-3), "({kx}, {ky}): {residual} against {load}");
    }
}
