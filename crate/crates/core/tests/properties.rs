//! Randomised invariants of grids, specs, gauges, envelopes and subgradients.

use infconv::grid::lipschitz_estimate;
use infconv::subdiff::convex_subdiff;
use infconv::{
    ConvCase, ExtReal, FuncSpec, GaugeSet, Grid, GridFn, IndexBox, NormKind, SetSpec, VecSet,
};
use proptest::prelude::*;

fn gauges() -> Vec<GaugeSet> {
    vec![
        GaugeSet::interval(-1.0, 1.0).unwrap(),
        GaugeSet::interval(-1.0, 2.0).unwrap(),
        GaugeSet::unit_ball(2),
        GaugeSet::polygon(vec![[1.0, -3.0], [1.0, 3.0], [-1.0, 3.0], [-1.0, -3.0]]).unwrap(),
        GaugeSet::polygon(vec![[2.0, 0.0], [0.0, 1.0], [-1.0, 0.5], [-0.5, -1.0]]).unwrap(),
    ]
}

fn vec_in(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, dim)
}

fn random_fn_1d(n: usize) -> impl Strategy<Value = Vec<Option<f64>>> {
    prop::collection::vec(prop::option::weighted(0.85, -3.0..3.0f64), n)
}

fn to_gridfn(grid: Grid, vals: &[Option<f64>]) -> GridFn {
    let mut vals: Vec<ExtReal> = vals
        .iter()
        .map(|v| v.map_or(ExtReal::PosInf, ExtReal::Finite))
        .collect();
    vals[0] = ExtReal::Finite(0.0);
    GridFn::new(grid, vals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn gauges_are_homogeneous_subadditive_and_coercive(k in 0usize..5, x in vec_in(2), y in vec_in(2), t in 0.0..10.0f64) {
        let g = &gauges()[k];
        let d = g.dim();
        let (x, y) = (&x[..d], &y[..d]);
        let gx = g.eval(x);
        let tx: Vec<f64> = x.iter().map(|c| t * c).collect();
        prop_assert!((g.eval(&tx) - t * gx).abs() <= 1e-12 * (1.0 + t * gx));
        let s: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        prop_assert!(g.eval(&s) <= gx + g.eval(y) + 1e-10);
        let (_, m) = g.coercivity();
        let nx = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!(m * nx <= gx + 1e-12 * (1.0 + gx));
    }

    #[test]
    fn polar_vertices_support_the_gauge(k in 0usize..5, x in vec_in(2)) {
        let g = &gauges()[k];
        let x = &x[..g.dim()];
        let polar = g.subdiff_at_zero().unwrap();
        let verts = if g.dim() == 1 {
            polar.extreme_points()
        } else {
            // the Euclidean ball's polar is a disc: test directions on its rim
            match &polar {
                VecSet::Ball { center, radius } => (0..64)
                    .map(|i| {
                        let a = i as f64 * std::f64::consts::TAU / 64.0;
                        vec![center[0] + radius * a.cos(), center[1] + radius * a.sin()]
                    })
                    .collect(),
                _ => polar.extreme_points(),
            }
        };
        for v in verts {
            let ip: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
            prop_assert!(ip <= g.eval(x) + 1e-10, "v = {v:?}");
        }
    }

    #[test]
    fn sums_and_shifts_evaluate_termwise(x in -3.0..3.0f64, c in -2.0..2.0f64, alpha in 0.1..3.0f64) {
        let abs = FuncSpec::norm(NormKind::L1);
        let sum = FuncSpec::Sum { terms: vec![abs.clone(), FuncSpec::sq(alpha)] };
        let want = abs.eval(&[x]).unwrap().to_f64() + FuncSpec::sq(alpha).eval(&[x]).unwrap().to_f64();
        prop_assert_eq!(sum.eval(&[x]).unwrap().to_f64(), want);
        let shifted = FuncSpec::Shift { inner: Box::new(sum.clone()), offset: vec![c] };
        prop_assert_eq!(shifted.eval(&[x]).unwrap(), sum.eval(&[x - c]).unwrap());
        let ind = FuncSpec::indicator(SetSpec::IntervalBox { lo: vec![-1.0], hi: vec![1.0] });
        let with_ind = FuncSpec::Sum { terms: vec![abs, ind.clone()] };
        prop_assert_eq!(with_ind.eval(&[x]).unwrap().is_finite(), ind.eval(&[x]).unwrap().is_finite());
    }

    #[test]
    fn sampling_is_exact_at_grid_sites(n in 5usize..60, lo in -3.0..0.0f64, width in 0.5..4.0f64) {
        let grid = Grid::line(lo, lo + width, n).unwrap();
        let spec = FuncSpec::max_affine(vec![(vec![1.0], -0.5), (vec![-2.0], 0.25)]);
        let g = spec.sample(&grid).unwrap();
        for i in 0..grid.len() {
            prop_assert_eq!(g.value(i), spec.eval(&grid.point(i)).unwrap());
            prop_assert_eq!(g.eval(&[i]).unwrap(), g.value(i));
        }
    }

    #[test]
    fn lipschitz_estimates_grow_with_the_region(vals in random_fn_1d(40), a in 0usize..20, b in 20usize..40) {
        let g = to_gridfn(Grid::line(0.0, 1.0, 40).unwrap(), &vals);
        let inner = IndexBox { lo: vec![a + 5], hi: vec![b.max(a + 6)] };
        let outer = IndexBox { lo: vec![a], hi: vec![39] };
        prop_assume!(inner.is_subset_of(&outer));
        // regions with fewer than two finite points have no estimate
        let Ok(small) = lipschitz_estimate(&g, &inner) else { return Ok(()) };
        prop_assert!(small <= lipschitz_estimate(&g, &outer).unwrap());
    }

    #[test]
    fn lipschitz_estimate_is_bounded_by_the_analytic_constant(slope in -4.0..4.0f64, n in 3usize..30) {
        let grid = Grid::square(-1.0, 1.0, n).unwrap();
        let g = GridFn::from_fn(grid.clone(), |p| slope * p[0].abs() - 0.5 * slope * p[1]).unwrap();
        let ell = (slope * slope + 0.25 * slope * slope).sqrt();
        prop_assert!(lipschitz_estimate(&g, &grid.full_box()).unwrap() <= ell + 1e-12);
    }

    #[test]
    fn envelope_sits_between_zero_and_f(vals in random_fn_1d(48), k in 0usize..2) {
        let grid = Grid::line(-2.0, 2.0, 48).unwrap();
        let nonneg: Vec<Option<f64>> = vals.iter().map(|v| v.map(f64::abs)).collect();
        let g = to_gridfn(grid, &nonneg);
        let phi = if k == 0 { FuncSpec::sq(1.5) } else { FuncSpec::gauge(GaugeSet::interval(-1.0, 2.0).unwrap()) };
        let case = ConvCase::from_grid(g.clone(), phi).unwrap();
        let env = case.inf_conv_brute().unwrap();
        for i in 0..g.grid().len() {
            prop_assert!(env.value(i).to_f64() <= g.value(i).to_f64());
            prop_assert!(env.value(i).to_f64() >= 0.0);
        }
    }

    #[test]
    fn s0_is_the_fixed_point_set_and_contains_the_domain(vals in random_fn_1d(64), scale in 0.01..0.4f64) {
        // f = scale·sin(3x) is 3·scale-Lipschitz; the gauge below has
        // m = 2ℓ + 0.5 > ℓ, so every grid point should be its own projection
        let grid = Grid::line(-1.0, 1.0, 64).unwrap();
        let g = GridFn::from_fn(grid.clone(), |p| scale * (p[0] * 3.0).sin()).unwrap();
        let ell = 3.0 * scale;
        let m = 2.0 * ell + 0.5;
        let phi = FuncSpec::gauge(GaugeSet::interval(-1.0 / m, 1.0 / m).unwrap());
        let case = ConvCase::from_grid(g.clone(), phi.clone()).unwrap();
        let s0 = case.s0_set().unwrap();
        let fixed: Vec<usize> = (0..grid.len()).filter(|&x| case.projection_set(x).contains(x)).collect();
        prop_assert_eq!(&s0, &fixed);
        prop_assert_eq!(s0.len(), grid.len());
        // with +∞ holes: still fixed points exactly on S₀
        let holes = to_gridfn(grid.clone(), &vals);
        let case = ConvCase::from_grid(holes.clone(), phi).unwrap();
        let s0 = case.s0_set().unwrap();
        let fixed: Vec<usize> = holes.effective_domain().into_iter().filter(|&x| case.projection_set(x).contains(x)).collect();
        prop_assert_eq!(s0, fixed);
    }

    #[test]
    fn convex_subgradients_satisfy_the_global_inequality(x0 in -2.0..2.0f64, y0 in -2.0..2.0f64, k in 0usize..4) {
        let specs = [
            FuncSpec::norm(NormKind::L1),
            FuncSpec::norm(NormKind::L2),
            FuncSpec::norm(NormKind::LInf),
            FuncSpec::max_affine(vec![(vec![1.0, 0.0], 0.0), (vec![0.0, 1.0], 0.0), (vec![-1.0, -1.0], 0.5)]),
        ];
        let f = &specs[k];
        // snap to a coarse lattice so kinks are hit often
        let xb = [(x0 * 4.0).round() / 4.0, (y0 * 4.0).round() / 4.0];
        let fx = f.eval(&xb).unwrap().to_f64();
        let sub = convex_subdiff(f, &xb).unwrap();
        let grid = Grid::square(-3.0, 3.0, 25).unwrap();
        for v in sub.extreme_points() {
            for i in 0..grid.len() {
                let p = grid.point(i);
                let lhs = v[0] * (p[0] - xb[0]) + v[1] * (p[1] - xb[1]);
                prop_assert!(lhs <= f.eval(&p).unwrap().to_f64() - fx + 1e-9);
            }
        }
    }

    #[test]
    fn hausdorff_is_a_metric_on_polygons(
        a in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..6),
        b in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..6),
        c in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..6),
    ) {
        let poly = |v: &[(f64, f64)]| VecSet::polygon(v.iter().map(|(x, y)| [*x, *y]).collect());
        let (a, b, c) = (poly(&a), poly(&b), poly(&c));
        let ab = a.hausdorff(&b).unwrap();
        prop_assert!((ab - b.hausdorff(&a).unwrap()).abs() < 1e-12);
        prop_assert!(a.hausdorff(&a).unwrap() < 1e-12);
        prop_assert!(ab <= a.hausdorff(&c).unwrap() + c.hausdorff(&b).unwrap() + 1e-9);
    }
}

#[test]
fn grid_syntax_requires_two_points_per_axis() {
    assert!(Grid::parse("-1:1:2").is_ok());
    assert!(Grid::parse("-1:1:1").is_err());
    assert!(Grid::parse("-1:1:5,0:2:3").is_ok());
    assert!(Grid::parse("1:-1:5").is_err());
    assert!(Grid::parse("-1:1").is_err());
    assert_eq!(Grid::parse("-4:4:1601").unwrap().to_string(), "-4:4:1601");
}
