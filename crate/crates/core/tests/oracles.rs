//! Envelopes, gauges and subdifferentials against independently computed
//! reference values.

use infconv::subdiff::{convex_subdiff, normal_cone};
use infconv::{
    distance_fn, min_time, moreau_fast, ConvCase, FuncSpec, GaugeSet, Grid, NormKind, SetSpec,
    VecSet,
};

/// `min_w f(w) + α(w − x)²` by dense sampling of `w` on `[lo, hi]`, followed by
/// golden-section refinement around the best sample.
fn scalar_envelope(f: impl Fn(f64) -> f64, alpha: f64, x: f64, lo: f64, hi: f64) -> f64 {
    let obj = |w: f64| f(w) + alpha * (w - x) * (w - x);
    let n = 20_000;
    let step = (hi - lo) / n as f64;
    let best = (0..=n)
        .map(|i| lo + i as f64 * step)
        .fold(lo, |b, w| if obj(w) < obj(b) { w } else { b });
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if obj(c) < obj(d) {
            b = d;
        } else {
            a = c;
        }
    }
    obj(0.5 * (a + b)).min(obj(best))
}

#[test]
fn moreau_envelope_of_abs_is_huber() {
    let grid = Grid::line(-4.0, 4.0, 1601).unwrap();
    let h = grid.h_max();
    let abs = FuncSpec::norm(NormKind::L1).sample(&grid).unwrap();
    let env = moreau_fast(&abs, 1.0).unwrap();
    for i in 0..grid.len() {
        let x = grid.point(i)[0];
        if x.abs() > 3.5 {
            continue;
        }
        let want = scalar_envelope(f64::abs, 1.0, x, -4.0, 4.0);
        let got = env.value(i).to_f64();
        assert!((got - want).abs() <= 5.0 * h, "x = {x}: {got} vs {want}");
        // on this grid the prox point x ∓ 1/2 is itself a grid point
        assert!((got - want).abs() <= 1e-9, "x = {x}: {got} vs {want}");
    }
}

#[test]
fn moreau_envelope_of_a_quadratic_is_a_quadratic() {
    // inf_w β w² + α (w − x)² = αβ/(α+β) x²
    let (alpha, beta) = (2.0, 3.0);
    let grid = Grid::line(-2.0, 2.0, 801).unwrap();
    let f = FuncSpec::sq(beta).sample(&grid).unwrap();
    let env = moreau_fast(&f, alpha).unwrap();
    let h = grid.h_max();
    for i in 0..grid.len() {
        let x = grid.point(i)[0];
        let want = alpha * beta / (alpha + beta) * x * x;
        let got = env.value(i).to_f64();
        // the continuous minimiser is generally off-grid
        assert!(
            got >= want - 1e-12 && got <= want + (alpha + beta) * h * h,
            "x = {x}"
        );
    }
}

#[test]
fn distance_to_an_interval_and_asymmetric_minimal_time() {
    let grid = Grid::line(-2.0, 3.0, 501).unwrap();
    let unit = SetSpec::IntervalBox {
        lo: vec![0.0],
        hi: vec![1.0],
    };
    let d = distance_fn(&unit, &grid).unwrap();
    let t = min_time(&unit, &GaugeSet::interval(-1.0, 2.0).unwrap(), &grid).unwrap();
    for i in 0..grid.len() {
        let x = grid.point(i)[0];
        let dist = (-x).max(x - 1.0).max(0.0);
        // reaching the target from the left moves right at speed 2
        let time = if x < 0.0 {
            -x / 2.0
        } else {
            (x - 1.0).max(0.0)
        };
        assert!((d.value(i).to_f64() - dist).abs() < 1e-12, "x = {x}");
        assert!((t.value(i).to_f64() - time).abs() < 1e-12, "x = {x}");
    }
}

#[test]
fn distance_to_the_unit_disc() {
    let grid = Grid::square(-2.0, 2.0, 81).unwrap();
    let disc = SetSpec::Ball {
        center: vec![0.0, 0.0],
        radius: 1.0,
    };
    let d = distance_fn(&disc, &grid).unwrap();
    let h = grid.h_max();
    for i in 0..grid.len() {
        let p = grid.point(i);
        let want = (p[0].hypot(p[1]) - 1.0).max(0.0);
        let got = d.value(i).to_f64();
        // the target is only sampled at grid points, so distances overshoot by < h
        assert!(
            got >= want - 1e-12 && got <= want + h,
            "{p:?}: {got} vs {want}"
        );
    }
}

#[test]
fn minimal_time_to_two_points_under_a_tall_polygon() {
    let grid = Grid::square(-2.0, 2.0, 41).unwrap();
    let targets = [[1.0, 0.0], [-1.0, 0.0]];
    let target = SetSpec::FinitePoints {
        points: targets.iter().map(|t| t.to_vec()).collect(),
    };
    let tall = GaugeSet::polygon(vec![[1.0, -3.0], [1.0, 3.0], [-1.0, 3.0], [-1.0, -3.0]]).unwrap();
    let t = min_time(&target, &tall, &grid).unwrap();
    let rho = |d: [f64; 2]| d[0].abs().max(d[1].abs() / 3.0);
    for i in 0..grid.len() {
        let p = grid.point(i);
        let want = targets
            .iter()
            .map(|q| rho([q[0] - p[0], q[1] - p[1]]))
            .fold(f64::INFINITY, f64::min);
        assert!((t.value(i).to_f64() - want).abs() < 1e-12, "{p:?}");
    }
}

#[test]
fn fast_and_brute_envelopes_agree_in_2d() {
    let grid = Grid::square(-1.0, 1.0, 33).unwrap();
    let f = infconv::GridFn::from_fn(grid.clone(), |p| (3.0 * p[0]).sin() + p[1].abs()).unwrap();
    for alpha in [0.5, 1.0, 4.0] {
        let fast = moreau_fast(&f, alpha).unwrap();
        let brute = ConvCase::from_grid(f.clone(), FuncSpec::sq(alpha))
            .unwrap()
            .inf_conv_brute()
            .unwrap();
        for i in 0..grid.len() {
            assert!((fast.value(i).to_f64() - brute.value(i).to_f64()).abs() < 1e-9);
        }
    }
}

/// Support function of a set given by extreme points.
fn support(points: &[Vec<f64>], u: &[f64]) -> f64 {
    points
        .iter()
        .map(|v| v.iter().zip(u).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn polar_sets_match_the_sampled_support_inequality() {
    // ∂ρ_F(0) = {v : <v, x> ≤ ρ_F(x) ∀x}; its support function is ρ_F itself
    let sets = [
        GaugeSet::interval(-1.0, 2.0).unwrap(),
        GaugeSet::polygon(vec![[1.0, -3.0], [1.0, 3.0], [-1.0, 3.0], [-1.0, -3.0]]).unwrap(),
        GaugeSet::polygon(vec![[2.0, 0.0], [0.0, 1.0], [-1.0, 0.5], [-0.5, -1.0]]).unwrap(),
        GaugeSet::new(SetSpec::IntervalBox {
            lo: vec![-1.0, -0.5],
            hi: vec![2.0, 1.0],
        })
        .unwrap(),
    ];
    for f in &sets {
        let polar = f.subdiff_at_zero().unwrap().extreme_points();
        let dirs: Vec<Vec<f64>> = if f.dim() == 1 {
            vec![vec![1.0], vec![-1.0]]
        } else {
            (0..720)
                .map(|k| (k as f64).to_radians() / 2.0)
                .map(|a| vec![a.cos(), a.sin()])
                .collect()
        };
        for u in dirs {
            assert!(
                (support(&polar, &u) - f.eval(&u)).abs() < 1e-12,
                "{f:?} along {u:?}"
            );
        }
    }
    let disc = GaugeSet::unit_ball(2).subdiff_at_zero().unwrap();
    assert!(
        disc.hausdorff(&VecSet::Ball {
            center: [0.0, 0.0],
            radius: 1.0
        })
        .unwrap()
            < 1e-12
    );
}

#[test]
fn textbook_subdifferentials() {
    let abs = FuncSpec::norm(NormKind::L1);
    assert_eq!(
        convex_subdiff(&abs, &[0.0]).unwrap(),
        VecSet::interval(-1.0, 1.0)
    );
    assert_eq!(
        convex_subdiff(&abs, &[-2.0]).unwrap(),
        VecSet::interval(-1.0, -1.0)
    );
    let l1 = convex_subdiff(&abs, &[0.0, 1.0]).unwrap();
    assert!(
        l1.hausdorff(&VecSet::polygon(vec![[-1.0, 1.0], [1.0, 1.0]]))
            .unwrap()
            < 1e-12
    );
    let square = SetSpec::IntervalBox {
        lo: vec![0.0, 0.0],
        hi: vec![1.0, 1.0],
    };
    let corner = normal_cone(&square, &[1.0, 1.0]).unwrap();
    assert!(corner.contains(&[2.0, 3.0], 1e-12));
    assert!(!corner.contains(&[-1.0, 3.0], 1e-9));
    assert!(normal_cone(&square, &[0.5, 0.5]).unwrap().is_singleton());
    assert_eq!(
        convex_subdiff(&FuncSpec::indicator(square), &[2.0, 0.0]).unwrap(),
        VecSet::Empty
    );
}
