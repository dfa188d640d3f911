//! The builtin corpus: twelve cases covering distance functions to intervals
//! and finite sets, an asymmetric minimal time function, Moreau envelopes,
//! 2D ball/square/polygon targets and the `|·| ⊕ c|·|` family.

use super::{CheckCase, Constants, Tolerances};
use crate::funcspec::{FuncSpec, NormKind, SetSpec};
use crate::gauge::GaugeSet;
use crate::grid::Grid;

#[allow(clippy::too_many_arguments)]
fn case(
    id: &str,
    f: FuncSpec,
    phi: FuncSpec,
    grid: &str,
    points: &[&[f64]],
    ell: Option<f64>,
    m: Option<f64>,
    envelope: Option<FuncSpec>,
) -> CheckCase {
    CheckCase {
        id: id.to_string(),
        f,
        phi,
        grid: Grid::parse(grid).expect("builtin grid"),
        points: points.iter().map(|p| p.to_vec()).collect(),
        constants: Constants {
            ell,
            m,
            amp_alpha: None,
        },
        envelope,
        expected_sets: Vec::new(),
        tolerances: Tolerances::default(),
    }
}

fn interval(lo: f64, hi: f64) -> SetSpec {
    SetSpec::IntervalBox {
        lo: vec![lo],
        hi: vec![hi],
    }
}

fn gauge_interval(lo: f64, hi: f64) -> FuncSpec {
    FuncSpec::gauge(GaugeSet::interval(lo, hi).expect("builtin gauge"))
}

fn affine1(pieces: &[(f64, f64)]) -> FuncSpec {
    FuncSpec::max_affine(pieces.iter().map(|(s, b)| (vec![*s], *b)).collect())
}

pub fn builtin_corpus() -> Vec<CheckCase> {
    let abs = FuncSpec::norm(NormKind::L1);
    let unit = interval(0.0, 1.0);
    let pair_1d = SetSpec::FinitePoints {
        points: vec![vec![-1.0], vec![1.0]],
    };
    let square = SetSpec::IntervalBox {
        lo: vec![0.0, 0.0],
        hi: vec![1.0, 1.0],
    };
    let box_gauge = GaugeSet::new(SetSpec::IntervalBox {
        lo: vec![-1.0, -1.0],
        hi: vec![1.0, 1.0],
    })
    .unwrap();
    let tall = GaugeSet::polygon(vec![[1.0, -3.0], [1.0, 3.0], [-1.0, 3.0], [-1.0, -3.0]]).unwrap();
    let square_dist = FuncSpec::max_affine(vec![
        (vec![-1.0, 0.0], 0.0),
        (vec![1.0, 0.0], -1.0),
        (vec![0.0, -1.0], 0.0),
        (vec![0.0, 1.0], -1.0),
        (vec![0.0, 0.0], 0.0),
    ]);
    vec![
        case(
            "dist_interval_1d",
            FuncSpec::indicator(unit.clone()),
            gauge_interval(-1.0, 1.0),
            "-2:3:501",
            &[&[-1.0], &[-0.5], &[0.0], &[0.5], &[1.0], &[2.0]],
            Some(0.0),
            Some(1.0),
            Some(affine1(&[(-1.0, 0.0), (0.0, 0.0), (1.0, -1.0)])),
        ),
        case(
            "dist_finite_1d",
            FuncSpec::indicator(pair_1d.clone()),
            gauge_interval(-1.0, 1.0),
            "-3:3:601",
            &[&[0.0], &[-1.0], &[1.0], &[2.0], &[0.5]],
            Some(0.0),
            Some(1.0),
            None,
        ),
        case(
            "mintime_asym_1d",
            FuncSpec::indicator(unit.clone()),
            gauge_interval(-1.0, 2.0),
            "-2:3:501",
            &[&[-1.0], &[0.0], &[0.5], &[1.0], &[2.0]],
            Some(0.0),
            Some(0.5),
            Some(affine1(&[(-0.5, 0.0), (0.0, 0.0), (1.0, -1.0)])),
        ),
        case(
            "moreau_abs_1d",
            abs.clone(),
            FuncSpec::sq(1.0),
            "-4:4:1601",
            &[&[-2.0], &[-0.5], &[0.0], &[0.25], &[2.0]],
            Some(1.0),
            None,
            None,
        ),
        case(
            "moreau_point_1d",
            FuncSpec::indicator(interval(0.0, 0.0)),
            FuncSpec::sq(2.0),
            "-1:1:201",
            &[&[-0.5], &[0.0], &[0.3], &[0.75]],
            Some(0.0),
            None,
            Some(FuncSpec::sq(2.0)),
        ),
        case(
            "moreau_pair_1d",
            FuncSpec::indicator(pair_1d),
            FuncSpec::sq(1.0),
            "-3:3:601",
            &[&[0.0], &[0.5], &[-1.0], &[1.0], &[2.0]],
            Some(0.0),
            None,
            None,
        ),
        case(
            "dist_ball_2d",
            FuncSpec::indicator(SetSpec::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            }),
            FuncSpec::gauge(GaugeSet::unit_ball(2)),
            "-2:2:81,-2:2:81",
            &[
                &[0.0, 0.0],
                &[1.0, 0.0],
                &[0.6, 0.8],
                &[0.0, -1.0],
                &[1.5, 0.0],
                &[1.2, 1.6],
            ],
            Some(0.0),
            Some(1.0),
            None,
        ),
        case(
            "dist_square_2d",
            FuncSpec::indicator(square),
            FuncSpec::gauge(box_gauge),
            "-1:2:61,-1:2:61",
            &[
                &[0.5, 0.5],
                &[0.0, 0.0],
                &[1.0, 1.0],
                &[0.5, 0.0],
                &[1.5, 0.5],
                &[-0.5, -0.5],
                &[1.5, 1.5],
            ],
            Some(0.0),
            Some(std::f64::consts::FRAC_1_SQRT_2),
            Some(square_dist),
        ),
        case(
            "l1_c2",
            abs.clone(),
            gauge_interval(-0.5, 0.5),
            "-2:2:401",
            &[&[-1.0], &[0.0], &[0.5], &[1.5]],
            Some(1.0),
            Some(2.0),
            Some(abs.clone()),
        ),
        case(
            "l1_c3",
            abs.clone(),
            gauge_interval(-1.0 / 3.0, 1.0 / 3.0),
            "-2:2:401",
            &[&[-1.0], &[0.0], &[0.5], &[1.5]],
            Some(1.0),
            Some(3.0),
            Some(abs),
        ),
        case(
            "mintime_polygon_pair_2d",
            FuncSpec::indicator(SetSpec::FinitePoints {
                points: vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            }),
            FuncSpec::gauge(tall),
            "-2:2:81,-2:2:81",
            &[
                &[1.0, 0.0],
                &[-1.0, 0.0],
                &[0.0, 0.0],
                &[0.5, 0.5],
                &[1.5, 0.0],
            ],
            Some(0.0),
            Some(1.0 / 10f64.sqrt()),
            None,
        ),
        case(
            "moreau_l1_2d",
            FuncSpec::norm(NormKind::L1),
            FuncSpec::sq(1.0),
            "-2:2:81,-2:2:81",
            &[&[0.0, 0.0], &[1.0, 0.25], &[-1.0, -1.0], &[0.3, 0.2]],
            Some(2f64.sqrt()),
            None,
            None,
        ),
    ]
}
