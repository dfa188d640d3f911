//! Closed convex sets of subgradients and normal vectors in one or two
//! dimensions.
//!
//! Bounded 2D sets are stored by their vertices (counterclockwise, no
//! collinear vertices; a single point or a segment is allowed). Cones carry
//! explicit ray generators. Set equality is measured with the Hausdorff
//! distance, computed from support functions; two unbounded sets are compared
//! after truncation by the unit ball.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::serde_f64;

const EPS: f64 = 1e-12;
const ANGLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VecSet {
    Empty,
    /// 1D interval; either end may be infinite.
    Interval {
        #[serde(with = "serde_f64")]
        lo: f64,
        #[serde(with = "serde_f64")]
        hi: f64,
    },
    /// 2D convex polygon given by its vertices.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    /// 2D Euclidean disc.
    Ball {
        center: [f64; 2],
        radius: f64,
    },
    /// 2D convex cone generated by the given rays; no rays means `{0}`.
    Cone {
        rays: Vec<[f64; 2]>,
    },
}

/// Canonical form of a 2D convex cone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConeShape {
    Zero,
    Ray([f64; 2]),
    /// Pointed cone sweeping counterclockwise from `start` to `end`, with
    /// opening angle strictly between 0 and pi.
    Arc {
        start: [f64; 2],
        end: [f64; 2],
    },
    /// Closed half-plane sweeping counterclockwise from `start` to `-start`.
    HalfPlane([f64; 2]),
    Line([f64; 2]),
    Whole,
}

fn cr(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dt(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn nrm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

fn unit(a: [f64; 2]) -> [f64; 2] {
    let n = nrm(a);
    [a[0] / n, a[1] / n]
}

fn dir(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

fn to2(v: &[f64]) -> [f64; 2] {
    [v[0], v[1]]
}

/// Convex hull (counterclockwise, collinear points dropped). Returns one or
/// two points for degenerate input.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let scale = points
        .iter()
        .fold(1.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let tol = EPS * scale;
    // Near-duplicates need not be adjacent after sorting, so merge them first.
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    for p in points {
        if !pts
            .iter()
            .any(|q| (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol)
        {
            pts.push(*p);
        }
    }
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .unwrap()
            .then(a[1].partial_cmp(&b[1]).unwrap())
    });
    if pts.len() <= 1 {
        return pts;
    }
    let turn = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let area_tol = tol * scale;
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= area_tol
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 2 {
        // all points (nearly) coincide after collinearity pruning
        let (a, b) = (pts[0], pts[pts.len() - 1]);
        if (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol {
            return vec![a];
        }
        return vec![a, b];
    }
    hull
}

/// Classifies a set of 2D rays.
pub fn cone_shape(rays: &[[f64; 2]]) -> ConeShape {
    let mut ang: Vec<f64> = rays
        .iter()
        .filter(|r| nrm(**r) > 0.0)
        .map(|r| r[1].atan2(r[0]))
        .collect();
    ang.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ang.dedup_by(|a, b| (*a - *b).abs() <= ANGLE_TOL);
    if ang.len() > 1 && (ang[0] + 2.0 * PI - ang[ang.len() - 1]).abs() <= ANGLE_TOL {
        ang.pop();
    }
    match ang.len() {
        0 => return ConeShape::Zero,
        1 => return ConeShape::Ray(dir(ang[0])),
        _ => {}
    }
    let n = ang.len();
    let gaps: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 < n {
                ang[i + 1] - ang[i]
            } else {
                ang[0] + 2.0 * PI - ang[n - 1]
            }
        })
        .collect();
    let (imax, gmax) = gaps
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bg), (i, &g)| {
            if g > bg {
                (i, g)
            } else {
                (bi, bg)
            }
        });
    let start = ang[(imax + 1) % n];
    if gmax > PI + ANGLE_TOL {
        return ConeShape::Arc {
            start: dir(start),
            end: dir(ang[imax]),
        };
    }
    if gmax >= PI - ANGLE_TOL {
        let wide = gaps.iter().filter(|g| **g >= PI - ANGLE_TOL).count();
        return if wide >= 2 {
            ConeShape::Line(dir(start))
        } else {
            ConeShape::HalfPlane(dir(start))
        };
    }
    ConeShape::Whole
}

impl ConeShape {
    /// Half-planes `n . x <= 0` whose intersection is the cone.
    fn halfplanes(self) -> Vec<[f64; 2]> {
        let perp_l = |d: [f64; 2]| [d[1], -d[0]]; // n.x <= 0  <=>  cross(d, x) >= 0
        let perp_r = |d: [f64; 2]| [-d[1], d[0]]; // n.x <= 0  <=>  cross(d, x) <= 0
        match self {
            ConeShape::Zero => vec![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
            ConeShape::Ray(d) => vec![perp_l(d), perp_r(d), [-d[0], -d[1]]],
            ConeShape::Arc { start, end } => vec![perp_l(start), perp_r(end)],
            ConeShape::HalfPlane(s) => vec![perp_l(s)],
            ConeShape::Line(d) => vec![perp_l(d), perp_r(d)],
            ConeShape::Whole => Vec::new(),
        }
    }

    fn contains_dir(self, u: [f64; 2]) -> bool {
        match self {
            ConeShape::Whole => true,
            ConeShape::Arc { start, end } => cr(start, u) >= -EPS && cr(u, end) >= -EPS,
            ConeShape::HalfPlane(s) => cr(s, u) >= -EPS,
            _ => false,
        }
    }

    /// Support function of the cone truncated by the closed unit ball.
    fn support_truncated(self, u: [f64; 2]) -> f64 {
        match self {
            ConeShape::Zero => 0.0,
            ConeShape::Whole => 1.0,
            ConeShape::Ray(d) => dt(d, u).max(0.0),
            ConeShape::Line(d) => dt(d, u).abs(),
            ConeShape::Arc { start, end } => {
                if self.contains_dir(u) {
                    1.0
                } else {
                    dt(start, u).max(dt(end, u)).max(0.0)
                }
            }
            ConeShape::HalfPlane(s) => {
                if self.contains_dir(u) {
                    1.0
                } else {
                    dt(s, u).abs()
                }
            }
        }
    }

    fn distance(self, v: [f64; 2]) -> f64 {
        let ray_dist = |d: [f64; 2]| {
            if dt(d, v) >= 0.0 {
                cr(d, v).abs()
            } else {
                nrm(v)
            }
        };
        match self {
            ConeShape::Zero => nrm(v),
            ConeShape::Whole => 0.0,
            ConeShape::Ray(d) => ray_dist(d),
            ConeShape::Line(d) => cr(d, v).abs(),
            ConeShape::Arc { start, end } => {
                if nrm(v) == 0.0 || self.contains_dir(unit(v)) {
                    0.0
                } else {
                    ray_dist(start).min(ray_dist(end))
                }
            }
            ConeShape::HalfPlane(s) => (-cr(s, v)).max(0.0),
        }
    }

    /// Unit generators (used for truncated extreme points and sums).
    fn generators(self) -> Vec<[f64; 2]> {
        match self {
            ConeShape::Zero => Vec::new(),
            ConeShape::Ray(d) => vec![d],
            ConeShape::Arc { start, end } => vec![start, end],
            ConeShape::HalfPlane(s) => vec![s, [-s[1], s[0]], [-s[0], -s[1]]],
            ConeShape::Line(d) => vec![d, [-d[0], -d[1]]],
            ConeShape::Whole => vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
        }
    }
}

/// Clips a (possibly degenerate) convex polygon against `n . x <= c`.
fn clip(poly: &[[f64; 2]], n: [f64; 2], c: f64) -> Vec<[f64; 2]> {
    let scale = poly.iter().fold(1.0f64, |m, p| m.max(nrm(*p))) * nrm(n).max(1.0);
    let tol = EPS * scale;
    let inside = |p: [f64; 2]| dt(n, p) <= c + tol;
    let mut out = Vec::new();
    let k = poly.len();
    for i in 0..k {
        let cur = poly[i];
        let prev = poly[(i + k - 1) % k];
        let (ci, pi) = (inside(cur), inside(prev));
        if ci != pi {
            let (fp, fc) = (dt(n, prev) - c, dt(n, cur) - c);
            let t = fp / (fp - fc);
            out.push([
                prev[0] + t * (cur[0] - prev[0]),
                prev[1] + t * (cur[1] - prev[1]),
            ]);
        }
        if ci {
            out.push(cur);
        }
    }
    out
}

fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let l2 = dt(ab, ab);
    let t = if l2 == 0.0 {
        0.0
    } else {
        (dt(ap, ab) / l2).clamp(0.0, 1.0)
    };
    nrm([ap[0] - t * ab[0], ap[1] - t * ab[1]])
}

impl VecSet {
    pub fn interval(lo: f64, hi: f64) -> Self {
        VecSet::Interval { lo, hi }
    }

    /// Convex hull of the given points.
    pub fn polygon(points: Vec<[f64; 2]>) -> Self {
        if points.is_empty() {
            return VecSet::Empty;
        }
        VecSet::Polygon {
            vertices: convex_hull(&points),
        }
    }

    pub fn point(v: &[f64]) -> Self {
        match v.len() {
            1 => VecSet::interval(v[0], v[0]),
            _ => VecSet::Polygon {
                vertices: vec![to2(v)],
            },
        }
    }

    pub fn zero(dim: usize) -> Self {
        VecSet::point(&vec![0.0; dim])
    }

    pub fn whole(dim: usize) -> Self {
        match dim {
            1 => VecSet::interval(f64::NEG_INFINITY, f64::INFINITY),
            _ => VecSet::Cone {
                rays: ConeShape::Whole.generators(),
            },
        }
    }

    pub fn cone(rays: Vec<[f64; 2]>) -> Self {
        VecSet::Cone {
            rays: rays
                .into_iter()
                .filter(|r| nrm(*r) > 0.0)
                .map(unit)
                .collect(),
        }
    }

    /// Re-establishes the canonical vertex form after deserialization.
    pub fn normalized(self) -> Self {
        match self {
            VecSet::Polygon { vertices } => VecSet::polygon(vertices),
            VecSet::Cone { rays } => VecSet::cone(rays),
            other => other,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            VecSet::Empty => None,
            VecSet::Interval { .. } => Some(1),
            _ => Some(2),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, VecSet::Empty)
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            VecSet::Interval { lo, hi } => lo.is_finite() && hi.is_finite(),
            VecSet::Cone { rays } => cone_shape(rays) == ConeShape::Zero,
            _ => true,
        }
    }

    /// Returns the unique element if the set is a single point up to `tol`.
    pub fn singleton(&self, tol: f64) -> Option<Vec<f64>> {
        match self {
            VecSet::Interval { lo, hi } if lo.is_finite() && hi.is_finite() && hi - lo <= tol => {
                Some(vec![0.5 * (lo + hi)])
            }
            VecSet::Polygon { vertices } => {
                let c = self.centroid()?;
                vertices
                    .iter()
                    .all(|v| nrm([v[0] - c[0], v[1] - c[1]]) <= tol)
                    .then_some(c)
            }
            VecSet::Ball { center, radius } if *radius <= tol => Some(center.to_vec()),
            VecSet::Cone { rays } if cone_shape(rays) == ConeShape::Zero => Some(vec![0.0, 0.0]),
            _ => None,
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.singleton(1e-12).is_some()
    }

    /// Vertex average of a bounded set.
    pub fn centroid(&self) -> Option<Vec<f64>> {
        match self {
            VecSet::Interval { lo, hi } if lo.is_finite() && hi.is_finite() => {
                Some(vec![0.5 * (lo + hi)])
            }
            VecSet::Polygon { vertices } if !vertices.is_empty() => {
                let k = vertices.len() as f64;
                let s = vertices
                    .iter()
                    .fold([0.0, 0.0], |a, v| [a[0] + v[0], a[1] + v[1]]);
                Some(vec![s[0] / k, s[1] / k])
            }
            VecSet::Ball { center, .. } => Some(center.to_vec()),
            VecSet::Cone { .. } => Some(vec![0.0, 0.0]),
            _ => None,
        }
    }

    /// Extreme points of the set, with unbounded sets truncated by the unit
    /// ball and discs represented by 16 boundary points.
    pub fn extreme_points(&self) -> Vec<Vec<f64>> {
        match self {
            VecSet::Empty => Vec::new(),
            VecSet::Interval { lo, hi } => {
                let (a, b) = (lo.max(-1.0).min(*hi), hi.min(1.0).max(*lo));
                let a = if lo.is_finite() { *lo } else { a };
                let b = if hi.is_finite() { *hi } else { b };
                if a == b {
                    vec![vec![a]]
                } else {
                    vec![vec![a], vec![b]]
                }
            }
            VecSet::Polygon { vertices } => vertices.iter().map(|v| v.to_vec()).collect(),
            VecSet::Ball { center, radius } => (0..16)
                .map(|k| {
                    let d = dir(k as f64 * PI / 8.0);
                    vec![center[0] + radius * d[0], center[1] + radius * d[1]]
                })
                .collect(),
            VecSet::Cone { rays } => {
                let shape = cone_shape(rays);
                let mut pts = vec![vec![0.0, 0.0]];
                pts.extend(shape.generators().into_iter().map(|g| g.to_vec()));
                pts
            }
        }
    }

    pub fn negate(&self) -> VecSet {
        match self {
            VecSet::Empty => VecSet::Empty,
            VecSet::Interval { lo, hi } => VecSet::interval(-hi, -lo),
            VecSet::Polygon { vertices } => VecSet::Polygon {
                vertices: vertices.iter().map(|v| [-v[0], -v[1]]).collect(),
            },
            VecSet::Ball { center, radius } => VecSet::Ball {
                center: [-center[0], -center[1]],
                radius: *radius,
            },
            VecSet::Cone { rays } => VecSet::Cone {
                rays: rays.iter().map(|v| [-v[0], -v[1]]).collect(),
            },
        }
    }

    /// Euclidean distance from `v` to the set (`+inf` for the empty set).
    pub fn distance_to(&self, v: &[f64]) -> f64 {
        match self {
            VecSet::Empty => f64::INFINITY,
            VecSet::Interval { lo, hi } => {
                if v[0] < *lo {
                    lo - v[0]
                } else if v[0] > *hi {
                    v[0] - hi
                } else {
                    0.0
                }
            }
            VecSet::Polygon { vertices } => {
                let p = to2(v);
                let k = vertices.len();
                if k == 1 {
                    return nrm([p[0] - vertices[0][0], p[1] - vertices[0][1]]);
                }
                if k >= 3
                    && (0..k).all(|i| {
                        cr(
                            [
                                vertices[(i + 1) % k][0] - vertices[i][0],
                                vertices[(i + 1) % k][1] - vertices[i][1],
                            ],
                            [p[0] - vertices[i][0], p[1] - vertices[i][1]],
                        ) >= 0.0
                    })
                {
                    return 0.0;
                }
                (0..k)
                    .map(|i| seg_dist(p, vertices[i], vertices[(i + 1) % k]))
                    .fold(f64::INFINITY, f64::min)
            }
            VecSet::Ball { center, radius } => {
                (nrm([v[0] - center[0], v[1] - center[1]]) - radius).max(0.0)
            }
            VecSet::Cone { rays } => cone_shape(rays).distance(to2(v)),
        }
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        self.distance_to(v) <= tol
    }

    /// Half-plane description `n . x <= c` of a polygon or cone.
    fn halfplanes(&self) -> Option<Vec<([f64; 2], f64)>> {
        match self {
            VecSet::Polygon { vertices } => {
                let k = vertices.len();
                let mut hp = Vec::new();
                match k {
                    1 => {
                        let p = vertices[0];
                        for n in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
                            hp.push((n, dt(n, p)));
                        }
                    }
                    2 => {
                        let (a, b) = (vertices[0], vertices[1]);
                        let d = unit([b[0] - a[0], b[1] - a[1]]);
                        let n = [d[1], -d[0]];
                        hp.push((n, dt(n, a)));
                        hp.push(([-n[0], -n[1]], -dt(n, a)));
                        hp.push((d, dt(d, b)));
                        hp.push(([-d[0], -d[1]], -dt(d, a)));
                    }
                    _ => {
                        for i in 0..k {
                            let (p, q) = (vertices[i], vertices[(i + 1) % k]);
                            let n = unit([q[1] - p[1], p[0] - q[0]]);
                            hp.push((n, dt(n, p)));
                        }
                    }
                }
                Some(hp)
            }
            VecSet::Cone { rays } => Some(
                cone_shape(rays)
                    .halfplanes()
                    .into_iter()
                    .map(|n| (n, 0.0))
                    .collect(),
            ),
            _ => None,
        }
    }

    fn clip_polygon(vertices: &[[f64; 2]], planes: &[([f64; 2], f64)]) -> VecSet {
        let mut poly = vertices.to_vec();
        for &(n, c) in planes {
            poly = clip(&poly, n, c);
            if poly.is_empty() {
                return VecSet::Empty;
            }
        }
        VecSet::polygon(poly)
    }

    pub fn intersect(&self, other: &VecSet) -> Result<VecSet> {
        use VecSet::*;
        if let (Some(a), Some(b)) = (self.dim(), other.dim()) {
            if a != b {
                return Err(Error::Shape(format!(
                    "cannot intersect a {a}D set with a {b}D set"
                )));
            }
        }
        let unsupported = || {
            Err(Error::Unsupported(format!(
                "intersection of {} and {}",
                self.kind_name(),
                other.kind_name()
            )))
        };
        match (self, other) {
            (Empty, _) | (_, Empty) => Ok(Empty),
            (Interval { lo: a, hi: b }, Interval { lo: c, hi: d }) => {
                let (lo, hi) = (a.max(*c), b.min(*d));
                let tol = EPS * (1.0 + lo.abs().min(1e300) + hi.abs().min(1e300));
                if lo > hi + tol {
                    Ok(Empty)
                } else if lo > hi {
                    Ok(VecSet::interval(0.5 * (lo + hi), 0.5 * (lo + hi)))
                } else {
                    Ok(VecSet::interval(lo, hi))
                }
            }
            (Polygon { vertices }, other @ (Polygon { .. } | Cone { .. })) => {
                if vertices.len() < 3 {
                    if let Polygon { vertices: w } = other {
                        if w.len() >= 3 {
                            return other.intersect(self);
                        }
                    }
                }
                Ok(Self::clip_polygon(vertices, &other.halfplanes().unwrap()))
            }
            (Cone { .. }, Polygon { .. }) => other.intersect(self),
            (Cone { rays: r1 }, Cone { rays: r2 }) => match (cone_shape(r1), cone_shape(r2)) {
                (ConeShape::Whole, _) => Ok(other.clone()),
                (_, ConeShape::Whole) => Ok(self.clone()),
                (ConeShape::Zero, _) | (_, ConeShape::Zero) => Ok(VecSet::cone(Vec::new())),
                _ => unsupported(),
            },
            (Ball { center, radius }, Cone { rays }) | (Cone { rays }, Ball { center, radius }) => {
                let shape = cone_shape(rays);
                if shape == ConeShape::Whole {
                    return Ok(Ball {
                        center: *center,
                        radius: *radius,
                    });
                }
                if center != &[0.0, 0.0] {
                    return unsupported();
                }
                let r = *radius;
                match shape {
                    ConeShape::Zero => Ok(VecSet::zero(2)),
                    ConeShape::Ray(d) => {
                        Ok(VecSet::polygon(vec![[0.0, 0.0], [r * d[0], r * d[1]]]))
                    }
                    ConeShape::Line(d) => Ok(VecSet::polygon(vec![
                        [-r * d[0], -r * d[1]],
                        [r * d[0], r * d[1]],
                    ])),
                    _ => unsupported(),
                }
            }
            (Ball { center, radius }, Polygon { vertices })
            | (Polygon { vertices }, Ball { center, radius }) => {
                let inside = |v: &[f64; 2]| {
                    nrm([v[0] - center[0], v[1] - center[1]]) <= radius + EPS * (1.0 + radius)
                };
                if vertices.iter().all(inside) {
                    Ok(VecSet::Polygon {
                        vertices: vertices.clone(),
                    })
                } else if vertices.len() == 1 {
                    Ok(Empty)
                } else {
                    unsupported()
                }
            }
            (Ball { .. }, Ball { .. }) if self == other => Ok(self.clone()),
            _ => unsupported(),
        }
    }

    pub fn minkowski_sum(&self, other: &VecSet) -> Result<VecSet> {
        use VecSet::*;
        if let (Some(a), Some(b)) = (self.dim(), other.dim()) {
            if a != b {
                return Err(Error::Shape(format!("cannot add a {a}D set to a {b}D set")));
            }
        }
        let unsupported = || {
            Err(Error::Unsupported(format!(
                "sum of {} and {}",
                self.kind_name(),
                other.kind_name()
            )))
        };
        match (self, other) {
            (Empty, _) | (_, Empty) => Ok(Empty),
            (Interval { lo: a, hi: b }, Interval { lo: c, hi: d }) => {
                Ok(VecSet::interval(a + c, b + d))
            }
            (Polygon { vertices: v }, Polygon { vertices: w }) => {
                let pts = v
                    .iter()
                    .flat_map(|p| w.iter().map(move |q| [p[0] + q[0], p[1] + q[1]]))
                    .collect();
                Ok(VecSet::polygon(pts))
            }
            (Ball { center, radius }, Polygon { vertices })
            | (Polygon { vertices }, Ball { center, radius })
                if vertices.len() == 1 =>
            {
                let p = vertices[0];
                Ok(Ball {
                    center: [center[0] + p[0], center[1] + p[1]],
                    radius: *radius,
                })
            }
            (
                Ball {
                    center: c1,
                    radius: r1,
                },
                Ball {
                    center: c2,
                    radius: r2,
                },
            ) => Ok(Ball {
                center: [c1[0] + c2[0], c1[1] + c2[1]],
                radius: r1 + r2,
            }),
            (Cone { rays: a }, Cone { rays: b }) => {
                Ok(VecSet::cone(a.iter().chain(b).copied().collect()))
            }
            (Cone { .. }, bounded) | (bounded, Cone { .. }) => {
                let cone = if matches!(self, Cone { .. }) {
                    self
                } else {
                    other
                };
                match bounded.singleton(EPS) {
                    Some(p) if nrm(to2(&p)) <= EPS => Ok(cone.clone()),
                    _ if cone.is_bounded() => Ok(bounded.clone()),
                    _ => unsupported(),
                }
            }
            _ => unsupported(),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            VecSet::Empty => "empty set",
            VecSet::Interval { .. } => "interval",
            VecSet::Polygon { .. } => "polygon",
            VecSet::Ball { .. } => "disc",
            VecSet::Cone { .. } => "cone",
        }
    }

    /// Support function in the unit direction `u` (2D sets); cones are
    /// truncated by the unit ball.
    fn support(&self, u: [f64; 2]) -> f64 {
        match self {
            VecSet::Polygon { vertices } => vertices
                .iter()
                .map(|v| dt(*v, u))
                .fold(f64::NEG_INFINITY, f64::max),
            VecSet::Ball { center, radius } => dt(*center, u) + radius,
            VecSet::Cone { rays } => cone_shape(rays).support_truncated(u),
            _ => f64::NAN,
        }
    }

    /// Points and directions at which the support function can change form.
    fn features(&self, points: &mut Vec<[f64; 2]>, dirs: &mut Vec<[f64; 2]>) {
        match self {
            VecSet::Polygon { vertices } => {
                points.extend(vertices.iter().copied());
                let k = vertices.len();
                for i in 0..k {
                    let (p, q) = (vertices[i], vertices[(i + 1) % k]);
                    let e = [q[0] - p[0], q[1] - p[1]];
                    if nrm(e) > 0.0 {
                        dirs.push([e[1], -e[0]]);
                        dirs.push([-e[1], e[0]]);
                    }
                }
            }
            VecSet::Ball { center, .. } => points.push(*center),
            VecSet::Cone { rays } => {
                points.push([0.0, 0.0]);
                for g in cone_shape(rays).generators() {
                    points.push(g);
                    dirs.push(g);
                    dirs.push([-g[0], -g[1]]);
                    dirs.push([g[1], -g[0]]);
                    dirs.push([-g[1], g[0]]);
                }
            }
            _ => {}
        }
    }

    /// Hausdorff distance. Two unbounded sets are compared after truncation
    /// by the closed unit ball; a bounded set is at infinite distance from an
    /// unbounded one.
    pub fn hausdorff(&self, other: &VecSet) -> Result<f64> {
        use VecSet::*;
        match (self, other) {
            (Empty, Empty) => return Ok(0.0),
            (Empty, _) | (_, Empty) => return Ok(f64::INFINITY),
            _ => {}
        }
        if self.dim() != other.dim() {
            return Err(Error::Shape(
                "Hausdorff distance between sets of different dimension".into(),
            ));
        }
        let (ba, bb) = (self.is_bounded(), other.is_bounded());
        if ba != bb {
            return Ok(f64::INFINITY);
        }
        if let (Interval { lo: a, hi: b }, Interval { lo: c, hi: d }) = (self, other) {
            let trunc = |lo: f64, hi: f64| {
                if ba {
                    (lo, hi)
                } else {
                    (lo.max(-1.0), hi.min(1.0))
                }
            };
            let ((a, b), (c, d)) = (trunc(*a, *b), trunc(*c, *d));
            match (a <= b, c <= d) {
                (true, true) => return Ok((a - c).abs().max((b - d).abs())),
                (false, false) => return Ok(0.0),
                _ => return Ok(f64::INFINITY),
            }
        }
        let mut points = Vec::new();
        let mut dirs = Vec::new();
        self.features(&mut points, &mut dirs);
        other.features(&mut points, &mut dirs);
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let d = [points[i][0] - points[j][0], points[i][1] - points[j][1]];
                if nrm(d) > 0.0 {
                    dirs.extend([d, [-d[0], -d[1]], [d[1], -d[0]], [-d[1], d[0]]]);
                }
            }
        }
        dirs.extend((0..720).map(|k| dir(k as f64 * PI / 360.0)));
        Ok(dirs
            .into_iter()
            .filter(|d| nrm(*d) > 0.0)
            .map(|d| {
                let u = unit(d);
                (self.support(u) - other.support(u)).abs()
            })
            .fold(0.0, f64::max))
    }
}
