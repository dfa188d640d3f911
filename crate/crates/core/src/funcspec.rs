//! Closed-form analytic functions and sets.
//!
//! A [`FuncSpec`] evaluates exactly at any point, can be sampled onto a
//! [`Grid`], and (for the convex variants) has an exact subdifferential in
//! [`crate::subdiff`]. JSON uses a `"kind"` tag, for example
//! `{"kind": "sum", "terms": [{"kind": "norm", "p": 1}, {"kind": "sq", "alpha": 1.0}]}`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::gauge::GaugeSet;
use crate::grid::{Grid, GridFn};

/// Relative tolerance used for set membership of sample points.
pub const MEMBERSHIP_RTOL: f64 = 1e-12;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn check_point(x: &[f64]) -> Result<()> {
    if x.is_empty() || x.len() > 2 {
        return Err(Error::Shape(format!(
            "points must have 1 or 2 coordinates, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidValue(format!(
            "non-finite coordinate in {x:?}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    LInf,
}

impl NormKind {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            NormKind::L1 => x.iter().map(|v| v.abs()).sum(),
            NormKind::L2 => norm2(x),
            NormKind::LInf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

impl Serialize for NormKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormKind::L1 => s.serialize_u8(1),
            NormKind::L2 => s.serialize_u8(2),
            NormKind::LInf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NormKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(1.0) => Ok(NormKind::L1),
            Repr::Num(2.0) => Ok(NormKind::L2),
            Repr::Text(t) if t == "inf" => Ok(NormKind::LInf),
            _ => Err(serde::de::Error::custom(
                "norm exponent p must be 1, 2 or \"inf\"",
            )),
        }
    }
}

/// Sets used as indicator targets and as gauge shapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    /// Axis-aligned box; `lo == hi` on an axis is allowed (a degenerate box).
    IntervalBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Convex polygon, vertices counterclockwise in strictly convex position.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// A finite, generally nonconvex, target set.
    FinitePoints {
        points: Vec<Vec<f64>>,
    },
}

/// Outward facet `a . y <= b` of a polygon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Facet {
    pub a: [f64; 2],
    pub b: f64,
}

pub(crate) fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl SetSpec {
    pub fn dim(&self) -> usize {
        match self {
            SetSpec::IntervalBox { lo, .. } => lo.len(),
            SetSpec::Polygon { .. } => 2,
            SetSpec::Ball { center, .. } => center.len(),
            SetSpec::FinitePoints { points } => points.first().map_or(0, |p| p.len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSet(m));
        match self {
            SetSpec::IntervalBox { lo, hi } => {
                if lo.len() != hi.len() || lo.is_empty() || lo.len() > 2 {
                    return bad(format!(
                        "box bounds must both have 1 or 2 entries, got {lo:?} / {hi:?}"
                    ));
                }
                for (a, b) in lo.iter().zip(hi) {
                    if !(a.is_finite() && b.is_finite()) || a > b {
                        return bad(format!("box needs finite lo <= hi, got [{a}, {b}]"));
                    }
                }
            }
            SetSpec::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return bad("polygon needs at least 3 vertices".into());
                }
                if vertices.iter().flatten().any(|v| !v.is_finite()) {
                    return bad("polygon vertices must be finite".into());
                }
                let n = vertices.len();
                for k in 0..n {
                    let c = cross(vertices[k], vertices[(k + 1) % n], vertices[(k + 2) % n]);
                    if c <= 0.0 {
                        return bad(format!(
                            "polygon vertices must be counterclockwise and strictly convex (turn at vertex {})",
                            (k + 1) % n
                        ));
                    }
                }
                // a simple polygon with all left turns winds exactly once
                let turn: f64 = (0..n)
                    .map(|k| {
                        let (p, q, r) = (vertices[k], vertices[(k + 1) % n], vertices[(k + 2) % n]);
                        let a1 = (q[1] - p[1]).atan2(q[0] - p[0]);
                        let a2 = (r[1] - q[1]).atan2(r[0] - q[0]);
                        let mut d = a2 - a1;
                        while d <= -std::f64::consts::PI {
                            d += 2.0 * std::f64::consts::PI;
                        }
                        while d > std::f64::consts::PI {
                            d -= 2.0 * std::f64::consts::PI;
                        }
                        d
                    })
                    .sum();
                if (turn - 2.0 * std::f64::consts::PI).abs() > 1e-6 {
                    return bad("polygon boundary winds more than once".into());
                }
            }
            SetSpec::Ball { center, radius } => {
                if center.is_empty() || center.len() > 2 || center.iter().any(|c| !c.is_finite()) {
                    return bad(format!(
                        "ball center must be a finite 1D or 2D point, got {center:?}"
                    ));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad(format!("ball radius must be positive, got {radius}"));
                }
            }
            SetSpec::FinitePoints { points } => {
                if points.is_empty() {
                    return bad("finite point set must be nonempty".into());
                }
                let d = points[0].len();
                for p in points {
                    if p.len() != d {
                        return bad("finite points must share one dimension".into());
                    }
                    check_point(p).map_err(|e| Error::InvalidSet(e.to_string()))?;
                }
            }
        }
        Ok(())
    }

    pub fn is_convex(&self) -> bool {
        match self {
            SetSpec::FinitePoints { points } => points.len() == 1,
            _ => true,
        }
    }

    /// Size used to scale membership tolerances.
    pub fn scale(&self) -> f64 {
        let m = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        match self {
            SetSpec::IntervalBox { lo, hi } => m(lo).max(m(hi)),
            SetSpec::Polygon { vertices } => vertices.iter().fold(0.0, |a, v| a.max(m(v))),
            SetSpec::Ball { center, radius } => m(center) + radius,
            SetSpec::FinitePoints { points } => points.iter().fold(0.0, |a, p| a.max(m(p))),
        }
    }

    pub fn tol(&self) -> f64 {
        MEMBERSHIP_RTOL * (1.0 + self.scale())
    }

    /// Outward facets of a 2D polygon, or of a 2D box with nonempty interior.
    pub fn facets(&self) -> Option<Vec<Facet>> {
        let verts: Vec<[f64; 2]> = match self {
            SetSpec::Polygon { vertices } => vertices.clone(),
            SetSpec::IntervalBox { lo, hi } if lo.len() == 2 && lo[0] < hi[0] && lo[1] < hi[1] => {
                vec![
                    [lo[0], lo[1]],
                    [hi[0], lo[1]],
                    [hi[0], hi[1]],
                    [lo[0], hi[1]],
                ]
            }
            _ => return None,
        };
        let n = verts.len();
        Some(
            (0..n)
                .map(|k| {
                    let (p, q) = (verts[k], verts[(k + 1) % n]);
                    let a = [q[1] - p[1], p[0] - q[0]];
                    Facet {
                        a,
                        b: a[0] * p[0] + a[1] * p[1],
                    }
                })
                .collect(),
        )
    }

    /// Vertices of a 2D polygon or box (used for norms of sets).
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match self {
            SetSpec::Polygon { vertices } => vertices.iter().map(|v| v.to_vec()).collect(),
            SetSpec::IntervalBox { lo, hi } if lo.len() == 1 => vec![lo.clone(), hi.clone()],
            SetSpec::IntervalBox { lo, hi } => vec![
                vec![lo[0], lo[1]],
                vec![hi[0], lo[1]],
                vec![hi[0], hi[1]],
                vec![lo[0], hi[1]],
            ],
            SetSpec::FinitePoints { points } => points.clone(),
            SetSpec::Ball { .. } => Vec::new(),
        }
    }

    /// Membership with absolute slack `tol`.
    pub fn contains_tol(&self, x: &[f64], tol: f64) -> bool {
        match self {
            SetSpec::IntervalBox { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v >= a - tol && *v <= b + tol),
            SetSpec::Polygon { .. } => self.facets().unwrap().iter().all(|f| {
                let an = (f.a[0] * f.a[0] + f.a[1] * f.a[1]).sqrt();
                f.a[0] * x[0] + f.a[1] * x[1] <= f.b + tol * an
            }),
            SetSpec::Ball { center, radius } => norm2(&sub(x, center)) <= radius + tol,
            SetSpec::FinitePoints { points } => points
                .iter()
                .any(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= tol)),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_tol(x, self.tol())
    }
}

/// A closed-form extended-real-valued function of one or two variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FuncSpec {
    Norm {
        p: NormKind,
    },
    /// `alpha * |x|^2` with the Euclidean norm.
    Sq {
        alpha: f64,
    },
    Indicator {
        set: SetSpec,
    },
    /// Minkowski gauge of a bounded convex set with 0 in its interior.
    Gauge {
        set: GaugeSet,
    },
    /// `max_i <slope_i, x> + b_i`.
    MaxAffine {
        pieces: Vec<(Vec<f64>, f64)>,
    },
    Sum {
        terms: Vec<FuncSpec>,
    },
    /// `x -> inner(x - offset)`.
    Shift {
        inner: Box<FuncSpec>,
        offset: Vec<f64>,
    },
}

impl FuncSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FuncSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn norm(p: NormKind) -> Self {
        FuncSpec::Norm { p }
    }

    pub fn sq(alpha: f64) -> Self {
        FuncSpec::Sq { alpha }
    }

    pub fn indicator(set: SetSpec) -> Self {
        FuncSpec::Indicator { set }
    }

    pub fn gauge(set: GaugeSet) -> Self {
        FuncSpec::Gauge { set }
    }

    pub fn max_affine(pieces: Vec<(Vec<f64>, f64)>) -> Self {
        FuncSpec::MaxAffine { pieces }
    }

    /// The fixed dimension of the spec, if any term pins one down.
    pub fn dim(&self) -> Option<usize> {
        match self {
            FuncSpec::Norm { .. } | FuncSpec::Sq { .. } => None,
            FuncSpec::Indicator { set } => Some(set.dim()),
            FuncSpec::Gauge { set } => Some(set.dim()),
            FuncSpec::MaxAffine { pieces } => pieces.first().map(|p| p.0.len()),
            FuncSpec::Sum { terms } => terms.iter().find_map(|t| t.dim()),
            FuncSpec::Shift { offset, .. } => Some(offset.len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        match self {
            FuncSpec::Norm { .. } => {}
            FuncSpec::Sq { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return bad(format!("sq needs alpha > 0, got {alpha}"));
                }
            }
            FuncSpec::Indicator { set } => set.validate()?,
            FuncSpec::Gauge { .. } => {}
            FuncSpec::MaxAffine { pieces } => {
                let Some(first) = pieces.first() else {
                    return bad("max_affine needs at least one piece".into());
                };
                let d = first.0.len();
                if d == 0 || d > 2 {
                    return bad(format!(
                        "max_affine slopes must have 1 or 2 entries, got {d}"
                    ));
                }
                for (s, b) in pieces {
                    if s.len() != d || !b.is_finite() || s.iter().any(|v| !v.is_finite()) {
                        return bad(
                            "max_affine pieces must share one dimension and be finite".into()
                        );
                    }
                }
            }
            FuncSpec::Sum { terms } => {
                if terms.is_empty() {
                    return bad("sum needs at least one term".into());
                }
                for t in terms {
                    t.validate()?;
                }
                let dims: Vec<usize> = terms.iter().filter_map(|t| t.dim()).collect();
                if dims.windows(2).any(|w| w[0] != w[1]) {
                    return bad(format!("sum terms disagree on dimension: {dims:?}"));
                }
            }
            FuncSpec::Shift { inner, offset } => {
                inner.validate()?;
                check_point(offset).map_err(|e| Error::InvalidSpec(e.to_string()))?;
                if let Some(d) = inner.dim() {
                    if d != offset.len() {
                        return bad(format!(
                            "shift offset has {} entries, inner spec is {d}D",
                            offset.len()
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Every variant is convex except indicators of multi-point sets.
    pub fn is_convex(&self) -> bool {
        match self {
            FuncSpec::Indicator { set } => set.is_convex(),
            FuncSpec::Sum { terms } => terms.iter().all(|t| t.is_convex()),
            FuncSpec::Shift { inner, .. } => inner.is_convex(),
            _ => true,
        }
    }

    /// Exact value at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<ExtReal> {
        check_point(x)?;
        if let Some(d) = self.dim() {
            if d != x.len() {
                return Err(Error::Shape(format!(
                    "{}D point for a {d}D function",
                    x.len()
                )));
            }
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> ExtReal {
        match self {
            FuncSpec::Norm { p } => ExtReal::Finite(p.eval(x)),
            FuncSpec::Sq { alpha } => ExtReal::Finite(alpha * dot(x, x)),
            FuncSpec::Indicator { set } => {
                if set.contains(x) {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
            FuncSpec::Gauge { set } => ExtReal::Finite(set.eval(x)),
            FuncSpec::MaxAffine { pieces } => ExtReal::Finite(
                pieces
                    .iter()
                    .map(|(s, b)| dot(s, x) + b)
                    .fold(f64::NEG_INFINITY, f64::max),
            ),
            FuncSpec::Sum { terms } => terms
                .iter()
                .fold(ExtReal::ZERO, |acc, t| acc + t.eval_unchecked(x)),
            FuncSpec::Shift { inner, offset } => inner.eval_unchecked(&sub(x, offset)),
        }
    }

    /// Pointwise sampling on a grid. Finite point sets are snapped to their
    /// nearest grid point, which must lie within half a step.
    pub fn sample(&self, grid: &Grid) -> Result<GridFn> {
        if let Some(d) = self.dim() {
            if d != grid.dim() {
                return Err(Error::Shape(format!(
                    "{d}D function on a {}D grid",
                    grid.dim()
                )));
            }
        }
        let mut values: Vec<ExtReal> = (0..grid.len())
            .map(|i| self.eval_unchecked(&grid.point(i)))
            .collect();
        if let Some(points) = self.finite_target() {
            let snapped = snap_points(points, grid)?;
            // rebuild: the snapped sites carry the value of the rest of the spec
            for v in values.iter_mut() {
                *v = ExtReal::PosInf;
            }
            let rest = self.without_finite_target();
            for s in snapped {
                values[s] = match &rest {
                    Some(r) => r.eval_unchecked(&grid.point(s)),
                    None => ExtReal::ZERO,
                };
            }
        }
        GridFn::new(grid.clone(), values)
    }

    /// Finite target points of a top-level (possibly summed) finite-point
    /// indicator.
    fn finite_target(&self) -> Option<&Vec<Vec<f64>>> {
        match self {
            FuncSpec::Indicator {
                set: SetSpec::FinitePoints { points },
            } => Some(points),
            FuncSpec::Sum { terms } => terms.iter().find_map(|t| t.finite_target()),
            _ => None,
        }
    }

    fn without_finite_target(&self) -> Option<FuncSpec> {
        match self {
            FuncSpec::Sum { terms } => {
                let rest: Vec<FuncSpec> = terms
                    .iter()
                    .filter(|t| t.finite_target().is_none())
                    .cloned()
                    .collect();
                (!rest.is_empty()).then_some(FuncSpec::Sum { terms: rest })
            }
            _ => None,
        }
    }

    /// Probes calmness at `x_bar` relative to `dom f` on a deterministic
    /// low-discrepancy sample of the ball of the given radius.
    pub fn calmness_probe(
        &self,
        x_bar: &[f64],
        radius: f64,
        samples: usize,
    ) -> Result<CalmnessReport> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidValue(format!(
                "radius must be positive, got {radius}"
            )));
        }
        let fx = self
            .eval(x_bar)?
            .finite()
            .ok_or_else(|| Error::Precondition("reference point is outside dom f".into()))?;
        let mut constant: f64 = 0.0;
        let mut used = 0usize;
        for i in 1..=samples {
            let u = halton(i, 2);
            let x: Vec<f64> = if x_bar.len() == 1 {
                vec![x_bar[0] + radius * (2.0 * u - 1.0)]
            } else {
                let r = radius * u.sqrt();
                let t = 2.0 * std::f64::consts::PI * halton(i, 3);
                vec![x_bar[0] + r * t.cos(), x_bar[1] + r * t.sin()]
            };
            let d = norm2(&sub(&x, x_bar));
            if d == 0.0 {
                continue;
            }
            if let ExtReal::Finite(v) = self.eval_unchecked(&x) {
                used += 1;
                constant = constant.max((v - fx).abs() / d);
            }
        }
        if used == 0 {
            return Err(Error::InsufficientData(
                "no sampled point of dom f within the radius".into(),
            ));
        }
        Ok(CalmnessReport {
            point: x_bar.to_vec(),
            constant,
            radius,
            relative_to: "dom f".into(),
            samples: used,
        })
    }
}

fn snap_points(points: &[Vec<f64>], grid: &Grid) -> Result<Vec<usize>> {
    points
        .iter()
        .map(|p| {
            grid.snap(p).map(|(flat, _)| flat).ok_or_else(|| {
                Error::TargetOffGrid(format!("{p:?} is more than h/2 from every grid point"))
            })
        })
        .collect()
}

/// Radical-inverse low-discrepancy sequence.
pub fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Evidence that `|f(x) - f(x_bar)| <= constant * |x - x_bar|` on the sampled
/// part of `relative_to` within `radius`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalmnessReport {
    pub point: Vec<f64>,
    pub constant: f64,
    pub radius: f64,
    pub relative_to: String,
    pub samples: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(a: f64, b: f64) -> SetSpec {
        SetSpec::IntervalBox {
            lo: vec![a],
            hi: vec![b],
        }
    }

    #[test]
    fn eval_examples() {
        let l1 = FuncSpec::norm(NormKind::L1);
        assert_eq!(l1.eval(&[3.0, -4.0]).unwrap(), ExtReal::Finite(7.0));
        let ind = FuncSpec::indicator(interval(0.0, 1.0));
        assert_eq!(ind.eval(&[0.5]).unwrap(), ExtReal::ZERO);
        assert_eq!(ind.eval(&[2.0]).unwrap(), ExtReal::PosInf);
        assert_eq!(
            FuncSpec::sq(2.0).eval(&[3.0]).unwrap(),
            ExtReal::Finite(18.0)
        );
        assert!(matches!(ind.eval(&[0.5, 0.5]), Err(Error::Shape(_))));
    }

    #[test]
    fn sample_examples() {
        let grid = Grid::line(-1.0, 1.0, 3).unwrap();
        let v = FuncSpec::norm(NormKind::L2).sample(&grid).unwrap();
        assert_eq!(v.to_f64_vec(), vec![1.0, 0.0, 1.0]);
        let pts = FuncSpec::indicator(SetSpec::FinitePoints {
            points: vec![vec![0.0]],
        });
        assert_eq!(
            pts.sample(&grid).unwrap().to_f64_vec(),
            vec![f64::INFINITY, 0.0, f64::INFINITY]
        );
        let s = FuncSpec::Sum {
            terms: vec![FuncSpec::norm(NormKind::L1), FuncSpec::sq(1.0)],
        };
        assert_eq!(s.sample(&grid).unwrap().to_f64_vec(), vec![2.0, 0.0, 2.0]);

        let far = FuncSpec::indicator(SetSpec::FinitePoints {
            points: vec![vec![5.0]],
        });
        assert!(matches!(far.sample(&grid), Err(Error::TargetOffGrid(_))));
        let out = FuncSpec::indicator(interval(3.0, 4.0));
        assert!(matches!(out.sample(&grid), Err(Error::EmptyDomain)));
    }

    #[test]
    fn finite_points_snap_within_half_step() {
        let grid = Grid::line(-1.0, 1.0, 21).unwrap();
        let f = FuncSpec::indicator(SetSpec::FinitePoints {
            points: vec![vec![0.34], vec![-0.71]],
        });
        let g = f.sample(&grid).unwrap();
        let dom: Vec<Vec<f64>> = g
            .effective_domain()
            .iter()
            .map(|&i| grid.point(i))
            .collect();
        assert_eq!(dom.len(), 2);
        assert!((dom[0][0] + 0.7).abs() < 1e-12 && (dom[1][0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn json_schema() {
        let f = FuncSpec::from_json(
            r#"{"kind":"sum","terms":[{"kind":"norm","p":"inf"},
                {"kind":"max_affine","pieces":[[[1.0,0.0],0.0],[[-2.0,1.0],0.5]]},
                {"kind":"shift","inner":{"kind":"sq","alpha":2.0},"offset":[1.0,0.0]}]}"#,
        )
        .unwrap();
        assert_eq!(f.dim(), Some(2));
        let back: FuncSpec = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        assert!(FuncSpec::from_json(r#"{"kind":"norm","p":3}"#).is_err());
        assert!(FuncSpec::from_json(r#"{"kind":"sq","alpha":-1}"#).is_err());
        assert!(FuncSpec::from_json(r#"{"kind":"sq","alpha":1,"beta":2}"#).is_err());
        assert!(FuncSpec::from_json(r#"{"kind":"max_affine","pieces":[]}"#).is_err());
        assert!(FuncSpec::from_json(
            r#"{"kind":"indicator","set":{"kind":"polygon","vertices":[[0,0],[0,1],[1,0]]}}"#
        )
        .is_err());
    }

    #[test]
    fn calmness_examples() {
        let ind = FuncSpec::indicator(interval(0.0, 1.0));
        assert_eq!(ind.calmness_probe(&[0.5], 1.0, 256).unwrap().constant, 0.0);
        let n = FuncSpec::norm(NormKind::L2);
        let r = n.calmness_probe(&[0.0, 0.0], 1.0, 256).unwrap();
        assert!((r.constant - 1.0).abs() < 1e-12);
        let m = FuncSpec::max_affine(vec![(vec![1.0], 0.0), (vec![-2.0], 0.0)]);
        let probe = m.calmness_probe(&[0.0], 1.0, 512).unwrap().constant;
        // dense sampling oracle
        let oracle = (1..=4000)
            .map(|k| -1.0 + 2.0 * k as f64 / 4001.0)
            .map(|x: f64| (x.max(-2.0 * x)) / x.abs())
            .fold(0.0, f64::max);
        assert!((probe - oracle).abs() < 1e-12 && (probe - 2.0).abs() < 1e-12);
        assert!(matches!(
            ind.calmness_probe(&[2.0], 1.0, 10),
            Err(Error::Precondition(_))
        ));
    }

    proptest::proptest! {
        #[test]
        fn sum_and_shift_laws(x in -3.0f64..3.0, y in -3.0f64..3.0, c0 in -1.0f64..1.0, c1 in -1.0f64..1.0) {
            let a = FuncSpec::norm(NormKind::L1);
            let b = FuncSpec::indicator(SetSpec::Ball { center: vec![0.0, 0.0], radius: 2.0 });
            let s = FuncSpec::Sum { terms: vec![a.clone(), b.clone()] };
            let p = [x, y];
            proptest::prop_assert_eq!(s.eval(&p).unwrap(), a.eval(&p).unwrap() + b.eval(&p).unwrap());
            let sh = FuncSpec::Shift { inner: Box::new(s.clone()), offset: vec![c0, c1] };
            proptest::prop_assert_eq!(sh.eval(&p).unwrap(), s.eval(&[x - c0, y - c1]).unwrap());
        }

        #[test]
        fn sample_matches_eval(i in 0usize..41) {
            let grid = Grid::line(-2.0, 2.0, 41).unwrap();
            let f = FuncSpec::Sum { terms: vec![
                FuncSpec::max_affine(vec![(vec![1.0], 0.0), (vec![-0.5], 0.3)]),
                FuncSpec::indicator(interval(-1.0, 1.5)),
            ]};
            let g = f.sample(&grid).unwrap();
            proptest::prop_assert_eq!(g.eval(&[i]).unwrap(), f.eval(&grid.point(i)).unwrap());
        }
    }
}
