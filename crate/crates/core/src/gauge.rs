//! Minkowski gauges `rho_F(x) = inf { t >= 0 : x in tF }` of bounded convex
//! sets with the origin in their interior.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::funcspec::{dot, norm2, Facet, SetSpec};
use crate::vecset::VecSet;

/// A validated dynamics set `F`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeSet {
    shape: SetSpec,
    facets: Option<Vec<Facet>>,
    norm: f64,
    inradius: f64,
}

impl GaugeSet {
    pub fn new(shape: SetSpec) -> Result<Self> {
        shape.validate()?;
        let bad = |m: &str| Err(Error::InvalidSet(format!("gauge set {m}")));
        let (norm, inradius) = match &shape {
            SetSpec::FinitePoints { .. } => return bad("must be convex with nonempty interior"),
            SetSpec::IntervalBox { lo, hi } => {
                if lo.iter().zip(hi).any(|(a, b)| !(*a < 0.0 && *b > 0.0)) {
                    return bad("must contain 0 in its interior");
                }
                let inr = lo
                    .iter()
                    .chain(hi)
                    .fold(f64::INFINITY, |m, v| m.min(v.abs()));
                let nrm = lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| a.abs().max(b.abs()).powi(2))
                    .sum::<f64>()
                    .sqrt();
                (nrm, inr)
            }
            SetSpec::Polygon { vertices } => {
                let facets = shape.facets().unwrap();
                let mut inr = f64::INFINITY;
                for f in &facets {
                    if f.b <= 0.0 {
                        return bad("must contain 0 in its interior");
                    }
                    inr = inr.min(f.b / (f.a[0].hypot(f.a[1])));
                }
                let nrm = vertices.iter().map(|v| norm2(v)).fold(0.0, f64::max);
                (nrm, inr)
            }
            SetSpec::Ball { center, radius } => {
                let c = norm2(center);
                if c >= *radius {
                    return bad("must contain 0 in its interior");
                }
                (c + radius, radius - c)
            }
        };
        let facets = shape.facets();
        Ok(GaugeSet {
            shape,
            facets,
            norm,
            inradius,
        })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        GaugeSet::new(SetSpec::IntervalBox {
            lo: vec![lo],
            hi: vec![hi],
        })
    }

    pub fn unit_ball(dim: usize) -> Self {
        GaugeSet::new(SetSpec::Ball {
            center: vec![0.0; dim],
            radius: 1.0,
        })
        .expect("unit ball")
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        GaugeSet::new(SetSpec::Polygon { vertices })
    }

    pub fn shape(&self) -> &SetSpec {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    /// `|F| = sup { |f| : f in F }`.
    pub fn norm_of_set(&self) -> f64 {
        self.norm
    }

    /// Radius of the largest origin-centred ball inside `F`.
    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    /// Returns `(|F|, m)` with `m = 1/|F|`, so that `m|x| <= rho_F(x)`.
    pub fn coercivity(&self) -> (f64, f64) {
        (self.norm, 1.0 / self.norm)
    }

    /// Global calmness constant of the gauge at the origin,
    /// `sup rho_F(x)/|x| = 1/inradius`.
    pub fn calmness_at_zero(&self) -> f64 {
        1.0 / self.inradius
    }

    pub(crate) fn facets(&self) -> Option<&[Facet]> {
        self.facets.as_deref()
    }

    /// Exact gauge value.
    pub fn eval(&self, x: &[f64]) -> f64 {
        if let Some(facets) = &self.facets {
            return facets
                .iter()
                .map(|f| (f.a[0] * x[0] + f.a[1] * x[1]) / f.b)
                .fold(0.0, f64::max);
        }
        match &self.shape {
            SetSpec::IntervalBox { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (a, b))| if *v >= 0.0 { v / b } else { v / a })
                .fold(0.0, f64::max),
            SetSpec::Ball { center, radius } => {
                if center.iter().all(|c| *c == 0.0) {
                    return norm2(x) / radius;
                }
                let xc = dot(x, center);
                let a = radius * radius - dot(center, center);
                (-xc + (xc * xc + a * dot(x, x)).sqrt()) / a
            }
            _ => unreachable!("validated at construction"),
        }
    }

    /// Exact subdifferential of the gauge at the origin: the polar set
    /// `{ v : <v, f> <= 1 for all f in F }`.
    pub fn subdiff_at_zero(&self) -> Result<VecSet> {
        if let Some(facets) = &self.facets {
            let verts = facets
                .iter()
                .map(|f| [f.a[0] / f.b, f.a[1] / f.b])
                .collect();
            return Ok(VecSet::polygon(verts));
        }
        match &self.shape {
            SetSpec::IntervalBox { lo, hi } => Ok(VecSet::interval(1.0 / lo[0], 1.0 / hi[0])),
            SetSpec::Ball { center, radius } if center.len() == 1 => Ok(VecSet::interval(
                1.0 / (center[0] - radius),
                1.0 / (center[0] + radius),
            )),
            SetSpec::Ball { center, radius } => {
                if center.iter().any(|c| *c != 0.0) {
                    return Err(Error::Unsupported(
                        "polar of an off-centre disc is an ellipse, which has no exact set representation".into(),
                    ));
                }
                Ok(VecSet::Ball {
                    center: [0.0, 0.0],
                    radius: 1.0 / radius,
                })
            }
            _ => unreachable!("validated at construction"),
        }
    }
}

/// Free function form of [`GaugeSet::eval`].
pub fn gauge_eval(f: &GaugeSet, x: &[f64]) -> f64 {
    f.eval(x)
}

/// Free function form of [`GaugeSet::coercivity`].
pub fn coercivity(f: &GaugeSet) -> (f64, f64) {
    f.coercivity()
}

/// Free function form of [`GaugeSet::subdiff_at_zero`].
pub fn gauge_subdiff_at_zero(f: &GaugeSet) -> Result<VecSet> {
    f.subdiff_at_zero()
}

impl TryFrom<SetSpec> for GaugeSet {
    type Error = Error;

    fn try_from(s: SetSpec) -> Result<Self> {
        GaugeSet::new(s)
    }
}

impl Serialize for GaugeSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.shape.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GaugeSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut value = serde_json::Value::deserialize(d)?;
        if let Some(obj) = value.as_object_mut() {
            match obj.remove("require_zero_interior") {
                None | Some(serde_json::Value::Bool(true)) => {}
                Some(other) => {
                    return Err(D::Error::custom(format!(
                        "gauge sets always require 0 in the interior; require_zero_interior = {other} is not supported"
                    )))
                }
            }
        }
        let shape: SetSpec = serde_json::from_value(value).map_err(D::Error::custom)?;
        GaugeSet::new(shape).map_err(D::Error::custom)
    }
}
