//! Subdifferential calculus.
//!
//! Exact convex subdifferentials and normal cones for [`FuncSpec`], grid
//! certificates for ε-Fréchet subgradients, a constructive Ekeland search,
//! the two subgradient-transfer searches through an infimal convolution, and
//! strict-differentiability probes.
//!
//! A grid can never witness a liminf, so certificates and probes are
//! one-sided evidence: they report the worst violation on each of a few
//! shrinking neighbourhoods rather than a proof.

use serde::Serialize;

use crate::envelope::ConvCase;
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::funcspec::{dot, norm2, sub, FuncSpec, NormKind, SetSpec};
use crate::gauge::GaugeSet;
use crate::grid::{Grid, GridFn};
use crate::vecset::VecSet;

/// Relative tolerance for deciding which pieces are active at a point.
const ACTIVE_RTOL: f64 = 1e-12;

/// Exact convex subdifferential `∂f(x)`.
///
/// Returns the empty set outside `dom f`, and `Unsupported` for specs that
/// are not convex (indicators of several isolated points).
pub fn convex_subdiff(f: &FuncSpec, x: &[f64]) -> Result<VecSet> {
    if let Some(d) = f.dim() {
        if d != x.len() {
            return Err(Error::Shape(format!(
                "{}D point for a {d}D function",
                x.len()
            )));
        }
    }
    if !f.is_convex() {
        return Err(Error::Unsupported(
            "subdifferential of a nonconvex function".into(),
        ));
    }
    if !f.eval_unchecked(x).is_finite() {
        return Ok(VecSet::Empty);
    }
    subdiff_in_domain(f, x)
}

fn subdiff_in_domain(f: &FuncSpec, x: &[f64]) -> Result<VecSet> {
    let dim = x.len();
    Ok(match f {
        FuncSpec::Norm { p } => norm_subdiff(*p, x),
        FuncSpec::Sq { alpha } => {
            VecSet::point(&x.iter().map(|v| 2.0 * alpha * v).collect::<Vec<_>>())
        }
        FuncSpec::Indicator { set } => normal_cone(set, x)?,
        FuncSpec::Gauge { set } => gauge_subdiff(set, x)?,
        FuncSpec::MaxAffine { pieces } => {
            let vals: Vec<f64> = pieces.iter().map(|(s, b)| dot(s, x) + b).collect();
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let tol = ACTIVE_RTOL * (1.0 + max.abs());
            let active: Vec<&Vec<f64>> = pieces
                .iter()
                .zip(&vals)
                .filter(|(_, v)| **v >= max - tol)
                .map(|((s, _), _)| s)
                .collect();
            hull_of(dim, active.iter().map(|s| s.as_slice()))
        }
        FuncSpec::Sum { terms } => {
            let mut acc = VecSet::zero(dim);
            for t in terms {
                acc = acc.minkowski_sum(&subdiff_in_domain(t, x)?)?;
            }
            acc
        }
        FuncSpec::Shift { inner, offset } => subdiff_in_domain(inner, &sub(x, offset))?,
    })
}

fn hull_of<'a>(dim: usize, pts: impl Iterator<Item = &'a [f64]>) -> VecSet {
    let pts: Vec<&[f64]> = pts.collect();
    if pts.is_empty() {
        return VecSet::Empty;
    }
    if dim == 1 {
        let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        VecSet::interval(lo, hi)
    } else {
        VecSet::polygon(pts.iter().map(|p| [p[0], p[1]]).collect())
    }
}

fn norm_subdiff(p: NormKind, x: &[f64]) -> VecSet {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero_tol = ACTIVE_RTOL;
    if x.len() == 1 {
        return if x[0].abs() <= zero_tol {
            VecSet::interval(-1.0, 1.0)
        } else {
            VecSet::point(&[x[0].signum()])
        };
    }
    let sgn = |v: f64| {
        if v.abs() <= zero_tol {
            None
        } else {
            Some(v.signum())
        }
    };
    match p {
        NormKind::L2 => {
            if scale <= zero_tol {
                VecSet::Ball {
                    center: [0.0, 0.0],
                    radius: 1.0,
                }
            } else {
                let n = norm2(x);
                VecSet::point(&[x[0] / n, x[1] / n])
            }
        }
        NormKind::L1 => {
            let range = |v: f64| sgn(v).map_or((-1.0, 1.0), |s| (s, s));
            let (a, b) = (range(x[0]), range(x[1]));
            VecSet::polygon(vec![[a.0, b.0], [a.1, b.0], [a.0, b.1], [a.1, b.1]])
        }
        NormKind::LInf => {
            if scale <= zero_tol {
                return VecSet::polygon(vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]);
            }
            let tol = ACTIVE_RTOL * (1.0 + scale);
            let mut pts = Vec::new();
            for (i, v) in x.iter().enumerate() {
                if v.abs() >= scale - tol {
                    let mut e = [0.0, 0.0];
                    e[i] = v.signum();
                    pts.push(e);
                }
            }
            VecSet::polygon(pts)
        }
    }
}

fn gauge_subdiff(set: &GaugeSet, x: &[f64]) -> Result<VecSet> {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale <= ACTIVE_RTOL {
        return set.subdiff_at_zero();
    }
    if let Some(facets) = set.facets() {
        let polar: Vec<[f64; 2]> = facets
            .iter()
            .map(|f| [f.a[0] / f.b, f.a[1] / f.b])
            .collect();
        let vals: Vec<f64> = polar.iter().map(|p| p[0] * x[0] + p[1] * x[1]).collect();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = ACTIVE_RTOL * (1.0 + max.abs());
        return Ok(VecSet::polygon(
            polar
                .into_iter()
                .zip(vals)
                .filter(|(_, v)| *v >= max - tol)
                .map(|(p, _)| p)
                .collect(),
        ));
    }
    match set.shape() {
        SetSpec::IntervalBox { .. } | SetSpec::Ball { .. } if x.len() == 1 => {
            let polar = set.subdiff_at_zero()?;
            let VecSet::Interval { lo, hi } = polar else {
                unreachable!()
            };
            Ok(VecSet::point(&[if x[0] > 0.0 { hi } else { lo }]))
        }
        SetSpec::Ball { center, .. } => {
            // The gauge is smooth away from 0: its gradient is the outward
            // normal n at the boundary point y = x/ρ(x), scaled so <∇ρ, y> = 1.
            let rho = set.eval(x);
            let y = [x[0] / rho, x[1] / rho];
            let n = [y[0] - center[0], y[1] - center[1]];
            let s = n[0] * y[0] + n[1] * y[1];
            Ok(VecSet::point(&[n[0] / s, n[1] / s]))
        }
        _ => Err(Error::Unsupported("gauge shape".into())),
    }
}

/// Normal cone `N(x; Ω)` of a convex set; empty when `x ∉ Ω`.
pub fn normal_cone(set: &SetSpec, x: &[f64]) -> Result<VecSet> {
    let dim = set.dim();
    if x.len() != dim {
        return Err(Error::Shape(format!("{}D point for a {dim}D set", x.len())));
    }
    if !set.is_convex() {
        return Err(Error::Unsupported("normal cone of a nonconvex set".into()));
    }
    let tol = set.tol();
    if !set.contains_tol(x, tol) {
        return Ok(VecSet::Empty);
    }
    let near = |a: f64, b: f64| (a - b).abs() <= tol;
    match set {
        SetSpec::FinitePoints { .. } => Ok(VecSet::whole(dim)),
        SetSpec::IntervalBox { lo, hi } => {
            if dim == 1 {
                let lo_c = if near(x[0], lo[0]) {
                    f64::NEG_INFINITY
                } else {
                    0.0
                };
                let hi_c = if near(x[0], hi[0]) {
                    f64::INFINITY
                } else {
                    0.0
                };
                return Ok(VecSet::interval(lo_c, hi_c));
            }
            let mut rays = Vec::new();
            for i in 0..2 {
                let mut e = [0.0, 0.0];
                if near(x[i], lo[i]) {
                    e[i] = -1.0;
                    rays.push(e);
                }
                if near(x[i], hi[i]) {
                    e[i] = 1.0;
                    rays.push(e);
                }
            }
            Ok(if rays.is_empty() {
                VecSet::zero(2)
            } else {
                VecSet::cone(rays)
            })
        }
        SetSpec::Polygon { .. } => {
            let rays: Vec<[f64; 2]> = set
                .facets()
                .unwrap()
                .into_iter()
                .filter(|f| {
                    (f.a[0] * x[0] + f.a[1] * x[1] - f.b).abs() <= tol * (1.0 + norm2(&f.a))
                })
                .map(|f| f.a)
                .collect();
            Ok(if rays.is_empty() {
                VecSet::zero(2)
            } else {
                VecSet::cone(rays)
            })
        }
        SetSpec::Ball { center, radius } => {
            if *radius == 0.0 {
                return Ok(VecSet::whole(dim));
            }
            if dim == 1 {
                let b = SetSpec::IntervalBox {
                    lo: vec![center[0] - radius],
                    hi: vec![center[0] + radius],
                };
                return normal_cone(&b, x);
            }
            let d = sub(x, center);
            if near(norm2(&d), *radius) {
                Ok(VecSet::cone(vec![[d[0], d[1]]]))
            } else {
                Ok(VecSet::zero(2))
            }
        }
    }
}

/// Fréchet subdifferential in the cases where it is known exactly: convex
/// specs, and functions that are `+∞` off a finite set around `x` (the
/// subdifferential at an isolated domain point is the whole space).
///
/// For all of these the Fréchet and limiting subdifferentials coincide.
pub fn regular_subdiff(f: &FuncSpec, x: &[f64]) -> Result<VecSet> {
    if f.is_convex() {
        return convex_subdiff(f, x);
    }
    if !f.eval_unchecked(x).is_finite() {
        return Ok(VecSet::Empty);
    }
    if has_finite_point_indicator(f) {
        return Ok(VecSet::whole(x.len()));
    }
    Err(Error::Unsupported(
        "subdifferential of a nonconvex function".into(),
    ))
}

fn has_finite_point_indicator(f: &FuncSpec) -> bool {
    match f {
        FuncSpec::Indicator {
            set: SetSpec::FinitePoints { .. },
        } => true,
        FuncSpec::Sum { terms } => terms.iter().any(has_finite_point_indicator),
        FuncSpec::Shift { inner, .. } => has_finite_point_indicator(inner),
        _ => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Grid evidence that `v` is an ε-Fréchet subgradient of `g` at `point`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub point: Vec<f64>,
    pub candidate: Vec<f64>,
    pub epsilon: f64,
    /// Internal slack added to ε to absorb grid error.
    pub slack: f64,
    pub radii: Vec<f64>,
    /// Minimum of the defining expression on each neighbourhood (≤ 0).
    pub violations: Vec<f64>,
    pub verdict: Verdict,
}

/// Multiples of `h` used for the shrinking neighbourhoods.
pub const RADIUS_SCHEDULE: [f64; 4] = [8.0, 4.0, 2.0, 1.0];

/// Default certificate slack `10h(1 + |v|)`.
pub fn default_slack(h: f64, v: &[f64]) -> f64 {
    10.0 * h * (1.0 + norm2(v))
}

pub fn frechet_certificate(g: &GridFn, x_bar: usize, v: &[f64], eps: f64) -> Result<Certificate> {
    let slack = default_slack(g.grid().h_max(), v);
    frechet_certificate_with(g, x_bar, v, eps, slack)
}

/// Checks `g(x) − g(x̄) − <v, x − x̄> + (ε + slack)|x − x̄| ≥ −1e-9` on grid
/// balls of radius `8h, 4h, 2h, h` around `x̄`.
pub fn frechet_certificate_with(
    g: &GridFn,
    x_bar: usize,
    v: &[f64],
    eps: f64,
    slack: f64,
) -> Result<Certificate> {
    let grid = g.grid();
    if v.len() != grid.dim() {
        return Err(Error::Shape(format!(
            "{}D candidate on a {}D grid",
            v.len(),
            grid.dim()
        )));
    }
    let g0 = g.value(x_bar).finite().ok_or_else(|| {
        Error::Precondition(format!("function is +inf at {:?}", grid.point(x_bar)))
    })?;
    if grid.edge_distance(x_bar) < 1 {
        return Err(Error::BoundaryMargin(grid.point(x_bar)));
    }
    let h = grid.h_max();
    let radii: Vec<f64> = RADIUS_SCHEDULE.iter().map(|k| k * h).collect();
    let mut worst = vec![0.0f64; radii.len()];
    for x in grid.ball(x_bar, radii[0]) {
        let ExtReal::Finite(gx) = g.value(x) else {
            continue;
        };
        let d = grid.diff(x_bar, x);
        let r = norm2(&d);
        let val = gx - g0 - dot(v, &d) + (eps + slack) * r;
        for (k, rad) in radii.iter().enumerate() {
            if r <= rad * (1.0 + 1e-12) {
                worst[k] = worst[k].min(val);
            }
        }
    }
    Ok(Certificate {
        point: grid.point(x_bar),
        candidate: v.to_vec(),
        epsilon: eps,
        slack,
        radii,
        verdict: Verdict::from_bool(worst.iter().all(|w| *w >= -1e-9)),
        violations: worst,
    })
}

/// Constructive Ekeland principle on a finite grid.
///
/// Starting from `w̃` with `g(w̃) ≤ min g + η`, repeatedly moves to the
/// point with the largest strict improvement of `g(w) + (η/λ)|w − current|`.
/// The result `w̄` satisfies `g(w̄) ≤ g(w̃)`, `|w̄ − w̃| ≤ λ`, and
/// `g(w̄) ≤ g(w) + (η/λ)|w − w̄|` for every grid point `w`.
pub fn ekeland_point(g: &GridFn, w_tilde: usize, eta: f64, lambda: f64) -> Result<usize> {
    let all: Vec<usize> = (0..g.grid().len()).collect();
    ekeland_point_on(g, &all, w_tilde, eta, lambda)
}

/// [`ekeland_point`] restricted to the grid points in `domain`.
pub fn ekeland_point_on(
    g: &GridFn,
    domain: &[usize],
    w_tilde: usize,
    eta: f64,
    lambda: f64,
) -> Result<usize> {
    if !(eta > 0.0 && lambda > 0.0 && eta.is_finite() && lambda.is_finite()) {
        return Err(Error::InvalidValue(format!(
            "need η > 0 and λ > 0, got {eta}, {lambda}"
        )));
    }
    let grid = g.grid();
    let pts: Vec<(usize, f64)> = domain
        .iter()
        .filter_map(|&w| g.value(w).finite().map(|v| (w, v)))
        .collect();
    let min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let start = g.value(w_tilde).to_f64();
    // Rounding in grid coordinates should not reject a point sitting exactly
    // at the threshold. Written negated so a NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(start <= min + eta + 1e-12 * (1.0 + min.abs())) {
        return Err(Error::Precondition(format!(
            "g(w̃) = {start} exceeds min g + η = {}",
            min + eta
        )));
    }
    let slope = eta / lambda;
    let mut cur = w_tilde;
    loop {
        let gc = g.value(cur).to_f64();
        let mut best: Option<(usize, f64)> = None;
        for &(w, gw) in &pts {
            let gain = gc - (gw + slope * grid.dist(w, cur));
            if gain > 0.0 && best.is_none_or(|(_, b)| gain > b) {
                best = Some((w, gain));
            }
        }
        match best {
            Some((w, _)) => cur = w,
            None => return Ok(cur),
        }
    }
}

/// Outcome of a subgradient-transfer search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transfer {
    pub w_tilde: Vec<f64>,
    pub w_bar: Vec<f64>,
    /// Accuracy `η̃` used for the near-minimizer and the Ekeland step size.
    pub eta_tilde: f64,
    /// Radius of the search ball around `w̃`.
    pub delta: f64,
    pub certificate: Certificate,
    /// For subadditive φ: slack in
    /// `f(w̃) + φ(w̄ − x̄) ≤ (f ⊕ φ)(x̄) + φ(w̄ − w̃) + η` (≥ 0 means it holds).
    pub value_bound_slack: Option<f64>,
    #[serde(skip)]
    pub w_tilde_index: usize,
    #[serde(skip)]
    pub w_bar_index: usize,
}

impl Transfer {
    pub fn passed(&self) -> bool {
        self.certificate.verdict.passed() && self.value_bound_slack.is_none_or(|s| s >= -1e-9)
    }
}

/// Largest radius from the certificate schedule strictly below `limit`.
fn search_radius(h: f64, limit: f64) -> f64 {
    RADIUS_SCHEDULE
        .iter()
        .map(|k| k * h)
        .find(|r| *r < limit)
        .unwrap_or(h)
}

fn transfer_setup(
    case: &ConvCase,
    x_bar: usize,
    v: &[f64],
    eps: f64,
    eta: f64,
) -> Result<(f64, f64)> {
    if !(eta > 0.0 && eps >= 0.0) {
        return Err(Error::InvalidValue(format!(
            "need η > 0 and ε ≥ 0, got {eta}, {eps}"
        )));
    }
    let env = case.envelope()?;
    let pre = frechet_certificate(env, x_bar, v, eps)?;
    if !pre.verdict.passed() {
        return Err(Error::Precondition(format!(
            "{v:?} is not certified as an ε-subgradient of the envelope at {:?}",
            pre.point
        )));
    }
    Ok((env.value(x_bar).to_f64(), case.grid().h_max()))
}

fn first_near_minimizer(case: &ConvCase, x_bar: usize, env_x: f64, gap: f64) -> usize {
    case.objective(x_bar)
        .iter()
        .position(|o| *o < env_x + gap)
        .expect("the envelope value is attained on the grid")
}

/// Runs Ekeland on `aux` restricted to the grid ball `B(w̃, δ)`.
fn ekeland_in_ball(
    grid: &Grid,
    aux: impl Fn(usize) -> f64,
    w_tilde: usize,
    delta: f64,
    eta_t: f64,
) -> Result<usize> {
    let ball = grid.ball(w_tilde, delta);
    let mut vals = vec![f64::INFINITY; grid.len()];
    for &w in &ball {
        vals[w] = aux(w);
    }
    let g = GridFn::from_f64(grid.clone(), &vals)?;
    let min = ball.iter().map(|&w| vals[w]).fold(f64::INFINITY, f64::min);
    // A grid auxiliary function can dip below zero; widen the accuracy to
    // the actual gap so the precondition holds.
    let eta_ek = (eta_t * eta_t).max(vals[w_tilde] - min);
    ekeland_point_on(&g, &ball, w_tilde, eta_ek, eta_t)
}

/// Transfers an ε-subgradient `v` of the envelope at `x̄` to an
/// (ε+η)-subgradient `−v` of `φ(· − x̄)` at a point `w̄` close to a
/// near-minimizer `w̃ ∈ P(x̄; η̃²)`.
pub fn transfer_to_phi(
    case: &ConvCase,
    x_bar: usize,
    v: &[f64],
    eps: f64,
    eta: f64,
) -> Result<Transfer> {
    let (env_x, h) = transfer_setup(case, x_bar, v, eps, eta)?;
    let grid = case.grid();
    let delta = search_radius(h, eta / 2.0);
    let eta_t = 0.999 * delta / 2.0;
    let wt = first_near_minimizer(case, x_bar, env_x, eta_t * eta_t);
    let phi_wt = case.phi_between(wt, x_bar);
    let aux = |w: usize| {
        -dot(v, &grid.diff(w, wt)) + case.phi_between(w, x_bar) - phi_wt
            + eta_t * eta_t
            + (eps + eta / 2.0) * grid.dist(w, wt)
    };
    let wb = ekeland_in_ball(grid, aux, wt, delta, eta_t)?;
    let phi_shift = GridFn::from_f64(
        grid.clone(),
        &(0..grid.len())
            .map(|w| case.phi_between(w, x_bar))
            .collect::<Vec<_>>(),
    )?;
    let neg: Vec<f64> = v.iter().map(|c| -c).collect();
    let certificate = frechet_certificate(&phi_shift, wb, &neg, eps + eta)?;
    Ok(Transfer {
        w_tilde: grid.point(wt),
        w_bar: grid.point(wb),
        eta_tilde: eta_t,
        delta,
        certificate,
        value_bound_slack: None,
        w_tilde_index: wt,
        w_bar_index: wb,
    })
}

/// Transfers an ε-subgradient `v` of the envelope at `x̄` to an
/// (ε+η)-subgradient of `f` at a point `w̄` close to a near-minimizer `w̃`.
/// When φ is a gauge (hence subadditive) also checks the value bound
/// `f(w̃) + φ(w̄ − x̄) ≤ (f ⊕ φ)(x̄) + φ(w̄ − w̃) + η`.
pub fn transfer_to_f(
    case: &ConvCase,
    x_bar: usize,
    v: &[f64],
    eps: f64,
    eta: f64,
) -> Result<Transfer> {
    let (env_x, h) = transfer_setup(case, x_bar, v, eps, eta)?;
    let grid = case.grid();
    let delta = search_radius(h, eta / 2.0);
    let eta_t = (eta / 2.0).min(0.999 * delta / 2.0).min(1.0);
    let wt = first_near_minimizer(case, x_bar, env_x, eta_t * eta_t);
    let f = case.f();
    let f_wt = f.value(wt).to_f64();
    let aux = |w: usize| {
        -dot(v, &grid.diff(wt, w)) + f.value(w).to_f64() - f_wt
            + eta_t * eta_t
            + (eps + eta / 2.0) * grid.dist(w, wt)
    };
    let wb = ekeland_in_ball(grid, aux, wt, delta, eta_t)?;
    let certificate = frechet_certificate(f, wb, v, eps + eta)?;
    let value_bound_slack = case
        .gauge()
        .map(|_| env_x + case.phi_between(wb, wt) + eta - (f_wt + case.phi_between(wb, x_bar)));
    Ok(Transfer {
        w_tilde: grid.point(wt),
        w_bar: grid.point(wb),
        eta_tilde: eta_t,
        delta,
        certificate,
        value_bound_slack,
        w_tilde_index: wt,
        w_bar_index: wb,
    })
}

/// Grid evidence of strict differentiability of `g` at `point` with
/// gradient `candidate`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffProbe {
    pub point: Vec<f64>,
    pub candidate: Vec<f64>,
    pub pairs: usize,
    pub radii: Vec<f64>,
    /// Worst `|g(x) − g(y) − <v, x − y>| / |x − y|` over pairs in each ball.
    pub worst: Vec<f64>,
    pub monotone: bool,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Default probe tolerance `20h·κ` with curvature scale κ = 1.
pub fn default_probe_tolerance(h: f64) -> f64 {
    20.0 * h
}

pub fn strict_diff_probe(g: &GridFn, x_bar: usize, v: &[f64]) -> Result<DiffProbe> {
    strict_diff_probe_with(g, x_bar, v, default_probe_tolerance(g.grid().h_max()))
}

/// Exhaustive strict-difference quotients over all pairs in the balls of
/// radius `8h, 4h, 2h, h`; passes iff the worst quotient at radius `h` is
/// within `tol`.
pub fn strict_diff_probe_with(g: &GridFn, x_bar: usize, v: &[f64], tol: f64) -> Result<DiffProbe> {
    StrictDiffProber::new(g.grid()).probe_values(&g.to_f64_vec(), x_bar, v, tol)
}

struct PairPlan {
    a: isize,
    b: isize,
    dx: [f64; 2],
    inv_len: f64,
    /// Index of the smallest ball in the schedule containing both points.
    bucket: usize,
}

/// Strict-difference probe with the pair structure of the grid ball
/// precomputed, for probing many points of the same grid.
pub struct StrictDiffProber {
    grid: Grid,
    radii: Vec<f64>,
    pairs: Vec<PairPlan>,
}

impl StrictDiffProber {
    pub fn new(grid: &Grid) -> Self {
        let h = grid.h_max();
        let radii: Vec<f64> = RADIUS_SCHEDULE.iter().map(|k| k * h).collect();
        let reach = RADIUS_SCHEDULE[0] as isize;
        let (stride, rows) = if grid.dim() == 1 {
            (0, 0)
        } else {
            (grid.axes()[1].n as isize, reach)
        };
        let mut pts = Vec::new();
        for i in -rows..=rows {
            for j in -reach..=reach {
                let d = if grid.dim() == 1 {
                    [j as f64 * grid.spacing(0), 0.0]
                } else {
                    [i as f64 * grid.spacing(0), j as f64 * grid.spacing(1)]
                };
                let r = d[0].hypot(d[1]);
                if r <= radii[0] * (1.0 + 1e-12) {
                    pts.push((i * stride + j, d, r));
                }
            }
        }
        let bucket = |r: f64| {
            radii
                .iter()
                .rposition(|rad| r <= rad * (1.0 + 1e-12))
                .unwrap()
        };
        let mut pairs = Vec::new();
        for (k, &(a, da, ra)) in pts.iter().enumerate() {
            for &(b, db, rb) in &pts[k + 1..] {
                let dx = [da[0] - db[0], da[1] - db[1]];
                pairs.push(PairPlan {
                    a,
                    b,
                    dx,
                    inv_len: 1.0 / dx[0].hypot(dx[1]),
                    bucket: bucket(ra.max(rb)),
                });
            }
        }
        StrictDiffProber {
            grid: grid.clone(),
            radii,
            pairs,
        }
    }

    pub fn probe(&self, g: &GridFn, x_bar: usize, v: &[f64]) -> Result<DiffProbe> {
        self.probe_values(
            &g.to_f64_vec(),
            x_bar,
            v,
            default_probe_tolerance(self.grid.h_max()),
        )
    }

    /// Probe on raw grid values (`+inf` allowed).
    pub fn probe_values(
        &self,
        vals: &[f64],
        x_bar: usize,
        v: &[f64],
        tol: f64,
    ) -> Result<DiffProbe> {
        let grid = &self.grid;
        if v.len() != grid.dim() {
            return Err(Error::Shape(format!(
                "{}D candidate on a {}D grid",
                v.len(),
                grid.dim()
            )));
        }
        if !vals[x_bar].is_finite() {
            return Err(Error::Precondition(format!(
                "function is +inf at {:?}",
                grid.point(x_bar)
            )));
        }
        if grid.edge_distance(x_bar) < RADIUS_SCHEDULE[0] as usize {
            return Err(Error::BoundaryMargin(grid.point(x_bar)));
        }
        let v2 = [v[0], v.get(1).copied().unwrap_or(0.0)];
        let mut by_bucket = [0.0f64; RADIUS_SCHEDULE.len()];
        let c = x_bar as isize;
        for p in &self.pairs {
            let q = (vals[(c + p.a) as usize]
                - vals[(c + p.b) as usize]
                - (v2[0] * p.dx[0] + v2[1] * p.dx[1]))
                .abs()
                * p.inv_len;
            let m = &mut by_bucket[p.bucket];
            // NaN quotients must count as the worst case
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(q <= *m) {
                *m = if q.is_nan() { f64::INFINITY } else { q };
            }
        }
        // worst quotient on the k-th ball: pairs whose smallest ball is k or smaller
        let mut worst = by_bucket.to_vec();
        for k in (0..worst.len() - 1).rev() {
            worst[k] = worst[k].max(worst[k + 1]);
        }
        let monotone = worst.windows(2).all(|w| w[1] <= w[0] + 1e-9);
        let last = *worst.last().unwrap();
        Ok(DiffProbe {
            point: grid.point(x_bar),
            candidate: v.to_vec(),
            pairs: self.pairs.len(),
            radii: self.radii.clone(),
            verdict: Verdict::from_bool(monotone && last <= tol),
            worst,
            monotone,
            tolerance: tol,
        })
    }
}

/// Gradient `2α(x̄ − w̄)` of the Moreau envelope, where `P(x̄) = {w̄}`.
pub fn moreau_grad(case: &ConvCase, x_bar: usize) -> Result<Vec<f64>> {
    let alpha = case
        .alpha()
        .ok_or_else(|| Error::Precondition("φ must be a scaled squared norm".into()))?;
    let p = case.projection_set(x_bar);
    if !p.is_singleton() {
        return Err(Error::Ambiguous {
            point: p.x,
            count: p.indices.len(),
        });
    }
    let w = case.grid().point(p.indices[0]);
    Ok(p.x
        .iter()
        .zip(&w)
        .map(|(x, w)| 2.0 * alpha * (x - w))
        .collect())
}

/// Gradient `−∇φ(w̄ − x̄)` of the envelope, where `P(x̄) = {w̄}` and φ is
/// differentiable at `w̄ − x̄`.
pub fn envelope_grad(case: &ConvCase, x_bar: usize) -> Result<Vec<f64>> {
    let p = case.projection_set(x_bar);
    if !p.is_singleton() {
        return Err(Error::Ambiguous {
            point: p.x,
            count: p.indices.len(),
        });
    }
    let d = case.grid().diff(x_bar, p.indices[0]);
    let s = convex_subdiff(case.phi(), &d)?;
    let g = s
        .singleton(1e-12)
        .ok_or_else(|| Error::Precondition(format!("φ is not differentiable at {d:?}")))?;
    Ok(g.iter().map(|c| -c).collect())
}
