//! The individual checks. Each returns records for one case; failures of
//! the machinery itself become `error` records rather than aborting.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use super::{CheckCase, CheckId, CheckRecord, CheckSelector, Mode, Tolerances};
use crate::envelope::ConvCase;
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::funcspec::{norm2, sub, FuncSpec};
use crate::grid::{lipschitz_estimate, neighbors, Grid, GridFn, IndexBox};
use crate::seed::seeded_rng;
use crate::subdiff::{
    convex_subdiff, default_slack, frechet_certificate, frechet_certificate_with, moreau_grad,
    regular_subdiff, transfer_to_f, transfer_to_phi, StrictDiffProber, Transfer,
};
use crate::vecset::VecSet;

const T_VALUES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
const SEGMENT_PAIRS: usize = 20;
const WELLPOSED_TRIALS: usize = 8;

/// A subgradient candidate with the slack its membership tests allow.
type Candidate = (Vec<f64>, f64);

struct Ctx<'a> {
    case: &'a CheckCase,
    conv: ConvCase,
    points: Vec<usize>,
    s0: BTreeSet<usize>,
    seed: u64,
}

impl Ctx<'_> {
    fn grid(&self) -> &Grid {
        self.conv.grid()
    }

    fn env(&self) -> &GridFn {
        self.conv.envelope().expect("envelope computed at setup")
    }

    fn tol(&self) -> &Tolerances {
        &self.case.tolerances
    }

    fn h(&self) -> f64 {
        self.grid().h_max()
    }

    fn rec(&self, id: CheckId, point: Option<usize>, mode: Mode) -> CheckRecord {
        CheckRecord::new(id, &self.case.id, point.map(|p| self.grid().point(p)), mode)
    }

    fn expected(&self, id: CheckId, x: usize) -> Option<VecSet> {
        let p = self.grid().point(x);
        self.case
            .expected_sets
            .iter()
            .find(|e| {
                e.check == id
                    && e.point.len() == p.len()
                    && e.point.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-12)
            })
            .map(|e| e.set.clone().normalized())
    }

    /// Closed-form envelope, when declared and convex.
    fn env_spec(&self) -> Option<&FuncSpec> {
        self.case.envelope.as_ref().filter(|e| e.is_convex())
    }

    /// `∂f(x̄) ∩ [−∂φ(0)]` for gauge φ.
    fn right_side(&self, x: usize) -> Result<VecSet> {
        let gauge = self.conv.gauge().expect("gauge φ");
        let df = regular_subdiff(&self.case.f, &self.grid().point(x))?;
        df.intersect(&gauge.subdiff_at_zero()?.negate())
    }

    /// Envelope subgradient candidates at `x` with the slack that membership
    /// tests should allow for each. Closed-form when available, otherwise a
    /// lattice of vectors filtered by grid certificates.
    fn candidates(&self, x: usize) -> Result<(Vec<Candidate>, Mode)> {
        if let Some(e) = self.env_spec() {
            let s = convex_subdiff(e, &self.grid().point(x))?;
            return Ok((
                s.extreme_points().into_iter().map(|v| (v, 0.0)).collect(),
                Mode::InclusionExact,
            ));
        }
        let grid = self.grid();
        let env = self.env();
        let m = grid.multi_index(x);
        let lo: Vec<usize> = m.iter().map(|i| i.saturating_sub(8)).collect();
        let hi: Vec<usize> = m
            .iter()
            .zip(grid.axes())
            .map(|(i, a)| (i + 8).min(a.n - 1))
            .collect();
        let lip = lipschitz_estimate(env, &IndexBox { lo, hi })?;
        let reach = 1.5 * lip + 0.1;
        let steps: i32 = if grid.dim() == 1 { 20 } else { 10 };
        let ticks: Vec<f64> = (-steps..=steps)
            .map(|k| reach * k as f64 / steps as f64)
            .collect();
        let lattice: Vec<Vec<f64>> = if grid.dim() == 1 {
            ticks.iter().map(|a| vec![*a]).collect()
        } else {
            ticks
                .iter()
                .flat_map(|a| ticks.iter().map(move |b| vec![*a, *b]))
                .collect()
        };
        let res = self.resolution(x);
        let mut out = Vec::new();
        for v in lattice {
            let c = frechet_certificate(env, x, &v, 0.0)?;
            if c.verdict.passed() {
                out.push((v, c.slack + res));
            }
        }
        Ok((out, Mode::InclusionEvidenced))
    }

    /// How far a certified candidate can sit from a true subgradient: a
    /// vector passes the certificate at `x` whenever it is within the slack
    /// plus `max (g(x+y) + g(x−y) − 2g(x)) / |y|` over the certificate ball
    /// of one (for convex-like `g`).
    fn resolution(&self, x: usize) -> f64 {
        let grid = self.grid();
        let env = self.env();
        let g0 = env.value(x).to_f64();
        let m = grid.multi_index(x);
        let mut res = 0.0f64;
        for y in grid.ball(x, 8.0 * grid.h_max()) {
            let ym = grid.multi_index(y);
            let refl: Option<Vec<usize>> = m
                .iter()
                .zip(&ym)
                .map(|(a, b)| (2 * a).checked_sub(*b))
                .collect();
            let Some(Ok(z)) = refl.map(|r| grid.flat(&r)) else {
                continue;
            };
            let r = grid.dist(x, y);
            if r > 0.0 {
                let s = env.value(y).to_f64() + env.value(z).to_f64() - 2.0 * g0;
                if s.is_finite() {
                    res = res.max(s / r);
                }
            }
        }
        res
    }
}

pub(super) fn run_case(case: &CheckCase, sel: &CheckSelector, seed: u64) -> Vec<CheckRecord> {
    let setup = || -> Result<Ctx<'_>> {
        let conv = case.build()?;
        conv.envelope()?;
        let points = case
            .points
            .iter()
            .map(|p| case.grid.locate(p))
            .collect::<Result<Vec<_>>>()?;
        let s0 = conv.s0_set()?.into_iter().collect();
        Ok(Ctx {
            case,
            conv,
            points,
            s0,
            seed,
        })
    };
    let ctx = match setup() {
        Ok(c) => c,
        Err(e) => {
            return sel
                .ids()
                .iter()
                .filter(|id| !is_appendix(**id))
                .map(|id| {
                    CheckRecord::new(*id, &case.id, None, Mode::Property)
                        .error(format!("case setup failed: {e}"))
                })
                .collect()
        }
    };
    let mut out = Vec::new();
    for &id in sel.ids() {
        if is_appendix(id) {
            continue;
        }
        let res = match id {
            CheckId::EnvelopeClosedForm => closed_form(&ctx),
            CheckId::TransferInequality => transfer_inequality(&ctx),
            CheckId::EnvelopeLipschitz => envelope_lipschitz(&ctx),
            CheckId::BoundedLipschitz => bounded_lipschitz(&ctx),
            CheckId::WellPosedness => well_posedness(&ctx),
            CheckId::FixedPointS0 => fixed_point_s0(&ctx),
            CheckId::DomInS0 => dom_in_s0(&ctx),
            CheckId::GaugeCoercivity => gauge_coercivity(&ctx),
            CheckId::FrechetFormulaS0 | CheckId::LimitingFormulaS0 => formula_s0(&ctx, id),
            CheckId::FrechetProjectionInclusion => projection_inclusion(&ctx),
            CheckId::SegmentIdentity => segment_identity(&ctx),
            CheckId::SegmentSubgradient => segment_subgradient(&ctx),
            CheckId::EkelandTransferPhi | CheckId::EkelandTransferF => ekeland_transfer(&ctx, id),
            CheckId::LimitingProjectionUnion => projection_union(&ctx),
            CheckId::GradientFormula => gradient_formula(&ctx),
            CheckId::GradientContinuity => gradient_continuity(&ctx),
            CheckId::DifferentiabilityEquivalence | CheckId::SubdiffContinuity => unreachable!(),
        };
        match res {
            Ok(records) => out.extend(records),
            Err(e) => out.push(ctx.rec(id, None, Mode::Property).error(e.to_string())),
        }
    }
    out
}

fn is_appendix(id: CheckId) -> bool {
    matches!(
        id,
        CheckId::DifferentiabilityEquivalence | CheckId::SubdiffContinuity
    )
}

fn closed_form(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let rec = ctx.rec(CheckId::EnvelopeClosedForm, None, Mode::Property);
    let Some(spec) = &ctx.case.envelope else {
        return Ok(vec![rec.skip("no closed form declared")]);
    };
    let grid = ctx.grid();
    let env = ctx.env();
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        let want = spec.eval(&grid.point(i))?;
        let err = match (env.value(i), want) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs(),
            (ExtReal::PosInf, ExtReal::PosInf) => 0.0,
            _ => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    Ok(vec![rec
        .bound(worst, ctx.tol().closed_form)
        .note("max |grid envelope − closed form| over the grid")])
}

fn transfer_inequality(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    use rayon::prelude::*;
    let rec = ctx.rec(CheckId::TransferInequality, None, Mode::Property);
    if ctx.conv.gauge().is_none() {
        return Ok(vec![rec.skip("hypothesis: φ subadditive (gauge) not met")]);
    }
    let env = ctx.env().to_f64_vec();
    let n = env.len();
    let worst = (0..n)
        .into_par_iter()
        .map(|x| {
            (0..n)
                .map(|y| env[x] - env[y] - ctx.conv.phi_between(y, x))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(vec![rec.bound(worst, ctx.tol().transfer).note(format!(
        "max over {} grid pairs of (f⊕φ)(x) − (f⊕φ)(y) − φ(y−x)",
        n * n
    ))])
}

fn envelope_lipschitz(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let rec = ctx.rec(CheckId::EnvelopeLipschitz, None, Mode::Property);
    let Some(gauge) = ctx.conv.gauge() else {
        return Ok(vec![rec.skip("hypothesis: φ subadditive (gauge) not met")]);
    };
    let lip = lipschitz_estimate(ctx.env(), &ctx.grid().full_box())?;
    let calm = gauge.calmness_at_zero();
    Ok(vec![rec.bound(lip, calm + ctx.tol().lipschitz).note(
        format!("discrete Lipschitz constant vs calmness of φ at 0 = {calm}"),
    )])
}

fn bounded_lipschitz(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let grid = ctx.grid();
    let margin = grid.axes().iter().map(|a| a.n / 4).min().unwrap();
    let k_box = grid
        .interior_box(margin)
        .ok_or_else(|| Error::InsufficientData("grid too small".into()))?;
    let k = k_box.flats(grid);
    let env = ctx.env();
    let sup = k
        .iter()
        .map(|&x| env.value(x).to_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    let f = ctx.conv.f();
    let omega: Vec<usize> = (0..grid.len())
        .filter(|&w| match f.value(w) {
            ExtReal::Finite(fw) => k
                .iter()
                .any(|&x| fw + ctx.conv.phi_between(w, x) < sup + 1.0),
            ExtReal::PosInf => false,
        })
        .collect();
    // offset box spanned by Ω_K − K, in offset-grid indices
    let dim = grid.dim();
    let mut lo = vec![usize::MAX; dim];
    let mut hi = vec![0usize; dim];
    for &w in &omega {
        let wm = grid.multi_index(w);
        for a in 0..dim {
            let n = grid.axes()[a].n;
            lo[a] = lo[a].min(wm[a] + n - 1 - k_box.hi[a]);
            hi[a] = hi[a].max(wm[a] + n - 1 - k_box.lo[a]);
        }
    }
    let l_env = lipschitz_estimate(env, &k_box)?;
    let l_ker = lipschitz_estimate(&ctx.conv.kernel_fn()?, &IndexBox { lo, hi })?;
    Ok(vec![ctx
        .rec(CheckId::BoundedLipschitz, None, Mode::Property)
        .bound(l_env, l_ker + ctx.tol().lipschitz)
        .note(format!(
            "K = interior box at margin {margin}; Ω_K = {{w : f(w)+φ(w−x) < sup_K(f⊕φ)+1 for some x ∈ K}} has {} points; Lip(φ) on the box of Ω_K − K = {l_ker}",
            omega.len()
        ))])
}

fn well_posedness(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for &x in &ctx.points {
        let rec = ctx.rec(CheckId::WellPosedness, Some(x), Mode::Property);
        let Some((l, m)) = ctx.case.constants.gap() else {
            out.push(rec.skip("hypothesis: declared m > ℓ not met"));
            continue;
        };
        if !ctx.s0.contains(&x) {
            out.push(rec.skip("hypothesis: x̄ ∈ S₀ not met"));
            continue;
        }
        let r = ctx
            .conv
            .wellposed_probe(x, WELLPOSED_TRIALS, ctx.seed, Some((l, m)))?;
        out.push(
            rec.bound(r.max_terminal_distance, 0.0)
                .fail_if(!r.singleton, "P(x̄) is not a singleton")
                .fail_if(
                    r.bound_violations > 0,
                    format!("{} steps broke |w_k − x̄| ≤ gap/(m−ℓ)", r.bound_violations),
                )
                .note(format!(
                    "{} sequences × {} steps; worst bound slack {:e}",
                    r.sequences,
                    r.steps,
                    r.worst_bound_slack.unwrap_or(f64::NAN)
                )),
        );
    }
    Ok(out)
}

fn fixed_point_s0(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let fix: BTreeSet<usize> = ctx
        .conv
        .f()
        .effective_domain()
        .into_iter()
        .filter(|&x| ctx.conv.projection_set(x).contains(x))
        .collect();
    let diff = fix.symmetric_difference(&ctx.s0).count();
    Ok(vec![ctx
        .rec(CheckId::FixedPointS0, None, Mode::Property)
        .bound(diff as f64, 0.0)
        .note(format!(
            "|S₀| = {}, |Fix P| = {}; measured = size of the symmetric difference",
            ctx.s0.len(),
            fix.len()
        ))])
}

fn dom_in_s0(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let rec = ctx.rec(CheckId::DomInS0, None, Mode::Property);
    if ctx.case.constants.gap().is_none() {
        return Ok(vec![rec.skip("hypothesis: declared m > ℓ not met")]);
    }
    let dom = ctx.conv.f().effective_domain();
    let missing = dom.iter().filter(|x| !ctx.s0.contains(x)).count();
    Ok(vec![rec.bound(missing as f64, 0.0).note(format!(
        "{} domain points; measured = number outside S₀",
        dom.len()
    ))])
}

fn gauge_coercivity(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let rec = ctx.rec(CheckId::GaugeCoercivity, None, Mode::Property);
    let Some(gauge) = ctx.conv.gauge() else {
        return Ok(vec![rec.skip("φ is not a gauge")]);
    };
    let (norm, m) = gauge.coercivity();
    let kernel = ctx.conv.kernel_fn()?;
    let og = kernel.grid();
    let mut ratio = f64::INFINITY;
    for k in 0..og.len() {
        let r = norm2(&og.point(k));
        if r > 1e-12 {
            ratio = ratio.min(kernel.value(k).to_f64() / r);
        }
    }
    let declared = ctx.case.constants.m;
    Ok(vec![rec
        .bound(m - ratio, 1e-12)
        .fail_if(
            declared.is_some_and(|d| (d - m).abs() > 1e-9 * (1.0 + m)),
            "declared m differs from |F|⁻¹",
        )
        .note(format!(
            "|F| = {norm}, m = |F|⁻¹ = {m}, min ρ_F(x)/|x| over kernel offsets = {ratio}"
        ))])
}

fn worst_violation(certs: &[crate::subdiff::Certificate]) -> f64 {
    // `+ 0.0` turns a −0 into 0 for the report
    certs
        .iter()
        .flat_map(|c| c.violations.iter())
        .fold(0.0f64, |m, v| m.max(-v))
        + 0.0
}

fn formula_s0(ctx: &Ctx, id: CheckId) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for &x in &ctx.points {
        let rec = ctx.rec(id, Some(x), Mode::EqualityProved);
        if ctx.conv.gauge().is_none() {
            out.push(rec.skip("hypothesis: φ a coercive gauge not met"));
            continue;
        }
        let Some((l, m)) = ctx.case.constants.gap() else {
            out.push(rec.skip("hypothesis: declared m > ℓ not met"));
            continue;
        };
        if !ctx.s0.contains(&x) {
            out.push(rec.skip("hypothesis: x̄ ∈ S₀ not met"));
            continue;
        }
        let right = match ctx.right_side(x) {
            Ok(r) => r,
            Err(e) => {
                out.push(rec.error(e.to_string()));
                continue;
            }
        };
        let verts = right.extreme_points();
        let certs = verts
            .iter()
            .map(|v| frechet_certificate(ctx.env(), x, v, 0.0))
            .collect::<Result<Vec<_>>>()?;
        let bad = certs.iter().filter(|c| !c.verdict.passed()).count();
        let vmax = verts.iter().map(|v| norm2(v)).fold(0.0, f64::max);
        let amp = ctx
            .case
            .constants
            .amp_alpha
            .unwrap_or(2.0 * (vmax + m) / (m - l) + 1.0);
        let left = ctx.expected(id, x).map(Ok).or_else(|| {
            ctx.env_spec()
                .map(|e| convex_subdiff(e, &ctx.grid().point(x)))
        });
        let kind = if id == CheckId::LimitingFormulaS0 {
            "limiting sets equal the Fréchet ones here (f convex or lower regular at x̄)"
        } else {
            "Fréchet sets"
        };
        let rec = match left {
            Some(left) => {
                let d = left?.hausdorff(&right)?;
                rec.bound(d, ctx.tol().hausdorff)
                    .note("Hausdorff distance between closed-form sides")
            }
            None => {
                let mut r = rec.bound(worst_violation(&certs), 1e-9);
                r.mode = Mode::InclusionEvidenced;
                r.note(
                    "no closed-form left side: right-side vertices certified on the grid envelope",
                )
            }
        };
        out.push(
            rec.fail_if(
                bad > 0,
                format!(
                    "{bad} of {} right-side vertices failed certification",
                    verts.len()
                ),
            )
            .note(format!(
                "{kind}; {} vertices certified; amplification constant 2(|x*|+m)/(m−ℓ)+1 = {amp}",
                verts.len()
            )),
        );
    }
    Ok(out)
}

const INCLUSION_NOTE: &str =
    "exact sets at ε = 0 plus certificate slack; the stated inclusion keeps the same ε on both sides while its derivation introduces an extra η";

fn projection_inclusion(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let grid = ctx.grid();
    for &x in &ctx.points {
        let (cands, mode) = ctx.candidates(x)?;
        let rec = ctx.rec(CheckId::FrechetProjectionInclusion, Some(x), mode);
        let p = ctx.conv.projection_set(x);
        if cands.is_empty() {
            out.push(
                rec.bound(0.0, ctx.tol().membership)
                    .note("no envelope subgradient certified: inclusion holds vacuously"),
            );
            continue;
        }
        let xp = grid.point(x);
        let mut worst = f64::NEG_INFINITY;
        for &w in &p.indices {
            let wp = grid.point(w);
            let df = regular_subdiff(&ctx.case.f, &wp)?;
            let dphi = convex_subdiff(ctx.conv.phi(), &sub(&wp, &xp))?;
            for (v, slack) in &cands {
                let neg: Vec<f64> = v.iter().map(|c| -c).collect();
                let d = df.distance_to(v).max(dphi.distance_to(&neg));
                worst = worst.max(d - slack);
            }
        }
        out.push(
            rec.bound(worst.max(0.0), ctx.tol().membership)
                .note(format!(
                    "{} candidates × {} projections; {INCLUSION_NOTE}",
                    cands.len(),
                    p.indices.len()
                )),
        );
    }
    Ok(out)
}

fn segment_identity(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let rec = ctx.rec(CheckId::SegmentIdentity, None, Mode::Property);
    let Some(gauge) = ctx.conv.gauge() else {
        return Ok(vec![rec.skip(
            "hypothesis: φ subadditive and positively homogeneous not met",
        )]);
    };
    let grid = ctx.grid();
    let env = ctx.env();
    let f = ctx.conv.f();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.shuffle(&mut seeded_rng(
        ctx.seed,
        &format!("segment:{}", ctx.case.id),
    ));
    let divisible = |x: usize, w: usize| {
        let (a, b) = (grid.multi_index(x), grid.multi_index(w));
        a.iter()
            .zip(&b)
            .all(|(i, j)| (*i as isize - *j as isize) % 4 == 0)
    };
    let mut exact = Vec::new();
    let mut snapped = Vec::new();
    let mut trivial = Vec::new();
    for &x in order.iter().take(40 * SEGMENT_PAIRS) {
        if exact.len() == SEGMENT_PAIRS {
            break;
        }
        let p = ctx.conv.projection_set(x);
        if p.indices == [x] {
            if trivial.len() < SEGMENT_PAIRS {
                trivial.push((x, x));
            }
            continue;
        }
        match p.indices.iter().find(|&&w| w != x && divisible(x, w)) {
            Some(&w) => exact.push((x, w)),
            None => {
                if let Some(&w) = p.indices.iter().find(|&&w| w != x) {
                    snapped.push((x, w));
                }
            }
        }
    }
    // When every sampled point is its own projection the identity is
    // checked on the trivial segments w̄ = x̄.
    let all_trivial = exact.is_empty() && snapped.is_empty();
    if all_trivial {
        exact = trivial;
    }
    let n_snapped = SEGMENT_PAIRS.saturating_sub(exact.len()).min(snapped.len());
    let pairs: Vec<(usize, usize)> = exact
        .iter()
        .chain(snapped.iter().take(n_snapped))
        .copied()
        .collect();
    let lip = gauge.calmness_at_zero();
    let mut worst = 0.0f64;
    let mut worst_snap = 0.0f64;
    let mut lost = 0usize;
    for (k, &(x, w)) in pairs.iter().enumerate() {
        let (xp, wp) = (grid.point(x), grid.point(w));
        for t in T_VALUES {
            let xt: Vec<f64> = xp.iter().zip(&wp).map(|(a, b)| a + t * (b - a)).collect();
            let (i, _) = grid
                .snap(&xt)
                .ok_or_else(|| Error::InvalidValue("segment left the grid".into()))?;
            let snap = norm2(&sub(&grid.point(i), &xt));
            let want = (1.0 - t) * env.value(x).to_f64() + t * f.value(w).to_f64();
            let err = (env.value(i).to_f64() - want).abs();
            worst = worst.max(err - lip * snap);
            worst_snap = worst_snap.max(snap);
            // on exact pairs x_t is a grid point and w̄ must stay a projection
            if k < exact.len() && !ctx.conv.projection_set(i).contains(w) {
                lost += 1;
            }
        }
    }
    if pairs.is_empty() {
        return Ok(vec![rec.skip("no finite envelope values to sample")]);
    }
    let tol = ctx.tol().segment + if n_snapped > 0 { lip * ctx.h() } else { 0.0 };
    Ok(vec![rec
        .bound(worst, tol)
        .fail_if(lost > 0, format!("w̄ ∉ P(x_t) at {lost} on-grid segment points"))
        .note(format!(
            "{} (x̄, w̄) pairs, {} with on-grid x_t, t ∈ {{0.25, 0.5, 0.75, 1}}; max snap distance {worst_snap:e}",
            pairs.len(),
            pairs.len() - n_snapped
        ))
        .note(if all_trivial { "every sampled point lies in S₀, so w̄ = x̄" } else { "" })])
}

fn segment_subgradient(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let grid = ctx.grid();
    for &x in &ctx.points {
        if ctx.conv.gauge().is_none() {
            out.push(
                ctx.rec(
                    CheckId::SegmentSubgradient,
                    Some(x),
                    Mode::InclusionEvidenced,
                )
                .skip("hypothesis: φ subadditive and positively homogeneous not met"),
            );
            continue;
        }
        let (cands, mode) = ctx.candidates(x)?;
        let rec = ctx.rec(CheckId::SegmentSubgradient, Some(x), mode);
        if cands.is_empty() {
            out.push(
                rec.bound(0.0, 1e-9)
                    .note("no envelope subgradient certified: inclusion holds vacuously"),
            );
            continue;
        }
        let p = ctx.conv.projection_set(x);
        let xm = grid.multi_index(x);
        let mut worst = 0.0f64;
        let mut certified = 0;
        let mut skipped_t = Vec::new();
        for &w in &p.indices {
            let wm = grid.multi_index(w);
            let dphi = convex_subdiff(ctx.conv.phi(), &grid.diff(x, w))?;
            for t in T_VALUES {
                let idx: Option<Vec<usize>> = xm
                    .iter()
                    .zip(&wm)
                    .map(|(a, b)| {
                        let s = *a as f64 + t * (*b as f64 - *a as f64);
                        (s.fract() == 0.0).then_some(s as usize)
                    })
                    .collect();
                let Some(xt) = idx.map(|i| grid.flat(&i)).transpose()? else {
                    skipped_t.push(t);
                    continue;
                };
                for (v, allow) in &cands {
                    let slack = default_slack(ctx.h(), v) + allow;
                    let c = match frechet_certificate_with(ctx.env(), xt, v, 0.0, slack) {
                        Ok(c) => c,
                        Err(Error::BoundaryMargin(_)) => {
                            skipped_t.push(t);
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    certified += 1;
                    let neg: Vec<f64> = v.iter().map(|c| -c).collect();
                    let member = (dphi.distance_to(&neg) - allow - ctx.tol().membership).max(0.0);
                    worst = worst
                        .max(worst_violation(std::slice::from_ref(&c)))
                        .max(member);
                }
            }
        }
        skipped_t.sort_by(f64::total_cmp);
        skipped_t.dedup();
        out.push(rec.bound(worst, 1e-9).note(format!(
            "{certified} certificates along segments to {} projections; skipped t values (off-grid or at the edge): {skipped_t:?}",
            p.indices.len()
        )));
    }
    Ok(out)
}

fn ekeland_transfer(ctx: &Ctx, id: CheckId) -> Result<Vec<CheckRecord>> {
    let rec = ctx.rec(id, None, Mode::InclusionEvidenced);
    let grid = ctx.grid();
    let eta = ctx.tol().transfer_eta;
    let (mut tested, mut failed, mut uncertified, mut worst) = (0usize, 0usize, 0usize, 0.0f64);
    let mut first_fail = None;
    for &x in &ctx.s0 {
        if grid.edge_distance(x) < 9 {
            continue;
        }
        let cands: Vec<Vec<f64>> = if ctx.conv.gauge().is_some() {
            if ctx.case.constants.gap().is_none() {
                return Ok(vec![
                    rec.skip("no closed-form subgradients: declared m > ℓ not met")
                ]);
            }
            ctx.right_side(x)?.extreme_points()
        } else {
            match moreau_grad(&ctx.conv, x) {
                Ok(g) => vec![g],
                Err(Error::Ambiguous { .. }) => continue,
                Err(e) => return Err(e),
            }
        };
        for v in cands {
            let res = if id == CheckId::EkelandTransferPhi {
                transfer_to_phi(&ctx.conv, x, &v, 0.0, eta)
            } else {
                transfer_to_f(&ctx.conv, x, &v, 0.0, eta)
            };
            match res {
                Ok(t) => {
                    tested += 1;
                    worst = worst.max(transfer_violation(&t));
                    if !t.passed() || grid.dist(t.w_bar_index, t.w_tilde_index) >= eta {
                        failed += 1;
                        first_fail.get_or_insert((grid.point(x), v));
                    }
                }
                Err(Error::Precondition(_)) => uncertified += 1,
                Err(Error::BoundaryMargin(_)) => uncertified += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if tested == 0 {
        return Ok(vec![rec.skip(
            "no interior S₀ point with a certified envelope subgradient",
        )]);
    }
    let mut rec = rec.bound(failed as f64, 0.0).note(format!(
        "η = {eta}, ε = 0; {tested} transfers over S₀ points, {uncertified} candidates skipped (not certified on the envelope); worst certificate violation {worst:e}"
    ));
    if let Some((p, v)) = first_fail {
        rec = rec.note(format!("first failure at x̄ = {p:?}, x* = {v:?}"));
    }
    Ok(vec![rec])
}

fn transfer_violation(t: &Transfer) -> f64 {
    let c = worst_violation(std::slice::from_ref(&t.certificate));
    c.max(t.value_bound_slack.map_or(0.0, |s| -s))
}

fn projection_union(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let grid = ctx.grid();
    let h = ctx.h();
    for &x in &ctx.points {
        let xp = grid.point(x);
        // limiting subgradients with their membership allowance
        let (grads, mode): (Vec<(Vec<f64>, f64)>, Mode) = match ctx.env_spec() {
            Some(e) => (
                convex_subdiff(e, &xp)?
                    .extreme_points()
                    .into_iter()
                    .map(|g| (g, 0.0))
                    .collect(),
                Mode::InclusionExact,
            ),
            None => {
                let mut gs = Vec::new();
                for y in grid.ball(x, h) {
                    let p = ctx.conv.projection_set(y);
                    if !p.is_singleton() {
                        continue;
                    }
                    let s = convex_subdiff(ctx.conv.phi(), &grid.diff(y, p.indices[0]))?;
                    if let Some(g) = s.singleton(1e-12) {
                        let g: Vec<f64> = g.iter().map(|c| -c).collect();
                        let allow = 10.0 * h * (1.0 + norm2(&g));
                        gs.push((g, allow));
                    }
                }
                (gs, Mode::InclusionEvidenced)
            }
        };
        let rec = ctx.rec(CheckId::LimitingProjectionUnion, Some(x), mode);
        if grads.is_empty() {
            out.push(rec.skip("no neighbouring envelope gradient available"));
            continue;
        }
        let p = ctx.conv.projection_set(x);
        let mut sets = Vec::new();
        for &w in &p.indices {
            let wp = grid.point(w);
            sets.push((
                regular_subdiff(&ctx.case.f, &wp)?,
                convex_subdiff(ctx.conv.phi(), &sub(&wp, &xp))?,
            ));
        }
        let mut worst = 0.0f64;
        for (g, allow) in &grads {
            let neg: Vec<f64> = g.iter().map(|c| -c).collect();
            let best = sets
                .iter()
                .map(|(df, dphi)| df.distance_to(g).max(dphi.distance_to(&neg)))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best - allow);
        }
        out.push(
            rec.bound(worst.max(0.0), ctx.tol().membership)
                .note(format!(
                    "{} limiting subgradients against {} branches of P(x̄)",
                    grads.len(),
                    p.indices.len()
                )),
        );
    }
    Ok(out)
}

fn central_difference(env: &GridFn, x: usize) -> Option<Vec<f64>> {
    let grid = env.grid();
    let m = grid.multi_index(x);
    let mut out = Vec::new();
    for a in 0..grid.dim() {
        if m[a] == 0 || m[a] + 1 >= grid.axes()[a].n {
            return None;
        }
        let (mut lo, mut hi) = (m.clone(), m.clone());
        lo[a] -= 1;
        hi[a] += 1;
        let (fl, fh) = (env.eval(&lo).ok()?.to_f64(), env.eval(&hi).ok()?.to_f64());
        out.push((fh - fl) / (2.0 * grid.spacing(a)));
    }
    Some(out)
}

fn gradient_formula(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let prober = StrictDiffProber::new(ctx.grid());
    for &x in &ctx.points {
        let rec = ctx.rec(CheckId::GradientFormula, Some(x), Mode::Property);
        if ctx.conv.alpha().is_none() {
            out.push(rec.skip("hypothesis: φ differentiable (scaled squared norm) not met"));
            continue;
        }
        let grad = match moreau_grad(&ctx.conv, x) {
            Ok(g) => g,
            Err(Error::Ambiguous { count, .. }) => {
                out.push(rec.skip(format!(
                    "hypothesis: P(x̄) singleton not met ({count} minimizers)"
                )));
                continue;
            }
            Err(e) => return Err(e),
        };
        let Some(fd) = central_difference(ctx.env(), x) else {
            out.push(rec.skip("no room for a central difference"));
            continue;
        };
        let err = grad
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let tol = ctx.tol().gradient.max(ctx.tol().gradient_h * ctx.h());
        let rec = rec
            .bound(err, tol)
            .note(format!("2α(x̄ − w̄) = {grad:?} vs central difference {fd:?}"));
        let rec = match prober.probe(ctx.env(), x, &grad) {
            Ok(p) => rec
                .fail_if(
                    !p.verdict.passed(),
                    format!(
                        "strict-difference probe failed: worst quotient {:?}",
                        p.worst
                    ),
                )
                .note(format!(
                    "strict-difference quotient at radius h = {:e}",
                    p.worst[p.worst.len() - 1]
                )),
            Err(Error::BoundaryMargin(_)) => {
                rec.note("strict-difference probe skipped near the edge")
            }
            Err(e) => return Err(e),
        };
        out.push(rec);
    }
    Ok(out)
}

fn gradient_continuity(ctx: &Ctx) -> Result<Vec<CheckRecord>> {
    let rec = ctx.rec(CheckId::GradientContinuity, None, Mode::Property);
    if ctx.conv.alpha().is_none() {
        return Ok(vec![rec.skip("hypothesis: φ a scaled squared norm not met")]);
    }
    let grid = ctx.grid();
    let margin = grid.axes().iter().map(|a| a.n / 8).min().unwrap();
    let region = grid
        .interior_box(margin)
        .ok_or_else(|| Error::InsufficientData("grid too small".into()))?;
    let pts = region.flats(grid);
    let mut grads = vec![None; grid.len()];
    for &x in &pts {
        grads[x] = moreau_grad(&ctx.conv, x).ok();
    }
    let ambiguous = pts.iter().filter(|&&x| grads[x].is_none()).count();
    let mut worst = 0.0f64;
    for &x in &pts {
        let Some(gx) = &grads[x] else { continue };
        for y in neighbors(grid, x) {
            if let Some(gy) = &grads[y] {
                worst = worst.max(norm2(&sub(gx, gy)));
            }
        }
    }
    Ok(vec![rec.bound(worst, ctx.tol().continuity * ctx.h()).note(format!(
        "{} points in the interior box at margin {margin}; {ambiguous} with non-singleton P(x̄) excluded",
        pts.len()
    ))])
}

/// Probe grid for the equivalence sweep: spacing ≤ 0.01 in 1D and ≤ 0.02
/// in 2D, with 2D windows clipped to [−1.5, 1.5]² to bound the cost.
fn probe_grid(grid: &Grid) -> Result<Grid> {
    use crate::grid::Axis;
    let (step, clip) = if grid.dim() == 1 {
        (0.01, f64::INFINITY)
    } else {
        (0.02, 1.5)
    };
    let axes = grid
        .axes()
        .iter()
        .map(|a| {
            let (lo, hi) = (a.lo.max(-clip), a.hi.min(clip));
            let n = ((hi - lo) / step - 1e-9).ceil() as usize + 1;
            Axis::new(lo, hi, n)
        })
        .collect();
    Grid::new(axes)
}

pub(super) fn run_appendix(corpus: &[CheckCase], sel: &CheckSelector) -> Vec<CheckRecord> {
    let mut seen = BTreeSet::new();
    let mut specs = Vec::new();
    for case in corpus {
        let mut add = |label: &str, spec: &FuncSpec| {
            if spec.is_convex()
                && seen.insert((
                    serde_json::to_string(spec).unwrap_or_default(),
                    case.grid.to_string(),
                ))
            {
                specs.push((format!("{}/{label}", case.id), spec.clone(), case));
            }
        };
        add("f", &case.f);
        if let Some(e) = &case.envelope {
            add("envelope", e);
        }
    }
    let mut out = Vec::new();
    for (label, spec, case) in specs {
        match equivalence_sweep(&label, &spec, case) {
            Ok(recs) => out.extend(recs.into_iter().filter(|r| sel.contains(r.check))),
            Err(e) => {
                for id in [
                    CheckId::DifferentiabilityEquivalence,
                    CheckId::SubdiffContinuity,
                ] {
                    if sel.contains(id) {
                        out.push(
                            CheckRecord::new(id, &label, None, Mode::Property).error(e.to_string()),
                        );
                    }
                }
            }
        }
    }
    out
}

fn equivalence_sweep(label: &str, spec: &FuncSpec, case: &CheckCase) -> Result<Vec<CheckRecord>> {
    let grid = probe_grid(&case.grid)?;
    let h = grid.h_max();
    let g = spec.sample(&grid)?;
    let vals = g.to_f64_vec();
    let subs: Vec<Option<VecSet>> = (0..grid.len())
        .map(|i| {
            if vals[i].is_finite() {
                convex_subdiff(spec, &grid.point(i)).ok()
            } else {
                None
            }
        })
        .collect();
    let grads: Vec<Option<Vec<f64>>> = subs
        .iter()
        .map(|s| s.as_ref().and_then(|s| s.singleton(1e-12)))
        .collect();
    let prober = StrictDiffProber::new(&grid);
    let tol = crate::subdiff::default_probe_tolerance(h);
    let interior = grid
        .interior_box(8)
        .ok_or_else(|| Error::InsufficientData("probe grid too small".into()))?;
    let (mut tested, mut singletons, mut excluded, mut excluded_fail, mut outside) =
        (0, 0, 0, 0, 0);
    let mut disagreements = Vec::new();
    let mut passing = vec![false; grid.len()];
    for x in interior.flats(&grid) {
        let Some(s) = &subs[x] else {
            outside += 1;
            continue;
        };
        tested += 1;
        match &grads[x] {
            Some(v) => {
                singletons += 1;
                let near_kink =
                    grid.ball(x, 2.0 * h)
                        .into_iter()
                        .any(|y| match (&subs[y], &grads[y]) {
                            (Some(_), None) => true,
                            (Some(_), Some(gy)) => norm2(&sub(gy, v)) > 10.0 * h,
                            // the edge of dom f is a kink of the extended-valued function
                            (None, _) => true,
                        });
                let pass = prober.probe_values(&vals, x, v, tol)?.verdict.passed();
                if near_kink {
                    excluded += 1;
                    excluded_fail += usize::from(!pass);
                } else {
                    passing[x] = pass;
                    if !pass {
                        disagreements.push(grid.point(x));
                    }
                }
            }
            None => {
                let mut cands = s.extreme_points();
                cands.extend(s.centroid());
                for v in cands {
                    if prober.probe_values(&vals, x, &v, tol)?.verdict.passed() {
                        disagreements.push(grid.point(x));
                        break;
                    }
                }
            }
        }
    }
    let eq = CheckRecord::new(CheckId::DifferentiabilityEquivalence, label, None, Mode::Property)
        .bound(disagreements.len() as f64, 0.0)
        .note(format!(
            "probe grid {grid}; {tested} points tested ({singletons} singleton), {outside} outside dom f; {excluded} singleton points within 2h of a kink excluded ({excluded_fail} of them failed the probe)"
        ))
        .note(if disagreements.is_empty() {
            String::new()
        } else {
            format!("first disagreement at {:?}", disagreements[0])
        });
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    for x in 0..grid.len() {
        if !passing[x] {
            continue;
        }
        for y in neighbors(&grid, x) {
            if y > x && passing[y] {
                pairs += 1;
                let (a, b) = (grads[x].as_ref().unwrap(), grads[y].as_ref().unwrap());
                worst = worst.max(VecSet::point(a).hausdorff(&VecSet::point(b))?);
            }
        }
    }
    let cont = CheckRecord::new(CheckId::SubdiffContinuity, label, None, Mode::Property)
        .bound(worst, case.tolerances.continuity * h)
        .note(format!("{pairs} adjacent pairs of probe-passing points; Hausdorff distance between subdifferentials"));
    Ok(vec![eq, cont])
}
