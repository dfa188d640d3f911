//! The infimal-convolution engine.
//!
//! `(f ⊕ φ)(x) = min_w f(w) + φ(w − x)` over grid points `w`. The kernel
//! `φ(k·h)` is tabulated once per case for every signed index offset `k`, so
//! all paths that evaluate `φ(w − x)` see bit-identical values.

use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::funcspec::{FuncSpec, SetSpec};
use crate::gauge::GaugeSet;
use crate::grid::{Grid, GridFn};
use crate::seed::seeded_rng;

/// Default cap on `#grid²` evaluations for the brute-force path.
pub const DEFAULT_BUDGET: u128 = 1 << 34;

/// Source of the function `f`.
#[derive(Clone, Debug)]
pub enum FSource {
    Spec(FuncSpec),
    Grid(GridFn),
}

/// An infimal-convolution problem on a fixed grid.
#[derive(Debug)]
pub struct ConvCase {
    f_spec: Option<FuncSpec>,
    f: GridFn,
    phi: FuncSpec,
    kernel: Vec<f64>,
    rows: usize,
    cols: usize,
    tol_argmin: Option<f64>,
    budget: u128,
    envelope: OnceLock<GridFn>,
}

impl ConvCase {
    pub fn new(f: FSource, phi: FuncSpec, grid: &Grid) -> Result<Self> {
        let (f_spec, f) = match f {
            FSource::Spec(s) => {
                s.validate()?;
                let g = s.sample(grid)?;
                (Some(s), g)
            }
            FSource::Grid(g) => {
                if g.grid() != grid {
                    return Err(Error::Shape(
                        "grid function lives on a different grid".into(),
                    ));
                }
                (None, g)
            }
        };
        phi.validate()?;
        if let Some(d) = phi.dim() {
            if d != grid.dim() {
                return Err(Error::Shape(format!("{d}D φ on a {}D grid", grid.dim())));
            }
        }
        let (rows, cols) = match grid.dim() {
            1 => (1, grid.axes()[0].n),
            _ => (grid.axes()[0].n, grid.axes()[1].n),
        };
        let (kr, kc) = (2 * rows - 1, 2 * cols - 1);
        let mut kernel = Vec::with_capacity(kr * kc);
        for a in 0..kr {
            for b in 0..kc {
                let k1 = b as f64 - (cols - 1) as f64;
                let off: Vec<f64> = if grid.dim() == 1 {
                    vec![k1 * grid.spacing(0)]
                } else {
                    let k0 = a as f64 - (rows - 1) as f64;
                    vec![k0 * grid.spacing(0), k1 * grid.spacing(1)]
                };
                match phi.eval_unchecked(&off) {
                    ExtReal::Finite(v) if v >= 0.0 => kernel.push(v),
                    ExtReal::Finite(v) => {
                        return Err(Error::InvalidSpec(format!(
                            "φ must be nonnegative, φ({off:?}) = {v}"
                        )))
                    }
                    ExtReal::PosInf => {
                        return Err(Error::InvalidSpec(format!(
                            "φ must be real-valued, φ({off:?}) = +inf"
                        )))
                    }
                }
            }
        }
        Ok(ConvCase {
            f_spec,
            f,
            phi,
            kernel,
            rows,
            cols,
            tol_argmin: None,
            budget: DEFAULT_BUDGET,
            envelope: OnceLock::new(),
        })
    }

    pub fn from_spec(f: FuncSpec, phi: FuncSpec, grid: &Grid) -> Result<Self> {
        ConvCase::new(FSource::Spec(f), phi, grid)
    }

    pub fn from_grid(f: GridFn, phi: FuncSpec) -> Result<Self> {
        let grid = f.grid().clone();
        ConvCase::new(FSource::Grid(f), phi, &grid)
    }

    pub fn with_tol_argmin(mut self, tol: f64) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::InvalidValue(format!(
                "tol_argmin must be positive, got {tol}"
            )));
        }
        self.tol_argmin = Some(tol);
        Ok(self)
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }

    pub fn f(&self) -> &GridFn {
        &self.f
    }

    pub fn f_spec(&self) -> Option<&FuncSpec> {
        self.f_spec.as_ref()
    }

    pub fn phi(&self) -> &FuncSpec {
        &self.phi
    }

    /// Dynamics set when φ is a gauge.
    pub fn gauge(&self) -> Option<&GaugeSet> {
        match &self.phi {
            FuncSpec::Gauge { set } => Some(set),
            _ => None,
        }
    }

    /// Coefficient when φ is `alpha |·|²`.
    pub fn alpha(&self) -> Option<f64> {
        match &self.phi {
            FuncSpec::Sq { alpha } => Some(*alpha),
            _ => None,
        }
    }

    fn rc(&self, flat: usize) -> (usize, usize) {
        if self.rows == 1 {
            (0, flat)
        } else {
            (flat / self.cols, flat % self.cols)
        }
    }

    fn kidx(&self, w: usize, x: usize) -> usize {
        let (wr, wc) = self.rc(w);
        let (xr, xc) = self.rc(x);
        (wr + self.rows - 1 - xr) * (2 * self.cols - 1) + (wc + self.cols - 1 - xc)
    }

    /// `φ(w − x)` for grid points `w`, `x`, read from the kernel table.
    pub fn phi_between(&self, w: usize, x: usize) -> f64 {
        self.kernel[self.kidx(w, x)]
    }

    /// The kernel `φ(k·h)` as a function on the offset grid.
    pub fn kernel_fn(&self) -> Result<GridFn> {
        GridFn::from_f64(self.grid().offset_grid()?, &self.kernel)
    }

    /// Offset-grid index of `w − x`.
    pub fn offset_index(&self, w: usize, x: usize) -> usize {
        self.kidx(w, x)
    }

    /// Tolerance for argmin membership at a given minimum value.
    pub fn tol_at(&self, min_value: f64) -> f64 {
        self.tol_argmin.unwrap_or(1e-9 * (min_value.abs() + 1.0))
    }

    /// Brute-force envelope, computed once and cached.
    pub fn envelope(&self) -> Result<&GridFn> {
        if let Some(e) = self.envelope.get() {
            return Ok(e);
        }
        let e = self.inf_conv_brute()?;
        Ok(self.envelope.get_or_init(|| e))
    }

    /// `min_w f(w) + φ(w − x)` at every grid point `x`.
    pub fn inf_conv_brute(&self) -> Result<GridFn> {
        let n = self.grid().len() as u128;
        if n * n > self.budget {
            return Err(Error::Budget {
                required: n * n,
                budget: self.budget,
            });
        }
        let fv = self.f.to_f64_vec();
        let sites: Vec<usize> = (0..fv.len()).filter(|&i| fv[i].is_finite()).collect();
        let (rows, cols) = (self.rows, self.cols);
        let kc = 2 * cols - 1;
        let row_live: Vec<bool> = (0..rows)
            .map(|r| fv[r * cols..(r + 1) * cols].iter().any(|v| v.is_finite()))
            .collect();
        let sparse = sites.len() * 4 < fv.len();
        let values: Vec<f64> = (0..fv.len())
            .into_par_iter()
            .map(|x| {
                if sparse {
                    return sites
                        .iter()
                        .map(|&w| fv[w] + self.phi_between(w, x))
                        .fold(f64::INFINITY, f64::min);
                }
                let (xr, xc) = self.rc(x);
                let mut best = f64::INFINITY;
                for wr in 0..rows {
                    if !row_live[wr] {
                        continue;
                    }
                    let k0 = (wr + rows - 1 - xr) * kc + (cols - 1 - xc);
                    best = best.min(row_min(
                        &fv[wr * cols..(wr + 1) * cols],
                        &self.kernel[k0..k0 + cols],
                    ));
                }
                best
            })
            .collect();
        GridFn::from_f64(self.grid().clone(), &values)
    }

    /// Objective `w ↦ f(w) + φ(w − x)` over the whole grid.
    pub fn objective(&self, x: usize) -> Vec<f64> {
        (0..self.grid().len())
            .map(|w| self.f.value(w).to_f64() + self.phi_between(w, x))
            .collect()
    }

    /// All grid minimizers of `f(w) + φ(w − x)` within `tol_argmin`.
    pub fn projection_set(&self, x: usize) -> ArgminSet {
        let obj = self.objective(x);
        let min = obj.iter().cloned().fold(f64::INFINITY, f64::min);
        let tol = self.tol_at(min);
        let indices: Vec<usize> = (0..obj.len()).filter(|&w| obj[w] <= min + tol).collect();
        ArgminSet {
            x: self.grid().point(x),
            minimizers: indices.iter().map(|&w| self.grid().point(w)).collect(),
            min_value: ExtReal::new(min).unwrap_or(ExtReal::PosInf),
            indices,
            tol,
        }
    }

    /// Grid points of `P(x; η) = { w : f(w) + φ(w − x) < (f ⊕ φ)(x) + η }`.
    pub fn near_projection_set(&self, x: usize, eta: f64) -> Vec<usize> {
        let obj = self.objective(x);
        let min = obj.iter().cloned().fold(f64::INFINITY, f64::min);
        (0..obj.len()).filter(|&w| obj[w] < min + eta).collect()
    }

    /// Grid points where the envelope coincides with `f` (up to tolerance).
    pub fn s0_set(&self) -> Result<Vec<usize>> {
        let env = self.envelope()?;
        Ok((0..self.grid().len())
            .filter(|&i| match self.f.value(i) {
                ExtReal::Finite(fv) => (env.value(i).to_f64() - fv).abs() <= self.tol_at(fv),
                ExtReal::PosInf => false,
            })
            .collect())
    }

    pub fn in_s0(&self, x: usize) -> bool {
        match self.f.value(x) {
            ExtReal::Finite(fv) => {
                let min = self.objective(x).into_iter().fold(f64::INFINITY, f64::min);
                (min - fv).abs() <= self.tol_at(fv)
            }
            ExtReal::PosInf => false,
        }
    }

    /// Builds seeded minimizing sequences at `x_bar ∈ S₀` with value gaps
    /// `1/k` and reports whether they all end at the unique minimizer.
    /// With `constants = Some((ℓ, m))`, `m > ℓ`, also checks
    /// `|w_k − x̄| <= gap_k / (m − ℓ)` at every step.
    pub fn wellposed_probe(
        &self,
        x_bar: usize,
        trials: usize,
        seed: u64,
        constants: Option<(f64, f64)>,
    ) -> Result<WellPosednessReport> {
        if !self.in_s0(x_bar) {
            return Err(Error::Precondition(format!(
                "{:?} is not in the coincidence set S0",
                self.grid().point(x_bar)
            )));
        }
        let obj = self.objective(x_bar);
        let mut order: Vec<usize> = (0..obj.len()).filter(|&w| obj[w].is_finite()).collect();
        order.sort_by(|&a, &b| obj[a].partial_cmp(&obj[b]).unwrap().then(a.cmp(&b)));
        let min = obj[order[0]];
        let tol = self.tol_at(min);
        let p_len = order.partition_point(|&w| obj[w] <= min + tol);
        let singleton = p_len == 1;
        let w_bar = order[0];
        let second_gap = order.get(p_len).map(|&w| obj[w] - min);
        let steps = match second_gap {
            Some(g) if g > 0.0 => ((1.0 / g).ceil() as usize + 1).min(10_000),
            _ => 1,
        };
        let grid = self.grid();
        let mut rng = seeded_rng(seed, &format!("wellposed:{x_bar}"));
        let mut max_terminal: f64 = 0.0;
        let mut bound_violations = 0usize;
        let mut worst_bound_slack = f64::INFINITY;
        let bound = constants.filter(|(l, m)| m > l);
        for _ in 0..trials {
            let mut last = w_bar;
            for k in 1..=steps {
                let gap = 1.0 / k as f64;
                let len = order.partition_point(|&w| obj[w] <= min + gap);
                last = order[rng.random_range(0..len)];
                if let Some((l, m)) = bound {
                    let slack = gap / (m - l) + 1e-9 - grid.dist(last, x_bar);
                    worst_bound_slack = worst_bound_slack.min(slack);
                    if slack < 0.0 {
                        bound_violations += 1;
                    }
                }
            }
            max_terminal = max_terminal.max(grid.dist(last, w_bar));
        }
        Ok(WellPosednessReport {
            point: grid.point(x_bar),
            singleton,
            minimizer: singleton.then(|| grid.point(w_bar)),
            sequences: trials,
            steps,
            max_terminal_distance: max_terminal,
            constants: bound,
            bound_violations,
            worst_bound_slack: bound.map(|_| worst_bound_slack),
            well_posed: singleton && max_terminal == 0.0,
        })
    }
}

/// Minimum of `f[i] + k[i]`, with independent accumulators so the loop
/// vectorizes.
fn row_min(f: &[f64], k: &[f64]) -> f64 {
    const L: usize = 8;
    let mut acc = [f64::INFINITY; L];
    let chunks = f.len() / L;
    for c in 0..chunks {
        let (fs, ks) = (&f[c * L..c * L + L], &k[c * L..c * L + L]);
        for l in 0..L {
            let v = fs[l] + ks[l];
            acc[l] = if v < acc[l] { v } else { acc[l] };
        }
    }
    let mut best = acc.iter().cloned().fold(f64::INFINITY, f64::min);
    for i in chunks * L..f.len() {
        best = best.min(f[i] + k[i]);
    }
    best
}

/// Lower envelope of the parabolas `f[p] + c (q − p)²` sampled at every
/// integer `q`; `+inf` sites are skipped.
fn parabola_envelope(f: &[f64], c: f64, out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for q in 0..f.len() {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let Some(&p) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let s = (f[q] - f[p]) / (2.0 * c * (q - p) as f64) + 0.5 * (q + p) as f64;
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = f[v[k]] + c * d * d;
    }
}

/// Moreau envelope `min_w f(w) + α|w − x|²` by separable lower envelopes of
/// parabolas, one linear pass per axis.
pub fn moreau_fast(f: &GridFn, alpha: f64) -> Result<GridFn> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidValue(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let grid = f.grid();
    let vals = f.to_f64_vec();
    let out = if grid.dim() == 1 {
        let mut out = vec![0.0; vals.len()];
        let c = alpha * grid.spacing(0).powi(2);
        parabola_envelope(&vals, c, &mut out, &mut Vec::new(), &mut Vec::new());
        out
    } else {
        let (n0, n1) = (grid.axes()[0].n, grid.axes()[1].n);
        let c1 = alpha * grid.spacing(1).powi(2);
        let c0 = alpha * grid.spacing(0).powi(2);
        let mut tmp = vec![0.0; vals.len()];
        tmp.par_chunks_mut(n1)
            .zip(vals.par_chunks(n1))
            .for_each_init(
                || (Vec::new(), Vec::new()),
                |(v, z), (o, row)| parabola_envelope(row, c1, o, v, z),
            );
        let mut cols_out = vec![0.0; vals.len()];
        cols_out.par_chunks_mut(n0).enumerate().for_each_init(
            || (Vec::new(), Vec::new(), Vec::new()),
            |(v, z, col), (j, o)| {
                col.clear();
                col.extend((0..n0).map(|i| tmp[i * n1 + j]));
                parabola_envelope(col, c0, o, v, z);
            },
        );
        let mut out = vec![0.0; vals.len()];
        for j in 0..n1 {
            for i in 0..n0 {
                out[i * n1 + j] = cols_out[j * n0 + i];
            }
        }
        out
    };
    GridFn::from_f64(grid.clone(), &out)
}

/// Minimal time function `T_F(x; Ω) = min_{w ∈ Ω} ρ_F(w − x)`.
pub fn min_time(target: &SetSpec, dynamics: &GaugeSet, grid: &Grid) -> Result<GridFn> {
    ConvCase::from_spec(
        FuncSpec::indicator(target.clone()),
        FuncSpec::gauge(dynamics.clone()),
        grid,
    )?
    .inf_conv_brute()
}

/// Euclidean distance function to `Ω`.
pub fn distance_fn(target: &SetSpec, grid: &Grid) -> Result<GridFn> {
    min_time(target, &GaugeSet::unit_ball(grid.dim()), grid)
}

/// Grid minimizers of `w ↦ f(w) + φ(w − x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArgminSet {
    pub x: Vec<f64>,
    pub minimizers: Vec<Vec<f64>>,
    pub min_value: ExtReal,
    #[serde(skip)]
    pub indices: Vec<usize>,
    #[serde(skip)]
    pub tol: f64,
}

impl ArgminSet {
    pub fn is_singleton(&self) -> bool {
        self.indices.len() == 1
    }

    pub fn contains(&self, w: usize) -> bool {
        self.indices.binary_search(&w).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WellPosednessReport {
    pub point: Vec<f64>,
    pub singleton: bool,
    pub minimizer: Option<Vec<f64>>,
    pub sequences: usize,
    pub steps: usize,
    pub max_terminal_distance: f64,
    pub constants: Option<(f64, f64)>,
    pub bound_violations: usize,
    pub worst_bound_slack: Option<f64>,
    pub well_posed: bool,
}
