//! Uniform box grids in dimension 1 or 2 and extended-real functions sampled
//! on them.
//!
//! Points are addressed by index. Coordinates are always `lo + i * h` with
//! `h` computed once per axis, and no code compares points through float
//! equality of their coordinates.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::ExtReal;

/// Default cap on the total number of grid points.
pub const DEFAULT_POINT_CAP: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Axis { lo, hi, n }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Axis>", into = "Vec<Axis>")]
pub struct Grid {
    axes: Vec<Axis>,
    h: Vec<f64>,
    len: usize,
}

impl TryFrom<Vec<Axis>> for Grid {
    type Error = Error;

    fn try_from(axes: Vec<Axis>) -> Result<Self> {
        Grid::new(axes)
    }
}

impl From<Grid> for Vec<Axis> {
    fn from(g: Grid) -> Self {
        g.axes
    }
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        Self::with_cap(axes, DEFAULT_POINT_CAP)
    }

    pub fn with_cap(axes: Vec<Axis>, cap: usize) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {}",
                axes.len()
            )));
        }
        let mut len = 1usize;
        for a in &axes {
            if !(a.lo.is_finite() && a.hi.is_finite()) || a.lo >= a.hi {
                return Err(Error::InvalidGrid(format!(
                    "axis bounds must satisfy lo < hi, got [{}, {}]",
                    a.lo, a.hi
                )));
            }
            if a.n < 2 {
                return Err(Error::InvalidGrid(format!(
                    "need n >= 2 per axis, got {}",
                    a.n
                )));
            }
            len = len
                .checked_mul(a.n)
                .filter(|&l| l <= cap)
                .ok_or_else(|| Error::InvalidGrid(format!("more than {cap} grid points")))?;
        }
        let h = axes
            .iter()
            .map(|a| (a.hi - a.lo) / (a.n - 1) as f64)
            .collect();
        Ok(Grid { axes, h, len })
    }

    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Grid::new(vec![Axis::new(lo, hi, n)])
    }

    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Grid::new(vec![Axis::new(lo, hi, n), Axis::new(lo, hi, n)])
    }

    /// Parses `lo:hi:n` or `lo:hi:n,lo:hi:n`.
    pub fn parse(spec: &str) -> Result<Self> {
        let axes = spec
            .split(',')
            .map(|part| {
                let fields: Vec<&str> = part.trim().split(':').collect();
                if fields.len() != 3 {
                    return Err(Error::InvalidGrid(format!(
                        "expected lo:hi:n, got {part:?}"
                    )));
                }
                let bad = |what: &str| Error::InvalidGrid(format!("bad {what} in {part:?}"));
                let lo: f64 = fields[0].trim().parse().map_err(|_| bad("lo"))?;
                let hi: f64 = fields[1].trim().parse().map_err(|_| bad("hi"))?;
                let n: usize = fields[2].trim().parse().map_err(|_| bad("n"))?;
                Ok(Axis::new(lo, hi, n))
            })
            .collect::<Result<Vec<_>>>()?;
        Grid::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    /// Largest spacing over the axes.
    pub fn h_max(&self) -> f64 {
        self.h.iter().cloned().fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        self.h.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.axes[axis].lo + i as f64 * self.h[axis]
    }

    /// Row-major flattening; axis 0 varies slowest.
    pub fn flat(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.dim() || index.iter().zip(&self.axes).any(|(&i, a)| i >= a.n) {
            return Err(Error::OutOfBounds {
                index: index.to_vec(),
                shape: self.shape(),
            });
        }
        Ok(match self.dim() {
            1 => index[0],
            _ => index[0] * self.axes[1].n + index[1],
        })
    }

    /// Inverse of [`Grid::flat`]. In 1D the second component is 0.
    pub fn unflat(&self, flat: usize) -> [usize; 2] {
        match self.dim() {
            1 => [flat, 0],
            _ => [flat / self.axes[1].n, flat % self.axes[1].n],
        }
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let m = self.unflat(flat);
        m[..self.dim()].to_vec()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let m = self.unflat(flat);
        (0..self.dim()).map(|a| self.coord(a, m[a])).collect()
    }

    /// Nearest grid point together with the per-axis snapping distance.
    /// Returns `None` when a coordinate lies more than `h/2` outside the box.
    pub fn snap(&self, point: &[f64]) -> Option<(usize, f64)> {
        if point.len() != self.dim() {
            return None;
        }
        let mut idx = [0usize; 2];
        let mut err: f64 = 0.0;
        for (a, &x) in point.iter().enumerate() {
            let h = self.h[a];
            let t = ((x - self.axes[a].lo) / h).round();
            if t < 0.0 || t > (self.axes[a].n - 1) as f64 {
                return None;
            }
            let i = t as usize;
            let d = (x - self.coord(a, i)).abs();
            if d > 0.5 * h * (1.0 + 1e-9) {
                return None;
            }
            idx[a] = i;
            err = err.max(d / h);
        }
        let flat = self.flat(&idx[..self.dim()]).ok()?;
        Some((flat, err))
    }

    /// Index of an exact grid point, allowing float noise of `1e-9 * h`.
    pub fn locate(&self, point: &[f64]) -> Result<usize> {
        match self.snap(point) {
            Some((flat, err)) if err <= 1e-9 => Ok(flat),
            _ => Err(Error::Shape(format!("{point:?} is not a grid point"))),
        }
    }

    /// Offsets `w - x` between grid points, as a grid over signed index
    /// differences `-(n-1) ..= n-1` per axis, with coordinates `k * h`.
    pub fn offset_grid(&self) -> Result<Grid> {
        let axes = self
            .axes
            .iter()
            .zip(&self.h)
            .map(|(a, &h)| {
                let m = (a.n - 1) as f64;
                Axis::new(-m * h, m * h, 2 * a.n - 1)
            })
            .collect();
        Grid::with_cap(axes, usize::MAX)
    }

    /// Distance (in index steps) from a point to the nearest grid edge.
    pub fn edge_distance(&self, flat: usize) -> usize {
        let m = self.unflat(flat);
        (0..self.dim())
            .map(|a| m[a].min(self.axes[a].n - 1 - m[a]))
            .min()
            .unwrap_or(0)
    }

    /// Flat indices of grid points within Euclidean distance `radius` of
    /// `center` (a grid point).
    pub fn ball(&self, center: usize, radius: f64) -> Vec<usize> {
        let c = self.unflat(center);
        let d = self.dim();
        let reach: Vec<usize> = (0..d)
            .map(|a| (radius / self.h[a] * (1.0 + 1e-12)).floor() as usize)
            .collect();
        let range = |a: usize| {
            let lo = c[a].saturating_sub(reach[a]);
            let hi = (c[a] + reach[a]).min(self.axes[a].n - 1);
            lo..=hi
        };
        let r2 = radius * radius * (1.0 + 1e-12);
        let mut out = Vec::new();
        if d == 1 {
            for i in range(0) {
                let dx = (i as f64 - c[0] as f64) * self.h[0];
                if dx * dx <= r2 {
                    out.push(i);
                }
            }
        } else {
            for i in range(0) {
                let dx = (i as f64 - c[0] as f64) * self.h[0];
                for j in range(1) {
                    let dy = (j as f64 - c[1] as f64) * self.h[1];
                    if dx * dx + dy * dy <= r2 {
                        out.push(i * self.axes[1].n + j);
                    }
                }
            }
        }
        out
    }

    /// Euclidean distance between two grid points, from index differences.
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        let (ia, ib) = (self.unflat(a), self.unflat(b));
        (0..self.dim())
            .map(|k| {
                let d = (ia[k] as f64 - ib[k] as f64) * self.h[k];
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Difference vector `b - a` between two grid points.
    pub fn diff(&self, a: usize, b: usize) -> Vec<f64> {
        let (ia, ib) = (self.unflat(a), self.unflat(b));
        (0..self.dim())
            .map(|k| (ib[k] as f64 - ia[k] as f64) * self.h[k])
            .collect()
    }

    pub fn full_box(&self) -> IndexBox {
        IndexBox {
            lo: vec![0; self.dim()],
            hi: self.axes.iter().map(|a| a.n - 1).collect(),
        }
    }

    /// Box of indices at least `margin` steps away from every edge.
    pub fn interior_box(&self, margin: usize) -> Option<IndexBox> {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for a in &self.axes {
            if a.n < 2 * margin + 1 {
                return None;
            }
            lo.push(margin);
            hi.push(a.n - 1 - margin);
        }
        Some(IndexBox { lo, hi })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .axes
            .iter()
            .map(|a| format!("{}:{}:{}", a.lo, a.hi, a.n))
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Inclusive box of multi-indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexBox {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl IndexBox {
    pub fn contains(&self, grid: &Grid, flat: usize) -> bool {
        let m = grid.unflat(flat);
        (0..grid.dim()).all(|a| m[a] >= self.lo[a] && m[a] <= self.hi[a])
    }

    pub fn is_subset_of(&self, other: &IndexBox) -> bool {
        self.lo.iter().zip(&other.lo).all(|(a, b)| a >= b)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| a <= b)
    }

    pub fn flats(&self, grid: &Grid) -> Vec<usize> {
        (0..grid.len())
            .filter(|&f| self.contains(grid, f))
            .collect()
    }
}

/// An extended-real-valued function sampled on a [`Grid`]. Immutable.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    grid: Grid,
    values: Vec<ExtReal>,
}

impl GridFn {
    pub fn new(grid: Grid, values: Vec<ExtReal>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::EmptyDomain);
        }
        Ok(GridFn { grid, values })
    }

    /// Builds from floats, mapping `f64::INFINITY` to `+inf`.
    pub fn from_f64(grid: Grid, values: &[f64]) -> Result<Self> {
        let values = values
            .iter()
            .map(|&v| ExtReal::new(v))
            .collect::<Result<_>>()?;
        GridFn::new(grid, values)
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let vals: Vec<f64> = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        GridFn::from_f64(grid, &vals)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn value(&self, flat: usize) -> ExtReal {
        self.values[flat]
    }

    pub fn eval(&self, index: &[usize]) -> Result<ExtReal> {
        Ok(self.values[self.grid.flat(index)?])
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.to_f64()).collect()
    }

    pub fn effective_domain(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.values[i].is_finite())
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .filter_map(|v| v.finite())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = match self.grid.dim() {
            1 => vec!["x".into(), "value".into()],
            _ => vec!["x0".into(), "x1".into(), "value".into()],
        };
        w.write_record(&header)?;
        for (i, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.grid.point(i).iter().map(|c| c.to_string()).collect();
            row.push(v.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Reads the CSV layout written by [`GridFn::write_csv`], recovering the
    /// grid from the coordinate columns.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let ncols = r.headers()?.len();
        if !(2..=3).contains(&ncols) {
            return Err(Error::Shape(format!(
                "expected 2 or 3 columns, got {ncols}"
            )));
        }
        let dim = ncols - 1;
        let mut coords: Vec<Vec<f64>> = Vec::new();
        let mut vals = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let c: Vec<f64> = (0..dim)
                .map(|k| {
                    rec[k]
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidValue(format!("bad coordinate {:?}", &rec[k])))
                })
                .collect::<Result<_>>()?;
            coords.push(c);
            vals.push(rec[dim].parse::<ExtReal>()?);
        }
        let axes: Vec<Axis> = (0..dim)
            .map(|k| {
                let mut xs: Vec<f64> = coords.iter().map(|c| c[k]).collect();
                xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                xs.dedup();
                Axis::new(xs[0], xs[xs.len() - 1], xs.len())
            })
            .collect();
        let grid = Grid::new(axes)?;
        let mut values = vec![ExtReal::PosInf; grid.len()];
        let mut seen = vec![false; grid.len()];
        for (c, v) in coords.iter().zip(vals) {
            let flat = grid.locate(c)?;
            values[flat] = v;
            seen[flat] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Shape("csv does not cover every grid point".into()));
        }
        GridFn::new(grid, values)
    }
}

/// Neighbor offsets used for discrete Lipschitz quotients: axis and diagonal
/// steps, each pair visited once.
fn forward_stencil(dim: usize) -> &'static [(isize, isize)] {
    if dim == 1 {
        &[(1, 0)]
    } else {
        &[(1, 0), (0, 1), (1, 1), (1, -1)]
    }
}

fn step(grid: &Grid, flat: usize, d: (isize, isize)) -> Option<usize> {
    let m = grid.unflat(flat);
    let shape = grid.shape();
    let i = m[0] as isize + d.0;
    if i < 0 || i >= shape[0] as isize {
        return None;
    }
    if grid.dim() == 1 {
        return Some(i as usize);
    }
    let j = m[1] as isize + d.1;
    if j < 0 || j >= shape[1] as isize {
        return None;
    }
    Some(i as usize * shape[1] + j as usize)
}

/// All neighbors (axis and diagonal) of a grid point.
pub fn neighbors(grid: &Grid, flat: usize) -> Vec<usize> {
    forward_stencil(grid.dim())
        .iter()
        .flat_map(|&(a, b)| [(a, b), (-a, -b)])
        .filter_map(|d| step(grid, flat, d))
        .collect()
}

/// Largest `|g(x) - g(w)| / |x - w|` over adjacent finite-valued pairs inside
/// `region`.
pub fn lipschitz_estimate(g: &GridFn, region: &IndexBox) -> Result<f64> {
    let grid = g.grid();
    let inside: Vec<usize> = region
        .flats(grid)
        .into_iter()
        .filter(|&i| g.value(i).is_finite())
        .collect();
    if inside.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} finite points in region",
            inside.len()
        )));
    }
    let mut best: Option<f64> = None;
    for &i in &inside {
        let gi = g.value(i).to_f64();
        for &d in forward_stencil(grid.dim()) {
            if let Some(j) = step(grid, i, d) {
                if !region.contains(grid, j) {
                    continue;
                }
                if let Some(gj) = g.value(j).finite() {
                    let q = (gi - gj).abs() / grid.dist(i, j);
                    best = Some(best.map_or(q, |b: f64| b.max(q)));
                }
            }
        }
    }
    best.ok_or_else(|| Error::InsufficientData("no adjacent finite pair in region".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LscViolation {
    pub index: Vec<usize>,
    pub value: ExtReal,
    pub neighbor_max: ExtReal,
    #[serde(with = "crate::extreal::serde_f64")]
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LscReport {
    pub slack: f64,
    pub violations: Vec<LscViolation>,
}

impl LscReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lower-semicontinuity spot check with the default slack constant `C = 1`.
pub fn lsc_spot_check(g: &GridFn) -> LscReport {
    lsc_spot_check_with(g, 1.0)
}

/// Flags isolated upward spikes: a point is a violation when its value
/// exceeds every neighbor value by more than `c * h`. On a grid this is the
/// only pattern that unambiguously breaks `f(x) <= liminf f(y)`; a jump
/// between two adjacent points cannot be attributed to either side.
pub fn lsc_spot_check_with(g: &GridFn, c: f64) -> LscReport {
    let grid = g.grid();
    let slack = c * grid.h_min();
    let mut violations = Vec::new();
    for i in 0..grid.len() {
        let nb = neighbors(grid, i);
        if nb.is_empty() {
            continue;
        }
        let nmax =
            nb.iter()
                .map(|&j| g.value(j))
                .fold(ExtReal::Finite(f64::NEG_INFINITY), |a, b| {
                    if b > a {
                        b
                    } else {
                        a
                    }
                });
        let v = g.value(i);
        let violated = match (v, nmax) {
            (ExtReal::PosInf, ExtReal::Finite(_)) => true,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a > b + slack,
            _ => false,
        };
        if violated {
            violations.push(LscViolation {
                index: grid.multi_index(i),
                value: v,
                neighbor_max: nmax,
                margin: v.to_f64() - (nmax.to_f64() + slack),
            });
        }
    }
    LscReport { slack, violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_on(lo: f64, hi: f64, n: usize) -> GridFn {
        GridFn::from_fn(Grid::line(lo, hi, n).unwrap(), |x| x[0].abs()).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::line(1.0, 1.0, 3).is_err());
        assert!(Grid::line(0.0, 1.0, 1).is_err());
        assert!(Grid::new(vec![]).is_err());
        assert!(Grid::with_cap(
            vec![Axis::new(0.0, 1.0, 100), Axis::new(0.0, 1.0, 100)],
            9_999
        )
        .is_err());
        let g = Grid::parse("-1:1:3, 0:2:5").unwrap();
        assert_eq!(g.shape(), vec![3, 5]);
        assert_eq!(g.point(g.flat(&[2, 4]).unwrap()), vec![1.0, 2.0]);
        assert!(Grid::parse("-1:1").is_err());
        assert!(Grid::parse("-1:1:1").is_err());
    }

    #[test]
    fn eval_examples() {
        let zero = GridFn::from_fn(Grid::line(-1.0, 1.0, 7).unwrap(), |_| 0.0).unwrap();
        assert_eq!(zero.eval(&[4]).unwrap(), ExtReal::Finite(0.0));

        let g = Grid::line(-1.0, 1.0, 3).unwrap();
        let ind = GridFn::from_f64(g, &[f64::INFINITY, 0.0, f64::INFINITY]).unwrap();
        assert_eq!(ind.eval(&[1]).unwrap(), ExtReal::Finite(0.0));
        assert_eq!(ind.eval(&[2]).unwrap(), ExtReal::PosInf);

        let a = abs_on(-2.0, 2.0, 5);
        assert_eq!(a.eval(&[0]).unwrap(), ExtReal::Finite(2.0));
        assert!(matches!(a.eval(&[5]), Err(Error::OutOfBounds { .. })));
        assert!(a.eval(&[0, 0]).is_err());
    }

    #[test]
    fn empty_domain_rejected() {
        let g = Grid::line(0.0, 1.0, 2).unwrap();
        assert!(matches!(
            GridFn::from_f64(g, &[f64::INFINITY, f64::INFINITY]),
            Err(Error::EmptyDomain)
        ));
    }

    #[test]
    fn lipschitz_examples() {
        let a = abs_on(-2.0, 2.0, 401);
        let l = lipschitz_estimate(&a, &a.grid().full_box()).unwrap();
        assert!((l - 1.0).abs() < 1e-12);

        let c = GridFn::from_fn(Grid::line(-2.0, 2.0, 11).unwrap(), |_| 5.0).unwrap();
        assert_eq!(lipschitz_estimate(&c, &c.grid().full_box()).unwrap(), 0.0);

        let g = Grid::line(0.0, 1.0, 3).unwrap();
        let lone = GridFn::from_f64(g, &[0.0, f64::INFINITY, f64::INFINITY]).unwrap();
        assert!(matches!(
            lipschitz_estimate(&lone, &lone.grid().full_box()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn lipschitz_of_interval_distance_matches_pairwise_oracle() {
        let g = GridFn::from_fn(Grid::line(-2.0, 3.0, 501).unwrap(), |x| {
            (-x[0]).max(x[0] - 1.0).max(0.0)
        })
        .unwrap();
        let vals = g.to_f64_vec();
        let grid = g.grid();
        let mut oracle: f64 = 0.0;
        for i in 0..vals.len() {
            for j in (i + 1)..vals.len() {
                oracle = oracle.max((vals[i] - vals[j]).abs() / grid.dist(i, j));
            }
        }
        let est = lipschitz_estimate(&g, &grid.full_box()).unwrap();
        assert!((oracle - 1.0).abs() < 1e-9);
        assert!((est - oracle).abs() < 1e-9);
    }

    #[test]
    fn lsc_examples() {
        assert!(lsc_spot_check(&abs_on(-2.0, 2.0, 41)).passed());

        let grid = Grid::line(-1.0, 2.0, 31).unwrap();
        let ind = GridFn::from_fn(grid.clone(), |x| {
            if (-1e-12..=1.0 + 1e-12).contains(&x[0]) {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .unwrap();
        assert!(lsc_spot_check(&ind).passed());

        let mut vals = abs_on(-2.0, 2.0, 41).to_f64_vec();
        vals[25] += 10.0;
        let spiked = GridFn::from_f64(Grid::line(-2.0, 2.0, 41).unwrap(), &vals).unwrap();
        let rep = lsc_spot_check(&spiked);
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].index, vec![25]);
        assert!(rep.violations[0].margin > 9.0);
    }

    #[test]
    fn csv_round_trip_2d() {
        let grid = Grid::square(-1.0, 1.0, 4).unwrap();
        let g = GridFn::from_fn(grid, |x| {
            if x[0] > 0.5 {
                f64::INFINITY
            } else {
                x[0] + x[1]
            }
        })
        .unwrap();
        let text = g.to_csv_string();
        assert!(text.starts_with("x0,x1,value\n"));
        assert!(text.contains(",inf\n"));
        let back = GridFn::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.grid().shape(), vec![4, 4]);
        for i in 0..16 {
            let (a, b) = (g.value(i), back.value(i));
            match (a, b) {
                (ExtReal::Finite(x), ExtReal::Finite(y)) => assert!((x - y).abs() < 1e-12),
                _ => assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn ball_and_snap() {
        let grid = Grid::square(-1.0, 1.0, 21).unwrap();
        let c = grid.locate(&[0.0, 0.0]).unwrap();
        assert_eq!(grid.ball(c, 0.1).len(), 5);
        assert_eq!(grid.ball(c, 0.1 * 2f64.sqrt()).len(), 9);
        assert!(grid.snap(&[1.06, 0.0]).is_none());
        assert_eq!(
            grid.snap(&[1.04, 0.0]).unwrap().0,
            grid.locate(&[1.0, 0.0]).unwrap()
        );
    }

    proptest::proptest! {
        #[test]
        fn lipschitz_monotone_in_region(a in 0usize..20, b in 0usize..20, c in 0usize..20, d in 0usize..20) {
            let grid = Grid::line(-3.0, 3.0, 61).unwrap();
            let g = GridFn::from_fn(grid, |x| (x[0] * 1.3).sin() + 0.2 * x[0] * x[0]).unwrap();
            let inner = IndexBox { lo: vec![20 + a.min(b)], hi: vec![40 + c.min(d)] };
            let outer = IndexBox { lo: vec![20 - a.max(b)], hi: vec![40 + c.max(d)] };
            let li = lipschitz_estimate(&g, &inner).unwrap();
            let lo = lipschitz_estimate(&g, &outer).unwrap();
            proptest::prop_assert!(li <= lo);
        }

        #[test]
        fn lipschitz_below_analytic_constant(s in 0.1f64..5.0, t in -2.0f64..2.0) {
            let grid = Grid::square(-1.0, 1.0, 17).unwrap();
            // |s x0 + t x1| is Lipschitz with constant sqrt(s^2 + t^2)
            let g = GridFn::from_fn(grid, |x| (s * x[0] + t * x[1]).abs()).unwrap();
            let est = lipschitz_estimate(&g, &g.grid().full_box()).unwrap();
            proptest::prop_assert!(est <= (s * s + t * t).sqrt() + 1e-12);
        }
    }
}
