//! Uniform box grids and the grid functions that hold candidate value
//! functions.
//!
//! Nodes are stored in row-major order: the last axis varies fastest. The
//! same order is used for the CSV format, one row per node with columns
//! `x_1..x_n,value`.

use std::io::{Read, Write};

use crate::error::{check_dim, Error, Result};
use crate::problem::BoxDomain;

/// Relative tolerance for matching CSV coordinates against grid nodes.
const COORD_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: BoxDomain,
    nodes: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, nodes_per_axis: Vec<usize>) -> Result<Self> {
        let domain = BoxDomain::new(lower, upper)?;
        Self::on(domain, nodes_per_axis)
    }

    pub fn on(domain: BoxDomain, nodes_per_axis: Vec<usize>) -> Result<Self> {
        check_dim(domain.dim(), nodes_per_axis.len())?;
        if let Some(n) = nodes_per_axis.iter().find(|n| **n < 2) {
            return Err(Error::InvalidArgument(format!(
                "each axis needs at least 2 nodes, got {n}"
            )));
        }
        let spacing = (0..domain.dim())
            .map(|a| (domain.upper()[a] - domain.lower()[a]) / (nodes_per_axis[a] - 1) as f64)
            .collect();
        let mut strides = vec![1; nodes_per_axis.len()];
        for a in (0..nodes_per_axis.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * nodes_per_axis[a + 1];
        }
        let len = nodes_per_axis.iter().product();
        Ok(Self {
            domain,
            nodes: nodes_per_axis,
            spacing,
            strides,
            len,
        })
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn lower(&self) -> &[f64] {
        self.domain.lower()
    }

    pub fn upper(&self) -> &[f64] {
        self.domain.upper()
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.nodes[axis] {
            self.upper()[axis]
        } else {
            self.lower()[axis] + i as f64 * self.spacing[axis]
        }
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut rest = flat;
        self.strides
            .iter()
            .map(|s| {
                let i = rest / s;
                rest %= s;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, multi: &[usize]) -> Result<usize> {
        check_dim(self.dim(), multi.len())?;
        let mut flat = 0;
        for (a, (&i, &n)) in multi.iter().zip(&self.nodes).enumerate() {
            if i >= n {
                return Err(Error::InvalidArgument(format!(
                    "index {i} out of range on axis {a} ({n} nodes)"
                )));
            }
            flat += i * self.strides[a];
        }
        Ok(flat)
    }

    /// Coordinates of node `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.coord(a, i))
            .collect()
    }

    /// True for nodes whose distance to every face exceeds `margin`.
    ///
    /// `margin = 0` excludes exactly the face nodes.
    pub fn interior_mask(&self, margin: f64) -> Vec<bool> {
        (0..self.len)
            .map(|k| {
                let x = self.point(k);
                x.iter().enumerate().all(|(a, v)| {
                    let slack = COORD_MATCH_TOL * self.spacing[a];
                    v - self.lower()[a] > margin + slack && self.upper()[a] - v > margin + slack
                })
            })
            .collect()
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch("grid functions live on different grids".into()))
        }
    }
}

/// Values of a candidate value function at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        let values = vec![value; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.point(k))).collect();
        Self { grid, values }
    }

    /// Internal constructor for values already known to be finite and sized.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Multilinear interpolation after clamping `x` into the box.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let n = g.dim();
        debug_assert_eq!(x.len(), n);
        let mut base = 0usize;
        let mut weights = [0.0f64; 16];
        let mut steps = [0usize; 16];
        let mut heap_w;
        let mut heap_s;
        let (w, s): (&mut [f64], &mut [usize]) = if n <= 16 {
            (&mut weights[..n], &mut steps[..n])
        } else {
            heap_w = vec![0.0; n];
            heap_s = vec![0; n];
            (&mut heap_w[..], &mut heap_s[..])
        };
        for a in 0..n {
            let lo = g.lower()[a];
            let hi = g.upper()[a];
            let t = (x[a].clamp(lo, hi) - lo) / g.spacing[a];
            let cells = g.nodes[a] - 1;
            let i = (t.floor() as usize).min(cells - 1);
            let frac = (t - i as f64).clamp(0.0, 1.0);
            base += i * g.strides[a];
            w[a] = frac;
            s[a] = g.strides[a];
        }
        let mut acc = 0.0;
        for corner in 0u64..(1u64 << n) {
            let mut weight = 1.0;
            let mut idx = base;
            for a in 0..n {
                if corner >> a & 1 == 1 {
                    weight *= w[a];
                    idx += s[a];
                } else {
                    weight *= 1.0 - w[a];
                }
            }
            if weight != 0.0 {
                acc += weight * self.values[idx];
            }
        }
        acc
    }

    /// Finite-difference gradient at a node: central differences in the
    /// interior, first-order one-sided differences on the faces.
    pub fn gradient_fd(&self, node: &[usize]) -> Result<Vec<f64>> {
        let flat = self.grid.flat_index(node)?;
        Ok(self.gradient_at(flat))
    }

    pub(crate) fn gradient_at(&self, flat: usize) -> Vec<f64> {
        let g = &self.grid;
        let multi = g.multi_index(flat);
        (0..g.dim())
            .map(|a| {
                let i = multi[a];
                let s = g.strides[a];
                let h = g.spacing[a];
                if i == 0 {
                    (self.values[flat + s] - self.values[flat]) / h
                } else if i + 1 == g.nodes[a] {
                    (self.values[flat] - self.values[flat - s]) / h
                } else {
                    (self.values[flat + s] - self.values[flat - s]) / (2.0 * h)
                }
            })
            .collect()
    }

    /// `max_k |self_k − other_k|`.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// `max_k |self_k − other_k|` over nodes with `mask[k]`.
    pub fn masked_sup_distance(&self, other: &GridFunction, mask: &[bool]) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(mask)
            .filter(|(_, m)| **m)
            .map(|((a, b), _)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn map(&self, f: impl Fn(&[f64], f64) -> f64) -> GridFunction {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| f(&self.grid.point(k), *v))
            .collect();
        GridFunction::from_parts(self.grid.clone(), values)
    }

    /// Writes `x_1..x_n,value`, one row per node in row-major order.
    ///
    /// Floats use the shortest representation that parses back to the same
    /// bits, so a write/read cycle is exact.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.grid.dim()).map(|a| format!("x_{a}")).collect();
        header.push("value".into());
        w.write_record(&header)?;
        for k in 0..self.grid.len() {
            let mut row: Vec<String> = self.grid.point(k).iter().map(|v| v.to_string()).collect();
            row.push(self.values[k].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV produced by [`GridFunction::write_csv`] onto `grid`,
    /// checking row count and node coordinates.
    pub fn read_csv<R: Read>(grid: &Grid, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let n = grid.dim();
        let mut values = Vec::with_capacity(grid.len());
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != n + 1 {
                return Err(Error::GridMismatch(format!(
                    "row {k} has {} columns, expected {}",
                    rec.len(),
                    n + 1
                )));
            }
            if k >= grid.len() {
                return Err(Error::GridMismatch(format!(
                    "more rows than the {} grid nodes",
                    grid.len()
                )));
            }
            let x = grid.point(k);
            for a in 0..n {
                let c: f64 = parse_field(&rec[a], k)?;
                if (c - x[a]).abs() > COORD_MATCH_TOL * grid.spacing[a].max(1.0) {
                    return Err(Error::GridMismatch(format!(
                        "row {k} axis {a}: coordinate {c} does not match node {}",
                        x[a]
                    )));
                }
            }
            values.push(parse_field(&rec[n], k)?);
        }
        GridFunction::new(grid.clone(), values)
    }
}

fn parse_field(s: &str, row: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::GridMismatch(format!("row {row}: cannot parse {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Grid {
        Grid::new(vec![0.0], vec![1.0], vec![2]).unwrap()
    }

    #[test]
    fn interpolation_basics() {
        let gf = GridFunction::new(unit(), vec![0.0, 1.0]).unwrap();
        assert_eq!(gf.interpolate(&[0.25]), 0.25);
        assert_eq!(gf.interpolate(&[1.0]), 1.0);
        assert_eq!(gf.interpolate(&[2.0]), 1.0);
        assert_eq!(gf.interpolate(&[-3.0]), 0.0);
    }

    #[test]
    fn interpolation_is_exact_at_nodes_2d() {
        let g = Grid::new(vec![-1.0, 0.0], vec![1.0, 2.0], vec![5, 4]).unwrap();
        let gf = GridFunction::from_fn(g.clone(), |x| x[0] * 3.0 - x[1] * x[1]);
        for k in 0..g.len() {
            assert_eq!(gf.interpolate(&g.point(k)), gf.value(k));
        }
        // bilinear functions are reproduced everywhere
        let bl = GridFunction::from_fn(g, |x| 1.0 + x[0] - 2.0 * x[1] + 0.5 * x[0] * x[1]);
        let p = [0.13, 1.71];
        let exact = 1.0 + p[0] - 2.0 * p[1] + 0.5 * p[0] * p[1];
        assert!((bl.interpolate(&p) - exact).abs() < 1e-12);
    }

    #[test]
    fn row_major_order() {
        let g = Grid::new(vec![0.0, 0.0], vec![1.0, 2.0], vec![2, 3]).unwrap();
        assert_eq!(g.point(0), vec![0.0, 0.0]);
        assert_eq!(g.point(1), vec![0.0, 1.0]);
        assert_eq!(g.point(3), vec![1.0, 0.0]);
        assert_eq!(g.flat_index(&[1, 2]).unwrap(), 5);
        assert!(g.flat_index(&[2, 0]).is_err());
    }

    #[test]
    fn gradients() {
        let g = Grid::new(vec![0.0], vec![1.0], vec![5]).unwrap();
        let c = GridFunction::constant(g.clone(), 3.0);
        assert_eq!(c.gradient_fd(&[2]).unwrap(), vec![0.0]);
        let lin = GridFunction::from_fn(g.clone(), |x| x[0]);
        assert_eq!(lin.gradient_fd(&[2]).unwrap(), vec![1.0]);
        let sq = GridFunction::from_fn(g.clone(), |x| x[0] * x[0]);
        assert_eq!(sq.gradient_fd(&[2]).unwrap(), vec![1.0]);
        // one-sided on the faces
        assert_eq!(sq.gradient_fd(&[0]).unwrap(), vec![0.25]);
        assert_eq!(sq.gradient_fd(&[4]).unwrap(), vec![1.75]);
        assert!(sq.gradient_fd(&[5]).is_err());
    }

    #[test]
    fn interior_mask_margin() {
        let g = Grid::new(vec![-2.0], vec![2.0], vec![81]).unwrap();
        let m = g.interior_mask(0.5);
        let kept: Vec<f64> = (0..g.len()).filter(|k| m[*k]).map(|k| g.point(k)[0]).collect();
        assert!((kept[0] + 1.45).abs() < 1e-12);
        assert!((kept.last().unwrap() - 1.45).abs() < 1e-12);
        let faces = g.interior_mask(0.0);
        assert!(!faces[0] && !faces[80] && faces[1] && faces[79]);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let g = Grid::new(vec![-1.0, 0.0], vec![1.0, 0.3], vec![7, 3]).unwrap();
        let gf = GridFunction::from_fn(g.clone(), |x| (x[0] * 1.7).sin() / 3.0 + x[1].exp());
        let mut buf = Vec::new();
        gf.write_csv(&mut buf).unwrap();
        let back = GridFunction::read_csv(&g, buf.as_slice()).unwrap();
        for (a, b) in gf.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_rejects_wrong_grid() {
        let g = Grid::new(vec![0.0], vec![1.0], vec![3]).unwrap();
        let gf = GridFunction::constant(g, 1.0);
        let mut buf = Vec::new();
        gf.write_csv(&mut buf).unwrap();
        let other = Grid::new(vec![0.0], vec![2.0], vec![3]).unwrap();
        assert!(GridFunction::read_csv(&other, buf.as_slice()).is_err());
        let bigger = Grid::new(vec![0.0], vec![1.0], vec![4]).unwrap();
        assert!(GridFunction::read_csv(&bigger, buf.as_slice()).is_err());
    }

    proptest! {
        #[test]
        fn interpolation_monotone_and_nonexpansive(
            a in proptest::collection::vec(-5.0f64..5.0, 12),
            bump in proptest::collection::vec(0.0f64..2.0, 12),
            x in -1.5f64..2.5,
            y in -0.5f64..1.5,
        ) {
            let g = Grid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![4, 3]).unwrap();
            let lo = GridFunction::new(g.clone(), a.clone()).unwrap();
            let hi_vals: Vec<f64> = a.iter().zip(&bump).map(|(v, b)| v + b).collect();
            let hi = GridFunction::new(g, hi_vals).unwrap();
            let p = [x, y];
            let (il, ih) = (lo.interpolate(&p), hi.interpolate(&p));
            prop_assert!(il <= ih + 1e-12);
            let d = lo.sup_distance(&hi).unwrap();
            prop_assert!((ih - il).abs() <= d + 1e-12);
        }
    }
}
