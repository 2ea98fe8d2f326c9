use std::fmt::Write as _;

use crate::error::ReachError;

/// Axis-aligned uniform grid over a box. Cells are indexed row-major with
/// the last dimension varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    cells: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, cells: Vec<usize>) -> Self {
        assert!(lo.len() == hi.len() && lo.len() == cells.len(), "grid dimension mismatch");
        assert!(cells.iter().all(|&n| n > 0), "grid needs at least one cell per axis");
        assert!(lo.iter().zip(&hi).all(|(l, h)| l < h), "grid bounds must be increasing");
        Self { lo, hi, cells }
    }

    pub fn dims(&self) -> usize {
        self.cells.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.cells
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self, d: usize) -> f64 {
        (self.hi[d] - self.lo[d]) / self.cells[d] as f64
    }

    pub fn in_bounds(&self, s: &[f64]) -> bool {
        s.len() == self.dims()
            && s.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| *x >= *l && *x <= *h)
    }

    /// Axis index of coordinate `x` along `d`, clamped into the grid. The
    /// upper bound belongs to the last cell.
    pub fn axis_index(&self, d: usize, x: f64) -> usize {
        let k = ((x - self.lo[d]) / self.width(d)).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.cells[d] - 1)
        }
    }

    pub fn cell_of(&self, s: &[f64]) -> Option<usize> {
        if !self.in_bounds(s) {
            return None;
        }
        let mut idx = 0;
        for d in 0..self.dims() {
            idx = idx * self.cells[d] + self.axis_index(d, s[d]);
        }
        Some(idx)
    }

    pub fn cell_of_checked(&self, s: &[f64]) -> Result<usize, ReachError> {
        self.cell_of(s).ok_or_else(|| ReachError::OutOfBounds(s.to_vec()))
    }

    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims()];
        for d in (0..self.dims()).rev() {
            out[d] = idx % self.cells[d];
            idx /= self.cells[d];
        }
        out
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.cells).fold(0, |acc, (c, n)| acc * n + c)
    }

    pub fn cell_lo(&self, idx: usize) -> Vec<f64> {
        self.coords(idx)
            .iter()
            .enumerate()
            .map(|(d, &k)| self.lo[d] + k as f64 * self.width(d))
            .collect()
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        self.cell_lo(idx)
            .iter()
            .enumerate()
            .map(|(d, l)| l + 0.5 * self.width(d))
            .collect()
    }

    /// Lattice of `k` points per axis spanning the cell, corners included,
    /// plus the center. Upper corners sit just inside the half-open cell.
    pub fn samples(&self, idx: usize, k: usize) -> Vec<Vec<f64>> {
        let k = k.max(2);
        let lo = self.cell_lo(idx);
        let dims = self.dims();
        let mut out = Vec::with_capacity(k.pow(dims as u32) + 1);
        let mut counter = vec![0usize; dims];
        loop {
            out.push(
                (0..dims)
                    .map(|d| lo[d] + self.width(d) * (counter[d] as f64 / (k - 1) as f64).min(1.0 - 1e-9))
                    .collect(),
            );
            let mut d = dims;
            loop {
                if d == 0 {
                    out.push(self.center(idx));
                    return out;
                }
                d -= 1;
                counter[d] += 1;
                if counter[d] < k {
                    break;
                }
                counter[d] = 0;
            }
        }
    }
}

/// One boolean per grid cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    shape: Vec<usize>,
    bits: Vec<bool>,
}

impl RegionMask {
    pub fn empty(grid: &GridSpec) -> Self {
        Self { shape: grid.shape().to_vec(), bits: vec![false; grid.len()] }
    }

    pub fn full(grid: &GridSpec) -> Self {
        Self { shape: grid.shape().to_vec(), bits: vec![true; grid.len()] }
    }

    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(usize) -> bool) -> Self {
        Self { shape: grid.shape().to_vec(), bits: (0..grid.len()).map(&mut f).collect() }
    }

    /// Cells whose center satisfies `pred`.
    pub fn from_predicate(grid: &GridSpec, pred: impl Fn(&[f64]) -> bool) -> Self {
        Self::from_fn(grid, |i| pred(&grid.center(i)))
    }

    pub fn from_bits(shape: Vec<usize>, bits: Vec<bool>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), bits.len());
        Self { shape, bits }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn set(&mut self, idx: usize, v: bool) {
        self.bits[idx] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn iter_set(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    pub fn is_subset(&self, other: &RegionMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    pub fn intersect(&self, other: &RegionMask) -> RegionMask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn union(&self, other: &RegionMask) -> RegionMask {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn complement(&self) -> RegionMask {
        RegionMask { shape: self.shape.clone(), bits: self.bits.iter().map(|b| !b).collect() }
    }

    fn zip_with(&self, other: &RegionMask, f: impl Fn(bool, bool) -> bool) -> RegionMask {
        assert_eq!(self.shape, other.shape, "mask shape mismatch");
        RegionMask {
            shape: self.shape.clone(),
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    /// Membership of a continuous state; out-of-grid states are outside.
    pub fn contains_state(&self, grid: &GridSpec, s: &[f64]) -> bool {
        grid.cell_of(s).map(|i| self.bits[i]).unwrap_or(false)
    }

    /// Serializes the mask with its grid as a plain-text file.
    ///
    /// ```text
    /// region-mask v1
    /// dims <n>
    /// cells <n_1> ... <n_d>
    /// lo <l_1> ... <l_d>
    /// hi <h_1> ... <h_d>
    /// <rows of '0'/'1', one line per run of the last axis>
    /// ```
    pub fn to_text(&self, grid: &GridSpec) -> String {
        let mut out = String::new();
        let join = |xs: &[f64]| xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        writeln!(out, "region-mask v1").unwrap();
        writeln!(out, "dims {}", grid.dims()).unwrap();
        writeln!(
            out,
            "cells {}",
            grid.shape().iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")
        )
        .unwrap();
        writeln!(out, "lo {}", join(grid.lo())).unwrap();
        writeln!(out, "hi {}", join(grid.hi())).unwrap();
        let row = *grid.shape().last().unwrap();
        for chunk in self.bits.chunks(row) {
            out.extend(chunk.iter().map(|b| if *b { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<(GridSpec, RegionMask), ReachError> {
        let bad = |m: &str| ReachError::MaskFormat(m.to_string());
        let mut lines = text.lines();
        if lines.next() != Some("region-mask v1") {
            return Err(bad("missing header"));
        }
        let mut field = |key: &str| -> Result<Vec<String>, ReachError> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(bad(&format!("expected `{key}`")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        let dims: usize = field("dims")?
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("dims"))?;
        let parse_usize = |v: Vec<String>| -> Result<Vec<usize>, ReachError> {
            v.iter().map(|s| s.parse().map_err(|_| bad("cells"))).collect()
        };
        let parse_f64 = |v: Vec<String>| -> Result<Vec<f64>, ReachError> {
            v.iter().map(|s| s.parse().map_err(|_| bad("bounds"))).collect()
        };
        let cells = parse_usize(field("cells")?)?;
        let lo = parse_f64(field("lo")?)?;
        let hi = parse_f64(field("hi")?)?;
        for got in [cells.len(), lo.len(), hi.len()] {
            if got != dims {
                return Err(ReachError::DimensionMismatch { expected: dims, got });
            }
        }
        if cells.contains(&0) || lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return Err(bad("degenerate grid"));
        }
        let grid = GridSpec::new(lo, hi, cells);
        let mut bits = Vec::with_capacity(grid.len());
        for line in lines {
            for ch in line.trim_end().chars() {
                match ch {
                    '0' => bits.push(false),
                    '1' => bits.push(true),
                    _ => return Err(bad("mask rows must contain only 0 and 1")),
                }
            }
        }
        if bits.len() != grid.len() {
            return Err(bad(&format!("expected {} cells, found {}", grid.len(), bits.len())));
        }
        let mask = RegionMask::from_bits(grid.shape().to_vec(), bits);
        Ok((grid, mask))
    }
}
