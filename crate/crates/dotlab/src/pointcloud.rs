//! Dyadic-lattice point clouds and the fractal generators.
//!
//! A cloud is a finite set of level-`m` lattice cells in `[-R, R]^n`; the
//! cell with index tuple `c` is the box `prod_i [c_i 2^-m, (c_i+1) 2^-m)` and
//! is identified with its center `(2c+1)/2^(m+1)` for all counting purposes.
//!
//! Cantor-type generators do exact rational interval arithmetic, snap cells
//! whose centers lie in the construction intervals at the *pivot level* (the
//! coarsest level resolving the deepest interval), and refine dyadically to
//! the requested level. Refinement-then-coarsening therefore reproduces
//! coarser generations exactly, and at pivot levels the covering counts at
//! generator-native scales are exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DotlabError, Result};
use crate::exact::Rational;

/// Default bounding box half-width: all constructions live in `[-2, 2]^n`.
pub const DEFAULT_BOUND: u32 = 2;

/// Additive tolerance on the total mass of a weight vector.
pub const WEIGHT_TOLERANCE: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    ambient_dim: usize,
    level: u32,
    bound: u32,
    /// Flattened cell indices, stride `ambient_dim`, lexicographically sorted.
    cells: Vec<i64>,
    weights: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new(ambient_dim: usize, level: u32, bound: u32, cells: Vec<Vec<i64>>) -> Result<Self> {
        let flat: Vec<i64> = cells.into_iter().flatten().collect();
        Self::from_flat(ambient_dim, level, bound, flat, None)
    }

    pub fn from_flat(
        ambient_dim: usize,
        level: u32,
        bound: u32,
        mut cells: Vec<i64>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(DotlabError::InvalidSpec("ambient_dim must be >= 1".into()));
        }
        if level > 40 {
            return Err(DotlabError::InvalidSpec(format!("level {level} too deep")));
        }
        if cells.len() % ambient_dim != 0 {
            return Err(DotlabError::InvalidSpec(
                "flat cell buffer not a multiple of ambient_dim".into(),
            ));
        }
        let limit = (bound as i64) << level;
        if cells.iter().any(|&c| c.abs() > limit) {
            return Err(DotlabError::InvalidSpec(format!(
                "cell index outside [-R, R]^n for R = {bound}"
            )));
        }
        match weights {
            None => {
                sort_cells(&mut cells, ambient_dim);
                dedup_cells(&mut cells, ambient_dim);
                Ok(PointCloud {
                    ambient_dim,
                    level,
                    bound,
                    cells,
                    weights: None,
                })
            }
            Some(w) => {
                if w.len() * ambient_dim != cells.len() {
                    return Err(DotlabError::InvalidSpec(
                        "weight vector length differs from cell count".into(),
                    ));
                }
                // sort cells and weights together, merging duplicate cells
                let mut pairs: Vec<(Vec<i64>, f64)> = cells
                    .chunks_exact(ambient_dim)
                    .zip(&w)
                    .map(|(c, &wi)| (c.to_vec(), wi))
                    .collect();
                pairs.sort_by(|a, b| a.0.cmp(&b.0));
                let mut flat = Vec::with_capacity(cells.len());
                let mut weights = Vec::with_capacity(w.len());
                for (cell, wi) in pairs {
                    if flat.len() >= ambient_dim
                        && flat[flat.len() - ambient_dim..] == cell[..]
                    {
                        *weights.last_mut().unwrap() += wi;
                    } else {
                        flat.extend_from_slice(&cell);
                        weights.push(wi);
                    }
                }
                let cloud = PointCloud {
                    ambient_dim,
                    level,
                    bound,
                    cells: flat,
                    weights: Some(weights),
                };
                cloud.validate_weights()?;
                Ok(cloud)
            }
        }
    }

    fn validate_weights(&self) -> Result<()> {
        if let Some(w) = &self.weights {
            if w.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(DotlabError::InvalidSpec("negative or non-finite weight".into()));
            }
            // Neumaier summation: the 2^-40 tolerance is far below f64 noise
            // for any realistic cell count, but do not give rounding a head start.
            let mut sum = 0.0f64;
            let mut comp = 0.0f64;
            for &x in w {
                let t = sum + x;
                comp += if sum.abs() >= x.abs() {
                    (sum - t) + x
                } else {
                    (x - t) + sum
                };
                sum = t;
            }
            let total = sum + comp;
            if (total - 1.0).abs() > WEIGHT_TOLERANCE {
                return Err(DotlabError::InvalidSpec(format!(
                    "weights sum to {total}, not 1"
                )));
            }
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn cell_count(&self) -> usize {
        if self.ambient_dim == 0 {
            0
        } else {
            self.cells.len() / self.ambient_dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = &[i64]> {
        self.cells.chunks_exact(self.ambient_dim)
    }

    pub fn cells_flat(&self) -> &[i64] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &[i64] {
        &self.cells[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Per-cell weights, defaulting to uniform when none are attached.
    pub fn effective_weights(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => w.clone(),
            None => {
                let n = self.cell_count();
                vec![1.0 / n as f64; n]
            }
        }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.cell_count() {
            return Err(DotlabError::InvalidSpec(
                "weight vector length differs from cell count".into(),
            ));
        }
        self.weights = Some(weights);
        self.validate_weights()?;
        Ok(self)
    }

    /// Cell centers as a flat f64 buffer (stride `ambient_dim`). Exact: every
    /// center is a dyadic rational well inside f64 range.
    pub fn centers_flat_f64(&self) -> Vec<f64> {
        let scale = 0.5f64.powi(self.level as i32 + 1);
        self.cells.iter().map(|&c| (2 * c + 1) as f64 * scale).collect()
    }

    pub fn center_f64(&self, i: usize) -> Vec<f64> {
        let scale = 0.5f64.powi(self.level as i32 + 1);
        self.cell(i).iter().map(|&c| (2 * c + 1) as f64 * scale).collect()
    }

    /// Exact rational center of cell `i`.
    pub fn center_point(&self, i: usize) -> crate::exact::Point {
        let den = BigInt::one() << (self.level + 1);
        crate::exact::Point::new(
            self.cell(i)
                .iter()
                .map(|&c| Rational::new(BigInt::from(2 * c + 1), den.clone()))
                .collect(),
        )
    }

    /// The level-`to_level` ancestors of all cells (with weights merged).
    pub fn coarsen(&self, to_level: u32) -> Result<PointCloud> {
        if to_level > self.level {
            return Err(DotlabError::LevelMismatch(format!(
                "cannot coarsen level {} to finer level {to_level}",
                self.level
            )));
        }
        let shift = self.level - to_level;
        let div = 1i64 << shift;
        match &self.weights {
            None => {
                let flat: Vec<i64> = self.cells.iter().map(|&c| c.div_euclid(div)).collect();
                PointCloud::from_flat(self.ambient_dim, to_level, self.bound, flat, None)
            }
            Some(w) => {
                let mut merged: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
                for (cell, &wi) in self.cells().zip(w) {
                    let key: Vec<i64> = cell.iter().map(|&c| c.div_euclid(div)).collect();
                    *merged.entry(key).or_insert(0.0) += wi;
                }
                let mut flat = Vec::new();
                let mut weights = Vec::new();
                for (cell, wi) in merged {
                    flat.extend_from_slice(&cell);
                    weights.push(wi);
                }
                PointCloud::from_flat(self.ambient_dim, to_level, self.bound, flat, Some(weights))
            }
        }
    }

    /// Full dyadic refinement: every cell is replaced by its 2^(n*shift)
    /// descendants, weights split evenly.
    pub fn refine(&self, to_level: u32) -> Result<PointCloud> {
        if to_level < self.level {
            return Err(DotlabError::LevelMismatch(format!(
                "cannot refine level {} to coarser level {to_level}",
                self.level
            )));
        }
        let shift = to_level - self.level;
        if shift == 0 {
            return Ok(self.clone());
        }
        let per_axis = 1i64 << shift;
        let children_per_cell = (per_axis as usize).pow(self.ambient_dim as u32);
        let mut flat = Vec::with_capacity(self.cells.len() * children_per_cell);
        let mut offsets = vec![0i64; self.ambient_dim];
        for cell in self.cells() {
            offsets.iter_mut().for_each(|o| *o = 0);
            loop {
                for (c, o) in cell.iter().zip(&offsets) {
                    flat.push((c << shift) + o);
                }
                // odometer over the child block
                let mut axis = self.ambient_dim;
                loop {
                    if axis == 0 {
                        break;
                    }
                    axis -= 1;
                    offsets[axis] += 1;
                    if offsets[axis] < per_axis {
                        break;
                    }
                    offsets[axis] = 0;
                }
                if offsets.iter().all(|&o| o == 0) {
                    break;
                }
            }
        }
        let weights = self.weights.as_ref().map(|w| {
            let f = 1.0 / children_per_cell as f64;
            w.iter()
                .flat_map(|&wi| std::iter::repeat(wi * f).take(children_per_cell))
                .collect()
        });
        PointCloud::from_flat(self.ambient_dim, to_level, self.bound, flat, weights)
    }

    /// Keep the cells whose position passes `pred` (weights renormalized).
    pub fn filter_cells<F: Fn(usize, &[i64]) -> bool>(&self, pred: F) -> Result<PointCloud> {
        let mut flat = Vec::new();
        let mut weights = self.weights.as_ref().map(|_| Vec::new());
        for (i, cell) in self.cells().enumerate() {
            if pred(i, cell) {
                flat.extend_from_slice(cell);
                if let (Some(ws), Some(all)) = (&mut weights, &self.weights) {
                    ws.push(all[i]);
                }
            }
        }
        if let Some(ws) = &mut weights {
            let total: f64 = ws.iter().sum();
            if total > 0.0 {
                ws.iter_mut().for_each(|w| *w /= total);
            } else {
                weights = None;
            }
        }
        PointCloud::from_flat(self.ambient_dim, self.level, self.bound, flat, weights)
    }

    /// Lattice-exact coordinate transform for tests: permutes axes by `perm`
    /// then negates axes flagged in `flip` (centers map to mirrored centers).
    pub fn transform_lattice(&self, perm: &[usize], flip: &[bool]) -> Result<PointCloud> {
        if perm.len() != self.ambient_dim || flip.len() != self.ambient_dim {
            return Err(DotlabError::DimensionMismatch {
                expected: self.ambient_dim,
                got: perm.len(),
            });
        }
        let mut flat = Vec::with_capacity(self.cells.len());
        for cell in self.cells() {
            for axis in 0..self.ambient_dim {
                let v = cell[perm[axis]];
                flat.push(if flip[axis] { -v - 1 } else { v });
            }
        }
        PointCloud::from_flat(
            self.ambient_dim,
            self.level,
            self.bound,
            flat,
            self.weights.clone(),
        )
    }

    /// Uniformly random distinct cells in `[-bound, bound]^n`, seeded.
    pub fn random(n: usize, level: u32, count: usize, bound: u32, seed: u64) -> Result<PointCloud> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let limit = ((bound as i64) << level) - 1;
        let mut seen = std::collections::BTreeSet::new();
        let mut flat = Vec::with_capacity(count * n);
        let mut attempts = 0usize;
        while seen.len() < count {
            attempts += 1;
            if attempts > count * 1000 {
                return Err(DotlabError::InvalidSpec(
                    "cannot place requested number of distinct cells".into(),
                ));
            }
            let cell: Vec<i64> = (0..n).map(|_| rng.gen_range(-limit..=limit)).collect();
            if seen.insert(cell.clone()) {
                flat.extend_from_slice(&cell);
            }
        }
        PointCloud::from_flat(n, level, bound, flat, None)
    }

    /// The full box `[0,1]^n` at the given level.
    pub fn unit_box(n: usize, level: u32) -> Result<PointCloud> {
        if (level as u64) * (n as u64) > 26 {
            return Err(DotlabError::InvalidSpec(
                "unit_box would exceed the cell budget".into(),
            ));
        }
        let side = 1i64 << level;
        let mut flat = Vec::new();
        let mut cell = vec![0i64; n];
        loop {
            flat.extend_from_slice(&cell);
            let mut axis = n;
            loop {
                if axis == 0 {
                    return PointCloud::from_flat(n, level, DEFAULT_BOUND, flat, None);
                }
                axis -= 1;
                cell[axis] += 1;
                if cell[axis] < side {
                    break;
                }
                cell[axis] = 0;
            }
        }
    }

    /// One cell per requested index (ambient dimension 1).
    pub fn singleton_1d(level: u32, index: i64) -> Result<PointCloud> {
        PointCloud::from_flat(1, level, DEFAULT_BOUND, vec![index], None)
    }

    // ------------------------------------------------------------------
    // normative JSON envelope
    // ------------------------------------------------------------------

    /// Serializes to the cloud file format. Cells are already stored sorted
    /// lexicographically, which the format requires.
    pub fn to_json_string(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{{\"ambient_dim\":{},\"level\":{},\"bound\":{},\"cells\":[",
            self.ambient_dim, self.level, self.bound
        );
        for (i, cell) in self.cells().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push('[');
            for (j, c) in cell.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{c}");
            }
            s.push(']');
        }
        s.push(']');
        if let Some(w) = &self.weights {
            s.push_str(",\"weights\":[");
            for (i, wi) in w.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{wi}");
            }
            s.push(']');
        }
        s.push('}');
        s
    }

    pub fn from_json_str(s: &str) -> Result<PointCloud> {
        #[derive(Deserialize)]
        struct Raw {
            ambient_dim: usize,
            level: u32,
            bound: u32,
            cells: Vec<Vec<i64>>,
            #[serde(default)]
            weights: Option<Vec<f64>>,
        }
        let raw: Raw = serde_json::from_str(s)?;
        let n = raw.ambient_dim;
        for c in &raw.cells {
            if c.len() != n {
                return Err(DotlabError::Format("ragged cell tuple".into()));
            }
        }
        let flat = raw.cells.into_iter().flatten().collect();
        PointCloud::from_flat(n, raw.level, raw.bound, flat, raw.weights)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<PointCloud> {
        let s = std::fs::read_to_string(path)?;
        PointCloud::from_json_str(&s)
    }
}

fn sort_cells(flat: &mut Vec<i64>, n: usize) {
    let mut tuples: Vec<&[i64]> = flat.chunks_exact(n).collect();
    if tuples.windows(2).all(|w| w[0] <= w[1]) {
        return;
    }
    tuples.sort_unstable();
    let sorted: Vec<i64> = tuples.into_iter().flatten().copied().collect();
    *flat = sorted;
}

fn dedup_cells(flat: &mut Vec<i64>, n: usize) {
    if flat.is_empty() {
        return;
    }
    let mut out = Vec::with_capacity(flat.len());
    out.extend_from_slice(&flat[..n]);
    for cell in flat.chunks_exact(n).skip(1) {
        if out[out.len() - n..] != *cell {
            out.extend_from_slice(cell);
        }
    }
    *flat = out;
}

// ----------------------------------------------------------------------
// Cantor generators
// ----------------------------------------------------------------------

/// Self-similar Cantor construction on `[0,1]`: `branches` children of
/// relative size `ratio`, spread evenly from both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorSpec {
    /// Contraction ratio in `(0, 1/2]`, e.g. `1/3` for the middle-thirds set.
    pub ratio_num: u32,
    pub ratio_den: u32,
    pub branches: u32,
    pub depth: u32,
}

impl CantorSpec {
    pub fn new(ratio_num: u32, ratio_den: u32, branches: u32, depth: u32) -> Result<Self> {
        let spec = CantorSpec {
            ratio_num,
            ratio_den,
            branches,
            depth,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ratio_num == 0 || self.ratio_den == 0 {
            return Err(DotlabError::InvalidSpec("zero in Cantor ratio".into()));
        }
        if 2 * self.ratio_num > self.ratio_den {
            return Err(DotlabError::InvalidSpec(format!(
                "ratio {}/{} must lie in (0, 1/2]",
                self.ratio_num, self.ratio_den
            )));
        }
        if self.branches < 2 {
            return Err(DotlabError::InvalidSpec("need at least 2 branches".into()));
        }
        // children must not overlap: b * ratio <= 1
        if self.branches as u64 * self.ratio_num as u64 > self.ratio_den as u64 {
            return Err(DotlabError::InvalidSpec(format!(
                "{} branches of ratio {}/{} overlap",
                self.branches, self.ratio_num, self.ratio_den
            )));
        }
        let dim = self.dimension();
        if !(dim > 0.0 && dim <= 1.0 + 1e-12) {
            return Err(DotlabError::InvalidSpec(format!(
                "target dimension {dim} outside (0, 1]"
            )));
        }
        Ok(())
    }

    pub fn ratio(&self) -> Rational {
        Rational::new(self.ratio_num.into(), self.ratio_den.into())
    }

    /// `log b / log (1/ratio)`.
    pub fn dimension(&self) -> f64 {
        (self.branches as f64).ln() / (self.ratio_den as f64 / self.ratio_num as f64).ln()
    }

    /// Coarsest level whose cells are no wider than the depth-`d` intervals,
    /// i.e. the smallest `m` with `2^-m <= ratio^depth`.
    pub fn pivot_level(&self) -> u32 {
        let len = rational_pow(&self.ratio(), self.depth);
        let mut m = 0u32;
        let mut scaled = len;
        while scaled < Rational::one() {
            scaled = scaled * Rational::from_integer(2.into());
            m += 1;
        }
        m
    }

    /// Exact depth-`depth` construction intervals as (left endpoint, length).
    pub fn intervals(&self) -> Vec<(Rational, Rational)> {
        let ratio = self.ratio();
        let mut current = vec![(Rational::zero(), Rational::one())];
        for _ in 0..self.depth {
            let mut next = Vec::with_capacity(current.len() * self.branches as usize);
            for (left, len) in &current {
                let child_len = len * &ratio;
                // children evenly spread: step (len - child_len)/(b-1)
                let step = (len - &child_len)
                    / Rational::from_integer(BigInt::from(self.branches - 1));
                for j in 0..self.branches {
                    let l = left + &step * Rational::from_integer(BigInt::from(j));
                    next.push((l, child_len.clone()));
                }
            }
            current = next;
        }
        current
    }
}

fn rational_pow(r: &Rational, k: u32) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..k {
        acc = acc * r;
    }
    acc
}

/// floor of a rational
fn rat_floor(r: &Rational) -> BigInt {
    r.numer().div_floor(r.denom())
}

/// Level-`m` cells on `R` whose centers lie in `[left, left+len)`.
fn cells_with_center_in(left: &Rational, len: &Rational, level: u32) -> Vec<i64> {
    // center (2c+1)/2^(m+1) >= left  <=>  c >= (left*2^(m+1) - 1)/2
    // center < left + len           <=>  c < ((left+len)*2^(m+1) - 1)/2
    let two_mp1 = Rational::from_integer(BigInt::one() << (level + 1));
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let lo = (left * &two_mp1 - Rational::one()) * &half;
    let hi = ((left + len) * &two_mp1 - Rational::one()) * &half;
    // smallest integer >= lo
    let c_min = if lo.is_integer() {
        lo.numer().clone()
    } else {
        rat_floor(&lo) + 1
    };
    // largest integer < hi
    let c_max = if hi.is_integer() {
        hi.numer() - 1
    } else {
        rat_floor(&hi)
    };
    let (c_min, c_max) = (
        c_min.to_i64().expect("cell index overflow"),
        c_max.to_i64().expect("cell index overflow"),
    );
    (c_min..=c_max).collect()
}

/// Union of `b^depth` exact intervals snapped to level-`level` cells.
///
/// Snapping happens at the spec's pivot level and is refined dyadically to
/// the requested level, so regenerating at `level+1` and coarsening back
/// reproduces the level-`level` cells exactly.
pub fn gen_cantor_1d(spec: &CantorSpec, level: u32) -> Result<PointCloud> {
    spec.validate()?;
    let pivot = spec.pivot_level();
    if level < pivot {
        return Err(DotlabError::LevelTooCoarse {
            level,
            reason: format!(
                "depth {} of ratio {}/{} needs level >= {pivot}",
                spec.depth, spec.ratio_num, spec.ratio_den
            ),
        });
    }
    let mut flat = Vec::new();
    for (left, len) in spec.intervals() {
        flat.extend(cells_with_center_in(&left, &len, pivot));
    }
    let base = PointCloud::from_flat(1, pivot, DEFAULT_BOUND, flat, None)?;
    base.refine(level)
}

/// Cartesian product of 1-D clouds sharing a level. Product weights when all
/// factors carry weights.
pub fn gen_product(factors: &[PointCloud]) -> Result<PointCloud> {
    if factors.is_empty() || factors.len() > 4 {
        return Err(DotlabError::InvalidSpec(
            "product takes between 1 and 4 factors".into(),
        ));
    }
    let level = factors[0].level();
    let bound = factors[0].bound();
    for f in factors {
        if f.ambient_dim() != 1 {
            return Err(DotlabError::DimensionMismatch {
                expected: 1,
                got: f.ambient_dim(),
            });
        }
        if f.level() != level {
            return Err(DotlabError::LevelMismatch(format!(
                "factor level {} differs from {}",
                f.level(),
                level
            )));
        }
    }
    let count: usize = factors.iter().map(|f| f.cell_count()).product();
    if count > 50_000_000 {
        return Err(DotlabError::InvalidSpec(format!(
            "product would have {count} cells"
        )));
    }
    let n = factors.len();
    let all_weighted = factors.iter().all(|f| f.weights().is_some());
    let mut flat = Vec::with_capacity(count * n);
    let mut weights = if all_weighted {
        Vec::with_capacity(count)
    } else {
        Vec::new()
    };
    let mut idx = vec![0usize; n];
    if factors.iter().any(|f| f.is_empty()) {
        return PointCloud::from_flat(n, level, bound, Vec::new(), None);
    }
    loop {
        for (axis, f) in factors.iter().enumerate() {
            flat.push(f.cell(idx[axis])[0]);
        }
        if all_weighted {
            weights.push(
                factors
                    .iter()
                    .enumerate()
                    .map(|(axis, f)| f.weights().unwrap()[idx[axis]])
                    .product(),
            );
        }
        let mut axis = n;
        loop {
            if axis == 0 {
                let w = if all_weighted { Some(weights) } else { None };
                return PointCloud::from_flat(n, level, bound, flat, w);
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < factors[axis].cell_count() {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// `C x {0}` in the plane, with `C` the middle-thirds set at the deepest
/// depth representable at this level. The sharpness witness for the planar
/// dot-product threshold: dimension 1 on a line, but vanishing 1-D measure.
pub fn gen_sharpness_line(level: u32) -> Result<PointCloud> {
    if level < 8 {
        return Err(DotlabError::LevelTooCoarse {
            level,
            reason: "sharpness line needs level >= 8".into(),
        });
    }
    let depth = deepest_cantor_depth(3, level);
    let spec = CantorSpec::new(1, 3, 2, depth)?;
    let c = gen_cantor_1d(&spec, level)?;
    let axis = PointCloud::singleton_1d(level, 0)?;
    gen_product(&[c, axis])
}

/// Largest depth `d` with `base^d <= 2^level`.
pub fn deepest_cantor_depth(base: u32, level: u32) -> u32 {
    let cap = BigInt::one() << level;
    let mut d = 0u32;
    let mut pow = BigInt::from(base);
    while pow <= cap {
        d += 1;
        pow *= base;
    }
    d
}

/// Fixed family of Cantor factor specs used when a target dimension must be
/// realized; `closest_factor_spec` picks the nearest achievable dimension.
pub const FACTOR_FAMILY: [(u32, u32, u32); 6] = [
    (1, 3, 2), // 0.6309
    (1, 4, 2), // 0.5
    (1, 5, 2), // 0.4307
    (1, 4, 3), // 0.7925
    (1, 5, 3), // 0.6826
    (1, 5, 4), // 0.8614
];

/// The family member (plus depth) whose dimension is closest to `s`, at the
/// deepest depth representable at `level`. `s = 1` maps to the full interval
/// (depth 0).
pub fn closest_factor_spec(s: f64, level: u32) -> Result<CantorSpec> {
    if !(0.0..=1.0).contains(&s) {
        return Err(DotlabError::InvalidSpec(format!(
            "factor dimension {s} outside [0, 1]"
        )));
    }
    if s >= 0.99 {
        return CantorSpec::new(1, 3, 2, 0); // depth 0 = unit interval
    }
    let mut best: Option<(f64, (u32, u32, u32))> = None;
    for &(rn, rd, b) in FACTOR_FAMILY.iter() {
        let dim = (b as f64).ln() / ((rd as f64) / (rn as f64)).ln();
        let err = (dim - s).abs();
        if best.map_or(true, |(e, _)| err < e) {
            best = Some((err, (rn, rd, b)));
        }
    }
    let (_, (rn, rd, b)) = best.unwrap();
    // deepest depth representable: pivot(depth) <= level
    let mut depth = 0u32;
    loop {
        let trial = CantorSpec::new(rn, rd, b, depth + 1)?;
        if trial.pivot_level() > level {
            break;
        }
        depth += 1;
        if depth > 64 {
            break;
        }
    }
    if depth == 0 {
        return Err(DotlabError::LevelTooCoarse {
            level,
            reason: "no Cantor depth fits this level".into(),
        });
    }
    CantorSpec::new(rn, rd, b, depth)
}

/// `k` parallel hyperplane slices with normal `e1`, each carrying an
/// `s`-dimensional Cantor product over the remaining coordinates. The radial
/// line through all slices is the `e1`-axis. Returns the union cloud and the
/// slice offsets (exact cell-center coordinates).
pub fn gen_slab_construction(
    n: usize,
    k: usize,
    s: f64,
    level: u32,
) -> Result<(PointCloud, Vec<f64>)> {
    let slices = slab_slices(n, k, s, level)?;
    let offsets: Vec<f64> = slices.iter().map(|(o, _)| *o).collect();
    let mut flat = Vec::new();
    for (_, cloud) in &slices {
        flat.extend_from_slice(cloud.cells_flat());
    }
    let cloud = PointCloud::from_flat(n, level, DEFAULT_BOUND, flat, None)?;
    Ok((cloud, offsets))
}

/// The slab slices individually: (offset coordinate, slice cloud).
///
/// Offsets are distinct cell centers just below 1, descending. Clustering
/// them keeps all pairwise offset products within a narrow band, which the
/// tree witness construction relies on.
pub fn slab_slices(n: usize, k: usize, s: f64, level: u32) -> Result<Vec<(f64, PointCloud)>> {
    if n < 2 {
        return Err(DotlabError::InvalidSpec("slab needs ambient n >= 2".into()));
    }
    if !(1..=8).contains(&k) {
        return Err(DotlabError::InvalidSpec("slab slice count k in 1..=8".into()));
    }
    if s > (n - 1) as f64 {
        return Err(DotlabError::InvalidSpec(format!(
            "slice dimension {s} exceeds n-1 = {}",
            n - 1
        )));
    }
    if s < 0.0 {
        return Err(DotlabError::InvalidSpec("slice dimension must be >= 0".into()));
    }
    let side = 1i64 << level;
    if (2 * k as i64) > side {
        return Err(DotlabError::LevelTooCoarse {
            level,
            reason: "not enough cells for distinct slice offsets".into(),
        });
    }
    // per-coordinate factor: dimension s/(n-1); s = 0 degenerates to one cell
    let factor = if s == 0.0 {
        PointCloud::singleton_1d(level, 0)?
    } else {
        let spec = closest_factor_spec(s / (n - 1) as f64, level)?;
        gen_cantor_1d(&spec, level)?
    };
    let scale = 0.5f64.powi(level as i32 + 1);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let x_idx = side - 1 - 2 * i as i64;
        let offset = (2 * x_idx + 1) as f64 * scale;
        let mut factors = vec![PointCloud::singleton_1d(level, x_idx)?];
        for _ in 1..n {
            factors.push(factor.clone());
        }
        let slice = gen_product(&factors)?;
        out.push((offset, slice));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_zero_is_unit_interval() {
        let spec = CantorSpec::new(1, 3, 2, 0).unwrap();
        let c = gen_cantor_1d(&spec, 6).unwrap();
        assert_eq!(c.cell_count(), 64);
        assert_eq!(c.cells().next().unwrap(), &[0]);
        assert_eq!(c.cells().last().unwrap(), &[63]);
    }

    #[test]
    fn overlapping_children_rejected() {
        assert!(CantorSpec::new(2, 5, 3, 1).is_err()); // 3 * 2/5 > 1
        assert!(CantorSpec::new(1, 3, 2, 1).is_ok());
    }

    #[test]
    fn too_coarse_level_rejected() {
        let spec = CantorSpec::new(1, 3, 2, 5).unwrap();
        assert_eq!(spec.pivot_level(), 8);
        assert!(gen_cantor_1d(&spec, 7).is_err());
        assert!(gen_cantor_1d(&spec, 8).is_ok());
    }

    #[test]
    fn middle_thirds_depth3_has_eight_intervals() {
        let spec = CantorSpec::new(1, 3, 2, 3).unwrap();
        let ivs = spec.intervals();
        assert_eq!(ivs.len(), 8);
        // left endpoints are p/27 with p in the classic ternary pattern
        let lefts: Vec<BigInt> = ivs
            .iter()
            .map(|(l, _)| (l * Rational::from_integer(27.into())).to_integer())
            .collect();
        assert_eq!(
            lefts,
            [0, 2, 6, 8, 18, 20, 24, 26]
                .iter()
                .map(|&p| BigInt::from(p))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn monotone_refinement_roundtrip() {
        // generating one level deeper and coarsening back is exact
        for spec in [
            CantorSpec::new(1, 3, 2, 4).unwrap(),
            CantorSpec::new(1, 4, 3, 3).unwrap(),
            CantorSpec::new(1, 5, 2, 3).unwrap(),
        ] {
            let m = spec.pivot_level() + 1;
            let fine = gen_cantor_1d(&spec, m + 1).unwrap();
            let coarse = gen_cantor_1d(&spec, m).unwrap();
            assert_eq!(fine.coarsen(m).unwrap(), coarse);
        }
    }

    #[test]
    fn determinism() {
        let spec = CantorSpec::new(1, 3, 2, 5).unwrap();
        let a = gen_cantor_1d(&spec, 10).unwrap();
        let b = gen_cantor_1d(&spec, 10).unwrap();
        assert_eq!(a, b);
        let r1 = PointCloud::random(2, 10, 500, 2, 42).unwrap();
        let r2 = PointCloud::random(2, 10, 500, 2, 42).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn product_counts_multiply() {
        let spec = CantorSpec::new(1, 3, 2, 3).unwrap();
        let c = gen_cantor_1d(&spec, 8).unwrap();
        let zero = PointCloud::singleton_1d(8, 0).unwrap();
        let line = gen_product(&[c.clone(), zero.clone()]).unwrap();
        assert_eq!(line.cell_count(), c.cell_count());
        assert!(line.cells().all(|cell| cell[1] == 0));
        let square = gen_product(&[c.clone(), c.clone()]).unwrap();
        assert_eq!(square.cell_count(), c.cell_count() * c.cell_count());
        let point = gen_product(&[zero.clone(), zero]).unwrap();
        assert_eq!(point.cell_count(), 1);
    }

    #[test]
    fn product_level_mismatch_rejected() {
        let spec = CantorSpec::new(1, 3, 2, 2).unwrap();
        let a = gen_cantor_1d(&spec, 8).unwrap();
        let b = gen_cantor_1d(&spec, 9).unwrap();
        assert!(gen_product(&[a, b]).is_err());
    }

    #[test]
    fn sharpness_line_on_axis() {
        let line = gen_sharpness_line(8).unwrap();
        assert_eq!(line.ambient_dim(), 2);
        assert!(line.cells().all(|c| c[1] == 0));
    }

    #[test]
    fn slab_offsets_distinct_in_unit_interval() {
        let (cloud, offsets) = gen_slab_construction(2, 3, 0.63, 8).unwrap();
        assert_eq!(offsets.len(), 3);
        for w in offsets.windows(2) {
            assert!(w[0] > w[1]);
        }
        assert!(offsets.iter().all(|&o| 0.0 < o && o <= 1.0));
        assert!(!cloud.is_empty());
        // s = 0 degenerates each slice to a single axis cell
        let (tiny, offs) = gen_slab_construction(2, 1, 0.0, 8).unwrap();
        assert_eq!(tiny.cell_count(), 1);
        assert_eq!(offs.len(), 1);
        // s > n-1 rejected
        assert!(gen_slab_construction(2, 2, 1.5, 8).is_err());
    }

    #[test]
    fn json_roundtrip_and_sorted_cells() {
        let spec = CantorSpec::new(1, 3, 2, 3).unwrap();
        let c = gen_cantor_1d(&spec, 8).unwrap();
        let sq = gen_product(&[c.clone(), c]).unwrap();
        let s = sq.to_json_string();
        let back = PointCloud::from_json_str(&s).unwrap();
        assert_eq!(back, sq);
        assert_eq!(back.to_json_string(), s);
        // sortedness is normative
        let cells: Vec<&[i64]> = sq.cells().collect();
        assert!(cells.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn weights_must_sum_to_one() {
        let cells = vec![vec![0i64], vec![1]];
        let cloud = PointCloud::new(1, 4, 2, cells).unwrap();
        assert!(cloud.clone().with_weights(vec![0.5, 0.5]).is_ok());
        assert!(cloud.clone().with_weights(vec![0.7, 0.5]).is_err());
        assert!(cloud.with_weights(vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn coarsen_merges_weights() {
        let cloud = PointCloud::new(1, 4, 2, vec![vec![0i64], vec![1], vec![2]])
            .unwrap()
            .with_weights(vec![0.25, 0.25, 0.5])
            .unwrap();
        let coarse = cloud.coarsen(3).unwrap();
        assert_eq!(coarse.cell_count(), 2);
        let w = coarse.weights().unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);
    }
}
