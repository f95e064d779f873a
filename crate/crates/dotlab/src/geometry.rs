//! Orthogonal and radial projections, pinned dot-product sets, hyperplane
//! families, and sphere curves.
//!
//! The central identity: for `a != x` the dot-product set
//! `{(a-x).y : y in A}` equals `|a-x|` times the coordinate set of the
//! orthogonal projection of `A` onto the direction `(a-x)/|a-x|`. With
//! rational pins and dyadic cell centers both sides are exact rational sets,
//! so `key_lemma_check` verifies the identity with zero tolerance before
//! snapping and within one output cell after snapping.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{DotlabError, Result};
use crate::exact::{exact_dot_values, exact_dot_values_reduced, ExactValues, Point, Rational};
use crate::pointcloud::PointCloud;
use crate::sphere::{Direction, SphereGrid};

/// A finite set of level-`m` dyadic cells on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSet {
    level: u32,
    /// Sorted, deduplicated cell indices.
    cells: Vec<i64>,
    bound: f64,
}

impl ScalarSet {
    pub fn from_indices(level: u32, mut cells: Vec<i64>) -> ScalarSet {
        cells.sort_unstable();
        cells.dedup();
        let bound = cells
            .iter()
            .map(|&c| (c.abs() + 1) as f64 * 0.5f64.powi(level as i32))
            .fold(0.0, f64::max);
        ScalarSet { level, cells, bound }
    }

    /// Snaps real values to level-`level` cells (`floor(v * 2^level)`).
    pub fn from_values_f64(level: u32, values: &[f64]) -> ScalarSet {
        let scale = (1u64 << level.min(62)) as f64;
        let cells = values.iter().map(|v| (v * scale).floor() as i64).collect();
        ScalarSet::from_indices(level, cells)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn cells(&self) -> &[i64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn centers_f64(&self) -> Vec<f64> {
        let scale = 0.5f64.powi(self.level as i32 + 1);
        self.cells.iter().map(|&c| (2 * c + 1) as f64 * scale).collect()
    }

    /// Longest run of consecutive cell indices.
    pub fn longest_run(&self) -> u64 {
        let mut best = 0u64;
        let mut run = 0u64;
        let mut prev: Option<i64> = None;
        for &c in &self.cells {
            run = match prev {
                Some(p) if c == p + 1 => run + 1,
                _ => 1,
            };
            best = best.max(run);
            prev = Some(c);
        }
        best
    }

    /// Same JSON envelope as clouds, with ambient dimension 1.
    pub fn to_json_string(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let _ = write!(
            s,
            "{{\"ambient_dim\":1,\"level\":{},\"bound\":{},\"cells\":[",
            self.level, self.bound
        );
        for (i, c) in self.cells.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "[{c}]");
        }
        s.push_str("]}");
        s
    }

    pub fn from_json_str(s: &str) -> Result<ScalarSet> {
        #[derive(Deserialize)]
        struct Raw {
            ambient_dim: usize,
            level: u32,
            cells: Vec<Vec<i64>>,
        }
        let raw: Raw = serde_json::from_str(s)?;
        if raw.ambient_dim != 1 {
            return Err(DotlabError::DimensionMismatch {
                expected: 1,
                got: raw.ambient_dim,
            });
        }
        let cells = raw
            .cells
            .iter()
            .map(|c| {
                if c.len() == 1 {
                    Ok(c[0])
                } else {
                    Err(DotlabError::Format("scalar cell must be a 1-tuple".into()))
                }
            })
            .collect::<Result<Vec<i64>>>()?;
        Ok(ScalarSet::from_indices(raw.level, cells))
    }
}

/// Hyperplane `{ y : normal . y = offset }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Direction,
    pub offset: f64,
}

// ----------------------------------------------------------------------
// projections and dot-product sets
// ----------------------------------------------------------------------

/// Scalar projection indices of all cell centers onto `theta` at the cloud's
/// native level. The raw per-cell buffer (not deduplicated): hot path for
/// direction scans.
pub fn project_indices(centers: &[f64], n: usize, theta: &[f64], level: u32) -> Vec<i64> {
    let scale = (1u64 << level) as f64;
    centers
        .chunks_exact(n)
        .map(|y| {
            let v: f64 = y.iter().zip(theta).map(|(a, b)| a * b).sum();
            (v * scale).floor() as i64
        })
        .collect()
}

/// Coordinate set of `P_theta(A)` on the line through the origin in
/// direction `theta`, snapped at the cloud's level.
pub fn orthogonal_project(a: &PointCloud, theta: &Direction) -> Result<ScalarSet> {
    if theta.vector().len() != a.ambient_dim() {
        return Err(DotlabError::DimensionMismatch {
            expected: a.ambient_dim(),
            got: theta.vector().len(),
        });
    }
    let centers = a.centers_flat_f64();
    let idx = project_indices(&centers, a.ambient_dim(), theta.vector(), a.level());
    Ok(ScalarSet::from_indices(a.level(), idx))
}

/// Exact scalar products `{v . y : y cell center}` (unsnapped), plus `v . v`.
/// As real numbers the projection coordinates are these values divided by
/// `sqrt(v . v)`; scaling by `|v|` recovers the rational values exactly.
pub fn orthogonal_project_exact(a: &PointCloud, v: &Point) -> Result<(Vec<Rational>, Rational)> {
    if v.dim() != a.ambient_dim() {
        return Err(DotlabError::DimensionMismatch {
            expected: a.ambient_dim(),
            got: v.dim(),
        });
    }
    let vals = exact_dot_values_reduced(a.cells_flat(), a.ambient_dim(), a.level(), v);
    Ok((vals, v.norm_sq()))
}

/// Exact dot-product values `{(a-x) . y}` over cell centers, unsnapped.
pub fn dot_values_exact(cloud: &PointCloud, a: &Point, x: &Point) -> Result<ExactValues> {
    if a.dim() != cloud.ambient_dim() || x.dim() != cloud.ambient_dim() {
        return Err(DotlabError::DimensionMismatch {
            expected: cloud.ambient_dim(),
            got: a.dim().max(x.dim()),
        });
    }
    let v = a.sub(x);
    Ok(exact_dot_values(
        cloud.cells_flat(),
        cloud.ambient_dim(),
        cloud.level(),
        &v,
    ))
}

/// The pinned dot-product set `{(a-x) . y : y in A}` snapped to level-`m`
/// cells. Exact arithmetic throughout; `a = x` gives `{0}`.
pub fn dot_product_set(cloud: &PointCloud, a: &Point, x: &Point) -> Result<ScalarSet> {
    let vals = dot_values_exact(cloud, a, x)?;
    if vals.is_empty() {
        return Ok(ScalarSet::from_indices(cloud.level(), Vec::new()));
    }
    Ok(ScalarSet::from_indices(cloud.level(), vals.snap(cloud.level())))
}

#[derive(Debug, Clone, Serialize)]
pub struct KeyLemmaReport {
    /// `|a - x|`.
    pub scale_factor: f64,
    /// Exact set equality of the dot-product values against the scaled
    /// projection values, verified in rational arithmetic.
    pub exact_equal: bool,
    /// Max elementwise gap on the exact path (0 when `exact_equal`).
    pub exact_discrepancy: f64,
    /// Hausdorff distance between snapped dot-product centers and the scaled
    /// snapped projection centers.
    pub snapped_discrepancy: f64,
    /// A priori bound for the snapped discrepancy: `(1 + |a-x|) * 2^-(m+1)`.
    pub snapped_bound: f64,
}

/// Verifies `dot_product_set(A, a, x) = |a-x| * P_{pi_x(a)}(A)` as sets.
///
/// The two sides are computed by independent code paths (the shared-
/// denominator integer engine against per-cell reduced rationals). Exact
/// equality is required before snapping; after snapping the sets agree to
/// within one output cell on each side.
pub fn key_lemma_check(cloud: &PointCloud, a: &Point, x: &Point) -> Result<KeyLemmaReport> {
    let v = a.sub(x);
    if v.is_zero() {
        return Err(DotlabError::Precondition(
            "key lemma requires a != x".into(),
        ));
    }
    let scale = v.norm_f64();

    // exact path
    let dots = dot_values_exact(cloud, a, x)?;
    let (proj_vals, _norm_sq) = orthogonal_project_exact(cloud, &v)?;
    let exact_equal = dots.set_eq_rationals(&proj_vals);
    let exact_discrepancy = if exact_equal {
        0.0
    } else if dots.len() == proj_vals.len() {
        dots.max_sorted_gap(&proj_vals)
    } else {
        f64::INFINITY
    };

    // snapped path
    let pi = Direction::from_vector(&v.to_f64_vec(), &SphereGrid::new(cloud.ambient_dim(), 4)?)?;
    let snapped_dots = dot_product_set(cloud, a, x)?;
    let snapped_proj = orthogonal_project(cloud, &pi)?;
    let lhs = snapped_dots.centers_f64();
    let rhs: Vec<f64> = snapped_proj.centers_f64().iter().map(|c| c * scale).collect();
    let snapped_discrepancy = hausdorff_1d(&lhs, &rhs);
    let snapped_bound = (1.0 + scale) * 0.5f64.powi(cloud.level() as i32 + 1);

    Ok(KeyLemmaReport {
        scale_factor: scale,
        exact_equal,
        exact_discrepancy,
        snapped_discrepancy,
        snapped_bound,
    })
}

/// Hausdorff distance of two sorted finite sets of reals.
fn hausdorff_1d(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let one_sided = |from: &[f64], to: &[f64]| -> f64 {
        from.iter()
            .map(|&p| {
                let i = to.partition_point(|&q| q < p);
                let mut best = f64::INFINITY;
                if i < to.len() {
                    best = best.min((to[i] - p).abs());
                }
                if i > 0 {
                    best = best.min((p - to[i - 1]).abs());
                }
                best
            })
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// One hyperplane per element of the dot-product set: normal `pi_x(a)`,
/// offset `alpha / |a-x|`. The map `alpha -> hyperplane` is injective.
pub fn hyperplane_family(cloud: &PointCloud, a: &Point, x: &Point) -> Result<Vec<Hyperplane>> {
    let v = a.sub(x);
    if v.is_zero() {
        return Err(DotlabError::Precondition(
            "hyperplane family requires a != x".into(),
        ));
    }
    let grid = SphereGrid::new(cloud.ambient_dim(), 4)?;
    let normal = Direction::from_vector(&v.to_f64_vec(), &grid)?;
    let scale = v.norm_f64();
    let alphas = dot_values_exact(cloud, a, x)?;
    Ok(alphas
        .to_f64s()
        .into_iter()
        .map(|alpha| Hyperplane {
            normal: normal.clone(),
            offset: alpha / scale,
        })
        .collect())
}

/// The cell of `x` on the cloud's lattice, if representable.
fn cell_of_point(x: &Point, level: u32) -> Option<Vec<i64>> {
    x.coords()
        .iter()
        .map(|c| {
            let scaled = c * Rational::from_integer(num_bigint::BigInt::from(1) << level);
            scaled.floor().to_integer().to_i64()
        })
        .collect()
}

/// Radial projection `pi_x(A)`: directions `(y - x)/|y - x|` over cell
/// centers, snapped to sphere caps, one representative per cap. The cell
/// containing `x` is excluded.
pub fn radial_project(cloud: &PointCloud, x: &Point, grid: &SphereGrid) -> Result<Vec<Direction>> {
    if x.dim() != cloud.ambient_dim() || grid.ambient_dim() != cloud.ambient_dim() {
        return Err(DotlabError::DimensionMismatch {
            expected: cloud.ambient_dim(),
            got: x.dim(),
        });
    }
    let caps = radial_cap_per_cell(cloud, x, grid)?;
    let mut seen = std::collections::BTreeMap::new();
    let n = cloud.ambient_dim();
    let xf = x.to_f64_vec();
    let centers = cloud.centers_flat_f64();
    for (i, cap) in caps.iter().enumerate() {
        let Some(cap) = cap else { continue };
        seen.entry(*cap).or_insert_with(|| {
            let y = &centers[i * n..(i + 1) * n];
            let d: Vec<f64> = y.iter().zip(&xf).map(|(a, b)| a - b).collect();
            Direction::from_vector(&d, grid).expect("nonzero by cell exclusion")
        });
    }
    Ok(seen.into_values().collect())
}

/// Per-cell radial cap indices (`None` for the cell containing `x`).
pub fn radial_cap_per_cell(
    cloud: &PointCloud,
    x: &Point,
    grid: &SphereGrid,
) -> Result<Vec<Option<u64>>> {
    let n = cloud.ambient_dim();
    let x_cell = cell_of_point(x, cloud.level());
    let xf = x.to_f64_vec();
    let centers = cloud.centers_flat_f64();
    let out = cloud
        .cells()
        .enumerate()
        .map(|(i, cell)| {
            if let Some(xc) = &x_cell {
                if xc[..] == *cell {
                    return None;
                }
            }
            let y = &centers[i * n..(i + 1) * n];
            let d: Vec<f64> = y.iter().zip(&xf).map(|(a, b)| a - b).collect();
            Some(grid.cap_of(&d))
        })
        .collect();
    Ok(out)
}

/// Sorted distinct radial caps of `pi_x(A)`.
pub fn radial_caps(cloud: &PointCloud, x: &Point, grid: &SphereGrid) -> Result<Vec<u64>> {
    let mut caps: Vec<u64> = radial_cap_per_cell(cloud, x, grid)?
        .into_iter()
        .flatten()
        .collect();
    caps.sort_unstable();
    caps.dedup();
    Ok(caps)
}

// ----------------------------------------------------------------------
// sphere curves
// ----------------------------------------------------------------------

/// A sampled curve on the unit sphere. Samples live on a dense uniform grid
/// of spacing `h = 1/(4N)`; every fourth sample is a principal parameter
/// (the `N+1` points used for cap membership and pin selection), the rest
/// feed the derivative stencils.
#[derive(Debug, Clone)]
pub struct SphereCurve {
    n: usize,
    h: f64,
    /// Flattened samples, stride `n`, at parameters `0, h, 2h, ..., 1`.
    samples: Vec<f64>,
}

pub const PRINCIPAL_STRIDE: usize = 4;

impl SphereCurve {
    /// Samples `f` (assumed to map into the unit sphere) on the dense grid.
    pub fn from_fn<F: Fn(f64) -> Vec<f64>>(n: usize, segments: usize, f: F) -> Result<SphereCurve> {
        if segments < 16 {
            return Err(DotlabError::Precondition(
                "curve needs at least 16 parameter segments".into(),
            ));
        }
        let dense = PRINCIPAL_STRIDE * segments;
        let h = 1.0 / dense as f64;
        let mut samples = Vec::with_capacity((dense + 1) * n);
        for i in 0..=dense {
            let v = f(i as f64 * h);
            if v.len() != n {
                return Err(DotlabError::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(DotlabError::Precondition(format!(
                    "curve sample at t = {} has norm {norm}",
                    i as f64 * h
                )));
            }
            samples.extend(v);
        }
        Ok(SphereCurve { n, h, samples })
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn stencil_width(&self) -> f64 {
        self.h
    }

    pub fn dense_len(&self) -> usize {
        self.samples.len() / self.n
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.n..(i + 1) * self.n]
    }

    /// The `(t, gamma(t))` pairs at the principal parameters.
    pub fn principal_samples(&self) -> Vec<(f64, &[f64])> {
        (0..self.dense_len())
            .step_by(PRINCIPAL_STRIDE)
            .map(|i| (i as f64 * self.h, self.sample(i)))
            .collect()
    }
}

/// The non-degenerate lifted circle `t -> (cos 2 pi t, sin 2 pi t, 1)/sqrt 2`.
pub fn lifted_circle_curve(segments: usize) -> Result<SphereCurve> {
    let s = 0.5f64.sqrt();
    SphereCurve::from_fn(3, segments, |t| {
        let a = 2.0 * std::f64::consts::PI * t;
        vec![s * a.cos(), s * a.sin(), s]
    })
}

/// `|det[gamma, gamma', gamma'']|` of the lifted circle, exact constant:
/// `(2 pi)^3 / (2 sqrt 2) = 2 sqrt 2 pi^3`.
pub fn lifted_circle_det_constant() -> f64 {
    2.0 * 2.0f64.sqrt() * std::f64::consts::PI.powi(3)
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyReport {
    pub min_abs_det: f64,
    pub max_abs_det: f64,
    pub pass: bool,
}

pub const NONDEGENERACY_THRESHOLD: f64 = 1e-6;

/// Central finite-difference estimate of `det[gamma, gamma^(1), ...,
/// gamma^(n-1)]` over the dense grid; passes when the determinant stays
/// bounded away from zero.
pub fn nondegeneracy_check(curve: &SphereCurve) -> Result<NondegeneracyReport> {
    let n = curve.n;
    if !(2..=3).contains(&n) {
        return Err(DotlabError::Precondition(
            "nondegeneracy check supports n = 2 or 3".into(),
        ));
    }
    let len = curve.dense_len();
    if len < 3 {
        return Err(DotlabError::Precondition(
            "too few samples for the derivative stencil".into(),
        ));
    }
    let h = curve.h;
    let mut min_det = f64::INFINITY;
    let mut max_det = 0.0f64;
    for i in 1..len - 1 {
        let g = curve.sample(i);
        let prev = curve.sample(i - 1);
        let next = curve.sample(i + 1);
        let d1: Vec<f64> = (0..n).map(|j| (next[j] - prev[j]) / (2.0 * h)).collect();
        let det = if n == 2 {
            g[0] * d1[1] - g[1] * d1[0]
        } else {
            let d2: Vec<f64> = (0..n)
                .map(|j| (next[j] - 2.0 * g[j] + prev[j]) / (h * h))
                .collect();
            det3(g, &d1, &d2)
        };
        let a = det.abs();
        min_det = min_det.min(a);
        max_det = max_det.max(a);
    }
    Ok(NondegeneracyReport {
        min_abs_det: min_det,
        max_abs_det: max_det,
        pass: min_det > NONDEGENERACY_THRESHOLD,
    })
}

fn det3(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}
