//! Deterministic cap grids on the unit sphere.
//!
//! The gridding rule is fixed and documented because exceptional-set
//! dimensions are measured by cap counting against this exact partition:
//!
//! * `n = 2`: `2^(level+2)` uniform angular bins over `[0, 2pi)`.
//! * `n = 3`: `2^level` latitude bands of equal polar width; band `b`
//!   carries `max(4, 4 * round(2^(level-1) * sin(theta_mid)))` longitude
//!   bins, so the total is about `2^(2*level)` caps of comparable area.
//!
//! Longitude counts are multiples of 4 and band sines are mirrored exactly,
//! so quarter turns about `e3`, the flip `z -> -z`, and the rotation by `pi`
//! in the `(x,y)`-plane act on cap centers bitwise exactly.
//!
//! Antipodal caps are merged through `canonical` when directions are used to
//! classify orthogonal projections (projections along `theta` and `-theta`
//! agree up to reflection); radial direction sets keep the full sphere.

use serde::{Deserialize, Serialize};

use crate::error::{DotlabError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    n: usize,
    level: u32,
    /// n = 3 only: longitude bin count per band and cumulative offsets.
    lon_counts: Vec<u64>,
    offsets: Vec<u64>,
}

impl SphereGrid {
    pub fn new(n: usize, level: u32) -> Result<SphereGrid> {
        match n {
            2 => {
                if level > 28 {
                    return Err(DotlabError::InvalidSpec("sphere grid level too deep".into()));
                }
                Ok(SphereGrid {
                    n,
                    level,
                    lon_counts: Vec::new(),
                    offsets: Vec::new(),
                })
            }
            3 => {
                if !(1..=13).contains(&level) {
                    return Err(DotlabError::InvalidSpec(
                        "n = 3 sphere grid needs level in 1..=13".into(),
                    ));
                }
                let bands = 1u64 << level;
                let mut lon_counts = Vec::with_capacity(bands as usize);
                let half = bands as usize / 2;
                // sin(theta) is symmetric under the band mirror; compute the
                // upper half and reuse the values exactly.
                let mut upper = Vec::with_capacity(half);
                for b in 0..half {
                    let theta_mid = (b as f64 + 0.5) * std::f64::consts::PI / bands as f64;
                    let target = (0.5 * (1u64 << level) as f64) * theta_mid.sin();
                    upper.push(4 * (target.round() as u64).max(1));
                }
                for b in 0..bands as usize {
                    let src = if b < half { b } else { bands as usize - 1 - b };
                    lon_counts.push(upper[src]);
                }
                let mut offsets = Vec::with_capacity(bands as usize + 1);
                let mut acc = 0u64;
                offsets.push(0);
                for &c in &lon_counts {
                    acc += c;
                    offsets.push(acc);
                }
                Ok(SphereGrid {
                    n,
                    level,
                    lon_counts,
                    offsets,
                })
            }
            _ => Err(DotlabError::InvalidSpec(format!(
                "sphere grid supports n = 2 or 3, got {n}"
            ))),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Total caps on the full sphere.
    pub fn cap_count(&self) -> u64 {
        match self.n {
            2 => 1u64 << (self.level + 2),
            _ => *self.offsets.last().unwrap(),
        }
    }

    /// Caps after antipodal identification.
    pub fn canonical_cap_count(&self) -> u64 {
        self.cap_count() / 2
    }

    /// Cap of a (not necessarily unit) nonzero vector. Scale invariant.
    pub fn cap_of(&self, v: &[f64]) -> u64 {
        debug_assert_eq!(v.len(), self.n);
        match self.n {
            2 => {
                let bins = self.cap_count();
                let mut angle = v[1].atan2(v[0]);
                if angle < 0.0 {
                    angle += 2.0 * std::f64::consts::PI;
                }
                let b = (angle / (2.0 * std::f64::consts::PI) * bins as f64) as u64;
                b.min(bins - 1)
            }
            _ => {
                let bands = 1u64 << self.level;
                let rho = v[0].hypot(v[1]);
                let polar = rho.atan2(v[2]); // in [0, pi]
                let band = ((polar / std::f64::consts::PI * bands as f64) as u64).min(bands - 1);
                let lcount = self.lon_counts[band as usize];
                let mut lon = v[1].atan2(v[0]);
                if lon < 0.0 {
                    lon += 2.0 * std::f64::consts::PI;
                }
                let bin =
                    ((lon / (2.0 * std::f64::consts::PI) * lcount as f64) as u64).min(lcount - 1);
                self.offsets[band as usize] + bin
            }
        }
    }

    /// Unit vector at the cap center. Built so that exact symmetries of the
    /// grid act bitwise exactly on the set of centers.
    pub fn cap_center(&self, cap: u64) -> Vec<f64> {
        match self.n {
            2 => {
                let bins = self.cap_count();
                debug_assert!(cap < bins);
                let quarter = bins / 4;
                let (q, b) = (cap / quarter, cap % quarter);
                let w = 2.0 * std::f64::consts::PI / bins as f64;
                let angle = (b as f64 + 0.5) * w;
                let (x, y) = (angle.cos(), angle.sin());
                match q {
                    0 => vec![x, y],
                    1 => vec![-y, x],
                    2 => vec![-x, -y],
                    _ => vec![y, -x],
                }
            }
            _ => {
                let (band, bin) = self.split(cap);
                let bands = 1u64 << self.level;
                let half = bands / 2;
                // mirror the polar trig exactly across the equator
                let b_src = if band < half { band } else { bands - 1 - band };
                let theta = (b_src as f64 + 0.5) * std::f64::consts::PI / bands as f64;
                let (sin_t, cos_t) = (theta.sin(), theta.cos());
                let cos_t = if band < half { cos_t } else { -cos_t };
                let lcount = self.lon_counts[band as usize];
                let quarter = lcount / 4;
                let (q, j) = (bin / quarter, bin % quarter);
                let phi = (j as f64 + 0.5) * 2.0 * std::f64::consts::PI / lcount as f64;
                let (c, s) = (phi.cos(), phi.sin());
                let (x, y) = match q {
                    0 => (c, s),
                    1 => (-s, c),
                    2 => (-c, -s),
                    _ => (s, -c),
                };
                vec![sin_t * x, sin_t * y, cos_t]
            }
        }
    }

    fn split(&self, cap: u64) -> (u64, u64) {
        debug_assert_eq!(self.n, 3);
        let band = match self.offsets.binary_search(&cap) {
            Ok(b) => b as u64,
            Err(b) => b as u64 - 1,
        };
        (band, cap - self.offsets[band as usize])
    }

    /// The cap containing `-v` for a vector in the given cap. Exact integer
    /// involution, no floating point.
    pub fn antipodal(&self, cap: u64) -> u64 {
        match self.n {
            2 => {
                let bins = self.cap_count();
                (cap + bins / 2) % bins
            }
            _ => {
                let (band, bin) = self.split(cap);
                let bands = 1u64 << self.level;
                let mband = bands - 1 - band;
                let lcount = self.lon_counts[band as usize];
                debug_assert_eq!(lcount, self.lon_counts[mband as usize]);
                let mbin = (bin + lcount / 2) % lcount;
                self.offsets[mband as usize] + mbin
            }
        }
    }

    /// Representative of the antipodal pair: the smaller index.
    pub fn canonical(&self, cap: u64) -> u64 {
        cap.min(self.antipodal(cap))
    }

    pub fn is_canonical(&self, cap: u64) -> bool {
        cap <= self.antipodal(cap)
    }

    /// All canonical caps, ascending.
    pub fn canonical_caps(&self) -> Vec<u64> {
        (0..self.cap_count()).filter(|&c| self.is_canonical(c)).collect()
    }

    /// Approximate angular diameter of a cap (used for stability margins).
    pub fn cap_width(&self) -> f64 {
        match self.n {
            2 => 2.0 * std::f64::consts::PI / self.cap_count() as f64,
            _ => std::f64::consts::PI / (1u64 << self.level) as f64,
        }
    }
}

/// A unit direction with its cap identity on a declared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    vector: Vec<f64>,
    cap: u64,
    grid_level: u32,
}

/// Tolerance on |v| for direction vectors.
pub const NORM_TOLERANCE: f64 = 1.0 / (1u64 << 40) as f64;

impl Direction {
    /// Normalizes `v` and snaps it on `grid`.
    pub fn from_vector(v: &[f64], grid: &SphereGrid) -> Result<Direction> {
        if v.len() != grid.ambient_dim() {
            return Err(DotlabError::DimensionMismatch {
                expected: grid.ambient_dim(),
                got: v.len(),
            });
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(DotlabError::Precondition("zero or non-finite direction".into()));
        }
        let vector: Vec<f64> = v.iter().map(|x| x / norm).collect();
        let cap = grid.cap_of(&vector);
        Ok(Direction {
            vector,
            cap,
            grid_level: grid.level(),
        })
    }

    /// The center direction of a cap.
    pub fn cap_representative(cap: u64, grid: &SphereGrid) -> Direction {
        Direction {
            vector: grid.cap_center(cap),
            cap,
            grid_level: grid.level(),
        }
    }

    pub fn axis(axis: usize, grid: &SphereGrid) -> Result<Direction> {
        let mut v = vec![0.0; grid.ambient_dim()];
        if axis >= v.len() {
            return Err(DotlabError::Precondition(format!("axis {axis} out of range")));
        }
        v[axis] = 1.0;
        Direction::from_vector(&v, grid)
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn grid_level(&self) -> u32 {
        self.grid_level
    }

    pub fn norm_error(&self) -> f64 {
        (self.vector.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_grid_bin_arithmetic() {
        let g = SphereGrid::new(2, 3).unwrap();
        assert_eq!(g.cap_count(), 32);
        assert_eq!(g.canonical_cap_count(), 16);
        // e1 sits in bin 0, e2 a quarter of the way around
        assert_eq!(g.cap_of(&[1.0, 0.0]), 0);
        assert_eq!(g.cap_of(&[0.0, 1.0]), 8);
        assert_eq!(g.antipodal(0), 16);
        assert_eq!(g.canonical(16), 0);
    }

    #[test]
    fn cap_of_is_scale_invariant() {
        let g = SphereGrid::new(3, 4).unwrap();
        let v = [0.3, -0.4, 0.85];
        let scaled: Vec<f64> = v.iter().map(|x| x * 7.5).collect();
        assert_eq!(g.cap_of(&v), g.cap_of(&scaled));
    }

    #[test]
    fn centers_land_in_their_caps() {
        for grid in [SphereGrid::new(2, 5).unwrap(), SphereGrid::new(3, 4).unwrap()] {
            for cap in 0..grid.cap_count() {
                let c = grid.cap_center(cap);
                assert_eq!(grid.cap_of(&c), cap, "center of cap {cap} drifted");
                let norm: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn antipodal_is_an_involution_without_fixed_points() {
        for grid in [SphereGrid::new(2, 4).unwrap(), SphereGrid::new(3, 3).unwrap()] {
            for cap in 0..grid.cap_count() {
                let a = grid.antipodal(cap);
                assert_ne!(a, cap);
                assert_eq!(grid.antipodal(a), cap);
                // and it really is the cap of the negated center
                let c = grid.cap_center(cap);
                let neg: Vec<f64> = c.iter().map(|x| -x).collect();
                assert_eq!(grid.cap_of(&neg), a);
            }
            assert_eq!(
                grid.canonical_caps().len() as u64,
                grid.canonical_cap_count()
            );
        }
    }

    #[test]
    fn snapping_stable_under_small_perturbations() {
        // a vector within half a cap width of a center keeps the center's cap
        let g2 = SphereGrid::new(2, 6).unwrap();
        let w = g2.cap_width();
        for cap in (0..g2.cap_count()).step_by(7) {
            let c = g2.cap_center(cap);
            for sign in [-1.0, 1.0] {
                let d = sign * 0.49 * w;
                let (cs, sn) = (d.cos(), d.sin());
                let v = [c[0] * cs - c[1] * sn, c[0] * sn + c[1] * cs];
                assert_eq!(g2.cap_of(&v), cap);
            }
        }
        let g3 = SphereGrid::new(3, 5).unwrap();
        for cap in (0..g3.cap_count()).step_by(97) {
            let c = g3.cap_center(cap);
            // perturb only the polar angle by just under half a band width
            let rho = c[0].hypot(c[1]);
            let polar = rho.atan2(c[2]);
            let d = 0.49 * g3.cap_width();
            for sign in [-1.0, 1.0] {
                let p = polar + sign * d;
                if !(0.0..=std::f64::consts::PI).contains(&p) {
                    continue;
                }
                let scale = if rho > 0.0 { p.sin() / rho } else { 0.0 };
                let v = [c[0] * scale, c[1] * scale, p.cos()];
                assert_eq!(g3.cap_of(&v), cap);
            }
        }
    }

    #[test]
    fn quarter_turn_permutes_planar_centers_bitwise() {
        let g = SphereGrid::new(2, 5).unwrap();
        let quarter = g.cap_count() / 4;
        for cap in 0..g.cap_count() {
            let c = g.cap_center(cap);
            let rot = [-c[1], c[0]];
            let c2 = g.cap_center((cap + quarter) % g.cap_count());
            assert_eq!(rot[0], c2[0]);
            assert_eq!(rot[1], c2[1]);
        }
    }

    #[test]
    fn z_flip_mirrors_lat_lon_centers_bitwise() {
        let g = SphereGrid::new(3, 4).unwrap();
        for cap in 0..g.cap_count() {
            let c = g.cap_center(cap);
            let (band, bin) = g.split(cap);
            let bands = 1u64 << g.level();
            let mirrored = g.offsets[(bands - 1 - band) as usize] + bin;
            let m = g.cap_center(mirrored);
            assert_eq!(m[0], c[0]);
            assert_eq!(m[1], c[1]);
            assert_eq!(m[2], -c[2]);
        }
    }

    #[test]
    fn direction_normalizes_and_requires_matching_dim() {
        let g = SphereGrid::new(2, 4).unwrap();
        let d = Direction::from_vector(&[3.0, 4.0], &g).unwrap();
        assert!(d.norm_error() < NORM_TOLERANCE);
        assert!((d.vector()[0] - 0.6).abs() < 1e-15);
        assert!(Direction::from_vector(&[0.0, 0.0], &g).is_err());
        assert!(Direction::from_vector(&[1.0, 0.0, 0.0], &g).is_err());
    }
}
