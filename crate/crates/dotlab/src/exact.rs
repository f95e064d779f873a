//! Exact rational points and the integer dot-product engine.
//!
//! Cell centers at level `m` are the dyadic rationals `(2c+1)/2^(m+1)`, so a
//! dot product against a rational pin reduces to integer arithmetic over one
//! shared denominator. That keeps sorting, deduplication and snapping exact,
//! which is what turns the scaling identity between dot-product sets and
//! orthogonal projections into a zero-tolerance test.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{DotlabError, Result};

pub type Rational = BigRational;

/// A point of `R^n` with exact rational coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Point {
    coords: Vec<Rational>,
}

impl Point {
    pub fn new(coords: Vec<Rational>) -> Self {
        Point { coords }
    }

    pub fn from_ints(v: &[i64]) -> Self {
        Point {
            coords: v.iter().map(|&x| Rational::from_integer(x.into())).collect(),
        }
    }

    /// Exact conversion: every finite f64 is a dyadic rational.
    pub fn from_f64s(v: &[f64]) -> Result<Self> {
        let coords = v
            .iter()
            .map(|&x| {
                Rational::from_float(x)
                    .ok_or_else(|| DotlabError::Precondition(format!("non-finite coordinate {x}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Point { coords })
    }

    /// Parses coordinates given as `num` or `num/den` strings.
    pub fn from_strs(v: &[&str]) -> Result<Self> {
        let coords = v
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Point { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn sub(&self, other: &Point) -> Point {
        assert_eq!(self.dim(), other.dim());
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn norm_sq(&self) -> Rational {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn norm_f64(&self) -> f64 {
        self.norm_sq().to_f64().unwrap_or(f64::NAN).sqrt()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.coords
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    /// Seeded random rational point with numerators in `[-num_bound, num_bound]`
    /// and denominators in `[1, den_bound]`.
    pub fn random<R: Rng>(n: usize, num_bound: i64, den_bound: i64, rng: &mut R) -> Self {
        let coords = (0..n)
            .map(|_| {
                let num = rng.gen_range(-num_bound..=num_bound);
                let den = rng.gen_range(1..=den_bound);
                Rational::new(num.into(), den.into())
            })
            .collect();
        Point { coords }
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num
            .trim()
            .parse()
            .map_err(|_| DotlabError::Format(format!("bad rational {s}")))?;
        let den: BigInt = den
            .trim()
            .parse()
            .map_err(|_| DotlabError::Format(format!("bad rational {s}")))?;
        if den.is_zero() {
            return Err(DotlabError::Format(format!("zero denominator in {s}")));
        }
        Ok(Rational::new(num, den))
    } else if let Some(dot) = s.find('.') {
        let (int_part, frac_part) = s.split_at(dot);
        let frac_part = &frac_part[1..];
        let digits = frac_part.len() as u32;
        let combined = format!("{int_part}{frac_part}");
        let num: BigInt = combined
            .parse()
            .map_err(|_| DotlabError::Format(format!("bad decimal {s}")))?;
        Ok(Rational::new(num, BigInt::from(10u32).pow(digits)))
    } else {
        let num: BigInt = s
            .parse()
            .map_err(|_| DotlabError::Format(format!("bad integer {s}")))?;
        Ok(Rational::from_integer(num))
    }
}

/// A finite set of rationals sharing one positive denominator.
///
/// `numerators` is sorted and deduplicated, so the represented real-number
/// set is canonical.
#[derive(Debug, Clone)]
pub struct ExactValues {
    pub numerators: Vec<BigInt>,
    pub denom: BigInt,
}

impl ExactValues {
    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    /// Dyadic snap: the level-`k` cell index of each value, `floor(v * 2^k)`.
    pub fn snap(&self, k: u32) -> Vec<i64> {
        let mut idx: Vec<i64> = self
            .numerators
            .iter()
            .map(|n| {
                let shifted: BigInt = n << k;
                shifted
                    .div_floor(&self.denom)
                    .to_i64()
                    .expect("snapped index exceeds i64")
            })
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// Set equality against independently computed reduced rationals
    /// (`other` must be sorted ascending and deduplicated).
    pub fn set_eq_rationals(&self, other: &[Rational]) -> bool {
        if self.numerators.len() != other.len() {
            return false;
        }
        self.numerators
            .iter()
            .zip(other)
            .all(|(n, r)| n * r.denom() == r.numer() * &self.denom)
    }

    /// Largest pointwise gap under the sorted matching, as f64. Sets of equal
    /// cardinality only; use for discrepancy reporting after `set_eq` checks.
    pub fn max_sorted_gap(&self, other: &[Rational]) -> f64 {
        self.numerators
            .iter()
            .zip(other)
            .map(|(n, r)| {
                let lhs = Rational::new(n.clone(), self.denom.clone());
                (lhs - r).abs().to_f64().unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        let d = self.denom.to_f64().unwrap_or(f64::NAN);
        self.numerators
            .iter()
            .map(|n| n.to_f64().unwrap_or(f64::NAN) / d)
            .collect()
    }
}

/// Exact values `v . center(c)` over the cells of a cloud, where `v` is a
/// rational vector and centers are `(2c+1)/2^(m+1)`.
///
/// All values share the denominator `q * 2^(m+1)` with `q` the lcm of the
/// coordinate denominators of `v`. An i128 fast path covers every realistic
/// pin; the BigInt path keeps the function total.
pub fn exact_dot_values(cells: &[i64], n: usize, level: u32, v: &Point) -> ExactValues {
    assert_eq!(v.dim(), n, "pin dimension must match cloud");
    let q: BigInt = v
        .coords()
        .iter()
        .fold(BigInt::from(1), |acc, c| acc.lcm(c.denom()));
    let p: Vec<BigInt> = v
        .coords()
        .iter()
        .map(|c| c.numer() * (&q / c.denom()))
        .collect();
    let denom: BigInt = &q << (level + 1);

    // i128 path if Σ |p_i| * 2^(level+2) can't overflow.
    let p_small: Option<Vec<i128>> = p.iter().map(|x| x.to_i128()).collect();
    let mut nums: Vec<BigInt> = if let Some(ps) = p_small.filter(|ps| {
        let sum_abs: i128 = ps.iter().fold(0i128, |a, &x| a.saturating_add(x.abs()));
        sum_abs < (i128::MAX >> (level + 3))
    }) {
        cells
            .chunks_exact(n)
            .map(|cell| {
                let acc: i128 = cell
                    .iter()
                    .zip(&ps)
                    .map(|(&c, &pi)| pi * (2 * c as i128 + 1))
                    .sum();
                BigInt::from(acc)
            })
            .collect()
    } else {
        cells
            .chunks_exact(n)
            .map(|cell| {
                cell.iter()
                    .zip(&p)
                    .map(|(&c, pi)| pi * BigInt::from(2 * c + 1))
                    .sum()
            })
            .collect()
    };
    nums.sort_unstable();
    nums.dedup();
    ExactValues {
        numerators: nums,
        denom,
    }
}

/// Independent route to the same values: per-cell reduced rationals, sorted
/// and deduplicated. Used as the second leg of exact cross-checks.
pub fn exact_dot_values_reduced(cells: &[i64], n: usize, level: u32, v: &Point) -> Vec<Rational> {
    let half = Rational::new(BigInt::from(1), BigInt::from(1) << (level + 1));
    let mut vals: Vec<Rational> = cells
        .chunks_exact(n)
        .map(|cell| {
            cell.iter()
                .zip(v.coords())
                .map(|(&c, vi)| vi * BigInt::from(2 * c + 1) * &half)
                .sum()
        })
        .collect();
    vals.sort_unstable();
    vals.dedup();
    vals
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn f64_conversion_is_exact() {
        let p = Point::from_f64s(&[0.5, 0.25, -1.5]).unwrap();
        assert_eq!(p.coords()[0], Rational::new(1.into(), 2.into()));
        assert_eq!(p.coords()[2], Rational::new((-3).into(), 2.into()));
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("3/4").unwrap(), Rational::new(3.into(), 4.into()));
        assert_eq!(parse_rational("-2").unwrap(), Rational::from_integer((-2).into()));
        assert_eq!(parse_rational("1.5").unwrap(), Rational::new(3.into(), 2.into()));
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn dot_engine_matches_reduced_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 3;
        let level = 6;
        let cells: Vec<i64> = (0..60).map(|_| rng.gen_range(-100..100)).collect();
        let v = Point::random(n, 500, 64, &mut rng);
        let fast = exact_dot_values(&cells, n, level, &v);
        let slow = exact_dot_values_reduced(&cells, n, level, &v);
        assert!(fast.set_eq_rationals(&slow));
        assert!(fast.max_sorted_gap(&slow) == 0.0);
    }

    #[test]
    fn snap_uses_floor_semantics() {
        // values {-1/4, 1/4}: at level 1 (cells of width 1/2) indices are -1 and 0.
        let ev = ExactValues {
            numerators: vec![BigInt::from(-1), BigInt::from(1)],
            denom: BigInt::from(4),
        };
        assert_eq!(ev.snap(1), vec![-1, 0]);
    }

    #[test]
    fn bigint_fallback_agrees() {
        let cells: Vec<i64> = vec![3, -5, 7, 11, 0, -2];
        // huge numerators force the BigInt path
        let big: BigInt = BigInt::from(1i64) << 100;
        let v = Point::new(vec![
            Rational::new(big.clone(), 3.into()),
            Rational::new(-&big, 7.into()),
        ]);
        let got = exact_dot_values(&cells, 2, 4, &v);
        let slow = exact_dot_values_reduced(&cells, 2, 4, &v);
        assert!(got.set_eq_rationals(&slow));
    }
}
