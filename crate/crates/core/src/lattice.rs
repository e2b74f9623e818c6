//! Geometry of the hypercubic lattice Z^d.
//!
//! Points carry signed 64-bit coordinates. Finite windows are axis-aligned
//! boxes with a dense row-major indexer (last axis fastest), which is what
//! every field and cluster routine iterates over. Loose point sets outside
//! any window are plain hash sets.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, Index, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A site of Z^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point(Vec<i64>);

pub type PointSet = HashSet<Point>;

impl Point {
    pub fn new(coords: Vec<i64>) -> Self {
        assert!(!coords.is_empty(), "points need at least one coordinate");
        Point(coords)
    }

    pub fn origin(d: usize) -> Self {
        Point(vec![0; d])
    }

    /// The unit vector along `axis`, scaled by `step`.
    pub fn axis(d: usize, axis: usize, step: i64) -> Self {
        let mut c = vec![0; d];
        c[axis] = step;
        Point(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<i64> {
        self.0
    }

    pub fn norm_inf(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn norm_l1(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }

    pub fn norm_sq(&self) -> i128 {
        self.0.iter().map(|&c| (c as i128) * (c as i128)).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// Representative of the orbit under coordinate permutations and sign
    /// flips: absolute values sorted in decreasing order.
    pub fn canonical_abs(&self) -> Point {
        let mut c: Vec<i64> = self.0.iter().map(|c| c.abs()).collect();
        c.sort_unstable_by(|a, b| b.cmp(a));
        Point(c)
    }

    /// Embed a point of Z^k into Z^d (d ≥ k) by padding with zeros.
    pub fn embed(&self, d: usize) -> Point {
        assert!(d >= self.dim());
        let mut c = self.0.clone();
        c.resize(d, 0);
        Point(c)
    }

    fn check_dim(&self, other: &Point) {
        assert_eq!(self.dim(), other.dim(), "points of different dimension");
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl std::str::FromStr for Point {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let coords = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad coordinate `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if coords.is_empty() {
            return Err(Error::InvalidArgument("empty point".into()));
        }
        Ok(Point(coords))
    }
}

impl Index<usize> for Point {
    type Output = i64;
    fn index(&self, i: usize) -> &i64 {
        &self.0[i]
    }
}

impl Add for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        self.check_dim(rhs);
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        self.check_dim(rhs);
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point(self.0.iter().map(|a| -a).collect())
    }
}

/// An axis-aligned box `{lower ≤ y ≤ upper}` (inclusive on both ends).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    lower: Point,
    upper: Point,
}

impl LatticeBox {
    pub fn new(lower: Point, upper: Point) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::DimensionMismatch { expected: lower.dim(), got: upper.dim() });
        }
        if lower.0.iter().zip(&upper.0).any(|(l, u)| l > u) {
            return Err(Error::Geometry(format!("empty box {lower}..{upper}")));
        }
        Ok(LatticeBox { lower, upper })
    }

    /// `B_x(L) = x + ([0, L) ∩ Z)^d`, the box of side `L` attached to `x`.
    pub fn attached(anchor: &Point, side: u64) -> Self {
        assert!(side >= 1, "attached boxes need a positive side");
        let upper = Point(anchor.0.iter().map(|a| a + side as i64 - 1).collect());
        LatticeBox { lower: anchor.clone(), upper }
    }

    /// The ℓ∞ ball `B(x, r)`.
    pub fn ball(center: &Point, radius: u64) -> Self {
        let r = radius as i64;
        LatticeBox {
            lower: Point(center.0.iter().map(|c| c - r).collect()),
            upper: Point(center.0.iter().map(|c| c + r).collect()),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    pub fn extent(&self, axis: usize) -> usize {
        (self.upper.0[axis] - self.lower.0[axis] + 1) as usize
    }

    pub fn extents(&self) -> Vec<usize> {
        (0..self.dim()).map(|a| self.extent(a)).collect()
    }

    pub fn len(&self) -> usize {
        self.extents().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p.0.iter().enumerate().all(|(i, &c)| c >= self.lower.0[i] && c <= self.upper.0[i])
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        self.contains(&other.lower) && self.contains(&other.upper)
    }

    /// Grow the box by `margin` sites on every side.
    pub fn enlarge(&self, margin: u64) -> LatticeBox {
        let m = margin as i64;
        LatticeBox {
            lower: Point(self.lower.0.iter().map(|c| c - m).collect()),
            upper: Point(self.upper.0.iter().map(|c| c + m).collect()),
        }
    }

    pub fn translate(&self, z: &Point) -> LatticeBox {
        LatticeBox { lower: &self.lower + z, upper: &self.upper + z }
    }

    /// All points in row-major order (last axis fastest).
    pub fn points(&self) -> BoxPoints<'_> {
        BoxPoints { bx: self, next: Some(self.lower.0.clone()) }
    }
}

pub struct BoxPoints<'a> {
    bx: &'a LatticeBox,
    next: Option<Vec<i64>>,
}

impl Iterator for BoxPoints<'_> {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let mut axis = succ.len();
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            if succ[axis] < self.bx.upper.0[axis] {
                succ[axis] += 1;
                self.next = Some(succ);
                break;
            }
            succ[axis] = self.bx.lower.0[axis];
        }
        Some(Point(cur))
    }
}

/// A finite box together with a dense row-major indexer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    bx: LatticeBox,
    extents: Vec<usize>,
    strides: Vec<usize>,
}

impl Window {
    pub fn new(bx: LatticeBox) -> Self {
        let extents = bx.extents();
        let mut strides = vec![1; extents.len()];
        for a in (0..extents.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * extents[a + 1];
        }
        Window { bx, extents, strides }
    }

    pub fn ball(center: &Point, radius: u64) -> Self {
        Window::new(LatticeBox::ball(center, radius))
    }

    pub fn bounds(&self) -> &LatticeBox {
        &self.bx
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.bx.contains(p)
    }

    pub fn index(&self, p: &Point) -> Option<usize> {
        if !self.bx.contains(p) {
            return None;
        }
        Some(
            p.0.iter()
                .zip(&self.bx.lower.0)
                .zip(&self.strides)
                .map(|((c, l), s)| (c - l) as usize * s)
                .sum(),
        )
    }

    pub fn index_or_err(&self, p: &Point) -> Result<usize> {
        self.index(p).ok_or_else(|| Error::OutsideWindow(p.to_string()))
    }

    /// Offsets of `idx` from the lower corner, per axis.
    pub fn local_coords(&self, mut idx: usize, out: &mut [usize]) {
        for (a, s) in self.strides.iter().enumerate() {
            out[a] = idx / s;
            idx %= s;
        }
    }

    pub fn point(&self, idx: usize) -> Point {
        let mut local = vec![0; self.dim()];
        self.local_coords(idx, &mut local);
        Point(local.iter().zip(&self.bx.lower.0).map(|(&o, l)| l + o as i64).collect())
    }

    /// Dense index of the nearest neighbor of `idx` along `axis` in direction
    /// `+1`/`-1`, if it lies in the window.
    #[inline]
    pub fn step(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let s = self.strides[axis];
        let c = (idx / s) % self.extents[axis];
        if forward {
            (c + 1 < self.extents[axis]).then(|| idx + s)
        } else {
            (c > 0).then(|| idx - s)
        }
    }

    /// True when `idx` sits on the inner boundary of the window box.
    pub fn on_face(&self, idx: usize) -> bool {
        (0..self.dim()).any(|a| {
            let c = (idx / self.strides[a]) % self.extents[a];
            c == 0 || c + 1 == self.extents[a]
        })
    }

    /// Dense indices of the points of `sub` (which must lie inside), sorted.
    pub fn indices_of_box(&self, sub: &LatticeBox) -> Result<Vec<usize>> {
        if !self.bx.contains_box(sub) {
            return Err(Error::Geometry("sub-box not contained in window".into()));
        }
        let mut out: Vec<usize> = sub.points().map(|p| self.index(&p).unwrap()).collect();
        out.sort_unstable();
        Ok(out)
    }
}

/// Points `y` with `|y - center|_∞ ≤ r`.
pub fn ball(center: &Point, r: u64) -> Vec<Point> {
    LatticeBox::ball(center, r).points().collect()
}

/// Points `y` with `|y - center|_∞ = r`.
pub fn sphere(center: &Point, r: u64) -> Vec<Point> {
    ball(center, r)
        .into_iter()
        .filter(|p| (p - center).norm_inf() == r)
        .collect()
}

/// The `2d` nearest neighbors, or the `3^d - 1` *-neighbors when `star` is set.
pub fn neighbors(x: &Point, star: bool) -> Vec<Point> {
    let d = x.dim();
    if !star {
        let mut out = Vec::with_capacity(2 * d);
        for a in 0..d {
            for s in [-1, 1] {
                out.push(x + &Point::axis(d, a, s));
            }
        }
        return out;
    }
    LatticeBox::ball(x, 1).points().filter(|p| p != x).collect()
}

/// Inner boundary `{x ∈ K : some nearest neighbor is outside K}` and outer
/// boundary (the inner boundary of the complement).
pub fn boundaries(k: &PointSet) -> (PointSet, PointSet) {
    let mut inner = PointSet::new();
    let mut outer = PointSet::new();
    for x in k {
        for y in neighbors(x, false) {
            if !k.contains(&y) {
                inner.insert(x.clone());
                outer.insert(y);
            }
        }
    }
    (inner, outer)
}

/// ℓ∞ diameter of a finite non-empty set.
pub fn diameter<'a, I>(k: I) -> Result<u64>
where
    I: IntoIterator<Item = &'a Point>,
{
    let mut lo: Option<Vec<i64>> = None;
    let mut hi: Vec<i64> = Vec::new();
    for p in k {
        match &mut lo {
            None => {
                lo = Some(p.0.clone());
                hi = p.0.clone();
            }
            Some(l) => {
                for (a, &c) in p.0.iter().enumerate() {
                    l[a] = l[a].min(c);
                    hi[a] = hi[a].max(c);
                }
            }
        }
    }
    let lo = lo.ok_or(Error::EmptySet)?;
    Ok(lo.iter().zip(&hi).map(|(l, h)| (h - l) as u64).max().unwrap_or(0))
}

/// `τ_z` on point sets.
pub fn translate(k: &PointSet, z: &Point) -> PointSet {
    k.iter().map(|p| p + z).collect()
}

/// Anchor of the attached box of side `side` in the partition `side·Z^d`
/// that contains `p`.
pub fn block_anchor(p: &Point, side: u64) -> Point {
    let s = side as i64;
    Point(p.0.iter().map(|c| c.div_euclid(s) * s).collect())
}
