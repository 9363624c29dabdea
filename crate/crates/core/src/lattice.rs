//! Geometry and calculus on the lattice graph Z^3.
//!
//! Vertices are integer triples; two vertices are adjacent when exactly one
//! coordinate differs by one. Balls and spheres are taken in the graph
//! (taxicab) distance. Functions on the lattice are stored on a finite
//! [`BoxDomain`] and are identically zero outside it.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Grid;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct LatticePoint {
    pub x1: i64,
    pub x2: i64,
    pub x3: i64,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint::new(0, 0, 0);
    pub const E1: LatticePoint = LatticePoint::new(1, 0, 0);
    pub const E2: LatticePoint = LatticePoint::new(0, 1, 0);
    pub const E3: LatticePoint = LatticePoint::new(0, 0, 1);

    pub const fn new(x1: i64, x2: i64, x3: i64) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn coords(self) -> [i64; 3] {
        [self.x1, self.x2, self.x3]
    }

    pub fn from_coords(c: [i64; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }

    /// Taxicab norm, equal to the graph distance from the origin.
    pub fn norm1(self) -> u64 {
        self.x1.unsigned_abs() + self.x2.unsigned_abs() + self.x3.unsigned_abs()
    }

    pub fn norm2_sq(self) -> i64 {
        self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3
    }

    pub fn graph_distance(self, other: LatticePoint) -> u64 {
        (self - other).norm1()
    }

    pub fn euclidean_distance(self, other: LatticePoint) -> f64 {
        ((self - other).norm2_sq() as f64).sqrt()
    }

    pub fn distance(self, other: LatticePoint, kind: DistanceKind) -> f64 {
        kind.length(self - other)
    }

    /// The six neighbours, ordered `+e1, -e1, +e2, -e2, +e3, -e3`.
    pub fn neighbors(self) -> [LatticePoint; 6] {
        let LatticePoint { x1, x2, x3 } = self;
        [
            LatticePoint::new(x1 + 1, x2, x3),
            LatticePoint::new(x1 - 1, x2, x3),
            LatticePoint::new(x1, x2 + 1, x3),
            LatticePoint::new(x1, x2 - 1, x3),
            LatticePoint::new(x1, x2, x3 + 1),
            LatticePoint::new(x1, x2, x3 - 1),
        ]
    }

    pub fn is_adjacent(self, other: LatticePoint) -> bool {
        self.graph_distance(other) == 1
    }

    pub fn scale(self, k: i64) -> LatticePoint {
        LatticePoint::new(self.x1 * k, self.x2 * k, self.x3 * k)
    }
}

impl Add for LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x1 + rhs.x1, self.x2 + rhs.x2, self.x3 + rhs.x3)
    }
}

impl Sub for LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x1 - rhs.x1, self.x2 - rhs.x2, self.x3 - rhs.x3)
    }
}

impl Neg for LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> LatticePoint {
        LatticePoint::new(-self.x1, -self.x2, -self.x3)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x1, self.x2, self.x3)
    }
}

pub fn neighbors(p: LatticePoint) -> [LatticePoint; 6] {
    p.neighbors()
}

/// Which metric the Coulomb kernel `1/|x - y|` is evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    /// Taxicab distance, the graph distance of Z^3.
    Graph,
    #[default]
    Euclidean,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 2] = [DistanceKind::Euclidean, DistanceKind::Graph];

    /// Length of a lattice offset in this metric.
    #[inline]
    pub fn length(self, v: LatticePoint) -> f64 {
        match self {
            DistanceKind::Graph => v.norm1() as f64,
            DistanceKind::Euclidean => (v.norm2_sq() as f64).sqrt(),
        }
    }

    /// `1/|v|` with the self term `v = 0` mapped to zero.
    #[inline]
    pub fn inverse_length(self, v: LatticePoint) -> f64 {
        if v == LatticePoint::ORIGIN {
            0.0
        } else {
            1.0 / self.length(v)
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceKind::Graph => "graph",
            DistanceKind::Euclidean => "euclidean",
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "graph" => Ok(DistanceKind::Graph),
            "euclidean" => Ok(DistanceKind::Euclidean),
            other => Err(Error::domain(format!(
                "unknown distance kind {other:?} (expected graph or euclidean)"
            ))),
        }
    }
}

/// An axis-aligned box `lo..=hi` of lattice points, enumerated
/// lexicographically with `x1` slowest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxDomain {
    lo: LatticePoint,
    hi: LatticePoint,
}

impl BoxDomain {
    pub fn new(lo: LatticePoint, hi: LatticePoint) -> Result<Self> {
        if lo.x1 > hi.x1 || lo.x2 > hi.x2 || lo.x3 > hi.x3 {
            return Err(Error::domain(format!("box corners {lo} > {hi}")));
        }
        Ok(Self { lo, hi })
    }

    /// Box with corner `lo` and `dims` cells per axis.
    pub fn with_dims(lo: LatticePoint, dims: [usize; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::domain(format!(
                "box dimensions {dims:?} must be positive"
            )));
        }
        let hi = LatticePoint::new(
            lo.x1 + dims[0] as i64 - 1,
            lo.x2 + dims[1] as i64 - 1,
            lo.x3 + dims[2] as i64 - 1,
        );
        Self::new(lo, hi)
    }

    /// The `2L x 2L x 2L` window `[-L, L-1]^3` used by the minimizer.
    pub fn centered_window(half_width: usize) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::domain("window half-width must be positive"));
        }
        let l = half_width as i64;
        Self::new(
            LatticePoint::new(-l, -l, -l),
            LatticePoint::new(l - 1, l - 1, l - 1),
        )
    }

    /// The cube `[-r, r]^3`, the smallest box containing the ball of radius `r`.
    pub fn cube(radius: u64) -> Self {
        let r = radius as i64;
        Self {
            lo: LatticePoint::new(-r, -r, -r),
            hi: LatticePoint::new(r, r, r),
        }
    }

    pub fn lo(&self) -> LatticePoint {
        self.lo
    }

    pub fn hi(&self) -> LatticePoint {
        self.hi
    }

    pub fn dims(&self) -> [usize; 3] {
        [
            (self.hi.x1 - self.lo.x1 + 1) as usize,
            (self.hi.x2 - self.lo.x2 + 1) as usize,
            (self.hi.x3 - self.lo.x3 + 1) as usize,
        ]
    }

    pub fn len(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        (self.lo.x1..=self.hi.x1).contains(&p.x1)
            && (self.lo.x2..=self.hi.x2).contains(&p.x2)
            && (self.lo.x3..=self.hi.x3).contains(&p.x3)
    }

    pub fn contains_box(&self, other: &BoxDomain) -> bool {
        self.contains(other.lo) && self.contains(other.hi)
    }

    #[inline]
    pub fn index_of(&self, p: LatticePoint) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let [_, n2, n3] = self.dims();
        let i = (p.x1 - self.lo.x1) as usize;
        let j = (p.x2 - self.lo.x2) as usize;
        let k = (p.x3 - self.lo.x3) as usize;
        Some((i * n2 + j) * n3 + k)
    }

    #[inline]
    pub fn point_at(&self, index: usize) -> LatticePoint {
        let [_, n2, n3] = self.dims();
        let k = index % n3;
        let j = (index / n3) % n2;
        let i = index / (n2 * n3);
        LatticePoint::new(
            self.lo.x1 + i as i64,
            self.lo.x2 + j as i64,
            self.lo.x3 + k as i64,
        )
    }

    /// Lexicographic enumeration of the box.
    pub fn points(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        (0..self.len()).map(move |i| self.point_at(i))
    }

    pub fn translated(&self, by: LatticePoint) -> BoxDomain {
        BoxDomain {
            lo: self.lo + by,
            hi: self.hi + by,
        }
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &BoxDomain) -> BoxDomain {
        BoxDomain {
            lo: LatticePoint::new(
                self.lo.x1.min(other.lo.x1),
                self.lo.x2.min(other.lo.x2),
                self.lo.x3.min(other.lo.x3),
            ),
            hi: LatticePoint::new(
                self.hi.x1.max(other.hi.x1),
                self.hi.x2.max(other.hi.x2),
                self.hi.x3.max(other.hi.x3),
            ),
        }
    }

    /// Graph diameter of the box, `sum(dims) - 3`.
    pub fn graph_diameter(&self) -> u64 {
        self.dims().iter().map(|&d| d as u64 - 1).sum()
    }

    /// Whether `p` lies on the outermost layer of the box.
    pub fn on_outer_shell(&self, p: LatticePoint) -> bool {
        self.contains(p)
            && (p.x1 == self.lo.x1
                || p.x1 == self.hi.x1
                || p.x2 == self.lo.x2
                || p.x2 == self.hi.x2
                || p.x3 == self.lo.x3
                || p.x3 == self.hi.x3)
    }
}

impl fmt::Display for BoxDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.dims();
        write!(f, "{}..={} ({a}x{b}x{c})", self.lo, self.hi)
    }
}

/// All points within graph distance `radius` of `center`, sorted lexicographically.
pub fn ball(center: LatticePoint, radius: u64) -> Vec<LatticePoint> {
    let r = radius as i64;
    let mut out = Vec::with_capacity(ball_volume_formula(radius) as usize);
    for a in -r..=r {
        let rem = r - a.abs();
        for b in -rem..=rem {
            let rem2 = rem - b.abs();
            for c in -rem2..=rem2 {
                out.push(center + LatticePoint::new(a, b, c));
            }
        }
    }
    out
}

/// Points at graph distance exactly `radius` from `center`.
pub fn sphere(center: LatticePoint, radius: u64) -> Vec<LatticePoint> {
    let r = radius as i64;
    let mut out = Vec::with_capacity(sphere_size_formula(radius) as usize);
    for a in -r..=r {
        let rem = r - a.abs();
        for b in -rem..=rem {
            let c = rem - b.abs();
            out.push(center + LatticePoint::new(a, b, -c));
            if c != 0 {
                out.push(center + LatticePoint::new(a, b, c));
            }
        }
    }
    out.sort_unstable();
    out
}

/// `(4R^3 + 6R^2 + 8R + 3) / 3`, exact: the numerator is always a multiple of 3.
pub fn ball_volume_formula(radius: u64) -> u64 {
    let r = radius as u128;
    let numerator = 4 * r * r * r + 6 * r * r + 8 * r + 3;
    debug_assert_eq!(numerator % 3, 0);
    (numerator / 3) as u64
}

/// `4R^2 + 2` for `R >= 1`; the degenerate sphere of radius 0 is the centre alone.
pub fn sphere_size_formula(radius: u64) -> u64 {
    if radius == 0 {
        1
    } else {
        4 * radius * radius + 2
    }
}

/// Inner vertex boundary: members of `set` with at least one neighbour outside it.
pub fn set_boundary(set: &[LatticePoint]) -> Vec<LatticePoint> {
    let members: HashSet<LatticePoint> = set.iter().copied().collect();
    let mut out: Vec<LatticePoint> = members
        .iter()
        .copied()
        .filter(|p| p.neighbors().iter().any(|q| !members.contains(q)))
        .collect();
    out.sort_unstable();
    out
}

pub fn is_connected(set: &[LatticePoint]) -> Result<bool> {
    let Some(&start) = set.first() else {
        return Err(Error::EmptySet);
    };
    let members: HashSet<LatticePoint> = set.iter().copied().collect();
    Ok(reachable_from(&members, start) == members.len())
}

/// Number of members reachable from `start` through adjacency inside `members`.
pub(crate) fn reachable_from(members: &HashSet<LatticePoint>, start: LatticePoint) -> usize {
    let mut seen = HashSet::with_capacity(members.len());
    let mut queue = VecDeque::new();
    seen.insert(start);
    queue.push_back(start);
    while let Some(p) = queue.pop_front() {
        for q in p.neighbors() {
            if members.contains(&q) && seen.insert(q) {
                queue.push_back(q);
            }
        }
    }
    seen.len()
}

/// Largest graph distance between two members; zero for sets of size <= 1.
pub fn diameter(set: &[LatticePoint]) -> u64 {
    // max |x - y|_1 = max over the four diagonal directions of (max - min) of s.x
    const DIRS: [[i64; 3]; 4] = [[1, 1, 1], [1, 1, -1], [1, -1, 1], [-1, 1, 1]];
    if set.is_empty() {
        return 0;
    }
    DIRS.iter()
        .map(|d| {
            let proj = set.iter().map(|p| d[0] * p.x1 + d[1] * p.x2 + d[2] * p.x3);
            let (lo, hi) = proj.fold((i64::MAX, i64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
            (hi - lo) as u64
        })
        .max()
        .unwrap_or(0)
}

/// `Γ(φ)(p) = ½ Σ_{q~p} (φ(q) - φ(p))²`, with φ zero outside its box.
pub fn graph_gradient_sq(field: &Grid, p: LatticePoint) -> f64 {
    let center = field.get(p);
    0.5 * p
        .neighbors()
        .iter()
        .map(|&q| {
            let d = field.get(q) - center;
            d * d
        })
        .sum::<f64>()
}

/// `Δφ(p) = Σ_{q~p} (φ(p) - φ(q)) = 6φ(p) - Σ φ(q)`, with φ zero outside its box.
pub fn graph_laplacian(field: &Grid, p: LatticePoint) -> f64 {
    let center = field.get(p);
    p.neighbors()
        .iter()
        .map(|&q| center - field.get(q))
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_ball(radius: u64) -> Vec<LatticePoint> {
        let r = radius as i64;
        let mut out = Vec::new();
        for a in -r..=r {
            for b in -r..=r {
                for c in -r..=r {
                    let p = LatticePoint::new(a, b, c);
                    if p.norm1() <= radius {
                        out.push(p);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn neighbors_of_origin() {
        let ns = neighbors(LatticePoint::ORIGIN);
        assert_eq!(ns.len(), 6);
        let set: HashSet<_> = ns.iter().copied().collect();
        for e in [LatticePoint::E1, LatticePoint::E2, LatticePoint::E3] {
            assert!(set.contains(&e) && set.contains(&-e));
        }
    }

    #[test]
    fn neighbors_of_e1_distances() {
        let ns = neighbors(LatticePoint::E1);
        let at0 = ns.iter().filter(|p| p.norm1() == 0).count();
        let at2 = ns.iter().filter(|p| p.norm1() == 2).count();
        assert_eq!((at0, at2), (1, 5));
    }

    #[test]
    fn small_balls_and_spheres() {
        assert_eq!(ball(LatticePoint::ORIGIN, 0), vec![LatticePoint::ORIGIN]);
        assert_eq!(ball(LatticePoint::ORIGIN, 1).len(), 7);
        assert_eq!(ball(LatticePoint::ORIGIN, 2).len(), 25);
        assert_eq!(sphere(LatticePoint::ORIGIN, 1).len(), 6);
        assert_eq!(sphere(LatticePoint::ORIGIN, 2).len(), 18);
        assert_eq!(sphere(LatticePoint::ORIGIN, 3).len(), 38);
        assert_eq!(ball_volume_formula(0), 1);
        assert_eq!(ball_volume_formula(1), 7);
    }

    #[test]
    fn ball_matches_enumeration_and_formula() {
        for r in 0..=12u64 {
            let mut fast = ball(LatticePoint::ORIGIN, r);
            fast.sort_unstable();
            let brute = brute_ball(r);
            assert_eq!(fast, brute, "radius {r}");
            assert_eq!(fast.len() as u64, ball_volume_formula(r));
        }
        assert_eq!(brute_ball(30).len() as u64, ball_volume_formula(30));
    }

    #[test]
    fn shells_difference_of_balls() {
        for r in 1..=30u64 {
            let s = sphere(LatticePoint::ORIGIN, r).len() as u64;
            assert_eq!(s, 4 * r * r + 2);
            assert_eq!(ball_volume_formula(r) - ball_volume_formula(r - 1), s);
        }
    }

    #[test]
    fn boundary_examples() {
        assert_eq!(
            set_boundary(&[LatticePoint::ORIGIN]),
            vec![LatticePoint::ORIGIN]
        );
        let b2 = ball(LatticePoint::ORIGIN, 2);
        assert_eq!(set_boundary(&b2), sphere(LatticePoint::ORIGIN, 2));
        assert_eq!(
            set_boundary(&[LatticePoint::ORIGIN, LatticePoint::E1]).len(),
            2
        );
    }

    #[test]
    fn connectivity_examples() {
        assert!(is_connected(&ball(LatticePoint::ORIGIN, 3)).unwrap());
        assert!(!is_connected(&[LatticePoint::ORIGIN, LatticePoint::new(2, 0, 0)]).unwrap());
        assert!(is_connected(&[
            LatticePoint::ORIGIN,
            LatticePoint::E1,
            LatticePoint::new(1, 1, 0)
        ])
        .unwrap());
        assert!(matches!(is_connected(&[]), Err(Error::EmptySet)));
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(diameter(&[LatticePoint::new(3, -1, 2)]), 0);
        assert_eq!(
            diameter(&[LatticePoint::ORIGIN, LatticePoint::new(1, 1, 1)]),
            3
        );
        for r in 0..=5u64 {
            let b = ball(LatticePoint::ORIGIN, r);
            let brute = b
                .iter()
                .flat_map(|x| b.iter().map(move |y| x.graph_distance(*y)))
                .max()
                .unwrap();
            assert_eq!(brute, 2 * r);
            assert_eq!(diameter(&b), 2 * r);
        }
    }

    #[test]
    fn gradient_and_laplacian_of_delta() {
        let domain = BoxDomain::cube(2);
        let mut g = Grid::zeros(domain);
        g.set(LatticePoint::ORIGIN, 1.0).unwrap();
        assert_eq!(graph_gradient_sq(&g, LatticePoint::ORIGIN), 3.0);
        assert_eq!(graph_gradient_sq(&g, LatticePoint::E1), 0.5);
        assert_eq!(graph_laplacian(&g, LatticePoint::ORIGIN), 6.0);
        assert_eq!(graph_laplacian(&g, LatticePoint::E1), -1.0);
    }

    #[test]
    fn constant_field_is_harmonic_inside() {
        let domain = BoxDomain::cube(3);
        let g = Grid::from_fn(domain, |_| 2.5);
        for p in BoxDomain::cube(2).points() {
            assert_eq!(graph_laplacian(&g, p), 0.0);
            assert_eq!(graph_gradient_sq(&g, p), 0.0);
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "graph".parse::<DistanceKind>().unwrap(),
            DistanceKind::Graph
        );
        assert_eq!(
            "Euclidean".parse::<DistanceKind>().unwrap(),
            DistanceKind::Euclidean
        );
        assert!("manhattan".parse::<DistanceKind>().is_err());
    }

    #[test]
    fn box_indexing_roundtrip() {
        let b = BoxDomain::new(LatticePoint::new(-2, 0, 3), LatticePoint::new(1, 2, 7)).unwrap();
        assert_eq!(b.dims(), [4, 3, 5]);
        for (i, p) in b.points().enumerate() {
            assert_eq!(b.index_of(p), Some(i));
        }
        assert_eq!(b.point_at(0), b.lo());
        assert_eq!(b.point_at(b.len() - 1), b.hi());
        assert!(BoxDomain::new(LatticePoint::E1, LatticePoint::ORIGIN).is_err());
        assert_eq!(BoxDomain::centered_window(12).unwrap().dims(), [24, 24, 24]);
    }
}
