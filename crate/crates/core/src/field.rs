//! Real-valued functions on a finite box, extended by zero to all of Z^3.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::lattice::{BoxDomain, DistanceKind, LatticePoint};
use crate::numeric::CompensatedSum;

/// Values on a [`BoxDomain`] in its lexicographic order; zero outside the box.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: BoxDomain,
    values: Vec<f64>,
}

impl Grid {
    pub fn zeros(domain: BoxDomain) -> Self {
        Self {
            domain,
            values: vec![0.0; domain.len()],
        }
    }

    pub fn from_fn(domain: BoxDomain, mut f: impl FnMut(LatticePoint) -> f64) -> Self {
        let values = domain.points().map(&mut f).collect();
        Self { domain, values }
    }

    pub fn from_values(domain: BoxDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::domain(format!(
                "{} values supplied for a box of {} cells",
                values.len(),
                domain.len()
            )));
        }
        Ok(Self { domain, values })
    }

    pub fn domain(&self) -> BoxDomain {
        self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at `p`, zero outside the box.
    #[inline]
    pub fn get(&self, p: LatticePoint) -> f64 {
        self.domain.index_of(p).map_or(0.0, |i| self.values[i])
    }

    pub fn set(&mut self, p: LatticePoint, value: f64) -> Result<()> {
        let i = self
            .domain
            .index_of(p)
            .ok_or_else(|| Error::domain(format!("point {p} outside box {}", self.domain)))?;
        self.values[i] = value;
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        acc.extend(self.values.iter().copied());
        acc.value()
    }

    pub fn dot(&self, other: &Grid) -> f64 {
        debug_assert_eq!(self.domain, other.domain);
        let mut acc = CompensatedSum::new();
        acc.extend(self.values.iter().zip(&other.values).map(|(a, b)| a * b));
        acc.value()
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            domain: self.domain,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copy onto a larger box; the source box must lie inside `target`.
    pub fn embed(&self, target: BoxDomain) -> Result<Grid> {
        if !target.contains_box(&self.domain) {
            return Err(Error::domain(format!(
                "box {} does not contain {}",
                target, self.domain
            )));
        }
        let mut out = Grid::zeros(target);
        for (i, p) in self.domain.points().enumerate() {
            let j = target.index_of(p).expect("checked containment");
            out.values[j] = self.values[i];
        }
        Ok(out)
    }

    /// The same values shifted by `by`, on the shifted box.
    pub fn translated(&self, by: LatticePoint) -> Grid {
        Grid {
            domain: self.domain.translated(by),
            values: self.values.clone(),
        }
    }

    /// Restriction to `target`, with zeros where `target` leaves this box.
    pub fn resample(&self, target: BoxDomain) -> Grid {
        Grid::from_fn(target, |p| self.get(p))
    }

    /// Point holding the largest value (first in lexicographic order on ties).
    pub fn argmax(&self) -> LatticePoint {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        self.domain.point_at(best)
    }
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::domain(format!(
                "value {v} at index {i} is not a finite nonnegative number"
            )));
        }
    }
    Ok(())
}

/// A nonnegative function φ on a box together with its mass `Σ φ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    grid: Grid,
    mass: f64,
}

impl FieldGrid {
    pub fn new(grid: Grid) -> Result<Self> {
        check_nonnegative(grid.values())?;
        Ok(Self::from_grid_unchecked(grid))
    }

    pub(crate) fn from_grid_unchecked(grid: Grid) -> Self {
        let mass = grid.dot(&grid);
        Self { grid, mass }
    }

    pub fn zeros(domain: BoxDomain) -> Self {
        Self {
            grid: Grid::zeros(domain),
            mass: 0.0,
        }
    }

    pub fn from_fn(domain: BoxDomain, f: impl FnMut(LatticePoint) -> f64) -> Result<Self> {
        Self::new(Grid::from_fn(domain, f))
    }

    pub fn from_values(domain: BoxDomain, values: Vec<f64>) -> Result<Self> {
        Self::new(Grid::from_values(domain, values)?)
    }

    pub fn domain(&self) -> BoxDomain {
        self.grid.domain()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn into_grid(self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        self.grid.values()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    #[inline]
    pub fn get(&self, p: LatticePoint) -> f64 {
        self.grid.get(p)
    }

    pub fn set(&mut self, p: LatticePoint, value: f64) -> Result<()> {
        check_nonnegative(&[value])?;
        self.grid.set(p, value)?;
        self.mass = self.grid.dot(&self.grid);
        Ok(())
    }

    /// Apply `f` to the raw values; negatives are rejected and the mass is recomputed.
    pub fn update(&mut self, f: impl FnOnce(&mut [f64])) -> Result<()> {
        f(self.grid.values_mut());
        check_nonnegative(self.grid.values())?;
        self.mass = self.grid.dot(&self.grid);
        Ok(())
    }

    pub fn max_value(&self) -> f64 {
        self.grid.max_abs()
    }

    pub fn scaled(&self, factor: f64) -> Result<FieldGrid> {
        FieldGrid::new(self.grid.map(|v| v * factor))
    }

    /// The density `φ²`.
    pub fn density(&self) -> DensityGrid {
        DensityGrid {
            grid: self.grid.map(|v| v * v),
        }
    }

    pub fn embed(&self, target: BoxDomain) -> Result<FieldGrid> {
        Ok(FieldGrid {
            grid: self.grid.embed(target)?,
            mass: self.mass,
        })
    }

    pub fn translated(&self, by: LatticePoint) -> FieldGrid {
        FieldGrid {
            grid: self.grid.translated(by),
            mass: self.mass,
        }
    }

    /// Mass carried by the outermost layer of the box, as a fraction of the total.
    pub fn boundary_mass_fraction(&self) -> f64 {
        if self.mass == 0.0 {
            return 0.0;
        }
        let domain = self.domain();
        let mut acc = CompensatedSum::new();
        for (i, p) in domain.points().enumerate() {
            if domain.on_outer_shell(p) {
                let v = self.grid.values()[i];
                acc.add(v * v);
            }
        }
        acc.value() / self.mass
    }

    /// Serialize in the `TFDW-FIELD 1` text format.
    pub fn write_to<W: Write>(&self, mut out: W, kind: DistanceKind) -> Result<()> {
        let domain = self.domain();
        let lo = domain.lo();
        let [n1, n2, n3] = domain.dims();
        let mut text = String::with_capacity(24 * domain.len() + 64);
        let _ = writeln!(text, "TFDW-FIELD 1");
        let _ = writeln!(text, "lo: {} {} {}", lo.x1, lo.x2, lo.x3);
        let _ = writeln!(text, "dims: {n1} {n2} {n3}");
        let _ = writeln!(text, "kind: {kind}");
        for v in self.values() {
            // `{:e}` prints the shortest representation that round-trips.
            let _ = writeln!(text, "{v:e}");
        }
        out.write_all(text.as_bytes())?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<(FieldGrid, DistanceKind)> {
        let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(Error::parse(
                    0,
                    format!("unexpected end of input, expected {what}"),
                )),
            }
        };

        let (n, magic) = next("header")?;
        if magic.trim() != "TFDW-FIELD 1" {
            return Err(Error::parse(
                n,
                format!("expected \"TFDW-FIELD 1\", found {magic:?}"),
            ));
        }
        let (n, lo_line) = next("lo line")?;
        let lo = parse_triple::<i64>(n, &lo_line, "lo:")?;
        let (n, dims_line) = next("dims line")?;
        let dims = parse_triple::<usize>(n, &dims_line, "dims:")?;
        let (n, kind_line) = next("kind line")?;
        let kind = kind_line
            .trim()
            .strip_prefix("kind:")
            .ok_or_else(|| Error::parse(n, "expected \"kind: ...\""))?
            .parse::<DistanceKind>()
            .map_err(|e| Error::parse(n, e.to_string()))?;

        let domain = BoxDomain::with_dims(LatticePoint::from_coords(lo), dims)
            .map_err(|e| Error::parse(3, e.to_string()))?;
        let mut values = Vec::with_capacity(domain.len());
        while values.len() < domain.len() {
            let (n, line) = next("field value")?;
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|_| Error::parse(n, format!("invalid number {line:?}")))?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::parse(
                    n,
                    format!("value {v} is not finite and nonnegative"),
                ));
            }
            values.push(v);
        }
        Ok((FieldGrid::from_values(domain, values)?, kind))
    }
}

fn parse_triple<T: std::str::FromStr>(line_no: usize, line: &str, prefix: &str) -> Result<[T; 3]> {
    let rest = line
        .trim()
        .strip_prefix(prefix)
        .ok_or_else(|| Error::parse(line_no, format!("expected \"{prefix} a b c\"")))?;
    let parts: Vec<T> = rest
        .split_whitespace()
        .map(|s| s.parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(line_no, format!("invalid integers in {line:?}")))?;
    <[T; 3]>::try_from(parts).map_err(|_| Error::parse(line_no, "expected exactly three integers"))
}

/// A nonnegative density ρ on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    grid: Grid,
}

impl DensityGrid {
    pub fn new(grid: Grid) -> Result<Self> {
        check_nonnegative(grid.values())?;
        Ok(Self { grid })
    }

    pub fn from_values(domain: BoxDomain, values: Vec<f64>) -> Result<Self> {
        Self::new(Grid::from_values(domain, values)?)
    }

    pub fn zeros(domain: BoxDomain) -> Self {
        Self {
            grid: Grid::zeros(domain),
        }
    }

    /// Unit masses at the listed points.
    pub fn indicator(domain: BoxDomain, points: &[LatticePoint]) -> Result<Self> {
        let mut grid = Grid::zeros(domain);
        for &p in points {
            grid.set(p, 1.0)?;
        }
        Ok(Self { grid })
    }

    pub fn domain(&self) -> BoxDomain {
        self.grid.domain()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        self.grid.values()
    }

    pub fn total(&self) -> f64 {
        self.grid.sum()
    }

    pub fn embed(&self, target: BoxDomain) -> Result<DensityGrid> {
        Ok(DensityGrid {
            grid: self.grid.embed(target)?,
        })
    }
}

/// `Σ_x Σ_{y~x} ½(φ(y) - φ(x))²` over all of Z^3: every edge once with weight one,
/// including edges that leave the box.
pub fn kinetic_energy(grid: &Grid) -> f64 {
    let domain = grid.domain();
    let [n1, n2, n3] = domain.dims();
    let v = grid.values();
    let mut acc = CompensatedSum::new();
    let idx = |i: usize, j: usize, k: usize| (i * n2 + j) * n3 + k;
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                let c = v[idx(i, j, k)];
                let mut local = 0.0;
                // Edge towards +e_a inside the box, or the two box-leaving edges on a face.
                let mut edge = |inside_plus: Option<f64>, at_lo: bool| {
                    match inside_plus {
                        Some(q) => local += (q - c) * (q - c),
                        None => local += c * c,
                    }
                    if at_lo {
                        local += c * c;
                    }
                };
                edge((i + 1 < n1).then(|| v[idx(i + 1, j, k)]), i == 0);
                edge((j + 1 < n2).then(|| v[idx(i, j + 1, k)]), j == 0);
                edge((k + 1 < n3).then(|| v[idx(i, j, k + 1)]), k == 0);
                acc.add(local);
            }
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{graph_gradient_sq, graph_laplacian};

    fn sample_field() -> FieldGrid {
        let domain =
            BoxDomain::new(LatticePoint::new(-1, 0, 2), LatticePoint::new(1, 2, 3)).unwrap();
        FieldGrid::from_fn(domain, |p| {
            ((p.x1 * 7 + p.x2 * 3 + p.x3) as f64).abs() / 10.0
        })
        .unwrap()
    }

    #[test]
    fn field_roundtrip_is_exact() {
        let f = sample_field().scaled(std::f64::consts::PI).unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf, DistanceKind::Graph).unwrap();
        let (g, kind) = FieldGrid::read_from(buf.as_slice()).unwrap();
        assert_eq!(kind, DistanceKind::Graph);
        assert_eq!(g, f);
    }

    #[test]
    fn malformed_field_reports_line() {
        let text = "TFDW-FIELD 1\nlo: 0 0 0\ndims: 1 1 2\nkind: graph\n0.5\nabc\n";
        match FieldGrid::read_from(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        let truncated = "TFDW-FIELD 1\nlo: 0 0 0\ndims: 1 1 2\nkind: graph\n0.5\n";
        assert!(FieldGrid::read_from(truncated.as_bytes()).is_err());
        assert!(FieldGrid::read_from("TFDW-FIELD 2\n".as_bytes()).is_err());
    }

    #[test]
    fn mass_cache_tracks_mutation() {
        let mut f = sample_field();
        f.set(LatticePoint::new(0, 1, 2), 3.0).unwrap();
        let direct: f64 = f.values().iter().map(|v| v * v).sum();
        assert!((f.mass() - direct).abs() <= 1e-12 * direct);
        assert!(f.set(LatticePoint::new(0, 1, 2), -1.0).is_err());
    }

    #[test]
    fn kinetic_matches_gradient_sum_over_neighbourhood() {
        let f = sample_field();
        let outer =
            BoxDomain::new(LatticePoint::new(-2, -1, 1), LatticePoint::new(2, 3, 4)).unwrap();
        let total: f64 = outer.points().map(|p| graph_gradient_sq(f.grid(), p)).sum();
        assert!((kinetic_energy(f.grid()) - total).abs() < 1e-12);
    }

    #[test]
    fn kinetic_of_delta() {
        let mut f = FieldGrid::zeros(BoxDomain::cube(1));
        f.set(LatticePoint::ORIGIN, 1.0).unwrap();
        assert_eq!(kinetic_energy(f.grid()), 6.0);
        let tight = FieldGrid::from_values(BoxDomain::cube(0), vec![1.0]).unwrap();
        assert_eq!(kinetic_energy(tight.grid()), 6.0);
    }

    #[test]
    fn kinetic_is_laplacian_quadratic_form() {
        let f = sample_field();
        let lap = Grid::from_fn(f.domain(), |p| graph_laplacian(f.grid(), p));
        assert!((lap.dot(f.grid()) - kinetic_energy(f.grid())).abs() < 1e-12);
    }

    #[test]
    fn boundary_fraction() {
        let mut f = FieldGrid::zeros(BoxDomain::cube(2));
        f.set(LatticePoint::ORIGIN, 1.0).unwrap();
        assert_eq!(f.boundary_mass_fraction(), 0.0);
        f.set(LatticePoint::new(2, 0, 0), 1.0).unwrap();
        assert_eq!(f.boundary_mass_fraction(), 0.5);
    }
}
