//! Coulomb potentials `Φ(x) = Σ_{y≠x} ρ(y)/|x-y|` and pairings
//! `D(f,g) = Σ_{x≠y} f²(x) g²(y)/|x-y|` over ordered pairs.
//!
//! The direct double sum is the reference. [`CoulombPlan`] computes the same
//! free-space convolution with zero-padded real FFTs, and [`EvenOctantPlan`]
//! handles densities that are even in every coordinate with DCT-I transforms
//! on one octant.

use std::sync::Arc;

use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustdct::{Dct1, DctPlanner};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{DensityGrid, Grid};
use crate::lattice::{BoxDomain, DistanceKind, LatticePoint};
use crate::numeric::{next_smooth, CompensatedSum};

/// Largest padded transform (in cells) a plan will try to allocate.
const MAX_TRANSFORM_CELLS: usize = 1 << 29;

/// `K(v) = 1/|v|` on offsets `|v_i| <= w_i`, with `K(0) = 0`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    kind: DistanceKind,
    half_widths: [usize; 3],
    values: Vec<f64>,
}

impl KernelTable {
    pub fn new(kind: DistanceKind, half_width: usize) -> Self {
        Self::with_half_widths(kind, [half_width; 3])
    }

    pub fn with_half_widths(kind: DistanceKind, half_widths: [usize; 3]) -> Self {
        let w = half_widths.map(|h| h as i64);
        let domain = BoxDomain::new(
            LatticePoint::new(-w[0], -w[1], -w[2]),
            LatticePoint::new(w[0], w[1], w[2]),
        )
        .expect("symmetric box is never empty");
        let values = domain.points().map(|v| kind.inverse_length(v)).collect();
        Self {
            kind,
            half_widths,
            values,
        }
    }

    /// Table wide enough for every offset between two cells of `domain`.
    pub fn for_domain(kind: DistanceKind, domain: BoxDomain) -> Self {
        Self::with_half_widths(kind, domain.dims().map(|d| d - 1))
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn half_widths(&self) -> [usize; 3] {
        self.half_widths
    }

    /// `K(v)`, zero outside the table.
    #[inline]
    pub fn get(&self, v: LatticePoint) -> f64 {
        let [w1, w2, w3] = self.half_widths.map(|h| h as i64);
        if v.x1.abs() > w1 || v.x2.abs() > w2 || v.x3.abs() > w3 {
            return 0.0;
        }
        let (n2, n3) = (2 * w2 + 1, 2 * w3 + 1);
        let i = ((v.x1 + w1) * n2 + (v.x2 + w2)) * n3 + (v.x3 + w3);
        self.values[i as usize]
    }
}

/// Potential by the direct double sum, `O(N²)`; each output cell is accumulated
/// in lexicographic order of the sources with compensated summation.
pub fn potential_direct(rho: &DensityGrid, kind: DistanceKind) -> Grid {
    let domain = rho.domain();
    let kernel = KernelTable::for_domain(kind, domain);
    let sources: Vec<(LatticePoint, f64)> = domain
        .points()
        .zip(rho.values().iter().copied())
        .filter(|&(_, r)| r != 0.0)
        .collect();
    let values: Vec<f64> = (0..domain.len())
        .into_par_iter()
        .map(|i| {
            let x = domain.point_at(i);
            let mut acc = CompensatedSum::new();
            for &(y, r) in &sources {
                acc.add(r * kernel.get(x - y));
            }
            acc.value()
        })
        .collect();
    Grid::from_values(domain, values).expect("one value per cell")
}

/// Direct ordered-pair sum `Σ_{x≠y} f_sq(x) g_sq(y) K(x-y)`.
pub fn pairing_direct(f_sq: &DensityGrid, g_sq: &DensityGrid, kind: DistanceKind) -> Result<f64> {
    check_same_box(f_sq, g_sq)?;
    Ok(potential_direct(g_sq, kind).dot(f_sq.grid()))
}

/// Potential by zero-padded FFT convolution.
pub fn potential_fast(rho: &DensityGrid, kind: DistanceKind) -> Result<Grid> {
    CoulombPlan::new(rho.domain(), kind)?.potential(rho.grid())
}

/// `D(f, g)` for densities `f_sq = f²`, `g_sq = g²` on a common box.
/// For `f = g` this is the Coulomb self-energy, each unordered pair counted twice.
pub fn pairing(f_sq: &DensityGrid, g_sq: &DensityGrid, kind: DistanceKind) -> Result<f64> {
    check_same_box(f_sq, g_sq)?;
    let phi = potential_fast(g_sq, kind)?;
    Ok(phi.dot(f_sq.grid()))
}

fn check_same_box(a: &DensityGrid, b: &DensityGrid) -> Result<()> {
    if a.domain() != b.domain() {
        return Err(Error::domain(format!(
            "densities live on different boxes: {} vs {}",
            a.domain(),
            b.domain()
        )));
    }
    Ok(())
}

fn sizing_error(dims: &[usize], reason: impl Into<String>) -> Error {
    Error::Sizing {
        dims: dims.to_vec(),
        reason: reason.into(),
    }
}

fn try_zeroed<T: Clone>(len: usize, zero: T, dims: &[usize]) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len)
        .map_err(|e| sizing_error(dims, e.to_string()))?;
    v.resize(len, zero);
    Ok(v)
}

/// 3-D real FFT on a `p1 x p2 x p3` grid, `x3` fastest.
struct RealFft3 {
    dims: [usize; 3],
    half: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
}

impl RealFft3 {
    fn new(dims: [usize; 3]) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut cplx = FftPlanner::<f64>::new();
        Self {
            dims,
            half: dims[2] / 2 + 1,
            r2c: real.plan_fft_forward(dims[2]),
            c2r: real.plan_fft_inverse(dims[2]),
            fwd: [
                cplx.plan_fft_forward(dims[0]),
                cplx.plan_fft_forward(dims[1]),
            ],
            inv: [
                cplx.plan_fft_inverse(dims[0]),
                cplx.plan_fft_inverse(dims[1]),
            ],
        }
    }

    fn spectrum_len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.half
    }

    /// Complex transforms along axes 1 and 2 of a `p1 x p2 x half` spectrum.
    fn transform_outer(&self, spec: &mut [Complex<f64>], plans: &[Arc<dyn Fft<f64>>; 2]) {
        let [p1, p2, _] = self.dims;
        let h = self.half;
        let zero = Complex::new(0.0, 0.0);

        // Axis 2: for each i, gather the h lines of length p2.
        let mut lines = vec![zero; p2 * h];
        let mut scratch = vec![zero; plans[1].get_inplace_scratch_len()];
        for i in 0..p1 {
            let slab = &mut spec[i * p2 * h..(i + 1) * p2 * h];
            for j in 0..p2 {
                for k in 0..h {
                    lines[k * p2 + j] = slab[j * h + k];
                }
            }
            plans[1].process_with_scratch(&mut lines, &mut scratch);
            for j in 0..p2 {
                for k in 0..h {
                    slab[j * h + k] = lines[k * p2 + j];
                }
            }
        }

        // Axis 1: for each j, gather the h lines of length p1.
        let mut lines = vec![zero; p1 * h];
        let mut scratch = vec![zero; plans[0].get_inplace_scratch_len()];
        for j in 0..p2 {
            for i in 0..p1 {
                let row = (i * p2 + j) * h;
                for k in 0..h {
                    lines[k * p1 + i] = spec[row + k];
                }
            }
            plans[0].process_with_scratch(&mut lines, &mut scratch);
            for i in 0..p1 {
                let row = (i * p2 + j) * h;
                for k in 0..h {
                    spec[row + k] = lines[k * p1 + i];
                }
            }
        }
    }

    fn forward(&self, real: &mut [f64], spec: &mut [Complex<f64>]) {
        let p3 = self.dims[2];
        let h = self.half;
        let mut scratch = self.r2c.make_scratch_vec();
        for (row_in, row_out) in real.chunks_exact_mut(p3).zip(spec.chunks_exact_mut(h)) {
            self.r2c
                .process_with_scratch(row_in, row_out, &mut scratch)
                .expect("buffer lengths match the plan");
        }
        self.transform_outer(spec, &self.fwd);
    }

    /// Unnormalized inverse; the caller divides by the cell count.
    fn inverse(&self, spec: &mut [Complex<f64>], real: &mut [f64]) {
        self.transform_outer(spec, &self.inv);
        let p3 = self.dims[2];
        let h = self.half;
        let mut scratch = self.c2r.make_scratch_vec();
        for (row_in, row_out) in spec.chunks_exact_mut(h).zip(real.chunks_exact_mut(p3)) {
            // The exact result is real, so these entries are real up to round-off.
            row_in[0].im = 0.0;
            if p3 % 2 == 0 {
                row_in[h - 1].im = 0.0;
            }
            self.c2r
                .process_with_scratch(row_in, row_out, &mut scratch)
                .expect("buffer lengths match the plan");
        }
    }
}

/// Free-space convolution with an even kernel on one box.
///
/// Each axis of length `L` is zero-padded to a smooth size `>= 2L`, and the
/// kernel is sampled on offsets `|v_i| <= L - 1`, so the circular convolution
/// agrees with the free-space sum on the box. Safe to share between threads:
/// all work buffers are allocated per call.
pub struct ConvolutionPlan {
    domain: BoxDomain,
    fft: RealFft3,
    kernel_spectrum: Vec<f64>,
}

impl std::fmt::Debug for ConvolutionPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvolutionPlan")
            .field("domain", &self.domain)
            .field("padded", &self.fft.dims)
            .finish()
    }
}

impl ConvolutionPlan {
    /// `kernel` must satisfy `K(v) = K(-v)` in each coordinate separately.
    pub fn new(domain: BoxDomain, kernel: impl Fn(LatticePoint) -> f64) -> Result<Self> {
        let dims = domain.dims();
        let padded = dims.map(|d| next_smooth(2 * d));
        let cells = padded
            .iter()
            .try_fold(1usize, |acc, &p| acc.checked_mul(p))
            .filter(|&c| c <= MAX_TRANSFORM_CELLS)
            .ok_or_else(|| sizing_error(&padded, "padded transform too large"))?;

        let fft = RealFft3::new(padded);
        let mut table = try_zeroed(cells, 0.0, &padded)?;
        let wrap = |j: usize, p: usize, l: usize| -> Option<i64> {
            if j < l {
                Some(j as i64)
            } else if j + l > p {
                Some(j as i64 - p as i64)
            } else {
                None
            }
        };
        for i in 0..padded[0] {
            let Some(v1) = wrap(i, padded[0], dims[0]) else {
                continue;
            };
            for j in 0..padded[1] {
                let Some(v2) = wrap(j, padded[1], dims[1]) else {
                    continue;
                };
                for k in 0..padded[2] {
                    let Some(v3) = wrap(k, padded[2], dims[2]) else {
                        continue;
                    };
                    table[(i * padded[1] + j) * padded[2] + k] =
                        kernel(LatticePoint::new(v1, v2, v3));
                }
            }
        }
        let mut spec = try_zeroed(fft.spectrum_len(), Complex::new(0.0, 0.0), &padded)?;
        fft.forward(&mut table, &mut spec);
        // An even real kernel has a real transform.
        let scale = 1.0 / cells as f64;
        let kernel_spectrum = spec.iter().map(|c| c.re * scale).collect();
        Ok(Self {
            domain,
            fft,
            kernel_spectrum,
        })
    }

    pub fn domain(&self) -> BoxDomain {
        self.domain
    }

    pub fn padded_dims(&self) -> [usize; 3] {
        self.fft.dims
    }

    /// `(K * f)(x) = Σ_y K(x - y) f(y)` for `x` in the box.
    pub fn apply(&self, f: &Grid) -> Result<Grid> {
        if f.domain() != self.domain {
            return Err(Error::domain(format!(
                "input box {} differs from plan box {}",
                f.domain(),
                self.domain
            )));
        }
        let padded = self.fft.dims;
        let [n1, n2, n3] = self.domain.dims();
        let mut real = try_zeroed(padded.iter().product(), 0.0, &padded)?;
        let src = f.values();
        for i in 0..n1 {
            for j in 0..n2 {
                let from = (i * n2 + j) * n3;
                let to = (i * padded[1] + j) * padded[2];
                real[to..to + n3].copy_from_slice(&src[from..from + n3]);
            }
        }
        let mut spec = try_zeroed(self.fft.spectrum_len(), Complex::new(0.0, 0.0), &padded)?;
        self.fft.forward(&mut real, &mut spec);
        for (s, k) in spec.iter_mut().zip(&self.kernel_spectrum) {
            *s *= *k;
        }
        self.fft.inverse(&mut spec, &mut real);

        let mut out = Vec::with_capacity(self.domain.len());
        for i in 0..n1 {
            for j in 0..n2 {
                let from = (i * padded[1] + j) * padded[2];
                out.extend_from_slice(&real[from..from + n3]);
            }
        }
        Grid::from_values(self.domain, out)
    }
}

/// Reusable FFT plan for Coulomb potentials on one box.
#[derive(Debug)]
pub struct CoulombPlan {
    kind: DistanceKind,
    conv: ConvolutionPlan,
}

impl CoulombPlan {
    pub fn new(domain: BoxDomain, kind: DistanceKind) -> Result<Self> {
        Ok(Self {
            kind,
            conv: ConvolutionPlan::new(domain, |v| kind.inverse_length(v))?,
        })
    }

    pub fn domain(&self) -> BoxDomain {
        self.conv.domain()
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn padded_dims(&self) -> [usize; 3] {
        self.conv.padded_dims()
    }

    /// Potential of `rho`, which must live on the plan's box.
    pub fn potential(&self, rho: &Grid) -> Result<Grid> {
        self.conv.apply(rho)
    }

    /// `Σ_x ρ(x) Φ(x)`: the ordered-pair self-energy of `rho`.
    pub fn self_energy(&self, rho: &Grid) -> Result<f64> {
        Ok(self.potential(rho)?.dot(rho))
    }
}

/// Potentials of densities that are even in each coordinate, stored on the
/// octant `0 <= x_i < M_i`.
///
/// The even extension with period `2(M_i - 1)` turns the convolution into a
/// product of DCT-I transforms. A density supported in `x_i <= s_i` is
/// reproduced exactly when `M_i - 1 >= 2 s_i`.
pub struct EvenOctantPlan {
    extents: [usize; 3],
    kind: DistanceKind,
    dcts: [Arc<dyn Dct1<f64>>; 3],
    kernel_spectrum: Vec<f64>,
}

impl EvenOctantPlan {
    /// Plan for densities supported in `0 <= x_i <= support_i`.
    pub fn new(support: [usize; 3], kind: DistanceKind) -> Result<Self> {
        let extents = support.map(|s| next_smooth((2 * s).max(1)) + 1);
        let cells = extents
            .iter()
            .try_fold(1usize, |acc, &m| acc.checked_mul(m))
            .filter(|&c| c <= MAX_TRANSFORM_CELLS)
            .ok_or_else(|| sizing_error(&extents, "octant transform too large"))?;
        let mut planner = DctPlanner::new();
        let dcts = extents.map(|m| planner.plan_dct1(m));
        let mut kernel = try_zeroed(cells, 0.0, &extents)?;
        for (idx, value) in kernel.iter_mut().enumerate() {
            let p = octant_point(extents, idx);
            *value = kind.inverse_length(p);
        }
        let mut plan = Self {
            extents,
            kind,
            dcts,
            kernel_spectrum: Vec::new(),
        };
        plan.dct3(&mut kernel);
        let scale: f64 = extents.iter().map(|&m| 4.0 / (m - 1) as f64).product();
        kernel.iter_mut().for_each(|k| *k *= scale);
        plan.kernel_spectrum = kernel;
        Ok(plan)
    }

    pub fn extents(&self) -> [usize; 3] {
        self.extents
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn octant_len(&self) -> usize {
        self.extents.iter().product()
    }

    /// Octant offset of flat index `idx`, `x3` fastest.
    pub fn point_at(&self, idx: usize) -> LatticePoint {
        octant_point(self.extents, idx)
    }

    /// Potential on the octant from the octant density (length [`Self::octant_len`]).
    pub fn potential(&self, octant_rho: &[f64]) -> Result<Vec<f64>> {
        if octant_rho.len() != self.octant_len() {
            return Err(Error::domain(format!(
                "octant density has {} cells, plan expects {}",
                octant_rho.len(),
                self.octant_len()
            )));
        }
        let mut buf = octant_rho.to_vec();
        self.dct3(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_spectrum) {
            *b *= *k;
        }
        self.dct3(&mut buf);
        Ok(buf)
    }

    fn dct3(&self, data: &mut [f64]) {
        let [m1, m2, m3] = self.extents;
        let len = self
            .dcts
            .iter()
            .map(|d| d.get_scratch_len())
            .max()
            .unwrap_or(0);
        let mut scratch = vec![0.0; len];
        for row in data.chunks_exact_mut(m3) {
            self.dcts[2].process_dct1_with_scratch(row, &mut scratch);
        }
        let mut line = vec![0.0; m1.max(m2)];
        for i in 0..m1 {
            for k in 0..m3 {
                for j in 0..m2 {
                    line[j] = data[(i * m2 + j) * m3 + k];
                }
                self.dcts[1].process_dct1_with_scratch(&mut line[..m2], &mut scratch);
                for j in 0..m2 {
                    data[(i * m2 + j) * m3 + k] = line[j];
                }
            }
        }
        for j in 0..m2 {
            for k in 0..m3 {
                for i in 0..m1 {
                    line[i] = data[(i * m2 + j) * m3 + k];
                }
                self.dcts[0].process_dct1_with_scratch(&mut line[..m1], &mut scratch);
                for i in 0..m1 {
                    data[(i * m2 + j) * m3 + k] = line[i];
                }
            }
        }
    }
}

fn octant_point(extents: [usize; 3], idx: usize) -> LatticePoint {
    let [_, m2, m3] = extents;
    LatticePoint::new(
        (idx / (m2 * m3)) as i64,
        ((idx / m3) % m2) as i64,
        (idx % m3) as i64,
    )
}

/// Number of lattice points `(±x1, ±x2, ±x3)` represented by an octant point.
pub fn octant_multiplicity(p: LatticePoint) -> u32 {
    [p.x1, p.x2, p.x3]
        .iter()
        .map(|&c| if c != 0 { 2 } else { 1 })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_density(domain: BoxDomain, rng: &mut ChaCha8Rng) -> DensityGrid {
        let values = (0..domain.len()).map(|_| rng.gen::<f64>()).collect();
        DensityGrid::from_values(domain, values).unwrap()
    }

    #[test]
    fn kernel_table_properties() {
        for kind in DistanceKind::ALL {
            let k = KernelTable::new(kind, 3);
            assert_eq!(k.get(LatticePoint::ORIGIN), 0.0);
            assert_eq!(k.get(LatticePoint::E2), 1.0);
            assert_eq!(k.get(LatticePoint::new(4, 0, 0)), 0.0);
            let v = LatticePoint::new(1, -2, 3);
            assert_eq!(k.get(v), k.get(-v));
        }
    }

    #[test]
    fn direct_potential_examples() {
        let domain = BoxDomain::cube(2);
        for kind in DistanceKind::ALL {
            let rho = DensityGrid::indicator(domain, &[LatticePoint::ORIGIN]).unwrap();
            assert_eq!(potential_direct(&rho, kind).get(LatticePoint::E1), 1.0);
            let rho =
                DensityGrid::indicator(domain, &[LatticePoint::ORIGIN, LatticePoint::new(2, 0, 0)])
                    .unwrap();
            assert_eq!(potential_direct(&rho, kind).get(LatticePoint::E1), 2.0);
        }
        let rho =
            DensityGrid::indicator(domain, &[LatticePoint::ORIGIN, LatticePoint::new(1, 1, 0)])
                .unwrap();
        let e = potential_direct(&rho, DistanceKind::Euclidean).get(LatticePoint::ORIGIN);
        let g = potential_direct(&rho, DistanceKind::Graph).get(LatticePoint::ORIGIN);
        assert!((e - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(g, 0.5);
    }

    #[test]
    fn pairing_examples() {
        let domain = BoxDomain::cube(2);
        let two =
            DensityGrid::indicator(domain, &[LatticePoint::ORIGIN, LatticePoint::E1]).unwrap();
        let three = DensityGrid::indicator(
            domain,
            &[
                LatticePoint::ORIGIN,
                LatticePoint::E1,
                LatticePoint::new(2, 0, 0),
            ],
        )
        .unwrap();
        let one = DensityGrid::indicator(domain, &[LatticePoint::ORIGIN]).unwrap();
        for kind in DistanceKind::ALL {
            assert!((pairing(&two, &two, kind).unwrap() - 2.0).abs() < 1e-12);
            assert!((pairing(&three, &three, kind).unwrap() - 5.0).abs() < 1e-12);
            assert!(pairing(&one, &one, kind).unwrap().abs() < 1e-12);
            assert_eq!(pairing_direct(&three, &three, kind).unwrap(), 5.0);
        }
        let other = DensityGrid::zeros(BoxDomain::cube(1));
        assert!(matches!(
            pairing(&one, &other, DistanceKind::Euclidean),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn fast_matches_direct_on_uneven_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let domain = BoxDomain::with_dims(LatticePoint::new(3, -2, 0), [5, 3, 7]).unwrap();
        for kind in DistanceKind::ALL {
            let rho = random_density(domain, &mut rng);
            let a = potential_direct(&rho, kind);
            let b = potential_fast(&rho, kind).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() <= 1e-12 * x.abs(), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn zero_density_gives_zero_potential() {
        let rho = DensityGrid::zeros(BoxDomain::cube(3));
        let phi = potential_fast(&rho, DistanceKind::Euclidean).unwrap();
        assert!(phi.values().iter().all(|&v| v.abs() < 1e-300));
    }

    #[test]
    fn oversized_plan_is_a_sizing_error() {
        let domain = BoxDomain::with_dims(LatticePoint::ORIGIN, [2000, 2000, 2000]).unwrap();
        match CoulombPlan::new(domain, DistanceKind::Graph) {
            Err(Error::Sizing { dims, .. }) => assert_eq!(dims.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn even_octant_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let support = [3usize, 2, 4];
        let s = support.map(|v| v as i64);
        let domain = BoxDomain::new(
            LatticePoint::new(-s[0], -s[1], -s[2]),
            LatticePoint::new(s[0], s[1], s[2]),
        )
        .unwrap();
        let octant_domain =
            BoxDomain::new(LatticePoint::ORIGIN, LatticePoint::from_coords(s)).unwrap();
        let octant_values = Grid::from_fn(octant_domain, |_| rng.gen::<f64>());
        let full = Grid::from_fn(domain, |p| {
            octant_values.get(LatticePoint::new(p.x1.abs(), p.x2.abs(), p.x3.abs()))
        });
        let rho = DensityGrid::new(full).unwrap();
        for kind in DistanceKind::ALL {
            let plan = EvenOctantPlan::new(support, kind).unwrap();
            let octant: Vec<f64> = (0..plan.octant_len())
                .map(|i| octant_values.get(plan.point_at(i)))
                .collect();
            let phi = plan.potential(&octant).unwrap();
            let direct = potential_direct(&rho, kind);
            for (i, &v) in phi.iter().enumerate() {
                let p = plan.point_at(i);
                if domain.contains(p) {
                    let d = direct.get(p);
                    assert!((v - d).abs() <= 1e-11 * d, "{p}: {v} vs {d}");
                }
            }
        }
    }
}
