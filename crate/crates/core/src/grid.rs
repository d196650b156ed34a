//! Uniform periodic grids, sampled fields and the spectral transforms behind them.
//!
//! A [`Grid`] samples the torus `[-L/2, L/2)^d` with `n` points per axis, so the
//! origin sits on the grid at index `n/2` of every axis. Fields are stored
//! row-major with axis 0 slowest. Spectra are full complex DFTs (unnormalized
//! forward, `1/N` inverse) in the usual FFT index order.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    d: usize,
    n: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(d: usize, n: usize, box_length: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidGrid(format!("dimension must be 1, 2 or 3 (got {d})")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 16 (got {n})"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length must be positive (got {box_length})")));
        }
        Ok(Self { d, n, box_length })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Grid spacing `h = L / n`.
    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Volume of one cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `j` along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.spacing()
    }

    /// Signed integer frequency for FFT index `j`, in `[-n/2, n/2)`.
    pub fn freq_index(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Angular wavenumber `2 pi k / L` for FFT index `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.freq_index(j) as f64 / self.box_length
    }

    /// Largest resolved wavenumber along an axis, `pi n / L`.
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.n as f64 / self.box_length
    }

    /// Splits a flat index into per-axis indices (axis 0 first).
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.d).rev() {
            out[axis] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    /// Point coordinates of a flat index.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let ij = self.unravel(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.d {
            x[axis] = self.coord(ij[axis]);
        }
        x
    }

    /// Euclidean distance of a grid point from the origin.
    pub fn radius(&self, idx: usize) -> f64 {
        let x = self.point(idx);
        x[..self.d].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `|xi|` for a flat spectral index.
    pub fn wavenumber_norm(&self, idx: usize) -> f64 {
        let ij = self.unravel(idx);
        let mut k2 = 0.0;
        for &j in &ij[..self.d] {
            let k = self.wavenumber(j);
            k2 += k * k;
        }
        k2.sqrt()
    }

    /// Wavevector for a flat spectral index.
    pub fn wavevector(&self, idx: usize) -> Vec<f64> {
        let ij = self.unravel(idx);
        ij[..self.d].iter().map(|&j| self.wavenumber(j)).collect()
    }

    /// Flat index of the point mirrored through the origin (`x -> -x`).
    pub fn mirror(&self, idx: usize) -> usize {
        let ij = self.unravel(idx);
        let mut out = 0;
        for &j in &ij[..self.d] {
            out = out * self.n + (self.n - j) % self.n;
        }
        out
    }

    /// Flat index of the spectral partner `-k` (conjugate-symmetric pair).
    pub fn spectral_partner(&self, idx: usize) -> usize {
        self.mirror(idx)
    }

    /// Builds a spectral multiplier from a function of `|xi|`.
    pub fn radial_multiplier(&self, f: impl Fn(f64) -> f64) -> Multiplier {
        let values = (0..self.len()).map(|i| f(self.wavenumber_norm(i))).collect();
        Multiplier { grid: *self, values }
    }

    /// True when the box of this grid contains the closed ball of radius `r`
    /// with at least `margin` to spare.
    pub fn contains_ball(&self, r: f64, margin: f64) -> bool {
        r + margin <= 0.5 * self.box_length
    }
}

/// Diagonal operator in Fourier space.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    grid: Grid,
    values: Vec<f64>,
}

impl Multiplier {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value attached to the zero mode.
    pub fn zero_mode(&self) -> f64 {
        self.values[0]
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        if u.grid() != self.grid {
            return Err(Error::GridMismatch("multiplier and field live on different grids".into()));
        }
        Ok(Field::from_spectrum(self.grid, self.apply_spectrum(u.spectrum())))
    }

    pub(crate) fn apply_spectrum(&self, spec: &[Complex64]) -> Vec<Complex64> {
        spec.iter().zip(&self.values).map(|(c, m)| c * m).collect()
    }
}

/// Samples of a real function on a [`Grid`] with a lazily computed spectrum.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    samples: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.samples == other.samples
    }
}

impl Field {
    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("sample {i} is not finite")));
        }
        Ok(Self { grid, samples, spectrum: OnceLock::new() })
    }

    /// Unchecked constructor for samples already known to be finite.
    pub(crate) fn from_samples_unchecked(grid: Grid, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        Self { grid, samples, spectrum: OnceLock::new() }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_samples_unchecked(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    /// Samples `f` at every grid point; `f` receives the `d` coordinates.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let d = grid.dim();
        let samples = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..d])
            })
            .collect();
        Self::new(grid, samples)
    }

    /// Inverse transform of a spectrum; the imaginary residue is discarded and
    /// the spectrum is kept as the cache.
    pub(crate) fn from_spectrum(grid: Grid, spectrum: Vec<Complex64>) -> Self {
        let samples = inverse_real(grid, &spectrum);
        let cache = OnceLock::new();
        let _ = cache.set(spectrum);
        Self { grid, samples, spectrum: cache }
    }

    /// Samples and a spectrum already known to be each other's transform.
    pub(crate) fn from_parts(grid: Grid, samples: Vec<f64>, spectrum: Vec<Complex64>) -> Self {
        let cache = OnceLock::new();
        let _ = cache.set(spectrum);
        Self { grid, samples, spectrum: cache }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn has_spectrum(&self) -> bool {
        self.spectrum.get().is_some()
    }

    /// Forward DFT of the samples (computed once, then cached).
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| forward(self.grid, &self.samples))
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_same_grid(other)?;
        Field::new(
            self.grid,
            self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub(crate) fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    /// `∫ u dx` by the grid (trapezoidal on the torus) rule.
    pub fn integral(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn norm_l1(&self) -> f64 {
        self.samples.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm_l2(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn norm_linf(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `L^q` norm for `q` in `[1, inf]` (`f64::INFINITY` selects the sup norm).
    pub fn norm_lq(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.norm_linf();
        }
        if q == 1.0 {
            return self.norm_l1();
        }
        if q == 2.0 {
            return self.norm_l2();
        }
        // scale by the sup to keep large q from overflowing
        let m = self.norm_linf();
        if m == 0.0 {
            return 0.0;
        }
        let s: f64 = self.samples.iter().map(|v| (v.abs() / m).powf(q)).sum();
        m * (s * self.grid.cell_volume()).powf(1.0 / q)
    }

    /// Sup distance to another field on the same grid.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Fraction of spectral energy carried by wavenumbers above two thirds of
    /// the per-axis maximum.
    pub fn spectral_tail_fraction(&self) -> f64 {
        let kcut = 2.0 / 3.0 * self.grid.max_wavenumber();
        let spec = self.spectrum();
        let mut total = 0.0;
        let mut tail = 0.0;
        for (i, c) in spec.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if self.grid.wavenumber_norm(i) > kcut {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    /// Largest violation of conjugate symmetry in the spectrum, relative to the
    /// largest coefficient.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let spec = self.spectrum();
        let scale = spec.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (i, c) in spec.iter().enumerate() {
            let partner = spec[self.grid.spectral_partner(i)].conj();
            worst = worst.max((c - partner).norm());
        }
        worst / scale
    }
}

type PlanKey = (usize, bool);

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, HashMap<PlanKey, Arc<dyn Fft<f64>>>)>> =
        OnceLock::new();
    let cell = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cell.lock().unwrap_or_else(|e| e.into_inner());
    let (planner, cache) = &mut *guard;
    cache
        .entry((n, inverse))
        .or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

fn transform_in_place(grid: Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let d = grid.dim();
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let total = data.len();
        let block = stride * n;
        let mut lines = vec![Complex64::new(0.0, 0.0); total];
        // gather lines along `axis` into contiguous rows
        let mut row = 0;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for j in 0..n {
                    lines[row * n + j] = data[base + j * stride];
                }
                row += 1;
            }
        }
        fft.process_with_scratch(&mut lines, &mut scratch);
        let mut row = 0;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for j in 0..n {
                    data[base + j * stride] = lines[row * n + j];
                }
                row += 1;
            }
        }
    }
}

pub(crate) fn forward(grid: Grid, samples: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_in_place(grid, &mut data, false);
    data
}

pub(crate) fn inverse_real(grid: Grid, spectrum: &[Complex64]) -> Vec<f64> {
    let mut data = spectrum.to_vec();
    transform_in_place(grid, &mut data, true);
    let scale = 1.0 / data.len() as f64;
    data.iter().map(|c| c.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(0, 16, 1.0).is_err());
        assert!(Grid::new(4, 16, 1.0).is_err());
        assert!(Grid::new(1, 24, 1.0).is_err());
        assert!(Grid::new(1, 8, 1.0).is_err());
        assert!(Grid::new(1, 16, 0.0).is_err());
        let g = Grid::new(2, 16, 4.0).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.coord(8), 0.0);
        assert_eq!(g.freq_index(15), -1);
        assert_eq!(g.freq_index(8), -8);
    }

    #[test]
    fn round_trip_reproduces_samples() {
        for d in 1..=3 {
            let g = Grid::new(d, 16, 10.0).unwrap();
            let u = Field::from_fn(g, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp() + 0.1 * x[0])
                .unwrap();
            let back = inverse_real(g, u.spectrum());
            let scale = u.norm_linf();
            for (a, b) in u.samples().iter().zip(&back) {
                assert!((a - b).abs() <= 1e-12 * scale);
            }
            assert!(u.conjugate_symmetry_defect() < 1e-13);
        }
    }

    #[test]
    fn plane_wave_lands_on_its_mode() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let u = Field::from_fn(g, |x| (3.0 * x[1]).cos()).unwrap();
        let spec = u.spectrum();
        let n = g.len() as f64;
        // modes (0, 3) and (0, -3) carry N/2 each
        let i_plus = 3;
        let i_minus = 16 - 3;
        assert!((spec[i_plus].norm() - n / 2.0).abs() < 1e-9);
        assert!((spec[i_minus].norm() - n / 2.0).abs() < 1e-9);
    }

    #[test]
    fn mirror_maps_coordinates_to_negatives() {
        let g = Grid::new(2, 16, 8.0).unwrap();
        for idx in [1usize, 17, 100, 255] {
            let m = g.mirror(idx);
            let (x, y) = (g.point(idx), g.point(m));
            for a in 0..2 {
                let lhs = x[a];
                let rhs = y[a];
                let ok = (lhs + rhs).abs() < 1e-12 || (lhs.abs() - 4.0).abs() < 1e-12;
                assert!(ok, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn non_finite_samples_rejected() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let mut s = vec![0.0; 16];
        s[3] = f64::NAN;
        assert!(matches!(Field::new(g, s), Err(Error::InvalidField(_))));
    }

    #[test]
    fn norms_of_constant() {
        let g = Grid::new(1, 32, 4.0).unwrap();
        let u = Field::constant(g, -2.0).unwrap();
        assert!((u.norm_l1() - 8.0).abs() < 1e-12);
        assert!((u.norm_l2() - (16.0f64).sqrt()).abs() < 1e-12);
        assert_eq!(u.norm_linf(), 2.0);
        assert!((u.norm_lq(3.0) - (8.0f64 * 4.0).powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((u.integral() + 8.0).abs() < 1e-12);
    }
}
