//! Periodic collocation grids, complex fields and spectral calculus.
//!
//! The box `[-L/2, L/2)^N` is sampled with `M` points per axis, row-major with
//! the last axis contiguous. Integrals use the equal-weight trapezoidal rule,
//! derivatives are Fourier multipliers.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::FieldError;

/// Grid dimensions supported by the simulator (exponent arithmetic goes to N = 4).
pub const MAX_GRID_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub dimension: usize,
    /// Box edge length.
    pub length: f64,
    /// Points per axis.
    pub points: usize,
}

impl Grid {
    pub fn new(dimension: usize, length: f64, points: usize) -> Result<Self, FieldError> {
        let grid = Self {
            dimension,
            length,
            points,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if !(1..=MAX_GRID_DIM).contains(&self.dimension) {
            return Err(FieldError::InvalidGrid(format!(
                "dimension {} outside 1..={MAX_GRID_DIM}",
                self.dimension
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(FieldError::InvalidGrid(format!(
                "length {} must be positive",
                self.length
            )));
        }
        if self.points < 8 || !self.points.is_power_of_two() {
            return Err(FieldError::InvalidGrid(format!(
                "points per axis {} must be a power of two >= 8",
                self.points
            )));
        }
        self.points
            .checked_pow(self.dimension as u32)
            .filter(|&n| n <= 1 << 28)
            .ok_or_else(|| FieldError::InvalidGrid("too many grid points".into()))?;
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Quadrature weight `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis_coordinate(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    /// Coordinates of the flat index `idx` written into `out[..dimension]`.
    pub fn coordinates_into(&self, mut idx: usize, out: &mut [f64]) {
        for axis in (0..self.dimension).rev() {
            out[axis] = self.axis_coordinate(idx % self.points);
            idx /= self.points;
        }
    }

    pub fn coordinates(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dimension];
        self.coordinates_into(idx, &mut x);
        x
    }

    /// Angular wavenumber of FFT bin `m` (standard FFT ordering).
    pub fn wavenumber(&self, m: usize) -> f64 {
        let half = self.points / 2;
        let signed = if m < half {
            m as f64
        } else {
            m as f64 - self.points as f64
        };
        std::f64::consts::TAU / self.length * signed
    }

    fn is_nyquist(&self, m: usize) -> bool {
        m == self.points / 2
    }

    /// `|ξ|²` for every flat spectral index.
    pub fn wavenumber_squared(&self) -> Vec<f64> {
        let k2: Vec<f64> = (0..self.points)
            .map(|m| self.wavenumber(m).powi(2))
            .collect();
        let mut out = vec![0.0; self.len()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let mut rest = idx;
            let mut acc = 0.0;
            for _ in 0..self.dimension {
                acc += k2[rest % self.points];
                rest /= self.points;
            }
            *slot = acc;
        }
        out
    }

    /// Largest distance from the center to a box face.
    pub fn half_width(&self) -> f64 {
        0.5 * self.length
    }
}

/// Complex samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<Complex64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(bad) = values
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(FieldError::NonFinite(bad));
        }
        Ok(Self {
            grid: *grid,
            values,
        })
    }

    /// Samples `f` at every grid point.
    pub fn inject<F>(grid: &Grid, mut f: F) -> Self
    where
        F: FnMut(&[f64]) -> Complex64,
    {
        let mut x = [0.0; MAX_GRID_DIM];
        let values = (0..grid.len())
            .map(|idx| {
                grid.coordinates_into(idx, &mut x);
                f(&x[..grid.dimension])
            })
            .collect();
        Self {
            grid: *grid,
            values,
        }
    }

    /// Seeded trigonometric polynomial: `modes` terms with integer wavenumbers
    /// in `[-max_wavenumber, max_wavenumber]` per axis and coefficients in the unit square.
    pub fn random_trigonometric(grid: &Grid, seed: u64, modes: usize, max_wavenumber: i32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(Vec<f64>, Complex64)> = (0..modes)
            .map(|_| {
                let k = (0..grid.dimension)
                    .map(|_| rng.gen_range(-max_wavenumber..=max_wavenumber) as f64)
                    .collect();
                (
                    k,
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let w = std::f64::consts::TAU / grid.length;
        Self::inject(grid, |x| {
            terms
                .iter()
                .map(|(k, c)| {
                    c * Complex64::from_polar(
                        1.0,
                        w * k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>(),
                    )
                })
                .sum()
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    fn check_same_grid(&self, other: &Self) -> Result<(), FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        Ok(())
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: Complex64, other: &Self) -> Result<Self, FieldError> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    /// `self - other`.
    pub fn diff(&self, other: &Self) -> Result<Self, FieldError> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x - y)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z * a).collect(),
        }
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Flat index of the largest modulus.
    pub fn argmax_modulus(&self) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, z) in self.values.iter().enumerate() {
            let r = z.norm();
            if r > best.1 {
                best = (i, r);
            }
        }
        best.0
    }

    /// CSV snapshot: coordinate columns, real part, imaginary part, modulus.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for axis in 0..self.grid.dimension {
            let _ = write!(out, "x{axis},");
        }
        out.push_str("re,im,abs\n");
        let mut x = [0.0; MAX_GRID_DIM];
        for (idx, z) in self.values.iter().enumerate() {
            self.grid.coordinates_into(idx, &mut x);
            for xi in &x[..self.grid.dimension] {
                let _ = write!(out, "{xi:?},");
            }
            let _ = writeln!(out, "{:?},{:?},{:?}", z.re, z.im, z.norm());
        }
        out
    }

    /// Parses a snapshot written by [`ComplexField::to_csv`] back onto `grid`.
    ///
    /// Rows must appear in grid order; coordinates are checked against the grid
    /// to within a tenth of the spacing.
    pub fn from_csv(grid: &Grid, text: &str) -> Result<Self, FieldError> {
        grid.validate()?;
        let err = |line: usize, message: String| FieldError::Snapshot { line, message };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| err(1, "empty snapshot".into()))?;
        let mut expected_header = String::new();
        for axis in 0..grid.dimension {
            let _ = write!(expected_header, "x{axis},");
        }
        expected_header.push_str("re,im,abs");
        if header.trim_end() != expected_header {
            return Err(err(1, format!("expected header `{expected_header}`")));
        }
        let width = grid.dimension + 3;
        let tol = 0.1 * grid.spacing();
        let mut values = Vec::with_capacity(grid.len());
        let mut x = [0.0; MAX_GRID_DIM];
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let idx = values.len();
            if idx >= grid.len() {
                return Err(err(lineno, "more rows than grid points".into()));
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != width {
                return Err(err(
                    lineno,
                    format!("expected {width} columns, found {}", cells.len()),
                ));
            }
            let mut nums = [0.0; MAX_GRID_DIM + 3];
            for (slot, cell) in nums.iter_mut().zip(&cells) {
                *slot = cell
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| err(lineno, format!("`{cell}`: {e}")))?;
                if !slot.is_finite() {
                    return Err(err(lineno, format!("non-finite value `{cell}`")));
                }
            }
            grid.coordinates_into(idx, &mut x);
            for axis in 0..grid.dimension {
                if (nums[axis] - x[axis]).abs() > tol {
                    return Err(err(
                        lineno,
                        format!("coordinate x{axis} = {} off grid", nums[axis]),
                    ));
                }
            }
            values.push(Complex64::new(
                nums[grid.dimension],
                nums[grid.dimension + 1],
            ));
        }
        if values.len() != grid.len() {
            return Err(err(
                text.lines().count(),
                format!("{} rows, grid has {}", values.len(), grid.len()),
            ));
        }
        Ok(Self {
            grid: *grid,
            values,
        })
    }
}

/// Subset of grid points used for restricted norms.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    grid: Grid,
    include: Vec<bool>,
}

impl RegionMask {
    pub fn full(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            include: vec![true; grid.len()],
        }
    }

    pub fn from_predicate<F: FnMut(&[f64]) -> bool>(grid: &Grid, mut keep: F) -> Self {
        let mut x = [0.0; MAX_GRID_DIM];
        let include = (0..grid.len())
            .map(|idx| {
                grid.coordinates_into(idx, &mut x);
                keep(&x[..grid.dimension])
            })
            .collect();
        Self {
            grid: *grid,
            include,
        }
    }

    /// Points farther than `radius` from every center.
    pub fn exterior_of_balls(grid: &Grid, centers: &[Vec<f64>], radius: f64) -> Self {
        Self::from_predicate(grid, |x| centers.iter().all(|c| distance(x, c) > radius))
    }

    /// `{|x| < outer} ∩ {|x - c| > inner for every center}`.
    pub fn annular_set(grid: &Grid, centers: &[Vec<f64>], outer: f64, inner: f64) -> Self {
        Self::from_predicate(grid, |x| {
            norm(x) < outer && centers.iter().all(|c| distance(x, c) > inner)
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.include[idx]
    }

    pub fn count(&self) -> usize {
        self.include.iter().filter(|&&b| b).count()
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// FFT plans and scratch for one grid. Each worker owns its own instance.
pub struct SpectralOps {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
    wavenumbers: Vec<f64>,
    k2: Vec<f64>,
}

impl std::fmt::Debug for SpectralOps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOps")
            .field("grid", &self.grid)
            .finish()
    }
}

impl SpectralOps {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.points);
        let inverse = planner.plan_fft_inverse(grid.points);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            grid: *grid,
            forward,
            inverse,
            line: vec![Complex64::new(0.0, 0.0); grid.points],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            wavenumbers: (0..grid.points).map(|m| grid.wavenumber(m)).collect(),
            k2: grid.wavenumber_squared(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `|ξ|²` per flat spectral index.
    pub fn wavenumber_squared(&self) -> &[f64] {
        &self.k2
    }

    fn transform(&mut self, data: &mut [Complex64], inverse: bool) {
        let m = self.grid.points;
        let plan = if inverse {
            &self.inverse
        } else {
            &self.forward
        };
        if self.grid.dimension == 1 {
            plan.process_with_scratch(data, &mut self.scratch);
            return;
        }
        let total = data.len();
        for axis in 0..self.grid.dimension {
            let stride = m.pow((self.grid.dimension - 1 - axis) as u32);
            if stride == 1 {
                for chunk in data.chunks_exact_mut(m) {
                    plan.process_with_scratch(chunk, &mut self.scratch);
                }
                continue;
            }
            let block = stride * m;
            for start in (0..total).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (i, slot) in self.line.iter_mut().enumerate() {
                        *slot = data[base + i * stride];
                    }
                    plan.process_with_scratch(&mut self.line, &mut self.scratch);
                    for (i, v) in self.line.iter().enumerate() {
                        data[base + i * stride] = *v;
                    }
                }
            }
        }
    }

    /// Unnormalized forward DFT in place.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Normalized inverse DFT in place.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / data.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    pub fn laplacian(&mut self, field: &ComplexField) -> ComplexField {
        let mut values = field.values.clone();
        self.forward(&mut values);
        for (z, k2) in values.iter_mut().zip(&self.k2) {
            *z *= -k2;
        }
        self.inverse(&mut values);
        ComplexField {
            grid: field.grid,
            values,
        }
    }

    /// Spectral partial derivatives, one field per axis. The Nyquist mode is
    /// dropped so that real data keeps real derivatives.
    pub fn gradient(&mut self, field: &ComplexField) -> Vec<ComplexField> {
        let mut spectrum = field.values.clone();
        self.forward(&mut spectrum);
        let mut out = Vec::with_capacity(self.grid.dimension);
        for axis in 0..self.grid.dimension {
            let stride = self
                .grid
                .points
                .pow((self.grid.dimension - 1 - axis) as u32);
            let mut values = spectrum.clone();
            for (idx, z) in values.iter_mut().enumerate() {
                let m = (idx / stride) % self.grid.points;
                if self.grid.is_nyquist(m) {
                    *z = Complex64::new(0.0, 0.0);
                } else {
                    *z *= Complex64::new(0.0, self.wavenumbers[m]);
                }
            }
            self.inverse(&mut values);
            out.push(ComplexField {
                grid: field.grid,
                values,
            });
        }
        out
    }

    /// Physical-space L² norm computed from the spectrum (Parseval).
    pub fn spectral_l2(&mut self, field: &ComplexField) -> f64 {
        let mut values = field.values.clone();
        self.forward(&mut values);
        let sum: f64 = values.iter().map(|z| z.norm_sqr()).sum();
        (self.grid.cell_volume() * sum / values.len() as f64).sqrt()
    }

    /// L², gradient and H¹ norms plus the maximum modulus, optionally restricted.
    ///
    /// Derivatives are always taken on the whole grid and restricted afterwards.
    pub fn norms(
        &mut self,
        field: &ComplexField,
        mask: Option<&RegionMask>,
    ) -> Result<Norms, FieldError> {
        if let Some(mask) = mask {
            if mask.grid != field.grid {
                return Err(FieldError::GridMismatch);
            }
            if mask.count() == 0 {
                return Err(FieldError::EmptyMask);
            }
        }
        let grad = self.gradient(field);
        let keep = |idx: usize| mask.is_none_or(|m| m.include[idx]);
        let w = self.grid.cell_volume();
        let mut l2 = 0.0;
        let mut g2 = 0.0;
        let mut linf: f64 = 0.0;
        for (idx, z) in field.values.iter().enumerate() {
            if !keep(idx) {
                continue;
            }
            l2 += z.norm_sqr();
            linf = linf.max(z.norm());
            for d in &grad {
                g2 += d.values[idx].norm_sqr();
            }
        }
        Ok(Norms {
            l2: (w * l2).sqrt(),
            grad_l2: (w * g2).sqrt(),
            h1: (w * (l2 + g2)).sqrt(),
            linf,
        })
    }
}

/// Norms of a field over the whole grid or a masked region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    /// `‖∇u‖_{L²}`.
    pub grad_l2: f64,
    pub h1: f64,
    pub linf: f64,
}

/// `(h^N Σ |u|^p)^{1/p}` over the grid or a mask.
pub fn lp_norm(field: &ComplexField, p: f64, mask: Option<&RegionMask>) -> Result<f64, FieldError> {
    Ok(lp_power(field, p, mask)?.powf(1.0 / p))
}

/// `‖u‖_{L^p}^p`, the form that appears in the mass identity.
pub fn lp_power(
    field: &ComplexField,
    p: f64,
    mask: Option<&RegionMask>,
) -> Result<f64, FieldError> {
    if !(p >= 1.0) {
        return Err(FieldError::InvalidExponent(p));
    }
    if let Some(mask) = mask {
        if mask.grid != field.grid {
            return Err(FieldError::GridMismatch);
        }
        if mask.count() == 0 {
            return Err(FieldError::EmptyMask);
        }
    }
    let sum: f64 = field
        .values
        .iter()
        .enumerate()
        .filter(|(idx, _)| mask.is_none_or(|m| m.include[*idx]))
        .map(|(_, z)| z.norm().powf(p))
        .sum();
    Ok(field.grid.cell_volume() * sum)
}

/// `‖∇u‖^{θp} ‖u‖^{(1-θ)p} / ‖u‖_{L^p}^p` with `θ = N(1/2 - 1/p)`, the ratio
/// bounded below in the Gagliardo–Nirenberg inequality. Invariant under `u → λu`.
pub fn gagliardo_nirenberg_ratio(
    ops: &mut SpectralOps,
    field: &ComplexField,
    p: f64,
) -> Result<f64, FieldError> {
    let n = field.grid.dimension as f64;
    let theta = n * (0.5 - 1.0 / p);
    if !(p >= 2.0) || theta > 1.0 {
        return Err(FieldError::InvalidExponent(p));
    }
    let norms = ops.norms(field, None)?;
    let lhs = lp_power(field, p, None)?;
    Ok(norms.grad_l2.powf(theta * p) * norms.l2.powf((1.0 - theta) * p) / lhs)
}
