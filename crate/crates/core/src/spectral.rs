//! Discrete Fourier machinery on a uniform periodic grid.
//!
//! A field sampled at the nodes `x_m = -L/2 + m*dx` is expanded as
//! `f(x) = sum_j c_j exp(i k_j x)` with `k_j = 2*pi*j/L` and mode indices
//! `j` in `-N/2 ..= N/2 - 1`. Coefficient vectors are stored in FFT order:
//! slot `i < N/2` holds mode `i`, slot `i >= N/2` holds mode `i - N`, so the
//! unpaired Nyquist mode `-N/2` sits in slot `N/2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 8;
/// Largest grid accepted by [`dft_reference`].
pub const DFT_REFERENCE_LIMIT: usize = 4096;

const HERMITIAN_TOL: f64 = 1e-12;

pub struct Grid {
    n: usize,
    length: f64,
    dx: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Grid>> {
        if n < MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= {MIN_POINTS}, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain length must be positive and finite, got {length}"
            )));
        }
        let dx = length / n as f64;
        let nodes = (0..n).map(|m| -0.5 * length + m as f64 * dx).collect();
        let wavenumbers = (0..n)
            .map(|i| 2.0 * PI * mode_of_slot(i, n) as f64 / length)
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Grid {
            n,
            length,
            dx,
            nodes,
            wavenumbers,
            forward: planner.plan_fft_forward(n),
            backward: planner.plan_fft_inverse(n),
        }))
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Wavenumbers in FFT slot order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Mode index `j` stored in FFT slot `slot`.
    pub fn mode(&self, slot: usize) -> i64 {
        mode_of_slot(slot, self.n)
    }

    /// FFT slot holding mode `j`, if `j` is representable.
    pub fn slot(&self, j: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if j < -half || j >= half {
            None
        } else if j >= 0 {
            Some(j as usize)
        } else {
            Some((j + self.n as i64) as usize)
        }
    }

    pub fn nyquist_slot(&self) -> usize {
        self.n / 2
    }

    /// Largest resolved |k|, attained by the Nyquist mode.
    pub fn k_max(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Whether slot survives the 2/3 rule (`|j| <= N/3`).
    pub fn is_resolved(&self, slot: usize) -> bool {
        3 * self.mode(slot).unsigned_abs() as usize <= self.n
    }

    /// Spectral coefficients `c_j` of nodal values (no validation).
    pub(crate) fn analyze(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.n);
        let scale = 1.0 / self.n as f64;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        // x_0 = -L/2 contributes the factor (-1)^j, and (-1)^j = (-1)^slot for even N
        for (slot, c) in buf.iter_mut().enumerate() {
            *c *= if slot % 2 == 0 { scale } else { -scale };
        }
        buf
    }

    /// Nodal values of the real part of `sum_j c_j exp(i k_j x)`.
    pub(crate) fn synthesize(&self, coeffs: &[Complex64]) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.n);
        let mut buf: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(slot, &c)| if slot % 2 == 0 { c } else { -c })
            .collect();
        self.backward.process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }
}

fn mode_of_slot(slot: usize, n: usize) -> i64 {
    if slot < n / 2 {
        slot as i64
    } else {
        slot as i64 - n as i64
    }
}

fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Real samples on a [`Grid`].
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidField { index, value });
        }
        Ok(Field { grid, values })
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>) -> Field {
        Field { grid, values }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Field {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Field::from_raw(grid.clone(), values)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Field {
        Field::from_raw(grid.clone(), vec![c; grid.n_points()])
    }

    pub fn zeros(grid: &Arc<Grid>) -> Field {
        Field::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Field::from_raw(self.grid.clone(), values))
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Raw pointwise product (aliased; see [`crate::operators::product`]).
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }
}

/// Fourier coefficients `c_j` of a field, in FFT slot order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Spectrum> {
        if coeffs.len() != grid.n_points() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.n_points(),
                coeffs.len()
            )));
        }
        Ok(Spectrum { grid, coeffs })
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Spectrum {
        Spectrum { grid, coeffs }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Spectrum {
        Spectrum::from_raw(grid.clone(), vec![Complex64::new(0.0, 0.0); grid.n_points()])
    }

    /// Spectrum with the listed `(mode, coefficient)` pairs and zeros elsewhere.
    pub fn from_modes(grid: &Arc<Grid>, modes: &[(i64, Complex64)]) -> Result<Spectrum> {
        let mut s = Spectrum::zeros(grid);
        for &(j, c) in modes {
            let slot = grid.slot(j).ok_or_else(|| {
                Error::InvalidGrid(format!("mode {j} not representable on {} points", grid.n_points()))
            })?;
            s.coeffs[slot] += c;
        }
        Ok(s)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of mode `j` (zero when not representable).
    pub fn coeff(&self, j: i64) -> Complex64 {
        self.grid
            .slot(j)
            .map_or(Complex64::new(0.0, 0.0), |s| self.coeffs[s])
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn linear_combination(&self, a: f64, other: &Spectrum, b: f64) -> Result<Spectrum> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x * a + y * b)
            .collect();
        Ok(Spectrum::from_raw(self.grid.clone(), coeffs))
    }

    /// Largest violation of `c_{-j} = conj(c_j)`, with the mode where it occurs.
    pub fn hermitian_defect(&self) -> (i64, f64) {
        let n = self.grid.n_points();
        let mut worst = (0, 0.0);
        for slot in 0..n {
            let partner = (n - slot) % n;
            let defect = if slot == partner {
                // self-paired modes (mean and Nyquist) must be real
                self.coeffs[slot].im.abs()
            } else {
                (self.coeffs[partner] - self.coeffs[slot].conj()).norm()
            };
            if defect > worst.1 {
                worst = (self.grid.mode(slot), defect);
            }
        }
        worst
    }
}

pub fn forward_transform(f: &Field) -> Result<Spectrum> {
    if let Some((index, &value)) = f.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidField { index, value });
    }
    Ok(Spectrum::from_raw(f.grid.clone(), f.grid.analyze(&f.values)))
}

pub fn inverse_transform(s: &Spectrum) -> Result<Field> {
    let (mode, defect) = s.hermitian_defect();
    if defect > HERMITIAN_TOL * s.max_abs() {
        return Err(Error::AsymmetricSpectrum { mode, defect });
    }
    Ok(Field::from_raw(s.grid.clone(), s.grid.synthesize(&s.coeffs)))
}

/// Multiply every coefficient by `symbol(k_j)`.
///
/// The Nyquist mode stands for both `+k` and `-k`, so it receives the average
/// `(symbol(k) + symbol(-k)) / 2`. For odd symbols such as `ik` or
/// `-i sgn(k)` the average vanishes and the mode is zeroed.
pub fn apply_multiplier(s: &Spectrum, symbol: impl Fn(f64) -> Complex64) -> Spectrum {
    let mut out = s.clone();
    multiply_in_place(&s.grid, &mut out.coeffs, symbol);
    out
}

pub(crate) fn multiply_in_place(
    grid: &Grid,
    coeffs: &mut [Complex64],
    symbol: impl Fn(f64) -> Complex64,
) {
    let nyq = grid.nyquist_slot();
    for (slot, (c, &k)) in coeffs.iter_mut().zip(grid.wavenumbers()).enumerate() {
        let m = if slot == nyq {
            (symbol(k) + symbol(-k)) * 0.5
        } else {
            symbol(k)
        };
        *c *= m;
    }
}

/// 2/3-rule truncation: zero every mode with `|j| > N/3`.
pub fn dealias(s: &Spectrum) -> Spectrum {
    let mut out = s.clone();
    dealias_in_place(&s.grid, &mut out.coeffs);
    out
}

pub(crate) fn dealias_in_place(grid: &Grid, coeffs: &mut [Complex64]) {
    for (slot, c) in coeffs.iter_mut().enumerate() {
        if !grid.is_resolved(slot) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Direct O(N^2) evaluation of `c_j = (1/N) sum_m f(x_m) exp(-i k_j x_m)`.
pub fn dft_reference(f: &Field) -> Result<Spectrum> {
    let grid = &f.grid;
    let n = grid.n_points();
    if n > DFT_REFERENCE_LIMIT {
        return Err(Error::OracleSize {
            n,
            limit: DFT_REFERENCE_LIMIT,
        });
    }
    if let Some((index, &value)) = f.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidField { index, value });
    }
    let coeffs = grid
        .wavenumbers()
        .iter()
        .map(|&k| {
            let sum: Complex64 = grid
                .nodes()
                .iter()
                .zip(&f.values)
                .map(|(&x, &v)| Complex64::from_polar(v, -k * x))
                .sum();
            sum / n as f64
        })
        .collect();
    Ok(Spectrum::from_raw(grid.clone(), coeffs))
}

/// Trigonometric interpolation of `f` onto a grid `factor` times finer.
///
/// The Nyquist coefficient is split evenly between `+N/2` and `-N/2`, so
/// the refined samples are exact values of the real trigonometric
/// polynomial that `f` represents.
pub fn refine(f: &Field, factor: usize) -> Result<Field> {
    let coarse = f.grid();
    let fine = Grid::new(coarse.n_points() * factor, coarse.length())?;
    let coeffs = embed_coeffs(coarse, &coarse.analyze(f.values()), &fine);
    Ok(Field::from_raw(fine.clone(), fine.synthesize(&coeffs)))
}

pub(crate) fn embed_coeffs(coarse: &Grid, coeffs: &[Complex64], fine: &Grid) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); fine.n_points()];
    let nyq = coarse.nyquist_slot();
    for (slot, &c) in coeffs.iter().enumerate() {
        let j = coarse.mode(slot);
        if slot == nyq && fine.n_points() > coarse.n_points() {
            out[fine.slot(j).unwrap()] += c * 0.5;
            out[fine.slot(-j).unwrap()] += c * 0.5;
        } else {
            out[fine.slot(j).unwrap()] += c;
        }
    }
    out
}
