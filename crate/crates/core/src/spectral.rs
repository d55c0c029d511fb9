//! Periodic-box discretization of `R^n` and the spectral operators on it.
//!
//! The box is `[-L, L)^n` with `N` points per axis. Fourier multipliers follow
//! the equation `i u_t - Δu = 0`, so the free group multiplies the Fourier
//! coefficients by `exp(+i t |ξ|^2)`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExtExponent;
use crate::fit::linear_fit;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points: usize,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2, 3}}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width {half_width} must be positive")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "{points} points per axis: need a power of two >= 8"
            )));
        }
        Ok(Self { dim, half_width, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Same resolution on a box scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { half_width: self.half_width * factor, ..*self }
    }

    /// Grid coordinates along one axis, `x_j = -L + j h`.
    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|j| -self.half_width + j as f64 * h).collect()
    }

    /// Angular wavenumbers along one axis in DFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        let scale = PI / self.half_width;
        (0..n)
            .map(|j| if j < n / 2 { j } else { j - n } as f64 * scale)
            .collect()
    }

    pub fn max_wavenumber(&self) -> f64 {
        PI / self.spacing()
    }

    /// Multi-index of a flat row-major index.
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for a in (0..self.dim).rev() {
            idx[a] = rest % self.points;
            rest /= self.points;
        }
        idx
    }

    /// `|x|^2` at each grid point.
    pub fn radius_squared(&self) -> Vec<f64> {
        let ax = self.axis();
        (0..self.len())
            .map(|i| {
                let idx = self.unravel(i);
                (0..self.dim).map(|a| ax[idx[a]] * ax[idx[a]]).sum()
            })
            .collect()
    }

    /// `|ξ|^2` at each Fourier index.
    pub fn wavenumber_squared(&self) -> Vec<f64> {
        let k = self.wavenumbers();
        (0..self.len())
            .map(|i| {
                let idx = self.unravel(i);
                (0..self.dim).map(|a| k[idx[a]] * k[idx[a]]).sum()
            })
            .collect()
    }

    /// Sup-norm distance of each point from the origin, `max_a |x_a|`.
    fn box_radius(&self) -> Vec<f64> {
        let ax = self.axis();
        (0..self.len())
            .map(|i| {
                let idx = self.unravel(i);
                (0..self.dim).map(|a| ax[idx[a]].abs()).fold(0.0, f64::max)
            })
            .collect()
    }
}

/// Complex samples on a grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::pre("field contains non-finite values"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples `f` at every grid point; the closure receives the coordinates.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let ax = grid.axis();
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                let idx = grid.unravel(i);
                for a in 0..grid.dim() {
                    x[a] = ax[idx[a]];
                }
                f(&x)
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
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

    /// Same samples reinterpreted on another grid with identical shape.
    pub fn with_grid(self, grid: Grid) -> Self {
        assert_eq!(grid.len(), self.grid.len(), "grid shape mismatch");
        Self { grid, values: self.values }
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| v * c).collect())
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.grid.len(), other.grid.len());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Self::from_raw(self.grid, values)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.grid.len(), other.grid.len());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self::from_raw(self.grid, values)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.grid.len(), other.grid.len());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Self::from_raw(self.grid, values)
    }

    pub fn l2_norm(&self) -> f64 {
        lq_norm_f64(&self.values, 2.0, self.grid.cell_volume())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `∫ u conj(v)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        s * self.grid.cell_volume()
    }
}

pub(crate) fn lq_norm_f64(values: &[Complex64], q: f64, cell: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    if q == 2.0 {
        return (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sqrt();
    }
    let sum: f64 = if q.fract() == 0.0 && q <= 64.0 {
        let k = q as i32;
        if k % 2 == 0 {
            values.iter().map(|v| v.norm_sqr().powi(k / 2)).sum()
        } else {
            values.iter().map(|v| v.norm().powi(k)).sum()
        }
    } else {
        values.iter().map(|v| v.norm().powf(q)).sum()
    };
    (sum * cell).powf(1.0 / q)
}

/// Riemann-sum `L^q` norm; `q = inf` is the grid maximum.
pub fn lq_norm(u: &ComplexField, q: ExtExponent) -> f64 {
    lq_norm_f64(&u.values, q.to_f64(), u.grid.cell_volume())
}

/// Axis-by-axis n-dimensional FFT on a fixed grid shape.
#[derive(Clone)]
pub struct FourierTransform {
    dim: usize,
    points: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FourierTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierTransform")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .finish()
    }
}

impl FourierTransform {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dim: grid.dim(),
            points: grid.points(),
            forward: planner.plan_fft_forward(grid.points()),
            inverse: planner.plan_fft_inverse(grid.points()),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/N^n` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let norm = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= norm);
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.points;
        let total = data.len();
        // last axis is contiguous
        fft.process(data);
        if self.dim == 1 {
            return;
        }
        let mut lines = vec![Complex64::new(0.0, 0.0); total];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = total / (stride * n);
            let mut line = 0;
            for o in 0..outer {
                for i in 0..stride {
                    let base = o * stride * n + i;
                    for j in 0..n {
                        lines[line * n + j] = data[base + j * stride];
                    }
                    line += 1;
                }
            }
            fft.process(&mut lines);
            let mut line = 0;
            for o in 0..outer {
                for i in 0..stride {
                    let base = o * stride * n + i;
                    for j in 0..n {
                        data[base + j * stride] = lines[line * n + j];
                    }
                    line += 1;
                }
            }
        }
    }
}

/// Diagonal Fourier multiplier `m(ξ)` applied as `F^{-1} m F`.
#[derive(Clone, Debug)]
pub struct FourierMultiplier {
    ft: FourierTransform,
    symbol: Vec<Complex64>,
}

impl FourierMultiplier {
    pub fn new(grid: &Grid, symbol: impl Fn(f64) -> Complex64) -> Self {
        let symbol = grid.wavenumber_squared().into_iter().map(symbol).collect();
        Self { ft: FourierTransform::new(grid), symbol }
    }

    pub fn apply_in_place(&self, data: &mut [Complex64]) {
        self.ft.forward(data);
        data.iter_mut().zip(&self.symbol).for_each(|(v, m)| *v *= m);
        self.ft.inverse(data);
    }

    pub fn apply(&self, u: &ComplexField) -> ComplexField {
        let mut values = u.values.clone();
        self.apply_in_place(&mut values);
        ComplexField::from_raw(u.grid, values)
    }
}

/// The free group `exp(+i t |ξ|^2)` for a fixed time step.
pub fn free_multiplier(grid: &Grid, t: f64) -> FourierMultiplier {
    FourierMultiplier::new(grid, |k2| Complex64::from_polar(1.0, t * k2))
}

pub fn free_propagate(u: &ComplexField, t: f64) -> ComplexField {
    if t == 0.0 {
        return u.clone();
    }
    free_multiplier(&u.grid, t).apply(u)
}

/// Spectral Laplacian, symbol `-|ξ|^2`.
pub fn laplacian(u: &ComplexField) -> ComplexField {
    FourierMultiplier::new(&u.grid, |k2| Complex64::new(-k2, 0.0)).apply(u)
}

/// `∫ |∇u|^2` via Parseval.
pub fn dirichlet_energy(u: &ComplexField) -> f64 {
    let ft = FourierTransform::new(&u.grid);
    let mut values = u.values.clone();
    ft.forward(&mut values);
    let k2 = u.grid.wavenumber_squared();
    let n = values.len() as f64;
    let sum: f64 = values.iter().zip(&k2).map(|(v, k)| v.norm_sqr() * k).sum();
    sum * u.grid.cell_volume() / n
}

/// Spectral gradient, one field per axis.
pub fn gradient(u: &ComplexField) -> Vec<ComplexField> {
    let grid = u.grid;
    let ft = FourierTransform::new(&grid);
    let mut hat = u.values.clone();
    ft.forward(&mut hat);
    let k = grid.wavenumbers();
    let half = grid.points() / 2;
    (0..grid.dim())
        .map(|a| {
            let mut d: Vec<Complex64> = hat
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let m = grid.unravel(i)[a];
                    // the Nyquist mode has no odd part
                    if m == half {
                        Complex64::new(0.0, 0.0)
                    } else {
                        v * Complex64::new(0.0, k[m])
                    }
                })
                .collect();
            ft.inverse(&mut d);
            ComplexField::from_raw(grid, d)
        })
        .collect()
}

/// Periodic band-limited interpolation weight for offset `d` on an axis
/// with `n` points and spacing `h`.
fn periodic_sinc(d: f64, n: usize, h: f64) -> f64 {
    let t = (PI * d / (n as f64 * h)).tan();
    if t.abs() < 1e-14 {
        // d is a whole number of periods; the limit is 1 for even n
        return 1.0;
    }
    (PI * d / h).sin() / (n as f64 * t)
}

/// Row-major interpolation matrix from the grid axis to the targets;
/// targets outside `[-L, L)` get zero rows.
fn interpolation_matrix(grid: &Grid, targets: &[f64]) -> Vec<f64> {
    let ax = grid.axis();
    let n = grid.points();
    let h = grid.spacing();
    let l = grid.half_width();
    let mut m = vec![0.0; targets.len() * n];
    for (i, &y) in targets.iter().enumerate() {
        if y < -l * (1.0 + 1e-12) || y >= l * (1.0 - 1e-12) {
            continue;
        }
        let row = &mut m[i * n..(i + 1) * n];
        let hit = ax.iter().position(|&x| (x - y).abs() <= 1e-12 * l.max(1.0));
        match hit {
            Some(j) => row[j] = 1.0,
            None => {
                for (j, &x) in ax.iter().enumerate() {
                    row[j] = periodic_sinc(y - x, n, h);
                }
            }
        }
    }
    m
}

fn apply_along_axis(
    data: &[Complex64],
    shape: &[usize],
    axis: usize,
    matrix: &[f64],
    out_len: usize,
) -> (Vec<Complex64>, Vec<usize>) {
    let n_in = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * out_len * inner];
    for o in 0..outer {
        for i_out in 0..out_len {
            let row = &matrix[i_out * n_in..(i_out + 1) * n_in];
            let dst = (o * out_len + i_out) * inner;
            for (j, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = (o * n_in + j) * inner;
                for k in 0..inner {
                    out[dst + k] += data[src + k] * w;
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = out_len;
    (out, new_shape)
}

/// Evaluates the band-limited interpolant of `u` on the tensor product of
/// per-axis target coordinates. Points outside the box evaluate to zero.
pub fn sample_on_axes(u: &ComplexField, targets: &[Vec<f64>]) -> Vec<Complex64> {
    let grid = u.grid;
    assert_eq!(targets.len(), grid.dim());
    let mut data = u.values.clone();
    let mut shape = vec![grid.points(); grid.dim()];
    for (axis, t) in targets.iter().enumerate() {
        let m = interpolation_matrix(&grid, t);
        let (next, next_shape) = apply_along_axis(&data, &shape, axis, &m, t.len());
        data = next;
        shape = next_shape;
    }
    data
}

/// Resamples `u` onto `target`, with every target coordinate mapped by `map`
/// before the lookup (so `map = |x| eps * x` evaluates `u(eps x)`).
pub fn resample_mapped(u: &ComplexField, target: &Grid, map: impl Fn(f64) -> f64) -> ComplexField {
    assert_eq!(u.grid.dim(), target.dim());
    let axis: Vec<f64> = target.axis().into_iter().map(map).collect();
    let targets = vec![axis; target.dim()];
    ComplexField::from_raw(*target, sample_on_axes(u, &targets))
}

pub fn resample(u: &ComplexField, target: &Grid) -> ComplexField {
    if u.grid == *target {
        return u.clone();
    }
    resample_mapped(u, target, |x| x)
}

/// Domain-truncation contract for fields standing in for functions on `R^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainGuard {
    /// Allowed fraction of mass in the outer shell.
    pub tolerance: f64,
    /// Shell thickness as a fraction of the half-width.
    pub shell: f64,
}

impl Default for DomainGuard {
    fn default() -> Self {
        Self { tolerance: 1e-8, shell: 0.1 }
    }
}

impl DomainGuard {
    /// Fraction of `|u|^2` mass at sup-distance beyond `radius`.
    fn mass_beyond(u: &ComplexField, radius: f64) -> f64 {
        let r = u.grid.box_radius();
        let (mut outside, mut total) = (0.0, 0.0);
        for (v, ri) in u.values.iter().zip(&r) {
            let m = v.norm_sqr();
            total += m;
            if *ri > radius {
                outside += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }

    pub fn shell_fraction(&self, u: &ComplexField) -> f64 {
        Self::mass_beyond(u, (1.0 - self.shell) * u.grid.half_width())
    }

    pub fn check(&self, u: &ComplexField) -> Result<()> {
        let fraction = self.shell_fraction(u);
        if fraction > self.tolerance {
            return Err(Error::SupportEscape { fraction, tolerance: self.tolerance });
        }
        Ok(())
    }

    /// Fraction of spectral energy above `cutoff` (sup-norm over axes).
    pub fn spectral_fraction(&self, u: &ComplexField, cutoff: f64) -> f64 {
        let grid = u.grid;
        let ft = FourierTransform::new(&grid);
        let mut hat = u.values.clone();
        ft.forward(&mut hat);
        let k = grid.wavenumbers();
        let (mut high, mut total) = (0.0, 0.0);
        for (i, v) in hat.iter().enumerate() {
            let idx = grid.unravel(i);
            let kmax = (0..grid.dim()).map(|a| k[idx[a]].abs()).fold(0.0, f64::max);
            let m = v.norm_sqr();
            total += m;
            if kmax > cutoff {
                high += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            high / total
        }
    }
}

/// Samples `x -> f(eps x)` on the same grid by band-limited interpolation.
pub fn rescale_field(f: &ComplexField, eps: f64, guard: &DomainGuard) -> Result<ComplexField> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::pre(format!("rescaling factor {eps} must be positive")));
    }
    if eps == 1.0 {
        return Ok(f.clone());
    }
    let radius = (1.0 - guard.shell) * eps.min(1.0) * f.grid.half_width();
    let fraction = DomainGuard::mass_beyond(f, radius);
    if fraction > guard.tolerance {
        return Err(Error::SupportEscape { fraction, tolerance: guard.tolerance });
    }
    if eps > 1.0 {
        let cutoff = (1.0 - guard.shell) * f.grid.max_wavenumber() / eps;
        let fraction = guard.spectral_fraction(f, cutoff);
        if fraction > guard.tolerance {
            return Err(Error::Unresolved { fraction, tolerance: guard.tolerance });
        }
    }
    Ok(resample_mapped(f, &f.grid, |x| eps * x))
}

/// Result of a log-log fit of the sup norm of a free evolution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub times: Vec<f64>,
    pub sup_norms: Vec<f64>,
}

/// Log-spaced sample times on `[t0, t1]`.
pub fn log_times(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    assert!(t0 > 0.0 && t1 > t0 && count >= 2);
    let (a, b) = (t0.ln(), t1.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Least-squares slope of `log ||exp(itΔ) u0||_inf` against `log t`.
pub fn dispersive_decay_fit(
    u0: &ComplexField,
    times: &[f64],
    guard: &DomainGuard,
) -> Result<DecayFit> {
    if times.len() < 2 || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::pre("decay fit needs at least two positive times"));
    }
    let grid = u0.grid;
    let ft = FourierTransform::new(&grid);
    let k2 = grid.wavenumber_squared();
    let mut hat = u0.values.clone();
    ft.forward(&mut hat);
    let mut sup_norms = Vec::with_capacity(times.len());
    for &t in times {
        let mut v: Vec<Complex64> = hat
            .iter()
            .zip(&k2)
            .map(|(c, k)| c * Complex64::from_polar(1.0, t * k))
            .collect();
        ft.inverse(&mut v);
        let field = ComplexField::from_raw(grid, v);
        guard.check(&field)?;
        sup_norms.push(field.max_abs());
    }
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = sup_norms.iter().map(|s| s.ln()).collect();
    let (slope, _) = linear_fit(&xs, &ys);
    Ok(DecayFit { slope, times: times.to_vec(), sup_norms })
}

/// Time-sampled states with their `L^2` norms.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexField>,
    pub energy_log: Vec<f64>,
}

impl Trajectory {
    pub fn push(&mut self, t: f64, state: ComplexField) {
        if let Some(&last) = self.times.last() {
            assert!(t > last, "trajectory times must increase ({t} after {last})");
            assert_eq!(self.states[0].grid, state.grid, "trajectory grid changed");
        }
        self.energy_log.push(state.l2_norm());
        self.times.push(t);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&ComplexField> {
        self.states.last()
    }

    /// Appends another trajectory whose first sample repeats our last one.
    pub fn extend_chained(&mut self, other: Trajectory) {
        let skip = match (self.times.last(), other.times.first()) {
            (Some(a), Some(b)) if (a - b).abs() <= 1e-12 * a.abs().max(1.0) => 1,
            _ => 0,
        };
        for ((t, s), e) in other.times.into_iter().zip(other.states).zip(other.energy_log).skip(skip) {
            self.times.push(t);
            self.states.push(s);
            self.energy_log.push(e);
        }
    }

    /// Maximum relative deviation of the `L^2` norm from its initial value.
    pub fn energy_drift(&self) -> f64 {
        let Some(&e0) = self.energy_log.first() else { return 0.0 };
        if e0 == 0.0 {
            return self.energy_log.iter().cloned().fold(0.0, f64::max);
        }
        self.energy_log.iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max)
    }
}

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"STRZ";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Writes the binary snapshot: magic, version, n, N (u32), L (f64), then
/// `N^n` complex values as `(re, im)` f64 pairs, all little-endian.
pub fn write_snapshot<W: Write>(u: &ComplexField, mut w: W) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(u.grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(u.grid.points() as u32).to_le_bytes())?;
    w.write_all(&u.grid.half_width().to_le_bytes())?;
    let mut buf = Vec::with_capacity(u.values.len() * 16);
    for v in &u.values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<ComplexField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    r.read_exact(&mut word)?;
    let dim = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let points = u32::from_le_bytes(word) as usize;
    let mut dword = [0u8; 8];
    r.read_exact(&mut dword)?;
    let half_width = f64::from_le_bytes(dword);
    let grid = Grid::new(dim, half_width, points).map_err(|e| Error::Format(e.to_string()))?;
    let mut raw = vec![0u8; grid.len() * 16];
    r.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    ComplexField::new(grid, values)
}

/// Standard Gaussian `exp(-|x|^2 / (2 sigma^2))`.
pub fn gaussian(grid: Grid, sigma: f64) -> ComplexField {
    ComplexField::from_real_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-r2 / (2.0 * sigma * sigma)).exp()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn grid_examples() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        assert_eq!(g.spacing(), 0.125);
        assert_eq!(Grid::new(2, 10.0, 128).unwrap().len(), 128 * 128);
        assert_eq!(Grid::new(3, 8.0, 64).unwrap().len(), 64 * 64 * 64);
        assert!(Grid::new(4, 1.0, 8).is_err());
        assert!(Grid::new(1, 1.0, 12).is_err());
        assert!(Grid::new(1, 1.0, 4).is_err());
        assert!(Grid::new(1, -1.0, 8).is_err());
        let ax = g.axis();
        assert_eq!(ax[0], -16.0);
        assert!(ax[255] < 16.0);
    }

    #[test]
    fn fft_round_trip_3d() {
        let g = Grid::new(3, 4.0, 8).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::new(x[0] - 0.3 * x[1], x[2] * x[0]));
        let ft = FourierTransform::new(&g);
        let mut v = u.values().to_vec();
        ft.forward(&mut v);
        ft.inverse(&mut v);
        for (a, b) in v.iter().zip(u.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_is_an_eigenfunction() {
        let g = Grid::new(2, 3.0, 16).unwrap();
        let k = g.wavenumbers();
        let (k0, k1) = (k[2], k[3]);
        let u = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, k0 * x[0] + k1 * x[1]));
        let t = 0.37;
        let v = free_propagate(&u, t);
        let phase = Complex64::from_polar(1.0, t * (k0 * k0 + k1 * k1));
        for (a, b) in v.values().iter().zip(u.values()) {
            assert!((a - b * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let g = Grid::new(1, 8.0, 64).unwrap();
        let u = gaussian(g, 1.0);
        assert_eq!(free_propagate(&u, 0.0), u);
    }

    #[test]
    fn lq_norm_examples() {
        let g = Grid::new(1, 5.0, 64).unwrap();
        let u = ComplexField::from_fn(g, |_| c(3.0));
        let expect = 3.0 * (10.0f64).sqrt();
        assert!((lq_norm(&u, ExtExponent::int(2)) - expect).abs() < 1e-12);
        let v = ComplexField::from_fn(g, |x| c(x[0]));
        assert_eq!(lq_norm(&v, ExtExponent::INF), 5.0);
        let gauss = gaussian(Grid::new(1, 16.0, 256).unwrap(), 1.0);
        let pi_quarter = std::f64::consts::PI.powf(0.25);
        assert!((lq_norm(&gauss, ExtExponent::int(2)) - pi_quarter).abs() < 1e-12);
    }

    #[test]
    fn interpolation_reproduces_band_limited_data() {
        let g = Grid::new(1, 4.0, 32).unwrap();
        let k = g.wavenumbers()[3];
        let u = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, k * x[0]) + c((2.0 * k * x[0]).cos()));
        let targets = vec![vec![-3.91, -0.123, 0.0, 1.7, 3.99]];
        let out = sample_on_axes(&u, &targets);
        for (y, v) in targets[0].iter().zip(&out) {
            let exact = Complex64::from_polar(1.0, k * y) + c((2.0 * k * y).cos());
            assert!((v - exact).norm() < 1e-12, "{y}: {v} vs {exact}");
        }
        let outside = sample_on_axes(&u, &[vec![-4.5, 4.0, 7.0]]);
        assert!(outside.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn rescale_examples() {
        let guard = DomainGuard::default();
        let g = Grid::new(1, 16.0, 256).unwrap();
        let u = gaussian(g, 1.0);
        assert_eq!(rescale_field(&u, 1.0, &guard).unwrap(), u);
        let v = rescale_field(&u, 2.0, &guard).unwrap();
        let two = ExtExponent::int(2);
        let ratio = lq_norm(&v, two) / lq_norm(&u, two);
        assert!((ratio - 2f64.powf(-0.5)).abs() < 1e-10);

        let g3 = Grid::new(3, 12.0, 64).unwrap();
        let u3 = gaussian(g3, 1.5);
        let v3 = rescale_field(&u3, 2.0, &guard).unwrap();
        let ratio = lq_norm(&v3, two) / lq_norm(&u3, two);
        assert!((ratio - 2f64.powf(-1.5)).abs() < 1e-8, "{ratio}");

        let g2 = Grid::new(2, 16.0, 128).unwrap();
        let u2 = gaussian(g2, 1.0);
        let v2 = rescale_field(&u2, 0.5, &guard).unwrap();
        let four = ExtExponent::int(4);
        let ratio = lq_norm(&v2, four) / lq_norm(&u2, four);
        assert!((ratio - 2f64.sqrt()).abs() < 1e-8, "{ratio}");
    }

    #[test]
    fn rescale_rejects_escape_and_underresolution() {
        let guard = DomainGuard::default();
        let g = Grid::new(1, 8.0, 64).unwrap();
        let u = gaussian(g, 1.0);
        assert!(matches!(rescale_field(&u, 0.25, &guard), Err(Error::SupportEscape { .. })));
        assert!(matches!(rescale_field(&u, 8.0, &guard), Err(Error::Unresolved { .. })));
    }

    #[test]
    fn snapshot_round_trip() {
        let g = Grid::new(2, 3.5, 8).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::new(x[0], -x[1] * 0.5));
        let mut buf = Vec::new();
        write_snapshot(&u, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"STRZ");
        assert_eq!(buf.len(), 4 + 4 + 4 + 4 + 8 + 64 * 16);
        assert_eq!(read_snapshot(buf.as_slice()).unwrap(), u);
        buf[0] = b'X';
        assert!(matches!(read_snapshot(buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn trajectory_energy_drift() {
        let g = Grid::new(1, 4.0, 8).unwrap();
        let mut traj = Trajectory::default();
        traj.push(0.0, ComplexField::from_fn(g, |_| c(1.0)));
        traj.push(1.0, ComplexField::from_fn(g, |_| c(1.01)));
        assert!((traj.energy_drift() - 0.01).abs() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn trajectory_rejects_non_increasing_times() {
        let g = Grid::new(1, 4.0, 8).unwrap();
        let mut traj = Trajectory::default();
        traj.push(1.0, ComplexField::zeros(g));
        traj.push(1.0, ComplexField::zeros(g));
    }
}
