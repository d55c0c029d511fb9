//! Ground state of `-Δf + f = μ w f` and the standing wave it produces.
//!
//! `μ` is the smallest positive generalized eigenvalue. We run inverse
//! iteration on `(-Δ + 1)^{-1}(w ·)` and accelerate it with a three-term
//! Rayleigh-Ritz step (the previous search direction is kept, as in LOBPCG).

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    dirichlet_energy, laplacian, ComplexField, DomainGuard, FourierMultiplier, Grid,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateOptions {
    /// Target for `||-Δf + f - μ w f||_2 / ||f||_2`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 5000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundPair {
    pub mu: f64,
    pub f: ComplexField,
    pub w: ComplexField,
    pub residual: f64,
    pub iterations: usize,
}

impl GroundPair {
    /// `∫ w |f|^2`; equal to one after normalization.
    pub fn constraint(&self) -> f64 {
        weighted_mass(&self.w, &self.f)
    }

    /// `∫ |∇f|^2 + |f|^2`, which equals `μ` at an exact eigenpair.
    pub fn variational_energy(&self) -> f64 {
        dirichlet_energy(&self.f) + self.f.l2_norm().powi(2)
    }

    /// Fraction of `|f̂|^2` above two thirds of the grid cutoff.
    pub fn spectral_tail(&self) -> f64 {
        let cutoff = 2.0 * self.f.grid().max_wavenumber() / 3.0;
        DomainGuard::default().spectral_fraction(&self.f, cutoff)
    }
}

fn weighted_mass(w: &ComplexField, f: &ComplexField) -> f64 {
    let s: f64 = w.values().iter().zip(f.values()).map(|(a, b)| a.re * b.norm_sqr()).sum();
    s * w.grid().cell_volume()
}

/// `amplitude * exp(-|x - center|^2 / (2 sigma^2))`, set to zero where it
/// falls below machine precision relative to the peak.
pub fn gaussian_weight(grid: Grid, amplitude: f64, sigma: f64, center: &[f64]) -> ComplexField {
    ComplexField::from_real_fn(grid, |x| {
        let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
        let v = (-r2 / (2.0 * sigma * sigma)).exp();
        if v < f64::EPSILON {
            0.0
        } else {
            amplitude * v
        }
    })
}

/// Default weight: a unit Gaussian bump at the origin.
pub fn default_weight(grid: Grid) -> ComplexField {
    gaussian_weight(grid, 1.0, 1.0, &[0.0; 3][..grid.dim()])
}

struct Ops {
    grid: Grid,
    helmholtz: FourierMultiplier,
    w: Vec<f64>,
}

impl Ops {
    fn field(&self, v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    /// `(-Δ + 1) v`.
    fn a(&self, v: &[f64]) -> Vec<f64> {
        let mut d = self.field(v);
        self.helmholtz.apply_in_place(&mut d);
        d.into_iter().map(|z| z.re).collect()
    }

    fn b(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.w).map(|(a, b)| a * b).collect()
    }

    /// `(-Δ + 1)^{-1} v`.
    fn a_inv(&self, v: &[f64]) -> Vec<f64> {
        let mut d = self.field(v);
        let ft = crate::spectral::FourierTransform::new(&self.grid);
        ft.forward(&mut d);
        for (z, k2) in d.iter_mut().zip(self.grid.wavenumber_squared()) {
            *z /= 1.0 + k2;
        }
        ft.inverse(&mut d);
        d.into_iter().map(|z| z.re).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Computes the ground pair for the weight `w`.
pub fn ground_pair(w: &ComplexField, opts: &GroundStateOptions) -> Result<GroundPair> {
    let grid = *w.grid();
    let scale = w.max_abs();
    if !w.is_real(1e-12 * scale.max(1.0)) {
        return Err(Error::pre("weight must be real-valued"));
    }
    let wr: Vec<f64> = w.values().iter().map(|v| v.re).collect();
    let wmax = wr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(wmax > 0.0) {
        return Err(Error::EmptyConstraint);
    }
    let guard = DomainGuard::default();
    let edge = shell_max(w, &guard);
    if edge > guard.tolerance * scale {
        return Err(Error::pre(format!(
            "weight is not supported inside the box (outer-shell magnitude {edge:.3e})"
        )));
    }
    let ops = Ops {
        grid,
        helmholtz: FourierMultiplier::new(&grid, |k2| Complex64::new(1.0 + k2, 0.0)),
        w: wr.clone(),
    };

    let mut x: Vec<f64> = wr.iter().map(|&v| v.max(0.0)).collect();
    let mut prev: Option<Vec<f64>> = None;
    let mut last = (0.0, f64::INFINITY);
    for it in 0..opts.max_iter {
        let ax = ops.a(&x);
        let bx = ops.b(&x);
        let theta = dot(&x, &bx) / dot(&x, &ax);
        let mu = 1.0 / theta;
        let r: Vec<f64> = ax.iter().zip(&bx).map(|(a, b)| a - mu * b).collect();
        let residual = norm(&r) / norm(&x);
        last = (mu, residual);
        if residual < opts.tol && theta > 0.0 {
            return Ok(finish(grid, w.clone(), x, mu, &ops, it));
        }
        let z = ops.a_inv(&bx);
        let mut basis = vec![x.clone(), z];
        if let Some(p) = prev.take() {
            basis.push(p);
        }
        let v = a_orthonormalize(&ops, basis);
        let k = v.len();
        let bv: Vec<Vec<f64>> = v.iter().map(|c| ops.b(c)).collect();
        let mut bs = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                bs[(i, j)] = dot(&v[i], &bv[j]);
            }
        }
        let bs = (bs.clone() + bs.transpose()) * 0.5;
        let eig = SymmetricEigen::new(bs);
        let top = eig.eigenvalues.imax();
        let y = eig.eigenvectors.column(top);
        let mut next = vec![0.0; x.len()];
        for (c, yc) in v.iter().zip(y.iter()) {
            next.iter_mut().zip(c).for_each(|(n, ci)| *n += yc * ci);
        }
        // direction that excludes the current iterate
        let mut p = vec![0.0; x.len()];
        for (c, yc) in v.iter().zip(y.iter()).skip(1) {
            p.iter_mut().zip(c).for_each(|(n, ci)| *n += yc * ci);
        }
        let nn = norm(&next);
        next.iter_mut().for_each(|v| *v /= nn);
        let pn = norm(&p);
        prev = (pn > 0.0).then(|| p.into_iter().map(|v| v / pn).collect());
        x = next;
    }
    Err(Error::Convergence(format!(
        "ground state stalled after {} iterations (mu = {:.6e}, residual = {:.3e})",
        opts.max_iter, last.0, last.1
    )))
}

/// Gram-Schmidt in the `(-Δ + 1)` inner product; nearly dependent vectors
/// are dropped.
fn a_orthonormalize(ops: &Ops, basis: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut aout: Vec<Vec<f64>> = Vec::new();
    for mut v in basis {
        for _ in 0..2 {
            for (o, ao) in out.iter().zip(&aout) {
                let c = dot(&v, ao);
                v.iter_mut().zip(o).for_each(|(a, b)| *a -= c * b);
            }
        }
        let av = ops.a(&v);
        let nrm = dot(&v, &av);
        let scale = norm(&v);
        if !(nrm > 1e-26 * scale * scale) || scale == 0.0 {
            continue;
        }
        let s = nrm.sqrt();
        out.push(v.iter().map(|a| a / s).collect());
        aout.push(av.iter().map(|a| a / s).collect());
    }
    out
}

fn finish(grid: Grid, w: ComplexField, x: Vec<f64>, mu: f64, ops: &Ops, iterations: usize) -> GroundPair {
    let m = dot(&x, &ops.b(&x)) * grid.cell_volume();
    let mut f: Vec<f64> = x.iter().map(|v| v / m.sqrt()).collect();
    let peak = ops
        .w
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    if f[peak] < 0.0 {
        f.iter_mut().for_each(|v| *v = -*v);
    }
    let af = ops.a(&f);
    let bf = ops.b(&f);
    let r: Vec<f64> = af.iter().zip(&bf).map(|(a, b)| a - mu * b).collect();
    let residual = norm(&r) / norm(&f);
    let f = ComplexField::from_raw(grid, ops.field(&f));
    GroundPair { mu, f, w, residual, iterations }
}

/// Largest `|w|` in the outer shell of the box.
fn shell_max(w: &ComplexField, guard: &DomainGuard) -> f64 {
    let radius = (1.0 - guard.shell) * w.grid().half_width();
    let ax = w.grid().axis();
    w.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let idx = w.grid().unravel(*i);
            (0..w.grid().dim()).any(|a| ax[idx[a]].abs() > radius)
        })
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
}

/// Potential `W = -μ w` and initial datum `u0 = f`; `e^{-it} u0` then solves
/// the equation with `V = W`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandingWave {
    pub mu: f64,
    pub potential: ComplexField,
    pub profile: ComplexField,
}

impl StandingWave {
    /// `||-Δu0 + W u0 + u0||_2 / ||u0||_2`.
    pub fn residual(&self) -> f64 {
        let lhs = laplacian(&self.profile)
            .scale_real(-1.0)
            .add(&self.potential.mul(&self.profile))
            .add(&self.profile);
        lhs.l2_norm() / self.profile.l2_norm()
    }

    /// Exact solution `e^{-it} u0`.
    pub fn at(&self, t: f64) -> ComplexField {
        self.profile.scale(Complex64::from_polar(1.0, -t))
    }
}

pub fn standing_wave_potential(gp: &GroundPair) -> StandingWave {
    StandingWave { mu: gp.mu, potential: gp.w.scale_real(-gp.mu), profile: gp.f.clone() }
}

/// Ground state of the default weight on `grid`, turned into a standing wave.
pub fn default_standing_wave(grid: Grid) -> Result<StandingWave> {
    let gp = ground_pair(&default_weight(grid), &GroundStateOptions::default())?;
    Ok(standing_wave_potential(&gp))
}
