//! Time integrators for `i u_t - Δu + V(t, x) u = F`.
//!
//! * [`split_step_evolve`]: Strang splitting with a midpoint source term.
//! * [`duhamel_iterate`]: fixed-point iteration of the Duhamel map
//!   `Φ(v)(t) = e^{itΔ}u0 - i ∫_0^t e^{i(t-s)Δ} [F - V v](s) ds`
//!   with the trapezoid rule in `s`.
//! * [`frozen_duhamel`]: the same iteration around the propagator of the
//!   potential frozen at the start of the piece.
//! * [`solve_global`]: partition into small-norm pieces and chain.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exponents::{is_admissible, rat_f64, ExtExponent};
use crate::potentials::{partition_interval, Modulation, Piece, PotentialSpec, Side};
use crate::spectral::{
    free_multiplier, lq_norm_f64, ComplexField, DomainGuard, FourierMultiplier, Grid, Trajectory,
};

/// Source term `m(t) F(x)`; a missing modulation means `m = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Source {
    pub profile: ComplexField,
    pub modulation: Option<Modulation>,
}

impl Source {
    pub fn constant(profile: ComplexField) -> Self {
        Self { profile, modulation: None }
    }

    fn factor(&self, t: f64) -> f64 {
        self.modulation.as_ref().map_or(1.0, |m| m.value(t, Side::Right))
    }

    fn at(&self, t: f64) -> Vec<Complex64> {
        let c = self.factor(t);
        self.profile.values().iter().map(|v| v * c).collect()
    }
}

/// `(p, q)` with the value of `||u||_{L^p(I) L^q} / ||u0||_2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StrichartzRatio {
    pub p: ExtExponent,
    pub q: ExtExponent,
    pub value: f64,
}

fn check_pair(p: ExtExponent, q: ExtExponent, n: usize) -> Result<()> {
    let ok = if n >= 2 {
        is_admissible(p, q, n)?
    } else {
        let two = ExtExponent::int(2);
        p >= two && q >= two && p.recip() + q.recip() / 2 == crate::exponents::Rational::new(1, 4)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InadmissiblePair { p: p.to_string(), q: q.to_string(), n })
    }
}

/// Running trapezoid estimate of `||u||_{L^p L^q}` for several pairs.
#[derive(Clone, Debug)]
struct NormAccumulator {
    pairs: Vec<(ExtExponent, ExtExponent)>,
    acc: Vec<f64>,
    prev: Option<(f64, Vec<f64>)>,
}

impl NormAccumulator {
    fn new(pairs: &[(ExtExponent, ExtExponent)]) -> Self {
        Self { pairs: pairs.to_vec(), acc: vec![0.0; pairs.len()], prev: None }
    }

    fn push(&mut self, t: f64, values: &[Complex64], cell: f64) {
        let cur: Vec<f64> = self
            .pairs
            .iter()
            .map(|(p, q)| {
                let nq = lq_norm_f64(values, q.to_f64(), cell);
                match p.finite() {
                    Some(p) => nq.powf(rat_f64(p)),
                    None => nq,
                }
            })
            .collect();
        for (i, (p, _)) in self.pairs.iter().enumerate() {
            match (p.is_finite(), &self.prev) {
                (false, _) => self.acc[i] = self.acc[i].max(cur[i]),
                (true, Some((t0, prev))) => self.acc[i] += 0.5 * (t - t0) * (prev[i] + cur[i]),
                (true, None) => {}
            }
        }
        self.prev = Some((t, cur));
    }

    fn finish(&self, mass: f64) -> Vec<StrichartzRatio> {
        self.pairs
            .iter()
            .zip(&self.acc)
            .map(|(&(p, q), &a)| {
                let norm = match p.finite() {
                    Some(p) => a.powf(1.0 / rat_f64(p)),
                    None => a,
                };
                StrichartzRatio { p, q, value: if mass > 0.0 { norm / mass } else { 0.0 } }
            })
            .collect()
    }
}

/// `||u||_{L^p(I) L^q}` of a sampled trajectory (trapezoid in time).
pub fn trajectory_norm(traj: &Trajectory, p: ExtExponent, q: ExtExponent) -> f64 {
    let mut acc = NormAccumulator::new(&[(p, q)]);
    for (t, s) in traj.times.iter().zip(&traj.states) {
        acc.push(*t, s.values(), s.grid().cell_volume());
    }
    acc.finish(1.0)[0].value
}

fn serialize_trajectory<S: Serializer>(traj: &Trajectory, s: S) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Samples<'a> {
        times: &'a [f64],
        l2_norms: &'a [f64],
    }
    Samples { times: &traj.times, l2_norms: &traj.energy_log }.serialize(s)
}

/// Result of an evolution; the serialized form omits the field samples.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SolveReport {
    #[serde(serialize_with = "serialize_trajectory")]
    pub trajectory: Trajectory,
    pub energy_drift: f64,
    pub contraction_factors: Vec<Vec<f64>>,
    pub partition: Vec<Piece>,
    pub iterations: Vec<usize>,
    pub strichartz_ratios: Vec<StrichartzRatio>,
    pub tau: Option<f64>,
    pub c_hat: Option<f64>,
    /// `k (1 + 2 Ĉ)^k` for a partition into `k` pieces.
    pub constant_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    pub dt: f64,
    /// Store every this many steps (the final state is always stored).
    pub record_every: usize,
    pub pairs: Vec<(ExtExponent, ExtExponent)>,
    /// Checked on every stored state when present.
    pub guard: Option<DomainGuard>,
}

impl EvolveOptions {
    pub fn new(dt: f64) -> Self {
        Self { dt, record_every: 1, pairs: Vec::new(), guard: None }
    }
}

fn check_interval(interval: (f64, f64), dt: f64) -> Result<usize> {
    let (a, b) = interval;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::pre(format!("dt = {dt} must be positive")));
    }
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::pre(format!("bad interval [{a}, {b}]")));
    }
    Ok(((b - a) / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize)
}

/// Phase factors `exp(i V(t) c)` cached while the potential does not change.
struct PhaseCache<'a> {
    v: &'a PotentialSpec,
    grid: Grid,
    scale: f64,
    key: Option<u64>,
    phase: Option<Arc<Vec<Complex64>>>,
    zero: bool,
}

impl<'a> PhaseCache<'a> {
    fn new(v: &'a PotentialSpec, grid: Grid, scale: f64) -> Self {
        Self { v, grid, scale, key: None, phase: None, zero: v.is_zero() }
    }

    fn get(&mut self, t: f64) -> Result<Option<Arc<Vec<Complex64>>>> {
        if self.zero {
            return Ok(None);
        }
        let key = self.v.segment(t);
        if key.is_some() && key == self.key {
            return Ok(self.phase.clone());
        }
        let vals = self.v.evaluate(t, &self.grid)?;
        let phase: Vec<Complex64> =
            vals.values().iter().map(|x| Complex64::from_polar(1.0, x.re * self.scale)).collect();
        let phase = Arc::new(phase);
        self.key = key;
        self.phase = Some(phase.clone());
        Ok(Some(phase))
    }
}

fn apply_phase(data: &mut [Complex64], phase: &Option<Arc<Vec<Complex64>>>) {
    if let Some(ph) = phase {
        data.iter_mut().zip(ph.iter()).for_each(|(v, p)| *v *= p);
    }
}

/// Strang splitting: half potential phase, exact free step, half phase.
/// A source is added by the midpoint rule through a half step.
pub fn split_step_evolve(
    u0: &ComplexField,
    v: &PotentialSpec,
    f: Option<&Source>,
    interval: (f64, f64),
    opts: &EvolveOptions,
) -> Result<SolveReport> {
    let steps = check_interval(interval, opts.dt)?;
    let grid = *u0.grid();
    for &(p, q) in &opts.pairs {
        check_pair(p, q, grid.dim())?;
    }
    if let Some(src) = f {
        if src.profile.grid() != &grid {
            return Err(Error::pre("source and initial datum live on different grids"));
        }
    }
    let (a, b) = interval;
    let h = (b - a) / steps as f64;
    let full = free_multiplier(&grid, h);
    let half = f.map(|_| free_multiplier(&grid, h / 2.0));
    let mut half_phase = PhaseCache::new(v, grid, h / 2.0);
    let mut quarter_phase = PhaseCache::new(v, grid, h / 4.0);
    let cell = grid.cell_volume();
    let mut acc = NormAccumulator::new(&opts.pairs);
    let mass0 = u0.l2_norm();
    let mut drift = 0.0f64;
    let mut traj = Trajectory::default();
    let mut u = u0.values().to_vec();
    acc.push(a, &u, cell);
    traj.push(a, u0.clone());
    let every = opts.record_every.max(1);
    for j in 0..steps {
        let t = a + j as f64 * h;
        let tm = t + 0.5 * h;
        let ph = half_phase.get(tm)?;
        apply_phase(&mut u, &ph);
        full.apply_in_place(&mut u);
        apply_phase(&mut u, &ph);
        if let (Some(src), Some(half)) = (f, &half) {
            let mut g = src.at(tm);
            let q = quarter_phase.get(tm)?;
            apply_phase(&mut g, &q);
            half.apply_in_place(&mut g);
            apply_phase(&mut g, &q);
            let c = Complex64::new(0.0, -h);
            u.iter_mut().zip(&g).for_each(|(x, y)| *x += c * y);
        }
        let t1 = if j + 1 == steps { b } else { a + (j + 1) as f64 * h };
        acc.push(t1, &u, cell);
        let m = lq_norm_f64(&u, 2.0, cell);
        if mass0 > 0.0 {
            drift = drift.max((m - mass0).abs() / mass0);
        }
        if (j + 1) % every == 0 || j + 1 == steps {
            let state = ComplexField::new(grid, u.clone())?;
            if let Some(guard) = &opts.guard {
                guard.check(&state)?;
            }
            traj.push(t1, state);
        }
    }
    Ok(SolveReport {
        trajectory: traj,
        energy_drift: drift,
        strichartz_ratios: acc.finish(mass0),
        ..Default::default()
    })
}

/// Tuning of the Duhamel iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct DuhamelOptions {
    pub dt: f64,
    /// Stop once an increment falls below `tol` times the first one.
    pub tol: f64,
    pub max_iter: usize,
    /// Spatial exponent of the second Z-norm slot when `n = 2`.
    pub z_exponent_2d: f64,
}

impl Default for DuhamelOptions {
    fn default() -> Self {
        Self { dt: 1e-3, tol: 1e-10, max_iter: 200, z_exponent_2d: 8.0 }
    }
}

/// Discrete Z-norm of a sampled trajectory:
/// `max(L^inf L^2, L^2 L^{2n/(n-2)})`, with `L^2 L^Q` for `n = 2` and
/// `L^4 L^inf` for `n = 1`.
pub fn z_norm(times: &[f64], states: &[Vec<Complex64>], grid: &Grid, q2d: f64) -> f64 {
    let cell = grid.cell_volume();
    let n = grid.dim();
    let (p, q) = match n {
        1 => (4.0, f64::INFINITY),
        2 => (2.0, q2d),
        _ => (2.0, 2.0 * n as f64 / (n as f64 - 2.0)),
    };
    let mut sup = 0.0f64;
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (t, s) in times.iter().zip(states) {
        sup = sup.max(lq_norm_f64(s, 2.0, cell));
        let cur = lq_norm_f64(s, q, cell).powf(p);
        if let Some((t0, c0)) = prev {
            integral += 0.5 * (t - t0) * (c0 + cur);
        }
        prev = Some((*t, cur));
    }
    sup.max(integral.powf(1.0 / p))
}

/// Outcome of a Duhamel iteration on one piece.
#[derive(Clone, Debug)]
pub struct DuhamelOutcome {
    pub trajectory: Trajectory,
    /// `||v^{m+1} - v^m||_Z / ||v^m - v^{m-1}||_Z`.
    pub factors: Vec<f64>,
    pub increments: Vec<f64>,
    pub iterations: usize,
    /// `||Φ(v) - v||_Z / ||v||_Z` at the returned fixed point.
    pub residual: f64,
}

/// Inner propagator of the Duhamel map over one step.
enum Inner {
    Free(FourierMultiplier),
    Frozen { free: FourierMultiplier, half_phase: Vec<Complex64> },
}

impl Inner {
    fn step(&self, data: &mut [Complex64]) {
        match self {
            Inner::Free(m) => m.apply_in_place(data),
            Inner::Frozen { free, half_phase } => {
                data.iter_mut().zip(half_phase).for_each(|(v, p)| *v *= p);
                free.apply_in_place(data);
                data.iter_mut().zip(half_phase).for_each(|(v, p)| *v *= p);
            }
        }
    }
}

struct DuhamelProblem {
    grid: Grid,
    times: Vec<f64>,
    h: f64,
    inner: Inner,
    /// Perturbing potential at each sample; `None` where it vanishes.
    pert: Vec<Option<Arc<Vec<f64>>>>,
    source: Option<Vec<Vec<Complex64>>>,
    u0: Vec<Complex64>,
    q2d: f64,
}

impl DuhamelProblem {
    fn g(&self, j: usize, v: &[Complex64]) -> Vec<Complex64> {
        let mi = Complex64::new(0.0, -1.0);
        let mut g = match &self.source {
            Some(src) => src[j].iter().map(|x| mi * x).collect(),
            None => vec![Complex64::new(0.0, 0.0); v.len()],
        };
        if let Some(w) = &self.pert[j] {
            g.iter_mut().zip(w.iter()).zip(v).for_each(|((gi, wi), vi)| *gi += Complex64::new(0.0, *wi) * vi);
        }
        g
    }

    /// Free part `P(t_j) u0` at every sample.
    fn base(&self) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(self.times.len());
        let mut cur = self.u0.clone();
        out.push(cur.clone());
        for _ in 1..self.times.len() {
            self.inner.step(&mut cur);
            out.push(cur.clone());
        }
        out
    }

    /// `Φ(v)` by the trapezoid recursion
    /// `Φ_j = P(h) [Φ_{j-1} + (h/2) G_{j-1}] + (h/2) G_j`.
    fn phi(&self, v: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let hh = 0.5 * self.h;
        let mut out = Vec::with_capacity(v.len());
        out.push(self.u0.clone());
        let mut g_prev = self.g(0, &v[0]);
        for j in 1..v.len() {
            let mut cur: Vec<Complex64> =
                out[j - 1].iter().zip(&g_prev).map(|(a, b)| a + b * hh).collect();
            self.inner.step(&mut cur);
            let g = self.g(j, &v[j]);
            cur.iter_mut().zip(&g).for_each(|(a, b)| *a += b * hh);
            out.push(cur);
            g_prev = g;
        }
        out
    }

    fn z(&self, v: &[Vec<Complex64>]) -> f64 {
        z_norm(&self.times, v, &self.grid, self.q2d)
    }

    fn diff(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect()
    }

    fn iterate(&self, tol: f64, max_iter: usize) -> Result<DuhamelOutcome> {
        if !(tol > 0.0) {
            return Err(Error::pre("tol must be positive"));
        }
        let mut v = self.base();
        let floor = 1e-13 * self.z(&v).max(f64::MIN_POSITIVE);
        let mut increments = Vec::new();
        let mut factors = Vec::new();
        let mut iterations = 0;
        for m in 1..=max_iter.max(1) {
            let next = self.phi(&v);
            let d = self.z(&Self::diff(&next, &v));
            v = next;
            increments.push(d);
            if m == 1 {
                if d <= floor {
                    iterations = 1;
                    break;
                }
                continue;
            }
            let prev = increments[m - 2];
            if prev > floor {
                factors.push(d / prev);
            }
            if d <= tol * increments[0] || d <= floor {
                iterations = m - 1;
                break;
            }
            if d > 1e8 * increments[0] || m == max_iter {
                let last_factor = factors.last().copied().unwrap_or(f64::NAN);
                return Err(Error::NonContraction { iterations: m, last_factor });
            }
        }
        if iterations == 0 {
            let last_factor = factors.last().copied().unwrap_or(f64::NAN);
            return Err(Error::NonContraction { iterations: max_iter, last_factor });
        }
        let check = self.phi(&v);
        let zv = self.z(&v);
        let residual =
            if zv > 0.0 { self.z(&Self::diff(&check, &v)) / zv } else { 0.0 };
        let mut trajectory = Trajectory::default();
        for (t, s) in self.times.iter().zip(v) {
            trajectory.push(*t, ComplexField::new(self.grid, s)?);
        }
        Ok(DuhamelOutcome { trajectory, factors, increments, iterations, residual })
    }
}

fn sample_times(interval: (f64, f64), dt: f64) -> Result<(Vec<f64>, f64)> {
    let m = check_interval(interval, dt)?;
    let (a, b) = interval;
    let h = (b - a) / m as f64;
    let times = (0..=m).map(|j| if j == m { b } else { a + j as f64 * h }).collect();
    Ok((times, h))
}

fn sample_potential(
    v: &PotentialSpec,
    times: &[f64],
    grid: &Grid,
    subtract: Option<&[f64]>,
) -> Result<Vec<Option<Arc<Vec<f64>>>>> {
    if v.is_zero() {
        return Ok(vec![None; times.len()]);
    }
    let mut out = Vec::with_capacity(times.len());
    let mut last: Option<(u64, Option<Arc<Vec<f64>>>)> = None;
    for (j, &t) in times.iter().enumerate() {
        // the endpoint sample sees the potential from the left
        let side = if j + 1 == times.len() && j > 0 { Side::Left } else { Side::Right };
        let key = if side == Side::Right { v.segment(t) } else { None };
        if let (Some(k), Some((lk, val))) = (key, &last) {
            if k == *lk {
                out.push(val.clone());
                continue;
            }
        }
        let mut vals: Vec<f64> = v.evaluate_side(t, grid, side)?.values().iter().map(|z| z.re).collect();
        if let Some(sub) = subtract {
            vals.iter_mut().zip(sub).for_each(|(a, b)| *a -= b);
        }
        let entry = if vals.iter().all(|x| *x == 0.0) { None } else { Some(Arc::new(vals)) };
        if let Some(k) = key {
            last = Some((k, entry.clone()));
        }
        out.push(entry);
    }
    Ok(out)
}

fn sample_source(f: Option<&Source>, times: &[f64], grid: &Grid) -> Result<Option<Vec<Vec<Complex64>>>> {
    match f {
        None => Ok(None),
        Some(src) => {
            if src.profile.grid() != grid {
                return Err(Error::pre("source and initial datum live on different grids"));
            }
            Ok(Some(times.iter().map(|&t| src.at(t)).collect()))
        }
    }
}

/// Fixed-point iteration of the Duhamel map around the free group, started
/// from `e^{itΔ} u0`.
pub fn duhamel_iterate(
    u0: &ComplexField,
    f: Option<&Source>,
    v: &PotentialSpec,
    piece: (f64, f64),
    opts: &DuhamelOptions,
) -> Result<DuhamelOutcome> {
    let grid = *u0.grid();
    let (times, h) = sample_times(piece, opts.dt)?;
    let problem = DuhamelProblem {
        grid,
        pert: sample_potential(v, &times, &grid, None)?,
        source: sample_source(f, &times, &grid)?,
        inner: Inner::Free(free_multiplier(&grid, h)),
        times,
        h,
        u0: u0.values().to_vec(),
        q2d: opts.z_exponent_2d,
    };
    problem.iterate(opts.tol, opts.max_iter)
}

/// Duhamel iteration around `e^{itH}` with `H` carrying `V(t0)`; only
/// `W = V - V(t0)` enters the fixed-point map.
pub fn frozen_duhamel(
    u0: &ComplexField,
    f: Option<&Source>,
    v: &PotentialSpec,
    piece: (f64, f64),
    opts: &DuhamelOptions,
) -> Result<DuhamelOutcome> {
    let grid = *u0.grid();
    let (times, h) = sample_times(piece, opts.dt)?;
    let v0: Vec<f64> = v.evaluate(piece.0, &grid)?.values().iter().map(|z| z.re).collect();
    let half_phase = v0.iter().map(|x| Complex64::from_polar(1.0, x * h / 2.0)).collect();
    let problem = DuhamelProblem {
        grid,
        pert: sample_potential(v, &times, &grid, Some(&v0))?,
        source: sample_source(f, &times, &grid)?,
        inner: Inner::Frozen { free: free_multiplier(&grid, h), half_phase },
        times,
        h,
        u0: u0.values().to_vec(),
        q2d: opts.z_exponent_2d,
    };
    problem.iterate(opts.tol, opts.max_iter)
}

/// `Ĉ = max(1, 1/(2 tau))`, the stand-in for the Strichartz constant.
pub fn c_hat(tau: f64) -> f64 {
    (0.5 / tau).max(1.0)
}

/// Partition with `tau`, then run [`duhamel_iterate`] piece by piece.
#[allow(clippy::too_many_arguments)]
pub fn solve_global(
    u0: &ComplexField,
    f: Option<&Source>,
    v: &PotentialSpec,
    interval: (f64, f64),
    r: ExtExponent,
    s: ExtExponent,
    tau: f64,
    opts: &DuhamelOptions,
    pairs: &[(ExtExponent, ExtExponent)],
) -> Result<SolveReport> {
    let grid = *u0.grid();
    for &(p, q) in pairs {
        check_pair(p, q, grid.dim())?;
    }
    let pieces = partition_interval(v, r, s, interval, tau, opts.dt, &grid)?;
    let mut traj = Trajectory::default();
    let mut factors = Vec::with_capacity(pieces.len());
    let mut iterations = Vec::with_capacity(pieces.len());
    let mut state = u0.clone();
    for piece in &pieces {
        let out = duhamel_iterate(&state, f, v, (piece.start, piece.end), opts)?;
        state = out.trajectory.last().expect("nonempty piece").clone();
        factors.push(out.factors);
        iterations.push(out.iterations);
        if traj.is_empty() {
            traj = out.trajectory;
        } else {
            traj.extend_chained(out.trajectory);
        }
    }
    let mut acc = NormAccumulator::new(pairs);
    for (t, st) in traj.times.iter().zip(&traj.states) {
        acc.push(*t, st.values(), grid.cell_volume());
    }
    let k = pieces.len() as f64;
    let ch = c_hat(tau);
    Ok(SolveReport {
        energy_drift: traj.energy_drift(),
        strichartz_ratios: acc.finish(u0.l2_norm()),
        trajectory: traj,
        contraction_factors: factors,
        partition: pieces,
        iterations,
        tau: Some(tau),
        c_hat: Some(ch),
        constant_bound: Some(k * (1.0 + 2.0 * ch).powf(k)),
    })
}

/// A reference problem for [`calibrate_tau`].
#[derive(Clone, Debug)]
pub struct CalibrationCase {
    pub potential: PotentialSpec,
    pub u0: ComplexField,
    pub interval: (f64, f64),
    pub r: ExtExponent,
    pub s: ExtExponent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct CalibrationOptions {
    /// Largest tau considered; returned when every candidate passes.
    pub cap: f64,
    /// Acceptable contraction factor.
    pub target: f64,
    pub bisection_steps: usize,
    pub max_halvings: usize,
    pub duhamel: DuhamelOptions,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            cap: 64.0,
            target: 0.5,
            bisection_steps: 10,
            max_halvings: 30,
            duhamel: DuhamelOptions { dt: 1e-2, tol: 1e-8, max_iter: 100, z_exponent_2d: 8.0 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub tau: f64,
    pub c_hat: f64,
    /// Every `(tau, passed)` evaluated, in order.
    pub trials: Vec<(f64, bool)>,
}

/// Largest contraction factor over all pieces of a chained solve, or `None`
/// when a piece fails to converge or the partition is impossible.
fn worst_factor(case: &CalibrationCase, tau: f64, opts: &DuhamelOptions) -> Option<f64> {
    let grid = *case.u0.grid();
    let pieces =
        partition_interval(&case.potential, case.r, case.s, case.interval, tau, opts.dt, &grid).ok()?;
    let mut state = case.u0.clone();
    let mut worst = 0.0f64;
    for piece in pieces {
        let out = duhamel_iterate(&state, None, &case.potential, (piece.start, piece.end), opts).ok()?;
        worst = out.factors.iter().cloned().fold(worst, f64::max);
        state = out.trajectory.last()?.clone();
    }
    Some(worst)
}

/// Largest tau on a log-bisection grid for which every reference case
/// contracts with factor at most `target`.
pub fn calibrate_tau(cases: &[CalibrationCase], opts: &CalibrationOptions) -> Result<Calibration> {
    if cases.is_empty() {
        return Err(Error::pre("calibration needs at least one reference case"));
    }
    if !(opts.cap > 0.0 && opts.target > 0.0 && opts.target < 1.0) {
        return Err(Error::pre("calibration cap and target must be positive, target below 1"));
    }
    let passes = |tau: f64| -> bool {
        cases
            .par_iter()
            .all(|c| worst_factor(c, tau, &opts.duhamel).is_some_and(|w| w <= opts.target))
    };
    let mut trials = Vec::new();
    let mut hi = opts.cap;
    let ok = passes(hi);
    trials.push((hi, ok));
    if ok {
        return Ok(Calibration { tau: hi, c_hat: c_hat(hi), trials });
    }
    let mut lo = None;
    for _ in 0..opts.max_halvings {
        let t = hi / 2.0;
        let ok = passes(t);
        trials.push((t, ok));
        if ok {
            lo = Some(t);
            break;
        }
        hi = t;
    }
    let Some(mut lo) = lo else {
        return Err(Error::Calibration(format!(
            "no tau down to {hi:.3e} gives contraction factors <= {}",
            opts.target
        )));
    };
    for _ in 0..opts.bisection_steps {
        let mid = (lo * hi).sqrt();
        let ok = passes(mid);
        trials.push((mid, ok));
        if ok {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Calibration { tau: lo, c_hat: c_hat(lo), trials })
}

/// Relative `L^inf L^2` distance between two trajectories sampled at the
/// same times.
pub fn relative_sup_l2_gap(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::pre(format!("trajectories have {} and {} samples", a.len(), b.len())));
    }
    let mut gap = 0.0f64;
    let mut scale = 0.0f64;
    for ((ta, sa), (tb, sb)) in a.times.iter().zip(&a.states).zip(b.times.iter().zip(&b.states)) {
        if (ta - tb).abs() > 1e-9 * ta.abs().max(1.0) {
            return Err(Error::pre(format!("sample times differ: {ta} vs {tb}")));
        }
        gap = gap.max(sa.sub(sb).l2_norm());
        scale = scale.max(sa.l2_norm());
    }
    Ok(if scale > 0.0 { gap / scale } else { gap })
}
